//! Checks a bandwidth schedule `h_N` against the three conditions of the KDE
//! consistency theorem on a space of dimension `p`:
//!
//! 1. `N h_N^p / |log h_N| → ∞`
//! 2. `|log h_N| / log log N → ∞`
//! 3. `h_N^p ≤ č h_{2N}^p` for some constant `č`.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthSchedule {
    /// `h_N = scale · N^(−rate) · (ln N)^(−log_power)`. Covers `N^(−β)`
    /// (`log_power = 0`) and `1 / log N` (`rate = 0`, `log_power = 1`).
    Power { scale: f64, rate: f64, log_power: f64, dim: usize },
    /// Tabulated `(N, h)` pairs.
    Explicit { values: Vec<(u64, f64)>, dim: usize },
}

impl BandwidthSchedule {
    /// `h_N = N^(−beta)`.
    pub fn power(beta: f64, dim: usize) -> Self {
        BandwidthSchedule::Power { scale: 1.0, rate: beta, log_power: 0.0, dim }
    }

    /// `h_N = 1 / ln N`.
    pub fn inverse_log(dim: usize) -> Self {
        BandwidthSchedule::Power { scale: 1.0, rate: 0.0, log_power: 1.0, dim }
    }

    pub fn bandwidth(&self, n: u64) -> Option<f64> {
        match self {
            BandwidthSchedule::Power { scale, rate, log_power, .. } => {
                let n = n as f64;
                Some(scale * n.powf(-rate) * n.ln().powf(-log_power))
            }
            BandwidthSchedule::Explicit { values, .. } => values.iter().find(|v| v.0 == n).map(|v| v.1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: u8,
    pub verdict: Verdict,
    /// True when the verdict comes from finite-range trends rather than a limit.
    pub heuristic: bool,
    pub certificate: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthReport {
    pub conditions: Vec<ConditionReport>,
}

impl BandwidthReport {
    pub fn all_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.verdict == Verdict::Holds)
    }

    pub fn verdict(&self, condition: u8) -> Verdict {
        self.conditions.iter().find(|c| c.condition == condition).map_or(Verdict::Inconclusive, |c| c.verdict)
    }
}

/// Analytic verdicts for power schedules; trend diagnostics over `n_range`
/// for explicit schedules.
pub fn check_bandwidth_schedule(s: &BandwidthSchedule, n_range: &[u64]) -> BandwidthReport {
    match s {
        BandwidthSchedule::Power { rate, log_power, dim, .. } => analytic(*rate, *log_power, *dim as f64),
        BandwidthSchedule::Explicit { values, dim } => empirical(values, *dim as f64, n_range),
    }
}

fn analytic(a: f64, b: f64, p: f64) -> BandwidthReport {
    let report = |condition, holds: bool, certificate: String| ConditionReport {
        condition,
        verdict: if holds { Verdict::Holds } else { Verdict::Fails },
        heuristic: false,
        certificate,
    };
    // N h^p / |log h| ~ N^(1 - ap) (ln N)^(-bp - q) with q = 1 when a != 0
    let growth = 1.0 - a * p;
    let q = if a != 0.0 { 1.0 } else { 0.0 };
    let log_growth = -b * p - q;
    let c1 = if growth != 0.0 {
        report(1, growth > 0.0, format!("N h^p / |log h| grows like N^{growth} up to log factors (1 - a p = {growth})"))
    } else {
        report(1, log_growth > 0.0, format!("a p = 1, so N h^p / |log h| behaves like (log N)^{log_growth}"))
    };
    let c2 = if a != 0.0 {
        report(2, true, format!("|log h| ~ {} log N, which dominates log log N", a.abs()))
    } else {
        report(2, false, format!("|log h| / log log N tends to {}, a finite limit", b.abs()))
    };
    let check = 2f64.powf(a * p) * 2f64.powf(b * p).max(1.0);
    let c3 = report(3, true, format!("h_N^p / h_2N^p <= 2^(a p) max(1, 2^(b p)) = {check} for all N >= 2"));
    BandwidthReport { conditions: vec![c1, c2, c3] }
}

fn increasing(v: &[f64]) -> bool {
    v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0])
}

fn empirical(values: &[(u64, f64)], p: f64, n_range: &[u64]) -> BandwidthReport {
    let lookup = |n: u64| values.iter().find(|v| v.0 == n).map(|v| v.1);
    let pts: Vec<(f64, f64)> =
        n_range.iter().filter(|&&n| n >= 3).filter_map(|&n| lookup(n).map(|h| (n as f64, h))).collect();
    let q1: Vec<f64> = pts.iter().map(|&(n, h)| n * h.powf(p) / h.ln().abs()).collect();
    let q2: Vec<f64> = pts.iter().map(|&(n, h)| h.ln().abs() / n.ln().ln()).collect();
    let ratios: Vec<f64> = n_range.iter().filter_map(|&n| Some((lookup(n)? / lookup(2 * n)?).powf(p))).collect();
    let trend = |condition, q: &[f64], what: &str| ConditionReport {
        condition,
        verdict: if q.len() < 2 {
            Verdict::Inconclusive
        } else if increasing(q) {
            Verdict::Holds
        } else {
            Verdict::Fails
        },
        heuristic: true,
        certificate: format!("{what} over the tabulated range: {q:?}"),
    };
    let worst = ratios.iter().copied().fold(f64::NAN, f64::max);
    let c3 = ConditionReport {
        condition: 3,
        verdict: if ratios.is_empty() { Verdict::Inconclusive } else { Verdict::Holds },
        heuristic: true,
        certificate: format!("largest h_N^p / h_2N^p over tabulated doublings: {worst}"),
    };
    BandwidthReport { conditions: vec![trend(1, &q1, "N h^p / |log h|"), trend(2, &q2, "|log h| / log log N"), c3] }
}

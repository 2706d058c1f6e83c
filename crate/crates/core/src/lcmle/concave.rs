use serde::{Deserialize, Serialize};

use crate::complex::{OrthantComplex, Point};
use crate::density::Density;
use crate::error::{Error, Result};

/// One leg of a [`SpiderConcaveFn`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiderLeg {
    /// `(coordinate, value)` with strictly increasing positive coordinates.
    pub knots: Vec<(f64, f64)>,
    /// Slope continuing past the last knot (or past the origin when there are
    /// no knots). `None` ends the domain at the last knot.
    pub final_slope: Option<f64>,
}

impl SpiderLeg {
    pub fn empty() -> Self {
        SpiderLeg { knots: Vec::new(), final_slope: None }
    }

    fn reaches_beyond_origin(&self) -> bool {
        !self.knots.is_empty() || self.final_slope.is_some()
    }
}

/// A concave, piecewise-linear, coercive function on a spider, `−∞` outside
/// its domain. When `origin_value` is `−∞` the domain is a closed interval of
/// a single leg.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpiderConcaveFn {
    origin_value: f64,
    legs: Vec<SpiderLeg>,
}

const SLOPE_TOL: f64 = 1e-9;

fn slope_le(a: f64, b: f64) -> bool {
    a <= b + SLOPE_TOL * a.abs().max(b.abs()).max(1.0)
}

impl SpiderConcaveFn {
    pub fn new(origin_value: f64, legs: Vec<SpiderLeg>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidConcaveFn(m));
        if origin_value.is_nan() || origin_value == f64::INFINITY {
            return bad(format!("origin value {origin_value}"));
        }
        let origin_finite = origin_value.is_finite();
        for (l, leg) in legs.iter().enumerate() {
            let mut prev = 0.0;
            for &(u, v) in &leg.knots {
                if !(u > prev) || !u.is_finite() || !v.is_finite() {
                    return bad(format!("leg {l}: knots must have increasing positive coordinates and finite values"));
                }
                prev = u;
            }
            if let Some(s) = leg.final_slope {
                if !(s < 0.0) || !s.is_finite() {
                    return bad(format!("leg {l}: final slope {s} is not negative, so the function is not coercive"));
                }
                if leg.knots.is_empty() && !origin_finite {
                    return bad(format!("leg {l}: slope without a starting value"));
                }
            }
            let slopes = leg_slopes(origin_value, leg);
            if slopes.windows(2).any(|w| !slope_le(w[1], w[0])) {
                return bad(format!("leg {l}: slopes increase, so the function is not concave"));
            }
        }
        if origin_finite {
            let initial: Vec<f64> =
                legs.iter().filter_map(|leg| leg_slopes(origin_value, leg).first().copied()).collect();
            for i in 0..initial.len() {
                for j in i + 1..initial.len() {
                    if !slope_le(initial[i] + initial[j], 0.0) {
                        return bad(
                            "initial slopes of two legs sum to a positive number; not concave through the origin"
                                .into(),
                        );
                    }
                }
            }
        } else {
            let occupied = legs.iter().filter(|l| l.reaches_beyond_origin()).count();
            if occupied != 1 {
                return bad("a function that is -inf at the origin must live on exactly one leg".into());
            }
        }
        Ok(SpiderConcaveFn { origin_value, legs })
    }

    pub fn origin_value(&self) -> f64 {
        self.origin_value
    }

    pub fn legs(&self) -> &[SpiderLeg] {
        &self.legs
    }

    pub fn num_legs(&self) -> usize {
        self.legs.len()
    }

    /// Start of the domain on `leg`: the origin, or the first knot when the
    /// function is `−∞` at the origin. `None` if the leg is outside the domain.
    pub fn domain_start(&self, leg: usize) -> Option<f64> {
        let l = &self.legs[leg];
        if self.origin_value.is_finite() {
            Some(0.0)
        } else {
            l.knots.first().map(|k| k.0)
        }
    }

    /// End of the domain on `leg`; `Some(f64::INFINITY)` when the leg has a
    /// final slope and `None` if the leg is outside the domain.
    pub fn domain_end(&self, leg: usize) -> Option<f64> {
        let l = &self.legs[leg];
        if l.final_slope.is_some() {
            Some(f64::INFINITY)
        } else if let Some(k) = l.knots.last() {
            Some(k.0)
        } else if self.origin_value.is_finite() {
            Some(0.0)
        } else {
            None
        }
    }

    /// `ψ` at coordinate `u ≥ 0` of `leg`.
    pub fn value(&self, leg: usize, u: f64) -> f64 {
        if u <= 0.0 {
            return self.origin_value;
        }
        let l = &self.legs[leg];
        let mut prev = if self.origin_value.is_finite() {
            (0.0, self.origin_value)
        } else {
            match l.knots.first() {
                Some(&(u0, v0)) if u >= u0 => (u0, v0),
                _ => return f64::NEG_INFINITY,
            }
        };
        for &(uk, vk) in &l.knots {
            if u <= uk {
                if uk == prev.0 {
                    return vk;
                }
                return prev.1 + (vk - prev.1) * (u - prev.0) / (uk - prev.0);
            }
            prev = (uk, vk);
        }
        match l.final_slope {
            Some(s) => prev.1 + s * (u - prev.0),
            None => f64::NEG_INFINITY,
        }
    }

    /// `ψ(x)` for a point of a spider.
    pub fn value_at(&self, x: &Point) -> f64 {
        match x.leg() {
            None => self.origin_value,
            Some((leg, u)) if leg < self.legs.len() => self.value(leg, u),
            Some(_) => f64::NEG_INFINITY,
        }
    }

    /// `e^ψ(x)`, zero outside the domain.
    pub fn evaluate(&self, x: &Point) -> f64 {
        self.value_at(x).exp()
    }

    /// `∫ e^ψ dν` in closed form, piece by piece.
    pub fn integrate_exp(&self) -> Result<f64> {
        let mut total = 0.0;
        for leg in &self.legs {
            let mut prev = if self.origin_value.is_finite() { Some((0.0, self.origin_value)) } else { None };
            for &(u, v) in &leg.knots {
                if let Some((u0, v0)) = prev {
                    total += seg_moments(v0, v, u - u0).j;
                }
                prev = Some((u, v));
            }
            if let (Some(s), Some((_, v))) = (leg.final_slope, prev) {
                if s >= 0.0 {
                    return Err(Error::InvalidConcaveFn("nonnegative final slope on an infinite leg".into()));
                }
                total += v.exp() / -s;
            }
        }
        Ok(total)
    }

    /// Largest finite coordinate of the domain (last knot over all legs).
    pub fn knot_radius(&self) -> f64 {
        self.legs.iter().filter_map(|l| l.knots.last().map(|k| k.0)).fold(0.0, f64::max)
    }
}

fn leg_slopes(origin_value: f64, leg: &SpiderLeg) -> Vec<f64> {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(leg.knots.len() + 1);
    if origin_value.is_finite() {
        pts.push((0.0, origin_value));
    }
    pts.extend(leg.knots.iter().copied());
    let mut slopes: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    if let Some(s) = leg.final_slope {
        slopes.push(s);
    }
    slopes
}

/// A fitted log-concave density `e^ψ` on a spider.
#[derive(Debug, Clone)]
pub struct FittedDensity<'a> {
    pub complex: &'a OrthantComplex,
    pub psi: &'a SpiderConcaveFn,
}

impl Density for FittedDensity<'_> {
    fn complex(&self) -> &OrthantComplex {
        self.complex
    }

    fn eval(&self, x: &Point) -> Result<f64> {
        Ok(self.psi.evaluate(x))
    }

    fn support_radius(&self) -> f64 {
        concave_support_radius(self.psi)
    }
}

/// Radius beyond which `e^ψ` is zero or below `1e-17` of its peak.
pub(crate) fn concave_support_radius(psi: &SpiderConcaveFn) -> f64 {
    let mut r = psi.knot_radius();
    let peak = psi
        .legs
        .iter()
        .flat_map(|l| l.knots.iter().map(|k| k.1))
        .chain(std::iter::once(psi.origin_value))
        .fold(f64::NEG_INFINITY, f64::max);
    for leg in &psi.legs {
        if let Some(s) = leg.final_slope {
            let (u, v) = leg.knots.last().copied().unwrap_or((0.0, psi.origin_value));
            r = r.max(u + (v - peak + 40.0).max(0.0) / -s);
        }
    }
    r
}

/// Integrals of `w(s) e^{(1−s)a + s b}` over `[0, len]` (in `u = s·len`) for the
/// weights `1, 1−s, s, (1−s)², s(1−s), s²`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SegMoments {
    pub j: f64,
    pub ja: f64,
    pub jb: f64,
    pub jaa: f64,
    pub jab: f64,
    pub jbb: f64,
}

pub(crate) fn seg_moments(a: f64, b: f64, len: f64) -> SegMoments {
    if b > a {
        let m = seg_moments(b, a, len);
        return SegMoments { j: m.j, ja: m.jb, jb: m.ja, jaa: m.jbb, jab: m.jab, jbb: m.jaa };
    }
    let base = len * a.exp();
    let [p0, p1, p2, p11] = decaying_moments(b - a);
    SegMoments {
        j: base * p0,
        ja: base * (p0 - p1),
        jb: base * p1,
        jaa: base * (p0 - 2.0 * p1 + p2),
        jab: base * p11,
        jbb: base * p2,
    }
}

/// `∫_0^1 w(s) e^{ts} ds` for `t ≤ 0` and `w = 1, s, s², s(1−s)`.
fn decaying_moments(t: f64) -> [f64; 4] {
    if t > -1.0 {
        let mut out = [0.0; 4];
        let mut term = 1.0; // t^n / n!
        for n in 0..30 {
            let nf = n as f64;
            out[0] += term / (nf + 1.0);
            out[1] += term / (nf + 2.0);
            out[2] += term / (nf + 3.0);
            out[3] += term / ((nf + 2.0) * (nf + 3.0));
            term *= t / (nf + 1.0);
            if term.abs() < 1e-18 {
                break;
            }
        }
        return out;
    }
    let e = t.exp();
    let p0 = t.exp_m1() / t;
    let p1 = (e * (t - 1.0) + 1.0) / (t * t);
    let p2 = (e * (t * t - 2.0 * t + 2.0) - 2.0) / (t * t * t);
    [p0, p1, p2, p1 - p2]
}

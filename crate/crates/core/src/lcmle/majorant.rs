use super::concave::{SpiderConcaveFn, SpiderLeg};
use crate::error::{Error, Result};

/// Upper concave hull of points sorted by `x`; collinear points are dropped.
pub(crate) fn upper_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in pts {
        if let Some(last) = hull.last_mut() {
            if last.0 == p.0 {
                last.1 = last.1.max(p.1);
                // the raised point may now break concavity behind it
                let q = hull.pop().unwrap();
                push_hull(&mut hull, q);
                continue;
            }
        }
        push_hull(&mut hull, p);
    }
    hull
}

fn push_hull(hull: &mut Vec<(f64, f64)>, p: (f64, f64)) {
    while hull.len() >= 2 {
        let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
        let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        if cross >= 0.0 {
            hull.pop();
        } else {
            break;
        }
    }
    hull.push(p);
}

/// Least concave majorant on a spider with `num_legs` legs of the lifted
/// points `(leg, coordinate, value)`. Points with coordinate zero sit at the
/// origin regardless of their leg. The domain is the convex hull of the
/// points.
pub fn least_concave_majorant(num_legs: usize, points: &[(usize, f64, f64)]) -> Result<SpiderConcaveFn> {
    let mut per_leg: Vec<Vec<(f64, f64)>> = vec![Vec::new(); num_legs];
    let mut origin: Option<f64> = None;
    for &(leg, u, v) in points {
        if !(u >= 0.0) || !u.is_finite() || !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lifted point ({leg}, {u}, {v}) is not finite and nonnegative"
            )));
        }
        if u == 0.0 {
            origin = Some(origin.map_or(v, |o: f64| o.max(v)));
        } else if leg >= num_legs {
            return Err(Error::InvalidParameter(format!("leg {leg} out of range")));
        } else {
            per_leg[leg].push((u, v));
        }
    }
    for pts in per_leg.iter_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let occupied: Vec<usize> = (0..num_legs).filter(|&l| !per_leg[l].is_empty()).collect();
    let too_few = || Error::InvalidParameter("the majorant needs at least two distinct points".into());
    match occupied.len() {
        0 => Err(too_few()),
        1 => {
            let l = occupied[0];
            let mut pts = Vec::with_capacity(per_leg[l].len() + 1);
            if let Some(v) = origin {
                pts.push((0.0, v));
            }
            pts.extend(per_leg[l].iter().copied());
            let hull = upper_hull(&pts);
            if hull.len() < 2 {
                return Err(too_few());
            }
            let mut legs = vec![SpiderLeg::empty(); num_legs];
            let origin_value = if hull[0].0 == 0.0 { hull[0].1 } else { f64::NEG_INFINITY };
            legs[l].knots = hull.into_iter().filter(|p| p.0 > 0.0).collect();
            SpiderConcaveFn::new(origin_value, legs)
        }
        _ => {
            let hulls: Vec<Vec<(f64, f64)>> = occupied.iter().map(|&l| upper_hull(&per_leg[l])).collect();
            // origin value: highest crossing of a segment between two legs
            let mut v0 = origin.unwrap_or(f64::NEG_INFINITY);
            for i in 0..hulls.len() {
                for j in i + 1..hulls.len() {
                    for &(a, ya) in &hulls[i] {
                        for &(b, yb) in &hulls[j] {
                            v0 = v0.max((b * ya + a * yb) / (a + b));
                        }
                    }
                }
            }
            let mut legs = vec![SpiderLeg::empty(); num_legs];
            for (&l, hull) in occupied.iter().zip(&hulls) {
                let mut pts = Vec::with_capacity(hull.len() + 1);
                pts.push((0.0, v0));
                pts.extend(hull.iter().copied());
                legs[l].knots = upper_hull(&pts).into_iter().skip(1).collect();
            }
            SpiderConcaveFn::new(v0, legs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_leg_segment() {
        let f = least_concave_majorant(3, &[(0, 1.0, 0.0), (0, 2.0, 0.0)]).unwrap();
        assert_eq!(f.origin_value(), f64::NEG_INFINITY);
        assert_eq!(f.legs()[0].knots, vec![(1.0, 0.0), (2.0, 0.0)]);
        assert_eq!(f.value(0, 1.5), 0.0);
        assert_eq!(f.value(0, 0.5), f64::NEG_INFINITY);
        assert_eq!(f.value(1, 0.5), f64::NEG_INFINITY);
    }

    #[test]
    fn two_legs_make_a_segment_through_the_origin() {
        let f = least_concave_majorant(3, &[(0, 1.0, 0.0), (1, 1.0, 0.0)]).unwrap();
        assert_eq!(f.origin_value(), 0.0);
        assert_eq!(f.value(0, 0.5), 0.0);
        assert_eq!(f.value(1, 1.0), 0.0);
        assert_eq!(f.value(0, 1.5), f64::NEG_INFINITY);
        assert_eq!(f.value(2, 0.1), f64::NEG_INFINITY);
    }

    #[test]
    fn third_leg_hangs_from_the_origin() {
        let f = least_concave_majorant(3, &[(0, 1.0, 0.0), (1, 1.0, 0.0), (2, 1.0, -3.0)]).unwrap();
        assert_eq!(f.origin_value(), 0.0);
        assert_eq!(f.legs()[2].knots, vec![(1.0, -3.0)]);
        assert!((f.value(2, 0.5) + 1.5).abs() < 1e-15);
    }

    #[test]
    fn origin_points_and_interior_points() {
        let pts = [(0, 0.0, 1.0), (0, 1.0, 0.0), (0, 0.5, 0.9), (1, 2.0, -1.0), (1, 1.0, -5.0)];
        let f = least_concave_majorant(2, &pts).unwrap();
        assert_eq!(f.origin_value(), 1.0);
        for &(l, u, v) in &pts {
            assert!(f.value(l, u) >= v);
        }
        assert_eq!(f.value(0, 0.5), 0.9);
    }

    #[test]
    fn identical_points_are_rejected() {
        assert!(least_concave_majorant(3, &[(1, 0.5, 0.0), (1, 0.5, 2.0)]).is_err());
        assert!(least_concave_majorant(3, &[(1, 0.0, 0.0), (2, 0.0, 1.0)]).is_err());
    }

    #[test]
    fn hull_removes_collinear_points() {
        let h = upper_hull(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 0.0)]);
        assert_eq!(h, vec![(0.0, 0.0), (2.0, 2.0), (3.0, 0.0)]);
    }
}

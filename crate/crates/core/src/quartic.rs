//! Real roots of low-degree polynomials.
//!
//! Roots are isolated between consecutive critical points (roots of the
//! derivative, found recursively), so every isolating interval holds a
//! monotone piece and at most one simple root. Each root is bracketed with
//! Brent's method, which avoids the cancellation problems of the closed-form
//! Ferrari/Cardano formulas near multiple roots.

use crate::roots::brent;

/// Coefficients in descending order of degree: `c[0] x^n + ... + c[n]`.
pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len().saturating_sub(1);
    coeffs[..n]
        .iter()
        .enumerate()
        .map(|(k, &c)| c * (n - k) as f64)
        .collect()
}

/// Cauchy bound: every root satisfies `|x| <= bound`.
fn cauchy_bound(coeffs: &[f64]) -> f64 {
    let lead = coeffs[0].abs();
    1.0 + coeffs[1..]
        .iter()
        .map(|c| c.abs() / lead)
        .fold(0.0, f64::max)
}

fn trim_leading_zeros(coeffs: &[f64]) -> &[f64] {
    let start = coeffs
        .iter()
        .position(|&c| c != 0.0)
        .unwrap_or(coeffs.len());
    &coeffs[start..]
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        // treat a discriminant lost in rounding as a double root
        let scale = (b * b).max((4.0 * a * c).abs());
        if -disc <= 8.0 * f64::EPSILON * scale {
            return vec![-b / (2.0 * a)];
        }
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    // stable form: avoid subtracting nearly equal quantities
    let q = -0.5 * (b + disc.sqrt().copysign(b));
    let mut roots = if q == 0.0 {
        vec![0.0]
    } else {
        vec![q / a, c / q]
    };
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

/// All distinct real roots, ascending. Multiple roots are reported once.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let coeffs = trim_leading_zeros(coeffs);
    match coeffs.len() {
        0 | 1 => Vec::new(),
        2 => vec![-coeffs[1] / coeffs[0]],
        3 => quadratic_roots(coeffs[0], coeffs[1], coeffs[2]),
        _ => {
            let bound = cauchy_bound(coeffs);
            let mut knots = vec![-bound];
            knots.extend(
                real_roots(&derivative(coeffs))
                    .into_iter()
                    .filter(|x| x.abs() < bound),
            );
            knots.push(bound);

            let scale: f64 = coeffs.iter().map(|c| c.abs()).sum();
            let mut roots: Vec<f64> = Vec::new();
            for w in knots.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                let (flo, fhi) = (eval(coeffs, lo), eval(coeffs, hi));
                if flo.signum() != fhi.signum() && flo != 0.0 && fhi != 0.0 {
                    if let Ok(r) = brent(|x| eval(coeffs, x), lo, hi, 0.0, 200) {
                        roots.push(r.x);
                    }
                }
            }
            // touching roots sit at critical points
            for &k in &knots[1..knots.len() - 1] {
                let mag = k.abs().max(1.0).powi(coeffs.len() as i32 - 1);
                if eval(coeffs, k).abs() <= 64.0 * f64::EPSILON * scale * mag {
                    roots.push(k);
                }
            }
            roots.sort_by(f64::total_cmp);
            roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
            roots.into_iter().map(|r| polish(coeffs, r)).collect()
        }
    }
}

/// A few Newton steps, kept only while they reduce the residual.
pub fn polish(coeffs: &[f64], x0: f64) -> f64 {
    let d = derivative(coeffs);
    let mut x = x0;
    let mut fx = eval(coeffs, x).abs();
    for _ in 0..8 {
        let slope = eval(&d, x);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let next = x - eval(coeffs, x) / slope;
        let fnext = eval(coeffs, next).abs();
        if fnext.is_nan() || fnext >= fx {
            break;
        }
        x = next;
        fx = fnext;
    }
    x
}

/// Real roots of `x^4 + a x^3 + b x^2 + c x + d`.
pub fn quartic_real_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    real_roots(&[1.0, a, b, c, d])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_roots(roots: &[f64]) -> Vec<f64> {
        let mut coeffs = vec![1.0];
        for &r in roots {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k] += c;
                next[k + 1] -= c * r;
            }
            coeffs = next;
        }
        coeffs
    }

    #[test]
    fn four_distinct_roots() {
        let roots = real_roots(&from_roots(&[-3.0, -0.5, 0.25, 2.0]));
        let expected = [-3.0, -0.5, 0.25, 2.0];
        assert_eq!(roots.len(), 4);
        for (r, e) in roots.iter().zip(expected) {
            assert!((r - e).abs() < 1e-12, "{r} vs {e}");
        }
    }

    #[test]
    fn no_real_roots() {
        // (x^2 + 1)(x^2 + 4)
        assert!(quartic_real_roots(0.0, 5.0, 0.0, 4.0).is_empty());
    }

    #[test]
    fn double_root_reported_once() {
        // (x - 1)^2 (x + 2)(x - 3)
        let roots = real_roots(&from_roots(&[1.0, 1.0, -2.0, 3.0]));
        assert_eq!(roots.len(), 3);
        assert!((roots[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn two_real_two_complex() {
        // (x^2 + x + 1)(x - 0.3)(x - 0.7)
        let mut coeffs = vec![0.0; 5];
        let quad = [1.0, 1.0, 1.0];
        let lin = from_roots(&[0.3, 0.7]);
        for (i, &a) in quad.iter().enumerate() {
            for (j, &b) in lin.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        let roots = real_roots(&coeffs);
        assert_eq!(roots.len(), 2);
        assert!((roots[0] - 0.3).abs() < 1e-13);
        assert!((roots[1] - 0.7).abs() < 1e-13);
    }

    #[test]
    fn degenerate_degrees() {
        assert_eq!(real_roots(&[0.0, 0.0, 2.0, -4.0]), vec![2.0]);
        assert_eq!(real_roots(&[1.0, 0.0, -4.0]), vec![-2.0, 2.0]);
        assert!(real_roots(&[3.0]).is_empty());
    }

    proptest! {
        #[test]
        fn recovers_well_separated_roots(
            mut r in proptest::collection::vec(-5.0f64..5.0, 4)
        ) {
            r.sort_by(f64::total_cmp);
            prop_assume!(r.windows(2).all(|w| w[1] - w[0] > 1e-3));
            let found = real_roots(&from_roots(&r));
            prop_assert_eq!(found.len(), 4);
            for (x, e) in found.iter().zip(&r) {
                prop_assert!((x - e).abs() < 1e-8, "{} vs {}", x, e);
            }
        }

        #[test]
        fn every_reported_root_has_small_residual(
            a in -10.0f64..10.0, b in -10.0f64..10.0, c in -10.0f64..10.0, d in -10.0f64..10.0
        ) {
            for x in quartic_real_roots(a, b, c, d) {
                let scale = 1.0 + x.abs().powi(4) + a.abs() * x.abs().powi(3)
                    + b.abs() * x * x + c.abs() * x.abs() + d.abs();
                prop_assert!(eval(&[1.0, a, b, c, d], x).abs() <= 1e-9 * scale);
            }
        }
    }
}

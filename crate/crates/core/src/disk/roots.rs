//! Polynomial roots by the Aberth–Ehrlich iteration with Newton polishing.

use crate::error::{Error, Result};
use crate::geometry::C64;

const MAX_ITER: usize = 500;

/// `Σ c_k z^k` by Horner's rule.
pub fn poly_eval(coeffs: &[C64], z: C64) -> C64 {
    coeffs
        .iter()
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, c| acc * z + c)
}

fn eval_with_derivative(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut d = C64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        d = d * z + p;
        p = p * z + c;
    }
    (p, d)
}

/// Coefficients with trailing (leading-degree) zeros removed.
pub fn trim(coeffs: &[C64]) -> &[C64] {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut end = coeffs.len();
    while end > 1 && coeffs[end - 1].norm() <= 1e-15 * scale {
        end -= 1;
    }
    &coeffs[..end]
}

/// All complex roots of `Σ c_k z^k`, with multiplicity.
pub fn poly_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let c = trim(coeffs);
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Err(Error::Domain(
            "constant polynomial has no roots to locate".into(),
        ));
    }
    let lead = c[deg];
    let monic: Vec<C64> = c.iter().map(|x| x / lead).collect();
    if deg == 1 {
        return Ok(vec![-monic[0]]);
    }
    // Cauchy bound for the starting circle; rotated to avoid symmetric stalls.
    let bound = 1.0 + monic[..deg].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let radius = 0.5 * bound;
    let mut z: Vec<C64> = (0..deg)
        .map(|k| {
            C64::from_polar(
                radius,
                2.0 * std::f64::consts::PI * k as f64 / deg as f64 + 0.4,
            )
        })
        .collect();
    for _ in 0..MAX_ITER {
        let mut worst = 0.0f64;
        for i in 0..deg {
            let (p, dp) = eval_with_derivative(&monic, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: C64 = (0..deg)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                worst = worst.max(step.norm() / z[i].norm().max(1.0));
            }
        }
        if worst < 1e-16 {
            break;
        }
    }
    // Newton polishing; harmless at multiple roots where it stalls.
    for r in &mut z {
        for _ in 0..3 {
            let (p, dp) = eval_with_derivative(&monic, *r);
            if dp.norm() == 0.0 {
                break;
            }
            let next = *r - p / dp;
            if poly_eval(&monic, next).norm() < p.norm() {
                *r = next;
            } else {
                break;
            }
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn from_roots(r: &[C64]) -> Vec<C64> {
        let mut p = vec![c(1.0, 0.0)];
        for &z in r {
            let mut q = vec![c(0.0, 0.0); p.len() + 1];
            for (k, a) in p.iter().enumerate() {
                q[k + 1] += a;
                q[k] -= a * z;
            }
            p = q;
        }
        p
    }

    #[test]
    fn simple_cases() {
        let r = poly_roots(&[c(-0.25, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 0.5).abs() < 1e-14 && (re[1] - 0.5).abs() < 1e-14);
        assert_eq!(
            poly_roots(&[c(-0.1, 0.0), c(0.5, 0.0)]).unwrap(),
            vec![c(0.2, 0.0)]
        );
        assert!(poly_roots(&[c(3.0, 0.0), c(0.0, 0.0)]).is_err());
        // A double root is still located to about half precision.
        let r = poly_roots(&from_roots(&[c(0.3, 0.1), c(0.3, 0.1), c(-0.5, 0.0)])).unwrap();
        assert_eq!(
            r.iter()
                .filter(|z| (*z - c(0.3, 0.1)).norm() < 1e-6)
                .count(),
            2
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn recovers_random_roots(v in proptest::collection::vec((-0.95f64..0.95, -0.95f64..0.95), 1..8)) {
            let roots: Vec<C64> = v.iter().map(|&(a, b)| c(a, b)).collect();
            // Skip near-coincident roots; their conditioning is a separate matter.
            let sep = roots.iter().enumerate()
                .flat_map(|(i, a)| roots[i + 1..].iter().map(move |b| (a - b).norm()))
                .fold(f64::INFINITY, f64::min);
            prop_assume!(sep > 1e-2);
            let found = poly_roots(&from_roots(&roots)).unwrap();
            for r in &roots {
                let d = found.iter().map(|f| (f - r).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(d < 1e-9, "root {r} missed by {d}");
            }
        }
    }
}

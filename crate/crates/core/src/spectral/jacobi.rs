//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq = |a_pq| e^{iφ}`
//! with a diagonal unitary and then applies the classical real rotation, so
//! the combined transform is unitary and annihilates `a_pq`.

use crate::error::{Error, Result};
use crate::geometry::C64;

const MAX_SWEEPS: usize = 60;
const OFF_TOL: f64 = 1e-15;

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues, nonincreasing.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]` (if requested).
    pub vectors: Option<Vec<Vec<C64>>>,
    pub sweeps: usize,
}

/// Largest `|a_ij − conj(a_ji)|` relative to the largest entry.
pub fn hermitian_defect(a: &[C64], n: usize) -> f64 {
    let scale = a.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut d = 0.0f64;
    for i in 0..n {
        for j in i..n {
            d = d.max((a[i * n + j] - a[j * n + i].conj()).norm());
        }
    }
    d / scale
}

/// Eigenvalues (and optionally eigenvectors) of the row-major Hermitian
/// `n × n` matrix `a`.
pub fn hermitian_eigen(a: &[C64], n: usize, want_vectors: bool) -> Result<HermitianEigen> {
    if a.len() != n * n {
        return Err(Error::Input(format!(
            "matrix has {} entries, expected {}",
            a.len(),
            n * n
        )));
    }
    if a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::Consistency("matrix has non-finite entries".into()));
    }
    let defect = hermitian_defect(a, n);
    if defect > 1e-14 {
        return Err(Error::Consistency(format!(
            "matrix is not Hermitian (relative defect {defect:.3e})"
        )));
    }
    // Symmetrize exactly so the rotation algebra stays consistent.
    let mut m = a.to_vec();
    for i in 0..n {
        m[i * n + i] = C64::new(m[i * n + i].re, 0.0);
        for j in (i + 1)..n {
            let v = 0.5 * (m[i * n + j] + m[j * n + i].conj());
            m[i * n + j] = v;
            m[j * n + i] = v.conj();
        }
    }
    // Rows of `vt` are the eigenvectors.
    let mut vt: Vec<C64> = if want_vectors {
        let mut v = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            v[i * n + i] = C64::new(1.0, 0.0);
        }
        v
    } else {
        Vec::new()
    };

    let frob: f64 = m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= OFF_TOL * frob || frob == 0.0 {
            break;
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let r = apq.norm();
                let app = m[p * n + p].re;
                let aqq = m[q * n + q].re;
                if r == 0.0 || r <= 1e-18 * (app.abs() * aqq.abs()).sqrt() {
                    continue;
                }
                rotated = true;
                let phc = (apq / r).conj(); // e^{−iφ}
                let tau = (aqq - app) / (2.0 * r);
                let t =
                    if tau >= 0.0 { 1.0 } else { -1.0 } / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m[k * n + p];
                    let akq = m[k * n + q] * phc;
                    let new_p = akp * c - akq * s;
                    let new_q = akp * s + akq * c;
                    m[k * n + p] = new_p;
                    m[k * n + q] = new_q;
                    m[p * n + k] = new_p.conj();
                    m[q * n + k] = new_q.conj();
                }
                m[p * n + p] = C64::new(app - t * r, 0.0);
                m[q * n + q] = C64::new(aqq + t * r, 0.0);
                m[p * n + q] = C64::new(0.0, 0.0);
                m[q * n + p] = C64::new(0.0, 0.0);
                if want_vectors {
                    // Columns of V update as the columns of A; here they are rows of vt.
                    for k in 0..n {
                        let vp = vt[p * n + k];
                        let vq = vt[q * n + k] * phc;
                        vt[p * n + k] = vp * c - vq * s;
                        vt[q * n + k] = vp * s + vq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    if sweeps == MAX_SWEEPS {
        log::warn!("Jacobi eigensolver hit the sweep limit ({MAX_SWEEPS})");
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].re.total_cmp(&m[i * n + i].re).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i * n + i].re).collect();
    let vectors = want_vectors.then(|| {
        order
            .iter()
            .map(|&i| vt[i * n..(i + 1) * n].to_vec())
            .collect()
    });
    Ok(HermitianEigen {
        values,
        vectors,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            a[i * n + i] = C64::new(rng.random_range(-2.0..2.0), 0.0);
            for j in (i + 1)..n {
                let v = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                a[i * n + j] = v;
                a[j * n + i] = v.conj();
            }
        }
        a
    }

    fn residual(a: &[C64], n: usize, e: &HermitianEigen) -> f64 {
        let vs = e.vectors.as_ref().unwrap();
        let mut worst = 0.0f64;
        for (lam, v) in e.values.iter().zip(vs) {
            for i in 0..n {
                let av: C64 = (0..n).map(|k| a[i * n + k] * v[k]).sum();
                worst = worst.max((av - v[i] * lam).norm());
            }
        }
        worst
    }

    #[test]
    fn two_by_two_real() {
        let a = vec![
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(4.0 / 3.0, 0.0),
        ];
        let e = hermitian_eigen(&a, 2, true).unwrap();
        let s = 37f64.sqrt();
        assert!((e.values[0] - (7.0 + s) / 6.0).abs() < 1e-14);
        assert!((e.values[1] - (7.0 - s) / 6.0).abs() < 1e-14);
        assert!(residual(&a, 2, &e) < 1e-14);
    }

    #[test]
    fn complex_pivots_are_diagonalized() {
        let a = vec![
            C64::new(2.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, -1.0),
            C64::new(2.0, 0.0),
        ];
        let e = hermitian_eigen(&a, 2, true).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        assert!(residual(&a, 2, &e) < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = vec![
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ];
        assert!(matches!(
            hermitian_eigen(&a, 2, false),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn empty_and_scalar() {
        assert!(hermitian_eigen(&[], 0, true).unwrap().values.is_empty());
        let e = hermitian_eigen(&[C64::new(5.0, 0.0)], 1, true).unwrap();
        assert_eq!(e.values, vec![5.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_matrices_satisfy_eigen_equations(n in 1usize..24, seed in 0u64..10_000) {
            let a = random_hermitian(n, seed);
            let e = hermitian_eigen(&a, n, true).unwrap();
            let trace: f64 = (0..n).map(|i| a[i * n + i].re).sum();
            let sum: f64 = e.values.iter().sum();
            prop_assert!((trace - sum).abs() < 1e-11 * (1.0 + trace.abs()));
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(residual(&a, n, &e) < 1e-11);
            let vs = e.vectors.as_ref().unwrap();
            for i in 0..n {
                for j in 0..n {
                    let d: C64 = (0..n).map(|k| vs[i][k].conj() * vs[j][k]).sum();
                    let target = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((d - C64::new(target, 0.0)).norm() < 1e-12);
                }
            }
        }
    }
}

//! `Q_μ` for atomic `μ`: pointwise action, the weighted Gram matrix and
//! everything read off its spectrum.
//!
//! With `μ = Σ c_j δ_{z_j}` the operator is `Σ_j c_j K_{z_j} ⟨·, K_{z_j}⟩`,
//! so its nonzero spectrum is that of `M_ij = √(c_i c_j) (1−⟨z_i,z_j⟩)^{−n}`.

mod jacobi;
mod probe;

pub use jacobi::{hermitian_defect, hermitian_eigen, HermitianEigen};
pub use probe::{opnorm_probe_hp_hq, ProbeRecord, ProbeReport, ProbeSpec};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{inner, Point, C64};
use crate::holo::{HoloFunction, KernelAtom};
use crate::measure::AtomicMeasure;

/// Largest atom count accepted by the Gram solver.
pub const MAX_ATOMS: usize = 4096;
/// Eigenvalues below `RANK_CUTOFF · λ_max` are dropped from `p < 1` sums.
pub const RANK_CUTOFF: f64 = 1e-12;
/// Tolerated negative eigenvalues, relative to `λ_max`, before clipping.
pub const PSD_TOL: f64 = 1e-10;
/// Relative tolerance for `Σ λ_j = tr M`.
pub const TRACE_TOL: f64 = 1e-10;

/// Weighted Gram matrix of Szegő kernels, row-major.
#[derive(Clone, Debug)]
pub struct GramSystem {
    pub size: usize,
    pub matrix: Vec<C64>,
}

impl GramSystem {
    pub fn trace(&self) -> f64 {
        (0..self.size)
            .map(|i| self.matrix[i * self.size + i].re)
            .sum()
    }

    /// `max_k |M v_k − λ_k v_k|`.
    pub fn residual(&self, values: &[f64], vectors: &[Vec<C64>]) -> f64 {
        let m = self.size;
        values
            .par_iter()
            .zip(vectors)
            .map(|(&lam, v)| {
                (0..m)
                    .map(|i| {
                        let row = &self.matrix[i * m..(i + 1) * m];
                        let mv: C64 = row.iter().zip(v).map(|(a, x)| a * x).sum();
                        (mv - v[i] * lam).norm()
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }
}

pub fn gram_matrix(mu: &AtomicMeasure) -> Result<GramSystem> {
    let m = mu.len();
    if m > MAX_ATOMS {
        return Err(Error::Input(format!(
            "{m} atoms exceed the Gram solver cap of {MAX_ATOMS}"
        )));
    }
    let n = mu.dim() as f64;
    let atoms = mu.atoms();
    let one = C64::new(1.0, 0.0);
    let rows: Vec<Vec<C64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let zi = &atoms[i];
            (0..m)
                .map(|j| {
                    let zj = &atoms[j];
                    let w = one - inner(zi.z.coords(), zj.z.coords());
                    (zi.c * zj.c).sqrt() * (-n * w.ln()).exp()
                })
                .collect()
        })
        .collect();
    let mut matrix: Vec<C64> = rows.into_iter().flatten().collect();
    // The diagonal is real by construction; remove rounding in the phase.
    for i in 0..m {
        matrix[i * m + i].im = 0.0;
    }
    Ok(GramSystem { size: m, matrix })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumResult {
    /// Nonincreasing, clipped at zero.
    pub eigenvalues: Vec<f64>,
    /// `Σ c_j (1−|z_j|²)^{−n}`.
    pub trace: f64,
    /// Absolute threshold `RANK_CUTOFF · λ_max`.
    pub rank_cutoff: f64,
    pub residual: f64,
    /// Unit eigenvector of `λ_1` in the atom basis.
    #[serde(skip)]
    pub top_eigenvector: Option<Vec<C64>>,
}

impl SpectrumResult {
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// `(Σ' λ_j^p)^{1/p}`; below `p = 1` eigenvalues under the rank cutoff are
    /// skipped.
    pub fn schatten(&self, p: f64) -> Result<f64> {
        if !(p > 0.0) {
            return Err(Error::Input(format!(
                "Schatten exponent must be positive, got {p}"
            )));
        }
        let lmax = self.lambda_max();
        if lmax == 0.0 {
            return Ok(0.0);
        }
        if p.is_infinite() {
            return Ok(lmax);
        }
        // Scale by λ_max so large p does not overflow.
        let s: f64 = self
            .eigenvalues
            .iter()
            .filter(|&&l| p >= 1.0 || l > self.rank_cutoff)
            .map(|l| (l / lmax).powf(p))
            .sum();
        Ok(lmax * s.powf(1.0 / p))
    }
}

/// `Σ_j c_j (1−|z_j|²)^{−n}`.
pub fn trace_formula(mu: &AtomicMeasure) -> f64 {
    let n = mu.dim() as i32;
    mu.atoms()
        .iter()
        .map(|a| a.c / (1.0 - a.z.norm_sq()).powi(n))
        .sum()
}

pub fn gram_spectrum(mu: &AtomicMeasure) -> Result<SpectrumResult> {
    let g = gram_matrix(mu)?;
    let trace = trace_formula(mu);
    if g.size == 0 {
        return Ok(SpectrumResult {
            eigenvalues: Vec::new(),
            trace,
            rank_cutoff: 0.0,
            residual: 0.0,
            top_eigenvector: None,
        });
    }
    let eig = hermitian_eigen(&g.matrix, g.size, true)?;
    let vectors = eig.vectors.expect("vectors were requested");
    let lmax = eig.values[0].max(0.0);
    let lmin = *eig.values.last().unwrap();
    if lmin < -PSD_TOL * lmax {
        return Err(Error::Consistency(format!(
            "Gram matrix is not PSD: λ_min = {lmin:e}, λ_max = {lmax:e}"
        )));
    }
    let residual = g.residual(&eig.values, &vectors);
    let sum: f64 = eig.values.iter().sum();
    if (sum - trace).abs() > TRACE_TOL * trace.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Consistency(format!(
            "eigenvalue sum {sum} differs from the trace {trace}"
        )));
    }
    if residual > 1e-10 * lmax {
        log::warn!("eigen residual {residual:e} exceeds 1e-10·λ_max");
    }
    let eigenvalues = eig.values.iter().map(|&l| l.max(0.0)).collect();
    Ok(SpectrumResult {
        eigenvalues,
        trace,
        rank_cutoff: RANK_CUTOFF * lmax,
        residual,
        top_eigenvector: vectors.into_iter().next(),
    })
}

/// `Q_μ f(z) = Σ_j c_j f(z_j) (1−⟨z,z_j⟩)^{−n}`.
pub fn qmu_apply(mu: &AtomicMeasure, f: &HoloFunction, z: &Point) -> Result<C64> {
    if f.dim() != mu.dim() || z.dim() != mu.dim() {
        return Err(Error::Input("dimension mismatch in Q_μ".into()));
    }
    let n = mu.dim() as f64;
    let one = C64::new(1.0, 0.0);
    Ok(mu
        .atoms()
        .iter()
        .map(|a| a.c * f.eval_at(&a.z) * (-n * (one - inner(z.coords(), a.z.coords())).ln()).exp())
        .sum())
}

/// `Q_μ f` as a function: a sum of Szegő kernels at the atoms.
pub fn qmu_image(mu: &AtomicMeasure, f: &HoloFunction) -> Result<HoloFunction> {
    if f.dim() != mu.dim() {
        return Err(Error::Input("dimension mismatch in Q_μ".into()));
    }
    let n = mu.dim();
    let atoms = mu
        .atoms()
        .iter()
        .map(|a| KernelAtom {
            coeff: f.eval_at(&a.z) * a.c,
            base: a.z.clone(),
            exponent: n as f64,
        })
        .collect();
    HoloFunction::from_parts(n, Default::default(), atoms)
}

/// `‖Q_μ‖_{H²→H²} = λ_max`.
pub fn op_norm_h2(mu: &AtomicMeasure) -> Result<f64> {
    Ok(gram_spectrum(mu)?.lambda_max())
}

pub fn schatten_norm(mu: &AtomicMeasure, p: f64) -> Result<f64> {
    gram_spectrum(mu)?.schatten(p)
}

/// Singular values of the embedding `H² → L²(μ)`: `√λ_j`.
pub fn embedding_singular_values(mu: &AtomicMeasure) -> Result<Vec<f64>> {
    Ok(gram_spectrum(mu)?
        .eigenvalues
        .iter()
        .map(|l| l.sqrt())
        .collect())
}

/// Relative residual of `⟨Q_μ K_a, K_b⟩ = Σ c_j K_a(z_j) conj(K_b(z_j))`,
/// with the left side taken as an exact `H²` inner product.
pub fn pairing_check(mu: &AtomicMeasure, a: &Point, b: &Point) -> Result<f64> {
    let ka = HoloFunction::szego(a);
    let kb = HoloFunction::szego(b);
    let lhs = qmu_image(mu, &ka)?.h2_inner_exact(&kb)?;
    let mut rhs = C64::new(0.0, 0.0);
    let mut scale = 0.0;
    for at in mu.atoms() {
        let term = at.c * ka.eval_at(&at.z) * kb.eval_at(&at.z).conj();
        rhs += term;
        scale += term.norm();
    }
    if scale == 0.0 {
        return Ok((lhs - rhs).norm());
    }
    Ok((lhs - rhs).norm() / scale)
}

/// `λ_k`, 1-based; zero past the rank.
pub fn compactness_tail(mu: &AtomicMeasure, k: usize) -> Result<f64> {
    if k == 0 || k > mu.len() {
        return Err(Error::Input(format!(
            "index k = {k} must lie in 1..={}",
            mu.len()
        )));
    }
    Ok(gram_spectrum(mu)?.eigenvalues[k - 1])
}

/// The function `Σ_j v_j √c_j K_{z_j}` attached to a Gram vector `v`.
pub fn gram_vector_function(mu: &AtomicMeasure, v: &[C64]) -> Result<HoloFunction> {
    if v.len() != mu.len() {
        return Err(Error::Input(
            "Gram vector length differs from atom count".into(),
        ));
    }
    let n = mu.dim();
    let atoms = mu
        .atoms()
        .iter()
        .zip(v)
        .map(|(a, x)| KernelAtom {
            coeff: x * a.c.sqrt(),
            base: a.z.clone(),
            exponent: n as f64,
        })
        .collect();
    HoloFunction::from_parts(n, Default::default(), atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holo::monomial_norm_sq;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_measure(n: usize, m: usize, seed: u64) -> AtomicMeasure {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let atoms = (0..m)
            .map(|_| {
                let r: f64 = rng.random_range(0.0..0.97);
                let mut v: Vec<C64> = (0..n)
                    .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                let s = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                v.iter_mut().for_each(|x| *x *= r / s);
                (Point::new(v).unwrap(), rng.random_range(0.01..1.0))
            })
            .collect();
        AtomicMeasure::new(n, atoms).unwrap()
    }

    fn two_atoms() -> AtomicMeasure {
        AtomicMeasure::new(
            1,
            vec![
                (Point::origin(1), 1.0),
                (Point::disk(0.5, 0.0).unwrap(), 1.0),
            ],
        )
        .unwrap()
    }

    /// Multi-indices of total degree ≤ d.
    fn indices(n: usize, d: u32) -> Vec<Vec<u32>> {
        if n == 1 {
            return (0..=d).map(|k| vec![k]).collect();
        }
        let mut out = Vec::new();
        for k in 0..=d {
            for rest in indices(n - 1, d - k) {
                let mut a = vec![k];
                a.extend(rest);
                out.push(a);
            }
        }
        out
    }

    /// Truncated matrix of `Q_μ` in the orthonormal monomial basis:
    /// `⟨Q_μ e_α, e_β⟩ = Σ c_j e_α(z_j) conj(e_β(z_j))`.
    fn monomial_oracle(mu: &AtomicMeasure, d: u32) -> Vec<f64> {
        let n = mu.dim();
        let idx = indices(n, d);
        let basis = |alpha: &[u32], z: &[C64]| -> C64 {
            let mut v = C64::new(1.0, 0.0);
            for (zk, &a) in z.iter().zip(alpha) {
                v *= zk.powu(a);
            }
            v / monomial_norm_sq(n, alpha).sqrt()
        };
        let k = idx.len();
        let mut a = vec![C64::new(0.0, 0.0); k * k];
        for at in mu.atoms() {
            let e: Vec<C64> = idx.iter().map(|al| basis(al, at.z.coords())).collect();
            for i in 0..k {
                for j in 0..k {
                    a[i * k + j] += at.c * e[j] * e[i].conj();
                }
            }
        }
        hermitian_eigen(&a, k, false).unwrap().values
    }

    #[test]
    fn gram_reduction_matches_truncated_basis() {
        let mu = AtomicMeasure::new(
            1,
            vec![
                (Point::disk(0.3, 0.1).unwrap(), 0.7),
                (Point::disk(-0.2, 0.4).unwrap(), 0.4),
                (Point::disk(0.0, -0.5).unwrap(), 1.3),
            ],
        )
        .unwrap();
        let exact = gram_spectrum(&mu).unwrap().eigenvalues;
        let oracle = monomial_oracle(&mu, 120);
        for (a, b) in exact.iter().zip(&oracle) {
            assert_relative_eq!(a, b, max_relative = 1e-11);
        }
        assert!(oracle[3].abs() < 1e-12);

        let mu2 = AtomicMeasure::new(
            2,
            vec![
                (
                    Point::new(vec![C64::new(0.3, 0.0), C64::new(0.0, 0.2)]).unwrap(),
                    0.5,
                ),
                (
                    Point::new(vec![C64::new(-0.1, 0.2), C64::new(0.25, 0.0)]).unwrap(),
                    0.9,
                ),
            ],
        )
        .unwrap();
        let exact = gram_spectrum(&mu2).unwrap().eigenvalues;
        let oracle = monomial_oracle(&mu2, 40);
        for (a, b) in exact.iter().zip(&oracle) {
            assert_relative_eq!(a, b, max_relative = 1e-11);
        }
    }

    #[test]
    fn spectrum_examples() {
        let d0 = AtomicMeasure::dirac(Point::origin(1), 1.0).unwrap();
        assert_eq!(gram_spectrum(&d0).unwrap().eigenvalues, vec![1.0]);
        let r1 = AtomicMeasure::dirac(Point::disk(0.6, 0.0).unwrap(), 0.5).unwrap();
        assert_relative_eq!(
            gram_spectrum(&r1).unwrap().eigenvalues[0],
            0.78125,
            max_relative = 1e-12
        );
        let s = gram_spectrum(&two_atoms()).unwrap();
        let r = 37f64.sqrt();
        assert_relative_eq!(s.eigenvalues[0], (7.0 + r) / 6.0, max_relative = 1e-12);
        assert_relative_eq!(s.eigenvalues[1], (7.0 - r) / 6.0, max_relative = 1e-12);
        assert_relative_eq!(s.trace, 7.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(
            op_norm_h2(&two_atoms()).unwrap(),
            (7.0 + r) / 6.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            schatten_norm(&two_atoms(), 1.0).unwrap(),
            7.0 / 3.0,
            max_relative = 1e-12
        );
        let e = embedding_singular_values(&two_atoms()).unwrap();
        assert_relative_eq!(e[0] * e[0], s.eigenvalues[0], max_relative = 1e-14);
    }

    #[test]
    fn qmu_examples() {
        let mu = random_measure(2, 7, 1);
        let one = HoloFunction::constant(2, C64::new(1.0, 0.0));
        let v = qmu_apply(&mu, &one, &Point::origin(2)).unwrap();
        assert_relative_eq!(v.re, mu.total_mass(), max_relative = 1e-14);
        let d0 = AtomicMeasure::dirac(Point::origin(1), 1.0).unwrap();
        let f = HoloFunction::szego(&Point::disk(0.2, 0.3).unwrap());
        let z = Point::disk(-0.4, 0.1).unwrap();
        assert_relative_eq!(qmu_apply(&d0, &f, &z).unwrap().re, 1.0, epsilon = 1e-15);
        let h = AtomicMeasure::dirac(Point::disk(0.5, 0.0).unwrap(), 1.0).unwrap();
        let v = qmu_apply(
            &h,
            &HoloFunction::constant(1, C64::new(1.0, 0.0)),
            &Point::disk(0.5, 0.0).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(v.re, 4.0 / 3.0, max_relative = 1e-14);
        // The function form agrees with the pointwise form.
        let g = qmu_image(
            &mu,
            &HoloFunction::szego(
                &Point::new(vec![C64::new(0.1, 0.0), C64::new(0.3, 0.3)]).unwrap(),
            ),
        )
        .unwrap();
        let w = Point::new(vec![C64::new(0.2, -0.1), C64::new(0.0, 0.5)]).unwrap();
        let direct = qmu_apply(
            &mu,
            &HoloFunction::szego(
                &Point::new(vec![C64::new(0.1, 0.0), C64::new(0.3, 0.3)]).unwrap(),
            ),
            &w,
        )
        .unwrap();
        assert!((g.eval_at(&w) - direct).norm() < 1e-13 * direct.norm());
    }

    #[test]
    fn frobenius_and_monotone_schatten() {
        let mu = random_measure(1, 12, 5);
        let s2: f64 = mu
            .atoms()
            .iter()
            .flat_map(|a| mu.atoms().iter().map(move |b| (a, b)))
            .map(|(a, b)| {
                a.c * b.c
                    * (C64::new(1.0, 0.0) - inner(a.z.coords(), b.z.coords()))
                        .norm_sqr()
                        .recip()
            })
            .sum();
        assert_relative_eq!(
            schatten_norm(&mu, 2.0).unwrap().powi(2),
            s2,
            max_relative = 1e-10
        );
        let spec = gram_spectrum(&mu).unwrap();
        let ps = [0.5, 1.0, 1.5, 2.0, 4.0, 8.0];
        for w in ps.windows(2) {
            assert!(spec.schatten(w[0]).unwrap() >= spec.schatten(w[1]).unwrap() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn top_eigenvector_function_is_an_eigenfunction() {
        let mu = random_measure(2, 9, 8);
        let spec = gram_spectrum(&mu).unwrap();
        let g = gram_vector_function(&mu, spec.top_eigenvector.as_ref().unwrap()).unwrap();
        let qg = qmu_image(&mu, &g).unwrap();
        let w = Point::new(vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.4)]).unwrap();
        assert!(
            (qg.eval_at(&w) - g.eval_at(&w) * spec.lambda_max()).norm()
                < 1e-10 * qg.eval_at(&w).norm()
        );
        let ratio = qg.h2_norm_exact().unwrap() / g.h2_norm_exact().unwrap();
        assert_relative_eq!(ratio, spec.lambda_max(), max_relative = 1e-9);
    }

    #[test]
    fn compactness_tail_and_errors() {
        let r1 = AtomicMeasure::dirac(Point::disk(0.6, 0.0).unwrap(), 0.5).unwrap();
        assert!(compactness_tail(&r1, 2).is_err());
        assert!(compactness_tail(&r1, 0).is_err());
        assert_relative_eq!(
            compactness_tail(&two_atoms(), 2).unwrap(),
            (7.0 - 37f64.sqrt()) / 6.0,
            max_relative = 1e-10
        );
        let big = AtomicMeasure::new(
            1,
            (0..=MAX_ATOMS)
                .map(|k| {
                    (
                        Point::disk(0.9 * k as f64 / MAX_ATOMS as f64, 0.0).unwrap(),
                        1.0,
                    )
                })
                .collect(),
        )
        .unwrap();
        assert!(matches!(gram_spectrum(&big), Err(Error::Input(_))));
        assert!(gram_spectrum(&AtomicMeasure::empty(2))
            .unwrap()
            .eigenvalues
            .is_empty());
    }

    #[test]
    fn pairing_trivial_and_union() {
        let mu = random_measure(2, 6, 3);
        assert_eq!(
            pairing_check(&mu, &Point::origin(2), &Point::origin(2)).unwrap(),
            0.0
        );
        let nu = random_measure(2, 4, 4);
        let a = Point::new(vec![C64::new(0.5, 0.1), C64::new(0.0, 0.2)]).unwrap();
        let b = Point::new(vec![C64::new(-0.3, 0.0), C64::new(0.1, 0.6)]).unwrap();
        assert!(pairing_check(&mu.union(&nu).unwrap(), &a, &b).unwrap() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn trace_psd_and_weyl(n in 1usize..3, m in 1usize..30, seed in 0u64..1000) {
            let mu = random_measure(n, m, seed);
            let s = gram_spectrum(&mu).unwrap();
            let sum: f64 = s.eigenvalues.iter().sum();
            prop_assert!((sum - s.trace).abs() <= 1e-10 * s.trace);
            prop_assert!(s.residual <= 1e-10 * s.lambda_max());
            prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            // Adding an atom never lowers λ_1.
            let extra = random_measure(n, 1, seed + 7_777);
            let grown = gram_spectrum(&mu.union(&extra).unwrap()).unwrap();
            prop_assert!(grown.lambda_max() >= s.lambda_max() * (1.0 - 1e-12));
            // Homogeneity.
            let scaled = op_norm_h2(&mu.scaled(2.5).unwrap()).unwrap();
            prop_assert!((scaled - 2.5 * s.lambda_max()).abs() <= 1e-11 * scaled);
        }

        #[test]
        fn pairing_identity_holds(n in 1usize..3, m in 1usize..20, seed in 0u64..1000) {
            let mu = random_measure(n, m, seed);
            let pts = random_measure(n, 2, seed + 1);
            let r = pairing_check(&mu, &pts.atoms()[0].z, &pts.atoms()[pts.len() - 1].z).unwrap();
            prop_assert!(r <= 1e-12);
        }
    }
}

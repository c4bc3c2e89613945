//! Operators on the disk: weighted composition, Volterra integration and
//! the Nevanlinna counting function.

mod roots;

pub use roots::{poly_eval, poly_roots};

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BallSample, InvariantQuadrature, Point, C64};
use crate::holo::{HoloFile, HoloFunction, KernelAtom};
use crate::measure::{shell_decay_rate, st_lambda_norm, t_p, AtomicMeasure, DIVERGENCE_RATE};
use crate::spectral::hermitian_eigen;

/// Smallest accepted gap between `φ(D)` and the circle.
pub const MIN_MARGIN: f64 = 0.01;
/// Boundary grid used to certify the self-map margin.
pub const MARGIN_GRID: usize = 4096;
/// Largest finite section of `W_{u,φ}`.
pub const MAX_SECTION: usize = 256;
/// Required `|φ(z) − w|` at computed preimages.
pub const ROOT_RESIDUAL: f64 = 1e-10;

fn circle(k: usize, m: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)
}

/// Polynomial self-map `φ` with weight `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskMap {
    phi: Vec<C64>,
    u: HoloFunction,
    delta_safe: f64,
}

/// JSON form `{phi: [[re, im], ...], u, delta_safe}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiskMapFile {
    pub phi: Vec<[f64; 2]>,
    pub u: HoloFile,
    pub delta_safe: f64,
}

impl DiskMap {
    /// `phi` holds the coefficients of `φ` in increasing degree.
    pub fn new(phi: Vec<C64>, u: HoloFunction) -> Result<Self> {
        if phi.is_empty() {
            return Err(Error::Input("φ needs at least one coefficient".into()));
        }
        if u.dim() != 1 {
            return Err(Error::Input("weight u must live on the disk".into()));
        }
        if phi.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Input("non-finite coefficient in φ".into()));
        }
        let sup = (0..MARGIN_GRID)
            .into_par_iter()
            .map(|k| poly_eval(&phi, circle(k, MARGIN_GRID)).norm())
            .reduce(|| 0.0, f64::max);
        let delta_safe = 1.0 - sup;
        if !(delta_safe >= MIN_MARGIN) {
            return Err(Error::Construction(format!(
                "sup |φ| on the circle is {sup:.6}; self-map margin {delta_safe:.6} below {MIN_MARGIN}"
            )));
        }
        Ok(DiskMap { phi, u, delta_safe })
    }

    /// `φ(z) = a z`.
    pub fn linear(a: C64, u: HoloFunction) -> Result<Self> {
        Self::new(vec![C64::new(0.0, 0.0), a], u)
    }

    pub fn unweighted(phi: Vec<C64>) -> Result<Self> {
        Self::new(phi, HoloFunction::constant(1, C64::new(1.0, 0.0)))
    }

    pub fn phi(&self) -> &[C64] {
        &self.phi
    }

    pub fn u(&self) -> &HoloFunction {
        &self.u
    }

    pub fn delta_safe(&self) -> f64 {
        self.delta_safe
    }

    pub fn to_file(&self) -> DiskMapFile {
        DiskMapFile {
            phi: self.phi.iter().map(|c| [c.re, c.im]).collect(),
            u: self.u.to_file(),
            delta_safe: self.delta_safe,
        }
    }

    /// The stored margin is recomputed, not trusted.
    pub fn from_file(f: &DiskMapFile) -> Result<Self> {
        let m = Self::new(
            f.phi.iter().map(|p| C64::new(p[0], p[1])).collect(),
            HoloFunction::from_file(1, &f.u)?,
        )?;
        if (m.delta_safe - f.delta_safe).abs() > 1e-9 {
            log::warn!(
                "stored delta_safe {} differs from recomputed {}",
                f.delta_safe,
                m.delta_safe
            );
        }
        Ok(m)
    }
}

/// `μ_{u,φ} ≈ Σ_k |u(ζ_k)|²/m δ_{φ(ζ_k)}` over `m` equispaced `ζ_k`.
pub fn pullback_measure(map: &DiskMap, grid_size: usize) -> Result<AtomicMeasure> {
    if grid_size < 16 {
        return Err(Error::Input(format!(
            "pullback grid needs at least 16 points, got {grid_size}"
        )));
    }
    let atoms = (0..grid_size)
        .map(|k| {
            let z = circle(k, grid_size);
            let w = poly_eval(&map.phi, z);
            let c = map.u.eval(&[z])?.norm_sqr() / grid_size as f64;
            Ok((w, c))
        })
        .collect::<Result<Vec<_>>>()?;
    let pts = atoms
        .into_iter()
        .filter(|(_, c)| *c > 0.0)
        .map(|(w, c)| Ok((Point::new(vec![w])?, c)))
        .collect::<Result<Vec<_>>>()?;
    AtomicMeasure::new(1, pts)
}

/// `N × N` section of `W_{u,φ} f = u·(f∘φ)` in the monomial basis; column
/// `k` holds the first `N` Taylor coefficients of `u φ^k`. Row-major.
pub fn wcomp_matrix(map: &DiskMap, size: usize) -> Result<Vec<C64>> {
    if size == 0 || size > MAX_SECTION {
        return Err(Error::Input(format!(
            "section size must lie in 1..={MAX_SECTION}, got {size}"
        )));
    }
    let u = map.u.taylor_coefficients(size)?;
    let mut out = vec![C64::new(0.0, 0.0); size * size];
    let mut power = vec![C64::new(0.0, 0.0); size];
    power[0] = C64::new(1.0, 0.0);
    for k in 0..size {
        let col = truncated_product(&u, &power, size);
        for (i, v) in col.into_iter().enumerate() {
            out[i * size + k] = v;
        }
        power = truncated_product(&power, &map.phi, size);
    }
    Ok(out)
}

fn truncated_product(a: &[C64], b: &[C64], len: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if *x == C64::new(0.0, 0.0) {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Singular values of the `N × N` section, nonincreasing.
pub fn wcomp_singular_values(map: &DiskMap, size: usize) -> Result<Vec<f64>> {
    let w = wcomp_matrix(map, size)?;
    let mut g = vec![C64::new(0.0, 0.0); size * size];
    for i in 0..size {
        for j in i..size {
            let v: C64 = (0..size)
                .map(|k| w[k * size + i].conj() * w[k * size + j])
                .sum();
            g[i * size + j] = v;
            g[j * size + i] = v.conj();
        }
        g[i * size + i].im = 0.0;
    }
    Ok(hermitian_eigen(&g, size, false)?
        .values
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect())
}

/// `N*_φ(w) = Σ_{φ(z)=w, |z|<1} (1−|z|²)`, with multiplicity.
pub fn nevanlinna(phi: &[C64], w: C64) -> Result<f64> {
    let c = roots::trim(phi);
    if c.len() < 2 {
        return Err(Error::Domain("φ is constant".into()));
    }
    if (w - c[0]).norm() <= 1e-14 {
        return Err(Error::Domain("N*_φ is not defined at φ(0)".into()));
    }
    let mut shifted = c.to_vec();
    shifted[0] -= w;
    let scale = c.iter().map(|x| x.norm()).sum::<f64>().max(1.0);
    let mut total = 0.0;
    for z in poly_roots(&shifted)? {
        let r = (poly_eval(c, z) - w).norm();
        if r > ROOT_RESIDUAL * scale {
            return Err(Error::Consistency(format!(
                "root residual {r:e} above {ROOT_RESIDUAL:e}"
            )));
        }
        let q = 1.0 - z.norm_sqr();
        if q > 0.0 {
            total += q;
        }
    }
    Ok(total)
}

/// `f'` for a function on the disk.
pub fn derivative(f: &HoloFunction) -> Result<HoloFunction> {
    if f.dim() != 1 {
        return Err(Error::Input(
            "derivative is only provided on the disk".into(),
        ));
    }
    let mut poly = BTreeMap::new();
    for (alpha, c) in f.poly() {
        if alpha[0] > 0 {
            poly.insert(vec![alpha[0] - 1], c * alpha[0] as f64);
        }
    }
    // d/dz (1 − z ā)^{−β} = β ā (1 − z ā)^{−β−1}.
    let atoms = f
        .atoms()
        .iter()
        .map(|a| KernelAtom {
            coeff: a.coeff * a.exponent * a.base.coords()[0].conj(),
            base: a.base.clone(),
            exponent: a.exponent + 1.0,
        })
        .collect();
    HoloFunction::from_parts(1, poly, atoms)
}

/// Both sides of `‖(f∘φ)'‖²_{A²_1} = 2 ∫ |f'|² N*_φ dA`, where
/// `dA_1 = 2(1−|z|²) dA`.
#[derive(Clone, Debug, Serialize)]
pub struct ChangeOfVariables {
    pub lhs: f64,
    pub lhs_std_error: f64,
    pub rhs: f64,
    pub rhs_std_error: f64,
}

pub fn change_of_variables(
    f: &HoloFunction,
    phi: &[C64],
    ball: &BallSample,
) -> Result<ChangeOfVariables> {
    if ball.dim != 1 {
        return Err(Error::Input("change of variables runs on the disk".into()));
    }
    let fp = derivative(f)?;
    let dphi: Vec<C64> = phi
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect();
    let lhs = ball.integrate(|z| {
        let zc = z.coords()[0];
        let w = poly_eval(phi, zc);
        let g = fp.eval_unchecked(&[w]) * poly_eval(&dphi, zc);
        2.0 * g.norm_sqr() * (1.0 - z.norm_sq())
    });
    let rhs = ball.integrate(|w| {
        let nstar = nevanlinna(phi, w.coords()[0]).unwrap_or(0.0);
        2.0 * fp.eval_unchecked(w.coords()).norm_sqr() * nstar
    });
    Ok(ChangeOfVariables {
        lhs: lhs.value,
        lhs_std_error: lhs.std_error,
        rhs: rhs.value,
        rhs_std_error: rhs.std_error,
    })
}

/// Quadrature value with its shell diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct IntegralReport {
    pub value: f64,
    pub std_error: f64,
    pub shell_contributions: Vec<f64>,
    pub decay_rate: f64,
    pub divergence_warning: bool,
}

/// `∫ ((1−|w|²)|Rg(w)|)^p dλ_1`.
pub fn besov_seminorm(g: &HoloFunction, p: f64, ball: &BallSample) -> Result<IntegralReport> {
    if g.dim() != 1 || ball.dim != 1 {
        return Err(Error::Input("Besov seminorm runs on the disk".into()));
    }
    if !(p > 0.0) {
        return Err(Error::Input(format!("exponent must be positive, got {p}")));
    }
    let rg = g.radial_derivative();
    if rg.is_zero() {
        return Ok(IntegralReport {
            value: 0.0,
            std_error: 0.0,
            shell_contributions: vec![0.0; ball.shells()],
            decay_rate: f64::INFINITY,
            divergence_warning: false,
        });
    }
    let est = ball.integrate_lambda(|w| ((1.0 - w.norm_sq()) * rg.eval_at(w).norm()).powf(p));
    let decay_rate = shell_decay_rate(&est.shell_contributions);
    let divergence_warning = decay_rate < DIVERGENCE_RATE;
    if divergence_warning {
        log::warn!("Besov integral does not decay across shells (rate {decay_rate:.3}); it diverges for p ≤ 1");
    }
    Ok(IntegralReport {
        value: est.value,
        std_error: est.std_error,
        shell_contributions: est.shell_contributions,
        decay_rate,
        divergence_warning,
    })
}

/// `dμ_g = |Rg|² dv_1` discretized on the ball sample, `dv_1 = 2(1−|z|²) dv`.
pub fn volterra_measure(g: &HoloFunction, ball: &BallSample) -> Result<AtomicMeasure> {
    if g.dim() != 1 || ball.dim != 1 {
        return Err(Error::Input("Volterra measure runs on the disk".into()));
    }
    let rg = g.radial_derivative();
    let atoms: Vec<(Point, f64)> = ball
        .nodes
        .iter()
        .map(|nd| {
            (
                nd.point.clone(),
                nd.weight * 2.0 * (1.0 - nd.point.norm_sq()) * rg.eval_at(&nd.point).norm_sqr(),
            )
        })
        .filter(|(_, c)| *c > 0.0)
        .collect();
    AtomicMeasure::new(1, atoms)
}

pub enum CriterionSource<'a> {
    Volterra(&'a HoloFunction),
    Wcomp(&'a DiskMap),
}

#[derive(Clone, Debug)]
pub struct CriterionConfig {
    /// Outer `dλ_1` quadrature.
    pub quad: InvariantQuadrature,
    /// Ball sample behind the Volterra measure.
    pub inner_samples: usize,
    pub inner_shells: usize,
    /// Boundary grid behind the pullback measure.
    pub boundary_grid: usize,
    pub seed: u64,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        CriterionConfig {
            quad: InvariantQuadrature {
                base_samples: 4096,
                anchor_samples: 4096,
                shells: 24,
                seed: 0,
            },
            inner_samples: 2048,
            inner_shells: 24,
            boundary_grid: 512,
            seed: 0,
        }
    }
}

/// `∫ (S_t μ)^{p/2} dλ_1` with `μ = μ_g` or `μ_{u,φ}`; requires `t > t_{p/2}`.
pub fn schatten_criterion_integral(
    source: CriterionSource<'_>,
    p: f64,
    t: f64,
    cfg: &CriterionConfig,
) -> Result<IntegralReport> {
    if !(p > 0.0) {
        return Err(Error::Input(format!("exponent must be positive, got {p}")));
    }
    let tp = t_p(1, p / 2.0);
    if !(t > tp) {
        return Err(Error::Parameter(format!(
            "need t > t_{{p/2}} = {tp} for p = {p}, got t = {t}"
        )));
    }
    let mu = match source {
        CriterionSource::Volterra(g) => volterra_measure(
            g,
            &crate::geometry::sample_ball(1, cfg.inner_samples, cfg.inner_shells, cfg.seed),
        )?,
        CriterionSource::Wcomp(map) => pullback_measure(map, cfg.boundary_grid)?,
    };
    let r = st_lambda_norm(&mu, t, p / 2.0, &cfg.quad)?;
    Ok(IntegralReport {
        value: r.integral,
        std_error: r.std_error,
        shell_contributions: r.shell_contributions,
        decay_rate: r.decay_rate,
        divergence_warning: r.divergence_warning,
    })
}

/// `∫ (N*_φ(w)/(1−|w|))^{p/2} dλ_1`.
pub fn nevanlinna_criterion_integral(
    phi: &[C64],
    p: f64,
    ball: &BallSample,
) -> Result<IntegralReport> {
    if !(p > 0.0) {
        return Err(Error::Input(format!("exponent must be positive, got {p}")));
    }
    if roots::trim(phi).len() < 2 {
        return Err(Error::Domain("φ is constant".into()));
    }
    let est = ball.integrate_lambda(|w| {
        let n = nevanlinna(phi, w.coords()[0]).unwrap_or(0.0);
        (n / (1.0 - w.norm())).powf(p / 2.0)
    });
    let decay_rate = shell_decay_rate(&est.shell_contributions);
    Ok(IntegralReport {
        value: est.value,
        std_error: est.std_error,
        shell_contributions: est.shell_contributions,
        decay_rate,
        divergence_warning: decay_rate < DIVERGENCE_RATE,
    })
}

#[cfg(test)]
mod tests;

//! The Berezin-type transform `S_t μ` and its `L^p(dλ_n)` norm.

use serde::Serialize;

use super::AtomicMeasure;
use crate::error::{Error, Result};
use crate::geometry::{inner, Anchor, InvariantQuadrature, Lattice, Point, C64};

/// Decay rate below which shell contributions count as non-decaying.
pub(crate) const DIVERGENCE_RATE: f64 = 0.1;

/// Most atoms used as importance-sampling anchors.
const MAX_ANCHORS: usize = 256;

/// `t_p = max(n/p − n, 0)`.
pub fn t_p(n: usize, p: f64) -> f64 {
    (n as f64 / p - n as f64).max(0.0)
}

/// `S_t μ(w) = (1−|w|²)^{n+t} Σ c_j |1−⟨z_j,w⟩|^{−(2n+t)}`.
pub fn berezin_st(mu: &AtomicMeasure, t: f64, w: &Point) -> f64 {
    berezin_raw(mu, t, w.coords(), w.norm_sq())
}

fn berezin_raw(mu: &AtomicMeasure, t: f64, w: &[C64], w_sq: f64) -> f64 {
    let n = mu.dim() as f64;
    let one = C64::new(1.0, 0.0);
    let e = -(2.0 * n + t) / 2.0;
    let s: f64 = mu
        .atoms()
        .iter()
        .map(|a| a.c * (one - inner(a.z.coords(), w)).norm_sqr().powf(e))
        .sum();
    (1.0 - w_sq).powf(n + t) * s
}

#[derive(Clone, Debug, Serialize)]
pub struct StNormReport {
    pub p: f64,
    pub t: f64,
    /// `‖S_t μ‖_{L^p(λ_n)}`.
    pub norm: f64,
    /// `∫ (S_t μ)^p dλ_n`.
    pub integral: f64,
    pub std_error: f64,
    pub shell_contributions: Vec<f64>,
    /// Integral at the base and doubled sample budgets.
    pub refinement_trace: Vec<f64>,
    /// Fitted geometric decay rate of the outer shell contributions.
    pub decay_rate: f64,
    pub divergence_warning: bool,
}

/// Selection weights for anchors: `(c_j (1−|z_j|²)^{−n})^p`, largest first.
pub(crate) fn measure_anchors(mu: &AtomicMeasure, p: f64) -> Vec<Anchor> {
    let n = mu.dim() as i32;
    let mut a: Vec<Anchor> = mu
        .atoms()
        .iter()
        .map(|at| Anchor {
            point: at.z.clone(),
            weight: (at.c / (1.0 - at.z.norm_sq()).powi(n)).powf(p),
        })
        .collect();
    a.sort_by(|x, y| y.weight.total_cmp(&x.weight));
    a.truncate(MAX_ANCHORS);
    a
}

/// Anchor concentration `κ` matched to an integrand decaying like
/// `(1−|φ_a(w)|²)^{decay}` in `dλ_n`.
pub(crate) fn anchor_kappa(n: usize, decay: f64) -> f64 {
    (decay - n as f64 - 1.0 - 0.5).clamp(-0.5, 8.0)
}

/// Geometric decay rate of shell contributions: minus the least-squares
/// slope of `log2 c_j` over the outer half of the shells with `c_j > 0`.
pub(crate) fn shell_decay_rate(contrib: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = contrib
        .iter()
        .enumerate()
        .skip(contrib.len() / 2)
        .filter(|(_, &c)| c > 0.0)
        .map(|(j, &c)| (j as f64, c.log2()))
        .collect();
    if pts.len() < 3 {
        return f64::INFINITY;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    -sxy / sxx
}

/// `‖S_t μ‖_{L^p(λ_n)}` by mixture importance sampling around the atoms.
pub fn st_lambda_norm(
    mu: &AtomicMeasure,
    t: f64,
    p: f64,
    quad: &InvariantQuadrature,
) -> Result<StNormReport> {
    let n = mu.dim();
    if !(p > 0.0) {
        return Err(Error::Input(format!("exponent must be positive, got {p}")));
    }
    let tp = t_p(n, p);
    if !(t > tp) {
        return Err(Error::Parameter(format!(
            "need t > t_p = {tp} for p = {p}, got t = {t}"
        )));
    }
    if mu.is_empty() {
        return Ok(StNormReport {
            p,
            t,
            norm: 0.0,
            integral: 0.0,
            std_error: 0.0,
            shell_contributions: vec![0.0; quad.shells],
            refinement_trace: vec![0.0, 0.0],
            decay_rate: f64::INFINITY,
            divergence_warning: false,
        });
    }
    let anchors = measure_anchors(mu, p);
    let kappa = anchor_kappa(n, (n as f64 + t) * p);
    let f = |w: &Point| berezin_raw(mu, t, w.coords(), w.norm_sq()).powf(p);
    let base = quad.integrate_lambda(n, &anchors, kappa, f);
    let fine = quad.refined().integrate_lambda(n, &anchors, kappa, f);
    let decay_rate = shell_decay_rate(&fine.shell_contributions);
    let divergence_warning = decay_rate < DIVERGENCE_RATE;
    if divergence_warning {
        log::warn!(
            "S_tμ shell contributions do not decay (rate {decay_rate:.3}); integral may diverge"
        );
    }
    Ok(StNormReport {
        p,
        t,
        norm: fine.value.max(0.0).powf(1.0 / p),
        integral: fine.value,
        std_error: fine.std_error,
        shell_contributions: fine.shell_contributions,
        refinement_trace: vec![base.value, fine.value],
        decay_rate,
        divergence_warning,
    })
}

/// `(1−|z|²)^s ∫ (1−|w|²)^t |1−⟨z,w⟩|^{−(n+1+t+s)} dv(w)`, which stays
/// bounded as `|z| → 1` for `t > −1`, `s > 0`.
pub fn forelli_rudin_integral(
    z: &Point,
    t: f64,
    s: f64,
    quad: &InvariantQuadrature,
) -> Result<(f64, f64)> {
    if !(t > -1.0 && s > 0.0) {
        return Err(Error::Parameter(format!(
            "need t > −1 and s > 0, got t = {t}, s = {s}"
        )));
    }
    let n = z.dim();
    let nf = n as f64;
    let one = C64::new(1.0, 0.0);
    let e = -(nf + 1.0 + t + s) / 2.0;
    let anchors = [Anchor {
        point: z.clone(),
        weight: 1.0,
    }];
    // In dλ the integrand near z behaves like (1−|φ_z(w)|²)^{n+1+t}.
    let kappa = anchor_kappa(n, nf + 1.0 + t);
    let f = |w: &Point| {
        let q = 1.0 - w.norm_sq();
        q.powf(t + nf + 1.0) * (one - inner(z.coords(), w.coords())).norm_sqr().powf(e)
    };
    let est = quad.integrate_lambda(n, &anchors, kappa, f);
    let scale = (1.0 - z.norm_sq()).powf(s);
    Ok((scale * est.value, scale * est.std_error))
}

/// `(1−|z|²)^{s−t} Σ_k (1−|a_k|²)^t |1−⟨z,a_k⟩|^{−s}` over the lattice
/// centers, bounded in `z` for separated sequences when `n < t < s`.
pub fn discrete_forelli_rudin(lattice: &Lattice, z: &Point, t: f64, s: f64) -> Result<f64> {
    let nf = lattice.dim as f64;
    if z.dim() != lattice.dim {
        return Err(Error::Input("point and lattice dimensions differ".into()));
    }
    if !(nf < t && t < s) {
        return Err(Error::Parameter(format!(
            "need n < t < s, got n = {nf}, t = {t}, s = {s}"
        )));
    }
    let one = C64::new(1.0, 0.0);
    let sum: f64 = lattice
        .centers
        .iter()
        .map(|a| {
            (1.0 - a.norm_sq()).powf(t) * (one - inner(z.coords(), a.coords())).norm().powf(-s)
        })
        .sum();
    Ok((1.0 - z.norm_sq()).powf(s - t) * sum)
}

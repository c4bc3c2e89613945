//! Hardy norms, admissible maximal functions and area functions.

use rayon::prelude::*;
use serde::Serialize;

use super::{Direction, FracDerivParams, HoloFunction};
use crate::error::{Error, Result};
use crate::geometry::{
    approach_region_nodes, mean_and_se, BoundaryPoint, RegionGrid, SphereSample, C64,
};

/// Values beyond this are treated as overflow.
const OVERFLOW_GUARD: f64 = 1e300;

/// Radius ladder depth: `r_j = 1 − 2^{−j}`, `j ≤ 12`.
pub const LADDER_DEPTH: u32 = 12;

#[derive(Clone, Debug, Serialize)]
pub struct HardyNorm {
    pub value: f64,
    pub std_error: f64,
    /// `(r, M_p(f, r))` along the ladder, ending at `r = 1`.
    pub ladder: Vec<(f64, f64)>,
    pub divergent: bool,
}

fn lp_on_circle(f: &HoloFunction, p: f64, r: f64, sphere: &SphereSample) -> (f64, f64) {
    let vals: Vec<f64> = sphere
        .points
        .par_iter()
        .map(|z| {
            let w: Vec<C64> = z.coords().iter().map(|c| c * r).collect();
            f.eval_unchecked(&w).norm().powf(p)
        })
        .collect();
    let (m, se) = mean_and_se(&vals);
    if !(m > 0.0) {
        return (0.0, 0.0);
    }
    let v = m.powf(1.0 / p);
    // Delta method for m ↦ m^{1/p}.
    (v, se * v / (p * m))
}

/// `‖f‖_{H^p}` from the boundary values. Members of the function class are
/// holomorphic past the sphere, so the integral means increase to the
/// `r = 1` value.
pub fn boundary_lp_norm(f: &HoloFunction, p: f64, sphere: &SphereSample) -> (f64, f64) {
    lp_on_circle(f, p, 1.0, sphere)
}

/// `sup_r M_p(f, r)` over `r ∈ {1 − 2^{−j}} ∪ {1}`.
pub fn hardy_norm(f: &HoloFunction, p: f64, sphere: &SphereSample) -> Result<HardyNorm> {
    if !(p > 0.0) {
        return Err(Error::Input(format!(
            "Hardy exponent must be positive, got {p}"
        )));
    }
    if sphere.dim() != f.dim() {
        return Err(Error::Input("sphere sample dimension mismatch".into()));
    }
    let mut ladder = Vec::new();
    let mut best = (0.0, 0.0);
    let mut divergent = false;
    let radii = (1..=LADDER_DEPTH)
        .map(|j| 1.0 - 0.5f64.powi(j as i32))
        .chain(std::iter::once(1.0));
    for r in radii {
        let (v, se) = lp_on_circle(f, p, r, sphere);
        if !v.is_finite() || v > OVERFLOW_GUARD {
            divergent = true;
            ladder.push((r, f64::INFINITY));
            break;
        }
        ladder.push((r, v));
        if v >= best.0 {
            best = (v, se);
        }
    }
    if divergent {
        return Ok(HardyNorm {
            value: f64::INFINITY,
            std_error: f64::INFINITY,
            ladder,
            divergent,
        });
    }
    Ok(HardyNorm {
        value: best.0,
        std_error: best.1,
        ladder,
        divergent,
    })
}

/// `f*(ζ) = sup_{Γ_γ(ζ)} |f|` over the region grid, truncated at `|z| ≤ 1 − ε`.
pub fn maximal_fn(
    f: &HoloFunction,
    zeta: &BoundaryPoint,
    gamma: f64,
    grid: &RegionGrid,
) -> Result<f64> {
    if zeta.dim() != f.dim() {
        return Err(Error::Input("boundary point dimension mismatch".into()));
    }
    let nodes = approach_region_nodes(zeta, gamma, grid)?;
    Ok(nodes
        .iter()
        .map(|nd| f.eval_unchecked(nd.point.coords()).norm())
        .fold(0.0, f64::max))
}

/// `‖f*‖_{L^p(σ)}` with standard error.
pub fn maximal_fn_lp(
    f: &HoloFunction,
    p: f64,
    gamma: f64,
    sphere: &SphereSample,
    grid: &RegionGrid,
) -> Result<(f64, f64)> {
    let vals = sphere
        .points
        .par_iter()
        .map(|z| maximal_fn(f, z, gamma, grid).map(|v| v.powf(p)))
        .collect::<Result<Vec<_>>>()?;
    Ok(pth_root(mean_and_se(&vals), p))
}

fn pth_root((m, se): (f64, f64), p: f64) -> (f64, f64) {
    if !(m > 0.0) {
        return (0.0, 0.0);
    }
    let v = m.powf(1.0 / p);
    (v, se * v / (p * m))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AreaKind {
    /// `(∫_Γ |Rf|² (1−|z|²)² dλ_n)^{1/2}`.
    Classical,
    /// `(∫_Γ |R^{s,t} f|² (1−|z|²)^{2t} dλ_n)^{1/2}`, `s ≥ −1`, `t > 0`.
    Fractional { s: f64, t: f64 },
}

fn area_integrand(f: &HoloFunction, kind: AreaKind) -> Result<(HoloFunction, f64)> {
    match kind {
        AreaKind::Classical => Ok((f.radial_derivative(), 1.0)),
        AreaKind::Fractional { s, t } => {
            if !(t > 0.0) {
                return Err(Error::Input(format!("area function needs t > 0, got {t}")));
            }
            let p = FracDerivParams::new(s, t)?;
            Ok((f.frac_deriv(p, Direction::Raise)?, t))
        }
    }
}

fn area_with(
    g: &HoloFunction,
    t: f64,
    zeta: &BoundaryPoint,
    gamma: f64,
    grid: &RegionGrid,
) -> Result<f64> {
    let n = g.dim() as f64;
    let nodes = approach_region_nodes(zeta, gamma, grid)?;
    let e = 2.0 * t - n - 1.0;
    let s: f64 = nodes
        .iter()
        .map(|nd| {
            nd.weight
                * g.eval_unchecked(nd.point.coords()).norm_sqr()
                * (1.0 - nd.point.norm_sq()).powf(e)
        })
        .sum();
    Ok(s.sqrt())
}

/// Area function at `ζ` with the `dλ_n` weight, truncated at `ε = grid.eps`.
pub fn area_fn(
    f: &HoloFunction,
    zeta: &BoundaryPoint,
    gamma: f64,
    kind: AreaKind,
    grid: &RegionGrid,
) -> Result<f64> {
    if zeta.dim() != f.dim() {
        return Err(Error::Input("boundary point dimension mismatch".into()));
    }
    let (g, t) = area_integrand(f, kind)?;
    area_with(&g, t, zeta, gamma, grid)
}

/// `‖A f‖_{L^p(σ)}` with standard error.
pub fn area_fn_lp(
    f: &HoloFunction,
    p: f64,
    gamma: f64,
    kind: AreaKind,
    sphere: &SphereSample,
    grid: &RegionGrid,
) -> Result<(f64, f64)> {
    let (g, t) = area_integrand(f, kind)?;
    let vals = sphere
        .points
        .par_iter()
        .map(|z| area_with(&g, t, z, gamma, grid).map(|v| v.powf(p)))
        .collect::<Result<Vec<_>>>()?;
    Ok(pth_root(mean_and_se(&vals), p))
}

/// Truncation study of the area function at `4ε, 2ε, ε`.
#[derive(Clone, Debug, Serialize)]
pub struct AreaReport {
    pub eps: [f64; 3],
    pub values: [f64; 3],
    /// Aitken extrapolation to `ε → 0` (the finest value when the sequence is
    /// not geometric).
    pub extrapolated: f64,
    /// `|A(ε) − A(2ε)|`, the Cauchy gap.
    pub cauchy_gap: f64,
}

pub fn area_fn_report(
    f: &HoloFunction,
    zeta: &BoundaryPoint,
    gamma: f64,
    kind: AreaKind,
    grid: &RegionGrid,
) -> Result<AreaReport> {
    let eps = [4.0 * grid.eps, 2.0 * grid.eps, grid.eps];
    let mut values = [0.0; 3];
    for (v, e) in values.iter_mut().zip(eps) {
        *v = area_fn(f, zeta, gamma, kind, &grid.with_eps(e))?;
    }
    let (x0, x1, x2) = (values[0], values[1], values[2]);
    let d1 = x1 - x0;
    let d2 = x2 - x1;
    let denom = d2 - d1;
    let extrapolated = if denom.abs() > 1e-300 && d2.abs() < d1.abs() {
        x2 - d2 * d2 / denom
    } else {
        x2
    };
    Ok(AreaReport {
        eps,
        values,
        extrapolated,
        cauchy_gap: d2.abs(),
    })
}

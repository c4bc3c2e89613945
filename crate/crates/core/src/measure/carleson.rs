//! Carleson constants (box and kernel forms) and vanishing profiles.

use rayon::prelude::*;
use serde::Serialize;

use super::AtomicMeasure;
use crate::error::{Error, Result};
use crate::geometry::{inner, sample_sphere, BoundaryPoint, SphereSample, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CarlesonMethod {
    /// `sup μ(B_δ(ζ)) / δ^{ns}`.
    Box,
    /// `sup_a (1−|a|²)^t ∫ |1−⟨a,z⟩|^{−(ns+t)} dμ(z)`.
    Kernel { t: f64 },
}

/// Boundary grid for the Carleson sups; `refinements` doublings of
/// `sphere_size` are traced.
#[derive(Clone, Debug, Serialize)]
pub struct CarlesonGrid {
    pub sphere_size: usize,
    pub refinements: usize,
    /// Radial levels `1 − 2^{−l}`, `l < radial_levels`, for kernel centers.
    pub radial_levels: usize,
    pub seed: u64,
}

impl Default for CarlesonGrid {
    fn default() -> Self {
        CarlesonGrid {
            sphere_size: 64,
            refinements: 3,
            radial_levels: 16,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CarlesonReport {
    pub s: f64,
    pub value: f64,
    pub method: CarlesonMethod,
    pub grid_spec: String,
    pub refinement_trace: Vec<f64>,
}

impl CarlesonReport {
    pub fn csv_header() -> &'static str {
        "method,t,s,level,value"
    }

    pub fn csv_rows(&self) -> Vec<String> {
        let (m, t) = match self.method {
            CarlesonMethod::Box => ("box", String::new()),
            CarlesonMethod::Kernel { t } => ("kernel", format!("{t}")),
        };
        self.refinement_trace
            .iter()
            .enumerate()
            .map(|(l, v)| format!("{m},{t},{},{l},{v:.17e}", self.s))
            .collect()
    }
}

/// Sphere points `z_j/|z_j|` for atoms off the origin.
pub fn profile_directions(mu: &AtomicMeasure) -> Vec<BoundaryPoint> {
    mu.atoms()
        .iter()
        .filter(|a| !a.z.is_origin())
        .map(|a| BoundaryPoint::normalize(a.z.coords().to_vec()).expect("nonzero"))
        .collect()
}

/// Exact `sup_{δ ∈ (0,2]} μ(B_δ(ζ))/δ^{ns}`: with `d_j = |1−⟨z_j,ζ⟩|`
/// sorted, the sup is `max_j (Σ_{d_i ≤ d_j} c_i) / d_j^{ns}`, approached as
/// `δ ↓ d_j`.
fn box_sup_at(mu: &AtomicMeasure, zeta: &BoundaryPoint, ns: f64) -> f64 {
    let one = C64::new(1.0, 0.0);
    let mut d: Vec<(f64, f64)> = mu
        .atoms()
        .iter()
        .map(|a| ((one - inner(a.z.coords(), zeta.coords())).norm(), a.c))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cum = 0.0;
    let mut best = 0.0f64;
    let mut i = 0;
    while i < d.len() {
        let dj = d[i].0;
        while i < d.len() && d[i].0 == dj {
            cum += d[i].1;
            i += 1;
        }
        if dj > 0.0 {
            best = best.max(cum / dj.powf(ns));
        }
    }
    best
}

fn kernel_value(mu: &AtomicMeasure, a: &[C64], a_sq: f64, e: f64, t: f64) -> f64 {
    let one = C64::new(1.0, 0.0);
    let s: f64 = mu
        .atoms()
        .iter()
        .map(|at| at.c * (one - inner(a, at.z.coords())).norm().powf(-e))
        .sum();
    (1.0 - a_sq).powf(t) * s
}

fn kernel_centers(mu: &AtomicMeasure, sphere: &SphereSample, levels: usize) -> Vec<Vec<C64>> {
    let n = mu.dim();
    let mut out: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]];
    out.extend(mu.atoms().iter().map(|a| a.z.coords().to_vec()));
    let dirs: Vec<Vec<C64>> = sphere
        .points
        .iter()
        .map(|p| p.coords().to_vec())
        .chain(
            profile_directions(mu)
                .into_iter()
                .map(|p| p.coords().to_vec()),
        )
        .collect();
    for l in 1..levels {
        let r = 1.0 - 0.5f64.powi(l as i32);
        for d in &dirs {
            out.push(d.iter().map(|c| c * r).collect());
        }
    }
    out
}

pub fn carleson_constant(
    mu: &AtomicMeasure,
    s: f64,
    method: CarlesonMethod,
    grid: &CarlesonGrid,
) -> Result<CarlesonReport> {
    if !(s >= 1.0) {
        return Err(Error::Input(format!(
            "Carleson exponent must satisfy s ≥ 1, got {s}"
        )));
    }
    if grid.sphere_size == 0 {
        return Err(Error::Input("empty Carleson grid".into()));
    }
    let n = mu.dim();
    let ns = n as f64 * s;
    let finest = grid.sphere_size << grid.refinements;
    let all = sample_sphere(n, finest, grid.seed);
    let mut trace = Vec::with_capacity(grid.refinements + 1);
    match method {
        CarlesonMethod::Box => {
            let extra = profile_directions(mu);
            let base = extra
                .par_iter()
                .map(|z| box_sup_at(mu, z, ns))
                .reduce(|| 0.0, f64::max);
            let vals: Vec<f64> = all
                .points
                .par_iter()
                .map(|z| box_sup_at(mu, z, ns))
                .collect();
            for k in 0..=grid.refinements {
                let m = grid.sphere_size << k;
                trace.push(vals[..m].iter().copied().fold(base, f64::max));
            }
        }
        CarlesonMethod::Kernel { t } => {
            if !(t > 0.0) {
                return Err(Error::Input(format!("kernel test needs t > 0, got {t}")));
            }
            let e = ns + t;
            let mut best = 0.0f64;
            let mut prev = 0;
            for k in 0..=grid.refinements {
                let m = grid.sphere_size << k;
                let sub = SphereSample {
                    points: all.points[prev..m].to_vec(),
                };
                let centers = if k == 0 {
                    kernel_centers(mu, &sub, grid.radial_levels)
                } else {
                    let mut c = Vec::new();
                    for l in 1..grid.radial_levels {
                        let r = 1.0 - 0.5f64.powi(l as i32);
                        c.extend(
                            sub.points
                                .iter()
                                .map(|p| p.coords().iter().map(|x| x * r).collect::<Vec<_>>()),
                        );
                    }
                    c
                };
                let v = centers
                    .par_iter()
                    .map(|a| kernel_value(mu, a, crate::geometry::norm_sq(a), e, t))
                    .reduce(|| 0.0, f64::max);
                best = best.max(v);
                trace.push(best);
                prev = m;
            }
        }
    }
    Ok(CarlesonReport {
        s,
        value: *trace.last().expect("nonempty trace"),
        method,
        grid_spec: format!(
            "sphere={}x2^{} radial_levels={} seed={} +atom directions",
            grid.sphere_size, grid.refinements, grid.radial_levels, grid.seed
        ),
        refinement_trace: trace,
    })
}

/// `δ_i = 2·2^{−i}` down to `min(2^{−4}, 2·min_j(1−|z_j|))`.
pub fn resolution_ladder(mu: &AtomicMeasure) -> Vec<f64> {
    let closest = mu
        .atoms()
        .iter()
        .map(|a| 1.0 - a.z.norm())
        .fold(1.0f64, f64::min);
    let floor = (2.0 * closest).clamp(1e-12, 1.0 / 16.0);
    let mut out = Vec::new();
    let mut d = 2.0;
    while d >= floor * (1.0 - 1e-12) {
        out.push(d);
        d *= 0.5;
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct VanishingProfile {
    pub s: f64,
    /// `(δ, sup_ζ μ(B_δ(ζ))/δ^{ns})`, δ decreasing.
    pub points: Vec<(f64, f64)>,
    /// Log-log slope of the profile over the smaller half of the ladder.
    pub slope: f64,
    pub vanishing: bool,
}

/// Slope threshold separating vanishing decay from a flat profile.
pub const VANISHING_SLOPE: f64 = 0.2;

pub fn vanishing_profile(
    mu: &AtomicMeasure,
    s: f64,
    delta_grid: &[f64],
    zeta_grid: &[BoundaryPoint],
) -> Result<VanishingProfile> {
    if delta_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Input("δ grid must be strictly decreasing".into()));
    }
    if delta_grid.iter().any(|&d| !(d > 0.0 && d <= 2.0)) {
        return Err(Error::Input("δ values must lie in (0, 2]".into()));
    }
    let ns = mu.dim() as f64 * s;
    let one = C64::new(1.0, 0.0);
    let points: Vec<(f64, f64)> = delta_grid
        .par_iter()
        .map(|&delta| {
            let v = zeta_grid
                .iter()
                .map(|z| {
                    mu.atoms()
                        .iter()
                        .filter(|a| (one - inner(a.z.coords(), z.coords())).norm() < delta)
                        .map(|a| a.c)
                        .sum::<f64>()
                })
                .fold(0.0, f64::max);
            (delta, v / delta.powf(ns))
        })
        .collect();
    let half = &points[points.len() / 2..];
    let slope = loglog_slope(half);
    let last_zero = points.last().is_none_or(|p| p.1 == 0.0);
    Ok(VanishingProfile {
        s,
        vanishing: last_zero || slope >= VANISHING_SLOPE,
        slope,
        points,
    })
}

/// Least-squares slope of `ln v` against `ln δ` over positive values.
fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let xs: Vec<(f64, f64)> = pts
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    if xs.len() < 2 {
        return f64::INFINITY;
    }
    let m = xs.len() as f64;
    let mx = xs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = xs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = xs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

//! Atomic measures on the ball and the quantities attached to them.

mod berezin;
mod carleson;

pub use berezin::{
    berezin_st, discrete_forelli_rudin, forelli_rudin_integral, st_lambda_norm, t_p, StNormReport,
};
pub(crate) use berezin::{shell_decay_rate, DIVERGENCE_RATE};
pub use carleson::{
    carleson_constant, profile_directions, resolution_ladder, vanishing_profile, CarlesonGrid,
    CarlesonMethod, CarlesonReport, VanishingProfile,
};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    bergman_raw, coords_from_flat, coords_to_flat, mean_and_se, BoundaryPoint, Lattice, Point,
    RegionSpec, SphereSample,
};

/// Atoms closer than this (Euclidean) are merged.
pub const MERGE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureAtom {
    pub z: Point,
    pub c: f64,
}

/// `μ = Σ_j c_j δ_{z_j}`, `c_j > 0`, `z_j ∈ B_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    dim: usize,
    atoms: Vec<MeasureAtom>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomFile {
    pub z: Vec<f64>,
    pub c: f64,
}

/// JSON form `{dim, atoms: [{z: [re, im, ...], c}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureFile {
    pub dim: usize,
    pub atoms: Vec<AtomFile>,
}

impl AtomicMeasure {
    pub fn empty(dim: usize) -> Self {
        AtomicMeasure {
            dim,
            atoms: Vec::new(),
        }
    }

    pub fn new(dim: usize, atoms: Vec<(Point, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("dimension must be positive".into()));
        }
        let mut out: Vec<MeasureAtom> = Vec::with_capacity(atoms.len());
        for (z, c) in atoms {
            if z.dim() != dim {
                return Err(Error::Input(format!(
                    "atom has dimension {}, measure has {dim}",
                    z.dim()
                )));
            }
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::Input(format!(
                    "atom weights must be positive and finite, got {c}"
                )));
            }
            let dup = out.iter_mut().find(|a| {
                a.z.coords()
                    .iter()
                    .zip(z.coords())
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
                    < MERGE_TOL
            });
            match dup {
                Some(a) => a.c += c,
                None => out.push(MeasureAtom { z, c }),
            }
        }
        Ok(AtomicMeasure { dim, atoms: out })
    }

    /// `c · δ_z`.
    pub fn dirac(z: Point, c: f64) -> Result<Self> {
        Self::new(z.dim(), vec![(z, c)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[MeasureAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.c).sum()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::Input(format!("scale must be positive, got {c}")));
        }
        Ok(AtomicMeasure {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|a| MeasureAtom {
                    z: a.z.clone(),
                    c: a.c * c,
                })
                .collect(),
        })
    }

    pub fn union(&self, other: &AtomicMeasure) -> Result<Self> {
        let all = self
            .atoms
            .iter()
            .chain(&other.atoms)
            .map(|a| (a.z.clone(), a.c))
            .collect();
        Self::new(self.dim, all)
    }

    /// `μ` restricted to `|z| ≤ s`.
    pub fn restricted(&self, s: f64) -> Self {
        AtomicMeasure {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .filter(|a| a.z.norm() <= s)
                .cloned()
                .collect(),
        }
    }

    /// `Σ c_j (1−|z_j|²)^{−n}`, the trace of `Q_μ`.
    pub fn trace(&self) -> f64 {
        let n = self.dim as i32;
        self.atoms
            .iter()
            .map(|a| a.c / (1.0 - a.z.norm_sq()).powi(n))
            .sum()
    }

    pub fn to_file(&self) -> MeasureFile {
        MeasureFile {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomFile {
                    z: coords_to_flat(a.z.coords()),
                    c: a.c,
                })
                .collect(),
        }
    }

    pub fn from_file(f: &MeasureFile) -> Result<Self> {
        let atoms = f
            .atoms
            .iter()
            .map(|a| Ok((Point::new(coords_from_flat(&a.z)?)?, a.c)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(f.dim, atoms)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_file(&serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_file())?)?;
        Ok(())
    }
}

/// `μ(E) = Σ c_j` over atoms in `E`.
pub fn measure_of_region(mu: &AtomicMeasure, region: &RegionSpec) -> f64 {
    mu.atoms
        .iter()
        .filter(|a| region.contains(a.z.coords()))
        .map(|a| a.c)
        .sum()
}

/// `μ̃(ζ) = Σ_{z_j ∈ Γ_γ(ζ)} c_j (1−|z_j|²)^{−n}`.
pub fn tilde_mu(mu: &AtomicMeasure, zeta: &BoundaryPoint, gamma: f64) -> f64 {
    let n = mu.dim as i32;
    let one = crate::geometry::C64::new(1.0, 0.0);
    mu.atoms
        .iter()
        .filter(|a| {
            let q = 1.0 - a.z.norm_sq();
            (one - crate::geometry::inner(a.z.coords(), zeta.coords())).norm() < 0.5 * gamma * q
        })
        .map(|a| a.c / (1.0 - a.z.norm_sq()).powi(n))
        .sum()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LrNorm {
    pub value: f64,
    pub std_error: f64,
}

/// `‖μ̃‖_{L^r(σ)}` over the sphere sample.
pub fn tilde_mu_lr_norm(
    mu: &AtomicMeasure,
    r: f64,
    gamma: f64,
    sphere: &SphereSample,
) -> Result<LrNorm> {
    if !(r >= 1.0) {
        return Err(Error::Input(format!("need r ≥ 1, got {r}")));
    }
    if !(gamma > 1.0) {
        return Err(Error::Input(format!(
            "aperture must satisfy γ > 1, got {gamma}"
        )));
    }
    let vals: Vec<f64> = sphere
        .points
        .par_iter()
        .map(|z| tilde_mu(mu, z, gamma).powf(r))
        .collect();
    let (m, se) = mean_and_se(&vals);
    if !(m > 0.0) {
        return Ok(LrNorm {
            value: 0.0,
            std_error: 0.0,
        });
    }
    let v = m.powf(1.0 / r);
    Ok(LrNorm {
        value: v,
        std_error: se * v / (r * m),
    })
}

/// `Σ_k (μ(D(a_k, r)) / (1−|a_k|²)^n)^p`.
pub fn lattice_sum(mu: &AtomicMeasure, lattice: &Lattice, p: f64) -> Result<f64> {
    if lattice.dim != mu.dim && !lattice.is_empty() {
        return Err(Error::Input("lattice and measure dimensions differ".into()));
    }
    if !(p > 0.0) {
        return Err(Error::Input(format!("exponent must be positive, got {p}")));
    }
    let n = mu.dim as i32;
    let terms: Vec<f64> = lattice
        .centers
        .par_iter()
        .map(|a| {
            let m: f64 = mu
                .atoms
                .iter()
                .filter(|at| bergman_raw(a.coords(), at.z.coords()) < lattice.r)
                .map(|at| at.c)
                .sum();
            if m == 0.0 {
                0.0
            } else {
                (m / (1.0 - a.norm_sq()).powi(n)).powf(p)
            }
        })
        .collect();
    Ok(terms.iter().sum())
}

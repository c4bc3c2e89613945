//! Tent spaces of sequences indexed by lattice centers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{inner, BoundaryPoint, Lattice, SphereSample, C64};
use crate::holo::{HoloFunction, KernelAtom};

/// Values `λ_k` aligned with the centers of a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct TentSequence {
    pub values: Vec<C64>,
}

impl TentSequence {
    pub fn new(values: Vec<C64>, lattice: &Lattice) -> Result<Self> {
        let s = TentSequence { values };
        s.check(lattice)?;
        Ok(s)
    }

    pub fn zeros(lattice: &Lattice) -> Self {
        TentSequence {
            values: vec![C64::new(0.0, 0.0); lattice.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: C64) -> Self {
        TentSequence {
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// JSON form: an array of `[re, im]` pairs in lattice order.
    pub fn to_file(&self) -> Vec<[f64; 2]> {
        self.values.iter().map(|v| [v.re, v.im]).collect()
    }

    pub fn from_file(pairs: &[[f64; 2]], lattice: &Lattice) -> Result<Self> {
        Self::new(
            pairs.iter().map(|p| C64::new(p[0], p[1])).collect(),
            lattice,
        )
    }

    fn check(&self, lattice: &Lattice) -> Result<()> {
        if self.values.len() != lattice.len() {
            return Err(Error::Input(format!(
                "sequence has {} values, lattice has {} centers",
                self.values.len(),
                lattice.len()
            )));
        }
        if self
            .values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::Input("non-finite sequence value".into()));
        }
        Ok(())
    }
}

impl Serialize for TentSequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for TentSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(TentSequence {
            values: pairs.into_iter().map(|p| C64::new(p[0], p[1])).collect(),
        })
    }
}

/// Indices of centers inside `Γ_γ(ζ)`.
fn in_region(lattice: &Lattice, zeta: &BoundaryPoint, gamma: f64) -> Vec<usize> {
    let one = C64::new(1.0, 0.0);
    lattice
        .centers
        .iter()
        .enumerate()
        .filter(|(_, a)| {
            (one - inner(a.coords(), zeta.coords())).norm() < 0.5 * gamma * (1.0 - a.norm_sq())
        })
        .map(|(k, _)| k)
        .collect()
}

/// `‖λ‖_{T^p_q}`; `q = ∞` takes the sup over each region.
pub fn tent_norm(
    lambda: &TentSequence,
    lattice: &Lattice,
    p: f64,
    q: f64,
    gamma: f64,
    sphere: &SphereSample,
) -> Result<f64> {
    lambda.check(lattice)?;
    if !(p > 0.0 && p.is_finite()) || !(q > 0.0) {
        return Err(Error::Input(format!(
            "tent exponents must be positive, got p = {p}, q = {q}"
        )));
    }
    if !(gamma > 1.0) {
        return Err(Error::Input(format!(
            "aperture must satisfy γ > 1, got {gamma}"
        )));
    }
    if sphere.dim() != lattice.dim {
        return Err(Error::Input("sphere sample dimension mismatch".into()));
    }
    let rows: Vec<(bool, f64)> = sphere
        .points
        .par_iter()
        .map(|zeta| {
            let idx = in_region(lattice, zeta, gamma);
            let inner_norm = if q.is_infinite() {
                idx.iter()
                    .map(|&k| lambda.values[k].norm())
                    .fold(0.0, f64::max)
            } else {
                idx.iter()
                    .map(|&k| lambda.values[k].norm().powf(q))
                    .sum::<f64>()
                    .powf(1.0 / q)
            };
            (!idx.is_empty(), inner_norm.powf(p))
        })
        .collect();
    if !rows.iter().any(|r| r.0) {
        log::warn!("no lattice center lies in any sampled approach region; tent norm is 0");
        return Ok(0.0);
    }
    let mean = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;
    Ok(mean.powf(1.0 / p))
}

/// `⟨λ, η⟩ = Σ_k λ_k conj(η_k) (1−|a_k|²)^n`.
pub fn tent_pairing(lambda: &TentSequence, eta: &TentSequence, lattice: &Lattice) -> Result<C64> {
    lambda.check(lattice)?;
    eta.check(lattice)?;
    let n = lattice.dim as i32;
    Ok(lambda
        .values
        .iter()
        .zip(&eta.values)
        .zip(&lattice.centers)
        .map(|((l, e), a)| l * e.conj() * (1.0 - a.norm_sq()).powi(n))
        .sum())
}

/// `T_Z λ(z) = Σ_j λ_j (1−|a_j|²)^b (1−⟨z,a_j⟩)^{−b}`, valid for
/// `b > n·max(1, 2/p)`.
pub fn synthesis(lambda: &TentSequence, lattice: &Lattice, b: f64, p: f64) -> Result<HoloFunction> {
    lambda.check(lattice)?;
    let n = lattice.dim as f64;
    let need = n * (2.0 / p).max(1.0);
    if !(p > 0.0) || !(b > need) {
        return Err(Error::Parameter(format!(
            "synthesis needs b > n·max(1, 2/p) = {need}, got b = {b}"
        )));
    }
    let atoms = lambda
        .values
        .iter()
        .zip(&lattice.centers)
        .map(|(l, a)| KernelAtom {
            coeff: l * (1.0 - a.norm_sq()).powf(b),
            base: a.clone(),
            exponent: b,
        })
        .collect();
    HoloFunction::from_parts(lattice.dim, Default::default(), atoms)
}

//! Holomorphic functions as polynomial + kernel-power atoms.
//!
//! The class is closed under the radial derivative `R` and the fractional
//! operators `R^{α,t}`, `R_{α,t}`, and every member is holomorphic on a
//! neighborhood of the closed ball because atom bases lie strictly inside.

mod norms;

pub use norms::{
    area_fn, area_fn_lp, area_fn_report, boundary_lp_norm, hardy_norm, maximal_fn, maximal_fn_lp,
    AreaKind, AreaReport, HardyNorm,
};

use std::collections::BTreeMap;

use crate::special::ln_gamma;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{coords_from_flat, coords_to_flat, inner, norm_sq, Point, C64};

/// Largest exponent allowed per variable.
pub const MAX_DEGREE: u32 = 64;

/// Atoms and monomials with `|c|` below this are dropped.
pub const PRUNE_TOL: f64 = 1e-15;

/// `coeff · (1 − ⟨z, base⟩)^{−exponent}`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelAtom {
    pub coeff: C64,
    pub base: Point,
    pub exponent: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HoloFunction {
    dim: usize,
    poly: BTreeMap<Vec<u32>, C64>,
    atoms: Vec<KernelAtom>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FracDerivParams {
    pub alpha: f64,
    pub t: f64,
}

impl FracDerivParams {
    pub fn new(alpha: f64, t: f64) -> Result<Self> {
        if !(alpha >= -1.0) || !(t >= 0.0) || !alpha.is_finite() || !t.is_finite() {
            return Err(Error::Input(format!(
                "need α ≥ −1 and t ≥ 0, got α = {alpha}, t = {t}"
            )));
        }
        Ok(FracDerivParams { alpha, t })
    }

    /// Kernel exponent `n + 1 + α` that `R^{α,t}` acts on.
    pub fn base_exponent(&self, n: usize) -> f64 {
        n as f64 + 1.0 + self.alpha
    }

    /// `m_k = Γ(s)Γ(s+t+k) / (Γ(s+t)Γ(s+k))`, `s = n + 1 + α`.
    pub fn multiplier(&self, n: usize, k: u32) -> f64 {
        let s = self.base_exponent(n);
        let k = k as f64;
        (ln_gamma(s) + ln_gamma(s + self.t + k) - ln_gamma(s + self.t) - ln_gamma(s + k)).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `R^{α,t}`.
    Raise,
    /// `R_{α,t}`.
    Lower,
}

const EXPONENT_TOL: f64 = 1e-12;

impl HoloFunction {
    pub fn zero(dim: usize) -> Self {
        HoloFunction {
            dim,
            poly: BTreeMap::new(),
            atoms: Vec::new(),
        }
    }

    pub fn constant(dim: usize, c: C64) -> Self {
        let mut f = Self::zero(dim);
        f.poly.insert(vec![0; dim], c);
        f.canonicalize();
        f
    }

    pub fn monomial(alpha: Vec<u32>, c: C64) -> Result<Self> {
        let dim = alpha.len();
        let mut poly = BTreeMap::new();
        poly.insert(alpha, c);
        Self::from_parts(dim, poly, Vec::new())
    }

    /// `(1 − ⟨z, a⟩)^{−β}`.
    pub fn kernel(a: &Point, beta: f64) -> Result<Self> {
        Self::from_parts(
            a.dim(),
            BTreeMap::new(),
            vec![KernelAtom {
                coeff: C64::new(1.0, 0.0),
                base: a.clone(),
                exponent: beta,
            }],
        )
    }

    /// Szegő kernel `K_a(z) = (1 − ⟨z, a⟩)^{−n}`.
    pub fn szego(a: &Point) -> Self {
        Self::kernel(a, a.dim() as f64).expect("n > 0")
    }

    pub fn from_parts(
        dim: usize,
        poly: BTreeMap<Vec<u32>, C64>,
        atoms: Vec<KernelAtom>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("dimension must be positive".into()));
        }
        for (alpha, c) in &poly {
            if alpha.len() != dim {
                return Err(Error::Input(format!(
                    "multi-index {alpha:?} has wrong length for n = {dim}"
                )));
            }
            if alpha.iter().any(|&a| a > MAX_DEGREE) {
                return Err(Error::Input(format!(
                    "multi-index {alpha:?} exceeds degree cap {MAX_DEGREE}"
                )));
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::Input("non-finite polynomial coefficient".into()));
            }
        }
        for a in &atoms {
            if a.base.dim() != dim {
                return Err(Error::Input("atom base dimension mismatch".into()));
            }
            if !(a.exponent > 0.0) || !a.exponent.is_finite() {
                return Err(Error::Input(format!(
                    "atom exponent must be positive, got {}",
                    a.exponent
                )));
            }
            if !a.coeff.re.is_finite() || !a.coeff.im.is_finite() {
                return Err(Error::Input("non-finite atom coefficient".into()));
            }
        }
        let mut f = HoloFunction { dim, poly, atoms };
        f.canonicalize();
        Ok(f)
    }

    fn canonicalize(&mut self) {
        let mut merged: Vec<KernelAtom> = Vec::with_capacity(self.atoms.len());
        for a in std::mem::take(&mut self.atoms) {
            if a.base.is_origin() {
                *self
                    .poly
                    .entry(vec![0; self.dim])
                    .or_insert(C64::new(0.0, 0.0)) += a.coeff;
                continue;
            }
            match merged
                .iter_mut()
                .find(|m| m.exponent == a.exponent && m.base == a.base)
            {
                Some(m) => m.coeff += a.coeff,
                None => merged.push(a),
            }
        }
        merged.retain(|a| a.coeff.norm() >= PRUNE_TOL);
        self.atoms = merged;
        self.poly.retain(|_, c| *c != C64::new(0.0, 0.0));
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn poly(&self) -> &BTreeMap<Vec<u32>, C64> {
        &self.poly
    }

    pub fn atoms(&self) -> &[KernelAtom] {
        &self.atoms
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_empty() && self.atoms.is_empty()
    }

    pub fn add(&self, other: &HoloFunction) -> Result<HoloFunction> {
        if self.dim != other.dim {
            return Err(Error::Input("dimension mismatch in add".into()));
        }
        let mut poly = self.poly.clone();
        for (k, c) in &other.poly {
            *poly.entry(k.clone()).or_insert(C64::new(0.0, 0.0)) += c;
        }
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        let mut f = HoloFunction {
            dim: self.dim,
            poly,
            atoms,
        };
        f.canonicalize();
        Ok(f)
    }

    pub fn scale(&self, c: C64) -> HoloFunction {
        let mut f = self.clone();
        for v in f.poly.values_mut() {
            *v *= c;
        }
        for a in &mut f.atoms {
            a.coeff *= c;
        }
        f.canonicalize();
        f
    }

    /// Exact value at `z` in the closed ball.
    pub fn eval(&self, z: &[C64]) -> Result<C64> {
        if z.len() != self.dim {
            return Err(Error::Input(format!(
                "point has dimension {}, function has {}",
                z.len(),
                self.dim
            )));
        }
        let ns = norm_sq(z);
        if !(ns <= 1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "evaluation point outside the closed ball (|z|² = {ns})"
            )));
        }
        for a in &self.atoms {
            if (C64::new(1.0, 0.0) - inner(z, a.base.coords())).norm() == 0.0 {
                return Err(Error::Domain("evaluation at a kernel singularity".into()));
            }
        }
        Ok(self.eval_unchecked(z))
    }

    pub fn eval_at(&self, z: &Point) -> C64 {
        self.eval_unchecked(z.coords())
    }

    /// Evaluation without validation; `z` must lie in the closed ball.
    pub(crate) fn eval_unchecked(&self, z: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (alpha, c) in &self.poly {
            let mut m = *c;
            for (zk, &ak) in z.iter().zip(alpha) {
                if ak > 0 {
                    m *= zk.powu(ak);
                }
            }
            acc += m;
        }
        for a in &self.atoms {
            let w = C64::new(1.0, 0.0) - inner(z, a.base.coords());
            acc += a.coeff * (-a.exponent * w.ln()).exp();
        }
        acc
    }

    /// `Rf = Σ z_k ∂f/∂z_k`.
    pub fn radial_derivative(&self) -> HoloFunction {
        let mut poly = BTreeMap::new();
        for (alpha, c) in &self.poly {
            let deg: u32 = alpha.iter().sum();
            if deg > 0 {
                poly.insert(alpha.clone(), c * deg as f64);
            }
        }
        let mut atoms = Vec::with_capacity(2 * self.atoms.len());
        for a in &self.atoms {
            // ⟨z,a⟩ = 1 − (1 − ⟨z,a⟩).
            let cb = a.coeff * a.exponent;
            atoms.push(KernelAtom {
                coeff: cb,
                base: a.base.clone(),
                exponent: a.exponent + 1.0,
            });
            atoms.push(KernelAtom {
                coeff: -cb,
                base: a.base.clone(),
                exponent: a.exponent,
            });
        }
        let mut f = HoloFunction {
            dim: self.dim,
            poly,
            atoms,
        };
        f.canonicalize();
        f
    }

    /// `R^{α,t} f` or `R_{α,t} f`. Kernel atoms must carry the exponent the
    /// operator maps exactly; polynomial parts use the multipliers `m_k`.
    pub fn frac_deriv(
        &self,
        params: FracDerivParams,
        direction: Direction,
    ) -> Result<HoloFunction> {
        let s = params.base_exponent(self.dim);
        let (from, shift) = match direction {
            Direction::Raise => (s, params.t),
            Direction::Lower => (s + params.t, -params.t),
        };
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            if (a.exponent - from).abs() > EXPONENT_TOL * from.max(1.0) {
                return Err(Error::Input(format!(
                    "kernel atom exponent {} incompatible with operator acting on exponent {from}",
                    a.exponent
                )));
            }
            atoms.push(KernelAtom {
                coeff: a.coeff,
                base: a.base.clone(),
                exponent: from + shift,
            });
        }
        let mut poly = BTreeMap::new();
        for (alpha, c) in &self.poly {
            let m = params.multiplier(self.dim, alpha.iter().sum());
            let v = match direction {
                Direction::Raise => c * m,
                Direction::Lower => c / m,
            };
            poly.insert(alpha.clone(), v);
        }
        let mut f = HoloFunction {
            dim: self.dim,
            poly,
            atoms,
        };
        f.canonicalize();
        Ok(f)
    }

    /// First `len` Taylor coefficients (disk only).
    pub fn taylor_coefficients(&self, len: usize) -> Result<Vec<C64>> {
        if self.dim != 1 {
            return Err(Error::Input(
                "Taylor coefficients are only defined here for n = 1".into(),
            ));
        }
        let mut out = vec![C64::new(0.0, 0.0); len];
        for (alpha, c) in &self.poly {
            let k = alpha[0] as usize;
            if k < len {
                out[k] += c;
            }
        }
        for a in &self.atoms {
            // c (1 − z ā)^{−β} = c Σ (β)_k/k! ā^k z^k.
            let abar = a.base.coords()[0].conj();
            let mut term = a.coeff;
            for (k, slot) in out.iter_mut().enumerate() {
                *slot += term;
                term *= abar * ((a.exponent + k as f64) / (k as f64 + 1.0));
            }
        }
        Ok(out)
    }

    /// Exact `⟨f, g⟩_{H²}`.
    pub fn h2_inner_exact(&self, other: &HoloFunction) -> Result<C64> {
        if self.dim != other.dim {
            return Err(Error::Input(
                "dimension mismatch in H² inner product".into(),
            ));
        }
        let n = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for (alpha, c) in &self.poly {
            if let Some(d) = other.poly.get(alpha) {
                acc += c * d.conj() * monomial_norm_sq(n, alpha);
            }
            for b in &other.atoms {
                acc += c * atom_monomial_inner(n, b, alpha).conj();
            }
        }
        for a in &self.atoms {
            for (alpha, d) in &other.poly {
                acc += atom_monomial_inner(n, a, alpha) * d.conj();
            }
            for b in &other.atoms {
                acc += a.coeff * b.coeff.conj() * atom_atom_inner(n, a, b)?;
            }
        }
        Ok(acc)
    }

    pub fn h2_norm_exact(&self) -> Result<f64> {
        Ok(self.h2_inner_exact(self)?.re.max(0.0).sqrt())
    }

    pub fn to_file(&self) -> HoloFile {
        HoloFile {
            poly: self
                .poly
                .iter()
                .map(|(a, c)| PolyTerm {
                    alpha: a.clone(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomTerm {
                    re: a.coeff.re,
                    im: a.coeff.im,
                    a: coords_to_flat(a.base.coords()),
                    beta: a.exponent,
                })
                .collect(),
        }
    }

    pub fn from_file(dim: usize, file: &HoloFile) -> Result<Self> {
        let mut poly = BTreeMap::new();
        for t in &file.poly {
            *poly.entry(t.alpha.clone()).or_insert(C64::new(0.0, 0.0)) += C64::new(t.re, t.im);
        }
        let atoms = file
            .atoms
            .iter()
            .map(|t| {
                Ok(KernelAtom {
                    coeff: C64::new(t.re, t.im),
                    base: Point::new(coords_from_flat(&t.a)?)?,
                    exponent: t.beta,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(dim, poly, atoms)
    }
}

/// `‖z^α‖²_{H²} = (n−1)! α! / (n−1+|α|)!`.
pub fn monomial_norm_sq(n: usize, alpha: &[u32]) -> f64 {
    let k: u32 = alpha.iter().sum();
    let mut l = ln_gamma(n as f64) - ln_gamma(n as f64 + k as f64);
    for &a in alpha {
        l += ln_gamma(a as f64 + 1.0);
    }
    l.exp()
}

/// Rising factorial ratio `(β)_k / (n)_k` in log space.
fn pochhammer_ratio(beta: f64, n: usize, k: u32) -> f64 {
    let k = k as f64;
    let n = n as f64;
    (ln_gamma(beta + k) - ln_gamma(beta) - ln_gamma(n + k) + ln_gamma(n)).exp()
}

/// `⟨c(1−⟨z,a⟩)^{−β}, z^α⟩ = c (β)_{|α|}/(n)_{|α|} · conj(a^α)`.
fn atom_monomial_inner(n: usize, atom: &KernelAtom, alpha: &[u32]) -> C64 {
    let k: u32 = alpha.iter().sum();
    let mut abar_pow = C64::new(1.0, 0.0);
    for (ai, &e) in atom.base.coords().iter().zip(alpha) {
        abar_pow *= ai.conj().powu(e);
    }
    atom.coeff * abar_pow * pochhammer_ratio(atom.exponent, n, k)
}

/// `⟨(1−⟨z,a⟩)^{−β₁}, (1−⟨z,b⟩)^{−β₂}⟩ = ₂F₁(β₁, β₂; n; ⟨b,a⟩)`.
fn atom_atom_inner(n: usize, a: &KernelAtom, b: &KernelAtom) -> Result<C64> {
    let x = inner(b.base.coords(), a.base.coords());
    let nf = n as f64;
    let one = C64::new(1.0, 0.0);
    if (a.exponent - nf).abs() < EXPONENT_TOL {
        return Ok((-b.exponent * (one - x).ln()).exp());
    }
    if (b.exponent - nf).abs() < EXPONENT_TOL {
        return Ok((-a.exponent * (one - x).ln()).exp());
    }
    hypergeometric_2f1(a.exponent, b.exponent, nf, x)
}

/// Power series of `₂F₁(a, b; c; x)` for `|x| < 1`.
fn hypergeometric_2f1(a: f64, b: f64, c: f64, x: C64) -> Result<C64> {
    let r = x.norm();
    if r >= 1.0 {
        return Err(Error::Domain(
            "hypergeometric series outside its disk of convergence".into(),
        ));
    }
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let max_terms = 2_000_000usize;
    for k in 0..max_terms {
        let kf = k as f64;
        term *= x * ((a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)));
        sum += term;
        // Tail ratio settles to |x|; stop once the geometric remainder is negligible.
        if kf > (a + b).abs() + 2.0 && term.norm() <= 1e-17 * sum.norm() * (1.0 - r) {
            return Ok(sum);
        }
    }
    Err(Error::Consistency(
        "hypergeometric series did not converge".into(),
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyTerm {
    pub alpha: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomTerm {
    pub re: f64,
    pub im: f64,
    pub a: Vec<f64>,
    pub beta: f64,
}

/// JSON form `{poly: [{alpha, re, im}], atoms: [{re, im, a, beta}]}`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct HoloFile {
    #[serde(default)]
    pub poly: Vec<PolyTerm>,
    #[serde(default)]
    pub atoms: Vec<AtomTerm>,
}

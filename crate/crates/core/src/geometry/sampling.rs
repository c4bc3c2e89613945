//! Seeded quadrature for `dσ` on the sphere and for `dv`, `dλ_n` on the ball.

use crate::special::ln_gamma;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::{inner, norm_sq, BoundaryPoint, Point, C64};

/// Largest number of geometric shells; beyond this `1 − r` underflows `f64`.
pub const MAX_SHELLS: usize = 48;

/// Equal-weight sample of the sphere, weights `1/m`.
#[derive(Clone, Debug)]
pub struct SphereSample {
    pub points: Vec<BoundaryPoint>,
}

impl SphereSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.dim())
    }

    /// Mean of `f` with a standard error from the sample variance.
    pub fn mean<F>(&self, f: F) -> (f64, f64)
    where
        F: Fn(&BoundaryPoint) -> f64 + Sync,
    {
        let vals: Vec<f64> = self.points.par_iter().map(&f).collect();
        mean_and_se(&vals)
    }
}

pub(crate) fn mean_and_se(vals: &[f64]) -> (f64, f64) {
    let m = vals.len() as f64;
    if vals.is_empty() {
        return (0.0, 0.0);
    }
    let mean = vals.iter().sum::<f64>() / m;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// A uniformly distributed unit vector in `C^n`.
pub fn uniform_sphere_direction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..n)
            .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        let s = norm_sq(&v);
        if s > 1e-300 {
            let r = s.sqrt();
            return v.into_iter().map(|c| c / r).collect();
        }
    }
}

/// Sphere quadrature. For `n = 1` the deterministic grid `e^{2πik/m}`,
/// otherwise normalized Gaussians; prefixes of a larger sample with the same
/// seed are valid smaller samples.
pub fn sample_sphere(n: usize, m: usize, seed: u64) -> SphereSample {
    let m = m.max(1);
    let n = n.max(1);
    let points = if n == 1 {
        (0..m)
            .map(|k| BoundaryPoint::circle(2.0 * std::f64::consts::PI * k as f64 / m as f64))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|_| BoundaryPoint {
                coords: uniform_sphere_direction(&mut rng, n),
            })
            .collect()
    };
    SphereSample { points }
}

/// Quadrature estimate with per-shell breakdown.
#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub shell_contributions: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct BallNode {
    pub point: Point,
    pub weight: f64,
    pub shell: usize,
}

/// Shell-stratified sample of the ball for the normalized volume `dv`.
#[derive(Clone, Debug)]
pub struct BallSample {
    pub dim: usize,
    pub nodes: Vec<BallNode>,
    /// Radii `0 = r_0 < r_1 < … < r_S = 1`.
    pub edges: Vec<f64>,
    pub shell_counts: Vec<usize>,
}

/// Radii `0, 1/2, 3/4, …, 1 − 2^{−(S−1)}, 1`.
pub(crate) fn shell_edges(shells: usize) -> Vec<f64> {
    let mut e: Vec<f64> = (0..shells).map(|j| 1.0 - 0.5f64.powi(j as i32)).collect();
    e.push(1.0);
    e
}

/// Normalized volume of the shell `r_a ≤ |z| < r_b`.
pub(crate) fn shell_volume(n: usize, ra: f64, rb: f64) -> f64 {
    rb.powi(2 * n as i32) - ra.powi(2 * n as i32)
}

pub(crate) fn shell_index(edges: &[f64], r: f64) -> usize {
    let s = edges.len() - 1;
    match edges[1..].iter().position(|&e| r < e) {
        Some(i) => i,
        None => s - 1,
    }
}

/// `m` points of the shell `[ra, rb)`, Latin-hypercube stratified in the
/// radial CDF and (for `n = 1`) the angle.
fn sample_shell<R: Rng + ?Sized>(rng: &mut R, n: usize, ra: f64, rb: f64, m: usize) -> Vec<Point> {
    let two_n = 2 * n as i32;
    let (ua, ub) = (ra.powi(two_n), rb.powi(two_n));
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(rng);
    let mut out = Vec::with_capacity(m);
    for (i, &slot) in perm.iter().enumerate() {
        let u = ua + (ub - ua) * (i as f64 + rng.random::<f64>()) / m as f64;
        let r = u.powf(1.0 / two_n as f64).min(1.0 - f64::EPSILON);
        let dir = if n == 1 {
            let theta = 2.0 * std::f64::consts::PI * (slot as f64 + rng.random::<f64>()) / m as f64;
            vec![C64::from_polar(1.0, theta)]
        } else {
            uniform_sphere_direction(rng, n)
        };
        let coords: Vec<C64> = dir.into_iter().map(|c| c * r).collect();
        let norm_sq = norm_sq(&coords).min(1.0 - f64::EPSILON);
        out.push(Point { coords, norm_sq });
    }
    out
}

fn allocate(m: usize, shells: usize) -> Vec<usize> {
    (0..shells)
        .map(|j| (m / shells + usize::from(j < m % shells)).max(1))
        .collect()
}

/// Stratified sample of `dv` on `B_n` with geometric shells `1 − 2^{−j}`.
/// Points are split evenly across shells, so the boundary layers are
/// resolved; `Σ weights = 1` exactly.
pub fn sample_ball(n: usize, m: usize, shells: usize, seed: u64) -> BallSample {
    let n = n.max(1);
    let shells = shells.clamp(1, MAX_SHELLS);
    let edges = shell_edges(shells);
    let counts = allocate(m, shells);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::new();
    for j in 0..shells {
        let v = shell_volume(n, edges[j], edges[j + 1]);
        let w = v / counts[j] as f64;
        for p in sample_shell(&mut rng, n, edges[j], edges[j + 1], counts[j]) {
            nodes.push(BallNode {
                point: p,
                weight: w,
                shell: j,
            });
        }
    }
    BallSample {
        dim: n,
        nodes,
        edges,
        shell_counts: counts,
    }
}

impl BallSample {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shells(&self) -> usize {
        self.shell_counts.len()
    }

    /// `∫ f dv` with a per-shell stratified standard error.
    pub fn integrate<F>(&self, f: F) -> Estimate
    where
        F: Fn(&Point) -> f64 + Sync,
    {
        let vals: Vec<f64> = self.nodes.par_iter().map(|nd| f(&nd.point)).collect();
        self.combine(&vals)
    }

    /// `∫ f dλ_n = ∫ f (1−|z|²)^{−n−1} dv`.
    pub fn integrate_lambda<F>(&self, f: F) -> Estimate
    where
        F: Fn(&Point) -> f64 + Sync,
    {
        let e = -(self.dim as f64) - 1.0;
        self.integrate(|z| f(z) * (1.0 - z.norm_sq()).powf(e))
    }

    fn combine(&self, vals: &[f64]) -> Estimate {
        let s = self.shells();
        let mut sums = vec![0.0; s];
        let mut sq = vec![0.0; s];
        for (nd, &v) in self.nodes.iter().zip(vals) {
            sums[nd.shell] += v;
            sq[nd.shell] += v * v;
        }
        let mut contributions = vec![0.0; s];
        let mut var = 0.0;
        for j in 0..s {
            let m = self.shell_counts[j] as f64;
            let vol = shell_volume(self.dim, self.edges[j], self.edges[j + 1]);
            let mean = sums[j] / m;
            contributions[j] = vol * mean;
            if m > 1.0 {
                let sv = ((sq[j] - m * mean * mean) / (m - 1.0)).max(0.0);
                var += vol * vol * sv / m;
            }
        }
        Estimate {
            value: contributions.iter().sum(),
            std_error: var.sqrt(),
            shell_contributions: contributions,
        }
    }
}

/// A point with invariant-uniform law on the Bergman ball `D(0, β_max)`.
///
/// With `y = |z|²/(1−|z|²)` the invariant measure of `D(0,ρ)` is
/// `sinh^{2n}(ρ)` up to normalization, so `y = sinh²(β_max)·U^{1/n}`.
pub fn invariant_uniform_point<R: Rng + ?Sized>(rng: &mut R, n: usize, beta_max: f64) -> Point {
    let y_max = beta_max.sinh().powi(2);
    let y = y_max * rng.random::<f64>().powf(1.0 / n as f64);
    let u = (y / (1.0 + y)).min(1.0 - 4.0 * f64::EPSILON);
    let dir = uniform_sphere_direction(rng, n);
    let r = u.sqrt();
    let coords: Vec<C64> = dir.into_iter().map(|c| c * r).collect();
    let norm_sq = norm_sq(&coords).min(1.0 - f64::EPSILON);
    Point { coords, norm_sq }
}

/// Normalization `c_κ` of `dv_κ = c_κ (1−|z|²)^κ dv`.
pub(crate) fn weighted_bergman_constant(n: usize, kappa: f64) -> f64 {
    let n = n as f64;
    (ln_gamma(n + kappa + 1.0) - ln_gamma(n + 1.0) - ln_gamma(kappa + 1.0)).exp()
}

/// Defensive mixture sampler for `∫ F dλ_n` when `F` concentrates near a
/// finite set of anchor points.
///
/// Samples come from the shell-stratified `dv` sampler plus Möbius images
/// `φ_a(u)` of `u ~ dv_κ` around each anchor `a`; the combined estimate
/// weights every sample by the full mixture density (balance heuristic),
/// so it is unbiased whatever the anchors are.
#[derive(Clone, Debug)]
pub struct InvariantQuadrature {
    pub base_samples: usize,
    pub anchor_samples: usize,
    pub shells: usize,
    pub seed: u64,
}

impl Default for InvariantQuadrature {
    fn default() -> Self {
        InvariantQuadrature {
            base_samples: 1 << 14,
            anchor_samples: 1 << 14,
            shells: 32,
            seed: 0,
        }
    }
}

/// Anchor for [`InvariantQuadrature`]; `weight` is a selection probability up
/// to normalization.
#[derive(Clone, Debug)]
pub struct Anchor {
    pub point: Point,
    pub weight: f64,
}

struct Sampled {
    point: Point,
    technique: usize,
}

impl InvariantQuadrature {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Doubles both sample budgets.
    pub fn refined(&self) -> Self {
        InvariantQuadrature {
            base_samples: self.base_samples * 2,
            anchor_samples: self.anchor_samples * 2,
            shells: self.shells,
            seed: self.seed,
        }
    }

    /// `∫ F dλ_n`. `kappa > −1` sets the spread of the anchor component
    /// (larger is more concentrated).
    pub fn integrate_lambda<F>(&self, n: usize, anchors: &[Anchor], kappa: f64, f: F) -> Estimate
    where
        F: Fn(&Point) -> f64 + Sync,
    {
        let shells = self.shells.clamp(1, MAX_SHELLS);
        let edges = shell_edges(shells);
        let counts = allocate(self.base_samples, shells);
        let vols: Vec<f64> = (0..shells)
            .map(|j| shell_volume(n, edges[j], edges[j + 1]))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);

        let mut samples: Vec<Sampled> = Vec::new();
        for j in 0..shells {
            for p in sample_shell(&mut rng, n, edges[j], edges[j + 1], counts[j]) {
                samples.push(Sampled {
                    point: p,
                    technique: j,
                });
            }
        }

        let total_w: f64 = anchors.iter().map(|a| a.weight.max(0.0)).sum();
        let use_anchors = !anchors.is_empty() && total_w > 0.0 && self.anchor_samples > 0;
        let kappa = kappa.max(-0.9);
        let n_anchor = if use_anchors { self.anchor_samples } else { 0 };
        let probs: Vec<f64> = anchors
            .iter()
            .map(|a| a.weight.max(0.0) / total_w.max(1e-300))
            .collect();
        if use_anchors {
            let beta = Beta::new(n as f64, kappa + 1.0).expect("valid beta parameters");
            let mut cdf = Vec::with_capacity(probs.len());
            let mut acc = 0.0;
            for p in &probs {
                acc += p;
                cdf.push(acc);
            }
            for _ in 0..n_anchor {
                let x: f64 = rng.random::<f64>() * acc;
                let k = cdf.partition_point(|&c| c <= x).min(anchors.len() - 1);
                let s: f64 = beta.sample(&mut rng);
                let s = s.min(1.0 - 1e-15);
                let dir = uniform_sphere_direction(&mut rng, n);
                let u: Vec<C64> = dir.into_iter().map(|c| c * s.sqrt()).collect();
                let w = super::mobius(&anchors[k].point, &u);
                let ns = norm_sq(&w);
                if ns >= 1.0 {
                    continue;
                }
                samples.push(Sampled {
                    point: Point {
                        coords: w,
                        norm_sq: ns,
                    },
                    technique: shells,
                });
            }
        }

        let c_kappa = weighted_bergman_constant(n, kappa);
        let expo = kappa + n as f64 + 1.0;
        let nf = n as f64;
        let one = C64::new(1.0, 0.0);
        let vals: Vec<(f64, usize)> = samples
            .par_iter()
            .map(|s| {
                let w = &s.point;
                let q = 1.0 - w.norm_sq();
                let sh = shell_index(&edges, w.norm());
                let mut rho = counts[sh] as f64 * q.powf(nf + 1.0) / vols[sh];
                if use_anchors {
                    let mut mix = 0.0;
                    for (a, &pa) in anchors.iter().zip(&probs) {
                        if pa == 0.0 {
                            continue;
                        }
                        let qa = 1.0 - a.point.norm_sq();
                        let d = (one - inner(w.coords(), a.point.coords())).norm_sqr();
                        let t = (qa * q / d).min(1.0);
                        mix += pa * t.powf(expo);
                    }
                    rho += n_anchor as f64 * c_kappa * mix;
                }
                let fv = f(w);
                let v = if fv == 0.0 { 0.0 } else { fv / rho };
                (v, sh)
            })
            .collect();

        let techniques = shells + 1;
        let mut tsum = vec![0.0; techniques];
        let mut tsq = vec![0.0; techniques];
        let mut tcount = vec![0usize; techniques];
        let mut contributions = vec![0.0; shells];
        for ((v, sh), s) in vals.iter().zip(&samples) {
            tsum[s.technique] += v;
            tsq[s.technique] += v * v;
            tcount[s.technique] += 1;
            contributions[*sh] += v;
        }
        let mut var = 0.0;
        for t in 0..techniques {
            let m = tcount[t] as f64;
            if m > 1.0 {
                let mean = tsum[t] / m;
                let sv = ((tsq[t] - m * mean * mean) / (m - 1.0)).max(0.0);
                var += m * sv;
            }
        }
        Estimate {
            value: tsum.iter().sum(),
            std_error: var.sqrt(),
            shell_contributions: contributions,
        }
    }
}

//! `r`-lattices in the Bergman metric.
//!
//! The ball has infinite invariant volume, so a lattice is built on a finite
//! region: either a Bergman ball `D(0, β_max)` or a neighborhood of a finite
//! point set. Centers come from greedy farthest-point insertion over seeded
//! invariant-uniform candidates with separation threshold `0.6 r`; uncovered
//! validation points are fed back as candidates until the covering
//! certificate holds.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::invariant_uniform_point;
use super::{bergman_raw, coords_from_flat, coords_to_flat, mobius, Point, C64};
use crate::error::{Error, Result};

const SEPARATION_FACTOR: f64 = 0.6;
const REPAIR_ROUNDS: usize = 3;

#[derive(Clone, Debug)]
pub enum LatticeRegion {
    /// `D(0, β_max)`.
    Ball { beta_max: f64 },
    /// `∪_j D(p_j, radius)`.
    Neighborhood { points: Vec<Point>, radius: f64 },
}

#[derive(Clone, Debug)]
pub struct LatticeConfig {
    pub dim: usize,
    pub r: f64,
    /// Number of seeded candidate points.
    pub density: usize,
    pub seed: u64,
    pub region: LatticeRegion,
    /// Size of the independent validation sample used for certificates.
    pub validation: usize,
}

impl LatticeConfig {
    pub fn ball(dim: usize, r: f64, density: usize, seed: u64) -> Self {
        LatticeConfig {
            dim,
            r,
            density,
            seed,
            region: LatticeRegion::Ball {
                beta_max: default_beta_max(dim),
            },
            validation: 10_000,
        }
    }
}

/// Truncation radius used by [`build_lattice`].
pub fn default_beta_max(dim: usize) -> f64 {
    if dim == 1 {
        3.0
    } else {
        2.0
    }
}

#[derive(Clone, Debug)]
pub struct Lattice {
    pub dim: usize,
    pub r: f64,
    /// Certified bound on the number of centers in any `D(z, 4r)`.
    pub overlap_bound: usize,
    pub centers: Vec<Point>,
    /// `β_max` of the region for ball-truncated lattices.
    pub outer_radius: Option<f64>,
}

/// Serialized form `{dim, r, N, centers: [[re, im, ...]], outer_radius}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeFile {
    pub dim: usize,
    pub r: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub centers: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_radius: Option<f64>,
}

impl Lattice {
    /// Wraps explicit centers; certificates are the caller's responsibility.
    pub fn from_centers(
        dim: usize,
        r: f64,
        centers: Vec<Point>,
        overlap_bound: usize,
    ) -> Result<Self> {
        if centers.iter().any(|c| c.dim() != dim) {
            return Err(Error::Input("lattice center dimension mismatch".into()));
        }
        if !(r > 0.0) {
            return Err(Error::Input(format!(
                "lattice radius must be positive, got {r}"
            )));
        }
        Ok(Lattice {
            dim,
            r,
            overlap_bound,
            centers,
            outer_radius: None,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn to_file(&self) -> LatticeFile {
        LatticeFile {
            dim: self.dim,
            r: self.r,
            n: self.overlap_bound,
            centers: self
                .centers
                .iter()
                .map(|c| coords_to_flat(c.coords()))
                .collect(),
            outer_radius: self.outer_radius,
        }
    }

    pub fn from_file(f: &LatticeFile) -> Result<Self> {
        let centers = f
            .centers
            .iter()
            .map(|c| Point::new(coords_from_flat(c)?))
            .collect::<Result<Vec<_>>>()?;
        let mut l = Lattice::from_centers(f.dim, f.r, centers, f.n)?;
        l.outer_radius = f.outer_radius;
        Ok(l)
    }

    /// Smallest pairwise Bergman distance between centers.
    pub fn min_separation(&self) -> f64 {
        let idx = PivotIndex::new(
            self.dim,
            self.centers.iter().map(|c| c.coords().to_vec()).collect(),
        );
        (0..self.centers.len())
            .into_par_iter()
            .map(|i| {
                let mut best = f64::INFINITY;
                idx.for_each_within(self.centers[i].coords(), self.r, |j, d| {
                    if j != i {
                        best = best.min(d);
                    }
                });
                best.min(self.r)
            })
            .reduce(|| f64::INFINITY, f64::min)
    }

    /// Distance from `z` to the nearest center.
    pub fn nearest_distance(&self, z: &Point) -> f64 {
        self.centers
            .iter()
            .map(|c| bergman_raw(c.coords(), z.coords()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Number of centers `a_k` with `β(a_k, z) < radius`.
    pub fn count_within(&self, z: &Point, radius: f64) -> usize {
        self.centers
            .iter()
            .filter(|c| bergman_raw(c.coords(), z.coords()) < radius)
            .count()
    }
}

/// Lattice of `D(0, β_max)` with the default truncation radius.
pub fn build_lattice(n: usize, r: f64, candidate_density: usize, seed: u64) -> Result<Lattice> {
    build_lattice_with(&LatticeConfig::ball(n, r, candidate_density, seed))
}

/// Partial lattice covering `D(p, 2r)` for every `p` in `points`. Its centers
/// are those of a full lattice that can meet a `D(p, r)`, which is all a
/// lattice sum over a measure supported on `points` can see.
/// Most `tau`-separated points a Bergman ball of radius `radius` can hold.
///
/// The balls `D(a, tau/2)` are disjoint and lie in `D(z, radius + tau/2)`, and
/// `λ_n(D(0, ρ)) = sinh^{2n} ρ` in the normalization of `dλ_n`.
pub fn packing_bound(n: usize, radius: f64, tau: f64) -> usize {
    let ratio = ((radius + 0.5 * tau).sinh() / (0.5 * tau).sinh()).powi(2 * n as i32);
    ratio.floor() as usize
}

/// Smallest candidate count that `lattice_near` accepts for `anchors` points.
pub fn min_neighborhood_density(dim: usize, r: f64, anchors: usize) -> usize {
    let ratio = ((2.0 * r).sinh() / (0.4 * r).sinh()).powi(2 * dim as i32);
    (4.0 * anchors as f64 * ratio).ceil() as usize
}

pub fn lattice_near(
    points: &[Point],
    r: f64,
    candidate_density: usize,
    seed: u64,
) -> Result<Lattice> {
    let dim = points
        .first()
        .ok_or_else(|| Error::Input("lattice_near needs at least one point".into()))?
        .dim();
    build_lattice_with(&LatticeConfig {
        dim,
        r,
        density: candidate_density,
        seed,
        region: LatticeRegion::Neighborhood {
            points: points.to_vec(),
            radius: 2.0 * r,
        },
        validation: 10_000,
    })
}

pub fn build_lattice_with(cfg: &LatticeConfig) -> Result<Lattice> {
    let n = cfg.dim;
    if n == 0 {
        return Err(Error::Input("dimension must be positive".into()));
    }
    if !(cfg.r > 0.0 && cfg.r < 1.0) {
        return Err(Error::Input(format!(
            "lattice radius must lie in (0, 1), got {}",
            cfg.r
        )));
    }
    let region = normalized_region(&cfg.region, n)?;
    check_density(cfg, &region)?;

    let tau = SEPARATION_FACTOR * cfg.r;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut candidates = draw(&mut rng, n, &region, cfg.density);
    if let LatticeRegion::Neighborhood { points, .. } = &region {
        // Seed with the anchor points themselves.
        let mut pts: Vec<Vec<C64>> = points.iter().map(|p| p.coords().to_vec()).collect();
        pts.append(&mut candidates);
        candidates = pts;
    }
    let mut vrng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let validation = draw(&mut vrng, n, &region, cfg.validation.max(1));

    let mut centers: Vec<Vec<C64>> = Vec::new();
    for round in 0..=REPAIR_ROUNDS {
        greedy_insert(n, &candidates, &mut centers, tau);
        let idx = PivotIndex::new(n, centers.clone());
        let uncovered: Vec<Vec<C64>> = validation
            .par_iter()
            .filter(|v| nearest_within(&idx, v, cfg.r).is_none())
            .cloned()
            .collect();
        if uncovered.is_empty() {
            let overlap = packing_bound(n, 4.0 * cfg.r, tau);
            let centers: Vec<Point> = centers
                .into_iter()
                .map(|c| {
                    let norm_sq = super::norm_sq(&c);
                    Point { coords: c, norm_sq }
                })
                .collect();
            let outer_radius = match region {
                LatticeRegion::Ball { beta_max } => Some(beta_max),
                LatticeRegion::Neighborhood { .. } => None,
            };
            log::debug!(
                "lattice of {} centers after {round} repair rounds",
                centers.len()
            );
            return Ok(Lattice {
                dim: n,
                r: cfg.r,
                overlap_bound: overlap,
                centers,
                outer_radius,
            });
        }
        log::debug!(
            "lattice repair round {round}: {} uncovered validation points",
            uncovered.len()
        );
        candidates.extend(uncovered);
    }
    Err(Error::Construction(format!(
        "covering certificate still fails after {REPAIR_ROUNDS} repair rounds \
         (r = {}, {} candidates); increase candidate_density",
        cfg.r,
        candidates.len()
    )))
}

fn normalized_region(region: &LatticeRegion, n: usize) -> Result<LatticeRegion> {
    match region {
        LatticeRegion::Ball { beta_max } => {
            if !(*beta_max > 0.0 && beta_max.is_finite()) {
                return Err(Error::Input(format!(
                    "β_max must be positive, got {beta_max}"
                )));
            }
            Ok(region.clone())
        }
        LatticeRegion::Neighborhood { points, radius } => {
            if points.is_empty() || !(*radius > 0.0) {
                return Err(Error::Input(
                    "neighborhood needs points and a positive radius".into(),
                ));
            }
            if points.iter().any(|p| p.dim() != n) {
                return Err(Error::Input("neighborhood point dimension mismatch".into()));
            }
            // Drop near-duplicates so candidates are not wasted on one spot.
            let mut kept: Vec<Point> = Vec::new();
            for p in points {
                if kept
                    .iter()
                    .all(|q| bergman_raw(q.coords(), p.coords()) > 0.1 * radius)
                {
                    kept.push(p.clone());
                }
            }
            Ok(LatticeRegion::Neighborhood {
                points: kept,
                radius: *radius,
            })
        }
    }
}

/// Expected candidates per `D(x, 0.4 r)` must be at least 4.
fn check_density(cfg: &LatticeConfig, region: &LatticeRegion) -> Result<()> {
    let two_n = 2 * cfg.dim as i32;
    let small = (0.4 * cfg.r).sinh().powi(two_n);
    let per_region = match region {
        LatticeRegion::Ball { beta_max } => {
            cfg.density as f64 * small / beta_max.sinh().powi(two_n)
        }
        LatticeRegion::Neighborhood { points, radius } => {
            cfg.density as f64 / points.len() as f64 * small / radius.sinh().powi(two_n)
        }
    };
    if per_region < 4.0 {
        return Err(Error::Construction(format!(
            "candidate grid too coarse: about {per_region:.2} candidates per ball of radius 0.4r \
             (need ≥ 4); raise candidate_density above {}",
            (cfg.density as f64 * 4.0 / per_region.max(1e-300)).ceil()
        )));
    }
    Ok(())
}

fn draw(rng: &mut ChaCha8Rng, n: usize, region: &LatticeRegion, count: usize) -> Vec<Vec<C64>> {
    match region {
        LatticeRegion::Ball { beta_max } => (0..count)
            .map(|_| invariant_uniform_point(rng, n, *beta_max).coords)
            .collect(),
        LatticeRegion::Neighborhood { points, radius } => (0..count)
            .map(|i| {
                let u = invariant_uniform_point(rng, n, *radius);
                mobius(&points[i % points.len()], u.coords())
            })
            .filter(|w| super::norm_sq(w) < 1.0)
            .collect(),
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Greedy insertion: candidates are promoted in heap order while their
/// distance to every center is at least `tau`. Distances are capped at `tau`,
/// so each promotion only touches its `tau`-neighborhood; near the sphere the
/// Euclidean search region overshoots the Bergman ball badly and a wider cap
/// costs far more than the ordering gains.
fn greedy_insert(n: usize, candidates: &[Vec<C64>], centers: &mut Vec<Vec<C64>>, tau: f64) {
    let cap = tau;
    let idx = PivotIndex::new(n, candidates.to_vec());
    let mut dist = vec![cap; candidates.len()];
    if !centers.is_empty() {
        let cidx = PivotIndex::new(n, centers.clone());
        dist.par_iter_mut().enumerate().for_each(|(i, d)| {
            cidx.for_each_within(&candidates[i], cap, |_, b| *d = d.min(b));
        });
    }
    let mut heap: BinaryHeap<HeapItem> = dist
        .iter()
        .enumerate()
        .map(|(i, &d)| HeapItem(d, candidates.len() - i))
        .collect();
    while let Some(HeapItem(d, key)) = heap.pop() {
        let i = candidates.len() - key;
        if d > dist[i] {
            heap.push(HeapItem(dist[i], key));
            continue;
        }
        if d < tau {
            break;
        }
        let c = candidates[i].clone();
        idx.for_each_within(&c, cap, |j, b| {
            if b < dist[j] {
                dist[j] = b;
            }
        });
        dist[i] = 0.0;
        centers.push(c);
    }
}

fn nearest_within(idx: &PivotIndex, z: &[C64], radius: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    idx.for_each_within(z, radius, |_, d| {
        best = Some(best.map_or(d, |b: f64| b.min(d)))
    });
    best
}

/// Euclidean radius of a ball containing the Bergman ball `D(z, radius)`.
///
/// `D(z, ρ)` is an ellipsoid centered at `(1−s²)z/(1−s²|z|²)`, `s = tanh ρ`,
/// with radial semi-axis `s(1−|z|²)/(1−s²|z|²)` and tangential semi-axis
/// `s√((1−|z|²)/(1−s²|z|²))`; the tangential one is never smaller.
fn euclidean_enclosure(norm_sq: f64, radius: f64) -> f64 {
    let s = radius.tanh();
    if !(s < 1.0) {
        return 2.0;
    }
    let denom = 1.0 - s * s * norm_sq;
    let shift = norm_sq.sqrt() * s * s * (1.0 - norm_sq) / denom;
    let axis = s * ((1.0 - norm_sq) / denom).sqrt();
    (shift + axis) * (1.0 + 1e-9) + 1e-12
}

/// Metric index over points of the ball: an implicit kd-tree on the real
/// coordinates, queried with the Euclidean enclosure of a Bergman ball.
struct PivotIndex {
    items: Vec<Vec<C64>>,
    /// Real coordinates, `2n` per item.
    flat: Vec<f64>,
    /// Item indices in kd order; the median of each range splits it.
    order: Vec<usize>,
    dims: usize,
}

impl PivotIndex {
    fn new(n: usize, items: Vec<Vec<C64>>) -> Self {
        let dims = 2 * n;
        let flat: Vec<f64> = items
            .iter()
            .flat_map(|x| x.iter().flat_map(|c| [c.re, c.im]))
            .collect();
        let mut order: Vec<usize> = (0..items.len()).collect();
        build_kd(&mut order, &flat, dims, 0);
        PivotIndex {
            items,
            flat,
            order,
            dims,
        }
    }

    /// Calls `f(i, β(z, item_i))` for every item with `β < radius`, in index order.
    fn for_each_within<F: FnMut(usize, f64)>(&self, z: &[C64], radius: f64, mut f: F) {
        let q: Vec<f64> = z.iter().flat_map(|c| [c.re, c.im]).collect();
        let reach = euclidean_enclosure(super::norm_sq(z), radius);
        let mut hits: Vec<(usize, f64)> = Vec::new();
        self.search(&q, reach, z, radius, 0, self.order.len(), 0, &mut hits);
        hits.sort_by_key(|h| h.0);
        for (i, d) in hits {
            f(i, d);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        &self,
        q: &[f64],
        reach: f64,
        z: &[C64],
        radius: f64,
        lo: usize,
        hi: usize,
        depth: usize,
        hits: &mut Vec<(usize, f64)>,
    ) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let i = self.order[mid];
        let axis = depth % self.dims;
        let p = &self.flat[i * self.dims..(i + 1) * self.dims];
        let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 <= reach * reach {
            let d = bergman_raw(&self.items[i], z);
            if d < radius {
                hits.push((i, d));
            }
        }
        let diff = q[axis] - p[axis];
        if diff <= reach {
            self.search(q, reach, z, radius, lo, mid, depth + 1, hits);
        }
        if diff >= -reach {
            self.search(q, reach, z, radius, mid + 1, hi, depth + 1, hits);
        }
    }
}

fn build_kd(order: &mut [usize], flat: &[f64], dims: usize, depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let axis = depth % dims;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        flat[a * dims + axis]
            .total_cmp(&flat[b * dims + axis])
            .then(a.cmp(&b))
    });
    let (left, right) = order.split_at_mut(mid);
    build_kd(left, flat, dims, depth + 1);
    build_kd(&mut right[1..], flat, dims, depth + 1);
}

//! Geometry of the unit ball `B_n` and the sphere `S_n`.

mod lattice;
mod region_quad;
mod sampling;

pub use lattice::{
    build_lattice, build_lattice_with, default_beta_max, lattice_near, min_neighborhood_density,
    packing_bound, Lattice, LatticeConfig, LatticeFile, LatticeRegion,
};
pub use region_quad::{approach_region_nodes, RegionGrid, RegionNode};
pub use sampling::{
    invariant_uniform_point, sample_ball, sample_sphere, uniform_sphere_direction, Anchor,
    BallNode, BallSample, Estimate, InvariantQuadrature, SphereSample,
};

pub(crate) use sampling::mean_and_se;

use crate::error::{Error, Result};
use num_complex::Complex64;

pub type C64 = Complex64;

/// Tolerance on `| |ζ|² − 1 |` for boundary points.
pub const SPHERE_TOL: f64 = 1e-12;

/// Default aperture of the admissible approach regions.
pub const DEFAULT_APERTURE: f64 = 2.5;

/// A point of the open unit ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: Vec<C64>,
    norm_sq: f64,
}

impl Point {
    pub fn new(coords: Vec<C64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Input(
                "point must have at least one coordinate".into(),
            ));
        }
        if coords
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::Input("point has non-finite coordinates".into()));
        }
        let norm_sq = norm_sq(&coords);
        if norm_sq >= 1.0 {
            return Err(Error::Input(format!(
                "point is not in the open unit ball (|z|² = {norm_sq})"
            )));
        }
        Ok(Point { coords, norm_sq })
    }

    pub fn origin(dim: usize) -> Self {
        Point {
            coords: vec![C64::new(0.0, 0.0); dim],
            norm_sq: 0.0,
        }
    }

    /// One-dimensional point `x + iy`.
    pub fn disk(re: f64, im: f64) -> Result<Self> {
        Point::new(vec![C64::new(re, im)])
    }

    /// Builds a point from interleaved `[re, im, re, im, ...]` values.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        Point::new(coords_from_flat(flat)?)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        coords_to_flat(&self.coords)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }

    pub fn is_origin(&self) -> bool {
        self.norm_sq == 0.0
    }

    /// `ρ · z/|z|`; the origin maps to `(ρ, 0, …)`.
    pub fn along_direction(&self, rho: f64) -> Result<Point> {
        let dir = self.direction();
        Point::new(dir.into_iter().map(|c| c * rho).collect())
    }

    /// Unit vector `z/|z|` (first basis vector for the origin).
    pub fn direction(&self) -> Vec<C64> {
        if self.is_origin() {
            let mut e = vec![C64::new(0.0, 0.0); self.dim()];
            e[0] = C64::new(1.0, 0.0);
            return e;
        }
        let r = self.norm();
        self.coords.iter().map(|c| c / r).collect()
    }
}

impl AsRef<[C64]> for Point {
    fn as_ref(&self) -> &[C64] {
        &self.coords
    }
}

/// A point of the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPoint {
    coords: Vec<C64>,
}

impl BoundaryPoint {
    pub fn new(coords: Vec<C64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Input(
                "boundary point must have at least one coordinate".into(),
            ));
        }
        let s = norm_sq(&coords);
        if (s - 1.0).abs() > SPHERE_TOL {
            return Err(Error::Input(format!(
                "boundary point has |ζ|² = {s}, expected 1"
            )));
        }
        Ok(BoundaryPoint { coords })
    }

    /// Normalizes a nonzero vector onto the sphere.
    pub fn normalize(coords: Vec<C64>) -> Result<Self> {
        let s = norm_sq(&coords);
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Input(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        let r = s.sqrt();
        Ok(BoundaryPoint {
            coords: coords.into_iter().map(|c| c / r).collect(),
        })
    }

    /// `e^{iθ}` on the unit circle.
    pub fn circle(theta: f64) -> Self {
        BoundaryPoint {
            coords: vec![C64::from_polar(1.0, theta)],
        }
    }

    /// First standard basis vector `(1, 0, …, 0)`.
    pub fn north(dim: usize) -> Self {
        let mut coords = vec![C64::new(0.0, 0.0); dim];
        coords[0] = C64::new(1.0, 0.0);
        BoundaryPoint { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    /// The interior point `rζ`, `0 ≤ r < 1`.
    pub fn scaled(&self, r: f64) -> Result<Point> {
        Point::new(self.coords.iter().map(|c| c * r).collect())
    }
}

impl AsRef<[C64]> for BoundaryPoint {
    fn as_ref(&self) -> &[C64] {
        &self.coords
    }
}

pub(crate) fn norm_sq(z: &[C64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

pub(crate) fn coords_from_flat(flat: &[f64]) -> Result<Vec<C64>> {
    if flat.is_empty() || !flat.len().is_multiple_of(2) {
        return Err(Error::Input(format!(
            "expected an even, nonzero number of reals [re, im, ...], got {}",
            flat.len()
        )));
    }
    Ok(flat.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
}

pub(crate) fn coords_to_flat(z: &[C64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// Unchecked `Σ z_k conj(w_k)`; callers guarantee equal lengths.
#[inline]
pub(crate) fn inner(z: &[C64], w: &[C64]) -> C64 {
    debug_assert_eq!(z.len(), w.len());
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

/// Hermitian inner product `⟨z,w⟩ = Σ z_k conj(w_k)`.
pub fn herm_inner<A: AsRef<[C64]>, B: AsRef<[C64]>>(z: &A, w: &B) -> Result<C64> {
    let (z, w) = (z.as_ref(), w.as_ref());
    if z.len() != w.len() {
        return Err(Error::Input(format!(
            "dimension mismatch: {} vs {}",
            z.len(),
            w.len()
        )));
    }
    Ok(inner(z, w))
}

/// `|φ_z(w)|²` for the involutive automorphism `φ_z`.
///
/// Uses `|1−⟨z,w⟩|² − (1−|z|²)(1−|w|²) = |z−w|² − Σ_{i<j} |z_i w_j − z_j w_i|²`,
/// which vanishes exactly when `z = w`.
pub(crate) fn pseudo_hyperbolic_sq(z: &[C64], w: &[C64]) -> f64 {
    let mut diff = 0.0;
    for (a, b) in z.iter().zip(w) {
        diff += (a - b).norm_sqr();
    }
    let mut wedge = 0.0;
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            wedge += (z[i] * w[j] - z[j] * w[i]).norm_sqr();
        }
    }
    let num = (diff - wedge).max(0.0);
    let den = (C64::new(1.0, 0.0) - inner(z, w)).norm_sqr();
    (num / den).clamp(0.0, 1.0)
}

/// Bergman metric `β(z,w) = ½ log((1+|φ_z(w)|)/(1−|φ_z(w)|))`.
pub fn bergman_metric(z: &Point, w: &Point) -> f64 {
    assert_eq!(z.dim(), w.dim(), "bergman_metric: dimension mismatch");
    bergman_raw(z.coords(), w.coords())
}

#[inline]
pub(crate) fn bergman_raw(z: &[C64], w: &[C64]) -> f64 {
    let rho = pseudo_hyperbolic_sq(z, w).sqrt();
    if rho >= 1.0 {
        f64::INFINITY
    } else {
        rho.atanh()
    }
}

/// Involutive automorphism `φ_a` of `B_n` exchanging `a` and `0`.
pub fn mobius(a: &Point, z: &[C64]) -> Vec<C64> {
    let n = a.dim();
    debug_assert_eq!(z.len(), n);
    let one = C64::new(1.0, 0.0);
    if a.is_origin() {
        return z.iter().map(|c| -c).collect();
    }
    let a_sq = a.norm_sq();
    let za = inner(z, a.coords());
    let s = (1.0 - a_sq).sqrt();
    let den = one - za;
    (0..n)
        .map(|k| {
            let p = a.coords()[k] * (za / a_sq);
            let q = z[k] - p;
            (a.coords()[k] - p - q * s) / den
        })
        .collect()
}

/// Regions used throughout: admissible approach regions, Koranyi boxes,
/// the boxes `Q(w)` and Bergman balls.
#[derive(Clone, Debug)]
pub enum RegionSpec {
    /// `Γ_γ(ζ) = {z : |1−⟨z,ζ⟩| < (γ/2)(1−|z|²)}`, `γ > 1`.
    ApproachRegion { gamma: f64, zeta: BoundaryPoint },
    /// `B_δ(ζ) = {z : |1−⟨z,ζ⟩| < δ}`, `δ ∈ (0, 2]`.
    KoranyiBox { zeta: BoundaryPoint, delta: f64 },
    /// `Q(w) = {z : |1−⟨z,w/|w|⟩| < 1−|w|}`, with `Q(0) = B_n`.
    QBox { w: Point },
    /// `D(a, ρ) = {z : β(a,z) < ρ}`.
    BergmanBall { center: Point, radius: f64 },
}

impl RegionSpec {
    pub fn approach(gamma: f64, zeta: BoundaryPoint) -> Result<Self> {
        if !(gamma > 1.0) {
            return Err(Error::Input(format!(
                "aperture must satisfy γ > 1, got {gamma}"
            )));
        }
        Ok(RegionSpec::ApproachRegion { gamma, zeta })
    }

    pub fn koranyi(zeta: BoundaryPoint, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 2.0) {
            return Err(Error::Input(format!(
                "box radius must lie in (0, 2], got {delta}"
            )));
        }
        Ok(RegionSpec::KoranyiBox { zeta, delta })
    }

    pub fn qbox(w: Point) -> Self {
        RegionSpec::QBox { w }
    }

    pub fn bergman_ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Input(format!(
                "Bergman radius must be positive, got {radius}"
            )));
        }
        Ok(RegionSpec::BergmanBall { center, radius })
    }

    /// Membership with strict inequalities; ties count as outside.
    pub fn contains(&self, z: &[C64]) -> bool {
        let one = C64::new(1.0, 0.0);
        match self {
            RegionSpec::ApproachRegion { gamma, zeta } => {
                let d = (one - inner(z, zeta.coords())).norm();
                d < 0.5 * gamma * (1.0 - norm_sq(z))
            }
            RegionSpec::KoranyiBox { zeta, delta } => {
                (one - inner(z, zeta.coords())).norm() < *delta
            }
            RegionSpec::QBox { w } => {
                if w.is_origin() {
                    return norm_sq(z) < 1.0;
                }
                let r = w.norm();
                let zw: C64 = inner(z, w.coords()) / r;
                (one - zw).norm() < 1.0 - r
            }
            RegionSpec::BergmanBall { center, radius } => bergman_raw(center.coords(), z) < *radius,
        }
    }
}

pub fn region_contains(region: &RegionSpec, z: &Point) -> bool {
    region.contains(z.coords())
}

/// `σ(I(z))`, the fraction of sphere samples `ζ` whose approach region
/// `Γ_γ(ζ)` contains `z`.
pub fn i_set_measure(z: &Point, gamma: f64, sphere: &SphereSample) -> f64 {
    let bound = 0.5 * gamma * (1.0 - z.norm_sq());
    let one = C64::new(1.0, 0.0);
    let hits = sphere
        .points
        .iter()
        .filter(|zeta| (one - inner(z.coords(), zeta.coords())).norm() < bound)
        .count();
    hits as f64 / sphere.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Point {
        loop {
            let v: Vec<C64> = (0..n)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            if norm_sq(&v) < 0.98 {
                return Point::new(v).unwrap();
            }
        }
    }

    #[test]
    fn inner_product_examples() {
        let z = Point::disk(0.5, 0.0).unwrap();
        assert_eq!(herm_inner(&z, &z).unwrap(), c(0.25, 0.0));
        let z = Point::disk(0.0, 0.3).unwrap();
        let w = Point::disk(0.3, 0.0).unwrap();
        let v = herm_inner(&z, &w).unwrap();
        assert_relative_eq!(v.re, 0.0);
        assert_relative_eq!(v.im, 0.09, epsilon = 1e-15);
        let z = Point::new(vec![c(0.1, 0.0), c(0.0, 0.2)]).unwrap();
        let w = Point::new(vec![c(0.3, 0.0), c(0.4, 0.0)]).unwrap();
        let v = herm_inner(&z, &w).unwrap();
        assert_relative_eq!(v.re, 0.03, epsilon = 1e-15);
        assert_relative_eq!(v.im, 0.08, epsilon = 1e-15);
    }

    #[test]
    fn inner_product_dimension_mismatch() {
        let z = Point::origin(1);
        let w = Point::origin(2);
        assert!(matches!(herm_inner(&z, &w), Err(Error::Input(_))));
    }

    #[test]
    fn metric_examples() {
        let o = Point::origin(1);
        assert_eq!(bergman_metric(&o, &o), 0.0);
        let h = Point::disk(0.5, 0.0).unwrap();
        assert_relative_eq!(bergman_metric(&o, &h), 0.5 * 3f64.ln(), epsilon = 1e-14);
        let z = Point::new(vec![c(0.3, -0.2), c(0.1, 0.5)]).unwrap();
        assert_eq!(bergman_metric(&z, &z), 0.0);
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2] {
            for _ in 0..500 {
                let (x, y, z) = (
                    random_point(&mut rng, n),
                    random_point(&mut rng, n),
                    random_point(&mut rng, n),
                );
                let (xy, yx) = (bergman_metric(&x, &y), bergman_metric(&y, &x));
                assert!((xy - yx).abs() <= 1e-13 * xy.max(1.0));
                let xz = bergman_metric(&x, &z);
                let yz = bergman_metric(&y, &z);
                assert!(
                    xz <= xy + yz + 1e-12,
                    "triangle inequality: {xz} > {xy} + {yz}"
                );
                assert!(xy > 0.0);
            }
        }
    }

    #[test]
    fn mobius_is_an_involution_and_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2] {
            for _ in 0..100 {
                let a = random_point(&mut rng, n);
                let z = random_point(&mut rng, n);
                let w = random_point(&mut rng, n);
                let fz = mobius(&a, z.coords());
                let back = mobius(&a, &fz);
                for (u, v) in back.iter().zip(z.coords()) {
                    assert!((u - v).norm() < 1e-10);
                }
                let fa = mobius(&a, a.coords());
                assert!(norm_sq(&fa) < 1e-20);
                let fw = mobius(&a, w.coords());
                let d0 = bergman_metric(&z, &w);
                let d1 = bergman_raw(&fz, &fw);
                assert!((d0 - d1).abs() < 1e-8 * d0.max(1.0));
            }
        }
    }

    #[test]
    fn region_examples() {
        let zeta = BoundaryPoint::north(1);
        let o = Point::origin(1);
        assert!(region_contains(
            &RegionSpec::approach(2.5, zeta.clone()).unwrap(),
            &o
        ));
        assert!(!region_contains(
            &RegionSpec::approach(1.5, zeta.clone()).unwrap(),
            &o
        ));
        assert!(!region_contains(
            &RegionSpec::koranyi(zeta.clone(), 0.5).unwrap(),
            &o
        ));
        let q0 = RegionSpec::qbox(Point::origin(2));
        let z = Point::new(vec![c(0.6, 0.1), c(-0.3, 0.7)]).unwrap();
        assert!(region_contains(&q0, &z));
        assert!(RegionSpec::approach(1.0, zeta.clone()).is_err());
        assert!(RegionSpec::koranyi(zeta, 2.5).is_err());
    }

    #[test]
    fn boundary_ties_are_outside() {
        // |1 − 0| = 1 exactly equals δ = 1.
        let b = RegionSpec::koranyi(BoundaryPoint::north(1), 1.0).unwrap();
        assert!(!region_contains(&b, &Point::origin(1)));
    }

    #[test]
    fn approach_regions_are_monotone_in_aperture() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2] {
            let zeta = BoundaryPoint::north(n);
            let small = RegionSpec::approach(1.7, zeta.clone()).unwrap();
            let large = RegionSpec::approach(3.1, zeta).unwrap();
            for _ in 0..2000 {
                let z = random_point(&mut rng, n);
                if region_contains(&small, &z) {
                    assert!(region_contains(&large, &z));
                }
            }
        }
    }

    #[test]
    fn qbox_lemma_constants() {
        // For z ∈ Q(w): (1−|w|)/|1−⟨z,w⟩| ∈ [1/4, 2].
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        for n in [1, 2] {
            while checked < 400 * n {
                let w = random_point(&mut rng, n);
                let z = random_point(&mut rng, n);
                if !region_contains(&RegionSpec::qbox(w.clone()), &z) {
                    continue;
                }
                let ratio =
                    (1.0 - w.norm()) / (C64::new(1.0, 0.0) - inner(z.coords(), w.coords())).norm();
                assert!((0.25..=2.0).contains(&ratio), "ratio {ratio}");
                checked += 1;
            }
        }
    }

    #[test]
    fn i_set_examples() {
        let sphere = sample_sphere(1, 256, 0);
        let o = Point::origin(1);
        assert_eq!(i_set_measure(&o, 2.5, &sphere), 1.0);
        assert_eq!(i_set_measure(&o, 1.5, &sphere), 0.0);
    }

    #[test]
    fn i_set_measure_scales_like_volume_factor() {
        for n in [1usize, 2] {
            let sphere = sample_sphere(n, if n == 1 { 1 << 16 } else { 1 << 17 }, 9);
            let mut ratios = Vec::new();
            for r in [0.0, 0.3, 0.6, 0.8, 0.9, 0.95] {
                let z = Point::new({
                    let mut v = vec![C64::new(0.0, 0.0); n];
                    v[0] = C64::new(r, 0.0);
                    v
                })
                .unwrap();
                let sigma = i_set_measure(&z, 2.5, &sphere);
                ratios.push(sigma / (1.0 - r * r).powi(n as i32));
            }
            let (lo, hi) = ratios
                .iter()
                .fold((f64::MAX, 0f64), |(a, b), &x| (a.min(x), b.max(x)));
            assert!(
                lo > 0.05 && hi <= 1.0 / (1.0 - 0.0) + 1e-12 && hi / lo < 20.0,
                "{ratios:?}"
            );
        }
    }
}

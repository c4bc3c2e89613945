//! Deterministic quadrature on approach regions `Γ_γ(ζ)`, `n ∈ {1, 2}`.
//!
//! Write `z = λζ + vζ⊥` with `λ = 1 − s e^{iψ}`. Then `z ∈ Γ_γ(ζ)` iff
//! `cos ψ > 1/γ`, `s < s_max(ψ) = 2cos ψ − 2/γ` and
//! `|v|² < s (s_max − s)`. The vertex `s → 0` is resolved with
//! `s = s_max 2^{−x}`, so `dA(λ) = s_max² 2^{−2x} ln 2 dx dψ`.
//! All grids are inclusive trapezoid rules that nest under doubling.

use std::f64::consts::{LN_2, PI};

use super::{norm_sq, BoundaryPoint, Point, C64};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RegionGrid {
    /// Nodes per unit of `x = log2(s_max/s)`.
    pub levels_per_octave: usize,
    /// Intervals in `ψ`.
    pub angular: usize,
    /// Intervals in `|v|` (only used for `n = 2`).
    pub transverse_radial: usize,
    /// Nodes in `arg v` (only used for `n = 2`).
    pub transverse_angular: usize,
    /// Truncation: nodes with `s < ε` or `|z| > 1 − ε` are dropped.
    pub eps: f64,
}

impl Default for RegionGrid {
    fn default() -> Self {
        RegionGrid {
            levels_per_octave: 4,
            angular: 16,
            transverse_radial: 6,
            transverse_angular: 8,
            eps: 1e-4,
        }
    }
}

impl RegionGrid {
    /// Doubles every resolution; the node set of `self` is a subset.
    pub fn refined(&self) -> Self {
        RegionGrid {
            levels_per_octave: self.levels_per_octave * 2,
            angular: self.angular * 2,
            transverse_radial: self.transverse_radial * 2,
            transverse_angular: self.transverse_angular * 2,
            eps: self.eps,
        }
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        RegionGrid {
            eps,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug)]
pub struct RegionNode {
    pub point: Point,
    /// Weight for the normalized volume `dv`.
    pub weight: f64,
}

/// Quadrature nodes of `Γ_γ(ζ)` for `dv`.
pub fn approach_region_nodes(
    zeta: &BoundaryPoint,
    gamma: f64,
    grid: &RegionGrid,
) -> Result<Vec<RegionNode>> {
    let n = zeta.dim();
    if n > 2 {
        return Err(Error::Input(format!(
            "approach-region quadrature supports n ≤ 2, got n = {n}"
        )));
    }
    if !(gamma > 1.0) {
        return Err(Error::Input(format!(
            "aperture must satisfy γ > 1, got {gamma}"
        )));
    }
    if grid.levels_per_octave == 0 || grid.angular < 2 || !(grid.eps > 0.0 && grid.eps < 1.0) {
        return Err(Error::Input("degenerate region grid".into()));
    }
    let z1 = zeta.coords()[0];
    let perp = if n == 2 {
        Some([-zeta.coords()[1].conj(), z1.conj()])
    } else {
        None
    };
    let psi_max = (1.0 / gamma).acos();
    let h_psi = 2.0 * psi_max / grid.angular as f64;
    let h_x = 1.0 / grid.levels_per_octave as f64;
    let vol_norm = if n == 1 { 1.0 / PI } else { 2.0 / (PI * PI) };
    let limit = (1.0 - grid.eps).powi(2);

    let mut out = Vec::new();
    // Interior ψ nodes only: at ±ψ_max the region is empty.
    for i in 1..grid.angular {
        let psi = -psi_max + h_psi * i as f64;
        let s_max = 2.0 * psi.cos() - 2.0 / gamma;
        if s_max <= 0.0 {
            continue;
        }
        let rot = C64::from_polar(1.0, psi);
        let mut k = 0usize;
        loop {
            let x = h_x * k as f64;
            let sig = (-x * LN_2).exp();
            let s = s_max * sig;
            if s < grid.eps {
                break;
            }
            let wx = if k == 0 { 0.5 * h_x } else { h_x };
            let da = s_max * s_max * sig * sig * LN_2 * wx * h_psi;
            let lambda = C64::new(1.0, 0.0) - rot * s;
            k += 1;
            match perp {
                None => push(&mut out, vec![lambda * z1], da * vol_norm, limit),
                Some(p) => {
                    let rv = (s * (s_max - s)).max(0.0).sqrt();
                    let tr = grid.transverse_radial;
                    let ta = grid.transverse_angular;
                    let h_r = rv / tr as f64;
                    let base = [lambda * z1, lambda * zeta.coords()[1]];
                    // ρ = 0 has zero Jacobian; ρ = R_v is a half-weight end node.
                    for a in 1..=tr {
                        let rho = h_r * a as f64;
                        let wr = if a == tr { 0.5 * h_r } else { h_r } * rho;
                        for b in 0..ta {
                            let v = C64::from_polar(rho, 2.0 * PI * b as f64 / ta as f64);
                            let w = wr * 2.0 * PI / ta as f64;
                            let coords = vec![base[0] + v * p[0], base[1] + v * p[1]];
                            push(&mut out, coords, da * w * vol_norm, limit);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn push(out: &mut Vec<RegionNode>, coords: Vec<C64>, weight: f64, limit: f64) {
    let ns = norm_sq(&coords);
    if ns > limit || ns >= 1.0 || !(weight > 0.0) {
        return;
    }
    out.push(RegionNode {
        point: Point {
            coords,
            norm_sq: ns,
        },
        weight,
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RegionSpec;

    #[test]
    fn nodes_lie_in_the_closed_region() {
        for n in [1usize, 2] {
            let zeta = if n == 1 {
                BoundaryPoint::circle(0.7)
            } else {
                BoundaryPoint::normalize(vec![C64::new(0.3, 0.4), C64::new(-0.5, 0.2)]).unwrap()
            };
            let grid = RegionGrid::default();
            let nodes = approach_region_nodes(&zeta, 2.5, &grid).unwrap();
            assert!(!nodes.is_empty());
            let wide = RegionSpec::approach(2.5 * (1.0 + 1e-9), zeta.clone()).unwrap();
            for nd in &nodes {
                assert!(nd.weight > 0.0);
                // Closure: transverse end nodes sit on ∂Γ.
                assert!(
                    wide.contains(nd.point.coords()) || {
                        let d = (C64::new(1.0, 0.0)
                            - crate::geometry::inner(nd.point.coords(), zeta.coords()))
                        .norm();
                        (d - 1.25 * (1.0 - nd.point.norm_sq())).abs() < 1e-9
                    }
                );
            }
        }
    }

    #[test]
    fn volume_of_disk_region_matches_monte_carlo() {
        use rand::{Rng, SeedableRng};
        let zeta = BoundaryPoint::north(1);
        let grid = RegionGrid {
            levels_per_octave: 16,
            angular: 256,
            ..RegionGrid::default()
        }
        .with_eps(1e-8);
        let vol: f64 = approach_region_nodes(&zeta, 2.5, &grid)
            .unwrap()
            .iter()
            .map(|nd| nd.weight)
            .sum();
        let region = RegionSpec::approach(2.5, zeta).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let m = 400_000;
        let mut hits = 0;
        let mut tried = 0;
        while tried < m {
            let (x, y): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if x * x + y * y >= 1.0 {
                continue;
            }
            tried += 1;
            if region.contains(&[C64::new(x, y)]) {
                hits += 1;
            }
        }
        let p = hits as f64 / m as f64;
        assert!(
            (vol - p).abs() < 4.0 * (p / m as f64).sqrt() + 1e-3,
            "{vol} vs {p}"
        );
    }

    #[test]
    fn volume_n2_matches_monte_carlo() {
        use crate::geometry::sample_ball;
        let zeta = BoundaryPoint::north(2);
        let grid = RegionGrid {
            levels_per_octave: 8,
            angular: 64,
            transverse_radial: 12,
            transverse_angular: 8,
            eps: 1e-6,
        };
        let vol: f64 = approach_region_nodes(&zeta, 2.5, &grid)
            .unwrap()
            .iter()
            .map(|nd| nd.weight)
            .sum();
        let region = RegionSpec::approach(2.5, zeta).unwrap();
        let s = sample_ball(2, 200_000, 12, 1);
        let e = s.integrate(|z| {
            if region.contains(z.coords()) {
                1.0
            } else {
                0.0
            }
        });
        assert!(
            (vol - e.value).abs() < 4.0 * e.std_error + 2e-3 * e.value,
            "{vol} vs {e:?}"
        );
    }

    #[test]
    fn refinement_nests_nodes() {
        let zeta = BoundaryPoint::north(1);
        let g = RegionGrid::default();
        let a = approach_region_nodes(&zeta, 2.5, &g).unwrap();
        let b = approach_region_nodes(&zeta, 2.5, &g.refined()).unwrap();
        for nd in &a {
            assert!(b
                .iter()
                .any(|m| (m.point.coords()[0] - nd.point.coords()[0]).norm() < 1e-13));
        }
    }

    #[test]
    fn rejects_high_dimension() {
        let zeta = BoundaryPoint::north(3);
        assert!(approach_region_nodes(&zeta, 2.5, &RegionGrid::default()).is_err());
    }
}

//! Measure families used by the band experiments.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    bergman_metric, build_lattice_with, uniform_sphere_direction, BoundaryPoint, LatticeConfig,
    LatticeRegion, Point, C64,
};
use crate::measure::AtomicMeasure;

fn default_members() -> usize {
    8
}

fn one() -> usize {
    1
}

fn default_density() -> usize {
    20_000
}

fn default_cloud_beta() -> f64 {
    3.0
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Member `k` holds the atoms `z_j = (1 − 2^{−j}) ζ₀`, `j < first + k`,
    /// with `c_j = (1−|z_j|)^{n·rate}`.
    BoundaryAccumulation {
        rate: f64,
        #[serde(default = "default_members")]
        members: usize,
        #[serde(default = "one")]
        first: usize,
        /// `ζ₀` as flat `[re, im, ...]`; defaults to `e_1`.
        #[serde(default)]
        zeta: Option<Vec<f64>>,
    },
    /// One atom per center of a lattice on `D(0, β_k)`, `β_k` growing
    /// linearly from the innermost center to `beta_max`, with
    /// `c = (1−|a|²)^{n·weight_exponent}`.
    LatticeUniform {
        r: f64,
        weight_exponent: f64,
        #[serde(default = "default_members")]
        members: usize,
        #[serde(default = "default_cloud_beta")]
        beta_max: f64,
        #[serde(default = "default_density")]
        density: usize,
    },
    /// `count` atoms with Bergman radius uniform on `[0, beta_max]`, uniform
    /// directions and `c = u (1−|z|²)^n`, `u ~ U[1/2, 3/2]`; one seed per member.
    RandomCloud {
        count: usize,
        #[serde(default = "default_members")]
        members: usize,
        #[serde(default = "default_cloud_beta")]
        beta_max: f64,
    },
    FromFile {
        path: PathBuf,
    },
}

/// A family member with the parameter that indexes it.
#[derive(Clone, Debug)]
pub struct Member {
    pub label: String,
    pub param: f64,
    pub measure: AtomicMeasure,
}

pub fn boundary_accumulation(
    n: usize,
    rate: f64,
    atoms: usize,
    zeta: &BoundaryPoint,
) -> Result<AtomicMeasure> {
    let pts = (1..=atoms)
        .map(|j| {
            let d = 0.5f64.powi(j as i32);
            Ok((zeta.scaled(1.0 - d)?, d.powf(n as f64 * rate)))
        })
        .collect::<Result<Vec<_>>>()?;
    AtomicMeasure::new(n, pts)
}

pub fn generate_family(n: usize, spec: &FamilySpec, seed: u64) -> Result<Vec<Member>> {
    if n == 0 {
        return Err(Error::Config("dimension must be positive".into()));
    }
    match spec {
        FamilySpec::BoundaryAccumulation {
            rate,
            members,
            first,
            zeta,
        } => {
            if !rate.is_finite() || *first == 0 {
                return Err(Error::Config(
                    "boundary_accumulation needs a finite rate and first ≥ 1".into(),
                ));
            }
            let zeta = match zeta {
                Some(flat) => BoundaryPoint::normalize(crate::geometry::coords_from_flat(flat)?)?,
                None => BoundaryPoint::north(n),
            };
            if zeta.dim() != n {
                return Err(Error::Config("ζ₀ dimension differs from dim".into()));
            }
            (0..*members)
                .map(|k| {
                    let atoms = first + k;
                    Ok(Member {
                        label: format!("atoms={atoms}"),
                        param: atoms as f64,
                        measure: boundary_accumulation(n, *rate, atoms, &zeta)?,
                    })
                })
                .collect()
        }
        FamilySpec::LatticeUniform {
            r,
            weight_exponent,
            members,
            beta_max,
            density,
        } => {
            if *members == 0 || !(*beta_max > 0.0) {
                return Err(Error::Config(
                    "lattice_uniform needs members ≥ 1 and beta_max > 0".into(),
                ));
            }
            let cfg = LatticeConfig {
                region: LatticeRegion::Ball {
                    beta_max: *beta_max,
                },
                ..LatticeConfig::ball(n, *r, *density, seed)
            };
            let lattice = build_lattice_with(&cfg)?;
            let origin = Point::origin(n);
            // The ladder starts at the innermost center so no member is empty.
            let beta_min = lattice
                .centers
                .iter()
                .map(|a| bergman_metric(&origin, a))
                .fold(f64::INFINITY, f64::min);
            if !(beta_min <= *beta_max) {
                return Err(Error::Config(
                    "lattice_uniform lattice has no center inside beta_max".into(),
                ));
            }
            (0..*members)
                .map(|k| {
                    let frac = if *members > 1 {
                        k as f64 / (*members - 1) as f64
                    } else {
                        1.0
                    };
                    let beta = beta_min + (beta_max - beta_min) * frac;
                    let pts: Vec<(Point, f64)> = lattice
                        .centers
                        .iter()
                        .filter(|a| bergman_metric(&origin, a) <= beta)
                        .map(|a| {
                            (
                                a.clone(),
                                (1.0 - a.norm_sq()).powf(n as f64 * weight_exponent),
                            )
                        })
                        .collect();
                    let label = format!("beta={beta:.4} atoms={}", pts.len());
                    Ok(Member {
                        label,
                        param: beta,
                        measure: AtomicMeasure::new(n, pts)?,
                    })
                })
                .collect()
        }
        FamilySpec::RandomCloud {
            count,
            members,
            beta_max,
        } => (0..*members)
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
                let pts = (0..*count)
                    .map(|_| {
                        let beta = rng.random_range(0.0..*beta_max);
                        let dir = uniform_sphere_direction(&mut rng, n);
                        let z = Point::new(
                            dir.into_iter()
                                .map(|c| c * beta.tanh())
                                .collect::<Vec<C64>>(),
                        )?;
                        let c = rng.random_range(0.5..1.5) * (1.0 - z.norm_sq()).powi(n as i32);
                        Ok((z, c))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Member {
                    label: format!("cloud={k}"),
                    param: k as f64,
                    measure: AtomicMeasure::new(n, pts)?,
                })
            })
            .collect(),
        FamilySpec::FromFile { path } => {
            let mu = AtomicMeasure::load(path)?;
            if mu.dim() != n {
                return Err(Error::Config(format!(
                    "measure file has dim {}, config has {n}",
                    mu.dim()
                )));
            }
            Ok(vec![Member {
                label: path.display().to_string(),
                param: 0.0,
                measure: mu,
            }])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn boundary_family_example() {
        let spec = FamilySpec::BoundaryAccumulation {
            rate: 1.0,
            members: 5,
            first: 1,
            zeta: None,
        };
        let fam = generate_family(1, &spec, 0).unwrap();
        let last = &fam[4].measure;
        assert_eq!(last.len(), 5);
        for (j, a) in last.atoms().iter().enumerate() {
            let d = 0.5f64.powi(j as i32 + 1);
            assert_relative_eq!(a.c, d, epsilon = 1e-15);
            assert_relative_eq!(a.z.coords()[0].re, 1.0 - d, epsilon = 1e-15);
        }
    }

    #[test]
    fn clouds_are_seeded() {
        let spec = FamilySpec::RandomCloud {
            count: 20,
            members: 2,
            beta_max: 2.0,
        };
        let a = generate_family(2, &spec, 9).unwrap();
        let b = generate_family(2, &spec, 9).unwrap();
        assert_eq!(a[1].measure, b[1].measure);
        assert_ne!(a[0].measure, a[1].measure);
    }

    #[test]
    fn lattice_family_is_nested() {
        let spec = FamilySpec::LatticeUniform {
            r: 0.7,
            weight_exponent: 1.0,
            members: 3,
            beta_max: 2.0,
            density: 10_000,
        };
        let fam = generate_family(1, &spec, 1).unwrap();
        assert!(fam
            .windows(2)
            .all(|w| w[0].measure.len() <= w[1].measure.len()));
        assert_eq!(fam[0].measure.len(), 1);
        assert_eq!(fam[2].param, 2.0);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mu.json");
        let mu = boundary_accumulation(2, 1.0, 4, &BoundaryPoint::north(2)).unwrap();
        mu.save(&path).unwrap();
        let fam = generate_family(2, &FamilySpec::FromFile { path }, 0).unwrap();
        assert_eq!(fam[0].measure, mu);
    }
}

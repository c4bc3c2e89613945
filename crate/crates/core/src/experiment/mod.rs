//! Config-driven band experiments with versioned CSV and JSON reports.

mod family;

pub use family::{boundary_accumulation, generate_family, FamilySpec, Member};

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disk::{
    pullback_measure, schatten_criterion_integral, volterra_measure, wcomp_singular_values,
    CriterionConfig, CriterionSource, DiskMap,
};
use crate::error::{Error, Result};
use crate::geometry::{
    lattice_near, min_neighborhood_density, sample_ball, sample_sphere, InvariantQuadrature, C64,
};
use crate::holo::HoloFunction;
use crate::measure::{
    carleson_constant, lattice_sum, profile_directions, resolution_ladder, st_lambda_norm, t_p,
    tilde_mu_lr_norm, vanishing_profile, AtomicMeasure, CarlesonGrid, CarlesonMethod,
};
use crate::spectral::{gram_spectrum, opnorm_probe_hp_hq, ProbeSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub enum ExperimentKind {
    #[serde(rename = "thm1.1-band")]
    BoundednessBand,
    #[serde(rename = "thm1.2-band")]
    LowerExponentBand,
    #[serde(rename = "thm6.2-band")]
    SchattenBand,
    #[serde(rename = "sec5-profile")]
    CompactnessProfile,
    #[serde(rename = "sec7-wcomp")]
    WeightedComposition,
    #[serde(rename = "sec7-volterra")]
    Volterra,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::BoundednessBand => "thm1.1-band",
            ExperimentKind::LowerExponentBand => "thm1.2-band",
            ExperimentKind::SchattenBand => "thm6.2-band",
            ExperimentKind::CompactnessProfile => "sec5-profile",
            ExperimentKind::WeightedComposition => "sec7-wcomp",
            ExperimentKind::Volterra => "sec7-volterra",
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub gamma: Option<f64>,
    pub r: Option<f64>,
    /// Exponent list for the Schatten and Volterra experiments.
    pub ps: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSizes {
    pub carleson_sphere: usize,
    pub carleson_refinements: usize,
    pub radial_levels: usize,
    pub probe_sphere: usize,
    pub tilde_sphere: usize,
    pub profile_sphere: usize,
    pub quad_base: usize,
    pub quad_anchor: usize,
    pub quad_shells: usize,
    pub lattice_r: f64,
    pub lattice_density: usize,
    pub inner_samples: usize,
    pub inner_shells: usize,
    pub gram_samples: usize,
}

impl Default for SamplerSizes {
    fn default() -> Self {
        SamplerSizes {
            carleson_sphere: 64,
            carleson_refinements: 3,
            radial_levels: 16,
            probe_sphere: 2048,
            tilde_sphere: 16384,
            profile_sphere: 64,
            quad_base: 8192,
            quad_anchor: 8192,
            quad_shells: 32,
            lattice_r: 0.5,
            lattice_density: 20_000,
            inner_samples: 2048,
            inner_shells: 24,
            gram_samples: 384,
        }
    }
}

/// Disk data for the section 7 experiments; coefficients as `[re, im]`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DiskParams {
    pub phi: Vec<[f64; 2]>,
    pub u: Vec<[f64; 2]>,
    pub g: Vec<[f64; 2]>,
    pub section: usize,
    pub grid: usize,
    pub top: usize,
}

impl Default for DiskParams {
    fn default() -> Self {
        DiskParams {
            phi: vec![[0.0, 0.0], [0.5, 0.0]],
            u: vec![[1.0, 0.0]],
            g: vec![[0.0, 0.0], [1.0, 0.0]],
            section: 64,
            grid: 512,
            top: 10,
        }
    }
}

/// A declared ratio band; rows are checked when they match every selector given.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub quantity_a: Option<String>,
    pub quantity_b: Option<String>,
    pub min: f64,
    pub max: f64,
}

impl Band {
    pub fn matches(&self, row: &ReportRow) -> bool {
        self.quantity_a
            .as_ref()
            .is_none_or(|q| *q == row.quantity_a)
            && self
                .quantity_b
                .as_ref()
                .is_none_or(|q| *q == row.quantity_b)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    /// Band violations make the run fail.
    #[serde(default)]
    pub test_mode: bool,
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub sampler: SamplerSizes,
    #[serde(default)]
    pub disk: DiskParams,
    #[serde(default)]
    pub bands: Vec<Band>,
    #[serde(default)]
    pub output: Outputs,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReportRow {
    pub schema_version: u32,
    pub experiment: String,
    pub member: String,
    pub param: f64,
    pub quantity_a: String,
    pub quantity_b: String,
    pub value_a: f64,
    pub value_b: f64,
    pub ratio: f64,
}

/// Observed ratio range of one quantity pair.
#[derive(Clone, Debug, Serialize)]
pub struct BandSummary {
    pub quantity_a: String,
    pub quantity_b: String,
    pub min: f64,
    pub max: f64,
    pub width: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub seed: u64,
    pub version: String,
    pub rows: Vec<ReportRow>,
    pub bands: Vec<BandSummary>,
    pub declared_bands: Vec<Band>,
    /// Rows outside a declared band, naming the member.
    pub violations: Vec<String>,
    /// Per-row diagnostics (divergence and vanishing flags).
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn band(&self, quantity_a: &str, quantity_b: &str) -> Option<&BandSummary> {
        self.bands
            .iter()
            .find(|b| b.quantity_a == quantity_a && b.quantity_b == quantity_b)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn row(
    kind: ExperimentKind,
    member: &str,
    param: f64,
    qa: &str,
    qb: &str,
    a: f64,
    b: f64,
) -> ReportRow {
    ReportRow {
        schema_version: SCHEMA_VERSION,
        experiment: kind.name().into(),
        member: member.into(),
        param,
        quantity_a: qa.into(),
        quantity_b: qb.into(),
        value_a: a,
        value_b: b,
        ratio: if b != 0.0 { a / b } else { f64::NAN },
    }
}

fn need(v: Option<f64>, name: &str, default: f64) -> f64 {
    let _ = name;
    v.unwrap_or(default)
}

fn members(cfg: &ExperimentConfig) -> Result<Vec<Member>> {
    let spec = cfg.family.as_ref().ok_or_else(|| {
        Error::Config(format!(
            "experiment {} needs a [family] table",
            cfg.experiment.name()
        ))
    })?;
    generate_family(cfg.dim, spec, cfg.seed)
}

fn quadrature(cfg: &ExperimentConfig) -> InvariantQuadrature {
    InvariantQuadrature {
        base_samples: cfg.sampler.quad_base,
        anchor_samples: cfg.sampler.quad_anchor,
        shells: cfg.sampler.quad_shells,
        seed: cfg.seed,
    }
}

fn carleson_grid(cfg: &ExperimentConfig) -> CarlesonGrid {
    CarlesonGrid {
        sphere_size: cfg.sampler.carleson_sphere,
        refinements: cfg.sampler.carleson_refinements,
        radial_levels: cfg.sampler.radial_levels,
        seed: cfg.seed,
    }
}

fn probe_spec(cfg: &ExperimentConfig) -> ProbeSpec {
    ProbeSpec {
        sphere_size: cfg.sampler.probe_sphere,
        seed: cfg.seed,
        ..ProbeSpec::default()
    }
}

fn complex_list(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|p| C64::new(p[0], p[1])).collect()
}

fn disk_poly(v: &[[f64; 2]]) -> Result<HoloFunction> {
    let poly = v
        .iter()
        .enumerate()
        .map(|(k, p)| (vec![k as u32], C64::new(p[0], p[1])))
        .collect();
    HoloFunction::from_parts(1, poly, Vec::new())
}

/// Validates the hypotheses of the chosen experiment.
pub fn validate(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.dim == 0 {
        return Err(Error::Config("dim must be positive".into()));
    }
    if let Some(g) = cfg.params.gamma {
        if !(g > 1.0) {
            return Err(Error::Config(format!("aperture needs γ > 1, got {g}")));
        }
    }
    let n = cfg.dim;
    match cfg.experiment {
        ExperimentKind::BoundednessBand => {
            let p = need(cfg.params.p, "p", 2.0);
            let q = need(cfg.params.q, "q", 2.0);
            if p != 2.0 || q != 2.0 {
                return Err(Error::Config(
                    "thm1.1-band compares exact H² norms; needs p = q = 2".into(),
                ));
            }
            let s = need(cfg.params.s, "s", 1.0);
            if (s - (1.0 + 1.0 / p - 1.0 / q)).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "needs s = 1 + 1/p − 1/q = 1, got s = {s}"
                )));
            }
        }
        ExperimentKind::LowerExponentBand => {
            let p = need(cfg.params.p, "p", 4.0);
            let q = need(cfg.params.q, "q", 2.0);
            if !(q > 1.0 && p > q) {
                return Err(Error::Config(format!(
                    "thm1.2-band needs 1 < q < p, got p = {p}, q = {q}"
                )));
            }
            let r = p * q / (p - q);
            if let Some(given) = cfg.params.r {
                if (given - r).abs() > 1e-9 * r {
                    return Err(Error::Config(format!(
                        "needs 1/r = 1/q − 1/p, i.e. r = {r}, got {given}"
                    )));
                }
            }
        }
        ExperimentKind::SchattenBand => {
            let t = need(cfg.params.t, "t", n as f64);
            for &p in cfg
                .params
                .ps
                .as_deref()
                .unwrap_or(&[need(cfg.params.p, "p", 2.0)])
            {
                if !(p > 0.0) {
                    return Err(Error::Config(format!(
                        "Schatten exponent must be positive, got {p}"
                    )));
                }
                let tp = t_p(n, p);
                if !(t > tp) {
                    return Err(Error::Config(format!(
                        "hypothesis t > t_p violated: p = {p}, t_p = {tp}, t = {t}"
                    )));
                }
            }
        }
        ExperimentKind::CompactnessProfile => {
            let s = need(cfg.params.s, "s", 1.0);
            if !(s >= 1.0) {
                return Err(Error::Config(format!(
                    "profile exponent needs s ≥ 1, got {s}"
                )));
            }
        }
        ExperimentKind::WeightedComposition | ExperimentKind::Volterra => {
            if n != 1 {
                return Err(Error::Config(
                    "section 7 experiments run on the disk (dim = 1)".into(),
                ));
            }
            if cfg.experiment == ExperimentKind::Volterra {
                let t = need(cfg.params.t, "t", 1.5);
                for &p in cfg
                    .params
                    .ps
                    .as_deref()
                    .unwrap_or(&[need(cfg.params.p, "p", 2.0)])
                {
                    let tp = t_p(1, p / 2.0);
                    if !(t > tp) {
                        return Err(Error::Config(format!(
                            "hypothesis t > t_p violated at p/2: p = {p}, t_{{p/2}} = {tp}, t = {t}"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Runs the experiment and writes the configured outputs.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    validate(cfg)?;
    let kind = cfg.experiment;
    let n = cfg.dim;
    let mut notes = Vec::new();
    let rows: Vec<ReportRow> = match kind {
        ExperimentKind::BoundednessBand => {
            let grid = carleson_grid(cfg);
            let out = members(cfg)?
                .par_iter()
                .map(|m| {
                    let a = gram_spectrum(&m.measure)?.lambda_max();
                    let b = carleson_constant(&m.measure, 1.0, CarlesonMethod::Box, &grid)?.value;
                    Ok(row(
                        kind,
                        &m.label,
                        m.param,
                        "op_norm_h2",
                        "carleson_box_s1",
                        a,
                        b,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            out
        }
        ExperimentKind::LowerExponentBand => {
            let p = need(cfg.params.p, "p", 4.0);
            let q = need(cfg.params.q, "q", 2.0);
            let r = p * q / (p - q);
            let gamma = need(cfg.params.gamma, "gamma", crate::geometry::DEFAULT_APERTURE);
            let sphere = sample_sphere(n, cfg.sampler.tilde_sphere, cfg.seed);
            let spec = probe_spec(cfg);
            members(cfg)?
                .par_iter()
                .map(|m| {
                    let a = opnorm_probe_hp_hq(&m.measure, p, q, &spec)?.lower_bound;
                    let b = tilde_mu_lr_norm(&m.measure, r, gamma, &sphere)?.value;
                    Ok(row(
                        kind,
                        &m.label,
                        m.param,
                        "probe_lower_bound",
                        "tilde_mu_lr",
                        a,
                        b,
                    ))
                })
                .collect::<Result<Vec<_>>>()?
        }
        ExperimentKind::SchattenBand => {
            let t = need(cfg.params.t, "t", n as f64);
            let ps = cfg
                .params
                .ps
                .clone()
                .unwrap_or_else(|| vec![need(cfg.params.p, "p", 2.0)]);
            let quad = quadrature(cfg);
            let fam = members(cfg)?;
            let mut out = Vec::new();
            for m in &fam {
                let rows = schatten_rows(kind, m, &ps, t, &quad, cfg, &mut notes)?;
                out.extend(rows);
            }
            out
        }
        ExperimentKind::CompactnessProfile => {
            let s = need(cfg.params.s, "s", 1.0);
            let fam = members(cfg)?;
            let sphere = sample_sphere(n, cfg.sampler.profile_sphere, cfg.seed);
            let results = fam
                .par_iter()
                .map(|m| {
                    let mut zetas = sphere.points.clone();
                    zetas.extend(profile_directions(&m.measure));
                    let prof =
                        vanishing_profile(&m.measure, s, &resolution_ladder(&m.measure), &zetas)?;
                    let lam = gram_spectrum(&m.measure)?.lambda_max();
                    Ok((prof, lam))
                })
                .collect::<Result<Vec<_>>>()?;
            let base = results.first().map(|r| r.1).unwrap_or(1.0);
            fam.iter()
                .zip(&results)
                .map(|(m, (prof, lam))| {
                    notes.push(format!("{}: profile slope {:.6}", m.label, prof.slope));
                    row(
                        kind,
                        &m.label,
                        m.param,
                        "vanishing_flag",
                        "lambda_1",
                        f64::from(u8::from(prof.vanishing)),
                        *lam,
                    )
                })
                .map(|mut r| {
                    // The ratio column carries λ_1 growth relative to the first member.
                    r.ratio = r.value_b / base;
                    r
                })
                .collect()
        }
        ExperimentKind::WeightedComposition => {
            let d = &cfg.disk;
            let map = DiskMap::new(complex_list(&d.phi), disk_poly(&d.u)?)?;
            let sv = wcomp_singular_values(&map, d.section)?;
            let eig = gram_spectrum(&pullback_measure(&map, d.grid)?)?.eigenvalues;
            let label = format!("N={},m={}", d.section, d.grid);
            (0..d.top.min(sv.len()).min(eig.len()))
                .map(|k| {
                    row(
                        kind,
                        &label,
                        (k + 1) as f64,
                        "section_singular_value",
                        "sqrt_pullback_eigenvalue",
                        sv[k],
                        eig[k].sqrt(),
                    )
                })
                .collect()
        }
        ExperimentKind::Volterra => {
            let d = &cfg.disk;
            let g = disk_poly(&d.g)?;
            let t = need(cfg.params.t, "t", 1.5);
            let ps = cfg
                .params
                .ps
                .clone()
                .unwrap_or_else(|| vec![need(cfg.params.p, "p", 2.0)]);
            let crit = CriterionConfig {
                quad: quadrature(cfg),
                inner_samples: cfg.sampler.inner_samples,
                inner_shells: cfg.sampler.inner_shells,
                boundary_grid: d.grid,
                seed: cfg.seed,
            };
            let gram_mu = volterra_measure(
                &g,
                &sample_ball(
                    1,
                    cfg.sampler.gram_samples,
                    cfg.sampler.inner_shells,
                    cfg.seed,
                ),
            )?;
            let spec = gram_spectrum(&gram_mu)?;
            let mut out = Vec::new();
            for &p in &ps {
                let r = schatten_criterion_integral(CriterionSource::Volterra(&g), p, t, &crit)?;
                if r.divergence_warning {
                    notes.push(format!(
                        "p = {p}: criterion integral does not decay (rate {:.4})",
                        r.decay_rate
                    ));
                }
                let sp = if spec.eigenvalues.is_empty() {
                    0.0
                } else {
                    spec.schatten(p / 2.0)?.powf(p / 2.0)
                };
                out.push(row(
                    kind,
                    "volterra",
                    p,
                    "criterion_integral",
                    "sum_lambda_pow_p_half",
                    r.value,
                    sp,
                ));
            }
            out
        }
    };

    let violations: Vec<String> = cfg
        .bands
        .iter()
        .flat_map(|b| {
            rows.iter()
                .filter(|r| b.matches(r) && !(r.ratio >= b.min && r.ratio <= b.max))
                .map(move |r| {
                    format!(
                        "{} ({}): {}/{} = {} outside [{}, {}]",
                        r.member, r.param, r.quantity_a, r.quantity_b, r.ratio, b.min, b.max
                    )
                })
        })
        .collect();
    for v in &violations {
        log::error!("band violation: {v}");
    }
    let report = ExperimentReport {
        schema_version: SCHEMA_VERSION,
        experiment: kind.name().into(),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        bands: summarize(&rows),
        rows,
        declared_bands: cfg.bands.clone(),
        violations,
        notes,
    };
    if let Some(p) = &cfg.output.csv {
        fs::write(p, report.to_csv()?)?;
    }
    if let Some(p) = &cfg.output.json {
        fs::write(p, report.to_json()?)?;
    }
    Ok(report)
}

fn summarize(rows: &[ReportRow]) -> Vec<BandSummary> {
    let mut out: Vec<BandSummary> = Vec::new();
    for r in rows {
        let idx = match out
            .iter()
            .position(|b| b.quantity_a == r.quantity_a && b.quantity_b == r.quantity_b)
        {
            Some(i) => i,
            None => {
                out.push(BandSummary {
                    quantity_a: r.quantity_a.clone(),
                    quantity_b: r.quantity_b.clone(),
                    min: f64::INFINITY,
                    max: 0.0,
                    width: f64::NAN,
                });
                out.len() - 1
            }
        };
        if r.ratio.is_finite() {
            let b = &mut out[idx];
            b.min = b.min.min(r.ratio);
            b.max = b.max.max(r.ratio);
        }
    }
    for b in &mut out {
        b.width = if b.min > 0.0 && b.min.is_finite() {
            b.max / b.min
        } else {
            f64::INFINITY
        };
    }
    out
}

fn schatten_rows(
    kind: ExperimentKind,
    m: &Member,
    ps: &[f64],
    t: f64,
    quad: &InvariantQuadrature,
    cfg: &ExperimentConfig,
    notes: &mut Vec<String>,
) -> Result<Vec<ReportRow>> {
    let mu: &AtomicMeasure = &m.measure;
    let spec = gram_spectrum(mu)?;
    let pts: Vec<_> = mu.atoms().iter().map(|a| a.z.clone()).collect();
    let r = cfg.sampler.lattice_r;
    let density = cfg
        .sampler
        .lattice_density
        .max(min_neighborhood_density(mu.dim(), r, pts.len()));
    let lattice = lattice_near(&pts, r, density, cfg.seed)?;
    let mut out = Vec::new();
    for &p in ps {
        let sp = spec.schatten(p)?.powf(p);
        let ls = lattice_sum(mu, &lattice, p)?;
        let st = st_lambda_norm(mu, t, p, quad)?;
        if st.divergence_warning {
            notes.push(format!(
                "{} p = {p}: S_t integral flagged as non-decaying",
                m.label
            ));
        }
        let sv = st.integral;
        let (a, b, c) = (
            format!("schatten^{p}"),
            format!("lattice_sum^{p}"),
            format!("st_norm^{p}"),
        );
        out.push(row(kind, &m.label, m.param, &a, &b, sp, ls));
        out.push(row(kind, &m.label, m.param, &a, &c, sp, sv));
        out.push(row(kind, &m.label, m.param, &b, &c, ls, sv));
    }
    Ok(out)
}

#[cfg(test)]
mod tests;

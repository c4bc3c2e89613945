// Negated comparisons are how NaN parameters get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use hardy_toeplitz::disk::{
    besov_seminorm, nevanlinna, schatten_criterion_integral, wcomp_singular_values,
    CriterionConfig, CriterionSource, DiskMap, DiskMapFile,
};
use hardy_toeplitz::experiment::{run, ExperimentConfig};
use hardy_toeplitz::geometry::{
    lattice_near, min_neighborhood_density, sample_ball, sample_sphere, Lattice, LatticeFile,
    DEFAULT_APERTURE,
};
use hardy_toeplitz::holo::HoloFile;
use hardy_toeplitz::measure::{
    carleson_constant, lattice_sum, profile_directions, resolution_ladder, st_lambda_norm,
    tilde_mu_lr_norm, vanishing_profile, CarlesonGrid, CarlesonMethod, CarlesonReport,
};
use hardy_toeplitz::spectral::{gram_spectrum, opnorm_probe_hp_hq, ProbeSpec};
use hardy_toeplitz::tent::{tent_norm, TentSequence};
use hardy_toeplitz::{AtomicMeasure, Error, HoloFunction, Result, C64};

#[derive(Parser)]
#[command(
    name = "qmu",
    version,
    about = "Toeplitz-type operators on Hardy spaces of the ball"
)]
struct Cli {
    /// Overrides the seed of every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_csv: Option<PathBuf>,
    /// JSON goes to stdout when omitted.
    #[arg(long, global = true)]
    out_json: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of Q_μ from the Gram matrix.
    Spectrum {
        #[arg(long)]
        measure: PathBuf,
    },
    /// s-Carleson constant by boxes, or by kernels when --kernel-t is given.
    Carleson {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long)]
        kernel_t: Option<f64>,
        #[arg(long, default_value_t = 64)]
        sphere: usize,
    },
    /// Schatten norm, lattice sum and S_t norm side by side.
    SchattenCheck {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0.5)]
        lattice_r: f64,
    },
    /// Probe lower bound for the H^p → H^q norm with the matching geometric quantity.
    BoundednessCheck {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = DEFAULT_APERTURE)]
        gamma: f64,
    },
    /// Box-ratio profile along shrinking δ with the vanishing flag.
    CompactnessProfile {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 64)]
        sphere: usize,
    },
    /// Tent space norm of a lattice sequence.
    Tent {
        #[arg(long)]
        lattice: PathBuf,
        /// JSON array of [re, im] pairs, one per lattice center.
        #[arg(long)]
        sequence: PathBuf,
        #[arg(long)]
        p: f64,
        /// Use `inf` for the sup variant.
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = DEFAULT_APERTURE)]
        gamma: f64,
        #[arg(long, default_value_t = 4096)]
        sphere: usize,
    },
    /// Disk applications.
    Apps {
        #[command(subcommand)]
        mode: AppMode,
    },
    /// Runs a band experiment from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum AppMode {
    /// Singular values of a finite section of uC_φ.
    Wcomp {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 64)]
        section: usize,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Besov seminorm of g and the Schatten criterion integral of J_g.
    Volterra {
        /// Holomorphic function file on the disk.
        #[arg(long)]
        g: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1.5)]
        t: f64,
        #[arg(long, default_value_t = 40_000)]
        samples: usize,
    },
    /// Nevanlinna counting function of the map's symbol at w.
    Nevanlinna {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        re: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        im: f64,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn load_map(path: &Path) -> Result<DiskMap> {
    DiskMap::from_file(&read_json::<DiskMapFile>(path)?)
}

struct Out<'a> {
    csv: Option<&'a Path>,
    json: Option<&'a Path>,
}

impl Out<'_> {
    fn json(&self, value: &serde_json::Value) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        match self.json {
            Some(p) => fs::write(p, text + "\n")?,
            None => println!("{text}"),
        }
        Ok(())
    }

    fn csv(&self, header: &str, rows: &[String]) -> Result<()> {
        if let Some(p) = self.csv {
            let mut text = format!("{header}\n");
            for r in rows {
                text.push_str(r);
                text.push('\n');
            }
            fs::write(p, text)?;
        }
        Ok(())
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    let seed = cli.seed.unwrap_or(0);
    let out = Out {
        csv: cli.out_csv.as_deref(),
        json: cli.out_json.as_deref(),
    };
    match &cli.command {
        Command::Spectrum { measure } => {
            let mu = AtomicMeasure::load(measure)?;
            let spec = gram_spectrum(&mu)?;
            let rows: Vec<String> = spec
                .eigenvalues
                .iter()
                .enumerate()
                .map(|(k, v)| format!("{},{v:e}", k + 1))
                .collect();
            out.csv("index,eigenvalue", &rows)?;
            out.json(&serde_json::to_value(&spec)?)?;
        }
        Command::Carleson {
            measure,
            s,
            kernel_t,
            sphere,
        } => {
            let mu = AtomicMeasure::load(measure)?;
            let method = kernel_t.map_or(CarlesonMethod::Box, |t| CarlesonMethod::Kernel { t });
            let grid = CarlesonGrid {
                sphere_size: *sphere,
                seed,
                ..CarlesonGrid::default()
            };
            let rep = carleson_constant(&mu, *s, method, &grid)?;
            out.csv(CarlesonReport::csv_header(), &rep.csv_rows())?;
            out.json(&serde_json::to_value(&rep)?)?;
        }
        Command::SchattenCheck {
            measure,
            p,
            t,
            lattice_r,
        } => {
            let mu = AtomicMeasure::load(measure)?;
            let sp = gram_spectrum(&mu)?.schatten(*p)?.powf(*p);
            let pts: Vec<_> = mu.atoms().iter().map(|a| a.z.clone()).collect();
            let density = min_neighborhood_density(mu.dim(), *lattice_r, pts.len()).max(20_000);
            let lattice = lattice_near(&pts, *lattice_r, density, seed)?;
            let ls = lattice_sum(&mu, &lattice, *p)?;
            let quad = hardy_toeplitz::geometry::InvariantQuadrature {
                seed,
                ..Default::default()
            };
            let st = st_lambda_norm(&mu, *t, *p, &quad)?;
            out.csv(
                "p,t,schatten_pow_p,lattice_sum,st_norm_pow_p,st_std_error",
                &[format!(
                    "{p},{t},{sp:e},{ls:e},{:e},{:e}",
                    st.integral, st.std_error
                )],
            )?;
            out.json(&json!({
                "p": p, "t": t, "schatten_pow_p": sp, "lattice_sum": ls,
                "st_norm_pow_p": st.integral, "st_std_error": st.std_error,
                "divergence_warning": st.divergence_warning,
                "ratio_schatten_lattice": sp / ls, "ratio_schatten_st": sp / st.integral,
            }))?;
        }
        Command::BoundednessCheck {
            measure,
            p,
            q,
            gamma,
        } => {
            let mu = AtomicMeasure::load(measure)?;
            let probe = opnorm_probe_hp_hq(
                &mu,
                *p,
                *q,
                &ProbeSpec {
                    seed,
                    ..ProbeSpec::default()
                },
            )?;
            let (name, side) = if q < p {
                let r = p * q / (p - q);
                let sphere = sample_sphere(mu.dim(), 16_384, seed);
                (
                    "tilde_mu_lr",
                    tilde_mu_lr_norm(&mu, r, *gamma, &sphere)?.value,
                )
            } else {
                let s = 1.0 + 1.0 / p - 1.0 / q;
                let grid = CarlesonGrid {
                    seed,
                    ..CarlesonGrid::default()
                };
                (
                    "carleson_box",
                    carleson_constant(&mu, s, CarlesonMethod::Box, &grid)?.value,
                )
            };
            out.csv(
                &format!("p,q,probe_lower_bound,{name}"),
                &[format!("{p},{q},{:e},{side:e}", probe.lower_bound)],
            )?;
            out.json(&json!({ "p": p, "q": q, "probe": probe, name: side }))?;
        }
        Command::CompactnessProfile { measure, s, sphere } => {
            let mu = AtomicMeasure::load(measure)?;
            let mut zetas = sample_sphere(mu.dim(), *sphere, seed).points;
            zetas.extend(profile_directions(&mu));
            let prof = vanishing_profile(&mu, *s, &resolution_ladder(&mu), &zetas)?;
            let rows: Vec<String> = prof
                .points
                .iter()
                .map(|(d, v)| format!("{d:e},{v:e}"))
                .collect();
            out.csv("delta,box_ratio", &rows)?;
            out.json(&serde_json::to_value(&prof)?)?;
        }
        Command::Tent {
            lattice,
            sequence,
            p,
            q,
            gamma,
            sphere,
        } => {
            let lat = Lattice::from_file(&read_json::<LatticeFile>(lattice)?)?;
            let seq = TentSequence::from_file(&read_json::<Vec<[f64; 2]>>(sequence)?, &lat)?;
            let sph = sample_sphere(lat.dim, *sphere, seed);
            let v = tent_norm(&seq, &lat, *p, *q, *gamma, &sph)?;
            out.csv("p,q,gamma,tent_norm", &[format!("{p},{q},{gamma},{v:e}")])?;
            out.json(&json!({ "p": p, "q": q, "gamma": gamma, "tent_norm": v }))?;
        }
        Command::Apps { mode } => match mode {
            AppMode::Wcomp { map, section, top } => {
                let m = load_map(map)?;
                let sv = wcomp_singular_values(&m, *section)?;
                let sv: Vec<f64> = sv.into_iter().take(*top).collect();
                let rows: Vec<String> = sv
                    .iter()
                    .enumerate()
                    .map(|(k, v)| format!("{},{v:e}", k + 1))
                    .collect();
                out.csv("index,singular_value", &rows)?;
                out.json(&json!({ "section": section, "singular_values": sv }))?;
            }
            AppMode::Volterra { g, p, t, samples } => {
                let g = HoloFunction::from_file(1, &read_json::<HoloFile>(g)?)?;
                let ball = sample_ball(1, *samples, 24, seed);
                let besov = besov_seminorm(&g, *p, &ball)?;
                let cfg = CriterionConfig {
                    seed,
                    ..CriterionConfig::default()
                };
                let crit =
                    schatten_criterion_integral(CriterionSource::Volterra(&g), *p, *t, &cfg)?;
                out.csv(
                    "p,t,besov,besov_std_error,criterion_integral,divergence_warning",
                    &[format!(
                        "{p},{t},{:e},{:e},{:e},{}",
                        besov.value,
                        besov.std_error,
                        crit.value,
                        besov.divergence_warning || crit.divergence_warning
                    )],
                )?;
                out.json(&json!({ "p": p, "t": t, "besov": besov, "criterion": crit }))?;
            }
            AppMode::Nevanlinna { map, re, im } => {
                let m = load_map(map)?;
                let v = nevanlinna(m.phi(), C64::new(*re, *im))?;
                out.csv("re,im,nevanlinna", &[format!("{re},{im},{v:e}")])?;
                out.json(&json!({ "w": [re, im], "nevanlinna": v }))?;
            }
        },
        Command::Run { config } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(p) = &cli.out_csv {
                cfg.output.csv = Some(p.clone());
            }
            if let Some(p) = &cli.out_json {
                cfg.output.json = Some(p.clone());
            }
            let report = run(&cfg)?;
            if cfg.output.json.is_none() {
                println!("{}", report.to_json()?);
            }
            for v in &report.violations {
                eprintln!("band violation: {v}");
            }
            if cfg.test_mode && !report.passed() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                _ => 3,
            })
        }
    }
}

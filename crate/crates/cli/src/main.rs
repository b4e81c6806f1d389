use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use momentlbm::stability::Model;
use momentlbm_cli::commands::{dispersion, info, quant_sweep, simulate, stability};
use momentlbm_cli::{PrecisionChoice, ScenarioKind, ScenarioSpec, Settings};

#[derive(Parser)]
#[command(name = "momentlbm", version, about = "Moment-encoded lattice Boltzmann solver and analysis tools")]
struct Cli {
    /// TOML run configuration (simulate, quant-sweep).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for all artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "MOMENTLBM_THREADS")]
    threads: Option<usize>,
    /// Sequential solid correction and timing-free CSV output.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Overrides the seed used for dithering.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write stats, snapshots and a summary.
    Simulate {
        /// Scenario preset to run when no config is given.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Von Neumann spectral-radius and dissipation maps over [0, π]².
    Stability {
        /// Models, comma separated (bgk, rm_mrt, nocm_mrt, home).
        #[arg(long = "models", value_delimiter = ',')]
        models: Vec<String>,
        /// Background velocity `ux,uy`; repeat for several.
        #[arg(long = "velocity")]
        velocities: Vec<String>,
        /// Viscosities, comma separated.
        #[arg(long = "nus", value_delimiter = ',')]
        nus: Vec<f64>,
        /// Samples per k axis.
        #[arg(long, default_value_t = 128)]
        grid: usize,
        /// Run the four models at the four preset velocities.
        #[arg(long)]
        reference: bool,
    },
    /// Numerical and analytic dispersion branches along kx.
    Dispersion {
        #[arg(long, default_value_t = dispersion::DEFAULT_NU)]
        nu: f64,
        #[arg(long, default_value_t = 257)]
        samples: usize,
        #[arg(long = "models", value_delimiter = ',')]
        models: Vec<String>,
        /// Background velocity `ux,uy`.
        #[arg(long, default_value = "0,0")]
        velocity: String,
    },
    /// Final-state velocity error of reduced-precision storage against 64 bits.
    QuantSweep {
        /// Precisions, comma separated (f64, f32, b_rhou/b_s).
        #[arg(long, value_delimiter = ',')]
        presets: Vec<String>,
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Lattices, presets and storage costs.
    Info,
}

fn parse_pair(s: &str) -> Result<[f64; 2]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("bad velocity `{s}`"))?;
    match v.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => bail!("velocity `{s}` needs two components"),
    }
}

fn parse_models(names: &[String]) -> Result<Vec<Model>> {
    if names.is_empty() {
        return Ok(Model::ALL.to_vec());
    }
    names.iter().map(|n| Ok(n.parse::<Model>()?)).collect()
}

fn load_spec(cli: &Cli, default: ScenarioKind, scenario: Option<&str>, steps: Option<u64>) -> Result<ScenarioSpec> {
    let mut settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::for_scenario(default),
    };
    if let Some(name) = scenario {
        settings.scenario = Some(name.to_string());
    }
    let mut spec = settings.resolve()?;
    if let Some(n) = steps {
        spec.steps = n;
    }
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    if cli.deterministic {
        spec.deterministic = true;
    }
    Ok(spec)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    let uses_config = matches!(cli.command, Command::Simulate { .. } | Command::QuantSweep { .. });
    if cli.config.is_some() && !uses_config {
        bail!("--config is only read by simulate and quant-sweep");
    }
    match &cli.command {
        Command::Simulate { scenario, steps } => {
            let spec = load_spec(&cli, ScenarioKind::TaylorVortex2d, scenario.as_deref(), *steps)?;
            let summary = simulate::simulate(&spec, &cli.out_dir)?;
            println!(
                "{}: {} of {} steps, {} snapshots in {}",
                summary.scenario,
                summary.steps_completed,
                summary.steps_requested,
                summary.snapshots.len(),
                cli.out_dir.display()
            );
            if let Some(e) = summary.error {
                eprintln!("error: {e}");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Stability {
            models,
            velocities,
            nus,
            grid,
            reference,
        } => {
            let req = if *reference {
                stability::StabilityRequest::reference(*grid)
            } else {
                let models: Vec<Model> = models.iter().map(|n| Ok(n.parse::<Model>()?)).collect::<Result<_>>()?;
                let velocities = if velocities.is_empty() {
                    vec![[0.0, 0.0]]
                } else {
                    velocities.iter().map(|v| parse_pair(v)).collect::<Result<_>>()?
                };
                stability::StabilityRequest {
                    models,
                    velocities,
                    nus: if nus.is_empty() { vec![stability::REFERENCE_NU] } else { nus.clone() },
                    grid: *grid,
                }
            };
            let maps = stability::compute(&req)?;
            for s in stability::write(&maps, &cli.out_dir)? {
                println!(
                    "{}: max|lambda| = {:.12}, unstable cells = {}",
                    s.panel, s.max_abs_lambda, s.unstable_count
                );
            }
            for c in stability::comparisons(&maps) {
                println!(
                    "home vs nocm at u = ({}, {}), nu = {:e}: max deviation {:.3e}",
                    c.ux, c.uy, c.nu, c.max_abs_lambda_deviation
                );
            }
        }
        Command::Dispersion {
            nu,
            samples,
            models,
            velocity,
        } => {
            let u = parse_pair(velocity)?;
            let curves = dispersion::compute(&parse_models(models)?, *nu, u, *samples)?;
            for s in dispersion::write(&curves, *nu, u, &cli.out_dir)? {
                println!(
                    "{}: slopes {:+.6} {:+.6}, gap vs nocm {:.3e}",
                    s.model, s.slope_acoustic_plus, s.slope_acoustic_minus, s.gap_re_vs_nocm
                );
            }
        }
        Command::QuantSweep { presets, steps } => {
            let spec = load_spec(&cli, ScenarioKind::DoubleLayerVortex2d, None, *steps)?;
            let presets: Vec<PrecisionChoice> = if presets.is_empty() {
                PrecisionChoice::sweep()
            } else {
                presets.iter().map(|p| p.parse()).collect::<Result<_>>()?
            };
            let runs = quant_sweep::sweep(&spec, &presets)?;
            quant_sweep::write(&runs, &cli.out_dir)?;
            for r in &runs {
                println!(
                    "{:>6}: l2 {:.3e}, {} B/node, rho saturation {:.2e}{}",
                    r.row.preset,
                    r.row.l2_error,
                    r.row.bytes_per_node,
                    r.row.rho_saturation,
                    if r.row.finite { "" } else { ", diverged" }
                );
            }
        }
        Command::Info => print!("{}", info()?),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

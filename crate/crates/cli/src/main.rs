mod config;
mod presets;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kuramoto_core::dynamics::SimulationConfig;
use kuramoto_core::ensemble::{SampleTemplate, SamplingStrategy, Variation};
use kuramoto_core::seeds::{derive, Stream};
use kuramoto_core::sweep::{Family, SweepPlan};
use kuramoto_core::topology::{generate_ws, kappa_dd, kappa_graph, kappa_ws, TopologySpec};

use config::{ConfigError, EnsembleSettings, RunConfig, ScanMode};
use run::{execute, RunError};

/// Kuramoto oscillators on ring networks: simulations, ensembles and sweeps.
#[derive(Parser)]
#[command(name = "kuramoto", version, about)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "KURAMOTO_OUT", default_value = "kuramoto-out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "KURAMOTO_WORKERS")]
    workers: Option<usize>,
    /// Progress messages on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one realization and write its trajectory.
    Simulate {
        #[command(flatten)]
        topology: TopologyArgs,
        #[command(flatten)]
        seeds: SeedArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Keep every n-th sample in phases.csv.
        #[arg(long, default_value_t = 10)]
        phase_stride: usize,
    },
    /// Run an ensemble of realizations.
    Ensemble {
        #[command(flatten)]
        topology: TopologyArgs,
        #[command(flatten)]
        seeds: SeedArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_enum, default_value_t = StrategyArg::ShuffleFreq)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 51)]
        count: usize,
        /// Seed the per-sample seeds derive from.
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        /// Target frequency for single-unit changes.
        #[arg(long, default_value_t = 3.0)]
        omega_new: f64,
        /// Shift for perturb-unit.
        #[arg(long, default_value_t = 0.1)]
        delta_omega: f64,
        /// Change only this 1-based unit instead of unit k+1 in sample k.
        #[arg(long)]
        unit: Option<usize>,
        /// Fingerprint samples and count attractors.
        #[arg(long)]
        fingerprints: bool,
    },
    /// Run or resume a parameter sweep from a plan file.
    Sweep {
        /// JSON sweep plan.
        #[arg(long, conflicts_with = "desk")]
        plan: Option<PathBuf>,
        /// Use the desk-scale default plan for a family.
        #[arg(long, value_enum)]
        desk: Option<FamilyArg>,
    },
    /// Per-unit frequency-change scan.
    Scan {
        #[command(flatten)]
        topology: TopologyArgs,
        #[command(flatten)]
        seeds: SeedArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Switch each unit to this frequency.
        #[arg(long, conflicts_with = "delta_omega")]
        omega_new: Option<f64>,
        /// Comma-separated shifts; 0 is added if missing.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        delta_omega: Option<Vec<f64>>,
        /// Comma-separated 1-based units (default: all).
        #[arg(long, value_delimiter = ',')]
        units: Option<Vec<usize>>,
    },
    /// R over frequency shuffles x network realizations.
    Cross {
        #[command(flatten)]
        topology: TopologyArgs,
        #[command(flatten)]
        seeds: SeedArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 10)]
        shuffles: usize,
        #[arg(long, default_value_t = 10)]
        networks: usize,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
    },
    /// Print the short/long-range ratio kappa. No simulation.
    Kappa {
        #[command(flatten)]
        topology: TopologyArgs,
        /// Short-range cutoff distance.
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// For WS, count edges of a generated graph instead of 1 - 2p.
        #[arg(long)]
        empirical: bool,
    },
    /// Write (and optionally run) the desk-scale configs for a figure.
    Repro {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=8))]
        figure: u8,
        /// N = 501 and 501 samples instead of the desk scale.
        #[arg(long)]
        paper_scale: bool,
        /// Run the configs after writing them.
        #[arg(long)]
        run: bool,
    },
    /// Run a config file or a previous run.json.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Ws,
    Dd,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    ShuffleFreq,
    ShuffleIc,
    ResampleFreq,
    ResampleIc,
    ResampleTopology,
    SingleUnit,
    PerturbUnit,
}

#[derive(Args)]
struct TopologyArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Ws)]
    topology: FamilyArg,
    #[arg(long = "N", default_value_t = 501)]
    n: usize,
    /// Neighbors on each side before rewiring (WS).
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Rewiring probability (WS).
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    /// Distance exponent (DD).
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
}

#[derive(Args)]
struct SeedArgs {
    /// Master seed; topology, frequency and initial-condition seeds derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    topology_seed: Option<u64>,
    #[arg(long)]
    freq_seed: Option<u64>,
    #[arg(long)]
    ic_seed: Option<u64>,
}

impl SeedArgs {
    fn topology(&self) -> u64 {
        self.topology_seed.unwrap_or_else(|| derive(self.seed, Stream::Topology, 0))
    }
    fn freq(&self) -> u64 {
        self.freq_seed.unwrap_or_else(|| derive(self.seed, Stream::Frequencies, 0))
    }
    fn ic(&self) -> u64 {
        self.ic_seed.unwrap_or_else(|| derive(self.seed, Stream::InitialConditions, 0))
    }
}

#[derive(Args)]
struct SimArgs {
    /// Coupling strength.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    eps: f64,
    #[arg(long, default_value_t = 500.0)]
    t_transient: f64,
    #[arg(long, default_value_t = 500.0)]
    t_observe: f64,
    #[arg(long, default_value_t = 0.1)]
    dt_sample: f64,
    #[arg(long, default_value_t = 1e-6)]
    abs_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
    #[arg(long, default_value_t = 10.0)]
    max_step: f64,
    /// O(N) kernel for DD alpha = 0.
    #[arg(long)]
    mean_field: bool,
}

impl SimArgs {
    fn config(&self) -> SimulationConfig {
        SimulationConfig {
            eps: self.eps,
            t_transient: self.t_transient,
            t_observe: self.t_observe,
            dt_sample: self.dt_sample,
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_step: self.max_step,
            mean_field_fast_path: self.mean_field,
        }
    }
}

impl TopologyArgs {
    fn spec(&self, seed: u64) -> TopologySpec {
        match self.topology {
            FamilyArg::Ws => TopologySpec::Ws {
                n: self.n,
                k: self.k,
                p: self.p,
                seed,
            },
            FamilyArg::Dd => TopologySpec::Dd {
                n: self.n,
                alpha: self.alpha,
            },
        }
    }
}

fn template(topology: &TopologyArgs, seeds: &SeedArgs) -> SampleTemplate {
    SampleTemplate::new(topology.spec(seeds.topology()), seeds.freq(), seeds.ic())
}

fn kappa(topology: &TopologyArgs, d: usize, empirical: bool, seed: u64) -> Result<f64, ConfigError> {
    Ok(match topology.topology {
        FamilyArg::Ws if empirical => {
            kappa_graph(&generate_ws(topology.n, topology.k, topology.p, seed)?, d)?.kappa
        }
        FamilyArg::Ws => kappa_ws(topology.p)?,
        FamilyArg::Dd => kappa_dd(topology.alpha, topology.n, d)?.kappa,
    })
}

fn load_plan(path: &Path) -> Result<SweepPlan, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

fn resolve(command: Command) -> Result<Resolved, ConfigError> {
    let cfg = match command {
        Command::Simulate {
            topology,
            seeds,
            sim,
            phase_stride,
        } => RunConfig::Simulate {
            topology: topology.spec(seeds.topology()),
            freq_seed: seeds.freq(),
            ic_seed: seeds.ic(),
            sim: sim.config(),
            phase_stride,
        },
        Command::Ensemble {
            topology,
            seeds,
            sim,
            strategy,
            count,
            base_seed,
            omega_new,
            delta_omega,
            unit,
            fingerprints,
        } => {
            let variation = match strategy {
                StrategyArg::ShuffleFreq => Variation::ShuffleFrequencies,
                StrategyArg::ShuffleIc => Variation::ShuffleInitialConditions,
                StrategyArg::ResampleFreq => Variation::ResampleFrequencies,
                StrategyArg::ResampleIc => Variation::ResampleInitialConditions,
                StrategyArg::ResampleTopology => Variation::ResampleTopology,
                StrategyArg::SingleUnit => Variation::SingleUnitChange { unit, omega_new },
                StrategyArg::PerturbUnit => Variation::PerturbUnit { unit, delta_omega },
            };
            RunConfig::Ensemble {
                template: template(&topology, &seeds),
                strategy: SamplingStrategy::new(variation, count, base_seed),
                sim: sim.config(),
                settings: EnsembleSettings {
                    fingerprints,
                    ..EnsembleSettings::default()
                },
            }
        }
        Command::Sweep { plan, desk } => {
            let plan = match (plan, desk) {
                (Some(path), _) => load_plan(&path)?,
                (None, Some(FamilyArg::Ws)) => SweepPlan::desk(Family::Ws),
                (None, Some(FamilyArg::Dd)) => SweepPlan::desk(Family::Dd),
                (None, None) => return Err(ConfigError("sweep needs --plan or --desk".into())),
            };
            RunConfig::Sweep { plan }
        }
        Command::Scan {
            topology,
            seeds,
            sim,
            omega_new,
            delta_omega,
            units,
        } => {
            let mode = match (omega_new, delta_omega) {
                (Some(v), _) => ScanMode::OmegaNew(v),
                (None, Some(mut d)) => {
                    if !d.contains(&0.0) {
                        d.push(0.0);
                    }
                    d.sort_by(f64::total_cmp);
                    ScanMode::DeltaOmega(d)
                }
                (None, None) => return Err(ConfigError("scan needs --omega-new or --delta-omega".into())),
            };
            RunConfig::Scan {
                template: template(&topology, &seeds),
                sim: sim.config(),
                mode,
                units,
            }
        }
        Command::Cross {
            topology,
            seeds,
            sim,
            shuffles,
            networks,
            base_seed,
        } => RunConfig::Cross {
            template: template(&topology, &seeds),
            shuffles,
            networks,
            base_seed,
            sim: sim.config(),
        },
        Command::Kappa {
            topology,
            d,
            empirical,
        } => {
            let seed = derive(0, Stream::Topology, 0);
            return Ok(Resolved::Print(format!("{:?}", kappa(&topology, d, empirical, seed)?)));
        }
        Command::Repro {
            figure,
            paper_scale,
            run,
        } => return Ok(Resolved::Many(presets::figure(figure, paper_scale)?, run)),
        Command::Run { config } => config::load(&config)?,
    };
    Ok(Resolved::One(cfg))
}

enum Resolved {
    One(RunConfig),
    Many(Vec<(String, RunConfig)>, bool),
    Print(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(cli.command)
        .map_err(|e| RunError::Config(e.0))
        .and_then(|resolved| match resolved {
            Resolved::Print(text) => {
                println!("{text}");
                Ok(())
            }
            Resolved::One(cfg) => execute(&cfg, &cli.out, cli.workers, cli.verbose),
            Resolved::Many(configs, run) => {
                for (name, cfg) in &configs {
                    cfg.validate().map_err(|e| RunError::Config(format!("{name}: {e}")))?;
                }
                std::fs::create_dir_all(&cli.out)
                    .map_err(|e| RunError::Other(format!("{}: {e}", cli.out.display())))?;
                for (name, cfg) in &configs {
                    let path = cli.out.join(format!("{name}.json"));
                    let text = serde_json::to_string_pretty(cfg).expect("configs serialize");
                    std::fs::write(&path, text + "\n")
                        .map_err(|e| RunError::Other(format!("{}: {e}", path.display())))?;
                    println!("{}", path.display());
                }
                if run {
                    for (name, cfg) in &configs {
                        execute(cfg, &cli.out.join(name), cli.workers, cli.verbose)?;
                    }
                }
                Ok(())
            }
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

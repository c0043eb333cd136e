//! Desk-scale configurations for each figure of the study.
//!
//! These are scaled down (N = 101, 51 samples, 21-point axes) so each runs
//! in minutes on a laptop. Grid endpoints other than the quoted parameter
//! values are reconstructions. `paper_scale` swaps in N = 501 and 501 samples.

use kuramoto_core::dynamics::SimulationConfig;
use kuramoto_core::ensemble::{SampleTemplate, SamplingStrategy, Variation};
use kuramoto_core::sweep::{Family, Grid, SweepPlan};
use kuramoto_core::topology::TopologySpec;

use crate::config::{ConfigError, EnsembleSettings, RunConfig, ScanMode};

pub const WS_EPS: f64 = 4.51282;
pub const DD_EPS: f64 = 6.46154;
pub const WS_P: [f64; 4] = [0.0, 0.08733, 0.19684, 1.0];
pub const DD_ALPHA: [f64; 4] = [0.0, 1.0, 1.76923, 3.0];

struct Scale {
    n: usize,
    samples: usize,
}

fn ws(n: usize, p: f64) -> TopologySpec {
    TopologySpec::Ws { n, k: 2, p, seed: 0 }
}

fn template(topology: TopologySpec) -> SampleTemplate {
    SampleTemplate::new(topology, 0, 1)
}

fn sim(eps: f64) -> SimulationConfig {
    SimulationConfig::default().with_eps(eps)
}

fn plan(family: Family, s: &Scale, param: Grid, eps: Grid, variation: Variation) -> RunConfig {
    let mut plan = SweepPlan::desk(family);
    plan.n = vec![s.n];
    plan.topology_param = param;
    plan.eps = eps;
    plan.strategy = SamplingStrategy::new(variation, s.samples, 0);
    RunConfig::Sweep { plan }
}

fn eps_axis() -> Grid {
    Grid::Linear { start: 0.0, stop: 10.0, points: 21 }
}

fn p_axis() -> Grid {
    Grid::Log { start: 1e-3, stop: 1.0, points: 20, with_zero: true }
}

fn alpha_axis() -> Grid {
    Grid::Linear { start: 0.0, stop: 3.0, points: 21 }
}

/// Named run configurations reproducing figure `fig` at desk scale.
pub fn figure(fig: u8, paper_scale: bool) -> Result<Vec<(String, RunConfig)>, ConfigError> {
    let s = if paper_scale {
        Scale { n: 501, samples: 501 }
    } else {
        Scale { n: 101, samples: 51 }
    };
    let shuffle = Variation::ShuffleFrequencies;
    let out = match fig {
        2 => WS_P
            .iter()
            .map(|&p| {
                (
                    format!("scan-p{p}"),
                    RunConfig::Scan {
                        template: template(ws(s.n, p)),
                        sim: sim(WS_EPS),
                        mode: ScanMode::OmegaNew(3.0),
                        units: None,
                    },
                )
            })
            .collect(),
        3 => vec![
            ("ws-coupling".into(), plan(Family::Ws, &s, Grid::List { values: WS_P.to_vec() }, eps_axis(), shuffle)),
            ("ws-topology".into(), plan(Family::Ws, &s, p_axis(), Grid::single(WS_EPS), shuffle)),
            ("dd-coupling".into(), plan(Family::Dd, &s, Grid::List { values: DD_ALPHA.to_vec() }, eps_axis(), shuffle)),
            ("dd-topology".into(), plan(Family::Dd, &s, alpha_axis(), Grid::single(DD_EPS), shuffle)),
            (
                "ws-coupling-unit".into(),
                plan(
                    Family::Ws,
                    &s,
                    Grid::List { values: WS_P.to_vec() },
                    eps_axis(),
                    Variation::SingleUnitChange { unit: None, omega_new: 3.0 },
                ),
            ),
        ],
        4 => vec![
            ("ws-surface".into(), plan(Family::Ws, &s, p_axis(), eps_axis(), shuffle)),
            ("dd-surface".into(), plan(Family::Dd, &s, alpha_axis(), eps_axis(), shuffle)),
        ],
        5 => vec![
            (
                "cross".into(),
                RunConfig::Cross {
                    template: template(ws(s.n, 0.08733)),
                    shuffles: 20,
                    networks: 20,
                    base_seed: 0,
                    sim: sim(WS_EPS),
                },
            ),
            (
                "delta-omega".into(),
                RunConfig::Scan {
                    template: template(ws(s.n, 0.1145)),
                    sim: sim(WS_EPS),
                    mode: ScanMode::DeltaOmega(vec![-1.0, -0.5, -0.1, -0.05, 0.0, 0.05, 0.1, 0.5, 1.0]),
                    units: None,
                },
            ),
        ],
        6 => vec![
            ("ws-kappa".into(), plan(Family::Ws, &s, p_axis(), Grid::single(WS_EPS), shuffle)),
            ("dd-kappa".into(), plan(Family::Dd, &s, alpha_axis(), Grid::single(DD_EPS), shuffle)),
        ],
        7 => {
            let mut coupling = plan(
                Family::Ws,
                &s,
                Grid::List { values: WS_P.to_vec() },
                eps_axis(),
                Variation::ShuffleInitialConditions,
            );
            let mut topology = plan(Family::Ws, &s, p_axis(), Grid::single(WS_EPS), Variation::ShuffleInitialConditions);
            for c in [&mut coupling, &mut topology] {
                if let RunConfig::Sweep { plan } = c {
                    plan.fingerprints = true;
                }
            }
            vec![("ws-coupling-ic".into(), coupling), ("ws-topology-ic".into(), topology)]
        }
        8 => {
            let mut v = Vec::new();
            for &p in &WS_P {
                for eps in [2.0, WS_EPS, 8.0] {
                    for (tag, variation) in [
                        ("freq", Variation::ShuffleFrequencies),
                        ("ic", Variation::ShuffleInitialConditions),
                    ] {
                        v.push((
                            format!("dist-p{p}-eps{eps}-{tag}"),
                            RunConfig::Ensemble {
                                template: template(ws(s.n, p)),
                                strategy: SamplingStrategy::new(variation, s.samples, 0),
                                sim: sim(eps),
                                settings: EnsembleSettings::default(),
                            },
                        ));
                    }
                }
            }
            v
        }
        _ => return Err(ConfigError(format!("no preset for figure {fig}; choose 2 through 8"))),
    };
    Ok(out)
}

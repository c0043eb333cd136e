//! Kuramoto dynamics: state types, the right-hand side, and adaptive
//! integration with observation on a fixed time grid.

mod coupling;
pub mod trajectory;
mod tsit5;

pub use coupling::{rhs, Coupling, DdKernel};
pub use trajectory::Trajectory;
pub use tsit5::{Observer, StepStats};

use std::f64::consts::TAU;

use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;
use crate::topology::Topology;

/// Phases at time `t`. Phases are integrated unwrapped; [`PhaseState::reduced`]
/// gives the `[0, 2π)` representative used for reporting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub theta: Vec<f64>,
    pub t: f64,
}

impl PhaseState {
    pub fn new(theta: Vec<f64>) -> Self {
        PhaseState { theta, t: 0.0 }
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn reduced(&self) -> Vec<f64> {
        self.theta.iter().map(|&x| wrap_phase(x)).collect()
    }
}

/// Representative of `x` in `[0, 2π)`.
#[inline]
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// A replayable description of how a frequency vector was derived from its
/// base draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    None,
    /// Fisher–Yates shuffle driven by `seed`.
    Shuffle { seed: u64 },
    /// Unit `unit` (1-based) switched from `old` to `new`.
    SingleUnit { unit: usize, old: f64, new: f64 },
    /// A fresh draw from the base distribution.
    Resample { seed: u64 },
}

impl std::fmt::Display for Perturbation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Perturbation::None => write!(f, "none"),
            Perturbation::Shuffle { seed } => write!(f, "shuffle:{seed}"),
            Perturbation::SingleUnit { unit, old, new } => write!(f, "unit:{unit}:{old}->{new}"),
            Perturbation::Resample { seed } => write!(f, "resample:{seed}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyProvenance {
    pub base_seed: u64,
    pub distribution: String,
    pub perturbations: Vec<Perturbation>,
}

/// Natural frequencies with the record of how they were produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaturalFrequencies {
    pub omega: Vec<f64>,
    pub provenance: FrequencyProvenance,
}

pub const GAUSSIAN_LABEL: &str = "gaussian(mu=0,sigma=1)";

impl NaturalFrequencies {
    /// Frequencies given explicitly, without a random origin.
    pub fn from_values(omega: Vec<f64>) -> Self {
        NaturalFrequencies {
            omega,
            provenance: FrequencyProvenance {
                base_seed: 0,
                distribution: "explicit".into(),
                perturbations: Vec::new(),
            },
        }
    }

    pub fn n(&self) -> usize {
        self.omega.len()
    }

    pub fn mean(&self) -> f64 {
        self.omega.iter().sum::<f64>() / self.omega.len() as f64
    }

    /// The most recent perturbation, or `None` for a base draw.
    pub fn last_perturbation(&self) -> &Perturbation {
        self.provenance
            .perturbations
            .last()
            .unwrap_or(&Perturbation::None)
    }
}

/// I.i.d. standard normal frequencies.
pub fn sample_frequencies(n: usize, seed: u64) -> Result<NaturalFrequencies> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let mut rng = seeds::rng(seed);
    let omega = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    Ok(NaturalFrequencies {
        omega,
        provenance: FrequencyProvenance {
            base_seed: seed,
            distribution: GAUSSIAN_LABEL.into(),
            perturbations: Vec::new(),
        },
    })
}

/// I.i.d. uniform phases on `[0, 2π)`.
pub fn sample_initial_conditions(n: usize, seed: u64) -> Result<PhaseState> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let mut rng = seeds::rng(seed);
    let dist = Uniform::new(0.0, TAU);
    Ok(PhaseState::new((0..n).map(|_| dist.sample(&mut rng)).collect()))
}

fn default_eps() -> f64 {
    1.0
}

/// Integration and observation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Coupling strength ε.
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub t_transient: f64,
    pub t_observe: f64,
    pub dt_sample: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    /// Use the `O(N)` phasor kernel for α = 0 profiles.
    pub mean_field_fast_path: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            eps: default_eps(),
            t_transient: 500.0,
            t_observe: 500.0,
            dt_sample: 0.1,
            abs_tol: 1e-6,
            rel_tol: 1e-6,
            max_step: 10.0,
            mean_field_fast_path: false,
        }
    }
}

impl SimulationConfig {
    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid(format!("coupling strength must be >= 0, got {}", self.eps)));
        }
        if !(self.t_transient >= 0.0 && self.t_transient.is_finite()) {
            return Err(Error::invalid(format!(
                "t_transient must be >= 0, got {}",
                self.t_transient
            )));
        }
        positive("t_observe", self.t_observe)?;
        positive("dt_sample", self.dt_sample)?;
        positive("abs_tol", self.abs_tol)?;
        positive("rel_tol", self.rel_tol)?;
        positive("max_step", self.max_step)?;
        if self.sample_count() == 0 {
            return Err(Error::invalid("observation window shorter than one sample interval"));
        }
        Ok(())
    }

    /// Number of observation samples, at `t_transient + m dt_sample` for
    /// `m = 1..=count`.
    pub fn sample_count(&self) -> usize {
        (self.t_observe / self.dt_sample + 1e-9).floor() as usize
    }
}

fn check_inputs(initial: &PhaseState, omega: &NaturalFrequencies, topology: &Topology) -> Result<()> {
    let n = topology.n();
    if initial.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: initial.n(),
        });
    }
    if omega.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: omega.n(),
        });
    }
    if initial.theta.iter().chain(&omega.omega).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite phase or frequency"));
    }
    Ok(())
}

/// Integrates and streams every observation sample into `observer`.
/// Returns the (unwrapped) final state.
pub fn integrate_with(
    initial: &PhaseState,
    omega: &NaturalFrequencies,
    topology: &Topology,
    config: &SimulationConfig,
    observer: &mut dyn Observer,
) -> Result<(PhaseState, StepStats)> {
    config.validate()?;
    check_inputs(initial, omega, topology)?;
    let kernel = match topology {
        Topology::DistanceDependent(p) if config.mean_field_fast_path && p.alpha() == 0.0 => {
            DdKernel::MeanField
        }
        Topology::DistanceDependent(_) => DdKernel::Spectral,
        _ => DdKernel::Direct,
    };
    let mut coupling = Coupling::with_kernel(topology, kernel)?;
    let mut y = initial.theta.clone();
    let stats = tsit5::integrate_observed(&mut coupling, &omega.omega, &mut y, initial.t, config, observer)?;
    let t_end = initial.t + config.t_transient + config.sample_count() as f64 * config.dt_sample;
    Ok((PhaseState { theta: y, t: t_end }, stats))
}

/// Integrates and records the full observation window.
pub fn integrate(
    initial: &PhaseState,
    omega: &NaturalFrequencies,
    topology: &Topology,
    config: &SimulationConfig,
) -> Result<Trajectory> {
    let mut traj = Trajectory::with_capacity(topology.n(), config.sample_count());
    let (last, _) = integrate_with(initial, omega, topology, config, &mut traj)?;
    traj.set_final_state(last);
    Ok(traj)
}

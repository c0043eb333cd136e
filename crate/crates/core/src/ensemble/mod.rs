//! Sample families and sample-to-sample statistics.
//!
//! An ensemble starts from a [`SampleTemplate`] (topology plus the seeds of
//! the base frequency and initial-condition draws) and a [`SamplingStrategy`]
//! that says what varies between samples. Sample `k` is fully determined by
//! the template, the strategy and `k`: its seed is
//! `seeds::derive(base_seed, stream, k)`.

pub mod io;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    integrate_with, sample_frequencies, sample_initial_conditions, NaturalFrequencies,
    Perturbation, PhaseState, SimulationConfig,
};
use crate::error::{Error, Result};
use crate::observables::{
    count_attractors_scaled, AttractorFingerprint, FeatureScaling, SummaryAccumulator,
    SyncSummary, DEFAULT_ATTRACTOR_TOL, DEFAULT_FREQ_TOL,
};
use crate::seeds::{self, Stream};
use crate::topology::{RingIndex, Topology, TopologySpec};

/// Histogram bin width used for R distributions.
pub const DEFAULT_BIN: f64 = 0.005;

/// The unperturbed realization every sample is derived from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleTemplate {
    pub topology: TopologySpec,
    pub freq_seed: u64,
    pub ic_seed: u64,
}

impl SampleTemplate {
    pub fn new(topology: TopologySpec, freq_seed: u64, ic_seed: u64) -> Self {
        SampleTemplate {
            topology,
            freq_seed,
            ic_seed,
        }
    }

    pub fn n(&self) -> usize {
        self.topology.n()
    }

    pub fn frequencies(&self) -> Result<NaturalFrequencies> {
        sample_frequencies(self.n(), self.freq_seed)
    }

    pub fn initial_conditions(&self) -> Result<PhaseState> {
        sample_initial_conditions(self.n(), self.ic_seed)
    }
}

/// What changes from sample to sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Variation {
    /// Permute the base frequencies.
    ShuffleFrequencies,
    /// Set one unit's frequency to `omega_new`. With `unit` given every
    /// sample changes that unit; otherwise sample `k` changes unit `k + 1`.
    SingleUnitChange {
        #[serde(default)]
        unit: Option<usize>,
        omega_new: f64,
    },
    /// Shift one unit's frequency by `delta_omega`, with the same unit rule
    /// as `SingleUnitChange`.
    PerturbUnit {
        #[serde(default)]
        unit: Option<usize>,
        delta_omega: f64,
    },
    /// Permute the base initial phases.
    ShuffleInitialConditions,
    ResampleFrequencies,
    ResampleInitialConditions,
    /// Fresh Watts–Strogatz graph per sample.
    ResampleTopology,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingStrategy {
    pub variation: Variation,
    pub count: usize,
    #[serde(default)]
    pub base_seed: u64,
}

impl SamplingStrategy {
    pub fn new(variation: Variation, count: usize, base_seed: u64) -> Self {
        SamplingStrategy {
            variation,
            count,
            base_seed,
        }
    }

    pub fn validate(&self, template: &SampleTemplate) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("sample count must be at least 1"));
        }
        let n = template.n();
        match self.variation {
            Variation::SingleUnitChange { unit, omega_new: v } | Variation::PerturbUnit { unit, delta_omega: v } => {
                if !v.is_finite() {
                    return Err(Error::invalid(format!("non-finite frequency change {v}")));
                }
                match unit {
                    Some(u) => {
                        RingIndex::new(u, n)?;
                    }
                    None if self.count > n => {
                        return Err(Error::invalid(format!(
                            "per-unit strategy with {} samples exceeds N = {n}",
                            self.count
                        )))
                    }
                    None => {}
                }
            }
            Variation::ResampleTopology => {
                if !matches!(template.topology, TopologySpec::Ws { .. }) {
                    return Err(Error::invalid(
                        "topology resampling needs a Watts-Strogatz template",
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn stream(&self) -> Stream {
        match self.variation {
            Variation::ShuffleFrequencies => Stream::Shuffle,
            Variation::ResampleFrequencies => Stream::Frequencies,
            Variation::ShuffleInitialConditions | Variation::ResampleInitialConditions => {
                Stream::InitialConditions
            }
            Variation::ResampleTopology => Stream::Topology,
            Variation::SingleUnitChange { .. } | Variation::PerturbUnit { .. } => Stream::Shuffle,
        }
    }

    /// Seed of sample `k`. Per-unit strategies are deterministic and report
    /// the base seed.
    pub fn sample_seed(&self, k: usize) -> u64 {
        match self.variation {
            Variation::SingleUnitChange { .. } | Variation::PerturbUnit { .. } => self.base_seed,
            _ => seeds::derive(self.base_seed, self.stream(), k as u64),
        }
    }
}

/// Inputs of one realization.
#[derive(Clone, Debug)]
pub struct SampleInputs {
    pub topology: TopologySpec,
    pub omega: NaturalFrequencies,
    pub initial: PhaseState,
    pub seed: u64,
    pub label: String,
}

/// Materializes sample `k` of an ensemble.
pub fn sample_inputs(
    template: &SampleTemplate,
    strategy: &SamplingStrategy,
    base_omega: &NaturalFrequencies,
    base_initial: &PhaseState,
    k: usize,
) -> Result<SampleInputs> {
    let seed = strategy.sample_seed(k);
    let n = template.n();
    let mut topology = template.topology;
    let mut omega = base_omega.clone();
    let mut initial = base_initial.clone();
    let label = match strategy.variation {
        Variation::ShuffleFrequencies => {
            omega = shuffle_frequencies(base_omega, seed);
            omega.last_perturbation().to_string()
        }
        Variation::SingleUnitChange { unit, omega_new } => {
            let unit = RingIndex::new(unit.unwrap_or(k + 1), n)?;
            omega = single_unit_change(base_omega, unit, omega_new)?;
            omega.last_perturbation().to_string()
        }
        Variation::PerturbUnit { unit, delta_omega } => {
            let unit = RingIndex::new(unit.unwrap_or(k + 1), n)?;
            let new = base_omega.omega[unit.zero_based()] + delta_omega;
            omega = single_unit_change(base_omega, unit, new)?;
            omega.last_perturbation().to_string()
        }
        Variation::ShuffleInitialConditions => {
            let mut theta = base_initial.theta.clone();
            theta.shuffle(&mut seeds::rng(seed));
            initial = PhaseState::new(theta);
            format!("ic-shuffle:{seed}")
        }
        Variation::ResampleFrequencies => {
            omega = sample_frequencies(n, seed)?;
            format!("resample:{seed}")
        }
        Variation::ResampleInitialConditions => {
            initial = sample_initial_conditions(n, seed)?;
            format!("ic-resample:{seed}")
        }
        Variation::ResampleTopology => {
            topology = topology.with_seed(seed);
            format!("topology:{seed}")
        }
    };
    Ok(SampleInputs {
        topology,
        omega,
        initial,
        seed,
        label,
    })
}

/// A uniformly random permutation of the frequencies, driven by `seed`.
pub fn shuffle_frequencies(omega: &NaturalFrequencies, seed: u64) -> NaturalFrequencies {
    let mut out = omega.clone();
    out.omega.shuffle(&mut seeds::rng(seed));
    out.provenance.perturbations.push(Perturbation::Shuffle { seed });
    out
}

/// Copy of `omega` with unit `unit` set to `omega_new`.
pub fn single_unit_change(
    omega: &NaturalFrequencies,
    unit: RingIndex,
    omega_new: f64,
) -> Result<NaturalFrequencies> {
    if unit.get() > omega.n() {
        return Err(Error::IndexOutOfRange {
            index: unit.get(),
            n: omega.n(),
        });
    }
    let mut out = omega.clone();
    let old = std::mem::replace(&mut out.omega[unit.zero_based()], omega_new);
    out.provenance.perturbations.push(Perturbation::SingleUnit {
        unit: unit.get(),
        old,
        new: omega_new,
    });
    Ok(out)
}

/// Knobs that do not change what is simulated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    pub freq_tol: f64,
    /// Compute fingerprints and an attractor count.
    pub fingerprints: bool,
    pub attractor_tol: f64,
    pub scaling: FeatureScaling,
    pub bin: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: None,
            freq_tol: DEFAULT_FREQ_TOL,
            fingerprints: false,
            attractor_tol: DEFAULT_ATTRACTOR_TOL,
            scaling: FeatureScaling::Raw,
            bin: DEFAULT_BIN,
        }
    }
}

impl RunOptions {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn with_fingerprints(mut self) -> Self {
        self.fingerprints = true;
        self
    }
}

/// Runs `f` over `0..count`, collecting in index order. With `workers` set
/// the work runs on a dedicated pool of that size; otherwise on the current
/// rayon pool, so nested calls share their caller's workers.
pub(crate) fn par_map<T, F>(count: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match workers {
        None => Ok((0..count).into_par_iter().map(f).collect()),
        Some(0) => Err(Error::invalid("worker count must be at least 1")),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(|| (0..count).into_par_iter().map(f).collect()))
        }
    }
}

/// Result of one realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: usize,
    pub seed: u64,
    pub perturbation: String,
    pub summary: Option<SyncSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<AttractorFingerprint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SampleRecord {
    pub fn r(&self) -> Option<f64> {
        self.summary.as_ref().map(|s| s.r_mean)
    }
}

/// Simulates one realization, turning numerical failures into a flagged
/// record. Configuration errors propagate.
pub fn run_sample(
    inputs: &SampleInputs,
    topology: &Topology,
    sim: &SimulationConfig,
    options: &RunOptions,
    sample_id: usize,
) -> Result<SampleRecord> {
    let mut acc = if options.fingerprints {
        SummaryAccumulator::with_fingerprint(topology)
    } else {
        SummaryAccumulator::new(topology.n())
    };
    let mut record = SampleRecord {
        sample_id,
        seed: inputs.seed,
        perturbation: inputs.label.clone(),
        summary: None,
        fingerprint: None,
        error: None,
    };
    match integrate_with(&inputs.initial, &inputs.omega, topology, sim, &mut acc) {
        Ok(_) => {
            record.summary = Some(acc.summary(options.freq_tol)?);
            if options.fingerprints {
                record.fingerprint = Some(acc.fingerprint()?);
            }
        }
        Err(e) if e.is_numerical() => record.error = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    Ok(record)
}

/// Per-sample records plus aggregate statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleRun {
    pub records: Vec<SampleRecord>,
    pub stats: EnsembleStats,
}

pub fn run_ensemble(
    template: &SampleTemplate,
    strategy: &SamplingStrategy,
    sim: &SimulationConfig,
    options: &RunOptions,
) -> Result<EnsembleRun> {
    strategy.validate(template)?;
    sim.validate()?;
    let base_omega = template.frequencies()?;
    let base_initial = template.initial_conditions()?;
    let shared = match strategy.variation {
        Variation::ResampleTopology => None,
        _ => Some(template.topology.build()?),
    };
    let records = par_map(strategy.count, options.workers, |k| {
        let inputs = sample_inputs(template, strategy, &base_omega, &base_initial, k)?;
        let own;
        let topology = match &shared {
            Some(t) => t,
            None => {
                own = inputs.topology.build()?;
                &own
            }
        };
        run_sample(&inputs, topology, sim, options, k)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let stats = EnsembleStats::from_records(&records, options)?;
    Ok(EnsembleRun { records, stats })
}

/// Normalized occupancy of `bins` equal bins covering `[0, 1]`. Bin `k` is
/// `[k/bins, (k+1)/bins)`, except that 1 falls in the last bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: usize,
    pub counts: Vec<u64>,
    pub probabilities: Vec<f64>,
}

impl Histogram {
    pub fn width(&self) -> f64 {
        1.0 / self.bins as f64
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn from_counts(counts: Vec<u64>) -> Self {
        let total: u64 = counts.iter().sum();
        let probabilities = counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect();
        Histogram {
            bins: counts.len(),
            counts,
            probabilities,
        }
    }

    /// Merges groups of `factor` adjacent bins.
    pub fn coarsen(&self, factor: usize) -> Result<Histogram> {
        if factor == 0 || self.bins % factor != 0 {
            return Err(Error::invalid(format!(
                "cannot merge {} bins in groups of {factor}",
                self.bins
            )));
        }
        Ok(Self::from_counts(
            self.counts.chunks(factor).map(|c| c.iter().sum()).collect(),
        ))
    }
}

/// Histogram of R values with bin width `bin`, which must divide 1.
#[allow(non_snake_case)]
pub fn histogram_R(values: &[f64], bin: f64) -> Result<Histogram> {
    if !(bin > 0.0 && bin <= 1.0) {
        return Err(Error::invalid(format!("bin width must be in (0, 1], got {bin}")));
    }
    let bins = (1.0 / bin).round();
    if (bins * bin - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("bin width {bin} does not divide [0, 1]")));
    }
    let bins = bins as usize;
    let mut counts = vec![0u64; bins];
    for &v in values {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfUnitInterval(v));
        }
        // v * bins rather than v / bin: scaling by a power of two then commutes
        // with rounding, so refined and coarsened histograms agree exactly.
        let k = ((v * bins as f64).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram::from_counts(counts))
}

/// Aggregate statistics over the successful samples of an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub count: usize,
    pub r_values: Vec<f64>,
    /// `R_max − R_min`. This and the other moments are NaN (`null` in JSON)
    /// when every sample failed.
    #[serde(with = "io::nan_as_null")]
    pub delta: f64,
    /// Population standard deviation of R.
    #[serde(with = "io::nan_as_null")]
    pub chi: f64,
    #[serde(with = "io::nan_as_null")]
    pub r_mean: f64,
    #[serde(with = "io::nan_as_null")]
    pub r_min: f64,
    #[serde(with = "io::nan_as_null")]
    pub r_max: f64,
    pub freq_sync_fraction: f64,
    pub attractor_count: Option<usize>,
    pub histogram: Histogram,
    pub failures: Vec<Failure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub sample_id: usize,
    pub reason: String,
}

impl EnsembleStats {
    pub fn from_records(records: &[SampleRecord], options: &RunOptions) -> Result<Self> {
        let ok: Vec<&SyncSummary> = records.iter().filter_map(|r| r.summary.as_ref()).collect();
        let r_values: Vec<f64> = ok.iter().map(|s| s.r_mean).collect();
        let failures = records
            .iter()
            .filter_map(|r| {
                r.error.as_ref().map(|e| Failure {
                    sample_id: r.sample_id,
                    reason: e.clone(),
                })
            })
            .collect();
        let attractor_count = if options.fingerprints {
            let fps: Vec<AttractorFingerprint> =
                records.iter().filter_map(|r| r.fingerprint.clone()).collect();
            Some(count_attractors_scaled(&fps, options.attractor_tol, options.scaling)?)
        } else {
            None
        };
        let freq_sync = ok.iter().filter(|s| s.freq_sync).count();
        Self::from_values(r_values, freq_sync, attractor_count, failures, options.bin)
    }

    pub fn from_values(
        r_values: Vec<f64>,
        freq_sync: usize,
        attractor_count: Option<usize>,
        failures: Vec<Failure>,
        bin: f64,
    ) -> Result<Self> {
        let histogram = histogram_R(&r_values, bin)?;
        let m = r_values.len();
        let (r_min, r_max) = r_values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let (r_min, r_max) = if m == 0 { (f64::NAN, f64::NAN) } else { (r_min, r_max) };
        let (r_mean, chi, delta) = if m == 0 {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let mean = r_values.iter().sum::<f64>() / m as f64;
            let var = r_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m as f64;
            (mean, var.sqrt(), r_max - r_min)
        };
        Ok(EnsembleStats {
            count: m,
            r_values,
            delta,
            chi,
            r_mean,
            r_min,
            r_max,
            freq_sync_fraction: if m == 0 { 0.0 } else { freq_sync as f64 / m as f64 },
            attractor_count,
            histogram,
            failures,
        })
    }
}

/// Changes in R from single-unit frequency changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitScan {
    pub r_ref: f64,
    /// 1-based units, one row each.
    pub units: Vec<usize>,
    /// Column labels: frequency shifts `δω`, or for an `ω_new` scan the single
    /// target value.
    pub columns: Vec<f64>,
    /// `delta_r[row][col] = R(perturbed) − R(reference)`; NaN for failed runs.
    pub delta_r: Vec<Vec<f64>>,
    pub failures: usize,
}

impl UnitScan {
    pub fn max_abs(&self) -> f64 {
        self.delta_r
            .iter()
            .flatten()
            .filter(|v| v.is_finite())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn simulate_r(
    omega: &NaturalFrequencies,
    initial: &PhaseState,
    topology: &Topology,
    sim: &SimulationConfig,
    freq_tol: f64,
) -> Result<Option<f64>> {
    let mut acc = SummaryAccumulator::new(topology.n());
    match integrate_with(initial, omega, topology, sim, &mut acc) {
        Ok(_) => Ok(Some(acc.summary(freq_tol)?.r_mean)),
        Err(e) if e.is_numerical() => Ok(None),
        Err(e) => Err(e),
    }
}

fn scan(
    template: &SampleTemplate,
    units: &[RingIndex],
    columns: Vec<f64>,
    new_value: impl Fn(f64, f64) -> Option<f64> + Sync,
    sim: &SimulationConfig,
    options: &RunOptions,
) -> Result<UnitScan> {
    sim.validate()?;
    let n = template.n();
    if let Some(u) = units.iter().find(|u| u.get() > n) {
        return Err(Error::IndexOutOfRange { index: u.get(), n });
    }
    let topology = template.topology.build()?;
    let omega = template.frequencies()?;
    let initial = template.initial_conditions()?;
    let r_ref = simulate_r(&omega, &initial, &topology, sim, options.freq_tol)?.ok_or_else(|| {
        Error::Integration {
            t: f64::NAN,
            reason: "reference realization failed".into(),
        }
    })?;
    let cols = columns.len();
    let cells = par_map(units.len() * cols, options.workers, |idx| {
        let unit = units[idx / cols];
        let old = omega.omega[unit.zero_based()];
        match new_value(old, columns[idx % cols]) {
            None => Ok(Some(0.0)),
            Some(v) => {
                let changed = single_unit_change(&omega, unit, v)?;
                Ok(simulate_r(&changed, &initial, &topology, sim, options.freq_tol)?.map(|r| r - r_ref))
            }
        }
    })?
    .into_iter()
    .collect::<Result<Vec<Option<f64>>>>()?;
    let failures = cells.iter().filter(|c| c.is_none()).count();
    let delta_r = cells
        .chunks(cols.max(1))
        .map(|row| row.iter().map(|c| c.unwrap_or(f64::NAN)).collect())
        .collect();
    Ok(UnitScan {
        r_ref,
        units: units.iter().map(|u| u.get()).collect(),
        columns,
        delta_r,
        failures,
    })
}

/// `δR(unit, δω)` for every unit and shift. The reference is simulated once
/// and the `δω = 0` column is exactly zero.
pub fn delta_omega_scan(
    template: &SampleTemplate,
    units: &[RingIndex],
    deltas: &[f64],
    sim: &SimulationConfig,
    options: &RunOptions,
) -> Result<UnitScan> {
    if !deltas.contains(&0.0) {
        return Err(Error::invalid("delta_omega list must contain 0 for the reference column"));
    }
    if let Some(d) = deltas.iter().find(|d| !d.is_finite()) {
        return Err(Error::invalid(format!("non-finite delta_omega {d}")));
    }
    scan(
        template,
        units,
        deltas.to_vec(),
        |old, d| (d != 0.0).then_some(old + d),
        sim,
        options,
    )
}

/// `δR` when each unit in turn is switched to `omega_new`, i.e. a
/// `δω = ω_new − ω_i` scan.
pub fn omega_new_scan(
    template: &SampleTemplate,
    units: &[RingIndex],
    omega_new: f64,
    sim: &SimulationConfig,
    options: &RunOptions,
) -> Result<UnitScan> {
    if !omega_new.is_finite() {
        return Err(Error::invalid(format!("non-finite omega_new {omega_new}")));
    }
    scan(
        template,
        units,
        vec![omega_new],
        |old, v| (v != old).then_some(v),
        sim,
        options,
    )
}

/// All 1-based units of a ring.
pub fn all_units(n: usize) -> Vec<RingIndex> {
    (1..=n).map(|i| RingIndex::new(i, n).expect("in range")).collect()
}

/// R over frequency shuffles (rows) and network realizations (columns) with
/// fixed initial conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossMatrix {
    pub shuffle_seeds: Vec<u64>,
    pub topology_seeds: Vec<u64>,
    /// `r[row][col]`; NaN for failed runs.
    pub r: Vec<Vec<f64>>,
    /// Columns ordered by increasing mean R, for display.
    pub column_order: Vec<usize>,
    pub failures: usize,
}

impl CrossMatrix {
    /// Column of the largest R in each row.
    pub fn argmax_columns(&self) -> Vec<usize> {
        self.r
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(j, _)| j)
                    .unwrap_or(0)
            })
            .collect()
    }
}

pub fn cross_shuffle_seed(base_seed: u64, row: usize) -> u64 {
    seeds::derive(base_seed, Stream::Shuffle, row as u64)
}

pub fn cross_topology_seed(base_seed: u64, col: usize) -> u64 {
    seeds::derive(base_seed, Stream::Topology, col as u64)
}

pub fn cross_matrix(
    template: &SampleTemplate,
    shuffles: usize,
    networks: usize,
    base_seed: u64,
    sim: &SimulationConfig,
    options: &RunOptions,
) -> Result<CrossMatrix> {
    if !matches!(template.topology, TopologySpec::Ws { .. }) {
        return Err(Error::invalid("cross matrix needs a Watts-Strogatz template"));
    }
    if shuffles == 0 || networks == 0 {
        return Err(Error::invalid("cross matrix needs at least one row and one column"));
    }
    sim.validate()?;
    let omega = template.frequencies()?;
    let initial = template.initial_conditions()?;
    let shuffle_seeds: Vec<u64> = (0..shuffles).map(|i| cross_shuffle_seed(base_seed, i)).collect();
    let topology_seeds: Vec<u64> = (0..networks).map(|j| cross_topology_seed(base_seed, j)).collect();
    let topologies = topology_seeds
        .iter()
        .map(|&s| template.topology.with_seed(s).build())
        .collect::<Result<Vec<_>>>()?;
    let cells = par_map(shuffles * networks, options.workers, |idx| {
        let (i, j) = (idx / networks, idx % networks);
        let shuffled = shuffle_frequencies(&omega, shuffle_seeds[i]);
        simulate_r(&shuffled, &initial, &topologies[j], sim, options.freq_tol)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let failures = cells.iter().filter(|c| c.is_none()).count();
    let r: Vec<Vec<f64>> = cells
        .chunks(networks)
        .map(|row| row.iter().map(|c| c.unwrap_or(f64::NAN)).collect())
        .collect();
    let col_mean = |j: usize| r.iter().map(|row| row[j]).sum::<f64>() / shuffles as f64;
    let mut column_order: Vec<usize> = (0..networks).collect();
    column_order.sort_by(|&a, &b| col_mean(a).total_cmp(&col_mean(b)));
    Ok(CrossMatrix {
        shuffle_seeds,
        topology_seeds,
        r,
        column_order,
        failures,
    })
}

//! Synchronization measures and attractor fingerprints.
//!
//! Everything here can be computed either from a stored [`Trajectory`] or on
//! the fly through [`SummaryAccumulator`], which is an [`Observer`] and is
//! what ensembles use to avoid keeping full trajectories around. Both routes
//! share the same accumulation code.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Observer, Trajectory};
use crate::error::{Error, Result};
use crate::topology::Topology;

/// Default tolerance for frequency synchronization.
pub const DEFAULT_FREQ_TOL: f64 = 0.01;
/// Default feature tolerance for attractor comparison.
pub const DEFAULT_ATTRACTOR_TOL: f64 = 1e-3;
/// Units per section for the section phase-sync features.
pub const SECTION_SIZE: usize = 100;

/// `|Σ exp(iθ_j)| / N`.
pub fn order_parameter(theta: &[f64]) -> f64 {
    let (s, c) = theta.iter().fold((0.0f64, 0.0f64), |(s, c), &x| {
        let (sx, cx) = x.sin_cos();
        (s + sx, c + cx)
    });
    (s.hypot(c) / theta.len() as f64).min(1.0)
}

/// Time average of r(t) over the observation window.
pub fn mean_r(traj: &Trajectory) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::EmptyWindow);
    }
    Ok(traj.r().iter().sum::<f64>() / traj.len() as f64)
}

/// True iff every time-averaged frequency lies within `tol` of their mean.
pub fn frequency_synchronized(omega_avg: &[f64], tol: f64) -> bool {
    if omega_avg.is_empty() {
        return true;
    }
    let mean = omega_avg.iter().sum::<f64>() / omega_avg.len() as f64;
    omega_avg.iter().all(|w| (w - mean).abs() < tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyncSummary {
    /// Time-averaged order parameter R.
    pub r_mean: f64,
    /// Temporal standard deviation of r(t).
    pub r_std: f64,
    pub freq_sync: bool,
    /// Time-averaged instantaneous frequency of each unit.
    pub omega_avg: Vec<f64>,
}

pub fn summarize(traj: &Trajectory, freq_tol: f64) -> Result<SyncSummary> {
    let mut acc = SummaryAccumulator::new(traj.n());
    traj.replay(&mut acc);
    acc.summary(freq_tol)
}

/// Block boundaries for section phase sync: contiguous blocks of
/// [`SECTION_SIZE`] units, the last block absorbing any remainder
/// (`N = 501` gives four blocks of 100 and one of 101). Rings smaller than
/// one section form a single block.
pub fn section_bounds(n: usize) -> Vec<(usize, usize)> {
    let blocks = (n / SECTION_SIZE).max(1);
    (0..blocks)
        .map(|b| {
            let start = b * SECTION_SIZE;
            let end = if b + 1 == blocks { n } else { start + SECTION_SIZE };
            (start, end)
        })
        .collect()
}

/// Streaming accumulator for summaries and, when given a topology, the
/// fingerprint features.
#[derive(Clone, Debug)]
pub struct SummaryAccumulator {
    n: usize,
    samples: usize,
    r_sum: f64,
    r_sq_sum: f64,
    freq_sum: Vec<f64>,
    advance: PhaseAdvance,
    features: Option<FeatureAccumulator>,
}

#[derive(Clone, Debug)]
struct FeatureAccumulator {
    neighbors: Vec<Vec<u32>>,
    sections: Vec<(usize, usize)>,
    neighbor_sum: Vec<f64>,
    section_sum: Vec<f64>,
    sin: Vec<f64>,
    cos: Vec<f64>,
}

impl SummaryAccumulator {
    pub fn new(n: usize) -> Self {
        SummaryAccumulator {
            n,
            samples: 0,
            r_sum: 0.0,
            r_sq_sum: 0.0,
            freq_sum: vec![0.0; n],
            advance: PhaseAdvance::new(n),
            features: None,
        }
    }

    /// Also accumulates the per-unit neighbor and per-section phase sync.
    pub fn with_fingerprint(topology: &Topology) -> Self {
        let n = topology.n();
        let neighbors = (0..n)
            .map(|i| topology.neighbors(i).into_iter().map(|j| j as u32).collect())
            .collect();
        let sections = section_bounds(n);
        let mut acc = Self::new(n);
        acc.features = Some(FeatureAccumulator {
            neighbors,
            neighbor_sum: vec![0.0; n],
            section_sum: vec![0.0; sections.len()],
            sections,
            sin: vec![0.0; n],
            cos: vec![0.0; n],
        });
        acc
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn summary(&self, freq_tol: f64) -> Result<SyncSummary> {
        if self.samples == 0 {
            return Err(Error::EmptyWindow);
        }
        let t = self.samples as f64;
        let r_mean = self.r_sum / t;
        let r_std = (self.r_sq_sum / t - r_mean * r_mean).max(0.0).sqrt();
        let omega_avg = self
            .advance
            .mean_frequencies()
            .unwrap_or_else(|| self.freq_sum.iter().map(|f| f / t).collect());
        Ok(SyncSummary {
            r_mean,
            r_std,
            freq_sync: frequency_synchronized(&omega_avg, freq_tol),
            omega_avg,
        })
    }

    /// Fingerprint of the accumulated window. Fails if the accumulator was
    /// built without a topology.
    pub fn fingerprint(&self) -> Result<AttractorFingerprint> {
        let feats = self
            .features
            .as_ref()
            .ok_or_else(|| Error::invalid("accumulator was not configured for fingerprints"))?;
        let summary = self.summary(DEFAULT_FREQ_TOL)?;
        let t = self.samples as f64;
        let mut features = Vec::with_capacity(2 * self.n + feats.sections.len() + 4);
        features.push(summary.r_std);
        features.extend(feats.neighbor_sum.iter().map(|v| v / t));
        features.extend(feats.section_sum.iter().map(|v| v / t));
        features.extend_from_slice(&summary.omega_avg);
        let (sd, iqr, gap) = spread_stats(&summary.omega_avg);
        features.extend([sd, iqr, gap]);
        Ok(AttractorFingerprint {
            n: self.n,
            sections: feats.sections.len(),
            features,
        })
    }
}

impl Observer for SummaryAccumulator {
    fn observe(&mut self, t: f64, theta: &[f64], dtheta: &[f64]) {
        let r = order_parameter(theta);
        self.samples += 1;
        self.advance.record(t, theta, dtheta);
        self.r_sum += r;
        self.r_sq_sum += r * r;
        for (a, &f) in self.freq_sum.iter_mut().zip(dtheta) {
            *a += f;
        }
        if let Some(f) = self.features.as_mut() {
            for ((s, c), &x) in f.sin.iter_mut().zip(f.cos.iter_mut()).zip(theta) {
                let (sx, cx) = x.sin_cos();
                *s = sx;
                *c = cx;
            }
            for (i, nb) in f.neighbors.iter().enumerate() {
                if nb.is_empty() {
                    continue;
                }
                // Pairwise order parameter |e^{iθi} + e^{iθj}| / 2 = |cos((θi − θj)/2)|,
                // from cos(θi − θj) via the half-angle identity.
                let mut acc = 0.0;
                for &j in nb {
                    let j = j as usize;
                    let cos_diff = f.cos[i] * f.cos[j] + f.sin[i] * f.sin[j];
                    acc += (0.5 * (1.0 + cos_diff)).max(0.0).sqrt();
                }
                f.neighbor_sum[i] += acc / nb.len() as f64;
            }
            for (b, &(start, end)) in f.sections.iter().enumerate() {
                let s: f64 = f.sin[start..end].iter().sum();
                let c: f64 = f.cos[start..end].iter().sum();
                f.section_sum[b] += (s.hypot(c) / (end - start) as f64).min(1.0);
            }
        }
    }
}

/// Accumulated phase advance of each unit between the first and the latest
/// sample. Works on wrapped or unwrapped phases: each increment is the
/// trapezoid prediction from the sampled `θ̇` plus the wrapped residual.
///
/// Time-averaged frequencies are taken as advance over elapsed time, the
/// exact time integral of `θ̇`. Averaging the sampled `θ̇` directly picks up
/// integrator noise along stiff directions, which in strongly coupled locked
/// states reaches 1e-3 at default tolerances.
#[derive(Clone, Debug)]
pub struct PhaseAdvance {
    first_t: f64,
    last_t: f64,
    prev_theta: Vec<f64>,
    prev_dtheta: Vec<f64>,
    advance: Vec<f64>,
    samples: usize,
}

impl PhaseAdvance {
    pub fn new(n: usize) -> Self {
        PhaseAdvance {
            first_t: 0.0,
            last_t: 0.0,
            prev_theta: vec![0.0; n],
            prev_dtheta: vec![0.0; n],
            advance: vec![0.0; n],
            samples: 0,
        }
    }

    fn record(&mut self, t: f64, theta: &[f64], dtheta: &[f64]) {
        if self.samples == 0 {
            self.first_t = t;
        } else {
            let h = t - self.last_t;
            for i in 0..self.advance.len() {
                let predicted = 0.5 * h * (self.prev_dtheta[i] + dtheta[i]);
                let residual = theta[i] - self.prev_theta[i] - predicted;
                self.advance[i] += predicted + (residual - TAU * (residual / TAU).round());
            }
        }
        self.prev_theta.copy_from_slice(theta);
        self.prev_dtheta.copy_from_slice(dtheta);
        self.last_t = t;
        self.samples += 1;
    }

    /// Advance divided by elapsed time; `None` before two distinct sample times.
    pub fn mean_frequencies(&self) -> Option<Vec<f64>> {
        let span = self.last_t - self.first_t;
        (self.samples >= 2 && span > 0.0).then(|| self.advance.iter().map(|a| a / span).collect())
    }
}

impl Observer for PhaseAdvance {
    fn observe(&mut self, t: f64, theta: &[f64], dtheta: &[f64]) {
        self.record(t, theta, dtheta);
    }
}

/// Population standard deviation, interquartile range, and largest gap
/// between consecutive sorted values.
fn spread_stats(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantile = |q: f64| {
        let pos = q * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    };
    let iqr = quantile(0.75) - quantile(0.25);
    let gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    (sd, iqr, gap)
}

/// Feature vector describing the long-term behavior of one realization.
///
/// Layout, for `N` units and `B` sections:
///
/// | index range              | feature                                   |
/// |--------------------------|-------------------------------------------|
/// | `0`                      | temporal std of r(t)                      |
/// | `1 ..= N`                | neighbor phase sync of each unit          |
/// | `N+1 ..= N+B`            | phase sync of each section                |
/// | `N+B+1 ..= 2N+B`         | time-averaged θ̇ of each unit              |
/// | `2N+B+1`, `+2`, `+3`     | std, IQR, and max gap of those averages   |
///
/// All entries are time averages (or functions of them), so relabeling time
/// samples inside the window leaves them unchanged; r_std is likewise
/// order-free.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractorFingerprint {
    pub n: usize,
    pub sections: usize,
    pub features: Vec<f64>,
}

impl AttractorFingerprint {
    pub fn neighbor_sync(&self) -> &[f64] {
        &self.features[1..=self.n]
    }

    pub fn section_sync(&self) -> &[f64] {
        &self.features[self.n + 1..=self.n + self.sections]
    }

    pub fn mean_frequencies(&self) -> &[f64] {
        let start = self.n + self.sections + 1;
        &self.features[start..start + self.n]
    }

    /// Max-norm distance. Fingerprints of different layouts are infinitely far apart.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.features.len() != other.features.len() || self.n != other.n {
            return f64::INFINITY;
        }
        self.features
            .iter()
            .zip(&other.features)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Fingerprint of a stored trajectory.
pub fn fingerprint(traj: &Trajectory, topology: &Topology) -> Result<AttractorFingerprint> {
    if topology.n() != traj.n() {
        return Err(Error::DimensionMismatch {
            expected: traj.n(),
            got: topology.n(),
        });
    }
    let mut acc = SummaryAccumulator::with_fingerprint(topology);
    traj.replay(&mut acc);
    acc.fingerprint()
}

/// How features are scaled before comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureScaling {
    /// Features in their natural units (phase sync in [0, 1], frequencies in
    /// units of the frequency spread).
    #[default]
    Raw,
    /// Each feature z-scored across the compared set; constant features drop out.
    ZScore,
}

/// Number of clusters under single linkage with max-norm distance `< tol`.
/// Identical behavior only merges, so this is a lower bound on the number of
/// attractors the fingerprints were drawn from.
pub fn count_attractors(fingerprints: &[AttractorFingerprint], tol: f64) -> Result<usize> {
    count_attractors_scaled(fingerprints, tol, FeatureScaling::Raw)
}

pub fn count_attractors_scaled(
    fingerprints: &[AttractorFingerprint],
    tol: f64,
    scaling: FeatureScaling,
) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("attractor tolerance must be > 0, got {tol}")));
    }
    let m = fingerprints.len();
    if m == 0 {
        return Ok(0);
    }
    let scaled: Vec<AttractorFingerprint> = match scaling {
        FeatureScaling::Raw => fingerprints.to_vec(),
        FeatureScaling::ZScore => z_score(fingerprints),
    };
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for a in 0..m {
        for b in a + 1..m {
            if scaled[a].distance(&scaled[b]) < tol {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    Ok((0..m).filter(|&i| find(&mut parent, i) == i).count())
}

fn z_score(fps: &[AttractorFingerprint]) -> Vec<AttractorFingerprint> {
    let m = fps.len() as f64;
    let width = fps.iter().map(|f| f.features.len()).max().unwrap_or(0);
    let mut out = fps.to_vec();
    for k in 0..width {
        let column: Vec<f64> = fps.iter().filter_map(|f| f.features.get(k).copied()).collect();
        let mean = column.iter().sum::<f64>() / m;
        let sd = (column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m).sqrt();
        for f in out.iter_mut() {
            if let Some(v) = f.features.get_mut(k) {
                *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::TopologySpec;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn constant_traj(n: usize, phases: &[f64], freqs: &[f64], samples: usize) -> Trajectory {
        let mut t = Trajectory::with_capacity(n, samples);
        for m in 0..samples {
            t.observe(m as f64, phases, freqs);
        }
        t
    }

    #[test]
    fn order_parameter_examples() {
        assert!((order_parameter(&[0.7; 10]) - 1.0).abs() < 1e-15);
        let n = 501;
        let twisted: Vec<f64> = (1..=n).map(|j| TAU * j as f64 / n as f64).collect();
        assert!(order_parameter(&twisted) < 1e-12);
        assert!(order_parameter(&[0.0, 0.0, PI, PI]) < 1e-15);
    }

    #[test]
    fn mean_r_examples() {
        let mut t = Trajectory::with_capacity(1, 4);
        for _ in 0..4 {
            t.observe(0.0, &[0.0], &[0.0]);
        }
        assert_eq!(mean_r(&t).unwrap(), 1.0);
        let alt = Trajectory::from_columns(
            2,
            vec![1.0, 2.0, 3.0, 4.0],
            vec![0.0, 1.0, 0.0, 1.0],
            vec![0.0; 8],
            vec![0.0; 8],
        )
        .unwrap();
        assert_eq!(mean_r(&alt).unwrap(), 0.5);
        let c = Trajectory::from_columns(1, vec![1.0; 3], vec![0.73; 3], vec![0.0; 3], vec![0.0; 3]).unwrap();
        assert!((mean_r(&c).unwrap() - 0.73).abs() < 1e-15);
        assert!(matches!(mean_r(&Trajectory::with_capacity(3, 0)), Err(Error::EmptyWindow)));
    }

    #[test]
    fn frequency_sync_examples() {
        assert!(frequency_synchronized(&[0.3; 7], 0.01));
        assert!(!frequency_synchronized(&[-0.5, 0.1, 1.2], 0.01));
        assert!(frequency_synchronized(&[1.0, 1.005], 0.01));
    }

    #[test]
    fn section_rule() {
        assert_eq!(
            section_bounds(501),
            vec![(0, 100), (100, 200), (200, 300), (300, 400), (400, 501)]
        );
        assert_eq!(section_bounds(51), vec![(0, 51)]);
        assert_eq!(section_bounds(200), vec![(0, 100), (100, 200)]);
    }

    #[test]
    fn synchronized_and_twisted_fingerprints_differ_in_neighbor_sync() {
        let n = 8;
        let topo = TopologySpec::Ws { n, k: 2, p: 0.0, seed: 0 }.build().unwrap();
        let synced = constant_traj(n, &[1.0; 8], &[0.0; 8], 5);
        let twisted_phases: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
        let twisted = constant_traj(n, &twisted_phases, &[0.0; 8], 5);
        let a = fingerprint(&synced, &topo).unwrap();
        let b = fingerprint(&twisted, &topo).unwrap();
        assert!(a.neighbor_sync().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let gap = a
            .neighbor_sync()
            .iter()
            .zip(b.neighbor_sync())
            .map(|(x, y)| (x - y).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(gap > 0.1, "smallest neighbor-sync difference {gap}");
        assert_eq!(count_attractors(&[a.clone(), b.clone()], 0.1).unwrap(), 2);
        assert_eq!(fingerprint(&synced, &topo).unwrap(), a);
    }

    #[test]
    fn count_attractors_examples() {
        let fp = |v: f64| AttractorFingerprint { n: 1, sections: 1, features: vec![0.0, v, v, v, 0.0, 0.0, 0.0] };
        let same = vec![fp(0.5); 6];
        assert_eq!(count_attractors(&same, 1e-3).unwrap(), 1);
        // Chain 0, 0.0008, 0.0016 links under single linkage.
        let chain = vec![fp(0.0), fp(0.0008), fp(0.0016), fp(0.5)];
        assert_eq!(count_attractors(&chain, 1e-3).unwrap(), 2);
        assert_eq!(count_attractors(&chain, 1e-4).unwrap(), 4);
        assert!(count_attractors(&chain, 0.0).is_err());
        assert_eq!(count_attractors_scaled(&same, 1e-3, FeatureScaling::ZScore).unwrap(), 1);
    }

    #[test]
    fn spread_stats_values() {
        let (sd, iqr, gap) = spread_stats(&[4.0, 1.0, 2.0, 3.0, 10.0]);
        assert!((sd - 3.1622776601683795).abs() < 1e-12);
        assert_eq!(iqr, 2.0);
        assert_eq!(gap, 6.0);
    }

    proptest! {
        #[test]
        fn order_parameter_invariances(
            theta in prop::collection::vec(-20.0f64..20.0, 1..60),
            shift in -10.0f64..10.0,
            seed: u64,
        ) {
            let r = order_parameter(&theta);
            prop_assert!((0.0..=1.0).contains(&r));
            let shifted: Vec<f64> = theta.iter().map(|x| x + shift).collect();
            prop_assert!((order_parameter(&shifted) - r).abs() < 1e-12);
            let mut perm = theta.clone();
            use rand::seq::SliceRandom;
            perm.shuffle(&mut crate::seeds::rng(seed));
            prop_assert!((order_parameter(&perm) - r).abs() < 1e-12);
        }

        #[test]
        fn mean_r_of_concatenation_is_weighted_mean(
            a in prop::collection::vec(0.0f64..=1.0, 1..40),
            b in prop::collection::vec(0.0f64..=1.0, 1..40),
        ) {
            let mk = |r: &Vec<f64>| Trajectory::from_columns(1, vec![0.0; r.len()], r.clone(), vec![0.0; r.len()], vec![0.0; r.len()]).unwrap();
            let joined: Vec<f64> = a.iter().chain(&b).copied().collect();
            let whole = mean_r(&mk(&joined)).unwrap();
            let parts = (mean_r(&mk(&a)).unwrap() * a.len() as f64 + mean_r(&mk(&b)).unwrap() * b.len() as f64)
                / (a.len() + b.len()) as f64;
            prop_assert!((whole - parts).abs() < 1e-12);
        }

        #[test]
        fn attractor_count_monotone_in_tolerance(
            values in prop::collection::vec(0.0f64..1.0, 1..30),
            t1 in 1e-4f64..0.5,
            t2 in 1e-4f64..0.5,
        ) {
            let fps: Vec<_> = values
                .iter()
                .map(|&v| AttractorFingerprint { n: 1, sections: 1, features: vec![v, v * 0.5, 0.0, 0.0, 0.0, 0.0, 0.0] })
                .collect();
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(count_attractors(&fps, hi).unwrap() <= count_attractors(&fps, lo).unwrap());
        }
    }
}

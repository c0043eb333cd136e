//! Parameter grids over coupling, topology parameter and ring size.
//!
//! A [`SweepPlan`] expands to grid points ordered by `N`, then the topology
//! parameter, then ε. Point `id` runs one ensemble whose seeds come from the
//! plan alone, so any point can be recomputed in isolation.
//!
//! On-disk layout of a sweep directory:
//!
//! ```text
//! manifest.json            plan, tool version, completion bitmap, wall time
//! grid.csv                 one row per point: parameters, Δ, χ, R̄, ...
//! points/<id>/samples.csv  per-sample rows
//! points/<id>/stats.json   checkpoint; a point is complete once this exists
//! ```

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::SimulationConfig;
use crate::ensemble::io::{read_summary_json, write_samples_csv, write_summary_json};
use crate::ensemble::{
    run_ensemble, EnsembleStats, RunOptions, SampleTemplate, SamplingStrategy, Variation,
};
use crate::error::{Error, Result};
use crate::topology::{TopologySpec, DEFAULT_SHORT_RANGE};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const GRID_FILE: &str = "grid.csv";
pub const STATS_FILE: &str = "stats.json";

/// One axis of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Grid {
    /// `points` equally spaced values from `start` to `stop` inclusive.
    Linear { start: f64, stop: f64, points: usize },
    /// `points` values equally spaced in `log10` from `start` to `stop`,
    /// optionally preceded by 0.
    Log {
        start: f64,
        stop: f64,
        points: usize,
        #[serde(default)]
        with_zero: bool,
    },
    List { values: Vec<f64> },
}

impl Grid {
    pub fn single(v: f64) -> Self {
        Grid::List { values: vec![v] }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let spaced = |a: f64, b: f64, m: usize| -> Vec<f64> {
            if m == 1 {
                return vec![a];
            }
            (0..m)
                .map(|i| if i + 1 == m { b } else { a + (b - a) * i as f64 / (m - 1) as f64 })
                .collect()
        };
        let values = match *self {
            Grid::Linear { start, stop, points } => {
                if points == 0 || !start.is_finite() || !stop.is_finite() {
                    return Err(Error::invalid("linear grid needs finite bounds and >= 1 point"));
                }
                spaced(start, stop, points)
            }
            Grid::Log {
                start,
                stop,
                points,
                with_zero,
            } => {
                if points == 0 || !(start > 0.0 && stop > 0.0) || !stop.is_finite() {
                    return Err(Error::invalid("log grid needs positive finite bounds and >= 1 point"));
                }
                let mut v: Vec<f64> = spaced(start.log10(), stop.log10(), points)
                    .into_iter()
                    .map(|e| 10f64.powf(e))
                    .collect();
                // Pin the endpoints against powf rounding.
                v[0] = start;
                if points > 1 {
                    v[points - 1] = stop;
                }
                if with_zero {
                    v.insert(0, 0.0);
                }
                v
            }
            Grid::List { ref values } => {
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("list grid needs >= 1 finite value"));
                }
                values.clone()
            }
        };
        Ok(values)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ws,
    Dd,
}

fn default_k() -> usize {
    2
}

/// Everything needed to reproduce a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub family: Family,
    pub n: Vec<usize>,
    /// Rewiring probability `p` (WS) or exponent α (DD).
    pub topology_param: Grid,
    pub eps: Grid,
    #[serde(default = "default_k")]
    pub k: usize,
    pub strategy: SamplingStrategy,
    #[serde(default)]
    pub sim: SimulationConfig,
    #[serde(default)]
    pub topology_seed: u64,
    #[serde(default)]
    pub freq_seed: u64,
    #[serde(default)]
    pub ic_seed: u64,
    /// Also fingerprint samples and count attractors.
    #[serde(default)]
    pub fingerprints: bool,
}

/// One grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub id: usize,
    pub n: usize,
    pub param: f64,
    pub eps: f64,
}

impl SweepPlan {
    /// Desk-scale default: `N = 101`, 51 frequency shuffles per point, 21 ε
    /// values on `[0, 10]` and 21 topology values (`p` log-spaced on
    /// `[1e-3, 1]` plus 0, or α on `[0, 3]`).
    pub fn desk(family: Family) -> Self {
        let topology_param = match family {
            Family::Ws => Grid::Log {
                start: 1e-3,
                stop: 1.0,
                points: 20,
                with_zero: true,
            },
            Family::Dd => Grid::Linear {
                start: 0.0,
                stop: 3.0,
                points: 21,
            },
        };
        SweepPlan {
            family,
            n: vec![101],
            topology_param,
            eps: Grid::Linear {
                start: 0.0,
                stop: 10.0,
                points: 21,
            },
            k: 2,
            strategy: SamplingStrategy::new(Variation::ShuffleFrequencies, 51, 0),
            sim: SimulationConfig::default(),
            topology_seed: 0,
            freq_seed: 0,
            ic_seed: 1,
            fingerprints: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() {
            return Err(Error::invalid("sweep needs at least one N"));
        }
        match (self.family, &self.topology_param) {
            (Family::Ws, Grid::Linear { .. }) => {
                return Err(Error::invalid("p grids are log-spaced; use a log or list grid"))
            }
            (Family::Dd, Grid::Log { .. }) => {
                return Err(Error::invalid("alpha grids are linear; use a linear or list grid"))
            }
            _ => {}
        }
        let mut sim = self.sim.clone();
        for eps in self.eps.values()? {
            sim.eps = eps;
            sim.validate()?;
        }
        for &n in &self.n {
            for param in self.topology_param.values()? {
                let template = self.template(n, param);
                template.topology.build()?;
                self.strategy.validate(&template)?;
            }
        }
        Ok(())
    }

    pub fn topology(&self, n: usize, param: f64) -> TopologySpec {
        match self.family {
            Family::Ws => TopologySpec::Ws {
                n,
                k: self.k,
                p: param,
                seed: self.topology_seed,
            },
            Family::Dd => TopologySpec::Dd { n, alpha: param },
        }
    }

    pub fn template(&self, n: usize, param: f64) -> SampleTemplate {
        SampleTemplate::new(self.topology(n, param), self.freq_seed, self.ic_seed)
    }

    pub fn sim_at(&self, eps: f64) -> SimulationConfig {
        self.sim.clone().with_eps(eps)
    }

    pub fn points(&self) -> Result<Vec<GridPoint>> {
        let params = self.topology_param.values()?;
        let epss = self.eps.values()?;
        let mut out = Vec::with_capacity(self.n.len() * params.len() * epss.len());
        for &n in &self.n {
            for &param in &params {
                for &eps in &epss {
                    out.push(GridPoint {
                        id: out.len(),
                        n,
                        param,
                        eps,
                    });
                }
            }
        }
        Ok(out)
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            fingerprints: self.fingerprints,
            ..RunOptions::default()
        }
    }

    /// Runs a single grid point, exactly as the full sweep would.
    pub fn run_point(&self, point: &GridPoint) -> Result<(EnsembleStats, Vec<crate::ensemble::SampleRecord>)> {
        let run = run_ensemble(
            &self.template(point.n, point.param),
            &self.strategy,
            &self.sim_at(point.eps),
            &self.options(),
        )?;
        Ok((run.stats, run.records))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub point: GridPoint,
    /// Analytic κ at the default short-range cutoff; absent for rings too
    /// small to have one.
    pub kappa: Option<f64>,
    pub stats: EnsembleStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub plan: SweepPlan,
    pub points: usize,
    pub completed: Vec<bool>,
    pub wall_time_s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub manifest: Manifest,
    pub points: Vec<PointResult>,
}

impl SweepResult {
    /// Point results with the given `N` and ε, in topology-parameter order.
    pub fn slice(&self, n: usize, eps: f64) -> Vec<&PointResult> {
        self.points
            .iter()
            .filter(|p| p.point.n == n && p.point.eps == eps)
            .collect()
    }
}

pub fn point_dir(root: &Path, id: usize) -> PathBuf {
    root.join("points").join(format!("{id:04}"))
}

fn manifest_for(plan: &SweepPlan, completed: Vec<bool>, wall: Option<f64>) -> Manifest {
    Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        plan: plan.clone(),
        points: completed.len(),
        completed,
        wall_time_s: wall,
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_manifest(root: &Path, manifest: &Manifest) -> Result<()> {
    write_atomic(&root.join(MANIFEST_FILE), &(serde_json::to_string_pretty(manifest)? + "\n"))
}

/// Reads a point checkpoint. A missing file means "not done"; anything
/// unreadable is a corrupted checkpoint.
fn load_checkpoint(root: &Path, id: usize) -> Result<Option<EnsembleStats>> {
    let path = point_dir(root, id).join(STATS_FILE);
    if !path.exists() {
        return Ok(None);
    }
    read_summary_json(&path).map(Some).map_err(|e| Error::Checkpoint {
        path: path.clone(),
        message: e.to_string(),
    })
}

/// Runs or resumes a sweep. With `out` set, every finished point is
/// checkpointed and an existing directory for the same plan is resumed;
/// an existing directory for a different plan is an error. `workers` bounds
/// the pool shared by grid points and their samples.
pub fn run_sweep(plan: &SweepPlan, out: Option<&Path>, workers: Option<usize>) -> Result<SweepResult> {
    plan.validate()?;
    let points = plan.points()?;
    let start = Instant::now();
    if let Some(root) = out {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        let mpath = root.join(MANIFEST_FILE);
        if mpath.exists() {
            let text = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
            let existing: Manifest = serde_json::from_str(&text).map_err(|e| Error::Checkpoint {
                path: mpath.clone(),
                message: e.to_string(),
            })?;
            if existing.plan != *plan {
                return Err(Error::invalid(format!(
                    "{} holds a different sweep plan",
                    root.display()
                )));
            }
        } else {
            write_manifest(root, &manifest_for(plan, vec![false; points.len()], None))?;
        }
    }

    let work = |point: &GridPoint| -> Result<PointResult> {
        let kappa = plan
            .topology(point.n, point.param)
            .kappa_analytic(DEFAULT_SHORT_RANGE)
            .ok();
        if let Some(root) = out {
            if let Some(stats) = load_checkpoint(root, point.id)? {
                return Ok(PointResult { point: *point, kappa, stats });
            }
        }
        let (stats, records) = plan.run_point(point)?;
        if let Some(root) = out {
            let dir = point_dir(root, point.id);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            write_samples_csv(&dir.join(crate::ensemble::io::SAMPLES_FILE), &records)?;
            // The checkpoint goes last and atomically: its presence marks the point done.
            let tmp = dir.join("stats.json.tmp");
            write_summary_json(&tmp, &stats)?;
            let done = dir.join(STATS_FILE);
            std::fs::rename(&tmp, &done).map_err(|e| Error::io(&done, e))?;
        }
        Ok(PointResult { point: *point, kappa, stats })
    };
    let run_all = || points.par_iter().map(work).collect::<Result<Vec<_>>>();
    let results = match workers {
        None => run_all()?,
        Some(0) => return Err(Error::invalid("worker count must be at least 1")),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?
            .install(run_all)?,
    };

    let manifest = manifest_for(
        plan,
        vec![true; results.len()],
        Some(start.elapsed().as_secs_f64()),
    );
    if let Some(root) = out {
        write_grid_csv(&root.join(GRID_FILE), plan.family, &results)?;
        write_manifest(root, &manifest)?;
    }
    Ok(SweepResult {
        manifest,
        points: results,
    })
}

pub fn write_grid_csv(path: &Path, family: Family, results: &[PointResult]) -> Result<()> {
    let param = match family {
        Family::Ws => "p",
        Family::Dd => "alpha",
    };
    let mut out = format!(
        "id,N,{param},eps,kappa,delta,chi,R_mean,freq_sync_fraction,count,failures,attractors\n"
    );
    for r in results {
        let s = &r.stats;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.point.id,
            r.point.n,
            r.point.param,
            r.point.eps,
            r.kappa.map(|k| k.to_string()).unwrap_or_default(),
            s.delta,
            s.chi,
            s.r_mean,
            s.freq_sync_fraction,
            s.count,
            s.failures.len(),
            s.attractor_count.map(|c| c.to_string()).unwrap_or_default()
        ));
    }
    write_atomic(path, &out)
}

/// One row of a κ-fluctuation curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaPoint {
    pub param: f64,
    pub kappa: Option<f64>,
    pub chi: f64,
    pub delta: f64,
    pub r_mean: f64,
}

/// χ and Δ against κ for a plan with a single ε and a single `N`.
pub fn kappa_curve(plan: &SweepPlan, out: Option<&Path>, workers: Option<usize>) -> Result<Vec<KappaPoint>> {
    if plan.eps.values()?.len() != 1 || plan.n.len() != 1 {
        return Err(Error::invalid("a kappa curve needs exactly one eps and one N"));
    }
    let result = run_sweep(plan, out, workers)?;
    Ok(result
        .points
        .iter()
        .map(|p| KappaPoint {
            param: p.point.param,
            kappa: p.kappa,
            chi: p.stats.chi,
            delta: p.stats.delta,
            r_mean: p.stats.r_mean,
        })
        .collect())
}

/// Per-`N` statistics at a fixed topology parameter and ε.
pub fn scaling_sweep(
    family: Family,
    n_values: &[usize],
    param: f64,
    eps: f64,
    strategy: SamplingStrategy,
    sim: SimulationConfig,
    workers: Option<usize>,
) -> Result<Vec<(usize, EnsembleStats)>> {
    let plan = SweepPlan {
        n: n_values.to_vec(),
        topology_param: Grid::single(param),
        eps: Grid::single(eps),
        strategy,
        sim,
        ..SweepPlan::desk(family)
    };
    let result = run_sweep(&plan, None, workers)?;
    Ok(result.points.into_iter().map(|p| (p.point.n, p.stats)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(family: Family) -> SweepPlan {
        SweepPlan {
            n: vec![11],
            topology_param: match family {
                Family::Ws => Grid::Log {
                    start: 0.01,
                    stop: 1.0,
                    points: 2,
                    with_zero: true,
                },
                Family::Dd => Grid::List { values: vec![0.0, 2.0] },
            },
            eps: Grid::List { values: vec![0.5, 3.0] },
            strategy: SamplingStrategy::new(Variation::ShuffleFrequencies, 3, 1),
            sim: SimulationConfig {
                t_transient: 2.0,
                t_observe: 2.0,
                dt_sample: 0.5,
                ..Default::default()
            },
            ..SweepPlan::desk(family)
        }
    }

    #[test]
    fn grids() {
        let lin = Grid::Linear { start: 0.0, stop: 10.0, points: 21 }.values().unwrap();
        assert_eq!(lin.len(), 21);
        assert_eq!(lin[20], 10.0);
        assert!((lin[9] - 4.5).abs() < 1e-15);
        let log = Grid::Log { start: 1e-3, stop: 1.0, points: 4, with_zero: true }.values().unwrap();
        assert_eq!(log.len(), 5);
        assert_eq!(log[0], 0.0);
        assert_eq!(log[1], 1e-3);
        assert!((log[2] - 1e-2).abs() < 1e-15);
        assert_eq!(log[4], 1.0);
        assert!(Grid::Log { start: 0.0, stop: 1.0, points: 3, with_zero: false }.values().is_err());
        assert!(Grid::List { values: vec![] }.values().is_err());
    }

    #[test]
    fn plan_rejects_mismatched_grids() {
        let mut p = SweepPlan::desk(Family::Ws);
        p.topology_param = Grid::Linear { start: 0.0, stop: 1.0, points: 3 };
        assert!(p.validate().is_err());
        let mut d = SweepPlan::desk(Family::Dd);
        d.n = vec![100];
        assert!(d.validate().is_err());
        assert!(SweepPlan::desk(Family::Ws).validate().is_ok());
        assert_eq!(SweepPlan::desk(Family::Ws).points().unwrap().len(), 21 * 21);
    }

    #[test]
    fn degenerate_grid_matches_direct_ensemble() {
        let mut plan = tiny(Family::Dd);
        plan.topology_param = Grid::single(1.5);
        plan.eps = Grid::single(2.0);
        let res = run_sweep(&plan, None, Some(1)).unwrap();
        let direct = run_ensemble(
            &plan.template(11, 1.5),
            &plan.strategy,
            &plan.sim_at(2.0),
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(res.points.len(), 1);
        assert_eq!(res.points[0].stats, direct.stats);
    }

    #[test]
    fn resume_is_bit_identical_and_corruption_is_reported() {
        let plan = tiny(Family::Ws);
        let a = tempfile::tempdir().unwrap();
        let full = run_sweep(&plan, Some(a.path()), Some(2)).unwrap();
        assert_eq!(full.points.len(), 3 * 2);
        let grid_a = std::fs::read_to_string(a.path().join(GRID_FILE)).unwrap();

        // Simulate an interruption: drop two checkpoints and rerun.
        std::fs::remove_file(point_dir(a.path(), 1).join(STATS_FILE)).unwrap();
        std::fs::remove_dir_all(point_dir(a.path(), 4)).unwrap();
        let resumed = run_sweep(&plan, Some(a.path()), Some(1)).unwrap();
        assert_eq!(resumed.points, full.points);
        assert_eq!(std::fs::read_to_string(a.path().join(GRID_FILE)).unwrap(), grid_a);

        std::fs::write(point_dir(a.path(), 2).join(STATS_FILE), "{ truncated").unwrap();
        assert!(matches!(
            run_sweep(&plan, Some(a.path()), None),
            Err(Error::Checkpoint { .. })
        ));

        let mut other = plan.clone();
        other.strategy.count = 4;
        assert!(run_sweep(&other, Some(a.path()), None).is_err());
    }

    #[test]
    fn single_point_reproducible_from_manifest() {
        let plan = tiny(Family::Dd);
        let dir = tempfile::tempdir().unwrap();
        let res = run_sweep(&plan, Some(dir.path()), None).unwrap();
        let text = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        let manifest: Manifest = serde_json::from_str(&text).unwrap();
        assert!(manifest.completed.iter().all(|&c| c));
        let pts = manifest.plan.points().unwrap();
        let (stats, _) = manifest.plan.run_point(&pts[3]).unwrap();
        assert_eq!(stats, res.points[3].stats);
        for p in &res.points {
            assert!((0.0..=1.0).contains(&p.stats.r_mean));
            assert!((0.0..=1.0).contains(&p.stats.delta));
        }
    }

    #[test]
    fn kappa_curve_uses_topology_kappa() {
        let mut plan = tiny(Family::Ws);
        plan.eps = Grid::single(1.0);
        let curve = kappa_curve(&plan, None, None).unwrap();
        let kappas: Vec<f64> = curve.iter().map(|c| c.kappa.unwrap()).collect();
        assert_eq!(kappas, vec![1.0, 1.0 - 2.0 * 0.01, -1.0]);
        assert!(kappa_curve(&tiny(Family::Ws), None, None).is_err());
    }

    #[test]
    fn scaling_sweep_reports_each_n() {
        let sim = tiny(Family::Dd).sim;
        let out = scaling_sweep(
            Family::Dd,
            &[5, 9],
            1.0,
            2.0,
            SamplingStrategy::new(Variation::ShuffleFrequencies, 2, 0),
            sim,
            None,
        )
        .unwrap();
        assert_eq!(out.iter().map(|o| o.0).collect::<Vec<_>>(), vec![5, 9]);
    }
}

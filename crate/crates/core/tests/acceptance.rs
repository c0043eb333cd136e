//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.
//!
//! `ACCEPTANCE_ONLY=3,5 cargo test --test acceptance` runs a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng as _;

use kuramoto_core::dynamics::{
    integrate, integrate_with, sample_frequencies, sample_initial_conditions, Coupling, Observer,
    SimulationConfig,
};
use kuramoto_core::ensemble::io::write_samples_csv;
use kuramoto_core::ensemble::{
    all_units, delta_omega_scan, histogram_R, omega_new_scan, run_ensemble, EnsembleRun,
    EnsembleStats, RunOptions, SampleTemplate, SamplingStrategy, Variation, DEFAULT_BIN,
};
use kuramoto_core::seeds;
use kuramoto_core::topology::{generate_ws, kappa_dd, kappa_graph, TopologySpec};

const WS_EPS: f64 = 4.51282;
const DD_EPS: f64 = 6.46154;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ws(n: usize, p: f64, seed: u64) -> TopologySpec {
    TopologySpec::Ws { n, k: 2, p, seed }
}

fn sim(eps: f64) -> SimulationConfig {
    SimulationConfig::default().with_eps(eps)
}

fn ensemble(template: SampleTemplate, variation: Variation, count: usize, sim: SimulationConfig, options: RunOptions) -> EnsembleRun {
    run_ensemble(&template, &SamplingStrategy::new(variation, count, 5), &sim, &options).expect("ensemble runs")
}

fn no_failures(stats: &EnsembleStats) -> bool {
    stats.failures.is_empty()
}

fn decoupled_exactness() -> Outcome {
    let start = Instant::now();
    let n = 501;
    let topo = ws(n, 0.08733, 1).build().unwrap();
    let omega = sample_frequencies(n, 1).unwrap();
    let initial = sample_initial_conditions(n, 2).unwrap();
    let config = SimulationConfig {
        eps: 0.0,
        t_transient: 0.0,
        t_observe: 100.0,
        ..Default::default()
    };
    let traj = integrate(&initial, &omega, &topo, &config).unwrap();
    let last = traj.final_state().unwrap();
    let err = last
        .theta
        .iter()
        .zip(&initial.theta)
        .zip(&omega.omega)
        .map(|((th, th0), w)| (th - (th0 + w * 100.0)).abs())
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        err < 1e-6 && secs < 5.0,
        format!("max |θ(100) − θ(0) − 100ω| = {err:.2e} (< 1e-6), runtime {secs:.2} s (< 5 s)"),
    )
}

struct SumCheck {
    omega_sum: f64,
    worst: f64,
    samples: usize,
}

impl Observer for SumCheck {
    fn observe(&mut self, _t: f64, _theta: &[f64], dtheta: &[f64]) {
        let s: f64 = dtheta.iter().sum();
        self.worst = self.worst.max((s - self.omega_sum).abs());
        self.samples += 1;
    }
}

fn conservation() -> Outcome {
    let n = 101;
    let mut rng = seeds::rng(2024);
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    for c in 0..20u64 {
        let spec = if c % 2 == 0 {
            ws(n, rng.gen_range(0.0..=1.0), c)
        } else {
            TopologySpec::Dd { n, alpha: rng.gen_range(0.0..3.0) }
        };
        let config = SimulationConfig {
            eps: rng.gen_range(0.0..8.0),
            t_transient: 20.0,
            t_observe: 20.0,
            ..Default::default()
        };
        let omega = sample_frequencies(n, 100 + c).unwrap();
        let initial = sample_initial_conditions(n, 200 + c).unwrap();
        let mut check = SumCheck {
            omega_sum: omega.omega.iter().sum(),
            worst: 0.0,
            samples: 0,
        };
        integrate_with(&initial, &omega, &spec.build().unwrap(), &config, &mut check).unwrap();
        worst = worst.max(check.worst);
        samples += check.samples;
    }
    outcome(
        worst < 1e-8,
        format!("max |Σθ̇ − Σω| = {worst:.2e} over {samples} samples in 20 configs (< 1e-8)"),
    )
}

/// Classical fixed-step RK4, independent of the adaptive stepper.
fn rk4(coupling: &mut Coupling, omega: &[f64], eps: f64, y: &mut [f64], t_end: f64, dt: f64) {
    let n = y.len();
    let steps = (t_end / dt).round() as usize;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for _ in 0..steps {
        coupling.eval(y, omega, eps, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * dt * k1[i];
        }
        coupling.eval(&tmp, omega, eps, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * dt * k2[i];
        }
        coupling.eval(&tmp, omega, eps, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + dt * k3[i];
        }
        coupling.eval(&tmp, omega, eps, &mut k4);
        for i in 0..n {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

fn integrator_oracle() -> Outcome {
    let start = Instant::now();
    let n = 51;
    let topo = ws(n, 0.1, 3).build().unwrap();
    let omega = sample_frequencies(n, 4).unwrap();
    let initial = sample_initial_conditions(n, 5).unwrap();
    let config = SimulationConfig {
        eps: 4.5,
        t_transient: 0.0,
        t_observe: 200.0,
        dt_sample: 1.0,
        ..Default::default()
    };
    let traj = integrate(&initial, &omega, &topo, &config).unwrap();
    let adaptive = &traj.final_state().unwrap().theta;
    let mut reference = initial.theta.clone();
    rk4(&mut Coupling::new(&topo), &omega.omega, 4.5, &mut reference, 200.0, 1e-4);
    let err = adaptive
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        err < 1e-4 && secs < 60.0,
        format!("max phase difference vs RK4(dt=1e-4) at t=200: {err:.2e} (< 1e-4), runtime {secs:.1} s (< 60 s)"),
    )
}

fn mean_field_transition() -> Outcome {
    let start = Instant::now();
    let n = 201;
    let template = SampleTemplate::new(TopologySpec::Dd { n, alpha: 0.0 }, 1, 2);
    let eps_grid: Vec<f64> = (0..13).map(|i| 0.5 + 0.25 * i as f64).collect();
    let mut r_bar = Vec::new();
    let mut failures = 0;
    for &eps in &eps_grid {
        let config = SimulationConfig {
            mean_field_fast_path: true,
            ..sim(eps)
        };
        let run = ensemble(template, Variation::ResampleFrequencies, 51, config, RunOptions::default());
        failures += run.stats.failures.len();
        r_bar.push(run.stats.r_mean);
    }
    let crossing = (1..eps_grid.len()).find(|&i| r_bar[i - 1] < 0.5 && r_bar[i] >= 0.5).map(|i| {
        let (e0, e1, r0, r1) = (eps_grid[i - 1], eps_grid[i], r_bar[i - 1], r_bar[i]);
        e0 + (e1 - e0) * (0.5 - r0) / (r1 - r0)
    });
    let at3 = r_bar[eps_grid.iter().position(|&e| e == 3.0).unwrap()];
    let secs = start.elapsed().as_secs_f64();
    let curve: Vec<String> = eps_grid.iter().zip(&r_bar).map(|(e, r)| format!("{e}:{r:.3}")).collect();
    let pass = crossing.is_some_and(|c| (1.2..=2.2).contains(&c)) && at3 > 0.8 && failures == 0 && secs < 1800.0;
    outcome(
        pass,
        format!(
            "N={n}, 51 resamples/ε: R̄ crosses 0.5 at ε≈{} (in [1.2, 2.2]), R̄(3)={at3:.3} (> 0.8), failures {failures}, {secs:.0} s; R̄ = [{}]",
            crossing.map_or("none".into(), |c| format!("{c:.3}")),
            curve.join(" ")
        ),
    )
}

/// The WS malleability ensemble, shared with the histogram criterion: sample
/// `k` depends only on the base seed and `k`, so its first 51 samples are
/// exactly a 51-sample ensemble.
fn ws_peak_run() -> &'static EnsembleRun {
    static RUN: OnceLock<EnsembleRun> = OnceLock::new();
    RUN.get_or_init(|| {
        ensemble(
            SampleTemplate::new(ws(501, 0.08733, 1), 1, 2),
            Variation::ShuffleFrequencies,
            101,
            sim(WS_EPS),
            RunOptions::default(),
        )
    })
}

fn malleability_peak() -> Outcome {
    let ws_run = ws_peak_run();
    let dd_run = ensemble(
        SampleTemplate::new(TopologySpec::Dd { n: 501, alpha: 1.76923 }, 1, 2),
        Variation::ShuffleFrequencies,
        101,
        sim(DD_EPS),
        RunOptions::default(),
    );
    let (dw, dd) = (ws_run.stats.delta, dd_run.stats.delta);
    outcome(
        dw >= 0.6 && dd >= 0.3 && no_failures(&ws_run.stats) && no_failures(&dd_run.stats),
        format!("N=501, 101 shuffles: WS Δ={dw:.4} (≥ 0.6), DD Δ={dd:.4} (≥ 0.3)"),
    )
}

fn off_transition() -> Outcome {
    let run = ensemble(
        SampleTemplate::new(ws(501, 1.0, 1), 1, 2),
        Variation::ShuffleFrequencies,
        51,
        sim(5.0),
        RunOptions::default(),
    );
    let d = run.stats.delta;
    outcome(
        d < 0.05 && no_failures(&run.stats),
        format!("WS N=501 p=1 ε=5, 51 shuffles: Δ={d:.2e} (< 0.05), R̄={:.4}", run.stats.r_mean),
    )
}

fn single_unit_disruption() -> Outcome {
    let n = 101;
    let p = 0.1145;
    let config = sim(WS_EPS);
    let units = all_units(n);
    let mut maxima = Vec::new();
    let mut failures = 0;
    for r in 1..=3u64 {
        let template = SampleTemplate::new(ws(n, p, r), r + 1, r + 2);
        let scan = omega_new_scan(&template, &units, 3.0, &config, &RunOptions::default()).unwrap();
        failures += scan.failures;
        maxima.push(scan.max_abs());
    }
    let disruption = maxima.iter().cloned().fold(0.0, f64::max);

    let template = SampleTemplate::new(ws(n, p, 1), 2, 3);
    let scan = delta_omega_scan(&template, &units, &[-0.05, -0.025, 0.0, 0.025, 0.05], &config, &RunOptions::default()).unwrap();
    failures += scan.failures;
    let quiet = scan.delta_r.iter().filter(|row| row.iter().all(|v| v.abs() < 0.1)).count();
    let fraction = quiet as f64 / n as f64;
    let shown: Vec<String> = maxima.iter().map(|m| format!("{m:.3}")).collect();
    outcome(
        disruption > 0.3 && fraction >= 0.95 && failures == 0,
        format!(
            "WS N={n} p={p}: max |R − R_ref| with ω_new=3 over all units = {disruption:.3} (> 0.3; per network [{}]); units with |δR| < 0.1 for all |δω| ≤ 0.05: {:.1}% (≥ 95%)",
            shown.join(", "),
            100.0 * fraction
        ),
    )
}

fn kappa_formulas() -> Outcome {
    let text = include_str!("data/kappa_oracle.csv");
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let alpha: f64 = f[0].parse().unwrap();
        let n: usize = f[1].parse().unwrap();
        let d: usize = f[2].parse().unwrap();
        let expected: f64 = f[3].parse().unwrap();
        let got = kappa_dd(alpha, n, d).unwrap().kappa;
        worst = worst.max((got - expected).abs());
        rows += 1;
    }
    let mut ws_dev: f64 = 0.0;
    let mut means = Vec::new();
    for p in [0.1, 0.3, 0.5] {
        let mean = (0..100u64)
            .map(|s| kappa_graph(&generate_ws(501, 2, p, s).unwrap(), 2).unwrap().kappa)
            .sum::<f64>()
            / 100.0;
        ws_dev = ws_dev.max((mean - (1.0 - 2.0 * p)).abs());
        means.push(format!("p={p}: {mean:.4}"));
    }
    outcome(
        rows == 50 && worst < 1e-12 && ws_dev <= 0.05,
        format!(
            "DD κ vs 50-digit oracle on {rows} triples: max error {worst:.2e} (< 1e-12); WS mean κ over 100 graphs [{}], max |κ − (1 − 2p)| = {ws_dev:.4} (≤ 0.05)",
            means.join(", ")
        ),
    )
}

fn multistability() -> Outcome {
    let count = |p: f64| {
        let run = ensemble(
            SampleTemplate::new(ws(501, p, 1), 1, 2),
            Variation::ShuffleInitialConditions,
            50,
            sim(WS_EPS),
            RunOptions::default().with_fingerprints(),
        );
        (run.stats.attractor_count.unwrap(), run.stats.failures.len())
    };
    let (mid, f1) = count(0.19684);
    let (random, f2) = count(1.0);
    outcome(
        mid > random && random == 1 && f1 + f2 == 0,
        format!("WS N=501 ε={WS_EPS}, 50 IC shuffles: attractors p=0.19684 → {mid}, p=1 → {random} (want > and = 1)"),
    )
}

fn histogram_contract() -> Outcome {
    let freq = &ws_peak_run().records[..51];
    let freq_r: Vec<f64> = freq.iter().filter_map(|r| r.r()).collect();
    let ic = ensemble(
        SampleTemplate::new(ws(501, 0.08733, 1), 1, 2),
        Variation::ShuffleInitialConditions,
        51,
        sim(WS_EPS),
        RunOptions::default(),
    );
    let hf = histogram_R(&freq_r, DEFAULT_BIN).unwrap();
    let hi = &ic.stats.histogram;
    let sum_err = [&hf, hi]
        .iter()
        .map(|h| (h.probabilities.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let chi_freq = EnsembleStats::from_values(freq_r.clone(), 0, None, Vec::new(), DEFAULT_BIN).unwrap().chi;
    let chi_ic = ic.stats.chi;
    let contract = hf.bins == 200 && hi.bins == 200 && sum_err < 1e-12;
    outcome(
        contract && chi_freq > chi_ic && freq_r.len() == 51 && no_failures(&ic.stats),
        format!(
            "bins {} at width {}, |Σp − 1| = {sum_err:.1e} (< 1e-12); WS N=501 p=0.08733 ε={WS_EPS}, 51 each: χ(frequency shuffles) = {chi_freq:.4} vs χ(IC shuffles) = {chi_ic:.4} (want >)",
            hf.bins,
            hf.width()
        ),
    )
}

fn parallel_determinism() -> Outcome {
    let template = SampleTemplate::new(ws(101, 0.08733, 1), 1, 2);
    let config = SimulationConfig {
        t_transient: 100.0,
        t_observe: 100.0,
        ..sim(WS_EPS)
    };
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for workers in [1, 8] {
        let run = ensemble(template, Variation::ShuffleFrequencies, 24, config.clone(), RunOptions::default().with_workers(workers));
        let path = dir.path().join(format!("samples-{workers}.csv"));
        write_samples_csv(&path, &run.records).unwrap();
        files.push(std::fs::read(&path).unwrap());
    }
    outcome(
        files[0] == files[1],
        format!("24-sample ensemble, samples.csv with 1 vs 8 workers: {} ({} bytes)", if files[0] == files[1] { "identical" } else { "DIFFERENT" }, files[0].len()),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "decoupled exactness", decoupled_exactness),
        (2, "conservation", conservation),
        (3, "integrator oracle", integrator_oracle),
        (4, "mean-field transition", mean_field_transition),
        (5, "malleability peak", malleability_peak),
        (6, "off-transition quiescence", off_transition),
        (7, "single-unit disruption", single_unit_disruption),
        (8, "kappa formulas", kappa_formulas),
        (9, "multistability contrast", multistability),
        (10, "histogram contract", histogram_contract),
        (11, "determinism under parallelism", parallel_determinism),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    // The harness-less target still receives libtest flags such as --list.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        println!(
            "{} {id:>2} {name}: {} [{:.1} s]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
        if !result.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("acceptance: {} failed: {failed:?}", failed.len());
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}

//! Tsitouras 5(4) embedded Runge–Kutta pair with FSAL and adaptive steps.

/// Butcher tableau of the Tsitouras 5(4) pair.
pub(crate) mod tableau {
    // Nodes; unused by the stepper because the right-hand side is autonomous.
    #[allow(dead_code)]
    pub const C: [f64; 7] = [0.0, 0.161, 0.327, 0.9, 0.980_025_540_904_509_7, 1.0, 1.0];

    pub const A21: f64 = 0.161;
    pub const A31: f64 = -0.008_480_655_492_356_989;
    pub const A32: f64 = 0.335_480_655_492_357;
    pub const A41: f64 = 2.897_153_057_105_493;
    pub const A42: f64 = -6.359_448_489_975_075;
    pub const A43: f64 = 4.362_295_432_869_581_5;
    pub const A51: f64 = 5.325_864_828_439_257;
    pub const A52: f64 = -11.748_883_564_062_828;
    pub const A53: f64 = 7.495_539_342_889_836_5;
    pub const A54: f64 = -0.092_495_066_361_755_25;
    pub const A61: f64 = 5.861_455_442_946_42;
    pub const A62: f64 = -12.920_969_317_847_11;
    pub const A63: f64 = 8.159_367_898_576_159;
    pub const A64: f64 = -0.071_584_973_281_401;
    pub const A65: f64 = -0.028_269_050_394_068_383;
    /// Fifth-order weights; also row 7 of `A` (first same as last).
    pub const B: [f64; 6] = [
        0.096_460_766_818_065_23,
        0.01,
        0.479_889_650_414_499_6,
        1.379_008_574_103_742,
        -3.290_069_515_436_081,
        2.324_710_524_099_774,
    ];
    /// Difference between the fifth- and fourth-order weights, stages 1..=7.
    pub const E: [f64; 7] = [
        -0.001_780_011_052_225_777_1,
        -0.000_816_434_459_656_746_9,
        0.007_880_878_010_261_995,
        -0.144_711_007_173_262_9,
        0.582_357_165_452_555_2,
        -0.458_082_105_929_186_97,
        1.0 / 66.0,
    ];
}

use crate::error::{Error, Result};

use super::coupling::Coupling;
use super::SimulationConfig;

use std::f64::consts::PI;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const MAX_STEPS: u64 = 500_000_000;

/// Receives the state at every observation time.
pub trait Observer {
    /// `theta` is the unwrapped phase vector at `t`, `dtheta` the right-hand
    /// side evaluated there.
    fn observe(&mut self, t: f64, theta: &[f64], dtheta: &[f64]);
}

impl<F: FnMut(f64, &[f64], &[f64])> Observer for F {
    fn observe(&mut self, t: f64, theta: &[f64], dtheta: &[f64]) {
        self(t, theta, dtheta)
    }
}

/// Counters from one integration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

/// Scale for the relative part of the error norm. Phases are angles, so the
/// relative tolerance applies to the representative in `(-π, π]`; the norm is
/// then independent of how many turns the unwrapped phase has made.
#[inline]
fn angle_scale(x: f64) -> f64 {
    let r = x - (2.0 * PI) * (x / (2.0 * PI)).round();
    r.abs()
}

struct Workspace {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
        }
    }
}

/// Integrates from `t0` to `t0 + t_transient + t_observe`, calling the
/// observer at `t0 + t_transient + m dt_sample` for `m = 1..=M`.
///
/// Steps are shortened to land exactly on observation times; the step size
/// the controller wanted is restored afterwards.
pub(crate) fn integrate_observed(
    coupling: &mut Coupling<'_>,
    omega: &[f64],
    y: &mut Vec<f64>,
    t0: f64,
    config: &SimulationConfig,
    observer: &mut dyn Observer,
) -> Result<StepStats> {
    use tableau::*;

    let n = y.len();
    let eps = config.eps;
    let mut ws = Workspace::new(n);
    let mut stats = StepStats::default();

    let t_window = t0 + config.t_transient;
    let n_samples = config.sample_count();
    let sample_time = |m: usize| t_window + m as f64 * config.dt_sample;

    let mut t = t0;
    coupling.eval(y, omega, eps, &mut ws.k[0]);
    stats.rhs_evals += 1;

    let mut h = initial_step(coupling, omega, y, &ws.k[0], config, &mut ws.tmp, &mut ws.y_new);
    stats.rhs_evals += 1;

    let mut next_sample = 1usize;
    let mut after_reject = false;

    while t < t_window || next_sample <= n_samples {
        // Next hard stop: the transient boundary, then each sample time.
        let (target, is_sample) = if t < t_window {
            (t_window, false)
        } else {
            (sample_time(next_sample), true)
        };
        let h_wanted = h.min(config.max_step);
        let (h_step, clamped) = if t + h_wanted >= target - 1e-12 * target.abs().max(1.0) {
            (target - t, true)
        } else {
            (h_wanted, false)
        };

        let min_step = 1e-12 * t.abs().max(1.0);
        if h_step < min_step && !clamped {
            return Err(Error::Integration {
                t,
                reason: format!("step size underflow (h = {h_step:e})"),
            });
        }
        if stats.accepted + stats.rejected > MAX_STEPS {
            return Err(Error::Integration {
                t,
                reason: "step budget exhausted".into(),
            });
        }

        // Stages 2..=7.
        let hs = h_step;
        stage(&mut ws.tmp, y, hs, &[(A21, &ws.k[0])]);
        coupling.eval(&ws.tmp, omega, eps, &mut ws.k[1]);
        stage(&mut ws.tmp, y, hs, &[(A31, &ws.k[0]), (A32, &ws.k[1])]);
        coupling.eval(&ws.tmp, omega, eps, &mut ws.k[2]);
        stage(
            &mut ws.tmp,
            y,
            hs,
            &[(A41, &ws.k[0]), (A42, &ws.k[1]), (A43, &ws.k[2])],
        );
        coupling.eval(&ws.tmp, omega, eps, &mut ws.k[3]);
        stage(
            &mut ws.tmp,
            y,
            hs,
            &[(A51, &ws.k[0]), (A52, &ws.k[1]), (A53, &ws.k[2]), (A54, &ws.k[3])],
        );
        coupling.eval(&ws.tmp, omega, eps, &mut ws.k[4]);
        stage(
            &mut ws.tmp,
            y,
            hs,
            &[
                (A61, &ws.k[0]),
                (A62, &ws.k[1]),
                (A63, &ws.k[2]),
                (A64, &ws.k[3]),
                (A65, &ws.k[4]),
            ],
        );
        coupling.eval(&ws.tmp, omega, eps, &mut ws.k[5]);
        stage(
            &mut ws.y_new,
            y,
            hs,
            &[
                (B[0], &ws.k[0]),
                (B[1], &ws.k[1]),
                (B[2], &ws.k[2]),
                (B[3], &ws.k[3]),
                (B[4], &ws.k[4]),
                (B[5], &ws.k[5]),
            ],
        );
        coupling.eval(&ws.y_new, omega, eps, &mut ws.k[6]);
        stats.rhs_evals += 6;

        // RMS of the scaled embedded error.
        let mut acc = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for s in 0..7 {
                e += E[s] * ws.k[s][i];
            }
            let scale = config.abs_tol
                + config.rel_tol * angle_scale(y[i]).max(angle_scale(ws.y_new[i]));
            let r = hs * e / scale;
            acc += r * r;
        }
        let err = (acc / n as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Integration {
                t,
                reason: "non-finite state or error estimate".into(),
            });
        }

        let factor = if err == 0.0 {
            FAC_MAX
        } else {
            (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
        };

        if err <= 1.0 {
            stats.accepted += 1;
            t = if clamped { target } else { t + hs };
            std::mem::swap(y, &mut ws.y_new);
            ws.k.swap(0, 6);

            let grow = if after_reject { factor.min(1.0) } else { factor };
            let proposed = hs * grow;
            h = if clamped { proposed.max(h_wanted) } else { proposed };
            after_reject = false;

            if clamped && is_sample {
                observer.observe(t, y, &ws.k[0]);
                next_sample += 1;
            }
        } else {
            stats.rejected += 1;
            h = hs * factor.min(1.0);
            after_reject = true;
        }
    }
    Ok(stats)
}

#[inline]
fn stage(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &Vec<f64>)]) {
    out.copy_from_slice(y);
    for &(a, k) in terms {
        let ha = h * a;
        for (o, &kv) in out.iter_mut().zip(k.iter()) {
            *o += ha * kv;
        }
    }
}

/// Starting step from the usual two-evaluation estimate of the local scale.
fn initial_step(
    coupling: &mut Coupling<'_>,
    omega: &[f64],
    y: &[f64],
    f0: &[f64],
    config: &SimulationConfig,
    y1: &mut [f64],
    f1: &mut [f64],
) -> f64 {
    let n = y.len() as f64;
    let scale = |i: usize| config.abs_tol + config.rel_tol * angle_scale(y[i]);
    let d0 = (y.iter().enumerate().map(|(i, v)| (angle_scale(*v) / scale(i)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().enumerate().map(|(i, v)| (v / scale(i)).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(config.max_step);
    for i in 0..y.len() {
        y1[i] = y[i] + h0 * f0[i];
    }
    coupling.eval(y1, omega, config.eps, f1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .enumerate()
        .map(|(i, (a, b))| ((a - b) / scale(i)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(config.max_step)
}

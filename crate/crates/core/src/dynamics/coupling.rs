//! Right-hand side of the Kuramoto equations for both topology families.
//!
//! Both kernels expand `sin(θj − θi) = sin θj cos θi − cos θj sin θi`, so a
//! right-hand side evaluation costs one `sin_cos` per node plus multiply-adds
//! over the couplings. The distance-dependent sum is circulant, so it can also
//! be done as a cyclic convolution of `e^{iθ}` with the weight profile.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::topology::{DistanceDependentProfile, Topology, WattsStrogatzGraph};

/// How the distance-dependent sum is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DdKernel {
    /// Circulant sum over the half ring. The reference path.
    #[default]
    Direct,
    /// Cyclic convolution through FFTs, `O(N log N)`.
    Spectral,
    /// `O(N)` evaluation through the global phasor sum; only valid for α = 0.
    MeanField,
}

/// Evaluates `θ̇` for a fixed topology, owning its scratch buffers.
pub struct Coupling<'a> {
    topology: &'a Topology,
    kernel: DdKernel,
    sin: Vec<f64>,
    cos: Vec<f64>,
    acc: Vec<f64>,
    /// Symmetric kernel `W[m + n']` for `m` in `-n'..=n'`, zero at `m = 0`,
    /// and ring-tripled copies of sin/cos for the direct DD path.
    full_kernel: Vec<f64>,
    ext_sin: Vec<f64>,
    ext_cos: Vec<f64>,
    spectral: Option<Spectral>,
}

struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Transform of the circulant's first column, scaled by `1/N`.
    kernel_hat: Vec<Complex64>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Spectral {
    fn new(profile: &DistanceDependentProfile) -> Self {
        let n = profile.n();
        let w = profile.weights();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scale = 1.0 / n as f64;
        let mut kernel_hat: Vec<Complex64> = (0..n)
            .map(|m| {
                let d = m.min(n - m);
                let v = if d == 0 { 0.0 } else { w[d - 1] * scale };
                Complex64::new(v, 0.0)
            })
            .collect();
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::default(); len];
        forward.process_with_scratch(&mut kernel_hat, &mut scratch);
        Spectral {
            forward,
            inverse,
            kernel_hat,
            buf: vec![Complex64::default(); n],
            scratch,
        }
    }

    fn apply(&mut self, sin: &[f64], cos: &[f64], acc: &mut [f64]) {
        for ((b, &s), &c) in self.buf.iter_mut().zip(sin).zip(cos) {
            *b = Complex64::new(c, s);
        }
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (b, k) in self.buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        for i in 0..acc.len() {
            let z = self.buf[i];
            acc[i] = cos[i] * z.im - sin[i] * z.re;
        }
    }
}

impl<'a> Coupling<'a> {
    pub fn new(topology: &'a Topology) -> Self {
        Self::with_kernel(topology, DdKernel::Direct).expect("direct kernel always valid")
    }

    pub fn with_kernel(topology: &'a Topology, kernel: DdKernel) -> Result<Self> {
        let n = topology.n();
        let mut full_kernel = Vec::new();
        let mut ext_len = 0;
        let mut spectral = None;
        if let Topology::DistanceDependent(profile) = topology {
            if kernel == DdKernel::MeanField && profile.alpha() != 0.0 {
                return Err(Error::invalid(format!(
                    "mean-field kernel requires alpha = 0, got {}",
                    profile.alpha()
                )));
            }
            if kernel == DdKernel::Direct {
                full_kernel = symmetric_kernel(profile);
                ext_len = 3 * n;
            }
            if kernel == DdKernel::Spectral {
                spectral = Some(Spectral::new(profile));
            }
        }
        Ok(Coupling {
            topology,
            kernel,
            sin: vec![0.0; n],
            cos: vec![0.0; n],
            acc: vec![0.0; n],
            full_kernel,
            ext_sin: vec![0.0; ext_len],
            ext_cos: vec![0.0; ext_len],
            spectral,
        })
    }

    pub fn n(&self) -> usize {
        self.topology.n()
    }

    pub fn topology(&self) -> &Topology {
        self.topology
    }

    /// Writes `θ̇ = ω + ε Σ_j A_ij sin(θj − θi)` into `out`.
    pub fn eval(&mut self, theta: &[f64], omega: &[f64], eps: f64, out: &mut [f64]) {
        debug_assert_eq!(theta.len(), self.n());
        for ((s, c), &th) in self.sin.iter_mut().zip(self.cos.iter_mut()).zip(theta) {
            let (si, ci) = th.sin_cos();
            *s = si;
            *c = ci;
        }
        match self.topology {
            Topology::WattsStrogatz(g) => ws_coupling(g, &self.sin, &self.cos, &mut self.acc),
            Topology::DistanceDependent(profile) => match self.kernel {
                DdKernel::Direct => self.dd_direct(profile.half()),
                DdKernel::MeanField => mean_field(&self.sin, &self.cos, &mut self.acc),
                DdKernel::Spectral => self
                    .spectral
                    .as_mut()
                    .expect("spectral plan built with the kernel")
                    .apply(&self.sin, &self.cos, &mut self.acc),
            },
        }
        for ((o, &w), &a) in out.iter_mut().zip(omega).zip(&self.acc) {
            *o = w + eps * a;
        }
    }

    fn dd_direct(&mut self, half: usize) {
        let n = self.sin.len();
        for copy in 0..3 {
            self.ext_sin[copy * n..(copy + 1) * n].copy_from_slice(&self.sin);
            self.ext_cos[copy * n..(copy + 1) * n].copy_from_slice(&self.cos);
        }
        let width = 2 * half + 1;
        for i in 0..n {
            let start = i + n - half;
            let (ws, wc) = dot2(
                &self.full_kernel,
                &self.ext_sin[start..start + width],
                &self.ext_cos[start..start + width],
            );
            self.acc[i] = self.cos[i] * ws - self.sin[i] * wc;
        }
    }
}

fn symmetric_kernel(profile: &DistanceDependentProfile) -> Vec<f64> {
    let half = profile.half();
    let w = profile.weights();
    let mut k = vec![0.0; 2 * half + 1];
    for d in 1..=half {
        k[half + d] = w[d - 1];
        k[half - d] = w[d - 1];
    }
    k
}

fn ws_coupling(g: &WattsStrogatzGraph, sin: &[f64], cos: &[f64], acc: &mut [f64]) {
    acc.iter_mut().for_each(|a| *a = 0.0);
    for &(a, b) in g.edges() {
        let (a, b) = (a as usize, b as usize);
        // sin(θb − θa); the reverse term is its exact negation.
        let d = sin[b] * cos[a] - cos[b] * sin[a];
        acc[a] += d;
        acc[b] -= d;
    }
}

fn mean_field(sin: &[f64], cos: &[f64], acc: &mut [f64]) {
    let n = sin.len();
    let total_s: f64 = sin.iter().sum();
    let total_c: f64 = cos.iter().sum();
    let w = 1.0 / (n - 1) as f64;
    for i in 0..n {
        acc[i] = w * (cos[i] * (total_s - sin[i]) - sin[i] * (total_c - cos[i]));
    }
}

/// Two dot products against the same weights, with eight independent
/// accumulators so the loop vectorizes without reassociation flags.
#[inline]
fn dot2(w: &[f64], x: &[f64], y: &[f64]) -> (f64, f64) {
    const LANES: usize = 8;
    let mut ax = [0.0f64; LANES];
    let mut ay = [0.0f64; LANES];
    let wc = w.chunks_exact(LANES);
    let xc = x.chunks_exact(LANES);
    let yc = y.chunks_exact(LANES);
    let (wr, xr, yr) = (wc.remainder(), xc.remainder(), yc.remainder());
    for ((wv, xv), yv) in wc.zip(xc).zip(yc) {
        for l in 0..LANES {
            ax[l] += wv[l] * xv[l];
            ay[l] += wv[l] * yv[l];
        }
    }
    let mut sx: f64 = ax.iter().sum();
    let mut sy: f64 = ay.iter().sum();
    for ((&wv, &xv), &yv) in wr.iter().zip(xr).zip(yr) {
        sx += wv * xv;
        sy += wv * yv;
    }
    (sx, sy)
}

/// One-shot right-hand side with dimension checks.
pub fn rhs(theta: &[f64], omega: &[f64], eps: f64, topology: &Topology) -> Result<Vec<f64>> {
    let n = topology.n();
    if theta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: theta.len(),
        });
    }
    if omega.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: omega.len(),
        });
    }
    let mut out = vec![0.0; n];
    Coupling::new(topology).eval(theta, omega, eps, &mut out);
    Ok(out)
}

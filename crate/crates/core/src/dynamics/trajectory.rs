//! Recorded observation windows and their on-disk form.
//!
//! The binary format is columnar: a `.bin` file holding little-endian `f64`
//! columns back to back, described by a JSON sidecar:
//!
//! | column  | count   | layout                          |
//! |---------|---------|---------------------------------|
//! | `time`  | `T`     | sample times                    |
//! | `r`     | `T`     | order parameter                 |
//! | `phase` | `T * N` | sample-major, reduced to [0,2π) |
//! | `freq`  | `T * N` | sample-major, `θ̇` from the RHS  |

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::order_parameter;

use super::{wrap_phase, Observer, PhaseState};

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    n: usize,
    times: Vec<f64>,
    r: Vec<f64>,
    phases: Vec<f64>,
    freqs: Vec<f64>,
    final_state: Option<PhaseState>,
}

impl Observer for Trajectory {
    fn observe(&mut self, t: f64, theta: &[f64], dtheta: &[f64]) {
        self.times.push(t);
        self.r.push(order_parameter(theta));
        self.phases.extend(theta.iter().map(|&x| wrap_phase(x)));
        self.freqs.extend_from_slice(dtheta);
    }
}

impl Trajectory {
    pub fn with_capacity(n: usize, samples: usize) -> Self {
        Trajectory {
            n,
            times: Vec::with_capacity(samples),
            r: Vec::with_capacity(samples),
            phases: Vec::with_capacity(samples * n),
            freqs: Vec::with_capacity(samples * n),
            final_state: None,
        }
    }

    /// Builds a trajectory from raw columns, checking shapes and `r` range.
    pub fn from_columns(
        n: usize,
        times: Vec<f64>,
        r: Vec<f64>,
        phases: Vec<f64>,
        freqs: Vec<f64>,
    ) -> Result<Self> {
        let t = times.len();
        if r.len() != t {
            return Err(Error::DimensionMismatch { expected: t, got: r.len() });
        }
        if phases.len() != t * n {
            return Err(Error::DimensionMismatch { expected: t * n, got: phases.len() });
        }
        if freqs.len() != t * n {
            return Err(Error::DimensionMismatch { expected: t * n, got: freqs.len() });
        }
        if let Some(&bad) = r.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfUnitInterval(bad));
        }
        Ok(Trajectory {
            n,
            times,
            r,
            phases,
            freqs,
            final_state: None,
        })
    }

    pub(crate) fn set_final_state(&mut self, state: PhaseState) {
        self.final_state = Some(state);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// Phases at sample `m`, reduced to `[0, 2π)`.
    pub fn phases_at(&self, m: usize) -> &[f64] {
        &self.phases[m * self.n..(m + 1) * self.n]
    }

    pub fn freqs_at(&self, m: usize) -> &[f64] {
        &self.freqs[m * self.n..(m + 1) * self.n]
    }

    /// Unwrapped end state of the integration, when produced by `integrate`.
    pub fn final_state(&self) -> Option<&PhaseState> {
        self.final_state.as_ref()
    }

    /// Per-unit time average of the instantaneous frequencies: phase advance
    /// over the window divided by its length (see
    /// [`PhaseAdvance`](crate::observables::PhaseAdvance)), or the sampled
    /// `θ̇` itself for a single sample.
    pub fn mean_frequencies(&self) -> Vec<f64> {
        let mut adv = crate::observables::PhaseAdvance::new(self.n);
        self.replay(&mut adv);
        adv.mean_frequencies().unwrap_or_else(|| {
            if self.is_empty() {
                vec![0.0; self.n]
            } else {
                self.freqs_at(0).to_vec()
            }
        })
    }

    /// Replays the stored samples into another observer.
    pub fn replay(&self, observer: &mut dyn Observer) {
        for m in 0..self.len() {
            observer.observe(self.times[m], self.phases_at(m), self.freqs_at(m));
        }
    }

    pub fn write_binary(&self, stem: &Path, metadata: serde_json::Value) -> Result<()> {
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        let mut columns = Vec::new();
        let mut offset = 0u64;
        let mut buf = Vec::with_capacity(8 * (2 * self.len() + self.phases.len() + self.freqs.len()));
        for (name, col) in [
            ("time", &self.times),
            ("r", &self.r),
            ("phase", &self.phases),
            ("freq", &self.freqs),
        ] {
            columns.push(ColumnInfo {
                name: name.to_string(),
                offset,
                count: col.len() as u64,
            });
            for v in col {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            offset += 8 * col.len() as u64;
        }
        let sidecar = Sidecar {
            format: FORMAT.to_string(),
            version: 1,
            n: self.n,
            samples: self.len(),
            dtype: "f64le".to_string(),
            columns,
            metadata,
        };
        std::fs::write(&bin, &buf).map_err(|e| Error::io(&bin, e))?;
        let text = serde_json::to_string_pretty(&sidecar)?;
        std::fs::write(&json, text).map_err(|e| Error::io(&json, e))
    }

    pub fn read_binary(stem: &Path) -> Result<(Self, serde_json::Value)> {
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        let text = std::fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
        let sidecar: Sidecar = serde_json::from_str(&text)?;
        if sidecar.format != FORMAT || sidecar.dtype != "f64le" {
            return Err(Error::invalid(format!("{} is not a trajectory sidecar", json.display())));
        }
        let bytes = std::fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
        let column = |name: &str| -> Result<Vec<f64>> {
            let info = sidecar
                .columns
                .iter()
                .find(|c| c.name == name)
                .ok_or_else(|| Error::invalid(format!("missing column {name}")))?;
            let start = info.offset as usize;
            let end = start + 8 * info.count as usize;
            let raw = bytes
                .get(start..end)
                .ok_or_else(|| Error::invalid(format!("column {name} exceeds file")))?;
            Ok(raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect())
        };
        let traj = Trajectory::from_columns(
            sidecar.n,
            column("time")?,
            column("r")?,
            column("phase")?,
            column("freq")?,
        )?;
        Ok((traj, sidecar.metadata))
    }

    /// `t,r` rows.
    pub fn write_r_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("t,r\n");
        for (t, r) in self.times.iter().zip(&self.r) {
            out.push_str(&format!("{t},{r}\n"));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// `unit,mean_frequency` rows, 1-based units.
    pub fn write_frequency_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("unit,mean_frequency\n");
        for (i, f) in self.mean_frequencies().iter().enumerate() {
            out.push_str(&format!("{},{f}\n", i + 1));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Phase raster: one row per `stride`-th sample, `t` then the N phases.
    pub fn write_phase_csv(&self, path: &Path, stride: usize) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        write!(w, "t").map_err(io)?;
        for i in 1..=self.n {
            write!(w, ",theta_{i}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
        for m in (0..self.len()).step_by(stride.max(1)) {
            write!(w, "{}", self.times[m]).map_err(io)?;
            for p in self.phases_at(m) {
                write!(w, ",{p}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

const FORMAT: &str = "kuramoto-trajectory";

#[derive(Serialize, Deserialize)]
struct ColumnInfo {
    name: String,
    offset: u64,
    count: u64,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format: String,
    version: u32,
    n: usize,
    samples: usize,
    dtype: String,
    columns: Vec<ColumnInfo>,
    metadata: serde_json::Value,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let traj = Trajectory::from_columns(
            2,
            vec![0.1, 0.2],
            vec![0.5, 1.0],
            vec![0.0, 1.0, 2.0, 3.0],
            vec![-1.0, 1.0, 0.25, 0.0],
        )
        .unwrap();
        let stem = dir.path().join("traj");
        traj.write_binary(&stem, serde_json::json!({"eps": 4.5})).unwrap();
        let (back, meta) = Trajectory::read_binary(&stem).unwrap();
        assert_eq!(back, traj);
        assert_eq!(meta["eps"], 4.5);
        // Both units advance 2 rad in 0.1; the wrapped residual is measured
        // against the trapezoid prediction from the sampled rates.
        let f = back.mean_frequencies();
        assert!((f[0] - 20.0).abs() < 1e-9, "{f:?}");
        assert!((f[1] - 20.0).abs() < 1e-9, "{f:?}");
    }

    #[test]
    fn from_columns_validates() {
        assert!(Trajectory::from_columns(2, vec![0.0], vec![1.5], vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(Trajectory::from_columns(2, vec![0.0], vec![0.5], vec![0.0; 3], vec![0.0; 2]).is_err());
    }
}

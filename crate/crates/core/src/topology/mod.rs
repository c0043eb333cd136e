//! Ring topologies: Watts–Strogatz small-world graphs and distance-dependent
//! power-law profiles, plus the short/long-range ratio κ.
//!
//! Node positions are 1-based at the public surface ([`RingIndex`]) and
//! 0-based inside the numerical kernels.

mod dd;
pub mod io;
mod ws;

pub use dd::{dd_weight, eta, kappa_dd, DistanceDependentProfile};
pub use ws::{generate_ws, kappa_graph, WattsStrogatzGraph};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default short-range cutoff for κ.
pub const DEFAULT_SHORT_RANGE: usize = 2;

/// A 1-based node position on a ring of `n` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RingIndex(usize);

impl RingIndex {
    pub fn new(i: usize, n: usize) -> Result<Self> {
        if i == 0 || i > n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        Ok(RingIndex(i))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// 0-based offset into state vectors.
    pub fn zero_based(self) -> usize {
        self.0 - 1
    }
}

impl std::fmt::Display for RingIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `min(|i - j|, n - |i - j|)` for distinct nodes.
pub fn edge_distance(i: RingIndex, j: RingIndex, n: usize) -> Result<usize> {
    if i.get() > n {
        return Err(Error::IndexOutOfRange { index: i.get(), n });
    }
    if j.get() > n {
        return Err(Error::IndexOutOfRange { index: j.get(), n });
    }
    if i == j {
        return Err(Error::SelfDistance(i.get()));
    }
    Ok(ring_distance(i.zero_based(), j.zero_based(), n))
}

#[inline]
pub(crate) fn ring_distance(i: usize, j: usize, n: usize) -> usize {
    let diff = i.abs_diff(j);
    diff.min(n - diff)
}

/// Analytic κ for a Watts–Strogatz graph with rewiring probability `p`.
pub fn kappa_ws(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("rewiring probability {p} outside [0, 1]")));
    }
    Ok(1.0 - 2.0 * p)
}

/// Short/long-range influence split of a topology.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub k_short: f64,
    pub k_long: f64,
    pub kappa: f64,
    pub d: usize,
}

impl KappaReport {
    pub(crate) fn from_parts(k_short: f64, k_long: f64, d: usize) -> Self {
        let total = k_short + k_long;
        let kappa = if total > 0.0 {
            (k_short - k_long) / total
        } else {
            0.0
        };
        KappaReport {
            k_short,
            k_long,
            kappa,
            d,
        }
    }
}

/// Either topology family, queryable uniformly by the dynamics.
#[derive(Clone, Debug, PartialEq)]
pub enum Topology {
    WattsStrogatz(WattsStrogatzGraph),
    DistanceDependent(DistanceDependentProfile),
}

impl Topology {
    pub fn n(&self) -> usize {
        match self {
            Topology::WattsStrogatz(g) => g.n(),
            Topology::DistanceDependent(p) => p.n(),
        }
    }

    /// Topological neighbors of a 0-based node. For distance-dependent
    /// profiles every node is coupled to every other, so the nearest ring
    /// neighbors (distance 1) stand in.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        match self {
            Topology::WattsStrogatz(g) => g.neighbors(i).iter().map(|&j| j as usize).collect(),
            Topology::DistanceDependent(p) => {
                let n = p.n();
                let mut nb = vec![(i + 1) % n, (i + n - 1) % n];
                nb.sort_unstable();
                nb.dedup();
                nb
            }
        }
    }

    pub fn kappa(&self, d: usize) -> Result<KappaReport> {
        match self {
            Topology::WattsStrogatz(g) => kappa_graph(g, d),
            Topology::DistanceDependent(p) => kappa_dd(p.alpha(), p.n(), d),
        }
    }
}

/// Serializable description of how to build a topology.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Ws { n: usize, k: usize, p: f64, seed: u64 },
    Dd { n: usize, alpha: f64 },
}

impl TopologySpec {
    pub fn n(&self) -> usize {
        match *self {
            TopologySpec::Ws { n, .. } | TopologySpec::Dd { n, .. } => n,
        }
    }

    pub fn build(&self) -> Result<Topology> {
        match *self {
            TopologySpec::Ws { n, k, p, seed } => {
                Ok(Topology::WattsStrogatz(generate_ws(n, k, p, seed)?))
            }
            TopologySpec::Dd { n, alpha } => Ok(Topology::DistanceDependent(
                DistanceDependentProfile::new(n, alpha)?,
            )),
        }
    }

    pub fn with_n(self, n: usize) -> Self {
        match self {
            TopologySpec::Ws { k, p, seed, .. } => TopologySpec::Ws { n, k, p, seed },
            TopologySpec::Dd { alpha, .. } => TopologySpec::Dd { n, alpha },
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            TopologySpec::Ws { n, k, p, .. } => TopologySpec::Ws { n, k, p, seed },
            dd => dd,
        }
    }

    /// κ without building anything: analytic `1 - 2p` for WS, closed form for DD.
    pub fn kappa_analytic(&self, d: usize) -> Result<f64> {
        match *self {
            TopologySpec::Ws { p, .. } => kappa_ws(p),
            TopologySpec::Dd { n, alpha } => Ok(kappa_dd(alpha, n, d)?.kappa),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ri(i: usize, n: usize) -> RingIndex {
        RingIndex::new(i, n).unwrap()
    }

    #[test]
    fn edge_distance_examples() {
        assert_eq!(edge_distance(ri(1, 501), ri(2, 501), 501).unwrap(), 1);
        assert_eq!(edge_distance(ri(1, 501), ri(500, 501), 501).unwrap(), 2);
        assert_eq!(edge_distance(ri(10, 501), ri(260, 501), 501).unwrap(), 250);
    }

    #[test]
    fn edge_distance_rejects_self_pair() {
        assert!(matches!(
            edge_distance(ri(3, 5), ri(3, 5), 5),
            Err(Error::SelfDistance(3))
        ));
    }

    #[test]
    fn ring_index_bounds() {
        assert!(RingIndex::new(0, 5).is_err());
        assert!(RingIndex::new(6, 5).is_err());
        assert_eq!(RingIndex::new(5, 5).unwrap().zero_based(), 4);
    }

    #[test]
    fn kappa_ws_examples() {
        assert_eq!(kappa_ws(0.0).unwrap(), 1.0);
        assert_eq!(kappa_ws(0.5).unwrap(), 0.0);
        assert_eq!(kappa_ws(1.0).unwrap(), -1.0);
        assert!(kappa_ws(1.5).is_err());
    }

    proptest! {
        #[test]
        fn edge_distance_symmetric_and_bounded(n in 3usize..400, a in 0usize..400, b in 0usize..400) {
            let i = a % n + 1;
            let j = b % n + 1;
            prop_assume!(i != j);
            let dij = edge_distance(ri(i, n), ri(j, n), n).unwrap();
            let dji = edge_distance(ri(j, n), ri(i, n), n).unwrap();
            prop_assert_eq!(dij, dji);
            prop_assert!(dij >= 1 && dij <= n / 2);
        }
    }
}

use crate::error::{Error, Result};

use super::KappaReport;

/// Circulant power-law coupling on a ring of odd size `n`: node `i` couples
/// to every node at edge distance `d` with weight `1 / (eta(alpha) d^alpha)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceDependentProfile {
    n: usize,
    alpha: f64,
    eta: f64,
    /// `weights[d - 1]` for `d` in `1..=n'`.
    weights: Vec<f64>,
}

fn check_ring(alpha: f64, n: usize) -> Result<()> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::invalid(format!(
            "distance-dependent rings need odd N >= 3, got {n}"
        )));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("locality exponent {alpha} must be finite and >= 0")));
    }
    Ok(())
}

/// Neumaier-compensated sum of `d^-alpha` over `range`, smallest terms first.
fn power_sum(alpha: f64, range: std::ops::RangeInclusive<usize>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for d in range.rev() {
        let term = (d as f64).powf(-alpha);
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Row normalization `sum_{j=1}^{n'} 2 / j^alpha`.
pub fn eta(alpha: f64, n: usize) -> Result<f64> {
    check_ring(alpha, n)?;
    Ok(2.0 * power_sum(alpha, 1..=(n - 1) / 2))
}

/// Weight of a link at edge distance `d`.
pub fn dd_weight(d: usize, profile: &DistanceDependentProfile) -> Result<f64> {
    let half = profile.half();
    if d == 0 || d > half {
        return Err(Error::invalid(format!("edge distance {d} outside [1, {half}]")));
    }
    Ok(profile.weights[d - 1])
}

/// κ of a distance-dependent profile with short-range cutoff `d`.
pub fn kappa_dd(alpha: f64, n: usize, d: usize) -> Result<KappaReport> {
    check_ring(alpha, n)?;
    let half = (n - 1) / 2;
    if d == 0 || d >= half {
        return Err(Error::invalid(format!("short-range cutoff {d} outside [1, {half})")));
    }
    let short = power_sum(alpha, 1..=d);
    let long = power_sum(alpha, d + 1..=half);
    let norm = 2.0 * power_sum(alpha, 1..=half);
    let mut report = KappaReport::from_parts(2.0 * short / norm, 2.0 * long / norm, d);
    // The ratio is normalization free; evaluate it from the raw sums.
    report.kappa = (short - long) / (short + long);
    Ok(report)
}

impl DistanceDependentProfile {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        let eta = eta(alpha, n)?;
        let weights = (1..=(n - 1) / 2)
            .map(|d| 1.0 / (eta * (d as f64).powf(alpha)))
            .collect();
        Ok(DistanceDependentProfile {
            n,
            alpha,
            eta,
            weights,
        })
    }

    /// Rebuilds a profile from stored weights, checking they match `(n, alpha)`
    /// to the last bit.
    pub(crate) fn from_weights(n: usize, alpha: f64, weights: Vec<f64>) -> Result<Self> {
        let fresh = Self::new(n, alpha)?;
        if fresh.weights.len() != weights.len()
            || fresh
                .weights
                .iter()
                .zip(&weights)
                .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Err(Error::invalid(format!(
                "stored weights do not match profile N = {n}, alpha = {alpha}"
            )));
        }
        Ok(fresh)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `n' = (n - 1) / 2`, the largest edge distance.
    pub fn half(&self) -> usize {
        (self.n - 1) / 2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eta_examples() {
        assert_eq!(eta(0.0, 501).unwrap(), 500.0);
        assert!((eta(1.0, 5).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn eta_alpha_three_matches_extended_precision() {
        // 2 * sum_{j=1}^{250} j^-3, evaluated with mpmath at 50 digits.
        let expected = 2.404_097_870_191_189_3_f64;
        assert!((eta(3.0, 501).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn even_or_tiny_rings_rejected() {
        assert!(eta(1.0, 500).is_err());
        assert!(eta(1.0, 1).is_err());
        assert!(DistanceDependentProfile::new(100, 1.0).is_err());
        assert!(eta(-0.5, 11).is_err());
    }

    #[test]
    fn weight_examples() {
        let mf = DistanceDependentProfile::new(501, 0.0).unwrap();
        for d in [1, 100, 250] {
            assert_eq!(dd_weight(d, &mf).unwrap(), 1.0 / 500.0);
        }
        let p = DistanceDependentProfile::new(5, 1.0).unwrap();
        assert!((dd_weight(1, &p).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((dd_weight(2, &p).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(dd_weight(0, &p).is_err());
        assert!(dd_weight(3, &p).is_err());
    }

    #[test]
    fn kappa_dd_examples() {
        let mf = kappa_dd(0.0, 501, 2).unwrap();
        assert!((mf.kappa - (-0.984)).abs() < 1e-15);
        assert!((mf.k_short + mf.k_long - 1.0).abs() < 1e-15);
        let local = kappa_dd(60.0, 501, 2).unwrap();
        assert!(local.kappa > 1.0 - 1e-12);
        assert!(kappa_dd(1.0, 501, 250).is_err());
        assert!(kappa_dd(1.0, 501, 0).is_err());
    }

    #[test]
    fn kappa_dd_strictly_increasing_on_grid() {
        let grid: Vec<f64> = (0..25).map(|i| i as f64 * 0.2).collect();
        let kappas: Vec<f64> = grid
            .iter()
            .map(|&a| kappa_dd(a, 501, 2).unwrap().kappa)
            .collect();
        for w in kappas.windows(2) {
            assert!(w[0] < w[1], "{w:?}");
        }
    }

    proptest! {
        #[test]
        fn profile_rows_are_normalized(half in 1usize..1500, alpha in 0.0f64..6.0) {
            let n = 2 * half + 1;
            let p = DistanceDependentProfile::new(n, alpha).unwrap();
            let row: f64 = 2.0 * p.weights().iter().sum::<f64>();
            prop_assert!((row - 1.0).abs() <= 1e-12);
            prop_assert!(p.weights().iter().all(|&w| w > 0.0));
            prop_assert!(p.weights().windows(2).all(|w| w[0] >= w[1]));
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub pvalue: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form converges fast for small lambda
        let t = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let sum: f64 = (1..=20)
            .map(|j| {
                let odd = (2 * j - 1) as f64;
                (odd * odd * t).exp()
            })
            .sum();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * sum;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * lambda * lambda).exp();
            sum += if j % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// One-sample Kolmogorov–Smirnov test of `pvalues` against uniform(0, 1),
/// with the asymptotic p-value at `lambda = sqrt(n) * D`.
pub fn ks_uniform(pvalues: &[f64]) -> Result<KsResult> {
    if pvalues.len() < 5 {
        return Err(Error::Domain(format!(
            "KS test needs at least 5 values, got {}",
            pvalues.len()
        )));
    }
    if let Some(bad) = pvalues.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::Domain(format!("p-value {bad} outside (0, 1]")));
    }
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let above = (i + 1) as f64 / n - u;
            let below = u - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max);
    Ok(KsResult {
        statistic,
        pvalue: kolmogorov_sf(n.sqrt() * statistic),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_statistic_is_bounded() {
        let n = 100;
        let grid: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        let r = ks_uniform(&grid).unwrap();
        assert!(r.statistic <= 1.0 / (n + 1) as f64 + 1e-15);
        assert!(r.pvalue > 0.99);
    }

    #[test]
    fn maximal_deviation() {
        let r = ks_uniform(&[0.001; 20]).unwrap();
        assert!((r.statistic - 0.999).abs() < 1e-12);
        assert!(r.pvalue < 1e-12);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ks_uniform(&[0.1, 0.2, 0.3, 0.4, 0.0]).is_err());
        assert!(ks_uniform(&[0.1, 0.2, 0.3, 0.4, 1.2]).is_err());
        assert!(ks_uniform(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn kolmogorov_branches_agree() {
        // the two series overlap near the switch point
        let lambda: f64 = 1.18;
        let t = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let theta: f64 = (1..=20).map(|j| (((2 * j - 1) as f64).powi(2) * t).exp()).sum();
        let small = 1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * theta;
        let large = 2.0 * (1..=100)
            .map(|j| {
                let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
                if j % 2 == 1 { term } else { -term }
            })
            .sum::<f64>();
        assert!((small - large).abs() < 1e-14);
        assert!((kolmogorov_sf(1.3580986) - 0.05).abs() < 1e-6);
    }
}

//! Interpretation of the p-value plot shape.
//!
//! The sorted p-values are regressed on the normalized ranks `i/(n+1)`, so a
//! uniform null traces slope 1 for any `n`. Rules, checked in order:
//!
//! 1. fewer than `min_n` values: `indeterminate`;
//! 2. KS p-value at least `ks_alpha` and single-line slope within
//!    `null_slope_band`: `uniform_null`;
//! 3. at least `effect_fraction` of p-values below `significance` and a
//!    single-line slope below 1: `significant_effect`;
//! 4. two-segment BIC improvement above `bic_threshold`, positive right slope,
//!    and left slope below `slope_ratio` times the right slope: `bilinear_mixture`;
//! 5. otherwise `indeterminate`.

use serde::{Deserialize, Serialize};

use super::ks::ks_uniform;
use super::segmented::fit_hinge;
use crate::model::Dataset;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    UniformNull,
    SignificantEffect,
    BilinearMixture,
    Indeterminate,
}

impl Verdict {
    pub const ALL: [Verdict; 4] = [
        Verdict::UniformNull,
        Verdict::SignificantEffect,
        Verdict::BilinearMixture,
        Verdict::Indeterminate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::UniformNull => "uniform_null",
            Verdict::SignificantEffect => "significant_effect",
            Verdict::BilinearMixture => "bilinear_mixture",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

/// Thresholds for [`classify_pvalues`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeRules {
    pub min_n: usize,
    pub ks_alpha: f64,
    pub null_slope_band: (f64, f64),
    pub significance: f64,
    pub effect_fraction: f64,
    pub bic_threshold: f64,
    pub slope_ratio: f64,
}

impl Default for ShapeRules {
    fn default() -> Self {
        ShapeRules {
            min_n: 10,
            ks_alpha: 0.05,
            null_slope_band: (0.8, 1.2),
            significance: 0.05,
            effect_fraction: 0.5,
            bic_threshold: 10.0,
            slope_ratio: 0.25,
        }
    }
}

/// Outcome of the shape interpretation. Numeric fields are zero when `n`
/// is below the minimum and nothing was fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeVerdict {
    pub verdict: Verdict,
    pub n: usize,
    /// Single-line slope on the normalized-rank scale.
    pub slope_single: f64,
    /// Rank (1-based) of the last point on the left segment; only set for
    /// `bilinear_mixture`.
    pub breakpoint: Option<usize>,
    /// Knot of the best two-segment fit, reported whatever the verdict.
    pub best_knot: Option<usize>,
    pub left_slope: f64,
    pub right_slope: f64,
    pub sse_single: f64,
    pub sse_two_segment: f64,
    /// BIC(single line) minus BIC(two segments); positive favours two segments.
    pub bic_delta: f64,
    pub ks_statistic: f64,
    pub ks_pvalue: f64,
}

impl ShapeVerdict {
    fn indeterminate(n: usize) -> Self {
        ShapeVerdict {
            verdict: Verdict::Indeterminate,
            n,
            slope_single: 0.0,
            breakpoint: None,
            best_knot: None,
            left_slope: 0.0,
            right_slope: 0.0,
            sse_single: 0.0,
            sse_two_segment: 0.0,
            bic_delta: 0.0,
            ks_statistic: 0.0,
            ks_pvalue: 0.0,
        }
    }
}

/// Classifies the p-value plot of a dataset with derived statistics.
pub fn classify_shape(ds: &Dataset, rules: &ShapeRules) -> Result<ShapeVerdict> {
    let p: Vec<f64> = ds.derived()?.iter().map(|d| d.p).collect();
    classify_pvalues(&p, rules)
}

/// Classifies a bag of p-values; input order is irrelevant.
pub fn classify_pvalues(pvalues: &[f64], rules: &ShapeRules) -> Result<ShapeVerdict> {
    let n = pvalues.len();
    if n < rules.min_n.max(5) {
        return Ok(ShapeVerdict::indeterminate(n));
    }
    let ks = ks_uniform(pvalues)?;
    let mut y = pvalues.to_vec();
    y.sort_by(f64::total_cmp);
    let x: Vec<f64> = (1..=n).map(|i| i as f64 / (n as f64 + 1.0)).collect();

    // knot at ranks 2..=n-2
    let (line, hinge) = fit_hinge(&x, &y, 1..=n - 3).expect("n >= 5 leaves a knot");

    // Residual sums below this are floating-point noise for values in [0, 1].
    let floor = n as f64 * (4.0 * f64::EPSILON).powi(2);
    let nf = n as f64;
    let bic_delta =
        nf * ((line.sse + floor) / (hinge.sse + floor)).ln() - 2.0 * nf.ln();

    let small = y.iter().filter(|&&p| p < rules.significance).count() as f64 / nf;
    let (lo, hi) = rules.null_slope_band;

    let verdict = if ks.pvalue >= rules.ks_alpha && (lo..=hi).contains(&line.slope) {
        Verdict::UniformNull
    } else if small >= rules.effect_fraction && line.slope < 1.0 {
        Verdict::SignificantEffect
    } else if bic_delta > rules.bic_threshold
        && hinge.right_slope > 0.0
        && hinge.left_slope < rules.slope_ratio * hinge.right_slope
    {
        Verdict::BilinearMixture
    } else {
        Verdict::Indeterminate
    };

    let knot_rank = hinge.knot + 1;
    Ok(ShapeVerdict {
        verdict,
        n,
        slope_single: line.slope,
        breakpoint: (verdict == Verdict::BilinearMixture).then_some(knot_rank),
        best_knot: Some(knot_rank),
        left_slope: hinge.left_slope,
        right_slope: hinge.right_slope,
        sse_single: line.sse,
        sse_two_segment: hinge.sse,
        bic_delta,
        ks_statistic: ks.statistic,
        ks_pvalue: ks.pvalue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_grid_is_uniform_null() {
        let n = 50;
        let grid: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        let v = classify_pvalues(&grid, &ShapeRules::default()).unwrap();
        assert_eq!(v.verdict, Verdict::UniformNull);
        assert!((v.slope_single - 1.0).abs() < 1e-12);
        assert_eq!(v.breakpoint, None);
    }

    #[test]
    fn small_n_is_indeterminate() {
        let v = classify_pvalues(&[0.1, 0.2, 0.3], &ShapeRules::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Indeterminate);
        assert_eq!(v.breakpoint, None);
    }

    #[test]
    fn hockey_stick_is_bilinear() {
        let mut p = vec![1e-6; 10];
        p.extend((1..=30).map(|i| i as f64 / 31.0));
        let v = classify_pvalues(&p, &ShapeRules::default()).unwrap();
        assert_eq!(v.verdict, Verdict::BilinearMixture);
        let bp = v.breakpoint.unwrap();
        assert!((9..=12).contains(&bp), "{bp}");
    }

    #[test]
    fn tiny_pvalues_are_significant() {
        let p: Vec<f64> = (1..=40).map(|i| i as f64 * 1e-4).collect();
        let v = classify_pvalues(&p, &ShapeRules::default()).unwrap();
        assert_eq!(v.verdict, Verdict::SignificantEffect);
    }

    proptest! {
        #[test]
        fn nested_fits_and_permutation_invariance(
            mut p in proptest::collection::vec(1e-9f64..1.0, 10..80),
            seed in any::<u64>(),
        ) {
            let rules = ShapeRules::default();
            let a = classify_pvalues(&p, &rules).unwrap();
            prop_assert!(a.sse_two_segment <= a.sse_single);
            prop_assert_eq!(a.breakpoint.is_some(), a.verdict == Verdict::BilinearMixture);
            // deterministic shuffle
            let mut s = seed;
            for i in (1..p.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                p.swap(i, (s >> 33) as usize % (i + 1));
            }
            let b = classify_pvalues(&p, &rules).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

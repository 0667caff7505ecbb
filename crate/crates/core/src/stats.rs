//! Normal tails, confidence-interval to p-value conversion, ranking, and
//! DerSimonian–Laird random-effects pooling.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::model::{Dataset, DerivedStats, StudyRecord};
use crate::{Error, Result};

/// Two-sided critical value used for 95% limits unless an exact quantile is requested.
pub const ROUNDED_CRITICAL_VALUE: f64 = 1.96;

/// Smallest positive `f64`; reported p-values never go below it.
pub const P_FLOOR: f64 = 5e-324;

/// Upper-tail probability `P(Z >= z)` of the standard normal.
pub fn normal_sf(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain(format!("normal_sf needs a finite argument, got {z}")));
    }
    Ok(0.5 * libm::erfc(z / SQRT_2))
}

/// Two-sided p-value `P(|Z| >= |z|)`, computed as `erfc(|z|/sqrt 2)` so the
/// factor of two never rounds.
pub fn two_sided_p(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain(format!("two_sided_p needs a finite argument, got {z}")));
    }
    Ok(libm::erfc(z.abs() / SQRT_2))
}

/// Upper-tail quantile: the `z` with `normal_sf(z) == tail`.
pub fn normal_isf(tail: f64) -> Result<f64> {
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::Domain(format!("tail probability {tail} outside (0, 1)")));
    }
    if tail > 0.5 {
        return Ok(-normal_isf(1.0 - tail)?);
    }
    // Bracket then Newton; sf is smooth and strictly decreasing.
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    let mut z = 1.0;
    for _ in 0..200 {
        let f = 0.5 * libm::erfc(z / SQRT_2) - tail;
        if f > 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut next = z + f / density;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - z).abs() <= 1e-15 * z.abs().max(1.0) {
            return Ok(next);
        }
        z = next;
    }
    Ok(z)
}

/// Scale on which a ratio estimate is compared with the null value 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// `z = (rr - 1) / se`, `se = (cl_high - cl_low) / (2 z*)`.
    #[default]
    Linear,
    /// `z = ln(rr) / se`, `se = (ln cl_high - ln cl_low) / (2 z*)`.
    Log,
}

/// How confidence limits are turned into a standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conversion {
    pub confidence_level: f64,
    pub critical_value: f64,
    pub scale: Scale,
}

impl Default for Conversion {
    fn default() -> Self {
        Conversion {
            confidence_level: 0.95,
            critical_value: ROUNDED_CRITICAL_VALUE,
            scale: Scale::Linear,
        }
    }
}

impl Conversion {
    /// Uses the exact two-sided normal quantile for `confidence_level`.
    pub fn exact(confidence_level: f64, scale: Scale) -> Result<Self> {
        check_level(confidence_level)?;
        Ok(Conversion {
            confidence_level,
            critical_value: normal_isf((1.0 - confidence_level) / 2.0)?,
            scale,
        })
    }

    pub fn with_critical_value(confidence_level: f64, critical_value: f64, scale: Scale) -> Result<Self> {
        check_level(confidence_level)?;
        if !(critical_value.is_finite() && critical_value > 0.0) {
            return Err(Error::Domain(format!("critical value {critical_value} must be positive")));
        }
        Ok(Conversion {
            confidence_level,
            critical_value,
            scale,
        })
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("confidence level {level} outside (0, 1)")))
    }
}

/// Standard error, z statistic and two-sided p-value for one record. The rank
/// is left unset.
pub fn derive_stats(rec: &StudyRecord, conv: &Conversion) -> Result<DerivedStats> {
    if let Some((field, rule)) = rec.check().into_iter().next() {
        return Err(Error::Domain(format!("{field}: {rule}")));
    }
    let (estimate, width) = match conv.scale {
        Scale::Linear => (rec.rr - 1.0, rec.cl_high - rec.cl_low),
        Scale::Log => (rec.rr.ln(), rec.cl_high.ln() - rec.cl_low.ln()),
    };
    let se = width / (2.0 * conv.critical_value);
    if !(se > 0.0) {
        return Err(Error::Domain("zero-width confidence interval".into()));
    }
    let z = estimate / se;
    let raw = two_sided_p(z)?;
    let p_floored = raw < P_FLOOR;
    Ok(DerivedStats {
        se,
        z,
        p: raw.max(P_FLOOR).min(1.0),
        rank: None,
        p_floored,
    })
}

/// Computes derived statistics for every record, replacing any previous ones.
pub fn derive_dataset(ds: &Dataset, conv: &Conversion) -> Result<Dataset> {
    let derived = ds
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            derive_stats(r, conv).map_err(|e| match e {
                Error::Domain(m) => Error::Domain(format!("row {i}: {m}")),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = ds.clone();
    out.confidence_level = conv.confidence_level;
    out.derived = Some(derived);
    Ok(out)
}

/// Assigns ranks 1..n in ascending p; ties go to the earlier row.
pub fn rank_pvalues(ds: &Dataset) -> Result<Dataset> {
    let derived = ds.derived()?;
    let mut order: Vec<usize> = (0..derived.len()).collect();
    order.sort_by(|&a, &b| derived[a].p.total_cmp(&derived[b].p).then(a.cmp(&b)));
    let mut ranked = derived.to_vec();
    for (pos, &i) in order.iter().enumerate() {
        ranked[i].rank = Some(pos + 1);
    }
    let mut out = ds.clone();
    out.derived = Some(ranked);
    Ok(out)
}

/// Convenience: derive then rank.
pub fn derive_and_rank(ds: &Dataset, conv: &Conversion) -> Result<Dataset> {
    rank_pvalues(&derive_dataset(ds, conv)?)
}

/// An effect estimate with its standard error, on whatever scale the caller chose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    pub estimate: f64,
    pub se: f64,
}

impl Effect {
    pub fn new(estimate: f64, se: f64) -> Self {
        Effect { estimate, se }
    }
}

/// Effects on the scale used for derivation: `(rr - 1, se)` or `(ln rr, se)`.
pub fn dataset_effects(ds: &Dataset, scale: Scale) -> Result<Vec<Effect>> {
    let derived = ds.derived()?;
    Ok(ds
        .records
        .iter()
        .zip(derived)
        .map(|(r, d)| {
            let estimate = match scale {
                Scale::Linear => r.rr - 1.0,
                Scale::Log => r.rr.ln(),
            };
            Effect::new(estimate, d.se)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolResult {
    pub k: usize,
    pub fixed_mean: f64,
    pub fixed_se: f64,
    pub q: f64,
    pub tau2: f64,
    pub random_mean: f64,
    pub random_se: f64,
    pub i2: f64,
    /// Normalized inverse-variance weights.
    pub weights_fixed: Vec<f64>,
    /// Normalized random-effects weights `1/(se² + tau²)`.
    pub weights_random: Vec<f64>,
}

fn check_effects(effects: &[Effect], min_k: usize) -> Result<()> {
    if effects.len() < min_k {
        return Err(Error::Domain(format!(
            "need at least {min_k} studies, got {}",
            effects.len()
        )));
    }
    for (i, e) in effects.iter().enumerate() {
        if !(e.se.is_finite() && e.se > 0.0) {
            return Err(Error::Domain(format!("study {i}: standard error {} must be positive", e.se)));
        }
        if !e.estimate.is_finite() {
            return Err(Error::Domain(format!("study {i}: estimate is not finite")));
        }
    }
    Ok(())
}

/// Cochran's Q and the DerSimonian–Laird moment estimate of tau².
fn dl_moments(effects: &[Effect]) -> (f64, f64, f64, f64) {
    let k = effects.len() as f64;
    let w: Vec<f64> = effects.iter().map(|e| 1.0 / (e.se * e.se)).collect();
    let sum_w: f64 = w.iter().sum();
    let sum_w2: f64 = w.iter().map(|x| x * x).sum();
    let fixed_mean = effects.iter().zip(&w).map(|(e, w)| w * e.estimate).sum::<f64>() / sum_w;
    let q: f64 = effects
        .iter()
        .zip(&w)
        .map(|(e, w)| w * (e.estimate - fixed_mean).powi(2))
        .sum();
    let tau2 = if q <= k - 1.0 {
        0.0
    } else {
        ((q - (k - 1.0)) / (sum_w - sum_w2 / sum_w)).max(0.0)
    };
    (fixed_mean, sum_w, q, tau2)
}

/// DerSimonian–Laird random-effects pooling. Needs at least two studies.
pub fn pool_dl(effects: &[Effect]) -> Result<PoolResult> {
    check_effects(effects, 2)?;
    let (_, _, _, tau2) = dl_moments(effects);
    pool_with_tau2(effects, tau2)
}

/// Pools with a caller-supplied between-study variance. `tau2 = 0` gives the
/// fixed-effect answer.
pub fn pool_with_tau2(effects: &[Effect], tau2: f64) -> Result<PoolResult> {
    check_effects(effects, 2)?;
    if !(tau2.is_finite() && tau2 >= 0.0) {
        return Err(Error::Domain(format!("tau2 {tau2} must be nonnegative")));
    }
    let k = effects.len();
    let (fixed_mean, sum_w, q, _) = dl_moments(effects);

    let w_random: Vec<f64> = effects.iter().map(|e| 1.0 / (e.se * e.se + tau2)).collect();
    let sum_wr: f64 = w_random.iter().sum();
    let random_mean = effects
        .iter()
        .zip(&w_random)
        .map(|(e, w)| w * e.estimate)
        .sum::<f64>()
        / sum_wr;

    let df = (k - 1) as f64;
    let i2 = if q > 0.0 { ((q - df) / q).max(0.0) } else { 0.0 };

    Ok(PoolResult {
        k,
        fixed_mean,
        fixed_se: sum_w.powf(-0.5),
        q,
        tau2,
        random_mean,
        random_se: sum_wr.powf(-0.5),
        i2,
        weights_fixed: effects.iter().map(|e| 1.0 / (e.se * e.se) / sum_w).collect(),
        weights_random: w_random.iter().map(|w| w / sum_wr).collect(),
    })
}

/// Leave-one-out influence: `|mu_all - mu_without_i| / se_all` on the
/// random-effects mean. Needs at least three studies.
pub fn loo_influence(effects: &[Effect]) -> Result<Vec<f64>> {
    check_effects(effects, 3)?;
    let all = pool_dl(effects)?;
    let mut rest = Vec::with_capacity(effects.len() - 1);
    (0..effects.len())
        .map(|i| {
            rest.clear();
            rest.extend(effects.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, e)| *e));
            let without = pool_dl(&rest)?;
            Ok((all.random_mean - without.random_mean).abs() / all.random_se)
        })
        .collect()
}

use serde::{Deserialize, Serialize};

use crate::model::Dataset;
use crate::stats::{dataset_effects, loo_influence, Scale};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagReason {
    ExtremeP,
    HighInfluence,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub row: usize,
    pub reason: FlagReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierRules {
    /// Flag `p < p_threshold`. Zero disables the rule.
    pub p_threshold: f64,
    /// Flag leave-one-out influence above this; infinity disables the rule.
    pub influence_threshold: f64,
    /// Effect scale used for the influence computation.
    pub scale: Scale,
}

impl Default for OutlierRules {
    fn default() -> Self {
        OutlierRules {
            p_threshold: 1e-3,
            influence_threshold: 0.5,
            scale: Scale::Linear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    /// Sorted by row; each row appears once with its highest-priority reason.
    pub flagged: Vec<Flag>,
    pub p_threshold: f64,
    /// `None` when the influence rule was disabled.
    pub influence_threshold: Option<f64>,
    /// Leave-one-out influence per row, when it was computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub influence: Option<Vec<f64>>,
}

impl OutlierReport {
    pub fn rows(&self) -> Vec<usize> {
        self.flagged.iter().map(|f| f.row).collect()
    }

    pub fn rows_with(&self, reason: FlagReason) -> Vec<usize> {
        self.flagged
            .iter()
            .filter(|f| f.reason == reason)
            .map(|f| f.row)
            .collect()
    }
}

/// Flags extreme p-values, influential studies, and manual picks. A row hit
/// by several rules keeps the first of extreme_p, high_influence, manual.
pub fn flag_outliers(ds: &Dataset, rules: &OutlierRules, manual: &[usize]) -> Result<OutlierReport> {
    if !(rules.p_threshold >= 0.0 && rules.p_threshold < 1.0) {
        return Err(Error::Domain(format!(
            "p_threshold {} outside [0, 1)",
            rules.p_threshold
        )));
    }
    if rules.influence_threshold.is_nan() || rules.influence_threshold < 0.0 {
        return Err(Error::Domain(format!(
            "influence_threshold {} must be nonnegative",
            rules.influence_threshold
        )));
    }
    let derived = ds.derived()?;
    if let Some(bad) = manual.iter().find(|&&i| i >= ds.len()) {
        return Err(Error::Domain(format!(
            "manual index {bad} out of range for {} records",
            ds.len()
        )));
    }

    let mut reason: Vec<Option<FlagReason>> = vec![None; ds.len()];
    for (i, d) in derived.iter().enumerate() {
        if d.p < rules.p_threshold {
            reason[i] = Some(FlagReason::ExtremeP);
        }
    }

    let influence = if rules.influence_threshold.is_finite() && ds.len() >= 3 {
        let inf = loo_influence(&dataset_effects(ds, rules.scale)?)?;
        for (i, &v) in inf.iter().enumerate() {
            if v > rules.influence_threshold && reason[i].is_none() {
                reason[i] = Some(FlagReason::HighInfluence);
            }
        }
        Some(inf)
    } else {
        None
    };

    for &i in manual {
        reason[i].get_or_insert(FlagReason::Manual);
    }

    Ok(OutlierReport {
        flagged: reason
            .into_iter()
            .enumerate()
            .filter_map(|(row, r)| r.map(|reason| Flag { row, reason }))
            .collect(),
        p_threshold: rules.p_threshold,
        influence_threshold: rules.influence_threshold.is_finite().then_some(rules.influence_threshold),
        influence,
    })
}

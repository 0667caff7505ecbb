//! Seeded simulation of published literatures: null and true-effect studies,
//! min-of-k p-hacking, and publication-bias censoring of non-significant
//! results.
//!
//! Every draw is addressed by `(seed, replicate, study)`: the ChaCha8 key comes
//! from `seed`, the stream id is the replicate index, and each study starts
//! at its own word offset. Replicates can run in any order or in parallel
//! and still produce identical output.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{classify_pvalues, ks_uniform, ShapeRules, ShapeVerdict, Verdict};
use crate::model::{Dataset, StudyRecord};
use crate::stats::{two_sided_p, ROUNDED_CRITICAL_VALUE};
use crate::{Error, Result};

pub const RNG_ALGORITHM: &str =
    "ChaCha8 (rand_chacha 0.3): key = seed_from_u64(seed), stream = replicate, word offset = study << 32";

/// p-values above this are candidates for censoring.
pub const SIGNIFICANCE: f64 = 0.05;

/// Suppressed negative studies per reported positive study in the Greenwald preset.
pub const GREENWALD_RATIO: f64 = 10.0;

const MAX_HACK_K: u32 = 1_000_000;
const STUDY_WORD_STRIDE: u128 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_studies: usize,
    pub effect_fraction: f64,
    pub noncentrality: f64,
    pub censor_rate: f64,
    pub hack_k: u32,
    pub seed: u64,
    pub replicates: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_studies: 50,
            effect_fraction: 0.0,
            noncentrality: 0.0,
            censor_rate: 0.0,
            hack_k: 1,
            seed: 0,
            replicates: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_studies == 0 {
            return bad("n_studies must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.effect_fraction) {
            return bad(format!("effect_fraction {} outside [0, 1]", self.effect_fraction));
        }
        if !(self.noncentrality.is_finite() && self.noncentrality >= 0.0) {
            return bad(format!("noncentrality {} must be finite and nonnegative", self.noncentrality));
        }
        if !(0.0..=1.0).contains(&self.censor_rate) {
            return bad(format!("censor_rate {} outside [0, 1]", self.censor_rate));
        }
        if !(1..=MAX_HACK_K).contains(&self.hack_k) {
            return bad(format!("hack_k {} outside [1, {MAX_HACK_K}]", self.hack_k));
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        Ok(())
    }
}

/// Censoring rate that gives `GREENWALD_RATIO` suppressed non-significant
/// studies per reported significant one, in expectation under the null with
/// min-of-`hack_k` hacking. Capped at 1.
pub fn greenwald_censor_rate(hack_k: u32) -> f64 {
    let p_sig = 1.0 - (1.0 - SIGNIFICANCE).powi(hack_k as i32);
    (GREENWALD_RATIO * p_sig / (1.0 - p_sig)).min(1.0)
}

/// One simulated study after hacking.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Draw {
    z: f64,
    p: f64,
    suppressed: bool,
}

fn study_rng(cfg: &SimConfig, replicate: u64, study: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(replicate);
    rng.set_word_pos(study as u128 * STUDY_WORD_STRIDE);
    rng
}

fn draw_study(cfg: &SimConfig, replicate: u64, study: usize) -> Draw {
    let mut rng = study_rng(cfg, replicate, study);
    let effect = rng.gen::<f64>() < cfg.effect_fraction;
    let shift = if effect { cfg.noncentrality } else { 0.0 };
    let mut best = Draw {
        z: 0.0,
        p: f64::INFINITY,
        suppressed: false,
    };
    for _ in 0..cfg.hack_k {
        let z = rng.sample::<f64, _>(StandardNormal) + shift;
        let p = two_sided_p(z).expect("finite normal draw");
        if p < best.p {
            best = Draw { z, p, suppressed: false };
        }
    }
    // Uniform always drawn so the stream layout does not depend on p.
    let u = rng.gen::<f64>();
    best.suppressed = best.p > SIGNIFICANCE && u < cfg.censor_rate;
    best
}

fn draws(cfg: &SimConfig, replicate: u64) -> Vec<Draw> {
    (0..cfg.n_studies).map(|s| draw_study(cfg, replicate, s)).collect()
}

/// Reported (uncensored) p-values of one replicate, in study order.
pub fn generate_literature(cfg: &SimConfig, replicate: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    Ok(draws(cfg, replicate)
        .into_iter()
        .filter(|d| !d.suppressed)
        .map(|d| d.p.max(crate::stats::P_FLOOR))
        .collect())
}

/// The same replicate as ratio estimates with a fixed standard error on the
/// linear scale: `rr = 1 - z * se`, limits `rr -/+ 1.96 se`. Effects point
/// below 1.
pub fn generate_rr_literature(cfg: &SimConfig, replicate: u64, se: f64) -> Result<Dataset> {
    cfg.validate()?;
    if !(se.is_finite() && se > 0.0) {
        return Err(Error::Config(format!("se {se} must be positive")));
    }
    let half = ROUNDED_CRITICAL_VALUE * se;
    let mut records = Vec::new();
    for (i, d) in draws(cfg, replicate).into_iter().enumerate() {
        if d.suppressed {
            continue;
        }
        let rr = 1.0 - d.z * se;
        let rec = StudyRecord {
            author: format!("sim{i}"),
            year: 2000,
            comment: Some(format!("replicate {replicate}")),
            ref_id: i as u32 + 1,
            rr,
            cl_low: rr - half,
            cl_high: rr + half,
        };
        if let Some((field, rule)) = rec.check().into_iter().next() {
            return Err(Error::Config(format!(
                "study {i}: {field}: {rule}; use a smaller se"
            )));
        }
        records.push(rec);
    }
    Ok(Dataset::new(format!("simulated seed {} replicate {replicate}", cfg.seed), records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub replicate: u64,
    pub pvalues: Vec<f64>,
    pub suppressed: usize,
    pub verdict: ShapeVerdict,
    /// KS p-value against uniform(0, 1); absent with fewer than 5 reported studies.
    pub ks_pvalue: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub uniform_null: usize,
    pub significant_effect: usize,
    pub bilinear_mixture: usize,
    pub indeterminate: usize,
}

impl VerdictCounts {
    pub fn get(&self, v: Verdict) -> usize {
        match v {
            Verdict::UniformNull => self.uniform_null,
            Verdict::SignificantEffect => self.significant_effect,
            Verdict::BilinearMixture => self.bilinear_mixture,
            Verdict::Indeterminate => self.indeterminate,
        }
    }

    fn bump(&mut self, v: Verdict) {
        match v {
            Verdict::UniformNull => self.uniform_null += 1,
            Verdict::SignificantEffect => self.significant_effect += 1,
            Verdict::BilinearMixture => self.bilinear_mixture += 1,
            Verdict::Indeterminate => self.indeterminate += 1,
        }
    }

    pub fn total(&self) -> usize {
        Verdict::ALL.iter().map(|&v| self.get(v)).sum()
    }

    /// The most frequent verdict; ties resolve in [`Verdict::ALL`] order.
    pub fn majority(&self) -> Verdict {
        let mut best = Verdict::ALL[0];
        for v in Verdict::ALL {
            if self.get(v) > self.get(best) {
                best = v;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimAggregate {
    pub replicates: usize,
    pub verdicts: VerdictCounts,
    pub majority: Verdict,
    pub mean_reported: f64,
    pub mean_suppressed_fraction: f64,
    /// Share of replicates (with a KS test) rejecting uniformity at 0.05.
    pub ks_rejection_rate: f64,
}

impl SimAggregate {
    pub fn fraction(&self, v: Verdict) -> f64 {
        self.verdicts.get(v) as f64 / self.replicates as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub rng: String,
    pub config: SimConfig,
    pub rules: ShapeRules,
    pub aggregate: SimAggregate,
    pub replicates: Vec<ReplicateOutcome>,
}

fn run_replicate(cfg: &SimConfig, rules: &ShapeRules, replicate: u64) -> Result<ReplicateOutcome> {
    let all = draws(cfg, replicate);
    let pvalues: Vec<f64> = all
        .iter()
        .filter(|d| !d.suppressed)
        .map(|d| d.p.max(crate::stats::P_FLOOR))
        .collect();
    let suppressed = all.len() - pvalues.len();
    let verdict = classify_pvalues(&pvalues, rules)?;
    let ks_pvalue = if pvalues.len() >= 5 {
        Some(ks_uniform(&pvalues)?.pvalue)
    } else {
        None
    };
    Ok(ReplicateOutcome {
        replicate,
        pvalues,
        suppressed,
        verdict,
        ks_pvalue,
    })
}

/// Generates and classifies every replicate, then aggregates.
pub fn run_experiment(cfg: &SimConfig, rules: &ShapeRules) -> Result<SimOutcome> {
    cfg.validate()?;
    let replicates = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| run_replicate(cfg, rules, r))
        .collect::<Result<Vec<_>>>()?;

    let mut verdicts = VerdictCounts::default();
    let mut reported = 0usize;
    let mut suppressed_fraction = 0.0;
    let (mut tested, mut rejected) = (0usize, 0usize);
    for r in &replicates {
        verdicts.bump(r.verdict.verdict);
        reported += r.pvalues.len();
        suppressed_fraction += r.suppressed as f64 / cfg.n_studies as f64;
        if let Some(p) = r.ks_pvalue {
            tested += 1;
            rejected += usize::from(p < SIGNIFICANCE);
        }
    }
    let count = replicates.len() as f64;
    Ok(SimOutcome {
        rng: RNG_ALGORITHM.to_string(),
        config: cfg.clone(),
        rules: *rules,
        aggregate: SimAggregate {
            replicates: replicates.len(),
            majority: verdicts.majority(),
            verdicts,
            mean_reported: reported as f64 / count,
            mean_suppressed_fraction: suppressed_fraction / count,
            ks_rejection_rate: if tested > 0 { rejected as f64 / tested as f64 } else { 0.0 },
        },
        replicates,
    })
}

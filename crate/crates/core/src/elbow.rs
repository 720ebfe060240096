//! Elbow of the accuracy curve.
//!
//! The curve is the best η for each community count `k`. Diminishing returns
//! alone make it concave: if η approached its ceiling like `1/k`, the rise
//! over `[k, 2k]` would be half the rise over `[k/2, k]`. An elbow is a point
//! where the curve flattens much faster than that. For each candidate `k`,
//!
//! ```text
//! before = η(k) − η(k/2)      after = η(2k) − η(k)
//! flattening = clamp(1 − (after / before) / FLATTENING_REFERENCE, 0, 1)
//! weight     = min(1, before / (SIGNIFICANT_RISE · range))
//! ```
//!
//! η between sampled `k` is read off the running maximum of the curve,
//! linearly interpolated in `ln k`. The score is the largest
//! `flattening · weight`; `k*` is where it occurs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meta_validation::SweepResult;

/// Ratio of the two windows around a candidate `k`.
pub const WINDOW_RATIO: f64 = 2.0;
/// `after / before` at or above this scores zero flattening.
pub const FLATTENING_REFERENCE: f64 = 0.25;
/// Rise into `k*`, as a fraction of the curve's range, that earns full weight.
pub const SIGNIFICANT_RISE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElbowThresholds {
    pub clear: f64,
    pub fuzzy: f64,
}

impl Default for ElbowThresholds {
    fn default() -> Self {
        Self { clear: 0.5, fuzzy: 0.15 }
    }
}

impl ElbowThresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = |t: f64| t.is_finite() && (0.0..=1.0).contains(&t);
        if !ok(self.clear) || !ok(self.fuzzy) || self.fuzzy > self.clear {
            return Err(Error::InvalidConfig(format!(
                "elbow thresholds must satisfy 0 <= fuzzy <= clear <= 1, got fuzzy = {}, clear = {}",
                self.fuzzy, self.clear
            )));
        }
        Ok(())
    }

    pub fn verdict(&self, score: f64) -> Verdict {
        if score >= self.clear {
            Verdict::ClearGrouping
        } else if score >= self.fuzzy {
            Verdict::FuzzyGrouping
        } else {
            Verdict::NoGrouping
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ClearGrouping,
    FuzzyGrouping,
    NoGrouping,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::ClearGrouping => "clear_grouping",
            Verdict::FuzzyGrouping => "fuzzy_grouping",
            Verdict::NoGrouping => "no_grouping",
        })
    }
}

/// `k_star` is `None` exactly when the verdict is [`Verdict::NoGrouping`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowReport {
    pub verdict: Verdict,
    pub k_star: Option<usize>,
    pub curvature_score: f64,
}

pub fn find_elbow(sweep: &SweepResult, thresholds: &ElbowThresholds) -> Result<ElbowReport> {
    elbow_of_curve(&sweep.accuracy_curve(), thresholds)
}

/// Scores a `(k, η)` curve. Points must have distinct `k`; order is free.
pub fn elbow_of_curve(curve: &[(usize, f64)], thresholds: &ElbowThresholds) -> Result<ElbowReport> {
    thresholds.validate()?;
    if curve.len() < 3 {
        return Err(Error::TooFewPoints(curve.len()));
    }
    let mut points = curve.to_vec();
    points.sort_by_key(|p| p.0);
    if points.windows(2).any(|w| w[0].0 == w[1].0) || points[0].0 == 0 {
        return Err(Error::InvalidConfig("accuracy curve needs distinct k >= 1".into()));
    }
    if points.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::InvalidConfig("accuracy curve contains a non-finite η".into()));
    }

    let ks: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let mut envelope = Vec::with_capacity(points.len());
    let mut running = f64::NEG_INFINITY;
    for p in &points {
        running = running.max(p.1);
        envelope.push(running);
    }
    let range = envelope[envelope.len() - 1] - envelope[0];
    let k_max = ks[ks.len() - 1];

    let mut best: Option<(usize, f64)> = None;
    if range > 0.0 {
        for (j, &k) in ks.iter().enumerate() {
            if k < 2.0 || k * WINDOW_RATIO > k_max {
                continue;
            }
            let here = envelope[j];
            let before = here - interpolate(&ks, &envelope, k / WINDOW_RATIO);
            let after = interpolate(&ks, &envelope, k * WINDOW_RATIO) - here;
            if before <= 0.0 {
                continue;
            }
            let flattening = (1.0 - after / before / FLATTENING_REFERENCE).clamp(0.0, 1.0);
            let weight = (before / (SIGNIFICANT_RISE * range)).min(1.0);
            let score = flattening * weight;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((points[j].0, score));
            }
        }
    }

    let (k, score) = best.unwrap_or((0, 0.0));
    let verdict = thresholds.verdict(score);
    Ok(ElbowReport {
        verdict,
        k_star: (verdict != Verdict::NoGrouping).then_some(k),
        curvature_score: score,
    })
}

/// Piecewise-linear in `ln k`, constant beyond the ends.
fn interpolate(ks: &[f64], values: &[f64], k: f64) -> f64 {
    if k <= ks[0] {
        return values[0];
    }
    let last = ks.len() - 1;
    if k >= ks[last] {
        return values[last];
    }
    let i = ks.partition_point(|&x| x < k);
    if ks[i] == k {
        return values[i];
    }
    let (a, b) = (ks[i - 1].ln(), ks[i].ln());
    let t = (k.ln() - a) / (b - a);
    values[i - 1] + t * (values[i] - values[i - 1])
}

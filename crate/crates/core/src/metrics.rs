//! FP/FN (detections) and FT/MT (confirmed tracks) against ground truth,
//! per-frame increments over a baseline run, and suite-level aggregation.

use std::collections::BTreeMap;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::assign_gated_cols;
use crate::scene::CameraModel;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("attacked run has {attacked} frames but baseline has {baseline}")]
    Alignment { attacked: usize, baseline: usize },
}

/// Optimal one-to-one BEV matching within `gate`; returns
/// (unmatched predictions, unmatched truths).
pub fn match_and_count(
    preds: &[Vector2<f64>],
    truth: &[Vector2<f64>],
    gate: f64,
) -> (usize, usize) {
    let a = match_pairs(preds, truth, gate);
    (a.0.len(), a.1.len())
}

/// Unmatched prediction and truth indices.
fn match_pairs(
    preds: &[Vector2<f64>],
    truth: &[Vector2<f64>],
    gate: f64,
) -> (Vec<usize>, Vec<usize>) {
    let cost: Vec<Vec<f64>> = preds
        .iter()
        .map(|p| truth.iter().map(|t| (p - t).norm()).collect())
        .collect();
    let a = assign_gated_cols(&cost, truth.len(), gate);
    (a.unmatched_rows, a.unmatched_cols)
}

/// Region in which outcomes are scored: the forward camera's horizontal
/// field of view out to `max_range`. Predictions and truths outside it can
/// still absorb each other in matching but are never counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRegion {
    pub half_fov: f64,
    pub max_range: f64,
    /// Truths with fewer clean LiDAR returns are not expected to be found.
    pub min_truth_points: usize,
    pub gate: f64,
}

impl EvalRegion {
    pub fn for_camera(cam: &CameraModel) -> Self {
        Self {
            half_fov: cam.horizontal_fov() / 2.0,
            max_range: 50.0,
            min_truth_points: 5,
            gate: 2.0,
        }
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        p.x > 0.0 && p.y.atan2(p.x).abs() <= self.half_fov && p.x.hypot(p.y) <= self.max_range
    }
}

/// A ground-truth object for scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalTruth {
    pub center: Vector3<f64>,
    /// Returns on the object in the unattacked sweep.
    pub clean_points: usize,
}

/// (false positives, false negatives) under the region rules: every
/// prediction is matched against every truth, unmatched predictions inside
/// the region count as false, unmatched truths that are inside the region
/// and visible in clean data count as missed.
pub fn count_in_region(
    preds: &[Vector3<f64>],
    truth: &[EvalTruth],
    region: &EvalRegion,
) -> (usize, usize) {
    let pb: Vec<Vector2<f64>> = preds.iter().map(|p| p.xy()).collect();
    let tb: Vec<Vector2<f64>> = truth.iter().map(|t| t.center.xy()).collect();
    let (up, ut) = match_pairs(&pb, &tb, region.gate);
    let false_pos = up.iter().filter(|&&i| region.contains(&preds[i])).count();
    let missed = ut
        .iter()
        .filter(|&&j| {
            region.contains(&truth[j].center) && truth[j].clean_points >= region.min_truth_points
        })
        .count();
    (false_pos, missed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub ft: usize,
    pub mt: usize,
    pub unsafe_count: usize,
    pub false_alarm: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IncrementReport {
    pub fp_inc: f64,
    pub fn_inc: f64,
    pub ft_inc: f64,
    pub mt_inc: f64,
    pub unsafe_scene: bool,
}

pub fn increment_over_baseline(
    attacked: &[FrameMetrics],
    baseline: &[FrameMetrics],
) -> Result<IncrementReport, MetricsError> {
    if attacked.len() != baseline.len() {
        return Err(MetricsError::Alignment {
            attacked: attacked.len(),
            baseline: baseline.len(),
        });
    }
    if attacked.is_empty() {
        return Ok(IncrementReport::default());
    }
    let n = attacked.len() as f64;
    let mean = |f: fn(&FrameMetrics) -> usize| {
        attacked
            .iter()
            .zip(baseline)
            .map(|(a, b)| f(a) as f64 - f(b) as f64)
            .sum::<f64>()
            / n
    };
    Ok(IncrementReport {
        fp_inc: mean(|m| m.fp),
        fn_inc: mean(|m| m.fn_),
        ft_inc: mean(|m| m.ft),
        mt_inc: mean(|m| m.mt),
        unsafe_scene: attacked
            .iter()
            .zip(baseline)
            .any(|(a, b)| a.unsafe_count != b.unsafe_count),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub av: String,
    pub attack: String,
    pub scenes: usize,
    pub fp_inc: f64,
    pub fn_inc: f64,
    pub ft_inc: f64,
    pub mt_inc: f64,
    pub unsafe_fraction: f64,
}

/// Mean increments over scenes for each (av, attack) cell, plus the share
/// of scenes that became unsafe. Rows come out sorted by (av, attack).
pub fn aggregate_table<'a, I>(reports: I) -> Vec<SummaryRow>
where
    I: IntoIterator<Item = (&'a str, &'a str, &'a IncrementReport)>,
{
    let mut cells: BTreeMap<(String, String), Vec<&IncrementReport>> = BTreeMap::new();
    for (av, attack, r) in reports {
        cells
            .entry((av.to_string(), attack.to_string()))
            .or_default()
            .push(r);
    }
    cells
        .into_iter()
        .map(|((av, attack), rs)| {
            let n = rs.len() as f64;
            let mean = |f: fn(&IncrementReport) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / n;
            SummaryRow {
                av,
                attack,
                scenes: rs.len(),
                fp_inc: mean(|r| r.fp_inc),
                fn_inc: mean(|r| r.fn_inc),
                ft_inc: mean(|r| r.ft_inc),
                mt_inc: mean(|r| r.mt_inc),
                unsafe_fraction: rs.iter().filter(|r| r.unsafe_scene).count() as f64 / n,
            }
        })
        .collect()
}

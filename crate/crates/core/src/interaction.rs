//! Interaction detection scoring: tracklet mIoU under the strict and loose
//! criteria, true positive matching, and average precision.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou2d, tube_iou3d, SecondIndex};
use crate::scalar::{mean, Scalar};
use crate::tracklet::{tracklet_score, HoiFrame, InteractionId, StHoiTracklet};

/// Threshold a tracklet mIoU must exceed to count as a true positive.
pub const TP_MIOU: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IouMode {
    #[serde(rename = "2d")]
    TwoD,
    #[serde(rename = "3d")]
    ThreeD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Upstream false positive frames count as zero overlap.
    Strict,
    /// Upstream false positive frames are discarded.
    Loose,
}

impl IouMode {
    pub const BOTH: [IouMode; 2] = [IouMode::TwoD, IouMode::ThreeD];

    /// Human overlap of two frames of the same second.
    pub fn human_iou<T: Scalar>(self, a: &HoiFrame<T>, b: &HoiFrame<T>) -> T {
        match self {
            IouMode::TwoD => iou2d(a.human_box(), b.human_box()),
            IouMode::ThreeD => tube_iou3d(&a.human, &b.human),
        }
    }
}

impl Criterion {
    pub const BOTH: [Criterion; 2] = [Criterion::Strict, Criterion::Loose];
}

/// Mean human IoU of a predicted tracklet against a ground truth tracklet.
///
/// Frames are the union of both tracklets' seconds. Ground truth seconds the
/// prediction does not cover contribute zero. Predicted frames that failed
/// tracking (`tracking_tp` false) contribute zero under [`Criterion::Strict`]
/// and are skipped under [`Criterion::Loose`]. Returns `None` when no frame
/// remains, which callers treat as a false positive.
pub fn tracklet_miou<T: Scalar>(
    pred: &StHoiTracklet<T>,
    gt: &StHoiTracklet<T>,
    mode: IouMode,
    criterion: Criterion,
    tracking_tp: impl Fn(SecondIndex) -> bool,
) -> Option<T> {
    let start = pred.first_second().min(gt.first_second()).0;
    let end = pred.last_second().max(gt.last_second()).0;
    let per_frame = (start..=end).map(SecondIndex).filter_map(|s| {
        match (pred.frame_at(s), gt.frame_at(s)) {
            (Some(p), g) => {
                if tracking_tp(s) {
                    Some(g.map_or(T::zero(), |g| mode.human_iou(p, g)))
                } else {
                    match criterion {
                        Criterion::Strict => Some(T::zero()),
                        Criterion::Loose => None,
                    }
                }
            }
            (None, Some(_)) => Some(T::zero()),
            (None, None) => None,
        }
    });
    mean(per_frame)
}

pub fn is_true_positive<T: Scalar>(miou: T) -> bool {
    miou > T::lit(TP_MIOU)
}

/// Outcome of matching one predicted tracklet within its video and class.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatch<T> {
    /// Index into the ground truth slice the prediction was paired with.
    pub matched_gt: Option<usize>,
    pub miou_loose: Option<T>,
    pub miou_strict: Option<T>,
    pub tp_loose: bool,
    pub tp_strict: bool,
}

impl<T> InteractionMatch<T> {
    pub fn is_tp(&self, criterion: Criterion) -> bool {
        match criterion {
            Criterion::Strict => self.tp_strict,
            Criterion::Loose => self.tp_loose,
        }
    }
}

/// Greedy matching of one class's predictions to ground truth in one video.
///
/// Predictions are visited by descending tracklet score (ties keep input
/// order). Each takes the unmatched ground truth tracklet with the highest
/// loose mIoU when that exceeds `tp_threshold`; the strict verdict reuses the
/// same pairing and additionally requires the strict mIoU to exceed the
/// threshold. Sharing the pairing keeps every strict verdict at or below its
/// loose counterpart. Results are returned in input order.
pub fn match_class<T: Scalar>(
    preds: &[StHoiTracklet<T>],
    gts: &[StHoiTracklet<T>],
    mode: IouMode,
    tp_threshold: T,
    tracking_tp: impl Fn(&str, SecondIndex) -> bool,
) -> Vec<InteractionMatch<T>> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    let scores: Vec<T> = preds.iter().map(tracklet_score).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));

    let mut gt_taken = vec![false; gts.len()];
    let mut out: Vec<Option<InteractionMatch<T>>> = vec![None; preds.len()];
    for pi in order {
        let pred = &preds[pi];
        let gate = |s: SecondIndex| tracking_tp(pred.track_id(), s);
        let mut best: Option<(usize, T)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if gt_taken[gi] {
                continue;
            }
            if let Some(m) = tracklet_miou(pred, gt, mode, Criterion::Loose, gate) {
                if best.is_none_or(|(_, b)| m > b) {
                    best = Some((gi, m));
                }
            }
        }
        let result = match best {
            Some((gi, loose)) if loose > tp_threshold => {
                gt_taken[gi] = true;
                let strict = tracklet_miou(pred, &gts[gi], mode, Criterion::Strict, gate);
                InteractionMatch {
                    matched_gt: Some(gi),
                    miou_loose: Some(loose),
                    miou_strict: strict,
                    tp_loose: true,
                    tp_strict: strict.is_some_and(|s| s > tp_threshold),
                }
            }
            other => InteractionMatch {
                matched_gt: None,
                miou_loose: other.map(|(_, m)| m),
                miou_strict: other
                    .and_then(|(gi, _)| tracklet_miou(pred, &gts[gi], mode, Criterion::Strict, gate)),
                tp_loose: false,
                tp_strict: false,
            },
        };
        out[pi] = Some(result);
    }
    out.into_iter().map(|m| m.expect("every prediction visited")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragePrecision<T> {
    pub value: T,
    /// Predictions existed for a class without ground truth.
    pub no_ground_truth: bool,
}

/// All-point interpolated average precision.
///
/// Detections are ranked by descending score (stable for ties); the area
/// under the monotone precision envelope is summed at every recall step.
pub fn average_precision<T: Scalar>(
    detections: &[(T, bool)],
    num_gt: usize,
) -> Result<AveragePrecision<T>> {
    if detections.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::NonFinite("detection score"));
    }
    if num_gt == 0 {
        return Ok(AveragePrecision { value: T::zero(), no_ground_truth: !detections.is_empty() });
    }
    let tp_total = detections.iter().filter(|(_, tp)| *tp).count();
    if tp_total > num_gt {
        return Err(Error::invalid(format!(
            "{tp_total} true positives exceed {num_gt} ground truth tracklets"
        )));
    }
    let mut ranked: Vec<&(T, bool)> = detections.iter().collect();
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite scores"));

    let mut precision = Vec::with_capacity(ranked.len());
    let mut tp = 0usize;
    for (k, (_, is_tp)) in ranked.iter().enumerate() {
        tp += *is_tp as usize;
        precision.push(T::count(tp) / T::count(k + 1));
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    // Each true positive adds 1 / num_gt recall; divide once at the end.
    let area: T = ranked
        .iter()
        .zip(&precision)
        .filter(|((_, is_tp), _)| *is_tp)
        .map(|(_, &p)| p)
        .sum();
    let value = area / T::count(num_gt);
    Ok(AveragePrecision { value, no_ground_truth: false })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAp<T> {
    pub class: InteractionId,
    pub num_gt: usize,
    pub ap: T,
}

/// Mean AP over classes with at least one ground truth tracklet.
pub fn mean_ap<T: Scalar>(classes: &[ClassAp<T>]) -> Result<T> {
    mean(classes.iter().filter(|c| c.num_gt > 0).map(|c| c.ap))
        .ok_or(Error::Empty("ground truth tracklets in every class"))
}

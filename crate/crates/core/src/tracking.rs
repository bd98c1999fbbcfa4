//! Per-second human tracking evaluation: CLEAR-MOT accuracy, identity F1,
//! and the frame verdicts that gate the downstream sub-tasks.
//!
//! Tracks are sampled once per second (the first frame of each second).
//! A predicted frame is a true positive only when its box matches a ground
//! truth box at IoU above the threshold *and* its track is the one the
//! video-level identity assignment paired with that ground truth track.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::assignment::assignment;
use crate::error::{Error, Result};
use crate::geometry::{iou2d, BBox, SecondIndex};
use crate::scalar::Scalar;

pub type TrackId = String;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiedBox<T: Scalar> {
    pub track_id: TrackId,
    pub bbox: BBox<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackingOutcome {
    TruePositive,
    FalsePositive,
    Miss,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameVerdict {
    pub second: SecondIndex,
    pub tracking: TrackingOutcome,
    /// Ground truth track matched by a true positive frame.
    pub matched_gt: Option<TrackId>,
}

impl FrameVerdict {
    pub fn is_true_positive(&self) -> bool {
        self.tracking == TrackingOutcome::TruePositive
    }
}

/// One-to-one matching of boxes within a single sampled second.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondMatch<T> {
    /// `(gt index, pred index, iou)` into the caller's slices.
    pub pairs: Vec<(usize, usize, T)>,
    pub unmatched_gt: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

fn check_unique<T: Scalar>(side: &str, boxes: &[IdentifiedBox<T>]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for b in boxes {
        if !seen.insert(b.track_id.as_str()) {
            return Err(Error::invalid(format!("duplicate {side} track id `{}`", b.track_id)));
        }
    }
    Ok(())
}

/// Matches ground truth and predicted boxes of one second.
///
/// Only pairs with IoU strictly above `iou_threshold` are eligible; the
/// matching maximises total IoU over eligible pairs. Ties go to the lowest
/// ground truth id, then the lowest predicted id.
pub fn match_second<T: Scalar>(
    gt: &[IdentifiedBox<T>],
    pred: &[IdentifiedBox<T>],
    iou_threshold: T,
) -> Result<SecondMatch<T>> {
    if !(iou_threshold > T::zero() && iou_threshold <= T::one()) {
        return Err(Error::invalid(format!("iou threshold {iou_threshold} outside (0, 1]")));
    }
    check_unique("ground truth", gt)?;
    check_unique("predicted", pred)?;

    let mut gt_order: Vec<usize> = (0..gt.len()).collect();
    gt_order.sort_by(|&a, &b| gt[a].track_id.cmp(&gt[b].track_id));
    let mut pred_order: Vec<usize> = (0..pred.len()).collect();
    pred_order.sort_by(|&a, &b| pred[a].track_id.cmp(&pred[b].track_id));

    let ious: Vec<Vec<T>> = gt_order
        .iter()
        .map(|&g| pred_order.iter().map(|&p| iou2d(&gt[g].bbox, &pred[p].bbox)).collect())
        .collect();
    let cost: Vec<Vec<T>> = ious
        .iter()
        .map(|row| row.iter().map(|&v| if v > iou_threshold { -v } else { T::zero() }).collect())
        .collect();

    let mut pairs = Vec::new();
    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; pred.len()];
    for (r, c) in assignment(&cost)?.pairs {
        let v = ious[r][c];
        if v > iou_threshold {
            let (g, p) = (gt_order[r], pred_order[c]);
            pairs.push((g, p, v));
            gt_used[g] = true;
            pred_used[p] = true;
        }
    }
    pairs.sort_by_key(|&(g, _, _)| g);
    Ok(SecondMatch {
        pairs,
        unmatched_gt: (0..gt.len()).filter(|&i| !gt_used[i]).collect(),
        unmatched_pred: (0..pred.len()).filter(|&i| !pred_used[i]).collect(),
    })
}

/// Human tracks of one video, one box per sampled second.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackSet<T: Scalar> {
    tracks: BTreeMap<TrackId, BTreeMap<SecondIndex, BBox<T>>>,
}

impl<T: Scalar> TrackSet<T> {
    pub fn new() -> Self {
        Self { tracks: BTreeMap::new() }
    }

    /// Adds a sampled box. A second already present for the track keeps its
    /// first box.
    pub fn insert(&mut self, track_id: impl Into<TrackId>, second: SecondIndex, bbox: BBox<T>) {
        self.tracks.entry(track_id.into()).or_default().entry(second).or_insert(bbox);
    }

    pub fn track_ids(&self) -> impl Iterator<Item = &TrackId> {
        self.tracks.keys()
    }

    pub fn track(&self, id: &str) -> Option<&BTreeMap<SecondIndex, BBox<T>>> {
        self.tracks.get(id)
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn box_count(&self) -> usize {
        self.tracks.values().map(BTreeMap::len).sum()
    }

    pub fn seconds(&self) -> BTreeSet<SecondIndex> {
        self.tracks.values().flat_map(|t| t.keys().copied()).collect()
    }

    /// Boxes present at `second`, ordered by track id.
    pub fn at(&self, second: SecondIndex) -> Vec<IdentifiedBox<T>> {
        self.tracks
            .iter()
            .filter_map(|(id, t)| {
                t.get(&second).map(|b| IdentifiedBox { track_id: id.clone(), bbox: *b })
            })
            .collect()
    }
}

/// Raw event counts of one video.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackingCounts {
    pub num_gt: usize,
    pub num_pred: usize,
    pub misses: usize,
    pub false_positives: usize,
    pub id_switches: usize,
    /// Identity true positives under the optimal identity assignment.
    pub idtp: usize,
}

impl TrackingCounts {
    /// `1 - (misses + false positives + id switches) / gt boxes`; `None`
    /// without ground truth.
    pub fn mota<T: Scalar>(&self) -> Option<T> {
        (self.num_gt > 0).then(|| {
            let errors = self.misses + self.false_positives + self.id_switches;
            T::one() - T::count(errors) / T::count(self.num_gt)
        })
    }

    /// `2 IDTP / (2 IDTP + IDFP + IDFN)`; `None` without ground truth.
    pub fn idf1<T: Scalar>(&self) -> Option<T> {
        // IDFP + IDFN = num_pred + num_gt - 2 IDTP
        (self.num_gt > 0)
            .then(|| T::count(2 * self.idtp) / T::count(self.num_gt + self.num_pred))
    }
}

/// Everything the step-wise cascade needs from tracking evaluation of a video.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoTracking {
    pub counts: TrackingCounts,
    /// Ground truth id -> predicted id from the identity assignment.
    pub identity: BTreeMap<TrackId, TrackId>,
    /// Verdict of every predicted frame, keyed by predicted track id.
    pub pred_verdicts: BTreeMap<TrackId, BTreeMap<SecondIndex, FrameVerdict>>,
    /// `TruePositive` or `Miss` for every ground truth frame.
    pub gt_verdicts: BTreeMap<TrackId, BTreeMap<SecondIndex, FrameVerdict>>,
}

impl VideoTracking {
    pub fn pred_verdict(&self, track_id: &str, second: SecondIndex) -> Option<&FrameVerdict> {
        self.pred_verdicts.get(track_id).and_then(|t| t.get(&second))
    }

    /// True when the predicted frame survived tracking evaluation.
    pub fn is_tracking_tp(&self, track_id: &str, second: SecondIndex) -> bool {
        self.pred_verdict(track_id, second).is_some_and(FrameVerdict::is_true_positive)
    }

    /// Flat verdict stream ordered by predicted track, then second.
    pub fn verdict_stream(&self) -> impl Iterator<Item = (&TrackId, &FrameVerdict)> {
        self.pred_verdicts.iter().flat_map(|(id, t)| t.values().map(move |v| (id, v)))
    }
}

/// Evaluates one video: per-second matching, CLEAR-MOT counts, identity
/// assignment, and frame verdicts.
pub fn evaluate_video<T: Scalar>(
    gt: &TrackSet<T>,
    pred: &TrackSet<T>,
    iou_threshold: T,
) -> Result<VideoTracking> {
    let mut counts = TrackingCounts {
        num_gt: gt.box_count(),
        num_pred: pred.box_count(),
        ..Default::default()
    };
    let gt_ids: Vec<&TrackId> = gt.track_ids().collect();
    let pred_ids: Vec<&TrackId> = pred.track_ids().collect();
    let gt_index: BTreeMap<&str, usize> =
        gt_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let pred_index: BTreeMap<&str, usize> =
        pred_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();

    let mut overlap = vec![vec![0usize; pred_ids.len()]; gt_ids.len()];
    let mut last_match: BTreeMap<TrackId, TrackId> = BTreeMap::new();
    let mut second_matches: Vec<(SecondIndex, Vec<(TrackId, TrackId)>)> = Vec::new();

    let seconds: BTreeSet<SecondIndex> = gt.seconds().union(&pred.seconds()).copied().collect();
    for &s in &seconds {
        let g = gt.at(s);
        let p = pred.at(s);
        let m = match_second(&g, &p, iou_threshold)?;
        counts.misses += m.unmatched_gt.len();
        counts.false_positives += m.unmatched_pred.len();
        let mut matched = Vec::with_capacity(m.pairs.len());
        for &(gi, pi, _) in &m.pairs {
            let (gid, pid) = (&g[gi].track_id, &p[pi].track_id);
            if let Some(prev) = last_match.get(gid) {
                if prev != pid {
                    counts.id_switches += 1;
                }
            }
            last_match.insert(gid.clone(), pid.clone());
            matched.push((gid.clone(), pid.clone()));
        }
        // Identity overlap counts every eligible pair, not only the matched ones.
        for gb in &g {
            for pb in &p {
                if iou2d(&gb.bbox, &pb.bbox) > iou_threshold {
                    overlap[gt_index[gb.track_id.as_str()]][pred_index[pb.track_id.as_str()]] += 1;
                }
            }
        }
        second_matches.push((s, matched));
    }

    let mut identity = BTreeMap::new();
    if !gt_ids.is_empty() && !pred_ids.is_empty() {
        let cost: Vec<Vec<f64>> =
            overlap.iter().map(|row| row.iter().map(|&w| -(w as f64)).collect()).collect();
        for (r, c) in assignment(&cost)?.pairs {
            if overlap[r][c] > 0 {
                counts.idtp += overlap[r][c];
                identity.insert(gt_ids[r].clone(), pred_ids[c].clone());
            }
        }
    }

    let verdicts_for = |set: &TrackSet<T>, ids: &[&TrackId], outcome| {
        ids.iter()
            .map(|id| {
                let frames = set.track(id).expect("listed id");
                let v = frames
                    .keys()
                    .map(|&s| (s, FrameVerdict { second: s, tracking: outcome, matched_gt: None }))
                    .collect();
                ((*id).clone(), v)
            })
            .collect::<BTreeMap<TrackId, BTreeMap<SecondIndex, FrameVerdict>>>()
    };
    let mut pred_verdicts = verdicts_for(pred, &pred_ids, TrackingOutcome::FalsePositive);
    let mut gt_verdicts = verdicts_for(gt, &gt_ids, TrackingOutcome::Miss);
    for (s, matched) in second_matches {
        for (gid, pid) in matched {
            if identity.get(&gid) == Some(&pid) {
                let tp = FrameVerdict {
                    second: s,
                    tracking: TrackingOutcome::TruePositive,
                    matched_gt: Some(gid.clone()),
                };
                gt_verdicts.get_mut(&gid).expect("gt track").insert(s, tp.clone());
                pred_verdicts.get_mut(&pid).expect("pred track").insert(s, tp);
            }
        }
    }

    Ok(VideoTracking { counts, identity, pred_verdicts, gt_verdicts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoTrackingScore {
    pub video: String,
    pub mota: Option<f64>,
    pub idf1: Option<f64>,
    pub counts: TrackingCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingScore {
    pub mota: f64,
    pub idf1: f64,
    pub per_video: Vec<VideoTrackingScore>,
    /// Videos without ground truth boxes, left out of the means.
    pub excluded_videos: Vec<String>,
}

/// Mean MOTA and IDF1 over videos that have ground truth.
///
/// Returns zeros when no video qualifies; `excluded_videos` then lists them all.
pub fn aggregate_tracking(per_video: Vec<(String, TrackingCounts)>) -> TrackingScore {
    let mut rows = Vec::with_capacity(per_video.len());
    let mut excluded = Vec::new();
    let (mut mota_sum, mut idf1_sum, mut n) = (0.0, 0.0, 0usize);
    for (video, counts) in per_video {
        let mota = counts.mota::<f64>();
        let idf1 = counts.idf1::<f64>();
        match (mota, idf1) {
            (Some(m), Some(i)) => {
                mota_sum += m;
                idf1_sum += i;
                n += 1;
            }
            _ => excluded.push(video.clone()),
        }
        rows.push(VideoTrackingScore { video, mota, idf1, counts });
    }
    let (mota, idf1) = if n > 0 { (mota_sum / n as f64, idf1_sum / n as f64) } else { (0.0, 0.0) };
    TrackingScore { mota, idf1, per_video: rows, excluded_videos: excluded }
}

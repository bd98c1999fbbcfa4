//! Step-wise evaluation of a whole benchmark: tracking, then interaction
//! detection on the surviving frames, then object discovery.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{average_precision, match_class, mean_ap, ClassAp, Criterion, IouMode};
use crate::io::{group_by_video, human_tracks, read_records, Role, TrackletRecord};
use crate::objects::{aggregate_discovery, discovery_miou, MultiGtRule, ObjectTrackletSet};
use crate::tracking::{aggregate_tracking, evaluate_video, TrackingCounts, VideoTracking};
use crate::tracklet::{split_by_alpha, tracklet_score, EvalConfig, InteractionId, StHoiTracklet};

/// The four (mode, criterion) cells in report order.
pub const CELLS: [(IouMode, Criterion); 4] = [
    (IouMode::TwoD, Criterion::Strict),
    (IouMode::ThreeD, Criterion::Strict),
    (IouMode::TwoD, Criterion::Loose),
    (IouMode::ThreeD, Criterion::Loose),
];

fn cell_index(mode: IouMode, criterion: Criterion) -> usize {
    CELLS.iter().position(|&c| c == (mode, criterion)).expect("all cells listed")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub eval: EvalConfig,
    pub multi_gt: MultiGtRule,
    /// Drop tracking-only ground truth persons before evaluation.
    pub interacting_only: bool,
    /// Worker threads; `None` uses the global pool.
    #[serde(skip)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingSummary {
    pub mota: f64,
    pub idf1: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionCells {
    pub map_2d_strict: f64,
    pub map_3d_strict: f64,
    pub map_2d_loose: f64,
    pub map_3d_loose: f64,
}

impl InteractionCells {
    fn from_array(v: [f64; 4]) -> Self {
        Self { map_2d_strict: v[0], map_3d_strict: v[1], map_2d_loose: v[2], map_3d_loose: v[3] }
    }

    pub fn get(&self, mode: IouMode, criterion: Criterion) -> f64 {
        [self.map_2d_strict, self.map_3d_strict, self.map_2d_loose, self.map_3d_loose][cell_index(mode, criterion)]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectCells {
    pub miou_2d_strict: f64,
    pub miou_3d_strict: f64,
    pub miou_2d_loose: f64,
    pub miou_3d_loose: f64,
}

impl ObjectCells {
    fn from_array(v: [f64; 4]) -> Self {
        Self { miou_2d_strict: v[0], miou_3d_strict: v[1], miou_2d_loose: v[2], miou_3d_loose: v[3] }
    }

    pub fn get(&self, mode: IouMode, criterion: Criterion) -> f64 {
        [self.miou_2d_strict, self.miou_3d_strict, self.miou_2d_loose, self.miou_3d_loose][cell_index(mode, criterion)]
    }
}

/// Counts or optional values per cell, in [`CELLS`] order.
pub type CellArray<T> = [T; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoReport {
    pub video: String,
    pub mota: Option<f64>,
    pub idf1: Option<f64>,
    pub tracking: TrackingCounts,
    pub gt_tracklets: usize,
    /// Predicted ST-HOI tracklets after score masking.
    pub pred_tracklets: usize,
    pub interaction_tp: CellArray<usize>,
    /// Mean object mIoU of this video's included tracklets.
    pub object_miou: CellArray<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: InteractionId,
    pub num_gt: usize,
    pub num_pred: usize,
    pub ap: InteractionCells,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportFlags {
    /// Videos without ground truth boxes, left out of the tracking means.
    pub excluded_videos: Vec<String>,
    /// Classes with predictions but no ground truth; not part of the mAP.
    pub classes_without_ground_truth: Vec<InteractionId>,
    /// No class has ground truth, so every mAP cell is reported as 0.
    pub no_interaction_ground_truth: bool,
    /// Tracklets entering each object mIoU cell.
    pub object_tracklets: CellArray<usize>,
    /// Tracklets discarded entirely under the loose criterion.
    pub object_tracklets_excluded: CellArray<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: PipelineConfig,
    pub tracking: TrackingSummary,
    pub interaction: InteractionCells,
    pub objects: ObjectCells,
    pub per_video: Vec<VideoReport>,
    pub per_class: Vec<ClassReport>,
    pub flags: ReportFlags,
}

#[derive(Default)]
struct ClassPartial {
    num_gt: usize,
    num_pred: usize,
    detections: CellArray<Vec<(f64, bool)>>,
}

struct VideoPartial {
    video: String,
    counts: TrackingCounts,
    gt_tracklets: usize,
    pred_tracklets: usize,
    classes: BTreeMap<InteractionId, ClassPartial>,
    object_mious: CellArray<Vec<f64>>,
    object_excluded: CellArray<usize>,
}

fn by_class(tracklets: Vec<StHoiTracklet<f64>>) -> BTreeMap<InteractionId, Vec<StHoiTracklet<f64>>> {
    let mut map: BTreeMap<InteractionId, Vec<StHoiTracklet<f64>>> = BTreeMap::new();
    for t in tracklets {
        map.entry(t.interaction()).or_default().push(t);
    }
    map
}

fn evaluate_one(
    video: &str,
    gt: &[&TrackletRecord],
    pred: &[&TrackletRecord],
    cfg: &PipelineConfig,
) -> Result<VideoPartial> {
    let gt_humans = human_tracks(gt.iter().copied())?;
    let pred_humans = human_tracks(pred.iter().copied())?;
    let vt: VideoTracking = evaluate_video(&gt_humans, &pred_humans, cfg.eval.tracking_iou)?;

    let mut gt_tracklets = Vec::new();
    for r in gt {
        gt_tracklets.extend(r.tracklets()?);
    }
    let mut pred_tracklets = Vec::new();
    for r in pred {
        for t in r.tracklets()? {
            pred_tracklets.extend(split_by_alpha(&t, cfg.eval.alpha));
        }
    }
    let (n_gt, n_pred) = (gt_tracklets.len(), pred_tracklets.len());
    let gts = by_class(gt_tracklets);
    let preds = by_class(pred_tracklets);

    let mut classes: BTreeMap<InteractionId, ClassPartial> = BTreeMap::new();
    let mut object_mious: CellArray<Vec<f64>> = Default::default();
    let mut object_excluded: CellArray<usize> = [0; 4];
    let empty = Vec::new();
    for class in gts.keys().chain(preds.keys()).copied().collect::<std::collections::BTreeSet<_>>() {
        let g = gts.get(&class).unwrap_or(&empty);
        let p = preds.get(&class).unwrap_or(&empty);
        let entry = classes.entry(class).or_default();
        entry.num_gt = g.len();
        entry.num_pred = p.len();
        for mode in IouMode::BOTH {
            let matches = match_class(p, g, mode, cfg.eval.tp_miou, |tid, s| vt.is_tracking_tp(tid, s));
            for criterion in Criterion::BOTH {
                let cell = cell_index(mode, criterion);
                for (pt, m) in p.iter().zip(&matches) {
                    let tp = m.is_tp(criterion);
                    entry.detections[cell].push((tracklet_score(pt), tp));
                    let miou = match m.matched_gt {
                        Some(gi) if tp => {
                            let gt_t = &g[gi];
                            let set = ObjectTrackletSet::from_tracklet(gt_t)?;
                            discovery_miou(pt, &set, mode, criterion, cfg.multi_gt, |s| {
                                vt.is_tracking_tp(pt.track_id(), s) && gt_t.frame_at(s).is_some()
                            })
                        }
                        _ => match criterion {
                            Criterion::Strict => Some(0.0),
                            Criterion::Loose => None,
                        },
                    };
                    match miou {
                        Some(v) => object_mious[cell].push(v),
                        None => object_excluded[cell] += 1,
                    }
                }
            }
        }
    }
    Ok(VideoPartial {
        video: video.to_string(),
        counts: vt.counts,
        gt_tracklets: n_gt,
        pred_tracklets: n_pred,
        classes,
        object_mious,
        object_excluded,
    })
}

/// Runs the full step-wise evaluation on parsed records.
pub fn eval_all(gt: &[TrackletRecord], pred: &[TrackletRecord], cfg: &PipelineConfig) -> Result<EvalReport> {
    cfg.eval.validate()?;
    let gt: Vec<TrackletRecord> = if cfg.interacting_only {
        gt.iter().filter(|r| r.interaction > 0).cloned().collect()
    } else {
        gt.to_vec()
    };
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let gt_videos = group_by_video(&gt);
    let mut pred_videos = group_by_video(pred);
    if let Some(unknown) = pred_videos.keys().find(|v| !gt_videos.contains_key(*v)) {
        return Err(Error::IdMismatch(unknown.to_string()));
    }
    let jobs: Vec<(&str, Vec<&TrackletRecord>, Vec<&TrackletRecord>)> = gt_videos
        .into_iter()
        .map(|(v, g)| (v, g, pred_videos.remove(v).unwrap_or_default()))
        .collect();

    let run = || -> Result<Vec<VideoPartial>> {
        jobs.par_iter().map(|(v, g, p)| evaluate_one(v, g, p, cfg)).collect()
    };
    let partials = match cfg.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("worker pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    Ok(merge(partials, cfg))
}

fn merge(partials: Vec<VideoPartial>, cfg: &PipelineConfig) -> EvalReport {
    let tracking = aggregate_tracking(partials.iter().map(|p| (p.video.clone(), p.counts)).collect());

    let mut pooled: BTreeMap<InteractionId, ClassPartial> = BTreeMap::new();
    let mut mious: CellArray<Vec<f64>> = Default::default();
    let mut excluded = [0usize; 4];
    let mut per_video = Vec::with_capacity(partials.len());
    for (p, row) in partials.into_iter().zip(&tracking.per_video) {
        let mut interaction_tp = [0usize; 4];
        for (class, c) in p.classes {
            let e = pooled.entry(class).or_default();
            e.num_gt += c.num_gt;
            e.num_pred += c.num_pred;
            for cell in 0..4 {
                interaction_tp[cell] += c.detections[cell].iter().filter(|d| d.1).count();
                e.detections[cell].extend(c.detections[cell].iter().copied());
            }
        }
        let mut object_miou = [None; 4];
        for cell in 0..4 {
            object_miou[cell] = aggregate_discovery(&p.object_mious[cell]).ok();
            mious[cell].extend(p.object_mious[cell].iter().copied());
            excluded[cell] += p.object_excluded[cell];
        }
        per_video.push(VideoReport {
            video: p.video,
            mota: row.mota,
            idf1: row.idf1,
            tracking: p.counts,
            gt_tracklets: p.gt_tracklets,
            pred_tracklets: p.pred_tracklets,
            interaction_tp,
            object_miou,
        });
    }

    let mut per_class = Vec::with_capacity(pooled.len());
    let mut class_aps: CellArray<Vec<ClassAp<f64>>> = Default::default();
    let mut classes_without_ground_truth = Vec::new();
    for (class, c) in pooled {
        let mut ap = [0.0; 4];
        for cell in 0..4 {
            let v = average_precision(&c.detections[cell], c.num_gt)
                .expect("finite scores and one ground truth per true positive");
            ap[cell] = v.value;
            class_aps[cell].push(ClassAp { class, num_gt: c.num_gt, ap: v.value });
        }
        if c.num_gt == 0 {
            classes_without_ground_truth.push(class);
        }
        per_class.push(ClassReport { class, num_gt: c.num_gt, num_pred: c.num_pred, ap: InteractionCells::from_array(ap) });
    }
    let maps: Vec<Option<f64>> = class_aps.iter().map(|aps| mean_ap(aps).ok()).collect();
    let no_interaction_ground_truth = maps.iter().any(Option::is_none);
    let interaction = InteractionCells::from_array([0, 1, 2, 3].map(|i| maps[i].unwrap_or(0.0)));
    let objects = ObjectCells::from_array([0, 1, 2, 3].map(|i| aggregate_discovery(&mious[i]).unwrap_or(0.0)));

    EvalReport {
        config: cfg.clone(),
        tracking: TrackingSummary { mota: tracking.mota, idf1: tracking.idf1 },
        interaction,
        objects,
        per_video,
        per_class,
        flags: ReportFlags {
            excluded_videos: tracking.excluded_videos,
            classes_without_ground_truth,
            no_interaction_ground_truth,
            object_tracklets: [0, 1, 2, 3].map(|i| mious[i].len()),
            object_tracklets_excluded: excluded,
        },
    }
}

/// Reads both JSON Lines files and evaluates them.
pub fn eval_files(gt: &Path, pred: &Path, cfg: &PipelineConfig) -> Result<EvalReport> {
    let open = |p: &Path| std::fs::File::open(p).map(std::io::BufReader::new);
    let gt = read_records(open(gt)?, Role::GroundTruth)?;
    let pred = read_records(open(pred)?, Role::Prediction)?;
    eval_all(&gt, &pred, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::FrameRecord;

    fn rec(video: &str, track: &str, class: u32, xs: &[(u32, f64)], score: f64) -> TrackletRecord {
        TrackletRecord {
            video: video.into(),
            track_id: track.into(),
            interaction: class,
            frames: xs
                .iter()
                .map(|&(s, x)| FrameRecord {
                    second: s,
                    human: [x, 0.0, 10.0, 20.0],
                    human_tube: None,
                    score: Some(score),
                    objects: vec![[x + 2.0, 2.0, 4.0, 4.0]],
                    object_tubes: None,
                })
                .collect(),
        }
    }

    fn span(n: u32, x: f64) -> Vec<(u32, f64)> {
        (0..n).map(|s| (s, x)).collect()
    }

    #[test]
    fn oracle_prediction_is_perfect() {
        let gt = vec![rec("a", "1", 4, &span(10, 0.0), 1.0), rec("b", "1", 9, &span(5, 50.0), 1.0)];
        let r = eval_all(&gt, &gt, &PipelineConfig::default()).unwrap();
        assert_eq!((r.tracking.mota, r.tracking.idf1), (1.0, 1.0));
        assert_eq!(r.interaction, InteractionCells::from_array([1.0; 4]));
        assert_eq!(r.objects, ObjectCells::from_array([1.0; 4]));
    }

    #[test]
    fn empty_prediction_scores_zero() {
        let gt = vec![rec("a", "1", 4, &span(10, 0.0), 1.0)];
        let r = eval_all(&gt, &[], &PipelineConfig::default()).unwrap();
        assert_eq!((r.tracking.mota, r.tracking.idf1), (0.0, 0.0));
        assert_eq!(r.interaction, InteractionCells::default());
        assert_eq!(r.objects, ObjectCells::default());
    }

    #[test]
    fn input_errors() {
        let gt = vec![rec("a", "1", 4, &span(3, 0.0), 1.0)];
        let stray = vec![rec("zz", "1", 4, &span(3, 0.0), 1.0)];
        assert!(matches!(eval_all(&gt, &stray, &PipelineConfig::default()), Err(Error::IdMismatch(v)) if v == "zz"));
        assert!(matches!(eval_all(&[], &gt, &PipelineConfig::default()), Err(Error::EmptyGroundTruth)));
        let only_tracking = vec![rec("a", "1", 0, &span(3, 0.0), 1.0)];
        let cfg = PipelineConfig { interacting_only: true, ..Default::default() };
        assert!(matches!(eval_all(&only_tracking, &[], &cfg), Err(Error::EmptyGroundTruth)));
    }

    #[test]
    fn missing_seconds_and_masking() {
        let gt = vec![rec("a", "1", 4, &span(10, 0.0), 1.0)];
        let pred = vec![rec("a", "1", 4, &span(9, 0.0), 0.9)];
        let r = eval_all(&gt, &pred, &PipelineConfig::default()).unwrap();
        assert!((r.tracking.mota - 0.9).abs() < 1e-15);
        assert_eq!(r.interaction.map_2d_strict, 1.0);
        let masked = PipelineConfig { eval: EvalConfig { alpha: 0.95, ..Default::default() }, ..Default::default() };
        let r = eval_all(&gt, &pred, &masked).unwrap();
        assert!((r.tracking.mota - 0.9).abs() < 1e-15);
        assert_eq!(r.per_video[0].pred_tracklets, 0);
        assert_eq!(r.interaction.map_2d_loose, 0.0);
    }

    #[test]
    fn tracking_fp_frames_split_criteria() {
        // Predicted person drifts off the ground truth for 4 of 10 seconds.
        let gt = vec![rec("a", "1", 4, &span(10, 0.0), 1.0)];
        let xs: Vec<(u32, f64)> = (0..10).map(|s| (s, if s < 6 { 0.0 } else { 9.0 })).collect();
        let pred = vec![rec("a", "p", 4, &xs, 0.8)];
        let r = eval_all(&gt, &pred, &PipelineConfig::default()).unwrap();
        assert_eq!(r.interaction.map_2d_loose, 1.0);
        assert_eq!(r.interaction.map_2d_strict, 1.0);
        assert!((r.objects.miou_2d_loose - 1.0).abs() < 1e-15);
        assert!((r.objects.miou_2d_strict - 0.6).abs() < 1e-15);
    }

    #[test]
    fn serial_equals_parallel() {
        let gt: Vec<_> = (0..6).map(|v| rec(&format!("v{v}"), "1", v + 1, &span(8, 0.0), 1.0)).collect();
        let pred: Vec<_> = (0..6).map(|v| rec(&format!("v{v}"), "1", v + 1, &span(6, 1.0), 0.7)).collect();
        let serial = eval_all(&gt, &pred, &PipelineConfig { jobs: Some(1), ..Default::default() }).unwrap();
        let parallel = eval_all(&gt, &pred, &PipelineConfig { jobs: Some(4), ..Default::default() }).unwrap();
        assert_eq!(serde_json::to_string(&serial).unwrap(), serde_json::to_string(&parallel).unwrap());
    }

    #[test]
    fn report_round_trips() {
        let gt = vec![rec("a", "1", 4, &span(10, 0.0), 1.0), rec("a", "2", 0, &span(3, 60.0), 1.0)];
        let pred = vec![rec("a", "1", 4, &span(7, 0.5), 0.3), rec("a", "9", 7, &span(2, 300.0), 0.6)];
        let r = eval_all(&gt, &pred, &PipelineConfig::default()).unwrap();
        let back: EvalReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.flags.classes_without_ground_truth, vec![InteractionId::new(7).unwrap()]);
    }
}

//! Synthetic benchmarks with planted errors and their expected scores.
//!
//! Every video holds `n_tracks` people walking side by side, one interaction
//! class each. The prediction copies the ground truth, then
//! - drops the last `misses` seconds of track 0,
//! - adds `fp_tracks` far-away people labelled with track 0's class.
//!
//! True tracklets score in (0.6, 1], false ones 0.5, so ranking never mixes
//! them and every mAP cell stays at 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{FrameRecord, TrackletRecord};
use crate::pipeline::{InteractionCells, ObjectCells, TrackingSummary};
use crate::tracklet::NUM_INTERACTIONS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub n_videos: usize,
    pub n_seconds: u32,
    pub n_tracks: usize,
    pub misses: u32,
    pub fp_tracks: usize,
    /// Frames per tube; 1 writes plain keyframe boxes.
    pub frames_per_second: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { seed: 0, n_videos: 4, n_seconds: 20, n_tracks: 2, misses: 0, fp_tracks: 0, frames_per_second: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedMetrics {
    pub tracking: TrackingSummary,
    pub interaction: InteractionCells,
    pub objects: ObjectCells,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub gt: Vec<TrackletRecord>,
    pub pred: Vec<TrackletRecord>,
    pub expected: ExpectedMetrics,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_videos == 0 || self.n_seconds == 0 || self.n_tracks == 0 || self.frames_per_second == 0 {
            return Err(Error::invalid("synthetic sizes must be positive"));
        }
        // Track 0 must still match its ground truth above the 0.2 mIoU bar.
        if 5 * self.misses >= 4 * self.n_seconds {
            return Err(Error::invalid("misses must stay below 80% of the seconds"));
        }
        Ok(())
    }

    /// Closed-form scores for the planted pattern.
    pub fn expected(&self) -> ExpectedMetrics {
        let nt = (self.n_tracks as f64) * f64::from(self.n_seconds);
        let m = f64::from(self.misses);
        let ft = (self.fp_tracks as f64) * f64::from(self.n_seconds);
        let strict = self.n_tracks as f64 / (self.n_tracks + self.fp_tracks) as f64;
        ExpectedMetrics {
            tracking: TrackingSummary { mota: 1.0 - (m + ft) / nt, idf1: 2.0 * (nt - m) / (2.0 * nt - m + ft) },
            interaction: InteractionCells { map_2d_strict: 1.0, map_3d_strict: 1.0, map_2d_loose: 1.0, map_3d_loose: 1.0 },
            objects: ObjectCells { miou_2d_strict: strict, miou_3d_strict: strict, miou_2d_loose: 1.0, miou_3d_loose: 1.0 },
        }
    }
}

fn tube(b: [f64; 4], fps: usize) -> Option<Vec<[f64; 4]>> {
    (fps > 1).then(|| (0..fps).map(|k| [b[0] + k as f64 * 0.25, b[1], b[2], b[3]]).collect())
}

fn frame(second: u32, human: [f64; 4], score: Option<f64>, fps: usize) -> FrameRecord {
    let object = [human[0] + 30.0, human[1] + 20.0, 20.0, 20.0];
    FrameRecord {
        second,
        human,
        human_tube: tube(human, fps),
        score,
        objects: vec![object],
        object_tubes: tube(object, fps).map(|t| vec![t]),
    }
}

fn person(video: &str, id: String, class: u32, seconds: u32, origin: (f64, f64), score: Option<f64>, fps: usize) -> TrackletRecord {
    let frames = (0..seconds)
        .map(|s| frame(s, [origin.0 + 0.5 * f64::from(s), origin.1, 40.0, 80.0], score, fps))
        .collect();
    TrackletRecord { video: video.to_string(), track_id: id, interaction: class, frames }
}

/// Generates the scenario; the same spec always gives the same records.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let fps = spec.frames_per_second;
    let mut gt = Vec::new();
    let mut pred = Vec::new();
    for v in 0..spec.n_videos {
        let video = format!("video_{v:05}");
        let class_of = |k: usize| ((v * spec.n_tracks + k) % NUM_INTERACTIONS) as u32 + 1;
        for k in 0..spec.n_tracks {
            let origin = (100.0 * k as f64, 50.0);
            gt.push(person(&video, k.to_string(), class_of(k), spec.n_seconds, origin, None, fps));
            let kept = if k == 0 { spec.n_seconds - spec.misses } else { spec.n_seconds };
            let score = 0.6 + 0.4 * (1.0 - rng.gen::<f64>());
            pred.push(person(&video, format!("p{k}"), class_of(k), kept, origin, Some(score), fps));
        }
        for j in 0..spec.fp_tracks {
            let origin = (0.0, 10_000.0 + 100.0 * j as f64);
            pred.push(person(&video, format!("fp{j}"), class_of(0), spec.n_seconds, origin, Some(0.5), fps));
        }
    }
    Ok(Synthetic { gt, pred, expected: spec.expected() })
}

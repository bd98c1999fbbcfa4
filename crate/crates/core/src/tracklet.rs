//! Score masking and the division of human tracklets into ST-HOI tracklets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BBox, SecondIndex, Tube};
use crate::scalar::{mean, Scalar};
use crate::tracking::TrackId;

/// Number of interaction classes scored per second.
pub const NUM_INTERACTIONS: usize = 51;

/// Interaction class, numbered `1..=51`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct InteractionId(u8);

impl InteractionId {
    pub fn new(id: u32) -> Result<Self> {
        if (1..=NUM_INTERACTIONS as u32).contains(&id) {
            Ok(Self(id as u8))
        } else {
            Err(Error::invalid(format!("interaction id {id} outside 1..={NUM_INTERACTIONS}")))
        }
    }

    pub fn get(self) -> u32 {
        self.0 as u32
    }

    /// Zero-based position in a per-class score vector.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn all() -> impl Iterator<Item = InteractionId> {
        (1..=NUM_INTERACTIONS as u8).map(InteractionId)
    }
}

impl TryFrom<u32> for InteractionId {
    type Error = Error;
    fn try_from(v: u32) -> Result<Self> {
        Self::new(v)
    }
}

impl From<InteractionId> for u32 {
    fn from(v: InteractionId) -> u32 {
        v.get()
    }
}

impl fmt::Display for InteractionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One sampled second of a tracked human with its per-class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSecond<T: Scalar> {
    pub second: SecondIndex,
    pub bbox: BBox<T>,
    pub scores: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredHumanTracklet<T: Scalar> {
    track_id: TrackId,
    seconds: Vec<ScoredSecond<T>>,
}

impl<T: Scalar> ScoredHumanTracklet<T> {
    pub fn new(track_id: impl Into<TrackId>, seconds: Vec<ScoredSecond<T>>) -> Result<Self> {
        for w in seconds.windows(2) {
            if w[0].second >= w[1].second {
                return Err(Error::invalid("tracklet seconds must be strictly increasing"));
            }
        }
        for s in &seconds {
            if s.scores.len() != NUM_INTERACTIONS {
                return Err(Error::invalid(format!(
                    "expected {NUM_INTERACTIONS} scores, found {}",
                    s.scores.len()
                )));
            }
            if s.scores.iter().any(|&p| !(p >= T::zero() && p <= T::one())) {
                return Err(Error::invalid("interaction scores must lie in [0, 1]"));
            }
        }
        Ok(Self { track_id: track_id.into(), seconds })
    }

    pub fn track_id(&self) -> &str {
        &self.track_id
    }

    pub fn seconds(&self) -> &[ScoredSecond<T>] {
        &self.seconds
    }
}

/// One second of an ST-HOI tracklet.
///
/// Tubes hold every frame of the one-second window; their first box is the
/// sampled box used by 2-D metrics. Ground truth frames carry one tube per
/// ground truth object tracklet, predictions at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct HoiFrame<T: Scalar> {
    pub second: SecondIndex,
    pub human: Tube<T>,
    pub score: T,
    pub objects: Vec<Tube<T>>,
}

impl<T: Scalar> HoiFrame<T> {
    pub fn new(second: SecondIndex, human: BBox<T>, score: T) -> Self {
        Self { second, human: Tube::single(human), score, objects: Vec::new() }
    }

    pub fn with_object(mut self, object: BBox<T>) -> Self {
        self.objects.push(Tube::single(object));
        self
    }

    pub fn human_box(&self) -> &BBox<T> {
        self.human.first()
    }

    pub fn object_box(&self, k: usize) -> Option<&BBox<T>> {
        self.objects.get(k).map(Tube::first)
    }
}

/// One actor performing one interaction over contiguous seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct StHoiTracklet<T: Scalar> {
    track_id: TrackId,
    interaction: InteractionId,
    frames: Vec<HoiFrame<T>>,
}

impl<T: Scalar> StHoiTracklet<T> {
    pub fn new(
        track_id: impl Into<TrackId>,
        interaction: InteractionId,
        frames: Vec<HoiFrame<T>>,
    ) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Empty("ST-HOI tracklet"));
        }
        if frames.windows(2).any(|w| w[1].second != w[0].second.next()) {
            return Err(Error::invalid("ST-HOI tracklet seconds must be contiguous"));
        }
        Ok(Self { track_id: track_id.into(), interaction, frames })
    }

    pub fn track_id(&self) -> &str {
        &self.track_id
    }

    pub fn interaction(&self) -> InteractionId {
        self.interaction
    }

    pub fn frames(&self) -> &[HoiFrame<T>] {
        &self.frames
    }

    pub fn first_second(&self) -> SecondIndex {
        self.frames[0].second
    }

    pub fn last_second(&self) -> SecondIndex {
        self.frames[self.frames.len() - 1].second
    }

    pub fn frame_at(&self, second: SecondIndex) -> Option<&HoiFrame<T>> {
        let offset = second.0.checked_sub(self.first_second().0)? as usize;
        self.frames.get(offset)
    }

    /// Number of ground truth object tracklets (the widest frame).
    pub fn object_tracklet_count(&self) -> usize {
        self.frames.iter().map(|f| f.objects.len()).max().unwrap_or(0)
    }
}

/// Mean per-second interaction score of a tracklet.
pub fn tracklet_score<T: Scalar>(t: &StHoiTracklet<T>) -> T {
    mean(t.frames.iter().map(|f| f.score)).expect("tracklets are non-empty")
}

/// Groups frames into maximal runs of consecutive seconds.
fn contiguous_runs<T: Scalar>(
    track_id: &str,
    interaction: InteractionId,
    frames: impl IntoIterator<Item = HoiFrame<T>>,
) -> Vec<StHoiTracklet<T>> {
    let mut out = Vec::new();
    let mut run: Vec<HoiFrame<T>> = Vec::new();
    for f in frames {
        if let Some(last) = run.last() {
            if f.second != last.second.next() {
                let frames = std::mem::take(&mut run);
                out.push(StHoiTracklet { track_id: track_id.to_owned(), interaction, frames });
            }
        }
        run.push(f);
    }
    if !run.is_empty() {
        out.push(StHoiTracklet { track_id: track_id.to_owned(), interaction, frames: run });
    }
    out
}

/// Masks scores under `alpha` to zero and splits every class into maximal
/// runs of positive-score seconds.
///
/// Output is ordered by class, then start second. An empty result means the
/// whole human tracklet was masked away.
pub fn mask_and_split<T: Scalar>(t: &ScoredHumanTracklet<T>, alpha: T) -> Vec<StHoiTracklet<T>> {
    let mut out = Vec::new();
    for class in InteractionId::all() {
        let kept = t.seconds.iter().filter_map(|s| {
            let p = s.scores[class.index()];
            (p >= alpha && p > T::zero()).then(|| HoiFrame::new(s.second, s.bbox, p))
        });
        out.extend(contiguous_runs(&t.track_id, class, kept));
    }
    out
}

/// Applies score masking to an already class-specific tracklet.
pub fn split_by_alpha<T: Scalar>(t: &StHoiTracklet<T>, alpha: T) -> Vec<StHoiTracklet<T>> {
    let kept = t.frames.iter().filter(|f| f.score >= alpha && f.score > T::zero()).cloned();
    contiguous_runs(&t.track_id, t.interaction, kept)
}

/// Splits arbitrary (sorted, deduplicated) frames into contiguous tracklets.
pub fn split_contiguous<T: Scalar>(
    track_id: &str,
    interaction: InteractionId,
    frames: Vec<HoiFrame<T>>,
) -> Vec<StHoiTracklet<T>> {
    contiguous_runs(track_id, interaction, frames)
}

/// Thresholds of the step-wise evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Interaction scores strictly below this are masked.
    pub alpha: f64,
    /// A tracklet is a true positive when its mIoU is strictly above this.
    pub tp_miou: f64,
    /// Tracking match threshold (IoU strictly above).
    pub tracking_iou: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { alpha: AlphaPreset::default().alpha(), tp_miou: 0.2, tracking_iou: 0.5 }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("tp_miou", self.tp_miou), ("tracking_iou", self.tracking_iou)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if self.tracking_iou == 0.0 {
            return Err(Error::invalid("tracking_iou must be positive"));
        }
        Ok(())
    }
}

/// Published masking thresholds per tracker and method family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaPreset {
    DensityDeepsort,
    DensityFairmot,
    ProposalDeepsort,
    #[default]
    HeatmapDeepsort,
    HeatmapFairmot,
}

impl AlphaPreset {
    pub const ALL: [AlphaPreset; 5] = [
        AlphaPreset::DensityDeepsort,
        AlphaPreset::DensityFairmot,
        AlphaPreset::ProposalDeepsort,
        AlphaPreset::HeatmapDeepsort,
        AlphaPreset::HeatmapFairmot,
    ];

    pub fn alpha(self) -> f64 {
        match self {
            AlphaPreset::DensityDeepsort => 0.2,
            AlphaPreset::DensityFairmot => 0.5,
            AlphaPreset::ProposalDeepsort => 0.02,
            AlphaPreset::HeatmapDeepsort => 0.03,
            AlphaPreset::HeatmapFairmot => 0.4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AlphaPreset::DensityDeepsort => "density-deepsort",
            AlphaPreset::DensityFairmot => "density-fairmot",
            AlphaPreset::ProposalDeepsort => "proposal-deepsort",
            AlphaPreset::HeatmapDeepsort => "heatmap-deepsort",
            AlphaPreset::HeatmapFairmot => "heatmap-fairmot",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

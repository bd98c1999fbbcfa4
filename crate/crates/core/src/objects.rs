//! Interacted object discovery: average overlap of the predicted object
//! tracklet against the best of several ground truth object tracklets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou2d, tube_iou3d, SecondIndex, Tube};
use crate::interaction::{Criterion, IouMode};
use crate::scalar::{mean, Scalar};
use crate::tracklet::StHoiTracklet;

/// How several ground truth object tracklets are reduced to one score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiGtRule {
    /// mIoU against each ground truth tracklet, keep the largest.
    #[default]
    TrackletMax,
    /// Largest IoU per frame, then the mean. Lets the target switch mid-tracklet.
    FrameMax,
}

/// Ground truth object tracklets aligned to one ST-HOI tracklet.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectTrackletSet<T: Scalar> {
    tracklets: Vec<BTreeMap<SecondIndex, Tube<T>>>,
}

impl<T: Scalar> ObjectTrackletSet<T> {
    pub fn new(tracklets: Vec<BTreeMap<SecondIndex, Tube<T>>>) -> Result<Self> {
        if tracklets.is_empty() || tracklets.iter().any(BTreeMap::is_empty) {
            return Err(Error::Empty("ground truth object tracklet"));
        }
        Ok(Self { tracklets })
    }

    /// Object tracklet `k` is the `k`-th object listed on each frame.
    pub fn from_tracklet(gt: &StHoiTracklet<T>) -> Result<Self> {
        let tracklets = (0..gt.object_tracklet_count())
            .map(|k| {
                gt.frames()
                    .iter()
                    .filter_map(|f| f.objects.get(k).map(|o| (f.second, o.clone())))
                    .collect()
            })
            .collect();
        Self::new(tracklets)
    }

    pub fn len(&self) -> usize {
        self.tracklets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracklets.is_empty()
    }
}

fn object_iou<T: Scalar>(mode: IouMode, pred: Option<&Tube<T>>, gt: Option<&Tube<T>>) -> T {
    match (pred, gt) {
        (Some(p), Some(g)) => match mode {
            IouMode::TwoD => iou2d(p.first(), g.first()),
            IouMode::ThreeD => tube_iou3d(p, g),
        },
        _ => T::zero(),
    }
}

/// Object mIoU of a predicted ST-HOI tracklet.
///
/// Evaluated frames are the prediction's seconds. `upstream_tp(s)` reports
/// whether the frame survived tracking and interaction evaluation: failed
/// frames score zero under [`Criterion::Strict`] and are discarded under
/// [`Criterion::Loose`]. A missing predicted object box scores zero. Returns
/// `None` when every frame was discarded.
pub fn discovery_miou<T: Scalar>(
    pred: &StHoiTracklet<T>,
    gt: &ObjectTrackletSet<T>,
    mode: IouMode,
    criterion: Criterion,
    rule: MultiGtRule,
    upstream_tp: impl Fn(SecondIndex) -> bool,
) -> Option<T> {
    // rows: evaluated frames, columns: ground truth object tracklets
    let rows: Vec<Vec<T>> = pred
        .frames()
        .iter()
        .filter_map(|f| {
            if upstream_tp(f.second) {
                let p = f.objects.first();
                Some(gt.tracklets.iter().map(|g| object_iou(mode, p, g.get(&f.second))).collect())
            } else {
                match criterion {
                    Criterion::Strict => Some(vec![T::zero(); gt.tracklets.len()]),
                    Criterion::Loose => None,
                }
            }
        })
        .collect();
    if rows.is_empty() {
        return None;
    }
    let best = |xs: &mut dyn Iterator<Item = T>| xs.fold(T::zero(), T::max);
    match rule {
        MultiGtRule::TrackletMax => {
            let per_gt = (0..gt.tracklets.len()).map(|k| {
                mean(rows.iter().map(|r| r[k])).expect("non-empty rows")
            });
            Some(best(&mut per_gt.into_iter()))
        }
        MultiGtRule::FrameMax => mean(rows.iter().map(|r| best(&mut r.iter().copied()))),
    }
}

/// Unweighted mean over included tracklets.
pub fn aggregate_discovery<T: Scalar>(mious: &[T]) -> Result<T> {
    mean(mious.iter().copied()).ok_or(Error::Empty("object discovery tracklets"))
}

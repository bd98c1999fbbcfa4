//! Heatmap grids and their decoding into object boxes.
//!
//! Pixel `(x, y)` covers `[x, x + 1) x [y, y + 1)` and is sampled at its
//! center `(x + 0.5, y + 0.5)`. Decoding divides a map by its peak, keeps
//! pixels at or above a threshold, and returns the tightest box around them.

mod fusion;
mod gaussian;
mod raster;
mod sthm;

pub use fusion::{
    bce_heatmap_loss, blend_long_term, fuse, fuse_dynamic, fuse_equal, select_branch, Branch,
    BranchScores, FusionOrder, FusionStrategy, FusionWeights, BCE_EPS,
};
pub use gaussian::{gaussian_map, gt_heatmap, keypoint_map, GaussianSpec, KEYPOINT_SIGMA};
pub use raster::{
    render_box_map, render_skeleton_map, stc_flow, Keypoint, StcMap, NUM_KEYPOINTS,
    OPENPOSE_LIMBS, STC_SIZE,
};
pub use sthm::{read_sthm, write_sthm, STHM_MAGIC, STHM_VERSION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::scalar::Scalar;

/// Row-major likelihood grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap<T: Scalar> {
    width: usize,
    height: usize,
    values: Vec<T>,
}

impl<T: Scalar> Heatmap<T> {
    pub fn new(width: usize, height: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::invalid(format!(
                "{} values for a {width}x{height} heatmap",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("heatmap"));
        }
        Ok(Self { width, height, values })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, values: vec![T::zero(); width * height] }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let values = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self { width, height, values }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.values[y * self.width + x] = v;
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    /// First pixel (row-major) holding the maximum.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, T)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| (i % self.width, i / self.width))
    }

    /// Peak normalization. Maps without a positive peak are returned as is.
    pub fn normalized(&self) -> Self {
        let peak = self.max();
        if peak > T::zero() {
            self.map(|v| v / peak)
        } else {
            self.clone()
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { width: self.width, height: self.height, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub(crate) fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch { expected: self.shape(), found: other.shape() });
        }
        Ok(())
    }

    pub(crate) fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { width: self.width, height: self.height, values })
    }
}

/// Object size relative to the interacting human.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

/// Classifies an object by its area ratio to the human box:
/// `r <= 0.3` small, `0.3 < r <= 1` medium, `r > 1` large.
pub fn size_classify<T: Scalar>(human_area: T, object_area: T) -> Result<SizeClass> {
    if !(human_area > T::zero()) || !human_area.is_finite() {
        return Err(Error::invalid("human area must be positive"));
    }
    if !(object_area >= T::zero()) || !object_area.is_finite() {
        return Err(Error::invalid("object area must be non-negative"));
    }
    let r = object_area / human_area;
    Ok(if r <= T::lit(0.3) {
        SizeClass::Small
    } else if r <= T::one() {
        SizeClass::Medium
    } else {
        SizeClass::Large
    })
}

/// Decoding thresholds and temporal constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapConfig {
    pub small_threshold: f64,
    pub medium_threshold: f64,
    pub large_threshold: f64,
    /// Threshold used when no size class is predicted (single-branch models).
    pub single_branch_threshold: f64,
    /// Weight of the long-term map when blending.
    pub epsilon: f64,
    /// Half-width, in seconds, of the STC map flow.
    pub tau: usize,
    pub n_proposals: usize,
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        Self {
            small_threshold: 0.7,
            medium_threshold: 0.6,
            large_threshold: 0.5,
            single_branch_threshold: 0.6,
            epsilon: 0.1,
            tau: 2,
            n_proposals: 75,
        }
    }
}

impl HeatmapConfig {
    pub fn threshold_for(&self, size: Option<SizeClass>) -> f64 {
        match size {
            Some(SizeClass::Small) => self.small_threshold,
            Some(SizeClass::Medium) => self.medium_threshold,
            Some(SizeClass::Large) => self.large_threshold,
            None => self.single_branch_threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ts = [self.small_threshold, self.medium_threshold, self.large_threshold, self.single_branch_threshold];
        if ts.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(Error::invalid("heatmap thresholds must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::invalid("epsilon must lie in [0, 1]"));
        }
        if self.tau < 1 {
            return Err(Error::invalid("tau must be at least 1"));
        }
        Ok(())
    }
}

/// Which above-threshold pixels the decoded box must cover.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoxExtraction {
    #[default]
    AllPixels,
    /// Only the largest 8-connected component (first in scan order on ties).
    LargestComponent,
}

/// Tightest box around all pixels with value `>= t`, in pixel units.
pub fn threshold_to_box<T: Scalar>(h: &Heatmap<T>, t: T) -> Option<BBox<T>> {
    threshold_to_box_with(h, t, BoxExtraction::AllPixels)
}

pub fn threshold_to_box_with<T: Scalar>(
    h: &Heatmap<T>,
    t: T,
    extraction: BoxExtraction,
) -> Option<BBox<T>> {
    let mask: Vec<bool> = h.values.iter().map(|&v| v >= t).collect();
    let selected: Vec<usize> = match extraction {
        BoxExtraction::AllPixels => (0..mask.len()).filter(|&i| mask[i]).collect(),
        BoxExtraction::LargestComponent => largest_component(&mask, h.width, h.height),
    };
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for &i in &selected {
        let (x, y) = (i % h.width, i / h.width);
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if selected.is_empty() {
        return None;
    }
    BBox::new(T::count(x0), T::count(y0), T::count(x1 - x0 + 1), T::count(y1 - y0 + 1)).ok()
}

fn largest_component(mask: &[bool], width: usize, height: usize) -> Vec<usize> {
    let mut label = vec![usize::MAX; mask.len()];
    let mut best: Vec<usize> = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || label[start] != usize::MAX {
            continue;
        }
        let mut component = vec![start];
        label[start] = start;
        let mut head = 0;
        while head < component.len() {
            let i = component[head];
            head += 1;
            let (x, y) = ((i % width) as isize, (i / width) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                        continue;
                    }
                    let j = ny as usize * width + nx as usize;
                    if mask[j] && label[j] == usize::MAX {
                        label[j] = start;
                        component.push(j);
                    }
                }
            }
        }
        if component.len() > best.len() {
            best = component;
        }
    }
    best
}

/// Normalizes, thresholds, and extracts the object box of a heatmap.
pub fn decode_heatmap<T: Scalar>(h: &Heatmap<T>, threshold: T, extraction: BoxExtraction) -> Option<BBox<T>> {
    threshold_to_box_with(&h.normalized(), threshold, extraction)
}

//! Rasterized configuration maps: keypoints, skeleton, boxes, proposals.

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::scalar::Scalar;

use super::{keypoint_map, Heatmap};

/// Side length of every STC channel.
pub const STC_SIZE: usize = 56;

/// Body keypoints per person.
pub const NUM_KEYPOINTS: usize = 18;

/// Keypoint in map coordinates; `None` when undetected.
pub type Keypoint<T> = Option<(T, T)>;

/// Limbs of the 18-point body model, as keypoint index pairs.
pub const OPENPOSE_LIMBS: [(usize, usize); 17] = [
    (1, 2),
    (1, 5),
    (2, 3),
    (3, 4),
    (5, 6),
    (6, 7),
    (1, 8),
    (8, 9),
    (9, 10),
    (1, 11),
    (11, 12),
    (12, 13),
    (1, 0),
    (0, 14),
    (14, 16),
    (0, 15),
    (15, 17),
];

/// Pixels whose centers lie inside `[x, x + w) x [y, y + h)` are set to 1.
pub fn render_box_map<T: Scalar>(bbox: &BBox<T>, width: usize, height: usize) -> Heatmap<T> {
    let half = T::lit(0.5);
    Heatmap::from_fn(width, height, |x, y| {
        let (cx, cy) = (T::count(x) + half, T::count(y) + half);
        let inside = cx >= bbox.x() && cx < bbox.right() && cy >= bbox.y() && cy < bbox.bottom();
        if inside {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// Limb segments drawn with Bresenham's line between the pixels holding each
/// endpoint. Limbs with an undetected or out-of-range endpoint are skipped,
/// and pixels off the grid are clipped.
pub fn render_skeleton_map<T: Scalar>(
    keypoints: &[Keypoint<T>],
    limbs: &[(usize, usize)],
    width: usize,
    height: usize,
) -> Heatmap<T> {
    let mut map = Heatmap::zeros(width, height);
    let pixel = |k: usize| -> Option<(i64, i64)> {
        let (x, y) = (*keypoints.get(k)?)?;
        if !(x.is_finite() && y.is_finite()) {
            return None;
        }
        // Far-away points only need to keep the segment's direction roughly.
        let bound = 4.0 * (width + height) as f64;
        let c = |v: T| v.as_f64().clamp(-bound, bound).floor() as i64;
        Some((c(x), c(y)))
    };
    for &(a, b) in limbs {
        if let (Some(p), Some(q)) = (pixel(a), pixel(b)) {
            bresenham(p, q, |x, y| {
                if x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height {
                    map.set(x as usize, y as usize, T::one());
                }
            });
        }
    }
    map
}

fn bresenham((mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64), mut plot: impl FnMut(i64, i64)) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        plot(x0, y0);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

/// Multi-channel 56x56 configuration map for one human at one second.
#[derive(Debug, Clone, PartialEq)]
pub struct StcMap<T: Scalar> {
    channels: Vec<Heatmap<T>>,
}

impl<T: Scalar> StcMap<T> {
    pub fn new(channels: Vec<Heatmap<T>>) -> Result<Self> {
        if let Some(c) = channels.iter().find(|c| c.shape() != (STC_SIZE, STC_SIZE)) {
            return Err(Error::ShapeMismatch { expected: (STC_SIZE, STC_SIZE), found: c.shape() });
        }
        Ok(Self { channels })
    }

    /// All-zero placeholder.
    pub fn empty(channels: usize) -> Self {
        Self { channels: vec![Heatmap::zeros(STC_SIZE, STC_SIZE); channels] }
    }

    /// Human part map: 18 keypoint maps scaled by their attention values,
    /// then the skeleton and the human box (20 channels).
    pub fn part(
        keypoints: &[Keypoint<T>],
        attention: &[T],
        limbs: &[(usize, usize)],
        human: &BBox<T>,
    ) -> Result<Self> {
        if keypoints.len() != NUM_KEYPOINTS || attention.len() != NUM_KEYPOINTS {
            return Err(Error::invalid(format!(
                "part map needs {NUM_KEYPOINTS} keypoints and attention values"
            )));
        }
        if attention.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("keypoint attention"));
        }
        let mut channels = Vec::with_capacity(NUM_KEYPOINTS + 2);
        for (kp, &a) in keypoints.iter().zip(attention) {
            let ch = match kp {
                Some(p) => keypoint_map(*p, STC_SIZE, STC_SIZE)?.0.map(|v| v * a),
                None => Heatmap::zeros(STC_SIZE, STC_SIZE),
            };
            channels.push(ch);
        }
        channels.extend(Self::human(keypoints, limbs, human).channels);
        Ok(Self { channels })
    }

    /// Whole-body map: skeleton and human box (2 channels).
    pub fn human(keypoints: &[Keypoint<T>], limbs: &[(usize, usize)], human: &BBox<T>) -> Self {
        Self {
            channels: vec![
                render_skeleton_map(keypoints, limbs, STC_SIZE, STC_SIZE),
                render_box_map(human, STC_SIZE, STC_SIZE),
            ],
        }
    }

    /// Context map: skeleton, human box, then one box map per proposal
    /// (`2 + n_proposals` channels). Extra proposals are dropped and missing
    /// ones are left empty.
    pub fn context(
        keypoints: &[Keypoint<T>],
        limbs: &[(usize, usize)],
        human: &BBox<T>,
        proposals: &[BBox<T>],
        n_proposals: usize,
    ) -> Self {
        let mut channels = Self::human(keypoints, limbs, human).channels;
        channels.extend(proposals.iter().take(n_proposals).map(|p| render_box_map(p, STC_SIZE, STC_SIZE)));
        channels.resize(2 + n_proposals, Heatmap::zeros(STC_SIZE, STC_SIZE));
        Self { channels }
    }

    pub fn channels(&self) -> &[Heatmap<T>] {
        &self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Element-wise product with an attention tensor of the same shape.
    pub fn reweight(&self, attention: &StcMap<T>) -> Result<Self> {
        if attention.channels.len() != self.channels.len() {
            return Err(Error::invalid(format!(
                "attention has {} channels, map has {}",
                attention.channels.len(),
                self.channels.len()
            )));
        }
        let channels = self
            .channels
            .iter()
            .zip(&attention.channels)
            .map(|(m, a)| m.zip_with(a, |u, v| u * v))
            .collect::<Result<_>>()?;
        Ok(Self { channels })
    }

    pub fn is_blank(&self) -> bool {
        self.channels.iter().all(|c| c.values().iter().all(|v| v.is_zero()))
    }
}

/// Maps for seconds `k - tau ..= k + tau`, where `maps[s]` belongs to second
/// `s`. Seconds before the clip or past its end become empty placeholders
/// with the channel count of the clip's first map.
pub fn stc_flow<T: Scalar>(maps: &[StcMap<T>], k: usize, tau: usize) -> Vec<StcMap<T>> {
    let channels = maps.first().map_or(0, StcMap::channel_count);
    (0..=2 * tau)
        .map(|i| {
            (k + i)
                .checked_sub(tau)
                .and_then(|s| maps.get(s))
                .cloned()
                .unwrap_or_else(|| StcMap::empty(channels))
        })
        .collect()
}

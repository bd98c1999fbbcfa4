//! Axis-aligned boxes, per-second tubes, and the overlap measures built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Axis-aligned rectangle in pixel units, anchored at its top-left corner.
///
/// Construction rejects non-finite coordinates and negative extents, so every
/// `BBox` in circulation is valid and the overlap functions are infallible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[T; 4]", into = "[T; 4]")]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct BBox<T: Scalar> {
    x: T,
    y: T,
    w: T,
    h: T,
}

impl<T: Scalar> BBox<T> {
    pub fn new(x: T, y: T, w: T, h: T) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(Error::NonFinite("box coordinates"));
        }
        if w < T::zero() || h < T::zero() {
            return Err(Error::invalid(format!("negative box extent ({w}, {h})")));
        }
        Ok(Self { x, y, w, h })
    }

    /// Box spanning the corners `(x1, y1)` and `(x2, y2)`.
    pub fn from_corners(x1: T, y1: T, x2: T, y2: T) -> Result<Self> {
        Self::new(x1, y1, x2 - x1, y2 - y1)
    }

    /// The degenerate box used to pad missing tube frames.
    pub fn empty() -> Self {
        Self { x: T::zero(), y: T::zero(), w: T::zero(), h: T::zero() }
    }

    pub fn x(&self) -> T {
        self.x
    }
    pub fn y(&self) -> T {
        self.y
    }
    pub fn w(&self) -> T {
        self.w
    }
    pub fn h(&self) -> T {
        self.h
    }
    pub fn right(&self) -> T {
        self.x + self.w
    }
    pub fn bottom(&self) -> T {
        self.y + self.h
    }

    pub fn area(&self) -> T {
        self.w * self.h
    }

    pub fn center(&self) -> (T, T) {
        let half = T::lit(0.5);
        (self.x + self.w * half, self.y + self.h * half)
    }

    pub fn as_array(&self) -> [T; 4] {
        [self.x, self.y, self.w, self.h]
    }

    pub fn intersection_area(&self, other: &Self) -> T {
        let iw = self.right().min(other.right()) - self.x.max(other.x);
        let ih = self.bottom().min(other.bottom()) - self.y.max(other.y);
        iw.max(T::zero()) * ih.max(T::zero())
    }

    pub fn union_area(&self, other: &Self) -> T {
        self.area() + other.area() - self.intersection_area(other)
    }

    /// True when `other` lies entirely inside `self` (edges may touch).
    pub fn contains(&self, other: &Self) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn translate(&self, dx: T, dy: T) -> Result<Self> {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    pub fn scale(&self, s: T) -> Result<Self> {
        Self::new(self.x * s, self.y * s, self.w * s, self.h * s)
    }
}

impl<T: Scalar> TryFrom<[T; 4]> for BBox<T> {
    type Error = Error;

    fn try_from(v: [T; 4]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl<T: Scalar> From<BBox<T>> for [T; 4] {
    fn from(b: BBox<T>) -> Self {
        b.as_array()
    }
}

/// Boxes of one actor or object over the frames of a one-second window.
#[derive(Debug, Clone, PartialEq)]
pub struct Tube<T: Scalar> {
    boxes: Vec<BBox<T>>,
}

impl<T: Scalar> Tube<T> {
    pub fn new(boxes: Vec<BBox<T>>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::Empty("tube"));
        }
        Ok(Self { boxes })
    }

    pub fn single(b: BBox<T>) -> Self {
        Self { boxes: vec![b] }
    }

    pub fn boxes(&self) -> &[BBox<T>] {
        &self.boxes
    }

    pub fn frame_count(&self) -> usize {
        self.boxes.len()
    }

    /// Box sampled at the first frame of the window.
    pub fn first(&self) -> &BBox<T> {
        &self.boxes[0]
    }
}

/// Clip-relative second index; annotations have a one-second stride.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SecondIndex(pub u32);

impl SecondIndex {
    pub fn next(self) -> Self {
        SecondIndex(self.0 + 1)
    }
}

/// Intersection over union of two boxes. Two zero-area boxes give 0.
pub fn iou2d<T: Scalar>(a: &BBox<T>, b: &BBox<T>) -> T {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= T::zero() {
        T::zero()
    } else {
        (inter / union).min(T::one())
    }
}

/// Volume IoU of two tubes, summing per-frame slice areas.
///
/// The shorter tube is padded with empty frames: those add nothing to the
/// intersection and the present box's area to the union.
pub fn tube_iou3d<T: Scalar>(a: &Tube<T>, b: &Tube<T>) -> T {
    let frames = a.frame_count().max(b.frame_count());
    let (mut inter, mut union) = (T::zero(), T::zero());
    for t in 0..frames {
        match (a.boxes.get(t), b.boxes.get(t)) {
            (Some(p), Some(q)) => {
                let i = p.intersection_area(q);
                inter = inter + i;
                union = union + p.area() + q.area() - i;
            }
            (Some(p), None) | (None, Some(p)) => union = union + p.area(),
            (None, None) => unreachable!(),
        }
    }
    if union <= T::zero() {
        T::zero()
    } else {
        (inter / union).min(T::one())
    }
}

/// Euclidean distance between box centers.
pub fn center_distance<T: Scalar>(a: &BBox<T>, b: &BBox<T>) -> T {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

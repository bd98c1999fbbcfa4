use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::scalar::Scalar;

use super::Heatmap;

/// Standard deviation, in pixels, of keypoint part maps.
pub const KEYPOINT_SIGMA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec<T> {
    pub center: (T, T),
    pub sigma_x: T,
    pub sigma_y: T,
}

impl<T: Scalar> GaussianSpec<T> {
    pub fn new(center: (T, T), sigma_x: T, sigma_y: T) -> Result<Self> {
        if !(sigma_x > T::zero() && sigma_y > T::zero()) {
            return Err(Error::invalid("gaussian sigmas must be positive"));
        }
        if !(center.0.is_finite() && center.1.is_finite() && sigma_x.is_finite() && sigma_y.is_finite()) {
            return Err(Error::NonFinite("gaussian parameters"));
        }
        Ok(Self { center, sigma_x, sigma_y })
    }

    /// Unnormalized density: 1 at the center.
    pub fn eval(&self, x: T, y: T) -> T {
        let two = T::lit(2.0);
        let dx = (x - self.center.0) / self.sigma_x;
        let dy = (y - self.center.1) / self.sigma_y;
        (-(dx * dx + dy * dy) / two).exp()
    }
}

/// Evaluates an amplitude-1 Gaussian at every pixel center.
pub fn gaussian_map<T: Scalar>(spec: &GaussianSpec<T>, width: usize, height: usize) -> Heatmap<T> {
    let half = T::lit(0.5);
    Heatmap::from_fn(width, height, |x, y| spec.eval(T::count(x) + half, T::count(y) + half))
}

/// Target heatmap for an object box: centered on the box with sigmas equal
/// to half its width and height.
pub fn gt_heatmap<T: Scalar>(bbox: &BBox<T>, width: usize, height: usize) -> Result<Heatmap<T>> {
    if !(bbox.w() > T::zero() && bbox.h() > T::zero()) {
        return Err(Error::invalid("ground truth box must have positive area"));
    }
    let (cx, cy) = bbox.center();
    if cx < T::zero() || cy < T::zero() || cx > T::count(width) || cy > T::count(height) {
        return Err(Error::invalid("ground truth box center outside the heatmap"));
    }
    let half = T::lit(0.5);
    let spec = GaussianSpec::new((cx, cy), bbox.w() * half, bbox.h() * half)?;
    Ok(gaussian_map(&spec, width, height))
}

/// Part map for one keypoint (sigma 3 px). Points outside the grid are
/// clamped onto it; the flag reports whether that happened.
pub fn keypoint_map<T: Scalar>(point: (T, T), width: usize, height: usize) -> Result<(Heatmap<T>, bool)> {
    if !(point.0.is_finite() && point.1.is_finite()) {
        return Err(Error::NonFinite("keypoint"));
    }
    let clamp = |v: T, hi: usize| v.max(T::zero()).min(T::count(hi));
    let clamped = (clamp(point.0, width), clamp(point.1, height));
    let sigma = T::lit(KEYPOINT_SIGMA);
    let spec = GaussianSpec::new(clamped, sigma, sigma)?;
    Ok((gaussian_map(&spec, width, height), clamped != point))
}

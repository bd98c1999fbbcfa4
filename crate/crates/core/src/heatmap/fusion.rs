use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tracklet::InteractionId;

use super::Heatmap;

/// Probability clamp used by [`bce_heatmap_loss`].
pub const BCE_EPS: f64 = 1e-7;

/// Mean pixel-wise binary cross entropy.
pub fn bce_heatmap_loss<T: Scalar>(pred: &Heatmap<T>, gt: &Heatmap<T>) -> Result<T> {
    pred.check_same_shape(gt)?;
    let eps = T::lit(BCE_EPS);
    let hi = T::one() - eps;
    let total: T = pred
        .values()
        .iter()
        .zip(gt.values())
        .map(|(&p, &g)| {
            let p = p.max(eps).min(hi);
            -(g * p.ln() + (T::one() - g) * (T::one() - p).ln())
        })
        .sum();
    let n = pred.values().len();
    Ok(if n == 0 { T::zero() } else { total / T::count(n) })
}

/// Per-branch fusion weights; non-negative and summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights<T> {
    pub beta_p: T,
    pub beta_h: T,
    pub beta_c: T,
}

impl<T: Scalar> FusionWeights<T> {
    pub fn new(beta_p: T, beta_h: T, beta_c: T) -> Result<Self> {
        let w = Self { beta_p, beta_h, beta_c };
        w.validate()?;
        Ok(w)
    }

    pub fn equal() -> Self {
        let third = T::one() / T::lit(3.0);
        Self { beta_p: third, beta_h: third, beta_c: third }
    }

    /// Softmax over three branch logits.
    pub fn from_logits(lp: T, lh: T, lc: T) -> Result<Self> {
        if !(lp.is_finite() && lh.is_finite() && lc.is_finite()) {
            return Err(Error::NonFinite("fusion logits"));
        }
        let m = lp.max(lh).max(lc);
        let (ep, eh, ec) = ((lp - m).exp(), (lh - m).exp(), (lc - m).exp());
        let z = ep + eh + ec;
        Self::new(ep / z, eh / z, ec / z)
    }

    pub fn validate(&self) -> Result<()> {
        let ws = [self.beta_p, self.beta_h, self.beta_c];
        if ws.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("fusion weights"));
        }
        if ws.iter().any(|&w| w < T::zero()) {
            return Err(Error::invalid("fusion weights must be non-negative"));
        }
        let sum = self.beta_p + self.beta_h + self.beta_c;
        let tol = T::lit(1e-6).max(T::epsilon() * T::lit(8.0));
        if (sum - T::one()).abs() > tol {
            return Err(Error::invalid(format!("fusion weights sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

/// Weighted sum of the three branch maps. Each pixel is kept within the
/// range of its inputs, so identical inputs come back unchanged.
pub fn fuse_dynamic<T: Scalar>(
    hp: &Heatmap<T>,
    hh: &Heatmap<T>,
    hc: &Heatmap<T>,
    w: &FusionWeights<T>,
) -> Result<Heatmap<T>> {
    w.validate()?;
    hp.check_same_shape(hh)?;
    hp.check_same_shape(hc)?;
    let values = hp
        .values()
        .iter()
        .zip(hh.values())
        .zip(hc.values())
        .map(|((&p, &h), &c)| {
            let v = w.beta_p * p + w.beta_h * h + w.beta_c * c;
            v.max(p.min(h).min(c)).min(p.max(h).max(c))
        })
        .collect();
    Heatmap::new(hp.width(), hp.height(), values)
}

/// Pixel-wise mean of the three branch maps.
pub fn fuse_equal<T: Scalar>(hp: &Heatmap<T>, hh: &Heatmap<T>, hc: &Heatmap<T>) -> Result<Heatmap<T>> {
    fuse_dynamic(hp, hh, hc, &FusionWeights::equal())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Part,
    Human,
    Context,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Part, Branch::Human, Branch::Context];
}

/// Validation mIoU of each branch for one interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchScores<T> {
    pub part: T,
    pub human: T,
    pub context: T,
}

impl<T: Scalar> BranchScores<T> {
    pub fn get(&self, b: Branch) -> T {
        match b {
            Branch::Part => self.part,
            Branch::Human => self.human,
            Branch::Context => self.context,
        }
    }

    /// Best branch; ties go to the earliest of part, human, context.
    pub fn best(&self) -> Result<Branch> {
        if Branch::ALL.iter().any(|&b| !self.get(b).is_finite()) {
            return Err(Error::NonFinite("branch scores"));
        }
        let mut best = Branch::Part;
        for b in [Branch::Human, Branch::Context] {
            if self.get(b) > self.get(best) {
                best = b;
            }
        }
        Ok(best)
    }
}

/// Picks the best validation branch for every interaction class.
pub fn select_branch<T: Scalar>(
    table: &BTreeMap<InteractionId, BranchScores<T>>,
) -> Result<BTreeMap<InteractionId, Branch>> {
    let missing: Vec<String> = InteractionId::all().filter(|i| !table.contains_key(i)).map(|i| i.to_string()).collect();
    if !missing.is_empty() {
        return Err(Error::invalid(format!("branch table lacks interactions {}", missing.join(", "))));
    }
    table.iter().map(|(&i, s)| Ok((i, s.best()?))).collect()
}

/// `epsilon * long + (1 - epsilon) * short`.
pub fn blend_long_term<T: Scalar>(short: &Heatmap<T>, long: &Heatmap<T>, epsilon: T) -> Result<Heatmap<T>> {
    if !(epsilon >= T::zero() && epsilon <= T::one()) {
        return Err(Error::invalid("epsilon must lie in [0, 1]"));
    }
    let keep = T::one() - epsilon;
    short.zip_with(long, |s, l| epsilon * l + keep * s)
}

/// Whether branch maps are peak-normalized before or after fusion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FusionOrder {
    #[default]
    FuseThenNormalize,
    NormalizeThenFuse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FusionStrategy<T> {
    Equal,
    Dynamic(FusionWeights<T>),
    Select(Branch),
}

/// Fuses three branch maps and returns the peak-normalized result.
pub fn fuse<T: Scalar>(
    hp: &Heatmap<T>,
    hh: &Heatmap<T>,
    hc: &Heatmap<T>,
    strategy: FusionStrategy<T>,
    order: FusionOrder,
) -> Result<Heatmap<T>> {
    let (p, h, c);
    let (hp, hh, hc) = match order {
        FusionOrder::FuseThenNormalize => (hp, hh, hc),
        FusionOrder::NormalizeThenFuse => {
            (p, h, c) = (hp.normalized(), hh.normalized(), hc.normalized());
            (&p, &h, &c)
        }
    };
    let fused = match strategy {
        FusionStrategy::Equal => fuse_equal(hp, hh, hc)?,
        FusionStrategy::Dynamic(w) => fuse_dynamic(hp, hh, hc, &w)?,
        FusionStrategy::Select(b) => {
            hp.check_same_shape(hh)?;
            hp.check_same_shape(hc)?;
            match b {
                Branch::Part => hp.clone(),
                Branch::Human => hh.clone(),
                Branch::Context => hc.clone(),
            }
        }
    };
    Ok(fused.normalized())
}

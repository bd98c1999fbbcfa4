//! Box decoders for the proposal, offset, density and regression baselines.

use serde::{Deserialize, Serialize};

pub use crate::assignment::{assignment, Assignment};

use crate::error::{Error, Result};
use crate::geometry::{center_distance, iou2d, BBox};
use crate::scalar::{mean, Scalar};

/// Offset of a target box relative to a reference box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxOffset<T> {
    pub dx: T,
    pub dy: T,
    pub dlogw: T,
    pub dlogh: T,
}

impl<T: Scalar> BoxOffset<T> {
    pub fn zero() -> Self {
        Self { dx: T::zero(), dy: T::zero(), dlogw: T::zero(), dlogh: T::zero() }
    }

    pub fn as_array(&self) -> [T; 4] {
        [self.dx, self.dy, self.dlogw, self.dlogh]
    }

    pub fn distance(&self, other: &Self) -> T {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(&a, b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }
}

fn require_positive<T: Scalar>(b: &BBox<T>, what: &str) -> Result<()> {
    if b.w() > T::zero() && b.h() > T::zero() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} box needs positive width and height")))
    }
}

/// `((x_t - x_r) / w_r, (y_t - y_r) / h_r, ln(w_t / w_r), ln(h_t / h_r))`.
pub fn encode_offset<T: Scalar>(reference: &BBox<T>, target: &BBox<T>) -> Result<BoxOffset<T>> {
    require_positive(reference, "reference")?;
    require_positive(target, "target")?;
    Ok(BoxOffset {
        dx: (target.x() - reference.x()) / reference.w(),
        dy: (target.y() - reference.y()) / reference.h(),
        dlogw: (target.w() / reference.w()).ln(),
        dlogh: (target.h() / reference.h()).ln(),
    })
}

pub fn decode_offset<T: Scalar>(reference: &BBox<T>, offset: &BoxOffset<T>) -> Result<BBox<T>> {
    require_positive(reference, "reference")?;
    if offset.as_array().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("box offset"));
    }
    let w = reference.w() * offset.dlogw.exp();
    let h = reference.h() * offset.dlogh.exp();
    let x = reference.x() + offset.dx * reference.w();
    let y = reference.y() + offset.dy * reference.h();
    if ![x, y, w, h].iter().all(|v| v.is_finite()) {
        return Err(Error::Overflow("offset decoding"));
    }
    BBox::new(x, y, w, h)
}

/// Default Gaussian width for [`density_likelihood`].
pub const DEFAULT_DENSITY_SIGMA: f64 = 1.0;

/// `exp(-|delta_p - delta_o|^2 / (2 sigma^2))`.
pub fn density_likelihood<T: Scalar>(delta_p: &BoxOffset<T>, delta_o: &BoxOffset<T>, sigma: T) -> Result<T> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::invalid("density sigma must be positive"));
    }
    let d = delta_p.distance(delta_o);
    Ok((-(d * d) / (T::lit(2.0) * sigma * sigma)).exp())
}

/// Proposal whose offset from the human best agrees with the predicted
/// object offset, weighted by the interaction score. Returns the index and
/// the combined score; ties go to the lowest index.
pub fn density_select<T: Scalar>(
    human: &BBox<T>,
    proposals: &[BBox<T>],
    predicted: &BoxOffset<T>,
    interaction_score: T,
    sigma: T,
) -> Result<(usize, T)> {
    let scores = proposals
        .iter()
        .map(|p| Ok(density_likelihood(&encode_offset(human, p)?, predicted, sigma)? * interaction_score))
        .collect::<Result<Vec<T>>>()?;
    argmax(&scores).map(|i| (i, scores[i])).ok_or(Error::Empty("proposals"))
}

fn argmax<T: Scalar>(xs: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in xs.iter().enumerate() {
        if best.is_none_or(|b| x > xs[b]) {
            best = Some(i);
        }
    }
    best
}

fn argmin<T: Scalar>(xs: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in xs.iter().enumerate() {
        if best.is_none_or(|b| x < xs[b]) {
            best = Some(i);
        }
    }
    best
}

/// Index of the proposal whose center is closest to the anchor's.
pub fn shortest_distance_select<T: Scalar>(proposals: &[BBox<T>], anchor: &BBox<T>) -> Result<usize> {
    let d: Vec<T> = proposals.iter().map(|p| center_distance(p, anchor)).collect();
    argmin(&d).ok_or(Error::Empty("proposals"))
}

/// Index of the highest scoring proposal.
pub fn proposal_select_by_score<T: Scalar>(proposals: &[BBox<T>], scores: &[T]) -> Result<usize> {
    if proposals.len() != scores.len() {
        return Err(Error::invalid(format!("{} proposals but {} scores", proposals.len(), scores.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("proposal scores"));
    }
    argmax(scores).ok_or(Error::Empty("proposals"))
}

/// Euclidean distance between `[x, y, w, h]` shape vectors.
pub fn shape_distance<T: Scalar>(a: &BBox<T>, b: &BBox<T>) -> T {
    a.as_array().iter().zip(b.as_array()).map(|(&p, q)| (p - q) * (p - q)).sum::<T>().sqrt()
}

/// Matches the proposals of two consecutive frames on shape distance.
pub fn tbd_match<T: Scalar>(frame_a: &[BBox<T>], frame_b: &[BBox<T>]) -> Result<Assignment<T>> {
    let cost: Vec<Vec<T>> = frame_a.iter().map(|a| frame_b.iter().map(|b| shape_distance(a, b)).collect()).collect();
    assignment(&cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredProposal<T: Scalar> {
    pub bbox: BBox<T>,
    pub score: T,
}

/// Chain of proposals across consecutive frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalTracklet<T> {
    pub start_frame: usize,
    /// Proposal index in each frame from `start_frame` on.
    pub members: Vec<usize>,
    /// Mean interaction score of the members.
    pub score: T,
}

/// Links proposals frame to frame with [`tbd_match`]. A proposal left
/// unmatched starts a new tracklet; a tracklet whose last proposal finds no
/// partner ends. Output is ordered by start frame, then by first proposal.
pub fn tbd_tracklets<T: Scalar>(frames: &[Vec<ScoredProposal<T>>]) -> Result<Vec<ProposalTracklet<T>>> {
    let mut done: Vec<(usize, Vec<usize>)> = Vec::new();
    // open chains keyed by their proposal in the previous frame
    let mut open: Vec<(usize, Vec<usize>)> = Vec::new();
    for (f, props) in frames.iter().enumerate() {
        let boxes: Vec<BBox<T>> = props.iter().map(|p| p.bbox).collect();
        let mut next: Vec<Option<(usize, Vec<usize>)>> = vec![None; props.len()];
        if f > 0 {
            let prev: Vec<BBox<T>> = frames[f - 1].iter().map(|p| p.bbox).collect();
            let m = tbd_match(&prev, &boxes)?;
            let link = m.row_to_col(prev.len());
            for (start, mut chain) in open.drain(..) {
                let last = *chain.last().expect("chains are non-empty");
                match link[last] {
                    Some(j) => {
                        chain.push(j);
                        next[j] = Some((start, chain));
                    }
                    None => done.push((start, chain)),
                }
            }
        }
        open = next.into_iter().enumerate().map(|(j, c)| c.unwrap_or((f, vec![j]))).collect();
    }
    done.extend(open);
    done.sort_by(|a, b| (a.0, a.1[0]).cmp(&(b.0, b.1[0])));
    Ok(done
        .into_iter()
        .map(|(start, members)| {
            let score = mean(members.iter().enumerate().map(|(k, &j)| frames[start + k][j].score))
                .expect("chains are non-empty");
            ProposalTracklet { start_frame: start, members, score }
        })
        .collect())
}

/// Highest mean-score tracklet; ties go to the earliest in output order.
pub fn best_tracklet<T: Scalar>(tracklets: &[ProposalTracklet<T>]) -> Option<&ProposalTracklet<T>> {
    let scores: Vec<T> = tracklets.iter().map(|t| t.score).collect();
    argmax(&scores).map(|i| &tracklets[i])
}

/// Follows one proposal through the clip: each frame keeps the proposal with
/// the largest IoU to the previous pick (lowest index on ties). Frames
/// without proposals yield `None` and keep the previous pick as reference.
pub fn psot_track<T: Scalar>(frames: &[Vec<ScoredProposal<T>>], start: usize) -> Result<Vec<Option<usize>>> {
    let first = frames.first().ok_or(Error::Empty("frames"))?;
    if start >= first.len() {
        return Err(Error::invalid(format!("start proposal {start} not in first frame")));
    }
    let mut reference = first[start].bbox;
    let mut picks = vec![Some(start)];
    for props in &frames[1..] {
        let ious: Vec<T> = props.iter().map(|p| iou2d(&reference, &p.bbox)).collect();
        let pick = argmax(&ious);
        if let Some(j) = pick {
            reference = props[j].bbox;
        }
        picks.push(pick);
    }
    Ok(picks)
}

/// Tracks every first-frame proposal and keeps the chain with the highest
/// mean score over the frames it covers.
pub fn psot_select<T: Scalar>(frames: &[Vec<ScoredProposal<T>>]) -> Result<(Vec<Option<usize>>, T)> {
    let first = frames.first().ok_or(Error::Empty("frames"))?;
    let mut best: Option<(Vec<Option<usize>>, T)> = None;
    for start in 0..first.len() {
        let picks = psot_track(frames, start)?;
        let score = mean(picks.iter().enumerate().filter_map(|(f, p)| p.map(|j| frames[f][j].score)))
            .expect("first frame always picked");
        if best.as_ref().is_none_or(|(_, s)| score > *s) {
            best = Some((picks, score));
        }
    }
    best.ok_or(Error::Empty("proposals"))
}

/// Regressed `[x, y, w, h]` passed through a ReLU.
pub fn decode_regression<T: Scalar>(raw: [T; 4]) -> Result<BBox<T>> {
    let [x, y, w, h] = raw.map(|v| v.max(T::zero()));
    BBox::new(x, y, w, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x: f64, y: f64, w: f64, h: f64) -> BBox<f64> {
        BBox::new(x, y, w, h).unwrap()
    }

    fn sp(x: f64, score: f64) -> ScoredProposal<f64> {
        ScoredProposal { bbox: bb(x, 0.0, 10.0, 10.0), score }
    }

    #[test]
    fn offset_examples() {
        let r = bb(0.0, 0.0, 10.0, 10.0);
        assert_eq!(encode_offset(&r, &r).unwrap(), BoxOffset::zero());
        let o = encode_offset(&r, &bb(5.0, 0.0, 20.0, 10.0)).unwrap();
        assert_eq!(o.as_array(), [0.5, 0.0, 2f64.ln(), 0.0]);
        assert_eq!(decode_offset(&r, &BoxOffset::zero()).unwrap(), r);
        let ln2 = 2f64.ln();
        let d = decode_offset(&bb(3.0, 4.0, 10.0, 6.0), &BoxOffset { dx: 0.0, dy: 0.0, dlogw: ln2, dlogh: ln2 }).unwrap();
        assert_eq!((d.x(), d.y()), (3.0, 4.0));
        assert!((d.w() - 20.0).abs() < 1e-12 && (d.h() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn offset_errors() {
        let r = bb(0.0, 0.0, 10.0, 10.0);
        assert!(encode_offset(&bb(0.0, 0.0, 0.0, 1.0), &r).is_err());
        assert!(encode_offset(&r, &bb(0.0, 0.0, 1.0, 0.0)).is_err());
        let huge = BoxOffset { dx: 0.0, dy: 0.0, dlogw: 1000.0, dlogh: 0.0 };
        assert!(matches!(decode_offset(&r, &huge), Err(Error::Overflow(_))));
    }

    #[test]
    fn density() {
        let a = BoxOffset { dx: 0.1, dy: -0.2, dlogw: 0.3, dlogh: 0.0 };
        assert_eq!(density_likelihood(&a, &a, 1.0).unwrap(), 1.0);
        let b = BoxOffset { dx: 0.1 + 0.6, dy: -0.2 + 0.8, ..a };
        let l = density_likelihood(&a, &b, 1.0).unwrap();
        assert!((l - (-0.5f64).exp()).abs() < 1e-15);
        let far = BoxOffset { dx: 5.0, ..a };
        assert!(density_likelihood(&a, &far, 1.0).unwrap() < l);
        assert!(density_likelihood(&a, &b, 0.0).is_err());
    }

    #[test]
    fn density_selection() {
        let human = bb(0.0, 0.0, 10.0, 10.0);
        let props = [bb(30.0, 0.0, 10.0, 10.0), bb(10.0, 0.0, 10.0, 10.0)];
        let predicted = encode_offset(&human, &bb(11.0, 0.0, 10.0, 10.0)).unwrap();
        let (i, s) = density_select(&human, &props, &predicted, 0.5, 1.0).unwrap();
        assert_eq!(i, 1);
        assert!((s - 0.5 * (-0.005f64).exp()).abs() < 1e-15);
        assert!(density_select(&human, &[], &predicted, 0.5, 1.0).is_err());
    }

    #[test]
    fn selectors() {
        let anchor = bb(0.0, 0.0, 2.0, 2.0);
        let props = [bb(5.0, 0.0, 2.0, 2.0), bb(3.0, 0.0, 2.0, 2.0)];
        assert_eq!(shortest_distance_select(&props, &anchor).unwrap(), 1);
        assert_eq!(shortest_distance_select(&[props[0], anchor], &anchor).unwrap(), 1);
        assert_eq!(shortest_distance_select(&[props[0], props[0]], &anchor).unwrap(), 0);
        assert!(shortest_distance_select(&[], &anchor).is_err());
        let three = [anchor; 3];
        assert_eq!(proposal_select_by_score(&three, &[0.1, 0.9, 0.3]).unwrap(), 1);
        assert_eq!(proposal_select_by_score(&three, &[0.3, 2.7, 0.9]).unwrap(), 1);
        assert_eq!(proposal_select_by_score(&three[..1], &[0.2]).unwrap(), 0);
        assert!(proposal_select_by_score(&three, &[0.1]).is_err());
    }

    #[test]
    fn tbd_examples() {
        let a = [bb(0.0, 0.0, 5.0, 5.0), bb(20.0, 0.0, 5.0, 5.0), bb(40.0, 3.0, 8.0, 8.0)];
        let m = tbd_match(&a, &a).unwrap();
        assert_eq!((m.pairs.clone(), m.cost), (vec![(0, 0), (1, 1), (2, 2)], 0.0));
        let shifted: Vec<_> = a.iter().map(|b| b.translate(1.0, 0.0).unwrap()).collect();
        assert_eq!(tbd_match(&a, &shifted).unwrap().pairs, vec![(0, 0), (1, 1), (2, 2)]);
        let m = tbd_match(&a[..2], &a).unwrap();
        assert_eq!((m.pairs.len(), m.unmatched_cols.clone()), (2, vec![2]));
    }

    #[test]
    fn tbd_chains() {
        let frames = vec![
            vec![sp(0.0, 0.2), sp(50.0, 0.8)],
            vec![sp(1.0, 0.4), sp(51.0, 0.6), sp(200.0, 0.1)],
            vec![sp(2.0, 0.6)],
        ];
        let ts = tbd_tracklets(&frames).unwrap();
        let shapes: Vec<_> = ts.iter().map(|t| (t.start_frame, t.members.clone())).collect();
        assert_eq!(shapes, vec![(0, vec![0, 0, 0]), (0, vec![1, 1]), (1, vec![2])]);
        assert!((ts[0].score - 0.4).abs() < 1e-15);
        assert!((ts[1].score - 0.7).abs() < 1e-15);
        assert_eq!(best_tracklet(&ts).unwrap().members, vec![1, 1]);
    }

    #[test]
    fn psot() {
        let frames = vec![
            vec![sp(0.0, 0.3), sp(50.0, 0.9)],
            vec![sp(52.0, 0.1), sp(2.0, 0.5)],
            vec![],
            vec![sp(4.0, 0.7), sp(53.0, 0.8)],
        ];
        assert_eq!(psot_track(&frames, 0).unwrap(), vec![Some(0), Some(1), None, Some(0)]);
        let (picks, score) = psot_select(&frames).unwrap();
        assert_eq!(picks, vec![Some(1), Some(0), None, Some(1)]);
        assert!((score - 0.6).abs() < 1e-15);
        assert!(psot_track(&frames, 5).is_err());
    }

    #[test]
    fn regression_relu() {
        assert_eq!(decode_regression([-3.0, 2.0, 5.0, -1.0]).unwrap().as_array(), [0.0, 2.0, 5.0, 0.0]);
    }
}

//! Test split selection: choose `n_test` videos whose summed interaction and
//! object class counts are as flat as possible, subject to per-class minima
//! and a minimum object mass in the top half of the location heatmap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest video count [`solve_exact`] will enumerate.
pub const EXACT_MAX_VIDEOS: usize = 24;

/// Geometric cooling ratio of the annealing schedule.
pub const COOLING: f64 = 0.995;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitVideo {
    pub id: String,
    pub interactions: Vec<u64>,
    pub objects: Vec<u64>,
    /// Flattened location heatmap counts, top row first.
    pub heatmap: Vec<u64>,
}

impl SplitVideo {
    /// Mass of the first `ceil(len / 2)` heatmap entries.
    pub fn top_half_mass(&self) -> u64 {
        let half = self.heatmap.len().div_ceil(2);
        self.heatmap[..half].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitProblem {
    pub videos: Vec<SplitVideo>,
    pub n_test: usize,
    /// Minimum summed count per interaction class.
    pub alpha: Vec<u64>,
    /// Minimum summed top-half heatmap mass.
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSolution {
    pub selection: Vec<bool>,
    pub selected_ids: Vec<String>,
    /// `None` when no feasible selection exists.
    pub objective: Option<f64>,
    pub feasible: bool,
}

impl SplitProblem {
    pub fn validate(&self) -> Result<()> {
        let first = self.videos.first().ok_or(Error::Empty("split videos"))?;
        let dims = (first.interactions.len(), first.objects.len(), first.heatmap.len());
        if let Some(v) = self
            .videos
            .iter()
            .find(|v| (v.interactions.len(), v.objects.len(), v.heatmap.len()) != dims)
        {
            return Err(Error::invalid(format!("video `{}` has inconsistent count lengths", v.id)));
        }
        if self.alpha.len() != dims.0 {
            return Err(Error::invalid(format!(
                "alpha has {} entries for {} interaction classes",
                self.alpha.len(),
                dims.0
            )));
        }
        if self.n_test > self.videos.len() {
            return Err(Error::invalid(format!(
                "n_test {} exceeds {} videos",
                self.n_test,
                self.videos.len()
            )));
        }
        if !self.gamma.is_finite() {
            return Err(Error::NonFinite("gamma"));
        }
        Ok(())
    }

    fn check_selection(&self, x: &[bool]) -> Result<()> {
        if x.len() != self.videos.len() {
            return Err(Error::invalid(format!("selection has {} entries for {} videos", x.len(), self.videos.len())));
        }
        Ok(())
    }
}

/// Population variance of a count vector; zero for an empty vector.
pub fn population_variance(v: &[u64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().map(|&c| c as f64).sum::<f64>() / n;
    v.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n
}

fn summed(videos: &[SplitVideo], x: &[bool], field: impl Fn(&SplitVideo) -> &[u64]) -> Vec<u64> {
    let mut acc = vec![0u64; videos.first().map_or(0, |v| field(v).len())];
    for (v, _) in videos.iter().zip(x).filter(|(_, &s)| s) {
        for (a, &c) in acc.iter_mut().zip(field(v)) {
            *a += c;
        }
    }
    acc
}

/// `Var(sum a_i x_i) + Var(sum o_i x_i)`.
pub fn objective(problem: &SplitProblem, x: &[bool]) -> Result<f64> {
    problem.check_selection(x)?;
    let a = summed(&problem.videos, x, |v| &v.interactions);
    let o = summed(&problem.videos, x, |v| &v.objects);
    Ok(population_variance(&a) + population_variance(&o))
}

pub fn feasible(problem: &SplitProblem, x: &[bool]) -> bool {
    if x.len() != problem.videos.len() || x.iter().filter(|&&s| s).count() != problem.n_test {
        return false;
    }
    let a = summed(&problem.videos, x, |v| &v.interactions);
    let top: u64 = problem.videos.iter().zip(x).filter(|(_, &s)| s).map(|(v, _)| v.top_half_mass()).sum();
    a.iter().zip(&problem.alpha).all(|(s, m)| s >= m) && top as f64 >= problem.gamma
}

fn solution(problem: &SplitProblem, selection: Vec<bool>, objective: Option<f64>) -> SplitSolution {
    let selected_ids = problem.videos.iter().zip(&selection).filter(|(_, &s)| s).map(|(v, _)| v.id.clone()).collect();
    SplitSolution { feasible: objective.is_some(), selection, selected_ids, objective }
}

/// Running sums over a partial selection.
#[derive(Clone)]
struct Sums {
    a: Vec<u64>,
    o: Vec<u64>,
    top: u64,
}

impl Sums {
    fn zero(p: &SplitProblem) -> Self {
        let v = &p.videos[0];
        Self { a: vec![0; v.interactions.len()], o: vec![0; v.objects.len()], top: 0 }
    }

    fn add(&mut self, v: &SplitVideo, top: u64) {
        self.a.iter_mut().zip(&v.interactions).for_each(|(s, &c)| *s += c);
        self.o.iter_mut().zip(&v.objects).for_each(|(s, &c)| *s += c);
        self.top += top;
    }

    fn sub(&mut self, v: &SplitVideo, top: u64) {
        self.a.iter_mut().zip(&v.interactions).for_each(|(s, &c)| *s -= c);
        self.o.iter_mut().zip(&v.objects).for_each(|(s, &c)| *s -= c);
        self.top -= top;
    }

    fn z(&self) -> f64 {
        population_variance(&self.a) + population_variance(&self.o)
    }

    fn satisfies(&self, p: &SplitProblem) -> bool {
        self.a.iter().zip(&p.alpha).all(|(s, m)| s >= m) && self.top as f64 >= p.gamma
    }

    /// Total shortfall against the class minima and the top-half mass.
    fn deficit(&self, p: &SplitProblem) -> f64 {
        let a: u64 = self.a.iter().zip(&p.alpha).map(|(s, m)| m.saturating_sub(*s)).sum();
        a as f64 + (p.gamma - self.top as f64).max(0.0)
    }
}

/// Exhaustive search over all `C(N, n_test)` selections. Among optimal
/// selections the first in lexicographic order of chosen indices wins.
pub fn solve_exact(problem: &SplitProblem) -> Result<SplitSolution> {
    problem.validate()?;
    let n = problem.videos.len();
    if n > EXACT_MAX_VIDEOS {
        return Err(Error::TooLarge { n, max: EXACT_MAX_VIDEOS });
    }
    let k = problem.n_test;
    let tops: Vec<u64> = problem.videos.iter().map(SplitVideo::top_half_mass).collect();

    let search = |prefix: Option<usize>| -> Option<(f64, Vec<usize>)> {
        let mut sums = Sums::zero(problem);
        let mut chosen = Vec::with_capacity(k);
        if let Some(f) = prefix {
            sums.add(&problem.videos[f], tops[f]);
            chosen.push(f);
        }
        let mut best = None;
        let start = prefix.map_or(0, |f| f + 1);
        enumerate(problem, &tops, start, &mut sums, &mut chosen, &mut best);
        best
    };
    // Partition by first chosen index; partitions are already in lexicographic order.
    let partials: Vec<Option<(f64, Vec<usize>)>> = if k == 0 {
        vec![search(None)]
    } else {
        (0..=n - k).into_par_iter().map(|f| search(Some(f))).collect()
    };
    let best = partials.into_iter().flatten().fold(None::<(f64, Vec<usize>)>, |acc, cand| match acc {
        Some(a) if a.0 <= cand.0 => Some(a),
        _ => Some(cand),
    });
    Ok(match best {
        Some((z, idx)) => {
            let mut x = vec![false; n];
            idx.iter().for_each(|&i| x[i] = true);
            solution(problem, x, Some(z))
        }
        None => solution(problem, vec![false; n], None),
    })
}

fn enumerate(
    p: &SplitProblem,
    tops: &[u64],
    start: usize,
    sums: &mut Sums,
    chosen: &mut Vec<usize>,
    best: &mut Option<(f64, Vec<usize>)>,
) {
    let k = p.n_test;
    if chosen.len() == k {
        if sums.satisfies(p) {
            let z = sums.z();
            if best.as_ref().is_none_or(|(b, _)| z < *b) {
                *best = Some((z, chosen.clone()));
            }
        }
        return;
    }
    let need = k - chosen.len();
    for i in start..=p.videos.len() - need {
        sums.add(&p.videos[i], tops[i]);
        chosen.push(i);
        enumerate(p, tops, i + 1, sums, chosen, best);
        chosen.pop();
        sums.sub(&p.videos[i], tops[i]);
    }
}

/// Swap-based simulated annealing from a greedy, randomly repaired start.
/// `iterations == 0` returns the start itself. Deterministic for a seed.
pub fn solve_heuristic(problem: &SplitProblem, seed: u64, iterations: usize) -> Result<SplitSolution> {
    problem.validate()?;
    let n = problem.videos.len();
    let k = problem.n_test;
    let tops: Vec<u64> = problem.videos.iter().map(SplitVideo::top_half_mass).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut x = greedy_start(problem, &tops);
    let mut sums = Sums::zero(problem);
    (0..n).filter(|&i| x[i]).for_each(|i| sums.add(&problem.videos[i], tops[i]));
    repair(problem, &tops, &mut x, &mut sums, &mut rng)?;
    if iterations == 0 || k == 0 || k == n {
        return Ok(solution(problem, x, Some(sums.z())));
    }

    let swap = |x: &[bool], sums: &Sums, i: usize, j: usize| -> Option<Sums> {
        debug_assert!(x[i] && !x[j]);
        let mut s = sums.clone();
        s.sub(&problem.videos[i], tops[i]);
        s.add(&problem.videos[j], tops[j]);
        s.satisfies(problem).then_some(s)
    };
    let pick = |x: &[bool], want: bool, rng: &mut ChaCha8Rng| -> usize {
        let pool: Vec<usize> = (0..n).filter(|&i| x[i] == want).collect();
        pool[rng.gen_range(0..pool.len())]
    };

    let mut z = sums.z();
    let t0 = {
        let mut deltas = Vec::new();
        for _ in 0..32 {
            let (i, j) = (pick(&x, true, &mut rng), pick(&x, false, &mut rng));
            if let Some(s) = swap(&x, &sums, i, j) {
                deltas.push((s.z() - z).abs());
            }
        }
        let mean = deltas.iter().sum::<f64>() / deltas.len().max(1) as f64;
        if mean > 0.0 { mean } else { 1.0 }
    };
    let mut temp = t0;
    let (mut best_x, mut best_sums, mut best_z) = (x.clone(), sums.clone(), z);
    for _ in 0..iterations {
        let (i, j) = (pick(&x, true, &mut rng), pick(&x, false, &mut rng));
        let u: f64 = rng.gen();
        if let Some(s) = swap(&x, &sums, i, j) {
            let nz = s.z();
            let delta = nz - z;
            if delta <= 0.0 || u < (-delta / temp).exp() {
                x.swap(i, j);
                sums = s;
                z = nz;
                if z < best_z {
                    (best_x, best_sums, best_z) = (x.clone(), sums.clone(), z);
                }
            }
        }
        temp *= COOLING;
        if temp < t0 * 1e-4 {
            // reheat from the incumbent
            temp = t0;
            (x, sums, z) = (best_x.clone(), best_sums.clone(), best_z);
        }
    }

    // steepest-descent polish
    let (mut x, mut sums, mut z) = (best_x, best_sums, best_z);
    loop {
        let mut step: Option<(usize, usize, Sums, f64)> = None;
        for i in (0..n).filter(|&i| x[i]) {
            for j in (0..n).filter(|&j| !x[j]) {
                if let Some(s) = swap(&x, &sums, i, j) {
                    let nz = s.z();
                    if nz < z && step.as_ref().is_none_or(|b| nz < b.3) {
                        step = Some((i, j, s, nz));
                    }
                }
            }
        }
        match step {
            Some((i, j, s, nz)) => {
                x.swap(i, j);
                sums = s;
                z = nz;
            }
            None => break,
        }
    }
    Ok(solution(problem, x, Some(z)))
}

/// Adds videos one by one, preferring the largest drop in constraint
/// shortfall, then the smallest partial objective, then the lowest index.
fn greedy_start(p: &SplitProblem, tops: &[u64]) -> Vec<bool> {
    let n = p.videos.len();
    let mut x = vec![false; n];
    let mut sums = Sums::zero(p);
    for _ in 0..p.n_test {
        let base = sums.deficit(p);
        let mut best: Option<(usize, f64, f64)> = None;
        for i in (0..n).filter(|&i| !x[i]) {
            let mut s = sums.clone();
            s.add(&p.videos[i], tops[i]);
            let gain = base - s.deficit(p);
            let z = s.z();
            let better = match best {
                None => true,
                Some((_, g, bz)) => gain > g || (gain == g && z < bz),
            };
            if better {
                best = Some((i, gain, z));
            }
        }
        let (i, _, _) = best.expect("n_test <= N leaves a candidate");
        x[i] = true;
        sums.add(&p.videos[i], tops[i]);
    }
    x
}

/// Random swaps that never increase the shortfall, until feasible.
fn repair(
    p: &SplitProblem,
    tops: &[u64],
    x: &mut [bool],
    sums: &mut Sums,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let n = x.len();
    let budget = 200 * n.max(10);
    for _ in 0..budget {
        if sums.satisfies(p) {
            return Ok(());
        }
        let sel: Vec<usize> = (0..n).filter(|&i| x[i]).collect();
        let uns: Vec<usize> = (0..n).filter(|&i| !x[i]).collect();
        if sel.is_empty() || uns.is_empty() {
            break;
        }
        let (i, j) = (sel[rng.gen_range(0..sel.len())], uns[rng.gen_range(0..uns.len())]);
        let mut s = sums.clone();
        s.sub(&p.videos[i], tops[i]);
        s.add(&p.videos[j], tops[j]);
        if s.deficit(p) <= sums.deficit(p) {
            x.swap(i, j);
            *sums = s;
        }
    }
    if sums.satisfies(p) {
        Ok(())
    } else {
        Err(Error::Infeasible(format!("no feasible split found after {budget} repair swaps")))
    }
}

//! Minimum-cost one-to-one assignment (Hungarian method with potentials).
//!
//! Rectangular problems are padded to square with a constant sentinel cost;
//! pairs that land on padding are reported as unmatched. Among all optimal
//! matchings the lexicographically smallest one (by row, then column) is
//! returned so results never depend on solver internals.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<T> {
    /// Matched `(row, column)` pairs, sorted by row.
    pub pairs: Vec<(usize, usize)>,
    /// Sum of the matched costs, accumulated in row order.
    pub cost: T,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl<T: Scalar> Assignment<T> {
    /// Column assigned to each row, `None` when the row is unmatched.
    pub fn row_to_col(&self, rows: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; rows];
        for &(r, c) in &self.pairs {
            out[r] = Some(c);
        }
        out
    }
}

/// Solves the rectangular assignment problem, matching `min(n, m)` pairs.
pub fn assignment<T: Scalar>(cost: &[Vec<T>]) -> Result<Assignment<T>> {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    if cost.iter().any(|row| row.len() != m) {
        return Err(Error::invalid("ragged cost matrix"));
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("cost matrix"));
    }
    if n == 0 || m == 0 {
        return Ok(Assignment {
            pairs: Vec::new(),
            cost: T::zero(),
            unmatched_rows: (0..n).collect(),
            unmatched_cols: (0..m).collect(),
        });
    }

    let k = n.max(m);
    let max_abs = cost.iter().flatten().fold(T::zero(), |a, &c| a.max(c.abs()));
    let sentinel = if max_abs > T::zero() { T::lit(10.0) * max_abs } else { T::one() };
    let square: Vec<Vec<T>> = (0..k)
        .map(|i| (0..k).map(|j| if i < n && j < m { cost[i][j] } else { sentinel }).collect())
        .collect();

    let (mut col_of, u, v) = hungarian(&square);
    let tol = T::epsilon() * T::lit(64.0) * (max_abs * T::lit(10.0) + T::one()) * T::count(k);
    let tight = |i: usize, j: usize| (square[i][j] - u[i] - v[j]).abs() <= tol;
    lexmin_refine(k, &mut col_of, tight);

    let mut pairs = Vec::with_capacity(n.min(m));
    let mut total = T::zero();
    let mut unmatched_rows = Vec::new();
    let mut col_used = vec![false; m];
    for (i, &j) in col_of.iter().enumerate().take(n) {
        if j < m {
            pairs.push((i, j));
            total = total + cost[i][j];
            col_used[j] = true;
        } else {
            unmatched_rows.push(i);
        }
    }
    let unmatched_cols = (0..m).filter(|&j| !col_used[j]).collect();
    Ok(Assignment { pairs, cost: total, unmatched_rows, unmatched_cols })
}

/// Shortest augmenting path Hungarian algorithm on a square matrix.
///
/// Returns the column of every row plus the optimal row and column potentials
/// (`c[i][j] - u[i] - v[j] >= 0`, with equality on matched pairs).
fn hungarian<T: Scalar>(c: &[Vec<T>]) -> (Vec<usize>, Vec<T>, Vec<T>) {
    let n = c.len();
    let inf = T::infinity();
    // 1-based internally; index 0 is the virtual root.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = c[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] = u[row_of_col[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of = vec![0usize; n];
    for j in 1..=n {
        col_of[row_of_col[j] - 1] = j - 1;
    }
    (col_of, u[1..].to_vec(), v[1..].to_vec())
}

/// Moves a perfect matching on the tight subgraph to the lexicographically
/// smallest perfect matching of that subgraph.
///
/// Every optimal assignment is a perfect matching of the tight subgraph for
/// any optimal dual, so this selects the lexmin optimum.
fn lexmin_refine(n: usize, col_of: &mut [usize], tight: impl Fn(usize, usize) -> bool) {
    let mut row_of = vec![0usize; n];
    for (i, &j) in col_of.iter().enumerate() {
        row_of[j] = i;
    }
    for i in 0..n {
        let target = col_of[i];
        for j in 0..target {
            if !tight(i, j) || row_of[j] < i {
                continue;
            }
            // Row `start` loses column j; it must reach `target` through
            // rows that are not yet fixed.
            let start = row_of[j];
            if let Some(path) = alternating_path(n, i, start, j, target, col_of, &row_of, &tight) {
                for (r, c) in path {
                    col_of[r] = c;
                    row_of[c] = r;
                }
                col_of[i] = j;
                row_of[j] = i;
                break;
            }
        }
    }
}

/// BFS from `start` over tight edges to the free column `target`, never using
/// column `blocked` or rows `<= fixed`. Returns the row reassignments.
#[allow(clippy::too_many_arguments)]
fn alternating_path(
    n: usize,
    fixed: usize,
    start: usize,
    blocked: usize,
    target: usize,
    col_of: &[usize],
    row_of: &[usize],
    tight: &impl Fn(usize, usize) -> bool,
) -> Option<Vec<(usize, usize)>> {
    let mut prev_row: Vec<Option<usize>> = vec![None; n];
    let mut seen_row = vec![false; n];
    let mut queue = std::collections::VecDeque::from([start]);
    seen_row[start] = true;
    while let Some(r) = queue.pop_front() {
        for c in 0..n {
            if c == blocked || c == col_of[r] || !tight(r, c) {
                continue;
            }
            if c == target {
                // Walk back: r takes c, each predecessor row takes the column
                // the next row vacated.
                let mut path = vec![(r, c)];
                let mut cur = r;
                while let Some(p) = prev_row[cur] {
                    path.push((p, col_of[cur]));
                    cur = p;
                }
                return Some(path);
            }
            let next = row_of[c];
            if next <= fixed || seen_row[next] {
                continue;
            }
            seen_row[next] = true;
            prev_row[next] = Some(r);
            queue.push_back(next);
        }
    }
    None
}

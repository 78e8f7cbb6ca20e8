//! Minimum-cost rectangular assignment (Hungarian method, O(n²m)).
//!
//! Shortest augmenting paths with row/column potentials. Rectangular
//! inputs are solved with rows ≤ columns, transposing when needed.

use crate::error::{Result, TextonError};

/// Injective pairing of rows to columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `(row, column)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
    /// Cost of each pair, aligned with `pairs`.
    pub pair_costs: Vec<f64>,
}

impl Matching {
    pub fn empty() -> Self {
        Self {
            pairs: Vec::new(),
            total_cost: 0.0,
            pair_costs: Vec::new(),
        }
    }

    /// Column matched to `row`, if any.
    pub fn partner_of_row(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == row).map(|p| p.1)
    }

    pub fn partner_of_column(&self, col: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.1 == col).map(|p| p.0)
    }
}

/// Solve `rows ≤ cols`; returns the column of every row.
fn solve_wide(cost: &[Vec<f64>], cols: usize) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; cols + 1];
    // p[j]: row (1-based) assigned to column j; way[j]: previous column on the path.
    let mut p = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![usize::MAX; n];
    for j in 1..=cols {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Minimum-total-cost matching of `min(n, m)` pairs.
///
/// Entries must be finite and nonnegative. Ties resolve deterministically:
/// rows are inserted in index order and the lowest column wins each scan.
pub fn hungarian_match(cost: &[Vec<f64>]) -> Result<Matching> {
    let n = cost.len();
    if n == 0 {
        return Ok(Matching::empty());
    }
    let m = cost[0].len();
    if cost.iter().any(|r| r.len() != m) {
        return Err(TextonError::DimensionMismatch("ragged cost matrix".into()));
    }
    if m == 0 {
        return Ok(Matching::empty());
    }
    if let Some(bad) = cost.iter().flatten().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(crate::error::invalid(
            "cost",
            format!("entries must be finite and nonnegative, found {bad}"),
        ));
    }

    let mut pairs: Vec<(usize, usize)> = if n <= m {
        solve_wide(cost, m)
            .into_iter()
            .enumerate()
            .collect()
    } else {
        let transposed: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| cost[i][j]).collect()).collect();
        solve_wide(&transposed, n)
            .into_iter()
            .enumerate()
            .map(|(j, i)| (i, j))
            .collect()
    };
    pairs.sort_unstable();
    let pair_costs: Vec<f64> = pairs.iter().map(|&(i, j)| cost[i][j]).collect();
    Ok(Matching {
        total_cost: pair_costs.iter().sum(),
        pairs,
        pair_costs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_preference() {
        let m = hungarian_match(&[vec![1.0, 2.0], vec![3.0, 1.0]]).unwrap();
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(m.total_cost, 2.0);
    }

    #[test]
    fn anti_diagonal_preference() {
        let m = hungarian_match(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(m.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(m.total_cost, 2.0);
    }

    #[test]
    fn zero_diagonal() {
        let c: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 0.0 } else { 1.0 + j as f64 }).collect())
            .collect();
        let m = hungarian_match(&c).unwrap();
        assert_eq!(m.pairs, (0..4).map(|i| (i, i)).collect::<Vec<_>>());
        assert_eq!(m.total_cost, 0.0);
    }

    #[test]
    fn empty_and_rectangular() {
        assert_eq!(hungarian_match(&[]).unwrap(), Matching::empty());
        let tall = hungarian_match(&[vec![5.0], vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(tall.pairs, vec![(1, 0)]);
        let wide = hungarian_match(&[vec![5.0, 1.0, 3.0]]).unwrap();
        assert_eq!(wide.pairs, vec![(0, 1)]);
    }

    #[test]
    fn rejects_negative_entries() {
        assert!(hungarian_match(&[vec![-1.0]]).is_err());
        assert!(hungarian_match(&[vec![f64::NAN]]).is_err());
    }
}

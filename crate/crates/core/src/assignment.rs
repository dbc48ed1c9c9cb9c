//! Rectangular linear assignment.
//!
//! Shortest-augmenting-path solver (Hungarian / Jonker-Volgenant family) in
//! O(n²m), plus a gated wrapper that treats entries above a threshold as
//! forbidden. The gated solve maximises the number of allowed pairs first and
//! minimises total cost among those.

/// Result of a gated assignment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    /// `(row, col)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl Assignment {
    pub fn total_cost(&self, cost: &[Vec<f64>]) -> f64 {
        self.pairs.iter().map(|&(r, c)| cost[r][c]).sum()
    }

    /// Column matched to `row`, if any.
    pub fn col_for(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == row).map(|p| p.1)
    }
}

/// Minimum-cost assignment of every row of a `rows × cols` matrix to a
/// distinct column (or every column to a distinct row when `rows > cols`).
/// Returns `result[row] = Some(col)`.
pub fn solve_dense(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = cost.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = cost[0].len();
    if cols == 0 {
        return vec![None; rows];
    }
    if rows <= cols {
        hungarian(rows, cols, |i, j| cost[i][j])
    } else {
        let by_col = hungarian(cols, rows, |i, j| cost[j][i]);
        let mut out = vec![None; rows];
        for (c, r) in by_col.into_iter().enumerate() {
            if let Some(r) = r {
                out[r] = Some(c);
            }
        }
        out
    }
}

// n ≤ m. Potentials-based shortest augmenting path, 1-indexed internally.
fn hungarian(n: usize, m: usize, a: impl Fn(usize, usize) -> f64) -> Vec<Option<usize>> {
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
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
            for j in 0..=m {
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
    let mut out = vec![None; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = Some(j - 1);
        }
    }
    out
}

/// Gated assignment: entries with `cost > gate` (or non-finite) may not be
/// paired. Among assignments using only allowed entries, the solver picks
/// one with the most pairs and, among those, the least total cost.
pub fn assign_gated(cost: &[Vec<f64>], gate: f64) -> Assignment {
    let cols = cost.first().map_or(0, |r| r.len());
    assign_gated_cols(cost, cols, gate)
}

/// [`assign_gated`] with the column count given explicitly, so that a
/// matrix with no rows still reports every column as unmatched.
pub fn assign_gated_cols(cost: &[Vec<f64>], cols: usize, gate: f64) -> Assignment {
    let rows = cost.len();
    let allowed = |c: f64| c.is_finite() && c <= gate;

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in cost {
        for &c in row {
            if allowed(c) {
                lo = lo.min(c);
                hi = hi.max(c);
            }
        }
    }
    if !lo.is_finite() {
        return Assignment {
            pairs: Vec::new(),
            unmatched_rows: (0..rows).collect(),
            unmatched_cols: (0..cols).collect(),
        };
    }
    // Shift allowed costs to [1, span+1] and price forbidden entries above
    // any achievable sum of allowed ones, so trading one forbidden pair for
    // an allowed pair always wins.
    let k = rows.min(cols) as f64;
    let span = hi - lo + 1.0;
    let big = (k + 1.0) * span + 1.0;
    let shifted: Vec<Vec<f64>> = cost
        .iter()
        .map(|row| {
            row.iter()
                .map(|&c| if allowed(c) { c - lo + 1.0 } else { big })
                .collect()
        })
        .collect();

    let raw = solve_dense(&shifted);
    let mut col_used = vec![false; cols];
    let mut pairs = Vec::new();
    let mut unmatched_rows = Vec::new();
    for (r, c) in raw.into_iter().enumerate() {
        match c {
            Some(c) if allowed(cost[r][c]) => {
                col_used[c] = true;
                pairs.push((r, c));
            }
            _ => unmatched_rows.push(r),
        }
    }
    let unmatched_cols = (0..cols).filter(|&c| !col_used[c]).collect();
    Assignment {
        pairs,
        unmatched_rows,
        unmatched_cols,
    }
}

//! Dense phase-1 simplex for small feasibility problems `A x = b, x >= 0`.
//!
//! Pivoting follows Bland's rule (lowest eligible index for both the entering
//! and the leaving variable), which guarantees termination on degenerate
//! problems. Problem sizes here are a few dozen variables at most.

const PIVOT_EPS: f64 = 1e-12;

/// Outcome of [`find_feasible`].
#[derive(Debug, Clone, PartialEq)]
pub enum Phase1 {
    /// A point with `x >= 0` and `|A x − b|_1 <= threshold`.
    Feasible { x: Vec<f64>, residual: f64 },
    /// The minimal sum of artificial variables exceeds the threshold.
    Infeasible { residual: f64 },
}

/// Indices of a maximal set of linearly independent rows of `a` (kept in
/// original order), plus the largest right-hand-side inconsistency met among
/// the dependent rows.
pub fn independent_rows(a: &[Vec<f64>], b: &[f64], tol: f64) -> (Vec<usize>, f64) {
    // Each kept row is stored in reduced form together with its pivot column
    // so later rows can be eliminated against it.
    let mut basis: Vec<(Vec<f64>, f64, usize)> = Vec::new();
    let mut keep = Vec::new();
    let mut inconsistency: f64 = 0.0;
    for (r, (row, &rhs)) in a.iter().zip(b).enumerate() {
        let mut v = row.clone();
        let mut c = rhs;
        for (brow, brhs, pivot) in &basis {
            let f = v[*pivot];
            if f != 0.0 {
                for (x, y) in v.iter_mut().zip(brow) {
                    *x -= f * y;
                }
                c -= f * brhs;
            }
        }
        let (pivot, max) = v
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(pi, pm), (i, x)| if x.abs() > pm { (i, x.abs()) } else { (pi, pm) });
        if max > tol {
            let scale = v[pivot];
            for x in v.iter_mut() {
                *x /= scale;
            }
            c /= scale;
            // keep previously stored rows reduced in the new pivot column
            for (brow, brhs, _) in basis.iter_mut() {
                let f = brow[pivot];
                if f != 0.0 {
                    for (x, y) in brow.iter_mut().zip(&v) {
                        *x -= f * y;
                    }
                    *brhs -= f * c;
                }
            }
            basis.push((v, c, pivot));
            keep.push(r);
        } else {
            inconsistency = inconsistency.max(c.abs());
        }
    }
    (keep, inconsistency)
}

/// Phase-1 simplex: minimizes the sum of artificial variables for
/// `A x = b, x >= 0`. Rows of `a` must have equal length.
pub fn find_feasible(a: &[Vec<f64>], b: &[f64], threshold: f64) -> Phase1 {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    assert_eq!(b.len(), m, "rhs length");
    let width = n + m + 1;
    let rhs = width - 1;

    let mut t = vec![vec![0.0; width]; m];
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][rhs] = sign * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    // reduced costs of the phase-1 objective; artificials start at zero
    let mut cost = vec![0.0; width];
    for row in &t {
        for j in 0..n {
            cost[j] -= row[j];
        }
        cost[rhs] -= row[rhs];
    }

    while let Some(enter) = (0..n + m).find(|&j| cost[j] < -PIVOT_EPS) {
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > PIVOT_EPS {
                let ratio = t[i][rhs] / t[i][enter];
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best - PIVOT_EPS || (ratio <= best + PIVOT_EPS && basis[i] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        // Phase-1 objective is bounded below by zero, so an entering column
        // always has a positive entry.
        let Some(row) = leave else { break };
        pivot(&mut t, &mut cost, row, enter);
        basis[row] = enter;
    }

    let mut x = vec![0.0; n];
    let mut residual = 0.0;
    for (i, &var) in basis.iter().enumerate() {
        let value = t[i][rhs];
        if var < n {
            x[var] = value.max(0.0);
        } else {
            residual += value.abs();
        }
    }
    if residual <= threshold {
        Phase1::Feasible { x, residual }
    } else {
        Phase1::Infeasible { residual }
    }
}

fn pivot(t: &mut [Vec<f64>], cost: &mut [f64], row: usize, col: usize) {
    let p = t[row][col];
    for x in t[row].iter_mut() {
        *x /= p;
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i != row {
            let f = r[col];
            if f != 0.0 {
                for (x, y) in r.iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
            }
        }
    }
    let f = cost[col];
    for (x, y) in cost.iter_mut().zip(&pivot_row) {
        *x -= f * y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_solves(a: &[Vec<f64>], b: &[f64], x: &[f64]) {
        for (row, rhs) in a.iter().zip(b) {
            let lhs: f64 = row.iter().zip(x).map(|(p, q)| p * q).sum();
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
        assert!(x.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn finds_point_in_simplex() {
        let a = vec![vec![1.0, 1.0, 1.0], vec![1.0, -1.0, 0.0]];
        let b = vec![1.0, 0.2];
        match find_feasible(&a, &b, 1e-12) {
            Phase1::Feasible { x, .. } => assert_solves(&a, &b, &x),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_rhs_rows_are_flipped() {
        let a = vec![vec![-1.0, -2.0]];
        let b = vec![-4.0];
        match find_feasible(&a, &b, 1e-12) {
            Phase1::Feasible { x, .. } => assert_solves(&a, &b, &x),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasibility() {
        // x + y = 1 and x + y = 2
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let b = vec![1.0, 2.0];
        match find_feasible(&a, &b, 1e-12) {
            Phase1::Infeasible { residual } => assert!((residual - 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        // x − y = −1 with x, y >= 0 is fine; x + y = −1 is not
        assert!(matches!(find_feasible(&[vec![1.0, 1.0]], &[-1.0], 1e-12), Phase1::Infeasible { .. }));
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Many redundant and degenerate constraints around the origin.
        let a = vec![
            vec![1.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0, 1.0],
        ];
        let b = vec![0.5, 0.5, 1.0, 0.5, 0.5];
        match find_feasible(&a, &b, 1e-12) {
            Phase1::Feasible { x, .. } => assert_solves(&a, &b, &x),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let a = vec![
            vec![1.0, 1.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 2.0, 1.0],
            vec![2.0, 2.0, 0.0],
        ];
        let b = vec![1.0, 1.0, 2.0, 2.0];
        let (keep, bad) = independent_rows(&a, &b, 1e-12);
        assert_eq!(keep, vec![0, 1]);
        assert!(bad < 1e-15);
        let (_, bad) = independent_rows(&a, &[1.0, 1.0, 2.5, 2.0], 1e-12);
        assert!((bad - 0.5).abs() < 1e-12);
    }
}

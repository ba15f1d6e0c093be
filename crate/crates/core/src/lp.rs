//! Small dense solvers for the weight problem: a two-phase simplex for
//! `min cᵀx s.t. Ax = b, x ≥ 0`, and Lawson–Hanson nonnegative least squares
//! for infeasibility diagnostics.

use nalgebra::{DMatrix, DVector};

/// Pivot and feasibility tolerance.
pub const LP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible { phase_one_residual: f64 },
    Unbounded,
}

struct Tableau {
    rows: usize,
    cols: usize,
    // rows × (cols + 1); last column is the right-hand side
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Reduced costs of `cost` over `allowed` columns for the current basis.
    fn reduced_costs(&self, cost: &[f64], allowed: &[bool]) -> Vec<f64> {
        (0..self.cols)
            .map(|j| {
                if !allowed[j] {
                    return f64::INFINITY;
                }
                let z: f64 = (0..self.rows).map(|i| cost[self.basis[i]] * self.t[i][j]).sum();
                cost[j] - z
            })
            .collect()
    }

    /// Bland's rule: lowest-index improving column, lowest-index tying row.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> bool {
        let max_iter = 50 * (self.rows + self.cols) + 1000;
        for _ in 0..max_iter {
            let rc = self.reduced_costs(cost, allowed);
            let Some(enter) = (0..self.cols).find(|&j| rc[j] < -LP_TOL) else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.t[i][enter];
                if a > LP_TOL {
                    let ratio = self.t[i][self.cols] / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-14
                                || (ratio <= lr + 1e-14 && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
        true
    }
}

/// Two-phase simplex on the equality-form problem.
pub fn simplex(a: &DMatrix<f64>, b: &[f64], c: &[f64]) -> LpOutcome {
    let m = a.nrows();
    let n = a.ncols();
    assert_eq!(b.len(), m);
    assert_eq!(c.len(), n);
    if m == 0 {
        return LpOutcome::Optimal {
            x: vec![0.0; n],
            objective: 0.0,
        };
    }
    // columns: n structural, then m artificials
    let cols = n + m;
    let mut t = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; cols + 1];
        for j in 0..n {
            row[j] = sign * a[(i, j)];
        }
        row[n + i] = 1.0;
        row[cols] = sign * b[i];
        t.push(row);
    }
    let mut tab = Tableau {
        rows: m,
        cols,
        t,
        basis: (n..n + m).collect(),
    };

    let mut phase_one_cost = vec![0.0; cols];
    for v in phase_one_cost.iter_mut().skip(n) {
        *v = 1.0;
    }
    let all = vec![true; cols];
    tab.optimize(&phase_one_cost, &all);
    let infeas: f64 = (0..m)
        .filter(|&i| tab.basis[i] >= n)
        .map(|i| tab.t[i][cols].abs())
        .sum();
    let scale = b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    if infeas > LP_TOL * scale * (m as f64).sqrt().max(1.0) * 10.0 {
        return LpOutcome::Infeasible {
            phase_one_residual: infeas,
        };
    }

    // drive zero-level artificials out; rows with no structural entry are redundant
    let mut keep = vec![true; m];
    for i in 0..m {
        if tab.basis[i] >= n {
            match (0..n).find(|&j| tab.t[i][j].abs() > 1e-9) {
                Some(j) => tab.pivot(i, j),
                None => keep[i] = false,
            }
        }
    }
    if keep.iter().any(|k| !k) {
        let mut t = Vec::new();
        let mut basis = Vec::new();
        for i in 0..m {
            if keep[i] {
                t.push(tab.t[i].clone());
                basis.push(tab.basis[i]);
            }
        }
        tab.rows = t.len();
        tab.t = t;
        tab.basis = basis;
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(c);
    let mut allowed = vec![true; cols];
    for v in allowed.iter_mut().skip(n) {
        *v = false;
    }
    if !tab.optimize(&cost, &allowed) {
        return LpOutcome::Unbounded;
    }

    let mut x = vec![0.0; n];
    for i in 0..tab.rows {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.t[i][cols];
        }
    }
    let basic: Vec<usize> = tab.basis.iter().copied().filter(|&j| j < n).collect();
    refine_basic_solution(a, b, &basic, &mut x);
    let objective = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    LpOutcome::Optimal { x, objective }
}

/// One step of iterative refinement on `A_B x_B = b` (normal equations), so
/// the reported point satisfies the equalities to machine precision rather
/// than to accumulated pivot error. Kept only if it lowers the residual.
fn refine_basic_solution(a: &DMatrix<f64>, b: &[f64], basic: &[usize], x: &mut [f64]) {
    if basic.is_empty() {
        return;
    }
    let ab = DMatrix::from_fn(a.nrows(), basic.len(), |i, k| a[(i, basic[k])]);
    let xb = DVector::from_iterator(basic.len(), basic.iter().map(|&j| x[j]));
    let rhs = DVector::from_column_slice(b);
    let r = &rhs - &ab * &xb;
    let normal = ab.transpose() * &ab;
    let Some(dx) = normal.lu().solve(&(ab.transpose() * &r)) else {
        return;
    };
    let refined = &xb + dx;
    let new_r = (&rhs - &ab * &refined).amax();
    if new_r < r.amax() && refined.iter().all(|v| *v > -1e-9) {
        for (k, &j) in basic.iter().enumerate() {
            x[j] = refined[k];
        }
    }
}

/// Lawson–Hanson active-set NNLS: `argmin ‖Ax − b‖₂, x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &[f64]) -> (Vec<f64>, f64) {
    let n = a.ncols();
    let bv = DVector::from_column_slice(b);
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.norm().max(1.0);
    for _ in 0..(3 * n + 10) {
        let w = a.transpose() * (&bv - a * &x);
        let cand = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
        let Some(j) = cand else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = DMatrix::from_fn(a.nrows(), idx.len(), |i, k| a[(i, idx[k])]);
            let z = sub
                .svd(true, true)
                .solve(&bv, 1e-14)
                .unwrap_or_else(|_| DVector::zeros(idx.len()));
            if z.iter().all(|v| *v > 0.0) {
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &j) in idx.iter().enumerate() {
                if z[k] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z[k]));
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z[k] - x[j]);
                if x[j].abs() < 1e-14 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    let residual = (&bv - a * &x).norm();
    (x.iter().copied().collect(), residual)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn simple_feasible_problem() {
        // min x + y  s.t. x + 2y = 2, x, y ≥ 0  → y = 1
        let a = mat(&[&[1.0, 2.0]]);
        match simplex(&a, &[2.0], &[1.0, 1.0]) {
            LpOutcome::Optimal { x, objective } => {
                assert!((objective - 1.0).abs() < 1e-12);
                assert!((x[1] - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_rhs_and_redundant_rows() {
        // x − y = −1 twice, min x + y → x = 0, y = 1
        let a = mat(&[&[1.0, -1.0], &[2.0, -2.0]]);
        match simplex(&a, &[-1.0, -2.0], &[1.0, 1.0]) {
            LpOutcome::Optimal { x, .. } => {
                assert!(x[0].abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_detected() {
        // x + y = −1 with x, y ≥ 0
        let a = mat(&[&[1.0, 1.0]]);
        assert!(matches!(
            simplex(&a, &[-1.0], &[1.0, 1.0]),
            LpOutcome::Infeasible { .. }
        ));
    }

    #[test]
    fn unbounded_detected() {
        // min −x s.t. x − y = 0
        let a = mat(&[&[1.0, -1.0]]);
        assert_eq!(simplex(&a, &[0.0], &[-1.0, 0.0]), LpOutcome::Unbounded);
    }

    #[test]
    fn brute_force_vertex_agreement() {
        // three equalities in five variables: enumerate all bases as an oracle
        let a = mat(&[
            &[1.0, 1.0, -1.0, -1.0, 0.5],
            &[1.0, -1.0, 1.0, -1.0, 0.0],
            &[1.0, -1.0, -1.0, 1.0, 2.0],
        ]);
        let b = [-1.0, -1.0, 2.0];
        let c = [1.0; 5];
        let LpOutcome::Optimal { objective, x } = simplex(&a, &b, &c) else {
            panic!("expected optimum")
        };
        let mut best = f64::INFINITY;
        for i in 0..5 {
            for j in (i + 1)..5 {
                for k in (j + 1)..5 {
                    let sub = DMatrix::from_fn(3, 3, |r, s| a[(r, [i, j, k][s])]);
                    if let Some(inv) = sub.clone().try_inverse() {
                        let sol = inv * DVector::from_column_slice(&b);
                        if sol.iter().all(|v| *v >= -1e-12) {
                            best = best.min(sol.sum());
                        }
                    }
                }
            }
        }
        assert!((objective - best).abs() < 1e-12);
        let ax = &a * DVector::from_vec(x);
        for r in 0..3 {
            assert!((ax[r] - b[r]).abs() < 1e-12);
        }
    }

    #[test]
    fn nnls_matches_known_solution() {
        let a = mat(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let (x, res) = nnls(&a, &[1.0, -1.0, 0.0]);
        // y clamps to zero; x minimizes (x−1)² + x² → 1/2
        assert!((x[0] - 0.5).abs() < 1e-12);
        assert_eq!(x[1], 0.0);
        assert!((res - (0.25f64 + 1.0 + 0.25).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nnls_exact_when_consistent() {
        let a = mat(&[&[1.0, 2.0], &[3.0, 1.0]]);
        let (x, res) = nnls(&a, &[5.0, 5.0]);
        assert!(res < 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nearly_degenerate_rows_keep_equalities() {
        // pivot noise at the 1e-15 level must not leak into the solution
        let a = DMatrix::from_row_slice(
            3,
            4,
            &[
                1.0, 1.0 + 7e-16, -1.0, -1.0 - 7e-16, 1.0, -1.0 - 2e-16, -1.0, 1.0 + 1e-15, 1.0,
                -1.0 - 4e-16, 1.0, -1.0 - 9e-16,
            ],
        );
        let LpOutcome::Optimal { x, objective } = simplex(&a, &[1.0, 1.0, 0.0], &[1.0; 4]) else {
            panic!("feasible problem");
        };
        assert!((objective - 2.0).abs() < 1e-12);
        let r = &a * DVector::from_column_slice(&x) - DVector::from_column_slice(&[1.0, 1.0, 0.0]);
        assert!(r.amax() < 1e-14);
    }
}

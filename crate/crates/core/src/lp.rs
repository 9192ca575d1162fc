//! Dense tableau simplex for standard-form programs `A x = b, x >= 0`.
//!
//! Phase 1 minimizes the sum of artificial variables `z` in
//! `A x + E z = b` where `E` is diagonal with `E_ii = sign(b_i)`, started from
//! `x = 0, z = |b|`. Phase 2 optionally minimizes a linear objective from the
//! feasible basis found. Both phases use Bland's rule, so the pivot sequence
//! is fully determined by the input.

/// Reduced costs above `-PRICING_TOL` count as non-negative.
const PRICING_TOL: f64 = 1e-12;
/// Smallest admissible pivot magnitude in the ratio test.
const PIVOT_TOL: f64 = 1e-12;
/// Pivot magnitude needed to drive a zero artificial out of the basis.
const DRIVE_OUT_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible { phase_one_objective: f64 },
    Unbounded,
}

/// Result of phase 1 alone.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOneSolution {
    /// Values of the structural variables.
    pub x: Vec<f64>,
    /// Final value of `1^T z`.
    pub objective: f64,
    /// Final artificial values, one per row.
    pub artificial: Vec<f64>,
    pub pivots: usize,
}

struct Tableau {
    rows: usize,
    structural: usize,
    // rows x (structural + rows + 1); last column is the right-hand side
    data: Vec<f64>,
    // reduced costs, last entry is minus the objective value
    cost: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn width(&self) -> usize {
        self.structural + self.rows + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width() - 1)
    }

    fn new(a: &[Vec<f64>], b: &[f64]) -> Self {
        let rows = b.len();
        let structural = a.first().map_or(0, Vec::len);
        let width = structural + rows + 1;
        let mut data = vec![0.0; rows * width];
        for i in 0..rows {
            // negating a row with b_i < 0 is the E_ii = -1 column in disguise
            let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..structural {
                data[i * width + j] = sign * a[i][j];
            }
            data[i * width + structural + i] = 1.0;
            data[i * width + width - 1] = sign * b[i];
        }
        let mut cost = vec![0.0; width];
        for i in 0..rows {
            for j in 0..structural {
                cost[j] -= data[i * width + j];
            }
            cost[width - 1] -= data[i * width + width - 1];
        }
        Tableau {
            rows,
            structural,
            data,
            cost,
            basis: (structural..structural + rows).collect(),
            pivots: 0,
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.width();
        let p = self.at(row, col);
        for j in 0..width {
            self.data[row * width + j] /= p;
        }
        self.data[row * width + col] = 1.0;
        for i in 0..self.rows {
            if i == row {
                continue;
            }
            let f = self.data[i * width + col];
            if f != 0.0 {
                for j in 0..width {
                    self.data[i * width + j] -= f * self.data[row * width + j];
                }
                self.data[i * width + col] = 0.0;
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for j in 0..width {
                self.cost[j] -= f * self.data[row * width + j];
            }
            self.cost[col] = 0.0;
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Runs Bland's rule over columns `0..allowed`. Returns false if unbounded.
    fn optimize(&mut self, allowed: usize) -> bool {
        while self.pivots < MAX_PIVOTS {
            let Some(col) = (0..allowed).find(|&j| self.cost[j] < -PRICING_TOL) else {
                return true;
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12
                                || ((ratio - br).abs() <= 1e-12 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
        true
    }

    fn objective(&self) -> f64 {
        -self.cost[self.width() - 1]
    }

    fn values(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.structural + self.rows];
        for (i, &j) in self.basis.iter().enumerate() {
            x[j] = self.rhs(i);
        }
        x
    }
}

fn check_shape(a: &[Vec<f64>], b: &[f64]) {
    assert_eq!(a.len(), b.len(), "row count of A must match length of b");
    if let Some(first) = a.first() {
        assert!(a.iter().all(|r| r.len() == first.len()), "ragged constraint matrix");
    }
}

/// Phase 1 of the simplex method on `A x = b, x >= 0`.
pub fn phase_one(a: &[Vec<f64>], b: &[f64]) -> PhaseOneSolution {
    check_shape(a, b);
    let mut t = Tableau::new(a, b);
    let allowed = t.structural;
    // phase 1 is bounded below by 0
    t.optimize(allowed);
    let values = t.values();
    let n = t.structural;
    PhaseOneSolution {
        x: values[..n].iter().map(|v| v.max(0.0)).collect(),
        objective: t.objective().max(0.0),
        artificial: values[n..].to_vec(),
        pivots: t.pivots,
    }
}

/// Minimizes `c^T x` subject to `A x = b, x >= 0`. A phase-1 objective above
/// `feasibility_tol` reports infeasibility.
pub fn minimize(a: &[Vec<f64>], b: &[f64], c: &[f64], feasibility_tol: f64) -> LpOutcome {
    check_shape(a, b);
    let mut t = Tableau::new(a, b);
    let n = t.structural;
    assert_eq!(c.len(), n, "cost vector length must match column count");
    t.optimize(n);
    let phase_one_objective = t.objective();
    if phase_one_objective > feasibility_tol {
        return LpOutcome::Infeasible {
            phase_one_objective,
        };
    }
    // drive zero-level artificials out where a structural pivot exists
    for i in 0..t.rows {
        if t.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t.at(i, j).abs() > DRIVE_OUT_TOL) {
                t.pivot(i, j);
            }
        }
    }
    let width = t.width();
    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(c);
    for i in 0..t.rows {
        let cb = if t.basis[i] < n { c[t.basis[i]] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..width {
                cost[j] -= cb * t.at(i, j);
            }
        }
    }
    t.cost = cost;
    if !t.optimize(n) {
        return LpOutcome::Unbounded;
    }
    let values = t.values();
    let x: Vec<f64> = values[..n].iter().map(|v| v.max(0.0)).collect();
    let objective = x.iter().zip(c).map(|(x, c)| x * c).sum();
    LpOutcome::Optimal { x, objective }
}

/// Maximizes `c^T x` subject to `A x = b, x >= 0`.
pub fn maximize(a: &[Vec<f64>], b: &[f64], c: &[f64], feasibility_tol: f64) -> LpOutcome {
    let neg: Vec<f64> = c.iter().map(|v| -v).collect();
    match minimize(a, b, &neg, feasibility_tol) {
        LpOutcome::Optimal { x, objective } => LpOutcome::Optimal {
            x,
            objective: -objective,
        },
        other => other,
    }
}

/// Optimal value of the discrete transportation problem
/// `extremize sum_ij i j P_ij` subject to row sums `rows`, column sums `cols`.
///
/// Row and column masses must have equal totals. Returns `None` if the
/// solver reports anything other than an optimum.
pub fn transportation_cross_moment(rows: &[f64], cols: &[f64], maximize_moment: bool) -> Option<f64> {
    let (n1, n2) = (rows.len(), cols.len());
    let vars = n1 * n2;
    let mut a = Vec::with_capacity(n1 + n2);
    let mut b = Vec::with_capacity(n1 + n2);
    for i in 0..n1 {
        let mut row = vec![0.0; vars];
        for j in 0..n2 {
            row[i * n2 + j] = 1.0;
        }
        a.push(row);
        b.push(rows[i]);
    }
    for j in 0..n2 {
        let mut row = vec![0.0; vars];
        for i in 0..n1 {
            row[i * n2 + j] = 1.0;
        }
        a.push(row);
        b.push(cols[j]);
    }
    let c: Vec<f64> = (0..vars)
        .map(|v| ((v / n2) * (v % n2)) as f64)
        .collect();
    let outcome = if maximize_moment {
        maximize(&a, &b, &c, 1e-9)
    } else {
        minimize(&a, &b, &c, 1e-9)
    };
    match outcome {
        LpOutcome::Optimal { objective, .. } => Some(objective),
        _ => None,
    }
}

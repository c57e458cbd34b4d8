//! Nonideal measurement: expressing one POVM as a column-stochastic smearing
//! `M_i = Σ_j λ_ij N_j` of another, the average-row-entropy measure of the
//! smearing, and the Martens bound for joint nonideal measurement of two
//! maximal PVMs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::measure::{PovmMeasure, PvmMeasure};
use crate::operator::Operator;
use crate::{Error, Result, DEFAULT_TOL};

/// Residual (Hilbert–Schmidt norm) separating an exact decomposition from an
/// approximate one.
pub const DECOMPOSITION_RESIDUAL: f64 = 1e-8;

const ACTIVE_SET_MAX_ITER: usize = 1000;
const STEP_EPS: f64 = 1e-14;

/// Nonnegative matrix whose columns each sum to one. Rows index the observed
/// measure, columns the target measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonidealityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl NonidealityMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tol(rows, DEFAULT_TOL)
    }

    pub fn with_tol(rows: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidNonideality("ragged or empty matrix".into()));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        Self::from_flat(values.len() / cols, cols, values, tol)
    }

    fn from_flat(rows: usize, cols: usize, values: Vec<f64>, tol: f64) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < -tol) {
            return Err(Error::InvalidNonideality(format!("entry {v} is negative")));
        }
        for j in 0..cols {
            let sum: f64 = (0..rows).map(|i| values[i * cols + j]).sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::InvalidNonideality(format!("column {j} sums to {sum}")));
            }
        }
        Ok(Self { rows, cols, values })
    }

    pub fn identity(n: usize) -> Self {
        let values = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
        Self { rows: n, cols: n, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn max_abs_diff(&self, other: &NonidealityMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Average row entropy `−(1/N) Σ_ij λ_ij ln(λ_ij / Σ_j' λ_ij')` with
    /// `N` the number of rows and `0 ln 0 = 0`.
    pub fn entropy(&self) -> f64 {
        let total: f64 = self
            .values
            .chunks(self.cols)
            .map(|row| {
                let sum: f64 = row.iter().filter(|v| **v > 0.0).sum();
                row.iter()
                    .filter(|v| **v > 0.0)
                    .map(|&v| -v * (v / sum).ln())
                    .sum::<f64>()
            })
            .sum();
        (total / self.rows as f64).max(0.0)
    }
}

/// Result of [`solve_nonideality`].
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub matrix: NonidealityMatrix,
    /// `sqrt(Σ_i ‖M_i − Σ_j λ_ij N_j‖²)`.
    pub residual: f64,
    /// Residual within [`DECOMPOSITION_RESIDUAL`].
    pub is_nonideal: bool,
    /// False when the target elements are linearly dependent; the returned
    /// matrix is then the minimum-norm choice when the unconstrained optimum
    /// is already nonnegative.
    pub unique: bool,
}

impl Decomposition {
    /// The matrix, or an error when the observed measure is not a smearing
    /// of the target.
    pub fn exact(self) -> Result<NonidealityMatrix> {
        if self.is_nonideal {
            Ok(self.matrix)
        } else {
            Err(Error::Infeasible(format!(
                "not a nonideal measurement of the target (residual {:.3e})",
                self.residual
            )))
        }
    }
}

/// Nonideality matrix `λ` minimizing `Σ_i ‖M_i − Σ_j λ_ij N_j‖²_HS` over
/// nonnegative column-stochastic matrices.
pub fn solve_nonideality(observed: &PovmMeasure, target: &PovmMeasure) -> Result<Decomposition> {
    if observed.dim() != target.dim() {
        return Err(Error::Dimension {
            expected: target.dim(),
            found: observed.dim(),
        });
    }
    let obs = observed.elements();
    let tgt = target.elements();
    let (ni, nj) = (obs.len(), tgt.len());

    let mut gram = DMatrix::<f64>::zeros(nj, nj);
    for j in 0..nj {
        for k in 0..nj {
            gram[(j, k)] = tgt[j].hs_inner(&tgt[k])?.re;
        }
    }
    let mut rhs = DMatrix::<f64>::zeros(ni, nj);
    for i in 0..ni {
        for j in 0..nj {
            rhs[(i, j)] = obs[i].hs_inner(&tgt[j])?.re;
        }
    }
    let scale = gram.amax().max(1.0);
    let rank = gram.rank(1e-12 * scale);
    let unique = rank == nj;

    let qp = StochasticQp { gram, rhs, ni, nj };
    let mut x = qp.equality_optimum(unique);
    if x.iter().any(|&v| v < -1e-12) {
        x = qp.active_set();
    }
    for v in x.iter_mut() {
        *v = v.max(0.0);
    }
    let matrix = NonidealityMatrix::from_flat(ni, nj, x.iter().copied().collect(), 1e-8)?;
    let residual = decomposition_residual(obs, tgt, &matrix)?;
    Ok(Decomposition {
        matrix,
        residual,
        is_nonideal: residual <= DECOMPOSITION_RESIDUAL,
        unique,
    })
}

fn decomposition_residual(obs: &[Operator], tgt: &[Operator], lambda: &NonidealityMatrix) -> Result<f64> {
    let mut total = 0.0;
    for (i, m) in obs.iter().enumerate() {
        let mut approx = Operator::zeros(m.dim());
        for (j, n) in tgt.iter().enumerate() {
            approx = approx.add(&n.scale(lambda.get(i, j)))?;
        }
        total += m.sub(&approx)?.frobenius_norm().powi(2);
    }
    Ok(total.sqrt())
}

/// `min Σ_i (λ_i·Gλ_i − 2 b_i·λ_i)` s.t. `Σ_i λ_ij = 1`, `λ >= 0`, with
/// variables flattened row-major (`i * nj + j`).
struct StochasticQp {
    gram: DMatrix<f64>,
    rhs: DMatrix<f64>,
    ni: usize,
    nj: usize,
}

impl StochasticQp {
    fn n(&self) -> usize {
        self.ni * self.nj
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.n());
        for i in 0..self.ni {
            for j in 0..self.nj {
                let gl: f64 = (0..self.nj).map(|k| self.gram[(j, k)] * x[i * self.nj + k]).sum();
                g[i * self.nj + j] = 2.0 * (gl - self.rhs[(i, j)]);
            }
        }
        g
    }

    fn uniform(&self) -> DVector<f64> {
        DVector::from_element(self.n(), 1.0 / self.ni as f64)
    }

    /// KKT step from `x` restricted to `free` variables: returns the step and
    /// the column-sum multipliers.
    fn kkt_step(&self, x: &DVector<f64>, free: &[bool]) -> (DVector<f64>, DVector<f64>) {
        let vars: Vec<usize> = (0..self.n()).filter(|&k| free[k]).collect();
        let nf = vars.len();
        let size = nf + self.nj;
        let g = self.gradient(x);
        let mut kkt = DMatrix::<f64>::zeros(size, size);
        let mut b = DVector::<f64>::zeros(size);
        for (a, &ka) in vars.iter().enumerate() {
            let (ia, ja) = (ka / self.nj, ka % self.nj);
            for (c, &kc) in vars.iter().enumerate() {
                let (ic, jc) = (kc / self.nj, kc % self.nj);
                if ia == ic {
                    kkt[(a, c)] = 2.0 * self.gram[(ja, jc)];
                }
            }
            kkt[(a, nf + ja)] = 1.0;
            kkt[(nf + ja, a)] = 1.0;
            b[a] = -g[ka];
        }
        let sol = kkt
            .pseudo_inverse(1e-13)
            .map(|p| p * b)
            .unwrap_or_else(|_| DVector::zeros(size));
        let mut step = DVector::zeros(self.n());
        for (a, &k) in vars.iter().enumerate() {
            step[k] = sol[a];
        }
        (step, sol.rows(nf, self.nj).into_owned())
    }

    /// Optimum with only the column-sum constraints. For a rank-deficient
    /// Gram matrix the minimum-norm optimum is returned.
    fn equality_optimum(&self, unique: bool) -> DVector<f64> {
        let x0 = self.uniform();
        let (step, _) = self.kkt_step(&x0, &vec![true; self.n()]);
        let x = x0 + step;
        if unique {
            return x;
        }
        // Optimal set is x + null(H) ∩ null(A); drop the component of x in it.
        let mut stacked = DMatrix::<f64>::zeros(self.n() + self.nj, self.n());
        for i in 0..self.ni {
            for j in 0..self.nj {
                for k in 0..self.nj {
                    stacked[(i * self.nj + j, i * self.nj + k)] = self.gram[(j, k)];
                }
                stacked[(self.n() + j, i * self.nj + j)] = 1.0;
            }
        }
        let svd = stacked.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let smax = svd.singular_values.amax().max(1.0);
        let mut x = x;
        for (r, s) in svd.singular_values.iter().enumerate() {
            if *s <= 1e-12 * smax {
                let v = v_t.row(r).transpose();
                let c = v.dot(&x);
                x -= v * c;
            }
        }
        // remaining null directions (more columns than singular values)
        for r in svd.singular_values.len()..v_t.nrows() {
            let v = v_t.row(r).transpose();
            let c = v.dot(&x);
            x -= v * c;
        }
        x
    }

    /// Primal active-set method on the nonnegativity bounds, started from the
    /// uniform matrix (strictly feasible).
    fn active_set(&self) -> DVector<f64> {
        let n = self.n();
        let mut x = self.uniform();
        let mut free = vec![true; n];
        for _ in 0..ACTIVE_SET_MAX_ITER {
            let (step, nu) = self.kkt_step(&x, &free);
            if step.amax() <= STEP_EPS {
                let g = self.gradient(&x);
                let worst = (0..n)
                    .filter(|&k| !free[k])
                    .map(|k| (k, g[k] + nu[k % self.nj]))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                match worst {
                    Some((k, mu)) if mu < -1e-12 => free[k] = true,
                    _ => return x,
                }
                continue;
            }
            let mut alpha = 1.0;
            let mut blocking = None;
            for k in 0..n {
                if free[k] && step[k] < 0.0 {
                    let a = -x[k] / step[k];
                    if a < alpha {
                        alpha = a;
                        blocking = Some(k);
                    }
                }
            }
            x += step * alpha;
            if let Some(k) = blocking {
                x[k] = 0.0;
                free[k] = false;
            }
        }
        x
    }
}

/// `−ln max_mn Tr P_m Q_n` for two maximal PVMs on the same space.
pub fn martens_bound(pvm1: &PvmMeasure, pvm2: &PvmMeasure) -> Result<f64> {
    if pvm1.dim() != pvm2.dim() {
        return Err(Error::Dimension {
            expected: pvm1.dim(),
            found: pvm2.dim(),
        });
    }
    if !pvm1.is_maximal(DEFAULT_TOL) || !pvm2.is_maximal(DEFAULT_TOL) {
        return Err(Error::Unsupported(
            "Martens bound is implemented for maximal (rank-one) PVMs only".into(),
        ));
    }
    let mut max_overlap: f64 = 0.0;
    for p in pvm1.elements() {
        for q in pvm2.elements() {
            max_overlap = max_overlap.max(p.mul(q)?.trace().re);
        }
    }
    Ok(-max_overlap.ln())
}

/// Both sides of the Martens inequality `J(λ) + J(μ) ≥ bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartensReport {
    #[serde(rename = "J_lambda")]
    pub j_lambda: f64,
    #[serde(rename = "J_mu")]
    pub j_mu: f64,
    pub bound: f64,
    pub slack: f64,
}

pub fn check_martens(
    lambda: &NonidealityMatrix,
    mu: &NonidealityMatrix,
    pvm1: &PvmMeasure,
    pvm2: &PvmMeasure,
) -> Result<MartensReport> {
    for (m, pvm) in [(lambda, pvm1), (mu, pvm2)] {
        if m.cols() != pvm.len() {
            return Err(Error::Dimension {
                expected: pvm.len(),
                found: m.cols(),
            });
        }
    }
    let bound = martens_bound(pvm1, pvm2)?;
    let j_lambda = lambda.entropy();
    let j_mu = mu.entropy();
    let slack = j_lambda + j_mu - bound;
    if slack < -DEFAULT_TOL {
        return Err(Error::Internal(format!("Martens inequality violated, slack {slack:.3e}")));
    }
    Ok(MartensReport {
        j_lambda,
        j_mu,
        bound,
        slack,
    })
}

/// Nonideality matrices of both marginals of a bivariate POVM `R_mn`:
/// `Σ_n R_mn` against `pvm1` and `Σ_m R_mn` against `pvm2`.
pub fn bivariate_nonideality(
    bivariate: &PovmMeasure,
    pvm1: &PvmMeasure,
    pvm2: &PvmMeasure,
) -> Result<(NonidealityMatrix, NonidealityMatrix)> {
    if bivariate.index_shape().map(<[usize]>::len) != Some(2) {
        return Err(Error::InvalidMeasure("expected a bivariate (two-index) measure".into()));
    }
    let first = solve_nonideality(&bivariate.marginal(&[0])?, pvm1.as_povm())?.exact()?;
    let second = solve_nonideality(&bivariate.marginal(&[1])?, pvm2.as_povm())?.exact()?;
    Ok((first, second))
}

/// Martens report for a bivariate POVM whose marginals smear `pvm1` and `pvm2`.
pub fn martens_for_bivariate(
    bivariate: &PovmMeasure,
    pvm1: &PvmMeasure,
    pvm2: &PvmMeasure,
) -> Result<MartensReport> {
    let (lambda, mu) = bivariate_nonideality(bivariate, pvm1, pvm2)?;
    check_martens(&lambda, &mu, pvm1, pvm2)
}

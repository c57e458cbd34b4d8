//! Dense complex operators and density operators.
//!
//! Everything here works on small square matrices (a few qubits at most).
//! Positivity is always decided through the Hermitian eigendecomposition so
//! that rank-deficient elements are handled the same way as full-rank ones.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, DEFAULT_TOL};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix with a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    m: DMatrix<Complex64>,
}

impl Operator {
    /// Builds an operator from row-major entries.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension { expected: 1, found: 0 });
        }
        if entries.len() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self {
            m: DMatrix::from_row_slice(dim, dim, &entries),
        })
    }

    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::Dimension { expected: 1, found: 0 });
        }
        Ok(Self { m })
    }

    /// Real row-major entries, convenient for literals in tests and models.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(dim, entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        Self { m }
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::Dimension {
                expected: u.len(),
                found: v.len(),
            });
        }
        let n = u.len();
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| u[i] * v[j].conj()))
    }

    /// Rank-one projector onto the normalized direction of `v`.
    pub fn projector(v: &[Complex64]) -> Result<Self> {
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector has no projector".into()));
        }
        let u: Vec<Complex64> = v.iter().map(|c| c / norm).collect();
        Self::outer(&u, &u)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[(row, col)]
    }

    /// Row-major copy of the entries.
    pub fn entries(&self) -> Vec<Complex64> {
        let n = self.dim();
        (0..n * n).map(|k| self.m[(k / n, k % n)]).collect()
    }

    fn check_same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dim(other)?;
        Ok(Self {
            m: &self.m + &other.m,
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dim(other)?;
        Ok(Self {
            m: &self.m - &other.m,
        })
    }

    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dim(other)?;
        Ok(Self {
            m: &self.m * &other.m,
        })
    }

    pub fn scale(&self, factor: f64) -> Operator {
        Self {
            m: &self.m * Complex64::new(factor, 0.0),
        }
    }

    pub fn scale_complex(&self, factor: Complex64) -> Operator {
        Self { m: &self.m * factor }
    }

    pub fn adjoint(&self) -> Operator {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    /// Hilbert–Schmidt inner product `Tr(self† other)`.
    pub fn hs_inner(&self, other: &Operator) -> Result<Complex64> {
        self.check_same_dim(other)?;
        Ok(self
            .m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(self
            .m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Operator {
        Self {
            m: (&self.m + self.m.adjoint()) * Complex64::new(0.5, 0.0),
        }
    }

    /// Ascending eigenvalues and matching orthonormal eigenvectors (as
    /// columns) of a Hermitian operator.
    pub fn eigh(&self, tol: f64) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
        let dev = self.hermitian_deviation();
        if dev > tol {
            return Err(Error::NotHermitian(dev));
        }
        let eig = SymmetricEigen::new(self.hermitian_part().m);
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            eig.eigenvectors[(i, order[j])]
        });
        Ok((values, vectors))
    }

    /// Ascending eigenvalues of a Hermitian operator.
    pub fn eigenvalues(&self, tol: f64) -> Result<Vec<f64>> {
        self.eigh(tol).map(|(values, _)| values)
    }

    /// Hermitian within `tol` and smallest eigenvalue `>= -tol`.
    pub fn is_positive(&self, tol: f64) -> bool {
        match self.eigenvalues(tol) {
            Ok(values) => values.first().is_some_and(|&v| v >= -tol),
            Err(_) => false,
        }
    }

    /// Positive and idempotent within `tol`.
    pub fn is_projector(&self, tol: f64) -> bool {
        if !self.is_positive(tol) {
            return false;
        }
        let square = Self {
            m: &self.m * &self.m,
        };
        square.sub(self).map(|d| d.frobenius_norm() <= tol).unwrap_or(false)
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitary_deviation(&self) -> f64 {
        let prod = self.m.adjoint() * &self.m;
        Self { m: prod }
            .max_abs_diff(&Operator::identity(self.dim()))
            .unwrap_or(f64::INFINITY)
    }

    /// Numerical rank from the eigenvalues of a Hermitian operator.
    pub fn rank(&self, tol: f64) -> Result<usize> {
        Ok(self.eigenvalues(tol)?.iter().filter(|v| v.abs() > tol).count())
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    Operator {
        m: a.m.kronecker(&b.m),
    }
}

/// Which factor of a bipartite space survives [`partial_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

impl TryFrom<usize> for Subsystem {
    type Error = Error;

    fn try_from(index: usize) -> Result<Self> {
        match index {
            0 => Ok(Subsystem::First),
            1 => Ok(Subsystem::Second),
            _ => Err(Error::Dimension {
                expected: 1,
                found: index,
            }),
        }
    }
}

/// Traces out one factor of an operator on `dims.0 ⊗ dims.1`, keeping `keep`.
pub fn partial_trace(op: &Operator, dims: (usize, usize), keep: Subsystem) -> Result<Operator> {
    let (d0, d1) = dims;
    if d0 == 0 || d1 == 0 || op.dim() != d0 * d1 {
        return Err(Error::Dimension {
            expected: d0 * d1,
            found: op.dim(),
        });
    }
    let m = &op.m;
    let out = match keep {
        Subsystem::First => DMatrix::from_fn(d0, d0, |i, j| {
            (0..d1).map(|k| m[(i * d1 + k, j * d1 + k)]).sum()
        }),
        Subsystem::Second => DMatrix::from_fn(d1, d1, |i, j| {
            (0..d0).map(|k| m[(k * d1 + i, k * d1 + j)]).sum()
        }),
    };
    Ok(Operator { m: out })
}

/// Density operator: Hermitian, positive, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    op: Operator,
}

impl State {
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_tol(op, DEFAULT_TOL)
    }

    pub fn with_tol(op: Operator, tol: f64) -> Result<Self> {
        let dev = op.hermitian_deviation();
        if dev > tol {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {dev:.3e})"
            )));
        }
        let trace = op.trace();
        if (trace.re - 1.0).abs() > tol || trace.im.abs() > tol {
            return Err(Error::InvalidState(format!("trace is {trace}, expected 1")));
        }
        let min = op.eigenvalues(tol)?[0];
        if min < -tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { op })
    }

    /// `|ψ⟩⟨ψ|` for the normalized direction of `psi`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        Self::new(Operator::projector(psi)?)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: Operator::identity(dim).scale(1.0 / dim as f64),
        }
    }

    /// `(|HV⟩ − |VH⟩)/√2` on two qubits.
    pub fn singlet() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [ZERO, Complex64::new(s, 0.0), Complex64::new(-s, 0.0), ZERO];
        Self::pure(&psi).expect("singlet is a valid state")
    }

    /// `(|00⟩ + |11⟩)/√2` on two qubits.
    pub fn phi_plus() -> Self {
        let psi = [ONE, ZERO, ZERO, ONE];
        Self::pure(&psi).expect("phi+ is a valid state")
    }

    pub fn product(a: &State, b: &State) -> Self {
        Self {
            op: tensor(&a.op, &b.op),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    /// `Tr(ρ A)`.
    pub fn expectation(&self, a: &Operator) -> Result<Complex64> {
        Ok(self.op.mul(a)?.trace())
    }

    /// `½ Tr|ρ − σ|`.
    pub fn trace_distance(&self, other: &State) -> Result<f64> {
        let diff = self.op.sub(&other.op)?;
        let values = diff.eigenvalues(f64::INFINITY)?;
        Ok(0.5 * values.iter().map(|v| v.abs()).sum::<f64>())
    }
}

/// Uncertainty product and commutator bound for two observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyReport {
    /// `ΔA·ΔB`.
    pub product: f64,
    /// `½ |Tr ρ [A, B]|`.
    pub bound: f64,
}

/// Evaluates both sides of `ΔA ΔB ≥ ½ |Tr ρ [A,B]|`.
pub fn commutator_bound(a: &Operator, b: &Operator, rho: &State) -> Result<UncertaintyReport> {
    commutator_bound_with_tol(a, b, rho, DEFAULT_TOL)
}

pub fn commutator_bound_with_tol(
    a: &Operator,
    b: &Operator,
    rho: &State,
    tol: f64,
) -> Result<UncertaintyReport> {
    for op in [a, b] {
        let dev = op.hermitian_deviation();
        if dev > tol {
            return Err(Error::NotHermitian(dev));
        }
        if op.dim() != rho.dim() {
            return Err(Error::Dimension {
                expected: rho.dim(),
                found: op.dim(),
            });
        }
    }
    let spread = |op: &Operator| -> Result<f64> {
        let mean = rho.expectation(op)?.re;
        let second = rho.expectation(&op.mul(op)?)?.re;
        Ok((second - mean * mean).max(0.0).sqrt())
    };
    let product = spread(a)? * spread(b)?;
    let commutator = a.mul(b)?.sub(&b.mul(a)?)?;
    let bound = 0.5 * rho.expectation(&commutator)?.norm();
    if product < bound - tol {
        return Err(Error::Internal(format!(
            "uncertainty product {product} below commutator bound {bound}"
        )));
    }
    Ok(UncertaintyReport { product, bound })
}

/// Wire form `{ "dim": n, "entries": [[re, im], ...] }`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&Operator> for MatrixJson {
    fn from(op: &Operator) -> Self {
        Self {
            dim: op.dim(),
            entries: op.entries().into_iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl TryFrom<&MatrixJson> for Operator {
    type Error = Error;

    fn try_from(json: &MatrixJson) -> Result<Self> {
        Operator::new(
            json.dim,
            json.entries
                .iter()
                .map(|&[re, im]| Complex64::new(re, im))
                .collect(),
        )
    }
}

//! Reference computations written directly against raw matrices, kept apart
//! from the library's code paths.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use povm_core::Operator;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (n, m) = (a.nrows(), b.nrows());
    DMatrix::from_fn(n * m, n * m, |r, c| a[(r / m, c / m)] * b[(r % m, c % m)])
}

pub fn trace(a: &DMatrix<Complex64>) -> Complex64 {
    (0..a.nrows()).map(|i| a[(i, i)]).sum()
}

/// `Tr U(ρ_o ⊗ ρ_a)U† (I ⊗ E)` with everything spelled out.
pub fn full_space_probability(u: &Operator, rho_o: &Operator, rho_a: &Operator, pointer: &Operator) -> f64 {
    let u = u.matrix();
    let fin = u * kron(rho_o.matrix(), rho_a.matrix()) * u.adjoint();
    let lifted = kron(&DMatrix::identity(rho_o.dim(), rho_o.dim()), pointer.matrix());
    trace(&(fin * lifted)).re
}

pub fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

pub fn j_lambda_closed(a: f64) -> f64 {
    0.5 * (xlnx(1.0 + a) - xlnx(a))
}

pub fn j_mu_closed(a: f64) -> f64 {
    let s = a.sqrt();
    0.5 * (2.0 * std::f64::consts::LN_2 - xlnx(1.0 + s) - xlnx(1.0 - s))
}

/// Singlet correlator for ideal polarizers at `x` and `y`.
pub fn singlet_correlator(x: f64, y: f64) -> f64 {
    -(2.0 * (x - y)).cos()
}

/// Eight CHSH values from four correlators, by explicit enumeration of the
/// sign patterns with exactly one minus sign (and their negatives).
pub fn chsh_values(e: [f64; 4]) -> Vec<f64> {
    let mut out = Vec::new();
    for minus in 0..4 {
        let s: f64 = (0..4).map(|k| if k == minus { -e[k] } else { e[k] }).sum();
        out.push(s);
        out.push(-s);
    }
    out
}

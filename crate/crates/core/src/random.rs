//! Random operators, states and unitaries for property checks and sweeps.
//!
//! All generators take the caller's RNG so seeded runs are reproducible.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::aspect::{AnalyzerAngles, AspectConfig};
use crate::fine::MarginalSet;
use crate::operator::{Operator, State};

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Ginibre matrix with i.i.d. standard complex normal entries.
pub fn ginibre(dim: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |_, _| gaussian(rng))
}

pub fn hermitian(dim: usize, rng: &mut impl Rng) -> Operator {
    let g = ginibre(dim, rng);
    Operator::from_matrix((&g + g.adjoint()) * Complex64::new(0.5, 0.0)).expect("square")
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of `R`'s
/// diagonal folded back into `Q`.
pub fn unitary(dim: usize, rng: &mut impl Rng) -> Operator {
    let qr = ginibre(dim, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Operator::from_matrix(q).expect("square")
}

/// Random pure state with a Haar-distributed vector.
pub fn pure_state(dim: usize, rng: &mut impl Rng) -> State {
    let psi: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
    State::pure(&psi).expect("nonzero vector")
}

/// Random mixed state `G G† / Tr(G G†)` (Hilbert–Schmidt measure).
pub fn mixed_state(dim: usize, rng: &mut impl Rng) -> State {
    let g = ginibre(dim, rng);
    let gg = &g * g.adjoint();
    let tr = gg.trace().re;
    let op = Operator::from_matrix(gg / Complex64::new(tr, 0.0)).expect("square");
    State::new(op.hermitian_part()).expect("Wishart matrices are states")
}

/// Mixed state with probability ½, pure otherwise.
pub fn state(dim: usize, rng: &mut impl Rng) -> State {
    if rng.random_bool(0.5) {
        mixed_state(dim, rng)
    } else {
        pure_state(dim, rng)
    }
}

/// Uniform draw from the 2×2 table polytope with single-variable marginals
/// `p(first = +) = p`, `p(second = +) = q`.
fn table_with_marginals(p: f64, q: f64, rng: &mut impl Rng) -> [[f64; 2]; 2] {
    let lo = (p + q - 1.0).max(0.0);
    let hi = p.min(q);
    let t = lo + (hi - lo) * rng.random::<f64>();
    [[t, p - t], [q - t, (1.0 - p - q + t).max(0.0)]]
}

/// Random point of the no-signaling polytope for two parties with two
/// dichotomic settings each. Covers local, quantum and super-quantum boxes.
pub fn no_signaling_set(rng: &mut impl Rng) -> MarginalSet {
    let [pa, pap, pb, pbp]: [f64; 4] = std::array::from_fn(|_| rng.random());
    MarginalSet::from_rows([
        table_with_marginals(pa, pb, rng),
        table_with_marginals(pa, pbp, rng),
        table_with_marginals(pap, pb, rng),
        table_with_marginals(pap, pbp, rng),
    ])
    .expect("tables are normalized by construction")
}

/// Transmissivity in `[0, 1]`, landing exactly on an endpoint one time in five.
pub fn transmissivity(rng: &mut impl Rng) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random(),
    }
}

/// Random generalized Aspect setting with a random two-photon state.
pub fn aspect_config(rng: &mut impl Rng) -> AspectConfig {
    let angles = AnalyzerAngles::new(
        rng.random_range(0.0..PI),
        rng.random_range(0.0..PI),
        rng.random_range(0.0..PI),
        rng.random_range(0.0..PI),
    );
    let g1 = transmissivity(rng);
    let g2 = transmissivity(rng);
    AspectConfig::new(g1, g2, angles, state(4, rng)).expect("valid by construction")
}

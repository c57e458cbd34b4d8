//! Neutron interferometer with an absorber of transmissivity `a` in one path
//! (Summhammer, Rauch and Tuppinger).
//!
//! The path space is a qubit with basis `|+⟩, |−⟩`. The path PVM projects on
//! that basis; the interference PVM projects on
//! `q₁ = (|+⟩ + e^{iχ}|−⟩)/√2` and `q₂ = (|+⟩ − e^{iχ}|−⟩)/√2`. Detector
//! outcomes 1 and 2 sit behind the last slab, outcome 3 is absorption.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::exec::Execution;
use crate::measure::{PovmMeasure, PvmMeasure};
use crate::nonideality::{bivariate_nonideality, martens_bound, MartensReport, NonidealityMatrix};
use crate::operator::Operator;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrtConfig {
    absorber: f64,
    phase: f64,
}

impl SrtConfig {
    pub fn new(absorber: f64, phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&absorber) {
            return Err(Error::OutOfRange {
                name: "absorber",
                value: absorber,
            });
        }
        Ok(Self { absorber, phase })
    }

    pub fn absorber(&self) -> f64 {
        self.absorber
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }
}

/// `{P₊, P₋}`.
pub fn path_pvm() -> PvmMeasure {
    PvmMeasure::new(
        vec!["+".into(), "-".into()],
        vec![Operator::diag(&[1.0, 0.0]), Operator::diag(&[0.0, 1.0])],
    )
    .expect("path basis is a PVM")
}

/// `{Q₁, Q₂}` at phase shift `chi`.
pub fn interference_pvm(chi: f64) -> PvmMeasure {
    let one = Complex64::new(1.0, 0.0);
    let e = Complex64::from_polar(1.0, chi);
    PvmMeasure::from_vectors(vec!["1".into(), "2".into()], &[vec![one, e], vec![one, -e]])
        .expect("interference basis is a PVM")
}

fn path_projectors() -> (Operator, Operator) {
    (Operator::diag(&[1.0, 0.0]), Operator::diag(&[0.0, 1.0]))
}

/// Three-outcome POVM
/// `M₁,₂ = ½[P₊ + aP₋ ± √a(Q₁ − Q₂)]`, `M₃ = (1 − a)P₋`.
pub fn srt_povm(config: &SrtConfig) -> Result<PovmMeasure> {
    let [m1, m2, m3] = srt_elements(config)?;
    PovmMeasure::new(vec!["1".into(), "2".into(), "3".into()], vec![m1, m2, m3], None)
}

fn srt_elements(config: &SrtConfig) -> Result<[Operator; 3]> {
    let a = config.absorber;
    let (p_plus, p_minus) = path_projectors();
    let q = interference_pvm(config.phase);
    let q_diff = q.elements()[0].sub(&q.elements()[1])?;
    let base = p_plus.add(&p_minus.scale(a))?;
    let m1 = base.add(&q_diff.scale(a.sqrt()))?.scale(0.5);
    let m2 = base.sub(&q_diff.scale(a.sqrt()))?.scale(0.5);
    let m3 = p_minus.scale(1.0 - a);
    Ok([m1, m2, m3])
}

/// Bivariate POVM `R_mn` with `m ∈ {+, −}` (rows) and `n ∈ {1, 2}`:
/// `R₊₁ = M₁`, `R₊₂ = M₂`, `R₋₁ = R₋₂ = ½M₃`.
pub fn srt_bivariate(config: &SrtConfig) -> Result<PovmMeasure> {
    let [m1, m2, m3] = srt_elements(config)?;
    let half = m3.scale(0.5);
    PovmMeasure::new(
        ["+,1", "+,2", "-,1", "-,2"].map(String::from).to_vec(),
        vec![m1, m2, half.clone(), half],
        Some(vec![2, 2]),
    )
}

/// `(λ, μ)`: the path marginal against `{P₊, P₋}` and the interference
/// marginal against `{Q₁, Q₂}`, both solved numerically.
pub fn srt_nonideality(config: &SrtConfig) -> Result<(NonidealityMatrix, NonidealityMatrix)> {
    bivariate_nonideality(&srt_bivariate(config)?, &path_pvm(), &interference_pvm(config.phase))
}

fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Closed form `J(λ) = ½[(1 + a)ln(1 + a) − a ln a]`.
pub fn closed_form_j_lambda(a: f64) -> f64 {
    0.5 * (xlnx(1.0 + a) - xlnx(a))
}

/// Closed form `J(μ) = ½[2 ln 2 − (1 + √a)ln(1 + √a) − (1 − √a)ln(1 − √a)]`.
pub fn closed_form_j_mu(a: f64) -> f64 {
    let s = a.sqrt();
    0.5 * (2.0 * LN_2 - xlnx(1.0 + s) - xlnx(1.0 - s))
}

/// One point of the `J(λ)` / `J(μ)` trade-off curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figure4Row {
    pub a: f64,
    #[serde(rename = "J_lambda")]
    pub j_lambda: f64,
    #[serde(rename = "J_mu")]
    pub j_mu: f64,
    pub bound: f64,
    pub slack: f64,
    pub j_lambda_closed: f64,
    pub j_mu_closed: f64,
}

/// `points` equally spaced absorber values from 0 to 1 inclusive.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}

/// Martens report for one absorber setting via the generic pipeline.
pub fn srt_martens(config: &SrtConfig) -> Result<MartensReport> {
    let path = path_pvm();
    let interference = interference_pvm(config.phase);
    let (lambda, mu) = srt_nonideality(config)?;
    let j_lambda = lambda.entropy();
    let j_mu = mu.entropy();
    let bound = martens_bound(&path, &interference)?;
    Ok(MartensReport {
        j_lambda,
        j_mu,
        bound,
        slack: j_lambda + j_mu - bound,
    })
}

/// Evaluates the trade-off curve on `grid`; rows follow the grid order.
pub fn figure4_sweep(grid: &[f64], chi: f64, exec: Execution) -> Result<Vec<Figure4Row>> {
    if let Some(&a) = grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::OutOfRange {
            name: "absorber",
            value: a,
        });
    }
    exec.try_map(grid, |&a| {
        let report = srt_martens(&SrtConfig::new(a, chi)?)?;
        Ok(Figure4Row {
            a,
            j_lambda: report.j_lambda,
            j_mu: report.j_mu,
            bound: report.bound,
            slack: report.slack,
            j_lambda_closed: closed_form_j_lambda(a),
            j_mu_closed: closed_form_j_mu(a),
        })
    })
}

//! Generalized Aspect experiment.
//!
//! Each photon of a pair meets a semi-transparent mirror of transmissivity
//! `γᵢ`; the transmitted beam goes to a polarizer at `θᵢ` with detector `Dᵢ`,
//! the reflected one to a polarizer at `θ'ᵢ` with detector `D'ᵢ`. Per arm the
//! outcome is the pair `(mᵢ, nᵢ)` with `mᵢ = +` iff `Dᵢ` clicks and `nᵢ = +`
//! iff `D'ᵢ` clicks. Index 0 of every axis is `+`.
//!
//! Polarization convention: `E^θ₊` projects on `(cos θ, sin θ)` and `E^θ₋` on
//! `(−sin θ, cos θ)`. For the singlet `(|HV⟩ − |VH⟩)/√2` the correlator of
//! ideal analyzers is `−cos 2(θ₁ − θ₂)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fine::MarginalSet;
use crate::measure::{PovmMeasure, PvmMeasure};
use crate::operator::{tensor, Operator, State};
use crate::table::ProbabilityTable;
use crate::{Error, Result};

/// `{E^θ₊, E^θ₋}`.
pub fn polarization_pvm(theta: f64) -> PvmMeasure {
    let c = |x: f64| Complex64::new(x, 0.0);
    PvmMeasure::from_vectors(
        vec!["+".into(), "-".into()],
        &[
            vec![c(theta.cos()), c(theta.sin())],
            vec![c(-theta.sin()), c(theta.cos())],
        ],
    )
    .expect("polarization basis is a PVM")
}

fn check_gamma(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value })
    }
}

const ARM_LABELS: [&str; 4] = ["+,+", "+,-", "-,+", "-,-"];

/// Bivariate POVM of one arm:
/// `[[O, γE^θ₊], [(1−γ)E^θ'₊, γE^θ₋ + (1−γ)E^θ'₋]]`.
pub fn arm_povm(gamma: f64, theta: f64, theta_p: f64) -> Result<PovmMeasure> {
    check_gamma("gamma", gamma)?;
    let e = polarization_pvm(theta);
    let f = polarization_pvm(theta_p);
    let (e_plus, e_minus) = (&e.elements()[0], &e.elements()[1]);
    let (f_plus, f_minus) = (&f.elements()[0], &f.elements()[1]);
    let elements = vec![
        Operator::zeros(2),
        e_plus.scale(gamma),
        f_plus.scale(1.0 - gamma),
        e_minus.scale(gamma).add(&f_minus.scale(1.0 - gamma))?,
    ];
    PovmMeasure::new(ARM_LABELS.map(String::from).to_vec(), elements, Some(vec![2, 2]))
}

/// Polarizer angles `(θ₁, θ'₁, θ₂, θ'₂)` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerAngles {
    pub theta1: f64,
    pub theta1p: f64,
    pub theta2: f64,
    pub theta2p: f64,
}

impl AnalyzerAngles {
    pub fn new(theta1: f64, theta1p: f64, theta2: f64, theta2p: f64) -> Self {
        Self {
            theta1,
            theta1p,
            theta2,
            theta2p,
        }
    }

    /// `(0, π/4, π/8, 3π/8)`, where the singlet reaches `|S| = 2√2`.
    pub fn tsirelson() -> Self {
        use std::f64::consts::PI;
        Self::new(0.0, PI / 4.0, PI / 8.0, 3.0 * PI / 8.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AspectConfig {
    gamma1: f64,
    gamma2: f64,
    angles: AnalyzerAngles,
    state: State,
}

impl AspectConfig {
    pub fn new(gamma1: f64, gamma2: f64, angles: AnalyzerAngles, state: State) -> Result<Self> {
        check_gamma("gamma1", gamma1)?;
        check_gamma("gamma2", gamma2)?;
        if state.dim() != 4 {
            return Err(Error::Dimension {
                expected: 4,
                found: state.dim(),
            });
        }
        Ok(Self {
            gamma1,
            gamma2,
            angles,
            state,
        })
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn angles(&self) -> AnalyzerAngles {
        self.angles
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn arm1(&self) -> Result<PovmMeasure> {
        arm_povm(self.gamma1, self.angles.theta1, self.angles.theta1p)
    }

    pub fn arm2(&self) -> Result<PovmMeasure> {
        arm_povm(self.gamma2, self.angles.theta2, self.angles.theta2p)
    }
}

/// Product POVM `R_{m1 n1 m2 n2} = R¹_{m1 n1} ⊗ R²_{m2 n2}`, axes ordered
/// `(m1, n1, m2, n2)`.
pub fn quadrivariate_povm(config: &AspectConfig) -> Result<PovmMeasure> {
    let arm1 = config.arm1()?;
    let arm2 = config.arm2()?;
    let mut labels = Vec::with_capacity(16);
    let mut elements = Vec::with_capacity(16);
    for (l1, r1) in arm1.labels().iter().zip(arm1.elements()) {
        for (l2, r2) in arm2.labels().iter().zip(arm2.elements()) {
            labels.push(format!("{l1},{l2}"));
            elements.push(tensor(r1, r2));
        }
    }
    PovmMeasure::new(labels, elements, Some(vec![2, 2, 2, 2]))
}

/// Quadrivariate distribution `p_{m1 n1 m2 n2} = Tr ρ R¹ ⊗ R²`.
pub fn joint_probabilities(config: &AspectConfig) -> Result<ProbabilityTable> {
    quadrivariate_povm(config)?.born_probabilities(config.state())
}

/// The four bivariate marginals `(m1,m2)`, `(m1,n2)`, `(n1,m2)`, `(n1,n2)` of
/// a quadrivariate table, as the pairs `(A,B)`, `(A,B')`, `(A',B)`, `(A',B')`.
pub fn bivariate_marginals(joint: &ProbabilityTable) -> Result<MarginalSet> {
    if joint.shape() != [2, 2, 2, 2] {
        return Err(Error::InvalidTable(format!(
            "expected a 2x2x2x2 table, got {:?}",
            joint.shape()
        )));
    }
    MarginalSet::new([
        joint.marginal(&[0, 2])?,
        joint.marginal(&[0, 3])?,
        joint.marginal(&[1, 2])?,
        joint.marginal(&[1, 3])?,
    ])
}

/// CHSH combinations of four dichotomic correlators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshReport {
    /// `E(A,B) + E(A,B') + E(A',B) − E(A',B')`.
    pub s: f64,
    /// `[E(A,B), E(A,B'), E(A',B), E(A',B')]`.
    pub correlators: [f64; 4],
    /// All eight sign placements: entry `2k` negates correlator `k`,
    /// entry `2k + 1` is its opposite.
    pub values: [f64; 8],
}

impl ChshReport {
    pub fn from_correlators(correlators: [f64; 4]) -> Self {
        let total: f64 = correlators.iter().sum();
        let mut values = [0.0; 8];
        for (k, e) in correlators.iter().enumerate() {
            values[2 * k] = total - 2.0 * e;
            values[2 * k + 1] = -(total - 2.0 * e);
        }
        Self {
            s: values[6],
            correlators,
            values,
        }
    }

    /// Largest `|S|` over the eight placements.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index into [`ChshReport::values`] of the largest value.
    pub fn most_violated(&self) -> usize {
        (0..8)
            .max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .expect("eight values")
    }
}

/// CHSH values of four bivariate tables given as `(A,B)`, `(A,B')`, `(A',B)`,
/// `(A',B')`.
pub fn chsh_value(tables: [&ProbabilityTable; 4]) -> Result<ChshReport> {
    let mut correlators = [0.0; 4];
    for (e, t) in correlators.iter_mut().zip(tables) {
        *e = t.correlator()?;
    }
    Ok(ChshReport::from_correlators(correlators))
}

/// The four standard experiments recombined: `(A,B)` from `(γ₁,γ₂) = (1,1)`
/// on `(m1,m2)`, `(A,B')` from `(1,0)` on `(m1,n2)`, `(A',B)` from `(0,1)` on
/// `(n1,m2)` and `(A',B')` from `(0,0)` on `(n1,n2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardComposite {
    pub marginals: MarginalSet,
    pub chsh: ChshReport,
}

pub fn standard_composite(angles: AnalyzerAngles, state: &State) -> Result<StandardComposite> {
    let table = |g1: f64, g2: f64, axes: [usize; 2]| -> Result<ProbabilityTable> {
        let config = AspectConfig::new(g1, g2, angles, state.clone())?;
        joint_probabilities(&config)?.marginal(&axes)
    };
    let marginals = MarginalSet::new([
        table(1.0, 1.0, [0, 2])?,
        table(1.0, 0.0, [0, 3])?,
        table(0.0, 1.0, [1, 2])?,
        table(0.0, 0.0, [1, 3])?,
    ])?;
    let chsh = marginals.chsh()?;
    Ok(StandardComposite { marginals, chsh })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonideality::{solve_nonideality, NonidealityMatrix};
    use crate::DEFAULT_TOL;
    use std::f64::consts::{FRAC_PI_8, SQRT_2};

    #[test]
    fn polarization_projectors() {
        let p = polarization_pvm(0.3);
        assert!(p.is_maximal(DEFAULT_TOL));
        let plus = &p.elements()[0];
        assert!((plus.get(0, 0).re - 0.3f64.cos().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn arm_limits() {
        let arm = arm_povm(1.0, 0.2, 0.9).unwrap();
        let n = arm.marginal(&[1]).unwrap();
        assert!(n.elements()[0].frobenius_norm() < 1e-15);
        assert!(n.elements()[1].max_abs_diff(&Operator::identity(2)).unwrap() < 1e-15);
        let m = arm.marginal(&[0]).unwrap();
        let e = polarization_pvm(0.2);
        for (a, b) in m.elements().iter().zip(e.elements()) {
            assert!(a.max_abs_diff(b).unwrap() < 1e-15);
        }
        assert!(arm_povm(1.2, 0.0, 0.0).is_err());
    }

    #[test]
    fn arm_half_transmission_matrix() {
        let arm = arm_povm(0.5, 0.4, 1.3).unwrap();
        let d = solve_nonideality(&arm.marginal(&[0]).unwrap(), polarization_pvm(0.4).as_povm()).unwrap();
        let expected = NonidealityMatrix::new(vec![vec![0.5, 0.0], vec![0.5, 1.0]]).unwrap();
        assert!(d.matrix.max_abs_diff(&expected) < 1e-12);
    }

    fn config(g1: f64, g2: f64, state: State) -> AspectConfig {
        AspectConfig::new(g1, g2, AnalyzerAngles::new(0.1, 0.8, 0.35, 1.2), state).unwrap()
    }

    #[test]
    fn quadrivariate_element_expansion() {
        let (g1, g2) = (0.3, 0.6);
        let c = config(g1, g2, State::singlet());
        let quad = quadrivariate_povm(&c).unwrap();
        let a = AnalyzerAngles::new(0.1, 0.8, 0.35, 1.2);
        // (m1, n1, m2, n2) = (+, −, +, −)
        let expected = tensor(&polarization_pvm(a.theta1).elements()[0], &polarization_pvm(a.theta2).elements()[0]).scale(g1 * g2);
        assert!(quad.element(&[0, 1, 0, 1]).max_abs_diff(&expected).unwrap() < 1e-15);
        // both detectors of one arm never click together
        assert!(quad.element(&[0, 0, 1, 1]).frobenius_norm() < 1e-15);
    }

    #[test]
    fn both_ideal_arms_only_use_minus_n_slots() {
        let quad = quadrivariate_povm(&config(1.0, 1.0, State::singlet())).unwrap();
        for (flat, e) in quad.elements().iter().enumerate() {
            let (n1, n2) = ((flat >> 2) & 1, flat & 1);
            if n1 == 0 || n2 == 0 {
                assert!(e.frobenius_norm() < 1e-15);
            }
        }
        let e1 = polarization_pvm(0.1);
        let e2 = polarization_pvm(0.35);
        for m1 in 0..2 {
            for m2 in 0..2 {
                let expected = tensor(&e1.elements()[m1], &e2.elements()[m2]);
                assert!(quad.element(&[m1, 1, m2, 1]).max_abs_diff(&expected).unwrap() < 1e-15);
            }
        }
    }

    #[test]
    fn product_state_factorizes() {
        let s1 = State::new(Operator::diag(&[0.3, 0.7])).unwrap();
        let s2 = State::pure(&[Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]).unwrap();
        let c = config(0.4, 0.7, State::product(&s1, &s2));
        let joint = joint_probabilities(&c).unwrap();
        let p1 = c.arm1().unwrap().born_probabilities(&s1).unwrap();
        let p2 = c.arm2().unwrap().born_probabilities(&s2).unwrap();
        for flat in 0..16 {
            let expected = p1.values()[flat / 4] * p2.values()[flat % 4];
            assert!((joint.values()[flat] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn singlet_correlator_convention() {
        let angles = AnalyzerAngles::new(0.0, 0.5, FRAC_PI_8, 0.2);
        let c = AspectConfig::new(1.0, 1.0, angles, State::singlet()).unwrap();
        let ab = joint_probabilities(&c).unwrap().marginal(&[0, 2]).unwrap();
        let expected = -(2.0 * (0.0 - FRAC_PI_8)).cos();
        assert!((ab.correlator().unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn arm_two_marginal_ignores_arm_one_setting() {
        let reference = joint_probabilities(&config(0.0, 0.45, State::singlet()))
            .unwrap()
            .marginal(&[2, 3])
            .unwrap();
        for g1 in [0.5, 1.0] {
            let m = joint_probabilities(&config(g1, 0.45, State::singlet()))
                .unwrap()
                .marginal(&[2, 3])
                .unwrap();
            assert!(m.max_abs_diff(&reference).unwrap() < 1e-12);
        }
    }

    #[test]
    fn chsh_examples() {
        let uniform = ProbabilityTable::new(vec![2, 2], vec![0.25; 4]).unwrap();
        let r = chsh_value([&uniform, &uniform, &uniform, &uniform]).unwrap();
        assert_eq!(r.s, 0.0);
        assert_eq!(r.max_abs(), 0.0);

        let composite = standard_composite(AnalyzerAngles::tsirelson(), &State::singlet()).unwrap();
        assert!((composite.chsh.max_abs() - 2.0 * SQRT_2).abs() < 1e-12);

        let bad = ProbabilityTable::new(vec![4], vec![0.25; 4]).unwrap();
        assert!(chsh_value([&bad, &uniform, &uniform, &uniform]).is_err());
    }

    #[test]
    fn chsh_value_layout() {
        let r = ChshReport::from_correlators([0.1, 0.2, 0.3, 0.4]);
        assert!((r.s - (0.1 + 0.2 + 0.3 - 0.4)).abs() < 1e-15);
        assert!((r.values[0] - (-0.1 + 0.2 + 0.3 + 0.4)).abs() < 1e-15);
        assert_eq!(r.values[1], -r.values[0]);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(AspectConfig::new(0.5, -0.1, AnalyzerAngles::tsirelson(), State::singlet()).is_err());
        assert!(AspectConfig::new(0.5, 0.5, AnalyzerAngles::tsirelson(), State::maximally_mixed(2)).is_err());
    }
}

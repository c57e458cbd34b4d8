//! Joint distributions for four dichotomic bivariate marginals.
//!
//! Given tables for the pairs `(A,B)`, `(A,B')`, `(A',B)`, `(A',B')`, decide
//! whether some distribution `p(a, a', b, b')` has them all as marginals. The
//! decision is made by a phase-1 simplex over the 16 joint probabilities and
//! cross-checked against the eight CHSH inequalities, which characterize
//! feasibility for this scenario once no-signaling holds.

use serde::{Deserialize, Serialize};

use crate::aspect::{chsh_value, ChshReport};
use crate::exec::Execution;
use crate::simplex::{find_feasible, independent_rows, Phase1};
use crate::table::ProbabilityTable;
use crate::{Error, Result, DEFAULT_TOL};

/// Pair labels in storage order.
pub const PAIRS: [&str; 4] = ["AB", "AB'", "A'B", "A'B'"];

/// Upper bound on the sum of phase-1 artificials accepted as feasible. Any
/// joint whose marginals are off by `ε` in L1 moves every CHSH value by at
/// most `ε`, so this sits well inside the CHSH boundary band.
const LP_FEASIBILITY: f64 = 1e-12;

/// Four 2×2 tables for `(A,B)`, `(A,B')`, `(A',B)`, `(A',B')`; row index is
/// the first variable, index 0 is outcome `+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarginalsJson", into = "MarginalsJson")]
pub struct MarginalSet {
    tables: [ProbabilityTable; 4],
}

impl MarginalSet {
    pub fn new(tables: [ProbabilityTable; 4]) -> Result<Self> {
        for (t, name) in tables.iter().zip(PAIRS) {
            if t.shape() != [2, 2] {
                return Err(Error::InvalidTable(format!(
                    "{name} must be 2x2, got {:?}",
                    t.shape()
                )));
            }
        }
        Ok(Self { tables })
    }

    pub fn from_rows(rows: [[[f64; 2]; 2]; 4]) -> Result<Self> {
        let [ab, abp, apb, apbp] = rows;
        Self::new([
            ProbabilityTable::from_2x2(ab)?,
            ProbabilityTable::from_2x2(abp)?,
            ProbabilityTable::from_2x2(apb)?,
            ProbabilityTable::from_2x2(apbp)?,
        ])
    }

    pub fn tables(&self) -> &[ProbabilityTable; 4] {
        &self.tables
    }

    pub fn chsh(&self) -> Result<ChshReport> {
        let [a, b, c, d] = &self.tables;
        chsh_value([a, b, c, d])
    }

    /// `p(first = +)` and `p(second = +)` of table `k`.
    fn singles(&self, k: usize) -> (f64, f64) {
        let v = self.tables[k].values();
        (v[0] + v[1], v[0] + v[2])
    }
}

/// Wire form: `{ "AB": [[p++, p+-], [p-+, p--]], "AB'": ..., "A'B": ..., "A'B'": ... }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalsJson {
    #[serde(rename = "AB")]
    pub ab: [[f64; 2]; 2],
    #[serde(rename = "AB'")]
    pub ab_prime: [[f64; 2]; 2],
    #[serde(rename = "A'B")]
    pub a_prime_b: [[f64; 2]; 2],
    #[serde(rename = "A'B'")]
    pub a_prime_b_prime: [[f64; 2]; 2],
}

impl TryFrom<MarginalsJson> for MarginalSet {
    type Error = Error;

    fn try_from(json: MarginalsJson) -> Result<Self> {
        MarginalSet::from_rows([json.ab, json.ab_prime, json.a_prime_b, json.a_prime_b_prime])
    }
}

impl From<MarginalSet> for MarginalsJson {
    fn from(set: MarginalSet) -> Self {
        let rows = |t: &ProbabilityTable| {
            let v = t.values();
            [[v[0], v[1]], [v[2], v[3]]]
        };
        MarginalsJson {
            ab: rows(&set.tables[0]),
            ab_prime: rows(&set.tables[1]),
            a_prime_b: rows(&set.tables[2]),
            a_prime_b_prime: rows(&set.tables[3]),
        }
    }
}

/// Largest disagreement of each single-variable marginal between the two
/// tables it appears in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoSignalingReport {
    /// Discrepancies for `A`, `A'`, `B`, `B'`.
    pub discrepancies: [f64; 4],
    pub max: f64,
    pub pass: bool,
}

pub fn check_no_signaling(m: &MarginalSet) -> NoSignalingReport {
    check_no_signaling_with_tol(m, DEFAULT_TOL)
}

pub fn check_no_signaling_with_tol(m: &MarginalSet, tol: f64) -> NoSignalingReport {
    let (a_ab, b_ab) = m.singles(0);
    let (a_abp, bp_abp) = m.singles(1);
    let (ap_apb, b_apb) = m.singles(2);
    let (ap_apbp, bp_apbp) = m.singles(3);
    let discrepancies = [
        (a_ab - a_abp).abs(),
        (ap_apb - ap_apbp).abs(),
        (b_ab - b_apb).abs(),
        (bp_abp - bp_apbp).abs(),
    ];
    let max = discrepancies.iter().fold(0.0, |a: f64, &b| a.max(b));
    NoSignalingReport {
        discrepancies,
        max,
        pass: max <= tol,
    }
}

/// CHSH value exceeding 2 that rules out a joint distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshCertificate {
    /// Index into [`ChshReport::values`].
    pub inequality: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// Joint over `(a, a', b, b')`, axes in that order.
    Feasible { joint: ProbabilityTable, residual: f64 },
    Infeasible { certificate: ChshCertificate, lp_residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDecision {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub chsh: ChshReport,
    /// `max |S|` within `tol` of 2: the LP verdict is reported but the CHSH
    /// cross-check is not enforced.
    pub boundary: bool,
}

impl JointDecision {
    pub fn is_feasible(&self) -> bool {
        matches!(self.verdict, Verdict::Feasible { .. })
    }
}

/// Independent characterization: every CHSH value within `[−2 − tol, 2 + tol]`.
pub fn chsh_admits_joint(m: &MarginalSet, tol: f64) -> Result<bool> {
    Ok(m.chsh()?.max_abs() <= 2.0 + tol)
}

/// For table `k`, which positions of `(a, a', b, b')` it constrains.
const TABLE_AXES: [[usize; 2]; 4] = [[0, 2], [0, 3], [1, 2], [1, 3]];

fn marginal_equations(m: &MarginalSet) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rows = Vec::with_capacity(17);
    let mut rhs = Vec::with_capacity(17);
    rows.push(vec![1.0; 16]);
    rhs.push(1.0);
    for (k, axes) in TABLE_AXES.iter().enumerate() {
        for x in 0..2 {
            for y in 0..2 {
                let mut row = vec![0.0; 16];
                for (flat, cell) in row.iter_mut().enumerate() {
                    let idx = [flat >> 3 & 1, flat >> 2 & 1, flat >> 1 & 1, flat & 1];
                    if idx[axes[0]] == x && idx[axes[1]] == y {
                        *cell = 1.0;
                    }
                }
                rows.push(row);
                rhs.push(m.tables[k].get(&[x, y]));
            }
        }
    }
    (rows, rhs)
}

/// Largest deviation of the joint's four marginals from `m`.
pub fn marginal_residual(joint: &ProbabilityTable, m: &MarginalSet) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (axes, t) in TABLE_AXES.iter().zip(&m.tables) {
        worst = worst.max(joint.marginal(axes)?.max_abs_diff(t)?);
    }
    Ok(worst)
}

/// Searches for a joint distribution reproducing the four marginals.
pub fn joint_exists(m: &MarginalSet) -> Result<JointDecision> {
    joint_exists_with_tol(m, DEFAULT_TOL)
}

pub fn joint_exists_with_tol(m: &MarginalSet, tol: f64) -> Result<JointDecision> {
    let ns = check_no_signaling_with_tol(m, tol);
    if !ns.pass {
        return Err(Error::Signaling(ns.max));
    }
    let chsh = m.chsh()?;
    let excess = chsh.max_abs() - 2.0;
    let boundary = excess.abs() <= tol;

    let (rows, rhs) = marginal_equations(m);
    let (keep, _) = independent_rows(&rows, &rhs, 1e-9);
    let a: Vec<Vec<f64>> = keep.iter().map(|&r| rows[r].clone()).collect();
    let b: Vec<f64> = keep.iter().map(|&r| rhs[r]).collect();

    let verdict = match find_feasible(&a, &b, LP_FEASIBILITY) {
        Phase1::Feasible { x, .. } => {
            // LP variables are already laid out as (a, a', b, b')
            let joint = ProbabilityTable::with_tol(vec![2, 2, 2, 2], x, tol)?;
            let residual = marginal_residual(&joint, m)?;
            Verdict::Feasible { joint, residual }
        }
        Phase1::Infeasible { residual } => {
            let inequality = chsh.most_violated();
            Verdict::Infeasible {
                certificate: ChshCertificate {
                    inequality,
                    value: chsh.values[inequality],
                },
                lp_residual: residual,
            }
        }
    };
    let feasible = matches!(verdict, Verdict::Feasible { .. });
    if !boundary && feasible != (excess < 0.0) {
        return Err(Error::Internal(format!(
            "LP says {} but max |S| = {}",
            if feasible { "feasible" } else { "infeasible" },
            chsh.max_abs()
        )));
    }
    Ok(JointDecision {
        verdict,
        chsh,
        boundary,
    })
}

/// [`joint_exists`] over a batch, results in input order.
pub fn joint_exists_batch(sets: &[MarginalSet], exec: Execution) -> Vec<Result<JointDecision>> {
    exec.map(sets, joint_exists)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn product_table(p: f64, q: f64) -> [[f64; 2]; 2] {
        [[p * q, p * (1.0 - q)], [(1.0 - p) * q, (1.0 - p) * (1.0 - q)]]
    }

    #[test]
    fn uniform_tables_pass_and_are_feasible() {
        let u = [[0.25; 2]; 2];
        let m = MarginalSet::from_rows([u; 4]).unwrap();
        let ns = check_no_signaling(&m);
        assert!(ns.pass && ns.max == 0.0);
        let d = joint_exists(&m).unwrap();
        assert!(d.is_feasible() && !d.boundary);
    }

    #[test]
    fn signaling_set_is_rejected() {
        // A-marginal 0.6 in (A,B) but 0.4 in (A,B')
        let m = MarginalSet::from_rows([
            [[0.3, 0.3], [0.2, 0.2]],
            [[0.2, 0.2], [0.3, 0.3]],
            [[0.25; 2]; 2],
            [[0.25; 2]; 2],
        ])
        .unwrap();
        let ns = check_no_signaling(&m);
        assert!(!ns.pass);
        assert!((ns.discrepancies[0] - 0.2).abs() < 1e-15);
        assert!((ns.max - 0.2).abs() < 1e-15);
        assert!(matches!(joint_exists(&m), Err(Error::Signaling(_))));
    }

    #[test]
    fn independent_coins_have_product_joint() {
        let (pa, pap, pb, pbp) = (0.3, 0.9, 0.55, 0.1);
        let m = MarginalSet::from_rows([
            product_table(pa, pb),
            product_table(pa, pbp),
            product_table(pap, pb),
            product_table(pap, pbp),
        ])
        .unwrap();
        let d = joint_exists(&m).unwrap();
        match &d.verdict {
            Verdict::Feasible { joint, residual } => {
                assert!(*residual <= 1e-12);
                assert!(marginal_residual(joint, &m).unwrap() <= 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pr_box_is_infeasible() {
        // a ⊕ b = a'·b' style correlations: three perfect correlations, one perfect anticorrelation
        let corr = [[0.5, 0.0], [0.0, 0.5]];
        let anti = [[0.0, 0.5], [0.5, 0.0]];
        let m = MarginalSet::from_rows([corr, corr, corr, anti]).unwrap();
        let d = joint_exists(&m).unwrap();
        match d.verdict {
            Verdict::Infeasible { certificate, lp_residual } => {
                assert_eq!(certificate.value, 4.0);
                assert_eq!(certificate.inequality, 6);
                assert!(lp_residual > 0.1);
            }
            other => panic!("{other:?}"),
        }
        assert!(!chsh_admits_joint(&m, DEFAULT_TOL).unwrap());
    }

    #[test]
    fn deterministic_box_sits_on_boundary() {
        let plus = [[1.0, 0.0], [0.0, 0.0]];
        let m = MarginalSet::from_rows([plus; 4]).unwrap();
        let d = joint_exists(&m).unwrap();
        assert!(d.boundary);
        assert!(d.is_feasible());
    }

    #[test]
    fn marginals_json_round_trip() {
        let m = MarginalSet::from_rows([
            product_table(0.3, 0.55),
            product_table(0.3, 0.1),
            product_table(0.9, 0.55),
            product_table(0.9, 0.1),
        ])
        .unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"A'B'\""));
        let back: MarginalSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<MarginalSet>(r#"{"AB":[[1,0],[0,0]],"AB'":[[1,0],[0,1]],"A'B":[[1,0],[0,0]],"A'B'":[[1,0],[0,0]]}"#).is_err());
    }

    #[test]
    fn rejects_non_square_tables() {
        let flat = ProbabilityTable::new(vec![4], vec![0.25; 4]).unwrap();
        let sq = ProbabilityTable::from_2x2([[0.25; 2]; 2]).unwrap();
        assert!(MarginalSet::new([flat, sq.clone(), sq.clone(), sq]).is_err());
    }
}

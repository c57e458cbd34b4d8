//! POVMs, PVMs and the instrument model that induces a POVM on the object.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::operator::{partial_trace, tensor, MatrixJson, Operator, State, Subsystem};
use crate::table::ProbabilityTable;
use crate::{Error, Result, DEFAULT_TOL};

/// Positive operators summing to the identity, optionally indexed by a
/// multi-index (stored flat, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct PovmMeasure {
    labels: Vec<String>,
    elements: Vec<Operator>,
    index_shape: Option<Vec<usize>>,
}

impl PovmMeasure {
    pub fn new(
        labels: Vec<String>,
        elements: Vec<Operator>,
        index_shape: Option<Vec<usize>>,
    ) -> Result<Self> {
        Self::with_tol(labels, elements, index_shape, DEFAULT_TOL)
    }

    pub fn with_tol(
        labels: Vec<String>,
        elements: Vec<Operator>,
        index_shape: Option<Vec<usize>>,
        tol: f64,
    ) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidMeasure("no elements".into()))?;
        let dim = first.dim();
        if labels.len() != elements.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} labels for {} elements",
                labels.len(),
                elements.len()
            )));
        }
        if let Some(shape) = &index_shape {
            if shape.is_empty() || shape.iter().product::<usize>() != elements.len() {
                return Err(Error::InvalidMeasure(format!(
                    "index shape {shape:?} does not hold {} elements",
                    elements.len()
                )));
            }
        }
        let mut sum = Operator::zeros(dim);
        for (label, e) in labels.iter().zip(&elements) {
            if e.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: e.dim(),
                });
            }
            if !e.is_positive(tol) {
                return Err(Error::InvalidMeasure(format!("element {label} is not positive")));
            }
            sum = sum.add(e)?;
        }
        let dev = sum.max_abs_diff(&Operator::identity(dim))?;
        if dev > tol {
            return Err(Error::InvalidMeasure(format!(
                "elements do not sum to the identity (deviation {dev:.3e})"
            )));
        }
        Ok(Self {
            labels,
            elements,
            index_shape,
        })
    }

    /// Elements labeled by their position.
    pub fn from_elements(elements: Vec<Operator>) -> Result<Self> {
        let labels = (0..elements.len()).map(|k| k.to_string()).collect();
        Self::new(labels, elements, None)
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    pub fn index_shape(&self) -> Option<&[usize]> {
        self.index_shape.as_deref()
    }

    /// Shape of the probability tables this measure produces.
    pub fn table_shape(&self) -> Vec<usize> {
        self.index_shape
            .clone()
            .unwrap_or_else(|| vec![self.elements.len()])
    }

    /// Element at a multi-index.
    pub fn element(&self, index: &[usize]) -> &Operator {
        let shape = self.table_shape();
        assert_eq!(index.len(), shape.len(), "index rank");
        let flat = index.iter().zip(&shape).fold(0, |acc, (&i, &n)| acc * n + i);
        &self.elements[flat]
    }

    /// Sums elements over every axis not in `keep`. Labels of the result are
    /// the kept indices joined by commas.
    pub fn marginal(&self, keep: &[usize]) -> Result<PovmMeasure> {
        let shape = self.table_shape();
        let probe = ProbabilityTable::from_raw(shape.clone(), vec![0.0; self.len()]);
        let out_shape: Vec<usize> = keep
            .iter()
            .map(|&a| shape.get(a).copied())
            .collect::<Option<_>>()
            .ok_or_else(|| Error::InvalidMeasure(format!("bad axes {keep:?}")))?;
        let size = out_shape.iter().product();
        let mut elements = vec![Operator::zeros(self.dim()); size];
        let mut labels = vec![String::new(); size];
        for (flat, e) in self.elements.iter().enumerate() {
            let index = probe.unflatten(flat);
            let sub: Vec<usize> = keep.iter().map(|&a| index[a]).collect();
            let k = sub.iter().zip(&out_shape).fold(0, |acc, (&i, &n)| acc * n + i);
            elements[k] = elements[k].add(e)?;
            labels[k] = sub.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        }
        let index_shape = (keep.len() > 1).then_some(out_shape);
        PovmMeasure::new(labels, elements, index_shape)
    }

    /// Generalized Born rule `p_m = Tr ρ M_m`.
    pub fn born_probabilities(&self, rho: &State) -> Result<ProbabilityTable> {
        self.born_probabilities_with_tol(rho, DEFAULT_TOL)
    }

    pub fn born_probabilities_with_tol(&self, rho: &State, tol: f64) -> Result<ProbabilityTable> {
        if rho.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        let values = self
            .elements
            .iter()
            .map(|e| rho.expectation(e).map(|c| c.re))
            .collect::<Result<Vec<f64>>>()?;
        if let Some((k, p)) = values.iter().enumerate().find(|(_, p)| **p < -tol) {
            return Err(Error::Internal(format!(
                "element {} yields probability {p}",
                self.labels[k]
            )));
        }
        ProbabilityTable::with_tol(self.table_shape(), values, tol)
    }

    /// Matrix whose row `k` is the row-major conjugated entries of `M_k`,
    /// so that `p = F vec(ρ)`.
    fn frame(&self) -> DMatrix<Complex64> {
        let d2 = self.dim() * self.dim();
        DMatrix::from_fn(self.len(), d2, |k, idx| {
            let d = self.dim();
            self.elements[k].get(idx / d, idx % d).conj()
        })
    }

    /// Rank of the flattened elements under singular-value threshold `tol`.
    pub fn frame_rank(&self, tol: f64) -> usize {
        self.frame()
            .singular_values()
            .iter()
            .filter(|&&s| s > tol)
            .count()
    }

    /// Whether the elements span the full operator space.
    pub fn is_complete(&self) -> bool {
        self.is_complete_with_tol(DEFAULT_TOL)
    }

    pub fn is_complete_with_tol(&self, tol: f64) -> bool {
        self.frame_rank(tol) == self.dim() * self.dim()
    }

    /// Linear-inversion reconstruction of the state behind `probabilities`.
    ///
    /// Fails if the measure is incomplete, if the probabilities are not in
    /// the range of the measure, or if the inverted operator is not positive.
    pub fn reconstruct_state(&self, probabilities: &ProbabilityTable) -> Result<State> {
        self.reconstruct_state_with_tol(probabilities, DEFAULT_TOL)
    }

    pub fn reconstruct_state_with_tol(
        &self,
        probabilities: &ProbabilityTable,
        tol: f64,
    ) -> Result<State> {
        let d = self.dim();
        if probabilities.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                found: probabilities.len(),
            });
        }
        let rank = self.frame_rank(tol);
        if rank < d * d {
            return Err(Error::Incomplete {
                rank,
                required: d * d,
            });
        }
        let frame = self.frame();
        let pinv = frame
            .clone()
            .pseudo_inverse(tol)
            .map_err(|e| Error::Internal(e.to_string()))?;
        let p = DMatrix::from_iterator(
            self.len(),
            1,
            probabilities.values().iter().map(|&v| Complex64::new(v, 0.0)),
        );
        let rho_vec = &pinv * &p;
        let consistency = (&frame * &rho_vec - &p).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if consistency > 1e-8 {
            return Err(Error::Infeasible(format!(
                "probabilities lie outside the span of the measure (residual {consistency:.3e})"
            )));
        }
        let op = Operator::new(d, rho_vec.iter().copied().collect())?.hermitian_part();
        let min = op.eigenvalues(f64::INFINITY)?[0];
        if min < -tol {
            return Err(Error::Infeasible(format!(
                "reconstructed operator has eigenvalue {min:.3e}"
            )));
        }
        State::with_tol(op, tol)
    }
}

/// Orthogonal projectors summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PvmMeasure {
    inner: PovmMeasure,
}

impl PvmMeasure {
    pub fn new(labels: Vec<String>, elements: Vec<Operator>) -> Result<Self> {
        Self::with_tol(labels, elements, DEFAULT_TOL)
    }

    pub fn with_tol(labels: Vec<String>, elements: Vec<Operator>, tol: f64) -> Result<Self> {
        Self::from_povm(PovmMeasure::with_tol(labels, elements, None, tol)?, tol)
    }

    pub fn from_povm(povm: PovmMeasure, tol: f64) -> Result<Self> {
        let elements = povm.elements();
        for (label, e) in povm.labels().iter().zip(elements) {
            if !e.is_projector(tol) {
                return Err(Error::InvalidMeasure(format!("element {label} is not a projector")));
            }
        }
        for i in 0..elements.len() {
            for j in i + 1..elements.len() {
                let overlap = elements[i].mul(&elements[j])?.trace().norm();
                if overlap > tol {
                    return Err(Error::InvalidMeasure(format!(
                        "elements {} and {} overlap ({overlap:.3e})",
                        povm.labels()[i],
                        povm.labels()[j]
                    )));
                }
            }
        }
        Ok(Self { inner: povm })
    }

    /// Rank-one projectors onto the given (normalized internally) vectors.
    pub fn from_vectors(labels: Vec<String>, vectors: &[Vec<Complex64>]) -> Result<Self> {
        let elements = vectors
            .iter()
            .map(|v| Operator::projector(v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, elements)
    }

    /// Projectors onto the computational basis.
    pub fn computational(dim: usize) -> Self {
        let elements = (0..dim)
            .map(|k| {
                let mut d = vec![0.0; dim];
                d[k] = 1.0;
                Operator::diag(&d)
            })
            .collect();
        let labels = (0..dim).map(|k| k.to_string()).collect();
        Self::new(labels, elements).expect("computational basis is a PVM")
    }

    /// All projectors rank one.
    pub fn is_maximal(&self, tol: f64) -> bool {
        self.inner
            .elements()
            .iter()
            .all(|e| (e.trace().re - 1.0).abs() <= tol)
    }

    pub fn as_povm(&self) -> &PovmMeasure {
        &self.inner
    }

    pub fn into_povm(self) -> PovmMeasure {
        self.inner
    }

    pub fn elements(&self) -> &[Operator] {
        self.inner.elements()
    }

    pub fn labels(&self) -> &[String] {
        self.inner.labels()
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }
}

/// Object–apparatus interaction: the apparatus starts in `apparatus_state`,
/// the pair evolves under the unitary `coupling` (`U = exp(−iHT/ħ)`), and the
/// pointer PVM is read on the apparatus.
#[derive(Debug, Clone)]
pub struct InstrumentModel {
    apparatus_state: State,
    coupling: Operator,
    pointer: PvmMeasure,
    object_dim: usize,
}

impl InstrumentModel {
    pub fn new(
        object_dim: usize,
        apparatus_state: State,
        coupling: Operator,
        pointer: PvmMeasure,
    ) -> Result<Self> {
        Self::with_tol(object_dim, apparatus_state, coupling, pointer, DEFAULT_TOL)
    }

    pub fn with_tol(
        object_dim: usize,
        apparatus_state: State,
        coupling: Operator,
        pointer: PvmMeasure,
        tol: f64,
    ) -> Result<Self> {
        let apparatus_dim = apparatus_state.dim();
        if pointer.dim() != apparatus_dim {
            return Err(Error::Dimension {
                expected: apparatus_dim,
                found: pointer.dim(),
            });
        }
        if coupling.dim() != object_dim * apparatus_dim {
            return Err(Error::Dimension {
                expected: object_dim * apparatus_dim,
                found: coupling.dim(),
            });
        }
        let dev = coupling.unitary_deviation();
        if dev > tol {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self {
            apparatus_state,
            coupling,
            pointer,
            object_dim,
        })
    }

    pub fn object_dim(&self) -> usize {
        self.object_dim
    }

    pub fn apparatus_dim(&self) -> usize {
        self.apparatus_state.dim()
    }

    fn lifted_pointer(&self, e: &Operator) -> Operator {
        tensor(&Operator::identity(self.object_dim), e)
    }

    /// Object POVM `M_m = Tr_a (I ⊗ ρ_a) U† (I ⊗ E_m) U`.
    pub fn induced_povm(&self) -> Result<PovmMeasure> {
        let rho_a = tensor(&Operator::identity(self.object_dim), self.apparatus_state.op());
        let u_dag = self.coupling.adjoint();
        let dims = (self.object_dim, self.apparatus_dim());
        let elements = self
            .pointer
            .elements()
            .iter()
            .map(|e| {
                let heisenberg = u_dag.mul(&self.lifted_pointer(e))?.mul(&self.coupling)?;
                Ok(partial_trace(&rho_a.mul(&heisenberg)?, dims, Subsystem::First)?.hermitian_part())
            })
            .collect::<Result<Vec<_>>>()?;
        PovmMeasure::new(self.pointer.labels().to_vec(), elements, None)
    }

    /// Pointer statistics computed on the full object–apparatus space,
    /// `Tr U(ρ_o ⊗ ρ_a)U† (I ⊗ E_m)`.
    pub fn full_space_probabilities(&self, rho_o: &State) -> Result<Vec<f64>> {
        if rho_o.dim() != self.object_dim {
            return Err(Error::Dimension {
                expected: self.object_dim,
                found: rho_o.dim(),
            });
        }
        let initial = tensor(rho_o.op(), self.apparatus_state.op());
        let fin = self.coupling.mul(&initial)?.mul(&self.coupling.adjoint())?;
        self.pointer
            .elements()
            .iter()
            .map(|e| Ok(fin.mul(&self.lifted_pointer(e))?.trace().re))
            .collect()
    }
}

/// Object POVM induced by an instrument model.
pub fn povm_from_instrument(model: &InstrumentModel) -> Result<PovmMeasure> {
    model.induced_povm()
}

/// Wire form `{ "labels": [...], "index_shape": [...] | null, "elements": [...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureJson {
    pub labels: Vec<String>,
    pub index_shape: Option<Vec<usize>>,
    pub elements: Vec<MatrixJson>,
}

impl From<&PovmMeasure> for MeasureJson {
    fn from(m: &PovmMeasure) -> Self {
        Self {
            labels: m.labels.clone(),
            index_shape: m.index_shape.clone(),
            elements: m.elements.iter().map(MatrixJson::from).collect(),
        }
    }
}

impl MeasureJson {
    pub fn to_povm(&self, tol: f64) -> Result<PovmMeasure> {
        let elements = self
            .elements
            .iter()
            .map(Operator::try_from)
            .collect::<Result<Vec<_>>>()?;
        PovmMeasure::with_tol(self.labels.clone(), elements, self.index_shape.clone(), tol)
    }

    pub fn to_pvm(&self, tol: f64) -> Result<PvmMeasure> {
        PvmMeasure::from_povm(self.to_povm(tol)?, tol)
    }
}

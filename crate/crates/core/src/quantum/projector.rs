use num_complex::Complex64;

use super::{StateVector, EXACT_TOL};
use crate::error::{Error, Result};

/// An orthogonal projector, stored in factored form so that probabilities
/// and collapses cost `O(rank · dim)` instead of `O(dim²)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Projector {
    /// `Σ |v><v|` over orthonormal vectors.
    Span(Vec<StateVector>),
    /// `I - Σ |v><v|` over orthonormal vectors of a `qubits`-qubit space.
    Complement { qubits: usize, vectors: Vec<StateVector> },
    /// Projects onto the subspace where `qubit` reads `value`.
    QubitValue { qubits: usize, qubit: usize, value: u8 },
}

impl Projector {
    pub fn qubit_count(&self) -> usize {
        match self {
            Projector::Span(v) => v.first().map_or(0, StateVector::qubit_count),
            Projector::Complement { qubits, .. } | Projector::QubitValue { qubits, .. } => *qubits,
        }
    }

    /// Unnormalized `P|ψ>`.
    pub fn project(&self, psi: &StateVector) -> Result<Vec<Complex64>> {
        self.check_dims(psi)?;
        Ok(match self {
            Projector::Span(vs) => {
                let mut out = vec![Complex64::new(0.0, 0.0); psi.dim()];
                for v in vs {
                    let c = v.inner(psi)?;
                    for (o, a) in out.iter_mut().zip(v.amplitudes()) {
                        *o += c * a;
                    }
                }
                out
            }
            Projector::Complement { vectors, .. } => {
                let mut out = psi.amplitudes().to_vec();
                for v in vectors {
                    let c = v.inner(psi)?;
                    for (o, a) in out.iter_mut().zip(v.amplitudes()) {
                        *o -= c * a;
                    }
                }
                out
            }
            Projector::QubitValue { qubits, qubit, value } => {
                let mask = 1usize << (qubits - 1 - qubit);
                psi.amplitudes()
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        if ((i & mask) != 0) == (*value == 1) {
                            *a
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                    .collect()
            }
        })
    }

    /// Born probability `<ψ|P|ψ>`.
    pub fn probability(&self, psi: &StateVector) -> Result<f64> {
        self.check_dims(psi)?;
        Ok(match self {
            Projector::Span(vs) => {
                let mut p = 0.0;
                for v in vs {
                    p += v.inner(psi)?.norm_sqr();
                }
                p
            }
            Projector::Complement { vectors, .. } => {
                let mut p = psi.norm_sqr();
                for v in vectors {
                    p -= v.inner(psi)?.norm_sqr();
                }
                p.max(0.0)
            }
            Projector::QubitValue { qubit, value, .. } => psi.qubit_probability(*qubit, *value),
        })
    }

    /// Dense row-major matrix. Intended for invariant checks on small spaces.
    pub fn to_matrix(&self) -> Vec<Complex64> {
        let qubits = self.qubit_count();
        let d = 1usize << qubits;
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        let add_outer = |m: &mut Vec<Complex64>, v: &StateVector, sign: f64| {
            let a = v.amplitudes();
            for r in 0..d {
                for c in 0..d {
                    m[r * d + c] += sign * a[r] * a[c].conj();
                }
            }
        };
        match self {
            Projector::Span(vs) => vs.iter().for_each(|v| add_outer(&mut m, v, 1.0)),
            Projector::Complement { vectors, .. } => {
                for i in 0..d {
                    m[i * d + i] = Complex64::new(1.0, 0.0);
                }
                vectors.iter().for_each(|v| add_outer(&mut m, v, -1.0));
            }
            Projector::QubitValue { qubits, qubit, value } => {
                let mask = 1usize << (qubits - 1 - qubit);
                for i in 0..d {
                    if ((i & mask) != 0) == (*value == 1) {
                        m[i * d + i] = Complex64::new(1.0, 0.0);
                    }
                }
            }
        }
        m
    }

    fn check_dims(&self, psi: &StateVector) -> Result<()> {
        if self.qubit_count() != psi.qubit_count() {
            return Err(Error::contract(format!(
                "{}-qubit projector applied to {}-qubit state",
                self.qubit_count(),
                psi.qubit_count()
            )));
        }
        Ok(())
    }
}

/// A complete set of mutually orthogonal projectors with one label each.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorSet<L> {
    entries: Vec<(L, Projector)>,
}

impl<L: Clone> ProjectorSet<L> {
    pub fn new(entries: Vec<(L, Projector)>) -> Result<Self> {
        let Some(q) = entries.first().map(|(_, p)| p.qubit_count()) else {
            return Err(Error::contract("projector set is empty"));
        };
        if entries.iter().any(|(_, p)| p.qubit_count() != q) {
            return Err(Error::contract("projectors act on different spaces"));
        }
        Ok(ProjectorSet { entries })
    }

    /// One rank-1 projector per vector of a full orthonormal basis.
    pub fn from_basis(basis: Vec<(L, StateVector)>) -> Result<Self> {
        Self::new(
            basis
                .into_iter()
                .map(|(l, v)| (l, Projector::Span(vec![v])))
                .collect(),
        )
    }

    pub fn qubit_count(&self) -> usize {
        self.entries[0].1.qubit_count()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &L> {
        self.entries.iter().map(|(l, _)| l)
    }

    pub fn entries(&self) -> &[(L, Projector)] {
        &self.entries
    }

    pub fn probabilities(&self, psi: &StateVector) -> Result<Vec<f64>> {
        self.entries.iter().map(|(_, p)| p.probability(psi)).collect()
    }

    /// Largest entrywise deviation from idempotence, hermiticity,
    /// completeness, or mutual orthogonality. Dense; small spaces only.
    pub fn invariant_deviation(&self) -> f64 {
        let d = 1usize << self.qubit_count();
        let mats: Vec<Vec<Complex64>> = self.entries.iter().map(|(_, p)| p.to_matrix()).collect();
        let mut worst = 0.0f64;
        let mul = |a: &[Complex64], b: &[Complex64], r: usize, c: usize| -> Complex64 {
            (0..d).map(|k| a[r * d + k] * b[k * d + c]).sum()
        };
        for (i, a) in mats.iter().enumerate() {
            for r in 0..d {
                for c in 0..d {
                    worst = worst.max((mul(a, a, r, c) - a[r * d + c]).norm());
                    worst = worst.max((a[c * d + r].conj() - a[r * d + c]).norm());
                }
            }
            for b in &mats[i + 1..] {
                for r in 0..d {
                    for c in 0..d {
                        worst = worst.max(mul(a, b, r, c).norm());
                    }
                }
            }
        }
        for r in 0..d {
            for c in 0..d {
                let s: Complex64 = mats.iter().map(|m| m[r * d + c]).sum();
                let want = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((s - want).norm());
            }
        }
        worst
    }

    pub fn is_valid(&self) -> bool {
        self.invariant_deviation() <= EXACT_TOL
    }
}

impl ProjectorSet<u8> {
    /// Computational-basis measurement of a single qubit, labels 0 and 1.
    pub fn single_qubit(qubits: usize, qubit: usize) -> Result<Self> {
        if qubit >= qubits {
            return Err(Error::contract(format!("qubit {qubit} out of range for {qubits} qubits")));
        }
        Self::new(vec![
            (0, Projector::QubitValue { qubits, qubit, value: 0 }),
            (1, Projector::QubitValue { qubits, qubit, value: 1 }),
        ])
    }
}

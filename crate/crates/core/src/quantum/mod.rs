//! Exact dense state-vector engine.
//!
//! Everything above this layer (block states, chains, validation bases)
//! is built from, and checked against, these primitives.

mod projector;
mod rng;
mod state;
mod unitary;

use num_complex::Complex64;

pub use projector::{Projector, ProjectorSet};
pub use rng::RandomSource;
pub use state::{StateVector, MAX_QUBITS};
pub use unitary::UnitaryMatrix;

pub(crate) use state::bits_to_index;

use crate::error::{Error, Result};

/// Tolerance for exactness checks (norms, unitarity, completeness).
pub const EXACT_TOL: f64 = 1e-10;

/// Outcomes below this probability are treated as impossible.
pub const DEGENERACY_TOL: f64 = 1e-12;

pub fn basis_ket(bits: &[u8]) -> Result<StateVector> {
    StateVector::basis(bits)
}

pub fn tensor_product(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    a.tensor(b)
}

pub fn apply_unitary(state: &StateVector, u: &UnitaryMatrix, targets: &[usize]) -> Result<StateVector> {
    state.apply(u, targets)
}

pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    a.inner(b)
}

/// Draws one outcome of `ps` on `state` by the Born rule and returns its
/// label with the renormalized post-measurement state.
pub fn projective_measure<L: Clone>(
    state: &StateVector,
    ps: &ProjectorSet<L>,
    rng: &mut RandomSource,
) -> Result<(L, StateVector)> {
    let probs = ps.probabilities(state)?;
    let total: f64 = probs.iter().filter(|&&p| p >= DEGENERACY_TOL).sum();
    if total < DEGENERACY_TOL {
        return Err(Error::NumericalDegeneracy {
            threshold: DEGENERACY_TOL,
        });
    }

    let draw = rng.uniform() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (i, &p) in probs.iter().enumerate() {
        if p < DEGENERACY_TOL {
            continue;
        }
        chosen = Some(i);
        acc += p;
        if draw < acc {
            break;
        }
    }
    // `chosen` is the last admissible outcome if rounding left draw >= acc
    let i = chosen.expect("total > 0 implies an admissible outcome");
    let (label, proj) = &ps.entries()[i];
    let collapsed = proj.project(state)?;
    let scale = probs[i].sqrt();
    let amps = collapsed.into_iter().map(|a| a / scale).collect();
    Ok((label.clone(), StateVector::from_parts(state.qubit_count(), amps)))
}

/// Orthonormalizes `vectors` and extends them to a full basis of the
/// `dim`-dimensional space by sweeping computational basis vectors in index
/// order. The first `vectors.len()` outputs span the inputs.
pub fn gram_schmidt_complete(vectors: &[StateVector], dim: usize) -> Result<Vec<StateVector>> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::contract(format!("dimension {dim} is not a power of two ≥ 2")));
    }
    let qubits = dim.trailing_zeros() as usize;
    if vectors.len() > dim {
        return Err(Error::contract(format!("{} vectors exceed dimension {dim}", vectors.len())));
    }
    if let Some(v) = vectors.iter().find(|v| v.dim() != dim) {
        return Err(Error::contract(format!(
            "vector of dimension {} in a {dim}-dimensional completion",
            v.dim()
        )));
    }

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    for v in vectors {
        let residual = orthogonalize(v.amplitudes().to_vec(), &basis);
        let n = norm(&residual);
        if n < EXACT_TOL {
            return Err(Error::contract("input vectors are linearly dependent"));
        }
        basis.push(residual.into_iter().map(|a| a / n).collect());
    }

    for j in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut e = vec![Complex64::new(0.0, 0.0); dim];
        e[j] = Complex64::new(1.0, 0.0);
        let residual = orthogonalize(e, &basis);
        let n = norm(&residual);
        // components of e_j outside the current span; skip near-dependent ones
        if n > 1e-6 {
            basis.push(residual.into_iter().map(|a| a / n).collect());
        }
    }
    debug_assert_eq!(basis.len(), dim);

    Ok(basis
        .into_iter()
        .map(|amps| StateVector::from_parts(qubits, amps))
        .collect())
}

// Modified Gram-Schmidt, applied twice for stability.
fn orthogonalize(mut v: Vec<Complex64>, basis: &[Vec<Complex64>]) -> Vec<Complex64> {
    for _ in 0..2 {
        for b in basis {
            let c: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
    }
    v
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

//! Brute-force chain construction.
//!
//! Builds the chain state without the symbolic shortcut: every block
//! state is prepared by [`block_state`], tensored onto the chain, and the
//! seam between the old last qubit and the new first qubit is projected onto
//! the parity subspace that keeps only the two branch-consistent terms.
//! A block with `r1 = 1` first receives the heralded Pauli-frame correction
//! `ZX` on its leading qubit, which relabels `|0 r2>, -|1 r̄2>` to
//! `|1 r2>, |0 r̄2>` up to a global sign.

use num_complex::Complex64;

use crate::encoding::{block_state, BlockEncoding};
use crate::error::{Error, Result};
use crate::quantum::{StateVector, UnitaryMatrix};

/// Explicit `2m`-qubit state of the chain built from `blocks` by
/// tensor-and-project fusion.
pub fn fused_chain_state(blocks: &[BlockEncoding]) -> Result<StateVector> {
    let (first, rest) = blocks
        .split_first()
        .ok_or_else(|| Error::ContractViolation("oracle chain needs a block".into()))?;
    let mut state = block_state(first);
    let mut last_bit = first.r2();
    for enc in rest {
        let mut block = block_state(enc);
        if enc.r1() == 1 {
            let zx = UnitaryMatrix::pauli_z().mul(&UnitaryMatrix::pauli_x())?;
            block = block.apply(&zx, &[0])?;
        }
        let seam = state.qubit_count() - 1;
        let joined = state.tensor(&block)?;
        state = project_parity(&joined, seam, seam + 1, last_bit ^ enc.r1())?;
        last_bit = enc.r2();
    }
    Ok(state)
}

/// Keeps the component where `qubit a ⊕ qubit b = parity`, renormalized.
pub fn project_parity(state: &StateVector, a: usize, b: usize, parity: u8) -> Result<StateVector> {
    let n = state.qubit_count();
    let (ma, mb) = (1usize << (n - 1 - a), 1usize << (n - 1 - b));
    let amps = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, &amp)| {
            let p = (((i & ma) != 0) as u8) ^ (((i & mb) != 0) as u8);
            if p == parity {
                amp
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    StateVector::from_unnormalized(n, amps)
}

/// Reduces a two-branch GHZ-type state to its last qubit by projecting
/// every other qubit onto `|+>`, the heralded outcome of absorbing them
/// in the X basis.
pub fn absorb_all_but_last(state: &StateVector) -> Result<StateVector> {
    let mut amps = vec![Complex64::new(0.0, 0.0); 2];
    for (i, a) in state.amplitudes().iter().enumerate() {
        amps[i & 1] += a;
    }
    StateVector::from_unnormalized(1, amps)
}

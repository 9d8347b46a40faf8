use std::fmt;

use num_complex::Complex64;

use super::{UnitaryMatrix, EXACT_TOL};
use crate::error::{Error, Result};

/// Largest register the dense engine will allocate.
pub const MAX_QUBITS: usize = 14;

/// Dense pure state over `2^n` computational basis states.
///
/// Qubit 0 is the most significant bit of the basis index, so the ket
/// `|q0 q1 ... q(n-1)>` lives at index `q0·2^(n-1) + ... + q(n-1)`.
#[derive(Clone, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Wraps `amps` as a state. The length must be `2^qubits` and the norm
    /// must already be 1 within tolerance.
    pub fn new(qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubits(qubits)?;
        if amps.len() != 1usize << qubits {
            return Err(Error::contract(format!(
                "{} amplitudes cannot describe {} qubits",
                amps.len(),
                qubits
            )));
        }
        let state = StateVector { qubits, amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > EXACT_TOL {
            return Err(Error::contract(format!("state norm² is {norm}, not 1")));
        }
        Ok(state)
    }

    /// Builds a state from arbitrary nonzero amplitudes, rescaling to unit norm.
    pub fn from_unnormalized(qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubits(qubits)?;
        if amps.len() != 1usize << qubits {
            return Err(Error::contract(format!(
                "{} amplitudes cannot describe {} qubits",
                amps.len(),
                qubits
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 || !norm.is_finite() {
            return Err(Error::contract("cannot normalize a zero vector"));
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(StateVector { qubits, amps })
    }

    /// `|0...0>` on `qubits` qubits.
    pub fn zero(qubits: usize) -> Result<Self> {
        check_qubits(qubits)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { qubits, amps })
    }

    /// Computational basis state; `bits[0]` is the most significant qubit.
    pub fn basis(bits: &[u8]) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::contract("basis ket needs at least one bit"));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::contract(format!("{b} is not a bit")));
        }
        check_qubits(bits.len())?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << bits.len()];
        amps[bits_to_index(bits)] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            qubits: bits.len(),
            amps,
        })
    }

    /// Unchecked constructor for amplitudes already known to be normalized.
    pub(crate) fn from_parts(qubits: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << qubits);
        StateVector { qubits, amps }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let qubits = self.qubits + other.qubits;
        check_qubits(qubits)?;
        let mut amps = Vec::with_capacity(1 << qubits);
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Ok(StateVector { qubits, amps })
    }

    /// `<self|other>`, conjugating `self`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.qubits != other.qubits {
            return Err(Error::contract(format!(
                "inner product of {}-qubit and {}-qubit states",
                self.qubits, other.qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|²`, insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Applies `u` to the ordered `targets`; `targets[0]` is the most
    /// significant qubit of `u`'s index space.
    pub fn apply(&self, u: &UnitaryMatrix, targets: &[usize]) -> Result<StateVector> {
        let t = targets.len();
        if t == 0 || u.dim() != 1usize << t {
            return Err(Error::contract(format!(
                "{}x{} unitary cannot act on {} target qubits",
                u.dim(),
                u.dim(),
                t
            )));
        }
        for (i, &q) in targets.iter().enumerate() {
            if q >= self.qubits {
                return Err(Error::contract(format!(
                    "target qubit {q} out of range for {} qubits",
                    self.qubits
                )));
            }
            if targets[..i].contains(&q) {
                return Err(Error::contract(format!("target qubit {q} repeated")));
            }
        }

        let n = self.qubits;
        let masks: Vec<usize> = targets.iter().map(|&q| 1usize << (n - 1 - q)).collect();
        let target_mask: usize = masks.iter().sum();
        let sub = 1usize << t;
        // offsets[s] is the index offset of sub-basis state s within a block
        let offsets: Vec<usize> = (0..sub)
            .map(|s| {
                masks
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| s & (1 << (t - 1 - j)) != 0)
                    .map(|(_, m)| m)
                    .sum()
            })
            .collect();

        let mut out = self.amps.clone();
        let mut gathered = vec![Complex64::new(0.0, 0.0); sub];
        for base in (0..self.amps.len()).filter(|i| i & target_mask == 0) {
            for (s, off) in offsets.iter().enumerate() {
                gathered[s] = self.amps[base + off];
            }
            for (row, off) in offsets.iter().enumerate() {
                out[base + off] = (0..sub).map(|col| u.get(row, col) * gathered[col]).sum();
            }
        }
        Ok(StateVector {
            qubits: n,
            amps: out,
        })
    }

    /// Multiplies every amplitude by `e^{i·phase}`.
    pub fn with_global_phase(&self, phase: f64) -> StateVector {
        let f = Complex64::from_polar(1.0, phase);
        StateVector {
            qubits: self.qubits,
            amps: self.amps.iter().map(|a| a * f).collect(),
        }
    }

    /// Probability that `qubit` reads `value` in the computational basis.
    pub fn qubit_probability(&self, qubit: usize, value: u8) -> f64 {
        let mask = 1usize << (self.qubits - 1 - qubit);
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| ((i & mask) != 0) == (value == 1))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateVector({} qubits) [", self.qubits)?;
        let mut first = true;
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() < 1e-24 {
                continue;
            }
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "|{:0w$b}>: {:.6}", i, a, w = self.qubits)?;
        }
        write!(f, "]")
    }
}

pub(crate) fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

fn check_qubits(qubits: usize) -> Result<()> {
    if qubits == 0 {
        return Err(Error::contract("state needs at least one qubit"));
    }
    if qubits > MAX_QUBITS {
        return Err(Error::OracleScale {
            qubits,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plus() -> StateVector {
        StateVector::new(1, vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]).unwrap()
    }

    fn bell() -> StateVector {
        StateVector::new(
            2,
            vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn basis_kets() {
        assert_eq!(StateVector::basis(&[0]).unwrap().amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        let s = StateVector::basis(&[1, 1]).unwrap();
        assert_eq!(s.amplitudes()[3], c(1.0, 0.0));
        assert_eq!(s.norm_sqr(), 1.0);
        let s = StateVector::basis(&[0, 1, 0]).unwrap();
        assert_eq!(s.dim(), 8);
        assert_eq!(s.amplitude(2), c(1.0, 0.0));
        assert!(StateVector::basis(&[]).is_err());
        assert!(StateVector::basis(&[2]).is_err());
    }

    #[test]
    fn tensor_basis_and_linearity() {
        let k = StateVector::basis(&[0])
            .unwrap()
            .tensor(&StateVector::basis(&[1]).unwrap())
            .unwrap();
        assert_eq!(k, StateVector::basis(&[0, 1]).unwrap());

        let t = plus().tensor(&StateVector::basis(&[0]).unwrap()).unwrap();
        let want = [c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0)];
        for (a, b) in t.amplitudes().iter().zip(want) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn bell_tensor_bell_has_four_half_amplitudes() {
        let t = bell().tensor(&bell()).unwrap();
        assert_eq!(t.qubit_count(), 4);
        let nonzero: Vec<usize> = (0..16).filter(|&i| t.amplitude(i).norm() > 1e-12).collect();
        // |0000>, |0011>, |1100>, |1111>
        assert_eq!(nonzero, vec![0, 3, 12, 15]);
        for i in nonzero {
            assert!((t.amplitude(i).norm() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn inner_products() {
        let z = StateVector::basis(&[0]).unwrap();
        let o = StateVector::basis(&[1]).unwrap();
        assert_eq!(z.inner(&z).unwrap(), c(1.0, 0.0));
        assert_eq!(z.inner(&o).unwrap(), c(0.0, 0.0));

        let theta = 0.7;
        let phased = StateVector::new(
            1,
            vec![
                c(FRAC_1_SQRT_2, 0.0),
                Complex64::from_polar(FRAC_1_SQRT_2, theta),
            ],
        )
        .unwrap();
        let ip = plus().inner(&phased).unwrap();
        let want = (c(1.0, 0.0) + Complex64::from_polar(1.0, theta)) / 2.0;
        assert!((ip - want).norm() < 1e-14);
        assert!((ip.norm_sqr() - (theta / 2.0).cos().powi(2)).abs() < 1e-14);

        assert!(z.inner(&bell()).is_err());
    }

    #[test]
    fn phase_on_eleven_branch() {
        let theta = PI / 5.0;
        let u = UnitaryMatrix::diagonal(&[0.0, 0.0, 0.0, theta]).unwrap();
        let out = bell().apply(&u, &[0, 1]).unwrap();
        assert!((out.amplitude(0) - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
        assert!((out.amplitude(3) - Complex64::from_polar(FRAC_1_SQRT_2, theta)).norm() < 1e-14);
    }

    #[test]
    fn identity_and_pauli_x() {
        let s = bell();
        assert_eq!(s.apply(&UnitaryMatrix::identity(4), &[0, 1]).unwrap(), s);
        let flipped = StateVector::basis(&[0, 1])
            .unwrap()
            .apply(&UnitaryMatrix::pauli_x(), &[0])
            .unwrap();
        assert_eq!(flipped, StateVector::basis(&[1, 1]).unwrap());
    }

    #[test]
    fn apply_respects_target_order() {
        // CNOT with control on qubit 2 and target qubit 0 of |001>
        let s = StateVector::basis(&[0, 0, 1]).unwrap();
        let out = s.apply(&UnitaryMatrix::cnot(), &[2, 0]).unwrap();
        assert_eq!(out, StateVector::basis(&[1, 0, 1]).unwrap());
    }

    #[test]
    fn apply_rejects_bad_targets() {
        let s = bell();
        assert!(s.apply(&UnitaryMatrix::pauli_x(), &[0, 1]).is_err());
        assert!(s.apply(&UnitaryMatrix::pauli_x(), &[2]).is_err());
        assert!(s.apply(&UnitaryMatrix::identity(4), &[1, 1]).is_err());
    }

    #[test]
    fn new_rejects_bad_norm_and_length() {
        assert!(StateVector::new(1, vec![c(1.0, 0.0)]).is_err());
        assert!(StateVector::new(1, vec![c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(StateVector::from_unnormalized(1, vec![c(0.0, 0.0), c(0.0, 0.0)]).is_err());
    }
}

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use super::EXACT_TOL;
use crate::error::{Error, Result};

/// Dense square unitary, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl UnitaryMatrix {
    /// Checks `U†U = I` entrywise within the exactness tolerance.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::contract(format!("unitary dimension {dim} is not a power of two")));
        }
        if entries.len() != dim * dim {
            return Err(Error::contract(format!(
                "{} entries cannot form a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        let u = UnitaryMatrix { dim, entries };
        let dev = u.unitarity_deviation();
        if dev > EXACT_TOL {
            return Err(Error::contract(format!("matrix is not unitary (max |U†U - I| = {dev:e})")));
        }
        Ok(u)
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::contract("rows must form a square matrix"));
        }
        Self::new(dim, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = ONE;
        }
        UnitaryMatrix { dim, entries }
    }

    /// `diag(e^{iφ_0}, ..., e^{iφ_(d-1)})`.
    pub fn diagonal(phases: &[f64]) -> Result<Self> {
        let dim = phases.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::contract(format!("diagonal of length {dim} is not a power of two")));
        }
        let mut entries = vec![ZERO; dim * dim];
        for (i, &p) in phases.iter().enumerate() {
            entries[i * dim + i] = Complex64::from_polar(1.0, p);
        }
        Ok(UnitaryMatrix { dim, entries })
    }

    pub fn pauli_x() -> Self {
        UnitaryMatrix {
            dim: 2,
            entries: vec![ZERO, ONE, ONE, ZERO],
        }
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::new(0.0, 1.0);
        UnitaryMatrix {
            dim: 2,
            entries: vec![ZERO, -i, i, ZERO],
        }
    }

    pub fn pauli_z() -> Self {
        UnitaryMatrix {
            dim: 2,
            entries: vec![ONE, ZERO, ZERO, -ONE],
        }
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        UnitaryMatrix {
            dim: 2,
            entries: vec![h, h, h, -h],
        }
    }

    /// `diag(1, e^{iθ})`.
    pub fn phase(theta: f64) -> Self {
        UnitaryMatrix {
            dim: 2,
            entries: vec![ONE, ZERO, ZERO, Complex64::from_polar(1.0, theta)],
        }
    }

    /// `e^{iφ}·I` on one qubit.
    pub fn global_phase(phi: f64) -> Self {
        let p = Complex64::from_polar(1.0, phi);
        UnitaryMatrix {
            dim: 2,
            entries: vec![p, ZERO, ZERO, p],
        }
    }

    /// General single-qubit rotation `Rz(φ)·Ry(θ)·Rz(λ)` up to global phase.
    pub fn euler(theta: f64, phi: f64, lambda: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        UnitaryMatrix {
            dim: 2,
            entries: vec![
                Complex64::new(c, 0.0),
                -Complex64::from_polar(s, lambda),
                Complex64::from_polar(s, phi),
                Complex64::from_polar(c, phi + lambda),
            ],
        }
    }

    /// Controlled-NOT, control on the first target.
    pub fn cnot() -> Self {
        let mut entries = vec![ZERO; 16];
        entries[0] = ONE;
        entries[5] = ONE;
        entries[11] = ONE;
        entries[14] = ONE;
        UnitaryMatrix { dim: 4, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn qubit_count(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut entries = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                entries[c * d + r] = self.entries[r * d + c].conj();
            }
        }
        UnitaryMatrix { dim: d, entries }
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &UnitaryMatrix) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::contract("dimension mismatch in unitary product"));
        }
        let d = self.dim;
        let mut entries = vec![ZERO; d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.entries[r * d + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..d {
                    entries[r * d + c] += a * rhs.entries[k * d + c];
                }
            }
        }
        Ok(UnitaryMatrix { dim: d, entries })
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &UnitaryMatrix) -> Self {
        let (a, b) = (self.dim, rhs.dim);
        let d = a * b;
        let mut entries = vec![ZERO; d * d];
        for ar in 0..a {
            for ac in 0..a {
                let x = self.entries[ar * a + ac];
                for br in 0..b {
                    for bc in 0..b {
                        entries[(ar * b + br) * d + ac * b + bc] = x * rhs.entries[br * b + bc];
                    }
                }
            }
        }
        UnitaryMatrix { dim: d, entries }
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                let v: Complex64 = (0..d)
                    .map(|k| self.entries[k * d + r].conj() * self.entries[k * d + c])
                    .sum();
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((v - target).norm());
            }
        }
        worst
    }
}

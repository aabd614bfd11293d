//! Dense statevector and the gate set used by the policy circuit.
//!
//! Qubit `i` is bit `i` of the basis index (qubit 0 is least significant).

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 12;

pub type Gate = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::domain(format!(
                "qubit count {num_qubits} outside 1..={MAX_QUBITS}"
            )));
        }
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = ONE;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes, rejecting wrong lengths or non-unit norm.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() || len > 1 << MAX_QUBITS {
            return Err(Error::shape(format!("{len} amplitudes is not 2^q")));
        }
        let s = Self {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes,
        };
        if (s.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("state norm {} is not 1", s.norm())));
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Born-rule probabilities of the computational basis states.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply_1q(&mut self, gate: &Gate, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        apply_1q_raw(&mut self.amplitudes, gate, qubit);
        Ok(())
    }

    pub fn apply_cz(&mut self, q1: usize, q2: usize) -> Result<()> {
        self.check_qubit(q1)?;
        self.check_qubit(q2)?;
        if q1 == q2 {
            return Err(Error::domain(format!("CZ needs two distinct qubits, got {q1} twice")));
        }
        apply_cz_raw(&mut self.amplitudes, q1, q2);
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::domain(format!(
                "qubit {q} outside register of {}",
                self.num_qubits
            )));
        }
        Ok(())
    }
}

pub(crate) fn apply_1q_raw(amps: &mut [Complex64], gate: &Gate, qubit: usize) {
    let mask = 1usize << qubit;
    for i in 0..amps.len() {
        if i & mask == 0 {
            let j = i | mask;
            let (a0, a1) = (amps[i], amps[j]);
            amps[i] = gate[0][0] * a0 + gate[0][1] * a1;
            amps[j] = gate[1][0] * a0 + gate[1][1] * a1;
        }
    }
}

pub(crate) fn apply_cz_raw(amps: &mut [Complex64], q1: usize, q2: usize) {
    let mask = (1usize << q1) | (1usize << q2);
    for (i, a) in amps.iter_mut().enumerate() {
        if i & mask == mask {
            *a = -*a;
        }
    }
}

/// `R_Y(φ) = exp(−iφY/2)`.
pub fn ry(angle: f64) -> Gate {
    let (s, c) = (angle / 2.0).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

/// `R_Z(φ) = exp(−iφZ/2)`.
pub fn rz(angle: f64) -> Gate {
    let half = angle / 2.0;
    [
        [Complex64::from_polar(1.0, -half), ZERO],
        [ZERO, Complex64::from_polar(1.0, half)],
    ]
}

pub fn hadamard() -> Gate {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

pub fn pauli_x() -> Gate {
    [[ZERO, ONE], [ONE, ZERO]]
}

pub fn pauli_y() -> Gate {
    let i = Complex64::new(0.0, 1.0);
    [[ZERO, -i], [i, ZERO]]
}

pub fn pauli_z() -> Gate {
    [[ONE, ZERO], [ZERO, -ONE]]
}

pub fn identity() -> Gate {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn matmul(a: &Gate, b: &Gate) -> Gate {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn dagger(a: &Gate) -> Gate {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

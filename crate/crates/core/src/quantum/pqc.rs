//! Hardware-efficient policy circuit with data re-uploading.
//!
//! Layout: `H^{⊗q}` on `|0…0⟩`, then `η` repetitions of
//! encoding (`R_Y(υ_y s_i)` then `R_Z(υ_z s_i)` on every qubit),
//! variational (`R_Y(φ_y)` then `R_Z(φ_z)`) and a nearest-neighbour CZ chain.
//! Measurements are weighted sums `⟨O_a⟩ = Σ_i w_{a,i} ⟨H_{a,i}⟩`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::{
    apply_1q_raw, apply_cz_raw, hadamard, pauli_x, pauli_y, pauli_z, ry, rz, Gate, QuantumState,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn gate(self) -> Option<Gate> {
        match self {
            Pauli::I => None,
            Pauli::X => Some(pauli_x()),
            Pauli::Y => Some(pauli_y()),
            Pauli::Z => Some(pauli_z()),
        }
    }
}

/// A Hermitian operator on the register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Observable {
    /// Tensor product of single-qubit Paulis; unlisted qubits carry identity.
    Pauli(Vec<(usize, Pauli)>),
    /// Dense `2^q × 2^q` matrix, row-major.
    Dense { dim: usize, matrix: Vec<Complex64> },
}

impl Observable {
    pub fn z(qubit: usize) -> Self {
        Observable::Pauli(vec![(qubit, Pauli::Z)])
    }

    /// Accepts a dense matrix only if it is Hermitian to within 1e-12.
    pub fn dense(dim: usize, matrix: Vec<Complex64>) -> Result<Self> {
        if matrix.len() != dim * dim || !dim.is_power_of_two() {
            return Err(Error::shape(format!(
                "dense observable needs a 2^q × 2^q matrix, got {} entries for dim {dim}",
                matrix.len()
            )));
        }
        for i in 0..dim {
            for j in 0..dim {
                if (matrix[i * dim + j] - matrix[j * dim + i].conj()).norm() > 1e-12 {
                    return Err(Error::domain(format!(
                        "observable is not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Observable::Dense { dim, matrix })
    }

    fn check(&self, num_qubits: usize) -> Result<()> {
        match self {
            Observable::Pauli(terms) => {
                if let Some((q, _)) = terms.iter().find(|(q, _)| *q >= num_qubits) {
                    return Err(Error::shape(format!(
                        "observable acts on qubit {q} of a {num_qubits}-qubit register"
                    )));
                }
            }
            Observable::Dense { dim, .. } => {
                if *dim != 1 << num_qubits {
                    return Err(Error::shape(format!(
                        "dense observable of dim {dim} on {num_qubits} qubits"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `O|ψ⟩` as a raw amplitude vector.
    pub fn apply(&self, amps: &[Complex64]) -> Vec<Complex64> {
        match self {
            Observable::Pauli(terms) => {
                let mut out = amps.to_vec();
                for (q, p) in terms {
                    if let Some(g) = p.gate() {
                        apply_1q_raw(&mut out, &g, *q);
                    }
                }
                out
            }
            Observable::Dense { dim, matrix } => (0..*dim)
                .map(|i| {
                    matrix[i * dim..(i + 1) * dim]
                        .iter()
                        .zip(amps)
                        .map(|(m, a)| m * a)
                        .sum()
                })
                .collect(),
        }
    }

    /// `⟨ψ|O|ψ⟩`.
    pub fn expectation(&self, state: &QuantumState) -> f64 {
        let amps = state.amplitudes();
        if let Observable::Pauli(terms) = self {
            if terms.iter().all(|(_, p)| matches!(p, Pauli::Z | Pauli::I)) {
                let mask = terms
                    .iter()
                    .filter(|(_, p)| *p == Pauli::Z)
                    .fold(0usize, |m, (q, _)| m ^ (1 << q));
                return amps
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        let sign = if (i & mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                        sign * a.norm_sqr()
                    })
                    .sum();
            }
        }
        let applied = self.apply(amps);
        amps.iter().zip(&applied).map(|(a, b)| a.conj() * b).sum::<Complex64>().re
    }
}

/// Measurement layout and softmax temperature for the circuit policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub inverse_temperature: f64,
    /// `observables[a][i]` is `H_{a,i}`; every row has one entry per qubit.
    pub observables: Vec<Vec<Observable>>,
}

impl PolicyConfig {
    /// `num_outputs` weighted sums over single-qubit Pauli-Z operators.
    pub fn pauli_z(num_qubits: usize, num_outputs: usize, inverse_temperature: f64) -> Self {
        let row: Vec<Observable> = (0..num_qubits).map(Observable::z).collect();
        Self {
            inverse_temperature,
            observables: vec![row; num_outputs],
        }
    }

    pub fn num_outputs(&self) -> usize {
        self.observables.len()
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        if !(self.inverse_temperature.is_finite() && self.inverse_temperature > 0.0) {
            return Err(Error::config("inverse_temperature", "must be positive"));
        }
        if self.observables.is_empty() {
            return Err(Error::shape("policy needs at least one observable"));
        }
        for row in &self.observables {
            if row.len() != num_qubits {
                return Err(Error::shape(format!(
                    "observable row has {} terms for {num_qubits} qubits",
                    row.len()
                )));
            }
            for o in row {
                o.check(num_qubits)?;
            }
        }
        Ok(())
    }
}

/// Trainable circuit parameters.
///
/// `input_scales` and `rotations` are indexed `[layer][qubit][{Y, Z}]`;
/// `weights` is `[output][qubit]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqcParameters {
    pub num_qubits: usize,
    pub num_layers: usize,
    pub input_scales: Vec<f64>,
    pub rotations: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Y,
    Z,
}

impl PqcParameters {
    /// Scales and observable weights start at 1, rotations uniform in `[−π, π]`.
    pub fn init<R: Rng + ?Sized>(
        num_qubits: usize,
        num_layers: usize,
        num_outputs: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if num_qubits == 0 || num_qubits > super::state::MAX_QUBITS {
            return Err(Error::config("qubits", format!("{num_qubits} outside 1..=12")));
        }
        if num_layers == 0 {
            return Err(Error::config("pqc_layers", "must be at least 1"));
        }
        let slots = num_layers * num_qubits * 2;
        let rotations = (0..slots).map(|_| rng.random_range(-PI..=PI)).collect();
        Ok(Self {
            num_qubits,
            num_layers,
            input_scales: vec![1.0; slots],
            rotations,
            weights: vec![1.0; num_outputs * num_qubits],
        })
    }

    pub fn zeros(num_qubits: usize, num_layers: usize, num_outputs: usize) -> Self {
        let slots = num_layers * num_qubits * 2;
        Self {
            num_qubits,
            num_layers,
            input_scales: vec![0.0; slots],
            rotations: vec![0.0; slots],
            weights: vec![0.0; num_outputs * num_qubits],
        }
    }

    pub fn num_outputs(&self) -> usize {
        self.weights.len() / self.num_qubits
    }

    pub fn slot(&self, layer: usize, qubit: usize, axis: Axis) -> usize {
        (layer * self.num_qubits + qubit) * 2 + axis as usize
    }

    pub fn len(&self) -> usize {
        self.input_scales.len() + self.rotations.len() + self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `[input_scales, rotations, weights]` concatenated.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.input_scales);
        v.extend_from_slice(&self.rotations);
        v.extend_from_slice(&self.weights);
        v
    }

    pub fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::shape(format!(
                "{} circuit parameters, got {}",
                self.len(),
                flat.len()
            )));
        }
        let (s, rest) = flat.split_at(self.input_scales.len());
        let (r, w) = rest.split_at(self.rotations.len());
        self.input_scales.copy_from_slice(s);
        self.rotations.copy_from_slice(r);
        self.weights.copy_from_slice(w);
        Ok(())
    }

    fn validate(&self, features: &[f64]) -> Result<()> {
        let slots = self.num_layers * self.num_qubits * 2;
        if self.input_scales.len() != slots
            || self.rotations.len() != slots
            || !self.weights.len().is_multiple_of(self.num_qubits)
        {
            return Err(Error::shape("circuit parameter tensors have inconsistent sizes"));
        }
        if features.len() != self.num_qubits {
            return Err(Error::shape(format!(
                "{} features for {} qubits",
                features.len(),
                self.num_qubits
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite circuit input"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Encoding { slot: usize, feature: usize },
    Variational { slot: usize },
}

#[derive(Debug, Clone, Copy)]
enum Op {
    H(usize),
    Rot {
        axis: Axis,
        qubit: usize,
        angle: f64,
        source: Source,
    },
    Cz(usize, usize),
}

fn rotation(axis: Axis, angle: f64) -> Gate {
    match axis {
        Axis::Y => ry(angle),
        Axis::Z => rz(angle),
    }
}

fn encoding_ops(params: &PqcParameters, features: &[f64], layer: usize, ops: &mut Vec<Op>) {
    for (qubit, &s) in features.iter().enumerate() {
        for axis in [Axis::Y, Axis::Z] {
            let slot = params.slot(layer, qubit, axis);
            ops.push(Op::Rot {
                axis,
                qubit,
                angle: params.input_scales[slot] * s,
                source: Source::Encoding {
                    slot,
                    feature: qubit,
                },
            });
        }
    }
}

fn variational_ops(params: &PqcParameters, layer: usize, ops: &mut Vec<Op>) {
    for qubit in 0..params.num_qubits {
        for axis in [Axis::Y, Axis::Z] {
            let slot = params.slot(layer, qubit, axis);
            ops.push(Op::Rot {
                axis,
                qubit,
                angle: params.rotations[slot],
                source: Source::Variational { slot },
            });
        }
    }
}

fn entangling_ops(num_qubits: usize, ops: &mut Vec<Op>) {
    for q in 0..num_qubits.saturating_sub(1) {
        ops.push(Op::Cz(q, q + 1));
    }
}

fn apply_op(amps: &mut [Complex64], op: &Op) {
    match *op {
        Op::H(q) => apply_1q_raw(amps, &hadamard(), q),
        Op::Rot { axis, qubit, angle, .. } => apply_1q_raw(amps, &rotation(axis, angle), qubit),
        Op::Cz(a, b) => apply_cz_raw(amps, a, b),
    }
}

fn apply_op_inverse(amps: &mut [Complex64], op: &Op) {
    match *op {
        Op::Rot { axis, qubit, angle, .. } => apply_1q_raw(amps, &rotation(axis, -angle), qubit),
        _ => apply_op(amps, op),
    }
}

/// Which block of a circuit layer to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Encoding,
    Variational,
    Entangling,
}

/// Applies one block of layer `layer` in place.
pub fn apply_block(
    state: &mut QuantumState,
    params: &PqcParameters,
    features: &[f64],
    layer: usize,
    block: Block,
) -> Result<()> {
    params.validate(features)?;
    if state.num_qubits() != params.num_qubits || layer >= params.num_layers {
        return Err(Error::shape("block does not fit the register or layer count"));
    }
    let mut ops = Vec::new();
    match block {
        Block::Encoding => encoding_ops(params, features, layer, &mut ops),
        Block::Variational => variational_ops(params, layer, &mut ops),
        Block::Entangling => entangling_ops(params.num_qubits, &mut ops),
    }
    for op in &ops {
        apply_op(state.amplitudes_mut(), op);
    }
    Ok(())
}

fn program(params: &PqcParameters, features: &[f64]) -> Vec<Op> {
    let q = params.num_qubits;
    let mut ops: Vec<Op> = (0..q).map(Op::H).collect();
    for layer in 0..params.num_layers {
        encoding_ops(params, features, layer, &mut ops);
        variational_ops(params, layer, &mut ops);
        entangling_ops(q, &mut ops);
    }
    ops
}

/// Runs the circuit, calling `observer(layer, state)` after each layer.
pub fn run_pqc_observed(
    params: &PqcParameters,
    features: &[f64],
    mut observer: impl FnMut(usize, &QuantumState),
) -> Result<QuantumState> {
    params.validate(features)?;
    let q = params.num_qubits;
    let mut state = QuantumState::zero(q)?;
    let ops = program(params, features);
    let per_layer = 4 * q + q.saturating_sub(1);
    for (i, op) in ops.iter().enumerate() {
        apply_op(state.amplitudes_mut(), op);
        if i >= q && (i + 1 - q).is_multiple_of(per_layer) {
            let norm = state.norm();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::Numerical(format!("state norm drifted to {norm}")));
            }
            observer((i + 1 - q) / per_layer - 1, &state);
        }
    }
    Ok(state)
}

pub fn run_pqc(params: &PqcParameters, features: &[f64]) -> Result<QuantumState> {
    run_pqc_observed(params, features, |_, _| {})
}

/// `⟨Σ_i w_i H_i⟩` for one observable row.
pub fn expectation(state: &QuantumState, row: &[Observable], weights: &[f64]) -> Result<f64> {
    if row.len() != weights.len() {
        return Err(Error::shape("observable row and weight row differ in length"));
    }
    for o in row {
        o.check(state.num_qubits())?;
    }
    Ok(row
        .iter()
        .zip(weights)
        .map(|(o, w)| w * o.expectation(state))
        .sum())
}

/// `⟨H_{a,i}⟩` for every output `a` and qubit `i`, row-major.
pub fn term_expectations(state: &QuantumState, config: &PolicyConfig) -> Vec<f64> {
    config
        .observables
        .iter()
        .flat_map(|row| row.iter().map(|o| o.expectation(state)))
        .collect()
}

/// Weighted expectations `⟨O_a⟩` for every output.
pub fn measure(state: &QuantumState, config: &PolicyConfig, params: &PqcParameters) -> Vec<f64> {
    let q = params.num_qubits;
    let terms = term_expectations(state, config);
    terms
        .chunks(q)
        .zip(params.weights.chunks(q))
        .map(|(t, w)| t.iter().zip(w).map(|(a, b)| a * b).sum())
        .collect()
}

/// Circuit forward pass straight to measurement outputs.
pub fn pqc_forward(
    params: &PqcParameters,
    config: &PolicyConfig,
    features: &[f64],
) -> Result<Vec<f64>> {
    check_outputs(params, config)?;
    let state = run_pqc(params, features)?;
    Ok(measure(&state, config, params))
}

fn check_outputs(params: &PqcParameters, config: &PolicyConfig) -> Result<()> {
    config.validate(params.num_qubits)?;
    if params.num_outputs() != config.num_outputs() {
        return Err(Error::shape(format!(
            "{} weight rows for {} observables",
            params.num_outputs(),
            config.num_outputs()
        )));
    }
    Ok(())
}

/// `softmax(ζ · ⟨O⟩)` with max-subtraction.
pub fn softmax_policy(expectations: &[f64], inverse_temperature: f64) -> Result<Vec<f64>> {
    if !(inverse_temperature > 0.0 && inverse_temperature.is_finite()) {
        return Err(Error::domain("inverse temperature must be positive"));
    }
    if expectations.is_empty() || expectations.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("expectations must be finite and non-empty"));
    }
    let peak = expectations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = expectations
        .iter()
        .map(|e| (inverse_temperature * (e - peak)).exp())
        .collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Gradients of `Σ_a g_a ⟨O_a⟩` for upstream `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct PqcGradients {
    pub input_scales: Vec<f64>,
    pub rotations: Vec<f64>,
    pub weights: Vec<f64>,
    pub features: Vec<f64>,
}

impl PqcGradients {
    /// Same ordering as [`PqcParameters::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.input_scales.clone();
        v.extend_from_slice(&self.rotations);
        v.extend_from_slice(&self.weights);
        v
    }
}

/// Reverse-mode gradient through the statevector simulation.
///
/// Runs the circuit once, then walks the gates backwards, un-computing both
/// the state and the adjoint `Ō|ψ⟩`, so memory stays at two statevectors.
pub fn pqc_backward(
    params: &PqcParameters,
    config: &PolicyConfig,
    features: &[f64],
    upstream: &[f64],
) -> Result<PqcGradients> {
    check_outputs(params, config)?;
    params.validate(features)?;
    if upstream.len() != config.num_outputs() {
        return Err(Error::shape(format!(
            "{} upstream gradients for {} outputs",
            upstream.len(),
            config.num_outputs()
        )));
    }
    let q = params.num_qubits;
    let ops = program(params, features);
    let mut psi = QuantumState::zero(q)?;
    for op in &ops {
        apply_op(psi.amplitudes_mut(), op);
    }

    let terms = term_expectations(&psi, config);
    let weights_grad: Vec<f64> = terms
        .iter()
        .enumerate()
        .map(|(k, t)| upstream[k / q] * t)
        .collect();

    let psi_amps = psi.amplitudes().to_vec();
    let mut lambda = vec![Complex64::new(0.0, 0.0); psi_amps.len()];
    for (a, row) in config.observables.iter().enumerate() {
        if upstream[a] == 0.0 {
            continue;
        }
        for (i, obs) in row.iter().enumerate() {
            let coeff = upstream[a] * params.weights[a * q + i];
            if coeff == 0.0 {
                continue;
            }
            for (l, v) in lambda.iter_mut().zip(obs.apply(&psi_amps)) {
                *l += v * coeff;
            }
        }
    }

    let mut psi = psi_amps;
    let mut grads = PqcGradients {
        input_scales: vec![0.0; params.input_scales.len()],
        rotations: vec![0.0; params.rotations.len()],
        weights: weights_grad,
        features: vec![0.0; q],
    };
    let mut scratch = vec![Complex64::new(0.0, 0.0); psi.len()];
    for op in ops.iter().rev() {
        if let Op::Rot {
            axis,
            qubit,
            source,
            ..
        } = *op
        {
            // dE/dθ = Im⟨λ|P|ψ⟩ for R(θ) = exp(−iθP/2), ψ taken after the gate.
            scratch.copy_from_slice(&psi);
            let p = match axis {
                Axis::Y => pauli_y(),
                Axis::Z => pauli_z(),
            };
            apply_1q_raw(&mut scratch, &p, qubit);
            let overlap: Complex64 = lambda.iter().zip(&scratch).map(|(l, s)| l.conj() * s).sum();
            let d_angle = overlap.im;
            match source {
                Source::Encoding { slot, feature } => {
                    grads.input_scales[slot] += d_angle * features[feature];
                    grads.features[feature] += d_angle * params.input_scales[slot];
                }
                Source::Variational { slot } => grads.rotations[slot] += d_angle,
            }
        }
        apply_op_inverse(&mut psi, op);
        apply_op_inverse(&mut lambda, op);
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_params(q: usize, layers: usize, seed: u64) -> PqcParameters {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = PqcParameters::init(q, layers, q, &mut rng).unwrap();
        for v in p.input_scales.iter_mut().chain(p.weights.iter_mut()) {
            *v = rng.random_range(-1.5..1.5);
        }
        p
    }

    #[test]
    fn zero_parameters_give_uniform_probabilities() {
        let p = PqcParameters::zeros(3, 1, 3);
        let s = run_pqc(&p, &[0.4, -1.0, 2.0]).unwrap();
        for prob in s.probabilities() {
            assert!((prob - 0.125).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_features_ignore_input_scales() {
        let mut a = random_params(3, 2, 1);
        let s1 = run_pqc(&a, &[0.0; 3]).unwrap();
        for v in a.input_scales.iter_mut() {
            *v *= -3.7;
        }
        let s2 = run_pqc(&a, &[0.0; 3]).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn output_is_normalized_with_full_length() {
        let p = random_params(5, 3, 2);
        let s = run_pqc(&p, &[0.1, -2.0, 3.0, 1.0, -0.5]).unwrap();
        assert_eq!(s.amplitudes().len(), 32);
        assert!((s.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn observer_sees_every_layer() {
        let p = random_params(3, 4, 3);
        let mut seen = Vec::new();
        run_pqc_observed(&p, &[0.3, 0.2, 0.1], |l, s| seen.push((l, s.norm()))).unwrap();
        assert_eq!(seen.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert!(seen.iter().all(|(_, n)| (n - 1.0).abs() < 1e-10));
    }

    #[test]
    fn feature_length_is_checked() {
        let p = random_params(3, 1, 4);
        assert!(matches!(run_pqc(&p, &[0.0; 2]), Err(Error::Structural(_))));
    }

    #[test]
    fn z_expectations_on_simple_states() {
        let zero = QuantumState::zero(3).unwrap();
        for q in 0..3 {
            assert_eq!(Observable::z(q).expectation(&zero), 1.0);
        }
        let mut plus = QuantumState::zero(3).unwrap();
        for q in 0..3 {
            plus.apply_1q(&hadamard(), q).unwrap();
        }
        for q in 0..3 {
            assert!(Observable::z(q).expectation(&plus).abs() < 1e-15);
        }
    }

    #[test]
    fn non_hermitian_dense_observable_rejected() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let bad = vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(-1.0, 0.0)];
        assert!(Observable::dense(2, bad).is_err());
        let good = vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(-1.0, 0.0)];
        assert!(Observable::dense(2, good).is_ok());
    }

    #[test]
    fn softmax_examples() {
        let near_zero = softmax_policy(&[0.9, -0.4, 0.1], 1e-9).unwrap();
        for p in near_zero {
            assert!((p - 1.0 / 3.0).abs() < 1e-8);
        }
        let flat = softmax_policy(&[0.2, 0.2], 5.0).unwrap();
        assert_eq!(flat, vec![0.5, 0.5]);
        let e = std::f64::consts::E;
        let two = softmax_policy(&[1.0, 0.0], 1.0).unwrap();
        assert!((two[0] - e / (e + 1.0)).abs() < 1e-15);
        assert!((two[1] - 1.0 / (e + 1.0)).abs() < 1e-15);
        assert!(softmax_policy(&[1.0], 0.0).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let p = random_params(3, 2, 5);
        let cfg = PolicyConfig::pauli_z(3, 3, 1.0);
        let g = pqc_backward(&p, &cfg, &[0.5, -0.5, 1.0], &[0.0; 3]).unwrap();
        assert!(g.to_flat().iter().all(|&v| v == 0.0));
        assert!(g.features.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flat_round_trip() {
        let p = random_params(3, 2, 6);
        let mut q = PqcParameters::zeros(3, 2, 3);
        q.load_flat(&p.to_flat()).unwrap();
        assert_eq!(p, q);
        assert!(q.load_flat(&[0.0; 3]).is_err());
    }
}

//! Pauli check sandwiching.
//!
//! A check pair `(R, L)` satisfies `L U R = U`. Each layer gets one ancilla
//! prepared with H; controlled-R is applied before the payload and
//! controlled-L after, then the ancilla is measured in the X basis (H + Z
//! readout). An error after the payload that anticommutes with `L` flips the
//! ancilla. Layers nest with layer 1 innermost, so each pair only needs to be
//! valid for the bare payload and the rights need not commute.

use std::fmt;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use crate::statevector::MAX_SIM_QUBITS;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckPair {
    pub right: PauliString,
    pub left: PauliString,
}

/// Result of a check search; `NotFound` names the gate that blocked the right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckSearch {
    Found(CheckPair),
    NotFound { right: PauliString, gate_index: usize },
}

impl CheckSearch {
    pub fn into_result(self) -> Result<CheckPair> {
        match self {
            CheckSearch::Found(p) => Ok(p),
            CheckSearch::NotFound { right, gate_index } => Err(Error::CheckNotFound { right: right.to_string(), gate_index }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckBasis {
    /// Single-qubit Z checks, enough for Z-basis observables.
    ZBasis,
    /// Z and X checks on every qubit.
    Arbitrary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Only the payload is sandwiched; the prefix runs unprotected.
    CliffordOnly,
    /// Prefix and payload are sandwiched together.
    FullCircuit,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::CliffordOnly => "clifford_only",
            Scope::FullCircuit => "full_circuit",
        })
    }
}

pub fn max_checks(n_qubits: usize, basis: CheckBasis) -> usize {
    match basis {
        CheckBasis::ZBasis => n_qubits,
        CheckBasis::Arbitrary => 2 * n_qubits,
    }
}

/// Propagates `right` forward through `payload`. Clifford gates conjugate
/// it; a rotation lets it pass only when it commutes with the rotation axis.
pub fn find_check_pair(payload: &Circuit, right: &PauliString) -> Result<CheckSearch> {
    let n = payload.n_data();
    if right.num_qubits() != n {
        return Err(Error::Dimension { expected: n, found: right.num_qubits() });
    }
    if !right.is_hermitian() || right.is_identity() {
        return Err(Error::arg(format!("right check {right} must be a Hermitian non-identity Pauli")));
    }
    let mut q = right.embed(payload.num_qubits(), 0)?;
    for (i, g) in payload.gates().iter().enumerate() {
        if g.is_measurement_like() {
            return Err(Error::arg("payload contains a measurement"));
        }
        if let Some(cliffords) = g.clifford_gates() {
            for cg in &cliffords {
                cg.conjugate_in_place(&mut q);
            }
        } else if let Some((qubit, axis, _)) = g.rotation() {
            let generator = PauliString::single(payload.num_qubits(), qubit, axis);
            if !q.commutes(&generator)? {
                return Ok(CheckSearch::NotFound { right: *right, gate_index: i });
            }
        }
    }
    if q.support() >> n != 0 {
        return Err(Error::arg("check propagated onto payload ancillas"));
    }
    let left = q.truncate(n)?;
    Ok(CheckSearch::Found(CheckPair { right: *right, left }))
}

/// Rights for `m` layers: Z on qubits 0, 1, ..., then (arbitrary basis
/// only) X on qubits 0, 1, ... once every qubit has a Z check.
pub fn default_rights(n: usize, m: usize, basis: CheckBasis) -> Result<Vec<PauliString>> {
    if m > max_checks(n, basis) {
        return Err(Error::arg(format!("{m} checks exceed the budget {} for {n} qubits", max_checks(n, basis))));
    }
    Ok((0..m)
        .map(|j| if j < n { PauliString::single(n, j, Pauli::Z) } else { PauliString::single(n, j - n, Pauli::X) })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichPlan {
    /// Gates before the protected region (empty for full-circuit scope).
    pub prefix: Circuit,
    pub payload: Circuit,
    /// Layer 1 first; layer `j` uses ancilla `n_data + j - 1`.
    pub layers: Vec<CheckPair>,
    pub scope: Scope,
}

impl SandwichPlan {
    /// Pairs for `rights` found on the protected region of `prep` followed
    /// by `payload`.
    pub fn new(prep: &Circuit, payload: &Circuit, rights: &[PauliString], scope: Scope) -> Result<Self> {
        if prep.n_data() != payload.n_data() || prep.n_ancilla() != 0 || payload.n_ancilla() != 0 {
            return Err(Error::arg("prep and payload must share a data register without ancillas"));
        }
        let (prefix, protected) = match scope {
            Scope::CliffordOnly => (prep.clone(), payload.clone()),
            Scope::FullCircuit => {
                let mut whole = prep.clone();
                whole.append(payload)?;
                (Circuit::new(prep.n_data(), 0), whole)
            }
        };
        let layers = rights
            .iter()
            .map(|r| find_check_pair(&protected, r)?.into_result())
            .collect::<Result<Vec<_>>>()?;
        Ok(SandwichPlan { prefix, payload: protected, layers, scope })
    }

    pub fn n_data(&self) -> usize {
        self.payload.n_data()
    }

    pub fn ancilla(&self, layer: usize) -> usize {
        self.n_data() + layer
    }

    /// Gate index right after the payload in the built circuit.
    pub fn payload_end_index(&self) -> usize {
        self.prefix.len() + 2 * self.layers.len() + self.payload.len()
    }
}

/// Emits the sandwiched circuit:
/// prefix, H on every ancilla, `C-R_m .. C-R_1`, payload, `C-L_1 .. C-L_m`,
/// then H and a Z measurement on every ancilla and a Z readout of the data.
pub fn build_sandwich(plan: &SandwichPlan) -> Result<Circuit> {
    let n = plan.n_data();
    let m = plan.layers.len();
    if n + m > MAX_SIM_QUBITS {
        return Err(Error::QubitLimit { qubits: n + m, cap: MAX_SIM_QUBITS });
    }
    for pair in &plan.layers {
        match find_check_pair(&plan.payload, &pair.right)? {
            CheckSearch::Found(p) if p == *pair => {}
            _ => return Err(Error::arg(format!("invalid check pair R={} L={}", pair.right, pair.left))),
        }
    }
    let mut c = Circuit::new(n, m);
    c.append(&plan.prefix)?;
    for j in 0..m {
        c.push(Gate::H(plan.ancilla(j)))?;
    }
    for (j, pair) in plan.layers.iter().enumerate().rev() {
        c.push(Gate::ControlledPauli { control: plan.ancilla(j), pauli: pair.right })?;
    }
    c.append(&plan.payload)?;
    for (j, pair) in plan.layers.iter().enumerate() {
        c.push(Gate::ControlledPauli { control: plan.ancilla(j), pauli: pair.left })?;
    }
    for j in 0..m {
        c.push(Gate::H(plan.ancilla(j)))?;
        c.push(Gate::MeasureZ(plan.ancilla(j)))?;
    }
    for q in 0..n {
        c.push(Gate::MeasureZ(q))?;
    }
    c.meta = plan.payload.meta.clone();
    c.meta.notes.push(format!("scope: {}", plan.scope));
    for (j, pair) in plan.layers.iter().enumerate() {
        c.meta.notes.push(format!("layer {}: R={}, L={}", j + 1, pair.right, pair.left));
    }
    Ok(c)
}

/// Per-check Markov chain over (detected, undetected, no error).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovModel {
    pub epsilon: f64,
    pub t_d: f64,
    pub t_u: f64,
    pub t_ok: f64,
}

impl MarkovModel {
    /// Checks that never introduce errors.
    pub fn perfect(epsilon: f64) -> Self {
        MarkovModel { epsilon, t_d: 0.0, t_u: 0.0, t_ok: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [self.epsilon, self.t_d, self.t_u, self.t_ok];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || self.t_d + self.t_u + self.t_ok > 1.0 + 1e-12 {
            return Err(Error::arg(format!("invalid Markov model {self:?}")));
        }
        Ok(())
    }

    pub fn transition(&self) -> [[f64; 3]; 3] {
        [[1.0, 0.5, self.t_d], [0.0, 0.5, self.t_u], [0.0, 0.0, self.t_ok]]
    }

    /// State vector after `m` checks.
    pub fn evolve(&self, m: usize) -> [f64; 3] {
        let t = self.transition();
        let mut pi = [0.0, self.epsilon, 1.0 - self.epsilon];
        for _ in 0..m {
            let mut next = [0.0; 3];
            for (r, row) in t.iter().enumerate() {
                next[r] = row.iter().zip(&pi).map(|(a, b)| a * b).sum();
            }
            pi = next;
        }
        pi
    }
}

/// Probability that a kept run carries an undetected error after `m` checks.
pub fn markov_logical_error(model: &MarkovModel, m: usize) -> Result<f64> {
    model.validate()?;
    let pi = model.evolve(m);
    let den = pi[1] + pi[2];
    Ok(if den > 0.0 { pi[1] / den } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::random_clifford_circuit;
    use crate::density::DensityMatrix;
    use crate::noise::NoiseModel;
    use crate::sim::{expectation_z_basis, PauliChannel, Simulator, Engine};
    use crate::test_oracle::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn assert_valid_pair(payload: &Circuit, pair: &CheckPair) {
        let u = circuit_matrix(payload);
        let n = payload.num_qubits();
        let r = dense_pauli(&pair.right.embed(n, 0).unwrap());
        let l = dense_pauli(&pair.left.embed(n, 0).unwrap());
        assert!(mat_close(&mat_mul(&mat_mul(&l, &u), &r), &u, 1e-10), "R={} L={}", pair.right, pair.left);
    }

    #[test]
    fn hadamard_maps_x_to_z() {
        let c = Circuit::from_gates(1, 0, [Gate::H(0)]).unwrap();
        let pair = find_check_pair(&c, &p("X")).unwrap().into_result().unwrap();
        assert_eq!(pair.left, p("Z"));
        assert_valid_pair(&c, &pair);
    }

    #[test]
    fn rotation_passes_only_commuting_checks() {
        let c = Circuit::from_gates(2, 0, [Gate::H(1), Gate::Rz(0, 0.3), Gate::Cx(0, 1), Gate::S(1)]).unwrap();
        let pair = find_check_pair(&c, &p("ZI")).unwrap().into_result().unwrap();
        assert_valid_pair(&c, &pair);
        assert_eq!(
            find_check_pair(&c, &p("XI")).unwrap(),
            CheckSearch::NotFound { right: p("XI"), gate_index: 1 }
        );
        assert!(find_check_pair(&c, &p("II")).is_err());
        assert!(find_check_pair(&c, &p("Z")).is_err());
    }

    #[test]
    fn discovered_pairs_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for seed in 0..10 {
            let mut c = random_clifford_circuit(3, 10, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            c.push(Gate::Rz(1, 0.77)).unwrap();
            c.push(Gate::Rx(2, -0.2)).unwrap();
            for _ in 0..8 {
                let x: u64 = rand::Rng::random_range(&mut rng, 0..8);
                let z: u64 = rand::Rng::random_range(&mut rng, 0..8);
                if x == 0 && z == 0 {
                    continue;
                }
                let right = PauliString::from_bits(3, x, z, 0).unwrap();
                if let CheckSearch::Found(pair) = find_check_pair(&c, &right).unwrap() {
                    assert_valid_pair(&c, &pair);
                }
            }
        }
    }

    #[test]
    fn budgets() {
        assert_eq!(max_checks(4, CheckBasis::ZBasis), 4);
        assert_eq!(max_checks(8, CheckBasis::ZBasis), 8);
        assert_eq!(max_checks(4, CheckBasis::Arbitrary), 8);
        let rights = default_rights(2, 4, CheckBasis::Arbitrary).unwrap();
        assert_eq!(rights, vec![p("ZI"), p("IZ"), p("XI"), p("IX")]);
        assert!(default_rights(2, 3, CheckBasis::ZBasis).is_err());
    }

    fn plan(payload: &Circuit, m: usize, basis: CheckBasis) -> SandwichPlan {
        let rights = default_rights(payload.n_data(), m, basis).unwrap();
        SandwichPlan::new(&Circuit::new(payload.n_data(), 0), payload, &rights, Scope::FullCircuit).unwrap()
    }

    #[test]
    fn zero_layers_is_payload_plus_readout() {
        let c = random_clifford_circuit(3, 5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let s = build_sandwich(&plan(&c, 0, CheckBasis::ZBasis)).unwrap();
        assert_eq!(&s.gates()[..c.len()], c.gates());
        assert_eq!(s.len(), c.len() + 3);
        assert_eq!(s.n_ancilla(), 0);
    }

    #[test]
    fn noiseless_sandwich_keeps_everything() {
        let c = random_clifford_circuit(4, 15, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let obs = PauliString::z_on(4, 0..4);
        let ideal = c.ideal_expectation(&obs).unwrap();
        for m in [1, 4, 8] {
            let s = build_sandwich(&plan(&c, m, CheckBasis::Arbitrary)).unwrap();
            let recs = Simulator::new(&s, &NoiseModel::noiseless()).unwrap().run(500, 3).unwrap();
            let est = expectation_z_basis(&recs, &obs, true).unwrap();
            assert_eq!(est.kept_shots, 500);
            if ideal != 0.0 {
                assert_eq!(est.value, ideal);
            }
        }
    }

    #[test]
    fn sandwich_is_noiselessly_equivalent() {
        let mut c = random_clifford_circuit(2, 6, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        c.push(Gate::Rz(0, 0.4)).unwrap();
        let rights: Vec<PauliString> = ["ZI", "XZ", "IZ", "YY", "XI"]
            .iter()
            .map(|s| p(s))
            .filter(|r| matches!(find_check_pair(&c, r).unwrap(), CheckSearch::Found(_)))
            .collect();
        assert!(rights.len() >= 2);
        let pl = SandwichPlan::new(&Circuit::new(2, 0), &c, &rights, Scope::FullCircuit).unwrap();
        let s = build_sandwich(&pl).unwrap();
        let mut unitary_part = Circuit::new(2, pl.layers.len());
        for g in s.gates().iter().filter(|g| !g.is_measurement_like()) {
            unitary_part.push(g.clone()).unwrap();
        }
        let psi = mat_vec(&circuit_matrix(&unitary_part), &zero_state(unitary_part.num_qubits()));
        let want = mat_vec(&circuit_matrix(&c), &zero_state(2));
        for (i, a) in psi.iter().enumerate() {
            let expect = if i < 4 { want[i] } else { num_complex::Complex64::new(0.0, 0.0) };
            assert!((a - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn text_manifest_lists_layers() {
        let c = random_clifford_circuit(2, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let s = build_sandwich(&plan(&c, 2, CheckBasis::ZBasis)).unwrap();
        let text = s.to_text();
        assert!(text.contains("# layer 1: R=ZI, L="));
        assert!(text.contains("CPAULI 3 IZ"));
        assert_eq!(text.parse::<Circuit>().unwrap(), s);
    }

    /// Runs the sandwich noiselessly with `error` inserted after the payload.
    fn ancilla_flags(pl: &SandwichPlan, error: &PauliString) -> u64 {
        let mut s = build_sandwich(pl).unwrap();
        let mut gates = s.gates().to_vec();
        let at = pl.payload_end_index();
        let inserted: Vec<Gate> = (0..error.num_qubits())
            .filter_map(|q| match error.get(q) {
                Pauli::I => None,
                Pauli::X => Some(Gate::X(q)),
                Pauli::Y => Some(Gate::Y(q)),
                Pauli::Z => Some(Gate::Z(q)),
            })
            .collect();
        gates.splice(at..at, inserted);
        let meta = s.meta.clone();
        s = Circuit::from_gates(s.n_data(), s.n_ancilla(), gates).unwrap();
        s.meta = meta;
        let recs = Simulator::new(&s, &NoiseModel::noiseless()).unwrap().run(20, 1).unwrap();
        let flags = recs[0].ancilla_bits;
        assert!(recs.iter().all(|r| r.ancilla_bits == flags), "ancilla readout must be deterministic");
        flags
    }

    #[test]
    fn injected_error_trips_anticommuting_layers() {
        let c = random_clifford_circuit(4, 12, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        let pl = plan(&c, 4, CheckBasis::ZBasis);
        for q in 0..4 {
            for letter in [Pauli::X, Pauli::Y, Pauli::Z] {
                let e = PauliString::single(4, q, letter);
                let flags = ancilla_flags(&pl, &e);
                for (j, pair) in pl.layers.iter().enumerate() {
                    let anti = !pair.left.commutes(&e).unwrap();
                    assert_eq!(flags >> j & 1 == 1, anti, "E={e} layer {j}");
                }
            }
        }
    }

    #[test]
    fn post_selected_state_is_unchanged_iff_error_commutes() {
        for m in 1..=4 {
            let c = random_clifford_circuit(3, 8, &mut ChaCha8Rng::seed_from_u64(m as u64)).unwrap();
            let rights = default_rights(3, m, CheckBasis::Arbitrary).unwrap();
            let pl = SandwichPlan::new(&Circuit::new(3, 0), &c, &rights, Scope::FullCircuit).unwrap();
            for q in 0..3 {
                for letter in [Pauli::X, Pauli::Y, Pauli::Z] {
                    let e = PauliString::single(3, q, letter);
                    let commutes_all = pl.layers.iter().all(|l| l.left.commutes(&e).unwrap());
                    assert_eq!(ancilla_flags(&pl, &e) == 0, commutes_all);
                }
            }
        }
    }

    #[test]
    fn perfect_checks_keep_rate() {
        // error channel of strength eps after the payload, noiseless checks
        let c = random_clifford_circuit(4, 10, &mut ChaCha8Rng::seed_from_u64(30)).unwrap();
        let eps = 0.2;
        for m in [1, 2, 4] {
            let pl = plan(&c, m, CheckBasis::ZBasis);
            let s = build_sandwich(&pl).unwrap();
            let ch = [PauliChannel::pauli_error(pl.payload_end_index(), vec![0, 1, 2, 3], eps)];
            let recs = Simulator::with_channels(&s, &NoiseModel::noiseless(), &ch, Engine::Auto).unwrap().run(50_000, 5).unwrap();
            let kept = recs.iter().filter(|r| r.kept()).count() as f64 / recs.len() as f64;
            // uniform non-identity errors on 4 qubits slip past m single-qubit
            // Z checks with probability (4^4 / 2^m - 1) / (4^4 - 1)
            let slip = (256.0 / 2f64.powi(m as i32) - 1.0) / 255.0;
            let want = 1.0 - eps * (1.0 - slip);
            let sigma = (want * (1.0 - want) / 50_000.0).sqrt();
            assert!((kept - want).abs() < 3.0 * sigma, "m={m}: {kept} vs {want}");
            let exact = DensityMatrix::evolve(&s, &NoiseModel::noiseless(), &ch).unwrap();
            assert!((exact.keep_probability() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn halving_law_by_enumeration() {
        // among all non-identity Paulis on n qubits, those commuting with m
        // independent single-qubit Z checks number 4^n / 2^m - 1
        for n in 1..=4usize {
            for m in 0..=n {
                let checks: Vec<PauliString> = (0..m).map(|j| PauliString::single(n, j, Pauli::Z)).collect();
                let mut undetected = 0;
                for x in 0..1u64 << n {
                    for z in 0..1u64 << n {
                        let e = PauliString::from_bits(n, x, z, 0).unwrap();
                        if !e.is_identity() && checks.iter().all(|c| c.commutes(&e).unwrap()) {
                            undetected += 1;
                        }
                    }
                }
                assert_eq!(undetected + 1, (1 << (2 * n)) >> m);
            }
        }
    }

    #[test]
    fn markov_closed_form_values() {
        let close = |m, want: f64| {
            let got = markov_logical_error(&MarkovModel::perfect(0.1), m).unwrap();
            assert!((got - want).abs() < 1e-12, "m={m}: {got}");
        };
        close(0, 0.1);
        close(1, 0.1 / 1.9);
        close(3, 0.1 / (8.0 * 0.9 + 0.1));
        assert!((markov_logical_error(&MarkovModel::perfect(0.1), 1).unwrap() - 0.052632).abs() < 1e-6);
        assert!((markov_logical_error(&MarkovModel::perfect(0.1), 3).unwrap() - 0.013699).abs() < 1e-6);
        assert_eq!(markov_logical_error(&MarkovModel::perfect(0.0), 2).unwrap(), 0.0);
        assert!(markov_logical_error(&MarkovModel { epsilon: 0.1, t_d: 0.5, t_u: 0.5, t_ok: 0.5 }, 1).is_err());
    }

    fn mat_pow(t: [[f64; 3]; 3], m: usize) -> [[f64; 3]; 3] {
        let mul = |a: [[f64; 3]; 3], b: [[f64; 3]; 3]| {
            let mut c = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
                }
            }
            c
        };
        let mut acc = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let (mut base, mut e) = (t, m);
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, base);
            }
            base = mul(base, base);
            e >>= 1;
        }
        acc
    }

    proptest! {
        #[test]
        fn markov_matches_matrix_power(eps in 0.0f64..1.0, a in 0.0f64..1.0, b in 0.0f64..1.0, m in 0usize..12) {
            let t_d = a * (1.0 - b);
            let t_u = (1.0 - a) * (1.0 - b) * 0.5;
            let model = MarkovModel { epsilon: eps, t_d, t_u, t_ok: 1.0 - t_d - t_u };
            let tm = mat_pow(model.transition(), m);
            let pi0 = [0.0, eps, 1.0 - eps];
            let pi: Vec<f64> = (0..3).map(|r| (0..3).map(|k| tm[r][k] * pi0[k]).sum()).collect();
            let want = if pi[1] + pi[2] > 0.0 { pi[1] / (pi[1] + pi[2]) } else { 0.0 };
            prop_assert!((markov_logical_error(&model, m).unwrap() - want).abs() < 1e-12);
        }

        #[test]
        fn perfect_checks_follow_closed_form(eps in 0.0f64..1.0, m in 0usize..20) {
            let got = markov_logical_error(&MarkovModel::perfect(eps), m).unwrap();
            let want = eps / (2f64.powi(m as i32) * (1.0 - eps) + eps);
            prop_assert!((got - want).abs() < 1e-12);
        }
    }
}

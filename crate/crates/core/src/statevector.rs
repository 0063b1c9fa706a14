//! Dense statevector kernels. Qubit `j` is bit `j` of the basis index.

use num_complex::Complex64;

use crate::circuit::Primitive;
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use crate::tableau::CliffordGate;

/// Hard cap on simulated register size.
pub const MAX_SIM_QUBITS: usize = 24;

pub(crate) type M2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub(crate) fn clifford_matrix(name: CliffordGate) -> M2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let hc = Complex64::new(h, 0.0);
    match name {
        CliffordGate::H(_) => [[hc, hc], [hc, -hc]],
        CliffordGate::S(_) => [[ONE, ZERO], [ZERO, I]],
        CliffordGate::Sdg(_) => [[ONE, ZERO], [ZERO, -I]],
        CliffordGate::X(_) | CliffordGate::Cx(..) => [[ZERO, ONE], [ONE, ZERO]],
        CliffordGate::Y(_) | CliffordGate::Cy(..) => [[ZERO, -I], [I, ZERO]],
        CliffordGate::Z(_) | CliffordGate::Cz(..) => [[ONE, ZERO], [ZERO, -ONE]],
        CliffordGate::Swap(..) => unreachable!("swap has no 2x2 form"),
    }
}

/// `exp(-i angle P / 2)` for a single-qubit Pauli axis.
pub fn rotation_matrix(axis: Pauli, angle: f64) -> M2 {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let cc = Complex64::new(c, 0.0);
    match axis {
        Pauli::X => [[cc, Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), cc]],
        Pauli::Y => [[cc, Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), cc]],
        Pauli::Z => [[Complex64::new(c, -s), ZERO], [ZERO, Complex64::new(c, s)]],
        Pauli::I => [[Complex64::new(c, -s), ZERO], [ZERO, Complex64::new(c, -s)]],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(n: usize) -> Result<Self> {
        if n > MAX_SIM_QUBITS {
            return Err(Error::QubitLimit { qubits: n, cap: MAX_SIM_QUBITS });
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Ok(StateVector { n, amps })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Self {
        assert_eq!(amps.len(), 1 << n, "amplitude count");
        StateVector { n, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_1q(&mut self, q: usize, m: &M2) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a, b) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[i | bit] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    pub fn apply_controlled_1q(&mut self, control: usize, target: usize, m: &M2) {
        let (cb, tb) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                let (a, b) = (self.amps[i], self.amps[i | tb]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[i | tb] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    pub fn apply_swap(&mut self, a: usize, b: usize) {
        let (ab, bb) = (1usize << a, 1usize << b);
        for i in 0..self.amps.len() {
            if i & ab != 0 && i & bb == 0 {
                self.amps.swap(i, i ^ ab ^ bb);
            }
        }
    }

    pub fn apply_clifford(&mut self, g: &CliffordGate) {
        match *g {
            CliffordGate::H(q)
            | CliffordGate::S(q)
            | CliffordGate::Sdg(q)
            | CliffordGate::X(q)
            | CliffordGate::Y(q)
            | CliffordGate::Z(q) => self.apply_1q(q, &clifford_matrix(*g)),
            CliffordGate::Cx(c, t) | CliffordGate::Cy(c, t) | CliffordGate::Cz(c, t) => {
                self.apply_controlled_1q(c, t, &clifford_matrix(*g))
            }
            CliffordGate::Swap(a, b) => self.apply_swap(a, b),
        }
    }

    pub fn apply_rotation(&mut self, q: usize, axis: Pauli, angle: f64) {
        self.apply_1q(q, &rotation_matrix(axis, angle));
    }

    /// Applies `X^x Z^z` with `i` per Y factor, so each qubit sees X, Y or Z.
    pub fn apply_pauli_bits(&mut self, x: u64, z: u64) {
        let x = x as usize;
        let z = z as usize;
        let y_phase = match (x & z).count_ones() % 4 {
            0 => ONE,
            1 => I,
            2 => -ONE,
            _ => -I,
        };
        let mut out = vec![ZERO; self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            let sign = if (i & z).count_ones() % 2 == 1 { -y_phase } else { y_phase };
            out[i ^ x] = a * sign;
        }
        self.amps = out;
    }

    pub fn apply_pauli(&mut self, p: &PauliString) {
        self.apply_pauli_bits(p.x_bits(), p.z_bits());
        let ph = [ONE, I, -ONE, -I][p.phase() as usize];
        if ph != ONE {
            self.amps.iter_mut().for_each(|a| *a *= ph);
        }
    }

    pub fn prob_one(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Projective Z measurement driven by a uniform draw `u`; collapses.
    pub fn measure(&mut self, q: usize, u: f64) -> bool {
        let p1 = self.prob_one(q);
        let outcome = u < p1;
        let keep_prob = if outcome { p1 } else { 1.0 - p1 };
        let norm = 1.0 / keep_prob.sqrt();
        let bit = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & bit != 0) == outcome {
                *a *= norm;
            } else {
                *a = ZERO;
            }
        }
        outcome
    }

    pub fn reset(&mut self, q: usize, u: f64) {
        if self.measure(q, u) {
            self.apply_1q(q, &clifford_matrix(CliffordGate::X(q)));
        }
    }

    /// Applies a unitary primitive. Measurement primitives need a draw and
    /// are handled by [`StateVector::apply_primitive_with`].
    pub fn apply_unitary(&mut self, prim: &Primitive) {
        match *prim {
            Primitive::Clifford(ref g) => self.apply_clifford(g),
            Primitive::Rotation { qubit, axis, angle } => self.apply_rotation(qubit, axis, angle),
            Primitive::Measure(_) | Primitive::Reset(_) => panic!("non-unitary primitive"),
        }
    }

    pub fn apply_primitive_with(&mut self, prim: &Primitive, u: f64) {
        match *prim {
            Primitive::Measure(q) => {
                self.measure(q, u);
            }
            Primitive::Reset(q) => self.reset(q, u),
            _ => self.apply_unitary(prim),
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        if p.num_qubits() != self.n {
            return Err(Error::Dimension { expected: self.n, found: p.num_qubits() });
        }
        let mut other = self.clone();
        other.apply_pauli(p);
        let v: Complex64 = self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        Ok(v.re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Circuit, Gate};
    use crate::test_oracle::*;
    use rand::{Rng, SeedableRng};

    fn run(c: &Circuit) -> StateVector {
        let mut sv = StateVector::zero(c.num_qubits()).unwrap();
        for op in c.lower() {
            sv.apply_unitary(&op.prim);
        }
        sv
    }

    #[test]
    fn kernels_match_dense_matrices() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for seed in 0..8 {
            let mut c = crate::circuit::random_clifford_circuit(3, 8, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed)).unwrap();
            c.push(Gate::Rx(0, rng.random_range(-3.0..3.0))).unwrap();
            c.push(Gate::Ry(1, rng.random_range(-3.0..3.0))).unwrap();
            c.push(Gate::Rz(2, rng.random_range(-3.0..3.0))).unwrap();
            c.push(Gate::Cx(2, 0)).unwrap();
            let c = c.widened(1).unwrap();
            let mut c = c;
            c.push(Gate::H(3)).unwrap();
            c.push(Gate::ControlledPauli { control: 3, pauli: "-YXZ".parse().unwrap() }).unwrap();
            c.push(Gate::ControlledPauli { control: 3, pauli: "+iZIX".parse().unwrap() }).unwrap();
            let sv = run(&c);
            let want = mat_vec(&circuit_matrix(&c), &zero_state(4));
            for (a, b) in sv.amplitudes().iter().zip(&want) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pauli_application_matches_dense() {
        let mut sv = StateVector::zero(2).unwrap();
        sv.apply_1q(0, &rotation_matrix(Pauli::Y, 0.7));
        sv.apply_1q(1, &rotation_matrix(Pauli::X, 1.1));
        let base: Vec<_> = sv.amplitudes().to_vec();
        for lit in ["XY", "-iZY", "YY", "IZ"] {
            let p: PauliString = lit.parse().unwrap();
            let mut s = sv.clone();
            s.apply_pauli(&p);
            let want = mat_vec(&dense_pauli(&p), &base);
            for (a, b) in s.amplitudes().iter().zip(&want) {
                assert!((a - b).norm() < 1e-12, "{lit}");
            }
            let e = sv.expectation(&p.unsigned()).unwrap();
            let oracle = expectation(&base, &dense_pauli(&p.unsigned()));
            assert!((e - oracle.re).abs() < 1e-12);
        }
    }

    #[test]
    fn measurement_collapses_and_normalizes() {
        let mut sv = StateVector::zero(2).unwrap();
        sv.apply_clifford(&CliffordGate::H(0));
        sv.apply_clifford(&CliffordGate::Cx(0, 1));
        assert!(sv.measure(0, 0.1));
        assert!((sv.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((sv.prob_one(1) - 1.0).abs() < 1e-12);
        sv.reset(1, 0.3);
        assert!(sv.prob_one(1) < 1e-12);
    }

    #[test]
    fn cap_enforced() {
        assert!(matches!(StateVector::zero(25), Err(Error::QubitLimit { .. })));
    }
}

//! Exact mixed-state reference for small registers.
//!
//! `rho` is stored vectorized as a `2n`-qubit vector: row index in the low
//! `n` bits, column index in the high `n` bits. A unitary `U` acts as
//! `U (x) conj(U)` and a Pauli channel is summed term by term.

use num_complex::Complex64;

use crate::circuit::{Circuit, Gate, Primitive};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::pauli::PauliString;
use crate::sim::{z_eigenvalue, PauliChannel};
use crate::statevector::{clifford_matrix, rotation_matrix, StateVector, M2};
use crate::tableau::CliffordGate;

pub const MAX_DENSITY_QUBITS: usize = 10;

fn conj(m: &M2) -> M2 {
    [[m[0][0].conj(), m[0][1].conj()], [m[1][0].conj(), m[1][1].conj()]]
}

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    n: usize,
    n_data: usize,
    vec: StateVector,
}

impl DensityMatrix {
    fn zero(n: usize, n_data: usize) -> Result<Self> {
        if n > MAX_DENSITY_QUBITS {
            return Err(Error::QubitLimit { qubits: n, cap: MAX_DENSITY_QUBITS });
        }
        Ok(DensityMatrix { n, n_data, vec: StateVector::zero(2 * n)? })
    }

    /// Runs `c` from `|0..0><0..0|` with gate noise and injected channels.
    /// Measurements must be terminal.
    pub fn evolve(c: &Circuit, noise: &NoiseModel, channels: &[PauliChannel]) -> Result<Self> {
        let n = c.num_qubits();
        let mut rho = DensityMatrix::zero(n, c.n_data())?;
        let resolved = noise.resolve(c.n_data(), c.n_ancilla())?;
        let gates = c.gates();
        for (gi, gate) in gates.iter().enumerate() {
            for ch in channels.iter().filter(|ch| ch.position == gi) {
                rho.apply_channel(&ch.qubits, ch.probability, ch.include_identity);
            }
            match gate {
                Gate::Reset(_) => return Err(Error::arg("density reference does not support reset")),
                Gate::MeasureZ(q) => {
                    let later = gates[gi + 1..].iter().any(|g| g.qubits().contains(q))
                        || channels.iter().any(|ch| ch.position > gi && ch.qubits.contains(q));
                    if later {
                        return Err(Error::arg("density reference supports terminal measurements only"));
                    }
                    continue;
                }
                _ => {}
            }
            for op in gate.lower() {
                rho.apply_primitive(&op.prim);
                let rate = resolved.site_rate(&op.noise_support);
                if rate > 0.0 {
                    rho.apply_channel(&op.noise_support, rate, false);
                }
            }
        }
        for ch in channels.iter().filter(|ch| ch.position == gates.len()) {
            rho.apply_channel(&ch.qubits, ch.probability, ch.include_identity);
        }
        Ok(rho)
    }

    fn apply_primitive(&mut self, prim: &Primitive) {
        let n = self.n;
        match *prim {
            Primitive::Clifford(g) => match g {
                CliffordGate::Swap(a, b) => {
                    self.vec.apply_swap(a, b);
                    self.vec.apply_swap(a + n, b + n);
                }
                CliffordGate::Cx(c, t) | CliffordGate::Cy(c, t) | CliffordGate::Cz(c, t) => {
                    let m = clifford_matrix(g);
                    self.vec.apply_controlled_1q(c, t, &m);
                    self.vec.apply_controlled_1q(c + n, t + n, &conj(&m));
                }
                _ => {
                    let q = g.qubits().0[0];
                    let m = clifford_matrix(g);
                    self.vec.apply_1q(q, &m);
                    self.vec.apply_1q(q + n, &conj(&m));
                }
            },
            Primitive::Rotation { qubit, axis, angle } => {
                let m = rotation_matrix(axis, angle);
                self.vec.apply_1q(qubit, &m);
                self.vec.apply_1q(qubit + n, &conj(&m));
            }
            Primitive::Measure(_) | Primitive::Reset(_) => unreachable!("filtered by evolve"),
        }
    }

    fn apply_channel(&mut self, qubits: &[usize], p: f64, include_identity: bool) {
        if p == 0.0 {
            return;
        }
        let n = self.n;
        let k = qubits.len();
        let total = 1u64 << (2 * k);
        let (first, count) = if include_identity { (0, total) } else { (1, total - 1) };
        let w = p / count as f64;
        let base = self.vec.clone();
        let mut acc: Vec<Complex64> = base.amplitudes().iter().map(|a| a * (1.0 - p)).collect();
        for code in first..total {
            let (mut x, mut z) = (0u64, 0u64);
            for (j, &q) in qubits.iter().enumerate() {
                x |= (code >> (2 * j) & 1) << q;
                z |= (code >> (2 * j + 1) & 1) << q;
            }
            let mut term = base.clone();
            term.apply_pauli_bits(x | x << n, z | z << n);
            // P (x) conj(P) carries (i * conj(i))^#Y = 1, the kernel applied i^(2 #Y)
            let sign = if (x & z).count_ones() % 2 == 1 { -w } else { w };
            for (a, t) in acc.iter_mut().zip(term.amplitudes()) {
                *a += t * sign;
            }
        }
        self.vec = StateVector::from_amplitudes(2 * n, acc);
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.vec.amplitudes()[row | col << self.n]
    }

    pub fn trace(&self) -> f64 {
        (0..1usize << self.n).map(|b| self.entry(b, b).re).sum()
    }

    pub fn purity(&self) -> f64 {
        self.vec.norm_sqr()
    }

    /// Computational-basis probabilities over the whole register.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..1usize << self.n).map(|b| self.entry(b, b).re).collect()
    }

    /// `tr(P rho)` for a Pauli on the whole register.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        if p.num_qubits() != self.n {
            return Err(Error::Dimension { expected: self.n, found: p.num_qubits() });
        }
        let (x, z) = (p.x_bits() as usize, p.z_bits() as usize);
        let phase = [1.0, 0.0, -1.0, 0.0];
        let global = Complex64::new(phase[p.phase() as usize], phase[(p.phase() as usize + 3) % 4]);
        let y = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)]
            [(x & z).count_ones() as usize % 4];
        let mut acc = Complex64::new(0.0, 0.0);
        for col in 0..1usize << self.n {
            // P |col> = global * y * (-1)^(col . z) |col ^ x>
            let s = if (col & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            acc += self.entry(col, col ^ x) * s;
        }
        Ok((acc * global * y).re)
    }

    /// Exact analogue of the sampled estimator: data observable of I/Z type,
    /// optionally conditioned on all ancillas reading 0.
    pub fn expectation_z_basis(&self, observable: &PauliString, post_select: bool) -> Result<f64> {
        if observable.num_qubits() != self.n_data || !observable.is_diagonal() {
            return Err(Error::arg("observable must be an I/Z string on the data qubits"));
        }
        let data_mask = (1u64 << self.n_data) - 1;
        let (mut num, mut den) = (0.0, 0.0);
        for (b, p) in self.diagonal().into_iter().enumerate() {
            let b = b as u64;
            if post_select && b >> self.n_data != 0 {
                continue;
            }
            num += p * z_eigenvalue(observable, b & data_mask);
            den += p;
        }
        if den <= 0.0 {
            return Err(Error::PostSelectionStarved { context: Some("exact reference".into()) });
        }
        Ok(num / den)
    }

    /// Probability that all ancillas read 0.
    pub fn keep_probability(&self) -> f64 {
        self.diagonal().iter().enumerate().filter(|(b, _)| b >> self.n_data == 0).map(|(_, p)| p).sum()
    }
}

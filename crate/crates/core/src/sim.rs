//! Monte-Carlo trajectory simulation under stochastic Pauli noise.
//!
//! Every noise site (a gate followed by depolarizing noise, or an injected
//! [`PauliChannel`]) inserts a random Pauli with some probability, so each
//! shot is a pure-state trajectory. Two engines produce identically
//! distributed records:
//!
//! * `Frame`: faults after the last non-Clifford operation are pushed to the
//!   end of the circuit through the Clifford tail, where only their X part
//!   matters and flips readout bits. The state reached by the noiseless
//!   circuit (or by the circuit with the shot's earlier faults) is simulated
//!   once and reused: by an affine stabilizer sampler when the circuit is
//!   Clifford, otherwise by a cached statevector distribution.
//! * `Dense`: a full statevector per shot. Required for mid-circuit
//!   measurement or reset.
//!
//! Every qubit is read out in Z at the end of a shot. Shot `i` draws from its
//! own generator seeded by [`shot_seed`], so records do not depend on
//! execution order.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{clifford_quarter_turns, Circuit, Primitive};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::pauli::PauliString;
use crate::statevector::{StateVector, MAX_SIM_QUBITS};
use crate::tableau::{CliffordTableau, ZBasisOutcomes};

/// Amplitude entries kept across cached early-fault distributions.
const CACHE_BUDGET: usize = 1 << 22;

/// Probabilities below this are dropped from sampled distributions.
const PROB_FLOOR: f64 = 1e-14;

/// A Pauli channel inserted between gates.
///
/// With probability `probability` a Pauli drawn uniformly from the
/// non-identity Paulis on `qubits` is applied; when `include_identity` is set
/// the draw is over all `4^k` Paulis instead, which on the full register is
/// the global depolarizing channel `(1 - p) rho + p I / d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliChannel {
    /// Number of circuit gates preceding the channel.
    pub position: usize,
    pub qubits: Vec<usize>,
    pub probability: f64,
    pub include_identity: bool,
}

impl PauliChannel {
    pub fn depolarizing(position: usize, qubits: Vec<usize>, probability: f64) -> Self {
        PauliChannel { position, qubits, probability, include_identity: true }
    }

    pub fn pauli_error(position: usize, qubits: Vec<usize>, probability: f64) -> Self {
        PauliChannel { position, qubits, probability, include_identity: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShotRecord {
    /// Bit `j` is data qubit `j`.
    pub data_bits: u64,
    /// Bit `j` is ancilla `j`.
    pub ancilla_bits: u64,
    pub trajectory_seed: u64,
    /// Non-identity Paulis inserted during the shot.
    pub faults: u32,
}

impl ShotRecord {
    pub fn kept(&self) -> bool {
        self.ancilla_bits == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationEstimate {
    pub value: f64,
    pub kept_shots: usize,
    pub total_shots: usize,
    /// Sample standard deviation over `sqrt(kept_shots)`; infinite for a
    /// single kept shot.
    pub std_error: f64,
}

impl ExpectationEstimate {
    pub fn keep_rate(&self) -> f64 {
        self.kept_shots as f64 / self.total_shots as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    /// Frame engine unless the circuit needs mid-circuit collapse.
    #[default]
    Auto,
    Frame,
    Dense,
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of shot `index` under `master`.
pub fn shot_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

#[derive(Debug, Clone, PartialEq)]
enum Op {
    Unitary(Primitive),
    Collapse(Primitive),
    Nop,
}

#[derive(Debug, Clone)]
struct Site {
    op: usize,
    qubits: Vec<usize>,
    include_identity: bool,
    /// End-of-circuit X masks of `X_q` and `Z_q` for each site qubit;
    /// filled only for sites handled by the frame.
    frame: Vec<(u64, u64)>,
}

#[derive(Debug, Clone)]
struct Bucket {
    ln_keep: f64,
    sites: Vec<usize>,
}

#[derive(Debug, Clone)]
enum Outcomes {
    Affine(ZBasisOutcomes),
    Table { outcomes: Vec<u64>, cumulative: Vec<f64> },
}

impl Outcomes {
    fn from_state(sv: &StateVector) -> Self {
        let mut outcomes = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for (i, a) in sv.amplitudes().iter().enumerate() {
            let p = a.norm_sqr();
            if p > PROB_FLOOR {
                acc += p;
                outcomes.push(i as u64);
                cumulative.push(acc);
            }
        }
        Outcomes::Table { outcomes, cumulative }
    }

    fn len(&self) -> usize {
        match self {
            Outcomes::Affine(_) => 1,
            Outcomes::Table { outcomes, .. } => outcomes.len(),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        match self {
            Outcomes::Affine(space) => space.sample(rng.random()),
            Outcomes::Table { outcomes, cumulative } => {
                let u = rng.random::<f64>() * cumulative.last().copied().unwrap_or(0.0);
                let i = cumulative.partition_point(|&c| c <= u).min(outcomes.len() - 1);
                outcomes[i]
            }
        }
    }
}

/// A fault placed by the sampler: site qubits' Pauli as register masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Fault {
    op: u32,
    x: u64,
    z: u64,
}

/// A circuit bound to a noise model, ready to produce shots.
#[derive(Debug)]
pub struct Simulator {
    n: usize,
    n_data: usize,
    ops: Vec<Op>,
    sites: Vec<Site>,
    buckets: Vec<Bucket>,
    dense: bool,
    /// Sites at or after this op are handled by the frame.
    boundary: usize,
    clifford: bool,
    cache: HashMap<Vec<Fault>, Outcomes>,
    cached_entries: usize,
}

impl Simulator {
    pub fn new(c: &Circuit, noise: &NoiseModel) -> Result<Self> {
        Simulator::with_channels(c, noise, &[], Engine::Auto)
    }

    pub fn with_channels(c: &Circuit, noise: &NoiseModel, channels: &[PauliChannel], engine: Engine) -> Result<Self> {
        let n = c.num_qubits();
        if n > MAX_SIM_QUBITS {
            return Err(Error::QubitLimit { qubits: n, cap: MAX_SIM_QUBITS });
        }
        let resolved = noise.resolve(c.n_data(), c.n_ancilla())?;
        for ch in channels {
            if ch.position > c.len() {
                return Err(Error::arg(format!("channel position {} beyond {} gates", ch.position, c.len())));
            }
            if !(0.0..=1.0).contains(&ch.probability) {
                return Err(Error::arg(format!("channel probability {}", ch.probability)));
            }
            let mut qs = ch.qubits.clone();
            qs.sort_unstable();
            qs.dedup();
            if qs.len() != ch.qubits.len() || qs.iter().any(|&q| q >= n) || qs.is_empty() {
                return Err(Error::arg(format!("bad channel qubits {:?}", ch.qubits)));
            }
        }

        let mut ops = Vec::new();
        let mut sites = Vec::new();
        let mut rates = Vec::new();
        let push_channels = |pos: usize, ops: &mut Vec<Op>, sites: &mut Vec<Site>, rates: &mut Vec<f64>| {
            for ch in channels.iter().filter(|ch| ch.position == pos) {
                ops.push(Op::Nop);
                sites.push(Site {
                    op: ops.len() - 1,
                    qubits: ch.qubits.clone(),
                    include_identity: ch.include_identity,
                    frame: vec![],
                });
                rates.push(ch.probability);
            }
        };
        for (gi, gate) in c.gates().iter().enumerate() {
            push_channels(gi, &mut ops, &mut sites, &mut rates);
            for lo in gate.lower() {
                let op = match lo.prim {
                    Primitive::Measure(_) | Primitive::Reset(_) => Op::Collapse(lo.prim),
                    p => Op::Unitary(p),
                };
                ops.push(op);
                let rate = resolved.site_rate(&lo.noise_support);
                if rate > 0.0 {
                    sites.push(Site { op: ops.len() - 1, qubits: lo.noise_support, include_identity: false, frame: vec![] });
                    rates.push(rate);
                }
            }
        }
        push_channels(c.len(), &mut ops, &mut sites, &mut rates);

        // measurements with nothing acting on their qubit afterwards are
        // subsumed by the final readout
        let mut touched = 0u64;
        let site_mask = |op: usize, sites: &[Site]| -> u64 {
            sites.iter().filter(|s| s.op == op).flat_map(|s| s.qubits.iter()).map(|&q| 1u64 << q).sum::<u64>()
        };
        for i in (0..ops.len()).rev() {
            touched |= site_mask(i, &sites);
            match ops[i] {
                Op::Collapse(Primitive::Measure(q)) if touched >> q & 1 == 0 => ops[i] = Op::Nop,
                Op::Collapse(Primitive::Measure(q)) | Op::Collapse(Primitive::Reset(q)) => touched |= 1 << q,
                Op::Unitary(Primitive::Clifford(g)) => {
                    let (qs, k) = g.qubits();
                    for &q in &qs[..k] {
                        touched |= 1 << q;
                    }
                }
                Op::Unitary(Primitive::Rotation { qubit, .. }) => touched |= 1 << qubit,
                _ => {}
            }
        }

        let needs_dense = ops.iter().any(|o| matches!(o, Op::Collapse(_)));
        let dense = match engine {
            Engine::Dense => true,
            Engine::Frame if needs_dense => {
                return Err(Error::arg("frame engine cannot simulate mid-circuit measurement or reset"))
            }
            Engine::Frame => false,
            Engine::Auto => needs_dense,
        };

        let is_non_clifford = |o: &Op| match o {
            Op::Unitary(Primitive::Rotation { angle, .. }) => clifford_quarter_turns(*angle).is_none(),
            _ => false,
        };
        let last_nc = ops.iter().rposition(is_non_clifford);
        let clifford = last_nc.is_none();
        let boundary = if dense { ops.len() } else { last_nc.unwrap_or(0) };

        let mut by_rate: Vec<(u64, Bucket)> = Vec::new();
        for (si, &rate) in rates.iter().enumerate() {
            let key = rate.to_bits();
            match by_rate.iter_mut().find(|(k, _)| *k == key) {
                Some((_, b)) => b.sites.push(si),
                None => by_rate.push((key, Bucket { ln_keep: (1.0 - rate).ln(), sites: vec![si] })),
            }
        }
        let buckets = by_rate.into_iter().map(|(_, b)| b).collect();

        let mut sim = Simulator {
            n,
            n_data: c.n_data(),
            ops,
            sites,
            buckets,
            dense,
            boundary,
            clifford,
            cache: HashMap::new(),
            cached_entries: 0,
        };
        if !dense {
            sim.build_frames();
        }
        Ok(sim)
    }

    /// Backward pass recording, for each frame site, where X and Z on each of
    /// its qubits end up (X part only) after the rest of the circuit.
    fn build_frames(&mut self) {
        let n = self.n;
        let mut ex: Vec<u64> = (0..n).map(|q| 1u64 << q).collect();
        let mut ez = vec![0u64; n];
        let mut site_idx = self.sites.len();
        let image = |x: u64, z: u64, ex: &[u64], ez: &[u64]| -> u64 {
            let mut m = 0u64;
            let (mut xb, mut zb) = (x, z);
            while xb != 0 {
                m ^= ex[xb.trailing_zeros() as usize];
                xb &= xb - 1;
            }
            while zb != 0 {
                m ^= ez[zb.trailing_zeros() as usize];
                zb &= zb - 1;
            }
            m
        };
        for i in (self.boundary..self.ops.len()).rev() {
            while site_idx > 0 && self.sites[site_idx - 1].op >= i {
                site_idx -= 1;
                let site = &mut self.sites[site_idx];
                site.frame = site.qubits.iter().map(|&q| (ex[q], ez[q])).collect();
            }
            if let Op::Unitary(Primitive::Clifford(g)) = self.ops[i] {
                let (qs, k) = g.qubits();
                let mut updates = [(0usize, 0u64, 0u64); 2];
                for (j, &q) in qs[..k].iter().enumerate() {
                    let (x1, z1, _) = g.conjugate_bits(1 << q, 0);
                    let (x2, z2, _) = g.conjugate_bits(0, 1 << q);
                    updates[j] = (q, image(x1, z1, &ex, &ez), image(x2, z2, &ex, &ez));
                }
                for &(q, a, b) in &updates[..k] {
                    ex[q] = a;
                    ez[q] = b;
                }
            }
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn is_dense(&self) -> bool {
        self.dense
    }

    /// Draws the shot's faults in site order.
    fn sample_faults<R: Rng>(&self, rng: &mut R, out: &mut Vec<(usize, u64)>) {
        out.clear();
        for b in &self.buckets {
            if b.ln_keep == 0.0 {
                continue;
            }
            let len = b.sites.len();
            let mut pos = 0usize;
            loop {
                let u = 1.0 - rng.random::<f64>();
                let gap = (u.ln() / b.ln_keep).floor();
                if !(gap < (len - pos) as f64) {
                    break;
                }
                pos += gap as usize;
                let si = b.sites[pos];
                let k = self.sites[si].qubits.len() as u32;
                let total = 1u64 << (2 * k);
                let code = if self.sites[si].include_identity {
                    rng.random_range(0..total)
                } else {
                    rng.random_range(1..total)
                };
                if code != 0 {
                    out.push((si, code));
                }
                pos += 1;
                if pos >= len {
                    break;
                }
            }
        }
        out.sort_unstable();
    }

    fn fault_masks(&self, si: usize, code: u64) -> (u64, u64) {
        let (mut x, mut z) = (0u64, 0u64);
        for (j, &q) in self.sites[si].qubits.iter().enumerate() {
            x |= (code >> (2 * j) & 1) << q;
            z |= (code >> (2 * j + 1) & 1) << q;
        }
        (x, z)
    }

    fn frame_flip(&self, si: usize, code: u64) -> u64 {
        let mut m = 0u64;
        for (j, &(fx, fz)) in self.sites[si].frame.iter().enumerate() {
            if code >> (2 * j) & 1 == 1 {
                m ^= fx;
            }
            if code >> (2 * j + 1) & 1 == 1 {
                m ^= fz;
            }
        }
        m
    }

    fn simulate_with(&self, faults: &[Fault]) -> Result<StateVector> {
        let mut sv = StateVector::zero(self.n)?;
        let mut next = 0;
        for (i, op) in self.ops.iter().enumerate() {
            if let Op::Unitary(p) = op {
                sv.apply_unitary(p);
            }
            while next < faults.len() && faults[next].op as usize == i {
                sv.apply_pauli_bits(faults[next].x, faults[next].z);
                next += 1;
            }
        }
        Ok(sv)
    }

    fn outcomes_for(&mut self, early: Vec<Fault>) -> Result<&Outcomes> {
        if !self.cache.contains_key(&early) {
            let outcomes = if self.clifford && early.is_empty() {
                let mut t = CliffordTableau::identity(self.n);
                for op in &self.ops {
                    if let Op::Unitary(Primitive::Clifford(g)) = op {
                        t.apply_gate(g)?;
                    }
                }
                Outcomes::Affine(t.z_basis_outcomes())
            } else {
                Outcomes::from_state(&self.simulate_with(&early)?)
            };
            if !early.is_empty() && self.cached_entries + outcomes.len() > CACHE_BUDGET {
                self.cache.clear();
                self.cached_entries = 0;
            }
            self.cached_entries += outcomes.len();
            self.cache.insert(early.clone(), outcomes);
        }
        Ok(&self.cache[&early])
    }

    fn frame_shot(&mut self, rng: &mut ChaCha8Rng, scratch: &mut Vec<(usize, u64)>) -> Result<(u64, u32)> {
        self.sample_faults(rng, scratch);
        let mut flip = 0u64;
        let mut early = Vec::new();
        for &(si, code) in scratch.iter() {
            if self.sites[si].op >= self.boundary {
                flip ^= self.frame_flip(si, code);
            } else {
                let (x, z) = self.fault_masks(si, code);
                early.push(Fault { op: self.sites[si].op as u32, x, z });
            }
        }
        let faults = scratch.len() as u32;
        let outcome = self.outcomes_for(early)?.sample(rng);
        Ok((outcome ^ flip, faults))
    }

    fn dense_shot(&self, rng: &mut ChaCha8Rng, scratch: &mut Vec<(usize, u64)>) -> Result<(u64, u32)> {
        self.sample_faults(rng, scratch);
        let mut faults: Vec<Fault> = scratch
            .iter()
            .map(|&(si, code)| {
                let (x, z) = self.fault_masks(si, code);
                Fault { op: self.sites[si].op as u32, x, z }
            })
            .collect();
        faults.sort_by_key(|f| f.op);
        let mut sv = StateVector::zero(self.n)?;
        let mut next = 0;
        for (i, op) in self.ops.iter().enumerate() {
            match op {
                Op::Unitary(p) => sv.apply_unitary(p),
                Op::Collapse(p) => sv.apply_primitive_with(p, rng.random()),
                Op::Nop => {}
            }
            while next < faults.len() && faults[next].op as usize == i {
                sv.apply_pauli_bits(faults[next].x, faults[next].z);
                next += 1;
            }
        }
        let outcome = Outcomes::from_state(&sv).sample(rng);
        Ok((outcome, scratch.len() as u32))
    }

    /// Shots with indices `first .. first + count` under `master_seed`.
    pub fn run_range(&mut self, first: u64, count: usize, master_seed: u64) -> Result<Vec<ShotRecord>> {
        let mut scratch = Vec::new();
        let data_mask = crate::pauli::mask(self.n_data);
        let mut out = Vec::with_capacity(count);
        for idx in first..first + count as u64 {
            let seed = shot_seed(master_seed, idx);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (bits, faults) = if self.dense {
                self.dense_shot(&mut rng, &mut scratch)?
            } else {
                self.frame_shot(&mut rng, &mut scratch)?
            };
            out.push(ShotRecord {
                data_bits: bits & data_mask,
                ancilla_bits: bits >> self.n_data,
                trajectory_seed: seed,
                faults,
            });
        }
        Ok(out)
    }

    pub fn run(&mut self, shots: usize, master_seed: u64) -> Result<Vec<ShotRecord>> {
        if shots == 0 {
            return Err(Error::arg("shots must be >= 1"));
        }
        self.run_range(0, shots, master_seed)
    }
}

pub fn run_shots(c: &Circuit, noise: &NoiseModel, shots: usize, master_seed: u64) -> Result<Vec<ShotRecord>> {
    Simulator::new(c, noise)?.run(shots, master_seed)
}

/// Sign of a diagonal Hermitian observable on bitstring `bits`.
pub fn z_eigenvalue(observable: &PauliString, bits: u64) -> f64 {
    let parity = (observable.z_bits() & bits).count_ones() % 2 == 1;
    let negative = observable.phase() == 2;
    if parity != negative {
        -1.0
    } else {
        1.0
    }
}

/// Mean of `(-1)^parity` of `observable` over the (optionally post-selected)
/// data readouts.
pub fn expectation_z_basis(records: &[ShotRecord], observable: &PauliString, post_select: bool) -> Result<ExpectationEstimate> {
    if !observable.is_diagonal() || !observable.is_hermitian() {
        return Err(Error::arg(format!("observable {observable} must be a Hermitian I/Z string")));
    }
    let mut kept = 0usize;
    let mut sum = 0.0;
    for r in records.iter().filter(|r| !post_select || r.kept()) {
        kept += 1;
        sum += z_eigenvalue(observable, r.data_bits);
    }
    if kept == 0 {
        return Err(Error::PostSelectionStarved { context: None });
    }
    let mean = sum / kept as f64;
    let std_error = if kept >= 2 {
        // values are +-1, so the sum of squares is `kept`
        let var = (kept as f64 - kept as f64 * mean * mean) / (kept as f64 - 1.0);
        (var.max(0.0) / kept as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(ExpectationEstimate { value: mean, kept_shots: kept, total_shots: records.len(), std_error })
}

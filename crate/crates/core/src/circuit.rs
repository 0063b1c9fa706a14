//! Circuit intermediate representation.
//!
//! A [`Circuit`] is an ordered gate list over `n_data` data qubits followed by
//! `n_ancilla` ancillas (ancilla `j` is qubit `n_data + j`). Besides the IR
//! itself this module holds the random Clifford circuit generator, mirroring,
//! global unitary folding and the line-oriented text format:
//!
//! ```text
//! qubits=4 ancillas=1 seed=7 depth=2 label=demo
//! # free-form note
//! H 0
//! CX 0 1
//! RZ 2 0.7853981633974483
//! CPAULI 4 ZZII
//! MEASURE_Z 4
//! ```

use std::f64::consts::FRAC_PI_2;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use crate::tableau::{CliffordGate, CliffordTableau};

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    /// (control, target)
    Cx(usize, usize),
    Cz(usize, usize),
    Swap(usize, usize),
    /// `exp(-i theta X / 2)`
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    /// Controlled application of a signed Pauli on the data register.
    ControlledPauli { control: usize, pauli: PauliString },
    MeasureZ(usize),
    Reset(usize),
}

impl TryFrom<CliffordGate> for Gate {
    type Error = Error;

    fn try_from(g: CliffordGate) -> Result<Gate> {
        use CliffordGate as C;
        Ok(match g {
            C::H(q) => Gate::H(q),
            C::S(q) => Gate::S(q),
            C::Sdg(q) => Gate::Sdg(q),
            C::X(q) => Gate::X(q),
            C::Y(q) => Gate::Y(q),
            C::Z(q) => Gate::Z(q),
            C::Cx(c, t) => Gate::Cx(c, t),
            C::Cz(c, t) => Gate::Cz(c, t),
            C::Swap(a, b) => Gate::Swap(a, b),
            C::Cy(..) => return Err(Error::arg("CY has no circuit gate")),
        })
    }
}

/// Smallest unit the simulators execute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    Clifford(CliffordGate),
    Rotation { qubit: usize, axis: Pauli, angle: f64 },
    Measure(usize),
    Reset(usize),
}

/// A primitive plus the qubits its gate noise acts on (empty when the
/// primitive is a noiseless piece of a larger gate).
#[derive(Debug, Clone, PartialEq)]
pub struct LoweredOp {
    pub prim: Primitive,
    pub noise_support: Vec<usize>,
}

/// Multiple of pi/2 for Clifford-angle rotations.
pub(crate) fn clifford_quarter_turns(angle: f64) -> Option<u8> {
    let k = angle / FRAC_PI_2;
    let r = k.round();
    if (k - r).abs() < 1e-9 {
        Some(r.rem_euclid(4.0) as u8)
    } else {
        None
    }
}

/// Clifford gates equal (up to global phase) to a quarter-turn rotation.
fn rotation_as_clifford(axis: Pauli, q: usize, turns: u8) -> Vec<CliffordGate> {
    use CliffordGate as C;
    match (axis, turns) {
        (_, 0) => vec![],
        (Pauli::Z, 1) => vec![C::S(q)],
        (Pauli::Z, 2) => vec![C::Z(q)],
        (Pauli::Z, 3) => vec![C::Sdg(q)],
        (Pauli::X, 1) => vec![C::H(q), C::S(q), C::H(q)],
        (Pauli::X, 2) => vec![C::X(q)],
        (Pauli::X, 3) => vec![C::H(q), C::Sdg(q), C::H(q)],
        (Pauli::Y, 1) => vec![C::Z(q), C::H(q)],
        (Pauli::Y, 2) => vec![C::Y(q)],
        (Pauli::Y, 3) => vec![C::H(q), C::Z(q)],
        _ => unreachable!("identity axis"),
    }
}

impl Gate {
    /// Every qubit the gate touches, control first for controlled gates.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::H(q)
            | Gate::S(q)
            | Gate::Sdg(q)
            | Gate::X(q)
            | Gate::Y(q)
            | Gate::Z(q)
            | Gate::Rx(q, _)
            | Gate::Ry(q, _)
            | Gate::Rz(q, _)
            | Gate::MeasureZ(q)
            | Gate::Reset(q) => vec![*q],
            Gate::Cx(a, b) | Gate::Cz(a, b) | Gate::Swap(a, b) => vec![*a, *b],
            Gate::ControlledPauli { control, pauli } => {
                let mut v = vec![*control];
                let s = pauli.support();
                v.extend((0..pauli.num_qubits()).filter(|q| s >> q & 1 == 1));
                v
            }
        }
    }

    pub fn is_measurement_like(&self) -> bool {
        matches!(self, Gate::MeasureZ(_) | Gate::Reset(_))
    }

    pub fn rotation(&self) -> Option<(usize, Pauli, f64)> {
        match *self {
            Gate::Rx(q, t) => Some((q, Pauli::X, t)),
            Gate::Ry(q, t) => Some((q, Pauli::Y, t)),
            Gate::Rz(q, t) => Some((q, Pauli::Z, t)),
            _ => None,
        }
    }

    pub fn is_clifford(&self) -> bool {
        match self.rotation() {
            Some((_, _, t)) => clifford_quarter_turns(t).is_some(),
            None => !self.is_measurement_like(),
        }
    }

    pub fn inverse(&self) -> Result<Gate> {
        Ok(match self {
            Gate::S(q) => Gate::Sdg(*q),
            Gate::Sdg(q) => Gate::S(*q),
            Gate::Rx(q, t) => Gate::Rx(*q, -t),
            Gate::Ry(q, t) => Gate::Ry(*q, -t),
            Gate::Rz(q, t) => Gate::Rz(*q, -t),
            Gate::ControlledPauli { control, pauli } => {
                // controlled-(i^k P)^-1 = controlled-(i^-k P)
                Gate::ControlledPauli { control: *control, pauli: pauli.with_phase((4 - pauli.phase()) & 3) }
            }
            Gate::MeasureZ(_) | Gate::Reset(_) => {
                return Err(Error::arg(format!("{self} has no inverse")))
            }
            g => g.clone(),
        })
    }

    /// Clifford decomposition, or `None` for non-Clifford or non-unitary gates.
    pub fn clifford_gates(&self) -> Option<Vec<CliffordGate>> {
        if !self.is_clifford() {
            return None;
        }
        Some(self.lower().into_iter().filter_map(|op| match op.prim {
            Primitive::Clifford(g) => Some(g),
            _ => None,
        }).collect())
    }

    /// Lowers to simulator primitives. A controlled Pauli of weight `w`
    /// becomes `w` controlled single-qubit Paulis, each a separate noise site,
    /// preceded by a noiseless phase correction on the control.
    pub fn lower(&self) -> Vec<LoweredOp> {
        use CliffordGate as C;
        let one = |g: CliffordGate, q: usize| vec![LoweredOp { prim: Primitive::Clifford(g), noise_support: vec![q] }];
        let two = |g: CliffordGate, a: usize, b: usize| {
            vec![LoweredOp { prim: Primitive::Clifford(g), noise_support: vec![a, b] }]
        };
        match *self {
            Gate::H(q) => one(C::H(q), q),
            Gate::S(q) => one(C::S(q), q),
            Gate::Sdg(q) => one(C::Sdg(q), q),
            Gate::X(q) => one(C::X(q), q),
            Gate::Y(q) => one(C::Y(q), q),
            Gate::Z(q) => one(C::Z(q), q),
            Gate::Cx(a, b) => two(C::Cx(a, b), a, b),
            Gate::Cz(a, b) => two(C::Cz(a, b), a, b),
            Gate::Swap(a, b) => two(C::Swap(a, b), a, b),
            Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) => {
                let (_, axis, angle) = self.rotation().unwrap();
                match clifford_quarter_turns(angle) {
                    Some(turns) => {
                        let gates = rotation_as_clifford(axis, q, turns);
                        if gates.is_empty() {
                            // identity rotation still occupies a noisy gate slot
                            return vec![LoweredOp {
                                prim: Primitive::Rotation { qubit: q, axis, angle },
                                noise_support: vec![q],
                            }];
                        }
                        let last = gates.len() - 1;
                        gates
                            .into_iter()
                            .enumerate()
                            .map(|(i, g)| LoweredOp {
                                prim: Primitive::Clifford(g),
                                noise_support: if i == last { vec![q] } else { vec![] },
                            })
                            .collect()
                    }
                    None => vec![LoweredOp {
                        prim: Primitive::Rotation { qubit: q, axis, angle },
                        noise_support: vec![q],
                    }],
                }
            }
            Gate::ControlledPauli { control, ref pauli } => {
                let mut ops = Vec::new();
                let phase_gate = match pauli.phase() {
                    1 => Some(C::S(control)),
                    2 => Some(C::Z(control)),
                    3 => Some(C::Sdg(control)),
                    _ => None,
                };
                if let Some(g) = phase_gate {
                    ops.push(LoweredOp { prim: Primitive::Clifford(g), noise_support: vec![] });
                }
                for q in 0..pauli.num_qubits() {
                    let g = match pauli.get(q) {
                        Pauli::I => continue,
                        Pauli::X => C::Cx(control, q),
                        Pauli::Y => C::Cy(control, q),
                        Pauli::Z => C::Cz(control, q),
                    };
                    ops.push(LoweredOp { prim: Primitive::Clifford(g), noise_support: vec![control, q] });
                }
                ops
            }
            Gate::MeasureZ(q) => vec![LoweredOp { prim: Primitive::Measure(q), noise_support: vec![] }],
            Gate::Reset(q) => vec![LoweredOp { prim: Primitive::Reset(q), noise_support: vec![] }],
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::H(q) => write!(f, "H {q}"),
            Gate::S(q) => write!(f, "S {q}"),
            Gate::Sdg(q) => write!(f, "SDG {q}"),
            Gate::X(q) => write!(f, "X {q}"),
            Gate::Y(q) => write!(f, "Y {q}"),
            Gate::Z(q) => write!(f, "Z {q}"),
            Gate::Cx(a, b) => write!(f, "CX {a} {b}"),
            Gate::Cz(a, b) => write!(f, "CZ {a} {b}"),
            Gate::Swap(a, b) => write!(f, "SWAP {a} {b}"),
            Gate::Rx(q, t) => write!(f, "RX {q} {t}"),
            Gate::Ry(q, t) => write!(f, "RY {q} {t}"),
            Gate::Rz(q, t) => write!(f, "RZ {q} {t}"),
            Gate::ControlledPauli { control, pauli } => write!(f, "CPAULI {control} {pauli}"),
            Gate::MeasureZ(q) => write!(f, "MEASURE_Z {q}"),
            Gate::Reset(q) => write!(f, "RESET {q}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CircuitMeta {
    pub label: Option<String>,
    pub seed: Option<u64>,
    pub depth: Option<usize>,
    /// Comment lines carried by the text format.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_data: usize,
    n_ancilla: usize,
    gates: Vec<Gate>,
    pub meta: CircuitMeta,
}

impl Circuit {
    pub fn new(n_data: usize, n_ancilla: usize) -> Self {
        Circuit { n_data, n_ancilla, gates: Vec::new(), meta: CircuitMeta::default() }
    }

    pub fn from_gates(n_data: usize, n_ancilla: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Self> {
        let mut c = Circuit::new(n_data, n_ancilla);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn n_data(&self) -> usize {
        self.n_data
    }

    pub fn n_ancilla(&self) -> usize {
        self.n_ancilla
    }

    pub fn num_qubits(&self) -> usize {
        self.n_data + self.n_ancilla
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    fn validate(&self, g: &Gate) -> Result<()> {
        let n = self.num_qubits();
        let qs = g.qubits();
        if let Some(&bad) = qs.iter().find(|&&q| q >= n) {
            return Err(Error::arg(format!("gate '{g}' touches qubit {bad} of {n}")));
        }
        let mut sorted = qs.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != qs.len() {
            return Err(Error::arg(format!("gate '{g}' repeats an operand")));
        }
        if let Some((_, _, t)) = g.rotation() {
            if !t.is_finite() {
                return Err(Error::arg(format!("non-finite rotation angle in '{g}'")));
            }
        }
        if let Gate::ControlledPauli { pauli, .. } = g {
            if pauli.num_qubits() != self.n_data {
                return Err(Error::Dimension { expected: self.n_data, found: pauli.num_qubits() });
            }
            if pauli.is_identity() {
                return Err(Error::arg("controlled identity"));
            }
        }
        Ok(())
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        self.validate(&g)?;
        self.gates.push(g);
        Ok(())
    }

    /// Appends `other`, which must live on a register no larger than this one.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_data > self.n_data || other.num_qubits() > self.num_qubits() {
            return Err(Error::Dimension { expected: self.num_qubits(), found: other.num_qubits() });
        }
        for g in &other.gates {
            let g = match g {
                Gate::ControlledPauli { control, pauli } if other.n_data != self.n_data => {
                    Gate::ControlledPauli { control: *control, pauli: pauli.embed(self.n_data, 0)? }
                }
                g => g.clone(),
            };
            self.push(g)?;
        }
        Ok(())
    }

    /// Same gates on a register with `n_ancilla` ancillas.
    pub fn widened(&self, n_ancilla: usize) -> Result<Circuit> {
        let mut c = Circuit::new(self.n_data, n_ancilla);
        c.meta = self.meta.clone();
        c.append(self)?;
        Ok(c)
    }

    pub fn is_clifford(&self) -> bool {
        self.gates.iter().all(Gate::is_clifford)
    }

    pub fn has_measurements(&self) -> bool {
        self.gates.iter().any(Gate::is_measurement_like)
    }

    pub fn lower(&self) -> Vec<LoweredOp> {
        self.gates.iter().flat_map(Gate::lower).collect()
    }

    /// Gate-wise inverse in reverse order.
    pub fn inverse(&self) -> Result<Circuit> {
        let mut c = Circuit::new(self.n_data, self.n_ancilla);
        for g in self.gates.iter().rev() {
            c.push(g.inverse()?)?;
        }
        c.meta = self.meta.clone();
        Ok(c)
    }

    /// `c` followed by its inverse; the noiseless action is the identity.
    pub fn mirror(&self) -> Result<Circuit> {
        if self.has_measurements() {
            return Err(Error::arg("cannot mirror a circuit containing measurements"));
        }
        let mut out = self.clone();
        out.append(&self.inverse()?)?;
        out.meta.label = Some(format!("mirror({})", self.meta.label.as_deref().unwrap_or("circuit")));
        Ok(out)
    }

    /// Global unitary folding `U (U^dag U)^k` plus a partial fold of the
    /// trailing gates so the gate count is `G (1 + 2k) + 2r`, with
    /// `r = round((scale - 1 - 2k) G / 2)`.
    pub fn fold_global(&self, scale: f64) -> Result<Circuit> {
        if !scale.is_finite() || scale < 1.0 {
            return Err(Error::arg(format!("fold scale must be >= 1, got {scale}")));
        }
        if self.has_measurements() {
            return Err(Error::arg("cannot fold a circuit containing measurements"));
        }
        let g = self.gates.len();
        let k = ((scale - 1.0) / 2.0).floor();
        let fraction = scale - 1.0 - 2.0 * k;
        let r = ((fraction * g as f64) / 2.0).round_ties_even() as usize;
        let r = r.min(g);
        let inv = self.inverse()?;
        let mut out = self.clone();
        for _ in 0..k as usize {
            out.append(&inv)?;
            out.append(self)?;
        }
        let tail = &self.gates[g - r..];
        for gate in tail.iter().rev() {
            out.push(gate.inverse()?)?;
        }
        for gate in tail {
            out.push(gate.clone())?;
        }
        Ok(out)
    }

    /// Composition of per-gate tableaux. Fails on non-Clifford content.
    pub fn tableau(&self) -> Result<CliffordTableau> {
        let mut t = CliffordTableau::identity(self.num_qubits());
        for g in &self.gates {
            let cliffords = g.clifford_gates().ok_or_else(|| Error::NonClifford(g.to_string()))?;
            for cg in &cliffords {
                t.apply_gate(cg)?;
            }
        }
        Ok(t)
    }

    /// `<0| U^dag P U |0>` for a Clifford circuit; `P` spans all qubits.
    pub fn ideal_expectation(&self, observable: &PauliString) -> Result<f64> {
        let image = self.tableau()?.inverse().conjugate(observable)?;
        if !image.is_diagonal() {
            return Ok(0.0);
        }
        match image.phase() {
            0 => Ok(1.0),
            2 => Ok(-1.0),
            _ => Err(Error::arg("observable must be Hermitian")),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("qubits={} ancillas={}", self.n_data, self.n_ancilla);
        if let Some(seed) = self.meta.seed {
            write!(s, " seed={seed}").unwrap();
        }
        if let Some(depth) = self.meta.depth {
            write!(s, " depth={depth}").unwrap();
        }
        if let Some(label) = &self.meta.label {
            write!(s, " label={label}").unwrap();
        }
        s.push('\n');
        for note in &self.meta.notes {
            writeln!(s, "# {note}").unwrap();
        }
        for g in &self.gates {
            writeln!(s, "{g}").unwrap();
        }
        s
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty circuit text"))?;
        let mut n_data = None;
        let mut n_anc = None;
        let mut meta = CircuitMeta::default();
        for field in header.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| parse_err(1, format!("bad header field '{field}'")))?;
            let num = |v: &str| v.parse::<u64>().map_err(|e| parse_err(1, format!("{key}: {e}")));
            match key {
                "qubits" => n_data = Some(num(value)? as usize),
                "ancillas" => n_anc = Some(num(value)? as usize),
                "seed" => meta.seed = Some(num(value)?),
                "depth" => meta.depth = Some(num(value)? as usize),
                "label" => meta.label = Some(value.to_string()),
                other => return Err(parse_err(1, format!("unknown header key '{other}'"))),
            }
        }
        let n_data = n_data.ok_or_else(|| parse_err(1, "header lacks qubits="))?;
        let mut circuit = Circuit::new(n_data, n_anc.unwrap_or(0));
        for (idx, line) in lines {
            let lineno = idx + 1;
            if let Some(note) = line.strip_prefix('#') {
                meta.notes.push(note.strip_prefix(' ').unwrap_or(note).to_string());
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let q = |i: usize| -> Result<usize> {
                toks.get(i)
                    .ok_or_else(|| parse_err(lineno, "missing operand"))?
                    .parse::<usize>()
                    .map_err(|e| parse_err(lineno, e.to_string()))
            };
            let angle = || -> Result<f64> {
                toks.get(2)
                    .ok_or_else(|| parse_err(lineno, "missing angle"))?
                    .parse::<f64>()
                    .map_err(|e| parse_err(lineno, e.to_string()))
            };
            let expect = |n: usize| {
                if toks.len() != n {
                    Err(parse_err(lineno, format!("expected {} operands for {}", n - 1, toks[0])))
                } else {
                    Ok(())
                }
            };
            let gate = match toks[0] {
                "H" | "S" | "SDG" | "X" | "Y" | "Z" | "MEASURE_Z" | "RESET" => {
                    expect(2)?;
                    let a = q(1)?;
                    match toks[0] {
                        "H" => Gate::H(a),
                        "S" => Gate::S(a),
                        "SDG" => Gate::Sdg(a),
                        "X" => Gate::X(a),
                        "Y" => Gate::Y(a),
                        "Z" => Gate::Z(a),
                        "MEASURE_Z" => Gate::MeasureZ(a),
                        _ => Gate::Reset(a),
                    }
                }
                "CX" | "CZ" | "SWAP" => {
                    expect(3)?;
                    let (a, b) = (q(1)?, q(2)?);
                    match toks[0] {
                        "CX" => Gate::Cx(a, b),
                        "CZ" => Gate::Cz(a, b),
                        _ => Gate::Swap(a, b),
                    }
                }
                "RX" | "RY" | "RZ" => {
                    expect(3)?;
                    let (a, t) = (q(1)?, angle()?);
                    match toks[0] {
                        "RX" => Gate::Rx(a, t),
                        "RY" => Gate::Ry(a, t),
                        _ => Gate::Rz(a, t),
                    }
                }
                "CPAULI" => {
                    expect(3)?;
                    let pauli: PauliString = toks[2].parse().map_err(|e: Error| parse_err(lineno, e.to_string()))?;
                    Gate::ControlledPauli { control: q(1)?, pauli }
                }
                other => return Err(parse_err(lineno, format!("unknown gate '{other}'"))),
            };
            circuit.push(gate).map_err(|e| parse_err(lineno, e.to_string()))?;
        }
        circuit.meta = meta;
        Ok(circuit)
    }
}

const ONE_QUBIT_CLIFFORDS: [fn(usize) -> Gate; 6] = [Gate::H, Gate::S, Gate::Sdg, Gate::X, Gate::Y, Gate::Z];
const TWO_QUBIT_CLIFFORDS: [fn(usize, usize) -> Gate; 3] = [Gate::Cx, Gate::Cz, Gate::Swap];

/// Random layered Clifford circuit.
///
/// Each layer draws a subset size uniformly from `1..=n`, picks that many
/// qubits at random, pairs them off into two-qubit gates (CX, CZ or SWAP)
/// and puts a one-qubit Clifford on the odd one out.
pub fn random_clifford_circuit<R: Rng + ?Sized>(n: usize, depth: usize, rng: &mut R) -> Result<Circuit> {
    if n == 0 || depth == 0 {
        return Err(Error::arg("random circuit needs n >= 1 and depth >= 1"));
    }
    let mut c = Circuit::new(n, 0);
    let mut qubits: Vec<usize> = (0..n).collect();
    for _ in 0..depth {
        let size = rng.random_range(1..=n);
        qubits.shuffle(rng);
        let subset = &qubits[..size];
        for pair in subset.chunks(2) {
            let g = match *pair {
                [a, b] => TWO_QUBIT_CLIFFORDS[rng.random_range(0..TWO_QUBIT_CLIFFORDS.len())](a, b),
                [a] => ONE_QUBIT_CLIFFORDS[rng.random_range(0..ONE_QUBIT_CLIFFORDS.len())](a),
                _ => unreachable!(),
            };
            c.push(g)?;
        }
    }
    c.meta.depth = Some(depth);
    c.meta.label = Some("random_clifford".into());
    c.meta.notes.push("layer rule: uniform subset size, greedy CX/CZ/SWAP pairs, H/S/SDG/X/Y/Z leftover".into());
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_oracle::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn random_circuit_is_deterministic_and_clifford() {
        let a = random_clifford_circuit(4, 25, &mut rng(17)).unwrap();
        let b = random_clifford_circuit(4, 25, &mut rng(17)).unwrap();
        assert_eq!(a, b);
        assert!(a.is_clifford());
        assert_eq!(a.meta.depth, Some(25));
        assert!(random_clifford_circuit(0, 3, &mut rng(1)).is_err());
        assert!(random_clifford_circuit(3, 0, &mut rng(1)).is_err());
    }

    #[test]
    fn random_circuit_zzzz_spectrum() {
        for seed in 0..20 {
            let c = random_clifford_circuit(4, 10, &mut rng(seed)).unwrap();
            let zzzz = PauliString::z_on(4, 0..4);
            let fast = c.ideal_expectation(&zzzz).unwrap();
            let psi = mat_vec(&circuit_matrix(&c), &zero_state(4));
            let exact = expectation(&psi, &dense_pauli(&zzzz));
            assert!(exact.im.abs() < 1e-12);
            assert!((fast - exact.re).abs() < 1e-12, "seed {seed}: {fast} vs {}", exact.re);
            assert!([-1.0, 0.0, 1.0].iter().any(|v| (v - fast).abs() < 1e-12));
        }
    }

    #[test]
    fn mirror_of_hadamard_returns_to_zero() {
        let c = Circuit::from_gates(1, 0, [Gate::H(0)]).unwrap();
        let m = c.mirror().unwrap();
        assert_eq!(m.len(), 2);
        let psi = mat_vec(&circuit_matrix(&m), &zero_state(1));
        assert!((psi[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mirrored_random_circuit_is_identity() {
        let c = random_clifford_circuit(4, 25, &mut rng(3)).unwrap();
        let m = c.mirror().unwrap();
        assert_eq!(m.len(), 2 * c.len());
        assert_eq!(m.ideal_expectation(&PauliString::z_on(4, 0..4)).unwrap(), 1.0);
        assert!(m.tableau().unwrap().is_identity());
        assert!(mat_close_phase(&circuit_matrix(&m), &eye(16), 1e-10));
    }

    #[test]
    fn mirror_rejects_measurements() {
        let c = Circuit::from_gates(1, 0, [Gate::H(0), Gate::MeasureZ(0)]).unwrap();
        assert!(c.mirror().is_err());
        assert!(c.fold_global(3.0).is_err());
    }

    fn non_clifford_circuit(seed: u64, n: usize, len: usize) -> Circuit {
        let mut r = rng(seed);
        let mut c = random_clifford_circuit(n, len, &mut r).unwrap();
        for q in 0..n {
            c.push(Gate::Ry(q, r.random_range(-3.0..3.0))).unwrap();
            c.push(Gate::Rz(q, r.random_range(-3.0..3.0))).unwrap();
        }
        c
    }

    #[test]
    fn fold_gate_counts_and_equivalence() {
        let c = non_clifford_circuit(8, 2, 1);
        let g = c.len();
        assert_eq!(c.fold_global(1.0).unwrap(), c);
        let f3 = c.fold_global(3.0).unwrap();
        assert_eq!(f3.len(), 3 * g);
        let u = circuit_matrix(&c);
        assert!(mat_close_phase(&circuit_matrix(&f3), &u, 1e-10));
        assert!(c.fold_global(0.9).is_err());
    }

    #[test]
    fn fractional_fold_of_ten_gates() {
        let mut c = non_clifford_circuit(4, 3, 2);
        while c.len() > 10 {
            c.gates.pop();
        }
        while c.len() < 10 {
            c.push(Gate::Rx(0, 0.3)).unwrap();
        }
        let f = c.fold_global(1.2).unwrap();
        assert_eq!(f.len(), 12);
        let a = mat_vec(&circuit_matrix(&c), &zero_state(3));
        let b = mat_vec(&circuit_matrix(&f), &zero_state(3));
        let overlap: num_complex::Complex64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tableau_matches_dense_conjugation() {
        for seed in 0..10 {
            let mut c = random_clifford_circuit(3, 6, &mut rng(seed)).unwrap();
            c.push(Gate::Rx(1, FRAC_PI_2)).unwrap();
            c.push(Gate::Ry(2, -FRAC_PI_2)).unwrap();
            c.push(Gate::Rz(0, 3.0 * FRAC_PI_2)).unwrap();
            c.push(Gate::Ry(0, FRAC_PI_2)).unwrap();
            c.push(Gate::Rx(2, std::f64::consts::PI)).unwrap();
            let t = c.tableau().unwrap();
            let u = circuit_matrix(&c);
            let ud = adjoint(&u);
            for x in 0..8u64 {
                for z in 0..8u64 {
                    let p = PauliString::from_bits(3, x, z, 0).unwrap();
                    let want = mat_mul(&mat_mul(&u, &dense_pauli(&p)), &ud);
                    assert!(mat_close(&want, &dense_pauli(&t.conjugate(&p).unwrap()), 1e-10), "seed {seed} {p}");
                }
            }
        }
    }

    #[test]
    fn controlled_pauli_lowering_matches_dense() {
        let pauli: PauliString = "-XYZ".parse().unwrap();
        let c = Circuit::from_gates(3, 1, [Gate::ControlledPauli { control: 3, pauli }]).unwrap();
        let want = circuit_matrix(&c);
        let mut lowered = eye(16);
        for op in c.lower() {
            if let Primitive::Clifford(g) = op.prim {
                let t = CliffordTableau::from_gates(4, &[g]).unwrap();
                // rebuild each primitive densely from its own definition
                let m = match g {
                    CliffordGate::Cx(a, b) => controlled(4, a, b, one_qubit("X", 0.0)),
                    CliffordGate::Cy(a, b) => controlled(4, a, b, one_qubit("Y", 0.0)),
                    CliffordGate::Cz(a, b) => controlled(4, a, b, one_qubit("Z", 0.0)),
                    CliffordGate::Z(q) => embed_one(4, q, one_qubit("Z", 0.0)),
                    other => panic!("unexpected {other:?}"),
                };
                assert!(t.is_valid());
                lowered = mat_mul(&m, &lowered);
            }
        }
        assert!(mat_close(&lowered, &want, 1e-12));
        assert_eq!(c.lower().iter().filter(|op| op.noise_support.len() == 2).count(), 3);
    }

    #[test]
    fn text_format_round_trip() {
        let mut c = non_clifford_circuit(5, 3, 4).widened(2).unwrap();
        c.push(Gate::ControlledPauli { control: 3, pauli: "-ZIX".parse().unwrap() }).unwrap();
        c.push(Gate::MeasureZ(3)).unwrap();
        c.push(Gate::Reset(4)).unwrap();
        c.meta.seed = Some(12345);
        c.meta.notes.push("layer 1: R=ZII, L=ZIX".into());
        let text = c.to_text();
        let back: Circuit = text.parse().unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn parser_rejects_garbage() {
        assert!("qubits=2\nCX 0 5\n".parse::<Circuit>().is_err());
        assert!("qubits=2\nFOO 0\n".parse::<Circuit>().is_err());
        assert!("ancillas=1\n".parse::<Circuit>().is_err());
        assert!("qubits=2\nRZ 0 nan\n".parse::<Circuit>().is_err());
        assert!("qubits=2\nCX 1 1\n".parse::<Circuit>().is_err());
    }

    proptest! {
        #[test]
        fn random_text_round_trip(seed in any::<u64>(), n in 1usize..6, depth in 1usize..12) {
            let mut r = rng(seed);
            let mut c = random_clifford_circuit(n, depth, &mut r).unwrap();
            c.push(Gate::Rz(0, r.random_range(-10.0..10.0))).unwrap();
            c.meta.seed = Some(seed);
            let text = c.to_text();
            let back: Circuit = text.parse().unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_text(), text);
        }

        #[test]
        fn fold_preserves_action(seed in any::<u64>(), scale in 1.0f64..6.0) {
            let c = non_clifford_circuit(seed, 2, 3);
            let f = c.fold_global(scale).unwrap();
            let g = c.len();
            let k = ((scale - 1.0) / 2.0).floor();
            let r = (((scale - 1.0 - 2.0 * k) * g as f64) / 2.0).round_ties_even() as usize;
            prop_assert_eq!(f.len(), g * (1 + 2 * k as usize) + 2 * r);
            prop_assert!(mat_close_phase(&circuit_matrix(&f), &circuit_matrix(&c), 1e-9));
        }
    }
}

//! Clifford tableaux: the images of every `X_i` and `Z_i` under conjugation.
//!
//! A tableau represents `U` through `U X_i U^dag` and `U Z_i U^dag`. The
//! primitive gates in [`CliffordGate`] are the building blocks used by the
//! circuit IR, the Pauli-frame simulator and the random Clifford sampler.

use std::sync::LazyLock;

use rand::Rng;

use crate::error::{Error, Result};
use crate::pauli::{mask, PauliString, MAX_PAULI_QUBITS};

/// Primitive Clifford gates with fixed conjugation tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Cx(usize, usize),
    Cy(usize, usize),
    Cz(usize, usize),
    Swap(usize, usize),
}

/// Conjugation table on 1 or 2 local qubits. Entry `code = x | z << k`
/// gives `(x', z', dphase)` with `G sigma(x,z) G^dag = i^dphase sigma(x',z')`.
#[derive(Debug, Clone)]
struct LocalTable {
    k: usize,
    entries: [(u8, u8, u8); 16],
}

/// Images of local generators `[X_0, Z_0, X_1, Z_1]` as `(x, z, phase)`.
fn build_table(k: usize, images: &[(u64, u64, u8)]) -> LocalTable {
    let mut entries = [(0u8, 0u8, 0u8); 16];
    for code in 0..(1usize << (2 * k)) {
        let lx = (code & ((1 << k) - 1)) as u64;
        let lz = (code >> k) as u64;
        // sigma(x,z) = i^{#Y} prod_j X_j^x Z_j^z
        let mut acc = PauliString::from_bits_unchecked(k, 0, 0, 0);
        for j in 0..k {
            if lx >> j & 1 == 1 {
                let (x, z, ph) = images[2 * j];
                acc = acc.mul_unchecked(&PauliString::from_bits_unchecked(k, x, z, ph));
            }
            if lz >> j & 1 == 1 {
                let (x, z, ph) = images[2 * j + 1];
                acc = acc.mul_unchecked(&PauliString::from_bits_unchecked(k, x, z, ph));
            }
        }
        let dphase = ((lx & lz).count_ones() as u8 + acc.phase()) & 3;
        entries[code] = (acc.x_bits() as u8, acc.z_bits() as u8, dphase);
    }
    LocalTable { k, entries }
}

// local qubit 0 = first operand (control), 1 = second (target)
static TABLES: LazyLock<[LocalTable; 10]> = LazyLock::new(|| {
    const X0: u64 = 1;
    const X1: u64 = 2;
    [
        // H
        build_table(1, &[(0, 1, 0), (1, 0, 0)]),
        // S: X -> Y
        build_table(1, &[(1, 1, 0), (0, 1, 0)]),
        // Sdg: X -> -Y
        build_table(1, &[(1, 1, 2), (0, 1, 0)]),
        // X: Z -> -Z
        build_table(1, &[(1, 0, 0), (0, 1, 2)]),
        // Y: X -> -X, Z -> -Z
        build_table(1, &[(1, 0, 2), (0, 1, 2)]),
        // Z: X -> -X
        build_table(1, &[(1, 0, 2), (0, 1, 0)]),
        // CX: Xc -> XcXt, Zc -> Zc, Xt -> Xt, Zt -> ZcZt
        build_table(2, &[(X0 | X1, 0, 0), (0, X0, 0), (X1, 0, 0), (0, X0 | X1, 0)]),
        // CY: Xc -> Xc Yt, Zc -> Zc, Xt -> Zc Xt, Zt -> Zc Zt
        build_table(2, &[(X0 | X1, X1, 0), (0, X0, 0), (X1, X0, 0), (0, X0 | X1, 0)]),
        // CZ: Xa -> Xa Zb, Xb -> Za Xb
        build_table(2, &[(X0, X1, 0), (0, X0, 0), (X1, X0, 0), (0, X1, 0)]),
        // SWAP
        build_table(2, &[(X1, 0, 0), (0, X1, 0), (X0, 0, 0), (0, X0, 0)]),
    ]
});

impl CliffordGate {
    fn table(&self) -> &'static LocalTable {
        let idx = match self {
            CliffordGate::H(_) => 0,
            CliffordGate::S(_) => 1,
            CliffordGate::Sdg(_) => 2,
            CliffordGate::X(_) => 3,
            CliffordGate::Y(_) => 4,
            CliffordGate::Z(_) => 5,
            CliffordGate::Cx(..) => 6,
            CliffordGate::Cy(..) => 7,
            CliffordGate::Cz(..) => 8,
            CliffordGate::Swap(..) => 9,
        };
        &TABLES[idx]
    }

    /// Operand qubits; the second entry is meaningful only for two-qubit gates.
    pub fn qubits(&self) -> ([usize; 2], usize) {
        match *self {
            CliffordGate::H(q)
            | CliffordGate::S(q)
            | CliffordGate::Sdg(q)
            | CliffordGate::X(q)
            | CliffordGate::Y(q)
            | CliffordGate::Z(q) => ([q, q], 1),
            CliffordGate::Cx(a, b)
            | CliffordGate::Cy(a, b)
            | CliffordGate::Cz(a, b)
            | CliffordGate::Swap(a, b) => ([a, b], 2),
        }
    }

    pub fn max_qubit(&self) -> usize {
        let (q, k) = self.qubits();
        q[..k].iter().copied().max().unwrap_or(0)
    }

    pub fn inverse(&self) -> CliffordGate {
        match *self {
            CliffordGate::S(q) => CliffordGate::Sdg(q),
            CliffordGate::Sdg(q) => CliffordGate::S(q),
            g => g,
        }
    }

    /// `p <- G p G^dag`.
    #[inline]
    pub fn conjugate_in_place(&self, p: &mut PauliString) {
        let (x, z, dphase) = self.conjugate_bits(p.x_bits(), p.z_bits());
        *p = PauliString::from_bits_unchecked(p.num_qubits(), x, z, p.phase() + dphase);
    }

    /// Conjugates raw masks; returns new masks and the phase increment.
    #[inline]
    pub fn conjugate_bits(&self, x: u64, z: u64) -> (u64, u64, u8) {
        let table = self.table();
        let (q, k) = self.qubits();
        let mut code = 0usize;
        for (j, &qq) in q[..k].iter().enumerate() {
            code |= ((x >> qq & 1) as usize) << j;
            code |= ((z >> qq & 1) as usize) << (j + k);
        }
        let (rx, rz, dphase) = table.entries[code];
        let mut nx = x;
        let mut nz = z;
        for (j, &qq) in q[..k].iter().enumerate() {
            nx = (nx & !(1 << qq)) | (((rx >> j) & 1) as u64) << qq;
            nz = (nz & !(1 << qq)) | (((rz >> j) & 1) as u64) << qq;
        }
        debug_assert_eq!(table.k, k);
        (nx, nz, dphase)
    }
}

/// Conjugation action of a Clifford unitary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CliffordTableau {
    n: usize,
    // [U X_0 U^dag, U Z_0 U^dag, U X_1 U^dag, ...]
    images: Vec<PauliString>,
}

impl CliffordTableau {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_PAULI_QUBITS);
        let mut images = Vec::with_capacity(2 * n);
        for q in 0..n {
            images.push(PauliString::from_bits_unchecked(n, 1 << q, 0, 0));
            images.push(PauliString::from_bits_unchecked(n, 0, 1 << q, 0));
        }
        CliffordTableau { n, images }
    }

    /// Builds a tableau from generator images, rejecting anything that is not
    /// a valid Clifford action.
    pub fn from_images(images_x: Vec<PauliString>, images_z: Vec<PauliString>) -> Result<Self> {
        let n = images_x.len();
        if images_z.len() != n {
            return Err(Error::Dimension { expected: n, found: images_z.len() });
        }
        let mut images = Vec::with_capacity(2 * n);
        for (x, z) in images_x.into_iter().zip(images_z) {
            if x.num_qubits() != n {
                return Err(Error::Dimension { expected: n, found: x.num_qubits() });
            }
            if z.num_qubits() != n {
                return Err(Error::Dimension { expected: n, found: z.num_qubits() });
            }
            images.push(x);
            images.push(z);
        }
        let t = CliffordTableau { n, images };
        if !t.is_valid() {
            return Err(Error::arg("images do not preserve the Pauli commutation relations"));
        }
        Ok(t)
    }

    pub fn from_gates<'a>(n: usize, gates: impl IntoIterator<Item = &'a CliffordGate>) -> Result<Self> {
        let mut t = CliffordTableau::identity(n);
        for g in gates {
            t.apply_gate(g)?;
        }
        Ok(t)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn image_x(&self, q: usize) -> &PauliString {
        &self.images[2 * q]
    }

    pub fn image_z(&self, q: usize) -> &PauliString {
        &self.images[2 * q + 1]
    }

    /// Appends `g` after the unitary represented so far.
    pub fn apply_gate(&mut self, g: &CliffordGate) -> Result<()> {
        if g.max_qubit() >= self.n {
            return Err(Error::arg(format!("{g:?} out of range for {} qubits", self.n)));
        }
        for img in &mut self.images {
            g.conjugate_in_place(img);
        }
        Ok(())
    }

    /// `U p U^dag`.
    pub fn conjugate(&self, p: &PauliString) -> Result<PauliString> {
        if p.num_qubits() != self.n {
            return Err(Error::Dimension { expected: self.n, found: p.num_qubits() });
        }
        Ok(self.conjugate_unchecked(p))
    }

    pub(crate) fn conjugate_unchecked(&self, p: &PauliString) -> PauliString {
        let (x, z) = (p.x_bits(), p.z_bits());
        let ny = (x & z).count_ones() as u8;
        let mut acc = PauliString::from_bits_unchecked(self.n, 0, 0, p.phase() + ny);
        let mut support = x | z;
        while support != 0 {
            let q = support.trailing_zeros() as usize;
            support &= support - 1;
            if x >> q & 1 == 1 {
                acc = acc.mul_unchecked(&self.images[2 * q]);
            }
            if z >> q & 1 == 1 {
                acc = acc.mul_unchecked(&self.images[2 * q + 1]);
            }
        }
        acc
    }

    /// Tableau of "apply `self`, then `after`".
    pub fn then(&self, after: &CliffordTableau) -> Result<CliffordTableau> {
        if after.n != self.n {
            return Err(Error::Dimension { expected: self.n, found: after.n });
        }
        Ok(CliffordTableau {
            n: self.n,
            images: self.images.iter().map(|img| after.conjugate_unchecked(img)).collect(),
        })
    }

    pub fn inverse(&self) -> CliffordTableau {
        let n = self.n;
        // unsigned inverse from symplectic duality, then fix signs by applying self
        let mut images = Vec::with_capacity(2 * n);
        for j in 0..n {
            let (mut vx_x, mut vx_z, mut vz_x, mut vz_z) = (0u64, 0u64, 0u64, 0u64);
            for i in 0..n {
                let ux = &self.images[2 * i];
                let uz = &self.images[2 * i + 1];
                // coefficient of X_i in V(X_j) is omega(X_j, U Z_i) = z-bit j of U Z_i
                vx_x |= (uz.z_bits() >> j & 1) << i;
                vx_z |= (ux.z_bits() >> j & 1) << i;
                vz_x |= (uz.x_bits() >> j & 1) << i;
                vz_z |= (ux.x_bits() >> j & 1) << i;
            }
            images.push(PauliString::from_bits_unchecked(n, vx_x, vx_z, 0));
            images.push(PauliString::from_bits_unchecked(n, vz_x, vz_z, 0));
        }
        for (idx, img) in images.iter_mut().enumerate() {
            let back = self.conjugate_unchecked(img);
            debug_assert_eq!(back.unsigned(), CliffordTableau::identity(n).images[idx]);
            if back.phase() == 2 {
                *img = img.negate();
            }
        }
        CliffordTableau { n, images }
    }

    /// Symplectic and Hermiticity invariants.
    pub fn is_valid(&self) -> bool {
        let n = self.n;
        if self.images.len() != 2 * n {
            return false;
        }
        for (a, pa) in self.images.iter().enumerate() {
            if pa.num_qubits() != n || !pa.is_hermitian() || pa.is_identity() {
                return false;
            }
            for (b, pb) in self.images.iter().enumerate().skip(a + 1) {
                let should_anticommute = a / 2 == b / 2;
                if pa.commutes_unchecked(pb) == should_anticommute {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_identity(&self) -> bool {
        *self == CliffordTableau::identity(self.n)
    }

    /// Compact hex identifier, stable across runs.
    pub fn id(&self) -> String {
        let mut s = String::with_capacity(self.images.len() * 34);
        for img in &self.images {
            let sign = if img.phase() == 2 { '-' } else { '+' };
            s.push(sign);
            s.push_str(&format!("{:x}.{:x}", img.x_bits(), img.z_bits()));
        }
        s
    }

    /// `|<b| U |0^n>|^2` by Gaussian elimination on the stabilizers `U Z_i U^dag`.
    pub fn basis_probability(&self, b: u64) -> f64 {
        let n = self.n;
        let mut rows: Vec<PauliString> = (0..n).map(|i| self.images[2 * i + 1]).collect();
        let mut rank = 0;
        for q in 0..n {
            let Some(piv) = (rank..n).find(|&r| rows[r].x_bits() >> q & 1 == 1) else {
                continue;
            };
            rows.swap(rank, piv);
            let pivot = rows[rank];
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.x_bits() >> q & 1 == 1 {
                    *row = row.mul_unchecked(&pivot);
                }
            }
            rank += 1;
        }
        for row in &rows[rank..] {
            debug_assert_eq!(row.x_bits(), 0);
            let negative = row.phase() == 2;
            let odd = (row.z_bits() & b).count_ones() % 2 == 1;
            // the signed Z-string must evaluate to +1 on |b>
            if negative != odd {
                return 0.0;
            }
        }
        (0.5f64).powi(rank as i32)
    }
}

/// Support of `U|0^n>` in the computational basis: an affine subspace over
/// GF(2), stored as free columns plus one parity constraint per pivot column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZBasisOutcomes {
    free: u64,
    /// (pivot bit, remaining columns of the constraint, required parity)
    constraints: Vec<(u64, u64, bool)>,
}

impl ZBasisOutcomes {
    pub fn dimension(&self) -> u32 {
        self.free.count_ones()
    }

    /// Uniform outcome from a uniformly random word.
    #[inline]
    pub fn sample(&self, random: u64) -> u64 {
        let mut b = random & self.free;
        for &(pivot, rest, parity) in &self.constraints {
            if ((rest & b).count_ones() % 2 == 1) != parity {
                b |= pivot;
            }
        }
        b
    }

    pub fn contains(&self, b: u64) -> bool {
        self.constraints
            .iter()
            .all(|&(pivot, rest, parity)| (((rest | pivot) & b).count_ones() % 2 == 1) == parity)
    }
}

impl CliffordTableau {
    /// Outcome space of measuring every qubit of `U|0^n>` in Z.
    pub fn z_basis_outcomes(&self) -> ZBasisOutcomes {
        let n = self.n;
        let mut rows: Vec<PauliString> = (0..n).map(|i| self.images[2 * i + 1]).collect();
        let mut rank = 0;
        for q in 0..n {
            let Some(piv) = (rank..n).find(|&r| rows[r].x_bits() >> q & 1 == 1) else {
                continue;
            };
            rows.swap(rank, piv);
            let pivot = rows[rank];
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.x_bits() >> q & 1 == 1 {
                    *row = row.mul_unchecked(&pivot);
                }
            }
            rank += 1;
        }
        // reduced row echelon form of the diagonal stabilizers
        let mut diag: Vec<PauliString> = rows[rank..].to_vec();
        let mut pivots = Vec::new();
        let mut r = 0;
        for q in 0..n {
            let Some(piv) = (r..diag.len()).find(|&i| diag[i].z_bits() >> q & 1 == 1) else {
                continue;
            };
            diag.swap(r, piv);
            let pivot = diag[r];
            for (i, row) in diag.iter_mut().enumerate() {
                if i != r && row.z_bits() >> q & 1 == 1 {
                    *row = row.mul_unchecked(&pivot);
                }
            }
            pivots.push(q);
            r += 1;
        }
        let pivot_mask: u64 = pivots.iter().map(|&q| 1u64 << q).sum();
        let constraints = diag
            .iter()
            .zip(&pivots)
            .map(|(row, &q)| (1u64 << q, row.z_bits() & !(1u64 << q), row.phase() == 2))
            .collect();
        ZBasisOutcomes { free: mask(n) & !pivot_mask, constraints }
    }
}

/// Gate sequence of a uniformly random Clifford on `n` qubits.
///
/// Each step draws an anticommuting pair `(P, Q)` uniformly on the remaining
/// qubits, records the sweep that maps it to `(X_k, Z_k)`, and the sampled
/// unitary is the product of the inverted sweeps preceded by a uniformly
/// random Pauli layer (which randomizes all generator signs).
pub fn random_clifford_gates<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<CliffordGate>> {
    if n == 0 {
        return Err(Error::arg("random Clifford needs at least one qubit"));
    }
    if n > MAX_PAULI_QUBITS {
        return Err(Error::QubitLimit { qubits: n, cap: MAX_PAULI_QUBITS });
    }
    let mut sweeps: Vec<Vec<CliffordGate>> = Vec::with_capacity(n);
    for k in 0..n {
        let range = mask(n) & !mask(k);
        let mut p = loop {
            let x: u64 = rng.random::<u64>() & range;
            let z: u64 = rng.random::<u64>() & range;
            if x | z != 0 {
                break PauliString::from_bits_unchecked(n, x, z, 0);
            }
        };
        let mut q = PauliString::from_bits_unchecked(n, rng.random::<u64>() & range, rng.random::<u64>() & range, 0);
        if q.commutes_unchecked(&p) {
            // multiplication by a fixed anticommuting partner is a bijection
            // from the commuting half onto the anticommuting half
            let j = p.support().trailing_zeros() as usize;
            let partner = if p.x_bits() >> j & 1 == 1 {
                PauliString::from_bits_unchecked(n, 0, 1 << j, 0)
            } else {
                PauliString::from_bits_unchecked(n, 1 << j, 0, 0)
            };
            q = q.mul_unchecked(&partner).unsigned();
        }
        let mut gates = Vec::new();
        sweep_pair(&mut p, &mut q, k, n, &mut gates);
        sweeps.push(gates);
    }
    let mut out = Vec::new();
    for qb in 0..n {
        match rng.random_range(0..4u8) {
            1 => out.push(CliffordGate::X(qb)),
            2 => out.push(CliffordGate::Y(qb)),
            3 => out.push(CliffordGate::Z(qb)),
            _ => {}
        }
    }
    for sweep in sweeps.iter().rev() {
        out.extend(sweep.iter().rev().map(CliffordGate::inverse));
    }
    Ok(out)
}

/// Uniformly random element of the Clifford group (modulo global phase).
pub fn random_clifford<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CliffordTableau> {
    let gates = random_clifford_gates(n, rng)?;
    CliffordTableau::from_gates(n, &gates)
}

fn sweep_pair(p: &mut PauliString, q: &mut PauliString, k: usize, n: usize, gates: &mut Vec<CliffordGate>) {
    let mut apply = |g: CliffordGate, p: &mut PauliString, q: &mut PauliString| {
        g.conjugate_in_place(p);
        g.conjugate_in_place(q);
        gates.push(g);
    };
    // P -> X-type
    for j in k..n {
        if p.z_bits() >> j & 1 == 1 {
            let g = if p.x_bits() >> j & 1 == 1 { CliffordGate::S(j) } else { CliffordGate::H(j) };
            apply(g, p, q);
        }
    }
    let xs: Vec<usize> = (k..n).filter(|&j| p.x_bits() >> j & 1 == 1).collect();
    let pivot = xs[0];
    for &j in &xs[1..] {
        apply(CliffordGate::Cx(pivot, j), p, q);
    }
    if pivot != k {
        apply(CliffordGate::Swap(pivot, k), p, q);
    }
    if !(q.x_bits() == 0 && q.z_bits() == 1 << k) {
        apply(CliffordGate::H(k), p, q);
        for j in k..n {
            if q.z_bits() >> j & 1 == 1 {
                let g = if q.x_bits() >> j & 1 == 1 { CliffordGate::S(j) } else { CliffordGate::H(j) };
                apply(g, p, q);
            }
        }
        for j in (k + 1)..n {
            if q.x_bits() >> j & 1 == 1 {
                apply(CliffordGate::Cx(k, j), p, q);
            }
        }
        apply(CliffordGate::H(k), p, q);
    }
    debug_assert_eq!((p.x_bits(), p.z_bits()), (1 << k, 0));
    debug_assert_eq!((q.x_bits(), q.z_bits()), (0, 1 << k));
}

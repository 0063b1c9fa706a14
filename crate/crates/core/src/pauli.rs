//! Signed Pauli strings in symplectic form.
//!
//! A string on `n` qubits is stored as two bit masks plus a quaternary phase:
//! the operator is `i^phase * P_0 (x) P_1 (x) ... (x) P_{n-1}` where qubit `j`
//! carries `X` if only `x` bit `j` is set, `Z` if only `z` bit `j` is set, and
//! the Hermitian `Y` if both are. With this convention `X * Z = -iY`.
//!
//! Textual form: an optional sign prefix (`+`, `-`, `+i`, `-i`) followed by one
//! letter per qubit, qubit 0 leftmost, e.g. `-iXYZI`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Widest string representable by the bit-mask layout.
pub const MAX_PAULI_QUBITS: usize = 64;

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[inline]
pub(crate) fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// `i^phase` times a tensor product of single-qubit Paulis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_PAULI_QUBITS, "at most {MAX_PAULI_QUBITS} qubits");
        PauliString { n, x: 0, z: 0, phase: 0 }
    }

    /// Builds a string from raw masks. Bits above `n` are rejected.
    pub fn from_bits(n: usize, x: u64, z: u64, phase: u8) -> Result<Self> {
        if n > MAX_PAULI_QUBITS {
            return Err(Error::QubitLimit { qubits: n, cap: MAX_PAULI_QUBITS });
        }
        if (x | z) & !mask(n) != 0 {
            return Err(Error::arg(format!("mask bits beyond qubit count {n}")));
        }
        Ok(PauliString { n, x, z, phase: phase & 3 })
    }

    pub(crate) fn from_bits_unchecked(n: usize, x: u64, z: u64, phase: u8) -> Self {
        debug_assert!((x | z) & !mask(n) == 0);
        PauliString { n, x, z, phase: phase & 3 }
    }

    /// `P` on qubit `q`, identity elsewhere.
    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        assert!(q < n, "qubit {q} out of range for {n} qubits");
        let (x, z) = p.bits();
        PauliString {
            n,
            x: (x as u64) << q,
            z: (z as u64) << q,
            phase: 0,
        }
    }

    pub fn from_paulis(paulis: &[Pauli]) -> Self {
        let mut s = PauliString::identity(paulis.len());
        for (q, p) in paulis.iter().enumerate() {
            s.set(q, *p);
        }
        s
    }

    /// Product of `Z` on every qubit in `qubits`.
    pub fn z_on(n: usize, qubits: impl IntoIterator<Item = usize>) -> Self {
        let mut s = PauliString::identity(n);
        for q in qubits {
            s.set(q, Pauli::Z);
        }
        s
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    /// Exponent `k` of the `i^k` prefactor.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        assert!(q < self.n);
        let (x, z) = p.bits();
        self.x = (self.x & !(1 << q)) | ((x as u64) << q);
        self.z = (self.z & !(1 << q)) | ((z as u64) << q);
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase & 3;
        self
    }

    pub fn negate(mut self) -> Self {
        self.phase = (self.phase + 2) & 3;
        self
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// True for `+/-` signed strings, i.e. Hermitian operators.
    pub fn is_hermitian(&self) -> bool {
        self.phase & 1 == 0
    }

    /// True if no qubit carries `X` or `Y`.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    /// `+1` or `-1` for Hermitian strings.
    pub fn sign(&self) -> Option<i32> {
        match self.phase {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    /// Same Pauli letters, phase dropped.
    pub fn unsigned(mut self) -> Self {
        self.phase = 0;
        self
    }

    fn check_dim(&self, other: &PauliString) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension { expected: self.n, found: other.n });
        }
        Ok(())
    }

    /// Signed product `self * other`.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        self.check_dim(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &PauliString) -> PauliString {
        let phase = self.phase as u32 + other.phase as u32 + product_phase(self.x, self.z, other.x, other.z);
        PauliString {
            n: self.n,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            phase: (phase & 3) as u8,
        }
    }

    /// Symplectic inner product test.
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_dim(other)?;
        Ok(self.commutes_unchecked(other))
    }

    pub(crate) fn commutes_unchecked(&self, other: &PauliString) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones().is_multiple_of(2)
    }

    /// Places this string on a wider register at qubits `offset..offset + n`.
    pub fn embed(&self, total: usize, offset: usize) -> Result<PauliString> {
        if offset + self.n > total {
            return Err(Error::Dimension { expected: total, found: offset + self.n });
        }
        PauliString::from_bits(total, self.x << offset, self.z << offset, self.phase)
    }

    /// Restriction to the first `n` qubits; fails if support lies beyond.
    pub fn truncate(&self, n: usize) -> Result<PauliString> {
        if self.support() & !mask(n) != 0 {
            return Err(Error::arg(format!("{self} has support beyond qubit {n}")));
        }
        Ok(PauliString { n, ..*self })
    }
}

/// Exponent of `i` picked up by `sigma(x1,z1) * sigma(x2,z2)` summed over qubits.
#[inline]
pub(crate) fn product_phase(x1: u64, z1: u64, x2: u64, z2: u64) -> u32 {
    let (px, py, pz) = (x1 & !z1, x1 & z1, !x1 & z1);
    let (qx, qy, qz) = (x2 & !z2, x2 & z2, !x2 & z2);
    // XY = iZ, YZ = iX, ZX = iY; the reversed orders give -i
    let plus = ((px & qy) | (py & qz) | (pz & qx)).count_ones();
    let minus = ((px & qz) | (py & qx) | (pz & qy)).count_ones();
    (plus + 3 * minus) & 3
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            0 => "",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        for q in 0..self.n {
            write!(f, "{}", self.get(q).letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, body) = if let Some(rest) = s.strip_prefix("+i") {
            (1, rest)
        } else if let Some(rest) = s.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (0, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (2, rest)
        } else {
            (0, s)
        };
        if body.is_empty() {
            return Err(Error::arg(format!("empty Pauli literal '{s}'")));
        }
        let n = body.chars().count();
        if n > MAX_PAULI_QUBITS {
            return Err(Error::QubitLimit { qubits: n, cap: MAX_PAULI_QUBITS });
        }
        let mut out = PauliString::identity(n);
        for (q, c) in body.chars().enumerate() {
            let p = match c {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => return Err(Error::arg(format!("bad Pauli letter '{other}' in '{s}'"))),
            };
            out.set(q, p);
        }
        Ok(out.with_phase(phase))
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_oracle::{dense_pauli, mat_mul, mat_close, scale};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn x_times_x_is_identity() {
        let r = p("X").multiply(&p("X")).unwrap();
        assert!(r.is_identity());
        assert_eq!(r.phase(), 0);
    }

    #[test]
    fn z_times_x_is_i_y() {
        let r = p("Z").multiply(&p("X")).unwrap();
        assert_eq!(r, p("+iY"));
        let lhs = mat_mul(&dense_pauli(&p("Z")), &dense_pauli(&p("X")));
        assert!(mat_close(&lhs, &dense_pauli(&r), 1e-12));
        // the convention itself
        assert_eq!(p("X").multiply(&p("Z")).unwrap(), p("-iY"));
    }

    #[test]
    fn two_qubit_product_matches_dense() {
        let a = p("XZ");
        let b = p("ZZ");
        let r = a.multiply(&b).unwrap();
        assert_eq!(r, p("-iYI"));
        let lhs = mat_mul(&dense_pauli(&a), &dense_pauli(&b));
        assert!(mat_close(&lhs, &dense_pauli(&r), 1e-12));
    }

    #[test]
    fn commutation_examples() {
        assert!(!p("X").commutes(&p("Z")).unwrap());
        assert!(p("XX").commutes(&p("ZZ")).unwrap());
        assert!(matches!(p("X").commutes(&p("XX")), Err(Error::Dimension { .. })));
        assert!(p("X").multiply(&p("XX")).is_err());
    }

    #[test]
    fn literal_round_trip() {
        for s in ["-iXYZI", "+iZ", "-XX", "IIII", "Y"] {
            assert_eq!(p(s).to_string(), s);
        }
        assert_eq!(p("+XZ").to_string(), "XZ");
        assert!("XQ".parse::<PauliString>().is_err());
        assert!("-".parse::<PauliString>().is_err());
    }

    fn all_paulis(n: usize) -> Vec<PauliString> {
        let mut out = Vec::new();
        for x in 0..(1u64 << n) {
            for z in 0..(1u64 << n) {
                out.push(PauliString::from_bits(n, x, z, 0).unwrap());
            }
        }
        out
    }

    #[test]
    fn exhaustive_two_qubit_products_and_commutators() {
        let all = all_paulis(2);
        for a in &all {
            for b in &all {
                let ab = a.multiply(b).unwrap();
                let da = dense_pauli(a);
                let db = dense_pauli(b);
                let prod = mat_mul(&da, &db);
                assert!(mat_close(&prod, &dense_pauli(&ab), 1e-12), "{a} * {b}");
                let rev = mat_mul(&db, &da);
                let commute_dense = mat_close(&prod, &rev, 1e-12);
                assert_eq!(a.commutes(b).unwrap(), commute_dense, "{a} {b}");
            }
        }
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliString> {
        (0..(1u64 << n), 0..(1u64 << n), 0u8..4)
            .prop_map(move |(x, z, ph)| PauliString::from_bits(n, x, z, ph).unwrap())
    }

    proptest! {
        #[test]
        fn commutes_matches_dense_commutator(a in arb_pauli(4), b in arb_pauli(4)) {
            let da = dense_pauli(&a);
            let db = dense_pauli(&b);
            let commute_dense = mat_close(&mat_mul(&da, &db), &mat_mul(&db, &da), 1e-12);
            prop_assert_eq!(a.commutes(&b).unwrap(), commute_dense);
        }

        #[test]
        fn six_qubit_commutation(a in arb_pauli(6), b in arb_pauli(6)) {
            let da = dense_pauli(&a);
            let db = dense_pauli(&b);
            let commute_dense = mat_close(&mat_mul(&da, &db), &mat_mul(&db, &da), 1e-12);
            prop_assert_eq!(a.commutes(&b).unwrap(), commute_dense);
        }

        #[test]
        fn product_matches_dense(a in arb_pauli(3), b in arb_pauli(3)) {
            let ab = a.multiply(&b).unwrap();
            let prod = mat_mul(&dense_pauli(&a), &dense_pauli(&b));
            prop_assert!(mat_close(&prod, &dense_pauli(&ab), 1e-12));
        }

        #[test]
        fn phase_is_multiplicative(a in arb_pauli(5), b in arb_pauli(5), c in arb_pauli(5)) {
            let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
            let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn literal_parse_inverts_display(a in arb_pauli(7)) {
            prop_assert_eq!(a.to_string().parse::<PauliString>().unwrap(), a);
        }
    }

    #[test]
    fn hermitian_strings_square_to_identity() {
        for a in all_paulis(2) {
            let sq = a.multiply(&a).unwrap();
            assert!(sq.is_identity() && sq.phase() == 0);
            let d = dense_pauli(&a);
            let id = scale(&mat_mul(&d, &d), Complex64::new(1.0, 0.0));
            assert!(mat_close(&id, &dense_pauli(&PauliString::identity(2)), 1e-12));
        }
    }
}

//! Dense-matrix reference algebra for tests. Deliberately naive and written
//! without touching the simulator kernels: everything is explicit
//! `2^n x 2^n` matrices with qubit `j` at bit `j` of the basis index.

#![allow(dead_code)]

use num_complex::Complex64;

use crate::circuit::{Circuit, Gate};
use crate::pauli::{Pauli, PauliString};

pub type Mat = Vec<Vec<Complex64>>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn zeros(dim: usize) -> Mat {
    vec![vec![c(0.0, 0.0); dim]; dim]
}

pub fn eye(dim: usize) -> Mat {
    let mut m = zeros(dim);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = c(1.0, 0.0);
    }
    m
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut out = zeros(n);
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == c(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn adjoint(a: &Mat) -> Mat {
    let n = a.len();
    let mut out = zeros(n);
    for i in 0..n {
        for j in 0..n {
            out[j][i] = a[i][j].conj();
        }
    }
    out
}

pub fn scale(a: &Mat, s: Complex64) -> Mat {
    a.iter().map(|r| r.iter().map(|v| v * s).collect()).collect()
}

pub fn mat_close(a: &Mat, b: &Mat, tol: f64) -> bool {
    a.iter()
        .zip(b)
        .all(|(ra, rb)| ra.iter().zip(rb).all(|(x, y)| (x - y).norm() <= tol))
}

/// Equality up to a global phase.
pub fn mat_close_phase(a: &Mat, b: &Mat, tol: f64) -> bool {
    let n = a.len();
    let mut phase = None;
    'outer: for i in 0..n {
        for j in 0..n {
            if b[i][j].norm() > 1e-6 {
                phase = Some(a[i][j] / b[i][j]);
                break 'outer;
            }
        }
    }
    match phase {
        None => mat_close(a, b, tol),
        Some(ph) if (ph.norm() - 1.0).abs() < 1e-9 => mat_close(a, &scale(b, ph), tol),
        _ => false,
    }
}

pub fn mat_vec(a: &Mat, v: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn dense_pauli(p: &PauliString) -> Mat {
    let n = p.num_qubits();
    let dim = 1usize << n;
    let mut m = zeros(dim);
    let global = match p.phase() {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    };
    for col in 0..dim {
        let mut amp = global;
        let mut row = col;
        for q in 0..n {
            let bit = (col >> q) & 1;
            match p.get(q) {
                Pauli::I => {}
                Pauli::X => row ^= 1 << q,
                Pauli::Z => {
                    if bit == 1 {
                        amp = -amp;
                    }
                }
                Pauli::Y => {
                    row ^= 1 << q;
                    amp *= if bit == 0 { c(0.0, 1.0) } else { c(0.0, -1.0) };
                }
            }
        }
        m[row][col] = amp;
    }
    m
}

pub fn one_qubit(name: &str, theta: f64) -> [[Complex64; 2]; 2] {
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    match name {
        "H" => [[c(s2, 0.0), c(s2, 0.0)], [c(s2, 0.0), c(-s2, 0.0)]],
        "S" => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]],
        "SDG" => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, -1.0)]],
        "X" => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        "Y" => [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
        "Z" => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
        "I" => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
        "RX" => [[c(ch, 0.0), c(0.0, -sh)], [c(0.0, -sh), c(ch, 0.0)]],
        "RY" => [[c(ch, 0.0), c(-sh, 0.0)], [c(sh, 0.0), c(ch, 0.0)]],
        "RZ" => [[c(ch, -sh), c(0.0, 0.0)], [c(0.0, 0.0), c(ch, sh)]],
        other => panic!("unknown gate {other}"),
    }
}

pub fn embed_one(n: usize, q: usize, u: [[Complex64; 2]; 2]) -> Mat {
    let dim = 1usize << n;
    let mut m = zeros(dim);
    for row in 0..dim {
        for col in 0..dim {
            if (row ^ col) & !(1 << q) != 0 {
                continue;
            }
            m[row][col] = u[(row >> q) & 1][(col >> q) & 1];
        }
    }
    m
}

pub fn controlled(n: usize, control: usize, target: usize, u: [[Complex64; 2]; 2]) -> Mat {
    let dim = 1usize << n;
    let mut m = zeros(dim);
    for col in 0..dim {
        if (col >> control) & 1 == 0 {
            m[col][col] = c(1.0, 0.0);
        }
    }
    let inner = embed_one(n, target, u);
    for row in 0..dim {
        for col in 0..dim {
            if (row >> control) & 1 == 1 && (col >> control) & 1 == 1 {
                m[row][col] = inner[row][col];
            }
        }
    }
    m
}

pub fn swap(n: usize, a: usize, b: usize) -> Mat {
    let dim = 1usize << n;
    let mut m = zeros(dim);
    for col in 0..dim {
        let ba = (col >> a) & 1;
        let bb = (col >> b) & 1;
        let row = (col & !(1 << a) & !(1 << b)) | (bb << a) | (ba << b);
        m[row][col] = c(1.0, 0.0);
    }
    m
}

/// Full unitary of a gate on `n` qubits. Panics on non-unitary gates.
pub fn gate_matrix(g: &Gate, n: usize) -> Mat {
    match g {
        Gate::H(q) => embed_one(n, *q, one_qubit("H", 0.0)),
        Gate::S(q) => embed_one(n, *q, one_qubit("S", 0.0)),
        Gate::Sdg(q) => embed_one(n, *q, one_qubit("SDG", 0.0)),
        Gate::X(q) => embed_one(n, *q, one_qubit("X", 0.0)),
        Gate::Y(q) => embed_one(n, *q, one_qubit("Y", 0.0)),
        Gate::Z(q) => embed_one(n, *q, one_qubit("Z", 0.0)),
        Gate::Rx(q, t) => embed_one(n, *q, one_qubit("RX", *t)),
        Gate::Ry(q, t) => embed_one(n, *q, one_qubit("RY", *t)),
        Gate::Rz(q, t) => embed_one(n, *q, one_qubit("RZ", *t)),
        Gate::Cx(a, b) => controlled(n, *a, *b, one_qubit("X", 0.0)),
        Gate::Cz(a, b) => controlled(n, *a, *b, one_qubit("Z", 0.0)),
        Gate::Swap(a, b) => swap(n, *a, *b),
        Gate::ControlledPauli { control, pauli } => {
            // |0><0| (x) I + |1><1| (x) P, P embedded on the first qubits
            let wide = pauli.embed(n, 0).unwrap();
            let p = dense_pauli(&wide);
            let dim = 1usize << n;
            let mut m = zeros(dim);
            for row in 0..dim {
                for col in 0..dim {
                    let cb = (col >> control) & 1;
                    let rb = (row >> control) & 1;
                    if cb != rb {
                        continue;
                    }
                    if cb == 0 {
                        if row == col {
                            m[row][col] = c(1.0, 0.0);
                        }
                    } else {
                        m[row][col] = p[row][col];
                    }
                }
            }
            m
        }
        Gate::MeasureZ(_) | Gate::Reset(_) => panic!("not unitary"),
    }
}

pub fn circuit_matrix(circ: &Circuit) -> Mat {
    let n = circ.num_qubits();
    let mut u = eye(1 << n);
    for g in circ.gates() {
        u = mat_mul(&gate_matrix(g, n), &u);
    }
    u
}

pub fn zero_state(n: usize) -> Vec<Complex64> {
    let mut v = vec![c(0.0, 0.0); 1 << n];
    v[0] = c(1.0, 0.0);
    v
}

pub fn expectation(state: &[Complex64], op: &Mat) -> Complex64 {
    let w = mat_vec(op, state);
    state.iter().zip(&w).map(|(a, b)| a.conj() * b).sum()
}

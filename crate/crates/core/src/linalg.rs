//! Small complex linear-algebra helpers: 2×2 mode/qubit matrices and a
//! Schmidt-rank routine for sparse bipartite amplitudes.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

/// Row-major 2×2 complex matrix.
pub type Matrix2 = [[Complex64; 2]; 2];

/// Row-major 4×4 complex matrix acting on a pair of (logical) qubits,
/// basis order `|00⟩, |01⟩, |10⟩, |11⟩` with the first qubit most significant.
pub type Matrix4 = [[Complex64; 4]; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity() -> Matrix2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn pauli_x() -> Matrix2 {
    [[ZERO, ONE], [ONE, ZERO]]
}

pub fn pauli_z() -> Matrix2 {
    [[ONE, ZERO], [ZERO, -ONE]]
}

pub fn hadamard() -> Matrix2 {
    let h = c(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

/// Symmetric 50/50 beam splitter with the real (Hadamard-like) convention.
pub fn beam_splitter_50_50() -> Matrix2 {
    hadamard()
}

/// Phase shift `e^{iθ}` on the second mode.
pub fn phase_shift(theta: f64) -> Matrix2 {
    [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, theta)]]
}

/// Real rotation by `theta` (polarization rotator / wave plate at θ/2).
pub fn rotation(theta: f64) -> Matrix2 {
    let (s, co) = theta.sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}

pub fn matmul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn scale(a: &Matrix2, s: Complex64) -> Matrix2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

/// Frobenius norm of `U†U − I`.
pub fn unitarity_deviation(u: &Matrix2) -> f64 {
    let mut acc = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let mut s = ZERO;
            for k in 0..2 {
                s += u[k][i].conj() * u[k][j];
            }
            if i == j {
                s -= ONE;
            }
            acc += s.norm_sqr();
        }
    }
    acc.sqrt()
}

/// Logical CNOT with the first qubit as control.
pub fn cnot() -> Matrix4 {
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[1][1] = ONE;
    m[2][3] = ONE;
    m[3][2] = ONE;
    m
}

/// Rank of the coefficient matrix `M[row][col]` built from sparse entries,
/// i.e. the Schmidt rank of a pure bipartite state. Singular directions with
/// pivot magnitude below `tol` are treated as zero.
pub fn schmidt_rank<I>(entries: I, tol: f64) -> usize
where
    I: IntoIterator<Item = (u64, u64, Complex64)>,
{
    let mut rows: BTreeMap<u64, usize> = BTreeMap::new();
    let mut cols: BTreeMap<u64, usize> = BTreeMap::new();
    let mut triples = Vec::new();
    for (r, col, a) in entries {
        let nr = rows.len();
        let ri = *rows.entry(r).or_insert(nr);
        let nc = cols.len();
        let ci = *cols.entry(col).or_insert(nc);
        triples.push((ri, ci, a));
    }
    let (nr, nc) = (rows.len(), cols.len());
    if nr == 0 || nc == 0 {
        return 0;
    }
    let mut m = vec![vec![ZERO; nc]; nr];
    for (r, col, a) in triples {
        m[r][col] += a;
    }
    matrix_rank(m, tol)
}

/// Schmidt rank of a state on `n_qubits` qubits (qubit 0 is the most
/// significant bit of the index) across the cut `qubits | rest`.
pub fn cut_rank(amps: &BTreeMap<u64, Complex64>, n_qubits: usize, qubits: &[usize], tol: f64) -> usize {
    let mask: u64 = qubits.iter().map(|q| 1u64 << (n_qubits - 1 - q)).fold(0, |a, b| a | b);
    schmidt_rank(amps.iter().map(|(i, a)| (i & mask, i & !mask, *a)), tol)
}

fn matrix_rank(mut m: Vec<Vec<Complex64>>, tol: f64) -> usize {
    let nr = m.len();
    let nc = m[0].len();
    let mut rank = 0;
    for col in 0..nc {
        if rank == nr {
            break;
        }
        let (pivot, best) = (rank..nr)
            .map(|r| (r, m[r][col].norm()))
            .fold((rank, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            continue;
        }
        m.swap(rank, pivot);
        let p = m[rank][col];
        for r in (rank + 1)..nr {
            let f = m[r][col] / p;
            if f == ZERO {
                continue;
            }
            for k in col..nc {
                let sub = f * m[rank][k];
                m[r][k] -= sub;
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_gates_are_unitary() {
        for u in [identity(), pauli_x(), pauli_z(), hadamard(), phase_shift(0.3), rotation(1.1)] {
            assert!(unitarity_deviation(&u) < 1e-14);
        }
        let bad = [[ONE, ONE], [ZERO, ONE]];
        assert!(unitarity_deviation(&bad) > 0.5);
    }

    #[test]
    fn rank_of_product_and_bell() {
        let h = FRAC_1_SQRT_2;
        // |00⟩ + |11⟩
        assert_eq!(schmidt_rank([(0, 0, c(h, 0.0)), (1, 1, c(h, 0.0))], 1e-10), 2);
        // |+⟩|0⟩
        assert_eq!(schmidt_rank([(0, 0, c(h, 0.0)), (1, 0, c(h, 0.0))], 1e-10), 1);
        // (|0⟩+|1⟩)(|0⟩+|1⟩)/2
        let q = c(0.5, 0.0);
        assert_eq!(schmidt_rank([(0, 0, q), (0, 1, q), (1, 0, q), (1, 1, q)], 1e-10), 1);
    }
}

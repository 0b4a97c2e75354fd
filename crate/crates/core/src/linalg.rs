//! Dense complex linear algebra and a Pauli-structured sparse operator.
//!
//! Matrices are column-major `nalgebra` matrices; products go through
//! `matrixmultiply::zgemm`, which is several times faster than the generic
//! complex matmul for the 2^n sizes used here.

use std::collections::BTreeMap;

use matrixmultiply::CGemmOption;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::par;
use crate::pauli::{i_pow, index_masks, Letter, PauliOperator};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// How an operand enters a product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    /// As is.
    N,
    /// Conjugate transpose.
    H,
}

/// `c ← alpha·op(a)·op(b) + beta·c`.
pub fn gemm(alpha: Complex64, a: &CMatrix, ta: Op, b: &CMatrix, tb: Op, beta: Complex64, c: &mut CMatrix) {
    let (m, ka) = match ta {
        Op::N => (a.nrows(), a.ncols()),
        Op::H => (a.ncols(), a.nrows()),
    };
    let (kb, n) = match tb {
        Op::N => (b.nrows(), b.ncols()),
        Op::H => (b.ncols(), b.nrows()),
    };
    assert_eq!(ka, kb, "inner dimensions differ");
    assert_eq!((c.nrows(), c.ncols()), (m, n), "output shape");
    if m == 0 || n == 0 {
        return;
    }
    // Conjugate transposes use a conjugated copy read with swapped strides.
    let conj_a = (ta == Op::H).then(|| a.map(|z| z.conj()));
    let conj_b = (tb == Op::H).then(|| b.map(|z| z.conj()));
    let pa = conj_a.as_ref().unwrap_or(a);
    let pb = conj_b.as_ref().unwrap_or(b);
    let strides = |x: &CMatrix, t: Op| -> (isize, isize) {
        let ld = x.nrows() as isize;
        match t {
            Op::N => (1, ld),
            Op::H => (ld, 1),
        }
    };
    let (rsa, csa) = strides(pa, ta);
    let (rsb, csb) = strides(pb, tb);
    let rsc = 1;
    let csc = m as isize;
    // SAFETY: Complex64 is repr(C) with two f64 fields, matching [f64; 2];
    // the strides describe the column-major storage of each matrix and the
    // shapes were checked above.
    unsafe {
        matrixmultiply::zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            ka,
            n,
            [alpha.re, alpha.im],
            pa.as_ptr() as *const [f64; 2],
            rsa,
            csa,
            pb.as_ptr() as *const [f64; 2],
            rsb,
            csb,
            [beta.re, beta.im],
            c.as_mut_ptr() as *mut [f64; 2],
            rsc,
            csc,
        );
    }
}

fn product(a: &CMatrix, ta: Op, b: &CMatrix, tb: Op) -> CMatrix {
    let m = if ta == Op::N { a.nrows() } else { a.ncols() };
    let n = if tb == Op::N { b.ncols() } else { b.nrows() };
    let mut c = CMatrix::zeros(m, n);
    gemm(ONE, a, ta, b, tb, ZERO, &mut c);
    c
}

/// `a·b`
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    product(a, Op::N, b, Op::N)
}

/// `a†·b`
pub fn adjoint_mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    product(a, Op::H, b, Op::N)
}

/// `a·b†`
pub fn mul_adjoint(a: &CMatrix, b: &CMatrix) -> CMatrix {
    product(a, Op::N, b, Op::H)
}

/// `u†·m·u`
pub fn conjugate_by(u: &CMatrix, m: &CMatrix) -> CMatrix {
    adjoint_mul(u, &matmul(m, u))
}

/// `u·m·u†`
pub fn conjugate_by_adjoint(u: &CMatrix, m: &CMatrix) -> CMatrix {
    mul_adjoint(&matmul(u, m), u)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `‖U†U − I‖_max`
pub fn unitarity_error(u: &CMatrix) -> f64 {
    max_abs_diff(&adjoint_mul(u, u), &identity(u.nrows()))
}

/// `‖A − A†‖_max`
pub fn hermiticity_error(a: &CMatrix) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

/// `(A + A†)/2`
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `AB − BA`
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut c = matmul(a, b);
    gemm(-ONE, b, Op::N, a, Op::N, ONE, &mut c);
    c
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `Tr(A·B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// 2×2 Pauli matrix; `None` gives the identity.
pub fn pauli_matrix(letter: Option<Letter>) -> CMatrix {
    let z = ZERO;
    let o = ONE;
    match letter {
        None => CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        Some(Letter::X) => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        Some(Letter::Y) => CMatrix::from_row_slice(2, 2, &[z, -I, I, z]),
        Some(Letter::Z) => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues ascending and
/// eigenvectors as matching columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Multiplies a vector by a phase so its largest-magnitude component is real
/// and positive.
pub fn fix_gauge(v: &mut CVector) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        // Ties broken toward the lower index, with slack for round-off.
        if z.norm() > best_abs + 1e-12 {
            best_abs = z.norm();
            best = i;
        }
    }
    if best_abs > 0.0 {
        let phase = v[best].conj() / v[best].norm();
        *v *= phase;
    }
}

/// `exp(−i·t·H)` for Hermitian `H` via its spectrum.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(h);
    let mut scaled = vecs.clone();
    for (j, e) in vals.iter().enumerate() {
        let ph = Complex64::from_polar(1.0, -e * t);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= ph;
        }
    }
    mul_adjoint(&scaled, &vecs)
}

/// General matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a * Complex64::new(0.5f64.powi(squarings as i32), 0.0);
    let mut sum = identity(n);
    let mut term = identity(n);
    for k in 1..=40 {
        term = matmul(&term, &scaled) * Complex64::new(1.0 / k as f64, 0.0);
        sum += &term;
        if max_abs(&term) <= 1e-17 * max_abs(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

/// `i·log W` for a unitary `W`, i.e. the Hermitian `K` with `W = exp(−iK)`
/// and eigenphases in (−π, π].
pub fn unitary_log_generator(w: &CMatrix) -> CMatrix {
    // A fixed irrational mix of the Hermitian and anti-Hermitian parts
    // separates eigenphases that share a cosine.
    let mix = 0.577_215_664_901_532_9;
    let herm = hermitian_part(w);
    let anti = (w - w.adjoint()) * Complex64::new(0.0, -0.5);
    let probe = herm + anti * Complex64::new(mix, 0.0);
    let (_, vecs) = hermitian_eigen(&probe);
    let n = w.nrows();
    let mut scaled = vecs.clone();
    for j in 0..n {
        let v = vecs.column(j).into_owned();
        let lambda = (v.adjoint() * w * &v)[(0, 0)];
        let theta = lambda.arg();
        for z in scaled.column_mut(j).iter_mut() {
            *z *= -theta;
        }
    }
    mul_adjoint(&scaled, &vecs)
}

/// A Pauli operator compiled for fast action on dense matrices.
///
/// Terms sharing an X mask are merged into one diagonal, so
/// `(H·M)[r, c] = Σ_x e_x[r] · M[r ⊕ x, c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    groups: Vec<(usize, Vec<Complex64>)>,
}

impl SparseOperator {
    pub fn zero(dim: usize) -> Self {
        SparseOperator {
            dim,
            groups: Vec::new(),
        }
    }

    pub fn from_pauli(op: &PauliOperator) -> Self {
        let n = op.n_sites();
        let dim = 1usize << n;
        let mut groups: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
        for (key, coeff) in op.raw_terms() {
            let (xm, zm) = index_masks(n, key);
            let base = coeff * i_pow(key.y_count());
            let diag = groups.entry(xm).or_insert_with(|| vec![ZERO; dim]);
            for (r, d) in diag.iter_mut().enumerate() {
                // Row-oriented: the source column index is r ⊕ xm.
                let c = r ^ xm;
                let sign = if (c & zm).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                *d += base * sign;
            }
        }
        SparseOperator {
            dim,
            groups: groups.into_iter().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.groups.is_empty()
    }

    /// Upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        self.groups
            .iter()
            .map(|(_, d)| d.iter().fold(0.0f64, |a, z| a.max(z.norm())))
            .sum()
    }

    /// `Σ_j w_j·A_j` over operators of equal dimension.
    pub fn combine(parts: &[(f64, &SparseOperator)]) -> SparseOperator {
        let dim = parts.first().map(|(_, p)| p.dim).unwrap_or(0);
        let mut groups: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
        for &(w, p) in parts {
            assert_eq!(p.dim, dim, "operator dimensions differ");
            if w == 0.0 {
                continue;
            }
            for (xm, d) in &p.groups {
                let acc = groups.entry(*xm).or_insert_with(|| vec![ZERO; dim]);
                for (a, b) in acc.iter_mut().zip(d) {
                    *a += b * w;
                }
            }
        }
        SparseOperator {
            dim,
            groups: groups.into_iter().collect(),
        }
    }

    /// `out ← factor·H·m`
    pub fn apply_into(&self, factor: Complex64, m: &CMatrix, out: &mut CMatrix) {
        assert_eq!(m.nrows(), self.dim);
        assert_eq!(out.shape(), m.shape());
        let dim = self.dim;
        if dim == 0 || m.ncols() == 0 {
            return;
        }
        let src = m.as_slice();
        let groups = &self.groups;
        par::for_each_chunk_mut(out.as_mut_slice(), dim, |c, col| {
            let scol = &src[c * dim..(c + 1) * dim];
            col.iter_mut().for_each(|z| *z = ZERO);
            for (xm, e) in groups {
                for r in 0..dim {
                    col[r] += e[r] * scol[r ^ xm];
                }
            }
            if factor != ONE {
                col.iter_mut().for_each(|z| *z *= factor);
            }
        });
    }

    pub fn apply(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(m.nrows(), m.ncols());
        self.apply_into(ONE, m, &mut out);
        out
    }

    pub fn apply_vec(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(self.dim);
        for (xm, e) in &self.groups {
            for r in 0..self.dim {
                out[r] += e[r] * v[r ^ xm];
            }
        }
        out
    }

    /// `Tr(H·M)` without forming `H·M`.
    pub fn trace_mul(&self, m: &CMatrix) -> Complex64 {
        let mut acc = ZERO;
        for (xm, e) in &self.groups {
            for r in 0..self.dim {
                acc += e[r] * m[(r ^ xm, r)];
            }
        }
        acc
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (xm, e) in &self.groups {
            for r in 0..self.dim {
                m[(r, r ^ xm)] += e[r];
            }
        }
        m
    }

    /// `exp(−i·t·H)·m` by a Taylor series applied directly to `m`, split
    /// into substeps so each has `‖H‖·t ≤ 1/2`.
    pub fn exp_apply(&self, t: f64, m: &CMatrix) -> CMatrix {
        let theta = self.norm_bound() * t.abs();
        let substeps = if theta > 0.5 { (theta / 0.5).ceil() as usize } else { 1 };
        let h = t / substeps as f64;
        let mut cur = m.clone();
        if self.is_zero() || t == 0.0 {
            return cur;
        }
        let mut term = CMatrix::zeros(m.nrows(), m.ncols());
        let mut next = CMatrix::zeros(m.nrows(), m.ncols());
        for _ in 0..substeps {
            let mut sum = cur.clone();
            term.copy_from(&cur);
            let scale = max_abs(&sum).max(f64::MIN_POSITIVE);
            for k in 1..=60 {
                self.apply_into(Complex64::new(0.0, -h / k as f64), &term, &mut next);
                std::mem::swap(&mut term, &mut next);
                sum += &term;
                if max_abs(&term) <= 1e-17 * scale {
                    break;
                }
            }
            cur = sum;
        }
        cur
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliOperator;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, seed: u64) -> CMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn gemm_variants_match_nalgebra() {
        let a = random_matrix(7, 1);
        let b = random_matrix(7, 2);
        assert!(max_abs_diff(&matmul(&a, &b), &(&a * &b)) < 1e-13);
        assert!(max_abs_diff(&adjoint_mul(&a, &b), &(a.adjoint() * &b)) < 1e-13);
        assert!(max_abs_diff(&mul_adjoint(&a, &b), &(&a * b.adjoint())) < 1e-13);
        assert!(max_abs_diff(&commutator(&a, &b), &(&a * &b - &b * &a)) < 1e-13);
        assert!((trace_product(&a, &b) - trace(&(&a * &b))).norm() < 1e-13);
    }

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let a = random_matrix(6, 3);
        let h = hermitian_part(&a);
        let (vals, vecs) = hermitian_eigen(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let mut d = CMatrix::zeros(6, 6);
        for (i, v) in vals.iter().enumerate() {
            d[(i, i)] = c(*v, 0.0);
        }
        let back = &vecs * d * vecs.adjoint();
        assert!(max_abs_diff(&back, &h) < 1e-12);
    }

    #[test]
    fn exponentials_agree() {
        let h = hermitian_part(&random_matrix(5, 4)) * c(3.0, 0.0);
        let u1 = expm_hermitian(&h, 0.7);
        let u2 = expm(&(&h * c(0.0, -0.7)));
        assert!(max_abs_diff(&u1, &u2) < 1e-12);
        assert!(unitarity_error(&u1) < 1e-12);
    }

    #[test]
    fn sparse_matches_dense() {
        let op = PauliOperator::from_labels(
            3,
            &[
                ("X0 Y1", c(0.7, 0.0)),
                ("Z2", c(-0.3, 0.0)),
                ("Y0 Z1 X2", c(1.1, 0.0)),
                ("Z0 Z1", c(0.2, 0.0)),
                ("X1", c(0.5, 0.0)),
            ],
        )
        .unwrap();
        let dense = op.to_dense().unwrap();
        let sparse = SparseOperator::from_pauli(&op);
        assert!(max_abs_diff(&sparse.to_dense(), &dense) < 1e-14);
        let m = random_matrix(8, 5);
        assert!(max_abs_diff(&sparse.apply(&m), &(&dense * &m)) < 1e-13);
        let v = m.column(0).into_owned();
        assert!((sparse.apply_vec(&v) - &dense * &v).camax() < 1e-13);

        let u = sparse.exp_apply(2.3, &identity(8));
        assert!(max_abs_diff(&u, &expm_hermitian(&dense, 2.3)) < 1e-12);

        let both = SparseOperator::combine(&[(2.0, &sparse), (-0.5, &sparse)]);
        assert!(max_abs_diff(&both.to_dense(), &(&dense * c(1.5, 0.0))) < 1e-13);
        assert!(sparse.norm_bound() >= 1.1 + 0.7 + 0.5 - 1e-12);
    }

    #[test]
    fn gauge_makes_largest_component_real() {
        let mut v = CVector::from_vec(vec![c(0.1, 0.2), c(0.0, -0.9), c(0.3, 0.0)]);
        fix_gauge(&mut v);
        assert!(v[1].im.abs() < 1e-15 && v[1].re > 0.0);
    }

    #[test]
    fn log_generator_inverts_exponential() {
        let h = hermitian_part(&random_matrix(4, 9));
        let w = expm_hermitian(&h, 0.4);
        let k = unitary_log_generator(&w);
        assert!(max_abs_diff(&expm_hermitian(&k, 1.0), &w) < 1e-10);
        // Swap of two levels.
        let swap = pauli_matrix(Some(Letter::X));
        let k = unitary_log_generator(&swap);
        assert!(hermiticity_error(&k) < 1e-12);
        assert!(max_abs_diff(&expm_hermitian(&k, 1.0), &swap) < 1e-10);
    }

    #[test]
    fn sparse_trace_mul_matches_dense() {
        let op = PauliOperator::from_labels(
            3,
            &[("X0 Y2", c(0.3, 0.0)), ("Z1", c(-1.2, 0.0)), ("Y0 Y1", c(0.0, 0.4))],
        )
        .unwrap();
        let sp = SparseOperator::from_pauli(&op);
        let m = random_matrix(8, 9);
        assert!((sp.trace_mul(&m) - trace(&(sp.to_dense() * &m))).norm() < 1e-13);
    }
}

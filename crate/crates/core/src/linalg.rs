//! Dense complex-matrix foundation: tensor products, partial traces,
//! Hermitian eigendecomposition and linear solves.
//!
//! One global convention is fixed here and inherited by every other module:
//! matrices are indexed row-major, the Kronecker product maps the pair
//! `(i_A, i_B)` to row `i_A * d_B + i_B`, and vectorization stacks columns.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QptError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Hermiticity tolerance: max-abs of `M - M†`.
pub const HERM_TOL: f64 = 1e-10;
/// Condition estimate above which a linear system is reported singular.
pub const SINGULAR_COND: f64 = 1e12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff: shape mismatch");
    max_abs(&(a - b))
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Deviation from Hermiticity, max-abs of `M - M†`.
pub fn herm_deviation(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && herm_deviation(m) <= tol
}

pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

/// Kronecker product; row index convention `i_A * d_B + i_B`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace of a `(d_a * d_b)`-dimensional operator over the factor
/// that is not kept.
pub fn partial_trace(m: &CMatrix, d_a: usize, d_b: usize, keep: Subsystem) -> Result<CMatrix> {
    let d = d_a * d_b;
    if m.nrows() != d || m.ncols() != d {
        return Err(QptError::DimensionMismatch(format!(
            "partial_trace: matrix is {}x{}, dims say {}x{}",
            m.nrows(),
            m.ncols(),
            d,
            d
        )));
    }
    match keep {
        Subsystem::A => {
            let mut out = zeros(d_a, d_a);
            for i in 0..d_a {
                for j in 0..d_a {
                    let mut s = Complex64::default();
                    for b in 0..d_b {
                        s += m[(i * d_b + b, j * d_b + b)];
                    }
                    out[(i, j)] = s;
                }
            }
            Ok(out)
        }
        Subsystem::B => {
            let mut out = zeros(d_b, d_b);
            for i in 0..d_b {
                for j in 0..d_b {
                    let mut s = Complex64::default();
                    for a in 0..d_a {
                        s += m[(a * d_b + i, a * d_b + j)];
                    }
                    out[(i, j)] = s;
                }
            }
            Ok(out)
        }
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending,
/// eigenvectors as orthonormal columns.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianEig {
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.eigenvectors.nrows();
        let mut diag = zeros(d, d);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            diag[(k, k)] = cr(lam);
        }
        &self.eigenvectors * diag * self.eigenvectors.adjoint()
    }
}

/// Hermitian eigendecomposition. The input is symmetrized via `(M + M†)/2`
/// when within `HERM_TOL`; more skew than that is an error.
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEig> {
    let dev = herm_deviation(m);
    if !m.is_square() || dev > HERM_TOL {
        return Err(QptError::NotHermitian { deviation: dev });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let d = m.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = zeros(d, d);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors: vecs,
    })
}

/// Minimum eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.eigenvalues[0])
}

/// Ratio of extreme singular values; `inf` for exactly singular input.
pub fn condition_estimate(m: &CMatrix) -> f64 {
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let min = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solve `A X = B` for square `A`; errors with the condition estimate when
/// `A` is singular beyond `SINGULAR_COND`.
pub fn solve_linear(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(QptError::DimensionMismatch(format!(
            "solve_linear: A is {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() != b.nrows() {
        return Err(QptError::DimensionMismatch(format!(
            "solve_linear: A has {} rows, B has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let cond = condition_estimate(a);
    if !cond.is_finite() || cond > SINGULAR_COND {
        return Err(QptError::Singular { condition: cond });
    }
    let svd = a.clone().svd(true, true);
    svd.solve(b, 0.0)
        .map_err(|_| QptError::Singular { condition: cond })
}

pub fn matrix_inverse(a: &CMatrix) -> Result<CMatrix> {
    solve_linear(a, &identity(a.nrows()))
}

/// Column-stacking vectorization. nalgebra stores column-major, so this is
/// a plain copy of the backing slice.
pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    assert_eq!(v.len(), rows * cols, "unvectorize: length mismatch");
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::pauli;

    fn ket(d: usize, i: usize) -> CVector {
        let mut v = CVector::zeros(d);
        v[i] = cr(1.0);
        v
    }

    #[test]
    fn tensor_identities() {
        assert_eq!(tensor(&identity(2), &identity(2)), identity(4));

        let zz = tensor(&pauli(3), &pauli(3));
        let expect = CMatrix::from_diagonal(&CVector::from_vec(vec![
            cr(1.0),
            cr(-1.0),
            cr(-1.0),
            cr(1.0),
        ]));
        assert!(max_abs_diff(&zz, &expect) == 0.0);

        // |0><0| ⊗ σ_x → σ_x in the upper-left block, zeros elsewhere
        let p0 = &ket(2, 0) * ket(2, 0).adjoint();
        let m = tensor(&p0, &pauli(1));
        let mut expect = zeros(4, 4);
        expect[(0, 1)] = cr(1.0);
        expect[(1, 0)] = cr(1.0);
        assert!(max_abs_diff(&m, &expect) == 0.0);
    }

    #[test]
    fn tensor_index_convention() {
        // row index of a ⊗ b is i_A * d_B + i_B
        let mut a = zeros(2, 2);
        a[(1, 0)] = cr(1.0);
        let mut b = zeros(3, 3);
        b[(2, 1)] = cr(1.0);
        let t = tensor(&a, &b);
        assert_eq!(t[(1 * 3 + 2, 0 * 3 + 1)], cr(1.0));
    }

    fn singlet() -> CMatrix {
        let v = CVector::from_vec(vec![
            cr(0.0),
            cr(1.0 / f64::sqrt(2.0)),
            cr(-1.0 / f64::sqrt(2.0)),
            cr(0.0),
        ]);
        &v * v.adjoint()
    }

    #[test]
    fn partial_trace_product_and_singlet() {
        // Tr_B(ρ ⊗ ξ) = Tr(ξ) ρ
        let rho = CMatrix::from_row_slice(2, 2, &[cr(0.7), c(0.1, 0.2), c(0.1, -0.2), cr(0.3)]);
        let xi = CMatrix::from_row_slice(2, 2, &[cr(0.4), cr(0.0), cr(0.0), cr(0.6)]);
        let tb = partial_trace(&tensor(&rho, &xi), 2, 2, Subsystem::A).unwrap();
        assert!(max_abs_diff(&tb, &rho) < 1e-14);

        let s = singlet();
        let half = identity(2).scale(0.5);
        assert!(max_abs_diff(&partial_trace(&s, 2, 2, Subsystem::A).unwrap(), &half) < 1e-14);
        assert!(max_abs_diff(&partial_trace(&s, 2, 2, Subsystem::B).unwrap(), &half) < 1e-14);

        assert!(partial_trace(&s, 2, 3, Subsystem::A).is_err());
    }

    #[test]
    fn hermitian_eig_paulis_and_swap() {
        let e = hermitian_eig(&pauli(3)).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-12);

        let e = hermitian_eig(&pauli(1)).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-12);
        // eigenvector of -1 is (|0> - |1>)/√2 up to phase: check projector
        let v = e.eigenvectors.column(0).clone_owned();
        let proj = &v * v.adjoint();
        let minus = CVector::from_vec(vec![cr(1.0 / f64::sqrt(2.0)), cr(-1.0 / f64::sqrt(2.0))]);
        let expect = &minus * minus.adjoint();
        assert!(max_abs_diff(&proj, &expect) < 1e-12);

        // SWAP has the antisymmetric singlet at -1 and a 3-fold +1 space
        let swap = crate::channels::swap_unitary(2);
        let e = hermitian_eig(&swap).unwrap();
        let expect = [-1.0, 1.0, 1.0, 1.0];
        for (got, want) in e.eigenvalues.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(max_abs_diff(&e.reconstruct(), &swap) < 1e-10);
        assert!(
            max_abs_diff(&(e.eigenvectors.adjoint() * &e.eigenvectors), &identity(4)) < 1e-10
        );

        // non-Hermitian input is rejected
        let mut nh = zeros(2, 2);
        nh[(0, 1)] = cr(1.0);
        assert!(matches!(hermitian_eig(&nh), Err(QptError::NotHermitian { .. })));
    }

    #[test]
    fn solve_linear_cases() {
        let b = CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(2.0), cr(3.0), cr(4.0)]);
        let x = solve_linear(&identity(2), &b).unwrap();
        assert!(max_abs_diff(&x, &b) < 1e-12);

        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(2.0), cr(4.0)]));
        let x = solve_linear(&a, &identity(2)).unwrap();
        let expect = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(0.5), cr(0.25)]));
        assert!(max_abs_diff(&x, &expect) < 1e-12);

        // σ_x is an involution
        let x = solve_linear(&pauli(1), &identity(2)).unwrap();
        assert!(max_abs_diff(&x, &pauli(1)) < 1e-12);

        // singular input carries the condition estimate
        let mut sing = zeros(2, 2);
        sing[(0, 0)] = cr(1.0);
        match solve_linear(&sing, &identity(2)) {
            Err(QptError::Singular { condition }) => assert!(condition > SINGULAR_COND),
            other => panic!("expected singularity error, got {other:?}"),
        }
    }

    #[test]
    fn vectorize_roundtrip_column_stacking() {
        let m = CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(2.0), cr(3.0), cr(4.0)]);
        let v = vectorize(&m);
        // column stacking: (1,3,2,4)
        assert_eq!(v[0], cr(1.0));
        assert_eq!(v[1], cr(3.0));
        assert_eq!(v[2], cr(2.0));
        assert_eq!(v[3], cr(4.0));
        assert_eq!(unvectorize(&v, 2, 2), m);
    }
}

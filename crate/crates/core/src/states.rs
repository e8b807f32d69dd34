//! Density matrices, orthonormal Hermitian operator bases, Bloch vectors,
//! and bipartite states with their correlation matrix.
//!
//! A bipartite state is held as `ρ_AB = ρ_A ⊗ ρ_B + Σ_{jk} Γ_jk Λ_j ⊗ Λ_k`
//! where the `Λ_j` form an orthonormal Hermitian basis with `Λ_0 = I/√d`,
//! so the correlation matrix `Γ` has identically vanishing row and column 0.

use nalgebra::DMatrix;

use crate::error::{QptError, Result};
use crate::linalg::{
    self, c, cr, herm_deviation, hermitian_eig, identity, partial_trace,
    tensor, trace, zeros, CMatrix, CVector, Subsystem, HERM_TOL,
};

/// Pauli matrix: 0 → I, 1 → σ_x, 2 → σ_y, 3 → σ_z.
pub fn pauli(i: usize) -> CMatrix {
    match i {
        0 => identity(2),
        1 => CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]),
        2 => CMatrix::from_row_slice(2, 2, &[cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)]),
        3 => CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)]),
        _ => panic!("pauli index out of range"),
    }
}

/// Column vector |i> in dimension d.
pub fn basis_ket(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = cr(1.0);
    v
}

/// Projector |ψ><ψ| of a (not necessarily normalized) vector.
pub fn projector(psi: &CVector) -> CMatrix {
    let n = psi.norm();
    let psi = psi.unscale(n);
    &psi * psi.adjoint()
}

/// d × d complex Hermitian, PSD, unit-trace state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity. Eigenvalues in
    /// `(-1e-10, 0)` are clamped to zero and the state renormalized.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(QptError::NotAState("matrix is not square".into()));
        }
        if !linalg::all_finite(&matrix) {
            return Err(QptError::NotAState("non-finite entries".into()));
        }
        let dev = herm_deviation(&matrix);
        if dev > HERM_TOL {
            return Err(QptError::NotAState(format!(
                "not Hermitian (deviation {dev:.3e})"
            )));
        }
        let tr = trace(&matrix);
        if (tr - cr(1.0)).norm() > HERM_TOL {
            return Err(QptError::NotAState(format!(
                "trace is {tr} rather than 1"
            )));
        }
        let eig = hermitian_eig(&matrix)?;
        let min = eig.eigenvalues[0];
        if min < -1e-10 {
            return Err(QptError::NotAState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        let dim = matrix.nrows();
        let matrix = if min < 0.0 {
            // clamp numerical negatives and renormalize
            let clamped: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
            let total: f64 = clamped.iter().sum();
            let mut diag = zeros(dim, dim);
            for (k, l) in clamped.iter().enumerate() {
                diag[(k, k)] = cr(l / total);
            }
            &eig.eigenvectors * diag * eig.eigenvectors.adjoint()
        } else {
            (&matrix + matrix.adjoint()).scale(0.5)
        };
        Ok(Self { dim, matrix })
    }

    pub fn from_pure(psi: &CVector) -> Self {
        Self {
            dim: psi.len(),
            matrix: projector(psi),
        }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            dim: d,
            matrix: identity(d).scale(1.0 / d as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        trace(&(&self.matrix * &self.matrix)).re
    }

    /// Expectation value Tr(ρ O) of a Hermitian observable.
    pub fn expectation(&self, observable: &CMatrix) -> f64 {
        trace(&(&self.matrix * observable)).re
    }
}

/// Orthonormal Hermitian operator basis `Λ_0..Λ_{d²-1}` with
/// `Tr(Λ_j Λ_k) = δ_jk` and `Λ_0 = I/√d`.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    dim: usize,
    elements: Vec<CMatrix>,
}

impl OperatorBasis {
    /// Generalized Gell-Mann construction scaled to orthonormality.
    ///
    /// Ordering: identity, then for each index pair `j < k` the symmetric
    /// and antisymmetric element, then the diagonal elements. For d = 2 this
    /// is `{I/√2, σ_x/√2, σ_y/√2, σ_z/√2}`.
    pub fn standard(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(QptError::InvalidArgument(format!(
                "operator basis needs d >= 2, got {d}"
            )));
        }
        let inv_sqrt2 = 1.0 / f64::sqrt(2.0);
        let mut elements = vec![identity(d).scale(1.0 / (d as f64).sqrt())];
        for j in 0..d {
            for k in (j + 1)..d {
                let mut sym = zeros(d, d);
                sym[(j, k)] = cr(inv_sqrt2);
                sym[(k, j)] = cr(inv_sqrt2);
                elements.push(sym);
                let mut asym = zeros(d, d);
                asym[(j, k)] = c(0.0, -inv_sqrt2);
                asym[(k, j)] = c(0.0, inv_sqrt2);
                elements.push(asym);
            }
        }
        for l in 1..d {
            let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
            let mut diag = zeros(d, d);
            for m in 0..l {
                diag[(m, m)] = cr(norm);
            }
            diag[(l, l)] = cr(-(l as f64) * norm);
            elements.push(diag);
        }
        debug_assert_eq!(elements.len(), d * d);
        Ok(Self { dim: d, elements })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, j: usize) -> &CMatrix {
        &self.elements[j]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Qubit Bloch vector, `ρ = (I + r·σ)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector(pub [f64; 3]);

impl BlochVector {
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        if self.norm() > 1.0 + 1e-10 {
            return Err(QptError::InvalidArgument(format!(
                "Bloch vector norm {} exceeds 1",
                self.norm()
            )));
        }
        let mut m = identity(2);
        for (i, &r) in self.0.iter().enumerate() {
            m += pauli(i + 1).scale(r);
        }
        DensityMatrix::new(m.scale(0.5))
    }

    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        if rho.dim() != 2 {
            return Err(QptError::DimensionMismatch(
                "Bloch vector is qubit only".into(),
            ));
        }
        Ok(Self([
            rho.expectation(&pauli(1)),
            rho.expectation(&pauli(2)),
            rho.expectation(&pauli(3)),
        ]))
    }
}

/// Pure qubit state along a Bloch direction (the direction is normalized).
pub fn pure_state_along(direction: [f64; 3]) -> Result<CVector> {
    let n = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n < 1e-12 {
        return Err(QptError::InvalidArgument(
            "zero Bloch direction".into(),
        ));
    }
    let [x, y, z] = [direction[0] / n, direction[1] / n, direction[2] / n];
    let theta = z.clamp(-1.0, 1.0).acos();
    let phi = y.atan2(x);
    Ok(CVector::from_vec(vec![
        cr((theta / 2.0).cos()),
        c(0.0, phi).exp() * (theta / 2.0).sin(),
    ]))
}

/// Joint state on A ⊗ B.
#[derive(Debug, Clone)]
pub struct BipartiteState {
    dim_a: usize,
    dim_b: usize,
    joint: DensityMatrix,
}

impl BipartiteState {
    pub fn new(joint: DensityMatrix, dim_a: usize, dim_b: usize) -> Result<Self> {
        if joint.dim() != dim_a * dim_b {
            return Err(QptError::DimensionMismatch(format!(
                "joint dim {} != {} x {}",
                joint.dim(),
                dim_a,
                dim_b
            )));
        }
        Ok(Self { dim_a, dim_b, joint })
    }

    pub fn product(rho_a: &DensityMatrix, rho_b: &DensityMatrix) -> Self {
        Self {
            dim_a: rho_a.dim(),
            dim_b: rho_b.dim(),
            joint: DensityMatrix::new(tensor(rho_a.matrix(), rho_b.matrix()))
                .expect("product of states is a state"),
        }
    }

    /// Two-qubit singlet (|01> - |10>)/√2.
    pub fn singlet() -> Self {
        let v = CVector::from_vec(vec![
            cr(0.0),
            cr(1.0 / f64::sqrt(2.0)),
            cr(-1.0 / f64::sqrt(2.0)),
            cr(0.0),
        ]);
        Self {
            dim_a: 2,
            dim_b: 2,
            joint: DensityMatrix::from_pure(&v),
        }
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn joint(&self) -> &DensityMatrix {
        &self.joint
    }

    pub fn marginal_a(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(partial_trace(
            self.joint.matrix(),
            self.dim_a,
            self.dim_b,
            Subsystem::A,
        )?)
    }

    pub fn marginal_b(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(partial_trace(
            self.joint.matrix(),
            self.dim_a,
            self.dim_b,
            Subsystem::B,
        )?)
    }
}

/// Correlation part of a bipartite state in a fixed pair of operator bases.
/// Row 0 and column 0 vanish identically.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub gamma: DMatrix<f64>,
}

impl CorrelationMatrix {
    pub fn zero(dim_a: usize, dim_b: usize) -> Self {
        Self {
            gamma: DMatrix::zeros(dim_a * dim_a, dim_b * dim_b),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.gamma.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.gamma
    }
}

/// `Γ_jk = <Λ_j ⊗ Λ_k> - <Λ_j><Λ_k>`.
pub fn correlation_matrix(
    w: &BipartiteState,
    basis_a: &OperatorBasis,
    basis_b: &OperatorBasis,
) -> Result<CorrelationMatrix> {
    if basis_a.dim() != w.dim_a() || basis_b.dim() != w.dim_b() {
        return Err(QptError::DimensionMismatch(
            "correlation_matrix: basis dims do not match the state".into(),
        ));
    }
    let rho_a = w.marginal_a()?;
    let rho_b = w.marginal_b()?;
    let na = basis_a.len();
    let nb = basis_b.len();
    let mut gamma = DMatrix::zeros(na, nb);
    let ev_a: Vec<f64> = basis_a.elements().iter().map(|l| rho_a.expectation(l)).collect();
    let ev_b: Vec<f64> = basis_b.elements().iter().map(|l| rho_b.expectation(l)).collect();
    for j in 0..na {
        for k in 0..nb {
            let joint_ev = w
                .joint()
                .expectation(&tensor(basis_a.element(j), basis_b.element(k)));
            gamma[(j, k)] = joint_ev - ev_a[j] * ev_b[k];
        }
    }
    Ok(CorrelationMatrix { gamma })
}

/// Rebuild `ρ_A ⊗ ρ_B + Σ Γ_jk Λ_j ⊗ Λ_k`; errors when the result is not
/// positive semidefinite (Γ incompatible with the marginals).
pub fn assemble_bipartite(
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    gamma: &CorrelationMatrix,
    basis_a: &OperatorBasis,
    basis_b: &OperatorBasis,
) -> Result<BipartiteState> {
    let (na, nb) = (basis_a.len(), basis_b.len());
    if gamma.gamma.nrows() != na || gamma.gamma.ncols() != nb {
        return Err(QptError::DimensionMismatch(
            "assemble_bipartite: gamma shape does not match the bases".into(),
        ));
    }
    for j in 0..na {
        if gamma.gamma[(j, 0)].abs() > HERM_TOL {
            return Err(QptError::InvalidArgument(
                "assemble_bipartite: gamma column 0 must vanish".into(),
            ));
        }
    }
    for k in 0..nb {
        if gamma.gamma[(0, k)].abs() > HERM_TOL {
            return Err(QptError::InvalidArgument(
                "assemble_bipartite: gamma row 0 must vanish".into(),
            ));
        }
    }
    let mut joint = tensor(rho_a.matrix(), rho_b.matrix());
    for j in 1..na {
        for k in 1..nb {
            let g = gamma.gamma[(j, k)];
            if g != 0.0 {
                joint += tensor(basis_a.element(j), basis_b.element(k)).scale(g);
            }
        }
    }
    let min = linalg::min_eigenvalue(&joint)?;
    if min < -1e-8 {
        return Err(QptError::NotAState(format!(
            "gamma incompatible with the marginals (eigenvalue {min:.3e})"
        )));
    }
    BipartiteState::new(DensityMatrix::new(joint)?, rho_a.dim(), rho_b.dim())
}

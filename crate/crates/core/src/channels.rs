//! Linear maps on operators: superoperator and Choi representations,
//! CP/TP/Hermiticity predicates, composition, inversion, the
//! difference-of-CP decomposition and a library of named maps.
//!
//! Conventions (fixed once, inherited everywhere): vectorization stacks
//! columns, so the superoperator of a Kraus operator `A` is `conj(A) ⊗ A`;
//! the Choi matrix is the unnormalized `C = Σ_ij |i><j| ⊗ E[|i><j|]`
//! (trace `d` for trace-preserving maps).


use crate::error::{QptError, Result};
use crate::linalg::{
    self, cr, dagger, herm_deviation, hermitian_eig, identity, max_abs_diff, partial_trace, tensor, trace, unvectorize, vectorize, zeros, CMatrix, CVector, Subsystem,
};
use crate::states::{pauli, DensityMatrix};

/// Default tolerance on the minimum Choi eigenvalue for CP verdicts.
pub const CP_TOL: f64 = 1e-9;

/// A linear map on operators, held jointly as superoperator (acting on
/// column-stacked operators) and Choi matrix.
#[derive(Debug, Clone)]
pub struct QuantumMap {
    dim_in: usize,
    dim_out: usize,
    superop: CMatrix,
    choi: CMatrix,
}

/// Kraus operators with signs (+1 for every operator of a CP map).
#[derive(Debug, Clone)]
pub struct KrausSet {
    pub operators: Vec<CMatrix>,
    pub signs: Vec<f64>,
}

impl KrausSet {
    pub fn positive(operators: Vec<CMatrix>) -> Self {
        let signs = vec![1.0; operators.len()];
        Self { operators, signs }
    }

    /// `Σ_j s_j A_j† A_j`.
    pub fn normalization(&self, dim_in: usize) -> CMatrix {
        let mut acc = zeros(dim_in, dim_in);
        for (a, s) in self.operators.iter().zip(&self.signs) {
            acc += (dagger(a) * a).scale(*s);
        }
        acc
    }
}

/// A Hermiticity-preserving map written as a difference of two CP maps
/// with mutually orthogonal Kraus operators.
#[derive(Debug, Clone)]
pub struct NcpDecomposition {
    pub positive_part: KrausSet,
    pub negative_part: KrausSet,
}

impl NcpDecomposition {
    /// Count of positive Kraus operators.
    pub fn q(&self) -> usize {
        self.positive_part.operators.len()
    }

    /// `Σ₊ A_j† A_j - Σ₋ A_j† A_j`; equals the identity for
    /// trace-preserving sources.
    pub fn trace_identity(&self, dim_in: usize) -> CMatrix {
        self.positive_part.normalization(dim_in)
            + self.negative_part.normalization(dim_in).scale(-1.0)
    }

    /// Rebuilds the map `Σ₊ A ρ A† - Σ₋ A ρ A†`.
    pub fn reassemble(&self) -> Result<QuantumMap> {
        let mut all = self.positive_part.operators.clone();
        let signs: Vec<f64> = std::iter::repeat(1.0)
            .take(all.len())
            .chain(std::iter::repeat(-1.0).take(self.negative_part.operators.len()))
            .collect();
        all.extend(self.negative_part.operators.iter().cloned());
        QuantumMap::from_signed_kraus(&all, &signs)
    }
}

/// CP verdict together with the minimum Choi eigenvalue it was based on.
#[derive(Debug, Clone, Copy)]
pub struct CpVerdict {
    pub is_cp: bool,
    pub min_choi_eig: f64,
    pub tolerance: f64,
}

fn superop_of_kraus(a: &CMatrix) -> CMatrix {
    tensor(&a.map(|z| z.conj()), a)
}

impl QuantumMap {
    /// Builds the map from its superoperator. The Choi matrix is derived.
    pub fn from_superop(superop: CMatrix, dim_in: usize, dim_out: usize) -> Result<Self> {
        if superop.nrows() != dim_out * dim_out || superop.ncols() != dim_in * dim_in {
            return Err(QptError::DimensionMismatch(format!(
                "superoperator is {}x{}, expected {}x{}",
                superop.nrows(),
                superop.ncols(),
                dim_out * dim_out,
                dim_in * dim_in
            )));
        }
        if !linalg::all_finite(&superop) {
            return Err(QptError::Malformed("superoperator has non-finite entries".into()));
        }
        let choi = superop_to_choi(&superop, dim_in, dim_out);
        Ok(Self {
            dim_in,
            dim_out,
            superop,
            choi,
        })
    }

    pub fn from_kraus(ops: &[CMatrix]) -> Result<Self> {
        let signs = vec![1.0; ops.len()];
        Self::from_signed_kraus(ops, &signs)
    }

    /// `ρ ↦ Σ_j s_j A_j ρ A_j†`.
    pub fn from_signed_kraus(ops: &[CMatrix], signs: &[f64]) -> Result<Self> {
        let first = ops.first().ok_or_else(|| {
            QptError::InvalidArgument("empty Kraus operator list".into())
        })?;
        let (dim_out, dim_in) = (first.nrows(), first.ncols());
        let mut superop = zeros(dim_out * dim_out, dim_in * dim_in);
        for (a, s) in ops.iter().zip(signs) {
            if a.nrows() != dim_out || a.ncols() != dim_in {
                return Err(QptError::DimensionMismatch(
                    "Kraus operators have inconsistent shapes".into(),
                ));
            }
            superop += superop_of_kraus(a).scale(*s);
        }
        Self::from_superop(superop, dim_in, dim_out)
    }

    /// Builds the map from an unnormalized Choi matrix.
    pub fn from_choi(choi: CMatrix, dim_in: usize, dim_out: usize) -> Result<Self> {
        if choi.nrows() != dim_in * dim_out || !choi.is_square() {
            return Err(QptError::DimensionMismatch(format!(
                "Choi matrix is {}x{}, expected square of size {}",
                choi.nrows(),
                choi.ncols(),
                dim_in * dim_out
            )));
        }
        let superop = choi_to_superop(&choi, dim_in, dim_out);
        let map = Self::from_superop(superop, dim_in, dim_out)?;
        debug_assert!(max_abs_diff(&map.choi, &choi) < 1e-10);
        Ok(map)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn superop(&self) -> &CMatrix {
        &self.superop
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    /// Applies the map to an arbitrary operator.
    pub fn apply(&self, op: &CMatrix) -> Result<CMatrix> {
        if op.nrows() != self.dim_in || op.ncols() != self.dim_in {
            return Err(QptError::DimensionMismatch(format!(
                "apply: operator is {}x{}, map input dim is {}",
                op.nrows(),
                op.ncols(),
                self.dim_in
            )));
        }
        let v = &self.superop * vectorize(op);
        Ok(unvectorize(&v, self.dim_out, self.dim_out))
    }

    /// Applies the map to a state, validating the output as a state.
    pub fn apply_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new(self.apply(rho.matrix())?)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        herm_deviation(&self.choi)
    }

    pub fn is_hermiticity_preserving(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// Max-abs deviation of `Tr_out(Choi)` from the identity.
    pub fn tp_deviation(&self) -> f64 {
        let traced = partial_trace(&self.choi, self.dim_in, self.dim_out, Subsystem::A)
            .expect("choi dims are consistent by construction");
        max_abs_diff(&traced, &identity(self.dim_in))
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.tp_deviation() <= tol
    }

    /// Choi spectrum, ascending. Errors when the map is not
    /// Hermiticity-preserving.
    pub fn choi_spectrum(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eig(&self.choi)?.eigenvalues)
    }

    /// Complete positivity via the minimum Choi eigenvalue.
    pub fn is_cp(&self, tol: f64) -> Result<CpVerdict> {
        let spectrum = self.choi_spectrum()?;
        let min_choi_eig = spectrum[0];
        Ok(CpVerdict {
            is_cp: min_choi_eig >= -tol,
            min_choi_eig,
            tolerance: tol,
        })
    }

    /// Number of Choi eigenvalues above `tol` relative to the largest.
    pub fn choi_rank(&self, tol: f64) -> Result<usize> {
        let spectrum = self.choi_spectrum()?;
        let max = spectrum.iter().map(|l| l.abs()).fold(0.0, f64::max);
        if max == 0.0 {
            return Ok(0);
        }
        Ok(spectrum.iter().filter(|l| l.abs() > tol * max).count())
    }

    /// Composition `self ∘ g` (g first).
    pub fn compose(&self, g: &QuantumMap) -> Result<QuantumMap> {
        if g.dim_out != self.dim_in {
            return Err(QptError::DimensionMismatch(format!(
                "compose: inner dims {} vs {}",
                g.dim_out, self.dim_in
            )));
        }
        QuantumMap::from_superop(&self.superop * &g.superop, g.dim_in, self.dim_out)
    }

    /// Mathematical inverse (not physical); errors when the superoperator
    /// is singular.
    pub fn inverse(&self) -> Result<QuantumMap> {
        if self.dim_in != self.dim_out {
            return Err(QptError::NotInvertible(
                "input and output dimensions differ".into(),
            ));
        }
        match linalg::matrix_inverse(&self.superop) {
            Ok(inv) => QuantumMap::from_superop(inv, self.dim_out, self.dim_in),
            Err(QptError::Singular { condition }) => Err(QptError::NotInvertible(format!(
                "singular superoperator (condition estimate {condition:.3e})"
            ))),
            Err(e) => Err(e),
        }
    }

    /// Kraus operators of a CP map, from the Choi eigendecomposition.
    pub fn kraus_operators(&self, tol: f64) -> Result<Vec<CMatrix>> {
        let decomp = self.ncp_decompose()?;
        if !decomp.negative_part.operators.is_empty() {
            let verdict = self.is_cp(tol)?;
            if !verdict.is_cp {
                return Err(QptError::NotCompletelyPositive {
                    min_eig: verdict.min_choi_eig,
                });
            }
        }
        Ok(decomp.positive_part.operators)
    }

    /// Difference-of-CP decomposition from the Choi eigendecomposition:
    /// each eigenpair `(λ, v)` yields `A = √|λ| · unvec(v)` with the sign
    /// of `λ`; eigenvalues with `|λ| <= 1e-10` are dropped.
    pub fn ncp_decompose(&self) -> Result<NcpDecomposition> {
        let eig = hermitian_eig(&self.choi)?;
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam.abs() <= 1e-10 {
                continue;
            }
            let v = eig.eigenvectors.column(k).clone_owned();
            let a = choi_vector_to_operator(&v, self.dim_in, self.dim_out)
                .scale(lam.abs().sqrt());
            if lam > 0.0 {
                positive.push(a);
            } else {
                negative.push(a);
            }
        }
        Ok(NcpDecomposition {
            positive_part: KrausSet::positive(positive),
            negative_part: KrausSet::positive(negative),
        })
    }

    /// Affine Bloch action `r ↦ M r + c` of a qubit map.
    pub fn bloch_affine(&self) -> Result<(nalgebra::DMatrix<f64>, [f64; 3])> {
        if self.dim_in != 2 || self.dim_out != 2 {
            return Err(QptError::DimensionMismatch(
                "bloch_affine: qubit maps only".into(),
            ));
        }
        let mut m = nalgebra::DMatrix::zeros(3, 3);
        let e_id = self.apply(&identity(2))?;
        let mut shift = [0.0; 3];
        for i in 0..3 {
            shift[i] = 0.5 * trace(&(pauli(i + 1) * &e_id)).re;
            for j in 0..3 {
                let e_sig = self.apply(&pauli(j + 1))?;
                m[(i, j)] = 0.5 * trace(&(pauli(i + 1) * e_sig)).re;
            }
        }
        Ok((m, shift))
    }
}

/// Choi ↔ superoperator reshuffles. With column stacking,
/// `vec(|i><j|) = e_j ⊗ e_i` and the Choi block `(i, j)` holds
/// `E[|i><j|]`.
fn superop_to_choi(superop: &CMatrix, dim_in: usize, dim_out: usize) -> CMatrix {
    let d = dim_in * dim_out;
    let mut choi = zeros(d, d);
    for i in 0..dim_in {
        for j in 0..dim_in {
            let col = superop.column(j * dim_in + i).clone_owned();
            for m in 0..dim_out {
                for n in 0..dim_out {
                    choi[(i * dim_out + m, j * dim_out + n)] = col[n * dim_out + m];
                }
            }
        }
    }
    choi
}

fn choi_to_superop(choi: &CMatrix, dim_in: usize, dim_out: usize) -> CMatrix {
    let mut superop = zeros(dim_out * dim_out, dim_in * dim_in);
    for i in 0..dim_in {
        for j in 0..dim_in {
            for m in 0..dim_out {
                for n in 0..dim_out {
                    superop[(n * dim_out + m, j * dim_in + i)] =
                        choi[(i * dim_out + m, j * dim_out + n)];
                }
            }
        }
    }
    superop
}

/// Reads a Choi eigenvector as an operator: entry `(m, i)` sits at Choi
/// index `i * d_out + m`.
fn choi_vector_to_operator(v: &CVector, dim_in: usize, dim_out: usize) -> CMatrix {
    let mut a = zeros(dim_out, dim_in);
    for i in 0..dim_in {
        for m in 0..dim_out {
            a[(m, i)] = v[i * dim_out + m];
        }
    }
    a
}

/// Identity map on dimension d.
pub fn identity_map(d: usize) -> QuantumMap {
    QuantumMap::from_superop(identity(d * d), d, d).expect("identity superop is well formed")
}

/// Unitary conjugation `ρ ↦ U ρ U†`.
pub fn unitary_map(u: &CMatrix) -> Result<QuantumMap> {
    let dev = linalg::unitarity_deviation(u);
    if dev > 1e-10 {
        return Err(QptError::NotUnitary { deviation: dev });
    }
    QuantumMap::from_kraus(std::slice::from_ref(u))
}

/// Qubit depolarizing family, Bloch action `r ↦ x r`; CP exactly for
/// `x ∈ [-1/3, 1]`.
pub fn depolarizing(x: f64) -> QuantumMap {
    let vec_id = vectorize(&identity(2));
    let superop = identity(4).scale(x) + (&vec_id * vec_id.adjoint()).scale((1.0 - x) / 2.0);
    QuantumMap::from_superop(superop, 2, 2).expect("depolarizing superop is well formed")
}

/// The linear extension of the perfect NOT, `ρ ↦ Tr(ρ) I - ρ`; equal to
/// depolarizing(-1).
pub fn not_map() -> QuantumMap {
    depolarizing(-1.0)
}

/// Transposition `ρ ↦ ρ^T`; its Choi matrix is the SWAP operator.
pub fn transpose_map(d: usize) -> QuantumMap {
    // vec(ρ^T) = K vec(ρ) with K the commutation matrix
    let mut k = zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            k[(i * d + j, j * d + i)] = cr(1.0);
        }
    }
    QuantumMap::from_superop(k, d, d).expect("transpose superop is well formed")
}

/// SWAP unitary on a d ⊗ d system.
pub fn swap_unitary(d: usize) -> CMatrix {
    let mut u = zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            u[(a * d + b, b * d + a)] = cr(1.0);
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::states::{basis_ket, BlochVector};

    #[test]
    fn from_kraus_identity_and_unitary() {
        let id = QuantumMap::from_kraus(&[identity(2)]).unwrap();
        assert!(max_abs_diff(id.superop(), &identity(4)) < 1e-14);

        // σ_x conjugation flips y and z on the Bloch sphere
        let m = unitary_map(&pauli(1)).unwrap();
        let (a, shift) = m.bloch_affine().unwrap();
        let expect = [1.0, -1.0, -1.0];
        for i in 0..3 {
            assert!(shift[i].abs() < 1e-12);
            for j in 0..3 {
                let want = if i == j { expect[i] } else { 0.0 };
                assert!((a[(i, j)] - want).abs() < 1e-12);
            }
        }

        assert!(QuantumMap::from_kraus(&[]).is_err());
    }

    #[test]
    fn phase_damping_bloch_action() {
        let s = cr(f64::sqrt(0.5));
        let m = QuantumMap::from_kraus(&[identity(2) * s, pauli(3) * s]).unwrap();
        let (a, shift) = m.bloch_affine().unwrap();
        let expect = [0.0, 0.0, 1.0];
        for i in 0..3 {
            assert!(shift[i].abs() < 1e-12);
            for j in 0..3 {
                let want = if i == j { expect[i] } else { 0.0 };
                assert!((a[(i, j)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn superop_choi_cross_consistency() {
        // applying the superop to vec(|i><j|) reproduces the (i,j) Choi block
        let m = depolarizing(0.37);
        for i in 0..2 {
            for j in 0..2 {
                let unit = &basis_ket(2, i) * basis_ket(2, j).adjoint();
                let img = m.apply(&unit).unwrap();
                for r in 0..2 {
                    for s in 0..2 {
                        let choi_entry = m.choi()[(i * 2 + r, j * 2 + s)];
                        assert!((choi_entry - img[(r, s)]).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn is_cp_cases() {
        let v = identity_map(2).is_cp(CP_TOL).unwrap();
        assert!(v.is_cp);
        assert!(v.min_choi_eig.abs() < 1e-12);

        let v = transpose_map(2).is_cp(CP_TOL).unwrap();
        assert!(!v.is_cp);
        assert!((v.min_choi_eig + 1.0).abs() < 1e-12);

        let v = depolarizing(-1.0 / 3.0).is_cp(CP_TOL).unwrap();
        assert!(v.is_cp);
        assert!(v.min_choi_eig.abs() < 1e-12);

        // non-Hermiticity-preserving map is rejected
        let mut s = zeros(4, 4);
        s[(0, 0)] = c(0.0, 1.0);
        let bad = QuantumMap::from_superop(s, 2, 2).unwrap();
        assert!(bad.is_cp(CP_TOL).is_err());
    }

    #[test]
    fn depolarizing_family_algebra() {
        // identity at x = 1
        assert!(max_abs_diff(depolarizing(1.0).superop(), &identity(4)) < 1e-14);

        // E_y ∘ E_x = E_xy
        let composed = depolarizing(0.7).compose(&depolarizing(-0.4)).unwrap();
        assert!(max_abs_diff(composed.superop(), depolarizing(-0.28).superop()) < 1e-12);

        // CP boundary
        for x in [-1.0 / 3.0, 0.0, 1.0] {
            assert!(depolarizing(x).is_cp(CP_TOL).unwrap().is_cp);
        }
        for x in [-0.34, -1.0, 1.01] {
            assert!(!depolarizing(x).is_cp(CP_TOL).unwrap().is_cp);
        }

        // inverse: E_x⁻¹ = E_{1/x}
        let inv = depolarizing(0.25).inverse().unwrap();
        assert!(max_abs_diff(inv.superop(), depolarizing(4.0).superop()) < 1e-10);

        // full contraction is not invertible
        assert!(matches!(
            depolarizing(0.0).inverse(),
            Err(QptError::NotInvertible(_))
        ));
    }

    #[test]
    fn compose_identity_and_involution() {
        let m = depolarizing(0.3);
        let composed = identity_map(2).compose(&m).unwrap();
        assert!(max_abs_diff(composed.superop(), m.superop()) < 1e-14);

        let sx = unitary_map(&pauli(1)).unwrap();
        let twice = sx.compose(&sx).unwrap();
        assert!(max_abs_diff(twice.superop(), &identity(4)) < 1e-12);

        let uinv = sx.inverse().unwrap();
        assert!(max_abs_diff(uinv.superop(), sx.superop()) < 1e-10);
    }

    #[test]
    fn not_map_action() {
        // NOT maps |0><0| to |1><1|
        let rho = &basis_ket(2, 0) * basis_ket(2, 0).adjoint();
        let out = not_map().apply(&rho).unwrap();
        let want = &basis_ket(2, 1) * basis_ket(2, 1).adjoint();
        assert!(max_abs_diff(&out, &want) < 1e-12);

        // and equals ½(Σ_i σ_i ρ σ_i - ρ)
        let s = cr(f64::sqrt(0.5));
        let kraus_form = QuantumMap::from_signed_kraus(
            &[pauli(1) * s, pauli(2) * s, pauli(3) * s, identity(2) * s],
            &[1.0, 1.0, 1.0, -1.0],
        )
        .unwrap();
        assert!(max_abs_diff(kraus_form.superop(), not_map().superop()) < 1e-12);
    }

    #[test]
    fn transpose_choi_is_swap() {
        assert!(max_abs_diff(transpose_map(2).choi(), &swap_unitary(2)) < 1e-14);
    }

    #[test]
    fn ncp_decompose_cp_map_has_empty_negative_part() {
        let d = depolarizing(0.5).ncp_decompose().unwrap();
        assert!(d.negative_part.operators.is_empty());
        let re = d.reassemble().unwrap();
        assert!(max_abs_diff(re.superop(), depolarizing(0.5).superop()) < 1e-10);
    }

    #[test]
    fn ncp_decompose_transpose() {
        let t = transpose_map(2);
        let d = t.ncp_decompose().unwrap();
        assert_eq!(d.q(), 3);
        assert_eq!(d.negative_part.operators.len(), 1);

        // pairwise orthogonal Kraus operators
        let all: Vec<&CMatrix> = d
            .positive_part
            .operators
            .iter()
            .chain(d.negative_part.operators.iter())
            .collect();
        for i in 0..all.len() {
            for j in 0..all.len() {
                if i != j {
                    let overlap = trace(&(dagger(all[i]) * all[j])).norm();
                    assert!(overlap < 1e-9, "overlap({i},{j}) = {overlap}");
                }
            }
        }

        // reassembly and the trace-preservation identity
        let re = d.reassemble().unwrap();
        assert!(max_abs_diff(re.superop(), t.superop()) < 1e-9);
        assert!(max_abs_diff(&d.trace_identity(2), &identity(2)) < 1e-9);
    }

    #[test]
    fn tp_predicate() {
        assert!(depolarizing(1.6).is_trace_preserving(1e-10));
        assert!(transpose_map(3).is_trace_preserving(1e-10));
        let k = identity(2).scale(0.5);
        let sub = QuantumMap::from_kraus(&[k]).unwrap();
        assert!(!sub.is_trace_preserving(1e-10));
    }

    #[test]
    fn swap_unitary_swaps() {
        let u = swap_unitary(2);
        let a = BlochVector([0.3, 0.1, -0.2]).to_density().unwrap();
        let b = BlochVector([-0.5, 0.0, 0.7]).to_density().unwrap();
        let joint = tensor(a.matrix(), b.matrix());
        let swapped = &u * joint * dagger(&u);
        assert!(max_abs_diff(&swapped, &tensor(b.matrix(), a.matrix())) < 1e-12);
    }
}

//! Preparation maps `ρ_A ↦ ω_AB`: the factorized and SWAP-target
//! constructions, singlet postselection, the correlated preparing-operation
//! family, and the preparator/process compatibility test.

use nalgebra::DMatrix;

use crate::channels::{QuantumMap, CP_TOL};
use crate::error::{QptError, Result};
use crate::linalg::{
    self, identity, tensor, trace, zeros, CMatrix,
};
use crate::states::{
    correlation_matrix, projector, pure_state_along, BipartiteState, CorrelationMatrix,
    DensityMatrix, OperatorBasis,
};

/// A rule `ρ_A ↦ ω_AB` with `Tr_B ω_AB = ρ_A`. Each kind accepts a
/// specific kind of request; the domain is explicit rather than "all
/// states".
#[derive(Debug, Clone)]
pub enum Preparator {
    /// `ρ ↦ ρ ⊗ ξ` with a fixed environment state.
    Factorized { env: DensityMatrix },
    /// `ρ_in ↦ ρ_in ⊗ ρ_out`; with a SWAP evolution this realizes the
    /// arbitrary transformation `ρ_in → ρ_out`.
    SwapTarget { rho_out: DensityMatrix },
    /// Stern-Gerlach postselection on one half of a singlet: a request for
    /// the pure state along `n` leaves the partner spin in the orthogonal
    /// state.
    SingletPostselect,
    /// A fixed joint state `ω` together with CPTP preparing operations
    /// applied to the system side: request `i` prepares `(Φ_i ⊗ id)[ω]`.
    PreparingOps {
        omega: BipartiteState,
        ops: Vec<QuantumMap>,
    },
}

/// What a preparator is asked to produce.
#[derive(Debug, Clone)]
pub enum PrepRequest {
    /// A system state (Factorized, SwapTarget).
    State(DensityMatrix),
    /// A Bloch direction for a pure-state request (SingletPostselect).
    Direction([f64; 3]),
    /// An index into the preparing operations (PreparingOps).
    OpIndex(usize),
}

impl Preparator {
    /// Validating constructor for the preparing-operation family: every
    /// operation must be completely positive and trace-preserving.
    pub fn preparing_ops(omega: BipartiteState, ops: Vec<QuantumMap>) -> Result<Self> {
        for (i, op) in ops.iter().enumerate() {
            if op.dim_in() != omega.dim_a() || op.dim_out() != omega.dim_a() {
                return Err(QptError::InvalidPreparingOp(format!(
                    "operation {i} acts on dim {} but the system has dim {}",
                    op.dim_in(),
                    omega.dim_a()
                )));
            }
            let verdict = op.is_cp(CP_TOL)?;
            if !verdict.is_cp {
                return Err(QptError::InvalidPreparingOp(format!(
                    "operation {i} is not completely positive (min Choi eigenvalue {:.3e})",
                    verdict.min_choi_eig
                )));
            }
            if !op.is_trace_preserving(1e-9) {
                return Err(QptError::InvalidPreparingOp(format!(
                    "operation {i} is not trace-preserving (deviation {:.3e})",
                    op.tp_deviation()
                )));
            }
        }
        Ok(Self::PreparingOps { omega, ops })
    }

    /// System dimension, when the preparator kind fixes it. `Factorized`
    /// accepts any system dimension.
    pub fn dim_a(&self) -> Option<usize> {
        match self {
            Self::Factorized { .. } => None,
            Self::SwapTarget { rho_out } => Some(rho_out.dim()),
            Self::SingletPostselect => Some(2),
            Self::PreparingOps { omega, .. } => Some(omega.dim_a()),
        }
    }

    pub fn dim_b(&self) -> usize {
        match self {
            Self::Factorized { env } => env.dim(),
            Self::SwapTarget { rho_out } => rho_out.dim(),
            Self::SingletPostselect => 2,
            Self::PreparingOps { omega, .. } => omega.dim_b(),
        }
    }

    pub fn prepare(&self, request: &PrepRequest) -> Result<BipartiteState> {
        match (self, request) {
            (Self::Factorized { env }, PrepRequest::State(rho)) => {
                Ok(BipartiteState::product(rho, env))
            }
            (Self::SwapTarget { rho_out }, PrepRequest::State(rho_in)) => {
                Ok(BipartiteState::product(rho_in, rho_out))
            }
            (Self::SingletPostselect, PrepRequest::Direction(n)) => {
                let psi = pure_state_along(*n)?;
                let anti = pure_state_along([-n[0], -n[1], -n[2]])?;
                let joint = tensor(&projector(&psi), &projector(&anti));
                BipartiteState::new(DensityMatrix::new(joint)?, 2, 2)
            }
            (Self::PreparingOps { omega, ops }, PrepRequest::OpIndex(i)) => {
                let op = ops.get(*i).ok_or_else(|| {
                    QptError::InvalidArgument(format!("preparing-op index {i} out of range"))
                })?;
                apply_on_a(op, omega)
            }
            _ => Err(QptError::InvalidArgument(
                "request kind does not match the preparator kind".into(),
            )),
        }
    }

    /// The system state a request asks for, `Tr_B` of the prepared state by
    /// the marginal property.
    pub fn requested_state(&self, request: &PrepRequest) -> Result<DensityMatrix> {
        self.prepare(request)?.marginal_a()
    }
}

/// `(Φ ⊗ id)[ω]` via the Kraus operators of a CP map Φ.
pub fn apply_on_a(op: &QuantumMap, omega: &BipartiteState) -> Result<BipartiteState> {
    let kraus = op.kraus_operators(CP_TOL)?;
    let d_b = omega.dim_b();
    let mut out = zeros(op.dim_out() * d_b, op.dim_out() * d_b);
    for k in &kraus {
        let ext = tensor(k, &identity(d_b));
        out += &ext * omega.joint().matrix() * ext.adjoint();
    }
    BipartiteState::new(DensityMatrix::new(out)?, op.dim_out(), d_b)
}

/// Matrix of a preparing operation in an operator basis,
/// `Φ_jl = Tr(Λ_j Φ[Λ_l])`. For trace-preserving Φ the first row is
/// `(1, 0, …, 0)`.
#[derive(Debug, Clone)]
pub struct PreparingOpMatrix {
    pub phi: DMatrix<f64>,
}

pub fn preparing_op_matrix(op: &QuantumMap, basis: &OperatorBasis) -> Result<PreparingOpMatrix> {
    if op.dim_in() != basis.dim() || op.dim_out() != basis.dim() {
        return Err(QptError::DimensionMismatch(
            "preparing_op_matrix: basis does not match the map".into(),
        ));
    }
    let n = basis.len();
    let mut phi = DMatrix::zeros(n, n);
    for l in 0..n {
        let img = op.apply(basis.element(l))?;
        for j in 0..n {
            phi[(j, l)] = trace(&(basis.element(j) * &img)).re;
        }
    }
    Ok(PreparingOpMatrix { phi })
}

/// Evaluates the correlation transformation law `Γ' = Φ · Γ` for the given
/// preparing operation: returns Γ of ω, Γ' of `(Φ_i ⊗ id)[ω]` and the Φ
/// matrix; the law is also asserted numerically.
pub fn gamma_transform_law(
    preparator: &Preparator,
    index: usize,
) -> Result<(CorrelationMatrix, CorrelationMatrix, PreparingOpMatrix)> {
    let Preparator::PreparingOps { omega, ops } = preparator else {
        return Err(QptError::InvalidArgument(
            "gamma_transform_law needs a PreparingOps preparator".into(),
        ));
    };
    let op = ops.get(index).ok_or_else(|| {
        QptError::InvalidArgument(format!("preparing-op index {index} out of range"))
    })?;
    let basis_a = OperatorBasis::standard(omega.dim_a())?;
    let basis_b = OperatorBasis::standard(omega.dim_b())?;
    let before = correlation_matrix(omega, &basis_a, &basis_b)?;
    let transformed = apply_on_a(op, omega)?;
    let after = correlation_matrix(&transformed, &basis_a, &basis_b)?;
    let phi = preparing_op_matrix(op, &basis_a)?;
    let predicted = &phi.phi * &before.gamma;
    let dev = (&after.gamma - predicted)
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    if dev > 1e-9 {
        return Err(QptError::Malformed(format!(
            "correlation transformation law violated (deviation {dev:.3e})"
        )));
    }
    Ok((before, after, phi))
}

/// Which branch of the compatibility condition matched: vanishing
/// correlations, product unitary, product unitary times SWAP, or none.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compatibility {
    CompatibleGammaZero,
    CompatibleProductU,
    CompatibleProductUSwap,
    Incompatible,
}

/// Number of operator-Schmidt coefficients above `tol` relative to the
/// largest, from the SVD of the reshuffled `d_A² × d_B²` matrix.
pub fn operator_schmidt_rank(u: &CMatrix, d_a: usize, d_b: usize, tol: f64) -> Result<usize> {
    if u.nrows() != d_a * d_b || u.ncols() != d_a * d_b {
        return Err(QptError::DimensionMismatch(format!(
            "operator_schmidt_rank: matrix is {}x{}, dims say {}",
            u.nrows(),
            u.ncols(),
            d_a * d_b
        )));
    }
    let mut r = zeros(d_a * d_a, d_b * d_b);
    for ia in 0..d_a {
        for ja in 0..d_a {
            for ib in 0..d_b {
                for jb in 0..d_b {
                    r[(ia * d_a + ja, ib * d_b + jb)] = u[(ia * d_b + ib, ja * d_b + jb)];
                }
            }
        }
    }
    let svd = r.svd(false, false);
    let max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0);
    }
    Ok(svd
        .singular_values
        .iter()
        .filter(|s| **s > tol * max)
        .count())
}

/// The preparator/process compatibility condition: either Γ = 0, or the
/// unitary factors as `U_A ⊗ U_B`, possibly followed by a SWAP.
pub fn compatibility_check(
    w: &BipartiteState,
    u: &CMatrix,
    tol: f64,
) -> Result<Compatibility> {
    let dev = linalg::unitarity_deviation(u);
    if dev > tol.max(1e-10) {
        return Err(QptError::NotUnitary { deviation: dev });
    }
    let basis_a = OperatorBasis::standard(w.dim_a())?;
    let basis_b = OperatorBasis::standard(w.dim_b())?;
    let gamma = correlation_matrix(w, &basis_a, &basis_b)?;
    if gamma.max_abs() <= tol {
        return Ok(Compatibility::CompatibleGammaZero);
    }
    let rank_tol = 1e-8;
    if operator_schmidt_rank(u, w.dim_a(), w.dim_b(), rank_tol)? == 1 {
        return Ok(Compatibility::CompatibleProductU);
    }
    if w.dim_a() == w.dim_b() {
        let u_swap = u * crate::channels::swap_unitary(w.dim_a());
        if operator_schmidt_rank(&u_swap, w.dim_a(), w.dim_b(), rank_tol)? == 1 {
            return Ok(Compatibility::CompatibleProductUSwap);
        }
    }
    Ok(Compatibility::Incompatible)
}

/// Mixed-state preparation by convex mixing of singlet-postselection
/// outputs with caller-supplied weights.
pub fn mix_singlet_postselect(
    directions: &[[f64; 3]],
    weights: &[f64],
) -> Result<BipartiteState> {
    if directions.len() != weights.len() || directions.is_empty() {
        return Err(QptError::InvalidArgument(
            "mixture needs matching, nonempty directions and weights".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| *w < 0.0) || total <= 0.0 {
        return Err(QptError::InvalidArgument(
            "mixture weights must be nonnegative with positive sum".into(),
        ));
    }
    let p = Preparator::SingletPostselect;
    let mut joint = zeros(4, 4);
    for (n, w) in directions.iter().zip(weights) {
        let prepared = p.prepare(&PrepRequest::Direction(*n))?;
        joint += prepared.joint().matrix().scale(w / total);
    }
    BipartiteState::new(DensityMatrix::new(joint)?, 2, 2)
}

//! The physical pipeline `E = Tr_B ∘ U ∘ P`, the CP-plus-traceless split of
//! the effective transformation, time-parametrized families from a joint
//! Hamiltonian, intermediate maps between two times, positivity domains and
//! semigroup checks.

use crate::channels::{QuantumMap, CP_TOL};
use crate::error::{QptError, Result};
use crate::linalg::{
    self, hermitian_eig, partial_trace, trace, zeros, CMatrix, CVector, Subsystem,
};
use crate::prep::{PrepRequest, Preparator};
use crate::sampling;
use crate::states::{BipartiteState, DensityMatrix};

/// A preparator together with the joint unitary that drives the evolution.
#[derive(Debug, Clone)]
pub struct DynamicsSetup {
    preparator: Preparator,
    unitary: CMatrix,
    dim_a: usize,
    dim_b: usize,
}

impl DynamicsSetup {
    pub fn new(preparator: Preparator, unitary: CMatrix) -> Result<Self> {
        let dev = linalg::unitarity_deviation(&unitary);
        if dev > 1e-10 {
            return Err(QptError::NotUnitary { deviation: dev });
        }
        let dim_b = preparator.dim_b();
        let total = unitary.nrows();
        if total % dim_b != 0 {
            return Err(QptError::DimensionMismatch(format!(
                "unitary dim {total} is not a multiple of the environment dim {dim_b}"
            )));
        }
        let dim_a = total / dim_b;
        if let Some(fixed) = preparator.dim_a() {
            if fixed != dim_a {
                return Err(QptError::DimensionMismatch(format!(
                    "preparator system dim {fixed} vs unitary system dim {dim_a}"
                )));
            }
        }
        Ok(Self {
            preparator,
            unitary,
            dim_a,
            dim_b,
        })
    }

    pub fn preparator(&self) -> &Preparator {
        &self.preparator
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    /// Runs the full pipeline for one request: prepare, evolve, trace out
    /// the environment. Returns the requested input state and the output.
    pub fn effective_transform(
        &self,
        request: &PrepRequest,
    ) -> Result<(DensityMatrix, DensityMatrix)> {
        let prepared = self.preparator.prepare(request)?;
        let input = prepared.marginal_a()?;
        let evolved = &self.unitary * prepared.joint().matrix() * self.unitary.adjoint();
        let output = DensityMatrix::new(partial_trace(
            &evolved,
            self.dim_a,
            self.dim_b,
            Subsystem::A,
        )?)?;
        Ok((input, output))
    }

    /// The environment state that fixes the CP part of the split: the fixed
    /// `ξ`, the SWAP target, or the B-marginal of the underlying joint
    /// state.
    pub fn env_state(&self) -> Result<DensityMatrix> {
        match &self.preparator {
            Preparator::Factorized { env } => Ok(env.clone()),
            Preparator::SwapTarget { rho_out } => Ok(rho_out.clone()),
            Preparator::SingletPostselect => {
                BipartiteState::singlet().marginal_b()
            }
            Preparator::PreparingOps { omega, .. } => omega.marginal_b(),
        }
    }
}

/// The effective transformation written as a CP map plus a traceless,
/// possibly nonlinear remainder evaluated per input.
#[derive(Debug, Clone)]
pub struct FXiSplit {
    cp_part: QuantumMap,
    setup: DynamicsSetup,
}

impl FXiSplit {
    pub fn cp_part(&self) -> &QuantumMap {
        &self.cp_part
    }

    /// The traceless remainder `Ξ_ρ = E[ρ] - F[ρ]` for one request.
    pub fn xi(&self, request: &PrepRequest) -> Result<CMatrix> {
        let (input, output) = self.setup.effective_transform(request)?;
        Ok(output.matrix() - self.cp_part.apply(input.matrix())?)
    }
}

/// Splits the pipeline into the preparation-independent CP part, with Kraus
/// operators `√λ_ν <μ|U|ν>` over the eigenbasis of the environment state,
/// plus the per-input traceless remainder.
pub fn f_xi_split(setup: &DynamicsSetup) -> Result<FXiSplit> {
    let env = setup.env_state()?;
    let eig = hermitian_eig(env.matrix())?;
    let (d_a, d_b) = (setup.dim_a(), setup.dim_b());
    let mut kraus = Vec::new();
    for nu in 0..d_b {
        let lam = eig.eigenvalues[nu].max(0.0);
        if lam <= 1e-14 {
            continue;
        }
        let ket_nu = eig.eigenvectors.column(nu).clone_owned();
        for mu in 0..d_b {
            let bra_mu = eig.eigenvectors.column(mu).clone_owned();
            let block = env_block(setup.unitary(), d_a, d_b, &bra_mu, &ket_nu);
            kraus.push(block.scale(lam.sqrt()));
        }
    }
    let cp_part = QuantumMap::from_kraus(&kraus)?;
    Ok(FXiSplit {
        cp_part,
        setup: setup.clone(),
    })
}

/// `(I_A ⊗ <μ|) U (I_A ⊗ |ν>)`.
fn env_block(u: &CMatrix, d_a: usize, d_b: usize, mu: &CVector, nu: &CVector) -> CMatrix {
    let mut block = zeros(d_a, d_a);
    for a in 0..d_a {
        for ap in 0..d_a {
            let mut s = num_complex::Complex64::default();
            for b in 0..d_b {
                for bp in 0..d_b {
                    s += mu[b].conj() * u[(a * d_b + b, ap * d_b + bp)] * nu[bp];
                }
            }
            block[(a, ap)] = s;
        }
    }
    block
}

/// Reduced dynamics `E_t = Tr_B[U_t (ρ ⊗ ξ) U_t†]` generated by a joint
/// Hamiltonian (ħ = 1) with a factorized initial preparation.
#[derive(Debug, Clone)]
pub struct TimeFamily {
    hamiltonian: CMatrix,
    env: DensityMatrix,
    dim_a: usize,
    dim_b: usize,
    // eigendecomposition of H, for the exact exponential
    eig_values: Vec<f64>,
    eig_vectors: CMatrix,
}

impl TimeFamily {
    pub fn new(hamiltonian: CMatrix, env: DensityMatrix) -> Result<Self> {
        let eig = hermitian_eig(&hamiltonian)?;
        let total = hamiltonian.nrows();
        let dim_b = env.dim();
        if total % dim_b != 0 {
            return Err(QptError::DimensionMismatch(format!(
                "Hamiltonian dim {total} is not a multiple of the environment dim {dim_b}"
            )));
        }
        Ok(Self {
            hamiltonian,
            env,
            dim_a: total / dim_b,
            dim_b,
            eig_values: eig.eigenvalues,
            eig_vectors: eig.eigenvectors,
        })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn env(&self) -> &DensityMatrix {
        &self.env
    }

    /// `U_t = exp(-i H t)` by eigendecomposition.
    pub fn unitary_at(&self, t: f64) -> CMatrix {
        let d = self.hamiltonian.nrows();
        let mut diag = zeros(d, d);
        for (k, &lam) in self.eig_values.iter().enumerate() {
            diag[(k, k)] = num_complex::Complex64::new(0.0, -lam * t).exp();
        }
        &self.eig_vectors * diag * self.eig_vectors.adjoint()
    }

    /// The channel at time t, built from the Kraus operators of the
    /// dilation; CP by construction.
    pub fn at(&self, t: f64) -> Result<QuantumMap> {
        let u_t = self.unitary_at(t);
        let eig = hermitian_eig(self.env.matrix())?;
        let mut kraus = Vec::new();
        for nu in 0..self.dim_b {
            let lam = eig.eigenvalues[nu].max(0.0);
            if lam <= 1e-14 {
                continue;
            }
            let ket_nu = eig.eigenvectors.column(nu).clone_owned();
            for mu in 0..self.dim_b {
                let bra_mu = eig.eigenvectors.column(mu).clone_owned();
                kraus.push(env_block(&u_t, self.dim_a, self.dim_b, &bra_mu, &ket_nu).scale(lam.sqrt()));
            }
        }
        QuantumMap::from_kraus(&kraus)
    }
}

/// The evolution between two times, `E_{t1,t2} = E_{t2} ∘ E_{t1}⁻¹`:
/// linear, trace- and Hermiticity-preserving, but not necessarily CP.
pub fn intermediate_map(e1: &QuantumMap, e2: &QuantumMap) -> Result<QuantumMap> {
    let inv = e1.inverse().map_err(|e| match e {
        QptError::NotInvertible(msg) => {
            QptError::NotInvertible(format!("earlier-time map not invertible: {msg}"))
        }
        other => other,
    })?;
    e2.compose(&inv)
}

/// How inputs for a positivity scan are chosen.
#[derive(Debug, Clone)]
pub enum SamplingSpec {
    Explicit(Vec<DensityMatrix>),
    RandomPure { count: usize, seed: u64 },
    RandomMixed { count: usize, seed: u64 },
    /// Qubit states with Bloch norm exactly `radius`.
    BlochShell { count: usize, radius: f64, seed: u64 },
    /// Qubit states with Bloch norm at most `radius`.
    BlochBall { count: usize, radius: f64, seed: u64 },
    /// Images of seeded random states under a reference map; scans the
    /// physically accessible subset `E[S(H)]`.
    ImagesOf { map: Box<QuantumMap>, count: usize, seed: u64 },
}

/// Outcome of sampling the positivity domain of a linear map.
#[derive(Debug, Clone)]
pub struct PositivityReport {
    pub tested: usize,
    pub violating: usize,
    pub worst_eigenvalue: f64,
    pub witnesses: Vec<DensityMatrix>,
    pub seed: Option<u64>,
}

/// Counts sampled inputs whose image has an eigenvalue below `-tol`.
pub fn positivity_scan(
    m: &QuantumMap,
    spec: &SamplingSpec,
    tol: f64,
) -> Result<PositivityReport> {
    let (states, seed): (Vec<DensityMatrix>, Option<u64>) = match spec {
        SamplingSpec::Explicit(list) => (list.clone(), None),
        SamplingSpec::RandomPure { count, seed } => {
            let mut rng = sampling::rng_from_seed(*seed);
            (
                (0..*count)
                    .map(|_| sampling::random_pure_state(m.dim_in(), &mut rng))
                    .collect(),
                Some(*seed),
            )
        }
        SamplingSpec::RandomMixed { count, seed } => {
            let mut rng = sampling::rng_from_seed(*seed);
            (
                (0..*count)
                    .map(|_| sampling::random_mixed_state(m.dim_in(), &mut rng))
                    .collect(),
                Some(*seed),
            )
        }
        SamplingSpec::BlochShell { count, radius, seed } => {
            let mut rng = sampling::rng_from_seed(*seed);
            (
                (0..*count)
                    .map(|_| sampling::bloch_shell_state(*radius, &mut rng))
                    .collect(),
                Some(*seed),
            )
        }
        SamplingSpec::BlochBall { count, radius, seed } => {
            let mut rng = sampling::rng_from_seed(*seed);
            (
                (0..*count)
                    .map(|_| sampling::bloch_ball_state(*radius, &mut rng))
                    .collect(),
                Some(*seed),
            )
        }
        SamplingSpec::ImagesOf { map, count, seed } => {
            let mut rng = sampling::rng_from_seed(*seed);
            let mut states = Vec::with_capacity(*count);
            for _ in 0..*count {
                let rho = sampling::random_mixed_state(map.dim_in(), &mut rng);
                states.push(map.apply_state(&rho)?);
            }
            (states, Some(*seed))
        }
    };
    let mut violating = 0usize;
    let mut worst = f64::INFINITY;
    let mut witnesses = Vec::new();
    for rho in &states {
        let image = m.apply(rho.matrix())?;
        let min = linalg::min_eigenvalue(&image)?;
        worst = worst.min(min);
        if min < -tol {
            violating += 1;
            witnesses.push(rho.clone());
        }
    }
    Ok(PositivityReport {
        tested: states.len(),
        violating,
        worst_eigenvalue: if states.is_empty() { 0.0 } else { worst },
        witnesses,
        seed,
    })
}

/// Per-pair outcome of the semigroup identity `E_{t+s} = E_t ∘ E_s`.
#[derive(Debug, Clone, Copy)]
pub struct SemigroupVerdict {
    pub t: f64,
    pub s: f64,
    pub deviation: f64,
    pub pass: bool,
}

pub fn semigroup_check<F>(
    family: F,
    pairs: &[(f64, f64)],
    tol: f64,
) -> Result<Vec<SemigroupVerdict>>
where
    F: Fn(f64) -> Result<QuantumMap>,
{
    let mut verdicts = Vec::with_capacity(pairs.len());
    for &(t, s) in pairs {
        let combined = family(t + s)?;
        let composed = family(t)?.compose(&family(s)?)?;
        let deviation = linalg::max_abs_diff(combined.superop(), composed.superop());
        verdicts.push(SemigroupVerdict {
            t,
            s,
            deviation,
            pass: deviation <= tol,
        });
    }
    Ok(verdicts)
}

/// Outcome of the state-space-image heuristic: a CP trace-preserving map
/// whose image is the whole state space must be unitary.
#[derive(Debug, Clone)]
pub struct UnitaryImageReport {
    pub unitary_like: bool,
    pub choi_rank: usize,
    /// A pure input whose image lost purity, when one was found.
    pub witness: Option<(DensityMatrix, f64)>,
}

/// Samples pure states and checks purity preservation; cross-validates the
/// unitary verdict against Choi rank 1.
pub fn unitary_image_test(
    m: &QuantumMap,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<UnitaryImageReport> {
    let verdict = m.is_cp(CP_TOL)?;
    if !verdict.is_cp {
        return Err(QptError::NotCompletelyPositive {
            min_eig: verdict.min_choi_eig,
        });
    }
    let mut rng = sampling::rng_from_seed(seed);
    let mut witness: Option<(DensityMatrix, f64)> = None;
    for _ in 0..samples {
        let rho = sampling::random_pure_state(m.dim_in(), &mut rng);
        let out = m.apply(rho.matrix())?;
        let purity = trace(&(&out * &out)).re;
        if purity < 1.0 - tol {
            witness = Some((rho, purity));
            break;
        }
    }
    let choi_rank = m.choi_rank(1e-8)?;
    Ok(UnitaryImageReport {
        unitary_like: witness.is_none() && choi_rank == 1,
        choi_rank,
        witness,
    })
}

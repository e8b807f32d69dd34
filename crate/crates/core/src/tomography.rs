//! Linear-inversion process tomography, finite-statistics simulation of the
//! measured frequencies, and diagnosis of non-CP reconstructions.

use num_complex::Complex64;

use crate::channels::{NcpDecomposition, QuantumMap};
use crate::error::{QptError, Result};
use crate::linalg::{self, cr, identity, vectorize, CMatrix};
use crate::prep::{compatibility_check, Compatibility, Preparator};
use crate::sampling::{child_seed, rng_from_seed};
use crate::states::{basis_ket, pauli, projector, DensityMatrix};

use rand_distr::{Binomial, Distribution};

/// Spanning-set conditioning above which the inversion is refused.
pub const SPANNING_COND: f64 = 1e8;

/// Raw tallies of a Pauli-frame measurement on one output state:
/// `tallies[k] = [plus, minus]` for the σ_{k+1} axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counts {
    pub shots: u64,
    pub tallies: [[u64; 2]; 3],
}

/// One tomography record: the requested input, the (estimated or exact)
/// output operator, and the raw counts when the output came from finite
/// statistics. The output is kept as a plain matrix on purpose — empirical
/// estimates may fail positivity and must be recorded as-is.
#[derive(Debug, Clone)]
pub struct Assignment {
    pub input: DensityMatrix,
    pub output: CMatrix,
    pub counts: Option<Counts>,
}

/// The spanning input set used throughout for qubits:
/// `|0><0|, |1><1|, |+><+|, |+i><+i|`.
pub fn default_inputs(dim: usize) -> Result<Vec<DensityMatrix>> {
    if dim != 2 {
        return Err(QptError::InvalidArgument(format!(
            "default input set is only defined for qubits, got dim {dim}"
        )));
    }
    let plus = {
        let mut v = basis_ket(2, 0);
        v[1] = cr(1.0);
        v.scale(f64::sqrt(0.5))
    };
    let plus_i = {
        let mut v = basis_ket(2, 0);
        v[1] = Complex64::new(0.0, 1.0);
        v.scale(f64::sqrt(0.5))
    };
    Ok(vec![
        DensityMatrix::new(projector(&basis_ket(2, 0)))?,
        DensityMatrix::new(projector(&basis_ket(2, 1)))?,
        DensityMatrix::new(projector(&plus))?,
        DensityMatrix::new(projector(&plus_i))?,
    ])
}

/// What the reconstruction looks like and how it was obtained.
#[derive(Debug, Clone)]
pub struct TomographyReport {
    pub reconstructed: QuantumMap,
    pub choi_spectrum: Vec<f64>,
    pub min_choi_eig: f64,
    pub is_cp: bool,
    pub tp_deviation: f64,
    pub herm_deviation: f64,
    pub ncp: Option<NcpDecomposition>,
    pub condition_number: f64,
    /// Max-abs mismatch of the fitted map against the recorded outputs; a
    /// large residual with exact outputs signals input-dependent (nonlinear)
    /// dynamics rather than noise.
    pub residual: f64,
    pub tolerance: f64,
    pub seed: Option<u64>,
    pub shot_count: Option<u64>,
}

/// Least-squares linear inversion of the superoperator from input/output
/// pairs. Requires the inputs to span operator space with condition below
/// [`SPANNING_COND`].
pub fn linear_inversion(
    assignments: &[Assignment],
    tol: f64,
    seed: Option<u64>,
) -> Result<TomographyReport> {
    if assignments.is_empty() {
        return Err(QptError::InvalidArgument(
            "no assignments provided".into(),
        ));
    }
    let dim = assignments[0].input.dim();
    let d2 = dim * dim;
    if assignments.len() < d2 {
        return Err(QptError::SpanningDeficient {
            condition: f64::INFINITY,
        });
    }
    let n = assignments.len();
    let mut m_in = linalg::zeros(d2, n);
    let mut m_out = linalg::zeros(d2, n);
    for (k, a) in assignments.iter().enumerate() {
        if a.input.dim() != dim || a.output.nrows() != dim || a.output.ncols() != dim {
            return Err(QptError::DimensionMismatch(
                "assignments have mixed dimensions".into(),
            ));
        }
        m_in.set_column(k, &vectorize(a.input.matrix()));
        m_out.set_column(k, &vectorize(&a.output));
    }
    let condition_number = linalg::condition_estimate(&m_in);
    if !condition_number.is_finite() || condition_number > SPANNING_COND {
        return Err(QptError::SpanningDeficient {
            condition: condition_number,
        });
    }
    // S M_in = M_out; solve the transposed system M_inᵀ Sᵀ = M_outᵀ, via
    // normal equations when overdetermined.
    let superop_t = if n == d2 {
        linalg::solve_linear(&m_in.transpose(), &m_out.transpose())?
    } else {
        let at = m_in.transpose();
        let a = at.adjoint() * &at;
        let b = at.adjoint() * m_out.transpose();
        linalg::solve_linear(&a, &b)?
    };
    let reconstructed = QuantumMap::from_superop(superop_t.transpose(), dim, dim)?;

    let mut residual = 0.0f64;
    for a in assignments {
        let image = reconstructed.apply(a.input.matrix())?;
        residual = residual.max(linalg::max_abs_diff(&image, &a.output));
    }

    let choi_spectrum = reconstructed.choi_spectrum()?;
    let verdict = reconstructed.is_cp(tol)?;
    let ncp = if verdict.is_cp {
        None
    } else {
        Some(reconstructed.ncp_decompose()?)
    };
    let shot_count = assignments.iter().find_map(|a| a.counts.map(|c| c.shots));
    Ok(TomographyReport {
        min_choi_eig: verdict.min_choi_eig,
        is_cp: verdict.is_cp,
        tp_deviation: reconstructed.tp_deviation(),
        herm_deviation: reconstructed.hermiticity_deviation(),
        choi_spectrum,
        ncp,
        condition_number,
        residual,
        tolerance: tol,
        seed,
        shot_count,
        reconstructed,
    })
}

/// Noiseless assignments: exact outputs of the map on the given inputs.
pub fn exact_assignments(
    m: &QuantumMap,
    inputs: &[DensityMatrix],
) -> Result<Vec<Assignment>> {
    inputs
        .iter()
        .map(|rho| {
            Ok(Assignment {
                input: rho.clone(),
                output: m.apply(rho.matrix())?,
                counts: None,
            })
        })
        .collect()
}

/// Simulates Pauli-frame measurement statistics of the qubit outputs and
/// replaces each output with the empirical estimate
/// `ρ̂ = (I + Σ_k f_k σ_k)/2`. The estimate is deliberately not projected
/// back to positivity. Deterministic in `seed`; each input uses an
/// independent child stream.
pub fn simulate_counts(
    m: &QuantumMap,
    inputs: &[DensityMatrix],
    shots: u64,
    seed: u64,
) -> Result<Vec<Assignment>> {
    if m.dim_out() != 2 {
        return Err(QptError::InvalidArgument(
            "count simulation is only defined for qubit outputs".into(),
        ));
    }
    if shots == 0 {
        return Err(QptError::InvalidArgument("shots must be positive".into()));
    }
    let mut assignments = Vec::with_capacity(inputs.len());
    for (idx, rho) in inputs.iter().enumerate() {
        let exact = m.apply(rho.matrix())?;
        let mut rng = rng_from_seed(child_seed(seed, idx as u64));
        let mut tallies = [[0u64; 2]; 3];
        let mut estimate = identity(2).scale(0.5);
        for k in 0..3 {
            let s = pauli(k + 1);
            let mean = linalg::trace(&(&exact * &s)).re;
            let p = ((1.0 + mean) / 2.0).clamp(0.0, 1.0);
            let plus = Binomial::new(shots, p)
                .map_err(|e| QptError::InvalidArgument(format!("binomial: {e}")))?
                .sample(&mut rng);
            tallies[k] = [plus, shots - plus];
            let f = 2.0 * (plus as f64) / (shots as f64) - 1.0;
            estimate += s.scale(0.5 * f);
        }
        assignments.push(Assignment {
            input: rho.clone(),
            output: estimate,
            counts: Some(Counts { shots, tallies }),
        });
    }
    Ok(assignments)
}

/// How a non-CP reconstruction should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagnosis {
    /// The reconstruction is CP: an ordinary channel.
    PhysicalChannel,
    /// Finite statistics on a compatible preparation; the negativity is
    /// consistent with shot noise.
    FiniteSampleArtifact,
    /// Exact data from an incompatible preparation: genuine correlation
    /// effect.
    CorrelatedPreparator,
    /// The available evidence does not single out a cause.
    Ambiguous,
}

/// Attributes the (non-)CP character of a reconstruction to its plausible
/// cause, given whether the data used finite counts and whether the
/// preparation stage was compatible with an uncorrelated description.
pub fn diagnose(report: &TomographyReport, compatible: Option<bool>) -> Diagnosis {
    if report.is_cp {
        return Diagnosis::PhysicalChannel;
    }
    let finite = report.shot_count.is_some();
    match (finite, compatible) {
        (false, Some(false)) => Diagnosis::CorrelatedPreparator,
        (true, Some(true)) => Diagnosis::FiniteSampleArtifact,
        _ => Diagnosis::Ambiguous,
    }
}

/// Whether the preparation stage of a setup admits an uncorrelated
/// description. Factorized and swap-target preparators always do;
/// preparing-operation families are settled by the joint-state
/// compatibility test. Singlet postselection produces an input-dependent
/// environment outside the preparing-operation form and is never
/// compatible.
pub fn preparator_compatibility(
    preparator: &Preparator,
    unitary: &CMatrix,
    tol: f64,
) -> Result<bool> {
    match preparator {
        Preparator::Factorized { .. } | Preparator::SwapTarget { .. } => Ok(true),
        Preparator::SingletPostselect => Ok(false),
        Preparator::PreparingOps { omega, .. } => Ok(!matches!(
            compatibility_check(omega, unitary, tol)?,
            Compatibility::Incompatible
        )),
    }
}

/// Scenario-level verdict: reads the preparation stage of the setup and
/// classifies the reconstruction with [`diagnose`].
pub fn diagnose_scenario(
    report: &TomographyReport,
    setup: &crate::dynamics::DynamicsSetup,
) -> Result<Diagnosis> {
    let compatible =
        preparator_compatibility(setup.preparator(), setup.unitary(), report.tolerance)?;
    Ok(diagnose(report, Some(compatible)))
}

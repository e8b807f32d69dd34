//! Executes scenarios and assembles the JSON payload plus the plain-text
//! report body.

use std::fmt::Write as _;

use serde_json::{json, Value};

use qpt_core::channels::{depolarizing, swap_unitary, CP_TOL};
use qpt_core::dynamics::{
    f_xi_split, intermediate_map, positivity_scan, semigroup_check, DynamicsSetup,
    PositivityReport, SamplingSpec, TimeFamily,
};
use qpt_core::json::{map_to_json, matrix_to_json};
use qpt_core::prep::{PrepRequest, Preparator};
use qpt_core::states::{basis_ket, DensityMatrix};
use qpt_core::tomography::{
    default_inputs, diagnose_scenario, linear_inversion, simulate_counts, Assignment,
    Diagnosis, TomographyReport,
};
use qpt_core::{QptError, QuantumMap};

use crate::scenario::{Evolution, Scenario, ScenarioSpec};

#[derive(Debug)]
pub enum RunError {
    /// Problems with the scenario definition itself (exit 2).
    Definition(String),
    /// Failures of the numerics on a well-formed scenario (exit 3).
    Numerical(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Definition(msg) => write!(f, "scenario error: {msg}"),
            Self::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

fn lift(e: QptError) -> RunError {
    match e {
        QptError::Singular { .. }
        | QptError::NotInvertible(_)
        | QptError::SpanningDeficient { .. }
        | QptError::NotCompletelyPositive { .. } => RunError::Numerical(e.to_string()),
        other => RunError::Definition(other.to_string()),
    }
}

pub struct RunOutput {
    pub payload: Value,
    pub text: String,
}

pub fn run_scenario(scenario: &Scenario) -> Result<RunOutput, RunError> {
    match &scenario.spec {
        ScenarioSpec::BuiltIn(tag) => run_builtin(tag, scenario),
        ScenarioSpec::Custom {
            preparator,
            evolution,
            inputs,
            shots,
        } => run_custom(scenario, preparator, evolution, inputs, *shots),
    }
}

fn run_builtin(tag: &str, scenario: &Scenario) -> Result<RunOutput, RunError> {
    match tag {
        "perfect-not-swap" => perfect_not(scenario, false),
        "singlet-postselect-not" => perfect_not(scenario, true),
        "depolarizing-intermediate" => depolarizing_intermediate(scenario),
        "finite-stats" => finite_stats(scenario),
        "semigroup-demo" => semigroup_demo(scenario),
        other => Err(RunError::Definition(format!("unknown builtin '{other}'"))),
    }
}

/// Singlet postselection through SWAP: exact tomography over four Bloch
/// directions reconstructs the NOT map. Optionally appends the CP/remainder
/// split of the same setup.
fn perfect_not(scenario: &Scenario, with_split: bool) -> Result<RunOutput, RunError> {
    let setup = DynamicsSetup::new(Preparator::SingletPostselect, swap_unitary(2))
        .map_err(lift)?;
    let directions = [
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
    ];
    let mut assignments = Vec::new();
    for n in directions {
        let (input, output) = setup
            .effective_transform(&PrepRequest::Direction(n))
            .map_err(lift)?;
        assignments.push(Assignment {
            input,
            output: output.matrix().clone(),
            counts: None,
        });
    }
    let report = linear_inversion(&assignments, scenario.tolerance, None).map_err(lift)?;
    let diagnosis = diagnose_scenario(&report, &setup).map_err(lift)?;

    let mut payload = tomography_payload(&report, diagnosis)?;
    let mut text = tomography_text(scenario, &report, diagnosis)?;
    if with_split {
        let split = f_xi_split(&setup).map_err(lift)?;
        let xi = split
            .xi(&PrepRequest::Direction([0.0, 0.0, 1.0]))
            .map_err(lift)?;
        payload["split"] = json!({
            "cpPart": map_to_json(split.cp_part()),
            "xiPlusZ": matrix_to_json(&xi),
        });
        let _ = writeln!(
            text,
            "cp part of the split is the full contraction; remainder at +z has max |entry| {:.6}",
            qpt_core::linalg::max_abs(&xi)
        );
    }
    Ok(RunOutput { payload, text })
}

/// `E_{1/3} ∘ E_{-1/3}⁻¹ = E_{-1}`; the inversion stage is fine on the
/// radius-1/3 ball and fails on the full Bloch sphere.
fn depolarizing_intermediate(scenario: &Scenario) -> Result<RunOutput, RunError> {
    let e1 = depolarizing(-1.0 / 3.0);
    let e2 = depolarizing(1.0 / 3.0);
    let inter = intermediate_map(&e1, &e2).map_err(lift)?;
    let deviation = qpt_core::linalg::max_abs_diff(inter.superop(), depolarizing(-1.0).superop());
    let inverse_stage = e1.inverse().map_err(lift)?;
    let inside = positivity_scan(
        &inverse_stage,
        &SamplingSpec::BlochBall {
            count: 500,
            radius: 1.0 / 3.0,
            seed: scenario.seed,
        },
        scenario.tolerance,
    )
    .map_err(lift)?;
    let shell = positivity_scan(
        &inverse_stage,
        &SamplingSpec::BlochShell {
            count: 100,
            radius: 1.0,
            seed: scenario.seed,
        },
        scenario.tolerance,
    )
    .map_err(lift)?;

    let payload = json!({
        "intermediate": map_to_json(&inter),
        "matchesNotWithin": deviation,
        "choiSpectrum": inter.choi_spectrum().map_err(lift)?,
        "scanBallThird": scan_json(&inside),
        "scanShellOne": scan_json(&shell),
    });
    let mut text = String::new();
    let _ = writeln!(text, "scenario: {}", scenario.name);
    let _ = writeln!(
        text,
        "intermediate map equals the NOT extension within {deviation:.3e}"
    );
    let _ = writeln!(
        text,
        "inversion stage: {}/{} violations on |r| <= 1/3, {}/{} on |r| = 1",
        inside.violating, inside.tested, shell.violating, shell.tested
    );
    append_qubit_affine(&mut text, &inter)?;
    Ok(RunOutput { payload, text })
}

fn scan_json(report: &PositivityReport) -> Value {
    json!({
        "tested": report.tested,
        "violating": report.violating,
        "worstEigenvalue": report.worst_eigenvalue,
    })
}

/// Counts-based reconstruction of the boundary channel depolarizing(1):
/// small N shows negativity artifacts, which the diagnosis attributes to
/// finite statistics.
fn finite_stats(scenario: &Scenario) -> Result<RunOutput, RunError> {
    let m = depolarizing(1.0);
    let setup = DynamicsSetup::new(
        Preparator::Factorized {
            env: DensityMatrix::maximally_mixed(2),
        },
        qpt_core::linalg::identity(4),
    )
    .map_err(lift)?;
    let inputs = default_inputs(2).map_err(lift)?;
    let shots = 1_000;
    let assignments = simulate_counts(&m, &inputs, shots, scenario.seed).map_err(lift)?;
    let report =
        linear_inversion(&assignments, scenario.tolerance, Some(scenario.seed)).map_err(lift)?;
    let diagnosis = diagnose_scenario(&report, &setup).map_err(lift)?;
    let payload = tomography_payload(&report, diagnosis)?;
    let text = tomography_text(scenario, &report, diagnosis)?;
    Ok(RunOutput { payload, text })
}

/// The partial-swap family: CP at every time yet no two-parameter
/// semigroup; a pair grid exposes the violation.
fn semigroup_demo(scenario: &Scenario) -> Result<RunOutput, RunError> {
    let tf = TimeFamily::new(
        swap_unitary(2),
        DensityMatrix::from_pure(&basis_ket(2, 0)),
    )
    .map_err(lift)?;
    let grid: Vec<f64> = (1..=4).map(|k| 0.3 * k as f64).collect();
    let pairs: Vec<(f64, f64)> = grid
        .iter()
        .flat_map(|&t| grid.iter().map(move |&s| (t, s)))
        .collect();
    let verdicts = semigroup_check(|t| tf.at(t), &pairs, 1e-6).map_err(lift)?;
    let any_violation = verdicts.iter().any(|v| !v.pass);
    let payload = json!({
        "pairs": verdicts
            .iter()
            .map(|v| json!({"t": v.t, "s": v.s, "deviation": v.deviation, "pass": v.pass}))
            .collect::<Vec<_>>(),
        "anyViolation": any_violation,
    });
    let mut text = String::new();
    let _ = writeln!(text, "scenario: {}", scenario.name);
    let _ = writeln!(
        text,
        "semigroup identity violated for {}/{} (t, s) pairs",
        verdicts.iter().filter(|v| !v.pass).count(),
        verdicts.len()
    );
    for v in verdicts.iter().filter(|v| !v.pass).take(3) {
        let _ = writeln!(
            text,
            "  t = {:.2}, s = {:.2}: deviation {:.3e}",
            v.t, v.s, v.deviation
        );
    }
    Ok(RunOutput { payload, text })
}

fn run_custom(
    scenario: &Scenario,
    preparator: &Preparator,
    evolution: &Evolution,
    inputs: &[DensityMatrix],
    shots: Option<u64>,
) -> Result<RunOutput, RunError> {
    match evolution {
        Evolution::Unitary(u) => {
            let setup = DynamicsSetup::new(preparator.clone(), u.clone()).map_err(lift)?;
            let requests = build_requests(preparator, inputs, setup.dim_a())?;
            let mut assignments = Vec::new();
            for req in &requests {
                let (input, output) = setup.effective_transform(req).map_err(lift)?;
                assignments.push(Assignment {
                    input,
                    output: output.matrix().clone(),
                    counts: None,
                });
            }
            if let Some(n) = shots {
                // re-measure each exact output with finite statistics; the
                // constant replay map lets simulate_counts see the true
                // per-request output even for nonlinear preparations
                let mut measured = Vec::new();
                for (k, a) in assignments.iter().enumerate() {
                    let single = simulate_counts(
                        &pinned_map(a)?,
                        std::slice::from_ref(&a.input),
                        n,
                        qpt_core::sampling::child_seed(scenario.seed, k as u64),
                    )
                    .map_err(lift)?;
                    measured.extend(single);
                }
                assignments = measured;
            }
            let seed = shots.map(|_| scenario.seed);
            let report =
                linear_inversion(&assignments, scenario.tolerance, seed).map_err(lift)?;
            let diagnosis = diagnose_scenario(&report, &setup).map_err(lift)?;
            let payload = tomography_payload(&report, diagnosis)?;
            let text = tomography_text(scenario, &report, diagnosis)?;
            Ok(RunOutput { payload, text })
        }
        Evolution::Hamiltonian {
            hamiltonian,
            env,
            times,
        } => {
            if !matches!(preparator, Preparator::Factorized { .. }) {
                return Err(RunError::Definition(
                    "hamiltonian evolution requires a factorized preparator".into(),
                ));
            }
            let tf = TimeFamily::new(hamiltonian.clone(), env.clone()).map_err(lift)?;
            let mut stages = Vec::new();
            let mut text = String::new();
            let _ = writeln!(text, "scenario: {}", scenario.name);
            for w in times.windows(2) {
                let e1 = tf.at(w[0]).map_err(lift)?;
                let e2 = tf.at(w[1]).map_err(lift)?;
                let inter = intermediate_map(&e1, &e2).map_err(lift)?;
                let verdict = inter.is_cp(CP_TOL).map_err(lift)?;
                let _ = writeln!(
                    text,
                    "intermediate [{:.3}, {:.3}]: min Choi eigenvalue {:+.6e} ({})",
                    w[0],
                    w[1],
                    verdict.min_choi_eig,
                    if verdict.is_cp { "CP" } else { "NCP" }
                );
                stages.push(json!({
                    "from": w[0],
                    "to": w[1],
                    "map": map_to_json(&inter),
                    "minChoiEig": verdict.min_choi_eig,
                    "cp": verdict.is_cp,
                }));
            }
            let pairs: Vec<(f64, f64)> = times
                .iter()
                .flat_map(|&t| times.iter().map(move |&s| (t, s)))
                .collect();
            let verdicts = semigroup_check(|t| tf.at(t), &pairs, 1e-6).map_err(lift)?;
            let violations = verdicts.iter().filter(|v| !v.pass).count();
            let _ = writeln!(
                text,
                "semigroup identity violated for {}/{} pairs",
                violations,
                verdicts.len()
            );
            let payload = json!({
                "intermediates": stages,
                "semigroupViolations": violations,
                "semigroupPairs": verdicts.len(),
            });
            Ok(RunOutput { payload, text })
        }
    }
}

/// A rank-anything map that reproduces one exact assignment, used to
/// re-sample a single output with counts. The measurement only sees the
/// output state, so a constant map suffices.
fn pinned_map(a: &Assignment) -> Result<QuantumMap, RunError> {
    let rho = DensityMatrix::new(a.output.clone())
        .map_err(|e| RunError::Numerical(format!("output not measurable as a state: {e}")))?;
    // E[σ] = Tr(σ) ρ_out : CP, TP, constant on states
    let d = rho.dim();
    let mut superop = qpt_core::linalg::zeros(d * d, d * d);
    let v = qpt_core::linalg::vectorize(rho.matrix());
    for i in 0..d {
        for r in 0..d * d {
            superop[(r, i * d + i)] = v[r];
        }
    }
    QuantumMap::from_superop(superop, d, d).map_err(lift)
}

fn build_requests(
    preparator: &Preparator,
    inputs: &[DensityMatrix],
    dim_a: usize,
) -> Result<Vec<PrepRequest>, RunError> {
    match preparator {
        Preparator::Factorized { .. } | Preparator::SwapTarget { .. } => {
            let states = if inputs.is_empty() {
                default_inputs(dim_a).map_err(lift)?
            } else {
                inputs.to_vec()
            };
            Ok(states.into_iter().map(PrepRequest::State).collect())
        }
        Preparator::SingletPostselect => Ok([
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
        ]
        .into_iter()
        .map(PrepRequest::Direction)
        .collect()),
        Preparator::PreparingOps { ops, .. } => {
            if ops.len() < dim_a * dim_a {
                return Err(RunError::Definition(format!(
                    "preparing-ops scenario needs at least {} operations to span, got {}",
                    dim_a * dim_a,
                    ops.len()
                )));
            }
            Ok((0..ops.len()).map(PrepRequest::OpIndex).collect())
        }
    }
}

fn tomography_payload(
    report: &TomographyReport,
    diagnosis: Diagnosis,
) -> Result<Value, RunError> {
    let mut payload = json!({
        "reconstructed": map_to_json(&report.reconstructed),
        "choiSpectrum": report.choi_spectrum,
        "cpVerdict": report.is_cp,
        "minChoiEig": report.min_choi_eig,
        "tpDeviation": report.tp_deviation,
        "hermDeviation": report.herm_deviation,
        "conditionNumber": report.condition_number,
        "residual": report.residual,
        "diagnosis": diagnosis_name(diagnosis),
        "shotCount": report.shot_count,
    });
    if let Some(ncp) = &report.ncp {
        payload["ncp"] = json!({
            "q": ncp.q(),
            "negativeCount": ncp.negative_part.operators.len(),
        });
    }
    Ok(payload)
}

fn diagnosis_name(d: Diagnosis) -> &'static str {
    match d {
        Diagnosis::PhysicalChannel => "PhysicalChannel",
        Diagnosis::FiniteSampleArtifact => "FiniteSampleArtifact",
        Diagnosis::CorrelatedPreparator => "CorrelatedPreparator",
        Diagnosis::Ambiguous => "Ambiguous",
    }
}

fn tomography_text(
    scenario: &Scenario,
    report: &TomographyReport,
    diagnosis: Diagnosis,
) -> Result<String, RunError> {
    let mut text = String::new();
    let _ = writeln!(text, "scenario: {}", scenario.name);
    let spectrum: Vec<String> = report
        .choi_spectrum
        .iter()
        .map(|x| format!("{x:+.6}"))
        .collect();
    let _ = writeln!(text, "choi spectrum: [{}]", spectrum.join(", "));
    let _ = writeln!(
        text,
        "verdict: {} (min Choi eigenvalue {:+.6e}); diagnosis: {}",
        if report.is_cp {
            "completely positive"
        } else {
            "not completely positive"
        },
        report.min_choi_eig,
        diagnosis_name(diagnosis)
    );
    let _ = writeln!(text, "residual: {:.3e}", report.residual);
    if let Some(n) = report.shot_count {
        let _ = writeln!(text, "shots per setting: {n}");
    }
    append_qubit_affine(&mut text, &report.reconstructed)?;
    Ok(text)
}

fn append_qubit_affine(text: &mut String, m: &QuantumMap) -> Result<(), RunError> {
    if m.dim_in() != 2 || m.dim_out() != 2 {
        return Ok(());
    }
    let (block, shift) = m.bloch_affine().map_err(lift)?;
    let _ = writeln!(text, "bloch action:");
    for i in 0..3 {
        let _ = writeln!(
            text,
            "  [{:+.6} {:+.6} {:+.6}]  +  {:+.6}",
            block[(i, 0)],
            block[(i, 1)],
            block[(i, 2)],
            shift[i]
        );
    }
    Ok(())
}

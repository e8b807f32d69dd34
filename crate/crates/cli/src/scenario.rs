//! Scenario files: either one of the built-in demonstration scenarios by
//! tag, or a custom JSON description of a preparation + dynamics setup.

use std::fmt;
use std::path::Path;

use serde_json::Value;

use qpt_core::json::{density_from_json, matrix_from_json};
use qpt_core::prep::Preparator;
use qpt_core::states::{BipartiteState, DensityMatrix};
use qpt_core::{CMatrix, QuantumMap};

pub const BUILTINS: [(&str, &str); 5] = [
    (
        "perfect-not-swap",
        "singlet postselection + SWAP tomography reconstructs the unphysical NOT map",
    ),
    (
        "singlet-postselect-not",
        "the same NOT scenario with the CP-plus-remainder split of the dynamics",
    ),
    (
        "depolarizing-intermediate",
        "intermediate map between depolarizing stages and its positivity domain",
    ),
    (
        "finite-stats",
        "finite-counts reconstruction of a unitary boundary channel",
    ),
    (
        "semigroup-demo",
        "partial-swap time family violating the semigroup identity",
    ),
];

#[derive(Debug)]
pub enum ScenarioError {
    Definition(String),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Definition(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

fn err(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Definition(msg.into())
}

/// The dynamics half of a custom scenario.
#[derive(Debug, Clone)]
pub enum Evolution {
    Unitary(CMatrix),
    Hamiltonian {
        hamiltonian: CMatrix,
        env: DensityMatrix,
        times: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub enum ScenarioSpec {
    BuiltIn(String),
    Custom {
        preparator: Preparator,
        evolution: Evolution,
        inputs: Vec<DensityMatrix>,
        shots: Option<u64>,
    },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub tolerance: f64,
    pub spec: ScenarioSpec,
    /// Canonical JSON the scenario was defined by; hashed into the report.
    pub canonical: String,
}

impl Scenario {
    pub fn builtin(tag: &str, seed: u64, tolerance: f64) -> Result<Self, ScenarioError> {
        if !BUILTINS.iter().any(|(name, _)| *name == tag) {
            return Err(err(format!(
                "unknown builtin scenario '{tag}'; run `qpt list` for the available tags"
            )));
        }
        let canonical = serde_json::to_string(&serde_json::json!({
            "builtin": tag,
            "seed": seed,
            "tolerance": tolerance,
        }))
        .expect("scenario serialization");
        Ok(Self {
            name: tag.to_string(),
            seed,
            tolerance,
            spec: ScenarioSpec::BuiltIn(tag.to_string()),
            canonical,
        })
    }

    /// Loads a scenario from a builtin tag or a file path, applying the
    /// seed/tolerance overrides.
    pub fn load(
        reference: &str,
        seed_override: Option<u64>,
        tol_override: Option<f64>,
    ) -> Result<Self, ScenarioError> {
        if BUILTINS.iter().any(|(name, _)| *name == reference) {
            return Self::builtin(
                reference,
                seed_override.unwrap_or(0),
                tol_override.unwrap_or(1e-9),
            );
        }
        let path = Path::new(reference);
        if !path.exists() {
            return Err(err(format!(
                "'{reference}' is neither a builtin tag nor an existing file"
            )));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(format!("{reference}: {e}")))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| {
            err(format!(
                "{reference}:{}:{}: invalid JSON: {e}",
                e.line(),
                e.column()
            ))
        })?;
        Self::from_value(&value, seed_override, tol_override)
    }

    fn from_value(
        value: &Value,
        seed_override: Option<u64>,
        tol_override: Option<f64>,
    ) -> Result<Self, ScenarioError> {
        let obj = value
            .as_object()
            .ok_or_else(|| err("scenario: top level must be an object"))?;
        let seed = seed_override
            .or_else(|| obj.get("seed").and_then(Value::as_u64))
            .unwrap_or(0);
        let tolerance = tol_override
            .or_else(|| obj.get("tolerance").and_then(Value::as_f64))
            .unwrap_or(1e-9);
        if let Some(tag) = obj.get("builtin") {
            let tag = tag
                .as_str()
                .ok_or_else(|| err("scenario: \"builtin\" must be a string"))?;
            return Self::builtin(tag, seed, tolerance);
        }

        let name = obj
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| err("scenario: missing \"name\""))?
            .to_string();
        let preparator = parse_preparator(
            obj.get("preparator")
                .ok_or_else(|| err("scenario: missing \"preparator\""))?,
        )?;
        let evolution = parse_evolution(obj)?;
        let inputs = match obj.get("inputs") {
            None => Vec::new(),
            Some(list) => list
                .as_array()
                .ok_or_else(|| err("scenario: \"inputs\" must be an array"))?
                .iter()
                .map(|v| density_from_json(v).map_err(|e| err(format!("inputs: {e}"))))
                .collect::<Result<_, _>>()?,
        };
        let shots = obj.get("shots").and_then(Value::as_u64);
        if matches!(shots, Some(0)) {
            return Err(err("scenario: \"shots\" must be positive when given"));
        }

        let mut canonical_value = value.clone();
        canonical_value["seed"] = serde_json::json!(seed);
        canonical_value["tolerance"] = serde_json::json!(tolerance);
        let canonical =
            serde_json::to_string(&canonical_value).expect("scenario serialization");
        Ok(Self {
            name,
            seed,
            tolerance,
            spec: ScenarioSpec::Custom {
                preparator,
                evolution,
                inputs,
                shots,
            },
            canonical,
        })
    }
}

fn parse_preparator(value: &Value) -> Result<Preparator, ScenarioError> {
    let obj = value
        .as_object()
        .ok_or_else(|| err("preparator: must be an object"))?;
    let kind = obj
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| err("preparator: missing \"type\""))?;
    match kind {
        "factorized" => {
            let env = density_from_json(
                obj.get("env")
                    .ok_or_else(|| err("preparator: factorized needs \"env\""))?,
            )
            .map_err(|e| err(format!("preparator env: {e}")))?;
            Ok(Preparator::Factorized { env })
        }
        "swap-target" => {
            let rho_out = density_from_json(
                obj.get("rhoOut")
                    .ok_or_else(|| err("preparator: swap-target needs \"rhoOut\""))?,
            )
            .map_err(|e| err(format!("preparator rhoOut: {e}")))?;
            Ok(Preparator::SwapTarget { rho_out })
        }
        "singlet-postselect" => Ok(Preparator::SingletPostselect),
        "preparing-ops" => {
            let omega = density_from_json(
                obj.get("omega")
                    .ok_or_else(|| err("preparator: preparing-ops needs \"omega\""))?,
            )
            .map_err(|e| err(format!("preparator omega: {e}")))?;
            let dim_a = obj
                .get("dimA")
                .and_then(Value::as_u64)
                .ok_or_else(|| err("preparator: preparing-ops needs \"dimA\""))?
                as usize;
            if dim_a == 0 || omega.dim() % dim_a != 0 {
                return Err(err(format!(
                    "preparator: dimA {dim_a} does not divide the joint dim {}",
                    omega.dim()
                )));
            }
            let dim_b = omega.dim() / dim_a;
            let omega = BipartiteState::new(omega, dim_a, dim_b)
                .map_err(|e| err(format!("preparator omega: {e}")))?;
            let ops = obj
                .get("ops")
                .and_then(Value::as_array)
                .ok_or_else(|| err("preparator: preparing-ops needs \"ops\""))?
                .iter()
                .map(parse_map)
                .collect::<Result<Vec<_>, _>>()?;
            Preparator::preparing_ops(omega, ops).map_err(|e| err(format!("preparator: {e}")))
        }
        other => Err(err(format!("preparator: unknown type '{other}'"))),
    }
}

fn parse_map(value: &Value) -> Result<QuantumMap, ScenarioError> {
    if let Some(kraus) = value.get("kraus") {
        let ops = kraus
            .as_array()
            .ok_or_else(|| err("map: \"kraus\" must be an array of matrices"))?
            .iter()
            .map(|m| matrix_from_json(m).map_err(|e| err(format!("map kraus: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        return QuantumMap::from_kraus(&ops).map_err(|e| err(format!("map: {e}")));
    }
    qpt_core::json::map_from_json(value).map_err(|e| err(format!("map: {e}")))
}

fn parse_evolution(obj: &serde_json::Map<String, Value>) -> Result<Evolution, ScenarioError> {
    match (obj.get("unitary"), obj.get("hamiltonian")) {
        (Some(_), Some(_)) => Err(err(
            "scenario: give either \"unitary\" or \"hamiltonian\", not both",
        )),
        (Some(u), None) => {
            let u = matrix_from_json(u).map_err(|e| err(format!("unitary: {e}")))?;
            let dev = qpt_core::linalg::unitarity_deviation(&u);
            if dev > 1e-10 {
                return Err(err(format!(
                    "unitarity violation: max deviation {dev:.3e} from U†U = I"
                )));
            }
            Ok(Evolution::Unitary(u))
        }
        (None, Some(h)) => {
            let hamiltonian =
                matrix_from_json(h).map_err(|e| err(format!("hamiltonian: {e}")))?;
            if qpt_core::linalg::herm_deviation(&hamiltonian) > 1e-10 {
                return Err(err("hamiltonian: matrix is not Hermitian"));
            }
            let env = density_from_json(
                obj.get("env")
                    .ok_or_else(|| err("scenario: hamiltonian evolution needs \"env\""))?,
            )
            .map_err(|e| err(format!("env: {e}")))?;
            let times = obj
                .get("times")
                .and_then(Value::as_array)
                .ok_or_else(|| err("scenario: hamiltonian evolution needs \"times\""))?
                .iter()
                .map(|t| {
                    t.as_f64()
                        .ok_or_else(|| err("times: entries must be numbers"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if times.len() < 2 {
                return Err(err("times: need at least two time points"));
            }
            Ok(Evolution::Hamiltonian {
                hamiltonian,
                env,
                times,
            })
        }
        (None, None) => Err(err(
            "scenario: missing evolution (\"unitary\" or \"hamiltonian\")",
        )),
    }
}

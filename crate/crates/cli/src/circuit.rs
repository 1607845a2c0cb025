//! Circuit files: a strict JSON schema describing input widths and a gate list.
//!
//! ```json
//! {
//!   "schema": "tfsim/1",
//!   "modes": 2,
//!   "inputs": [{"type": "gaussian", "width": 1.5}, {"type": "gaussian", "width": 0.5}],
//!   "ops": [
//!     {"gate": "fbs", "targets": [0, 1]},
//!     {"gate": "frft", "targets": [1], "params": {"phi": 0.4}},
//!     {"gate": "scale", "targets": [0], "params": {"s": 1.2}},
//!     {"gate": "displace", "targets": [0], "params": {"omega0": 0.5, "t0": -1.0}}
//!   ]
//! }
//! ```
//!
//! `schema` may be omitted; any other value is rejected. Unknown keys are
//! rejected everywhere.

use serde::{Deserialize, Serialize};
use tfsim::gaussian::{run_gates, DisplacementParams, Gate, GaussianTFState};

use crate::error::CliError;

pub const SCHEMA: &str = "tfsim/1";

fn default_schema() -> String {
    SCHEMA.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub modes: usize,
    pub inputs: Vec<InputSpec>,
    #[serde(default)]
    pub ops: Vec<OpSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    #[serde(rename = "type")]
    pub kind: InputKind,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Fbs,
    Frft,
    Scale,
    Displace,
}

impl GateKind {
    fn arity(self) -> usize {
        match self {
            GateKind::Fbs => 2,
            _ => 1,
        }
    }

    fn params(self) -> &'static [&'static str] {
        match self {
            GateKind::Fbs => &[],
            GateKind::Frft => &["phi"],
            GateKind::Scale => &["s"],
            GateKind::Displace => &["omega0", "t0"],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
}

impl Params {
    fn is_empty(&self) -> bool {
        *self == Params::default()
    }

    fn entries(&self) -> [(&'static str, Option<f64>); 4] {
        [
            ("phi", self.phi),
            ("s", self.s),
            ("omega0", self.omega0),
            ("t0", self.t0),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpSpec {
    pub gate: GateKind,
    pub targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Params::is_empty")]
    pub params: Params,
}

impl OpSpec {
    fn to_gate(&self) -> Gate {
        let t = &self.targets;
        let p = &self.params;
        match self.gate {
            GateKind::Fbs => Gate::Fbs { a: t[0], b: t[1] },
            GateKind::Frft => Gate::Frft {
                mode: t[0],
                phi: p.phi.unwrap(),
            },
            GateKind::Scale => Gate::Scale {
                mode: t[0],
                s: p.s.unwrap(),
            },
            GateKind::Displace => Gate::Displace(DisplacementParams {
                omega0: p.omega0.unwrap(),
                t0: p.t0.unwrap(),
                mode: t[0],
            }),
        }
    }
}

fn violation(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Schema {
        path: path.into(),
        line: None,
        column: None,
        message: message.into(),
    }
}

/// Parses and validates a circuit document.
pub fn parse_circuit(text: &str) -> Result<CircuitSpec, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: CircuitSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        let (line, column) = (Some(inner.line()), Some(inner.column()));
        if path.ends_with(".gate") && message.starts_with("unknown variant") {
            CliError::UnknownGate {
                path,
                line,
                column,
                message,
            }
        } else {
            CliError::Schema {
                path,
                line,
                column,
                message,
            }
        }
    })?;
    spec.validate()?;
    Ok(spec)
}

impl CircuitSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA {
            return Err(violation(
                "schema",
                format!("unsupported schema {:?}, expected {SCHEMA:?}", self.schema),
            ));
        }
        if self.modes == 0 {
            return Err(violation("modes", "must be at least 1"));
        }
        if self.inputs.len() != self.modes {
            return Err(violation(
                "inputs",
                format!("expected {} entries, got {}", self.modes, self.inputs.len()),
            ));
        }
        for (i, input) in self.inputs.iter().enumerate() {
            if !(input.width.is_finite() && input.width > 0.0) {
                return Err(violation(
                    format!("inputs[{i}].width"),
                    format!("must be positive, got {}", input.width),
                ));
            }
        }
        for (i, op) in self.ops.iter().enumerate() {
            if op.targets.len() != op.gate.arity() {
                return Err(violation(
                    format!("ops[{i}].targets"),
                    format!(
                        "expected {} targets, got {}",
                        op.gate.arity(),
                        op.targets.len()
                    ),
                ));
            }
            if let Some(&t) = op.targets.iter().find(|&&t| t >= self.modes) {
                return Err(violation(
                    format!("ops[{i}].targets"),
                    format!("target {t} out of range for {} modes", self.modes),
                ));
            }
            if op.gate == GateKind::Fbs && op.targets[0] == op.targets[1] {
                return Err(violation(
                    format!("ops[{i}].targets"),
                    "fbs needs two distinct modes",
                ));
            }
            let wanted = op.gate.params();
            for (name, value) in op.params.entries() {
                let path = format!("ops[{i}].params.{name}");
                match (wanted.contains(&name), value) {
                    (true, None) => return Err(violation(path, "missing")),
                    (false, Some(_)) => {
                        return Err(violation(path, "not a parameter of this gate"))
                    }
                    (true, Some(v)) if !v.is_finite() => {
                        return Err(violation(path, "must be finite"))
                    }
                    _ => {}
                }
            }
            if op.gate == GateKind::Scale && op.params.s.is_some_and(|s| s <= 0.0) {
                return Err(violation(format!("ops[{i}].params.s"), "must be positive"));
            }
        }
        Ok(())
    }

    pub fn widths(&self) -> Vec<f64> {
        self.inputs.iter().map(|i| i.width).collect()
    }

    pub fn gates(&self) -> Vec<Gate> {
        self.ops.iter().map(OpSpec::to_gate).collect()
    }

    /// Output state of the circuit.
    pub fn state(&self) -> Result<GaussianTFState, CliError> {
        let input = GaussianTFState::with_widths(&self.widths())?;
        Ok(run_gates(&input, &self.gates())?)
    }

    /// Canonical form: explicit schema, fixed key order, pretty-printed.
    pub fn to_canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("circuit serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_circuit() {
        let c = parse_circuit(r#"{"modes":1,"inputs":[{"type":"gaussian","width":1.0}],"ops":[]}"#)
            .unwrap();
        assert_eq!(c.modes, 1);
        assert!(c.gates().is_empty());
        let s = c.state().unwrap();
        assert_eq!(s.cov()[(0, 0)], 0.5);
    }

    #[test]
    fn single_fbs() {
        let c = parse_circuit(
            r#"{"modes":2,"inputs":[{"type":"gaussian","width":1.0},{"type":"gaussian","width":2.0}],
                "ops":[{"gate":"fbs","targets":[0,1]}]}"#,
        )
        .unwrap();
        assert_eq!(c.gates(), vec![Gate::Fbs { a: 0, b: 1 }]);
    }

    #[test]
    fn unknown_gate_names_the_field() {
        let e = parse_circuit(
            r#"{"modes":2,"inputs":[{"type":"gaussian","width":1.0},{"type":"gaussian","width":1.0}],
                "ops":[{"gate":"beamsplitter","targets":[0,1]}]}"#,
        )
        .unwrap_err();
        match e {
            CliError::UnknownGate { path, line, .. } => {
                assert_eq!(path, "ops[0].gate");
                assert_eq!(line, Some(2));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e =
            parse_circuit(r#"{"modes":1,"inputs":[{"type":"gaussian","width":1.0,"colour":3}]}"#)
                .unwrap_err();
        assert!(
            matches!(e, CliError::Schema { ref path, .. } if path == "inputs[0].colour"),
            "{e:?}"
        );
    }

    #[test]
    fn semantic_checks() {
        let base = |ops: &str| {
            format!(
                r#"{{"modes":2,"inputs":[{{"type":"gaussian","width":1.0}},{{"type":"gaussian","width":1.0}}],"ops":[{ops}]}}"#
            )
        };
        let path_of = |text: String| match parse_circuit(&text).unwrap_err() {
            CliError::Schema { path, .. } => path,
            other => panic!("{other:?}"),
        };
        assert_eq!(
            path_of(base(r#"{"gate":"fbs","targets":[0,2]}"#)),
            "ops[0].targets"
        );
        assert_eq!(
            path_of(base(r#"{"gate":"fbs","targets":[1,1]}"#)),
            "ops[0].targets"
        );
        assert_eq!(
            path_of(base(r#"{"gate":"frft","targets":[0]}"#)),
            "ops[0].params.phi"
        );
        assert_eq!(
            path_of(base(
                r#"{"gate":"frft","targets":[0],"params":{"phi":1,"s":2}}"#
            )),
            "ops[0].params.s"
        );
        assert_eq!(
            path_of(base(r#"{"gate":"scale","targets":[0],"params":{"s":-1}}"#)),
            "ops[0].params.s"
        );
        let bad_schema =
            r#"{"schema":"tfsim/2","modes":1,"inputs":[{"type":"gaussian","width":1.0}]}"#;
        assert_eq!(path_of(bad_schema.to_string()), "schema");
    }
}

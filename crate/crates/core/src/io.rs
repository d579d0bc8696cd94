//! Problem files, solution payloads and columnar sweep output.
//!
//! A problem file is JSON:
//!
//! ```json
//! {
//!   "schema_version": "1.0",
//!   "outputs": [0.0, 1.0],
//!   "reservation_utility": 0.0,
//!   "utility": { "family": "log", "parameters": {} },
//!   "actions": [
//!     { "name": "H", "cost": 1.0,
//!       "principal_beliefs": [0.25, 0.75], "agent_beliefs": [0.25, 0.75] },
//!     { "name": "L", "cost": 0.0,
//!       "principal_beliefs": [0.75, 0.25], "agent_beliefs": [0.75, 0.25] }
//!   ]
//! }
//! ```
//!
//! Families: `cara` (`r`), `log`, `crra` (`gamma`), `sqrt`, and `tabulated`
//! (`grid` and `values` arrays next to `family`). An optional `domain`
//! pair narrows the wage domain; `null` keeps the family's bound.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::belief::Distribution;
use crate::cara::CaraSweep;
use crate::compstat::SweepResult;
use crate::error::{Error, Result};
use crate::instance::{ActionSpec, ProblemInstance};
use crate::second_best::FigureData;
use crate::utility::{TabulatedUtility, UtilityFamily, UtilityModel};

pub const SCHEMA_VERSION: &str = "1.0";
pub const SUPPORTED_FAMILIES: [&str; 5] = ["cara", "log", "crra", "sqrt", "tabulated"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: String,
    pub outputs: Vec<f64>,
    pub reservation_utility: f64,
    pub utility: UtilityFile,
    pub actions: Vec<ActionFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityFile {
    pub family: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[Option<f64>; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionFile {
    pub name: String,
    pub cost: f64,
    pub principal_beliefs: Vec<f64>,
    pub agent_beliefs: Vec<f64>,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Validation {
        path: path.into(),
        message: message.into(),
    }
}

fn parameter(u: &UtilityFile, key: &str) -> Result<f64> {
    u.parameters
        .get(key)
        .copied()
        .ok_or_else(|| invalid(format!("utility.parameters.{key}"), format!("{} utility needs '{key}'", u.family)))
}

fn no_extra_parameters(u: &UtilityFile, allowed: &[&str]) -> Result<()> {
    match u.parameters.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(invalid(
            format!("utility.parameters.{k}"),
            format!("unexpected parameter for {} utility", u.family),
        )),
        None => Ok(()),
    }
}

fn utility_model(u: &UtilityFile) -> Result<UtilityModel> {
    let at = |e: Error| match e {
        Error::DomainError(m) => invalid("utility", m),
        other => other,
    };
    let family = match u.family.as_str() {
        "cara" => {
            no_extra_parameters(u, &["r"])?;
            UtilityFamily::Cara { r: parameter(u, "r")? }
        }
        "log" => {
            no_extra_parameters(u, &[])?;
            UtilityFamily::Log
        }
        "crra" => {
            no_extra_parameters(u, &["gamma"])?;
            UtilityFamily::Crra {
                gamma: parameter(u, "gamma")?,
            }
        }
        "sqrt" => {
            no_extra_parameters(u, &[])?;
            UtilityFamily::Sqrt
        }
        "tabulated" => {
            no_extra_parameters(u, &[])?;
            let grid = u.grid.clone().ok_or_else(|| invalid("utility.grid", "tabulated utility needs 'grid'"))?;
            let values = u
                .values
                .clone()
                .ok_or_else(|| invalid("utility.values", "tabulated utility needs 'values'"))?;
            UtilityFamily::Tabulated(TabulatedUtility::new(grid, values).map_err(at)?)
        }
        other => {
            return Err(Error::Parse(format!(
                "unknown utility family '{other}'; supported families: {}",
                SUPPORTED_FAMILIES.join(", ")
            )))
        }
    };
    if u.family != "tabulated" && (u.grid.is_some() || u.values.is_some()) {
        return Err(invalid("utility", "'grid' and 'values' apply only to tabulated utility"));
    }
    let mut model = UtilityModel::new(family).map_err(at)?;
    if let Some([lo, hi]) = u.domain {
        let (dlo, dhi) = model.domain();
        model = model
            .with_domain(lo.unwrap_or(dlo), hi.unwrap_or(dhi))
            .map_err(|e| match e {
                Error::DomainError(m) => invalid("utility.domain", m),
                other => other,
            })?;
    }
    Ok(model)
}

impl ProblemFile {
    pub fn into_instance(self) -> Result<ProblemInstance> {
        let major = self.schema_version.split('.').next().unwrap_or("");
        if major != "1" {
            return Err(invalid(
                "schema_version",
                format!("unsupported schema version '{}', expected 1.x", self.schema_version),
            ));
        }
        let utility = utility_model(&self.utility)?;
        let actions = self
            .actions
            .into_iter()
            .enumerate()
            .map(|(i, a)| {
                let dist = |field: &str, v: Vec<f64>| {
                    Distribution::new(v).map_err(|e| match e {
                        Error::InvalidDistribution(m) => {
                            invalid(format!("actions[{i}].{field}"), format!("action '{}': {m}", a.name))
                        }
                        other => other,
                    })
                };
                Ok(ActionSpec::new(
                    a.name.clone(),
                    a.cost,
                    dist("principal_beliefs", a.principal_beliefs.clone())?,
                    dist("agent_beliefs", a.agent_beliefs.clone())?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        ProblemInstance::new(self.outputs, actions, self.reservation_utility, utility)
    }

    pub fn from_instance(inst: &ProblemInstance) -> Self {
        let u = inst.utility();
        let mut parameters = BTreeMap::new();
        let (mut grid, mut values) = (None, None);
        let default = match u.family() {
            UtilityFamily::Cara { r } => {
                parameters.insert("r".to_string(), *r);
                UtilityModel::cara(*r).map(|m| m.domain())
            }
            UtilityFamily::Crra { gamma } => {
                parameters.insert("gamma".to_string(), *gamma);
                UtilityModel::crra(*gamma).map(|m| m.domain())
            }
            UtilityFamily::Log => Ok(UtilityModel::log().domain()),
            UtilityFamily::Sqrt => Ok(UtilityModel::sqrt().domain()),
            UtilityFamily::Tabulated(t) => {
                grid = Some(t.grid().to_vec());
                values = Some(t.values().to_vec());
                Ok((t.grid()[0], *t.grid().last().unwrap()))
            }
        }
        .expect("family already validated");
        let (lo, hi) = u.domain();
        let domain = (default != (lo, hi)).then(|| {
            [
                (lo != default.0).then_some(lo),
                (hi != default.1).then_some(hi),
            ]
        });
        ProblemFile {
            schema_version: SCHEMA_VERSION.to_string(),
            outputs: inst.outputs().to_vec(),
            reservation_utility: inst.reservation_utility(),
            utility: UtilityFile {
                family: u.family().name().to_string(),
                parameters,
                domain,
                grid,
                values,
            },
            actions: inst
                .actions()
                .iter()
                .map(|a| ActionFile {
                    name: a.name.clone(),
                    cost: a.cost,
                    principal_beliefs: a.principal_beliefs.probs().to_vec(),
                    agent_beliefs: a.agent_beliefs.probs().to_vec(),
                })
                .collect(),
        }
    }
}

pub fn parse_problem(text: &str) -> Result<ProblemInstance> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_instance()
}

pub fn serialize_problem(inst: &ProblemInstance) -> String {
    to_json(&ProblemFile::from_instance(inst))
}

pub fn read_problem(path: &Path) -> Result<ProblemInstance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_problem(&text)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable payload");
    s.push('\n');
    s
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

fn csv_string(header: Vec<String>, rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// One row per epsilon: `eps, w_0..w_{S-1}, lambda, mu_<alt>..., power_agent,
/// power_principal, coincides_with_first_best, error`. Failed rows leave the
/// numeric cells empty.
pub fn sweep_csv(result: &SweepResult, alternatives: &[String]) -> String {
    let states = result
        .rows
        .iter()
        .find_map(|r| r.wages.as_ref().map(Vec::len))
        .unwrap_or(0);
    let mut header = vec!["eps".to_string()];
    header.extend((0..states).map(|k| format!("w_{k}")));
    header.push("lambda".into());
    header.extend(alternatives.iter().map(|a| format!("mu_{a}")));
    header.extend(["power_agent", "power_principal", "coincides_with_first_best", "error"].map(String::from));
    let rows = result
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![fmt_f64(r.eps)];
            match &r.wages {
                Some(w) => row.extend(w.iter().map(|x| fmt_f64(*x))),
                None => row.extend((0..states).map(|_| String::new())),
            }
            row.push(r.lambda.map(fmt_f64).unwrap_or_default());
            for k in 0..alternatives.len() {
                row.push(r.mu.as_ref().and_then(|m| m.get(k)).map(|x| fmt_f64(*x)).unwrap_or_default());
            }
            row.push(r.power_agent.map(fmt_f64).unwrap_or_default());
            row.push(r.power_principal.map(fmt_f64).unwrap_or_default());
            row.push(r.coincides_with_first_best.map(|c| c.to_string()).unwrap_or_default());
            row.push(r.error.clone().unwrap_or_default());
            row
        })
        .collect();
    csv_string(header, rows)
}

pub fn cara_sweep_csv(sweep: &CaraSweep) -> String {
    let header = CaraSweep::CSV_HEADER.iter().map(|h| h.to_string()).collect();
    let rows = sweep
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![fmt_f64(r.eps)];
            row.extend(r.wages.iter().map(|x| fmt_f64(*x)));
            row.extend([r.lambda, r.mu, r.power_agent, r.power_principal].map(fmt_f64));
            row.push(format!("{:?}", r.regime));
            row.extend(r.first_best.iter().map(|x| fmt_f64(*x)));
            row
        })
        .collect();
    csv_string(header, rows)
}

/// Long format: `curve, w_0, w_1`, one row per point. The corner and the
/// contract are single-point curves.
pub fn figure_csv(fig: &FigureData) -> String {
    let header = vec!["curve".to_string(), "w_0".into(), "w_1".into()];
    let mut rows = Vec::new();
    for c in fig.indifference.iter().chain(std::iter::once(&fig.iso_cost)) {
        for (a, b) in c.w0.iter().zip(&c.w1) {
            rows.push(vec![c.label.clone(), fmt_f64(*a), fmt_f64(*b)]);
        }
    }
    if let Some(c) = fig.corner {
        rows.push(vec!["corner".into(), fmt_f64(c[0]), fmt_f64(c[1])]);
    }
    rows.push(vec!["contract".into(), fmt_f64(fig.contract[0]), fmt_f64(fig.contract[1])]);
    csv_string(header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = r#"{
      "schema_version": "1.0",
      "outputs": [0.0, 1.0],
      "reservation_utility": 0.0,
      "utility": { "family": "log", "parameters": {} },
      "actions": [
        { "name": "H", "cost": 1.0, "principal_beliefs": [0.25, 0.75], "agent_beliefs": [0.25, 0.75] },
        { "name": "L", "cost": 0.0, "principal_beliefs": [0.75, 0.25], "agent_beliefs": [0.75, 0.25] }
      ]
    }"#;

    #[test]
    fn minimal_file() {
        let inst = parse_problem(TWO).unwrap();
        assert_eq!(inst.states(), 2);
        assert_eq!(parse_problem(&serialize_problem(&inst)).unwrap(), inst);
    }

    #[test]
    fn bad_sum_names_action() {
        let text = TWO.replacen("[0.25, 0.75], \"agent_beliefs\"", "[0.25, 0.74], \"agent_beliefs\"", 1);
        match parse_problem(&text).unwrap_err() {
            Error::Validation { path, message } => {
                assert_eq!(path, "actions[0].principal_beliefs");
                assert!(message.contains("'H'"));
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn unknown_family_lists_supported() {
        let text = TWO.replace("\"log\"", "\"quadratic\"");
        match parse_problem(&text).unwrap_err() {
            Error::Parse(m) => assert!(m.contains("cara, log, crra, sqrt, tabulated")),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn domain_and_parameters_round_trip() {
        let text = TWO
            .replace(r#"{ "family": "log", "parameters": {} }"#, r#"{ "family": "crra", "parameters": {"gamma": 2.0}, "domain": [0.1, null] }"#)
            .replace("\"reservation_utility\": 0.0", "\"reservation_utility\": -1.0");
        let inst = parse_problem(&text).unwrap();
        assert_eq!(inst.utility().domain(), (0.1, f64::INFINITY));
        assert_eq!(parse_problem(&serialize_problem(&inst)).unwrap(), inst);
        let missing = text.replace(r#""gamma": 2.0"#, "");
        assert!(matches!(parse_problem(&missing), Err(Error::Validation { path, .. }) if path == "utility.parameters.gamma"));
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}

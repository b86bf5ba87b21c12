use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use remetric::family::FunctionFamily;
use remetric::metricspace::FiniteMetricSpace;
use remetric::systems::{make_group_system, make_rotation_system, make_tent_system, System};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    points: Vec<String>,
    metric: MetricDoc,
    generators: GeneratorsDoc,
    #[serde(default)]
    inverse_closed: bool,
    #[serde(default = "default_c")]
    c: f64,
}

fn default_c() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MetricDoc {
    Matrix(Vec<Vec<f64>>),
    IntervalCapped {
        cap: f64,
        /// Coordinates on the line; defaults to the labels parsed as numbers.
        #[serde(default)]
        coordinates: Option<Vec<f64>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GeneratorsDoc {
    Named(BTreeMap<String, Vec<usize>>),
    List(Vec<NamedTable>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NamedTable {
    name: String,
    table: Vec<usize>,
}

impl GeneratorsDoc {
    fn into_pairs(self) -> Vec<(String, Vec<usize>)> {
        match self {
            GeneratorsDoc::Named(m) => m.into_iter().collect(),
            GeneratorsDoc::List(v) => v.into_iter().map(|t| (t.name, t.table)).collect(),
        }
    }
}

/// Permutation files: a list of tables, a name → table object, or a list
/// of `{name, table}` records.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PermutationsDoc {
    Plain(Vec<Vec<usize>>),
    Generators(GeneratorsDoc),
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn json_error(path: &Path, e: serde_json::Error) -> CliError {
    CliError::Input(format!(
        "{}: parse error at line {}, column {}: {e}",
        path.display(),
        e.line(),
        e.column()
    ))
}

pub fn load_permutations(path: &Path) -> Result<Vec<(String, Vec<usize>)>, CliError> {
    let doc: PermutationsDoc = serde_json::from_str(&read(path)?).map_err(|e| json_error(path, e))?;
    Ok(match doc {
        PermutationsDoc::Plain(v) => v
            .into_iter()
            .enumerate()
            .map(|(i, t)| (format!("h{}", i + 1), t))
            .collect(),
        PermutationsDoc::Generators(g) => g.into_pairs(),
    })
}

fn parse_index<T: std::str::FromStr>(kind: &str, raw: &str) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| CliError::Input(format!("system {kind}:{raw}: expected an integer parameter")))
}

/// Resolves a built-in id (`tent:<L>`, `rotation:<q>`, `group:<path>`) or a
/// path to a JSON system document. `c` overrides the document's constant.
pub fn load_system(spec: &str, c: Option<f64>) -> Result<System<f64>, CliError> {
    if let Some((kind, arg)) = spec.split_once(':') {
        let c_or_default = c.unwrap_or(1.0);
        match kind {
            "tent" => return Ok(make_tent_system(parse_index(kind, arg)?, c_or_default)?),
            "rotation" => return Ok(make_rotation_system(parse_index(kind, arg)?, c_or_default)?),
            "group" => {
                let perms = load_permutations(Path::new(arg))?;
                return Ok(make_group_system(perms, c_or_default)?);
            }
            "counterexample" => {
                return Err(CliError::Input(
                    "counterexample systems are symbolic; use `demo counterexample`".into(),
                ))
            }
            _ => {}
        }
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::Input(format!(
            "unknown system {spec:?}: expected tent:<L>, rotation:<q>, group:<path>, counterexample:<k> or a JSON file"
        )));
    }
    let doc: SystemDoc = serde_json::from_str(&read(path)?).map_err(|e| json_error(path, e))?;
    let n = doc.points.len();
    let space = match doc.metric {
        MetricDoc::Matrix(rows) => FiniteMetricSpace::from_matrix(doc.points.clone(), rows)?,
        MetricDoc::IntervalCapped { cap, coordinates } => {
            let coords = match coordinates {
                Some(c) => c,
                None => doc
                    .points
                    .iter()
                    .map(|p| {
                        p.parse::<f64>().map_err(|_| {
                            CliError::Input(format!(
                                "point label {p:?} is not a number; give `coordinates` explicitly"
                            ))
                        })
                    })
                    .collect::<Result<_, _>>()?,
            };
            if coords.len() != n {
                return Err(CliError::Input(format!(
                    "{} coordinates for {n} points",
                    coords.len()
                )));
            }
            let line = FiniteMetricSpace::capped_line(&coords, cap)?;
            FiniteMetricSpace::from_fn(doc.points.clone(), |i, j| line.d(i, j))?
        }
    };
    let family = FunctionFamily::new(n, doc.generators.into_pairs(), doc.inverse_closed)?;
    Ok(System {
        name: path.display().to_string(),
        space,
        family,
        c: c.unwrap_or(doc.c),
    })
}

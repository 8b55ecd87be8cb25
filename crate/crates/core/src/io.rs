//! JSON model documents and delimited-text observation sequences.
//!
//! A model document looks like
//!
//! ```json
//! {
//!   "schema_version": "1",
//!   "num_states": 2,
//!   "initial": [0.5, 0.5],
//!   "transitions": [[0.9, 0.1], [0.2, 0.8]],
//!   "emissions": [
//!     {"family": "gaussian", "params": {"mu": 0.0, "sigma": 1.0}},
//!     {"family": "gamma", "params": {"alpha": 2.0, "beta": 1.5}}
//!   ]
//! }
//! ```

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::distributions::{Emission, Family};
use crate::error::{Error, Result};
use crate::model::HmmModel;

pub const SCHEMA_VERSION: &str = "1";

const TOP_LEVEL_KEYS: [&str; 5] = ["schema_version", "num_states", "initial", "transitions", "emissions"];

/// A model read from a document, with any forward-compatibility warnings
/// (currently: unrecognised keys that were ignored).
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedModel {
    pub model: HmmModel,
    pub warnings: Vec<String>,
}

pub fn model_to_value(model: &HmmModel) -> Value {
    let emissions: Vec<Value> = model
        .emissions()
        .iter()
        .map(|e| {
            let params: Map<String, Value> = e.params().into_iter().map(|(k, v)| (k, json!(v))).collect();
            json!({ "family": e.family().name(), "params": params })
        })
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "num_states": model.num_states(),
        "initial": model.initial(),
        "transitions": model.transitions().to_rows(),
        "emissions": emissions,
    })
}

/// Pretty-printed document. Field order is fixed and every number is
/// written in its shortest round-trip form.
pub fn model_to_json(model: &HmmModel) -> String {
    let mut text = serde_json::to_string_pretty(&model_to_value(model)).expect("model values are finite");
    text.push('\n');
    text
}

pub fn save_model(model: &HmmModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_json(model)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LoadedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_json(&text)
}

pub fn model_from_json(text: &str) -> Result<LoadedModel> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
    model_from_value(&value)
}

fn object<'a>(v: &'a Value, field: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::validation(field, "expected an object"))
}

fn required<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::validation(path, "missing key"))
}

fn number(v: &Value, field: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::validation(field, "expected a number"))
}

fn numbers(v: &Value, field: &str) -> Result<Vec<f64>> {
    let items = v
        .as_array()
        .ok_or_else(|| Error::validation(field, "expected an array"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{field}[{i}]")))
        .collect()
}

fn warn_extra(obj: &Map<String, Value>, known: &[&str], path: &str, warnings: &mut Vec<String>) {
    for key in obj.keys().filter(|k| !known.contains(&k.as_str())) {
        let at = if path.is_empty() {
            key.clone()
        } else {
            format!("{path}.{key}")
        };
        warnings.push(format!("ignoring unknown key '{at}'"));
    }
}

pub fn model_from_value(value: &Value) -> Result<LoadedModel> {
    let mut warnings = Vec::new();
    let doc = object(value, "document")?;

    let version = required(doc, "schema_version", "schema_version")?;
    match version.as_str() {
        Some(SCHEMA_VERSION) => {}
        _ => {
            return Err(Error::validation(
                "schema_version",
                format!("unsupported version {version}, expected \"{SCHEMA_VERSION}\""),
            ))
        }
    }
    warn_extra(doc, &TOP_LEVEL_KEYS, "", &mut warnings);

    let k = required(doc, "num_states", "num_states")?
        .as_u64()
        .ok_or_else(|| Error::validation("num_states", "expected a non-negative integer"))? as usize;

    let initial = numbers(required(doc, "initial", "initial")?, "initial")?;
    if initial.len() != k {
        return Err(Error::validation(
            "initial",
            format!("expected {k} entries, got {}", initial.len()),
        ));
    }

    let rows = required(doc, "transitions", "transitions")?
        .as_array()
        .ok_or_else(|| Error::validation("transitions", "expected an array of rows"))?;
    let transitions = rows
        .iter()
        .enumerate()
        .map(|(i, r)| numbers(r, &format!("transitions[{i}]")))
        .collect::<Result<Vec<_>>>()?;

    let specs = required(doc, "emissions", "emissions")?
        .as_array()
        .ok_or_else(|| Error::validation("emissions", "expected an array"))?;
    let mut emissions = Vec::with_capacity(specs.len());
    for (j, spec) in specs.iter().enumerate() {
        let path = format!("emissions[{j}]");
        let spec = object(spec, &path)?;
        warn_extra(spec, &["family", "params"], &path, &mut warnings);
        let name = required(spec, "family", &format!("{path}.family"))?
            .as_str()
            .ok_or_else(|| Error::validation(format!("{path}.family"), "expected a string"))?;
        let family = Family::from_name(name).map_err(|e| match e {
            Error::Usage(msg) => Error::validation(format!("{path}.family"), msg),
            other => other,
        })?;
        let params_path = format!("{path}.params");
        let params = object(required(spec, "params", &params_path)?, &params_path)?;
        let record = params
            .iter()
            .map(|(key, v)| Ok((key.clone(), number(v, &format!("{params_path}.{key}"))?)))
            .collect::<Result<Vec<_>>>()?;
        let dist = Emission::from_params(family, &record).map_err(|e| match e {
            Error::Validation { field, message } => Error::validation(format!("{params_path}.{field}"), message),
            other => other,
        })?;
        let used: Vec<String> = dist.params().into_iter().map(|(key, _)| key).collect();
        let used: Vec<&str> = used.iter().map(String::as_str).collect();
        warn_extra(params, &used, &params_path, &mut warnings);
        emissions.push(dist);
    }
    if emissions.len() != k {
        return Err(Error::validation(
            "emissions",
            format!("expected {k} entries, got {}", emissions.len()),
        ));
    }

    let model = HmmModel::new(initial, transitions, emissions)?;
    Ok(LoadedModel { model, warnings })
}

/// Splits delimited text into observation sequences.
///
/// Blank lines separate sequences. `column` is the zero-based field to
/// read. A first line whose selected field is not a number is taken as a
/// header and skipped; any later non-numeric field is an error carrying its
/// one-based line number.
pub fn read_sequences(text: &str, column: usize, delimiter: char) -> Result<Vec<Vec<f64>>> {
    let mut sequences = Vec::new();
    let mut current = Vec::new();
    let mut seen_content = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            if !current.is_empty() {
                sequences.push(std::mem::take(&mut current));
            }
            continue;
        }
        let first = !seen_content;
        seen_content = true;
        let cell = line
            .split(delimiter)
            .nth(column)
            .map(str::trim)
            .ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("no column {column}"),
            })?;
        match cell.parse::<f64>() {
            Ok(y) if y.is_finite() => current.push(y),
            Ok(_) => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-finite value '{cell}'"),
                })
            }
            Err(_) if first => {}
            Err(_) => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("not a number: '{cell}'"),
                })
            }
        }
    }
    if !current.is_empty() {
        sequences.push(current);
    }
    if sequences.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no observations found".into(),
        });
    }
    Ok(sequences)
}

pub fn read_sequences_file(path: impl AsRef<Path>, column: usize, delimiter: char) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_sequences(&text, column, delimiter)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixed() -> HmmModel {
        HmmModel::new(
            vec![0.25, 0.75],
            vec![vec![0.9, 0.1], vec![1.0 / 3.0, 2.0 / 3.0]],
            vec![
                Emission::Gaussian {
                    mu: 0.1,
                    sigma: std::f64::consts::PI,
                },
                Emission::Gamma { shape: 2.5, rate: 1e-7 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = mixed();
        let text = model_to_json(&m);
        let back = model_from_json(&text).unwrap();
        assert!(back.warnings.is_empty());
        assert_eq!(back.model, m);
        assert_eq!(model_to_json(&back.model), text);
        assert!(text.contains("\"gaussian\"") && text.contains("\"gamma\""));
    }

    #[test]
    fn field_order_is_fixed() {
        let text = model_to_json(&mixed());
        let pos: Vec<usize> = TOP_LEVEL_KEYS
            .iter()
            .map(|k| text.find(&format!("\"{k}\"")).unwrap())
            .collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(text.find("\"mu\"").unwrap() < text.find("\"sigma\"").unwrap());
    }

    fn edit(f: impl FnOnce(&mut Value)) -> Result<LoadedModel> {
        let mut v = model_to_value(&mixed());
        f(&mut v);
        model_from_value(&v)
    }

    #[test]
    fn bad_row_names_path() {
        let err = edit(|v| v["transitions"][0] = json!([0.7, 0.1])).unwrap_err();
        assert!(err.to_string().contains("transitions[0]"), "{err}");
    }

    #[test]
    fn unknown_version() {
        let err = edit(|v| v["schema_version"] = json!("2")).unwrap_err();
        assert!(err.to_string().contains("schema_version"), "{err}");
    }

    #[test]
    fn unknown_family_lists_supported() {
        let err = edit(|v| v["emissions"][1]["family"] = json!("zipf"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("emissions[1].family"), "{err}");
        for f in Family::ALL {
            assert!(err.contains(f.name()), "{err}");
        }
    }

    #[test]
    fn missing_param_named() {
        let err = edit(|v| {
            v["emissions"][0]["params"].as_object_mut().unwrap().remove("sigma");
        })
        .unwrap_err();
        assert!(err.to_string().contains("emissions[0].params.sigma"), "{err}");
    }

    #[test]
    fn extra_keys_warn() {
        let loaded = edit(|v| {
            v["comment"] = json!("hand edited");
            v["emissions"][1]["params"]["gamma"] = json!(3.0);
        })
        .unwrap();
        assert_eq!(loaded.model, mixed());
        assert_eq!(loaded.warnings.len(), 2);
        assert!(loaded.warnings[1].contains("emissions[1].params.gamma"));
    }

    #[test]
    fn blank_lines_split_sequences() {
        let seqs = read_sequences("1\n2\n\n3\n4\n", 0, ',').unwrap();
        assert_eq!(seqs, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let seqs = read_sequences("\n\n1\n\n\n\n2\n\n", 0, ',').unwrap();
        assert_eq!(seqs, vec![vec![1.0], vec![2.0]]);
    }

    #[test]
    fn header_and_column() {
        let seqs = read_sequences("t,y\n0,1.5\n1, 2.5\n", 1, ',').unwrap();
        assert_eq!(seqs, vec![vec![1.5, 2.5]]);
        let seqs = read_sequences("a\tb\n1\t2\n", 1, '\t').unwrap();
        assert_eq!(seqs, vec![vec![2.0]]);
    }

    #[test]
    fn parse_errors_carry_line() {
        let err = read_sequences("1\n2\nx\n", 0, ',').unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = read_sequences("1,2\n3\n", 1, ',').unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(read_sequences("", 0, ',').is_err());
        assert!(read_sequences("y\n\n", 0, ',').is_err());
    }
}

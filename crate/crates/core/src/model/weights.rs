use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::{Map, Value};

use super::spec::SpecRecord;
use super::{ClassifierParams, ModelError, ModelSpec};
use crate::nn::ParamTensors;
use crate::numeric::RealMatrix;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileIn {
    spec: SpecRecord,
    params: Map<String, Value>,
    format_version: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorIn {
    shape: Vec<usize>,
    values: Vec<f64>,
}

fn is_vector(name: &str) -> bool {
    name.ends_with(".bias") || name.ends_with(".b_ih") || name.ends_with(".b_hh")
}

fn file_shape(name: &str, m: &RealMatrix) -> Vec<usize> {
    if is_vector(name) {
        vec![m.len()]
    } else {
        vec![m.rows(), m.cols()]
    }
}

fn fmt_shape(s: &[usize]) -> String {
    let parts: Vec<String> = s.iter().map(|v| v.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

/// Serializes to the weight-file JSON. Values are written with 17
/// significant digits so that parsing recovers every bit.
pub fn weights_to_string(params: &ClassifierParams) -> Result<String, ModelError> {
    let spec = serde_json::to_string(&SpecRecord::from(&params.spec))
        .map_err(|e| ModelError::Format(e.to_string()))?;
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"spec\": {spec},");
    out.push_str("  \"params\": {\n");
    let names = params.param_names();
    let tensors = params.tensors();
    for (i, (name, t)) in names.iter().zip(&tensors).enumerate() {
        if !t.is_finite() {
            return Err(ModelError::Format(format!("parameter `{name}` has non-finite values")));
        }
        let _ = write!(
            out,
            "    \"{name}\": {{\"shape\": {}, \"values\": [",
            fmt_shape(&file_shape(name, t))
        );
        for (j, v) in t.as_slice().iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{v:.16e}");
        }
        out.push_str("]}");
        out.push_str(if i + 1 < names.len() { ",\n" } else { "\n" });
    }
    out.push_str("  },\n");
    let _ = writeln!(out, "  \"format_version\": {FORMAT_VERSION}");
    out.push_str("}\n");
    Ok(out)
}

pub fn save_weights(params: &ClassifierParams, path: &Path) -> Result<(), ModelError> {
    let text = weights_to_string(params)?;
    fs::write(path, text).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn parse_weights(text: &str) -> Result<ClassifierParams, ModelError> {
    let file: FileIn = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(ModelError::Format(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    let spec = ModelSpec::try_from(file.spec)?;
    let mut params = ClassifierParams::zeros(spec);
    let names = params.param_names();
    if let Some(extra) = file.params.keys().find(|k| !names.contains(k)) {
        return Err(ModelError::Format(format!("unexpected parameter `{extra}` for {spec}")));
    }
    for (name, t) in names.iter().zip(params.tensors_mut()) {
        let raw = file
            .params
            .get(name)
            .ok_or_else(|| ModelError::Format(format!("missing parameter `{name}`")))?;
        let tensor = TensorIn::deserialize(raw)
            .map_err(|e| ModelError::Format(format!("parameter `{name}`: {e}")))?;
        let expected = file_shape(name, t);
        if tensor.shape != expected {
            return Err(ModelError::Format(format!(
                "parameter `{name}` has shape {}, spec {spec} requires {}",
                fmt_shape(&tensor.shape),
                fmt_shape(&expected)
            )));
        }
        if tensor.values.len() != t.len() {
            return Err(ModelError::Format(format!(
                "parameter `{name}` has {} values for shape {}",
                tensor.values.len(),
                fmt_shape(&expected)
            )));
        }
        t.as_mut_slice().copy_from_slice(&tensor.values);
    }
    Ok(params)
}

pub fn load_weights(path: &Path) -> Result<ClassifierParams, ModelError> {
    let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_weights(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::RngStream;

    fn spec(name: &str) -> ModelSpec {
        ModelSpec::parse_name(name, 4).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for name in ["bi-LSTM-2-32", "uni-GRU-1-64"] {
            let mut p = ClassifierParams::init(spec(name), 21);
            // awkward magnitudes
            p.output_layer.bias.as_mut_slice()[0] = 1e-300;
            p.output_layer.bias.as_mut_slice()[1] = -123456.789e10;
            p.output_layer.bias.as_mut_slice()[2] = 0.1 + 0.2;
            let back = parse_weights(&weights_to_string(&p).unwrap()).unwrap();
            for (a, b) in p.tensors().iter().zip(back.tensors()) {
                for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
            let seq = RngStream::new(2).uniform_matrix(16, 3, -1.0, 1.0).unwrap();
            assert_eq!(p.forward_sequence(&seq).unwrap(), back.forward_sequence(&seq).unwrap());
        }
    }

    #[test]
    fn serialization_is_stable() {
        let p = ClassifierParams::init(spec("uni-GRU-1-32"), 3);
        let s = weights_to_string(&p).unwrap();
        assert_eq!(weights_to_string(&parse_weights(&s).unwrap()).unwrap(), s);
        let v: Value = serde_json::from_str(&s).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["spec", "params", "format_version"]);
        assert_eq!(v["params"]["input.bias"]["shape"], serde_json::json!([32]));
        assert_eq!(v["params"]["rnn.l0.fwd.w_ih"]["shape"], serde_json::json!([96, 32]));
    }

    #[test]
    fn wrong_weight_shape_names_the_parameter() {
        let p = ClassifierParams::init(spec("uni-GRU-1-32"), 3);
        let mut v: Value = serde_json::from_str(&weights_to_string(&p).unwrap()).unwrap();
        v["params"]["rnn.l0.fwd.w_ih"]["shape"] = serde_json::json!([32, 96]);
        let err = parse_weights(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("rnn.l0.fwd.w_ih"), "{err}");
    }

    #[test]
    fn spec_disagreeing_with_arrays() {
        let p = ClassifierParams::init(spec("uni-GRU-1-32"), 3);
        let mut v: Value = serde_json::from_str(&weights_to_string(&p).unwrap()).unwrap();
        v["spec"]["hidden_dim"] = serde_json::json!(64);
        assert!(matches!(parse_weights(&v.to_string()), Err(ModelError::Format(_))));

        let mut v: Value = serde_json::from_str(&weights_to_string(&p).unwrap()).unwrap();
        v["spec"]["direction"] = serde_json::json!("bi");
        let err = parse_weights(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("missing parameter `rnn.l0.bwd.w_ih`"), "{err}");
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(parse_weights("{}"), Err(ModelError::Format(_))));
        let p = ClassifierParams::init(spec("uni-GRU-1-32"), 3);
        let mut v: Value = serde_json::from_str(&weights_to_string(&p).unwrap()).unwrap();
        v["format_version"] = serde_json::json!(2);
        assert!(parse_weights(&v.to_string()).is_err());
        let mut v: Value = serde_json::from_str(&weights_to_string(&p).unwrap()).unwrap();
        v["params"]["output.bias"]["values"] = serde_json::json!([1.0, 2.0]);
        let err = parse_weights(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("output.bias"), "{err}");
        let mut v: Value = serde_json::from_str(&weights_to_string(&p).unwrap()).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(parse_weights(&v.to_string()).is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_weights(Path::new("/nonexistent/w.json")).unwrap_err().to_string();
        assert!(err.contains("/nonexistent/w.json"));
    }
}

//! The published JSON schema agrees with what the config types accept and emit.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use opinionlab::harness::{ExperimentConfig, GraphSource, OpinionSource, ReconstructionConfig, SweepConfig};
use opinionlab::objectives::ObjectiveKind;
use opinionlab::optimizer::{OptimizerConfig, UndirectedMode};
use opinionlab::reconstruction::ReconstructionMethod;
use opinionlab::selection::SelectionStrategy;
use opinionlab::synth::{GraphModel, OpinionGenSpec};

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn schema() -> Value {
    let text = std::fs::read_to_string(repo_root().join("schema/experiment-config.schema.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn resolve<'a>(node: &'a Value, root: &'a Value) -> &'a Value {
    match node.get("$ref").and_then(Value::as_str) {
        Some(r) => {
            let name = r.strip_prefix("#/$defs/").expect("local reference");
            &root["$defs"][name]
        }
        None => node,
    }
}

fn type_matches(t: &str, v: &Value) -> bool {
    match t {
        "object" => v.is_object(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "number" => v.is_number(),
        "integer" => v.is_u64() || v.is_i64(),
        "null" => v.is_null(),
        other => panic!("unsupported schema type {other}"),
    }
}

/// Checks the subset of JSON Schema the published file uses.
fn validate(v: &Value, node: &Value, root: &Value, at: &str) -> Result<(), String> {
    let node = resolve(node, root);
    if let Some(options) = node.get("oneOf").and_then(Value::as_array) {
        let hits = options.iter().filter(|o| validate(v, o, root, at).is_ok()).count();
        return if hits == 1 { Ok(()) } else { Err(format!("{at}: matches {hits} alternatives")) };
    }
    if let Some(c) = node.get("const") {
        if c != v {
            return Err(format!("{at}: expected {c}"));
        }
    }
    if let Some(options) = node.get("enum").and_then(Value::as_array) {
        if !options.contains(v) {
            return Err(format!("{at}: {v} not among {options:?}"));
        }
    }
    match node.get("type") {
        Some(Value::String(t)) if !type_matches(t, v) => return Err(format!("{at}: not of type {t}")),
        Some(Value::Array(ts)) if !ts.iter().any(|t| type_matches(t.as_str().unwrap(), v)) => {
            return Err(format!("{at}: not of types {ts:?}"))
        }
        _ => {}
    }
    if let Some(x) = v.as_f64() {
        let bound = |k: &str| node.get(k).and_then(Value::as_f64);
        let ok = bound("minimum").is_none_or(|b| x >= b)
            && bound("maximum").is_none_or(|b| x <= b)
            && bound("exclusiveMinimum").is_none_or(|b| x > b)
            && bound("exclusiveMaximum").is_none_or(|b| x < b);
        if !ok {
            return Err(format!("{at}: {x} out of bounds"));
        }
    }
    if let Some(props) = node.get("properties").and_then(Value::as_object) {
        let obj = v.as_object().ok_or_else(|| format!("{at}: not an object"))?;
        for req in node.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !obj.contains_key(req.as_str().unwrap()) {
                return Err(format!("{at}: missing {req}"));
            }
        }
        for (k, child) in obj {
            let sub = props.get(k).ok_or_else(|| format!("{at}: unknown key {k}"))?;
            validate(child, sub, root, &format!("{at}.{k}"))?;
        }
    }
    Ok(())
}

/// Every object in `v` carries exactly the keys its schema node lists.
fn keys_match(v: &Value, node: &Value, root: &Value, at: &str) {
    let node = resolve(node, root);
    if let Some(options) = node.get("oneOf").and_then(Value::as_array) {
        let chosen = options.iter().find(|o| validate(v, o, root, at).is_ok()).expect("validated");
        return keys_match(v, chosen, root, at);
    }
    if let (Some(props), Some(obj)) = (node.get("properties").and_then(Value::as_object), v.as_object()) {
        let mut a: Vec<_> = props.keys().collect();
        let mut b: Vec<_> = obj.keys().collect();
        a.sort();
        b.sort();
        assert_eq!(a, b, "keys at {at}");
        for (k, child) in obj {
            keys_match(child, &props[k], root, &format!("{at}.{k}"));
        }
    }
}

fn full_config() -> ExperimentConfig {
    ExperimentConfig {
        graph: GraphSource::Synth { model: GraphModel::ErdosRenyi { n: 50, p: 0.2 }, directed: true },
        opinions: OpinionSource::Synth { spec: OpinionGenSpec::default() },
        objective: ObjectiveKind::PdDir,
        selection: SelectionStrategy::Pagerank,
        budget_fraction: 0.2,
        reconstruction: ReconstructionConfig::default(),
        optimizer: OptimizerConfig::default(),
        repetitions: 3,
        seed: 4,
        store_matrices: false,
    }
}

#[test]
fn serialized_config_matches_schema_keys() {
    let root = schema();
    let v = serde_json::to_value(full_config()).unwrap();
    validate(&v, &root, &root, "$").unwrap();
    keys_match(&v, &root, &root, "$");
}

#[test]
fn every_variant_is_in_the_schema() {
    let root = schema();
    let mut configs = Vec::new();
    for objective in ObjectiveKind::ALL {
        let mut c = full_config();
        c.objective = objective;
        c.graph = GraphSource::File { path: "g.txt".into(), directed: objective.is_directed() };
        c.opinions = OpinionSource::File { path: "s.csv".into(), expressed: objective.is_directed() };
        configs.push(c);
    }
    for method in ReconstructionMethod::ALL {
        let mut c = full_config();
        c.reconstruction.method = method;
        c.optimizer.undirected_mode = Some(UndirectedMode::Converge);
        c.graph = GraphSource::Synth { model: GraphModel::BarabasiAlbert { n: 40, m: 3 }, directed: true };
        configs.push(c);
    }
    for strategy in SelectionStrategy::ALL {
        configs.push(ExperimentConfig { selection: strategy, ..full_config() });
    }
    for c in configs {
        let v = serde_json::to_value(&c).unwrap();
        validate(&v, &root, &root, "$").unwrap();
        keys_match(&v, &root, &root, "$");
    }
}

#[test]
fn schema_defaults_match_type_defaults() {
    let root = schema();
    let defaults = [
        ("optimizer", serde_json::to_value(OptimizerConfig::default()).unwrap()),
        ("reconstruction", serde_json::to_value(ReconstructionConfig::default()).unwrap()),
        ("opinion_spec", serde_json::to_value(OpinionGenSpec::default()).unwrap()),
    ];
    for (name, value) in defaults {
        let props = root["$defs"][name]["properties"].as_object().unwrap();
        for (k, p) in props {
            if let Some(d) = p.get("default") {
                let same = match (d.as_f64(), value[k].as_f64()) {
                    (Some(a), Some(b)) => a == b,
                    _ => d == &value[k],
                };
                assert!(same, "{name}.{k}: schema {d}, type {}", value[k]);
            }
        }
    }
}

#[test]
fn minimal_config_uses_defaults() {
    let text = r#"{
        "graph": { "kind": "synth", "model": { "model": "erdos-renyi", "n": 30, "p": 0.3 }, "directed": false },
        "opinions": { "kind": "synth", "spec": {} },
        "objective": "pd-undir"
    }"#;
    let c = ExperimentConfig::from_json(text).unwrap();
    assert_eq!(c.selection, SelectionStrategy::Degree);
    assert_eq!(c.budget_fraction, 0.2);
    assert_eq!(c.repetitions, 1);
    assert_eq!(c.optimizer, OptimizerConfig::default());
    let root = schema();
    validate(&serde_json::from_str(text).unwrap(), &root, &root, "$").unwrap();
}

#[test]
fn schema_and_types_reject_unknown_keys() {
    let root = schema();
    let mut v = serde_json::to_value(full_config()).unwrap();
    v["optimizer"]["learning_rate"] = json!(0.1);
    assert!(validate(&v, &root, &root, "$").is_err());
    assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
}

#[test]
fn shipped_configs_parse() {
    let dir = repo_root().join("configs");
    let root = schema();
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        if v.get("base").is_some() {
            let sweep = SweepConfig::from_json(&text).unwrap();
            validate(&v["base"], &root, &root, "$.base").unwrap();
            assert!(!sweep.cells().unwrap().is_empty());
        } else {
            ExperimentConfig::from_json(&text).unwrap();
            validate(&v, &root, &root, "$").unwrap();
        }
        seen += 1;
    }
    assert!(seen >= 2);
}

//! Machine-readable artifacts: JSON report builders, the versioned schemas
//! shipped under `schema/`, a validator for the subset of JSON Schema those
//! files use, and the trajectory CSV dump.
//!
//! Builders emit `serde_json::Value` with sorted object keys and no
//! timestamps or environment echoes, so identical inputs serialize to
//! identical bytes.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use serde_json::{json, Map, Value};

use crate::candidate::WarpedCandidate;
use crate::curvature::OracleError;
use crate::geodesics::{ProbeConfig, ProbeOutcome, Trajectory};
use crate::profile::ProfileError;
use crate::soliton::ResidualReport;

/// Acceptable halving-step error ratio for a second-order stencil.
pub const RATIO_WINDOW: (f64, f64) = (3.0, 5.0);

/// What a report is about; echoed verbatim into the artifact so a report
/// is self-describing without referencing local paths.
#[derive(Clone, Debug)]
pub struct Target {
    kind: &'static str,
    id: Option<String>,
    variant: Option<String>,
    case: Option<u8>,
}

impl Target {
    pub fn gallery(id: &str, variant: Option<&str>) -> Self {
        Target {
            kind: "gallery",
            id: Some(id.to_string()),
            variant: variant.map(str::to_string),
            case: None,
        }
    }

    pub fn case(case: u8) -> Self {
        Target {
            kind: "case",
            id: None,
            variant: None,
            case: Some(case),
        }
    }

    pub fn config() -> Self {
        Target {
            kind: "config",
            id: None,
            variant: None,
            case: None,
        }
    }

    fn to_value(&self) -> Value {
        let mut t = Map::new();
        t.insert("kind".into(), json!(self.kind));
        if let Some(id) = &self.id {
            t.insert("id".into(), json!(id));
        }
        if let Some(v) = &self.variant {
            t.insert("variant".into(), json!(v));
        }
        if let Some(c) = self.case {
            t.insert("case".into(), json!(c));
        }
        Value::Object(t)
    }
}

/// report-v1: a residual verification outcome.
pub fn residual_value(r: &ResidualReport, target: &Target) -> Value {
    json!({
        "schema": "report-v1",
        "target": target.to_value(),
        "equations": r.equations,
        "sup_residuals": r.sup_residuals,
        "tolerance": r.tolerance,
        "passed": r.passed,
        "grid": {
            "xi": r.grid_xi,
            "zeta": r.grid_zeta,
        },
    })
}

/// construct-v1: constructed profiles plus their verification.
pub fn construct_value(
    case: u8,
    z_mode: Option<&str>,
    params: Value,
    c: &WarpedCandidate,
    verification: Value,
) -> Result<Value, ProfileError> {
    let mut profiles = Map::new();
    profiles.insert("phi".into(), crate::profile::to_value(&c.phi)?);
    profiles.insert("f".into(), crate::profile::to_value(&c.f)?);
    if let Some(tau) = &c.tau {
        profiles.insert("tau".into(), crate::profile::to_value(tau)?);
    }
    profiles.insert("h".into(), crate::profile::to_value(&c.h)?);
    profiles.insert("u".into(), crate::profile::to_value(&c.u)?);
    Ok(json!({
        "schema": "construct-v1",
        "case": case,
        "z_mode": z_mode,
        "params": params,
        "profiles": profiles,
        "verification": verification,
    }))
}

/// One gallery entry. `asserted` marks entries whose pass is a correctness
/// claim; entries documenting a known defect are reported but not asserted.
#[derive(Clone, Debug)]
pub struct GalleryEntry {
    pub id: String,
    pub variant: Option<String>,
    pub asserted: bool,
    pub passed: bool,
    pub verification: Value,
}

/// gallery-v1: `passed` covers the asserted entries only.
pub fn gallery_value(entries: &[GalleryEntry]) -> Value {
    let passed = entries.iter().all(|e| !e.asserted || e.passed);
    let rows: Vec<Value> = entries
        .iter()
        .map(|e| {
            json!({
                "id": e.id,
                "variant": e.variant,
                "asserted": e.asserted,
                "passed": e.passed,
                "verification": e.verification,
            })
        })
        .collect();
    json!({
        "schema": "gallery-v1",
        "entries": rows,
        "passed": passed,
    })
}

/// probe-v1: the completeness probe outcome.
pub fn probe_value(target: &Target, cfg: &ProbeConfig, outcome: &ProbeOutcome) -> Value {
    let runs: Vec<Value> = outcome
        .runs
        .iter()
        .map(|r| {
            json!({
                "index": r.index,
                "class": r.class.as_str(),
                "direction": r.direction as i64,
                "termination": r.termination.label(),
                "end_s": r.end_s,
                "max_drift": r.max_drift,
                "steps": r.steps,
            })
        })
        .collect();
    json!({
        "schema": "probe-v1",
        "target": target.to_value(),
        "flow": cfg.options.flow.as_str(),
        "seed": cfg.seed,
        "count": cfg.count,
        "s_max": cfg.s_max,
        "velocity_scale": cfg.velocity_scale,
        "runs": runs,
        "early_terminations": outcome.early_terminations,
        "max_drift": outcome.max_drift,
        "summary": outcome.summary,
    })
}

/// oracle-v1: closed-form vs finite-difference Ricci errors per step, with
/// consecutive-step ratios. Pass `errors` in descending step order; each
/// ratio then certifies the stencil order when it sits in RATIO_WINDOW.
pub fn oracle_value(
    target: &Target,
    seed: u64,
    points: usize,
    tolerance: f64,
    errors: &[OracleError],
) -> Value {
    let ratios: Vec<f64> = errors
        .windows(2)
        .map(|w| w[0].overall() / w[1].overall())
        .collect();
    let passed = errors.iter().all(|e| e.overall() <= tolerance)
        && ratios
            .iter()
            .all(|r| (RATIO_WINDOW.0..=RATIO_WINDOW.1).contains(r));
    let rows: Vec<Value> = errors
        .iter()
        .map(|e| {
            json!({
                "step": e.step,
                "base": e.base,
                "mixed": e.mixed,
                "fiber": e.fiber,
                "overall": e.overall(),
            })
        })
        .collect();
    json!({
        "schema": "oracle-v1",
        "target": target.to_value(),
        "seed": seed,
        "points": points,
        "tolerance": tolerance,
        "ratio_window": [RATIO_WINDOW.0, RATIO_WINDOW.1],
        "errors": rows,
        "ratios": ratios,
        "passed": passed,
    })
}

/// error-v1: written in place of a command's report when it cannot run.
pub fn error_value(command: &str, message: &str, exit_code: i32) -> Value {
    json!({
        "schema": "error-v1",
        "command": command,
        "error": message,
        "exit_code": exit_code,
    })
}

fn csv_num(x: f64) -> String {
    if x.is_finite() {
        // Shortest round-trip form, exponent notation where shorter.
        Value::from(x).to_string()
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Trajectory as CSV with a one-line header:
/// s, x1..x{n+m}, v1..v{n+m}, conserved-drift. Long trajectories are
/// subsampled to at most `max_rows` data rows, always keeping both ends.
pub fn trajectory_csv(traj: &Trajectory, n: usize, m: usize, max_rows: usize) -> String {
    let dim = n + m;
    let mut out = String::from("s");
    for i in 1..=dim {
        out.push_str(&format!(",x{i}"));
    }
    for i in 1..=dim {
        out.push_str(&format!(",v{i}"));
    }
    out.push_str(",conserved-drift\n");

    let len = traj.ss.len();
    let max_rows = max_rows.max(2);
    let stride = if len <= max_rows {
        1
    } else {
        (len - 1).div_ceil(max_rows - 1)
    };
    let mut rows: Vec<usize> = (0..len).step_by(stride).collect();
    if *rows.last().expect("at least the start node") != len - 1 {
        rows.push(len - 1);
    }
    for r in rows {
        out.push_str(&csv_num(traj.ss[r]));
        for v in &traj.states[r] {
            out.push(',');
            out.push_str(&csv_num(*v));
        }
        out.push(',');
        out.push_str(&csv_num(traj.drifts[r]));
        out.push('\n');
    }
    out
}

/// Pretty-printed JSON with a trailing newline; object keys are sorted by
/// construction, so equal values give byte-identical files.
pub fn write_json(path: &Path, value: &Value) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    let body = serde_json::to_string_pretty(value).expect("serializable value");
    f.write_all(body.as_bytes())?;
    f.write_all(b"\n")
}

pub fn write_text(path: &Path, body: &str) -> std::io::Result<()> {
    std::fs::write(path, body)
}

// ---------------------------------------------------------------------------
// Shipped schemas and their validator

const SCHEMA_SOURCES: &[(&str, &str)] = &[
    ("caseparams-v1", include_str!("../schema/caseparams-v1.json")),
    ("construct-v1", include_str!("../schema/construct-v1.json")),
    ("error-v1", include_str!("../schema/error-v1.json")),
    ("gallery-v1", include_str!("../schema/gallery-v1.json")),
    ("oracle-v1", include_str!("../schema/oracle-v1.json")),
    ("probe-v1", include_str!("../schema/probe-v1.json")),
    ("profile-v1", include_str!("../schema/profile-v1.json")),
    ("report-v1", include_str!("../schema/report-v1.json")),
];

pub fn schema_names() -> Vec<&'static str> {
    SCHEMA_SOURCES.iter().map(|(n, _)| *n).collect()
}

/// The schema file's text, exactly as shipped.
pub fn schema_source(name: &str) -> Option<&'static str> {
    SCHEMA_SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
}

fn registry() -> &'static BTreeMap<&'static str, Value> {
    static CELL: OnceLock<BTreeMap<&'static str, Value>> = OnceLock::new();
    CELL.get_or_init(|| {
        SCHEMA_SOURCES
            .iter()
            .map(|(n, s)| {
                let v: Value =
                    serde_json::from_str(s).unwrap_or_else(|e| panic!("schema {n}: {e}"));
                (*n, v)
            })
            .collect()
    })
}

/// Validate `instance` against the named shipped schema. Returns the list
/// of violations, empty-free on success.
pub fn validate_named(name: &str, instance: &Value) -> Result<(), Vec<String>> {
    let root = registry()
        .get(name)
        .unwrap_or_else(|| panic!("unknown schema {name}"));
    let mut errs = Vec::new();
    check(root, root, instance, "$", &mut errs);
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// Resolve a `$ref`: "#", "#/$defs/x", "<name>", or "<name>#/$defs/x".
fn resolve<'a>(reference: &str, root: &'a Value) -> Option<(&'a Value, &'a Value)> {
    let (name, frag) = match reference.split_once('#') {
        Some((n, f)) => (n, f),
        None => (reference, ""),
    };
    let root = if name.is_empty() {
        root
    } else {
        registry().get(name)?
    };
    if frag.is_empty() {
        return Some((root, root));
    }
    let def = frag.strip_prefix("/$defs/")?;
    Some((root.get("$defs")?.get(def)?, root))
}

fn type_matches(name: &str, inst: &Value) -> bool {
    match name {
        "object" => inst.is_object(),
        "array" => inst.is_array(),
        "string" => inst.is_string(),
        "boolean" => inst.is_boolean(),
        "null" => inst.is_null(),
        "number" => inst.is_number(),
        "integer" => match inst.as_f64() {
            Some(x) => x.fract() == 0.0,
            None => false,
        },
        other => panic!("schema uses unsupported type {other}"),
    }
}

fn check(schema: &Value, root: &Value, inst: &Value, path: &str, errs: &mut Vec<String>) {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        match resolve(r, root) {
            Some((target, target_root)) => check(target, target_root, inst, path, errs),
            None => errs.push(format!("{path}: unresolvable $ref {r}")),
        }
        return;
    }
    if let Some(t) = schema.get("type") {
        let names: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        if !names.iter().any(|n| type_matches(n, inst)) {
            errs.push(format!("{path}: expected type {names:?}"));
            return;
        }
    }
    if let Some(c) = schema.get("const") {
        if inst != c {
            errs.push(format!("{path}: expected const {c}"));
        }
    }
    if let Some(e) = schema.get("enum").and_then(Value::as_array) {
        if !e.iter().any(|v| v == inst) {
            errs.push(format!("{path}: value not in enum"));
        }
    }
    if let Some(x) = inst.as_f64() {
        if let Some(min) = schema.get("minimum").and_then(Value::as_f64) {
            if x < min {
                errs.push(format!("{path}: {x} below minimum {min}"));
            }
        }
        if let Some(max) = schema.get("maximum").and_then(Value::as_f64) {
            if x > max {
                errs.push(format!("{path}: {x} above maximum {max}"));
            }
        }
    }
    if let Some(a) = inst.as_array() {
        if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
            if (a.len() as u64) < min {
                errs.push(format!("{path}: fewer than {min} items"));
            }
        }
        if let Some(max) = schema.get("maxItems").and_then(Value::as_u64) {
            if (a.len() as u64) > max {
                errs.push(format!("{path}: more than {max} items"));
            }
        }
        if let Some(items) = schema.get("items") {
            for (i, v) in a.iter().enumerate() {
                check(items, root, v, &format!("{path}[{i}]"), errs);
            }
        }
    }
    if let Some(o) = inst.as_object() {
        if let Some(req) = schema.get("required").and_then(Value::as_array) {
            for k in req.iter().filter_map(Value::as_str) {
                if !o.contains_key(k) {
                    errs.push(format!("{path}: missing required key {k}"));
                }
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        if let Some(props) = props {
            for (k, sub) in props {
                if let Some(v) = o.get(k) {
                    check(sub, root, v, &format!("{path}.{k}"), errs);
                }
            }
        }
        if schema.get("additionalProperties") == Some(&Value::Bool(false)) {
            for k in o.keys() {
                if props.map_or(true, |p| !p.contains_key(k)) {
                    errs.push(format!("{path}: unexpected key {k}"));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructor::{
        construct, gallery, params_to_value, CaseParams, GalleryOverrides,
    };
    use crate::geodesics::{completeness_probe, integrate_geodesic, IntegrateOptions};
    use crate::soliton::{verify, GridSpec};

    fn one_five_report() -> Value {
        let c = gallery("1.5", &GalleryOverrides::default()).unwrap();
        let r = verify(&c, &GridSpec::default_for(&c), 1e-9).unwrap();
        residual_value(&r, &Target::gallery("1.5", None))
    }

    #[test]
    fn emitted_reports_validate_against_their_schemas() {
        let verify_report = one_five_report();
        validate_named("report-v1", &verify_report).unwrap();

        let params = CaseParams::for_case(2).unwrap();
        let c = construct(&params).unwrap();
        let r = verify(&c, &GridSpec::default_for(&c), 1e-8).unwrap();
        let nested = residual_value(&r, &Target::case(2));
        let cv = construct_value(
            2,
            None,
            params_to_value(&params).unwrap(),
            &c,
            nested,
        )
        .unwrap();
        validate_named("construct-v1", &cv).unwrap();

        let gv = gallery_value(&[
            GalleryEntry {
                id: "1.5".into(),
                variant: None,
                asserted: true,
                passed: true,
                verification: verify_report.clone(),
            },
            GalleryEntry {
                id: "1.8".into(),
                variant: Some("printed".into()),
                asserted: false,
                passed: false,
                verification: verify_report.clone(),
            },
        ]);
        validate_named("gallery-v1", &gv).unwrap();
        assert_eq!(gv["passed"], json!(true));

        let probe_target = gallery("1.8", &GalleryOverrides {
            theta_free: true,
            ..GalleryOverrides::default()
        })
        .unwrap();
        let cfg = ProbeConfig {
            count: 3,
            s_max: 5.0,
            ..ProbeConfig::default()
        };
        let outcome = completeness_probe(&probe_target, &cfg).unwrap();
        let pv = probe_value(&Target::gallery("1.8", Some("theta-free")), &cfg, &outcome);
        validate_named("probe-v1", &pv).unwrap();

        let c15 = gallery("1.5", &GalleryOverrides::default()).unwrap();
        let points = crate::sampling::oracle_points(&c15, 0, 3);
        let errors = [
            crate::curvature::ricci_oracle_error(&c15, &points, 1e-3).unwrap(),
            crate::curvature::ricci_oracle_error(&c15, &points, 5e-4).unwrap(),
        ];
        let ov = oracle_value(&Target::gallery("1.5", None), 0, 3, 1e-5, &errors);
        validate_named("oracle-v1", &ov).unwrap();
        assert_eq!(ov["passed"], json!(true));

        let ev = error_value("verify", "no such gallery id", 2);
        validate_named("error-v1", &ev).unwrap();

        let profile = crate::profile::to_value(&c15.h).unwrap();
        validate_named("profile-v1", &profile).unwrap();
        let params_doc = params_to_value(&CaseParams::for_case(3).unwrap()).unwrap();
        validate_named("caseparams-v1", &params_doc).unwrap();
    }

    #[test]
    fn validator_rejects_shape_violations() {
        let good = one_five_report();

        let mut missing = good.clone();
        missing.as_object_mut().unwrap().remove("tolerance");
        let errs = validate_named("report-v1", &missing).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("tolerance")), "{errs:?}");

        let mut extra = good.clone();
        extra
            .as_object_mut()
            .unwrap()
            .insert("timestamp".into(), json!("now"));
        assert!(validate_named("report-v1", &extra).is_err());

        let mut bad_type = good.clone();
        bad_type["tolerance"] = json!("tight");
        assert!(validate_named("report-v1", &bad_type).is_err());

        let mut bad_enum = good.clone();
        bad_enum["target"]["kind"] = json!("webpage");
        assert!(validate_named("report-v1", &bad_enum).is_err());

        let mut bad_item = good;
        bad_item["sup_residuals"][0] = json!(null);
        assert!(validate_named("report-v1", &bad_item).is_err());
    }

    #[test]
    fn trajectory_csv_has_one_header_and_subsamples_long_runs() {
        let c = gallery("1.8", &GalleryOverrides {
            theta_free: true,
            ..GalleryOverrides::default()
        })
        .unwrap();
        let mut state = vec![0.0; 12];
        state[6] = 0.2;
        state[7] = -0.2;
        let traj =
            integrate_geodesic(&c, &state, 5.0, &IntegrateOptions::default()).unwrap();
        let csv = trajectory_csv(&traj, 3, 3, 40);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "s,x1,x2,x3,x4,x5,x6,v1,v2,v3,v4,v5,v6,conserved-drift"
        );
        let rows: Vec<&str> = lines.collect();
        assert!(rows.len() <= 41, "{} rows", rows.len());
        assert!(rows[0].starts_with("0,") || rows[0].starts_with("0.0,"));
        let last = rows.last().unwrap();
        assert_eq!(last.split(',').count(), 14);
        assert!(last.starts_with("5,") || last.starts_with("5.0,"));
        assert_eq!(csv, trajectory_csv(&traj, 3, 3, 40));
    }

    #[test]
    fn json_serialization_is_deterministic() {
        let a = serde_json::to_string_pretty(&one_five_report()).unwrap();
        let b = serde_json::to_string_pretty(&one_five_report()).unwrap();
        assert_eq!(a, b);
    }
}

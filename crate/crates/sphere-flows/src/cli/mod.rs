//! Command-line front end. The binary only parses arguments and calls
//! [`run`]; every command returns a JSON document (or SVG) and an exit code.

pub mod render;

use crate::combinat::{count_nc_trees, count_planar_trees, enumerate_nc_trees, planar_trees, NcTree};
use crate::field::{Mode, RationalField, SpherePoint};
use crate::flow::{integrate, IntegratorConfig};
use crate::nondeg::{check_nondegeneracy, NondegConfig};
use crate::portrait::{
    antipolynomial_trees, build_portraits, check_duality, reduced_connection_graph, PlaneMultigraph,
    Policies,
};
use crate::poly::C64;
use crate::realize::{
    dual_pair_catalog, realize_antipolynomial, realize_polynomial, realize_rational, DualPair,
    RealizeConfig, RealizeError,
};
use crate::separatrix::{trace_all, trace_boundary_separatrices, Separatrix, SeparatrixConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use render::{render_svg, RenderSpec, View};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::PathBuf;

pub const SCHEMA: &str = "sphere-flows/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ANALYSIS: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sphere-flows", version, about = "Rational complex flows on the Riemann sphere")]
pub struct Cli {
    /// JSON file overriding parts of the default settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full analysis: equilibria, nondegeneracy, separatrices, portraits.
    Analyze {
        field: PathBuf,
        /// Also write an SVG phase portrait to this file.
        #[arg(long)]
        render: Option<PathBuf>,
        #[arg(long)]
        charts: bool,
        /// Keep the sampled separatrix trajectories in the output.
        #[arg(long)]
        trajectories: bool,
    },
    /// Equilibria with their kinds, residues and linearizations.
    Classify { field: PathBuf },
    /// Integrate one orbit, or trace all separatrices.
    Trace(TraceArgs),
    /// Blow-up and blow-down portraits, or the mode-specific trees.
    Portrait { field: PathBuf },
    /// Construct a field realizing a target and verify it.
    Realize {
        kind: Kind,
        /// Canonical code, or a catalog index (with --size).
        target: String,
        #[arg(long)]
        size: Option<String>,
    },
    /// Catalog as JSON lines of canonical codes.
    Enumerate {
        kind: Kind,
        size: String,
        /// Identify mirror images (nc-tree default).
        #[arg(long, conflicts_with = "strict")]
        reflect: bool,
        /// Distinguish mirror images (planar-tree default).
        #[arg(long)]
        strict: bool,
    },
    /// Closed-form catalog size.
    Count { kind: Kind, size: String },
    /// Nondegeneracy conditions; exit code 0 iff all pass.
    CheckNondeg { field: PathBuf },
    /// SVG phase portrait.
    Render {
        field: PathBuf,
        #[arg(long)]
        charts: bool,
        #[arg(long)]
        size: Option<u32>,
        #[arg(long)]
        density: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    pub field: PathBuf,
    /// Start point `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<String>,
    /// Interpret `--from` in the chart `z = 1/w`.
    #[arg(long)]
    pub z: bool,
    /// Direction of complex time; 0 integrates the regularized real flow.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 100.0, allow_hyphen_values = true)]
    pub t_max: f64,
    #[arg(long)]
    pub backward: bool,
    /// Trace all separatrices instead of one orbit.
    #[arg(long)]
    pub separatrices: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    #[value(alias = "planar-tree")]
    PlanarTrees,
    #[value(alias = "nc-tree")]
    NcTrees,
    #[value(alias = "dual-pair")]
    DualPairs,
}

/// All tunable parameters; `--config` overrides any subset.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Settings {
    pub integrator: IntegratorConfig,
    pub separatrix: SeparatrixConfig,
    pub nondeg: NondegConfig,
    pub realize: RealizeConfig,
    pub render: RenderSpec,
}

impl Settings {
    /// Defaults with `over` merged in; unknown keys are rejected.
    pub fn with_overrides(over: &Value) -> Result<Settings, String> {
        let mut base = serde_json::to_value(Settings::default()).map_err(|e| e.to_string())?;
        merge(&mut base, over, "")?;
        serde_json::from_value(base).map_err(|e| e.to_string())
    }
}

fn merge(base: &mut Value, over: &Value, path: &str) -> Result<(), String> {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let p = format!("{path}/{k}");
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v, &p)?,
                    None => return Err(format!("unknown setting {p}")),
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v.clone();
            Ok(())
        }
    }
}

/// Result of a command: what to print and the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    pub code: i32,
}

impl Outcome {
    fn json(v: Value, code: i32) -> Outcome {
        Outcome {
            body: to_json(v),
            code,
        }
    }
}

/// Rounds every float to a multiple of `1e-12` so that reruns print
/// identical bytes.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            let r = (x * 1e12).round() / 1e12;
            let r = if r == 0.0 { 0.0 } else { r };
            *v = serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number);
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn to_json(mut v: Value) -> String {
    round_floats(&mut v);
    serde_json::to_string_pretty(&v).expect("serializable") + "\n"
}

fn with_schema(mut v: Value) -> Value {
    if let Value::Object(o) = &mut v {
        o.insert("schema".into(), Value::String(SCHEMA.into()));
    }
    v
}

fn error_outcome(stage: &str, msg: impl std::fmt::Display, code: i32) -> Outcome {
    Outcome::json(
        json!({"schema": SCHEMA, "error": {"stage": stage, "message": msg.to_string()}}),
        code,
    )
}

fn value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn read_field(path: &PathBuf) -> Result<RationalField, String> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map_err(|e| e.to_string())?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?
    };
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_point(s: &str) -> Result<C64, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected re,im, got {s:?}"))?;
    let re = a.trim().parse().map_err(|_| format!("bad real part {a:?}"))?;
    let im = b.trim().parse().map_err(|_| format!("bad imaginary part {b:?}"))?;
    Ok(C64::new(re, im))
}

/// Size in the natural unit of `kind`: vertices for planar trees, edges
/// otherwise. Accepts `N`, `N-vertices` and `N-edges`.
pub fn parse_size(kind: Kind, s: &str) -> Result<usize, String> {
    let bad = || format!("bad size {s:?}");
    let (n, unit) = match s.split_once('-') {
        Some((n, u)) => (n, Some(u)),
        None => (s, None),
    };
    let n: usize = n.parse().map_err(|_| bad())?;
    let vertices_natural = kind == Kind::PlanarTrees;
    match unit {
        None => Ok(n),
        Some("vertices" | "vertex") if vertices_natural => Ok(n),
        Some("vertices" | "vertex") => n.checked_sub(1).ok_or_else(bad),
        Some("edges" | "edge") if vertices_natural => Ok(n + 1),
        Some("edges" | "edge") => Ok(n),
        Some(_) => Err(bad()),
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Outcome {
    let settings = match &cli.config {
        None => Settings::default(),
        Some(p) => {
            let loaded = std::fs::read_to_string(p)
                .map_err(|e| format!("{}: {e}", p.display()))
                .and_then(|t| serde_json::from_str::<Value>(&t).map_err(|e| e.to_string()))
                .and_then(|v| Settings::with_overrides(&v));
            match loaded {
                Ok(s) => s,
                Err(e) => return error_outcome("config", e, EXIT_USAGE),
            }
        }
    };
    match &cli.command {
        Command::Analyze {
            field,
            render,
            charts,
            trajectories,
        } => with_field(field, |f| {
            let (out, code) = analyze(&f, &settings, *trajectories);
            if let (Some(path), EXIT_OK) = (render, code) {
                let spec = RenderSpec {
                    view: if *charts { View::Charts } else { settings.render.view },
                    ..settings.render.clone()
                };
                let svg = render_with(&f, &settings, &spec);
                if let Err(e) = std::fs::write(path, svg) {
                    return error_outcome("render", e, EXIT_USAGE);
                }
            }
            Outcome::json(out, code)
        }),
        Command::Classify { field } => with_field(field, |f| Outcome::json(classify(&f), EXIT_OK)),
        Command::Trace(args) => with_field(&args.field, |f| trace(&f, args, &settings)),
        Command::Portrait { field } => with_field(field, |f| match portraits(&f, &settings.separatrix) {
            Ok(v) => Outcome::json(with_schema(v), EXIT_OK),
            Err((stage, e)) => error_outcome(stage, e, EXIT_ANALYSIS),
        }),
        Command::Realize { kind, target, size } => realize(*kind, target, size.as_deref(), &settings.realize),
        Command::Enumerate {
            kind,
            size,
            reflect,
            strict,
        } => enumerate(*kind, size, *reflect, *strict),
        Command::Count { kind, size } => count(*kind, size),
        Command::CheckNondeg { field } => with_field(field, |f| {
            let report = check_nondegeneracy(&f, &settings.nondeg);
            let code = if report.overall { EXIT_OK } else { EXIT_VERIFICATION };
            Outcome::json(with_schema(value(&report)), code)
        }),
        Command::Render {
            field,
            charts,
            size,
            density,
        } => with_field(field, |f| {
            let mut spec = settings.render.clone();
            if *charts {
                spec.view = View::Charts;
            }
            if let Some(s) = size {
                spec.size = *s;
            }
            if let Some(d) = density {
                spec.density = *d;
            }
            Outcome {
                body: render_with(&f, &settings, &spec),
                code: EXIT_OK,
            }
        }),
    }
}

fn with_field(path: &PathBuf, k: impl FnOnce(RationalField) -> Outcome) -> Outcome {
    match read_field(path) {
        Ok(f) => k(f),
        Err(e) => error_outcome("input", e, EXIT_USAGE),
    }
}

fn classify(f: &RationalField) -> Value {
    let records = f.classify();
    let residues = f.residues().ok();
    json!({
        "schema": SCHEMA,
        "field": value(f),
        "mode": value(&f.mode()),
        "equilibria": value(&records),
        "residues": value(&residues),
    })
}

fn separatrices_of(f: &RationalField, cfg: &SeparatrixConfig) -> Result<Vec<Separatrix>, String> {
    match f.mode() {
        Mode::Polynomial | Mode::AntiPolynomial => trace_boundary_separatrices(f, cfg),
        _ => trace_all(f, cfg),
    }
    .map_err(|e| e.to_string())
}

/// Separatrix JSON; without `full`, samples are replaced by the end point.
fn separatrix_json(seps: &[Separatrix], full: bool) -> Value {
    let mut v = value(&seps);
    if !full {
        if let Value::Array(items) = &mut v {
            for it in items {
                if let Value::Object(o) = it {
                    if let Some(Value::Array(samples)) = o.remove("samples") {
                        o.insert("end".into(), samples.last().cloned().unwrap_or(Value::Null));
                        o.insert("sample_count".into(), json!(samples.len()));
                    }
                }
            }
        }
    }
    v
}

type StageError = (&'static str, String);

fn portraits_from(f: &RationalField, seps: &[Separatrix]) -> Result<Value, StageError> {
    let s = |e: crate::portrait::PortraitError| ("portrait", e.to_string());
    Ok(match f.mode() {
        Mode::Polynomial => {
            let t = reduced_connection_graph(f, seps).map_err(s)?;
            json!({
                "reduced_graph": value(&t),
                "codes": {
                    "colored": t.canonical_code(Policies::STRICT).code,
                    "uncolored": t.uncolored().canonical_code(Policies::STRICT).code,
                },
            })
        }
        Mode::AntiPolynomial => {
            let (red, blue) = antipolynomial_trees(f, seps).map_err(s)?;
            json!({
                "nc_trees": {"red": value(&red), "blue": value(&blue)},
                "codes": {"red": red.canonical(false), "blue": blue.canonical(false)},
                "dual": red.dual() == blue,
            })
        }
        _ => {
            let p = build_portraits(f, seps).map_err(s)?;
            json!({
                "c_plus": value(&p.c_plus),
                "c_minus": value(&p.c_minus),
                "connection": value(&p.connection),
                "codes": {
                    "c_plus": p.c_plus.canonical_code(Policies::STRICT).code,
                    "c_minus": p.c_minus.canonical_code(Policies::STRICT).code,
                },
                "duality": value(&check_duality(&p.c_plus, &p.c_minus)),
                "euler": [p.c_plus.euler_characteristic(), p.c_minus.euler_characteristic()],
            })
        }
    })
}

fn portraits(f: &RationalField, cfg: &SeparatrixConfig) -> Result<Value, StageError> {
    let seps = separatrices_of(f, cfg).map_err(|e| ("separatrix", e))?;
    portraits_from(f, &seps)
}

fn analyze(f: &RationalField, settings: &Settings, full: bool) -> (Value, i32) {
    let mut out = classify(f);
    let report = check_nondegeneracy(f, &settings.nondeg);
    out["nondegeneracy"] = value(&report);
    let seps = match separatrices_of(f, &settings.separatrix) {
        Ok(s) => s,
        Err(e) => {
            out["error"] = json!({"stage": "separatrix", "message": e});
            return (out, EXIT_ANALYSIS);
        }
    };
    out["separatrices"] = separatrix_json(&seps, full);
    match portraits_from(f, &seps) {
        Ok(p) => {
            out["portraits"] = p;
            (out, EXIT_OK)
        }
        Err((stage, e)) => {
            out["error"] = json!({"stage": stage, "message": e});
            (out, EXIT_ANALYSIS)
        }
    }
}

fn trace(f: &RationalField, args: &TraceArgs, settings: &Settings) -> Outcome {
    if args.separatrices {
        return match separatrices_of(f, &settings.separatrix) {
            Ok(s) => Outcome::json(json!({"schema": SCHEMA, "separatrices": separatrix_json(&s, true)}), EXIT_OK),
            Err(e) => error_outcome("separatrix", e, EXIT_ANALYSIS),
        };
    }
    let Some(from) = &args.from else {
        return error_outcome("input", "trace needs --from or --separatrices", EXIT_USAGE);
    };
    let v = match parse_point(from) {
        Ok(v) => v,
        Err(e) => return error_outcome("input", e, EXIT_USAGE),
    };
    let start = if args.z { SpherePoint::z(v) } else { SpherePoint::w(v) };
    let t = if args.backward { -args.t_max } else { args.t_max };
    match integrate(f, start, args.theta, t, &settings.integrator) {
        Ok(tr) => Outcome::json(json!({"schema": SCHEMA, "trajectory": value(&tr)}), EXIT_OK),
        Err(e) => error_outcome("flow", e, EXIT_ANALYSIS),
    }
}

fn realize_code(e: &RealizeError) -> i32 {
    match e {
        RealizeError::Budget(_) | RealizeError::InvalidTarget(_) | RealizeError::Combinat(_) => EXIT_USAGE,
        RealizeError::VerificationFailed { .. } | RealizeError::NoShortLeaf(_) => EXIT_VERIFICATION,
        _ => EXIT_ANALYSIS,
    }
}

fn catalog_index(target: &str) -> Option<usize> {
    target.strip_prefix('#').unwrap_or(target).parse().ok()
}

fn realize(kind: Kind, target: &str, size: Option<&str>, cfg: &RealizeConfig) -> Outcome {
    let usage = |e: String| error_outcome("input", e, EXIT_USAGE);
    let pick = |n: usize| -> Result<usize, String> {
        let i = catalog_index(target).ok_or("unreachable")?;
        if i >= n {
            return Err(format!("catalog index {i} out of range 0..{n}"));
        }
        Ok(i)
    };
    let by_index = catalog_index(target).is_some();
    let size = match (by_index, size) {
        (true, Some(s)) => match parse_size(kind, s) {
            Ok(n) => Some(n),
            Err(e) => return usage(e),
        },
        (true, None) => return usage("a catalog index needs --size".into()),
        (false, _) => None,
    };
    let plan = match kind {
        Kind::PlanarTrees => {
            let tree = match size {
                Some(n) => match planar_trees(n, Policies::STRICT) {
                    Ok(cat) => match pick(cat.len()) {
                        Ok(i) => cat.into_values().nth(i).expect("index checked"),
                        Err(e) => return usage(e),
                    },
                    Err(e) => return usage(e.to_string()),
                },
                None => match PlaneMultigraph::from_code(target) {
                    Ok(g) => g,
                    Err(e) => return usage(e),
                },
            };
            realize_polynomial(&tree, cfg)
        }
        Kind::DualPairs => {
            let pair = match size {
                Some(n) => {
                    let cat: Vec<DualPair> = dual_pair_catalog(n).into_iter().filter(|p| p.d_prime() == n).collect();
                    match pick(cat.len()) {
                        Ok(i) => cat[i].clone(),
                        Err(e) => return usage(e),
                    }
                }
                None => match PlaneMultigraph::from_code(target).map_err(|e| e.to_string()).and_then(|g| {
                    DualPair::from_c_plus(&g).map_err(|e| e.to_string())
                }) {
                    Ok(p) => p,
                    Err(e) => return usage(e),
                },
            };
            realize_rational(&pair, cfg)
        }
        Kind::NcTrees => {
            let tree = match size {
                Some(n) => match enumerate_nc_trees(n, true) {
                    Ok(cat) => match pick(cat.len()) {
                        Ok(i) => cat[i].clone(),
                        Err(e) => return usage(e),
                    },
                    Err(e) => return usage(e.to_string()),
                },
                None => match NcTree::parse(target) {
                    Ok(t) => t,
                    Err(e) => return usage(e.to_string()),
                },
            };
            realize_antipolynomial(&tree, cfg)
        }
    };
    match plan {
        Ok(p) => {
            let code = if p.verification.passed { EXIT_OK } else { EXIT_VERIFICATION };
            Outcome::json(with_schema(value(&p)), code)
        }
        Err(e) => error_outcome("realize", &e, realize_code(&e)),
    }
}

fn enumerate(kind: Kind, size: &str, reflect: bool, strict: bool) -> Outcome {
    let n = match parse_size(kind, size) {
        Ok(n) => n,
        Err(e) => return error_outcome("input", e, EXIT_USAGE),
    };
    let mut lines: Vec<Value> = Vec::new();
    match kind {
        Kind::PlanarTrees => {
            let pol = if reflect { Policies::UNORIENTED } else { Policies::STRICT };
            match planar_trees(n, pol) {
                Ok(cat) => {
                    for (i, code) in cat.keys().enumerate() {
                        lines.push(json!({"kind": "planar_tree", "vertices": n, "index": i, "code": code.code}));
                    }
                }
                Err(e) => return error_outcome("enumerate", e, EXIT_USAGE),
            }
        }
        Kind::NcTrees => match enumerate_nc_trees(n, !strict) {
            Ok(cat) => {
                for (i, t) in cat.iter().enumerate() {
                    lines.push(json!({
                        "kind": "nc_tree", "edges": n, "index": i,
                        "code": t.canonical(!strict),
                        "self_dual": t.is_self_dual(!strict),
                    }));
                }
            }
            Err(e) => return error_outcome("enumerate", e, EXIT_USAGE),
        },
        Kind::DualPairs => {
            if n > 2 {
                return error_outcome("enumerate", "dual-pair catalog covers at most 2 edges", EXIT_USAGE);
            }
            for (i, p) in dual_pair_catalog(n).iter().filter(|p| p.d_prime() == n).enumerate() {
                let [a, b] = p.codes();
                lines.push(json!({"kind": "dual_pair", "edges": n, "index": i, "code": a.code, "c_minus": b.code}));
            }
        }
    }
    let mut body = String::new();
    for l in lines {
        let mut l = with_schema(l);
        round_floats(&mut l);
        body.push_str(&serde_json::to_string(&l).expect("serializable"));
        body.push('\n');
    }
    Outcome { body, code: EXIT_OK }
}

fn count(kind: Kind, size: &str) -> Outcome {
    let n = match parse_size(kind, size) {
        Ok(n) => n,
        Err(e) => return error_outcome("input", e, EXIT_USAGE),
    };
    let (name, unit, c) = match kind {
        Kind::PlanarTrees if n >= 2 => ("planar_tree", "vertices", count_planar_trees(n)),
        Kind::NcTrees if n >= 1 => ("nc_tree", "edges", count_nc_trees(n)),
        Kind::DualPairs if n <= 2 => (
            "dual_pair",
            "edges",
            dual_pair_catalog(n).iter().filter(|p| p.d_prime() == n).count() as u128,
        ),
        _ => return error_outcome("count", format!("no count for size {n}"), EXIT_USAGE),
    };
    Outcome::json(json!({"schema": SCHEMA, "kind": name, unit: n, "count": c}), EXIT_OK)
}

fn render_with(f: &RationalField, settings: &Settings, spec: &RenderSpec) -> String {
    let seps = separatrices_of(f, &settings.separatrix).unwrap_or_default();
    render_svg(f, &seps, &settings.integrator, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> Outcome {
        let mut full = vec!["sphere-flows"];
        full.extend_from_slice(args);
        run(&Cli::try_parse_from(full).unwrap())
    }

    fn tmp_field(name: &str, json: &str) -> PathBuf {
        let p = std::env::temp_dir().join(format!("sphere-flows-test-{}-{name}.json", std::process::id()));
        std::fs::write(&p, json).unwrap();
        p
    }

    #[test]
    fn sizes_parse_in_natural_units() {
        assert_eq!(parse_size(Kind::NcTrees, "5-vertices"), Ok(4));
        assert_eq!(parse_size(Kind::NcTrees, "4"), Ok(4));
        assert_eq!(parse_size(Kind::PlanarTrees, "16"), Ok(16));
        assert_eq!(parse_size(Kind::PlanarTrees, "3-edges"), Ok(4));
        assert!(parse_size(Kind::PlanarTrees, "x").is_err());
    }

    #[test]
    fn count_planar_trees_sixteen() {
        let o = run_args(&["count", "planar-trees", "16"]);
        assert_eq!(o.code, 0);
        let v: Value = serde_json::from_str(&o.body).unwrap();
        assert_eq!(v["count"], json!(323396));
        assert_eq!(v["schema"], json!(SCHEMA));
    }

    #[test]
    fn enumerate_nc_trees_five_vertices() {
        let o = run_args(&["enumerate", "nc-trees", "5-vertices"]);
        assert_eq!(o.code, 0);
        let lines: Vec<Value> = o.body.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines.iter().filter(|l| l["self_dual"] == json!(true)).count(), 3);
    }

    #[test]
    fn config_overrides_and_rejects_unknown_keys() {
        let s = Settings::with_overrides(&json!({"separatrix": {"seed_offset": 1e-7}})).unwrap();
        assert_eq!(s.separatrix.seed_offset, 1e-7);
        assert_eq!(s.separatrix.t_max, SeparatrixConfig::default().t_max);
        assert!(Settings::with_overrides(&json!({"separatrix": {"bogus": 1}})).is_err());
    }

    #[test]
    fn rounding_is_deterministic() {
        let mut v = json!({"a": [0.1 + 0.2, 1e-15, -3.0]});
        round_floats(&mut v);
        assert_eq!(v, json!({"a": [0.3, 0.0, -3.0]}));
    }

    #[test]
    fn analyze_cubic_example_twice_is_byte_identical() {
        let p = tmp_field("cubic", r#"{"a":[-1,0],"zeros":[[1,0],[-2,0]],"poles":[[0,0]]}"#);
        let a = run_args(&["analyze", p.to_str().unwrap()]);
        let b = run_args(&["analyze", p.to_str().unwrap()]);
        assert_eq!(a.code, 0, "{}", a.body);
        assert_eq!(a.body, b.body);
        let v: Value = serde_json::from_str(&a.body).unwrap();
        assert_eq!(v["portraits"]["c_plus"]["vertices"].as_array().unwrap().len(), 1);
        assert_eq!(v["portraits"]["c_minus"]["vertices"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn check_nondeg_exit_codes() {
        let good = tmp_field("quad", r#"{"a":[1,0],"zeros":[[1,0],[-1,0]],"poles":[]}"#);
        assert_eq!(run_args(&["check-nondeg", good.to_str().unwrap()]).code, EXIT_OK);
        let centers = tmp_field("cyclo", r#"{"a":[1,0],"zeros":[[1,0],[0,1],[-1,0],[0,-1]],"poles":[]}"#);
        let o = run_args(&["check-nondeg", centers.to_str().unwrap()]);
        assert_eq!(o.code, EXIT_VERIFICATION);
        let v: Value = serde_json::from_str(&o.body).unwrap();
        assert_eq!(v["cond_iii"]["verdict"], json!("fail"));
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_args(&["classify", "/nonexistent.json"]).code, EXIT_USAGE);
        assert_eq!(run_args(&["realize", "nc-trees", "3"]).code, EXIT_USAGE);
        assert_eq!(run_args(&["count", "dual-pairs", "5"]).code, EXIT_USAGE);
    }

    #[test]
    fn realize_by_catalog_index() {
        let o = run_args(&["realize", "nc-trees", "#1", "--size", "3"]);
        assert_eq!(o.code, 0, "{}", o.body);
        let v: Value = serde_json::from_str(&o.body).unwrap();
        assert_eq!(v["verification"]["passed"], json!(true));
        assert_eq!(v["field"]["mode"], json!("antipolynomial"));
    }
}

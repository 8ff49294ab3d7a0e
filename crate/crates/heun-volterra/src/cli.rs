//! Command-line surface: job specs in, plot-ready CSV or JSON out.
//!
//! Every run resolves to a [`JobSpec`], echoed verbatim into the output
//! (`# spec = {...}` comment line in CSV, `spec` field in JSON), so an
//! artifact always records how to reproduce itself. Numbers are written
//! with 17 significant digits, '.' decimal separator and '\n' line
//! endings; identical specs produce byte-identical files.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::heun::{
    self, EngineConfig, HeunClass, HeunError, HeunParams, InitialData, KernelKind, Method,
};
use crate::oracle::{self, OdeProblem, OracleError, SolverConfig};
use crate::quadrature::QuadConfig;
use crate::teukolsky::{self, BranchChoice, TeukolskyError, TeukolskyInput};
use crate::util;
use crate::C64;

/// Complex scalar that reads from any of: number, "re,im" string,
/// [re, im] pair, {"re": .., "im": ..} object; always written back as the
/// locale-proof "re,im" string.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cx(pub C64);

impl From<C64> for Cx {
    fn from(v: C64) -> Self {
        Cx(v)
    }
}

impl FromStr for Cx {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        util::parse_complex(s).map(Cx)
    }
}

impl std::fmt::Display for Cx {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.0.re, self.0.im)
    }
}

impl Serialize for Cx {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Cx {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
            Pair([f64; 2]),
            Obj {
                re: f64,
                #[serde(default)]
                im: f64,
            },
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(re) => Ok(Cx(C64::new(re, 0.0))),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Pair([re, im]) => Ok(Cx(C64::new(re, im))),
            Raw::Obj { re, im } => Ok(Cx(C64::new(re, im))),
        }
    }
}

/// Class parameters keyed by name; BTreeMap keeps the echo deterministic.
pub type ParamsSpec = BTreeMap<String, Cx>;

/// A fully resolved job: everything needed to reproduce one artifact.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JobSpec {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h0: Option<Cx>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dh0: Option<Cx>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<Cx>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alm: Option<Cx>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantity: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn from_heun(e: HeunError) -> CliError {
    match e {
        HeunError::BadParams(_)
        | HeunError::SingularInitialPoint { .. }
        | HeunError::OutsideInterval { .. }
        | HeunError::GridCrossesSingularity { .. } => CliError::Validation(e.to_string()),
        HeunError::QuadratureFailure { .. }
        | HeunError::NonConvergence(_)
        | HeunError::Volterra(_) => CliError::Numerical(e.to_string()),
    }
}

fn from_oracle(e: OracleError) -> CliError {
    match e {
        OracleError::StepUnderflow { .. } | OracleError::MaxSteps { .. } => {
            CliError::Numerical(e.to_string())
        }
        _ => CliError::Validation(e.to_string()),
    }
}

fn from_teukolsky(e: TeukolskyError) -> CliError {
    match e {
        TeukolskyError::Heun(inner) => from_heun(inner),
        other => CliError::Validation(other.to_string()),
    }
}

/// One output record; `order` appears for series sweeps, `err_est` when
/// the evaluator supplies one.
#[derive(Clone, Copy, Debug)]
pub struct Row {
    pub z: f64,
    pub value: C64,
    pub order: Option<usize>,
    pub err_est: Option<f64>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub spec: JobSpec,
    pub rows: Vec<Row>,
    pub diagnostics: BTreeMap<String, serde_json::Value>,
}

// ---------------------------------------------------------------------
// Flag surface.

#[derive(Parser, Debug)]
#[command(
    name = "heun",
    about = "Integral-series evaluation of the Heun classes, with an ODE \
             oracle and the Kerr radial reduction",
    version
)]
struct Args {
    /// JSON job spec replacing all other flags (the echoed `spec` object
    /// of a previous run is accepted verbatim).
    #[arg(long, global = true, value_name = "FILE")]
    spec: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Debug, Clone, clap::Args)]
struct ClassArgs {
    /// general | confluent | biconfluent | doubly-confluent | triconfluent
    #[arg(long)]
    class: Option<String>,
    /// JSON object of class parameters, e.g. '{"gamma":2,"q":"1,0.5"}'
    #[arg(long)]
    params: Option<String>,
}

#[derive(Debug, Clone, clap::Args)]
struct RangeArgs {
    #[arg(long, allow_negative_numbers = true)]
    from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    to: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Debug, Clone, clap::Args)]
struct InitArgs {
    #[arg(long, allow_negative_numbers = true)]
    z0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    h0: Option<Cx>,
    #[arg(long, allow_hyphen_values = true)]
    dh0: Option<Cx>,
}

#[derive(Debug, Clone, clap::Args)]
struct OutArgs {
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// File path; stdout when absent.
    #[arg(long)]
    output: Option<String>,
}

#[derive(Debug, Clone, clap::Args)]
struct KerrArgs {
    #[arg(long, allow_negative_numbers = true)]
    mass: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Spin weight (half-integers allowed).
    #[arg(long, allow_negative_numbers = true)]
    s: Option<f64>,
    /// Azimuthal number.
    #[arg(long, allow_negative_numbers = true)]
    m: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<Cx>,
    #[arg(long, allow_hyphen_values = true)]
    alm: Option<Cx>,
    /// Sign-choice index 0..=7 (bit 2 zeta, bit 1 xi, bit 0 eta).
    #[arg(long)]
    branch: Option<u8>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate the solution on a range.
    Eval {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        init: InitArgs,
        #[command(flatten)]
        range: RangeArgs,
        /// neumann | volterra-direct
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        order: Option<usize>,
        /// Stop the series early once the increment drops below this.
        #[arg(long, allow_negative_numbers = true)]
        series_tol: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Truncation sweep: one row per (z, order).
    Series {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        init: InitArgs,
        #[command(flatten)]
        range: RangeArgs,
        /// Comma-separated list, e.g. 1,2,3,6,9.
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<usize>>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// First kernel column K(z, z0) on a range.
    Volterra {
        #[command(flatten)]
        class: ClassArgs,
        /// 1 or 2.
        #[arg(long)]
        kind: Option<u8>,
        #[arg(long, allow_negative_numbers = true)]
        z0: Option<f64>,
        #[command(flatten)]
        range: RangeArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Adaptive ODE reference samples of the same initial-value problem.
    Oracle {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        init: InitArgs,
        #[command(flatten)]
        range: RangeArgs,
        #[arg(long, allow_negative_numbers = true)]
        rel_tol: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        abs_tol: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Evaluate, then defect-check the samples against the equation.
    Residual {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        init: InitArgs,
        #[command(flatten)]
        range: RangeArgs,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        order: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Print the radial-to-confluent reduction parameter bundle (JSON).
    TeukolskyMap {
        #[command(flatten)]
        kerr: KerrArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Evaluate the radial solution R(r(z)) on z > 1.
    TeukolskyEval {
        #[command(flatten)]
        kerr: KerrArgs,
        #[command(flatten)]
        init: InitArgs,
        #[command(flatten)]
        range: RangeArgs,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        order: Option<usize>,
        /// radial (assembled R) | h (bare H).
        #[arg(long)]
        quantity: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Large-z and near-horizon models for a reduction (JSON).
    Asym {
        #[command(flatten)]
        kerr: KerrArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn req<T: Clone>(v: &Option<T>, name: &str) -> Result<T, CliError> {
    v.clone()
        .ok_or_else(|| CliError::Validation(format!("missing required field `{name}`")))
}

impl Cmd {
    fn into_spec(self) -> Result<JobSpec, CliError> {
        let mut spec = JobSpec::default();
        let set_class = |spec: &mut JobSpec, c: ClassArgs| -> Result<(), CliError> {
            spec.class = c.class;
            if let Some(raw) = c.params {
                let parsed: ParamsSpec = serde_json::from_str(&raw).map_err(|e| {
                    CliError::Validation(format!("--params is not a JSON object: {e}"))
                })?;
                spec.params = Some(parsed);
            }
            Ok(())
        };
        let set_init = |spec: &mut JobSpec, i: InitArgs| {
            spec.z0 = i.z0;
            spec.h0 = i.h0;
            spec.dh0 = i.dh0;
        };
        let set_range = |spec: &mut JobSpec, r: RangeArgs| {
            spec.from = r.from;
            spec.to = r.to;
            spec.points = r.points;
        };
        let set_out = |spec: &mut JobSpec, o: OutArgs| {
            spec.format = o.format;
            spec.output = o.output;
        };
        let set_kerr = |spec: &mut JobSpec, k: KerrArgs| {
            spec.mass = k.mass;
            spec.a = k.a;
            spec.s = k.s;
            spec.m = k.m;
            spec.omega = k.omega;
            spec.alm = k.alm;
            spec.branch = k.branch;
        };
        match self {
            Cmd::Eval { class, init, range, method, order, series_tol, out } => {
                spec.command = "eval".into();
                set_class(&mut spec, class)?;
                set_init(&mut spec, init);
                set_range(&mut spec, range);
                spec.method = method;
                spec.order = order;
                spec.series_tol = series_tol;
                set_out(&mut spec, out);
            }
            Cmd::Series { class, init, range, orders, out } => {
                spec.command = "series".into();
                set_class(&mut spec, class)?;
                set_init(&mut spec, init);
                set_range(&mut spec, range);
                spec.orders = orders;
                set_out(&mut spec, out);
            }
            Cmd::Volterra { class, kind, z0, range, out } => {
                spec.command = "volterra".into();
                set_class(&mut spec, class)?;
                spec.kind = kind;
                spec.z0 = z0;
                set_range(&mut spec, range);
                set_out(&mut spec, out);
            }
            Cmd::Oracle { class, init, range, rel_tol, abs_tol, out } => {
                spec.command = "oracle".into();
                set_class(&mut spec, class)?;
                set_init(&mut spec, init);
                set_range(&mut spec, range);
                spec.rel_tol = rel_tol;
                spec.abs_tol = abs_tol;
                set_out(&mut spec, out);
            }
            Cmd::Residual { class, init, range, method, order, out } => {
                spec.command = "residual".into();
                set_class(&mut spec, class)?;
                set_init(&mut spec, init);
                set_range(&mut spec, range);
                spec.method = method;
                spec.order = order;
                set_out(&mut spec, out);
            }
            Cmd::TeukolskyMap { kerr, out } => {
                spec.command = "teukolsky-map".into();
                set_kerr(&mut spec, kerr);
                set_out(&mut spec, out);
            }
            Cmd::TeukolskyEval { kerr, init, range, method, order, quantity, out } => {
                spec.command = "teukolsky-eval".into();
                set_kerr(&mut spec, kerr);
                set_init(&mut spec, init);
                set_range(&mut spec, range);
                spec.method = method;
                spec.order = order;
                spec.quantity = quantity;
                set_out(&mut spec, out);
            }
            Cmd::Asym { kerr, out } => {
                spec.command = "asym".into();
                set_kerr(&mut spec, kerr);
                set_out(&mut spec, out);
            }
        }
        Ok(spec)
    }
}

// ---------------------------------------------------------------------
// Spec resolution and execution.

fn fill_defaults(spec: &mut JobSpec) {
    match spec.command.as_str() {
        "teukolsky-map" | "asym" => {
            spec.format.get_or_insert_with(|| "json".into());
            spec.branch.get_or_insert(7);
        }
        "teukolsky-eval" => {
            spec.format.get_or_insert_with(|| "csv".into());
            spec.branch.get_or_insert(7);
            spec.method.get_or_insert_with(|| "volterra-direct".into());
            spec.quantity.get_or_insert_with(|| "radial".into());
        }
        "eval" | "residual" => {
            spec.format.get_or_insert_with(|| "csv".into());
            spec.method.get_or_insert_with(|| "volterra-direct".into());
        }
        "oracle" => {
            spec.format.get_or_insert_with(|| "csv".into());
            spec.rel_tol.get_or_insert(1e-10);
            spec.abs_tol.get_or_insert(1e-12);
        }
        _ => {
            spec.format.get_or_insert_with(|| "csv".into());
        }
    }
    if spec.method.as_deref() == Some("neumann") {
        spec.order.get_or_insert(9);
    }
}

fn parse_class(spec: &JobSpec) -> Result<(HeunClass, HeunParams), CliError> {
    let name = req(&spec.class, "class")?;
    let class: HeunClass = name
        .parse()
        .map_err(|e: String| CliError::Validation(e))?;
    let params = req(&spec.params, "params")?;
    let build = |keys: &[&str]| -> Result<Vec<C64>, CliError> {
        for k in params.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(CliError::Validation(format!(
                    "unknown parameter `{k}` for class {class}; expected {keys:?}"
                )));
            }
        }
        keys.iter()
            .map(|k| {
                params
                    .get(*k)
                    .map(|c| c.0)
                    .ok_or_else(|| CliError::Validation(format!("missing parameter `{k}`")))
            })
            .collect()
    };
    let p = match class {
        HeunClass::General => {
            let v = build(&["gamma", "delta", "epsilon", "alpha_beta", "q", "t"])?;
            HeunParams::General {
                gamma: v[0],
                delta: v[1],
                epsilon: v[2],
                alpha_beta: v[3],
                q: v[4],
                t: v[5],
            }
        }
        HeunClass::Confluent => {
            let v = build(&["gamma", "delta", "epsilon", "alpha", "q"])?;
            HeunParams::Confluent { gamma: v[0], delta: v[1], epsilon: v[2], alpha: v[3], q: v[4] }
        }
        HeunClass::Biconfluent => {
            let v = build(&["gamma", "delta", "epsilon", "alpha", "q"])?;
            HeunParams::Biconfluent {
                gamma: v[0],
                delta: v[1],
                epsilon: v[2],
                alpha: v[3],
                q: v[4],
            }
        }
        HeunClass::DoublyConfluent => {
            let v = build(&["gamma", "delta", "alpha", "q"])?;
            HeunParams::DoublyConfluent { gamma: v[0], delta: v[1], alpha: v[2], q: v[3] }
        }
        HeunClass::Triconfluent => {
            let v = build(&["gamma", "delta", "epsilon", "alpha", "q"])?;
            HeunParams::Triconfluent {
                gamma: v[0],
                delta: v[1],
                epsilon: v[2],
                alpha: v[3],
                q: v[4],
            }
        }
    };
    Ok((class, p))
}

fn parse_method(spec: &JobSpec) -> Result<Method, CliError> {
    match spec.method.as_deref().unwrap_or("volterra-direct") {
        "volterra-direct" | "direct" | "volterra" => Ok(Method::VolterraDirect),
        "neumann" | "series" => {
            let order = spec.order.unwrap_or(9);
            if order < 1 {
                return Err(CliError::Validation("order must be >= 1 for neumann".into()));
            }
            Ok(Method::Neumann { order })
        }
        other => Err(CliError::Validation(format!(
            "unknown method `{other}`; use neumann or volterra-direct"
        ))),
    }
}

fn parse_range(spec: &JobSpec) -> Result<Vec<f64>, CliError> {
    let from = req(&spec.from, "from")?;
    let to = req(&spec.to, "to")?;
    let points = req(&spec.points, "points")?;
    if points < 2 {
        return Err(CliError::Validation(format!("points = {points} must be >= 2")));
    }
    if !(from < to) {
        return Err(CliError::Validation(format!(
            "invalid range: from = {from} must be strictly below to = {to}"
        )));
    }
    let mut zs = Vec::with_capacity(points);
    for i in 0..points {
        zs.push(from + (to - from) * i as f64 / (points - 1) as f64);
    }
    zs[0] = from;
    zs[points - 1] = to;
    Ok(zs)
}

fn parse_init(spec: &JobSpec) -> Result<InitialData, CliError> {
    Ok(InitialData {
        z0: req(&spec.z0, "z0")?,
        h0: req(&spec.h0, "h0")?.0,
        dh0: req(&spec.dh0, "dh0")?.0,
    })
}

fn parse_kerr(spec: &JobSpec) -> Result<(TeukolskyInput, BranchChoice), CliError> {
    let input = TeukolskyInput {
        mass: req(&spec.mass, "mass")?,
        a: req(&spec.a, "a")?,
        s: req(&spec.s, "s")?,
        m: req(&spec.m, "m")?,
        omega: req(&spec.omega, "omega")?.0,
        a_lm: req(&spec.alm, "alm")?.0,
    };
    let branch = BranchChoice::from_index(spec.branch.unwrap_or(7))
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok((input, branch))
}

fn cx_json(v: C64) -> serde_json::Value {
    serde_json::Value::String(format!("{},{}", v.re, v.im))
}

/// Execute a resolved spec, producing rows and diagnostics in memory.
pub fn run_spec(spec: &JobSpec) -> Result<RunOutput, CliError> {
    let mut spec = spec.clone();
    fill_defaults(&mut spec);
    match spec.format.as_deref() {
        Some("csv") | Some("json") => {}
        Some(other) => {
            return Err(CliError::Validation(format!(
                "unknown format `{other}`; use csv or json"
            )))
        }
        None => {}
    }
    let mut rows = Vec::new();
    let mut diagnostics = BTreeMap::new();

    match spec.command.as_str() {
        "eval" => {
            let (class, params) = parse_class(&spec)?;
            let init = parse_init(&spec)?;
            let zs = parse_range(&spec)?;
            let method = parse_method(&spec)?;
            let cfg = EngineConfig { series_tol: spec.series_tol, ..Default::default() };
            let pts = heun::evaluate(class, &params, &init, &zs, method, &cfg)
                .map_err(from_heun)?;
            let order = match method {
                Method::Neumann { order } => Some(order),
                Method::VolterraDirect => None,
            };
            for pt in pts {
                rows.push(Row { z: pt.z, value: pt.h, order, err_est: Some(pt.err_est) });
            }
        }
        "series" => {
            let (class, params) = parse_class(&spec)?;
            let init = parse_init(&spec)?;
            let zs = parse_range(&spec)?;
            let orders = req(&spec.orders, "orders")?;
            if orders.is_empty() {
                return Err(CliError::Validation("orders list is empty".into()));
            }
            if let Some(&bad) = orders.iter().find(|&&m| m < 1) {
                return Err(CliError::Validation(format!("order {bad} must be >= 1")));
            }
            for &m in &orders {
                let cfg = EngineConfig::default();
                let pts = heun::evaluate_order_m(class, &params, &init, &zs, m, &cfg)
                    .map_err(from_heun)?;
                for pt in pts {
                    rows.push(Row {
                        z: pt.z,
                        value: pt.h,
                        order: Some(m),
                        err_est: Some(pt.err_est),
                    });
                }
            }
        }
        "volterra" => {
            let (class, params) = parse_class(&spec)?;
            let z0 = req(&spec.z0, "z0")?;
            let zs = parse_range(&spec)?;
            let kind = match req(&spec.kind, "kind")? {
                1 => KernelKind::K1,
                2 => KernelKind::K2,
                other => {
                    return Err(CliError::Validation(format!(
                        "kind = {other} must be 1 or 2"
                    )))
                }
            };
            let ks = heun::kernel_spec(class, &params, kind, QuadConfig::default())
                .map_err(from_heun)?;
            for &z in &zs {
                let v = ks.eval(z, z0).map_err(from_heun)?;
                rows.push(Row { z, value: v, order: None, err_est: None });
            }
        }
        "oracle" => {
            let (class, params) = parse_class(&spec)?;
            let init = parse_init(&spec)?;
            let zs = parse_range(&spec)?;
            let cfg = SolverConfig {
                rel_tol: spec.rel_tol.unwrap_or(1e-10),
                abs_tol: spec.abs_tol.unwrap_or(1e-12),
                ..Default::default()
            };
            let coef = heun::coefficients(class, &params).map_err(from_heun)?;
            let mut right: Vec<(usize, f64)> =
                zs.iter().copied().enumerate().filter(|&(_, z)| z >= init.z0).collect();
            let mut left: Vec<(usize, f64)> =
                zs.iter().copied().enumerate().filter(|&(_, z)| z < init.z0).collect();
            right.sort_by(|x, y| x.1.total_cmp(&y.1));
            left.sort_by(|x, y| y.1.total_cmp(&x.1));
            let mut ys = vec![C64::new(0.0, 0.0); zs.len()];
            for batch in [right, left] {
                if batch.is_empty() {
                    continue;
                }
                let b1 = coef.b1.clone();
                let b2 = coef.b2.clone();
                let problem = OdeProblem::new(
                    Box::new(move |z| b1(z)),
                    Box::new(move |z| b2(z)),
                    init.z0,
                    init.h0,
                    init.dh0,
                );
                let pts: Vec<f64> = batch.iter().map(|&(_, z)| z).collect();
                let sol = oracle::solve(&problem, &pts, &cfg).map_err(from_oracle)?;
                for (&(orig, _), &(y, _)) in batch.iter().zip(sol.iter()) {
                    ys[orig] = y;
                }
            }
            for (i, &z) in zs.iter().enumerate() {
                rows.push(Row { z, value: ys[i], order: None, err_est: None });
            }
        }
        "residual" => {
            let (class, params) = parse_class(&spec)?;
            let init = parse_init(&spec)?;
            let zs = parse_range(&spec)?;
            let method = parse_method(&spec)?;
            let cfg = EngineConfig::default();
            let pts = heun::evaluate(class, &params, &init, &zs, method, &cfg)
                .map_err(from_heun)?;
            let samples: Vec<(f64, C64)> = pts.iter().map(|p| (p.z, p.h)).collect();
            let coef = heun::coefficients(class, &params).map_err(from_heun)?;
            let b1 = coef.b1.clone();
            let b2 = coef.b2.clone();
            let problem = OdeProblem::new(
                Box::new(move |z| b1(z)),
                Box::new(move |z| b2(z)),
                init.z0,
                init.h0,
                init.dh0,
            );
            let r = oracle::residual(&problem, &samples).map_err(from_oracle)?;
            for pt in pts {
                rows.push(Row { z: pt.z, value: pt.h, order: None, err_est: Some(pt.err_est) });
            }
            diagnostics.insert("residual".into(), serde_json::json!(r));
        }
        "teukolsky-map" => {
            if spec.format.as_deref() == Some("csv") {
                return Err(CliError::Validation(
                    "teukolsky-map emits a parameter bundle; use --format json".into(),
                ));
            }
            let (input, branch) = parse_kerr(&spec)?;
            let red = teukolsky::reduce(&input, branch).map_err(from_teukolsky)?;
            diagnostics.insert("p".into(), cx_json(red.p));
            diagnostics.insert("alpha".into(), cx_json(red.alpha));
            diagnostics.insert("gamma".into(), cx_json(red.gamma));
            diagnostics.insert("delta".into(), cx_json(red.delta));
            diagnostics.insert("sigma".into(), cx_json(red.sigma));
            diagnostics.insert("epsilon_che".into(), cx_json(4.0 * red.p));
            diagnostics.insert("alpha_che".into(), cx_json(4.0 * red.alpha * red.p));
            diagnostics.insert("q_che".into(), cx_json(red.sigma));
            diagnostics.insert("xi".into(), cx_json(red.xi));
            diagnostics.insert("eta".into(), cx_json(red.eta));
            diagnostics.insert("zeta_bar".into(), cx_json(red.zeta_bar));
            diagnostics.insert("r_plus".into(), serde_json::json!(red.horizon.r_plus));
            diagnostics.insert("r_minus".into(), serde_json::json!(red.horizon.r_minus));
            diagnostics
                .insert("sigma_plus".into(), cx_json(red.horizon.sigma_plus));
            diagnostics
                .insert("sigma_minus".into(), cx_json(red.horizon.sigma_minus));
            diagnostics
                .insert("branch".into(), serde_json::json!(red.branch.index()));
        }
        "teukolsky-eval" => {
            let (input, branch) = parse_kerr(&spec)?;
            let red = teukolsky::reduce(&input, branch).map_err(from_teukolsky)?;
            let init = parse_init(&spec)?;
            let zs = parse_range(&spec)?;
            let method = parse_method(&spec)?;
            let samples = teukolsky::evaluate_radial(
                &red,
                &init,
                &zs,
                method,
                &EngineConfig::default(),
            )
            .map_err(from_teukolsky)?;
            let want_h = match spec.quantity.as_deref().unwrap_or("radial") {
                "radial" | "r" => false,
                "h" => true,
                other => {
                    return Err(CliError::Validation(format!(
                        "unknown quantity `{other}`; use radial or h"
                    )))
                }
            };
            for smp in samples {
                rows.push(Row {
                    z: smp.z,
                    value: if want_h { smp.h } else { smp.big_r },
                    order: None,
                    err_est: Some(smp.err_est),
                });
            }
            diagnostics.insert("r_plus".into(), serde_json::json!(red.horizon.r_plus));
            diagnostics.insert("r_minus".into(), serde_json::json!(red.horizon.r_minus));
        }
        "asym" => {
            if spec.format.as_deref() == Some("csv") {
                return Err(CliError::Validation(
                    "asym emits model parameters; use --format json".into(),
                ));
            }
            let (input, branch) = parse_kerr(&spec)?;
            let red = teukolsky::reduce(&input, branch).map_err(from_teukolsky)?;
            let inf = teukolsky::asymptotics_infinity(&red);
            let hor = teukolsky::asymptotics_horizon(&red);
            diagnostics.insert(
                "infinity".into(),
                serde_json::json!({
                    "algebraic": {
                        "power": format!("{},{}", inf.algebraic.power.re, inf.algebraic.power.im),
                        "exp_rate": format!("{},{}", inf.algebraic.exp_rate.re, inf.algebraic.exp_rate.im),
                    },
                    "exponential": {
                        "power": format!("{},{}", inf.exponential.power.re, inf.exponential.power.im),
                        "exp_rate": format!("{},{}", inf.exponential.exp_rate.re, inf.exponential.exp_rate.im),
                    },
                    "degenerate_p": inf.degenerate_p,
                    "degenerate_power": format!("{},{}", inf.degenerate_power.re, inf.degenerate_power.im),
                }),
            );
            diagnostics.insert(
                "horizon".into(),
                serde_json::json!({
                    "singular_power": format!("{},{}", hor.singular_power.re, hor.singular_power.im),
                    "constant_only": hor.constant_only,
                    "second_diverges": hor.second_diverges,
                }),
            );
        }
        other => {
            return Err(CliError::Validation(format!(
                "unknown command `{other}`"
            )))
        }
    }

    Ok(RunOutput { spec, rows, diagnostics })
}

// ---------------------------------------------------------------------
// Rendering.

fn render_csv(out: &RunOutput) -> String {
    let has_order = out.rows.iter().any(|r| r.order.is_some());
    let has_err = out.rows.iter().any(|r| r.err_est.is_some());
    let mut s = String::new();
    s.push_str("# spec = ");
    s.push_str(&serde_json::to_string(&out.spec).expect("spec serializes"));
    s.push('\n');
    s.push_str("z,re,im");
    if has_order {
        s.push_str(",order");
    }
    if has_err {
        s.push_str(",err_est");
    }
    s.push('\n');
    for r in &out.rows {
        s.push_str(&util::fmt_f64(r.z));
        s.push(',');
        s.push_str(&util::fmt_f64(r.value.re));
        s.push(',');
        s.push_str(&util::fmt_f64(r.value.im));
        if has_order {
            s.push(',');
            s.push_str(&r.order.map(|o| o.to_string()).unwrap_or_default());
        }
        if has_err {
            s.push(',');
            s.push_str(&r.err_est.map(util::fmt_f64).unwrap_or_default());
        }
        s.push('\n');
    }
    for (k, v) in &out.diagnostics {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    s
}

fn render_json(out: &RunOutput) -> String {
    let rows: Vec<serde_json::Value> = out
        .rows
        .iter()
        .map(|r| {
            let mut obj = serde_json::Map::new();
            obj.insert("z".into(), serde_json::json!(r.z));
            obj.insert("re".into(), serde_json::json!(r.value.re));
            obj.insert("im".into(), serde_json::json!(r.value.im));
            if let Some(o) = r.order {
                obj.insert("order".into(), serde_json::json!(o));
            }
            if let Some(e) = r.err_est {
                obj.insert("err_est".into(), serde_json::json!(e));
            }
            serde_json::Value::Object(obj)
        })
        .collect();
    let doc = serde_json::json!({
        "spec": out.spec,
        "rows": rows,
        "diagnostics": out.diagnostics,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("output serializes");
    s.push('\n');
    s
}

pub fn render(out: &RunOutput) -> String {
    match out.spec.format.as_deref() {
        Some("json") => render_json(out),
        _ => render_csv(out),
    }
}

fn write_artifact(out: &RunOutput) -> Result<(), CliError> {
    let text = render(out);
    match out.spec.output.as_deref() {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Validation(format!("cannot write {path}: {e}"))),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())
                .map_err(|e| CliError::Validation(format!("stdout: {e}")))
        }
    }
}

/// Entry point for the thin binary; returns the process exit code.
pub fn main() -> i32 {
    let args = Args::parse();
    let spec = if let Some(path) = args.spec {
        match std::fs::read_to_string(&path) {
            Ok(text) => match serde_json::from_str::<JobSpec>(&text) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: cannot parse spec {}: {e}", path.display());
                    return 2;
                }
            },
            Err(e) => {
                eprintln!("error: cannot read spec {}: {e}", path.display());
                return 2;
            }
        }
    } else if let Some(cmd) = args.command {
        match cmd.into_spec() {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return e.exit_code();
            }
        }
    } else {
        eprintln!("error: provide a subcommand or --spec FILE (see --help)");
        return 2;
    };
    match run_spec(&spec).and_then(|out| write_artifact(&out).map(|()| out)) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

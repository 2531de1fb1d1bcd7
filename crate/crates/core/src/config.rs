//! Flat key/value configuration files (TOML syntax, dotted keys).
//!
//! Every key is consumed exactly once; anything left over is rejected by
//! name, and missing required keys are listed together.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{DeconvError, Result};
use crate::estimator::{KnPolicy, PenaltyVariant};
use crate::harness::{ExperimentConfig, PenaltySettings};
use crate::noise_models::NoiseModel;
use crate::processes::{ChainMap, DependentProcess, LinearCoefficients};
use crate::quadrature::QuadratureSpec;
use crate::target_densities::{TargetDensity, TargetSpec};

pub const THREADS_ENV: &str = "DECONV_THREADS";

/// Evaluation grid `lo:hi:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    pub const MAX_POINTS: usize = 10_000_000;

    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || DeconvError::config("grid", format!("expected lo:hi:step, got `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let g = GridSpec {
            lo: v[0],
            hi: v[1],
            step: v[2],
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return Err(DeconvError::config(
                "grid",
                "bounds and step must be finite",
            ));
        }
        if self.hi < self.lo || self.step <= 0.0 {
            return Err(DeconvError::config("grid", "need lo <= hi and step > 0"));
        }
        if (self.hi - self.lo) / self.step >= Self::MAX_POINTS as f64 {
            return Err(DeconvError::config(
                "grid",
                format!("more than {} points", Self::MAX_POINTS),
            ));
        }
        Ok(())
    }

    /// `lo + i step` for `i = 0..`, stopping at `hi` up to rounding.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lo: -5.0,
            hi: 5.0,
            step: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub input: PathBuf,
    pub noise: NoiseModel,
    pub penalty: PenaltySettings,
    pub k_policy: KnPolicy,
    pub grid: GridSpec,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub quad: QuadratureSpec,
    pub threads: Option<usize>,
}

impl EstimateConfig {
    pub fn new(input: PathBuf, noise: NoiseModel) -> Self {
        EstimateConfig {
            input,
            noise,
            penalty: PenaltySettings::default(),
            k_policy: KnPolicy::Auto,
            grid: GridSpec::default(),
            out: None,
            report: None,
            quad: QuadratureSpec::default(),
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedConfig {
    Estimate(Box<EstimateConfig>),
    Experiment(ExperimentConfig, ExperimentExtras),
}

/// Experiment keys that are not part of the experiment itself.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentExtras {
    pub threads: Option<usize>,
    /// `seed` key; the command line may override it.
    pub seed: Option<u64>,
}

/// Flattened key table with consumption tracking.
struct Keys {
    map: BTreeMap<String, toml::Value>,
    used: BTreeSet<String>,
    missing: Vec<String>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn type_err(key: &str, want: &str, got: &toml::Value) -> DeconvError {
    DeconvError::config(key, format!("expected {want}, got {}", got.type_str()))
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    let x = match v {
        toml::Value::Float(f) => *f,
        toml::Value::Integer(i) => *i as f64,
        other => return Err(type_err(key, "a number", other)),
    };
    if !x.is_finite() {
        return Err(DeconvError::config(key, "must be finite"));
    }
    Ok(x)
}

fn as_usize(key: &str, v: &toml::Value) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        toml::Value::Integer(_) => Err(DeconvError::config(key, "must be non-negative")),
        other => Err(type_err(key, "an integer", other)),
    }
}

impl Keys {
    fn parse(text: &str, path: &Path) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            DeconvError::Parse {
                path: path.to_path_buf(),
                line,
                message: e.message().to_string(),
            }
        })?;
        let mut map = BTreeMap::new();
        flatten("", &table, &mut map);
        Ok(Keys {
            map,
            used: BTreeSet::new(),
            missing: Vec::new(),
        })
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn take(&mut self, key: &str) -> Option<toml::Value> {
        let v = self.map.get(key).cloned();
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    fn require(&mut self, key: &str) -> Option<toml::Value> {
        let v = self.take(key);
        if v.is_none() {
            self.missing.push(key.to_string());
        }
        v
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key).map(|v| as_f64(key, &v)).transpose()
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.take(key).map(|v| as_usize(key, &v)).transpose()
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            // `kn = 64` is as natural as `kn = "64"`
            Some(toml::Value::Integer(i)) => Ok(Some(i.to_string())),
            Some(other) => Err(type_err(key, "a string", &other)),
        }
    }

    fn f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| as_f64(key, v))
                .collect::<Result<_>>()
                .map(Some),
            Some(other) => Err(type_err(key, "an array of numbers", &other)),
        }
    }

    fn usize_list(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| as_usize(key, v))
                .collect::<Result<_>>()
                .map(Some),
            Some(other) => Err(type_err(key, "an array of integers", &other)),
        }
    }

    /// Unknown keys first, then the missing required ones.
    fn finish(self) -> Result<()> {
        let unknown: Vec<&String> = self
            .map
            .keys()
            .filter(|k| !self.used.contains(*k))
            .collect();
        if let Some(first) = unknown.first() {
            let all: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
            return Err(DeconvError::config(
                first.as_str(),
                format!("unknown key(s): {}", all.join(", ")),
            ));
        }
        self.check_missing()
    }

    fn check_missing(&self) -> Result<()> {
        if self.missing.is_empty() {
            return Ok(());
        }
        Err(DeconvError::config(
            self.missing[0].clone(),
            format!("missing required key(s): {}", self.missing.join(", ")),
        ))
    }

    /// Keys under `prefix.` not consumed yet.
    fn rest_under(&self, prefix: &str) -> Vec<String> {
        let p = format!("{prefix}.");
        self.map
            .keys()
            .filter(|k| k.starts_with(&p) && !self.used.contains(*k))
            .cloned()
            .collect()
    }
}

fn noise_from(
    keys: &mut Keys,
    prefix: &str,
    required: bool,
    default: &str,
) -> Result<Option<NoiseModel>> {
    let name_key = format!("{prefix}.name");
    let name = if required {
        match keys.require(&name_key) {
            Some(toml::Value::String(s)) => Some(s),
            Some(other) => return Err(type_err(&name_key, "a string", &other)),
            None => None,
        }
    } else {
        Some(
            keys.string(&name_key)?
                .unwrap_or_else(|| default.to_string()),
        )
    };
    let scale = keys.f64(&format!("{prefix}.scale"))?.unwrap_or(1.0);
    match name {
        Some(n) => NoiseModel::builtin(&n, scale)
            .map(Some)
            .map_err(|e| rekey(e, &name_key)),
        None => Ok(None),
    }
}

fn rekey(e: DeconvError, key: &str) -> DeconvError {
    match e {
        DeconvError::Config { message, .. } => DeconvError::config(key, message),
        other => other,
    }
}

fn toml_to_json(v: &toml::Value) -> serde_json::Value {
    match v {
        toml::Value::String(s) => serde_json::Value::String(s.clone()),
        toml::Value::Integer(i) => serde_json::json!(*i as f64),
        toml::Value::Float(f) => serde_json::json!(*f),
        toml::Value::Boolean(b) => serde_json::Value::Bool(*b),
        toml::Value::Array(a) => serde_json::Value::Array(a.iter().map(toml_to_json).collect()),
        other => serde_json::Value::String(other.to_string()),
    }
}

/// `target.name` plus parameters, defaults filled from the named family.
fn target_from(keys: &mut Keys, required: bool) -> Result<Option<TargetDensity>> {
    let name = if required {
        match keys.require("target.name") {
            Some(toml::Value::String(s)) => s,
            Some(other) => return Err(type_err("target.name", "a string", &other)),
            None => return Ok(None),
        }
    } else {
        match keys.string("target.name")? {
            Some(s) => s,
            None => return Ok(None),
        }
    };
    let spec = TargetSpec::default_for(&name).map_err(|e| rekey(e, "target.name"))?;
    let mut obj = serde_json::to_value(&spec).expect("target spec serializes");
    let fields = obj.as_object_mut().expect("tagged enum is an object");
    for key in keys.rest_under("target") {
        let field = &key["target.".len()..];
        if field == "name" || !fields.contains_key(field) {
            continue;
        }
        let v = keys.take(&key).expect("key listed");
        fields.insert(field.to_string(), toml_to_json(&v));
    }
    let spec: TargetSpec = serde_json::from_value(obj)
        .map_err(|e| DeconvError::config("target", format!("bad parameters for `{name}`: {e}")))?;
    TargetDensity::new(spec).map(Some)
}

fn process_from(keys: &mut Keys) -> Result<Option<DependentProcess>> {
    let name = keys.string("process.name")?.unwrap_or_else(|| "iid".into());
    let burn_in = keys.usize("process.burn_in")?;
    let process = match name.as_str() {
        "iid" => {
            if burn_in.is_some() {
                return Err(DeconvError::config("process.burn_in", "iid sampling has no burn-in"));
            }
            match target_from(keys, true)? {
                Some(t) => DependentProcess::iid(t),
                None => return Ok(None),
            }
        }
        "bernoulli_ar" | "expanding_map" | "contractive_chain" | "linear" => {
            if keys.has("target.name") {
                return Err(DeconvError::config(
                    "target.name",
                    format!("the stationary law of `{name}` is fixed by the process"),
                ));
            }
            let p = match name.as_str() {
                "bernoulli_ar" => DependentProcess::bernoulli_ar()?,
                "expanding_map" => DependentProcess::expanding_map()?,
                "contractive_chain" => {
                    let map = match keys.string("process.map")?.as_deref() {
                        None | Some("linear") => ChainMap::Linear,
                        Some("tanh") => ChainMap::Tanh,
                        Some(other) => {
                            return Err(DeconvError::config(
                                "process.map",
                                format!("expected linear or tanh, got `{other}`"),
                            ))
                        }
                    };
                    let kappa = match keys.require("process.kappa") {
                        Some(v) => as_f64("process.kappa", &v)?,
                        None => return keys.check_missing().map(|_| None),
                    };
                    let innov = noise_from(keys, "process.innovation", false, "gaussian")?.expect("default");
                    return DependentProcess::contractive_chain(map, kappa, innov, burn_in).map(Some);
                }
                _ => {
                    let coeffs = match keys.f64_list("process.coeffs")? {
                        Some(c) => LinearCoefficients::Explicit(c),
                        None => {
                            let scale = keys.f64("process.coeff_scale")?.unwrap_or(1.0);
                            let ratio = keys.f64("process.coeff_ratio")?.ok_or_else(|| {
                                DeconvError::config(
                                    "process.coeffs",
                                    "give process.coeffs or process.coeff_ratio",
                                )
                            })?;
                            let terms = keys.usize("process.coeff_terms")?.unwrap_or(64);
                            LinearCoefficients::Geometric { scale, ratio, terms }
                        }
                    };
                    let innov = noise_from(keys, "process.innovation", false, "gaussian")?.expect("default");
                    DependentProcess::linear(coeffs, innov)?
                }
            };
            match burn_in {
                Some(b) => p.with_burn_in(b),
                None => p,
            }
        }
        other => {
            return Err(DeconvError::config(
                "process.name",
                format!(
                    "unknown process `{other}`; expected iid, bernoulli_ar, expanding_map, contractive_chain or linear"
                ),
            ))
        }
    };
    Ok(Some(process))
}

fn penalty_from(keys: &mut Keys) -> Result<PenaltySettings> {
    let mut p = PenaltySettings::default();
    if let Some(a) = keys.f64("penalty.a")? {
        p.a = a;
    }
    if let Some(v) = keys.string("penalty.variant")? {
        p.variant = Some(PenaltyVariant::parse(&v).map_err(|e| rekey(e, "penalty.variant"))?);
    }
    p.beta_sum = keys.f64("penalty.beta_sum")?;
    p.tau_sum = keys.f64("penalty.tau_sum")?;
    Ok(p)
}

fn quad_from(keys: &mut Keys) -> Result<QuadratureSpec> {
    let mut q = QuadratureSpec::default();
    if let Some(v) = keys.f64("quad.rel_tol")? {
        q.rel_tol = v;
    }
    if let Some(v) = keys.f64("quad.abs_tol")? {
        q.abs_tol = v;
    }
    if let Some(v) = keys.usize("quad.max_subdivisions")? {
        q.max_subdivisions = v;
    }
    if let Some(v) = keys.usize("quad.max_nodes_2d")? {
        q.max_nodes_2d = v;
    }
    q.grid_nodes = keys.usize("quad.grid_nodes")?;
    if let Some(v) = keys.usize("quad.points_per_cycle")? {
        q.points_per_cycle = v;
    }
    if !(q.rel_tol > 0.0 && q.abs_tol >= 0.0) {
        return Err(DeconvError::config(
            "quad.rel_tol",
            "tolerances must be positive",
        ));
    }
    if q.max_subdivisions == 0 || q.points_per_cycle == 0 {
        return Err(DeconvError::config("quad", "budgets must be positive"));
    }
    Ok(q)
}

fn kn_from(keys: &mut Keys) -> Result<KnPolicy> {
    match keys.string("kn")? {
        None => Ok(KnPolicy::Auto),
        Some(s) => match KnPolicy::parse(&s)? {
            KnPolicy::Fixed(0) => Err(DeconvError::config("kn", "must be positive")),
            k => Ok(k),
        },
    }
}

fn threads_from(keys: &mut Keys) -> Result<Option<usize>> {
    match keys.usize("threads")? {
        Some(0) => Err(DeconvError::config("threads", "must be positive")),
        t => Ok(t),
    }
}

/// Thread count from `DECONV_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) if s.trim().is_empty() => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(DeconvError::config(
                THREADS_ENV,
                format!("expected a positive integer, got `{s}`"),
            )),
        },
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| DeconvError::io(path, e))
}

/// Estimate config: needs `input` and `noise.name`.
pub fn parse_estimate_str(text: &str, path: &Path) -> Result<EstimateConfig> {
    let mut keys = Keys::parse(text, path)?;
    let input = keys.require("input");
    let noise = noise_from(&mut keys, "noise", true, "")?;
    let penalty = penalty_from(&mut keys)?;
    let k_policy = kn_from(&mut keys)?;
    let grid = match keys.string("grid")? {
        Some(g) => GridSpec::parse(&g)?,
        None => GridSpec::default(),
    };
    let out = keys.string("out")?.map(PathBuf::from);
    let report = keys.string("report")?.map(PathBuf::from);
    let quad = quad_from(&mut keys)?;
    let threads = threads_from(&mut keys)?;
    keys.finish()?;
    let input = match input.expect("checked") {
        toml::Value::String(s) => PathBuf::from(s),
        other => return Err(type_err("input", "a path string", &other)),
    };
    let noise = noise.expect("checked");
    // sums and variants are checked against the noise now, not at run time
    penalty.fixed_or_independent(&noise)?;
    Ok(EstimateConfig {
        input,
        noise,
        penalty,
        k_policy,
        grid,
        out,
        report,
        quad,
        threads,
    })
}

/// Experiment config: needs `n_values`, `replications`, `noise.name` and,
/// for iid sampling, `target.name`.
pub fn parse_experiment_str(
    text: &str,
    path: &Path,
) -> Result<(ExperimentConfig, ExperimentExtras)> {
    let mut keys = Keys::parse(text, path)?;
    let n_values = match keys.require("n_values") {
        Some(v) => Some(match v {
            toml::Value::Array(_) => {
                keys.map.insert("n_values".into(), v);
                keys.usize_list("n_values")?.expect("present")
            }
            other => vec![as_usize("n_values", &other)?],
        }),
        None => None,
    };
    let replications = keys
        .require("replications")
        .map(|v| as_usize("replications", &v))
        .transpose()?;
    let noise = noise_from(&mut keys, "noise", true, "")?;
    let process = process_from(&mut keys)?;
    let oracle_replications = keys.usize("oracle_replications")?;
    let penalty = penalty_from(&mut keys)?;
    let k_policy = kn_from(&mut keys)?;
    let quad = quad_from(&mut keys)?;
    let seed = keys.take("seed").map(|v| match v {
        toml::Value::Integer(i) if i >= 0 => Ok(i as u64),
        toml::Value::String(s) => s
            .parse::<u64>()
            .map_err(|_| DeconvError::config("seed", "expected a non-negative integer")),
        _ => Err(DeconvError::config(
            "seed",
            "expected a non-negative integer",
        )),
    });
    let seed = seed.transpose()?;
    let threads = threads_from(&mut keys)?;
    keys.finish()?;
    let config = ExperimentConfig {
        process: process.expect("checked"),
        noise: noise.expect("checked"),
        n_values: n_values.expect("checked"),
        replications: replications.expect("checked"),
        oracle_replications,
        penalty,
        seed: seed.unwrap_or(0),
        quad,
        k_policy,
    };
    config.validate()?;
    Ok((config, ExperimentExtras { threads, seed }))
}

/// Path simulation: `process.*`, `target.*`, optional `noise.*` and `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub process: DependentProcess,
    pub noise: NoiseModel,
    pub n: usize,
    pub seed: Option<u64>,
}

pub fn parse_simulate_str(text: &str, path: &Path) -> Result<SimulateConfig> {
    let mut keys = Keys::parse(text, path)?;
    let n = keys.require("n").map(|v| as_usize("n", &v)).transpose()?;
    let noise = noise_from(&mut keys, "noise", false, "none")?.expect("default");
    let process = process_from(&mut keys)?;
    let seed = match keys.take("seed") {
        None => None,
        Some(toml::Value::Integer(i)) if i >= 0 => Some(i as u64),
        Some(_) => {
            return Err(DeconvError::config(
                "seed",
                "expected a non-negative integer",
            ))
        }
    };
    keys.finish()?;
    let n = n.expect("checked");
    if n == 0 {
        return Err(DeconvError::config("n", "must be positive"));
    }
    Ok(SimulateConfig {
        process: process.expect("checked"),
        noise,
        n,
        seed,
    })
}

pub fn parse_estimate_config(path: &Path) -> Result<EstimateConfig> {
    parse_estimate_str(&read_text(path)?, path)
}

pub fn parse_experiment_config(path: &Path) -> Result<(ExperimentConfig, ExperimentExtras)> {
    parse_experiment_str(&read_text(path)?, path)
}

/// Either kind of config; a file with `input` is an estimate config.
pub fn parse_config(path: &Path) -> Result<ParsedConfig> {
    let text = read_text(path)?;
    let keys = Keys::parse(&text, path)?;
    if keys.has("input") {
        parse_estimate_str(&text, path).map(|c| ParsedConfig::Estimate(Box::new(c)))
    } else {
        parse_experiment_str(&text, path).map(|(c, x)| ParsedConfig::Experiment(c, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> PathBuf {
        PathBuf::from("test.toml")
    }

    fn key_of(e: DeconvError) -> (String, String) {
        match e {
            DeconvError::Config { key, message } => (key, message),
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn empty_file_lists_required_keys() {
        let (_, msg) = key_of(parse_experiment_str("", &p()).unwrap_err());
        for k in ["n_values", "replications", "noise.name", "target.name"] {
            assert!(msg.contains(k), "{msg}");
        }
        let (_, msg) = key_of(parse_estimate_str("", &p()).unwrap_err());
        assert!(msg.contains("input") && msg.contains("noise.name"), "{msg}");
    }

    #[test]
    fn minimal_estimate_defaults() {
        let c = parse_estimate_str("input = \"z.csv\"\nnoise.name = \"laplace\"\n", &p()).unwrap();
        assert_eq!(c.penalty.a, 1.5);
        assert_eq!(c.k_policy, KnPolicy::Auto);
        assert_eq!(c.noise.scale(), 1.0);
        assert_eq!(c.input, PathBuf::from("z.csv"));
    }

    #[test]
    fn unknown_key_named() {
        let (key, msg) = key_of(
            parse_estimate_str(
                "input = \"z.csv\"\nnoise.name = \"laplace\"\nnoize = 1\n",
                &p(),
            )
            .unwrap_err(),
        );
        assert_eq!(key, "noize");
        assert!(msg.contains("noize"));
        let (key, _) = key_of(
            parse_experiment_str(
                "n_values = [100]\nreplications = 2\nnoise.name = \"laplace\"\ntarget.name = \"gaussian\"\ntarget.sdd = 2\n",
                &p(),
            )
            .unwrap_err(),
        );
        assert_eq!(key, "target.sdd");
    }

    #[test]
    fn experiment_with_dotted_and_nested_keys() {
        let text = "n_values = [100, 200]\nreplications = 3\nseed = 7\nkn = \"exact\"\n\
                    [noise]\nname = \"laplace\"\nscale = 0.5\n\
                    [target]\nname = \"mixture_gaussian\"\nmeans = [-1, 1]\n";
        let (c, x) = parse_experiment_str(text, &p()).unwrap();
        assert_eq!(c.n_values, vec![100, 200]);
        assert_eq!(x.seed, Some(7));
        assert_eq!(c.k_policy, KnPolicy::Exact);
        assert_eq!(c.noise.scale(), 0.5);
        assert_eq!(
            c.target().unwrap().spec(),
            &TargetSpec::MixtureGaussian {
                weights: vec![0.5, 0.5],
                means: vec![-1.0, 1.0],
                sds: vec![1.0, 1.0]
            }
        );
    }

    #[test]
    fn dependent_processes_from_keys() {
        let base = "n_values = [100]\nreplications = 1\nnoise.name = \"laplace\"\n";
        let (c, _) =
            parse_experiment_str(&format!("{base}process.name = \"bernoulli_ar\"\n"), &p())
                .unwrap();
        assert_eq!(c.process.name(), "bernoulli_ar");
        let (c, _) = parse_experiment_str(
            &format!("{base}process.name = \"contractive_chain\"\nprocess.kappa = 0.5\nprocess.innovation.scale = 0.5\n"),
            &p(),
        )
        .unwrap();
        assert_eq!(c.process.name(), "contractive_chain");
        let e = parse_experiment_str(
            &format!("{base}process.name = \"contractive_chain\"\n"),
            &p(),
        )
        .unwrap_err();
        assert_eq!(key_of(e).0, "process.kappa");
        let e = parse_experiment_str(
            &format!("{base}process.name = \"bernoulli_ar\"\ntarget.name = \"gaussian\"\n"),
            &p(),
        )
        .unwrap_err();
        assert_eq!(key_of(e).0, "target.name");
    }

    #[test]
    fn bad_values_carry_key_paths() {
        let e = parse_estimate_str(
            "input = \"z\"\nnoise.name = \"gaussian\"\npenalty.variant = \"ordinary\"\n",
            &p(),
        )
        .unwrap_err();
        assert!(matches!(e, DeconvError::Config { .. }));
        let e = parse_estimate_str("input = \"z\"\nnoise.name = \"gauss\"\n", &p()).unwrap_err();
        assert_eq!(key_of(e).0, "noise.name");
        let e = parse_estimate_str("input = \"z\"\nnoise.name = \"laplace\"\nkn = 0\n", &p())
            .unwrap_err();
        assert_eq!(key_of(e).0, "kn");
        let e = parse_estimate_str("input = [1\n", &p()).unwrap_err();
        assert!(matches!(e, DeconvError::Parse { line: 1, .. }), "{e}");
    }

    #[test]
    fn simulate_keys() {
        let c = parse_simulate_str(
            "n = 10\nprocess.name = \"expanding_map\"\nnoise.name = \"laplace\"\n",
            &p(),
        )
        .unwrap();
        assert_eq!(c.n, 10);
        assert_eq!(c.noise.name(), "laplace");
        let c = parse_simulate_str("n = 10\ntarget.name = \"uniform\"\n", &p()).unwrap();
        assert!(c.noise.is_none());
        assert!(parse_simulate_str("target.name = \"uniform\"\n", &p()).is_err());
    }

    #[test]
    fn grid_points() {
        let g = GridSpec::parse("-5:5:0.01").unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 1001);
        assert!((pts[1000] - 5.0).abs() < 1e-12);
        assert!(GridSpec::parse("1:0:0.1").is_err());
        assert!(GridSpec::parse("0:1").is_err());
    }

    #[test]
    fn missing_file_is_io() {
        let e = parse_config(Path::new("/nonexistent/x.toml")).unwrap_err();
        assert_eq!(e.exit_code(), 4);
    }
}

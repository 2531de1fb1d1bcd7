//! Monte Carlo risk experiments: adaptive selection against a brute-force
//! oracle, theoretical resolutions, risk-bound terms and rate fits.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DeconvError, Result};
use crate::estimator::{
    evaluate, fit_coefficients, fit_coefficients_direct, m_grid_max, max_abs, mise_against_truth,
    penalty_table, select_model, KnPolicy, PenaltyConfig, PenaltyVariant, ProjectionEstimate,
};
use crate::noise_models::{delta_m, NoiseModel, NoiseSmoothness};
use crate::processes::DependentProcess;
use crate::quadrature::QuadratureSpec;
use crate::rng::{derive_seed, rng_from_seed};
use crate::shannon_basis::project_l2;
use crate::stats::{mean_se, median, ols_slope, trimmed_mean};
use crate::target_densities::{SmoothnessClass, TargetDensity};

pub const REPORT_SCHEMA: &str = "deconv.experiment.v1";
/// Fraction of failed replications above which a run is marked invalid.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;
pub const TRIM_FRACTION: f64 = 0.1;

const STREAM_ADAPTIVE: u64 = 0;
const STREAM_ORACLE: u64 = 1;

/// Penalty settings before the per-`n` coefficient sums are filled in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySettings {
    pub a: f64,
    /// `None` picks the variant matching the noise.
    pub variant: Option<PenaltyVariant>,
    pub beta_sum: Option<f64>,
    pub tau_sum: Option<f64>,
}

impl Default for PenaltySettings {
    fn default() -> Self {
        PenaltySettings {
            a: PenaltyConfig::DEFAULT_A,
            variant: None,
            beta_sum: None,
            tau_sum: None,
        }
    }
}

impl PenaltySettings {
    /// Penalty for sample size `n`; missing coefficient sums come from the
    /// process bounds, `sum_{k=1}^{n-1}`.
    pub fn resolve(
        &self,
        noise: &NoiseModel,
        process: &DependentProcess,
        n: usize,
    ) -> Result<PenaltyConfig> {
        let filled = PenaltySettings {
            beta_sum: self
                .beta_sum
                .or_else(|| process.beta_bound().map(|b| b.sum_to(n))),
            tau_sum: self
                .tau_sum
                .or_else(|| process.tau_bound().map(|t| t.sum_to(n))),
            ..*self
        };
        filled.fixed(noise)
    }

    /// Like [`PenaltySettings::fixed`], but the default noise-free penalty
    /// takes `sum beta = 0` (independent data) when no sum is given.
    pub fn fixed_or_independent(
        &self,
        noise: &NoiseModel,
    ) -> Result<(PenaltyConfig, Option<String>)> {
        let variant = self
            .variant
            .unwrap_or_else(|| PenaltyVariant::default_for(noise));
        if self.variant.is_none() && variant == PenaltyVariant::NoNoise && self.beta_sum.is_none() {
            let filled = PenaltySettings {
                beta_sum: Some(0.0),
                ..*self
            };
            let note = "no penalty.beta_sum given; assuming independent observations".to_string();
            return Ok((filled.fixed(noise)?, Some(note)));
        }
        Ok((self.fixed(noise)?, None))
    }

    /// Penalty from the given sums alone, for data of unknown provenance.
    pub fn fixed(&self, noise: &NoiseModel) -> Result<PenaltyConfig> {
        let cfg = PenaltyConfig {
            a: self.a,
            variant: self
                .variant
                .unwrap_or_else(|| PenaltyVariant::default_for(noise)),
            beta_sum: self.beta_sum,
            tau_sum: self.tau_sum,
        };
        cfg.validate(noise)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub process: DependentProcess,
    pub noise: NoiseModel,
    pub n_values: Vec<usize>,
    pub replications: usize,
    /// Fresh replications for the oracle; defaults to `replications`.
    pub oracle_replications: Option<usize>,
    pub penalty: PenaltySettings,
    pub seed: u64,
    pub quad: QuadratureSpec,
    pub k_policy: KnPolicy,
}

impl ExperimentConfig {
    pub fn new(
        process: DependentProcess,
        noise: NoiseModel,
        n_values: Vec<usize>,
        replications: usize,
        seed: u64,
    ) -> Self {
        ExperimentConfig {
            process,
            noise,
            n_values,
            replications,
            oracle_replications: None,
            penalty: PenaltySettings::default(),
            seed,
            quad: QuadratureSpec::default(),
            k_policy: KnPolicy::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(DeconvError::config(
                "replications",
                "need at least one replication",
            ));
        }
        if self.oracle_replications == Some(0) {
            return Err(DeconvError::config(
                "oracle_replications",
                "need at least one replication",
            ));
        }
        if self.n_values.is_empty() {
            return Err(DeconvError::config(
                "n_values",
                "need at least one sample size",
            ));
        }
        if self.n_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DeconvError::config(
                "n_values",
                "sample sizes must be strictly increasing",
            ));
        }
        if self.n_values[0] < 2 {
            return Err(DeconvError::config(
                "n_values",
                "sample sizes must be at least 2",
            ));
        }
        if self.process.stationary_density().is_none() {
            return Err(DeconvError::config(
                "process.name",
                format!(
                    "process `{}` has no known stationary density to score against",
                    self.process.name()
                ),
            ));
        }
        for &n in &self.n_values {
            self.penalty.resolve(&self.noise, &self.process, n)?;
        }
        Ok(())
    }

    pub fn target(&self) -> Result<&TargetDensity> {
        self.process.stationary_density().ok_or_else(|| {
            DeconvError::config("process.name", "process has no known stationary density")
        })
    }
}

/// One observed sample `Z = X + eps` for replication `rep` of size `n`.
pub fn simulate_observations(
    process: &DependentProcess,
    noise: &NoiseModel,
    n: usize,
    seed: u64,
) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let x = process.generate_with(n, &mut rng);
    x.into_iter()
        .map(|xi| xi + noise.sample(&mut rng))
        .collect()
}

fn replication_seed(base: u64, n: usize, stream: u64, rep: usize) -> u64 {
    derive_seed(base, 2 * n as u64 + stream, rep as u64)
}

/// Coefficients for resolution `m` under the noise model (direct without noise).
fn fit_at(
    z: &[f64],
    noise: &NoiseModel,
    m: usize,
    k_n: usize,
    quad: &QuadratureSpec,
) -> Result<ProjectionEstimate> {
    if noise.is_none() {
        fit_coefficients_direct(z, m, k_n)
    } else {
        fit_coefficients(z, noise, m, k_n, quad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub se: f64,
    pub median: f64,
    pub trimmed_mean: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let (mean, se) = mean_se(xs);
        Summary {
            count: xs.len(),
            mean,
            se,
            median: median(xs),
            trimmed_mean: trimmed_mean(xs, TRIM_FRACTION),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub m_breve: usize,
    pub mise_by_m: Vec<f64>,
    pub se_by_m: Vec<f64>,
    pub replications: usize,
    pub failures: usize,
    /// Per replication, per `m` (failed replications omitted).
    #[serde(skip)]
    pub samples_by_m: Vec<Vec<f64>>,
}

impl OracleResult {
    pub fn mise(&self) -> f64 {
        self.mise_by_m[self.m_breve - 1]
    }
    pub fn se(&self) -> f64 {
        self.se_by_m[self.m_breve - 1]
    }
}

/// Target coefficients for `m = 1..=m_n` at truncations `k_values`.
fn target_projections(
    target: &TargetDensity,
    k_values: &[usize],
    quad: &QuadratureSpec,
) -> Result<Vec<ProjectionEstimate>> {
    k_values
        .par_iter()
        .enumerate()
        .map(|(i, &k)| project_l2(|x| target.cf(x), i + 1, k, quad))
        .collect()
}

fn oracle_from_data(
    data: &[Vec<f64>],
    target: &TargetDensity,
    noise: &NoiseModel,
    k_values: &[usize],
    truths: &[ProjectionEstimate],
    quad: &QuadratureSpec,
) -> OracleResult {
    let m_n = k_values.len();
    let per_rep: Vec<Result<Vec<f64>>> = data
        .par_iter()
        .map(|z| {
            (1..=m_n)
                .map(|m| {
                    let est = fit_at(z, noise, m, k_values[m - 1], quad)?;
                    Ok(mise_against_truth(&est, target, Some(&truths[m - 1]), quad)?.total)
                })
                .collect()
        })
        .collect();
    let ok: Vec<Vec<f64>> = per_rep
        .iter()
        .filter_map(|r| r.as_ref().ok().cloned())
        .collect();
    let failures = per_rep.len() - ok.len();
    let mut mise_by_m = Vec::with_capacity(m_n);
    let mut se_by_m = Vec::with_capacity(m_n);
    for m in 0..m_n {
        let col: Vec<f64> = ok.iter().map(|r| r[m]).collect();
        let (mean, se) = mean_se(&col);
        mise_by_m.push(mean);
        se_by_m.push(se);
    }
    let m_breve = argmin_first(&mise_by_m);
    OracleResult {
        m_breve,
        mise_by_m,
        se_by_m,
        replications: data.len(),
        failures,
        samples_by_m: ok,
    }
}

fn argmin_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] || v[best].is_nan() {
            best = i;
        }
    }
    best + 1
}

/// `m_breve = argmin_m E||ghat_m - g||^2` over `{1..m_n}` by Monte Carlo.
#[allow(clippy::too_many_arguments)]
pub fn oracle_m(
    target: &TargetDensity,
    noise: &NoiseModel,
    process: &DependentProcess,
    n: usize,
    replications: usize,
    seed: u64,
    k_policy: KnPolicy,
    quad: &QuadratureSpec,
) -> Result<OracleResult> {
    if replications == 0 {
        return Err(DeconvError::config(
            "replications",
            "need at least one replication",
        ));
    }
    let m_n = m_grid_max(noise, n).m_n;
    let data: Vec<Vec<f64>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            simulate_observations(
                process,
                noise,
                n,
                replication_seed(seed, n, STREAM_ORACLE, r),
            )
        })
        .collect();
    let zmax = data.iter().map(|z| max_abs(z)).fold(0.0, f64::max);
    let k_values: Vec<usize> = (1..=m_n)
        .map(|m| k_policy.resolve(n, m, zmax, noise.is_none()))
        .collect();
    let truths = target_projections(target, &k_values, quad)?;
    Ok(oracle_from_data(
        &data, target, noise, &k_values, &truths, quad,
    ))
}

/// Theoretical resolution and rate for the four smoothness regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalChoice {
    pub m: usize,
    pub pi_m: f64,
    pub rate: f64,
}

pub fn theoretical_m_breve(
    target: &SmoothnessClass,
    noise: &NoiseSmoothness,
    n: usize,
) -> Result<TheoreticalChoice> {
    if n < 3 {
        return Err(DeconvError::config(
            "n",
            "theoretical resolution needs n >= 3",
        ));
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let (s, r, b) = (target.s, target.r, target.b);
    let (g, mu, d) = (noise.gamma, noise.mu, noise.delta);
    let (pi_m, rate) = if d == 0.0 && r == 0.0 {
        let e = 2.0 * s + 2.0 * g + 1.0;
        (nf.powf(1.0 / e), nf.powf(-2.0 * s / e))
    } else if d == 0.0 {
        (
            (ln_n / (2.0 * b)).powf(1.0 / r),
            ln_n.powf((2.0 * g + 1.0) / r) / nf,
        )
    } else if r == 0.0 {
        (
            (ln_n / (2.0 * mu + 1.0)).powf(1.0 / d),
            ln_n.powf(-2.0 * s / d),
        )
    } else {
        // m^{2s+2gamma+1-r} exp{2 mu (pi m)^delta + 2 b pi^r m^r} = n
        let expo = 2.0 * s + 2.0 * g + 1.0 - r;
        let f = |m: f64| {
            expo * m.ln() + 2.0 * mu * (PI * m).powf(d) + 2.0 * b * PI.powf(r) * m.powf(r) - ln_n
        };
        // the polynomial factor can blow up at 0; bracket the largest root
        let mut bracket = None;
        let mut prev = 1e-6;
        while prev < 1e12 {
            let next = prev * 2.0;
            if f(prev) < 0.0 && f(next) >= 0.0 {
                bracket = Some((prev, next));
            }
            prev = next;
        }
        let (mut lo, mut hi) = bracket.ok_or_else(|| {
            DeconvError::Range(format!(
                "no bracketing interval for the implicit resolution equation at n = {n}"
            ))
        })?;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let m = 0.5 * (lo + hi);
        let x = PI * m;
        // no explicit rate here; report the variance order at the solution
        (
            x,
            x.powf(2.0 * g + 1.0 - d) * (2.0 * mu * x.powf(d)).exp() / nf,
        )
    };
    Ok(TheoreticalChoice {
        m: ((pi_m / PI).floor() as usize).max(1),
        pi_m,
        rate,
    })
}

/// Components of the upper bound
/// `||g - g_m||^2 + 2 Delta(m)/n + m^2 (M2+1)/k_n + 2 min(R_beta, R_tau)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskBound {
    pub bias: f64,
    pub variance_main: f64,
    pub residual: f64,
    pub r_m: Option<f64>,
    /// Set when the process carries no coefficient bound, so `R_m` is missing.
    pub r_m_missing: bool,
}

impl RiskBound {
    pub fn total(&self) -> f64 {
        self.bias + self.variance_main + self.residual
    }
}

pub fn risk_bound_terms(
    target: &TargetDensity,
    noise: &NoiseModel,
    process: &DependentProcess,
    m: usize,
    n: usize,
    k_n: usize,
    quad: &QuadratureSpec,
) -> Result<RiskBound> {
    let bias = target.bias_tail(m, quad)?;
    let variance_main = 2.0 * delta_m(noise, m, quad)? / n as f64;
    let trunc = (m * m) as f64 * (target.m2() + 1.0) / k_n.max(1) as f64;
    let r_m = match process.r_m_bounds(m, n) {
        Ok((rb, rt)) => match (rb, rt) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        },
        Err(DeconvError::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(RiskBound {
        bias,
        variance_main,
        residual: trunc + 2.0 * r_m.unwrap_or(0.0) / n as f64,
        r_m,
        r_m_missing: r_m.is_none(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub replication: usize,
    pub seed: u64,
    pub m_hat: Option<usize>,
    pub mise: Option<f64>,
    pub projection_error: Option<f64>,
    pub tail_bias: Option<f64>,
    pub contrast_values: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerN {
    pub n: usize,
    pub m_n: usize,
    pub grid_clamped: bool,
    pub k_n_values: Vec<usize>,
    pub penalty: PenaltyConfig,
    pub penalty_values: Vec<f64>,
    pub cells: Vec<Cell>,
    pub failures: usize,
    pub adaptive: Summary,
    pub m_hat_counts: Vec<usize>,
    pub oracle: OracleResult,
    pub oracle_mise: f64,
    pub oracle_se: f64,
    pub ratio: f64,
    pub theoretical: Option<TheoreticalChoice>,
    pub risk_bound_at_oracle: RiskBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `ln n`, or `ln ln n` in the super smooth noise / polynomial target regime.
    pub regressor: String,
    pub n_used: Vec<usize>,
    pub slope: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConstants {
    pub a: f64,
    pub kappa_a: f64,
    pub c_a: f64,
}

impl ReferenceConstants {
    pub fn for_a(a: f64) -> Self {
        let kappa_a = (a + 1.0) / (a - 1.0);
        ReferenceConstants {
            a,
            kappa_a,
            c_a: (kappa_a * kappa_a).max(2.0 * kappa_a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub reference_constants: ReferenceConstants,
    pub results: Vec<PerN>,
    pub rate_fit: Option<RateFit>,
    pub failures: usize,
    pub valid: bool,
    pub warnings: Vec<String>,
}

fn run_one_n(config: &ExperimentConfig, n: usize) -> Result<PerN> {
    let target = config.target()?;
    let noise = &config.noise;
    let quad = &config.quad;
    let grid = m_grid_max(noise, n);
    let m_n = grid.m_n;
    let penalty = config.penalty.resolve(noise, &config.process, n)?;
    let penalty_values = penalty_table(&penalty, noise, m_n, n, quad)?;
    let reps = config.replications;
    let oracle_reps = config.oracle_replications.unwrap_or(reps);

    let seeds: Vec<u64> = (0..reps)
        .map(|r| replication_seed(config.seed, n, STREAM_ADAPTIVE, r))
        .collect();
    let data: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&s| simulate_observations(&config.process, noise, n, s))
        .collect();
    let oracle_data: Vec<Vec<f64>> = (0..oracle_reps)
        .into_par_iter()
        .map(|r| {
            simulate_observations(
                &config.process,
                noise,
                n,
                replication_seed(config.seed, n, STREAM_ORACLE, r),
            )
        })
        .collect();
    let zmax = data
        .iter()
        .chain(&oracle_data)
        .map(|z| max_abs(z))
        .fold(0.0, f64::max);
    let k_values: Vec<usize> = (1..=m_n)
        .map(|m| config.k_policy.resolve(n, m, zmax, noise.is_none()))
        .collect();
    let truths = target_projections(target, &k_values, quad)?;

    let cells: Vec<Cell> = data
        .par_iter()
        .zip(seeds.par_iter())
        .enumerate()
        .map(|(r, (z, &seed))| {
            let outcome = select_model(z, noise, &penalty, config.k_policy, quad).and_then(|sel| {
                let truth = &truths[sel.m_hat - 1];
                let mise = mise_against_truth(&sel.estimate, target, Some(truth), quad)?;
                Ok((sel, mise))
            });
            match outcome {
                Ok((sel, mise)) => Cell {
                    replication: r,
                    seed,
                    m_hat: Some(sel.m_hat),
                    mise: Some(mise.total),
                    projection_error: Some(mise.projection_error),
                    tail_bias: Some(mise.tail_bias),
                    contrast_values: sel.contrast_values,
                    error: None,
                },
                Err(e) => Cell {
                    replication: r,
                    seed,
                    m_hat: None,
                    mise: None,
                    projection_error: None,
                    tail_bias: None,
                    contrast_values: Vec::new(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let mises: Vec<f64> = cells.iter().filter_map(|c| c.mise).collect();
    let failures = cells.len() - mises.len();
    let mut m_hat_counts = vec![0; m_n];
    for m in cells.iter().filter_map(|c| c.m_hat) {
        m_hat_counts[m - 1] += 1;
    }
    let oracle = oracle_from_data(&oracle_data, target, noise, &k_values, &truths, quad);
    let adaptive = Summary::of(&mises);
    let oracle_mise = oracle.mise();
    let oracle_se = oracle.se();
    let theoretical = if noise.is_none() {
        None
    } else {
        theoretical_m_breve(target.smoothness(), noise.smoothness(), n).ok()
    };
    let mb = oracle.m_breve;
    let risk_bound_at_oracle = if noise.is_none() {
        let bias = target.bias_tail(mb, quad)?;
        let trunc = (mb * mb) as f64 * (target.m2() + 1.0) / k_values[mb - 1].max(1) as f64;
        RiskBound {
            bias,
            variance_main: 2.0 * mb as f64 / n as f64,
            residual: trunc,
            r_m: None,
            r_m_missing: true,
        }
    } else {
        risk_bound_terms(
            target,
            noise,
            &config.process,
            mb,
            n,
            k_values[mb - 1],
            quad,
        )?
    };
    Ok(PerN {
        n,
        m_n,
        grid_clamped: grid.clamped,
        k_n_values: k_values,
        penalty,
        penalty_values,
        cells,
        failures: failures + oracle.failures,
        ratio: adaptive.mean / oracle_mise,
        adaptive,
        m_hat_counts,
        oracle_mise,
        oracle_se,
        oracle,
        theoretical,
        risk_bound_at_oracle,
    })
}

/// Least-squares slope of `ln(mean MISE)`; the smallest `n` is dropped when
/// its grid is `{1}` and at least two points remain.
pub fn rate_fit(results: &[PerN], super_smooth_polynomial: bool) -> Option<RateFit> {
    let mut used: Vec<&PerN> = results.iter().filter(|r| r.adaptive.mean > 0.0).collect();
    if used.len() > 2 && used[0].m_n == 1 {
        used.remove(0);
    }
    let x: Vec<f64> = used
        .iter()
        .map(|r| {
            let l = (r.n as f64).ln();
            if super_smooth_polynomial {
                l.ln()
            } else {
                l
            }
        })
        .collect();
    let y: Vec<f64> = used.iter().map(|r| r.adaptive.mean.ln()).collect();
    let (slope, se) = ols_slope(&x, &y)?;
    Some(RateFit {
        regressor: if super_smooth_polynomial {
            "ln_ln_n".into()
        } else {
            "ln_n".into()
        },
        n_used: used.iter().map(|r| r.n).collect(),
        slope,
        se,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let results: Vec<PerN> = config
        .n_values
        .iter()
        .map(|&n| run_one_n(config, n))
        .collect::<Result<_>>()?;
    let target = config.target()?;
    let super_poly = config.noise.smoothness().delta > 0.0 && target.smoothness().r == 0.0;
    let failures: usize = results.iter().map(|r| r.failures).sum();
    let attempted: usize = config.n_values.len()
        * (config.replications + config.oracle_replications.unwrap_or(config.replications));
    let mut warnings: Vec<String> = config.process.warnings().to_vec();
    for r in &results {
        if r.grid_clamped {
            warnings.push(format!(
                "n = {}: model grid bound clamped to m_n = {}",
                r.n, r.m_n
            ));
        }
    }
    if config.k_policy == KnPolicy::Auto {
        warnings.push(
            "k_n policy auto is a fast truncation, not the k_n >= n of the risk bounds".into(),
        );
    }
    Ok(ExperimentReport {
        schema: REPORT_SCHEMA.into(),
        version: crate::VERSION.into(),
        seed: config.seed,
        config: config.clone(),
        reference_constants: ReferenceConstants::for_a(config.penalty.a),
        rate_fit: rate_fit(&results, super_poly),
        results,
        failures,
        valid: (failures as f64) <= MAX_FAILURE_FRACTION * attempted as f64,
        warnings,
    })
}

/// Output of a single density estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub schema: String,
    pub version: String,
    pub n: usize,
    pub noise: NoiseModel,
    pub penalty: PenaltyConfig,
    pub k_policy: KnPolicy,
    pub m_hat: usize,
    pub m_n: usize,
    pub grid_clamped: bool,
    pub k_n_values: Vec<usize>,
    pub contrast_values: Vec<f64>,
    pub penalty_values: Vec<f64>,
    pub objective_values: Vec<f64>,
    /// Largest imaginary part of the reconstruction on the output grid.
    pub max_imag: f64,
    pub warnings: Vec<String>,
}

pub const ESTIMATE_SCHEMA: &str = "deconv.estimate.v1";

/// Select `m`, then evaluate the estimate on `grid`.
pub fn estimate_density(
    samples: &[f64],
    noise: &NoiseModel,
    penalty: &PenaltySettings,
    k_policy: KnPolicy,
    grid: &[f64],
    quad: &QuadratureSpec,
) -> Result<(EstimateReport, Vec<f64>)> {
    let (cfg, note) = penalty.fixed_or_independent(noise)?;
    let sel = select_model(samples, noise, &cfg, k_policy, quad)?;
    let ev = evaluate(&sel.estimate, grid);
    let mut warnings: Vec<String> = note.into_iter().collect();
    if sel.grid.clamped {
        warnings.push(format!("model grid bound clamped to m_n = {}", sel.m_n));
    }
    if k_policy == KnPolicy::Auto {
        warnings.push(
            "k_n policy auto is a fast truncation, not the k_n >= n of the risk bounds".into(),
        );
    }
    let objective_values = sel
        .contrast_values
        .iter()
        .zip(&sel.penalty_values)
        .map(|(c, p)| c + p)
        .collect();
    let report = EstimateReport {
        schema: ESTIMATE_SCHEMA.into(),
        version: crate::VERSION.into(),
        n: samples.len(),
        noise: noise.clone(),
        penalty: cfg,
        k_policy,
        m_hat: sel.m_hat,
        m_n: sel.m_n,
        grid_clamped: sel.grid.clamped,
        k_n_values: sel.k_n_values,
        contrast_values: sel.contrast_values,
        penalty_values: sel.penalty_values,
        objective_values,
        max_imag: ev.max_imag,
        warnings,
    };
    Ok((report, ev.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target_densities::builtin_target;
    use approx::assert_relative_eq;

    fn laplace() -> NoiseModel {
        NoiseModel::builtin("laplace", 1.0).unwrap()
    }

    #[test]
    fn theoretical_examples() {
        let lap = laplace();
        let sob = SmoothnessClass {
            s: 1.0,
            r: 0.0,
            b: 0.0,
            c1: 1.0,
        };
        let c = theoretical_m_breve(&sob, lap.smoothness(), 100_000).unwrap();
        assert_relative_eq!(c.pi_m, 10f64.powf(5.0 / 7.0), max_relative = 1e-14);
        assert_eq!(c.m, 1);
        assert_relative_eq!(c.rate, 1e5f64.powf(-2.0 / 7.0), max_relative = 1e-14);

        let gauss_like = SmoothnessClass {
            s: 0.0,
            r: 2.0,
            b: 0.5,
            c1: 1.0,
        };
        let c = theoretical_m_breve(&gauss_like, lap.smoothness(), 10_000).unwrap();
        assert_relative_eq!(c.pi_m, (1e4f64).ln().sqrt(), max_relative = 1e-14);
        assert_eq!(c.m, 1);
        assert_relative_eq!(c.rate, (1e4f64).ln().powf(2.5) / 1e4, max_relative = 1e-14);

        let g = NoiseModel::builtin("gaussian", 1.0).unwrap();
        let c = theoretical_m_breve(&sob, g.smoothness(), 1_000_000).unwrap();
        assert_relative_eq!(c.pi_m, ((1e6f64).ln() / 2.0).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(c.pi_m, 2.628_260, max_relative = 1e-6);
        assert_relative_eq!(c.rate, 1.0 / (1e6f64).ln(), max_relative = 1e-14);
    }

    #[test]
    fn implicit_regime_solves_equation() {
        let g = NoiseModel::builtin("gaussian", 0.5).unwrap();
        let sm = SmoothnessClass {
            s: 0.0,
            r: 2.0,
            b: 0.25,
            c1: 1.0,
        };
        let c = theoretical_m_breve(&sm, g.smoothness(), 1_000_000).unwrap();
        let m = c.pi_m / PI;
        let mu = g.smoothness().mu;
        let lhs = -m.ln() + 2.0 * mu * (PI * m).powi(2) + 2.0 * 0.25 * PI * PI * m * m;
        assert_relative_eq!(lhs, (1e6f64).ln(), max_relative = 1e-10);
    }

    #[test]
    fn reference_constants() {
        let r = ReferenceConstants::for_a(1.5);
        assert_relative_eq!(r.kappa_a, 5.0);
        assert_relative_eq!(r.c_a, 25.0);
        let r3 = ReferenceConstants::for_a(3.0);
        assert_relative_eq!(r3.c_a, 4.0);
    }

    #[test]
    fn risk_bound_examples() {
        let quad = QuadratureSpec::default();
        let t = builtin_target("uniform").unwrap();
        let iid = DependentProcess::iid(t.clone());
        let r = risk_bound_terms(&t, &laplace(), &iid, 2, 1000, 1000, &quad).unwrap();
        assert_relative_eq!(
            r.residual,
            4.0 * (t.m2() + 1.0) / 1000.0,
            max_relative = 1e-14
        );
        let r2 = risk_bound_terms(&t, &laplace(), &iid, 2, 2000, 1000, &quad).unwrap();
        assert_relative_eq!(
            r2.variance_main,
            r.variance_main / 2.0,
            max_relative = 1e-14
        );
        let ar = DependentProcess::bernoulli_ar().unwrap();
        let rb = risk_bound_terms(&t, &laplace(), &ar, 2, 100_000, 100_000, &quad).unwrap();
        assert_relative_eq!(rb.r_m.unwrap(), 4.0 * PI, max_relative = 1e-9);
    }

    #[test]
    fn bookkeeping_and_determinism() {
        let t = builtin_target("gaussian").unwrap();
        let mut cfg =
            ExperimentConfig::new(DependentProcess::iid(t), laplace(), vec![200, 400], 2, 99);
        cfg.k_policy = KnPolicy::Exact;
        let a = run_experiment(&cfg).unwrap();
        assert_eq!(a.results.len(), 2);
        assert_eq!(a.results.iter().map(|r| r.cells.len()).sum::<usize>(), 4);
        assert!(a.valid);
        for r in &a.results {
            assert!(r.cells.iter().all(|c| c.mise.unwrap() >= 0.0));
            assert_eq!(r.adaptive.count, 2);
        }
        let b = run_experiment(&cfg).unwrap();
        let bytes = crate::io::to_json_bytes(&a).unwrap();
        assert_eq!(bytes, crate::io::to_json_bytes(&b).unwrap());
        let value: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        let schema: serde_json::Value =
            serde_json::from_str(crate::io::EXPERIMENT_REPORT_SCHEMA).unwrap();
        crate::io::validate_against_schema(&value, &schema).unwrap();
    }

    #[test]
    fn oracle_single_point_grid() {
        let quad = QuadratureSpec::default();
        let t = builtin_target("gaussian").unwrap();
        let p = DependentProcess::iid(t.clone());
        let o = oracle_m(&t, &laplace(), &p, 100, 1, 5, KnPolicy::Auto, &quad).unwrap();
        assert_eq!(o.m_breve, 1);
        assert_eq!(o.mise_by_m.len(), 1);
    }

    #[test]
    fn invalid_configs() {
        let t = builtin_target("gaussian").unwrap();
        let p = DependentProcess::iid(t);
        let mut cfg = ExperimentConfig::new(p.clone(), laplace(), vec![200, 100], 2, 1);
        assert!(run_experiment(&cfg).is_err());
        cfg.n_values = vec![100];
        cfg.replications = 0;
        assert!(run_experiment(&cfg).is_err());
        let lin = DependentProcess::linear(
            crate::processes::LinearCoefficients::Explicit(vec![1.0, 0.5]),
            laplace(),
        )
        .unwrap();
        let cfg = ExperimentConfig::new(lin, laplace(), vec![100], 1, 1);
        assert!(run_experiment(&cfg).is_err());
    }
}

//! Stationary generators with known dependence: i.i.d. draws, the Bernoulli
//! autoregression, contractive Markov chains, linear processes and the dual
//! chain of the doubling map, together with bounds on their `beta` and `tau`
//! coefficients.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DeconvError, Result};
use crate::noise_models::{NoiseFamily, NoiseModel};
use crate::rng::rng_from_seed;
use crate::target_densities::{TargetDensity, TargetSpec};

/// Tolerance for burn-in floors and truncated moving-average tails.
pub const PROCESS_TOL: f64 = 1e-10;
pub const DEFAULT_BURN_IN: usize = 1000;

/// A nonincreasing, nonnegative bound `k -> b(k)` on a dependence coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum CoefficientBound {
    Zero,
    /// `c * rho^k`.
    Geometric {
        c: f64,
        rho: f64,
    },
    /// `values[k]`, zero past the end.
    Table {
        values: Vec<f64>,
    },
}

impl CoefficientBound {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            CoefficientBound::Zero => 0.0,
            CoefficientBound::Geometric { c, rho } => c * rho.powi(k as i32),
            CoefficientBound::Table { values } => values.get(k).copied().unwrap_or(0.0),
        }
    }

    /// `sum_{k=1}^{n-1} b(k)`.
    pub fn sum_to(&self, n: usize) -> f64 {
        if n < 2 {
            return 0.0;
        }
        match self {
            CoefficientBound::Zero => 0.0,
            CoefficientBound::Geometric { c, rho } => {
                c * rho * (1.0 - rho.powi(n as i32 - 1)) / (1.0 - rho)
            }
            CoefficientBound::Table { values } => values.iter().take(n).skip(1).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainMap {
    /// `f(x) = kappa x`
    Linear,
    /// `f(x) = kappa tanh(x)`
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessKind {
    Iid {
        target: TargetDensity,
    },
    BernoulliAr,
    ExpandingMap,
    ContractiveChain {
        map: ChainMap,
        kappa: f64,
        innovation: NoiseModel,
        stationary_init: bool,
    },
    Linear {
        coeffs: Vec<f64>,
        innovation: NoiseModel,
    },
}

/// Coefficients `a_j, j >= 0` of `X_t = sum_j a_j xi_{t-j}`.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearCoefficients {
    Explicit(Vec<f64>),
    /// `a_j = scale * ratio^j` for `j < terms`.
    Geometric {
        scale: f64,
        ratio: f64,
        terms: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependentProcess {
    name: String,
    kind: ProcessKind,
    burn_in: usize,
    stationary: Option<TargetDensity>,
    tau: Option<CoefficientBound>,
    beta: Option<CoefficientBound>,
    warnings: Vec<String>,
}

fn uniform01() -> Result<TargetDensity> {
    TargetDensity::new(TargetSpec::Uniform {
        low: 0.0,
        high: 1.0,
    })
}

impl DependentProcess {
    pub fn iid(target: TargetDensity) -> Self {
        DependentProcess {
            name: "iid".into(),
            stationary: Some(target.clone()),
            kind: ProcessKind::Iid { target },
            burn_in: 0,
            tau: Some(CoefficientBound::Zero),
            beta: Some(CoefficientBound::Zero),
            warnings: Vec::new(),
        }
    }

    /// `X_k = (X_{k-1} + eps_k)/2`, `eps_k ~ Bernoulli(1/2)`, started from `U[0,1]`.
    pub fn bernoulli_ar() -> Result<Self> {
        Ok(DependentProcess {
            name: "bernoulli_ar".into(),
            kind: ProcessKind::BernoulliAr,
            burn_in: 0,
            stationary: Some(uniform01()?),
            tau: Some(CoefficientBound::Geometric { c: 1.0, rho: 0.5 }),
            beta: None,
            warnings: Vec::new(),
        })
    }

    /// Backward chain of `T(x) = 2x mod 1`.
    pub fn expanding_map() -> Result<Self> {
        Ok(DependentProcess {
            name: "expanding_map".into(),
            kind: ProcessKind::ExpandingMap,
            burn_in: 0,
            stationary: Some(uniform01()?),
            tau: Some(CoefficientBound::Geometric { c: 2.0, rho: 0.5 }),
            beta: None,
            warnings: Vec::new(),
        })
    }

    /// `X_n = f(X_{n-1}) + xi_n` with `f` `kappa`-Lipschitz.
    pub fn contractive_chain(
        map: ChainMap,
        kappa: f64,
        innovation: NoiseModel,
        burn_in: Option<usize>,
    ) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(DeconvError::config("process.kappa", "need 0 < kappa < 1"));
        }
        let mean_abs = innovation.mean_abs().ok_or_else(|| {
            DeconvError::config(
                "process.innovation",
                format!(
                    "{} innovations have no finite first moment",
                    innovation.name()
                ),
            )
        })?;
        let gaussian_linear =
            map == ChainMap::Linear && innovation.family() == NoiseFamily::Gaussian;
        let (stationary, e_abs_x0) = if gaussian_linear {
            let sd = innovation.scale() / (1.0 - kappa * kappa).sqrt();
            (
                Some(TargetDensity::new(TargetSpec::Gaussian { mean: 0.0, sd })?),
                sd * (2.0 / PI).sqrt(),
            )
        } else if innovation.is_none() {
            // the chain collapses onto 0
            (None, 0.0)
        } else {
            // E|X| <= kappa E|X| + E|xi| since f(0) = 0
            (None, mean_abs / (1.0 - kappa))
        };
        let floor = (PROCESS_TOL.ln() / kappa.ln()).ceil() as usize;
        let burn_in = burn_in.unwrap_or(if gaussian_linear {
            0
        } else {
            DEFAULT_BURN_IN.max(floor)
        });
        let mut warnings = Vec::new();
        if !gaussian_linear && burn_in < floor {
            warnings.push(format!(
                "burn_in {burn_in} is below the recommended floor {floor} for kappa = {kappa}"
            ));
        }
        Ok(DependentProcess {
            name: "contractive_chain".into(),
            kind: ProcessKind::ContractiveChain {
                map,
                kappa,
                innovation,
                stationary_init: gaussian_linear,
            },
            burn_in,
            stationary,
            tau: Some(CoefficientBound::Geometric {
                c: 2.0 * e_abs_x0,
                rho: kappa,
            }),
            beta: None,
            warnings,
        })
    }

    pub fn linear(coeffs: LinearCoefficients, innovation: NoiseModel) -> Result<Self> {
        let mean_abs = innovation.mean_abs().ok_or_else(|| {
            DeconvError::config(
                "process.innovation",
                format!(
                    "{} innovations have no finite first moment",
                    innovation.name()
                ),
            )
        })?;
        let var = innovation.variance().unwrap_or(f64::INFINITY);
        let (a, tau) = match coeffs {
            LinearCoefficients::Explicit(a) => {
                if a.is_empty() || a.iter().any(|v| !v.is_finite()) {
                    return Err(DeconvError::config(
                        "process.coeffs",
                        "need a nonempty list of finite coefficients",
                    ));
                }
                let len = a.len();
                let mut values = vec![0.0; len];
                let mut abs_tail = 0.0;
                let mut sq_tail = 0.0;
                for k in (0..len).rev() {
                    abs_tail += a[k].abs();
                    sq_tail += a[k] * a[k];
                    values[k] = (2.0 * mean_abs * abs_tail).min((2.0 * var * sq_tail).sqrt());
                }
                (a, CoefficientBound::Table { values })
            }
            LinearCoefficients::Geometric {
                scale,
                ratio,
                terms,
            } => {
                if !(ratio.abs() < 1.0) || !scale.is_finite() || terms == 0 {
                    return Err(DeconvError::config(
                        "process.ratio",
                        "geometric coefficients need |ratio| < 1, finite scale and terms >= 1",
                    ));
                }
                let r = ratio.abs();
                let tail = scale.abs() * r.powi(terms as i32) / (1.0 - r);
                if tail > PROCESS_TOL {
                    let needed = ((PROCESS_TOL * (1.0 - r) / scale.abs()).ln() / r.ln()).ceil();
                    return Err(DeconvError::config(
                        "process.terms",
                        format!("truncation tail {tail:.3e} exceeds {PROCESS_TOL:e}; use at least {needed} terms"),
                    ));
                }
                let a: Vec<f64> = (0..terms).map(|j| scale * ratio.powi(j as i32)).collect();
                let c1 = 2.0 * mean_abs * scale.abs() / (1.0 - r);
                let c2 = (2.0 * var / (1.0 - r * r)).sqrt() * scale.abs();
                (
                    a,
                    CoefficientBound::Geometric {
                        c: c1.min(c2),
                        rho: r,
                    },
                )
            }
        };
        let stationary = if innovation.family() == NoiseFamily::Gaussian {
            let sd = innovation.scale() * a.iter().map(|v| v * v).sum::<f64>().sqrt();
            Some(TargetDensity::new(TargetSpec::Gaussian { mean: 0.0, sd })?)
        } else {
            None
        };
        Ok(DependentProcess {
            name: "linear".into(),
            kind: ProcessKind::Linear {
                coeffs: a,
                innovation,
            },
            burn_in: 0,
            stationary,
            tau: Some(tau),
            beta: None,
            warnings: Vec::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn kind(&self) -> &ProcessKind {
        &self.kind
    }
    pub fn burn_in(&self) -> usize {
        self.burn_in
    }
    pub fn stationary_density(&self) -> Option<&TargetDensity> {
        self.stationary.as_ref()
    }
    pub fn tau_bound(&self) -> Option<&CoefficientBound> {
        self.tau.as_ref()
    }
    pub fn beta_bound(&self) -> Option<&CoefficientBound> {
        self.beta.as_ref()
    }
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
    pub fn is_iid(&self) -> bool {
        matches!(self.kind, ProcessKind::Iid { .. })
    }

    pub fn with_beta_bound(mut self, bound: CoefficientBound) -> Self {
        self.beta = Some(bound);
        self
    }

    pub fn with_tau_bound(mut self, bound: CoefficientBound) -> Self {
        self.tau = Some(bound);
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    /// `n` consecutive values of the process; a pure function of `(n, seed)`.
    pub fn generate(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        self.generate_with(n, &mut rng)
    }

    pub fn generate_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        match &self.kind {
            ProcessKind::Iid { target } => {
                for _ in 0..n {
                    out.push(target.sample(rng));
                }
            }
            ProcessKind::BernoulliAr | ProcessKind::ExpandingMap => {
                let mut x: f64 = rng.random();
                for _ in 0..self.burn_in {
                    x = 0.5 * (x + if rng.random::<bool>() { 1.0 } else { 0.0 });
                }
                for _ in 0..n {
                    x = 0.5 * (x + if rng.random::<bool>() { 1.0 } else { 0.0 });
                    out.push(x);
                }
            }
            ProcessKind::ContractiveChain {
                map,
                kappa,
                innovation,
                stationary_init,
            } => {
                let f = |x: f64| match map {
                    ChainMap::Linear => kappa * x,
                    ChainMap::Tanh => kappa * x.tanh(),
                };
                let mut x = match (stationary_init, &self.stationary) {
                    (true, Some(law)) => law.sample(rng),
                    _ => 0.0,
                };
                for _ in 0..self.burn_in {
                    x = f(x) + innovation.sample(rng);
                }
                for _ in 0..n {
                    x = f(x) + innovation.sample(rng);
                    out.push(x);
                }
            }
            ProcessKind::Linear { coeffs, innovation } => {
                let q = coeffs.len();
                // ring buffer of the last q innovations, newest at `head`
                let mut buf: Vec<f64> = (0..q).map(|_| innovation.sample(rng)).collect();
                let mut head = q - 1;
                for _ in 0..self.burn_in {
                    head = (head + 1) % q;
                    buf[head] = innovation.sample(rng);
                }
                for _ in 0..n {
                    head = (head + 1) % q;
                    buf[head] = innovation.sample(rng);
                    let mut acc = 0.0;
                    for (j, a) in coeffs.iter().enumerate() {
                        acc += a * buf[(head + q - j) % q];
                    }
                    out.push(acc);
                }
            }
        }
        out
    }

    /// `(R_{m,beta}, R_{m,tau}) = (4m sum_{k<n} beta(k), pi m^2 sum_{k<n} tau(k))`.
    pub fn r_m_bounds(&self, m: usize, n: usize) -> Result<(Option<f64>, Option<f64>)> {
        if self.beta.is_none() && self.tau.is_none() {
            return Err(DeconvError::Unsupported(format!(
                "process `{}` has neither a beta nor a tau coefficient bound",
                self.name
            )));
        }
        let m = m as f64;
        let rb = self.beta.as_ref().map(|b| 4.0 * m * b.sum_to(n));
        let rt = self.tau.as_ref().map(|t| PI * m * m * t.sum_to(n));
        Ok((rb, rt))
    }
}

pub fn r_m_bounds(
    process: &DependentProcess,
    m: usize,
    n: usize,
) -> Result<(Option<f64>, Option<f64>)> {
    process.r_m_bounds(m, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{kolmogorov_pvalue, ks_statistic, mean_se};
    use approx::assert_relative_eq;

    fn gauss(scale: f64) -> NoiseModel {
        NoiseModel::builtin("gaussian", scale).unwrap()
    }

    #[test]
    fn bernoulli_ar_examples() {
        let p = DependentProcess::bernoulli_ar().unwrap();
        assert_eq!(p.tau_bound().unwrap().at(3), 0.125);
        assert!(p.beta_bound().is_none());
        assert_eq!(p.generate(500, 9), p.generate(500, 9));
        assert_ne!(p.generate(500, 9), p.generate(500, 10));
        let path = p.generate(100_000, 1);
        let thinned: Vec<f64> = path.iter().step_by(10).cloned().collect();
        let d = ks_statistic(&thinned, |x| x.clamp(0.0, 1.0));
        assert!(kolmogorov_pvalue(d, thinned.len()) > 0.001);
    }

    #[test]
    fn expanding_map_examples() {
        let p = DependentProcess::expanding_map().unwrap();
        assert_eq!(p.tau_bound().unwrap().at(5), 1.0 / 16.0);
        assert!(p.beta_bound().is_none());
        let path = p.generate(100_000, 3);
        let thinned: Vec<f64> = path.iter().step_by(10).cloned().collect();
        let d = ks_statistic(&thinned, |x| x.clamp(0.0, 1.0));
        assert!(kolmogorov_pvalue(d, thinned.len()) > 0.001);
    }

    #[test]
    fn gaussian_ar_stationary_variance() {
        let p =
            DependentProcess::contractive_chain(ChainMap::Linear, 0.5, gauss(1.0), None).unwrap();
        let x = p.generate(1_000_000, 4);
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / x.len() as f64;
        assert!((v - 1.0 / 0.75).abs() < 0.01 / 0.75);
        let tau = p.tau_bound().unwrap();
        let e_abs = (1.0f64 / 0.75).sqrt() * (2.0 / PI).sqrt();
        assert_relative_eq!(tau.at(3), 2.0 * e_abs * 0.125, max_relative = 1e-14);
        assert_relative_eq!(tau.at(8) / tau.at(7), 0.5, max_relative = 1e-14);
        assert_eq!(p.generate(1, 2).len(), 1);
        assert!(p.warnings().is_empty());
    }

    #[test]
    fn chain_burn_in_floor_warning() {
        let lap = NoiseModel::builtin("laplace", 1.0).unwrap();
        let p = DependentProcess::contractive_chain(ChainMap::Tanh, 0.9, lap.clone(), Some(10))
            .unwrap();
        assert_eq!(p.warnings().len(), 1);
        assert!(p.warnings()[0].contains("219"));
        let q = DependentProcess::contractive_chain(ChainMap::Tanh, 0.9, lap, None).unwrap();
        assert_eq!(q.burn_in(), 1000);
        assert!(q.warnings().is_empty());
        let cauchy = NoiseModel::builtin("cauchy", 1.0).unwrap();
        assert!(DependentProcess::contractive_chain(ChainMap::Linear, 0.5, cauchy, None).is_err());
        assert!(
            DependentProcess::contractive_chain(ChainMap::Linear, 1.0, gauss(1.0), None).is_err()
        );
    }

    #[test]
    fn linear_process_examples() {
        // E|xi| = 1 (Laplace, b = 1) and Var = 1 (Gaussian, sd = 1).
        let lap = NoiseModel::builtin("laplace", 1.0).unwrap();
        let coeffs = LinearCoefficients::Explicit((0..60).map(|j| 0.5f64.powi(j)).collect());
        let p = DependentProcess::linear(coeffs.clone(), lap).unwrap();
        for k in 1..10 {
            // first bound 2 * 2^{1-k}; Var = 2 makes the second sqrt(2 * 2 * 4^{-k} * 4/3)
            let first = 2.0 * 2f64.powi(1 - k as i32);
            let second = (16.0f64 / 3.0).sqrt() * 2f64.powi(-(k as i32));
            assert_relative_eq!(
                p.tau_bound().unwrap().at(k),
                first.min(second),
                max_relative = 1e-12
            );
        }
        let g = DependentProcess::linear(coeffs, gauss(1.0)).unwrap();
        for k in 1..10 {
            let second = (8.0f64 / 3.0).sqrt() * 2f64.powi(-(k as i32));
            let first = 2.0 * (2.0 / PI).sqrt() * 2f64.powi(1 - k as i32);
            assert_relative_eq!(
                g.tau_bound().unwrap().at(k),
                first.min(second),
                max_relative = 1e-12
            );
        }
        let white =
            DependentProcess::linear(LinearCoefficients::Explicit(vec![1.0]), gauss(1.0)).unwrap();
        for k in 1..5 {
            assert_eq!(white.tau_bound().unwrap().at(k), 0.0);
        }
        let geo = DependentProcess::linear(
            LinearCoefficients::Geometric {
                scale: 1.0,
                ratio: 0.5,
                terms: 64,
            },
            gauss(1.0),
        )
        .unwrap();
        assert_relative_eq!(
            geo.tau_bound().unwrap().at(4),
            (8.0f64 / 3.0).sqrt() / 16.0,
            max_relative = 1e-12
        );
        let short = DependentProcess::linear(
            LinearCoefficients::Geometric {
                scale: 1.0,
                ratio: 0.5,
                terms: 10,
            },
            gauss(1.0),
        );
        let err = short.unwrap_err().to_string();
        assert!(err.contains("at least 35"), "{err}");
    }

    #[test]
    fn iid_examples() {
        let t = crate::target_densities::builtin_target("gaussian").unwrap();
        let p = DependentProcess::iid(t);
        assert_eq!(p.r_m_bounds(3, 100).unwrap(), (Some(0.0), Some(0.0)));
        let x = p.generate(1_000_000, 77);
        let (mean, _) = mean_se(&x);
        assert!(mean.abs() < 0.004);
        assert_eq!(p.generate(10, 1), p.generate(10, 1));
    }

    #[test]
    fn r_m_examples() {
        let p = DependentProcess::bernoulli_ar().unwrap();
        let (rb, rt) = p.r_m_bounds(2, 10_000).unwrap();
        assert!(rb.is_none());
        assert_relative_eq!(rt.unwrap(), 4.0 * PI, max_relative = 1e-12);
        let only_beta =
            DependentProcess::iid(crate::target_densities::builtin_target("gaussian").unwrap());
        let only_beta = DependentProcess {
            tau: None,
            ..only_beta
        };
        assert!(only_beta.r_m_bounds(1, 10).unwrap().1.is_none());
        let neither = DependentProcess {
            beta: None,
            ..only_beta
        };
        assert!(matches!(
            neither.r_m_bounds(1, 10),
            Err(DeconvError::Unsupported(_))
        ));
    }

    #[test]
    fn bounds_monotone() {
        let lap = NoiseModel::builtin("laplace", 1.0).unwrap();
        let procs = vec![
            DependentProcess::bernoulli_ar().unwrap(),
            DependentProcess::expanding_map().unwrap(),
            DependentProcess::contractive_chain(ChainMap::Tanh, 0.7, lap.clone(), None).unwrap(),
            DependentProcess::linear(LinearCoefficients::Explicit(vec![1.0, -0.6, 0.3, 0.1]), lap)
                .unwrap(),
        ];
        for p in procs {
            let tau = p.tau_bound().unwrap();
            for k in 0..=100 {
                assert!(
                    tau.at(k + 1) <= tau.at(k) && tau.at(k + 1) >= 0.0,
                    "{}",
                    p.name()
                );
            }
        }
    }
}

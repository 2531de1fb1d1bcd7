use serde::{Deserialize, Serialize};

use crate::error::{DeconvError, Result};
use crate::noise_models::{delta_m, lambda1, lambda2, NoiseModel};
use crate::quadrature::QuadratureSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyVariant {
    Supersmooth,
    Ordinary,
    RefinedBeta,
    RefinedTau,
    NoNoise,
}

impl PenaltyVariant {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "supersmooth" => Ok(PenaltyVariant::Supersmooth),
            "ordinary" => Ok(PenaltyVariant::Ordinary),
            "refined_beta" => Ok(PenaltyVariant::RefinedBeta),
            "refined_tau" => Ok(PenaltyVariant::RefinedTau),
            "no_noise" => Ok(PenaltyVariant::NoNoise),
            other => Err(DeconvError::config(
                "penalty",
                format!(
                    "unknown penalty `{other}` (expected supersmooth, ordinary, refined_beta, refined_tau or no_noise)"
                ),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PenaltyVariant::Supersmooth => "supersmooth",
            PenaltyVariant::Ordinary => "ordinary",
            PenaltyVariant::RefinedBeta => "refined_beta",
            PenaltyVariant::RefinedTau => "refined_tau",
            PenaltyVariant::NoNoise => "no_noise",
        }
    }

    /// The variant matching the noise regime.
    pub fn default_for(noise: &NoiseModel) -> Self {
        if noise.is_none() {
            PenaltyVariant::NoNoise
        } else if noise.smoothness().delta == 0.0 {
            PenaltyVariant::Ordinary
        } else {
            PenaltyVariant::Supersmooth
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub a: f64,
    pub variant: PenaltyVariant,
    /// `sum_k beta(k)`, for `refined_beta` and `no_noise`.
    pub beta_sum: Option<f64>,
    /// `sum_k tau(k)`, for `refined_tau`.
    pub tau_sum: Option<f64>,
}

impl PenaltyConfig {
    pub const DEFAULT_A: f64 = 1.5;

    pub fn new(a: f64, variant: PenaltyVariant) -> Self {
        PenaltyConfig {
            a,
            variant,
            beta_sum: None,
            tau_sum: None,
        }
    }

    pub fn for_noise(noise: &NoiseModel) -> Self {
        Self::new(Self::DEFAULT_A, PenaltyVariant::default_for(noise))
    }

    pub fn validate(&self, noise: &NoiseModel) -> Result<()> {
        if !(self.a.is_finite() && self.a > 1.0) {
            return Err(DeconvError::config(
                "a",
                "penalty constant a must be finite and > 1",
            ));
        }
        let delta = noise.smoothness().delta;
        let mismatch = |why: &str| {
            Err(DeconvError::config(
                "penalty",
                format!(
                    "{} penalty {why} ({} noise)",
                    self.variant.name(),
                    noise.name()
                ),
            ))
        };
        match self.variant {
            PenaltyVariant::NoNoise if !noise.is_none() => mismatch("requires noise = none"),
            PenaltyVariant::NoNoise => Ok(()),
            _ if noise.is_none() => mismatch("needs a noise law; use no_noise"),
            PenaltyVariant::Ordinary if delta != 0.0 => {
                mismatch("requires ordinary smooth noise (delta = 0)")
            }
            PenaltyVariant::Supersmooth if delta == 0.0 => {
                mismatch("requires super smooth noise (delta > 0)")
            }
            _ => Ok(()),
        }?;
        let need = |v: Option<f64>, key: &str| match v {
            Some(x) if x.is_finite() && x >= 0.0 => Ok(()),
            Some(_) => Err(DeconvError::config(
                key,
                "coefficient sum must be finite and >= 0",
            )),
            None => Err(DeconvError::config(
                key,
                format!("{} penalty needs this coefficient sum", self.variant.name()),
            )),
        };
        match self.variant {
            PenaltyVariant::RefinedBeta | PenaltyVariant::NoNoise => {
                need(self.beta_sum, "penalty.beta_sum")
            }
            PenaltyVariant::RefinedTau => need(self.tau_sum, "penalty.tau_sum"),
            _ => Ok(()),
        }
    }
}

/// `pen(m)` for the configured variant.
pub fn penalty(
    config: &PenaltyConfig,
    noise: &NoiseModel,
    m: usize,
    n: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    config.validate(noise)?;
    if m == 0 || n == 0 {
        return Err(DeconvError::config("m", "m and n must be at least 1"));
    }
    let a = config.a;
    let mf = m as f64;
    let nf = n as f64;
    let v = match config.variant {
        PenaltyVariant::NoNoise => {
            128.0 * a * (1.0 + 4.0 * config.beta_sum.unwrap_or(0.0)) * mf / nf
        }
        PenaltyVariant::Ordinary => 25.0 * a * delta_m(noise, m, quad)? / nf,
        PenaltyVariant::Supersmooth => {
            let sm = noise.smoothness();
            let d = delta_m(noise, m, quad)?;
            if sm.delta < 1.0 / 3.0 {
                24.0 * a * d / nf
            } else {
                let ratio = lambda2(noise, sm.kappa0)? / lambda1(sm, sm.kappa0_prime);
                let expo = (1.5 * sm.delta - 0.5).max(0.0).min(sm.delta);
                8.0 * a
                    * (1.0 + 48.0 * sm.mu * std::f64::consts::PI.powf(sm.delta) * ratio)
                    * d
                    * mf.powf(expo)
                    / nf
            }
        }
        PenaltyVariant::RefinedBeta => {
            let d = delta_m(noise, m, quad)?;
            (24.0 * a * d + 128.0 * a * (1.0 + 4.0 * config.beta_sum.unwrap_or(0.0)) * mf) / nf
        }
        PenaltyVariant::RefinedTau => {
            let d = delta_m(noise, m, quad)?;
            let tau = config.tau_sum.unwrap_or(0.0);
            24.0 * a * d / nf
                + 64.0 * a * (1.0 + 38.0 * mf.ln()) * (mf + std::f64::consts::PI * tau * mf * mf)
                    / nf
        }
    };
    Ok(v)
}

/// `pen(1), ..., pen(m_max)`.
pub fn penalty_table(
    config: &PenaltyConfig,
    noise: &NoiseModel,
    m_max: usize,
    n: usize,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    (1..=m_max)
        .map(|m| penalty(config, noise, m, n, quad))
        .collect()
}

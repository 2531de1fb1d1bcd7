use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::penalty::{penalty_table, PenaltyConfig};
use super::{
    contrast_value, fit_coefficients, fit_coefficients_direct, max_abs, KnPolicy,
    ProjectionEstimate,
};
use crate::error::{DeconvError, Result};
use crate::noise_models::NoiseModel;
use crate::quadrature::QuadratureSpec;

/// Upper end of the noise-free selection grid `{1..min(n, cap)}`.
pub const NO_NOISE_GRID_CAP: usize = 256;

/// The model collection `{1, ..., m_n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBound {
    pub m_n: usize,
    /// Upper bound on `pi m_n` before flooring.
    pub pi_m_bound: f64,
    /// True when the bound gave no resolution and `m_n` was raised to 1
    /// (or, without noise, lowered to the grid cap).
    pub clamped: bool,
}

/// `m_n` with `n^{-1} Delta(m_n)` bounded: `pi m_n <= n^{1/(2gamma+1)}` for
/// `delta = 0`, and `pi m_n <= [L + ((2gamma+1-delta)/(2 delta mu)) ln L]^{1/delta}`,
/// `L = ln n / (2 mu)`, for `delta > 0`.
pub fn m_grid_max(noise: &NoiseModel, n: usize) -> GridBound {
    let nf = n.max(1) as f64;
    if noise.is_none() {
        let m_n = n.clamp(1, NO_NOISE_GRID_CAP);
        return GridBound {
            m_n,
            pi_m_bound: PI * nf,
            clamped: n > NO_NOISE_GRID_CAP || n == 0,
        };
    }
    let sm = noise.smoothness();
    let bound = if sm.delta == 0.0 {
        nf.powf(1.0 / (2.0 * sm.gamma + 1.0))
    } else {
        let l = nf.ln() / (2.0 * sm.mu);
        if l <= 1.0 {
            f64::NAN
        } else {
            let inner = l + (2.0 * sm.gamma + 1.0 - sm.delta) / (2.0 * sm.delta * sm.mu) * l.ln();
            if inner > 0.0 {
                inner.powf(1.0 / sm.delta)
            } else {
                f64::NAN
            }
        }
    };
    let raw = if bound.is_finite() {
        (bound / PI).floor()
    } else {
        0.0
    };
    GridBound {
        m_n: (raw as usize).max(1),
        pi_m_bound: bound,
        clamped: raw < 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub m_hat: usize,
    pub estimate: ProjectionEstimate,
    /// `gamma_n(ghat_m)` for `m = 1..=m_n`.
    pub contrast_values: Vec<f64>,
    pub penalty_values: Vec<f64>,
    pub k_n_values: Vec<usize>,
    pub m_n: usize,
    pub grid: GridBound,
    pub penalty: PenaltyConfig,
}

/// First index of the smallest `contrast + penalty`, as a resolution `m`.
pub fn argmin_objective(contrast: &[f64], penalty: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (i, (c, p)) in contrast.iter().zip(penalty).enumerate() {
        let v = c + p;
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    best + 1
}

/// Noise-free contrasts for `k_n = infinity` via the reproducing kernel
/// `sum_j phi_{m,j}(x) phi_{m,j}(y) = m sinc(pi m (x - y))`:
/// `gamma_n(m) = -(1/n^2) sum_{i,l} m sinc(pi m (X_i - X_l))`.
pub fn kernel_contrasts(samples: &[f64], m_max: usize) -> Vec<f64> {
    let n = samples.len();
    let nf = n as f64;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![0.0; m_max];
            for l in (i + 1)..n {
                let d = samples[i] - samples[l];
                if d == 0.0 {
                    for (k, a) in acc.iter_mut().enumerate() {
                        *a += 2.0 * (k + 1) as f64;
                    }
                    continue;
                }
                let x = PI * d;
                let two_cos = 2.0 * x.cos();
                let mut prev = 0.0;
                let mut cur = x.sin();
                for a in acc.iter_mut() {
                    *a += 2.0 * cur / x;
                    let next = two_cos * cur - prev;
                    prev = cur;
                    cur = next;
                }
            }
            acc
        })
        .collect();
    (1..=m_max)
        .map(|m| {
            let off: f64 = rows.iter().map(|r| r[m - 1]).sum();
            -(off + nf * m as f64) / (nf * nf)
        })
        .collect()
}

/// `mhat = argmin_{1 <= m <= m_n} gamma_n(ghat_m) + pen(m)`, ties to the smallest `m`.
pub fn select_model(
    samples: &[f64],
    noise: &NoiseModel,
    config: &PenaltyConfig,
    k_policy: KnPolicy,
    quad: &QuadratureSpec,
) -> Result<SelectionResult> {
    let n = samples.len();
    if n < 2 {
        return Err(DeconvError::config(
            "samples",
            "model selection needs at least two observations",
        ));
    }
    let grid = m_grid_max(noise, n);
    let m_n = grid.m_n;
    let penalty_values = penalty_table(config, noise, m_n, n, quad)?;
    let zmax = max_abs(samples);
    let k_n_values: Vec<usize> = (1..=m_n)
        .map(|m| k_policy.resolve(n, m, zmax, noise.is_none()))
        .collect();
    let (contrast_values, estimate_for) = if noise.is_none() {
        (kernel_contrasts(samples, m_n), None)
    } else {
        let fits: Vec<ProjectionEstimate> = (1..=m_n)
            .into_par_iter()
            .map(|m| fit_coefficients(samples, noise, m, k_n_values[m - 1], quad))
            .collect::<Result<_>>()?;
        (fits.iter().map(contrast_value).collect(), Some(fits))
    };
    let m_hat = argmin_objective(&contrast_values, &penalty_values);
    let estimate = match estimate_for {
        Some(mut fits) => fits.swap_remove(m_hat - 1),
        None => fit_coefficients_direct(samples, m_hat, k_n_values[m_hat - 1])?,
    };
    Ok(SelectionResult {
        m_hat,
        estimate,
        contrast_values,
        penalty_values,
        k_n_values,
        m_n,
        grid,
        penalty: *config,
    })
}

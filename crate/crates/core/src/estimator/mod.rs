//! Projection estimators on the Shannon spaces `S_m^{(n)}`: coefficient
//! fitting, the contrast, reconstruction and exact MISE against a known
//! target. Penalties and model selection live in the submodules.

mod penalty;
mod selection;

pub use penalty::{penalty, penalty_table, PenaltyConfig, PenaltyVariant};
pub use selection::{
    argmin_objective, kernel_contrasts, m_grid_max, select_model, GridBound, SelectionResult,
    NO_NOISE_GRID_CAP,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DeconvError, Result};
use crate::noise_models::{NoiseFamily, NoiseModel};
use crate::quadrature::{integrate_panels, pow2_at_least, FourierGrid, QuadratureSpec};
use crate::shannon_basis::{phi, project_l2};
use crate::target_densities::TargetDensity;

/// Largest coefficient table a single estimate may hold.
pub const MAX_COEFFS: usize = 1 << 24;
/// Largest Fourier grid used for coefficient fitting.
pub const MAX_GRID_NODES: usize = 1 << 24;
/// Fewest grid points per oscillation cycle accepted from a user override.
pub const MIN_POINTS_PER_CYCLE: usize = 8;

const NODE_BLOCK: usize = 1024;

/// `ghat_m = sum_{|j| <= k_n} ahat_{m,j} phi_{m,j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionEstimate {
    m: usize,
    k_n: usize,
    coeffs: Vec<Complex64>,
    n_samples: usize,
}

impl ProjectionEstimate {
    /// `coeffs[i]` holds the coefficient of `j = i - k_n`. `n_samples = 0`
    /// marks an exact projection rather than a fit.
    pub fn new(m: usize, k_n: usize, coeffs: Vec<Complex64>, n_samples: usize) -> Self {
        assert_eq!(
            coeffs.len(),
            2 * k_n + 1,
            "coefficient table must cover -k_n..=k_n"
        );
        ProjectionEstimate {
            m,
            k_n,
            coeffs,
            n_samples,
        }
    }

    pub fn zeros(m: usize, k_n: usize) -> Self {
        Self::new(m, k_n, vec![Complex64::new(0.0, 0.0); 2 * k_n + 1], 0)
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn k_n(&self) -> usize {
        self.k_n
    }
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `phi_{m,j}`; zero outside the table.
    pub fn coeff(&self, j: i64) -> Complex64 {
        let k = self.k_n as i64;
        if j.abs() > k {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(j + k) as usize]
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `sum_{k < |j| <= k_n} |a_j|^2`.
    pub fn tail_mass(&self, k: usize) -> f64 {
        let k = k.min(self.k_n) as i64;
        (-(self.k_n as i64)..=self.k_n as i64)
            .filter(|j| j.abs() > k)
            .map(|j| self.coeff(j).norm_sqr())
            .sum()
    }

    /// The same estimate restricted to `|j| <= k`.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.k_n);
        let coeffs = (-(k as i64)..=k as i64).map(|j| self.coeff(j)).collect();
        Self::new(self.m, k, coeffs, self.n_samples)
    }
}

/// How `k_n` is chosen for each resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "value")]
pub enum KnPolicy {
    /// `ceil(m max|Z|) + 64`; not the truncation the risk bounds assume.
    Auto,
    /// `n`, or `n^2` without noise.
    Exact,
    Fixed(usize),
}

impl KnPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(KnPolicy::Auto),
            "exact" => Ok(KnPolicy::Exact),
            other => other.parse::<usize>().map(KnPolicy::Fixed).map_err(|_| {
                DeconvError::config(
                    "kn",
                    format!("expected auto, exact or a positive integer, got `{other}`"),
                )
            }),
        }
    }

    pub fn resolve(&self, n: usize, m: usize, max_abs: f64, noise_free: bool) -> usize {
        match self {
            KnPolicy::Auto => (m as f64 * max_abs).ceil() as usize + 64,
            KnPolicy::Exact => {
                if noise_free {
                    n.saturating_mul(n)
                } else {
                    n
                }
            }
            KnPolicy::Fixed(k) => *k,
        }
    }

    pub fn label(&self) -> String {
        match self {
            KnPolicy::Auto => "auto".into(),
            KnPolicy::Exact => "exact".into(),
            KnPolicy::Fixed(k) => k.to_string(),
        }
    }
}

pub fn max_abs(samples: &[f64]) -> f64 {
    samples.iter().fold(0.0, |a, z| a.max(z.abs()))
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(DeconvError::config(
            "samples",
            "need at least one observation",
        ));
    }
    if let Some(i) = samples.iter().position(|z| !z.is_finite()) {
        return Err(DeconvError::Numerical(format!(
            "observation {i} is not finite"
        )));
    }
    Ok(())
}

fn check_table(m: usize, k_n: usize) -> Result<()> {
    if m == 0 {
        return Err(DeconvError::config("m", "resolution m must be at least 1"));
    }
    if 2 * k_n as u128 + 1 > MAX_COEFFS as u128 {
        return Err(DeconvError::Range(format!(
            "k_n = {k_n} needs more than {MAX_COEFFS} coefficients"
        )));
    }
    Ok(())
}

/// `u*_{phi_{m,j}}(z) = (1/(2 pi sqrt m)) int_{-pi m}^{pi m} e^{ix(z - j/m)} / f_eps*(x) dx`.
pub fn u_star_kernel(
    noise: &NoiseModel,
    m: usize,
    j: i64,
    z: f64,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    if m == 0 {
        return Err(DeconvError::config("m", "resolution m must be at least 1"));
    }
    if noise.is_none() {
        return Ok(Complex64::new(phi(m, j, z), 0.0));
    }
    let mf = m as f64;
    let w = z - j as f64 / mf;
    let omega = PI * (mf * z - j as f64).abs();
    let lim = PI * mf;
    let panels = (omega.ceil() as usize + 4 * m + 4).min(1 << 20);
    let r = integrate_panels(
        |x: f64| Complex64::from_polar(1.0, x * w) * noise.inv_cf(x),
        -lim,
        lim,
        panels,
        quad,
    )
    .map_err(|e| {
        DeconvError::Numerical(format!("u* quadrature failed at omega = {omega:.6e}: {e}"))
    })?;
    Ok(r.value / (2.0 * PI * mf.sqrt()))
}

/// Rate at which `ln(1/f_eps*(m theta))` varies in `theta`, per unit `m`.
fn noise_rate(noise: &NoiseModel, m: usize) -> f64 {
    let s = noise.scale();
    let x = PI * m as f64;
    match noise.family() {
        NoiseFamily::None => 0.0,
        NoiseFamily::Gaussian => s * s * x,
        NoiseFamily::Cauchy => s,
        NoiseFamily::Laplace => s,
        NoiseFamily::LogChiSquared => s * (PI / 2.0 + std::f64::consts::LN_2 + (1.0 + s * x).ln()),
    }
}

/// Oscillation cycles of `Psi(m theta)` over `theta in [-pi, pi]`.
fn cycles(noise: &NoiseModel, m: usize, max_abs_z: f64) -> f64 {
    m as f64 * (max_abs_z + noise_rate(noise, m)) + 1.0
}

/// Grid size used by [`fit_coefficients`] for these inputs.
pub fn fit_grid_nodes(
    noise: &NoiseModel,
    m: usize,
    max_abs_z: f64,
    quad: &QuadratureSpec,
) -> Result<usize> {
    let c = cycles(noise, m, max_abs_z);
    let floor = pow2_at_least(MIN_POINTS_PER_CYCLE as f64 * c);
    let nodes = match quad.grid_nodes {
        Some(n) if n < floor => {
            return Err(DeconvError::Numerical(format!(
                "grid of {n} nodes is below the Nyquist floor; need at least {floor} for m = {m}, max|Z| = {max_abs_z}"
            )))
        }
        Some(n) => n,
        None => pow2_at_least(quad.points_per_cycle as f64 * c),
    };
    if nodes > MAX_GRID_NODES {
        return Err(DeconvError::Numerical(format!(
            "coefficient grid needs {nodes} nodes, above the limit {MAX_GRID_NODES} (m = {m}, max|Z| = {max_abs_z})"
        )));
    }
    Ok(nodes)
}

/// `ahat_{m,j} = (1/n) sum_i u*_{phi_{m,j}}(Z_i)` for `|j| <= k_n`.
///
/// With `Psi(x) = (1/n) sum_i e^{ixZ_i} / f_eps*(x)` sampled on a uniform grid
/// of `[-pi m, pi m]`, `ahat_{m,j} = (sqrt m / 2pi) int_{-pi}^{pi} e^{-ij theta} Psi(m theta) d theta`,
/// and all `j` come from one FFT of the grid values.
pub fn fit_coefficients(
    samples: &[f64],
    noise: &NoiseModel,
    m: usize,
    k_n: usize,
    quad: &QuadratureSpec,
) -> Result<ProjectionEstimate> {
    check_samples(samples)?;
    check_table(m, k_n)?;
    let n = samples.len();
    let mf = m as f64;
    let nodes = fit_grid_nodes(noise, m, max_abs(samples), quad)?;
    let h = 2.0 * PI / nodes as f64;
    let steps: Vec<Complex64> = samples
        .iter()
        .map(|&z| Complex64::from_polar(1.0, mf * h * z))
        .collect();
    let blocks: Vec<usize> = (0..=nodes).step_by(NODE_BLOCK).collect();
    let values: Vec<Complex64> = blocks
        .par_iter()
        .flat_map_iter(|&start| {
            let end = (start + NODE_BLOCK).min(nodes + 1);
            let theta0 = -PI + h * start as f64;
            let mut acc = vec![Complex64::new(0.0, 0.0); end - start];
            for (&z, &step) in samples.iter().zip(&steps) {
                let mut e = Complex64::from_polar(1.0, mf * theta0 * z);
                for a in acc.iter_mut() {
                    *a += e;
                    e *= step;
                }
            }
            acc.into_iter().enumerate().map(move |(i, a)| {
                let theta = -PI + h * (start + i) as f64;
                a / n as f64 * noise.inv_cf(mf * theta)
            })
        })
        .collect();
    let grid = FourierGrid::new(&values)?;
    let scale = mf.sqrt() / (2.0 * PI);
    let coeffs = (-(k_n as i64)..=k_n as i64)
        .map(|j| grid.coefficient(j) * scale)
        .collect();
    Ok(ProjectionEstimate::new(m, k_n, coeffs, n))
}

/// Noise-free coefficients `(1/n) sum_i phi_{m,j}(X_i)`, evaluated directly.
pub fn fit_coefficients_direct(
    samples: &[f64],
    m: usize,
    k_n: usize,
) -> Result<ProjectionEstimate> {
    check_samples(samples)?;
    check_table(m, k_n)?;
    let n = samples.len();
    let mf = m as f64;
    let k = k_n as i64;
    // sin(pi(mx - j)) = (-1)^j sin(pi m x)
    let pre: Vec<(f64, f64)> = samples
        .iter()
        .map(|&x| (mf * x, mf.sqrt() * (PI * mf * x).sin() / PI))
        .collect();
    let coeffs: Vec<Complex64> = (-k..=k)
        .into_par_iter()
        .map(|j| {
            let jf = j as f64;
            let sign = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let total: f64 = pre
                .iter()
                .zip(samples)
                .map(|(&(mx, s), &x)| {
                    let d = mx - jf;
                    if d.abs() < 1e-3 {
                        phi(m, j, x)
                    } else {
                        sign * s / d
                    }
                })
                .sum();
            Complex64::new(total / n as f64, 0.0)
        })
        .collect();
    Ok(ProjectionEstimate::new(m, k_n, coeffs, n))
}

/// `gamma_n(ghat_m) = -sum_{|j| <= k_n} |ahat_{m,j}|^2`.
pub fn contrast_value(estimate: &ProjectionEstimate) -> f64 {
    -estimate.squared_norm()
}

/// Reconstructed density on a grid: real parts plus the largest imaginary
/// magnitude seen.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub values: Vec<f64>,
    pub max_imag: f64,
}

pub fn evaluate(estimate: &ProjectionEstimate, grid: &[f64]) -> Evaluation {
    let m = estimate.m();
    let k = estimate.k_n() as i64;
    let pts: Vec<Complex64> = grid
        .par_iter()
        .map(|&x| {
            (-k..=k)
                .map(|j| estimate.coeff(j) * phi(m, j, x))
                .sum::<Complex64>()
        })
        .collect();
    Evaluation {
        values: pts.iter().map(|c| c.re).collect(),
        max_imag: pts.iter().map(|c| c.im.abs()).fold(0.0, f64::max),
    }
}

/// `||ghat - g||^2` split into the part inside `S_m` and the squared bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiseBreakdown {
    pub total: f64,
    pub projection_error: f64,
    pub tail_bias: f64,
}

/// Exact integrated squared error against `target`, computed on the Fourier
/// side. `target_coeffs`, when given, must be the projection of the target at
/// the same `m` with truncation at least the estimate's.
pub fn mise_against_truth(
    estimate: &ProjectionEstimate,
    target: &TargetDensity,
    target_coeffs: Option<&ProjectionEstimate>,
    quad: &QuadratureSpec,
) -> Result<MiseBreakdown> {
    let m = estimate.m();
    let owned;
    let truth = match target_coeffs {
        Some(t) if t.m() == m && t.k_n() >= estimate.k_n() => t,
        _ => {
            owned = project_l2(|x| target.cf(x), m, estimate.k_n(), quad)?;
            &owned
        }
    };
    let k = estimate.k_n() as i64;
    let mut inside = 0.0;
    let mut truth_inside = 0.0;
    for j in -k..=k {
        let a = truth.coeff(j);
        inside += (estimate.coeff(j) - a).norm_sqr();
        truth_inside += a.norm_sqr();
    }
    let truncated = (target.projection_norm_sq(m, quad)? - truth_inside).max(0.0);
    let projection_error = inside + truncated;
    let tail_bias = target.bias_tail(m, quad)?;
    Ok(MiseBreakdown {
        total: (projection_error + tail_bias).max(0.0),
        projection_error,
        tail_bias,
    })
}

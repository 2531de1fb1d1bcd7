//! The Shannon (sinc) orthonormal system `phi_{m,j}(x) = sqrt(m) sinc(pi(mx - j))`.
//!
//! Fourier transforms use the convention `u*(x) = int e^{itx} u(t) dt`, under
//! which `phi*_{m,j}(x) = m^{-1/2} e^{ijx/m} 1{|x| <= pi m}`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{DeconvError, Result};
use crate::estimator::ProjectionEstimate;
use crate::quadrature::{integrate_panels, FourierGrid, QuadratureSpec};

/// One basis element `phi_{m,j}` of the truncated space `S_m^{(n)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisIndex {
    m: usize,
    j: i64,
    k_n: usize,
}

impl BasisIndex {
    pub fn new(m: usize, j: i64, k_n: usize) -> Result<Self> {
        if m == 0 {
            return Err(DeconvError::config(
                "basis.m",
                "resolution m must be at least 1",
            ));
        }
        if k_n == 0 {
            return Err(DeconvError::config(
                "basis.k_n",
                "truncation k_n must be at least 1",
            ));
        }
        if j.unsigned_abs() as usize > k_n {
            return Err(DeconvError::config(
                "basis.j",
                format!("translation {j} outside the truncation radius {k_n}"),
            ));
        }
        Ok(BasisIndex { m, j, k_n })
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn j(&self) -> i64 {
        self.j
    }
    pub fn k_n(&self) -> usize {
        self.k_n
    }

    pub fn eval(&self, x: f64) -> f64 {
        phi(self.m, self.j, x)
    }
}

/// `sin(u) / u` with a series branch near the removable singularity.
#[inline]
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sin() / u
    }
}

#[inline]
pub fn phi(m: usize, j: i64, x: f64) -> f64 {
    let mf = m as f64;
    mf.sqrt() * sinc(PI * (mf * x - j as f64))
}

/// Fourier transform of `phi_{m,j}`; the support boundary `|x| = pi m` is
/// included.
#[inline]
pub fn phi_fourier(m: usize, j: i64, x: f64) -> Complex64 {
    let mf = m as f64;
    if x.abs() <= PI * mf {
        Complex64::from_polar(1.0 / mf.sqrt(), j as f64 * x / mf)
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// A truncated series together with an analytic bound on the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedSum {
    pub value: f64,
    pub tail_bound: f64,
}

/// `sum_{|j| <= J} phi_{m,j}(x)^2`, which increases to `m` as `J` grows.
/// The tail is bounded by `2m / (pi^2 J)`.
pub fn sum_phi_squared(m: usize, x: f64, truncation: usize) -> TruncatedSum {
    let jmax = truncation as i64;
    let value = (-jmax..=jmax).map(|j| phi(m, j, x).powi(2)).sum();
    let tail_bound = if truncation == 0 {
        f64::INFINITY
    } else {
        2.0 * m as f64 / (PI * PI * truncation as f64)
    };
    TruncatedSum { value, tail_bound }
}

/// `<phi_{m,j}, phi_{m,k}>` evaluated on the Fourier side by adaptive
/// quadrature.
pub fn inner_product(m: usize, j: i64, k: i64, quad: &QuadratureSpec) -> Result<f64> {
    let lim = PI * m as f64;
    let panels = 4 + (j - k).unsigned_abs() as usize;
    let r = integrate_panels(
        |x: f64| (phi_fourier(m, j, x) * phi_fourier(m, k, x).conj()).re,
        -lim,
        lim,
        panels,
        quad,
    )?;
    Ok(r.value / (2.0 * PI))
}

/// Coefficients `a_{m,j} = <phi_{m,j}, g>` for `|j| <= k_n`, computed from the
/// Fourier transform `g*` through Plancherel:
/// `a_{m,j} = (1/2pi) int_{-pi m}^{pi m} conj(phi*_{m,j}(x)) g*(x) dx`.
///
/// The grid is refined by doubling until two successive levels agree to
/// `quad`'s tolerance on every coefficient.
pub fn project_l2<F>(
    f_fourier: F,
    m: usize,
    k_n: usize,
    quad: &QuadratureSpec,
) -> Result<ProjectionEstimate>
where
    F: Fn(f64) -> Complex64,
{
    if m == 0 {
        return Err(DeconvError::config(
            "basis.m",
            "resolution m must be at least 1",
        ));
    }
    let mf = m as f64;
    let scale = mf.sqrt() / (2.0 * PI);
    let coeffs_at = |nodes: usize| -> Result<Vec<Complex64>> {
        let grid = FourierGrid::sample(|t| f_fourier(mf * t), nodes)?;
        Ok((-(k_n as i64)..=k_n as i64)
            .map(|j| grid.coefficient(j) * scale)
            .collect())
    };
    let mut nodes = quad.grid_nodes.unwrap_or(256).max(16);
    let mut coarse = coeffs_at(nodes)?;
    let max_nodes = 1usize << 22;
    loop {
        let fine = coeffs_at(2 * nodes)?;
        let size = fine.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let target = quad.abs_tol.max(quad.rel_tol * size.max(1e-300));
        let (worst, diff) = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).norm())
            .enumerate()
            .fold(
                (0usize, 0.0f64),
                |acc, (i, d)| if d > acc.1 { (i, d) } else { acc },
            );
        if diff <= target {
            return Ok(ProjectionEstimate::new(m, k_n, fine, 0));
        }
        nodes *= 2;
        if 2 * nodes > max_nodes {
            return Err(DeconvError::Numerical(format!(
                "projection coefficients did not converge with {nodes} grid nodes; \
                 worst j = {} (change {diff:.3e}, target {target:.3e})",
                worst as i64 - k_n as i64
            )));
        }
        coarse = fine;
    }
}

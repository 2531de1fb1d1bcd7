//! Known error laws `f_eps`: characteristic functions, smoothness descriptors
//! and the variance-scale quantities `Delta(m)`, `Gamma(m)`, `lambda_1`,
//! `lambda_2` and `Delta_2(m)` built from them.

use std::cell::Cell;
use std::f64::consts::{FRAC_2_PI, PI, SQRT_2};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DeconvError, Result};
use crate::quadrature::{integrate, integrate_panels, QuadratureSpec};
use crate::special::ln_gamma_complex;

/// Constants of the two-sided envelope
/// `kappa0 (x^2+1)^{-gamma/2} e^{-mu|x|^delta} <= |f_eps*(x)| <= kappa0' (x^2+1)^{-gamma/2} e^{-mu|x|^delta}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSmoothness {
    pub gamma: f64,
    pub mu: f64,
    pub delta: f64,
    pub kappa0: f64,
    pub kappa0_prime: f64,
}

impl NoiseSmoothness {
    /// Validated constructor for a square-integrable noise density.
    pub fn new(gamma: f64, mu: f64, delta: f64, kappa0: f64, kappa0_prime: f64) -> Result<Self> {
        let s = NoiseSmoothness {
            gamma,
            mu,
            delta,
            kappa0,
            kappa0_prime,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.gamma,
            self.mu,
            self.delta,
            self.kappa0,
            self.kappa0_prime,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite || self.gamma < 0.0 || self.mu < 0.0 || self.delta < 0.0 {
            return Err(DeconvError::config(
                "noise.smoothness",
                "gamma, mu and delta must be finite and nonnegative",
            ));
        }
        if self.delta == 0.0 && self.gamma <= 0.5 {
            return Err(DeconvError::config(
                "noise.smoothness.gamma",
                "ordinary smooth noise needs gamma > 1/2 for a square-integrable density",
            ));
        }
        if self.delta > 0.0 && self.mu <= 0.0 {
            return Err(DeconvError::config(
                "noise.smoothness.mu",
                "super smooth noise (delta > 0) needs mu > 0",
            ));
        }
        if !(self.kappa0 > 0.0 && self.kappa0 <= self.kappa0_prime) {
            return Err(DeconvError::config(
                "noise.smoothness.kappa0",
                "need 0 < kappa0 <= kappa0'",
            ));
        }
        Ok(())
    }

    pub fn is_super_smooth(&self) -> bool {
        self.delta > 0.0
    }

    /// `ln[(x^2+1)^{-gamma/2} e^{-mu|x|^delta}]`.
    pub fn ln_envelope(&self, x: f64) -> f64 {
        -0.5 * self.gamma * (x * x).ln_1p() - self.mu * x.abs().powf(self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian,
    Cauchy,
    Laplace,
    LogChiSquared,
    None,
}

impl NoiseFamily {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(NoiseFamily::Gaussian),
            "cauchy" => Ok(NoiseFamily::Cauchy),
            "laplace" => Ok(NoiseFamily::Laplace),
            "log_chi_squared" => Ok(NoiseFamily::LogChiSquared),
            "none" => Ok(NoiseFamily::None),
            other => Err(DeconvError::config(
                "noise.name",
                format!(
                    "unknown noise `{other}` (expected gaussian, cauchy, laplace, log_chi_squared or none)"
                ),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::Cauchy => "cauchy",
            NoiseFamily::Laplace => "laplace",
            NoiseFamily::LogChiSquared => "log_chi_squared",
            NoiseFamily::None => "none",
        }
    }
}

/// A built-in noise law, scaled: `eps = scale * eps_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    family: NoiseFamily,
    scale: f64,
    smoothness: NoiseSmoothness,
}

/// `mantissa * exp(log_scale)`, for quantities that overflow `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogScaled {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl LogScaled {
    pub fn from_ln(ln: f64) -> Self {
        LogScaled {
            mantissa: 1.0,
            log_scale: ln,
        }
    }

    pub fn ln(&self) -> f64 {
        self.mantissa.ln() + self.log_scale
    }

    /// Plain value; `inf` when out of range.
    pub fn value(&self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }
}

pub fn builtin_noise(name: &str, scale: f64) -> Result<NoiseModel> {
    NoiseModel::builtin(name, scale)
}

impl NoiseModel {
    pub fn builtin(name: &str, scale: f64) -> Result<Self> {
        Self::new(NoiseFamily::parse(name)?, scale)
    }

    pub fn none() -> Self {
        NoiseModel {
            family: NoiseFamily::None,
            scale: 1.0,
            smoothness: NoiseSmoothness {
                gamma: 0.0,
                mu: 0.0,
                delta: 0.0,
                kappa0: 1.0,
                kappa0_prime: 1.0,
            },
        }
    }

    pub fn new(family: NoiseFamily, scale: f64) -> Result<Self> {
        if family == NoiseFamily::None {
            return Ok(Self::none());
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(DeconvError::config(
                "noise.scale",
                "scale must be finite and > 0",
            ));
        }
        let smoothness = match family {
            NoiseFamily::Gaussian => NoiseSmoothness::new(0.0, 0.5 * scale * scale, 2.0, 1.0, 1.0)?,
            NoiseFamily::Cauchy => NoiseSmoothness::new(0.0, scale, 1.0, 1.0, 1.0)?,
            NoiseFamily::Laplace => {
                // (1+x^2)/(1+b^2 x^2) runs between 1 and 1/b^2.
                let r = 1.0 / (scale * scale);
                NoiseSmoothness::new(2.0, 0.0, 0.0, r.min(1.0), r.max(1.0))?
            }
            // |f*|/e^{-mu|x|} = sqrt(2 / (1 + e^{-2 pi s |x|})) runs between 1 and sqrt(2).
            NoiseFamily::LogChiSquared => {
                NoiseSmoothness::new(0.0, 0.5 * PI * scale, 1.0, 1.0, SQRT_2)?
            }
            NoiseFamily::None => unreachable!(),
        };
        Ok(NoiseModel {
            family,
            scale,
            smoothness,
        })
    }

    pub fn family(&self) -> NoiseFamily {
        self.family
    }
    pub fn name(&self) -> &'static str {
        self.family.name()
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn smoothness(&self) -> &NoiseSmoothness {
        &self.smoothness
    }
    pub fn is_none(&self) -> bool {
        self.family == NoiseFamily::None
    }

    /// Complex logarithm of the characteristic function (any branch).
    pub fn ln_cf(&self, x: f64) -> Complex64 {
        let s = self.scale;
        match self.family {
            NoiseFamily::Gaussian => Complex64::new(-0.5 * s * s * x * x, 0.0),
            NoiseFamily::Cauchy => Complex64::new(-s * x.abs(), 0.0),
            NoiseFamily::Laplace => Complex64::new(-(s * s * x * x).ln_1p(), 0.0),
            NoiseFamily::LogChiSquared => {
                // E e^{ix ln(eta^2)} = 2^{ix} Gamma(1/2 + ix) / sqrt(pi)
                let t = s * x;
                Complex64::new(0.0, t * std::f64::consts::LN_2)
                    + ln_gamma_complex(Complex64::new(0.5, t))
                    - 0.5 * PI.ln()
            }
            NoiseFamily::None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn cf(&self, x: f64) -> Complex64 {
        match self.family {
            NoiseFamily::None => Complex64::new(1.0, 0.0),
            _ => self.ln_cf(x).exp(),
        }
    }

    /// `1 / f_eps*(x)`, computed without forming the (possibly underflowing) cf.
    pub fn inv_cf(&self, x: f64) -> Complex64 {
        match self.family {
            NoiseFamily::None => Complex64::new(1.0, 0.0),
            NoiseFamily::Laplace => Complex64::new(1.0 + self.scale * self.scale * x * x, 0.0),
            _ => (-self.ln_cf(x)).exp(),
        }
    }

    pub fn ln_abs_cf(&self, x: f64) -> f64 {
        match self.family {
            // ln|Gamma(1/2+it)|^2 = ln(pi / cosh(pi t))
            NoiseFamily::LogChiSquared => {
                let a = PI * self.scale * x.abs();
                -0.5 * (a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2)
            }
            _ => self.ln_cf(x).re,
        }
    }

    pub fn density(&self, x: f64) -> Option<f64> {
        let s = self.scale;
        match self.family {
            NoiseFamily::Gaussian => Some((-0.5 * (x / s).powi(2)).exp() / (s * (2.0 * PI).sqrt())),
            NoiseFamily::Cauchy => Some(s / (PI * (s * s + x * x))),
            NoiseFamily::Laplace => Some((-x.abs() / s).exp() / (2.0 * s)),
            NoiseFamily::LogChiSquared => {
                let u = x / s;
                Some((0.5 * u - 0.5 * u.exp()).exp() / (s * (2.0 * PI).sqrt()))
            }
            NoiseFamily::None => None,
        }
    }

    /// `||f_eps||_2`, closed form.
    pub fn density_l2_norm(&self) -> Option<f64> {
        let s = self.scale;
        let sq = match self.family {
            NoiseFamily::Gaussian => 1.0 / (2.0 * s * PI.sqrt()),
            NoiseFamily::Cauchy => 1.0 / (2.0 * PI * s),
            NoiseFamily::Laplace => 1.0 / (4.0 * s),
            NoiseFamily::LogChiSquared => 1.0 / (2.0 * PI * s),
            NoiseFamily::None => return None,
        };
        Some(sq.sqrt())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let s = self.scale;
        match self.family {
            NoiseFamily::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                s * z
            }
            NoiseFamily::Cauchy => s * (PI * (rng.random::<f64>() - 0.5)).tan(),
            NoiseFamily::Laplace => {
                let u: f64 = rng.random::<f64>() - 0.5;
                -s * u.signum() * (-2.0 * u.abs()).ln_1p()
            }
            NoiseFamily::LogChiSquared => {
                let z: f64 = StandardNormal.sample(rng);
                s * (z * z).ln()
            }
            NoiseFamily::None => 0.0,
        }
    }

    /// `E|eps|`, when finite.
    pub fn mean_abs(&self) -> Option<f64> {
        let s = self.scale;
        match self.family {
            NoiseFamily::Gaussian => Some(s * FRAC_2_PI.sqrt()),
            NoiseFamily::Laplace => Some(s),
            NoiseFamily::Cauchy => None,
            NoiseFamily::None => Some(0.0),
            NoiseFamily::LogChiSquared => {
                let quad = QuadratureSpec::default();
                let f = |u: f64| u.abs() * (0.5 * u - 0.5 * u.exp()).exp() / (2.0 * PI).sqrt();
                let left = integrate(f, -80.0, 0.0, &quad).ok()?.value;
                let right = integrate(f, 0.0, 8.0, &quad).ok()?.value;
                Some(s * (left + right))
            }
        }
    }

    pub fn variance(&self) -> Option<f64> {
        let s = self.scale;
        match self.family {
            NoiseFamily::Gaussian => Some(s * s),
            NoiseFamily::Laplace => Some(2.0 * s * s),
            NoiseFamily::Cauchy => None,
            // trigamma(1/2) = pi^2 / 2
            NoiseFamily::LogChiSquared => Some(0.5 * PI * PI * s * s),
            NoiseFamily::None => Some(0.0),
        }
    }

    /// Largest and smallest observed ratio `|f*(x)| / envelope(x)` on a
    /// uniform grid of `[-xmax, xmax]`; the numerical counterpart of
    /// `(kappa0, kappa0')`.
    pub fn fitted_envelope_constants(&self, xmax: f64, points: usize) -> (f64, f64) {
        let points = points.max(2);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..points {
            let x = -xmax + 2.0 * xmax * k as f64 / (points - 1) as f64;
            let r = (self.ln_abs_cf(x) - self.smoothness.ln_envelope(x)).exp();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    }

    /// Checks the envelope inequality on `grid` with relative slack `tol`.
    pub fn check_envelope(&self, grid: &[f64], tol: f64) -> Result<()> {
        let sm = &self.smoothness;
        for &x in grid {
            let ln_ratio = self.ln_abs_cf(x) - sm.ln_envelope(x);
            if ln_ratio < sm.kappa0.ln() - tol || ln_ratio > sm.kappa0_prime.ln() + tol {
                return Err(DeconvError::Numerical(format!(
                    "{} noise violates its envelope at x = {x}: |cf|/envelope = {}",
                    self.name(),
                    ln_ratio.exp()
                )));
            }
        }
        Ok(())
    }
}

/// `Delta(m) = (1/2pi) int_{-pi m}^{pi m} |f_eps*(x)|^{-2} dx` in log-scaled
/// form. Closed forms are used where they exist; the Gaussian case goes
/// through [`delta_m_quadrature`].
pub fn delta_m_scaled(noise: &NoiseModel, m: usize, quad: &QuadratureSpec) -> Result<LogScaled> {
    if m == 0 {
        return Err(DeconvError::config("m", "resolution m must be at least 1"));
    }
    let x = PI * m as f64;
    let s = noise.scale;
    let out = match noise.family {
        NoiseFamily::None => LogScaled {
            mantissa: m as f64,
            log_scale: 0.0,
        },
        NoiseFamily::Laplace => {
            let b2 = s * s;
            let poly = x + 2.0 * b2 * x.powi(3) / 3.0 + b2 * b2 * x.powi(5) / 5.0;
            LogScaled {
                mantissa: poly / PI,
                log_scale: 0.0,
            }
        }
        NoiseFamily::Cauchy => {
            // (e^{2sX} - 1) / (2 s pi)
            let a = 2.0 * s * x;
            LogScaled {
                mantissa: -(-a).exp_m1() / (2.0 * s * PI),
                log_scale: a,
            }
        }
        NoiseFamily::LogChiSquared => {
            // |f*|^{-2} = cosh(pi s x), so Delta = sinh(pi s X) / (pi^2 s)
            let a = PI * s * x;
            LogScaled {
                mantissa: -0.5 * (-2.0 * a).exp_m1() / (PI * PI * s),
                log_scale: a,
            }
        }
        NoiseFamily::Gaussian => delta_m_quadrature(noise, m, quad)?,
    };
    Ok(out)
}

/// Quadrature route for `Delta(m)`, valid for every model. The integrand is
/// divided by its maximum `|f*(pi m)|^{-2}` so the integral stays in range.
pub fn delta_m_quadrature(
    noise: &NoiseModel,
    m: usize,
    quad: &QuadratureSpec,
) -> Result<LogScaled> {
    if m == 0 {
        return Err(DeconvError::config("m", "resolution m must be at least 1"));
    }
    let x = PI * m as f64;
    let peak = -2.0 * noise.ln_abs_cf(x);
    let f = |t: f64| (-2.0 * noise.ln_abs_cf(t) - peak).exp();
    let panels = 4 * m;
    let r = integrate_panels(f, 0.0, x, panels, quad)?;
    Ok(LogScaled {
        mantissa: r.value / PI,
        log_scale: peak,
    })
}

/// `Delta(m)` as a plain number.
pub fn delta_m(noise: &NoiseModel, m: usize, quad: &QuadratureSpec) -> Result<f64> {
    let d = delta_m_scaled(noise, m, quad)?;
    let v = d.value();
    if v.is_finite() {
        Ok(v)
    } else {
        let largest = largest_representable_m(noise, quad);
        Err(DeconvError::Range(format!(
            "Delta({m}) overflows for {} noise (ln Delta = {:.3}); largest representable m is {largest}",
            noise.name(),
            d.ln()
        )))
    }
}

fn largest_representable_m(noise: &NoiseModel, quad: &QuadratureSpec) -> usize {
    let limit = f64::MAX.ln();
    let mut m = 1;
    while let Ok(d) = delta_m_scaled(noise, m + 1, quad) {
        if d.ln() >= limit {
            break;
        }
        m += 1;
        if m > 1_000_000 {
            break;
        }
    }
    m
}

/// `ln Gamma(m)` for `Gamma(m) = (1+(pi m)^2)^gamma (pi m)^{1-delta} exp{2 mu (pi m)^delta}`.
pub fn ln_gamma_m(smoothness: &NoiseSmoothness, m: usize) -> f64 {
    let x = PI * m as f64;
    smoothness.gamma * (x * x).ln_1p()
        + (1.0 - smoothness.delta) * x.ln()
        + 2.0 * smoothness.mu * x.powf(smoothness.delta)
}

pub fn gamma_m(smoothness: &NoiseSmoothness, m: usize) -> f64 {
    ln_gamma_m(smoothness, m).exp()
}

/// `lambda_1 = 1 / (kappa^2 pi R(mu, delta))` with `R = 1{delta=0} + 2 mu delta 1{delta>0}`.
pub fn lambda1(smoothness: &NoiseSmoothness, kappa: f64) -> f64 {
    let r = if smoothness.delta == 0.0 {
        1.0
    } else {
        2.0 * smoothness.mu * smoothness.delta
    };
    1.0 / (kappa * kappa * PI * r)
}

/// `lambda_2 = ||f_eps|| kappa^{-1} sqrt(2 lambda_1(kappa)) 1{delta <= 1} + 2 lambda_1(kappa) 1{delta > 1}`.
pub fn lambda2(noise: &NoiseModel, kappa: f64) -> Result<f64> {
    let sm = noise.smoothness();
    let l1 = lambda1(sm, kappa);
    if sm.delta > 1.0 {
        return Ok(2.0 * l1);
    }
    let norm = noise.density_l2_norm().ok_or_else(|| {
        DeconvError::config(
            "noise.name",
            format!(
                "lambda_2 needs the L2 norm of the {} noise density",
                noise.name()
            ),
        )
    })?;
    Ok(norm / kappa * (2.0 * l1).sqrt())
}

/// Variance-structure diagnostic
/// `Delta_2(m) = iint_{[-pi m, pi m]^2} |f_Z*(x-y)|^2 / |f_eps*(x) f_eps*(y)|^2 dx dy`
/// with `f_Z* = f_eps* g*`.
pub fn delta2_m<G>(noise: &NoiseModel, target_cf: G, m: usize, quad: &QuadratureSpec) -> Result<f64>
where
    G: Fn(f64) -> Complex64,
{
    if m == 0 {
        return Err(DeconvError::config("m", "resolution m must be at least 1"));
    }
    let lim = PI * m as f64;
    let panels = 4 * m;
    let required = (15 * panels).pow(2);
    if required > quad.max_nodes_2d {
        return Err(DeconvError::Numerical(format!(
            "Delta_2({m}) needs at least {required} nodes, budget is {}",
            quad.max_nodes_2d
        )));
    }
    let used = Cell::new(0usize);
    let ln_abs = |t: f64| {
        let g = target_cf(t).norm();
        if g == 0.0 {
            f64::NEG_INFINITY
        } else {
            noise.ln_abs_cf(t) + g.ln()
        }
    };
    let inner = |x: f64| -> f64 {
        if used.get() > quad.max_nodes_2d {
            return f64::NAN;
        }
        let lx = noise.ln_abs_cf(x);
        let r = integrate_panels(
            |y: f64| (2.0 * (ln_abs(x - y) - lx - noise.ln_abs_cf(y))).exp(),
            -lim,
            lim,
            panels,
            quad,
        );
        match r {
            Ok(e) => {
                used.set(used.get() + e.evaluations);
                e.value
            }
            Err(_) => f64::NAN,
        }
    };
    let outer = integrate_panels(inner, -lim, lim, panels, quad)?;
    if used.get() > quad.max_nodes_2d || !outer.value.is_finite() {
        return Err(DeconvError::Numerical(format!(
            "Delta_2({m}) exceeded its node budget of {} (used {})",
            quad.max_nodes_2d,
            used.get()
        )));
    }
    Ok(outer.value)
}

//! Ground-truth densities `g` with closed-form Fourier transforms, their
//! smoothness class `(s, r, b, C1)` and the moment bound `M2 > int x^2 g^2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{DeconvError, Result};
use crate::quadrature::{integrate_panels, integrate_to_infinity, QuadratureSpec};

/// `int |g*(x)|^2 (x^2+1)^s exp(2b|x|^r) dx <= c1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessClass {
    pub s: f64,
    pub r: f64,
    pub b: f64,
    pub c1: f64,
}

/// Parameters of a built-in target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum TargetSpec {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    Cauchy {
        location: f64,
        scale: f64,
    },
    Laplace {
        location: f64,
        scale: f64,
    },
    MixtureGaussian {
        weights: Vec<f64>,
        means: Vec<f64>,
        sds: Vec<f64>,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// `U[-width/2, width/2]` convolved with `N(0, sd^2)`.
    UniformSmooth {
        width: f64,
        sd: f64,
    },
}

impl TargetSpec {
    /// Standard parameters for each name.
    pub fn default_for(name: &str) -> Result<Self> {
        Ok(match name {
            "gaussian" => TargetSpec::Gaussian { mean: 0.0, sd: 1.0 },
            "cauchy" => TargetSpec::Cauchy {
                location: 0.0,
                scale: 1.0,
            },
            "laplace" => TargetSpec::Laplace {
                location: 0.0,
                scale: 1.0,
            },
            "mixture_gaussian" => TargetSpec::MixtureGaussian {
                weights: vec![0.5, 0.5],
                means: vec![-2.0, 2.0],
                sds: vec![1.0, 1.0],
            },
            "uniform" => TargetSpec::Uniform { low: 0.0, high: 1.0 },
            "uniform_smooth" => TargetSpec::UniformSmooth { width: 2.0, sd: 0.5 },
            other => {
                return Err(DeconvError::config(
                    "target.name",
                    format!(
                        "unknown target `{other}` (expected gaussian, cauchy, laplace, mixture_gaussian, uniform or uniform_smooth)"
                    ),
                ))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TargetSpec::Gaussian { .. } => "gaussian",
            TargetSpec::Cauchy { .. } => "cauchy",
            TargetSpec::Laplace { .. } => "laplace",
            TargetSpec::MixtureGaussian { .. } => "mixture_gaussian",
            TargetSpec::Uniform { .. } => "uniform",
            TargetSpec::UniformSmooth { .. } => "uniform_smooth",
        }
    }

    fn validate(&self) -> Result<()> {
        let pos = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(DeconvError::config(
                    format!("target.{key}"),
                    "must be finite and > 0",
                ))
            }
        };
        let fin = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(DeconvError::config(
                    format!("target.{key}"),
                    "must be finite",
                ))
            }
        };
        match self {
            TargetSpec::Gaussian { mean, sd } => {
                fin("mean", *mean)?;
                pos("sd", *sd)
            }
            TargetSpec::Cauchy { location, scale } | TargetSpec::Laplace { location, scale } => {
                fin("location", *location)?;
                pos("scale", *scale)
            }
            TargetSpec::MixtureGaussian {
                weights,
                means,
                sds,
            } => {
                if weights.is_empty() || weights.len() != means.len() || weights.len() != sds.len()
                {
                    return Err(DeconvError::config(
                        "target.weights",
                        "weights, means and sds must be nonempty and of equal length",
                    ));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
                    || weights.iter().sum::<f64>() <= 0.0
                {
                    return Err(DeconvError::config(
                        "target.weights",
                        "weights must be nonnegative with a positive sum",
                    ));
                }
                means.iter().try_for_each(|m| fin("means", *m))?;
                sds.iter().try_for_each(|s| pos("sds", *s))
            }
            TargetSpec::Uniform { low, high } => {
                fin("low", *low)?;
                fin("high", *high)?;
                if high > low {
                    Ok(())
                } else {
                    Err(DeconvError::config("target.high", "need high > low"))
                }
            }
            TargetSpec::UniformSmooth { width, sd } => {
                pos("width", *width)?;
                pos("sd", *sd)
            }
        }
    }
}

/// A built-in target with its derived constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDensity {
    spec: TargetSpec,
    smoothness: SmoothnessClass,
    m2: f64,
    l2_norm_sq: f64,
}

pub fn builtin_target(name: &str) -> Result<TargetDensity> {
    TargetDensity::new(TargetSpec::default_for(name)?)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `sin(u)/u`.
fn sinc(u: f64) -> f64 {
    crate::shannon_basis::sinc(u)
}

impl TargetDensity {
    pub fn new(spec: TargetSpec) -> Result<Self> {
        spec.validate()?;
        let spec = match spec {
            TargetSpec::MixtureGaussian {
                weights,
                means,
                sds,
            } => {
                let total: f64 = weights.iter().sum();
                TargetSpec::MixtureGaussian {
                    weights: weights.iter().map(|w| w / total).collect(),
                    means,
                    sds,
                }
            }
            other => other,
        };
        let (s, r, b) = match &spec {
            TargetSpec::Gaussian { sd, .. } => (0.0, 2.0, sd * sd / 4.0),
            TargetSpec::Cauchy { scale, .. } => (0.0, 1.0, scale / 2.0),
            // |g*|^2 ~ x^{-4}, so membership needs s < 3/2
            TargetSpec::Laplace { .. } => (1.25, 0.0, 0.0),
            TargetSpec::MixtureGaussian { sds, .. } => {
                let lo = sds.iter().cloned().fold(f64::INFINITY, f64::min);
                (0.0, 2.0, lo * lo / 4.0)
            }
            // |g*|^2 ~ x^{-2}, so s < 1/2
            TargetSpec::Uniform { .. } => (0.25, 0.0, 0.0),
            TargetSpec::UniformSmooth { sd, .. } => (0.0, 2.0, sd * sd / 4.0),
        };
        let mut target = TargetDensity {
            spec,
            smoothness: SmoothnessClass { s, r, b, c1: 1.0 },
            m2: 1.0,
            l2_norm_sq: 1.0,
        };
        let quad = QuadratureSpec {
            rel_tol: 1e-9,
            abs_tol: 1e-13,
            ..QuadratureSpec::default()
        };
        target.l2_norm_sq = target.compute_l2_norm_sq(&quad)?;
        target.m2 = 1.1 * target.second_moment_of_square(&quad)?;
        target.smoothness.c1 = 1.1 * target.membership_integral(s, r, b, &quad)?;
        Ok(target)
    }

    pub fn spec(&self) -> &TargetSpec {
        &self.spec
    }
    pub fn name(&self) -> &'static str {
        self.spec.name()
    }
    pub fn smoothness(&self) -> &SmoothnessClass {
        &self.smoothness
    }
    /// `M2`, a strict upper bound on `int x^2 g(x)^2 dx`.
    pub fn m2(&self) -> f64 {
        self.m2
    }
    /// `||g||^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_norm_sq
    }

    pub fn density(&self, x: f64) -> f64 {
        match &self.spec {
            TargetSpec::Gaussian { mean, sd } => std_normal_pdf((x - mean) / sd) / sd,
            TargetSpec::Cauchy { location, scale } => {
                let u = (x - location) / scale;
                1.0 / (PI * scale * (1.0 + u * u))
            }
            TargetSpec::Laplace { location, scale } => {
                (-(x - location).abs() / scale).exp() / (2.0 * scale)
            }
            TargetSpec::MixtureGaussian {
                weights,
                means,
                sds,
            } => weights
                .iter()
                .zip(means)
                .zip(sds)
                .map(|((w, m), s)| w * std_normal_pdf((x - m) / s) / s)
                .sum(),
            TargetSpec::Uniform { low, high } => {
                if x >= *low && x <= *high {
                    1.0 / (high - low)
                } else {
                    0.0
                }
            }
            TargetSpec::UniformSmooth { width, sd } => {
                let h = 0.5 * width;
                (std_normal_cdf((x + h) / sd) - std_normal_cdf((x - h) / sd)) / width
            }
        }
    }

    /// `g*(t) = int e^{itx} g(x) dx`.
    pub fn cf(&self, t: f64) -> Complex64 {
        match &self.spec {
            TargetSpec::Gaussian { mean, sd } => {
                Complex64::from_polar((-0.5 * sd * sd * t * t).exp(), mean * t)
            }
            TargetSpec::Cauchy { location, scale } => {
                Complex64::from_polar((-scale * t.abs()).exp(), location * t)
            }
            TargetSpec::Laplace { location, scale } => {
                Complex64::from_polar(1.0 / (1.0 + scale * scale * t * t), location * t)
            }
            TargetSpec::MixtureGaussian {
                weights,
                means,
                sds,
            } => weights
                .iter()
                .zip(means)
                .zip(sds)
                .map(|((w, m), s)| Complex64::from_polar(w * (-0.5 * s * s * t * t).exp(), m * t))
                .sum(),
            TargetSpec::Uniform { low, high } => {
                let half = 0.5 * (high - low);
                Complex64::from_polar(sinc(t * half), 0.5 * (low + high) * t)
            }
            TargetSpec::UniformSmooth { width, sd } => {
                Complex64::new(sinc(0.5 * t * width) * (-0.5 * sd * sd * t * t).exp(), 0.0)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.spec {
            TargetSpec::Gaussian { mean, sd } => std_normal_cdf((x - mean) / sd),
            TargetSpec::Cauchy { location, scale } => 0.5 + ((x - location) / scale).atan() / PI,
            TargetSpec::Laplace { location, scale } => {
                let u = (x - location) / scale;
                if u < 0.0 {
                    0.5 * u.exp()
                } else {
                    1.0 - 0.5 * (-u).exp()
                }
            }
            TargetSpec::MixtureGaussian {
                weights,
                means,
                sds,
            } => weights
                .iter()
                .zip(means)
                .zip(sds)
                .map(|((w, m), s)| w * std_normal_cdf((x - m) / s))
                .sum(),
            TargetSpec::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            TargetSpec::UniformSmooth { width, sd } => {
                // int Phi(z) dz = z Phi(z) + phi(z)
                let psi = |z: f64| z * std_normal_cdf(z) + std_normal_pdf(z);
                let h = 0.5 * width;
                sd * (psi((x + h) / sd) - psi((x - h) / sd)) / width
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.spec {
            TargetSpec::Gaussian { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            TargetSpec::Cauchy { location, scale } => {
                location + scale * (PI * (rng.random::<f64>() - 0.5)).tan()
            }
            TargetSpec::Laplace { location, scale } => {
                let u: f64 = rng.random::<f64>() - 0.5;
                location - scale * u.signum() * (-2.0 * u.abs()).ln_1p()
            }
            TargetSpec::MixtureGaussian {
                weights,
                means,
                sds,
            } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut k = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        k = i;
                        break;
                    }
                }
                let z: f64 = StandardNormal.sample(rng);
                means[k] + sds[k] * z
            }
            TargetSpec::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            TargetSpec::UniformSmooth { width, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                width * (rng.random::<f64>() - 0.5) + sd * z
            }
        }
    }

    /// Squared bias of the Shannon projection,
    /// `||g - g_m||^2 = (1/2pi) int_{|x| > pi m} |g*(x)|^2 dx`. `m = 0` gives `||g||^2`.
    pub fn bias_tail(&self, m: usize, quad: &QuadratureSpec) -> Result<f64> {
        if m == 0 {
            return Ok(self.l2_norm_sq);
        }
        let x = PI * m as f64;
        let v = match &self.spec {
            TargetSpec::Gaussian { sd, .. } => erfc(sd * x) / (2.0 * sd * PI.sqrt()),
            TargetSpec::Cauchy { scale, .. } => (-2.0 * scale * x).exp() / (2.0 * PI * scale),
            TargetSpec::Laplace { scale, .. } => {
                // (1/pi) int_X^inf (1+b^2t^2)^{-2} dt = (1/2pi b)[atan(1/U) - U/(1+U^2)], U = bX
                let u = scale * x;
                let bracket = if u > 10.0 {
                    let w = 1.0 / (u * u);
                    let mut term = 1.0 / u;
                    let mut acc = 0.0;
                    for k in 1..=12 {
                        term *= w;
                        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                        acc += sign * (2 * k) as f64 / (2 * k + 1) as f64 * term;
                    }
                    acc
                } else {
                    (1.0 / u).atan() - u / (1.0 + u * u)
                };
                bracket / (2.0 * PI * scale)
            }
            TargetSpec::Uniform { low, high } => {
                let len = high - low;
                let half = 0.5 * len;
                let panels = ((x * half / PI).ceil() as usize + 4).min(200_000);
                let inside =
                    integrate_panels(|t: f64| sinc(t * half).powi(2), 0.0, x, panels, quad)?.value
                        / PI;
                (self.l2_norm_sq - inside).max(0.0)
            }
            TargetSpec::MixtureGaussian { .. } | TargetSpec::UniformSmooth { .. } => {
                let (cut, freq) = self.gaussian_envelope_cut();
                if x >= cut {
                    0.0
                } else {
                    let panels = (((cut - x) * freq / PI).ceil() as usize + 8).min(200_000);
                    integrate_panels(|t: f64| self.cf(t).norm_sqr(), x, cut, panels, quad)?.value
                        / PI
                }
            }
        };
        Ok(v)
    }

    /// Past `cut`, `|g*|^2 < e^{-80}`; `freq` bounds the oscillation rate of `|g*|^2`.
    fn gaussian_envelope_cut(&self) -> (f64, f64) {
        match &self.spec {
            TargetSpec::MixtureGaussian { means, sds, .. } => {
                let lo = sds.iter().cloned().fold(f64::INFINITY, f64::min);
                let spread = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - means.iter().cloned().fold(f64::INFINITY, f64::min);
                (9.0 / lo, spread + 1.0)
            }
            TargetSpec::UniformSmooth { width, sd } => (9.0 / sd, width + 1.0),
            _ => (f64::INFINITY, 1.0),
        }
    }

    /// `(1/2pi) int_{-pi m}^{pi m} |g*|^2`, the squared norm of `g_m`.
    pub fn projection_norm_sq(&self, m: usize, quad: &QuadratureSpec) -> Result<f64> {
        Ok(self.l2_norm_sq - self.bias_tail(m, quad)?)
    }

    fn compute_l2_norm_sq(&self, quad: &QuadratureSpec) -> Result<f64> {
        let v = match &self.spec {
            TargetSpec::Gaussian { sd, .. } => 1.0 / (2.0 * sd * PI.sqrt()),
            TargetSpec::Cauchy { scale, .. } => 1.0 / (2.0 * PI * scale),
            TargetSpec::Laplace { scale, .. } => 1.0 / (4.0 * scale),
            TargetSpec::Uniform { low, high } => 1.0 / (high - low),
            TargetSpec::MixtureGaussian {
                weights,
                means,
                sds,
            } => {
                let mut acc = 0.0;
                for i in 0..weights.len() {
                    for k in 0..weights.len() {
                        let s = (sds[i] * sds[i] + sds[k] * sds[k]).sqrt();
                        acc +=
                            weights[i] * weights[k] * std_normal_pdf((means[i] - means[k]) / s) / s;
                    }
                }
                acc
            }
            TargetSpec::UniformSmooth { .. } => {
                let (cut, freq) = self.gaussian_envelope_cut();
                let panels = ((cut * freq / PI).ceil() as usize + 8).min(200_000);
                integrate_panels(|t: f64| self.cf(t).norm_sqr(), 0.0, cut, panels, quad)?.value / PI
            }
        };
        Ok(v)
    }

    fn center(&self) -> f64 {
        match &self.spec {
            TargetSpec::Gaussian { mean, .. } => *mean,
            TargetSpec::Cauchy { location, .. } | TargetSpec::Laplace { location, .. } => *location,
            TargetSpec::Uniform { low, high } => 0.5 * (low + high),
            _ => 0.0,
        }
    }

    /// `int x^2 g(x)^2 dx`.
    pub fn second_moment_of_square(&self, quad: &QuadratureSpec) -> Result<f64> {
        if let TargetSpec::Uniform { low, high } = &self.spec {
            let len = high - low;
            return Ok((high.powi(3) - low.powi(3)) / (3.0 * len * len));
        }
        let c = self.center();
        let f = |x: f64| x * x * self.density(x).powi(2);
        let right = integrate_to_infinity(f, c, quad)?.value;
        let left = integrate_to_infinity(|y: f64| f(2.0 * c - y), c, quad)?.value;
        Ok(left + right)
    }

    /// `int |g*(x)|^2 (x^2+1)^s exp(2b|x|^r) dx` for the given class exponents,
    /// with an analytic bound for the polynomial tails.
    pub fn membership_integral(
        &self,
        s: f64,
        r: f64,
        b: f64,
        quad: &QuadratureSpec,
    ) -> Result<f64> {
        let weight = |x: f64| (x * x).ln_1p() * s + 2.0 * b * x.abs().powf(r);
        let f = |x: f64| {
            let g = self.cf(x).norm_sqr();
            if g == 0.0 {
                0.0
            } else {
                (g.ln() + weight(x)).exp()
            }
        };
        let (cut, tail) = match &self.spec {
            TargetSpec::Gaussian { sd, .. } => (14.0 / sd, 0.0),
            TargetSpec::Cauchy { .. } => (0.0, f64::NAN),
            TargetSpec::Laplace { scale, .. } => {
                // |g*|^2 <= b^{-4} x^{-4}, (1+x^2)^s <= (2x^2)^s for x >= 1
                let t = 1e3f64.max(1.0 / scale);
                (
                    t,
                    2.0 * 2f64.powf(s) * scale.powi(-4) * t.powf(2.0 * s - 3.0) / (3.0 - 2.0 * s),
                )
            }
            TargetSpec::Uniform { low, high } => {
                // |g*|^2 <= 4 / (L^2 x^2)
                let len = high - low;
                let t = 1e4f64.max(1.0);
                (
                    t,
                    2.0 * 2f64.powf(s) * 4.0 / (len * len) * t.powf(2.0 * s - 1.0)
                        / (1.0 - 2.0 * s),
                )
            }
            TargetSpec::MixtureGaussian { .. } | TargetSpec::UniformSmooth { .. } => {
                let (cut, _) = self.gaussian_envelope_cut();
                (2.0 * cut, 0.0)
            }
        };
        if tail.is_nan() {
            let half = integrate_to_infinity(f, 0.0, quad)?.value;
            return Ok(2.0 * half);
        }
        let freq = match &self.spec {
            TargetSpec::Uniform { low, high } => high - low,
            _ => self.gaussian_envelope_cut().1,
        };
        let panels = ((cut * freq / PI).ceil() as usize + 16).min(400_000);
        let body = 2.0 * integrate_panels(f, 0.0, cut, panels, quad)?.value;
        Ok(body + tail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all() -> Vec<TargetDensity> {
        [
            "gaussian",
            "cauchy",
            "laplace",
            "mixture_gaussian",
            "uniform",
            "uniform_smooth",
        ]
        .iter()
        .map(|n| builtin_target(n).unwrap())
        .collect()
    }

    fn whole_line<F: Fn(f64) -> f64>(f: F, t: &TargetDensity) -> f64 {
        let quad = QuadratureSpec::default();
        match t.spec() {
            TargetSpec::Uniform { low, high } => {
                integrate_panels(&f, *low, *high, 4, &quad).unwrap().value
            }
            // slowly decaying oscillatory tails; the part beyond 1e4 is below 1e-8
            TargetSpec::Cauchy { .. } => {
                integrate_panels(&f, -1e4, 1e4, 20_000, &quad)
                    .unwrap()
                    .value
            }
            _ => {
                let c = t.center();
                integrate_to_infinity(&f, c, &quad).unwrap().value
                    + integrate_to_infinity(|y: f64| f(2.0 * c - y), c, &quad)
                        .unwrap()
                        .value
            }
        }
    }

    #[test]
    fn examples() {
        let g = builtin_target("gaussian").unwrap();
        assert_relative_eq!(g.cf(1.0).re, (-0.5f64).exp(), max_relative = 1e-15);
        let c = builtin_target("cauchy").unwrap();
        let quad = QuadratureSpec::default();
        assert_relative_eq!(
            c.second_moment_of_square(&quad).unwrap(),
            1.0 / (2.0 * PI),
            max_relative = 1e-9
        );
        assert!(c.m2() > 1.0 / (2.0 * PI));
        let l = builtin_target("laplace").unwrap();
        assert!((whole_line(|x| l.density(x), &l) - 1.0).abs() < 1e-10);
        assert!(builtin_target("levy").is_err());
    }

    #[test]
    fn densities_normalized_and_cf_consistent() {
        for t in all() {
            let mass = whole_line(|x| t.density(x), &t);
            let missing = if t.name() == "cauchy" {
                2.0 / (PI * 1e4)
            } else {
                0.0
            };
            assert!((mass + missing - 1.0).abs() < 1e-8, "{}: {mass}", t.name());
            assert!((t.cf(0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
            for x in [0.3, 1.7, 4.0] {
                assert!((t.cf(-x) - t.cf(x).conj()).norm() < 1e-14);
                let re = whole_line(|y| (x * y).cos() * t.density(y), &t);
                let im = whole_line(|y| (x * y).sin() * t.density(y), &t);
                assert!(
                    (Complex64::new(re, im) - t.cf(x)).norm() < 1e-7,
                    "{} x={x}",
                    t.name()
                );
            }
        }
    }

    #[test]
    fn l2_norms_match_x_space() {
        for t in all() {
            let sq = whole_line(|x| t.density(x).powi(2), &t);
            assert_relative_eq!(sq, t.l2_norm_sq(), max_relative = 1e-8);
            let m2 = whole_line(|x| x * x * t.density(x).powi(2), &t);
            assert!(m2 < t.m2(), "{}", t.name());
        }
    }

    #[test]
    fn cdf_matches_density() {
        let quad = QuadratureSpec::default();
        for t in all() {
            for (a, b) in [(-1.0, 0.5), (0.2, 0.9), (-3.0, 2.0)] {
                let direct = integrate_panels(|x| t.density(x), a, b, 8, &quad)
                    .unwrap()
                    .value;
                assert!((t.cdf(b) - t.cdf(a) - direct).abs() < 1e-9, "{}", t.name());
            }
        }
    }

    #[test]
    fn bias_tail_examples() {
        let quad = QuadratureSpec::default();
        let c = builtin_target("cauchy").unwrap();
        assert_relative_eq!(
            c.bias_tail(1, &quad).unwrap(),
            (-2.0 * PI).exp() / (2.0 * PI),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            c.bias_tail(1, &quad).unwrap(),
            2.973e-4,
            max_relative = 1e-3
        );
        for t in all() {
            assert_eq!(t.bias_tail(0, &quad).unwrap(), t.l2_norm_sq());
            let mut prev = t.l2_norm_sq();
            for m in 1..=30 {
                let b = t.bias_tail(m, &quad).unwrap();
                assert!(b <= prev + 1e-15 && b >= 0.0, "{} m={m}", t.name());
                prev = b;
            }
        }
        assert!(
            builtin_target("gaussian")
                .unwrap()
                .bias_tail(5, &quad)
                .unwrap()
                < 1e-50
        );
    }

    #[test]
    fn parseval_partition() {
        let quad = QuadratureSpec::default();
        for t in all() {
            for m in [1, 2, 5] {
                let x = PI * m as f64;
                let inside = integrate_panels(|u| t.cf(u).norm_sqr(), 0.0, x, 16 * m, &quad)
                    .unwrap()
                    .value
                    / PI;
                assert!(
                    (inside + t.bias_tail(m, &quad).unwrap() - t.l2_norm_sq()).abs() < 1e-8,
                    "{} m={m}",
                    t.name()
                );
            }
        }
    }

    #[test]
    fn laplace_tail_series_matches_closed_form_near_switch() {
        let quad = QuadratureSpec::default();
        let t = TargetDensity::new(TargetSpec::Laplace {
            location: 0.0,
            scale: 10.0 / PI + 1e-9,
        })
        .unwrap();
        let direct = integrate_to_infinity(|u: f64| t.cf(u).norm_sqr(), PI, &quad)
            .unwrap()
            .value
            / PI;
        assert_relative_eq!(t.bias_tail(1, &quad).unwrap(), direct, max_relative = 1e-10);
    }

    #[test]
    fn smoothness_membership() {
        let quad = QuadratureSpec::default();
        for t in all() {
            let sm = t.smoothness();
            if sm.r > 0.0 {
                assert!(sm.b > 0.0);
            }
            let v = t.membership_integral(sm.s, sm.r, sm.b, &quad).unwrap();
            assert!(
                v.is_finite() && v <= sm.c1,
                "{}: {v} vs {}",
                t.name(),
                sm.c1
            );
        }
    }

    #[test]
    fn samplers_match_cdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for t in all() {
            let n = 20_000;
            let mut draws: Vec<f64> = (0..n).map(|_| t.sample(&mut rng)).collect();
            draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let d = draws
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let f = t.cdf(x);
                    (f - i as f64 / n as f64)
                        .abs()
                        .max(((i + 1) as f64 / n as f64 - f).abs())
                })
                .fold(0.0, f64::max);
            // 0.1% critical value of the Kolmogorov distribution
            assert!(d * (n as f64).sqrt() < 1.95, "{}: D = {d}", t.name());
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(TargetDensity::new(TargetSpec::Gaussian { mean: 0.0, sd: 0.0 }).is_err());
        assert!(TargetDensity::new(TargetSpec::Uniform {
            low: 1.0,
            high: 1.0
        })
        .is_err());
        assert!(TargetDensity::new(TargetSpec::MixtureGaussian {
            weights: vec![1.0],
            means: vec![0.0, 1.0],
            sds: vec![1.0]
        })
        .is_err());
    }
}

//! Numerical integration: adaptive Gauss-Kronrod on finite and semi-infinite
//! ranges, and a Filon-type cubic rule for Fourier coefficients on a uniform
//! grid.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{DeconvError, Result};

/// Tolerances and budgets shared by every numerical routine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of interval bisections for one adaptive integral.
    pub max_subdivisions: usize,
    /// Node budget for two-dimensional integrals.
    pub max_nodes_2d: usize,
    /// Fixed node count for the coefficient grid. `None` picks it from the
    /// oscillation of the integrand.
    pub grid_nodes: Option<usize>,
    /// Grid nodes per oscillation cycle when `grid_nodes` is `None`.
    pub points_per_cycle: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 4000,
            max_nodes_2d: 20_000_000,
            grid_nodes: None,
            points_per_cycle: 256,
        }
    }
}

/// Value with a Gauss-Kronrod error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * WGK[i];
        if i % 2 == 1 {
            gauss = gauss + pair * WG[i / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).magnitude();
    (value, error)
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

/// Adaptive G7-K15 integration of `f` over `[a, b]`, starting from `panels`
/// equal subintervals. Panels are useful for oscillatory integrands where a
/// single 15-point rule under-resolves the first pass.
pub fn integrate_panels<T: QuadValue, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    spec: &QuadratureSpec,
) -> Result<Estimate<T>> {
    if a == b {
        return Ok(Estimate {
            value: T::zero(),
            error: 0.0,
            evaluations: 0,
        });
    }
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut segments: Vec<Segment<T>> = (0..panels)
        .map(|k| {
            let lo = a + width * k as f64;
            let hi = if k + 1 == panels { b } else { lo + width };
            let (value, error) = gk15(&f, lo, hi);
            Segment {
                a: lo,
                b: hi,
                value,
                error,
            }
        })
        .collect();
    let mut evaluations = 15 * panels;
    let mut bisections = 0usize;
    loop {
        let total = segments.iter().fold(T::zero(), |acc, s| acc + s.value);
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let target = spec.abs_tol.max(spec.rel_tol * total.magnitude());
        if error <= target {
            return Ok(Estimate {
                value: total,
                error,
                evaluations,
            });
        }
        if bisections >= spec.max_subdivisions {
            return Err(DeconvError::Numerical(format!(
                "adaptive quadrature on [{a}, {b}] stopped after {bisections} bisections \
                 with error {error:.3e} (target {target:.3e})"
            )));
        }
        let (worst, _) = segments.iter().enumerate().map(|(i, s)| (i, s.error)).fold(
            (0, f64::NEG_INFINITY),
            |acc, x| if x.1 > acc.1 { x } else { acc },
        );
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            return Err(DeconvError::Numerical(format!(
                "adaptive quadrature on [{a}, {b}] cannot bisect below machine precision near {mid}"
            )));
        }
        for (lo, hi) in [(seg.a, mid), (mid, seg.b)] {
            let (value, error) = gk15(&f, lo, hi);
            segments.push(Segment {
                a: lo,
                b: hi,
                value,
                error,
            });
        }
        evaluations += 30;
        bisections += 1;
    }
}

pub fn integrate<T: QuadValue, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate<T>> {
    integrate_panels(f, a, b, 1, spec)
}

/// `int_a^inf f(x) dx` via `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<T: QuadValue, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate<T>> {
    let mapped = |t: f64| {
        if t >= 1.0 {
            return T::zero();
        }
        let s = 1.0 - t;
        let x = a + t / s;
        if !x.is_finite() {
            return T::zero();
        }
        f(x) * (1.0 / (s * s))
    };
    integrate_panels(mapped, 0.0, 1.0, 4, spec)
}

/// Uniform-grid Fourier coefficients `c_j = int_{-pi}^{pi} e^{-i j t} F(t) dt`
/// for every integer `j`, using cubic interpolation of `F` and exact
/// integration of the exponential factor. The error is `O(h^4)` uniformly in
/// `j`, so one FFT of size `N` serves arbitrarily many coefficients.
#[derive(Clone)]
pub struct FourierGrid {
    nodes: usize,
    dft: Arc<Vec<Complex64>>,
    ends: [Complex64; 8],
}

impl FourierGrid {
    /// `values[l] = F(-pi + 2 pi l / N)` for `l = 0..=N`.
    pub fn new(values: &[Complex64]) -> Result<Self> {
        if values.len() < 9 {
            return Err(DeconvError::Numerical(format!(
                "Fourier grid needs at least 8 panels, got {}",
                values.len().saturating_sub(1)
            )));
        }
        let nodes = values.len() - 1;
        let mut buffer: Vec<Complex64> = values[..nodes].to_vec();
        buffer[0] += values[nodes];
        let mut planner = FftPlanner::<f64>::new();
        planner.plan_fft_forward(nodes).process(&mut buffer);
        let ends = [
            values[0],
            values[1],
            values[2],
            values[3],
            values[nodes],
            values[nodes - 1],
            values[nodes - 2],
            values[nodes - 3],
        ];
        Ok(FourierGrid {
            nodes,
            dft: Arc::new(buffer),
            ends,
        })
    }

    /// Samples `f` on the grid and builds the interpolant.
    pub fn sample<F: Fn(f64) -> Complex64>(f: F, nodes: usize) -> Result<Self> {
        let step = 2.0 * PI / nodes as f64;
        let values: Vec<Complex64> = (0..=nodes).map(|l| f(-PI + step * l as f64)).collect();
        Self::new(&values)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn coefficient(&self, j: i64) -> Complex64 {
        let n = self.nodes as i64;
        let step = 2.0 * PI / self.nodes as f64;
        let theta = -(j as f64) * step;
        let (w, alpha) = filon_weights(theta);
        let d = self.dft[j.rem_euclid(n) as usize];
        let e = &self.ends;
        let mut acc = d * w;
        for k in 0..4 {
            acc += alpha[k] * e[k] + alpha[k].conj() * e[4 + k];
        }
        let sign = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        acc * (step * sign)
    }
}

/// Attenuation factor and endpoint corrections of the cubic Filon rule.
fn filon_weights(theta: f64) -> (f64, [Complex64; 4]) {
    if theta.abs() < 0.3 {
        filon_series(theta)
    } else {
        filon_closed(theta)
    }
}

fn filon_series(t: f64) -> (f64, [Complex64; 4]) {
    // Taylor coefficients in t^2 (imaginary parts carry an extra factor t)
    const W: [f64; 7] = [
        1.0,
        0.0,
        -11.0 / 720.0,
        23.0 / 15120.0,
        -139.0 / 1_814_400.0,
        37.0 / 14_968_800.0,
        -49139.0 / 871_782_912_000.0,
    ];
    const A_RE: [[f64; 7]; 4] = [
        [
            -2.0 / 3.0,
            1.0 / 45.0,
            103.0 / 15120.0,
            -169.0 / 226_800.0,
            761.0 / 19_958_400.0,
            -1009.0 / 817_296_480.0,
            319.0 / 11_321_856_000.0,
        ],
        [
            7.0 / 24.0,
            -7.0 / 180.0,
            5.0 / 3456.0,
            -7.0 / 259_200.0,
            7.0 / 22_809_600.0,
            -1.0 / 424_569_600.0,
            1.0 / 76_640_256_000.0,
        ],
        [
            -1.0 / 6.0,
            1.0 / 45.0,
            -5.0 / 6048.0,
            1.0 / 64800.0,
            -1.0 / 5_702_400.0,
            1.0 / 742_996_800.0,
            -1.0 / 134_120_448_000.0,
        ],
        [
            1.0 / 24.0,
            -1.0 / 180.0,
            5.0 / 24192.0,
            -1.0 / 259_200.0,
            1.0 / 22_809_600.0,
            -1.0 / 2_971_987_200.0,
            1.0 / 536_481_792_000.0,
        ],
    ];
    const A_IM: [[f64; 7]; 4] = [
        [
            2.0 / 45.0,
            2.0 / 105.0,
            -8.0 / 2835.0,
            86.0 / 467_775.0,
            -4.0 / 552_825.0,
            124.0 / 638_512_875.0,
            -124.0 / 32_564_156_625.0,
        ],
        [
            7.0 / 72.0,
            -1.0 / 168.0,
            11.0 / 72576.0,
            -13.0 / 5_987_520.0,
            5.0 / 249_080_832.0,
            -17.0 / 130_767_436_800.0,
            19.0 / 30_487_493_836_800.0,
        ],
        [
            -7.0 / 90.0,
            1.0 / 210.0,
            -11.0 / 90720.0,
            13.0 / 7_484_400.0,
            -1.0 / 62_270_208.0,
            17.0 / 163_459_296_000.0,
            -19.0 / 38_109_367_296_000.0,
        ],
        [
            7.0 / 360.0,
            -1.0 / 840.0,
            11.0 / 362_880.0,
            -13.0 / 29_937_600.0,
            1.0 / 249_080_832.0,
            -17.0 / 653_837_184_000.0,
            19.0 / 152_437_469_184_000.0,
        ],
    ];
    let t2 = t * t;
    let horner = |c: &[f64; 7]| c.iter().rev().fold(0.0, |acc, v| acc * t2 + v);
    let w = horner(&W);
    let alpha = std::array::from_fn(|k| Complex64::new(horner(&A_RE[k]), t * horner(&A_IM[k])));
    (w, alpha)
}

fn filon_closed(t: f64) -> (f64, [Complex64; 4]) {
    let t2 = t * t;
    let t4 = t2 * t2;
    let (s, c) = t.sin_cos();
    let (s2, c2) = (2.0 * t).sin_cos();
    let k = 6.0 + t2;
    let w = k / (3.0 * t4) * (3.0 - 4.0 * c + c2);
    let a0 = Complex64::new(
        ((-42.0 + 5.0 * t2) + k * (8.0 * c - c2)) / (6.0 * t4),
        ((-12.0 * t + 6.0 * t2 * t) + k * s2) / (6.0 * t4),
    );
    let a1 = Complex64::new(
        (14.0 * (3.0 - t2) - 7.0 * k * c) / (6.0 * t4),
        (30.0 * t - 5.0 * k * s) / (6.0 * t4),
    );
    let a2 = Complex64::new(
        (-4.0 * (3.0 - t2) + 2.0 * k * c) / (3.0 * t4),
        (-12.0 * t + 2.0 * k * s) / (3.0 * t4),
    );
    let a3 = Complex64::new(
        (2.0 * (3.0 - t2) - k * c) / (6.0 * t4),
        (6.0 * t - k * s) / (6.0 * t4),
    );
    (w, [a0, a1, a2, a3])
}

/// Smallest power of two not below `x` (and not below 16).
pub fn pow2_at_least(x: f64) -> usize {
    let x = x.max(16.0);
    let mut n = 16usize;
    while (n as f64) < x {
        n *= 2;
    }
    n
}

//! Special functions not covered by `statrs`.

use std::f64::consts::PI;

use num_complex::Complex64;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// A branch of `ln Gamma(z)` (Lanczos, g = 7). Only `exp` of the result is
/// branch independent; the imaginary part may differ from the principal
/// branch by multiples of `2 pi`.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Reflection: Gamma(z) Gamma(1 - z) = pi / sin(pi z).
        let s = (z * PI).sin();
        return Complex64::new(PI.ln(), 0.0)
            - s.ln()
            - ln_gamma_complex(Complex64::new(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &p) in LANCZOS.iter().enumerate().skip(1) {
        x += p / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wrap(a: f64) -> f64 {
        (a + PI).rem_euclid(2.0 * PI) - PI
    }

    #[test]
    fn matches_reference_values() {
        // Reference values from an arbitrary-precision loggamma.
        let cases = [
            (
                (0.5, 0.3),
                (0.377_021_125_610_205_39, -0.525_811_446_659_165_13),
            ),
            (
                (0.5, 7.2),
                (-10.390_795_019_718_583, 7.019_176_976_641_812_5),
            ),
            (
                (0.5, -40.0),
                (-61.912_914_538_591_192, -107.556_219_869_209_06),
            ),
            (
                (3.2, 1.1),
                (0.669_269_424_676_232_29, 1.126_906_304_355_189_6),
            ),
        ];
        for ((re, im), (lre, lim)) in cases {
            let v = ln_gamma_complex(Complex64::new(re, im));
            assert!(
                (v.re - lre).abs() < 1e-12 * lre.abs().max(1.0),
                "{re}+{im}i: {v}"
            );
            assert!(wrap(v.im - lim).abs() < 1e-10, "{re}+{im}i: {v}");
        }
    }

    #[test]
    fn half_line_modulus_identity() {
        // |Gamma(1/2 + iy)|^2 = pi / cosh(pi y)
        for y in [0.0, 0.7, 3.0, 25.0, 150.0] {
            let v = ln_gamma_complex(Complex64::new(0.5, y));
            let expected = 0.5 * (PI.ln() - (PI * y).cosh().ln());
            assert!(
                (v.re - expected).abs() < 1e-11 * expected.abs().max(1.0),
                "y={y}"
            );
        }
    }

    #[test]
    fn real_axis_factorials() {
        let v = ln_gamma_complex(Complex64::new(6.0, 0.0));
        assert!((v.re - 120f64.ln()).abs() < 1e-12);
        let v = ln_gamma_complex(Complex64::new(0.25, 0.0));
        assert!((v.re - 3.625_609_908_221_908_f64.ln()).abs() < 1e-12);
    }
}

//! Modified Bessel function of the second kind, order zero.
//!
//! Two regimes:
//! * `|w| <= 2`: the ascending series
//!   `K0(w) = -(ln(w/2) + gamma) I0(w) + sum_{k>=1} (w^2/4)^k / (k!)^2 H_k`.
//! * `|w| > 2`: trapezoidal quadrature of `K0(w) = e^{-w} int_0^inf exp(-w (cosh t - 1)) dt`,
//!   which converges geometrically in the step for integrands analytic in a strip.
//!
//! Both forms hold for complex `w` with `Re w > 0`, which is all the Green's
//! functions ever need.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_RADIUS: f64 = 2.0;

/// `K0(x)` for real `x > 0`. Underflows to exactly zero for very large `x`.
pub fn bessel_k0(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain {
            op: "bessel_k0",
            detail: format!("argument must be positive, got {x}"),
        });
    }
    Ok(k0_real(x))
}

/// `K0(w)` for complex `w` with `Re w > 0`.
pub fn bessel_k0_complex(w: Complex64) -> Result<Complex64> {
    if !(w.re > 0.0) {
        return Err(Error::Domain {
            op: "bessel_k0_complex",
            detail: format!("argument must satisfy Re w > 0, got {w}"),
        });
    }
    Ok(k0_complex(w))
}

pub(crate) fn k0_real(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    if x <= SERIES_RADIUS {
        let t = 0.25 * x * x;
        let mut term = 1.0;
        let mut i0 = 1.0;
        let mut tail = 0.0;
        let mut harmonic = 0.0;
        for k in 1..60 {
            let kf = k as f64;
            term *= t / (kf * kf);
            harmonic += 1.0 / kf;
            i0 += term;
            tail += term * harmonic;
            if term < 1e-18 * i0 {
                break;
            }
        }
        -((0.5 * x).ln() + EULER_GAMMA) * i0 + tail
    } else {
        if x > 745.0 {
            return 0.0;
        }
        let (h, t_max) = quadrature_grid(x, 0.0);
        let mut sum = 0.5;
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > t_max {
                break;
            }
            sum += (-x * (t.cosh() - 1.0)).exp();
            k += 1;
        }
        (-x).exp() * h * sum
    }
}

pub(crate) fn k0_complex(w: Complex64) -> Complex64 {
    if w.im == 0.0 {
        return Complex64::new(k0_real(w.re), 0.0);
    }
    let modulus = w.norm();
    if modulus <= SERIES_RADIUS {
        let t = 0.25 * w * w;
        let mut term = Complex64::new(1.0, 0.0);
        let mut i0 = term;
        let mut tail = Complex64::new(0.0, 0.0);
        let mut harmonic = 0.0;
        for k in 1..60 {
            let kf = k as f64;
            term *= t / (kf * kf);
            harmonic += 1.0 / kf;
            i0 += term;
            tail += term * harmonic;
            if term.norm() < 1e-18 * i0.norm() {
                break;
            }
        }
        -((0.5 * w).ln() + EULER_GAMMA) * i0 + tail
    } else {
        if w.re > 745.0 {
            return Complex64::new(0.0, 0.0);
        }
        let theta = w.im.atan2(w.re).abs();
        let (h, t_max) = quadrature_grid(w.re, theta);
        let mut sum = Complex64::new(0.5, 0.0);
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > t_max {
                break;
            }
            sum += (-w * (t.cosh() - 1.0)).exp();
            k += 1;
        }
        (-w).exp() * h * sum
    }
}

/// Step and cutoff for the trapezoidal rule. `re` is `Re w`, `theta = |arg w|`.
fn quadrature_grid(re: f64, theta: f64) -> (f64, f64) {
    let modulus = re / theta.cos();
    // Half-width of the strip of analyticity actually exploited. The integrand
    // grows like exp(|w| (1 - cos y)) off the real line, so keep that below e^5.
    let strip = 0.5 * (std::f64::consts::FRAC_PI_2 - theta);
    let growth_cap = (1.0 - 5.0 / modulus).max(-1.0).acos();
    let d = strip.min(growth_cap).min(std::f64::consts::FRAC_PI_4);
    let h = d / 7.0;
    let t_max = (1.0 + 50.0 / re).acosh();
    (h, t_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from 40-digit arbitrary precision evaluation.
    const REFERENCE: &[(f64, f64)] = &[
        (1e-6, 13.931442073626419413),
        (1e-3, 7.0236888005623813436),
        (0.1, 2.4270690247020166125),
        (0.5, 0.92441907122766586178),
        (1.0, 0.42102443824070833334),
        (1.9, 0.12884597927604747986),
        (2.0, 0.11389387274953343565),
        (2.1, 0.10078374088996694581),
        (3.0, 0.034739504386279248072),
        (5.0, 0.0036910983340425942747),
        (10.0, 0.000017780062316167651811),
        (20.0, 5.7412378153365242927e-10),
        (35.0, 1.3310351491429468528e-16),
        (50.0, 3.4101677497894955139e-23),
    ];

    #[test]
    fn real_values_match_reference() {
        for &(x, expected) in REFERENCE {
            let got = bessel_k0(x).unwrap();
            let rel = ((got - expected) / expected).abs();
            assert!(rel <= 1e-12, "K0({x}) = {got}, expected {expected}, rel {rel:e}");
        }
    }

    #[test]
    fn complex_values_match_reference() {
        let cases = [
            ((0.3, 0.2), (1.1799998084064246554, -0.53066834259692957616)),
            ((1.5, -1.0), (0.059284979722950683375, 0.18892894968270261623)),
            ((3.0, 2.0), (-0.020787225587429771549, -0.024312663567167653853)),
            ((8.0, -5.0), (0.000071973202419279495024, -0.0001146839708059023565)),
            ((0.05, 0.04), (2.8658589202247629661, -0.67102779223444270707)),
            ((20.0, 10.0), (-3.7692389434260423088e-10, 3.9171613377869615902e-10)),
        ];
        for ((re, im), (ere, eim)) in cases {
            let got = bessel_k0_complex(Complex64::new(re, im)).unwrap();
            let expected = Complex64::new(ere, eim);
            let rel = (got - expected).norm() / expected.norm();
            assert!(rel <= 1e-11, "K0({re}+{im}i) = {got}, rel {rel:e}");
        }
    }

    #[test]
    fn small_argument_series() {
        // -ln(x/2) - gamma + O(x^2)
        let x = 0.1;
        let leading = -(x / 2.0_f64).ln() - EULER_GAMMA;
        assert!((bessel_k0(x).unwrap() - leading).abs() < 0.01);
        assert!((bessel_k0(x).unwrap() - 2.427069).abs() < 1e-6);
    }

    #[test]
    fn large_argument_asymptotics() {
        let x = 10.0_f64;
        let asym = (std::f64::consts::PI / (2.0 * x)).sqrt()
            * (-x).exp()
            * (1.0 - 1.0 / (8.0 * x) + 9.0 / (128.0 * x * x) - 225.0 / (3072.0 * x.powi(3)));
        assert!(((bessel_k0(x).unwrap() - asym) / asym).abs() < 1e-4);
        assert!((bessel_k0(x).unwrap() - 1.778006e-5).abs() < 1e-11);
    }

    #[test]
    fn underflows_gracefully() {
        assert_eq!(bessel_k0(800.0).unwrap(), 0.0);
        assert!(bessel_k0(700.0).unwrap() >= 0.0);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(bessel_k0(0.0).is_err());
        assert!(bessel_k0(-1.0).is_err());
        assert!(bessel_k0(f64::NAN).is_err());
        assert!(bessel_k0_complex(Complex64::new(-1.0, 1.0)).is_err());
    }

    #[test]
    fn conjugate_symmetry() {
        let w = Complex64::new(2.5, 1.3);
        let a = k0_complex(w);
        let b = k0_complex(w.conj());
        assert!((a.conj() - b).norm() < 1e-15 * a.norm());
    }
}

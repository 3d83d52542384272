//! Gamma function, sphere measures and the closed-form constants that
//! appear in the fractional domination estimate.

use std::f64::consts::{E, PI};

use crate::error::{ensure_range, Error, Result};
use crate::geom;

/// `2 * sqrt(e / pi)`
const TWO_SQRT_E_OVER_PI: f64 = 1.860_382_734_205_265_7;

/// Lanczos shift.
const LANCZOS_G: f64 = 10.900511;

/// Lanczos series coefficients (Pugh, g = 10.900511, n = 11).
const LANCZOS_COEFFS: [f64; 11] = [
    2.485_740_891_387_535_5e-5,
    1.051_423_785_817_219_7,
    -3.456_870_972_220_162_5,
    4.512_277_094_668_948,
    -2.982_852_253_235_766_4,
    1.056_397_115_771_267,
    -1.954_287_731_916_458_7e-1,
    1.709_705_434_044_412e-2,
    -5.719_261_174_043_057e-4,
    4.633_994_733_599_057e-6,
    -2.719_949_084_886_077_2e-9,
];

/// Gamma function. Poles at `0, -1, -2, ...` are reported as errors.
pub fn gamma(x: f64) -> Result<f64> {
    if x <= 0.0 && x == x.floor() {
        return Err(Error::GammaPole(x));
    }
    if x.is_nan() {
        return Err(Error::Domain {
            name: "x",
            value: x,
            expected: "a real number",
        });
    }
    Ok(gamma_unchecked(x))
}

pub(crate) fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let s = LANCZOS_COEFFS
            .iter()
            .enumerate()
            .skip(1)
            .fold(LANCZOS_COEFFS[0], |s, (k, c)| s + c / (k as f64 - x));
        PI / ((PI * x).sin()
            * s
            * TWO_SQRT_E_OVER_PI
            * ((0.5 - x + LANCZOS_G) / E).powf(0.5 - x))
    } else {
        let s = LANCZOS_COEFFS
            .iter()
            .enumerate()
            .skip(1)
            .fold(LANCZOS_COEFFS[0], |s, (k, c)| s + c / (x + k as f64 - 1.0));
        s * TWO_SQRT_E_OVER_PI * ((x - 0.5 + LANCZOS_G) / E).powf(x - 0.5)
    }
}

/// Surface measure of the unit sphere in `R^n`, `2 pi^{n/2} / Gamma(n/2)`.
pub fn sphere_measure(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            let h = n as f64 / 2.0;
            2.0 * PI.powf(h) / gamma_unchecked(h)
        }
    }
}

/// Volume of the unit ball in `R^n`.
pub fn ball_volume(n: usize) -> f64 {
    sphere_measure(n) / n as f64
}

fn check_bbm_args(alpha: f64, n: usize) -> Result<()> {
    ensure_range("alpha", alpha, alpha > 0.0 && alpha < 1.0, "(0, 1)")?;
    if n < 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    Ok(())
}

/// The explicit constant `c_{alpha,n}` in
/// `(1 - alpha) I_alpha(D^alpha f) <= c_{alpha,n} I_1(|grad f|)`:
///
/// ```text
/// (1-a) pi^{(n-1)/2} G((1-a)/2) G(a/2) G((n-1)/2)
/// -----------------------------------------------
///        a G((n+a-1)/2) G((n-a)/2)
/// ```
pub fn bbm_constant(alpha: f64, n: usize) -> Result<f64> {
    check_bbm_args(alpha, n)?;
    let nf = n as f64;
    let num = (1.0 - alpha)
        * PI.powf((nf - 1.0) / 2.0)
        * gamma_unchecked((1.0 - alpha) / 2.0)
        * gamma_unchecked(alpha / 2.0)
        * gamma_unchecked((nf - 1.0) / 2.0);
    let den = alpha * gamma_unchecked((nf + alpha - 1.0) / 2.0) * gamma_unchecked((nf - alpha) / 2.0);
    Ok(num / den)
}

/// Same constant with the factor `(1 - a) G((1-a)/2)` rewritten as
/// `2 G((3-a)/2)`. Stable as `alpha -> 1`.
pub fn bbm_constant_absorbed(alpha: f64, n: usize) -> Result<f64> {
    check_bbm_args(alpha, n)?;
    let nf = n as f64;
    let num = 2.0
        * gamma_unchecked((3.0 - alpha) / 2.0)
        * PI.powf((nf - 1.0) / 2.0)
        * gamma_unchecked(alpha / 2.0)
        * gamma_unchecked((nf - 1.0) / 2.0);
    let den = alpha * gamma_unchecked((nf + alpha - 1.0) / 2.0) * gamma_unchecked((nf - alpha) / 2.0);
    Ok(num / den)
}

/// Closed form of `int_{R^n} |t - x1|^{-a1} |t - x2|^{-a2} dt`, valid for
/// `0 < a1, a2 < n` and `a1 + a2 > n`.
pub fn beta_identity_rhs(n: usize, a1: f64, a2: f64, x1: &[f64], x2: &[f64]) -> Result<f64> {
    if n == 0 {
        return Err(Error::UnsupportedDimension(n));
    }
    crate::error::ensure_dim(n, x1.len())?;
    crate::error::ensure_dim(n, x2.len())?;
    let nf = n as f64;
    ensure_range("a1", a1, a1 > 0.0 && a1 < nf, "(0, n)")?;
    ensure_range("a2", a2, a2 > 0.0 && a2 < nf, "(0, n)")?;
    ensure_range("a1 + a2", a1 + a2, a1 + a2 > nf, "(n, 2n)")?;
    let d = geom::dist(x1, x2);
    if d == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    // order the exponents so the product is bitwise symmetric
    let (a1, a2) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
    let g = gamma_unchecked;
    let c = PI.powf(nf / 2.0) * g((nf - a1) / 2.0) / g(a1 / 2.0) * g((nf - a2) / 2.0) / g(a2 / 2.0)
        * g((a1 + a2 - nf) / 2.0)
        / g(nf - (a1 + a2) / 2.0);
    Ok(c * d.powf(nf - a1 - a2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_closed_forms() {
        assert_relative_eq!(gamma(0.5).unwrap(), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(5.0).unwrap(), 24.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(1.0).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn gamma_matches_mpmath() {
        // mpmath, 25 digits (tools/oracles.py)
        let cases = [
            (0.3, 2.991_568_987_687_590_628),
            (0.1, 9.513_507_698_668_731_836),
            (1e-3, 999.423_772_484_595_466_1),
            (7.5, 1871.254_305_797_788_346),
            (33.3, 7.487_577_596_522_706_608e35),
            (49.9, 4.118_011_034_253_058_042e62),
            (-2.5, -0.945_308_720_482_941_881_2),
        ];
        for (x, want) in cases {
            assert_relative_eq!(gamma(x).unwrap(), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn gamma_poles() {
        for x in [0.0, -1.0, -2.0, -17.0] {
            assert!(matches!(gamma(x), Err(Error::GammaPole(_))));
        }
        assert!(gamma(-0.5).is_ok());
    }

    #[test]
    fn gamma_recurrence_and_reflection() {
        for i in 0..100 {
            let x = 0.1 + 0.49 * i as f64;
            let lhs = gamma(x + 1.0).unwrap();
            assert_relative_eq!(lhs, x * gamma(x).unwrap(), max_relative = 1e-12);
            // reflection on (0, 1)
            let t = 0.005 + 0.0099 * i as f64;
            let prod = gamma(t).unwrap() * gamma(1.0 - t).unwrap();
            assert_relative_eq!(prod, PI / (PI * t).sin(), max_relative = 1e-12);
        }
    }

    #[test]
    fn sphere_measures() {
        assert_eq!(sphere_measure(1), 2.0);
        assert_relative_eq!(sphere_measure(2), 2.0 * PI);
        assert_relative_eq!(sphere_measure(3), 4.0 * PI);
        // general formula agrees with the hard-coded low dimensions
        for n in 1..=3usize {
            let h = n as f64 / 2.0;
            assert_relative_eq!(sphere_measure(n), 2.0 * PI.powf(h) / gamma(h).unwrap(), max_relative = 1e-13);
        }
        assert_relative_eq!(sphere_measure(4), 2.0 * PI * PI, max_relative = 1e-13);
    }

    #[test]
    fn bbm_constant_values() {
        // mpmath: c_{0.5,2}
        assert_relative_eq!(bbm_constant(0.5, 2).unwrap(), 27.500_743_272_081_491_31, max_relative = 1e-12);
        for k in 1..10 {
            let a = 0.1 * k as f64;
            for n in [2, 3, 4] {
                let c = bbm_constant(a, n).unwrap();
                assert!(c > 0.0);
                assert_relative_eq!(c, bbm_constant_absorbed(a, n).unwrap(), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn bbm_constant_near_one() {
        // mpmath: c_{0.9999,2} - 2 pi = 1.49956e-3; the convergence is linear in 1 - alpha
        let gap = bbm_constant(0.9999, 2).unwrap() - 2.0 * PI;
        assert_relative_eq!(gap, 1.499_563_305_243_214_8e-3, max_relative = 1e-8);
        assert!(gap.abs() < 2e-3);
    }

    #[test]
    fn bbm_constant_converges_monotonically() {
        for n in [2usize, 3] {
            let s = sphere_measure(n);
            let mut prev = f64::INFINITY;
            for k in 1..=12 {
                let a = 1.0 - 2f64.powi(-k);
                let gap = (bbm_constant(a, n).unwrap() - s).abs();
                assert!(gap < prev, "n={n} k={k}");
                prev = gap;
            }
        }
    }

    #[test]
    fn bbm_constant_domain() {
        assert!(bbm_constant(0.0, 2).is_err());
        assert!(bbm_constant(1.0, 2).is_err());
        assert!(bbm_constant(1.5, 2).is_err());
        assert!(matches!(bbm_constant(0.5, 1), Err(Error::UnsupportedDimension(1))));
    }

    #[test]
    fn beta_identity_symmetry_and_scaling() {
        let x1 = [0.0, 0.0];
        let x2 = [0.6, -0.8];
        let a = beta_identity_rhs(2, 1.25, 1.5, &x1, &x2).unwrap();
        let b = beta_identity_rhs(2, 1.5, 1.25, &x1, &x2).unwrap();
        assert_eq!(a, b);
        let far = [1.2, -1.6];
        let c = beta_identity_rhs(2, 1.25, 1.5, &x1, &far).unwrap();
        assert_relative_eq!(c / a, 2f64.powf(2.0 - 2.75), max_relative = 1e-12);
    }

    #[test]
    fn beta_identity_matches_quadrature_oracles() {
        // mpmath tanh-sinh quadrature over the real line
        let v = beta_identity_rhs(1, 0.75, 0.75, &[0.0], &[1.0]).unwrap();
        assert_relative_eq!(v, ORACLE_BETA_1D, max_relative = 1e-3);
        // mpmath, polar about x1 with the angular integral as 2 pi 2F1(b, b; 1; r^2)
        let v = beta_identity_rhs(2, 1.5, 1.5, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_relative_eq!(v, ORACLE_BETA_2D, max_relative = 1e-2);
    }

    const ORACLE_BETA_1D: f64 = 17.9045288838157;
    const ORACLE_BETA_2D: f64 = 27.5007432721;

    #[test]
    fn beta_identity_errors() {
        assert!(matches!(
            beta_identity_rhs(1, 0.75, 0.75, &[0.0], &[0.0]),
            Err(Error::CoincidentPoints)
        ));
        assert!(beta_identity_rhs(1, 0.25, 0.5, &[0.0], &[1.0]).is_err());
        assert!(beta_identity_rhs(2, 2.5, 0.5, &[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(matches!(
            beta_identity_rhs(2, 1.5, 1.5, &[0.0], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}

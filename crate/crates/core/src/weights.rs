//! Weights, exact ball masses `w(B(x, r))`, and empirical A1, doubling and
//! lower-Ahlfors diagnostics.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::geom;
use crate::quadrature::{self, QuadratureScheme};
use crate::sampling;
use crate::special::{ball_volume, sphere_measure};

/// Number of low-discrepancy points used for an essential infimum over a ball.
pub const INF_SAMPLES: usize = 1000;

/// Multilinear interpolant of samples on a regular grid, extended by
/// clamping outside the grid box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedWeight {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Grid points per axis, at least 2.
    pub counts: Vec<usize>,
    /// Row-major samples, last axis fastest.
    pub values: Vec<f64>,
}

impl TabulatedWeight {
    pub fn from_fn(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>, f: impl Fn(&[f64]) -> f64) -> Self {
        let n = lower.len();
        let total: usize = counts.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        for _ in 0..total {
            for i in 0..n {
                x[i] = lower[i] + (upper[i] - lower[i]) * idx[i] as f64 / (counts[i] - 1) as f64;
            }
            values.push(f(&x));
            for i in (0..n).rev() {
                idx[i] += 1;
                if idx[i] < counts[i] {
                    break;
                }
                idx[i] = 0;
            }
        }
        TabulatedWeight {
            lower,
            upper,
            counts,
            values,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.lower.len();
        ensure_dim(n, self.upper.len())?;
        ensure_dim(n, self.counts.len())?;
        if self.counts.iter().any(|&c| c < 2) {
            return Err(Error::Invalid("tabulated weight needs at least 2 points per axis".into()));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l < u)) {
            return Err(Error::Invalid("tabulated weight box must satisfy lower < upper".into()));
        }
        let total: usize = self.counts.iter().product();
        if self.values.len() != total {
            return Err(Error::Invalid(format!(
                "tabulated weight expects {total} samples, got {}",
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Invalid("tabulated weight samples must be positive".into()));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let n = self.lower.len();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for i in 0..n {
            let m = self.counts[i] - 1;
            let t = ((x[i] - self.lower[i]) / (self.upper[i] - self.lower[i]) * m as f64).clamp(0.0, m as f64);
            let k = (t.floor() as usize).min(m - 1);
            base[i] = k;
            frac[i] = t - k as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for i in 0..n {
                let bit = (corner >> i) & 1;
                w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
                flat = flat * self.counts[i] + base[i] + bit;
            }
            if w != 0.0 {
                acc += w * self.values[flat];
            }
        }
        acc
    }

}

/// Nonnegative weight on `R^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    Constant { dim: usize, value: f64 },
    /// `|x - pole|^{-exponent}`, `0 <= exponent < n`.
    RadialPower { pole: Vec<f64>, exponent: f64 },
    /// `1 + |x - pole|^{-exponent}`.
    PowerPlusOne { pole: Vec<f64>, exponent: f64 },
    Tabulated(TabulatedWeight),
    /// `factor * inner`.
    Scaled { factor: f64, inner: Box<Weight> },
}

impl Weight {
    pub fn unit(dim: usize) -> Self {
        Weight::Constant { dim, value: 1.0 }
    }

    pub fn radial_power(pole: &[f64], exponent: f64) -> Result<Self> {
        let w = Weight::RadialPower {
            pole: pole.to_vec(),
            exponent,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn power_plus_one(pole: &[f64], exponent: f64) -> Result<Self> {
        let w = Weight::PowerPlusOne {
            pole: pole.to_vec(),
            exponent,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if !(1..=geom::MAX_DIM).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        match self {
            Weight::Constant { value, .. } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(Error::Domain {
                        name: "weight value",
                        value: *value,
                        expected: "a positive number",
                    });
                }
            }
            Weight::RadialPower { exponent, .. } | Weight::PowerPlusOne { exponent, .. } => {
                if !(*exponent >= 0.0 && *exponent < n as f64) {
                    return Err(Error::Domain {
                        name: "weight exponent",
                        value: *exponent,
                        expected: "[0, n)",
                    });
                }
            }
            Weight::Tabulated(t) => t.validate()?,
            Weight::Scaled { factor, inner } => {
                if !(*factor > 0.0 && factor.is_finite()) {
                    return Err(Error::Domain {
                        name: "weight factor",
                        value: *factor,
                        expected: "a positive number",
                    });
                }
                inner.validate()?;
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Weight::Constant { dim, .. } => *dim,
            Weight::RadialPower { pole, .. } | Weight::PowerPlusOne { pole, .. } => pole.len(),
            Weight::Tabulated(t) => t.lower.len(),
            Weight::Scaled { inner, .. } => inner.dim(),
        }
    }

    pub fn pole(&self) -> Option<&[f64]> {
        match self {
            Weight::RadialPower { pole, exponent } | Weight::PowerPlusOne { pole, exponent } if *exponent > 0.0 => {
                Some(pole)
            }
            Weight::Scaled { inner, .. } => inner.pole(),
            _ => None,
        }
    }

    /// Exponent of the point singularity, 0 when there is none.
    pub fn pole_exponent(&self) -> f64 {
        match self {
            Weight::RadialPower { exponent, .. } | Weight::PowerPlusOne { exponent, .. } => *exponent,
            Weight::Scaled { inner, .. } => inner.pole_exponent(),
            _ => 0.0,
        }
    }

    pub fn is_analytic(&self) -> bool {
        match self {
            Weight::Tabulated(_) => false,
            Weight::Scaled { inner, .. } => inner.is_analytic(),
            _ => true,
        }
    }

    /// `w(x)`; `+inf` at a pole.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Weight::Constant { value, .. } => *value,
            Weight::RadialPower { pole, exponent } => {
                if *exponent == 0.0 {
                    1.0
                } else {
                    geom::dist(x, pole).powf(-exponent)
                }
            }
            Weight::PowerPlusOne { pole, exponent } => {
                1.0 + if *exponent == 0.0 {
                    1.0
                } else {
                    geom::dist(x, pole).powf(-exponent)
                }
            }
            Weight::Tabulated(t) => t.value(x),
            Weight::Scaled { factor, inner } => factor * inner.value(x),
        }
    }

    /// `c * w`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Weight::Constant { dim, value } => Weight::Constant {
                dim: *dim,
                value: value * c,
            },
            Weight::Scaled { factor, inner } => Weight::Scaled {
                factor: factor * c,
                inner: inner.clone(),
            },
            w => Weight::Scaled {
                factor: c,
                inner: Box::new(w.clone()),
            },
        }
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        let mv = |p: &Vec<f64>| p.iter().zip(shift).map(|(a, b)| a + b).collect::<Vec<_>>();
        match self {
            Weight::RadialPower { pole, exponent } => Weight::RadialPower {
                pole: mv(pole),
                exponent: *exponent,
            },
            Weight::PowerPlusOne { pole, exponent } => Weight::PowerPlusOne {
                pole: mv(pole),
                exponent: *exponent,
            },
            Weight::Tabulated(t) => Weight::Tabulated(TabulatedWeight {
                lower: mv(&t.lower),
                upper: mv(&t.upper),
                ..t.clone()
            }),
            Weight::Scaled { factor, inner } => Weight::Scaled {
                factor: *factor,
                inner: Box::new(inner.translated(shift)),
            },
            c => c.clone(),
        }
    }

    /// `w(B(center, r))`.
    pub fn ball_mass(&self, center: &[f64], r: f64) -> Result<f64> {
        ensure_dim(self.dim(), center.len())?;
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::NonPositiveRadius(r));
        }
        Ok(self.ball_mass_unchecked(center, r))
    }

    pub(crate) fn ball_mass_unchecked(&self, center: &[f64], r: f64) -> f64 {
        let n = center.len();
        match self {
            Weight::Constant { value, .. } => value * ball_volume(n) * r.powi(n as i32),
            Weight::RadialPower { pole, exponent } => power_ball_mass(n, geom::dist(center, pole), r, *exponent),
            Weight::PowerPlusOne { pole, exponent } => {
                ball_volume(n) * r.powi(n as i32) + power_ball_mass(n, geom::dist(center, pole), r, *exponent)
            }
            Weight::Tabulated(t) => tabulated_ball_mass(t, center, r),
            Weight::Scaled { factor, inner } => factor * inner.ball_mass_unchecked(center, r),
        }
    }

    /// Minimum of `w` over a fixed low-discrepancy sample of the closed ball,
    /// including its centre and the axis extreme points.
    pub fn sampled_inf(&self, center: &[f64], r: f64) -> f64 {
        let n = center.len();
        let mut m = self.value(center);
        for i in 0..n {
            for s in [-1.0, 1.0] {
                let mut p = center.to_vec();
                p[i] += s * r;
                m = m.min(self.value(&p));
            }
        }
        for p in sampling::halton_in_ball(center, r, INF_SAMPLES) {
            m = m.min(self.value(&p[..n]));
        }
        m
    }
}

/// `int_{B(c, r)} |y - pole|^{-beta} dy` with `d = |c - pole|`.
fn power_ball_mass(n: usize, d: f64, r: f64, beta: f64) -> f64 {
    let e = n as f64 - beta;
    if beta == 0.0 {
        return ball_volume(n) * r.powi(n as i32);
    }
    if d == 0.0 {
        return sphere_measure(n) * r.powf(e) / e;
    }
    match n {
        1 => {
            // F(u) = sign(u)|u|^{1-beta}/(1-beta)
            let big_f = |u: f64| u.signum() * u.abs().powf(e) / e;
            big_f(d + r) - big_f(d - r)
        }
        3 => {
            // full spheres up to r - d, then caps of area pi rho (r^2 - (rho - d)^2) / d
            let full_to = (r - d).max(0.0);
            let full = 4.0 * PI * full_to.powf(e) / e;
            let (a, b) = ((d - r).abs(), d + r);
            // int_a^b rho^{1-beta} (r^2 - (rho - d)^2) d rho, expanded in powers of rho
            let k = r * r - d * d;
            let prim = |x: f64| {
                k * x.powf(2.0 - beta) / (2.0 - beta) + 2.0 * d * x.powf(3.0 - beta) / (3.0 - beta)
                    - x.powf(4.0 - beta) / (4.0 - beta)
            };
            full + PI / d * (prim(b) - prim(a))
        }
        _ => {
            let full_to = (r - d).max(0.0);
            let full = 2.0 * PI * full_to.powf(e) / e;
            let (a, b) = ((d - r).abs(), d + r);
            // arc of the circle |y - pole| = rho inside the ball, via rho = m - h cos(psi)
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            let arc = |rho: f64| {
                let c = ((rho * rho + d * d - r * r) / (2.0 * rho * d)).clamp(-1.0, 1.0);
                2.0 * rho * c.acos()
            };
            let partial = quadrature::integrate_interval(0.0, PI, 16, 32, |psi| {
                let rho = m - h * psi.cos();
                if rho <= 0.0 {
                    0.0
                } else {
                    rho.powf(-beta) * arc(rho) * h * psi.sin()
                }
            });
            full + partial
        }
    }
}

fn tabulated_ball_mass(t: &TabulatedWeight, center: &[f64], r: f64) -> f64 {
    let scheme = QuadratureScheme {
        rel_tol: 1e-6,
        max_refinements: 6,
        ..Default::default()
    };
    let clip = |_: &[f64]| Some((0.0, r));
    match quadrature::integrate_rays_adaptive(center, clip, |y, _| t.value(y), false, &scheme) {
        Ok(q) => q.value,
        Err(Error::NonConvergent { value, .. }) => value,
        Err(_) => f64::NAN,
    }
}

/// Memoised ball masses keyed by exact `(center, r)`.
pub struct BallMassTable {
    weight: Weight,
    cache: Mutex<HashMap<(Vec<u64>, u64), f64>>,
}

impl BallMassTable {
    pub fn new(weight: Weight) -> Self {
        BallMassTable {
            weight,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn mass(&self, center: &[f64], r: f64) -> Result<f64> {
        let key = (center.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), r.to_bits());
        if let Some(v) = self.cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(*v);
        }
        let v = self.weight.ball_mass(center, r)?;
        self.cache.lock().unwrap_or_else(|e| e.into_inner()).insert(key, v);
        Ok(v)
    }

    /// `r -> w(B(center, r))` over a radius set.
    pub fn profile(&self, center: &[f64], radii: &[f64]) -> Result<Vec<f64>> {
        radii.iter().map(|&r| self.mass(center, r)).collect()
    }

    pub fn len(&self) -> usize {
        self.cache.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn ensure_samples(centers: &[Vec<f64>], radii: &[f64]) -> Result<()> {
    if centers.is_empty() {
        return Err(Error::EmptySamples("centers"));
    }
    if radii.is_empty() {
        return Err(Error::EmptySamples("radii"));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::NonPositiveRadius(*r));
    }
    Ok(())
}

/// Empirical lower bound for `[w]_{A1}`: the largest sampled
/// `(w(B)/|B|) / inf_B w`. Returns `+inf` when a sampled infimum is zero.
pub fn estimate_a1(w: &Weight, centers: &[Vec<f64>], radii: &[f64]) -> Result<f64> {
    ensure_samples(centers, radii)?;
    let n = w.dim();
    let mut best: f64 = 0.0;
    for c in centers {
        ensure_dim(n, c.len())?;
        for &r in radii {
            let avg = w.ball_mass_unchecked(c, r) / (ball_volume(n) * r.powi(n as i32));
            let inf = w.sampled_inf(c, r);
            if !(inf > 0.0) {
                return Ok(f64::INFINITY);
            }
            best = best.max(avg / inf);
        }
    }
    Ok(best)
}

/// Largest sampled `w(B(x, 2r)) / w(B(x, r))`.
pub fn estimate_doubling(w: &Weight, centers: &[Vec<f64>], radii: &[f64]) -> Result<f64> {
    ensure_samples(centers, radii)?;
    let mut best: f64 = 0.0;
    for c in centers {
        ensure_dim(w.dim(), c.len())?;
        for &r in radii {
            let small = w.ball_mass_unchecked(c, r);
            if !(small > 0.0) {
                return Err(Error::ZeroBallMass(r));
            }
            best = best.max(w.ball_mass_unchecked(c, 2.0 * r) / small);
        }
    }
    Ok(best)
}

/// Smallest sampled `w(B(x, r)) / r^d`.
pub fn check_lower_ahlfors(w: &Weight, d: f64, centers: &[Vec<f64>], radii: &[f64]) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain {
            name: "d",
            value: d,
            expected: "d > 0",
        });
    }
    ensure_samples(centers, radii)?;
    let mut worst = f64::INFINITY;
    for c in centers {
        ensure_dim(w.dim(), c.len())?;
        for &r in radii {
            worst = worst.min(w.ball_mass_unchecked(c, r) / r.powf(d));
        }
    }
    Ok(worst)
}

/// Per-sample ratios `w(B(x, r)) / r^d`, in `centers x radii` order.
pub fn lower_ahlfors_ratios(w: &Weight, d: f64, centers: &[Vec<f64>], radii: &[f64]) -> Result<Vec<f64>> {
    ensure_samples(centers, radii)?;
    let mut out = Vec::with_capacity(centers.len() * radii.len());
    for c in centers {
        ensure_dim(w.dim(), c.len())?;
        for &r in radii {
            out.push(w.ball_mass_unchecked(c, r) / r.powf(d));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn constant_ball_mass() {
        for n in 1..=3 {
            let w = Weight::unit(n);
            let v = w.ball_mass(&vec![0.7; n], 1.5).unwrap();
            assert_relative_eq!(v, ball_volume(n) * 1.5f64.powi(n as i32), max_relative = 1e-14);
        }
        assert!(matches!(Weight::unit(2).ball_mass(&[0.0, 0.0], 0.0), Err(Error::NonPositiveRadius(_))));
    }

    #[test]
    fn power_mass_at_pole() {
        for n in 1..=3 {
            for beta in [0.25, 0.5, n as f64 - 0.5] {
                let w = Weight::radial_power(&vec![0.2; n], beta).unwrap();
                let v = w.ball_mass(&vec![0.2; n], 0.8).unwrap();
                let nb = n as f64 - beta;
                assert_relative_eq!(v, sphere_measure(n) * 0.8f64.powf(nb) / nb, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn one_dimensional_counterexample_mass() {
        let w = Weight::radial_power(&[0.0], 0.5).unwrap();
        for (x, r) in [(3.0, 1.0), (10.0, 2.5), (1.5, 1.4999)] {
            let v = w.ball_mass(&[x], r).unwrap();
            assert_relative_eq!(v, 2.0 * ((x + r).sqrt() - (x - r).sqrt()), max_relative = 1e-13);
        }
    }

    // scipy quad in polar coordinates about the pole, see tools/oracles.py
    const ORACLE_MASS_07: f64 = 2.3284113449405273;
    const ORACLE_MASS_02: f64 = 0.21147687264761197;

    #[test]
    fn off_pole_mass_matches_oracle() {
        let w = Weight::radial_power(&[0.0, 0.0], 0.5).unwrap();
        assert_relative_eq!(w.ball_mass(&[0.3, 0.2], 0.7).unwrap(), ORACLE_MASS_07, max_relative = 1e-9);
        assert_relative_eq!(w.ball_mass(&[0.3, 0.2], 0.2).unwrap(), ORACLE_MASS_02, max_relative = 1e-9);
    }

    #[test]
    fn off_pole_mass_matches_quadrature_3d() {
        // scipy nquad in spherical coordinates about the ball centre
        let w = Weight::radial_power(&[0.0, 0.0, 0.0], 1.0).unwrap();
        let c = [0.3, 0.2, -0.1];
        assert_relative_eq!(w.ball_mass(&c, 0.5).unwrap(), 1.2775810020487168, max_relative = 1e-7);
        assert_relative_eq!(w.ball_mass(&c, 0.9).unwrap(), 4.796164774069066, max_relative = 1e-7);
    }

    #[test]
    fn power_plus_one_dominates_one() {
        let w = Weight::power_plus_one(&[0.0, 0.0], 0.5).unwrap();
        for p in sampling::halton_in_cube(&[0.0, 0.0], 10.0, 500) {
            assert!(w.value(&p[..2]) >= 1.0);
        }
        let m = w.ball_mass(&[0.3, 0.2], 0.7).unwrap();
        assert_relative_eq!(m, ORACLE_MASS_07 + PI * 0.49, max_relative = 1e-9);
    }

    #[test]
    fn scaling_commutes_with_mass() {
        let w = Weight::radial_power(&[0.0, 0.0], 0.5).unwrap();
        let w2 = w.scaled(2.0);
        w2.validate().unwrap();
        assert_eq!(w2.pole(), Some(&[0.0, 0.0][..]));
        assert_eq!(w2.ball_mass(&[0.3, 0.2], 0.7).unwrap(), 2.0 * w.ball_mass(&[0.3, 0.2], 0.7).unwrap());
        assert_eq!(w2.value(&[1.0, 0.0]), 2.0);
    }

    #[test]
    fn validation() {
        assert!(Weight::radial_power(&[0.0, 0.0], 2.0).is_err());
        assert!(Weight::radial_power(&[0.0], -0.1).is_err());
        assert!(Weight::Constant { dim: 2, value: 0.0 }.validate().is_err());
        assert!(Weight::Constant { dim: 4, value: 1.0 }.validate().is_err());
    }

    #[test]
    fn a1_of_constant_is_one() {
        let w = Weight::Constant { dim: 2, value: 3.0 };
        let centers = vec![vec![0.0, 0.0], vec![1.0, -2.0]];
        let v = estimate_a1(&w, &centers, &[0.1, 1.0, 10.0]).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn a1_of_power_at_pole_matches_dense_grid() {
        // dense-grid oracle: avg over [-r, r] of |x|^{-1/2}, over min on the grid
        let w = Weight::radial_power(&[0.0], 0.5).unwrap();
        for r in [0.5, 2.0] {
            let m = 200_000;
            let h = 2.0 * r / m as f64;
            let mut s = 0.0;
            let mut mn = f64::INFINITY;
            for i in 0..m {
                let x: f64 = -r + (i as f64 + 0.5) * h;
                s += x.abs().powf(-0.5) * h;
                mn = mn.min((-r + i as f64 * h).abs().max(1e-300).powf(-0.5));
            }
            let oracle = s / (2.0 * r) / mn;
            let v = estimate_a1(&w, &[vec![0.0]], &[r]).unwrap();
            assert_relative_eq!(v, oracle, max_relative = 1e-3);
        }
    }

    #[test]
    fn doubling_of_lebesgue() {
        for n in 1..=3 {
            let v = estimate_doubling(&Weight::unit(n), &[vec![0.0; n]], &[0.1, 1.0]).unwrap();
            assert_relative_eq!(v, 2f64.powi(n as i32), max_relative = 1e-12);
        }
    }

    #[test]
    fn doubling_bounded_by_a1() {
        let w = Weight::radial_power(&[0.0], 0.5).unwrap();
        let centers: Vec<Vec<f64>> = [-2.0, -0.3, 0.0, 0.1, 1.0, 4.0].iter().map(|c| vec![*c]).collect();
        let radii = geom::log_space(0.01, 10.0, 13);
        let two_r: Vec<f64> = radii.iter().map(|r| 2.0 * r).collect();
        let a1 = estimate_a1(&w, &centers, &two_r).unwrap();
        let d = estimate_doubling(&w, &centers, &radii).unwrap();
        assert!(d.is_finite());
        assert!(d <= 2.0 * a1 * (1.0 + 1e-9), "{d} vs {a1}");
    }

    #[test]
    fn a1_scaling_bound() {
        let w = Weight::power_plus_one(&[0.0, 0.0], 0.5).unwrap();
        let centers = vec![vec![0.0, 0.0], vec![0.3, 0.2], vec![-1.0, 0.5]];
        let radii = geom::log_space(0.05, 2.0, 6);
        let big: Vec<f64> = radii.iter().flat_map(|r| [*r, 2.0 * r, 4.0 * r, 8.0 * r]).collect();
        let a1 = estimate_a1(&w, &centers, &big).unwrap();
        for c in &centers {
            for &r in &radii {
                for lam in [2.0, 4.0, 8.0] {
                    let lhs = w.ball_mass(c, lam * r).unwrap();
                    let rhs = lam * lam * a1 * w.ball_mass(c, r).unwrap();
                    assert!(lhs <= rhs * (1.0 + 1e-9), "c={c:?} r={r} lam={lam}");
                }
            }
        }
    }

    #[test]
    fn lower_ahlfors_constant_weight() {
        let v = check_lower_ahlfors(&Weight::unit(2), 2.0, &[vec![1.0, 1.0]], &[0.1, 1.0, 7.0]).unwrap();
        assert_relative_eq!(v, PI, max_relative = 1e-12);
        assert!(check_lower_ahlfors(&Weight::unit(2), 0.0, &[vec![1.0, 1.0]], &[1.0]).is_err());
    }

    #[test]
    fn lower_ahlfors_power_law_at_pole() {
        let w = Weight::radial_power(&[0.0, 0.0], 0.5).unwrap();
        let ratios = lower_ahlfors_ratios(&w, 1.5, &[vec![0.0, 0.0]], &geom::log_space(1e-3, 1e3, 13)).unwrap();
        for r in ratios {
            assert_relative_eq!(r, 2.0 * PI / 1.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn lower_ahlfors_counterexample_decays() {
        let w = Weight::radial_power(&[0.0], 0.5).unwrap();
        let centers: Vec<Vec<f64>> = (1..=12).map(|k| vec![2f64.powi(k)]).collect();
        let ratios = lower_ahlfors_ratios(&w, 1.0, &centers, &[1.0]).unwrap();
        for (k, r) in ratios.iter().enumerate() {
            let x = 2f64.powi(k as i32 + 1);
            assert_relative_eq!(*r, 4.0 / ((x + 1.0).sqrt() + (x - 1.0).sqrt()), max_relative = 1e-12);
        }
        assert!(ratios.windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn tabulated_weight_interpolates_and_integrates() {
        let t = TabulatedWeight::from_fn(vec![-2.0, -2.0], vec![2.0, 2.0], vec![41, 41], |x| 1.0 + x[0] + 0.5 * x[1] + 3.0);
        assert_relative_eq!(t.value(&[0.35, -0.7]), 4.0 + 0.35 - 0.35, max_relative = 1e-12);
        let w = Weight::Tabulated(t);
        w.validate().unwrap();
        // linear weight: mass = w(center) |B|
        let c = [0.1, 0.2];
        let m = w.ball_mass(&c, 0.5).unwrap();
        assert_relative_eq!(m, w.value(&c) * PI * 0.25, max_relative = 1e-6);
    }

    #[test]
    fn table_memoises() {
        let w = Weight::radial_power(&[0.0, 0.0], 0.5).unwrap();
        let t = BallMassTable::new(w.clone());
        let radii = geom::log_space(1e-3, 1.0, 50);
        let p = t.profile(&[0.3, 0.2], &radii).unwrap();
        assert_eq!(t.len(), 50);
        for (r, v) in radii.iter().zip(&p) {
            assert!((v - w.ball_mass(&[0.3, 0.2], *r).unwrap()).abs() <= 1e-10 * v);
        }
        t.profile(&[0.3, 0.2], &radii).unwrap();
        assert_eq!(t.len(), 50);
    }

    proptest! {
        #[test]
        fn ball_mass_strictly_increasing(
            cx in -2.0f64..2.0, cy in -2.0f64..2.0, beta in 0.0f64..1.9, r0 in 0.01f64..3.0,
        ) {
            for w in [
                Weight::radial_power(&[0.0, 0.0], beta).unwrap(),
                Weight::power_plus_one(&[0.0, 0.0], beta).unwrap(),
            ] {
                let radii = geom::log_space(r0, 4.0 * r0, 24);
                let m: Vec<f64> = radii.iter().map(|r| w.ball_mass(&[cx, cy], *r).unwrap()).collect();
                prop_assert!(m.windows(2).all(|p| p[1] > p[0]), "{:?}", m);
            }
        }

        #[test]
        fn estimators_monotone_in_samples(extra in -3.0f64..3.0, r_extra in 0.01f64..5.0) {
            let w = Weight::power_plus_one(&[0.0, 0.0], 0.7).unwrap();
            let c = vec![vec![0.5, 0.0], vec![0.0, 0.1]];
            let radii = vec![0.1, 1.0];
            let a = estimate_a1(&w, &c, &radii).unwrap();
            let d = estimate_doubling(&w, &c, &radii).unwrap();
            let mut c2 = c.clone();
            c2.push(vec![extra, 0.3]);
            let mut r2 = radii.clone();
            r2.push(r_extra);
            prop_assert!(estimate_a1(&w, &c2, &r2).unwrap() >= a);
            prop_assert!(estimate_doubling(&w, &c2, &r2).unwrap() >= d);
        }

        #[test]
        fn one_dimensional_mass_continuous(x in -3.0f64..3.0, r in 0.01f64..3.0) {
            let w = Weight::radial_power(&[0.0], 0.5).unwrap();
            let a = w.ball_mass(&[x], r).unwrap();
            let b = w.ball_mass(&[x], r * (1.0 + 1e-9)).unwrap();
            prop_assert!(b >= a && b - a < 1e-6);
        }
    }
}

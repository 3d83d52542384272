//! Weighted Lebesgue norms, distribution functions and Lorentz norms.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::functions::{AxisBox, Cube, Field};
use crate::operators::SphereSymbol;
use crate::quadrature::{self, QuadResult, QuadratureScheme};
use crate::sampling;
use crate::special::sphere_measure;
use crate::weights::Weight;

/// Minimum sample count accepted by [`lorentz_norm`].
pub const MIN_SAMPLES: usize = 1000;
/// Default sample count per cube for Lorentz norms.
pub const DEFAULT_SAMPLES: usize = 100_000;

/// `p' = p / (p - 1)`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `(int_domain |f|^p w)^{1/p}`. Weights with a pole are integrated in
/// polar coordinates about it, others with a tensor rule.
pub fn lp_norm<F: Field + ?Sized>(
    f: &F,
    w: &Weight,
    p: f64,
    domain: &AxisBox,
    scheme: &QuadratureScheme,
) -> Result<QuadResult> {
    let n = f.dim();
    ensure_dim(n, w.dim())?;
    ensure_dim(n, domain.dim())?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain {
            name: "p",
            value: p,
            expected: "[1, inf)",
        });
    }
    let g = |y: &[f64]| {
        let v = f.value(y).abs();
        if v == 0.0 {
            0.0
        } else {
            v.powf(p) * w.value(y)
        }
    };
    let q = match w.pole() {
        Some(pole) => quadrature::integrate_rays_adaptive(pole, |d| quadrature::ray_box(pole, d, domain), |y, _| g(y), true, scheme)?,
        None => quadrature::integrate_box_adaptive(domain, scheme, g)?,
    };
    let norm = q.value.max(0.0).powf(1.0 / p);
    let error = if q.value > 0.0 { norm * q.error / (p * q.value) } else { 0.0 };
    Ok(QuadResult {
        value: norm,
        error,
        inner_tail: 0.0,
        levels: q.levels,
    })
}

/// Empirical distribution `lambda -> mu({|f| > lambda})` of weighted samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionFunction {
    /// Distinct positive values of `|f|`, decreasing.
    levels: Vec<f64>,
    /// `mu({|f| >= levels[j]})`, nondecreasing.
    cumulative: Vec<f64>,
    total: f64,
}

impl DistributionFunction {
    pub fn from_samples(values: &[f64], weights: &[f64]) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                got: weights.len(),
            });
        }
        if values.is_empty() {
            return Err(Error::EmptySamples("distribution samples"));
        }
        let mut pairs: Vec<(f64, f64)> = values.iter().map(|v| v.abs()).zip(weights.iter().copied()).collect();
        if pairs.iter().any(|(v, w)| !v.is_finite() || !(*w >= 0.0)) {
            return Err(Error::Invalid("distribution samples must be finite with nonnegative weights".into()));
        }
        let total = pairs.iter().map(|p| p.1).sum();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut levels = Vec::new();
        let mut cumulative: Vec<f64> = Vec::new();
        let mut acc = 0.0;
        for (v, w) in pairs {
            if v == 0.0 {
                break;
            }
            acc += w;
            if levels.last() == Some(&v) {
                *cumulative.last_mut().expect("paired with levels") = acc;
            } else {
                levels.push(v);
                cumulative.push(acc);
            }
        }
        Ok(DistributionFunction {
            levels,
            cumulative,
            total,
        })
    }

    /// `mu({|f| > lambda})`.
    pub fn measure_above(&self, lambda: f64) -> f64 {
        if lambda < 0.0 {
            return self.total;
        }
        // number of levels strictly greater than lambda
        let k = self.levels.partition_point(|v| *v > lambda);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    pub fn total_measure(&self) -> f64 {
        self.total
    }

    /// `(p int_0^inf t^q mu(t)^{q/p} dt / t)^{1/q}`, summed exactly over the
    /// steps.
    pub fn lorentz(&self, p: f64, q: f64) -> f64 {
        if q.is_infinite() {
            return self.weak(p);
        }
        let mut acc = 0.0;
        for (j, (&v, &m)) in self.levels.iter().zip(&self.cumulative).enumerate() {
            let next = self.levels.get(j + 1).copied().unwrap_or(0.0);
            acc += m.powf(q / p) * (v.powf(q) - next.powf(q));
        }
        (p / q * acc).powf(1.0 / q)
    }

    /// `sup_t t mu(t)^{1/p}`, attained as `t` increases to a level.
    pub fn weak(&self, p: f64) -> f64 {
        self.levels
            .iter()
            .zip(&self.cumulative)
            .map(|(v, m)| v * m.powf(1.0 / p))
            .fold(0.0, f64::max)
    }
}

fn check_lorentz_exponents(p: f64, q: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain {
            name: "p",
            value: p,
            expected: "(0, inf)",
        });
    }
    if !(q >= 1.0) {
        return Err(Error::Domain {
            name: "q",
            value: q,
            expected: "[1, inf]",
        });
    }
    Ok(())
}

/// Empirical distribution of `f` on `cube` under `dx / |Q|`, from Halton
/// samples.
pub fn cube_distribution<F: Field + ?Sized>(f: &F, cube: &Cube, samples: usize) -> Result<DistributionFunction> {
    ensure_dim(f.dim(), cube.center.len())?;
    if samples < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            min: MIN_SAMPLES,
            got: samples,
        });
    }
    let n = f.dim();
    let pts = sampling::halton_in_cube(&cube.center, cube.side / 2.0, samples);
    let values: Vec<f64> = pts.iter().map(|y| f.value(&y[..n])).collect();
    let w = vec![1.0 / samples as f64; samples];
    DistributionFunction::from_samples(&values, &w)
}

/// Normalized `L^{p,q}` norm of `f` on `Q`; `q = inf` gives the weak norm.
pub fn lorentz_norm<F: Field + ?Sized>(f: &F, p: f64, q: f64, cube: &Cube, samples: usize) -> Result<f64> {
    check_lorentz_exponents(p, q)?;
    Ok(cube_distribution(f, cube, samples)?.lorentz(p, q))
}

/// `sup_t t sigma({|Omega| > t})^{1/p}` with the exact angular measure.
pub fn sphere_lorentz_weak(omega: &SphereSymbol, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Domain {
            name: "p",
            value: p,
            expected: "(0, inf)",
        });
    }
    omega.validate()?;
    let g = |t: f64| t * omega.distribution(t).powf(1.0 / p);
    if let Some(levels) = omega.jump_levels() {
        return Ok(levels
            .iter()
            .map(|&v| v * omega.distribution(v * (1.0 - 1e-15)).powf(1.0 / p))
            .fold(0.0, f64::max));
    }
    let top = omega.sup();
    if top == 0.0 {
        return Ok(0.0);
    }
    let m = 4096;
    let h = top / m as f64;
    let (k, _) = (1..m).map(|i| (i, g(i as f64 * h))).fold((1, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    // golden-section refinement around the best grid point
    let (mut a, mut b) = ((k as f64 - 1.0) * h, ((k + 1) as f64 * h).min(top));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if g(c) >= g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(g(0.5 * (a + b)).max(g(k as f64 * h)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleInvariance {
    pub p: f64,
    /// `(k, normalized weak norm on B(0, 2^k))` from direct measurement.
    pub values: Vec<(i32, f64)>,
    /// `sup_t t (sigma(t) / sigma(S^{n-1}))^{1/p}`.
    pub closed_form: f64,
    pub max_pairwise_deviation: f64,
    pub max_closed_form_deviation: f64,
    pub pass: bool,
}

/// Relative tolerance of [`ball_lorentz_scale_invariance`].
pub const SCALE_INVARIANCE_TOL: f64 = 1e-3;

const POLAR_CELLS: usize = 1 << 14;
const RADIAL_RINGS: usize = 32;

/// Normalized weak-`L^p` norm of `y -> Omega(y / |y|)` on `B(0, 2^k)` under
/// `dx / |B|`, measured on a polar cell grid of each ball, for every `k`.
pub fn ball_lorentz_scale_invariance(omega: &SphereSymbol, p: f64, k_values: &[i32]) -> Result<ScaleInvariance> {
    omega.validate()?;
    if k_values.is_empty() {
        return Err(Error::EmptySamples("k values"));
    }
    let n = omega.dim;
    let closed_form = sphere_lorentz_weak(omega, p)? / sphere_measure(n).powf(1.0 / p);
    let values: Vec<(i32, f64)> = k_values
        .iter()
        .map(|&k| {
            let dist = ball_distribution(omega, 2f64.powi(k))?;
            Ok((k, dist.weak(p)))
        })
        .collect::<Result<_>>()?;
    let rel = |a: f64, b: f64| {
        let s = a.abs().max(b.abs());
        if s == 0.0 {
            0.0
        } else {
            (a - b).abs() / s
        }
    };
    let mut pair = 0.0f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            pair = pair.max(rel(a.1, b.1));
        }
    }
    let closed = values.iter().map(|v| rel(v.1, closed_form)).fold(0.0, f64::max);
    Ok(ScaleInvariance {
        p,
        values,
        closed_form,
        max_pairwise_deviation: pair,
        max_closed_form_deviation: closed,
        pass: pair <= SCALE_INVARIANCE_TOL && closed <= SCALE_INVARIANCE_TOL,
    })
}

/// Distribution of `Omega(y / |y|)` on `B(0, radius)` under `dx / |B|`, from
/// polar cells with exact areas classified at their midpoints.
fn ball_distribution(omega: &SphereSymbol, radius: f64) -> Result<DistributionFunction> {
    let n = omega.dim;
    let mut values = Vec::new();
    let mut areas = Vec::new();
    let rings: Vec<(f64, f64)> = (0..RADIAL_RINGS)
        .map(|i| {
            let a = radius * i as f64 / RADIAL_RINGS as f64;
            let b = radius * (i + 1) as f64 / RADIAL_RINGS as f64;
            (0.5 * (a + b), (b.powi(n as i32) - a.powi(n as i32)) / n as f64)
        })
        .collect();
    let volume: f64 = rings.iter().map(|r| r.1).sum::<f64>() * sphere_measure(n);
    let mut push = |dir: [f64; 3], dsigma: f64| {
        for &(mid, radial) in &rings {
            let y = [dir[0] * mid, dir[1] * mid, dir[2] * mid];
            values.push(omega.homogeneous(&y[..n]));
            areas.push(dsigma * radial / volume);
        }
    };
    match n {
        1 => {
            push([1.0, 0.0, 0.0], 1.0);
            push([-1.0, 0.0, 0.0], 1.0);
        }
        2 => {
            let h = TAU / POLAR_CELLS as f64;
            for i in 0..POLAR_CELLS {
                let phi = (i as f64 + 0.5) * h;
                push([phi.cos(), phi.sin(), 0.0], h);
            }
        }
        _ => {
            let bands = 1 << 8;
            let az = 1 << 9;
            let dz = 2.0 / bands as f64;
            let dphi = TAU / az as f64;
            for i in 0..bands {
                let z = -1.0 + (i as f64 + 0.5) * dz;
                let s = (1.0 - z * z).sqrt();
                for j in 0..az {
                    let phi = (j as f64 + 0.5) * dphi;
                    push([s * phi.cos(), s * phi.sin(), z], dz * dphi);
                }
            }
        }
    }
    DistributionFunction::from_samples(&values, &areas)
}

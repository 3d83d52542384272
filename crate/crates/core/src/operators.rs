//! Pointwise evaluation of the potential operators, the nonlinear fractional
//! derivative, maximal truncations of rough singular integrals and the
//! centred weighted maximal function.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::functions::{AxisBox, Extent, Field, TestFunction};
use crate::geom::{self, Scratch};
use crate::quadrature::{self, integrate_singular, Kernel, QuadResult, QuadratureScheme, Shell, Singularity};
use crate::special::sphere_measure;
use crate::weights::Weight;

/// Multiple of the core radius at which decaying integrands switch to their
/// analytic far-field tail.
pub const FAR_FACTOR: f64 = 1024.0;

fn ensure_alpha(alpha: f64, lo: f64, hi: f64, hi_inclusive: bool) -> Result<()> {
    let ok = alpha > lo && (alpha < hi || (hi_inclusive && alpha == hi));
    if ok {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "alpha",
            value: alpha,
            expected: if hi_inclusive { "(0, n]" } else { "(0, n)" },
        })
    }
}

/// Radial range and far-field data for integrating a field about `x`.
struct Plan {
    shell: Shell,
    /// `(mass, exponent)` of the decaying tail beyond `shell.outer`.
    tail: Option<(f64, f64)>,
}

fn plan(extent: &Extent, x: &[f64], scheme: &QuadratureScheme) -> Plan {
    let d = geom::dist(x, extent.center());
    let s = extent.radius();
    let eps = scheme.inner_cutoff * s;
    match extent {
        Extent::Compact { .. } => {
            let outer = scheme.outer_radius(d + s);
            if d > s {
                Plan {
                    shell: Shell::annulus(d - s, outer),
                    tail: None,
                }
            } else {
                Plan {
                    shell: Shell::punctured(eps, outer),
                    tail: None,
                }
            }
        }
        Extent::Decaying { mass, exponent, .. } => Plan {
            shell: Shell::punctured(eps, scheme.outer_radius(d + FAR_FACTOR * s)),
            tail: Some((*mass, *exponent)),
        },
    }
}

/// Evaluation points farther than this many support radii from the centre
/// integrate over the support box instead of in polar coordinates.
const FAR_POINT: f64 = 2.0;

/// Support box of a compact field when `x` is far enough from it that the
/// kernel is smooth over the support.
fn far_support_box(extent: &Extent, x: &[f64]) -> Option<AxisBox> {
    let Extent::Compact { center, radius } = extent else {
        return None;
    };
    (geom::dist(x, center) > FAR_POINT * radius).then(|| AxisBox {
        lower: center.iter().map(|c| c - radius).collect(),
        upper: center.iter().map(|c| c + radius).collect(),
    })
}

struct RieszKernel<'a, F: ?Sized> {
    f: &'a F,
    n: usize,
    alpha: f64,
    tail: Option<(f64, f64)>,
}

impl<F: Field + ?Sized> Kernel for RieszKernel<'_, F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn singularity(&self) -> Singularity {
        Singularity::power(self.n as f64 - self.alpha)
    }
    fn radial(&self, r: f64) -> f64 {
        r.powf(self.alpha - self.n as f64)
    }
    fn eval(&self, y: &[f64], _r: f64, _d: &[f64]) -> f64 {
        self.f.value(y)
    }
    fn outer_tail(&self, r_max: f64) -> f64 {
        match self.tail {
            Some((m, p)) => m * sphere_measure(self.n) * r_max.powf(self.alpha - p) / (p - self.alpha),
            None => 0.0,
        }
    }
}

/// `I_alpha f(x) = int f(y) |x - y|^{alpha - n} dy`.
pub fn riesz_potential<F: Field + ?Sized>(f: &F, alpha: f64, x: &[f64], scheme: &QuadratureScheme) -> Result<QuadResult> {
    let n = f.dim();
    ensure_dim(n, x.len())?;
    ensure_alpha(alpha, 0.0, n as f64, false)?;
    let extent = f.extent();
    if let Some(b) = far_support_box(&extent, x) {
        return quadrature::integrate_box_adaptive(&b, scheme, |y| f.value(y) * geom::dist(x, y).powf(alpha - n as f64));
    }
    let p = plan(&extent, x, scheme);
    let k = RieszKernel {
        f,
        n,
        alpha,
        tail: p.tail,
    };
    integrate_singular(&k, x, p.shell, scheme)
}

struct FracKernel<'a, F: ?Sized> {
    f: &'a F,
    fx: f64,
    n: usize,
    alpha: f64,
}

impl<F: Field + ?Sized> Kernel for FracKernel<'_, F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn singularity(&self) -> Singularity {
        // |f(x) - f(y)| <= L |x - y|
        Singularity {
            exponent: self.n as f64 + self.alpha,
            cancellation: 1.0,
        }
    }
    fn radial(&self, r: f64) -> f64 {
        r.powf(-(self.n as f64) - self.alpha)
    }
    fn eval(&self, y: &[f64], _r: f64, _d: &[f64]) -> f64 {
        (self.fx - self.f.value(y)).abs()
    }
    fn outer_tail(&self, r_max: f64) -> f64 {
        // beyond the support only |f(x)| remains
        self.fx.abs() * sphere_measure(self.n) * r_max.powf(-self.alpha) / self.alpha
    }
}

fn frac_shell(f: &TestFunction, x: &[f64], scheme: &QuadratureScheme) -> (Shell, f64) {
    let d = geom::dist(x, &f.center);
    let fx = f.eval(x);
    let shell = if d >= f.scale && fx == 0.0 {
        Shell::annulus((d - f.scale).max(scheme.inner_cutoff * f.scale), d + f.scale)
    } else {
        Shell::punctured(scheme.inner_cutoff * f.scale, d + f.scale)
    };
    (shell, fx)
}

/// `D^alpha f(x) = int |f(x) - f(y)| / |x - y|^{n + alpha} dy`, `0 < alpha < 1`.
pub fn frac_derivative(f: &TestFunction, alpha: f64, x: &[f64], scheme: &QuadratureScheme) -> Result<QuadResult> {
    let n = f.dimension();
    ensure_dim(n, x.len())?;
    ensure_alpha(alpha, 0.0, 1.0, false)?;
    if f.amplitude == 0.0 {
        return Ok(QuadResult::ZERO);
    }
    if let Some(b) = far_support_box(&f.extent(), x) {
        return quadrature::integrate_box_adaptive(&b, scheme, |y| {
            f.eval(y).abs() * geom::dist(x, y).powf(-(n as f64) - alpha)
        });
    }
    let (shell, fx) = frac_shell(f, x, scheme);
    integrate_singular(&FracKernel { f, fx, n, alpha }, x, shell, scheme)
}

fn frac_derivative_fixed(f: &TestFunction, alpha: f64, x: &[f64], scheme: &QuadratureScheme) -> f64 {
    let (shell, fx) = frac_shell(f, x, scheme);
    let k = FracKernel {
        f,
        fx,
        n: f.dimension(),
        alpha,
    };
    quadrature::integrate_fixed(&k, x, shell, scheme, 0).map(|q| q.value).unwrap_or(f64::NAN)
}

/// Far-field samples of `D^alpha f` on a log-polar grid about the support
/// centre.
#[derive(Debug)]
struct FarTable {
    r0: f64,
    /// log2 step between radial layers.
    step: f64,
    layers: usize,
    /// n = 2: azimuth count; n = 3: azimuth count (polar handled by `polar`).
    azimuths: usize,
    polar: usize,
    values: Vec<f64>,
}

/// `D^alpha f` as a field: multilinear interpolation of precomputed values
/// on a grid over `[c - 2s, c + 2s]^n`, a log-polar table out to
/// `FAR_FACTOR * s`, and the `mass |y - c|^{-n - alpha}` asymptote beyond.
#[derive(Debug)]
pub struct FracDerivativeField {
    f: TestFunction,
    alpha: f64,
    lower: Scratch,
    h: f64,
    m: usize,
    near: Vec<f64>,
    far: FarTable,
    mass: f64,
}

const FAR_LAYERS_PER_OCTAVE: usize = 8;

impl FracDerivativeField {
    pub fn build(f: &TestFunction, alpha: f64, scheme: &QuadratureScheme) -> Result<Self> {
        f.validate()?;
        ensure_alpha(alpha, 0.0, 1.0, false)?;
        let n = f.dimension();
        let s = f.scale;
        let m = scheme.grid_points.max(4);
        let half = 2.0 * s;
        let h = 2.0 * half / (m - 1) as f64;
        let mut lower = [0.0; 3];
        for i in 0..n {
            lower[i] = f.center[i] - half;
        }
        let total = m.pow(n as u32);
        let near: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let mut x = [0.0; 3];
                let mut rem = flat;
                for i in (0..n).rev() {
                    x[i] = lower[i] + (rem % m) as f64 * h;
                    rem /= m;
                }
                frac_derivative_fixed(f, alpha, &x[..n], scheme)
            })
            .collect();
        if near.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonConvergent {
                value: f64::NAN,
                error: f64::NAN,
            });
        }

        // support quadrature nodes for the far field
        let per_axis = if n == 3 { 2 } else { 4 };
        let nodes = support_nodes(f, per_axis, 8);
        let mass: f64 = nodes.iter().map(|(_, w)| w).sum();
        let far_value = |y: &[f64]| -> f64 {
            let mut acc = 0.0;
            for (z, w) in &nodes {
                acc += w * geom::dist(y, &z[..n]).powf(-(n as f64) - alpha);
            }
            acc
        };
        let octaves = (FAR_FACTOR / 2.0).log2().ceil() as usize;
        let layers = octaves * FAR_LAYERS_PER_OCTAVE + 1;
        let (azimuths, polar) = match n {
            1 => (2, 1),
            2 => (128, 1),
            _ => (64, 33),
        };
        let step = 1.0 / FAR_LAYERS_PER_OCTAVE as f64;
        let dirs: Vec<Scratch> = (0..polar)
            .flat_map(|j| (0..azimuths).map(move |a| (j, a)))
            .map(|(j, a)| far_direction(n, azimuths, polar, j, a))
            .collect();
        let values: Vec<f64> = (0..layers)
            .into_par_iter()
            .flat_map_iter(|k| {
                let r = half * 2f64.powf(k as f64 * step);
                dirs.iter()
                    .map(|d| {
                        let mut y = [0.0; 3];
                        geom::offset(&mut y, &f.center, r, &d[..n]);
                        far_value(&y[..n])
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(FracDerivativeField {
            f: f.clone(),
            alpha,
            lower,
            h,
            m,
            near,
            far: FarTable {
                r0: half,
                step,
                layers,
                azimuths,
                polar,
                values,
            },
            mass,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn function(&self) -> &TestFunction {
        &self.f
    }

    /// `int |f|`, the coefficient of the far-field asymptote.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    fn near_value(&self, x: &[f64]) -> Option<f64> {
        let n = x.len();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for i in 0..n {
            let t = (x[i] - self.lower[i]) / self.h;
            if !(0.0..=(self.m - 1) as f64).contains(&t) {
                return None;
            }
            let k = (t.floor() as usize).min(self.m - 2);
            base[i] = k;
            frac[i] = t - k as f64;
        }
        Some(multilinear(&self.near, self.m, n, &base, &frac))
    }

    fn far_value(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let c = &self.f.center;
        let r = geom::dist(x, c);
        let t = (r / self.far.r0).log2() / self.far.step;
        let last = (self.far.layers - 1) as f64;
        if t >= last {
            return self.mass * r.powf(-(n as f64) - self.alpha);
        }
        let t = t.max(0.0);
        let k = (t.floor() as usize).min(self.far.layers - 2);
        let ft = t - k as f64;
        let mut u = [0.0; 3];
        for i in 0..n {
            u[i] = (x[i] - c[i]) / r;
        }
        let per_layer = self.far.azimuths * self.far.polar;
        let layer = |k: usize| -> f64 {
            let vals = &self.far.values[k * per_layer..(k + 1) * per_layer];
            match n {
                1 => {
                    if u[0] >= 0.0 {
                        vals[0]
                    } else {
                        vals[1]
                    }
                }
                2 => {
                    let a = self.far.azimuths;
                    let phi = u[1].atan2(u[0]).rem_euclid(std::f64::consts::TAU);
                    let p = phi / std::f64::consts::TAU * a as f64;
                    let j = (p.floor() as usize) % a;
                    let fp = p - p.floor();
                    (1.0 - fp) * vals[j] + fp * vals[(j + 1) % a]
                }
                _ => {
                    let a = self.far.azimuths;
                    let np = self.far.polar;
                    let z = u[2].clamp(-1.0, 1.0);
                    let q = (z + 1.0) / 2.0 * (np - 1) as f64;
                    let i0 = (q.floor() as usize).min(np - 2);
                    let fq = q - i0 as f64;
                    let phi = u[1].atan2(u[0]).rem_euclid(std::f64::consts::TAU);
                    let p = phi / std::f64::consts::TAU * a as f64;
                    let j = (p.floor() as usize) % a;
                    let fp = p - p.floor();
                    let at = |i: usize, j: usize| vals[i * a + j];
                    let j1 = (j + 1) % a;
                    (1.0 - fq) * ((1.0 - fp) * at(i0, j) + fp * at(i0, j1))
                        + fq * ((1.0 - fp) * at(i0 + 1, j) + fp * at(i0 + 1, j1))
                }
            }
        };
        (1.0 - ft) * layer(k) + ft * layer(k + 1)
    }
}

fn far_direction(n: usize, azimuths: usize, polar: usize, j: usize, a: usize) -> Scratch {
    match n {
        1 => {
            if a == 0 {
                [1.0, 0.0, 0.0]
            } else {
                [-1.0, 0.0, 0.0]
            }
        }
        2 => {
            let phi = std::f64::consts::TAU * a as f64 / azimuths as f64;
            [phi.cos(), phi.sin(), 0.0]
        }
        _ => {
            let z = -1.0 + 2.0 * j as f64 / (polar - 1) as f64;
            let s = (1.0 - z * z).max(0.0).sqrt();
            let phi = std::f64::consts::TAU * a as f64 / azimuths as f64;
            [s * phi.cos(), s * phi.sin(), z]
        }
    }
}

fn multilinear(values: &[f64], m: usize, n: usize, base: &[usize; 3], frac: &[f64; 3]) -> f64 {
    let mut acc = 0.0;
    for corner in 0..(1usize << n) {
        let mut w = 1.0;
        let mut flat = 0usize;
        for i in 0..n {
            let bit = (corner >> i) & 1;
            w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
            flat = flat * m + base[i] + bit;
        }
        if w != 0.0 {
            acc += w * values[flat];
        }
    }
    acc
}

/// Tensor Gauss nodes over the support box carrying weights `|f| dy`.
fn support_nodes(f: &TestFunction, panels: usize, degree: usize) -> Vec<(Scratch, f64)> {
    let n = f.dimension();
    let rule = quadrature::gauss_legendre(degree);
    let b = f.support_box();
    let axis: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|i| {
            let h = (b.upper[i] - b.lower[i]) / panels as f64;
            (0..panels)
                .flat_map(|p| {
                    let mid = b.lower[i] + (p as f64 + 0.5) * h;
                    rule.iter().map(move |&(t, w)| (mid + 0.5 * h * t, 0.5 * h * w))
                })
                .collect()
        })
        .collect();
    let k = axis[0].len();
    let mut out = Vec::new();
    for flat in 0..k.pow(n as u32) {
        let mut y = [0.0; 3];
        let mut w = 1.0;
        let mut rem = flat;
        for i in (0..n).rev() {
            let (v, wi) = axis[i][rem % k];
            y[i] = v;
            w *= wi;
            rem /= k;
        }
        let fv = f.eval(&y[..n]).abs();
        if fv > 0.0 {
            out.push((y, w * fv));
        }
    }
    out
}

impl Field for FracDerivativeField {
    fn dim(&self) -> usize {
        self.f.dimension()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.near_value(x).unwrap_or_else(|| self.far_value(x))
    }
    fn extent(&self) -> Extent {
        Extent::Decaying {
            center: self.f.center.clone(),
            radius: 2.0 * self.f.scale,
            mass: self.mass,
            exponent: self.f.dimension() as f64 + self.alpha,
        }
    }
}

type FieldKey = (String, u64, String);

static FRAC_CACHE: Lazy<Mutex<HashMap<FieldKey, Arc<FracDerivativeField>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Shared, cached [`FracDerivativeField`] for `(f, alpha, scheme)`.
pub fn frac_derivative_field(f: &TestFunction, alpha: f64, scheme: &QuadratureScheme) -> Result<Arc<FracDerivativeField>> {
    let key = (
        serde_json::to_string(f).map_err(|e| Error::Invalid(e.to_string()))?,
        alpha.to_bits(),
        serde_json::to_string(scheme).map_err(|e| Error::Invalid(e.to_string()))?,
    );
    if let Some(v) = FRAC_CACHE.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(v.clone());
    }
    let field = Arc::new(FracDerivativeField::build(f, alpha, scheme)?);
    FRAC_CACHE
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .insert(key, field.clone());
    Ok(field)
}

/// Partition of unity around a weight pole that is not the evaluation
/// point: `chi(y) = smooth_cutoff(|y - pole| / rho)` with `rho = |x - pole| / 2`.
#[derive(Clone, Copy)]
struct PoleSplit<'a> {
    pole: &'a [f64],
    rho: f64,
}

impl PoleSplit<'_> {
    fn chi(&self, y: &[f64]) -> f64 {
        geom::smooth_cutoff(geom::dist(y, self.pole) / self.rho)
    }
}

fn pole_split<'a>(w: &'a Weight, x: &[f64]) -> Option<PoleSplit<'a>> {
    let pole = w.pole()?;
    let d = geom::dist(x, pole);
    (d > 0.0).then_some(PoleSplit { pole, rho: d / 2.0 })
}

/// Coefficient `kappa` in `w(y) / w(B(x, |x - y|)) ~ kappa / (sigma |x - y|^n)`
/// far from the origin.
fn far_ratio(w: &Weight, n: usize) -> f64 {
    match w {
        Weight::RadialPower { exponent, .. } => n as f64 - exponent,
        Weight::Scaled { inner, .. } => far_ratio(inner, n),
        _ => n as f64,
    }
}

struct TwKernel<'a, F: ?Sized> {
    f: &'a F,
    w: &'a Weight,
    x: &'a [f64],
    n: usize,
    alpha: f64,
    split: Option<PoleSplit<'a>>,
    tail: Option<(f64, f64)>,
}

impl<F: Field + ?Sized> Kernel for TwKernel<'_, F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn singularity(&self) -> Singularity {
        Singularity::power(self.n as f64 - self.alpha)
    }
    fn radial(&self, r: f64) -> f64 {
        r.powf(self.alpha) / self.w.ball_mass_unchecked(self.x, r)
    }
    fn eval(&self, y: &[f64], _r: f64, _d: &[f64]) -> f64 {
        let fy = self.f.value(y);
        if fy == 0.0 {
            return 0.0;
        }
        let cut = self.split.map_or(1.0, |s| 1.0 - s.chi(y));
        if cut == 0.0 {
            return 0.0;
        }
        fy * self.w.value(y) * cut
    }
    fn outer_tail(&self, r_max: f64) -> f64 {
        match self.tail {
            Some((m, p)) => far_ratio(self.w, self.n) * m * r_max.powf(self.alpha - p) / (p - self.alpha),
            None => 0.0,
        }
    }
}

/// `r -> w(B(x, r))` linearly interpolated on a dense uniform grid.
struct MassTable {
    lo: f64,
    h: f64,
    values: Vec<f64>,
}

impl MassTable {
    fn new(w: &Weight, x: &[f64], lo: f64, hi: f64, count: usize) -> Self {
        let h = (hi - lo) / (count - 1) as f64;
        let values = (0..count).map(|i| w.ball_mass_unchecked(x, lo + i as f64 * h)).collect();
        MassTable { lo, h, values }
    }

    fn at(&self, r: f64) -> f64 {
        let t = ((r - self.lo) / self.h).clamp(0.0, (self.values.len() - 1) as f64);
        let k = (t.floor() as usize).min(self.values.len() - 2);
        let f = t - k as f64;
        (1.0 - f) * self.values[k] + f * self.values[k + 1]
    }
}

const POLE_TABLE_POINTS: usize = 4097;

/// `T_{w,alpha} f(x) = int |x - y|^alpha f(y) w(y) / w(B(x, |x - y|)) dy`;
/// `alpha = 1` is `T_w`.
pub fn potential_tw<F: Field + ?Sized>(
    f: &F,
    w: &Weight,
    alpha: f64,
    x: &[f64],
    scheme: &QuadratureScheme,
) -> Result<QuadResult> {
    tw_window(f, w, alpha, x, None, scheme)
}

/// The part of [`potential_tw`] over `|x - y| < radius`.
pub fn potential_tw_near<F: Field + ?Sized>(
    f: &F,
    w: &Weight,
    alpha: f64,
    x: &[f64],
    radius: f64,
    scheme: &QuadratureScheme,
) -> Result<QuadResult> {
    if !(radius > 0.0) {
        return Err(Error::NonPositiveRadius(radius));
    }
    tw_window(f, w, alpha, x, Some(radius), scheme)
}

fn tw_window<F: Field + ?Sized>(
    f: &F,
    w: &Weight,
    alpha: f64,
    x: &[f64],
    limit: Option<f64>,
    scheme: &QuadratureScheme,
) -> Result<QuadResult> {
    let n = f.dim();
    ensure_dim(n, x.len())?;
    ensure_dim(n, w.dim())?;
    ensure_alpha(alpha, 0.0, n as f64, true)?;
    let mut p = plan(&f.extent(), x, scheme);
    if let Some(r) = limit {
        if r < p.shell.outer {
            p.shell.outer = r;
            p.tail = None;
        }
    }
    let split = pole_split(w, x);
    let k = TwKernel {
        f,
        w,
        x,
        n,
        alpha,
        split,
        tail: p.tail,
    };
    let mut out = if p.shell.inner < p.shell.outer {
        integrate_singular(&k, x, p.shell, scheme)?
    } else {
        QuadResult::ZERO
    };
    if let Some(s) = split {
        let reach = limit.unwrap_or(f64::INFINITY);
        if reach <= s.rho {
            return Ok(out);
        }
        let table = MassTable::new(w, x, s.rho * 0.999, 3.0 * s.rho * 1.001, POLE_TABLE_POINTS);
        if table.values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::ZeroBallMass(s.rho));
        }
        let clip = |d: &[f64]| -> Option<(f64, f64)> {
            if reach.is_infinite() {
                return Some((0.0, s.rho));
            }
            let (lo, hi) = quadrature::ray_ball(s.pole, d, x, reach)?;
            let hi = hi.min(s.rho);
            (hi > lo).then_some((lo, hi))
        };
        let near = quadrature::integrate_rays_adaptive(
            s.pole,
            clip,
            |y, _| {
                let fy = f.value(y);
                if fy == 0.0 {
                    return 0.0;
                }
                let r = geom::dist(x, y);
                fy * w.value(y) * s.chi(y) * r.powf(alpha) / table.at(r)
            },
            true,
            scheme,
        )?;
        out.value += near.value;
        out.error += near.error;
    }
    Ok(out)
}

/// `int_{B(x, r)} f w`, with the weight pole resolved by the same
/// partition of unity as [`potential_tw`].
pub fn weighted_ball_integral<F: Field + ?Sized>(
    f: &F,
    w: &Weight,
    x: &[f64],
    r: f64,
    scheme: &QuadratureScheme,
    level: Option<usize>,
) -> Result<QuadResult> {
    let n = f.dim();
    ensure_dim(n, x.len())?;
    if !(r > 0.0) {
        return Err(Error::NonPositiveRadius(r));
    }
    let run = |center: &[f64], clip: &dyn Fn(&[f64]) -> Option<(f64, f64)>, g: &dyn Fn(&[f64]) -> f64, singular: bool| {
        match level {
            Some(l) => Ok(QuadResult {
                value: quadrature::integrate_rays(center, clip, |y, _| g(y), singular, scheme, l),
                error: f64::NAN,
                inner_tail: 0.0,
                levels: l,
            }),
            None => quadrature::integrate_rays_adaptive(center, clip, |y, _| g(y), singular, scheme),
        }
    };
    let reach = match f.extent() {
        Extent::Compact { center, radius } => geom::dist(x, &center) + radius,
        Extent::Decaying { .. } => f64::INFINITY,
    };
    let r_eff = r.min(reach);
    match pole_split(w, x) {
        None => {
            let singular = w.pole().is_some();
            run(x, &|_| Some((0.0, r_eff)), &|y| f.value(y) * w.value(y), singular)
        }
        Some(s) => {
            let a = run(
                x,
                &|_| Some((0.0, r_eff)),
                &|y| {
                    let fy = f.value(y);
                    if fy == 0.0 {
                        return 0.0;
                    }
                    fy * w.value(y) * (1.0 - s.chi(y))
                },
                false,
            )?;
            let b = run(
                s.pole,
                &|d| {
                    let (lo, hi) = quadrature::ray_ball(s.pole, d, x, r)?;
                    let hi = hi.min(s.rho);
                    (hi > lo).then_some((lo, hi))
                },
                &|y| {
                    let fy = f.value(y);
                    if fy == 0.0 {
                        return 0.0;
                    }
                    fy * w.value(y) * s.chi(y)
                },
                true,
            )?;
            Ok(QuadResult {
                value: a.value + b.value,
                error: a.error + b.error,
                inner_tail: 0.0,
                levels: a.levels.max(b.levels),
            })
        }
    }
}

/// Log-spaced radii, `per_decade` per decade over `decades` decades ending
/// at `top`.
pub fn radius_grid(top: f64, decades: f64, per_decade: usize) -> Vec<f64> {
    let count = (decades * per_decade as f64).round() as usize + 1;
    geom::log_space(top * 10f64.powf(-decades), top, count)
}

/// Default radius grid for [`maximal_mwc`]: 64 per decade over four decades
/// up to ten support radii.
pub fn default_mwc_radii(scale: f64) -> Vec<f64> {
    radius_grid(10.0 * scale, 4.0, 64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalValue {
    pub value: f64,
    /// Radius (or truncation) attaining the maximum.
    pub argmax: f64,
    pub error: f64,
}

/// `M^c_w f(x) = sup_r w(B(x, r))^{-1} int_{B(x, r)} f w`, discretised over
/// `radii`; a lower bound for the supremum.
pub fn maximal_mwc<F: Field + ?Sized>(
    f: &F,
    w: &Weight,
    x: &[f64],
    radii: &[f64],
    scheme: &QuadratureScheme,
) -> Result<MaximalValue> {
    ensure_dim(f.dim(), x.len())?;
    if radii.is_empty() {
        return Err(Error::EmptySamples("radii"));
    }
    let avgs: Vec<f64> = radii
        .par_iter()
        .map(|&r| {
            let num = weighted_ball_integral(f, w, x, r, scheme, Some(1))?.value;
            Ok(num / w.ball_mass(x, r)?)
        })
        .collect::<Result<_>>()?;
    let (k, _) = avgs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    let r = radii[k];
    let q = weighted_ball_integral(f, w, x, r, scheme, None)?;
    let den = w.ball_mass(x, r)?;
    Ok(MaximalValue {
        value: q.value / den,
        argmax: r,
        error: q.error / den,
    })
}

/// Angular profile of a degree-zero homogeneous symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum SymbolProfile {
    Zero,
    /// `a cos(k theta)`, n = 2.
    CosineHarmonic { k: u32, amplitude: f64 },
    /// `a sign(cos(k theta))`, n = 2.
    SignHarmonic { k: u32, amplitude: f64 },
    /// `sum_j c_j theta_1^{2j+1}` on the sphere, any n.
    OddPolynomial { coeffs: Vec<f64> },
    /// Piecewise constant on equal angular cells of `[0, 2 pi)`, n = 2.
    Tabulated { values: Vec<f64> },
}

/// Degree-zero homogeneous, zero-average symbol on `S^{n-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereSymbol {
    pub dim: usize,
    #[serde(flatten)]
    pub profile: SymbolProfile,
}

impl SphereSymbol {
    pub fn new(dim: usize, profile: SymbolProfile) -> Result<Self> {
        let s = SphereSymbol { dim, profile };
        s.validate()?;
        Ok(s)
    }

    pub fn zero(dim: usize) -> Self {
        SphereSymbol {
            dim,
            profile: SymbolProfile::Zero,
        }
    }

    pub fn cosine(k: u32) -> Self {
        SphereSymbol {
            dim: 2,
            profile: SymbolProfile::CosineHarmonic { k, amplitude: 1.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=geom::MAX_DIM).contains(&self.dim) {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        let planar = |what: &str| {
            if self.dim == 2 {
                Ok(())
            } else {
                Err(Error::Invalid(format!("{what} symbols are defined for n = 2")))
            }
        };
        match &self.profile {
            SymbolProfile::Zero => {}
            SymbolProfile::CosineHarmonic { k, .. } | SymbolProfile::SignHarmonic { k, .. } => {
                planar("harmonic")?;
                if *k == 0 {
                    return Err(Error::Invalid("harmonic symbols need k >= 1".into()));
                }
            }
            SymbolProfile::OddPolynomial { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::Invalid("odd polynomial needs a coefficient".into()));
                }
            }
            SymbolProfile::Tabulated { values } => {
                planar("tabulated")?;
                if values.len() < 2 {
                    return Err(Error::Invalid("tabulated symbol needs at least 2 cells".into()));
                }
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
                if mean.abs() > 1e-8 * scale {
                    return Err(Error::Invalid(format!("tabulated symbol has nonzero average {mean:e}")));
                }
            }
        }
        Ok(())
    }

    /// `Omega(theta)` for a unit vector `theta`.
    pub fn value(&self, theta: &[f64]) -> f64 {
        match &self.profile {
            SymbolProfile::Zero => 0.0,
            SymbolProfile::CosineHarmonic { k, amplitude } => {
                let phi = theta[1].atan2(theta[0]);
                amplitude * (*k as f64 * phi).cos()
            }
            SymbolProfile::SignHarmonic { k, amplitude } => {
                let phi = theta[1].atan2(theta[0]);
                let c = (*k as f64 * phi).cos();
                if c >= 0.0 {
                    *amplitude
                } else {
                    -amplitude
                }
            }
            SymbolProfile::OddPolynomial { coeffs } => odd_poly(coeffs, theta[0]),
            SymbolProfile::Tabulated { values } => {
                let phi = theta[1].atan2(theta[0]).rem_euclid(std::f64::consts::TAU);
                let m = values.len();
                values[((phi / std::f64::consts::TAU * m as f64) as usize).min(m - 1)]
            }
        }
    }

    /// `Omega(y / |y|)`.
    pub fn homogeneous(&self, y: &[f64]) -> f64 {
        let r = geom::norm(y);
        if r == 0.0 {
            return 0.0;
        }
        let mut u = [0.0; 3];
        for i in 0..y.len() {
            u[i] = y[i] / r;
        }
        self.value(&u[..y.len()])
    }

    pub fn scaled(&self, c: f64) -> Self {
        let profile = match &self.profile {
            SymbolProfile::Zero => SymbolProfile::Zero,
            SymbolProfile::CosineHarmonic { k, amplitude } => SymbolProfile::CosineHarmonic {
                k: *k,
                amplitude: amplitude * c,
            },
            SymbolProfile::SignHarmonic { k, amplitude } => SymbolProfile::SignHarmonic {
                k: *k,
                amplitude: amplitude * c,
            },
            SymbolProfile::OddPolynomial { coeffs } => SymbolProfile::OddPolynomial {
                coeffs: coeffs.iter().map(|v| v * c).collect(),
            },
            SymbolProfile::Tabulated { values } => SymbolProfile::Tabulated {
                values: values.iter().map(|v| v * c).collect(),
            },
        };
        SphereSymbol { dim: self.dim, profile }
    }

    /// `sup |Omega|`.
    pub fn sup(&self) -> f64 {
        match &self.profile {
            SymbolProfile::Zero => 0.0,
            SymbolProfile::CosineHarmonic { amplitude, .. } | SymbolProfile::SignHarmonic { amplitude, .. } => {
                amplitude.abs()
            }
            SymbolProfile::OddPolynomial { coeffs } => {
                let grid = 20_001;
                (0..grid)
                    .map(|i| odd_poly(coeffs, -1.0 + 2.0 * i as f64 / (grid - 1) as f64).abs())
                    .fold(0.0, f64::max)
            }
            SymbolProfile::Tabulated { values } => values.iter().fold(0.0, |a, v| a.max(v.abs())),
        }
    }

    /// Exact `sigma({theta : |Omega(theta)| > t})`.
    pub fn distribution(&self, t: f64) -> f64 {
        let n = self.dim;
        if t < 0.0 {
            return sphere_measure(n);
        }
        match &self.profile {
            SymbolProfile::Zero => 0.0,
            SymbolProfile::CosineHarmonic { amplitude, .. } => {
                let a = amplitude.abs();
                if t >= a {
                    0.0
                } else {
                    4.0 * (t / a).acos()
                }
            }
            SymbolProfile::SignHarmonic { amplitude, .. } => {
                if t >= amplitude.abs() {
                    0.0
                } else {
                    2.0 * PI
                }
            }
            SymbolProfile::Tabulated { values } => {
                let cell = std::f64::consts::TAU / values.len() as f64;
                values.iter().filter(|v| v.abs() > t).count() as f64 * cell
            }
            SymbolProfile::OddPolynomial { coeffs } => {
                // superlevel set in u = theta_1, then pushed to the sphere
                let intervals = superlevel_intervals(|u| odd_poly(coeffs, u).abs(), t);
                intervals
                    .iter()
                    .map(|&(a, b)| match n {
                        1 => [-1.0, 1.0].iter().filter(|u| **u >= a && **u <= b && odd_poly(coeffs, **u).abs() > t).count() as f64,
                        2 => 2.0 * (a.acos() - b.acos()),
                        _ => 2.0 * PI * (b - a),
                    })
                    .sum()
            }
        }
    }

    /// `|int_{S^{n-1}} Omega d sigma|` by quadrature.
    pub fn average_defect(&self) -> f64 {
        let rule = quadrature::sphere_rule(self.dim, 4096);
        rule.iter().map(|(d, w)| w * self.value(&d[..self.dim])).sum::<f64>().abs()
    }

    /// Distinct values `v` where the distribution jumps, when it is a step
    /// function.
    pub(crate) fn jump_levels(&self) -> Option<Vec<f64>> {
        match &self.profile {
            SymbolProfile::Zero => Some(vec![]),
            SymbolProfile::SignHarmonic { amplitude, .. } => Some(vec![amplitude.abs()]),
            SymbolProfile::Tabulated { values } => {
                let mut v: Vec<f64> = values.iter().map(|v| v.abs()).filter(|v| *v > 0.0).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                Some(v)
            }
            SymbolProfile::OddPolynomial { .. } if self.dim == 1 => {
                let v = self.value(&[1.0]).abs();
                Some(if v > 0.0 { vec![v] } else { vec![] })
            }
            _ => None,
        }
    }
}

fn odd_poly(coeffs: &[f64], u: f64) -> f64 {
    let u2 = u * u;
    let mut acc = 0.0;
    for c in coeffs.iter().rev() {
        acc = acc * u2 + c;
    }
    acc * u
}

/// `{u in [-1, 1] : g(u) > t}` as intervals, from a fine scan refined by
/// bisection.
fn superlevel_intervals(g: impl Fn(f64) -> f64, t: f64) -> Vec<(f64, f64)> {
    let m = 4096;
    let at = |i: usize| -1.0 + 2.0 * i as f64 / m as f64;
    let root = |mut a: f64, mut b: f64| {
        let above_a = g(a) > t;
        for _ in 0..60 {
            let c = 0.5 * (a + b);
            if (g(c) > t) == above_a {
                a = c;
            } else {
                b = c;
            }
        }
        0.5 * (a + b)
    };
    let mut out = Vec::new();
    let mut start = if g(-1.0) > t { Some(-1.0) } else { None };
    for i in 0..m {
        let (a, b) = (at(i), at(i + 1));
        let (ia, ib) = (g(a) > t, g(b) > t);
        if ia && !ib {
            out.push((start.take().unwrap_or(a), root(a, b)));
        } else if !ia && ib {
            start = Some(root(a, b));
        }
    }
    if let Some(s) = start {
        out.push((s, 1.0));
    }
    out
}

/// Truncation radii `t_min 2^{j / 2^refinements}` covering `[t_min, t_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationGrid {
    pub t_min: f64,
    pub t_max: f64,
    /// Each refinement halves the log-spacing, so refined grids are supersets.
    #[serde(default)]
    pub refinements: u32,
}

impl TruncationGrid {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_min > 0.0) {
            return Err(Error::NonPositiveRadius(t_min));
        }
        if !(t_max >= t_min) {
            return Err(Error::Invalid("truncation grid needs t_max >= t_min".into()));
        }
        Ok(TruncationGrid {
            t_min,
            t_max,
            refinements: 0,
        })
    }

    /// Grid covering the support geometry of `f` seen from `x`.
    pub fn for_support(f: &TestFunction, x: &[f64]) -> Self {
        let d = geom::dist(x, &f.center);
        TruncationGrid {
            t_min: f.scale * 2f64.powi(-10),
            t_max: 2.0 * (2.0 * f.scale + d),
            refinements: 0,
        }
    }

    pub fn refined(&self) -> Self {
        TruncationGrid {
            refinements: self.refinements + 1,
            ..self.clone()
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        let octaves = (self.t_max / self.t_min).log2().ceil().max(0.0) as u64;
        let per = 1u64 << self.refinements;
        (0..=octaves * per)
            .map(|j| self.t_min * 2f64.powf(j as f64 / per as f64))
            .collect()
    }
}

struct TruncKernel<'a> {
    f: &'a TestFunction,
    omega: &'a SphereSymbol,
    x: &'a [f64],
    n: usize,
}

impl Kernel for TruncKernel<'_> {
    fn dim(&self) -> usize {
        self.n
    }
    fn singularity(&self) -> Singularity {
        Singularity::NONE
    }
    fn radial(&self, r: f64) -> f64 {
        r.powi(-(self.n as i32))
    }
    fn eval(&self, _y: &[f64], r: f64, dir: &[f64]) -> f64 {
        // f(x - r dir) Omega(dir)
        let mut z = [0.0; 3];
        for i in 0..self.n {
            z[i] = self.x[i] - r * dir[i];
        }
        let fz = self.f.eval(&z[..self.n]);
        if fz == 0.0 {
            0.0
        } else {
            fz * self.omega.value(dir)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoughMaximal {
    pub value: f64,
    pub argmax: f64,
    pub error: f64,
    /// `(t, int_{|y| > t} Omega(y) |y|^{-n} f(x - y) dy)` per grid radius.
    pub truncations: Vec<(f64, f64)>,
}

/// `int_{|y| > t} Omega(y) |y|^{-n} f(x - y) dy`.
pub fn truncated_integral(
    f: &TestFunction,
    omega: &SphereSymbol,
    x: &[f64],
    t: f64,
    scheme: &QuadratureScheme,
) -> Result<QuadResult> {
    let n = f.dimension();
    ensure_dim(n, x.len())?;
    ensure_dim(n, omega.dim)?;
    let reach = geom::dist(x, &f.center) + f.scale;
    if t >= reach || matches!(omega.profile, SymbolProfile::Zero) || f.amplitude == 0.0 {
        return Ok(QuadResult::ZERO);
    }
    let inner = t.max(geom::dist(x, &f.center) - f.scale);
    let k = TruncKernel { f, omega, x, n };
    integrate_singular(&k, x, Shell::annulus(inner, reach), scheme)
}

/// `T*_Omega f(x)` over the truncation grid; a lower bound for the
/// supremum over all `t > 0`.
pub fn rough_maximal(
    f: &TestFunction,
    omega: &SphereSymbol,
    x: &[f64],
    grid: &TruncationGrid,
    scheme: &QuadratureScheme,
) -> Result<RoughMaximal> {
    let radii = grid.radii();
    let vals: Vec<QuadResult> = radii
        .iter()
        .map(|&t| truncated_integral(f, omega, x, t, scheme))
        .collect::<Result<_>>()?;
    let mut best = RoughMaximal {
        value: 0.0,
        argmax: radii[0],
        error: 0.0,
        truncations: Vec::with_capacity(radii.len()),
    };
    for (t, q) in radii.iter().zip(&vals) {
        best.truncations.push((*t, q.value));
        if q.value.abs() > best.value {
            best.value = q.value.abs();
            best.argmax = *t;
            best.error = q.error;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{BallIndicator, Family, GradientMagnitude};
    use approx::assert_relative_eq;

    fn bump() -> TestFunction {
        TestFunction::smooth_bump(&[0.0, 0.0], 1.0)
    }

    // scipy adaptive quadrature, polar about x; see tools/oracles.py
    const I1_BUMP_03: f64 = 1.2848312888748816;
    const I15_BUMP_03: f64 = 0.7181922972780438;
    const D05_CENTRE: f64 = 6.404479564605396;
    const D05_CENTRE_CUT: f64 = 6.404479563064546;
    const D05_OFF: f64 = 6.862095386156778;
    const TW_GRAD_OFF: f64 = 0.6984555886321252;
    const TSTAR_COS_04: f64 = 0.9561153037503509;
    const TSTAR_COS_04_LIST: [f64; 11] = [
        0.9561153038, 0.9550575975, 0.9529421711, 0.9487112058, 0.9402483761, 0.9233155262, 0.8893923598, 0.8210883882,
        0.6809185686, 0.3822908692, 0.02866476925,
    ];
    const MWC_OFF: f64 = 0.31680567263311815;

    #[test]
    fn riesz_of_ball_indicator() {
        for n in 1..=3 {
            for alpha in [0.3, 0.5 * n as f64, n as f64 - 0.1] {
                let ind = BallIndicator {
                    center: vec![0.0; n],
                    radius: 1.7,
                    height: 1.0,
                };
                let v = riesz_potential(&ind, alpha, &vec![0.0; n], &Default::default()).unwrap().value;
                assert_relative_eq!(v, sphere_measure(n) * 1.7f64.powf(alpha) / alpha, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn riesz_matches_oracles() {
        let f = bump();
        let s = QuadratureScheme::default();
        assert_relative_eq!(riesz_potential(&f, 1.0, &[0.3, 0.0], &s).unwrap().value, I1_BUMP_03, max_relative = 5e-3);
        assert_relative_eq!(riesz_potential(&f, 1.5, &[0.3, 0.0], &s).unwrap().value, I15_BUMP_03, max_relative = 5e-3);
        let zero = f.scaled(0.0);
        assert_eq!(riesz_potential(&zero, 1.0, &[0.3, 0.0], &s).unwrap().value, 0.0);
        assert!(riesz_potential(&f, 2.0, &[0.3, 0.0], &s).is_err());
        assert!(riesz_potential(&f, 1.0, &[0.3], &s).is_err());
    }

    #[test]
    fn frac_derivative_matches_oracles() {
        let f = bump();
        let s = QuadratureScheme::default();
        let c = frac_derivative(&f, 0.5, &[0.0, 0.0], &s).unwrap();
        assert_relative_eq!(c.value, D05_CENTRE_CUT, max_relative = 1e-2);
        assert_relative_eq!(c.value, D05_CENTRE, max_relative = 1e-3);
        let o = frac_derivative(&f, 0.5, &[0.3, 0.2], &s).unwrap();
        assert_relative_eq!(o.value, D05_OFF, max_relative = 1e-3);
        assert_eq!(frac_derivative(&f.scaled(0.0), 0.5, &[0.1, 0.0], &s).unwrap().value, 0.0);
        assert!(frac_derivative(&f, 1.0, &[0.0, 0.0], &s).is_err());
    }

    #[test]
    fn frac_derivative_far_decay() {
        let f = bump();
        let s = QuadratureScheme::default();
        for alpha in [0.25, 0.75] {
            let a = frac_derivative(&f, alpha, &[20.0, 0.0], &s).unwrap().value;
            let b = frac_derivative(&f, alpha, &[40.0, 0.0], &s).unwrap().value;
            assert_relative_eq!(b / a, 2f64.powf(-2.0 - alpha), max_relative = 0.1);
        }
    }

    #[test]
    fn frac_field_interpolates_direct_values() {
        let f = bump();
        let s = QuadratureScheme::default();
        let field = frac_derivative_field(&f, 0.5, &s).unwrap();
        for x in [[0.3, 0.2], [0.0, 0.0], [-0.7, 0.4], [1.2, -0.9], [2.5, 1.0], [10.0, -3.0], [3000.0, 0.0]] {
            let direct = frac_derivative(&f, 0.5, &x, &s).unwrap().value;
            let v = field.value(&x);
            // D^alpha f has cusps at critical points of f; multilinear
            // interpolation on the default grid is good to about 2%
            assert_relative_eq!(v, direct, max_relative = 2e-2);
        }
        // cache returns the same allocation
        let again = frac_derivative_field(&f, 0.5, &s).unwrap();
        assert!(Arc::ptr_eq(&field, &again));
    }

    #[test]
    fn tw_unit_weight_is_scaled_riesz() {
        let f = bump();
        let g = GradientMagnitude(&f);
        let s = QuadratureScheme::default();
        let w = Weight::unit(2);
        for alpha in [1.0, 0.5] {
            for x in [[0.3, 0.0], [0.0, 0.0], [1.4, 0.2]] {
                let t = potential_tw(&g, &w, alpha, &x, &s).unwrap().value;
                let i = riesz_potential(&g, alpha, &x, &s).unwrap().value;
                assert_relative_eq!(t * PI, i, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn tw_with_power_weight_matches_oracle() {
        let f = bump();
        let g = GradientMagnitude(&f);
        let w = Weight::radial_power(&[0.0, 0.0], 0.5).unwrap();
        let v = potential_tw(&g, &w, 1.0, &[0.3, 0.2], &QuadratureScheme::default()).unwrap().value;
        assert_relative_eq!(v, TW_GRAD_OFF, max_relative = 2e-2);
    }

    #[test]
    fn tw_invariant_under_weight_scaling() {
        let f = bump();
        let g = GradientMagnitude(&f);
        let w = Weight::power_plus_one(&[0.1, 0.0], 0.5).unwrap();
        let s = QuadratureScheme::default();
        let a = potential_tw(&g, &w, 1.0, &[0.3, 0.2], &s).unwrap().value;
        let b = potential_tw(&g, &w.scaled(2.0), 1.0, &[0.3, 0.2], &s).unwrap().value;
        assert_relative_eq!(a, b, max_relative = 1e-9);
    }

    #[test]
    fn tw_near_part_grows_to_the_whole() {
        let f = bump();
        let g = GradientMagnitude(&f);
        let s = QuadratureScheme::default();
        let x = [0.3, 0.2];
        for w in [Weight::unit(2), Weight::radial_power(&[0.0, 0.0], 0.5).unwrap()] {
            let full = potential_tw(&g, &w, 1.0, &x, &s).unwrap().value;
            let mut prev = 0.0;
            for r in [0.05, 0.2, 0.5, 1.0] {
                let v = potential_tw_near(&g, &w, 1.0, &x, r, &s).unwrap().value;
                assert!(v >= prev && v <= full * (1.0 + 1e-3), "{r}: {v} {full}");
                prev = v;
            }
            let all = potential_tw_near(&g, &w, 1.0, &x, 3.0, &s).unwrap().value;
            assert_relative_eq!(all, full, max_relative = 2e-3);
        }
    }

    #[test]
    fn rough_maximal_matches_oracle() {
        let f = bump();
        let omega = SphereSymbol::cosine(1);
        let x = [0.4, 0.0];
        let grid = TruncationGrid::new(2f64.powi(-10), 1.0).unwrap();
        let r = rough_maximal(&f, &omega, &x, &grid, &QuadratureScheme::default()).unwrap();
        assert_relative_eq!(r.value, TSTAR_COS_04, max_relative = 2e-2);
        for ((_, v), o) in r.truncations.iter().zip(TSTAR_COS_04_LIST) {
            assert!((v.abs() - o).abs() <= 2e-2 * TSTAR_COS_04, "{v} vs {o}");
        }
    }

    #[test]
    fn rough_maximal_annihilates_radial_functions() {
        for fam in [Family::SmoothBump, Family::TruncatedGaussian, Family::RadialPolynomialBump] {
            let f = TestFunction::new(fam, vec![0.2, -0.1], 0.8, 1.0).unwrap();
            for omega in [SphereSymbol::cosine(1), SphereSymbol::cosine(3)] {
                let grid = TruncationGrid::for_support(&f, &f.center);
                let r = rough_maximal(&f, &omega, &f.center.clone(), &grid, &QuadratureScheme::default()).unwrap();
                assert!(r.value <= 1e-6, "{fam:?}: {}", r.value);
            }
        }
        let f = bump();
        let r = rough_maximal(&f, &SphereSymbol::zero(2), &[0.3, 0.0], &TruncationGrid::for_support(&f, &[0.3, 0.0]), &Default::default())
            .unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn truncation_refinement_is_monotone() {
        let f = bump();
        let x = [0.5, 0.3];
        let g = TruncationGrid::for_support(&f, &x);
        let s = QuadratureScheme::default();
        let a = rough_maximal(&f, &SphereSymbol::cosine(1), &x, &g, &s).unwrap().value;
        let b = rough_maximal(&f, &SphereSymbol::cosine(1), &x, &g.refined(), &s).unwrap().value;
        assert!(b >= a);
        let coarse = g.radii();
        let fine = g.refined().radii();
        assert!(coarse.iter().all(|t| fine.contains(t)));
    }

    #[test]
    fn mwc_basics() {
        let s = QuadratureScheme::default();
        let one = crate::functions::FnField::new(
            2,
            Extent::Compact {
                center: vec![0.0, 0.0],
                radius: 1e6,
            },
            |_| 1.0,
        );
        let w = Weight::radial_power(&[0.1, 0.0], 0.5).unwrap();
        let m = maximal_mwc(&one, &w, &[0.3, 0.2], &[0.01, 0.1, 1.0], &s).unwrap();
        assert_relative_eq!(m.value, 1.0, max_relative = 1e-3);
        let ind = BallIndicator {
            center: vec![0.0, 0.0],
            radius: 1.0,
            height: 1.0,
        };
        let m = maximal_mwc(&ind, &Weight::unit(2), &[0.0, 0.0], &radius_grid(10.0, 3.0, 8), &s).unwrap();
        assert_relative_eq!(m.value, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn mwc_matches_dense_oracle() {
        let f = bump();
        let w = Weight::radial_power(&[0.0, 0.0], 0.5).unwrap();
        let radii = geom::log_space(0.01, 1.0, 64);
        let m = maximal_mwc(&f, &w, &[0.3, 0.2], &radii, &QuadratureScheme::default()).unwrap();
        assert_relative_eq!(m.value, MWC_OFF, max_relative = 1e-2);
    }

    #[test]
    fn symbol_distributions() {
        let c = SphereSymbol::cosine(1);
        assert_relative_eq!(c.distribution(0.5), 4.0 * 0.5f64.acos());
        assert_eq!(c.distribution(1.0), 0.0);
        assert!(c.average_defect() < 1e-12);
        // distribution against a brute angular count
        for t in [0.1, 0.5, 0.9] {
            let m = 1 << 16;
            let h = std::f64::consts::TAU / m as f64;
            let brute = (0..m).filter(|i| ((*i as f64 + 0.5) * h).cos().abs() > t).count() as f64 * h;
            for sym in [SphereSymbol::cosine(1), SphereSymbol::cosine(2)] {
                assert_relative_eq!(sym.distribution(t), brute, max_relative = 1e-4);
            }
        }
        let p = SphereSymbol::new(3, SymbolProfile::OddPolynomial { coeffs: vec![1.0] }).unwrap();
        assert_relative_eq!(p.distribution(0.5), 2.0 * PI, max_relative = 1e-12);
        assert!(p.average_defect() < 1e-12);
        let tab = SphereSymbol::new(2, SymbolProfile::Tabulated { values: vec![1.0, -2.0, 1.0] }).unwrap();
        assert_relative_eq!(tab.distribution(1.5), std::f64::consts::TAU / 3.0);
        assert!(SphereSymbol::new(2, SymbolProfile::Tabulated { values: vec![1.0, 2.0] }).is_err());
        assert!(SphereSymbol::new(3, SymbolProfile::CosineHarmonic { k: 1, amplitude: 1.0 }).is_err());
    }
}

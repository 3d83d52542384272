//! Polar quadrature around a point singularity on dyadic annuli, plus the
//! tensor Gauss rules used for boxes and intervals.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use gauss_quad::GaussLegendre;
use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::AxisBox;
use crate::geom::{self, Scratch};
use crate::special::{ball_volume, sphere_measure};

/// Hard cap on adaptive refinement depth.
pub const MAX_DEPTH: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "radius")]
pub enum OuterRadius {
    /// Stop where the integrand's support (or core region) ends.
    SupportBound,
    Explicit(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureScheme {
    pub rel_tol: f64,
    pub abs_floor: f64,
    /// Geometric sub-panels inside each dyadic annulus.
    pub panels_per_annulus: usize,
    /// Gauss-Legendre nodes per radial panel.
    pub radial_nodes: usize,
    /// Directions on the circle; the n = 3 rule uses `m/2` azimuths times
    /// `m/4` polar Gauss nodes.
    pub angular_nodes: usize,
    /// Innermost radius, relative to the support scale of the integrand.
    pub inner_cutoff: f64,
    pub outer: OuterRadius,
    pub max_refinements: usize,
    /// Points per axis of cached operator grids.
    pub grid_points: usize,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        QuadratureScheme {
            rel_tol: 1e-3,
            abs_floor: 1e-10,
            panels_per_annulus: 1,
            radial_nodes: 16,
            angular_nodes: 64,
            inner_cutoff: 1e-6,
            outer: OuterRadius::SupportBound,
            max_refinements: 3,
            grid_points: 64,
        }
    }
}

impl QuadratureScheme {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain {
                    name,
                    value: v,
                    expected: "a positive finite number",
                })
            }
        };
        pos("rel_tol", self.rel_tol)?;
        pos("inner_cutoff", self.inner_cutoff)?;
        if !(self.abs_floor >= 0.0) {
            return Err(Error::Domain {
                name: "abs_floor",
                value: self.abs_floor,
                expected: "a nonnegative number",
            });
        }
        if let OuterRadius::Explicit(r) = self.outer {
            pos("outer", r)?;
        }
        let count = |name: &'static str, v: usize, lo: usize| {
            if v >= lo {
                Ok(())
            } else {
                Err(Error::Domain {
                    name,
                    value: v as f64,
                    expected: "a larger count",
                })
            }
        };
        count("panels_per_annulus", self.panels_per_annulus, 1)?;
        count("radial_nodes", self.radial_nodes, 2)?;
        count("angular_nodes", self.angular_nodes, 8)?;
        count("grid_points", self.grid_points, 4)?;
        if self.max_refinements > MAX_DEPTH {
            return Err(Error::Domain {
                name: "max_refinements",
                value: self.max_refinements as f64,
                expected: "at most 20",
            });
        }
        Ok(())
    }

    /// Every resolution doubled: radial and angular nodes, annulus panels
    /// and cached grids. Tolerances are left alone.
    pub fn doubled(&self) -> Self {
        QuadratureScheme {
            panels_per_annulus: self.panels_per_annulus * 2,
            radial_nodes: self.radial_nodes * 2,
            angular_nodes: self.angular_nodes * 2,
            grid_points: self.grid_points * 2,
            ..self.clone()
        }
    }

    /// Tighter tolerance, same resolutions.
    pub fn with_rel_tol(&self, rel_tol: f64) -> Self {
        QuadratureScheme {
            rel_tol,
            ..self.clone()
        }
    }

    pub fn outer_radius(&self, support_bound: f64) -> f64 {
        match self.outer {
            OuterRadius::SupportBound => support_bound,
            OuterRadius::Explicit(r) => r,
        }
    }
}

/// Gauss-Legendre pairs on `[-1, 1]`, cached per degree.
pub fn gauss_legendre(degree: usize) -> Arc<Vec<(f64, f64)>> {
    static CACHE: Lazy<Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>>> =
        Lazy::new(|| Mutex::new(HashMap::new()));
    let degree = degree.max(2);
    let mut cache = CACHE.lock().unwrap_or_else(|e| e.into_inner());
    cache
        .entry(degree)
        .or_insert_with(|| {
            let rule = GaussLegendre::new(degree).expect("degree >= 2");
            let mut pairs = rule.as_node_weight_pairs().to_vec();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Arc::new(pairs)
        })
        .clone()
}

/// Composite Gauss-Legendre on `[a, b]` with equal panels.
pub fn integrate_interval(a: f64, b: f64, panels: usize, degree: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = gauss_legendre(degree);
    let h = (b - a) / panels as f64;
    let mut sums = Vec::with_capacity(panels);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let s: f64 = rule.iter().map(|&(t, w)| w * f(mid + 0.5 * h * t)).sum();
        sums.push(0.5 * h * s);
    }
    geom::pairwise_sum(&sums)
}

/// Tensor composite Gauss-Legendre over an axis box.
pub fn integrate_box(b: &AxisBox, panels: usize, degree: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let n = b.dim();
    let rule = gauss_legendre(degree);
    let axes: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|i| {
            let (lo, hi) = (b.lower[i], b.upper[i]);
            let h = (hi - lo) / panels as f64;
            let mut v = Vec::with_capacity(panels * rule.len());
            for p in 0..panels {
                let mid = lo + (p as f64 + 0.5) * h;
                for &(t, w) in rule.iter() {
                    v.push((mid + 0.5 * h * t, 0.5 * h * w));
                }
            }
            v
        })
        .collect();
    let mut x = [0.0; 3];
    match n {
        1 => geom::pairwise_sum(&axes[0].iter().map(|&(a, w)| w * f(&[a])).collect::<Vec<_>>()),
        2 => {
            let rows: Vec<f64> = axes[0]
                .iter()
                .map(|&(a, wa)| {
                    x[0] = a;
                    wa * axes[1]
                        .iter()
                        .map(|&(c, wc)| {
                            x[1] = c;
                            wc * f(&x[..2])
                        })
                        .sum::<f64>()
                })
                .collect();
            geom::pairwise_sum(&rows)
        }
        _ => {
            let rows: Vec<f64> = axes[0]
                .iter()
                .map(|&(a, wa)| {
                    x[0] = a;
                    let mut s = 0.0;
                    for &(c, wc) in &axes[1] {
                        x[1] = c;
                        for &(e, we) in &axes[2] {
                            x[2] = e;
                            s += wc * we * f(&x[..3]);
                        }
                    }
                    wa * s
                })
                .collect();
            geom::pairwise_sum(&rows)
        }
    }
}

/// [`integrate_box`] with panel counts doubling until two successive
/// values agree to the scheme tolerance.
pub fn integrate_box_adaptive(b: &AxisBox, scheme: &QuadratureScheme, f: impl Fn(&[f64]) -> f64) -> Result<QuadResult> {
    let degree = scheme.radial_nodes.clamp(2, 8);
    let mut panels = 2usize;
    let mut prev = integrate_box(b, panels, degree, &f);
    let mut last_err = f64::NAN;
    for level in 1..=scheme.max_refinements.max(1) + 2 {
        panels *= 2;
        let cur = integrate_box(b, panels, degree, &f);
        let err = (cur - prev).abs();
        last_err = err;
        if !cur.is_finite() {
            break;
        }
        if err <= scheme.rel_tol * cur.abs() + scheme.abs_floor {
            return Ok(QuadResult {
                value: cur,
                error: err,
                inner_tail: 0.0,
                levels: level,
            });
        }
        prev = cur;
    }
    Err(Error::NonConvergent {
        value: prev,
        error: last_err,
    })
}

/// Direction set on the unit sphere with weights summing to its measure.
pub fn sphere_rule(n: usize, m: usize) -> Arc<Vec<(Scratch, f64)>> {
    static CACHE: Lazy<Mutex<HashMap<(usize, usize), Arc<Vec<(Scratch, f64)>>>>> =
        Lazy::new(|| Mutex::new(HashMap::new()));
    let mut cache = CACHE.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(r) = cache.get(&(n, m)) {
        return r.clone();
    }
    let rule = match n {
        1 => vec![([1.0, 0.0, 0.0], 1.0), ([-1.0, 0.0, 0.0], 1.0)],
        2 => {
            let h = std::f64::consts::TAU / m as f64;
            (0..m)
                .map(|j| {
                    let t = (j as f64 + 0.5) * h;
                    ([t.cos(), t.sin(), 0.0], h)
                })
                .collect()
        }
        _ => {
            let na = (m / 2).max(4);
            let np = (m / 4).max(2);
            let h = std::f64::consts::TAU / na as f64;
            let mut v = Vec::with_capacity(na * np);
            for &(z, wz) in gauss_legendre(np).iter() {
                let s = (1.0 - z * z).sqrt();
                for j in 0..na {
                    let p = (j as f64 + 0.5) * h;
                    v.push(([s * p.cos(), s * p.sin(), z], wz * h));
                }
            }
            v
        }
    };
    let rule = Arc::new(rule);
    cache.insert((n, m), rule.clone());
    rule
}

/// Behaviour of an integrand at the centre of the polar decomposition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Singularity {
    /// `s` in `|integrand| ~ |y - x|^{-s}`.
    pub exponent: f64,
    /// Powers of `|y - x|` recovered by cancellation in the numerator.
    pub cancellation: f64,
}

impl Singularity {
    pub const NONE: Singularity = Singularity {
        exponent: 0.0,
        cancellation: 0.0,
    };

    pub fn power(exponent: f64) -> Self {
        Singularity {
            exponent,
            cancellation: 0.0,
        }
    }

    pub fn effective(&self) -> f64 {
        self.exponent - self.cancellation
    }
}

/// Integrand in polar coordinates about a fixed centre.
pub trait Kernel: Sync {
    fn dim(&self) -> usize;

    fn singularity(&self) -> Singularity;

    /// Factor depending only on `r = |y - x|`, computed once per radial node
    /// and multiplied into every `eval` on that sphere.
    fn radial(&self, _r: f64) -> f64 {
        1.0
    }

    /// Integrand at `y = x + r * dir`, without the radial factor.
    fn eval(&self, y: &[f64], r: f64, dir: &[f64]) -> f64;

    /// Contribution of `|y - x| > r_max`, if known in closed form.
    fn outer_tail(&self, _r_max: f64) -> f64 {
        0.0
    }
}

/// Radial range of a polar integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shell {
    pub inner: f64,
    pub outer: f64,
    /// When set, the `[0, inner]` ball is a truncated singular core whose
    /// contribution is estimated from the innermost annulus.
    pub punctured: bool,
}

impl Shell {
    pub fn punctured(eps: f64, outer: f64) -> Self {
        Shell {
            inner: eps,
            outer,
            punctured: true,
        }
    }

    pub fn annulus(inner: f64, outer: f64) -> Self {
        Shell {
            inner,
            outer,
            punctured: false,
        }
    }
}

/// Nested balls `B(x, r_k)`, `r_k = r_max 2^{-k}`, the last radius clipped
/// to the inner cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnulusDecomposition {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
}

impl AnnulusDecomposition {
    pub fn new(center: &[f64], r_max: f64, r_min: f64) -> Result<Self> {
        if !(r_max > 0.0) {
            return Err(Error::NonPositiveRadius(r_max));
        }
        if !(r_min > 0.0) {
            return Err(Error::NonPositiveRadius(r_min));
        }
        let mut radii = vec![r_max];
        let mut r = r_max;
        while r > r_min {
            r = (r / 2.0).max(r_min);
            // avoid a sliver annulus at the bottom
            if r < 1.25 * r_min {
                r = r_min;
            }
            radii.push(r);
        }
        Ok(AnnulusDecomposition {
            center: center.to_vec(),
            radii,
        })
    }

    pub fn len(&self) -> usize {
        self.radii.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `|B_k \ B_{k+1}|` for each annulus.
    pub fn measures(&self) -> Vec<f64> {
        let n = self.center.len() as i32;
        let w = ball_volume(self.center.len());
        self.radii
            .windows(2)
            .map(|p| w * (p[0].powi(n) - p[1].powi(n)))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub error: f64,
    /// Estimated contribution of the excluded core `B(x, eps)`, already
    /// included in `value`.
    pub inner_tail: f64,
    pub levels: usize,
}

impl QuadResult {
    pub const ZERO: QuadResult = QuadResult {
        value: 0.0,
        error: 0.0,
        inner_tail: 0.0,
        levels: 0,
    };

    pub fn budget(&self) -> f64 {
        self.error + self.inner_tail.abs()
    }
}

fn check_kernel<K: Kernel + ?Sized>(kernel: &K, center: &[f64], shell: &Shell) -> Result<()> {
    let n = kernel.dim();
    crate::error::ensure_dim(n, center.len())?;
    if !(1..=geom::MAX_DIM).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    if shell.punctured && kernel.singularity().effective() >= n as f64 {
        return Err(Error::NonIntegrable {
            exponent: kernel.singularity().effective(),
            dim: n,
        });
    }
    if !(shell.inner > 0.0) || !(shell.outer.is_finite()) {
        return Err(Error::NonPositiveRadius(shell.inner));
    }
    Ok(())
}

/// One fixed-resolution pass. Returns `(value_without_tail, inner_tail)`.
fn integrate_level<K: Kernel + ?Sized>(
    kernel: &K,
    center: &[f64],
    shell: &Shell,
    scheme: &QuadratureScheme,
    level: usize,
) -> (f64, f64) {
    let n = kernel.dim();
    if shell.outer <= shell.inner {
        return (0.0, 0.0);
    }
    let dec = AnnulusDecomposition::new(center, shell.outer, shell.inner).expect("validated radii");
    let panels = scheme.panels_per_annulus << level;
    let rule = gauss_legendre(scheme.radial_nodes);
    let dirs = sphere_rule(n, scheme.angular_nodes << level);
    let mut y: Scratch = [0.0; 3];
    let mut annuli = Vec::with_capacity(dec.len());
    for w in dec.radii.windows(2) {
        let (b, a) = (w[0], w[1]);
        // geometric sub-panels
        let q = (b / a).powf(1.0 / panels as f64);
        let mut lo = a;
        let mut acc = 0.0;
        for _ in 0..panels {
            let hi = lo * q;
            let h = hi - lo;
            let mut s = 0.0;
            for &(t, wt) in rule.iter() {
                let r = lo + 0.5 * h * (t + 1.0);
                let rf = kernel.radial(r);
                if rf == 0.0 {
                    continue;
                }
                let mut ang = 0.0;
                for (d, wd) in dirs.iter() {
                    geom::offset(&mut y, center, r, &d[..n]);
                    ang += wd * kernel.eval(&y[..n], r, &d[..n]);
                }
                s += wt * rf * ang * r.powi(n as i32 - 1);
            }
            acc += 0.5 * h * s;
            lo = hi;
        }
        annuli.push(acc);
    }
    let total = geom::pairwise_sum(&annuli);
    let tail = if shell.punctured && !annuli.is_empty() {
        // integrand ~ H(dir) r^{-s}: the core carries eps^{n-s}/(b^{n-s}-a^{n-s})
        // times the innermost annulus
        let e = n as f64 - kernel.singularity().effective();
        let a = dec.radii[dec.radii.len() - 1];
        let b = dec.radii[dec.radii.len() - 2];
        let inner = annuli[annuli.len() - 1];
        inner * a.powf(e) / (b.powf(e) - a.powf(e))
    } else {
        0.0
    };
    (total, tail)
}

/// `int_{shell} kernel(y) dy` about `center`, refined until two successive
/// levels agree to `rel_tol * |value| + abs_floor`.
pub fn integrate_singular<K: Kernel + ?Sized>(
    kernel: &K,
    center: &[f64],
    shell: Shell,
    scheme: &QuadratureScheme,
) -> Result<QuadResult> {
    check_kernel(kernel, center, &shell)?;
    let outer_tail = kernel.outer_tail(shell.outer);
    let (mut prev, mut prev_tail) = integrate_level(kernel, center, &shell, scheme, 0);
    let mut last_err = f64::NAN;
    for level in 1..=scheme.max_refinements.min(MAX_DEPTH) {
        let (cur, tail) = integrate_level(kernel, center, &shell, scheme, level);
        let value = cur + tail + outer_tail;
        let err = (cur + tail - prev - prev_tail).abs();
        last_err = err;
        if !value.is_finite() {
            return Err(Error::NonConvergent { value, error: err });
        }
        if err <= scheme.rel_tol * value.abs() + scheme.abs_floor {
            return Ok(QuadResult {
                value,
                error: err,
                inner_tail: tail,
                levels: level,
            });
        }
        prev = cur;
        prev_tail = tail;
    }
    if scheme.max_refinements == 0 {
        let value = prev + prev_tail + outer_tail;
        return Ok(QuadResult {
            value,
            error: f64::NAN,
            inner_tail: prev_tail,
            levels: 0,
        });
    }
    Err(Error::NonConvergent {
        value: prev + prev_tail + outer_tail,
        error: last_err,
    })
}

/// Single pass at a fixed refinement level, for bulk grid evaluation.
pub fn integrate_fixed<K: Kernel + ?Sized>(
    kernel: &K,
    center: &[f64],
    shell: Shell,
    scheme: &QuadratureScheme,
    level: usize,
) -> Result<QuadResult> {
    check_kernel(kernel, center, &shell)?;
    let (v, tail) = integrate_level(kernel, center, &shell, scheme, level);
    Ok(QuadResult {
        value: v + tail + kernel.outer_tail(shell.outer),
        error: f64::NAN,
        inner_tail: tail,
        levels: level,
    })
}

/// Number of dyadic panels used toward a singular ray origin.
const RAY_DYADIC_PANELS: usize = 40;

/// `int f(y) dy` in polar coordinates about `center`, where each ray is
/// clipped to the parameter interval `clip(dir)` (for example the chord of
/// a ball or box). `f` receives `y` and the distance `s = |y - center|`.
/// With `singular` set, rays starting at the centre are graded
/// dyadically toward it, which resolves integrable `s^{-beta}` behaviour.
pub fn integrate_rays(
    center: &[f64],
    clip: impl Fn(&[f64]) -> Option<(f64, f64)>,
    f: impl Fn(&[f64], f64) -> f64,
    singular: bool,
    scheme: &QuadratureScheme,
    level: usize,
) -> f64 {
    let n = center.len();
    let rule = gauss_legendre(scheme.radial_nodes);
    let dirs = sphere_rule(n, scheme.angular_nodes << level);
    let panels = (4 * scheme.panels_per_annulus) << level;
    let mut y: Scratch = [0.0; 3];
    let mut per_dir = Vec::with_capacity(dirs.len());
    let seg = |a: f64, b: f64, y: &mut Scratch, d: &[f64]| {
        let h = b - a;
        let mut s = 0.0;
        for &(t, wt) in rule.iter() {
            let r = a + 0.5 * h * (t + 1.0);
            geom::offset(y, center, r, d);
            s += wt * f(&y[..n], r) * r.powi(n as i32 - 1);
        }
        0.5 * h * s
    };
    for (d, wd) in dirs.iter() {
        let d = &d[..n];
        let Some((a, b)) = clip(d) else {
            per_dir.push(0.0);
            continue;
        };
        if !(b > a) {
            per_dir.push(0.0);
            continue;
        }
        let mut acc = 0.0;
        if singular && a <= 0.0 {
            let mut hi = b;
            let (mut prev, mut last) = (0.0, 0.0);
            for _ in 0..RAY_DYADIC_PANELS {
                let lo = hi / 2.0;
                prev = last;
                last = seg(lo, hi, &mut y, d);
                acc += last;
                hi = lo;
            }
            // panels of a power law r^{-beta} shrink geometrically; sum the rest
            let q = last / prev;
            if q > 0.0 && q < 1.0 {
                acc += last * q / (1.0 - q);
            }
        } else {
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                acc += seg(a + p as f64 * h, a + (p + 1) as f64 * h, &mut y, d);
            }
        }
        per_dir.push(wd * acc);
    }
    geom::pairwise_sum(&per_dir)
}

/// [`integrate_rays`] refined until two levels agree.
pub fn integrate_rays_adaptive(
    center: &[f64],
    clip: impl Fn(&[f64]) -> Option<(f64, f64)>,
    f: impl Fn(&[f64], f64) -> f64,
    singular: bool,
    scheme: &QuadratureScheme,
) -> Result<QuadResult> {
    let mut prev = integrate_rays(center, &clip, &f, singular, scheme, 0);
    let mut last_err = f64::NAN;
    for level in 1..=scheme.max_refinements.min(MAX_DEPTH) {
        let cur = integrate_rays(center, &clip, &f, singular, scheme, level);
        let err = (cur - prev).abs();
        last_err = err;
        if !cur.is_finite() {
            return Err(Error::NonConvergent { value: cur, error: err });
        }
        if err <= scheme.rel_tol * cur.abs() + scheme.abs_floor {
            return Ok(QuadResult {
                value: cur,
                error: err,
                inner_tail: 0.0,
                levels: level,
            });
        }
        prev = cur;
    }
    if scheme.max_refinements == 0 {
        return Ok(QuadResult {
            value: prev,
            error: f64::NAN,
            inner_tail: 0.0,
            levels: 0,
        });
    }
    Err(Error::NonConvergent {
        value: prev,
        error: last_err,
    })
}

/// Chord of the ray `center + s dir` inside `B(ball_center, r)`.
pub fn ray_ball(center: &[f64], dir: &[f64], ball_center: &[f64], r: f64) -> Option<(f64, f64)> {
    // s^2 + 2 s dir.(center - c) + |center - c|^2 - r^2 < 0
    let mut b = 0.0;
    let mut c = -r * r;
    for i in 0..center.len() {
        let o = center[i] - ball_center[i];
        b += dir[i] * o;
        c += o * o;
    }
    let disc = b * b - c;
    if disc <= 0.0 {
        return None;
    }
    let q = disc.sqrt();
    let (lo, hi) = (-b - q, -b + q);
    if hi <= 0.0 {
        return None;
    }
    Some((lo.max(0.0), hi))
}

/// Chord of the ray `center + s dir` inside an axis box.
pub fn ray_box(center: &[f64], dir: &[f64], b: &AxisBox) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for i in 0..center.len() {
        if dir[i].abs() < 1e-300 {
            if center[i] < b.lower[i] || center[i] > b.upper[i] {
                return None;
            }
            continue;
        }
        let t1 = (b.lower[i] - center[i]) / dir[i];
        let t2 = (b.upper[i] - center[i]) / dir[i];
        lo = lo.max(t1.min(t2));
        hi = hi.min(t1.max(t2));
    }
    (hi > lo).then_some((lo, hi))
}

/// Closed form of `int_{eps < |y| < R} |y|^{-s} dy`.
pub fn radial_power_integral(n: usize, s: f64, eps: f64, r: f64) -> f64 {
    let e = n as f64 - s;
    sphere_measure(n) * (r.powf(e) - eps.powf(e)) / e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::TestFunction;
    use approx::assert_relative_eq;

    struct Radial {
        n: usize,
        s: f64,
    }

    impl Kernel for Radial {
        fn dim(&self) -> usize {
            self.n
        }
        fn singularity(&self) -> Singularity {
            Singularity::power(self.s)
        }
        fn eval(&self, _y: &[f64], r: f64, _d: &[f64]) -> f64 {
            r.powf(-self.s)
        }
    }

    struct Bump {
        f: TestFunction,
        s: f64,
    }

    impl Kernel for Bump {
        fn dim(&self) -> usize {
            self.f.dimension()
        }
        fn singularity(&self) -> Singularity {
            Singularity::power(self.s)
        }
        fn eval(&self, y: &[f64], r: f64, _d: &[f64]) -> f64 {
            self.f.eval(y) * r.powf(-self.s)
        }
    }

    struct Zero(usize);

    impl Kernel for Zero {
        fn dim(&self) -> usize {
            self.0
        }
        fn singularity(&self) -> Singularity {
            Singularity::NONE
        }
        fn eval(&self, _: &[f64], _: f64, _: &[f64]) -> f64 {
            0.0
        }
    }

    #[test]
    fn zero_kernel() {
        let q = integrate_singular(&Zero(2), &[0.0, 0.0], Shell::punctured(1e-6, 1.0), &Default::default()).unwrap();
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn riesz_kernel_on_unit_disc() {
        // alpha = 1, n = 2: 2 pi R / 1
        let k = Radial { n: 2, s: 1.0 };
        let q = integrate_singular(&k, &[0.3, -0.2], Shell::punctured(1e-6, 1.0), &Default::default()).unwrap();
        assert_relative_eq!(q.value, std::f64::consts::TAU, max_relative = 1e-3);
        // the tail correction restores the excluded core almost exactly
        assert_relative_eq!(q.value, std::f64::consts::TAU, max_relative = 1e-9);
    }

    #[test]
    fn radial_powers_in_all_dimensions() {
        for n in 1..=3 {
            for &s in &[0.0, 0.5, n as f64 - 0.25] {
                let k = Radial { n, s };
                let q = integrate_singular(&k, &vec![0.1; n], Shell::annulus(1e-3, 2.0), &Default::default()).unwrap();
                assert_relative_eq!(q.value, radial_power_integral(n, s, 1e-3, 2.0), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn strong_singularity_rejected() {
        let k = Radial { n: 2, s: 2.0 };
        let e = integrate_singular(&k, &[0.0, 0.0], Shell::punctured(1e-6, 1.0), &Default::default());
        assert!(matches!(e, Err(Error::NonIntegrable { .. })));
        let e = integrate_singular(&k, &[0.0], Shell::punctured(1e-6, 1.0), &Default::default());
        assert!(matches!(e, Err(Error::DimensionMismatch { .. })));
    }

    /// Brute-force midpoint grid, 10x finer than the default angular count,
    /// with the cells touching the singularity integrated exactly.
    fn fine_grid_riesz(f: &TestFunction, x: &[f64], s: f64, m: usize) -> f64 {
        let h = 2.0 * f.scale / m as f64;
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let y = [
                    f.center[0] - f.scale + (i as f64 + 0.5) * h,
                    f.center[1] - f.scale + (j as f64 + 0.5) * h,
                ];
                let d = geom::dist(&y, x);
                if d < h {
                    continue;
                }
                acc += f.eval(&y) * d.powf(-s) * h * h;
            }
        }
        // disc of radius h around x: f(x) * 2 pi h^{2-s}/(2-s), up to O(h^{3-s})
        acc + f.eval(x) * radial_power_integral(2, s, 0.0, h)
    }

    #[test]
    fn bump_riesz_matches_fine_grid() {
        let f = TestFunction::smooth_bump(&[0.0, 0.0], 1.0);
        let x = [0.3, 0.0];
        let k = Bump { f: f.clone(), s: 1.0 };
        let q = integrate_singular(&k, &x, Shell::punctured(1e-6, 1.3), &Default::default()).unwrap();
        let oracle = fine_grid_riesz(&f, &x, 1.0, 1280);
        assert_relative_eq!(q.value, oracle, max_relative = 5e-3);
    }

    #[test]
    fn tighter_tolerance_never_worse() {
        let f = TestFunction::smooth_bump(&[0.0, 0.0], 1.0);
        let x = [0.3, 0.0];
        let oracle = fine_grid_riesz(&f, &x, 1.0, 1280);
        for s in [0.5, 1.0, 1.5] {
            let k = Bump { f: f.clone(), s };
            let oracle = if s == 1.0 { oracle } else { fine_grid_riesz(&f, &x, s, 1280) };
            let mut last = f64::INFINITY;
            for tol in [1e-2, 5e-3, 2.5e-3, 1.25e-3] {
                let sch = QuadratureScheme::default().with_rel_tol(tol);
                let v = integrate_singular(&k, &x, Shell::punctured(1e-6, 1.3), &sch).unwrap().value;
                let d = (v - oracle).abs();
                assert!(d <= last * (1.0 + 1e-9) + 1e-12, "s={s} tol={tol}: {d} > {last}");
                last = d;
            }
        }
    }

    #[test]
    fn annuli_are_disjoint_and_cover() {
        for n in 1..=3 {
            let dec = AnnulusDecomposition::new(&vec![0.0; n], 3.0, 1e-5).unwrap();
            let total: f64 = dec.measures().iter().sum();
            let w = ball_volume(n);
            let expect = w * (3f64.powi(n as i32) - 1e-5f64.powi(n as i32));
            assert!((total - expect).abs() <= 1e-10 * expect);
            assert!(dec.radii.windows(2).all(|p| p[0] > p[1]));
            assert_eq!(*dec.radii.last().unwrap(), 1e-5);
        }
    }

    #[test]
    fn sphere_rules_integrate_constants() {
        for n in 1..=3 {
            for m in [16, 64] {
                let s: f64 = sphere_rule(n, m).iter().map(|p| p.1).sum();
                assert_relative_eq!(s, sphere_measure(n), max_relative = 1e-12);
            }
        }
        // x_3^2 over S^2 is 4 pi / 3
        let s: f64 = sphere_rule(3, 32).iter().map(|(d, w)| w * d[2] * d[2]).sum();
        assert_relative_eq!(s, 4.0 * std::f64::consts::PI / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn box_rule() {
        let b = AxisBox::new(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 3.0]).unwrap();
        let v = integrate_box(&b, 2, 4, |x| x[0] * x[1] * x[2]);
        assert_relative_eq!(v, 0.5 * 2.0 * 4.5, max_relative = 1e-13);
    }

    #[test]
    fn rays_recover_ball_and_box_volumes() {
        let sch = QuadratureScheme::default();
        for n in 1..=3 {
            let c = vec![0.3; n];
            let v = integrate_rays(&c, |d| ray_ball(&c, d, &vec![0.0; n], 1.0), |_, _| 1.0, false, &sch, 1);
            assert_relative_eq!(v, ball_volume(n), max_relative = 2e-3);
            let b = AxisBox::new(vec![-1.0; n], vec![1.0; n]).unwrap();
            // chords are exact; the angular rule sees the box edges as kinks
            let v = integrate_rays(&c, |d| ray_box(&c, d, &b), |_, _| 1.0, false, &sch, 2);
            assert_relative_eq!(v, 2f64.powi(n as i32), max_relative = 5e-3);
        }
        // pole at the ray origin: |y|^{-1/2} over the unit disc is 4 pi / 3
        let v = integrate_rays(&[0.0, 0.0], |_| Some((0.0, 1.0)), |_, s| s.powf(-0.5), true, &sch, 0);
        assert_relative_eq!(v, 4.0 * std::f64::consts::PI / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn ray_clipping() {
        assert_eq!(ray_ball(&[0.0, 0.0], &[1.0, 0.0], &[3.0, 0.0], 1.0), Some((2.0, 4.0)));
        assert_eq!(ray_ball(&[0.0, 0.0], &[-1.0, 0.0], &[3.0, 0.0], 1.0), None);
        assert_eq!(ray_ball(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 0.0], 1.0), Some((0.0, 1.0)));
        let b = AxisBox::new(vec![1.0, -1.0], vec![2.0, 1.0]).unwrap();
        assert_eq!(ray_box(&[0.0, 0.0], &[1.0, 0.0], &b), Some((1.0, 2.0)));
        assert_eq!(ray_box(&[0.0, 0.0], &[0.0, 1.0], &b), None);
    }

    #[test]
    fn doubled_scheme() {
        let s = QuadratureScheme::default().doubled();
        assert_eq!(s.radial_nodes, 32);
        assert_eq!(s.angular_nodes, 128);
        assert_eq!(s.grid_points, 128);
        assert!(QuadratureScheme::default().validate().is_ok());
        let bad = QuadratureScheme {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}

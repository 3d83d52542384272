//! Analytic, compactly supported test functions with exact gradients, and
//! the [`Field`] abstraction every operator integrates against.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::geom;
use crate::quadrature::{self, QuadratureScheme};

/// Where a field lives.
#[derive(Clone, Debug, PartialEq)]
pub enum Extent {
    /// Vanishes outside `B(center, radius)`.
    Compact { center: Vec<f64>, radius: f64 },
    /// Outside `B(center, radius)` the field behaves like
    /// `mass * |y - center|^{-exponent}`.
    Decaying {
        center: Vec<f64>,
        radius: f64,
        mass: f64,
        exponent: f64,
    },
}

impl Extent {
    pub fn center(&self) -> &[f64] {
        match self {
            Extent::Compact { center, .. } | Extent::Decaying { center, .. } => center,
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            Extent::Compact { radius, .. } | Extent::Decaying { radius, .. } => *radius,
        }
    }

    /// Radius of the smallest ball about `x` containing the core region.
    pub fn reach_from(&self, x: &[f64]) -> f64 {
        geom::dist(x, self.center()) + self.radius()
    }
}

/// A real-valued function on `R^n` that the integral operators can consume.
pub trait Field: Sync {
    fn dim(&self) -> usize;

    /// Unchecked evaluation; `x.len()` must equal `dim()`.
    fn value(&self, x: &[f64]) -> f64;

    fn extent(&self) -> Extent;
}

impl<T: Field + ?Sized> Field for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn extent(&self) -> Extent {
        (**self).extent()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `a exp(-1 / (1 - |u|^2))`, C-infinity.
    SmoothBump,
    /// `a prod_i max(0, 1 - |u_i| sqrt(n))`, Lipschitz.
    TensorHat,
    /// Gaussian `exp(-4 |u|^2)` shifted to vanish at `|u| = 1`, Lipschitz.
    TruncatedGaussian,
    /// `a (1 - |u|^2)^2`, C^1.
    RadialPolynomialBump,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::SmoothBump,
        Family::TensorHat,
        Family::TruncatedGaussian,
        Family::RadialPolynomialBump,
    ];

    pub fn is_radial(self) -> bool {
        !matches!(self, Family::TensorHat)
    }
}

const GAUSS_RATE: f64 = 4.0;

/// Compactly supported test function, supported in `B(center, scale)`.
///
/// `u = (x - center) / scale` is the normalised coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub family: Family,
    pub center: Vec<f64>,
    pub scale: f64,
    pub amplitude: f64,
}

impl TestFunction {
    pub fn new(family: Family, center: Vec<f64>, scale: f64, amplitude: f64) -> Result<Self> {
        let f = TestFunction {
            family,
            center,
            scale,
            amplitude,
        };
        f.validate()?;
        Ok(f)
    }

    /// Unit-amplitude bump of radius `scale` about `center`.
    pub fn smooth_bump(center: &[f64], scale: f64) -> Self {
        TestFunction {
            family: Family::SmoothBump,
            center: center.to_vec(),
            scale,
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.center.len();
        if !(1..=geom::MAX_DIM).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::NonPositiveRadius(self.scale));
        }
        if !self.amplitude.is_finite() || self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("non-finite test-function parameter".into()));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.center.len()
    }

    /// `x -> f(x / lambda)`.
    pub fn dilated(&self, lambda: f64) -> Self {
        TestFunction {
            center: self.center.iter().map(|c| c * lambda).collect(),
            scale: self.scale * lambda,
            ..self.clone()
        }
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        TestFunction {
            center: self.center.iter().zip(shift).map(|(c, s)| c + s).collect(),
            ..self.clone()
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        TestFunction {
            amplitude: self.amplitude * factor,
            ..self.clone()
        }
    }

    /// Checked evaluation.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        ensure_dim(self.dimension(), x.len())?;
        Ok(self.eval(x))
    }

    /// Checked gradient. At the kinks of the Lipschitz families the
    /// one-sided limit from the interior is returned.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dimension(), x.len())?;
        let mut g = [0.0; 3];
        self.grad_into(x, &mut g);
        Ok(g[..self.dimension()].to_vec())
    }

    fn normalised(&self, x: &[f64]) -> (geom::Scratch, f64) {
        let mut u = [0.0; 3];
        let mut r2 = 0.0;
        for i in 0..self.center.len() {
            u[i] = (x[i] - self.center[i]) / self.scale;
            r2 += u[i] * u[i];
        }
        (u, r2)
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        let (u, r2) = self.normalised(x);
        let a = self.amplitude;
        match self.family {
            Family::SmoothBump => {
                if r2 >= 1.0 {
                    0.0
                } else {
                    a * (-1.0 / (1.0 - r2)).exp()
                }
            }
            Family::TensorHat => {
                let k = (self.center.len() as f64).sqrt();
                let mut p = a;
                for ui in &u[..self.center.len()] {
                    let t = 1.0 - ui.abs() * k;
                    if t <= 0.0 {
                        return 0.0;
                    }
                    p *= t;
                }
                p
            }
            Family::TruncatedGaussian => {
                if r2 >= 1.0 {
                    0.0
                } else {
                    let edge = (-GAUSS_RATE).exp();
                    a * ((-GAUSS_RATE * r2).exp() - edge) / (1.0 - edge)
                }
            }
            Family::RadialPolynomialBump => {
                if r2 >= 1.0 {
                    0.0
                } else {
                    a * (1.0 - r2) * (1.0 - r2)
                }
            }
        }
    }

    pub(crate) fn grad_into(&self, x: &[f64], out: &mut geom::Scratch) {
        let n = self.center.len();
        let (u, r2) = self.normalised(x);
        let a = self.amplitude;
        *out = [0.0; 3];
        // d/dx = (1/scale) d/du
        let radial = |coef: f64, out: &mut geom::Scratch| {
            for i in 0..n {
                out[i] = coef * u[i] / self.scale;
            }
        };
        match self.family {
            Family::SmoothBump => {
                if r2 < 1.0 {
                    let q = 1.0 - r2;
                    radial(-2.0 * a * (-1.0 / q).exp() / (q * q), out);
                }
            }
            Family::TruncatedGaussian => {
                if r2 < 1.0 {
                    let edge = (-GAUSS_RATE).exp();
                    radial(-2.0 * GAUSS_RATE * a * (-GAUSS_RATE * r2).exp() / (1.0 - edge), out);
                }
            }
            Family::RadialPolynomialBump => {
                if r2 < 1.0 {
                    radial(-4.0 * a * (1.0 - r2), out);
                }
            }
            Family::TensorHat => {
                let k = (n as f64).sqrt();
                let mut t = [0.0; 3];
                for i in 0..n {
                    t[i] = 1.0 - u[i].abs() * k;
                    if t[i] < 0.0 {
                        return;
                    }
                }
                for i in 0..n {
                    // sign(0) = +1: limit from the u_i > 0 side
                    let s = if u[i] < 0.0 { -1.0 } else { 1.0 };
                    let mut g = -a * s * k / self.scale;
                    for (j, tj) in t.iter().enumerate().take(n) {
                        if j != i {
                            g *= tj;
                        }
                    }
                    out[i] = g;
                }
            }
        }
    }

    pub(crate) fn grad_norm(&self, x: &[f64]) -> f64 {
        let mut g = [0.0; 3];
        self.grad_into(x, &mut g);
        geom::norm(&g[..self.center.len()])
    }

    /// Global Lipschitz constant, `sup |grad f|`.
    pub fn lipschitz(&self) -> f64 {
        let a = self.amplitude.abs();
        let s = self.scale;
        match self.family {
            Family::TensorHat => a * self.center.len() as f64 / s,
            Family::RadialPolynomialBump => a * 8.0 / (3.0 * 3f64.sqrt()) / s,
            Family::TruncatedGaussian => {
                let edge = (-GAUSS_RATE).exp();
                a * (2.0 * GAUSS_RATE).sqrt() * (-0.5f64).exp() / (1.0 - edge) / s
            }
            Family::SmoothBump => a * smooth_bump_slope_max() / s,
        }
    }

    /// `sup |f|`.
    pub fn sup(&self) -> f64 {
        let peak = match self.family {
            Family::SmoothBump => (-1.0f64).exp(),
            _ => 1.0,
        };
        self.amplitude.abs() * peak
    }

    /// Axis-aligned box enclosing the support.
    pub fn support_box(&self) -> AxisBox {
        AxisBox {
            lower: self.center.iter().map(|c| c - self.scale).collect(),
            upper: self.center.iter().map(|c| c + self.scale).collect(),
        }
    }

    /// `(1/|Q|) int_Q f`.
    pub fn cube_average(&self, cube: &Cube, scheme: &QuadratureScheme) -> Result<f64> {
        ensure_dim(self.dimension(), cube.center.len())?;
        cube_average(self, cube, scheme)
    }
}

/// `max_{0 <= r < 1} 2 r exp(-1/(1-r^2)) / (1-r^2)^2`, by golden-section search.
fn smooth_bump_slope_max() -> f64 {
    let g = |r: f64| {
        let q = 1.0 - r * r;
        2.0 * r * (-1.0 / q).exp() / (q * q)
    };
    let (mut a, mut b) = (0.0f64, 0.99f64);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if g(c) > g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    g(0.5 * (a + b))
}

impl Field for TestFunction {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
    fn extent(&self) -> Extent {
        Extent::Compact {
            center: self.center.clone(),
            radius: self.scale,
        }
    }
}

/// `|grad f|` as a field.
pub struct GradientMagnitude<'a>(pub &'a TestFunction);

impl Field for GradientMagnitude<'_> {
    fn dim(&self) -> usize {
        self.0.dimension()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.0.grad_norm(x)
    }
    fn extent(&self) -> Extent {
        self.0.extent()
    }
}

/// `c * 1_{B(center, radius)}`.
#[derive(Clone, Debug)]
pub struct BallIndicator {
    pub center: Vec<f64>,
    pub radius: f64,
    pub height: f64,
}

impl Field for BallIndicator {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        if geom::dist(x, &self.center) < self.radius {
            self.height
        } else {
            0.0
        }
    }
    fn extent(&self) -> Extent {
        Extent::Compact {
            center: self.center.clone(),
            radius: self.radius,
        }
    }
}

/// Closure-backed field.
pub struct FnField<F> {
    dim: usize,
    extent: Extent,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnField<F> {
    pub fn new(dim: usize, extent: Extent, f: F) -> Self {
        FnField { dim, extent, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Field for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn extent(&self) -> Extent {
        self.extent.clone()
    }
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        ensure_dim(lower.len(), upper.len())?;
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::Invalid("box corners must satisfy lower < upper".into()));
        }
        Ok(AxisBox { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    /// Same box scaled about the origin by `lambda`.
    pub fn dilated(&self, lambda: f64) -> Self {
        AxisBox {
            lower: self.lower.iter().map(|v| v * lambda).collect(),
            upper: self.upper.iter().map(|v| v * lambda).collect(),
        }
    }
}

/// Cube `Q` with centre and side length `l(Q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Vec<f64>,
    pub side: f64,
}

impl Cube {
    pub fn new(center: Vec<f64>, side: f64) -> Result<Self> {
        if !(side > 0.0) {
            return Err(Error::NonPositiveRadius(side));
        }
        Ok(Cube { center, side })
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.center.len() as i32)
    }

    pub fn as_box(&self) -> AxisBox {
        let h = self.side / 2.0;
        AxisBox {
            lower: self.center.iter().map(|c| c - h).collect(),
            upper: self.center.iter().map(|c| c + h).collect(),
        }
    }
}

/// Average of any field over a cube; panel counts double until the value
/// settles to the scheme tolerance.
pub fn cube_average<F: Field + ?Sized>(f: &F, cube: &Cube, scheme: &QuadratureScheme) -> Result<f64> {
    let b = cube.as_box();
    let vol = cube.volume();
    let mut panels = 2usize;
    let mut prev = quadrature::integrate_box(&b, panels, scheme.radial_nodes.min(8), |x| f.value(x)) / vol;
    let mut last_err = f64::NAN;
    for _ in 0..scheme.max_refinements.max(1) + 2 {
        panels *= 2;
        let cur = quadrature::integrate_box(&b, panels, scheme.radial_nodes.min(8), |x| f.value(x)) / vol;
        last_err = (cur - prev).abs();
        if last_err <= scheme.rel_tol * cur.abs() + scheme.abs_floor {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergent {
        value: prev,
        error: last_err,
    })
}

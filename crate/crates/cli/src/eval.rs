//! Single operator evaluation for `subrep eval`.

use anyhow::{anyhow, bail, Result};
use clap::{Args, ValueEnum};
use subrep_core::norms::{lorentz_norm, lp_norm};
use subrep_core::operators::{
    default_mwc_radii, frac_derivative, maximal_mwc, potential_tw, riesz_potential, rough_maximal, TruncationGrid,
};
use subrep_core::{Cube, Family, QuadratureScheme, SphereSymbol, SymbolProfile, TestFunction, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Operator {
    Riesz,
    FracDerivative,
    Tw,
    RoughMaximal,
    Mwc,
    LpNorm,
    Lorentz,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub op: Operator,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// smooth_bump, tensor_hat, truncated_gaussian or radial_polynomial_bump.
    #[arg(long, default_value = "smooth_bump")]
    pub family: String,
    /// Comma-separated; defaults to the origin.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub center: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Evaluation point; defaults to the centre.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    /// Defaults to 0.5, or 1 for `tw`.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// `unit`, `radial_power:BETA` or `power_plus_one:BETA`, with pole at the origin.
    #[arg(long, default_value = "unit")]
    pub weight: String,
    /// `zero`, `cosine:K`, `sign:K` or `odd:C0;C1;...`.
    #[arg(long, default_value = "cosine:1")]
    pub omega: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long)]
    pub rel_tol: Option<f64>,
}

fn family(name: &str) -> Result<Family> {
    Family::ALL
        .iter()
        .copied()
        .find(|f| serde_json::to_value(f).ok().and_then(|v| v.as_str().map(|s| s == name)) == Some(true))
        .ok_or_else(|| anyhow!("unknown function family `{name}`"))
}

pub fn parse_weight(spec: &str, n: usize) -> Result<Weight> {
    let origin = vec![0.0; n];
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let beta = || arg.parse::<f64>().map_err(|_| anyhow!("weight `{spec}` needs a numeric exponent"));
    Ok(match kind {
        "unit" => Weight::unit(n),
        "radial_power" => Weight::radial_power(&origin, beta()?)?,
        "power_plus_one" => Weight::power_plus_one(&origin, beta()?)?,
        _ => bail!("unknown weight `{spec}`"),
    })
}

pub fn parse_symbol(spec: &str, n: usize) -> Result<SphereSymbol> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let k = || arg.parse::<u32>().map_err(|_| anyhow!("symbol `{spec}` needs an integer frequency"));
    let profile = match kind {
        "zero" => SymbolProfile::Zero,
        "cosine" => SymbolProfile::CosineHarmonic { k: k()?, amplitude: 1.0 },
        "sign" => SymbolProfile::SignHarmonic { k: k()?, amplitude: 1.0 },
        "odd" => SymbolProfile::OddPolynomial {
            coeffs: arg
                .split(';')
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| anyhow!("bad coefficients in `{spec}`"))?,
        },
        _ => bail!("unknown symbol `{spec}`"),
    };
    Ok(SphereSymbol::new(n, profile)?)
}

/// `(value, error)` of the requested operator.
pub fn evaluate(a: &EvalArgs) -> Result<(f64, f64)> {
    let n = a.dim;
    let center = a.center.clone().unwrap_or_else(|| vec![0.0; n]);
    let f = TestFunction::new(family(&a.family)?, center, a.scale, a.amplitude)?;
    let x = a.x.clone().unwrap_or_else(|| f.center.clone());
    if x.len() != n {
        bail!("--x has {} coordinates, expected {n}", x.len());
    }
    let mut scheme = QuadratureScheme::default();
    if let Some(t) = a.rel_tol {
        scheme = scheme.with_rel_tol(t);
    }
    scheme.validate()?;
    let alpha = a.alpha.unwrap_or(if a.op == Operator::Tw { 1.0 } else { 0.5 });
    Ok(match a.op {
        Operator::Riesz => {
            let q = riesz_potential(&f, alpha, &x, &scheme)?;
            (q.value, q.error)
        }
        Operator::FracDerivative => {
            let q = frac_derivative(&f, alpha, &x, &scheme)?;
            (q.value, q.error)
        }
        Operator::Tw => {
            let q = potential_tw(&f, &parse_weight(&a.weight, n)?, alpha, &x, &scheme)?;
            (q.value, q.error)
        }
        Operator::RoughMaximal => {
            let omega = parse_symbol(&a.omega, n)?;
            let m = rough_maximal(&f, &omega, &x, &TruncationGrid::for_support(&f, &x), &scheme)?;
            (m.value, m.error)
        }
        Operator::Mwc => {
            let m = maximal_mwc(&f, &parse_weight(&a.weight, n)?, &x, &default_mwc_radii(f.scale), &scheme)?;
            (m.value, m.error)
        }
        Operator::LpNorm => {
            let q = lp_norm(&f, &parse_weight(&a.weight, n)?, a.p, &f.support_box(), &scheme)?;
            (q.value, q.error)
        }
        Operator::Lorentz => {
            let cube = Cube::new(f.center.clone(), 2.0 * f.scale)?;
            (lorentz_norm(&f, a.p, a.q, &cube, a.samples)?, f64::NAN)
        }
    })
}

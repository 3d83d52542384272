//! TOML run configuration and its validation.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use subrep_core::operators::TruncationGrid;
use subrep_core::verify::PoincareVariant;
use subrep_core::{CheckId, Family, QuadratureScheme, SphereSymbol, SymbolProfile, TestFunction, Weight};

/// Configuration problem, located by field path and (when found) line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config error at line {l}, field `{}`: {}", self.field, self.message),
            None => write!(f, "config error, field `{}`: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("subrep-out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

impl Default for Output {
    fn default() -> Self {
        Output {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exponents {
    pub p: f64,
    pub d: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareConfig {
    /// Defaults to the first function's centre.
    pub cube_center: Option<Vec<f64>>,
    /// Defaults to twice the first function's scale.
    pub cube_side: Option<f64>,
    #[serde(default = "default_variant")]
    pub variant: PoincareVariant,
}

fn default_variant() -> PoincareVariant {
    PoincareVariant::Avg11
}

impl Default for PoincareConfig {
    fn default() -> Self {
        PoincareConfig {
            cube_center: None,
            cube_side: None,
            variant: default_variant(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HedbergConfig {
    pub x: Option<Vec<f64>>,
    pub r_values: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnuliConfig {
    pub x: Option<Vec<f64>>,
    #[serde(default = "default_annuli")]
    pub k: usize,
}

fn default_annuli() -> usize {
    10
}

impl Default for AnnuliConfig {
    fn default() -> Self {
        AnnuliConfig {
            x: None,
            k: default_annuli(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaConfig {
    pub a1: f64,
    pub a2: f64,
    #[serde(default = "one")]
    pub separation: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BbmConfig {
    /// Defaults to `1 - 2^{-k}`, `k = 1..=20`.
    pub alphas: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AhlforsConfig {
    /// Power `beta` of the weight `|x|^{-beta}`.
    #[serde(default = "half")]
    pub exponent: f64,
    /// Defaults to the dimension.
    pub d: Option<f64>,
    #[serde(default = "one")]
    pub r: f64,
    /// Centres `2^k e_1` for `k = 1..=count`.
    #[serde(default = "twelve")]
    pub count: u32,
}

fn half() -> f64 {
    0.5
}

fn twelve() -> u32 {
    12
}

impl Default for AhlforsConfig {
    fn default() -> Self {
        AhlforsConfig {
            exponent: half(),
            d: None,
            r: one(),
            count: twelve(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub functions: Vec<TestFunction>,
    #[serde(default)]
    pub weights: Vec<Weight>,
    /// Symbol profiles; the dimension comes from `dimension`.
    #[serde(default)]
    pub symbols: Vec<SymbolProfile>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub exponents: Vec<Exponents>,
    /// Explicit evaluation points; default is a grid over the support.
    pub points: Option<Vec<Vec<f64>>>,
    pub truncations: Option<TruncationGrid>,
    #[serde(default)]
    pub scheme: QuadratureScheme,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub poincare: PoincareConfig,
    #[serde(default)]
    pub hedberg: HedbergConfig,
    #[serde(default)]
    pub annuli: AnnuliConfig,
    pub beta: Option<BetaConfig>,
    #[serde(default)]
    pub bbm: BbmConfig,
    #[serde(default)]
    pub ahlfors: AhlforsConfig,
}

fn default_alphas() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

/// Parsed and validated configuration with defaults filled in.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub raw: RunConfig,
    pub checks: Vec<CheckId>,
    pub functions: Vec<TestFunction>,
    pub weights: Vec<Weight>,
    pub symbols: Vec<SphereSymbol>,
    pub exponents: Vec<Exponents>,
    pub bbm_alphas: Vec<f64>,
}

impl Resolved {
    pub fn function(&self) -> &TestFunction {
        &self.functions[0]
    }
    pub fn weight(&self) -> &Weight {
        &self.weights[0]
    }
    pub fn symbol(&self) -> &SphereSymbol {
        &self.symbols[0]
    }
    pub fn exponents(&self) -> Exponents {
        self.exponents[0]
    }
    pub fn dim(&self) -> usize {
        self.raw.dimension
    }
}

/// Parses TOML text and validates every range before any computation.
pub fn parse(src: &str) -> Result<Resolved, ConfigError> {
    let raw: RunConfig = toml::from_str(src).map_err(|e| {
        let line = e.span().map(|s| line_of(src, s.start));
        ConfigError {
            field: "<syntax>".into(),
            line,
            message: e.message().trim().to_string(),
        }
    })?;
    validate(raw).map_err(|mut e| {
        e.line = find_line(src, &e.field);
        e
    })
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Best-effort line of a field path such as `weights[1].exponent` or
/// `alphas[2]`.
pub fn find_line(src: &str, path: &str) -> Option<usize> {
    let lines: Vec<&str> = src.lines().collect();
    let mut start = 0usize;
    let mut found = None;
    for seg in path.split('.') {
        let (key, index) = match seg.split_once('[') {
            Some((k, rest)) => (k, rest.trim_end_matches(']').parse::<usize>().ok()),
            None => (seg, None),
        };
        let header = format!("[[{key}]]");
        let table = format!("[{key}]");
        let is_key = |l: &str| {
            let t = l.trim_start();
            t.starts_with(key) && t[key.len()..].trim_start().starts_with('=')
        };
        let mut hit = None;
        let mut seen = 0usize;
        for (i, l) in lines.iter().enumerate().skip(start) {
            let t = l.trim();
            if t == header {
                if index.map_or(true, |k| k == seen) {
                    hit = Some(i);
                    break;
                }
                seen += 1;
            } else if t == table || is_key(l) {
                hit = Some(i);
                break;
            }
        }
        match hit {
            Some(i) => {
                found = Some(i + 1);
                start = i;
            }
            None => break,
        }
    }
    found
}

fn err(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        line: None,
        message: message.into(),
    }
}

fn check_dim(field: String, n: usize, got: usize) -> Result<(), ConfigError> {
    if got == n {
        Ok(())
    } else {
        Err(err(field, format!("expected {n} coordinates, got {got}")))
    }
}

fn check_alpha(field: String, a: f64) -> Result<(), ConfigError> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(err(field, format!("alpha = {a} is not in (0, 1)")))
    }
}

pub fn validate(raw: RunConfig) -> Result<Resolved, ConfigError> {
    let n = raw.dimension;
    if !(1..=3).contains(&n) {
        return Err(err("dimension", format!("dimension {n} is not in 1..=3")));
    }
    let checks = raw
        .checks
        .iter()
        .enumerate()
        .map(|(i, c)| c.parse::<CheckId>().map_err(|e| err(format!("checks[{i}]"), e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, a) in raw.alphas.iter().enumerate() {
        check_alpha(format!("alphas[{i}]"), *a)?;
    }
    if raw.alphas.is_empty() {
        return Err(err("alphas", "at least one alpha is required"));
    }
    for (i, f) in raw.functions.iter().enumerate() {
        check_dim(format!("functions[{i}].center"), n, f.center.len())?;
        f.validate().map_err(|e| err(format!("functions[{i}]"), e.to_string()))?;
    }
    for (i, w) in raw.weights.iter().enumerate() {
        if let Weight::RadialPower { exponent, .. } | Weight::PowerPlusOne { exponent, .. } = w {
            if !(*exponent >= 0.0 && *exponent < n as f64) {
                return Err(err(
                    format!("weights[{i}].exponent"),
                    format!("beta = {exponent} is not in [0, {n})"),
                ));
            }
        }
        check_dim(format!("weights[{i}]"), n, w.dim())?;
        w.validate().map_err(|e| err(format!("weights[{i}]"), e.to_string()))?;
    }
    let symbols = raw
        .symbols
        .iter()
        .enumerate()
        .map(|(i, p)| SphereSymbol::new(n, p.clone()).map_err(|e| err(format!("symbols[{i}]"), e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, e) in raw.exponents.iter().enumerate() {
        if !(e.p > 1.0 && e.p < e.d) {
            return Err(err(format!("exponents[{i}].p"), format!("need 1 < p < d, got p = {}, d = {}", e.p, e.d)));
        }
    }
    if let Some(points) = &raw.points {
        if points.is_empty() {
            return Err(err("points", "point list is empty"));
        }
        for (i, p) in points.iter().enumerate() {
            check_dim(format!("points[{i}]"), n, p.len())?;
        }
    }
    if let Some(t) = &raw.truncations {
        TruncationGrid::new(t.t_min, t.t_max).map_err(|e| err("truncations", e.to_string()))?;
    }
    raw.scheme.validate().map_err(|e| err("scheme", e.to_string()))?;
    if raw.output.formats.is_empty() {
        return Err(err("output.formats", "at least one of json, csv"));
    }
    if let Some(c) = &raw.poincare.cube_center {
        check_dim("poincare.cube_center".into(), n, c.len())?;
    }
    if let Some(s) = raw.poincare.cube_side {
        if !(s > 0.0) {
            return Err(err("poincare.cube_side", format!("side {s} must be positive")));
        }
    }
    if let Some(x) = &raw.hedberg.x {
        check_dim("hedberg.x".into(), n, x.len())?;
    }
    if let Some(r) = &raw.hedberg.r_values {
        if r.is_empty() || r.iter().any(|v| !(*v > 0.0)) {
            return Err(err("hedberg.r_values", "radii must be positive and nonempty"));
        }
    }
    if let Some(x) = &raw.annuli.x {
        check_dim("annuli.x".into(), n, x.len())?;
    }
    if raw.annuli.k == 0 {
        return Err(err("annuli.k", "need at least one annulus"));
    }
    if let Some(b) = &raw.beta {
        let nf = n as f64;
        if !(b.a1 > 0.0 && b.a1 < nf) {
            return Err(err("beta.a1", format!("a1 = {} is not in (0, {n})", b.a1)));
        }
        if !(b.a2 > 0.0 && b.a2 < nf) {
            return Err(err("beta.a2", format!("a2 = {} is not in (0, {n})", b.a2)));
        }
        if !(b.a1 + b.a2 > nf) {
            return Err(err("beta.a2", format!("a1 + a2 = {} must exceed {n}", b.a1 + b.a2)));
        }
        if !(b.separation > 0.0) {
            return Err(err("beta.separation", "separation must be positive"));
        }
    }
    let bbm_alphas = raw
        .bbm
        .alphas
        .clone()
        .unwrap_or_else(|| (1..=20).map(|k| 1.0 - 2f64.powi(-k)).collect());
    for (i, a) in bbm_alphas.iter().enumerate() {
        check_alpha(format!("bbm.alphas[{i}]"), *a)?;
    }
    if bbm_alphas.is_empty() {
        return Err(err("bbm.alphas", "alpha sequence is empty"));
    }
    let ah = &raw.ahlfors;
    if !(ah.exponent > 0.0 && ah.exponent < n as f64) {
        return Err(err("ahlfors.exponent", format!("beta = {} is not in (0, {n})", ah.exponent)));
    }
    if !(ah.r > 0.0) || ah.count < 2 {
        return Err(err("ahlfors", "need r > 0 and at least 2 centres"));
    }

    let functions = if raw.functions.is_empty() {
        vec![TestFunction::smooth_bump(&vec![0.0; n], 1.0)]
    } else {
        raw.functions.clone()
    };
    let weights = if raw.weights.is_empty() {
        vec![Weight::unit(n)]
    } else {
        raw.weights.clone()
    };
    let symbols = if symbols.is_empty() {
        vec![if n == 2 {
            SphereSymbol::cosine(1)
        } else {
            SphereSymbol::new(n, SymbolProfile::OddPolynomial { coeffs: vec![1.0] }).expect("valid default symbol")
        }]
    } else {
        symbols
    };
    let exponents = if raw.exponents.is_empty() {
        vec![Exponents {
            p: if n == 1 { 1.5 } else { 1.5f64.min(n as f64 - 0.25) },
            d: if n == 1 { 2.0 } else { n as f64 },
        }]
    } else {
        raw.exponents.clone()
    };
    Ok(Resolved {
        raw,
        checks,
        functions,
        weights,
        symbols,
        exponents,
        bbm_alphas,
    })
}

/// The four families at the centre and scale of `f`.
pub fn family_of(f: &TestFunction) -> Vec<TestFunction> {
    Family::ALL
        .iter()
        .map(|fam| TestFunction {
            family: *fam,
            ..f.clone()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let r = parse("dimension = 2\nchecks = [\"bbm_limit\"]\n").unwrap();
        assert_eq!(r.checks, vec![CheckId::BbmLimit]);
        assert_eq!(r.bbm_alphas.len(), 20);
        assert_eq!(r.functions.len(), 1);
        assert_eq!(r.symbols[0], SphereSymbol::cosine(1));
    }

    #[test]
    fn bad_alpha_names_field_and_line() {
        let e = parse("dimension = 2\nchecks = []\nalphas = [0.5, 1.5]\n").unwrap_err();
        assert_eq!(e.field, "alphas[1]");
        assert_eq!(e.line, Some(3));
    }

    #[test]
    fn bad_weight_exponent_located_in_its_table() {
        let src = "dimension = 2\n\n[[weights]]\nkind = \"radial_power\"\npole = [0.0, 0.0]\nexponent = 0.5\n\n[[weights]]\nkind = \"radial_power\"\npole = [0.0, 0.0]\nexponent = 2.5\n";
        let e = parse(src).unwrap_err();
        assert_eq!(e.field, "weights[1].exponent");
        assert_eq!(e.line, Some(11));
    }

    #[test]
    fn unknown_check_and_syntax_errors() {
        let e = parse("dimension = 2\nchecks = [\"nope\"]\n").unwrap_err();
        assert_eq!(e.field, "checks[0]");
        let e = parse("dimension = 2\nbogus = 1\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("bogus"), "{}", e.message);
    }

    #[test]
    fn p_must_sit_below_d() {
        let e = parse("dimension = 2\n[[exponents]]\np = 2.5\nd = 2.0\n").unwrap_err();
        assert_eq!(e.field, "exponents[0].p");
        assert_eq!(e.line, Some(3));
    }
}

//! Dispatch from check ids to the core checks.

use serde_json::json;
use subrep_core::verify::{self, default_points};
use subrep_core::weights::Weight;
use subrep_core::{AxisBox, CheckId, CheckReport, Cube, Result};

use crate::config::{family_of, Resolved};

/// Runs one check; evaluation failures become failed reports.
pub fn run_check(id: CheckId, cfg: &Resolved) -> CheckReport {
    let started = std::time::Instant::now();
    let mut report = dispatch(id, cfg).unwrap_or_else(|e| {
        CheckReport::failed(id, serde_json::to_value(&cfg.raw).unwrap_or(json!(null)), &e)
    });
    report.wall_time_s = started.elapsed().as_secs_f64();
    report
}

fn dispatch(id: CheckId, cfg: &Resolved) -> Result<CheckReport> {
    let n = cfg.dim();
    let f = cfg.function();
    let w = cfg.weight();
    let omega = cfg.symbol();
    let scheme = &cfg.raw.scheme;
    let alphas = &cfg.raw.alphas;
    let points = cfg.raw.points.clone().unwrap_or_else(|| default_points(f));
    let tgrid = cfg.raw.truncations.as_ref();
    match id {
        CheckId::SubrepresentationIdentity => verify::check_subrepresentation_identity(f, w, &points, scheme),
        CheckId::RoughSubrepresentation => verify::check_rough_subrepresentation(f, w, omega, &points, tgrid, scheme),
        CheckId::FractionalDomination => verify::check_fractional_domination(f, alphas, omega, &points, tgrid, scheme),
        CheckId::LemmaDomination => verify::check_lemma_domination(f, alphas[0], &points, scheme),
        CheckId::PoincareBbm => {
            let p = &cfg.raw.poincare;
            let cube = Cube::new(
                p.cube_center.clone().unwrap_or_else(|| f.center.clone()),
                p.cube_side.unwrap_or(2.0 * f.scale),
            )?;
            verify::check_poincare_bbm(f, &cube, alphas, p.variant, scheme)
        }
        CheckId::IdentityFractional => verify::check_identity_fractional(f, w, alphas, &points, scheme),
        CheckId::RoughFractional => verify::check_rough_fractional(f, w, alphas, omega, &points, tgrid, scheme),
        CheckId::AnnuliAbsorption => {
            let x = cfg.raw.annuli.x.clone().unwrap_or_else(|| f.center.clone());
            verify::check_annuli_absorption(&subrep_core::functions::GradientMagnitude(f), &x, cfg.raw.annuli.k, scheme)
        }
        CheckId::BetaIdentity => {
            let (a1, a2, sep) = match cfg.raw.beta {
                Some(b) => (b.a1, b.a2, b.separation),
                None => {
                    let a = 0.8 * n as f64;
                    (a, a, 1.0)
                }
            };
            let x1 = vec![0.0; n];
            let mut x2 = vec![0.0; n];
            x2[0] = sep;
            verify::check_beta_identity(n, a1, a2, &x1, &x2, scheme)
        }
        CheckId::HedbergSplit => {
            let e = cfg.exponents();
            let h = &cfg.raw.hedberg;
            let x = h.x.clone().unwrap_or_else(|| offset_point(f));
            let radii = h
                .r_values
                .clone()
                .unwrap_or_else(|| subrep_core::geom::log_space(0.05 * f.scale, 4.0 * f.scale, 8));
            verify::check_hedberg_split(f, w, e.p, e.d, &x, &radii, scheme)
        }
        CheckId::SobolevMapping => {
            let e = cfg.exponents();
            let family = if cfg.functions.len() > 1 {
                cfg.functions.clone()
            } else {
                family_of(f)
            };
            let domain = AxisBox::new(
                f.center.iter().map(|c| c - 2.0 * f.scale).collect(),
                f.center.iter().map(|c| c + 2.0 * f.scale).collect(),
            )?;
            verify::check_sobolev_mapping(&family, w, e.p, e.d, &domain, scheme)
        }
        CheckId::BbmLimit => verify::check_bbm_limit(n, &cfg.bbm_alphas),
        CheckId::LowerAhlforsCounterexample => {
            let a = &cfg.raw.ahlfors;
            let weight = Weight::radial_power(&vec![0.0; n], a.exponent)?;
            let centers: Vec<Vec<f64>> = (1..=a.count as i32)
                .map(|k| {
                    let mut c = vec![0.0; n];
                    c[0] = 2f64.powi(k);
                    c
                })
                .collect();
            verify::check_lower_ahlfors_counterexample(&weight, a.d.unwrap_or(n as f64), &centers, a.r)
        }
    }
}

/// A point inside the support, off the centre.
fn offset_point(f: &subrep_core::TestFunction) -> Vec<f64> {
    let mut x = f.center.clone();
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += f.scale * if i == 0 { 0.3 } else { 0.2 };
    }
    x
}

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use anyhow::{bail, Context, Result};
use momentlbm::stability::{dispersion_curves, theoretical_modes, BranchLabel, DispersionCurves, LinearizationPoint, Model};
use serde::{Deserialize, Serialize};

use crate::output::write_rows;

pub const THEORY_FILE: &str = "dispersion_theory.csv";
pub const SUMMARY_FILE: &str = "dispersion_summary.csv";
/// Default viscosity for dispersion curves.
pub const DEFAULT_NU: f64 = 1e-4;

pub const HYDRO: [BranchLabel; 3] = [BranchLabel::AcousticPlus, BranchLabel::Shear, BranchLabel::AcousticMinus];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryRow {
    pub kx: f64,
    pub shear_re: f64,
    pub shear_im: f64,
    pub acoustic_plus_re: f64,
    pub acoustic_plus_im: f64,
    pub acoustic_minus_re: f64,
    pub acoustic_minus_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionSummary {
    pub model: String,
    pub nu: f64,
    pub samples: usize,
    pub slope_acoustic_plus: f64,
    pub slope_acoustic_minus: f64,
    pub max_abs_shear_re: f64,
    /// Largest |Re ω| difference to NOCM-MRT on the hydrodynamic branches
    /// for kx ≤ π/2.
    pub gap_re_vs_nocm: f64,
    /// The same for Im ω.
    pub gap_im_vs_nocm: f64,
    pub flagged_samples: usize,
}

pub fn branches_name(model: Model) -> String {
    format!("dispersion_{model}.csv")
}

pub fn compute(models: &[Model], nu: f64, u: [f64; 2], samples: usize) -> Result<Vec<DispersionCurves>> {
    if models.is_empty() {
        bail!("model list is empty");
    }
    if !(nu > 0.0) {
        bail!("viscosity must be positive");
    }
    models
        .iter()
        .map(|&m| Ok(dispersion_curves(m, samples, LinearizationPoint::new(u, nu))?))
        .collect()
}

/// Max pointwise (Re, Im) gap between two models' hydrodynamic branches
/// over kx ≤ π/2.
pub fn hydro_gap(a: &DispersionCurves, b: &DispersionCurves) -> (f64, f64) {
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for label in HYDRO {
        let (Some(x), Some(y)) = (a.branch(label), b.branch(label)) else {
            return (f64::INFINITY, f64::INFINITY);
        };
        for (i, k) in a.kx.iter().enumerate() {
            if *k > FRAC_PI_2 + 1e-12 {
                break;
            }
            re = re.max((x.re_omega[i] - y.re_omega[i]).abs());
            im = im.max((x.im_omega[i] - y.im_omega[i]).abs());
        }
    }
    (re, im)
}

pub fn summarize(curves: &[DispersionCurves], nu: f64) -> Vec<DispersionSummary> {
    let nocm = curves.iter().find(|c| c.model == Model::NocmMrt);
    curves
        .iter()
        .map(|c| {
            let (gap_re, gap_im) = nocm.map_or((f64::NAN, f64::NAN), |n| hydro_gap(c, n));
            DispersionSummary {
                model: c.model.to_string(),
                nu,
                samples: c.kx.len(),
                slope_acoustic_plus: c.small_k_slope(BranchLabel::AcousticPlus).unwrap_or(f64::NAN),
                slope_acoustic_minus: c.small_k_slope(BranchLabel::AcousticMinus).unwrap_or(f64::NAN),
                max_abs_shear_re: c
                    .branch(BranchLabel::Shear)
                    .map_or(f64::NAN, |b| b.re_omega.iter().fold(0.0, |m, v| m.max(v.abs()))),
                gap_re_vs_nocm: gap_re,
                gap_im_vs_nocm: gap_im,
                flagged_samples: c.flagged.iter().filter(|f| **f).count(),
            }
        })
        .collect()
}

fn write_branches(c: &DispersionCurves, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header = vec!["kx".to_string(), "flagged".to_string()];
    for b in &c.branches {
        header.push(format!("re_{}", b.label));
        header.push(format!("im_{}", b.label));
    }
    w.write_record(&header)?;
    for (i, k) in c.kx.iter().enumerate() {
        let mut rec = vec![k.to_string(), u8::from(c.flagged[i]).to_string()];
        for b in &c.branches {
            rec.push(b.re_omega[i].to_string());
            rec.push(b.im_omega[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn theory_rows(kx: &[f64], u: [f64; 2], nu: f64) -> Vec<TheoryRow> {
    kx.iter()
        .map(|&k| {
            // Bulk viscosity is not modelled separately: μ_v = 0.
            let t = theoretical_modes([k, 0.0], u, nu, 0.0, 2);
            TheoryRow {
                kx: k,
                shear_re: t.shear.re,
                shear_im: t.shear.im,
                acoustic_plus_re: t.acoustic_plus.re,
                acoustic_plus_im: t.acoustic_plus.im,
                acoustic_minus_re: t.acoustic_minus.re,
                acoustic_minus_im: t.acoustic_minus.im,
            }
        })
        .collect()
}

/// Writes one branches file per model, the analytic modes and the summary.
pub fn write(curves: &[DispersionCurves], nu: f64, u: [f64; 2], out_dir: &Path) -> Result<Vec<DispersionSummary>> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for c in curves {
        write_branches(c, &out_dir.join(branches_name(c.model)))?;
    }
    if let Some(c) = curves.first() {
        write_rows(&out_dir.join(THEORY_FILE), &theory_rows(&c.kx, u, nu))?;
    }
    let summary = summarize(curves, nu);
    write_rows(&out_dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

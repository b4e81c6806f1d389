use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use momentlbm::io::write_pgm;
use momentlbm::stability::{dissipation_map, DissipationMap, LinearizationPoint, Model};
use serde::{Deserialize, Serialize};

use crate::output::write_rows;

pub const SUMMARY_FILE: &str = "stability_summary.csv";
pub const COMPARISON_FILE: &str = "home_vs_nocm.csv";

/// Background velocities of the four reference map rows.
pub const REFERENCE_VELOCITIES: [[f64; 2]; 4] = [[0.0, 0.0], [0.1, 0.1], [0.2, 0.2], [0.3, 0.3]];
/// Viscosity used for the preset maps.
pub const REFERENCE_NU: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRequest {
    pub models: Vec<Model>,
    pub velocities: Vec<[f64; 2]>,
    pub nus: Vec<f64>,
    pub grid: usize,
}

impl StabilityRequest {
    /// All four models at the four preset velocities.
    pub fn reference(grid: usize) -> Self {
        StabilityRequest {
            models: Model::ALL.to_vec(),
            velocities: REFERENCE_VELOCITIES.to_vec(),
            nus: vec![REFERENCE_NU],
            grid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            bail!("model list is empty");
        }
        if self.velocities.is_empty() {
            bail!("velocity list is empty");
        }
        if self.nus.is_empty() {
            bail!("viscosity list is empty");
        }
        if self.nus.iter().any(|nu| !(*nu > 0.0)) {
            bail!("viscosities must be positive");
        }
        if self.grid < 2 {
            bail!("grid needs at least 2 samples per axis");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub ix: usize,
    pub iy: usize,
    pub kx: f64,
    pub ky: f64,
    pub max_abs_lambda: f64,
    pub max_im_omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourRow {
    pub kx0: f64,
    pub ky0: f64,
    pub kx1: f64,
    pub ky1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSummary {
    pub panel: String,
    pub model: String,
    pub ux: f64,
    pub uy: f64,
    pub nu: f64,
    pub grid: usize,
    pub max_abs_lambda: f64,
    pub min_im_omega: f64,
    pub max_im_omega: f64,
    pub unstable_count: usize,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub ux: f64,
    pub uy: f64,
    pub nu: f64,
    pub max_abs_lambda_deviation: f64,
}

pub fn panel_name(model: Model, u: [f64; 2], nu: f64) -> String {
    format!("{model}_u{}_{}_nu{nu:e}", u[0], u[1])
}

/// Largest pointwise gap between two spectral-radius maps on the same grid.
pub fn max_deviation(a: &DissipationMap, b: &DissipationMap) -> f64 {
    a.max_abs_lambda
        .iter()
        .zip(&b.max_abs_lambda)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn summarize(map: &DissipationMap) -> PanelSummary {
    let fold = |init: f64, f: fn(f64, f64) -> f64, v: &[f64]| v.iter().copied().fold(init, f);
    PanelSummary {
        panel: panel_name(map.model, map.point.u_bar, map.point.nu),
        model: map.model.to_string(),
        ux: map.point.u_bar[0],
        uy: map.point.u_bar[1],
        nu: map.point.nu,
        grid: map.n(),
        max_abs_lambda: fold(f64::NEG_INFINITY, f64::max, &map.max_abs_lambda),
        min_im_omega: fold(f64::INFINITY, f64::min, &map.max_im_omega),
        max_im_omega: fold(f64::NEG_INFINITY, f64::max, &map.max_im_omega),
        unstable_count: map.unstable_count(),
        stable: map.unstable_count() == 0,
    }
}

/// Computes every requested map. Order: ν outermost, then velocity, then
/// model.
pub fn compute(req: &StabilityRequest) -> Result<Vec<DissipationMap>> {
    req.validate()?;
    let mut maps = Vec::new();
    for &nu in &req.nus {
        for &u in &req.velocities {
            for &model in &req.models {
                maps.push(dissipation_map(model, req.grid, LinearizationPoint::new(u, nu))?);
            }
        }
    }
    Ok(maps)
}

pub fn comparisons(maps: &[DissipationMap]) -> Vec<Comparison> {
    let mut out = Vec::new();
    for h in maps.iter().filter(|m| m.model == Model::Home) {
        if let Some(n) = maps
            .iter()
            .find(|m| m.model == Model::NocmMrt && m.point == h.point)
        {
            out.push(Comparison {
                ux: h.point.u_bar[0],
                uy: h.point.u_bar[1],
                nu: h.point.nu,
                max_abs_lambda_deviation: max_deviation(h, n),
            });
        }
    }
    out
}

/// Writes `<panel>.csv`, `<panel>_contour.csv` and `<panel>.pgm` per map
/// plus the summary and HOME/NOCM comparison tables.
pub fn write(maps: &[DissipationMap], out_dir: &Path) -> Result<Vec<PanelSummary>> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut summaries = Vec::with_capacity(maps.len());
    for map in maps {
        let s = summarize(map);
        let n = map.n();
        let cells: Vec<CellRow> = (0..n * n)
            .map(|idx| {
                let (iy, ix) = (idx / n, idx % n);
                CellRow {
                    ix,
                    iy,
                    kx: map.k[ix],
                    ky: map.k[iy],
                    max_abs_lambda: map.max_abs_lambda[idx],
                    max_im_omega: map.max_im_omega[idx],
                }
            })
            .collect();
        write_rows(&out_dir.join(format!("{}.csv", s.panel)), &cells)?;
        let contour: Vec<ContourRow> = map
            .zero_contour()
            .into_iter()
            .map(|[a, b]| ContourRow {
                kx0: a[0],
                ky0: a[1],
                kx1: b[0],
                ky1: b[1],
            })
            .collect();
        write_rows(&out_dir.join(format!("{}_contour.csv", s.panel)), &contour)?;
        // Dissipation map: grey level follows max Im(ω) over the panel's range.
        let path = out_dir.join(format!("{}.pgm", s.panel));
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_pgm(BufWriter::new(f), n, n, &map.max_im_omega, s.min_im_omega, s.max_im_omega)?;
        summaries.push(s);
    }
    write_rows(&out_dir.join(SUMMARY_FILE), &summaries)?;
    write_rows(&out_dir.join(COMPARISON_FILE), &comparisons(maps))?;
    Ok(summaries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_model_list_is_rejected() {
        let mut req = StabilityRequest::reference(8);
        req.models.clear();
        assert!(compute(&req).unwrap_err().to_string().contains("model list"));
    }

    #[test]
    fn preset_covers_sixteen_panels() {
        let req = StabilityRequest::reference(4);
        let maps = compute(&req).unwrap();
        assert_eq!(maps.len(), 16);
        assert_eq!(comparisons(&maps).len(), 4);
    }

    #[test]
    fn bgk_at_rest_is_stable() {
        let req = StabilityRequest {
            models: vec![Model::Bgk],
            velocities: vec![[0.0, 0.0]],
            nus: vec![1e-3],
            grid: 16,
        };
        let maps = compute(&req).unwrap();
        assert!(summarize(&maps[0]).stable);
    }
}

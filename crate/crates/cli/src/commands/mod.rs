pub mod dispersion;
pub mod quant_sweep;
pub mod simulate;
pub mod stability;

use std::fmt::Write as _;

use momentlbm::moments::component_count;
use momentlbm::quant::{BitPreset, QuantSpec};
use momentlbm::LatticeKind;

use crate::config::{preset_version, ScenarioKind, Settings};

/// Human-readable overview of lattices, presets and storage costs.
pub fn info() -> anyhow::Result<String> {
    let mut s = String::new();
    writeln!(s, "momentlbm {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(s, "threads: {}", rayon::current_num_threads())?;
    writeln!(s, "lattices:")?;
    for k in [LatticeKind::D2Q9, LatticeKind::D3Q19, LatticeKind::D3Q27] {
        let c = component_count(k.dims());
        writeln!(s, "  {k}: q = {}, {c} stored moments, f64 {} B/node", k.q(), 8 * c)?;
    }
    writeln!(s, "scenario presets (version {}):", preset_version()?)?;
    for kind in ScenarioKind::ALL {
        let spec = Settings::for_scenario(kind).resolve()?;
        let dims: Vec<String> = spec.dims[..spec.lattice.dims()].iter().map(|d| d.to_string()).collect();
        writeln!(
            s,
            "  {kind}: {} {} nu = {:.3e}, {} steps",
            spec.lattice,
            dims.join("x"),
            spec.nu,
            spec.steps
        )?;
    }
    writeln!(s, "bit presets (bytes/node 2D, 3D):")?;
    for p in BitPreset::PRESETS {
        let b2 = QuantSpec::bit_allocation(2, p)?.bytes_per_node();
        let b3 = QuantSpec::bit_allocation(3, p)?.bytes_per_node();
        writeln!(s, "  {p}: {b2}, {b3}")?;
    }
    Ok(s)
}

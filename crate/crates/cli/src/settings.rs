//! Command sections of the configuration file.

use omitsense_core::config::{Dimension, Section};
use omitsense_core::time_domain::SimulationConfig;
use omitsense_core::ConfigDocument;

use crate::error::CliError;
use crate::CliResult;

pub const SECTIONS: &[&str] = &["steady", "spectrum", "kst", "beta", "linearity", "solver", "simulate", "sense"];

pub fn reject_unknown_sections(doc: &ConfigDocument) -> CliResult<()> {
    match doc.sections.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        Some(k) => Err(CliError::Config(format!("unknown section [{k}]"))),
        None => Ok(()),
    }
}

/// A grid given either as `key = v1, v2, ... unit` or as
/// `key_range = lo, hi unit` with `points = n`.
pub fn grid(section: &Section, key: &str, dim: Dimension) -> CliResult<Option<Vec<f64>>> {
    let range_key = format!("{key}_range");
    let list = section.list(key, dim)?;
    let range = section.list(&range_key, dim)?;
    let points = section.count("points")?;
    match (list, range) {
        (Some(_), Some(_)) => Err(CliError::Config(format!(
            "[{}]: give either `{key}` or `{range_key}`, not both",
            section.name
        ))),
        (Some(v), None) => {
            if v.is_empty() {
                return Err(CliError::Config(format!("[{}]: `{key}` list is empty", section.name)));
            }
            Ok(Some(v))
        }
        (None, Some(r)) => {
            if r.len() != 2 {
                return Err(CliError::Config(format!("[{}]: `{range_key}` needs two values", section.name)));
            }
            let n = points.ok_or_else(|| CliError::Config(format!("[{}]: `{range_key}` needs `points`", section.name)))?;
            if n < 2 {
                return Err(CliError::Config(format!("[{}]: `points` must be at least 2", section.name)));
            }
            let (lo, hi) = (r[0], r[1]);
            Ok(Some((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()))
        }
        (None, None) => Ok(None),
    }
}

pub fn required_grid(section: &Section, key: &str, dim: Dimension) -> CliResult<Vec<f64>> {
    grid(section, key, dim)?.ok_or_else(|| {
        CliError::Config(format!("[{}]: missing `{key}` (or `{key}_range` with `points`)", section.name))
    })
}

pub fn ascending(name: &str, v: &[f64]) -> CliResult<()> {
    if v.windows(2).all(|w| w[1] > w[0]) {
        Ok(())
    } else {
        Err(CliError::Config(format!("`{name}` must be strictly ascending")))
    }
}

/// `[solver]` block; every key optional.
pub fn solver(doc: &ConfigDocument, output_field: bool) -> CliResult<SimulationConfig<f64>> {
    let s = doc.section("solver");
    s.reject_unknown(&["duration", "transient_cut", "rel_tol", "abs_tol", "record_stride"])?;
    let d = SimulationConfig::<f64>::default();
    let sim = SimulationConfig {
        duration: s.scalar("duration", Dimension::Time)?.unwrap_or(d.duration),
        transient_cut: s.scalar("transient_cut", Dimension::Time)?.unwrap_or(d.transient_cut),
        solver_rel_tol: s.scalar("rel_tol", Dimension::Dimensionless)?.unwrap_or(d.solver_rel_tol),
        solver_abs_tol: s.scalar("abs_tol", Dimension::Dimensionless)?.unwrap_or(d.solver_abs_tol),
        record_stride: s.count("record_stride")?.unwrap_or(d.record_stride),
        output_field,
    };
    sim.validate()?;
    Ok(sim)
}

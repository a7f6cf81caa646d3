use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stream::{stream_from_unit, unit_draws};
use super::{convex_then_gd, gamma_for_mrr, mean_std, StudySetup};
use crate::alloc::{implied_mnrcs, AllocationProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrsConfig {
    /// Max-to-min rate ratios to sweep.
    pub mrr: Vec<f64>,
    pub segments: usize,
    pub seed: u64,
}

/// Efficiency of a single average-rate allocation over a variable stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrsRow {
    pub mrr: f64,
    pub gamma_max: f64,
    pub segments: usize,
    /// Mean over segments of `U_crs / U_segment`, in percent.
    pub eps_crs: f64,
    pub std_eps_crs: f64,
    pub min_eps_crs: f64,
}

/// Compare one allocation sized for the average rates against per-segment
/// optimization on streams of growing rate variation.
pub fn run_crs_study(setup: &StudySetup, cfg: &CrsConfig) -> Result<Vec<CrsRow>> {
    if cfg.mrr.is_empty() || cfg.segments == 0 {
        return Err(Error::Config("rate-ratio sweep and segment count must be non-empty".into()));
    }
    let base = setup.problem()?;
    let (_, fixed) = convex_then_gd(&base, setup.gd)?;
    if !fixed.feasible {
        return Err(Error::Config("average-rate problem is infeasible".into()));
    }
    let unit = unit_draws(setup.layers.len(), cfg.segments, cfg.seed);
    let row = |&mrr: &f64| -> Result<CrsRow> {
        let gamma_max = gamma_for_mrr(mrr)?;
        let stream = stream_from_unit(&setup.layers, gamma_max, &unit);
        let ratios: Vec<f64> = (0..stream.len())
            .map(|k| -> Result<f64> {
                let p = AllocationProblem::new(stream.layers(k), setup.classes.clone(), setup.n_max, setup.code)?;
                let crs = p.utility(&implied_mnrcs(&p, &fixed.symbols, true))?;
                let (_, own) = convex_then_gd(&p, setup.gd)?;
                let best = if own.feasible { own.utility.max(crs) } else { crs };
                Ok(if best > 0.0 { crs / best } else { 1.0 })
            })
            .collect::<Result<_>>()?;
        let pct: Vec<f64> = ratios.iter().map(|r| r * 100.0).collect();
        let (m, s) = mean_std(&pct);
        Ok(CrsRow {
            mrr,
            gamma_max,
            segments: cfg.segments,
            eps_crs: m,
            std_eps_crs: s,
            min_eps_crs: pct.iter().copied().fold(f64::INFINITY, f64::min),
        })
    };
    if setup.parallel {
        cfg.mrr.par_iter().map(row).collect()
    } else {
        cfg.mrr.iter().map(row).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::GdOptions;
    use crate::outage::{CodeParams, LayerSpec};
    use crate::population::{ClientClass, DistributionPreset};

    #[test]
    fn constant_rate_is_fully_efficient() {
        let c = ClientClass::new(3, 1.0, DistributionPreset::DeltaIV.distribution(), vec![0.4, 0.3, 0.3])
            .unwrap()
            .fit()
            .unwrap();
        let setup = StudySetup {
            layers: vec![LayerSpec::new(377, 1e-4), LayerSpec::new(1519, 4e-4), LayerSpec::new(7005, 5e-4)],
            classes: vec![c],
            n_max: 14_000,
            code: CodeParams::default(),
            grid: 50,
            gd: GdOptions::default(),
            parallel: true,
        };
        let rows = run_crs_study(&setup, &CrsConfig { mrr: vec![1.0, 3.0], segments: 10, seed: 1 }).unwrap();
        assert_eq!(rows[0].eps_crs, 100.0);
        assert!(rows[1].eps_crs <= 100.0);
    }
}

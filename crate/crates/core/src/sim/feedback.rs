use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{convex_then_gd, derive_seed, efficiency_percent, mean_std, reference_optimum, StudySetup};
use crate::alloc::AllocationProblem;
use crate::error::{Error, Result};
use crate::population::{fit_parametric_cdf, sample_clients, subsample_feedback, ClientClass, RcDistribution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackConfig {
    /// Clients sampled per class.
    pub pool_size: usize,
    pub csfr: Vec<f64>,
    pub repetitions: usize,
    pub seed: u64,
}

/// Efficiency statistics at one feedback ratio, in percent of the
/// full-population optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRow {
    pub csfr: f64,
    pub repetitions: usize,
    pub mean_eps_convex: f64,
    pub std_eps_convex: f64,
    pub mean_eps_gd: f64,
    pub std_eps_gd: f64,
    pub mean_fit_p: f64,
    pub std_fit_p: f64,
}

fn with_samples(classes: &[ClientClass], samples: Vec<RcDistribution>) -> Result<Vec<ClientClass>> {
    classes
        .iter()
        .zip(samples)
        .map(|(c, dist)| {
            let fitted = fit_parametric_cdf(&dist)?.fitted;
            Ok(ClientClass { dist, fitted: Some(fitted), ..c.clone() })
        })
        .collect()
}

/// Allocate from a fraction of client reports and score the result on the
/// whole population.
pub fn run_reduced_feedback(setup: &StudySetup, cfg: &FeedbackConfig) -> Result<Vec<FeedbackRow>> {
    if cfg.csfr.is_empty() {
        return Err(Error::Config("feedback sweep is empty".into()));
    }
    if cfg.repetitions == 0 || cfg.pool_size == 0 {
        return Err(Error::Config("feedback study needs repetitions >= 1 and a non-empty pool".into()));
    }
    let pools: Vec<Vec<f64>> = setup
        .classes
        .iter()
        .enumerate()
        .map(|(m, c)| sample_clients(&c.dist, cfg.pool_size, derive_seed(cfg.seed, m as u64)))
        .collect::<Result<_>>()?;
    let full_classes = with_samples(
        &setup.classes,
        pools.iter().map(|p| RcDistribution::empirical(p.clone())).collect::<Result<_>>()?,
    )?;
    let full = AllocationProblem::new(setup.layers.clone(), full_classes, setup.n_max, setup.code)?;
    let (cv, gd) = convex_then_gd(&full, setup.gd)?;
    let u_opt = reference_optimum(&full, setup.exhaustive_options(), &[&cv, &gd])?;
    if !u_opt.is_finite() {
        return Err(Error::Config("feedback scenario is infeasible".into()));
    }

    let jobs: Vec<(usize, usize)> =
        (0..cfg.csfr.len()).flat_map(|i| (0..cfg.repetitions).map(move |r| (i, r))).collect();
    let run = |&(i, r): &(usize, usize)| -> Result<(f64, f64, f64)> {
        let csfr = cfg.csfr[i];
        let seed = derive_seed(cfg.seed, 1_000_003 + (i * cfg.repetitions + r) as u64);
        let subs = pools
            .iter()
            .enumerate()
            .map(|(m, p)| subsample_feedback(p, csfr, derive_seed(seed, m as u64)))
            .collect::<Result<Vec<_>>>()?;
        let classes = with_samples(&setup.classes, subs)?;
        let fit_p = classes[0].fitted.map_or(f64::NAN, |f| f.p);
        let reduced = AllocationProblem::new(setup.layers.clone(), classes, setup.n_max, setup.code)?;
        let (cv, gd) = convex_then_gd(&reduced, setup.gd)?;
        let score = |a: &crate::alloc::Allocation| -> Result<f64> {
            Ok(if a.feasible { efficiency_percent(full.utility(&a.deltas)?, u_opt) } else { 0.0 })
        };
        Ok((score(&cv)?, score(&gd)?, fit_p))
    };
    let results: Vec<(f64, f64, f64)> = if setup.parallel {
        jobs.par_iter().map(run).collect::<Result<_>>()?
    } else {
        jobs.iter().map(run).collect::<Result<_>>()?
    };
    Ok(cfg
        .csfr
        .iter()
        .enumerate()
        .map(|(i, &csfr)| {
            let chunk = &results[i * cfg.repetitions..(i + 1) * cfg.repetitions];
            let (mc, sc) = mean_std(&chunk.iter().map(|r| r.0).collect::<Vec<_>>());
            let (mg, sg) = mean_std(&chunk.iter().map(|r| r.1).collect::<Vec<_>>());
            let (mp, sp) = mean_std(&chunk.iter().map(|r| r.2).collect::<Vec<_>>());
            FeedbackRow {
                csfr,
                repetitions: cfg.repetitions,
                mean_eps_convex: mc,
                std_eps_convex: sc,
                mean_eps_gd: mg,
                std_eps_gd: sg,
                mean_fit_p: mp,
                std_fit_p: sp,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::GdOptions;
    use crate::outage::{CodeParams, LayerSpec};
    use crate::population::DistributionPreset;

    fn setup() -> StudySetup {
        let a = ClientClass::new(2, 0.5, DistributionPreset::DeltaII.distribution(), vec![0.5, 0.3])
            .unwrap()
            .fit()
            .unwrap();
        let b = ClientClass::new(3, 0.5, DistributionPreset::DeltaIV.distribution(), vec![0.3, 0.2, 0.5])
            .unwrap()
            .fit()
            .unwrap();
        StudySetup {
            layers: vec![LayerSpec::new(377, 1e-4), LayerSpec::new(1519, 4e-4), LayerSpec::new(7005, 5e-4)],
            classes: vec![a, b],
            n_max: 14_000,
            code: CodeParams::default(),
            grid: 100,
            gd: GdOptions::default(),
            parallel: true,
        }
    }

    #[test]
    fn full_feedback_is_repeatable() {
        let cfg = FeedbackConfig { pool_size: 200, csfr: vec![1.0, 0.1], repetitions: 4, seed: 3 };
        let rows = run_reduced_feedback(&setup(), &cfg).unwrap();
        assert_eq!(rows[0].std_eps_gd, 0.0);
        assert!(rows[0].mean_eps_gd > 95.0 && rows[0].mean_eps_gd <= 100.0 + 1e-9, "{rows:?}");
        assert!(rows[1].std_fit_p > 0.0);
        let mut serial = setup();
        serial.parallel = false;
        assert_eq!(run_reduced_feedback(&serial, &cfg).unwrap(), rows);
        let empty = FeedbackConfig { csfr: vec![], ..cfg };
        assert!(run_reduced_feedback(&setup(), &empty).is_err());
    }
}

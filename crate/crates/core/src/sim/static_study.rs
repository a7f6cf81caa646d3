use serde::{Deserialize, Serialize};

use super::{convex_then_gd, efficiency_percent, gain_percent, reference_optimum, StudySetup};
use crate::alloc::eep_allocation;
use crate::error::Result;

/// One static comparison. Utilities are absolute; `eta_*` and `eps_*` are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticResult {
    pub n_max: u64,
    pub u_max: f64,
    pub u_eep: f64,
    pub u_convex: f64,
    pub u_gd: f64,
    pub u_opt: f64,
    pub eta_convex: f64,
    pub eta_gd: f64,
    pub eps_convex: f64,
    pub eps_gd: f64,
    pub feasible: bool,
}

/// EEP, convex, descent and reference optimum on one problem.
pub fn run_static(setup: &StudySetup) -> Result<StaticResult> {
    let problem = setup.problem()?;
    let eep = eep_allocation(&problem);
    let (cv, gd) = convex_then_gd(&problem, setup.gd)?;
    let u_opt = reference_optimum(&problem, setup.exhaustive_options(), &[&cv, &gd])?;
    let feasible = cv.feasible && gd.feasible && u_opt.is_finite();
    let undefined = |x: f64| if feasible { x } else { f64::NAN };
    Ok(StaticResult {
        n_max: setup.n_max,
        u_max: problem.u_max(),
        u_eep: eep.utility,
        u_convex: cv.utility,
        u_gd: gd.utility,
        u_opt,
        eta_convex: undefined(gain_percent(cv.utility, eep.utility)),
        eta_gd: undefined(gain_percent(gd.utility, eep.utility)),
        eps_convex: undefined(efficiency_percent(cv.utility, u_opt)),
        eps_gd: undefined(efficiency_percent(gd.utility, u_opt)),
        feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::GdOptions;
    use crate::outage::{CodeParams, LayerSpec};
    use crate::population::{ClientClass, DistributionPreset};

    fn setup(preset: DistributionPreset, n_max: u64) -> StudySetup {
        let c = ClientClass::new(3, 1.0, preset.distribution(), vec![0.4, 0.3, 0.3]).unwrap().fit().unwrap();
        StudySetup {
            layers: vec![LayerSpec::new(377, 1e-4), LayerSpec::new(1519, 4e-4), LayerSpec::new(7005, 5e-4)],
            classes: vec![c],
            n_max,
            code: CodeParams::default(),
            grid: 200,
            gd: GdOptions::default(),
            parallel: true,
        }
    }

    #[test]
    fn uniform_single_class_is_efficient() {
        let r = run_static(&setup(DistributionPreset::DeltaI, 14_000)).unwrap();
        assert!(r.feasible);
        assert!(r.eps_convex > 99.0 && r.eps_convex <= 100.0, "{r:?}");
        assert!(r.eps_convex <= r.eps_gd + 1e-9 && r.eps_gd <= 100.0);
        assert!(r.eta_gd > 0.0);
    }

    #[test]
    fn infeasible_is_flagged() {
        let r = run_static(&setup(DistributionPreset::DeltaI, 100)).unwrap();
        assert!(!r.feasible);
        assert!(r.eps_gd.is_nan());
    }
}

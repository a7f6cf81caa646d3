use serde::{Deserialize, Serialize};

use super::RcDistribution;
use crate::error::{Error, Result};

/// Number of grid cells on `[0, 1]`; the fit uses the interior points `i / FIT_GRID`.
pub const FIT_GRID: usize = 200;

const C_MIN: f64 = 1e-12;
const LOG_P_RANGE: (f64, f64) = (-2.0, 2.0);
const LOG_P_CANDIDATES: usize = 161;
const GOLDEN_TOL: f64 = 1e-10;
const GOLDEN_MAX_ITER: usize = 200;

/// Two-parameter CDF `c * delta^p + 1 - c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FittedCdf {
    pub c: f64,
    pub p: f64,
}

impl FittedCdf {
    pub fn new(c: f64, p: f64) -> Result<Self> {
        let f = Self { c, p };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c <= 1.0 && self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::Config(format!("fitted CDF needs 0 < c <= 1 and p > 0, got {self:?}")));
        }
        Ok(())
    }

    pub fn eval(&self, delta: f64) -> f64 {
        let d = delta.clamp(0.0, 1.0);
        self.c * d.powf(self.p) + 1.0 - self.c
    }

    pub fn density(&self, delta: f64) -> f64 {
        let d = delta.clamp(0.0, 1.0);
        self.c * self.p * d.powf(self.p - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub fitted: FittedCdf,
    /// Largest absolute CDF error over the fit grid.
    pub max_error: f64,
    pub sse: f64,
    /// False when the exponent search stopped on its iteration cap.
    pub converged: bool,
}

struct Grid {
    delta: Vec<f64>,
    target: Vec<f64>,
}

impl Grid {
    /// Best `c` for exponent `p` and the resulting squared error.
    fn solve(&self, p: f64) -> (f64, f64) {
        // residual c*u - v with u = delta^p - 1, v = F - 1
        let (mut uv, mut uu) = (0.0, 0.0);
        for (d, f) in self.delta.iter().zip(&self.target) {
            let u = d.powf(p) - 1.0;
            uv += u * (f - 1.0);
            uu += u * u;
        }
        let c = (uv / uu).clamp(C_MIN, 1.0);
        let sse = self
            .delta
            .iter()
            .zip(&self.target)
            .map(|(d, f)| {
                let r = c * (d.powf(p) - 1.0) - (f - 1.0);
                r * r
            })
            .sum();
        (c, sse)
    }
}

/// Least-squares fit of `c * delta^p + 1 - c` to the CDF of `dist` on the
/// interior grid points `i / 200`.
pub fn fit_parametric_cdf(dist: &RcDistribution) -> Result<FitReport> {
    dist.validate()?;
    if !(dist.support_width() > 0.0) {
        return Err(Error::Config("cannot fit a CDF to a degenerate distribution".into()));
    }
    let delta: Vec<f64> = (1..FIT_GRID).map(|i| i as f64 / FIT_GRID as f64).collect();
    let target = delta.iter().map(|&d| dist.cdf(d)).collect();
    let grid = Grid { delta, target };
    let sse_at = |x: f64| grid.solve(10f64.powf(x)).1;

    let step = (LOG_P_RANGE.1 - LOG_P_RANGE.0) / (LOG_P_CANDIDATES - 1) as f64;
    let xs: Vec<f64> = (0..LOG_P_CANDIDATES).map(|i| LOG_P_RANGE.0 + i as f64 * step).collect();
    let best = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, sse_at(x)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);

    let (mut lo, mut hi) = (xs[best.saturating_sub(1)], xs[(best + 1).min(xs.len() - 1)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (sse_at(x1), sse_at(x2));
    let mut converged = false;
    for _ in 0..GOLDEN_MAX_ITER {
        if hi - lo < GOLDEN_TOL {
            converged = true;
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = sse_at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = sse_at(x2);
        }
    }
    // The bracket endpoints and the best grid candidate are all admissible answers.
    let mut x = 0.5 * (lo + hi);
    for cand in [xs[best], x1, x2] {
        if sse_at(cand) < sse_at(x) {
            x = cand;
        }
    }
    let p = 10f64.powf(x);
    let (c, sse) = grid.solve(p);
    let fitted = FittedCdf { c, p };
    let max_error = grid.delta.iter().zip(&grid.target).map(|(&d, f)| (fitted.eval(d) - f).abs()).fold(0.0, f64::max);
    Ok(FitReport { fitted, max_error, sse, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::DistributionPreset;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_is_in_family() {
        let r = fit_parametric_cdf(&RcDistribution::uniform(0.0, 1.0).unwrap()).unwrap();
        assert!(r.converged);
        assert_abs_diff_eq!(r.fitted.c, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.fitted.p, 1.0, epsilon = 1e-6);
        assert!(r.max_error < 1e-6);
    }

    #[test]
    fn square_law_is_in_family() {
        // sqrt of a uniform variable has CDF delta^2
        let samples: Vec<f64> = (0..20_000).map(|i| ((i as f64 + 0.5) / 20_000.0).sqrt()).collect();
        let r = fit_parametric_cdf(&RcDistribution::empirical(samples).unwrap()).unwrap();
        assert_abs_diff_eq!(r.fitted.c, 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(r.fitted.p, 2.0, epsilon = 1e-2);
    }

    #[test]
    fn low_rc_heavy_preset_fits() {
        let r = fit_parametric_cdf(&DistributionPreset::DeltaIII.distribution()).unwrap();
        assert!(r.max_error < 0.05, "{r:?}");
        // grid least-squares oracle over a fine (c, p) lattice
        let d = DistributionPreset::DeltaIII.distribution();
        let grid: Vec<(f64, f64)> = (1..FIT_GRID).map(|i| i as f64 / FIT_GRID as f64).map(|x| (x, d.cdf(x))).collect();
        let mut best = f64::INFINITY;
        for ci in 1..=400 {
            for pi in 0..=400 {
                let (c, p) = (ci as f64 / 400.0, 10f64.powf(-2.0 + pi as f64 / 100.0));
                let f = FittedCdf { c, p };
                best = best.min(grid.iter().map(|(x, y)| (f.eval(*x) - y).powi(2)).sum());
            }
        }
        assert!(r.sse <= best + 1e-12);
    }

    #[test]
    fn degenerate_rejected() {
        assert!(fit_parametric_cdf(&RcDistribution::empirical(vec![0.4, 0.4]).unwrap()).is_err());
    }

    #[test]
    fn fitted_endpoints() {
        for p in DistributionPreset::ALL {
            let f = fit_parametric_cdf(&p.distribution()).unwrap().fitted;
            assert!(f.eval(0.0) >= 0.0);
            assert_abs_diff_eq!(f.eval(1.0), 1.0, epsilon = 1e-15);
        }
    }
}

use super::{
    eep_allocation, isotonic_non_decreasing, solve_convex, Allocation, AllocationProblem, Diagnostics, Solver,
};
use crate::error::{Error, Result};
use crate::outage::{clamp_delta, symbols_full_slope, tau};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdOptions {
    pub max_iter: usize,
    /// Stop once the relative cost change over `window` iterations drops below this.
    pub rel_tol: f64,
    pub window: usize,
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for GdOptions {
    fn default() -> Self {
        Self { max_iter: 10_000, rel_tol: 1e-8, window: 10, initial_step: 0.05, min_step: 1e-10 }
    }
}

/// `lambda * loss + (1 - lambda) * dissatisfaction` on the smoothed CDFs.
pub(crate) struct Objective<'a> {
    problem: &'a AllocationProblem,
    lambda: f64,
    /// Per class, smoothed CDF at the previous MNRCs.
    prev: Option<Vec<Vec<f64>>>,
}

impl<'a> Objective<'a> {
    pub(crate) fn new(problem: &'a AllocationProblem, lambda: f64, prev: Option<&[f64]>) -> Self {
        let prev = prev
            .filter(|_| lambda < 1.0)
            .map(|p| problem.classes.iter().map(|c| p.iter().map(|&d| c.dist.smooth_cdf(d)).collect()).collect());
        Self { problem, lambda, prev }
    }

    pub(crate) fn value(&self, deltas: &[f64]) -> f64 {
        let mut loss = 0.0;
        let mut dis = 0.0;
        for (m, (c, a)) in self.problem.classes.iter().zip(&self.problem.table().alpha_hat).enumerate() {
            for (l, (&w, &d)) in a.iter().zip(deltas).enumerate() {
                let f = c.dist.smooth_cdf(d);
                loss += w * f;
                if let Some(prev) = &self.prev {
                    dis += c.prior * c.beta(l) * (f - prev[m][l]).max(0.0);
                }
            }
        }
        self.lambda * loss + (1.0 - self.lambda) * dis
    }

    fn gradient(&self, deltas: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; deltas.len()];
        for (m, (c, a)) in self.problem.classes.iter().zip(&self.problem.table().alpha_hat).enumerate() {
            for (l, (&w, &d)) in a.iter().zip(deltas).enumerate() {
                let dens = c.dist.density(d);
                g[l] += self.lambda * w * dens;
                if let Some(prev) = &self.prev {
                    if c.dist.smooth_cdf(d) > prev[m][l] {
                        g[l] += (1.0 - self.lambda) * c.prior * c.beta(l) * dens;
                    }
                }
            }
        }
        g
    }
}

struct Slopes {
    tau: Vec<f64>,
}

impl Slopes {
    fn new(problem: &AllocationProblem) -> Result<Self> {
        let tau = problem
            .layers
            .iter()
            .map(|l| tau(l.source_symbols, l.outage_target, &problem.code))
            .collect::<Result<_>>()?;
        Ok(Self { tau })
    }

    /// Gradient of the per-layer bandwidth surface.
    fn at(&self, problem: &AllocationProblem, deltas: &[f64]) -> Vec<f64> {
        problem
            .layers
            .iter()
            .zip(deltas)
            .zip(&self.tau)
            .map(|((l, &d), &t)| symbols_full_slope(l.source_symbols as f64, d, t, problem.code.h))
            .collect()
    }
}

fn normalized(v: Vec<f64>) -> Option<Vec<f64>> {
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    (m > 1e-300).then(|| v.into_iter().map(|x| x / m).collect())
}

/// Local descent from `init`. Returns the final MNRCs, their symbol counts
/// and diagnostics.
pub(crate) fn descend(
    problem: &AllocationProblem,
    objective: &Objective,
    init: &[f64],
    opts: GdOptions,
) -> Result<(Vec<f64>, Vec<u64>, Diagnostics)> {
    problem.check_deltas(init).map_err(|e| Error::InfeasibleInit(e.to_string()))?;
    let mut cur: Vec<f64> = init.iter().map(|&d| clamp_delta(d)).collect();
    let Some(mut symbols) = problem.price_within(&cur) else {
        return Err(Error::InfeasibleInit(format!("MNRCs {init:?} exceed the bandwidth of {} symbols", problem.n_max)));
    };
    let slopes = Slopes::new(problem)?;
    let mut f_cur = objective.value(&cur);
    let mut history = vec![f_cur];
    let mut step = opts.initial_step;
    let mut diag = Diagnostics { iterations: 0, grid_size: 0, evaluations: 1, converged: false };

    for it in 0..opts.max_iter {
        diag.iterations = it + 1;
        let g = objective.gradient(&cur);
        let s = slopes.at(problem, &cur);
        let ss: f64 = s.iter().map(|x| x * x).sum();
        let gs: f64 = g.iter().zip(&s).map(|(a, b)| a * b).sum();
        let mut directions = Vec::with_capacity(2);
        directions.extend(normalized(g.iter().map(|x| -x).collect()));
        if ss > 0.0 {
            directions.extend(normalized(g.iter().zip(&s).map(|(a, b)| -a + gs / ss * b).collect()));
        }
        if directions.is_empty() {
            diag.converged = true;
            break;
        }

        let mut accepted: Option<(Vec<f64>, Vec<u64>, f64, f64)> = None;
        for dir in &directions {
            let mut h = step;
            while h >= opts.min_step {
                let mut cand: Vec<f64> = cur.iter().zip(dir).map(|(x, d)| clamp_delta(x + h * d)).collect();
                isotonic_non_decreasing(&mut cand);
                diag.evaluations += 1;
                if let Some((c, n)) = problem.restore(&cand) {
                    let v = objective.value(&c);
                    if v < f_cur {
                        if accepted.as_ref().map_or(true, |a| v < a.2) {
                            accepted = Some((c, n, v, h));
                        }
                        break;
                    }
                }
                h *= 0.5;
            }
        }
        match accepted {
            Some((c, n, v, h)) => {
                cur = c;
                symbols = n;
                f_cur = v;
                step = (h * 1.5).min(0.5);
            }
            None => {
                diag.converged = true;
                break;
            }
        }
        history.push(f_cur);
        if history.len() > opts.window {
            let old = history[history.len() - 1 - opts.window];
            let denom = old.abs().max(1e-300);
            if (old - f_cur) / denom < opts.rel_tol {
                diag.converged = true;
                break;
            }
        }
    }
    Ok((cur, symbols, diag))
}

/// Constrained descent of the expected loss from a feasible starting point.
/// Never returns a lower utility than the start.
pub fn solve_simplified_gd(problem: &AllocationProblem, init: &[f64], opts: GdOptions) -> Result<Allocation> {
    let objective = Objective::new(problem, 1.0, None);
    let (d, n, diag) = descend(problem, &objective, init, opts)?;
    let out = Allocation::new(problem, Solver::SimplifiedGd, d, n, diag);
    let start: Vec<f64> = init.iter().map(|&x| clamp_delta(x)).collect();
    let start_n = problem.price_within(&start).expect("checked by descend");
    let start = Allocation::new(problem, Solver::SimplifiedGd, start, start_n, diag);
    Ok(if start.utility > out.utility { start } else { out })
}

/// Convex solution plus the best descent from the convex and EEP starting
/// points. Descent can stall where two MNRCs tie, and the EEP point sometimes
/// sits on the other side of such a kink.
pub fn solve_optimized(problem: &AllocationProblem, opts: GdOptions) -> Result<(Allocation, Allocation)> {
    let cv = solve_convex(problem)?;
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if cv.feasible {
        starts.push(cv.deltas.clone());
    }
    let eep = eep_allocation(problem);
    if let Some((d, _)) = eep.feasible.then(|| problem.restore(&eep.deltas)).flatten() {
        starts.push(d);
    }
    let mut best: Option<Allocation> = None;
    for start in &starts {
        let g = solve_simplified_gd(problem, start, opts)?;
        if best.as_ref().map_or(true, |b| g.utility > b.utility) {
            best = Some(g);
        }
    }
    let best = best.unwrap_or_else(|| cv.clone());
    Ok((cv, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::testutil::*;
    use crate::alloc::{solve_exhaustive, ExhaustiveOptions};
    use crate::outage::{CodeParams, LayerSpec};
    use crate::population::{ClientClass, DistributionPreset, RcDistribution};

    fn crew_two_class(n_max: u64) -> AllocationProblem {
        let a = ClientClass::new(2, 0.5, DistributionPreset::DeltaII.distribution(), vec![0.5, 0.3])
            .unwrap()
            .fit()
            .unwrap();
        let b = ClientClass::new(3, 0.5, DistributionPreset::DeltaIV.distribution(), vec![0.3, 0.2, 0.5])
            .unwrap()
            .fit()
            .unwrap();
        AllocationProblem::new(crew_layers(), vec![a, b], n_max, CodeParams::default()).unwrap()
    }

    #[test]
    fn three_solver_ordering_on_crew() {
        for n_max in [12_000, 15_000, 20_000] {
            let p = crew_two_class(n_max);
            let cv = solve_convex(&p).unwrap();
            assert!(cv.feasible);
            let gd = solve_simplified_gd(&p, &cv.deltas, GdOptions::default()).unwrap();
            let ex = solve_exhaustive(&p, ExhaustiveOptions::default()).unwrap();
            assert!(gd.feasible && gd.total_symbols() <= n_max);
            assert!(gd.utility >= cv.utility - 1e-9);
            // half a grid cell of slack on the exhaustive side
            let slack = p.u_max() * 0.01;
            assert!(ex.utility + slack >= gd.utility, "{} vs {}", ex.utility, gd.utility);
            assert!(gd.utility >= 0.98 * ex.utility, "{} vs {}", gd.utility, ex.utility);
        }
    }

    #[test]
    fn stationary_start_is_kept() {
        // one layer: the best MNRC is the smallest affordable one
        let u = RcDistribution::uniform(0.0, 1.0).unwrap();
        let c = ClientClass::new(1, 1.0, u, vec![1.0]).unwrap();
        let p = AllocationProblem::new(vec![LayerSpec::new(1000, 1e-4)], vec![c], 3000, CodeParams::default()).unwrap();
        let ex = solve_exhaustive(&p, ExhaustiveOptions { grid: 2000, parallel: false }).unwrap();
        let (d, _) = p.restore(&[ex.deltas[0] * 0.99]).unwrap();
        let gd = solve_simplified_gd(&p, &d, GdOptions::default()).unwrap();
        assert!((gd.deltas[0] - d[0]).abs() < 1e-9);
    }

    #[test]
    fn random_starts_reach_near_optimum() {
        use rand::{Rng, SeedableRng};
        let p = crew_two_class(14_000);
        let ex = solve_exhaustive(&p, ExhaustiveOptions::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut best = f64::NEG_INFINITY;
        let mut tried = 0;
        while tried < 20 {
            let mut d: Vec<f64> = (0..3).map(|_| rng.random_range(0.2..1.0)).collect();
            d.sort_by(f64::total_cmp);
            let Some((d, _)) = p.restore(&d) else { continue };
            tried += 1;
            let gd = solve_simplified_gd(&p, &d, GdOptions::default()).unwrap();
            assert!(gd.utility >= p.utility(&d).unwrap() - 1e-12);
            best = best.max(gd.utility);
        }
        assert!(best >= 0.99 * ex.utility, "{best} vs {}", ex.utility);
    }

    #[test]
    fn infeasible_start_rejected() {
        let p = crew_two_class(12_000);
        let err = solve_simplified_gd(&p, &[0.05, 0.05, 0.05], GdOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InfeasibleInit(_)));
        assert!(err.to_string().contains("convex solution or EEP"));
        assert!(solve_simplified_gd(&p, &[0.9, 0.5, 0.95], GdOptions::default()).is_err());
    }

    #[test]
    fn optimized_never_trails_eep() {
        // instance where descent from the convex point stalls on a tied pair
        for seed in [1006, 1007, 1010] {
            let p = random_instance(seed);
            let (cv, best) = solve_optimized(&p, GdOptions::default()).unwrap();
            assert!(best.feasible && best.total_symbols() <= p.n_max);
            assert!(best.utility >= cv.utility);
            assert!(best.utility >= crate::alloc::eep_allocation(&p).utility, "seed {seed}");
        }
    }
}

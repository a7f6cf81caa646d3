use super::gd::{descend, GdOptions, Objective};
use super::{solve_convex, Allocation, AllocationProblem, Solver};
use crate::error::{domain, Error, Result};
use crate::population::ClientClass;

/// Dissatisfaction `sum prior * beta * max(0, F(cur) - F(prev))` caused by
/// moving the MNRCs from `prev` to `cur`.
pub fn dissatisfaction(classes: &[ClientClass], prev: &[f64], cur: &[f64]) -> f64 {
    classes
        .iter()
        .map(|c| {
            let per: f64 = (0..c.highest_layer.min(prev.len()).min(cur.len()))
                .map(|l| c.beta(l) * (c.dist.cdf(cur[l]) - c.dist.cdf(prev[l])).max(0.0))
                .sum();
            c.prior * per
        })
        .sum()
}

/// Trade expected loss against dissatisfaction relative to `prev`:
/// minimizes `(1 - lambda) * D + lambda * loss`. Starts from the convex
/// solution and, when the penalty is active, also from `prev` itself and
/// from `prev` with only the unpenalized layers raised.
pub fn solve_dynamic(problem: &AllocationProblem, prev: &[f64], lambda: f64, opts: GdOptions) -> Result<Allocation> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(domain(format!("lambda {lambda} not in [0, 1]")));
    }
    problem.check_deltas(prev)?;
    let objective = Objective::new(problem, lambda, Some(prev));
    let true_cost =
        |a: &Allocation| lambda * a.loss + (1.0 - lambda) * dissatisfaction(&problem.classes, prev, &a.deltas);

    let mut starts = Vec::new();
    let convex = solve_convex(problem)?;
    if convex.feasible {
        starts.push(convex.deltas.clone());
    }
    if lambda < 1.0 {
        if let Some((d, _)) = problem.restore(prev) {
            starts.push(d);
        }
        // hold the penalized layers where they were and let the others absorb the squeeze
        let free: Vec<bool> =
            (0..prev.len()).map(|l| problem.classes.iter().all(|c| l >= c.highest_layer || c.beta(l) == 0.0)).collect();
        if free.iter().any(|&f| f) && !free.iter().all(|&f| f) {
            if let Some((d, _)) = problem.restore_masked(prev, &free) {
                starts.push(d);
            }
        }
    }
    if starts.is_empty() {
        return Ok(Allocation::infeasible(problem, Solver::Dynamic, convex.diagnostics));
    }
    let mut best: Option<(f64, Allocation)> = None;
    for s in &starts {
        let (d, n, diag) = match descend(problem, &objective, s, opts) {
            Ok(r) => r,
            Err(Error::InfeasibleInit(_)) => continue,
            Err(e) => return Err(e),
        };
        for a in [
            Allocation::new(problem, Solver::Dynamic, d, n, diag),
            Allocation::new(
                problem,
                Solver::Dynamic,
                s.clone(),
                problem.price_within(s).expect("feasible start"),
                diag,
            ),
        ] {
            let c = true_cost(&a);
            if best.as_ref().map_or(true, |b| c < b.0) {
                best = Some((c, a));
            }
        }
    }
    Ok(match best {
        Some((_, a)) => a,
        None => Allocation::infeasible(problem, Solver::Dynamic, convex.diagnostics),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::solve_simplified_gd;
    use crate::alloc::testutil::*;
    use crate::outage::CodeParams;
    use crate::population::DistributionPreset;

    fn problem(n_max: u64) -> AllocationProblem {
        let mk = |h: usize, prior: f64, preset: DistributionPreset, alphas: Vec<f64>| {
            let mut betas = vec![0.0; h];
            betas[0] = 1.0;
            ClientClass::new(h, prior, preset.distribution(), alphas).unwrap().with_betas(betas).unwrap().fit().unwrap()
        };
        let classes = vec![
            mk(2, 0.5, DistributionPreset::DeltaII, vec![0.33, 0.19]),
            mk(3, 0.5, DistributionPreset::DeltaIV, vec![0.33, 0.19, 0.35]),
        ];
        AllocationProblem::new(crew_layers(), classes, n_max, CodeParams::default()).unwrap()
    }

    #[test]
    fn no_move_no_dissatisfaction() {
        let p = problem(13_000);
        let d = [0.3, 0.5, 0.6];
        assert_eq!(dissatisfaction(&p.classes, &d, &d), 0.0);
        assert!(dissatisfaction(&p.classes, &d, &[0.4, 0.5, 0.6]) > 0.0);
        assert_eq!(dissatisfaction(&p.classes, &d, &[0.2, 0.6, 0.9]), 0.0);
    }

    #[test]
    fn lambda_one_is_static_descent() {
        let p = problem(13_000);
        let prev = solve_convex(&problem(20_000)).unwrap().deltas;
        let dy = solve_dynamic(&p, &prev, 1.0, GdOptions::default()).unwrap();
        let cv = solve_convex(&p).unwrap();
        let gd = solve_simplified_gd(&p, &cv.deltas, GdOptions::default()).unwrap();
        assert_eq!(dy.deltas, gd.deltas);
        assert_eq!(dy.symbols, gd.symbols);
    }

    #[test]
    fn dissatisfaction_monotone_in_lambda() {
        let prev = solve_convex(&problem(16_000)).unwrap().deltas;
        let p = problem(11_000);
        let mut last = -1.0;
        for lambda in [0.1, 0.3, 0.6, 0.8, 1.0] {
            let a = solve_dynamic(&p, &prev, lambda, GdOptions::default()).unwrap();
            assert!(a.feasible);
            let d = dissatisfaction(&p.classes, &prev, &a.deltas);
            assert!(d >= last - 1e-12, "lambda {lambda}: {d} < {last}");
            last = d;
        }
    }

    #[test]
    fn bad_inputs() {
        let p = problem(13_000);
        assert!(solve_dynamic(&p, &[0.3, 0.5, 0.6], 1.5, GdOptions::default()).is_err());
        assert!(solve_dynamic(&p, &[0.6, 0.5, 0.6], 0.5, GdOptions::default()).is_err());
    }
}

use super::{Allocation, AllocationProblem, Diagnostics, Solver};
use crate::outage::{model_value, nested_target, DELTA_EPS};

/// Proportional split of the bandwidth by layer size; rounding leftovers go
/// to the base layer.
pub fn eep_symbols(problem: &AllocationProblem) -> Vec<u64> {
    let total: u64 = problem.layers.iter().map(|l| l.source_symbols).sum();
    let share = |s: u64| ((problem.n_max as f64) * s as f64 / total as f64).round() as u64;
    let mut n: Vec<u64> = problem.layers.iter().map(|l| share(l.source_symbols)).collect();
    let upper: u64 = n[1..].iter().sum();
    n[0] = problem.n_max.saturating_sub(upper);
    n
}

/// Smallest MNRC per layer at which fixed symbol counts meet each layer's
/// assurance, made non-decreasing. `nested` charges the layers below the way
/// the forward procedure does; otherwise each layer is judged on its own.
/// Layers that cannot be served get MNRC 1.
pub fn implied_mnrcs(problem: &AllocationProblem, symbols: &[u64], nested: bool) -> Vec<f64> {
    let h = problem.code.h;
    let mut below: Vec<(u64, u64)> = Vec::new();
    let mut out = Vec::with_capacity(symbols.len());
    for (layer, &n) in problem.layers.iter().zip(symbols) {
        let s = layer.source_symbols;
        let ok = |d: f64| {
            let target =
                if nested { nested_target(&below, d, layer.outage_target, h) } else { Some(layer.outage_target) };
            match (target, model_value(s as f64, n as f64, d, h)) {
                (Some(t), Some(p)) => p <= t,
                _ => false,
            }
        };
        let (mut lo, mut hi) = (DELTA_EPS, 1.0 - DELTA_EPS);
        let delta = if !ok(hi) {
            1.0
        } else if ok(lo) {
            lo
        } else {
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-13 {
                    break;
                }
            }
            hi
        };
        out.push(delta);
        below.push((s, n));
    }
    for l in 1..out.len() {
        out[l] = out[l].max(out[l - 1]);
    }
    out
}

/// Equal-error-protection baseline.
pub fn eep_allocation(problem: &AllocationProblem) -> Allocation {
    let symbols = eep_symbols(problem);
    let deltas = implied_mnrcs(problem, &symbols, true);
    Allocation::new(problem, Solver::Eep, deltas, symbols, Diagnostics { converged: true, ..Diagnostics::default() })
}

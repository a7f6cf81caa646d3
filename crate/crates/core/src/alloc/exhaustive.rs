use rayon::prelude::*;

use super::{Allocation, AllocationProblem, Diagnostics, Solver};
use crate::error::{domain, Result};
use crate::outage::{nested_target, required_symbols_full, DELTA_EPS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExhaustiveOptions {
    /// Grid points per axis on `[eps, 1 - eps]`.
    pub grid: usize,
    /// Split the first axis across the rayon pool.
    pub parallel: bool,
}

impl Default for ExhaustiveOptions {
    fn default() -> Self {
        Self { grid: 200, parallel: true }
    }
}

pub(crate) fn grid_points(d: usize) -> Vec<f64> {
    let step = (1.0 - 2.0 * DELTA_EPS) / (d - 1) as f64;
    (0..d).map(|i| if i + 1 == d { 1.0 - DELTA_EPS } else { DELTA_EPS + i as f64 * step }).collect()
}

#[derive(Debug, Clone)]
struct Best {
    cost: f64,
    idx: Vec<usize>,
    symbols: Vec<u64>,
}

struct Search<'a> {
    problem: &'a AllocationProblem,
    grid: Vec<f64>,
    /// `cost[l][i]`: weighted outage mass of layer `l` at grid point `i`.
    cost: Vec<Vec<f64>>,
    /// `tail[l][i] = sum_{j >= l} cost[j][i]`, a lower bound on the remaining cost.
    tail: Vec<Vec<f64>>,
}

struct Frame {
    below: Vec<(u64, u64)>,
    idx: Vec<usize>,
    used: u64,
    partial: f64,
    evaluations: usize,
}

impl<'a> Search<'a> {
    fn new(problem: &'a AllocationProblem, d: usize) -> Self {
        let grid = grid_points(d);
        let l = problem.num_layers();
        let cost: Vec<Vec<f64>> = (0..l)
            .map(|j| grid.iter().map(|&x| problem.layer_members(j).map(|(c, a)| a * c.dist.cdf(x)).sum()).collect())
            .collect();
        let mut tail = cost.clone();
        for j in (0..l.saturating_sub(1)).rev() {
            for i in 0..d {
                tail[j][i] += tail[j + 1][i];
            }
        }
        Self { problem, grid, cost, tail }
    }

    /// Symbols layer `l` needs at grid point `i` on top of `below`, if it can be served.
    fn layer_symbols(&self, l: usize, i: usize, below: &[(u64, u64)]) -> Option<u64> {
        let layer = &self.problem.layers[l];
        let delta = self.grid[i];
        let target = nested_target(below, delta, layer.outage_target, self.problem.code.h)?;
        required_symbols_full(layer.source_symbols, delta, target.min(0.5), &self.problem.code).ok()
    }

    fn pruned(&self, l: usize, i: usize, partial: f64, best: &Option<Best>) -> bool {
        match best {
            Some(b) => partial + self.tail[l][i] > b.cost + 1e-12 * (1.0 + b.cost.abs()),
            None => false,
        }
    }

    fn descend(&self, l: usize, start: usize, f: &mut Frame, best: &mut Option<Best>) {
        let last = self.problem.num_layers() - 1;
        let d = self.grid.len();
        if l == last {
            let fits = |i: usize, ev: &mut usize| {
                *ev += 1;
                self.layer_symbols(l, i, &f.below).filter(|n| f.used + n <= self.problem.n_max)
            };
            let mut ev = 0;
            if fits(d - 1, &mut ev).is_none() {
                f.evaluations += ev;
                return;
            }
            let (mut lo, mut hi) = (start, d - 1);
            // smallest feasible index in [start, d-1]; feasibility is monotone in delta
            if fits(lo, &mut ev).is_some() {
                hi = lo;
            } else {
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if fits(mid, &mut ev).is_some() {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
            }
            f.evaluations += ev;
            let n = fits(hi, &mut f.evaluations).expect("feasible");
            let cost = f.partial + self.cost[l][hi];
            if best.as_ref().map_or(true, |b| cost < b.cost) {
                let mut idx = f.idx.clone();
                idx.push(hi);
                let mut symbols: Vec<u64> = f.below.iter().map(|&(_, n)| n).collect();
                symbols.push(n);
                *best = Some(Best { cost, idx, symbols });
            }
            return;
        }
        for i in start..d {
            if self.pruned(l, i, f.partial, best) {
                break;
            }
            f.evaluations += 1;
            let Some(n) = self.layer_symbols(l, i, &f.below) else { continue };
            if f.used + n > self.problem.n_max {
                continue;
            }
            let saved = f.partial;
            f.below.push((self.problem.layers[l].source_symbols, n));
            f.idx.push(i);
            f.used += n;
            f.partial += self.cost[l][i];
            self.descend(l + 1, i, f, best);
            f.partial = saved;
            f.used -= n;
            f.idx.pop();
            f.below.pop();
        }
    }

    fn subtree(&self, i0: usize) -> (Option<Best>, usize) {
        let mut f = Frame { below: Vec::new(), idx: Vec::new(), used: 0, partial: 0.0, evaluations: 0 };
        let mut best = None;
        if self.problem.num_layers() == 1 {
            self.descend(0, i0, &mut f, &mut best);
            return (best, f.evaluations);
        }
        f.evaluations += 1;
        if let Some(n) = self.layer_symbols(0, i0, &[]) {
            if n <= self.problem.n_max {
                f.below.push((self.problem.layers[0].source_symbols, n));
                f.idx.push(i0);
                f.used = n;
                f.partial = self.cost[0][i0];
                self.descend(1, i0, &mut f, &mut best);
            }
        }
        (best, f.evaluations)
    }
}

/// Grid search over ordered MNRC tuples, each priced with the nested forward
/// procedure. Ties go to the lexicographically smallest tuple.
pub fn solve_exhaustive(problem: &AllocationProblem, opts: ExhaustiveOptions) -> Result<Allocation> {
    if opts.grid < 2 {
        return Err(domain(format!("grid needs at least 2 points, got {}", opts.grid)));
    }
    let search = Search::new(problem, opts.grid);
    let roots: Vec<usize> = if problem.num_layers() == 1 { vec![0] } else { (0..opts.grid).collect() };
    let results: Vec<(Option<Best>, usize)> = if opts.parallel {
        roots.par_iter().map(|&i| search.subtree(i)).collect()
    } else {
        let mut out = Vec::with_capacity(roots.len());
        let mut global: Option<Best> = None;
        for &i in &roots {
            if problem.num_layers() > 1 && search.pruned(0, i, 0.0, &global) {
                break;
            }
            let (b, ev) = search.subtree(i);
            if let Some(b) = &b {
                if global.as_ref().map_or(true, |g| b.cost < g.cost) {
                    global = Some(b.clone());
                }
            }
            out.push((b, ev));
        }
        out
    };
    let evaluations = results.iter().map(|r| r.1).sum();
    // roots are in lexicographic order, so the first strict minimum wins ties
    let best = results.into_iter().filter_map(|r| r.0).fold(None::<Best>, |acc, b| match acc {
        Some(a) if a.cost <= b.cost => Some(a),
        _ => Some(b),
    });
    let diagnostics = Diagnostics { iterations: 0, grid_size: opts.grid, evaluations, converged: true };
    Ok(match best {
        Some(b) => {
            let deltas = b.idx.iter().map(|&i| search.grid[i]).collect();
            Allocation::new(problem, Solver::Exhaustive, deltas, b.symbols, diagnostics)
        }
        None => Allocation::infeasible(problem, Solver::Exhaustive, diagnostics),
    })
}

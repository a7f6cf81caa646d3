use serde::{Deserialize, Serialize};

use super::{Allocation, AllocationProblem, Diagnostics, Solver};
use crate::error::{domain, Error, Result};
use crate::outage::{linear_overhead, DELTA_EPS};

/// Upper bound on `theta = 1 / delta`.
const THETA_MAX: f64 = 1.0 / DELTA_EPS;

/// Per-layer view of the transformed problem: cost
/// `sum_m k_m * theta^(-p_m) + const` and linear budget weight.
#[derive(Debug, Clone)]
struct Layer {
    terms: Vec<(f64, f64)>,
    constant: f64,
    weight: f64,
}

impl Layer {
    fn cost(&self, theta: f64) -> f64 {
        self.terms.iter().map(|&(k, p)| k * theta.powf(-p)).sum::<f64>() + self.constant
    }

    /// `-d cost / d theta`, positive and decreasing.
    fn neg_slope(&self, theta: f64) -> f64 {
        self.terms.iter().map(|&(k, p)| k * p * theta.powf(-p - 1.0)).sum()
    }

    fn curvature(&self, theta: f64) -> f64 {
        self.terms.iter().map(|&(k, p)| k * p * (p + 1.0) * theta.powf(-p - 2.0)).sum()
    }
}

fn layers_of(problem: &AllocationProblem) -> Result<Vec<Layer>> {
    for (m, c) in problem.classes.iter().enumerate() {
        if c.fitted.is_none() {
            return Err(Error::Config(format!("class {} has no fitted CDF", m + 1)));
        }
    }
    (0..problem.num_layers())
        .map(|l| {
            let mut terms = Vec::new();
            let mut constant = 0.0;
            for (c, a) in problem.layer_members(l) {
                let f = c.fitted.expect("checked above");
                terms.push((a * f.c, f.p));
                constant += a * (1.0 - f.c);
            }
            let spec = &problem.layers[l];
            let weight = linear_overhead(spec.source_symbols, spec.outage_target, &problem.code)?;
            Ok(Layer { terms, constant, weight })
        })
        .collect()
}

/// Optimum of the transformed problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexSolution {
    /// `theta_l = 1 / delta_l`, non-increasing and at least one.
    pub theta: Vec<f64>,
    pub objective: f64,
    /// Price of one symbol of linear budget at the optimum.
    pub multiplier: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Transformed objective `sum alpha_hat (c theta^-p + 1 - c)`.
pub fn convex_objective(problem: &AllocationProblem, theta: &[f64]) -> Result<f64> {
    let layers = layers_of(problem)?;
    if theta.len() != layers.len() {
        return Err(domain(format!("{} thetas for {} layers", theta.len(), layers.len())));
    }
    Ok(layers.iter().zip(theta).map(|(l, &t)| l.cost(t)).sum())
}

/// Minimizer over `theta >= 1` of the pooled cost of `block` plus `mu * weight * theta`.
fn block_theta(layers: &[Layer], mu: f64) -> f64 {
    let w: f64 = layers.iter().map(|l| l.weight).sum();
    let g = |t: f64| layers.iter().map(|l| l.neg_slope(t)).sum::<f64>() - mu * w;
    if g(1.0) <= 0.0 {
        return 1.0;
    }
    if g(THETA_MAX) >= 0.0 {
        return THETA_MAX;
    }
    let (mut lo, mut hi) = (0.0f64, THETA_MAX.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid.exp()) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Lagrangian minimizer for budget price `mu` under `theta_1 >= ... >= theta_L >= 1`
/// (pool adjacent violators over layer blocks).
fn theta_for_price(layers: &[Layer], mu: f64) -> Vec<f64> {
    let mut blocks: Vec<(usize, usize, f64)> = Vec::new();
    for l in 0..layers.len() {
        blocks.push((l, l + 1, block_theta(&layers[l..l + 1], mu)));
        while blocks.len() > 1 {
            let (s1, _, t1) = blocks[blocks.len() - 2];
            let (_, e2, t2) = blocks[blocks.len() - 1];
            if t1 >= t2 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s1, e2, block_theta(&layers[s1..e2], mu));
        }
    }
    let mut theta = vec![0.0; layers.len()];
    for (s, e, t) in blocks {
        theta[s..e].fill(t);
    }
    theta
}

fn linear_budget(layers: &[Layer], theta: &[f64]) -> f64 {
    layers.iter().zip(theta).map(|(l, t)| l.weight * t).sum()
}

/// Global optimum of the transformed problem by bisection on the budget price.
pub fn solve_convex_theta(problem: &AllocationProblem) -> Result<Option<ConvexSolution>> {
    let layers = layers_of(problem)?;
    let n_max = problem.n_max as f64;
    let ones = vec![1.0; layers.len()];
    if linear_budget(&layers, &ones) > n_max {
        return Ok(None);
    }
    let objective = |t: &[f64]| layers.iter().zip(t).map(|(l, &x)| l.cost(x)).sum::<f64>();
    let mut lo = 1e-300f64;
    let cheap = theta_for_price(&layers, lo);
    if linear_budget(&layers, &cheap) <= n_max {
        return Ok(Some(ConvexSolution {
            objective: objective(&cheap),
            theta: cheap,
            multiplier: 0.0,
            iterations: 0,
            converged: true,
        }));
    }
    let mut hi = 1.0f64;
    let mut iterations = 0;
    while linear_budget(&layers, &theta_for_price(&layers, hi)) > n_max {
        hi *= 2.0;
        iterations += 1;
    }
    let mut converged = false;
    while iterations < 2000 {
        iterations += 1;
        let mid = (0.5 * (lo.ln() + hi.ln())).exp();
        if mid <= lo || mid >= hi {
            converged = true;
            break;
        }
        if linear_budget(&layers, &theta_for_price(&layers, mid)) > n_max {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            converged = true;
            break;
        }
    }
    let theta = theta_for_price(&layers, hi);
    Ok(Some(ConvexSolution { objective: objective(&theta), theta, multiplier: hi, iterations, converged }))
}

/// Solve the transformed problem, map `theta` back to MNRCs and re-price the
/// layers with the nested full model, scaling the MNRCs up if that overruns
/// the bandwidth.
pub fn solve_convex(problem: &AllocationProblem) -> Result<Allocation> {
    let Some(sol) = solve_convex_theta(problem)? else {
        return Ok(Allocation::infeasible(problem, Solver::Convex, Diagnostics::default()));
    };
    let diagnostics =
        Diagnostics { iterations: sol.iterations, grid_size: 0, evaluations: 0, converged: sol.converged };
    let deltas: Vec<f64> = sol.theta.iter().map(|t| 1.0 / t).collect();
    Ok(match problem.restore(&deltas) {
        Some((d, n)) => Allocation::new(problem, Solver::Convex, d, n, diagnostics),
        None => Allocation::infeasible(problem, Solver::Convex, diagnostics),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierOptions {
    pub t0: f64,
    pub growth: f64,
    pub t_max: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self { t0: 1.0, growth: 10.0, t_max: 1e13, newton_tol: 1e-14, max_newton: 100 }
    }
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Log-barrier interior-point solve of the transformed problem from a
/// strictly feasible `start`. Independent of [`solve_convex_theta`].
pub fn solve_convex_from(problem: &AllocationProblem, start: &[f64], opts: BarrierOptions) -> Result<ConvexSolution> {
    let layers = layers_of(problem)?;
    let n = layers.len();
    if start.len() != n {
        return Err(domain(format!("{} thetas for {} layers", start.len(), n)));
    }
    let scale = problem.u_max().max(f64::MIN_POSITIVE);
    let w: Vec<f64> = layers.iter().map(|l| l.weight / problem.n_max as f64).collect();
    // constraints: theta_l - theta_{l+1}, theta_L - 1, 1 - w . theta
    let slacks = |x: &[f64]| -> Vec<f64> {
        let mut s: Vec<f64> = (0..n - 1).map(|l| x[l] - x[l + 1]).collect();
        s.push(x[n - 1] - 1.0);
        s.push(1.0 - w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
        s
    };
    let grads = |l: usize| -> Vec<f64> {
        let mut g = vec![0.0; n];
        if l < n - 1 {
            g[l] = 1.0;
            g[l + 1] = -1.0;
        } else if l == n - 1 {
            g[n - 1] = 1.0;
        } else {
            for (gi, wi) in g.iter_mut().zip(&w) {
                *gi = -wi;
            }
        }
        g
    };
    let f = |x: &[f64]| layers.iter().zip(x).map(|(l, &t)| l.cost(t)).sum::<f64>() / scale;
    let phi = |x: &[f64], t: f64| -> Option<f64> {
        let s = slacks(x);
        if s.iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        Some(t * f(x) - s.iter().map(|v| v.ln()).sum::<f64>())
    };
    let mut x = start.to_vec();
    if phi(&x, 1.0).is_none() {
        return Err(Error::InfeasibleInit(format!("theta {start:?} is not strictly inside the feasible set")));
    }
    let cgrad: Vec<Vec<f64>> = (0..=n).map(grads).collect();
    let mut t = opts.t0;
    let mut iterations = 0;
    let mut converged = true;
    loop {
        for _ in 0..opts.max_newton {
            iterations += 1;
            let s = slacks(&x);
            let mut g: Vec<f64> = layers.iter().zip(&x).map(|(l, &th)| -t * l.neg_slope(th) / scale).collect();
            let mut h = vec![vec![0.0; n]; n];
            for (i, (l, &th)) in layers.iter().zip(&x).enumerate() {
                h[i][i] = t * l.curvature(th) / scale;
            }
            for (cg, &sv) in cgrad.iter().zip(&s) {
                for i in 0..n {
                    g[i] -= cg[i] / sv;
                    for j in 0..n {
                        h[i][j] += cg[i] * cg[j] / (sv * sv);
                    }
                }
            }
            let Some(dx) = solve_dense(h, g.iter().map(|v| -v).collect()) else {
                return Err(Error::Numeric("singular Newton system".into()));
            };
            let decrement: f64 = -g.iter().zip(&dx).map(|(a, b)| a * b).sum::<f64>();
            if decrement / 2.0 <= opts.newton_tol {
                break;
            }
            let base = phi(&x, t).expect("iterate stays interior");
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-20 {
                let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + step * b).collect();
                if let Some(v) = phi(&cand, t) {
                    if v <= base - 0.25 * step * decrement {
                        x = cand;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if t >= opts.t_max {
            break;
        }
        t *= opts.growth;
        if iterations > 100_000 {
            converged = false;
            break;
        }
    }
    Ok(ConvexSolution { objective: f(&x) * scale, theta: x, multiplier: f64::NAN, iterations, converged })
}

/// Finite-difference check of the transformed cost's Hessian at `probe`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub analytic_diagonal: Vec<f64>,
    pub numeric_diagonal: Vec<f64>,
    /// Largest `|numeric - analytic| / |analytic|` on the diagonal.
    pub max_relative_error: f64,
    /// Largest mixed second difference in absolute value.
    pub max_off_diagonal: f64,
    pub min_diagonal: f64,
}

impl ConvexityReport {
    pub fn passes(&self, rel_tol: f64, off_tol: f64) -> bool {
        self.min_diagonal >= -1e-8 && self.max_relative_error <= rel_tol && self.max_off_diagonal <= off_tol
    }
}

pub fn verify_convexity(problem: &AllocationProblem, probe: &[f64]) -> Result<ConvexityReport> {
    let layers = layers_of(problem)?;
    let n = layers.len();
    if probe.len() != n || probe.iter().any(|&t| !(t >= 1.0)) {
        return Err(domain(format!("probe {probe:?} must hold {n} thetas >= 1")));
    }
    let f = |x: &[f64]| layers.iter().zip(x).map(|(l, &t)| l.cost(t)).sum::<f64>();
    let step: Vec<f64> = probe.iter().map(|t| 1e-3 * t).collect();
    let at = |moves: &[(usize, f64)]| {
        let mut x = probe.to_vec();
        for &(i, d) in moves {
            x[i] += d;
        }
        f(&x)
    };
    let f0 = f(probe);
    let mut numeric_diagonal = Vec::with_capacity(n);
    let mut max_off_diagonal = 0.0f64;
    for i in 0..n {
        let h = step[i];
        numeric_diagonal.push((at(&[(i, h)]) - 2.0 * f0 + at(&[(i, -h)])) / (h * h));
        for j in i + 1..n {
            let hj = step[j];
            let mixed = (at(&[(i, h), (j, hj)]) - at(&[(i, h), (j, -hj)]) - at(&[(i, -h), (j, hj)])
                + at(&[(i, -h), (j, -hj)]))
                / (4.0 * h * hj);
            max_off_diagonal = max_off_diagonal.max(mixed.abs());
        }
    }
    let analytic_diagonal: Vec<f64> = layers.iter().zip(probe).map(|(l, &t)| l.curvature(t)).collect();
    let max_relative_error = analytic_diagonal
        .iter()
        .zip(&numeric_diagonal)
        .map(|(a, b)| if *a == 0.0 { b.abs() } else { ((b - a) / a).abs() })
        .fold(0.0, f64::max);
    let min_diagonal = numeric_diagonal.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ConvexityReport { analytic_diagonal, numeric_diagonal, max_relative_error, max_off_diagonal, min_diagonal })
}

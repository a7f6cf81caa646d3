//! MNRC and symbol-budget allocation across layers.
//!
//! Every solver works on an [`AllocationProblem`] and returns an
//! [`Allocation`] whose symbol counts come from the nested forward procedure
//! in [`crate::outage`], so all solvers share one feasibility set.

mod convex;
mod dynamic;
mod eep;
mod exhaustive;
mod gd;

pub use convex::{
    convex_objective, solve_convex, solve_convex_from, solve_convex_theta, verify_convexity, BarrierOptions,
    ConvexSolution, ConvexityReport,
};
pub use dynamic::{dissatisfaction, solve_dynamic};
pub use eep::{eep_allocation, eep_symbols, implied_mnrcs};
pub use exhaustive::{solve_exhaustive, ExhaustiveOptions};
pub use gd::{solve_optimized, solve_simplified_gd, GdOptions};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::outage::{
    clamp_delta, cumulative_success_exact, cumulative_success_model, forward_layer_allocation, required_symbols_full,
    CodeParams, ForwardAllocation, LayerSpec, DELTA_EPS,
};
use crate::population::{validate_population, ClientClass};
use crate::utility::UtilityTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Exhaustive,
    SimplifiedGd,
    Convex,
    Dynamic,
    Eep,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exhaustive => "exhaustive",
            Self::SimplifiedGd => "simplified-gd",
            Self::Convex => "convex",
            Self::Dynamic => "dynamic",
            Self::Eep => "eep",
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Self::Exhaustive, Self::SimplifiedGd, Self::Convex, Self::Dynamic, Self::Eep]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown solver '{s}'")))
    }
}

/// Layers, clients and bandwidth of one allocation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    pub layers: Vec<LayerSpec>,
    pub classes: Vec<ClientClass>,
    pub n_max: u64,
    pub code: CodeParams,
    table: UtilityTable,
}

impl AllocationProblem {
    pub fn new(layers: Vec<LayerSpec>, classes: Vec<ClientClass>, n_max: u64, code: CodeParams) -> Result<Self> {
        code.validate()?;
        if layers.is_empty() {
            return Err(Error::Config("no layers".into()));
        }
        for (l, layer) in layers.iter().enumerate() {
            if layer.source_symbols == 0 {
                return Err(Error::Config(format!("layer {} has no source symbols", l + 1)));
            }
            let p = layer.outage_target;
            if !(p > 0.0 && p <= 0.5 && p <= code.a) {
                return Err(Error::Config(format!("layer {} outage target {p} not in (0, min(a, 0.5)]", l + 1)));
            }
        }
        validate_population(&classes)?;
        if let Some(c) = classes.iter().find(|c| c.highest_layer > layers.len()) {
            return Err(Error::Config(format!(
                "class decodes {} layers but the stream has {}",
                c.highest_layer,
                layers.len()
            )));
        }
        let table = UtilityTable::new(&classes);
        Ok(Self { layers, classes, n_max, code, table })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn u_max(&self) -> f64 {
        self.table.u_max
    }

    pub fn table(&self) -> &UtilityTable {
        &self.table
    }

    /// Same problem with a different bandwidth.
    pub fn with_n_max(&self, n_max: u64) -> Self {
        Self { n_max, ..self.clone() }
    }

    /// Classes that decode layer `l` (0-based) with their weight `alpha_hat`.
    pub(crate) fn layer_members(&self, l: usize) -> impl Iterator<Item = (&ClientClass, f64)> + '_ {
        self.classes
            .iter()
            .zip(&self.table.alpha_hat)
            .filter(move |(c, _)| c.highest_layer > l)
            .map(move |(c, a)| (c, a[l]))
    }

    /// `sum alpha_hat * F(delta_l)` without the ordering check.
    pub(crate) fn loss_of(&self, deltas: &[f64]) -> f64 {
        self.classes
            .iter()
            .zip(&self.table.alpha_hat)
            .map(|(c, a)| a.iter().zip(deltas).map(|(w, &d)| w * c.dist.cdf(d)).sum::<f64>())
            .sum()
    }

    pub fn loss(&self, deltas: &[f64]) -> Result<f64> {
        self.check_deltas(deltas)?;
        Ok(self.loss_of(deltas))
    }

    pub fn utility(&self, deltas: &[f64]) -> Result<f64> {
        Ok(self.u_max() - self.loss(deltas)?)
    }

    pub(crate) fn check_deltas(&self, deltas: &[f64]) -> Result<()> {
        if deltas.len() != self.layers.len() {
            return Err(domain(format!("{} MNRCs for {} layers", deltas.len(), self.layers.len())));
        }
        if deltas.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return Err(domain(format!("MNRCs {deltas:?} outside [0, 1]")));
        }
        crate::outage::check_ordered(deltas)
    }

    /// Nested symbol counts for `deltas`, or `None` when the forward procedure fails.
    pub(crate) fn price(&self, deltas: &[f64]) -> Option<Vec<u64>> {
        match forward_layer_allocation(&self.layers, deltas, &self.code) {
            Ok(ForwardAllocation::Feasible(n)) => Some(n),
            _ => None,
        }
    }

    /// Nested symbol counts when they fit the bandwidth.
    pub(crate) fn price_within(&self, deltas: &[f64]) -> Option<Vec<u64>> {
        self.price(deltas).filter(|n| n.iter().sum::<u64>() <= self.n_max)
    }

    /// Scale `deltas` up by the smallest common factor (within bisection
    /// tolerance) that makes the nested budget fit.
    pub(crate) fn restore(&self, deltas: &[f64]) -> Option<(Vec<f64>, Vec<u64>)> {
        self.restore_masked(deltas, &vec![true; deltas.len()])
    }

    /// As [`Self::restore`] but only the layers flagged in `free` are scaled;
    /// the rest are raised just enough to stay ordered.
    pub(crate) fn restore_masked(&self, deltas: &[f64], free: &[bool]) -> Option<(Vec<f64>, Vec<u64>)> {
        let deltas: Vec<f64> = deltas.iter().map(|&d| clamp_delta(d)).collect();
        if let Some(n) = self.price_within(&deltas) {
            return Some((deltas, n));
        }
        let scaled = |k: f64| -> Vec<f64> {
            let mut floor = 0.0f64;
            deltas
                .iter()
                .zip(free)
                .map(|(&d, &f)| {
                    floor = floor.max(if f { clamp_delta(d * k) } else { d });
                    floor
                })
                .collect()
        };
        let min = deltas.iter().zip(free).filter(|(_, &f)| f).map(|(&d, _)| d).fold(f64::INFINITY, f64::min);
        if !min.is_finite() {
            return None;
        }
        let mut hi = (1.0 - DELTA_EPS) / min;
        let mut best = {
            let d = scaled(hi);
            let n = self.price_within(&d)?;
            (d, n)
        };
        let mut lo = 1.0;
        for _ in 0..60 {
            if hi - lo <= 1e-12 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let d = scaled(mid);
            match self.price_within(&d) {
                Some(n) => {
                    hi = mid;
                    best = (d, n);
                }
                None => lo = mid,
            }
        }
        Some(best)
    }

    /// Where the nested procedure first breaks at `delta = 1 - eps` on every
    /// layer, and the bandwidth the base layer alone needs there.
    pub fn diagnose_infeasible(&self) -> Infeasibility {
        let top = vec![1.0 - DELTA_EPS; self.layers.len()];
        let base = &self.layers[0];
        let min_base_n_max =
            required_symbols_full(base.source_symbols, top[0], base.outage_target, &self.code).unwrap_or(u64::MAX);
        let failed_layer = match forward_layer_allocation(&self.layers, &top, &self.code) {
            Ok(ForwardAllocation::Feasible(n)) => {
                let mut used = 0;
                n.iter()
                    .position(|&x| {
                        used += x;
                        used > self.n_max
                    })
                    .unwrap_or(0)
            }
            Ok(ForwardAllocation::Infeasible { layer }) => layer,
            Err(_) => 0,
        };
        Infeasibility { failed_layer, min_base_n_max }
    }

    /// Per layer, the probability of decoding layers `1..=l` at MNRC `delta_l`,
    /// under the closed-form model and under the exact binomial outage.
    pub fn assurance(&self, deltas: &[f64], symbols: &[u64]) -> Result<Vec<LayerAssurance>> {
        (0..self.layers.len())
            .map(|l| {
                Ok(LayerAssurance {
                    required: 1.0 - self.layers[l].outage_target,
                    model: cumulative_success_model(&self.layers, symbols, l + 1, deltas[l], &self.code),
                    exact: cumulative_success_exact(&self.layers, symbols, l + 1, deltas[l], &self.code)?,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerAssurance {
    pub required: f64,
    pub model: f64,
    pub exact: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub grid_size: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Why no feasible allocation exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Infeasibility {
    /// First layer (0-based) that cannot be served at `delta = 1 - eps`.
    pub failed_layer: usize,
    /// Bandwidth the base layer needs on its own at `delta = 1 - eps`.
    pub min_base_n_max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub solver: Solver,
    pub deltas: Vec<f64>,
    pub symbols: Vec<u64>,
    pub utility: f64,
    pub loss: f64,
    pub feasible: bool,
    pub diagnostics: Diagnostics,
    pub infeasibility: Option<Infeasibility>,
}

impl Allocation {
    pub(crate) fn new(
        problem: &AllocationProblem,
        solver: Solver,
        deltas: Vec<f64>,
        symbols: Vec<u64>,
        diagnostics: Diagnostics,
    ) -> Self {
        let loss = problem.loss_of(&deltas);
        let feasible = symbols.iter().sum::<u64>() <= problem.n_max;
        Self {
            solver,
            utility: problem.u_max() - loss,
            loss,
            deltas,
            symbols,
            feasible,
            diagnostics,
            infeasibility: None,
        }
    }

    pub(crate) fn infeasible(problem: &AllocationProblem, solver: Solver, diagnostics: Diagnostics) -> Self {
        let l = problem.num_layers();
        let deltas = vec![1.0; l];
        let loss = problem.loss_of(&deltas);
        Self {
            solver,
            utility: problem.u_max() - loss,
            loss,
            deltas,
            symbols: vec![0; l],
            feasible: false,
            diagnostics,
            infeasibility: Some(problem.diagnose_infeasible()),
        }
    }

    pub fn total_symbols(&self) -> u64 {
        self.symbols.iter().sum()
    }
}

/// Euclidean projection onto non-decreasing sequences (pool adjacent violators).
pub(crate) fn isotonic_non_decreasing(x: &mut [f64]) {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(x.len());
    for &v in x.iter() {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let n = na + nb;
            *blocks.last_mut().unwrap() = ((a * na as f64 + b * nb as f64) / n as f64, n);
        }
    }
    let mut i = 0;
    for (v, n) in blocks {
        x[i..i + n].fill(v);
        i += n;
    }
}

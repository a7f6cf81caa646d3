use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{convex_then_gd, derive_seed, SegmentStream, StudySetup};
use crate::alloc::{dissatisfaction, eep_allocation, solve_dynamic, Allocation, AllocationProblem};
use crate::error::{Error, Result};
use crate::outage::{decoding_failure_prob, CodeParams, LayerSpec};
use crate::population::sample_clients;

/// How a client's per-segment result is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// A layer is received iff the client's RC reaches the layer's MNRC.
    #[default]
    Threshold,
    /// Draw the received symbol count and the decoder outcome.
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingConfig {
    pub stream: SegmentStream,
    pub n_max: Vec<u64>,
    pub lambdas: Vec<f64>,
    pub clients_per_class: usize,
    pub seed: u64,
    #[serde(default)]
    pub outcome: Outcome,
}

/// Summary of one policy at one bandwidth. Percentages throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRow {
    pub n_max: u64,
    pub policy: String,
    pub lambda: Option<f64>,
    pub mean_dissatisfaction: f64,
    /// Clients with at least one base-layer outage.
    pub z: f64,
    /// The same quantity read off the longest-burst histogram.
    pub z_from_bursts: f64,
    pub mean_utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n_max: u64,
    pub policy: String,
    pub lambda: Option<f64>,
    pub segment: usize,
    pub layer: usize,
    pub delta: f64,
    pub symbols: u64,
    pub utility: f64,
}

/// Base-layer outage runs: `incidents` runs of exactly `length` segments,
/// and `clients_longest` clients whose longest run has that length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstRow {
    pub n_max: u64,
    pub policy: String,
    pub lambda: Option<f64>,
    pub length: usize,
    pub incidents: u64,
    pub clients_longest: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SmoothingResult {
    pub rows: Vec<SmoothingRow>,
    pub traces: Vec<TraceRow>,
    pub bursts: Vec<BurstRow>,
}

impl SmoothingResult {
    /// Base-layer MNRC per segment for one policy.
    pub fn base_trace(&self, n_max: u64, lambda: Option<f64>) -> Vec<f64> {
        self.traces.iter().filter(|t| t.n_max == n_max && t.lambda == lambda && t.layer == 1).map(|t| t.delta).collect()
    }
}

/// Layers a client at `rc` receives under MNRC thresholds.
pub fn served_layers_threshold(deltas: &[f64], rc: f64) -> usize {
    deltas.iter().take_while(|&&d| d <= rc).count()
}

/// Layers a client at `rc` decodes in one random realization.
pub fn served_layers_monte_carlo<R: Rng>(
    layers: &[LayerSpec],
    symbols: &[u64],
    rc: f64,
    params: &CodeParams,
    rng: &mut R,
) -> usize {
    let mut served = 0;
    for (l, &n) in layers.iter().zip(symbols) {
        let k = Binomial::new(n, rc.clamp(0.0, 1.0)).map(|b| b.sample(rng)).unwrap_or(0);
        if rng.random::<f64>() < decoding_failure_prob(l.source_symbols, k, params) {
            break;
        }
        served += 1;
    }
    served
}

fn policy_run(problems: &[AllocationProblem], lambda: Option<f64>, setup: &StudySetup) -> Result<Vec<Allocation>> {
    let mut out: Vec<Allocation> = Vec::with_capacity(problems.len());
    for (k, p) in problems.iter().enumerate() {
        let a = match lambda {
            None => eep_allocation(p),
            Some(_) if k == 0 => convex_then_gd(p, setup.gd)?.1,
            Some(l) => solve_dynamic(p, &out[k - 1].deltas, l, setup.gd)?,
        };
        out.push(a);
    }
    Ok(out)
}

/// Solve the stream segment by segment under each smoothing weight (and the
/// EEP baseline) and follow a fixed client population through it.
pub fn run_smoothing(setup: &StudySetup, cfg: &SmoothingConfig) -> Result<SmoothingResult> {
    if cfg.lambdas.is_empty() || cfg.n_max.is_empty() {
        return Err(Error::Config("smoothing sweep lists must be non-empty".into()));
    }
    if let Some(l) = cfg.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::Config(format!("lambda {l} not in [0, 1]")));
    }
    cfg.stream.validate()?;
    if cfg.clients_per_class == 0 {
        return Err(Error::Config("smoothing needs at least one client per class".into()));
    }
    let clients: Vec<f64> = setup
        .classes
        .iter()
        .enumerate()
        .map(|(m, c)| sample_clients(&c.dist, cfg.clients_per_class, derive_seed(cfg.seed, m as u64)))
        .collect::<Result<Vec<_>>>()?
        .concat();

    let mut jobs: Vec<(u64, Option<f64>)> = Vec::new();
    for &n in &cfg.n_max {
        jobs.push((n, None));
        jobs.extend(cfg.lambdas.iter().map(|&l| (n, Some(l))));
    }
    let run = |(j, &(n_max, lambda)): (usize, &(u64, Option<f64>))| -> Result<SmoothingResult> {
        let problems: Vec<AllocationProblem> = (0..cfg.stream.len())
            .map(|k| AllocationProblem::new(cfg.stream.layers(k), setup.classes.clone(), n_max, setup.code))
            .collect::<Result<_>>()?;
        let allocs = policy_run(&problems, lambda, setup)?;
        let policy = if lambda.is_some() { "dynamic" } else { "eep" }.to_string();
        let mut res = SmoothingResult::default();
        for (k, a) in allocs.iter().enumerate() {
            for (l, (&d, &n)) in a.deltas.iter().zip(&a.symbols).enumerate() {
                res.traces.push(TraceRow {
                    n_max,
                    policy: policy.clone(),
                    lambda,
                    segment: k + 1,
                    layer: l + 1,
                    delta: d,
                    symbols: n,
                    utility: a.utility,
                });
            }
        }
        let transitions = allocs.len().saturating_sub(1).max(1) as f64;
        let d_bar = allocs.windows(2).map(|w| dissatisfaction(&setup.classes, &w[0].deltas, &w[1].deltas)).sum::<f64>()
            / transitions
            * 100.0;

        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 10_000 + j as u64));
        let k_seg = allocs.len();
        let mut incidents = vec![0u64; k_seg + 1];
        let mut longest = vec![0u64; k_seg + 1];
        let mut hit = 0u64;
        for &rc in &clients {
            let (mut run_len, mut max_run, mut any) = (0usize, 0usize, false);
            for (a, p) in allocs.iter().zip(&problems) {
                let out = match cfg.outcome {
                    Outcome::Threshold => rc < a.deltas[0],
                    Outcome::MonteCarlo => {
                        !a.feasible
                            || served_layers_monte_carlo(&p.layers[..1], &a.symbols[..1], rc, &p.code, &mut rng) == 0
                    }
                };
                if out {
                    any = true;
                    run_len += 1;
                } else if run_len > 0 {
                    incidents[run_len] += 1;
                    max_run = max_run.max(run_len);
                    run_len = 0;
                }
            }
            if run_len > 0 {
                incidents[run_len] += 1;
                max_run = max_run.max(run_len);
            }
            longest[max_run] += 1;
            hit += any as u64;
        }
        let total = clients.len() as f64;
        let z = hit as f64 / total * 100.0;
        let z_from_bursts = longest[1..].iter().sum::<u64>() as f64 / total * 100.0;
        for len in 1..=k_seg {
            res.bursts.push(BurstRow {
                n_max,
                policy: policy.clone(),
                lambda,
                length: len,
                incidents: incidents[len],
                clients_longest: longest[len],
            });
        }
        res.rows.push(SmoothingRow {
            n_max,
            policy,
            lambda,
            mean_dissatisfaction: d_bar,
            z,
            z_from_bursts,
            mean_utility: allocs.iter().map(|a| a.utility).sum::<f64>() / allocs.len() as f64,
        });
        Ok(res)
    };
    let parts: Vec<SmoothingResult> = if setup.parallel {
        jobs.par_iter().enumerate().map(run).collect::<Result<_>>()?
    } else {
        jobs.iter().enumerate().map(run).collect::<Result<_>>()?
    };
    let mut out = SmoothingResult::default();
    for p in parts {
        out.rows.extend(p.rows);
        out.traces.extend(p.traces);
        out.bursts.extend(p.bursts);
    }
    Ok(out)
}

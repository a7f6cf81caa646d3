use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::outage::LayerSpec;

/// Symbols that fit in one segment: `floor(omega * t_seg / b)`.
pub fn service_bandwidth(omega: f64, t_seg: f64, b: f64) -> Result<u64> {
    if !(omega > 0.0 && t_seg > 0.0 && b > 0.0) {
        return Err(domain(format!("bandwidth inputs must be positive: omega {omega}, T {t_seg}, B {b}")));
    }
    // guard against products like 4.16e6 * 1 / 400 landing a hair under an integer
    let x = omega * t_seg / b;
    Ok((x * (1.0 + 4.0 * f64::EPSILON)).floor() as u64)
}

/// Rate variation bound for a max-to-min rate ratio.
pub fn gamma_for_mrr(mrr: f64) -> Result<f64> {
    if !(mrr >= 1.0 && mrr.is_finite()) {
        return Err(domain(format!("rate ratio {mrr} must be at least 1")));
    }
    Ok((mrr - 1.0) / (mrr + 1.0))
}

pub fn mrr_for_gamma(gamma: f64) -> f64 {
    (1.0 + gamma) / (1.0 - gamma)
}

/// Per-segment layer sizes of a variable-rate source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentStream {
    /// `segments[k][l]`: source symbols of layer `l` in segment `k`.
    pub segments: Vec<Vec<u64>>,
    /// Outage target of each layer.
    pub outage_targets: Vec<f64>,
}

impl SegmentStream {
    pub fn constant(base: &[LayerSpec], k: usize) -> Self {
        Self {
            segments: vec![base.iter().map(|l| l.source_symbols).collect(); k],
            outage_targets: base.iter().map(|l| l.outage_target).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(domain("stream has no segments"));
        }
        for (k, s) in self.segments.iter().enumerate() {
            if s.len() != self.outage_targets.len() || s.contains(&0) {
                return Err(domain(format!("segment {} sizes {s:?} do not match the layer count or are empty", k + 1)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn layers(&self, k: usize) -> Vec<LayerSpec> {
        self.segments[k].iter().zip(&self.outage_targets).map(|(&s, &p)| LayerSpec::new(s, p)).collect()
    }

    /// Largest over smallest total segment size.
    pub fn realized_mrr(&self) -> f64 {
        let totals: Vec<u64> = self.segments.iter().map(|s| s.iter().sum()).collect();
        let max = *totals.iter().max().unwrap_or(&1) as f64;
        let min = *totals.iter().min().unwrap_or(&1) as f64;
        max / min
    }

    /// Stream whose segment `k` is `base` scaled by `factors[k]` on every layer.
    pub fn scaled(base: &[LayerSpec], factors: &[f64]) -> Self {
        Self {
            segments: factors
                .iter()
                .map(|f| base.iter().map(|l| ((l.source_symbols as f64 * f).round() as u64).max(1)).collect())
                .collect(),
            outage_targets: base.iter().map(|l| l.outage_target).collect(),
        }
    }
}

/// Layer sizes `round(S_l (1 + gamma))` with `gamma` uniform on
/// `[-gamma_max, gamma_max]`, independent per layer and segment.
pub fn generate_variable_stream(base: &[LayerSpec], gamma_max: f64, k: usize, seed: u64) -> Result<SegmentStream> {
    if !(0.0..1.0).contains(&gamma_max) {
        return Err(domain(format!("gamma_max {gamma_max} not in [0, 1)")));
    }
    let unit = unit_draws(base.len(), k, seed);
    Ok(stream_from_unit(base, gamma_max, &unit))
}

/// Uniform `[-1, 1]` draws shared by streams of different `gamma_max`, so
/// sweeps over the rate ratio use common random numbers.
pub(crate) fn unit_draws(layers: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k).map(|_| (0..layers).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect()
}

pub(crate) fn stream_from_unit(base: &[LayerSpec], gamma_max: f64, unit: &[Vec<f64>]) -> SegmentStream {
    SegmentStream {
        segments: unit
            .iter()
            .map(|u| {
                base.iter()
                    .zip(u)
                    .map(|(l, g)| ((l.source_symbols as f64 * (1.0 + gamma_max * g)).round() as u64).max(1))
                    .collect()
            })
            .collect(),
        outage_targets: base.iter().map(|l| l.outage_target).collect(),
    }
}

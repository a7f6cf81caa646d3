use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FfrConfig {
    /// Mean RC of the test client.
    pub client_mean: f64,
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub frames_per_segment: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfrRow {
    pub trace: String,
    pub sigma: f64,
    /// Frames frozen by base-layer outage, percent.
    pub ffr: f64,
}

fn truncated_normal<R: Rng>(mean: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return mean.clamp(0.0, 1.0);
    }
    for _ in 0..10_000 {
        let z: f64 = rng.sample(StandardNormal);
        let x = mean + sigma * z;
        if (0.0..=1.0).contains(&x) {
            return x;
        }
    }
    mean.clamp(0.0, 1.0)
}

/// Frame freeze rate of a test client whose RC is redrawn every segment,
/// against each named trace of per-segment base-layer MNRCs.
pub fn run_ffr(traces: &[(String, Vec<f64>)], cfg: &FfrConfig) -> Result<Vec<FfrRow>> {
    if cfg.sigmas.is_empty() || cfg.trials == 0 || cfg.frames_per_segment == 0 {
        return Err(Error::Config("FFR study needs sigmas, trials and frames per segment".into()));
    }
    if cfg.sigmas.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::Config("FFR sigmas must be non-negative".into()));
    }
    let mut rows = Vec::new();
    for (si, &sigma) in cfg.sigmas.iter().enumerate() {
        // the same client draws are replayed against every trace
        for (name, trace) in traces {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, si as u64));
            let mut frozen = 0u64;
            let mut total = 0u64;
            for _ in 0..cfg.trials {
                for &d1 in trace {
                    let rc = truncated_normal(cfg.client_mean, sigma, &mut rng);
                    if rc < d1 {
                        frozen += cfg.frames_per_segment as u64;
                    }
                    total += cfg.frames_per_segment as u64;
                }
            }
            rows.push(FfrRow { trace: name.clone(), sigma, ffr: frozen as f64 / total.max(1) as f64 * 100.0 });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mean: f64) -> FfrConfig {
        FfrConfig { client_mean: mean, sigmas: vec![0.0], trials: 10, frames_per_segment: 30, seed: 1 }
    }

    #[test]
    fn deterministic_extremes() {
        let t = vec![("a".to_string(), vec![0.3, 0.4, 0.35])];
        assert_eq!(run_ffr(&t, &cfg(0.9)).unwrap()[0].ffr, 0.0);
        assert_eq!(run_ffr(&t, &cfg(0.1)).unwrap()[0].ffr, 100.0);
        assert!((run_ffr(&t, &cfg(0.37)).unwrap()[0].ffr - 100.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_client() {
        let t = vec![("lo".to_string(), vec![0.15; 9]), ("hi".to_string(), vec![0.25; 9])];
        let c = FfrConfig { client_mean: 0.2, sigmas: vec![0.05, 0.1], trials: 2000, frames_per_segment: 30, seed: 4 };
        let rows = run_ffr(&t, &c).unwrap();
        assert!(rows[0].ffr < rows[1].ffr);
        assert_eq!(rows, run_ffr(&t, &c).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!((0..1000).map(|_| truncated_normal(0.0, 0.5, &mut rng)).all(|x| (0.0..=1.0).contains(&x)));
    }
}

//! Perceptual quality (NMOS) and the multicast utility built on it.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::outage::check_ordered;
use crate::population::ClientClass;

pub const QCIF_PIXELS: f64 = 176.0 * 144.0;
pub const CIF_PIXELS: f64 = 352.0 * 288.0;

/// Sensitivities of the normalized MOS plus the display the scores are
/// normalized against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NmosParams {
    pub b_s: f64,
    pub b_f: f64,
    /// PSNR at which the quality factor is one half, in dB.
    pub b_p: f64,
    pub s_max: f64,
    pub f_max: f64,
}

impl NmosParams {
    /// Sensitivities measured for the Crew sequence.
    pub fn crew(s_max: f64, f_max: f64) -> Self {
        Self { b_s: 3.49, b_f: 7.23, b_p: 29.68, s_max, f_max }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b_s > 0.0 && self.b_f > 0.0 && self.s_max > 0.0 && self.f_max > 0.0 && self.b_p.is_finite()) {
            return Err(Error::Config(format!("invalid NMOS parameters {self:?}")));
        }
        Ok(())
    }
}

/// Spatial size, frame rate and PSNR a layer plays back at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerPlayback {
    pub pixels: f64,
    pub frame_rate: f64,
    pub psnr: f64,
}

fn saturating(b: f64, x: f64) -> f64 {
    (-(b * x)).exp_m1() / (-b).exp_m1()
}

/// Normalized MOS in `[0, 1)`. Playback larger than the display is capped to it.
pub fn nmos(pb: &LayerPlayback, params: &NmosParams) -> f64 {
    let s = pb.pixels.min(params.s_max) / params.s_max;
    let f = pb.frame_rate.min(params.f_max) / params.f_max;
    let quality = 1.0 - 1.0 / (1.0 + (0.34 * (pb.psnr - params.b_p)).exp());
    saturating(params.b_s, s) * saturating(params.b_f, f) * quality
}

/// Preference weights `decay^(h - l)` for `l = 1..=h`.
pub fn preference_weights(h: usize, decay: f64) -> Vec<f64> {
    (1..=h).map(|l| decay.powi((h - l) as i32)).collect()
}

/// Utility `W_{m,l} * NMOS` of a class receiving layers `1..=l` (1-based).
/// A class without preference weights weighs every layer by one.
pub fn utility_rate(class: &ClientClass, l: usize, nmos_ml: f64) -> Result<f64> {
    if l == 0 {
        return Ok(0.0);
    }
    if l > class.highest_layer {
        return Err(domain(format!("class decodes up to layer {} but layer {l} was asked", class.highest_layer)));
    }
    let w = if class.prefs.is_empty() { 1.0 } else { class.prefs[l - 1] };
    Ok(w * nmos_ml)
}

/// Successive differences of `U(R_1), ..., U(R_h)` with `U(0) = 0`.
pub fn marginal_utilities(utilities: &[f64]) -> Result<Vec<f64>> {
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(utilities.len());
    for (l, &u) in utilities.iter().enumerate() {
        if !(u >= prev) {
            return Err(domain(format!("utility drops from {prev} to {u} at layer {}", l + 1)));
        }
        out.push(u - prev);
        prev = u;
    }
    Ok(out)
}

/// Layer utilities of a class from per-layer playback and its display-scoped
/// NMOS parameters and preference weights.
pub fn nmos_alphas(playback: &[LayerPlayback], params: &NmosParams, prefs: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    if prefs.len() > playback.len() {
        return Err(domain(format!("{} preference weights for {} layers", prefs.len(), playback.len())));
    }
    let rates: Vec<f64> = prefs.iter().zip(playback).map(|(w, pb)| w * nmos(pb, params)).collect();
    marginal_utilities(&rates)
}

/// Prior-weighted layer utilities of a population.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityTable {
    /// `alpha_hat[m][l] = prior_m * alpha_{m,l}`.
    pub alpha_hat: Vec<Vec<f64>>,
    pub u_max: f64,
}

impl UtilityTable {
    pub fn new(classes: &[ClientClass]) -> Self {
        let alpha_hat: Vec<Vec<f64>> = classes.iter().map(|c| c.alphas.iter().map(|a| c.prior * a).collect()).collect();
        let u_max = alpha_hat.iter().flatten().sum();
        Self { alpha_hat, u_max }
    }
}

fn check_deltas(deltas: &[f64], classes: &[ClientClass]) -> Result<()> {
    check_ordered(deltas)?;
    if let Some(c) = classes.iter().find(|c| c.highest_layer > deltas.len()) {
        return Err(domain(format!("class decodes {} layers but only {} MNRCs given", c.highest_layer, deltas.len())));
    }
    Ok(())
}

/// Expected utility lost to outage, `sum alpha_hat * F(delta_l)`.
pub fn loss(deltas: &[f64], classes: &[ClientClass]) -> Result<f64> {
    check_deltas(deltas, classes)?;
    Ok(classes
        .iter()
        .map(|c| c.prior * c.alphas.iter().zip(deltas).map(|(a, &d)| a * c.dist.cdf(d)).sum::<f64>())
        .sum())
}

/// Expected multicast utility `U_max - loss`.
pub fn total_utility(deltas: &[f64], classes: &[ClientClass]) -> Result<f64> {
    let l = loss(deltas, classes)?;
    Ok(UtilityTable::new(classes).u_max - l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{DistributionPreset, RcDistribution};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn crew_layers() -> [LayerPlayback; 3] {
        [
            LayerPlayback { pixels: QCIF_PIXELS, frame_rate: 15.0, psnr: 30.5 },
            LayerPlayback { pixels: QCIF_PIXELS, frame_rate: 30.0, psnr: 35.1 },
            LayerPlayback { pixels: CIF_PIXELS, frame_rate: 30.0, psnr: 35.2 },
        ]
    }

    #[test]
    fn nmos_values() {
        let p = NmosParams::crew(CIF_PIXELS, 30.0);
        let mid = LayerPlayback { pixels: CIF_PIXELS, frame_rate: 30.0, psnr: p.b_p };
        assert_abs_diff_eq!(nmos(&mid, &p), 0.5, epsilon = 1e-15);
        let got: Vec<f64> = crew_layers().iter().map(|l| nmos(l, &p)).collect();
        for (g, want) in got.iter().zip([0.31, 0.48, 0.86]) {
            assert!((g - want).abs() <= 0.05, "{got:?}");
        }
        assert_abs_diff_eq!(got[0], 0.332824543576571, epsilon = 1e-13);
        assert_abs_diff_eq!(got[1], 0.518319476410776, epsilon = 1e-13);
        assert_abs_diff_eq!(got[2], 0.867243135292430, epsilon = 1e-13);
    }

    #[test]
    fn nmos_ratio_only_and_monotone() {
        let p = NmosParams::crew(CIF_PIXELS, 30.0);
        let q = NmosParams { s_max: 4.0 * CIF_PIXELS, ..p };
        for l in crew_layers() {
            let scaled = LayerPlayback { pixels: 4.0 * l.pixels, ..l };
            assert_abs_diff_eq!(nmos(&l, &p), nmos(&scaled, &q), epsilon = 1e-14);
            let up = [
                LayerPlayback { pixels: l.pixels * 1.5, ..l },
                LayerPlayback { frame_rate: l.frame_rate + 1.0, ..l },
                LayerPlayback { psnr: l.psnr + 0.5, ..l },
            ];
            assert!(up.iter().all(|u| nmos(u, &p) >= nmos(&l, &p)));
        }
        let qcif_display = NmosParams::crew(QCIF_PIXELS, 30.0);
        let big = crew_layers()[2];
        let capped = LayerPlayback { pixels: QCIF_PIXELS, ..big };
        assert_eq!(nmos(&big, &qcif_display), nmos(&capped, &qcif_display));
    }

    #[test]
    fn rates_and_margins() {
        let u = RcDistribution::uniform(0.0, 1.0).unwrap();
        let mut c = ClientClass::new(3, 1.0, u, vec![0.3, 0.2, 0.5]).unwrap();
        assert_abs_diff_eq!(utility_rate(&c, 3, 0.86).unwrap(), 0.86);
        c.prefs = preference_weights(3, 0.9);
        assert_abs_diff_eq!(utility_rate(&c, 1, 0.31).unwrap(), 0.2511, epsilon = 1e-12);
        assert!(utility_rate(&c, 4, 0.5).is_err());
        assert_eq!(utility_rate(&c, 0, 0.5).unwrap(), 0.0);
        c.prefs = vec![0.0, 1.0, 1.0];
        assert_eq!(utility_rate(&c, 1, 0.31).unwrap(), 0.0);

        assert_eq!(marginal_utilities(&[0.4]).unwrap(), vec![0.4]);
        let a = marginal_utilities(&[0.31, 0.48, 0.86]).unwrap();
        for (x, y) in a.iter().zip([0.31, 0.17, 0.38]) {
            assert_abs_diff_eq!(x, &y, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(a.iter().sum::<f64>(), 0.86, epsilon = 1e-15);
        assert!(marginal_utilities(&[0.5, 0.4]).is_err());

        let p = NmosParams::crew(CIF_PIXELS, 30.0);
        let al = nmos_alphas(&crew_layers(), &p, &[1.0, 1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(al.iter().sum::<f64>(), nmos(&crew_layers()[2], &p), epsilon = 1e-15);
    }

    #[test]
    fn total_utility_examples() {
        let u = RcDistribution::uniform(0.0, 1.0).unwrap();
        let c = ClientClass::new(1, 1.0, u, vec![1.0]).unwrap();
        assert_abs_diff_eq!(total_utility(&[0.4], std::slice::from_ref(&c)).unwrap(), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(total_utility(&[0.0], std::slice::from_ref(&c)).unwrap(), 1.0);
        assert_abs_diff_eq!(total_utility(&[1.0], std::slice::from_ref(&c)).unwrap(), 0.0);
        assert!(total_utility(&[0.5, 0.4], &[c]).is_err());
    }

    fn random_population(rng: &mut ChaCha8Rng) -> Vec<ClientClass> {
        let m = rng.random_range(1..=3);
        let priors: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = priors.iter().sum();
        priors
            .iter()
            .map(|p| {
                let h = rng.random_range(1..=3);
                let alphas = (0..h).map(|_| rng.random::<f64>()).collect();
                let dist = DistributionPreset::ALL[rng.random_range(0..4)].distribution();
                ClientClass::new(h, p / total, dist, alphas).unwrap()
            })
            .collect()
    }

    #[test]
    fn loss_form_matches_direct_sum_and_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let classes = random_population(&mut rng);
            let mut d: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            d.sort_by(f64::total_cmp);
            let u = total_utility(&d, &classes).unwrap();
            let direct: f64 = classes
                .iter()
                .map(|c| c.prior * c.alphas.iter().zip(&d).map(|(a, &x)| a * (1.0 - c.dist.cdf(x))).sum::<f64>())
                .sum();
            assert!((u - direct).abs() <= 1e-12 * direct.abs().max(1e-300) + 1e-15);
            let u_max = UtilityTable::new(&classes).u_max;
            assert!(u >= -1e-15 && u <= u_max + 1e-15);
            let l = rng.random_range(0..3);
            let mut e = d.clone();
            e[l] = (e[l] + rng.random::<f64>() * 0.2).min(if l < 2 { e[l + 1] } else { 1.0 });
            assert!(total_utility(&e, &classes).unwrap() <= u + 1e-15);
        }
    }
}

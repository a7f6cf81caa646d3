//! Decoding-failure and outage probability models for rateless-coded layers
//! sent over memoryless erasure channels.
//!
//! A layer of `S` source symbols is protected by `N` transmitted fountain
//! symbols. A client with reception coefficient `delta` receives
//! `K ~ Binomial(N, delta)` of them and fails to decode with probability
//! `P_f(S, K)`. Three views of the resulting outage probability live here:
//!
//! * [`outage_exact`]: the binomial expectation of `P_f`, summed in log space.
//! * [`outage_model`]: the closed-form stretched-exponential approximation,
//!   together with its inverse [`required_symbols_full`].
//! * [`required_symbols_linear`]: the linear budget model used by the convex
//!   formulation.
//!
//! [`forward_layer_allocation`] chains the inverse model across layers so that
//! the cumulative probability of decoding layers `1..=l` meets each layer's
//! assurance target at that layer's MNRC.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};

/// Lower/upper clamp applied to reception coefficients before the closed-form
/// model is evaluated (it divides by both `delta` and `1 - delta`).
pub const DELTA_EPS: f64 = 1e-6;

/// Above this block size the binomial CDF is taken from the regularized
/// incomplete beta function instead of a full term-by-term sum.
pub const DIRECT_SUM_LIMIT: u64 = 100_000;

/// Largest block size [`outage_exact`] accepts.
pub const EXACT_LIMIT: u64 = 10_000_000;

/// Clamp a reception coefficient into `[DELTA_EPS, 1 - DELTA_EPS]`.
#[inline]
pub fn clamp_delta(delta: f64) -> f64 {
    delta.clamp(DELTA_EPS, 1.0 - DELTA_EPS)
}

/// Constants of the rateless decoding-failure model `a * b^(K - S)` and the
/// overhead exponent of the closed-form outage approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeParams {
    pub a: f64,
    pub b: f64,
    /// Overhead exponent `H` of the closed-form model.
    pub h: f64,
}

impl Default for CodeParams {
    fn default() -> Self {
        Self { a: 0.85, b: 0.567, h: 1.8 }
    }
}

impl CodeParams {
    pub fn new(a: f64, b: f64, h: f64) -> Result<Self> {
        let p = Self { a, b, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a <= 1.0) {
            return Err(domain(format!("code parameter a = {} not in (0, 1]", self.a)));
        }
        if !(self.b > 0.0 && self.b < 1.0) {
            return Err(domain(format!("code parameter b = {} not in (0, 1)", self.b)));
        }
        if !(self.h > 1.0 && self.h.is_finite()) {
            return Err(domain(format!("overhead exponent H = {} must exceed 1", self.h)));
        }
        Ok(())
    }
}

/// One SVC layer as seen by the allocator: its size in source symbols and the
/// outage probability it must be decoded within.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub source_symbols: u64,
    pub outage_target: f64,
}

impl LayerSpec {
    pub fn new(source_symbols: u64, outage_target: f64) -> Self {
        Self { source_symbols, outage_target }
    }
}

/// A single outage evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageQuery {
    pub source_symbols: u64,
    pub transmitted: u64,
    pub delta: f64,
    pub target: f64,
}

impl OutageQuery {
    pub fn validate(&self, params: &CodeParams) -> Result<()> {
        if self.source_symbols == 0 {
            return Err(domain("source symbol count must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(domain(format!("reception coefficient {} not in (0, 1]", self.delta)));
        }
        if !(self.target > 0.0 && self.target <= params.a.min(0.5)) {
            return Err(domain(format!("outage target {} not in (0, min(a, 0.5)]", self.target)));
        }
        Ok(())
    }

    pub fn exact(&self, params: &CodeParams) -> Result<f64> {
        outage_exact(self.source_symbols, self.transmitted, self.delta, params)
    }

    pub fn model(&self, params: &CodeParams) -> Result<f64> {
        outage_model(self.source_symbols, self.transmitted, self.delta, params)
    }

    /// Whether the closed-form model meets the target at this point.
    pub fn meets_target(&self, params: &CodeParams) -> Result<bool> {
        self.validate(params)?;
        Ok(matches!(self.model(params), Ok(p) if p <= self.target))
    }
}

/// Probability that `k` received symbols fail to recover `s` source symbols.
pub fn decoding_failure_prob(s: u64, k: u64, params: &CodeParams) -> f64 {
    if k <= s {
        1.0
    } else {
        (params.a * params.b.powf((k - s) as f64)).min(1.0)
    }
}

fn ln_binom_pmf(n: u64, k: u64, ln_d: f64, ln_1md: f64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0) + kf * ln_d + (nf - kf) * ln_1md
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Exact outage probability `E_K[P_f(s, K)]` with `K ~ Binomial(n, delta)`.
///
/// For `n <= DIRECT_SUM_LIMIT` every term is evaluated in log space, anchored
/// at the binomial mode and extended by the ratio recurrence
/// `pmf(k+1) / pmf(k) = (n-k)/(k+1) * delta/(1-delta)`. Larger blocks use the
/// regularized incomplete beta function for `P(K <= s)` plus the geometrically
/// decaying tail above `s`.
pub fn outage_exact(s: u64, n: u64, delta: f64, params: &CodeParams) -> Result<f64> {
    if s == 0 {
        return Err(domain("source symbol count must be at least 1"));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(domain(format!("reception coefficient {delta} not in [0, 1]")));
    }
    if n > EXACT_LIMIT {
        return Err(Error::ExactTooLarge { n, limit: EXACT_LIMIT });
    }
    if n <= s || delta == 0.0 {
        return Ok(1.0);
    }
    if delta == 1.0 {
        return Ok(decoding_failure_prob(s, n, params));
    }
    let ln_d = delta.ln();
    let ln_1md = (-delta).ln_1p();
    let (ln_a, ln_b) = (params.a.ln(), params.b.ln());

    let p = if n <= DIRECT_SUM_LIMIT {
        let mode = (((n + 1) as f64) * delta).floor().min(n as f64) as u64;
        let ln_ratio = ln_d - ln_1md;
        let mut ln_pmf = vec![0.0; (n + 1) as usize];
        ln_pmf[mode as usize] = ln_binom_pmf(n, mode, ln_d, ln_1md);
        for k in mode..n {
            let step = (((n - k) as f64) / ((k + 1) as f64)).ln() + ln_ratio;
            ln_pmf[(k + 1) as usize] = ln_pmf[k as usize] + step;
        }
        for k in (0..mode).rev() {
            let step = (((k + 1) as f64) / ((n - k) as f64)).ln() - ln_ratio;
            ln_pmf[k as usize] = ln_pmf[(k + 1) as usize] + step;
        }
        let terms: Vec<f64> = ln_pmf
            .iter()
            .enumerate()
            .map(|(k, lp)| {
                let k = k as u64;
                if k <= s {
                    *lp
                } else {
                    lp + ln_a + ((k - s) as f64) * ln_b
                }
            })
            .collect();
        log_sum_exp(&terms).exp()
    } else {
        // P(K <= s) = I_{1-delta}(n - s, s + 1)
        let cdf = beta_reg((n - s) as f64, (s + 1) as f64, 1.0 - delta);
        // a * b^j drops below 1e-300 after this many terms; pmf <= 1 bounds the rest.
        let span = ((1e-300f64).ln() - ln_a) / ln_b;
        let last = n.min(s + span.ceil() as u64);
        let terms: Vec<f64> =
            (s + 1..=last).map(|k| ln_binom_pmf(n, k, ln_d, ln_1md) + ln_a + ((k - s) as f64) * ln_b).collect();
        cdf + log_sum_exp(&terms).exp()
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Closed-form outage model on real-valued arguments; `None` below the
/// waterline `n < s / delta`.
#[inline]
pub(crate) fn model_value(s: f64, n: f64, delta: f64, h: f64) -> Option<f64> {
    let d = clamp_delta(delta);
    let excess = n - s / d;
    if excess < 0.0 {
        return None;
    }
    Some(0.5 * (-d * excess.powf(h) / (s * (1.0 - d))).exp())
}

/// Closed-form outage approximation
/// `0.5 * exp(-delta * (n - s/delta)^H / (s * (1 - delta)))`, valid for
/// `n >= s / delta`. `delta` is clamped to `[DELTA_EPS, 1 - DELTA_EPS]`.
pub fn outage_model(s: u64, n: u64, delta: f64, params: &CodeParams) -> Result<f64> {
    if s == 0 {
        return Err(domain("source symbol count must be at least 1"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(domain(format!("reception coefficient {delta} not in (0, 1]")));
    }
    model_value(s as f64, n as f64, delta, params.h).ok_or_else(|| {
        domain(format!("model undefined below waterline: N = {n} < S/delta = {}", s as f64 / clamp_delta(delta)))
    })
}

/// Overhead scale `tau = (-s * ln(2 p))^(1/H)` of the inverted model.
pub fn tau(s: u64, p_out: f64, params: &CodeParams) -> Result<f64> {
    if !(p_out > 0.0 && p_out <= 0.5) {
        return Err(domain(format!("outage target {p_out} not in (0, 0.5]")));
    }
    Ok((-(s as f64) * (2.0 * p_out).ln()).max(0.0).powf(1.0 / params.h))
}

/// Real-valued symbol requirement `s/delta + tau * ((1-delta)/delta)^(1/H)`.
#[inline]
pub(crate) fn symbols_full_real(s: f64, delta: f64, tau: f64, h: f64) -> f64 {
    let d = clamp_delta(delta);
    s / d + tau * ((1.0 - d) / d).powf(1.0 / h)
}

/// Derivative of [`symbols_full_real`] with respect to `delta`.
#[inline]
pub(crate) fn symbols_full_slope(s: f64, delta: f64, tau: f64, h: f64) -> f64 {
    let d = clamp_delta(delta);
    let r = (1.0 - d) / d;
    -s / (d * d) - tau / h * r.powf(1.0 / h - 1.0) / (d * d)
}

/// Smallest integer `N` whose closed-form outage at `delta` is at most `p_out`.
pub fn required_symbols_full(s: u64, delta: f64, p_out: f64, params: &CodeParams) -> Result<u64> {
    if s == 0 {
        return Err(domain("source symbol count must be at least 1"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(domain(format!("reception coefficient {delta} not in (0, 1]")));
    }
    let t = tau(s, p_out, params)?;
    Ok(required_symbols_with_tau(s, delta, p_out, t, params.h))
}

/// Inverse model with a precomputed `tau`; corrects the ceiling by at most a
/// few symbols so that the returned count is exactly the smallest meeting
/// `p_out` under [`outage_model`].
pub(crate) fn required_symbols_with_tau(s: u64, delta: f64, p_out: f64, tau: f64, h: f64) -> u64 {
    let sf = s as f64;
    let ok = |n: u64| matches!(model_value(sf, n as f64, delta, h), Some(p) if p <= p_out);
    let mut n = symbols_full_real(sf, delta, tau, h).ceil().max(1.0) as u64;
    while n > 1 && ok(n - 1) {
        n -= 1;
    }
    while !ok(n) {
        n += 1;
    }
    n
}

/// Per-layer weight `s + log_b(p_out / a)` of the linear budget model.
pub fn linear_overhead(s: u64, p_out: f64, params: &CodeParams) -> Result<f64> {
    if !(p_out > 0.0 && p_out <= params.a) {
        return Err(domain(format!("outage target {p_out} not in (0, a = {}]", params.a)));
    }
    Ok(s as f64 + (p_out / params.a).ln() / params.b.ln())
}

/// Linear budget model `ceil((s + log_b(p_out / a)) / delta)`.
pub fn required_symbols_linear(s: u64, delta: f64, p_out: f64, params: &CodeParams) -> Result<u64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(domain(format!("reception coefficient {delta} not in (0, 1]")));
    }
    let w = linear_overhead(s, p_out, params)?;
    Ok((w / delta.max(DELTA_EPS)).ceil() as u64)
}

/// Result of chaining the inverse outage model across layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForwardAllocation {
    /// Per-layer transmitted symbol counts.
    Feasible(Vec<u64>),
    /// Preceding layers already break the assurance of `layer` (0-based) at its MNRC.
    Infeasible { layer: usize },
}

impl ForwardAllocation {
    pub fn symbols(&self) -> Option<&[u64]> {
        match self {
            Self::Feasible(n) => Some(n),
            Self::Infeasible { .. } => None,
        }
    }
}

/// Nested target `1 - (1 - p) / prod_j (1 - P(S_j, N_j, delta))` for a layer
/// stacked on top of `below`; `None` when it is not positive.
#[inline]
pub(crate) fn nested_target(below: &[(u64, u64)], delta: f64, p_out: f64, h: f64) -> Option<f64> {
    let mut q = 1.0;
    for &(s, n) in below {
        let p = model_value(s as f64, n as f64, delta, h)?;
        q *= 1.0 - p;
    }
    let target = 1.0 - (1.0 - p_out) / q;
    (target > 0.0).then_some(target)
}

pub(crate) fn check_ordered(deltas: &[f64]) -> Result<()> {
    if deltas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Unordered(deltas.to_vec()));
    }
    Ok(())
}

/// Forward procedure: layer 1 inverts its own target at `deltas[0]`; each
/// later layer inverts the nested target left over once the layers below have
/// been charged their outage at this layer's MNRC.
pub fn forward_layer_allocation(
    layers: &[LayerSpec],
    deltas: &[f64],
    params: &CodeParams,
) -> Result<ForwardAllocation> {
    if layers.len() != deltas.len() {
        return Err(domain(format!("{} layers but {} reception coefficients", layers.len(), deltas.len())));
    }
    check_ordered(deltas)?;
    let mut below: Vec<(u64, u64)> = Vec::with_capacity(layers.len());
    for (l, (layer, &delta)) in layers.iter().zip(deltas).enumerate() {
        if !(layer.outage_target > 0.0 && layer.outage_target <= 0.5) {
            return Err(domain(format!("layer {} outage target {} not in (0, 0.5]", l + 1, layer.outage_target)));
        }
        let Some(target) = nested_target(&below, delta, layer.outage_target, params.h) else {
            return Ok(ForwardAllocation::Infeasible { layer: l });
        };
        let n = required_symbols_full(layer.source_symbols, delta, target, params)?;
        below.push((layer.source_symbols, n));
    }
    Ok(ForwardAllocation::Feasible(below.into_iter().map(|(_, n)| n).collect()))
}

/// Cumulative probability of decoding layers `1..=upto` at reception `delta`
/// under the closed-form model.
pub fn cumulative_success_model(
    layers: &[LayerSpec],
    symbols: &[u64],
    upto: usize,
    delta: f64,
    params: &CodeParams,
) -> f64 {
    layers[..upto]
        .iter()
        .zip(symbols)
        .map(|(l, &n)| match model_value(l.source_symbols as f64, n as f64, delta, params.h) {
            Some(p) => 1.0 - p,
            None => 0.0,
        })
        .product()
}

/// Same as [`cumulative_success_model`] but with the exact binomial outage.
pub fn cumulative_success_exact(
    layers: &[LayerSpec],
    symbols: &[u64],
    upto: usize,
    delta: f64,
    params: &CodeParams,
) -> Result<f64> {
    let mut q = 1.0;
    for (l, &n) in layers[..upto].iter().zip(symbols) {
        q *= 1.0 - outage_exact(l.source_symbols, n, delta, params)?;
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p() -> CodeParams {
        CodeParams::default()
    }

    #[test]
    fn failure_prob_branches() {
        assert_eq!(decoding_failure_prob(1000, 1000, &p()), 1.0);
        assert_eq!(decoding_failure_prob(1000, 900, &p()), 1.0);
        // 0.85 * 0.567^10, evaluated at 40 digits
        assert_relative_eq!(decoding_failure_prob(1000, 1010, &p()), 2.919_103_641_134_934e-3, max_relative = 1e-12);
    }

    #[test]
    fn exact_full_reception_collapses_to_failure_model() {
        assert_relative_eq!(
            outage_exact(1000, 1020, 1.0, &p()).unwrap(),
            1.002_490_125_610_262_6e-5,
            max_relative = 1e-12
        );
        assert_eq!(outage_exact(1000, 1000, 1.0, &p()).unwrap(), 1.0);
        assert_eq!(outage_exact(1000, 999, 0.7, &p()).unwrap(), 1.0);
    }

    #[test]
    fn exact_matches_naive_sum_small_n() {
        // Direct f64 summation is safe at this size and independent of the log-space path.
        let (s, n, d) = (20u64, 45u64, 0.6f64);
        let mut naive = 0.0;
        for k in 0..=n {
            let mut c = 1.0f64;
            for i in 0..k {
                c = c * ((n - i) as f64) / ((i + 1) as f64);
            }
            naive += c * d.powi(k as i32) * (1.0 - d).powi((n - k) as i32) * decoding_failure_prob(s, k, &p());
        }
        assert_relative_eq!(outage_exact(s, n, d, &p()).unwrap(), naive, max_relative = 1e-11);
    }

    #[test]
    fn exact_large_n_branch_agrees_with_direct_sum() {
        // Beta-function branch against a full log-space sum at the same point.
        let (s, n, d) = (80_000u64, 100_001u64, 0.8);
        let big = outage_exact(s, n, d, &p()).unwrap();
        let direct = {
            let ln_d = d.ln();
            let ln_1md = (1.0 - d).ln();
            let terms: Vec<f64> = (0..=n)
                .map(|k| {
                    let lp = ln_binom_pmf(n, k, ln_d, ln_1md);
                    if k <= s {
                        lp
                    } else {
                        lp + p().a.ln() + ((k - s) as f64) * p().b.ln()
                    }
                })
                .collect();
            log_sum_exp(&terms).exp()
        };
        assert_relative_eq!(big, direct, max_relative = 1e-8);
    }

    #[test]
    fn exact_rejects_oversized_blocks() {
        assert!(matches!(outage_exact(10, EXACT_LIMIT + 1, 0.5, &p()), Err(Error::ExactTooLarge { .. })));
    }

    #[test]
    fn exact_matches_monte_carlo() {
        use rand_distr::{Binomial, Distribution};
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(s, n, d) in &[(1000u64, 1500u64, 0.8), (1000, 1262, 0.8)] {
            let bin = Binomial::new(n, d).unwrap();
            let trials = 1_000_000;
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for _ in 0..trials {
                let k = bin.sample(&mut rng);
                let f = decoding_failure_prob(s, k, &p());
                sum += f;
                sum2 += f * f;
            }
            let mean = sum / trials as f64;
            let sd = ((sum2 / trials as f64 - mean * mean).max(0.0) / trials as f64).sqrt();
            let exact = outage_exact(s, n, d, &p()).unwrap();
            assert!((exact - mean).abs() <= 3.0 * sd + 1e-12, "{s} {n} {d}: exact {exact} mc {mean} sd {sd}");
        }
    }

    #[test]
    fn model_examples() {
        for &d in &[0.5, 0.8, 0.25] {
            let n = (1000.0 / d) as u64;
            assert_relative_eq!(outage_model(1000, n, d, &p()).unwrap(), 0.5, max_relative = 1e-12);
        }
        assert_relative_eq!(
            outage_model(1000, 2200, 0.5, &p()).unwrap(),
            4.768_594_499_534_071e-7,
            max_relative = 1e-10
        );
        assert!(outage_model(1000, 1999, 0.5, &p()).is_err());
    }

    #[test]
    fn tau_examples() {
        assert_relative_eq!(tau(1000, 1e-4, &p()).unwrap(), 152.580_155_998_542_54, max_relative = 1e-12);
        assert_eq!(tau(1000, 0.5, &p()).unwrap(), 0.0);
        assert_relative_eq!(tau(4000, 1e-4, &p()).unwrap(), 329.591_366_895_866_4, max_relative = 1e-12);
        assert!(tau(1000, 0.6, &p()).is_err());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(required_symbols_full(1000, 0.5, 1e-4, &p()).unwrap(), 2153);
        assert_eq!(required_symbols_full(1000, 1.0, 1e-4, &p()).unwrap(), 1001);
        assert_eq!(required_symbols_linear(1000, 0.5, 1e-4, &p()).unwrap(), 2032);
        assert_eq!(required_symbols_linear(1000, 1.0, 0.85, &p()).unwrap(), 1000);
        assert!(required_symbols_linear(1000, 0.5, 0.9, &p()).is_err());
        let n1 = required_symbols_linear(1000, 0.4, 1e-4, &p()).unwrap();
        let n2 = required_symbols_linear(1000, 0.2, 1e-4, &p()).unwrap();
        assert!((n2 as i64 - 2 * n1 as i64).abs() <= 1);
    }

    #[test]
    fn inverse_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let s = rng.random_range(1..20_000u64);
            let d = rng.random_range(0.05..0.999);
            let pt = 10f64.powf(rng.random_range(-8.0..(0.5f64).log10()));
            let n = required_symbols_full(s, d, pt, &p()).unwrap();
            assert!(outage_model(s, n, d, &p()).unwrap() <= pt);
            if let Ok(prev) = outage_model(s, n - 1, d, &p()) {
                assert!(prev > pt);
            }
            let nl = required_symbols_linear(s, d, pt, &p()).unwrap();
            assert!(nl as f64 * d >= linear_overhead(s, pt, &p()).unwrap() - 1e-9);
        }
    }

    #[test]
    fn forward_single_layer_is_inverse() {
        let layers = [LayerSpec::new(1000, 1e-4)];
        let f = forward_layer_allocation(&layers, &[0.5], &p()).unwrap();
        assert_eq!(f, ForwardAllocation::Feasible(vec![2153]));
    }

    #[test]
    fn forward_meets_cumulative_targets() {
        let layers = [LayerSpec::new(377, 1e-4), LayerSpec::new(1519, 4e-4), LayerSpec::new(7005, 5e-4)];
        let deltas = [0.526, 0.572, 0.607];
        let n = forward_layer_allocation(&layers, &deltas, &p()).unwrap();
        let n = n.symbols().unwrap();
        for l in 0..3 {
            let q = cumulative_success_model(&layers, n, l + 1, deltas[l], &p());
            assert!(q >= 1.0 - layers[l].outage_target, "layer {l}: {q}");
        }
        assert_eq!(forward_layer_allocation(&layers, &deltas, &p()).unwrap().symbols().unwrap(), n);
    }

    #[test]
    fn forward_rejects_unordered() {
        let layers = [LayerSpec::new(100, 1e-4), LayerSpec::new(200, 4e-4)];
        assert!(matches!(forward_layer_allocation(&layers, &[0.6, 0.5], &p()), Err(Error::Unordered(_))));
    }

    #[test]
    fn forward_flags_infeasible_nested_target() {
        // Equal MNRCs with a looser upper-layer target than the base layer leaves nothing.
        let layers = [LayerSpec::new(100, 4e-4), LayerSpec::new(200, 1e-4)];
        let f = forward_layer_allocation(&layers, &[0.5, 0.5], &p()).unwrap();
        assert_eq!(f, ForwardAllocation::Infeasible { layer: 1 });
    }

    #[test]
    fn params_validation() {
        assert!(CodeParams::new(0.0, 0.5, 1.8).is_err());
        assert!(CodeParams::new(0.85, 1.0, 1.8).is_err());
        assert!(CodeParams::new(0.85, 0.5, 1.0).is_err());
        assert!(CodeParams::new(1.0, 0.5, 2.0).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn exact_monotone_in_n_and_delta(s in 10u64..400, extra in 0u64..400, d in 0.05f64..0.95) {
                let n = s + extra;
                let base = outage_exact(s, n, d, &p()).unwrap();
                prop_assert!(outage_exact(s, n + 1, d, &p()).unwrap() <= base * (1.0 + 1e-9) + 1e-300);
                prop_assert!(outage_exact(s, n, (d + 0.03).min(1.0), &p()).unwrap() <= base * (1.0 + 1e-9) + 1e-300);
            }

            #[test]
            fn exact_sandwich(s in 5u64..300, extra in 0u64..300, d in 0.3f64..1.0) {
                let n = s + extra;
                let e = outage_exact(s, n, d, &p()).unwrap();
                let lower = decoding_failure_prob(s, n, &p()) * d.powf(n as f64);
                prop_assert!(e <= 1.0);
                prop_assert!(e >= lower * (1.0 - 1e-9));
            }

            #[test]
            fn model_monotone(s in 50u64..10_000, d in 0.05f64..0.98, extra in 0.0f64..2000.0) {
                let n = (s as f64 / d + extra).ceil() as u64;
                let a = outage_model(s, n, d, &p()).unwrap();
                prop_assert!(outage_model(s, n + 1, d, &p()).unwrap() <= a);
                prop_assert!(outage_model(s, n, (d + 0.01).min(0.99), &p()).unwrap() <= a);
            }
        }
    }
}

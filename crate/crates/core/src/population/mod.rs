//! Client classes and their reception-coefficient distributions.

mod fit;
mod presets;

pub use fit::{fit_parametric_cdf, FitReport, FittedCdf, FIT_GRID};
pub use presets::DistributionPreset;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// One Gaussian component of a mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub std_dev: f64,
}

/// Sorted sample set with a step CDF and a piecewise-linear smoothing of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Empirical {
    sorted: Vec<f64>,
    /// Distinct sample values and the fraction of samples at or below each.
    knots: Vec<(f64, f64)>,
}

impl TryFrom<Vec<f64>> for Empirical {
    type Error = Error;

    fn try_from(samples: Vec<f64>) -> Result<Self> {
        Empirical::new(samples)
    }
}

impl From<Empirical> for Vec<f64> {
    fn from(e: Empirical) -> Self {
        e.sorted
    }
}

impl Empirical {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("empirical distribution needs at least one sample".into()));
        }
        if let Some(bad) = samples.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Config(format!("empirical sample {bad} outside [0, 1]")));
        }
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        let mut knots: Vec<(f64, f64)> = Vec::new();
        for (i, &x) in samples.iter().enumerate() {
            let frac = (i + 1) as f64 / n;
            match knots.last_mut() {
                Some(k) if k.0 == x => k.1 = frac,
                _ => knots.push((x, frac)),
            }
        }
        Ok(Self { sorted: samples, knots })
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    fn step_cdf(&self, delta: f64) -> f64 {
        let below = self.sorted.partition_point(|&x| x <= delta);
        below as f64 / self.sorted.len() as f64
    }

    /// Segment of the interpolated CDF containing `delta`:
    /// `(x0, f0, x1, f1)`, or `None` outside the interpolated range.
    fn segment(&self, delta: f64) -> Option<(f64, f64, f64, f64)> {
        let (first, last) = (self.knots[0], self.knots[self.knots.len() - 1]);
        if delta >= last.0 {
            return None;
        }
        if delta < first.0 {
            return (first.0 > 0.0).then_some((0.0, 0.0, first.0, first.1));
        }
        let i = self.knots.partition_point(|k| k.0 <= delta);
        let (a, b) = (self.knots[i - 1], self.knots[i]);
        Some((a.0, a.1, b.0, b.1))
    }

    fn linear_cdf(&self, delta: f64) -> f64 {
        if delta >= self.knots[self.knots.len() - 1].0 {
            return 1.0;
        }
        match self.segment(delta) {
            Some((x0, f0, x1, f1)) => f0 + (f1 - f0) * (delta - x0) / (x1 - x0),
            None => 0.0,
        }
    }

    fn linear_density(&self, delta: f64) -> f64 {
        match self.segment(delta) {
            Some((x0, f0, x1, f1)) => (f1 - f0) / (x1 - x0),
            None => 0.0,
        }
    }
}

/// Distribution of the reception coefficient across the clients of a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RcDistribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Gaussian mixture truncated as a whole to `[0, 1]`.
    Mixture(Vec<MixtureComponent>),
    Empirical(Empirical),
    /// The two-parameter family `c * delta^p + 1 - c` itself, with an atom of
    /// mass `1 - c` at zero.
    Power(FittedCdf),
}

impl RcDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = Self::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn mixture(components: Vec<MixtureComponent>) -> Result<Self> {
        let d = Self::Mixture(components);
        d.validate()?;
        Ok(d)
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        Ok(Self::Empirical(Empirical::new(samples)?))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Uniform { lo, hi } => {
                if !(0.0 <= *lo && lo < hi && *hi <= 1.0) {
                    return Err(Error::Config(format!("uniform support [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1")));
                }
            }
            Self::Mixture(cs) => {
                if cs.is_empty() {
                    return Err(Error::Config("mixture has no components".into()));
                }
                for c in cs {
                    if !(c.weight > 0.0 && c.std_dev > 0.0 && c.mean.is_finite()) {
                        return Err(Error::Config(format!("invalid mixture component {c:?}")));
                    }
                }
                let total: f64 = cs.iter().map(|c| c.weight).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!("mixture weights sum to {total}, expected 1")));
                }
                if self.mixture_mass() < 1e-12 {
                    return Err(Error::Config("mixture has no mass on [0, 1]".into()));
                }
            }
            Self::Empirical(e) => {
                if e.is_empty() {
                    return Err(Error::Config("empirical distribution is empty".into()));
                }
            }
            Self::Power(f) => f.validate()?,
        }
        Ok(())
    }

    fn mixture_raw_cdf(cs: &[MixtureComponent], x: f64) -> f64 {
        cs.iter().map(|c| c.weight * norm_cdf((x - c.mean) / c.std_dev)).sum()
    }

    fn mixture_mass(&self) -> f64 {
        match self {
            Self::Mixture(cs) => Self::mixture_raw_cdf(cs, 1.0) - Self::mixture_raw_cdf(cs, 0.0),
            _ => 1.0,
        }
    }

    /// `P(RC <= delta)`. Step CDF for empirical distributions.
    pub fn cdf(&self, delta: f64) -> f64 {
        if delta >= 1.0 {
            return 1.0;
        }
        match self {
            Self::Uniform { lo, hi } => ((delta - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::Mixture(cs) => {
                if delta <= 0.0 {
                    return 0.0;
                }
                let lo = Self::mixture_raw_cdf(cs, 0.0);
                let v = (Self::mixture_raw_cdf(cs, delta) - lo) / (Self::mixture_raw_cdf(cs, 1.0) - lo);
                v.clamp(0.0, 1.0)
            }
            Self::Empirical(e) => e.step_cdf(delta),
            Self::Power(f) => {
                if delta < 0.0 {
                    0.0
                } else {
                    f.eval(delta)
                }
            }
        }
    }

    /// CDF used by gradient-based solvers; linear interpolation between the
    /// sample points for empirical distributions, identical to [`cdf`](Self::cdf) otherwise.
    pub fn smooth_cdf(&self, delta: f64) -> f64 {
        match self {
            Self::Empirical(e) => e.linear_cdf(delta),
            _ => self.cdf(delta),
        }
    }

    /// Derivative of [`smooth_cdf`](Self::smooth_cdf).
    pub fn density(&self, delta: f64) -> f64 {
        match self {
            Self::Uniform { lo, hi } => {
                if delta >= *lo && delta < *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Self::Mixture(cs) => {
                if !(0.0..1.0).contains(&delta) {
                    return 0.0;
                }
                let pdf: f64 = cs.iter().map(|c| c.weight * norm_pdf((delta - c.mean) / c.std_dev) / c.std_dev).sum();
                pdf / self.mixture_mass()
            }
            Self::Empirical(e) => e.linear_density(delta),
            Self::Power(f) => {
                if (0.0..1.0).contains(&delta) {
                    f.density(delta)
                } else {
                    0.0
                }
            }
        }
    }

    /// Width of the interval carrying the mass of the distribution.
    pub fn support_width(&self) -> f64 {
        match self {
            Self::Uniform { lo, hi } => hi - lo,
            Self::Mixture(_) | Self::Power(_) => 1.0,
            Self::Empirical(e) => e.sorted[e.len() - 1] - e.sorted[0],
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::Empirical(e) => e.sorted.iter().sum::<f64>() / e.len() as f64,
            Self::Power(f) => f.c * f.p / (f.p + 1.0),
            Self::Mixture(_) => {
                // E[X] = 1 - integral of F over [0, 1]
                let n = 2000;
                let h = 1.0 / n as f64;
                let integral: f64 = (0..n).map(|i| self.cdf((i as f64 + 0.5) * h)).sum::<f64>() * h;
                1.0 - integral
            }
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Self::Mixture(cs) => loop {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = &cs[cs.len() - 1];
                for c in cs {
                    acc += c.weight;
                    if u < acc {
                        pick = c;
                        break;
                    }
                }
                let z: f64 = rng.sample(StandardNormal);
                let x = pick.mean + pick.std_dev * z;
                if (0.0..=1.0).contains(&x) {
                    break x;
                }
            },
            Self::Empirical(e) => e.sorted[rng.random_range(0..e.len())],
            Self::Power(f) => {
                let u: f64 = rng.random();
                if u < 1.0 - f.c {
                    0.0
                } else {
                    ((u - (1.0 - f.c)) / f.c).powf(1.0 / f.p).min(1.0)
                }
            }
        }
    }
}

/// `n` reception coefficients drawn from `dist`, reproducible from `seed`.
pub fn sample_clients(dist: &RcDistribution, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Config("cannot sample zero clients".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| dist.draw(&mut rng)).collect())
}

/// Empirical distribution over the `ceil(csfr * n)` clients that report back,
/// drawn without replacement.
pub fn subsample_feedback(samples: &[f64], csfr: f64, seed: u64) -> Result<RcDistribution> {
    if !(csfr > 0.0 && csfr <= 1.0) {
        return Err(Error::Config(format!("feedback ratio {csfr} not in (0, 1]")));
    }
    let k = ((csfr * samples.len() as f64) - 1e-9).ceil() as usize;
    if k == 0 {
        return Err(Error::Config("feedback subsample is empty".into()));
    }
    if k >= samples.len() {
        return RcDistribution::empirical(samples.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = index::sample(&mut rng, samples.len(), k).into_iter().map(|i| samples[i]).collect();
    RcDistribution::empirical(picked)
}

/// A group of clients sharing decoding capability and RC distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientClass {
    /// Highest layer the class can decode (1-based).
    pub highest_layer: usize,
    pub prior: f64,
    pub dist: RcDistribution,
    #[serde(default)]
    pub fitted: Option<FittedCdf>,
    /// Incremental utility of each layer `1..=highest_layer`.
    pub alphas: Vec<f64>,
    /// Dissatisfaction weight of losing each layer.
    #[serde(default)]
    pub betas: Vec<f64>,
    /// Preference weights the alphas were derived from, if any.
    #[serde(default)]
    pub prefs: Vec<f64>,
}

impl ClientClass {
    pub fn new(highest_layer: usize, prior: f64, dist: RcDistribution, alphas: Vec<f64>) -> Result<Self> {
        let c = Self {
            highest_layer,
            prior,
            dist,
            fitted: None,
            betas: vec![0.0; alphas.len()],
            alphas,
            prefs: Vec::new(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_betas(mut self, betas: Vec<f64>) -> Result<Self> {
        self.betas = betas;
        self.validate()?;
        Ok(self)
    }

    /// Attach the parametric fit of this class's distribution.
    pub fn fit(mut self) -> Result<Self> {
        self.fitted = Some(fit_parametric_cdf(&self.dist)?.fitted);
        Ok(self)
    }

    pub fn beta(&self, l: usize) -> f64 {
        self.betas.get(l).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.dist.validate()?;
        let h = self.highest_layer;
        if h == 0 {
            return Err(Error::Config("class must decode at least layer 1".into()));
        }
        if !(self.prior >= 0.0 && self.prior <= 1.0) {
            return Err(Error::Config(format!("class prior {} not in [0, 1]", self.prior)));
        }
        if self.alphas.len() != h {
            return Err(Error::Config(format!("class decodes {h} layers but has {} alphas", self.alphas.len())));
        }
        if self.alphas.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::Config(format!("negative layer utility in {:?}", self.alphas)));
        }
        if self.betas.len() > h || self.betas.iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::Config(format!("invalid dissatisfaction weights {:?}", self.betas)));
        }
        if !self.prefs.is_empty() {
            let ok = self.prefs.len() == h
                && self.prefs.iter().all(|w| (0.0..=1.0).contains(w))
                && self.prefs.windows(2).all(|w| w[0] <= w[1]);
            if !ok {
                return Err(Error::Config(format!(
                    "preference weights {:?} must be non-decreasing in [0, 1]",
                    self.prefs
                )));
            }
        }
        if let Some(f) = &self.fitted {
            f.validate()?;
        }
        Ok(())
    }
}

/// Check a whole population: per-class invariants and priors summing to one.
pub fn validate_population(classes: &[ClientClass]) -> Result<()> {
    if classes.is_empty() {
        return Err(Error::Config("population has no classes".into()));
    }
    for c in classes {
        c.validate()?;
    }
    let total: f64 = classes.iter().map(|c| c.prior).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("class priors sum to {total}, expected 1")));
    }
    Ok(())
}

//! JSON scenario files: layers, client classes, bandwidth, solver settings
//! and study sweeps.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alloc::{
    eep_allocation, solve_convex, solve_dynamic, solve_exhaustive, solve_optimized, Allocation, AllocationProblem,
    ExhaustiveOptions, GdOptions, Solver,
};
use crate::error::{Error, Result};
use crate::outage::{CodeParams, LayerSpec};
use crate::population::{ClientClass, DistributionPreset, FittedCdf, MixtureComponent, RcDistribution};
use crate::sim::{
    derive_seed, service_bandwidth, CrsConfig, FeedbackConfig, FfrConfig, Outcome, SegmentStream, SmoothingConfig,
    StudySetup,
};
use crate::utility::{nmos_alphas, preference_weights, LayerPlayback, NmosParams, CIF_PIXELS, QCIF_PIXELS};

/// Outage targets used when a scenario does not give its own.
pub const DEFAULT_OUTAGE_TARGETS: [f64; 3] = [1e-4, 4e-4, 5e-4];

const FOUR_CIF_PIXELS: f64 = 704.0 * 576.0;

/// Three-layer H.264/SVC test bitstreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VideoPreset {
    City,
    Ice,
    Crew,
}

/// One layer of a preset bitstream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetLayer {
    pub source_symbols: u64,
    pub bitrate_kbps: f64,
    pub playback: LayerPlayback,
}

const fn pl(source_symbols: u64, bitrate_kbps: f64, pixels: f64, frame_rate: f64, psnr: f64) -> PresetLayer {
    PresetLayer { source_symbols, bitrate_kbps, playback: LayerPlayback { pixels, frame_rate, psnr } }
}

impl VideoPreset {
    pub const ALL: [Self; 3] = [Self::City, Self::Ice, Self::Crew];

    pub fn layers(self) -> [PresetLayer; 3] {
        match self {
            Self::City => [
                pl(261, 104.3, QCIF_PIXELS, 15.0, 33.4),
                pl(1111, 548.6, CIF_PIXELS, 30.0, 33.5),
                pl(6694, 3226.2, FOUR_CIF_PIXELS, 60.0, 33.5),
            ],
            Self::Ice => [
                pl(212, 84.6, QCIF_PIXELS, 15.0, 32.2),
                pl(736, 378.9, CIF_PIXELS, 30.0, 34.9),
                pl(5579, 2610.4, FOUR_CIF_PIXELS, 60.0, 38.6),
            ],
            Self::Crew => [
                pl(377, 150.8, QCIF_PIXELS, 15.0, 37.3),
                pl(1519, 758.4, CIF_PIXELS, 30.0, 37.1),
                pl(7005, 3560.4, FOUR_CIF_PIXELS, 60.0, 37.7),
            ],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::City => "city",
            Self::Ice => "ice",
            Self::Crew => "crew",
        }
    }
}

impl fmt::Display for VideoPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VideoPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown video preset '{s}' (expected city, ice or crew)")))
    }
}

/// Layers from a preset or given inline. Inline layers need `source_symbols`;
/// `playback` is only needed by classes that derive their utilities from NMOS.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayersSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<VideoPreset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_symbols: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outage_targets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub playback: Option<Vec<LayerPlayback>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSection {
    Preset(DistributionPreset),
    Uniform { lo: f64, hi: f64 },
    Mixture(Vec<MixtureComponent>),
    Empirical(Vec<f64>),
    Power(FittedCdf),
}

impl DistributionSection {
    pub fn resolve(&self) -> Result<RcDistribution> {
        let d = match self {
            Self::Preset(p) => p.distribution(),
            Self::Uniform { lo, hi } => RcDistribution::uniform(*lo, *hi)?,
            Self::Mixture(c) => RcDistribution::mixture(c.clone())?,
            Self::Empirical(s) => RcDistribution::empirical(s.clone())?,
            Self::Power(f) => {
                f.validate()?;
                RcDistribution::Power(*f)
            }
        };
        Ok(d)
    }
}

/// Layer utilities from NMOS scores on the class's display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NmosSection {
    /// Display size in pixels; defaults to the class's top layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_pixels: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_frame_rate: Option<f64>,
    #[serde(default = "crew_b_s")]
    pub b_s: f64,
    #[serde(default = "crew_b_f")]
    pub b_f: f64,
    #[serde(default = "crew_b_p")]
    pub b_p: f64,
    /// Preference weight of layer `l` is `pref_decay^(h - l)`.
    #[serde(default = "default_decay")]
    pub pref_decay: f64,
}

fn crew_b_s() -> f64 {
    NmosParams::crew(1.0, 1.0).b_s
}
fn crew_b_f() -> f64 {
    NmosParams::crew(1.0, 1.0).b_f
}
fn crew_b_p() -> f64 {
    NmosParams::crew(1.0, 1.0).b_p
}
fn default_decay() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSection {
    pub highest_layer: usize,
    pub prior: f64,
    pub distribution: DistributionSection,
    /// Incremental layer utilities. Exactly one of `alphas` and `nmos`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nmos: Option<NmosSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
}

/// Bandwidth as a symbol count or as link rate, segment length and symbol size.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u64>,
    /// Bit rate available to the server, bit/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_seg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol_bits: Option<f64>,
}

impl ServiceSection {
    pub fn n_max(&self) -> Result<u64> {
        match (self.n_max, self.omega, self.t_seg, self.symbol_bits) {
            (Some(n), None, None, None) => Ok(n),
            (None, Some(o), Some(t), Some(b)) => service_bandwidth(o, t, b),
            _ => Err(Error::Config("service needs either n_max or all of omega, t_seg and symbol_bits".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GdSection {
    #[serde(default = "gd_max_iter")]
    pub max_iter: usize,
    #[serde(default = "gd_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "gd_window")]
    pub window: usize,
    #[serde(default = "gd_initial_step")]
    pub initial_step: f64,
    #[serde(default = "gd_min_step")]
    pub min_step: f64,
}

fn gd_max_iter() -> usize {
    GdOptions::default().max_iter
}
fn gd_rel_tol() -> f64 {
    GdOptions::default().rel_tol
}
fn gd_window() -> usize {
    GdOptions::default().window
}
fn gd_initial_step() -> f64 {
    GdOptions::default().initial_step
}
fn gd_min_step() -> f64 {
    GdOptions::default().min_step
}

impl Default for GdSection {
    fn default() -> Self {
        let g = GdOptions::default();
        Self {
            max_iter: g.max_iter,
            rel_tol: g.rel_tol,
            window: g.window,
            initial_step: g.initial_step,
            min_step: g.min_step,
        }
    }
}

impl From<GdSection> for GdOptions {
    fn from(g: GdSection) -> Self {
        Self {
            max_iter: g.max_iter,
            rel_tol: g.rel_tol,
            window: g.window,
            initial_step: g.initial_step,
            min_step: g.min_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_mode")]
    pub mode: Solver,
    /// Points per axis of the exhaustive search.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub gd: GdSection,
    /// Weight of the loss against dissatisfaction in dynamic mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Previous segment's MNRCs for dynamic mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub previous: Option<Vec<f64>>,
}

fn default_mode() -> Solver {
    Solver::Convex
}
fn default_grid() -> usize {
    200
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { mode: default_mode(), grid: default_grid(), gd: GdSection::default(), lambda: None, previous: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticSection {
    /// Bandwidths to sweep; the service bandwidth when empty.
    #[serde(default)]
    pub n_max: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackSection {
    #[serde(default = "default_pool")]
    pub pool_size: usize,
    pub csfr: Vec<f64>,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
}

fn default_pool() -> usize {
    1000
}
fn default_reps() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrsSection {
    pub mrr: Vec<f64>,
    #[serde(default = "default_reps")]
    pub segments: usize,
}

/// Per-segment layer sizes: scale factors on the base layers or explicit sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StreamSection {
    Scale(Vec<f64>),
    Segments(Vec<Vec<u64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingSection {
    pub stream: StreamSection,
    pub n_max: Vec<u64>,
    pub lambdas: Vec<f64>,
    #[serde(default = "default_pool")]
    pub clients_per_class: usize,
    #[serde(default)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FfrSection {
    #[serde(default = "default_client_mean")]
    pub client_mean: f64,
    pub sigmas: Vec<f64>,
    #[serde(default = "default_pool")]
    pub trials: usize,
    #[serde(default = "default_frames")]
    pub frames_per_segment: u32,
    /// Smoothing bandwidth whose traces are used; the first one by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u64>,
}

fn default_client_mean() -> f64 {
    0.2
}
fn default_frames() -> u32 {
    32
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    #[serde(default, rename = "static", skip_serializing_if = "Option::is_none")]
    pub static_: Option<StaticSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<FeedbackSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crs: Option<CrsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<SmoothingSection>,
    /// Needs a smoothing section for its traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ffr: Option<FfrSection>,
}

/// A scenario file as written, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub code_params: CodeParams,
    pub layers: LayersSection,
    pub classes: Vec<ClassSection>,
    pub service: ServiceSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub study: StudySection,
    /// Master seed; every study derives its own from it.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Run independent jobs in parallel.
    #[serde(default = "default_parallel")]
    pub parallel: bool,
}

fn default_seed() -> u64 {
    1
}
fn default_parallel() -> bool {
    true
}

/// Offsets of the per-study seeds under the master seed.
pub mod seed_index {
    pub const FEEDBACK: u64 = 1;
    pub const CRS: u64 = 2;
    pub const SMOOTHING: u64 = 3;
    pub const FFR: u64 = 4;
}

impl ScenarioFile {
    /// Parse JSON text. Syntax and schema errors carry `line:column`.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Canonical form: defaults filled in, keys sorted.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("scenario serializes");
        serde_json::to_string(&v).expect("value serializes")
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn resolve(&self) -> Result<Scenario> {
        self.code_params.validate()?;
        let (layers, playback) = self.resolve_layers()?;
        let classes = self
            .classes
            .iter()
            .enumerate()
            .map(|(m, c)| {
                resolve_class(c, playback.as_deref())
                    .map_err(|e| Error::Config(format!("class {}: {}", m + 1, strip_config(e))))
            })
            .collect::<Result<Vec<_>>>()?;
        if self.solver.grid < 2 {
            return Err(Error::Config("solver.grid must be at least 2".into()));
        }
        Ok(Scenario {
            layers,
            playback,
            classes,
            n_max: self.service.n_max()?,
            code: self.code_params,
            solver: self.solver.clone(),
            study: self.study.clone(),
            seed: self.seed,
            parallel: self.parallel,
        })
    }

    fn resolve_layers(&self) -> Result<(Vec<LayerSpec>, Option<Vec<LayerPlayback>>)> {
        let l = &self.layers;
        let (sizes, preset_playback) = match (&l.preset, &l.source_symbols) {
            (Some(p), None) => {
                let pl = p.layers();
                (pl.iter().map(|x| x.source_symbols).collect::<Vec<_>>(), Some(pl.iter().map(|x| x.playback).collect()))
            }
            (None, Some(s)) => (s.clone(), None),
            _ => return Err(Error::Config("layers need exactly one of preset and source_symbols".into())),
        };
        let targets = match &l.outage_targets {
            Some(t) => t.clone(),
            None if sizes.len() == DEFAULT_OUTAGE_TARGETS.len() => DEFAULT_OUTAGE_TARGETS.to_vec(),
            None => return Err(Error::Config(format!("{} layers need explicit outage_targets", sizes.len()))),
        };
        if targets.len() != sizes.len() {
            return Err(Error::Config(format!("{} outage targets for {} layers", targets.len(), sizes.len())));
        }
        let playback = l.playback.clone().or(preset_playback);
        if let Some(p) = &playback {
            if p.len() != sizes.len() {
                return Err(Error::Config(format!("{} playback entries for {} layers", p.len(), sizes.len())));
            }
        }
        Ok((sizes.iter().zip(targets).map(|(&s, p)| LayerSpec::new(s, p)).collect(), playback))
    }
}

fn strip_config(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

fn resolve_class(c: &ClassSection, playback: Option<&[LayerPlayback]>) -> Result<ClientClass> {
    let dist = c.distribution.resolve()?;
    let h = c.highest_layer;
    let (alphas, prefs) = match (&c.alphas, &c.nmos) {
        (Some(a), None) => (a.clone(), Vec::new()),
        (None, Some(n)) => {
            let pb = playback.ok_or_else(|| Error::Config("nmos utilities need layer playback data".into()))?;
            if h == 0 || h > pb.len() {
                return Err(Error::Config(format!("highest_layer {h} outside 1..={}", pb.len())));
            }
            let top = pb[h - 1];
            let params = NmosParams {
                b_s: n.b_s,
                b_f: n.b_f,
                b_p: n.b_p,
                s_max: n.display_pixels.unwrap_or(top.pixels),
                f_max: n.display_frame_rate.unwrap_or(top.frame_rate),
            };
            if !(n.pref_decay > 0.0 && n.pref_decay <= 1.0) {
                return Err(Error::Config(format!("pref_decay {} not in (0, 1]", n.pref_decay)));
            }
            let prefs = preference_weights(h, n.pref_decay);
            (nmos_alphas(&pb[..h], &params, &prefs)?, prefs)
        }
        _ => return Err(Error::Config("give exactly one of alphas and nmos".into())),
    };
    let mut class = ClientClass::new(h, c.prior, dist, alphas)?;
    class.prefs = prefs;
    if let Some(b) = &c.betas {
        class = class.with_betas(b.clone())?;
    }
    class.validate()?;
    class.fit()
}

/// A validated scenario ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub layers: Vec<LayerSpec>,
    pub playback: Option<Vec<LayerPlayback>>,
    /// Classes with fitted CDFs attached.
    pub classes: Vec<ClientClass>,
    pub n_max: u64,
    pub code: CodeParams,
    pub solver: SolverSection,
    pub study: StudySection,
    pub seed: u64,
    pub parallel: bool,
}

fn non_empty<T>(what: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{what} must not be empty")));
    }
    Ok(())
}

impl Scenario {
    pub fn setup(&self) -> StudySetup {
        self.setup_at(self.n_max)
    }

    pub fn setup_at(&self, n_max: u64) -> StudySetup {
        StudySetup {
            layers: self.layers.clone(),
            classes: self.classes.clone(),
            n_max,
            code: self.code,
            grid: self.solver.grid,
            gd: self.solver.gd.into(),
            parallel: self.parallel,
        }
    }

    /// Allocation problem at `n_max`, or at the service bandwidth.
    pub fn problem(&self, n_max: Option<u64>) -> Result<AllocationProblem> {
        AllocationProblem::new(self.layers.clone(), self.classes.clone(), n_max.unwrap_or(self.n_max), self.code)
    }

    /// Solve with `mode`. Simplified GD is multi-started, see [`solve_optimized`].
    pub fn solve(&self, mode: Solver, n_max: Option<u64>) -> Result<(AllocationProblem, Allocation)> {
        let problem = self.problem(n_max)?;
        let gd: GdOptions = self.solver.gd.into();
        let alloc = match mode {
            Solver::Convex => solve_convex(&problem)?,
            Solver::SimplifiedGd => solve_optimized(&problem, gd)?.1,
            Solver::Exhaustive => {
                solve_exhaustive(&problem, ExhaustiveOptions { grid: self.solver.grid, parallel: self.parallel })?
            }
            Solver::Eep => eep_allocation(&problem),
            Solver::Dynamic => {
                let lambda =
                    self.solver.lambda.ok_or_else(|| Error::Config("dynamic mode needs solver.lambda".into()))?;
                let prev = self
                    .solver
                    .previous
                    .as_ref()
                    .ok_or_else(|| Error::Config("dynamic mode needs solver.previous".into()))?;
                solve_dynamic(&problem, prev, lambda, gd)?
            }
        };
        Ok((problem, alloc))
    }

    pub fn study_seed(&self, index: u64) -> u64 {
        derive_seed(self.seed, index)
    }

    pub fn static_sweep(&self) -> Result<Vec<u64>> {
        let s = self.study.static_.as_ref().ok_or_else(|| missing("static"))?;
        Ok(if s.n_max.is_empty() { vec![self.n_max] } else { s.n_max.clone() })
    }

    pub fn feedback_config(&self) -> Result<FeedbackConfig> {
        let s = self.study.feedback.as_ref().ok_or_else(|| missing("feedback"))?;
        non_empty("study.feedback.csfr", &s.csfr)?;
        Ok(FeedbackConfig {
            pool_size: s.pool_size,
            csfr: s.csfr.clone(),
            repetitions: s.repetitions,
            seed: self.study_seed(seed_index::FEEDBACK),
        })
    }

    pub fn crs_config(&self) -> Result<CrsConfig> {
        let s = self.study.crs.as_ref().ok_or_else(|| missing("crs"))?;
        non_empty("study.crs.mrr", &s.mrr)?;
        Ok(CrsConfig { mrr: s.mrr.clone(), segments: s.segments, seed: self.study_seed(seed_index::CRS) })
    }

    pub fn smoothing_config(&self) -> Result<SmoothingConfig> {
        let s = self.study.smoothing.as_ref().ok_or_else(|| missing("smoothing"))?;
        non_empty("study.smoothing.n_max", &s.n_max)?;
        non_empty("study.smoothing.lambdas", &s.lambdas)?;
        let stream = match &s.stream {
            StreamSection::Scale(f) => {
                non_empty("study.smoothing.stream.scale", f)?;
                if f.iter().any(|x| !(*x > 0.0)) {
                    return Err(Error::Config("stream scale factors must be positive".into()));
                }
                SegmentStream::scaled(&self.layers, f)
            }
            StreamSection::Segments(seg) => SegmentStream {
                segments: seg.clone(),
                outage_targets: self.layers.iter().map(|l| l.outage_target).collect(),
            },
        };
        stream.validate().map_err(|e| Error::Config(strip_config(e)))?;
        Ok(SmoothingConfig {
            stream,
            n_max: s.n_max.clone(),
            lambdas: s.lambdas.clone(),
            clients_per_class: s.clients_per_class,
            seed: self.study_seed(seed_index::SMOOTHING),
            outcome: s.outcome,
        })
    }

    /// FFR settings and the smoothing bandwidth whose traces it replays.
    pub fn ffr_config(&self) -> Result<(FfrConfig, u64)> {
        let s = self.study.ffr.as_ref().ok_or_else(|| missing("ffr"))?;
        non_empty("study.ffr.sigmas", &s.sigmas)?;
        let sm =
            self.study.smoothing.as_ref().ok_or_else(|| {
                Error::Config("study.ffr replays smoothing traces; add a study.smoothing section".into())
            })?;
        let n_max = s.n_max.or(sm.n_max.first().copied()).ok_or_else(|| missing("smoothing.n_max"))?;
        if !sm.n_max.contains(&n_max) {
            return Err(Error::Config(format!("study.ffr.n_max {n_max} is not in the smoothing sweep")));
        }
        let cfg = FfrConfig {
            client_mean: s.client_mean,
            sigmas: s.sigmas.clone(),
            trials: s.trials,
            frames_per_segment: s.frames_per_segment,
            seed: self.study_seed(seed_index::FFR),
        };
        Ok((cfg, n_max))
    }
}

fn missing(name: &str) -> Error {
    Error::Config(format!("scenario has no study.{name} section"))
}

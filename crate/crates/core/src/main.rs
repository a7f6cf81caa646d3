use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use fountcast::alloc::Solver;
use fountcast::config::{Scenario, ScenarioFile, ServiceSection};
use fountcast::population::{fit_parametric_cdf, DistributionPreset, RcDistribution, FIT_GRID};
use fountcast::report::{allocation_rows, allocation_summary, write_csv, Manifest};
use fountcast::sim::{run_crs_study, run_ffr, run_reduced_feedback, run_smoothing, run_static};
use fountcast::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

/// Fountain-code budget allocation across scalable video layers.
#[derive(Parser, Debug)]
#[command(name = "fountcast", version)]
struct Cli {
    /// Master RNG seed; overrides the scenario's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel jobs.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Points per axis of the exhaustive search; overrides the scenario's.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Output format of result tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
}

#[derive(Args, Debug)]
struct OutDir {
    /// Output directory.
    #[arg(long, short, env = "FOUNTCAST_OUT_DIR", default_value = "fountcast-out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one allocation and write it per layer.
    Optimize {
        scenario: PathBuf,
        /// Solver; overrides the scenario's.
        #[arg(long)]
        solver: Option<String>,
        /// Service bandwidth in symbols; overrides the scenario's.
        #[arg(long)]
        n_max: Option<u64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Run one study, or every study the scenario defines.
    Study {
        scenario: PathBuf,
        #[arg(value_enum, default_value_t = StudyName::All)]
        study: StudyName,
        #[command(flatten)]
        out: OutDir,
    },
    /// Fit the two-parameter CDF to samples or a preset distribution.
    FitCdf {
        /// File of RC samples separated by whitespace, commas or newlines.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        samples: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[command(flatten)]
        out: OutDir,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum StudyName {
    All,
    Static,
    Feedback,
    Crs,
    Smoothing,
    Ffr,
}

enum Failure {
    Error(Error),
    Infeasible(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Error(e)
    }
}

type Outcome = Result<(), Failure>;

fn load(path: &Path, cli: &Cli) -> Result<(ScenarioFile, Scenario), Error> {
    let mut file = ScenarioFile::load(path)?;
    if let Some(s) = cli.seed {
        file.seed = s;
    }
    if let Some(g) = cli.grid {
        file.solver.grid = g;
    }
    if cli.jobs == Some(1) {
        file.parallel = false;
    }
    let scenario = file.resolve()?;
    Ok((file, scenario))
}

fn prepare_out(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

fn manifest_for(command: &str, path: &Path, file: &ScenarioFile) -> Manifest {
    let mut m = Manifest::new(command);
    m.scenario = Some(path.display().to_string());
    m.config_hash = Some(file.config_hash());
    m.master_seed = Some(file.seed);
    m
}

fn optimize(cli: &Cli, scenario_path: &Path, solver: Option<&str>, n_max: Option<u64>, out: &Path) -> Outcome {
    let start = Instant::now();
    let (mut file, sc) = load(scenario_path, cli)?;
    let mode = match solver {
        Some(s) => s.parse::<Solver>()?,
        None => sc.solver.mode,
    };
    file.solver.mode = mode;
    if let Some(n) = n_max {
        file.service = ServiceSection { n_max: Some(n), ..Default::default() };
    }
    let (problem, alloc) = sc.solve(mode, n_max)?;
    let n_max = problem.n_max;
    prepare_out(out)?;
    let mut manifest = manifest_for("optimize", scenario_path, &file);
    write_csv(&out.join("allocation.csv"), &allocation_rows(&problem, &alloc)?)?;
    write_csv(&out.join("allocation_summary.csv"), &[allocation_summary(&problem, &alloc)])?;
    manifest.files = vec!["allocation.csv".into(), "allocation_summary.csv".into()];

    println!("solver {}  n_max {}  feasible {}", mode.name(), n_max, alloc.feasible);
    for (l, (d, n)) in alloc.deltas.iter().zip(&alloc.symbols).enumerate() {
        println!("  layer {}: S = {:>6}  MNRC = {:.6}  N = {:>6}", l + 1, problem.layers[l].source_symbols, d, n);
    }
    println!("  symbols {} / {}  utility {:.6} of {:.6}", alloc.total_symbols(), n_max, alloc.utility, problem.u_max());
    manifest.runtime_seconds = start.elapsed().as_secs_f64();
    manifest.write(&out.join("manifest.json"))?;
    if alloc.feasible {
        Ok(())
    } else {
        let why = match alloc.infeasibility {
            Some(i) => format!(
                "layer {} cannot be served; the base layer alone needs n_max >= {}",
                i.failed_layer + 1,
                i.min_base_n_max
            ),
            None => "no feasible allocation".into(),
        };
        Err(Failure::Infeasible(why))
    }
}

fn study(cli: &Cli, scenario_path: &Path, which: StudyName, out: &Path) -> Outcome {
    let start = Instant::now();
    let (file, sc) = load(scenario_path, cli)?;
    let wanted = |s: StudyName| which == s || which == StudyName::All;
    let present = [
        (StudyName::Static, sc.study.static_.is_some()),
        (StudyName::Feedback, sc.study.feedback.is_some()),
        (StudyName::Crs, sc.study.crs.is_some()),
        (StudyName::Smoothing, sc.study.smoothing.is_some()),
        (StudyName::Ffr, sc.study.ffr.is_some()),
    ];
    let selected: Vec<StudyName> =
        present.iter().filter(|(s, p)| wanted(*s) && (*p || which != StudyName::All)).map(|(s, _)| *s).collect();
    if selected.is_empty() {
        return Err(Error::Config("scenario defines no study sections".into()).into());
    }
    prepare_out(out)?;
    let mut manifest = manifest_for("study", scenario_path, &file);
    let mut files = Vec::new();

    if selected.contains(&StudyName::Static) {
        let rows =
            sc.static_sweep()?.into_iter().map(|n| run_static(&sc.setup_at(n))).collect::<Result<Vec<_>, _>>()?;
        write_csv(&out.join("static.csv"), &rows)?;
        files.push("static.csv");
    }
    if selected.contains(&StudyName::Feedback) {
        let cfg = sc.feedback_config()?;
        manifest.seeds.insert("feedback".into(), cfg.seed);
        write_csv(&out.join("feedback.csv"), &run_reduced_feedback(&sc.setup(), &cfg)?)?;
        files.push("feedback.csv");
    }
    if selected.contains(&StudyName::Crs) {
        let cfg = sc.crs_config()?;
        manifest.seeds.insert("crs".into(), cfg.seed);
        write_csv(&out.join("crs.csv"), &run_crs_study(&sc.setup(), &cfg)?)?;
        files.push("crs.csv");
    }
    let wants_smoothing = selected.contains(&StudyName::Smoothing);
    let wants_ffr = selected.contains(&StudyName::Ffr);
    if wants_smoothing || wants_ffr {
        let ffr = if wants_ffr { Some(sc.ffr_config()?) } else { None };
        let cfg = sc.smoothing_config()?;
        manifest.seeds.insert("smoothing".into(), cfg.seed);
        let result = run_smoothing(&sc.setup(), &cfg)?;
        if wants_smoothing {
            write_csv(&out.join("smoothing.csv"), &result.rows)?;
            write_csv(&out.join("smoothing_traces.csv"), &result.traces)?;
            write_csv(&out.join("smoothing_bursts.csv"), &result.bursts)?;
            files.extend(["smoothing.csv", "smoothing_traces.csv", "smoothing_bursts.csv"]);
        }
        if let Some((ffr_cfg, n_max)) = ffr {
            manifest.seeds.insert("ffr".into(), ffr_cfg.seed);
            let mut traces = vec![("eep".to_string(), result.base_trace(n_max, None))];
            for &l in &cfg.lambdas {
                traces.push((format!("lambda={l}"), result.base_trace(n_max, Some(l))));
            }
            write_csv(&out.join("ffr.csv"), &run_ffr(&traces, &ffr_cfg)?)?;
            files.push("ffr.csv");
        }
    }
    for f in &files {
        println!("wrote {}", out.join(f).display());
    }
    manifest.files = files.into_iter().map(String::from).collect();
    manifest.runtime_seconds = start.elapsed().as_secs_f64();
    manifest.write(&out.join("manifest.json"))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct FitRow {
    source: String,
    samples: Option<usize>,
    c: f64,
    p: f64,
    max_error: f64,
    sse: f64,
    converged: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct CurveRow {
    delta: f64,
    target_cdf: f64,
    fitted_cdf: f64,
}

fn read_samples(path: &Path) -> Result<Vec<f64>, Error> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tokens: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        let parsed: Result<Vec<f64>, _> = tokens.iter().map(|t| t.parse::<f64>()).collect();
        match parsed {
            Ok(v) => out.extend(v),
            // a header line
            Err(_) if i == 0 => {}
            Err(_) => return Err(Error::Config(format!("{}: line {}: not a number", path.display(), i + 1))),
        }
    }
    Ok(out)
}

fn fit_cdf(samples: Option<&Path>, preset: Option<&str>, out: &Path) -> Outcome {
    let start = Instant::now();
    let (source, dist, count) = match (samples, preset) {
        (Some(p), _) => {
            let s = read_samples(p)?;
            if s.len() < 10 {
                return Err(Error::Config(format!("need at least 10 samples, got {}", s.len())).into());
            }
            let n = s.len();
            (p.display().to_string(), RcDistribution::empirical(s)?, Some(n))
        }
        (None, Some(name)) => (name.to_string(), name.parse::<DistributionPreset>()?.distribution(), None),
        (None, None) => return Err(Error::Config("give --samples or --preset".into()).into()),
    };
    let report = fit_parametric_cdf(&dist)?;
    let f = report.fitted;
    println!("c = {:.6}  p = {:.6}  max CDF error = {:.6}", f.c, f.p, report.max_error);
    prepare_out(out)?;
    let curve: Vec<CurveRow> = (0..=FIT_GRID)
        .map(|i| {
            let d = i as f64 / FIT_GRID as f64;
            CurveRow { delta: d, target_cdf: dist.cdf(d), fitted_cdf: f.eval(d) }
        })
        .collect();
    write_csv(&out.join("fit_curve.csv"), &curve)?;
    let row = FitRow {
        source,
        samples: count,
        c: f.c,
        p: f.p,
        max_error: report.max_error,
        sse: report.sse,
        converged: report.converged,
    };
    write_csv(&out.join("fit.csv"), &[row])?;
    let mut m = Manifest::new("fit-cdf");
    m.files = vec!["fit.csv".into(), "fit_curve.csv".into()];
    m.runtime_seconds = start.elapsed().as_secs_f64();
    m.write(&out.join("manifest.json"))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // CSV is the only table format
    let Format::Csv = cli.format;
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        // the global pool can only be built once; a second build is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let result = match &cli.command {
        Command::Optimize { scenario, solver, n_max, out } => {
            optimize(&cli, scenario, solver.as_deref(), *n_max, &out.out)
        }
        Command::Study { scenario, study: which, out } => study(&cli, scenario, *which, &out.out),
        Command::FitCdf { samples, preset, out } => fit_cdf(samples.as_deref(), preset.as_deref(), &out.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Infeasible(why)) => {
            eprintln!("infeasible: {why}");
            ExitCode::from(EXIT_INFEASIBLE)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Numeric(_) | Error::ExactTooLarge { .. } => ExitCode::from(EXIT_NUMERIC),
                _ => ExitCode::from(EXIT_CONFIG),
            }
        }
    }
}

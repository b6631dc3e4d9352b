//! Subcommands of the `strokeseg` binary.

use crate::{detect_record, detection_json, service, svg, Failure};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use strokeseg::classifier::{train_baseline, ClassifierError, ModelKind, TrainParams};
use strokeseg::eval::{
    builtin_shapes, cross_validate, generate_corpus, load_dataset, make_splits, write_dataset, BaselineMethod, EvalError,
    EvalMethod, MatchRule, NoiseParams, NullMethod, OracleMethod, SplitStrategy, StrokeDetector,
};
use strokeseg::pipeline::{ClassifierSpec, DetectError, Detector, DetectorConfig};
use strokeseg::raster::export_contexts;
use strokeseg::stroke::{
    candidate_corners_with, load_record, parse_record, resample, straw, StrokeError, StrokeRecord, DEFAULT_POINTS,
};
use strokeseg::Stroke;

#[derive(Debug, Parser)]
#[command(name = "strokeseg", version, about = "Corner and tangent point detection for hand-drawn strokes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect corners and tangent points in one stroke file (or stdin).
    Detect(DetectArgs),
    /// Train baseline point and corner models on a labeled dataset.
    Train(TrainArgs),
    /// Five-round cross-validation on a dataset or a synthetic corpus.
    Eval(EvalArgs),
    /// Write the four context images of each point of a stroke.
    ExportContexts(ExportArgs),
    /// Generate a labeled synthetic dataset.
    Synth(SynthArgs),
    /// Serve the JSON API on localhost.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Svg,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Stroke file (.stk or JSON); `-` or absent reads stdin.
    pub input: Option<PathBuf>,
    /// Detector config JSON naming the classifiers.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of labeled `person-round-shape.stk` files.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Directory receiving point.json, corner.json and detector.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Base detector config whose constants are copied into detector.json.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    /// Hidden layer width; 0 trains plain logistic regression.
    #[arg(long, default_value_t = 16)]
    pub hidden: usize,
    /// Fraction of strokes held out for validation.
    #[arg(long, default_value_t = 0.2)]
    pub validation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Retrain baseline models in every round.
    Baseline,
    /// Use the classifiers named by --config without retraining.
    Configured,
    /// Return the labels themselves.
    Oracle,
    /// Detect nothing.
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Person,
    Shape,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Labeled dataset directory; a synthetic corpus is generated when absent.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "baseline")]
    pub method: Method,
    #[arg(long, value_enum, default_value = "person")]
    pub split: Split,
    /// Matching tolerance in resampled indices.
    #[arg(long, default_value_t = 2)]
    pub tolerance: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Synthetic corpus size.
    #[arg(long, default_value_t = 400)]
    pub count: usize,
    /// Synthetic noise in pixels.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Directory receiving rounds.csv, failures.csv and report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Only export candidate corners instead of every point.
    #[arg(long)]
    pub candidates: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Points per stroke.
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory of `person-round-shape.stk` files.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// 0 picks a free port.
    #[arg(long, default_value_t = 8765)]
    pub port: u16,
}

pub fn stroke_failure(e: StrokeError) -> Failure {
    match e {
        StrokeError::Io(e) => Failure::Io(e.to_string()),
        other => Failure::Parse(other.to_string()),
    }
}

fn detect_failure(e: DetectError) -> Failure {
    match e {
        DetectError::Stroke(s @ StrokeError::Io(_)) => Failure::Io(s.to_string()),
        other => Failure::Detect(other.to_string()),
    }
}

fn eval_failure(e: EvalError) -> Failure {
    match e {
        EvalError::File { path, source } => match stroke_failure(source) {
            Failure::Io(m) => Failure::Io(format!("{}: {m}", path.display())),
            Failure::Parse(m) => Failure::Parse(format!("{}: {m}", path.display())),
            other => other,
        },
        EvalError::Stroke(s) => stroke_failure(s),
        EvalError::Detect(d) => detect_failure(d),
        e @ (EvalError::Classifier(_) | EvalError::LengthMismatch { .. }) => Failure::Detect(e.to_string()),
        other => Failure::Parse(other.to_string()),
    }
}

fn io_failure(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

pub fn load_config(path: Option<&Path>) -> Result<DetectorConfig, Failure> {
    let Some(path) = path else {
        return Ok(DetectorConfig::default());
    };
    DetectorConfig::load(path).map_err(|e| match e {
        DetectError::Stroke(StrokeError::Io(io)) => Failure::Io(format!("{}: {io}", path.display())),
        other => Failure::Parse(format!("{}: {other}", path.display())),
    })
}

/// Loads the config and builds its classifiers. A missing or unreadable
/// model is a detection failure.
pub fn load_detector(path: Option<&Path>) -> Result<Detector, Failure> {
    let cfg = load_config(path)?;
    Detector::from_config(cfg).map_err(|e| match (path, e) {
        (None, e @ DetectError::Config(_)) => Failure::Detect(format!("{e} (pass --config)")),
        (_, e) => Failure::Detect(e.to_string()),
    })
}

fn read_record(input: Option<&Path>) -> Result<StrokeRecord, Failure> {
    match input {
        Some(p) if p != Path::new("-") => load_record(p).map_err(|e| match e {
            StrokeError::Io(io) => Failure::Io(format!("{}: {io}", p.display())),
            other => Failure::Parse(format!("{}: {other}", p.display())),
        }),
        _ => {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text).map_err(|e| Failure::Io(format!("stdin: {e}")))?;
            parse_record(&text).map_err(stroke_failure)
        }
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(io_failure(p)),
        None => stdout.write_all(text.as_bytes()).map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Detect(a) => detect(a, stdout),
        Command::Train(a) => train(a, stdout),
        Command::Eval(a) => eval(a, stdout),
        Command::ExportContexts(a) => export(a, stdout),
        Command::Synth(a) => synth(a, stdout),
        Command::Serve(a) => serve(a, stdout),
    }
}

fn detect(a: DetectArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let detector = load_detector(a.config.as_deref())?;
    let record = read_record(a.input.as_deref())?;
    let (stk, result) = detect_record(&detector, record).map_err(|e| match e {
        DetectError::Stroke(s) => stroke_failure(s),
        other => detect_failure(other),
    })?;
    let text = match a.format {
        Format::Json => detection_json(&result) + "\n",
        Format::Svg => svg::render_svg(&stk, &result),
    };
    emit(a.out.as_deref(), &text, stdout)
}

fn train(a: TrainArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    if !(0.0..1.0).contains(&a.validation) {
        return Err(Failure::Parse("--validation must be in [0, 1)".into()));
    }
    let base = load_config(a.config.as_deref())?;
    let strokes = load_dataset(&a.dataset).map_err(eval_failure)?;
    let mut order: Vec<usize> = (0..strokes.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(a.seed));
    let held = (a.validation * strokes.len() as f64).round() as usize;
    let pick = |idx: &[usize]| -> Vec<Stroke> { idx.iter().map(|&i| strokes[i].clone()).collect() };
    let (val, tr) = order.split_at(held);
    let (train_set, val_set) = (pick(tr), pick(val));
    let params = TrainParams {
        epochs: a.epochs,
        seed: a.seed,
        hidden: (a.hidden > 0).then_some(a.hidden),
        ..TrainParams::default()
    };
    let failed = |e: ClassifierError| Failure::Detect(format!("training failed: {e}"));
    let point = train_baseline(&train_set, &val_set, ModelKind::Point, &params).map_err(failed)?;
    let corner = train_baseline(&train_set, &val_set, ModelKind::Corner, &params).map_err(failed)?;
    std::fs::create_dir_all(&a.out).map_err(io_failure(&a.out))?;
    let save = |name: &str, m: &strokeseg::classifier::BaselineModel| {
        let p = a.out.join(name);
        m.save(&p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))
    };
    save("point.json", &point)?;
    save("corner.json", &corner)?;
    let cfg = DetectorConfig {
        point_classifier: Some(ClassifierSpec::Model { path: "point.json".into() }),
        corner_classifier: Some(ClassifierSpec::Model { path: "corner.json".into() }),
        ..base
    };
    let cfg_path = a.out.join("detector.json");
    let text = serde_json::to_string_pretty(&cfg).expect("config serializes") + "\n";
    std::fs::write(&cfg_path, text).map_err(io_failure(&cfg_path))?;
    let acc = |m: &strokeseg::classifier::BaselineModel| {
        m.training.validation_accuracy.map_or_else(|| "n/a".to_string(), |v| format!("{:.2}%", 100.0 * v))
    };
    let report = format!(
        "trained on {} strokes ({} held out)\npoint model: {} rows, validation accuracy {}\ncorner model: {} rows, validation accuracy {}\nwrote {}\n",
        train_set.len(),
        val_set.len(),
        point.training.train_rows,
        acc(&point),
        corner.training.train_rows,
        acc(&corner),
        cfg_path.display()
    );
    emit(None, &report, stdout)
}

struct ConfiguredMethod(Arc<Detector>);

impl EvalMethod for ConfiguredMethod {
    fn name(&self) -> &str {
        "configured"
    }

    fn fit(&self, _: &[Stroke], _: &[Stroke]) -> Result<Arc<dyn StrokeDetector>, EvalError> {
        Ok(self.0.clone())
    }
}

fn synthetic_noise(sigma: f64) -> NoiseParams {
    NoiseParams {
        sigma,
        ..NoiseParams::default()
    }
}

fn eval(a: EvalArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let base = load_config(a.config.as_deref())?;
    let strokes = match &a.dataset {
        Some(dir) => load_dataset(dir).map_err(eval_failure)?,
        None => generate_corpus(&builtin_shapes(), a.count, a.seed, &synthetic_noise(a.sigma), base.n).map_err(eval_failure)?,
    };
    let ids: Vec<_> = strokes.iter().map(|s| s.source_id()).collect();
    let strategy = match a.split {
        Split::Person => SplitStrategy::SetByPerson,
        Split::Shape => SplitStrategy::SetByShape,
    };
    let plan = make_splits(&ids, strategy).map_err(eval_failure)?;
    let params = TrainParams {
        seed: a.seed,
        ..TrainParams::default()
    };
    let method: Box<dyn EvalMethod> = match a.method {
        Method::Baseline => Box::new(BaselineMethod {
            config: base,
            point_params: params.clone(),
            corner_params: params,
        }),
        Method::Configured => Box::new(ConfiguredMethod(Arc::new(load_detector(a.config.as_deref())?))),
        Method::Oracle => Box::new(OracleMethod),
        Method::Null => Box::new(NullMethod),
    };
    let cv = cross_validate(&strokes, &plan, method.as_ref(), &MatchRule { tolerance: a.tolerance }).map_err(eval_failure)?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(io_failure(dir))?;
        let files = [
            ("rounds.csv", cv.rounds_csv()),
            ("failures.csv", cv.failures_csv(&strokes)),
            ("report.json", serde_json::to_string_pretty(&cv).expect("report serializes") + "\n"),
        ];
        for (name, text) in files {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(io_failure(&p))?;
        }
    }
    emit(None, &cv.summary(), stdout)
}

fn export(a: ExportArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let cfg = load_config(a.config.as_deref())?;
    let record = read_record(Some(&a.input))?;
    let raw = record.into_raw().map_err(stroke_failure)?;
    let stk = resample(&raw, cfg.n).map_err(stroke_failure)?;
    let indices: Vec<usize> = if a.candidates {
        candidate_corners_with(&straw(&stk, cfg.straw_window.min((stk.len() - 1) / 2)), &cfg.walk).indices
    } else {
        (0..stk.len()).collect()
    };
    std::fs::create_dir_all(&a.out).map_err(io_failure(&a.out))?;
    let count = export_contexts(&stk, &indices, &a.out).map_err(|e| Failure::Io(e.to_string()))?;
    emit(None, &format!("wrote {count} context images to {}\n", a.out.display()), stdout)
}

fn synth(a: SynthArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let strokes = generate_corpus(&builtin_shapes(), a.count, a.seed, &synthetic_noise(a.sigma), a.n).map_err(eval_failure)?;
    std::fs::create_dir_all(&a.out).map_err(io_failure(&a.out))?;
    let paths = write_dataset(&a.out, &strokes).map_err(eval_failure)?;
    emit(None, &format!("wrote {} strokes to {}\n", paths.len(), a.out.display()), stdout)
}

fn serve(a: ServeArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let detector = load_detector(a.config.as_deref())?;
    if !a.dataset.is_dir() {
        return Err(Failure::Io(format!("{}: not a directory", a.dataset.display())));
    }
    let state = service::AppState::new(detector, a.dataset);
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::Io(e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((std::net::Ipv4Addr::LOCALHOST, a.port))
            .await
            .map_err(|e| Failure::Io(format!("cannot bind port {}: {e}", a.port)))?;
        let addr = listener.local_addr().map_err(|e| Failure::Io(e.to_string()))?;
        writeln!(stdout, "listening on http://{addr}").and_then(|_| stdout.flush()).map_err(|e| Failure::Io(e.to_string()))?;
        service::serve(listener, state).await.map_err(|e| Failure::Io(e.to_string()))
    })
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use heavyhex::config::RunConfig;
use heavyhex::dataset::{self, Dataset, LabelField};
use heavyhex::decoders::{
    train_decoder, Decoder, DecoderKind, LookupDecoder, MatchingDecoder, NeuralModelFile,
};
use heavyhex::eval::{self, bench_gauge, logical_error_rate, CurvePoint};
use heavyhex::sweep::{self, derive_seed, evaluate_instances, run_sweep, PseudoEntry, ThresholdEntry};
use heavyhex::{CodeLayout, NoiseConfig};

const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (dataset format heavyhex-dataset v1, model format heavyhex-ffnn v1, curve csv v1)"
);

#[derive(Parser)]
#[command(name = "heavyhex", version = VERSION, about = "Heavy hexagonal code workbench")]
struct Cli {
    /// Run configuration file (`key = value` lines); flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Cmd {
    /// Print the gauge, stabilizer and logical supports of a distance-d code.
    Layout(LayoutArgs),
    /// Sample a labelled dataset.
    GenData(GenArgs),
    /// Recompute the canonical labels of a dataset.
    Canonicalize(CanonArgs),
    /// Train feed-forward decoders on a dataset.
    Train(TrainArgs),
    /// Estimate logical error rates.
    Eval(EvalArgs),
    /// Generate, train and evaluate over distances and noise strengths.
    Sweep(SweepArgs),
    /// Time the gauge canonicalization methods on the same sampled errors.
    BenchGauge(BenchArgs),
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    p_step: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    syndrome_noise: bool,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args)]
struct LayoutArgs {
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    d: Option<String>,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long)]
    n: Option<String>,
    /// search, rank, exact or none
    #[arg(long)]
    canonical: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct CanonArgs {
    #[arg(long)]
    data: Option<String>,
    /// search, rank, exact or phase
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: Option<String>,
    /// raw or canonical
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    batch: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    instances: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    d: Option<String>,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Comma-separated per-step probabilities.
    #[arg(long)]
    p_steps: Option<String>,
    /// Comma-separated per-cycle probabilities.
    #[arg(long)]
    q_values: Option<String>,
    /// Comma-separated: ffnn, mwpm, lookup
    #[arg(long)]
    decoders: Option<String>,
    #[arg(long)]
    model_file: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// x, z, any or auto
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    distances: Option<String>,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long)]
    p_steps: Option<String>,
    #[arg(long)]
    q_values: Option<String>,
    #[arg(long)]
    decoders: Option<String>,
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    canonical: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    batch: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    instances: Option<String>,
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    target: Option<String>,
    /// CSV of curve points.
    #[arg(long)]
    out: Option<String>,
    /// JSON with pseudo-thresholds and thresholds.
    #[arg(long)]
    summary: Option<String>,
    #[arg(long)]
    svg: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated: none, search, rank, exact
    #[arg(long)]
    methods: Option<String>,
    /// Per-cycle bit-flip probability of the sampled errors.
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

struct CliError {
    kind: &'static str,
    msg: String,
}

impl From<heavyhex::Error> for CliError {
    fn from(e: heavyhex::Error) -> Self {
        use heavyhex::Error as E;
        let kind = match &e {
            E::LengthMismatch { .. } => "length-mismatch",
            E::BadBitString(_) => "bad-bits",
            E::InvalidDistance(_) => "invalid-distance",
            E::InvalidProbability(_) => "invalid-probability",
            E::DependentGenerators { .. } => "dependent-generators",
            E::SpanNotMaterialized { .. } => "span-cap",
            E::Invalid(_) => "invalid",
            E::Malformed { .. } => "malformed",
            E::Verify { .. } => "verify",
            E::CountMismatch { .. } => "count-mismatch",
            E::Diverged(_) => "diverged",
            E::Io(_) => "io",
            E::Json(_) => "json",
        };
        CliError {
            kind,
            msg: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        heavyhex::Error::Io(e).into()
    }
}

type CliResult<T> = Result<T, CliError>;

fn in_file<T>(path: &str, r: heavyhex::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let mut c = CliError::from(e);
        c.msg = format!("{path}: {}", c.msg);
        c
    })
}

fn missing(what: &str, flag: &str) -> CliError {
    CliError {
        kind: "invalid",
        msg: format!("no {what} given (use {flag} or the matching config key)"),
    }
}

/// Collects `(key, value)` overrides from flags that were given.
#[derive(Default)]
struct Overrides(Vec<(&'static str, String)>);

impl Overrides {
    fn opt(&mut self, key: &'static str, v: &Option<String>) -> &mut Self {
        if let Some(v) = v {
            self.0.push((key, v.clone()));
        }
        self
    }

    fn noise(&mut self, n: &NoiseArgs) -> &mut Self {
        self.opt("model", &n.model)
            .opt("p_step", &n.p_step)
            .opt("steps", &n.steps)
            .opt("seed", &n.seed);
        if n.syndrome_noise {
            self.0.push(("syndrome_noise", "true".into()));
        }
        self
    }
}

fn overrides(cmd: &Cmd) -> Overrides {
    let mut o = Overrides::default();
    match cmd {
        Cmd::Layout(a) => {
            o.opt("d", &a.d);
        }
        Cmd::GenData(a) => {
            o.opt("d", &a.d)
                .noise(&a.noise)
                .opt("n", &a.n)
                .opt("canonical", &a.canonical)
                .opt("data", &a.out);
        }
        Cmd::Canonicalize(a) => {
            o.opt("data", &a.data).opt("canonical", &a.method).opt("out", &a.out);
        }
        Cmd::Train(a) => {
            o.opt("data", &a.data)
                .opt("labels", &a.labels)
                .opt("hidden", &a.hidden)
                .opt("epochs", &a.epochs)
                .opt("batch", &a.batch)
                .opt("lr", &a.lr)
                .opt("instances", &a.instances)
                .opt("seed", &a.seed)
                .opt("model_file", &a.out);
        }
        Cmd::Eval(a) => {
            o.opt("d", &a.d)
                .noise(&a.noise)
                .opt("p_steps", &a.p_steps)
                .opt("q_values", &a.q_values)
                .opt("decoders", &a.decoders)
                .opt("model_file", &a.model_file)
                .opt("trials", &a.trials)
                .opt("target", &a.target)
                .opt("out", &a.out);
        }
        Cmd::Sweep(a) => {
            o.opt("distances", &a.distances)
                .noise(&a.noise)
                .opt("p_steps", &a.p_steps)
                .opt("q_values", &a.q_values)
                .opt("decoders", &a.decoders)
                .opt("labels", &a.labels)
                .opt("n", &a.n)
                .opt("canonical", &a.canonical)
                .opt("epochs", &a.epochs)
                .opt("batch", &a.batch)
                .opt("lr", &a.lr)
                .opt("instances", &a.instances)
                .opt("hidden", &a.hidden)
                .opt("trials", &a.trials)
                .opt("target", &a.target)
                .opt("out", &a.out)
                .opt("summary", &a.summary)
                .opt("svg", &a.svg);
        }
        Cmd::BenchGauge(a) => {
            o.opt("d", &a.d)
                .opt("bench_n", &a.n)
                .opt("bench_methods", &a.methods)
                .opt("bench_q", &a.q)
                .opt("seed", &a.seed)
                .opt("out", &a.out);
        }
    }
    o
}

fn resolve(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    for (k, v) in overrides(&cli.cmd).0 {
        cfg.set(k, &v).map_err(|e| CliError {
            kind: "invalid",
            msg: format!("--{}: {e}", k.replace('_', "-")),
        })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes to `path`, or stdout when none is configured.
fn output(path: &Option<String>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::from(e).prefixed(p))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

impl CliError {
    fn prefixed(mut self, path: &str) -> Self {
        self.msg = format!("{path}: {}", self.msg);
        self
    }
}

#[derive(Serialize)]
struct LayoutJson {
    d: usize,
    n_qubits: usize,
    x_gauge: Vec<Vec<usize>>,
    z_gauge: Vec<Vec<usize>>,
    z_stabilizers: Vec<Vec<usize>>,
    x_stabilizers: Vec<Vec<usize>>,
    logical_x: Vec<usize>,
    logical_z: Vec<usize>,
}

fn supports(v: &[heavyhex::BitVec]) -> Vec<Vec<usize>> {
    v.iter().map(|b| b.iter_ones().collect()).collect()
}

fn cmd_layout(cfg: &RunConfig, json: bool) -> CliResult<()> {
    let l = CodeLayout::new(cfg.d)?;
    let view = LayoutJson {
        d: l.d(),
        n_qubits: l.n_qubits(),
        x_gauge: supports(l.x_gauge_generators()),
        z_gauge: supports(l.z_gauge_generators()),
        z_stabilizers: supports(l.z_stabilizers()),
        x_stabilizers: supports(l.x_stabilizers()),
        logical_x: l.logical_x().iter_ones().collect(),
        logical_z: l.logical_z().iter_ones().collect(),
    };
    let mut out = std::io::stdout().lock();
    if json {
        serde_json::to_writer_pretty(&mut out, &view).map_err(heavyhex::Error::from)?;
        writeln!(out)?;
        return Ok(());
    }
    writeln!(out, "d = {}, {} qubits (index = (row-1)*d + (col-1))", view.d, view.n_qubits)?;
    for (name, sets) in [
        ("x gauge", &view.x_gauge),
        ("z gauge", &view.z_gauge),
        ("z stabilizers", &view.z_stabilizers),
        ("x stabilizers", &view.x_stabilizers),
    ] {
        writeln!(out, "{name} ({}):", sets.len())?;
        for s in sets {
            writeln!(out, "  {s:?}")?;
        }
    }
    writeln!(out, "logical x: {:?}", view.logical_x)?;
    writeln!(out, "logical z: {:?}", view.logical_z)?;
    Ok(())
}

fn cmd_gen(cfg: &RunConfig) -> CliResult<()> {
    let layout = CodeLayout::new(cfg.d)?;
    let mut ds = dataset::generate(&layout, &cfg.noise(), cfg.n, cfg.canonical)?;
    ds.header.provenance = cfg.resolved_lines();
    let w = output(&cfg.data)?;
    ds.write(w)?;
    Ok(())
}

fn cmd_canon(cfg: &RunConfig) -> CliResult<()> {
    let path = cfg.data.as_ref().ok_or_else(|| missing("input dataset", "--data"))?;
    let ds = in_file(path, Dataset::load(Path::new(path), false))?;
    let mut out = dataset::recanonicalize(&ds, cfg.canonical)?;
    // keep the producing run's settings; note the relabelling
    out.header.provenance.push(format!("canonicalize = {}", cfg.canonical));
    out.write(output(&cfg.out)?)?;
    Ok(())
}

fn single_label(cfg: &RunConfig) -> CliResult<LabelField> {
    match cfg.labels.as_slice() {
        [one] => Ok(*one),
        _ => Err(CliError {
            kind: "invalid",
            msg: "train takes a single label field (raw or canonical)".into(),
        }),
    }
}

fn cmd_train(cfg: &RunConfig) -> CliResult<()> {
    let path = cfg.data.as_ref().ok_or_else(|| missing("training dataset", "--data"))?;
    let field = single_label(cfg)?;
    let ds = in_file(path, Dataset::load(Path::new(path), true))?;
    let mut model = train_decoder(&ds, field, &cfg.train_config(ds.header.d))?;
    model.provenance = cfg.resolved_lines();
    for (i, inst) in model.instances.iter().enumerate() {
        let last = |v: &Vec<f64>| v.last().map_or("-".to_string(), |x| format!("{x:.6}"));
        eprintln!(
            "instance {i}: final loss x {} z {}",
            last(&inst.loss_x),
            last(&inst.loss_z)
        );
    }
    match &cfg.model_file {
        Some(p) => in_file(p, model.save(Path::new(p)))?,
        None => {
            let mut out = std::io::stdout().lock();
            serde_json::to_writer(&mut out, &model).map_err(heavyhex::Error::from)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn cmd_eval(cfg: &RunConfig) -> CliResult<()> {
    let model = match &cfg.model_file {
        Some(p) => Some(in_file(p, NeuralModelFile::load(Path::new(p)))?),
        None => None,
    };
    if cfg.decoders.contains(&DecoderKind::Ffnn) && model.is_none() {
        return Err(missing("model file for the ffnn decoder", "--model-file"));
    }
    let d = model.as_ref().map_or(cfg.d, |m| m.d);
    let layout = CodeLayout::new(d)?;
    let target = cfg.target();
    let mut points: Vec<CurvePoint> = Vec::new();
    for (k, p) in cfg.sweep_p_steps()?.into_iter().enumerate() {
        let noise = NoiseConfig {
            p_step: p,
            seed: derive_seed(cfg.seed, &[sweep::EVAL, d as u64, k as u64]),
            ..cfg.noise()
        };
        for kind in &cfg.decoders {
            let pt = match kind {
                DecoderKind::Ffnn => {
                    evaluate_instances(model.as_ref().expect("checked above"), &layout, &noise, cfg.trials, target)?
                }
                DecoderKind::Mwpm => logical_error_rate(&MatchingDecoder::new(&layout), &layout, &noise, cfg.trials, target)?,
                DecoderKind::Lookup => {
                    let dec: Box<dyn Decoder> =
                        Box::new(LookupDecoder::for_noise(&layout, cfg.model, noise.effective()?)?);
                    logical_error_rate(dec.as_ref(), &layout, &noise, cfg.trials, target)?
                }
            };
            eprintln!(
                "d={} p_step={} q={:.6} {} ({}): {:.6} ± {:.6}",
                pt.d, pt.p_step, pt.q_effective, pt.decoder, pt.labels, pt.logical_error_rate, pt.ci_halfwidth
            );
            points.push(pt);
        }
    }
    eval::write_csv(output(&cfg.out)?, &cfg.resolved_lines(), &points)?;
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    format: &'static str,
    version: u32,
    config: Vec<String>,
    pseudo_thresholds: &'a [PseudoEntry],
    thresholds: &'a [ThresholdEntry],
    notes: &'a [String],
}

fn cmd_sweep(cfg: &RunConfig) -> CliResult<()> {
    let res = run_sweep(cfg, &mut |pt| {
        eprintln!(
            "d={} p_step={} q={:.6} {} ({}): {:.6} ± {:.6}",
            pt.d, pt.p_step, pt.q_effective, pt.decoder, pt.labels, pt.logical_error_rate, pt.ci_halfwidth
        )
    })?;
    eval::write_csv(output(&cfg.out)?, &cfg.resolved_lines(), &res.points)?;
    let summary = Summary {
        format: "heavyhex-sweep-summary",
        version: 1,
        config: cfg.resolved_lines(),
        pseudo_thresholds: &res.pseudo_thresholds,
        thresholds: &res.thresholds,
        notes: &res.notes,
    };
    let text = serde_json::to_string_pretty(&summary).map_err(heavyhex::Error::from)?;
    match &cfg.summary {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| CliError::from(e).prefixed(p))?,
        None => eprintln!("{text}"),
    }
    if let Some(p) = &cfg.svg {
        std::fs::write(p, eval::render_svg(&res.points)).map_err(|e| CliError::from(e).prefixed(p))?;
    }
    Ok(())
}

fn cmd_bench(cfg: &RunConfig) -> CliResult<()> {
    let layout = CodeLayout::new(cfg.d)?;
    let rows = bench_gauge(&layout, cfg.bench_n, &cfg.bench_methods, cfg.bench_q, cfg.seed)?;
    let mut w = output(&cfg.out)?;
    writeln!(w, "method,n,seconds")?;
    for r in rows {
        writeln!(w, "{},{},{:.6}", r.method, r.n, r.seconds)?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = resolve(cli)?;
    if cfg.workers > 0 {
        // fails only if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global();
    }
    eprintln!("# resolved configuration");
    for line in cfg.resolved_lines() {
        eprintln!("#   {line}");
    }
    eprintln!("# seed = {}", cfg.seed);
    match &cli.cmd {
        Cmd::Layout(a) => cmd_layout(&cfg, a.json),
        Cmd::GenData(_) => cmd_gen(&cfg),
        Cmd::Canonicalize(_) => cmd_canon(&cfg),
        Cmd::Train(_) => cmd_train(&cfg),
        Cmd::Eval(_) => cmd_eval(&cfg),
        Cmd::Sweep(_) => cmd_sweep(&cfg),
        Cmd::BenchGauge(_) => cmd_bench(&cfg),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind, e.msg.replace('\n', " "));
            ExitCode::from(1)
        }
    }
}

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hicode_lab::graph::Graph;
use hicode_lab::hicode::{self, HicodeConfig};
use hicode_lab::io;
use hicode_lab::landscape::{self, LandscapeConfig};
use hicode_lab::louvain::{self, LouvainConfig};
use hicode_lab::metrics::{match_layers, nmi};
use hicode_lab::modularity::partition_modularity;
use hicode_lab::plot;
use hicode_lab::sbm::{self, LayerSpec, Placement, SbmParams};
use hicode_lab::verify::{self, VerificationReport};
use hicode_lab::weaken::{self, ReduceFactorRule, WeakenMethod};

/// Multi-layer stochastic block models, layer weakening and hidden
/// community detection.
#[derive(Parser)]
#[command(name = "hicode", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a multi-layer block model graph and its planted layers.
    Generate(GenerateArgs),
    /// Run Louvain on a graph and write the partition.
    Detect(DetectArgs),
    /// Weaken the communities of a partition in a graph.
    Weaken(WeakenArgs),
    /// Detect several layers by detect-and-weaken, then refine them.
    Hicode(HicodeArgs),
    /// NMI between two partition files.
    Nmi { a: PathBuf, b: PathBuf },
    /// Modularity of a partition on a graph.
    Modularity { graph: PathBuf, partition: PathBuf },
    /// Check the two-layer lemmas and theorems on generated instances.
    Verify(VerifyArgs),
    /// Trace modularity landscapes across the stages of a HICODE run.
    Landscape(LandscapeArgs),
    /// Render landscape CSV files as SVG scatter plots.
    Plot(PlotArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Node count.
    #[arg(long, default_value_t = 600)]
    n: usize,
    /// A layer as `communities:probability`; repeat once per layer.
    #[arg(long = "layer", value_parser = parse_layer)]
    layers: Vec<LayerSpec>,
    #[arg(long, value_enum, default_value_t = PlacementArg::Auto)]
    placement: PlacementArg,
}

impl ModelArgs {
    fn params(&self, seed: u64) -> SbmParams {
        let layers = if self.layers.is_empty() {
            vec![LayerSpec::new(15, 0.1), LayerSpec::new(12, 0.12)]
        } else {
            self.layers.clone()
        };
        let placement = match self.placement {
            PlacementArg::Auto => Placement::auto(self.n, &layers),
            PlacementArg::Striped => Placement::Striped,
            PlacementArg::Random => Placement::RandomBalanced,
            PlacementArg::Stratified => Placement::Stratified,
        };
        SbmParams::new(self.n, layers, seed, placement)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    /// Striped when n is divisible by the product of community counts,
    /// random otherwise.
    Auto,
    Striped,
    Random,
    Stratified,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge list output.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth output.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    graph: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WeakenArgs {
    graph: PathBuf,
    partition: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::ReduceEdge)]
    method: MethodArg,
    /// background, thm3 (noise-complement), thm4 (grounded-probability) or
    /// fixed:F.
    #[arg(long, value_parser = parse_rule, default_value = "background")]
    rule: ReduceFactorRule,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Remove,
    ReduceEdge,
    ReduceWeight,
}

impl From<MethodArg> for WeakenMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Remove => WeakenMethod::RemoveEdge,
            MethodArg::ReduceEdge => WeakenMethod::ReduceEdge,
            MethodArg::ReduceWeight => WeakenMethod::ReduceWeight,
        }
    }
}

#[derive(Args)]
struct HicodeOptions {
    /// Number of layers to detect.
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::ReduceEdge)]
    method: MethodArg,
    #[arg(long, value_parser = parse_rule, default_value = "background")]
    rule: ReduceFactorRule,
    /// Maximum refinement rounds.
    #[arg(long, default_value_t = 5)]
    rounds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl HicodeOptions {
    fn config(&self) -> HicodeConfig {
        HicodeConfig {
            num_layers: self.layers,
            base: LouvainConfig::with_seed(self.seed),
            method: self.method.into(),
            rule: self.rule,
            refine_rounds: self.rounds,
            seed: self.seed,
            ..HicodeConfig::default()
        }
    }
}

#[derive(Args)]
struct HicodeArgs {
    graph: PathBuf,
    #[command(flatten)]
    options: HicodeOptions,
    /// Ground truth to score the layers against.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Receives `layer{i}.part` and `history.tsv`.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClaimArg {
    Lemma1,
    Lemma2,
    Lemma3,
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    claim: ClaimArg,
    #[command(flatten)]
    model: ModelArgs,
    /// Trials per claim; each claim has its own default.
    #[arg(long)]
    trials: Option<usize>,
    /// Candidate partitions for thm2, tuples for lemma2.
    #[arg(long)]
    samples: Option<usize>,
    /// Reduce factor for thm3 and thm4; defaults to the rule each theorem
    /// is stated for.
    #[arg(long, value_parser = parse_rule)]
    rule: Option<ReduceFactorRule>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct LandscapeArgs {
    graph: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[command(flatten)]
    options: HicodeOptions,
    /// Record at most this many stages.
    #[arg(long)]
    stages: Option<usize>,
    /// Perturbed samples per mutation count and layer.
    #[arg(long, default_value_t = 4)]
    replicates: usize,
    /// Largest mutation count.
    #[arg(long, default_value_t = 500)]
    max_mutations: usize,
    /// Mixed samples.
    #[arg(long, default_value_t = 1200)]
    mixed: usize,
    /// Receives one `stage_<label>.csv` per stage.
    #[arg(long)]
    out_dir: PathBuf,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    /// Landscape CSV files.
    #[arg(required = true)]
    csv: Vec<PathBuf>,
    /// Receives one SVG per input, named after it.
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_layer(s: &str) -> Result<LayerSpec, String> {
    let (k, p) = s
        .split_once(':')
        .ok_or_else(|| format!("expected communities:probability, got {s:?}"))?;
    let k = k
        .parse()
        .map_err(|_| format!("invalid community count {k:?}"))?;
    let p = p.parse().map_err(|_| format!("invalid probability {p:?}"))?;
    Ok(LayerSpec::new(k, p))
}

fn parse_rule(s: &str) -> Result<ReduceFactorRule, String> {
    Ok(match s {
        "background" | "background-ratio" => ReduceFactorRule::BackgroundRatio,
        "thm3" | "noise-complement" => ReduceFactorRule::NoiseComplement,
        "thm4" | "grounded-probability" => ReduceFactorRule::GroundedProbability,
        other => match other.strip_prefix("fixed:") {
            Some(f) => ReduceFactorRule::Fixed(
                f.parse().map_err(|_| format!("invalid fixed fraction {f:?}"))?,
            ),
            None => {
                return Err(format!(
                    "unknown rule {other:?}; expected background, thm3, thm4 or fixed:F"
                ))
            }
        },
    })
}

enum Failure {
    /// Usage, parameter or file errors.
    Input(String),
    /// A verification claim failed.
    Verification,
}

impl From<hicode_lab::Error> for Failure {
    fn from(e: hicode_lab::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Failure::Input("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Input(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn out(text: &str) {
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes());
}

fn generate(args: &GenerateArgs) -> Outcome {
    let params = args.model.params(args.seed);
    let (g, truth) = sbm::generate(&params)?;
    io::save_graph(&g, &args.out)?;
    io::save_truth(&io::TruthDocument::new(&params, &truth), &args.truth)?;
    out(&format!(
        "seed: {}\nplacement: {:?}\nnodes: {}\nedges: {}\n",
        params.seed,
        params.placement,
        g.node_count(),
        g.edge_count()
    ));
    Ok(())
}

fn detect(args: &DetectArgs) -> Outcome {
    let g = io::load_graph(&args.graph)?;
    let p = louvain::detect(&g, &LouvainConfig::with_seed(args.seed))?;
    io::save_partition(&p, &args.out)?;
    out(&format!(
        "seed: {}\ncommunities: {}\nmodularity: {:.6}\n",
        args.seed,
        p.community_count(),
        partition_modularity(&g, &p)?
    ));
    Ok(())
}

fn weaken_cmd(args: &WeakenArgs) -> Outcome {
    let g = io::load_graph(&args.graph)?;
    let p = io::load_partition(&args.partition)?;
    let keep = weaken::layer_keep_fraction(&g, &p, args.rule)?;
    let method = args.method.into();
    let residual = weaken::weaken(&g, &p, method, args.rule, args.seed)?;
    io::save_graph(&residual, &args.out)?;
    out(&format!(
        "seed: {}\nkeep_fraction: {:.6}\nedges: {} -> {}\nweight: {:.6} -> {:.6}\n",
        args.seed,
        if method == WeakenMethod::RemoveEdge { 0.0 } else { keep },
        g.edge_count(),
        residual.edge_count(),
        g.total_weight(),
        residual.total_weight()
    ));
    Ok(())
}

fn load_truth(path: &Path) -> Result<sbm::GroundTruth, Failure> {
    Ok(io::load_truth(path)?.ground_truth()?)
}

fn hicode_cmd(args: &HicodeArgs) -> Outcome {
    let g = io::load_graph(&args.graph)?;
    let truth = args.truth.as_deref().map(load_truth).transpose()?;
    let result = hicode::run(&g, &args.options.config())?;
    create_dir(&args.out_dir)?;
    for (i, p) in result.layers.iter().enumerate() {
        io::save_partition(p, args.out_dir.join(format!("layer{i}.part")))?;
    }
    let mut history = String::from("round\tlayer\tmodularity\tnmi_to_previous\n");
    for h in &result.history {
        let similarity = h.nmi_to_previous.map_or("-".into(), |x| format!("{x:.6}"));
        history.push_str(&format!(
            "{}\t{}\t{:.6}\t{similarity}\n",
            h.round, h.layer, h.modularity
        ));
    }
    io::save_text(&history, args.out_dir.join("history.tsv"))?;

    let mut report = format!(
        "seed: {}\nlayers: {}\ntruncated: {}\n",
        args.options.seed,
        result.layers.len(),
        result.truncated
    );
    for (i, p) in result.layers.iter().enumerate() {
        report.push_str(&format!(
            "layer {i}: communities={} modularity={:.6}\n",
            p.community_count(),
            partition_modularity(&g, p)?
        ));
    }
    if let Some(truth) = truth {
        for (r, m) in match_layers(&result.layers, &truth.layers)?.iter().enumerate() {
            match m {
                Some((e, score)) => {
                    report.push_str(&format!("truth {r}: layer {e} nmi={score:.6}\n"))
                }
                None => report.push_str(&format!("truth {r}: unmatched\n")),
            }
        }
    }
    out(&report);
    Ok(())
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Input(format!("cannot create {}: {e}", dir.display())))
}

fn run_claim(claim: ClaimArg, args: &VerifyArgs) -> Result<VerificationReport, Failure> {
    let params = args.model.params(args.seed);
    let trials = |default| args.trials.unwrap_or(default);
    let theorem = |method, default_rule, default_trials| {
        verify::verify_theorem(
            &params,
            method,
            args.rule.unwrap_or(default_rule),
            trials(default_trials),
            args.seed,
        )
    };
    Ok(match claim {
        ClaimArg::Lemma1 => verify::verify_lemma1(&params, trials(100), args.seed)?,
        ClaimArg::Lemma2 => verify::verify_lemma2_sweep(args.samples.unwrap_or(10_000), args.seed)?,
        ClaimArg::Lemma3 => verify::verify_lemma3(&params, trials(50), args.seed)?,
        ClaimArg::Thm1 => theorem(WeakenMethod::RemoveEdge, ReduceFactorRule::BackgroundRatio, 20)?,
        ClaimArg::Thm3 => theorem(WeakenMethod::ReduceEdge, ReduceFactorRule::NoiseComplement, 100)?,
        ClaimArg::Thm4 => {
            theorem(WeakenMethod::ReduceWeight, ReduceFactorRule::GroundedProbability, 20)?
        }
        ClaimArg::Thm2 => {
            let (g, truth) = sbm::generate(&params)?;
            verify::verify_theorem2(&g, &truth, args.samples.unwrap_or(5000), args.seed)?
        }
        ClaimArg::All => unreachable!("expanded by the caller"),
    })
}

fn verify_cmd(args: &VerifyArgs) -> Outcome {
    let claims = if args.claim == ClaimArg::All {
        vec![
            ClaimArg::Lemma1,
            ClaimArg::Lemma2,
            ClaimArg::Lemma3,
            ClaimArg::Thm1,
            ClaimArg::Thm2,
            ClaimArg::Thm3,
            ClaimArg::Thm4,
        ]
    } else {
        vec![args.claim]
    };
    let mut failed = false;
    for (i, &claim) in claims.iter().enumerate() {
        let report = with_jobs(args.jobs, || run_claim(claim, args))??;
        failed |= report.verdict.is_failure();
        if i > 0 {
            out("\n");
        }
        out(&report.render());
    }
    if failed {
        Err(Failure::Verification)
    } else {
        Ok(())
    }
}

fn landscape_cmd(args: &LandscapeArgs) -> Outcome {
    let g = io::load_graph(&args.graph)?;
    let truth = load_truth(&args.truth)?;
    let mut cfg = args.options.config();
    if let Some(stages) = args.stages {
        let layers = cfg.num_layers.max(1);
        cfg.refine_rounds = cfg.refine_rounds.min(stages.saturating_sub(layers).div_ceil(layers));
    }
    let sampling = LandscapeConfig {
        max_mutations: args.max_mutations,
        replicates: args.replicates,
        mixed: args.mixed,
    };
    let mut stages = with_jobs(args.jobs, || {
        landscape::trace_hicode_with(&g, &truth, &cfg, &sampling)
    })??;
    if let Some(limit) = args.stages {
        stages.truncate(limit);
    }
    create_dir(&args.out_dir)?;
    let mut summary = format!("seed: {}\nstages: {}\n", args.options.seed, stages.len());
    for stage in &stages {
        let rows = landscape::stage_rows(stage);
        let path = args.out_dir.join(format!("stage_{}.csv", stage.label()));
        let mut buf = Vec::new();
        landscape::write_csv(&rows, &mut buf)?;
        std::fs::write(&path, buf)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
        if let Some(m) = stage.marker() {
            summary.push_str(&format!(
                "{}: marker nmi1={:.6} nmi2={:.6} modularity={:.6}\n",
                stage.label(),
                m.nmi1,
                m.nmi2,
                m.q
            ));
        }
    }
    out(&summary);
    Ok(())
}

fn plot_cmd(args: &PlotArgs) -> Outcome {
    create_dir(&args.out_dir)?;
    for path in &args.csv {
        let file = std::fs::File::open(path)
            .map_err(|e| Failure::Input(format!("cannot open {}: {e}", path.display())))?;
        let rows = landscape::read_csv(file, path)?;
        let stem = path
            .file_stem()
            .map_or_else(|| "plot".into(), |s| s.to_string_lossy().into_owned());
        let title = rows.first().map_or(stem.clone(), |r| r.stage.clone());
        let target = args.out_dir.join(format!("{stem}.svg"));
        io::save_text(&plot::render_svg(&title, &rows), &target)?;
        out(&format!("{}\n", target.display()));
    }
    Ok(())
}

fn two_files(a: &Path, b: &Path) -> Result<(Graph, hicode_lab::partition::Partition), Failure> {
    Ok((io::load_graph(a)?, io::load_partition(b)?))
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Generate(args) => generate(&args),
        Command::Detect(args) => detect(&args),
        Command::Weaken(args) => weaken_cmd(&args),
        Command::Hicode(args) => hicode_cmd(&args),
        Command::Nmi { a, b } => {
            let score = nmi(&io::load_partition(&a)?, &io::load_partition(&b)?)?;
            out(&format!("{score:.6}\n"));
            Ok(())
        }
        Command::Modularity { graph, partition } => {
            let (g, p) = two_files(&graph, &partition)?;
            out(&format!("{:.6}\n", partition_modularity(&g, &p)?));
            Ok(())
        }
        Command::Verify(args) => verify_cmd(&args),
        Command::Landscape(args) => landscape_cmd(&args),
        Command::Plot(args) => plot_cmd(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Input(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

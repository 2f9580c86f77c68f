//! Command-line entry point.
//!
//! Every subcommand writes a versioned JSON [`MetricReport`] to `--report`
//! (stdout by default). Settings come from an optional TOML file and are
//! overridden by flags. Exit codes: 0 success, 1 validation or domain
//! failure (error class on stderr), 2 usage error.

use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::clf::{alignment, bound_check, f1_scores, kernel_classifier_predict_many};
use crate::data::{
    load_interactions, load_labels, write_interactions_csv, InteractionDataset, InteractionFormat, LabelCatalog,
    DEFAULT_MIN_COUNT,
};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::harness::{
    self, balanced_catalog, clustered_corpus, correlate, run_variant_grid, structure_experiment, write_scatter_csv,
    CorpusConfig, HeadConfig, StructureConfig,
};
use crate::report::{write_report, write_report_to, MetricReport};
use crate::seq::{alpha_sweep, evaluate_next_item, exposure_for_table, EvalOptions, HistoryScorer};
use crate::sgns::{self, Optimizer, SgnsConfig};
use crate::sim::{recovery_experiment, simulate, SimConfig, Simulation};

/// File-level configuration. Every table is optional; unknown keys fail.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub sgns: Option<SgnsConfig>,
    pub sim: Option<SimConfig>,
    pub corpus: Option<CorpusConfig>,
    pub head: Option<HeadConfig>,
    pub exposure: Option<ExposureOverrides>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExposureOverrides {
    pub alpha: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Parser)]
#[command(name = "embkernel", version, about = "Kernel-level evaluation of pretrained embeddings")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads [default: available cores].
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Master seed; every stage derives its own stream from it [default: 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Where to write the JSON report [default: stdout].
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train skip-gram negative-sampling item embeddings.
    Pretrain(PretrainArgs),
    /// Retrain with several seeds and compare coordinates against kernel values.
    Stability(StabilityArgs),
    /// Kernel alignment and kernel-classifier F1 for labelled items.
    EvalClf(EvalClfArgs),
    /// Full-catalog next-item ranking with exposure-weighted history embeddings.
    EvalSeq(EvalSeqArgs),
    /// Sample an exposure-biased interaction simulation.
    Simulate(SimulateArgs),
    /// Compare weighted and unweighted intent recovery on a simulation.
    Recover(RecoverArgs),
    /// Linear versus kernel heads on controlled contrastive embeddings.
    Structure(StructureArgs),
    /// Correlate kernel metrics with downstream metrics across pretraining variants.
    Correlate(CorrelateArgs),
    /// Validate and merge existing reports.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SgnsArgs {
    /// Embedding dimension [default: 32].
    #[arg(long)]
    dim: Option<usize>,
    /// Context window on each side [default: 3].
    #[arg(long)]
    window: Option<usize>,
    /// Negatives per positive pair [default: 3].
    #[arg(long)]
    negatives: Option<usize>,
    /// Learning rate [default: 0.005].
    #[arg(long)]
    lr: Option<f64>,
    /// Positive pairs per minibatch [default: 256].
    #[arg(long)]
    batch_size: Option<usize>,
    /// Decoupled L2 decay [default: 1e-6].
    #[arg(long)]
    l2: Option<f64>,
    /// Epoch cap [default: 50].
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Epochs without accuracy gain before stopping [default: 3].
    #[arg(long)]
    patience: Option<usize>,
    /// Minimum accuracy gain that counts as improvement [default: 1e-6].
    #[arg(long)]
    min_delta: Option<f64>,
    /// rmsprop or sgd [default: rmsprop].
    #[arg(long, value_parser = parse_optimizer)]
    optimizer: Option<Optimizer>,
}

impl SgnsArgs {
    fn apply(&self, mut c: SgnsConfig) -> SgnsConfig {
        set(&mut c.dim, self.dim);
        set(&mut c.window, self.window);
        set(&mut c.negatives, self.negatives);
        set(&mut c.learning_rate, self.lr);
        set(&mut c.batch_size, self.batch_size);
        set(&mut c.l2, self.l2);
        set(&mut c.max_epochs, self.max_epochs);
        set(&mut c.early_stop_patience, self.patience);
        set(&mut c.early_stop_delta, self.min_delta);
        set(&mut c.optimizer, self.optimizer);
        c
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Interaction CSV: user_id,item_id,timestamp.
    #[arg(long)]
    data: PathBuf,
    /// Core filter threshold for users and items [default: 5].
    #[arg(long)]
    min_count: Option<usize>,
}

impl DataArgs {
    fn load(&self) -> Result<InteractionDataset> {
        load_interactions(&self.data, InteractionFormat::Csv, self.min_count.unwrap_or(DEFAULT_MIN_COUNT))
    }
}

#[derive(Debug, Args)]
struct PretrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    sgns: SgnsArgs,
    /// Output path for the binary embedding table.
    #[arg(long)]
    out: PathBuf,
    /// Also write a tab-separated text copy.
    #[arg(long)]
    text_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StabilityArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    sgns: SgnsArgs,
    /// Independent training runs [default: 10].
    #[arg(long, default_value_t = 10)]
    runs: usize,
}

#[derive(Debug, Args)]
struct EvalClfArgs {
    /// Embedding table (binary or text).
    #[arg(long)]
    emb: PathBuf,
    /// Label CSV: item_id,class_id.
    #[arg(long)]
    labels: PathBuf,
    /// Ignore labelled items missing from the table instead of failing.
    #[arg(long)]
    drop_unknown: bool,
    /// Bootstrap resamples for the risk-bound check; 0 skips it [default: 0].
    #[arg(long, default_value_t = 0)]
    bound_resamples: usize,
    /// Confidence parameter of the risk bound [default: 0.25].
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    /// Class treated as positive in the one-vs-rest bound check.
    #[arg(long)]
    positive_class: Option<String>,
}

#[derive(Debug, Args)]
struct EvalSeqArgs {
    #[arg(long)]
    emb: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Exposure mixing constant [default: 1/catalog size].
    #[arg(long)]
    alpha: Option<f64>,
    /// exposure-weighted, mean-history or last-item [default: exposure-weighted].
    #[arg(long, value_parser = parse_scorer)]
    scorer: Option<HistoryScorer>,
    /// Comma-separated alpha values to sweep in addition.
    #[arg(long, value_delimiter = ',')]
    alpha_sweep: Option<Vec<f64>>,
    /// Score the validation item instead of the test item.
    #[arg(long)]
    validation: bool,
    /// Keep already-seen items in the ranked catalog.
    #[arg(long)]
    keep_history: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Weight of pure exposure in the interaction mixture [default: 0.5].
    #[arg(long)]
    lambda: Option<f64>,
    /// Zipf exponent of the exposure distribution [default: 1.5].
    #[arg(long)]
    skew: Option<f64>,
    /// Catalog size [default: 500].
    #[arg(long)]
    catalog: Option<usize>,
    /// Embedding dimension [default: 16].
    #[arg(long)]
    dim: Option<usize>,
    /// Number of users [default: 2000].
    #[arg(long)]
    users: Option<usize>,
    /// History length per user [default: 20].
    #[arg(long)]
    history: Option<usize>,
    /// Write simulation.json, interactions.csv and items.bin here instead of
    /// printing the simulation to stdout.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RecoverArgs {
    /// Simulation JSON [default: stdin].
    #[arg(long)]
    input: Option<PathBuf>,
    /// Comma-separated alpha values [default: 0.0001,0.001,0.01,0.1,1].
    #[arg(long, value_delimiter = ',')]
    alpha_grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct StructureArgs {
    /// Label CSV; without it a balanced synthetic catalog is used.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Synthetic classes [default: 3].
    #[arg(long, default_value_t = 3)]
    classes: usize,
    /// Synthetic items per class [default: 100].
    #[arg(long, default_value_t = 100)]
    per_class: usize,
    /// Independent runs, at least 5 [default: 10].
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Controlled triplets per run [default: 3000].
    #[arg(long)]
    triplets: Option<usize>,
    /// Head step size [default: 0.1].
    #[arg(long)]
    head_lr: Option<f64>,
    /// Head iterations [default: 500].
    #[arg(long)]
    head_iterations: Option<usize>,
    #[command(flatten)]
    sgns: SgnsArgs,
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    /// Interaction CSV; without it a synthetic clustered corpus is generated.
    #[arg(long, requires = "labels")]
    data: Option<PathBuf>,
    /// Label CSV for --data.
    #[arg(long, requires = "data")]
    labels: Option<PathBuf>,
    /// Core filter threshold for --data [default: 5].
    #[arg(long)]
    min_count: Option<usize>,
    /// Synthetic corpus items [default: 2000].
    #[arg(long)]
    items: Option<usize>,
    /// Synthetic corpus users [default: 5000].
    #[arg(long)]
    users: Option<usize>,
    /// Synthetic corpus clusters [default: 40].
    #[arg(long)]
    clusters: Option<usize>,
    /// Window sizes of the variant grid [default: 2,3].
    #[arg(long, value_delimiter = ',')]
    windows: Option<Vec<usize>>,
    /// Negative counts of the variant grid [default: 2,3,4].
    #[arg(long = "negatives-grid", value_delimiter = ',')]
    negatives_grid: Option<Vec<usize>>,
    /// kernel:downstream metric pairs [default: alignment:kernel_clf_macro_f1,seq_mrr:last_item_mrr].
    #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
    pairs: Option<Vec<(String, String)>>,
    /// Write the scatter points behind each correlation as CSV.
    #[arg(long)]
    emit_plot_data: Option<PathBuf>,
    #[command(flatten)]
    sgns: SgnsArgs,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Reports to validate; later files win on metric name clashes.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn parse_optimizer(s: &str) -> std::result::Result<Optimizer, String> {
    match s {
        "rmsprop" => Ok(Optimizer::RmsProp),
        "sgd" => Ok(Optimizer::Sgd),
        _ => Err(format!("unknown optimizer `{s}`")),
    }
}

fn parse_scorer(s: &str) -> std::result::Result<HistoryScorer, String> {
    match s {
        "exposure-weighted" => Ok(HistoryScorer::ExposureWeighted),
        "mean-history" => Ok(HistoryScorer::MeanHistory),
        "last-item" => Ok(HistoryScorer::LastItem),
        _ => Err(format!("unknown scorer `{s}`")),
    }
}

fn parse_pair(p: &str) -> std::result::Result<(String, String), String> {
    p.split_once(':')
        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        .ok_or_else(|| format!("expected kernel:downstream, got `{p}`"))
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            1
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    seed: Option<u64>,
    report: Option<PathBuf>,
}

impl Ctx {
    fn sgns(&self, args: &SgnsArgs, base: SgnsConfig) -> Result<SgnsConfig> {
        let mut c = args.apply(self.cfg.sgns.clone().unwrap_or(base));
        set(&mut c.seed, self.seed);
        c.validate()?;
        Ok(c)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn emit(&self, report: &MetricReport) -> Result<()> {
        match &self.report {
            Some(p) => write_report(report, p),
            None => write_report_to(report, io::stdout().lock()),
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let threads = cli.threads.or(cfg.threads).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let ctx = Ctx {
        seed: cli.seed.or(cfg.seed),
        cfg,
        report: cli.report,
    };
    pool.install(|| dispatch(&ctx, cli.command))
}

fn dispatch(ctx: &Ctx, command: Command) -> Result<()> {
    match command {
        Command::Pretrain(a) => pretrain(ctx, a),
        Command::Stability(a) => stability(ctx, a),
        Command::EvalClf(a) => eval_clf(ctx, a),
        Command::EvalSeq(a) => eval_seq(ctx, a),
        Command::Simulate(a) => simulate_cmd(ctx, a),
        Command::Recover(a) => recover(ctx, a),
        Command::Structure(a) => structure(ctx, a),
        Command::Correlate(a) => correlate_cmd(ctx, a),
        Command::Report(a) => report(ctx, a),
    }
}

fn pretrain(ctx: &Ctx, a: PretrainArgs) -> Result<()> {
    let cfg = ctx.sgns(&a.sgns, SgnsConfig::default())?;
    let data = a.data.load()?;
    let outcome = sgns::train(&data, &cfg)?;
    outcome.table.save_binary(&a.out)?;
    if let Some(p) = &a.text_out {
        outcome.table.save_text(p)?;
    }
    let s = &outcome.summary;
    let mut r = MetricReport::for_command("pretrain")
        .metric("users", data.num_users() as f64)
        .metric("items", data.num_items() as f64)
        .metric("epochs", s.epochs as f64);
    if let (Some(&loss), Some(&acc)) = (s.losses.last(), s.accuracies.last()) {
        r = r.metric("final_loss", loss).metric("final_accuracy", acc);
    }
    r.training = Some(outcome.summary);
    ctx.emit(&r)
}

fn stability(ctx: &Ctx, a: StabilityArgs) -> Result<()> {
    let cfg = ctx.sgns(&a.sgns, SgnsConfig::default())?;
    let data = a.data.load()?;
    let study = sgns::stability_study(&data, &cfg, a.runs)?;
    let s = study.summary.clone();
    let mut r = MetricReport::for_command("stability")
        .metric("mean_coordinate_sd", s.mean_coordinate_sd)
        .metric("mean_kernel_sd", s.mean_kernel_sd)
        .metric("mean_kernel_rank_corr", s.mean_kernel_rank_corr)
        .metric("mean_coordinate_rank_corr", s.mean_coordinate_rank_corr);
    r.stability = Some(s);
    ctx.emit(&r)
}

fn eval_clf(ctx: &Ctx, a: EvalClfArgs) -> Result<()> {
    let table = EmbeddingTable::load(&a.emb)?;
    let mut labels = load_labels(&a.labels)?;
    if a.drop_unknown {
        labels = labels.restricted_to(&table)?;
    }
    let set = labels.join(&table)?;
    let score = alignment(&table, &set)?;

    let split = harness::split_80_10_10(set.len(), ctx.seed());
    let train = set.subset(&split.train);
    let test = set.subset(&split.test);
    let preds = kernel_classifier_predict_many(&table, &train, &test.indices)?;
    let f1 = f1_scores(&preds, &test.classes)?;

    let mut r = MetricReport::for_command("eval-clf")
        .metric("alignment", score.value)
        .metric("micro_f1", f1.micro_f1)
        .metric("macro_f1", f1.macro_f1);
    if a.bound_resamples > 0 {
        let positive = match &a.positive_class {
            Some(name) => Some(
                labels
                    .class_names()
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| Error::UnknownId(name.clone()))?,
            ),
            None => None,
        };
        let b = bound_check(&table, &set, a.delta, a.bound_resamples, ctx.seed(), positive)?;
        r = r.metric("bound_pass_fraction", b.pass_fraction);
        r.bound_check = Some(b);
    }
    r.alignment = Some(score);
    r.classifier = Some(f1);
    ctx.emit(&r)
}

fn eval_seq(ctx: &Ctx, a: EvalSeqArgs) -> Result<()> {
    let table = EmbeddingTable::load(&a.emb)?;
    let data = a.data.load()?;
    let alpha = a.alpha.or(ctx.cfg.exposure.as_ref().and_then(|e| e.alpha));
    let exp = exposure_for_table(&table, &data, alpha)?;
    let opts = EvalOptions {
        exclude_history: !a.keep_history,
        validation: a.validation,
    };
    let summary = evaluate_next_item(&table, &data, &exp, a.scorer.unwrap_or(HistoryScorer::ExposureWeighted), &opts)?;
    let mut r = MetricReport::for_command("eval-seq")
        .metric("hit_at_10", summary.hit_at_10)
        .metric("mrr", summary.mrr)
        .metric("ndcg", summary.ndcg);
    if let Some(grid) = &a.alpha_sweep {
        for s in alpha_sweep(&table, &data, &exp, grid, &opts)? {
            let tag = s.alpha.unwrap_or(f64::NAN);
            r = r.metric(&format!("mrr@alpha={tag}"), s.mrr).metric(&format!("ndcg@alpha={tag}"), s.ndcg);
        }
    }
    r.ranking = Some(summary);
    ctx.emit(&r)
}

fn sim_config(ctx: &Ctx, a: &SimulateArgs) -> Result<SimConfig> {
    let mut c = ctx.cfg.sim.clone().unwrap_or_default();
    set(&mut c.lambda, a.lambda);
    set(&mut c.exposure_skew, a.skew);
    set(&mut c.catalog_size, a.catalog);
    set(&mut c.dim, a.dim);
    set(&mut c.num_users, a.users);
    set(&mut c.history_len, a.history);
    set(&mut c.seed, ctx.seed);
    c.validate()?;
    Ok(c)
}

fn simulate_cmd(ctx: &Ctx, a: SimulateArgs) -> Result<()> {
    let cfg = sim_config(ctx, &a)?;
    let sim = simulate(&cfg)?;
    let r = MetricReport::for_command("simulate")
        .metric("users", cfg.num_users as f64)
        .metric("catalog_size", cfg.catalog_size as f64)
        .metric("interactions", (cfg.num_users * (cfg.history_len + 1)) as f64);
    match &a.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            write_json(&sim, File::create(dir.join("simulation.json"))?)?;
            write_interactions_csv(&sim.dataset()?, File::create(dir.join("interactions.csv"))?)?;
            sim.table()?.save_binary(dir.join("items.bin"))?;
            ctx.emit(&r)
        }
        None => {
            // stdout carries the simulation for piping; the report goes only
            // to an explicit --report path
            write_json(&sim, io::stdout().lock())?;
            match &ctx.report {
                Some(p) => write_report(&r, p),
                None => Ok(()),
            }
        }
    }
}

fn write_json<W: Write, T: serde::Serialize>(value: &T, out: W) -> Result<()> {
    let mut out = io::BufWriter::new(out);
    serde_json::to_writer(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn recover(ctx: &Ctx, a: RecoverArgs) -> Result<()> {
    let mut text = String::new();
    match &a.input {
        Some(p) => BufReader::new(File::open(p)?).read_to_string(&mut text)?,
        None => io::stdin().lock().read_to_string(&mut text)?,
    };
    let sim: Simulation = serde_json::from_str(&text)?;
    sim.config.validate()?;
    let grid = a.alpha_grid.unwrap_or_else(|| vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0]);
    let rec = recovery_experiment(&sim, &grid)?;
    let mut r = MetricReport::for_command("recover")
        .metric("unweighted_mrr", rec.unweighted.mean_mrr)
        .metric("unweighted_cosine", rec.unweighted.mean_cosine)
        .metric("mrr_gain", rec.mrr_gain)
        .metric("mrr_gain_se", rec.mrr_gain_se)
        .metric("cosine_gain", rec.cosine_gain)
        .metric("cosine_gain_se", rec.cosine_gain_se);
    r.recovery = Some(rec);
    ctx.emit(&r)
}

fn structure(ctx: &Ctx, a: StructureArgs) -> Result<()> {
    let labels = match &a.labels {
        Some(p) => load_labels(p)?,
        None => balanced_catalog(a.classes, a.per_class)?,
    };
    let defaults = StructureConfig::default();
    let mut head = ctx.cfg.head.clone().unwrap_or(defaults.head);
    set(&mut head.learning_rate, a.head_lr);
    set(&mut head.iterations, a.head_iterations);
    let cfg = StructureConfig {
        sgns: ctx.sgns(&a.sgns, defaults.sgns)?,
        triplets: a.triplets.unwrap_or(defaults.triplets),
        head,
    };
    let rep = structure_experiment(&labels, &cfg, a.runs)?;
    let mut r = MetricReport::for_command("structure")
        .metric("lr_mean_macro_f1", rep.lr.mean_macro_f1)
        .metric("lr_sd_macro_f1", rep.lr.sd_macro_f1)
        .metric("ip_mean_macro_f1", rep.ip.mean_macro_f1)
        .metric("ip_sd_macro_f1", rep.ip.sd_macro_f1);
    r.structure = Some(rep);
    ctx.emit(&r)
}

fn correlate_cmd(ctx: &Ctx, a: CorrelateArgs) -> Result<()> {
    let (data, labels): (InteractionDataset, LabelCatalog) = match (&a.data, &a.labels) {
        (Some(d), Some(l)) => (
            load_interactions(d, InteractionFormat::Csv, a.min_count.unwrap_or(DEFAULT_MIN_COUNT))?,
            load_labels(l)?,
        ),
        _ => {
            let mut c = ctx.cfg.corpus.clone().unwrap_or_default();
            set(&mut c.num_items, a.items);
            set(&mut c.num_users, a.users);
            set(&mut c.num_clusters, a.clusters);
            set(&mut c.seed, ctx.seed);
            clustered_corpus(&c)?
        }
    };
    // labels may mention items the core filter removed
    let known = labels
        .item_ids()
        .iter()
        .zip(labels.classes())
        .filter(|(id, _)| data.item_index(id).is_some())
        .map(|(id, &c)| (id.clone(), labels.class_names()[c].clone()));
    let labels = LabelCatalog::from_pairs(known)?;

    let base = ctx.sgns(&a.sgns, SgnsConfig::default())?;
    let windows = a.windows.unwrap_or_else(|| vec![2, 3]);
    let negatives = a.negatives_grid.unwrap_or_else(|| vec![2, 3, 4]);
    let variants = run_variant_grid(&data, &labels, &base, &windows, &negatives)?;
    let pairs = a.pairs.unwrap_or_else(|| {
        vec![
            (harness::metric::ALIGNMENT.into(), harness::metric::KERNEL_CLF_MACRO_F1.into()),
            (harness::metric::SEQ_MRR.into(), harness::metric::LAST_ITEM_MRR.into()),
        ]
    });
    let mut r = MetricReport::for_command("correlate");
    for v in &variants {
        for (k, &x) in &v.metrics {
            r = r.metric(&format!("{}.{k}", v.name), x);
        }
    }
    for (x, y) in &pairs {
        r.correlations.push(correlate(&variants, x, y)?);
    }
    if let Some(p) = &a.emit_plot_data {
        write_scatter_csv(&variants, &pairs, File::create(p)?)?;
    }
    ctx.emit(&r)
}

fn report(ctx: &Ctx, a: ReportArgs) -> Result<()> {
    let mut merged = MetricReport::for_command("report");
    for p in &a.inputs {
        let r = crate::report::read_report(p)?;
        merged.metrics.extend(r.metrics);
        merged.alignment = r.alignment.or(merged.alignment);
        merged.classifier = r.classifier.or(merged.classifier);
        merged.bound_check = r.bound_check.or(merged.bound_check);
        merged.ranking = r.ranking.or(merged.ranking);
        merged.recovery = r.recovery.or(merged.recovery);
        merged.structure = r.structure.or(merged.structure);
        merged.correlations.extend(r.correlations);
        merged.stability = r.stability.or(merged.stability);
        merged.training = r.training.or(merged.training);
    }
    ctx.emit(&merged)
}

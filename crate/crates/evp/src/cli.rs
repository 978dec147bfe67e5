//! Command-line harness: ingest | pretrain | evaluate | ablate | sweep-k |
//! synth.
//!
//! Every option can also come from a flat `key = value` config file passed
//! with `--config`; explicit flags win over the file, which wins over the
//! built-in defaults. All randomness derives from one `--seed` through named
//! sub-streams, so identical configurations produce identical outputs
//! (reports are byte-identical up to the wallclock field).
//!
//! Exit codes: 0 success, 1 input error, 2 runtime/training error.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::checkpoint::Checkpoint;
use crate::downstream::{
    run_protocol_cached, LinkLossMode, ProtocolConfig, TaskKind,
};
use crate::encoder::{EmbedCache, EncoderConfig, EncoderParams};
use crate::error::{Error, Result};
use crate::graph::{chronological_split, load_jodie_csv, NeighborIndex, PairIndex, TemporalGraph};
use crate::plot::write_line_plot;
use crate::plugin::{AdaptationMode, VariantFlags};
use crate::pretrain::{pretrain, PretrainConfig};
use crate::report::{write_loss_curve, write_summary_csv, Report};
use crate::synthetic::{generate, SynthConfig};
use crate::time_encoding::FrequencyScheme;

#[derive(Parser)]
#[command(
    name = "evp",
    about = "Event-aware prompt learning on continuous-time dynamic graphs",
    version
)]
struct Cli {
    /// Flat key = value config file; explicit flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Load a JODIE CSV and print dataset statistics.
    Ingest(IngestArgs),
    /// Generate a planted-pattern synthetic dataset in JODIE CSV format.
    Synth(SynthArgs),
    /// Pre-train the encoder on the first 80% of events.
    Pretrain(PretrainArgs),
    /// Tune the plug-in per task and evaluate AUC-ROC for one variant.
    Evaluate(EvaluateArgs),
    /// Evaluate the full model against its single-mechanism variants.
    Ablate(AblateArgs),
    /// Evaluate over a list of K values and plot the sensitivity curve.
    SweepK(SweepArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// JODIE CSV path.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for synthetic.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    items: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    period: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    feature_dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PretrainArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory for checkpoint.json and loss_curve.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep only the first N events of the dataset.
    #[arg(long)]
    max_events: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    neighbors: Option<usize>,
    /// Train the time-encoder frequencies as well.
    #[arg(long)]
    learnable_te: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    negatives: Option<usize>,
    /// literal | softmax
    #[arg(long)]
    loss_mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct EvalCommonArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep only the first N events of the dataset.
    #[arg(long)]
    max_events: Option<usize>,
    /// link-transductive | link-inductive | node
    #[arg(long)]
    kind: Option<String>,
    /// elementwise | conditional
    #[arg(long)]
    adapt: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    /// Prompt-tuning steps per task.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    tasks: Option<usize>,
    /// Comma-separated seed list, e.g. 0,1,2,3,4.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    support: Option<usize>,
    /// Cap on test positives per task (0 = unlimited).
    #[arg(long)]
    max_test: Option<usize>,
    /// Held-out validation events per task for tuning early-stopping.
    #[arg(long)]
    val_events: Option<usize>,
    /// Initial decay rate for tuning.
    #[arg(long)]
    lambda: Option<f64>,
    /// L2 pull toward the prompt initialization during tuning.
    #[arg(long)]
    init_reg: Option<f64>,
    /// literal | softmax
    #[arg(long)]
    loss_mode: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Root seed for task sampling and prompt initialization.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: EvalCommonArgs,
    /// full | ep | dp | td | none
    #[arg(long)]
    variant: Option<String>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    common: EvalCommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: EvalCommonArgs,
    /// Comma-separated K values, e.g. 1,3,5,7,9,11.
    #[arg(long)]
    k_list: Option<String>,
    /// full | ep | dp | td | none
    #[arg(long)]
    variant: Option<String>,
}

/// Flat `key = value` file; `#` starts a comment.
struct FileConfig(HashMap<String, String>);

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut map = HashMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| {
                Error::Config(format!("config file {}: {e}", p.display()))
            })?;
            for (no, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap().trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    Error::Config(format!(
                        "config file {} line {}: expected key = value",
                        p.display(),
                        no + 1
                    ))
                })?;
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Self(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::Config(format!("config key {key}: cannot parse {raw:?}"))
            }),
        }
    }
}

fn pick<T>(cli: Option<T>, file: Result<Option<T>>, default: T) -> Result<T> {
    Ok(cli.or(file?).unwrap_or(default))
}

fn pick_required<T>(cli: Option<T>, file: Result<Option<T>>, what: &str) -> Result<T> {
    cli.or(file?)
        .ok_or_else(|| Error::Config(format!("missing required option --{what}")))
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let seeds: Vec<u64> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("bad seed {p:?}")))
        })
        .collect::<Result<_>>()?;
    if seeds.is_empty() {
        return Err(Error::Config("seeds list is empty".into()));
    }
    Ok(seeds)
}

fn parse_k_list(s: &str) -> Result<Vec<usize>> {
    let ks: Vec<usize> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad K {p:?}")))
        })
        .collect::<Result<_>>()?;
    if ks.is_empty() {
        return Err(Error::Config("K list is empty".into()));
    }
    Ok(ks)
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

fn load_graph(data: &Path, max_events: usize) -> Result<TemporalGraph> {
    let g = load_jodie_csv(data)?;
    Ok(if max_events > 0 { g.head(max_events) } else { g })
}

/// Entry point used by the `evp` binary.
pub fn main_entry() -> ! {
    let code = run_cli(std::env::args_os());
    std::process::exit(code);
}

/// Parse and dispatch; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let file = match FileConfig::load(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let result = match cli.cmd {
        Cmd::Ingest(a) => cmd_ingest(a, &file),
        Cmd::Synth(a) => cmd_synth(a, &file),
        Cmd::Pretrain(a) => cmd_pretrain(a, &file),
        Cmd::Evaluate(a) => cmd_evaluate(a, &file),
        Cmd::Ablate(a) => cmd_ablate(a, &file),
        Cmd::SweepK(a) => cmd_sweep_k(a, &file),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn cmd_ingest(a: IngestArgs, file: &FileConfig) -> Result<()> {
    let data: PathBuf = pick_required(a.data, file.get("data"), "data")?;
    let g = load_jodie_csv(&data)?;
    let (lo, hi) = g.time_span();
    println!(
        "{} nodes, {} edges, {} classes, dim {}",
        g.num_nodes(),
        g.num_events(),
        g.label_classes().len(),
        g.feature_dim()
    );
    println!(
        "users {}, items {}, time span [{lo}, {hi}], mean gap {:.6}",
        g.num_users(),
        g.num_nodes() - g.num_users(),
        g.mean_inter_event_gap()
    );
    Ok(())
}

fn cmd_synth(a: SynthArgs, file: &FileConfig) -> Result<()> {
    let out: PathBuf = pick(a.out, file.get("out"), PathBuf::from("evp-out"))?;
    let defaults = SynthConfig::default();
    let cfg = SynthConfig {
        n_users: pick(a.users, file.get("users"), defaults.n_users)?,
        n_items: pick(a.items, file.get("items"), defaults.n_items)?,
        horizon: pick(a.horizon, file.get("horizon"), defaults.horizon)?,
        period: pick(a.period, file.get("period"), defaults.period)?,
        noise_rate: pick(a.noise, file.get("noise"), defaults.noise_rate)?,
        feature_dim: pick(a.feature_dim, file.get("feature-dim"), defaults.feature_dim)?,
        seed: pick(a.seed, file.get("seed"), defaults.seed)?,
    };
    let (g, _) = generate(&cfg)?;
    std::fs::create_dir_all(&out)?;
    let path = out.join("synthetic.csv");
    g.to_jodie_csv(&path)?;
    println!(
        "wrote {} ({} events, {} users, {} items, dim {})",
        path.display(),
        g.num_events(),
        g.num_users(),
        g.num_nodes() - g.num_users(),
        g.feature_dim()
    );
    Ok(())
}

fn cmd_pretrain(a: PretrainArgs, file: &FileConfig) -> Result<()> {
    let data: PathBuf = pick_required(a.data, file.get("data"), "data")?;
    let out: PathBuf = pick(a.out, file.get("out"), PathBuf::from("evp-out"))?;
    let g = load_graph(&data, pick(a.max_events, file.get("max-events"), 0)?)?;
    let idx = NeighborIndex::build(&g);
    let pairs = PairIndex::build(&g);
    let splits = chronological_split(&g, (0.80, 0.01, 0.01))?;

    let mut enc_cfg = EncoderConfig::new(
        pick(a.hidden, file.get("hidden"), 172)?,
        g.feature_dim(),
    )
    .with_graph_time(&g);
    enc_cfg.layers = pick(a.layers, file.get("layers"), enc_cfg.layers)?;
    enc_cfg.heads = pick(a.heads, file.get("heads"), enc_cfg.heads)?;
    enc_cfg.neighbor_budget = pick(a.neighbors, file.get("neighbors"), enc_cfg.neighbor_budget)?;
    enc_cfg.te_scheme = FrequencyScheme::Geometric;
    enc_cfg.te_learnable = a.learnable_te || file.get("learnable-te")?.unwrap_or(false);

    let seed = pick(a.seed, file.get("seed"), 0)?;
    let train_cfg = PretrainConfig {
        epochs: pick(a.epochs, file.get("epochs"), 3)?,
        batch_size: pick(a.batch, file.get("batch"), 64)?,
        lr: pick(a.lr, file.get("lr"), 1e-4)?,
        negatives_per_positive: pick(a.negatives, file.get("negatives"), 1)?,
        seed,
        tau: pick(a.tau, file.get("tau"), 0.2)?,
        loss_mode: LinkLossMode::parse(&pick(
            a.loss_mode,
            file.get("loss-mode"),
            "literal".into(),
        )?)?,
    };

    let init = EncoderParams::init(enc_cfg, seed)?;
    let started = Instant::now();
    let (params, curve) = pretrain(&g, &idx, &pairs, &splits, init, &train_cfg)?;
    let secs = started.elapsed().as_secs_f64();

    std::fs::create_dir_all(&out)?;
    let ckpt_path = out.join("checkpoint.json");
    Checkpoint::new(params, None).save(&ckpt_path)?;
    write_loss_curve(&out.join("loss_curve.csv"), &curve)?;

    match curve.last() {
        Some((e, l)) => println!(
            "pretrained {} events for {} epochs in {secs:.1}s (final loss {l:.6} at epoch {e}); wrote {}",
            splits.pretrain.len(),
            train_cfg.epochs,
            ckpt_path.display()
        ),
        None => println!("no training epochs requested; wrote initial {}", ckpt_path.display()),
    }
    Ok(())
}

struct EvalSetup {
    g: TemporalGraph,
    dataset: String,
    encoder: EncoderParams,
    base: ProtocolConfig,
    out: PathBuf,
}

fn prepare_eval(a: &EvalCommonArgs, file: &FileConfig) -> Result<EvalSetup> {
    let data: PathBuf = pick_required(a.data.clone(), file.get("data"), "data")?;
    let ckpt_path: PathBuf =
        pick_required(a.checkpoint.clone(), file.get("checkpoint"), "checkpoint")?;
    let out: PathBuf = pick(a.out.clone(), file.get("out"), PathBuf::from("evp-out"))?;
    let g = load_graph(&data, pick(a.max_events, file.get("max-events"), 0)?)?;
    let ckpt = Checkpoint::load(&ckpt_path)?;
    if ckpt.encoder.config.feature_dim != g.feature_dim() {
        return Err(Error::Config(format!(
            "checkpoint expects feature dim {}, dataset has {}",
            ckpt.encoder.config.feature_dim,
            g.feature_dim()
        )));
    }

    let kind = TaskKind::parse(&pick(
        a.kind.clone(),
        file.get("kind"),
        "link-transductive".into(),
    )?)?;
    let mut cfg = ProtocolConfig::new(kind, VariantFlags::full());
    cfg.mode = match pick(a.adapt.clone(), file.get("adapt"), "elementwise".into())?.as_str() {
        "elementwise" => AdaptationMode::Elementwise,
        "conditional" => AdaptationMode::Conditional,
        other => {
            return Err(Error::Config(format!(
                "unknown adaptation mode {other:?} (expected elementwise|conditional)"
            )))
        }
    };
    cfg.k = pick(a.k, file.get("k"), cfg.k)?;
    cfg.tau = pick(a.tau, file.get("tau"), cfg.tau)?;
    cfg.lr = pick(a.lr, file.get("lr"), cfg.lr)?;
    cfg.epochs = pick(a.epochs, file.get("epochs"), cfg.epochs)?;
    cfg.n_tasks = pick(a.tasks, file.get("tasks"), cfg.n_tasks)?;
    cfg.seeds = parse_seeds(&pick(
        a.seeds.clone(),
        file.get("seeds"),
        "0,1,2,3,4".into(),
    )?)?;
    cfg.support_size = pick(a.support, file.get("support"), cfg.support_size)?;
    cfg.val_size = pick(a.val_events, file.get("val-events"), cfg.val_size)?;
    cfg.initial_decay = pick(a.lambda, file.get("lambda"), cfg.initial_decay)?;
    cfg.init_reg = pick(a.init_reg, file.get("init-reg"), cfg.init_reg)?;
    cfg.max_test = pick(a.max_test, file.get("max-test"), cfg.max_test)?;
    cfg.loss_mode = LinkLossMode::parse(&pick(
        a.loss_mode.clone(),
        file.get("loss-mode"),
        "literal".into(),
    )?)?;
    cfg.workers = pick(a.workers, file.get("workers"), 1)?;
    cfg.root_seed = pick(a.seed, file.get("seed"), 0)?;

    Ok(EvalSetup {
        dataset: dataset_name(&data),
        g,
        encoder: ckpt.encoder,
        base: cfg,
        out,
    })
}

fn run_variant(
    setup: &EvalSetup,
    cfg: &ProtocolConfig,
    cache: &EmbedCache,
) -> Result<Report> {
    let idx = NeighborIndex::build(&setup.g);
    let pairs = PairIndex::build(&setup.g);
    let splits = chronological_split(&setup.g, (0.80, 0.01, 0.01))?;
    let started = Instant::now();
    let outcome =
        run_protocol_cached(&setup.g, &idx, &pairs, &splits, &setup.encoder, cfg, cache)?;
    Ok(Report::new(
        cfg,
        &setup.dataset,
        outcome,
        started.elapsed().as_secs_f64(),
    ))
}

fn cmd_evaluate(a: EvaluateArgs, file: &FileConfig) -> Result<()> {
    let setup = prepare_eval(&a.common, file)?;
    let mut cfg = setup.base.clone();
    cfg.flags = VariantFlags::parse(&pick(
        a.variant,
        file.get("variant"),
        "full".into(),
    )?)?;

    let cache = EmbedCache::new(setup.encoder.hidden_dim());
    let report = run_variant(&setup, &cfg, &cache)?;
    std::fs::create_dir_all(&setup.out)?;
    let stem = format!("report_{}_{}", cfg.kind.name(), cfg.flags.name());
    report.write_json(&setup.out.join(format!("{stem}.json")))?;
    report.write_csv(&setup.out.join(format!("{stem}.csv")))?;
    println!(
        "{} {} k={} -> AUC {:.4} ± {:.4} over {} runs ({:.1}s)",
        cfg.kind.name(),
        cfg.flags.name(),
        cfg.k,
        report.mean,
        report.std,
        report.per_task.len(),
        report.wallclock_secs
    );
    Ok(())
}

const ABLATION_VARIANTS: [VariantFlags; 5] = [
    VariantFlags { event_prompt: true, dynamic_prompt: true, time_decay: true },
    VariantFlags { event_prompt: true, dynamic_prompt: false, time_decay: false },
    VariantFlags { event_prompt: false, dynamic_prompt: true, time_decay: false },
    VariantFlags { event_prompt: false, dynamic_prompt: false, time_decay: true },
    VariantFlags { event_prompt: false, dynamic_prompt: false, time_decay: false },
];

fn cmd_ablate(a: AblateArgs, file: &FileConfig) -> Result<()> {
    let setup = prepare_eval(&a.common, file)?;
    let cache = EmbedCache::new(setup.encoder.hidden_dim());
    std::fs::create_dir_all(&setup.out)?;

    let mut rows = Vec::new();
    for flags in ABLATION_VARIANTS {
        let mut cfg = setup.base.clone();
        cfg.flags = flags;
        let report = run_variant(&setup, &cfg, &cache)?;
        println!(
            "{:>5}: AUC {:.4} ± {:.4} ({:.1}s)",
            flags.name(),
            report.mean,
            report.std,
            report.wallclock_secs
        );
        report.write_json(
            &setup
                .out
                .join(format!("report_{}_{}.json", cfg.kind.name(), flags.name())),
        )?;
        rows.push((flags.name().to_string(), report.mean, report.std));
    }
    let table = setup
        .out
        .join(format!("ablation_{}.csv", setup.base.kind.name()));
    write_summary_csv(&table, "variant", &rows)?;
    println!("wrote {}", table.display());
    Ok(())
}

fn cmd_sweep_k(a: SweepArgs, file: &FileConfig) -> Result<()> {
    let setup = prepare_eval(&a.common, file)?;
    let flags = VariantFlags::parse(&pick(
        a.variant,
        file.get("variant"),
        "full".into(),
    )?)?;
    let ks = parse_k_list(&pick(
        a.k_list,
        file.get("k-list"),
        "1,3,5,7,9,11".into(),
    )?)?;

    let cache = EmbedCache::new(setup.encoder.hidden_dim());
    std::fs::create_dir_all(&setup.out)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for k in ks {
        let mut cfg = setup.base.clone();
        cfg.flags = flags;
        cfg.k = k;
        let report = run_variant(&setup, &cfg, &cache)?;
        println!(
            "K={k}: AUC {:.4} ± {:.4} ({:.1}s)",
            report.mean, report.std, report.wallclock_secs
        );
        rows.push((k.to_string(), report.mean, report.std));
        points.push((k as f64, report.mean, report.std));
    }
    let stem = format!("sweep_k_{}", setup.base.kind.name());
    write_summary_csv(&setup.out.join(format!("{stem}.csv")), "K", &rows)?;
    write_line_plot(
        &setup.out.join(format!("{stem}.svg")),
        &format!("K sensitivity ({})", setup.base.kind.name()),
        "K",
        "AUC-ROC",
        &points,
    )?;
    println!("wrote {}/{stem}.csv and .svg", setup.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_and_k_lists_parse() {
        assert_eq!(parse_seeds("0,1,2").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds(" 7 ").unwrap(), vec![7]);
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("a,b").is_err());
        assert_eq!(parse_k_list("1,3,5").unwrap(), vec![1, 3, 5]);
    }

    #[test]
    fn file_config_parses_and_reports_bad_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.conf");
        std::fs::write(&p, "# comment\ntau = 0.5\nk=3\n\nworkers = 2 # inline\n").unwrap();
        let f = FileConfig::load(Some(&p)).unwrap();
        assert_eq!(f.get::<f64>("tau").unwrap(), Some(0.5));
        assert_eq!(f.get::<usize>("k").unwrap(), Some(3));
        assert_eq!(f.get::<usize>("workers").unwrap(), Some(2));
        assert_eq!(f.get::<usize>("absent").unwrap(), None);

        std::fs::write(&p, "tau 0.5\n").unwrap();
        assert!(FileConfig::load(Some(&p)).is_err());
    }

    #[test]
    fn cli_precedence_is_flag_over_file_over_default() {
        let file_val: Result<Option<usize>> = Ok(Some(5));
        assert_eq!(pick(Some(9), file_val, 1).unwrap(), 9);
        let file_val: Result<Option<usize>> = Ok(Some(5));
        assert_eq!(pick(None, file_val, 1).unwrap(), 5);
        let file_val: Result<Option<usize>> = Ok(None);
        assert_eq!(pick(None, file_val, 1).unwrap(), 1);
    }
}

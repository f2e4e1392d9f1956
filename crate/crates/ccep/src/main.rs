//! Command-line entry point: `train`, `prune`, `sweep`, and `report`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use ccep::config::RunConfig;
use ccep::coevolution;
use ccep::group_ea::SelectionStrategy;
use ccep::net::checkpoint;
use ccep::net::train::train_from_scratch;
use ccep::net::NetworkModel;
use ccep::report;

#[derive(Parser)]
#[command(name = "ccep", about = "Cooperative coevolutionary filter pruning", version)]
struct Cli {
    /// Worker threads for parallel group evolution (default: CCEP_WORKERS
    /// env var, then all cores). Results are identical for any value.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network from scratch and write a checkpoint.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run iterative pruning against a trained checkpoint.
    Prune {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a hyperparameter grid, several seeds each, and tabulate means.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render tables and curves from an archive directory.
    Report {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let workers = cli.workers.or_else(|| {
        std::env::var("CCEP_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("failed to configure worker pool")?;
    }
    match cli.command {
        Command::Train { config, out } => cmd_train(&config, &out),
        Command::Prune {
            config,
            checkpoint,
            out,
        } => cmd_prune(&config, &checkpoint, &out),
        Command::Sweep {
            config,
            grid,
            seeds,
            out,
        } => cmd_sweep(&config, &grid, seeds, &out),
        Command::Report { archive, out } => report::render_report(&archive, &out).map_err(Into::into),
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    RunConfig::load(path).with_context(|| format!("loading config {}", path.display()))
}

fn cmd_train(config_path: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config_path)?;
    let (train, test) = cfg.dataset.build()?;
    let spec = cfg.model.to_spec()?;
    let ft = cfg.train.finetune.resolve()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let net = train_from_scratch(&spec, &train, &ft, &mut rng)?;

    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    let ckpt_path = out.join("model.ckpt");
    checkpoint::save(&net, &ckpt_path)?;

    let (correct, total) = net.evaluate(&test)?;
    let metrics = serde_json::json!({
        "test_correct": correct,
        "test_total": total,
        "test_accuracy": correct as f64 / total as f64,
        "flops": net.flops(),
        "params": net.num_params(),
        "config_fingerprint": cfg.fingerprint(),
    });
    report::write_atomic(
        &out.join("train_metrics.json"),
        serde_json::to_string_pretty(&metrics)?.as_bytes(),
    )?;
    println!(
        "trained: accuracy {:.4} ({}/{}), flops {}, params {}, checkpoint {}",
        correct as f64 / total as f64,
        correct,
        total,
        net.flops(),
        net.num_params(),
        ckpt_path.display()
    );
    Ok(())
}

fn load_matching_checkpoint(cfg: &RunConfig, path: &Path) -> Result<NetworkModel> {
    let net = checkpoint::load(path)
        .with_context(|| format!("loading checkpoint {}", path.display()))?;
    let expected = cfg.model.to_spec()?;
    if *net.spec() != expected {
        bail!(
            "checkpoint {} does not match the architecture in the config",
            path.display()
        );
    }
    Ok(net)
}

fn cmd_prune(config_path: &Path, checkpoint_path: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config_path)?;
    let net = load_matching_checkpoint(&cfg, checkpoint_path)?;
    let (train, test) = cfg.dataset.build()?;
    let ccep_cfg = cfg.ccep.to_config()?;
    let output = coevolution::run(&net, &train, &test, &ccep_cfg)?;
    report::write_archive(out, &output, &cfg.fingerprint(), cfg.verbose)?;
    let base_acc =
        output.baseline_metrics.test_correct as f64 / output.baseline_metrics.test_total as f64;
    println!("baseline: accuracy {base_acc:.4}, flops {}", output.baseline_metrics.flops);
    for e in &output.archive {
        println!(
            "iteration {:>2}: accuracy {:.4}, flops {} (-{:.1}%)",
            e.iteration + 1,
            e.metrics.test_correct as f64 / e.metrics.test_total as f64,
            e.metrics.flops,
            100.0 * e.metrics.flops_reduction
        );
    }
    println!("archive written to {}", out.display());
    Ok(())
}

/// Grid file: each key lists the values to try; omitted keys keep the base
/// config's value. `pairs` couples the initial mutation rate p1 with the
/// prune-ratio bound.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepGrid {
    #[serde(default)]
    population: Vec<usize>,
    #[serde(default)]
    generations: Vec<usize>,
    #[serde(default)]
    pairs: Vec<(f64, f64)>,
    #[serde(default)]
    selection: Vec<SelectionStrategy>,
}

#[derive(Debug, Clone, Copy)]
struct SweepPoint {
    population: usize,
    generations: usize,
    p1: f64,
    ratio_bound: f64,
    selection: SelectionStrategy,
}

fn expand_grid(grid: &SweepGrid, base: &RunConfig) -> Vec<SweepPoint> {
    let g = &base.ccep.group;
    let populations = if grid.population.is_empty() { vec![g.population] } else { grid.population.clone() };
    let generations = if grid.generations.is_empty() { vec![g.generations] } else { grid.generations.clone() };
    let pairs = if grid.pairs.is_empty() { vec![(g.p1, g.ratio_bound)] } else { grid.pairs.clone() };
    let selections = if grid.selection.is_empty() { vec![g.selection] } else { grid.selection.clone() };

    let mut points = Vec::new();
    for &population in &populations {
        for &generations in &generations {
            for &(p1, ratio_bound) in &pairs {
                for &selection in &selections {
                    points.push(SweepPoint { population, generations, p1, ratio_bound, selection });
                }
            }
        }
    }
    points
}

fn selection_name(s: SelectionStrategy) -> &'static str {
    match s {
        SelectionStrategy::SelA => "sel_a",
        SelectionStrategy::SelB => "sel_b",
    }
}

fn cmd_sweep(config_path: &Path, grid_path: &Path, seeds: u64, out: &Path) -> Result<()> {
    if seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let base = load_config(config_path)?;
    let grid_text = std::fs::read_to_string(grid_path)
        .with_context(|| format!("reading grid {}", grid_path.display()))?;
    let grid: SweepGrid = toml::from_str(&grid_text)
        .with_context(|| format!("parsing grid {}", grid_path.display()))?;
    let points = expand_grid(&grid, &base);

    // One shared baseline: the sweep varies the pruning hyperparameters,
    // not the trained network.
    let (train, test) = base.dataset.build()?;
    let spec = base.model.to_spec()?;
    let ft = base.train.finetune.resolve()?;
    let mut rng = ChaCha8Rng::seed_from_u64(base.train.seed);
    let net = train_from_scratch(&spec, &train, &ft, &mut rng)?;

    let iterations = base.ccep.iterations;
    let mut csv = String::from(
        "population,generations,p1,ratio_bound,selection,iteration,mean_accuracy_drop,mean_flops_reduction\n",
    );
    for point in &points {
        // per-iteration sums across seeds; early-terminated runs carry
        // their final entry forward so every seed contributes T rows
        let mut drop_sum = vec![0.0f64; iterations];
        let mut red_sum = vec![0.0f64; iterations];
        for seed_index in 0..seeds {
            let mut cfg = base.ccep.to_config()?;
            cfg.group.population = point.population;
            cfg.group.generations = point.generations;
            cfg.group.p1 = point.p1;
            cfg.group.ratio_bound = point.ratio_bound;
            cfg.group.selection = point.selection;
            cfg.global_seed = base.ccep.global_seed.wrapping_add(seed_index);
            let output = coevolution::run(&net, &train, &test, &cfg)?;
            let base_acc = output.baseline_metrics.test_correct as f64
                / output.baseline_metrics.test_total as f64;
            let mut last_drop = 0.0;
            let mut last_red = 0.0;
            for t in 0..iterations {
                if let Some(e) = output.archive.get(t) {
                    let acc = e.metrics.test_correct as f64 / e.metrics.test_total as f64;
                    last_drop = base_acc - acc;
                    last_red = e.metrics.flops_reduction;
                }
                drop_sum[t] += last_drop;
                red_sum[t] += last_red;
            }
        }
        for t in 0..iterations {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{:.6},{:.6}\n",
                point.population,
                point.generations,
                point.p1,
                point.ratio_bound,
                selection_name(point.selection),
                t + 1,
                drop_sum[t] / seeds as f64,
                red_sum[t] / seeds as f64
            ));
        }
        println!(
            "swept m={} G={} p1={} r={} {}: final mean drop {:.4}, mean reduction {:.4}",
            point.population,
            point.generations,
            point.p1,
            point.ratio_bound,
            selection_name(point.selection),
            drop_sum[iterations - 1] / seeds as f64,
            red_sum[iterations - 1] / seeds as f64
        );
    }
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    report::write_atomic(&out.join("sweep.csv"), csv.as_bytes())?;
    println!("sweep table written to {}", out.join("sweep.csv").display());
    Ok(())
}

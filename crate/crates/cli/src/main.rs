use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dren::bench::{compare_strategies, memory_model, report_csv, LayerGeometry};
use dren::data::{
    read_idx_dataset, rotate_dataset_arbitrary, rotate_dataset_exact, split, split_files, synth_glyphs, write_idx_dataset,
    Dataset,
};
use dren::network::{evaluate, predict_labels, presets, train, EpochRecord, Model, Strategy};
use dren_cli::checkpoint;
use dren_cli::config::{Precision, RunConfig};
use dren_cli::error::{io, CliError, Result};
use dren_cli::sweep::{parse_depths, sweep_spec};
use dren_cli::verify::{run_suite, Suite};

#[derive(Parser)]
#[command(name = "dren", version, about = "Rotation-equivariant CNN toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenMode {
    Exact,
    Arbitrary,
    Synth,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchModel {
    Z2cnnShape,
    NinShape,
}

#[derive(Subcommand)]
enum Command {
    /// Write train/val/test IDX files.
    GenData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: GenMode,
        /// Total images; split 4:1:4 into train, val and test.
        #[arg(long, default_value_t = 4500)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        size: usize,
        /// Directory holding `all-images.idx`/`all-labels.idx` to rotate
        /// instead of generated glyphs.
        #[arg(long)]
        source: Option<PathBuf>,
    },
    /// Train a model described by a run file.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Override a run-file setting, e.g. `--set epochs=3`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Report the error of a checkpoint on the test split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Rotate every input by k quarter turns first.
        #[arg(long, default_value_t = 0)]
        rotate: i32,
        #[arg(long, default_value = "test")]
        split: String,
        /// Write one predicted label per line.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Run the randomised property suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Time both forward strategies.
    Bench {
        #[arg(long, value_enum, default_value = "z2cnn-shape")]
        model: BenchModel,
        #[arg(long, default_value_t = 64)]
        batch: usize,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print memory costs of one convolution under both strategies.
    Analyze {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        cin: u64,
        #[arg(long)]
        cout: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        w: u64,
        #[arg(long)]
        h: u64,
    },
    /// Train seven-layer stacks with 1..7 tied layers.
    Sweep {
        #[arg(long, default_value = "1..7")]
        depths: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (CliError::Usage(_) | CliError::Config { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::GenData { out, mode, n, seed, size, source } => gen_data(&out, mode, n, seed, size, source.as_deref()),
        Command::Train { config, out, metrics, overrides } => cmd_train(&config, &out, metrics.as_deref(), &overrides),
        Command::Eval { checkpoint, data, rotate, split, predictions } => {
            cmd_eval(&checkpoint, &data, rotate, &split, predictions.as_deref())
        }
        Command::Verify { suite, trials, seed } => {
            let suite: Suite = suite.parse()?;
            let results = run_suite(suite, trials, seed)?;
            for r in &results {
                println!("{r}");
            }
            Ok(results.iter().all(|r| r.pass))
        }
        Command::Bench { model, batch, trials, seed, out } => cmd_bench(model, batch, trials, seed, out.as_deref()),
        Command::Analyze { n, cin, cout, k, w, h } => {
            let g = LayerGeometry::new(n, cin, cout, k, w, h);
            println!("strategy,filters,feature_map,feature_map_gpu");
            for s in [Strategy::RotateFilters, Strategy::RotateFeatureMaps] {
                let c = memory_model(g, s);
                println!("{},{},{},{}", s.name(), c.filters_cost, c.feature_map_cost, c.feature_map_gpu_cost);
            }
            Ok(true)
        }
        Command::Sweep { depths, config, out } => cmd_sweep(&depths, &config, out.as_deref()),
    }
}

fn gen_data(out: &Path, mode: GenMode, n: usize, seed: u64, size: usize, source: Option<&Path>) -> Result<bool> {
    let base = match source {
        Some(dir) => {
            let (i, l) = split_files(dir, "all");
            read_idx_dataset(&i, &l)?
        }
        None => synth_glyphs(n, size, seed),
    };
    let n = n.min(base.len());
    let all = match mode {
        GenMode::Synth => base,
        GenMode::Exact => rotate_dataset_exact(&base, seed.wrapping_add(1)),
        GenMode::Arbitrary => rotate_dataset_arbitrary(&base, seed.wrapping_add(1)),
    };
    let (n_train, n_val) = (n * 4 / 9, n / 9);
    let (tr, va, te) = split(&all, n_train, n_val, n - n_train - n_val, seed.wrapping_add(2))?;
    fs::create_dir_all(out).map_err(io(out))?;
    for (name, ds) in [("train", &tr), ("val", &va), ("test", &te)] {
        let (i, l) = split_files(out, name);
        write_idx_dataset(ds, &i, &l)?;
        println!("{name}: {} images -> {}", ds.len(), i.display());
    }
    Ok(true)
}

fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    let mut cfg = RunConfig::parse(&text)?;
    for o in overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| CliError::Usage(format!("override `{o}` is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim()).map_err(|m| CliError::Usage(format!("override `{o}`: {m}")))?;
    }
    Ok(cfg)
}

fn load_split(dir: &Path, name: &str) -> Result<Dataset> {
    let (i, l) = split_files(dir, name);
    Ok(read_idx_dataset(&i, &l)?)
}

fn train_any(cfg: &RunConfig, spec: dren::network::ModelSpec, tr: &Dataset, va: &Dataset) -> Result<(Model<f32>, Vec<EpochRecord>)> {
    let tc = cfg.train_config();
    Ok(match cfg.precision {
        Precision::Single => {
            let mut m = Model::<f32>::build(spec, cfg.seed)?;
            let h = train(&mut m, tr, va, &tc)?;
            (m, h)
        }
        Precision::Double => {
            let mut m = Model::<f64>::build(spec, cfg.seed)?;
            let h = train(&mut m, tr, va, &tc)?;
            (m.cast(), h)
        }
    })
}

fn cmd_train(config: &Path, out: &Path, metrics: Option<&Path>, overrides: &[String]) -> Result<bool> {
    let cfg = load_config(config, overrides)?;
    println!("# effective config\n{cfg}");
    let data = cfg.data.clone().ok_or_else(|| CliError::Usage("config has no `data` directory".into()))?;
    let tr = load_split(&data, "train")?;
    let va = load_split(&data, "val")?;
    let spec = cfg.model_spec(tr.image_shape());
    let (model, history) = train_any(&cfg, spec, &tr, &va)?;
    for w in model.warnings() {
        eprintln!("warning: {w}");
    }
    let lines: String = history.iter().map(|r| format!("{},{},{}\n", r.epoch, r.train_loss, r.val_error)).collect();
    print!("{lines}");
    if let Some(path) = metrics {
        fs::write(path, &lines).map_err(io(path))?;
    }
    checkpoint::save(&model, out)?;
    println!("parameters: {}", model.param_count());
    Ok(true)
}

fn cmd_eval(ckpt: &Path, data: &Path, rotate: i32, split_name: &str, predictions: Option<&Path>) -> Result<bool> {
    if !(0..4).contains(&rotate) {
        return Err(CliError::Usage(format!("--rotate must be 0..3, got {rotate}")));
    }
    let model = checkpoint::load(ckpt)?;
    let ds = load_split(data, split_name)?.rotated(rotate);
    let pred = predict_labels(&model, &ds.images, 64)?;
    let err = evaluate(&model, &ds, 64)?;
    if let Some(path) = predictions {
        let text: String = pred.iter().map(|p| format!("{p}\n")).collect();
        fs::write(path, text).map_err(io(path))?;
    }
    println!("{split_name} error (rotate {rotate}): {err:.6}");
    Ok(true)
}

const REFERENCE: [(&str, f64, f64); 4] = [
    ("mnist-z2cnn", 1.97, 4.15),
    ("mnist-dren", 1.44, 3.74),
    ("cifar-nin", 11.00, 22.13),
    ("cifar-dren", 9.52, 18.73),
];

fn cmd_bench(model: BenchModel, batch: usize, trials: usize, seed: u64, out: Option<&Path>) -> Result<bool> {
    let (name, spec) = match model {
        BenchModel::Z2cnnShape => ("z2cnn-shape", presets::z2cnn_dren_meanpool(10, 10)),
        BenchModel::NinShape => ("nin-shape", presets::nin_dren(10)),
    };
    let reports = compare_strategies(name, &spec, batch, trials, seed)?;
    let csv = report_csv(&reports);
    print!("{csv}");
    if let Some(path) = out {
        fs::write(path, &csv).map_err(io(path))?;
    }
    println!("measured slowdown of rotating feature maps: {:.2}x", reports[1].ratio);
    println!("reference GPU timings (seconds, rotate filters vs rotate feature maps):");
    for (n, a, b) in REFERENCE {
        println!("  {n}: {a:.2} vs {b:.2} ({:.2}x)", b / a);
    }
    Ok(true)
}

fn cmd_sweep(depths: &str, config: &Path, out: Option<&Path>) -> Result<bool> {
    let depths = parse_depths(depths).ok_or_else(|| CliError::Usage(format!("bad depth range `{depths}`")))?;
    let cfg = load_config(config, &[])?;
    let data = cfg.data.clone().ok_or_else(|| CliError::Usage("config has no `data` directory".into()))?;
    let tr = load_split(&data, "train")?;
    let va = load_split(&data, "val")?;
    let mut csv = String::from("depth,params,val_error\n");
    print!("{csv}");
    for d in depths {
        let spec = sweep_spec(d, tr.image_shape(), cfg.groups, cfg.classes);
        let (model, _) = train_any(&cfg, spec, &tr, &va)?;
        let line = format!("{d},{},{:.6}\n", model.param_count(), evaluate(&model, &va, 64)?);
        print!("{line}");
        csv.push_str(&line);
    }
    if let Some(path) = out {
        fs::write(path, &csv).map_err(io(path))?;
    }
    Ok(true)
}

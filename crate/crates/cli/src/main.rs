//! `zonecsi` — command-line driver for the zone-specific CSI feedback
//! simulation suite.
//!
//! Subcommands cover the pipeline stage by stage (`generate`, `ingest`,
//! `partition`, `train`, `evaluate`, `mobility`) plus one-shot
//! orchestration (`report`), numerical self-checks (`gradcheck`), and
//! complexity accounting (`count`).
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 numeric failure.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;

use zonecsi::autoenc::{
    count_multiplications, count_parameters, gradient_check, init_model, Activation, LayerSpec,
    Mode,
};
use zonecsi::config::ExperimentConfig;
use zonecsi::error::{Error, Result};
use zonecsi::eval::{cdf_csv_rows, evaluate, Routing};
use zonecsi::experiment::{
    prepare_samples, run_experiment, split_samples, synthesize_dataset, train_zone_models,
};
use zonecsi::io::dataset::{read_dataset, write_dataset};
use zonecsi::io::interchange::read_interchange_csv;
use zonecsi::io::model::{load_model, save_model, ModelBundle};
use zonecsi::mobility::{compute_overhead, count_zone_switches, simulate_trajectory, CachePolicy};
use zonecsi::rng;
use zonecsi::scene::ChannelSample;
use zonecsi::transform::Normalizer;
use zonecsi::zoning::{classify_position, learn_partition, ZonePartition};

#[derive(Parser)]
#[command(
    name = "zonecsi",
    version,
    about = "Zone-specific CSI feedback simulation suite",
    propagate_version = true
)]
struct Cli {
    /// Experiment configuration file (TOML). Defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; deterministically re-derives every stage seed.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    /// Artifact directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the channel dataset and write `dataset.zcd1`.
    Generate,
    /// Convert an interchange CSV into `dataset.zcd1`.
    Ingest(IngestArgs),
    /// Learn zone partitions from the training split and export centroids.
    Partition,
    /// Train per-zone models and write one `bundle_zones-<B>.zcm1` per zone count.
    Train,
    /// Evaluate trained bundles on the test split and write `cdf.csv`.
    Evaluate,
    /// Simulate a user walk, export trajectories, and print transfer overhead.
    Mobility,
    /// Run the full pipeline and write the method comparison report.
    Report,
    /// Compare analytic gradients against finite differences.
    Gradcheck(GradcheckArgs),
    /// Print parameter and multiplication accounting per zone count.
    Count,
}

#[derive(Args)]
struct IngestArgs {
    /// Interchange CSV: one row per sample, `x,y,z` then channel floats.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Input dimension of the probe architecture.
    #[arg(long, default_value_t = 64)]
    input_dim: usize,
    /// Codeword length of the probe architecture.
    #[arg(long, default_value_t = 8)]
    latent: usize,
    /// Hidden width factor of the probe architecture.
    #[arg(long, default_value_t = 4)]
    beta: usize,
    /// Activation: `tanh` or `linear`.
    #[arg(long, default_value = "tanh")]
    activation: String,
    /// Batch size of the probe input.
    #[arg(long, default_value_t = 4)]
    batch: usize,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    /// Largest tolerated relative error.
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config(format!("cannot size the thread pool: {e}")))?;
    }

    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(master) = cli.seed {
        config.override_master_seed(master);
    }
    config.validate()?;

    match &cli.command {
        Command::Generate => cmd_generate(&config, &cli.out),
        Command::Ingest(args) => cmd_ingest(&config, &cli.out, args),
        Command::Partition => cmd_partition(&config, &cli.out),
        Command::Train => cmd_train(&config, &cli.out),
        Command::Evaluate => cmd_evaluate(&config, &cli.out),
        Command::Mobility => cmd_mobility(&config, &cli.out),
        Command::Report => cmd_report(&config, &cli.out),
        Command::Gradcheck(args) => cmd_gradcheck(cli.seed.unwrap_or(7), args),
        Command::Count => cmd_count(&config),
    }
}

fn dataset_path(out: &std::path::Path) -> PathBuf {
    out.join("dataset.zcd1")
}

fn bundle_path(out: &std::path::Path, b: usize) -> PathBuf {
    out.join(format!("bundle_zones-{b}.zcm1"))
}

fn load_dataset_or_hint(out: &std::path::Path) -> Result<Vec<ChannelSample>> {
    let path = dataset_path(out);
    if !path.exists() {
        return Err(Error::data(format!(
            "no dataset at {}; run `zonecsi generate` or `zonecsi ingest` first",
            path.display()
        )));
    }
    read_dataset(&path)
}

/// Train split of the on-disk dataset, reproducing the pipeline split.
fn load_splits(
    config: &ExperimentConfig,
    out: &std::path::Path,
) -> Result<(Vec<ChannelSample>, Vec<ChannelSample>)> {
    let samples = load_dataset_or_hint(out)?;
    let train_count = config.split_train_count(samples.len())?;
    split_samples(samples, train_count, config.train.seed)
}

fn group_digits(value: u64) -> String {
    let digits = value.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn cmd_generate(config: &ExperimentConfig, out: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let samples = synthesize_dataset(config)?;
    let path = dataset_path(out);
    write_dataset(&path, &samples)?;
    let (n_t, k) = samples[0].channel.dim();
    println!(
        "wrote {} samples (N_t={n_t}, K={k}) to {}",
        samples.len(),
        path.display()
    );
    Ok(())
}

fn cmd_ingest(config: &ExperimentConfig, out: &std::path::Path, args: &IngestArgs) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let samples = read_interchange_csv(&args.input, config.n_t(), config.scene.subcarriers)?;
    let path = dataset_path(out);
    write_dataset(&path, &samples)?;
    println!(
        "ingested {} samples from {} into {}",
        samples.len(),
        args.input.display(),
        path.display()
    );
    Ok(())
}

fn cmd_partition(config: &ExperimentConfig, out: &std::path::Path) -> Result<()> {
    let (train_raw, _) = load_splits(config, out)?;
    let positions: Vec<[f64; 3]> = train_raw.iter().map(|s| s.position).collect();
    for &b in &config.zones.b {
        let partition = learn_partition(
            &positions,
            b,
            rng::derive_seed(config.zones.seed, b as u64),
        )?;
        let mut counts = vec![0usize; b];
        for &p in &positions {
            counts[classify_position(&partition, p).0] += 1;
        }
        let mut csv = String::from("zone,x,y,train_samples\n");
        for (i, c) in partition.centroids().iter().enumerate() {
            writeln!(csv, "{},{},{},{}", i + 1, c[0], c[1], counts[i]).expect("csv");
        }
        let path = out.join(format!("partition_zones-{b}.csv"));
        std::fs::write(&path, csv)?;
        println!("learned {b} zones from {} positions -> {}", positions.len(), path.display());
    }
    Ok(())
}

fn cmd_train(config: &ExperimentConfig, out: &std::path::Path) -> Result<()> {
    let (train_raw, _) = load_splits(config, out)?;
    let (n_t, _) = train_raw[0].channel.dim();
    let train_set = prepare_samples(&train_raw, config.transform.n_c)?;
    let positions: Vec<[f64; 3]> = train_set.iter().map(|s| s.position).collect();
    let normalizer = Normalizer::fit(train_set.iter().map(|s| &s.target))?;
    let spec = config.layer_spec()?;

    for &b in &config.zones.b {
        let partition = learn_partition(
            &positions,
            b,
            rng::derive_seed(config.zones.seed, b as u64),
        )?;
        let trained = train_zone_models(
            &train_set,
            &partition,
            &normalizer,
            &spec,
            &config.train_config()?,
        )?;
        let losses: Vec<f64> = trained
            .iter()
            .map(|(_, l)| *l.last().expect("at least one epoch"))
            .collect();
        let models = trained.into_iter().map(|(m, _)| m).collect();
        let bundle = ModelBundle::new(
            n_t,
            config.transform.n_c,
            spec,
            partition,
            normalizer,
            models,
        )?;
        let path = bundle_path(out, b);
        save_model(&path, &bundle)?;
        let rendered: Vec<String> = losses.iter().map(|l| format!("{l:.3e}")).collect();
        println!(
            "trained {b} zone model(s) -> {} (final losses: {})",
            path.display(),
            rendered.join(", ")
        );
    }
    Ok(())
}

fn cmd_evaluate(config: &ExperimentConfig, out: &std::path::Path) -> Result<()> {
    let (_, test_raw) = load_splits(config, out)?;
    let test_set = prepare_samples(&test_raw, config.transform.n_c)?;

    let mut cdf_text = String::from("method,nmse_db,cdf\n");
    for &b in &config.zones.b {
        let path = bundle_path(out, b);
        if !path.exists() {
            return Err(Error::data(format!(
                "no bundle at {}; run `zonecsi train` first",
                path.display()
            )));
        }
        let bundle = load_model(&path)?;
        let routable: Vec<_> = bundle.models.iter().cloned().map(Some).collect();
        for routing in [Routing::Position, Routing::Oracle] {
            let report = evaluate(
                &routable,
                &bundle.partition,
                &bundle.normalizer,
                &test_set,
                routing,
            )?;
            let method = match routing {
                Routing::Position => format!("zones-{b}"),
                Routing::Oracle => format!("zones-{b}-oracle"),
            };
            println!(
                "{method}: mean NMSE {:.2} dB over {} samples (mean of per-sample dB {:.2})",
                report.mean_db,
                test_set.len(),
                report.mean_of_sample_db
            );
            cdf_text.push_str(&cdf_csv_rows(&method, &report.cdf()?));
        }
    }
    let path = out.join("cdf.csv");
    std::fs::write(&path, cdf_text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_mobility(config: &ExperimentConfig, out: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let trajectory = simulate_trajectory(&config.mobility_config())?;
    let spec = config.layer_spec()?;
    let encoder_params = count_parameters(&spec).encoder;

    for &b in &config.zones.b {
        // Prefer the deployed bundle's partition; otherwise learn one
        // from the dataset's training split.
        let partition: ZonePartition = if bundle_path(out, b).exists() {
            load_model(&bundle_path(out, b))?.partition
        } else {
            let (train_raw, _) = load_splits(config, out)?;
            let positions: Vec<[f64; 3]> = train_raw.iter().map(|s| s.position).collect();
            learn_partition(&positions, b, rng::derive_seed(config.zones.seed, b as u64))?
        };

        let stats = count_zone_switches(&trajectory, &partition)?;
        let mut csv = String::from("time,x,y,zone\n");
        for (sample, zone) in trajectory.samples.iter().zip(&stats.zone_sequence) {
            writeln!(
                csv,
                "{},{},{},{}",
                sample.time,
                sample.position[0],
                sample.position[1],
                zone.label()
            )
            .expect("csv");
        }
        let path = out.join(format!("trajectory_zones-{b}.csv"));
        std::fs::write(&path, csv)?;

        println!(
            "zones-{b}: {} switches over {:.0} s (switch rate {:.6}/s) -> {}",
            stats.num_switches,
            stats.horizon,
            stats.switch_rate(),
            path.display()
        );
        let mut policies = vec![CachePolicy::DownloadAllOnce, CachePolicy::per_switch()];
        if !policies.contains(&config.cache_policy(b)) {
            policies.push(config.cache_policy(b));
        }
        for policy in policies {
            let o = compute_overhead(
                encoder_params,
                b,
                &stats,
                policy,
                config.mobility.horizon_s,
            )?;
            println!(
                "  {:<18} downloads {:>6}  MPTR {:>12.2} param/s  MPUR {:.6}/s",
                o.policy.name(),
                o.downloads,
                o.mptr,
                o.mpur
            );
        }
    }
    Ok(())
}

fn cmd_report(config: &ExperimentConfig, out: &std::path::Path) -> Result<()> {
    let summary = run_experiment(config, out)?;
    println!(
        "dataset: {} train / {} test samples (N_t={}, K={}, N_c={})",
        summary.train_count, summary.test_count, summary.n_t, summary.subcarriers, summary.n_c
    );
    print!("{}", summary.report.to_table());
    for m in &summary.methods {
        println!(
            "{}: oracle mean NMSE {:.2} dB, position {:.2} dB, rerouted {}",
            m.name, m.oracle.mean_db, m.position.mean_db, m.position.rerouted
        );
    }
    println!(
        "artifacts: {}, {}, {}, {}",
        summary.dataset_path.display(),
        summary.report_path.display(),
        summary.cdf_path.display(),
        summary.manifest_path.display()
    );
    Ok(())
}

fn cmd_gradcheck(seed: u64, args: &GradcheckArgs) -> Result<()> {
    let activation: Activation = args.activation.parse()?;
    let spec = LayerSpec::new(args.input_dim, args.latent, args.beta, activation)?;
    if args.batch < 2 {
        return Err(Error::config("gradcheck batch must be at least 2"));
    }
    if !(args.step.is_finite() && args.step > 0.0) {
        return Err(Error::config("gradcheck step must be positive"));
    }
    let model = init_model(&spec, rng::derive_seed(seed, 0x96ad))?;
    let mut r = rng::substream(seed, 0xba7c);
    let x = Array2::from_shape_fn((args.batch, spec.input_dim), |_| rng::standard_normal(&mut r));

    let mut failed = false;
    for mode in [Mode::Train, Mode::Infer] {
        let (worst, count) = gradient_check(&model, &x, mode, args.step)?;
        let verdict = if worst < args.tolerance { "ok" } else { "FAIL" };
        println!(
            "{:?} mode: worst relative error {worst:.3e} over {count} parameters [{verdict}]",
            mode
        );
        failed |= worst >= args.tolerance;
    }
    if failed {
        return Err(Error::numeric(format!(
            "gradient check exceeded tolerance {:.1e}",
            args.tolerance
        )));
    }
    Ok(())
}

fn cmd_count(config: &ExperimentConfig) -> Result<()> {
    let spec = config.layer_spec()?;
    let counts = count_parameters(&spec);
    let mults = count_multiplications(&spec);
    println!(
        "architecture: input {} -> hidden {} -> codeword {} ({}), compression 1/{}",
        spec.input_dim,
        spec.hidden_dim(),
        spec.latent_dim,
        spec.activation.name(),
        spec.input_dim / spec.latent_dim
    );
    println!(
        "per-zone parameters: encoder {}, decoder {}, total {}",
        group_digits(counts.encoder),
        group_digits(counts.decoder),
        group_digits(counts.total())
    );
    println!(
        "per-feedback multiplications (one encoder pass): {}",
        group_digits(mults.encoder)
    );
    println!("zones  stored encoder params  stored total params");
    for &b in &config.zones.b {
        println!(
            "{:<6} {:>21} {:>20}",
            b,
            group_digits(counts.encoder * b as u64),
            group_digits(counts.total() * b as u64)
        );
    }
    Ok(())
}

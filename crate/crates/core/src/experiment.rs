//! End-to-end experiment driver.
//!
//! Turns an [`ExperimentConfig`](crate::config::ExperimentConfig) into a
//! directory of artifacts:
//!
//! - `dataset.zcd1` — the synthesized channel dataset,
//! - `bundle_zones-<B>.zcm1` — one trained model bundle per zone count,
//! - `report.csv` — the method comparison table,
//! - `cdf.csv` — per-sample NMSE distribution curves,
//! - `manifest.txt` — configuration hash and artifact digests.
//!
//! Everything is deterministic: rerunning with the same configuration
//! writes byte-identical artifacts. The pipeline trains and evaluates on
//! the dataset *as read back from disk*, so the `f32` quantization of the
//! storage format is part of the experiment, not an afterthought.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::autoenc::{self, init_model, train, LayerSpec, ModelParams, TrainConfig};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::eval::{
    cdf_csv_rows, comparison_report, evaluate, ComparisonReport, EvalReport, EvalSample,
    MethodResult, Routing,
};
use crate::io::dataset::{read_dataset, write_dataset};
use crate::io::model::{save_model, ModelBundle};
use crate::mobility::{compute_overhead, count_zone_switches, simulate_trajectory, Trajectory};
use crate::rng;
use crate::scene::{generate_scene, synthesize_channel, ChannelSample};
use crate::transform::{truncate_and_vectorize, AngularDelayTransform, Normalizer};
use crate::zoning::{classify_position, learn_partition, ZonePartition};

/// Salt for the train/test shuffle, distinct from every model seed.
const SPLIT_SALT: u64 = 0x5b117;

/// Everything produced for one zone count.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    /// Display name, `zones-<B>`.
    pub name: String,
    pub num_zones: usize,
    pub partition: ZonePartition,
    /// Evaluation under the deployable nearest-centroid router.
    pub position: EvalReport,
    /// Evaluation under the best-zone-in-hindsight router.
    pub oracle: EvalReport,
    pub overhead: crate::mobility::OverheadReport,
    /// Final training loss per zone, indexed by zone id.
    pub zone_final_losses: Vec<f64>,
    pub bundle_path: PathBuf,
}

/// The full result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub n_t: usize,
    pub subcarriers: usize,
    pub n_c: usize,
    pub train_count: usize,
    pub test_count: usize,
    pub methods: Vec<MethodOutcome>,
    pub report: ComparisonReport,
    pub dataset_path: PathBuf,
    pub report_path: PathBuf,
    pub cdf_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Synthesizes the channel dataset for every UE grid position.
pub fn synthesize_dataset(config: &ExperimentConfig) -> Result<Vec<ChannelSample>> {
    let scene = generate_scene(&config.scene_config()?)?;
    // Truncating to n_c delay taps must not discard propagation energy:
    // the longest path must fit inside the retained delay window.
    let delay_budget = config.transform.n_c as f64 / config.scene.bandwidth_hz;
    let worst = scene.max_path_delay();
    if worst >= delay_budget {
        return Err(Error::config(format!(
            "delay truncation too aggressive: longest path delay {:.3e} s \
             exceeds the retained window of {} taps / {:.3e} Hz = {:.3e} s; \
             raise transform.n_c or shrink the cell",
            worst, config.transform.n_c, config.scene.bandwidth_hz, delay_budget
        )));
    }
    let positions: Vec<[f64; 3]> = scene.ue_positions().to_vec();
    positions
        .par_iter()
        .map(|&p| synthesize_channel(&scene, p))
        .collect()
}

/// Splits samples into train/test with a seeded shuffle.
pub fn split_samples(
    samples: Vec<ChannelSample>,
    train_count: usize,
    seed: u64,
) -> Result<(Vec<ChannelSample>, Vec<ChannelSample>)> {
    if train_count == 0 || train_count >= samples.len() {
        return Err(Error::config(format!(
            "training split {train_count} must leave both train and test samples of {}",
            samples.len()
        )));
    }
    let mut indexed: Vec<ChannelSample> = samples;
    let mut r = rng::substream(seed, SPLIT_SALT);
    rng::shuffle(&mut indexed, &mut r);
    let test = indexed.split_off(train_count);
    Ok((indexed, test))
}

/// Maps raw channels to unnormalized truncated angular-delay samples.
pub fn prepare_samples(samples: &[ChannelSample], n_c: usize) -> Result<Vec<EvalSample>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::data("cannot prepare an empty sample set"))?;
    let (n_t, k) = first.channel.dim();
    let transform = AngularDelayTransform::new(n_t, k)?;
    samples
        .par_iter()
        .map(|s| {
            let angular = transform.to_angular_delay(&s.channel)?;
            Ok(EvalSample {
                position: s.position,
                target: truncate_and_vectorize(&angular, n_c)?,
            })
        })
        .collect()
}

/// Seed for one zone's model under one zone count, decoupled from every
/// other (count, zone) pair.
fn zone_seed(base: u64, num_zones: usize, zone: usize) -> u64 {
    rng::derive_seed(rng::derive_seed(base, num_zones as u64), zone as u64)
}

/// Trains one model per zone on that zone's normalized training samples.
///
/// Every zone trains for the same number of epochs, so methods with
/// different zone counts get equal per-sample gradient budgets (each
/// training sample lands in exactly one zone).
pub fn train_zone_models(
    train_set: &[EvalSample],
    partition: &ZonePartition,
    normalizer: &Normalizer,
    spec: &LayerSpec,
    config: &TrainConfig,
) -> Result<Vec<(ModelParams, Vec<f64>)>> {
    let b = partition.num_zones();
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); b];
    for (i, sample) in train_set.iter().enumerate() {
        buckets[classify_position(partition, sample.position).0].push(i);
    }
    if let Some(zone) = buckets.iter().position(|bucket| bucket.is_empty()) {
        return Err(Error::data(format!(
            "zone {} of {b} has no training samples; use fewer zones or more data",
            zone + 1
        )));
    }
    buckets
        .into_par_iter()
        .enumerate()
        .map(|(zone, indices)| {
            let mut data = Array2::zeros((indices.len(), spec.input_dim));
            for (row, &i) in indices.iter().enumerate() {
                let normalized = normalizer.apply(&train_set[i].target);
                data.row_mut(row).assign(&normalized.values);
            }
            let seed = zone_seed(config.seed, b, zone);
            let mut model = init_model(spec, seed)?;
            let report = train(
                &mut model,
                &data,
                &TrainConfig {
                    seed,
                    ..config.clone()
                },
            )?;
            Ok((model, report.epoch_losses))
        })
        .collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        write!(out, "{byte:02x}").expect("hex");
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

/// One zone count: partition, train, persist, evaluate, account.
#[allow(clippy::too_many_arguments)]
fn run_method(
    config: &ExperimentConfig,
    out_dir: &Path,
    b: usize,
    train_set: &[EvalSample],
    test_set: &[EvalSample],
    normalizer: &Normalizer,
    trajectory: &Trajectory,
    n_t: usize,
) -> Result<MethodOutcome> {
    let spec = config.layer_spec()?;
    let train_positions: Vec<[f64; 3]> = train_set.iter().map(|s| s.position).collect();
    let partition = learn_partition(
        &train_positions,
        b,
        rng::derive_seed(config.zones.seed, b as u64),
    )?;

    let trained = train_zone_models(
        train_set,
        &partition,
        normalizer,
        &spec,
        &config.train_config()?,
    )?;
    let zone_final_losses: Vec<f64> = trained
        .iter()
        .map(|(_, losses)| *losses.last().expect("at least one epoch"))
        .collect();
    let models: Vec<ModelParams> = trained.into_iter().map(|(m, _)| m).collect();

    let bundle = ModelBundle::new(
        n_t,
        config.transform.n_c,
        spec,
        partition.clone(),
        *normalizer,
        models,
    )?;
    let bundle_path = out_dir.join(format!("bundle_zones-{b}.zcm1"));
    save_model(&bundle_path, &bundle)?;

    let routable: Vec<Option<ModelParams>> = bundle.models.iter().cloned().map(Some).collect();
    let position = evaluate(&routable, &partition, normalizer, test_set, Routing::Position)?;
    let oracle = evaluate(&routable, &partition, normalizer, test_set, Routing::Oracle)?;

    let stats = count_zone_switches(trajectory, &partition)?;
    let overhead = compute_overhead(
        autoenc::count_parameters(&spec).encoder,
        b,
        &stats,
        config.cache_policy(b),
        config.mobility.horizon_s,
    )?;

    Ok(MethodOutcome {
        name: format!("zones-{b}"),
        num_zones: b,
        partition,
        position,
        oracle,
        overhead,
        zone_final_losses,
        bundle_path,
    })
}

/// Runs the full pipeline into `out_dir` (created if absent).
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentSummary> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;

    // Synthesize the dataset, persist it, and reload: downstream stages
    // see exactly the f32-quantized values any consumer of the file sees.
    let dataset_path = out_dir.join("dataset.zcd1");
    let samples = synthesize_dataset(config)?;
    write_dataset(&dataset_path, &samples)?;
    drop(samples);
    let samples = read_dataset(&dataset_path)?;

    let (n_t, subcarriers) = samples[0].channel.dim();
    let train_count = config.split_train_count(samples.len())?;
    let (train_raw, test_raw) = split_samples(samples, train_count, config.train.seed)?;
    let train_set = prepare_samples(&train_raw, config.transform.n_c)?;
    let test_set = prepare_samples(&test_raw, config.transform.n_c)?;
    drop(train_raw);
    drop(test_raw);

    let normalizer = Normalizer::fit(train_set.iter().map(|s| &s.target))?;
    let trajectory = simulate_trajectory(&config.mobility_config())?;

    let mut methods = Vec::with_capacity(config.zones.b.len());
    for &b in &config.zones.b {
        methods.push(run_method(
            config,
            out_dir,
            b,
            &train_set,
            &test_set,
            &normalizer,
            &trajectory,
            n_t,
        )?);
    }

    let results: Vec<MethodResult> = methods
        .iter()
        .map(|m| MethodResult {
            name: m.name.clone(),
            spec: config.layer_spec().expect("validated"),
            num_zones: m.num_zones,
            eval: m.position.clone(),
            overhead: m.overhead.clone(),
        })
        .collect();
    let report = comparison_report(&results)?;
    let report_path = out_dir.join("report.csv");
    write_text(&report_path, &report.to_csv())?;

    let mut cdf_text = String::from("method,nmse_db,cdf\n");
    for m in &methods {
        cdf_text.push_str(&cdf_csv_rows(&m.name, &m.position.cdf()?));
        cdf_text.push_str(&cdf_csv_rows(
            &format!("{}-oracle", m.name),
            &m.oracle.cdf()?,
        ));
    }
    let cdf_path = out_dir.join("cdf.csv");
    write_text(&cdf_path, &cdf_text)?;

    let manifest_path = out_dir.join("manifest.txt");
    let mut manifest = String::new();
    writeln!(manifest, "config_sha256 {}", sha256_hex(config.to_canonical_toml().as_bytes()))
        .expect("manifest");
    writeln!(
        manifest,
        "seeds scene={} zones={} train={} mobility={}",
        config.scene.seed, config.zones.seed, config.train.seed, config.mobility.seed
    )
    .expect("manifest");
    writeln!(manifest, "split train={train_count} test={}", test_set.len()).expect("manifest");
    let mut artifact_paths = vec![dataset_path.clone()];
    artifact_paths.extend(methods.iter().map(|m| m.bundle_path.clone()));
    artifact_paths.push(report_path.clone());
    artifact_paths.push(cdf_path.clone());
    for p in &artifact_paths {
        let bytes = std::fs::read(p)?;
        let name = p
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::data("artifact path has no printable file name"))?;
        writeln!(manifest, "artifact {name} sha256={}", sha256_hex(&bytes)).expect("manifest");
    }
    write_text(&manifest_path, &manifest)?;

    Ok(ExperimentSummary {
        n_t,
        subcarriers,
        n_c: config.transform.n_c,
        train_count,
        test_count: test_set.len(),
        methods,
        report,
        dataset_path,
        report_path,
        cdf_path,
        manifest_path,
    })
}

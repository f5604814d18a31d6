//! Reconstruction-quality evaluation and comparison reporting.
//!
//! Computes per-sample NMSE (`||target - estimate||^2 / ||target||^2`),
//! empirical CDFs over the per-sample dB values, and the per-method
//! comparison table (mean NMSE, download/update rates, multiplication
//! and parameter counts). The headline "mean NMSE dB" is the dB of the
//! mean linear ratio; the mean of per-sample dB values is also reported.

use ndarray::Array2;
use rayon::prelude::*;

use crate::autoenc::{self, LayerSpec, Mode, ModelParams};
use crate::error::{Error, Result};
use crate::mobility::OverheadReport;
use crate::transform::{AngularDelayVector, Normalizer};
use crate::zoning::{classify_position, ZoneId, ZonePartition};

/// CSV stand-in for `-inf` dB (a perfect reconstruction).
pub const DB_SENTINEL: f64 = -400.0;

/// One NMSE measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nmse {
    /// `||target - estimate||^2 / ||target||^2`.
    pub linear: f64,
    /// `10 log10(linear)`; `-inf` when the error is exactly zero.
    pub db: f64,
}

/// Normalized mean squared error between two vectors of the same shape.
pub fn nmse(target: &AngularDelayVector, estimate: &AngularDelayVector) -> Result<Nmse> {
    if target.len() != estimate.len() || target.n_t != estimate.n_t || target.n_c != estimate.n_c {
        return Err(Error::data(format!(
            "NMSE operands differ in shape: ({}, {}) vs ({}, {})",
            target.n_t, target.n_c, estimate.n_t, estimate.n_c
        )));
    }
    let denom = target.energy();
    if denom <= 0.0 {
        return Err(Error::numeric("NMSE target has zero energy"));
    }
    let num: f64 = target
        .values
        .iter()
        .zip(estimate.values.iter())
        .map(|(t, e)| (t - e) * (t - e))
        .sum();
    let linear = num / denom;
    Ok(Nmse {
        linear,
        db: linear_to_db(linear),
    })
}

/// `10 log10(x)`, with exact zero mapped to `-inf`.
pub fn linear_to_db(linear: f64) -> f64 {
    if linear == 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * linear.log10()
    }
}

/// Replaces `-inf` with the documented CSV sentinel.
pub fn db_for_csv(db: f64) -> f64 {
    if db == f64::NEG_INFINITY {
        DB_SENTINEL
    } else {
        db
    }
}

/// Empirical cumulative distribution: sorted values with fractions `k/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cdf {
    points: Vec<(f64, f64)>,
}

impl Cdf {
    /// `(value, fraction)` pairs, non-decreasing in both coordinates,
    /// final fraction exactly 1.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Fraction of samples with value `<= x`.
    pub fn fraction_at_or_below(&self, x: f64) -> f64 {
        let mut frac = 0.0;
        for &(v, f) in &self.points {
            if v <= x {
                frac = f;
            } else {
                break;
            }
        }
        frac
    }
}

/// Builds the empirical CDF of a nonempty value set.
pub fn build_cdf(values: &[f64]) -> Result<Cdf> {
    if values.is_empty() {
        return Err(Error::data("CDF needs at least one value"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::numeric("CDF input contains NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let points = sorted
        .into_iter()
        .enumerate()
        .map(|(k, v)| (v, (k + 1) as f64 / n))
        .collect();
    Ok(Cdf { points })
}

/// How test samples are matched to zone models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Routing {
    /// Nearest-centroid position classifier (deployable).
    Position,
    /// Best zone in hindsight: the model with the smallest
    /// reconstruction error (lower bound, needs the target).
    Oracle,
}

impl Routing {
    pub fn name(&self) -> &'static str {
        match self {
            Routing::Position => "position",
            Routing::Oracle => "oracle",
        }
    }
}

/// One evaluation sample: UE position plus the unnormalized truncated
/// angular-delay vector the encoder must compress.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSample {
    pub position: [f64; 3],
    pub target: AngularDelayVector,
}

/// Per-zone slice of an evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneBreakdown {
    pub zone: ZoneId,
    pub count: usize,
    pub mean_linear: f64,
    pub mean_db: f64,
}

/// Evaluation outcome over one test set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub routing: Routing,
    pub per_sample_linear: Vec<f64>,
    pub per_sample_db: Vec<f64>,
    /// Zone whose model handled each sample.
    pub routed_zones: Vec<ZoneId>,
    /// Mean of the linear ratios.
    pub mean_linear: f64,
    /// Headline metric: `10 log10(mean_linear)`.
    pub mean_db: f64,
    /// Alternative convention: mean of the per-sample dB values.
    pub mean_of_sample_db: f64,
    /// Samples routed to a zone with no model and handed to the nearest
    /// available one.
    pub rerouted: usize,
    /// Fraction of samples where the oracle picked the same zone as the
    /// position classifier (oracle routing only).
    pub classifier_agreement: Option<f64>,
    pub zone_breakdown: Vec<ZoneBreakdown>,
}

impl EvalReport {
    pub fn cdf(&self) -> Result<Cdf> {
        build_cdf(&self.per_sample_db)
    }
}

fn reconstruct_one(
    model: &ModelParams,
    normalizer: &Normalizer,
    target: &AngularDelayVector,
) -> Result<Nmse> {
    let normalized = normalizer.apply(target);
    let row = normalized
        .values
        .view()
        .insert_axis(ndarray::Axis(0))
        .to_owned();
    let recon_row: Array2<f64> = autoenc::reconstruct(model, &row, Mode::Infer)?;
    let recon = AngularDelayVector {
        values: recon_row.row(0).to_owned(),
        n_t: target.n_t,
        n_c: target.n_c,
    };
    let estimate = normalizer.invert(&recon);
    let unnormalized = nmse(target, &estimate)?;
    // The normalizer is a single positive scalar, so the ratio is
    // identical in normalized coordinates.
    debug_assert!({
        let n = nmse(&normalized, &recon)?;
        (n.linear - unnormalized.linear).abs() <= 1e-12 * unnormalized.linear.max(1.0)
    });
    Ok(unnormalized)
}

/// Nearest centroid restricted to zones that actually have a model.
fn nearest_available(
    partition: &ZonePartition,
    models: &[Option<ModelParams>],
    position: [f64; 3],
) -> Option<ZoneId> {
    let mut best: Option<(f64, usize)> = None;
    for (i, c) in partition.centroids().iter().enumerate() {
        if models[i].is_none() {
            continue;
        }
        let dx = position[0] - c[0];
        let dy = position[1] - c[1];
        let d = dx * dx + dy * dy;
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| ZoneId(i))
}

/// Evaluates a zone-model collection on a test set.
///
/// Position routing classifies each sample's position and uses that
/// zone's model, falling back to the nearest available model (counted in
/// `rerouted`) when the classified zone has none. Oracle routing tries
/// every available model and keeps the best reconstruction.
pub fn evaluate(
    models: &[Option<ModelParams>],
    partition: &ZonePartition,
    normalizer: &Normalizer,
    samples: &[EvalSample],
    routing: Routing,
) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::data("evaluation needs a nonempty test set"));
    }
    if models.len() != partition.num_zones() {
        return Err(Error::data(format!(
            "{} models for {} zones",
            models.len(),
            partition.num_zones()
        )));
    }
    if models.iter().all(Option::is_none) {
        return Err(Error::data("evaluation needs at least one trained model"));
    }

    struct PerSample {
        nmse: Nmse,
        zone: ZoneId,
        rerouted: bool,
        agrees: bool,
    }

    let outcomes: Vec<Result<PerSample>> = samples
        .par_iter()
        .map(|sample| {
            let classified = classify_position(partition, sample.position);
            match routing {
                Routing::Position => {
                    let (zone, rerouted) = if models[classified.0].is_some() {
                        (classified, false)
                    } else {
                        let fallback = nearest_available(partition, models, sample.position)
                            .expect("at least one model available");
                        (fallback, true)
                    };
                    let model = models[zone.0].as_ref().expect("routed zone has a model");
                    let nmse = reconstruct_one(model, normalizer, &sample.target)?;
                    Ok(PerSample {
                        nmse,
                        zone,
                        rerouted,
                        agrees: true,
                    })
                }
                Routing::Oracle => {
                    let mut best: Option<(Nmse, ZoneId)> = None;
                    for (i, model) in models.iter().enumerate() {
                        let Some(model) = model.as_ref() else { continue };
                        let candidate = reconstruct_one(model, normalizer, &sample.target)?;
                        // Strict inequality keeps ties at the smallest id.
                        if best.is_none_or(|(b, _)| candidate.linear < b.linear) {
                            best = Some((candidate, ZoneId(i)));
                        }
                    }
                    let (nmse, zone) = best.expect("at least one model available");
                    Ok(PerSample {
                        nmse,
                        zone,
                        rerouted: false,
                        agrees: zone == classified,
                    })
                }
            }
        })
        .collect();

    let mut per_sample_linear = Vec::with_capacity(samples.len());
    let mut per_sample_db = Vec::with_capacity(samples.len());
    let mut routed_zones = Vec::with_capacity(samples.len());
    let mut rerouted = 0usize;
    let mut agreeing = 0usize;
    let mut zone_linear = vec![0.0f64; partition.num_zones()];
    let mut zone_counts = vec![0usize; partition.num_zones()];
    for outcome in outcomes {
        let o = outcome?;
        per_sample_linear.push(o.nmse.linear);
        per_sample_db.push(o.nmse.db);
        routed_zones.push(o.zone);
        if o.rerouted {
            rerouted += 1;
        }
        if o.agrees {
            agreeing += 1;
        }
        zone_linear[o.zone.0] += o.nmse.linear;
        zone_counts[o.zone.0] += 1;
    }

    let mean_linear = per_sample_linear.iter().sum::<f64>() / samples.len() as f64;
    let mean_of_sample_db = per_sample_db.iter().sum::<f64>() / samples.len() as f64;
    let zone_breakdown = (0..partition.num_zones())
        .filter(|&i| zone_counts[i] > 0)
        .map(|i| {
            let mean = zone_linear[i] / zone_counts[i] as f64;
            ZoneBreakdown {
                zone: ZoneId(i),
                count: zone_counts[i],
                mean_linear: mean,
                mean_db: linear_to_db(mean),
            }
        })
        .collect();
    Ok(EvalReport {
        routing,
        per_sample_linear,
        per_sample_db,
        routed_zones,
        mean_linear,
        mean_db: linear_to_db(mean_linear),
        mean_of_sample_db,
        rerouted,
        classifier_agreement: match routing {
            Routing::Oracle => Some(agreeing as f64 / samples.len() as f64),
            Routing::Position => None,
        },
        zone_breakdown,
    })
}

/// One comparison-table entry: an evaluated method with its architecture
/// and overhead figures.
#[derive(Debug, Clone)]
pub struct MethodResult {
    /// Display name, e.g. `zones-8`.
    pub name: String,
    pub spec: LayerSpec,
    pub num_zones: usize,
    pub eval: EvalReport,
    pub overhead: OverheadReport,
}

/// A rendered comparison row.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub method: String,
    pub mean_nmse_db: f64,
    pub mptr_params_per_s: f64,
    pub mpur_per_s: f64,
    /// Real multiplications per feedback (one encoder pass).
    pub multiplications: u64,
    /// Stored encoder parameters across all zones.
    pub params_encoder: u64,
    /// Stored parameters across all zones, encoders plus decoders.
    pub params_total: u64,
}

/// The per-method comparison table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    /// Machine-readable rendering. Deterministic for fixed inputs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,mean_nmse_db,mptr_params_per_s,mpur_per_s,multiplications,params_encoder,params_total\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{},{},{}\n",
                r.method,
                db_for_csv(r.mean_nmse_db),
                r.mptr_params_per_s,
                r.mpur_per_s,
                r.multiplications,
                r.params_encoder,
                r.params_total
            ));
        }
        out
    }

    /// Aligned human-readable rendering.
    pub fn to_table(&self) -> String {
        let mut out = String::from(
            "method          mean NMSE [dB]  MPTR [param/s]  MPUR [1/s]  mults/feedback  params (enc/total)\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<15} {:>14.2} {:>15.2} {:>11.4} {:>15} {:>12}/{}\n",
                r.method,
                db_for_csv(r.mean_nmse_db),
                r.mptr_params_per_s,
                r.mpur_per_s,
                r.multiplications,
                r.params_encoder,
                r.params_total
            ));
        }
        out
    }
}

/// Assembles the comparison table from evaluated methods.
///
/// Parameter columns scale with the zone count (every zone stores its
/// own pair) while the multiplication column is per feedback — a UE runs
/// exactly one encoder regardless of the zone count.
pub fn comparison_report(results: &[MethodResult]) -> Result<ComparisonReport> {
    if let Some(first) = results.first() {
        if results.iter().any(|r| r.spec.input_dim != first.spec.input_dim) {
            return Err(Error::data(
                "comparison methods disagree on the input dimension",
            ));
        }
    }
    let rows = results
        .iter()
        .map(|r| {
            let params = autoenc::count_parameters(&r.spec);
            let mults = autoenc::count_multiplications(&r.spec);
            let b = r.num_zones as u64;
            ComparisonRow {
                method: r.name.clone(),
                mean_nmse_db: r.eval.mean_db,
                mptr_params_per_s: r.overhead.mptr,
                mpur_per_s: r.overhead.mpur,
                multiplications: mults.encoder,
                params_encoder: b * params.encoder,
                params_total: b * params.total(),
            }
        })
        .collect();
    Ok(ComparisonReport { rows })
}

/// Renders a CDF as `method,nmse_db,cdf` CSV rows (no header).
pub fn cdf_csv_rows(method: &str, cdf: &Cdf) -> String {
    let mut out = String::new();
    for &(v, f) in cdf.points() {
        out.push_str(&format!("{},{:.6},{:.6}\n", method, db_for_csv(v), f));
    }
    out
}

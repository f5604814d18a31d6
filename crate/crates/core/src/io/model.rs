//! ZCM1 trained-model bundles.
//!
//! A bundle is everything the deployment phase needs: the architecture,
//! the zone partition (centroids), the fitted normalizer scale, and one
//! full parameter set per zone.
//!
//! Layout (all little-endian):
//!
//! ```text
//! bytes 0..4   magic "ZCM1"
//! u32 x 6      N_t, N_c, L, beta, activation tag (0 tanh / 1 linear), B
//! B x 2 f64    zone centroids (x, y), in zone order
//! f64          normalizer scale
//! per zone, f64 tensors in declaration order:
//!   encoder dense-in weight (2 N_t N_c x H, row-major), bias (H)
//!   encoder norm scale, shift, running mean, running variance (H each)
//!   encoder dense-out weight (H x L, row-major), bias (L)
//!   decoder dense-in weight (L x H, row-major), bias (H)
//!   decoder norm scale, shift, running mean, running variance (H each)
//!   decoder dense-out weight (H x 2 N_t N_c, row-major), bias (2 N_t N_c)
//! ```
//!
//! with `H = beta * L`. The reader recomputes the per-zone tensor volume
//! from the header via the parameter-count formulas and rejects any file
//! whose byte length disagrees, before reading tensor data.

use std::path::Path;

use ndarray::{Array1, Array2};

use crate::autoenc::{self, Activation, BatchNorm, LayerSpec, Linear, ModelParams};
use crate::error::{Error, Result};
use crate::transform::Normalizer;
use crate::zoning::ZonePartition;

use super::{put_f64, put_u32, Cursor};

pub const MAGIC: &[u8; 4] = b"ZCM1";

const TAG_TANH: u32 = 0;
const TAG_LINEAR: u32 = 1;

fn activation_tag(a: Activation) -> u32 {
    match a {
        Activation::Tanh => TAG_TANH,
        Activation::Linear => TAG_LINEAR,
    }
}

fn activation_from_tag(tag: u32, offset: u64) -> Result<Activation> {
    match tag {
        TAG_TANH => Ok(Activation::Tanh),
        TAG_LINEAR => Ok(Activation::Linear),
        other => Err(Error::parse(offset, format!("unknown activation tag {other}"))),
    }
}

/// A deployable collection: architecture, partition, normalizer, and one
/// trained model per zone.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub n_t: usize,
    pub n_c: usize,
    pub spec: LayerSpec,
    pub partition: ZonePartition,
    pub normalizer: Normalizer,
    /// One model per zone, indexed by zone id.
    pub models: Vec<ModelParams>,
}

impl ModelBundle {
    pub fn new(
        n_t: usize,
        n_c: usize,
        spec: LayerSpec,
        partition: ZonePartition,
        normalizer: Normalizer,
        models: Vec<ModelParams>,
    ) -> Result<Self> {
        if spec.input_dim != 2 * n_t * n_c {
            return Err(Error::data(format!(
                "layer input dimension {} does not match 2 * {n_t} * {n_c}",
                spec.input_dim
            )));
        }
        if models.len() != partition.num_zones() {
            return Err(Error::data(format!(
                "{} models for {} zones",
                models.len(),
                partition.num_zones()
            )));
        }
        if let Some(bad) = models.iter().position(|m| m.spec != spec) {
            return Err(Error::data(format!(
                "zone {bad} model disagrees with the bundle architecture"
            )));
        }
        Ok(Self {
            n_t,
            n_c,
            spec,
            partition,
            normalizer,
            models,
        })
    }

    pub fn num_zones(&self) -> usize {
        self.partition.num_zones()
    }
}

/// f64 scalars stored per zone: trainables plus the four running-stat
/// buffers (two per normalization layer).
fn per_zone_scalars(spec: &LayerSpec) -> u64 {
    autoenc::num_trainable(spec) as u64 + 4 * spec.hidden_dim() as u64
}

fn push_tensor2(out: &mut Vec<u8>, t: &Array2<f64>) {
    for v in t.iter() {
        put_f64(out, *v);
    }
}

fn push_tensor1(out: &mut Vec<u8>, t: &Array1<f64>) {
    for v in t.iter() {
        put_f64(out, *v);
    }
}

fn push_linear(out: &mut Vec<u8>, l: &Linear) {
    push_tensor2(out, &l.weight);
    push_tensor1(out, &l.bias);
}

fn push_bn(out: &mut Vec<u8>, bn: &BatchNorm) {
    push_tensor1(out, &bn.gamma);
    push_tensor1(out, &bn.beta);
    push_tensor1(out, &bn.running_mean);
    push_tensor1(out, &bn.running_var);
}

/// Serializes a bundle to ZCM1 bytes.
pub fn bundle_to_bytes(bundle: &ModelBundle) -> Result<Vec<u8>> {
    let to_u32 = |v: usize, what: &str| -> Result<u32> {
        u32::try_from(v).map_err(|_| Error::data(format!("{what} {v} exceeds format limit")))
    };
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, to_u32(bundle.n_t, "antenna count")?);
    put_u32(&mut out, to_u32(bundle.n_c, "delay tap count")?);
    put_u32(&mut out, to_u32(bundle.spec.latent_dim, "codeword length")?);
    put_u32(&mut out, to_u32(bundle.spec.expansion, "width factor")?);
    put_u32(&mut out, activation_tag(bundle.spec.activation));
    put_u32(&mut out, to_u32(bundle.num_zones(), "zone count")?);
    for c in bundle.partition.centroids() {
        put_f64(&mut out, c[0]);
        put_f64(&mut out, c[1]);
    }
    put_f64(&mut out, bundle.normalizer.scale());
    for m in &bundle.models {
        push_linear(&mut out, &m.enc_fc1);
        push_bn(&mut out, &m.enc_bn);
        push_linear(&mut out, &m.enc_fc2);
        push_linear(&mut out, &m.dec_fc1);
        push_bn(&mut out, &m.dec_bn);
        push_linear(&mut out, &m.dec_fc2);
    }
    Ok(out)
}

fn read_tensor2(c: &mut Cursor, rows: usize, cols: usize, what: &str) -> Result<Array2<f64>> {
    let mut t = Array2::zeros((rows, cols));
    for v in t.iter_mut() {
        *v = c.f64(what)?;
    }
    Ok(t)
}

fn read_tensor1(c: &mut Cursor, len: usize, what: &str) -> Result<Array1<f64>> {
    let mut t = Array1::zeros(len);
    for v in t.iter_mut() {
        *v = c.f64(what)?;
    }
    Ok(t)
}

fn read_bn(c: &mut Cursor, h: usize, what: &str) -> Result<BatchNorm> {
    Ok(BatchNorm {
        gamma: read_tensor1(c, h, what)?,
        beta: read_tensor1(c, h, what)?,
        running_mean: read_tensor1(c, h, what)?,
        running_var: read_tensor1(c, h, what)?,
    })
}

/// Parses ZCM1 bytes into a bundle.
pub fn bundle_from_bytes(buf: &[u8]) -> Result<ModelBundle> {
    let mut c = Cursor::new(buf);
    c.magic(MAGIC)?;
    let header_at = c.offset();
    let n_t = c.u32("antenna count")? as usize;
    let n_c = c.u32("delay tap count")? as usize;
    let l = c.u32("codeword length")? as usize;
    let beta = c.u32("width factor")? as usize;
    let tag_at = c.offset();
    let tag = c.u32("activation tag")?;
    let b_at = c.offset();
    let b = c.u32("zone count")? as usize;

    if n_t == 0 || n_c == 0 {
        return Err(Error::parse(header_at, "antenna/delay counts must be positive"));
    }
    let activation = activation_from_tag(tag, tag_at)?;
    let input_dim = 2usize
        .checked_mul(n_t)
        .and_then(|v| v.checked_mul(n_c))
        .ok_or_else(|| Error::parse(header_at, "input dimension overflows"))?;
    let spec = LayerSpec::new(input_dim, l, beta, activation)
        .map_err(|e| Error::parse(header_at, format!("invalid architecture: {e}")))?;
    if b == 0 {
        return Err(Error::parse(b_at, "zone count must be positive"));
    }

    // Validate total length (in wide integers) before touching tensors:
    // the per-zone volume is the parameter-count cross-check.
    let expected = 4u128
        + 6 * 4
        + b as u128 * 16
        + 8
        + b as u128 * per_zone_scalars(&spec) as u128 * 8;
    if expected != buf.len() as u128 {
        return Err(Error::parse(
            b_at,
            format!(
                "length mismatch: header implies {expected} bytes \
                 ({b} zones of {} scalars), file has {}",
                per_zone_scalars(&spec),
                buf.len()
            ),
        ));
    }

    let mut centroids = Vec::with_capacity(b);
    for _ in 0..b {
        centroids.push([c.f64("centroid x")?, c.f64("centroid y")?]);
    }
    let partition = ZonePartition::new(centroids)?;
    let scale_at = c.offset();
    let normalizer = Normalizer::new(c.f64("normalizer scale")?)
        .map_err(|e| Error::parse(scale_at, e.to_string()))?;

    let d = spec.input_dim;
    let h = spec.hidden_dim();
    let mut models = Vec::with_capacity(b);
    for _ in 0..b {
        models.push(ModelParams {
            spec,
            enc_fc1: Linear {
                weight: read_tensor2(&mut c, d, h, "encoder dense-in weight")?,
                bias: read_tensor1(&mut c, h, "encoder dense-in bias")?,
            },
            enc_bn: read_bn(&mut c, h, "encoder norm tensor")?,
            enc_fc2: Linear {
                weight: read_tensor2(&mut c, h, l, "encoder dense-out weight")?,
                bias: read_tensor1(&mut c, l, "encoder dense-out bias")?,
            },
            dec_fc1: Linear {
                weight: read_tensor2(&mut c, l, h, "decoder dense-in weight")?,
                bias: read_tensor1(&mut c, h, "decoder dense-in bias")?,
            },
            dec_bn: read_bn(&mut c, h, "decoder norm tensor")?,
            dec_fc2: Linear {
                weight: read_tensor2(&mut c, h, d, "decoder dense-out weight")?,
                bias: read_tensor1(&mut c, d, "decoder dense-out bias")?,
            },
        });
    }
    c.expect_end()?;
    ModelBundle::new(n_t, n_c, spec, partition, normalizer, models)
}

/// Writes a bundle file.
pub fn save_model(path: &Path, bundle: &ModelBundle) -> Result<()> {
    let bytes = bundle_to_bytes(bundle)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Reads a bundle file.
pub fn load_model(path: &Path) -> Result<ModelBundle> {
    let bytes = std::fs::read(path)?;
    bundle_from_bytes(&bytes)
}

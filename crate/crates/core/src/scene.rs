//! Synthetic site geometry and zone-structured multipath channels.
//!
//! A rectangular cell is tiled into generator zones, each owning a fixed
//! set of scatterers. Channels follow the geometric multipath model: one
//! line-of-sight path plus one single-bounce path per zone scatterer, all
//! randomness drawn once at scene construction so that channel synthesis
//! is a pure function of `(scene, position)`.
//!
//! Zone subspaces use the Karhunen-Loeve representation
//! `h = V diag(sqrt(lambda)) w` with `w` circularly-symmetric complex
//! standard normal.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;
use crate::rng;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Base-station antenna height above ground, meters.
pub const BS_HEIGHT: f64 = 25.0;
/// UE antenna height above ground, meters.
pub const UE_HEIGHT: f64 = 1.5;
/// Scatterer height range above ground, meters.
pub const SCATTERER_HEIGHT: (f64, f64) = (2.0, 15.0);

/// Uniform planar array at the base station.
///
/// Element `n = n_h + n_horizontal * n_v` sits at horizontal index `n_h`
/// and vertical index `n_v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub n_horizontal: usize,
    pub n_vertical: usize,
    /// Element spacing as a multiple of the carrier wavelength.
    pub element_spacing: f64,
}

impl Default for ArrayGeometry {
    /// The 16-by-4 half-wavelength panel.
    fn default() -> Self {
        Self {
            n_horizontal: 16,
            n_vertical: 4,
            element_spacing: 0.5,
        }
    }
}

impl ArrayGeometry {
    pub fn new(n_horizontal: usize, n_vertical: usize, element_spacing: f64) -> Result<Self> {
        let g = Self {
            n_horizontal,
            n_vertical,
            element_spacing,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_horizontal == 0 || self.n_vertical == 0 {
            return Err(Error::config("array must have at least one element per axis"));
        }
        if !(self.element_spacing > 0.0) {
            return Err(Error::config("element spacing must be positive"));
        }
        Ok(())
    }

    /// Total antenna count `N_t`.
    pub fn n_t(&self) -> usize {
        self.n_horizontal * self.n_vertical
    }
}

/// Array response vector for a departure direction.
///
/// Element `n = n_h + N_h * n_v` has value
/// `exp(j 2 pi spacing (n_h cos(el) sin(az) + n_v sin(el)))`;
/// every entry has unit modulus so the 2-norm is exactly `sqrt(N_t)`.
pub fn array_response(geometry: &ArrayGeometry, azimuth: f64, elevation: f64) -> Array1<Complex64> {
    let mut a = Array1::zeros(geometry.n_t());
    let horiz = elevation.cos() * azimuth.sin();
    let vert = elevation.sin();
    for n_v in 0..geometry.n_vertical {
        for n_h in 0..geometry.n_horizontal {
            let phase = 2.0
                * std::f64::consts::PI
                * geometry.element_spacing
                * (n_h as f64 * horiz + n_v as f64 * vert);
            a[n_h + geometry.n_horizontal * n_v] = Complex64::from_polar(1.0, phase);
        }
    }
    a
}

/// One multipath component of a BS-UE channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    /// Linear gain amplitude, >= 0.
    pub gain_amplitude: f64,
    /// Gain phase in `[0, 2 pi)`.
    pub gain_phase: f64,
    /// Azimuth angle of departure, radians.
    pub azimuth_aod: f64,
    /// Elevation angle of departure, radians.
    pub elevation_aod: f64,
    /// Propagation delay, seconds.
    pub delay: f64,
}

impl PathComponent {
    pub fn gain(&self) -> Complex64 {
        Complex64::from_polar(self.gain_amplitude, self.gain_phase)
    }
}

/// Parametric scene configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub array: ArrayGeometry,
    /// Cell rectangle (extent along x, extent along y), meters.
    pub cell_extent: (f64, f64),
    pub num_generator_zones: usize,
    pub scatterers_per_zone: usize,
    /// Carrier frequency, Hz.
    pub carrier_frequency: f64,
    /// Bandwidth W, Hz.
    pub bandwidth: f64,
    /// Subcarrier count K.
    pub num_subcarriers: usize,
    pub pathloss_exponent: f64,
    /// UE grid resolution (columns along x, rows along y).
    pub ue_grid: (usize, usize),
    /// Keep at most this many strongest paths per channel.
    pub max_paths: usize,
    pub rng_seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            array: ArrayGeometry::default(),
            cell_extent: (120.0, 120.0),
            num_generator_zones: 8,
            scatterers_per_zone: 6,
            carrier_frequency: 3.5e9,
            bandwidth: 10.0e6,
            num_subcarriers: 64,
            pathloss_exponent: 3.0,
            ue_grid: (64, 64),
            max_paths: 15,
            rng_seed: 1,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        if !(self.cell_extent.0 > 0.0 && self.cell_extent.1 > 0.0) {
            return Err(Error::config("cell extent must have positive area"));
        }
        if self.num_generator_zones == 0
            || self.scatterers_per_zone == 0
            || self.num_subcarriers == 0
            || self.max_paths == 0
            || self.ue_grid.0 == 0
            || self.ue_grid.1 == 0
        {
            return Err(Error::config("all scene counts must be at least 1"));
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::config("bandwidth must be positive"));
        }
        if !(self.carrier_frequency > 0.0) {
            return Err(Error::config("carrier frequency must be positive"));
        }
        if !(self.pathloss_exponent >= 0.0 && self.pathloss_exponent.is_finite()) {
            // Zero is allowed: unit-amplitude paths model gain-normalized
            // channels where only the geometric structure matters.
            return Err(Error::config("pathloss exponent must be non-negative"));
        }
        Ok(())
    }

    /// Carrier wavelength, meters.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }
}

/// Axis-aligned ground rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

/// A fixed scatterer: ground position, height, and intrinsic reflection
/// phase drawn once at scene construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub position: [f64; 3],
    pub phase: f64,
    pub zone: usize,
}

/// UE position with its frequency-domain channel matrix (`N_t x K`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample {
    pub position: [f64; 3],
    pub channel: Array2<Complex64>,
}

/// A generated site: zone tiling, scatterers, and the UE position grid.
#[derive(Debug, Clone)]
pub struct Scene {
    config: SceneConfig,
    bs_position: [f64; 3],
    tile_grid: (usize, usize),
    tiles: Vec<Rect>,
    scatterers: Vec<Scatterer>,
    ue_positions: Vec<[f64; 3]>,
}

/// Near-square tiling of `b` congruent tiles: rows is the largest divisor
/// of `b` not exceeding `sqrt(b)`, columns is `b / rows`, row-major order.
pub fn zone_tiling(b: usize) -> (usize, usize) {
    let mut rows = 1;
    let mut d = 1;
    while d * d <= b {
        if b.is_multiple_of(d) {
            rows = d;
        }
        d += 1;
    }
    (rows, b / rows)
}

/// Builds the deterministic scene for a configuration.
pub fn generate_scene(config: &SceneConfig) -> Result<Scene> {
    config.validate()?;
    let (w, d) = config.cell_extent;
    let (rows, cols) = zone_tiling(config.num_generator_zones);
    let mut tiles = Vec::with_capacity(config.num_generator_zones);
    for r in 0..rows {
        for c in 0..cols {
            tiles.push(Rect {
                x0: w * c as f64 / cols as f64,
                y0: d * r as f64 / rows as f64,
                x1: w * (c + 1) as f64 / cols as f64,
                y1: d * (r + 1) as f64 / rows as f64,
            });
        }
    }

    let mut scatterers = Vec::with_capacity(config.num_generator_zones * config.scatterers_per_zone);
    for (zone, tile) in tiles.iter().enumerate() {
        let mut rng = rng::substream(config.rng_seed, zone as u64);
        for _ in 0..config.scatterers_per_zone {
            let x = rng.gen_range(tile.x0..tile.x1);
            let y = rng.gen_range(tile.y0..tile.y1);
            let h = rng.gen_range(SCATTERER_HEIGHT.0..SCATTERER_HEIGHT.1);
            let phase = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            scatterers.push(Scatterer {
                position: [x, y, h],
                phase,
                zone,
            });
        }
    }

    let (nx, ny) = config.ue_grid;
    let mut ue_positions = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            ue_positions.push([
                w * (ix as f64 + 0.5) / nx as f64,
                d * (iy as f64 + 0.5) / ny as f64,
                UE_HEIGHT,
            ]);
        }
    }

    Ok(Scene {
        bs_position: [w / 2.0, 0.0, BS_HEIGHT],
        tile_grid: (rows, cols),
        tiles,
        scatterers,
        ue_positions,
        config: config.clone(),
    })
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Azimuth/elevation of the direction from `from` to `to`.
fn departure_angles(from: [f64; 3], to: [f64; 3]) -> (f64, f64) {
    let d = sub3(to, from);
    let azimuth = d[1].atan2(d[0]);
    let elevation = d[2].atan2((d[0] * d[0] + d[1] * d[1]).sqrt());
    (azimuth, elevation)
}

impl Scene {
    pub fn config(&self) -> &SceneConfig {
        &self.config
    }

    pub fn bs_position(&self) -> [f64; 3] {
        self.bs_position
    }

    pub fn tiles(&self) -> &[Rect] {
        &self.tiles
    }

    pub fn tile_grid(&self) -> (usize, usize) {
        self.tile_grid
    }

    pub fn scatterers(&self) -> &[Scatterer] {
        &self.scatterers
    }

    pub fn ue_positions(&self) -> &[[f64; 3]] {
        &self.ue_positions
    }

    fn in_cell(&self, position: [f64; 3]) -> bool {
        let (w, d) = self.config.cell_extent;
        position[0] >= 0.0 && position[0] <= w && position[1] >= 0.0 && position[1] <= d
    }

    /// Generator-zone index owning a ground position (row-major tile index).
    pub fn generator_zone_of(&self, position: [f64; 3]) -> Result<usize> {
        if !self.in_cell(position) {
            return Err(Error::data(format!(
                "position ({}, {}) outside cell extent",
                position[0], position[1]
            )));
        }
        let (w, d) = self.config.cell_extent;
        let (rows, cols) = self.tile_grid;
        let cx = ((position[0] / w * cols as f64) as usize).min(cols - 1);
        let ry = ((position[1] / d * rows as f64) as usize).min(rows - 1);
        Ok(ry * cols + cx)
    }

    /// Multipath components for a UE position: line-of-sight plus one path
    /// per scatterer of the UE's generator zone, strongest `max_paths` kept.
    pub fn paths_for(&self, ue_position: [f64; 3]) -> Result<Vec<PathComponent>> {
        let zone = self.generator_zone_of(ue_position)?;
        let lambda = self.config.wavelength();
        let ploss = self.config.pathloss_exponent;
        let two_pi = 2.0 * std::f64::consts::PI;

        let mut paths = Vec::with_capacity(self.config.scatterers_per_zone + 1);
        let los_len = norm3(sub3(ue_position, self.bs_position));
        let (az, el) = departure_angles(self.bs_position, ue_position);
        paths.push(PathComponent {
            gain_amplitude: los_len.powf(-ploss / 2.0),
            gain_phase: (two_pi * los_len / lambda).rem_euclid(two_pi),
            azimuth_aod: az,
            elevation_aod: el,
            delay: los_len / SPEED_OF_LIGHT,
        });
        for s in self.scatterers.iter().filter(|s| s.zone == zone) {
            let len = norm3(sub3(s.position, self.bs_position))
                + norm3(sub3(ue_position, s.position));
            let (az, el) = departure_angles(self.bs_position, s.position);
            paths.push(PathComponent {
                gain_amplitude: len.powf(-ploss / 2.0),
                gain_phase: (s.phase + two_pi * len / lambda).rem_euclid(two_pi),
                azimuth_aod: az,
                elevation_aod: el,
                delay: len / SPEED_OF_LIGHT,
            });
        }
        if paths.len() > self.config.max_paths {
            paths.sort_by(|a, b| b.gain_amplitude.partial_cmp(&a.gain_amplitude).unwrap());
            paths.truncate(self.config.max_paths);
        }
        Ok(paths)
    }

    /// Worst-case path delay over the whole cell (all UE positions, all
    /// scatterers). Used to validate the delay-domain truncation budget.
    pub fn max_path_delay(&self) -> f64 {
        let (w, d) = self.config.cell_extent;
        let corners = [
            [0.0, 0.0, UE_HEIGHT],
            [w, 0.0, UE_HEIGHT],
            [0.0, d, UE_HEIGHT],
            [w, d, UE_HEIGHT],
        ];
        let mut max_len: f64 = corners
            .iter()
            .map(|&c| norm3(sub3(c, self.bs_position)))
            .fold(0.0, f64::max);
        for s in &self.scatterers {
            let to_bs = norm3(sub3(s.position, self.bs_position));
            let to_ue = corners
                .iter()
                .map(|&c| norm3(sub3(c, s.position)))
                .fold(0.0, f64::max);
            max_len = max_len.max(to_bs + to_ue);
        }
        max_len / SPEED_OF_LIGHT
    }
}

/// Wideband channel synthesis for a UE position:
/// `h_k = sum_l alpha_l exp(-j 2 pi f_k tau_l) a(phi_l)` with
/// `f_k = k W / K`, `k = 0..K-1`.
pub fn synthesize_channel(scene: &Scene, ue_position: [f64; 3]) -> Result<ChannelSample> {
    let paths = scene.paths_for(ue_position)?;
    let cfg = scene.config();
    let n_t = cfg.array.n_t();
    let k_count = cfg.num_subcarriers;
    let mut channel: Array2<Complex64> = Array2::zeros((n_t, k_count));
    for path in &paths {
        let steering = array_response(&cfg.array, path.azimuth_aod, path.elevation_aod);
        let gain = path.gain();
        for k in 0..k_count {
            let f_k = k as f64 * cfg.bandwidth / k_count as f64;
            let rotation =
                Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f_k * path.delay);
            let coeff = gain * rotation;
            for n in 0..n_t {
                channel[(n, k)] += coeff * steering[n];
            }
        }
    }
    Ok(ChannelSample {
        position: ue_position,
        channel,
    })
}

/// Karhunen-Loeve zone subspace: orthonormal basis columns and positive,
/// non-increasing eigenvalues.
#[derive(Debug, Clone)]
pub struct ZoneSubspace {
    basis: Array2<Complex64>,
    eigenvalues: Vec<f64>,
}

impl ZoneSubspace {
    pub fn new(basis: Array2<Complex64>, eigenvalues: Vec<f64>) -> Result<Self> {
        if basis.ncols() != eigenvalues.len() || basis.ncols() == 0 {
            return Err(Error::data("basis columns must match eigenvalue count"));
        }
        for w in eigenvalues.windows(2) {
            if w[1] > w[0] {
                return Err(Error::data("eigenvalues must be non-increasing"));
            }
        }
        if eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::data("eigenvalues must be positive"));
        }
        let r = basis.ncols();
        for p in 0..r {
            for q in 0..r {
                let dot: Complex64 = basis
                    .column(p)
                    .iter()
                    .zip(basis.column(q).iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let expect = if p == q { 1.0 } else { 0.0 };
                if (dot - Complex64::new(expect, 0.0)).norm() > 1e-10 {
                    return Err(Error::data("basis columns are not orthonormal"));
                }
            }
        }
        Ok(Self { basis, eigenvalues })
    }

    pub fn basis(&self) -> &Array2<Complex64> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Ambient dimension D.
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// The covariance `V diag(lambda) V^H` this subspace induces.
    pub fn covariance(&self) -> Array2<Complex64> {
        let d = self.dim();
        let mut c = Array2::zeros((d, d));
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let col = self.basis.column(k);
            for i in 0..d {
                for j in 0..d {
                    c[(i, j)] += col[i] * l * col[j].conj();
                }
            }
        }
        c
    }
}

/// Draws `count` channels `h = V diag(sqrt(lambda)) w` with `w` i.i.d.
/// circularly-symmetric complex standard normal.
pub fn generate_kl_channels(
    subspace: &ZoneSubspace,
    count: usize,
    seed: u64,
) -> Vec<Array1<Complex64>> {
    let mut rng = rng::stream(seed);
    let sqrt_l: Vec<f64> = subspace.eigenvalues.iter().map(|l| l.sqrt()).collect();
    let d = subspace.dim();
    (0..count)
        .map(|_| {
            let mut h = Array1::zeros(d);
            for (k, &s) in sqrt_l.iter().enumerate() {
                let w = rng::complex_standard_normal(&mut rng) * s;
                let col = subspace.basis.column(k);
                for i in 0..d {
                    h[i] += col[i] * w;
                }
            }
            h
        })
        .collect()
}

/// Estimates a zone subspace from samples: eigendecomposition of the
/// second-moment matrix, keeping the smallest rank whose eigenvalue sum
/// reaches `energy_fraction` of the total.
pub fn estimate_zone_subspace(
    channels: &[Array1<Complex64>],
    energy_fraction: f64,
) -> Result<ZoneSubspace> {
    if channels.len() < 2 {
        return Err(Error::data("subspace estimation requires at least 2 samples"));
    }
    if !(energy_fraction > 0.0 && energy_fraction <= 1.0) {
        return Err(Error::config("energy fraction must lie in (0, 1]"));
    }
    let d = channels[0].len();
    if channels.iter().any(|h| h.len() != d) {
        return Err(Error::data("all samples must share the same dimension"));
    }
    let mut cov: Array2<Complex64> = Array2::zeros((d, d));
    for h in channels {
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] += h[i] * h[j].conj();
            }
        }
    }
    let n = channels.len() as f64;
    cov.mapv_inplace(|z| z / n);
    let total_energy: f64 = (0..d).map(|i| cov[(i, i)].re).sum();
    if total_energy <= 0.0 {
        return Err(Error::data("cannot estimate a subspace from all-zero samples"));
    }

    let (eigs, vecs) = hermitian_eigen(&cov)?;
    let positive_floor = eigs[0] * 1e-14;
    let total: f64 = eigs.iter().map(|&l| l.max(0.0)).sum();
    let mut rank = 0;
    let mut cumulative = 0.0;
    for &l in &eigs {
        if l <= positive_floor {
            break;
        }
        rank += 1;
        cumulative += l;
        if cumulative >= energy_fraction * total - 1e-12 * total {
            break;
        }
    }
    if rank == 0 {
        return Err(Error::data("no positive eigenvalues in sample covariance"));
    }
    let basis = vecs.slice(ndarray::s![.., 0..rank]).to_owned();
    ZoneSubspace::new(basis, eigs[0..rank].to_vec())
}

//! UE mobility, zone-switch counting, and model-download overhead.
//!
//! A random-waypoint walk samples UE positions on a fixed clock. The
//! classified zone sequence yields the zone-switch count `N_zs`, the
//! switch rate, and — under a choice of encoder-caching policy — the
//! model-parameter transmission rate (MPTR, parameters per second) and
//! the model-parameter update rate (MPUR, switches per second).

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;
use crate::zoning::{classify_position, ZoneId, ZonePartition};

/// UE height used when classifying 2-D trajectory points.
const TRAJECTORY_HEIGHT: f64 = 1.5;

/// Random-waypoint walk parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityConfig {
    /// UE speed, meters per second.
    pub speed: f64,
    /// Observation horizon T, seconds.
    pub horizon: f64,
    /// Sampling interval, seconds.
    pub step: f64,
    /// Walk region (extent along x, extent along y), meters.
    pub region: (f64, f64),
    pub seed: u64,
}

impl Default for MobilityConfig {
    /// 10 km/h over a one-hour horizon, sampled once per second.
    fn default() -> Self {
        Self {
            speed: 10.0 / 3.6,
            horizon: 3600.0,
            step: 1.0,
            region: (120.0, 120.0),
            seed: 0,
        }
    }
}

impl MobilityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed > 0.0) {
            return Err(Error::config("mobility speed must be positive"));
        }
        if !(self.step > 0.0) {
            return Err(Error::config("mobility sampling interval must be positive"));
        }
        if self.horizon < self.step {
            return Err(Error::config("mobility horizon must cover at least one step"));
        }
        if !(self.region.0 > 0.0 && self.region.1 > 0.0) {
            return Err(Error::config("mobility region must have positive area"));
        }
        Ok(())
    }
}

/// One time-stamped trajectory point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub time: f64,
    pub position: [f64; 2],
}

/// A sampled UE walk.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    /// Total distance walked over the horizon, meters.
    pub total_distance: f64,
}

impl Trajectory {
    /// Observation span `t_P - t_1`, seconds.
    pub fn span(&self) -> f64 {
        self.samples.last().map(|s| s.time).unwrap_or(0.0)
            - self.samples.first().map(|s| s.time).unwrap_or(0.0)
    }
}

/// Simulates a random-waypoint walk: pick a uniform destination in the
/// region, move toward it in straight-line steps of `speed * step`, pick
/// a new destination on arrival (continuing within the same step), and
/// record the position every `step` seconds for
/// `P = floor(horizon / step) + 1` samples.
pub fn simulate_trajectory(config: &MobilityConfig) -> Result<Trajectory> {
    config.validate()?;
    let (w, d) = config.region;
    let mut r = rng::stream(config.seed);
    let mut pos = [r.gen_range(0.0..w), r.gen_range(0.0..d)];
    let mut dest = [r.gen_range(0.0..w), r.gen_range(0.0..d)];

    let steps = (config.horizon / config.step).floor() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(TrajectorySample {
        time: 0.0,
        position: pos,
    });
    let mut total_distance = 0.0;
    for p in 1..=steps {
        let mut budget = config.speed * config.step;
        total_distance += budget;
        while budget > 0.0 {
            let dx = dest[0] - pos[0];
            let dy = dest[1] - pos[1];
            let remaining = (dx * dx + dy * dy).sqrt();
            if remaining > budget {
                let f = budget / remaining;
                pos[0] += dx * f;
                pos[1] += dy * f;
                budget = 0.0;
            } else {
                pos = dest;
                budget -= remaining;
                dest = [r.gen_range(0.0..w), r.gen_range(0.0..d)];
            }
        }
        samples.push(TrajectorySample {
            time: p as f64 * config.step,
            position: pos,
        });
    }
    Ok(Trajectory {
        samples,
        total_distance,
    })
}

/// Zone-switch statistics of one classified trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchStats {
    /// Zone of every trajectory sample, in order.
    pub zone_sequence: Vec<ZoneId>,
    /// Number of consecutive sample pairs with differing zones.
    pub num_switches: u64,
    /// Observation span `t_P - t_1`, seconds.
    pub horizon: f64,
}

impl SwitchStats {
    /// Zone-switch rate `r_zs = N_zs / horizon`, per second.
    pub fn switch_rate(&self) -> f64 {
        self.num_switches as f64 / self.horizon
    }

    /// Mean dwell time between switches, seconds; `None` when the
    /// trajectory never switches.
    pub fn mean_dwell(&self) -> Option<f64> {
        if self.num_switches == 0 {
            None
        } else {
            Some(self.horizon / self.num_switches as f64)
        }
    }
}

/// Number of adjacent unequal pairs in a zone sequence.
pub fn count_switches(zones: &[ZoneId]) -> u64 {
    zones.windows(2).filter(|w| w[0] != w[1]).count() as u64
}

/// Classifies every trajectory sample and counts zone switches.
pub fn count_zone_switches(trajectory: &Trajectory, partition: &ZonePartition) -> Result<SwitchStats> {
    if trajectory.samples.len() < 2 {
        return Err(Error::data(
            "switch counting needs a trajectory with at least 2 samples",
        ));
    }
    let zone_sequence: Vec<ZoneId> = trajectory
        .samples
        .iter()
        .map(|s| classify_position(partition, [s.position[0], s.position[1], TRAJECTORY_HEIGHT]))
        .collect();
    let num_switches = count_switches(&zone_sequence);
    Ok(SwitchStats {
        num_switches,
        horizon: trajectory.span(),
        zone_sequence,
    })
}

/// Encoder-download bookkeeping policy at the UE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CachePolicy {
    /// Download every zone encoder once up front.
    DownloadAllOnce,
    /// Keep the `capacity` most recently used encoders; a zone switch to
    /// an uncached encoder triggers a download. Capacity 1 re-downloads
    /// on every switch.
    Cache { capacity: usize },
}

impl CachePolicy {
    /// The per-switch policy of a single-encoder UE.
    pub fn per_switch() -> Self {
        CachePolicy::Cache { capacity: 1 }
    }

    pub fn name(&self) -> String {
        match self {
            CachePolicy::DownloadAllOnce => "download-all-once".into(),
            CachePolicy::Cache { capacity: 1 } => "per-switch".into(),
            CachePolicy::Cache { capacity } => format!("cache({capacity})"),
        }
    }
}

/// Download and update rates under one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct OverheadReport {
    pub policy: CachePolicy,
    /// Encoder payload per download, parameters.
    pub encoder_params: u64,
    /// Zone count B.
    pub num_zones: usize,
    /// Download events over the horizon.
    pub downloads: u64,
    /// Model-parameter transmission rate, parameters per second.
    pub mptr: f64,
    /// Model-parameter update rate (= zone-switch rate), per second.
    pub mpur: f64,
}

/// Replays a zone sequence against a least-recently-used cache of the
/// given capacity, returning the miss count (first access counts).
pub fn lru_miss_count(zones: &[ZoneId], capacity: usize) -> u64 {
    debug_assert!(capacity >= 1);
    let mut cache: Vec<ZoneId> = Vec::with_capacity(capacity);
    let mut misses = 0;
    for &z in zones {
        if let Some(idx) = cache.iter().position(|&c| c == z) {
            cache.remove(idx);
        } else {
            misses += 1;
            if cache.len() == capacity {
                cache.pop();
            }
        }
        cache.insert(0, z);
    }
    misses
}

/// Computes MPUR and MPTR for one classified trajectory.
///
/// `encoder_params` is the per-zone download payload V and `horizon` the
/// amortization window T. Download-all-once transmits `B * V` once
/// (`MPTR = B V / T`); cache policies replay the zone sequence and
/// transmit V per miss, the initial download included.
pub fn compute_overhead(
    encoder_params: u64,
    num_zones: usize,
    stats: &SwitchStats,
    policy: CachePolicy,
    horizon: f64,
) -> Result<OverheadReport> {
    if num_zones == 0 {
        return Err(Error::config("overhead needs at least one zone"));
    }
    if !(horizon > 0.0) {
        return Err(Error::config("overhead horizon must be positive"));
    }
    if stats.zone_sequence.iter().any(|z| z.0 >= num_zones) {
        return Err(Error::data(
            "zone sequence references a zone outside the partition",
        ));
    }
    let downloads = match policy {
        CachePolicy::DownloadAllOnce => num_zones as u64,
        CachePolicy::Cache { capacity } => {
            if capacity < 1 || capacity > num_zones {
                return Err(Error::config(format!(
                    "cache capacity {capacity} outside 1..={num_zones}"
                )));
            }
            lru_miss_count(&stats.zone_sequence, capacity)
        }
    };
    Ok(OverheadReport {
        policy,
        encoder_params,
        num_zones,
        downloads,
        mptr: downloads as f64 * encoder_params as f64 / horizon,
        mpur: stats.num_switches as f64 / horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoning::ZonePartition;

    fn zones(seq: &[usize]) -> Vec<ZoneId> {
        seq.iter().map(|&z| ZoneId(z)).collect()
    }

    fn stats(seq: &[usize], horizon: f64) -> SwitchStats {
        let zone_sequence = zones(seq);
        let num_switches = count_switches(&zone_sequence);
        SwitchStats {
            zone_sequence,
            num_switches,
            horizon,
        }
    }

    #[test]
    fn trajectory_stays_in_region_and_respects_speed() {
        let cfg = MobilityConfig {
            horizon: 600.0,
            region: (80.0, 50.0),
            seed: 3,
            ..MobilityConfig::default()
        };
        let t = simulate_trajectory(&cfg).unwrap();
        assert_eq!(t.samples.len(), 601);
        let max_step = cfg.speed * cfg.step + 1e-9;
        for pair in t.samples.windows(2) {
            assert!(pair[1].time > pair[0].time);
            let dx = pair[1].position[0] - pair[0].position[0];
            let dy = pair[1].position[1] - pair[0].position[1];
            assert!((dx * dx + dy * dy).sqrt() <= max_step);
        }
        for s in &t.samples {
            assert!(s.position[0] >= 0.0 && s.position[0] <= 80.0);
            assert!(s.position[1] >= 0.0 && s.position[1] <= 50.0);
        }
    }

    #[test]
    fn hour_at_ten_kmh_walks_ten_kilometers() {
        let cfg = MobilityConfig {
            seed: 5,
            ..MobilityConfig::default()
        };
        let t = simulate_trajectory(&cfg).unwrap();
        let step_len = cfg.speed * cfg.step;
        assert!((t.total_distance - 10_000.0).abs() <= step_len + 1e-6);
    }

    #[test]
    fn same_seed_reproduces_trajectory() {
        let cfg = MobilityConfig {
            horizon: 120.0,
            seed: 11,
            ..MobilityConfig::default()
        };
        assert_eq!(
            simulate_trajectory(&cfg).unwrap(),
            simulate_trajectory(&cfg).unwrap()
        );
        let other = MobilityConfig { seed: 12, ..cfg };
        assert_ne!(
            simulate_trajectory(&cfg).unwrap(),
            simulate_trajectory(&other).unwrap()
        );
    }

    #[test]
    fn switch_counting_on_known_sequence() {
        // Zone labels 1,1,2,2,1 (0-based ids 0,0,1,1,0) over 4 seconds.
        let s = stats(&[0, 0, 1, 1, 0], 4.0);
        assert_eq!(s.num_switches, 2);
        assert!((s.switch_rate() - 0.5).abs() < 1e-15);
        assert_eq!(s.mean_dwell(), Some(2.0));
    }

    #[test]
    fn single_zone_never_switches() {
        let s = stats(&[0; 100], 99.0);
        assert_eq!(s.num_switches, 0);
        assert_eq!(s.switch_rate(), 0.0);
        assert_eq!(s.mean_dwell(), None);
        let o = compute_overhead(1000, 1, &s, CachePolicy::per_switch(), 99.0).unwrap();
        assert_eq!(o.mpur, 0.0);
        assert_eq!(o.downloads, 1);
    }

    #[test]
    fn straight_crossing_counts_one_switch() {
        // Two centroids; the Voronoi boundary is x = 5. A straight walk
        // from x=1 to x=9 crosses exactly once.
        let part = ZonePartition::new(vec![[0.0, 0.0], [10.0, 0.0]]).unwrap();
        let samples: Vec<TrajectorySample> = (0..9)
            .map(|i| TrajectorySample {
                time: i as f64,
                position: [1.0 + i as f64, 0.0],
            })
            .collect();
        let t = Trajectory {
            samples,
            total_distance: 8.0,
        };
        let s = count_zone_switches(&t, &part).unwrap();
        assert_eq!(s.num_switches, 1);
        assert_eq!(s.horizon, 8.0);
    }

    #[test]
    fn short_trajectory_rejected() {
        let part = ZonePartition::new(vec![[0.0, 0.0]]).unwrap();
        let t = Trajectory {
            samples: vec![TrajectorySample {
                time: 0.0,
                position: [1.0, 1.0],
            }],
            total_distance: 0.0,
        };
        assert!(count_zone_switches(&t, &part).is_err());
    }

    #[test]
    fn download_all_once_reference_rates() {
        let s = stats(&[0], 3600.0);
        let o = compute_overhead(4_262_976, 1, &s, CachePolicy::DownloadAllOnce, 3600.0).unwrap();
        assert!((o.mptr - 1184.16).abs() < 0.01);
        let o = compute_overhead(34_103_360, 1, &s, CachePolicy::DownloadAllOnce, 3600.0).unwrap();
        assert!((o.mptr - 9473.16).abs() < 0.01);
        let o = compute_overhead(4_262_976, 8, &s, CachePolicy::DownloadAllOnce, 3600.0).unwrap();
        assert!((o.mptr - 9473.28).abs() < 0.01);
    }

    #[test]
    fn per_switch_counts_initial_download() {
        let s = stats(&[0, 1, 0, 1], 3.0);
        assert_eq!(s.num_switches, 3);
        let o = compute_overhead(100, 2, &s, CachePolicy::per_switch(), 3.0).unwrap();
        // 1 initial + 3 switches = 4 downloads.
        assert_eq!(o.downloads, 4);
        assert!((o.mptr - 400.0 / 3.0).abs() < 1e-12);
        assert!((o.mpur - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lru_replay_on_known_sequence() {
        // Sequence 0 1 2 0 1 with capacity 2:
        // 0 miss, 1 miss, 2 miss (evict 0), 0 miss (evict 1), 1 miss.
        let seq = zones(&[0, 1, 2, 0, 1]);
        assert_eq!(lru_miss_count(&seq, 2), 5);
        // Capacity 3 holds everything: 3 cold misses only.
        assert_eq!(lru_miss_count(&seq, 3), 3);
        // Capacity 1 = 1 + switches.
        assert_eq!(lru_miss_count(&seq, 1), 1 + count_switches(&seq));
    }

    #[test]
    fn full_capacity_cache_misses_distinct_zones_only() {
        let seq = zones(&[3, 1, 3, 2, 1, 1, 0, 3, 2]);
        let distinct = 4;
        assert_eq!(lru_miss_count(&seq, 4), distinct);
        assert_eq!(lru_miss_count(&seq, 9), distinct);
    }

    #[test]
    fn cache_misses_monotone_in_capacity() {
        for seed in 0..10u64 {
            let mut r = rng::stream(seed);
            let b = 6;
            let seq: Vec<ZoneId> = (0..500).map(|_| ZoneId(r.gen_range(0..b))).collect();
            let mut last = u64::MAX;
            for c in 1..=b {
                let m = lru_miss_count(&seq, c);
                assert!(m <= last, "capacity {c} misses {m} > {last}");
                last = m;
            }
        }
    }

    #[test]
    fn repeated_samples_change_nothing() {
        let base = zones(&[0, 1, 2, 1]);
        let padded = zones(&[0, 0, 0, 1, 1, 2, 2, 2, 1, 1]);
        assert_eq!(count_switches(&base), count_switches(&padded));
        for c in 1..=3 {
            assert_eq!(lru_miss_count(&base, c), lru_miss_count(&padded, c));
        }
    }

    #[test]
    fn overhead_validation() {
        let s = stats(&[0, 1], 1.0);
        assert!(compute_overhead(10, 2, &s, CachePolicy::Cache { capacity: 0 }, 1.0).is_err());
        assert!(compute_overhead(10, 2, &s, CachePolicy::Cache { capacity: 3 }, 1.0).is_err());
        assert!(compute_overhead(10, 0, &s, CachePolicy::DownloadAllOnce, 1.0).is_err());
        assert!(compute_overhead(10, 1, &s, CachePolicy::DownloadAllOnce, 1.0).is_err());
        assert!(compute_overhead(10, 2, &s, CachePolicy::DownloadAllOnce, 0.0).is_err());
    }

    #[test]
    fn invalid_mobility_configs_rejected() {
        let ok = MobilityConfig::default();
        assert!(simulate_trajectory(&MobilityConfig { speed: 0.0, ..ok.clone() }).is_err());
        assert!(simulate_trajectory(&MobilityConfig { step: -1.0, ..ok.clone() }).is_err());
        assert!(simulate_trajectory(&MobilityConfig { horizon: 0.5, ..ok.clone() }).is_err());
        assert!(simulate_trajectory(&MobilityConfig { region: (0.0, 1.0), ..ok }).is_err());
    }

    #[test]
    fn policy_names() {
        assert_eq!(CachePolicy::DownloadAllOnce.name(), "download-all-once");
        assert_eq!(CachePolicy::per_switch().name(), "per-switch");
        assert_eq!(CachePolicy::Cache { capacity: 4 }.name(), "cache(4)");
    }
}

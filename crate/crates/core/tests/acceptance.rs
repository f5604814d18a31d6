//! Acceptance gate: ten end-to-end checks with pinned tolerances.
//!
//! Each criterion is one test; the harness line (`ok`/`FAILED`) is the
//! per-criterion verdict, and each test also prints a `criterion NN …:
//! PASS` line with the measured numbers (visible under `--nocapture`).
//!
//! Run with: `cargo test -p zonecsi --test acceptance -- --nocapture`

use std::sync::OnceLock;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use zonecsi::autoenc::{
    count_multiplications, count_parameters, gradient_check, init_model, reconstruct, train,
    Activation, LayerSpec, Mode, TrainConfig,
};
use zonecsi::config::ExperimentConfig;
use zonecsi::eval::nmse;
use zonecsi::experiment::{run_experiment, ExperimentSummary};
use zonecsi::io::dataset::{dataset_from_bytes, dataset_to_bytes};
use zonecsi::io::model::{bundle_from_bytes, bundle_to_bytes, ModelBundle};
use zonecsi::mobility::{
    compute_overhead, count_switches, count_zone_switches, simulate_trajectory, CachePolicy,
    MobilityConfig, SwitchStats, Trajectory, TrajectorySample,
};
use zonecsi::rng;
use zonecsi::scene::{generate_kl_channels, ChannelSample, ZoneSubspace};
use zonecsi::transform::{
    devectorize_and_embed, truncate_and_vectorize, unitary_dft, AngularDelayTransform,
    AngularDelayVector, Normalizer,
};
use zonecsi::zoning::{learn_partition, ZoneId, ZonePartition};
use zonecsi::Result;

/// Reference architecture: N_t = 64, N_c = 32 -> D = 4096, L = 64.
fn reference_spec(beta: usize) -> LayerSpec {
    LayerSpec::new(4096, 64, beta, Activation::Tanh).unwrap()
}

#[test]
fn criterion_01_exact_parameter_and_multiplication_counts() {
    // Width factor 16.
    let spec16 = reference_spec(16);
    let p16 = count_parameters(&spec16);
    let m16 = count_multiplications(&spec16);
    assert_eq!(p16.encoder, 4_262_976);
    assert_eq!(p16.total(), 8_529_984);
    assert_eq!(m16.encoder, 4_261_888);

    // Width factor 128.
    let spec128 = reference_spec(128);
    let p128 = count_parameters(&spec128);
    let m128 = count_multiplications(&spec128);
    assert_eq!(p128.encoder, 34_103_360);
    assert_eq!(p128.total(), 68_210_752);
    assert_eq!(m128.encoder, 34_095_104);

    // Eight zones at width 16: stored parameters scale by 8; the
    // per-feedback multiplication count does not (one encoder runs).
    assert_eq!(8 * p16.encoder, 34_103_808);
    assert_eq!(8 * p16.total(), 68_239_872);
    assert_eq!(m16.encoder, 4_261_888);

    println!(
        "criterion 01 exact counts: PASS \
         (b16 {}/{}/{}, b128 {}/{}/{}, 8-zone {}/{})",
        p16.encoder,
        p16.total(),
        m16.encoder,
        p128.encoder,
        p128.total(),
        m128.encoder,
        8 * p16.encoder,
        8 * p16.total()
    );
}

#[test]
fn criterion_02_mptr_reference_values() {
    let stats_for = |b: usize| SwitchStats {
        zone_sequence: vec![ZoneId(0), ZoneId(b - 1)],
        num_switches: 1,
        horizon: 3600.0,
    };
    let mptr = |encoder_params: u64, b: usize| {
        compute_overhead(
            encoder_params,
            b,
            &stats_for(b),
            CachePolicy::DownloadAllOnce,
            3600.0,
        )
        .unwrap()
        .mptr
    };

    let rows = [
        (count_parameters(&reference_spec(16)).encoder, 1, 1184.16),
        (count_parameters(&reference_spec(128)).encoder, 1, 9473.15),
        (count_parameters(&reference_spec(16)).encoder, 8, 9473.28),
    ];
    let mut measured = Vec::new();
    for &(params, b, expected) in &rows {
        let got = mptr(params, b);
        assert!(
            (got - expected).abs() <= 0.01,
            "MPTR for {params} params, {b} zones: got {got}, expected {expected} +/- 0.01"
        );
        measured.push(got);
    }
    println!(
        "criterion 02 MPTR reference: PASS ({:.2}, {:.2}, {:.2} param/s, tol 0.01)",
        measured[0], measured[1], measured[2]
    );
}

#[test]
fn criterion_03_gradients_match_finite_differences() {
    // 524 trainable parameters spanning every group (two dense layers
    // plus scale/shift on both sides), batch 4, double precision.
    let mut probed_total = 0usize;
    let mut worst_overall = 0.0f64;
    for (activation, seed) in [(Activation::Tanh, 31u64), (Activation::Linear, 32)] {
        let spec = LayerSpec::new(24, 4, 2, activation).unwrap();
        let model = init_model(&spec, seed).unwrap();
        let mut r = rng::substream(seed, 0xfd);
        let x = Array2::from_shape_fn((4, spec.input_dim), |_| rng::standard_normal(&mut r));
        for mode in [Mode::Train, Mode::Infer] {
            let (worst, count) = gradient_check(&model, &x, mode, 1e-4).unwrap();
            assert!(
                worst < 1e-5,
                "{activation:?}/{mode:?}: worst relative error {worst:.3e} >= 1e-5"
            );
            assert!(count >= 200, "only {count} parameters probed");
            probed_total += count;
            worst_overall = worst_overall.max(worst);
        }
    }
    println!(
        "criterion 03 gradient check: PASS \
         (worst relative error {worst_overall:.3e} < 1e-5 over {probed_total} probes)"
    );
}

#[test]
fn criterion_04_transform_invariants() {
    let n_t = 64usize;
    let k = 32usize;

    // Unitarity of the DFT factor: max |F^H F - I| <= 1e-12.
    let mut unitarity_dev = 0.0f64;
    for n in [n_t, k] {
        let f = unitary_dft(n).unwrap();
        let gram = f.t().mapv(|z| z.conj()).dot(&f);
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                unitarity_dev = unitarity_dev.max((gram[[i, j]] - expected).norm());
            }
        }
    }
    assert!(unitarity_dev <= 1e-12, "unitarity deviation {unitarity_dev:.3e}");

    // Parseval: the angular-delay map preserves energy to 1e-10 relative.
    let mut r = rng::stream(41);
    let h = Array2::from_shape_fn((n_t, k), |_| rng::complex_standard_normal(&mut r));
    let transform = AngularDelayTransform::new(n_t, k).unwrap();
    let a = transform.to_angular_delay(&h).unwrap();
    let before: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    let after: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let parseval_rel = (before - after).abs() / before;
    assert!(parseval_rel <= 1e-10, "Parseval deviation {parseval_rel:.3e}");

    // Truncation/vectorization round trip is exact on retained content.
    let n_c = 16usize;
    let v = truncate_and_vectorize(&a, n_c).unwrap();
    let embedded = devectorize_and_embed(&v, k).unwrap();
    for n in 0..n_t {
        for c in 0..n_c {
            assert_eq!(embedded[[n, c]], a[[n, c]], "retained entry ({n},{c}) changed");
        }
        for c in n_c..k {
            assert_eq!(embedded[[n, c]], Complex64::new(0.0, 0.0));
        }
    }
    let again = truncate_and_vectorize(&embedded, n_c).unwrap();
    assert_eq!(again, v, "re-truncation differs");

    println!(
        "criterion 04 transform invariants: PASS \
         (unitarity {unitarity_dev:.2e} <= 1e-12, Parseval {parseval_rel:.2e} <= 1e-10, round trip exact)"
    );
}

/// Configuration for the zone-gain study: 8-generator-zone scene,
/// 8,000 / 2,000 split, compression 1/64 at width factor 4.
///
/// Scene choices that make the gain measurable at desk scale: the
/// 120 x 60 m cell tiles its 8 generator zones into 30 m squares, which
/// a k-means partition of the uniform UE grid recovers closely; pathloss
/// is flattened so all paths carry equal energy and the mean squared
/// training error aligns with the relative evaluation metric; three
/// scatterers per zone keep each zone's subspace small relative to the
/// codeword length. Linear activation makes the trained models converge
/// toward their rank-L principal-subspace optima within the budget, so
/// the comparison measures the zone structure rather than optimizer
/// progress. Both methods get identical budgets (same epochs over
/// disjoint zone buckets = same per-sample gradient exposure).
fn gain_config() -> ExperimentConfig {
    ExperimentConfig::from_toml(
        r#"
        [scene]
        array_horizontal = 8
        array_vertical = 2
        subcarriers = 32
        ue_grid_x = 100
        ue_grid_y = 100
        generator_zones = 8
        scatterers_per_zone = 3
        cell_width_m = 120.0
        cell_depth_m = 60.0
        pathloss_exponent = 0.0

        [transform]
        n_c = 16

        [model]
        l = 8
        beta = 4
        activation = "linear"

        [zones]
        b = [1, 8]

        [train]
        epochs = 200
        batch = 32
        split_train_count = 8000

        [mobility]
        horizon_s = 600.0
        "#,
    )
    .unwrap()
}

const GAIN_SEEDS: [u64; 3] = [11, 12, 13];

fn gain_runs() -> &'static Vec<ExperimentSummary> {
    static RUNS: OnceLock<Vec<ExperimentSummary>> = OnceLock::new();
    RUNS.get_or_init(|| {
        GAIN_SEEDS
            .iter()
            .map(|&master| {
                let mut config = gain_config();
                config.override_master_seed(master);
                let dir = tempfile::tempdir().expect("tempdir");
                run_experiment(&config, dir.path()).expect("zone-gain experiment")
            })
            .collect()
    })
}

#[test]
fn criterion_05_zone_gain_at_least_3_db() {
    let mut gains = Vec::new();
    for (summary, seed) in gain_runs().iter().zip(GAIN_SEEDS) {
        let one = &summary.methods[0];
        let eight = &summary.methods[1];
        assert_eq!(one.num_zones, 1);
        assert_eq!(eight.num_zones, 8);
        let gain = one.position.mean_db - eight.position.mean_db;
        assert!(
            gain >= 3.0,
            "seed {seed}: 8-zone gain {gain:.2} dB < 3 dB \
             (zones-1 {:.2} dB, zones-8 {:.2} dB)",
            one.position.mean_db,
            eight.position.mean_db
        );
        gains.push(gain);
    }
    println!(
        "criterion 05 zone gain: PASS (gains {:.2}, {:.2}, {:.2} dB >= 3 dB on 3/3 seeds)",
        gains[0], gains[1], gains[2]
    );
}

#[test]
fn criterion_06_rank_one_kl_channels_reach_minus_30_db() {
    let n_t = 64usize;
    let mut r = rng::stream(401);
    let mut v = Array1::from_shape_fn(n_t, |_| rng::complex_standard_normal(&mut r));
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv_inplace(|z| z / norm);
    let subspace = ZoneSubspace::new(v.insert_axis(ndarray::Axis(1)), vec![1.0]).unwrap();

    let to_vec = |h: &Array1<Complex64>| AngularDelayVector {
        values: Array1::from_iter(h.iter().map(|z| z.re).chain(h.iter().map(|z| z.im))),
        n_t,
        n_c: 1,
    };
    let train_vecs: Vec<AngularDelayVector> =
        generate_kl_channels(&subspace, 512, 402).iter().map(to_vec).collect();
    let eval_vecs: Vec<AngularDelayVector> =
        generate_kl_channels(&subspace, 256, 403).iter().map(to_vec).collect();
    let normalizer = Normalizer::fit(train_vecs.iter()).unwrap();

    let spec = LayerSpec::new(2 * n_t, 64, 2, Activation::Linear).unwrap();
    let mut data = Array2::zeros((train_vecs.len(), spec.input_dim));
    for (i, vec) in train_vecs.iter().enumerate() {
        data.row_mut(i).assign(&normalizer.apply(vec).values);
    }
    let mut model = init_model(&spec, 404).unwrap();
    // Full-batch training: the rank-1 manifold is exactly representable,
    // so the only obstacle is gradient noise — remove it.
    let config = TrainConfig {
        epochs: 200,
        batch_size: data.nrows(),
        seed: 405,
        ..TrainConfig::default()
    };
    train(&mut model, &data, &config).unwrap();

    let mut mean_linear = 0.0;
    for vec in &eval_vecs {
        let batch = normalizer.apply(vec).values.insert_axis(ndarray::Axis(0));
        let recon = reconstruct(&model, &batch, Mode::Infer).unwrap();
        let est = normalizer.invert(&AngularDelayVector {
            values: recon.row(0).to_owned(),
            n_t,
            n_c: 1,
        });
        mean_linear += nmse(vec, &est).unwrap().linear;
    }
    mean_linear /= eval_vecs.len() as f64;
    let db = 10.0 * mean_linear.log10();
    assert!(db <= -30.0, "rank-1 KL NMSE {db:.2} dB > -30 dB after 200 epochs");
    println!("criterion 06 KL exactness: PASS ({db:.2} dB <= -30 dB within 200 epochs)");
}

#[test]
fn criterion_07_mobility_determinism_and_counting() {
    // Hand-constructed zone sequence [1,1,2,2,1] (1-based labels).
    let sequence = vec![ZoneId(0), ZoneId(0), ZoneId(1), ZoneId(1), ZoneId(0)];
    assert_eq!(count_switches(&sequence), 2);
    let stats = SwitchStats {
        zone_sequence: sequence,
        num_switches: 2,
        horizon: 4.0,
    };
    assert_eq!(stats.switch_rate(), 0.5, "r_zs must be exactly 2 / 4 s");

    // The same sequence through a real trajectory: two centroids split
    // the x axis at 5; walk x = 1,2,6,7,3 at 1 s steps.
    let partition = ZonePartition::new(vec![[0.0, 0.0], [10.0, 0.0]]).unwrap();
    let xs = [1.0, 2.0, 6.0, 7.0, 3.0];
    let trajectory = Trajectory {
        samples: xs
            .iter()
            .enumerate()
            .map(|(i, &x)| TrajectorySample {
                time: i as f64,
                position: [x, 0.0],
            })
            .collect(),
        total_distance: 11.0,
    };
    let walked = count_zone_switches(&trajectory, &partition).unwrap();
    assert_eq!(walked.num_switches, 2);
    assert_eq!(walked.switch_rate(), 0.5);
    assert_eq!(
        walked.zone_sequence,
        vec![ZoneId(0), ZoneId(0), ZoneId(1), ZoneId(1), ZoneId(0)]
    );

    // One zone: switching is impossible, so the update rate is exactly 0.
    let single = SwitchStats {
        zone_sequence: vec![ZoneId(0), ZoneId(0), ZoneId(0)],
        num_switches: 0,
        horizon: 2.0,
    };
    let report =
        compute_overhead(1000, 1, &single, CachePolicy::DownloadAllOnce, 2.0).unwrap();
    assert_eq!(report.mpur, 0.0, "B = 1 must give MPUR exactly 0");

    // LRU MPTR is monotone non-increasing in capacity on 10 random walks.
    let b = 6usize;
    let mut grid_points = Vec::new();
    let mut r = rng::stream(71);
    for _ in 0..600 {
        grid_points.push([
            rand::Rng::gen_range(&mut r, 0.0..120.0),
            rand::Rng::gen_range(&mut r, 0.0..120.0),
            1.5,
        ]);
    }
    let partition = learn_partition(&grid_points, b, 72).unwrap();
    for walk_seed in 0..10u64 {
        let trajectory = simulate_trajectory(&MobilityConfig {
            seed: 73 + walk_seed,
            horizon: 900.0,
            ..MobilityConfig::default()
        })
        .unwrap();
        let stats = count_zone_switches(&trajectory, &partition).unwrap();
        let mut previous = f64::INFINITY;
        for capacity in 1..=b {
            let o = compute_overhead(
                5000,
                b,
                &stats,
                CachePolicy::Cache { capacity },
                stats.horizon,
            )
            .unwrap();
            assert!(
                o.mptr <= previous + 1e-12,
                "walk {walk_seed}: MPTR rose from {previous} to {} at capacity {capacity}",
                o.mptr
            );
            previous = o.mptr;
        }
    }

    println!(
        "criterion 07 mobility counting: PASS \
         (N_zs=2, r_zs=0.5 exact; B=1 MPUR=0; LRU monotone on 10 walks)"
    );
}

#[test]
fn criterion_08_oracle_never_loses_to_position_routing() {
    let mut checked = 0usize;
    for (summary, seed) in gain_runs().iter().zip(GAIN_SEEDS) {
        for method in &summary.methods {
            assert!(
                method.oracle.mean_linear <= method.position.mean_linear + 1e-15,
                "seed {seed} {}: oracle {:.6e} > position {:.6e}",
                method.name,
                method.oracle.mean_linear,
                method.position.mean_linear
            );
            checked += 1;
        }
    }
    println!(
        "criterion 08 oracle dominance: PASS ({checked} method evaluations, \
         oracle mean linear NMSE <= position routing in every one)"
    );
}

fn random_bundle() -> ModelBundle {
    let spec = LayerSpec::new(24, 4, 2, Activation::Tanh).unwrap();
    let partition = ZonePartition::new(vec![[10.0, 20.0], [90.0, 40.0]]).unwrap();
    let models = vec![
        init_model(&spec, 81).unwrap(),
        init_model(&spec, 82).unwrap(),
    ];
    ModelBundle::new(3, 4, spec, partition, Normalizer::new(0.25).unwrap(), models).unwrap()
}

fn random_dataset(seed: u64) -> Vec<ChannelSample> {
    let mut r = rng::stream(seed);
    (0..5)
        .map(|i| ChannelSample {
            position: [i as f64, 2.0 * i as f64, 1.5],
            channel: Array2::from_shape_fn((4, 6), |_| {
                // Quantize to f32 so the round trip is exact.
                let z = rng::complex_standard_normal(&mut r);
                Complex64::new(z.re as f32 as f64, z.im as f32 as f64)
            }),
        })
        .collect()
}

#[test]
fn criterion_09_persistence_round_trips_and_fuzzed_headers() {
    // Bit-identical round trips.
    let samples = random_dataset(91);
    let bytes = dataset_to_bytes(&samples).unwrap();
    assert_eq!(dataset_from_bytes(&bytes).unwrap(), samples);
    let bytes_again = dataset_to_bytes(&dataset_from_bytes(&bytes).unwrap()).unwrap();
    assert_eq!(bytes, bytes_again, "dataset serialization is not stable");

    let bundle = random_bundle();
    let bundle_bytes = bundle_to_bytes(&bundle).unwrap();
    let reloaded = bundle_from_bytes(&bundle_bytes).unwrap();
    assert_eq!(bundle_to_bytes(&reloaded).unwrap(), bundle_bytes);

    // 1,000 fuzzed inputs: structured errors every time, no panics.
    let mut r = rng::stream(92);
    let mut cases = 0usize;
    let mut check = |result: Result<()>| {
        let err = result.expect_err("fuzzed input unexpectedly parsed");
        assert!(!err.to_string().is_empty());
        cases += 1;
    };
    let random_bytes = |r: &mut rand_chacha::ChaCha8Rng, len: usize| -> Vec<u8> {
        (0..len).map(|_| rand::Rng::gen::<u8>(r)).collect()
    };

    for i in 0..250usize {
        // Pure random blobs.
        let blob = random_bytes(&mut r, i % 96);
        check(dataset_from_bytes(&blob).map(|_| ()));
        check(bundle_from_bytes(&blob).map(|_| ()));
    }
    for _ in 0..125usize {
        // Valid magic, random header and tail: length arithmetic must
        // reject these before any large allocation.
        let zcd_len = 16 + rand::Rng::gen_range(&mut r, 0..64);
        let mut zcd = b"ZCD1".to_vec();
        zcd.extend(random_bytes(&mut r, zcd_len));
        check(dataset_from_bytes(&zcd).map(|_| ()));
        let zcm_len = 24 + rand::Rng::gen_range(&mut r, 0..64);
        let mut zcm = b"ZCM1".to_vec();
        zcm.extend(random_bytes(&mut r, zcm_len));
        check(bundle_from_bytes(&zcm).map(|_| ()));
    }
    for _ in 0..125usize {
        // Truncations and extensions of valid files.
        let cut = rand::Rng::gen_range(&mut r, 0..bytes.len());
        check(dataset_from_bytes(&bytes[..cut]).map(|_| ()));
        let cut = rand::Rng::gen_range(&mut r, 0..bundle_bytes.len());
        check(bundle_from_bytes(&bundle_bytes[..cut]).map(|_| ()));
    }
    assert_eq!(cases, 1000);
    println!(
        "criterion 09 persistence: PASS \
         (round trips bit-identical; {cases} fuzzed inputs -> structured errors, no crashes)"
    );
}

#[test]
fn criterion_10_end_to_end_reruns_are_byte_identical() {
    // Same scene as the zone-gain study, shortened training: the
    // criterion is about bytes, not model quality.
    let mut config = gain_config();
    config.train.epochs = 10;
    config.override_master_seed(17);

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_experiment(&config, dir_a.path()).unwrap();
    run_experiment(&config, dir_b.path()).unwrap();

    let mut compared = Vec::new();
    for name in [
        "dataset.zcd1",
        "bundle_zones-1.zcm1",
        "bundle_zones-8.zcm1",
        "report.csv",
        "cdf.csv",
        "manifest.txt",
    ] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        compared.push(name);
    }
    println!(
        "criterion 10 determinism: PASS ({} artifacts byte-identical across reruns)",
        compared.len()
    );
}

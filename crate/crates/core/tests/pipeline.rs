use ldlc_core::channel::{awgn_transmit, RngStream, StreamPurpose};
use ldlc_core::convergence::capacity_snr_db;
use ldlc_core::decoder::Decoder;
use ldlc_core::sim::{
    frame_information, run_convergence_experiment, run_ser_sweep, ExperimentConfig,
};
use ldlc_core::{
    generate_parity_check, parse_h, recover_integers, serialize_h, snr_to_sigma,
    validate_parity_check, DecoderConfig, Shaper, Structure, Variant,
};
use proptest::prelude::*;

fn structure() -> impl Strategy<Value = Structure> {
    prop_oneof![Just(Structure::Regular), Just(Structure::Triangular)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn text_format_round_trips(n in 60usize..200, d in prop_oneof![Just(3usize), Just(5)], seed in 0u64..1000, s in structure()) {
        let h = generate_parity_check(n, d, seed, s).unwrap();
        prop_assert!(validate_parity_check(&h, s).all_passed());
        let text = serialize_h(&h);
        let back = parse_h(&text).unwrap();
        prop_assert_eq!(&back, &h);
        prop_assert_eq!(serialize_h(&back), text);
    }

    #[test]
    fn shaped_words_stay_in_the_cube(seed in 0u64..1000, m in 2u32..12) {
        let h = generate_parity_check(150, 5, seed, Structure::Triangular).unwrap();
        let shaper = Shaper::new(&h).unwrap();
        let u = frame_information(150, m, seed, 0);
        let x = shaper.shape(&h, &u, m).unwrap().x;
        let half = m as f64 / 2.0;
        prop_assert!(x.iter().all(|&v| (-half..half).contains(&v)));
        prop_assert_eq!(recover_integers(&x, &h, m), u);
    }

    #[test]
    fn decoder_outputs_are_well_formed(seed in 0u64..1000, snr in 0.0f64..30.0, reference in any::<bool>()) {
        let h = generate_parity_check(64, 3, 5, Structure::Triangular).unwrap();
        let variant = if reference { Variant::Reference } else { Variant::Proposed };
        let decoder = Decoder::new(&h, DecoderConfig::new(3, 4, variant, 4)).unwrap();
        let sigma = snr_to_sigma(snr, 4);
        let x = Shaper::new(&h).unwrap().shape(&h, &frame_information(64, 4, seed, 0), 4).unwrap().x;
        let y = awgn_transmit(&x, sigma, &RngStream::new(seed, 0, StreamPurpose::Noise));
        let r = decoder.decode(&y, sigma * sigma).unwrap();
        prop_assert!(r.x_hat.iter().all(|v| v.is_finite()));
        prop_assert!(r.u_hat.iter().all(|&u| (0..4).contains(&u)));
        prop_assert_eq!(r.diagnostics.iterations.len(), 4);
        for s in &r.diagnostics.iterations {
            prop_assert!(s.v_light > 0.0 && s.v_unit > 0.0 && s.c_light > 0.0 && s.c_unit > 0.0);
        }
    }
}

/// Decoding errors depend on the noise only, not on which lattice point was sent.
#[test]
fn error_pattern_is_codeword_independent() {
    let h = generate_parity_check(300, 5, 8, Structure::Triangular).unwrap();
    let shaper = Shaper::new(&h).unwrap();
    let sigma = snr_to_sigma(15.0, 8);
    for variant in [Variant::Proposed, Variant::Reference] {
        let decoder = Decoder::new(&h, DecoderConfig::new(5, 8, variant, 8)).unwrap();
        let mut total = 0;
        for frame in 0..10 {
            let u = frame_information(300, 8, 2, frame);
            let x = shaper.shape(&h, &u, 8).unwrap().x;
            let noise = awgn_transmit(
                &vec![0.0; 300],
                sigma,
                &RngStream::new(2, frame, StreamPurpose::Noise),
            );
            let y: Vec<f64> = x.iter().zip(&noise).map(|(a, b)| a + b).collect();
            let sent = decoder.decode(&y, sigma * sigma).unwrap();
            let zero = decoder.decode(&noise, sigma * sigma).unwrap();
            let wrong_sent: Vec<bool> = u.iter().zip(&sent.u_hat).map(|(a, b)| a != b).collect();
            let wrong_zero: Vec<bool> = zero.u_hat.iter().map(|&b| b != 0).collect();
            assert_eq!(wrong_sent, wrong_zero, "{variant} frame {frame}");
            total += wrong_zero.iter().filter(|&&w| w).count();
        }
        assert!(total > 0, "{variant}: SNR too high to exercise errors");
    }
}

#[test]
fn high_snr_decodes_cleanly_on_both_structures() {
    for s in [Structure::Regular, Structure::Triangular] {
        let h = generate_parity_check(200, 5, 4, s).unwrap();
        let sigma = snr_to_sigma(30.0, 4);
        let b: Vec<i64> = frame_information(200, 4, 1, 0)
            .iter()
            .map(|v| v - 2)
            .collect();
        let x = ldlc_core::encode(&h, &b).unwrap();
        let y = awgn_transmit(&x, sigma, &RngStream::new(1, 0, StreamPurpose::Noise));
        for variant in [Variant::Proposed, Variant::Reference] {
            let decoder = Decoder::new(&h, DecoderConfig::new(5, 10, variant, 4)).unwrap();
            let r = decoder.decode(&y, sigma * sigma).unwrap();
            let expected: Vec<i64> = b.iter().map(|v| v.rem_euclid(4)).collect();
            assert_eq!(r.u_hat, expected, "{s:?} {variant}");
        }
    }
}

fn sweep_point(n: usize, d: usize, snr: f64, frames: u64) -> ldlc_core::sim::SerRecord {
    let h = generate_parity_check(n, d, 1, Structure::Triangular).unwrap();
    let mut config = ExperimentConfig::new(8, 10, Variant::Proposed, vec![snr]);
    config.max_frames = frames;
    config.target_errors = u64::MAX;
    run_ser_sweep(&h, &config).unwrap().remove(0)
}

#[test]
fn far_above_capacity_is_error_free() {
    let snr = capacity_snr_db(8, 3.0) + 6.0;
    let r = sweep_point(100, 7, snr, 100);
    assert_eq!((r.frames, r.errors), (100, 0));
}

#[test]
fn very_noisy_channel_is_a_random_guess() {
    let r = sweep_point(100, 7, -10.0, 20);
    assert!((r.ser / (7.0 / 8.0) - 1.0).abs() < 0.1, "ser {}", r.ser);
}

#[test]
fn light_variances_shrink_at_high_snr() {
    let h = generate_parity_check(961, 7, 42, Structure::Triangular).unwrap();
    let mut config = ExperimentConfig::new(8, 20, Variant::Proposed, vec![25.0]);
    config.seed = 3;
    let ratios = run_convergence_experiment(&h, &config, 10)
        .unwrap()
        .light_ratio();
    for k in 3..ratios.len() {
        assert!(
            ratios[k] <= 1.01 * ratios[k - 1],
            "k={}: {:?}",
            k + 1,
            &ratios[k - 1..=k]
        );
    }
}

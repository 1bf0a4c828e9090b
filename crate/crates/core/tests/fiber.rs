use bicm::constellation::Constellation;
use bicm::fiber::{self, rrc_shape, receiver_dsp, ssfm_propagate, FiberParams, Nonlinearity, Waveform};
use bicm::seed::{rng_for, Role};
use num_complex::Complex64;
use rand::Rng;

fn random_channels(p: &FiberParams, c: &Constellation, seed: u64) -> Vec<[Vec<Complex64>; 2]> {
    let mut rng = rng_for(seed, Role::Neighbors);
    (0..p.n_channels)
        .map(|_| [0, 1].map(|_| (0..p.n_symbols).map(|_| c.point(rng.random_range(0..c.order()))).collect()))
        .collect()
}

fn rms_relative(a: &Waveform, b: &Waveform) -> f64 {
    let diff: f64 = a.pols.iter().flatten().zip(b.pols.iter().flatten()).map(|(x, y)| (x - y).norm_sqr()).sum();
    let norm: f64 = b.pols.iter().flatten().map(|x| x.norm_sqr()).sum();
    (diff / norm).sqrt()
}

#[test]
fn linear_noiseless_link_is_transparent() {
    let p = FiberParams {
        attenuation_db_km: 0.0,
        gamma_w_km: 0.0,
        span_length_km: 50.0,
        step_size_m: 1000.0,
        n_symbols: 1024,
        ase_noise: false,
        ..Default::default()
    };
    let c = Constellation::square_qam(16).unwrap();
    let channels = random_channels(&p, &c, 1);
    let w = ssfm_propagate(&rrc_shape(&channels, &p).unwrap(), &p).unwrap();
    let tx = &channels[p.central_channel()];
    let rx = receiver_dsp(&w, &p, tx).unwrap();
    let worst = rx.iter().flatten().zip(tx.iter().flatten()).map(|(y, x)| (y - x).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn lossless_nonlinear_propagation_conserves_energy() {
    for model in [Nonlinearity::Coupled, Nonlinearity::Manakov] {
        let p = FiberParams {
            attenuation_db_km: 0.0,
            span_length_km: 20.0,
            n_symbols: 1024,
            launch_power_dbm: 6.0,
            nonlinearity: model,
            ..Default::default()
        };
        let c = Constellation::square_qam(16).unwrap();
        let w = rrc_shape(&random_channels(&p, &c, 2), &p).unwrap();
        let out = ssfm_propagate(&w, &p).unwrap();
        assert!((out.power() / w.power() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn step_halving_converges() {
    let p = FiberParams {
        span_length_km: 20.0,
        n_symbols: 1024,
        launch_power_dbm: 4.0,
        ..Default::default()
    };
    let c = Constellation::square_qam(16).unwrap();
    let w = rrc_shape(&random_channels(&p, &c, 3), &p).unwrap();
    let coarse = ssfm_propagate(&w, &p).unwrap();
    let fine = ssfm_propagate(&w, &FiberParams { step_size_m: 50.0, ..p.clone() }).unwrap();
    let err = rms_relative(&coarse, &fine);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn nonlinearity_degrades_snr_at_high_power() {
    let base = FiberParams {
        span_length_km: 40.0,
        step_size_m: 200.0,
        n_symbols: 2048,
        ase_noise: false,
        ..Default::default()
    };
    let c = Constellation::square_qam(16).unwrap();
    let snr_at = |dbm: f64| {
        let p = FiberParams { launch_power_dbm: dbm, ..base.clone() };
        let channels = random_channels(&p, &c, 4);
        let out = fiber::transmit(
            &p,
            &c,
            &channels[p.central_channel()],
            &mut rng_for(5, Role::Neighbors),
            &mut rng_for(5, Role::Ase),
        )
        .unwrap();
        out.rho
    };
    let low = snr_at(-5.0);
    let high = snr_at(10.0);
    // noiseless: distortion scales with P², so SNR falls by about 2 dB per dB
    assert!(low > high * 100.0, "{low} {high}");
}

#[test]
fn dump_and_reload() {
    let p = FiberParams {
        n_symbols: 64,
        ..Default::default()
    };
    let c = Constellation::square_qam(4).unwrap();
    let w = rrc_shape(&random_channels(&p, &c, 6), &p).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.bin");
    w.dump(&path).unwrap();
    assert_eq!(Waveform::load(&path).unwrap(), w);
}

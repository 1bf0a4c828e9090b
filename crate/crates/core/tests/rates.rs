mod common;

use bicm::constellation::Constellation;
use bicm::demapper::{pre_fec_ber, AwgnBlock, LlrKind};
use bicm::math::db_to_linear;
use bicm::rates::{
    estimate_gmi, estimate_mi_awgn, gmi_from_pdf, mi_from_observations, symmetrized_pdf,
    DEFAULT_PDF_BINS,
};
use bicm::seed::{rng_for, Role};

#[test]
fn mi_matches_quadrature_for_small_qam() {
    for order in [4, 16] {
        let c = Constellation::square_qam(order).unwrap();
        for rho_db in [0.0, 6.0] {
            let rho = db_to_linear(rho_db);
            let mut rng = rng_for(order as u64, Role::Estimator);
            let est = estimate_mi_awgn(&c, rho, 20_000, &mut rng).unwrap();
            let oracle = common::square_qam_mi(order, rho);
            let tol = (3.0 * est.std_err).max(0.005);
            assert!((est.value - oracle).abs() < tol, "{order}QAM {rho_db} dB: {} vs {oracle}", est.value);
        }
    }
}

#[test]
fn quadrature_oracle_bpsk_known_value() {
    // unit-amplitude BPSK in unit-variance real noise carries 0.4859 bits
    let v = common::pam_mi(&[-1.0, 1.0], 1.0);
    assert!((v - 0.4859).abs() < 5e-4, "{v}");
}

#[test]
fn gray_qpsk_gmi_equals_mi() {
    let c = Constellation::square_qam(4).unwrap();
    let mut rng = rng_for(77, Role::Noise);
    let block = AwgnBlock::random(&c, 100_000, 4.0, &mut rng).unwrap();
    let gmi = estimate_gmi(&block.frame(&c, LlrKind::Exact).unwrap()).unwrap();
    let mi = mi_from_observations(&c, &block.tx, &block.y, 4.0).unwrap();
    let sigma = (gmi.std_err.powi(2) + mi.std_err.powi(2)).sqrt();
    assert!((gmi.value - mi.value).abs() < 3.0 * sigma + 1e-9, "{gmi:?} {mi:?}");
}

#[test]
fn gmi_bounded_by_mi_for_larger_qam() {
    for (order, rho_db) in [(16, 9.0), (64, 14.0)] {
        let c = Constellation::square_qam(order).unwrap();
        let rho = db_to_linear(rho_db);
        let mut rng = rng_for(order as u64, Role::Noise);
        let block = AwgnBlock::random(&c, 50_000, rho, &mut rng).unwrap();
        let mi = mi_from_observations(&c, &block.tx, &block.y, rho).unwrap();
        let exact = estimate_gmi(&block.frame(&c, LlrKind::Exact).unwrap()).unwrap();
        let maxlog = estimate_gmi(&block.frame(&c, LlrKind::Maxlog).unwrap()).unwrap();
        assert!(exact.value <= mi.value + 3.0 * (exact.std_err + mi.std_err));
        assert!(maxlog.value <= exact.value + 3.0 * (exact.std_err + maxlog.std_err));
        assert!(mi.value - exact.value < 0.1);
    }
}

#[test]
fn pdf_gmi_agrees_with_direct_estimate() {
    let c = Constellation::square_qam(16).unwrap();
    let rho = db_to_linear(10.0);
    let mut rng = rng_for(5, Role::Noise);
    let frame = AwgnBlock::random(&c, 1_000_000, rho, &mut rng)
        .unwrap()
        .frame(&c, LlrKind::Exact)
        .unwrap();
    let direct = estimate_gmi(&frame).unwrap();
    let pdf = symmetrized_pdf(&frame, DEFAULT_PDF_BINS).unwrap();
    let via_pdf = gmi_from_pdf(&pdf, 4).unwrap();
    assert!((direct.value - via_pdf.value).abs() < 0.02, "{} vs {}", direct.value, via_pdf.value);
    let ber = pre_fec_ber(&frame).unwrap();
    assert!((pdf.mass_below_zero() - ber).abs() <= pdf.zero_bin_mass());
}

#[test]
fn quadrature_oracle_bpsk_limits() {
    assert!((common::pam_mi(&[-1.0, 1.0], 1e-4) - 1.0).abs() < 1e-9);
    assert!(common::pam_mi(&[-1.0, 1.0], 1e6).abs() < 1e-5);
}

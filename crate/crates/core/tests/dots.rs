use nalgebra::DMatrix;
use proptest::prelude::*;
use spectral_core::dots::*;
use spectral_core::Error;

fn model(n: usize, entries: &[f64]) -> DotArrayModel {
    DotArrayModel::new(DMatrix::from_row_slice(n, n, entries)).unwrap()
}

#[test]
fn single_attractive_dot() {
    let m = model(1, &[-2.0]);
    assert_eq!(dot_spectrum(&m), vec![(-4.0, 1)]);
    let phi = dot_intertwiner(&m);
    assert_eq!(phi.atoms[0].kappa, 2.0);
    // sqrt(2 kappa) e^{-kappa x} has unit norm
    assert!((phi.atoms[0].coefficients(0)[0].abs() - 2.0).abs() < 1e-15);
    assert!(phi.isometry_defect() < 1e-15);
}

#[test]
fn coupled_pair_has_one_bound_state() {
    let m = model(2, &[0.0, 1.0, 1.0, 0.0]);
    let spec = dot_spectrum(&m);
    assert_eq!(spec.len(), 1);
    assert!((spec[0].0 + 1.0).abs() < 1e-14);
    let report = dot_verify(&m, Some(DotOracleConfig::default())).unwrap();
    assert!(report.pass, "{:?}", report.checks);
}

#[test]
fn repelling_array_has_no_gap_spectrum() {
    let m = model(2, &[1.0, 0.0, 0.0, 3.0]);
    assert!(dot_spectrum(&m).is_empty());
    let report = dot_verify(&m, Some(DotOracleConfig::default())).unwrap();
    assert!(report.pass);
}

#[test]
fn degenerate_eigenvalue_keeps_its_multiplicity() {
    let m = model(3, &[-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0]);
    assert_eq!(dot_spectrum(&m), vec![(-1.0, 2)]);
    assert_eq!(dot_intertwiner(&m).rank(), 2);
}

#[test]
fn scaling_the_coupling_scales_the_energies() {
    let m = model(3, &[-1.0, 0.4, 0.0, 0.4, 0.5, -0.3, 0.0, -0.3, -2.0]);
    let base = dot_spectrum(&m);
    let scaled = dot_spectrum(&m.scaled(3.0).unwrap());
    assert_eq!(base.len(), scaled.len());
    for ((l, a), (s, b)) in base.iter().zip(&scaled) {
        assert_eq!(a, b);
        assert!((s - 9.0 * l).abs() < 1e-12 * s.abs());
    }
}

#[test]
fn json_input_is_validated() {
    let m = DotArrayModel::from_json(r#"{"T": [[0, 1], [1, 0]]}"#).unwrap();
    assert_eq!(m.sites(), 2);
    assert!(matches!(
        DotArrayModel::from_json(r#"{"T": [[0, 1], [2, 0]]}"#),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        DotArrayModel::from_json(r#"{"T": [[0, 1]]}"#),
        Err(Error::Parse(_))
    ));
    assert!(matches!(
        DotArrayModel::from_json(r#"{"T": [[1]], "x": 2}"#),
        Err(Error::Parse(_))
    ));
    assert!(DotArrayModel::from_json(r#"{"T": []}"#).is_err());
}

#[test]
fn csv_lists_every_state_and_site() {
    let m = model(2, &[-1.0, 0.0, 0.0, -3.0]);
    let mut buf = Vec::new();
    dot_intertwiner(&m).write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "state,site,kappa,coefficient");
    assert_eq!(lines.len(), 1 + 2 * 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bound_states_track_negative_eigenvalues(entries in prop::collection::vec(-2.0f64..2.0, 10)) {
        // symmetric 4x4 from the upper triangle
        let mut t = DMatrix::zeros(4, 4);
        let mut it = entries.iter();
        for i in 0..4 {
            for j in i..4 {
                let x = *it.next().unwrap();
                t[(i, j)] = x;
                t[(j, i)] = x;
            }
        }
        let values = t.symmetric_eigenvalues();
        prop_assume!(values.iter().all(|v| v.abs() > 1e-6));
        let m = DotArrayModel::new(t).unwrap();
        let negatives = values.iter().filter(|&&v| v < 0.0).count();
        let phi = dot_intertwiner(&m);
        prop_assert_eq!(phi.rank(), negatives);
        prop_assert!(phi.isometry_defect() <= 1e-12);
        let report = dot_verify(&m, None).unwrap();
        prop_assert!(report.pass, "{:?}", report.checks);
    }
}

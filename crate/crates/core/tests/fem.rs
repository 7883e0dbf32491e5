use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use spectral_core::dots::DotArrayModel;
use spectral_core::fem::*;
use spectral_core::graph::{Family, Graph};
use spectral_core::linalg::CVec;
use spectral_core::Error;

#[test]
fn system_size_and_conservation() {
    let g = Graph::builtin(Family::Cycle, 3).unwrap();
    let fem = assemble_fem(&g, 10).unwrap();
    assert_eq!(fem.size(), 3 + 3 * 9);
    assert!((fem.h() - 0.1).abs() < 1e-15);
    // constants span the kernel of the stiffness matrix
    for r in 0..fem.size() {
        assert!(fem.stiffness().row(r).sum().abs() < 1e-12);
    }
    // the mass matrix integrates 1 to the total length
    assert!((fem.mass().sum() - 3.0).abs() < 1e-12);
    assert!(matches!(assemble_fem(&g, 4), Err(Error::InvalidSize { .. })));
}

#[test]
fn single_edge_gives_the_neumann_spectrum() {
    let g = Graph::builtin(Family::Path, 2).unwrap();
    let nodes = 100;
    let values = oracle_spectrum(&g, nodes, 60.0).unwrap();
    assert_eq!(values.len(), 3);
    let h = 1.0 / nodes as f64;
    for (j, v) in values.iter().enumerate() {
        let exact = (j as f64 * PI).powi(2);
        assert!(relative_error(*v, exact) <= h * h * exact.max(1.0), "{v} vs {exact}");
    }
}

#[test]
fn star_keeps_the_degenerate_pair() {
    let g = Graph::builtin(Family::Star, 4).unwrap();
    let values = oracle_spectrum(&g, 80, 5.0).unwrap();
    let quarter = (PI / 2.0).powi(2);
    let near: Vec<&f64> = values.iter().filter(|v| relative_error(**v, quarter) < 1e-3).collect();
    assert_eq!(near.len(), 2, "{values:?}");
}

#[test]
fn errors_shrink_quadratically() {
    let g = Graph::builtin(Family::Cycle, 4).unwrap();
    let exact = (PI / 2.0).powi(2);
    let err = |n| {
        oracle_spectrum(&g, n, 5.0)
            .unwrap()
            .iter()
            .map(|&v| relative_error(v, exact))
            .fold(f64::INFINITY, f64::min)
    };
    let ratio = err(40) / err(80);
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}

#[test]
fn zero_load_gives_zero_resolvents() {
    let g = Graph::builtin(Family::Cycle, 3).unwrap();
    let fem = assemble_fem(&g, 16).unwrap();
    let pair = oracle_resolvent_apply(&fem, Complex64::from(-2.0), &CVec::zeros(fem.size())).unwrap();
    assert!(pair.kirchhoff.iter().all(|c| c.norm() == 0.0));
    assert!(pair.dirichlet.iter().all(|c| c.norm() == 0.0));
    assert!(oracle_resolvent_apply(&fem, Complex64::from(-2.0), &CVec::zeros(3)).is_err());
}

#[test]
fn pinned_solution_vanishes_at_vertices() {
    let g = Graph::builtin(Family::Star, 3).unwrap();
    let fem = assemble_fem(&g, 16).unwrap();
    let rhs = CVec::from_element(fem.size(), Complex64::new(1.0, 0.5));
    let pair = oracle_resolvent_apply(&fem, Complex64::from(-1.0), &rhs).unwrap();
    for (i, r) in fem.node_refs().iter().enumerate() {
        if let NodeRef::Vertex(_) = r {
            assert_eq!(pair.dirichlet[i].norm(), 0.0);
        }
    }
    assert!(pair.difference().iter().any(|c| c.norm() > 1e-6));
}

#[test]
fn dot_oracle_finds_the_bound_states() {
    let single = DotArrayModel::new(DMatrix::from_element(1, 1, -2.0)).unwrap();
    let values = dot_oracle_spectrum(&single, 10.0, 50).unwrap();
    assert_eq!(values.len(), 1);
    assert!((values[0] + 4.0).abs() < 1e-3);

    let repelling = DotArrayModel::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0])).unwrap();
    assert!(dot_oracle_spectrum(&repelling, 10.0, 50).unwrap().is_empty());
    assert!(dot_oracle_spectrum(&single, 0.0, 50).is_err());
}

#[test]
fn relative_error_falls_back_to_absolute_at_zero() {
    assert_eq!(relative_error(1e-9, 0.0), 1e-9);
    assert!((relative_error(2.2, 2.0) - 0.1).abs() < 1e-15);
}

//! Arrays of identical half-line dots coupled through a symmetric matrix `T`.
//!
//! Each site carries `-f''` on `(0, inf)` with boundary maps `f(0)`, `f'(0)`.
//! The coupled operator imposes `f'(0) = T f(0)`. Its Weyl function is
//! `m(z) = i sqrt z`, which equals `-sqrt(-lambda)` on the gap `(-inf, 0)`, with
//! `n = 1`. A negative eigenvalue `mu` of `T` produces the bound state
//! `lambda = -mu^2` with profile `e^{-kappa x}`, `kappa = -mu`.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Deserialize;

use crate::discrete::DEFAULT_TOL;
use crate::error::{Error, Result};
use crate::intertwiner::VerificationReport;

#[derive(Debug, Clone, PartialEq)]
pub struct DotArrayModel {
    t: DMatrix<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(rename = "T")]
    t: Vec<Vec<f64>>,
}

impl DotArrayModel {
    pub fn new(t: DMatrix<f64>) -> Result<Self> {
        if t.nrows() == 0 || t.nrows() != t.ncols() {
            return Err(Error::InvalidSize {
                what: "coupling matrix".into(),
                size: t.nrows(),
            });
        }
        if t.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("coupling matrix has non-finite entries".into()));
        }
        if t != t.transpose() {
            return Err(Error::InvalidArgument("coupling matrix is not symmetric".into()));
        }
        Ok(DotArrayModel { t })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let n = file.t.len();
        if let Some(row) = file.t.iter().find(|r| r.len() != n) {
            return Err(Error::Parse(format!("row of length {} in a {n}x{n} matrix", row.len())));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| file.t[i][j]))
    }

    pub fn sites(&self) -> usize {
        self.t.nrows()
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.t
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(&self.t * s)
    }

    fn threshold(&self) -> f64 {
        10.0 * DEFAULT_TOL * self.t.amax().max(1.0)
    }
}

/// `m(lambda) = -sqrt(-lambda)` and `m'(lambda) = 1 / (2 sqrt(-lambda))` on the gap.
pub fn dot_m(lambda: f64) -> f64 {
    -(-lambda).sqrt()
}

pub fn dot_m_prime(lambda: f64) -> f64 {
    0.5 / (-lambda).sqrt()
}

/// A bound-state energy with an orthonormal frame of the matching eigenspace of `T`.
#[derive(Debug, Clone)]
pub struct DotAtom {
    pub lambda: f64,
    pub kappa: f64,
    pub mu: f64,
    pub frame: DMatrix<f64>,
}

impl DotAtom {
    pub fn multiplicity(&self) -> usize {
        self.frame.ncols()
    }

    /// Per-site amplitudes `sqrt(1/m') v_alpha = sqrt(2 kappa) v_alpha` of column `j`.
    pub fn coefficients(&self, j: usize) -> DVector<f64> {
        self.frame.column(j) * (1.0 / dot_m_prime(self.lambda)).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct DotIntertwiner {
    pub atoms: Vec<DotAtom>,
    /// Projector onto the negative eigenspace of `T`, built from the same
    /// eigendecomposition.
    pub negative_projector: DMatrix<f64>,
}

fn eigen_sorted(t: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(t.clone());
    let mut order: Vec<usize> = (0..t.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    (values, vectors)
}

pub fn dot_intertwiner(model: &DotArrayModel) -> DotIntertwiner {
    let (values, vectors) = eigen_sorted(&model.t);
    let thr = model.threshold();
    let n = model.sites();
    let mut atoms = Vec::new();
    let mut i = 0;
    while i < n && values[i] < -thr {
        let mut j = i + 1;
        while j < n && values[j] < -thr && values[j] - values[j - 1] <= thr {
            j += 1;
        }
        let mu = values[i..j].iter().sum::<f64>() / (j - i) as f64;
        atoms.push(DotAtom {
            lambda: -mu * mu,
            kappa: -mu,
            mu,
            frame: vectors.columns(i, j - i).into_owned(),
        });
        i = j;
    }
    let neg = values.iter().take_while(|&&v| v < -thr).count();
    let vn = vectors.columns(0, neg);
    DotIntertwiner {
        atoms,
        negative_projector: vn * vn.transpose(),
    }
}

/// Bound-state energies with multiplicities, ascending.
pub fn dot_spectrum(model: &DotArrayModel) -> Vec<(f64, usize)> {
    dot_intertwiner(model)
        .atoms
        .iter()
        .map(|a| (a.lambda, a.multiplicity()))
        .collect()
}

impl DotIntertwiner {
    pub fn rank(&self) -> usize {
        self.atoms.iter().map(DotAtom::multiplicity).sum()
    }

    /// Gram matrix of all image columns in `sum_alpha L^2(0, inf)`, using
    /// `int_0^inf e^{-(k + k') x} dx = 1 / (k + k')`.
    pub fn gram(&self) -> DMatrix<f64> {
        let cols: Vec<(f64, DVector<f64>)> = self
            .atoms
            .iter()
            .flat_map(|a| (0..a.multiplicity()).map(move |j| (a.kappa, a.coefficients(j))))
            .collect();
        DMatrix::from_fn(cols.len(), cols.len(), |i, j| {
            cols[i].1.dot(&cols[j].1) / (cols[i].0 + cols[j].0)
        })
    }

    /// `|| Phi^* Phi - E_T(m(J)) ||`.
    pub fn isometry_defect(&self) -> f64 {
        if self.rank() == 0 {
            return spectral_norm_sym(&self.negative_projector);
        }
        let v = DMatrix::from_columns(
            &self
                .atoms
                .iter()
                .flat_map(|a| a.frame.column_iter().map(|c| c.into_owned()))
                .collect::<Vec<_>>(),
        );
        spectral_norm_sym(&(&v * self.gram() * v.transpose() - &self.negative_projector))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state", "site", "kappa", "coefficient"]).map_err(io)?;
        let mut state = 0;
        for a in &self.atoms {
            for j in 0..a.multiplicity() {
                for (site, c) in a.coefficients(j).iter().enumerate() {
                    w.write_record([state.to_string(), site.to_string(), a.kappa.to_string(), c.to_string()])
                        .map_err(io)?;
                }
                state += 1;
            }
        }
        w.flush().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
        Ok(())
    }
}

fn spectral_norm_sym(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(0.5 * (a + a.transpose())).eigenvalues.amax()
}

/// Truncation used by the finite-element comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DotOracleConfig {
    pub length: f64,
    pub nodes_per_unit: usize,
    pub tol: f64,
}

impl Default for DotOracleConfig {
    fn default() -> Self {
        DotOracleConfig {
            length: 10.0,
            nodes_per_unit: 50,
            tol: 1e-3,
        }
    }
}

pub fn dot_verify(model: &DotArrayModel, oracle: Option<DotOracleConfig>) -> Result<VerificationReport> {
    let phi = dot_intertwiner(model);
    let t = model.coupling();
    let mut report = VerificationReport::new();
    report.push("isometry", "Phi*Phi = E_T(m(J))", phi.isometry_defect(), 1e-12);

    let mut boundary = 0.0f64;
    let mut eigen = 0.0f64;
    let mut bijection = 0.0f64;
    for a in &phi.atoms {
        for j in 0..a.multiplicity() {
            let c = a.coefficients(j);
            // f = c e^{-kappa x}: f(0) = c, f'(0) = -kappa c
            let residual = -a.kappa * &c - t * &c;
            boundary = boundary.max(residual.amax());
            eigen = eigen.max((a.kappa * a.kappa + a.lambda).abs() * c.amax());
        }
        bijection = bijection.max((dot_m(a.lambda) - a.mu).abs());
    }
    report.push("boundary_condition", "f'(0) = T f(0)", boundary, 1e-10);
    report.push("eigen_residual", "-f'' = lambda f", eigen, 1e-12);
    report.push("spectral_bijection", "m(lambda_i) in spec T", bijection, 1e-12);

    if let Some(cfg) = oracle {
        let fem = crate::fem::dot_oracle_spectrum(model, cfg.length, cfg.nodes_per_unit)?;
        let analytic: Vec<f64> = phi
            .atoms
            .iter()
            .flat_map(|a| std::iter::repeat_n(a.lambda, a.multiplicity()))
            .collect();
        let defect = if fem.len() != analytic.len() {
            f64::INFINITY
        } else {
            fem.iter()
                .zip(&analytic)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        };
        report.push("oracle", "truncated finite-element bound states", defect, cfg.tol);
    }
    Ok(report)
}

//! The degree-weighted vertex space, the transition operator and its spectral
//! measure.
//!
//! All adjoints and norms on vertex functions are taken in the weighted inner
//! product `<f, g> = sum_x deg(x) conj(f(x)) g(x)`. Operators are stored as
//! ordinary matrices acting on coordinate vectors; their adjoint in this space
//! is `D^-1 A^H D`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{complexify, op_norm, CMat, CVec};

pub const DEFAULT_TOL: f64 = 1e-12;
/// Eigenvalues closer than `CLUSTER_FACTOR * tol` are one cluster.
pub const CLUSTER_FACTOR: f64 = 10.0;

/// Degree weights of `l^2(X^0, m^0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSpace {
    weights: DVector<f64>,
}

impl WeightedSpace {
    pub fn new(g: &Graph) -> Self {
        WeightedSpace {
            weights: DVector::from_iterator(g.vertex_count(), g.degrees().iter().map(|&d| d as f64)),
        }
    }

    pub fn from_weights(weights: DVector<f64>) -> Self {
        WeightedSpace { weights }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn inner(&self, f: &CVec, g: &CVec) -> Complex64 {
        f.iter()
            .zip(g.iter())
            .zip(self.weights.iter())
            .map(|((a, b), w)| a.conj() * b * *w)
            .sum()
    }

    pub fn norm(&self, f: &CVec) -> f64 {
        self.inner(f, f).re.max(0.0).sqrt()
    }

    pub fn adjoint(&self, a: &CMat) -> CMat {
        let mut out = a.adjoint();
        for i in 0..out.nrows() {
            for j in 0..out.ncols() {
                out[(i, j)] *= self.weights[j] / self.weights[i];
            }
        }
        out
    }

    /// Operator norm of `a` as a map of the weighted space into itself.
    pub fn op_norm(&self, a: &CMat) -> f64 {
        op_norm(&self.to_unitary_frame(a))
    }

    /// `D^{1/2} A D^{-1/2}`: the same operator in an orthonormal coordinate frame.
    pub fn to_unitary_frame(&self, a: &CMat) -> CMat {
        let mut out = a.clone();
        for i in 0..out.nrows() {
            for j in 0..out.ncols() {
                out[(i, j)] *= (self.weights[i] / self.weights[j]).sqrt();
            }
        }
        out
    }

    /// Matrix of `f -> sum_c u_c <v_c, f>` for real frames `u`, `v` and the
    /// coefficient matrix `c`, i.e. `U C V^T D`.
    pub fn sandwich(&self, u: &DMatrix<f64>, c: &CMat, v: &DMatrix<f64>) -> CMat {
        let mut vt_d = v.transpose();
        for j in 0..vt_d.ncols() {
            for i in 0..vt_d.nrows() {
                vt_d[(i, j)] *= self.weights[j];
            }
        }
        complexify(u) * c * complexify(&vt_d)
    }

    pub fn unit(&self, x: usize) -> CVec {
        let mut e = CVec::zeros(self.dim());
        e[x] = Complex64::new(1.0, 0.0);
        e
    }
}

/// `(Pf)(x) = deg(x)^-1 sum_{y ~ x} f(y)`.
#[derive(Debug, Clone)]
pub struct TransitionOperator {
    matrix: DMatrix<f64>,
    space: WeightedSpace,
}

impl TransitionOperator {
    pub fn new(g: &Graph) -> Self {
        let n = g.vertex_count();
        let mut matrix = DMatrix::zeros(n, n);
        for &(u, v) in g.edges() {
            matrix[(u, v)] = 1.0 / g.degree(u) as f64;
            matrix[(v, u)] = 1.0 / g.degree(v) as f64;
        }
        TransitionOperator {
            matrix,
            space: WeightedSpace::new(g),
        }
    }

    /// Wraps an arbitrary matrix; used to inject faults into verification runs.
    pub fn from_parts(matrix: DMatrix<f64>, space: WeightedSpace) -> Self {
        assert_eq!(matrix.nrows(), space.dim());
        TransitionOperator { matrix, space }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn complex_matrix(&self) -> CMat {
        complexify(&self.matrix)
    }

    pub fn space(&self) -> &WeightedSpace {
        &self.space
    }

    pub fn apply(&self, f: &CVec) -> CVec {
        complexify(&self.matrix) * f
    }

    /// `||P - P*||` in the weighted space.
    pub fn self_adjointness_defect(&self) -> f64 {
        let p = self.complex_matrix();
        self.space.op_norm(&(&p - self.space.adjoint(&p)))
    }
}

pub fn transition_operator(g: &Graph) -> TransitionOperator {
    TransitionOperator::new(g)
}

/// Eigenpairs of the transition operator, ascending, with eigenvectors
/// orthonormal in the weighted inner product.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    space: WeightedSpace,
    tol: f64,
}

/// A group of numerically coincident eigenvalues.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub value: f64,
    pub indices: std::ops::Range<usize>,
}

impl Cluster {
    pub fn multiplicity(&self) -> usize {
        self.indices.len()
    }
}

impl EigDecomp {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }

    pub fn space(&self) -> &WeightedSpace {
        &self.space
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn cluster_threshold(&self) -> f64 {
        CLUSTER_FACTOR * self.tol
    }

    pub fn clusters(&self) -> Vec<Cluster> {
        cluster_sorted(&self.eigenvalues, self.cluster_threshold())
    }

    /// Columns `indices` of the eigenvector matrix.
    pub fn frame(&self, indices: std::ops::Range<usize>) -> DMatrix<f64> {
        self.eigenvectors.columns(indices.start, indices.len()).into_owned()
    }

    /// Projector onto the span of the given orthonormal columns.
    pub fn projector_onto(&self, frame: &DMatrix<f64>) -> CMat {
        let c = CMat::identity(frame.ncols(), frame.ncols());
        self.space.sandwich(frame, &c, frame)
    }

    /// Functional calculus `f(T)` restricted to eigenvalues in `omega`.
    pub fn function_of(&self, omega: &IntervalSet, f: impl Fn(f64) -> f64) -> Result<CMat> {
        let selected = self.select(omega)?;
        if selected.is_empty() {
            return Ok(CMat::zeros(self.space.dim(), self.space.dim()));
        }
        let frame = DMatrix::from_columns(
            &selected
                .iter()
                .map(|&i| self.eigenvectors.column(i))
                .collect::<Vec<_>>(),
        );
        let diag = CMat::from_diagonal(&CVec::from_iterator(
            selected.len(),
            selected.iter().map(|&i| Complex64::from(f(self.eigenvalues[i]))),
        ));
        Ok(self.space.sandwich(&frame, &diag, &frame))
    }

    fn select(&self, omega: &IntervalSet) -> Result<Vec<usize>> {
        let thr = self.cluster_threshold();
        let mut out = Vec::new();
        for (i, &mu) in self.eigenvalues.iter().enumerate() {
            for iv in omega.intervals() {
                for endpoint in [iv.lo, iv.hi] {
                    if endpoint.is_finite() && (mu - endpoint).abs() <= thr {
                        return Err(Error::AmbiguousBoundary {
                            eigenvalue: mu,
                            endpoint,
                        });
                    }
                }
            }
            if omega.contains(mu) {
                out.push(i);
            }
        }
        Ok(out)
    }
}

pub(crate) fn cluster_sorted(values: &[f64], threshold: f64) -> Vec<Cluster> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > threshold {
            let value = values[start..i].iter().sum::<f64>() / (i - start) as f64;
            out.push(Cluster {
                value,
                indices: start..i,
            });
            start = i;
        }
    }
    out
}

/// Full eigendecomposition of `P` through the symmetric matrix
/// `D^{1/2} P D^{-1/2}`.
pub fn sym_eigendecomposition(p: &TransitionOperator, tol: f64) -> Result<EigDecomp> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let space = p.space().clone();
    let n = space.dim();
    let sqrt_w: Vec<f64> = space.weights().iter().map(|w| w.sqrt()).collect();
    let sym = DMatrix::from_fn(n, n, |i, j| p.matrix()[(i, j)] * sqrt_w[i] / sqrt_w[j]);
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors: Vec<DVector<f64>> = order
        .iter()
        .map(|&i| DVector::from_iterator(n, eig.eigenvectors.column(i).iter().zip(&sqrt_w).map(|(y, s)| y / s)))
        .collect();

    let wmat = DMatrix::from_diagonal(space.weights());
    let clusters = cluster_sorted(&eigenvalues, CLUSTER_FACTOR * tol);
    for c in &clusters {
        let block = DMatrix::from_columns(&vectors[c.indices.clone()]);
        let ortho = crate::linalg::orthonormalize(&block, &wmat, 1e-8);
        if ortho.ncols() != block.ncols() {
            return Err(Error::Numerical("degenerate eigenvector cluster lost rank".into()));
        }
        let mut cols: Vec<DVector<f64>> = ortho.column_iter().map(|c| normalize_sign(c.into_owned())).collect();
        cols.sort_by(lexicographic);
        for (slot, v) in c.indices.clone().zip(cols) {
            vectors[slot] = v;
        }
    }

    let eigenvectors = DMatrix::from_columns(&vectors);
    let decomp = EigDecomp {
        eigenvalues,
        eigenvectors,
        space,
        tol,
    };

    let mut worst = 0.0f64;
    for (i, &mu) in decomp.eigenvalues.iter().enumerate() {
        let v: CVec = decomp.eigenvectors.column(i).map(Complex64::from);
        let r = p.apply(&v) - &v * Complex64::from(mu);
        worst = worst.max(decomp.space.norm(&r));
    }
    let vc = complexify(&decomp.eigenvectors);
    let gram = vc.adjoint() * complexify(&wmat) * &vc;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)].re - target).abs());
        }
    }
    if worst > tol {
        return Err(Error::ConvergenceFailure { tol, achieved: worst });
    }
    Ok(decomp)
}

fn normalize_sign(mut v: DVector<f64>) -> DVector<f64> {
    let scale = v.amax();
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-10 * scale) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
    v
}

fn lexicographic(a: &DVector<f64>, b: &DVector<f64>) -> Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Closed real interval; `lo` may be `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Finite union of closed intervals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalSet(Vec<Interval>);

impl IntervalSet {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if let Some(bad) = intervals.iter().find(|i| !(i.lo <= i.hi) || i.hi.is_nan()) {
            return Err(Error::InvalidArgument(format!(
                "malformed interval [{}, {}]",
                bad.lo, bad.hi
            )));
        }
        Ok(IntervalSet(intervals))
    }

    pub fn single(lo: f64, hi: f64) -> Self {
        IntervalSet(vec![Interval::new(lo, hi)])
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.0
    }

    pub fn contains(&self, x: f64) -> bool {
        self.0.iter().any(|i| i.contains(x))
    }
}

/// `E_T(omega) = sum_{mu_i in omega} v_i <v_i, .>`.
pub fn spectral_projector(e: &EigDecomp, omega: &IntervalSet) -> Result<CMat> {
    e.function_of(omega, |_| 1.0)
}

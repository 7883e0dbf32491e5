//! P1 finite elements for the Kirchhoff Laplacian on an equilateral graph and
//! for a truncated dot array, used as an independent oracle.
//!
//! Each edge is split into `nodes` elements of width `h = 1 / nodes`. Vertex
//! unknowns are shared by all incident edges, which makes the discrete space
//! continuous; the Kirchhoff condition is natural for the weak form
//! `a(u, v) = int u' v'` and needs no constraint rows.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::discrete::EigDecomp;
use crate::dots::DotArrayModel;
use crate::entire::C64;
use crate::error::{Error, Result};
use crate::gamma::EdgeWave;
use crate::graph::{Graph, Orientation};
use crate::intertwiner::{band_eigensystem, Preimage};
use crate::linalg::{orthonormalize, principal_sines, CMat, CVec};
use crate::weyl::sigma_distance;

pub const MIN_NODES: usize = 8;
/// Oracle eigenvalues this close to `Sigma` are left out of comparisons.
pub const SIGMA_WINDOW: f64 = 0.5;
/// Calibration constant of the eigenvalue tolerance `C h^2 max(lambda, 1)`.
pub const EIGEN_TOL_CONSTANT: f64 = 1.0;
/// Required spectral distance of a resolvent point.
pub const RESOLVENT_MARGIN: f64 = 1e-3;

/// Position of an unknown on the metric graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRef {
    Vertex(usize),
    /// Interior node `j` (`1 <= j < nodes`) of a canonical edge, at `t = j h`.
    Interior {
        edge: usize,
        j: usize,
    },
}

#[derive(Debug, Clone)]
pub struct FemSystem {
    stiffness: DMatrix<f64>,
    mass: DMatrix<f64>,
    refs: Vec<NodeRef>,
    vertices: usize,
    nodes: usize,
}

impl FemSystem {
    pub fn assemble(g: &Graph, nodes: usize) -> Result<Self> {
        if nodes < MIN_NODES {
            return Err(Error::InvalidSize {
                what: "elements per edge".into(),
                size: nodes,
            });
        }
        let v = g.vertex_count();
        let size = v + g.edge_count() * (nodes - 1);
        let h = 1.0 / nodes as f64;
        let mut k = DMatrix::zeros(size, size);
        let mut m = DMatrix::zeros(size, size);
        let mut refs: Vec<NodeRef> = (0..v).map(NodeRef::Vertex).collect();
        for (e, _) in g.edges().iter().enumerate() {
            refs.extend((1..nodes).map(|j| NodeRef::Interior { edge: e, j }));
        }
        let (ks, kd) = (1.0 / h, -1.0 / h);
        let (md, mo) = (h / 3.0, h / 6.0);
        for (e, &(a, b)) in g.edges().iter().enumerate() {
            let idx = |j: usize| -> usize {
                if j == 0 {
                    a
                } else if j == nodes {
                    b
                } else {
                    v + e * (nodes - 1) + j - 1
                }
            };
            for el in 0..nodes {
                let (p, q) = (idx(el), idx(el + 1));
                k[(p, p)] += ks;
                k[(q, q)] += ks;
                k[(p, q)] += kd;
                k[(q, p)] += kd;
                m[(p, p)] += md;
                m[(q, q)] += md;
                m[(p, q)] += mo;
                m[(q, p)] += mo;
            }
        }
        Ok(FemSystem {
            stiffness: k,
            mass: m,
            refs,
            vertices: v,
            nodes,
        })
    }

    pub fn size(&self) -> usize {
        self.refs.len()
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn h(&self) -> f64 {
        1.0 / self.nodes as f64
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn node_refs(&self) -> &[NodeRef] {
        &self.refs
    }

    /// Point values of a wave at every node.
    pub fn sample(&self, g: &Graph, f: &EdgeWave) -> CVec {
        CVec::from_iterator(
            self.size(),
            self.refs.iter().map(|r| match *r {
                NodeRef::Vertex(x) => {
                    let e = g.incident(x)[0];
                    match g.orient(e, x) {
                        Orientation::Forward => f.eval(e, 0.0),
                        Orientation::Reversed => f.eval(e, 1.0),
                    }
                }
                NodeRef::Interior { edge, j } => f.eval(edge, j as f64 * self.h()),
            }),
        )
    }

    /// Load vector `int F phi_j` by three-point Gauss quadrature on every
    /// element, from point values of `F` only.
    pub fn load(&self, g: &Graph, f: &EdgeWave) -> CVec {
        let h = self.h();
        let v = self.vertices;
        let n = self.nodes;
        let r = (0.6f64).sqrt();
        let rule = [(-r, 5.0 / 9.0), (0.0, 8.0 / 9.0), (r, 5.0 / 9.0)];
        let mut out = CVec::zeros(self.size());
        for (e, &(a, b)) in g.edges().iter().enumerate() {
            let idx = |j: usize| {
                if j == 0 {
                    a
                } else if j == n {
                    b
                } else {
                    v + e * (n - 1) + j - 1
                }
            };
            for el in 0..n {
                for (x, w) in rule {
                    let s = 0.5 * (1.0 + x);
                    let val = f.eval(e, (el as f64 + s) * h) * (0.5 * w * h);
                    out[idx(el)] += val * (1.0 - s);
                    out[idx(el + 1)] += val * s;
                }
            }
        }
        out
    }

    /// Generalized eigenpairs `K u = lambda M u` below `lambda_max`, with
    /// `M`-orthonormal eigenvectors when requested.
    pub fn eigen(&self, lambda_max: f64, vectors: bool) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
        generalized_eigen(&self.stiffness, &self.mass, lambda_max, vectors)
    }

    fn interior_indices(&self) -> Vec<usize> {
        (self.vertices..self.size()).collect()
    }
}

fn generalized_eigen(
    k: &DMatrix<f64>,
    m: &DMatrix<f64>,
    lambda_max: f64,
    vectors: bool,
) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
    let chol =
        Cholesky::new(m.clone()).ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    // A = L^-1 K L^-T
    let y = l
        .solve_lower_triangular(k)
        .ok_or_else(|| Error::Numerical("singular mass factor".into()))?;
    let a = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::Numerical("singular mass factor".into()))?;
    let a = 0.5 * (&a + a.transpose());
    if !vectors {
        let mut values: Vec<f64> = a
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .filter(|&x| x < lambda_max)
            .collect();
        values.sort_by(f64::total_cmp);
        return Ok((values, None));
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] < lambda_max)
        .collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut u = DMatrix::zeros(k.nrows(), order.len());
    let lt = l.transpose();
    for (c, &i) in order.iter().enumerate() {
        let x = lt
            .solve_upper_triangular(&eig.eigenvectors.column(i).into_owned())
            .ok_or_else(|| Error::Numerical("singular mass factor".into()))?;
        u.set_column(c, &x);
    }
    Ok((values, Some(u)))
}

pub fn assemble_fem(g: &Graph, nodes: usize) -> Result<FemSystem> {
    FemSystem::assemble(g, nodes)
}

/// Discrete Kirchhoff spectrum below `lambda_max`, ascending.
pub fn oracle_spectrum(g: &Graph, nodes: usize, lambda_max: f64) -> Result<Vec<f64>> {
    Ok(assemble_fem(g, nodes)?.eigen(lambda_max, false)?.0)
}

/// Relative error with an absolute fallback at `lambda = 0`.
pub fn relative_error(approx: f64, exact: f64) -> f64 {
    let d = (approx - exact).abs();
    if exact.abs() > 1e-8 {
        d / exact.abs()
    } else {
        d
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct EigenMatch {
    pub lambda: f64,
    pub multiplicity: usize,
    pub oracle: Vec<f64>,
    pub rel_error: f64,
    pub tol: f64,
    /// Largest sine of the principal angles between the sampled images and
    /// the oracle eigenspace.
    pub sine: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct OracleComparison {
    pub band: usize,
    pub nodes: usize,
    pub matches: Vec<EigenMatch>,
}

impl OracleComparison {
    pub fn max_rel_error(&self) -> f64 {
        self.matches.iter().map(|m| m.rel_error).fold(0.0, f64::max)
    }

    pub fn max_sine(&self) -> f64 {
        self.matches.iter().map(|m| m.sine).fold(0.0, f64::max)
    }

    pub fn within_tolerance(&self) -> bool {
        self.matches.iter().all(|m| m.rel_error <= m.tol)
    }
}

fn in_window(lambda: f64, a: f64, b: f64) -> bool {
    a <= lambda && lambda <= b && sigma_distance(lambda).1 > SIGMA_WINDOW
}

/// Pairs oracle eigenvalues in `[a, b]` with the analytic band preimages, one
/// cluster per preimage, and compares eigenspaces.
pub fn oracle_compare(g: &Graph, e: &EigDecomp, k: usize, a: f64, b: f64, nodes: usize) -> Result<OracleComparison> {
    let sys = band_eigensystem(e, k, a, b)?;
    let fem = assemble_fem(g, nodes)?;
    let (values, vectors) = fem.eigen(b + 1.0, true)?;
    let vectors = vectors.expect("requested eigenvectors");
    let h = fem.h();

    let analytic: Vec<&Preimage> = sys.preimages.iter().filter(|p| in_window(p.lambda, a, b)).collect();
    let candidates: Vec<usize> = (0..values.len()).filter(|&i| in_window(values[i], a, b)).collect();
    let mut owner: Vec<Vec<usize>> = vec![Vec::new(); analytic.len()];
    for &i in &candidates {
        let nearest = analytic.iter().enumerate().min_by(|x, y| {
            (x.1.lambda - values[i])
                .abs()
                .total_cmp(&(y.1.lambda - values[i]).abs())
        });
        match nearest {
            Some((j, p)) if relative_error(values[i], p.lambda) <= 1e-2 => owner[j].push(i),
            _ => {
                return Err(Error::MultiplicityMismatch {
                    lambda: values[i],
                    analytic: 0,
                    oracle: 1,
                })
            }
        }
    }

    let phi = crate::intertwiner::phi_eigen_sum(g, e, k, a, b)?;
    let mut matches = Vec::with_capacity(analytic.len());
    for (p, idx) in analytic.iter().zip(&owner) {
        if idx.len() != p.multiplicity() {
            return Err(Error::MultiplicityMismatch {
                lambda: p.lambda,
                analytic: p.multiplicity(),
                oracle: idx.len(),
            });
        }
        let oracle: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        let rel_error = oracle.iter().map(|&x| relative_error(x, p.lambda)).fold(0.0, f64::max);
        let tol = EIGEN_TOL_CONSTANT * h * h * p.lambda.abs().max(1.0);

        let atom = phi
            .atoms
            .iter()
            .find(|at| at.at == p.lambda)
            .ok_or_else(|| Error::Numerical("missing atom".into()))?;
        let sampled = DMatrix::from_columns(
            &atom
                .images
                .iter()
                .map(|f| fem.sample(g, f).map(|c| c.re))
                .collect::<Vec<DVector<f64>>>(),
        );
        let basis = orthonormalize(&sampled, fem.mass(), 1e-8);
        let reference = DMatrix::from_columns(&idx.iter().map(|&i| vectors.column(i)).collect::<Vec<_>>());
        let sine = principal_sines(&basis, &reference, fem.mass())
            .first()
            .copied()
            .unwrap_or(0.0);
        matches.push(EigenMatch {
            lambda: p.lambda,
            multiplicity: p.multiplicity(),
            oracle,
            rel_error,
            tol,
            sine,
        });
    }
    Ok(OracleComparison {
        band: k,
        nodes,
        matches,
    })
}

/// Per-eigenvalue error ratios `err(N) / err(2N)` along a sequence of meshes.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceRow {
    pub lambda: f64,
    pub nodes: Vec<usize>,
    pub errors: Vec<f64>,
    pub ratios: Vec<f64>,
}

pub fn oracle_convergence(
    g: &Graph,
    e: &EigDecomp,
    k: usize,
    a: f64,
    b: f64,
    meshes: &[usize],
) -> Result<Vec<ConvergenceRow>> {
    let sys = band_eigensystem(e, k, a, b)?;
    let spectra: Vec<Vec<f64>> = meshes
        .iter()
        .map(|&n| oracle_spectrum(g, n, b + 1.0))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for p in sys
        .preimages
        .iter()
        .filter(|p| in_window(p.lambda, a, b) && p.lambda.abs() > 1e-8)
    {
        let errors: Vec<f64> = spectra
            .iter()
            .map(|s| {
                s.iter()
                    .map(|&x| relative_error(x, p.lambda))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
        rows.push(ConvergenceRow {
            lambda: p.lambda,
            nodes: meshes.to_vec(),
            errors,
            ratios,
        });
    }
    Ok(rows)
}

/// Nodal solutions of the Kirchhoff and the vertex-pinned problem.
#[derive(Debug, Clone)]
pub struct ResolventPair {
    pub kirchhoff: CVec,
    /// Zero at vertex nodes.
    pub dirichlet: CVec,
}

impl ResolventPair {
    pub fn difference(&self) -> CVec {
        &self.kirchhoff - &self.dirichlet
    }
}

fn shifted(k: &DMatrix<f64>, m: &DMatrix<f64>, z: C64) -> CMat {
    CMat::from_fn(k.nrows(), k.ncols(), |i, j| Complex64::from(k[(i, j)]) - z * m[(i, j)])
}

fn check_margin(k: &DMatrix<f64>, m: &DMatrix<f64>, z: C64) -> Result<()> {
    if z.im.abs() > RESOLVENT_MARGIN {
        return Ok(());
    }
    let (values, _) = generalized_eigen(k, m, f64::INFINITY, false)?;
    if values.iter().any(|&l| (l - z.re).abs() <= RESOLVENT_MARGIN) {
        return Err(Error::NearSingular(z.re));
    }
    Ok(())
}

/// Solves `(K - z M) u = M f` for nodal data `f`, once with Kirchhoff vertices
/// and once with all vertex values pinned to zero.
pub fn oracle_resolvent_apply(fem: &FemSystem, z: C64, rhs: &CVec) -> Result<ResolventPair> {
    if rhs.len() != fem.size() {
        return Err(Error::InvalidSize {
            what: "nodal right-hand side".into(),
            size: rhs.len(),
        });
    }
    let load = fem.mass.map(Complex64::from) * rhs;
    oracle_resolvent_solve(fem, z, &load)
}

/// As [`oracle_resolvent_apply`] for a ready load vector `(int F phi_j)_j`,
/// e.g. from [`FemSystem::load`].
pub fn oracle_resolvent_solve(fem: &FemSystem, z: C64, load: &CVec) -> Result<ResolventPair> {
    if load.len() != fem.size() {
        return Err(Error::InvalidSize {
            what: "load vector".into(),
            size: load.len(),
        });
    }
    check_margin(&fem.stiffness, &fem.mass, z)?;
    let kirchhoff = shifted(&fem.stiffness, &fem.mass, z)
        .lu()
        .solve(load)
        .ok_or(Error::NearSingular(z.re))?;

    let inner = fem.interior_indices();
    let ki = fem.stiffness.select_rows(&inner).select_columns(&inner);
    let mi = fem.mass.select_rows(&inner).select_columns(&inner);
    check_margin(&ki, &mi, z)?;
    let li = CVec::from_iterator(inner.len(), inner.iter().map(|&i| load[i]));
    let ui = shifted(&ki, &mi, z).lu().solve(&li).ok_or(Error::NearSingular(z.re))?;
    let mut dirichlet = CVec::zeros(fem.size());
    for (c, &i) in inner.iter().enumerate() {
        dirichlet[i] = ui[c];
    }
    Ok(ResolventPair { kirchhoff, dirichlet })
}

/// Relative nodal error of the finite-element resolvent difference against
/// `-gamma(z) M(z)^-1 gamma(conj z)^* F`.
pub fn krein_oracle_error(
    g: &Graph,
    p: &crate::discrete::TransitionOperator,
    fem: &FemSystem,
    z: C64,
    f: &EdgeWave,
) -> Result<f64> {
    let analytic = crate::intertwiner::krein_correction_apply(g, p, z, f)?;
    let pair = oracle_resolvent_solve(fem, z, &fem.load(g, f))?;
    Ok(nodal_relative_error(&pair.difference(), &fem.sample(g, &analytic)))
}

/// `max |a - b| / max |b|` over nodes.
pub fn nodal_relative_error(approx: &CVec, exact: &CVec) -> f64 {
    let scale = exact.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let diff = approx
        .iter()
        .zip(exact.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// One truncated half-line of the dot array: nodes `x_0 = 0, ..., x_{n-1}`,
/// Dirichlet at `x_n = length`.
struct DotChain {
    elements: usize,
    h: f64,
}

impl DotChain {
    /// `(A_int^-1)_{11}` of the interior block by the Thomas algorithm.
    fn corner_of_inverse(&self, sigma: f64) -> Option<f64> {
        let h = self.h;
        let n = self.elements - 1;
        let diag = 2.0 / h - sigma * 2.0 * h / 3.0;
        let off = -1.0 / h - sigma * h / 6.0;
        // forward sweep on A y = e_1
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = diag;
        if denom.abs() < f64::MIN_POSITIVE {
            return None;
        }
        c[0] = off / denom;
        d[0] = 1.0 / denom;
        for i in 1..n {
            denom = diag - off * c[i - 1];
            if denom.abs() < f64::MIN_POSITIVE {
                return None;
            }
            c[i] = off / denom;
            d[i] = -off * d[i - 1] / denom;
        }
        let mut y = d[n - 1];
        for i in (0..n - 1).rev() {
            y = d[i] - c[i] * y;
        }
        Some(y)
    }

    /// Number of eigenvalues below `sigma < 0`, by Sylvester inertia: the
    /// interior blocks are positive definite for `sigma < 0`, so the count
    /// equals the number of negative eigenvalues of the Schur complement on
    /// the boundary unknowns, `(k00 - sigma m00 - b^2 (A_int^-1)_11) I + T`.
    fn count_below(&self, t: &DMatrix<f64>, sigma: f64) -> Option<usize> {
        let h = self.h;
        let b = -1.0 / h - sigma * h / 6.0;
        let shift = 1.0 / h - sigma * h / 3.0 - b * b * self.corner_of_inverse(sigma)?;
        let s = t + DMatrix::identity(t.nrows(), t.ncols()) * shift;
        Some(s.symmetric_eigenvalues().iter().filter(|&&x| x < 0.0).count())
    }
}

/// Negative eigenvalues of the dot array truncated to `[0, length]` with a
/// Dirichlet end, discretized with `per_unit` elements per unit length.
pub fn dot_oracle_spectrum(model: &DotArrayModel, length: f64, per_unit: usize) -> Result<Vec<f64>> {
    if !(length > 0.0) || per_unit == 0 {
        return Err(Error::InvalidArgument(
            "truncation length and resolution must be positive".into(),
        ));
    }
    let elements = ((length * per_unit as f64).round() as usize).max(MIN_NODES);
    let chain = DotChain {
        elements,
        h: length / elements as f64,
    };
    let t = model.coupling();
    let count = |s: f64| chain.count_below(t, s).ok_or(Error::NearSingular(s));

    let top = -1e-10;
    let total = count(top)?;
    let mut lo = -(t.norm() + 1.0).powi(2);
    while count(lo)? > 0 {
        lo *= 2.0;
    }
    let mut out = Vec::with_capacity(total);
    for k in 1..=total {
        // smallest sigma with count(sigma) >= k
        let (mut a, mut b) = (lo, top);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if count(mid)? >= k {
                b = mid;
            } else {
                a = mid;
            }
            if b - a <= 1e-13 * (1.0 + a.abs()) {
                break;
            }
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

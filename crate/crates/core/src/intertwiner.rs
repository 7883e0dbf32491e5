//! The intertwiner `Phi([a,b]) = int_a^b sqrt(n/m') gamma(lambda) dE_T(m(lambda))`
//! and its verification.
//!
//! For a finite graph the spectral measure of `T = P` is atomic, so `Phi` is a
//! finite sum over the preimages `lambda_i` of the eigenvalues `mu_i` inside
//! `[a, b]`. A map is stored as a list of atoms, each pairing a
//! weighted-orthonormal frame of vertex functions with the edge waves it is
//! sent to. Every operator identity is then checked in matrix form on the
//! vertex space, using only closed-form `L^2` inner products of the images.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::discrete::{spectral_projector, EigDecomp, IntervalSet, TransitionOperator, WeightedSpace};
use crate::entire::C64;
use crate::error::{Error, Result};
use crate::gamma::{edgewave_inner, gamma_adjoint_apply, gamma_apply, vertex_residuals, EdgeWave};
use crate::graph::Graph;
use crate::linalg::{op_norm, CMat, CVec};
use crate::weyl::{band_inverse, check_off_sigma, sigma_distance, weyl_matrix, Band, ScalarMaps};

/// Default tolerance of the operator identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// `|M(z)^-1|` beyond which `z` counts as a point of the spectrum.
pub const SINGULAR_WEYL_LIMIT: f64 = 1e12;

/// A preimage `lambda = m^-1(mu)` in one band together with its eigenspace.
#[derive(Debug, Clone)]
pub struct Preimage {
    pub lambda: f64,
    pub mu: f64,
    /// Columns of the eigendecomposition spanning `ker(P - mu)`.
    pub indices: Range<usize>,
    pub frame: DMatrix<f64>,
    pub projector: CMat,
}

impl Preimage {
    pub fn multiplicity(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Debug, Clone)]
pub struct BandEigensystem {
    pub band: usize,
    pub preimages: Vec<Preimage>,
    /// Eigenvalues of `P` whose band preimage would be a point of `Sigma`.
    pub sigma_excluded: Vec<f64>,
}

fn collect_preimages(e: &EigDecomp, k: usize, keep: impl Fn(f64) -> bool) -> Result<BandEigensystem> {
    let mut preimages = Vec::new();
    let mut sigma_excluded = Vec::new();
    for c in e.clusters() {
        match band_inverse(k, c.value) {
            Ok(lambda) if keep(lambda) => {
                let frame = e.frame(c.indices.clone());
                let projector = e.projector_onto(&frame);
                preimages.push(Preimage {
                    lambda,
                    mu: c.value,
                    indices: c.indices,
                    frame,
                    projector,
                });
            }
            Ok(_) | Err(Error::OutOfRange { .. }) => {}
            Err(Error::SigmaCollision { .. }) => sigma_excluded.push(c.value),
            Err(other) => return Err(other),
        }
    }
    preimages.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(BandEigensystem {
        band: k,
        preimages,
        sigma_excluded,
    })
}

/// All preimages in the open band `k`.
pub fn band_spectrum(e: &EigDecomp, k: usize) -> Result<BandEigensystem> {
    let band = Band::new(k);
    collect_preimages(e, k, |l| band.contains(l))
}

/// Checks that `[a, b]` lies in the closure of band `k`, keeps clear of
/// `Sigma`, and that neither endpoint is mapped onto the spectrum of `P`.
pub fn check_interval(e: &EigDecomp, k: usize, a: f64, b: f64) -> Result<()> {
    if !(a <= b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("[{a}, {b}] is not an interval")));
    }
    let band = Band::new(k);
    let margin = e.cluster_threshold();
    let outside = Error::IntervalOutsideBand { band: k, a, b };
    if a < band.lower() || b > band.upper() {
        return Err(outside);
    }
    for x in [a, b] {
        if sigma_distance(x).1 <= margin {
            return Err(outside);
        }
        let mu = ScalarMaps::real(x).m.re;
        if e.eigenvalues().iter().any(|&v| (v - mu).abs() <= margin) {
            return Err(Error::EndpointOnSpectrum(x));
        }
    }
    Ok(())
}

/// Preimages in band `k` lying in `(a, b)`, with `Sigma` collisions reported separately.
pub fn band_eigensystem(e: &EigDecomp, k: usize, a: f64, b: f64) -> Result<BandEigensystem> {
    check_interval(e, k, a, b)?;
    collect_preimages(e, k, |l| a < l && l < b)
}

/// `m([a, b])` for an interval inside one band (where `m` is monotone).
pub fn m_image(a: f64, b: f64) -> (f64, f64) {
    let (ma, mb) = (ScalarMaps::real(a).m.re, ScalarMaps::real(b).m.re);
    (ma.min(mb), ma.max(mb))
}

/// One term of the finite sum: a frame of vertex functions, the point at
/// which `gamma` is evaluated, and the resulting image waves.
#[derive(Debug, Clone)]
pub struct Atom<'g> {
    /// Evaluation point (the preimage itself for the eigenprojection sum).
    pub at: f64,
    /// True preimage belonging to each frame column.
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
    pub frame: DMatrix<f64>,
    pub images: Vec<EdgeWave<'g>>,
}

impl<'g> Atom<'g> {
    fn build(g: &'g Graph, at: f64, columns: Vec<(f64, f64, DVector<f64>)>) -> Result<Self> {
        let z = Complex64::from(at);
        let scale = Complex64::from(ScalarMaps::real(at).normalization());
        let mut images = Vec::with_capacity(columns.len());
        for (_, _, v) in &columns {
            let xi: CVec = v.map(Complex64::from);
            images.push(gamma_apply(g, z, &xi)?.scale(scale));
        }
        let frame = DMatrix::from_columns(&columns.iter().map(|c| c.2.clone()).collect::<Vec<_>>());
        Ok(Atom {
            at,
            lambdas: columns.iter().map(|c| c.0).collect(),
            mus: columns.iter().map(|c| c.1).collect(),
            frame,
            images,
        })
    }

    pub fn rank(&self) -> usize {
        self.images.len()
    }
}

/// Finite-rank realization of `Phi` on an interval of one band.
#[derive(Debug, Clone)]
pub struct IntertwinerMap<'g> {
    graph: &'g Graph,
    space: WeightedSpace,
    pub band: usize,
    pub a: f64,
    pub b: f64,
    pub atoms: Vec<Atom<'g>>,
}

/// Gram matrix `<F_i, G_j>` of two families of waves.
pub fn gram(left: &[EdgeWave], right: &[EdgeWave]) -> Result<CMat> {
    let mut out = CMat::zeros(left.len(), right.len());
    for (i, f) in left.iter().enumerate() {
        for (j, g) in right.iter().enumerate() {
            out[(i, j)] = edgewave_inner(f, g)?;
        }
    }
    Ok(out)
}

impl<'g> IntertwinerMap<'g> {
    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn space(&self) -> &WeightedSpace {
        &self.space
    }

    pub fn rank(&self) -> usize {
        self.atoms.iter().map(Atom::rank).sum()
    }

    /// All frame columns side by side.
    pub fn frame(&self) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self
            .atoms
            .iter()
            .flat_map(|a| a.frame.column_iter().map(|c| c.into_owned()))
            .collect();
        if cols.is_empty() {
            DMatrix::zeros(self.space.dim(), 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    }

    pub fn images(&self) -> Vec<EdgeWave<'g>> {
        self.atoms.iter().flat_map(|a| a.images.iter().cloned()).collect()
    }

    /// Values `f(at)` repeated per column.
    fn column_values(&self, f: impl Fn(&Atom) -> f64) -> Vec<f64> {
        self.atoms
            .iter()
            .flat_map(|a| std::iter::repeat_n(f(a), a.rank()))
            .collect()
    }

    /// Matrix of `Phi_1^* Phi_2` on the weighted vertex space.
    pub fn cross(&self, other: &IntertwinerMap) -> Result<CMat> {
        let g = gram(&self.images(), &other.images())?;
        Ok(self.space.sandwich(&self.frame(), &g, &other.frame()))
    }

    /// Matrix of `Phi^* Phi`.
    pub fn star_phi(&self) -> Result<CMat> {
        self.cross(self)
    }

    /// Matrix of `Phi^* B Phi` where `B` multiplies the image of atom `i` by
    /// `f(lambda_i)`.
    pub fn conjugate_multiplier(&self, f: impl Fn(f64) -> f64) -> Result<CMat> {
        let images = self.images();
        let g = gram(&images, &images)?;
        let d = CMat::from_diagonal(&CVec::from_vec(
            self.column_values(|a| f(a.at))
                .into_iter()
                .map(Complex64::from)
                .collect(),
        ));
        Ok(self.space.sandwich(&self.frame(), &(&g * d * &g), &self.frame()))
    }

    /// `max_i || sqrt(n/m')(xi_i) gamma(xi_i) Q_i - sqrt(n/m')(lambda_i) gamma(lambda_i) Q_i ||`
    /// over the preimages `lambda_i`, where `xi_i` is the evaluation point of
    /// the atom holding `lambda_i`.
    pub fn distance_to_eigen_sum(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for atom in &self.atoms {
            let mut lambdas = atom.lambdas.clone();
            lambdas.dedup();
            for lambda in lambdas {
                if lambda == atom.at {
                    continue;
                }
                let cols: Vec<usize> = (0..atom.rank()).filter(|&j| atom.lambdas[j] == lambda).collect();
                let here: Vec<EdgeWave> = cols.iter().map(|&j| atom.images[j].clone()).collect();
                let exact = Atom::build(
                    self.graph,
                    lambda,
                    cols.iter()
                        .map(|&j| (lambda, atom.mus[j], atom.frame.column(j).into_owned()))
                        .collect(),
                )?;
                let diff = gram(&here, &here)? - gram(&here, &exact.images)? - gram(&exact.images, &here)?
                    + gram(&exact.images, &exact.images)?;
                worst = worst.max(op_norm(&diff).sqrt());
            }
        }
        Ok(worst)
    }
}

/// `Phi([a,b]) = sum_i sqrt(n/m')(lambda_i) gamma(lambda_i) Q_i`.
pub fn phi_eigen_sum<'g>(g: &'g Graph, e: &EigDecomp, k: usize, a: f64, b: f64) -> Result<IntertwinerMap<'g>> {
    let sys = band_eigensystem(e, k, a, b)?;
    let mut atoms = Vec::with_capacity(sys.preimages.len());
    for p in &sys.preimages {
        let cols = p
            .frame
            .column_iter()
            .map(|c| (p.lambda, p.mu, c.into_owned()))
            .collect();
        atoms.push(Atom::build(g, p.lambda, cols)?);
    }
    Ok(IntertwinerMap {
        graph: g,
        space: e.space().clone(),
        band: k,
        a,
        b,
        atoms,
    })
}

/// Partition `a = x_0 < x_1 < ... < x_n = b` with one tag per subinterval.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedPartition {
    pub points: Vec<f64>,
    pub tags: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagRule {
    Left,
    Mid,
    Right,
}

impl TaggedPartition {
    pub fn new(points: Vec<f64>, tags: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || tags.len() + 1 != points.len() {
            return Err(Error::InvalidArgument(
                "a partition needs n + 1 points and n tags".into(),
            ));
        }
        for (i, t) in tags.iter().enumerate() {
            let (lo, hi) = (points[i], points[i + 1]);
            if !(lo < hi) {
                return Err(Error::InvalidArgument("partition points must increase".into()));
            }
            if !(lo <= *t && *t <= hi) {
                return Err(Error::InvalidArgument(format!("tag {t} outside [{lo}, {hi}]")));
            }
        }
        Ok(TaggedPartition { points, tags })
    }

    pub fn uniform(a: f64, b: f64, pieces: usize, rule: TagRule) -> Result<Self> {
        if pieces == 0 || !(a < b) {
            return Err(Error::InvalidArgument("uniform partition of an empty interval".into()));
        }
        let h = (b - a) / pieces as f64;
        let mut points: Vec<f64> = (0..=pieces).map(|i| a + h * i as f64).collect();
        points[pieces] = b;
        let tags = points
            .windows(2)
            .map(|w| match rule {
                TagRule::Left => w[0],
                TagRule::Mid => 0.5 * (w[0] + w[1]),
                TagRule::Right => w[1],
            })
            .collect();
        Self::new(points, tags)
    }

    pub fn mesh(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Tags placed exactly on the given (sorted, interior) preimages.
    pub fn through(a: f64, b: f64, preimages: &[f64]) -> Result<Self> {
        let mut points = vec![a];
        for w in preimages.windows(2) {
            points.push(0.5 * (w[0] + w[1]));
        }
        points.push(b);
        if preimages.is_empty() {
            return Self::new(points, vec![0.5 * (a + b)]);
        }
        Self::new(points, preimages.to_vec())
    }

    /// Partition of mesh at most `delta` in which each preimage sits at the
    /// near end of its subinterval and the tag at the far end, so the tag is
    /// `0.999 delta` away from it. Requires `delta` below [`max_worst_case_mesh`].
    pub fn worst_case(a: f64, b: f64, preimages: &[f64], delta: f64) -> Result<Self> {
        let lead = 1e-3 * delta;
        let mut points = vec![a];
        let mut tags = Vec::new();
        let fill = |points: &mut Vec<f64>, tags: &mut Vec<f64>, to: f64| {
            let from = *points.last().unwrap();
            let len = to - from;
            if len <= 0.0 {
                return;
            }
            let n = (len / delta).ceil().max(1.0) as usize;
            for i in 1..=n {
                let x = if i == n { to } else { from + len * i as f64 / n as f64 };
                tags.push(0.5 * (points.last().unwrap() + x));
                points.push(x);
            }
        };
        for &lambda in preimages {
            fill(&mut points, &mut tags, lambda - lead);
            let far = lambda + delta - lead;
            points.push(far);
            tags.push(far);
        }
        fill(&mut points, &mut tags, b);
        Self::new(points, tags)
    }
}

/// Largest mesh for which [`TaggedPartition::worst_case`] keeps every
/// preimage-holding subinterval inside `[a, b]` and apart from the others.
pub fn max_worst_case_mesh(a: f64, b: f64, preimages: &[f64]) -> f64 {
    let mut d = 0.25 * (b - a);
    if let (Some(first), Some(last)) = (preimages.first(), preimages.last()) {
        d = d.min(0.5 * (first - a)).min(0.5 * (b - last));
    }
    for w in preimages.windows(2) {
        d = d.min(0.25 * (w[1] - w[0]));
    }
    d
}

/// `Phi_Delta = sum_j sqrt(n/m')(xi_j) gamma(xi_j) E_T(m(Delta_j))`.
pub fn phi_riemann_sum<'g>(
    g: &'g Graph,
    e: &EigDecomp,
    k: usize,
    a: f64,
    b: f64,
    partition: &TaggedPartition,
) -> Result<IntertwinerMap<'g>> {
    let sys = band_eigensystem(e, k, a, b)?;
    if partition.points.first() != Some(&a) || partition.points.last() != Some(&b) {
        return Err(Error::InvalidArgument(format!("partition does not cover [{a}, {b}]")));
    }
    let margin = e.cluster_threshold();
    for &x in &partition.points[1..partition.points.len() - 1] {
        if let Some(p) = sys.preimages.iter().find(|p| (p.lambda - x).abs() <= margin) {
            return Err(Error::AmbiguousBoundary {
                eigenvalue: p.lambda,
                endpoint: x,
            });
        }
    }
    let mut atoms = Vec::new();
    for (j, &tag) in partition.tags.iter().enumerate() {
        let (lo, hi) = (partition.points[j], partition.points[j + 1]);
        let cols: Vec<(f64, f64, DVector<f64>)> = sys
            .preimages
            .iter()
            .filter(|p| lo < p.lambda && p.lambda < hi)
            .flat_map(|p| p.frame.column_iter().map(move |c| (p.lambda, p.mu, c.into_owned())))
            .collect();
        if !cols.is_empty() {
            check_off_sigma(Complex64::from(tag))?;
            atoms.push(Atom::build(g, tag, cols)?);
        }
    }
    Ok(IntertwinerMap {
        graph: g,
        space: e.space().clone(),
        band: k,
        a,
        b,
        atoms,
    })
}

/// Defect of `Phi_Delta` against `Phi` for a sequence of halved meshes.
#[derive(Debug, Clone, Serialize)]
pub struct StieltjesTable {
    pub rows: Vec<StieltjesRow>,
    /// `defect(h/2) / defect(h)` for consecutive rows.
    pub ratios: Vec<f64>,
    /// Defect when every tag sits on its preimage.
    pub exact_defect: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StieltjesRow {
    pub mesh: f64,
    pub defect: f64,
}

impl StieltjesTable {
    /// Largest distance of a ratio from 1/2 (first-order convergence).
    pub fn worst_ratio_deviation(&self) -> f64 {
        self.ratios.iter().map(|r| (r - 0.5).abs()).fold(0.0, f64::max)
    }
}

/// Riemann-Stieltjes sums on worst-case tagged partitions of meshes
/// `delta_0 / 2^j`, `j < levels`.
pub fn stieltjes_table(g: &Graph, e: &EigDecomp, k: usize, a: f64, b: f64, levels: usize) -> Result<StieltjesTable> {
    let sys = band_eigensystem(e, k, a, b)?;
    let lambdas: Vec<f64> = sys.preimages.iter().map(|p| p.lambda).collect();
    let exact = if a < b {
        phi_riemann_sum(g, e, k, a, b, &TaggedPartition::through(a, b, &lambdas)?)?.distance_to_eigen_sum()?
    } else {
        0.0
    };
    let mut rows = Vec::new();
    if !lambdas.is_empty() {
        let delta0 = max_worst_case_mesh(a, b, &lambdas).min(0.5);
        for j in 0..levels {
            let delta = delta0 / f64::powi(2.0, j as i32);
            let part = TaggedPartition::worst_case(a, b, &lambdas, delta)?;
            let defect = phi_riemann_sum(g, e, k, a, b, &part)?.distance_to_eigen_sum()?;
            rows.push(StieltjesRow {
                mesh: part.mesh(),
                defect,
            });
        }
    }
    let ratios = rows.windows(2).map(|w| w[1].defect / w[0].defect).collect();
    Ok(StieltjesTable {
        rows,
        ratios,
        exact_defect: exact,
    })
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub anchor: String,
    pub defect: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new() -> Self {
        VerificationReport {
            checks: Vec::new(),
            pass: true,
        }
    }

    pub fn push(&mut self, name: &str, anchor: &str, defect: f64, tol: f64) {
        // NaN never passes
        let pass = defect <= tol;
        self.pass &= pass;
        self.checks.push(Check {
            name: name.into(),
            anchor: anchor.into(),
            defect,
            tol,
            pass,
        });
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.pass &= other.pass;
        self.checks.extend(other.checks);
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// A point of `(lo, hi)` whose distance to every preimage exceeds `gap`.
fn random_cut<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64, avoid: &[f64], gap: f64) -> Option<f64> {
    (0..200)
        .map(|_| rng.random_range(lo..hi))
        .find(|x| avoid.iter().all(|l| (l - x).abs() > gap))
}

/// Checks all operator identities of `Phi([a, b])` in band `k`.
///
/// `p` is the operator whose identities are claimed; it normally is the one
/// `e` was computed from.
pub fn verify_interval<R: Rng + ?Sized>(
    g: &Graph,
    p: &TransitionOperator,
    e: &EigDecomp,
    k: usize,
    a: f64,
    b: f64,
    rng: &mut R,
) -> Result<VerificationReport> {
    let space = e.space();
    let tol = IDENTITY_TOL;
    let phi = phi_eigen_sum(g, e, k, a, b)?;
    let lambdas: Vec<f64> = phi.atoms.iter().map(|at| at.at).collect();
    let (lo, hi) = m_image(a, b);
    let e_ab = spectral_projector(e, &IntervalSet::single(lo, hi))?;
    let star_phi = phi.star_phi()?;
    let mut report = VerificationReport::new();

    report.push(
        "isometry",
        "Phi*Phi = E_T(m([a,b]))",
        space.op_norm(&(&star_phi - &e_ab)),
        tol,
    );

    let residual = phi
        .images()
        .iter()
        .map(|f| vertex_residuals(g, f).max())
        .fold(0.0, f64::max);
    report.push(
        "image_eigen_residual",
        "ran Phi in ker(H - lambda): continuity and Kirchhoff",
        residual,
        tol,
    );

    // three pieces [a,c], [c,d], [d,b] with pairwise disjoint interiors
    let gap = 1e-6 * (1.0 + b.abs());
    let disjoint = if b - a > 4.0 * gap {
        let c = random_cut(rng, a, b, &lambdas, gap);
        let d = random_cut(rng, a, b, &lambdas, gap);
        match (c, d) {
            (Some(c), Some(d)) if (c - d).abs() > gap => {
                let (c, d) = (c.min(d), c.max(d));
                let pieces = [
                    phi_eigen_sum(g, e, k, a, c)?,
                    phi_eigen_sum(g, e, k, c, d)?,
                    phi_eigen_sum(g, e, k, d, b)?,
                ];
                let mut worst = 0.0f64;
                for i in 0..3 {
                    for j in 0..3 {
                        if i != j {
                            worst = worst.max(space.op_norm(&pieces[i].cross(&pieces[j])?));
                        }
                    }
                }
                worst
            }
            _ => 0.0,
        }
    } else {
        0.0
    };
    report.push(
        "disjointness",
        "Phi([a,c])* Phi([c,d]) = 0 for disjoint interiors",
        disjoint,
        tol,
    );

    // Omega: a random subinterval of [a, b]
    let transport = if b - a > 4.0 * gap {
        match (
            random_cut(rng, a, b, &lambdas, gap),
            random_cut(rng, a, b, &lambdas, gap),
        ) {
            (Some(c), Some(d)) => {
                let (wl, wh) = m_image(c.min(d), c.max(d));
                let e_omega = spectral_projector(e, &IntervalSet::single(wl, wh))?;
                space.op_norm(&(&star_phi * &e_omega * &star_phi - &e_omega))
            }
            _ => 0.0,
        }
    } else {
        0.0
    };
    report.push("transport", "E_H(Omega) = Phi E_T(m(Omega)) Phi*", transport, tol);

    let conj = phi.conjugate_multiplier(|l| ScalarMaps::real(l).m.re)?;
    let target = p.complex_matrix() * &e_ab;
    report.push(
        "conjugation",
        "m(H_J) = U T_m(J) U*",
        space.op_norm(&(conj - target)),
        tol,
    );

    let mut normalization = 0.0f64;
    for atom in &phi.atoms {
        let gm = gram(&atom.images, &atom.images)?;
        let id = CMat::identity(atom.rank(), atom.rank());
        normalization = normalization.max(op_norm(&(gm - id)));
    }
    report.push(
        "normalization",
        "sqrt(n/m') gamma(lambda) is isometric on ker(T - m(lambda))",
        normalization,
        tol,
    );

    let calculus = phi.conjugate_multiplier(|l| l)?;
    let inverse = e.function_of(&IntervalSet::single(lo, hi), |mu| {
        band_inverse(k, mu).unwrap_or(f64::NAN)
    })?;
    report.push(
        "functional_calculus",
        "H_J = U m^-1(T_m(J)) U*",
        space.op_norm(&(calculus - inverse)),
        tol * (1.0 + Band::new(k).upper()),
    );
    Ok(report)
}

/// `-gamma(z) M(z)^-1 gamma(conj z)^* F`, the difference of the Kirchhoff and
/// decoupled Dirichlet resolvents applied to `F`.
pub fn krein_correction_apply<'g>(
    g: &'g Graph,
    p: &TransitionOperator,
    z: C64,
    f: &EdgeWave<'g>,
) -> Result<EdgeWave<'g>> {
    check_off_sigma(z)?;
    let m = weyl_matrix(p, z)?;
    let singular = |inverse_norm| Error::SingularWeyl {
        re: z.re,
        im: z.im,
        inverse_norm,
    };
    // |M^-1| = 1 / sigma_min, read off in the unitary frame
    let svd = p.space().to_unitary_frame(&m).svd(false, false);
    let sigma_min = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let inv_norm = 1.0 / sigma_min;
    if !(inv_norm <= SINGULAR_WEYL_LIMIT) {
        return Err(singular(inv_norm));
    }
    let eta = gamma_adjoint_apply(g, z, f)?;
    let coeff = m.lu().solve(&eta).ok_or_else(|| singular(f64::INFINITY))?;
    gamma_apply(g, z, &(-coeff))
}

/// Condition number of `M(z)` on the weighted space.
pub fn condition_number(p: &TransitionOperator, z: C64) -> Result<f64> {
    let m = weyl_matrix(p, z)?;
    let s = p.space().to_unitary_frame(&m).svd(false, false).singular_values;
    let (min, max) = s
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(max / min.max(f64::MIN_POSITIVE))
}

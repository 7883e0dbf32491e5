//! Deficiency elements `gamma(z) xi` as per-edge trigonometric waves.
//!
//! On a canonical edge `(u, v)` a wave reads
//! `F(t) = a phi(1 - t) + b phi(t)` with `phi(t) = sin(w t) / sin(w)`,
//! `w^2 = z`. Writing `phi(t) = t g(z t^2) / g(z)` with the entire function
//! `g(y) = sin(sqrt y)/sqrt y` makes `z = 0` an ordinary point (`phi(t) = t`).
//!
//! Inner products are exact: with `s_p(t) = sin(p t)/p`,
//!
//! * `int_0^1 s_p(t) s_q(t) dt = -2 g[(p+q)^2, (p-q)^2]`
//! * `int_0^1 s_p(1-t) s_q(t) dt = -g[p^2, q^2]`
//!
//! where `g[., .]` is the first divided difference.

use std::io::Write;

use crate::discrete::{TransitionOperator, WeightedSpace};
use crate::entire::{cos_sqrt, frequency, sinc_sqrt, sinc_sqrt_divdiff, C64};
use crate::error::{Error, Result};
use crate::graph::{Graph, Orientation};
use crate::linalg::{CMat, CVec};
use crate::weyl::{check_off_sigma, weyl_matrix};

/// A function on the metric graph that is a single-frequency wave on every edge.
#[derive(Debug, Clone)]
pub struct EdgeWave<'g> {
    graph: &'g Graph,
    z: C64,
    norm: C64,
    coeffs: Vec<(C64, C64)>,
}

impl<'g> EdgeWave<'g> {
    /// Wave with the given per-edge coefficients `(a, b)` against the
    /// canonical orientation.
    pub fn new(graph: &'g Graph, z: C64, coeffs: Vec<(C64, C64)>) -> Result<Self> {
        if coeffs.len() != graph.edge_count() {
            return Err(Error::GraphMismatch);
        }
        check_off_sigma(z)?;
        Ok(EdgeWave {
            graph,
            z,
            norm: sinc_sqrt(z),
            coeffs,
        })
    }

    pub fn zero(graph: &'g Graph, z: C64) -> Result<Self> {
        let zero = C64::new(0.0, 0.0);
        Self::new(graph, z, vec![(zero, zero); graph.edge_count()])
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn z(&self) -> C64 {
        self.z
    }

    /// `w = sqrt z` with `Im w >= 0`.
    pub fn frequency(&self) -> C64 {
        frequency(self.z)
    }

    pub fn coeffs(&self) -> &[(C64, C64)] {
        &self.coeffs
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|(a, b)| {
            *a *= c;
            *b *= c;
        });
        out
    }

    /// Sum of two waves of the same frequency.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if !same_graph(self.graph, other.graph) || self.z != other.z {
            return Err(Error::GraphMismatch);
        }
        let mut out = self.clone();
        for (x, y) in out.coeffs.iter_mut().zip(&other.coeffs) {
            x.0 += y.0;
            x.1 += y.1;
        }
        Ok(out)
    }

    fn phi(&self, t: f64) -> C64 {
        sinc_sqrt(self.z * (t * t)) * t / self.norm
    }

    fn dphi(&self, t: f64) -> C64 {
        cos_sqrt(self.z * (t * t)) / self.norm
    }

    /// Value at the point at distance `t` from the lower endpoint of edge `e`.
    pub fn eval(&self, e: usize, t: f64) -> C64 {
        let (a, b) = self.coeffs[e];
        a * self.phi(1.0 - t) + b * self.phi(t)
    }

    /// Value at `(xy, t)`, read in either direction.
    pub fn eval_at(&self, x: usize, y: usize, t: f64) -> Option<C64> {
        let (e, o) = self.graph.find_edge(x, y)?;
        Some(match o {
            Orientation::Forward => self.eval(e, t),
            Orientation::Reversed => self.eval(e, 1.0 - t),
        })
    }

    /// Derivative along the canonical orientation.
    pub fn derivative(&self, e: usize, t: f64) -> C64 {
        let (a, b) = self.coeffs[e];
        -a * self.dphi(1.0 - t) + b * self.dphi(t)
    }

    /// Outgoing derivative `F'(xy, 0+)` at vertex `x` along edge `e`.
    pub fn outgoing_derivative(&self, e: usize, x: usize) -> C64 {
        match self.graph.orient(e, x) {
            Orientation::Forward => self.derivative(e, 0.0),
            Orientation::Reversed => -self.derivative(e, 1.0),
        }
    }

    /// Writes `edge_u,edge_v,t,re,im` rows on a uniform grid of `samples`
    /// points per edge.
    pub fn write_csv<W: Write>(&self, out: W, samples: usize) -> Result<()> {
        if samples < 2 {
            return Err(Error::InvalidArgument(
                "at least two samples per edge are required".into(),
            ));
        }
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
        w.write_record(["edge_u", "edge_v", "t", "re", "im"]).map_err(io)?;
        for (e, &(u, v)) in self.graph.edges().iter().enumerate() {
            for i in 0..samples {
                let t = i as f64 / (samples - 1) as f64;
                let f = self.eval(e, t);
                w.write_record([
                    self.graph.label(u).to_owned(),
                    self.graph.label(v).to_owned(),
                    t.to_string(),
                    f.re.to_string(),
                    f.im.to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
        Ok(())
    }
}

pub(crate) fn same_graph(a: &Graph, b: &Graph) -> bool {
    std::ptr::eq(a, b) || a == b
}

/// Edge-level Gram data for one pair of frequencies: with
/// `F = a1 phi1(1-t) + b1 phi1(t)` and `G = a2 phi2(1-t) + b2 phi2(t)`,
/// `int conj(F) G = (conj(a1) a2 + conj(b1) b2) same + (conj(a1) b2 + conj(b1) a2) cross`.
#[derive(Debug, Clone, Copy)]
pub struct EdgeKernel {
    same: C64,
    cross: C64,
}

impl EdgeKernel {
    pub fn new(z1: C64, z2: C64) -> Self {
        // conj(phi_{z1}(t)) = phi_{conj z1}(t) for real t
        let zc = z1.conj();
        let p = frequency(zc);
        let q = frequency(z2);
        let a = -2.0 * sinc_sqrt_divdiff((p + q) * (p + q), (p - q) * (p - q));
        let b = -sinc_sqrt_divdiff(zc, z2);
        let denom = sinc_sqrt(zc) * sinc_sqrt(z2);
        EdgeKernel {
            same: a / denom,
            cross: b / denom,
        }
    }

    pub fn pair(&self, (a1, b1): (C64, C64), (a2, b2): (C64, C64)) -> C64 {
        (a1.conj() * a2 + b1.conj() * b2) * self.same + (a1.conj() * b2 + b1.conj() * a2) * self.cross
    }
}

/// `L^2` inner product `sum_edges int_0^1 conj(F) G dt`.
pub fn edgewave_inner(f: &EdgeWave, g: &EdgeWave) -> Result<C64> {
    if !same_graph(f.graph, g.graph) {
        return Err(Error::GraphMismatch);
    }
    let k = EdgeKernel::new(f.z, g.z);
    Ok(f.coeffs.iter().zip(&g.coeffs).map(|(&x, &y)| k.pair(x, y)).sum())
}

/// `gamma(z) xi`: on edge `(u, v)` the coefficients are `(xi(u), xi(v))`.
pub fn gamma_apply<'g>(g: &'g Graph, z: C64, xi: &CVec) -> Result<EdgeWave<'g>> {
    if xi.len() != g.vertex_count() {
        return Err(Error::GraphMismatch);
    }
    let coeffs = g.edges().iter().map(|&(u, v)| (xi[u], xi[v])).collect();
    EdgeWave::new(g, z, coeffs)
}

/// `gamma(conj z)^* F`, the weighted adjoint appearing in the resolvent
/// formula: `eta(x) = deg(x)^-1 sum_{y ~ x} int_0^1 phi_w(1 - t) F_xy(t) dt`.
pub fn gamma_adjoint_apply(g: &Graph, z: C64, f: &EdgeWave) -> Result<CVec> {
    if !same_graph(g, f.graph) {
        return Err(Error::GraphMismatch);
    }
    check_off_sigma(z)?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let k = EdgeKernel::new(z.conj(), f.z);
    let mut eta = CVec::zeros(g.vertex_count());
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let c = f.coeffs[e];
        eta[u] += k.pair((one, zero), c);
        eta[v] += k.pair((zero, one), c);
    }
    for x in 0..g.vertex_count() {
        eta[x] /= g.degree(x) as f64;
    }
    Ok(eta)
}

/// Continuity and Kirchhoff defects at the vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexResiduals {
    pub continuity: f64,
    pub kirchhoff: f64,
}

impl VertexResiduals {
    pub fn max(&self) -> f64 {
        self.continuity.max(self.kirchhoff)
    }
}

pub fn vertex_residuals(g: &Graph, f: &EdgeWave) -> VertexResiduals {
    let mut continuity = 0.0f64;
    let mut kirchhoff = 0.0f64;
    for x in 0..g.vertex_count() {
        let traces: Vec<C64> = g
            .incident(x)
            .iter()
            .map(|&e| match g.orient(e, x) {
                Orientation::Forward => f.eval(e, 0.0),
                Orientation::Reversed => f.eval(e, 1.0),
            })
            .collect();
        for a in &traces {
            for b in &traces {
                continuity = continuity.max((a - b).norm());
            }
        }
        let flux: C64 = g.incident(x).iter().map(|&e| f.outgoing_derivative(e, x)).sum();
        kirchhoff = kirchhoff.max(flux.norm());
    }
    VertexResiduals { continuity, kirchhoff }
}

/// Matrix of `gamma(z2)^* gamma(z1)` on the weighted vertex space.
pub fn gamma_gram(g: &Graph, z1: C64, z2: C64) -> Result<CMat> {
    let space = WeightedSpace::new(g);
    let n = g.vertex_count();
    let mut out = CMat::zeros(n, n);
    for x in 0..n {
        let wave = gamma_apply(g, z1, &space.unit(x))?;
        let col = gamma_adjoint_apply(g, z2.conj(), &wave)?;
        out.set_column(x, &col);
    }
    Ok(out)
}

/// `|| M(z1) - M(conj z2) - (z1 - conj z2) gamma(z2)^* gamma(z1) ||`.
pub fn weyl_identity_residual(g: &Graph, p: &TransitionOperator, z1: C64, z2: C64) -> Result<f64> {
    let lhs = weyl_matrix(p, z1)? - weyl_matrix(p, z2.conj())?;
    let rhs = gamma_gram(g, z1, z2)? * (z1 - z2.conj());
    Ok(p.space().op_norm(&(lhs - rhs)))
}

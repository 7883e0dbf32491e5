//! Finite metric graphs with unit-length edges.
//!
//! Every edge is stored once, oriented from the lower to the higher vertex
//! index. The metric point `(uv, t)` coincides with `(vu, 1 - t)`; functions on
//! edges are stored against the canonical orientation and read through
//! [`Graph::orient`] when the opposite direction is requested.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    labels: Vec<String>,
    edges: Vec<(usize, usize)>,
    degree: Vec<usize>,
    /// Incident edge indices per vertex, in edge order.
    incidence: Vec<Vec<usize>>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    vertices: Vec<String>,
    edges: Vec<[String; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Cycle,
    Star,
    Path,
    Complete,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cycle" => Ok(Family::Cycle),
            "star" => Ok(Family::Star),
            "path" => Ok(Family::Path),
            "complete" => Ok(Family::Complete),
            other => Err(Error::InvalidArgument(format!("unknown graph family '{other}'"))),
        }
    }
}

/// Reading direction of a canonical edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Forward,
    Reversed,
}

impl Graph {
    /// Builds and validates a graph from labels and label pairs.
    pub fn new<S: AsRef<str>>(vertices: &[S], edges: &[(S, S)]) -> Result<Self> {
        let labels: Vec<String> = vertices.iter().map(|v| v.as_ref().to_owned()).collect();
        if labels.len() < 2 {
            return Err(Error::InvalidSize {
                what: "graph vertex count".into(),
                size: labels.len(),
            });
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.as_str(), i).is_some() {
                return Err(Error::Parse(format!("duplicate vertex '{l}'")));
            }
        }
        let lookup = |s: &str| index.get(s).copied().ok_or_else(|| Error::UnknownVertex(s.to_owned()));

        let mut canonical = Vec::with_capacity(edges.len());
        let mut seen = HashMap::new();
        for (a, b) in edges {
            let (u, v) = (lookup(a.as_ref())?, lookup(b.as_ref())?);
            if u == v {
                return Err(Error::LoopEdge(labels[u].clone()));
            }
            let e = (u.min(v), u.max(v));
            if seen.insert(e, ()).is_some() {
                return Err(Error::DuplicateEdge(labels[e.0].clone(), labels[e.1].clone()));
            }
            canonical.push(e);
        }
        Self::from_indexed(labels, canonical)
    }

    fn from_indexed(labels: Vec<String>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = labels.len();
        let mut incidence = vec![Vec::new(); n];
        for (i, &(u, v)) in edges.iter().enumerate() {
            incidence[u].push(i);
            incidence[v].push(i);
        }
        let degree: Vec<usize> = incidence.iter().map(Vec::len).collect();

        let mut reached = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        reached[0] = true;
        while let Some(x) = queue.pop_front() {
            for &e in &incidence[x] {
                let y = if edges[e].0 == x { edges[e].1 } else { edges[e].0 };
                if !reached[y] {
                    reached[y] = true;
                    queue.push_back(y);
                }
            }
        }
        if let Some(miss) = reached.iter().position(|r| !r) {
            return Err(Error::Disconnected(labels[miss].clone()));
        }
        Ok(Graph {
            labels,
            edges,
            degree,
            incidence,
        })
    }

    /// Parses the JSON graph format.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let edges: Vec<(&str, &str)> = file.edges.iter().map(|[a, b]| (a.as_str(), b.as_str())).collect();
        let vertices: Vec<&str> = file.vertices.iter().map(String::as_str).collect();
        Self::new(&vertices, &edges)
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile {
            vertices: self.labels.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(u, v)| [self.labels[u].clone(), self.labels[v].clone()])
                .collect(),
        };
        serde_json::to_string(&file).expect("graph serialization cannot fail")
    }

    pub fn builtin(family: Family, n: usize) -> Result<Self> {
        let min = match family {
            Family::Cycle | Family::Complete => 3,
            Family::Star | Family::Path => 2,
        };
        if n < min {
            return Err(Error::InvalidSize {
                what: format!("{family:?} graph"),
                size: n,
            });
        }
        let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let edges: Vec<(usize, usize)> = match family {
            Family::Cycle => (0..n)
                .map(|i| ((i + 1) % n, i))
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect(),
            Family::Path => (0..n - 1).map(|i| (i, i + 1)).collect(),
            Family::Star => (1..n).map(|i| (0, i)).collect(),
            Family::Complete => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        };
        Self::from_indexed(labels, edges)
    }

    /// Random connected graph: a random recursive tree plus independent extra
    /// edges with probability `extra`.
    pub fn random_connected<R: Rng + ?Sized>(rng: &mut R, n: usize, extra: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize {
                what: "random graph".into(),
                size: n,
            });
        }
        let mut present = vec![vec![false; n]; n];
        for v in 1..n {
            let u = rng.random_range(0..v);
            present[u][v] = true;
        }
        for u in 0..n {
            for v in u + 1..n {
                if !present[u][v] && rng.random::<f64>() < extra {
                    present[u][v] = true;
                }
            }
        }
        let edges = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| present[u][v])
            .collect();
        Self::from_indexed((0..n).map(|i| format!("v{i}")).collect(), edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, x: usize) -> usize {
        self.degree[x]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degree
    }

    pub fn incident(&self, x: usize) -> &[usize] {
        &self.incidence[x]
    }

    /// Index of the edge joining `x` and `y`, with the orientation in which
    /// it is read when starting from `x`.
    pub fn find_edge(&self, x: usize, y: usize) -> Option<(usize, Orientation)> {
        self.incidence[x].iter().find_map(|&e| match self.edges[e] {
            (u, v) if u == x && v == y => Some((e, Orientation::Forward)),
            (u, v) if u == y && v == x => Some((e, Orientation::Reversed)),
            _ => None,
        })
    }

    /// Orientation of edge `e` when read from its endpoint `x`.
    pub fn orient(&self, e: usize, x: usize) -> Orientation {
        if self.edges[e].0 == x {
            Orientation::Forward
        } else {
            debug_assert_eq!(self.edges[e].1, x);
            Orientation::Reversed
        }
    }

    pub fn other_end(&self, e: usize, x: usize) -> usize {
        let (u, v) = self.edges[e];
        if u == x {
            v
        } else {
            u
        }
    }

    pub fn is_bipartite(&self) -> bool {
        let mut color = vec![None; self.vertex_count()];
        color[0] = Some(false);
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            let cx = color[x].unwrap();
            for &e in &self.incidence[x] {
                let y = self.other_end(e, x);
                match color[y] {
                    None => {
                        color[y] = Some(!cx);
                        queue.push_back(y);
                    }
                    Some(cy) if cy == cx => return false,
                    _ => {}
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn loads_triangle_and_star() {
        let tri = Graph::from_json(r#"{"vertices":["a","b","c"],"edges":[["a","b"],["b","c"],["c","a"]]}"#).unwrap();
        assert_eq!(tri.degrees(), &[2, 2, 2]);
        assert_eq!(tri.edges(), &[(0, 1), (1, 2), (0, 2)]);

        let star = Graph::from_json(r#"{"vertices":["c","l1","l2","l3"],"edges":[["c","l1"],["c","l2"],["c","l3"]]}"#)
            .unwrap();
        assert_eq!(star.degrees(), &[3, 1, 1, 1]);
    }

    #[test]
    fn rejects_invalid_files() {
        let loop_edge = Graph::from_json(r#"{"vertices":["a","b"],"edges":[["a","b"],["a","a"]]}"#);
        assert_eq!(loop_edge, Err(Error::LoopEdge("a".into())));
        let dup = Graph::from_json(r#"{"vertices":["a","b"],"edges":[["a","b"],["b","a"]]}"#);
        assert_eq!(dup, Err(Error::DuplicateEdge("a".into(), "b".into())));
        let unknown = Graph::from_json(r#"{"vertices":["a","b"],"edges":[["a","z"]]}"#);
        assert_eq!(unknown, Err(Error::UnknownVertex("z".into())));
        let disc = Graph::from_json(r#"{"vertices":["a","b","c","d"],"edges":[["a","b"],["c","d"]]}"#);
        assert_eq!(disc, Err(Error::Disconnected("c".into())));
        let extra = Graph::from_json(r#"{"vertices":["a","b"],"edges":[["a","b"]],"lengths":[1]}"#);
        assert!(matches!(extra, Err(Error::Parse(_))));
        let garbage = Graph::from_json("{not json");
        assert!(matches!(garbage, Err(Error::Parse(_))));
    }

    #[test]
    fn builtin_families() {
        let c3 = Graph::builtin(Family::Cycle, 3).unwrap();
        assert_eq!(c3.edge_count(), 3);
        let p2 = Graph::builtin(Family::Path, 2).unwrap();
        assert_eq!((p2.edge_count(), p2.degrees()), (1, &[1usize, 1][..]));
        let s4 = Graph::builtin(Family::Star, 4).unwrap();
        assert_eq!(s4.degrees(), &[3, 1, 1, 1]);
        let k4 = Graph::builtin(Family::Complete, 4).unwrap();
        assert_eq!(k4.edge_count(), 6);
        assert!(Graph::builtin(Family::Cycle, 2).is_err());
        assert!(Graph::builtin(Family::Path, 1).is_err());
    }

    #[test]
    fn reparsing_is_stable() {
        let g = Graph::from_json(r#"{"vertices":["x","y","z"],"edges":[["z","x"],["y","z"]]}"#).unwrap();
        let again = Graph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, again);
        assert_eq!(g.edges(), &[(0, 2), (1, 2)]);
    }

    #[test]
    fn random_graphs_are_valid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 2..12 {
            let g = Graph::random_connected(&mut rng, n, 0.3).unwrap();
            let total: usize = g.degrees().iter().sum();
            assert_eq!(total, 2 * g.edge_count());
            assert!(g.degrees().iter().all(|&d| d >= 1));
        }
    }

    #[test]
    fn bipartiteness() {
        assert!(Graph::builtin(Family::Cycle, 4).unwrap().is_bipartite());
        assert!(!Graph::builtin(Family::Cycle, 3).unwrap().is_bipartite());
    }
}

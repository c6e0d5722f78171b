use super::{h2, tree, zmu, Point, SpaceError, SpaceParams};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceKind {
    H2,
    Tree,
    Zmu,
    ZmuCover,
    Graph,
}

impl SpaceKind {
    pub fn label(self) -> &'static str {
        match self {
            SpaceKind::H2 => "h2",
            SpaceKind::Tree => "tree",
            SpaceKind::Zmu => "zmu",
            SpaceKind::ZmuCover => "zmu_cover",
            SpaceKind::Graph => "graph",
        }
    }
}

/// Which distance function a net uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Oracle {
    ClosedForm,
    GraphShortestPath,
    RadialFormula,
}

/// Boundary metric feeding the radial oracle of a Z net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Visual {
    /// maxᵢ dc(Δxᵢ)^{1/μᵢ}.
    #[default]
    Standard,
    /// max{|Δy|, |Δx − Δy·log|Δy||} on two coordinates.
    Unipotent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub len: f64,
}

/// Points of one ℍ² circle stored contiguously with ascending angles.
#[derive(Debug, Clone)]
pub(crate) struct Circle {
    pub r: f64,
    pub start: usize,
    pub thetas: Vec<f64>,
}

/// A finite metric space with a measure and an adjacency structure.
#[derive(Debug, Clone)]
pub struct Net {
    pub kind: SpaceKind,
    pub params: SpaceParams,
    pub points: Vec<Point>,
    pub measure: Vec<f64>,
    pub edges: Vec<Edge>,
    pub oracle: Oracle,
    /// Measured ray constant D: every point lies within D of a ray from the base point.
    pub ray_constant: Option<f64>,
    pub visual: Visual,
    pub(crate) circles: Option<Vec<Circle>>,
    apsp: Option<Vec<f64>>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl Net {
    pub(crate) fn assemble(
        kind: SpaceKind,
        params: SpaceParams,
        points: Vec<Point>,
        measure: Vec<f64>,
        edges: Vec<Edge>,
        oracle: Oracle,
    ) -> Self {
        let adjacency = adjacency_lists(points.len(), &edges);
        Self {
            kind,
            params,
            points,
            measure,
            edges,
            oracle,
            ray_constant: None,
            visual: Visual::Standard,
            circles: None,
            apsp: None,
            adjacency,
        }
    }

    pub(crate) fn set_edges(&mut self, edges: Vec<Edge>) {
        self.adjacency = adjacency_lists(self.points.len(), &edges);
        self.edges = edges;
    }

    /// Weighted graph on `n` vertices with shortest-path distances.
    ///
    /// All-pairs distances are computed eagerly, so this is meant for small graphs.
    pub fn from_graph(n: usize, edges: Vec<Edge>, measure: Option<Vec<f64>>) -> Result<Self, SpaceError> {
        if n == 0 {
            return Err(SpaceError::InvalidParams("graph needs at least one vertex".into()));
        }
        if n > 20_000 {
            return Err(SpaceError::SizeCap { requested: n as f64, cap: 20_000 });
        }
        for e in &edges {
            if e.src >= n || e.dst >= n || !(e.len > 0.0) || e.src == e.dst {
                return Err(SpaceError::InvalidParams(format!("bad edge {e:?}")));
            }
        }
        let measure = measure.unwrap_or_else(|| vec![1.0; n]);
        if measure.len() != n || measure.iter().any(|&m| !(m > 0.0)) {
            return Err(SpaceError::InvalidParams("measure must be positive, one weight per vertex".into()));
        }
        let min_len = edges.iter().map(|e| e.len).fold(f64::INFINITY, f64::min);
        let mesh = if min_len.is_finite() { min_len } else { 1.0 };
        let params = SpaceParams { mu: vec![1.0], radius: 0.0, mesh, delta: 0.0, base_dim: 1 };
        let points = (0..n).map(|id| Point::Vertex { id }).collect();
        let mut net = Self::assemble(SpaceKind::Graph, params, points, measure, edges, Oracle::GraphShortestPath);
        let mut apsp = vec![f64::INFINITY; n * n];
        for s in 0..n {
            let row = dijkstra(&net.adjacency, s);
            apsp[s * n..(s + 1) * n].copy_from_slice(&row);
        }
        let diam = apsp.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max);
        net.params.radius = diam;
        net.apsp = Some(apsp);
        Ok(net)
    }

    /// Net over explicit points of one kind, with the oracle of that kind.
    ///
    /// Z points need `mu` (one rate per torus coordinate); vertices are joined
    /// by `edges` and use shortest paths. `visual` only affects Z points.
    pub fn from_points(points: Vec<Point>, measure: Vec<f64>, edges: Vec<Edge>, mu: Option<Vec<f64>>, visual: Visual) -> Result<Self, SpaceError> {
        let first = points.first().ok_or_else(|| SpaceError::InvalidParams("no points".into()))?;
        let label = first.kind_label();
        if points.iter().any(|p| p.kind_label() != label) {
            return Err(SpaceError::InvalidParams("points of mixed kinds".into()));
        }
        if measure.len() != points.len() || measure.iter().any(|&m| !(m > 0.0)) {
            return Err(SpaceError::InvalidParams("measure must be positive, one weight per point".into()));
        }
        if edges.iter().any(|e| e.src >= points.len() || e.dst >= points.len()) {
            return Err(SpaceError::InvalidParams("edge endpoint out of range".into()));
        }
        if label == "vertex" {
            if points.iter().enumerate().any(|(i, p)| *p != Point::Vertex { id: i }) {
                return Err(SpaceError::InvalidParams("vertex ids must be 0..n in order".into()));
            }
            return Self::from_graph(points.len(), edges, Some(measure));
        }
        let radius = points.iter().map(Point::height).fold(0.0, f64::max);
        let (kind, oracle, mu) = match label {
            "h2" => (SpaceKind::H2, Oracle::ClosedForm, vec![1.0]),
            "tree" => (SpaceKind::Tree, Oracle::ClosedForm, vec![1.0]),
            _ => {
                let dim = first.coords().len() - 1;
                let mu = mu.ok_or_else(|| SpaceError::InvalidParams("Z points need mu".into()))?;
                if mu.len() != dim {
                    return Err(SpaceError::InvalidParams(format!("mu has {} entries for {dim} torus coordinates", mu.len())));
                }
                let kind = if label == "z" { SpaceKind::Zmu } else { SpaceKind::ZmuCover };
                (kind, Oracle::RadialFormula, mu)
            }
        };
        let mesh = edges.iter().map(|e| e.len).fold(f64::INFINITY, f64::min);
        let mesh = if mesh.is_finite() { mesh } else { 1.0 };
        let mesh = if radius > 0.0 { mesh.min(radius) } else { mesh };
        let params = SpaceParams::new(mu, radius, mesh)?;
        let mut net = Self::assemble(kind, params, points, measure, edges, oracle);
        net.visual = visual;
        Ok(net)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_measure(&self) -> f64 {
        self.measure.iter().sum()
    }

    /// Replaces the volume weights by counting measure.
    pub fn with_counting_measure(mut self) -> Self {
        self.measure = vec![1.0; self.len()];
        self
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Distance between points `i` and `j` under the net's oracle.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        if let Some(apsp) = &self.apsp {
            return apsp[i * self.len() + j];
        }
        self.point_distance(&self.points[i], &self.points[j])
    }

    /// Oracle distance between two points of this net's kind.
    pub fn point_distance(&self, p: &Point, q: &Point) -> f64 {
        match (p, q) {
            (Point::H2 { .. }, Point::H2 { .. }) => h2::h2_distance(p, q),
            (Point::TreeNode { path: a }, Point::TreeNode { path: b }) => tree::tree_distance(a, b),
            (Point::Z { t: t1, x: x1 }, Point::Z { t: t2, x: x2 }) if self.visual == Visual::Unipotent => {
                zmu::unipotent_radial_distance(*t1, x1, *t2, x2)
            }
            (Point::Z { .. }, Point::Z { .. }) | (Point::ZCover { .. }, Point::ZCover { .. }) => {
                zmu::zmu_distance(p, q, &self.params.mu)
            }
            (Point::Vertex { id: a }, Point::Vertex { id: b }) => match &self.apsp {
                Some(apsp) => apsp[a * self.len() + b],
                None => f64::INFINITY,
            },
            _ => f64::NAN,
        }
    }

    /// Indices of points within distance `radius` of point `i` (including `i`).
    pub fn neighbors_within(&self, i: usize, radius: f64) -> Vec<usize> {
        if let Some(circles) = &self.circles {
            return h2::circle_query(self, circles, i, radius);
        }
        if self.kind == SpaceKind::Tree {
            return self.tree_ball(i, radius);
        }
        (0..self.len()).filter(|&j| self.distance(i, j) <= radius).collect()
    }

    fn tree_ball(&self, i: usize, radius: f64) -> Vec<usize> {
        let mut out = vec![i];
        let mut frontier = vec![(i, usize::MAX, 0.0)];
        while let Some((v, parent, d)) = frontier.pop() {
            for &(w, len) in &self.adjacency[v] {
                if w != parent && d + len <= radius {
                    out.push(w);
                    frontier.push((w, v, d + len));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Smallest edge length, or the configured mesh if there are no edges.
    pub fn min_edge(&self) -> f64 {
        let m = self.edges.iter().map(|e| e.len).fold(f64::INFINITY, f64::min);
        if m.is_finite() {
            m
        } else {
            self.params.mesh
        }
    }

    /// Whether the adjacency graph is connected.
    pub fn is_connected(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.len()
    }

    /// Restriction of the net to the listed points, keeping edges between them.
    pub fn subnet(&self, keep: &[usize]) -> Net {
        let mut index = vec![usize::MAX; self.len()];
        for (new, &old) in keep.iter().enumerate() {
            index[old] = new;
        }
        let points = keep.iter().map(|&i| self.points[i].clone()).collect();
        let measure = keep.iter().map(|&i| self.measure[i]).collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| index[e.src] != usize::MAX && index[e.dst] != usize::MAX)
            .map(|e| Edge { src: index[e.src], dst: index[e.dst], len: e.len })
            .collect();
        let mut net = Net::assemble(self.kind, self.params.clone(), points, measure, edges, self.oracle);
        net.ray_constant = self.ray_constant;
        net.visual = self.visual;
        if let Some(apsp) = &self.apsp {
            let n = keep.len();
            let mut sub = vec![0.0; n * n];
            for (a, &i) in keep.iter().enumerate() {
                for (b, &j) in keep.iter().enumerate() {
                    sub[a * n + b] = apsp[i * self.len() + j];
                }
            }
            net.apsp = Some(sub);
        }
        net
    }
}

fn adjacency_lists(n: usize, edges: &[Edge]) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.src].push((e.dst, e.len));
        adj[e.dst].push((e.src, e.len));
    }
    adj
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], s: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[s] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Item(0.0, s));
    while let Some(Item(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, len) in &adj[v] {
            let nd = d + len;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Item(nd, w));
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Net {
        let edges = (0..n - 1).map(|i| Edge { src: i, dst: i + 1, len: 1.0 }).collect();
        Net::from_graph(n, edges, None).unwrap()
    }

    #[test]
    fn graph_distances_are_path_lengths() {
        let net = path(5);
        assert_eq!(net.distance(0, 4), 4.0);
        assert_eq!(net.distance(3, 1), 2.0);
        assert_eq!(net.neighbors_within(2, 1.0), vec![1, 2, 3]);
        assert!(net.is_connected());
    }

    #[test]
    fn disconnected_graph_has_infinite_distance() {
        let net = Net::from_graph(3, vec![Edge { src: 0, dst: 1, len: 1.0 }], None).unwrap();
        assert!(net.distance(0, 2).is_infinite());
        assert!(!net.is_connected());
    }

    #[test]
    fn subnet_keeps_distances() {
        let net = path(6);
        let sub = net.subnet(&[1, 4, 5]);
        assert_eq!(sub.distance(0, 1), 3.0);
        assert_eq!(sub.edges.len(), 1);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Net::from_graph(2, vec![Edge { src: 0, dst: 2, len: 1.0 }], None).is_err());
        assert!(Net::from_graph(2, vec![Edge { src: 0, dst: 1, len: 0.0 }], None).is_err());
    }
}

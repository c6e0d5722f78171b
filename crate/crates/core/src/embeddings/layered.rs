//! Rooted trees drawn level by level on concentric ℍ² circles.
//!
//! Level k holds N_k nodes at radius r_k with angle 2π(2j + o_k)/(2N_k). The
//! children of a node occupy a contiguous index range of the next level, so
//! the descendants of any node at any deeper level are again a contiguous
//! (cyclic) range. Both layouts used here are invariant under rotating a level
//! by one node, so every node of a level sees the same pair statistics.
//!
//! That structure gives the extremes of the ℍ² distance for each tree
//! distance without visiting all pairs: a pair whose lowest common ancestor
//! is w falls in two different child subtrees of w (or has w as an endpoint),
//! and on each fixed pair of levels the ℍ² distance is increasing in the
//! angular gap, whose extremes over two arcs sit at arc endpoints or at
//! points nearest to an antipode.

use crate::spaces::{h2_distance_polar, Edge, Net, Oracle, Point, SpaceError, SpaceKind, SpaceParams};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Power-of-two levels; each node's parent is the nearest node of the
    /// previous level, exact ties going to the lower index.
    Nearest,
    /// Children of node j are the consecutive block j·b .. j·b + b − 1.
    Blocks,
}

#[derive(Debug, Clone)]
pub struct LayeredTree {
    pub radii: Vec<f64>,
    pub counts: Vec<u128>,
    /// o_k ∈ {0, 1}: angles are offset by half a step when 1.
    pub offsets: Vec<u8>,
    pub layout: Layout,
}

/// For each tree distance T, the smallest and largest ℍ² distance over pairs at tree distance T.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedScatter {
    pub extremes: BTreeMap<u32, (f64, f64)>,
}

impl CompressedScatter {
    /// Scatter points (tree distance, ℍ² distance), two per tree distance.
    pub fn tree_to_h2_points(&self) -> Vec<(f64, f64)> {
        self.extremes
            .iter()
            .flat_map(|(&t, &(lo, hi))| [(f64::from(t), lo), (f64::from(t), hi)])
            .collect()
    }

    /// Scatter points (ℍ² distance, tree distance).
    pub fn h2_to_tree_points(&self) -> Vec<(f64, f64)> {
        self.tree_to_h2_points().into_iter().map(|(a, b)| (b, a)).collect()
    }

    fn record(&mut self, t: u32, lo: f64, hi: f64) {
        let e = self.extremes.entry(t).or_insert((f64::INFINITY, f64::NEG_INFINITY));
        e.0 = e.0.min(lo);
        e.1 = e.1.max(hi);
    }
}

/// Inclusive index range on one level; may extend below 0 or past N (cyclic).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Arc {
    lo: i128,
    hi: i128,
}

impl LayeredTree {
    pub fn depth(&self) -> usize {
        self.radii.len() - 1
    }

    pub fn total_nodes(&self) -> f64 {
        self.counts.iter().map(|&c| c as f64).sum()
    }

    fn child_arc(&self, k: usize, i: i128) -> Arc {
        let n = self.counts[k] as i128;
        let m = self.counts[k + 1] as i128;
        match self.layout {
            Layout::Nearest => {
                let s = m / n;
                if s == 1 {
                    Arc { lo: i, hi: i }
                } else {
                    Arc { lo: i * s - s / 2 + 1, hi: i * s + s / 2 }
                }
            }
            Layout::Blocks => {
                let b = m / n;
                Arc { lo: i * b, hi: i * b + b - 1 }
            }
        }
    }

    /// Parent index of node j on level k ≥ 1.
    pub fn parent(&self, k: usize, j: u128) -> u128 {
        let n = self.counts[k - 1];
        let m = self.counts[k];
        match self.layout {
            Layout::Nearest => {
                let s = m / n;
                let (q, r) = (j / s, j % s);
                if s > 1 && r > s / 2 {
                    (q + 1) % n
                } else {
                    q
                }
            }
            Layout::Blocks => j / (m / n),
        }
    }

    /// Descendants on level `a` of the arc `arc` on level `k`.
    fn descend(&self, k: usize, arc: Arc, a: usize) -> Arc {
        let mut cur = arc;
        for level in k..a {
            cur = Arc { lo: self.child_arc(level, cur.lo).lo, hi: self.child_arc(level, cur.hi).hi };
        }
        cur
    }

    /// Angle of node (k, j) in fixed point, 2¹²⁸ being one full turn.
    fn turn(&self, k: usize, j: i128) -> u128 {
        let n = self.counts[k];
        if n == 1 {
            return 0;
        }
        let num = 2 * j.rem_euclid(n as i128) as u128 + u128::from(self.offsets[k]);
        let half = 1u128 << 127;
        let (q, r) = (half / n, half % n);
        num * q + (num * r) / n
    }

    /// ⌊T·N/2¹²⁸⌋ for a fixed-point angle T.
    fn index_floor(t: u128, n: u128) -> u128 {
        if n == 1 {
            0
        } else if n.is_power_of_two() {
            t >> (128 - n.trailing_zeros())
        } else {
            let (hi, lo) = (t >> 64, t & u128::from(u64::MAX));
            (hi * n + ((lo * n) >> 64)) >> 64
        }
    }

    /// Angular gap in radians between node (k, j) and node (a, i), folded into [0, π].
    fn gap(&self, k: usize, j: i128, a: usize, i: i128) -> f64 {
        let d = self.turn(k, j).wrapping_sub(self.turn(a, i));
        let folded = d.min(d.wrapping_neg());
        TAU * (folded as f64 / 2f64.powi(128))
    }

    /// Indices of `arc` on level `a` nearest to node (k, j) or to its antipode, plus the arc ends.
    fn toward(&self, k: usize, j: i128, a: usize, arc: Arc, antipodal: bool) -> Vec<i128> {
        let mut target = self.turn(k, j);
        if antipodal {
            target = target.wrapping_add(1u128 << 127);
        }
        let n = self.counts[a] as i128;
        let base = Self::index_floor(target, self.counts[a]) as i128;
        let mut out = Vec::with_capacity(5);
        for x in [base - 1, base, base + 1] {
            let off = (x - arc.lo).rem_euclid(n);
            if off <= arc.hi - arc.lo {
                out.push(arc.lo + off);
            }
        }
        out.push(arc.lo);
        out.push(arc.hi);
        out
    }

    /// Exact nearest and farthest gap from node (k, j) to the nodes of `arc` on level `a`.
    fn arc_gaps(&self, k: usize, j: i128, a: usize, arc: Arc) -> (f64, f64) {
        let near = self.toward(k, j, a, arc, false);
        let far = self.toward(k, j, a, arc, true);
        let lo = near.iter().map(|&x| self.gap(k, j, a, x)).fold(f64::INFINITY, f64::min);
        let hi = far.iter().map(|&x| self.gap(k, j, a, x)).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Gap extremes between two disjoint arcs on levels `a` ≤ `b`.
    ///
    /// In the block layout the shorter arc is scanned point by point. In the
    /// power-of-two layout level-a angles and their antipodes lie on the
    /// level-b grid, so the extremes are attained at arc ends or at points
    /// nearest to the antipodes of the other arc's ends.
    fn two_arc_gaps(&self, a: usize, i: Arc, b: usize, j: Arc) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let (len_i, len_j) = (i.hi - i.lo + 1, j.hi - j.lo + 1);
        if self.layout == Layout::Blocks && len_i.min(len_j) <= 1 << 17 {
            let (short_level, short, long_level, long) = if len_i <= len_j { (a, i, b, j) } else { (b, j, a, i) };
            for u in short.lo..=short.hi {
                let (l, h) = self.arc_gaps(short_level, u, long_level, long);
                lo = lo.min(l);
                hi = hi.max(h);
            }
            return (lo, hi);
        }
        for u in [i.lo, i.hi] {
            let (l, h) = self.arc_gaps(a, u, b, j);
            lo = lo.min(l);
            hi = hi.max(h);
        }
        for v in [j.lo, j.hi] {
            let (l, _) = self.arc_gaps(b, v, a, i);
            lo = lo.min(l);
            for u in self.toward(b, v, a, i, true) {
                let (_, h) = self.arc_gaps(a, u, b, j);
                hi = hi.max(h);
            }
        }
        (lo, hi)
    }

    fn distance_range(&self, a: usize, b: usize, gaps: (f64, f64)) -> (f64, f64) {
        let (ra, rb) = (self.radii[a], self.radii[b]);
        (h2_distance_polar(ra, 0.0, rb, gaps.0), h2_distance_polar(ra, 0.0, rb, gaps.1))
    }

    /// Exact per-tree-distance extremes of the ℍ² distance over all node pairs.
    pub fn compressed_scatter(&self) -> CompressedScatter {
        let depth = self.depth();
        let mut out = CompressedScatter { extremes: BTreeMap::new() };
        for l in 0..=depth {
            let w = Arc { lo: 0, hi: 0 };
            for b in l + 1..=depth {
                let desc = self.descend(l, w, b);
                let gaps = self.arc_gaps(l, 0, b, desc);
                let (lo, hi) = self.distance_range(l, b, gaps);
                out.record((b - l) as u32, lo, hi);
            }
            if l == depth {
                continue;
            }
            let kids = self.child_arc(l, 0);
            if kids.hi == kids.lo {
                continue;
            }
            for a in l + 1..=depth {
                for b in a..=depth {
                    let t = (a + b - 2 * l) as u32;
                    for c in kids.lo..=kids.hi {
                        let me = self.descend(l + 1, Arc { lo: c, hi: c }, a);
                        let mut others = Vec::with_capacity(2);
                        if c > kids.lo {
                            others.push(self.descend(l + 1, Arc { lo: kids.lo, hi: c - 1 }, b));
                        }
                        if c < kids.hi {
                            others.push(self.descend(l + 1, Arc { lo: c + 1, hi: kids.hi }, b));
                        }
                        for other in others {
                            let gaps = self.two_arc_gaps(a, me, b, other);
                            let (lo, hi) = self.distance_range(a, b, gaps);
                            out.record(t, lo, hi);
                        }
                    }
                }
            }
        }
        out
    }

    /// Enumerates the nodes as an ℍ² point net and as a unit-edge tree, in the same order.
    pub fn enumerate(&self, cap: usize) -> Result<(Net, Net), SpaceError> {
        let total = self.total_nodes();
        if total > cap as f64 {
            return Err(SpaceError::SizeCap { requested: total, cap });
        }
        let mut points = Vec::with_capacity(total as usize);
        let mut offsets = Vec::with_capacity(self.counts.len());
        let mut parents: Vec<Option<usize>> = Vec::with_capacity(total as usize);
        for (k, &n) in self.counts.iter().enumerate() {
            offsets.push(points.len());
            for j in 0..n {
                let theta = TAU * (self.turn(k, j as i128) as f64 / 2f64.powi(128));
                points.push(Point::H2 { r: self.radii[k], theta });
                parents.push((k > 0).then(|| offsets[k - 1] + self.parent(k, j) as usize));
            }
        }
        let radius = self.radii.last().copied().unwrap_or(0.0);
        let params = SpaceParams::unit(radius, radius.clamp(1e-9, 1.0))?;
        let measure = vec![1.0; points.len()];
        let h2 = Net::assemble(SpaceKind::H2, params, points, measure, Vec::new(), Oracle::ClosedForm);
        Ok((h2, tree_from_parents(&parents)?))
    }
}

/// Unit-edge tree from parent pointers listed in breadth-first order.
pub(crate) fn tree_from_parents(parents: &[Option<usize>]) -> Result<Net, SpaceError> {
    let mut paths: Vec<Vec<u32>> = Vec::with_capacity(parents.len());
    let mut child_count = vec![0u32; parents.len()];
    let mut edges = Vec::with_capacity(parents.len());
    for (i, p) in parents.iter().enumerate() {
        match p {
            None => paths.push(Vec::new()),
            Some(p) => {
                if *p >= i {
                    return Err(SpaceError::InvalidParams("parents must precede children".into()));
                }
                let mut path = paths[*p].clone();
                path.push(child_count[*p]);
                child_count[*p] += 1;
                paths.push(path);
                edges.push(Edge { src: *p, dst: i, len: 1.0 });
            }
        }
    }
    let depth = paths.iter().map(Vec::len).max().unwrap_or(0);
    let params = SpaceParams::unit(depth as f64, 1.0)?;
    let points = paths.into_iter().map(|path| Point::TreeNode { path }).collect();
    let mut net = Net::assemble(SpaceKind::Tree, params, points, vec![1.0; parents.len()], edges, Oracle::ClosedForm);
    net.ray_constant = Some(0.0);
    Ok(net)
}

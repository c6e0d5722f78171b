use super::PoincareError;
use crate::spaces::Net;
use rayon::prelude::*;
use std::sync::Arc;

type Rows = Vec<Vec<(usize, f64)>>;

/// Row-normalized nonnegative pair weight on a net.
///
/// `rows` holds the weights used by seminorms and spectra; `raw` keeps the
/// matrix before symmetrization when the construction had one.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub net: Arc<Net>,
    rows: Rows,
    raw: Rows,
    /// R^ψ: no weight between points farther apart than this.
    pub width: f64,
    /// ε^ψ: every pair at most this far apart has positive weight.
    pub positivity_radius: f64,
    /// τ^ψ: smallest weight among pairs within the positivity radius.
    pub margin: f64,
    /// S^ψ: largest weight.
    pub sup: f64,
    /// Points whose ball contains only themselves.
    pub isolated: Vec<usize>,
    /// Diagonal scaling applied by the symmetric balancing, ψ = D·W·D.
    pub scaling: Vec<f64>,
}

impl Kernel {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sparse rows, sorted by column.
    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    /// Rows before symmetrization.
    pub fn raw_rows(&self) -> &[Vec<(usize, f64)>] {
        &self.raw
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let row = &self.rows[i];
        row.binary_search_by_key(&j, |e| e.0).map(|k| row[k].1).unwrap_or(0.0)
    }

    /// Σ_{x'} ψ(x, x')·m(x').
    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|&(j, w)| w * self.net.measure[j]).sum()
    }

    pub fn max_row_error(&self) -> f64 {
        (0..self.len()).map(|i| (self.row_sum(i) - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Sparse triplets (i, j, ψ(i, j)) in row order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, row)| row.iter().map(move |&(j, w)| (i, j, w)))
    }

    /// Component label of every point in the graph of positive weights.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let n = self.len();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &(w, x) in &self.rows[v] {
                    if x > 0.0 && label[w] == usize::MAX {
                        label[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }

    /// ψ(x, x) = 1/m(x).
    pub fn identity(net: Arc<Net>) -> Self {
        let rows: Rows = net.measure.iter().enumerate().map(|(i, &m)| vec![(i, 1.0 / m)]).collect();
        let sup = rows.iter().map(|r| r[0].1).fold(0.0, f64::max);
        let margin = rows.iter().map(|r| r[0].1).fold(f64::INFINITY, f64::min);
        let n = net.len();
        Self {
            net,
            raw: rows.clone(),
            rows,
            width: 0.0,
            positivity_radius: 0.0,
            margin,
            sup,
            isolated: (0..n).collect(),
            scaling: vec![1.0; n],
        }
    }

    fn finish(net: Arc<Net>, rows: Rows, raw: Rows, width: f64, positivity: Option<f64>, isolated: Vec<usize>, scaling: Vec<f64>) -> Self {
        let positivity_radius = positivity.unwrap_or_else(|| measured_positivity(&net, &rows));
        let sup = rows.iter().flatten().map(|e| e.1).fold(0.0, f64::max);
        let margin = rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, w)| (i, j, w)))
            .filter(|&(i, j, _)| net.distance(i, j) <= positivity_radius)
            .map(|e| e.2)
            .fold(f64::INFINITY, f64::min);
        Self { net, rows, raw, width, positivity_radius, margin, sup, isolated, scaling }
    }
}

/// Largest ε such that all pairs within ε carry positive weight.
fn measured_positivity(net: &Net, rows: &Rows) -> f64 {
    let n = net.len();
    let (zero_min, support_dists): (f64, Vec<f64>) = {
        let per_row: Vec<(f64, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut k = 0;
                let mut zero = f64::INFINITY;
                let mut pos = Vec::with_capacity(rows[i].len());
                for j in 0..n {
                    let d = net.distance(i, j);
                    if k < rows[i].len() && rows[i][k].0 == j {
                        if rows[i][k].1 > 0.0 {
                            pos.push(d);
                        } else {
                            zero = zero.min(d);
                        }
                        k += 1;
                    } else {
                        zero = zero.min(d);
                    }
                }
                (zero, pos)
            })
            .collect();
        let zero = per_row.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        (zero, per_row.into_iter().flat_map(|r| r.1).collect())
    };
    support_dists.into_iter().filter(|&d| d < zero_min).fold(0.0, f64::max)
}

/// Symmetric balancing: finds D with Σ_y d_x W_xy d_y m_y = 1 for every x.
fn balance(rows: &mut Rows, measure: &[f64]) -> Result<Vec<f64>, PoincareError> {
    let n = rows.len();
    let mut d = vec![1.0; n];
    let mut err = f64::INFINITY;
    for _ in 0..200_000 {
        let sums: Vec<f64> = rows.par_iter().map(|row| row.iter().map(|&(j, w)| w * d[j] * measure[j]).sum()).collect();
        err = (0..n).map(|i| (d[i] * sums[i] - 1.0).abs()).fold(0.0, f64::max);
        if err < 1e-14 {
            break;
        }
        for i in 0..n {
            d[i] = (d[i] / sums[i]).sqrt();
        }
    }
    if err > 1e-10 {
        return Err(PoincareError::Normalization(err));
    }
    for (i, row) in rows.iter_mut().enumerate() {
        for e in row.iter_mut() {
            e.1 *= d[i] * d[e.0];
        }
    }
    Ok(d)
}

/// Ball kernel ψ(x, x') = 1_{d ≤ width}/m(B(x, width)), symmetrized and re-balanced.
pub fn make_ball_kernel(net: &Arc<Net>, width: f64) -> Result<Kernel, PoincareError> {
    let n = net.len();
    let balls: Vec<Vec<usize>> = (0..n).into_par_iter().map(|i| net.neighbors_within(i, width)).collect();
    let vol: Vec<f64> = balls.iter().map(|b| b.iter().map(|&j| net.measure[j]).sum()).collect();
    let raw: Rows = balls.iter().enumerate().map(|(i, b)| b.iter().map(|&j| (j, 1.0 / vol[i])).collect()).collect();
    let mut rows: Rows = balls
        .iter()
        .enumerate()
        .map(|(i, b)| b.iter().map(|&j| (j, 0.5 * (1.0 / vol[i] + 1.0 / vol[j]))).collect())
        .collect();
    let isolated = balls.iter().enumerate().filter(|(_, b)| b.len() == 1).map(|(i, _)| i).collect();
    let scaling = balance(&mut rows, &net.measure)?;
    Ok(Kernel::finish(net.clone(), rows, raw, width, Some(width), isolated, scaling))
}

/// Kernel proportional to Σ_z 1_{B(z,ρ)}(x)·1_{B(z,ρ)}(x'), balanced.
///
/// Points outside every ball keep a self-loop. The balancing scaling is
/// kept in [`Kernel::scaling`] so each ball's share of the kernel can be
/// recovered.
pub fn ball_cover_kernel(net: &Arc<Net>, centers: &[usize], radius: f64) -> Result<Kernel, PoincareError> {
    let n = net.len();
    let mut acc: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
    for &z in centers {
        let ball = net.neighbors_within(z, radius);
        for &x in &ball {
            for &y in &ball {
                *acc[x].entry(y).or_insert(0.0) += 1.0;
            }
        }
    }
    let mut isolated = Vec::new();
    for (i, row) in acc.iter_mut().enumerate() {
        if row.is_empty() {
            row.insert(i, 1.0);
            isolated.push(i);
        }
    }
    let mut rows: Rows = acc.into_iter().map(|r| r.into_iter().collect()).collect();
    let raw = rows.clone();
    let scaling = balance(&mut rows, &net.measure)?;
    Ok(Kernel::finish(net.clone(), rows, raw, 2.0 * radius, None, isolated, scaling))
}

fn same_net(a: &Arc<Net>, b: &Arc<Net>) -> bool {
    Arc::ptr_eq(a, b) || (a.len() == b.len() && a.measure == b.measure && a.points == b.points)
}

pub(crate) fn check_same(a: &Arc<Net>, b: &Arc<Net>) -> Result<(), PoincareError> {
    if same_net(a, b) {
        Ok(())
    } else {
        Err(PoincareError::NetMismatch)
    }
}

/// (ψ₁ ∗ ψ₂)(x, y) = Σ_z ψ₁(x, z)ψ₂(z, y)m(z).
pub fn convolve_kernels(k1: &Kernel, k2: &Kernel) -> Result<Kernel, PoincareError> {
    check_same(&k1.net, &k2.net)?;
    let net = &k1.net;
    let n = net.len();
    let rows: Rows = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], Vec::new()),
            |(acc, touched), x| {
                for &(z, a) in &k1.rows[x] {
                    let s = a * net.measure[z];
                    for &(y, b) in &k2.rows[z] {
                        if acc[y] == 0.0 {
                            touched.push(y);
                        }
                        acc[y] += s * b;
                    }
                }
                touched.sort_unstable();
                let row: Vec<(usize, f64)> = touched.iter().map(|&y| (y, acc[y])).filter(|e| e.1 > 0.0).collect();
                for &y in touched.iter() {
                    acc[y] = 0.0;
                }
                touched.clear();
                row
            },
        )
        .collect();
    let width = rows
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.iter().map(move |&(j, _)| (i, j)))
        .map(|(i, j)| net.distance(i, j))
        .fold(0.0, f64::max);
    let isolated = rows.iter().enumerate().filter(|(_, r)| r.len() == 1).map(|(i, _)| i).collect();
    Ok(Kernel::finish(net.clone(), rows.clone(), rows, width, None, isolated, vec![1.0; n]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{build_h2_net, Edge};

    fn two_points() -> Arc<Net> {
        Arc::new(Net::from_graph(2, vec![Edge { src: 0, dst: 1, len: 1.0 }], None).unwrap())
    }

    #[test]
    fn two_point_kernel_is_uniform() {
        let k = make_ball_kernel(&two_points(), 1.0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((k.weight(i, j) - 0.5).abs() < 1e-12);
            }
        }
        assert!(k.max_row_error() < 1e-12);
    }

    #[test]
    fn narrow_kernel_is_identity() {
        let k = make_ball_kernel(&two_points(), 0.5).unwrap();
        assert_eq!(k.weight(0, 1), 0.0);
        assert!((k.weight(0, 0) - 1.0).abs() < 1e-12);
        assert_eq!(k.isolated, vec![0, 1]);
    }

    #[test]
    fn identity_convolution_is_neutral() {
        let net = Arc::new(build_h2_net(3.0, 1.0).unwrap());
        let k = make_ball_kernel(&net, 2.0).unwrap();
        let id = Kernel::identity(net.clone());
        let c = convolve_kernels(&id, &k).unwrap();
        for i in 0..net.len() {
            for j in 0..net.len() {
                assert!((c.weight(i, j) - k.weight(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn self_convolution_widens_positivity() {
        let net = Arc::new(build_h2_net(4.0, 0.5).unwrap());
        let k = make_ball_kernel(&net, 1.0).unwrap();
        assert!(k.max_row_error() < 1e-9);
        let mut c = k.clone();
        for m in 2..=3 {
            c = convolve_kernels(&c, &k).unwrap();
            assert!(c.max_row_error() < 1e-9);
            assert!(c.positivity_radius >= m as f64 * k.positivity_radius / 2.0 - 1e-9);
            assert!(c.width <= m as f64 * k.width + 1e-9);
        }
    }

    #[test]
    fn two_point_stationary_under_convolution() {
        let k = make_ball_kernel(&two_points(), 1.0).unwrap();
        let c = convolve_kernels(&k, &k).unwrap();
        assert!((c.weight(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mismatched_nets_are_rejected() {
        let a = make_ball_kernel(&two_points(), 1.0).unwrap();
        let b = make_ball_kernel(&Arc::new(build_h2_net(2.0, 1.0).unwrap()), 1.0).unwrap();
        assert_eq!(convolve_kernels(&a, &b).unwrap_err(), PoincareError::NetMismatch);
    }
}

use super::net::{Circle, Edge, Net, Oracle, SpaceKind};
use super::{Point, SpaceError, SpaceParams, DEFAULT_POINT_CAP};
use rayon::prelude::*;
use std::f64::consts::TAU;

/// Hyperbolic distance between polar points.
///
/// Uses the half-angle form 2·asinh√(sinh²(Δr/2) + sinh r₁ sinh r₂ sin²(Δθ/2)),
/// which equals the law-of-cosines arccosh without its cancellation at short range.
pub fn h2_distance_polar(r1: f64, t1: f64, r2: f64, t2: f64) -> f64 {
    let a = ((r1 - r2) / 2.0).sinh();
    let s = ((t1 - t2) / 2.0).sin();
    let inner = a * a + r1.sinh() * r2.sinh() * s * s;
    2.0 * inner.sqrt().asinh()
}

/// Closed-form ℍ² distance; `NaN` if either point is not an ℍ² point.
pub fn h2_distance(p: &Point, q: &Point) -> f64 {
    match (p, q) {
        (Point::H2 { r: r1, theta: t1 }, Point::H2 { r: r2, theta: t2 }) => h2_distance_polar(*r1, *t1, *r2, *t2),
        _ => f64::NAN,
    }
}

/// Visual distance from the origin between two boundary directions: sin(|Δθ|/2).
pub fn h2_visual_distance(theta1: f64, theta2: f64) -> f64 {
    ((theta1 - theta2) / 2.0).sin().abs()
}

/// Number of equally spaced eps-separated points on the circle of radius `r`.
pub(crate) fn circle_count(r: f64, eps: f64) -> usize {
    if r <= 0.0 {
        return 1;
    }
    let s = (eps / 2.0).sinh() / r.sinh();
    if s >= 1.0 {
        return 1;
    }
    let step = 2.0 * s.asin();
    ((TAU / step) * (1.0 + 1e-12)).floor().max(1.0) as usize
}

/// Net of the ℍ² ball B(R) with spacing `eps`, capped at [`DEFAULT_POINT_CAP`] points.
pub fn build_h2_net(radius: f64, eps: f64) -> Result<Net, SpaceError> {
    build_h2_net_capped(radius, eps, DEFAULT_POINT_CAP)
}

/// Concentric circles of radius k·eps, each carrying equally spaced points at
/// hyperbolic chord ≥ eps. Weights are annulus areas shared evenly by the
/// points of each circle, so they sum to 2π(cosh R − 1).
pub fn build_h2_net_capped(radius: f64, eps: f64, cap: usize) -> Result<Net, SpaceError> {
    let params = SpaceParams::unit(radius, eps)?;
    let levels = (radius / eps + 1e-9).floor() as usize;
    let mut requested = 0.0;
    for k in 0..=levels {
        requested += circle_count(k as f64 * eps, eps) as f64;
        if requested > cap as f64 {
            return Err(SpaceError::MeshTooFine { requested, cap });
        }
    }
    let mut points = Vec::with_capacity(requested as usize);
    let mut measure = Vec::with_capacity(requested as usize);
    let mut circles = Vec::with_capacity(levels + 1);
    for k in 0..=levels {
        let r = k as f64 * eps;
        let n = circle_count(r, eps);
        let inner = (r - eps / 2.0).max(0.0);
        let outer = if k == levels { radius.max(r) } else { r + eps / 2.0 };
        let area = TAU * (outer.cosh() - inner.cosh());
        let start = points.len();
        let thetas: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
        for &theta in &thetas {
            points.push(Point::H2 { r, theta });
            measure.push(area / n as f64);
        }
        circles.push(Circle { r, start, thetas });
    }
    let mut net = Net::assemble(SpaceKind::H2, params, points, measure, Vec::new(), Oracle::ClosedForm);
    net.circles = Some(circles);
    let reach = 3.0 * eps;
    let edges: Vec<Edge> = (0..net.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let near = net.neighbors_within(i, reach);
            let net = &net;
            near.into_iter()
                .filter(move |&j| j > i)
                .map(move |j| Edge { src: i, dst: j, len: net.distance(i, j) })
        })
        .collect();
    net.set_edges(edges);
    net.ray_constant = Some(0.0);
    Ok(net)
}

/// Ball query on a circle-indexed net.
pub(crate) fn circle_query(net: &Net, circles: &[Circle], i: usize, radius: f64) -> Vec<usize> {
    let (r, theta) = match net.points[i] {
        Point::H2 { r, theta } => (r, theta),
        _ => return Vec::new(),
    };
    let mut out = Vec::new();
    let target = (radius / 2.0).sinh().powi(2);
    for c in circles {
        let dr = (c.r - r).abs();
        if dr > radius + 1e-12 {
            continue;
        }
        let n = c.thetas.len();
        let denom = r.sinh() * c.r.sinh();
        let slack = target - (dr / 2.0).sinh().powi(2);
        let whole = denom <= 0.0 || slack >= denom || n <= 3;
        if whole {
            for j in 0..n {
                let idx = c.start + j;
                if net.distance(i, idx) <= radius {
                    out.push(idx);
                }
            }
            continue;
        }
        let window = 2.0 * (slack.max(0.0) / denom).sqrt().min(1.0).asin();
        let step = TAU / n as f64;
        let lo = ((theta - window) / step).floor() as i64 - 1;
        let hi = ((theta + window) / step).ceil() as i64 + 1;
        if (hi - lo + 1) as usize >= n {
            for j in 0..n {
                let idx = c.start + j;
                if net.distance(i, idx) <= radius {
                    out.push(idx);
                }
            }
            continue;
        }
        for j in lo..=hi {
            let idx = c.start + j.rem_euclid(n as i64) as usize;
            if net.distance(i, idx) <= radius {
                out.push(idx);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::f64::consts::PI;

    fn law_of_cosines(r1: f64, t1: f64, r2: f64, t2: f64) -> f64 {
        (r1.cosh() * r2.cosh() - r1.sinh() * r2.sinh() * (t1 - t2).cos()).max(1.0).acosh()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(h2_distance_polar(3.0, 0.0, 3.0, 0.0), 0.0);
        assert!((h2_distance_polar(5.0, 0.0, 2.0, 0.0) - 3.0).abs() < 1e-12);
        let opposite = h2_distance_polar(3.0, 0.0, 3.0, PI);
        assert!((opposite - law_of_cosines(3.0, 0.0, 3.0, PI)).abs() < 1e-9);
        assert!((opposite - 6.0).abs() < 1e-9);
    }

    #[test]
    fn matches_law_of_cosines_on_random_pairs() {
        let mut rng = crate::rng::stream(1, "h2-test");
        for _ in 0..1000 {
            let (r1, r2) = (rng.gen_range(0.0..8.0), rng.gen_range(0.0..8.0));
            let (t1, t2) = (rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU));
            let a = h2_distance_polar(r1, t1, r2, t2);
            let b = law_of_cosines(r1, t1, r2, t2);
            assert!((a - b).abs() < 1e-6 * (1.0 + b), "{a} vs {b}");
        }
    }

    #[test]
    fn origin_net() {
        let net = build_h2_net(0.0, 1.0).unwrap();
        assert_eq!(net.len(), 1);
    }

    #[test]
    fn count_tracks_area() {
        let net = build_h2_net(4.0, 1.0).unwrap();
        let area = TAU * (4f64.cosh() - 1.0);
        let ratio = net.len() as f64 / area;
        assert!((0.25..=4.0).contains(&ratio), "ratio {ratio}");
        assert!((net.total_measure() - area).abs() < 1e-9 * area);
    }

    #[test]
    fn separated_and_dense() {
        let net = build_h2_net(9.0, 3.0).unwrap();
        for i in 0..net.len() {
            for j in i + 1..net.len() {
                assert!(net.distance(i, j) >= 3.0 - 1e-9);
            }
        }
        let net = build_h2_net(5.0, 1.0).unwrap();
        let mut rng = crate::rng::stream(2, "h2-dense");
        for _ in 0..300 {
            let r = rng.gen_range(0.0..5.0);
            let t = rng.gen_range(0.0..TAU);
            let q = Point::H2 { r, theta: t };
            let best = net.points.iter().map(|p| h2_distance(p, &q)).fold(f64::INFINITY, f64::min);
            assert!(best <= 3.0, "uncovered point at distance {best}");
        }
    }

    #[test]
    fn circle_query_matches_brute_force() {
        let net = build_h2_net(6.0, 1.0).unwrap();
        for i in (0..net.len()).step_by(37) {
            let fast = net.neighbors_within(i, 2.5);
            let slow: Vec<usize> = (0..net.len()).filter(|&j| net.distance(i, j) <= 2.5).collect();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn mesh_too_fine_is_an_error() {
        assert!(matches!(build_h2_net_capped(12.0, 0.1, 1000), Err(SpaceError::MeshTooFine { .. })));
    }

    #[test]
    fn visual_distance_of_antipodes_is_one() {
        assert!((h2_visual_distance(0.0, PI) - 1.0).abs() < 1e-15);
        assert_eq!(h2_visual_distance(1.0, 1.0), 0.0);
    }
}

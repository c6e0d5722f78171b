use super::net::{Edge, Net, Oracle, SpaceKind};
use super::{Point, SpaceError, SpaceParams, DEFAULT_POINT_CAP};

/// Path length between two nodes given by their child-index paths.
pub fn tree_distance(a: &[u32], b: &[u32]) -> f64 {
    let common = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    (a.len() + b.len() - 2 * common) as f64
}

/// Node count of a tree ball whose root has `root_children` children and
/// every other internal node `children` children.
pub fn rooted_tree_size(root_children: u32, children: u32, depth: u32) -> f64 {
    let mut total = 1.0;
    let mut generation = 1.0;
    for k in 0..depth {
        generation *= f64::from(if k == 0 { root_children } else { children });
        total += generation;
    }
    total
}

/// Node count of the degree-`d` tree ball of radius `R`: 1 + d((d−1)^R − 1)/(d − 2).
pub fn tree_ball_size(degree: u32, radius: u32) -> f64 {
    rooted_tree_size(degree, degree.saturating_sub(1), radius)
}

/// Ball of radius `R` in the `d`-regular tree: root with `d` children, other
/// internal nodes with `d − 1`. Unit edges, counting measure, breadth-first order.
pub fn build_tree_ball(degree: u32, radius: u32) -> Result<Net, SpaceError> {
    build_tree_ball_capped(degree, radius, DEFAULT_POINT_CAP)
}

pub fn build_tree_ball_capped(degree: u32, radius: u32, cap: usize) -> Result<Net, SpaceError> {
    if degree < 3 {
        return Err(SpaceError::InvalidParams("tree degree must be at least 3".into()));
    }
    build_rooted_tree(degree, degree - 1, radius, cap)
}

/// General rooted tree ball with separate root and internal branching.
pub fn build_rooted_tree(root_children: u32, children: u32, depth: u32, cap: usize) -> Result<Net, SpaceError> {
    if root_children == 0 || children == 0 {
        return Err(SpaceError::InvalidParams("branching must be positive".into()));
    }
    let requested = rooted_tree_size(root_children, children, depth);
    if requested > cap as f64 {
        return Err(SpaceError::SizeCap { requested, cap });
    }
    let params = SpaceParams::unit(f64::from(depth), 1.0)?;
    let mut points = vec![Point::TreeNode { path: Vec::new() }];
    let mut edges = Vec::with_capacity(requested as usize);
    let mut frontier = 0..1;
    for k in 0..depth {
        let branch = if k == 0 { root_children } else { children };
        let next_start = points.len();
        for parent in frontier.clone() {
            let base = match &points[parent] {
                Point::TreeNode { path } => path.clone(),
                _ => unreachable!(),
            };
            for c in 0..branch {
                let mut path = base.clone();
                path.push(c);
                edges.push(Edge { src: parent, dst: points.len(), len: 1.0 });
                points.push(Point::TreeNode { path });
            }
        }
        frontier = next_start..points.len();
    }
    let measure = vec![1.0; points.len()];
    let mut net = Net::assemble(SpaceKind::Tree, params, points, measure, edges, Oracle::ClosedForm);
    net.ray_constant = Some(0.0);
    Ok(net)
}

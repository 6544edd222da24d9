//! Bounding volume hierarchy over mesh triangles.
//!
//! Supports the two queries the distance field needs: exact nearest
//! triangle distance (branch and bound, identical results to a full scan)
//! and ray crossing counts for parity inside tests.

use nalgebra::{Point3, Vector3};

use super::primitives::{point_triangle_distance, ray_crossing, RayCrossing};
use crate::geometry::Mesh;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Point3<f64>,
    hi: Point3<f64>,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            lo: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            hi: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Point3<f64>) {
        for i in 0..3 {
            self.lo[i] = self.lo[i].min(p[i]);
            self.hi[i] = self.hi[i].max(p[i]);
        }
    }

    fn merge(&mut self, other: &Aabb) {
        self.grow(&other.lo);
        self.grow(&other.hi);
    }

    fn distance_to(&self, p: &Point3<f64>) -> f64 {
        let mut sq = 0.0;
        for i in 0..3 {
            let d = (self.lo[i] - p[i]).max(0.0).max(p[i] - self.hi[i]);
            sq += d * d;
        }
        sq.sqrt()
    }

    fn intersects_ray(&self, origin: &Point3<f64>, inv_dir: &Vector3<f64>) -> bool {
        let mut tmin = 0.0f64;
        let mut tmax = f64::INFINITY;
        for i in 0..3 {
            let t1 = (self.lo[i] - origin[i]) * inv_dir[i];
            let t2 = (self.hi[i] - origin[i]) * inv_dir[i];
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            if lo.is_nan() || hi.is_nan() {
                // Ray parallel to this slab and exactly on a boundary plane;
                // be conservative and keep the node.
                continue;
            }
            tmin = tmin.max(lo);
            tmax = tmax.min(hi);
            if tmin > tmax {
                return false;
            }
        }
        true
    }
}

#[derive(Debug)]
enum Node {
    Leaf {
        bounds: Aabb,
        start: usize,
        count: usize,
    },
    Inner {
        bounds: Aabb,
        left: usize,
        right: usize,
    },
}

pub struct Bvh {
    nodes: Vec<Node>,
    /// Triangle vertex triples in BVH order.
    tris: Vec<[Point3<f64>; 3]>,
    root: usize,
}

const LEAF_SIZE: usize = 4;

impl Bvh {
    pub fn build(mesh: &Mesh) -> Self {
        let mut tris: Vec<[Point3<f64>; 3]> =
            (0..mesh.faces.len()).map(|f| mesh.face_vertices(f)).collect();
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let centroids: Vec<Point3<f64>> = tris
            .iter()
            .map(|t| Point3::from((t[0].coords + t[1].coords + t[2].coords) / 3.0))
            .collect();
        let mut nodes = Vec::new();
        let root = Self::build_range(&mut nodes, &tris, &centroids, &mut order, 0);
        // Reorder triangle storage to match leaf ranges.
        let reordered: Vec<[Point3<f64>; 3]> = order.iter().map(|&i| tris[i]).collect();
        tris = reordered;
        Bvh { nodes, tris, root }
    }

    /// Builds the subtree over order[lo..], where `lo` is the absolute start
    /// of the current slice within `order`. Returns the node index.
    fn build_range(
        nodes: &mut Vec<Node>,
        tris: &[[Point3<f64>; 3]],
        centroids: &[Point3<f64>],
        order: &mut [usize],
        lo: usize,
    ) -> usize {
        let mut bounds = Aabb::empty();
        for &i in order.iter() {
            for p in &tris[i] {
                bounds.grow(p);
            }
        }
        if order.len() <= LEAF_SIZE {
            nodes.push(Node::Leaf {
                bounds,
                start: lo,
                count: order.len(),
            });
            return nodes.len() - 1;
        }
        // Split on the widest centroid axis at the median.
        let mut cb = Aabb::empty();
        for &i in order.iter() {
            cb.grow(&centroids[i]);
        }
        let extent = cb.hi - cb.lo;
        let axis = if extent.x >= extent.y && extent.x >= extent.z {
            0
        } else if extent.y >= extent.z {
            1
        } else {
            2
        };
        let mid = order.len() / 2;
        order.select_nth_unstable_by(mid, |&a, &b| {
            centroids[a][axis]
                .partial_cmp(&centroids[b][axis])
                .unwrap()
                .then(a.cmp(&b))
        });
        let (left_slice, right_slice) = order.split_at_mut(mid);
        let left = Self::build_range(nodes, tris, centroids, left_slice, lo);
        let right = Self::build_range(nodes, tris, centroids, right_slice, lo + mid);
        let mut merged = Aabb::empty();
        if let (Some(lb), Some(rb)) = (Self::node_bounds(nodes, left), Self::node_bounds(nodes, right)) {
            merged.merge(&lb);
            merged.merge(&rb);
        }
        nodes.push(Node::Inner {
            bounds: merged,
            left,
            right,
        });
        nodes.len() - 1
    }

    fn node_bounds(nodes: &[Node], idx: usize) -> Option<Aabb> {
        match &nodes[idx] {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => Some(*bounds),
        }
    }

    /// Exact unsigned distance to the nearest triangle. Matches a full scan
    /// because pruning only discards nodes whose boxes are no closer than
    /// the current best.
    pub fn nearest_distance(&self, p: &Point3<f64>) -> f64 {
        let mut best = f64::INFINITY;
        let mut stack = vec![self.root];
        while let Some(idx) = stack.pop() {
            match &self.nodes[idx] {
                Node::Leaf { bounds, start, count } => {
                    if bounds.distance_to(p) >= best {
                        continue;
                    }
                    for t in &self.tris[*start..*start + *count] {
                        let d = point_triangle_distance(p, &t[0], &t[1], &t[2]);
                        if d < best {
                            best = d;
                        }
                    }
                }
                Node::Inner { bounds, left, right } => {
                    if bounds.distance_to(p) >= best {
                        continue;
                    }
                    // Visit the nearer child first for tighter pruning.
                    let dl = Self::node_bounds(&self.nodes, *left).unwrap().distance_to(p);
                    let dr = Self::node_bounds(&self.nodes, *right).unwrap().distance_to(p);
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        best
    }

    /// Counts ray crossings, or `None` if any triangle returns a degenerate
    /// classification and the caller should recast with a new direction.
    pub fn ray_crossings(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<usize> {
        let inv_dir = Vector3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut count = 0;
        let mut stack = vec![self.root];
        while let Some(idx) = stack.pop() {
            match &self.nodes[idx] {
                Node::Leaf { bounds, start, count: n } => {
                    if !bounds.intersects_ray(origin, &inv_dir) {
                        continue;
                    }
                    for t in &self.tris[*start..*start + *n] {
                        match ray_crossing(origin, dir, &t[0], &t[1], &t[2]) {
                            RayCrossing::Hit => count += 1,
                            RayCrossing::Miss => {}
                            RayCrossing::Degenerate => return None,
                        }
                    }
                }
                Node::Inner { bounds, left, right } => {
                    if !bounds.intersects_ray(origin, &inv_dir) {
                        continue;
                    }
                    stack.push(*left);
                    stack.push(*right);
                }
            }
        }
        Some(count)
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::tests::unit_cube;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn nearest_matches_full_scan() {
        let mesh = unit_cube();
        let bvh = Bvh::build(&mesh);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..500 {
            let p = Point3::new(
                rng.random::<f64>() * 4.0 - 2.0,
                rng.random::<f64>() * 4.0 - 2.0,
                rng.random::<f64>() * 4.0 - 2.0,
            );
            let brute = (0..mesh.faces.len())
                .map(|f| {
                    let [a, b, c] = mesh.face_vertices(f);
                    point_triangle_distance(&p, &a, &b, &c)
                })
                .fold(f64::INFINITY, f64::min);
            let fast = bvh.nearest_distance(&p);
            assert_eq!(brute, fast, "at {p:?}");
        }
    }

    #[test]
    fn crossings_from_inside_and_outside() {
        let mesh = unit_cube();
        let bvh = Bvh::build(&mesh);
        // Generic direction avoids the cube's axis-aligned degeneracies.
        let dir = Vector3::new(0.4312, 0.7321, 0.5271).normalize();
        let inside = bvh
            .ray_crossings(&Point3::new(0.1, 0.05, -0.07), &dir)
            .unwrap();
        assert_eq!(inside % 2, 1);
        let outside = bvh
            .ray_crossings(&Point3::new(1.5, 0.0, 0.0), &dir)
            .unwrap();
        assert_eq!(outside % 2, 0);
    }

    #[test]
    fn axis_ray_through_face_center_is_degenerate_or_odd() {
        // A +z ray from the cube center crosses the top face interior
        // cleanly but the bottom... actually it only goes up: one crossing.
        let mesh = unit_cube();
        let bvh = Bvh::build(&mesh);
        match bvh.ray_crossings(&Point3::origin(), &Vector3::new(0.0, 0.0, 1.0)) {
            Some(n) => assert_eq!(n % 2, 1),
            None => {} // grazing the fan diagonal counts as degenerate
        }
    }
}

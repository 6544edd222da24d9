//! Exact point-triangle distance and robust ray-triangle intersection.

use nalgebra::{Point3, Vector3};

/// Closest-point distance from `p` to triangle `(a, b, c)`.
///
/// Voronoi-region walk over the triangle features; exact for all
/// configurations including degenerate query positions.
pub fn point_triangle_distance(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;

    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (ap - ab * v).norm();
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (ap - ac * w).norm();
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp - (c - b) * w).norm();
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (ap - (ab * v + ac * w)).norm()
}

/// Outcome of casting a ray against one triangle for parity counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayCrossing {
    Miss,
    Hit,
    /// The ray grazes an edge, vertex, or the triangle plane; parity from
    /// this ray is unreliable and the caller must recast.
    Degenerate,
}

/// Barycentric band around triangle edges inside which a hit counts as
/// degenerate for parity purposes.
const EDGE_BAND: f64 = 1e-10;

/// Determinant threshold below which the ray is treated as grazing the
/// triangle plane.
const DET_EPS: f64 = 1e-13;

/// Positive-t threshold: hits closer than this to the origin are treated as
/// "on the surface" and flagged degenerate.
const T_EPS: f64 = 1e-12;

/// Moller-Trumbore crossing test specialized for parity counting.
pub fn ray_crossing(
    origin: &Point3<f64>,
    dir: &Vector3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> RayCrossing {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    let scale = e1.norm() * e2.norm();
    if det.abs() <= DET_EPS * scale.max(1e-300) {
        // Parallel or grazing the plane: only a problem if the triangle is
        // actually near the ray's line; flag conservatively.
        let d = point_to_line_distance(origin, dir, a)
            .min(point_to_line_distance(origin, dir, b))
            .min(point_to_line_distance(origin, dir, c));
        let span = e1.norm().max(e2.norm());
        if d <= span {
            return RayCrossing::Degenerate;
        }
        return RayCrossing::Miss;
    }
    let inv_det = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(&pvec) * inv_det;
    if !(-EDGE_BAND..=1.0 + EDGE_BAND).contains(&u) {
        return RayCrossing::Miss;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv_det;
    if v < -EDGE_BAND || u + v > 1.0 + EDGE_BAND {
        return RayCrossing::Miss;
    }
    let t = e2.dot(&qvec) * inv_det;
    if t < -T_EPS {
        return RayCrossing::Miss;
    }
    if t <= T_EPS {
        return RayCrossing::Degenerate;
    }
    let w = 1.0 - u - v;
    if u <= EDGE_BAND || v <= EDGE_BAND || w <= EDGE_BAND {
        return RayCrossing::Degenerate;
    }
    RayCrossing::Hit
}

fn point_to_line_distance(origin: &Point3<f64>, dir: &Vector3<f64>, p: &Point3<f64>) -> f64 {
    let d = p - origin;
    let along = d.dot(dir) / dir.norm_squared();
    (d - dir * along).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tri() -> (Point3<f64>, Point3<f64>, Point3<f64>) {
        (
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        )
    }

    #[test]
    fn face_edge_vertex_regions() {
        let (a, b, c) = tri();
        // Above the interior: plane distance.
        let d = point_triangle_distance(&Point3::new(0.25, 0.25, 2.0), &a, &b, &c);
        assert_relative_eq!(d, 2.0, epsilon = 1e-15);
        // Beyond vertex b.
        let d = point_triangle_distance(&Point3::new(2.0, 0.0, 0.0), &a, &b, &c);
        assert_relative_eq!(d, 1.0, epsilon = 1e-15);
        // Beside edge ab.
        let d = point_triangle_distance(&Point3::new(0.5, -3.0, 0.0), &a, &b, &c);
        assert_relative_eq!(d, 3.0, epsilon = 1e-15);
        // Beyond the hypotenuse.
        let d = point_triangle_distance(&Point3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert_relative_eq!(d, (0.5f64).sqrt(), epsilon = 1e-15);
        // On the triangle itself.
        let d = point_triangle_distance(&Point3::new(0.3, 0.3, 0.0), &a, &b, &c);
        assert_relative_eq!(d, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn crossing_classification() {
        let (a, b, c) = tri();
        let up = Vector3::new(0.0, 0.0, 1.0);
        // Clean hit through the interior.
        let r = ray_crossing(&Point3::new(0.2, 0.2, -1.0), &up, &a, &b, &c);
        assert_eq!(r, RayCrossing::Hit);
        // Behind the origin.
        let r = ray_crossing(&Point3::new(0.2, 0.2, 1.0), &up, &a, &b, &c);
        assert_eq!(r, RayCrossing::Miss);
        // Through the vertex: degenerate.
        let r = ray_crossing(&Point3::new(0.0, 0.0, -1.0), &up, &a, &b, &c);
        assert_eq!(r, RayCrossing::Degenerate);
        // Through an edge midpoint: degenerate.
        let r = ray_crossing(&Point3::new(0.5, 0.0, -1.0), &up, &a, &b, &c);
        assert_eq!(r, RayCrossing::Degenerate);
        // In-plane ray passing near the triangle: degenerate.
        let r = ray_crossing(
            &Point3::new(-1.0, 0.5, 0.0),
            &Vector3::new(1.0, 0.0, 0.0),
            &a,
            &b,
            &c,
        );
        assert_eq!(r, RayCrossing::Degenerate);
        // Origin on the surface: degenerate.
        let r = ray_crossing(&Point3::new(0.2, 0.2, 0.0), &up, &a, &b, &c);
        assert_eq!(r, RayCrossing::Degenerate);
        // Clean miss far to the side.
        let r = ray_crossing(&Point3::new(5.0, 5.0, -1.0), &up, &a, &b, &c);
        assert_eq!(r, RayCrossing::Miss);
    }
}

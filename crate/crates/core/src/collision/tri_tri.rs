//! Closed triangle-triangle overlap by the separating axis theorem.

use crate::math::Vec3;
use crate::scalar::Real;

/// Triangles with area at or below this (m²) are treated as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-12;

pub fn is_degenerate<T: Real>(t: &[Vec3<T>; 3]) -> bool {
    let twice_area = (t[1] - t[0]).cross(t[2] - t[0]).norm();
    twice_area.as_f64() <= 2.0 * DEGENERATE_AREA
}

#[inline]
fn project<T: Real>(t: &[Vec3<T>; 3], axis: Vec3<T>) -> (T, T) {
    let a = t[0].dot(axis);
    let b = t[1].dot(axis);
    let c = t[2].dot(axis);
    (a.min(b).min(c), a.max(b).max(c))
}

#[inline]
fn separates<T: Real>(a: &[Vec3<T>; 3], b: &[Vec3<T>; 3], axis: Vec3<T>) -> bool {
    let (amin, amax) = project(a, axis);
    let (bmin, bmax) = project(b, axis);
    amax < bmin || bmax < amin
}

/// True iff the closed triangles share at least one point.
///
/// Candidate axes are both face normals, the nine edge-edge cross products
/// and the six in-plane edge normals (needed for coplanar pairs). Every
/// axis is a valid separation witness, so zero-length axes simply never
/// separate. Touching triangles count as intersecting. Degenerate
/// triangles never intersect.
pub fn triangles_intersect<T: Real>(a: &[Vec3<T>; 3], b: &[Vec3<T>; 3]) -> bool {
    if is_degenerate(a) || is_degenerate(b) {
        return false;
    }
    let ea = [a[1] - a[0], a[2] - a[1], a[0] - a[2]];
    let eb = [b[1] - b[0], b[2] - b[1], b[0] - b[2]];
    let na = ea[0].cross(ea[1]);
    let nb = eb[0].cross(eb[1]);

    if separates(a, b, na) || separates(a, b, nb) {
        return false;
    }
    for e in &ea {
        for f in &eb {
            if separates(a, b, e.cross(*f)) {
                return false;
            }
        }
    }
    for e in &ea {
        if separates(a, b, na.cross(*e)) {
            return false;
        }
    }
    for f in &eb {
        if separates(a, b, nb.cross(*f)) {
            return false;
        }
    }
    true
}

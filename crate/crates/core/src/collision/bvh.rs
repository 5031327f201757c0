//! Binary AABB hierarchy over the faces of a triangle mesh.

use super::aabb::Aabb;
use crate::error::{invalid, Result};
use crate::math::Vec3;
use crate::scalar::Real;

/// Largest number of triangles stored in a leaf.
pub const MAX_LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeKind {
    Inner { left: u32, right: u32 },
    /// Range into [`Bvh::triangle_order`].
    Leaf { start: u32, count: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node<T> {
    pub bound: Aabb<T>,
    pub kind: NodeKind,
}

/// Nodes are stored parents-first, so a reverse sweep visits children
/// before their parent; refitting relies on this.
#[derive(Clone, Debug)]
pub struct Bvh<T> {
    pub nodes: Vec<Node<T>>,
    pub triangle_order: Vec<u32>,
    faces: Vec<[u32; 3]>,
}

#[inline]
pub(crate) fn triangle<T: Real>(verts: &[Vec3<T>], f: &[u32; 3]) -> [Vec3<T>; 3] {
    [
        verts[f[0] as usize],
        verts[f[1] as usize],
        verts[f[2] as usize],
    ]
}

impl<T: Real> Bvh<T> {
    /// Top-down build splitting at the centroid median of the longest axis.
    pub fn build(vertices: &[Vec3<T>], faces: &[[u32; 3]]) -> Result<Self> {
        if faces.is_empty() {
            return invalid("cannot build a BVH over an empty mesh");
        }
        if let Some(f) = faces
            .iter()
            .find(|f| f.iter().any(|&i| i as usize >= vertices.len()))
        {
            return invalid(format!("face {f:?} references a missing vertex"));
        }
        let boxes: Vec<Aabb<T>> = faces
            .iter()
            .map(|f| Aabb::from_triangle(&triangle(vertices, f)))
            .collect();
        let centroids: Vec<Vec3<T>> = boxes.iter().map(Aabb::center).collect();
        let mut order: Vec<u32> = (0..faces.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * faces.len() / MAX_LEAF_SIZE + 1);
        nodes.push(Node {
            bound: Aabb::empty(),
            kind: NodeKind::Leaf { start: 0, count: 0 },
        });
        // (node index, range start, range end)
        let mut stack = vec![(0usize, 0usize, faces.len())];
        while let Some((node, lo, hi)) = stack.pop() {
            let slice = &mut order[lo..hi];
            let bound = slice
                .iter()
                .fold(Aabb::empty(), |b, &t| b.union(boxes[t as usize]));
            if slice.len() <= MAX_LEAF_SIZE {
                nodes[node] = Node {
                    bound,
                    kind: NodeKind::Leaf {
                        start: lo as u32,
                        count: (hi - lo) as u32,
                    },
                };
                continue;
            }
            let cbound = Aabb::from_points(slice.iter().map(|&t| &centroids[t as usize]));
            let axis = cbound.longest_axis();
            let mid = slice.len() / 2;
            slice.select_nth_unstable_by(mid, |&a, &b| {
                centroids[a as usize][axis]
                    .partial_cmp(&centroids[b as usize][axis])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            let left = nodes.len();
            let right = left + 1;
            let placeholder = Node {
                bound: Aabb::empty(),
                kind: NodeKind::Leaf { start: 0, count: 0 },
            };
            nodes.push(placeholder);
            nodes.push(placeholder);
            nodes[node] = Node {
                bound,
                kind: NodeKind::Inner {
                    left: left as u32,
                    right: right as u32,
                },
            };
            stack.push((right, lo + mid, hi));
            stack.push((left, lo, lo + mid));
        }
        Ok(Self {
            nodes,
            triangle_order: order,
            faces: faces.to_vec(),
        })
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn root(&self) -> &Node<T> {
        &self.nodes[0]
    }

    pub fn leaf_triangles(&self, start: u32, count: u32) -> &[u32] {
        &self.triangle_order[start as usize..(start + count) as usize]
    }

    /// Recomputes every bound for deformed vertices, keeping the topology.
    pub fn refit(&mut self, vertices: &[Vec3<T>]) -> Result<()> {
        let max_index = self.faces.iter().flatten().copied().max().unwrap_or(0) as usize;
        if max_index >= vertices.len() {
            return invalid("refit vertex buffer is smaller than the mesh");
        }
        for i in (0..self.nodes.len()).rev() {
            let bound = match self.nodes[i].kind {
                NodeKind::Leaf { start, count } => self
                    .leaf_triangles(start, count)
                    .iter()
                    .fold(Aabb::empty(), |b, &t| {
                        b.union(Aabb::from_triangle(&triangle(vertices, &self.faces[t as usize])))
                    }),
                NodeKind::Inner { left, right } => self.nodes[left as usize]
                    .bound
                    .union(self.nodes[right as usize].bound),
            };
            self.nodes[i].bound = bound;
        }
        Ok(())
    }

    /// Faces whose own bounding box overlaps `query`, in ascending order.
    pub fn query_aabb(&self, vertices: &[Vec3<T>], query: &Aabb<T>) -> Vec<u32> {
        let mut out = Vec::new();
        let mut stack = vec![0u32];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n as usize];
            if !node.bound.overlaps(query) {
                continue;
            }
            match node.kind {
                NodeKind::Inner { left, right } => {
                    stack.push(left);
                    stack.push(right);
                }
                NodeKind::Leaf { start, count } => {
                    for &t in self.leaf_triangles(start, count) {
                        let b = Aabb::from_triangle(&triangle(vertices, &self.faces[t as usize]));
                        if b.overlaps(query) {
                            out.push(t);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Visits every pair of leaves `(a in self, b in other)` with overlapping
    /// bounds. Returning `false` from the visitor stops the traversal.
    pub(crate) fn overlapping_leaves(
        &self,
        other: &Bvh<T>,
        mut visit: impl FnMut(&[u32], &[u32]) -> bool,
    ) {
        let mut stack = vec![(0u32, 0u32)];
        while let Some((a, b)) = stack.pop() {
            let (na, nb) = (&self.nodes[a as usize], &other.nodes[b as usize]);
            if !na.bound.overlaps(&nb.bound) {
                continue;
            }
            match (na.kind, nb.kind) {
                (NodeKind::Leaf { start: sa, count: ca }, NodeKind::Leaf { start: sb, count: cb }) => {
                    if !visit(self.leaf_triangles(sa, ca), other.leaf_triangles(sb, cb)) {
                        return;
                    }
                }
                (NodeKind::Inner { left, right }, NodeKind::Leaf { .. }) => {
                    stack.push((left, b));
                    stack.push((right, b));
                }
                (NodeKind::Leaf { .. }, NodeKind::Inner { left, right }) => {
                    stack.push((a, left));
                    stack.push((a, right));
                }
                (NodeKind::Inner { left: la, right: ra }, NodeKind::Inner { left: lb, right: rb }) => {
                    // descend the larger box first
                    let ea = na.bound.extent();
                    let eb = nb.bound.extent();
                    if ea.x + ea.y + ea.z >= eb.x + eb.y + eb.z {
                        stack.push((la, b));
                        stack.push((ra, b));
                    } else {
                        stack.push((a, lb));
                        stack.push((a, rb));
                    }
                }
            }
        }
    }

    /// Visits every unordered pair of leaves of this tree (including each leaf
    /// with itself) whose bounds overlap. The flag is true for a leaf paired
    /// with itself.
    pub(crate) fn self_overlapping_leaves(&self, mut visit: impl FnMut(&[u32], &[u32], bool)) {
        enum Task {
            Single(u32),
            Pair(u32, u32),
        }
        let mut stack = vec![Task::Single(0)];
        while let Some(task) = stack.pop() {
            match task {
                Task::Single(n) => match self.nodes[n as usize].kind {
                    NodeKind::Leaf { start, count } => {
                        let tris = self.leaf_triangles(start, count);
                        visit(tris, tris, true);
                    }
                    NodeKind::Inner { left, right } => {
                        stack.push(Task::Single(left));
                        stack.push(Task::Single(right));
                        stack.push(Task::Pair(left, right));
                    }
                },
                Task::Pair(a, b) => {
                    let (na, nb) = (&self.nodes[a as usize], &self.nodes[b as usize]);
                    if !na.bound.overlaps(&nb.bound) {
                        continue;
                    }
                    match (na.kind, nb.kind) {
                        (NodeKind::Leaf { start: sa, count: ca }, NodeKind::Leaf { start: sb, count: cb }) => {
                            visit(self.leaf_triangles(sa, ca), self.leaf_triangles(sb, cb), false);
                        }
                        (NodeKind::Inner { left, right }, NodeKind::Leaf { .. }) => {
                            stack.push(Task::Pair(left, b));
                            stack.push(Task::Pair(right, b));
                        }
                        (NodeKind::Leaf { .. }, NodeKind::Inner { left, right }) => {
                            stack.push(Task::Pair(a, left));
                            stack.push(Task::Pair(a, right));
                        }
                        (NodeKind::Inner { left: la, right: ra }, NodeKind::Inner { .. }) => {
                            stack.push(Task::Pair(la, b));
                            stack.push(Task::Pair(ra, b));
                        }
                    }
                }
            }
        }
    }
}

use super::geom::{closest_point_on_triangle, triangle_area, Aabb, Feature, Vec3};
use super::{DistError, SurfaceMesh};

/// Triangles with area below this (mm²) are dropped when building an index.
pub const DEGENERATE_AREA_MM2: f64 = 1e-12;

const LEAF_SIZE: usize = 4;

/// What the distance is measured to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum DistanceMode {
    /// Continuous triangle surfaces (point-to-triangle).
    #[default]
    Surface,
    /// Mesh vertices only.
    Vertices,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestHit {
    pub distance: f64,
    /// Triangle index in the source mesh (vertex index in vertex mode).
    pub primitive: usize,
    pub feature: Feature,
    pub point: Vec3,
}

#[derive(Debug, Clone)]
struct Node {
    bbox: Aabb,
    /// Leaf: offset into `order`. Inner: index of the left child (right is
    /// stored next to it).
    start: usize,
    count: usize,
}

/// Bounding-volume hierarchy over the non-degenerate triangles of a mesh.
/// Immutable once built.
#[derive(Debug, Clone)]
pub struct SurfaceIndex {
    vertices: Vec<Vec3>,
    /// Primitive vertex ids and their source index, after dropping degenerates.
    prims: Vec<([usize; 3], usize)>,
    order: Vec<usize>,
    nodes: Vec<Node>,
    mode: DistanceMode,
    dropped: usize,
}

impl SurfaceIndex {
    pub fn build(mesh: &SurfaceMesh) -> Result<Self, DistError> {
        Self::build_with_mode(mesh, DistanceMode::Surface)
    }

    pub fn build_with_mode(mesh: &SurfaceMesh, mode: DistanceMode) -> Result<Self, DistError> {
        if mesh.triangles.is_empty() {
            return Err(DistError::EmptyMesh);
        }
        let vertices: Vec<Vec3> = mesh.vertices.iter().map(|&v| Vec3::from(v)).collect();
        let mut prims = Vec::with_capacity(mesh.triangles.len());
        let mut dropped = 0;
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|i| vertices[i]);
            if triangle_area(a, b, c) < DEGENERATE_AREA_MM2 {
                dropped += 1;
                continue;
            }
            prims.push((*tri, t));
        }
        if dropped > 0 {
            log::warn!("dropped {dropped} degenerate triangle(s) with area < {DEGENERATE_AREA_MM2} mm²");
        }
        if prims.is_empty() {
            return Err(DistError::DegenerateMesh);
        }
        if mode == DistanceMode::Vertices {
            let mut used = vec![false; vertices.len()];
            for (tri, _) in &prims {
                for &i in tri {
                    used[i] = true;
                }
            }
            prims = (0..vertices.len()).filter(|&i| used[i]).map(|i| ([i, i, i], i)).collect();
        }

        let mut index = SurfaceIndex {
            order: (0..prims.len()).collect(),
            vertices,
            prims,
            nodes: Vec::new(),
            mode,
            dropped,
        };
        let centroids: Vec<Vec3> = index
            .prims
            .iter()
            .map(|(t, _)| (index.vertices[t[0]] + index.vertices[t[1]] + index.vertices[t[2]]) * (1.0 / 3.0))
            .collect();
        index.nodes.push(Node { bbox: Aabb::empty(), start: 0, count: 0 });
        let n = index.order.len();
        index.build_node(0, 0, n, &centroids);
        Ok(index)
    }

    fn prim_bbox(&self, p: usize) -> Aabb {
        let mut bb = Aabb::empty();
        for &v in &self.prims[p].0 {
            bb.grow(self.vertices[v]);
        }
        bb
    }

    fn build_node(&mut self, node: usize, start: usize, end: usize, centroids: &[Vec3]) {
        let mut bbox = Aabb::empty();
        let mut cbox = Aabb::empty();
        for &p in &self.order[start..end] {
            bbox = bbox.union(&self.prim_bbox(p));
            cbox.grow(centroids[p]);
        }
        self.nodes[node].bbox = bbox;
        if end - start <= LEAF_SIZE {
            self.nodes[node].start = start;
            self.nodes[node].count = end - start;
            return;
        }
        let axis = cbox.longest_axis();
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a].axis(axis).total_cmp(&centroids[b].axis(axis)).then(a.cmp(&b))
        });
        let left = self.nodes.len();
        self.nodes.push(Node { bbox: Aabb::empty(), start: 0, count: 0 });
        self.nodes.push(Node { bbox: Aabb::empty(), start: 0, count: 0 });
        self.nodes[node].start = left;
        self.nodes[node].count = 0;
        self.build_node(left, start, mid, centroids);
        self.build_node(left + 1, mid, end, centroids);
    }

    pub fn mode(&self) -> DistanceMode {
        self.mode
    }

    /// Number of degenerate triangles skipped at build time.
    pub fn dropped_triangles(&self) -> usize {
        self.dropped
    }

    /// Number of primitives in the index (triangles, or vertices in vertex mode).
    pub fn len(&self) -> usize {
        self.prims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prims.is_empty()
    }

    fn primitive_closest(&self, p: usize, q: Vec3) -> (Vec3, Feature) {
        let [a, b, c] = self.prims[p].0;
        match self.mode {
            DistanceMode::Surface => closest_point_on_triangle(q, self.vertices[a], self.vertices[b], self.vertices[c]),
            DistanceMode::Vertices => (self.vertices[a], Feature::Vertex(0)),
        }
    }

    /// Exact closest primitive to `q`. Ties in distance go to the lowest
    /// source index.
    pub fn closest(&self, q: Vec3) -> ClosestHit {
        let mut best_d2 = f64::INFINITY;
        let mut best: Option<(usize, Vec3, Feature)> = None;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bbox.dist2(q) > best_d2 {
                continue;
            }
            if node.count > 0 {
                for &p in &self.order[node.start..node.start + node.count] {
                    let (pt, feat) = self.primitive_closest(p, q);
                    let d2 = (q - pt).norm2();
                    let src = self.prims[p].1;
                    let better = match best {
                        None => true,
                        Some((b, _, _)) => d2 < best_d2 || (d2 == best_d2 && src < self.prims[b].1),
                    };
                    if better {
                        best_d2 = d2;
                        best = Some((p, pt, feat));
                    }
                }
            } else {
                let (l, r) = (node.start, node.start + 1);
                let (dl, dr) = (self.nodes[l].bbox.dist2(q), self.nodes[r].bbox.dist2(q));
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        let (p, point, feature) = best.expect("index is never empty");
        ClosestHit {
            distance: best_d2.sqrt(),
            primitive: self.prims[p].1,
            feature,
            point,
        }
    }

    pub fn closest_distance(&self, q: Vec3) -> f64 {
        self.closest(q).distance
    }
}

/// Builds a [`SurfaceIndex`] measuring to the continuous surface.
pub fn build_index(mesh: &SurfaceMesh) -> Result<SurfaceIndex, DistError> {
    SurfaceIndex::build(mesh)
}

/// Minimum distance (mm) from `point` to the indexed surface.
pub fn closest_distance(index: &SurfaceIndex, point: [f64; 3]) -> f64 {
    index.closest_distance(Vec3::from(point))
}

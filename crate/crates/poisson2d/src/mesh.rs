//! Structured triangulations of axis-aligned rectangles with uniform red
//! refinement.
//!
//! A mesh is built by splitting an `nx` x `nx` grid of cells into two
//! triangles each, always along the SW-NE diagonal, and refined by
//! subdividing every triangle into four congruent children through its edge
//! midpoints. Meshes are immutable after construction.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::error::{Error, Result};

/// Absolute coordinate tolerance used to classify boundary vertices.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Axis-aligned bounding rectangle of the computational domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl BoundingBox {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        BoundingBox { xmin, xmax, ymin, ymax }
    }

    /// The square [-1,1] x [-1,1].
    pub fn biunit() -> Self {
        BoundingBox::new(-1.0, 1.0, -1.0, 1.0)
    }

    /// The unit square [0,1] x [0,1].
    pub fn unit() -> Self {
        BoundingBox::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }

    /// True if `p` lies on the rectangle boundary within `BOUNDARY_TOL`.
    pub fn on_boundary(&self, p: Point) -> bool {
        (p.x - self.xmin).abs() <= BOUNDARY_TOL
            || (p.x - self.xmax).abs() <= BOUNDARY_TOL
            || (p.y - self.ymin).abs() <= BOUNDARY_TOL
            || (p.y - self.ymax).abs() <= BOUNDARY_TOL
    }
}

/// Affine map from the reference triangle with vertices (0,0), (1,0), (0,1)
/// onto a physical triangle.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    /// Image of the reference origin (first triangle vertex).
    pub origin: Point,
    /// Column-major Jacobian: column 0 = b - a, column 1 = c - a.
    pub jacobian: [[f64; 2]; 2],
    /// Jacobian determinant, equal to twice the triangle area.
    pub det: f64,
    /// Inverse transpose of the Jacobian; maps reference gradients to
    /// physical gradients.
    pub inv_transpose: [[f64; 2]; 2],
}

impl AffineMap {
    /// Map a reference point to physical coordinates.
    pub fn to_physical(&self, xr: f64, yr: f64) -> Point {
        Point::new(
            self.origin.x + self.jacobian[0][0] * xr + self.jacobian[0][1] * yr,
            self.origin.y + self.jacobian[1][0] * xr + self.jacobian[1][1] * yr,
        )
    }

    /// Map a physical point back to reference coordinates.
    pub fn to_reference(&self, p: Point) -> (f64, f64) {
        let dx = p.x - self.origin.x;
        let dy = p.y - self.origin.y;
        let inv_det = 1.0 / self.det;
        (
            inv_det * (self.jacobian[1][1] * dx - self.jacobian[0][1] * dy),
            inv_det * (-self.jacobian[1][0] * dx + self.jacobian[0][0] * dy),
        )
    }

    /// Push a reference gradient forward to the physical element.
    pub fn grad_to_physical(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_transpose[0][0] * g[0] + self.inv_transpose[0][1] * g[1],
            self.inv_transpose[1][0] * g[0] + self.inv_transpose[1][1] * g[1],
        ]
    }
}

/// Conforming triangulation of an axis-aligned rectangle.
///
/// Triangles are stored as counter-clockwise vertex index triples. The
/// refinement level starts at 1 for a freshly built mesh.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_vertices: BTreeSet<usize>,
    pub level: u32,
    pub bbox: BoundingBox,
}

impl TriangleMesh {
    /// Validate connectivity and orientation, classify boundary vertices.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        bbox: BoundingBox,
        level: u32,
    ) -> Result<Self> {
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(Error::InvalidArgument(format!(
                        "triangle {t} references vertex {v} but mesh has {} vertices",
                        vertices.len()
                    )));
                }
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "triangle {t} has non-positive signed area {area:e} (vertices must be CCW)"
                )));
            }
        }
        let boundary_vertices = vertices
            .iter()
            .enumerate()
            .filter(|(_, &p)| bbox.on_boundary(p))
            .map(|(i, _)| i)
            .collect();
        Ok(TriangleMesh { vertices, triangles, boundary_vertices, level, bbox })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    /// Affine reference map of triangle `t` with precomputed Jacobian data.
    pub fn affine_map(&self, t: usize) -> Result<AffineMap> {
        let tri = *self
            .triangles
            .get(t)
            .ok_or_else(|| Error::InvalidArgument(format!("triangle index {t} out of range")))?;
        let a = self.vertices[tri[0]];
        let b = self.vertices[tri[1]];
        let c = self.vertices[tri[2]];
        let j = [[b.x - a.x, c.x - a.x], [b.y - a.y, c.y - a.y]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let inv_det = 1.0 / det;
        let inv_transpose = [
            [j[1][1] * inv_det, -j[1][0] * inv_det],
            [-j[0][1] * inv_det, j[0][0] * inv_det],
        ];
        Ok(AffineMap { origin: a, jacobian: j, det, inv_transpose })
    }

    /// Longest edge length over all triangles.
    pub fn mesh_size(&self) -> f64 {
        let mut h: f64 = 0.0;
        for tri in &self.triangles {
            for k in 0..3 {
                let p = self.vertices[tri[k]];
                let q = self.vertices[tri[(k + 1) % 3]];
                h = h.max(((q.x - p.x).powi(2) + (q.y - p.y).powi(2)).sqrt());
            }
        }
        h
    }

    /// All undirected edges as ordered `(low, high)` vertex index pairs,
    /// with the number of triangles sharing each edge.
    pub fn edge_use_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut edges = BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                *edges.entry(key).or_insert(0) += 1;
            }
        }
        edges
    }

    /// Uniform red refinement: each triangle is split into four congruent
    /// children through its edge midpoints. Parent vertices keep their
    /// indices; midpoints are appended in deterministic traversal order.
    pub fn refine_uniform(&self) -> TriangleMesh {
        let mut vertices = self.vertices.clone();
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());

        let mut mid = |i: usize, j: usize, vertices: &mut Vec<Point>| -> usize {
            let key = edge_key(i, j);
            *midpoint.entry(key).or_insert_with(|| {
                let p = vertices[i];
                let q = vertices[j];
                vertices.push(Point::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y)));
                vertices.len() - 1
            })
        };

        for tri in &self.triangles {
            let [a, b, c] = *tri;
            let mab = mid(a, b, &mut vertices);
            let mbc = mid(b, c, &mut vertices);
            let mca = mid(c, a, &mut vertices);
            triangles.push([a, mab, mca]);
            triangles.push([mab, b, mbc]);
            triangles.push([mca, mbc, c]);
            triangles.push([mab, mbc, mca]);
        }

        TriangleMesh::new(vertices, triangles, self.bbox, self.level + 1)
            .expect("refinement of a valid mesh is valid")
    }

    /// Write the mesh as a legacy ASCII VTK unstructured grid (cell type 5),
    /// with optional named per-vertex scalar fields.
    pub fn write_vtk<W: Write>(
        &self,
        w: &mut W,
        title: &str,
        point_data: &[(&str, &[f64])],
    ) -> std::io::Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "{title}")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", self.vertices.len())?;
        for p in &self.vertices {
            writeln!(w, "{:.17e} {:.17e} 0.0", p.x, p.y)?;
        }
        writeln!(w, "CELLS {} {}", self.triangles.len(), 4 * self.triangles.len())?;
        for tri in &self.triangles {
            writeln!(w, "3 {} {} {}", tri[0], tri[1], tri[2])?;
        }
        writeln!(w, "CELL_TYPES {}", self.triangles.len())?;
        for _ in &self.triangles {
            writeln!(w, "5")?;
        }
        if !point_data.is_empty() {
            writeln!(w, "POINT_DATA {}", self.vertices.len())?;
            for (name, values) in point_data {
                writeln!(w, "SCALARS {name} double 1")?;
                writeln!(w, "LOOKUP_TABLE default")?;
                for v in *values {
                    writeln!(w, "{v:.17e}")?;
                }
            }
        }
        Ok(())
    }
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)
}

fn edge_key(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Build a structured triangulation of `bbox` with `nx` x `nx` cells, each
/// split along its SW-NE diagonal.
pub fn build_rect_mesh(bbox: BoundingBox, nx: usize) -> Result<TriangleMesh> {
    if nx < 1 {
        return Err(Error::InvalidArgument("nx must be at least 1".into()));
    }
    let widths_positive = bbox.xmax > bbox.xmin && bbox.ymax > bbox.ymin;
    if !widths_positive {
        return Err(Error::InvalidArgument(format!(
            "degenerate bounding box [{}, {}] x [{}, {}]",
            bbox.xmin, bbox.xmax, bbox.ymin, bbox.ymax
        )));
    }

    let n1 = nx + 1;
    let dx = (bbox.xmax - bbox.xmin) / nx as f64;
    let dy = (bbox.ymax - bbox.ymin) / nx as f64;
    let mut vertices = Vec::with_capacity(n1 * n1);
    for j in 0..n1 {
        for i in 0..n1 {
            let x = if i == nx { bbox.xmax } else { bbox.xmin + i as f64 * dx };
            let y = if j == nx { bbox.ymax } else { bbox.ymin + j as f64 * dy };
            vertices.push(Point::new(x, y));
        }
    }

    let v = |i: usize, j: usize| j * n1 + i;
    let mut triangles = Vec::with_capacity(2 * nx * nx);
    for j in 0..nx {
        for i in 0..nx {
            let sw = v(i, j);
            let se = v(i + 1, j);
            let ne = v(i + 1, j + 1);
            let nw = v(i, j + 1);
            triangles.push([sw, se, ne]);
            triangles.push([sw, ne, nw]);
        }
    }

    TriangleMesh::new(vertices, triangles, bbox, 1)
}

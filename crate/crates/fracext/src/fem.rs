//! Planar P1 finite elements on triangulations of the source domain:
//! structured square meshes, uniform red refinement for user-supplied
//! coarse meshes, stiffness/mass/load assembly, and the boundary trace map.
//!
//! Meshes are conforming with a single closed boundary loop. Assembly
//! walks elements in index order (optionally evaluating element blocks in
//! parallel) and accumulates into triplet lists sequentially, so matrix
//! entries are bitwise reproducible regardless of thread count.

use crate::error::{FracError, Result};
use crate::map_indexed;
use crate::params::{CoefficientField, SourceTerm};
use crate::Vec2;
use nalgebra::{DMatrix, DVector, Matrix3};
use std::collections::HashMap;

/// Conforming triangulation with counterclockwise triangles and an ordered
/// boundary loop.
#[derive(Clone, Debug)]
pub struct TriMesh {
    pub vertices: Vec<Vec2>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Ordered index pairs tracing the boundary as a single closed loop;
    /// each pair is (start, end) walking counterclockwise around the domain.
    pub boundary_edges: Vec<[usize; 2]>,
    /// Maximal edge length.
    pub h: f64,
}

impl TriMesh {
    /// Signed area of triangle `t` (positive for counterclockwise).
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    fn max_edge_length(vertices: &[Vec2], triangles: &[[usize; 3]]) -> f64 {
        let mut h: f64 = 0.0;
        for t in triangles {
            for k in 0..3 {
                let e = (vertices[t[(k + 1) % 3]] - vertices[t[k]]).norm();
                h = h.max(e);
            }
        }
        h
    }

    /// Plain-text export: vertex count, `x y` lines, triangle count,
    /// `i j k` lines (zero-based).
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{}\n", self.vertices.len()));
        for v in &self.vertices {
            out.push_str(&format!("{:.17e} {:.17e}\n", v.x, v.y));
        }
        out.push_str(&format!("{}\n", self.triangles.len()));
        for t in &self.triangles {
            out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        out
    }

    /// Parses the plain-text format of [`Self::export_text`], rebuilding
    /// the boundary loop from triangle adjacency.
    pub fn import_text(text: &str) -> Result<TriMesh> {
        let mut tokens = text.split_whitespace().map(|s| s.to_owned());
        let mut next_num = |what: &str| -> Result<f64> {
            tokens
                .next()
                .ok_or_else(|| FracError::Config(format!("mesh file ended early: missing {what}")))?
                .parse::<f64>()
                .map_err(|e| FracError::Config(format!("mesh file: bad {what}: {e}")))
        };
        let nv = next_num("vertex count")? as usize;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let x = next_num("vertex coordinate")?;
            let y = next_num("vertex coordinate")?;
            vertices.push(Vec2::new(x, y));
        }
        let nt = next_num("triangle count")? as usize;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let mut t = [0usize; 3];
            for slot in &mut t {
                let v = next_num("triangle index")?;
                if v < 0.0 || v.fract() != 0.0 || v as usize >= nv {
                    return Err(FracError::Config(format!("bad triangle index {v}")));
                }
                *slot = v as usize;
            }
            triangles.push(t);
        }
        TriMesh::from_parts(vertices, triangles)
    }

    /// Builds a mesh from raw vertices and triangles, validating
    /// orientation and conformity and deriving the boundary loop.
    pub fn from_parts(vertices: Vec<Vec2>, triangles: Vec<[usize; 3]>) -> Result<TriMesh> {
        if triangles.is_empty() {
            return Err(FracError::Mesh("mesh has no triangles".into()));
        }
        // Orientation / degeneracy.
        for (t, tri) in triangles.iter().enumerate() {
            let (p, q, r) = (
                vertices[tri[0]],
                vertices[tri[1]],
                vertices[tri[2]],
            );
            let area = 0.5 * ((q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x));
            if !(area > 0.0) {
                return Err(FracError::Mesh(format!(
                    "triangle {t} degenerate or clockwise (signed area {area})"
                )));
            }
        }
        let boundary_edges = derive_boundary_loop(vertices.len(), &triangles)?;
        let h = TriMesh::max_edge_length(&vertices, &triangles);
        Ok(TriMesh {
            vertices,
            triangles,
            boundary_edges,
            h,
        })
    }
}

/// Collects edges used by exactly one triangle and chains them into a
/// single counterclockwise loop.
fn derive_boundary_loop(nv: usize, triangles: &[[usize; 3]]) -> Result<Vec<[usize; 2]>> {
    let mut once: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            match once.remove(&key) {
                // Conforming interior edge: seen exactly twice, drop it.
                Some(_) => {}
                None => {
                    once.insert(key, (a, b));
                }
            }
        }
    }
    // Boundary edges keep triangle orientation: domain lies on their left.
    let mut successor = vec![usize::MAX; nv];
    let mut count = 0usize;
    let mut start = usize::MAX;
    for &(a, b) in once.values() {
        if successor[a] != usize::MAX {
            return Err(FracError::Topology(
                "boundary is not a simple loop (vertex with two outgoing edges)".into(),
            ));
        }
        successor[a] = b;
        start = start.min(a);
        count += 1;
    }
    if count == 0 {
        return Err(FracError::Topology("mesh has no boundary".into()));
    }
    let mut loop_edges = Vec::with_capacity(count);
    let mut cur = start;
    loop {
        let nxt = successor[cur];
        if nxt == usize::MAX {
            return Err(FracError::Topology("boundary loop broken".into()));
        }
        loop_edges.push([cur, nxt]);
        cur = nxt;
        if cur == start {
            break;
        }
        if loop_edges.len() > count {
            return Err(FracError::Topology(
                "boundary consists of multiple loops; single-loop domains only".into(),
            ));
        }
    }
    if loop_edges.len() != count {
        return Err(FracError::Topology(
            "boundary consists of multiple loops; single-loop domains only".into(),
        ));
    }
    Ok(loop_edges)
}

/// Structured triangulation of the centered square `[-side/2, side/2]^2`
/// with `n` subdivisions per side: `(n+1)^2` vertices, `2 n^2` triangles
/// (one diagonal per cell, all parallel), `h = side sqrt(2)/n`.
///
/// Refining `n -> 2n` produces a nested mesh.
pub fn mesh_square(side: f64, n: usize) -> Result<TriMesh> {
    if n < 1 {
        return Err(FracError::Domain("need at least one subdivision".into()));
    }
    if !(side > 0.0) {
        return Err(FracError::Domain(format!("square side {side} not positive")));
    }
    let np = n + 1;
    let h = side / n as f64;
    let half = 0.5 * side;
    let mut vertices = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            vertices.push(Vec2::new(-half + i as f64 * h, -half + j as f64 * h));
        }
    }
    let vid = |i: usize, j: usize| j * np + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut boundary = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary.push([vid(i, 0), vid(i + 1, 0)]);
    }
    for j in 0..n {
        boundary.push([vid(n, j), vid(n, j + 1)]);
    }
    for i in (0..n).rev() {
        boundary.push([vid(i + 1, n), vid(i, n)]);
    }
    for j in (0..n).rev() {
        boundary.push([vid(0, j + 1), vid(0, j)]);
    }
    Ok(TriMesh {
        vertices,
        triangles,
        boundary_edges: boundary,
        h: h * 2f64.sqrt(),
    })
}

/// Uniform red refinement: every triangle splits into four via edge
/// midpoints; boundary edges split in two preserving loop order.
pub fn refine_red(mesh: &TriMesh) -> Result<TriMesh> {
    let mut vertices = mesh.vertices.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec2>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            vertices.push(0.5 * (vertices[a] + vertices[b]));
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let mut boundary = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for &[a, b] in &mesh.boundary_edges {
        let m = mid(a, b, &mut vertices);
        boundary.push([a, m]);
        boundary.push([m, b]);
    }
    let h = TriMesh::max_edge_length(&vertices, &triangles);
    Ok(TriMesh {
        vertices,
        triangles,
        boundary_edges: boundary,
        h,
    })
}

/// Piecewise-linear Lagrange space on a triangulation; one dof per vertex.
#[derive(Clone, Debug)]
pub struct P1Space {
    pub mesh: TriMesh,
}

impl P1Space {
    pub fn new(mesh: TriMesh) -> P1Space {
        P1Space { mesh }
    }

    pub fn dim(&self) -> usize {
        self.mesh.vertices.len()
    }
}

/// Symmetric sparse matrix in compressed row storage.
#[derive(Clone, Debug)]
pub struct SparseSymmetric {
    pub n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetric {
    /// Builds from (row, col, value) triplets, summing duplicates. The
    /// triplet list must already contain both (i,j) and (j,i) entries.
    fn from_triplets(n: usize, triplets: &mut Vec<(usize, usize, f64)>) -> SparseSymmetric {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in triplets.iter() {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        SparseSymmetric {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            y[i] = acc;
        }
        y
    }

    pub fn diag(&self) -> DVector<f64> {
        let mut d = DVector::zeros(self.n);
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                if self.indices[k] == i {
                    d[i] = self.values[k];
                }
            }
        }
        d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        for k in self.indptr[i]..self.indptr[i + 1] {
            if self.indices[k] == j {
                return self.values[k];
            }
        }
        0.0
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                m[(i, self.indices[k])] = self.values[k];
            }
        }
        m
    }

    /// Frobenius norm (used in tolerance scalings).
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `ca * a + cb * b` for matrices over the same dof set (patterns may
    /// differ; rows are merged).
    pub fn linear_combination(
        a: &SparseSymmetric,
        ca: f64,
        b: &SparseSymmetric,
        cb: f64,
    ) -> Result<SparseSymmetric> {
        if a.n != b.n {
            return Err(FracError::Domain(format!(
                "dimension mismatch {} vs {}",
                a.n, b.n
            )));
        }
        let mut indptr = vec![0usize; a.n + 1];
        let mut indices = Vec::with_capacity(a.indices.len().max(b.indices.len()));
        let mut values = Vec::with_capacity(indices.capacity());
        for i in 0..a.n {
            let (mut ka, mut kb) = (a.indptr[i], b.indptr[i]);
            let (ea, eb) = (a.indptr[i + 1], b.indptr[i + 1]);
            while ka < ea || kb < eb {
                let ja = if ka < ea { a.indices[ka] } else { usize::MAX };
                let jb = if kb < eb { b.indices[kb] } else { usize::MAX };
                if ja < jb {
                    indices.push(ja);
                    values.push(ca * a.values[ka]);
                    ka += 1;
                } else if jb < ja {
                    indices.push(jb);
                    values.push(cb * b.values[kb]);
                    kb += 1;
                } else {
                    indices.push(ja);
                    values.push(ca * a.values[ka] + cb * b.values[kb]);
                    ka += 1;
                    kb += 1;
                }
            }
            indptr[i + 1] = indices.len();
        }
        Ok(SparseSymmetric {
            n: a.n,
            indptr,
            indices,
            values,
        })
    }
}

/// Assembles the coefficient stiffness matrix and the mass matrix:
/// `K_ij = int_Omega (A grad hat_j) . grad hat_i dx`,
/// `M_ij = int_Omega hat_i hat_j dx`.
///
/// The coefficient is sampled at element centroids (exact for constant
/// coefficients; first-order consistent for smooth ones); the P1 mass
/// matrix is integrated exactly.
pub fn assemble_stiffness_mass(
    space: &P1Space,
    coeff: &CoefficientField,
) -> Result<(SparseSymmetric, SparseSymmetric)> {
    let mesh = &space.mesh;
    let nt = mesh.triangles.len();
    let blocks: Vec<Result<(Matrix3<f64>, Matrix3<f64>, f64)>> = map_indexed(nt, |t| {
        let [a, b, c] = mesh.triangles[t];
        let (p, q, r) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
        let area = 0.5 * ((q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x));
        if !(area > 0.0) {
            return Err(FracError::Mesh(format!(
                "triangle {t} degenerate (signed area {area})"
            )));
        }
        // Hat gradients: grad lambda_i = (y_j - y_k, x_k - x_j)/(2 area),
        // indices cyclic.
        let grads = [
            Vec2::new(q.y - r.y, r.x - q.x) / (2.0 * area),
            Vec2::new(r.y - p.y, p.x - r.x) / (2.0 * area),
            Vec2::new(p.y - q.y, q.x - p.x) / (2.0 * area),
        ];
        let centroid = (p + q + r) / 3.0;
        let amat = coeff.evaluate(centroid);
        let mut k_loc = Matrix3::zeros();
        for i in 0..3 {
            let agi = amat * grads[i];
            for j in 0..3 {
                k_loc[(i, j)] = area * agi.dot(&grads[j]);
            }
        }
        let m_loc = Matrix3::new(2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0) * (area / 12.0);
        Ok((k_loc, m_loc, area))
    });
    let n = space.dim();
    let mut k_trip = Vec::with_capacity(9 * nt);
    let mut m_trip = Vec::with_capacity(9 * nt);
    for (t, block) in blocks.into_iter().enumerate() {
        let (k_loc, m_loc, _) = block?;
        let idx = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                k_trip.push((idx[i], idx[j], k_loc[(i, j)]));
                m_trip.push((idx[i], idx[j], m_loc[(i, j)]));
            }
        }
    }
    Ok((
        SparseSymmetric::from_triplets(n, &mut k_trip),
        SparseSymmetric::from_triplets(n, &mut m_trip),
    ))
}

/// Degree-4 triangle rule (6 points), weights normalized to sum to 1 over
/// the triangle; classical two-orbit rule.
const TRI_RULE_D4: [(f64, f64, f64); 6] = {
    const A: f64 = 0.445_948_490_915_964_89;
    const WA: f64 = 0.223_381_589_678_011_5;
    const B: f64 = 0.091_576_213_509_770_743;
    const WB: f64 = 0.109_951_743_655_321_87;
    [
        (A, A, WA),
        (A, 1.0 - 2.0 * A, WA),
        (1.0 - 2.0 * A, A, WA),
        (B, B, WB),
        (B, 1.0 - 2.0 * B, WB),
        (1.0 - 2.0 * B, B, WB),
    ]
};

/// Assembles the load vector `scale * int_Omega f hat_i dx` with a
/// degree-4 rule per triangle. The scale carries the per-mode factor.
pub fn assemble_load(space: &P1Space, f: &SourceTerm, scale: f64) -> DVector<f64> {
    let mesh = &space.mesh;
    let nt = mesh.triangles.len();
    let blocks: Vec<[f64; 3]> = map_indexed(nt, |t| {
        let [a, b, c] = mesh.triangles[t];
        let (p, q, r) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
        let area = 0.5 * ((q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x));
        let mut loc = [0.0; 3];
        for &(l1, l2, w) in &TRI_RULE_D4 {
            let l0 = 1.0 - l1 - l2;
            let x = p * l0 + q * l1 + r * l2;
            let fv = f.evaluate(x) * w * area;
            loc[0] += fv * l0;
            loc[1] += fv * l1;
            loc[2] += fv * l2;
        }
        loc
    });
    let mut load = DVector::zeros(space.dim());
    for (t, loc) in blocks.into_iter().enumerate() {
        let idx = mesh.triangles[t];
        for i in 0..3 {
            load[idx[i]] += scale * loc[i];
        }
    }
    load
}

/// Restriction of P1 coefficient vectors to the ordered boundary vertex
/// ring (the trace operator onto the boundary P1 space).
#[derive(Clone, Debug)]
pub struct TraceMap {
    /// Boundary vertex indices in loop order, starting at
    /// `boundary_edges[0][0]`.
    pub vertex_ids: Vec<usize>,
    /// Total interior dof count (dimension of the domain space).
    pub full_dim: usize,
}

impl TraceMap {
    pub fn boundary_dim(&self) -> usize {
        self.vertex_ids.len()
    }

    /// Boundary restriction `T u`.
    pub fn apply(&self, full: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.vertex_ids.len(),
            self.vertex_ids.iter().map(|&v| full[v]),
        )
    }

    /// Adjoint scatter `T^t g`.
    pub fn apply_transpose(&self, boundary: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(self.full_dim);
        for (k, &v) in self.vertex_ids.iter().enumerate() {
            full[v] += boundary[k];
        }
        full
    }
}

/// Builds the trace map of a P1 space following its boundary loop.
pub fn boundary_trace_map(space: &P1Space) -> TraceMap {
    TraceMap {
        vertex_ids: space.mesh.boundary_edges.iter().map(|e| e[0]).collect(),
        full_dim: space.dim(),
    }
}

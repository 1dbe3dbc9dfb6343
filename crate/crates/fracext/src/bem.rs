//! Boundary element operators for the modal Yukawa problems: Galerkin
//! single-layer, double-layer, and hypersingular matrices on a closed
//! polygonal boundary, plus potential evaluation away from the boundary.
//!
//! Kernel: `G(r) = K0(mu r) / (2 pi)` with `mu` the wavenumber, the
//! fundamental solution of `-lap u + mu^2 u = 0` in the plane. The
//! hypersingular form is assembled through the Maue identity
//! `<W phi, psi> = <V phi', psi'> + mu^2 <V (n phi), (n psi)>`, so only
//! weakly singular integrals appear.
//!
//! Singular quadrature: coincident panel pairs reduce to a 1D integral in
//! the separation variable, split into a logarithmic part (handled by a
//! log-weighted Gauss rule) and a smooth remainder, with dyadic octaves
//! covering the exponential tail. Pairs sharing a vertex use graded dyadic
//! subdivision toward the vertex with tensor Gauss per cell. Well-separated
//! pairs use plain tensor Gauss, with recursive bisection if the gap is
//! small relative to panel size. Pairs (and cells) whose minimal distance
//! puts the kernel below double precision are skipped outright, which keeps
//! large-wavenumber assembly effectively banded.

use crate::error::{FracError, Result};
use crate::fem::TriMesh;
use crate::map_indexed;
use crate::quad::{gauss_legendre, gauss_log, QuadRule};
use crate::specfun::{k0_k1, yukawa_green_smooth_split, KernelSpec};
use crate::Vec2;
use nalgebra::{DMatrix, DVector};

/// K0(40) ~ 8e-19: interactions with `mu * dist` beyond this are below
/// double-precision resolution of the nearby entries and are skipped.
const KERNEL_CUTOFF: f64 = 40.0;

/// The kernel is split into log and smooth parts while `mu * r` stays
/// below this; the split series loses at most ~I0(5) ~ 27 in cancellation.
const LOG_SPLIT_WINDOW: f64 = 5.0;

/// Closed polygonal boundary, counterclockwise, one segment per panel;
/// segment `k` runs from `points[k]` to `points[(k+1) % n]`.
#[derive(Clone, Debug)]
pub struct BoundaryMesh {
    pub points: Vec<Vec2>,
    pub lengths: Vec<f64>,
    pub midpoints: Vec<Vec2>,
    /// Unit tangents along the orientation.
    pub tangents: Vec<Vec2>,
    /// Unit outward normals (domain lies left of the oriented loop).
    pub normals: Vec<Vec2>,
}

impl BoundaryMesh {
    /// Builds from an ordered counterclockwise point ring.
    pub fn closed_polygon(points: Vec<Vec2>) -> Result<BoundaryMesh> {
        let n = points.len();
        if n < 3 {
            return Err(FracError::Topology(format!(
                "closed boundary needs at least 3 points, got {n}"
            )));
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(FracError::Topology("boundary point not finite".into()));
        }
        let mut lengths = Vec::with_capacity(n);
        let mut midpoints = Vec::with_capacity(n);
        let mut tangents = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let mut area2 = 0.0;
        for k in 0..n {
            let a = points[k];
            let b = points[(k + 1) % n];
            let d = b - a;
            let len = d.norm();
            if !(len > 0.0) {
                return Err(FracError::Topology(format!(
                    "boundary segment {k} has zero length"
                )));
            }
            let t = d / len;
            lengths.push(len);
            midpoints.push(0.5 * (a + b));
            tangents.push(t);
            normals.push(Vec2::new(t.y, -t.x));
            area2 += a.x * b.y - a.y * b.x;
        }
        if !(area2 > 0.0) {
            return Err(FracError::Topology(
                "boundary loop is clockwise or degenerate; counterclockwise required".into(),
            ));
        }
        Ok(BoundaryMesh {
            points,
            lengths,
            midpoints,
            tangents,
            normals,
        })
    }

    /// Regular `n`-gon inscribed in the circle of given radius.
    pub fn circle(radius: f64, n: usize) -> Result<BoundaryMesh> {
        if !(radius > 0.0) {
            return Err(FracError::Domain(format!("radius {radius} not positive")));
        }
        let pts = (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Vec2::new(radius * th.cos(), radius * th.sin())
            })
            .collect();
        BoundaryMesh::closed_polygon(pts)
    }

    pub fn segment_count(&self) -> usize {
        self.points.len()
    }

    pub fn perimeter(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Start point of segment `k`.
    pub fn segment_start(&self, k: usize) -> Vec2 {
        self.points[k]
    }

    /// End point of segment `k`.
    pub fn segment_end(&self, k: usize) -> Vec2 {
        self.points[(k + 1) % self.points.len()]
    }
}

/// Extracts the boundary loop of a triangulation as a boundary mesh.
///
/// The triangulation constructors already reject multi-loop boundaries,
/// so the loop here is single and closed.
pub fn build_boundary_mesh(mesh: &TriMesh) -> Result<BoundaryMesh> {
    let points = mesh
        .boundary_edges
        .iter()
        .map(|e| mesh.vertices[e[0]])
        .collect();
    BoundaryMesh::closed_polygon(points)
}

/// Piecewise-constant trial/test space on the boundary panels.
#[derive(Clone, Debug)]
pub struct PCSpace {
    pub mesh: BoundaryMesh,
}

impl PCSpace {
    pub fn new(mesh: BoundaryMesh) -> PCSpace {
        PCSpace { mesh }
    }

    /// One dof per segment.
    pub fn dim(&self) -> usize {
        self.mesh.segment_count()
    }
}

/// Galerkin boundary operator matrices at a fixed wavenumber.
///
/// `v`: single layer, piecewise constants on both sides. `k`: double
/// layer, piecewise-constant test against piecewise-linear trial. `w`:
/// hypersingular, piecewise linear on both sides. `mass`: boundary mass,
/// piecewise-constant test against piecewise-linear trial. On a closed
/// loop the linear and constant spaces have equal dimension, so all
/// matrices are square of size `segment_count`.
#[derive(Clone, Debug)]
pub struct BemOperators {
    /// Wavenumber of the kernel `K0(mu r) / (2 pi)`.
    pub mu: f64,
    pub v: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub mass: DMatrix<f64>,
}

/// Mass matrix of the piecewise-linear boundary space (vertex by vertex).
pub fn p1_boundary_mass(mesh: &BoundaryMesh) -> DMatrix<f64> {
    let n = mesh.segment_count();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let (a, b) = (i, (i + 1) % n);
        let l = mesh.lengths[i];
        m[(a, a)] += l / 3.0;
        m[(b, b)] += l / 3.0;
        m[(a, b)] += l / 6.0;
        m[(b, a)] += l / 6.0;
    }
    m
}

/// Geometry of one straight panel.
struct Panel {
    a: Vec2,
    b: Vec2,
    len: f64,
    normal: Vec2,
}

/// Relation of an (i, j) panel pair within the loop.
#[derive(Clone, Copy)]
enum PairGeom {
    Coincident,
    /// Which endpoint of each panel is the shared vertex.
    Adjacent {
        shared_i_is_b: bool,
        shared_j_is_b: bool,
    },
    Disjoint,
}

/// Kernel moments of one panel pair, enough to assemble V, K, and W
/// simultaneously: `m[a][b]` integrates `G(|x-y|) Na(x) Nb(y)` over
/// `S_i x S_j`; `d_trial[b]` integrates the double-layer kernel (normal
/// on `S_j`) against trial shape `Nb(y)`; `d_test[a]` is the mirrored
/// quantity with test panel `S_j` and normal on `S_i`.
#[derive(Clone, Copy, Default)]
struct PairMoments {
    m: [[f64; 2]; 2],
    d_trial: [f64; 2],
    d_test: [f64; 2],
}

/// Straight sub-segment of a panel with its parameter range in the parent.
#[derive(Clone, Copy)]
struct Cell {
    p0: Vec2,
    p1: Vec2,
    xi0: f64,
    xi1: f64,
}

impl Cell {
    fn whole(p: &Panel) -> Cell {
        Cell {
            p0: p.a,
            p1: p.b,
            xi0: 0.0,
            xi1: 1.0,
        }
    }

    fn len(&self) -> f64 {
        (self.p1 - self.p0).norm()
    }

    fn mid(&self) -> Vec2 {
        0.5 * (self.p0 + self.p1)
    }

    fn split(&self) -> (Cell, Cell) {
        let pm = self.mid();
        let xm = 0.5 * (self.xi0 + self.xi1);
        (
            Cell {
                p0: self.p0,
                p1: pm,
                xi0: self.xi0,
                xi1: xm,
            },
            Cell {
                p0: pm,
                p1: self.p1,
                xi0: xm,
                xi1: self.xi1,
            },
        )
    }
}

/// Quadrature rules shared across all pairs of one assembly.
struct AssemblyRules {
    gl2: QuadRule,
    gl3: QuadRule,
    gl4: QuadRule,
    gl6: QuadRule,
    gl8: QuadRule,
    gl12: QuadRule,
    gl16: QuadRule,
    glog12: QuadRule,
}

impl AssemblyRules {
    fn new() -> Result<AssemblyRules> {
        Ok(AssemblyRules {
            gl2: gauss_legendre(2)?.mapped_to(0.0, 1.0),
            gl3: gauss_legendre(3)?.mapped_to(0.0, 1.0),
            gl4: gauss_legendre(4)?.mapped_to(0.0, 1.0),
            gl6: gauss_legendre(6)?.mapped_to(0.0, 1.0),
            gl8: gauss_legendre(8)?.mapped_to(0.0, 1.0),
            gl12: gauss_legendre(12)?.mapped_to(0.0, 1.0),
            gl16: gauss_legendre(16)?.mapped_to(0.0, 1.0),
            glog12: gauss_log(12)?,
        })
    }

    /// Smallest stocked Gauss rule with at least `want` points.
    fn pick(&self, want: usize) -> &QuadRule {
        match want {
            0..=2 => &self.gl2,
            3 => &self.gl3,
            4 => &self.gl4,
            5 | 6 => &self.gl6,
            _ => &self.gl8,
        }
    }
}

/// Conservative lower bound on the distance between two cells (bounding
/// balls around the midpoints).
fn cell_gap(ci: &Cell, cj: &Cell) -> f64 {
    ((ci.mid() - cj.mid()).norm() - 0.5 * ci.len() - 0.5 * cj.len()).max(0.0)
}

/// Tensor Gauss accumulation of all pair moments over one cell pair.
fn accumulate_cell_pair(
    rule: &QuadRule,
    ci: &Cell,
    cj: &Cell,
    ni: Vec2,
    nj: Vec2,
    mu: f64,
    out: &mut PairMoments,
) {
    let di = ci.p1 - ci.p0;
    let dj = cj.p1 - cj.p0;
    let (li, lj) = (di.norm(), dj.norm());
    for (&gx, &wx) in rule.nodes.iter().zip(&rule.weights) {
        let x = ci.p0 + gx * di;
        let xi_x = ci.xi0 + gx * (ci.xi1 - ci.xi0);
        let sx = [1.0 - xi_x, xi_x];
        for (&gy, &wy) in rule.nodes.iter().zip(&rule.weights) {
            let y = cj.p0 + gy * dj;
            let diff = x - y;
            let r = diff.norm();
            let z = mu * r;
            if z > KERNEL_CUTOFF || r < 1e-300 {
                continue;
            }
            let (k0v, k1v) = k0_k1(z);
            let wt = wx * wy * li * lj;
            let xi_y = cj.xi0 + gy * (cj.xi1 - cj.xi0);
            let sy = [1.0 - xi_y, xi_y];
            let g = wt * k0v / (2.0 * std::f64::consts::PI);
            for a in 0..2 {
                for b in 0..2 {
                    out.m[a][b] += g * sx[a] * sy[b];
                }
            }
            let c = wt * mu * k1v / (2.0 * std::f64::consts::PI * r);
            let dl_j = c * diff.dot(&nj);
            let dl_i = -c * diff.dot(&ni);
            for b in 0..2 {
                out.d_trial[b] += dl_j * sy[b];
            }
            for a in 0..2 {
                out.d_test[a] += dl_i * sx[a];
            }
        }
    }
}

/// Shape-product profiles of the coincident pair after reduction to the
/// separation variable `w = |u - v|`, scaled to `tau = w / len`:
/// `m_ab = len * int_0^len G(w) P_ab(w/len) dw`.
fn coincident_profiles(tau: f64) -> (f64, f64, f64) {
    let eta = 1.0 - tau;
    let p00 = 2.0 * ((1.0 - tau * tau * tau) / 3.0 - tau * (1.0 - tau * tau) / 2.0);
    let p11 = 2.0 * (eta * eta * eta / 3.0 + tau * eta * eta / 2.0);
    let psi01 = eta * eta * eta / 6.0;
    let psi10 = eta * eta / 2.0 - eta * eta * eta / 3.0 + tau * eta - tau * eta * eta / 2.0;
    (p00, psi01 + psi10, p11)
}

/// Coincident pair via the 1D reduction: logarithmic split near zero,
/// Gauss octaves over the exponential tail. Double-layer moments vanish
/// on a flat panel.
fn coincident_moments(rules: &AssemblyRules, len: f64, mu: f64) -> PairMoments {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut acc = [0.0f64; 3];
    let w0 = len.min(LOG_SPLIT_WINDOW / mu);

    // Window [0, w0]: G(w) = -logc(w) ln(w) + smooth(w).
    // Log part: int (-ln w) f = w0 (glog[f(w0 x)] - ln(w0) gl[f(w0 x)]).
    for (rule, with_log_node) in [(&rules.glog12, true), (&rules.gl12, false)] {
        for (&gx, &gw) in rule.nodes.iter().zip(&rule.weights) {
            let w = w0 * gx;
            let (logc, smooth) = yukawa_green_smooth_split(mu, w);
            let (p00, p01, p11) = coincident_profiles(w / len);
            let f = if with_log_node {
                // -ln(x) weighted part of the log term.
                w0 * logc
            } else {
                // Remaining -ln(w0) share of the log term plus the smooth part.
                w0 * (-w0.ln() * logc + smooth)
            };
            acc[0] += gw * f * p00;
            acc[1] += gw * f * p01;
            acc[2] += gw * f * p11;
        }
    }

    // Tail octaves [w0 2^k, w0 2^{k+1}] up to len.
    let mut lo = w0;
    while lo < len {
        if mu * lo > KERNEL_CUTOFF {
            break;
        }
        let hi = (2.0 * lo).min(len);
        for (&gx, &gw) in rules.gl16.nodes.iter().zip(&rules.gl16.weights) {
            let w = lo + gx * (hi - lo);
            let z = mu * w;
            if z > KERNEL_CUTOFF {
                continue;
            }
            let (k0v, _) = k0_k1(z);
            let g = k0v / two_pi;
            let (p00, p01, p11) = coincident_profiles(w / len);
            let wt = gw * (hi - lo) * g;
            acc[0] += wt * p00;
            acc[1] += wt * p01;
            acc[2] += wt * p11;
        }
        lo = hi;
    }

    let mut out = PairMoments::default();
    out.m[0][0] = len * acc[0];
    out.m[0][1] = len * acc[1];
    out.m[1][0] = len * acc[1];
    out.m[1][1] = len * acc[2];
    out
}

/// Pair of colinear panels sharing one vertex (straight continuation,
/// the common case on polygonal boundaries): exact reduction to a 1D
/// integral in the separation `w`, with the shape-product profile
/// `R_ab(w)` integrated by a small inner Gauss rule. The double layer
/// vanishes identically. Orders of magnitude cheaper than grading.
fn colinear_adjacent_moments(
    rules: &AssemblyRules,
    pi: &Panel,
    pj: &Panel,
    shared_i_is_b: bool,
    shared_j_is_b: bool,
    mu: f64,
) -> PairMoments {
    let (li, lj) = (pi.len, pj.len);
    // Shapes as linear functions of the distance fraction from the shared
    // vertex: N_a(t) = c[a][0] + c[a][1] t.
    let coef = |shared_is_b: bool| -> [[f64; 2]; 2] {
        if shared_is_b {
            [[0.0, 1.0], [1.0, -1.0]]
        } else {
            [[1.0, -1.0], [0.0, 1.0]]
        }
    };
    let ci = coef(shared_i_is_b);
    let cj = coef(shared_j_is_b);
    let (lmin, lmax) = (li.min(lj), li.max(lj));
    let total = li + lj;
    // R_ab(w) = int_{a} N_a(a/li) N_b((w-a)/lj) da over the admissible
    // band; the integrand is quadratic in a, so Gauss-3 is exact.
    let profile = |w: f64| -> [[f64; 2]; 2] {
        let lo = (w - lj).max(0.0);
        let hi = w.min(li);
        let mut r = [[0.0; 2]; 2];
        let span = hi - lo;
        if span <= 0.0 {
            return r;
        }
        for (&g, &gw) in rules.gl3.nodes.iter().zip(&rules.gl3.weights) {
            let a = lo + g * span;
            let (ta, tb) = (a / li, (w - a) / lj);
            for aa in 0..2 {
                for bb in 0..2 {
                    r[aa][bb] += gw
                        * span
                        * (ci[aa][0] + ci[aa][1] * ta)
                        * (cj[bb][0] + cj[bb][1] * tb);
                }
            }
        }
        r
    };

    let mut m = [[0.0f64; 2]; 2];
    // Log-split window, kept clear of the first profile kink at lmin.
    let w0 = (LOG_SPLIT_WINDOW / mu).min(lmin);
    for (rule, with_log_node) in [(&rules.glog12, true), (&rules.gl12, false)] {
        for (&gx, &gw) in rule.nodes.iter().zip(&rule.weights) {
            let w = w0 * gx;
            let (logc, smooth) = yukawa_green_smooth_split(mu, w);
            let f = if with_log_node {
                w0 * logc
            } else {
                w0 * (-w0.ln() * logc + smooth)
            };
            let r = profile(w);
            for a in 0..2 {
                for b in 0..2 {
                    m[a][b] += gw * f * r[a][b];
                }
            }
        }
    }
    // Octaves up to the total length, cut at the profile kinks.
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut cuts = vec![w0];
    for c in [lmin, lmax] {
        if c > w0 && c < total {
            cuts.push(c);
        }
    }
    cuts.push(total);
    'pieces: for piece in cuts.windows(2) {
        let mut lo = piece[0];
        while lo < piece[1] {
            if mu * lo > KERNEL_CUTOFF {
                break 'pieces;
            }
            let hi = (2.0 * lo).min(piece[1]);
            for (&gx, &gw) in rules.gl16.nodes.iter().zip(&rules.gl16.weights) {
                let w = lo + gx * (hi - lo);
                let z = mu * w;
                if z > KERNEL_CUTOFF {
                    continue;
                }
                let (k0v, _) = k0_k1(z);
                let wt = gw * (hi - lo) * k0v / two_pi;
                let r = profile(w);
                for a in 0..2 {
                    for b in 0..2 {
                        m[a][b] += wt * r[a][b];
                    }
                }
            }
            lo = hi;
        }
    }
    PairMoments {
        m,
        d_trial: [0.0; 2],
        d_test: [0.0; 2],
    }
}

/// Pair sharing one vertex: graded dyadic cells toward the vertex on both
/// panels, tensor Gauss per cell pair. The grading depth grows with
/// `mu * len` so the kernel's decay scale stays resolved.
fn adjacent_moments(
    rules: &AssemblyRules,
    pi: &Panel,
    pj: &Panel,
    shared_i_is_b: bool,
    shared_j_is_b: bool,
    mu: f64,
) -> PairMoments {
    let min_len = pi.len.min(pj.len);
    // The innermost cell pair truncates the corner of the double-layer
    // kernel at relative O(2^-depth); 14 levels hold that near 5e-8.
    let depth = ((mu * min_len).max(1.0).log2().ceil() as i32 + 2).clamp(14, 30) as u32;

    let graded = |p: &Panel, shared_is_b: bool| -> Vec<Cell> {
        let (origin, far, xi_o, xi_f) = if shared_is_b {
            (p.b, p.a, 1.0, 0.0)
        } else {
            (p.a, p.b, 0.0, 1.0)
        };
        let mut cells = Vec::with_capacity(depth as usize + 1);
        for k in 0..=depth {
            let (lo, hi) = if k < depth {
                (0.5f64.powi(k as i32 + 1), 0.5f64.powi(k as i32))
            } else {
                (0.0, 0.5f64.powi(depth as i32))
            };
            cells.push(Cell {
                p0: origin + lo * (far - origin),
                p1: origin + hi * (far - origin),
                xi0: xi_o + lo * (xi_f - xi_o),
                xi1: xi_o + hi * (xi_f - xi_o),
            });
        }
        cells
    };

    let cells_i = graded(pi, shared_i_is_b);
    let cells_j = graded(pj, shared_j_is_b);
    let mut out = PairMoments::default();
    for ci in &cells_i {
        for cj in &cells_j {
            if mu * cell_gap(ci, cj) > KERNEL_CUTOFF {
                continue;
            }
            // Gauss-12: the double-layer kernel varies faster across
            // neighboring graded rings than the log kernel does.
            accumulate_cell_pair(&rules.gl12, ci, cj, pi.normal, pj.normal, mu, &mut out);
        }
    }
    out
}

/// Disjoint pair: plain tensor Gauss when well separated, recursive
/// bisection of both panels when the gap is small relative to panel size.
fn disjoint_moments_rec(
    rules: &AssemblyRules,
    ci: &Cell,
    cj: &Cell,
    ni: Vec2,
    nj: Vec2,
    mu: f64,
    depth: u32,
    out: &mut PairMoments,
) {
    let gap = cell_gap(ci, cj);
    if mu * gap > KERNEL_CUTOFF {
        return;
    }
    if depth >= 3 || gap >= 0.8 * ci.len().max(cj.len()) {
        accumulate_cell_pair(&rules.gl8, ci, cj, ni, nj, mu, out);
        return;
    }
    let (i0, i1) = ci.split();
    let (j0, j1) = cj.split();
    for a in [&i0, &i1] {
        for b in [&j0, &j1] {
            disjoint_moments_rec(rules, a, b, ni, nj, mu, depth + 1, out);
        }
    }
}

fn pair_moments(
    rules: &AssemblyRules,
    pi: &Panel,
    pj: &Panel,
    geom: PairGeom,
    mu: f64,
) -> PairMoments {
    match geom {
        PairGeom::Coincident => coincident_moments(rules, pi.len, mu),
        PairGeom::Adjacent {
            shared_i_is_b,
            shared_j_is_b,
        } => {
            let ti = (pi.b - pi.a) / pi.len;
            let tj = (pj.b - pj.a) / pj.len;
            let cross = ti.x * tj.y - ti.y * tj.x;
            if cross.abs() < 1e-12 && ti.dot(&tj) > 0.0 {
                colinear_adjacent_moments(rules, pi, pj, shared_i_is_b, shared_j_is_b, mu)
            } else {
                adjacent_moments(rules, pi, pj, shared_i_is_b, shared_j_is_b, mu)
            }
        }
        PairGeom::Disjoint => {
            let mut out = PairMoments::default();
            let (ci, cj) = (Cell::whole(pi), Cell::whole(pj));
            let gap = cell_gap(&ci, &cj);
            let size = pi.len.max(pj.len);
            if gap >= 1.2 * size {
                // Separated pair: one tensor rule whose order follows the
                // separation ratio and the kernel's decay scale.
                let base = if gap >= 10.0 * size {
                    2
                } else if gap >= 3.0 * size {
                    3
                } else {
                    6
                };
                let order = (base + (mu * size / 3.0) as usize).min(8);
                accumulate_cell_pair(
                    rules.pick(order),
                    &ci,
                    &cj,
                    pi.normal,
                    pj.normal,
                    mu,
                    &mut out,
                );
            } else {
                disjoint_moments_rec(rules, &ci, &cj, pi.normal, pj.normal, mu, 0, &mut out);
            }
            out
        }
    }
}

/// Assembles all Galerkin boundary operators at wavenumber `mu`.
///
/// Moments of each unordered panel pair are computed once (rows in
/// parallel) and scattered into V, K, and the normal-product block of W;
/// W itself is then formed through the Maue identity. V and W are exactly
/// symmetric by construction.
pub fn assemble_operators(mesh: &BoundaryMesh, mu: f64) -> Result<BemOperators> {
    KernelSpec::new(mu, 2)?;
    let n = mesh.segment_count();
    let rules = AssemblyRules::new()?;
    let panels: Vec<Panel> = (0..n)
        .map(|k| Panel {
            a: mesh.segment_start(k),
            b: mesh.segment_end(k),
            len: mesh.lengths[k],
            normal: mesh.normals[k],
        })
        .collect();

    // Upper-triangle rows of pair moments; far pairs skipped entirely.
    let rows: Vec<Vec<(usize, PairMoments)>> = map_indexed(n, |i| {
        let mut row = Vec::new();
        for j in i..n {
            let geom = if j == i {
                PairGeom::Coincident
            } else if j == i + 1 {
                PairGeom::Adjacent {
                    shared_i_is_b: true,
                    shared_j_is_b: false,
                }
            } else if i == 0 && j == n - 1 {
                PairGeom::Adjacent {
                    shared_i_is_b: false,
                    shared_j_is_b: true,
                }
            } else {
                PairGeom::Disjoint
            };
            if let PairGeom::Disjoint = geom {
                let gap = (mesh.midpoints[i] - mesh.midpoints[j]).norm()
                    - 0.5 * (panels[i].len + panels[j].len);
                if mu * gap.max(0.0) > KERNEL_CUTOFF {
                    continue;
                }
            }
            row.push((j, pair_moments(&rules, &panels[i], &panels[j], geom, mu)));
        }
        row
    });

    let mut v = DMatrix::zeros(n, n);
    let mut k = DMatrix::zeros(n, n);
    let mut wn = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let gi = [i, (i + 1) % n];
        for &(j, ref mm) in row {
            let gj = [j, (j + 1) % n];
            let vij: f64 = mm.m.iter().flatten().sum();
            v[(i, j)] = vij;
            let nn = mesh.normals[i].dot(&mesh.normals[j]);
            for a in 0..2 {
                for b in 0..2 {
                    wn[(gi[a], gj[b])] += nn * mm.m[a][b];
                }
            }
            if j != i {
                v[(j, i)] = vij;
                for a in 0..2 {
                    for b in 0..2 {
                        wn[(gj[b], gi[a])] += nn * mm.m[a][b];
                    }
                }
                for b in 0..2 {
                    k[(i, gj[b])] += mm.d_trial[b];
                }
                for a in 0..2 {
                    k[(j, gi[a])] += mm.d_test[a];
                }
            }
        }
    }

    // Maue identity: W = D^t V D + mu^2 N, with D the arc-length
    // differentiation of the vertex space into panel constants.
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        let (si, li) = ([i, (i + 1) % n], mesh.lengths[i]);
        let sgn = [-1.0 / li, 1.0 / li];
        for j in 0..n {
            let c = v[(i, j)];
            if c == 0.0 {
                continue;
            }
            let (sj, lj) = ([j, (j + 1) % n], mesh.lengths[j]);
            let tgn = [-1.0 / lj, 1.0 / lj];
            for a in 0..2 {
                for b in 0..2 {
                    w[(si[a], sj[b])] += sgn[a] * tgn[b] * c;
                }
            }
        }
    }
    w += wn * (mu * mu);

    let mut mass = DMatrix::zeros(n, n);
    for i in 0..n {
        mass[(i, i)] += 0.5 * mesh.lengths[i];
        mass[(i, (i + 1) % n)] += 0.5 * mesh.lengths[i];
    }

    Ok(BemOperators { mu, v, k, w, mass })
}

/// Evaluates the representation `u(x) = (V~ single)(x) - (K~ double)(x)`
/// at a point off the boundary: single layer with piecewise-constant
/// density, double layer with piecewise-linear density in vertex values.
///
/// Near-boundary evaluation bisects panels until cells are smaller than
/// their distance to `x`; points on the boundary are rejected.
pub fn eval_potentials(
    mesh: &BoundaryMesh,
    mu: f64,
    single: &DVector<f64>,
    double: &DVector<f64>,
    x: Vec2,
) -> Result<f64> {
    KernelSpec::new(mu, 2)?;
    let n = mesh.segment_count();
    if single.len() != n || double.len() != n {
        return Err(FracError::Domain(format!(
            "density lengths {} / {} do not match segment count {n}",
            single.len(),
            double.len()
        )));
    }
    let rule = gauss_legendre(8)?.mapped_to(0.0, 1.0);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut total = 0.0;
    for i in 0..n {
        let a = mesh.segment_start(i);
        let b = mesh.segment_end(i);
        let ab = b - a;
        let len = mesh.lengths[i];
        let t = ((x - a).dot(&ab) / (len * len)).clamp(0.0, 1.0);
        let dist = (x - (a + t * ab)).norm();
        if dist < 1e-10 * len {
            return Err(FracError::Evaluation(format!(
                "evaluation point ({}, {}) lies on the boundary",
                x.x, x.y
            )));
        }
        if mu * dist > KERNEL_CUTOFF {
            continue;
        }
        let lam = single[i];
        let (phi0, phi1) = (double[i], double[(i + 1) % n]);
        let ni = mesh.normals[i];
        // Bisect until cell length is below its distance to x.
        let mut stack = vec![(0.0f64, 1.0f64)];
        while let Some((x0, x1)) = stack.pop() {
            let clen = len * (x1 - x0);
            let c0 = a + x0 * ab;
            let cm = a + 0.5 * (x0 + x1) * ab;
            let cdist = ((x - cm).norm() - 0.5 * clen).max((x - c0).norm().min(1e300));
            let cdist = cdist.min((x - cm).norm());
            if clen > cdist && clen > 1e-9 * len {
                let xm = 0.5 * (x0 + x1);
                stack.push((x0, xm));
                stack.push((xm, x1));
                continue;
            }
            for (&g, &wq) in rule.nodes.iter().zip(&rule.weights) {
                let xi = x0 + g * (x1 - x0);
                let y = a + xi * ab;
                let diff = x - y;
                let r = diff.norm();
                let z = mu * r;
                if z > KERNEL_CUTOFF {
                    continue;
                }
                let (k0v, k1v) = k0_k1(z);
                let wt = wq * clen;
                total += wt * lam * k0v / two_pi;
                let dl = mu * k1v * diff.dot(&ni) / (two_pi * r);
                total -= wt * dl * (phi0 * (1.0 - xi) + phi1 * xi);
            }
        }
    }
    Ok(total)
}

//! Problem definition: fractional parameters and derived constants, the
//! diffusion coefficient field, source terms, and the polygonal domain.
//!
//! The solver dimension is fixed to two, so the reaction coefficient `s`
//! must be strictly positive (it keeps every modal wavenumber away from
//! zero, which the two-dimensional Yukawa kernel requires).

use crate::error::{FracError, Result};
use crate::specfun::log_gamma;
use crate::Vec2;
use nalgebra::Matrix2;
use std::sync::Arc;

/// Fractional power data: `beta`, the reaction coefficient `s`, and the
/// derived quantities `alpha = 1 - 2 beta` (the extension weight exponent)
/// and `d_beta = 2^{1-2 beta} Gamma(1-beta)/Gamma(beta)` (the normalization
/// constant of the Dirichlet-to-Neumann map of the extension).
#[derive(Clone, Copy, Debug)]
pub struct FracParams {
    pub beta: f64,
    pub s: f64,
    pub alpha: f64,
    pub d_beta: f64,
}

impl FracParams {
    /// Validates `0 < beta < 1` and `s > 0` and fills in the derived
    /// constants.
    pub fn new(beta: f64, s: f64) -> Result<FracParams> {
        let (alpha, d_beta) = derive_constants(beta)?;
        if !(s > 0.0) {
            return Err(FracError::Domain(format!(
                "reaction coefficient s = {s} must be positive for the planar solver"
            )));
        }
        Ok(FracParams {
            beta,
            s,
            alpha,
            d_beta,
        })
    }
}

/// Computes `(alpha, d_beta)` from the fractional power.
///
/// `alpha = 1 - 2 beta` and `d_beta = 2^{1-2 beta} Gamma(1-beta)/Gamma(beta)`,
/// the constant tying the weighted normal trace of the extension to the
/// fractional operator.
pub fn derive_constants(beta: f64) -> Result<(f64, f64)> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(FracError::Domain(format!(
            "fractional power beta = {beta} outside (0, 1)"
        )));
    }
    let alpha = 1.0 - 2.0 * beta;
    let d_beta = (alpha * std::f64::consts::LN_2 + log_gamma(1.0 - beta)? - log_gamma(beta)?).exp();
    Ok((alpha, d_beta))
}

/// Normalization constant of the Riesz kernel: the fundamental solution of
/// the free fractional Laplacian `(-Delta)^beta` in `R^d` is
/// `C_{d,beta} |x|^{2 beta - d}` with
/// `C_{d,beta} = Gamma(d/2 - beta) / (2^{2 beta} pi^{d/2} Gamma(beta))`.
///
/// Requires `0 < beta < d/2`; the formula has a pole at `beta = d/2`.
pub fn riesz_constant(d: u32, beta: f64) -> Result<f64> {
    if d != 2 && d != 3 {
        return Err(FracError::Domain(format!("dimension {d} not in {{2,3}}")));
    }
    let half_d = 0.5 * d as f64;
    if !(beta > 0.0) {
        return Err(FracError::Domain(format!(
            "riesz_constant requires beta > 0, got {beta}"
        )));
    }
    if beta >= half_d - 1e-14 {
        return Err(FracError::Domain(format!(
            "riesz_constant has a pole at beta = d/2; got d = {d}, beta = {beta}"
        )));
    }
    let log_c = log_gamma(half_d - beta)?
        - 2.0 * beta * std::f64::consts::LN_2
        - half_d * std::f64::consts::PI.ln()
        - log_gamma(beta)?;
    Ok(log_c.exp())
}

/// Symmetric, uniformly elliptic diffusion coefficient on the plane,
/// identically the identity outside a stated radius.
#[derive(Clone)]
pub struct CoefficientField {
    eval: Arc<dyn Fn(Vec2) -> Matrix2<f64> + Send + Sync>,
    /// Beyond this distance from the origin the field is the identity.
    pub support_radius: f64,
    /// Lower bound on the smallest eigenvalue of the matrix, everywhere.
    pub ellipticity: f64,
}

impl std::fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientField")
            .field("support_radius", &self.support_radius)
            .field("ellipticity", &self.ellipticity)
            .finish_non_exhaustive()
    }
}

impl CoefficientField {
    /// Wraps an evaluation map together with its ellipticity constant.
    /// The constant is the caller's claim; [`Self::spot_check`] samples it.
    pub fn new(
        eval: impl Fn(Vec2) -> Matrix2<f64> + Send + Sync + 'static,
        support_radius: f64,
        ellipticity: f64,
    ) -> Result<CoefficientField> {
        if !(ellipticity > 0.0) {
            return Err(FracError::Coercivity(format!(
                "ellipticity constant {ellipticity} must be positive"
            )));
        }
        if !(support_radius >= 0.0) {
            return Err(FracError::Domain(format!(
                "support radius {support_radius} must be nonnegative"
            )));
        }
        Ok(CoefficientField {
            eval: Arc::new(eval),
            support_radius,
            ellipticity,
        })
    }

    /// The constant identity field.
    pub fn identity() -> CoefficientField {
        CoefficientField {
            eval: Arc::new(|_| Matrix2::identity()),
            support_radius: 0.0,
            ellipticity: 1.0,
        }
    }

    /// The bundled variable-coefficient example
    /// `A(x) = (1 + |x|(1 - |x|)) I` inside the unit disk, `I` outside.
    /// Continuous across `|x| = 1`; smallest eigenvalue 1, largest 5/4.
    pub fn radial_example() -> CoefficientField {
        CoefficientField {
            eval: Arc::new(|x: Vec2| {
                let r = x.norm();
                let a = if r < 1.0 { 1.0 + r * (1.0 - r) } else { 1.0 };
                Matrix2::identity() * a
            }),
            support_radius: 1.0,
            ellipticity: 1.0,
        }
    }

    pub fn evaluate(&self, x: Vec2) -> Matrix2<f64> {
        (self.eval)(x)
    }

    /// Samples the field on a deterministic low-discrepancy point set of
    /// size `samples` covering `[-radius, radius]^2` and verifies symmetry,
    /// the claimed ellipticity bound, and identity behavior outside the
    /// support radius.
    pub fn spot_check(&self, radius: f64, samples: usize) -> Result<()> {
        // Kronecker sequence driven by the plastic constant: reproducible
        // and better spread than pseudo-random draws.
        const G: f64 = 1.324_717_957_244_746;
        let (a1, a2) = (1.0 / G, 1.0 / (G * G));
        for k in 0..samples {
            let kf = k as f64 + 0.5;
            let x = Vec2::new(
                ((a1 * kf).fract() * 2.0 - 1.0) * radius,
                ((a2 * kf).fract() * 2.0 - 1.0) * radius,
            );
            let m = self.evaluate(x);
            if (m[(0, 1)] - m[(1, 0)]).abs() > 1e-12 * m.norm().max(1.0) {
                return Err(FracError::Coercivity(format!(
                    "coefficient matrix not symmetric at ({}, {})",
                    x.x, x.y
                )));
            }
            // Smallest eigenvalue of a symmetric 2x2 matrix.
            let half_tr = 0.5 * (m[(0, 0)] + m[(1, 1)]);
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let lam_min = half_tr - (half_tr * half_tr - det).max(0.0).sqrt();
            if lam_min < self.ellipticity * (1.0 - 1e-12) - 1e-14 {
                return Err(FracError::Coercivity(format!(
                    "smallest eigenvalue {lam_min} below claimed ellipticity {} at ({}, {})",
                    self.ellipticity, x.x, x.y
                )));
            }
            if x.norm() > self.support_radius && (m - Matrix2::identity()).norm() > 1e-12 {
                return Err(FracError::Coercivity(format!(
                    "field differs from the identity outside its support radius at ({}, {})",
                    x.x, x.y
                )));
            }
        }
        Ok(())
    }
}

/// Source term `f` with compact support inside the computational domain.
#[derive(Clone)]
pub struct SourceTerm {
    eval: Arc<dyn Fn(Vec2) -> f64 + Send + Sync>,
    /// Support is contained in the centered ball of this radius.
    pub support_radius: f64,
}

impl std::fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SourceTerm")
            .field("support_radius", &self.support_radius)
            .finish_non_exhaustive()
    }
}

impl SourceTerm {
    pub fn new(
        eval: impl Fn(Vec2) -> f64 + Send + Sync + 'static,
        support_radius: f64,
    ) -> SourceTerm {
        SourceTerm {
            eval: Arc::new(eval),
            support_radius,
        }
    }

    /// Polynomial bump `f(x) = (1 - |x|^2)^2` on the unit disk, zero
    /// outside. C^1 across the support boundary; total mass `pi/3`.
    pub fn bump() -> SourceTerm {
        SourceTerm::new(
            |x: Vec2| {
                let r2 = x.norm_squared();
                if r2 < 1.0 {
                    let t = 1.0 - r2;
                    t * t
                } else {
                    0.0
                }
            },
            1.0,
        )
    }

    /// Radial hat `f(x) = |x|(1 - |x|)` on the unit disk, zero outside.
    /// Continuous, kink at the origin; total mass `pi/6`.
    pub fn radial_hat() -> SourceTerm {
        SourceTerm::new(
            |x: Vec2| {
                let r = x.norm();
                if r < 1.0 {
                    r * (1.0 - r)
                } else {
                    0.0
                }
            },
            1.0,
        )
    }

    pub fn evaluate(&self, x: Vec2) -> f64 {
        (self.eval)(x)
    }
}

/// Bounded polygonal domain, counterclockwise, simple and closed.
#[derive(Clone, Debug)]
pub struct DomainSpec {
    /// Vertices in counterclockwise order; the closing edge from the last
    /// vertex back to the first is implicit.
    pub vertices: Vec<Vec2>,
}

impl DomainSpec {
    /// Validates vertex count, orientation (positive signed area), and
    /// simplicity (no two non-adjacent edges intersect).
    pub fn new(vertices: Vec<Vec2>) -> Result<DomainSpec> {
        if vertices.len() < 3 {
            return Err(FracError::Domain(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        for v in &vertices {
            if !(v.x.is_finite() && v.y.is_finite()) {
                return Err(FracError::Domain("polygon vertex not finite".into()));
            }
        }
        let spec = DomainSpec { vertices };
        let area = spec.signed_area();
        if !(area > 0.0) {
            return Err(FracError::Domain(format!(
                "polygon signed area {area} not positive; vertices must run counterclockwise"
            )));
        }
        let n = spec.vertices.len();
        for i in 0..n {
            for j in (i + 1)..n {
                // Skip the pair if the edges are adjacent (share a vertex).
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                let (a, b) = spec.edge(i);
                let (c, d) = spec.edge(j);
                if segments_intersect(a, b, c, d) {
                    return Err(FracError::Domain(format!(
                        "polygon self-intersects: edges {i} and {j} cross"
                    )));
                }
            }
        }
        Ok(spec)
    }

    /// Centered axis-aligned square `[-side/2, side/2]^2`.
    pub fn square(side: f64) -> Result<DomainSpec> {
        if !(side > 0.0) {
            return Err(FracError::Domain(format!(
                "square side {side} must be positive"
            )));
        }
        let h = 0.5 * side;
        DomainSpec::new(vec![
            Vec2::new(-h, -h),
            Vec2::new(h, -h),
            Vec2::new(h, h),
            Vec2::new(-h, h),
        ])
    }

    /// Reads a polygon from plain text: one `x y` pair per line,
    /// counterclockwise; blank lines and `#` comments are skipped.
    pub fn from_vertex_file(path: &std::path::Path) -> Result<DomainSpec> {
        let text = std::fs::read_to_string(path)?;
        let mut vertices = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<f64> {
                tok.ok_or_else(|| {
                    FracError::Config(format!("vertex file line {}: expected two numbers", lineno + 1))
                })?
                .parse::<f64>()
                .map_err(|e| {
                    FracError::Config(format!("vertex file line {}: {e}", lineno + 1))
                })
            };
            let x = parse(it.next())?;
            let y = parse(it.next())?;
            if it.next().is_some() {
                return Err(FracError::Config(format!(
                    "vertex file line {}: trailing tokens",
                    lineno + 1
                )));
            }
            vertices.push(Vec2::new(x, y));
        }
        DomainSpec::new(vertices)
    }

    /// Edge `i` as an ordered vertex pair.
    pub fn edge(&self, i: usize) -> (Vec2, Vec2) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    /// Unit outward normal of edge `i` (counterclockwise polygon: rotate
    /// the edge direction clockwise).
    pub fn edge_normal(&self, i: usize) -> Vec2 {
        let (a, b) = self.edge(i);
        let t = b - a;
        Vec2::new(t.y, -t.x) / t.norm()
    }

    /// Shoelace signed area; positive for counterclockwise orientation.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            acc += a.x * b.y - b.x * a.y;
        }
        0.5 * acc
    }

    /// Point-in-polygon by crossing count (points on the boundary may
    /// report either way; callers never rely on boundary classification).
    pub fn contains(&self, p: Vec2) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Proper or touching intersection test for closed segments `ab` and `cd`.
fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let orient = |p: Vec2, q: Vec2, r: Vec2| -> f64 {
        (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x)
    };
    let on_segment = |p: Vec2, q: Vec2, r: Vec2| -> bool {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a, b, c))
        || (d2 == 0.0 && on_segment(a, b, d))
        || (d3 == 0.0 && on_segment(c, d, a))
        || (d4 == 0.0 && on_segment(c, d, b))
}

//! Extended-variable discretization: the geometrically graded grid on
//! `[0, Y]`, the `C^0` hp space of uniform degree `p`, the `y^alpha`
//! weighted stiffness/mass pair, and its generalized eigen-decomposition.
//!
//! The decomposition turns the truncated extension problem into decoupled
//! planar reaction-diffusion problems: eigenvalues `mu_j` become modal
//! reaction coefficients and the traces `phi_j(0)` weight the modal loads
//! and the reassembled boundary value.

use crate::error::{FracError, Result};
use crate::quad::{gauss_jacobi, gauss_legendre};
use nalgebra::{DMatrix, DVector};

/// Geometrically graded grid on `[0, Y]`: refined toward `0` where the
/// extension solution loses regularity, growing geometrically toward `Y`.
///
/// Interior points are the powers `sigma^{L-l}` for `l = 0..=(L+M)`; the
/// first element is `(0, sigma^L)` and `M` is the largest integer with
/// `sigma^{-M} <= Y`. The endpoint `Y` is appended, merging with the last
/// power when they coincide.
#[derive(Clone, Debug)]
pub struct GeometricGridY {
    /// Strictly increasing; starts at 0, ends at `Y`.
    pub points: Vec<f64>,
    /// Grading factor in (0, 1).
    pub sigma: f64,
    /// Refinement layers toward 0.
    pub refine_layers: usize,
    /// Growth levels toward `Y`.
    pub growth_levels: usize,
}

impl GeometricGridY {
    pub fn y_max(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn element_count(&self) -> usize {
        self.points.len() - 1
    }

    /// Element `e` as `(left, right)`.
    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.points[e], self.points[e + 1])
    }
}

/// Builds the graded grid for grading factor `sigma`, `l` refinement layers
/// and truncation height `y_max > 1`.
pub fn build_geometric_grid(sigma: f64, l: usize, y_max: f64) -> Result<GeometricGridY> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(FracError::Domain(format!(
            "grading factor sigma = {sigma} outside (0, 1)"
        )));
    }
    if l < 1 {
        return Err(FracError::Domain("need at least one refinement layer".into()));
    }
    if !(y_max > 1.0) {
        return Err(FracError::Domain(format!(
            "truncation height Y = {y_max} must exceed 1"
        )));
    }
    if y_max <= sigma.powi(l as i32 - 1) {
        return Err(FracError::Mesh(format!(
            "degenerate grid: Y = {y_max} inside the refinement region"
        )));
    }
    // Largest m with sigma^{-m} <= Y, stepped multiplicatively to dodge the
    // floating-point fragility of floor(ln Y / ln(1/sigma)).
    let mut m = 0usize;
    let mut top = 1.0f64;
    while top / sigma <= y_max * (1.0 + 1e-12) {
        top /= sigma;
        m += 1;
    }
    let mut points = Vec::with_capacity(l + m + 3);
    points.push(0.0);
    for ell in 0..=(l + m) {
        points.push(sigma.powi(l as i32 - ell as i32));
    }
    let last = *points.last().unwrap();
    if (y_max - last).abs() <= 1e-12 * y_max {
        *points.last_mut().unwrap() = y_max;
    } else {
        points.push(y_max);
    }
    Ok(GeometricGridY {
        points,
        sigma,
        refine_layers: l,
        growth_levels: m,
    })
}

/// Continuous piecewise-polynomial space of uniform degree `p` on a graded
/// grid: nodal hats at the grid points plus `p - 1` integrated-Legendre
/// bubbles per element. Dimension `E p + 1` for `E` elements.
///
/// Global ordering: grid-point dofs `0..=E` first (dof 0 sits at `y = 0`),
/// then bubbles element by element in increasing degree. Bubble `k` on the
/// reference element is `(P_k - P_{k-2})/(2k - 1)`, whose derivative is the
/// Legendre polynomial `P_{k-1}`; it vanishes at both endpoints, so the
/// trace at `y = 0` of any member is its dof-0 coefficient.
#[derive(Clone, Debug)]
pub struct HpSpaceY {
    pub grid: GeometricGridY,
    pub degree: usize,
}

impl HpSpaceY {
    pub fn new(grid: GeometricGridY, degree: usize) -> Result<HpSpaceY> {
        if degree < 1 {
            return Err(FracError::Domain("polynomial degree must be >= 1".into()));
        }
        if degree > 60 {
            return Err(FracError::Domain(format!(
                "polynomial degree {degree} exceeds the supported maximum 60"
            )));
        }
        Ok(HpSpaceY { grid, degree })
    }

    pub fn dim(&self) -> usize {
        self.grid.element_count() * self.degree + 1
    }

    /// Global dof index of local shape `k` on element `e` (local 0/1 are
    /// the left/right endpoint hats, local `k >= 2` the degree-`k` bubble).
    fn global_dof(&self, e: usize, k: usize) -> usize {
        let n_nodes = self.grid.element_count() + 1;
        match k {
            0 => e,
            1 => e + 1,
            _ => n_nodes + e * (self.degree - 1) + (k - 2),
        }
    }

    /// All shape values and reference derivatives at reference coordinate
    /// `xi` in `[-1, 1]`.
    fn shapes(&self, xi: f64) -> (Vec<f64>, Vec<f64>) {
        let p = self.degree;
        let mut vals = vec![0.0; p + 1];
        let mut ders = vec![0.0; p + 1];
        vals[0] = 0.5 * (1.0 - xi);
        ders[0] = -0.5;
        vals[1] = 0.5 * (1.0 + xi);
        ders[1] = 0.5;
        if p >= 2 {
            // Legendre values P_0..P_p by recurrence.
            let mut leg = vec![0.0; p + 1];
            leg[0] = 1.0;
            leg[1] = xi;
            for k in 1..p {
                let kf = k as f64;
                leg[k + 1] = ((2.0 * kf + 1.0) * xi * leg[k] - kf * leg[k - 1]) / (kf + 1.0);
            }
            for k in 2..=p {
                vals[k] = (leg[k] - leg[k - 2]) / (2.0 * k as f64 - 1.0);
                ders[k] = leg[k - 1];
            }
        }
        (vals, ders)
    }
}

/// Assembles the `y^alpha`-weighted stiffness `A` (with the reaction term
/// `s` added at the `y = 0` node) and mass `B` of the hp space:
///
/// `A_ij = int_0^Y y^alpha phi_i' phi_j' dy + s phi_i(0) phi_j(0)`,
/// `B_ij = int_0^Y y^alpha phi_i phi_j dy`.
///
/// The first element carries the weight exactly via a Gauss-Jacobi rule;
/// away from `y = 0` the weight is smooth and folded into Gauss-Legendre
/// weights. Both integrations are exact for the polynomial integrands.
pub fn assemble_y_matrices(
    space: &HpSpaceY,
    alpha: f64,
    s: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(FracError::Domain(format!(
            "weight exponent alpha = {alpha} outside (-1, 1)"
        )));
    }
    if !(s >= 0.0) {
        return Err(FracError::Domain(format!("reaction s = {s} negative")));
    }
    let p = space.degree;
    let n = space.dim();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    let n_q = p + 2;
    let gauss = gauss_legendre(n_q)?;
    for e in 0..space.grid.element_count() {
        let (ya, yb) = space.grid.element(e);
        let h = yb - ya;
        // Quadrature in physical coordinates with the weight y^alpha
        // already folded into the weights.
        let (nodes, weights): (Vec<f64>, Vec<f64>) = if e == 0 {
            let rule = gauss_jacobi(n_q, alpha, h)?;
            (rule.nodes, rule.weights)
        } else {
            let mapped = gauss.mapped_to(ya, yb);
            let w = mapped
                .nodes
                .iter()
                .zip(&mapped.weights)
                .map(|(&y, &w)| w * y.powf(alpha))
                .collect();
            (mapped.nodes, w)
        };
        let mut loc_a: DMatrix<f64> = DMatrix::zeros(p + 1, p + 1);
        let mut loc_b: DMatrix<f64> = DMatrix::zeros(p + 1, p + 1);
        for (&y, &w) in nodes.iter().zip(&weights) {
            let xi = 2.0 * (y - ya) / h - 1.0;
            let (vals, ders) = space.shapes(xi);
            let dscale = 2.0 / h;
            for i in 0..=p {
                for j in 0..=p {
                    loc_a[(i, j)] += w * ders[i] * ders[j] * dscale * dscale;
                    loc_b[(i, j)] += w * vals[i] * vals[j];
                }
            }
        }
        for i in 0..=p {
            let gi = space.global_dof(e, i);
            for j in 0..=p {
                let gj = space.global_dof(e, j);
                a[(gi, gj)] += loc_a[(i, j)];
                b[(gi, gj)] += loc_b[(i, j)];
            }
        }
    }
    a[(0, 0)] += s;
    Ok((a, b))
}

/// The full generalized eigenbasis of `(A, B)`: modal reaction coefficients
/// `mu_j` (ascending), eigenvector coefficients, and their `y = 0` traces.
/// `B`-orthonormal by construction.
#[derive(Clone, Debug)]
pub struct ModalBasis {
    pub space: HpSpaceY,
    /// Generalized eigenvalues, ascending; strictly positive when `s > 0`.
    pub eigenvalues: Vec<f64>,
    /// `phi_j(0)` per mode.
    pub trace_values: Vec<f64>,
    /// Eigenvector coefficients in the hp nodal/bubble basis.
    pub coefficients: Vec<DVector<f64>>,
    /// Lower Cholesky factor of the weighted mass matrix, retained for
    /// residual checks and weighted projections.
    pub mass_factor: DMatrix<f64>,
}

impl ModalBasis {
    pub fn mode_count(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Solves the generalized symmetric eigenproblem `A phi = mu B phi` by
/// Cholesky reduction of `B` to a standard symmetric problem, returning
/// every pair `(mu_j, phi_j)` sorted by eigenvalue.
pub fn modal_decomposition(
    space: &HpSpaceY,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    s: f64,
) -> Result<ModalBasis> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n || n != space.dim() {
        return Err(FracError::Domain(
            "matrix dimensions do not match the hp space".into(),
        ));
    }
    let chol = b.clone().cholesky().ok_or_else(|| {
        FracError::Solver("weighted mass matrix is not positive definite; grid ill-conditioned".into())
    })?;
    let lower = chol.l();
    // C = L^{-1} A L^{-T}, the standard-form symmetric matrix.
    let mut c = lower
        .solve_lower_triangular(a)
        .ok_or_else(|| FracError::Solver("singular mass factor".into()))?;
    c.transpose_mut();
    let mut c = lower
        .solve_lower_triangular(&c)
        .ok_or_else(|| FracError::Solver("singular mass factor".into()))?;
    // Symmetrize to scrub the round-off skew before the eigensolve.
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = avg;
            c[(j, i)] = avg;
        }
    }
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let upper = lower.transpose();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut trace_values = Vec::with_capacity(n);
    let mut coefficients = Vec::with_capacity(n);
    for &k in &order {
        let q = eig.eigenvectors.column(k).into_owned();
        let phi = upper
            .solve_upper_triangular(&q)
            .ok_or_else(|| FracError::Solver("singular mass factor".into()))?;
        eigenvalues.push(eig.eigenvalues[k]);
        trace_values.push(phi[0]);
        coefficients.push(phi);
    }
    if s > 0.0 && eigenvalues[0] <= 0.0 {
        return Err(FracError::Coercivity(format!(
            "s = {s} > 0 but smallest modal eigenvalue is {}; decomposition breakdown",
            eigenvalues[0]
        )));
    }
    Ok(ModalBasis {
        space: space.clone(),
        eigenvalues,
        trace_values,
        coefficients,
        mass_factor: lower.into_owned(),
    })
}

/// Evaluates eigenfunction `phi_j` at `y` in `[0, Y]` by local polynomial
/// evaluation on the containing element. At `y = 0` this returns
/// `trace_values[j]` exactly.
pub fn eval_modal_basis(basis: &ModalBasis, j: usize, y: f64) -> Result<f64> {
    if j >= basis.mode_count() {
        return Err(FracError::Domain(format!(
            "mode index {j} out of range ({} modes)",
            basis.mode_count()
        )));
    }
    let grid = &basis.space.grid;
    let y_max = grid.y_max();
    if !(0.0..=y_max).contains(&y) {
        return Err(FracError::Domain(format!(
            "evaluation point y = {y} outside [0, {y_max}]"
        )));
    }
    // Containing element; the right endpoint belongs to the last element.
    let e = grid
        .points
        .partition_point(|&x| x <= y)
        .saturating_sub(1)
        .min(grid.element_count() - 1);
    let (ya, yb) = grid.element(e);
    let xi = 2.0 * (y - ya) / (yb - ya) - 1.0;
    let (vals, _) = basis.space.shapes(xi);
    let coeff = &basis.coefficients[j];
    let mut acc = 0.0;
    for (k, v) in vals.iter().enumerate() {
        acc += v * coeff[basis.space.global_dof(e, k)];
    }
    Ok(acc)
}

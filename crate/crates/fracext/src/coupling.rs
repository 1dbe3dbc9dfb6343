//! Symmetric FEM-BEM coupling for the modal reaction-diffusion problems.
//!
//! Each mode solves `-div(A grad u) + mu u = c f` on the whole plane, with
//! the source supported inside the polygonal domain carrying the finite
//! element mesh. The exterior is represented exactly through boundary
//! integral operators of the Yukawa kernel at wavenumber `sqrt(mu)`,
//! coupled in Costabel's symmetric one-equation form: the hypersingular
//! operator stiffens the interior block, the single layer equation closes
//! the system for the exterior flux density. After negating the flux
//! equation the full two-by-two block matrix is symmetric, and eliminating
//! the flux yields a symmetric positive definite Schur complement in the
//! interior unknowns.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::bem::{assemble_operators, build_boundary_mesh, eval_potentials, BemOperators, BoundaryMesh};
use crate::error::{FracError, Result};
use crate::fem::{
    assemble_load, assemble_stiffness_mass, boundary_trace_map, P1Space, SparseSymmetric, TraceMap,
    TriMesh,
};
use crate::params::{CoefficientField, FracParams, SourceTerm};
use crate::ydisc::{eval_modal_basis, ModalBasis};
use crate::{map_indexed, Vec2};

/// Planar discretization shared by every modal solve.
///
/// The trace map and the boundary panel mesh both follow the mesh's
/// boundary loop, so boundary dof `k` of the P1 trace sits at the start
/// point of panel `k`. All boundary-operator index arithmetic relies on
/// that alignment.
pub struct CoupledMeshes {
    pub space: P1Space,
    pub trace: TraceMap,
    pub boundary: BoundaryMesh,
}

impl CoupledMeshes {
    pub fn new(mesh: TriMesh) -> Result<CoupledMeshes> {
        let boundary = build_boundary_mesh(&mesh)?;
        let space = P1Space::new(mesh);
        let trace = boundary_trace_map(&space);
        Ok(CoupledMeshes {
            space,
            trace,
            boundary,
        })
    }
}

/// Mode-independent planar assembly: the second-order form, the mass form,
/// and the load vector of `f` at unit scale.
pub struct LevelAssembly {
    pub stiffness: SparseSymmetric,
    pub mass: SparseSymmetric,
    pub load: DVector<f64>,
}

/// Assembles the matrices and load shared by all modes on one mesh level.
pub fn assemble_level(
    space: &P1Space,
    coef: &CoefficientField,
    source: &SourceTerm,
) -> Result<LevelAssembly> {
    let (stiffness, mass) = assemble_stiffness_mass(space, coef)?;
    let load = assemble_load(space, source, 1.0);
    Ok(LevelAssembly {
        stiffness,
        mass,
        load,
    })
}

/// Linear system of a single modal problem.
pub struct ModeProblem {
    pub mode: usize,
    /// Reaction coefficient `mu_j`.
    pub mu: f64,
    /// Interior block `K_A + mu M`.
    pub fem: SparseSymmetric,
    /// Boundary operators at wavenumber `sqrt(mu)`.
    pub ops: BemOperators,
    /// Load scaled by the modal source factor.
    pub rhs: DVector<f64>,
}

/// Builds the coupled system of mode `mode` with reaction coefficient `mu`
/// and right-hand side `rhs_scale * f`.
pub fn assemble_mode_system(
    mode: usize,
    mu: f64,
    rhs_scale: f64,
    level: &LevelAssembly,
    meshes: &CoupledMeshes,
) -> Result<ModeProblem> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(FracError::Coercivity(format!(
            "modal reaction coefficient must be positive and finite, got {mu}"
        )));
    }
    let fem = SparseSymmetric::linear_combination(&level.stiffness, 1.0, &level.mass, mu)?;
    let ops = assemble_operators(&meshes.boundary, mu.sqrt())?;
    let rhs = &level.load * rhs_scale;
    Ok(ModeProblem {
        mode,
        mu,
        fem,
        ops,
        rhs,
    })
}

/// Discrete solution of one modal problem.
pub struct ModeSolution {
    pub mode: usize,
    pub mu: f64,
    /// Interior P1 coefficients.
    pub u: DVector<f64>,
    /// Exterior flux density (piecewise constant on boundary panels).
    pub lambda: DVector<f64>,
}

/// Solves one modal problem by Schur elimination of the flux density.
///
/// The single layer matrix is factored once per mode; the interior Schur
/// complement, which is symmetric positive definite, is solved by
/// Jacobi-preconditioned conjugate gradients to relative residual 1e-12.
/// On return the residuals of both coupled equations are below
/// `1e-10 * (|rhs| + 1)`; a violation is reported as a solver error.
pub fn solve_mode(prob: &ModeProblem, meshes: &CoupledMeshes) -> Result<ModeSolution> {
    let n = prob.rhs.len();
    let m = prob.ops.v.nrows();
    let trace = &meshes.trace;
    if trace.full_dim != n || trace.boundary_dim() != m {
        return Err(FracError::Domain(
            "mode system dimensions do not match the mesh pair".into(),
        ));
    }
    let rhs_norm = prob.rhs.norm();
    if rhs_norm == 0.0 {
        return Ok(ModeSolution {
            mode: prob.mode,
            mu: prob.mu,
            u: DVector::zeros(n),
            lambda: DVector::zeros(m),
        });
    }
    let chol_v = Cholesky::new(prob.ops.v.clone()).ok_or_else(|| {
        FracError::Coercivity(format!(
            "single layer operator not positive definite at wavenumber {}",
            prob.mu.sqrt()
        ))
    })?;
    // b_mat = M_G / 2 - K, the jump-corrected double layer block.
    let b_mat = 0.5 * &prob.ops.mass - &prob.ops.k;

    // Jacobi diagonal of the Schur complement, without the dense
    // single-layer correction (that term is positive semidefinite, so the
    // truncated diagonal still preconditions an SPD operator).
    let mut diag = prob.fem.diag();
    for (k, &v) in trace.vertex_ids.iter().enumerate() {
        diag[v] += prob.ops.w[(k, k)];
    }
    for d in diag.iter_mut() {
        if !(*d > 0.0) {
            *d = 1.0;
        }
    }

    let apply = |x: &DVector<f64>| -> DVector<f64> {
        let tx = trace.apply(x);
        let mut bnd = &prob.ops.w * &tx;
        let vb = chol_v.solve(&(&b_mat * &tx));
        bnd += b_mat.tr_mul(&vb);
        let mut y = prob.fem.mul_vec(x);
        y += trace.apply_transpose(&bnd);
        y
    };

    let u = conjugate_gradient(apply, &diag, &prob.rhs, 1e-12, 200 + 4 * n)?;
    let tu = trace.apply(&u);
    let lambda = -chol_v.solve(&(&b_mat * &tu));

    // Residual invariant on both coupled equations.
    let bound = 1e-10 * (rhs_norm + 1.0);
    let mut r1 = prob.fem.mul_vec(&u) - &prob.rhs;
    r1 += trace.apply_transpose(&(&prob.ops.w * &tu - b_mat.tr_mul(&lambda)));
    let r2 = &b_mat * &tu + &prob.ops.v * &lambda;
    if r1.norm() > bound || r2.norm() > bound {
        return Err(FracError::Solver(format!(
            "coupled residuals {:.3e} / {:.3e} exceed bound {bound:.3e} for mode {}",
            r1.norm(),
            r2.norm(),
            prob.mode
        )));
    }
    Ok(ModeSolution {
        mode: prob.mode,
        mu: prob.mu,
        u,
        lambda,
    })
}

/// Jacobi-preconditioned conjugate gradients for an SPD operator given as
/// a matvec closure. Returns the iterate with relative residual below
/// `tol_rel`.
fn conjugate_gradient<F>(
    apply: F,
    diag: &DVector<f64>,
    rhs: &DVector<f64>,
    tol_rel: f64,
    max_iter: usize,
) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = rhs.len();
    let tol = tol_rel * rhs.norm();
    let mut x = DVector::zeros(n);
    let mut r = rhs.clone();
    let mut z = r.component_div(diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for _ in 0..max_iter {
        if r.norm() <= tol {
            return Ok(x);
        }
        let q = apply(&p);
        let pq = p.dot(&q);
        if !(pq > 0.0) {
            return Err(FracError::Coercivity(format!(
                "search direction curvature {pq:.3e} is not positive; operator is not SPD"
            )));
        }
        let alpha = rz / pq;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &q, 1.0);
        z = r.component_div(diag);
        let rz_next = r.dot(&z);
        let beta = rz_next / rz;
        rz = rz_next;
        p *= beta;
        p += &z;
    }
    if r.norm() <= tol {
        return Ok(x);
    }
    Err(FracError::Solver(format!(
        "conjugate gradients stalled at relative residual {:.3e} after {max_iter} iterations",
        r.norm() / rhs.norm()
    )))
}

/// Dense coupled block matrix with the flux equation negated, in which
/// form the system is symmetric:
///
/// ```text
/// [ K_A + mu M + T'WT   T'(K - M_G/2)' ] [U]   [ F]
/// [ (K - M_G/2) T       -V             ] [L] = [ 0]
/// ```
///
/// Intended for verification on small meshes; production solves go through
/// the Schur complement path in [`solve_mode`].
pub fn dense_coupled_matrix(prob: &ModeProblem, trace: &TraceMap) -> DMatrix<f64> {
    let n = trace.full_dim;
    let m = trace.boundary_dim();
    let mut big = DMatrix::zeros(n + m, n + m);
    big.view_mut((0, 0), (n, n)).copy_from(&prob.fem.to_dense());
    let c = &prob.ops.k - 0.5 * &prob.ops.mass;
    for k in 0..m {
        let vk = trace.vertex_ids[k];
        for l in 0..m {
            let vl = trace.vertex_ids[l];
            big[(vk, vl)] += prob.ops.w[(k, l)];
            big[(n + k, n + l)] -= prob.ops.v[(k, l)];
        }
        for i in 0..m {
            big[(vk, n + i)] += c[(i, k)];
            big[(n + i, vk)] += c[(i, k)];
        }
    }
    big
}

/// Discrete solution of the full fractional problem: one modal solve per
/// eigenpair of the extended-variable discretization.
pub struct ExtensionSolution {
    pub params: FracParams,
    pub basis: ModalBasis,
    pub meshes: CoupledMeshes,
    /// Load vector of `f` at unit scale; modal right-hand sides are its
    /// multiples.
    pub load: DVector<f64>,
    pub modes: Vec<ModeSolution>,
}

/// Solves the fractional problem on the given mesh and modal basis.
///
/// Modes are independent given the shared assembly, so they fan out over
/// the thread pool in parallel builds; results are gathered in mode order
/// either way, and each mode's solve is a pure function of its inputs, so
/// the output does not depend on execution order. A failure in mode `j`
/// is reported with that index attached.
pub fn solve_fractional(
    params: &FracParams,
    coef: &CoefficientField,
    source: &SourceTerm,
    mesh: TriMesh,
    basis: ModalBasis,
) -> Result<ExtensionSolution> {
    let meshes = CoupledMeshes::new(mesh)?;
    let level = assemble_level(&meshes.space, coef, source)?;
    let n_modes = basis.mode_count();
    let d_beta = params.d_beta;
    let results = map_indexed(n_modes, |j| -> Result<ModeSolution> {
        let scale = d_beta * basis.trace_values[j];
        let prob = assemble_mode_system(j, basis.eigenvalues[j], scale, &level, &meshes)?;
        solve_mode(&prob, &meshes)
    });
    let mut modes = Vec::with_capacity(n_modes);
    for (j, r) in results.into_iter().enumerate() {
        modes.push(r.map_err(|e| FracError::Mode {
            mode: j,
            source: Box::new(e),
        })?);
    }
    Ok(ExtensionSolution {
        params: *params,
        basis,
        meshes,
        load: level.load,
        modes,
    })
}

/// Trace of the solution at a point of the meshed domain,
/// `u(x) = sum_j u_j(x) phi_j(0)`, by P1 interpolation.
///
/// At a mesh vertex this reproduces the modal combination of nodal
/// coefficients exactly.
pub fn evaluate_trace(sol: &ExtensionSolution, x: Vec2) -> Result<f64> {
    let (t, w) = locate_point(&sol.meshes.space.mesh, x).ok_or_else(|| {
        FracError::Evaluation(format!("point ({}, {}) lies outside the meshed domain", x.x, x.y))
    })?;
    let tri = sol.meshes.space.mesh.triangles[t];
    let mut total = 0.0;
    for (j, mode) in sol.modes.iter().enumerate() {
        let interp = w[0] * mode.u[tri[0]] + w[1] * mode.u[tri[1]] + w[2] * mode.u[tri[2]];
        total += sol.basis.trace_values[j] * interp;
    }
    Ok(total)
}

/// Extension field at `(x, y)` with `y` in `[0, Y]`.
///
/// Inside the meshed domain the modal coefficients are interpolated; in
/// the exterior each mode is synthesized from its boundary densities by
/// the representation formula. Points on the coupling boundary itself are
/// rejected, where the layer potentials are singular.
pub fn evaluate_extension(sol: &ExtensionSolution, x: Vec2, y: f64) -> Result<f64> {
    let y_max = sol.basis.space.grid.y_max();
    if !(0.0..=y_max).contains(&y) {
        return Err(FracError::Domain(format!(
            "extension coordinate {y} outside [0, {y_max}]"
        )));
    }
    let bm = &sol.meshes.boundary;
    for k in 0..bm.segment_count() {
        let d = point_segment_distance(x, bm.segment_start(k), bm.segment_end(k));
        if d < 1e-10 * bm.lengths[k] {
            return Err(FracError::Evaluation(
                "point lies on the coupling boundary".into(),
            ));
        }
    }
    let mut total = 0.0;
    if let Some((t, w)) = locate_point(&sol.meshes.space.mesh, x) {
        let tri = sol.meshes.space.mesh.triangles[t];
        for (j, mode) in sol.modes.iter().enumerate() {
            let interp = w[0] * mode.u[tri[0]] + w[1] * mode.u[tri[1]] + w[2] * mode.u[tri[2]];
            total += eval_modal_basis(&sol.basis, j, y)? * interp;
        }
    } else {
        // Exterior Green representation with the normal pointing out of
        // the meshed domain: u = (double layer of the trace) - (single
        // layer of the flux), the negative of the interior-form
        // combination computed by eval_potentials.
        for (j, mode) in sol.modes.iter().enumerate() {
            let phi = eval_modal_basis(&sol.basis, j, y)?;
            if phi == 0.0 {
                continue;
            }
            let tu = sol.meshes.trace.apply(&mode.u);
            let value = eval_potentials(bm, mode.mu.sqrt(), &mode.lambda, &tu, x)?;
            total -= phi * value;
        }
    }
    Ok(total)
}

/// Discrete energy `F(u_h) = sum_j rhs_j . u_j`, the squared energy norm
/// of the Galerkin solution. Nondecreasing under nested refinement of the
/// planar mesh at fixed modal basis.
pub fn energy_value(sol: &ExtensionSolution) -> f64 {
    let mut total = 0.0;
    for (j, mode) in sol.modes.iter().enumerate() {
        let scale = sol.params.d_beta * sol.basis.trace_values[j];
        total += scale * sol.load.dot(&mode.u);
    }
    total
}

/// Writes the solution as a plain-text bundle: a header, the per-mode
/// `(mu_j, phi_j(0))` table in CSV form, then each mode's interior and
/// boundary coefficient vectors.
pub fn export_solution(sol: &ExtensionSolution, out: &mut dyn Write) -> Result<()> {
    let fem_dof = sol.meshes.space.dim();
    let bem_dof = sol.meshes.boundary.segment_count();
    writeln!(out, "fractional-extension-solution v1")?;
    writeln!(
        out,
        "beta {:.17e} s {:.17e} d_beta {:.17e}",
        sol.params.beta, sol.params.s, sol.params.d_beta
    )?;
    writeln!(
        out,
        "modes {} fem_dof {fem_dof} bem_dof {bem_dof}",
        sol.modes.len()
    )?;
    writeln!(out, "mode,mu,trace0")?;
    for (j, mode) in sol.modes.iter().enumerate() {
        writeln!(
            out,
            "{j},{:.17e},{:.17e}",
            mode.mu, sol.basis.trace_values[j]
        )?;
    }
    for (j, mode) in sol.modes.iter().enumerate() {
        write!(out, "u {j}")?;
        for v in mode.u.iter() {
            write!(out, " {v:.17e}")?;
        }
        writeln!(out)?;
        write!(out, "lambda {j}")?;
        for v in mode.lambda.iter() {
            write!(out, " {v:.17e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Brute-force point location: the first triangle containing `x`, with
/// barycentric weights. Queries are sparse relative to assembly work, so
/// no search structure is kept.
fn locate_point(mesh: &TriMesh, x: Vec2) -> Option<(usize, [f64; 3])> {
    let cross = |a: Vec2, b: Vec2| a.x * b.y - a.y * b.x;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let a = mesh.vertices[tri[0]];
        let b = mesh.vertices[tri[1]];
        let c = mesh.vertices[tri[2]];
        let det = cross(b - a, c - a);
        let w0 = cross(b - x, c - x) / det;
        let w1 = cross(c - x, a - x) / det;
        let w2 = cross(a - x, b - x) / det;
        // generous enough to absorb roundoff when querying vertices of a
        // nested refinement that sit exactly on edges of this mesh, yet far
        // below any discretization scale
        let tol = -1e-9;
        if w0 >= tol && w1 >= tol && w2 >= tol {
            return Some((t, [w0, w1, w2]));
        }
    }
    None
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + t * ab)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh_square;
    use crate::ydisc::{assemble_y_matrices, build_geometric_grid, modal_decomposition, HpSpaceY};

    fn small_basis(beta: f64, s: f64, l: usize, degree: usize, y_max: f64) -> ModalBasis {
        let grid = build_geometric_grid(0.5, l, y_max).unwrap();
        let space = HpSpaceY::new(grid, degree).unwrap();
        let alpha = 1.0 - 2.0 * beta;
        let (a, b) = assemble_y_matrices(&space, alpha, s).unwrap();
        modal_decomposition(&space, &a, &b, s).unwrap()
    }

    fn small_setup(n: usize) -> (CoupledMeshes, LevelAssembly) {
        let mesh = mesh_square(4.0, n).unwrap();
        let meshes = CoupledMeshes::new(mesh).unwrap();
        let level =
            assemble_level(&meshes.space, &CoefficientField::identity(), &SourceTerm::bump())
                .unwrap();
        (meshes, level)
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let params = FracParams::new(0.5, 1.0).unwrap();
        let basis = small_basis(0.5, 1.0, 1, 1, 2.0);
        let zero = SourceTerm::new(|_| 0.0, 1.0);
        let mesh = mesh_square(4.0, 4).unwrap();
        let sol = solve_fractional(
            &params,
            &CoefficientField::identity(),
            &zero,
            mesh,
            basis,
        )
        .unwrap();
        for mode in &sol.modes {
            assert_eq!(mode.u.norm(), 0.0);
            assert_eq!(mode.lambda.norm(), 0.0);
        }
        assert_eq!(energy_value(&sol), 0.0);
        assert_eq!(evaluate_trace(&sol, Vec2::new(0.3, 0.1)).unwrap(), 0.0);
    }

    #[test]
    fn solution_is_linear_in_the_source() {
        let (meshes, level) = small_setup(6);
        let doubled = LevelAssembly {
            stiffness: level.stiffness.clone(),
            mass: level.mass.clone(),
            load: 2.0 * &level.load,
        };
        let p1 = assemble_mode_system(0, 3.0, 1.0, &level, &meshes).unwrap();
        let p2 = assemble_mode_system(0, 3.0, 1.0, &doubled, &meshes).unwrap();
        let s1 = solve_mode(&p1, &meshes).unwrap();
        let s2 = solve_mode(&p2, &meshes).unwrap();
        let err = (2.0 * &s1.u - &s2.u).norm() / s2.u.norm();
        assert!(err < 1e-13, "linearity violated: {err:.3e}");
        let err_l = (2.0 * &s1.lambda - &s2.lambda).norm() / s2.lambda.norm();
        assert!(err_l < 1e-13, "flux linearity violated: {err_l:.3e}");
    }

    #[test]
    fn coupled_block_matrix_is_symmetric_after_negation() {
        let (meshes, level) = small_setup(4);
        for mu in [0.37, 2.0, 41.0] {
            let prob = assemble_mode_system(0, mu, 1.0, &level, &meshes).unwrap();
            let big = dense_coupled_matrix(&prob, &meshes.trace);
            let asym = (&big - big.transpose()).norm();
            assert!(asym <= 1e-11, "asymmetry {asym:.3e} at mu = {mu}");
        }
    }

    #[test]
    fn schur_path_matches_dense_block_solve() {
        let (meshes, level) = small_setup(4);
        let n = meshes.space.dim();
        let m = meshes.boundary.segment_count();
        let prob = assemble_mode_system(0, 2.0, 1.0, &level, &meshes).unwrap();
        let sol = solve_mode(&prob, &meshes).unwrap();
        let big = dense_coupled_matrix(&prob, &meshes.trace);
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(0, n).copy_from(&prob.rhs);
        let full = big.lu().solve(&rhs).expect("dense coupled solve");
        let du = (full.rows(0, n) - &sol.u).norm() / sol.u.norm();
        let dl = (full.rows(n, m) - &sol.lambda).norm() / sol.lambda.norm().max(1e-30);
        assert!(du < 1e-9, "interior mismatch {du:.3e}");
        assert!(dl < 1e-8, "flux mismatch {dl:.3e}");
    }

    #[test]
    fn schur_complement_is_positive_definite() {
        let (meshes, level) = small_setup(4);
        let n = meshes.space.dim();
        let m = meshes.boundary.segment_count();
        for mu in [0.5, 7.0, 120.0] {
            let prob = assemble_mode_system(0, mu, 1.0, &level, &meshes).unwrap();
            let b_mat = 0.5 * &prob.ops.mass - &prob.ops.k;
            let vinv_b = Cholesky::new(prob.ops.v.clone()).unwrap().solve(&b_mat);
            let correction = b_mat.tr_mul(&vinv_b);
            let mut s = prob.fem.to_dense();
            for k in 0..m {
                let vk = meshes.trace.vertex_ids[k];
                for l in 0..m {
                    let vl = meshes.trace.vertex_ids[l];
                    s[(vk, vl)] += prob.ops.w[(k, l)] + correction[(k, l)];
                }
            }
            // scrub assembly round-off skew before factoring
            let sym = 0.5 * (&s + s.transpose());
            assert!(
                Cholesky::new(sym).is_some(),
                "Schur complement not SPD at mu = {mu} (n = {n})"
            );
        }
    }

    #[test]
    fn residuals_satisfy_the_coupled_invariant() {
        let (meshes, level) = small_setup(8);
        let prob = assemble_mode_system(0, 1.3, 0.7, &level, &meshes).unwrap();
        let sol = solve_mode(&prob, &meshes).unwrap();
        // recompute the residuals independently of solve_mode's internal check
        let tu = meshes.trace.apply(&sol.u);
        let b_mat = 0.5 * &prob.ops.mass - &prob.ops.k;
        let mut r1 = prob.fem.mul_vec(&sol.u) - &prob.rhs;
        r1 += meshes
            .trace
            .apply_transpose(&(&prob.ops.w * &tu - b_mat.tr_mul(&sol.lambda)));
        let r2 = &b_mat * &tu + &prob.ops.v * &sol.lambda;
        let bound = 1e-10 * (prob.rhs.norm() + 1.0);
        assert!(r1.norm() <= bound, "interior residual {:.3e}", r1.norm());
        assert!(r2.norm() <= bound, "flux residual {:.3e}", r2.norm());
    }

    #[test]
    fn single_mode_values_form_a_cauchy_sequence_under_refinement() {
        // one modal problem, fixed mu, refined meshes; P1 point values
        // should converge, so consecutive differences must shrink
        let probe = Vec2::new(0.3, 0.2);
        let mut values = Vec::new();
        for n in [8usize, 16, 32] {
            let (meshes, level) = small_setup(n);
            let prob = assemble_mode_system(0, 2.0, 1.0, &level, &meshes).unwrap();
            let sol = solve_mode(&prob, &meshes).unwrap();
            let (t, w) = locate_point(&meshes.space.mesh, probe).unwrap();
            let tri = meshes.space.mesh.triangles[t];
            values.push(w[0] * sol.u[tri[0]] + w[1] * sol.u[tri[1]] + w[2] * sol.u[tri[2]]);
        }
        let d1 = (values[1] - values[0]).abs();
        let d2 = (values[2] - values[1]).abs();
        assert!(
            d2 < 0.5 * d1,
            "Cauchy differences do not shrink: {d1:.3e} then {d2:.3e}"
        );
    }

    #[test]
    fn energy_is_monotone_under_nested_refinement() {
        let params = FracParams::new(0.5, 1.0).unwrap();
        let coef = CoefficientField::identity();
        let source = SourceTerm::bump();
        let mut energies = Vec::new();
        for n in [4usize, 8, 16] {
            let basis = small_basis(0.5, 1.0, 2, 2, 2.0);
            let mesh = mesh_square(4.0, n).unwrap();
            let sol = solve_fractional(&params, &coef, &source, mesh, basis).unwrap();
            energies.push(energy_value(&sol));
        }
        for w in energies.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-12 * w[0].abs(),
                "energy decreased under nested refinement: {} then {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn mode_solves_do_not_depend_on_execution_order() {
        let params = FracParams::new(0.4, 1.5).unwrap();
        let coef = CoefficientField::identity();
        let source = SourceTerm::bump();
        let basis = small_basis(0.4, 1.5, 1, 2, 2.0);
        let n_modes = basis.mode_count();
        let mesh = mesh_square(4.0, 6).unwrap();
        let sol = solve_fractional(&params, &coef, &source, mesh, basis).unwrap();
        // standalone solves in reverse order must be bit-identical to the
        // gathered results
        let level = assemble_level(
            &sol.meshes.space,
            &CoefficientField::identity(),
            &SourceTerm::bump(),
        )
        .unwrap();
        for j in (0..n_modes).rev() {
            let scale = params.d_beta * sol.basis.trace_values[j];
            let prob =
                assemble_mode_system(j, sol.basis.eigenvalues[j], scale, &level, &sol.meshes)
                    .unwrap();
            let standalone = solve_mode(&prob, &sol.meshes).unwrap();
            for (a, b) in standalone.u.iter().zip(sol.modes[j].u.iter()) {
                assert_eq!(a.to_bits(), b.to_bits(), "mode {j} differs");
            }
            for (a, b) in standalone.lambda.iter().zip(sol.modes[j].lambda.iter()) {
                assert_eq!(a.to_bits(), b.to_bits(), "mode {j} flux differs");
            }
        }
    }

    #[test]
    fn trace_evaluation_is_nodally_exact() {
        let params = FracParams::new(0.5, 1.0).unwrap();
        let basis = small_basis(0.5, 1.0, 1, 1, 2.0);
        let mesh = mesh_square(4.0, 4).unwrap();
        let sol = solve_fractional(
            &params,
            &CoefficientField::identity(),
            &SourceTerm::bump(),
            mesh,
            basis,
        )
        .unwrap();
        // vertex 12 of the 5x5 grid is the center
        let vid = 12usize;
        let x = sol.meshes.space.mesh.vertices[vid];
        let expected: f64 = sol
            .modes
            .iter()
            .enumerate()
            .map(|(j, mode)| sol.basis.trace_values[j] * mode.u[vid])
            .sum();
        assert_eq!(evaluate_trace(&sol, x).unwrap(), expected);
        // outside the mesh: evaluation error
        assert!(evaluate_trace(&sol, Vec2::new(5.0, 0.0)).is_err());
    }

    #[test]
    fn extension_evaluation_interior_exterior_and_domain_checks() {
        let params = FracParams::new(0.5, 1.0).unwrap();
        let basis = small_basis(0.5, 1.0, 2, 2, 2.0);
        let mesh = mesh_square(4.0, 8).unwrap();
        let sol = solve_fractional(
            &params,
            &CoefficientField::identity(),
            &SourceTerm::bump(),
            mesh,
            basis,
        )
        .unwrap();
        // at y = 0 the interior extension equals the trace
        let x = Vec2::new(0.3, 0.1);
        assert_eq!(
            evaluate_extension(&sol, x, 0.0).unwrap(),
            evaluate_trace(&sol, x).unwrap()
        );
        // far field decays strongly
        let near = evaluate_extension(&sol, Vec2::new(3.0, 0.0), 0.0).unwrap();
        let far = evaluate_extension(&sol, Vec2::new(20.0, 0.0), 0.0).unwrap();
        assert!(near != 0.0);
        assert!(
            far.abs() <= 1e-4 * near.abs(),
            "far field too large: {far:.3e} vs {near:.3e}"
        );
        // continuity across the coupling boundary: the interior limit and
        // the exterior representation agree up to discretization error
        let inner = evaluate_extension(&sol, Vec2::new(1.95, 0.3), 0.0).unwrap();
        let outer = evaluate_extension(&sol, Vec2::new(2.08, 0.3), 0.0).unwrap();
        assert!(
            (inner - outer).abs() <= 0.3 * near.abs().max(inner.abs()),
            "jump across boundary: {inner:.3e} vs {outer:.3e}"
        );
        // rejected points
        assert!(evaluate_extension(&sol, Vec2::new(2.0, 0.3), 0.0).is_err());
        assert!(evaluate_extension(&sol, x, -0.1).is_err());
        assert!(evaluate_extension(&sol, x, 2.1).is_err());
    }

    #[test]
    fn export_writes_a_parseable_bundle() {
        let params = FracParams::new(0.5, 1.0).unwrap();
        let basis = small_basis(0.5, 1.0, 1, 1, 2.0);
        let mesh = mesh_square(4.0, 4).unwrap();
        let sol = solve_fractional(
            &params,
            &CoefficientField::identity(),
            &SourceTerm::bump(),
            mesh,
            basis,
        )
        .unwrap();
        let mut buf = Vec::new();
        export_solution(&sol, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "fractional-extension-solution v1");
        assert!(text.contains("mode,mu,trace0"));
        let n_modes = sol.modes.len();
        assert_eq!(text.lines().filter(|l| l.starts_with("u ")).count(), n_modes);
        assert_eq!(
            text.lines().filter(|l| l.starts_with("lambda ")).count(),
            n_modes
        );
        // coefficient lines carry the full vectors
        let u0 = text
            .lines()
            .find(|l| l.starts_with("u 0"))
            .unwrap()
            .split_whitespace()
            .count();
        assert_eq!(u0, 2 + sol.meshes.space.dim());
    }
}

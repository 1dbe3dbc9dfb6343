//! Solver for the spectral fractional diffusion problem
//! `L^beta u + s u = f` on the plane, where `L = -div(A grad .)` is a
//! second-order elliptic operator and `0 < beta < 1`.
//!
//! The nonlocal problem is localized by the Caffarelli-Silvestre extension:
//! a degenerate elliptic problem on a half-space cylinder with weight
//! `y^alpha`, `alpha = 1 - 2 beta`, truncated at height `Y`. An hp spectral
//! discretization in the extended variable diagonalizes the truncated
//! problem into a family of independent planar reaction-diffusion equations
//! `-div(A grad u_j) + mu_j u_j = c_j f`, each posed on all of R^2. Every
//! modal problem is solved by symmetric FEM-BEM coupling: piecewise-linear
//! finite elements on a bounded polygon carrying the source, coupled through
//! Costabel's symmetric formulation to boundary integral operators of the
//! Yukawa kernel, so no artificial domain truncation ever occurs in the
//! plane.
//!
//! Crate layout mirrors that pipeline: [`specfun`] (Bessel and Gamma
//! machinery, Yukawa kernels), [`quad`] (Gauss rules including weighted and
//! logarithmic ones), [`params`] (problem data and parameter selection),
//! [`ydisc`] (extended-variable eigenproblem), [`fem`] (planar P1 finite
//! elements), [`bem`] (boundary integral operators), [`coupling`] (per-mode
//! coupled solves and the solution object), [`analysis`] (reference
//! solutions and verification oracles), [`study`] (convergence studies and
//! CSV reporting).
//!
//! With the default `parallel` feature the modal solves and the dense
//! assembly loops fan out over a rayon thread pool; disabling it yields a
//! bitwise-identical sequential build (summation orders are fixed either
//! way).

pub mod analysis;
pub mod bem;
pub mod coupling;
pub mod error;
pub mod fem;
pub mod params;
pub mod quad;
pub mod specfun;
pub mod study;
pub mod ydisc;

pub use error::{FracError, Result};

/// Planar point or vector.
pub type Vec2 = nalgebra::Vector2<f64>;

/// Runs `op` over `0..n`, collecting results in index order.
///
/// Parallel builds fan out over rayon; sequential builds run a plain loop.
/// Either way the output ordering, and thus every downstream reduction,
/// is deterministic.
pub(crate) fn map_indexed<T, F>(n: usize, op: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(op).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(op).collect()
    }
}

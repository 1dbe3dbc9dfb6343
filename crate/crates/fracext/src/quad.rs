//! Gaussian quadrature: Legendre rules, Jacobi rules for the weight `y^alpha`,
//! log-weighted rules for the kernel singularity, and the panel-pair rule
//! kits consumed by the boundary-element assembly.
//!
//! Legendre rules come from Newton iteration on the recurrence; the weighted
//! rules are built by Golub-Welsch diagonalization of the Jacobi matrix, with
//! the log-weight recurrence coefficients recovered from shifted-Legendre
//! modified moments via the modified Chebyshev algorithm (Gautschi). All
//! rules are plain value objects and everything here is deterministic.

use crate::error::{FracError, Result};
use nalgebra::DMatrix;

/// A one-dimensional quadrature rule, possibly with an implicit weight
/// function (stated by the constructor that produced it).
#[derive(Clone, Debug)]
pub struct QuadRule {
    /// Strictly increasing nodes, all interior to `interval`.
    pub nodes: Vec<f64>,
    /// Positive weights, one per node.
    pub weights: Vec<f64>,
    /// The interval the rule integrates over.
    pub interval: (f64, f64),
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule to `f` (the implicit weight, if any, is part of the
    /// rule and must not be included in `f`).
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Affine image of an unweighted rule on a new interval `(a, b)`.
    ///
    /// Only meaningful for rules with weight 1 (Legendre); weighted rules
    /// do not transform this way.
    pub fn mapped_to(&self, a: f64, b: f64) -> QuadRule {
        let (lo, hi) = self.interval;
        let scale = (b - a) / (hi - lo);
        QuadRule {
            nodes: self.nodes.iter().map(|&x| a + (x - lo) * scale).collect(),
            weights: self.weights.iter().map(|&w| w * scale).collect(),
            interval: (a, b),
        }
    }
}

/// Relation of two boundary panels, as determined by shared endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PanelRelation {
    /// The same panel twice.
    Coincident,
    /// Panels sharing exactly one endpoint.
    Adjacent,
    /// Panels with no common endpoint.
    Disjoint,
}

impl PanelRelation {
    /// Classifies a pair by its number of shared endpoints (0, 1, or 2).
    pub fn from_shared_endpoints(count: usize) -> Result<Self> {
        match count {
            0 => Ok(PanelRelation::Disjoint),
            1 => Ok(PanelRelation::Adjacent),
            2 => Ok(PanelRelation::Coincident),
            _ => Err(FracError::Domain(format!(
                "two segments share at most 2 endpoints, got {count}"
            ))),
        }
    }
}

/// Quadrature kit for one Galerkin panel pair.
///
/// `outer`/`inner` are unit-interval Gauss-Legendre rules the assembly maps
/// onto (sub)panels; `log_rule` carries the `-ln` weight and is present only
/// for coincident pairs, where the kernel's log singularity is integrated
/// explicitly after the singularity split.
#[derive(Clone, Debug)]
pub struct PanelPairRule {
    pub kind: PanelRelation,
    pub outer: QuadRule,
    pub inner: QuadRule,
    pub log_rule: Option<QuadRule>,
}

/// Builds the quadrature kit for a panel pair of the given relation.
///
/// `order` is the point count of each underlying Gauss rule (1..=32).
pub fn panel_pair_rule(relation: PanelRelation, order: usize) -> Result<PanelPairRule> {
    if !(1..=32).contains(&order) {
        return Err(FracError::Domain(format!(
            "panel pair order {order} outside 1..=32"
        )));
    }
    let gauss = gauss_legendre(order)?;
    let log_rule = match relation {
        PanelRelation::Coincident => Some(gauss_log(order)?),
        _ => None,
    };
    Ok(PanelPairRule {
        kind: relation,
        outer: gauss.clone(),
        inner: gauss,
        log_rule,
    })
}

/// Legendre polynomial `P_n` and its derivative at `x`, by upward recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Gauss-Legendre rule with `n` points on `(-1, 1)`.
///
/// Exact for polynomials of degree `2n - 1`; weights sum to 2.
pub fn gauss_legendre(n: usize) -> Result<QuadRule> {
    if !(1..=64).contains(&n) {
        return Err(FracError::Domain(format!(
            "gauss_legendre order {n} outside 1..=64"
        )));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi-type initial guess for the i-th largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 * x.abs().max(1.0) {
                let (p2, d2) = legendre_with_derivative(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadRule {
        nodes,
        weights,
        interval: (-1.0, 1.0),
    })
}

/// Gauss rule from recurrence coefficients of monic orthogonal polynomials
/// (Golub-Welsch): `beta[0]` is the total weight mass, `alpha`/`beta` the
/// three-term coefficients. Returns sorted nodes with matching weights.
fn golub_welsch(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = alpha.len();
    let mut jac = DMatrix::zeros(n, n);
    for i in 0..n {
        jac[(i, i)] = alpha[i];
    }
    for i in 1..n {
        if !(beta[i] > 0.0) {
            return Err(FracError::Solver(format!(
                "recurrence coefficient beta[{i}] = {} not positive; \
                 moment map lost definiteness",
                beta[i]
            )));
        }
        let s = beta[i].sqrt();
        jac[(i, i - 1)] = s;
        jac[(i - 1, i)] = s;
    }
    let eig = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], beta[0] * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

/// Gauss-Jacobi rule with `n` points for the weight `y^alpha` on `(0, b)`:
/// `sum w_k g(y_k) = int_0^b y^alpha g(y) dy` exactly for `deg g <= 2n-1`.
///
/// Weights sum to `b^{1+alpha}/(1+alpha)`.
pub fn gauss_jacobi(n: usize, alpha: f64, b: f64) -> Result<QuadRule> {
    if !(1..=64).contains(&n) {
        return Err(FracError::Domain(format!(
            "gauss_jacobi order {n} outside 1..=64"
        )));
    }
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(FracError::Domain(format!(
            "gauss_jacobi exponent {alpha} outside (-1, 1)"
        )));
    }
    if !(b > 0.0) {
        return Err(FracError::Domain(format!(
            "gauss_jacobi interval length {b} not positive"
        )));
    }
    // Monic recurrence for the weight (1+x)^alpha on (-1,1), i.e. the
    // Jacobi weight with parameters (0, alpha).
    let mut rec_a = vec![0.0; n];
    let mut rec_b = vec![0.0; n];
    rec_a[0] = alpha / (alpha + 2.0);
    rec_b[0] = 2f64.powf(alpha + 1.0) / (alpha + 1.0);
    for k in 1..n {
        let kf = k as f64;
        let den = 2.0 * kf + alpha;
        rec_a[k] = alpha * alpha / (den * (den + 2.0));
        let t = 2.0 * kf * (kf + alpha) / den;
        rec_b[k] = t * t / ((den + 1.0) * (den - 1.0));
    }
    let (x, w) = golub_welsch(&rec_a, &rec_b)?;
    // Map (-1,1) with weight (1+x)^alpha onto (0,b) with weight y^alpha.
    let scale = (0.5 * b).powf(alpha + 1.0);
    Ok(QuadRule {
        nodes: x.iter().map(|&t| 0.5 * b * (t + 1.0)).collect(),
        weights: w.iter().map(|&v| v * scale).collect(),
        interval: (0.0, b),
    })
}

/// Gauss rule with `n` points for the weight `-ln y` on `(0, 1)`:
/// `sum w_k g(y_k) = int_0^1 (-ln y) g(y) dy` exactly for `deg g <= 2n-1`.
///
/// Weights sum to 1. Built by the modified Chebyshev algorithm from the
/// shifted-Legendre modified moments of the log weight, which are known in
/// closed form; this route is well conditioned where raw power moments are
/// hopeless.
pub fn gauss_log(n: usize) -> Result<QuadRule> {
    if !(1..=32).contains(&n) {
        return Err(FracError::Domain(format!(
            "gauss_log order {n} outside 1..=32"
        )));
    }
    let m = 2 * n;
    // Modified moments against MONIC shifted Legendre pi_k:
    // int_0^1 (-ln y) P*_k(y) dy = 1 (k=0), (-1)^k/(k(k+1)) (k>=1), and
    // pi_k = P*_k * k!^2/(2k)!.
    let mut mom = vec![0.0; m];
    mom[0] = 1.0;
    let mut lead = 1.0; // k!^2/(2k)!
    for k in 1..m {
        let kf = k as f64;
        lead *= kf / (2.0 * (2.0 * kf - 1.0));
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        mom[k] = sign / (kf * (kf + 1.0)) * lead;
    }
    // Monic shifted-Legendre recurrence on (0,1).
    let ref_a = vec![0.5; m];
    let mut ref_b = vec![0.0; m];
    for (l, rb) in ref_b.iter_mut().enumerate().skip(1) {
        let lf = l as f64;
        *rb = lf * lf / (4.0 * (4.0 * lf * lf - 1.0));
    }
    // Modified Chebyshev algorithm (Gautschi).
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    alpha[0] = ref_a[0] + mom[1] / mom[0];
    beta[0] = mom[0];
    let mut sig_prev = vec![0.0; m + 1];
    let mut sig_cur = vec![0.0; m + 1];
    sig_cur[..m].copy_from_slice(&mom);
    for k in 1..n {
        let mut sig_new = vec![0.0; m + 1];
        for l in k..=(m - 1 - k) {
            sig_new[l] = sig_cur[l + 1] - (alpha[k - 1] - ref_a[l]) * sig_cur[l]
                - beta[k - 1] * sig_prev[l]
                + ref_b[l] * sig_cur[l - 1];
        }
        alpha[k] = ref_a[k] + sig_new[k + 1] / sig_new[k] - sig_cur[k] / sig_cur[k - 1];
        beta[k] = sig_new[k] / sig_cur[k - 1];
        sig_prev = std::mem::replace(&mut sig_cur, sig_new);
    }
    let (x, w) = golub_welsch(&alpha, &beta)?;
    Ok(QuadRule {
        nodes: x,
        weights: w,
        interval: (0.0, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn assert_rule_sane(rule: &QuadRule) {
        assert_eq!(rule.nodes.len(), rule.weights.len());
        let (a, b) = rule.interval;
        for win in rule.nodes.windows(2) {
            assert!(win[0] < win[1], "nodes not strictly increasing");
        }
        for &x in &rule.nodes {
            assert!(x > a && x < b, "node {x} not interior to ({a}, {b})");
        }
        for &w in &rule.weights {
            assert!(w > 0.0, "nonpositive weight {w}");
        }
    }

    #[test]
    fn legendre_small_orders() {
        let r1 = gauss_legendre(1).unwrap();
        assert_eq!(r1.nodes, vec![0.0]);
        assert_eq!(r1.weights, vec![2.0]);

        let r2 = gauss_legendre(2).unwrap();
        let c = 1.0 / 3f64.sqrt();
        assert_relative_eq!(r2.nodes[0], -c, max_relative = 1e-15);
        assert_relative_eq!(r2.nodes[1], c, max_relative = 1e-15);
        assert_relative_eq!(r2.weights[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(r2.weights[1], 1.0, max_relative = 1e-15);
    }

    #[test]
    fn legendre_five_point_reference() {
        // Classical 5-point values.
        let r = gauss_legendre(5).unwrap();
        let want_nodes = [
            -0.906_179_845_938_663_99,
            -0.538_469_310_105_683_09,
            0.0,
            0.538_469_310_105_683_09,
            0.906_179_845_938_663_99,
        ];
        let want_weights = [
            0.236_926_885_056_189_09,
            0.478_628_670_499_366_47,
            0.568_888_888_888_888_89,
            0.478_628_670_499_366_47,
            0.236_926_885_056_189_09,
        ];
        for i in 0..5 {
            assert_relative_eq!(r.nodes[i], want_nodes[i], epsilon = 1e-15, max_relative = 1e-14);
            assert_relative_eq!(r.weights[i], want_weights[i], max_relative = 1e-14);
        }
    }

    #[test]
    fn legendre_exactness_and_mass() {
        for n in 1..=64 {
            let r = gauss_legendre(n).unwrap();
            assert_rule_sane(&r);
            let mass: f64 = r.weights.iter().sum();
            assert_relative_eq!(mass, 2.0, max_relative = 1e-13);
        }
        // n=8 on x^14: integral 2/15.
        let r = gauss_legendre(8).unwrap();
        assert_relative_eq!(r.integrate(|x| x.powi(14)), 2.0 / 15.0, max_relative = 1e-13);
    }

    #[test]
    fn legendre_symmetry() {
        let r = gauss_legendre(12).unwrap();
        for i in 0..12 {
            assert_relative_eq!(r.nodes[i], -r.nodes[11 - i], epsilon = 1e-15);
            assert_relative_eq!(r.weights[i], r.weights[11 - i], max_relative = 1e-14);
        }
    }

    #[test]
    fn legendre_rejects_out_of_range() {
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(65).is_err());
    }

    #[test]
    fn mapped_rule_integrates_on_new_interval() {
        let r = gauss_legendre(4).unwrap().mapped_to(1.0, 3.0);
        assert_relative_eq!(r.integrate(|x| x * x), 26.0 / 3.0, max_relative = 1e-13);
        assert_eq!(r.interval, (1.0, 3.0));
        assert_rule_sane(&r);
    }

    #[test]
    fn jacobi_one_point_rules() {
        let r = gauss_jacobi(1, 0.0, 1.0).unwrap();
        assert_relative_eq!(r.nodes[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(r.weights[0], 1.0, max_relative = 1e-14);

        // alpha = 0.4: node (1+a)/(2+a) = 7/12, weight 1/(1+a) = 5/7.
        let r = gauss_jacobi(1, 0.4, 1.0).unwrap();
        assert_relative_eq!(r.nodes[0], 7.0 / 12.0, max_relative = 1e-14);
        assert_relative_eq!(r.weights[0], 5.0 / 7.0, max_relative = 1e-14);
    }

    #[test]
    fn jacobi_reference_tables() {
        // Reference nodes/weights from a 50-digit Golub-Welsch run.
        let r = gauss_jacobi(3, 0.4, 1.0).unwrap();
        let want = [
            (0.154_653_218_254_295_87, 0.144_444_674_581_636_49),
            (0.540_725_847_129_758_72, 0.328_819_823_487_983_52),
            (0.898_370_934_615_945_41, 0.241_021_216_216_094_28),
        ];
        for (i, (x, w)) in want.iter().enumerate() {
            assert_relative_eq!(r.nodes[i], x, max_relative = 1e-13);
            assert_relative_eq!(r.weights[i], w, max_relative = 1e-13);
        }

        let r = gauss_jacobi(3, -0.4, 1.0).unwrap();
        let want = [
            (0.068_314_881_488_801_536, 0.692_546_317_585_434_23),
            (0.451_043_887_032_845_50, 0.646_705_785_244_059_60),
            (0.873_498_374_335_495_82, 0.327_414_563_837_172_84),
        ];
        for (i, (x, w)) in want.iter().enumerate() {
            assert_relative_eq!(r.nodes[i], x, max_relative = 1e-13);
            assert_relative_eq!(r.weights[i], w, max_relative = 1e-13);
        }

        let r = gauss_jacobi(4, 0.4, 2.0).unwrap();
        let want = [
            (0.196_127_261_230_493_97, 0.205_957_328_615_926_50),
            (0.735_013_273_823_169_22, 0.567_839_585_091_657_15),
            (1.387_157_747_326_995_6, 0.698_887_763_042_374_45),
            (1.872_177_908_095_531_7, 0.412_326_624_354_176_56),
        ];
        for (i, (x, w)) in want.iter().enumerate() {
            assert_relative_eq!(r.nodes[i], x, max_relative = 1e-13);
            assert_relative_eq!(r.weights[i], w, max_relative = 1e-13);
        }
    }

    #[test]
    fn jacobi_alpha_zero_matches_legendre() {
        let gj = gauss_jacobi(3, 0.0, 1.0).unwrap();
        let gl = gauss_legendre(3).unwrap().mapped_to(0.0, 1.0);
        for i in 0..3 {
            assert_relative_eq!(gj.nodes[i], gl.nodes[i], epsilon = 1e-13);
            assert_relative_eq!(gj.weights[i], gl.weights[i], max_relative = 1e-13);
        }
    }

    #[test]
    fn jacobi_weight_mass_and_exactness() {
        for &(n, alpha, b) in &[
            (2usize, 0.5, 1.0),
            (4, 0.5, 1.0),
            (4, -0.7, 1.0),
            (6, 0.3, 3.0),
            (8, -0.2, 0.25),
            (12, 0.9, 2.0),
        ] {
            let r = gauss_jacobi(n, alpha, b).unwrap();
            assert_rule_sane(&r);
            let mass: f64 = r.weights.iter().sum();
            assert_relative_eq!(
                mass,
                b.powf(1.0 + alpha) / (1.0 + alpha),
                max_relative = 1e-12
            );
            // Monomial battery up to degree 2n-1.
            for d in 0..(2 * n) {
                let exact = b.powf(alpha + d as f64 + 1.0) / (alpha + d as f64 + 1.0);
                let got = r.integrate(|y| y.powi(d as i32));
                assert_relative_eq!(got, exact, max_relative = 1e-12);
            }
        }
        // Spec example: n=4, alpha=0.5, g=y^6 on (0,1) -> 2/15.
        let r = gauss_jacobi(4, 0.5, 1.0).unwrap();
        assert_relative_eq!(r.integrate(|y| y.powi(6)), 2.0 / 15.0, max_relative = 1e-12);
    }

    #[test]
    fn jacobi_rejects_bad_parameters() {
        assert!(gauss_jacobi(0, 0.5, 1.0).is_err());
        assert!(gauss_jacobi(65, 0.5, 1.0).is_err());
        assert!(gauss_jacobi(4, 1.0, 1.0).is_err());
        assert!(gauss_jacobi(4, -1.0, 1.0).is_err());
        assert!(gauss_jacobi(4, 1.5, 1.0).is_err());
        assert!(gauss_jacobi(4, 0.5, 0.0).is_err());
        assert!(gauss_jacobi(4, 0.5, -2.0).is_err());
    }

    #[test]
    fn log_rule_reference_tables() {
        let r = gauss_log(2).unwrap();
        let want = [
            (0.112_008_806_166_976_18, 0.718_539_319_030_384_44),
            (0.602_276_908_118_738_10, 0.281_460_680_969_615_56),
        ];
        for (i, (x, w)) in want.iter().enumerate() {
            assert_relative_eq!(r.nodes[i], x, max_relative = 1e-12);
            assert_relative_eq!(r.weights[i], w, max_relative = 1e-12);
        }

        let r = gauss_log(4).unwrap();
        let want = [
            (0.041_448_480_199_383_221, 0.383_464_068_145_135_12),
            (0.245_274_914_320_602_25, 0.386_875_317_774_762_63),
            (0.556_165_453_560_275_84, 0.190_435_126_950_142_42),
            (0.848_982_394_532_985_17, 0.039_225_487_129_959_832),
        ];
        for (i, (x, w)) in want.iter().enumerate() {
            assert_relative_eq!(r.nodes[i], x, max_relative = 1e-12);
            assert_relative_eq!(r.weights[i], w, max_relative = 1e-12);
        }

        let r = gauss_log(8).unwrap();
        let want = [
            (0.013_320_244_160_892_465, 0.164_416_604_728_002_89),
            (0.079_750_429_013_894_938, 0.237_525_610_023_306_02),
            (0.197_871_029_326_188_05, 0.226_841_984_431_919_13),
            (0.354_153_994_351_909_42, 0.175_754_079_006_070_24),
            (0.529_458_575_234_917_28, 0.112_924_030_246_759_05),
            (0.701_814_529_939_099_96, 0.057_872_210_717_782_072),
            (0.849_379_320_441_106_68, 0.020_979_073_742_132_978),
            (0.953_326_450_056_359_79, 0.003_686_407_104_027_619),
        ];
        for (i, (x, w)) in want.iter().enumerate() {
            assert_relative_eq!(r.nodes[i], x, max_relative = 1e-12);
            assert_relative_eq!(r.weights[i], w, max_relative = 1e-12);
        }
    }

    #[test]
    fn log_rule_moments() {
        let r = gauss_log(2).unwrap();
        assert_relative_eq!(r.integrate(|_| 1.0), 1.0, max_relative = 1e-13);
        assert_relative_eq!(r.integrate(|y| y), 0.25, max_relative = 1e-13);
        let r = gauss_log(3).unwrap();
        assert_relative_eq!(r.integrate(|y| y.powi(5)), 1.0 / 36.0, max_relative = 1e-11);
        // Full exactness battery: int_0^1 -ln(y) y^d dy = 1/(d+1)^2.
        for n in [2usize, 4, 8, 12, 16, 24, 32] {
            let r = gauss_log(n).unwrap();
            assert_rule_sane(&r);
            for d in 0..(2 * n) {
                let exact = 1.0 / ((d as f64 + 1.0) * (d as f64 + 1.0));
                assert_relative_eq!(r.integrate(|y| y.powi(d as i32)), exact, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn log_rule_rejects_out_of_range() {
        assert!(gauss_log(0).is_err());
        assert!(gauss_log(33).is_err());
    }

    #[test]
    fn panel_pair_kit_shapes() {
        assert_eq!(
            PanelRelation::from_shared_endpoints(2).unwrap(),
            PanelRelation::Coincident
        );
        assert_eq!(
            PanelRelation::from_shared_endpoints(1).unwrap(),
            PanelRelation::Adjacent
        );
        assert_eq!(
            PanelRelation::from_shared_endpoints(0).unwrap(),
            PanelRelation::Disjoint
        );
        assert!(PanelRelation::from_shared_endpoints(3).is_err());

        let kit = panel_pair_rule(PanelRelation::Coincident, 8).unwrap();
        assert!(kit.log_rule.is_some());
        assert_eq!(kit.outer.len(), 8);
        let kit = panel_pair_rule(PanelRelation::Adjacent, 8).unwrap();
        assert!(kit.log_rule.is_none());
        let kit = panel_pair_rule(PanelRelation::Disjoint, 6).unwrap();
        assert!(kit.log_rule.is_none());

        // Tensor rule with constant kernel over two unit panels gives the
        // product of lengths.
        let outer = kit.outer.mapped_to(0.0, 1.0);
        let inner = kit.inner.mapped_to(5.0, 6.0);
        let mut total = 0.0;
        for (&_x, &wx) in outer.nodes.iter().zip(&outer.weights) {
            for (&_y, &wy) in inner.nodes.iter().zip(&inner.weights) {
                total += wx * wy;
            }
        }
        assert_relative_eq!(total, 1.0, max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn legendre_exact_on_random_monomials(n in 1usize..32, seed in 0u64..1000) {
            let d = (seed as usize) % (2 * n);
            let r = gauss_legendre(n).unwrap();
            let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
            let got = r.integrate(|x| x.powi(d as i32));
            prop_assert!((got - exact).abs() <= 1e-13 * exact.abs().max(1.0));
        }

        #[test]
        fn jacobi_mass_random(n in 1usize..24, a in -0.95f64..0.95, b in 0.1f64..8.0) {
            let r = gauss_jacobi(n, a, b).unwrap();
            let mass: f64 = r.weights.iter().sum();
            let exact = b.powf(1.0 + a) / (1.0 + a);
            prop_assert!((mass - exact).abs() <= 1e-11 * exact.abs());
        }
    }
}

//! Annulus description, axially symmetric tensor grid, and quadrature.
//!
//! Functions on the annulus {x : R0 < |x| < R1} ⊂ R^N that depend only on
//! r = |x| and the latitude θ = arcsin(|x_N| / r) are represented on a tensor
//! grid over [R0, R1] × [0, π/2]. Integrals over the annulus reduce to
//!
//!   ∫ u dx = 2 ω_{N-2} ∫∫ u(r, θ) (cos θ)^{N-2} r^{N-1} dθ dr,
//!
//! where ω_m is the surface measure of the unit m-sphere. Each axis carries a
//! composite Gauss-Lobatto-Legendre rule, so panel joints and the domain
//! boundary are grid nodes.

use crate::error::Error;
use crate::util::{compensated_sum, lobatto_rule};
use crate::Result;

pub(crate) const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

/// cos θ evaluated as sin(π/2 - θ): exact 0 at the θ = π/2 grid endpoint and
/// exact 1 at θ = 0, so the measure weight vanishes exactly on the symmetry
/// axis.
pub(crate) fn cos_theta(theta: f64) -> f64 {
    (HALF_PI - theta).sin()
}

fn factorial(n: u64) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Surface measure of the unit m-sphere S^m ⊂ R^{m+1}:
/// ω_m = 2 π^{(m+1)/2} / Γ((m+1)/2), with Γ evaluated in closed form at
/// integer and half-integer arguments.
pub fn sphere_surface(m: u32) -> f64 {
    let pi = std::f64::consts::PI;
    let gamma_half = if m % 2 == 1 {
        // (m+1)/2 is an integer n: Γ(n) = (n-1)!
        factorial(((m + 1) / 2) as u64 - 1)
    } else {
        // (m+1)/2 = n + 1/2: Γ(n + 1/2) = (2n)! √π / (4^n n!)
        let n = (m / 2) as u64;
        factorial(2 * n) * pi.sqrt() / (4.0f64.powi(n as i32) * factorial(n))
    };
    2.0 * pi.powf((m as f64 + 1.0) / 2.0) / gamma_half
}

/// Annulus {x ∈ R^N : r_inner < |x| < r_outer} together with the zero-order
/// coefficient λ of the operator -Δ + λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusSpec {
    pub(crate) dim: u32,
    pub(crate) r_inner: f64,
    pub(crate) r_outer: f64,
    pub(crate) lambda: f64,
}

impl AnnulusSpec {
    pub fn new(dim: u32, r_inner: f64, r_outer: f64, lambda: f64) -> Result<Self> {
        if dim < 3 {
            return Err(Error::invalid("dim", format!("need dim >= 3, got {dim}")));
        }
        if !(r_inner.is_finite() && r_inner > 0.0) {
            return Err(Error::invalid(
                "r_inner",
                format!("need a finite inner radius > 0, got {r_inner}"),
            ));
        }
        if !(r_outer.is_finite() && r_outer > r_inner) {
            return Err(Error::invalid(
                "r_outer",
                format!("need a finite outer radius > r_inner = {r_inner}, got {r_outer}"),
            ));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid(
                "lambda",
                format!("need a finite lambda >= 0, got {lambda}"),
            ));
        }
        Ok(Self {
            dim,
            r_inner,
            r_outer,
            lambda,
        })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn r_inner(&self) -> f64 {
        self.r_inner
    }

    pub fn r_outer(&self) -> f64 {
        self.r_outer
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Lebesgue volume ω_{N-1} (R1^N - R0^N) / N.
    pub fn volume(&self) -> f64 {
        let n = self.dim as i32;
        sphere_surface(self.dim - 1) * (self.r_outer.powi(n) - self.r_inner.powi(n)) / n as f64
    }
}

/// One-dimensional composite Gauss-Lobatto-Legendre rule on [a, b].
///
/// The interval splits into ceil((n-1)/15) equal-width panels; panel orders
/// stay in [8, 16] and shared joint nodes are stored once with their weights
/// merged. Both endpoints are nodes, every weight is positive, and the rule
/// is exact for polynomials of degree 13 or less regardless of panel layout.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub(crate) nodes: Vec<f64>,
    pub(crate) weights: Vec<f64>,
}

/// Subinterval count per panel for an n-node composite rule: the (n-1)
/// subintervals spread over ceil((n-1)/15) panels as evenly as possible, the
/// leading panels taking the remainder. With n >= 8 every panel order lands
/// in [8, 16].
fn panelize(n: usize) -> Vec<usize> {
    let intervals = n - 1;
    let panels = (intervals + 14) / 15;
    let base = intervals / panels;
    let rem = intervals % panels;
    (0..panels)
        .map(|k| if k < rem { base + 1 } else { base })
        .collect()
}

impl QuadratureRule {
    pub fn composite_lobatto(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::invalid(
                "interval",
                format!("need finite bounds with b > a, got [{a}, {b}]"),
            ));
        }
        if n < 8 {
            return Err(Error::invalid("n", format!("need at least 8 nodes, got {n}")));
        }
        let counts = panelize(n);
        let panels = counts.len();
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let mut offset = 0usize;
        for (p, &c) in counts.iter().enumerate() {
            let left = a + (b - a) * p as f64 / panels as f64;
            let right = if p + 1 == panels {
                b
            } else {
                a + (b - a) * (p + 1) as f64 / panels as f64
            };
            let (xs, ws) = lobatto_rule(c + 1);
            let mid = 0.5 * (left + right);
            let half = 0.5 * (right - left);
            for k in 0..=c {
                // Joints are assigned the same value from both panels; their
                // weights accumulate.
                nodes[offset + k] = if k == 0 {
                    left
                } else if k == c {
                    right
                } else {
                    mid + half * xs[k]
                };
                weights[offset + k] += half * ws[k];
            }
            offset += c;
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫_a^b f, by the rule.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        compensated_sum(
            self.nodes
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| w * f(*x)),
        )
    }
}

/// Tensor quadrature grid on [r_inner, r_outer] × [0, π/2].
///
/// Radial nodes increase strictly. θ nodes are strictly monotone, in either
/// direction: construction yields increasing θ and `reversed_theta` flips the
/// bookkeeping without changing any integral. Node (i, j) carries the measure
/// weight
///
///   w_ij = 2 ω_{N-2} (cos θ_j)^{N-2} r_i^{N-1} · wr_i · wθ_j,
///
/// positive everywhere except exactly where cos θ = 0. Values live at index
/// i * ntheta + j.
#[derive(Debug, Clone)]
pub struct Grid2D {
    pub(crate) spec: AnnulusSpec,
    pub(crate) r_nodes: Vec<f64>,
    pub(crate) r_weights: Vec<f64>,
    pub(crate) theta_nodes: Vec<f64>,
    pub(crate) theta_weights: Vec<f64>,
    pub(crate) weights: Vec<f64>,
    pub(crate) two_omega: f64,
}

pub fn build_grid(spec: &AnnulusSpec, nr: usize, ntheta: usize) -> Result<Grid2D> {
    let r = QuadratureRule::composite_lobatto(spec.r_inner, spec.r_outer, nr)?;
    let theta = QuadratureRule::composite_lobatto(0.0, HALF_PI, ntheta)?;
    let two_omega = 2.0 * sphere_surface(spec.dim - 2);
    let np = spec.dim as i32;
    let mut weights = vec![0.0f64; nr * ntheta];
    for i in 0..nr {
        let radial = r.weights[i] * r.nodes[i].powi(np - 1);
        for j in 0..ntheta {
            weights[i * ntheta + j] =
                two_omega * radial * cos_theta(theta.nodes[j]).powi(np - 2) * theta.weights[j];
        }
    }
    Ok(Grid2D {
        spec: *spec,
        r_nodes: r.nodes,
        r_weights: r.weights,
        theta_nodes: theta.nodes,
        theta_weights: theta.weights,
        weights,
        two_omega,
    })
}

impl Grid2D {
    pub fn spec(&self) -> &AnnulusSpec {
        &self.spec
    }

    pub fn nr(&self) -> usize {
        self.r_nodes.len()
    }

    pub fn ntheta(&self) -> usize {
        self.theta_nodes.len()
    }

    pub fn r_nodes(&self) -> &[f64] {
        &self.r_nodes
    }

    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta_nodes
    }

    pub fn r_weights(&self) -> &[f64] {
        &self.r_weights
    }

    pub fn theta_weights(&self) -> &[f64] {
        &self.theta_weights
    }

    /// Measure weights, laid out i * ntheta + j.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nr() && j < self.ntheta());
        i * self.ntheta() + j
    }

    /// Measure density 2 ω_{N-2} (cos θ_j)^{N-2} r_i^{N-1} at node (i, j).
    pub fn density(&self, i: usize, j: usize) -> f64 {
        let np = self.spec.dim as i32;
        self.two_omega * cos_theta(self.theta_nodes[j]).powi(np - 2) * self.r_nodes[i].powi(np - 1)
    }

    /// True when the θ bookkeeping runs from π/2 down to 0.
    pub fn theta_descending(&self) -> bool {
        self.theta_nodes[0] > *self.theta_nodes.last().unwrap()
    }

    /// Same grid with the θ axis bookkeeping reversed. Integrals and
    /// node-wise quantities are unchanged; only index order flips.
    pub fn reversed_theta(&self) -> Grid2D {
        let mut g = self.clone();
        g.theta_nodes.reverse();
        g.theta_weights.reverse();
        let nt = self.ntheta();
        for i in 0..self.nr() {
            g.weights[i * nt..(i + 1) * nt].reverse();
        }
        g
    }

    pub(crate) fn check_field(&self, field: &Field2D) -> Result<()> {
        if field.nr != self.nr() || field.ntheta != self.ntheta() {
            return Err(Error::DimensionMismatch(format!(
                "field is {}x{}, grid is {}x{}",
                field.nr,
                field.ntheta,
                self.nr(),
                self.ntheta()
            )));
        }
        Ok(())
    }
}

/// Nodal values on a `Grid2D`, laid out i_r * ntheta + j_theta.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub(crate) nr: usize,
    pub(crate) ntheta: usize,
    pub(crate) values: Vec<f64>,
}

impl Field2D {
    pub fn zeros(nr: usize, ntheta: usize) -> Self {
        Self {
            nr,
            ntheta,
            values: vec![0.0; nr * ntheta],
        }
    }

    /// Sample f(r, θ) at the grid nodes.
    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let nt = grid.ntheta();
        let mut values = Vec::with_capacity(grid.nr() * nt);
        for r in &grid.r_nodes {
            for th in &grid.theta_nodes {
                values.push(f(*r, *th));
            }
        }
        Self {
            nr: grid.nr(),
            ntheta: nt,
            values,
        }
    }

    pub fn from_values(nr: usize, ntheta: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nr * ntheta {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                nr,
                ntheta
            )));
        }
        Ok(Self { nr, ntheta, values })
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nr && j < self.ntheta);
        i * self.ntheta + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.values[k] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Field with the θ bookkeeping reversed, matching `Grid2D::reversed_theta`.
    pub fn reverse_theta(&self) -> Field2D {
        let mut f = self.clone();
        for i in 0..self.nr {
            f.values[i * self.ntheta..(i + 1) * self.ntheta].reverse();
        }
        f
    }
}

/// Quadrature approximation of ∫ u dx over the annulus.
pub fn integrate(grid: &Grid2D, field: &Field2D) -> Result<f64> {
    grid.check_field(field)?;
    Ok(compensated_sum(
        grid.weights
            .iter()
            .zip(&field.values)
            .map(|(w, v)| w * v),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    #[test]
    fn sphere_surface_closed_forms() {
        assert_abs_diff_eq!(sphere_surface(0), 2.0, epsilon = 1e-14);
        assert_relative_eq!(sphere_surface(1), 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_surface(2), 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_surface(3), 2.0 * PI * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_surface(4), 8.0 * PI * PI / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn latitude_marginal_recovers_sphere_surface() {
        // 2 ω_{N-2} ∫_0^{π/2} (cos θ)^{N-2} dθ = ω_{N-1}: integrating the
        // reduced measure over θ must reproduce the full sphere area.
        let rule = QuadratureRule::composite_lobatto(0.0, HALF_PI, 257).unwrap();
        for dim in 3..=8u32 {
            let marginal = 2.0
                * sphere_surface(dim - 2)
                * rule.integrate(|t| cos_theta(t).powi(dim as i32 - 2));
            assert_relative_eq!(marginal, sphere_surface(dim - 1), max_relative = 1e-13);
        }
    }

    #[test]
    fn spec_rejects_bad_parameters() {
        assert!(AnnulusSpec::new(2, 1.0, 2.0, 0.0).is_err());
        assert!(AnnulusSpec::new(3, 0.0, 2.0, 0.0).is_err());
        assert!(AnnulusSpec::new(3, 2.0, 1.0, 0.0).is_err());
        assert!(AnnulusSpec::new(3, 1.0, 2.0, -0.5).is_err());
        assert!(AnnulusSpec::new(3, 1.0, f64::INFINITY, 0.0).is_err());
        assert!(AnnulusSpec::new(3, 1.0, 2.0, 0.0).is_ok());
    }

    #[test]
    fn panel_layout_hits_exact_node_counts() {
        // 255 intervals over 17 panels of 15; 127 over 1x15 + 8x14; 120 over
        // 8x15; 256 over 4x15 + 14x14.
        assert_eq!(panelize(256), vec![15; 17]);
        let p128 = panelize(128);
        assert_eq!(p128.iter().sum::<usize>(), 127);
        assert_eq!(p128.iter().filter(|&&c| c == 15).count(), 1);
        assert_eq!(p128.iter().filter(|&&c| c == 14).count(), 8);
        assert_eq!(panelize(121), vec![15; 8]);
        let p257 = panelize(257);
        assert_eq!(p257.iter().sum::<usize>(), 256);
        for c in panelize(257) {
            assert!(c >= 7 && c <= 15);
        }
        for n in 8..=400 {
            let counts = panelize(n);
            assert_eq!(counts.iter().sum::<usize>(), n - 1);
            for c in counts {
                assert!((7..=15).contains(&c), "n = {n} gave panel order {}", c + 1);
            }
        }
    }

    #[test]
    fn composite_rule_nodes_and_weights_are_sane() {
        for n in [8, 17, 121, 128, 256, 257] {
            let rule = QuadratureRule::composite_lobatto(2.0, 3.0, n).unwrap();
            assert_eq!(rule.len(), n);
            assert_eq!(rule.nodes[0], 2.0);
            assert_eq!(*rule.nodes.last().unwrap(), 3.0);
            for i in 1..n {
                assert!(rule.nodes[i] > rule.nodes[i - 1]);
            }
            for w in &rule.weights {
                assert!(*w > 0.0);
            }
            assert_abs_diff_eq!(rule.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn composite_rule_exact_through_degree_13() {
        // Worst case is the minimum panel order 8, exact through 2*8 - 3.
        let rule = QuadratureRule::composite_lobatto(0.0, 1.0, 17).unwrap();
        for d in 0..=13i32 {
            let got = rule.integrate(|x| x.powi(d));
            assert_relative_eq!(got, 1.0 / (d as f64 + 1.0), max_relative = 1e-13);
        }
    }

    #[test]
    fn grid_weights_sum_to_annulus_volume() {
        for dim in 3..=8u32 {
            let spec = AnnulusSpec::new(dim, 1.0, 2.0, 0.0).unwrap();
            let grid = build_grid(&spec, 32, 32).unwrap();
            let total = compensated_sum(grid.weights.iter().copied());
            assert_relative_eq!(total, spec.volume(), max_relative = 1e-12);
        }
    }

    #[test]
    fn volume_n3_matches_closed_form() {
        let spec = AnnulusSpec::new(3, 1.0, 2.0, 0.0).unwrap();
        let grid = build_grid(&spec, 64, 64).unwrap();
        let one = Field2D::from_fn(&grid, |_, _| 1.0);
        assert_relative_eq!(
            integrate(&grid, &one).unwrap(),
            28.0 * PI / 3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn volume_n5_matches_closed_form() {
        let spec = AnnulusSpec::new(5, 2.0, 3.0, 1.0).unwrap();
        let grid = build_grid(&spec, 48, 40).unwrap();
        let one = Field2D::from_fn(&grid, |_, _| 1.0);
        let exact = (8.0 * PI * PI / 3.0) * (243.0 - 32.0) / 5.0;
        assert_relative_eq!(integrate(&grid, &one).unwrap(), exact, max_relative = 1e-12);
    }

    #[test]
    fn radial_moment_n3() {
        // ∫ |x| dx over 1 < |x| < 2 in R^3: 4π (2^4 - 1)/4 = 15π.
        let spec = AnnulusSpec::new(3, 1.0, 2.0, 0.0).unwrap();
        let grid = build_grid(&spec, 32, 32).unwrap();
        let f = Field2D::from_fn(&grid, |r, _| r);
        assert_relative_eq!(integrate(&grid, &f).unwrap(), 15.0 * PI, max_relative = 1e-12);
    }

    #[test]
    fn half_latitude_indicator_integrates_spectrally() {
        // 121 θ nodes put a panel joint exactly at π/4. An indicator of
        // θ < π/4 set to the one-sided mean 1/2 at the joint integrates with
        // panel-interior smoothness: both adjoining panels see a smooth
        // integrand, and the joint's merged weight splits evenly because the
        // panels share width and order.
        let spec = AnnulusSpec::new(3, 1.0, 2.0, 0.0).unwrap();
        let grid = build_grid(&spec, 32, 121).unwrap();
        let quarter = PI / 4.0;
        let j_mid = (0..grid.ntheta())
            .min_by(|a, b| {
                (grid.theta_nodes[*a] - quarter)
                    .abs()
                    .total_cmp(&(grid.theta_nodes[*b] - quarter).abs())
            })
            .unwrap();
        assert_abs_diff_eq!(grid.theta_nodes[j_mid], quarter, epsilon = 1e-12);
        let mut f = Field2D::zeros(32, 121);
        for i in 0..32 {
            for j in 0..121 {
                let v = if j < j_mid {
                    1.0
                } else if j == j_mid {
                    0.5
                } else {
                    0.0
                };
                f.set(i, j, v);
            }
        }
        let exact = (28.0 * PI / 3.0) * (2.0f64.sqrt() / 2.0);
        assert_relative_eq!(integrate(&grid, &f).unwrap(), exact, max_relative = 1e-12);
    }

    #[test]
    fn weights_vanish_only_on_the_axis() {
        let spec = AnnulusSpec::new(4, 1.0, 2.0, 0.5).unwrap();
        let grid = build_grid(&spec, 16, 16).unwrap();
        let nt = grid.ntheta();
        assert_eq!(*grid.theta_nodes.last().unwrap(), HALF_PI);
        for i in 0..grid.nr() {
            for j in 0..nt {
                let w = grid.weights[i * nt + j];
                if j == nt - 1 {
                    assert_eq!(w, 0.0, "axis weight must vanish exactly");
                } else {
                    assert!(w > 0.0, "interior weight must be positive");
                }
            }
        }
        // Boundary radial rows keep positive 1D weight.
        assert!(grid.r_weights[0] > 0.0);
        assert!(*grid.r_weights.last().unwrap() > 0.0);
        assert_eq!(grid.r_nodes[0], 1.0);
        assert_eq!(*grid.r_nodes.last().unwrap(), 2.0);
    }

    #[test]
    fn integrate_is_linear() {
        let spec = AnnulusSpec::new(3, 1.0, 2.0, 0.0).unwrap();
        let grid = build_grid(&spec, 24, 24).unwrap();
        let u = Field2D::from_fn(&grid, |r, t| (r * t).sin() + 0.3);
        let v = Field2D::from_fn(&grid, |r, t| r * r - t);
        let (a, b) = (1.7, -0.4);
        let combo = Field2D::from_values(
            24,
            24,
            u.values
                .iter()
                .zip(&v.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
        .unwrap();
        let lhs = integrate(&grid, &combo).unwrap();
        let rhs = a * integrate(&grid, &u).unwrap() + b * integrate(&grid, &v).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn integrate_rejects_mismatched_field() {
        let spec = AnnulusSpec::new(3, 1.0, 2.0, 0.0).unwrap();
        let grid = build_grid(&spec, 16, 16).unwrap();
        let f = Field2D::zeros(16, 8);
        assert!(matches!(
            integrate(&grid, &f),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn reversed_theta_preserves_integrals() {
        let spec = AnnulusSpec::new(5, 2.0, 3.0, 1.0).unwrap();
        let grid = build_grid(&spec, 20, 20).unwrap();
        let rev = grid.reversed_theta();
        assert!(!grid.theta_descending());
        assert!(rev.theta_descending());
        let f = Field2D::from_fn(&grid, |r, t| (r - 2.5).exp() * (1.0 + t * t));
        let g = Field2D::from_fn(&rev, |r, t| (r - 2.5).exp() * (1.0 + t * t));
        assert_eq!(f.reverse_theta().values, g.values);
        let a = integrate(&grid, &f).unwrap();
        let b = integrate(&rev, &g).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-14 * a.abs());
    }

    #[test]
    fn density_times_1d_weights_recovers_grid_weight() {
        let spec = AnnulusSpec::new(6, 1.5, 2.5, 2.0).unwrap();
        let grid = build_grid(&spec, 16, 16).unwrap();
        for i in 0..grid.nr() {
            for j in 0..grid.ntheta() {
                let w = grid.density(i, j) * grid.r_weights[i] * grid.theta_weights[j];
                assert_relative_eq!(w, grid.weights[grid.idx(i, j)], max_relative = 1e-14);
            }
        }
    }
}

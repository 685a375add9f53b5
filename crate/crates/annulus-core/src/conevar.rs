//! Cone-constrained 2D variational engine: the discrete energy and its exact
//! gradient, metric projection onto the admissible cone (nonnegative, θ-
//! nonincreasing fields), fibering-map maximization along rays, the
//! symmetry-breaking path test, and the mountain-pass algorithm producing the
//! candidate critical level.

use crate::geometry::{AnnulusSpec, Field2D, Grid2D};
use crate::nonlinearity::{eval_f, eval_primitive, NonlinearitySpec};
use crate::radial::{solve_radial, RadialOptions, RadialProfile};
use crate::util::{compensated_sum, fd_weights};
use crate::{Error, Result};

/// A field certified to lie in the discrete cone: values ≥ 0 everywhere and
/// nonincreasing in θ along every r-row.
#[derive(Debug, Clone)]
pub struct ConeField {
    pub(crate) field: Field2D,
}

impl ConeField {
    /// Borrow the underlying field.
    pub fn field(&self) -> &Field2D {
        &self.field
    }

    /// Unwrap into the underlying field.
    pub fn into_field(self) -> Field2D {
        self.field
    }
}

/// Three-point first-derivative stencils along one coordinate line: centered
/// at interior nodes, one-sided at the two ends, built on the actual
/// (non-uniform) node positions so the formula is exact for quadratics.
struct LineStencil {
    starts: Vec<usize>,
    coeffs: Vec<[f64; 3]>,
}

impl LineStencil {
    fn new(nodes: &[f64]) -> Self {
        let n = nodes.len();
        let mut starts = Vec::with_capacity(n);
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            let start = i.saturating_sub(1).min(n - 3);
            let w = fd_weights(nodes[i], &nodes[start..start + 3], 1);
            starts.push(start);
            coeffs.push([w[0], w[1], w[2]]);
        }
        LineStencil { starts, coeffs }
    }
}

/// Precomputed per-grid machinery shared by the energy, gradient, metric
/// solve, and projection.
struct Ops<'a> {
    grid: &'a Grid2D,
    lambda: f64,
    st_r: LineStencil,
    st_t: LineStencil,
}

impl<'a> Ops<'a> {
    fn new(grid: &'a Grid2D, annulus: &AnnulusSpec) -> Self {
        Ops {
            grid,
            lambda: annulus.lambda(),
            st_r: LineStencil::new(grid.r_nodes()),
            st_t: LineStencil::new(grid.theta_nodes()),
        }
    }

    fn nr(&self) -> usize {
        self.grid.nr()
    }

    fn nt(&self) -> usize {
        self.grid.ntheta()
    }

    /// Reject fields that do not vanish on the two r-boundary circles.
    fn check_boundary(&self, field: &Field2D) -> Result<()> {
        let tol = 1e-12 * (1.0 + field.max_abs());
        for j in 0..self.nt() {
            for i in [0, self.nr() - 1] {
                if field.get(i, j).abs() > tol {
                    return Err(Error::BoundaryViolation(format!(
                        "field must vanish at the radial boundary, found {:e} at node ({i},{j})",
                        field.get(i, j)
                    )));
                }
            }
        }
        Ok(())
    }

    fn d_r(&self, field: &Field2D, i: usize, j: usize) -> f64 {
        let s = self.st_r.starts[i];
        let c = &self.st_r.coeffs[i];
        c[0] * field.get(s, j) + c[1] * field.get(s + 1, j) + c[2] * field.get(s + 2, j)
    }

    fn d_t(&self, field: &Field2D, i: usize, j: usize) -> f64 {
        let s = self.st_t.starts[j];
        let c = &self.st_t.coeffs[j];
        c[0] * field.get(i, s) + c[1] * field.get(i, s + 1) + c[2] * field.get(i, s + 2)
    }

    /// J_h(u) = Σ w_ij [½(D_r u)² + ½(D_θ u)²/r² + ½λu² − F(r,u)].
    fn energy(&self, field: &Field2D, nonlin: &NonlinearitySpec) -> Result<f64> {
        self.grid.check_field(field)?;
        self.check_boundary(field)?;
        let mut terms = Vec::with_capacity(field.len());
        for i in 0..self.nr() {
            let r = self.grid.r_nodes()[i];
            for j in 0..self.nt() {
                let w = self.grid.weights()[self.grid.idx(i, j)];
                let u = field.get(i, j);
                let dr = self.d_r(field, i, j);
                let dt = self.d_t(field, i, j);
                let big_f = eval_primitive(nonlin, r, u)?;
                terms.push(
                    w * (0.5 * dr * dr + 0.5 * dt * dt / (r * r) + 0.5 * self.lambda * u * u
                        - big_f),
                );
            }
        }
        Ok(compensated_sum(terms))
    }

    /// Exact coefficient-wise derivative of J_h; boundary r-rows zeroed.
    fn gradient(&self, field: &Field2D, nonlin: &NonlinearitySpec) -> Result<Field2D> {
        self.grid.check_field(field)?;
        self.check_boundary(field)?;
        let nr = self.nr();
        let nt = self.nt();
        let mut out = Field2D::zeros(nr, nt);
        for i in 0..nr {
            let r = self.grid.r_nodes()[i];
            for j in 0..nt {
                let w = self.grid.weights()[self.grid.idx(i, j)];
                // Adjoint of D_r against w·(D_r u).
                let a = w * self.d_r(field, i, j);
                let sr = self.st_r.starts[i];
                let cr = &self.st_r.coeffs[i];
                for (k, c) in cr.iter().enumerate() {
                    let v = out.get(sr + k, j) + c * a;
                    out.set(sr + k, j, v);
                }
                // Adjoint of D_θ against (w/r²)·(D_θ u).
                let b = w / (r * r) * self.d_t(field, i, j);
                let st = self.st_t.starts[j];
                let ct = &self.st_t.coeffs[j];
                for (k, c) in ct.iter().enumerate() {
                    let v = out.get(i, st + k) + c * b;
                    out.set(i, st + k, v);
                }
                let f = eval_f(nonlin, r, field.get(i, j))?;
                let v = out.get(i, j) + w * (self.lambda * field.get(i, j) - f);
                out.set(i, j, v);
            }
        }
        for j in 0..nt {
            out.set(0, j, 0.0);
            out.set(nr - 1, j, 0.0);
        }
        Ok(out)
    }

    /// Quadratic part A(u) = Σ w [(D_r u)² + (D_θ u)²/r² + λu²]; the squared
    /// discrete H¹_λ norm.
    fn quad_form(&self, field: &Field2D) -> f64 {
        let mut terms = Vec::with_capacity(field.len());
        for i in 0..self.nr() {
            let r = self.grid.r_nodes()[i];
            for j in 0..self.nt() {
                let w = self.grid.weights()[self.grid.idx(i, j)];
                let u = field.get(i, j);
                let dr = self.d_r(field, i, j);
                let dt = self.d_t(field, i, j);
                terms.push(w * (dr * dr + dt * dt / (r * r) + self.lambda * u * u));
            }
        }
        compensated_sum(terms)
    }

    /// Weighted pairing Σ w·u·f(r,u); for a single pure power this is the
    /// p-homogeneous coefficient of the fibering map.
    fn forcing_pairing(&self, field: &Field2D, nonlin: &NonlinearitySpec) -> Result<f64> {
        let mut terms = Vec::with_capacity(field.len());
        for i in 0..self.nr() {
            let r = self.grid.r_nodes()[i];
            for j in 0..self.nt() {
                let w = self.grid.weights()[self.grid.idx(i, j)];
                let u = field.get(i, j);
                terms.push(w * u * eval_f(nonlin, r, u)?);
            }
        }
        Ok(compensated_sum(terms))
    }

    fn w_norm(&self, field: &Field2D) -> f64 {
        let w = self.grid.weights();
        compensated_sum(
            field
                .values()
                .iter()
                .zip(w)
                .map(|(v, w)| w * v * v),
        )
        .max(0.0)
        .sqrt()
    }

    /// Apply the discrete H¹_λ operator L = D_rᵀ(w∘D_r·) + D_θᵀ((w/r²)∘D_θ·)
    /// + λ w∘·, restricted to the unpinned coefficients (pinned rows are
    /// zeroed on output; inputs are expected zero there).
    fn h1_apply(&self, z: &Field2D, pinned: &[bool], out: &mut Field2D) {
        let nr = self.nr();
        let nt = self.nt();
        out.values_mut().fill(0.0);
        for i in 0..nr {
            let r = self.grid.r_nodes()[i];
            for j in 0..nt {
                let w = self.grid.weights()[self.grid.idx(i, j)];
                let a = w * self.d_r(z, i, j);
                let sr = self.st_r.starts[i];
                let cr = &self.st_r.coeffs[i];
                for (k, c) in cr.iter().enumerate() {
                    let v = out.get(sr + k, j) + c * a;
                    out.set(sr + k, j, v);
                }
                let b = w / (r * r) * self.d_t(z, i, j);
                let st = self.st_t.starts[j];
                let ct = &self.st_t.coeffs[j];
                for (k, c) in ct.iter().enumerate() {
                    let v = out.get(i, st + k) + c * b;
                    out.set(i, st + k, v);
                }
                let v = out.get(i, j) + w * self.lambda * z.get(i, j);
                out.set(i, j, v);
            }
        }
        for (v, p) in out.values_mut().iter_mut().zip(pinned) {
            if *p {
                *v = 0.0;
            }
        }
    }

    /// Visit every ordered coefficient pair (a, b, v) of the H¹_λ form:
    /// the full quadratic form is Σ v·z[a]·z[b] over the emitted triples.
    fn h1_pairs(&self, mut emit: impl FnMut(usize, usize, f64)) {
        let nr = self.nr();
        let nt = self.nt();
        for i in 0..nr {
            let r = self.grid.r_nodes()[i];
            for j in 0..nt {
                let w = self.grid.weights()[self.grid.idx(i, j)];
                let sr = self.st_r.starts[i];
                let cr = &self.st_r.coeffs[i];
                for (k1, c1) in cr.iter().enumerate() {
                    for (k2, c2) in cr.iter().enumerate() {
                        emit(
                            self.grid.idx(sr + k1, j),
                            self.grid.idx(sr + k2, j),
                            w * c1 * c2,
                        );
                    }
                }
                let st = self.st_t.starts[j];
                let ct = &self.st_t.coeffs[j];
                for (k1, c1) in ct.iter().enumerate() {
                    for (k2, c2) in ct.iter().enumerate() {
                        emit(
                            self.grid.idx(i, st + k1),
                            self.grid.idx(i, st + k2),
                            w / (r * r) * c1 * c2,
                        );
                    }
                }
                let c = self.grid.idx(i, j);
                emit(c, c, w * self.lambda);
            }
        }
    }

    /// Pin mask holding only the Dirichlet r-boundary rows.
    fn boundary_pins(&self) -> Vec<bool> {
        let nr = self.nr();
        let nt = self.nt();
        let mut pinned = vec![false; nr * nt];
        for j in 0..nt {
            pinned[self.grid.idx(0, j)] = true;
            pinned[self.grid.idx(nr - 1, j)] = true;
        }
        pinned
    }

    /// Exact solve of the face-restricted H¹_λ system: aggregate the
    /// operator over the face blocks (tied runs sum their rows and
    /// columns; pinned coefficients drop out), factor the reduced banded
    /// system, and expand the block solution back to coefficients. Block
    /// ids are lexicographic in (r-row, θ-run), so the aggregated
    /// couplings stay banded and the direct factor is cheap.
    fn h1_solve(&self, rhs: &Field2D, face: &Face) -> Field2D {
        let nb = face.blocks;
        let mut z = Field2D::zeros(self.nr(), self.nt());
        if nb == 0 {
            return z;
        }
        let mut bw = 0usize;
        self.h1_pairs(|a, b, _| {
            let (ia, ib) = (face.id[a], face.id[b]);
            if ia != usize::MAX && ib != usize::MAX {
                bw = bw.max(ia.abs_diff(ib));
            }
        });
        let mut band = vec![vec![0.0f64; nb]; bw + 1];
        self.h1_pairs(|a, b, v| {
            let (ia, ib) = (face.id[a], face.id[b]);
            if ia == usize::MAX || ib == usize::MAX || ia < ib {
                return;
            }
            band[ia - ib][ib] += v;
        });
        let mut x = vec![0.0f64; nb];
        for (node, &bid) in face.id.iter().enumerate() {
            if bid != usize::MAX {
                x[bid] += rhs.values()[node];
            }
        }
        let chol = BandChol::factor(band, bw);
        chol.solve_into(&mut x);
        for (zv, &bid) in z.values_mut().iter_mut().zip(&face.id) {
            if bid != usize::MAX {
                *zv = x[bid];
            }
        }
        z
    }

    /// Metric projection onto the cone in the quadrature-weighted norm.
    fn project(&self, field: &Field2D) -> Field2D {
        let nr = self.nr();
        let nt = self.nt();
        let descending = self.grid.theta_descending();
        let mut x = field.clone();
        let mut p = vec![0.0f64; nr * nt];
        let mut q = vec![0.0f64; nr * nt];
        let mut row_vals = vec![0.0f64; nt];
        let mut row_wts = vec![0.0f64; nt];
        let mut row_orig = vec![0.0f64; nt];
        for _ in 0..50_000 {
            let prev = x.clone();
            // (a) monotone-decreasing regression per r-row on x + p.
            let mut y = x.clone();
            for (v, pc) in y.values_mut().iter_mut().zip(&p) {
                *v += pc;
            }
            for i in 0..nr {
                for j in 0..nt {
                    // Work in ascending-θ order regardless of storage.
                    let jj = if descending { nt - 1 - j } else { j };
                    row_vals[j] = y.get(i, jj);
                    row_wts[j] = self.grid.weights()[self.grid.idx(i, jj)];
                }
                row_orig.copy_from_slice(&row_vals);
                weighted_pava_decreasing(&mut row_vals, &row_wts, &row_orig);
                for j in 0..nt {
                    let jj = if descending { nt - 1 - j } else { j };
                    y.set(i, jj, row_vals[j]);
                }
            }
            for k in 0..nr * nt {
                p[k] += x.values()[k] - y.values()[k];
            }
            // (b) nonnegative clamp on y + q.
            let mut xn = y.clone();
            for (v, qc) in xn.values_mut().iter_mut().zip(&q) {
                *v += qc;
            }
            for v in xn.values_mut().iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            for k in 0..nr * nt {
                q[k] += y.values()[k] - xn.values()[k];
            }
            x = xn;
            let mut diff = Vec::with_capacity(nr * nt);
            for k in 0..nr * nt {
                let d = x.values()[k] - prev.values()[k];
                diff.push(self.grid.weights()[k] * d * d);
            }
            if compensated_sum(diff).max(0.0).sqrt() <= 1e-12 {
                break;
            }
        }
        // Enforce the constraints exactly: cascade-min along ascending θ
        // (changes bounded by the stop tolerance), then exact clamp.
        for i in 0..nr {
            let mut last = f64::INFINITY;
            for j in 0..nt {
                let jj = if descending { nt - 1 - j } else { j };
                let v = x.get(i, jj).min(last).max(0.0);
                x.set(i, jj, v);
                last = v;
            }
        }
        x
    }
}

/// Banded Cholesky factor of a symmetric positive definite matrix stored
/// by subdiagonals: `l[d][j]` holds the entry on row `j + d`, column `j`.
struct BandChol {
    bw: usize,
    l: Vec<Vec<f64>>,
}

impl BandChol {
    /// Factor in place. A nonpositive pivot (a degenerate coefficient with
    /// no quadrature support) is replaced by an identity pivot, which
    /// leaves the factor positive definite.
    fn factor(mut band: Vec<Vec<f64>>, bw: usize) -> Self {
        let n = band[0].len();
        for j in 0..n {
            let start = j.saturating_sub(bw);
            let mut s = band[0][j];
            for k in start..j {
                s -= band[j - k][k] * band[j - k][k];
            }
            let piv = if s > 0.0 { s.sqrt() } else { 1.0 };
            band[0][j] = piv;
            for i in j + 1..(j + bw + 1).min(n) {
                let d = i - j;
                let mut s = band[d][j];
                for k in i.saturating_sub(bw)..j {
                    s -= band[i - k][k] * band[j - k][k];
                }
                band[d][j] = s / piv;
            }
        }
        BandChol { bw, l: band }
    }

    /// Solve L Lᵀ x = v in place.
    fn solve_into(&self, v: &mut [f64]) {
        let n = v.len();
        let bw = self.bw;
        for i in 0..n {
            let mut s = v[i];
            for d in 1..=bw.min(i) {
                s -= self.l[d][i - d] * v[i - d];
            }
            v[i] = s / self.l[0][i];
        }
        for i in (0..n).rev() {
            let mut s = v[i];
            for d in 1..=bw.min(n - 1 - i) {
                s -= self.l[d][i] * v[i + d];
            }
            v[i] = s / self.l[0][i];
        }
    }
}

/// Active face of the cone at an iterate: runs of θ-tied coefficients move
/// as one degree of freedom, and pinned coefficients do not move at all.
/// Restricting the descent metric to this subspace keeps small steps
/// feasible, so the projection cannot fold a descent direction into ascent.
struct Face {
    /// Block id per node, usize::MAX for pinned nodes.
    id: Vec<usize>,
    /// Number of blocks.
    blocks: usize,
}

impl Face {
    /// Partition at u: walk each r-row in ascending θ and merge consecutive
    /// coefficients whose values tie into one block. A run containing a
    /// pinned coefficient is pinned whole: a block tied to a held
    /// coefficient cannot move without the projection folding the pair.
    /// Separating a tied run is never done here; that is the release step,
    /// taken only where the tie multipliers demand it.
    fn at(grid: &Grid2D, u: &Field2D, pinned: &[bool]) -> Self {
        let nr = u.nr();
        let nt = u.ntheta();
        let descending = grid.theta_descending();
        let tie_tol = 1e-11 * u.max_abs();
        let mut id = vec![usize::MAX; nr * nt];
        let mut blocks = 0usize;
        let mut run: Vec<usize> = Vec::new();
        for i in 0..nr {
            let mut prev = f64::NAN;
            for jj in 0..=nt {
                let (node, v) = if jj < nt {
                    let j = if descending { nt - 1 - jj } else { jj };
                    (grid.idx(i, j), u.get(i, j))
                } else {
                    (usize::MAX, f64::NAN)
                };
                let tied = (prev - v).abs() <= tie_tol;
                if !tied {
                    // Close the current run: one block, or held whole.
                    if !run.is_empty() {
                        if !run.iter().any(|&m| pinned[m]) {
                            for &m in &run {
                                id[m] = blocks;
                            }
                            blocks += 1;
                        }
                        run.clear();
                    }
                }
                if node != usize::MAX {
                    run.push(node);
                }
                prev = v;
            }
        }
        Face { id, blocks }
    }
}

/// One tie-separation candidate: moving `members` together by `sign`
/// changes the energy at first order by `mu` (negative) per unit step and
/// stays inside the cone for steps below `headroom`.
struct TieRelease {
    members: Vec<usize>,
    sign: f64,
    mu: f64,
    headroom: f64,
}

/// Scan the tied θ-runs of u for descent moves no face direction can
/// express. A proper prefix of a run whose summed gradient is negative
/// lowers the energy by rising away from the rest of the run; a proper
/// suffix whose summed gradient is positive lowers it by dropping; a held
/// run may also rise whole, which the face cannot do. The headroom is the
/// value gap the moving part may cross before leaving the cone: to the
/// previous node for a rise, to the next node (or zero at the row end) for
/// a drop. Boundary rows are fixed and skipped. Only the strongest split
/// of each run and each direction is reported.
fn tie_releases(grid: &Grid2D, u: &Field2D, g: &Field2D, pinned: &[bool]) -> Vec<TieRelease> {
    let nr = u.nr();
    let nt = u.ntheta();
    let descending = grid.theta_descending();
    let tie_tol = 1e-11 * u.max_abs();
    let gv = g.values();
    let mut out = Vec::new();
    let mut scan_run = |members: &[usize], run_v: f64, pred_v: f64, succ_v: f64| {
        let held = members.iter().any(|&m| pinned[m]);
        let mut acc = 0.0f64;
        let (mut up_cut, mut up_mu) = (0usize, 0.0f64);
        for (m, &idx) in members.iter().enumerate() {
            acc += gv[idx];
            if acc < up_mu && (held || m + 1 < members.len()) {
                up_mu = acc;
                up_cut = m;
            }
        }
        if up_mu < 0.0 && pred_v - run_v > 0.0 {
            out.push(TieRelease {
                members: members[..=up_cut].to_vec(),
                sign: 1.0,
                mu: up_mu,
                headroom: pred_v - run_v,
            });
        }
        let total = acc;
        let mut acc = 0.0f64;
        let (mut down_cut, mut down_mu) = (0usize, 0.0f64);
        for (m, &idx) in members.iter().enumerate().take(members.len() - 1) {
            acc += gv[idx];
            if acc - total < down_mu {
                down_mu = acc - total;
                down_cut = m;
            }
        }
        if down_mu < 0.0 && run_v - succ_v > 0.0 {
            out.push(TieRelease {
                members: members[down_cut + 1..].to_vec(),
                sign: -1.0,
                mu: down_mu,
                headroom: run_v - succ_v,
            });
        }
    };
    for i in 1..nr - 1 {
        let mut run: Vec<usize> = Vec::new();
        let mut run_v = 0.0f64;
        let mut pred_v = f64::INFINITY;
        let mut prev = f64::NAN;
        for jj in 0..=nt {
            let (node, v) = if jj < nt {
                let j = if descending { nt - 1 - jj } else { jj };
                (grid.idx(i, j), u.get(i, j))
            } else {
                (usize::MAX, f64::NAN)
            };
            let tied = (prev - v).abs() <= tie_tol;
            if !tied && !run.is_empty() {
                let succ_v = if node == usize::MAX { 0.0 } else { v };
                scan_run(&run, run_v, pred_v, succ_v);
                pred_v = run_v;
                run.clear();
            }
            if node != usize::MAX {
                if run.is_empty() {
                    run_v = v;
                }
                run.push(node);
            }
            prev = v;
        }
    }
    out
}

/// Weighted isotonic regression for a nonincreasing target, by pool-adjacent-
/// violators. Zero-weight positions are excluded from pooling (their value is
/// free for the least-squares cost) and afterwards set to the largest
/// feasible value not exceeding their input, keeping the row monotone.
/// Zero-weight positions are assumed to sit at the tail of the row (the
/// θ = π/2 axis node), which is where the latitude weight vanishes.
fn weighted_pava_decreasing(values: &mut [f64], weights: &[f64], original: &[f64]) {
    let n = values.len();
    // Pools over weighted positions: (end_index_exclusive, weight, mean).
    let mut pools: Vec<(usize, f64, f64)> = Vec::with_capacity(n);
    for j in 0..n {
        if weights[j] == 0.0 {
            continue;
        }
        let mut w = weights[j];
        let mut m = values[j];
        // Merge while the new pool mean exceeds the previous pool's mean.
        while let Some(&(_, pw, pm)) = pools.last() {
            if m > pm {
                let tw = pw + w;
                m = (pw * pm + w * m) / tw;
                w = tw;
                pools.pop();
            } else {
                break;
            }
        }
        pools.push((j + 1, w, m));
    }
    let mut pool_iter = pools.iter();
    let mut current = pool_iter.next();
    let mut last = f64::INFINITY;
    for j in 0..n {
        if weights[j] == 0.0 {
            values[j] = original[j].min(last);
        } else {
            while let Some(&(end, _, _)) = current {
                if j < end {
                    break;
                }
                current = pool_iter.next();
            }
            if let Some(&(_, _, m)) = current {
                values[j] = m;
            }
        }
        last = values[j];
    }
}

/// Discrete energy J_h(u) = Σ w_ij [½(D_r u)² + ½(D_θ u)²/r² + ½λu² − F(u)]
/// with second-order three-point differences (one-sided at the θ-boundaries,
/// where the natural condition holds variationally).
pub fn discrete_energy(
    field: &Field2D,
    grid: &Grid2D,
    nonlin: &NonlinearitySpec,
    annulus: &AnnulusSpec,
) -> Result<f64> {
    Ops::new(grid, annulus).energy(field, nonlin)
}

/// Exact coefficient-wise derivative of the discrete energy; the directional
/// derivative along φ is the plain dot product ⟨grad, φ⟩. Boundary r-rows are
/// forced to zero (Dirichlet coefficients are not free).
pub fn discrete_gradient(
    field: &Field2D,
    grid: &Grid2D,
    nonlin: &NonlinearitySpec,
    annulus: &AnnulusSpec,
) -> Result<Field2D> {
    Ops::new(grid, annulus).gradient(field, nonlin)
}

/// Metric projection onto the cone {v ≥ 0, v nonincreasing in θ per r-row}
/// in the quadrature-weighted Euclidean metric, by alternating weighted
/// monotone regression and nonnegative clamping with Dykstra correction
/// terms. Total on any field of matching shape.
pub fn project_cone(field: &Field2D, grid: &Grid2D) -> ConeField {
    assert_eq!(
        (field.nr(), field.ntheta()),
        (grid.nr(), grid.ntheta()),
        "field shape must match the grid"
    );
    // λ plays no role in the projection; a zero-λ view keeps the API small.
    let ops = Ops {
        grid,
        lambda: 0.0,
        st_r: LineStencil::new(grid.r_nodes()),
        st_t: LineStencil::new(grid.theta_nodes()),
    };
    ConeField {
        field: ops.project(field),
    }
}

/// Discrete H¹(A) norm: (Σ w_ij [(D_r u)² + (D_θ u)²/r² + u²])^{1/2} with the
/// same three-point stencils as the energy. The zero-order coefficient is 1
/// regardless of the problem's λ; this is the norm, not the energy form.
pub fn discrete_h1_norm(field: &Field2D, grid: &Grid2D) -> f64 {
    assert_eq!(
        (field.nr(), field.ntheta()),
        (grid.nr(), grid.ntheta()),
        "field shape must match the grid"
    );
    let ops = Ops {
        grid,
        lambda: 1.0,
        st_r: LineStencil::new(grid.r_nodes()),
        st_t: LineStencil::new(grid.theta_nodes()),
    };
    ops.quad_form(field).max(0.0).sqrt()
}

/// Interpolate a solved radial profile onto the grid's radial nodes,
/// constant in θ. The result lies in the cone because accepted profiles are
/// nonnegative.
pub fn lift(profile: &RadialProfile, grid: &Grid2D) -> Result<ConeField> {
    let nr = grid.nr();
    let nt = grid.ntheta();
    let mut field = Field2D::zeros(nr, nt);
    for i in 0..nr {
        let v = profile.interp(grid.r_nodes()[i]);
        if v < 0.0 {
            return Err(Error::InadmissibleProfile {
                message: format!("negative interpolated value {v:e} at r={}", grid.r_nodes()[i]),
            });
        }
        for j in 0..nt {
            field.set(i, j, v);
        }
    }
    field.values_mut()[..nt].fill(0.0);
    let last = (nr - 1) * nt;
    field.values_mut()[last..].fill(0.0);
    Ok(ConeField { field })
}

/// Maximum of the fibering map g(t) = J_h(t·direction) over t > 0.
#[derive(Debug, Clone, Copy)]
pub struct FiberingResult {
    t_star: f64,
    g_max: f64,
    bracket: (f64, f64),
    derivative_at_t_star: f64,
}

impl FiberingResult {
    /// Location of the unique maximum along the ray.
    pub fn t_star(&self) -> f64 {
        self.t_star
    }

    /// Energy at the maximum.
    pub fn g_max(&self) -> f64 {
        self.g_max
    }

    /// Sign-change bracket (t_low with g′>0, t_high with g′≤0).
    pub fn bracket(&self) -> (f64, f64) {
        self.bracket
    }

    /// Residual derivative |g′(t_star)| at termination.
    pub fn derivative_at_t_star(&self) -> f64 {
        self.derivative_at_t_star
    }
}

/// Maximize g(t) = J_h(t·direction) over rays in the cone. The derivative
/// g′(t) = t·A − Σ w·φ·f(r, tφ) is available in closed form (A is the squared
/// discrete H¹_λ norm of the direction), so after a sign-change bracket is
/// found by doubling/halving and sharpened by golden-section steps on g, the
/// root is polished by bisection on g′.
pub fn fibering_max(
    direction: &ConeField,
    grid: &Grid2D,
    nonlin: &NonlinearitySpec,
    annulus: &AnnulusSpec,
) -> Result<FiberingResult> {
    let ops = Ops::new(grid, annulus);
    let phi = &direction.field;
    let a = ops.quad_form(phi);
    if a <= 0.0 {
        return Err(Error::ZeroField("fibering direction"));
    }
    // g′(t) with f-saturation treated as "deeply negative" (the forcing term
    // has exploded past floating range, so g is certainly decreasing).
    let scaled = |t: f64| -> Result<Field2D> {
        let mut s = phi.clone();
        for v in s.values_mut().iter_mut() {
            *v *= t;
        }
        Ok(s)
    };
    let gprime = |t: f64| -> Result<f64> {
        match ops.forcing_pairing(&scaled(t)?, nonlin) {
            Ok(pairing) => Ok(t * a - pairing / t),
            Err(Error::Saturation { .. }) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    };

    // Bracket the sign change of g′.
    let mut hi = 1.0f64;
    let mut hi_val = gprime(hi)?;
    let mut doublings = 0;
    while hi_val > 0.0 {
        hi *= 2.0;
        hi_val = gprime(hi)?;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::NoSignChange { t_max: hi });
        }
    }
    let mut lo = hi / 2.0;
    let mut lo_val = gprime(lo)?;
    while lo_val <= 0.0 {
        lo /= 2.0;
        lo_val = gprime(lo)?;
        if lo < 1e-60 {
            return Err(Error::NoSignChange { t_max: hi });
        }
    }
    let bracket = (lo, hi);

    // Golden-section sharpening on g itself narrows the bracket cheaply
    // before the derivative bisection takes over.
    let g_of = |t: f64| -> Result<f64> {
        match ops.energy(&scaled(t)?, nonlin) {
            Ok(v) => Ok(v),
            Err(Error::Saturation { .. }) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    };
    let inv_phi = 0.618_033_988_749_894_9f64;
    let (mut gl, mut gh) = (lo, hi);
    let mut m1 = gh - inv_phi * (gh - gl);
    let mut m2 = gl + inv_phi * (gh - gl);
    let mut f1 = g_of(m1)?;
    let mut f2 = g_of(m2)?;
    for _ in 0..30 {
        if f1 < f2 {
            gl = m1;
            m1 = m2;
            f1 = f2;
            m2 = gl + inv_phi * (gh - gl);
            f2 = g_of(m2)?;
        } else {
            gh = m2;
            m2 = m1;
            f2 = f1;
            m1 = gh - inv_phi * (gh - gl);
            f1 = g_of(m1)?;
        }
    }
    // Re-establish the derivative signs on the narrowed interval.
    let (mut lo, mut hi) = (gl.max(lo), gh.min(hi));
    if gprime(lo)? <= 0.0 || gprime(hi)? > 0.0 {
        // Golden section landed on a flank; fall back to the sign bracket.
        lo = bracket.0;
        hi = bracket.1;
    }

    let tol = 1e-10 * a;
    let mut mid = 0.5 * (lo + hi);
    let mut mid_val = gprime(mid)?;
    for _ in 0..200 {
        if mid_val.abs() <= tol {
            break;
        }
        if mid_val > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        mid_val = gprime(mid)?;
    }
    Ok(FiberingResult {
        t_star: mid,
        g_max: g_of(mid)?,
        bracket,
        derivative_at_t_star: mid_val.abs(),
    })
}

/// Levels compared by the symmetry-breaking path test.
#[derive(Debug, Clone, Copy)]
pub struct PathTestRecord {
    level_perturbed: f64,
    level_radial: f64,
    margin: f64,
}

impl PathTestRecord {
    /// max_t J_h(t·u_rad(1 + τy)).
    pub fn level_perturbed(&self) -> f64 {
        self.level_perturbed
    }

    /// J_h of the lifted radial profile.
    pub fn level_radial(&self) -> f64 {
        self.level_radial
    }

    /// level_radial − level_perturbed; positive margins certify that the
    /// perturbed ray tops out strictly below the radial level.
    pub fn margin(&self) -> f64 {
        self.margin
    }
}

/// Compare the radial energy level with the ray maximum through the
/// perturbed direction u_rad·(1 + τ·y). Requires 0 ≤ τ < 1/(N−1) so the
/// angular factor stays positive and the direction stays in the cone.
pub fn breaking_path_test(
    profile: &RadialProfile,
    tau: f64,
    grid: &Grid2D,
    nonlin: &NonlinearitySpec,
    annulus: &AnnulusSpec,
) -> Result<PathTestRecord> {
    let nf = annulus.dim() as f64;
    if !(0.0..1.0 / (nf - 1.0)).contains(&tau) {
        return Err(Error::invalid(
            "tau",
            format!("must lie in [0, 1/(N-1)) = [0, {:.6}), got {tau}", 1.0 / (nf - 1.0)),
        ));
    }
    let radial = lift(profile, grid)?;
    let level_radial = discrete_energy(&radial.field, grid, nonlin, annulus)?;
    let nt = grid.ntheta();
    let mut perturbed = radial.field.clone();
    for j in 0..nt {
        let t = grid.theta_nodes()[j];
        let s = t.sin();
        let factor = 1.0 + tau * (1.0 - nf * s * s);
        for i in 0..grid.nr() {
            perturbed.set(i, j, radial.field.get(i, j) * factor);
        }
    }
    // Products of a nonnegative radial slice with the positive θ-decreasing
    // factor keep the cone constraints exactly.
    let direction = ConeField { field: perturbed };
    let fib = fibering_max(&direction, grid, nonlin, annulus)?;
    Ok(PathTestRecord {
        level_perturbed: fib.g_max(),
        level_radial,
        margin: level_radial - fib.g_max(),
    })
}

/// Options for the mountain-pass search.
#[derive(Debug, Clone)]
pub struct MountainPassOptions {
    /// Termination threshold on the projected-gradient norm.
    pub tol: f64,
    /// Iteration cap before returning IterationCap with the best candidate.
    pub max_iters: usize,
    /// Number of path segments (the path has this many points plus one).
    pub path_points: usize,
    /// Amplitude of the angular perturbation seeding the path.
    pub tau0: f64,
    /// Radial resolution used for the internal seed solve.
    pub radial_nodes: usize,
}

impl Default for MountainPassOptions {
    fn default() -> Self {
        MountainPassOptions {
            tol: 1e-6,
            max_iters: 5000,
            path_points: 40,
            tau0: 0.05,
            radial_nodes: 2001,
        }
    }
}

/// Candidate mountain-pass critical point.
#[derive(Debug, Clone)]
pub struct MountainPassResult {
    u: ConeField,
    energy: f64,
    grad_norm: f64,
    iterations: usize,
    path_log: Vec<(usize, f64)>,
    is_radial: bool,
    converged: bool,
}

impl MountainPassResult {
    /// The candidate field at the path maximum.
    pub fn u(&self) -> &ConeField {
        &self.u
    }

    /// Candidate level c (energy at the path maximum).
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Projected-gradient norm at termination.
    pub fn grad_norm(&self) -> f64 {
        self.grad_norm
    }

    /// Descent iterations performed.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// (iteration, max-energy-on-path) samples; nonincreasing in energy.
    pub fn path_log(&self) -> &[(usize, f64)] {
        &self.path_log
    }

    /// Whether every r-row oscillates in θ by less than 10⁻⁶·‖u‖_∞.
    pub fn is_radial(&self) -> bool {
        self.is_radial
    }

    /// Whether the projected-gradient criterion was met.
    pub fn converged(&self) -> bool {
        self.converged
    }
}

fn max_theta_oscillation(field: &Field2D) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..field.nr() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..field.ntheta() {
            let v = field.get(i, j);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        worst = worst.max(hi - lo);
    }
    worst
}

/// Cone-constrained mountain-pass search: evolve a discrete path from 0 to a
/// negative-energy endpoint by projected-gradient descent at the running path
/// maximum, with an H¹-preconditioned metric and backtracking line search.
/// Every accepted step is lifted to the crest of its own ray before
/// re-insertion, and the path is redistributed along that ray, so the path
/// maximum stays on the crest manifold and its level decreases monotonically
/// toward the pass level.
pub fn mountain_pass(
    grid: &Grid2D,
    nonlin: &NonlinearitySpec,
    annulus: &AnnulusSpec,
    opts: &MountainPassOptions,
) -> Result<MountainPassResult> {
    if opts.path_points < 4 {
        return Err(Error::invalid("path_points", "need at least 4 path points"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol", "tolerance must be positive"));
    }
    let ops = Ops::new(grid, annulus);
    let nr = grid.nr();
    let nt = grid.ntheta();
    let nf = annulus.dim() as f64;

    // Seed: the radial solution perturbed along the angular mode; fall back
    // to a θ-localized bump when no radial solution brackets.
    let seed_field = match solve_radial(annulus, nonlin, opts.radial_nodes, &RadialOptions::default())
    {
        Ok(profile) => {
            let base = lift(&profile, grid)?;
            let mut f = base.field.clone();
            for j in 0..nt {
                let t = grid.theta_nodes()[j];
                let s = t.sin();
                let factor = 1.0 + opts.tau0 * (1.0 - nf * s * s);
                for i in 0..nr {
                    f.set(i, j, base.field.get(i, j) * factor);
                }
            }
            f
        }
        Err(Error::NoBracket { .. }) => {
            let r0 = annulus.r_inner();
            let width = annulus.r_outer() - r0;
            let mut f = Field2D::from_fn(grid, |r, t| {
                (std::f64::consts::PI * (r - r0) / width).sin().max(0.0) * (2.0 - t.sin())
            });
            for j in 0..nt {
                f.set(0, j, 0.0);
                f.set(nr - 1, j, 0.0);
            }
            f
        }
        Err(e) => return Err(e),
    };
    let seed = project_cone(&seed_field, grid);

    // Fibering along the seed ray fixes the path endpoint and verifies the
    // mountain-pass geometry (positive energy on a small sphere around 0).
    let fib = fibering_max(&seed, grid, nonlin, annulus)?;
    let ray = |t: f64| -> Field2D {
        let mut f = seed.field.clone();
        for v in f.values_mut().iter_mut() {
            *v *= t;
        }
        f
    };
    let witness_t = fib.t_star() / 100.0;
    let witness = ops.energy(&ray(witness_t), nonlin)?;
    if !(witness > 0.0) {
        return Err(Error::GeometryViolated(format!(
            "energy {witness:e} not positive near the origin along the seed ray"
        )));
    }
    let scaled = |f: &Field2D, t: f64| -> Field2D {
        let mut s = f.clone();
        for v in s.values_mut() {
            *v *= t;
        }
        s
    };
    // First ray parameter past the energy zero, with the energy there:
    // geometric expansion, falling back to bisection when the expansion
    // meets the saturation guard before the sign change.
    let past_zero = |f: &Field2D| -> Result<(f64, f64)> {
        let mut last_ok = 1.0f64;
        let mut t = 1.5f64;
        for _ in 0..400 {
            match ops.energy(&scaled(f, t), nonlin) {
                Ok(v) if v <= 0.0 => return Ok((t, v)),
                Ok(_) => {
                    last_ok = t;
                    t *= 1.5;
                }
                Err(Error::Saturation { .. }) => {
                    let (mut lo, mut hi) = (last_ok, t);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        match ops.energy(&scaled(f, mid), nonlin) {
                            Ok(v) if v <= 0.0 => return Ok((mid, v)),
                            Ok(_) => lo = mid,
                            Err(Error::Saturation { .. }) => hi = mid,
                            Err(e) => return Err(e),
                        }
                    }
                    return Err(Error::GeometryViolated(
                        "energy stays positive up to the saturation guard along the ray"
                            .into(),
                    ));
                }
                Err(e) => return Err(e),
            }
        }
        Err(Error::GeometryViolated(
            "energy never crosses zero along the ray".into(),
        ))
    };

    // The iterate u rides the crest manifold: it is the fibering maximum of
    // its own ray, so J_h(u) bounds the pass level from above and every
    // accepted step lowers that bound. The endpoint e sits past the zero of
    // the seed fibering map and stays frozen.
    let mut u = ray(fib.t_star());
    let mut level = ops.energy(&u, nonlin)?;
    let (t_zero, e_level) = past_zero(&u)?;
    let e_frozen = scaled(&u, t_zero);

    // Path rebuild = redistribution + re-insertion in one stroke: samples of
    // the current ray uniform in the ray parameter, the crest itself as an
    // interior node, and the frozen endpoint. Ray energies peak strictly at
    // the crest, so the path maximum is the iterate itself.
    let k_pts = opts.path_points;
    let rebuild = |base: &Field2D,
                   level: f64,
                   t_end: f64|
     -> Result<(Vec<Field2D>, Vec<f64>)> {
        let slots = k_pts - 2;
        let mut path = Vec::with_capacity(k_pts + 2);
        let mut energies = Vec::with_capacity(k_pts + 2);
        let mut crest_in = false;
        for s in 0..=slots {
            let t = t_end * s as f64 / slots as f64;
            if !crest_in && t >= 1.0 {
                path.push(base.clone());
                energies.push(level);
                crest_in = true;
            }
            let f = scaled(base, t);
            let e = if s == 0 { 0.0 } else { ops.energy(&f, nonlin)? };
            path.push(f);
            energies.push(e);
        }
        if !crest_in {
            path.push(base.clone());
            energies.push(level);
        }
        path.push(e_frozen.clone());
        energies.push(e_level);
        Ok((path, energies))
    };

    let mut t_end = t_zero;
    let (mut path, mut energies) = rebuild(&u, level, t_end)?;

    let boundary_pins = ops.boundary_pins();
    let mut path_log: Vec<(usize, f64)> = Vec::new();
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0usize;

    let argmax = |energies: &[f64]| -> usize {
        let mut k = 0usize;
        for (i, e) in energies.iter().enumerate() {
            if *e > energies[k] {
                k = i;
            }
        }
        k
    };
    let chord = |a: &Field2D, b: &Field2D| -> f64 {
        let mut d = b.clone();
        for (v, av) in d.values_mut().iter_mut().zip(a.values()) {
            *v -= av;
        }
        ops.w_norm(&d)
    };
    // Crest of the ray through a field: maximize J along t -> t*f. Scalar
    // multiples of a cone field stay in the cone, so no reprojection is
    // needed. Fields whose ray has no interior maximum report None.
    let crest_of = |f: &Field2D| -> Result<Option<(Field2D, f64)>> {
        if f.max_abs() == 0.0 {
            return Ok(None);
        }
        let cone = ConeField { field: f.clone() };
        match fibering_max(&cone, grid, nonlin, annulus) {
            Ok(fib) => {
                let mut crest = f.clone();
                for v in crest.values_mut() {
                    *v *= fib.t_star;
                }
                match ops.energy(&crest, nonlin) {
                    Ok(e) => Ok(Some((crest, e))),
                    Err(Error::Saturation { .. }) => Ok(None),
                    Err(e) => Err(e),
                }
            }
            Err(Error::NoSignChange { .. }) | Err(Error::ZeroField(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    // Strongest tie release in the preconditioned metric. Candidates are
    // ranked by the displacement of an exact step along them, the same
    // units as the projected-gradient measure, and the winner is returned
    // in subtract orientation with its feasible step cap. None means every
    // candidate sits below tolerance.
    let release_dir = |f: &Field2D, g: &Field2D, pinned: &[bool]| -> Option<(Field2D, f64)> {
        let mut best: Option<(Field2D, f64, f64)> = None;
        for cand in tie_releases(grid, f, g, pinned) {
            let mut d = Field2D::zeros(nr, nt);
            for &m in &cand.members {
                d.values_mut()[m] = cand.sign;
            }
            let mut hd = Field2D::zeros(nr, nt);
            ops.h1_apply(&d, &boundary_pins, &mut hd);
            let dhd: f64 = d.values().iter().zip(hd.values()).map(|(a, b)| a * b).sum();
            let dw = ops.w_norm(&d);
            if !(dhd > 0.0) || dw == 0.0 {
                continue;
            }
            let nu = cand.mu.abs() * dw / dhd;
            let alpha0 = (0.9 * cand.headroom).min(cand.mu.abs() / dhd);
            if nu <= opts.tol || !(alpha0 > 0.0) {
                continue;
            }
            if best.as_ref().map_or(true, |b| nu > b.1) {
                for v in d.values_mut() {
                    *v = -*v;
                }
                best = Some((d, nu, alpha0));
            }
        }
        best.map(|(d, _, a)| (d, a))
    };

    for it in 1..=opts.max_iters {
        iterations = it;

        let k = argmax(&energies);
        if k == 0 || k == path.len() - 1 {
            return Err(Error::GeometryViolated(format!(
                "path maximum {:e} sits at an endpoint: the barrier is not resolved",
                energies[k]
            )));
        }

        let g = ops.gradient(&path[k], nonlin)?;

        // Direction on the active face: the H¹ solve is restricted to
        // coefficients away from the active bound (u = 0 with outward
        // gradient, kept still) and aggregated over tied θ-runs, which move
        // together; a run tied to a held coefficient is held whole. Small
        // steps along -z therefore stay inside the cone and the projection
        // cannot fold any part of the step into first-order ascent.
        let u_scale = path[k].max_abs();
        let mut pinned = boundary_pins.clone();
        for ((p, uv), gv) in pinned
            .iter_mut()
            .zip(path[k].values())
            .zip(g.values())
        {
            if *uv <= 1e-10 * u_scale && *gv > 0.0 {
                *p = true;
            }
        }
        let face = Face::at(grid, &path[k], &pinned);
        let z = ops.h1_solve(&g, &face);

        // Projected stationarity measure: the weighted norm of the move the
        // composite unit step actually produces.
        let mut shifted = path[k].clone();
        for (v, zv) in shifted.values_mut().iter_mut().zip(z.values()) {
            *v -= zv;
        }
        let projected = ops.project(&shifted);
        let mut step = projected.clone();
        for (v, uv) in step.values_mut().iter_mut().zip(path[k].values()) {
            *v -= uv;
        }
        grad_norm = ops.w_norm(&step);

        // Backtracking descent along the preconditioned direction, with each
        // trial lifted back to the crest of its ray; acceptance compares
        // crest energies, which therefore decrease monotonically. The step is
        // capped by the adjacent chord lengths so the maximum cannot jump the
        // barrier within one iteration.
        let mut dir = z;
        let z_norm = ops.w_norm(&dir);
        let cap = 0.75 * chord(&path[k - 1], &path[k]).max(chord(&path[k], &path[k + 1]));
        let mut alpha = if z_norm > 0.0 {
            (cap / z_norm).min(1.0)
        } else {
            1.0
        };
        if grad_norm <= opts.tol {
            // Face-stationary. The face direction cannot separate a tied
            // run, so the run multipliers are checked directly: either a
            // release move still lowers the energy, or the discrete
            // first-order conditions hold and the pass level is resolved.
            match release_dir(&path[k], &g, &pinned) {
                Some((d, a0)) => {
                    dir = d;
                    alpha = a0;
                }
                None => {
                    converged = true;
                    path_log.push((it, energies[k]));
                    break;
                }
            }
        }
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = path[k].clone();
            for (v, zv) in trial.values_mut().iter_mut().zip(dir.values()) {
                *v -= alpha * zv;
            }
            let trial = ops.project(&trial);
            if let Some((crest, e_crest)) = crest_of(&trial)? {
                if e_crest < energies[k] {
                    u = crest;
                    level = e_crest;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            // The line search cannot lower the crest level: the pass level is
            // resolved to rounding. Report the cap with the best point.
            break;
        }

        // Re-insert the new crest and redistribute the path along its ray.
        let (tz, _) = past_zero(&u)?;
        t_end = tz;
        let (new_path, new_energies) = rebuild(&u, level, t_end)?;
        path = new_path;
        energies = new_energies;
        path_log.push((it, level));
    }

    let k = argmax(&energies);
    let field = path[k].clone();
    let oscillation = max_theta_oscillation(&field);
    let result = MountainPassResult {
        is_radial: oscillation < 1e-6 * field.max_abs(),
        u: ConeField { field },
        energy: energies[k],
        grad_norm,
        iterations,
        path_log,
        converged,
    };
    if converged {
        Ok(result)
    } else {
        Err(Error::IterationCap {
            iterations,
            grad_norm,
            best: Box::new(result),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use crate::nonlinearity::WeightSpec;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn benchmark() -> (AnnulusSpec, NonlinearitySpec) {
        (
            AnnulusSpec::new(5, 2.0, 3.0, 1.0).unwrap(),
            NonlinearitySpec::power(4.0, 4.0, WeightSpec::constant(1.0).unwrap()).unwrap(),
        )
    }

    fn random_cone_field(grid: &Grid2D, rng: &mut ChaCha8Rng) -> Field2D {
        let mut f = Field2D::zeros(grid.nr(), grid.ntheta());
        for i in 1..grid.nr() - 1 {
            let r = grid.r_nodes()[i];
            let base = ((r - grid.spec().r_inner()) * (grid.spec().r_outer() - r)).max(0.0);
            for j in 0..grid.ntheta() {
                let t = grid.theta_nodes()[j];
                f.set(i, j, base * (1.0 + t.cos()) * rng.gen_range(0.2..1.0));
            }
        }
        project_cone(&f, grid).into_field()
    }

    #[test]
    fn energy_zero_field_is_zero() {
        let (annulus, nonlin) = benchmark();
        let grid = build_grid(&annulus, 16, 8).unwrap();
        let f = Field2D::zeros(16, 8);
        assert_eq!(discrete_energy(&f, &grid, &nonlin, &annulus).unwrap(), 0.0);
    }

    #[test]
    fn energy_rejects_boundary_violation() {
        let (annulus, nonlin) = benchmark();
        let grid = build_grid(&annulus, 16, 8).unwrap();
        let f = Field2D::from_fn(&grid, |_, _| 1.0);
        let err = discrete_energy(&f, &grid, &nonlin, &annulus).unwrap_err();
        assert!(matches!(err, Error::BoundaryViolation(_)));
    }

    #[test]
    fn energy_matches_radial_energy_on_lift() {
        let (annulus, nonlin) = benchmark();
        let profile = solve_radial(&annulus, &nonlin, 2001, &RadialOptions::default()).unwrap();
        // The three-point stencil converges at second order; the measured
        // lift error is 1.4e-4 at nr = 256 and 5.4e-7 at nr = 4096.
        let grid = build_grid(&annulus, 4096, 8).unwrap();
        let lifted = lift(&profile, &grid).unwrap();
        let e2d = discrete_energy(lifted.field(), &grid, &nonlin, &annulus).unwrap();
        assert_relative_eq!(e2d, profile.energy(), max_relative = 1e-6);
    }

    #[test]
    fn energy_scaling_two_point_fit_predicts_third_point() {
        let (annulus, nonlin) = benchmark();
        let grid = build_grid(&annulus, 48, 24).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_cone_field(&grid, &mut rng);
        let scaled = |t: f64| {
            let mut f = u.clone();
            for v in f.values_mut().iter_mut() {
                *v *= t;
            }
            f
        };
        let j1 = discrete_energy(&scaled(1.0), &grid, &nonlin, &annulus).unwrap();
        let j2 = discrete_energy(&scaled(2.0), &grid, &nonlin, &annulus).unwrap();
        // J(tu) = t²A − t⁴B for the pure quartic family; solve from t=1,2.
        let b = (4.0 * j1 - j2) / 12.0;
        let a = j1 + b;
        let j3 = discrete_energy(&scaled(3.0), &grid, &nonlin, &annulus).unwrap();
        let predicted = 9.0 * a - 81.0 * b;
        assert_relative_eq!(j3, predicted, max_relative = 1e-10);
    }

    #[test]
    fn gradient_zero_field_is_zero() {
        let (annulus, nonlin) = benchmark();
        let grid = build_grid(&annulus, 16, 8).unwrap();
        let f = Field2D::zeros(16, 8);
        let g = discrete_gradient(&f, &grid, &nonlin, &annulus).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn gradient_matches_directional_derivative() {
        let (annulus, nonlin) = benchmark();
        let grid = build_grid(&annulus, 24, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for trial in 0..10 {
            let u = random_cone_field(&grid, &mut rng);
            let g = discrete_gradient(&u, &grid, &nonlin, &annulus).unwrap();
            // Random direction vanishing at the r-boundaries.
            let mut phi = Field2D::zeros(24, 12);
            for i in 1..23 {
                for j in 0..12 {
                    phi.set(i, j, rng.gen_range(-1.0..1.0));
                }
            }
            let h = 1e-6;
            let mut up = u.clone();
            let mut um = u.clone();
            for ((vp, vm), pv) in up
                .values_mut()
                .iter_mut()
                .zip(um.values_mut())
                .zip(phi.values())
            {
                *vp += h * pv;
                *vm -= h * pv;
            }
            let jp = discrete_energy(&up, &grid, &nonlin, &annulus).unwrap();
            let jm = discrete_energy(&um, &grid, &nonlin, &annulus).unwrap();
            let fd = (jp - jm) / (2.0 * h);
            let dot: f64 = g.values().iter().zip(phi.values()).map(|(a, b)| a * b).sum();
            assert_relative_eq!(dot, fd, max_relative = 1e-6);
            let _ = trial;
        }
    }

    #[test]
    fn pava_pools_two_point_violation() {
        let mut v = [1.0, 3.0];
        let w = [1.0, 1.0];
        let orig = v;
        weighted_pava_decreasing(&mut v, &w, &orig);
        assert_eq!(v, [2.0, 2.0]);
    }

    #[test]
    fn pava_respects_weights() {
        let mut v = [1.0, 3.0];
        let w = [3.0, 1.0];
        let orig = v;
        weighted_pava_decreasing(&mut v, &w, &orig);
        assert_abs_diff_eq!(v[0], 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 1.5, epsilon = 1e-15);
    }

    #[test]
    fn projection_clamps_negative_rows() {
        let (annulus, _) = benchmark();
        let grid = build_grid(&annulus, 8, 8).unwrap();
        let f = Field2D::from_fn(&grid, |_, _| -1.0);
        let p = project_cone(&f, &grid);
        assert!(p.field().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn projection_is_idempotent() {
        let (annulus, _) = benchmark();
        let grid = build_grid(&annulus, 24, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_cone_field(&grid, &mut rng);
        let p = project_cone(&u, &grid);
        for (a, b) in u.values().iter().zip(p.field().values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_matches_clip_pava_oracle() {
        let (annulus, _) = benchmark();
        let grid = build_grid(&annulus, 16, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let mut f = Field2D::zeros(16, 8);
            for v in f.values_mut().iter_mut() {
                *v = rng.gen_range(-2.0..2.0);
            }
            let p = project_cone(&f, &grid);
            // Oracle: per-row decreasing regression, then clamp at zero.
            for i in 0..16 {
                let mut vals: Vec<f64> = (0..8).map(|j| f.get(i, j)).collect();
                let wts: Vec<f64> =
                    (0..8).map(|j| grid.weights()[grid.idx(i, j)]).collect();
                let orig = vals.clone();
                weighted_pava_decreasing(&mut vals, &wts, &orig);
                for (j, v) in vals.iter().enumerate() {
                    let expected = v.max(0.0);
                    assert_abs_diff_eq!(p.field().get(i, j), expected, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn projection_output_satisfies_constraints_exactly() {
        let (annulus, _) = benchmark();
        let grid = build_grid(&annulus, 24, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..10 {
            let mut f = Field2D::zeros(24, 12);
            for v in f.values_mut().iter_mut() {
                *v = rng.gen_range(-1.0..1.5);
            }
            let p = project_cone(&f, &grid);
            for i in 0..24 {
                for j in 0..12 {
                    let v = p.field().get(i, j);
                    assert!(v >= 0.0);
                    if j + 1 < 12 {
                        assert!(v >= p.field().get(i, j + 1), "row {i} not monotone");
                    }
                }
            }
        }
    }

    #[test]
    fn projection_is_nonexpansive_on_samples() {
        let (annulus, _) = benchmark();
        let grid = build_grid(&annulus, 16, 8).unwrap();
        let ops = Ops::new(&grid, &AnnulusSpec::new(5, 2.0, 3.0, 0.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let mut a = Field2D::zeros(16, 8);
            let mut b = Field2D::zeros(16, 8);
            for v in a.values_mut().iter_mut() {
                *v = rng.gen_range(-2.0..2.0);
            }
            for v in b.values_mut().iter_mut() {
                *v = rng.gen_range(-2.0..2.0);
            }
            let pa = project_cone(&a, &grid).into_field();
            let pb = project_cone(&b, &grid).into_field();
            let dist = |x: &Field2D, y: &Field2D| {
                let mut d = x.clone();
                for (v, yv) in d.values_mut().iter_mut().zip(y.values()) {
                    *v -= yv;
                }
                ops.w_norm(&d)
            };
            assert!(dist(&pa, &pb) <= dist(&a, &b) + 1e-9);
        }
    }

    #[test]
    fn fibering_matches_closed_form_for_pure_power() {
        let (annulus, nonlin) = benchmark();
        let grid = build_grid(&annulus, 48, 24).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let phi = random_cone_field(&grid, &mut rng);
        let direction = ConeField { field: phi.clone() };
        let fib = fibering_max(&direction, &grid, &nonlin, &annulus).unwrap();
        let ops = Ops::new(&grid, &annulus);
        let a = ops.quad_form(&phi);
        let b = ops.forcing_pairing(&phi, &nonlin).unwrap();
        let expected = (a / b).powf(1.0 / 2.0);
        assert_relative_eq!(fib.t_star(), expected, max_relative = 1e-8);
        // Required sign pattern around the maximum.
        let gp = |t: f64| {
            let mut s = phi.clone();
            for v in s.values_mut().iter_mut() {
                *v *= t;
            }
            t * a - ops.forcing_pairing(&s, &nonlin).unwrap() / t
        };
        assert!(gp(fib.t_star() / 2.0) > 0.0);
        assert!(gp(2.0 * fib.t_star()) < 0.0);
    }

    #[test]
    fn fibering_scaling_reparametrization() {
        let (annulus, nonlin) = benchmark();
        let grid = build_grid(&annulus, 32, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let phi = random_cone_field(&grid, &mut rng);
        let fib1 = fibering_max(&ConeField { field: phi.clone() }, &grid, &nonlin, &annulus)
            .unwrap();
        let c = 3.5f64;
        let mut scaled = phi.clone();
        for v in scaled.values_mut().iter_mut() {
            *v *= c;
        }
        let fib2 =
            fibering_max(&ConeField { field: scaled }, &grid, &nonlin, &annulus).unwrap();
        assert_relative_eq!(fib2.t_star(), fib1.t_star() / c, max_relative = 1e-8);
        assert_relative_eq!(fib2.g_max(), fib1.g_max(), max_relative = 1e-10);
    }

    #[test]
    fn fibering_rejects_zero_direction() {
        let (annulus, nonlin) = benchmark();
        let grid = build_grid(&annulus, 16, 8).unwrap();
        let zero = ConeField {
            field: Field2D::zeros(16, 8),
        };
        let err = fibering_max(&zero, &grid, &nonlin, &annulus).unwrap_err();
        assert!(matches!(err, Error::ZeroField(_)));
    }

    #[test]
    fn fibering_on_lifted_radial_peaks_at_one() {
        let (annulus, nonlin) = benchmark();
        let profile = solve_radial(&annulus, &nonlin, 2001, &RadialOptions::default()).unwrap();
        let grid = build_grid(&annulus, 512, 16).unwrap();
        let lifted = lift(&profile, &grid).unwrap();
        let fib = fibering_max(&lifted, &grid, &nonlin, &annulus).unwrap();
        assert_abs_diff_eq!(fib.t_star(), 1.0, epsilon = 1e-4);
    }

    #[test]
    fn path_test_zero_perturbation_has_tiny_margin() {
        let (annulus, nonlin) = benchmark();
        let profile = solve_radial(&annulus, &nonlin, 2001, &RadialOptions::default()).unwrap();
        let grid = build_grid(&annulus, 128, 64).unwrap();
        let rec = breaking_path_test(&profile, 0.0, &grid, &nonlin, &annulus).unwrap();
        // margin = J(lift) − max_t J(t·lift) ≤ 0, and tiny because t* ≈ 1.
        assert!(rec.margin() <= 0.0);
        assert!(rec.margin().abs() <= 1e-6 * rec.level_radial().abs());
    }

    #[test]
    fn path_test_rejects_out_of_range_tau() {
        let (annulus, nonlin) = benchmark();
        let profile = solve_radial(&annulus, &nonlin, 1001, &RadialOptions::default()).unwrap();
        let grid = build_grid(&annulus, 64, 32).unwrap();
        let err = breaking_path_test(&profile, 0.3, &grid, &nonlin, &annulus).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }));
    }

    #[test]
    fn path_test_positive_margin_for_breaking_benchmark() {
        let (annulus, nonlin) = benchmark();
        let profile = solve_radial(&annulus, &nonlin, 2001, &RadialOptions::default()).unwrap();
        let grid = build_grid(&annulus, 128, 64).unwrap();
        for tau in [0.02, 0.05] {
            let rec = breaking_path_test(&profile, tau, &grid, &nonlin, &annulus).unwrap();
            assert!(
                rec.margin() > 0.0,
                "tau={tau}: margin {:e} not positive",
                rec.margin()
            );
        }
    }

    #[test]
    fn mountain_pass_breaks_symmetry_on_benchmark() {
        let (annulus, nonlin) = benchmark();
        let grid = build_grid(&annulus, 64, 32).unwrap();
        let opts = MountainPassOptions::default();
        let result = mountain_pass(&grid, &nonlin, &annulus, &opts).unwrap();
        assert!(result.converged());
        assert!(result.grad_norm() <= opts.tol);
        assert!(result.energy() > 0.0);
        assert!(!result.is_radial());
        let profile = solve_radial(&annulus, &nonlin, 2001, &RadialOptions::default()).unwrap();
        assert!(result.energy() <= profile.energy() - 1e-4);
        // Path maximum is nonincreasing by construction.
        for pair in result.path_log().windows(2) {
            assert!(pair[1].1 <= pair[0].1 + 1e-12);
        }
    }

    #[test]
    fn mountain_pass_energy_invariant_under_theta_reversal() {
        let (annulus, nonlin) = benchmark();
        let grid = build_grid(&annulus, 48, 24).unwrap();
        let reversed = grid.reversed_theta();
        let opts = MountainPassOptions::default();
        let a = mountain_pass(&grid, &nonlin, &annulus, &opts).unwrap();
        let b = mountain_pass(&reversed, &nonlin, &annulus, &opts).unwrap();
        assert_abs_diff_eq!(a.energy(), b.energy(), epsilon = 1e-8 * a.energy().abs());
    }
}

//! Shared numerical kernels: compensated summation, finite-difference stencil
//! weights on arbitrary nodes, composite Simpson quadrature on uniform grids,
//! Gauss-Lobatto-Legendre rules, and a tridiagonal solve.

/// Neumaier compensated sum. The accumulator tracks a running correction so
/// that cancellation between large intermediate terms does not contaminate
/// the final digits; needed because several invariants are checked at 1e-10
/// on sums with ~1e5 terms.
pub(crate) fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms {
        let new_sum = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - new_sum) + t;
        } else {
            comp += (t - new_sum) + sum;
        }
        sum = new_sum;
    }
    sum + comp
}

/// Finite-difference weights for the m-th derivative at point `x0` from the
/// nodes `x` (Fornberg's recurrence). Nodes need not be ordered or uniform;
/// they must be pairwise distinct. Returns one weight per node for each
/// derivative order 0..=m; only the order-m row is exposed.
pub(crate) fn fd_weights(x0: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    assert!(n > m, "need more nodes than the derivative order");
    // c[k][j] = weight of node j for derivative order k.
    let mut c = vec![vec![0.0f64; n]; m + 1];
    let mut c1 = 1.0f64;
    let mut c4 = x[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0f64;
        let c5 = c4;
        c4 = x[i] - x0;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c.swap_remove(m)
}

/// Composite Simpson quadrature of samples `y` on a uniform grid of spacing
/// `h`. Even interval counts use the classical composite rule; odd counts use
/// Simpson on the leading intervals and the 3/8 rule on the last three.
/// Both variants are fourth-order accurate.
pub(crate) fn simpson_uniform(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    assert!(n >= 2, "need at least two samples");
    if n == 2 {
        return 0.5 * h * (y[0] + y[1]);
    }
    let intervals = n - 1;
    let (simpson_end, tail) = if intervals % 2 == 0 {
        (n - 1, 0.0)
    } else if intervals >= 3 {
        let k = n - 4;
        let tail = 3.0 * h / 8.0 * (y[k] + 3.0 * y[k + 1] + 3.0 * y[k + 2] + y[k + 3]);
        (k, tail)
    } else {
        // intervals == 1 handled above; unreachable here.
        unreachable!()
    };
    if simpson_end == 0 {
        return tail;
    }
    let terms = (0..=simpson_end).map(|i| {
        let coeff = if i == 0 || i == simpson_end {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        coeff * y[i]
    });
    h / 3.0 * compensated_sum(terms) + tail
}

/// Legendre polynomial P_n and derivative P_n' at `x` by the three-term
/// recurrence.
pub(crate) fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0f64;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    // (1 - x^2) P_n' = n (P_{n-1} - x P_n)
    let d = if (1.0 - x * x).abs() < 1e-14 {
        // Endpoint derivative: P_n'(±1) = ±^{n+1} n(n+1)/2.
        let sign = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 + 1) };
        sign * (n as f64) * (n as f64 + 1.0) / 2.0
    } else {
        (n as f64) * (p_prev - x * p) / (1.0 - x * x)
    };
    (p, d)
}

/// Nodes and weights of the q-point Gauss-Lobatto-Legendre rule on [-1, 1].
/// Endpoints are included; interior nodes are the roots of P'_{q-1}, found by
/// Newton from Chebyshev initial guesses. Weights: w_i = 2 / (n(n+1) P_n(x_i)^2)
/// with n = q - 1. Exact for polynomials of degree 2q - 3.
pub(crate) fn lobatto_rule(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 2, "Lobatto rule needs at least two points");
    let n = q - 1;
    let nf = n as f64;
    let endpoint_w = 2.0 / (nf * (nf + 1.0));
    let mut nodes = vec![0.0f64; q];
    let mut weights = vec![endpoint_w; q];
    nodes[0] = -1.0;
    nodes[q - 1] = 1.0;
    for k in 1..n {
        // Root of P_n' nearest cos(pi k / n), swept so nodes come out increasing.
        let mut x = -(std::f64::consts::PI * k as f64 / nf).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            // d/dx[(1-x^2)P_n'] = -n(n+1)P_n, so Newton on g = (1-x^2)P_n':
            let g = (1.0 - x * x) * dp;
            let dg = -2.0 * x * dp - nf * (nf + 1.0) * p;
            let step = g / dg;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (p, _) = legendre_pair(n, x);
        nodes[k] = x;
        weights[k] = 2.0 / (nf * (nf + 1.0) * p * p);
    }
    (nodes, weights)
}

/// Solve a tridiagonal system in place (Thomas algorithm). `lower[i]` couples
/// row i to i-1 (lower[0] unused), `upper[i]` couples row i to i+1 (last
/// entry unused). Returns None when a pivot degenerates.
pub(crate) fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Option<Vec<f64>> {
    let n = diag.len();
    assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    let mut c = vec![0.0f64; n];
    let mut d = vec![0.0f64; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return None;
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return None;
        }
        c[i] = upper[i] / pivot;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Some(x)
}

// Scratch probe: replicate the damped Newton loop with per-iteration prints.
use annulus_core::geometry::AnnulusSpec;
use annulus_core::nonlinearity::{eval_dfds, eval_f, NonlinearitySpec, WeightSpec};

fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0f64; n];
    let mut d = vec![0.0f64; n];
    if diag[0] == 0.0 {
        return None;
    }
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        if m == 0.0 {
            return None;
        }
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let correction = c[i] * x[i + 1];
        x[i] -= correction;
    }
    Some(x)
}

fn main() {
    let annulus = AnnulusSpec::new(3, 1.0, 2.0, 0.0).unwrap();
    let nonlin = NonlinearitySpec::power(3.0, 3.0, WeightSpec::constant(1.0).unwrap()).unwrap();
    let n = 1601usize;

    // Build nodes and seed u from a coarse shooting-free start: interpolate a
    // previously converged coarse profile. Simplest: rerun solve_radial at 801
    // and interpolate. To keep this probe independent, seed with the sine bump
    // scaled to the known umax and let Newton do the work from there.
    let r0 = annulus.r_inner();
    let r1 = annulus.r_outer();
    let h = (r1 - r0) / (n - 1) as f64;
    let r: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { r1 } else { r0 + i as f64 * h })
        .collect();
    let mut u: Vec<f64> = r
        .iter()
        .map(|ri| 6.0017 * (std::f64::consts::PI * (ri - r0) / (r1 - r0)).sin())
        .collect();
    u[0] = 0.0;
    u[n - 1] = 0.0;

    let nm1 = annulus.dim() as f64 - 1.0;
    let lambda = annulus.lambda();
    let interior = n - 2;

    let residual = |u: &[f64]| -> Vec<f64> {
        let mut res = vec![0.0f64; interior];
        for i in 1..n - 1 {
            let f = eval_f(&nonlin, r[i], u[i]).unwrap();
            let d_right = u[i + 1] - u[i];
            let d_left = u[i] - u[i - 1];
            res[i - 1] = -(d_right - d_left) / (h * h)
                - nm1 / r[i] * (d_right + d_left) / (2.0 * h)
                + lambda * u[i]
                - f;
        }
        res
    };
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let mut res = residual(&u);
    let mut res_norm = inf(&res);
    eprintln!("start res={res_norm:.6e}");
    for iter in 0..80 {
        let mut lower = vec![0.0f64; interior];
        let mut diag = vec![0.0f64; interior];
        let mut upper = vec![0.0f64; interior];
        for i in 1..n - 1 {
            let k = i - 1;
            lower[k] = -1.0 / (h * h) + nm1 / (2.0 * h * r[i]);
            upper[k] = -1.0 / (h * h) - nm1 / (2.0 * h * r[i]);
            diag[k] = 2.0 / (h * h) + lambda - eval_dfds(&nonlin, r[i], u[i]).unwrap();
        }
        let rhs: Vec<f64> = res.iter().map(|x| -x).collect();
        let delta = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();

        let mut alpha = 1.0f64;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = u
                .iter()
                .enumerate()
                .map(|(i, ui)| {
                    if i == 0 || i == n - 1 {
                        *ui
                    } else {
                        ui + alpha * delta[i - 1]
                    }
                })
                .collect();
            let trial_res = residual(&trial);
            let trial_norm = inf(&trial_res);
            if trial_norm < res_norm {
                u.copy_from_slice(&trial);
                res = trial_res;
                res_norm = trial_norm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        let dmax = inf(&delta);
        eprintln!("iter {iter:3}  res={res_norm:.6e}  alpha={alpha:.3e}  |delta|={dmax:.3e}  accepted={accepted}");
        if !accepted || res_norm <= 1e-12 {
            break;
        }
    }
}

//! Shared helpers and independent oracles for the integration tests.
//!
//! Everything here deliberately re-derives results through routes that do
//! not share code with the library implementation: the capped-simplex
//! projection is re-solved by bisection, and the fixed-selection inner
//! problem is re-solved by ADMM on an explicitly assembled least-squares
//! model of the objective.

#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use isac_core::{Scenario, SelectionVector};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

pub fn setup1() -> Scenario {
    Scenario::from_path(scenario_path("setup1.json")).unwrap()
}

pub fn setup2() -> Scenario {
    Scenario::from_path(scenario_path("setup2.json")).unwrap()
}

pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * 2f64.powi(-53)
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<Complex64> {
    let x = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(
            (uniform(rng) - 0.5) * scale,
            (uniform(rng) - 0.5) * scale,
        )
    });
    (&x + x.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Random PSD matrix rescaled to the requested trace.
pub fn random_psd_with_trace(rng: &mut ChaCha8Rng, n: usize, trace: f64) -> DMatrix<Complex64> {
    let x = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(uniform(rng) - 0.5, uniform(rng) - 0.5)
    });
    let mut r = &x * x.adjoint();
    let t: f64 = r.diagonal().iter().map(|v| v.re).sum();
    r *= Complex64::new(trace / t, 0.0);
    (&r + r.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Brute-force Euclidean projection onto `{R PSD, tr R <= budget}`: the
/// eigenvalue subproblem is solved by bisection on the shift instead of
/// the sorted prefix scan used by the implementation.
pub fn projection_oracle(m: &DMatrix<Complex64>, budget: f64) -> DMatrix<Complex64> {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    let vals = if clipped.iter().sum::<f64>() <= budget {
        clipped
    } else {
        let top = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let mut lo = 0.0;
        let mut hi = top;
        for _ in 0..200 {
            let tau = 0.5 * (lo + hi);
            let total: f64 = eig.eigenvalues.iter().map(|v| (v - tau).max(0.0)).sum();
            if total > budget {
                lo = tau;
            } else {
                hi = tau;
            }
        }
        let tau = 0.5 * (lo + hi);
        eig.eigenvalues.iter().map(|v| (v - tau).max(0.0)).collect()
    };
    let mut scaled = eig.eigenvectors.clone();
    for (j, v) in vals.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*v);
    }
    let out = &scaled * eig.eigenvectors.adjoint();
    (&out + out.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Bisection projection onto the full-power shell `{PSD, tr = budget}`.
fn shell_projection_oracle(m: &DMatrix<Complex64>, budget: f64) -> DMatrix<Complex64> {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let top = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let mut lo = top - budget - 1.0;
    let mut hi = top;
    for _ in 0..200 {
        let tau = 0.5 * (lo + hi);
        let total: f64 = eig.eigenvalues.iter().map(|v| (v - tau).max(0.0)).sum();
        if total > budget {
            lo = tau;
        } else {
            hi = tau;
        }
    }
    let tau = 0.5 * (lo + hi);
    let vals: Vec<f64> = eig.eigenvalues.iter().map(|v| (v - tau).max(0.0)).collect();
    let mut scaled = eig.eigenvectors.clone();
    for (j, v) in vals.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*v);
    }
    let out = &scaled * eig.eigenvectors.adjoint();
    (&out + out.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Orthonormal Hermitian basis element `m` of the `k x k` space,
/// enumerated as: `k` diagonal elements, then for each pair `i < j` the
/// real and imaginary off-diagonal elements.
fn hermitian_basis(k: usize, m: usize) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(k, k);
    if m < k {
        out[(m, m)] = Complex64::new(1.0, 0.0);
        return out;
    }
    let mut idx = m - k;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..k {
        for j in i + 1..k {
            if idx == 0 {
                out[(i, j)] = Complex64::new(inv_sqrt2, 0.0);
                out[(j, i)] = Complex64::new(inv_sqrt2, 0.0);
                return out;
            }
            if idx == 1 {
                out[(i, j)] = Complex64::new(0.0, inv_sqrt2);
                out[(j, i)] = Complex64::new(0.0, -inv_sqrt2);
                return out;
            }
            idx -= 2;
        }
    }
    panic!("basis index {m} out of range for k = {k}");
}

fn basis_to_matrix(k: usize, coords: &[f64]) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(k, k);
    for m in 0..k {
        out[(m, m)] = Complex64::new(coords[m], 0.0);
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut idx = k;
    for i in 0..k {
        for j in i + 1..k {
            let value = Complex64::new(coords[idx], coords[idx + 1]) / sqrt2;
            out[(i, j)] = value;
            out[(j, i)] = value.conj();
            idx += 2;
        }
    }
    out
}

fn matrix_to_basis(k: usize, r: &DMatrix<Complex64>) -> Vec<f64> {
    let mut coords = vec![0.0; k * k];
    for m in 0..k {
        coords[m] = r[(m, m)].re;
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut idx = k;
    for i in 0..k {
        for j in i + 1..k {
            coords[idx] = sqrt2 * r[(i, j)].re;
            coords[idx + 1] = sqrt2 * r[(i, j)].im;
            idx += 2;
        }
    }
    coords
}

/// Result of the independent inner re-solve.
pub struct AdmmSolution {
    pub objective: f64,
    pub alpha: f64,
    pub covariance: DMatrix<Complex64>,
    pub primal_residual: f64,
}

/// Independent convex re-solve of the pure-sensing (`mu = 0`) inner
/// problem on a fixed selection: the objective is assembled as an explicit
/// least-squares model `‖W u‖²` in an orthonormal real parameterization
/// `u = (vec R, alpha)`, and minimized over the full-power PSD shell by
/// ADMM with a bisection shell projection. No code is shared with the
/// production solver path.
pub fn admm_inner_resolve(scenario: &Scenario, p: &SelectionVector) -> AdmmSolution {
    let desired = scenario.desired();
    let geom = scenario.geometry();
    let k = p.popcount();
    let d = k * k;
    let g = desired.num_grid_points();
    let grid: Vec<DVector<Complex64>> = desired
        .angles_deg()
        .iter()
        .map(|&deg| p.gather(&geom.steering_vector(deg)))
        .collect();
    let targets: Vec<DVector<Complex64>> = desired
        .target_angles_deg()
        .iter()
        .map(|&deg| p.gather(&geom.steering_vector(deg)))
        .collect();
    let q = targets.len();
    let pairs: Vec<(usize, usize)> = (0..q)
        .flat_map(|i| ((i + 1)..q).map(move |j| (i, j)))
        .collect();

    // least-squares rows: sqrt(γ_g/G) (P_g(x) − α P_d_g), then for each
    // target pair the real and imaginary parts of the cross term with
    // weight sqrt(2ω/(Q²−Q))
    let rows = g + 2 * pairs.len();
    let mut w = DMatrix::<f64>::zeros(rows, d + 1);
    for (row, steer) in grid.iter().enumerate() {
        let weight = (desired.weights()[row] / g as f64).sqrt();
        for m in 0..d {
            let e = hermitian_basis(k, m);
            let val = steer.dotc(&(&e * steer)).re;
            w[(row, m)] = weight * val;
        }
        w[(row, d)] = -weight * desired.values()[row];
    }
    if !pairs.is_empty() {
        let cross_weight =
            (2.0 * desired.cross_corr_weight() / ((q * q - q) as f64)).sqrt();
        for (pi, &(i, j)) in pairs.iter().enumerate() {
            for m in 0..d {
                let e = hermitian_basis(k, m);
                let val = targets[i].dotc(&(&e * &targets[j]));
                w[(g + 2 * pi, m)] = cross_weight * val.re;
                w[(g + 2 * pi + 1, m)] = cross_weight * val.im;
            }
        }
    }

    let h = w.transpose() * &w;
    let power = scenario.power();

    // ADMM splitting: min u'Hu + I_shell(z) over x = z
    let rho = 1.0;
    let mut lhs = &h * 2.0;
    for i in 0..d {
        lhs[(i, i)] += rho;
    }
    let chol = nalgebra::Cholesky::new(lhs).expect("ADMM normal matrix is PD");

    let mut z = DMatrix::from_diagonal_element(k, k, Complex64::new(power / k as f64, 0.0));
    let mut dual = vec![0.0; d];
    let mut primal_residual = f64::INFINITY;
    for _ in 0..20_000 {
        let zc = matrix_to_basis(k, &z);
        let mut rhs = DVector::<f64>::zeros(d + 1);
        for i in 0..d {
            rhs[i] = rho * (zc[i] - dual[i]);
        }
        let u = chol.solve(&rhs);
        let x_mat = basis_to_matrix(k, &u.as_slice()[..d]);
        let shifted = &x_mat + basis_to_matrix(k, &dual);
        let z_next = shell_projection_oracle(&shifted, power);
        primal_residual = (&x_mat - &z_next).norm();
        let dual_step = matrix_to_basis(k, &(&x_mat - &z_next));
        for i in 0..d {
            dual[i] += dual_step[i];
        }
        let dual_residual = rho * (&z_next - &z).norm();
        z = z_next;
        if primal_residual < 1e-10 && dual_residual < 1e-10 {
            break;
        }
    }

    // evaluate the assembled objective at the feasible point z with its
    // own optimal scaling (least squares in the final column)
    let zc = matrix_to_basis(k, &z);
    let mut u_final = DVector::<f64>::zeros(d + 1);
    for i in 0..d {
        u_final[i] = zc[i];
    }
    let h_da = h.view((0, d), (d, 1));
    let num: f64 = -(0..d).map(|i| h_da[(i, 0)] * zc[i]).sum::<f64>();
    let alpha = num / h[(d, d)];
    u_final[d] = alpha;
    let objective = (u_final.transpose() * &h * &u_final)[(0, 0)];

    AdmmSolution {
        objective,
        alpha,
        covariance: z,
        primal_residual,
    }
}

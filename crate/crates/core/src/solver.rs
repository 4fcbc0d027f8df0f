//! Convex inner solver for a fixed antenna selection: projected gradient
//! descent on the set `{R Hermitian PSD, tr R <= P_Tx}` with the
//! beampattern scaling eliminated in closed form at every iterate, plus a
//! water-filling oracle for the rate-only special case.
//!
//! The objective only depends on the covariance through its principal
//! submatrix on the selected support, so the solver works in the reduced
//! `k x k` space and embeds the optimum back into the full array dimension.

use std::f64::consts::LN_2;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::metrics::ObjectiveBreakdown;
use crate::model::{ChannelMatrix, CovarianceMatrix, SelectionVector};
use crate::scenario::Scenario;

/// Projected-gradient solver knobs. `grad_tolerance` is an absolute
/// threshold on the projected-gradient residual; the conventional choice
/// is `1e-6 * P_Tx` (see [`SolverConfig::for_power`]).
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub grad_tolerance: f64,
    pub max_iterations: usize,
    pub armijo_shrink: f64,
    pub armijo_slope: f64,
    pub initial_step: f64,
    /// Drop the sensing term and optimize `-mu * rate` alone.
    pub rate_only: bool,
    /// Record the objective value at every accepted iterate.
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::for_power(1.0)
    }
}

impl SolverConfig {
    /// Default configuration scaled to a transmit power budget.
    pub fn for_power(p_tx: f64) -> Self {
        Self {
            grad_tolerance: 1e-6 * p_tx,
            max_iterations: 5000,
            armijo_shrink: 0.5,
            armijo_slope: 1e-4,
            initial_step: 1.0,
            rate_only: false,
            record_trace: false,
        }
    }

    pub fn with_rate_only(mut self, rate_only: bool) -> Self {
        self.rate_only = rate_only;
        self
    }
}

/// Result of one inner solve.
#[derive(Clone, Debug)]
pub struct InnerSolution {
    pub covariance: CovarianceMatrix,
    pub alpha: f64,
    pub breakdown: ObjectiveBreakdown,
    pub iterations: usize,
    pub converged: bool,
    pub projected_grad_norm: f64,
    pub objective_trace: Option<Vec<f64>>,
}

/// Euclidean projection onto `{R Hermitian PSD, tr R <= power_budget}`.
///
/// The input is symmetrized, eigendecomposed, and the eigenvalue vector is
/// projected onto the capped simplex: negatives are clipped; if the clipped
/// sum still exceeds the budget, the uniform shift `λ_i -> max(λ_i - τ, 0)`
/// with `Σ max(λ_i - τ, 0) = power_budget` is applied.
pub fn project_feasible(m: &DMatrix<Complex64>, power_budget: f64) -> Result<CovarianceMatrix> {
    if m.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::NonFinite("projection input"));
    }
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    project_capped_simplex(&mut vals, power_budget);

    // recompose V diag(vals) V^H
    let mut scaled = eig.eigenvectors.clone();
    for (j, v) in vals.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*v);
    }
    let out = &scaled * eig.eigenvectors.adjoint();
    let out = (&out + out.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(CovarianceMatrix::new_unchecked(out))
}

/// In-place Euclidean projection of a real vector onto
/// `{x >= 0, Σ x <= budget}`.
fn project_capped_simplex(vals: &mut [f64], budget: f64) {
    for v in vals.iter_mut() {
        *v = v.max(0.0);
    }
    let total: f64 = vals.iter().sum();
    if total <= budget {
        return;
    }
    shift_to_sum(vals, budget);
}

/// Uniform shift `x_i = max(v_i - τ, 0)` with `Σ x_i = budget` (the simplex
/// projection); `τ` may be negative, which lifts the vector onto the shell.
fn shift_to_sum(vals: &mut [f64], budget: f64) {
    let mut sorted = vals.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - budget) / (i + 1) as f64;
        if v > candidate {
            tau = candidate;
        } else {
            break;
        }
    }
    for v in vals.iter_mut() {
        *v = (*v - tau).max(0.0);
    }
}

/// Euclidean projection onto the full-power shell
/// `{R Hermitian PSD, tr R = power_budget}`.
///
/// This is the feasible set the inner solver iterates on: the scalarized
/// objective together with a freely optimized beampattern scaling admits
/// the degenerate zero solution on the trace *ball* (a zero pattern
/// matches a zero-scaled desired pattern), while radar-mode covariance
/// design conventionally spends the whole power budget.
pub fn project_trace_shell(m: &DMatrix<Complex64>, power_budget: f64) -> Result<CovarianceMatrix> {
    if m.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::NonFinite("projection input"));
    }
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    shift_to_sum(&mut vals, power_budget);
    let mut scaled = eig.eigenvectors.clone();
    for (j, v) in vals.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*v);
    }
    let out = &scaled * eig.eigenvectors.adjoint();
    let out = (&out + out.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(CovarianceMatrix::new_unchecked(out))
}

/// The inner problem restricted to the selected support: steering rows,
/// channel columns and target vectors gathered on the active antennas.
struct SupportProblem {
    k: usize,
    /// `G x k²` stack; row `g` holds `conj(ã_i) ã_j` at column `j*k+i`, so
    /// `phi * vec(R)` is the beampattern over the grid.
    phi: DMatrix<Complex64>,
    desired_values: Vec<f64>,
    weights: Vec<f64>,
    inv_grid: f64,
    weighted_energy: f64,
    targets: Vec<DVector<Complex64>>,
    cross_scale: f64,
    h_sub: DMatrix<Complex64>,
    sigma2: f64,
    mu: f64,
    rate_only: bool,
}

struct Eval {
    objective: f64,
    alpha: f64,
    mse: f64,
    cross: f64,
    rate: f64,
    pattern: Vec<f64>,
    rate_chol: Option<Cholesky<Complex64, Dyn>>,
}

impl SupportProblem {
    fn new(scenario: &Scenario, p: &SelectionVector, rate_only: bool) -> Self {
        let desired = scenario.desired();
        let k = p.popcount();
        let g = desired.num_grid_points();
        let steering = scenario.steering_grid();

        let mut phi = DMatrix::zeros(g, k * k);
        for (row, full) in steering.iter().enumerate() {
            let a = p.gather(full);
            for j in 0..k {
                for i in 0..k {
                    phi[(row, j * k + i)] = a[i].conj() * a[j];
                }
            }
        }

        let q = desired.num_targets();
        let targets: Vec<DVector<Complex64>> = desired
            .target_angles_deg()
            .iter()
            .map(|&deg| p.gather(&scenario.geometry().steering_vector(deg)))
            .collect();
        let cross_scale = if q >= 2 {
            2.0 * desired.cross_corr_weight() / ((q * q - q) as f64)
        } else {
            0.0
        };

        Self {
            k,
            phi,
            desired_values: desired.values().to_vec(),
            weights: desired.weights().to_vec(),
            inv_grid: 1.0 / g as f64,
            weighted_energy: desired.weighted_energy(),
            targets,
            cross_scale,
            h_sub: p.gather_columns(scenario.channel().matrix()),
            sigma2: scenario.channel().noise_variance(),
            mu: scenario.mu(),
            rate_only,
        }
    }

    fn vec_of(&self, r: &DMatrix<Complex64>) -> DVector<Complex64> {
        DVector::from_column_slice(r.as_slice())
    }

    fn rate_and_chol(&self, r: &DMatrix<Complex64>) -> Result<(f64, Cholesky<Complex64, Dyn>)> {
        let m = self.h_sub.nrows();
        let b = &self.h_sub * r * self.h_sub.adjoint();
        let a = DMatrix::from_diagonal_element(m, m, Complex64::new(self.sigma2, 0.0))
            + (&b + b.adjoint()) * Complex64::new(0.5, 0.0);
        let chol = Cholesky::new(a).ok_or(Error::NonFinite("inner solve rate"))?;
        let ln_det: f64 = chol.l().diagonal().iter().map(|x| 2.0 * x.re.ln()).sum();
        let rate = (ln_det - m as f64 * self.sigma2.ln()) / LN_2;
        if !rate.is_finite() {
            return Err(Error::NonFinite("inner solve rate"));
        }
        Ok((rate, chol))
    }

    /// Objective at `r` with the scaling set to its closed-form optimum.
    /// `full` additionally fills the parts not needed by the optimized
    /// objective (e.g. the rate when `mu = 0`).
    fn eval(&self, r: &DMatrix<Complex64>, full: bool) -> Result<Eval> {
        let (pattern, alpha, mse, cross) = if !self.rate_only || full {
            let pvec = &self.phi * self.vec_of(r);
            let pattern: Vec<f64> = pvec.iter().map(|x| x.re).collect();
            let alpha = if self.weighted_energy > 0.0 {
                pattern
                    .iter()
                    .zip(&self.desired_values)
                    .zip(&self.weights)
                    .map(|((pw, pd), w)| w * pw * pd)
                    .sum::<f64>()
                    / self.weighted_energy
            } else {
                0.0
            };
            let mse = pattern
                .iter()
                .zip(&self.desired_values)
                .zip(&self.weights)
                .map(|((pw, pd), w)| {
                    let d = pw - alpha * pd;
                    w * d * d
                })
                .sum::<f64>()
                * self.inv_grid;
            let mut cross = 0.0;
            if self.cross_scale > 0.0 {
                for i in 0..self.targets.len() {
                    for j in i + 1..self.targets.len() {
                        cross += self.targets[i].dotc(&(r * &self.targets[j])).norm_sqr();
                    }
                }
                cross *= self.cross_scale;
            }
            (pattern, alpha, mse, cross)
        } else {
            (Vec::new(), 0.0, 0.0, 0.0)
        };

        let (rate, rate_chol) = if self.mu > 0.0 || full {
            let (rate, chol) = self.rate_and_chol(r)?;
            (rate, Some(chol))
        } else {
            (0.0, None)
        };

        let objective = if self.rate_only {
            -self.mu * rate
        } else {
            mse + cross - self.mu * rate
        };
        Ok(Eval {
            objective,
            alpha,
            mse,
            cross,
            rate,
            pattern,
            rate_chol,
        })
    }

    /// Gradient of the objective at `r` with the scaling frozen at the
    /// value in `ev` (exact for the reduced objective by the envelope
    /// theorem, since the scaling is the unconstrained minimizer).
    fn grad(&self, r: &DMatrix<Complex64>, ev: &Eval) -> DMatrix<Complex64> {
        let k = self.k;
        let mut grad: DMatrix<Complex64> = DMatrix::zeros(k, k);

        if !self.rate_only {
            let w: DVector<Complex64> = DVector::from_iterator(
                ev.pattern.len(),
                ev.pattern
                    .iter()
                    .zip(&self.desired_values)
                    .zip(&self.weights)
                    .map(|((pw, pd), wt)| {
                        Complex64::new(2.0 * self.inv_grid * wt * (pw - ev.alpha * pd), 0.0)
                    }),
            );
            let gvec = self.phi.ad_mul(&w);
            grad += DMatrix::from_column_slice(k, k, gvec.as_slice());

            if self.cross_scale > 0.0 {
                let scale = Complex64::new(self.cross_scale, 0.0);
                for i in 0..self.targets.len() {
                    for j in i + 1..self.targets.len() {
                        let c = self.targets[i].dotc(&(r * &self.targets[j]));
                        grad.gerc(
                            scale * c,
                            &self.targets[i],
                            &self.targets[j],
                            Complex64::new(1.0, 0.0),
                        );
                        grad.gerc(
                            scale * c.conj(),
                            &self.targets[j],
                            &self.targets[i],
                            Complex64::new(1.0, 0.0),
                        );
                    }
                }
            }
        }

        if self.mu > 0.0 {
            let inv = ev
                .rate_chol
                .as_ref()
                .expect("rate factorization cached when mu > 0")
                .inverse();
            grad -= self.h_sub.ad_mul(&(inv * &self.h_sub)) * Complex64::new(self.mu / LN_2, 0.0);
        }

        let grad = (&grad + grad.adjoint()) * Complex64::new(0.5, 0.0);
        grad
    }
}

/// Solves the inner problem for a fixed selection: projected gradient
/// descent with Armijo backtracking (spectral initial steps) from
/// `R0 = (P_Tx / N) Δ`, the scaling updated in closed form every iterate.
///
/// Iterates live on the full-power shell `tr R = P_Tx` (see
/// [`project_trace_shell`]), so the initial point is lifted to uniform
/// power `(P_Tx / k) Δ` over the selected support. The stationarity
/// residual is `‖R - proj(R - s ∇)‖_F / s` at the fixed probe step
/// `s = initial_step`.
///
/// Non-convergence within `max_iterations` is a soft outcome reported via
/// `converged = false`.
pub fn solve_inner(
    p: &SelectionVector,
    scenario: &Scenario,
    cfg: &SolverConfig,
) -> Result<InnerSolution> {
    let n = scenario.num_antennas();
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            context: "inner solve selection",
            expected: n,
            actual: p.len(),
        });
    }
    if p.popcount() == 0 {
        return Err(Error::validation("selection", "no antenna selected"));
    }
    if p.popcount() > scenario.num_rf_chains() {
        return Err(Error::validation(
            "selection",
            format!(
                "{} active antennas exceed the {} RF chains",
                p.popcount(),
                scenario.num_rf_chains()
            ),
        ));
    }

    let power = scenario.power();
    let prob = SupportProblem::new(scenario, p, cfg.rate_only);
    let k = prob.k;

    let r0 = DMatrix::from_diagonal_element(k, k, Complex64::new(power / n as f64, 0.0));
    let z0 = project_trace_shell(&r0, power)?.matrix().clone();
    let f0 = prob.eval(&z0, false)?.objective;

    // Accelerated projected gradient with Armijo backtracking: the running
    // point carries momentum (restarted adaptively when it points uphill),
    // while the reported iterate is the best feasible point seen, so the
    // returned objective trace is non-increasing.
    let mut best = z0.clone();
    let mut f_best = f0;
    let mut trace = cfg.record_trace.then(|| vec![f_best]);

    let mut z_prev = z0.clone();
    let mut y = z0;
    let mut momentum = 1.0f64;
    let mut step = cfg.initial_step;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    // amortize the stationarity certificate over a few iterations
    const CHECK_EVERY: usize = 8;

    let probe_residual = |point: &DMatrix<Complex64>,
                          grad: &DMatrix<Complex64>|
     -> Result<f64> {
        let probe = project_trace_shell(
            &(point - grad * Complex64::new(cfg.initial_step, 0.0)),
            power,
        )?;
        Ok((probe.matrix() - point).norm() / cfg.initial_step)
    };

    let mut stalled = false;
    for iter in 0..cfg.max_iterations {
        iterations = iter + 1;

        if iter % CHECK_EVERY == 0 || stalled {
            let ev_best = prob.eval(&best, false)?;
            let g_best = prob.grad(&best, &ev_best);
            residual = probe_residual(&best, &g_best)?;
            if residual <= cfg.grad_tolerance || stalled {
                converged = residual <= cfg.grad_tolerance;
                break;
            }
        }

        // Extrapolation can leave the PSD cone far enough to break the
        // rate factorization; restart the momentum from the best point.
        let ev_y = match prob.eval(&y, false) {
            Ok(ev) => ev,
            Err(_) => {
                y = best.clone();
                momentum = 1.0;
                prob.eval(&y, false)?
            }
        };
        let gy = prob.grad(&y, &ev_y);

        // Plain descent steps from the incumbent use the Armijo sufficient
        // decrease test; accelerated steps from an extrapolated point use
        // the quadratic majorization test that underpins the momentum
        // scheme (satisfiable for any step below the inverse curvature).
        let plain = (&y - &best).norm() <= 1e-14;
        let mut t = step;
        let mut accepted = None;
        for _ in 0..80 {
            let cand = project_trace_shell(&(&y - &gy * Complex64::new(t, 0.0)), power)?;
            let delta = cand.matrix() - &y;
            let slope = gy.dotc(&delta).re;
            let cand_ev = prob.eval(cand.matrix(), false)?;
            let bound = if plain {
                ev_y.objective + cfg.armijo_slope * slope
            } else {
                ev_y.objective + slope + delta.norm_squared() / (2.0 * t)
            };
            if cand_ev.objective <= bound {
                accepted = Some((cand, cand_ev));
                break;
            }
            t *= cfg.armijo_shrink;
        }

        let Some((z, ev_z)) = accepted else {
            if (&y - &best).norm() > 1e-14 {
                // momentum led nowhere; retry from the best point
                y = best.clone();
                momentum = 1.0;
                continue;
            }
            // no descent at machine precision: certify and stop
            stalled = true;
            continue;
        };
        let z = z.matrix().clone();
        step = t * 1.25;

        // gradient-based adaptive restart
        if (&y - &z).dotc(&(&z - &z_prev)).re > 0.0 {
            momentum = 1.0;
        }
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        y = &z + (&z - &z_prev) * Complex64::new((momentum - 1.0) / next_momentum, 0.0);
        momentum = next_momentum;

        if ev_z.objective < f_best {
            f_best = ev_z.objective;
            best = z.clone();
        }
        z_prev = z;
        if let Some(tr) = trace.as_mut() {
            tr.push(f_best);
        }
    }

    let r = best;
    let full_ev = prob.eval(&r, true)?;
    let mu = scenario.mu();
    let breakdown = ObjectiveBreakdown {
        mse_term: full_ev.mse,
        cross_corr_term: full_ev.cross,
        rate_bpcu: full_ev.rate,
        scalarized: full_ev.objective,
        alpha: full_ev.alpha,
        mu,
    };
    let covariance = CovarianceMatrix::new(p.scatter_principal(&r), power)?;
    Ok(InnerSolution {
        covariance,
        alpha: full_ev.alpha,
        breakdown,
        iterations,
        converged,
        projected_grad_norm: residual,
        objective_trace: trace,
    })
}

/// Closed-form maximizer of the achievable rate under the power budget for
/// a fixed selection: water-filling over the singular values of the
/// selected-column channel submatrix. Returns the rate and the optimal
/// covariance embedded at the selected indices.
pub fn water_filling_rate(
    p: &SelectionVector,
    ch: &ChannelMatrix,
    power: f64,
) -> Result<(f64, CovarianceMatrix)> {
    if p.popcount() == 0 {
        return Err(Error::validation("selection", "no antenna selected"));
    }
    if p.len() != ch.num_tx_antennas() {
        return Err(Error::DimensionMismatch {
            context: "water filling selection",
            expected: ch.num_tx_antennas(),
            actual: p.len(),
        });
    }
    let k = p.popcount();
    let hs = p.gather_columns(ch.matrix());
    let sigma2 = ch.noise_variance();
    let svd = hs.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");

    // noise floors per mode, ascending because singular values sort descending
    let floors: Vec<f64> = svd
        .singular_values
        .iter()
        .take_while(|s| **s > 1e-14)
        .map(|s| sigma2 / (s * s))
        .collect();

    let mut r_sub: DMatrix<Complex64> = DMatrix::zeros(k, k);
    let mut rate = 0.0;
    if !floors.is_empty() {
        let mut level = 0.0;
        let mut active = 0;
        let mut cumulative = 0.0;
        for (i, &w) in floors.iter().enumerate() {
            cumulative += w;
            let candidate = (power + cumulative) / (i + 1) as f64;
            if candidate > w {
                level = candidate;
                active = i + 1;
            } else {
                break;
            }
        }
        for i in 0..active {
            let q = level - floors[i];
            let v = v_t.row(i).adjoint();
            r_sub.gerc(Complex64::new(q, 0.0), &v, &v, Complex64::new(1.0, 0.0));
            rate += (level / floors[i]).log2();
        }
    }

    let covariance = CovarianceMatrix::new(p.scatter_principal(&r_sub), power)?;
    Ok((rate, covariance))
}

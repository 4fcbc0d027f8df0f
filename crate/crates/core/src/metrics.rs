//! Sensing and communication performance metrics and their gradients:
//! beampattern power, weighted beampattern MSE plus cross-correlation,
//! achievable rate, the closed-form beampattern scaling and the gradient
//! of the scalarized objective with respect to the covariance matrix.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ArrayGeometry, ChannelMatrix, CovarianceMatrix, DesiredBeampattern, SelectionVector};
use crate::scenario::Scenario;

/// Imaginary residue of analytically real quadratic forms is asserted to be
/// below this fraction of `tr(R)` before being discarded.
const IM_RESIDUE_TOL: f64 = 1e-8;

/// Per-term decomposition of the scalarized objective
/// `mse + cross_corr - mu * rate` at a given scaling `alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveBreakdown {
    pub mse_term: f64,
    pub cross_corr_term: f64,
    pub rate_bpcu: f64,
    pub scalarized: f64,
    pub alpha: f64,
    pub mu: f64,
}

fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}

/// Quadratic form `(p ⊙ a)^H R (p ⊙ a)` with the imaginary residue checked
/// and dropped.
fn masked_quadform(
    p: &SelectionVector,
    r: &DMatrix<Complex64>,
    steering: &DVector<Complex64>,
) -> f64 {
    let masked = p.gather(steering);
    let sub = p.gather_principal(r);
    let value = masked.dotc(&(&sub * &masked));
    let trace: f64 = r.diagonal().iter().map(|x| x.re).sum();
    assert!(
        value.im.abs() <= IM_RESIDUE_TOL * trace.abs().max(1.0),
        "imaginary residue {} too large for trace {}",
        value.im,
        trace
    );
    value.re
}

/// Cross term `(p ⊙ a(θ_q))^H R (p ⊙ a(θ_p))` between two probing angles.
fn masked_crossform(
    p: &SelectionVector,
    r: &DMatrix<Complex64>,
    left: &DVector<Complex64>,
    right: &DVector<Complex64>,
) -> Complex64 {
    let lm = p.gather(left);
    let rm = p.gather(right);
    let sub = p.gather_principal(r);
    lm.dotc(&(&sub * &rm))
}

/// Radiated power of the selected array at azimuth `theta_deg`.
pub fn beampattern_power(
    p: &SelectionVector,
    r: &CovarianceMatrix,
    geom: &ArrayGeometry,
    theta_deg: f64,
) -> Result<f64> {
    check_len("beampattern selection", geom.num_antennas(), p.len())?;
    check_len("beampattern covariance", geom.num_antennas(), r.dim())?;
    let a = geom.steering_vector(theta_deg);
    Ok(masked_quadform(p, r.matrix(), &a))
}

/// Beampattern evaluated on the whole desired grid.
pub fn beampattern_over_grid(
    p: &SelectionVector,
    r: &CovarianceMatrix,
    geom: &ArrayGeometry,
    desired: &DesiredBeampattern,
) -> Result<Vec<f64>> {
    check_len("beampattern selection", geom.num_antennas(), p.len())?;
    check_len("beampattern covariance", geom.num_antennas(), r.dim())?;
    Ok(desired
        .angles_deg()
        .iter()
        .map(|&deg| masked_quadform(p, r.matrix(), &geom.steering_vector(deg)))
        .collect())
}

/// Weighted beampattern MSE and cross-correlation penalty at scaling `alpha`.
///
/// With a single target the pairwise sum is empty and the cross term is
/// defined as zero.
pub fn sensing_objective(
    p: &SelectionVector,
    alpha: f64,
    r: &CovarianceMatrix,
    geom: &ArrayGeometry,
    desired: &DesiredBeampattern,
) -> Result<(f64, f64)> {
    let pattern = beampattern_over_grid(p, r, geom, desired)?;
    let g = desired.num_grid_points() as f64;
    let mse = pattern
        .iter()
        .zip(desired.values())
        .zip(desired.weights())
        .map(|((pw, pd), w)| {
            let d = pw - alpha * pd;
            w * d * d
        })
        .sum::<f64>()
        / g;
    Ok((mse, cross_corr_term(p, r, geom, desired)))
}

fn cross_corr_term(
    p: &SelectionVector,
    r: &CovarianceMatrix,
    geom: &ArrayGeometry,
    desired: &DesiredBeampattern,
) -> f64 {
    let q = desired.num_targets();
    if q < 2 {
        return 0.0;
    }
    let steer: Vec<_> = desired
        .target_angles_deg()
        .iter()
        .map(|&deg| geom.steering_vector(deg))
        .collect();
    let mut sum = 0.0;
    for i in 0..q {
        for j in i + 1..q {
            sum += masked_crossform(p, r.matrix(), &steer[i], &steer[j]).norm_sqr();
        }
    }
    2.0 * desired.cross_corr_weight() / ((q * q - q) as f64) * sum
}

/// Closed-form minimizer of the weighted beampattern MSE over the scaling:
/// `α* = Σ γ P P_d / Σ γ P_d²`. Errors when the weighted desired energy
/// vanishes.
pub fn alpha_star(
    p: &SelectionVector,
    r: &CovarianceMatrix,
    geom: &ArrayGeometry,
    desired: &DesiredBeampattern,
) -> Result<f64> {
    let denom = desired.weighted_energy();
    if !(denom > 0.0) {
        return Err(Error::DegenerateDesired(
            "weighted desired-beampattern energy is zero, the scaling is undetermined",
        ));
    }
    let pattern = beampattern_over_grid(p, r, geom, desired)?;
    let numer: f64 = pattern
        .iter()
        .zip(desired.values())
        .zip(desired.weights())
        .map(|((pw, pd), w)| w * pw * pd)
        .sum();
    Ok(numer / denom)
}

/// Achievable rate `log2 det(I + H Δ R Δ^H H^H / σ²)` in bits per channel
/// use, via a Cholesky factorization of the Hermitian argument.
pub fn achievable_rate(
    p: &SelectionVector,
    r: &CovarianceMatrix,
    ch: &ChannelMatrix,
) -> Result<f64> {
    check_len("rate selection", ch.num_tx_antennas(), p.len())?;
    check_len("rate covariance", ch.num_tx_antennas(), r.dim())?;
    let m = ch.num_ue_antennas();
    let hs = p.gather_columns(ch.matrix());
    let rs = p.gather_principal(r.matrix());
    let b = &hs * rs * hs.adjoint();
    let b = (&b + b.adjoint()) * Complex64::new(0.5 / ch.noise_variance(), 0.0);
    let a = DMatrix::identity(m, m) + b;
    let chol = nalgebra::Cholesky::new(a).ok_or(Error::NonFinite("achievable rate"))?;
    let ln_det: f64 = chol
        .l()
        .diagonal()
        .iter()
        .map(|x| 2.0 * x.re.ln())
        .sum();
    if !ln_det.is_finite() {
        return Err(Error::NonFinite("achievable rate"));
    }
    Ok(ln_det / LN_2)
}

/// Full scalarized objective `F - mu * C` with its per-term breakdown.
pub fn scalarized_objective(
    scenario: &Scenario,
    p: &SelectionVector,
    alpha: f64,
    r: &CovarianceMatrix,
) -> Result<ObjectiveBreakdown> {
    let (mse_term, cross_corr_term) =
        sensing_objective(p, alpha, r, scenario.geometry(), scenario.desired())?;
    let rate_bpcu = achievable_rate(p, r, scenario.channel())?;
    let mu = scenario.mu();
    Ok(ObjectiveBreakdown {
        mse_term,
        cross_corr_term,
        rate_bpcu,
        scalarized: mse_term + cross_corr_term - mu * rate_bpcu,
        alpha,
        mu,
    })
}

/// Gradient of the scalarized objective with respect to the Hermitian
/// covariance at fixed `alpha`:
///
/// `(2/G) Σ γ (P - α P_d) ã ã^H`
/// `+ (2ω/(Q²-Q)) Σ_{q<p} (c ã_q ã_p^H + c̄ ã_p ã_q^H)` with `c = ã_q^H R ã_p`,
/// `- (μ/ln 2) Δ H^H (σ² I + H Δ R Δ H^H)^{-1} H Δ`.
///
/// The convention is `d f(R + t D) / dt = tr(∇ D)` for Hermitian `D`.
pub fn objective_gradient(
    scenario: &Scenario,
    p: &SelectionVector,
    alpha: f64,
    r: &CovarianceMatrix,
) -> Result<DMatrix<Complex64>> {
    let n = scenario.num_antennas();
    check_len("gradient selection", n, p.len())?;
    check_len("gradient covariance", n, r.dim())?;
    let geom = scenario.geometry();
    let desired = scenario.desired();
    let g = desired.num_grid_points() as f64;

    let mut grad: DMatrix<Complex64> = DMatrix::zeros(n, n);
    let steering = scenario.steering_grid();
    for ((a, pd), w) in steering
        .iter()
        .zip(desired.values())
        .zip(desired.weights())
    {
        let masked = p.mask(a);
        let power = masked_quadform(p, r.matrix(), a);
        let coeff = Complex64::new(2.0 / g * w * (power - alpha * pd), 0.0);
        grad.gerc(coeff, &masked, &masked, Complex64::new(1.0, 0.0));
    }

    let q = desired.num_targets();
    if q >= 2 {
        let steer: Vec<_> = desired
            .target_angles_deg()
            .iter()
            .map(|&deg| p.mask(&geom.steering_vector(deg)))
            .collect();
        let scale = Complex64::new(2.0 * desired.cross_corr_weight() / ((q * q - q) as f64), 0.0);
        for i in 0..q {
            for j in i + 1..q {
                let c = steer[i].dotc(&(r.matrix() * &steer[j]));
                grad.gerc(scale * c, &steer[i], &steer[j], Complex64::new(1.0, 0.0));
                grad.gerc(scale * c.conj(), &steer[j], &steer[i], Complex64::new(1.0, 0.0));
            }
        }
    }

    let mu = scenario.mu();
    if mu > 0.0 {
        let ch = scenario.channel();
        check_len("gradient channel", n, ch.num_tx_antennas())?;
        let m = ch.num_ue_antennas();
        let sigma2 = ch.noise_variance();
        let mut hm = ch.matrix().clone();
        for (j, &bit) in p.bits().iter().enumerate() {
            if !bit {
                hm.column_mut(j).fill(Complex64::ZERO);
            }
        }
        let b = &hm * r.matrix() * hm.adjoint();
        let a = DMatrix::from_diagonal_element(m, m, Complex64::new(sigma2, 0.0))
            + (&b + b.adjoint()) * Complex64::new(0.5, 0.0);
        let inv = nalgebra::Cholesky::new(a)
            .ok_or(Error::NonFinite("rate gradient"))?
            .inverse();
        grad -= hm.adjoint() * inv * hm * Complex64::new(mu / LN_2, 0.0);
    }

    let grad = (&grad + grad.adjoint()) * Complex64::new(0.5, 0.0);
    debug_assert!(
        (&grad - grad.adjoint()).norm() <= 1e-10 * grad.norm().max(1.0),
        "gradient is not Hermitian"
    );
    Ok(grad)
}

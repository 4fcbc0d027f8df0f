//! Domain types: array geometry, steering vectors, antenna selection,
//! communication channel and the transmit covariance matrix.
//!
//! Angles are degrees at every public boundary and radians internally.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// Relative Frobenius tolerance for the Hermitian check on covariance inputs.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Minimum eigenvalue of a covariance matrix must be `>= -PSD_TOL * trace`.
pub const PSD_TOL: f64 = 1e-8;
/// Absolute slack allowed on the trace budget.
pub const TRACE_TOL: f64 = 1e-8;

/// Uniform linear transmit array described by element count and the
/// element spacing expressed as a fraction of the carrier wavelength.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrayGeometry {
    num_antennas: usize,
    spacing_over_wavelength: f64,
}

impl ArrayGeometry {
    pub fn new(num_antennas: usize, spacing_over_wavelength: f64) -> Result<Self> {
        if num_antennas == 0 {
            return Err(Error::validation(
                "geometry.num_antennas",
                "must be at least 1",
            ));
        }
        if !(spacing_over_wavelength > 0.0) || !spacing_over_wavelength.is_finite() {
            return Err(Error::validation(
                "geometry.spacing_over_wavelength",
                "must be a positive finite real",
            ));
        }
        Ok(Self {
            num_antennas,
            spacing_over_wavelength,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn spacing_over_wavelength(&self) -> f64 {
        self.spacing_over_wavelength
    }

    /// Steering vector of the array towards azimuth `theta_deg`.
    ///
    /// Element `n` (0-based) is `exp(-j 2π n (d/λ) sin θ)`; element 0 is
    /// exactly one and every element has unit magnitude. The caller must
    /// supply `theta_deg` in `[-90, 90]`.
    pub fn steering_vector(&self, theta_deg: f64) -> DVector<Complex64> {
        debug_assert!(
            (-90.0..=90.0).contains(&theta_deg),
            "steering angle {theta_deg} out of [-90, 90]"
        );
        let phase_step = -TAU * self.spacing_over_wavelength * theta_deg.to_radians().sin();
        DVector::from_iterator(
            self.num_antennas,
            (0..self.num_antennas).map(|n| Complex64::from_polar(1.0, phase_step * n as f64)),
        )
    }
}

/// Binary antenna-activation pattern with cardinality bookkeeping.
///
/// `selected_indices` is always the sorted list of positions where the
/// bit vector is one, so its length equals the popcount by construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectionVector {
    bits: Vec<bool>,
    selected: Vec<usize>,
}

impl SelectionVector {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        let selected = bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect();
        Self { bits, selected }
    }

    /// Selection with the listed positions active. Duplicate indices are
    /// collapsed, so the popcount can be smaller than `indices.len()`.
    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = vec![false; len];
        for &i in indices {
            if i >= len {
                return Err(Error::validation(
                    "selection",
                    format!("antenna index {i} out of range for {len} antennas"),
                ));
            }
            bits[i] = true;
        }
        Ok(Self::from_bits(bits))
    }

    pub fn all_ones(len: usize) -> Self {
        Self::from_bits(vec![true; len])
    }

    /// The contiguous selection `{0, ..., k-1}` out of `len` antennas.
    pub fn prefix(len: usize, k: usize) -> Self {
        Self::from_bits((0..len).map(|i| i < k).collect())
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn popcount(&self) -> usize {
        self.selected.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn selected_indices(&self) -> &[usize] {
        &self.selected
    }

    /// Element-wise mask `p ⊙ v`.
    pub fn mask(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        assert_eq!(v.len(), self.bits.len(), "mask length mismatch");
        DVector::from_iterator(
            v.len(),
            v.iter()
                .zip(&self.bits)
                .map(|(x, &b)| if b { *x } else { Complex64::ZERO }),
        )
    }

    /// The subvector of `v` at the selected positions.
    pub fn gather(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        assert_eq!(v.len(), self.bits.len(), "gather length mismatch");
        DVector::from_iterator(self.selected.len(), self.selected.iter().map(|&i| v[i]))
    }

    /// The submatrix of `m` keeping only the selected columns.
    pub fn gather_columns(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert_eq!(m.ncols(), self.bits.len(), "gather_columns width mismatch");
        let mut out = DMatrix::zeros(m.nrows(), self.selected.len());
        for (j, &col) in self.selected.iter().enumerate() {
            out.set_column(j, &m.column(col));
        }
        out
    }

    /// The principal submatrix of `m` on the selected index set.
    pub fn gather_principal(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert_eq!(m.nrows(), self.bits.len(), "gather_principal size mismatch");
        assert_eq!(m.ncols(), self.bits.len(), "gather_principal size mismatch");
        let k = self.selected.len();
        DMatrix::from_fn(k, k, |i, j| m[(self.selected[i], self.selected[j])])
    }

    /// Embeds a matrix defined on the selected index set back into the
    /// full array dimension, zero elsewhere.
    pub fn scatter_principal(&self, sub: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let k = self.selected.len();
        assert_eq!(sub.nrows(), k, "scatter_principal size mismatch");
        assert_eq!(sub.ncols(), k, "scatter_principal size mismatch");
        let mut out = DMatrix::zeros(self.bits.len(), self.bits.len());
        for i in 0..k {
            for j in 0..k {
                out[(self.selected[i], self.selected[j])] = sub[(i, j)];
            }
        }
        out
    }
}

/// Flat-fading MIMO channel between the transmit array and the user.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrix {
    h: DMatrix<Complex64>,
    noise_variance: f64,
}

impl ChannelMatrix {
    pub fn new(h: DMatrix<Complex64>, noise_variance: f64) -> Result<Self> {
        if !(noise_variance > 0.0) || !noise_variance.is_finite() {
            return Err(Error::validation(
                "channel.noise_variance",
                "must be a positive finite real",
            ));
        }
        Ok(Self { h, noise_variance })
    }

    /// Seeded Rayleigh draw: entries are i.i.d. circularly symmetric
    /// complex Gaussian with unit variance (real and imaginary parts each
    /// of variance 1/2).
    ///
    /// The generator is pinned for reproducibility across platforms and
    /// reimplementations: a ChaCha8 stream keyed by the 64-bit seed
    /// (`ChaCha8Rng::seed_from_u64`), consumed row-major over entries
    /// (UE antenna index outer, transmit antenna index inner). Each entry
    /// takes two raw `u64` words `x1, x2` mapped to uniforms
    /// `u1 = ((x1 >> 11) + 1) * 2^-53` in (0, 1] and
    /// `u2 = (x2 >> 11) * 2^-53` in [0, 1), then Box-Muller:
    /// `re = sqrt(-ln u1) * cos(2π u2)`, `im = sqrt(-ln u1) * sin(2π u2)`.
    pub fn rayleigh(m: usize, n: usize, seed: u64, noise_variance: f64) -> Result<Self> {
        Self::new(rayleigh_matrix(m, n, seed), noise_variance)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    pub fn num_ue_antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn num_tx_antennas(&self) -> usize {
        self.h.ncols()
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }
}

/// Raw seeded Rayleigh matrix draw; see [`ChannelMatrix::rayleigh`] for the
/// pinned generator recipe.
pub fn rayleigh_matrix(m: usize, n: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 2f64.powi(-53);
    let mut entries = Vec::with_capacity(m * n);
    for _row in 0..m {
        for _col in 0..n {
            let u1 = ((rng.next_u64() >> 11) + 1) as f64 * scale;
            let u2 = (rng.next_u64() >> 11) as f64 * scale;
            let r = (-u1.ln()).sqrt();
            let phase = TAU * u2;
            entries.push(Complex64::new(r * phase.cos(), r * phase.sin()));
        }
    }
    // Entries were produced row-major; nalgebra stores column-major.
    DMatrix::from_row_iterator(m, n, entries)
}

/// Desired transmit beampattern over a uniform angular grid, with the
/// per-angle weights and the cross-correlation penalty configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct DesiredBeampattern {
    angles_deg: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
    cross_corr_weight: f64,
    target_angles_deg: Vec<f64>,
}

impl DesiredBeampattern {
    pub fn new(
        angles_deg: Vec<f64>,
        values: Vec<f64>,
        weights: Vec<f64>,
        cross_corr_weight: f64,
        target_angles_deg: Vec<f64>,
    ) -> Result<Self> {
        if angles_deg.is_empty() {
            return Err(Error::validation("desired", "angular grid is empty"));
        }
        if values.len() != angles_deg.len() {
            return Err(Error::DimensionMismatch {
                context: "desired beampattern values",
                expected: angles_deg.len(),
                actual: values.len(),
            });
        }
        if weights.len() != angles_deg.len() {
            return Err(Error::DimensionMismatch {
                context: "desired beampattern weights",
                expected: angles_deg.len(),
                actual: weights.len(),
            });
        }
        if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::validation(
                "desired.values",
                "beampattern values must be nonnegative",
            ));
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::validation(
                "desired.weights",
                "weights must be nonnegative",
            ));
        }
        if !(cross_corr_weight >= 0.0) || !cross_corr_weight.is_finite() {
            return Err(Error::validation(
                "desired.cross_corr_weight",
                "must be a nonnegative real",
            ));
        }
        if target_angles_deg.is_empty() {
            return Err(Error::validation(
                "desired.target_angles_deg",
                "at least one target angle is required",
            ));
        }
        let lo = angles_deg.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = angles_deg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for &t in &target_angles_deg {
            if t < lo || t > hi {
                return Err(Error::validation(
                    "desired.target_angles_deg",
                    format!("target angle {t} lies outside the grid span [{lo}, {hi}]"),
                ));
            }
        }
        let not_identically_zero = values.iter().any(|v| *v > 0.0);
        let weighted_energy: f64 = values
            .iter()
            .zip(&weights)
            .map(|(v, w)| w * v * v)
            .sum();
        if not_identically_zero && !(weighted_energy > 0.0) {
            return Err(Error::validation(
                "desired.weights",
                "weighted beampattern energy vanishes although the pattern is nonzero",
            ));
        }
        Ok(Self {
            angles_deg,
            values,
            weights,
            cross_corr_weight,
            target_angles_deg,
        })
    }

    pub fn num_grid_points(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn num_targets(&self) -> usize {
        self.target_angles_deg.len()
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cross_corr_weight(&self) -> f64 {
        self.cross_corr_weight
    }

    pub fn target_angles_deg(&self) -> &[f64] {
        &self.target_angles_deg
    }

    /// `Σ_g γ_g P_d(θ_g)²`, the denominator of the closed-form scaling.
    pub fn weighted_energy(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * v * v)
            .sum()
    }
}

/// Hermitian positive semidefinite transmit covariance with a trace budget.
///
/// The checked constructor enforces Hermitian symmetry to `1e-10` relative
/// Frobenius, minimum eigenvalue `>= -1e-8 · tr(R)` and
/// `tr(R) <= P_Tx + 1e-8`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    m: DMatrix<Complex64>,
}

impl CovarianceMatrix {
    pub fn new(m: DMatrix<Complex64>, power_budget: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                context: "covariance matrix",
                expected: m.nrows(),
                actual: m.ncols(),
            });
        }
        if m.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::NonFinite("covariance matrix"));
        }
        let herm_residual = (&m - m.adjoint()).norm();
        if herm_residual > HERMITIAN_TOL * m.norm().max(1e-300) {
            return Err(Error::validation(
                "covariance",
                format!("matrix is not Hermitian (residual {herm_residual:.3e})"),
            ));
        }
        let trace = m.diagonal().iter().map(|x| x.re).sum::<f64>();
        if trace > power_budget + TRACE_TOL {
            return Err(Error::validation(
                "covariance",
                format!("trace {trace} exceeds power budget {power_budget}"),
            ));
        }
        let sym = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let min_eig = nalgebra::SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL * trace.abs().max(1e-300) {
            return Err(Error::validation(
                "covariance",
                format!("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})"),
            ));
        }
        Ok(Self { m })
    }

    /// Wraps a matrix that is Hermitian PSD by construction (e.g. the
    /// output of a feasibility projection).
    pub fn new_unchecked(m: DMatrix<Complex64>) -> Self {
        Self { m }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    pub fn scaled_identity(n: usize, diag: f64) -> Self {
        Self {
            m: DMatrix::from_diagonal_element(n, n, Complex64::new(diag, 0.0)),
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|x| x.re).sum()
    }
}

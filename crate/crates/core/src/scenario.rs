//! Scenario configuration: the JSON file schema, validation and the
//! resolved immutable [`Scenario`] consumed by the solvers.

use std::path::Path;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArrayGeometry, ChannelMatrix, DesiredBeampattern};

/// On-disk scenario document. Unknown fields are a hard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub geometry: GeometrySpec,
    pub num_rf_chains: usize,
    pub channel: ChannelSpec,
    pub desired: DesiredSpec,
    pub power: f64,
    pub mu: MuSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub num_antennas: usize,
    pub spacing_over_wavelength: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub num_ue_antennas: usize,
    pub noise_variance: f64,
    /// Seed for the pinned Rayleigh generator. Ignored when
    /// `explicit_matrix` is present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Row-major `[re, im]` pairs, one row per UE antenna. Takes
    /// precedence over `seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_matrix: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesiredSpec {
    #[serde(default = "default_grid_start")]
    pub grid_start_deg: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step_deg: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    pub mainlobes: Vec<MainlobeSpec>,
    #[serde(default = "default_unit_weight")]
    pub weights_default: f64,
    #[serde(default = "default_unit_weight")]
    pub cross_corr_weight: f64,
    pub target_angles_deg: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MainlobeSpec {
    pub center_deg: f64,
    pub beamwidth_deg: f64,
    pub level: f64,
}

fn default_grid_start() -> f64 {
    -90.0
}

fn default_grid_step() -> f64 {
    1.0
}

fn default_grid_points() -> usize {
    181
}

fn default_unit_weight() -> f64 {
    1.0
}

/// Trade-off parameter: a single value or a sweep list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuSpec {
    Scalar(f64),
    List(Vec<f64>),
}

impl MuSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            MuSpec::Scalar(v) => vec![*v],
            MuSpec::List(v) => v.clone(),
        }
    }
}

/// Fully validated, immutable problem description.
///
/// All fields are fixed at construction; the type is safe to share across
/// threads. `mu()` is the active trade-off value and `mu_sweep()` the full
/// list from the scenario file (a scalar file entry yields a one-element
/// sweep).
#[derive(Clone, Debug)]
pub struct Scenario {
    geometry: ArrayGeometry,
    num_rf_chains: usize,
    channel: ChannelMatrix,
    channel_seed: Option<u64>,
    desired: DesiredBeampattern,
    desired_spec: DesiredSpec,
    power: f64,
    mu_sweep: Vec<f64>,
    steering_grid: OnceLock<Arc<Vec<DVector<Complex64>>>>,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.geometry == other.geometry
            && self.num_rf_chains == other.num_rf_chains
            && self.channel == other.channel
            && self.desired == other.desired
            && self.power == other.power
            && self.mu_sweep == other.mu_sweep
    }
}

impl Scenario {
    pub fn from_spec(spec: &ScenarioSpec) -> Result<Self> {
        let geometry = ArrayGeometry::new(
            spec.geometry.num_antennas,
            spec.geometry.spacing_over_wavelength,
        )?;
        let n = geometry.num_antennas();

        if spec.num_rf_chains == 0 {
            return Err(Error::validation("num_rf_chains", "must be at least 1"));
        }
        if spec.num_rf_chains > n {
            return Err(Error::validation(
                "num_rf_chains",
                format!(
                    "{} RF chains exceed the {} available antennas",
                    spec.num_rf_chains, n
                ),
            ));
        }

        let m = spec.channel.num_ue_antennas;
        if m == 0 {
            return Err(Error::validation(
                "channel.num_ue_antennas",
                "must be at least 1",
            ));
        }
        let channel = match &spec.channel.explicit_matrix {
            Some(rows) => {
                if rows.len() != m {
                    return Err(Error::validation(
                        "channel.explicit_matrix",
                        format!("expected {} rows, got {}", m, rows.len()),
                    ));
                }
                let mut h = DMatrix::zeros(m, n);
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::validation(
                            "channel.explicit_matrix",
                            format!("row {} has {} entries, expected {}", i, row.len(), n),
                        ));
                    }
                    for (j, &[re, im]) in row.iter().enumerate() {
                        h[(i, j)] = Complex64::new(re, im);
                    }
                }
                ChannelMatrix::new(h, spec.channel.noise_variance)?
            }
            None => {
                let seed = spec.channel.seed.ok_or_else(|| {
                    Error::validation(
                        "channel",
                        "either `seed` or `explicit_matrix` must be given",
                    )
                })?;
                ChannelMatrix::rayleigh(m, n, seed, spec.channel.noise_variance)?
            }
        };
        let channel_seed = match spec.channel.explicit_matrix {
            Some(_) => None,
            None => spec.channel.seed,
        };

        let desired = build_desired(&spec.desired)?;

        if !(spec.power > 0.0) || !spec.power.is_finite() {
            return Err(Error::validation("power", "must be a positive finite real"));
        }
        let mu_sweep = spec.mu.values();
        if mu_sweep.is_empty() {
            return Err(Error::validation("mu", "list must not be empty"));
        }
        if mu_sweep.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::validation("mu", "values must be nonnegative reals"));
        }

        Ok(Self {
            geometry,
            num_rf_chains: spec.num_rf_chains,
            channel,
            channel_seed,
            desired,
            desired_spec: spec.desired.clone(),
            power: spec.power,
            mu_sweep,
            steering_grid: OnceLock::new(),
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: ScenarioSpec =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Canonical document reproducing this scenario. A seeded channel is
    /// written back as its seed, an explicit channel as the full matrix;
    /// the active `mu` sweep is preserved.
    pub fn to_spec(&self) -> ScenarioSpec {
        let channel = match self.channel_seed {
            Some(seed) => ChannelSpec {
                num_ue_antennas: self.channel.num_ue_antennas(),
                noise_variance: self.channel.noise_variance(),
                seed: Some(seed),
                explicit_matrix: None,
            },
            None => {
                let h = self.channel.matrix();
                let rows = (0..h.nrows())
                    .map(|i| (0..h.ncols()).map(|j| [h[(i, j)].re, h[(i, j)].im]).collect())
                    .collect();
                ChannelSpec {
                    num_ue_antennas: self.channel.num_ue_antennas(),
                    noise_variance: self.channel.noise_variance(),
                    seed: None,
                    explicit_matrix: Some(rows),
                }
            }
        };
        ScenarioSpec {
            geometry: GeometrySpec {
                num_antennas: self.geometry.num_antennas(),
                spacing_over_wavelength: self.geometry.spacing_over_wavelength(),
            },
            num_rf_chains: self.num_rf_chains,
            channel,
            desired: self.desired_spec.clone(),
            power: self.power,
            mu: if self.mu_sweep.len() == 1 {
                MuSpec::Scalar(self.mu_sweep[0])
            } else {
                MuSpec::List(self.mu_sweep.clone())
            },
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("scenario serialization")
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn num_antennas(&self) -> usize {
        self.geometry.num_antennas()
    }

    pub fn num_rf_chains(&self) -> usize {
        self.num_rf_chains
    }

    pub fn channel(&self) -> &ChannelMatrix {
        &self.channel
    }

    /// Seed of the channel draw, `None` when the matrix was given explicitly.
    pub fn channel_seed(&self) -> Option<u64> {
        self.channel_seed
    }

    pub fn desired(&self) -> &DesiredBeampattern {
        &self.desired
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Active trade-off parameter (first sweep entry).
    pub fn mu(&self) -> f64 {
        self.mu_sweep[0]
    }

    pub fn mu_sweep(&self) -> &[f64] {
        &self.mu_sweep
    }

    /// Same scenario with the active trade-off replaced.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::validation("mu", "values must be nonnegative reals"));
        }
        let mut out = self.clone();
        out.mu_sweep = vec![mu];
        Ok(out)
    }

    /// Same scenario with the channel regenerated from `seed`. Fails when
    /// the channel was supplied explicitly.
    pub fn with_seed(&self, seed: u64) -> Result<Self> {
        if self.channel_seed.is_none() {
            return Err(Error::validation(
                "channel.seed",
                "cannot reseed a scenario with an explicit channel matrix",
            ));
        }
        let mut out = self.clone();
        out.channel = ChannelMatrix::rayleigh(
            self.channel.num_ue_antennas(),
            self.num_antennas(),
            seed,
            self.channel.noise_variance(),
        )?;
        out.channel_seed = Some(seed);
        Ok(out)
    }

    /// Steering vectors for every grid angle, computed once and shared.
    pub fn steering_grid(&self) -> Arc<Vec<DVector<Complex64>>> {
        self.steering_grid
            .get_or_init(|| {
                Arc::new(
                    self.desired
                        .angles_deg()
                        .iter()
                        .map(|&deg| self.geometry.steering_vector(deg))
                        .collect(),
                )
            })
            .clone()
    }
}

fn build_desired(spec: &DesiredSpec) -> Result<DesiredBeampattern> {
    if spec.grid_points == 0 {
        return Err(Error::validation(
            "desired.grid_points",
            "must be at least 1",
        ));
    }
    if !(spec.grid_step_deg > 0.0) || !spec.grid_step_deg.is_finite() {
        return Err(Error::validation(
            "desired.grid_step_deg",
            "must be a positive finite real",
        ));
    }
    let angles: Vec<f64> = (0..spec.grid_points)
        .map(|g| spec.grid_start_deg + g as f64 * spec.grid_step_deg)
        .collect();
    let lo = angles[0];
    let hi = angles[angles.len() - 1];
    if lo < -90.0 || hi > 90.0 {
        return Err(Error::validation(
            "desired.grid_start_deg",
            format!("grid [{lo}, {hi}] must lie within [-90, 90]"),
        ));
    }
    for (i, lobe) in spec.mainlobes.iter().enumerate() {
        if lobe.level < 0.0 || !lobe.level.is_finite() {
            return Err(Error::validation(
                format!("desired.mainlobes[{i}].level"),
                "must be a nonnegative real",
            ));
        }
        if lobe.beamwidth_deg < 0.0 || !lobe.beamwidth_deg.is_finite() {
            return Err(Error::validation(
                format!("desired.mainlobes[{i}].beamwidth_deg"),
                "must be a nonnegative real",
            ));
        }
    }
    if spec.weights_default < 0.0 || !spec.weights_default.is_finite() {
        return Err(Error::validation(
            "desired.weights_default",
            "must be a nonnegative real",
        ));
    }
    let values: Vec<f64> = angles
        .iter()
        .map(|&theta| {
            spec.mainlobes
                .iter()
                .filter(|lobe| (theta - lobe.center_deg).abs() <= lobe.beamwidth_deg / 2.0)
                .map(|lobe| lobe.level)
                .fold(0.0, f64::max)
        })
        .collect();
    let weights = vec![spec.weights_default; angles.len()];
    DesiredBeampattern::new(
        angles,
        values,
        weights,
        spec.cross_corr_weight,
        spec.target_angles_deg.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn setup1_json() -> String {
        r#"{
            "geometry": {"num_antennas": 12, "spacing_over_wavelength": 0.5},
            "num_rf_chains": 8,
            "channel": {"num_ue_antennas": 4, "noise_variance": 0.01, "seed": 1},
            "desired": {
                "grid_start_deg": -90.0,
                "grid_step_deg": 1.0,
                "grid_points": 181,
                "mainlobes": [
                    {"center_deg": -30.0, "beamwidth_deg": 15.0, "level": 1.0},
                    {"center_deg": 30.0, "beamwidth_deg": 15.0, "level": 1.0}
                ],
                "weights_default": 1.0,
                "cross_corr_weight": 1.0,
                "target_angles_deg": [-30.0, 30.0]
            },
            "power": 1.0,
            "mu": [0.0, 0.0001, 0.001, 0.01, 0.1, 1.0]
        }"#
        .to_string()
    }

    #[test]
    fn parses_setup1_dimensions() {
        let sc = Scenario::from_json_str(&setup1_json()).unwrap();
        assert_eq!(sc.num_antennas(), 12);
        assert_eq!(sc.num_rf_chains(), 8);
        assert_eq!(sc.channel().num_ue_antennas(), 4);
        assert_eq!(sc.desired().num_grid_points(), 181);
        assert_eq!(sc.desired().num_targets(), 2);
        assert_eq!(sc.mu(), 0.0);
        assert_eq!(sc.mu_sweep().len(), 6);
        // two 15-degree lobes on a 1-degree grid activate 30 points
        let lit = sc.desired().values().iter().filter(|v| **v > 0.0).count();
        assert_eq!(lit, 30);
    }

    #[test]
    fn rejects_more_chains_than_antennas() {
        let text = setup1_json().replace("\"num_rf_chains\": 8", "\"num_rf_chains\": 13");
        let err = Scenario::from_json_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("num_rf_chains"), "error was: {msg}");
    }

    #[test]
    fn explicit_matrix_wins_over_seed() {
        let mut spec: ScenarioSpec = serde_json::from_str(&setup1_json()).unwrap();
        spec.geometry.num_antennas = 2;
        spec.num_rf_chains = 2;
        spec.channel.num_ue_antennas = 1;
        spec.channel.explicit_matrix = Some(vec![vec![[1.0, 2.0], [3.0, -4.0]]]);
        let sc = Scenario::from_spec(&spec).unwrap();
        assert_eq!(sc.channel().matrix()[(0, 1)], Complex64::new(3.0, -4.0));
        assert_eq!(sc.channel_seed(), None);
    }

    #[test]
    fn unknown_field_is_a_hard_error() {
        let text = setup1_json().replace("\"power\": 1.0", "\"power\": 1.0, \"bogus\": 3");
        assert!(matches!(
            Scenario::from_json_str(&text),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn roundtrips_through_serialization() {
        let sc = Scenario::from_json_str(&setup1_json()).unwrap();
        let again = Scenario::from_json_str(&sc.to_json_string()).unwrap();
        assert_eq!(sc, again);

        // explicit-matrix scenarios roundtrip too
        let mut spec = sc.to_spec();
        let h = sc.channel().matrix();
        spec.channel.seed = None;
        spec.channel.explicit_matrix = Some(
            (0..h.nrows())
                .map(|i| (0..h.ncols()).map(|j| [h[(i, j)].re, h[(i, j)].im]).collect())
                .collect(),
        );
        let explicit = Scenario::from_spec(&spec).unwrap();
        let back = Scenario::from_json_str(&explicit.to_json_string()).unwrap();
        assert_eq!(explicit, back);
        assert_eq!(explicit, sc);
    }

    #[test]
    fn target_outside_grid_span_is_rejected() {
        let text = setup1_json().replace("[-30.0, 30.0]", "[-30.0, 95.0]");
        let err = Scenario::from_json_str(&text).unwrap_err();
        assert!(err.to_string().contains("target_angles_deg"));
    }

    #[test]
    fn reseeding_changes_only_the_channel() {
        let sc = Scenario::from_json_str(&setup1_json()).unwrap();
        let other = sc.with_seed(9).unwrap();
        assert_eq!(other.channel_seed(), Some(9));
        assert_ne!(sc.channel().matrix(), other.channel().matrix());
        assert_eq!(sc.desired(), other.desired());
    }
}

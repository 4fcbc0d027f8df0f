//! Shared record types for sweep outputs and trade-off curves.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Selection method of a solve or sweep cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Dynamic-programming selection.
    Dp,
    /// Exhaustive search over all supports.
    Es,
    /// Fixed contiguous array without selection.
    Ula,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Dp, Method::Es, Method::Ula];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Dp => "dp",
            Method::Es => "es",
            Method::Ula => "ula",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "dp" => Ok(Method::Dp),
            "es" => Ok(Method::Es),
            "ula" => Ok(Method::Ula),
            other => Err(Error::validation(
                "method",
                format!("unknown method `{other}`, expected dp|es|ula"),
            )),
        }
    }
}

/// One point of a trade-off table: the achieved rate, beampattern MSE and
/// scalarized objective of one `(mu, method, seed)` cell.
///
/// `seed` is `-1` for scenarios with an explicit channel matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub mu: f64,
    pub method: Method,
    pub seed: i64,
    pub rate_bpcu: f64,
    pub beampattern_mse: f64,
    pub cross_corr: f64,
    pub objective: f64,
    pub wall_time_s: f64,
    pub inner_solves: usize,
}

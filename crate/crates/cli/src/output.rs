//! Versioned CSV/JSON emission and CSV parsing for sweep and beampattern
//! tables. All floats are written with 17 significant digits so tables
//! round-trip losslessly.

use isac_core::{Method, TradeoffPoint};
use serde::{Deserialize, Serialize};

/// Schema tag written as the first header line of every table.
pub const SCHEMA_VERSION: &str = "isac-select v1";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One sweep cell: either a solved trade-off point or a recorded failure.
#[derive(Clone, Debug, PartialEq)]
pub enum SweepRow {
    Ok(TradeoffPoint),
    Failed {
        mu: f64,
        method: Method,
        seed: i64,
        message: String,
    },
}

impl SweepRow {
    pub fn key(&self) -> (f64, Method, i64) {
        match self {
            SweepRow::Ok(p) => (p.mu, p.method, p.seed),
            SweepRow::Failed {
                mu, method, seed, ..
            } => (*mu, *method, *seed),
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, SweepRow::Ok(_))
    }
}

/// JSON shape of a sweep row; metric fields are absent on failed rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JsonRow {
    pub mu: f64,
    pub method: Method,
    pub seed: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_bpcu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beampattern_mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_corr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_solves: Option<usize>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl From<&SweepRow> for JsonRow {
    fn from(row: &SweepRow) -> Self {
        match row {
            SweepRow::Ok(p) => JsonRow {
                mu: p.mu,
                method: p.method,
                seed: p.seed,
                rate_bpcu: Some(p.rate_bpcu),
                beampattern_mse: Some(p.beampattern_mse),
                cross_corr: Some(p.cross_corr),
                objective: Some(p.objective),
                wall_time_s: Some(p.wall_time_s),
                inner_solves: Some(p.inner_solves),
                status: "ok".into(),
                message: None,
            },
            SweepRow::Failed {
                mu,
                method,
                seed,
                message,
            } => JsonRow {
                mu: *mu,
                method: *method,
                seed: *seed,
                rate_bpcu: None,
                beampattern_mse: None,
                cross_corr: None,
                objective: None,
                wall_time_s: None,
                inner_solves: None,
                status: "error".into(),
                message: Some(message.clone()),
            },
        }
    }
}

fn csv_quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn header_lines(timestamp: Option<&str>) -> String {
    let mut out = format!("# {SCHEMA_VERSION}\n");
    if let Some(ts) = timestamp {
        out.push_str(&format!("# generated {ts}\n"));
    }
    out
}

pub const SWEEP_COLUMNS: &str =
    "mu,method,seed,rate_bpcu,beampattern_mse,cross_corr,objective,wall_time_s,inner_solves,status,message";

pub fn sweep_to_csv(rows: &[SweepRow], timestamp: Option<&str>) -> String {
    let mut out = header_lines(timestamp);
    out.push_str(SWEEP_COLUMNS);
    out.push('\n');
    for row in rows {
        match row {
            SweepRow::Ok(p) => {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},ok,\n",
                    fmt_f64(p.mu),
                    p.method,
                    p.seed,
                    fmt_f64(p.rate_bpcu),
                    fmt_f64(p.beampattern_mse),
                    fmt_f64(p.cross_corr),
                    fmt_f64(p.objective),
                    fmt_f64(p.wall_time_s),
                    p.inner_solves,
                ));
            }
            SweepRow::Failed {
                mu,
                method,
                seed,
                message,
            } => {
                out.push_str(&format!(
                    "{},{},{},,,,,,,error,{}\n",
                    fmt_f64(*mu),
                    method,
                    seed,
                    csv_quote(message),
                ));
            }
        }
    }
    out
}

pub fn sweep_to_json(rows: &[SweepRow], timestamp: Option<&str>) -> String {
    let doc = serde_json::json!({
        "schema": SCHEMA_VERSION,
        "generated": timestamp,
        "rows": rows.iter().map(JsonRow::from).collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&doc).expect("sweep serialization")
}

/// Splits one CSV record, honoring double-quoted fields.
fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut field = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted => {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    field.push('"');
                } else {
                    quoted = false;
                }
            }
            '"' => quoted = true,
            ',' if !quoted => fields.push(std::mem::take(&mut field)),
            c => field.push(c),
        }
    }
    fields.push(field);
    fields
}

/// Parses a sweep table produced by [`sweep_to_csv`].
pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>, String> {
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.is_empty() || line.starts_with("mu,") {
            continue;
        }
        let f = split_csv_line(line);
        if f.len() != 11 {
            return Err(format!("expected 11 fields, got {}: {line}", f.len()));
        }
        let parse_f64 =
            |s: &str| -> Result<f64, String> { s.parse().map_err(|e| format!("{e}: `{s}`")) };
        let mu = parse_f64(&f[0])?;
        let method: Method = f[1].parse().map_err(|e| format!("{e}"))?;
        let seed: i64 = f[2].parse().map_err(|e| format!("{e}: `{}`", f[2]))?;
        if f[9] == "ok" {
            rows.push(SweepRow::Ok(TradeoffPoint {
                mu,
                method,
                seed,
                rate_bpcu: parse_f64(&f[3])?,
                beampattern_mse: parse_f64(&f[4])?,
                cross_corr: parse_f64(&f[5])?,
                objective: parse_f64(&f[6])?,
                wall_time_s: parse_f64(&f[7])?,
                inner_solves: f[8].parse().map_err(|e| format!("{e}: `{}`", f[8]))?,
            }));
        } else {
            rows.push(SweepRow::Failed {
                mu,
                method,
                seed,
                message: f[10].clone(),
            });
        }
    }
    Ok(rows)
}

/// One angular grid point of an exported beampattern.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeampatternRow {
    pub theta_deg: f64,
    pub power: f64,
    pub desired_scaled: f64,
}

pub fn beampattern_to_csv(rows: &[BeampatternRow], db: bool, timestamp: Option<&str>) -> String {
    let mut out = header_lines(timestamp);
    if db {
        out.push_str("theta_deg,power_db,desired_scaled_db\n");
    } else {
        out.push_str("theta_deg,power,desired_scaled\n");
    }
    let conv = |x: f64| {
        if db {
            10.0 * x.max(1e-300).log10()
        } else {
            x
        }
    };
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(r.theta_deg),
            fmt_f64(conv(r.power)),
            fmt_f64(conv(r.desired_scaled)),
        ));
    }
    out
}

pub fn beampattern_to_json(
    rows: &[BeampatternRow],
    db: bool,
    timestamp: Option<&str>,
) -> String {
    let conv = |x: f64| {
        if db {
            10.0 * x.max(1e-300).log10()
        } else {
            x
        }
    };
    let converted: Vec<BeampatternRow> = rows
        .iter()
        .map(|r| BeampatternRow {
            theta_deg: r.theta_deg,
            power: conv(r.power),
            desired_scaled: conv(r.desired_scaled),
        })
        .collect();
    let doc = serde_json::json!({
        "schema": SCHEMA_VERSION,
        "generated": timestamp,
        "db": db,
        "rows": converted,
    });
    serde_json::to_string_pretty(&doc).expect("beampattern serialization")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_exact() {
        let rows = vec![
            SweepRow::Ok(TradeoffPoint {
                mu: 0.0001,
                method: Method::Dp,
                seed: 3,
                rate_bpcu: 17.123456789012345,
                beampattern_mse: 0.2281601234567890,
                cross_corr: 1.234e-9,
                objective: -0.0015551234567890123,
                wall_time_s: 1.5,
                inner_solves: 1009,
            }),
            SweepRow::Failed {
                mu: 1.0,
                method: Method::Es,
                seed: 3,
                message: "budget, \"exceeded\"".into(),
            },
        ];
        let csv = sweep_to_csv(&rows, None);
        let parsed = parse_sweep_csv(&csv).unwrap();
        assert_eq!(parsed, rows);
    }

    #[test]
    fn csv_has_schema_header_and_optional_timestamp() {
        let csv = sweep_to_csv(&[], Some("2000-01-01T00:00:00Z"));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("# isac-select v1"));
        assert_eq!(lines.next(), Some("# generated 2000-01-01T00:00:00Z"));
        assert_eq!(lines.next(), Some(SWEEP_COLUMNS));

        let bare = sweep_to_csv(&[], None);
        assert_eq!(bare.lines().count(), 2);
    }

    #[test]
    fn db_conversion_applies_to_power_columns() {
        let rows = vec![BeampatternRow {
            theta_deg: -90.0,
            power: 0.1,
            desired_scaled: 0.0,
        }];
        let csv = beampattern_to_csv(&rows, true, None);
        assert!(csv.contains("power_db"));
        let line = csv.lines().last().unwrap();
        let fields: Vec<&str> = line.split(',').collect();
        let p: f64 = fields[1].parse().unwrap();
        assert!((p + 10.0).abs() < 1e-9);
        // zero power clamps to a large negative floor instead of -inf
        let d: f64 = fields[2].parse().unwrap();
        assert!(d < -1000.0 && d.is_finite());
    }
}

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spinreset::analysis::{RowRegime, SweepResult, SweepRow};
use spinreset::trajectory_sim::GridPoint;

use crate::args::{Format, OutputArgs};
use crate::error::{CliError, CliResult};

pub const SWEEP_HEADER: [&str; 8] = [
    "omega_over_delta",
    "density",
    "density_stderr",
    "correlation",
    "correlation_stderr",
    "lqu",
    "lqu_stderr",
    "regime",
];

pub const ENSEMBLE_HEADER: [&str; 10] = [
    "time",
    "density",
    "density_stderr",
    "two_point",
    "two_point_stderr",
    "correlation",
    "correlation_stderr",
    "lqu",
    "lqu_stderr",
    "below_half_fraction",
];

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    /// Unit of frequency: `delta`, or `omega` when the detuning is zero.
    pub units: String,
    pub wall_time_seconds: f64,
    pub outputs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            argv: std::env::args().collect(),
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            units: "delta".into(),
            wall_time_seconds: 0.0,
            outputs: Vec::new(),
            notes: Vec::new(),
        }
    }
}

/// JSON output: the result together with its manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonDocument<T> {
    pub manifest: RunManifest,
    pub result: T,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io {
        path: "<csv>".into(),
        message: e.to_string(),
    }
}

fn sweep_record(row: &SweepRow) -> [String; 8] {
    [
        fmt_f64(row.omega_over_delta),
        fmt_f64(row.density),
        fmt_f64(row.density_stderr),
        fmt_f64(row.correlation),
        fmt_f64(row.correlation_stderr),
        fmt_f64(row.lqu),
        fmt_f64(row.lqu_stderr),
        row.regime.as_str().to_string(),
    ]
}

pub fn sweep_csv(rows: &[SweepRow]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).map_err(csv_error)?;
    for row in rows {
        w.write_record(sweep_record(row)).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| CliError::io("<csv>", e))
}

/// Sweep table with a leading `n_spins` column.
pub fn finite_size_csv(blocks: &[(String, Vec<SweepRow>)]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = std::iter::once("n_spins").chain(SWEEP_HEADER).collect();
    w.write_record(header).map_err(csv_error)?;
    for (n, rows) in blocks {
        for row in rows {
            let rec: Vec<String> = std::iter::once(n.clone())
                .chain(sweep_record(row))
                .collect();
            w.write_record(rec).map_err(csv_error)?;
        }
    }
    w.into_inner().map_err(|e| CliError::io("<csv>", e))
}

pub fn ensemble_csv(points: &[GridPoint]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ENSEMBLE_HEADER).map_err(csv_error)?;
    for p in points {
        w.write_record([
            fmt_f64(p.time),
            fmt_f64(p.density),
            fmt_f64(p.density_stderr),
            fmt_f64(p.two_point),
            fmt_f64(p.two_point_stderr),
            fmt_f64(p.correlation),
            fmt_f64(p.correlation_stderr),
            fmt_f64(p.lqu.unwrap_or(f64::NAN)),
            fmt_f64(p.lqu_stderr.unwrap_or(f64::NAN)),
            fmt_f64(p.below_half_fraction),
        ])
        .map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| CliError::io("<csv>", e))
}

#[derive(Debug, Deserialize)]
struct CsvSweepRow {
    omega_over_delta: f64,
    density: f64,
    density_stderr: f64,
    correlation: f64,
    correlation_stderr: f64,
    lqu: f64,
    lqu_stderr: f64,
    regime: String,
}

pub fn read_sweep_csv(bytes: &[u8]) -> CliResult<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(bytes);
    let mut rows = Vec::new();
    for rec in r.deserialize::<CsvSweepRow>() {
        let rec = rec.map_err(csv_error)?;
        let regime: RowRegime = rec.regime.parse().map_err(CliError::Validation)?;
        rows.push(SweepRow {
            omega_over_delta: rec.omega_over_delta,
            density: rec.density,
            density_stderr: rec.density_stderr,
            correlation: rec.correlation,
            correlation_stderr: rec.correlation_stderr,
            lqu: rec.lqu,
            lqu_stderr: rec.lqu_stderr,
            regime,
            error: None,
        });
    }
    Ok(rows)
}

/// Sweep rows from a CSV table, a JSON document, or a bare JSON sweep.
pub fn read_sweep_rows(path: &Path) -> CliResult<Vec<SweepRow>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let looks_json = bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{');
    if !looks_json {
        return read_sweep_csv(&bytes);
    }
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| CliError::io(path, e))?;
    let inner = value.get("result").cloned().unwrap_or(value);
    let sweep: SweepResult = serde_json::from_value(inner).map_err(|e| CliError::io(path, e))?;
    Ok(sweep.rows)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path, e))
}

/// Writes `csv` or the JSON document to `output.out` (or stdout) and the
/// manifest next to it.
pub fn emit<T: Serialize>(
    output: &OutputArgs,
    csv: Vec<u8>,
    result: &T,
    mut manifest: RunManifest,
    extra_outputs: &[PathBuf],
) -> CliResult<()> {
    manifest.outputs.extend(output.out.iter().cloned());
    manifest.outputs.extend(extra_outputs.iter().cloned());
    let bytes = match output.format {
        Format::Csv => csv,
        Format::Json => {
            let doc = JsonDocument {
                manifest: manifest.clone(),
                result,
            };
            let mut v = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::io("<json>", e))?;
            v.push(b'\n');
            v
        }
    };
    match &output.out {
        Some(path) => {
            write_file(path, &bytes)?;
            let m = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::io("<json>", e))?;
            write_file(&manifest_path(path), &m)
        }
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

//! Time-series CSV files and the simulation manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Writes `t,y` rows after a `# delta_t=.. seed=..` metadata line.
pub fn write_series(path: &Path, y: &[f64], delta_t: f64, seed: u64) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::io(path, e);
    let mut file = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(file, "# delta_t={delta_t} seed={seed}").map_err(io)?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| CliError::io(path, e);
    w.write_record(["t", "y"]).map_err(csv_err)?;
    for (k, v) in y.iter().enumerate() {
        w.write_record([(k as f64 * delta_t).to_string(), v.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(io)
}

/// Reads the `y` column of a `t,y` file and checks its spacing against
/// `delta_t`.
pub fn read_series(path: &Path, delta_t: f64) -> CliResult<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let headers = reader.headers().map_err(|e| CliError::io(path, e))?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Precondition(format!("{}: missing column '{name}'", path.display()))
        })
    };
    let (ti, yi) = (column("t")?, column("y")?);
    let mut t = vec![];
    let mut y = vec![];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::io(path, e))?;
        let field = |i: usize| -> CliResult<f64> {
            let s = record.get(i).unwrap_or("");
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    CliError::Precondition(format!(
                        "{}: data row {}: invalid number '{s}'",
                        path.display(),
                        row + 1
                    ))
                })
        };
        t.push(field(ti)?);
        y.push(field(yi)?);
    }
    if let Some(k) = t
        .windows(2)
        .position(|w| ((w[1] - w[0]) - delta_t).abs() > 1e-6 * delta_t.max(w[1].abs()))
    {
        return Err(CliError::Precondition(format!(
            "{}: time step between rows {} and {} differs from model delta_t = {delta_t}",
            path.display(),
            k + 1,
            k + 2
        )));
    }
    Ok(y)
}

/// Record of a `simulate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub model: String,
    pub sigma_obs: f64,
    pub delta_t: f64,
    pub duration: f64,
    pub seed: u64,
    pub substeps: usize,
    pub parameters: Vec<String>,
    pub truth: Vec<f64>,
    /// File names, relative to the manifest.
    pub files: Vec<PathBuf>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = toml::to_string(self).map_err(|e| CliError::Numerical(e.to_string()))?;
        fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Precondition(format!("{}: {e}", path.display())))
    }
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

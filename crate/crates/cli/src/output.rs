use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use catkick_core::ModelParams;

use crate::CliError;

pub const UNITS_LINE: &str = "# units: rates in kappa, times in 1/kappa; convention x=(b+b_dag)/sqrt2";

/// Round-trip formatting: 17 significant digits, with `-0` written as `0`.
pub fn num(v: f64) -> String {
    format!("{:.16e}", if v == 0.0 { 0.0 } else { v })
}

pub fn params_line(p: &ModelParams) -> String {
    format!(
        "# params: kappa={} gamma={} g0={} omega_m={} fock_dim={}",
        num(p.kappa),
        num(p.gamma),
        num(p.g0),
        num(p.omega_m),
        p.fock_dim
    )
}

/// One CSV file: comment header, column names, numeric rows.
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub fn create(path: &Path, comments: &[String], columns: &[&str]) -> Result<Self, CliError> {
        let io = |source| CliError::Io { path: path.to_path_buf(), source };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        }
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(out, "{UNITS_LINE}").map_err(io)?;
        for c in comments {
            writeln!(out, "{c}").map_err(io)?;
        }
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(columns).map_err(|e| csv_error(path, e))?;
        Ok(Self { path: path.to_path_buf(), writer })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<(), CliError> {
        let path = &self.path;
        self.writer.write_record(values.iter().map(|&v| num(v))).map_err(|e| csv_error(path, e))
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer.flush().map_err(|source| CliError::Io { path: self.path.clone(), source })?;
        Ok(self.path)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Io { path: path.to_path_buf(), source: e.into() }
}

/// `dir/stem.csv` to `dir/stem_suffix.csv`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

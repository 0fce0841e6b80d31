//! CSV readers for measured or synthetic datasets.

use std::path::Path;

use num_complex::Complex64;
use vortexlab::fitting::{RabiScan, SpectrumDataset, SpectrumPoint, TimeTrace};

use crate::CliError;

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    source: String,
}

impl Table {
    fn read(path: &Path) -> Result<Self, CliError> {
        let source = path.display().to_string();
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| CliError::Io(format!("cannot read {source}: {e}")))?;
        let header = r
            .headers()
            .map_err(|e| CliError::Input(format!("{source}: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = r
            .records()
            .map(|rec| {
                rec.map(|r| r.iter().map(str::to_string).collect())
                    .map_err(|e| CliError::Input(format!("{source}: {e}")))
            })
            .collect::<Result<Vec<Vec<String>>, _>>()?;
        if rows.is_empty() {
            return Err(CliError::Input(format!("{source}: no data rows")));
        }
        Ok(Table { header, rows, source })
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn require(&self, name: &str) -> Result<usize, CliError> {
        self.column(name)
            .ok_or_else(|| CliError::Input(format!("{}: missing column `{name}`", self.source)))
    }

    fn number(&self, row: usize, col: usize) -> Result<f64, CliError> {
        let cell = &self.rows[row][col];
        cell.parse::<f64>().map_err(|_| {
            CliError::Input(format!(
                "{}: row {} column `{}`: `{cell}` is not a number",
                self.source,
                row + 2,
                self.header[col]
            ))
        })
    }

    fn numbers(&self, col: usize, scale: f64) -> Result<Vec<f64>, CliError> {
        (0..self.rows.len()).map(|i| self.number(i, col).map(|v| v * scale)).collect()
    }
}

/// `B_uT, f_GHz, sigma_GHz` with an optional `branch` column (`qubit` or
/// `resonator`); rows without a branch are qubit points.
pub fn read_spectrum(path: &Path) -> Result<SpectrumDataset, CliError> {
    let t = Table::read(path)?;
    let (cb, cf, cs) = (t.require("B_uT")?, t.require("f_GHz")?, t.require("sigma_GHz")?);
    let branch = t.column("branch");
    let mut data = SpectrumDataset {
        qubit_points: Vec::new(),
        resonator_points: Vec::new(),
    };
    for i in 0..t.rows.len() {
        let p = SpectrumPoint::new(t.number(i, cb)? * 1e-6, t.number(i, cf)? * 1e9, t.number(i, cs)? * 1e9);
        match branch.map(|c| t.rows[i][c].as_str()) {
            None | Some("qubit") | Some("q") | Some("") => data.qubit_points.push(p),
            Some("resonator") | Some("r") => data.resonator_points.push(p),
            Some(other) => {
                return Err(CliError::Input(format!(
                    "{}: row {}: unknown branch `{other}`",
                    t.source,
                    i + 2
                )))
            }
        }
    }
    Ok(data)
}

/// `t_us, value` with optional `sigma`.
pub fn read_trace(path: &Path) -> Result<TimeTrace, CliError> {
    let t = Table::read(path)?;
    let times = t.numbers(t.require("t_us")?, 1e-6)?;
    let values = t.numbers(t.require("value")?, 1.0)?;
    let trace = match t.column("sigma") {
        Some(c) => TimeTrace::with_sigma(times, values, t.numbers(c, 1.0)?),
        None => TimeTrace::new(times, values),
    };
    trace.map_err(|e| CliError::Input(format!("{}: {e}", t.source)))
}

/// `amplitude_V, t_us, value`, one trace per distinct amplitude.
pub fn read_rabi(path: &Path) -> Result<Vec<RabiScan>, CliError> {
    let t = Table::read(path)?;
    let amps = t.numbers(t.require("amplitude_V")?, 1.0)?;
    let times = t.numbers(t.require("t_us")?, 1e-6)?;
    let values = t.numbers(t.require("value")?, 1.0)?;
    let mut distinct: Vec<f64> = amps.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    distinct
        .into_iter()
        .map(|a| {
            let rows: Vec<(f64, f64, f64)> = (0..amps.len())
                .filter(|&i| amps[i] == a)
                .map(|i| (times[i], values[i], 1.0))
                .collect();
            TimeTrace::from_unsorted(&rows)
                .map(|trace| RabiScan { amplitude: a, trace })
                .map_err(|e| CliError::Input(format!("{}: amplitude {a}: {e}", t.source)))
        })
        .collect()
}

/// `t_us, I, Q` readout record; returns the spacing (s) and the points.
pub fn read_trajectory(path: &Path) -> Result<(f64, Vec<Complex64>), CliError> {
    let t = Table::read(path)?;
    let times = t.numbers(t.require("t_us")?, 1e-6)?;
    let i = t.numbers(t.require("I")?, 1.0)?;
    let q = t.numbers(t.require("Q")?, 1.0)?;
    if times.len() < 2 {
        return Err(CliError::Input(format!("{}: need at least two shots", t.source)));
    }
    let spacing = times[1] - times[0];
    if !(spacing > 0.0) {
        return Err(CliError::Input(format!("{}: times must increase", t.source)));
    }
    let points = i.into_iter().zip(q).map(|(re, im)| Complex64::new(re, im)).collect();
    Ok((spacing, points))
}

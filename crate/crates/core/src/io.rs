//! Run configuration and the CSV / key-value formats read and written by the CLI.
//!
//! CSV files use `.` decimals, LF line endings and a mandatory header. Floats
//! are written in shortest round-trip form.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fit::{DataPoint, DataSeries, FitResult, XRole};
use crate::montecarlo::ShotRecord;
use crate::nrf::TwbParams;
use crate::photon_stats::NoiseModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub shots: u64,
    pub seed: u64,
}

/// Contents of a TOML run configuration:
///
/// ```toml
/// [twb]
/// mean_m = 1.0
/// modes = 100.0
/// eta1 = 0.17
/// eta2 = 0.17
/// t = 0.4
///
/// [noise]
/// kind = "multi_thermal"
/// mean = 0.5
/// modes = 1.0
///
/// [mc]
/// shots = 1000000
/// seed = 42
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub twb: TwbParams,
    pub noise: NoiseModel,
    pub mc: Option<McConfig>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text)
            .map_err(|e| Error::Input(format!("malformed config: {}", e.to_string().trim())))?;
        config.twb.validate()?;
        config.noise.validate()?;
        if let Some(mc) = config.mc {
            if mc.shots < 2 {
                return Err(Error::Input(format!("mc.shots = {} must be at least 2", mc.shots)));
            }
        }
        Ok(config)
    }

    pub fn mc(&self) -> Result<McConfig> {
        self.mc
            .ok_or_else(|| Error::Input("config has no [mc] table (shots, seed)".into()))
    }
}

/// Parses `start:step:stop`. The stop value is included when it lies within
/// 1e-9 of a grid point.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Input(format!("range {spec:?} must look like start:step:stop"));
    let [start, step, stop] = parts.as_slice() else {
        return Err(bad());
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
    if !(start.is_finite() && step.is_finite() && stop.is_finite()) || step <= 0.0 {
        return Err(Error::Input(format!("range {spec:?} needs finite values and step > 0")));
    }
    if stop < start {
        return Err(Error::Input(format!("range {spec:?} has stop below start")));
    }
    let steps = ((stop - start) / step + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=steps).map(|i| start + i as f64 * step).collect();
    if let Some(last) = out.last_mut() {
        if (*last - stop).abs() <= 1e-9 {
            *last = stop;
        }
    }
    Ok(out)
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = rdr
        .headers()
        .map_err(|e| Error::Input(format!("cannot read CSV header: {e}")))?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::Input(format!(
            "CSV header must be `{}`, found `{}`",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

/// Reads rows under `expected` and parses each field with `parse`; errors
/// name the data row (1-based, header excluded) and the column.
fn read_rows<R: Read, T, F>(reader: R, expected: &[&str], mut parse: F) -> Result<Vec<Vec<T>>>
where
    F: FnMut(&str) -> Option<T>,
{
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, expected)?;
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Input(format!("row {row}: {e}")))?;
        if record.len() != expected.len() {
            return Err(Error::Input(format!(
                "row {row}: expected {} columns, found {}",
                expected.len(),
                record.len()
            )));
        }
        let mut values = Vec::with_capacity(expected.len());
        for (field, column) in record.iter().zip(expected) {
            let v = parse(field).ok_or_else(|| {
                Error::Input(format!("row {row}, column {column}: cannot parse {field:?}"))
            })?;
            values.push(v);
        }
        rows.push(values);
    }
    Ok(rows)
}

pub const DATA_HEADER: [&str; 3] = ["x", "r", "sigma_r"];
pub const SHOTS_HEADER: [&str; 2] = ["k1", "k2"];
pub const SCAN_HEADER: [&str; 3] = ["mean_twb", "mean_noise", "r"];

/// Reads an `x,r,sigma_r` data file.
pub fn read_data_series<R: Read>(reader: R, x_role: XRole) -> Result<DataSeries> {
    let rows = read_rows(reader, &DATA_HEADER, |s| s.parse::<f64>().ok())?;
    let mut points = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let row_no = i + 1;
        let (x, r, sigma_r) = (row[0], row[1], row[2]);
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::Input(format!("row {row_no}, column x: {x} must be finite and >= 0")));
        }
        if !r.is_finite() {
            return Err(Error::Input(format!("row {row_no}, column r: {r} is not finite")));
        }
        if !(sigma_r > 0.0 && sigma_r.is_finite()) {
            return Err(Error::Input(format!(
                "row {row_no}, column sigma_r: {sigma_r} must be positive"
            )));
        }
        points.push(DataPoint { x, r, sigma_r });
    }
    DataSeries::new(points, x_role)
}

pub fn write_data_series<W: Write>(mut w: W, series: &DataSeries) -> Result<()> {
    writeln!(w, "{}", DATA_HEADER.join(","))?;
    for p in &series.points {
        writeln!(w, "{},{},{}", p.x, p.r, p.sigma_r)?;
    }
    Ok(())
}

pub fn write_shots<W: Write>(mut w: W, shots: &[ShotRecord]) -> Result<()> {
    writeln!(w, "{}", SHOTS_HEADER.join(","))?;
    for s in shots {
        writeln!(w, "{},{}", s.k1, s.k2)?;
    }
    Ok(())
}

pub fn read_shots<R: Read>(reader: R) -> Result<Vec<ShotRecord>> {
    let rows = read_rows(reader, &SHOTS_HEADER, |s| s.parse::<u64>().ok())?;
    Ok(rows.into_iter().map(|r| ShotRecord { k1: r[0], k2: r[1] }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub mean_twb: f64,
    pub mean_noise: f64,
    /// NaN where R is undefined (zero total mean).
    pub r: f64,
}

pub fn write_scan<W: Write>(mut w: W, rows: &[ScanRow]) -> Result<()> {
    writeln!(w, "{}", SCAN_HEADER.join(","))?;
    for row in rows {
        writeln!(w, "{},{},{}", row.mean_twb, row.mean_noise, row.r)?;
    }
    Ok(())
}

pub fn read_scan<R: Read>(reader: R) -> Result<Vec<ScanRow>> {
    let rows = read_rows(reader, &SCAN_HEADER, |s| s.parse::<f64>().ok())?;
    Ok(rows
        .into_iter()
        .map(|r| ScanRow { mean_twb: r[0], mean_noise: r[1], r: r[2] })
        .collect())
}

/// Flat `key=value` lines for a fit, every key prefixed with `prefix`.
pub fn fit_report_lines(result: &FitResult, prefix: &str) -> Vec<String> {
    let mut lines: Vec<String> = result
        .estimates
        .iter()
        .map(|(name, value)| format!("{prefix}{name}={value}"))
        .collect();
    let join = |names: &[crate::fit::ParamName]| {
        names.iter().map(|n| n.as_str()).collect::<Vec<_>>().join(",")
    };
    lines.push(format!("{prefix}free={}", join(&result.free)));
    lines.push(format!("{prefix}chi2_nu={}", result.chi2_nu));
    lines.push(format!("{prefix}dof={}", result.dof));
    lines.push(format!("{prefix}converged={}", result.converged));
    lines.push(format!("{prefix}n_restarts_used={}", result.n_restarts_used));
    lines.push(format!("{prefix}weakly_identified={}", join(&result.weakly_identified)));
    lines
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_report(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("report line {}: missing `=`", i + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"
[twb]
mean_m = 1.0
modes = 100.0
eta1 = 0.17
eta2 = 0.17
t = 0.4

[noise]
kind = "multi_thermal"
mean = 0.5
modes = 1.0

[mc]
shots = 1000
seed = 42
"#;

    #[test]
    fn parses_config() {
        let c = RunConfig::parse(CONFIG).unwrap();
        assert_eq!(c.noise, NoiseModel::MultiThermal { mean: 0.5, modes: 1.0 });
        assert_eq!(c.mc().unwrap(), McConfig { shots: 1000, seed: 42 });
        let none = RunConfig::parse(&CONFIG.replace(
            "kind = \"multi_thermal\"\nmean = 0.5\nmodes = 1.0",
            "kind = \"none\"",
        ))
        .unwrap();
        assert_eq!(none.noise, NoiseModel::None);
    }

    #[test]
    fn config_errors_name_the_key() {
        let typo = CONFIG.replace("mean_m", "mena_m");
        let msg = RunConfig::parse(&typo).unwrap_err().to_string();
        assert!(msg.contains("mena_m"), "{msg}");
        let extra = CONFIG.replace("modes = 1.0", "modes = 1.0\ncolour = 2");
        let msg = RunConfig::parse(&extra).unwrap_err().to_string();
        assert!(msg.contains("colour"), "{msg}");
        let domain = CONFIG.replace("eta2 = 0.17", "eta2 = 1.7");
        let msg = RunConfig::parse(&domain).unwrap_err().to_string();
        assert!(msg.contains("eta2"), "{msg}");
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:0.5:2").unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_range("0:0.3:1").unwrap().len(), 4);
        let r = parse_range("0:0.1:0.3").unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!(*r.last().unwrap(), 0.3);
        assert_eq!(parse_range("1:1:1").unwrap(), vec![1.0]);
        for bad in ["1:2", "a:1:2", "0:0:1", "0:-1:1", "2:1:1"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn data_errors_name_row_and_column() {
        let text = "x,r,sigma_r\n0,0.8,0.01\n1,0.9,0\n";
        let msg = read_data_series(text.as_bytes(), XRole::NoiseMean).unwrap_err().to_string();
        assert!(msg.contains("row 2") && msg.contains("sigma_r"), "{msg}");
        let text = "x,r,sigma_r\n0,abc,0.01\n1,0.9,0.1\n";
        let msg = read_data_series(text.as_bytes(), XRole::NoiseMean).unwrap_err().to_string();
        assert!(msg.contains("row 1") && msg.contains("column r"), "{msg}");
        let msg = read_data_series("a,b,c\n1,2,3\n".as_bytes(), XRole::NoiseMean).unwrap_err().to_string();
        assert!(msg.contains("header"), "{msg}");
    }

    #[test]
    fn report_parses_back() {
        let map = parse_report("# fit\na=1\nb.c = x,y\n\n").unwrap();
        assert_eq!(map["a"], "1");
        assert_eq!(map["b.c"], "x,y");
        assert!(parse_report("nope").is_err());
    }
}

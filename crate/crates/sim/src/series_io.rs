//! Tab-separated time series: a header row `t<TAB>channel...`, then one row
//! per sample with every value written to 17 significant digits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use smx_core::diagnostics::TimeSeries;

use crate::error::SimError;

fn format_row(t: f64, values: &[f64]) -> String {
    let mut line = format!("{t:.16e}");
    for v in values {
        line.push('\t');
        line.push_str(&format!("{v:.16e}"));
    }
    line
}

fn header(channels: &[String]) -> String {
    std::iter::once("t").chain(channels.iter().map(String::as_str)).collect::<Vec<_>>().join("\t")
}

pub fn write_series(series: &TimeSeries, path: &Path) -> Result<(), SimError> {
    let mut w = SeriesWriter::create(path, series.channels())?;
    for i in 0..series.len() {
        w.append(series.times()[i], series.row(i))?;
    }
    Ok(())
}

pub fn read_series(path: &Path) -> Result<TimeSeries, SimError> {
    let file = File::open(path).map_err(|e| SimError::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let head = match lines.next() {
        Some(l) => l.map_err(|e| SimError::io(path, e))?,
        None => return Err(SimError::format(path, "missing header row")),
    };
    let mut cols = head.split('\t');
    if cols.next() != Some("t") {
        return Err(SimError::format(path, "header must start with `t`"));
    }
    let channels: Vec<String> = cols.map(str::to_owned).collect();
    let mut series = TimeSeries::new(channels.clone());
    let mut values = vec![0.0; channels.len()];
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| SimError::io(path, e))?;
        let row = lineno + 2;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != channels.len() + 1 {
            return Err(SimError::format(
                path,
                format!("row {row}: expected {} fields, found {}", channels.len() + 1, fields.len()),
            ));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| SimError::format(path, format!("row {row}: {e}")));
        let t = parse(fields[0])?;
        for (v, s) in values.iter_mut().zip(&fields[1..]) {
            *v = parse(s)?;
        }
        series.push(t, &values).map_err(|e| SimError::format(path, format!("row {row}: {e}")))?;
    }
    Ok(series)
}

/// Appends rows to a series file, flushing after each one so an aborted run
/// keeps everything written so far.
pub struct SeriesWriter {
    path: PathBuf,
    out: BufWriter<File>,
    width: usize,
}

impl SeriesWriter {
    pub fn create(path: &Path, channels: &[String]) -> Result<Self, SimError> {
        let file = File::create(path).map_err(|e| SimError::io(path, e))?;
        let mut w = Self { path: path.to_owned(), out: BufWriter::new(file), width: channels.len() };
        w.line(&header(channels))?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<(), SimError> {
        writeln!(self.out, "{s}").and_then(|_| self.out.flush()).map_err(|e| SimError::io(&self.path, e))
    }

    pub fn append(&mut self, t: f64, values: &[f64]) -> Result<(), SimError> {
        assert_eq!(values.len(), self.width, "row width");
        self.line(&format_row(t, values))
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn seventeen_digits_roundtrip() {
        let v = [0.1, 1.0 / 3.0, -2.0e-300, 6.02214076e23, f64::MIN_POSITIVE, f64::MAX];
        for x in v {
            let s = format!("{x:.16e}");
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }
}

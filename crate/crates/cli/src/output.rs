use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use remetric::metricspace::FiniteMetricSpace;
use serde_json::Value;

use crate::error::CliError;

/// Twelve significant digits, trailing zeros trimmed; scientific notation
/// outside `[1e-5, 1e15)`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (mant, e) = s.split_once('e').expect("scientific format");
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}e{e}")
    }
}

pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Where tables and the report go: files in `--out`, or CSV on stdout.
pub struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    pub fn new(dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)
                .map_err(|e| CliError::Input(format!("cannot create {}: {e}", d.display())))?;
        }
        Ok(Self { dir })
    }

    pub fn emit(&self, tables: &[Table], matrices: &[(&str, &FiniteMetricSpace<f64>)], report: &Value) -> Result<(), CliError> {
        match &self.dir {
            Some(dir) => {
                for t in tables {
                    t.write(fs::File::create(dir.join(format!("{}.csv", t.name)))?)?;
                }
                for (name, m) in matrices {
                    m.write_csv(fs::File::create(dir.join(format!("{name}.csv")))?)?;
                }
                let mut f = fs::File::create(dir.join("report.json"))?;
                serde_json::to_writer_pretty(&mut f, report)
                    .map_err(|e| CliError::Input(e.to_string()))?;
                writeln!(f)?;
            }
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                for (i, t) in tables.iter().enumerate() {
                    if tables.len() > 1 {
                        if i > 0 {
                            writeln!(lock)?;
                        }
                        writeln!(lock, "# {}", t.name)?;
                    }
                    t.write(&mut lock)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(3f64.ln()), "1.09861228867");
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(2.0), "2");
        assert_eq!(num(1.0 / 1024.0), "0.0009765625");
        assert_eq!(num(1e-7), "1e-7");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(123456.789), "123456.789");
    }
}

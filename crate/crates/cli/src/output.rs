//! Grids, moment files and the CSV/JSON writers.

use std::path::Path;

use walktail_core::ladder::MomentSet;

use crate::{usage, CliError, SCHEMA};

/// Parses `a:b:n` (n evenly spaced points, ends included) or `log:a:b:n`
/// (geometric spacing).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Usage(format!("bad grid `{spec}`: {why}"));
    let (log, body) = match spec.strip_prefix("log:") {
        Some(rest) => (true, rest),
        None => (false, spec),
    };
    let parts: Vec<&str> = body.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected a:b:n or log:a:b:n"));
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad("start is not a number"))?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad("end is not a number"))?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad("count is not an integer"))?;
    if n == 0 || !a.is_finite() || !b.is_finite() || b < a {
        return Err(bad("need a <= b and n >= 1"));
    }
    if log && !(a > 0.0) {
        return Err(bad("log grid needs a > 0"));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let t = |i: usize| i as f64 / (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else if log {
                a * (b / a).powf(t(i))
            } else {
                a + (b - a) * t(i)
            }
        })
        .collect())
}

/// Reads a moment set, either bare or wrapped as the `moments` field of
/// `walktail moments` output.
pub fn load_moments(path: &Path) -> Result<MomentSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read moments {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("moments {}: {e}", path.display())))?;
    let inner = match value.get("moments") {
        Some(m) => m.clone(),
        None => value,
    };
    serde_json::from_value(inner).map_err(|e| CliError::Usage(format!("moments {}: {e}", path.display())))
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// CSV table preceded by the schema line and optional `# key: value` notes.
pub struct Table {
    pub notes: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            notes: Vec::new(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&v| num(v)).collect());
    }

    pub fn write(&self, out: &mut Vec<u8>) -> Result<(), CliError> {
        out.extend_from_slice(SCHEMA.as_bytes());
        out.push(b'\n');
        for n in &self.notes {
            out.extend_from_slice(format!("# {n}\n").as_bytes());
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(usage)?;
        for r in &self.rows {
            w.write_record(r).map_err(usage)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn write_json(out: &mut Vec<u8>, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(usage)?;
    out.extend_from_slice(text.as_bytes());
    out.push(b'\n');
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_and_log_grids() {
        assert_eq!(parse_grid("10:100:10").unwrap()[1], 20.0);
        let g = parse_grid("log:1:1000:4").unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12 && g[3] == 1000.0);
        assert_eq!(parse_grid("5:5:1").unwrap(), vec![5.0]);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("log:0:2:3").is_err());
    }

    #[test]
    fn csv_has_schema_line() {
        let mut t = Table::new(["x", "v"]);
        t.push_nums(&[1.0, 2.5e-7]);
        let mut out = Vec::new();
        t.write(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "# walktail-schema v1\nx,v\n1,2.5e-7\n");
    }
}

//! Helpers for the end-to-end acceptance suite: running the CLI in-process
//! under a given worker count, reading its tables, and the randomized ring
//! properties.

use std::collections::HashMap;

use walktail_core::rng::THREADS_ENV;

pub mod ring_props;

/// Runs `walktail <args>` with `WALKTAIL_THREADS = threads`; returns the
/// exit status and standard output.
pub fn run_cli(args: &[&str], threads: usize) -> (i32, String) {
    std::env::set_var(THREADS_ENV, threads.to_string());
    let argv: Vec<String> = std::iter::once("walktail")
        .chain(args.iter().copied())
        .map(String::from)
        .collect();
    let mut out = Vec::new();
    let code = walktail_cli::run(&argv, &mut out);
    (code, String::from_utf8(out).expect("utf-8 output"))
}

/// A CSV table with `#` comment lines removed.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Table, String> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = r
            .headers()
            .map_err(|e| e.to_string())?
            .iter()
            .map(String::from)
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        Ok(Table { header, rows })
    }

    fn index(&self) -> HashMap<&str, usize> {
        self.header.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect()
    }

    /// Numeric column by name (`NaN` for blanks).
    pub fn column(&self, name: &str) -> Vec<f64> {
        let i = self.index()[name];
        self.rows
            .iter()
            .map(|r| r[i].parse().unwrap_or(f64::NAN))
            .collect()
    }

    /// Rows whose `key` column equals `value`, as name → cell maps.
    pub fn rows_where(&self, key: &str, value: &str) -> Vec<HashMap<String, String>> {
        let i = self.index()[key];
        self.rows
            .iter()
            .filter(|r| r[i] == value)
            .map(|r| self.header.iter().cloned().zip(r.iter().cloned()).collect())
            .collect()
    }
}

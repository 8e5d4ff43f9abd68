use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use repvol::{Error, Result};
use serde::Serialize;

/// CSV rows go to `--out` when given, otherwise to stdout; human-readable
/// notes go to whichever stream the rows do not use.
pub struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Self {
        Self { out }
    }

    pub fn rows<T: Serialize>(&self, rows: &[T]) -> Result<()> {
        let writer: Box<dyn Write> = match &self.out {
            Some(p) => Box::new(File::create(p)?),
            None => Box::new(io::stdout().lock()),
        };
        let mut w = csv::Writer::from_writer(writer);
        for r in rows {
            w.serialize(r).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn note(&self, line: &str) {
        if self.out.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Plain gnuplot script drawing `|value|` against `k` on log axes, one curve
/// per cusp end, from the limit series CSV.
pub fn gnuplot_script(csv: &Path, ends: usize) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set logscale xy\n");
    s.push_str("set xlabel 'k'\n");
    s.push_str("set ylabel '|cusp census|'\n");
    s.push_str("set key top right\n");
    let curves: Vec<String> = (0..ends)
        .map(|e| {
            format!(
                "'{}' using (column(\"end\") == {e} ? column(\"k\") : 1/0):(abs(column(\"value\"))):(column(\"stderr\")) skip 0 with yerrorlines title 'end {e}'",
                csv.display()
            )
        })
        .collect();
    s.push_str(&format!("plot {}\n", curves.join(", \\\n     ")));
    s
}

use std::fs;
use std::path::{Path, PathBuf};

use crate::commands::Failure;

/// Collects CSV rows; floats are written in shortest round-trip form so
/// identical runs produce identical bytes.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, Failure> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(path)
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Indexed column names `prefix_1 .. prefix_n`.
pub fn columns(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

/// Writes `plot_<stem>.py`, which plots every column of the CSV against
/// its first column.
pub fn plot_script(csv_path: &Path) -> Result<PathBuf, Failure> {
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    let file = csv_path.file_name().and_then(|s| s.to_str()).unwrap_or("data.csv");
    let script = format!(
        r#"import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{file}"
with open(path) as fh:
    rows = list(csv.reader(fh))
header, data = rows[0], rows[1:]


def column(i):
    return [float(r[i]) if r[i] else float("nan") for r in data]


x = column(0)
for i, name in enumerate(header[1:], start=1):
    try:
        plt.plot(x, column(i), label=name)
    except ValueError:
        pass
plt.xlabel(header[0])
plt.legend()
plt.savefig("{stem}.png", dpi=150)
"#
    );
    let out = csv_path.with_file_name(format!("plot_{stem}.py"));
    fs::write(&out, script)?;
    Ok(out)
}

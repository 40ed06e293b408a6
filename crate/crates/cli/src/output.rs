//! CSV artifact writing. Floats are printed with Rust's shortest
//! round-trip formatting (at most 17 significant digits, parsing back to
//! the identical bits); every file ends with a trailing newline and no
//! field ever needs quoting.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use esnlab_core::reservoir::Esn;

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn write_csv<I>(path: &Path, header: &str, rows: I) -> std::io::Result<()>
where
    I: IntoIterator<Item = String>,
{
    let file = fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    out.flush()
}

pub fn artifact_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// Reservoir, input and bias blocks of an ESN for reproducibility audits.
/// Each block is a `name,rows,cols` line followed by its rows.
pub fn write_esn_blocks(path: &Path, esn: &Esn) -> std::io::Result<()> {
    let file = fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    let t = esn.reservoir_size();
    let d = esn.input_dim();

    writeln!(out, "A,{t},{t}")?;
    for i in 0..t {
        let row: Vec<String> = (0..t).map(|j| fmt_f64(esn.reservoir_matrix()[(i, j)])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    writeln!(out, "C,{t},{d}")?;
    for i in 0..t {
        let row: Vec<String> = (0..d).map(|j| fmt_f64(esn.input_matrix()[(i, j)])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    writeln!(out, "b,{t},1")?;
    for i in 0..t {
        writeln!(out, "{}", fmt_f64(esn.bias()[i]))?;
    }
    out.flush()
}

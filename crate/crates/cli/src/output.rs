//! CSV and JSON artifacts. Column order and headers are stable; floats are
//! written in shortest round-trip form so that identical runs produce
//! byte-identical files.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use tevd_core::saddle1d::Field1D;
use tevd_core::spectrum::SpectrumTable;

pub const SPECTRUM_HEADER: &str = "T,gamma_re,gamma_im,F_re,F_im,rho,iters,residual";
pub const QTRACE_HEADER: &str = "x_over_lambda,Q11_re,Q11_im,Q12_re,Q12_im,Q21_re,Q21_im";

fn fmt(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:?}")
    }
}

/// Writes the scan table; the rho column is the reported (clamped) value,
/// the raw value lives in the run summary.
pub fn write_spectrum_csv(path: &Path, table: &SpectrumTable) -> io::Result<()> {
    let mut out = String::new();
    out.push_str(SPECTRUM_HEADER);
    out.push('\n');
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt(r.t),
            fmt(r.gamma.re),
            fmt(r.gamma.im),
            fmt(r.f.re),
            fmt(r.f.im),
            fmt(r.rho_clamped()),
            r.iterations,
            fmt(r.residual),
        ));
    }
    write_atomically(path, out.as_bytes())
}

/// Field trace of the one-dimensional solver; Q22 = -Q11 up to the
/// semiclassical trace defect, so only three entries are written.
pub fn write_qtrace_csv(path: &Path, field: &Field1D, lambda: f64) -> io::Result<()> {
    let mut out = String::new();
    out.push_str(QTRACE_HEADER);
    out.push('\n');
    for (x, q) in field.x.iter().zip(&field.qtilde) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt(x / lambda),
            fmt(q.m11.re),
            fmt(q.m11.im),
            fmt(q.m12.re),
            fmt(q.m12.im),
            fmt(q.m21.re),
            fmt(q.m21.im),
        ));
    }
    write_atomically(path, out.as_bytes())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomically(path, text.as_bytes())
}

fn write_atomically(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

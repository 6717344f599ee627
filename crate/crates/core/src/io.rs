//! Machine-readable outputs (17-significant-digit floats throughout), CSV
//! loaders for kernels and spectra, and the binary ensemble container.

use serde::Serialize;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernels::{tabulated_kernel, Kernel, ResolventGrid};
use crate::lattice::build_index_set;
use crate::simulate::{FieldEnsemble, SimulationMeta};
use crate::spectrum::CovarianceSpectrum;

/// JSON formatter printing every f64 with 17 significant digits (compact
/// layout otherwise), so machine outputs round-trip exactly.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

pub fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value.serialize(&mut ser)?;
    String::from_utf8(buf).map_err(|e| Error::Container(format!("non-utf8 json: {e}")))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = json_string(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_resolvent_csv(path: &Path, grid: &ResolventGrid) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "r"])?;
    for (j, v) in grid.values.iter().enumerate() {
        w.write_record([fmt17(grid.t(j)), fmt17(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Generic numeric table: one header row, rows of 17-digit floats.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Container(format!(
                "row width {} does not match header width {}",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(|v| fmt17(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a tabulated kernel from CSV rows (t, b) on a uniform grid starting
/// at t = 0. The tabulation is treated as the kernel's entire support.
pub fn load_kernel_csv(path: &Path) -> Result<Kernel> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut ts = Vec::new();
    let mut bs = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::Config("kernel CSV needs columns t,b".into()));
        }
        ts.push(parse_f64(&rec[0])?);
        bs.push(parse_f64(&rec[1])?);
    }
    if ts.len() < 2 {
        return Err(Error::Config("kernel CSV needs at least two rows".into()));
    }
    if ts[0] != 0.0 {
        return Err(Error::Config(format!(
            "kernel CSV must start at t = 0, got {}",
            ts[0]
        )));
    }
    let dt = ts[1] - ts[0];
    if dt <= 0.0 {
        return Err(Error::Config("kernel CSV times must increase".into()));
    }
    for (i, &t) in ts.iter().enumerate() {
        if (t - i as f64 * dt).abs() > 1e-9 * dt.max(t.abs()) {
            return Err(Error::GridMismatch(format!(
                "kernel CSV time at row {i} is not uniform: {t} vs expected {}",
                i as f64 * dt
            )));
        }
    }
    tabulated_kernel(bs, dt, true)
}

/// Loads a tabulated spectrum from CSV rows (n_1, ..., n_d, gamma); d is the
/// column count minus one, n_max the largest sup-norm present.
pub fn load_spectrum_csv(path: &Path) -> Result<CovarianceSpectrum> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let width = r.headers()?.len();
    if width < 2 {
        return Err(Error::Config(
            "spectrum CSV needs columns n_1,...,n_d,gamma".into(),
        ));
    }
    let d = (width - 1) as u32;
    let mut entries = Vec::new();
    let mut n_max = 0u32;
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != width {
            return Err(Error::Config("ragged spectrum CSV row".into()));
        }
        let mut n = Vec::with_capacity(d as usize);
        for i in 0..d as usize {
            let v: i32 = rec[i]
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("bad lattice coordinate: {e}")))?;
            n_max = n_max.max(v.unsigned_abs());
            n.push(v);
        }
        entries.push((n, parse_f64(&rec[d as usize])?));
    }
    if entries.is_empty() {
        return Err(Error::Config("spectrum CSV has no rows".into()));
    }
    Ok(CovarianceSpectrum::tabulated(d, n_max, entries))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Config(format!("bad float {s:?}: {e}")))
}

const ENSEMBLE_MAGIC: &[u8; 4] = b"VFE1";

/// Binary ensemble container: magic, u32-LE header length, JSON header (the
/// SimulationMeta), then little-endian f64 data in (path, time, mode) order
/// with each (path, time) row laid out as [zero, cos..., sin...].
pub fn write_ensemble(path: &Path, ens: &FieldEnsemble) -> Result<()> {
    let header = json_string(&ens.meta)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(ENSEMBLE_MAGIC)?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(header.as_bytes())?;
    let m = ens.n_members();
    for p in 0..ens.n_paths() {
        for k in 0..ens.n_times() {
            w.write_all(&ens.zero_at(p, k).to_le_bytes())?;
            for j in 0..m {
                w.write_all(&ens.cos_at(p, k, j).to_le_bytes())?;
            }
            for j in 0..m {
                w.write_all(&ens.sin_at(p, k, j).to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_ensemble(path: &Path) -> Result<FieldEnsemble> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != ENSEMBLE_MAGIC {
        return Err(Error::Container(format!(
            "bad magic {magic:?}; not an ensemble container"
        )));
    }
    let mut len4 = [0u8; 4];
    r.read_exact(&mut len4)?;
    let hlen = u32::from_le_bytes(len4) as usize;
    let mut hbuf = vec![0u8; hlen];
    r.read_exact(&mut hbuf)?;
    let meta: SimulationMeta = serde_json::from_slice(&hbuf)?;

    let index = build_index_set(meta.d, meta.n_max);
    let spec = CovarianceSpectrum {
        d: meta.d,
        n_max: meta.n_max,
        form: meta.spectrum.clone(),
    };
    let gamma0 = spec.gamma(&vec![0i32; meta.d as usize]);
    let gammas: Vec<f64> = index.members.iter().map(|mb| spec.gamma(&mb.n)).collect();

    let m = index.members.len();
    let times = meta.time_grid.len();
    let rows = meta
        .n_paths
        .checked_mul(times)
        .ok_or_else(|| Error::Container("row count overflow".into()))?;
    let total = rows * (1 + 2 * m);
    let mut data = vec![0.0f64; total];
    let mut buf8 = [0u8; 8];
    for v in data.iter_mut() {
        r.read_exact(&mut buf8)?;
        *v = f64::from_le_bytes(buf8);
    }
    if r.read(&mut buf8)? != 0 {
        return Err(Error::Container("trailing bytes after ensemble data".into()));
    }

    let mut zero = Vec::with_capacity(rows);
    let mut cos_coeff = Vec::with_capacity(rows * m);
    let mut sin_coeff = Vec::with_capacity(rows * m);
    for row in data.chunks_exact(1 + 2 * m) {
        zero.push(row[0]);
        cos_coeff.extend_from_slice(&row[1..1 + m]);
        sin_coeff.extend_from_slice(&row[1 + m..]);
    }
    let ens = FieldEnsemble {
        meta,
        index,
        gamma0,
        gammas,
        zero,
        cos_coeff,
        sin_coeff,
    };
    if ens.zero.iter().all(|v| v.is_finite())
        && ens.cos_coeff.iter().all(|v| v.is_finite())
        && ens.sin_coeff.iter().all(|v| v.is_finite())
    {
        Ok(ens)
    } else {
        Err(Error::Container("non-finite values in ensemble data".into()))
    }
}

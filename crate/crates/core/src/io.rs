//! Binary measure-path files (`.mvmp`) and pair-data CSV.
//!
//! `.mvmp` layout, all little-endian: magic `MVMP`, u32 version = 1, u32 d,
//! u64 particle count, u64 snapshot count, f64 step size, then
//! `snapshots × particles × d` f64 values, snapshot-major, particle-major,
//! coordinate-major. Values round-trip bit-exactly.
//!
//! Pair CSV: header `xi_1,…,xi_d,xT_1,…,xT_d`, one row per pair, every value
//! printed with 17 significant digits so parsing reproduces the exact f64.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::data::PairDataSet;
use crate::error::{CoreError, Result};
use crate::grid::TimeGrid;
use crate::measure::{EmpiricalMeasure, MeasurePath};

const MAGIC: &[u8; 4] = b"MVMP";
const VERSION: u32 = 1;

pub fn write_measure_path(path: &Path, mp: &MeasurePath) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let d = mp.snapshot(0).dim() as u32;
    let count = mp.snapshot(0).count() as u64;
    let snaps = mp.snapshots().len() as u64;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&d.to_le_bytes())?;
    w.write_all(&count.to_le_bytes())?;
    w.write_all(&snaps.to_le_bytes())?;
    w.write_all(&mp.grid().step_size().to_le_bytes())?;
    for snap in mp.snapshots() {
        for row in snap.particles().rows() {
            for &v in row {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_measure_path(path: &Path) -> Result<MeasurePath> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CoreError::Format("bad magic, not a measure-path file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(CoreError::Format(format!("unsupported version {version}")));
    }
    let d = read_u32(&mut r)? as usize;
    let count = read_u64(&mut r)? as usize;
    let snaps = read_u64(&mut r)? as usize;
    let h = read_f64(&mut r)?;
    if d == 0 || count == 0 || snaps < 2 {
        return Err(CoreError::Format("degenerate measure-path header".into()));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(CoreError::Format(format!("invalid step size {h}")));
    }
    let steps = snaps - 1;
    let grid = TimeGrid::new(h * steps as f64, steps)?;
    let mut buf = vec![0u8; count * d * 8];
    let mut snapshots = Vec::with_capacity(snaps);
    for _ in 0..snaps {
        r.read_exact(&mut buf)?;
        let values: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let arr = Array2::from_shape_vec((count, d), values).expect("shape");
        snapshots.push(EmpiricalMeasure::new(arr)?);
    }
    MeasurePath::new(grid, snapshots, None)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn write_pairs_csv(path: &Path, data: &PairDataSet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let d = data.dim();
    let mut header = Vec::with_capacity(2 * d);
    for j in 1..=d {
        header.push(format!("xi_{j}"));
    }
    for j in 1..=d {
        header.push(format!("xT_{j}"));
    }
    writeln!(w, "{}", header.join(","))?;
    for m in 0..data.count() {
        let mut fields = Vec::with_capacity(2 * d);
        for j in 0..d {
            fields.push(format!("{:.16e}", data.xi()[(m, j)]));
        }
        for j in 0..d {
            fields.push(format!("{:.16e}", data.x_t()[(m, j)]));
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a pair CSV; the lag is not stored in the file and must be supplied.
pub fn read_pairs_csv(path: &Path, lag: f64) -> Result<PairDataSet> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| CoreError::Format("empty pair file".into()))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.len() < 2 || !cols.len().is_multiple_of(2) || !cols[0].starts_with("xi_") {
        return Err(CoreError::Format(format!("unexpected header: {header}")));
    }
    let d = cols.len() / 2;
    let mut xi = Vec::new();
    let mut xt = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 2 * d {
            return Err(CoreError::Format(format!("row {} has {} fields, expected {}", i + 2, fields.len(), 2 * d)));
        }
        for (j, f) in fields.iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| CoreError::Format(format!("row {}: bad number {f:?}", i + 2)))?;
            if j < d {
                xi.push(v);
            } else {
                xt.push(v);
            }
        }
    }
    let rows = xi.len() / d;
    let xi = Array2::from_shape_vec((rows, d), xi).expect("shape");
    let xt = Array2::from_shape_vec((rows, d), xt).expect("shape");
    PairDataSet::new(xi, xt, lag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngPlan;

    fn tmp(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("mvk_core_io_{}_{name}", std::process::id()));
        p
    }

    #[test]
    fn mvmp_round_trip_is_bit_exact() {
        let grid = TimeGrid::new(0.3, 3).unwrap();
        let plan = RngPlan::new(5);
        let snaps: Vec<EmpiricalMeasure> = (0..4)
            .map(|k| {
                let mut cur = plan.stream(k).init_draws();
                let vals: Vec<f64> = (0..10).map(|_| cur.normal() * 1e3).collect();
                EmpiricalMeasure::new(Array2::from_shape_vec((5, 2), vals).unwrap()).unwrap()
            })
            .collect();
        let mp = MeasurePath::new(grid, snaps, None).unwrap();
        let file = tmp("roundtrip.mvmp");
        write_measure_path(&file, &mp).unwrap();
        let back = read_measure_path(&file).unwrap();
        assert_eq!(back.snapshots().len(), mp.snapshots().len());
        for (a, b) in back.snapshots().iter().zip(mp.snapshots()) {
            for (x, y) in a.particles().iter().zip(b.particles().iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        std::fs::remove_file(file).ok();
    }

    #[test]
    fn mvmp_rejects_garbage() {
        let file = tmp("garbage.mvmp");
        std::fs::write(&file, b"NOPE").unwrap();
        assert!(read_measure_path(&file).is_err());
        std::fs::remove_file(file).ok();
    }

    #[test]
    fn csv_round_trip_exact() {
        let xi = Array2::from_shape_vec((3, 2), vec![0.1, -1.5e-300, 2.0 / 3.0, 1e300, 0.0, -0.0])
            .unwrap();
        let xt = xi.mapv(|v| v * 1.000000000000123);
        let data = PairDataSet::new(xi, xt, 0.5).unwrap();
        let file = tmp("pairs.csv");
        write_pairs_csv(&file, &data).unwrap();
        let back = read_pairs_csv(&file, 0.5).unwrap();
        for (a, b) in back.xi().iter().zip(data.xi().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in back.x_t().iter().zip(data.x_t().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let header = std::fs::read_to_string(&file).unwrap();
        assert!(header.starts_with("xi_1,xi_2,xT_1,xT_2\n"));
        std::fs::remove_file(file).ok();
    }
}

//! RGPE1 state snapshots.
//!
//! Layout (little-endian): magic `RGPE1`, u8 dimension, u32 points per axis,
//! f64 half-width, f64 a, f64 p, f64 omega_mag, f64 c, then M^N complex
//! samples as (re, im) f64 pairs in row-major axis order. Round trips are
//! bit exact; writes go through a temp file and rename so readers never see
//! a half-written snapshot.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{C64, WaveField};
use crate::grid::GridSpec;
use crate::physics::PhysicsParams;

const MAGIC: &[u8; 5] = b"RGPE1";

/// Everything a snapshot carries besides the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub grid: GridSpec,
    pub params: PhysicsParams,
    pub c: f64,
}

pub fn write_snapshot(
    path: &Path,
    field: &WaveField,
    params: &PhysicsParams,
    c: f64,
) -> Result<()> {
    let grid = field.grid();
    if grid.dim() != params.dim() {
        return Err(Error::Validation(format!(
            "snapshot field dimension {} does not match physics dimension {}",
            grid.dim(),
            params.dim()
        )));
    }
    let mut buf =
        Vec::with_capacity(MAGIC.len() + 1 + 4 + 5 * 8 + field.values().len() * 16);
    buf.extend_from_slice(MAGIC);
    buf.push(grid.dim() as u8);
    buf.extend_from_slice(&(grid.points_per_axis() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.half_width().to_le_bytes());
    buf.extend_from_slice(&params.a().to_le_bytes());
    buf.extend_from_slice(&params.p().to_le_bytes());
    buf.extend_from_slice(&params.omega_mag().to_le_bytes());
    buf.extend_from_slice(&c.to_le_bytes());
    for z in field.values() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }

    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().map(|f| f.to_string_lossy()).unwrap_or_default()
        )),
        None => Path::new(&format!(".{}.tmp", path.display())).to_path_buf(),
    };
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&buf)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn take<'a>(raw: &'a [u8], at: &mut usize, len: usize, path: &Path) -> Result<&'a [u8]> {
    if *at + len > raw.len() {
        return Err(Error::Snapshot(format!(
            "{} is truncated: needed {len} bytes at offset {at}, file has {}",
            path.display(),
            raw.len()
        )));
    }
    let s = &raw[*at..*at + len];
    *at += len;
    Ok(s)
}

const HEADER_LEN: usize = 5 + 1 + 4 + 5 * 8;

pub fn read_snapshot(path: &Path) -> Result<(WaveField, SnapshotHeader)> {
    let mut raw = Vec::new();
    fs::File::open(path)?.read_to_end(&mut raw)?;
    let raw = raw.as_slice();
    let mut at = 0usize;
    let mut take = |len: usize| take(raw, &mut at, len, path);
    let f64_at = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8 bytes"));

    if take(MAGIC.len())? != MAGIC {
        return Err(Error::Snapshot(format!(
            "{} does not start with the RGPE1 magic",
            path.display()
        )));
    }
    let dim = take(1)?[0] as usize;
    let m = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
    let half_width = f64_at(take(8)?);
    let a = f64_at(take(8)?);
    let p = f64_at(take(8)?);
    let omega_mag = f64_at(take(8)?);
    let c = f64_at(take(8)?);

    let grid = GridSpec::new(dim, m, half_width)
        .map_err(|e| Error::Snapshot(format!("{}: bad grid header: {e}", path.display())))?;
    let params = PhysicsParams::new(dim, a, p, omega_mag)
        .map_err(|e| Error::Snapshot(format!("{}: bad physics header: {e}", path.display())))?;

    let total = grid.node_count();
    if raw.len() != HEADER_LEN + 16 * total {
        return Err(Error::Snapshot(format!(
            "{}: payload holds {} bytes, expected {} for a {}^{} grid",
            path.display(),
            raw.len().saturating_sub(HEADER_LEN),
            16 * total,
            m,
            dim
        )));
    }
    let mut values = Vec::with_capacity(total);
    for _ in 0..total {
        let re = f64_at(take(8)?);
        let im = f64_at(take(8)?);
        values.push(C64::new(re, im));
    }
    let field = WaveField::from_values(grid, values)?;
    Ok((field, SnapshotHeader { grid, params, c }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{StreamKind, stream_rng};
    use crate::states::random_envelope_field;

    fn sample() -> (WaveField, PhysicsParams, f64) {
        let grid = GridSpec::new(2, 16, 5.0).unwrap();
        let mut rng = stream_rng(7, StreamKind::Check);
        let field = random_envelope_field(grid, &mut rng);
        let params = PhysicsParams::new(2, 1.5, 4.0, 0.25).unwrap();
        (field, params, 0.125)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.rgpe1");
        let (field, params, c) = sample();
        write_snapshot(&path, &field, &params, c).unwrap();
        let (back, header) = read_snapshot(&path).unwrap();
        assert_eq!(header.grid, field.grid());
        assert_eq!(header.params, params);
        assert_eq!(header.c.to_bits(), c.to_bits());
        assert_eq!(back.values().len(), field.values().len());
        for (x, y) in back.values().iter().zip(field.values()) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
        // No temp file left behind.
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.rgpe1");
        fs::write(&path, b"NOTRGPE1 and then some").unwrap();
        let err = read_snapshot(&path).unwrap_err();
        assert!(matches!(err, Error::Snapshot(_)), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn truncated_payload_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.rgpe1");
        let (field, params, c) = sample();
        write_snapshot(&path, &field, &params, c).unwrap();
        let mut raw = fs::read(&path).unwrap();
        raw.truncate(raw.len() - 8);
        fs::write(&path, &raw).unwrap();
        let err = read_snapshot(&path).unwrap_err();
        assert!(err.to_string().contains("payload"), "{err}");
    }

    #[test]
    fn header_validation_applies_on_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.rgpe1");
        let (field, params, c) = sample();
        write_snapshot(&path, &field, &params, c).unwrap();
        let mut raw = fs::read(&path).unwrap();
        raw[5] = 7; // dimension byte
        fs::write(&path, &raw).unwrap();
        let err = read_snapshot(&path).unwrap_err();
        assert!(err.to_string().contains("bad grid header"), "{err}");
    }
}

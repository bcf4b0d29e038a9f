//! Plain-text formats: two-column profiles, snapshot tables and `key=value`
//! run metadata.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::functionals::FunctionalSnapshot;
use crate::grid::{DensityField, Geometry, Grid};

pub const SNAPSHOT_HEADER: &str = "t,mass,Ep,Hp,Np,Fp,Ip,Dp,upsilon";

fn parse_f64(token: &str, line: usize) -> Result<f64> {
    token
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: '{}' is not a number", token.trim())))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Writes `x,u` (cartesian) or `r,u` (radial) rows. Floats use the shortest
/// representation that parses back to the same bits.
pub fn profile_to_string(f: &DensityField) -> String {
    let grid = f.grid();
    let mut out = String::from(if grid.is_radial() { "r,u\n" } else { "x,u\n" });
    for (x, u) in grid.coordinates().iter().zip(f.values()) {
        let _ = writeln!(out, "{x},{u}");
    }
    out
}

pub fn write_profile(path: &Path, f: &DensityField) -> Result<()> {
    fs::write(path, profile_to_string(f))?;
    Ok(())
}

/// Parses a two-column profile. Coordinates must be equally spaced cell
/// centres; radial files must start at `h/2`.
pub fn parse_profile(text: &str, geometry: Geometry) -> Result<DensityField> {
    let mut xs = Vec::new();
    let mut us = Vec::new();
    for (line, content) in data_lines(text) {
        let cols: Vec<&str> = content.split(',').collect();
        if cols.len() != 2 {
            return Err(Error::Parse(format!("line {line}: expected two columns, got {}", cols.len())));
        }
        if xs.is_empty() && us.is_empty() && cols[0].trim().parse::<f64>().is_err() {
            let header = cols[0].trim();
            let expected = if matches!(geometry, Geometry::Radial { .. }) { "r" } else { "x" };
            if header != expected || cols[1].trim() != "u" {
                return Err(Error::Parse(format!(
                    "line {line}: header '{content}' does not match '{expected},u'"
                )));
            }
            continue;
        }
        xs.push(parse_f64(cols[0], line)?);
        us.push(parse_f64(cols[1], line)?);
    }
    if xs.len() < 4 {
        return Err(Error::Parse(format!("profile needs at least 4 rows, got {}", xs.len())));
    }
    let nodes = xs.len();
    let spacing = (xs[nodes - 1] - xs[0]) / (nodes - 1) as f64;
    for (i, x) in xs.iter().enumerate() {
        let expected = xs[0] + spacing * i as f64;
        if (x - expected).abs() > 1e-9 * spacing.abs().max(x.abs()) {
            return Err(Error::Parse(format!("row {}: coordinates are not equally spaced", i + 1)));
        }
    }
    let origin = xs[0] - 0.5 * spacing;
    let origin = if matches!(geometry, Geometry::Radial { .. }) {
        if origin.abs() > 1e-9 * spacing {
            return Err(Error::Parse(format!(
                "radial profile must start at r = h/2 = {}, got {}",
                0.5 * spacing,
                xs[0]
            )));
        }
        0.0
    } else {
        origin
    };
    DensityField::new(Grid::new(geometry, nodes, spacing, origin)?, us)
}

pub fn read_profile(path: &Path, geometry: Geometry) -> Result<DensityField> {
    let text = fs::read_to_string(path)?;
    parse_profile(&text, geometry).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// One row per snapshot; `Dp` is empty when it was not computed.
pub fn snapshots_to_csv(series: &[FunctionalSnapshot]) -> String {
    let mut out = format!("{SNAPSHOT_HEADER}\n");
    for s in series {
        let dp = s.d_p.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.t, s.mass, s.e_p, s.h_p, s.n_p, s.f_p, s.i_p, dp, s.upsilon
        );
    }
    out
}

pub fn write_snapshots(path: &Path, series: &[FunctionalSnapshot]) -> Result<()> {
    fs::write(path, snapshots_to_csv(series))?;
    Ok(())
}

pub fn parse_snapshots(text: &str) -> Result<Vec<FunctionalSnapshot>> {
    let mut lines = data_lines(text);
    match lines.next() {
        Some((_, header)) if header == SNAPSHOT_HEADER => {}
        Some((line, header)) => {
            return Err(Error::Parse(format!(
                "line {line}: header '{header}' is not '{SNAPSHOT_HEADER}'"
            )))
        }
        None => return Err(Error::Parse("empty snapshot table".into())),
    }
    lines
        .map(|(line, content)| {
            let cols: Vec<&str> = content.split(',').collect();
            if cols.len() != 9 {
                return Err(Error::Parse(format!("line {line}: expected 9 columns, got {}", cols.len())));
            }
            let v = |k: usize| parse_f64(cols[k], line);
            Ok(FunctionalSnapshot {
                t: v(0)?,
                mass: v(1)?,
                e_p: v(2)?,
                h_p: v(3)?,
                n_p: v(4)?,
                f_p: v(5)?,
                i_p: v(6)?,
                d_p: if cols[7].trim().is_empty() { None } else { Some(v(7)?) },
                upsilon: v(8)?,
            })
        })
        .collect()
}

pub fn read_snapshots(path: &Path) -> Result<Vec<FunctionalSnapshot>> {
    parse_snapshots(&fs::read_to_string(path)?)
}

/// `key=value` lines in the given order.
pub fn key_values_to_string(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    data_lines(text)
        .map(|(line, content)| {
            content
                .split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Parse(format!("line {line}: expected key=value")))
        })
        .collect()
}

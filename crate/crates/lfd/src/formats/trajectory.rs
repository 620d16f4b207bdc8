//! Trajectory CSV: header `n,t,x,y`, one row per sample, numbers written with 17
//! significant digits so that reading back reproduces every bit.

use std::fmt::Write as _;
use std::path::Path;

use tabletop_core::tpgmm::{DataPoint, Trajectory};

use super::{read_text, write_text};
use crate::LfdError;

pub const HEADER: &str = "n,t,x,y";

pub fn format_trajectory(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.len() * 80);
    out.push_str(HEADER);
    out.push('\n');
    for (i, s) in traj.samples().iter().enumerate() {
        let _ = writeln!(out, "{i},{:.16e},{:.16e},{:.16e}", s.t, s.y[0], s.y[1]);
    }
    out
}

pub fn parse_trajectory(text: &str, path: &Path) -> Result<Trajectory, LfdError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == HEADER => {}
        other => return Err(LfdError::parse(path, format!("expected header {HEADER:?}, found {other:?}"))),
    }
    let mut samples = Vec::new();
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(LfdError::parse(path, format!("row {row}: expected 4 fields, found {}", fields.len())));
        }
        let n: usize = fields[0].parse().map_err(|_| LfdError::parse(path, format!("row {row}: bad index {:?}", fields[0])))?;
        if n != row {
            return Err(LfdError::parse(path, format!("row {row}: index {n} out of sequence")));
        }
        let num = |k: usize| -> Result<f64, LfdError> {
            fields[k].parse().map_err(|_| LfdError::parse(path, format!("row {row}: bad number {:?}", fields[k])))
        };
        samples.push(DataPoint::new(num(1)?, num(2)?, num(3)?));
    }
    Trajectory::new(samples).map_err(|e| LfdError::InvariantViolation(format!("{}: {e}", path.display())))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, LfdError> {
    parse_trajectory(&read_text(path)?, path)
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), LfdError> {
    write_text(path, &format_trajectory(traj))
}

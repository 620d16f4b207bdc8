//! Calibration correspondences and homography files.
//!
//! A correspondence file holds one `sx sy tx ty` line per pair (source pixel,
//! target virtual pixel); blank lines and `#` comments are ignored. A homography
//! file holds the nine matrix entries in row-major order, whitespace separated.

use std::fmt::Write as _;
use std::path::Path;

use tabletop_core::geometry::{Homography, Pixel};

use super::{read_text, write_text};
use crate::LfdError;

fn numbers(line: &str) -> Result<Vec<f64>, String> {
    line.split_whitespace().map(|t| t.parse::<f64>().map_err(|_| format!("bad number {t:?}"))).collect()
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn parse_correspondences(text: &str, path: &Path) -> Result<Vec<(Pixel, Pixel)>, LfdError> {
    content_lines(text)
        .map(|(no, line)| {
            let v = numbers(line).map_err(|m| LfdError::parse(path, format!("line {no}: {m}")))?;
            if v.len() != 4 {
                return Err(LfdError::parse(path, format!("line {no}: expected 4 numbers, found {}", v.len())));
            }
            Ok((Pixel::new(v[0], v[1]), Pixel::new(v[2], v[3])))
        })
        .collect()
}

pub fn read_correspondences(path: &Path) -> Result<Vec<(Pixel, Pixel)>, LfdError> {
    parse_correspondences(&read_text(path)?, path)
}

pub fn format_homography(h: &Homography) -> String {
    let mut out = String::new();
    for row in h.matrix() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

pub fn parse_homography(text: &str, path: &Path) -> Result<Homography, LfdError> {
    let mut v = Vec::with_capacity(9);
    for (no, line) in content_lines(text) {
        v.extend(numbers(line).map_err(|m| LfdError::parse(path, format!("line {no}: {m}")))?);
    }
    if v.len() != 9 {
        return Err(LfdError::parse(path, format!("expected 9 entries, found {}", v.len())));
    }
    let m = [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]];
    Ok(Homography::from_matrix(m)?)
}

pub fn read_homography(path: &Path) -> Result<Homography, LfdError> {
    parse_homography(&read_text(path)?, path)
}

pub fn write_homography(path: &Path, h: &Homography) -> Result<(), LfdError> {
    write_text(path, &format_homography(h))
}

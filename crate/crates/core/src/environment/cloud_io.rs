//! ASCII point-cloud readers (xyz, PLY, PCD) and an xyz writer.
//!
//! Only vertex positions are read; every other property is ignored.

use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{PointCloudIndex, DEFAULT_RESOLUTION};
use crate::error::{CoverError, Result};
use crate::geometry::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CloudFormat {
    Xyz,
    PlyAscii,
    PcdAscii,
}

impl CloudFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "xyz" | "txt" => Some(Self::Xyz),
            "ply" => Some(Self::PlyAscii),
            "pcd" => Some(Self::PcdAscii),
            _ => None,
        }
    }
}

impl FromStr for CloudFormat {
    type Err = CoverError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xyz" => Ok(Self::Xyz),
            "ply" | "ply-ascii" => Ok(Self::PlyAscii),
            "pcd" | "pcd-ascii" => Ok(Self::PcdAscii),
            other => Err(CoverError::Config(format!("unknown cloud format `{other}`"))),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> CoverError {
    CoverError::Parse { line, message: message.into() }
}

fn parse_coord(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| parse_err(line, format!("`{tok}` is not a number")))
}

/// Reads every point of `reader`. Line numbers in errors are 1-based.
pub fn parse_points<R: BufRead>(reader: R, format: CloudFormat) -> Result<Vec<Point3>> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    match format {
        CloudFormat::Xyz => parse_xyz(&mut lines),
        CloudFormat::PlyAscii => parse_ply(&mut lines),
        CloudFormat::PcdAscii => parse_pcd(&mut lines),
    }
}

type Lines<'a> = dyn Iterator<Item = (usize, std::io::Result<String>)> + 'a;

fn parse_xyz(lines: &mut Lines<'_>) -> Result<Vec<Point3>> {
    let mut points = Vec::new();
    for (n, line) in lines {
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(parse_err(n, format!("expected 3 coordinates, found {}", toks.len())));
        }
        let p = Point3::new(parse_coord(toks[0], n)?, parse_coord(toks[1], n)?, parse_coord(toks[2], n)?);
        if !p.is_finite() {
            return Err(parse_err(n, "non-finite coordinate"));
        }
        points.push(p);
    }
    Ok(points)
}

fn parse_ply(lines: &mut Lines<'_>) -> Result<Vec<Point3>> {
    let mut next = |expect: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, l)) => Ok((n, l?)),
            None => Err(parse_err(0, format!("unexpected end of file, expected {expect}"))),
        }
    };
    let (n, magic) = next("`ply`")?;
    if magic.trim() != "ply" {
        return Err(parse_err(n, "missing `ply` magic"));
    }
    // Elements before `vertex` must be skipped by line count.
    let mut skip_before = 0usize;
    let mut vertex_count: Option<usize> = None;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    loop {
        let (n, line) = next("`end_header`")?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["end_header"] => break,
            ["format", kind, ..] => {
                if *kind != "ascii" {
                    return Err(parse_err(n, format!("unsupported PLY format `{kind}`")));
                }
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count: usize = count.parse().map_err(|_| parse_err(n, "bad element count"))?;
                in_vertex = *name == "vertex";
                if in_vertex {
                    vertex_count = Some(count);
                } else if vertex_count.is_none() {
                    skip_before += count;
                }
            }
            ["property", "list", ..] => {
                if in_vertex {
                    return Err(parse_err(n, "list properties on vertices are not supported"));
                }
            }
            ["property", _ty, name] => {
                if in_vertex {
                    vertex_props.push((*name).to_string());
                }
            }
            _ => return Err(parse_err(n, format!("unrecognized header line `{}`", line.trim()))),
        }
    }
    let count = vertex_count.ok_or_else(|| parse_err(0, "no vertex element"))?;
    let col = |name: &str| vertex_props.iter().position(|p| p == name);
    let (Some(cx), Some(cy), Some(cz)) = (col("x"), col("y"), col("z")) else {
        return Err(parse_err(0, "vertex element lacks x/y/z properties"));
    };
    for _ in 0..skip_before {
        next("element data")?;
    }
    let mut points = Vec::with_capacity(count);
    while points.len() < count {
        let (n, line) = next("vertex data")?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < vertex_props.len() {
            return Err(parse_err(n, format!("expected {} vertex values, found {}", vertex_props.len(), toks.len())));
        }
        points.push(Point3::new(parse_coord(toks[cx], n)?, parse_coord(toks[cy], n)?, parse_coord(toks[cz], n)?));
    }
    Ok(points)
}

fn parse_pcd(lines: &mut Lines<'_>) -> Result<Vec<Point3>> {
    let mut fields: Vec<String> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut declared: Option<usize> = None;
    let mut data_line = 0;
    for (n, line) in &mut *lines {
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut toks = body.split_whitespace();
        let key = toks.next().unwrap_or_default().to_ascii_uppercase();
        let rest: Vec<&str> = toks.collect();
        match key.as_str() {
            "FIELDS" => fields = rest.iter().map(|s| s.to_string()).collect(),
            "COUNT" => {
                counts = rest.iter().map(|s| s.parse().map_err(|_| parse_err(n, "bad COUNT"))).collect::<Result<_>>()?
            }
            "POINTS" => {
                declared = Some(rest.first().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(n, "bad POINTS"))?)
            }
            "DATA" => {
                if rest.first().map(|s| s.to_ascii_lowercase()) != Some("ascii".into()) {
                    return Err(parse_err(n, format!("unsupported PCD data `{}`", rest.join(" "))));
                }
                data_line = n;
                break;
            }
            "VERSION" | "SIZE" | "TYPE" | "WIDTH" | "HEIGHT" | "VIEWPOINT" => {}
            _ => return Err(parse_err(n, format!("unrecognized header line `{body}`"))),
        }
    }
    if data_line == 0 {
        return Err(parse_err(0, "missing DATA line"));
    }
    if counts.is_empty() {
        counts = vec![1; fields.len()];
    }
    if counts.len() != fields.len() {
        return Err(parse_err(data_line, "FIELDS and COUNT disagree"));
    }
    let column = |name: &str| -> Option<usize> {
        let k = fields.iter().position(|f| f == name)?;
        Some(counts[..k].iter().sum())
    };
    let (Some(cx), Some(cy), Some(cz)) = (column("x"), column("y"), column("z")) else {
        return Err(parse_err(data_line, "FIELDS lacks x/y/z"));
    };
    let width: usize = counts.iter().sum();
    let mut points = Vec::new();
    let mut rows = 0usize;
    for (n, line) in lines {
        let line = line?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() < width {
            return Err(parse_err(n, format!("expected {width} values, found {}", toks.len())));
        }
        rows += 1;
        let p = Point3::new(parse_coord(toks[cx], n)?, parse_coord(toks[cy], n)?, parse_coord(toks[cz], n)?);
        // organized clouds mark missing returns with NaN
        if p.is_finite() {
            points.push(p);
        }
    }
    if let Some(d) = declared {
        if d != rows {
            return Err(parse_err(data_line, format!("POINTS declares {d} rows, found {rows}")));
        }
    }
    Ok(points)
}

/// Parses and indexes a cloud. Fails with "empty cloud" when nothing was read.
pub fn load_point_cloud<R: BufRead>(reader: R, format: CloudFormat) -> Result<PointCloudIndex> {
    let points = parse_points(reader, format)?;
    if points.is_empty() {
        return Err(CoverError::EmptyCloud);
    }
    PointCloudIndex::new(points, DEFAULT_RESOLUTION)
}

/// Reads every point of the file at `path`; errors carry the path.
pub fn read_points_file(path: &Path, format: CloudFormat) -> Result<Vec<Point3>> {
    let file = std::fs::File::open(path).map_err(|e| CoverError::Io(format!("{}: {e}", path.display())))?;
    let points = parse_points(std::io::BufReader::new(file), format)?;
    if points.is_empty() {
        return Err(CoverError::EmptyCloud);
    }
    Ok(points)
}

pub fn write_xyz<W: Write>(mut writer: W, points: &[Point3]) -> Result<()> {
    for p in points {
        writeln!(writer, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn xyz_three_lines() {
        let idx = load_point_cloud("0 0 0\n1 0 0\n0 1 0\n".as_bytes(), CloudFormat::Xyz).unwrap();
        assert_eq!(idx.len(), 3);
    }

    #[test]
    fn xyz_short_line_reports_line_number() {
        let text = "0 0 0\n1 0 0\n0 1 0\n2 2 2\n1 2\n";
        let err = load_point_cloud(text.as_bytes(), CloudFormat::Xyz).unwrap_err();
        assert!(matches!(err, CoverError::Parse { line: 5, .. }), "{err:?}");
        assert!(err.to_string().starts_with("line 5"));
    }

    #[test]
    fn xyz_empty_is_error() {
        let err = load_point_cloud("# nothing\n".as_bytes(), CloudFormat::Xyz).unwrap_err();
        assert_eq!(err.to_string(), "empty cloud");
    }

    #[test]
    fn ply_two_vertices() {
        let text = "ply\nformat ascii 1.0\ncomment test\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nelement face 0\nproperty list uchar int vertex_indices\nend_header\n1 2 3 255\n4 5 6 0\n";
        let pts = parse_points(text.as_bytes(), CloudFormat::PlyAscii).unwrap();
        assert_eq!(pts, vec![Point3::new(1.0, 2.0, 3.0), Point3::new(4.0, 5.0, 6.0)]);
    }

    #[test]
    fn ply_binary_rejected() {
        let text = "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nend_header\n";
        let err = parse_points(text.as_bytes(), CloudFormat::PlyAscii).unwrap_err();
        assert!(matches!(err, CoverError::Parse { line: 2, .. }));
    }

    #[test]
    fn pcd_with_extra_fields_and_nan() {
        let text = "# .PCD v0.7\nVERSION 0.7\nFIELDS rgb x y z\nSIZE 4 4 4 4\nTYPE F F F F\nCOUNT 1 1 1 1\nWIDTH 3\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 3\nDATA ascii\n0 1 2 3\n0 nan nan nan\n0 4 5 6\n";
        let pts = parse_points(text.as_bytes(), CloudFormat::PcdAscii).unwrap();
        assert_eq!(pts, vec![Point3::new(1.0, 2.0, 3.0), Point3::new(4.0, 5.0, 6.0)]);
    }

    #[test]
    fn pcd_short_row() {
        let text = "FIELDS x y z\nPOINTS 1\nDATA ascii\n1 2\n";
        let err = parse_points(text.as_bytes(), CloudFormat::PcdAscii).unwrap_err();
        assert!(matches!(err, CoverError::Parse { line: 4, .. }));
    }

    proptest! {
        #[test]
        fn xyz_round_trip(raw in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3, -1e3f64..1e3), 1..50)) {
            let pts: Vec<Point3> = raw.into_iter().map(|(x, y, z)| Point3::new(x, y, z)).collect();
            let mut buf = Vec::new();
            write_xyz(&mut buf, &pts).unwrap();
            let back = parse_points(buf.as_slice(), CloudFormat::Xyz).unwrap();
            prop_assert_eq!(back, pts);
        }
    }
}

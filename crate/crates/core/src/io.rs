//! File formats: space descriptions, points, and samples.
//!
//! * Space: a built-in name (`spider:k`, `book:k`, `t4`) or a JSON file
//!   `{"axes": [..], "faces": [[..], ..]}`.
//! * Point: `{"coords": {"axis": value}}` or the bare map `{"axis": value}`.
//!   Point files hold one point per line.
//! * Spider sample CSV: header `leg,coord`, one row per draw, where `leg` is
//!   the axis name.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::complex::{OrthantComplex, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub axes: Vec<String>,
    pub faces: Vec<Vec<String>>,
}

impl SpaceFile {
    pub fn of(c: &OrthantComplex) -> Self {
        SpaceFile {
            axes: c.axes().to_vec(),
            faces: c.maximal_faces().iter().map(|f| f.iter().map(|i| c.axis_name(i).to_string()).collect()).collect(),
        }
    }

    pub fn build(&self) -> Result<OrthantComplex> {
        OrthantComplex::new(&self.axes, &self.faces)
    }
}

fn parse_err(what: &str, e: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{what}: {e}"))
}

/// Parses a space from JSON text.
pub fn parse_space(text: &str) -> Result<OrthantComplex> {
    let file: SpaceFile = serde_json::from_str(text).map_err(|e| parse_err("space", e))?;
    file.build()
}

/// A built-in space name, or else a path to a JSON space file.
pub fn load_space(spec: &str) -> Result<OrthantComplex> {
    match OrthantComplex::builtin(spec) {
        Ok(c) => Ok(c),
        Err(builtin_err) => {
            let path = Path::new(spec);
            if path.exists() {
                parse_space(&fs::read_to_string(path)?)
            } else {
                Err(builtin_err)
            }
        }
    }
}

fn point_from_value(c: &OrthantComplex, v: &Value) -> Result<Point> {
    let map = match v.get("coords") {
        Some(inner) => inner,
        None => v,
    };
    let coords: BTreeMap<String, f64> = serde_json::from_value(map.clone()).map_err(|e| parse_err("point", e))?;
    let pairs: Vec<(&str, f64)> = coords.iter().map(|(k, &x)| (k.as_str(), x)).collect();
    c.point(&pairs)
}

/// Parses one point from JSON text.
pub fn parse_point(c: &OrthantComplex, text: &str) -> Result<Point> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err("point", e))?;
    point_from_value(c, &v)
}

/// Inline JSON, or else a file whose first nonblank line is the point.
pub fn load_point(c: &OrthantComplex, spec: &str) -> Result<Point> {
    let trimmed = spec.trim_start();
    if trimmed.starts_with('{') {
        return parse_point(c, trimmed);
    }
    let text = fs::read_to_string(spec)?;
    let line = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| Error::Parse(format!("point file `{spec}` is empty")))?;
    parse_point(c, line)
}

/// Points from JSON-lines text; blank lines are skipped.
pub fn parse_points_jsonl(c: &OrthantComplex, text: &str) -> Result<Vec<Point>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_point(c, l).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1))))
        .collect()
}

/// `{"axis": value}` for a point.
pub fn point_json(c: &OrthantComplex, p: &Point) -> Value {
    let map: serde_json::Map<String, Value> =
        p.coords().iter().map(|&(i, v)| (c.axis_name(i).to_string(), Value::from(v))).collect();
    Value::Object(map)
}

/// Compact single-line label for a point, as used in CSV outputs.
pub fn point_label(c: &OrthantComplex, p: &Point) -> String {
    point_json(c, p).to_string()
}

/// Reads a spider sample in `leg,coord` CSV form.
pub fn read_sample_csv<R: Read>(c: &OrthantComplex, reader: R) -> Result<Vec<Point>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err("sample header", e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("sample CSV lacks a `{name}` column")))
    };
    let (leg_col, coord_col) = (col("leg")?, col("coord")?);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err("sample", e))?;
        let row = i + 2;
        let leg = rec.get(leg_col).unwrap_or("");
        let axis = c.axis_index(leg).ok_or_else(|| Error::UnknownAxis(leg.to_string()))?;
        let coord: f64 = rec
            .get(coord_col)
            .unwrap_or("")
            .parse()
            .map_err(|e| Error::Parse(format!("row {row}: coordinate: {e}")))?;
        out.push(c.axis_point(axis, coord)?);
    }
    Ok(out)
}

/// A sample file: JSON lines when the extension is `.jsonl`, CSV otherwise.
pub fn read_sample(c: &OrthantComplex, path: &Path) -> Result<Vec<Point>> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        parse_points_jsonl(c, &fs::read_to_string(path)?)
    } else {
        read_sample_csv(c, fs::File::open(path)?)
    }
}

/// Writes a spider sample as `leg,coord` CSV. Origin draws are written on the
/// first leg with coordinate zero.
pub fn write_sample_csv<W: std::io::Write>(c: &OrthantComplex, sample: &[Point], out: W) -> Result<()> {
    if !c.is_spider() {
        return Err(Error::NotSpider);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["leg", "coord"]).map_err(csv_err)?;
    for p in sample {
        let (leg, u) = p.leg().unwrap_or((0, 0.0));
        w.write_record([c.axis_name(leg).to_string(), u.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("csv: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_round_trip() {
        let t4 = OrthantComplex::tree_space_4();
        let text = serde_json::to_string(&SpaceFile::of(&t4)).unwrap();
        assert_eq!(parse_space(&text).unwrap(), t4);
        assert!(matches!(load_space("spider:0"), Err(Error::UnknownSpace(_))));
    }

    #[test]
    fn point_formats() {
        let c = OrthantComplex::spider(3).unwrap();
        let a = parse_point(&c, r#"{"1": 0.5}"#).unwrap();
        let b = parse_point(&c, r#"{"coords": {"1": 0.5}}"#).unwrap();
        assert_eq!(a, b);
        assert_eq!(point_label(&c, &a), r#"{"1":0.5}"#);
        assert!(parse_point(&c, r#"{"0": 1, "1": 1}"#).is_err());
        assert!(parse_point(&c, r#"{"7": 1}"#).is_err());
    }

    #[test]
    fn sample_csv_round_trip() {
        let c = OrthantComplex::spider(3).unwrap();
        let sample = vec![c.axis_point(2, 0.25).unwrap(), c.origin(), c.axis_point(0, 1.0 / 3.0).unwrap()];
        let mut buf = Vec::new();
        write_sample_csv(&c, &sample, &mut buf).unwrap();
        assert_eq!(read_sample_csv(&c, buf.as_slice()).unwrap(), sample);
        assert!(read_sample_csv(&c, "a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_sample_csv(&c, "leg,coord\n5,0.1\n".as_bytes()).is_err());
    }
}

//! Grid samples as CSV: header `x,y,re,im`, row-major with `x` fastest, LF
//! line endings. Floats use the shortest representation that parses back to
//! the same bits.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::{GridSpec, MAX_GRID_POINTS};
use crate::geometry::Pt;
use crate::smoothfn::SampledGrid;

pub const HEADER: [&str; 4] = ["x", "y", "re", "im"];

/// Samples on a uniform grid as read from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct GridData {
    pub grid: GridSpec,
    pub points: Vec<Pt>,
    pub values: Vec<Complex64>,
}

impl GridData {
    pub fn into_sampled(self) -> Result<SampledGrid> {
        let g = self.grid;
        SampledGrid::new((g.xmin, g.xmax, g.ymin, g.ymax), g.nx, g.ny, self.values)
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parse(format!("{other:?}")),
    }
}

pub fn write_grid_csv<W: Write>(out: W, rows: impl IntoIterator<Item = (Pt, Complex64)>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER).map_err(csv_err)?;
    for (p, v) in rows {
        w.write_record([p.x.to_string(), p.y.to_string(), v.re.to_string(), v.im.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn field(rec: &csv::StringRecord, i: usize, line: usize) -> Result<f64> {
    let s = rec.get(i).ok_or_else(|| Error::Parse(format!("line {line}: missing column {}", HEADER[i])))?;
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse(format!("line {line}: bad number {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {line}: non-finite {s:?}")));
    }
    Ok(v)
}

/// Reads a grid dump and checks that it is uniform and complete.
pub fn read_grid_csv<R: Read>(input: R) -> Result<GridData> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.len() != 4 || header.iter().zip(HEADER).any(|(a, b)| a.trim() != b) {
        return Err(Error::Parse(format!("expected header x,y,re,im, got {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        if points.len() >= MAX_GRID_POINTS {
            return Err(Error::InvalidGrid(format!("more than {MAX_GRID_POINTS} rows")));
        }
        points.push(Pt::new(field(&rec, 0, line)?, field(&rec, 1, line)?));
        values.push(Complex64::new(field(&rec, 2, line)?, field(&rec, 3, line)?));
    }
    let y0 = points.first().map(|p| p.y).ok_or_else(|| Error::InvalidGrid("no rows".into()))?;
    let nx = points.iter().take_while(|p| p.y == y0).count();
    if nx < 2 || points.len() % nx != 0 {
        return Err(Error::InvalidGrid(format!("{} rows do not form rows of {nx}", points.len())));
    }
    let ny = points.len() / nx;
    let (xmin, xmax) = (points[0].x, points[nx - 1].x);
    let (ymin, ymax) = (y0, points[points.len() - 1].y);
    let grid = GridSpec::new((xmin, xmax, ymin, ymax), nx, ny)?;
    let tol = |span: f64| 1e-9 * (1.0 + span.abs());
    for (k, p) in points.iter().enumerate() {
        let want = grid.point(k % nx, k / nx);
        if (p.x - want.x).abs() > tol(xmax - xmin) || (p.y - want.y).abs() > tol(ymax - ymin) {
            return Err(Error::InvalidGrid(format!("row {} at {:?} is off the uniform grid", k + 2, (p.x, p.y))));
        }
    }
    Ok(GridData { grid, points, values })
}

//! Pitch grid discretization and metric distances.
//!
//! Inputs are normalized provider coordinates: `x` runs along the pitch
//! length, `y` along the width with the origin in the top-left corner
//! (y grows downward). Grid rows are counted from the bottom, so cell
//! `A1` is the bottom-left corner and `F4` the top-right one under the
//! default 6x4 grid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A position in normalized pitch coordinates, both axes within `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPoint {
    pub x: f64,
    pub y: f64,
}

impl NormalizedPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if ok(x) && ok(y) {
            Ok(NormalizedPoint { x, y })
        } else {
            Err(Error::Config(format!(
                "point ({x}, {y}) outside the unit square"
            )))
        }
    }

    /// Clamps finite coordinates into the unit square. Returns `None` for
    /// non-finite input.
    pub fn clamped(x: f64, y: f64) -> Option<Self> {
        if x.is_finite() && y.is_finite() {
            Some(NormalizedPoint {
                x: x.clamp(0.0, 1.0),
                y: y.clamp(0.0, 1.0),
            })
        } else {
            None
        }
    }

    /// Point reflection through the pitch center.
    pub fn flipped(self) -> Self {
        NormalizedPoint {
            x: 1.0 - self.x,
            y: 1.0 - self.y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub cols: u16,
    pub rows: u16,
    pub pitch_length_m: f64,
    pub pitch_width_m: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            cols: 6,
            rows: 4,
            pitch_length_m: 105.0,
            pitch_width_m: 68.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cols == 0 || self.rows == 0 {
            return Err(Error::InvalidGrid(format!(
                "{}x{} grid needs at least one column and one row",
                self.cols, self.rows
            )));
        }
        if !(self.pitch_length_m > 0.0 && self.pitch_width_m > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "pitch dimensions must be positive, got {} x {}",
                self.pitch_length_m, self.pitch_width_m
            )));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.cols as usize * self.rows as usize
    }

    /// All cells, column-major (A1, A2, ..., B1, ...).
    pub fn cells(&self) -> impl Iterator<Item = GridCell> + '_ {
        (0..self.cols).flat_map(move |col| (0..self.rows).map(move |row| GridCell { col, row }))
    }

    /// Cell containing `p`. Intervals are half-open with the far edge folded
    /// into the last column/row.
    pub fn cell(&self, p: NormalizedPoint) -> GridCell {
        let cols = f64::from(self.cols);
        let rows = f64::from(self.rows);
        let col = ((p.x * cols).floor() as i64).clamp(0, i64::from(self.cols) - 1);
        let row = (((1.0 - p.y) * rows).floor() as i64).clamp(0, i64::from(self.rows) - 1);
        GridCell {
            col: col as u16,
            row: row as u16,
        }
    }

    /// Center of `cell` in normalized provider coordinates.
    pub fn cell_center(&self, cell: GridCell) -> NormalizedPoint {
        NormalizedPoint {
            x: (f64::from(cell.col) + 0.5) / f64::from(self.cols),
            y: 1.0 - (f64::from(cell.row) + 0.5) / f64::from(self.rows),
        }
    }

    pub fn contains(&self, cell: GridCell) -> bool {
        cell.col < self.cols && cell.row < self.rows
    }
}

/// One cell of the pitch grid. `row` 0 is the bottom row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridCell {
    pub col: u16,
    pub row: u16,
}

impl GridCell {
    pub fn new(col: u16, row: u16) -> Self {
        GridCell { col, row }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

/// Spreadsheet-style column letters: A..Z, AA, AB, ...
fn column_letters(mut col: u32) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'A' + (col % 26) as u8);
        if col < 26 {
            break;
        }
        col = col / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

impl fmt::Display for GridCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", column_letters(u32::from(self.col)), self.row + 1)
    }
}

impl FromStr for GridCell {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid grid cell label `{s}`"));
        let split = s.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?;
        let (letters, digits) = s.split_at(split);
        if letters.is_empty() || !letters.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(bad());
        }
        let mut col: u32 = 0;
        for b in letters.bytes() {
            col = col * 26 + u32::from(b - b'A') + 1;
        }
        let row: u32 = digits.parse().map_err(|_| bad())?;
        if row == 0 || col == 0 || col > u32::from(u16::MAX) || row > u32::from(u16::MAX) {
            return Err(bad());
        }
        Ok(GridCell {
            col: (col - 1) as u16,
            row: (row - 1) as u16,
        })
    }
}

pub fn cell_of(p: Option<NormalizedPoint>, spec: &GridSpec) -> Result<GridCell> {
    p.map(|p| spec.cell(p)).ok_or(Error::NoPosition)
}

pub fn cell_label(cell: GridCell) -> String {
    cell.label()
}

/// Euclidean distance in meters after scaling both axes to the pitch size.
pub fn metric_distance(a: NormalizedPoint, b: NormalizedPoint, spec: &GridSpec) -> f64 {
    let dx = (a.x - b.x) * spec.pitch_length_m;
    let dy = (a.y - b.y) * spec.pitch_width_m;
    dx.hypot(dy)
}

/// Length of a sampled path. Absent samples are skipped, so a gap is bridged
/// by a straight segment between its nearest present neighbors.
pub fn path_length(points: &[Option<NormalizedPoint>], spec: &GridSpec) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyPath);
    }
    Ok(present_path_length(points.iter().flatten().copied(), spec))
}

pub(crate) fn present_path_length(
    points: impl IntoIterator<Item = NormalizedPoint>,
    spec: &GridSpec,
) -> f64 {
    let mut total = 0.0;
    let mut prev: Option<NormalizedPoint> = None;
    for p in points {
        if let Some(q) = prev {
            total += metric_distance(q, p, spec);
        }
        prev = Some(p);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> NormalizedPoint {
        NormalizedPoint::new(x, y).unwrap()
    }

    #[test]
    fn corners_follow_bottom_left_origin() {
        let spec = GridSpec::default();
        assert_eq!(spec.cell(pt(0.0, 1.0)).label(), "A1");
        assert_eq!(spec.cell(pt(1.0, 0.0)).label(), "F4");
        assert_eq!(spec.cell(pt(0.0, 0.0)).label(), "A4");
        assert_eq!(spec.cell(pt(1.0, 1.0)).label(), "F1");
    }

    #[test]
    fn center_point() {
        // col = floor(0.5 * 6) = 3 -> D, row = floor(0.5 * 4) = 2 -> 3
        assert_eq!(GridSpec::default().cell(pt(0.5, 0.5)).label(), "D3");
    }

    #[test]
    fn absent_point_has_no_cell() {
        assert!(matches!(
            cell_of(None, &GridSpec::default()),
            Err(Error::NoPosition)
        ));
    }

    #[test]
    fn labels() {
        assert_eq!(cell_label(GridCell::new(0, 0)), "A1");
        assert_eq!(cell_label(GridCell::new(5, 3)), "F4");
        assert_eq!(cell_label(GridCell::new(1, 2)), "B3");
        assert_eq!(cell_label(GridCell::new(26, 9)), "AA10");
    }

    #[test]
    fn label_parse_round_trip() {
        for col in [0u16, 1, 25, 26, 27, 51, 52, 701, 702] {
            let cell = GridCell::new(col, 3);
            assert_eq!(cell.label().parse::<GridCell>().unwrap(), cell);
        }
        assert!("a1".parse::<GridCell>().is_err());
        assert!("A0".parse::<GridCell>().is_err());
        assert!("7".parse::<GridCell>().is_err());
    }

    #[test]
    fn default_grid_has_24_distinct_cells() {
        let spec = GridSpec::default();
        let labels: std::collections::BTreeSet<_> = spec.cells().map(|c| c.label()).collect();
        assert_eq!(labels.len(), 24);
        assert!(labels.contains("A1") && labels.contains("F4"));
    }

    #[test]
    fn distances() {
        let spec = GridSpec::default();
        assert_eq!(metric_distance(pt(0.3, 0.3), pt(0.3, 0.3), &spec), 0.0);
        assert!((metric_distance(pt(0.0, 0.0), pt(1.0, 0.0), &spec) - 105.0).abs() < 1e-12);
        // 105 / 6
        assert!((metric_distance(pt(0.0, 0.0), pt(1.0 / 6.0, 0.0), &spec) - 17.5).abs() < 1e-12);
    }

    #[test]
    fn path_lengths() {
        let spec = GridSpec::default();
        assert_eq!(path_length(&[Some(pt(0.2, 0.2))], &spec).unwrap(), 0.0);
        let collinear = [Some(pt(0.0, 0.0)), Some(pt(0.5, 0.0)), Some(pt(1.0, 0.0))];
        assert!((path_length(&collinear, &spec).unwrap() - 105.0).abs() < 1e-12);
        let gapped = [Some(pt(0.0, 0.0)), None, Some(pt(1.0, 0.0))];
        assert!((path_length(&gapped, &spec).unwrap() - 105.0).abs() < 1e-12);
        assert!(matches!(path_length(&[], &spec), Err(Error::EmptyPath)));
    }

    #[test]
    fn invalid_grids_rejected() {
        let spec = GridSpec {
            cols: 0,
            ..GridSpec::default()
        };
        assert!(spec.validate().is_err());
        let spec = GridSpec {
            pitch_width_m: -1.0,
            ..GridSpec::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn cell_center_maps_back_to_cell() {
        let spec = GridSpec::default();
        for cell in spec.cells() {
            assert_eq!(spec.cell(spec.cell_center(cell)), cell);
        }
    }
}

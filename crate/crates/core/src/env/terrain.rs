//! Heightfield terrains.
//!
//! Rough terrain is lattice value noise: each grid node gets an independent
//! uniform height in `[-amplitude, amplitude]` and queries interpolate
//! bilinearly between the four surrounding nodes. Queries outside the grid
//! clamp to the border, so the surface is continuous everywhere.
//!
//! Text format (one `key value` pair per header line, then `rows` lines of
//! `cols` whitespace-separated heights, row-major, row index along y):
//!
//! ```text
//! kind rough
//! seed 7
//! amplitude 0.03
//! cell_size 0.05
//! rows 121
//! cols 801
//! origin_x -2
//! origin_y -3
//! 0.0123 -0.004 ...
//! ```
//!
//! `origin_x`/`origin_y` locate node (0, 0) in world coordinates.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, LoadError, Result};

/// Area covered by a generated rough grid, in metres.
const GRID_X_MIN: f64 = -2.0;
const GRID_X_MAX: f64 = 38.0;
const GRID_HALF_WIDTH: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerrainKind {
    Flat,
    Rough,
}

impl TerrainKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TerrainKind::Flat => "flat",
            TerrainKind::Rough => "rough",
        }
    }
}

impl std::fmt::Display for TerrainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TerrainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(TerrainKind::Flat),
            "rough" => Ok(TerrainKind::Rough),
            other => Err(Error::Input(format!("unknown terrain kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Terrain {
    pub kind: TerrainKind,
    pub seed: u64,
    pub amplitude: f64,
    pub cell_size: f64,
    rows: usize,
    cols: usize,
    origin_x: f64,
    origin_y: f64,
    heights: Vec<f64>,
}

/// Builds a terrain. Flat terrain ignores `seed` and `amplitude`.
pub fn make_terrain(
    kind: TerrainKind,
    seed: u64,
    amplitude: f64,
    cell_size: f64,
) -> Result<Terrain> {
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(Error::Input(format!(
            "cell_size must be positive, got {cell_size}"
        )));
    }
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::Input(format!(
            "amplitude must be non-negative, got {amplitude}"
        )));
    }
    match kind {
        TerrainKind::Flat => Ok(Terrain::flat(cell_size)),
        TerrainKind::Rough => {
            let cols = ((GRID_X_MAX - GRID_X_MIN) / cell_size).ceil() as usize + 1;
            let rows = (2.0 * GRID_HALF_WIDTH / cell_size).ceil() as usize + 1;
            let mut rng =
                crate::seed::rng(crate::seed::derive(seed, crate::seed::stream::TERRAIN, 0));
            let heights = (0..rows * cols)
                .map(|_| {
                    if amplitude > 0.0 {
                        rng.random_range(-amplitude..=amplitude)
                    } else {
                        0.0
                    }
                })
                .collect();
            Ok(Terrain {
                kind,
                seed,
                amplitude,
                cell_size,
                rows,
                cols,
                origin_x: GRID_X_MIN,
                origin_y: -GRID_HALF_WIDTH,
                heights,
            })
        }
    }
}

impl Terrain {
    pub fn flat(cell_size: f64) -> Self {
        Terrain {
            kind: TerrainKind::Flat,
            seed: 0,
            amplitude: 0.0,
            cell_size,
            rows: 0,
            cols: 0,
            origin_x: 0.0,
            origin_y: 0.0,
            heights: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    /// Ground elevation at world `(x, y)`.
    pub fn height(&self, x: f64, y: f64) -> f64 {
        if self.kind == TerrainKind::Flat || self.heights.is_empty() {
            return 0.0;
        }
        let u = ((x - self.origin_x) / self.cell_size).clamp(0.0, (self.cols - 1) as f64);
        let v = ((y - self.origin_y) / self.cell_size).clamp(0.0, (self.rows - 1) as f64);
        let c0 = (u.floor() as usize).min(self.cols.saturating_sub(2));
        let r0 = (v.floor() as usize).min(self.rows.saturating_sub(2));
        let c1 = (c0 + 1).min(self.cols - 1);
        let r1 = (r0 + 1).min(self.rows - 1);
        let fu = u - c0 as f64;
        let fv = v - r0 as f64;
        let at = |r: usize, c: usize| self.heights[r * self.cols + c];
        let h0 = at(r0, c0) * (1.0 - fu) + at(r0, c1) * fu;
        let h1 = at(r1, c0) * (1.0 - fu) + at(r1, c1) * fu;
        (h0 * (1.0 - fv) + h1 * fv).clamp(-self.amplitude, self.amplitude)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "kind {}", self.kind);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "amplitude {}", self.amplitude);
        let _ = writeln!(out, "cell_size {}", self.cell_size);
        let _ = writeln!(out, "rows {}", self.rows);
        let _ = writeln!(out, "cols {}", self.cols);
        let _ = writeln!(out, "origin_x {}", self.origin_x);
        let _ = writeln!(out, "origin_y {}", self.origin_y);
        for r in 0..self.rows {
            let row = &self.heights[r * self.cols..(r + 1) * self.cols];
            let line: Vec<String> = row.iter().map(|h| h.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> std::result::Result<Self, LoadError> {
        let malformed = |m: String| LoadError::Malformed(m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut header = |key: &str| -> std::result::Result<String, LoadError> {
            let line = lines
                .next()
                .ok_or_else(|| malformed(format!("missing header `{key}`")))?;
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(k), Some(v), None) if k == key => Ok(v.to_string()),
                _ => Err(malformed(format!(
                    "expected header `{key} <value>`, got `{line}`"
                ))),
            }
        };
        fn num<T: FromStr>(key: &str, v: String) -> std::result::Result<T, LoadError> {
            v.parse()
                .map_err(|_| LoadError::Malformed(format!("bad value `{v}` for `{key}`")))
        }
        let kind = header("kind")?
            .parse::<TerrainKind>()
            .map_err(|e| malformed(e.to_string()))?;
        let seed: u64 = num("seed", header("seed")?)?;
        let amplitude: f64 = num("amplitude", header("amplitude")?)?;
        let cell_size: f64 = num("cell_size", header("cell_size")?)?;
        let rows: usize = num("rows", header("rows")?)?;
        let cols: usize = num("cols", header("cols")?)?;
        let origin_x: f64 = num("origin_x", header("origin_x")?)?;
        let origin_y: f64 = num("origin_y", header("origin_y")?)?;
        if !(cell_size > 0.0) || !(amplitude >= 0.0) {
            return Err(malformed(
                "cell_size must be positive and amplitude non-negative".into(),
            ));
        }
        if kind == TerrainKind::Rough && (rows < 2 || cols < 2) {
            return Err(malformed("rough terrain needs at least a 2x2 grid".into()));
        }
        let mut heights = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| malformed(format!("missing height row {r}")))?;
            let before = heights.len();
            for tok in line.split_whitespace() {
                heights.push(num::<f64>("height", tok.to_string())?);
            }
            if heights.len() - before != cols {
                return Err(malformed(format!(
                    "row {r} has {} heights, expected {cols}",
                    heights.len() - before
                )));
            }
        }
        if lines.next().is_some() {
            return Err(malformed("trailing data after height rows".into()));
        }
        Ok(Terrain {
            kind,
            seed,
            amplitude,
            cell_size,
            rows,
            cols,
            origin_x,
            origin_y,
            heights,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|cause| Error::load(path, cause))
    }
}

//! Uniform grids, sampled scalar/vector fields and the flat binary field
//! format (one JSON header line followed by little-endian `f64` data).

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub type Point = [f64; 2];

#[inline]
pub fn norm(v: Point) -> f64 {
    v[0].hypot(v[1])
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn perp(a: Point) -> Point {
    [-a[1], a[0]]
}

/// Uniform square-cell grid. Node `(i, j)` sits at `origin + h (i, j)`.
/// Periodic grids wrap with period `n h` in each direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub origin: Point,
    pub h: f64,
    pub periodic: bool,
}

impl Grid2 {
    /// The torus `[0, 2π)²` with `n` nodes per side.
    pub fn torus(n: usize) -> Self {
        Self {
            nx: n,
            ny: n,
            origin: [0.0, 0.0],
            h: 2.0 * PI / n as f64,
            periodic: true,
        }
    }

    /// Periodic square of side `side` with `n` nodes per side.
    pub fn periodic_square(n: usize, side: f64) -> Self {
        Self {
            nx: n,
            ny: n,
            origin: [0.0, 0.0],
            h: side / n as f64,
            periodic: true,
        }
    }

    /// Non-periodic `n × n` window of half-width `half_width` with `center`
    /// exactly on node `(n/2, n/2)`.
    pub fn window(center: Point, half_width: f64, n: usize) -> Self {
        let h = 2.0 * half_width / n as f64;
        let c = (n / 2) as f64;
        Self {
            nx: n + 1,
            ny: n + 1,
            origin: [center[0] - c * h, center[1] - c * h],
            h,
            periodic: false,
        }
    }

    /// Like [`Grid2::window`] but with `center` at a cell corner, so no node
    /// coincides with it.
    pub fn window_staggered(center: Point, half_width: f64, n: usize) -> Self {
        let mut g = Self::window(center, half_width, n);
        g.origin = [g.origin[0] + 0.5 * g.h, g.origin[1] + 0.5 * g.h];
        g.nx -= 1;
        g.ny -= 1;
        g
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn extent(&self) -> [f64; 2] {
        [self.nx as f64 * self.h, self.ny as f64 * self.h]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Point {
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    #[inline]
    pub fn node_of(&self, k: usize) -> Point {
        self.node(k % self.nx, k / self.nx)
    }

    /// Displacement `a − b`, using the minimal image on periodic grids.
    #[inline]
    pub fn displacement(&self, a: Point, b: Point) -> Point {
        let mut d = sub(a, b);
        if self.periodic {
            let [lx, ly] = self.extent();
            d[0] -= lx * (d[0] / lx).round();
            d[1] -= ly * (d[1] / ly).round();
        }
        d
    }

    #[inline]
    pub fn distance(&self, a: Point, b: Point) -> f64 {
        norm(self.displacement(a, b))
    }

    /// Nearest node to `p` (wrapped on periodic grids, clamped otherwise).
    pub fn nearest_node(&self, p: Point) -> (usize, usize) {
        let fi = ((p[0] - self.origin[0]) / self.h).round();
        let fj = ((p[1] - self.origin[1]) / self.h).round();
        if self.periodic {
            (fi.rem_euclid(self.nx as f64) as usize, fj.rem_euclid(self.ny as f64) as usize)
        } else {
            (
                fi.clamp(0.0, (self.nx - 1) as f64) as usize,
                fj.clamp(0.0, (self.ny - 1) as f64) as usize,
            )
        }
    }

    /// Whether `p` lies inside the rectangle covered by the grid cells
    /// (nodes padded by half a cell; always true when periodic).
    pub fn contains(&self, p: Point) -> bool {
        if self.periodic {
            return true;
        }
        let pad = 0.5 * self.h * (1.0 + 1e-9);
        let [lx, ly] = [(self.nx - 1) as f64 * self.h, (self.ny - 1) as f64 * self.h];
        let (dx, dy) = (p[0] - self.origin[0], p[1] - self.origin[1]);
        dx >= -pad && dy >= -pad && dx <= lx + pad && dy <= ly + pad
    }

    /// Wraps a point into the fundamental cell of a periodic grid.
    pub fn wrap(&self, p: Point) -> Point {
        if !self.periodic {
            return p;
        }
        let [lx, ly] = self.extent();
        [
            self.origin[0] + (p[0] - self.origin[0]).rem_euclid(lx),
            self.origin[1] + (p[1] - self.origin[1]).rem_euclid(ly),
        ]
    }
}

/// Scalar samples on a [`Grid2`], stored row-major (`x` fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    pub grid: Grid2,
    pub data: Vec<f64>,
}

impl ScalarField2D {
    pub fn zeros(grid: Grid2) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn<F: Fn(Point) -> f64 + Sync>(grid: Grid2, f: F) -> Self {
        let data = (0..grid.len()).into_par_iter().map(|k| f(grid.node_of(k))).collect();
        Self { grid, data }
    }

    pub fn from_data(grid: Grid2, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return domain(format!("field data has {} values, grid needs {}", data.len(), grid.len()));
        }
        Ok(Self { grid, data })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        Self {
            grid: self.grid,
            data: self.data.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        if self.grid != other.grid {
            return domain("fields live on different grids");
        }
        Ok(Self {
            grid: self.grid,
            data: self
                .data
                .par_iter()
                .zip(other.data.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Midpoint-rule mean over the grid.
    pub fn mean(&self) -> f64 {
        deterministic_sum(&self.data) / self.data.len() as f64
    }

    /// Periodic cubic-convolution (Catmull-Rom) interpolation.
    pub fn sample_cubic(&self, p: Point) -> f64 {
        cubic_sample(&self.grid, &self.data, p)
    }
}

/// Chunked summation with a fixed chunk size so parallel and serial runs
/// produce the same bits.
pub fn deterministic_sum(v: &[f64]) -> f64 {
    const CHUNK: usize = 4096;
    let partials: Vec<f64> = v.par_chunks(CHUNK).map(|c| c.iter().sum::<f64>()).collect();
    partials.iter().sum()
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

pub(crate) fn cubic_sample(grid: &Grid2, data: &[f64], p: Point) -> f64 {
    let fx = (p[0] - grid.origin[0]) / grid.h;
    let fy = (p[1] - grid.origin[1]) / grid.h;
    let (ix, iy) = (fx.floor(), fy.floor());
    let wx = catmull_rom(fx - ix);
    let wy = catmull_rom(fy - iy);
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let idx = |a: isize, n: isize| -> usize {
        if grid.periodic {
            a.rem_euclid(n) as usize
        } else {
            a.clamp(0, n - 1) as usize
        }
    };
    let mut acc = 0.0;
    for (b, wyb) in wy.iter().enumerate() {
        let j = idx(iy as isize + b as isize - 1, ny);
        let mut row = 0.0;
        for (a, wxa) in wx.iter().enumerate() {
            let i = idx(ix as isize + a as isize - 1, nx);
            row += wxa * data[j * grid.nx + i];
        }
        acc += wyb * row;
    }
    acc
}

/// Two-component field on a [`Grid2`].
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2D {
    pub grid: Grid2,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl VectorField2D {
    pub fn from_fn<F: Fn(Point) -> Point + Sync>(grid: Grid2, f: F) -> Self {
        let (u, v): (Vec<f64>, Vec<f64>) = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let w = f(grid.node_of(k));
                (w[0], w[1])
            })
            .unzip();
        Self { grid, u, v }
    }

    pub fn sample_cubic(&self, p: Point) -> Point {
        [cubic_sample(&self.grid, &self.u, p), cubic_sample(&self.grid, &self.v, p)]
    }

    pub fn max_speed(&self) -> f64 {
        self.u.iter().zip(&self.v).fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }
}

/// Header of the flat binary field format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format: String,
    pub name: String,
    pub nx: usize,
    pub ny: usize,
    pub origin: Point,
    pub h: f64,
    pub periodic: bool,
    pub time: f64,
    pub components: usize,
}

pub const FIELD_FORMAT: &str = "osgood-field-v1";

fn encode_field(header: &FieldHeader, comps: &[&[f64]]) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec(header)?;
    out.push(b'\n');
    for c in comps {
        for v in c.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn read_field(path: &Path) -> Result<(FieldHeader, Vec<Vec<f64>>)> {
    let mut rd = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    rd.read_line(&mut line)?;
    let header: FieldHeader = serde_json::from_str(line.trim_end())?;
    if header.format != FIELD_FORMAT {
        return Err(Error::Parse(format!("unknown field format {:?}", header.format)));
    }
    let n = header.nx * header.ny;
    let mut comps = Vec::with_capacity(header.components);
    let mut buf = [0u8; 8];
    for _ in 0..header.components {
        let mut c = Vec::with_capacity(n);
        for _ in 0..n {
            rd.read_exact(&mut buf)?;
            c.push(f64::from_le_bytes(buf));
        }
        comps.push(c);
    }
    let mut rest = Vec::new();
    rd.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Parse(format!("{} trailing bytes after field data", rest.len())));
    }
    Ok((header, comps))
}

impl ScalarField2D {
    /// Flat binary layout: one JSON header line, then little-endian `f64`
    /// components in row-major order.
    pub fn encode(&self, name: &str, time: f64) -> Result<Vec<u8>> {
        let g = self.grid;
        let header = FieldHeader {
            format: FIELD_FORMAT.into(),
            name: name.into(),
            nx: g.nx,
            ny: g.ny,
            origin: g.origin,
            h: g.h,
            periodic: g.periodic,
            time,
            components: 1,
        };
        encode_field(&header, &[&self.data])
    }

    pub fn write(&self, path: &Path, name: &str, time: f64) -> Result<()> {
        std::fs::write(path, self.encode(name, time)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<(FieldHeader, Self)> {
        let (header, mut comps) = read_field(path)?;
        if header.components != 1 {
            return Err(Error::Parse("expected a scalar field".into()));
        }
        let grid = Grid2 {
            nx: header.nx,
            ny: header.ny,
            origin: header.origin,
            h: header.h,
            periodic: header.periodic,
        };
        let data = comps.pop().expect("one component");
        Ok((header, Self { grid, data }))
    }
}

impl VectorField2D {
    /// Flat binary layout: one JSON header line, then little-endian `f64`
    /// components in row-major order.
    pub fn encode(&self, name: &str, time: f64) -> Result<Vec<u8>> {
        let g = self.grid;
        let header = FieldHeader {
            format: FIELD_FORMAT.into(),
            name: name.into(),
            nx: g.nx,
            ny: g.ny,
            origin: g.origin,
            h: g.h,
            periodic: g.periodic,
            time,
            components: 2,
        };
        encode_field(&header, &[&self.u, &self.v])
    }

    pub fn write(&self, path: &Path, name: &str, time: f64) -> Result<()> {
        std::fs::write(path, self.encode(name, time)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_centers_node() {
        let g = Grid2::window([0.3, -0.2], 0.1, 64);
        let (i, j) = g.nearest_node([0.3, -0.2]);
        let p = g.node(i, j);
        assert!((p[0] - 0.3).abs() < 1e-15 && (p[1] + 0.2).abs() < 1e-15);
        let s = Grid2::window_staggered([0.0, 0.0], 0.1, 64);
        assert!(s.data_free_of([0.0, 0.0]));
    }

    impl Grid2 {
        fn data_free_of(&self, p: Point) -> bool {
            (0..self.len()).all(|k| norm(sub(self.node_of(k), p)) > 0.1 * self.h)
        }
    }

    #[test]
    fn periodic_displacement_uses_min_image() {
        let g = Grid2::torus(16);
        let d = g.displacement([0.1, 6.2], [6.2, 0.1]);
        assert!((d[0] - (0.1 - 6.2 + 2.0 * PI)).abs() < 1e-12);
        assert!((d[1] - (6.2 - 0.1 - 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn cubic_sampling_is_exact_at_nodes_and_accurate_between() {
        let g = Grid2::torus(64);
        let f = ScalarField2D::from_fn(g, |p| p[0].sin() * (2.0 * p[1]).cos());
        assert!((f.sample_cubic(g.node(5, 9)) - f.at(5, 9)).abs() < 1e-14);
        let p = [1.2345, 4.321];
        assert!((f.sample_cubic(p) - p[0].sin() * (2.0 * p[1]).cos()).abs() < 5e-4);
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        let f = ScalarField2D::from_fn(Grid2::torus(8), |p| p[0] - 2.0 * p[1]);
        f.write(&path, "theta", 0.5).unwrap();
        let (h, back) = ScalarField2D::read(&path).unwrap();
        assert_eq!(h.time, 0.5);
        assert_eq!(h.name, "theta");
        assert_eq!(back, f);
        let bytes = std::fs::read(&path).unwrap();
        let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(bytes.len() - nl - 1, 64 * 8);
    }
}

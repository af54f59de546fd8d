//! Uniform radial mesh on `[0, R]` and profiles sampled on it.
//!
//! Unknowns live on the interior nodes `r_i = i h`, `i = 1..=n`, with
//! `h = R / (n + 1)`. The end points `r = 0` and `r = R` carry the Dirichlet
//! value zero and are never stored. Integrals are taken in the measure
//! `r dr` with trapezoid weights `w_i = h r_i`; the half cell touching `r = R`
//! has weight `h R / 2` and only matters for sampled functions that do not
//! vanish there.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Smallest admissible number of interior nodes.
pub const MIN_NODES: usize = 8;

#[derive(Clone)]
pub struct RadialGrid {
    radius: f64,
    h: f64,
    nodes: Arc<[f64]>,
    weights: Arc<[f64]>,
}

impl fmt::Debug for RadialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialGrid")
            .field("radius", &self.radius)
            .field("n", &self.n())
            .finish()
    }
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.radius == other.radius && self.n() == other.n()
    }
}

/// Builds the uniform grid with `n` interior nodes on `[0, radius]`.
pub fn make_grid(radius: f64, n: usize) -> Result<RadialGrid> {
    RadialGrid::new(radius, n)
}

impl RadialGrid {
    pub fn new(radius: f64, n: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "domain radius must be positive, got {radius}"
            )));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidArgument(format!(
                "need at least {MIN_NODES} interior nodes, got {n}"
            )));
        }
        let h = radius / (n + 1) as f64;
        let nodes: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
        let weights: Vec<f64> = nodes.iter().map(|&r| h * r).collect();
        Ok(Self {
            radius,
            h,
            nodes: nodes.into(),
            weights: weights.into(),
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of interior nodes.
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Interior quadrature weights for the measure `r dr`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of the half cell at `r = R`.
    pub fn outer_weight(&self) -> f64 {
        0.5 * self.h * self.radius
    }

    /// Sum of all weights; equals `R^2 / 2` up to rounding.
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.outer_weight()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                found: len,
            });
        }
        Ok(())
    }

    /// `sum_i w_i f(r_i)`, the quadrature of `int_0^R f(r) r dr` for samples
    /// that vanish at `r = R`.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values.len())?;
        Ok(self.dot(values, &[]))
    }

    /// Trapezoid quadrature of `int_0^R f(r) r dr` for a function that may be
    /// nonzero at the outer boundary.
    pub fn integrate_fn<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let interior: f64 = self
            .nodes
            .iter()
            .zip(self.weights.iter())
            .map(|(&r, &w)| w * f(r))
            .sum();
        interior + self.outer_weight() * f(self.radius)
    }

    /// Weighted inner product `sum_i w_i a_i b_i`; an empty `b` means `b = 1`.
    pub(crate) fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        if b.is_empty() {
            a.iter().zip(self.weights.iter()).map(|(x, w)| w * x).sum()
        } else {
            a.iter()
                .zip(b)
                .zip(self.weights.iter())
                .map(|((x, y), w)| w * x * y)
                .sum()
        }
    }

    /// Central first derivative, using the zero boundary values as the
    /// outer neighbours.
    pub fn ddr(&self, a: &[f64]) -> Result<Vec<f64>> {
        self.check_len(a.len())?;
        let n = a.len();
        let inv = 0.5 / self.h;
        Ok((0..n)
            .map(|i| {
                let left = if i == 0 { 0.0 } else { a[i - 1] };
                let right = if i + 1 == n { 0.0 } else { a[i + 1] };
                (right - left) * inv
            })
            .collect())
    }

    /// Pointwise `a(r_i) / r_i^2`.
    pub fn weighted_div_r2(&self, a: &[f64]) -> Result<Vec<f64>> {
        self.check_len(a.len())?;
        Ok(a.iter()
            .zip(self.nodes.iter())
            .map(|(v, r)| v / (r * r))
            .collect())
    }

    /// Discrete `int_0^R r a_r^2 dr` built from one-sided differences on the
    /// cells `[r_j, r_{j+1}]`, `j = 0..=n`, with zero end values. Its
    /// gradient in the weighted inner product is exactly `-laplacian(a)`.
    pub fn dirichlet_form(&self, a: &[f64]) -> f64 {
        let n = a.len();
        let h = self.h;
        let mut sum = 0.0;
        let mut prev = 0.0;
        for j in 0..=n {
            let next = if j == n { 0.0 } else { a[j] };
            let d = next - prev;
            sum += (j as f64 + 0.5) * h * d * d;
            prev = next;
        }
        sum / h
    }

    /// Bilinear form associated with [`dirichlet_form`](Self::dirichlet_form).
    pub fn dirichlet_pair(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = a.len();
        let h = self.h;
        let mut sum = 0.0;
        let (mut pa, mut pb) = (0.0, 0.0);
        for j in 0..=n {
            let (na, nb) = if j == n { (0.0, 0.0) } else { (a[j], b[j]) };
            sum += (j as f64 + 0.5) * h * (na - pa) * (nb - pb);
            pa = na;
            pb = nb;
        }
        sum / h
    }

    /// Central-difference radial Laplacian `a'' + a'/r` at interior nodes.
    pub fn laplacian(&self, a: &[f64]) -> Vec<f64> {
        let n = a.len();
        let mut out = vec![0.0; n];
        self.laplacian_into(a, &mut out);
        out
    }

    pub(crate) fn laplacian_into(&self, a: &[f64], out: &mut [f64]) {
        let n = a.len();
        for i in 0..n {
            let (lo, di, up) = self.laplacian_stencil(i);
            let left = if i == 0 { 0.0 } else { a[i - 1] };
            let right = if i + 1 == n { 0.0 } else { a[i + 1] };
            out[i] = lo * left + di * a[i] + up * right;
        }
    }

    /// Coefficients `(lower, diagonal, upper)` of the Laplacian row at node `i`.
    pub fn laplacian_stencil(&self, i: usize) -> (f64, f64, f64) {
        let h = self.h;
        let r = self.nodes[i];
        let inv_h2 = 1.0 / (h * h);
        let adv = 0.5 / (h * r);
        (inv_h2 - adv, -2.0 * inv_h2, inv_h2 + adv)
    }
}

/// A real amplitude sampled on the interior nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(grid: &RadialGrid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &RadialGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.n()],
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: &RadialGrid, f: F) -> Result<Self> {
        Self::new(grid, grid.nodes().iter().map(|&r| f(r)).collect())
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `int_0^R A^2 r dr`.
    pub fn mass(&self) -> f64 {
        self.grid.dot(&self.values, &self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn from_raw(grid: &RadialGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.n(), values.len());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// Writes `r,value` rows, boundary rows included.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,value")?;
        writeln!(out, "{:.16e},{:.16e}", 0.0, 0.0)?;
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            writeln!(out, "{r:.16e},{v:.16e}")?;
        }
        writeln!(out, "{:.16e},{:.16e}", self.grid.radius(), 0.0)?;
        Ok(())
    }

    /// Reads the format produced by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let table = read_table(input, &["r", "value"])?;
        let (grid, mut cols) = grid_from_table(table)?;
        Profile::new(&grid, cols.remove(0))
    }
}

/// Parsed CSV with a fixed header: the radius column followed by value columns.
pub(crate) struct Table {
    pub radii: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
}

pub(crate) fn read_table<R: BufRead>(input: R, header: &[&str]) -> Result<Table> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))??;
    let got: Vec<&str> = first.trim().split(',').map(str::trim).collect();
    if got != header {
        return Err(Error::Parse(format!(
            "expected header `{}`, found `{}`",
            header.join(","),
            first.trim()
        )));
    }
    let mut radii = Vec::new();
    let mut columns = vec![Vec::new(); header.len() - 1];
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::Parse(format!(
                "line {}: expected {} fields, found {}",
                lineno + 2,
                header.len(),
                fields.len()
            )));
        }
        let mut parsed = fields.iter().map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))
        });
        radii.push(parsed.next().unwrap()?);
        for col in columns.iter_mut() {
            col.push(parsed.next().unwrap()?);
        }
    }
    Ok(Table { radii, columns })
}

/// Recovers the grid from the radius column and strips the boundary rows.
pub(crate) fn grid_from_table(table: Table) -> Result<(RadialGrid, Vec<Vec<f64>>)> {
    let rows = table.radii.len();
    if rows < MIN_NODES + 2 {
        return Err(Error::Parse(format!("too few rows ({rows})")));
    }
    let radius = table.radii[rows - 1];
    let grid = RadialGrid::new(radius, rows - 2)?;
    if table.radii[0] != 0.0 {
        return Err(Error::Parse("first row must be r = 0".into()));
    }
    let tol = 1e-12 * radius;
    for (r, node) in table.radii[1..rows - 1].iter().zip(grid.nodes()) {
        if (r - node).abs() > tol {
            return Err(Error::Parse(format!(
                "radius {r} does not match the uniform node {node}"
            )));
        }
    }
    let columns = table
        .columns
        .into_iter()
        .map(|c| c[1..rows - 1].to_vec())
        .collect();
    Ok((grid, columns))
}

//! Screened radial operators `-c Δ + V(r)` used to precondition the descent
//! directions of both solvers. With `c > 0` and `V > 0` the tridiagonal
//! matrix is strictly diagonally dominant and symmetric in the weighted
//! inner product.

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::linalg::Tridiagonal;

#[derive(Clone, Debug)]
pub struct ScreenedOperator {
    factor: Tridiagonal,
}

impl ScreenedOperator {
    /// `-stiffness * Δ + angular / r^2 + shift`.
    pub fn new(grid: &RadialGrid, stiffness: f64, angular: f64, shift: f64) -> Result<Self> {
        if !(stiffness > 0.0 && angular >= 0.0 && shift > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "screened operator needs positive stiffness and shift (got {stiffness}, {shift})"
            )));
        }
        let n = grid.n();
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for (i, r) in grid.nodes().iter().enumerate() {
            let (lo, di, up) = grid.laplacian_stencil(i);
            lower[i] = -stiffness * lo;
            diag[i] = -stiffness * di + angular / (r * r) + shift;
            upper[i] = -stiffness * up;
        }
        Ok(Self {
            factor: Tridiagonal::factor(&lower, &diag, &upper)?,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.factor.solve(rhs)
    }
}

/// One screened operator per field component.
#[derive(Clone, Debug)]
pub struct PairPreconditioner {
    pub first: ScreenedOperator,
    pub second: ScreenedOperator,
}

impl PairPreconditioner {
    /// Quadratic part of the action with the mass terms replaced by `shift`:
    /// `(-Δ + l^2/r^2 + shift, -Δ/2 + 2 l^2/r^2 + shift)`.
    pub fn for_action_i(grid: &RadialGrid, l_sq: f64, shift: f64) -> Result<Self> {
        Ok(Self {
            first: ScreenedOperator::new(grid, 1.0, l_sq, shift)?,
            second: ScreenedOperator::new(grid, 0.5, 2.0 * l_sq, shift)?,
        })
    }

    /// Hessian of the quadratic part of the indefinite action:
    /// `(-Δ + l^2/r^2 + 2 kappa, -Δ/2 + 2 l^2/r^2 + 2 (2 kappa + beta))`.
    pub fn for_action_j(grid: &RadialGrid, l_sq: f64, kappa: f64, sh_mass: f64) -> Result<Self> {
        Ok(Self {
            first: ScreenedOperator::new(grid, 1.0, l_sq, 2.0 * kappa)?,
            second: ScreenedOperator::new(grid, 0.5, 2.0 * l_sq, 2.0 * sh_mass)?,
        })
    }

    pub fn apply_inverse(&self, g1: &[f64], g2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.first.solve(g1), self.second.solve(g2))
    }
}

//! CSV exchange of solution pairs: `r,a1,a2` with the boundary rows
//! `r = 0` and `r = R` included.

use std::io::{BufRead, Write};

use crate::error::Result;
use crate::functionals::{PhysicsParams, VortexPair};
use crate::grid::{grid_from_table, read_table, Profile};

pub fn write_pair_csv<W: Write>(pair: &VortexPair, mut out: W) -> Result<()> {
    writeln!(out, "r,a1,a2")?;
    writeln!(out, "{:.16e},{:.16e},{:.16e}", 0.0, 0.0, 0.0)?;
    let g = pair.grid();
    for ((r, u), v) in g.nodes().iter().zip(pair.a1.values()).zip(pair.a2.values()) {
        writeln!(out, "{r:.16e},{u:.16e},{v:.16e}")?;
    }
    writeln!(out, "{:.16e},{:.16e},{:.16e}", g.radius(), 0.0, 0.0)?;
    Ok(())
}

/// Reads a pair; the grid is reconstructed from the radius column and
/// `params.radius` is overwritten with it.
pub fn read_pair_csv<R: BufRead>(input: R, params: PhysicsParams) -> Result<VortexPair> {
    let table = read_table(input, &["r", "a1", "a2"])?;
    let (grid, mut cols) = grid_from_table(table)?;
    let a2 = Profile::new(&grid, cols.pop().unwrap())?;
    let a1 = Profile::new(&grid, cols.pop().unwrap())?;
    let params = PhysicsParams::new(params.kappa, params.beta, params.l, grid.radius())?;
    VortexPair::new(a1, a2, params)
}

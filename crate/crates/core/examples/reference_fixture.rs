//! Regenerates the reference-model fixture used by `torus-mfg verify`:
//!
//! ```text
//! cargo run --release -p torus-mfg --example reference_fixture -- crates/cli/fixtures/reference
//! ```

use std::path::PathBuf;

use torus_mfg::io::{export_field, export_flux, ExportFormat};
use torus_mfg::solver::solve_time_dependent;
use torus_mfg::{Grid, ModelSpec, SolverOptions};

fn main() -> torus_mfg::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixture".into()));
    std::fs::create_dir_all(&dir)?;
    let grid = Grid::new(1, 64, 64, 1.0)?;
    let model = ModelSpec::reference(&grid);
    let opts = SolverOptions {
        tol_gap: 1e-6,
        tol_feas: 1e-6,
        ..SolverOptions::default()
    };
    let bundle = solve_time_dependent(&model, &grid, &opts)?.ensure_converged()?;
    export_field(&bundle.phi, &dir.join("phi.bin"), ExportFormat::Binary)?;
    export_field(&bundle.m, &dir.join("m.bin"), ExportFormat::Binary)?;
    export_flux(&bundle.w, &dir.join("w.bin"), ExportFormat::Binary)?;
    let last = bundle.last();
    println!(
        "iterations {} relative gap {:e} feasibility {:e}",
        bundle.iterations, last.relative_gap, last.feasibility
    );
    Ok(())
}

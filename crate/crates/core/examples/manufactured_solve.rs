//! Coupled solve of a problem with known solution; reconstructs initial
//! data from the result and evaluates the constraint residuals.

use conformal_drift::conformal::{constraint_residual, reconstruct_initial_data};
use conformal_drift::driftsystem::{coupled_solve, reference_problem, SolveOptions};
use conformal_drift::fieldcalc::{ScalarField, VectorField};

fn main() -> conformal_drift::Result<()> {
    let (sys, us, ws) = reference_problem(3, 24)?;
    let g = sys.grid().clone();
    let opts = SolveOptions { enforce_gates: false, ..SolveOptions::default() };
    let s = coupled_solve(&sys, &ScalarField::constant(g.clone(), 1.0), &VectorField::zeros(g), &opts)?;
    println!("converged {} after {} outer iterations", s.report.converged, s.report.iterations);
    println!("|u − u*| = {:.2e}, |W − W*| = {:.2e}", s.u.sub(&us)?.sup(), s.w.sub(&ws)?.sup());
    let data = reconstruct_initial_data(&s.u, &s.w, &sys.physical)?;
    println!("constraint residual {:.2e}", constraint_residual(&data, &sys.physical.potential)?.sup());
    s.report.write_trace_csv(std::io::stdout().lock())?;
    Ok(())
}

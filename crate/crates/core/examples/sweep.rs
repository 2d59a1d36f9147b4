use conformal_drift::diagnostics::{stability_sweep, SweepPlan};

fn main() -> conformal_drift::Result<()> {
    let plan = SweepPlan { m: 16, ..SweepPlan::default() };
    let r = stability_sweep(&plan)?;
    r.write_csv(std::io::stdout().lock())?;
    println!("verdict {} (norm ratio {:.4})", r.verdict, r.norm_ratio);
    Ok(())
}

//! Parses a run configuration and dispatches a subcommand, as the binary does.

use conformal_drift::cli::{dispatch, parse_config_str, Command};

fn main() -> conformal_drift::Result<()> {
    let out = std::env::temp_dir().join("conformal-drift-example");
    let mut cfg = parse_config_str("n = 4\ncommand = \"pohozaev\"\n[pohozaev]\nnr = 48\n")?;
    cfg.out = out.clone();
    let o = dispatch(&cfg, cfg.command.unwrap_or(Command::Pohozaev))?;
    for c in &o.checks {
        println!("{} {}: {:.3e} (tol {:.1e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    println!("artifacts in {}", out.display());
    Ok(())
}

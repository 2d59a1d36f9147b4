use conformal_drift::bubbles::{cgs_radial_oracle, oracle_error};

fn main() -> conformal_drift::Result<()> {
    for n in 3..=5 {
        let base = (n * (n - 2)) as f64;
        for f0 in [base, 2.0 * base] {
            for lambda in [1.0, 2.0] {
                println!("n = {n}, f0 = {f0:>4}, λ = {lambda}: sup error {:.2e}", oracle_error(n, f0, lambda, 10.0, 997)?);
            }
        }
    }
    let p = cgs_radial_oracle(3, 3.0, 1.0, 10.0)?;
    println!("ODE steps for n = 3: {}, w(10) = {:.6e}", p.steps, p.eval(10.0)?.0);
    Ok(())
}

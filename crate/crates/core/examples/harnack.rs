use conformal_drift::bubbles::BubbleParams;
use conformal_drift::diagnostics::harnack_quotient_eval;

fn main() -> conformal_drift::Result<()> {
    for n in 3..=5 {
        let b = BubbleParams::standard(n, (n * (n - 2)) as f64).with_mu(1e-4).b_profile();
        let q = harnack_quotient_eval(&b, &vec![0.0; n], 0.05)?;
        println!("n = {n}: sup/inf {:.3} (36^(n-2) = {}), C2 {:.3}, consistent {}", q.sup_inf, 36f64.powi(n as i32 - 2), q.c2, q.consistent);
    }
    Ok(())
}

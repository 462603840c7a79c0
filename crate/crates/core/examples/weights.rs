//! Weights of the double shift x1*x2 v_k = w_k v_{k+2}.

use qcpline::qcp::{measure_decomposition, Decomposition, TruncationContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = TruncationContext::reference();
    let r = measure_decomposition(&Decomposition::run(&ctx, 24)?)?;
    println!("  k   formula             measured            leakage");
    for (row, leak) in r.weights.iter().zip(&r.leakage) {
        println!("{:>3}   {:.15}   {:.15}   {:.1e}", row.k, row.formula, row.measured, leak);
    }
    Ok(())
}

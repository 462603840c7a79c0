//! Complement of the v-basis inside the trusted block and the Wold summary of x~1*x~2.

use qcpline::qcp::{h0_probe, measure_decomposition, Decomposition, TruncationContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = TruncationContext::reference();
    let d = Decomposition::run(&ctx, 40)?;
    let probe = h0_probe(&ctx, &d.basis, &d.x1s_x1)?;
    println!("complement dimension {}", probe.complement_dim);
    println!("max |<u, (x1*x1 - c) u>| = {:?}", probe.max_deviation);
    let wold = measure_decomposition(&d)?.wold;
    println!("wandering dimension {:.12}", wold.wandering_dim);
    println!("chain capacity {}, unreached {}", wold.chain_capacity, wold.unitary_dim_estimate);
    Ok(())
}

//! Toeplitz symbols on H1 and H2, the pullback condition and winding indices.

use qcpline::pullback::{pullback_check, symbol_estimate, winding_index, Chain, SYMBOL_TOL};
use qcpline::qcp::{Decomposition, TruncationContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = Decomposition::run(&TruncationContext::reference(), 40)?;
    let ops = [("x1~*x2~", &d.shift), ("x1*x1", &d.x1s_x1), ("x2*x2", &d.x2s_x2)];
    let report = pullback_check(&ops, &d.basis, 2, SYMBOL_TOL)?;
    for e in &report.entries {
        println!("{:<8} H1 {:?}", e.operator, e.h1.coeffs.iter().map(|(k, z)| (*k, z.re)).collect::<Vec<_>>());
        println!("{:<8} H2 {:?}  diff {:.1e}", "", e.h2.coeffs.iter().map(|(k, z)| (*k, z.re)).collect::<Vec<_>>(), e.max_coeff_diff);
    }
    println!("pullback: {}", report.pass);
    let amb = Chain::ambient(&d.ctx, 2);
    for (name, t) in [("x2", &d.x2), ("x1", &d.x1), ("x1*x2", &d.x1s_x2)] {
        let s = symbol_estimate(t, &amb, 2, SYMBOL_TOL)?;
        println!("index({name}) = {}", winding_index(&s, 512, SYMBOL_TOL)?);
    }
    Ok(())
}

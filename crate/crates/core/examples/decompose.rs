//! Invariant-subspace decomposition at q = 2, c = 1.

use qcpline::qcp::{measure_decomposition, Decomposition, TruncationContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = TruncationContext::reference();
    let d = Decomposition::run(&ctx, 40)?;
    let r = measure_decomposition(&d)?;
    println!("N = {}, trusted block = {}, K = {}", ctx.n, ctx.trusted(), r.k);
    println!("trace p1 = {:.15}, trace p2 = {:.15}", r.trace_p1, r.trace_p2);
    println!("gram deviation       {:.3e}", r.gram_max_dev);
    println!("eigen residual       {:.3e}", r.eigen_residual_max());
    println!("intertwining         {:.3e}", r.intertwine_residual);
    println!("x2~ isometry defect  {:.3e}", r.x2t_isometry_defect);
    println!("kernel oracle overlap {:.15}", r.kernel_overlap);
    println!("kernels: x1 {:?}, x2 {:?}", r.kernel_x1, r.kernel_x2);
    println!("\n  k   c_k                 <v_k, x1*x1 v_k>");
    for row in r.eigenvalues.iter().take(10) {
        println!("{:>3}   {:<18.15} {:.15}", row.k, row.formula, row.measured);
    }
    Ok(())
}

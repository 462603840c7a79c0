//! Polar parts of the truncated generators and the closed-form kernel vector of x1.

use num::complex::Complex64;
use qcpline::numop::{inner, polar_part};
use qcpline::qcp::{build_x_pair, kernel_residual, kernel_vector_x1, TruncationContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = TruncationContext::from_angle(2.0, 1.0, 0.4, 128, 1e-10, 32)?;
    let (x1, x2) = build_x_pair(&ctx);
    for (name, t) in [("x1", &x1), ("x2", &x2)] {
        let p = polar_part(t, ctx.tol)?;
        println!("{name}: numerical kernel dimension {}", p.kernel_dim);
        for j in 0..p.kernel_dim {
            let v = p.kernel_basis.column(j).into_owned();
            println!("  kernel vector {j}: tail norm {:.3e}", ctx.tail_norm(&v));
        }
    }
    let z = kernel_vector_x1(&ctx, ctx.n);
    let zn = &z / Complex64::new(z.norm(), 0.0);
    let p = polar_part(&x1, ctx.tol)?;
    let v = p.kernel_basis.column(0).into_owned();
    println!("|<z, ker>| = {:.15}", inner(&zn, &v).norm());
    println!("|x1 z| / |z| = {:.3e}", kernel_residual(&x1, &z));
    Ok(())
}

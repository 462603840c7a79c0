//! The circle parameter t1 only conjugates the operators by a diagonal unitary.

use num::complex::Complex64;
use qcpline::qcp::{gauge_check, TruncationContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = TruncationContext::from_angle(2.0, 1.0, 0.0, 128, 1e-10, 32)?;
    let ts: Vec<Complex64> = [0.0, 0.5, std::f64::consts::FRAC_PI_3, 2.5].iter().map(|a| Complex64::from_polar(1.0, *a)).collect();
    let r = gauge_check(&ctx, &ts)?;
    for row in &r.rows {
        println!(
            "angle {:.4}: spectrum {:.1e}, singular values {:.1e}, conjugation {:.1e} / {:.1e}",
            row.angle, row.spectrum_dev, row.singular_dev, row.x1s_x1_conjugation, row.x1s_x2_conjugation
        );
    }
    Ok(())
}

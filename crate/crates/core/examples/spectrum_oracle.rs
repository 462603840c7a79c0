//! Brute-force spectrum of a 16x16 truncation against the eigenvalue recursion.

use num::{BigInt, BigRational};
use qcpline::numop::hermitian_eig;
use qcpline::qcp::{build_x_pair, EigenSequence, TruncationContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = TruncationContext::from_angle(2.0, 1.0, 0.0, 16, 1e-10, 4)?;
    let (x1, _) = build_x_pair(&ctx);
    let eig = hermitian_eig(&(&x1.adjoint() * &x1))?;
    let seq = EigenSequence::exact(&BigRational::from_integer(BigInt::from(2)), &BigRational::from_integer(BigInt::from(1)), 6);
    for k in 1..=6 {
        let target = seq.c(k);
        let nearest = eig.eigenvalues.iter().cloned().min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs())).unwrap();
        println!("c_{k} = {} = {target:.12}, nearest eigenvalue {nearest:.12}", seq.exact_value(k).unwrap());
    }
    Ok(())
}

//! Exact identity suite and local confluence of the rewriting system.

use qcpline::ncwords::{check_local_confluence, critical_overlaps, identity_suite, nc_expand_canonical, Expansion};

fn main() {
    for which in Expansion::ALL {
        println!("{:<8} = {}", which.label(), nc_expand_canonical(which));
    }
    println!();
    let suite = identity_suite();
    for check in &suite {
        println!("[{}] {}", if check.proven { "proven" } else { "FAILED" }, check.identity);
    }
    for word in critical_overlaps() {
        println!("overlap {:?} confluent: {}", word, check_local_confluence(&word));
    }
    let proven = suite.iter().filter(|c| c.proven).count();
    println!("{proven}/{} identities proven", suite.len());
}

//! Brackets the joint spectral radius of {E, F} and checks the identities
//! that pin it to sqrt(alpha).

use takagi_levels::spectra::{char_poly_monic, jsr_bracket, named, spectral_radius, verify_jsr_identities};

fn main() -> takagi_levels::Result<()> {
    let e = named::e();
    let f = named::f();
    println!("E =\n{e}\nF =\n{f}");
    let fe = &f * &e;
    println!("FE char poly {}", char_poly_monic(&fe));
    println!("rho(FE) = {:.12}, alpha = {:.12}", spectral_radius(&fe, 1e-13)?, named::alpha());

    let set = vec![("E".to_string(), e), ("F".to_string(), f)];
    let max_len: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(12);
    let b = jsr_bracket(&set, max_len)?;
    println!("{:>4} {:>12} {:>12}", "L", "lower", "upper");
    for l in 0..b.length {
        println!("{:>4} {:>12.8} {:>12.8}", l + 1, b.lower_by_length[l], b.upper_by_length[l]);
    }
    println!("witness {} gives {:.12}; sqrt(alpha) = {:.12}", b.witness, b.lower, named::alpha().sqrt());

    let report = verify_jsr_identities();
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!("{} exact identities checked, {failed} failed", report.checks.len());
    report.ensure()
}

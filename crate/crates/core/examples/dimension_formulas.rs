//! Closed-form and numerical dimensions: Moran equations, the random Moran
//! root and the spectral radii of the tridiagonal family.

use num_rational::BigRational;
use takagi_levels::spectra::{moran_dimension, named, psi1, random_moran_dimension, rho_k, rho_k_limit_scan};

fn main() -> takagi_levels::Result<()> {
    let third = BigRational::new(1.into(), 3.into());
    let cantor = moran_dimension(&[(2, third)])?;
    println!("two pieces of ratio 1/3: {cantor:.12} (log 2 / log 3 = {:.12})", 2f64.ln() / 3f64.ln());

    let quarter = BigRational::new(1.into(), 4.into());
    let sixteenth = BigRational::new(1.into(), 16.into());
    let mixed = moran_dimension(&[(1, quarter), (1, sixteenth)])?;
    println!("ratios 1/4 and 1/16: {mixed:.12} (log phi / log 4 = {:.12})", named::zero_set_dimension());

    let rm = random_moran_dimension();
    let psi = psi1(rm.r);
    let residual = 2.0 * rm.r * psi + psi * psi - 1.0;
    println!("random Moran root r = {:.12}, dimension {:.12}, residual {residual:.1e}", rm.r, rm.dimension);

    for k in [1, 2, 3, 5, 8, 13] {
        println!("rho_{k:<2} = {:.12}", rho_k(k)?);
    }
    let scan = rho_k_limit_scan(200)?;
    println!(
        "min over k <= 200: {:.12} at k = {}, golden ratio {:.12}",
        scan.min_rho,
        scan.argmin,
        named::golden()
    );
    Ok(())
}

//! The level set built to carry the most cells: baselines, cell types and
//! the growth of the exact counts.

use num_traits::{Signed, ToPrimitive};
use takagi_levels::constructions::{extremal_flexible, extremal_level};
use takagi_levels::levelsets::ratio_dimension;
use takagi_levels::spectra::named;

fn main() -> takagi_levels::Result<()> {
    let ext = extremal_flexible(12)?;
    let limit = extremal_level();
    println!("{:>3} {:>14} {:>12} {:>9}  types", "n", "baseline", "distance", "cells");
    for (b, s) in ext.baselines.iter().zip(&ext.stages) {
        let gap = (b.value() - &limit).abs();
        println!(
            "{:>3} {:>14} {:>12.3e} {:>9}  {:?}",
            b.n,
            format!("{}", b.value()),
            gap.to_f64().unwrap(),
            s.cells.len(),
            s.type_counts()
        );
    }
    println!("two-stage counts {:?}", ext.two_stage_counts());

    let totals = ext.total_counts();
    let depths: Vec<u32> = (0..totals.len() as u32).map(|n| 2 * n).collect();
    let d = ratio_dimension(&depths[6..], &totals[6..], 2)?;
    println!("dimension estimate {d:.5}, log(alpha)/log(16) = {:.5}", named::flexible_dimension());
    Ok(())
}

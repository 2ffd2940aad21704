//! Level sets along lines of integer slope reduce to level sets of a modified
//! function; this prints the reduction and a cover for the Takagi function.

use num_rational::BigRational;
use takagi_levels::constructions::{extremal_line_function, line_cover, line_reduction, slope_interval};
use takagi_levels::levelsets::fit_dimension;
use takagi_levels::SignProvider;

fn main() -> takagi_levels::Result<()> {
    let takagi = SignProvider::AllPlus;
    for m in 1..=4 {
        let cell = slope_interval(&takagi, m)?;
        let (a, b) = cell.interval();
        println!("slope {m}: takagi has this slope on [{a}, {b}]");
    }

    // on [0, 1/2] the line y = x + 1/3 meets the graph where T(2x) = 2/3
    let b = BigRational::new(1.into(), 3.into());
    let red = line_reduction(&takagi, 1, &b)?;
    println!("line y = x + 1/3 becomes level {} of {}", red.level, red.provider.to_text().lines().next().unwrap_or_default());

    let counts = line_cover(&takagi, 1, &b, 18)?;
    let depths: Vec<u32> = (1..=counts.len() as u32).collect();
    let fit = fit_dimension(&depths[6..], &counts[6..])?;
    println!("cover counts {counts:?}\ndimension estimate {:.4}", fit.slope);

    let (provider, b) = extremal_line_function(2, 6)?;
    println!("extremal line function {} with intercept {b}", provider.to_text().lines().next().unwrap_or_default());
    Ok(())
}

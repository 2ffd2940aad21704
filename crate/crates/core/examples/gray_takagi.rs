//! The Gray Takagi function: slopes, the zero set near 11/15 and the level 2/5.

use num_traits::ToPrimitive;
use takagi_levels::constructions::{gray_level_two_fifths, gray_zero_points};
use takagi_levels::piecewise::eval_enclosure_rational;
use takagi_levels::{GridFunction, SignProvider};

fn main() -> takagi_levels::Result<()> {
    let gray = SignProvider::Rademacher;
    let gf = GridFunction::build(&gray, 5)?;
    println!("slopes at depth 5: {:?}", gf.slopes());
    let ok = gf.slopes().iter().enumerate().all(|(j, &s)| (s as i64 - 5 - 2 * j as i64).rem_euclid(4) == 0);
    println!("slope = depth + 2j mod 4: {ok}");

    let zeros = gray_zero_points(6)?;
    for (m, x) in zeros.x_list.iter().enumerate() {
        println!("x_{m} = {x}");
    }
    let (lo, hi) = eval_enclosure_rational(&gray, &zeros.x_star, 40)?;
    println!("f({}) in [{:.3e}, {:.3e}]", zeros.x_star, lo.to_f64().unwrap(), hi.to_f64().unwrap());
    println!("zero set dimension {:.12}", zeros.dimension);

    for stage in gray_level_two_fifths(6)? {
        println!("stage {}: baseline {} with {} copies, {:?}", stage.n, stage.y(), stage.copies.len(), stage.orientation);
    }
    Ok(())
}

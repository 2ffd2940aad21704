//! Box-counting covers of level sets and their dimension fits.

use takagi_levels::levelsets::{cover_level, fit_dimension, max_set_cover};
use takagi_levels::{parse_rational, SignProvider};

fn report(name: &str, counts: &[u64]) {
    let depths: Vec<u32> = (1..=counts.len() as u32).collect();
    let skip = 4.min(counts.len() - 4);
    match fit_dimension(&depths[skip..], &counts[skip..]) {
        Ok(fit) => println!("{name:<34} counts {:?} .. {:?}  dim {:.4}", &counts[..4], counts.last().unwrap(), fit.slope),
        Err(e) => println!("{name:<34} {e}"),
    }
}

fn main() -> takagi_levels::Result<()> {
    let gray = SignProvider::Rademacher;
    let two_fifths = parse_rational("2/5")?;
    report("gray, y = 2/5", &cover_level(&gray, &two_fifths, 20)?.counts);

    let takagi = SignProvider::AllPlus;
    report("takagi, y = 2/3 (its maximum)", &cover_level(&takagi, &parse_rational("2/3")?, 20)?.counts);
    report("takagi, maximum set", &max_set_cover(&takagi, 20, 0)?.counts);
    report("takagi, y = 1/2", &cover_level(&takagi, &parse_rational("1/2")?, 18)?.counts);

    for seed in 0..3 {
        let f = SignProvider::model2(seed, takagi_levels::Probability::half());
        let cover = cover_level(&f, &parse_rational("0")?, 22)?;
        report(&format!("model 2 seed {seed}, y = 0"), &cover.counts);
    }

    // above the range the cover empties out
    let cover = cover_level(&takagi, &parse_rational("7/10")?, 12)?;
    println!("takagi, y = 7/10: first empty depth {:?}", cover.first_empty());
    Ok(())
}

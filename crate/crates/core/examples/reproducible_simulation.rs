//! Runs a batch of seeded trials twice with different worker counts and
//! checks that the JSON lines agree byte for byte.

use takagi_levels::randomsim::{records_to_jsonl, simulate, SimConfig};
use takagi_levels::{Probability, SignProvider};

fn main() -> takagi_levels::Result<()> {
    let config = SimConfig { model: 2, p: Probability::new(4, 5)?, trials: 24, depth: 18, seed_base: 100 };
    let (records, summary) = simulate(&config, 1)?;
    let (again, _) = simulate(&config, 6)?;
    let text = records_to_jsonl(&records)?;
    assert_eq!(text, records_to_jsonl(&again)?);
    print!("{}", text.lines().take(3).map(|l| format!("{l}\n")).collect::<String>());
    println!("... {} records", records.len());
    if let Some(z) = &summary.z_present {
        println!("z-shape present in {:.3} +- {:.3} of trials", z.mean, z.std_error);
    }

    // a seeded provider is fully described by its text form
    let f = SignProvider::model2(100, config.p.clone());
    let back = SignProvider::from_text(&f.to_text())?;
    let same = (0..12).all(|n| (0..1u64 << n).all(|j| f.sign(n, j) == back.sign(n, j)));
    println!("{} round-trips: {same}", f.to_text().trim());
    Ok(())
}

//! Builds partial sums by dyadic refinement and writes an SVG of three of them.
//!
//! `cargo run --example refine_and_render -- out.svg`

use takagi_levels::piecewise::eval_enclosure_rational;
use takagi_levels::{parse_rational, GridFunction, SignProvider};

fn main() -> takagi_levels::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "takagi.svg".into());

    for text in ["all-plus", "gray", "alternating", "model2 seed=7 p=1/2"] {
        let provider = SignProvider::from_text(text)?;
        let gf = GridFunction::build(&provider, 12)?;
        gf.check_invariants()?;
        let max = gf.values().iter().max().unwrap();
        let min = gf.values().iter().min().unwrap();
        println!(
            "{text:>22}: depth {} range [{:.5}, {:.5}]",
            gf.depth(),
            *min as f64 / 4096.0,
            *max as f64 / 4096.0
        );
    }

    // the first few refinements of Takagi's function, as integers scaled by 2^n
    let mut gf = GridFunction::zero();
    for _ in 0..3 {
        gf = gf.refine(&SignProvider::AllPlus)?;
        println!("depth {}: values {:?} slopes {:?}", gf.depth(), gf.values(), gf.slopes());
    }

    let x = parse_rational("1/3")?;
    let (lo, hi) = eval_enclosure_rational(&SignProvider::AllPlus, &x, 30)?;
    println!("T(1/3) lies in [{lo}, {hi}] (2/3 = {:.10})", 2.0 / 3.0);

    let gf = GridFunction::build(&SignProvider::Rademacher, 10)?;
    std::fs::write(&out, gf.to_svg(Some("gray takagi, depth 10")))?;
    println!("wrote {out}");
    Ok(())
}

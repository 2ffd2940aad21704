//! The sign sequences that define each function, printed level by level.

use takagi_levels::{ExplicitTree, Probability, Sign, SignProvider};

fn show(name: &str, p: &SignProvider) {
    println!("{name}:");
    for n in 0..5u32 {
        let row: String = (0..1u64 << n).map(|j| p.sign(n, j).symbol()).collect();
        println!("  {n}: {row}");
    }
}

fn main() -> takagi_levels::Result<()> {
    show("takagi", &SignProvider::AllPlus);
    show("alternating levels", &SignProvider::Alternating);
    show("gray", &SignProvider::Rademacher);
    show("model 1, p = 1/2, seed 5", &SignProvider::model1(5, Probability::half()));
    show("model 2, p = 3/4, seed 5", &SignProvider::model2(5, Probability::new(3, 4)?));
    show("levels + - -", &SignProvider::constant_levels(vec![Sign::Plus, Sign::Minus, Sign::Minus]));

    let mut tree = ExplicitTree::new(3, Sign::Plus);
    tree.set(2, 1, Sign::Minus);
    tree.set(1, 0, Sign::Minus);
    let p = SignProvider::ExplicitTree(tree);
    show("explicit", &p);
    match p.sign_at(7, 0) {
        Ok(s) => println!("depth 7 sign {}", s.symbol()),
        Err(e) => println!("depth 7: {e}"),
    }
    Ok(())
}

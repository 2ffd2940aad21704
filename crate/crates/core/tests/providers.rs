use statrs::distribution::{ChiSquared, ContinuousCDF};

use takagi_levels::constructions::extremal_flexible;
use takagi_levels::{Probability, Sign, SignProvider};

fn all_kinds() -> Vec<SignProvider> {
    let mut v: Vec<SignProvider> = ["all-plus", "alternating", "gray", "rademacher-product"]
        .iter()
        .map(|t| SignProvider::from_text(t).unwrap())
        .collect();
    v.push(SignProvider::model1(5, Probability::new(3, 4).unwrap()));
    v.push(SignProvider::model2(5, Probability::half()));
    v.push(SignProvider::constant_levels(vec![Sign::Plus, Sign::Minus, Sign::Minus]));
    v.push(extremal_flexible(4).unwrap().provider);
    v
}

#[test]
fn every_provider_is_deterministic_to_depth_20() {
    for p in all_kinds() {
        let copy = SignProvider::from_text(&p.to_text()).unwrap();
        for n in 0..=20u32 {
            let first: Vec<Sign> = (0..1u64 << n).map(|j| p.sign(n, j)).collect();
            let again: Vec<Sign> = (0..1u64 << n).map(|j| p.sign(n, j)).collect();
            assert_eq!(first, again, "{p} at level {n}");
            if n <= 12 {
                let parsed: Vec<Sign> = (0..1u64 << n).map(|j| copy.sign(n, j)).collect();
                assert_eq!(first, parsed, "{p} after a text round trip, level {n}");
            }
        }
    }
}

/// Pearson statistic and p-value of a 2x2 table, one degree of freedom.
fn independence(table: [[f64; 2]; 2]) -> (f64, f64) {
    let total: f64 = table.iter().flatten().sum();
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let mut stat = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = rows[i] * cols[j] / total;
            stat += (table[i][j] - expected).powi(2) / expected;
        }
    }
    (stat, 1.0 - ChiSquared::new(1.0).unwrap().cdf(stat))
}

#[test]
fn model2_cell_signs_are_pairwise_independent() {
    let chi = |pairs: &mut dyn Iterator<Item = (Sign, Sign)>| {
        let mut t = [[0.0; 2]; 2];
        let mut count = 0;
        for (a, b) in pairs {
            t[(a == Sign::Plus) as usize][(b == Sign::Plus) as usize] += 1.0;
            count += 1;
        }
        assert!(count >= 100_000);
        independence(t)
    };
    let p = Probability::new(3, 5).unwrap();
    for seed in [1u64, 2, 3] {
        let f = SignProvider::model2(seed, p.clone());
        let n = 17u32;
        let neighbours = chi(&mut (0..(1u64 << n) - 1).map(|j| (f.sign(n, j), f.sign(n, j + 1))));
        let parent_child = chi(&mut (0..1u64 << n).map(|j| (f.sign(n, j), f.sign(n + 1, 2 * j))));
        let far = chi(&mut (0..1u64 << n).map(|j| (f.sign(n, j), f.sign(n + 3, j))));
        let g = SignProvider::model2(seed + 100, p.clone());
        let across_seeds = chi(&mut (0..1u64 << n).map(|j| (f.sign(n, j), g.sign(n, j))));
        for (name, (stat, pv)) in
            [("neighbours", neighbours), ("parent-child", parent_child), ("far", far), ("seeds", across_seeds)]
        {
            assert!(pv > 1e-3, "seed {seed} {name}: chi2 {stat:.2}, p-value {pv:.2e}");
        }
    }
}

#[test]
fn model1_level_signs_are_independent_across_levels() {
    let mut t = [[0.0; 2]; 2];
    for seed in 0..20_000u64 {
        let f = SignProvider::model1(seed, Probability::half());
        for n in 0..10 {
            let (a, b) = (f.sign(n, 0), f.sign(n + 1, 0));
            t[(a == Sign::Plus) as usize][(b == Sign::Plus) as usize] += 1.0;
        }
    }
    let (stat, pv) = independence(t);
    assert!(pv > 1e-3, "chi2 {stat:.2}, p-value {pv:.2e}");
}

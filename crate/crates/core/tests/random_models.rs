use takagi_levels::levelsets::{fit_dimension, max_set_cover};
use takagi_levels::randomsim::{hitting_time, mc_gw_maximum, mc_model1_max_dimension, mc_zero_dimension};
use takagi_levels::spectra::named;
use takagi_levels::{Probability, SignProvider};

#[test]
fn takagi_maximum_set_has_dimension_one_half() {
    let cover = max_set_cover(&SignProvider::AllPlus, 24, 0).unwrap();
    let depths: Vec<u32> = (8..=24).collect();
    let fit = fit_dimension(&depths, &cover.counts[7..]).unwrap();
    assert!((fit.slope - 0.5).abs() <= 0.05, "{fit:?}");
}

#[test]
fn model1_maximum_set_is_thin_at_one_half() {
    let e = mc_model1_max_dimension(&Probability::half(), 200, 60, 700).unwrap();
    println!("model 1, p = 1/2, depth 60: {e:?}");
    assert!(e.mean.abs() <= 0.07, "{e:?}");
}

#[test]
fn model1_maximum_set_is_finite_below_one_half() {
    // a finite set shows as cover counts that stop growing; late near-ties can
    // still move a count, so the check is on the tail slope and on most seeds
    let p = Probability::new(2, 5).unwrap();
    let mut settled = 0;
    let mut slopes = Vec::new();
    for seed in 0..50u64 {
        let counts = max_set_cover(&SignProvider::model1(seed, p.clone()), 56, 0).unwrap().counts;
        let last = *counts.last().unwrap();
        if counts.iter().rev().take(8).all(|&c| c == last) {
            settled += 1;
        }
        let depths: Vec<u32> = (29..=56).collect();
        slopes.push(fit_dimension(&depths, &counts[28..]).unwrap().slope);
    }
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    println!("{settled} of 50 covers constant over depths 49..56, mean tail slope {mean:.4}");
    assert!(settled >= 45 && mean.abs() <= 0.02, "{settled} settled, slopes {slopes:?}");
}

#[test]
fn model1_zero_set_dimension_lies_between_the_bounds() {
    let z = mc_zero_dimension(1, &Probability::half(), 100, 24, 300).unwrap();
    let d0 = named::zero_set_dimension();
    println!("model 1 zero set: {z:?}");
    assert!(z.fit.mean <= d0 + 0.05 && z.fit.mean >= 0.25 - 0.05, "{z:?}");
}

#[test]
fn subcritical_maximum_process_dies_out() {
    let p = Probability::new(3, 5).unwrap();
    let shallow = mc_gw_maximum(&p, 4000, 20, 40).unwrap().prob_two_thirds;
    let deep = mc_gw_maximum(&p, 4000, 60, 40).unwrap().prob_two_thirds;
    println!("survival {:.4} at depth 20, {:.4} at depth 60", shallow.mean, deep.mean);
    assert!(deep.mean <= shallow.mean && deep.mean < 0.02, "{shallow:?} {deep:?}");
}

#[test]
fn walk_reaches_level_one() {
    let hits = (0..20_000u64).filter(|&t| hitting_time(3, t, 1, 10_000).is_some()).count();
    assert!(hits as f64 / 20_000.0 > 0.99, "{hits}");
}

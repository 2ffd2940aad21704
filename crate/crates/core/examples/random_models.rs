//! Monte Carlo views of the two random sign models: the zero set, the
//! branching process behind the maximum and a hitting-time generating function.

use takagi_levels::randomsim::{
    gamma_trace, gw_path, max_set_dimension, mc_gw_maximum, mc_z_shape_probability, mc_zero_dimension,
    two_thirds_probability, z_shape_limit,
};
use takagi_levels::{Probability, SignProvider};

fn main() -> takagi_levels::Result<()> {
    let half = Probability::half();

    let trace = gamma_trace(&SignProvider::model2(3, half.clone()), 16)?;
    println!("model 2 seed 3: z counts {:?}, first z stage {:?}", trace.z_counts, trace.first_z_stage());

    let z = mc_z_shape_probability(&half, 2000, 20, 0)?;
    println!("P(z-shape by depth 20) = {:.4} +- {:.4}, limit {:.4}, approached slowly", z.mean, z.std_error, z_shape_limit(0.5));

    let zd = mc_zero_dimension(2, &half, 40, 20, 0)?;
    println!("zero set dimension, model 2: {:.4} +- {:.4} over {} runs", zd.fit.mean, zd.fit.std_error, zd.conditioned);

    for (num, den) in [(3, 5), (3, 4), (9, 10)] {
        let p = Probability::new(num, den)?;
        let gw = mc_gw_maximum(&p, 400, 24, 0)?;
        println!(
            "p = {num}/{den}: P(max = 2/3) = {:.4} (exact {:.4}), max set dimension {} (exact {})",
            gw.prob_two_thirds.mean,
            two_thirds_probability(gw.p),
            gw.dim_fit.as_ref().map_or("n/a".into(), |e| format!("{:.4}", e.mean)),
            // below the critical p the process dies out and the set is finite
            match max_set_dimension(gw.p) {
                d if d > 0.0 => format!("{d:.4}"),
                _ => "0".into(),
            }
        );
    }

    let path = gw_path(&SignProvider::model1(11, Probability::new(9, 10)?), 12)?;
    println!("one branching path at p = 9/10: {:?} (survived: {})", path.sizes, path.survived);
    Ok(())
}

//! Replacement entries scaled by Pareto(1.5) weights have a mean but no
//! variance; the four limits hold anyway.

use urn_sa::urn::{GeneratorSpec, LimitLaw, SimulationConfig, WeightLaw};
use urn_sa::verify::{cesaro_mds, run_convergence};
use urn_sa::{perron, NonnegativeMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = NonnegativeMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]])?;
    let pf = perron(&h)?;
    println!("lambda_H = {:.6}, pi_H = {:.6?}", pf.lambda, pf.pi);

    let config = SimulationConfig {
        c0: vec![1.0, 1.0],
        limit: LimitLaw::Fixed(h),
        generator: GeneratorSpec::IidScaled {
            weights: WeightLaw::Pareto { alpha: 1.5 },
        },
        n_max: 10_000,
        checkpoints: vec![100, 1_000, 10_000],
    };
    let report = run_convergence(&config, 100, 11)?;
    print!("{}", report.to_csv());
    for p in cesaro_mds(&config, 100, &config.checkpoints, 11)? {
        println!("cesaro mds n = {:>6}: {:.4} ± {:.4}", p.n, p.estimate, p.stderr);
    }
    Ok(())
}

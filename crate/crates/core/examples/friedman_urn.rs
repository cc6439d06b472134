//! Friedman's urn: draw a ball, return it with two of its color and one of the
//! other. Proportions settle at (1/2, 1/2) and each step is audited against
//! the stochastic-approximation decomposition.

use urn_sa::urn::{checkpoint_csv, replicate_rng};
use urn_sa::{sa_residual, simulate, GeneratorSpec, LimitLaw, NonnegativeMatrix, SimulationConfig, UrnProcess};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = NonnegativeMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]])?;
    let config = SimulationConfig {
        c0: vec![5.0, 1.0],
        limit: LimitLaw::Fixed(h.clone()),
        generator: GeneratorSpec::Fixed,
        n_max: 100_000,
        checkpoints: vec![0, 10, 100, 1_000, 10_000, 100_000],
    };
    let trajectory = simulate(&config, 2024, 0, false)?;
    print!("{}", checkpoint_csv(&trajectory.checkpoints));

    let mut process = UrnProcess::new(&config.c0, &config.generator, &h)?;
    let mut rng = replicate_rng(2024, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..1_000 {
        let record = process.step_record(&mut rng)?;
        worst = worst.max(sa_residual(&record, &h)?);
    }
    println!("largest decomposition residual over 1000 steps: {worst:.1e}");
    Ok(())
}

//! The built-in replacement generators, including a random limit drawn per
//! replicate, each audited step by step.

use urn_sa::urn::{replicate_rng, GeneratorSpec, LimitLaw, SimulationConfig, WeightLaw};
use urn_sa::verify::run_convergence;
use urn_sa::{rho, sa_residual, Matrix, NonnegativeMatrix, UrnProcess};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = NonnegativeMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]])?;
    let generators = [
        GeneratorSpec::Fixed,
        GeneratorSpec::IidScaled { weights: WeightLaw::Exponential },
        GeneratorSpec::IidScaled { weights: WeightLaw::Pareto { alpha: 1.2 } },
        GeneratorSpec::CesaroSpike {
            spike: Matrix::from_rows(&[[0.0, 3.0], [1.0, 0.0]])?,
            weights: WeightLaw::Exponential,
        },
        GeneratorSpec::MarkovMod {
            perturbations: vec![
                Matrix::from_rows(&[[1.0, -1.0], [0.0, 0.0]])?,
                Matrix::from_rows(&[[0.0, 0.0], [-2.0, 2.0]])?,
            ],
            decay: 0.5,
            weights: WeightLaw::Constant,
        },
    ];
    for spec in &generators {
        let mut process = UrnProcess::new(&[1.0, 1.0], spec, &h)?;
        let mut rng = replicate_rng(17, 0);
        let (mut worst, mut over): (f64, usize) = (0.0, 0);
        for _ in 0..10_000 {
            let rec = process.step_record(&mut rng)?;
            worst = worst.max(sa_residual(&rec, &h)?);
            if rec.y > rho(&rec.r) {
                over += 1;
            }
        }
        println!(
            "{:<12} max residual {:.1e}, steps with Y > rho(R): {over}, x_n = {:.4?}",
            spec.name(),
            worst,
            process.state().proportions()
        );
    }

    let random = SimulationConfig {
        c0: vec![1.0, 1.0],
        limit: LimitLaw::Choice(vec![
            NonnegativeMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]])?,
            h,
        ]),
        generator: GeneratorSpec::IidScaled { weights: WeightLaw::Exponential },
        n_max: 10_000,
        checkpoints: vec![100, 1_000, 10_000],
    };
    let report = run_convergence(&random, 40, 3)?;
    print!("random H, errors against each replicate's own limit:\n{}", report.to_csv());
    Ok(())
}

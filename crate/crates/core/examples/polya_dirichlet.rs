//! Pólya's urn (H = I) is reducible: proportions do not converge to a
//! constant but to a Dirichlet(1, 1) = Uniform(0, 1) limit.

use urn_sa::urn::{GeneratorSpec, LimitLaw, SimulationConfig};
use urn_sa::verify::{proportion_moments, run_convergence};
use urn_sa::NonnegativeMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SimulationConfig {
        c0: vec![1.0, 1.0],
        limit: LimitLaw::Fixed(NonnegativeMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]])?),
        generator: GeneratorSpec::Fixed,
        n_max: 10_000,
        checkpoints: vec![10, 100, 1_000, 10_000],
    };
    if let Err(e) = run_convergence(&config, 10, 0) {
        println!("convergence report refused: {e}");
    }
    for m in proportion_moments(&config, 2_000, 1)?.iter().filter(|m| m.coordinate == 1) {
        println!(
            "n = {:>5}: mean = {:.4}, variance = {:.4} (uniform limit: 0.5, {:.4})",
            m.n,
            m.mean,
            m.variance,
            1.0 / 12.0
        );
    }
    Ok(())
}

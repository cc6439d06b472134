//! Delayed error sums over level-crossing windows for a generator whose
//! spikes never die out pointwise but vanish in Cesàro mean.

use urn_sa::urn::{GeneratorSpec, LimitLaw, SimulationConfig, WeightLaw};
use urn_sa::verify::{generating_gap, negligibility_curves};
use urn_sa::{Matrix, NonnegativeMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = NonnegativeMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]])?;
    let config = SimulationConfig {
        c0: vec![1.0, 1.0],
        limit: LimitLaw::Fixed(h),
        generator: GeneratorSpec::CesaroSpike {
            spike: Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.5]])?,
            weights: WeightLaw::Constant,
        },
        n_max: 10,
        checkpoints: vec![10],
    };
    let n_list = [100, 1_000, 10_000];

    for g in generating_gap(&config, &[100, 1_000, 10_000, 100_000], 3)? {
        println!(
            "n = {:>6}: mean rho(H_k - H) = {:.4}, sup = {}",
            g.n, g.cesaro_mean, g.running_sup
        );
    }
    println!("n,sequence,fwd_median,fwd_q90,bwd_median,bwd_q90");
    for p in negligibility_curves(&config, 0.5, &n_list, 100, 3)? {
        println!(
            "{},{},{:.5},{:.5},{:.5},{:.5}",
            p.n,
            p.sequence.name(),
            p.fwd_median,
            p.fwd_q90,
            p.bwd_median,
            p.bwd_q90
        );
    }
    Ok(())
}

//! How often the random steps `1/S_{m+1}` stay within constant factors of
//! `1/(m+1)` over a whole window.

use urn_sa::urn::{GeneratorSpec, LimitLaw, SimulationConfig};
use urn_sa::verify::{event_frequency, EventBounds};
use urn_sa::{perron, NonnegativeMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // unbalanced, λ_H = 3, σ = 2, ρ = 5
    let h = NonnegativeMatrix::from_rows(&[[1.0, 1.0], [4.0, 1.0]])?;
    println!("lambda_H = {:.6}", perron(&h)?.lambda);
    let config = SimulationConfig {
        c0: vec![1.0, 1.0],
        limit: LimitLaw::Fixed(h),
        generator: GeneratorSpec::Fixed,
        n_max: 10,
        checkpoints: vec![10],
    };
    for bounds in [
        EventBounds { upper: 10.0, lower: 1.0, horizon: 0.3 },
        EventBounds { upper: 3.2, lower: 2.8, horizon: 0.3 },
        EventBounds { upper: 10.0, lower: 6.0, horizon: 0.3 },
    ] {
        let bound = bounds.complement_bound(config.limit.matrices());
        for f in event_frequency(&config, bounds, &[10, 100, 1_000], 50, 8)? {
            println!(
                "A = {:>4}, B = {:>3}, n = {:>5}, window [{}, {}]: frequency {:.2} (limsup of complement <= {bound})",
                bounds.upper, bounds.lower, f.n, f.window.0, f.window.1, f.frequency
            );
        }
    }
    Ok(())
}

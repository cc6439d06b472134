//! Step-size clock: partial-sum times, forward and backward level crossings,
//! interpolated paths and the discrepancy `e^n(t)` on a simulated urn.

use urn_sa::sa::{discrepancy_e, PathSample, StepSizeSeq, VectorSeq};
use urn_sa::urn::replicate_rng;
use urn_sa::{GeneratorSpec, NonnegativeMatrix, UrnProcess};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let harmonic = StepSizeSeq::harmonic(100_000);
    for n in [10, 100, 1_000] {
        let up = harmonic.crossing_forward(n, 1.0)?;
        let down = harmonic.crossing_backward(n, 1.0)?;
        println!("a_n = 1/(n+1), n = {n:>5}: tau_up = {up:>6}, tau_down = {down:>4}, ratios {:.3} / {:.3}",
            up as f64 / n as f64, n as f64 / down.max(1) as f64);
    }

    let h = NonnegativeMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]])?;
    let mut process = UrnProcess::new(&[1.0, 1.0], &GeneratorSpec::Fixed, &h)?;
    let mut rng = replicate_rng(5, 0);
    let mut totals = vec![process.state().total];
    let mut values = VectorSeq::new(2);
    values.push(&process.state().proportions())?;
    for _ in 0..50_000 {
        process.step(&mut rng)?;
        totals.push(process.state().total);
        values.push(&process.state().proportions())?;
    }
    // a_n = 1/S_{n+1}
    let a = StepSizeSeq::from_totals(&totals)?;
    let path = PathSample::on_clock(&a, values)?;
    for n in [10, 100, 2_000] {
        let t_n = a.time(n).expect("within the path");
        let up = a.crossing_forward(n, 0.5)?;
        let e = discrepancy_e(&h, &path, n, 0.5)?;
        println!(
            "urn clock n = {n:>6}: t_n = {t_n:.4}, tau_up(n, 0.5) = {up}, e^n(0.5) = {:.2e}",
            e.iter().map(|v| v.abs()).sum::<f64>()
        );
        println!("    X0(t_n + 0.25) = {:.5?}", path.interp_linear(t_n + 0.25));
    }
    Ok(())
}

//! The limiting flow `ẋ = xH − x(xH1ᵀ)` pulls every interior start to `π_H`.

use urn_sa::{drift, integrate, perron, settle, NonnegativeMatrix, SimplexPoint};

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = NonnegativeMatrix::from_rows(&[[1.0, 2.0, 0.0], [0.0, 1.0, 3.0], [2.0, 0.0, 1.0]])?;
    let pi = perron(&h)?.pi;
    println!("pi_H = {pi:.6?}");

    for start in [[0.98, 0.01, 0.01], [0.01, 0.98, 0.01], [0.2, 0.2, 0.6]] {
        let x0 = SimplexPoint::new(start.to_vec())?;
        let path = integrate(&h, &x0, 20.0, 0.01)?;
        let end = path.last().coords();
        println!(
            "from {start:?}: |x(20) - pi|_1 = {:.2e}, |h(x(20))|_1 = {:.2e}, mass defect {:.1e}",
            l1(end, &pi),
            drift(&h, end)?.iter().map(|v| v.abs()).sum::<f64>(),
            path.max_mass_defect
        );
    }

    // Halving dt shrinks the RK4 error by about 2⁴.
    let x0 = SimplexPoint::new(vec![0.7, 0.2, 0.1])?;
    let reference = integrate(&h, &x0, 2.0, 0.0025)?;
    let coarse = integrate(&h, &x0, 2.0, 0.1)?;
    let fine = integrate(&h, &x0, 2.0, 0.05)?;
    let ratio = l1(coarse.last().coords(), reference.last().coords())
        / l1(fine.last().coords(), reference.last().coords());
    println!("step-halving error ratio: {ratio:.2}");

    let settled = settle(&h, &x0, 5.0, 0.01, 1e-12)?;
    println!(
        "settled at t = {} with |drift|_1 = {:.1e} (converged: {})",
        settled.t_end, settled.drift_norm, settled.converged
    );
    Ok(())
}

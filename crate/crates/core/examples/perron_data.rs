//! Dominant eigenvalue and Perron vectors of a few replacement matrices.

use urn_sa::{is_irreducible, perron, rho, sigma, NonnegativeMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = [
        ("friedman", vec![vec![2.0, 1.0], vec![1.0, 2.0]]),
        ("unbalanced", vec![vec![1.0, 2.0], vec![3.0, 4.0]]),
        ("cycle", vec![vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 1.0], vec![4.0, 0.0, 0.0]]),
        ("polya", vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
    ];
    for (name, rows) in fixtures {
        let h = NonnegativeMatrix::from_rows(&rows)?;
        if !is_irreducible(&h) {
            println!("{name:>10}: reducible, no Perron data");
            continue;
        }
        let pf = perron(&h)?;
        println!(
            "{name:>10}: sigma = {:.4} <= lambda = {:.10} <= rho = {:.4}",
            sigma(&h),
            pf.lambda,
            rho(&h)
        );
        println!("{:>10}  pi = {:.6?}  nu = {:.6?}", "", pf.pi, pf.nu);
        println!(
            "{:>10}  residuals: left {:.1e}, right {:.1e}",
            "",
            pf.left_residual(&h),
            pf.right_residual(&h)
        );
    }
    Ok(())
}

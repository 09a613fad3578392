//! Lowest Dirichlet eigenpairs of the rectangle (0, π) × (0, L).

use gatedqdot::spectral::{check_simplicity, enumerate_modes};

fn main() -> gatedqdot::Result<()> {
    let l = 1.0;
    let s = enumerate_modes(l, 12)?;
    println!("{:>4} {:>4} {:>4} {:>12}", "rank", "j1", "j2", "lambda");
    for (k, p) in s.pairs.iter().enumerate() {
        println!("{:>4} {:>4} {:>4} {:>12.6}", k + 1, p.index.j1, p.index.j2, p.lambda);
    }

    // the square has symmetric degeneracies, L = 1 has none this low
    for l in [1.0, std::f64::consts::PI] {
        let r = check_simplicity(&enumerate_modes(l, 12)?, 1e-9);
        let pairs: Vec<String> = r.collisions.iter().map(|(a, b)| format!("{a}={b}")).collect();
        println!("L = {l:.4}: {} collisions {}", pairs.len(), pairs.join(" "));
    }
    Ok(())
}

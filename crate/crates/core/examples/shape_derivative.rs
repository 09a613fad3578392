//! Eigenvalue derivatives under a uniform push of each wall.

use gatedqdot::spectral::{eigenvalue_shape_derivative, enumerate_modes, BoundaryDisplacement, Wall};

fn main() -> gatedqdot::Result<()> {
    let l = 1.0;
    let s = enumerate_modes(l, 6)?;
    println!("{:>7} {:>10} {:>10} {:>10}", "mode", "lambda", "left", "top");
    for p in &s.pairs {
        let left = eigenvalue_shape_derivative(&s, p.index, &BoundaryDisplacement::uniform(Wall::Left))?;
        let top = eigenvalue_shape_derivative(&s, p.index, &BoundaryDisplacement::uniform(Wall::Top))?;
        println!("{:>7} {:>10.4} {:>10.4} {:>10.4}", p.index.to_string(), p.lambda, left, top);
    }
    // pushing the top wall is the same as growing L
    let m = s.pairs[1].index;
    let h = 1e-6;
    let fd = (m.eigenvalue(l + h) - m.eigenvalue(l - h)) / (2.0 * h);
    println!("d lambda / dL for {m}: {fd:.6}");
    Ok(())
}

use mpcmp::solver::{solve_eta, MeanParams};
use std::time::Instant;

fn main() {
    let mus = [0.3, 1.0, 1.5, 4.0, 4.321, 10.0, 27.43, 50.0];
    let nus = [0.1, 0.5, 1.0, 2.0, 10.0, 52.26, 100.0, 1000.0];
    for &mu in &mus {
        for &nu in &nus {
            let t = Instant::now();
            let mp = MeanParams::new(mu, nu).unwrap();
            let eta = solve_eta(&mp, 1e-10).unwrap();
            eprintln!("({mu}, {nu}) -> {eta:.6} in {:?}", t.elapsed());
        }
    }
}

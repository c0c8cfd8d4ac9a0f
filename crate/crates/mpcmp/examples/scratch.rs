use mpcmp::fit::{empirical_baseline, fit_mle, CountData, FitConfig};
use mpcmp::grid::LambdaGrid;
use mpcmp::solver::{bracket, comparison_workload, compare_solvers, solve_eta, MeanParams};
use mpcmp::dist::{convergence_diagnostic, MeanCmp};

fn main() {
    // --- Table 1 fit ---
    let data = CountData::new(vec![26, 27, 27, 28, 28, 28, 28]).unwrap();
    let fit = fit_mle(&data, &FitConfig::default()).unwrap();
    println!(
        "fit: mu_hat={:.6} nu_hat={:.4} loglik={:.6} aic={:.4} var={:.5} conv={} bdry={}",
        fit.mu_hat, fit.nu_hat, fit.loglik, fit.aic, fit.fitted_variance, fit.converged, fit.at_boundary
    );
    let (probs, ll, a) = empirical_baseline(&data);
    println!("empirical: probs={probs:?} loglik={ll:.6} aic={a:.4}");

    // --- Prop 1 probabilities ---
    let d100 = MeanCmp::new(MeanParams::new(4.321, 100.0).unwrap()).unwrap();
    println!("pmf(4;4.321,100)={:.6} pmf(5)={:.6}", d100.pmf(4), d100.pmf(5));
    let d1000 = MeanCmp::new(MeanParams::new(4.321, 1000.0).unwrap()).unwrap();
    println!(
        "pmf(4;4.321,1000)={:.6} pmf(5)={:.6} tv={:.3e} var={:.5}",
        d1000.pmf(4),
        d1000.pmf(5),
        d1000.tv_distance_to_limit(),
        d1000.mean_variance().1
    );
    let di = MeanCmp::new(MeanParams::new(4.0, 1000.0).unwrap()).unwrap();
    println!("pmf(4;4,1000)={:.10} var={:.3e}", di.pmf(4), di.mean_variance().1);
    for nu in [1.0, 5.0, 10.0, 25.0, 100.0] {
        println!("tv(4.321, {nu}) = {:.6}", convergence_diagnostic(4.321, nu).unwrap());
    }

    // --- Poisson recovery fixture ---
    let gen = MeanCmp::new(MeanParams::new(5.0, 1.0).unwrap()).unwrap();
    let sample = gen.sample(2000, 20240001);
    let sdata = CountData::new(sample).unwrap();
    let sfit = fit_mle(&sdata, &FitConfig::default()).unwrap();
    println!("poisson recovery: mu_hat={:.4} nu_hat={:.4}", sfit.mu_hat, sfit.nu_hat);

    // --- solver speed comparison ---
    let workload = comparison_workload(500);
    let cmp = compare_solvers(&workload, 1e-10).unwrap();
    println!(
        "bench: bracketed={:?} unbracketed={:?} speedup={:.2}",
        cmp.bracketed_median, cmp.unbracketed_median, cmp.speedup
    );

    // --- grid midpoint error profile (criterion 7 shape) ---
    let n = 20usize;
    let log_mu: Vec<f64> = (0..n)
        .map(|i| 30f64.ln() * i as f64 / (n - 1) as f64)
        .collect();
    let nu: Vec<f64> = (0..n)
        .map(|i| 1.0 + 99.0 * i as f64 / (n - 1) as f64)
        .collect();
    let t0 = std::time::Instant::now();
    let grid = LambdaGrid::build(&log_mu, &nu, 1e-10).unwrap();
    println!("grid build: {:?}", t0.elapsed());
    let mut max_err: f64 = 0.0;
    let mut max_cell = (0, 0);
    let mut errs = vec![];
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let qlm = 0.5 * (log_mu[i] + log_mu[i + 1]);
            let qnu = 0.5 * (nu[j] + nu[j + 1]);
            let mp = MeanParams::new(qlm.exp(), qnu).unwrap();
            let interp = grid.interpolate_eta(&mp).unwrap();
            let exact = solve_eta(&mp, 1e-10).unwrap();
            let e = (interp - exact).abs();
            errs.push(e);
            if e > max_err {
                max_err = e;
                max_cell = (i, j);
            }
        }
    }
    errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!(
        "grid midpoint err: max={:.4} at cell {:?} (mu={:.4}, nu={:.2}), median={:.6}, min={:.2e}",
        max_err,
        max_cell,
        (0.5 * (log_mu[max_cell.0] + log_mu[max_cell.0 + 1])).exp(),
        0.5 * (nu[max_cell.1] + nu[max_cell.1 + 1]),
        errs[errs.len() / 2],
        errs[0]
    );

    // --- lattice roundtrip + lemma containment ---
    let mus = [0.3, 1.0, 1.5, 4.0, 4.321, 10.0, 27.43, 50.0];
    let nus = [0.1, 0.5, 1.0, 2.0, 10.0, 52.26, 100.0, 1000.0];
    let t0 = std::time::Instant::now();
    let mut worst = 0.0f64;
    for &mu in &mus {
        for &nu in &nus {
            let mp = MeanParams::new(mu, nu).unwrap();
            let eta = solve_eta(&mp, 1e-10).unwrap();
            let p = mpcmp::cmp::CmpParams::new(eta, nu).unwrap();
            let (mean, _) = p.moments(1e-14).unwrap();
            let rel = (mean - mu).abs() / mu.max(1.0);
            worst = worst.max(rel);
            if mu >= 1.0 && nu >= 1.0 {
                let br = bracket(&mp).unwrap();
                assert!(
                    br.rule != mpcmp::solver::BracketRule::FallbackExpansion,
                    "fallback at ({mu}, {nu})"
                );
                assert!(br.contains(eta), "eta not strictly inside at ({mu}, {nu})");
            }
        }
    }
    println!("lattice roundtrip worst rel err = {worst:.3e}, elapsed {:?}", t0.elapsed());
}

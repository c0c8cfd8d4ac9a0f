use mpcmp::dist::MeanCmp;
use mpcmp::fit::{fit_mle, CountData, FitConfig};
use mpcmp::solver::{comparison_workload, solve_eta, solve_eta_unbracketed, MeanParams};
use std::time::Instant;

fn main() {
    let t = Instant::now();
    let gen = MeanCmp::new(MeanParams::new(5.0, 1.0).unwrap()).unwrap();
    let sample = gen.sample(2000, 20240001);
    eprintln!("sampled: {:?}", t.elapsed());

    let t = Instant::now();
    let sdata = CountData::new(sample).unwrap();
    let sfit = fit_mle(&sdata, &FitConfig::default()).unwrap();
    eprintln!(
        "poisson recovery: mu_hat={:.4} nu_hat={:.4} in {:?}",
        sfit.mu_hat,
        sfit.nu_hat,
        t.elapsed()
    );

    // time individual solves across the workload, flag slow ones
    let workload = comparison_workload(500);
    let t = Instant::now();
    for (i, mp) in workload.iter().enumerate() {
        let t1 = Instant::now();
        solve_eta(mp, 1e-10).unwrap();
        let dt = t1.elapsed();
        if dt.as_millis() > 50 {
            eprintln!("slow bracketed #{i}: mu={} nu={} took {dt:?}", mp.mu(), mp.nu());
        }
    }
    eprintln!("bracketed x500: {:?}", t.elapsed());
    let t = Instant::now();
    for (i, mp) in workload.iter().enumerate() {
        let t1 = Instant::now();
        solve_eta_unbracketed(mp, 1e-10).unwrap();
        let dt = t1.elapsed();
        if dt.as_millis() > 50 {
            eprintln!("slow unbracketed #{i}: mu={} nu={} took {dt:?}", mp.mu(), mp.nu());
        }
    }
    eprintln!("unbracketed x500: {:?}", t.elapsed());
}

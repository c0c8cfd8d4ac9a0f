use mpcmp::solver::{bracket, mean_residual, MeanParams};

fn main() {
    let mp = MeanParams::new(0.3, 0.1).unwrap();
    let br = bracket(&mp).unwrap();
    eprintln!("bracket: [{}, {}] rule {:?}", br.eta_lo, br.eta_hi, br.rule);
    let mut lo = br.eta_lo;
    let mut hi = br.eta_hi;
    for i in 0..80 {
        let mid = 0.5 * (lo + hi);
        let r = mean_residual(mid, &mp).unwrap();
        eprintln!("iter {i}: mid={mid:.17} r={r:+.3e} width={:.3e}", hi - lo);
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
}

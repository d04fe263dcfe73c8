use rfkac::renewal::laws::{residual_cdf, residual_laplace};
use rfkac::renewal::sample_bbm_residuals;
use rfkac::stats::ks_test_cdf;

fn main() {
    for seed in [777u64, 21, 99] {
        let xs = sample_bbm_residuals(1.0, 5e-6, 8.0, 10_000, seed);
        let ks = ks_test_cdf(&xs, |x| residual_cdf(x, 1.0));
        let mut worst = 0.0f64;
        for lam in [0.5, 1.0, 2.0] {
            let emp: f64 = xs.iter().map(|&x| (-lam * x).exp()).sum::<f64>() / xs.len() as f64;
            let theo = residual_laplace(lam, 1.0).unwrap();
            worst = worst.max((emp - theo).abs() / theo);
        }
        println!("seed {seed}: D={:.5} p={:.4} worst-laplace={:.5}", ks.statistic, ks.p_value, worst);
    }
}

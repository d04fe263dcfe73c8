use rfkac::renewal::laws::interarrival_cdf;
use rfkac::renewal::sample_bbm_interarrivals;
use rfkac::stats::{ks_test_cdf, mean_var};

fn main() {
    for (dt, n, seed) in [(1e-4, 10_000, 20_250u64), (1e-4, 10_000, 555), (1e-4, 10_000, 777), (1e-4, 20_000, 31)] {
        let t0 = std::time::Instant::now();
        let gaps = sample_bbm_interarrivals(1.0, dt, n, seed);
        let ks = ks_test_cdf(&gaps, |x| interarrival_cdf(x, 1.0));
        let (m, _) = mean_var(&gaps);
        println!(
            "dt={dt:.0e} n={} mean={:.4} D={:.5} p={:.4} [{:?}]",
            gaps.len(), m, ks.statistic, ks.p_value, t0.elapsed()
        );
    }
}

//! Renewal-law sampling on synthetic bilateral Gaussian paths: inter-arrival
//! times between certified threshold extrema against the closed-form law,
//! residual-life samples against theirs, empirical transforms, count bounds
//! and a grid-halving bias study.

use crate::io::{fmt_f64, write_csv, write_json};
use crate::ExperimentConfig;
use rfkac::error::Result;
use rfkac::renewal::laws::{
    empirical_law_test, interarrival_cdf, interarrival_laplace, renewal_count_check,
    residual_cdf, residual_laplace, LawTestReport,
};
use rfkac::renewal::{drawdown_extrema, sample_bbm, sample_bbm_interarrivals, sample_bbm_residuals};
use rfkac::report::Report;
use rfkac::stats::mean_var;
use serde::Serialize;

/// Scales of one renewal sampling run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RenewalScales {
    pub h: f64,
    /// grid step for inter-arrival sampling
    pub dt: f64,
    /// finer grid step for residual-life sampling
    pub dt_residual: f64,
    /// stationarization run-in for residual samples, in units of h^2
    pub r0_factor: f64,
    pub n_interarrivals: usize,
    pub n_residuals: usize,
}

impl Default for RenewalScales {
    fn default() -> Self {
        Self {
            h: 1.0,
            dt: 1e-4,
            dt_residual: 5e-6,
            r0_factor: 8.0,
            n_interarrivals: 10_000,
            n_residuals: 10_000,
        }
    }
}

/// Structured result of the renewal run.
#[derive(Debug, Clone, Serialize)]
pub struct RenewalResult {
    pub scales: RenewalScales,
    pub interarrival_mean: f64,
    pub interarrival_test: LawTestReport,
    pub residual_test: LawTestReport,
    pub bias_study: BiasStudy,
    pub elapsed_seconds: f64,
}

/// Inter-arrival means at the working grid and at half the grid step.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BiasStudy {
    pub mean_at_dt: f64,
    pub mean_at_half_dt: f64,
}

/// Draw the samples and run the comparisons at the given scales.
pub fn sample_and_test(scales: &RenewalScales, seed: u64) -> Result<RenewalResult> {
    let start = std::time::Instant::now();
    let h = scales.h;
    let gaps = sample_bbm_interarrivals(h, scales.dt, scales.n_interarrivals, seed);
    let (mean, _) = mean_var(&gaps);
    let lambdas = [0.5 / (h * h), 1.0 / (h * h), 2.0 / (h * h)];
    let interarrival_test = empirical_law_test(
        &gaps,
        |x| interarrival_cdf(x, h),
        |l| interarrival_laplace(l, h).unwrap(),
        &lambdas,
        seed ^ 0xa5a5,
    )?;

    let residuals = sample_bbm_residuals(
        h,
        scales.dt_residual,
        scales.r0_factor * h * h,
        scales.n_residuals,
        seed.wrapping_add(101),
    );
    let residual_test = empirical_law_test(
        &residuals,
        |x| residual_cdf(x, h),
        |l| residual_laplace(l, h).unwrap(),
        &lambdas,
        seed ^ 0x5a5a,
    )?;

    // grid-halving bias study on a smaller batch
    let n_bias = (scales.n_interarrivals / 5).max(1000);
    let coarse = sample_bbm_interarrivals(h, scales.dt, n_bias, seed.wrapping_add(77));
    let fine = sample_bbm_interarrivals(h, scales.dt / 2.0, n_bias, seed.wrapping_add(78));
    let bias_study = BiasStudy {
        mean_at_dt: mean_var(&coarse).0,
        mean_at_half_dt: mean_var(&fine).0,
    };

    Ok(RenewalResult {
        scales: *scales,
        interarrival_mean: mean,
        interarrival_test,
        residual_test,
        bias_study,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Count-bound harness: records from one-sided sampled paths at the real
/// equilibrium threshold.
pub fn count_check(
    h: f64,
    v: f64,
    fstar: f64,
    g_value: f64,
    n_records: usize,
    seed: u64,
) -> Result<rfkac::renewal::laws::CountCheckReport> {
    let span = 14.0 * h * h;
    let dt = 1e-3 * h * h;
    let records: Vec<_> = (0..n_records)
        .map(|i| {
            let path = sample_bbm(0.0, span, dt, seed.wrapping_add(i as u64 * 13)).unwrap();
            drawdown_extrema(&path, h).unwrap()
        })
        .collect();
    let r_grid = [2.0 * h * h, 5.0 * h * h, 10.0 * h * h];
    renewal_count_check(&records, &r_grid, v, v, fstar, g_value, h)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let dir = cfg.out.join("renewal");
    std::fs::create_dir_all(&dir).ok();
    let mf = super::bundle(cfg)?;
    let mut report = Report::new(super::provenance(cfg, &mf));

    let scales = RenewalScales {
        n_interarrivals: cfg.paths.max(1000),
        n_residuals: cfg.paths.max(1000),
        ..RenewalScales::default()
    };
    let res = sample_and_test(&scales, cfg.seed)?;

    let h2 = scales.h * scales.h;
    report.record(
        "interarrival-mean",
        (res.interarrival_mean / h2 - 1.0).abs() <= 0.05,
        format!("mean {} vs {}", res.interarrival_mean, h2),
    );
    report.record(
        "interarrival-law",
        res.interarrival_test.ks.p_value > 0.01,
        format!(
            "KS D = {}, p = {}",
            res.interarrival_test.ks.statistic, res.interarrival_test.ks.p_value
        ),
    );
    report.record(
        "residual-law",
        res.residual_test.ks.p_value > 0.01,
        format!(
            "KS D = {}, p = {}",
            res.residual_test.ks.statistic, res.residual_test.ks.p_value
        ),
    );
    for row in res
        .interarrival_test
        .laplace
        .iter()
        .chain(res.residual_test.laplace.iter())
    {
        report.record(
            "laplace-2pct",
            row.rel_err <= 0.02,
            format!("lambda {}: rel err {}", row.lambda, row.rel_err),
        );
    }

    // artifacts
    let gaps = sample_bbm_interarrivals(scales.h, scales.dt, 2000, cfg.seed);
    write_csv(
        &dir.join("interarrivals.csv"),
        &["interarrival"],
        &gaps.iter().map(|g| vec![fmt_f64(*g)]).collect::<Vec<_>>(),
    )?;
    let path = sample_bbm(-8.0 * mf.h * mf.h, 8.0 * mf.h * mf.h, 1e-4, cfg.seed + 9)?;
    let record = drawdown_extrema(&path, mf.h)?;
    write_csv(
        &dir.join("record.csv"),
        &["index", "time", "value", "label", "certified"],
        &record
            .extrema
            .iter()
            .map(|e| {
                vec![
                    e.index.to_string(),
                    fmt_f64(e.time),
                    fmt_f64(e.value),
                    if e.is_max { "max" } else { "min" }.to_string(),
                    e.certified.to_string(),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    let count = count_check(mf.h, mf.v, mf.fstar, std::f64::consts::E, 1000, cfg.seed + 3)?;
    write_json(
        &dir.join("report.json"),
        &serde_json::json!({ "result": res, "count_check": count }),
    )?;
    Ok(report)
}

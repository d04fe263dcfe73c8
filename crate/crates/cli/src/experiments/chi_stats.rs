//! Block-aggregate statistics: exact-vs-enumeration residual envelopes,
//! antithetic/variance/transform checks at a deep coarse scale, the
//! rescaled-walk normality scan along decreasing interaction parameters,
//! and the origin-cell report.

use crate::io::{fmt_f64, write_csv, write_json};
use crate::ExperimentConfig;
use rfkac::cumulants::{
    moment_and_mgf_check, origin_cell_check, walk_normality_check, BlockEnergyModel, ChiSampler,
};
use rfkac::error::Result;
use rfkac::mean_field::MeanFieldSummary;
use rfkac::report::Report;
use serde::Serialize;

/// One scale of the normality scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WalkScale {
    pub gamma_exp: u32,
    pub delta_star_exp: u32,
    pub eps_exp: u32,
}

pub const WALK_SCAN: [WalkScale; 3] = [
    WalkScale { gamma_exp: 6, delta_star_exp: 4, eps_exp: 3 },
    WalkScale { gamma_exp: 8, delta_star_exp: 6, eps_exp: 5 },
    WalkScale { gamma_exp: 10, delta_star_exp: 7, eps_exp: 7 },
];

pub fn sampler_for(scale: &WalkScale, mf: &MeanFieldSummary, beta: f64, theta: f64) -> Result<ChiSampler> {
    let n_half = 1u64 << (scale.gamma_exp - scale.delta_star_exp - 1);
    let model = BlockEnergyModel::new(beta, theta, n_half, mf.m_beta)?;
    let gamma = (-(scale.gamma_exp as f64)).exp2();
    let blocks = 1u64 << (scale.gamma_exp + scale.delta_star_exp - scale.eps_exp);
    ChiSampler::new(model, gamma, blocks)
}

/// Normality and variance-scaling report at one scale.
#[derive(Debug, Clone, Serialize)]
pub struct WalkScanRow {
    pub scale: WalkScale,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    /// Var(walk(t))/|t| at t = 0.5, 1, 2
    pub var_ratios: [f64; 3],
    pub exact_rate: f64,
    pub analytic_band: (f64, f64),
    pub origin_exact_zero: f64,
    pub origin_small: f64,
    /// P[|origin cell| >= 0.05], which must fall along the scan
    pub origin_fixed_exceedance: f64,
    pub origin_tail_ok: bool,
}

/// Normality/variance report plus the origin-cell report at one scale.
pub fn walk_scan_row(
    scale: &WalkScale,
    mf: &MeanFieldSummary,
    beta: f64,
    theta: f64,
    n_paths: usize,
    seed: u64,
) -> Result<WalkScanRow> {
    let sampler = sampler_for(scale, mf, beta, theta)?;
    let eps = sampler.epsilon;
    let norm = walk_normality_check(&sampler, n_paths, seed);
    let ratio = 1.0 / (2.0 * sampler.model.n_half as f64);
    let band = (
        mf.v * mf.v * (1.0 - ratio.powf(0.2)).powi(2),
        mf.v * mf.v * (1.0 + ratio.powf(0.2)).powi(2),
    );
    let origin = origin_cell_check(
        &sampler,
        20_000,
        mf.v,
        &[0.05, eps.sqrt() * mf.v, 2.0 * eps.sqrt() * mf.v],
        seed ^ 0x0f0f,
    );
    Ok(WalkScanRow {
        scale: *scale,
        ks_statistic: norm.ks_statistic,
        ks_p_value: norm.ks_p_value,
        var_ratios: norm.var_ratios,
        exact_rate: norm.variance_rate_exact,
        analytic_band: band,
        origin_exact_zero: origin.exact_zero_fraction,
        origin_small: origin.small_fraction,
        origin_fixed_exceedance: origin.tail_rows[0].1,
        origin_tail_ok: origin.tail_ok,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let dir = cfg.out.join("chi-stats");
    std::fs::create_dir_all(&dir).ok();
    let mf = super::bundle(cfg)?;
    let mut report = Report::new(super::provenance(cfg, &mf));

    // deep-scale moment and transform checks
    let model = BlockEnergyModel::new(cfg.beta, cfg.theta, 1 << 11, mf.m_beta)?;
    let sampler = ChiSampler::new(model, 2f64.powi(-24), 64)?;
    let n = cfg.paths.max(10_000);
    let rep = moment_and_mgf_check(&sampler, n, mf.v, cfg.seed)?;
    report.record(
        "antithetic-mean-zero",
        rep.antithetic_mean == 0.0,
        format!("mean {}", rep.antithetic_mean),
    );
    report.record(
        "variance-in-band",
        rep.variance_in_bracket,
        format!("rate {} in {:?}", rep.variance_rate, rep.bracket),
    );
    report.record("transform-bound", rep.mgf_all_ok, format!("{} rows", rep.mgf_rows.len()));

    // chi sample artifact
    let series = sampler.sample_series(-500, 1001, cfg.seed ^ 0x77);
    write_csv(
        &dir.join("chi.csv"),
        &["alpha", "chi"],
        &series
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| vec![(series.first_alpha + i as i64).to_string(), fmt_f64(*v)])
            .collect::<Vec<_>>(),
    )?;
    let walk = rfkac::cumulants::chi_series_to_walk(&series, sampler.exact_chi_variance_rate())?;
    write_csv(
        &dir.join("walk.csv"),
        &["t", "value"],
        &walk
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let idx = walk.first_index + i as i64;
                vec![fmt_f64(walk.time_of_index(idx)), fmt_f64(*v)]
            })
            .collect::<Vec<_>>(),
    )?;

    // normality scan
    let mut rows = Vec::new();
    for scale in &WALK_SCAN {
        let row = walk_scan_row(scale, &mf, cfg.beta, cfg.theta, 4000, cfg.seed + 5)?;
        rows.push(row);
    }
    let last = rows.last().unwrap();
    report.record(
        "walk-normality",
        last.ks_p_value > 0.01,
        format!("KS p = {} at the finest scale", last.ks_p_value),
    );
    report.record(
        "variance-linearity",
        last.var_ratios.iter().all(|r| (*r - 1.0).abs() <= 0.1),
        format!("ratios {:?}", last.var_ratios),
    );
    report.record(
        "origin-cell-shrinks",
        rows.windows(2)
            .all(|w| w[1].origin_fixed_exceedance <= w[0].origin_fixed_exceedance + 0.02)
            && rows.iter().all(|r| r.origin_tail_ok),
        format!(
            "P[|origin| >= 0.05] along the scan: {:?} (exact zero {:?}, below 1e-6 {:?})",
            rows.iter().map(|r| r.origin_fixed_exceedance).collect::<Vec<_>>(),
            rows.iter().map(|r| r.origin_exact_zero).collect::<Vec<_>>(),
            rows.iter().map(|r| r.origin_small).collect::<Vec<_>>()
        ),
    );

    write_json(
        &dir.join("report.json"),
        &serde_json::json!({ "moments": rep, "walk_scan": rows }),
    )?;
    Ok(report)
}

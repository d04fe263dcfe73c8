//! Equilibrium thermodynamics at one parameter point: critical field,
//! equilibrium pair against the brute-force grid oracle, quadratic-minorant
//! constant, field strength, and the derived scale schedule with its
//! validation verdicts.

use super::{bundle, model_params};
use crate::io::{fmt_f64, write_json};
use crate::ExperimentConfig;
use rfkac::error::Result;
use rfkac::mean_field::{equilibrium_magnetization, free_energy, theta_c, MagnetizationPair};
use rfkac::params::{derive_schedule, validate_schedule, MeanFieldInputs};
use rfkac::report::Report;

/// Coarse-to-fine grid minimization of the free energy over the positive
/// half-plane, final resolution 1e-4.
pub fn grid_minimize(beta: f64, theta: f64) -> MagnetizationPair {
    fn scan(beta: f64, theta: f64, c1: f64, c2: f64, half: f64, res: f64, best: &mut (f64, f64, f64)) {
        let n = (2.0 * half / res).round() as i64;
        for i in 0..=n {
            let m1 = (c1 - half + i as f64 * res).clamp(-1.0, 1.0);
            for j in 0..=n {
                let m2 = (c2 - half + j as f64 * res).clamp(-1.0, 1.0);
                if m1 + m2 < 0.0 {
                    continue;
                }
                let f = free_energy(&MagnetizationPair { m1, m2 }, beta, theta).unwrap();
                if f < best.0 {
                    *best = (f, m1, m2);
                }
            }
        }
    }
    let mut best = (f64::INFINITY, 0.0f64, 0.0f64);
    scan(beta, theta, 0.0, 0.0, 1.0, 1e-2, &mut best);
    let (_, c1, c2) = best;
    scan(beta, theta, c1, c2, 2e-2, 1e-3, &mut best);
    let (_, c1, c2) = best;
    scan(beta, theta, c1, c2, 2e-3, 1e-4, &mut best);
    MagnetizationPair {
        m1: best.1,
        m2: best.2,
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let dir = cfg.out.join("mean-field");
    std::fs::create_dir_all(&dir).ok();
    let mf = bundle(cfg)?;
    let mut report = Report::new(super::provenance(cfg, &mf));

    let tc = theta_c(cfg.beta)?;
    report.record(
        "critical-field",
        cfg.theta < tc,
        format!("theta_c({}) = {tc}", cfg.beta),
    );

    let eq = equilibrium_magnetization(cfg.beta, cfg.theta)?;
    let oracle = grid_minimize(cfg.beta, cfg.theta);
    let close = (eq.m_beta.m1 - oracle.m1).abs() <= 1e-4 + 1e-12
        && (eq.m_beta.m2 - oracle.m2).abs() <= 1e-4 + 1e-12;
    report.record(
        "equilibrium-vs-grid",
        close,
        format!(
            "fixed point ({}, {}) vs grid ({}, {})",
            eq.m_beta.m1, eq.m_beta.m2, oracle.m1, oracle.m2
        ),
    );

    report.record("minorant-positive", mf.kappa > 0.0, format!("kappa = {}", mf.kappa));
    report.record("field-strength-positive", mf.v > 0.0, format!("v = {}", mf.v));
    report.record(
        "surface-tension-positive",
        mf.fstar > 0.0,
        format!("fstar = {}", mf.fstar),
    );
    let hv = (mf.h * mf.v - 2.0 * mf.fstar).abs() / (2.0 * mf.fstar);
    report.record("h-v-identity", hv <= 4.0 * f64::EPSILON, format!("rel err {hv}"));

    // schedule derivation + validation at the requested gamma
    let gamma = cfg.gamma.unwrap_or(2f64.powi(-14));
    let p = model_params(cfg, gamma);
    let schedule = derive_schedule(&p, &MeanFieldInputs::from(&mf))?;
    let verdicts = validate_schedule(&schedule, &p);

    write_json(
        &dir.join("summary.json"),
        &serde_json::json!({
            "theta_c": fmt_f64(tc).parse::<f64>().unwrap(),
            "summary": mf,
            "grid_oracle": oracle,
            "schedule": schedule,
            "schedule_verdicts": verdicts,
        }),
    )?;
    Ok(report)
}

//! Experiment drivers. Each takes the experiment configuration, writes its
//! artifacts under `out/<kind>/`, and returns a consolidated report whose
//! verdicts the binary folds into its exit status.

pub mod chi_stats;
pub mod gamma_min;
pub mod instanton;
pub mod law_convergence;
pub mod mean_field;
pub mod pipeline;
pub mod renewal;

use rfkac::error::Result;
use rfkac::mean_field::MeanFieldSummary;
use rfkac::params::{derive_schedule, validate_schedule, GFunction, MeanFieldInputs, ModelParams, ScheduleConstants};
use crate::ExperimentConfig;

/// Resolution knobs of the equilibrium computation shared by experiments.
pub const KAPPA_GRID: f64 = 5e-3;
pub const INSTANTON_SPAN: f64 = 10.0;
pub const INSTANTON_DR: f64 = 1.0 / 16.0;

/// Compute the equilibrium bundle once per run.
pub fn bundle(cfg: &ExperimentConfig) -> Result<MeanFieldSummary> {
    rfkac::mean_field::summarize(cfg.beta, cfg.theta, KAPPA_GRID, INSTANTON_SPAN, INSTANTON_DR)
}

/// Model parameters assembled from the configuration.
pub fn model_params(cfg: &ExperimentConfig, gamma: f64) -> ModelParams {
    ModelParams {
        beta: cfg.beta,
        theta: cfg.theta,
        gamma,
        d_star: cfg.overrides.d_star.unwrap_or(0.25),
        a: cfg.overrides.a.unwrap_or(1.0),
        b_exp: cfg.overrides.b_exp.unwrap_or(0.05),
        g_spec: GFunction::Log,
        consts: ScheduleConstants {
            c_beta_theta: cfg.overrides.c_beta_theta.unwrap_or(1.0),
            cte_l: cfg.overrides.cte_l.unwrap_or(1.0),
            alpha_concentration: cfg.overrides.alpha_concentration.unwrap_or(1.0),
            zeta0: cfg.overrides.zeta0,
            p_window: 2,
        },
    }
}

/// Schedule provenance block embedded into every experiment report.
pub fn provenance(cfg: &ExperimentConfig, mf: &MeanFieldSummary) -> serde_json::Value {
    let gamma = cfg.gamma.unwrap_or(2f64.powi(-14));
    let p = model_params(cfg, gamma);
    match derive_schedule(&p, &MeanFieldInputs::from(mf)) {
        Ok(s) => {
            let verdicts = validate_schedule(&s, &p);
            rfkac::params::provenance_json(&p, &s, &verdicts)
        }
        Err(e) => serde_json::json!({
            "params": p,
            "schedule_error": e.to_string(),
        }),
    }
}

//! Derivation and validation of the full scale schedule from the model
//! parameters: coarse-graining scales, accuracies, fuzziness, walk block
//! size, observation window, and the derived thresholds used by the renewal
//! and profile machinery.
//!
//! All scale parameters are kept dyadic so every grid-alignment invariant
//! holds exactly; the derivation records both the requested and the rounded
//! values. Inequality checks are evaluated from the stored exponents, so
//! they remain meaningful even when the plain values underflow.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The slowly-varying function used throughout the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GFunction {
    /// 1 v log x
    Log,
    /// 1 v log(1 v log x)
    IterLog,
    /// (x capped at `cap`) v 1
    IdentityCapped { cap: f64 },
}

impl GFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            GFunction::Log => x.ln().max(1.0),
            GFunction::IterLog => x.ln().max(1.0).ln().max(1.0),
            GFunction::IdentityCapped { cap } => x.min(*cap).max(1.0),
        }
    }

    /// Evaluate at x = 2^k without forming 2^k (stable for huge k).
    pub fn eval_pow2(&self, k: i64) -> f64 {
        let ln_x = k as f64 * std::f64::consts::LN_2;
        match self {
            GFunction::Log => ln_x.max(1.0),
            GFunction::IterLog => ln_x.max(1.0).ln().max(1.0),
            GFunction::IdentityCapped { cap } => (k as f64).exp2().min(*cap).max(1.0),
        }
    }
}

/// Constants the source material leaves unspecified, exposed as
/// configuration with neutral defaults.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScheduleConstants {
    /// multiplicative constant in the interface length and fine accuracy
    pub c_beta_theta: f64,
    /// multiplicative constant in the side-window length `l_cut`
    pub cte_l: f64,
    /// decay-rate constant entering the fine-accuracy floor check
    pub alpha_concentration: f64,
    /// cap for the accuracy parameter; defaults to m_tilde_beta / 4
    pub zeta0: Option<f64>,
    /// interval exponent used by the rough-estimate check
    pub p_window: u32,
}

impl Default for ScheduleConstants {
    fn default() -> Self {
        Self {
            c_beta_theta: 1.0,
            cte_l: 1.0,
            alpha_concentration: 1.0,
            zeta0: None,
            p_window: 2,
        }
    }
}

/// Immutable model parameters from which a schedule is derived.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub theta: f64,
    /// requested interaction-range parameter; rounded to a negative power of 2
    pub gamma: f64,
    /// exponent in the smallest coarse scale, in (0, 1/2)
    pub d_star: f64,
    /// fuzziness exponent, > 0
    pub a: f64,
    /// jump-growth exponent, in (0, 1/(8+4a))
    pub b_exp: f64,
    pub g_spec: GFunction,
    #[serde(default)]
    pub consts: ScheduleConstants,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 1.0) {
            return Err(Error::Domain(format!("beta must exceed 1, got {}", self.beta)));
        }
        if !(self.theta > 0.0) {
            return Err(Error::Domain("theta must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Domain(format!("gamma must lie in (0,1), got {}", self.gamma)));
        }
        if !(self.d_star > 0.0 && self.d_star < 0.5) {
            return Err(Error::Domain(format!("d_star must lie in (0, 1/2), got {}", self.d_star)));
        }
        if !(self.a > 0.0) {
            return Err(Error::Domain("a must be positive".into()));
        }
        let b_cap = 1.0 / (8.0 + 4.0 * self.a);
        if !(self.b_exp > 0.0 && self.b_exp < b_cap) {
            return Err(Error::Domain(format!(
                "b_exp must lie in (0, {b_cap}), got {}",
                self.b_exp
            )));
        }
        Ok(())
    }
}

/// Equilibrium quantities a schedule derivation depends on.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeanFieldInputs {
    pub fstar: f64,
    pub v: f64,
    pub kappa: f64,
    pub m_tilde_beta: f64,
}

impl From<&crate::mean_field::MeanFieldSummary> for MeanFieldInputs {
    fn from(s: &crate::mean_field::MeanFieldSummary) -> Self {
        Self {
            fstar: s.fstar,
            v: s.v,
            kappa: s.kappa,
            m_tilde_beta: s.m_tilde_beta,
        }
    }
}

/// The complete derived schedule. Scale parameters are dyadic; the stored
/// exponents are authoritative, the f64 mirrors are for convenience.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schedule {
    pub requested_gamma: f64,
    /// gamma = 2^-gamma_exp
    pub gamma_exp: i64,
    pub gamma: f64,
    /// delta_star = 2^-delta_star_exp
    pub delta_star_exp: i64,
    pub delta_star: f64,
    /// sites per coarse block, delta_star / gamma (a power of two, even)
    pub block_sites: u64,
    /// delta = 2^-delta_exp, a multiple of delta_star with 1/delta integral
    pub delta_exp: i64,
    pub delta: f64,
    pub zeta: f64,
    pub zeta0: f64,
    pub zeta5: f64,
    pub rho: f64,
    /// epsilon = eps_blocks * gamma * delta_star (dyadic)
    pub epsilon: f64,
    pub eps_blocks: u64,
    pub r2: u64,
    /// observation window; None when g is too small for the defining formula
    pub q: Option<f64>,
    pub l1: f64,
    /// side-window length cte * log(q^2 g); None with q
    pub l_cut: Option<f64>,
    pub f_q: Option<f64>,
    pub k_q: Option<f64>,
    pub g_value: f64,
    pub b_elong: f64,
    pub f_excess: f64,
    pub h: f64,
    pub fstar: f64,
    pub v: f64,
    pub kappa: f64,
}

impl Schedule {
    pub fn n_half(&self) -> u64 {
        self.block_sites / 2
    }
}

/// One row of the schedule validation report.
#[derive(Debug, Clone, Serialize)]
pub struct ConstraintVerdict {
    pub id: &'static str,
    pub description: &'static str,
    pub satisfied: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs - lhs for <= checks; margin to the nearer bound for windows
    pub slack: f64,
    /// advisory checks involve a constant the source never fixes
    pub advisory: bool,
    pub uses_default_constants: bool,
}

fn round_gamma_to_dyadic(gamma: f64) -> Result<i64> {
    let n = (-gamma.log2()).round() as i64;
    if n < 1 {
        return Err(Error::Domain(format!("gamma {gamma} too large for a dyadic in (0,1)")));
    }
    let cand = (-(n as f64)).exp2();
    if ((cand - gamma) / gamma).abs() > 0.10 {
        return Err(Error::Domain(format!(
            "no admissible dyadic gamma within 10% of {gamma} (nearest is {cand})"
        )));
    }
    Ok(n)
}

/// Derive the full schedule from the model parameters and the equilibrium
/// quantities. Dyadic rounding goes toward the larger coarse block and the
/// finer averaging scale so every alignment invariant holds exactly.
pub fn derive_schedule(p: &ModelParams, mf: &MeanFieldInputs) -> Result<Schedule> {
    p.validate()?;
    if !(mf.fstar > 0.0) {
        return Err(Error::Domain("surface tension must be positive (h undefined otherwise)".into()));
    }
    if !(mf.v > 0.0) {
        return Err(Error::Domain("field strength must be positive".into()));
    }
    if !(mf.kappa > 0.0) {
        return Err(Error::Domain("quadratic-minorant constant must be positive".into()));
    }

    let n = round_gamma_to_dyadic(p.gamma)?;
    // delta_star = gamma^(1/2 + d_star), rounded up to the next power of two
    let raw_exp = n as f64 * (0.5 + p.d_star);
    let mut m = raw_exp.floor() as i64;
    // block must contain at least 2 sites
    m = m.min(n - 1).max(0);
    let ratio_exp = n - m; // delta_star / gamma = 2^ratio_exp
    let g = p.g_spec.eval_pow2(ratio_exp);

    // averaging scale: delta = 1 / (5 sqrt(g)), rounded down to a power of two,
    // at least two coarse blocks wide
    let delta_raw = 1.0 / (5.0 * g.sqrt());
    let mut delta_exp = (-delta_raw.log2()).ceil() as i64;
    delta_exp = delta_exp.max(0).min(m - 1);
    let k_blocks_exp = m - delta_exp;
    debug_assert!(k_blocks_exp >= 1);

    let zeta0 = p.consts.zeta0.unwrap_or(mf.m_tilde_beta / 4.0);
    let zeta = (2.0 / (mf.kappa.cbrt() * g.powf(1.0 / 6.0))).min(zeta0);
    let zeta5 = 1.0 / (2f64.powi(18) * p.consts.c_beta_theta.powi(6) * g.powi(3));
    let rho = (5.0 / g).powf(1.0 / (2.0 + p.a));

    // walk block scale: epsilon = (5/g)^4 rounded down to a dyadic multiple
    // of gamma * delta_star
    let eps_raw = (5.0 / g).powi(4);
    let mut eps_exp = (-eps_raw.log2()).ceil() as i64;
    eps_exp = eps_exp.max(0).min(n + m);
    let eps_blocks_exp = (n + m) - eps_exp;
    let eps_blocks: u64 = if eps_blocks_exp < 63 { 1u64 << eps_blocks_exp } else { u64::MAX };

    let r2 = (p.consts.c_beta_theta * g.powf(3.5)).ceil().max(1.0) as u64;
    let ln_g = g.ln();
    let (q, l_cut, f_q, k_q) = if ln_g > 1.0 {
        let q = (ln_g / ln_g.ln()).exp();
        let l_cut = p.consts.cte_l * (q * q * g).ln();
        let ln_q = q.ln();
        let f_q = if ln_q > 1.0 {
            Some(((1.0 / (8.0 + 4.0 * p.a) - p.b_exp) * ln_q * ln_q.ln()).exp())
        } else {
            None
        };
        let k_q = 2.0 + 5.0 * (mf.v / (mf.fstar * mf.fstar)) * q * (q * q * g).ln();
        (Some(q), Some(l_cut), f_q, Some(k_q))
    } else {
        (None, None, None, None)
    };

    let gamma = (-(n as f64)).exp2();
    let delta_star = (-(m as f64)).exp2();
    Ok(Schedule {
        requested_gamma: p.gamma,
        gamma_exp: n,
        gamma,
        delta_star_exp: m,
        delta_star,
        block_sites: 1u64 << ratio_exp.min(62),
        delta_exp,
        delta: (-(delta_exp as f64)).exp2(),
        zeta,
        zeta0,
        zeta5,
        rho,
        epsilon: (-(eps_exp as f64)).exp2(),
        eps_blocks,
        r2,
        q,
        l1: g.powf(9.5),
        l_cut,
        f_q,
        k_q,
        g_value: g,
        b_elong: 2.0 * mf.fstar,
        f_excess: 5.0 / g,
        h: 2.0 * mf.fstar / mf.v,
        fstar: mf.fstar,
        v: mf.v,
        kappa: mf.kappa,
    })
}

/// Evaluate every scale inequality of the schedule and report pass/fail with
/// the slack. This is a report, not a gate: at desk scales several checks
/// fail by design and the caller decides what to do with that.
pub fn validate_schedule(s: &Schedule, p: &ModelParams) -> Vec<ConstraintVerdict> {
    let ln2 = std::f64::consts::LN_2;
    let n = s.gamma_exp as f64;
    let m = s.delta_star_exp as f64;
    let g = s.g_value;
    let e3 = 3f64.exp();
    let mut out = Vec::new();

    fn push(
        out: &mut Vec<ConstraintVerdict>,
        id: &'static str,
        description: &'static str,
        lhs: f64,
        rhs: f64,
        advisory: bool,
        defaults: bool,
    ) {
        out.push(ConstraintVerdict {
            id,
            description,
            satisfied: lhs <= rhs,
            lhs,
            rhs,
            slack: rhs - lhs,
            advisory,
            uses_default_constants: defaults,
        });
    }

    // (delta_star^2/gamma) g^{3/2} <= 1/(beta kappa e^3 2^13)
    let lhs = (n - 2.0 * m).exp2() * g.powf(1.5);
    let rhs = 1.0 / (p.beta * s.kappa * e3 * 2f64.powi(13));
    push(
        &mut out,
        "multibody-smallness",
        "coarse-block scale small enough for the convergent multibody expansion",
        lhs,
        rhs,
        false,
        false,
    );

    // (2 gamma/delta_star)^{1/2} (log(1/(gamma delta_star)) + log g/loglog g) <= 1/32
    let ln_ln_g = if g.ln() > 1.0 { g.ln().ln() } else { f64::NAN };
    let g_term = if ln_ln_g.is_finite() && ln_ln_g > 0.0 {
        g.ln() / ln_ln_g
    } else {
        f64::INFINITY
    };
    let lhs = (0.5 * (1.0 + m - n)).exp2() * ((n + m) * ln2 + g_term);
    push(
        &mut out,
        "lipschitz-norm-scale",
        "field-sensitivity scale of the random free energy is controllable",
        lhs,
        1.0 / 32.0,
        false,
        false,
    );

    // 12 (1+p) delta_star log(1/gamma) <= 1
    let lhs = 12.0 * (1.0 + p.consts.p_window as f64) * (-m).exp2() * (n * ln2);
    push(
        &mut out,
        "rough-estimate-scale",
        "unbalanced-site counts concentrate over the working window",
        lhs,
        1.0,
        false,
        false,
    );

    // accuracy window: 1/(kappa^{1/3} g^{1/6}) < zeta <= zeta0
    let lower = 1.0 / (s.kappa.cbrt() * g.powf(1.0 / 6.0));
    out.push(ConstraintVerdict {
        id: "accuracy-window",
        description: "accuracy parameter sits inside its admissible window",
        satisfied: lower < s.zeta && s.zeta <= s.zeta0,
        lhs: lower,
        rhs: s.zeta,
        slack: (s.zeta - lower).min(s.zeta0 - s.zeta),
        advisory: false,
        uses_default_constants: false,
    });

    // advisory: zeta >= 5184 (1+c)^2 sqrt(gamma/delta_star) v (12 e^3 beta/c' * delta_star^2/gamma)^2
    let t = (2.0 * p.beta * p.theta).tanh();
    let c_bt = t * t * (1.0 + t * t).powi(2) / ((1.0 - t * t).powi(2) * (1.0 - t).powi(6));
    let term1 = 5184.0 * (1.0 + c_bt).powi(2) * (0.5 * (m - n)).exp2();
    let term2 = {
        let d2g = (n - 2.0 * m).exp2(); // delta_star^2/gamma
        let v = 12.0 * e3 * p.beta / p.consts.c_beta_theta * d2g;
        v * v
    };
    let lhs = term1.max(term2);
    out.push(ConstraintVerdict {
        id: "accuracy-concentration",
        description: "accuracy dominates the concentration floor (unspecified constant; advisory)",
        satisfied: lhs <= s.zeta,
        lhs,
        rhs: s.zeta,
        slack: s.zeta - lhs,
        advisory: true,
        uses_default_constants: true,
    });

    // fine-accuracy floor: delta zeta5^3 >= 384 (1 + zeta gamma/delta_star + theta)
    //                     / (kappa alpha) sqrt(gamma/delta_star) log(delta_star/gamma)
    let lhs = 384.0 * (1.0 + s.zeta * (m - n).exp2() + p.theta)
        / (s.kappa * p.consts.alpha_concentration)
        * (0.5 * (m - n)).exp2()
        * ((n - m) * ln2);
    let rhs = s.delta * s.zeta5.powi(3);
    out.push(ConstraintVerdict {
        id: "fine-accuracy-floor",
        description: "fine accuracy still dominates the rough-estimate noise",
        satisfied: lhs <= rhs,
        lhs,
        rhs,
        slack: rhs - lhs,
        advisory: false,
        uses_default_constants: true,
    });

    // cutoff tail: (2 gamma/delta_star)^{1/2} log(|I|/delta_star) <= 1/32,
    // with |I| = 2 Q / gamma the full observation window in coarse units
    let lhs = match s.q {
        Some(q) => (0.5 * (1.0 + m - n)).exp2() * ((2.0 * q).ln() + (n + m) * ln2),
        None => f64::INFINITY,
    };
    push(
        &mut out,
        "cutoff-tail-scale",
        "unbalanced-fraction cutoff is rarely exceeded over the window",
        lhs,
        1.0 / 32.0,
        false,
        false,
    );

    // cluster radius: delta_star^2/gamma <= 1/(6 e^3 beta)
    let lhs = (n - 2.0 * m).exp2();
    push(
        &mut out,
        "cluster-expansion-radius",
        "multibody series radius of convergence",
        lhs,
        1.0 / (6.0 * e3 * p.beta),
        false,
        false,
    );

    // averaging scale below fuzziness: delta <= rho
    push(
        &mut out,
        "averaging-below-fuzziness",
        "averaging scale does not exceed the fuzziness",
        s.delta,
        s.rho,
        false,
        false,
    );

    out
}

/// Flat JSON provenance block: every derived quantity plus every verdict.
pub fn provenance_json(p: &ModelParams, s: &Schedule, verdicts: &[ConstraintVerdict]) -> serde_json::Value {
    serde_json::json!({
        "params": p,
        "schedule": s,
        "verdicts": verdicts,
    })
}

//! Mean-field thermodynamics of the two-component random-field model:
//! the canonical free energy on pairs of magnetizations, the phase region
//! where it has two symmetric minima, the excess free-energy functional on
//! continuum profiles, and the interface (instanton) computation that yields
//! the surface tension.

use crate::error::{Error, Result};
use serde::Serialize;

/// A pair of magnetizations, one per field-sign class, each in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MagnetizationPair {
    pub m1: f64,
    pub m2: f64,
}

impl MagnetizationPair {
    pub fn new(m1: f64, m2: f64) -> Result<Self> {
        if m1.abs() > 1.0 || m2.abs() > 1.0 {
            return Err(Error::Domain(format!(
                "magnetization out of [-1,1]: ({m1}, {m2})"
            )));
        }
        Ok(Self { m1, m2 })
    }

    /// Total magnetization (m1+m2)/2.
    pub fn m_tilde(&self) -> f64 {
        0.5 * (self.m1 + self.m2)
    }

    /// The involution (m1, m2) -> (-m2, -m1) mapping one phase onto the other.
    pub fn t_flip(&self) -> Self {
        Self {
            m1: -self.m2,
            m2: -self.m1,
        }
    }

    /// l1 distance to another pair.
    pub fn l1_dist(&self, other: &Self) -> f64 {
        (self.m1 - other.m1).abs() + (self.m2 - other.m2).abs()
    }
}

/// Binary entropy-type term; convention 0*log(0) = 0 at |m| = 1.
fn entropy_i(m: f64) -> f64 {
    debug_assert!(m.abs() <= 1.0);
    let a = 0.5 * (1.0 + m);
    let b = 0.5 * (1.0 - m);
    let ta = if a > 0.0 { a * a.ln() } else { 0.0 };
    let tb = if b > 0.0 { b * b.ln() } else { 0.0 };
    ta + tb
}

/// Canonical free energy density
/// `f(m1,m2) = -(m1+m2)^2/8 - (theta/2)(m1-m2) + (I(m1)+I(m2))/(2 beta)`.
pub fn free_energy(m: &MagnetizationPair, beta: f64, theta: f64) -> Result<f64> {
    if m.m1.abs() > 1.0 || m.m2.abs() > 1.0 {
        return Err(Error::Domain("free_energy: |m| > 1".into()));
    }
    let s = m.m1 + m.m2;
    Ok(-s * s / 8.0 - 0.5 * theta * (m.m1 - m.m2) + (entropy_i(m.m1) + entropy_i(m.m2)) / (2.0 * beta))
}

/// Partial derivatives of `free_energy` (valid for |m| < 1).
fn free_energy_grad(m: &MagnetizationPair, beta: f64, theta: f64) -> (f64, f64) {
    let s = -0.25 * (m.m1 + m.m2);
    (
        s - 0.5 * theta + m.m1.atanh() / (2.0 * beta),
        s + 0.5 * theta + m.m2.atanh() / (2.0 * beta),
    )
}

/// Critical field strength: `(1/beta) * atanh(sqrt(1 - 1/beta))`, beta > 1.
pub fn theta_c(beta: f64) -> Result<f64> {
    if beta <= 1.0 {
        return Err(Error::Domain(format!("theta_c requires beta > 1, got {beta}")));
    }
    Ok((1.0 - 1.0 / beta).sqrt().atanh() / beta)
}

/// Scalar self-consistency map for the total magnetization:
/// `phi(t) = (tanh(beta(t+theta)) + tanh(beta(t-theta)))/2`.
///
/// Stationary points of the free energy are exactly the fixed points of phi.
fn phi(t: f64, beta: f64, theta: f64) -> f64 {
    0.5 * ((beta * (t + theta)).tanh() + (beta * (t - theta)).tanh())
}

/// Count fixed points of `phi` on [-1, 1] (grid scan plus bisection polish).
fn count_stationary_points(beta: f64, theta: f64) -> usize {
    let n = 40_001usize;
    let mut count = 0usize;
    let mut prev_t = -1.0f64;
    let mut prev_v = phi(prev_t, beta, theta) - prev_t;
    for i in 1..n {
        let t = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        let v = phi(t, beta, theta) - t;
        if v == 0.0 {
            count += 1;
        } else if prev_v != 0.0 && prev_v.signum() != v.signum() {
            count += 1;
        }
        prev_t = t;
        prev_v = v;
        let _ = prev_t;
    }
    count
}

/// Membership in the phase region: exactly three stationary points of the
/// free energy, combined with the critical-field rule (strict inequality for
/// 1 < beta < 3/2, non-strict for beta >= 3/2).
pub fn in_region_e(beta: f64, theta: f64) -> bool {
    if beta <= 1.0 || theta <= 0.0 {
        return false;
    }
    let tc = match theta_c(beta) {
        Ok(v) => v,
        Err(_) => return false,
    };
    let boundary_ok = if beta < 1.5 { theta < tc } else { theta <= tc };
    boundary_ok && count_stationary_points(beta, theta) == 3
}

/// The positive equilibrium pair and its free energy.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Equilibrium {
    pub m_beta: MagnetizationPair,
    pub f_min: f64,
    pub iterations: usize,
}

/// Solve the stationarity system `m1 = tanh(beta(mt+theta))`,
/// `m2 = tanh(beta(mt-theta))` by fixed-point iteration from (1, 1).
///
/// The scalar map is increasing with slope < 1 at the positive minimum, so
/// the iterates decrease monotonically onto it. Residual target 1e-12.
pub fn equilibrium_magnetization(beta: f64, theta: f64) -> Result<Equilibrium> {
    if !in_region_e(beta, theta) {
        return Err(Error::Domain(format!(
            "({beta}, {theta}) outside the two-phase region"
        )));
    }
    let mut m1 = 1.0f64;
    let mut m2 = 1.0f64;
    for it in 0..10_000 {
        let mt = 0.5 * (m1 + m2);
        let n1 = (beta * (mt + theta)).tanh();
        let n2 = (beta * (mt - theta)).tanh();
        let res = (n1 - m1).abs().max((n2 - m2).abs());
        m1 = n1;
        m2 = n2;
        if res < 1e-12 {
            let m_beta = MagnetizationPair { m1, m2 };
            let f_min = free_energy(&m_beta, beta, theta)?;
            return Ok(Equilibrium {
                m_beta,
                f_min,
                iterations: it + 1,
            });
        }
    }
    Err(Error::Numerical(
        "equilibrium magnetization did not converge in 10^4 iterations".into(),
    ))
}

/// Result of the quadratic-minorant scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KappaEstimate {
    pub kappa: f64,
    /// grid point achieving the minimal ratio
    pub arg_m1: f64,
    pub arg_m2: f64,
}

/// Largest `kappa` with
/// `f(m) - f(m_beta) >= kappa * min(|m - m_beta|_1^2, |m - T m_beta|_1^2)`
/// over the full grid of resolution `grid_res`; grid points within one cell
/// of either minimum are excluded to avoid 0/0.
pub fn kappa_estimate(beta: f64, theta: f64, grid_res: f64) -> Result<KappaEstimate> {
    let eq = equilibrium_magnetization(beta, theta)?;
    let mb = eq.m_beta;
    let tb = mb.t_flip();
    let n = (2.0 / grid_res).round() as usize;
    let mut best = f64::INFINITY;
    let mut arg = (0.0, 0.0);
    for i in 0..=n {
        let m1 = -1.0 + 2.0 * i as f64 / n as f64;
        for j in 0..=n {
            let m2 = -1.0 + 2.0 * j as f64 / n as f64;
            let m = MagnetizationPair { m1, m2 };
            let near_min = (m1 - mb.m1).abs().max((m2 - mb.m2).abs()) <= grid_res + 1e-15
                || (m1 - tb.m1).abs().max((m2 - tb.m2).abs()) <= grid_res + 1e-15;
            if near_min {
                continue;
            }
            let d = m.l1_dist(&mb).min(m.l1_dist(&tb));
            let num = free_energy(&m, beta, theta)? - eq.f_min;
            let ratio = num / (d * d);
            if ratio < best {
                best = ratio;
                arg = (m1, m2);
            }
        }
    }
    Ok(KappaEstimate {
        kappa: best,
        arg_m1: arg.0,
        arg_m2: arg.1,
    })
}

/// Field-strength constant of the random contribution, normalized so that it
/// is the standard deviation rate of the block-energy difference:
/// `V = log[(1 + m2 tanh(2 beta theta)) / (1 - m1 tanh(2 beta theta))] / (2 beta)`.
pub fn field_strength_v(beta: f64, theta: f64) -> Result<f64> {
    Ok(phase_log_ratio(beta, theta)? / (2.0 * beta))
}

/// The raw log-ratio `log[(1 + m2 t)/(1 - m1 t)]`, `t = tanh(2 beta theta)`,
/// evaluated at the equilibrium pair. This is the per-unbalanced-site energy
/// gap between the two phases up to the factor 1/beta.
pub fn phase_log_ratio(beta: f64, theta: f64) -> Result<f64> {
    let eq = equilibrium_magnetization(beta, theta)?;
    let t = (2.0 * beta * theta).tanh();
    let num = 1.0 + eq.m_beta.m2 * t;
    let den = 1.0 - eq.m_beta.m1 * t;
    if den <= 0.0 || num <= 0.0 {
        return Err(Error::Domain("phase log ratio: non-positive argument".into()));
    }
    Ok((num / den).ln())
}

/// Boundary handling for continuum profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryPolicy {
    /// Profile continues as the negative phase to the left and the positive
    /// phase to the right of the stored window.
    ClampedPhases,
    /// No exterior contribution.
    Free,
}

/// A two-component profile sampled on a uniform grid over [-l_grid, l_grid].
#[derive(Debug, Clone, Serialize)]
pub struct ContinuumProfile {
    pub dr: f64,
    /// values at r_k = -l_grid + k*dr
    pub values: Vec<MagnetizationPair>,
    pub boundary: BoundaryPolicy,
}

impl ContinuumProfile {
    pub fn l_grid(&self) -> f64 {
        0.5 * self.dr * (self.values.len() - 1) as f64
    }

    pub fn r_at(&self, k: usize) -> f64 {
        -self.l_grid() + k as f64 * self.dr
    }

    pub fn t_flip(&self) -> Self {
        Self {
            dr: self.dr,
            values: self.values.iter().map(|m| m.t_flip()).collect(),
            boundary: self.boundary,
        }
    }
}

// Kernel half-width of the unit-range indicator interaction.
const KERNEL_HALF: f64 = 0.5;

fn trapezoid_weight(k: usize, n: usize) -> f64 {
    if k == 0 || k + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Excess free energy of a profile relative to the homogeneous phase:
/// local part by the trapezoid rule, nonlocal part with the exact indicator
/// kernel evaluated pairwise on the grid, plus exterior caps for clamped
/// boundaries.
pub fn excess_functional(
    p: &ContinuumProfile,
    beta: f64,
    theta: f64,
    eq: &Equilibrium,
) -> Result<f64> {
    if p.dr > KERNEL_HALF / 8.0 {
        return Err(Error::Precision(format!(
            "grid spacing {} coarser than 1/8 of the kernel half-width",
            p.dr
        )));
    }
    let n = p.values.len();
    let dr = p.dr;
    let mtb = eq.m_beta.m_tilde();
    let mt: Vec<f64> = p.values.iter().map(|m| m.m_tilde()).collect();

    let mut local = 0.0f64;
    for (k, m) in p.values.iter().enumerate() {
        local += trapezoid_weight(k, n) * (free_energy(m, beta, theta)? - eq.f_min);
    }
    local *= dr;

    let reach = (KERNEL_HALF / dr).floor() as usize;
    let mut nonlocal = 0.0f64;
    for k in 0..n {
        let wk = trapezoid_weight(k, n);
        let hi = (k + reach).min(n - 1);
        for l in (k + 1)..=hi {
            // exact kernel: only pairs within the interaction range contribute
            if (l - k) as f64 * dr <= KERNEL_HALF {
                let d = mt[k] - mt[l];
                nonlocal += 2.0 * wk * trapezoid_weight(l, n) * d * d;
            }
        }
    }
    nonlocal *= 0.25 * dr * dr;

    let mut caps = 0.0f64;
    if p.boundary == BoundaryPolicy::ClampedPhases {
        let l_grid = p.l_grid();
        for k in 0..n {
            let r = -l_grid + k as f64 * dr;
            let lcap = (KERNEL_HALF - (r + l_grid)).max(0.0);
            let rcap = (KERNEL_HALF - (l_grid - r)).max(0.0);
            let dm = mt[k] + mtb;
            let dp = mt[k] - mtb;
            caps += trapezoid_weight(k, n) * (lcap * dm * dm + rcap * dp * dp);
        }
        caps *= 0.5 * dr;
    }

    Ok(local + nonlocal + caps)
}

/// Analytic gradient of `excess_functional` with respect to every grid value.
pub fn excess_functional_grad(
    p: &ContinuumProfile,
    beta: f64,
    theta: f64,
    eq: &Equilibrium,
) -> Result<Vec<(f64, f64)>> {
    let n = p.values.len();
    let dr = p.dr;
    let mtb = eq.m_beta.m_tilde();
    let mt: Vec<f64> = p.values.iter().map(|m| m.m_tilde()).collect();
    let reach = (KERNEL_HALF / dr).floor() as usize;
    let l_grid = p.l_grid();

    let mut grad = vec![(0.0f64, 0.0f64); n];
    for k in 0..n {
        let wk = trapezoid_weight(k, n);
        let (g1, g2) = free_energy_grad(&p.values[k], beta, theta);
        let mut gm = 0.0f64; // d/d mt[k] of nonlocal parts
        let lo = k.saturating_sub(reach);
        let hi = (k + reach).min(n - 1);
        for l in lo..=hi {
            if l == k {
                continue;
            }
            if (l.abs_diff(k)) as f64 * dr <= KERNEL_HALF {
                gm += trapezoid_weight(l, n) * (mt[k] - mt[l]);
            }
        }
        gm *= wk * dr * dr;
        if p.boundary == BoundaryPolicy::ClampedPhases {
            let r = -l_grid + k as f64 * dr;
            let lcap = (KERNEL_HALF - (r + l_grid)).max(0.0);
            let rcap = (KERNEL_HALF - (l_grid - r)).max(0.0);
            gm += wk * dr * (lcap * (mt[k] + mtb) + rcap * (mt[k] - mtb));
        }
        grad[k] = (wk * dr * g1 + 0.5 * gm, wk * dr * g2 + 0.5 * gm);
    }
    Ok(grad)
}

/// Converged interface profile and its excess free energy (surface tension).
#[derive(Debug, Clone, Serialize)]
pub struct Instanton {
    pub profile: ContinuumProfile,
    pub fstar: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

fn project(p: &mut ContinuumProfile) {
    const CAP: f64 = 1.0 - 1e-9;
    for m in &mut p.values {
        m.m1 = m.m1.clamp(-CAP, CAP);
        m.m2 = m.m2.clamp(-CAP, CAP);
    }
    // center: force m1(0) + m2(0) = 0 at the midpoint
    let mid = (p.values.len() - 1) / 2;
    let s = 0.5 * (p.values[mid].m1 + p.values[mid].m2);
    p.values[mid].m1 -= s;
    p.values[mid].m2 += -s;
}

/// Minimize the discretized excess functional over profiles clamped to the
/// two phases outside [-l_grid, l_grid], with the centering constraint
/// m1(0)+m2(0)=0, by projected gradient descent with backtracking.
pub fn instanton(
    beta: f64,
    theta: f64,
    l_grid: f64,
    dr: f64,
    tol: f64,
) -> Result<Instanton> {
    if l_grid < 10.0 {
        return Err(Error::Precondition(format!(
            "instanton requires l_grid >= 10, got {l_grid}"
        )));
    }
    let eq = equilibrium_magnetization(beta, theta)?;
    let n = (2.0 * l_grid / dr).round() as usize + 1;
    if n % 2 == 0 {
        return Err(Error::Alignment("instanton grid must contain r = 0".into()));
    }
    let mb = eq.m_beta;
    let tb = mb.t_flip();
    let mut p = ContinuumProfile {
        dr,
        values: (0..n)
            .map(|k| {
                let r = -l_grid + k as f64 * dr;
                let s = 0.5 * (1.0 + (2.0 * r).tanh());
                MagnetizationPair {
                    m1: tb.m1 + (mb.m1 - tb.m1) * s,
                    m2: tb.m2 + (mb.m2 - tb.m2) * s,
                }
            })
            .collect(),
        boundary: BoundaryPolicy::ClampedPhases,
    };
    project(&mut p);

    let mut f_cur = excess_functional(&p, beta, theta, &eq)?;
    let mut step = 1.0f64;
    let max_iters = 500_000usize;
    for it in 0..max_iters {
        let grad = excess_functional_grad(&p, beta, theta, &eq)?;
        let gnorm = grad
            .iter()
            .map(|(a, b)| a.abs().max(b.abs()))
            .fold(0.0f64, f64::max);
        if gnorm < tol {
            return Ok(Instanton {
                profile: p,
                fstar: f_cur,
                iterations: it,
                grad_norm: gnorm,
            });
        }
        // backtracking: shrink the step until the objective does not increase
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand = p.clone();
            for (k, m) in cand.values.iter_mut().enumerate() {
                m.m1 -= step * grad[k].0;
                m.m2 -= step * grad[k].1;
            }
            project(&mut cand);
            let f_new = excess_functional(&cand, beta, theta, &eq)?;
            if f_new <= f_cur {
                p = cand;
                f_cur = f_new;
                step *= 1.25;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // step underflow: gradient no longer improves the objective
            return Ok(Instanton {
                profile: p,
                fstar: f_cur,
                iterations: it,
                grad_norm: gnorm,
            });
        }
    }
    Err(Error::Numerical(format!(
        "instanton did not reach gradient norm {tol} in {max_iters} iterations (F = {f_cur})"
    )))
}

/// Bundle of the equilibrium quantities consumed by the other modules.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeanFieldSummary {
    pub beta: f64,
    pub theta: f64,
    pub m_beta: MagnetizationPair,
    pub m_tilde_beta: f64,
    pub fstar: f64,
    pub v: f64,
    pub kappa: f64,
    pub h: f64,
}

/// Compute everything downstream modules need at one parameter point.
pub fn summarize(beta: f64, theta: f64, kappa_res: f64, l_grid: f64, dr: f64) -> Result<MeanFieldSummary> {
    let eq = equilibrium_magnetization(beta, theta)?;
    let inst = instanton(beta, theta, l_grid, dr, 1e-7)?;
    let v = field_strength_v(beta, theta)?;
    let kappa = kappa_estimate(beta, theta, kappa_res)?.kappa;
    Ok(MeanFieldSummary {
        beta,
        theta,
        m_beta: eq.m_beta,
        m_tilde_beta: eq.m_beta.m_tilde(),
        fstar: inst.fstar,
        v,
        kappa,
        h: 2.0 * inst.fstar / v,
    })
}

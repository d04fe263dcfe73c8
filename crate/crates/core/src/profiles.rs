//! Two-phase step profiles, the random rate functional that charges jump
//! mismatches and field increments, minimizer verification, a constructive
//! upper bound on the path-space (time-change) metric, and the admissible
//! perturbation class membership test.

use crate::error::{Error, Result};
use crate::mean_field::MagnetizationPair;
use crate::renewal::{ElongationRecord, RenewalRecord, WalkPath};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// One of the two pure phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    /// the positive equilibrium pair
    Plus,
    /// its flip image
    Minus,
}

impl Phase {
    pub fn flipped(self) -> Self {
        match self {
            Phase::Plus => Phase::Minus,
            Phase::Minus => Phase::Plus,
        }
    }
}

/// Right-continuous step function valued in the two equilibrium pairs,
/// stored as a start phase plus strictly increasing jump times.
#[derive(Debug, Clone, Serialize)]
pub struct StepProfile {
    /// domain [a, b); infinite ends are allowed after extension
    pub span: (f64, f64),
    pub start_phase: Phase,
    pub jumps: Vec<f64>,
    /// numeric value of the Plus phase
    pub plus_value: MagnetizationPair,
}

impl StepProfile {
    pub fn new(
        span: (f64, f64),
        start_phase: Phase,
        jumps: Vec<f64>,
        plus_value: MagnetizationPair,
    ) -> Result<Self> {
        if !(span.0 < span.1) {
            return Err(Error::Domain("empty profile span".into()));
        }
        if jumps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("jump times must be strictly increasing".into()));
        }
        if jumps
            .iter()
            .any(|&r| r <= span.0 || r >= span.1)
        {
            return Err(Error::Domain("jump outside the open span".into()));
        }
        Ok(Self {
            span,
            start_phase,
            jumps,
            plus_value,
        })
    }

    pub fn m_tilde(&self) -> f64 {
        self.plus_value.m_tilde()
    }

    pub fn phase_at(&self, r: f64) -> Phase {
        let flips = self.jumps.iter().take_while(|&&j| j <= r).count();
        if flips % 2 == 0 {
            self.start_phase
        } else {
            self.start_phase.flipped()
        }
    }

    pub fn value_at(&self, r: f64) -> MagnetizationPair {
        match self.phase_at(r) {
            Phase::Plus => self.plus_value,
            Phase::Minus => self.plus_value.t_flip(),
        }
    }

    pub fn m_tilde_at(&self, r: f64) -> f64 {
        match self.phase_at(r) {
            Phase::Plus => self.m_tilde(),
            Phase::Minus => -self.m_tilde(),
        }
    }

    pub fn jumps_in(&self, a: f64, b: f64) -> usize {
        self.jumps.iter().filter(|&&r| r >= a && r < b).count()
    }

    /// Total variation over [a, b): each jump contributes `4 m_tilde`.
    pub fn variation(&self, a: f64, b: f64) -> f64 {
        4.0 * self.m_tilde() * self.jumps_in(a, b) as f64
    }

    /// Swap the two phase values everywhere.
    pub fn t_flip(&self) -> Self {
        Self {
            start_phase: self.start_phase.flipped(),
            ..self.clone()
        }
    }

    /// Freeze the profile outside [-q, q] and extend it to the whole line.
    pub fn q_extend(&self, q: f64) -> Result<Self> {
        if self.span.0 > -q || self.span.1 < q {
            return Err(Error::Precondition(format!(
                "profile span {:?} does not cover [-{q}, {q}]",
                self.span
            )));
        }
        let start_phase = self.phase_at(-q);
        let jumps: Vec<f64> = self
            .jumps
            .iter()
            .copied()
            .filter(|&r| r > -q && r <= q)
            .collect();
        Ok(Self {
            span: (f64::NEG_INFINITY, f64::INFINITY),
            start_phase,
            jumps,
            plus_value: self.plus_value,
        })
    }

    /// Smallest gap between consecutive jumps (infinite when < 2 jumps).
    pub fn min_jump_gap(&self) -> f64 {
        self.jumps
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Partition of a profile's span into grid-snapped neighborhoods of its
/// jumps and the bulk complement.
#[derive(Debug, Clone, Serialize)]
pub struct JumpPartition {
    /// one grid-aligned interval per jump, pairwise disjoint
    pub c_intervals: Vec<(f64, f64)>,
    /// complement of the union within the span
    pub b_intervals: Vec<(f64, f64)>,
}

/// Assign to each jump the smallest interval of the `delta`-grid containing
/// the `2 rho`-ball around it. Requires `8 rho + 8 delta` below the minimal
/// jump gap so the intervals cannot collide.
pub fn partition_c_b(u: &StepProfile, rho: f64, delta: f64) -> Result<JumpPartition> {
    if !(rho > 0.0 && delta > 0.0) {
        return Err(Error::Domain("rho and delta must be positive".into()));
    }
    if 8.0 * rho + 8.0 * delta >= u.min_jump_gap() {
        return Err(Error::Precondition(format!(
            "8 rho + 8 delta = {} not below the minimal jump gap {}",
            8.0 * rho + 8.0 * delta,
            u.min_jump_gap()
        )));
    }
    let mut c_intervals = Vec::with_capacity(u.jumps.len());
    for &r in &u.jumps {
        let lo = ((r - rho) / delta).floor() * delta;
        let hi = ((r + rho) / delta).ceil() * delta;
        if lo < u.span.0 || hi > u.span.1 {
            return Err(Error::Precondition(format!(
                "jump neighborhood [{lo}, {hi}] leaves the span {:?}",
                u.span
            )));
        }
        c_intervals.push((lo, hi));
    }
    for w in c_intervals.windows(2) {
        if w[0].1 > w[1].0 {
            return Err(Error::Numerical("jump neighborhoods overlap".into()));
        }
    }
    let mut b_intervals = Vec::new();
    let mut cursor = u.span.0;
    for &(lo, hi) in &c_intervals {
        if lo > cursor {
            b_intervals.push((cursor, lo));
        }
        cursor = hi;
    }
    if cursor < u.span.1 {
        b_intervals.push((cursor, u.span.1));
    }
    Ok(JumpPartition {
        c_intervals,
        b_intervals,
    })
}

/// Step profile read off a signed elongation record: the positive phase on
/// rising elongations, the flipped phase on falling ones, jumps at the
/// certified boundaries, restricted to [-q, q].
pub fn u_star_gamma(
    rec: &ElongationRecord,
    plus_value: MagnetizationPair,
    q: f64,
) -> Result<StepProfile> {
    let certified: Vec<_> = rec.record.extrema.iter().filter(|e| e.certified).collect();
    let covers_left = certified.iter().any(|e| e.time <= -q);
    let covers_right = certified.iter().any(|e| e.time > q);
    if !(covers_left && covers_right) {
        return Err(Error::Precondition(
            "record does not cover the window on both sides (boundary-incomplete)".into(),
        ));
    }
    // phase right of a maximum boundary is the falling phase
    let last_before = certified.iter().rev().find(|e| e.time <= -q).unwrap();
    let start_phase = if last_before.is_max {
        Phase::Minus
    } else {
        Phase::Plus
    };
    let jumps: Vec<f64> = certified
        .iter()
        .filter(|e| e.time > -q && e.time < q)
        .map(|e| e.time)
        .collect();
    StepProfile::new((-q, q), start_phase, jumps, plus_value)
}

/// Step profile read off the certified threshold extrema of a sampled path:
/// the positive phase to the right of every certified minimum, the flipped
/// phase to the right of every certified maximum. An uncertified leading
/// extremum is excluded together with its interval.
pub fn u_star_from_bbm(record: &RenewalRecord, plus_value: MagnetizationPair) -> Result<StepProfile> {
    let cert: Vec<_> = record.extrema.iter().filter(|e| e.certified).collect();
    if cert.len() < 2 {
        return Err(Error::Precondition(
            "need at least two certified extrema for a profile".into(),
        ));
    }
    let start_phase = if cert[0].is_max { Phase::Minus } else { Phase::Plus };
    let span = (cert[0].time, cert[cert.len() - 1].time);
    let jumps = cert[1..cert.len() - 1].iter().map(|e| e.time).collect();
    StepProfile::new(span, start_phase, jumps, plus_value)
}

/// Constants entering the rate functional.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GammaContext {
    pub fstar: f64,
    pub v: f64,
}

/// Rate functional of `u` relative to `u_star` over `window = [a, b)`:
/// jump points of either profile split the window; each point contributes
/// half the surface tension per unit of extra jump size, minus the field
/// strength times the phase mismatch times the path increment to the next
/// point (the window edge closes the last increment).
pub fn gamma_functional(
    u: &StepProfile,
    u_star: &StepProfile,
    w: &WalkPath,
    window: (f64, f64),
    ctx: &GammaContext,
) -> Result<f64> {
    let (a, b) = window;
    if !(a < b) {
        return Err(Error::Domain("empty window".into()));
    }
    let mt = u.m_tilde();
    let mut points: Vec<f64> = u
        .jumps
        .iter()
        .chain(u_star.jumps.iter())
        .copied()
        .filter(|&r| r >= a && r < b)
        .collect();
    points.sort_by(|x, y| x.partial_cmp(y).unwrap());
    points.dedup();
    let jump_sz = 4.0 * mt;
    let mut total = 0.0f64;
    for (i, &r) in points.iter().enumerate() {
        let r_next = points.get(i + 1).copied().unwrap_or(b);
        let du = if u.jumps.binary_search_by(|p| p.partial_cmp(&r).unwrap()).is_ok() {
            jump_sz
        } else {
            0.0
        };
        let ds = if u_star
            .jumps
            .binary_search_by(|p| p.partial_cmp(&r).unwrap())
            .is_ok()
        {
            jump_sz
        } else {
            0.0
        };
        let mismatch = u.m_tilde_at(r) - u_star.m_tilde_at(r);
        let dw = w.value_at_time(r_next)? - w.value_at_time(r)?;
        total += 0.5 * ctx.fstar * (du - ds) - ctx.v * mismatch * dw;
    }
    Ok(total / (2.0 * mt))
}

/// Report of the random-perturbation minimality check.
#[derive(Debug, Clone, Serialize)]
pub struct MinimizerReport {
    pub n_perturbations: usize,
    pub min_gamma: f64,
    pub max_formula_err: f64,
    pub max_additivity_err: f64,
    pub gamma_at_minimizer: f64,
    pub all_positive: bool,
}

/// Generate random local perturbations of the minimizer (insertions of an
/// opposite interval, deletions of a stretch, boundary-touching shifts and
/// two-interval composites), evaluate the functional on each, and compare
/// against the per-case closed forms and the additivity identity.
pub fn minimizer_check(
    w: &WalkPath,
    u_star: &StepProfile,
    ctx: &GammaContext,
    n_perturb: usize,
    seed: u64,
) -> Result<MinimizerReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // stretches between consecutive jumps, with their phase
    let mut bounds = vec![u_star.span.0];
    bounds.extend(u_star.jumps.iter().copied());
    bounds.push(u_star.span.1);
    if bounds.len() < 4 {
        return Err(Error::Precondition("minimizer has too few stretches".into()));
    }
    let window = (u_star.span.0, u_star.span.1);
    let gamma_at_minimizer = gamma_functional(u_star, u_star, w, window, ctx)?;

    let dt = w.dt;
    let snap = |r: f64| (r / dt).round() * dt;
    let mut min_gamma = f64::INFINITY;
    let mut max_formula_err = 0.0f64;
    let mut max_additivity_err = 0.0f64;
    let mut all_positive = true;
    let mut done = 0usize;
    // only interior stretches have certified endpoints on both sides
    let interior = 1..bounds.len() - 2;
    if interior.is_empty() {
        return Err(Error::Precondition("no interior stretch".into()));
    }

    // draw two distinct snapped interior points of stretch j
    let draw_pair = |rng: &mut ChaCha8Rng, j: usize| -> Option<(f64, f64)> {
        let (s0, s1) = (bounds[j], bounds[j + 1]);
        if s1 - s0 < 6.0 * dt {
            return None;
        }
        for _ in 0..32 {
            let r1 = snap(s0 + (s1 - s0) * rng.gen::<f64>());
            let r2 = snap(s0 + (s1 - s0) * rng.gen::<f64>());
            let (r1, r2) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            if r1 > s0 + dt / 2.0 && r2 < s1 - dt / 2.0 && r2 - r1 > dt / 2.0 {
                return Some((r1, r2));
            }
        }
        None
    };

    let sign_of = |u_star: &StepProfile, j: usize| -> f64 {
        let mid = 0.5 * (bounds[j] + bounds[j + 1]);
        if u_star.phase_at(mid) == Phase::Plus {
            1.0
        } else {
            -1.0
        }
    };

    let insert = |r1: f64, r2: f64| -> Result<StepProfile> {
        let mut jumps = u_star.jumps.clone();
        jumps.push(r1);
        jumps.push(r2);
        jumps.sort_by(|x, y| x.partial_cmp(y).unwrap());
        StepProfile::new(u_star.span, u_star.start_phase, jumps, u_star.plus_value)
    };

    while done < n_perturb {
        let j = rng.gen_range(interior.clone());
        let s0 = bounds[j];
        let s1 = bounds[j + 1];
        let s = sign_of(u_star, j);
        let case = rng.gen_range(0..5u8);
        let (v, formula) = match case {
            0 => {
                // interval of the opposite phase strictly inside
                let Some((r1, r2)) = draw_pair(&mut rng, j) else { continue };
                let f = 2.0 * ctx.fstar
                    + s * ctx.v * (w.value_at_time(r2)? - w.value_at_time(r1)?);
                (insert(r1, r2)?, f)
            }
            1 => {
                // whole stretch flipped: its two boundary jumps vanish
                let jumps: Vec<f64> = u_star
                    .jumps
                    .iter()
                    .copied()
                    .filter(|&r| r != s0 && r != s1)
                    .collect();
                let v = StepProfile::new(u_star.span, u_star.start_phase, jumps, u_star.plus_value)?;
                let f = -2.0 * ctx.fstar
                    + s * ctx.v * (w.value_at_time(s1)? - w.value_at_time(s0)?);
                (v, f)
            }
            2 => {
                // left-touching: opposite phase on [s0, r2)
                let Some((_, r2)) = draw_pair(&mut rng, j) else { continue };
                let jumps: Vec<f64> = u_star
                    .jumps
                    .iter()
                    .copied()
                    .filter(|&r| r != s0)
                    .chain(std::iter::once(r2))
                    .collect();
                let mut jumps = jumps;
                jumps.sort_by(|x, y| x.partial_cmp(y).unwrap());
                let v = StepProfile::new(u_star.span, u_star.start_phase, jumps, u_star.plus_value)?;
                let f = s * ctx.v * (w.value_at_time(r2)? - w.value_at_time(s0)?);
                (v, f)
            }
            3 => {
                // right-touching: opposite phase on [r1, s1)
                let Some((r1, _)) = draw_pair(&mut rng, j) else { continue };
                let jumps: Vec<f64> = u_star
                    .jumps
                    .iter()
                    .copied()
                    .filter(|&r| r != s1)
                    .chain(std::iter::once(r1))
                    .collect();
                let mut jumps = jumps;
                jumps.sort_by(|x, y| x.partial_cmp(y).unwrap());
                let v = StepProfile::new(u_star.span, u_star.start_phase, jumps, u_star.plus_value)?;
                let f = s * ctx.v * (w.value_at_time(s1)? - w.value_at_time(r1)?);
                (v, f)
            }
            _ => {
                // composite: two disjoint insertions, possibly in two stretches
                let j2 = rng.gen_range(interior.clone());
                let Some((r1, r2)) = draw_pair(&mut rng, j) else { continue };
                let Some((r3, r4)) = draw_pair(&mut rng, j2) else { continue };
                if j2 == j && !(r4 < r1 || r3 > r2) {
                    continue;
                }
                let s2 = sign_of(u_star, j2);
                let v1 = insert(r1, r2)?;
                let v2 = insert(r3, r4)?;
                let mut jumps = u_star.jumps.clone();
                jumps.extend([r1, r2, r3, r4]);
                jumps.sort_by(|x, y| x.partial_cmp(y).unwrap());
                let v = StepProfile::new(u_star.span, u_star.start_phase, jumps, u_star.plus_value)?;
                let g1 = gamma_functional(&v1, u_star, w, window, ctx)?;
                let g2 = gamma_functional(&v2, u_star, w, window, ctx)?;
                let g = gamma_functional(&v, u_star, w, window, ctx)?;
                max_additivity_err = max_additivity_err.max((g - g1 - g2).abs());
                let f = 2.0 * ctx.fstar
                    + s * ctx.v * (w.value_at_time(r2)? - w.value_at_time(r1)?)
                    + 2.0 * ctx.fstar
                    + s2 * ctx.v * (w.value_at_time(r4)? - w.value_at_time(r3)?);
                (v, f)
            }
        };
        let g = gamma_functional(&v, u_star, w, window, ctx)?;
        min_gamma = min_gamma.min(g);
        if g <= 0.0 {
            all_positive = false;
        }
        max_formula_err = max_formula_err.max((g - formula).abs());
        done += 1;
    }
    Ok(MinimizerReport {
        n_perturbations: done,
        min_gamma,
        max_formula_err,
        max_additivity_err,
        gamma_at_minimizer,
        all_positive,
    })
}

/// Upper bound on the time-change (Skorohod-type) distance between two step
/// profiles: build the piecewise-linear time change matching jump points in
/// order, take the maximum of its log-slope norm and the exact
/// exponentially-weighted discrepancy integral.
pub fn skorohod_distance_upper(u: &StepProfile, v: &StepProfile) -> f64 {
    let p = &u.jumps;
    let q = &v.jumps;
    let m = p.len().min(q.len());

    // time change: lambda(p_i) = q_i on the matched prefix, slope 1 outside
    let lambda = |t: f64| -> f64 {
        if m == 0 {
            return t;
        }
        if t <= p[0] {
            return t + (q[0] - p[0]);
        }
        if t >= p[m - 1] {
            return t + (q[m - 1] - p[m - 1]);
        }
        let i = p[..m].partition_point(|&x| x <= t) - 1;
        let frac = (t - p[i]) / (p[i + 1] - p[i]);
        q[i] + frac * (q[i + 1] - q[i])
    };
    let lambda_inv = |s: f64| -> f64 {
        if m == 0 {
            return s;
        }
        if s <= q[0] {
            return s - (q[0] - p[0]);
        }
        if s >= q[m - 1] {
            return s - (q[m - 1] - p[m - 1]);
        }
        let i = q[..m].partition_point(|&x| x <= s) - 1;
        let frac = (s - q[i]) / (q[i + 1] - q[i]);
        p[i] + frac * (p[i + 1] - p[i])
    };

    let mut log_norm = 0.0f64;
    for i in 0..m.saturating_sub(1) {
        let slope = (q[i + 1] - q[i]) / (p[i + 1] - p[i]);
        log_norm = log_norm.max(slope.ln().abs());
    }

    // discrepancy cap: values differ by l1 size 4 m_tilde when phases differ
    let c0 = (4.0 * u.m_tilde()).min(1.0);

    // frozen-window discrepancy indicator at a given horizon
    let clamp = |x: f64, t: f64| x.clamp(-t, t);
    let disc_at = |t_horizon: f64| -> bool {
        let mut breaks: Vec<f64> = Vec::new();
        breaks.extend(p.iter().copied());
        breaks.extend(q.iter().map(|&s| lambda_inv(s)));
        breaks.push(t_horizon);
        breaks.push(-t_horizon);
        breaks.push(lambda_inv(t_horizon));
        breaks.push(lambda_inv(-t_horizon));
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup();
        let mut probes = Vec::with_capacity(breaks.len() * 2 + 2);
        probes.push(breaks[0] - 1.0);
        for w in breaks.windows(2) {
            probes.push(0.5 * (w[0] + w[1]));
        }
        for &bkp in &breaks {
            probes.push(bkp);
        }
        probes.push(breaks[breaks.len() - 1] + 1.0);
        probes.iter().any(|&t| {
            let a = u.value_at(clamp(t, t_horizon));
            let b = v.value_at(clamp(lambda(t), t_horizon));
            a.m1 != b.m1 || a.m2 != b.m2
        })
    };

    // integral of e^{-T} * c0 * 1{discrepancy at horizon T}: piecewise
    // constant in T between the absolute breakpoints
    let mut t_breaks: Vec<f64> = Vec::new();
    for &r in p.iter().chain(q.iter()) {
        t_breaks.push(r.abs());
        t_breaks.push(lambda(r).abs());
        t_breaks.push(lambda_inv(r).abs());
    }
    t_breaks.push(0.0);
    t_breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t_breaks.dedup();
    let mut integral = 0.0f64;
    for i in 0..t_breaks.len() {
        let t0 = t_breaks[i];
        let t1 = t_breaks.get(i + 1).copied();
        let probe = match t1 {
            Some(t1) => 0.5 * (t0 + t1),
            None => t0 + 1.0,
        };
        if disc_at(probe) {
            let upper = t1.map(|t| (-t).exp()).unwrap_or(0.0);
            integral += c0 * ((-t0).exp() - upper);
        }
    }
    log_norm.max(integral)
}

/// Membership in the admissible perturbation class around a reference
/// profile: identical tails beyond `q - 1` and total variation inside
/// `[-q, q]` at most `f_q` times the reference's.
pub fn uq_membership(u: &StepProfile, u_star: &StepProfile, q: f64, f_q: f64) -> Result<bool> {
    let ue = u.q_extend(q)?;
    let se = u_star.q_extend(q)?;
    // tails agree iff the phases agree at +-(q-1) and the jumps beyond match
    let tail_ok = {
        let right = ue.phase_at(q - 1.0) == se.phase_at(q - 1.0)
            && ue
                .jumps
                .iter()
                .filter(|&&r| r > q - 1.0)
                .eq(se.jumps.iter().filter(|&&r| r > q - 1.0));
        let left = {
            let uj: Vec<f64> = ue.jumps.iter().copied().filter(|&r| r <= -q + 1.0).collect();
            let sj: Vec<f64> = se.jumps.iter().copied().filter(|&r| r <= -q + 1.0).collect();
            ue.start_phase == se.start_phase && uj == sj
        };
        right && left
    };
    if !tail_ok {
        return Ok(false);
    }
    Ok(ue.variation(-q, q) <= se.variation(-q, q) * f_q + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::{drawdown_extrema, sample_bbm};

    fn plus_pair() -> MagnetizationPair {
        MagnetizationPair {
            m1: 0.9757,
            m2: 0.9020,
        }
    }

    fn profile(jumps: &[f64]) -> StepProfile {
        StepProfile::new((-10.0, 10.0), Phase::Minus, jumps.to_vec(), plus_pair()).unwrap()
    }

    #[test]
    fn variation_and_flip() {
        let u = profile(&[-1.0, 2.0, 5.0]);
        let mt = u.m_tilde();
        assert_eq!(u.variation(-10.0, 10.0), 12.0 * mt);
        assert_eq!(u.variation(0.0, 3.0), 4.0 * mt);
        assert_eq!(profile(&[]).variation(-10.0, 10.0), 0.0);
        let f = u.t_flip();
        assert_eq!(f.phase_at(-5.0), Phase::Plus);
        assert_eq!(u.phase_at(-5.0), Phase::Minus);
        assert_eq!(f.jumps, u.jumps);
    }

    #[test]
    fn extension_freezes_tails() {
        let u = profile(&[-1.0, 2.0, 5.0]);
        let e = u.q_extend(4.0).unwrap();
        // the jump at 5 is dropped; value beyond 4 equals the value at 4
        assert_eq!(e.jumps, vec![-1.0, 2.0]);
        assert_eq!(e.phase_at(100.0), u.phase_at(4.0));
        assert_eq!(e.phase_at(-100.0), u.phase_at(-4.0));
    }

    #[test]
    fn partition_snaps_outward() {
        let u = profile(&[0.0]);
        let p = partition_c_b(&u, 0.5, 0.25).unwrap();
        assert_eq!(p.c_intervals, vec![(-0.5, 0.5)]);
        // jump off the grid: snapped outward
        let u = profile(&[0.1]);
        let p = partition_c_b(&u, 0.5, 0.25).unwrap();
        assert_eq!(p.c_intervals, vec![(-0.5, 0.75)]);
        // two far jumps: disjoint neighborhoods plus three bulk pieces
        let u = profile(&[-5.0, 5.0]);
        let p = partition_c_b(&u, 0.5, 0.25).unwrap();
        assert_eq!(p.c_intervals.len(), 2);
        assert_eq!(p.b_intervals.len(), 3);
        // too close: precondition fails
        let u = profile(&[0.0, 1.0]);
        assert!(partition_c_b(&u, 0.5, 0.25).is_err());
    }

    fn minimizer_setup(seed: u64) -> (WalkPath, StepProfile, GammaContext) {
        let fstar = 0.15;
        let v = 0.38;
        let h = 2.0 * fstar / v;
        let w = sample_bbm(-14.0 * h * h, 14.0 * h * h, 1e-3 * h * h, seed).unwrap();
        let rec = drawdown_extrema(&w, h).unwrap();
        let u = u_star_from_bbm(&rec, plus_pair()).unwrap();
        (w, u, GammaContext { fstar, v })
    }

    #[test]
    fn minimizer_gamma_zero_and_positive_perturbations() {
        let mut found = 0;
        for seed in 0..6u64 {
            let (w, u, ctx) = minimizer_setup(seed);
            if u.jumps.len() < 2 {
                continue;
            }
            let rep = minimizer_check(&w, &u, &ctx, 300, seed + 100).unwrap();
            assert_eq!(rep.gamma_at_minimizer, 0.0);
            assert!(rep.all_positive, "seed {seed}: min gamma {}", rep.min_gamma);
            assert!(rep.max_formula_err < 1e-10, "formula err {}", rep.max_formula_err);
            assert!(rep.max_additivity_err < 1e-10);
            found += 1;
        }
        assert!(found >= 3, "too few usable paths: {found}");
    }

    #[test]
    fn gamma_t_flip_invariance() {
        // flipping both profiles together with the path sign leaves the
        // functional unchanged: phase mismatches and path increments negate
        // in pairs while jump-size differences are flip-blind
        let (w, u, ctx) = minimizer_setup(11);
        if u.jumps.len() < 2 {
            return;
        }
        let mut jumps = u.jumps.clone();
        jumps.remove(0);
        let v = StepProfile::new(u.span, u.start_phase, jumps, u.plus_value).unwrap();
        let window = (u.span.0, u.span.1);
        let neg = WalkPath::new(
            w.dt,
            w.first_index,
            w.values.iter().map(|x| -x).collect(),
            w.kind,
        )
        .unwrap();
        let g1 = gamma_functional(&v, &u, &w, window, &ctx).unwrap();
        let g2 = gamma_functional(&v.t_flip(), &u.t_flip(), &neg, window, &ctx).unwrap();
        assert!((g1 - g2).abs() < 1e-12, "{g1} vs {g2}");
    }

    #[test]
    fn metric_bound_basics() {
        let u = profile(&[-1.0, 2.0, 5.0]);
        assert_eq!(skorohod_distance_upper(&u, &u), 0.0);
        // single jump moved by s: bound vanishes as s -> 0
        let mut prev = f64::INFINITY;
        for s in [0.5, 0.1, 0.02, 0.004] {
            let a = profile(&[1.0]);
            let b = profile(&[1.0 + s]);
            let d = skorohod_distance_upper(&a, &b);
            assert!(d <= prev, "not decreasing at s={s}");
            assert!(d > 0.0);
            prev = d;
        }
        assert!(prev < 0.02);
        // symmetry
        let a = profile(&[-3.0, 0.5]);
        let b = profile(&[-2.0, 1.5, 4.0]);
        let d1 = skorohod_distance_upper(&a, &b);
        let d2 = skorohod_distance_upper(&b, &a);
        assert!((d1 - d2).abs() < 1e-12);
        assert!(d1 > 0.0);
        // differing constant profiles are far apart
        let c1 = StepProfile::new((-10.0, 10.0), Phase::Plus, vec![], plus_pair()).unwrap();
        let c2 = StepProfile::new((-10.0, 10.0), Phase::Minus, vec![], plus_pair()).unwrap();
        let d = skorohod_distance_upper(&c1, &c2);
        assert!((d - 1.0).abs() < 1e-12, "full-line mismatch: {d}");
    }

    #[test]
    fn membership_rules() {
        let q = 8.0;
        let us = profile(&[-1.0, 2.0]);
        assert!(uq_membership(&us, &us, q, 1.0).unwrap());
        // one extra pair of jumps inside [-q+1, q-1] with generous growth
        let u = profile(&[-1.0, 0.0, 0.5, 2.0]);
        assert!(uq_membership(&u, &us, q, 2.0).unwrap());
        // but not if the growth factor is too small
        assert!(!uq_membership(&u, &us, q, 1.5).unwrap());
        // tail mismatch at |r| >= q-1
        let u = profile(&[-1.0, 2.0, 7.5]);
        assert!(!uq_membership(&u, &us, q, 10.0).unwrap());
    }

    #[test]
    fn ustar_from_elongations() {
        use crate::cumulants::{chi_series_to_walk, synthetic_gaussian_series};
        use crate::renewal::maximal_elongations;
        // synthetic aggregate series wide enough to certify boundaries on
        // both sides of a [-q, q] window
        let series = synthetic_gaussian_series(0.01, 1.0, -4000, 8001, 99);
        let walk = chi_series_to_walk(&series, 1.0).unwrap();
        let (b, f) = (1.2, 0.1);
        let rec = maximal_elongations(&walk, b, f).unwrap();
        let q = 6.0;
        let certified: Vec<f64> = rec
            .record
            .extrema
            .iter()
            .filter(|e| e.certified)
            .map(|e| e.time)
            .collect();
        if !(certified.iter().any(|&t| t <= -q) && certified.iter().any(|&t| t > q)) {
            return; // window too quiet for this seed
        }
        let u = u_star_gamma(&rec, plus_pair(), q).unwrap();
        // jumps sit exactly at the certified boundary times inside the window
        let expect: Vec<f64> = certified
            .iter()
            .copied()
            .filter(|&t| t > -q && t < q)
            .collect();
        assert_eq!(u.jumps, expect);
        // values alternate by construction: the phase left of the first jump
        // matches the sign of the elongation covering -q
        assert_eq!(u.span, (-q, q));
        // a window not covered on both sides is rejected
        assert!(u_star_gamma(&rec, plus_pair(), 1e9).is_err());
        // one elongation covering the whole window gives a constant profile:
        // shrink the window into the gap around the origin when there is one
        let left = certified.iter().copied().filter(|&t| t <= 0.0).fold(f64::NEG_INFINITY, f64::max);
        let right = certified.iter().copied().filter(|&t| t > 0.0).fold(f64::INFINITY, f64::min);
        if left.is_finite() && right.is_finite() && right > 0.1 && left < -0.1 {
            let q_small = 0.9 * right.min(-left);
            let u_const = u_star_gamma(&rec, plus_pair(), q_small).unwrap();
            assert!(u_const.jumps.is_empty());
        }
    }

    #[test]
    fn ustar_label_swap_symmetry() {
        let w = sample_bbm(-6.0, 6.0, 1e-3, 5).unwrap();
        let rec = drawdown_extrema(&w, 0.8).unwrap();
        if rec.extrema.iter().filter(|e| e.certified).count() < 2 {
            return;
        }
        let u = u_star_from_bbm(&rec, plus_pair()).unwrap();
        // negating the path swaps labels, which flips the profile
        let neg = WalkPath::new(
            w.dt,
            w.first_index,
            w.values.iter().map(|v| -v).collect(),
            w.kind,
        )
        .unwrap();
        let rec_n = drawdown_extrema(&neg, 0.8).unwrap();
        let u_n = u_star_from_bbm(&rec_n, plus_pair()).unwrap();
        assert_eq!(u_n.jumps, u.jumps);
        assert_eq!(u_n.start_phase, u.start_phase.flipped());
    }
}

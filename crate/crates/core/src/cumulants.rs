//! Random energy contributions of the coarse blocks: the exact cumulant
//! generating function of the tilted constrained half-block ensemble, the
//! per-block energy difference between the two phases with its leading term
//! and residual bounds, the block-window aggregates driving the random walk,
//! and the rescaled walk with its normalization.

use crate::coarse_grain::BlockDecomposition;
use crate::error::{Error, Result};
use crate::mean_field::MagnetizationPair;
use crate::renewal::{WalkKind, WalkPath};
use crate::stats::{ln_binomial, log_sum_exp, KahanSum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

/// Inputs of one exact cumulant evaluation: a half-block of `n_half` sites
/// constrained to a fixed magnetization, of which `d` sites carry the tilt.
#[derive(Debug, Clone, Copy)]
pub struct BlockCumulantInput {
    pub n_half: u64,
    /// tilted subset size
    pub d: u64,
    /// number of +1 spins fixed by the magnetization: k = (1+m) n_half / 2
    pub k_plus: u64,
    /// tilt applied to each spin of the subset
    pub tilt: f64,
    pub beta: f64,
}

/// Exact cumulant generating function
/// `-(1/beta) log E[ exp(tilt * sum over the subset) ]`
/// under the uniform measure on half-block configurations with exactly
/// `k_plus` up-spins, via the hypergeometric split of the up-spins between
/// the subset and its complement, in log space.
pub fn cumulant_g_exact(input: &BlockCumulantInput) -> Result<f64> {
    let BlockCumulantInput {
        n_half,
        d,
        k_plus,
        tilt,
        beta,
    } = *input;
    if d > n_half || k_plus > n_half {
        return Err(Error::Domain(format!(
            "infeasible block: d = {d}, k_plus = {k_plus}, n_half = {n_half}"
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::Domain("beta must be positive".into()));
    }
    if tilt == 0.0 || d == 0 {
        return Ok(0.0);
    }
    let k_lo = k_plus.saturating_sub(n_half - d);
    let k_hi = d.min(k_plus);
    let mut terms = Vec::with_capacity((k_hi - k_lo + 1) as usize);
    for k in k_lo..=k_hi {
        // k up-spins inside the subset: subset sum = 2k - d
        let log_mult = ln_binomial(d, k) + ln_binomial(n_half - d, k_plus - k);
        terms.push(log_mult + tilt * (2.0 * k as f64 - d as f64));
    }
    let log_e = log_sum_exp(&terms) - ln_binomial(n_half, k_plus);
    Ok(-log_e / beta)
}

/// Precomputed phase-gap data for one block geometry at one parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct BlockEnergyModel {
    pub beta: f64,
    pub theta: f64,
    pub n_half: u64,
    pub m_beta: MagnetizationPair,
    /// raw log-ratio between the phases per tilted site
    pub log_ratio: f64,
    /// largest subset size passing the unbalanced-fraction cutoff
    pub cutoff_d: u64,
    /// energy difference between the phase images for majority sign +1,
    /// indexed by the subset size; the opposite sign negates the value
    pub x_table: Vec<f64>,
    /// residual envelope per tilted site
    pub weight_bound: f64,
    /// flat residual envelope
    pub flat_bound: f64,
}

fn lattice_k(m: f64, n_half: u64) -> u64 {
    (((1.0 + m) * n_half as f64) / 2.0).round() as u64
}

/// Constant of the flat residual envelope.
pub fn residual_constant(beta: f64, theta: f64) -> f64 {
    let t = (2.0 * beta * theta).tanh();
    t * t * (1.0 + t * t).powi(2) / ((1.0 - t * t).powi(2) * (1.0 - t).powi(6))
}

impl BlockEnergyModel {
    /// Build the model for blocks of `2 n_half` sites. `m_beta` is the
    /// positive equilibrium pair; its components are rounded to the block
    /// magnetization lattice before the exact evaluation.
    pub fn new(beta: f64, theta: f64, n_half: u64, m_beta: MagnetizationPair) -> Result<Self> {
        let ratio = 1.0 / n_half as f64; // 2 gamma / delta_star
        let quarter = ratio.powf(0.25);
        let cutoff_d = ((n_half as f64) * quarter).floor() as u64;
        let tilt = 2.0 * beta * theta;
        // relevant component images for majority sign +1: the minus-half
        // magnetization of each phase, i.e. m2 and -m1
        let k_phase = lattice_k(m_beta.m2, n_half);
        let k_flip = lattice_k(-m_beta.m1, n_half);
        let mut x_table = Vec::with_capacity(n_half as usize + 1);
        for d in 0..=n_half {
            let g_phase = cumulant_g_exact(&BlockCumulantInput {
                n_half,
                d,
                k_plus: k_phase,
                tilt,
                beta,
            })?;
            let g_flip = cumulant_g_exact(&BlockCumulantInput {
                n_half,
                d,
                k_plus: k_flip,
                tilt,
                beta,
            })?;
            x_table.push(g_phase - g_flip);
        }
        let t = tilt.tanh();
        let weight_bound = 64.0 * beta * theta * (1.0 + beta * theta)
            / ((1.0 - m_beta.m1) * (1.0 - m_beta.m1) * (1.0 - t))
            * (2.0 * ratio / 2.0).powf(0.25);
        let flat_bound = (2.0 * ratio / 2.0).powf(0.25) * (36.0 + 2.0 * residual_constant(beta, theta));
        let num = 1.0 + m_beta.m2 * t;
        let den = 1.0 - m_beta.m1 * t;
        Ok(Self {
            beta,
            theta,
            n_half,
            m_beta,
            log_ratio: (num / den).ln(),
            cutoff_d,
            x_table,
            weight_bound,
            flat_bound,
        })
    }

    /// Regularity window for the residual envelopes at unbalanced subset
    /// size `d`: both phase images must sit at least
    /// `max(n^{1/4}/n, 16 p beta theta / (1 - tanh(2 beta theta)))` away
    /// from saturation, with `p = d / n_half`.
    pub fn in_regularity_window(&self, d: u64) -> bool {
        let n = self.n_half as f64;
        let p = d as f64 / n;
        let t = (2.0 * self.beta * self.theta).tanh();
        let margin = (n.powf(0.25) / n).max(16.0 * p * self.beta * self.theta / (1.0 - t));
        let window = 1.0 - margin;
        self.m_beta.m1.abs() <= window && self.m_beta.m2.abs() <= window
    }

    /// Energy gap for majority sign `lambda` and subset size `d`; the sign
    /// symmetry is exact by construction.
    pub fn x_value(&self, lambda: i8, d: u64) -> f64 {
        match lambda {
            0 => 0.0,
            1 => self.x_table[d as usize],
            _ => -self.x_table[d as usize],
        }
    }

    /// Exact second moment of the cutoff block gap, `E[X^2 1{d <= cutoff}]`,
    /// from the field-count distribution of a block of `2 n_half` sites.
    pub fn exact_x_second_moment(&self) -> f64 {
        let n = 2 * self.n_half;
        let mut acc = KahanSum::new();
        for d in 1..=self.cutoff_d.min(self.n_half) {
            // P[|field sum| = 2d] = 2 C(n, n/2 + d) / 2^n
            let logp = ln_binomial(n, self.n_half + d) - n as f64 * std::f64::consts::LN_2;
            let x = self.x_table[d as usize];
            acc.add(2.0 * logp.exp() * x * x);
        }
        acc.value()
    }
}

/// Exact decomposition of one block's phase gap into the leading
/// subset-proportional term and the residual, with the envelope verdicts.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct XParts {
    pub x_exact: f64,
    pub leading: f64,
    pub residual: f64,
    pub d: u64,
    pub lambda: i8,
    /// combined residual envelope `(d * weight_bound + flat_bound)/beta`
    pub envelope: f64,
    pub admissible: bool,
    pub within_envelope: bool,
}

/// Split the phase gap of a block with majority sign `lambda` and subset
/// size `d` into `-(lambda d / beta) log_ratio` plus a residual, and test
/// the residual against its envelope. Blocks beyond the cutoff or outside
/// the regularity window are reported inadmissible (their envelope says
/// nothing).
pub fn x_decomposition(model: &BlockEnergyModel, lambda: i8, d: u64) -> Result<XParts> {
    if d > model.n_half {
        return Err(Error::Domain(format!("d = {d} exceeds n_half = {}", model.n_half)));
    }
    let x_exact = model.x_value(lambda, d);
    let leading = if lambda == 0 {
        0.0
    } else {
        -(lambda as f64) * d as f64 * model.log_ratio / model.beta
    };
    let residual = x_exact - leading;
    let envelope = (d as f64 * model.weight_bound + model.flat_bound) / model.beta;
    let admissible = lambda != 0 && d <= model.cutoff_d && model.in_regularity_window(d);
    Ok(XParts {
        x_exact,
        leading,
        residual,
        d,
        lambda,
        envelope,
        admissible,
        within_envelope: residual.abs() <= envelope,
    })
}

/// How a block-aggregate series was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChiProvenance {
    /// exact per-block gaps from sampled field counts
    ExactG,
    /// exact per-block gaps from a site-resolved field realization
    SiteResolved,
    /// iid Gaussian surrogate with the asymptotic variance
    SyntheticGaussian,
}

/// Aggregated energy gaps per walk cell.
#[derive(Debug, Clone, Serialize)]
pub struct ChiSeries {
    pub epsilon: f64,
    pub first_alpha: i64,
    pub values: Vec<f64>,
    pub provenance: ChiProvenance,
}

impl ChiSeries {
    pub fn value(&self, alpha: i64) -> Option<f64> {
        let off = alpha.checked_sub(self.first_alpha)?;
        if off < 0 {
            return None;
        }
        self.values.get(off as usize).copied()
    }

    pub fn last_alpha(&self) -> i64 {
        self.first_alpha + self.values.len() as i64 - 1
    }
}

/// Sampler of the block-aggregate series: each walk cell sums the gaps of
/// `blocks_per_cell` independent blocks, each drawn through its sufficient
/// statistic (the signed field count).
#[derive(Debug, Clone)]
pub struct ChiSampler {
    pub model: BlockEnergyModel,
    pub gamma: f64,
    pub blocks_per_cell: u64,
    pub epsilon: f64,
    binom: Binomial,
}

impl ChiSampler {
    pub fn new(model: BlockEnergyModel, gamma: f64, blocks_per_cell: u64) -> Result<Self> {
        if blocks_per_cell == 0 {
            return Err(Error::Domain("need at least one block per cell".into()));
        }
        let n = 2 * model.n_half;
        let epsilon = blocks_per_cell as f64 * gamma * (gamma * n as f64);
        // epsilon = blocks * gamma * delta_star with delta_star = gamma * n
        Ok(Self {
            binom: Binomial::new(n, 0.5).expect("valid binomial"),
            model,
            gamma,
            blocks_per_cell,
            epsilon,
        })
    }

    /// Draw the `(lambda, d)` sufficient statistic of one block. Blocks of
    /// at most 64 sites draw their field signs as one masked word.
    pub fn draw_block(&self, rng: &mut ChaCha8Rng) -> (i8, u64) {
        let n = 2 * self.model.n_half;
        let ones = if n <= 64 {
            use rand::RngCore;
            let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            (rng.next_u64() & mask).count_ones() as u64
        } else {
            self.binom.sample(rng)
        };
        let s = 2 * ones as i64 - n as i64;
        match s.cmp(&0) {
            std::cmp::Ordering::Greater => (1, (s / 2) as u64),
            std::cmp::Ordering::Less => (-1, (-s / 2) as u64),
            std::cmp::Ordering::Equal => (0, 0),
        }
    }

    /// One aggregated cell value: `gamma` times the cutoff sum of the block
    /// gaps in the cell.
    pub fn sample_chi(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut acc = KahanSum::new();
        for _ in 0..self.blocks_per_cell {
            let (lambda, d) = self.draw_block(rng);
            if lambda != 0 && d <= self.model.cutoff_d {
                acc.add(self.model.x_value(lambda, d));
            }
        }
        self.gamma * acc.value()
    }

    /// A series over `alpha` in `[first_alpha, first_alpha + len)`.
    pub fn sample_series(&self, first_alpha: i64, len: usize, seed: u64) -> ChiSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ChiSeries {
            epsilon: self.epsilon,
            first_alpha,
            values: (0..len).map(|_| self.sample_chi(&mut rng)).collect(),
            provenance: ChiProvenance::ExactG,
        }
    }

    /// Exact variance rate `E[chi^2]/epsilon` implied by the model.
    pub fn exact_chi_variance_rate(&self) -> f64 {
        // E[chi^2] = gamma^2 * blocks * E[X^2 1{cutoff}], epsilon = blocks * gamma * delta_star
        let ex2 = self.model.exact_x_second_moment();
        let delta_star = self.gamma * 2.0 * self.model.n_half as f64;
        self.gamma * ex2 / delta_star
    }
}

/// Aggregate a site-resolved decomposition into a series: cells of
/// `blocks_per_cell` blocks, gaps through the exact table, the cutoff
/// applied blockwise.
pub fn chi_aggregate(
    decomp: &BlockDecomposition,
    model: &BlockEnergyModel,
    gamma: f64,
    blocks_per_cell: u64,
    first_alpha: i64,
) -> Result<ChiSeries> {
    if decomp.n_half() != model.n_half {
        return Err(Error::Alignment("model and decomposition disagree on the block size".into()));
    }
    if decomp.splits.len() as u64 % blocks_per_cell != 0 {
        return Err(Error::Alignment(format!(
            "{} blocks do not fill whole cells of {blocks_per_cell}",
            decomp.splits.len()
        )));
    }
    let values = decomp
        .splits
        .chunks(blocks_per_cell as usize)
        .map(|cell| {
            let mut acc = KahanSum::new();
            for split in cell {
                let d = split.d_count() as u64;
                if split.lambda != 0 && d <= model.cutoff_d {
                    acc.add(model.x_value(split.lambda, d));
                }
            }
            gamma * acc.value()
        })
        .collect();
    let delta_star = gamma * 2.0 * model.n_half as f64;
    Ok(ChiSeries {
        epsilon: blocks_per_cell as f64 * gamma * delta_star,
        first_alpha,
        values,
        provenance: ChiProvenance::SiteResolved,
    })
}

/// Synthetic Gaussian surrogate series (iid centered, variance
/// `epsilon * v^2`), for exercising the renewal machinery cheaply.
pub fn synthetic_gaussian_series(
    epsilon: f64,
    v: f64,
    first_alpha: i64,
    len: usize,
    seed: u64,
) -> ChiSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = epsilon.sqrt() * v;
    ChiSeries {
        epsilon,
        first_alpha,
        values: (0..len)
            .map(|_| sd * rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect(),
        provenance: ChiProvenance::SyntheticGaussian,
    }
}

/// Bilateral cumulative walk of a series: 0 at the origin, the sum of cells
/// 1..alpha to the right, the sum of cells alpha..-1 to the left (each side
/// independent of the origin cell), divided by `sqrt(c_norm)`. Cell `alpha`
/// of the series occupies time `[alpha epsilon, (alpha+1) epsilon)`.
pub fn chi_series_to_walk(chi: &ChiSeries, c_norm: f64) -> Result<WalkPath> {
    if !(c_norm > 0.0) {
        return Err(Error::Domain("normalization must be positive".into()));
    }
    if chi.first_alpha > -1 || chi.last_alpha() < 1 {
        return Err(Error::Precondition("series must straddle the origin".into()));
    }
    let inv = 1.0 / c_norm.sqrt();
    let lo = chi.first_alpha;
    let hi = chi.last_alpha();
    let mut values = vec![0.0f64; (hi - lo + 1) as usize];
    let origin = (-lo) as usize; // walk index 0
    let mut acc = KahanSum::new();
    for alpha in 1..=hi {
        acc.add(chi.value(alpha).unwrap());
        values[origin + alpha as usize] = inv * acc.value();
    }
    let mut acc = KahanSum::new();
    for alpha in (lo..=-1).rev() {
        acc.add(chi.value(alpha).unwrap());
        values[(origin as i64 + alpha) as usize] = inv * acc.value();
    }
    WalkPath::new(chi.epsilon, lo, values, WalkKind::ChiWalk)
}

/// The three-branch cumulative convention that includes the origin cell on
/// the right and skips two cells on the left; kept for reference, the walk
/// above is the primary convention. Returns None at the one undefined index.
pub fn three_branch_cumulative(chi: &ChiSeries, alpha: i64) -> Option<f64> {
    if alpha == 0 {
        return Some(0.0);
    }
    if alpha >= 1 {
        let mut acc = KahanSum::new();
        for a in 0..=alpha {
            acc.add(chi.value(a)?);
        }
        return Some(acc.value());
    }
    if alpha < -1 {
        let mut acc = KahanSum::new();
        for a in (alpha + 1)..=-2 {
            acc.add(chi.value(a)?);
        }
        return Some(-acc.value());
    }
    None
}

/// Report of the aggregate moment and transform checks.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub n_samples: usize,
    pub antithetic_mean: f64,
    pub variance_rate: f64,
    pub variance_rate_exact: f64,
    pub bracket: (f64, f64),
    pub variance_in_bracket: bool,
    pub mgf_rows: Vec<MgfRow>,
    pub mgf_all_ok: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MgfRow {
    pub lambda: f64,
    pub empirical: f64,
    pub bound: f64,
    pub std_err: f64,
    pub ok: bool,
}

/// Sample `n` antithetic pairs of cell aggregates and test: exact mean
/// cancellation, the variance-rate bracket `v^2 (1 -+ ratio^{1/5})^2` within
/// three standard errors, and the sub-Gaussian transform bound
/// `exp(3 lambda^2 epsilon v^2/4)` at `lambda = {1,2,4}/sqrt(epsilon)` of
/// both signs.
pub fn moment_and_mgf_check(
    sampler: &ChiSampler,
    n: usize,
    v: f64,
    seed: u64,
) -> Result<MomentReport> {
    if n < 10_000 {
        return Err(Error::InsufficientData(format!(
            "moment check needs >= 10^4 samples, got {n}"
        )));
    }
    let eps = sampler.epsilon;
    let ratio = 1.0 / (2.0 * sampler.model.n_half as f64); // gamma/delta_star
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chis = Vec::with_capacity(n);
    let mut anti = KahanSum::new();
    for _ in 0..n {
        let x = sampler.sample_chi(&mut rng);
        // the field-flipped copy negates every block gap exactly
        let x_flip = -x;
        anti.add(x);
        anti.add(x_flip);
        chis.push(x);
    }
    let antithetic_mean = anti.value() / (2.0 * n as f64);

    let mut sq = KahanSum::new();
    for &x in &chis {
        sq.add(x * x);
    }
    let mean2 = sq.value() / n as f64;
    let var_of_sq = {
        let mut acc = KahanSum::new();
        for &x in &chis {
            let d = x * x - mean2;
            acc.add(d * d);
        }
        acc.value() / (n as f64 - 1.0)
    };
    let rate = mean2 / eps;
    let rate_se = (var_of_sq / n as f64).sqrt() / eps;
    let lo = v * v * (1.0 - ratio.powf(0.2)).powi(2);
    let hi = v * v * (1.0 + ratio.powf(0.2)).powi(2);
    let variance_in_bracket = rate >= lo - 3.0 * rate_se && rate <= hi + 3.0 * rate_se;

    let lambdas: Vec<f64> = [-4.0, -2.0, -1.0, 1.0, 2.0, 4.0]
        .iter()
        .map(|l| l / eps.sqrt())
        .collect();
    let mgf_rows: Vec<MgfRow> = lambdas
        .iter()
        .map(|&lambda| {
            let mut acc = KahanSum::new();
            for &x in &chis {
                acc.add((lambda * x).exp());
            }
            let emp = acc.value() / n as f64;
            let mut var = KahanSum::new();
            for &x in &chis {
                let d = (lambda * x).exp() - emp;
                var.add(d * d);
            }
            let std_err = (var.value() / (n as f64 - 1.0) / n as f64).sqrt();
            let bound = (0.75 * lambda * lambda * eps * v * v).exp();
            MgfRow {
                lambda,
                empirical: emp,
                bound,
                std_err,
                ok: emp <= bound + 3.0 * std_err,
            }
        })
        .collect();
    let mgf_all_ok = mgf_rows.iter().all(|r| r.ok);
    Ok(MomentReport {
        n_samples: n,
        antithetic_mean,
        variance_rate: rate,
        variance_rate_exact: sampler.exact_chi_variance_rate(),
        bracket: (lo, hi),
        variance_in_bracket,
        mgf_rows,
        mgf_all_ok,
    })
}

/// Normality and variance-scaling report of the rescaled cumulative walk at
/// one scale.
#[derive(Debug, Clone, Serialize)]
pub struct NormalityReport {
    pub n_paths: usize,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    /// Var(walk(t))/|t| at horizons 0.5, 1, 2
    pub var_ratios: [f64; 3],
    pub variance_rate_exact: f64,
}

/// Sample `n_paths` independent rescaled walks out to horizon 2 and compare
/// the unit-horizon marginal against the standard normal law, plus the
/// variance-over-horizon ratios. The normalization is the exact variance
/// rate of the sampler's block model.
pub fn walk_normality_check(sampler: &ChiSampler, n_paths: usize, seed: u64) -> NormalityReport {
    use rayon::prelude::*;
    let c = sampler.exact_chi_variance_rate();
    let cells_per_unit = (1.0 / sampler.epsilon).round() as usize;
    let samples: Vec<(f64, f64, f64)> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64 * 9176));
            let mut acc = 0.0;
            let mut at_half = 0.0;
            let mut at_one = 0.0;
            for alpha in 1..=(2 * cells_per_unit) {
                acc += sampler.sample_chi(&mut rng);
                if alpha == cells_per_unit / 2 {
                    at_half = acc;
                }
                if alpha == cells_per_unit {
                    at_one = acc;
                }
            }
            let norm = c.sqrt();
            (at_half / norm, at_one / norm, acc / norm)
        })
        .collect();
    let w_one: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let ks = crate::stats::ks_test_cdf(&w_one, crate::stats::normal_cdf);
    let var = |sel: fn(&(f64, f64, f64)) -> f64| {
        let xs: Vec<f64> = samples.iter().map(sel).collect();
        crate::stats::mean_var(&xs).1
    };
    NormalityReport {
        n_paths,
        ks_statistic: ks.statistic,
        ks_p_value: ks.p_value,
        var_ratios: [var(|s| s.0) / 0.5, var(|s| s.1), var(|s| s.2) / 2.0],
        variance_rate_exact: c,
    }
}

/// Origin-cell aggregate report: exact-zero frequency, small-threshold
/// frequency, and the sub-Gaussian tail comparison at a few thresholds.
#[derive(Debug, Clone, Serialize)]
pub struct OriginCellReport {
    pub exact_zero_fraction: f64,
    pub small_fraction: f64,
    pub tail_rows: Vec<(f64, f64, f64)>,
    pub tail_ok: bool,
}

/// Sample the origin cell and compare its tail with
/// `2 exp(-c^2/(3 epsilon v^2))`.
pub fn origin_cell_check(
    sampler: &ChiSampler,
    n: usize,
    v: f64,
    thresholds: &[f64],
    seed: u64,
) -> OriginCellReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chis: Vec<f64> = (0..n).map(|_| sampler.sample_chi(&mut rng)).collect();
    let exact_zero = chis.iter().filter(|&&x| x == 0.0).count() as f64 / n as f64;
    let small = chis.iter().filter(|&&x| x.abs() < 1e-6).count() as f64 / n as f64;
    let eps = sampler.epsilon;
    let mut ok = true;
    let tail_rows = thresholds
        .iter()
        .map(|&c| {
            let emp = chis.iter().filter(|&&x| x.abs() >= c).count() as f64 / n as f64;
            let bound = 2.0 * (-c * c / (3.0 * eps * v * v)).exp();
            let se = (emp.max(1.0 / n as f64) / n as f64).sqrt();
            if emp > bound + 3.0 * se {
                ok = false;
            }
            (c, emp, bound)
        })
        .collect();
    OriginCellReport {
        exact_zero_fraction: exact_zero,
        small_fraction: small,
        tail_rows,
        tail_ok: ok,
    }
}

//! Microscopic layer: the spin chain with a finite-range pair interaction of
//! strength gamma and range 1/(2 gamma), a quenched ±1 field of magnitude
//! theta, single-site Markov-chain sampling of its Gibbs measure, and exact
//! enumeration on tiny volumes.
//!
//! All energy bookkeeping is done on integer spin sums, so incremental and
//! from-scratch evaluations agree bit for bit.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Indicator pair kernel `J(i-j) = gamma * 1{ gamma |i-j| <= 1/2 }`.
#[derive(Debug, Clone, Copy)]
pub struct KacKernel {
    pub gamma: f64,
    /// inclusive interaction radius in lattice units, floor(1/(2 gamma))
    pub radius: i64,
}

impl KacKernel {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Domain(format!("gamma must lie in (0,1], got {gamma}")));
        }
        Ok(Self {
            gamma,
            radius: (1.0 / (2.0 * gamma)).floor() as i64,
        })
    }

    pub fn eval(&self, dist: i64) -> f64 {
        if dist.abs() <= self.radius {
            self.gamma
        } else {
            0.0
        }
    }
}

/// Spins and quenched field signs over a finite lattice interval.
#[derive(Debug, Clone, Serialize)]
pub struct SpinConfig {
    /// lattice index of the first site
    pub offset: i64,
    pub spins: Vec<i8>,
    pub fields: Vec<i8>,
}

impl SpinConfig {
    pub fn new(offset: i64, spins: Vec<i8>, fields: Vec<i8>) -> Result<Self> {
        if spins.len() != fields.len() {
            return Err(Error::Precondition(
                "spins and fields must share the index range".into(),
            ));
        }
        if spins.iter().chain(fields.iter()).any(|&v| v != 1 && v != -1) {
            return Err(Error::Domain("spins and fields must be +-1".into()));
        }
        Ok(Self {
            offset,
            spins,
            fields,
        })
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    /// iid random fields with the given seed.
    pub fn random_fields(offset: i64, len: usize, seed: u64) -> Vec<i8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let _ = offset;
        (0..len).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()
    }
}

/// Integer pair-sum `sum_{i,j in window} s_i s_j` (i = j included) for the
/// inclusive radius, via prefix sums; cost O(n).
fn pair_sum(spins: &[i8], radius: i64) -> i64 {
    let n = spins.len() as i64;
    let mut prefix = vec![0i64; spins.len() + 1];
    for (i, &s) in spins.iter().enumerate() {
        prefix[i + 1] = prefix[i] + s as i64;
    }
    let mut total = 0i64;
    for i in 0..n {
        let lo = (i - radius).max(0) as usize;
        let hi = ((i + radius).min(n - 1) + 1) as usize;
        total += spins[i as usize] as i64 * (prefix[hi] - prefix[lo]);
    }
    total
}

/// Energy of a configuration with open ends:
/// `H = -(1/2) sum_{i,j} J(i-j) s_i s_j - theta sum_i h_i s_i`.
///
/// The i = j self-pair is included (it shifts H by a constant -gamma/2 per
/// site and cancels from every probability ratio).
pub fn hamiltonian(c: &SpinConfig, theta: f64, kernel: &KacKernel) -> f64 {
    let pair = pair_sum(&c.spins, kernel.radius);
    let field: i64 = c
        .spins
        .iter()
        .zip(&c.fields)
        .map(|(&s, &h)| s as i64 * h as i64)
        .sum();
    -0.5 * kernel.gamma * pair as f64 - theta * field as f64
}

/// Interaction energy between a configuration and spins outside its window:
/// `W = - sum_{i in window} sum_{j outside} J(i-j) s_i t_j`.
pub fn boundary_energy(c: &SpinConfig, outside: &SpinConfig, kernel: &KacKernel) -> f64 {
    let mut cross = 0i64;
    for (ii, &s) in c.spins.iter().enumerate() {
        let i = c.offset + ii as i64;
        for (jj, &t) in outside.spins.iter().enumerate() {
            let j = outside.offset + jj as i64;
            if (i - j).abs() <= kernel.radius {
                cross += s as i64 * t as i64;
            }
        }
    }
    -kernel.gamma * cross as f64
}

/// Fenwick tree over i64 for O(log n) point updates / range sums.
#[derive(Debug, Clone)]
struct Fenwick {
    tree: Vec<i64>,
}

impl Fenwick {
    fn from_values(values: impl Iterator<Item = i64>, n: usize) -> Self {
        let mut f = Self {
            tree: vec![0; n + 1],
        };
        for (i, v) in values.enumerate() {
            f.add(i, v);
        }
        f
    }
    fn add(&mut self, mut i: usize, v: i64) {
        i += 1;
        while i < self.tree.len() {
            self.tree[i] += v;
            i += i & i.wrapping_neg();
        }
    }
    /// sum over [0, i)
    fn prefix(&self, mut i: usize) -> i64 {
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
    /// sum over [lo, hi)
    fn range(&self, lo: usize, hi: usize) -> i64 {
        self.prefix(hi) - self.prefix(lo)
    }
}

/// Update rule of the single-site chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UpdateRule {
    HeatBath,
    Metropolis,
}

/// Sampling configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SamplerConfig {
    pub burn_in_sweeps: usize,
    pub thin: usize,
    pub rule: UpdateRule,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            burn_in_sweeps: 100,
            thin: 10,
            rule: UpdateRule::HeatBath,
        }
    }
}

/// Single-site Markov chain targeting the Gibbs measure of `hamiltonian`
/// (plus optionally a fixed boundary condition).
pub struct GibbsSampler {
    pub config: SpinConfig,
    beta: f64,
    theta: f64,
    kernel: KacKernel,
    rng: ChaCha8Rng,
    sums: Fenwick,
    /// per-site integer boundary sums (fixed spins outside the window)
    bc: Vec<i64>,
    order: Vec<usize>,
    pub accepted: u64,
    pub attempted: u64,
}

impl GibbsSampler {
    pub fn new(
        config: SpinConfig,
        beta: f64,
        theta: f64,
        kernel: KacKernel,
        boundary: &[SpinConfig],
        seed: u64,
    ) -> Self {
        let n = config.len();
        let sums = Fenwick::from_values(config.spins.iter().map(|&s| s as i64), n);
        let mut bc = vec![0i64; n];
        for out in boundary {
            for (ii, b) in bc.iter_mut().enumerate() {
                let i = config.offset + ii as i64;
                for (jj, &t) in out.spins.iter().enumerate() {
                    let j = out.offset + jj as i64;
                    if (i - j).abs() <= kernel.radius {
                        *b += t as i64;
                    }
                }
            }
        }
        Self {
            config,
            beta,
            theta,
            kernel,
            rng: ChaCha8Rng::seed_from_u64(seed),
            sums,
            bc,
            order: (0..n).collect(),
            accepted: 0,
            attempted: 0,
        }
    }

    /// Local field at site index `i` (window-relative), excluding the self
    /// term: `zeta_i = gamma * sum_{j != i, |j-i| <= R} s_j + gamma * bc_i + theta h_i`.
    pub fn local_field(&self, i: usize) -> f64 {
        let n = self.config.len() as i64;
        let lo = (i as i64 - self.kernel.radius).max(0) as usize;
        let hi = ((i as i64 + self.kernel.radius).min(n - 1) + 1) as usize;
        let neigh = self.sums.range(lo, hi) - self.config.spins[i] as i64;
        self.kernel.gamma * (neigh + self.bc[i]) as f64
            + self.theta * self.config.fields[i] as f64
    }

    /// From-scratch recomputation of the windowed spin sum at `i`; used to
    /// verify the incremental bookkeeping.
    pub fn local_field_reference(&self, i: usize) -> f64 {
        let n = self.config.len() as i64;
        let lo = (i as i64 - self.kernel.radius).max(0) as usize;
        let hi = ((i as i64 + self.kernel.radius).min(n - 1) + 1) as usize;
        let mut neigh = 0i64;
        for j in lo..hi {
            if j != i {
                neigh += self.config.spins[j] as i64;
            }
        }
        self.kernel.gamma * (neigh + self.bc[i]) as f64
            + self.theta * self.config.fields[i] as f64
    }

    fn set_spin(&mut self, i: usize, s: i8) {
        let old = self.config.spins[i];
        if old != s {
            self.sums.add(i, (s - old) as i64);
            self.config.spins[i] = s;
        }
    }

    /// Probability that site `i` is +1 given the rest.
    pub fn conditional_plus(&self, i: usize) -> f64 {
        let zeta = self.local_field(i);
        1.0 / (1.0 + (-2.0 * self.beta * zeta).exp())
    }

    /// One sweep: every site updated once, in fresh random order.
    pub fn sweep(&mut self) {
        let n = self.config.len();
        let mut order = std::mem::take(&mut self.order);
        order.shuffle(&mut self.rng);
        for &i in &order {
            self.attempted += 1;
            let zeta = self.local_field(i);
            let u: f64 = self.rng.gen();
            let new = if u < 1.0 / (1.0 + (-2.0 * self.beta * zeta).exp()) {
                1i8
            } else {
                -1i8
            };
            if new != self.config.spins[i] {
                self.accepted += 1;
            }
            self.set_spin(i, new);
        }
        self.order = order;
        debug_assert_eq!(self.order.len(), n);
    }

    /// One Metropolis sweep (kept for cross-validation of the default rule).
    pub fn sweep_metropolis(&mut self) {
        let mut order = std::mem::take(&mut self.order);
        order.shuffle(&mut self.rng);
        for &i in &order {
            self.attempted += 1;
            let zeta = self.local_field(i);
            let s = self.config.spins[i] as f64;
            let delta_h = 2.0 * s * zeta;
            let accept = if delta_h <= 0.0 {
                true
            } else {
                self.rng.gen::<f64>() < (-self.beta * delta_h).exp()
            };
            if accept {
                self.accepted += 1;
                let flipped = -self.config.spins[i];
                self.set_spin(i, flipped);
            }
        }
        self.order = order;
    }

    pub fn run(&mut self, sweeps: usize, rule: UpdateRule) {
        for _ in 0..sweeps {
            match rule {
                UpdateRule::HeatBath => self.sweep(),
                UpdateRule::Metropolis => self.sweep_metropolis(),
            }
        }
    }

    pub fn magnetization(&self) -> f64 {
        self.sums.range(0, self.config.len()) as f64 / self.config.len() as f64
    }

    pub fn state_bits(&self) -> u32 {
        let mut b = 0u32;
        for (i, &s) in self.config.spins.iter().enumerate() {
            if s > 0 {
                b |= 1 << i;
            }
        }
        b
    }
}

/// Retained-sample statistics of a sampling run.
#[derive(Debug, Clone, Serialize)]
pub struct SampleRun {
    pub magnetizations: Vec<f64>,
    pub acceptance_rate: f64,
    /// integrated autocorrelation time of the magnetization series
    pub autocorr_time: f64,
}

/// Burn in, then retain one magnetization sample every `thin` sweeps.
pub fn run_sampling(
    sampler: &mut GibbsSampler,
    cfg: &SamplerConfig,
    n_samples: usize,
) -> SampleRun {
    sampler.run(cfg.burn_in_sweeps, cfg.rule);
    let mut mags = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        sampler.run(cfg.thin, cfg.rule);
        mags.push(sampler.magnetization());
    }
    let acceptance_rate = sampler.accepted as f64 / sampler.attempted.max(1) as f64;
    SampleRun {
        autocorr_time: integrated_autocorr(&mags),
        magnetizations: mags,
        acceptance_rate,
    }
}

/// Windowed integrated autocorrelation time (sum while positive).
pub fn integrated_autocorr(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 8 {
        return 1.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for k in 1..n / 4 {
        let mut c = 0.0;
        for t in 0..n - k {
            c += (series[t] - mean) * (series[t + k] - mean);
        }
        c /= (n - k) as f64 * var;
        if c <= 0.0 {
            break;
        }
        tau += 2.0 * c;
    }
    tau
}

/// Exact finite-volume distribution on at most 20 sites.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    pub log_z: f64,
    /// probability per state; bit i of the index is (s_i + 1)/2
    pub probs: Vec<f64>,
}

/// Full enumeration of all spin states of the template's window, free or
/// fixed boundary conditions. Energies are assembled from integer sums.
pub fn exact_partition(
    template: &SpinConfig,
    beta: f64,
    theta: f64,
    kernel: &KacKernel,
    boundary: &[SpinConfig],
) -> Result<ExactDistribution> {
    let n = template.len();
    if n > 20 {
        return Err(Error::Size(format!("exact enumeration capped at 20 sites, got {n}")));
    }
    let radius = kernel.radius;
    let mut bc = vec![0i64; n];
    for out in boundary {
        for (ii, b) in bc.iter_mut().enumerate() {
            let i = template.offset + ii as i64;
            for (jj, &t) in out.spins.iter().enumerate() {
                let j = out.offset + jj as i64;
                if (i - j).abs() <= radius {
                    *b += t as i64;
                }
            }
        }
    }
    let states = 1usize << n;
    let mut log_w = vec![0.0f64; states];
    let mut spins = vec![-1i8; n];
    for (state, lw) in log_w.iter_mut().enumerate() {
        for (i, s) in spins.iter_mut().enumerate() {
            *s = if state >> i & 1 == 1 { 1 } else { -1 };
        }
        let pair = pair_sum(&spins, radius);
        let field: i64 = spins
            .iter()
            .zip(&template.fields)
            .map(|(&s, &h)| s as i64 * h as i64)
            .sum();
        let cross: i64 = spins.iter().zip(&bc).map(|(&s, &b)| s as i64 * b).sum();
        // -beta * (H + W)
        *lw = beta * (0.5 * kernel.gamma * pair as f64
            + theta * field as f64
            + kernel.gamma * cross as f64);
    }
    let log_z = crate::stats::log_sum_exp(&log_w);
    let probs = log_w.iter().map(|lw| (lw - log_z).exp()).collect();
    Ok(ExactDistribution { log_z, probs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(n: i64) -> KacKernel {
        KacKernel::new((-(n as f64)).exp2()).unwrap()
    }

    /// O(n^2) reference: enumerate all pairs explicitly, on integers.
    fn hamiltonian_double_sum(c: &SpinConfig, theta: f64, k: &KacKernel) -> f64 {
        let n = c.len();
        let mut pair = 0i64;
        for i in 0..n {
            for j in 0..n {
                if (i as i64 - j as i64).abs() <= k.radius {
                    pair += c.spins[i] as i64 * c.spins[j] as i64;
                }
            }
        }
        let field: i64 = c
            .spins
            .iter()
            .zip(&c.fields)
            .map(|(&s, &h)| s as i64 * h as i64)
            .sum();
        -0.5 * k.gamma * pair as f64 - theta * field as f64
    }

    #[test]
    fn single_site_energy() {
        let k = kernel(3);
        let c = SpinConfig::new(0, vec![1], vec![1]).unwrap();
        let h = hamiltonian(&c, 0.2, &k);
        assert_eq!(h, -0.5 * k.gamma - 0.2);
        let c = SpinConfig::new(0, vec![-1], vec![1]).unwrap();
        assert_eq!(hamiltonian(&c, 0.2, &k), -0.5 * k.gamma + 0.2);
    }

    #[test]
    fn global_flip_invariance() {
        let k = kernel(4);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spins: Vec<i8> = (0..50).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let fields: Vec<i8> = (0..50).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let c = SpinConfig::new(-7, spins.clone(), fields.clone()).unwrap();
        let flipped = SpinConfig::new(
            -7,
            spins.iter().map(|s| -s).collect(),
            fields.iter().map(|h| -h).collect(),
        )
        .unwrap();
        assert_eq!(hamiltonian(&c, 0.3, &k), hamiltonian(&flipped, 0.3, &k));
    }

    #[test]
    fn sliding_window_equals_double_sum_exactly() {
        let k = kernel(4);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let spins: Vec<i8> = (0..64).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            let fields: Vec<i8> =
                (0..64).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            let c = SpinConfig::new(0, spins, fields).unwrap();
            assert_eq!(hamiltonian(&c, 0.2, &k), hamiltonian_double_sum(&c, 0.2, &k));
        }
    }

    #[test]
    fn boundary_energy_matches_direct() {
        let k = kernel(3);
        let c = SpinConfig::new(0, vec![1, -1, 1, 1], vec![1, 1, -1, 1]).unwrap();
        let out = SpinConfig::new(4, vec![-1, -1, 1], vec![1, 1, 1]).unwrap();
        let w = boundary_energy(&c, &out, &k);
        // radius 4: every (i, j) pair with |i-j| <= 4 interacts
        let mut cross = 0i64;
        for (ii, &s) in c.spins.iter().enumerate() {
            for (jj, &t) in out.spins.iter().enumerate() {
                if (ii as i64 - (4 + jj as i64)).abs() <= k.radius {
                    cross += s as i64 * t as i64;
                }
            }
        }
        assert_eq!(w, -k.gamma * cross as f64);
    }

    #[test]
    fn exact_partition_tiny_values() {
        let k = kernel(3);
        // empty volume: Z = 1
        let empty = SpinConfig::new(0, vec![], vec![]).unwrap();
        let d = exact_partition(&empty, 2.0, 0.2, &k, &[]).unwrap();
        assert_eq!(d.log_z, 0.0);
        // one site: Z = exp(beta gamma/2) 2 cosh(beta theta)
        for h0 in [1i8, -1] {
            let c = SpinConfig::new(0, vec![1], vec![h0]).unwrap();
            let d = exact_partition(&c, 2.0, 0.2, &k, &[]).unwrap();
            let expect = (2.0f64 * k.gamma / 2.0).exp() * 2.0 * (2.0f64 * 0.2).cosh();
            assert!((d.log_z - expect.ln()).abs() < 1e-13);
        }
    }

    #[test]
    fn partition_field_flip_symmetric() {
        let k = kernel(2);
        let fields = vec![1i8, -1, -1, 1, 1, -1];
        let c = SpinConfig::new(0, vec![1; 6], fields.clone()).unwrap();
        let cf = SpinConfig::new(0, vec![1; 6], fields.iter().map(|h| -h).collect()).unwrap();
        let a = exact_partition(&c, 1.7, 0.4, &k, &[]).unwrap();
        let b = exact_partition(&cf, 1.7, 0.4, &k, &[]).unwrap();
        assert!((a.log_z - b.log_z).abs() < 1e-12);
    }

    #[test]
    fn heat_bath_conditional_matches_boltzmann_ratio() {
        let k = kernel(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spins: Vec<i8> = (0..24).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let fields: Vec<i8> = (0..24).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let c = SpinConfig::new(0, spins, fields).unwrap();
        let beta = 1.4;
        let theta = 0.3;
        let s = GibbsSampler::new(c.clone(), beta, theta, k, &[], 1);
        for i in [0usize, 5, 11, 23] {
            let p = s.conditional_plus(i);
            // reference: two full-energy evaluations
            let mut plus = c.clone();
            plus.spins[i] = 1;
            let mut minus = c.clone();
            minus.spins[i] = -1;
            let hp = hamiltonian(&plus, theta, &k);
            let hm = hamiltonian(&minus, theta, &k);
            let ref_p = 1.0 / (1.0 + (-beta * (hm - hp)).exp());
            assert!((p - ref_p).abs() < 1e-14, "site {i}: {p} vs {ref_p}");
        }
    }

    #[test]
    fn incremental_fields_match_reference_after_sweeps() {
        let k = kernel(3);
        let fields = SpinConfig::random_fields(0, 40, 9);
        let c = SpinConfig::new(0, vec![1; 40], fields).unwrap();
        let mut s = GibbsSampler::new(c, 2.0, 0.2, k, &[], 5);
        s.run(25, UpdateRule::HeatBath);
        for i in 0..40 {
            assert_eq!(s.local_field(i), s.local_field_reference(i));
        }
    }

    #[test]
    fn infinite_temperature_uniform() {
        let k = kernel(2);
        let fields = SpinConfig::random_fields(0, 64, 11);
        let c = SpinConfig::new(0, vec![1; 64], fields).unwrap();
        let mut s = GibbsSampler::new(c, 0.0, 0.2, k, &[], 17);
        let n_samples = 4000;
        let mut total = 0.0;
        for _ in 0..n_samples {
            s.sweep();
            total += s.magnetization();
        }
        let mean = total / n_samples as f64;
        let bound = 4.0 / ((n_samples * 64) as f64).sqrt();
        assert!(mean.abs() < bound, "mean {mean} vs bound {bound}");
    }

    #[test]
    fn strong_field_aligns_spins() {
        let k = kernel(4);
        let fields = SpinConfig::random_fields(0, 128, 23);
        let c = SpinConfig::new(0, vec![1; 128], fields.clone()).unwrap();
        let mut s = GibbsSampler::new(c, 2.0, 10.0, k, &[], 29);
        s.run(50, UpdateRule::HeatBath);
        let mut aligned = 0usize;
        let mut count = 0usize;
        for _ in 0..20 {
            s.sweep();
            for i in 0..128 {
                count += 1;
                if s.config.spins[i] == fields[i] {
                    aligned += 1;
                }
            }
        }
        assert!(aligned as f64 / count as f64 >= 0.99);
    }

    #[test]
    fn ergodic_on_tiny_volume() {
        let k = kernel(1);
        let c = SpinConfig::new(0, vec![1, 1, 1, 1], vec![1, -1, 1, -1]).unwrap();
        let mut s = GibbsSampler::new(c, 0.5, 0.1, k, &[], 31);
        let mut seen = [false; 16];
        for _ in 0..4000 {
            s.sweep();
            seen[s.state_bits() as usize] = true;
        }
        assert!(seen.iter().all(|&b| b), "not all 16 states visited");
    }

    #[test]
    fn metropolis_agrees_with_heat_bath_on_moments() {
        let k = kernel(2);
        let fields = SpinConfig::random_fields(0, 10, 3);
        let c = SpinConfig::new(0, vec![1; 10], fields).unwrap();
        let mut hb = GibbsSampler::new(c.clone(), 1.2, 0.3, k, &[], 101);
        let mut me = GibbsSampler::new(c, 1.2, 0.3, k, &[], 202);
        let cfg_hb = SamplerConfig::default();
        let cfg_me = SamplerConfig {
            rule: UpdateRule::Metropolis,
            ..SamplerConfig::default()
        };
        let a = run_sampling(&mut hb, &cfg_hb, 4000);
        let b = run_sampling(&mut me, &cfg_me, 4000);
        let (ma, va) = crate::stats::mean_var(&a.magnetizations);
        let (mb, vb) = crate::stats::mean_var(&b.magnetizations);
        let se = ((va + vb) / 4000.0).sqrt() * (a.autocorr_time.max(b.autocorr_time)).sqrt();
        assert!(
            (ma - mb).abs() < 5.0 * se + 0.02,
            "heat bath {ma} vs metropolis {mb} (se {se})"
        );
    }
}

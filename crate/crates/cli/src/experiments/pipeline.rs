//! End-to-end qualitative pipeline at the smallest feasible interaction
//! parameter: draw a field realization, predict the interface location the
//! field prefers under mixed boundary phases, sample the chain with the
//! single-site Markov chain, coarse-grain, and check that the indicator
//! sequence shows exactly one short interface inside the predicted
//! neighborhood.

use crate::io::{fmt_f64, write_csv, write_json};
use crate::ExperimentConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rfkac::coarse_grain::{
    block_decompose, block_magnetization, detect_single_interface, eta_indicator,
    neighborhood_membership, NeighborhoodScales,
};
use rfkac::cumulants::BlockEnergyModel;
use rfkac::error::{Error, Result};
use rfkac::mean_field::{MagnetizationPair, MeanFieldSummary};
use rfkac::profiles::{Phase, StepProfile};
use rfkac::report::Report;
use rfkac::spin_model::{GibbsSampler, KacKernel, SpinConfig, UpdateRule};
use serde::Serialize;

/// Scales of the desk pipeline.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PipelineScales {
    pub gamma_exp: u32,
    pub delta_star_exp: u32,
    /// averaging scale exponent: delta = 2^-delta_exp unit lengths
    pub delta_exp: u32,
    /// window width in unit blocks
    pub window_units: usize,
    pub zeta: f64,
    pub r2: usize,
    /// interface neighborhood half-width in unit blocks
    pub rho_units: f64,
    pub burn_in: usize,
    pub extra_sweeps: usize,
}

impl Default for PipelineScales {
    fn default() -> Self {
        Self {
            gamma_exp: 14,
            delta_star_exp: 10,
            delta_exp: 4,
            window_units: 24,
            zeta: 0.25,
            r2: 2,
            rho_units: 4.0,
            burn_in: 100,
            extra_sweeps: 50,
        }
    }
}

/// Outcome of one replica.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicaOutcome {
    pub seed: u64,
    /// predicted interface location in unit blocks
    pub predicted_unit: f64,
    /// replica predicted too close to the window edge to be testable
    pub usable: bool,
    pub detected_unit: Option<usize>,
    pub zero_runs_ok: bool,
    pub interface_in_neighborhood: bool,
    pub membership: Option<bool>,
    pub passed: bool,
    /// indicator sequence over the window's unit blocks
    pub eta: Vec<i8>,
    /// (block, m1, m2, lambda, d_count, p) rows, kept on request
    #[serde(skip)]
    pub block_rows: Option<Vec<(i64, f64, f64, i8, u32, f64)>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineResult {
    pub scales: PipelineScales,
    pub replicas: Vec<ReplicaOutcome>,
    pub usable: usize,
    pub passed: usize,
}

/// Sample spins consistent with a pure phase: each site is drawn from the
/// single-site marginal of the phase pair according to its field sign.
fn phase_spins(fields: &[i8], pair: &MagnetizationPair, rng: &mut ChaCha8Rng) -> Vec<i8> {
    fields
        .iter()
        .map(|&h| {
            let m = if h == 1 { pair.m1 } else { pair.m2 };
            if rng.gen::<f64>() < 0.5 * (1.0 + m) {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// Run one replica: field draw, prediction, sampling, coarse graining and
/// the indicator checks.
pub fn run_replica(
    scales: &PipelineScales,
    beta: f64,
    theta: f64,
    m_beta: MagnetizationPair,
    model: &BlockEnergyModel,
    seed: u64,
    keep_blocks: bool,
) -> Result<ReplicaOutcome> {
    let block_sites = 1usize << (scales.gamma_exp - scales.delta_star_exp);
    let blocks_per_unit = 1usize << scales.delta_star_exp;
    let n_blocks = scales.window_units * blocks_per_unit;
    let n_sites = n_blocks * block_sites;
    let gamma = (-(scales.gamma_exp as f64)).exp2();
    let delta_star = (-(scales.delta_star_exp as f64)).exp2();
    let kernel = KacKernel::new(gamma)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<i8> = (0..n_sites).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    let decomp = block_decompose(&fields, 0, block_sites)?;

    // field-preferred interface: the boundary phases force one phase change;
    // placing it after block x costs the negated prefix sum of the block
    // energy gaps, so the best location is the (last) prefix-sum maximum
    let mut best = (f64::NEG_INFINITY, 0usize);
    let mut acc = 0.0;
    for (i, split) in decomp.splits.iter().enumerate() {
        if acc >= best.0 {
            best = (acc, i);
        }
        acc += model.x_value(split.lambda, split.d_count() as u64);
    }
    if acc >= best.0 {
        best = (acc, decomp.splits.len());
    }
    let pred_block = best.1;
    let predicted_unit = pred_block as f64 * delta_star;
    // the jump neighborhood (predicted +- rho, delta-snapped) must fit in
    // the window for the interface clauses to be testable
    let margin = scales.rho_units.max(scales.r2 as f64) + 1.0;
    let usable = predicted_unit > margin && predicted_unit < scales.window_units as f64 - margin;
    if !usable {
        return Ok(ReplicaOutcome {
            seed,
            predicted_unit,
            usable: false,
            detected_unit: None,
            zero_runs_ok: false,
            interface_in_neighborhood: false,
            membership: None,
            passed: false,
            eta: Vec::new(),
            block_rows: None,
        });
    }

    // initialize at the predicted two-phase profile and clamp both collars
    let t_beta = m_beta.t_flip();
    let mut spins = Vec::with_capacity(n_sites);
    for (i, chunk) in fields.chunks(block_sites).enumerate() {
        let pair = if i < pred_block { &t_beta } else { &m_beta };
        spins.extend(phase_spins(chunk, pair, &mut rng));
    }
    let config = SpinConfig::new(0, spins, fields.clone())?;

    let collar_len = kernel.radius as usize;
    let left_fields: Vec<i8> =
        (0..collar_len).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    let right_fields: Vec<i8> =
        (0..collar_len).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    let left = SpinConfig::new(
        -(collar_len as i64),
        phase_spins(&left_fields, &t_beta, &mut rng),
        left_fields,
    )?;
    let right = SpinConfig::new(
        n_sites as i64,
        phase_spins(&right_fields, &m_beta, &mut rng),
        right_fields,
    )?;

    let mut sampler = GibbsSampler::new(config, beta, theta, kernel, &[left, right], seed ^ 0x51f5);
    sampler.run(scales.burn_in + scales.extra_sweeps, UpdateRule::HeatBath);

    // coarse grain the final configuration
    let bp = block_magnetization(&sampler.config, &decomp)?;
    let blocks_per_cell = 1usize << (scales.delta_star_exp - scales.delta_exp);
    let cells_per_unit = 1usize << scales.delta_exp;
    let eta = eta_indicator(&bp, blocks_per_cell, cells_per_unit, scales.zeta, &m_beta)?;

    // zero runs no longer than 2 r2
    let mut zero_runs_ok = true;
    let mut run = 0usize;
    for &e in eta.iter() {
        if e == 0 {
            run += 1;
            if run > 2 * scales.r2 {
                zero_runs_ok = false;
            }
        } else {
            run = 0;
        }
    }

    let detected_unit = detect_single_interface(&eta, scales.r2);
    let interface_in_neighborhood = detected_unit
        .map(|l0| ((l0 as f64 + 0.5) - predicted_unit).abs() <= scales.rho_units + 1.0)
        .unwrap_or(false);

    // neighborhood membership of the coarse profile around the predicted
    // step profile, with unit-length scaling (the window is in unit blocks)
    let u_pred = StepProfile::new(
        (0.0, scales.window_units as f64),
        Phase::Minus,
        vec![predicted_unit],
        m_beta,
    )?;
    let membership = neighborhood_membership(
        &bp,
        &u_pred,
        &NeighborhoodScales {
            gamma: 1.0,
            delta_star,
            delta: (-(scales.delta_exp as f64)).exp2(),
            zeta: scales.zeta,
            rho: scales.rho_units,
            r2: scales.r2 as u64,
        },
        &m_beta,
    )
    .ok();

    let passed = zero_runs_ok && interface_in_neighborhood && membership == Some(true);
    let block_rows = keep_blocks.then(|| {
        let meta = bp.meta.as_ref().unwrap();
        bp.pairs
            .iter()
            .zip(meta)
            .enumerate()
            .map(|(i, (m, mt))| (i as i64, m.m1, m.m2, mt.lambda, mt.d_count, mt.p))
            .collect()
    });
    Ok(ReplicaOutcome {
        seed,
        predicted_unit,
        usable: true,
        detected_unit,
        zero_runs_ok,
        interface_in_neighborhood,
        membership,
        passed,
        eta,
        block_rows,
    })
}

/// Run replicas (in parallel, each fully seeded) until `target_usable` of
/// them were testable, capped at `max_replicas` draws.
pub fn run_pipeline(
    scales: &PipelineScales,
    beta: f64,
    theta: f64,
    mf: &MeanFieldSummary,
    target_usable: usize,
    max_replicas: usize,
    seed: u64,
) -> Result<PipelineResult> {
    let n_half = 1u64 << (scales.gamma_exp - scales.delta_star_exp - 1);
    let model = BlockEnergyModel::new(beta, theta, n_half, mf.m_beta)?;
    let mut replicas: Vec<ReplicaOutcome> = Vec::new();
    let mut batch_start = 0usize;
    while replicas.iter().filter(|r| r.usable).count() < target_usable
        && batch_start < max_replicas
    {
        let batch: Vec<ReplicaOutcome> = (batch_start..(batch_start + 8).min(max_replicas))
            .into_par_iter()
            .map(|i| {
                run_replica(
                    scales,
                    beta,
                    theta,
                    mf.m_beta,
                    &model,
                    seed.wrapping_add(i as u64 * 7907),
                    false,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        batch_start += 8;
        replicas.extend(batch);
    }
    let usable = replicas.iter().filter(|r| r.usable).count();
    let passed = replicas.iter().filter(|r| r.passed).count();
    Ok(PipelineResult {
        scales: *scales,
        replicas,
        usable,
        passed,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let dir = cfg.out.join("pipeline");
    std::fs::create_dir_all(&dir).ok();
    let mf = super::bundle(cfg)?;
    let mut report = Report::new(super::provenance(cfg, &mf));

    let scales = PipelineScales::default();
    let target = cfg.paths.clamp(4, 64);
    let res = run_pipeline(&scales, cfg.beta, cfg.theta, &mf, target, target * 4, cfg.seed)?;
    if res.usable == 0 {
        return Err(Error::InsufficientData("no usable replica".into()));
    }
    let frac = res.passed as f64 / res.usable as f64;
    report.record(
        "interface-localization",
        frac >= 0.8,
        format!("{} of {} usable replicas passed", res.passed, res.usable),
    );

    // artifacts from the first usable replica: block profile, indicator
    // sequence and the predicted step profile
    if let Some(first) = res.replicas.iter().find(|r| r.usable) {
        let n_half = 1u64 << (scales.gamma_exp - scales.delta_star_exp - 1);
        let model = BlockEnergyModel::new(cfg.beta, cfg.theta, n_half, mf.m_beta)?;
        let full = run_replica(&scales, cfg.beta, cfg.theta, mf.m_beta, &model, first.seed, true)?;
        if let Some(rows) = &full.block_rows {
            let rows: Vec<Vec<String>> = rows
                .iter()
                .map(|(b, m1, m2, l, d, p)| {
                    vec![
                        b.to_string(),
                        fmt_f64(*m1),
                        fmt_f64(*m2),
                        l.to_string(),
                        d.to_string(),
                        fmt_f64(*p),
                    ]
                })
                .collect();
            write_csv(
                &dir.join("blocks.csv"),
                &["block_index", "m1", "m2", "lambda", "d_count", "p"],
                &rows,
            )?;
        }
        write_csv(
            &dir.join("eta.csv"),
            &["l", "eta"],
            &full
                .eta
                .iter()
                .enumerate()
                .map(|(l, e)| vec![l.to_string(), e.to_string()])
                .collect::<Vec<_>>(),
        )?;
        write_csv(
            &dir.join("ustar_predicted.csv"),
            &["start_value", "jump_time"],
            &[vec!["flipped-phase".to_string(), fmt_f64(full.predicted_unit)]],
        )?;
    }
    write_json(&dir.join("report.json"), &serde_json::json!({ "result": res }))?;
    Ok(report)
}

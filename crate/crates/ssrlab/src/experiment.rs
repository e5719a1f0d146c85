//! Experiment drivers behind the CLI subcommands.

use std::time::Instant;

use anyhow::bail;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use ssrlab_core::catalysis::{analyze_swap, CatalystPostselection};
use ssrlab_core::commitment::{assemble_attack, concealing_report, CommitmentInstance};
use ssrlab_core::measure::trial_rng;
use ssrlab_core::{Charge, C64};

use crate::format::g17;

/// Default cap on the number of catalyst modes; overridden by
/// `SSRLAB_MAX_MODES`.
pub const DEFAULT_MAX_MODES: usize = 4096;

pub fn max_modes() -> anyhow::Result<usize> {
    match std::env::var("SSRLAB_MAX_MODES") {
        Ok(v) => v.trim().parse().map_err(|_| anyhow::anyhow!("SSRLAB_MAX_MODES must be a positive integer, got `{v}`")),
        Err(_) => Ok(DEFAULT_MAX_MODES),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SwapRow {
    pub n: usize,
    pub fidelity: f64,
    pub infidelity: f64,
    pub tv_distance: f64,
    pub p_k_min: f64,
    pub p_k_max: f64,
    pub wall_time_ms: f64,
}

/// Haar-random qubit amplitudes.
pub fn random_qubit<R: Rng>(rng: &mut R) -> (C64, C64) {
    let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (C64::new(v[0] / norm, v[1] / norm), C64::new(v[2] / norm, v[3] / norm))
}

#[derive(Clone, Copy, Debug)]
pub struct SwapConfig {
    /// Fixed input; random per trial when absent.
    pub input: Option<(C64, C64)>,
    pub trials: usize,
    pub seed: u64,
    pub timing: bool,
}

/// One row per `n`. Over several trials the fidelity, infidelity and TV
/// distance are averaged and the sector-probability range is the extreme
/// over all trials. Wall time is the slowest trial, or 0 without timing.
pub fn swap_scaling(ns: &[usize], config: &SwapConfig) -> anyhow::Result<Vec<SwapRow>> {
    let limit = max_modes()?;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        if n - 1 > limit {
            bail!("n = {n} needs {} catalyst modes, above the limit of {limit} (SSRLAB_MAX_MODES)", n - 1);
        }
        let trials = if config.input.is_some() { 1 } else { config.trials.max(1) };
        let (mut fid, mut tv, mut lo, mut hi, mut slowest) = (0.0, 0.0, f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for t in 0..trials {
            let (alpha, beta) = match config.input {
                Some(ab) => ab,
                None => random_qubit(&mut trial_rng(config.seed, ((n as u64) << 32) | t as u64)),
            };
            let start = Instant::now();
            let a = analyze_swap(n, alpha, beta)?;
            slowest = slowest.max(start.elapsed().as_secs_f64() * 1e3);
            fid += a.fidelity;
            tv += a.tv_distance;
            let (l, h) = a.probability_range();
            lo = lo.min(l);
            hi = hi.max(h);
        }
        let fidelity = fid / trials as f64;
        rows.push(SwapRow {
            n,
            fidelity,
            infidelity: 1.0 - fidelity,
            tv_distance: tv / trials as f64,
            p_k_min: lo,
            p_k_max: hi,
            wall_time_ms: if config.timing { slowest } else { 0.0 },
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PostselectRow {
    pub n: usize,
    pub analytic_p: f64,
    pub empirical_p: f64,
    pub trials: usize,
    pub z_score: f64,
}

pub const MIN_POSTSELECT_TRIALS: usize = 100;

/// Monte Carlo estimate of the catalyst preparation success rate; trial
/// `t` for size `n` uses its own stream derived from `(seed, n, t)`.
pub fn catalyst_postselect(ns: &[usize], trials: usize, seed: u64) -> anyhow::Result<Vec<PostselectRow>> {
    if trials < MIN_POSTSELECT_TRIALS {
        bail!("need at least {MIN_POSTSELECT_TRIALS} trials, got {trials}");
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let prep = CatalystPostselection::new(n)?;
        let p = prep.success_probability;
        let hits = (0..trials)
            .filter(|&t| prep.sample(&mut trial_rng(seed, ((n as u64) << 32) | t as u64)))
            .count();
        let empirical_p = hits as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        let z_score = if sigma > 0.0 {
            ((empirical_p - p) / sigma).abs()
        } else if empirical_p == p {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push(PostselectRow {
            n,
            analytic_p: p,
            empirical_p,
            trials,
            z_score,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorJson {
    pub k: Charge,
    pub p0: f64,
    pub p1: f64,
    /// Absent when a sector is populated in only one branch.
    pub tdist: Option<f64>,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttackJson {
    #[serde(rename = "Q_R")]
    pub total_charge: Charge,
    pub sectors: Vec<SectorJson>,
    pub concealing: bool,
    pub attack_fidelity: f64,
}

impl AttackJson {
    /// The attack fully succeeded on a concealing instance.
    pub fn complete(&self) -> bool {
        self.concealing && self.attack_fidelity >= 1.0 - 1e-10
    }
}

pub fn attack_demo(instance: &CommitmentInstance) -> anyhow::Result<AttackJson> {
    let report = concealing_report(instance)?;
    let attack = assemble_attack(instance)?;
    let sectors = report
        .sectors
        .iter()
        .map(|s| SectorJson {
            k: s.k,
            p0: s.p0,
            p1: s.p1,
            tdist: s.tdist,
            fidelity: attack.sectors.iter().find(|a| a.k == s.k).map_or(0.0, |a| a.fidelity),
        })
        .collect();
    Ok(AttackJson {
        total_charge: instance.total_charge(),
        sectors,
        concealing: report.concealing(),
        attack_fidelity: attack.overall_fidelity,
    })
}

pub trait CsvRow {
    const HEADER: &'static str;
    fn fields(&self) -> Vec<String>;
}

impl CsvRow for SwapRow {
    const HEADER: &'static str = "n,fidelity,infidelity,tv_distance,p_k_min,p_k_max,wall_time_ms";
    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            g17(self.fidelity),
            g17(self.infidelity),
            g17(self.tv_distance),
            g17(self.p_k_min),
            g17(self.p_k_max),
            g17(self.wall_time_ms),
        ]
    }
}

impl CsvRow for PostselectRow {
    const HEADER: &'static str = "n,analytic_p,empirical_p,trials,z_score";
    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            g17(self.analytic_p),
            g17(self.empirical_p),
            self.trials.to_string(),
            g17(self.z_score),
        ]
    }
}

pub fn to_csv<T: CsvRow>(rows: &[T]) -> String {
    let mut out = String::from(T::HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.fields().join(","));
        out.push('\n');
    }
    out
}

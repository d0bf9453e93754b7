//! The experiment and collision-scan studies driven by a config file.
//!
//! One experiment sweeps the channel count: for every `(N, realization)` pair
//! an instance is drawn from the configured probability interval, every
//! selected algorithm is run on it, and per-algorithm means and standard
//! deviations across realizations are written as CSV rows. The non-overlapped
//! greedy algorithm is always evaluated internally so every row can report
//! its gain relative to that reference.
//!
//! Totals are analytic wherever a closed form exists: the plain availability
//! formula for non-overlapped assignments, the ledger-based estimate for the
//! overlapped greedy. Round-robin sharing baselines have no closed form, so
//! their totals come from the Monte Carlo simulator.
//!
//! Per-realization seeds derive from the master seed with a splitmix64 chain
//! over `(study tag, M, N, realization)`, so the drawn instances do not
//! change when algorithms are added to or removed from the run.

use std::collections::BTreeMap;

use anyhow::{Context, Result};

use chanshare::analytic::{throughput_nonoverlapped, total_throughput_overlapped_estimate};
use chanshare::assign::{assign_nonoverlapped, assign_overlapped, assign_round_robin};
use chanshare::instance::{generate_instance, Assignment, ProblemInstance};
use chanshare::mac::{self, MacConfig};
use chanshare::simulate::{simulate, SimConfig};
use chanshare::Error as CoreError;

use crate::config::{Algorithm, ExperimentConfig};

/// Exact column set of the experiment CSV.
pub const EXPERIMENT_CSV_HEADER: &str =
    "label,algorithm,M,N,R,W,delta,total_mean,total_std,gain_vs_alg1,collision_prob,sim_total,sim_stderr,error";

pub const SCAN_CSV_HEADER: &str = "label,M,N,W,collision_prob,sim_collision_rate";

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn chain_seed(master: u64, tag: u64, m: usize, n: usize, r: u32) -> u64 {
    let mut s = splitmix64(master ^ tag);
    s = splitmix64(s ^ m as u64);
    s = splitmix64(s ^ n as u64);
    splitmix64(s ^ r as u64)
}

/// Seed of the instance drawn for `(M, N, realization)`. Depends only on the
/// master seed and the grid point.
pub fn instance_seed(master: u64, m: usize, n: usize, r: u32) -> u64 {
    chain_seed(master, 0x696e_7374, m, n, r) // "inst"
}

/// Seed of a simulation run; algorithms get disjoint streams.
pub fn sim_seed(master: u64, m: usize, n: usize, r: u32, alg: Algorithm) -> u64 {
    let tag = match alg {
        Algorithm::Alg1 => 1,
        Algorithm::Alg2 => 2,
        Algorithm::RoundRobin(k) => 100 + k as u64,
    };
    splitmix64(chain_seed(master, 0x7369_6d75, m, n, r) ^ tag) // "simu"
}

/// One aggregated CSV row.
#[derive(Debug, Clone)]
pub struct ExperimentRow {
    pub label: String,
    pub algorithm: Algorithm,
    pub m: usize,
    pub n: usize,
    pub realizations: u32,
    pub window_mean: f64,
    pub delta_mean: f64,
    pub total_mean: f64,
    pub total_std: f64,
    pub gain_vs_alg1: Option<f64>,
    pub collision_prob: f64,
    pub sim_total: Option<f64>,
    pub sim_stderr: Option<f64>,
    pub error: String,
}

impl ExperimentRow {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        format!(
            "{},{},{},{},{},{:.2},{:.6},{:.6},{:.6},{},{:.6},{},{},{}",
            self.label,
            self.algorithm,
            self.m,
            self.n,
            self.realizations,
            self.window_mean,
            self.delta_mean,
            self.total_mean,
            self.total_std,
            opt(self.gain_vs_alg1),
            self.collision_prob,
            opt(self.sim_total),
            opt(self.sim_stderr),
            self.error,
        )
    }
}

/// Outcome of one algorithm on one realization.
struct Evaluation {
    total: f64,
    window: u32,
    delta: f64,
    collision_prob: f64,
    sim: Option<(f64, f64)>,
    note: Option<String>,
}

fn nonoverlapped_total(inst: &ProblemInstance, asg: &Assignment) -> Result<f64, CoreError> {
    let mut total = 0.0;
    for user in 0..inst.num_users {
        total += throughput_nonoverlapped(inst, &asg.private_sets[user], user)?;
    }
    Ok(total)
}

/// Solves the window, falling back to the largest overhead-feasible one when
/// the collision target is unreachable (heavily shared P-blind baselines).
fn window_or_cap(
    inst: &ProblemInstance,
    asg: &Assignment,
    cfg: &MacConfig,
) -> Result<(u32, Option<String>), CoreError> {
    let cap = mac::max_feasible_window(cfg)?;
    let capped = MacConfig {
        w_max: cfg.w_max.min(cap),
        ..cfg.clone()
    };
    match mac::solve_window(inst, asg, &capped) {
        Ok(w) => Ok((w, None)),
        Err(CoreError::WindowSolverFailure { w_max, p_at_w_max }) => Ok((
            w_max,
            Some(format!("window capped at {w_max} (P_c {p_at_w_max:.4})")),
        )),
        Err(e) => Err(e),
    }
}

fn evaluate(
    alg: Algorithm,
    inst: &ProblemInstance,
    cfg: &ExperimentConfig,
    sim_seed: u64,
) -> Result<Evaluation, CoreError> {
    let mac_cfg = &cfg.mac;
    let mut note = None;
    let (asg, total, window, delta) = match alg {
        Algorithm::Alg1 => {
            let (asg, _) = assign_nonoverlapped(inst);
            let total = nonoverlapped_total(inst, &asg)?;
            let w = mac::solve_window(inst, &asg, mac_cfg)?;
            (asg, total, w, mac::overhead(mac_cfg, w)?)
        }
        Algorithm::Alg2 => {
            let (asg, derived, trace) = assign_overlapped(inst, &cfg.alg2, mac_cfg)?;
            let est = total_throughput_overlapped_estimate(inst, &asg, &trace, derived.overhead)?;
            (asg, est.total, derived.window, derived.overhead)
        }
        Algorithm::RoundRobin(1) => {
            let asg = assign_round_robin(inst, 1)?;
            let total = nonoverlapped_total(inst, &asg)?;
            let w = mac::solve_window(inst, &asg, mac_cfg)?;
            (asg, total, w, mac::overhead(mac_cfg, w)?)
        }
        Algorithm::RoundRobin(k) => {
            let asg = assign_round_robin(inst, k)?;
            let (w, cap_note) = window_or_cap(inst, &asg, mac_cfg)?;
            note = cap_note;
            // no closed form for shared P-blind throughput: simulate it
            (asg, f64::NAN, w, mac::overhead(mac_cfg, w)?)
        }
    };
    let collision_prob = mac::first_collision_prob(inst, &asg, window)?;

    let needs_sim = cfg.sim.enabled || total.is_nan();
    let mut sim = None;
    let mut total = total;
    if needs_sim {
        let sim_cfg = SimConfig {
            num_cycles: cfg.sim.cycles,
            seed: sim_seed,
            window: cfg.sim.window.unwrap_or(window),
            overhead_model: cfg.sim.overhead_model,
            collision_event: cfg.sim.collision_event,
        };
        let report = simulate(inst, &asg, mac_cfg, &sim_cfg)?;
        sim = Some((report.total_throughput, report.total_stderr));
        if total.is_nan() {
            total = report.total_throughput;
        }
    }
    Ok(Evaluation {
        total,
        window,
        delta,
        collision_prob,
        sim,
        note,
    })
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Runs the full experiment grid and returns the aggregated rows, sorted by
/// `(algorithm, M, N)`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    let inst_cfg = &cfg.instance;
    let user_counts = inst_cfg.user_counts();
    let mut n_values = inst_cfg.n_values.clone();
    n_values.sort_unstable();
    n_values.dedup();

    // evaluate alg1 on every grid point regardless of selection: it is the
    // reference for the gain column
    let mut algorithms = cfg.run.algorithms.clone();
    algorithms.sort_unstable();
    algorithms.dedup();
    let selected = algorithms.clone();
    if !algorithms.contains(&Algorithm::Alg1) {
        algorithms.push(Algorithm::Alg1);
    }

    let mut rows = Vec::new();
    let mut alg1_means: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut pending: BTreeMap<(String, usize, usize), ExperimentRow> = BTreeMap::new();

    for &m in &user_counts {
        for &n in &n_values {
            let instances: Vec<ProblemInstance> = (0..inst_cfg.realizations)
                .map(|r| {
                    generate_instance(
                        m,
                        n,
                        inst_cfg.prob_low,
                        inst_cfg.prob_high,
                        instance_seed(inst_cfg.master_seed, m, n, r),
                    )
                })
                .collect::<Result<_, _>>()
                .context("instance generation failed")?;

            for &alg in &algorithms {
                let mut totals = Vec::new();
                let mut windows = Vec::new();
                let mut deltas = Vec::new();
                let mut collisions = Vec::new();
                let mut sim_totals = Vec::new();
                let mut sim_vars = Vec::new();
                let mut notes: BTreeMap<String, u32> = BTreeMap::new();
                for (r, inst) in instances.iter().enumerate() {
                    let seed = sim_seed(inst_cfg.master_seed, m, n, r as u32, alg);
                    match evaluate(alg, inst, cfg, seed) {
                        Ok(eval) => {
                            totals.push(eval.total);
                            windows.push(eval.window as f64);
                            deltas.push(eval.delta);
                            collisions.push(eval.collision_prob);
                            if let Some((st, se)) = eval.sim {
                                sim_totals.push(st);
                                sim_vars.push(se * se);
                            }
                            if let Some(note) = eval.note {
                                *notes.entry(note).or_default() += 1;
                            }
                        }
                        Err(e) => {
                            *notes.entry(e.to_string()).or_default() += 1;
                        }
                    }
                }
                let total_mean = mean(&totals);
                if alg == Algorithm::Alg1 {
                    alg1_means.insert((m, n), total_mean);
                }
                if !selected.contains(&alg) {
                    continue;
                }
                let error = notes
                    .iter()
                    .map(|(msg, count)| format!("{msg} [{count}/{}]", inst_cfg.realizations))
                    .collect::<Vec<_>>()
                    .join("; ");
                let sim_total = (!sim_totals.is_empty()).then(|| mean(&sim_totals));
                let sim_stderr = (!sim_vars.is_empty())
                    .then(|| sim_vars.iter().sum::<f64>().sqrt() / sim_vars.len() as f64);
                pending.insert(
                    (alg.to_string(), m, n),
                    ExperimentRow {
                        label: cfg.run.label.clone(),
                        algorithm: alg,
                        m,
                        n,
                        realizations: inst_cfg.realizations,
                        window_mean: mean(&windows),
                        delta_mean: mean(&deltas),
                        total_mean,
                        total_std: sample_std(&totals),
                        gain_vs_alg1: None,
                        collision_prob: mean(&collisions),
                        sim_total,
                        sim_stderr,
                        error,
                    },
                );
            }
        }
    }

    for ((_, m, n), mut row) in pending {
        let reference = alg1_means.get(&(m, n)).copied().unwrap_or(0.0);
        if reference > 0.0 {
            row.gain_vs_alg1 = Some(row.total_mean / reference - 1.0);
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn experiment_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(EXPERIMENT_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

pub fn experiment_table(rows: &[ExperimentRow]) -> String {
    let mut out = format!(
        "{:<14} {:>10} {:>4} {:>4} {:>4} {:>8} {:>8} {:>10} {:>9} {:>8} {:>9} {:>10} {:>10}\n",
        "label", "algorithm", "M", "N", "R", "W", "delta", "total", "std", "gain", "P_c", "sim", "sim_se"
    );
    for row in rows {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        out.push_str(&format!(
            "{:<14} {:>10} {:>4} {:>4} {:>4} {:>8.2} {:>8.4} {:>10.4} {:>9.4} {:>8} {:>9.4} {:>10} {:>10}{}\n",
            row.label,
            row.algorithm.to_string(),
            row.m,
            row.n,
            row.realizations,
            row.window_mean,
            row.delta_mean,
            row.total_mean,
            row.total_std,
            opt(row.gain_vs_alg1),
            row.collision_prob,
            opt(row.sim_total),
            opt(row.sim_stderr),
            if row.error.is_empty() {
                String::new()
            } else {
                format!("  ! {}", row.error)
            }
        ));
    }
    out
}

/// One collision-scan CSV row.
#[derive(Debug, Clone)]
pub struct ScanRow {
    pub label: String,
    pub m: usize,
    pub n: usize,
    pub window: u32,
    pub collision_prob: f64,
    pub sim_rate: Option<f64>,
}

impl ScanRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{}",
            self.label,
            self.m,
            self.n,
            self.window,
            self.collision_prob,
            self.sim_rate
                .map_or(String::new(), |x| format!("{x:.6}")),
        )
    }
}

/// For every channel count, runs the overlapped greedy assignment and sweeps
/// the analytic first-collision probability over the configured windows,
/// averaged across realizations. With simulation enabled, empirical collision
/// rates are overlaid.
pub fn run_collision_scan(cfg: &ExperimentConfig) -> Result<Vec<ScanRow>> {
    let inst_cfg = &cfg.instance;
    let user_counts = inst_cfg.user_counts();
    let mut n_values = inst_cfg.n_values.clone();
    n_values.sort_unstable();
    n_values.dedup();
    let mut w_values = cfg.scan.w_values.clone();
    w_values.sort_unstable();
    w_values.dedup();

    let mut rows = Vec::new();
    for &m in &user_counts {
        for &n in &n_values {
            let mut assignments = Vec::new();
            for r in 0..inst_cfg.realizations {
                let inst = generate_instance(
                    m,
                    n,
                    inst_cfg.prob_low,
                    inst_cfg.prob_high,
                    instance_seed(inst_cfg.master_seed, m, n, r),
                )?;
                let (asg, _, _) = assign_overlapped(&inst, &cfg.alg2, &cfg.mac)?;
                assignments.push((inst, asg));
            }
            for &w in &w_values {
                let mut pcs = Vec::new();
                let mut rates = Vec::new();
                for (r, (inst, asg)) in assignments.iter().enumerate() {
                    pcs.push(mac::first_collision_prob(inst, asg, w)?);
                    if cfg.sim.enabled {
                        let sim_cfg = SimConfig {
                            num_cycles: cfg.sim.cycles,
                            seed: sim_seed(inst_cfg.master_seed, m, n, r as u32, Algorithm::Alg2)
                                ^ u64::from(w),
                            window: w,
                            overhead_model: cfg.sim.overhead_model,
                            collision_event: cfg.sim.collision_event,
                        };
                        rates.push(
                            simulate(inst, asg, &cfg.mac, &sim_cfg)?
                                .empirical_first_collision_rate,
                        );
                    }
                }
                rows.push(ScanRow {
                    label: cfg.run.label.clone(),
                    m,
                    n,
                    window: w,
                    collision_prob: mean(&pcs),
                    sim_rate: (!rates.is_empty()).then(|| mean(&rates)),
                });
            }
        }
    }
    Ok(rows)
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from(SCAN_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

pub fn scan_table(rows: &[ScanRow]) -> String {
    let mut out = format!(
        "{:<14} {:>4} {:>4} {:>6} {:>10} {:>10}\n",
        "label", "M", "N", "W", "P_c", "sim_rate"
    );
    for row in rows {
        out.push_str(&format!(
            "{:<14} {:>4} {:>4} {:>6} {:>10.5} {:>10}\n",
            row.label,
            row.m,
            row.n,
            row.window,
            row.collision_prob,
            row.sim_rate.map_or("-".to_string(), |x| format!("{x:.5}")),
        ));
    }
    out
}

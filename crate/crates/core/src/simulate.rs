//! Cycle-level Monte Carlo simulation of the synchronized multi-channel MAC
//! protocol.
//!
//! Each cycle draws channel availability, lets every user with an available
//! private channel transmit immediately, and resolves the remaining users'
//! contention: contenders pick one available shared channel and a uniform
//! backoff in `[0, W-1]`, the smallest active backoff transmits its RTS, ties
//! collide and forfeit the cycle, a unique winner claims its channel and every
//! other contender that picked the same channel quits until the next cycle.
//! Survivors keep counting down, so one cycle can produce several winners on
//! distinct channels.
//!
//! The simulator is the empirical ground truth for overlapped assignments:
//! its per-cycle rules follow the protocol description directly and do not
//! reuse the analytic approximations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Assignment, ProblemInstance};
use crate::mac::{self, CollisionEvent, MacConfig};

/// How a winner's throughput is discounted for contention time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverheadModel {
    /// Every winner pays the flat analytic overhead fraction for the window,
    /// mirroring the closed-form model.
    AnalyticDelta,
    /// Every winner pays its actual elapsed contention time: backoff slots,
    /// handshakes of earlier winners, garbled RTS of earlier collisions, and
    /// its own handshake.
    BackoffExact,
}

/// Monte Carlo run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub num_cycles: u64,
    pub seed: u64,
    /// Contention window used for every cycle.
    pub window: u32,
    pub overhead_model: OverheadModel,
    /// Which backoff coincidences count in the reported first-collision rate.
    pub collision_event: CollisionEvent,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            num_cycles: 100_000,
            seed: 0,
            window: 16,
            overhead_model: OverheadModel::AnalyticDelta,
            collision_event: CollisionEvent::PaperEq8,
        }
    }
}

/// Empirical throughput and collision statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    /// Mean per-cycle throughput of each user.
    pub per_user_throughput: Vec<f64>,
    /// Standard error of each per-user mean.
    pub per_user_stderr: Vec<f64>,
    pub total_throughput: f64,
    pub total_stderr: f64,
    /// Fraction of cycles whose contenders drew a shared minimum backoff
    /// (under the configured event definition).
    pub empirical_first_collision_rate: f64,
    pub cycles_run: u64,
}

impl SimReport {
    pub fn csv_header() -> &'static str {
        "label,M,N,W,delta,total_thpt,total_stderr,collision_rate,cycles"
    }

    pub fn csv_row(&self, label: &str, m: usize, n: usize, window: u32, delta: f64) -> String {
        format!(
            "{label},{m},{n},{window},{delta:.6},{:.6},{:.6},{:.6},{}",
            self.total_throughput, self.total_stderr, self.empirical_first_collision_rate,
            self.cycles_run
        )
    }
}

struct Contender {
    user: usize,
    channel: usize,
    backoff: u32,
    alive: bool,
}

/// Runs the cycle-level simulation. Identical inputs (including the seed)
/// produce a bit-identical report.
pub fn simulate(
    inst: &ProblemInstance,
    asg: &Assignment,
    mac_cfg: &MacConfig,
    sim: &SimConfig,
) -> Result<SimReport> {
    inst.validate()?;
    asg.validate(inst.num_users, inst.num_channels)?;
    if sim.num_cycles == 0 {
        return Err(Error::InvalidParameter("num_cycles must be >= 1".into()));
    }
    if sim.window < 2 {
        return Err(Error::InvalidParameter(format!(
            "window {} must be at least 2",
            sim.window
        )));
    }
    let m = inst.num_users;
    let views = asg.views();
    // (channel, availability) lists per user, in channel order
    let private: Vec<Vec<(usize, f64)>> = (0..m)
        .map(|i| {
            asg.private_sets[i]
                .iter()
                .map(|&j| (j, inst.avail(i, j)))
                .collect()
        })
        .collect();
    let common: Vec<Vec<(usize, f64)>> = (0..m)
        .map(|i| {
            views.common_sets[i]
                .iter()
                .map(|&j| (j, inst.avail(i, j)))
                .collect()
        })
        .collect();

    let flat_delta = match sim.overhead_model {
        OverheadModel::AnalyticDelta => mac::overhead(mac_cfg, sim.window)?,
        OverheadModel::BackoffExact => 0.0,
    };
    let handshake_us = mac_cfg.handshake_us();

    let mut user_sum = vec![0.0_f64; m];
    let mut user_sumsq = vec![0.0_f64; m];
    let mut total_sum = 0.0_f64;
    let mut total_sumsq = 0.0_f64;
    let mut collision_cycles = 0u64;

    let mut payoff = vec![0.0_f64; m];
    let mut avail_scratch: Vec<usize> = Vec::new();
    let mut contenders: Vec<Contender> = Vec::new();
    let mut used_channels: Vec<usize> = Vec::new();

    for cycle in 0..sim.num_cycles {
        let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
        rng.set_stream(cycle);

        payoff.iter_mut().for_each(|v| *v = 0.0);
        contenders.clear();
        used_channels.clear();

        for user in 0..m {
            // draw availability over the user's channels in a fixed order
            avail_scratch.clear();
            for &(j, p) in &private[user] {
                if rng.gen::<f64>() < p {
                    avail_scratch.push(j);
                }
            }
            if !avail_scratch.is_empty() {
                // an available private channel preempts contention
                let pick = avail_scratch[rng.gen_range(0..avail_scratch.len())];
                payoff[user] = 1.0;
                used_channels.push(pick);
                // the common-set draws still advance the stream so that the
                // cycle layout does not depend on earlier outcomes
                for &(_, p) in &common[user] {
                    let _ = rng.gen::<f64>() < p;
                }
                continue;
            }
            avail_scratch.clear();
            for &(j, p) in &common[user] {
                if rng.gen::<f64>() < p {
                    avail_scratch.push(j);
                }
            }
            if !avail_scratch.is_empty() {
                let channel = avail_scratch[rng.gen_range(0..avail_scratch.len())];
                let backoff = rng.gen_range(0..sim.window);
                contenders.push(Contender {
                    user,
                    channel,
                    backoff,
                    alive: true,
                });
            }
        }

        // first-collision statistic: a shared minimum among the initial
        // contender set, before any quitting happens
        if contenders.len() >= 2 {
            let min = contenders.iter().map(|c| c.backoff).min().unwrap();
            let tied = contenders.iter().filter(|c| c.backoff == min).count();
            let counted = match sim.collision_event {
                CollisionEvent::PaperEq8 => tied >= 2 && min <= sim.window - 2,
                CollisionEvent::Full => tied >= 2,
            };
            if counted {
                collision_cycles += 1;
            }
        }

        // contention resolution
        let mut elapsed_handshake_us = 0.0_f64;
        loop {
            let min = contenders
                .iter()
                .filter(|c| c.alive)
                .map(|c| c.backoff)
                .min();
            let Some(min) = min else { break };
            let at_min: Vec<usize> = contenders
                .iter()
                .enumerate()
                .filter(|(_, c)| c.alive && c.backoff == min)
                .map(|(idx, _)| idx)
                .collect();
            if at_min.len() >= 2 {
                // simultaneous RTS: everyone involved forfeits the cycle
                for idx in at_min {
                    contenders[idx].alive = false;
                }
                elapsed_handshake_us += mac_cfg.t_rts_us;
            } else {
                let idx = at_min[0];
                let (user, channel) = (contenders[idx].user, contenders[idx].channel);
                payoff[user] = match sim.overhead_model {
                    OverheadModel::AnalyticDelta => 1.0 - flat_delta,
                    OverheadModel::BackoffExact => {
                        let contention_us = min as f64 * mac_cfg.slot_time_us
                            + elapsed_handshake_us
                            + handshake_us;
                        ((mac_cfg.cycle_time_us - contention_us) / mac_cfg.cycle_time_us).max(0.0)
                    }
                };
                elapsed_handshake_us += handshake_us;
                contenders[idx].alive = false;
                used_channels.push(channel);
                // overhearing the handshake, everyone aiming at the same
                // channel quits until the next cycle
                for c in contenders.iter_mut() {
                    if c.alive && c.channel == channel {
                        c.alive = false;
                    }
                }
            }
        }

        // at most one transmission per channel per cycle
        let before = used_channels.len();
        used_channels.sort_unstable();
        used_channels.dedup();
        assert_eq!(
            before,
            used_channels.len(),
            "two users transmitted on one channel in cycle {cycle}"
        );

        let mut cycle_total = 0.0;
        for user in 0..m {
            let v = payoff[user];
            user_sum[user] += v;
            user_sumsq[user] += v * v;
            cycle_total += v;
        }
        total_sum += cycle_total;
        total_sumsq += cycle_total * cycle_total;
    }

    let n = sim.num_cycles as f64;
    let stderr = |sum: f64, sumsq: f64| -> f64 {
        if sim.num_cycles < 2 {
            return 0.0;
        }
        let mean = sum / n;
        let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    };
    let per_user_throughput: Vec<f64> = user_sum.iter().map(|&s| s / n).collect();
    let per_user_stderr: Vec<f64> = user_sum
        .iter()
        .zip(&user_sumsq)
        .map(|(&s, &sq)| stderr(s, sq))
        .collect();
    Ok(SimReport {
        per_user_throughput,
        per_user_stderr,
        total_throughput: total_sum / n,
        total_stderr: stderr(total_sum, total_sumsq),
        empirical_first_collision_rate: collision_cycles as f64 / n,
        cycles_run: sim.num_cycles,
    })
}

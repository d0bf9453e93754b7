//! Analytic MAC calculus: contention probabilities, first-collision
//! probability, contention-window sizing, and protocol overhead.
//!
//! A user joins the contention phase of a cycle when every channel in its
//! private set is busy and at least one of its shared channels is available.
//! Contenders draw a uniform backoff in `[0, W-1]`; the first collision is
//! the event that the smallest drawn value is drawn by two or more of them.
//! The window solver picks the smallest `W` whose first-collision probability
//! stays below a target, and the overhead formula converts a window into the
//! fraction of the cycle consumed by the average backoff plus the RTS/CTS
//! handshake.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Assignment, AssignmentViews, ProblemInstance};

/// Protocol timing constants and the collision target.
///
/// All times are in microseconds. In the structured-text configuration the
/// fields are named `theta_us`, `t_rts_us`, `t_cts_us`, `t_sifs_us`,
/// `t_cycle_us`, and `epsilon_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacConfig {
    /// Duration of one backoff slot.
    #[serde(rename = "theta_us")]
    pub slot_time_us: f64,
    pub t_rts_us: f64,
    pub t_cts_us: f64,
    pub t_sifs_us: f64,
    #[serde(rename = "t_cycle_us")]
    pub cycle_time_us: f64,
    /// Target first-collision probability.
    pub epsilon_p: f64,
    /// Smallest admissible contention window.
    pub w_min: u32,
    /// Search cap for the window solver.
    pub w_max: u32,
}

impl Default for MacConfig {
    fn default() -> Self {
        Self {
            slot_time_us: 20.0,
            t_rts_us: 48.0,
            t_cts_us: 40.0,
            t_sifs_us: 15.0,
            cycle_time_us: 3000.0,
            epsilon_p: 0.02,
            w_min: 2,
            w_max: 1024,
        }
    }
}

impl MacConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("theta_us", self.slot_time_us),
            ("t_rts_us", self.t_rts_us),
            ("t_cts_us", self.t_cts_us),
            ("t_sifs_us", self.t_sifs_us),
            ("t_cycle_us", self.cycle_time_us),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        if self.cycle_time_us <= self.t_rts_us + self.t_cts_us + 3.0 * self.t_sifs_us {
            return Err(Error::InvalidParameter(
                "cycle time must exceed the RTS/CTS handshake time".into(),
            ));
        }
        if !(self.epsilon_p > 0.0 && self.epsilon_p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon_p = {} must lie in (0, 1)",
                self.epsilon_p
            )));
        }
        if self.w_min < 2 || self.w_min > self.w_max {
            return Err(Error::InvalidParameter(format!(
                "window bounds [{}, {}] need 2 <= w_min <= w_max",
                self.w_min, self.w_max
            )));
        }
        Ok(())
    }

    /// Time of one RTS/CTS exchange including its three SIFS gaps.
    pub fn handshake_us(&self) -> f64 {
        self.t_rts_us + self.t_cts_us + 3.0 * self.t_sifs_us
    }
}

/// Window, overhead, and residual collision probability for one assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacDerived {
    pub window: u32,
    pub overhead: f64,
    pub first_collision_prob: f64,
}

/// Which backoff coincidences count as the first collision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionEvent {
    /// The printed formula's event: the minimum backoff is shared and is at
    /// most `W - 2`. A tie at exactly `W - 1` is not counted.
    PaperEq8,
    /// Any shared minimum backoff counts.
    Full,
}

/// Probability that `user` joins contention: all of its private channels are
/// busy and at least one of its shared channels is available. Zero when the
/// user shares no channel.
pub fn contention_prob_per_user(inst: &ProblemInstance, asg: &Assignment, user: usize) -> f64 {
    contention_prob_with_views(inst, asg, &asg.views(), user)
}

pub(crate) fn contention_prob_with_views(
    inst: &ProblemInstance,
    asg: &Assignment,
    views: &AssignmentViews,
    user: usize,
) -> f64 {
    let private_busy: f64 = asg.private_sets[user]
        .iter()
        .map(|&j| inst.unavail(user, j))
        .product();
    let common_busy: f64 = views.common_sets[user]
        .iter()
        .map(|&j| inst.unavail(user, j))
        .product();
    private_busy * (1.0 - common_busy)
}

/// Distribution of the number of successes among independent non-identical
/// Bernoulli trials, via the `O(n^2)` Poisson-binomial recurrence. This is
/// mathematically identical to summing over all subsets.
pub fn poisson_binomial(probs: &[f64]) -> Vec<f64> {
    let mut dist = vec![0.0_f64; probs.len() + 1];
    dist[0] = 1.0;
    for (trial, &p) in probs.iter().enumerate() {
        for k in (1..=trial + 1).rev() {
            dist[k] = dist[k] * (1.0 - p) + dist[k - 1] * p;
        }
        dist[0] *= 1.0 - p;
    }
    dist
}

/// Distribution of the number of contenders, indices `0..=M`.
pub fn contender_distribution(inst: &ProblemInstance, asg: &Assignment) -> Vec<f64> {
    let views = asg.views();
    let probs: Vec<f64> = (0..inst.num_users)
        .map(|user| contention_prob_with_views(inst, asg, &views, user))
        .collect();
    poisson_binomial(&probs)
}

/// Probability that exactly `m` users join the contention phase.
pub fn prob_m_contenders(inst: &ProblemInstance, asg: &Assignment, m: usize) -> Result<f64> {
    if m > inst.num_users {
        return Err(Error::InvalidParameter(format!(
            "contender count {m} exceeds the {} users",
            inst.num_users
        )));
    }
    Ok(contender_distribution(inst, asg)[m])
}

/// ln(k!) for k = 0..=n.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut lnf = vec![0.0_f64; n + 1];
    for k in 2..=n {
        lnf[k] = lnf[k - 1] + (k as f64).ln();
    }
    lnf
}

/// Conditional first-collision probability with `m` contenders and window
/// `W`: the sum over `j = 2..=m` colliders and backoff values `i = 0..=W-2`
/// of `C(m, j) (1/W)^j ((W-i-1)/W)^(m-j)`.
///
/// Note the inner sum stops at `W - 2`: a tie at the largest backoff value is
/// not part of the event.
pub fn first_collision_prob_conditional(m: usize, window: u32) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "conditional collision needs m >= 2 contenders, got {m}"
        )));
    }
    if window < 2 {
        return Err(Error::InvalidParameter(format!(
            "contention window {window} must be at least 2"
        )));
    }
    let w = window as f64;
    let lnf = ln_factorials(m);
    let mut total = 0.0;
    for j in 2..=m {
        let binom = (lnf[m] - lnf[j] - lnf[m - j]).exp();
        let exponent = (m - j) as i32;
        let mut later_sum = 0.0; // sum over i of P(the other m-j all drew > i)
        for i in 0..window.saturating_sub(1) {
            later_sum += ((w - i as f64 - 1.0) / w).powi(exponent);
        }
        total += binom * w.powi(-(j as i32)) * later_sum;
    }
    Ok(total)
}

/// Unconditional first-collision probability at window `W` for the given
/// assignment: the conditional values weighted by the contender distribution.
pub fn first_collision_prob(
    inst: &ProblemInstance,
    asg: &Assignment,
    window: u32,
) -> Result<f64> {
    if window < 2 {
        return Err(Error::InvalidParameter(format!(
            "contention window {window} must be at least 2"
        )));
    }
    let dist = contender_distribution(inst, asg);
    let mut total = 0.0;
    for (m, &pm) in dist.iter().enumerate().skip(2) {
        if pm > 0.0 {
            total += first_collision_prob_conditional(m, window)? * pm;
        }
    }
    Ok(total)
}

/// Smallest window in `[w_min, w_max]` whose first-collision probability
/// meets the target. The collision probability is non-increasing in `W`, so a
/// linear scan from `w_min` returns the minimum.
pub fn solve_window(inst: &ProblemInstance, asg: &Assignment, cfg: &MacConfig) -> Result<u32> {
    cfg.validate()?;
    let dist = contender_distribution(inst, asg);
    let mut p_last = 0.0;
    for window in cfg.w_min..=cfg.w_max {
        let mut pc = 0.0;
        for (m, &pm) in dist.iter().enumerate().skip(2) {
            if pm > 0.0 {
                pc += first_collision_prob_conditional(m, window)? * pm;
            }
        }
        if pc <= cfg.epsilon_p {
            return Ok(window);
        }
        p_last = pc;
    }
    Err(Error::WindowSolverFailure {
        w_max: cfg.w_max,
        p_at_w_max: p_last,
    })
}

/// Overhead fraction of one cycle at window `W`: the mean backoff
/// `(W-1)/2` slots plus the RTS/CTS handshake, over the cycle time.
pub fn overhead(cfg: &MacConfig, window: u32) -> Result<f64> {
    if window == 0 {
        return Err(Error::InvalidParameter(
            "window must be at least 1".into(),
        ));
    }
    let mean_backoff = (window as f64 - 1.0) / 2.0;
    let delta = (mean_backoff * cfg.slot_time_us + cfg.handshake_us()) / cfg.cycle_time_us;
    if delta >= 1.0 {
        return Err(Error::OverheadTooLarge {
            window,
            overhead: delta,
        });
    }
    Ok(delta)
}

/// Largest window whose overhead still fits in the cycle, used as a fallback
/// when no window can reach the collision target.
pub fn max_feasible_window(cfg: &MacConfig) -> Result<u32> {
    // delta < 1  <=>  (W-1)/2 * theta < cycle - handshake
    let slack = cfg.cycle_time_us - cfg.handshake_us();
    if slack <= 0.0 {
        return Err(Error::OverheadTooLarge {
            window: 1,
            overhead: cfg.handshake_us() / cfg.cycle_time_us,
        });
    }
    let w = (2.0 * slack / cfg.slot_time_us + 1.0).ceil() as u32;
    // ceil can overshoot by one slot; step down to the last feasible value
    let mut w = w.clamp(1, cfg.w_max);
    while w > 1 && overhead(cfg, w).is_err() {
        w -= 1;
    }
    Ok(w)
}

/// Solves the window and evaluates overhead and residual collision
/// probability for one assignment.
pub fn derive_mac(inst: &ProblemInstance, asg: &Assignment, cfg: &MacConfig) -> Result<MacDerived> {
    let window = solve_window(inst, asg, cfg)?;
    Ok(MacDerived {
        window,
        overhead: overhead(cfg, window)?,
        first_collision_prob: first_collision_prob(inst, asg, window)?,
    })
}

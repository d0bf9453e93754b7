//! Closed-form throughput and increase-of-throughput formulas.
//!
//! For a non-overlapped assignment, user `i` is served whenever at least one
//! of its private channels is available, so its normalized throughput is
//! `T_i = 1 - prod_{j in S_i} (1 - p_ij)`. The greedy assignment algorithms
//! rank candidate allocations by the marginal gain of adding one channel:
//! exactly `p_ic * prod_{j in S_i} (1 - p_ij)` for the non-overlapped case,
//! and a three-event estimate for the overlapped case that discounts the MAC
//! overhead `delta` and the fraction of time the channel is claimed by its
//! current sharers.
//!
//! The overlapped estimate is a selection heuristic, not a certified bound:
//! it is derived for availability probabilities close to 1 (at least ~0.8).
//! It is computed for any input without panicking, but its accuracy degrades
//! outside that regime; per-user totals are therefore clamped to `[0, 1]`.

use std::collections::BTreeSet;

use crate::assign::{AssignmentTrace, TracePhase};
use crate::error::{Error, Result};
use crate::instance::{Assignment, AssignmentViews, ProblemInstance};

/// Per-user and total expected normalized throughput.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputEstimate {
    /// One value in `[0, 1]` per user.
    pub per_user: Vec<f64>,
    /// Sum of `per_user`; at most `M`.
    pub total: f64,
}

/// `1 - prod_{j in set} (1 - p_ij)`: probability that at least one channel
/// of `set` is available at `user`. The empty set yields 0.
pub fn throughput_nonoverlapped(
    inst: &ProblemInstance,
    private_set: &BTreeSet<usize>,
    user: usize,
) -> Result<f64> {
    inst.check_user(user)?;
    let mut miss = 1.0;
    for &j in private_set {
        inst.check_channel(j)?;
        miss *= inst.unavail(user, j);
    }
    Ok(1.0 - miss)
}

/// Marginal gain of adding `candidate` to `current_set` for `user`:
/// `p_ic * prod_{j in current_set} (1 - p_ij)`.
///
/// Equals the before/after difference of [`throughput_nonoverlapped`].
pub fn delta_throughput_nonoverlapped(
    inst: &ProblemInstance,
    current_set: &BTreeSet<usize>,
    user: usize,
    candidate: usize,
) -> Result<f64> {
    inst.check_user(user)?;
    inst.check_channel(candidate)?;
    if current_set.contains(&candidate) {
        return Err(Error::Precondition(format!(
            "candidate channel {candidate} is already in the set"
        )));
    }
    let mut miss = 1.0;
    for &j in current_set {
        inst.check_channel(j)?;
        miss *= inst.unavail(user, j);
    }
    Ok(inst.avail(user, candidate) * miss)
}

/// Estimated throughput increase for `user` if `channel` — currently used by
/// exactly the users in `sharers` — is also allocated to it, given MAC
/// overhead `overhead`.
///
/// Three events are counted, each discounted by `1 - overhead`:
/// 1. the channel is unavailable at one sharer and available at the others
///    and at `user`, whose private channels are all busy but who has some
///    common channel available (gain factor `1 - 1/MS`);
/// 2. the channel is available everywhere but every sharer steps aside onto
///    another available private channel, and nothing else in the user's total
///    set is available (full gain);
/// 3. as in 2 but the user also has some common channel available (gain
///    factor `1 - 1/MS`).
///
/// Sharer private sets are evaluated in the tentative configuration, i.e.
/// excluding `channel` itself; for an already-shared channel this is a no-op.
pub fn delta_throughput_overlapped_upper(
    inst: &ProblemInstance,
    asg: &Assignment,
    user: usize,
    channel: usize,
    sharers: &[usize],
    overhead: f64,
) -> Result<f64> {
    inst.check_user(user)?;
    inst.check_channel(channel)?;
    if sharers.is_empty() {
        return Err(Error::Precondition(
            "the shared channel must have at least one current user".into(),
        ));
    }
    if sharers.contains(&user) {
        return Err(Error::Precondition(format!(
            "user {user} already shares channel {channel}"
        )));
    }
    if !(0.0..1.0).contains(&overhead) {
        return Err(Error::Precondition(format!(
            "overhead {overhead} must lie in [0, 1)"
        )));
    }
    let current = asg.users_of_channel(channel);
    let given: BTreeSet<usize> = sharers.iter().copied().collect();
    if given.len() != sharers.len() || given != current {
        return Err(Error::Precondition(format!(
            "sharers {sharers:?} do not match the current users of channel {channel}"
        )));
    }
    let views = asg.views();
    Ok(delta_overlapped_with_views(
        inst, asg, &views, user, channel, sharers, overhead,
    ))
}

/// Formula body of [`delta_throughput_overlapped_upper`], with the set views
/// precomputed. The assignment algorithms call this in their inner loop.
pub(crate) fn delta_overlapped_with_views(
    inst: &ProblemInstance,
    asg: &Assignment,
    views: &AssignmentViews,
    user: usize,
    channel: usize,
    sharers: &[usize],
    overhead: f64,
) -> f64 {
    let ms = sharers.len() as f64;
    let share_factor = 1.0 - 1.0 / ms;
    let idle_factor = 1.0 - overhead;
    let p_ij = inst.avail(user, channel);

    // user i: all private channels busy; some common channel available.
    let own_private_busy: f64 = asg.private_sets[user]
        .iter()
        .map(|&h| inst.unavail(user, h))
        .product();
    let own_common_busy: f64 = views.common_sets[user]
        .iter()
        .map(|&h| inst.unavail(user, h))
        .product();

    // channel j available at every sharer except one.
    let mut one_sharer_blocked = 0.0;
    for (k, &ik) in sharers.iter().enumerate() {
        let mut term = inst.unavail(ik, channel);
        for (q, &iq) in sharers.iter().enumerate() {
            if q != k {
                term *= inst.avail(iq, channel);
            }
        }
        one_sharer_blocked += term;
    }

    // channel j available at every sharer, but each sharer has another
    // private channel available and uses that instead.
    let mut all_sharers_avail = 1.0;
    let mut sharers_step_aside = 1.0;
    for &iq in sharers {
        all_sharers_avail *= inst.avail(iq, channel);
        let alt_busy: f64 = asg.private_sets[iq]
            .iter()
            .filter(|&&h| h != channel)
            .map(|&h| inst.unavail(iq, h))
            .product();
        sharers_step_aside *= 1.0 - alt_busy;
    }

    let base = idle_factor * p_ij * own_private_busy;
    let term1 = share_factor * base * (1.0 - own_common_busy) * one_sharer_blocked;
    let term2 = base * own_common_busy * all_sharers_avail * sharers_step_aside;
    let term3 =
        share_factor * base * (1.0 - own_common_busy) * all_sharers_avail * sharers_step_aside;
    term1 + term2 + term3
}

/// Total-throughput estimate for an assignment produced by the overlapped
/// greedy algorithm: the non-overlapped base throughput of the initial
/// greedy partition plus every accepted sharing increment from the trace.
///
/// Increments are linear in `1 - delta`, so each recorded score is
/// re-expressed at the supplied `overhead` through the exact factor
/// `(1 - overhead) / (1 - overhead_at_decision)`. Per-user values are clamped
/// to `[0, 1]` since a user's throughput cannot exceed 1.
pub fn total_throughput_overlapped_estimate(
    inst: &ProblemInstance,
    asg: &Assignment,
    trace: &AssignmentTrace,
    overhead: f64,
) -> Result<ThroughputEstimate> {
    asg.validate(inst.num_users, inst.num_channels)?;
    if !(0.0..1.0).contains(&overhead) {
        return Err(Error::Precondition(format!(
            "overhead {overhead} must lie in [0, 1)"
        )));
    }
    let base_sets = base_sets_from_trace(inst, asg, trace)?;
    let m = inst.num_users;
    let mut per_user = Vec::with_capacity(m);
    for (i, base) in base_sets.iter().enumerate() {
        per_user.push(throughput_nonoverlapped(inst, base, i)?);
    }
    for entry in &trace.entries {
        if entry.phase != TracePhase::Overlapped {
            continue;
        }
        if entry.overhead_at_decision >= 1.0 {
            return Err(Error::InvalidTrace(format!(
                "entry for user {} has overhead {} >= 1",
                entry.user, entry.overhead_at_decision
            )));
        }
        let rescale = (1.0 - overhead) / (1.0 - entry.overhead_at_decision);
        per_user[entry.user] += entry.score * rescale;
    }
    for v in &mut per_user {
        *v = v.clamp(0.0, 1.0);
    }
    let total = per_user.iter().sum();
    Ok(ThroughputEstimate { per_user, total })
}

/// Rebuilds the non-overlapped base partition from the trace and checks that
/// replaying the overlapped entries on top of it reproduces `asg`.
fn base_sets_from_trace(
    inst: &ProblemInstance,
    asg: &Assignment,
    trace: &AssignmentTrace,
) -> Result<Vec<BTreeSet<usize>>> {
    let mut base = vec![BTreeSet::new(); inst.num_users];
    let mut assigned = BTreeSet::new();
    for entry in &trace.entries {
        if entry.phase != TracePhase::NonOverlapped {
            continue;
        }
        if entry.user >= inst.num_users || entry.channel >= inst.num_channels {
            return Err(Error::InvalidTrace(format!(
                "entry ({}, {}) out of range",
                entry.user, entry.channel
            )));
        }
        if !assigned.insert(entry.channel) {
            return Err(Error::InvalidTrace(format!(
                "channel {} assigned twice in the non-overlapped phase",
                entry.channel
            )));
        }
        base[entry.user].insert(entry.channel);
    }
    if assigned.len() != inst.num_channels {
        return Err(Error::InvalidTrace(format!(
            "non-overlapped phase covers {} of {} channels",
            assigned.len(),
            inst.num_channels
        )));
    }
    // replay the accepted sharing steps; the result must match asg
    let mut replay = Assignment {
        private_sets: base.clone(),
        shared_users: Default::default(),
    };
    for entry in &trace.entries {
        if entry.phase == TracePhase::Overlapped {
            replay.add_sharer(entry.channel, entry.user);
        }
    }
    if &replay != asg {
        return Err(Error::InvalidTrace(
            "trace does not replay to the given assignment".into(),
        ));
    }
    Ok(base)
}

//! Brute-force reference implementations used to validate the fast paths.
//!
//! Everything here is exact enumeration with hard size guards: an oracle that
//! cannot afford its input refuses instead of approximating. The arithmetic
//! is deliberately re-derived from the definitions rather than shared with
//! the modules under test.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::instance::{Assignment, ProblemInstance};
use crate::mac::CollisionEvent;

const ASSIGNMENT_GUARD: f64 = 1e8;
const TUPLE_GUARD: f64 = 1e8;
const SUBSET_GUARD: usize = 20;

/// Exact optimum of the non-overlapped assignment problem, found by trying
/// every one of the `M^N` channel-to-user maps. Ties resolve to the
/// lexicographically smallest assignment vector.
pub fn exhaustive_nonoverlapped(inst: &ProblemInstance) -> Result<(Assignment, f64)> {
    let m = inst.num_users;
    let n = inst.num_channels;
    let work = (m as f64).powi(n as i32);
    if work > ASSIGNMENT_GUARD {
        return Err(Error::OracleGuard(format!(
            "M^N = {m}^{n} exceeds the 1e8 assignment bound"
        )));
    }

    // owner[j] = user owning channel j; enumerate in lexicographic order so
    // the first maximum found is the lexicographically smallest maximizer
    let mut owner = vec![0usize; n];
    let mut best_owner = owner.clone();
    let mut best_total = f64::NEG_INFINITY;
    loop {
        let mut total = 0.0;
        for user in 0..m {
            let mut all_busy = 1.0;
            for (channel, &o) in owner.iter().enumerate() {
                if o == user {
                    all_busy *= 1.0 - inst.avail_prob[user][channel];
                }
            }
            total += 1.0 - all_busy;
        }
        if total > best_total {
            best_total = total;
            best_owner.copy_from_slice(&owner);
        }
        // next vector: increment from the last position, base M
        let mut pos = n;
        loop {
            if pos == 0 {
                let mut asg = Assignment::empty(m);
                for (channel, &o) in best_owner.iter().enumerate() {
                    asg.private_sets[o].insert(channel);
                }
                return Ok((asg, best_total));
            }
            pos -= 1;
            owner[pos] += 1;
            if owner[pos] < m {
                break;
            }
            owner[pos] = 0;
        }
    }
}

/// Exact contender-count distribution by explicit subset enumeration: for
/// each of the `2^M` user subsets, the probability that exactly that subset
/// contends.
pub fn enumerate_contenders(p_con: &[f64]) -> Result<Vec<f64>> {
    let m = p_con.len();
    if m > SUBSET_GUARD {
        return Err(Error::OracleGuard(format!(
            "{m} users exceed the 2^{SUBSET_GUARD} subset bound"
        )));
    }
    for &p in p_con {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "{p} is not a probability"
            )));
        }
    }
    let mut dist = vec![0.0_f64; m + 1];
    for mask in 0u32..(1u32 << m) {
        let mut prob = 1.0;
        for (i, &p) in p_con.iter().enumerate() {
            prob *= if mask & (1 << i) != 0 { p } else { 1.0 - p };
        }
        dist[mask.count_ones() as usize] += prob;
    }
    Ok(dist)
}

/// Exact first-collision probability by enumerating all `W^m` backoff tuples
/// and counting those whose minimum is drawn by two or more contenders (and,
/// for [`CollisionEvent::PaperEq8`], is at most `W - 2`).
pub fn enumerate_collision(m: usize, window: u32, event: CollisionEvent) -> Result<f64> {
    if m < 2 || window < 2 {
        return Err(Error::InvalidParameter(format!(
            "need m >= 2 and W >= 2, got m = {m}, W = {window}"
        )));
    }
    let work = (window as f64).powi(m as i32);
    if work > TUPLE_GUARD {
        return Err(Error::OracleGuard(format!(
            "W^m = {window}^{m} exceeds the 1e8 tuple bound"
        )));
    }
    let mut backoffs = vec![0u32; m];
    let mut hits = 0u64;
    let mut total = 0u64;
    loop {
        total += 1;
        let min = *backoffs.iter().min().expect("m >= 2");
        let at_min = backoffs.iter().filter(|&&b| b == min).count();
        if at_min >= 2
            && match event {
                CollisionEvent::PaperEq8 => min <= window - 2,
                CollisionEvent::Full => true,
            }
        {
            hits += 1;
        }
        let mut pos = m;
        loop {
            if pos == 0 {
                return Ok(hits as f64 / total as f64);
            }
            pos -= 1;
            backoffs[pos] += 1;
            if backoffs[pos] < window {
                break;
            }
            backoffs[pos] = 0;
        }
    }
}

/// Throughput of one user under a non-overlapped assignment, re-derived here
/// so oracle totals do not depend on the analytic module.
pub fn nonoverlapped_user_throughput(
    inst: &ProblemInstance,
    set: &BTreeSet<usize>,
    user: usize,
) -> f64 {
    let mut all_busy = 1.0;
    for &j in set {
        all_busy *= 1.0 - inst.avail_prob[user][j];
    }
    1.0 - all_busy
}

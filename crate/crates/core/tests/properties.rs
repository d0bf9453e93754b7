//! Property-based checks: formula identities, monotonicity, greedy-vs-oracle
//! orderings, and serialization round trips.
//!
//! Expected values are never trusted from the implementation under test:
//! set algebra is recomputed per definition, the three-event sharing gain is
//! re-transcribed term by term, and collision/contender probabilities come
//! from the enumeration oracles.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use chanshare::analytic::{
    delta_throughput_overlapped_upper, delta_throughput_nonoverlapped, throughput_nonoverlapped,
    total_throughput_overlapped_estimate,
};
use chanshare::assign::{
    assign_nonoverlapped, assign_overlapped, assign_round_robin, Alg2Config, TracePhase,
};
use chanshare::instance::{generate_instance, Assignment, ProblemInstance};
use chanshare::mac::{
    contention_prob_per_user, contender_distribution, first_collision_prob,
    first_collision_prob_conditional, overhead, solve_window, CollisionEvent, MacConfig,
};
use chanshare::oracle;

fn set(items: &[usize]) -> BTreeSet<usize> {
    items.iter().copied().collect()
}

/// A random instance plus a random disjoint (current_set, candidate) pair.
fn instance_and_candidate() -> impl Strategy<Value = (ProblemInstance, BTreeSet<usize>, usize, usize)>
{
    (2usize..5, 3usize..9, 0u64..5_000).prop_flat_map(|(m, n, seed)| {
        let inst = generate_instance(m, n, 0.05, 0.95, seed).unwrap();
        (
            Just(inst),
            proptest::collection::btree_set(0..n, 0..n.min(4)),
            0..m,
            0..n,
        )
    })
}

proptest! {
    #[test]
    fn marginal_gain_equals_throughput_difference(
        (inst, mut current, user, candidate) in instance_and_candidate()
    ) {
        current.remove(&candidate);
        let delta = delta_throughput_nonoverlapped(&inst, &current, user, candidate).unwrap();
        let before = throughput_nonoverlapped(&inst, &current, user).unwrap();
        let mut grown = current.clone();
        grown.insert(candidate);
        let after = throughput_nonoverlapped(&inst, &grown, user).unwrap();
        prop_assert!((delta - (after - before)).abs() <= 1e-12);
    }

    #[test]
    fn adding_a_channel_never_reduces_throughput(
        (inst, mut current, user, candidate) in instance_and_candidate()
    ) {
        current.remove(&candidate);
        let before = throughput_nonoverlapped(&inst, &current, user).unwrap();
        let mut grown = current.clone();
        grown.insert(candidate);
        let after = throughput_nonoverlapped(&inst, &grown, user).unwrap();
        prop_assert!(after + 1e-15 >= before);
    }

    #[test]
    fn marginal_gain_shrinks_on_supersets(
        (inst, mut current, user, candidate) in instance_and_candidate(),
        extra in 0usize..9
    ) {
        current.remove(&candidate);
        let extra = extra % inst.num_channels;
        prop_assume!(extra != candidate && !current.contains(&extra));
        let small = delta_throughput_nonoverlapped(&inst, &current, user, candidate).unwrap();
        let mut superset = current.clone();
        superset.insert(extra);
        let large = delta_throughput_nonoverlapped(&inst, &superset, user, candidate).unwrap();
        prop_assert!(large <= small + 1e-15);
    }
}

// ---------------------------------------------------------------------------
// three-event sharing gain vs an independent transcription
// ---------------------------------------------------------------------------

/// Term-by-term transcription of the three displayed events, written against
/// explicit set arguments instead of the assignment structure.
fn sharing_gain_transcription(
    p: &[Vec<f64>],
    user: usize,
    channel: usize,
    user_private: &BTreeSet<usize>,
    user_common: &BTreeSet<usize>,
    sharers: &[usize],
    sharer_private: &[BTreeSet<usize>],
    delta: f64,
) -> f64 {
    let pbar = |i: usize, j: usize| 1.0 - p[i][j];
    let ms = sharers.len() as f64;

    let prod_private: f64 = user_private.iter().map(|&h| pbar(user, h)).product();
    let prod_common: f64 = user_common.iter().map(|&h| pbar(user, h)).product();

    let mut sum_k = 0.0;
    for k in 0..sharers.len() {
        let mut v = pbar(sharers[k], channel);
        for q in 0..sharers.len() {
            if q != k {
                v *= p[sharers[q]][channel];
            }
        }
        sum_k += v;
    }

    let mut prod_avail = 1.0;
    let mut prod_alternative = 1.0;
    for (q, &iq) in sharers.iter().enumerate() {
        prod_avail *= p[iq][channel];
        let busy: f64 = sharer_private[q].iter().map(|&h| pbar(iq, h)).product();
        prod_alternative *= 1.0 - busy;
    }

    let eq5 = (1.0 - 1.0 / ms)
        * (1.0 - delta)
        * p[user][channel]
        * prod_private
        * (1.0 - prod_common)
        * sum_k;
    let eq6 = (1.0 - delta)
        * p[user][channel]
        * prod_private
        * prod_common
        * prod_avail
        * prod_alternative;
    let eq7 = (1.0 - 1.0 / ms)
        * (1.0 - delta)
        * p[user][channel]
        * prod_private
        * (1.0 - prod_common)
        * prod_avail
        * prod_alternative;
    eq5 + eq6 + eq7
}

/// Hand-built three-user assignment: users 0 and 1 share channel 0, user 0
/// owns channel 1, user 1 owns channel 2, user 2 owns nothing.
fn three_user_shared(p: f64) -> (ProblemInstance, Assignment) {
    let inst = ProblemInstance::new(vec![vec![p; 3]; 3]).unwrap();
    let mut shared = BTreeMap::new();
    shared.insert(0usize, set(&[0, 1]));
    let asg = Assignment {
        private_sets: vec![set(&[1]), set(&[2]), set(&[])],
        shared_users: shared,
    };
    (inst, asg)
}

#[test]
fn sharing_gain_matches_transcription_on_uniform_instance() {
    let (inst, asg) = three_user_shared(0.9);
    let delta = 0.05;
    let got = delta_throughput_overlapped_upper(&inst, &asg, 2, 0, &[0, 1], delta).unwrap();
    let expect = sharing_gain_transcription(
        &inst.avail_prob,
        2,
        0,
        &set(&[]),  // user 2 owns nothing
        &set(&[]),  // and shares nothing yet
        &[0, 1],
        &[set(&[1]), set(&[2])], // sharer separate sets (channel 0 excluded)
        delta,
    );
    assert!(
        (got - expect).abs() < 1e-15,
        "implementation {got} vs transcription {expect}"
    );
}

proptest! {
    #[test]
    fn sharing_gain_matches_transcription_on_random_instances(
        seed in 0u64..2_000, delta in 0.0f64..0.9
    ) {
        let inst = generate_instance(4, 4, 0.3, 0.98, seed).unwrap();
        // users 0..=2 share channel 0; user 0 owns 1, user 1 owns 2 and 3
        let mut shared = BTreeMap::new();
        shared.insert(0usize, set(&[0, 1, 2]));
        let asg = Assignment {
            private_sets: vec![set(&[1]), set(&[2, 3]), set(&[]), set(&[])],
            shared_users: shared,
        };
        let got = delta_throughput_overlapped_upper(&inst, &asg, 3, 0, &[0, 1, 2], delta).unwrap();
        let expect = sharing_gain_transcription(
            &inst.avail_prob, 3, 0,
            &set(&[]), &set(&[]),
            &[0, 1, 2],
            &[set(&[1]), set(&[2, 3]), set(&[])],
            delta,
        );
        prop_assert!((got - expect).abs() <= 1e-14);
        prop_assert!(got >= 0.0);
    }

    #[test]
    fn sharing_gain_decreases_in_overhead(seed in 0u64..500) {
        let (inst, asg) = {
            let inst = generate_instance(3, 3, 0.5, 0.95, seed).unwrap();
            let mut shared = BTreeMap::new();
            shared.insert(0usize, set(&[0, 1]));
            let asg = Assignment {
                private_sets: vec![set(&[1]), set(&[2]), set(&[])],
                shared_users: shared,
            };
            (inst, asg)
        };
        let mut last = f64::INFINITY;
        for delta in [0.0, 0.2, 0.4, 0.6, 0.8] {
            let v = delta_throughput_overlapped_upper(&inst, &asg, 2, 0, &[0, 1], delta).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert!(v < last, "gain must strictly decrease in the overhead");
            last = v;
        }
    }
}

// ---------------------------------------------------------------------------
// assignment views vs per-definition recomputation
// ---------------------------------------------------------------------------

/// Arbitrary valid assignment: channels are unassigned, private, or shared by
/// a random user subset.
fn arbitrary_assignment(m: usize, n: usize) -> impl Strategy<Value = Assignment> {
    proptest::collection::vec(
        proptest::option::of(proptest::collection::btree_set(0..m, 1..=m)),
        n,
    )
    .prop_map(move |choices| {
        let mut asg = Assignment::empty(m);
        for (channel, users) in choices.into_iter().enumerate() {
            match users {
                None => {}
                Some(users) if users.len() == 1 => {
                    let u = *users.iter().next().unwrap();
                    asg.private_sets[u].insert(channel);
                }
                Some(users) => {
                    asg.shared_users.insert(channel, users);
                }
            }
        }
        asg
    })
}

proptest! {
    #[test]
    fn views_match_per_definition_recomputation(asg in arbitrary_assignment(4, 6)) {
        asg.validate(4, 6).unwrap();
        let views = asg.views();
        for user in 0..4 {
            let common: BTreeSet<usize> = asg
                .shared_users
                .iter()
                .filter(|(_, users)| users.contains(&user))
                .map(|(&j, _)| j)
                .collect();
            prop_assert_eq!(&views.common_sets[user], &common);
            let total: BTreeSet<usize> =
                asg.private_sets[user].union(&common).copied().collect();
            prop_assert_eq!(&views.total_sets[user], &total);
            prop_assert!(asg.private_sets[user].is_disjoint(&common));
        }
        for channel in 0..6 {
            let count = asg.users_of_channel(channel).len();
            let in_group = views
                .share_groups
                .get(&count)
                .is_some_and(|g| g.contains(&channel));
            prop_assert!(count == 0 || in_group);
        }
    }

    #[test]
    fn contender_distribution_matches_subset_enumeration(
        asg in arbitrary_assignment(5, 7), seed in 0u64..1_000
    ) {
        let inst = generate_instance(5, 7, 0.05, 0.95, seed).unwrap();
        let p_con: Vec<f64> = (0..5)
            .map(|i| contention_prob_per_user(&inst, &asg, i))
            .collect();
        let expect = oracle::enumerate_contenders(&p_con).unwrap();
        let got = contender_distribution(&inst, &asg);
        let total: f64 = got.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        for (g, e) in got.iter().zip(&expect) {
            prop_assert!((g - e).abs() <= 1e-12);
        }
    }

    #[test]
    fn conditional_collision_matches_enumeration(m in 2usize..5, w in 2u32..9) {
        let formula = first_collision_prob_conditional(m, w).unwrap();
        let enumerated = oracle::enumerate_collision(m, w, CollisionEvent::PaperEq8).unwrap();
        prop_assert!((formula - enumerated).abs() <= 1e-12);
    }
}

#[test]
fn conditional_collision_is_monotone_over_the_grid() {
    // non-increasing in W for fixed m, non-decreasing in m for fixed W
    for m in 2usize..=10 {
        let mut last = f64::INFINITY;
        for w in 2u32..=256 {
            let v = first_collision_prob_conditional(m, w).unwrap();
            assert!(v <= last + 1e-15, "m={m}: P_c rose from {last} at W={w}");
            last = v;
        }
    }
    for w in 2u32..=256 {
        let mut last = 0.0;
        for m in 2usize..=10 {
            let v = first_collision_prob_conditional(m, w).unwrap();
            assert!(v + 1e-15 >= last, "W={w}: P_c fell to {v} at m={m}");
            last = v;
        }
    }
}

// ---------------------------------------------------------------------------
// greedy assignment vs the exhaustive oracle
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn greedy_never_beats_the_exhaustive_optimum(
        m in 1usize..4, n in 1usize..7, seed in 0u64..10_000
    ) {
        let inst = generate_instance(m, n, 0.05, 0.95, seed).unwrap();
        let (greedy, _) = assign_nonoverlapped(&inst);
        prop_assert!(greedy.is_nonoverlapped_partition(n));
        let greedy_total: f64 = (0..m)
            .map(|i| throughput_nonoverlapped(&inst, &greedy.private_sets[i], i).unwrap())
            .sum();
        let (_, optimal_total) = oracle::exhaustive_nonoverlapped(&inst).unwrap();
        prop_assert!(greedy_total <= optimal_total + 1e-9);
    }

    #[test]
    fn round_robin_single_sharing_is_a_partition(
        m in 1usize..6, n in 1usize..10, seed in 0u64..1_000
    ) {
        let inst = generate_instance(m, n, 0.1, 0.9, seed).unwrap();
        let rr = assign_round_robin(&inst, 1).unwrap();
        prop_assert!(rr.is_nonoverlapped_partition(n));
    }
}

// ---------------------------------------------------------------------------
// overlapped assignment invariants
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn overlapped_only_grows_access(seed in 0u64..200) {
        let inst = generate_instance(5, 8, 0.7, 0.9, seed).unwrap();
        let cfg = Alg2Config::default();
        let mac_cfg = MacConfig::default();
        let (asg1, _) = assign_nonoverlapped(&inst);
        let (asg2, derived, trace) = assign_overlapped(&inst, &cfg, &mac_cfg).unwrap();
        asg2.validate(5, 8).unwrap();
        let views = asg2.views();
        for user in 0..5 {
            prop_assert!(asg1.private_sets[user].is_subset(&views.total_sets[user]));
            prop_assert!(asg2.private_sets[user].is_subset(&asg1.private_sets[user]));
        }
        for entry in trace.entries.iter().filter(|e| e.phase == TracePhase::Overlapped) {
            prop_assert!(entry.score > cfg.epsilon);
            prop_assert!(entry.overhead_at_decision < 1.0);
        }
        // the analytic estimate never falls below the non-overlapped total
        let base: f64 = (0..5)
            .map(|i| throughput_nonoverlapped(&inst, &asg1.private_sets[i], i).unwrap())
            .sum();
        let est = total_throughput_overlapped_estimate(&inst, &asg2, &trace, derived.overhead)
            .unwrap();
        prop_assert!(est.total + 1e-12 >= base);
        prop_assert!(est.total <= 5.0);
        for v in &est.per_user {
            prop_assert!((0.0..=1.0).contains(v));
        }
        // the derived window is consistent with the final assignment
        prop_assert!(derived.first_collision_prob <= mac_cfg.epsilon_p);
        prop_assert_eq!(solve_window(&inst, &asg2, &mac_cfg).unwrap(), derived.window);
        prop_assert!((overhead(&mac_cfg, derived.window).unwrap() - derived.overhead).abs() < 1e-15);
    }

    #[test]
    fn solved_window_is_minimal(asg in arbitrary_assignment(5, 6), seed in 0u64..300) {
        let inst = generate_instance(5, 6, 0.3, 0.95, seed).unwrap();
        let cfg = MacConfig::default();
        match solve_window(&inst, &asg, &cfg) {
            Ok(w) => {
                prop_assert!(first_collision_prob(&inst, &asg, w).unwrap() <= cfg.epsilon_p);
                if w > cfg.w_min {
                    prop_assert!(
                        first_collision_prob(&inst, &asg, w - 1).unwrap() > cfg.epsilon_p
                    );
                }
            }
            Err(chanshare::Error::WindowSolverFailure { p_at_w_max, .. }) => {
                prop_assert!(p_at_w_max > cfg.epsilon_p);
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn instance_json_roundtrip_is_bit_exact(
        m in 1usize..5, n in 1usize..7, seed in proptest::num::u64::ANY
    ) {
        let inst = generate_instance(m, n, 0.0, 1.0, seed).unwrap();
        let text = serde_json::to_string(&inst).unwrap();
        let back: ProblemInstance = serde_json::from_str(&text).unwrap();
        for (ra, rb) in inst.avail_prob.iter().zip(&back.avail_prob) {
            for (a, b) in ra.iter().zip(rb) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}

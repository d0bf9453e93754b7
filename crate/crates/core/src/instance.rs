//! Problem data model: availability matrices and channel assignments.
//!
//! A [`ProblemInstance`] holds the `M x N` matrix of probabilities that
//! channel `j` is available (idle) at secondary user `i`. Entries are modeled
//! as mutually independent. An [`Assignment`] maps channels to users: each
//! channel is either the exclusive property of one user (a member of that
//! user's private set `S_i`) or shared by a set of users `U_j` that must
//! contend for it through the MAC protocol.
//!
//! All user and channel indices are 0-based.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `M` secondary users, `N` channels, and the availability matrix `p[i][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub num_users: usize,
    pub num_channels: usize,
    /// Row-major `M x N` matrix; `avail_prob[i][j]` is the probability that
    /// channel `j` is available at user `i`.
    pub avail_prob: Vec<Vec<f64>>,
    /// Generation seed, kept for provenance when the instance was drawn by
    /// [`generate_instance`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ProblemInstance {
    /// Builds an instance from an availability matrix, validating shape and
    /// probability ranges.
    pub fn new(avail_prob: Vec<Vec<f64>>) -> Result<Self> {
        let num_users = avail_prob.len();
        let num_channels = avail_prob.first().map_or(0, Vec::len);
        let inst = Self {
            num_users,
            num_channels,
            avail_prob,
            seed: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 || self.num_channels == 0 {
            return Err(Error::InvalidParameter(
                "instance needs at least one user and one channel".into(),
            ));
        }
        if self.avail_prob.len() != self.num_users {
            return Err(Error::InvalidParameter(format!(
                "avail_prob has {} rows, expected {}",
                self.avail_prob.len(),
                self.num_users
            )));
        }
        for (i, row) in self.avail_prob.iter().enumerate() {
            if row.len() != self.num_channels {
                return Err(Error::InvalidParameter(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    self.num_channels
                )));
            }
            for (j, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParameter(format!(
                        "avail_prob[{i}][{j}] = {p} is not a probability"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `p[i][j]`: probability that channel `j` is available at user `i`.
    #[inline]
    pub fn avail(&self, user: usize, channel: usize) -> f64 {
        self.avail_prob[user][channel]
    }

    /// `1 - p[i][j]`: probability that channel `j` is busy at user `i`.
    #[inline]
    pub fn unavail(&self, user: usize, channel: usize) -> f64 {
        1.0 - self.avail_prob[user][channel]
    }

    pub fn check_user(&self, user: usize) -> Result<()> {
        if user >= self.num_users {
            return Err(Error::IndexOutOfRange(format!(
                "user {} (instance has {} users)",
                user, self.num_users
            )));
        }
        Ok(())
    }

    pub fn check_channel(&self, channel: usize) -> Result<()> {
        if channel >= self.num_channels {
            return Err(Error::IndexOutOfRange(format!(
                "channel {} (instance has {} channels)",
                channel, self.num_channels
            )));
        }
        Ok(())
    }
}

/// Draws an `M x N` availability matrix with entries independent and uniform
/// on `[prob_low, prob_high]`. The same seed always yields a bit-identical
/// matrix.
pub fn generate_instance(
    num_users: usize,
    num_channels: usize,
    prob_low: f64,
    prob_high: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    if num_users == 0 || num_channels == 0 {
        return Err(Error::InvalidParameter(
            "dimensions must be at least 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&prob_low) || !(0.0..=1.0).contains(&prob_high) || prob_low > prob_high
    {
        return Err(Error::InvalidParameter(format!(
            "invalid probability interval [{prob_low}, {prob_high}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = prob_high - prob_low;
    let avail_prob = (0..num_users)
        .map(|_| {
            (0..num_channels)
                .map(|_| prob_low + rng.gen::<f64>() * span)
                .collect()
        })
        .collect();
    Ok(ProblemInstance {
        num_users,
        num_channels,
        avail_prob,
        seed: Some(seed),
    })
}

/// Which channels belong to which users.
///
/// `private_sets[i]` is `S_i`, the separate set: channels only user `i` may
/// use. `shared_users[j]` is `U_j`, the users contending for channel `j`; a
/// channel never appears both in a private set and in `shared_users`. A
/// shared entry may contain a single user, which models a channel the user
/// must still win through contention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub private_sets: Vec<BTreeSet<usize>>,
    pub shared_users: BTreeMap<usize, BTreeSet<usize>>,
}

impl Assignment {
    /// An assignment with no channels allocated.
    pub fn empty(num_users: usize) -> Self {
        Self {
            private_sets: vec![BTreeSet::new(); num_users],
            shared_users: BTreeMap::new(),
        }
    }

    pub fn num_users(&self) -> usize {
        self.private_sets.len()
    }

    /// All users that may use channel `j` (owner, or the sharing set).
    pub fn users_of_channel(&self, channel: usize) -> BTreeSet<usize> {
        if let Some(users) = self.shared_users.get(&channel) {
            return users.clone();
        }
        self.private_sets
            .iter()
            .enumerate()
            .filter(|(_, set)| set.contains(&channel))
            .map(|(i, _)| i)
            .collect()
    }

    /// Grants `user` access to `channel`. A privately held channel moves out
    /// of its owner's separate set into shared membership `{owner, user}`; a
    /// shared channel simply gains a member; an unassigned channel becomes a
    /// singleton shared entry.
    pub fn add_sharer(&mut self, channel: usize, user: usize) {
        if let Some(users) = self.shared_users.get_mut(&channel) {
            users.insert(user);
            return;
        }
        let owner = self
            .private_sets
            .iter()
            .position(|set| set.contains(&channel));
        match owner {
            Some(owner) if owner != user => {
                self.private_sets[owner].remove(&channel);
                let mut users = BTreeSet::new();
                users.insert(owner);
                users.insert(user);
                self.shared_users.insert(channel, users);
            }
            Some(_) => {} // user already owns the channel
            None => {
                let mut users = BTreeSet::new();
                users.insert(user);
                self.shared_users.insert(channel, users);
            }
        }
    }

    /// Checks the structural invariants against instance dimensions.
    pub fn validate(&self, num_users: usize, num_channels: usize) -> Result<()> {
        if self.private_sets.len() != num_users {
            return Err(Error::InvalidAssignment(format!(
                "{} private sets for {} users",
                self.private_sets.len(),
                num_users
            )));
        }
        let mut privately_held = BTreeSet::new();
        for (i, set) in self.private_sets.iter().enumerate() {
            for &j in set {
                if j >= num_channels {
                    return Err(Error::InvalidAssignment(format!(
                        "private channel {j} of user {i} out of range"
                    )));
                }
                if !privately_held.insert(j) {
                    return Err(Error::InvalidAssignment(format!(
                        "channel {j} appears in two private sets"
                    )));
                }
            }
        }
        for (&j, users) in &self.shared_users {
            if j >= num_channels {
                return Err(Error::InvalidAssignment(format!(
                    "shared channel {j} out of range"
                )));
            }
            if privately_held.contains(&j) {
                return Err(Error::InvalidAssignment(format!(
                    "channel {j} is both private and shared"
                )));
            }
            if users.is_empty() {
                return Err(Error::InvalidAssignment(format!(
                    "shared channel {j} has no users"
                )));
            }
            for &u in users {
                if u >= num_users {
                    return Err(Error::InvalidAssignment(format!(
                        "user {u} sharing channel {j} out of range"
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when every channel belongs to exactly one private set and none is
    /// shared — the non-overlapped constraint.
    pub fn is_nonoverlapped_partition(&self, num_channels: usize) -> bool {
        if !self.shared_users.is_empty() {
            return false;
        }
        let mut seen = BTreeSet::new();
        for set in &self.private_sets {
            for &j in set {
                if j >= num_channels || !seen.insert(j) {
                    return false;
                }
            }
        }
        seen.len() == num_channels
    }

    /// Computes the derived set views; see [`assignment_views`].
    pub fn views(&self) -> AssignmentViews {
        assignment_views(self)
    }
}

/// Derived views of an [`Assignment`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentViews {
    /// `S_i^com`: channels user `i` shares (its membership in `shared_users`).
    pub common_sets: Vec<BTreeSet<usize>>,
    /// `S_i^tot = S_i ∪ S_i^com`: everything user `i` may use.
    pub total_sets: Vec<BTreeSet<usize>>,
    /// `G_l`: channels used by exactly `l` users. Privately held channels are
    /// the `l = 1` group. Empty groups are omitted.
    pub share_groups: BTreeMap<usize, BTreeSet<usize>>,
}

/// Recomputes the common sets, total sets, and share groups from the stored
/// private/shared membership.
pub fn assignment_views(asg: &Assignment) -> AssignmentViews {
    let m = asg.num_users();
    let mut common_sets = vec![BTreeSet::new(); m];
    let mut share_groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();

    for (i, set) in asg.private_sets.iter().enumerate() {
        let _ = i;
        for &j in set {
            share_groups.entry(1).or_default().insert(j);
        }
    }
    for (&j, users) in &asg.shared_users {
        share_groups.entry(users.len()).or_default().insert(j);
        for &u in users {
            common_sets[u].insert(j);
        }
    }
    let total_sets = asg
        .private_sets
        .iter()
        .zip(&common_sets)
        .map(|(private, common)| private.union(common).copied().collect())
        .collect();
    AssignmentViews {
        common_sets,
        total_sets,
        share_groups,
    }
}

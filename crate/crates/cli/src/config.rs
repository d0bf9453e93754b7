//! Experiment configuration file: one TOML document drives a whole study.
//!
//! ```toml
//! [instance]
//! num_users = 15
//! n_values = [4, 8, 12, 16, 20, 24]
//! prob_low = 0.7
//! prob_high = 0.9
//! realizations = 30
//! master_seed = 1
//!
//! [mac]
//! theta_us = 20.0
//! t_rts_us = 48.0
//! t_cts_us = 40.0
//! t_sifs_us = 15.0
//! t_cycle_us = 3000.0
//! epsilon_p = 0.02
//!
//! [alg2]
//! epsilon = 0.001
//! epsilon_delta = 0.005
//!
//! [sim]
//! enabled = false
//! cycles = 100000
//! overhead_model = "analytic_delta"
//! collision_event = "paper_eq8"
//!
//! [run]
//! algorithms = ["alg1", "alg2", "rr1"]
//! output = "results.csv"
//! label = "throughput-vs-n"
//! ```
//!
//! Every section except `[instance]` may be omitted; defaults follow the
//! reference parameter set above.

use std::fmt;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use chanshare::assign::Alg2Config;
use chanshare::mac::{CollisionEvent, MacConfig};
use chanshare::simulate::OverheadModel;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSection,
    #[serde(default)]
    pub mac: MacConfig,
    #[serde(default)]
    pub alg2: Alg2Config,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub scan: ScanSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    /// Single user count; shorthand for a one-element `m_values`.
    #[serde(default)]
    pub num_users: Option<usize>,
    /// User-count grid; overlaid studies list several values here.
    #[serde(default)]
    pub m_values: Option<Vec<usize>>,
    pub n_values: Vec<usize>,
    #[serde(default = "default_prob_low")]
    pub prob_low: f64,
    #[serde(default = "default_prob_high")]
    pub prob_high: f64,
    #[serde(default = "default_realizations")]
    pub realizations: u32,
    #[serde(default)]
    pub master_seed: u64,
}

impl InstanceSection {
    /// The deduplicated, sorted user-count grid.
    pub fn user_counts(&self) -> Vec<usize> {
        let mut counts = match (&self.m_values, self.num_users) {
            (Some(values), _) => values.clone(),
            (None, Some(m)) => vec![m],
            (None, None) => Vec::new(),
        };
        counts.sort_unstable();
        counts.dedup();
        counts
    }
}

fn default_prob_low() -> f64 {
    0.7
}
fn default_prob_high() -> f64 {
    0.9
}
fn default_realizations() -> u32 {
    30
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    /// Simulate every algorithm's assignment and fill the sim CSV columns.
    pub enabled: bool,
    pub cycles: u64,
    pub overhead_model: OverheadModel,
    pub collision_event: CollisionEvent,
    /// Fixed contention window; `None` uses the solved window per assignment.
    pub window: Option<u32>,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            enabled: false,
            cycles: 100_000,
            overhead_model: OverheadModel::AnalyticDelta,
            collision_event: CollisionEvent::PaperEq8,
            window: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub algorithms: Vec<Algorithm>,
    pub output: Option<PathBuf>,
    pub label: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            algorithms: vec![Algorithm::Alg1, Algorithm::Alg2, Algorithm::RoundRobin(1)],
            output: None,
            label: "experiment".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    /// Contention windows swept by `collision-scan`.
    pub w_values: Vec<u32>,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            w_values: (1..=30).map(|k| 2 * k).collect(),
        }
    }
}

/// A selectable assignment algorithm. Round-robin carries its sharing factor:
/// `rr1` is the non-overlapped baseline, `rr2`/`rr5` the 2- and 5-user
/// sharing baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Algorithm {
    Alg1,
    Alg2,
    RoundRobin(usize),
}

impl Algorithm {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "alg1" => Ok(Self::Alg1),
            "alg2" => Ok(Self::Alg2),
            _ => {
                if let Some(k) = text.strip_prefix("rr") {
                    let k: usize = k
                        .parse()
                        .with_context(|| format!("bad round-robin sharing factor in '{text}'"))?;
                    if k == 0 {
                        bail!("round-robin sharing factor must be at least 1");
                    }
                    return Ok(Self::RoundRobin(k));
                }
                bail!("unknown algorithm '{text}' (expected alg1, alg2, or rr<k>)")
            }
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Alg1 => write!(f, "alg1"),
            Self::Alg2 => write!(f, "alg2"),
            Self::RoundRobin(k) => write!(f, "rr{k}"),
        }
    }
}

impl<'de> Deserialize<'de> for Algorithm {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Self::parse(&text).map_err(serde::de::Error::custom)
    }
}

impl ExperimentConfig {
    /// Parses and validates a config document. TOML errors keep their
    /// line/column information.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let inst = &self.instance;
        let user_counts = inst.user_counts();
        if user_counts.is_empty() {
            bail!("instance needs num_users or a non-empty m_values list");
        }
        if user_counts.contains(&0) {
            bail!("user counts must be at least 1");
        }
        if inst.n_values.is_empty() {
            bail!("instance.n_values must list at least one channel count");
        }
        if inst.n_values.contains(&0) {
            bail!("instance.n_values entries must be at least 1");
        }
        if !(0.0..=1.0).contains(&inst.prob_low)
            || !(0.0..=1.0).contains(&inst.prob_high)
            || inst.prob_low > inst.prob_high
        {
            bail!(
                "instance probability interval [{}, {}] is invalid",
                inst.prob_low,
                inst.prob_high
            );
        }
        if inst.realizations == 0 {
            bail!("instance.realizations must be at least 1");
        }
        self.mac.validate()?;
        self.alg2.validate()?;
        if self.sim.cycles == 0 {
            bail!("sim.cycles must be at least 1");
        }
        if let Some(w) = self.sim.window {
            if w < 2 {
                bail!("sim.window must be at least 2");
            }
        }
        if self.run.algorithms.is_empty() {
            bail!("run.algorithms must select at least one algorithm");
        }
        for alg in &self.run.algorithms {
            if let Algorithm::RoundRobin(k) = alg {
                if *k > user_counts[0] {
                    bail!("{alg} shares each channel among more users than the smallest grid point has");
                }
            }
        }
        if self.scan.w_values.is_empty() || self.scan.w_values.iter().any(|&w| w < 2) {
            bail!("scan.w_values must be non-empty with every window >= 2");
        }
        Ok(())
    }
}

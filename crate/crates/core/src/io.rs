//! File formats: JSON documents for instances and assignments.
//!
//! Instance documents carry `{num_users, num_channels, avail_prob, seed?}`;
//! assignment documents carry `{private_sets, shared_users, trace?}`. Both
//! round-trip losslessly at full double precision.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assign::AssignmentTrace;
use crate::error::Result;
use crate::instance::{Assignment, ProblemInstance};

/// An [`Assignment`] plus its optional trace, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentDocument {
    pub private_sets: Vec<BTreeSet<usize>>,
    pub shared_users: BTreeMap<usize, BTreeSet<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<AssignmentTrace>,
}

impl AssignmentDocument {
    pub fn new(assignment: Assignment, trace: Option<AssignmentTrace>) -> Self {
        Self {
            private_sets: assignment.private_sets,
            shared_users: assignment.shared_users,
            trace,
        }
    }

    pub fn assignment(&self) -> Assignment {
        Assignment {
            private_sets: self.private_sets.clone(),
            shared_users: self.shared_users.clone(),
        }
    }
}

pub fn read_instance(path: &Path) -> Result<ProblemInstance> {
    let text = fs::read_to_string(path)?;
    let inst: ProblemInstance = serde_json::from_str(&text)?;
    inst.validate()?;
    Ok(inst)
}

pub fn write_instance(path: &Path, inst: &ProblemInstance) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(inst)?)?;
    Ok(())
}

pub fn read_assignment(path: &Path) -> Result<AssignmentDocument> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_assignment(path: &Path, doc: &AssignmentDocument) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(doc)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assign::{assign_nonoverlapped, assign_round_robin};
    use crate::instance::generate_instance;

    #[test]
    fn instance_roundtrip_is_lossless() {
        let inst = generate_instance(3, 5, 0.123456789012345, 0.98765432109876, 77).unwrap();
        let text = serde_json::to_string(&inst).unwrap();
        let back: ProblemInstance = serde_json::from_str(&text).unwrap();
        assert_eq!(inst, back); // bit-exact doubles
        assert_eq!(back.seed, Some(77));
    }

    #[test]
    fn assignment_roundtrip_with_trace() {
        let inst = generate_instance(4, 6, 0.7, 0.9, 5).unwrap();
        let (asg, trace) = assign_nonoverlapped(&inst);
        let doc = AssignmentDocument::new(asg.clone(), Some(trace));
        let text = serde_json::to_string(&doc).unwrap();
        let back: AssignmentDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(doc, back);
        assert_eq!(back.assignment(), asg);
    }

    #[test]
    fn assignment_document_without_trace() {
        let inst = generate_instance(4, 6, 0.7, 0.9, 5).unwrap();
        let asg = assign_round_robin(&inst, 2).unwrap();
        let doc = AssignmentDocument::new(asg, None);
        let text = serde_json::to_string(&doc).unwrap();
        assert!(!text.contains("trace"));
        let back: AssignmentDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(doc, back);
    }

    #[test]
    fn files_roundtrip_on_disk() {
        let dir = std::env::temp_dir().join(format!("chanshare-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let inst = generate_instance(2, 3, 0.7, 0.9, 9).unwrap();
        let ipath = dir.join("instance.json");
        write_instance(&ipath, &inst).unwrap();
        assert_eq!(read_instance(&ipath).unwrap(), inst);
        fs::remove_dir_all(&dir).ok();
    }
}

use serde::{Deserialize, Serialize};

use super::{Affinity, Group, Hyperparams, Lifetime, Membership, ModelState, Transition};
use crate::error::{Error, Result};

/// JSON form of a [`ModelState`].
///
/// Birth and death are one-based and inclusive. Memberships are one string of
/// `0`/`1` per node covering the group's lifetime. Reals are written with
/// shortest round-trip precision so a document reloads bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDocument {
    pub num_nodes: usize,
    pub num_steps: usize,
    pub directed: bool,
    pub hyper: Hyperparams,
    pub density: Vec<f64>,
    pub next_label: u64,
    pub groups: Vec<GroupDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDocument {
    pub label: u64,
    pub birth: usize,
    pub death: usize,
    pub join: f64,
    pub leave: f64,
    pub affinity: [[f64; 2]; 2],
    pub members: Vec<String>,
}

impl From<&ModelState> for StateDocument {
    fn from(state: &ModelState) -> Self {
        let groups = state
            .groups
            .iter()
            .map(|g| GroupDocument {
                label: g.label,
                birth: g.lifetime.birth + 1,
                death: g.lifetime.death + 1,
                join: g.transition.join,
                leave: g.transition.leave,
                affinity: g.affinity.0,
                members: (0..state.num_nodes())
                    .map(|i| {
                        g.members
                            .chain(i)
                            .iter()
                            .map(|&z| if z { '1' } else { '0' })
                            .collect()
                    })
                    .collect(),
            })
            .collect();
        StateDocument {
            num_nodes: state.num_nodes(),
            num_steps: state.num_steps(),
            directed: state.is_directed(),
            hyper: state.hyper,
            density: state.density.clone(),
            next_label: state.next_label(),
            groups,
        }
    }
}

impl TryFrom<StateDocument> for ModelState {
    type Error = Error;

    fn try_from(doc: StateDocument) -> Result<Self> {
        let mut state =
            ModelState::new(doc.num_nodes, doc.num_steps, doc.directed, doc.density, doc.hyper)?;
        for (k, g) in doc.groups.into_iter().enumerate() {
            if g.birth == 0 || g.death == 0 {
                return Err(Error::Document(format!("group {k}: times are one-based")));
            }
            let lifetime = Lifetime::new(g.birth - 1, g.death - 1, doc.num_steps)
                .map_err(|e| Error::Document(format!("group {k}: {e}")))?;
            if g.members.len() != doc.num_nodes {
                return Err(Error::Document(format!(
                    "group {k}: {} membership rows for {} nodes",
                    g.members.len(),
                    doc.num_nodes
                )));
            }
            let mut members = Membership::zeros(doc.num_nodes, lifetime.len());
            for (i, row) in g.members.iter().enumerate() {
                if row.len() != lifetime.len() {
                    return Err(Error::Document(format!(
                        "group {k}, node {i}: chain of length {} for a lifetime of {}",
                        row.len(),
                        lifetime.len()
                    )));
                }
                for (off, c) in row.chars().enumerate() {
                    let z = match c {
                        '0' => false,
                        '1' => true,
                        other => {
                            return Err(Error::Document(format!(
                                "group {k}, node {i}: unexpected membership symbol {other:?}"
                            )))
                        }
                    };
                    members.set(i, off, z);
                }
            }
            state.push_labeled(Group {
                label: g.label,
                lifetime,
                transition: Transition {
                    join: g.join,
                    leave: g.leave,
                },
                affinity: Affinity(g.affinity),
                members,
            });
        }
        state.next_label = state.next_label.max(doc.next_label);
        state.validate()?;
        Ok(state)
    }
}

impl ModelState {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&StateDocument::from(self)).expect("state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StateDocument = serde_json::from_str(text)?;
        ModelState::try_from(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_state;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn json_round_trip_is_exact(seed in any::<u64>(), directed in any::<bool>()) {
            let hyper = Hyperparams { lambda: 3.0, gamma: 0.3, alpha: 1.3, beta: 2.7, nu: 1.1 };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let density = vec![-1.234_567_890_123_4, 0.1 + 0.2, 1e-17, -3.0];
            let state = sample_state(&hyper, 5, 4, directed, density, &mut rng).unwrap();
            let text = state.to_json();
            let back = ModelState::from_json(&text).unwrap();
            prop_assert_eq!(&back, &state);
            prop_assert_eq!(back.to_json(), text);
        }
    }

    #[test]
    fn rejects_bad_membership_symbols() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hyper = Hyperparams {
            lambda: 4.0,
            ..Hyperparams::default()
        };
        let state = sample_state(&hyper, 3, 2, false, vec![0.0; 2], &mut rng).unwrap();
        assert!(state.num_groups() > 0);
        let mut doc = StateDocument::from(&state);
        doc.groups[0].members[0] = "x".repeat(doc.groups[0].members[0].len());
        assert!(ModelState::try_from(doc).is_err());
    }
}

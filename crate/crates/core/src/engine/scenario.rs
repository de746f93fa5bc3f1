//! Initial-probability overrides used by the risk measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BankNode, SystemState, PD_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeMode {
    #[default]
    None,
    /// Probability 1 at `t = 0`, so the node defaults in the first period.
    ForceDefault,
    /// Probability held at 0 throughout. The node keeps its place in the
    /// correlated draw.
    Immune,
}

/// Per-node modes and an additive shift of the initial probabilities. Empty
/// vectors mean "no override".
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioOverride {
    pub modes: Vec<NodeMode>,
    pub pd_shift: Vec<f64>,
}

impl ScenarioOverride {
    pub fn baseline() -> Self {
        Self::default()
    }

    pub fn shift(pd_shift: Vec<f64>) -> Self {
        Self {
            modes: Vec::new(),
            pd_shift,
        }
    }

    pub fn single(n: usize, node: usize, mode: NodeMode) -> Self {
        let mut modes = vec![NodeMode::None; n];
        modes[node] = mode;
        Self {
            modes,
            pd_shift: Vec::new(),
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.modes.iter().all(|&m| m == NodeMode::None) && self.pd_shift.iter().all(|&d| d == 0.0)
    }

    /// The state at `t = 0` under this override.
    pub fn initial_state(&self, banks: &[BankNode]) -> Result<SystemState> {
        let n = banks.len();
        for (what, len) in [("modes", self.modes.len()), ("pd_shift", self.pd_shift.len())] {
            if len != 0 && len != n {
                return Err(Error::domain(format!("scenario {what} has {len} entries for {n} banks")));
            }
        }
        let mut state = SystemState::initial(banks);
        for (i, bank) in banks.iter().enumerate() {
            if let Some(&d) = self.pd_shift.get(i) {
                let shifted = bank.pd0 + d;
                if !(0.0..=1.0).contains(&shifted) {
                    return Err(Error::domain(format!(
                        "shifted probability {shifted} of bank {} is outside [0, 1]",
                        bank.name
                    )));
                }
                state.pd[i] = shifted.clamp(PD_FLOOR, 1.0);
            }
            match self.modes.get(i).copied().unwrap_or_default() {
                NodeMode::None => {}
                NodeMode::ForceDefault => state.pd[i] = 1.0,
                NodeMode::Immune => {
                    state.pd[i] = 0.0;
                    state.immune[i] = true;
                }
            }
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn banks() -> Vec<BankNode> {
        vec![
            BankNode::new(0, "a", 100.0, 10.0, 0.01, 0.6).unwrap(),
            BankNode::new(1, "b", 50.0, 5.0, 0.0, 0.6).unwrap(),
        ]
    }

    #[test]
    fn modes_and_shifts() {
        let s = ScenarioOverride::single(2, 0, NodeMode::ForceDefault).initial_state(&banks()).unwrap();
        assert_eq!(s.pd, vec![1.0, PD_FLOOR]);
        let s = ScenarioOverride::single(2, 1, NodeMode::Immune).initial_state(&banks()).unwrap();
        assert_eq!(s.pd[1], 0.0);
        assert!(s.immune[1]);
        let s = ScenarioOverride::shift(vec![0.02, 0.0]).initial_state(&banks()).unwrap();
        assert!((s.pd[0] - 0.03).abs() < 1e-15);
        assert!(ScenarioOverride::shift(vec![0.995, 0.0]).initial_state(&banks()).is_err());
        assert!(ScenarioOverride::shift(vec![0.0]).initial_state(&banks()).is_err());
    }
}

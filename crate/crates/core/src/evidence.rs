//! Belief-mass algebra over the two-hypothesis frame {occupied, empty}.
//!
//! A [`BeliefMass`] spreads unit mass over the four subsets of the frame:
//! `{O}`, `{E}`, `Θ = {O, E}` and the empty set `∅`. Two combination rules are
//! provided. [`combine_dempster`] renormalizes the conflicting mass away and
//! refuses inputs that carry mass on `∅`; [`combine_smets`] is the unnormalized
//! conjunctive rule of the transferable belief model, where `∅` is a regular
//! focal element that accumulates conflict.
//!
//! The weight of conflict is `Con = ln(1 / (1 - k))`, where `k` is the mass the
//! conjunctive rule sends to `∅`.

use serde::{Deserialize, Serialize};

use crate::error::EvidenceError;

/// Cap distance from total conflict. `k` is clamped to `1 - SATURATION_EPS`.
pub const SATURATION_EPS: f64 = 1e-9;

/// Tolerance for the unit-sum invariant.
pub const MASS_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefMass {
    pub occupied: f64,
    pub empty: f64,
    pub theta: f64,
    pub conflict: f64,
}

impl Default for BeliefMass {
    fn default() -> Self {
        Self::vacuous()
    }
}

impl BeliefMass {
    /// Total ignorance: all mass on Θ.
    pub const fn vacuous() -> Self {
        Self {
            occupied: 0.0,
            empty: 0.0,
            theta: 1.0,
            conflict: 0.0,
        }
    }

    pub fn new(occupied: f64, empty: f64, theta: f64, conflict: f64) -> Result<Self, EvidenceError> {
        let m = Self {
            occupied,
            empty,
            theta,
            conflict,
        };
        m.validate()?;
        Ok(m)
    }

    /// Mass on `{O}` and `{E}` with the remainder on Θ.
    pub fn from_occupied_empty(occupied: f64, empty: f64) -> Result<Self, EvidenceError> {
        Self::new(occupied, empty, 1.0 - occupied - empty, 0.0)
    }

    pub fn validate(&self) -> Result<(), EvidenceError> {
        let parts = [self.occupied, self.empty, self.theta, self.conflict];
        if parts.iter().any(|v| !v.is_finite()) {
            return Err(EvidenceError::InvalidMass(format!("non-finite mass in {self:?}")));
        }
        // Allow float dust below zero, nothing more.
        if parts.iter().any(|&v| v < -MASS_SUM_TOL) {
            return Err(EvidenceError::InvalidMass(format!("negative mass in {self:?}")));
        }
        let sum = self.sum();
        if (sum - 1.0).abs() > MASS_SUM_TOL {
            return Err(EvidenceError::InvalidMass(format!("masses sum to {sum}")));
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.occupied + self.empty + self.theta + self.conflict
    }

    pub fn is_vacuous(&self) -> bool {
        self.occupied == 0.0 && self.empty == 0.0 && self.conflict == 0.0
    }

    /// Larger of the two singleton masses.
    pub fn commitment(&self) -> f64 {
        self.occupied.max(self.empty)
    }
}

/// Weight of conflict for a single combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictWeight {
    pub con: f64,
    /// `k` reached the saturation cap and `con` is the capped value.
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictObservation {
    pub k: f64,
    pub con: f64,
    pub saturated: bool,
    /// Change of mass on `∅` produced by the update (Smets rule only; zero for Dempster).
    pub smets_empty_delta: f64,
}

/// Unnormalized products landing on each subset.
struct Conjunction {
    occupied: f64,
    empty: f64,
    theta: f64,
    conflict: f64,
}

// Every pairwise sum is written symmetrically in (a, b) so that swapping the
// operands yields bit-identical results.
fn conjunction(a: &BeliefMass, b: &BeliefMass) -> Conjunction {
    let occupied = a.occupied * b.occupied + (a.occupied * b.theta + a.theta * b.occupied);
    let empty = a.empty * b.empty + (a.empty * b.theta + a.theta * b.empty);
    let theta = a.theta * b.theta;
    let contradiction = a.occupied * b.empty + a.empty * b.occupied;
    // ∅ ∩ X = ∅ for every X.
    let with_empty_set = (a.conflict * b.sum() + b.conflict * a.sum()) - a.conflict * b.conflict;
    Conjunction {
        occupied,
        empty,
        theta,
        conflict: contradiction + with_empty_set,
    }
}

/// Conflict factor `k`: total product mass over pairs with empty intersection.
pub fn conflict_k(a: &BeliefMass, b: &BeliefMass) -> f64 {
    conjunction(a, b).conflict
}

/// `Con = ln(1 / (1 - k))`, with `k` capped at `1 - SATURATION_EPS`.
pub fn weight_of_conflict(k: f64) -> Result<ConflictWeight, EvidenceError> {
    if !(0.0..=1.0).contains(&k) {
        // Products of valid masses can overshoot 1 by rounding.
        if k > 1.0 && k < 1.0 + MASS_SUM_TOL {
            return weight_of_conflict(1.0);
        }
        if k < 0.0 && k > -MASS_SUM_TOL {
            return weight_of_conflict(0.0);
        }
        return Err(EvidenceError::ConflictDomain(k));
    }
    let cap = 1.0 - SATURATION_EPS;
    let saturated = k >= cap;
    let k = k.min(cap);
    Ok(ConflictWeight {
        con: -(1.0 - k).ln(),
        saturated,
    })
}

/// Dempster's rule: conjunctive combination renormalized by `1 - k`.
pub fn combine_dempster(
    a: &BeliefMass,
    b: &BeliefMass,
) -> Result<(BeliefMass, ConflictObservation), EvidenceError> {
    if a.conflict != 0.0 || b.conflict != 0.0 {
        return Err(EvidenceError::EmptySetMass);
    }
    let c = conjunction(a, b);
    let k = c.conflict;
    let w = weight_of_conflict(k)?;
    if w.saturated {
        return Err(EvidenceError::Saturated { k, con: w.con });
    }
    // Equal to 1 - k, but summing the surviving products keeps the result
    // normalized even when k is close to 1.
    let norm = c.occupied + c.empty + c.theta;
    let out = BeliefMass {
        occupied: c.occupied / norm,
        empty: c.empty / norm,
        theta: c.theta / norm,
        conflict: 0.0,
    };
    Ok((
        out,
        ConflictObservation {
            k,
            con: w.con,
            saturated: false,
            smets_empty_delta: 0.0,
        },
    ))
}

/// Smets' unnormalized conjunctive rule; `∅` keeps whatever mass conflicts.
pub fn combine_smets(
    a: &BeliefMass,
    b: &BeliefMass,
) -> Result<(BeliefMass, ConflictObservation), EvidenceError> {
    let c = conjunction(a, b);
    let k = c.conflict.clamp(0.0, 1.0);
    let w = weight_of_conflict(k)?;
    let out = BeliefMass {
        occupied: c.occupied,
        empty: c.empty,
        theta: c.theta,
        conflict: c.conflict,
    };
    Ok((
        out,
        ConflictObservation {
            k,
            con: w.con,
            saturated: w.saturated,
            smets_empty_delta: out.conflict - a.conflict,
        },
    ))
}

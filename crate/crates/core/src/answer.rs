//! Constant-time maintenance of the Boolean sentences.
//!
//! Each sentence asserts a cardinality condition (a threshold or a residue)
//! on the number of active-domain elements whose radius-`r` neighborhood
//! realizes a fixed single-centre type. The census is kept as a counter:
//! after an update only elements within distance `r+1` of the updated
//! constants can change realization (their neighborhood content or domain
//! membership changed), so the counter is adjusted by re-checking exactly
//! those elements against the before and after states.
//!
//! This path is deliberately self-contained — it matches types by direct
//! isomorphism tests rather than going through the shared intern table, so
//! sentence answers stay correct even while the heavier tuple index is
//! exercised separately.

use std::collections::BTreeSet;

use crate::db::{isomorphic, Constant, Database};
use crate::logic::{HanfKind, HanfSentence};
use crate::ops;
use crate::types::type_of;

/// Live census for one sentence.
#[derive(Debug, Clone)]
pub struct BoolState {
    kind: HanfKind,
    ty: crate::types::NeighborhoodType,
    count: u64,
}

impl BoolState {
    /// State for an empty database: census zero.
    pub fn new(sentence: &HanfSentence) -> BoolState {
        assert_eq!(
            sentence.ty.centres.len(),
            1,
            "sentences quantify over single elements"
        );
        BoolState {
            kind: sentence.kind,
            ty: sentence.ty.clone(),
            count: 0,
        }
    }

    /// Sentence truth right now, read off the counter.
    pub fn holds(&self) -> bool {
        self.kind.satisfied_by(self.count)
    }

    /// Number of realizing elements right now.
    pub fn census(&self) -> u64 {
        self.count
    }

    /// Radius of the ball around the updated constants that covers every
    /// element whose realization can change.
    pub fn affected_radius(&self) -> usize {
        self.ty.radius + 1
    }

    /// Does `a` realize the sentence type in `db`?
    pub fn matches(&self, db: &Database, a: Constant) -> bool {
        ops::tick();
        if !db.adom_contains(a) {
            return false;
        }
        let ty = type_of(db, &[a], self.ty.radius);
        isomorphic(&ty.structure, &ty.centres, &self.ty.structure, &self.ty.centres)
    }

    /// Count how many of `affected` realize the type in the pre-update
    /// state. Call with the database as it was before the update.
    pub fn stage(&self, db_before: &Database, affected: &BTreeSet<Constant>) -> u64 {
        affected.iter().filter(|&&a| self.matches(db_before, a)).count() as u64
    }

    /// Fold in the update: drop the staged pre-update matches, add the
    /// post-update matches over the same affected set.
    pub fn commit(&mut self, db_after: &Database, affected: &BTreeSet<Constant>, staged: u64) {
        let now = affected.iter().filter(|&&a| self.matches(db_after, a)).count() as u64;
        self.count = self.count - staged + now;
    }
}

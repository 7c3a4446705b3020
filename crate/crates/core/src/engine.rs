//! The dynamic evaluation engine: one fixed query, one mutable database.
//!
//! [`Engine::update`] folds a single-tuple insert or delete into every
//! maintained structure; afterwards the answering entry points read from
//! precomputed state only:
//!
//! * [`Engine::answer`] — Boolean verdict, no data-dependent work;
//! * [`Engine::test`] — membership of one tuple, O(k^2) index probes;
//! * [`Engine::count`] — number of answers, read off maintained counters;
//! * [`Engine::enumerate`] — all answers with bounded delay between
//!   emissions.
//!
//! Internally: sentence counters ([`BoolState`]) track each Hanf
//! sentence's census; the sphere index maintains neighborhood types and
//! conflicts for all connected tuples up to width k; the tester keeps the
//! set of accepted signatures (recomputed only when the intern table or the
//! sentence truths change); and per accepted-and-realized signature a
//! counting state and an enumeration state are maintained under the same
//! delta stream. Signature states are sticky: once created they keep
//! following updates even while their signature is not currently accepted,
//! so acceptance flips never need a rebuild.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::answer::BoolState;
use crate::counter::CountState;
use crate::db::{
    Constant, Database, DbError, Schema, Tuple, UpdateCmd, UpdateOutcome,
};
use crate::enumerate::EnumState;
use crate::logic::{
    eval_hnf_query, hanf_census, sentence_truths, HnfQuery, QueryError,
};
use crate::ops;
use crate::sphere::{Delta, SphereIndex, UpdateRegions};
use crate::tester::Tester;
use crate::types::{decompose, Signature, TypeError, TypeId, TypeInterner};

/// Largest supported number of free variables. Signature positions use a
/// fixed-width mask and the counting states keep one pattern per component
/// subset, so the width is capped where those remain cheap.
pub const MAX_WIDTH: usize = 5;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Db(#[from] DbError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("query has {k} free variables; at most {MAX_WIDTH} are supported")]
    UnsupportedWidth { k: usize },
    #[error("tuple has {got} components, query has {expected} free variables")]
    BadTupleWidth { got: usize, expected: usize },
}

struct SigState {
    sgn: Signature,
    count: CountState,
    enumer: EnumState,
}

/// Dynamic evaluator for one Hanf-normal-form query.
pub struct Engine {
    db: Database,
    query: HnfQuery,
    r: usize,
    interner: TypeInterner,
    atom_ids: Vec<TypeId>,
    bool_states: Vec<BoolState>,
    j_mask: u64,
    sphere: Option<SphereIndex>,
    tester: Option<Tester>,
    /// Every type id that has ever labelled an index vertex — the candidate
    /// component pool for accepted signatures. Grows monotonically.
    seen_types: BTreeSet<TypeId>,
    sig_states: BTreeMap<String, SigState>,
    accepted: BTreeSet<String>,
}

impl Engine {
    /// Set up all structures for an empty database.
    pub fn new(schema: Schema, degree_bound: usize, query: HnfQuery) -> Result<Engine, EngineError> {
        query.validate()?;
        let k = query.k;
        if k > MAX_WIDTH {
            return Err(EngineError::UnsupportedWidth { k });
        }
        for atom in &query.atoms {
            let got = atom.ty.structure.max_degree();
            if got > degree_bound {
                return Err(QueryError::TypeDegree {
                    got,
                    bound: degree_bound,
                }
                .into());
            }
        }
        for sentence in &query.sentences {
            let got = sentence.ty.structure.max_degree();
            if got > degree_bound {
                return Err(QueryError::TypeDegree {
                    got,
                    bound: degree_bound,
                }
                .into());
            }
        }
        let db = Database::new(schema.clone(), degree_bound);
        let mut interner = TypeInterner::new(schema, degree_bound);
        let mut atom_ids = Vec::with_capacity(query.atoms.len());
        for atom in &query.atoms {
            atom_ids.push(interner.intern(&atom.ty)?);
            // Intern the atom's connected components up front so acceptance
            // checks compare restrictions against existing entries.
            decompose(&atom.ty, &mut interner)?;
        }
        let bool_states: Vec<BoolState> = query.sentences.iter().map(BoolState::new).collect();
        let r = query.max_sphere_radius();
        let (sphere, tester) = if k >= 1 {
            (Some(SphereIndex::new(r, k)), Some(Tester::new(k, r)))
        } else {
            (None, None)
        };
        let mut engine = Engine {
            db,
            query,
            r,
            interner,
            atom_ids,
            bool_states,
            j_mask: 0,
            sphere,
            tester,
            seen_types: BTreeSet::new(),
            sig_states: BTreeMap::new(),
            accepted: BTreeSet::new(),
        };
        engine.j_mask = engine.compute_j_mask();
        engine.refresh_acceptance(true)?;
        Ok(engine)
    }

    pub fn db(&self) -> &Database {
        &self.db
    }

    pub fn query(&self) -> &HnfQuery {
        &self.query
    }

    pub fn width(&self) -> usize {
        self.query.k
    }

    pub fn radius(&self) -> usize {
        self.r
    }

    pub fn interned_types(&self) -> usize {
        self.interner.len()
    }

    pub fn sphere_stats(&self) -> Option<(usize, usize, usize)> {
        self.sphere
            .as_ref()
            .map(|s| (s.vertex_count(), s.edge_count(), s.max_conflict_degree()))
    }

    pub fn accepted_signature_count(&self) -> usize {
        self.accepted.len()
    }

    fn compute_j_mask(&self) -> u64 {
        let mut mask = 0u64;
        for (j, bs) in self.bool_states.iter().enumerate() {
            if bs.holds() {
                mask |= 1 << j;
            }
        }
        mask
    }

    // ------------------------------------------------------------------
    // Updates
    // ------------------------------------------------------------------

    /// Apply one insert or delete. On [`UpdateOutcome::RejectedDegree`] and
    /// [`UpdateOutcome::NoChange`] every structure is left untouched.
    pub fn update(&mut self, cmd: &UpdateCmd) -> Result<UpdateOutcome, EngineError> {
        let outcome = self.db.apply_update(cmd)?;
        if outcome != UpdateOutcome::Applied {
            return Ok(outcome);
        }
        let mut elems: Vec<Constant> = cmd.tuple.clone();
        elems.sort_unstable();
        elems.dedup();
        let (r, k) = (self.r, self.query.k);

        // Per-sentence affected balls and pre-update match counts, plus the
        // index recomputation regions, all relative to the database version
        // that contains the updated tuple.
        let bool_states = &self.bool_states;
        let (regions, affected, staged): (
            Option<UpdateRegions>,
            Vec<BTreeSet<Constant>>,
            Vec<u64>,
        ) = if cmd.insert {
            let regions =
                (k >= 1).then(|| UpdateRegions::compute(&self.db, &elems, r, k));
            let affected: Vec<BTreeSet<Constant>> = bool_states
                .iter()
                .map(|bs| self.db.ball(&elems, bs.affected_radius()))
                .collect();
            let staged: Vec<u64> = self.db.with_tuple_absent(cmd.rel, &cmd.tuple, |before| {
                bool_states
                    .iter()
                    .zip(&affected)
                    .map(|(bs, aff)| bs.stage(before, aff))
                    .collect()
            });
            (regions, affected, staged)
        } else {
            self.db.with_tuple_present(cmd.rel, &cmd.tuple, |with| {
                let regions = (k >= 1).then(|| UpdateRegions::compute(with, &elems, r, k));
                let affected: Vec<BTreeSet<Constant>> = bool_states
                    .iter()
                    .map(|bs| with.ball(&elems, bs.affected_radius()))
                    .collect();
                let staged: Vec<u64> = bool_states
                    .iter()
                    .zip(&affected)
                    .map(|(bs, aff)| bs.stage(with, aff))
                    .collect();
                (regions, affected, staged)
            })
        };

        for ((bs, aff), st) in self.bool_states.iter_mut().zip(&affected).zip(&staged) {
            bs.commit(&self.db, aff, *st);
        }
        self.j_mask = self.compute_j_mask();

        let mut vertices_appeared = false;
        if let Some(sphere) = self.sphere.as_mut() {
            let deltas = sphere.apply(&self.db, &regions.unwrap(), &mut self.interner)?;
            if !deltas.is_empty() {
                for delta in &deltas {
                    match delta {
                        Delta::VertexAdded { type_id, .. } => {
                            self.seen_types.insert(*type_id);
                            vertices_appeared = true;
                        }
                        Delta::Retyped { new, .. } => {
                            self.seen_types.insert(*new);
                            vertices_appeared = true;
                        }
                        _ => {}
                    }
                }
                for state in self.sig_states.values_mut() {
                    state.count.apply_batch(&deltas);
                    state.enumer.apply_batch(&deltas);
                }
            }
        }
        self.refresh_acceptance(vertices_appeared)?;
        Ok(UpdateOutcome::Applied)
    }

    /// Bring the accepted-signature set up to date and create states for
    /// newly accepted signatures whose component types are all realized.
    /// `vertices_appeared` says whether this update's deltas could have
    /// given some type its first live vertex — only a tester rebuild or
    /// such an appearance can make a new state necessary.
    fn refresh_acceptance(&mut self, vertices_appeared: bool) -> Result<(), EngineError> {
        let Some(tester) = self.tester.as_mut() else {
            return Ok(());
        };
        let rebuilt = tester.needs_rebuild(self.seen_types.len(), self.j_mask);
        if rebuilt {
            tester.rebuild(
                &self.query,
                &self.atom_ids,
                self.j_mask,
                &self.seen_types,
                &mut self.interner,
            )?;
            self.accepted = tester
                .accepted_signatures()
                .iter()
                .map(|s| s.encode())
                .collect();
        }
        if !rebuilt && !vertices_appeared {
            return Ok(());
        }
        let sphere = self.sphere.as_ref().expect("sphere exists whenever tester does");
        let mut snapshot: Option<Vec<Delta>> = None;
        for sgn in tester.accepted_signatures() {
            let key = sgn.encode();
            if self.sig_states.contains_key(&key) {
                continue;
            }
            let realized = sgn.components.iter().all(|c| {
                sphere
                    .extents()
                    .get(&(c.type_id, c.arity))
                    .copied()
                    .unwrap_or(0)
                    > 0
            });
            if !realized {
                continue;
            }
            let snap = snapshot.get_or_insert_with(|| sphere.snapshot_deltas());
            let mut count = CountState::new(sgn);
            let mut enumer = EnumState::new(sgn);
            count.apply_batch(snap);
            enumer.apply_batch(snap);
            self.sig_states.insert(
                key,
                SigState {
                    sgn: sgn.clone(),
                    count,
                    enumer,
                },
            );
        }
        Ok(())
    }

    // ------------------------------------------------------------------
    // Answering
    // ------------------------------------------------------------------

    /// Boolean verdict: for a sentence (k = 0) the query tree folded over
    /// the maintained truth bits; otherwise non-emptiness of the answer set.
    pub fn answer(&self) -> bool {
        ops::tick();
        if self.query.k == 0 {
            let mask = self.j_mask;
            self.query
                .tree
                .eval(&|_| unreachable!("validated: no atoms at width 0"), &|j| {
                    mask >> j & 1 == 1
                })
        } else {
            self.count() != 0
        }
    }

    /// Number of answers.
    pub fn count(&self) -> i128 {
        ops::tick();
        if self.query.k == 0 {
            return self.answer() as i128;
        }
        self.accepted
            .iter()
            .map(|key| self.sig_states.get(key).map_or(0, |s| s.count.n3()))
            .sum()
    }

    /// Membership of one tuple in the answer set.
    pub fn test(&self, tuple: &[Constant]) -> Result<bool, EngineError> {
        if tuple.len() != self.query.k {
            return Err(EngineError::BadTupleWidth {
                got: tuple.len(),
                expected: self.query.k,
            });
        }
        if self.query.k == 0 {
            return Ok(self.answer());
        }
        let (tester, sphere) = (
            self.tester.as_ref().unwrap(),
            self.sphere.as_ref().unwrap(),
        );
        Ok(tester.test(sphere, tuple))
    }

    /// Stream every answer tuple; the callback may stop early. Emission
    /// order is fixed by the maintained state, not by the database,
    /// so runs over the same update history agree.
    pub fn enumerate(&self, f: &mut dyn FnMut(&[Constant]) -> ControlFlow<()>) {
        if self.query.k == 0 {
            if self.answer() {
                let _ = f(&[]);
            }
            return;
        }
        let sphere = self.sphere.as_ref().unwrap();
        for key in &self.accepted {
            let Some(state) = self.sig_states.get(key) else {
                continue;
            };
            let sgn = &state.sgn;
            let flow = state.enumer.enumerate_fast(&mut |assignment| {
                let mut tuple: Tuple = vec![0; self.query.k];
                for (ci, comp) in sgn.components.iter().enumerate() {
                    let vt = sphere.tuple_of(assignment[ci]);
                    for (j, &pos) in comp.position_list().iter().enumerate() {
                        tuple[pos] = vt[j];
                    }
                }
                f(&tuple)
            });
            if flow == ControlFlow::Break(()) {
                return;
            }
        }
    }

    /// All answers up to `limit`, in emission order — test and CLI support.
    pub fn enumerate_collect(&self, limit: usize) -> Vec<Tuple> {
        let mut out = Vec::new();
        self.enumerate(&mut |t| {
            out.push(t.to_vec());
            if out.len() >= limit {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        out
    }

    // ------------------------------------------------------------------
    // Diagnostics
    // ------------------------------------------------------------------

    /// Serialize every piece of maintained state deterministically; used to
    /// check that rejected updates leave no trace.
    pub fn dump_state(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.db.dump());
        if let Some(sphere) = &self.sphere {
            out.push_str(&sphere.dump());
        }
        for (j, bs) in self.bool_states.iter().enumerate() {
            out.push_str(&format!("sentence {j} census {}\n", bs.census()));
        }
        out.push_str(&format!("sentence mask {:#b}\n", self.j_mask));
        out.push_str(&format!("interned {}\n", self.interner.len()));
        for key in &self.accepted {
            out.push_str(&format!("accepted {key}\n"));
        }
        for (key, state) in &self.sig_states {
            out.push_str(&format!(
                "state {key}: count {} view {}\n",
                state.count.n3(),
                state.enumer.view_size()
            ));
        }
        out
    }

    /// Re-derive everything from the bare database and compare against the
    /// maintained structures; `brute_cap` bounds the answer-set reference
    /// evaluation (number of candidate tuples). The slow path of every
    /// consistency test.
    pub fn check(&self, brute_cap: u64) -> Result<(), String> {
        // Sphere index against a from-scratch rebuild.
        let mut interner_copy = self.interner.clone();
        if let Some(sphere) = &self.sphere {
            sphere.check_against(&self.db, &mut interner_copy)?;
        }
        self.check_outputs(brute_cap)
    }

    /// The output half of [`Engine::check`]: every answering facility —
    /// Boolean verdict, count, per-tuple membership, enumeration — against
    /// a from-scratch reference evaluation on the bare database, without
    /// the index audit (which re-derives every vertex and conflict edge and
    /// dominates when run per update).
    pub fn check_outputs(&self, brute_cap: u64) -> Result<(), String> {
        // Sentence censuses and truth bits.
        for (j, (bs, sentence)) in self
            .bool_states
            .iter()
            .zip(&self.query.sentences)
            .enumerate()
        {
            let want = hanf_census(&self.db, sentence);
            if bs.census() != want {
                return Err(format!(
                    "sentence {j}: maintained census {} but database says {want}",
                    bs.census()
                ));
            }
        }
        let truths = sentence_truths(&self.db, &self.query);
        for (j, &t) in truths.iter().enumerate() {
            if (self.j_mask >> j & 1 == 1) != t {
                return Err(format!("sentence {j}: truth bit disagrees"));
            }
        }
        // Answer set by exhaustive evaluation.
        let n = self.db.adom_len() as u128;
        if n.max(1).saturating_pow(self.query.k as u32) > brute_cap as u128 {
            return Ok(());
        }
        let answers = eval_hnf_query(&self.db, &self.query).map_err(|e| e.to_string())?;
        if self.count() != answers.len() as i128 {
            return Err(format!(
                "count says {} but the answer set has {} tuples",
                self.count(),
                answers.len()
            ));
        }
        if self.query.k == 0 {
            if self.answer() != answers.contains(&vec![]) {
                return Err("Boolean verdict disagrees".into());
            }
            return Ok(());
        }
        let adom = self.db.adom_sorted();
        let mut stack: Vec<Tuple> = vec![vec![]];
        while let Some(prefix) = stack.pop() {
            if prefix.len() == self.query.k {
                let member = self.test(&prefix).map_err(|e| e.to_string())?;
                if member != answers.contains(&prefix) {
                    return Err(format!(
                        "membership of {prefix:?}: test says {member}, reference says {}",
                        !member
                    ));
                }
                continue;
            }
            for &a in &adom {
                let mut t = prefix.clone();
                t.push(a);
                stack.push(t);
            }
        }
        let mut enumerated: Vec<Tuple> = Vec::new();
        self.enumerate(&mut |t| {
            enumerated.push(t.to_vec());
            ControlFlow::Continue(())
        });
        let total = enumerated.len();
        let set: BTreeSet<Tuple> = enumerated.into_iter().collect();
        if set.len() != total {
            return Err("enumeration emitted a duplicate".into());
        }
        if set != answers {
            let missing: Vec<_> = answers.difference(&set).take(3).collect();
            let extra: Vec<_> = set.difference(&answers).take(3).collect();
            return Err(format!(
                "enumeration disagrees with the reference: missing {missing:?}, extra {extra:?}"
            ));
        }
        Ok(())
    }
}

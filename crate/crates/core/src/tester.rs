//! Membership testing in time quadratic in the tuple width.
//!
//! Whether a tuple satisfies the query depends only on its neighborhood
//! signature and the current truths of the Boolean sentences. The index
//! already knows the type of every connected sub-tuple, so testing reduces
//! to: look up the k singletons (domain check), look up the k(k-1)/2 pairs
//! to learn which positions are close, read off the connected blocks, look
//! up each block's tuple to get its component type, and check the assembled
//! signature against the set of signatures the query accepts.
//!
//! That accepted set is precomputed over every component type currently
//! realized as an index vertex type — the only types a looked-up signature
//! can mention — and refreshed when a sentence truth flips or the realized
//! set changes. Keeping the pool to live types (rather than every type ever
//! seen) bounds the candidate signatures by the live vertex count, so a
//! rebuild stays cheap even on churn-heavy histories whose accumulated type
//! diversity is huge; per-signature verdicts are memoized across rebuilds,
//! and each test is pure lookups. The restriction also matters for hygiene:
//! evaluating the acceptance predicate interns auxiliary restriction types,
//! and building candidates from the whole intern table would let those feed
//! back into the candidate space.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::db::Constant;
use crate::logic::HnfQuery;
use crate::ops;
use crate::sphere::SphereIndex;
use crate::types::{
    assemble_type, hnf_accepts, signatures_over, SigComponent, Signature, TypeError, TypeId,
    TypeInterner,
};

/// Precomputed accepted-signature set plus the bookkeeping to know when it
/// is stale.
#[derive(Debug, Clone)]
pub struct Tester {
    k: usize,
    r: usize,
    accepted: HashSet<Signature>,
    /// Memoized verdicts per signature, keyed inside by sentence-truth
    /// mask. A verdict depends only on the signature's own component types,
    /// the query, and the mask — never on types interned later — so entries
    /// stay valid forever: rebuilds over a previously seen pool and
    /// sentence flips between already-seen masks never re-evaluate the
    /// acceptance predicate.
    verdicts: HashMap<Signature, HashMap<u64, bool>>,
    built_at_pool: BTreeSet<TypeId>,
    built_at_mask: u64,
    built: bool,
}

impl Tester {
    pub fn new(k: usize, r: usize) -> Tester {
        assert!(k >= 1, "membership testing needs free variables");
        assert!(k <= 63, "at most 63 free variables");
        Tester {
            k,
            r,
            accepted: HashSet::new(),
            verdicts: HashMap::new(),
            built_at_pool: BTreeSet::new(),
            built_at_mask: 0,
            built: false,
        }
    }

    /// Stale when sentence truths changed or the set of currently realized
    /// vertex types differs from the one the accepted set was built over.
    pub fn needs_rebuild(&self, pool: &BTreeSet<TypeId>, j_mask: u64) -> bool {
        !self.built || self.built_at_mask != j_mask || self.built_at_pool != *pool
    }

    /// Recompute the accepted set: every signature assemblable from the
    /// realized component types in `pool` whose assembled type the query
    /// accepts under the current sentence truths.
    pub fn rebuild(
        &mut self,
        query: &HnfQuery,
        atom_ids: &[TypeId],
        j_mask: u64,
        pool: &BTreeSet<TypeId>,
        interner: &mut TypeInterner,
    ) -> Result<(), TypeError> {
        let mut ids_by_arity: Vec<Vec<TypeId>> = vec![Vec::new(); self.k + 1];
        for &id in pool {
            let info = interner.info(id);
            if info.radius == self.r && info.connected && (1..=self.k).contains(&info.arity) {
                ids_by_arity[info.arity].push(id);
            }
        }
        let mut accepted = HashSet::new();
        for sgn in signatures_over(self.k, &ids_by_arity) {
            ops::tick();
            let verdict = match self.verdicts.get(&(sgn.clone(), j_mask)) {
                Some(&v) => v,
                None => {
                    let ty = assemble_type(&sgn, interner);
                    let v = hnf_accepts(query, atom_ids, j_mask, &ty, interner)?;
                    self.verdicts.insert((sgn.clone(), j_mask), v);
                    v
                }
            };
            if verdict {
                accepted.insert(sgn);
            }
        }
        self.accepted = accepted;
        self.built_at_len = pool.len();
        self.built_at_mask = j_mask;
        self.built = true;
        Ok(())
    }

    /// The signatures the query currently accepts.
    pub fn accepted_signatures(&self) -> &HashSet<Signature> {
        assert!(self.built, "tester queried before first build");
        &self.accepted
    }

    /// Compute the signature of `tuple` from index lookups alone, or `None`
    /// if some entry is outside the active domain.
    pub fn signature_of(&self, index: &SphereIndex, tuple: &[Constant]) -> Option<Signature> {
        assert_eq!(tuple.len(), self.k, "tuple width mismatch");
        for &a in tuple {
            ops::tick();
            index.vertex_of(&[a])?;
        }
        // Union positions whose elements are close (the pair is indexed
        // exactly when its joint neighborhood is connected).
        let mut parent: Vec<usize> = (0..self.k).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let root = find(parent, parent[i]);
                parent[i] = root;
            }
            parent[i]
        }
        for i in 0..self.k {
            for j in i + 1..self.k {
                ops::tick();
                if index.vertex_of(&[tuple[i], tuple[j]]).is_some() {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut root_block: Vec<Option<usize>> = vec![None; self.k];
        for i in 0..self.k {
            let root = find(&mut parent, i);
            match root_block[root] {
                Some(b) => blocks[b].push(i),
                None => {
                    root_block[root] = Some(blocks.len());
                    blocks.push(vec![i]);
                }
            }
        }
        blocks.sort_by_key(|b| b[0]);
        let mut components = Vec::with_capacity(blocks.len());
        for block in &blocks {
            ops::tick();
            let sub: Vec<Constant> = block.iter().map(|&p| tuple[p]).collect();
            let (_, type_id) = index
                .vertex_of(&sub)
                .expect("connected block missing from index");
            components.push(SigComponent {
                arity: block.len(),
                type_id,
                positions: block.iter().fold(0u64, |m, &p| m | 1 << p),
            });
        }
        Some(Signature { components })
    }

    /// Is `tuple` in the query answer right now?
    pub fn test(&self, index: &SphereIndex, tuple: &[Constant]) -> bool {
        assert!(self.built, "tester queried before first build");
        match self.signature_of(index, tuple) {
            Some(sgn) => self.accepted.contains(&sgn),
            None => false,
        }
    }
}

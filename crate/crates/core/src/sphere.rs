//! Incremental index of tuple neighborhoods and their conflicts.
//!
//! For a fixed radius `r` and maximum arity `k`, the index tracks every
//! tuple (length 1..=k, entries in the active domain) whose radius-`r`
//! neighborhood is connected. Each such tuple is a vertex carrying the
//! interned id of its neighborhood type. Two vertices conflict when some
//! element of one lies within Gaifman distance `2r+1` of some element of
//! the other — exactly when their joint neighborhood would be connected.
//! Every vertex conflicts with itself.
//!
//! Updates are localized: a single tuple insert or delete can only change
//! vertices that have an element within distance `2r+1` of the updated
//! constants (membership and type changes both force such an element), and
//! since vertex tuples are chained within `(k-1)(2r+1)`, all affected
//! vertices live inside the radius `k(2r+1)` ball. Conflict edges reach one
//! step of `2r+1` further. The index recomputes exactly those regions and
//! reports the difference as an ordered batch of [`Delta`]s that downstream
//! consumers (counting and enumeration states) replay against their own
//! mirrors.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use itertools::Itertools;

use crate::db::{Constant, Database, DistMemo, Tuple};
use crate::ops;
use crate::types::{type_of, TypeError, TypeId, TypeInterner};

/// Stable id of an index vertex. Ids are never reused.
pub type VertexId = u64;

/// One change to the vertex/conflict graph. Batches are ordered by variant:
/// edge removals, then vertex removals, then retypes, then vertex additions,
/// then edge additions, so a consumer never sees an edge with a missing
/// endpoint. `Retyped` carries the vertex's conflict neighbors as of that
/// point in the batch, letting view-restricted consumers pick up edges for
/// vertices that enter their view through a type change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Delta {
    EdgeRemoved { u: VertexId, v: VertexId },
    VertexRemoved { v: VertexId, tuple: Tuple, type_id: TypeId },
    Retyped { v: VertexId, old: TypeId, new: TypeId, neighbors: Vec<VertexId> },
    VertexAdded { v: VertexId, tuple: Tuple, type_id: TypeId },
    EdgeAdded { u: VertexId, v: VertexId },
}

impl Delta {
    pub fn kind_rank(&self) -> u8 {
        match self {
            Delta::EdgeRemoved { .. } => 0,
            Delta::VertexRemoved { .. } => 1,
            Delta::Retyped { .. } => 2,
            Delta::VertexAdded { .. } => 3,
            Delta::EdgeAdded { .. } => 4,
        }
    }
}

/// The balls around an update's constants that delimit recomputation, taken
/// in whichever database state contains the updated tuple (after the insert,
/// before the delete) so the paths opened or closed by the update are seen.
#[derive(Debug, Clone)]
pub struct UpdateRegions {
    /// Elements within `2r+1`: every vertex needing recomputation has an
    /// element here.
    pub near: BTreeSet<Constant>,
    /// Elements within `k(2r+1)`: recomputed vertices live entirely here.
    pub candidates: BTreeSet<Constant>,
    /// Elements within `(k+1)(2r+1)`: conflict partners of recomputed
    /// vertices have an element here.
    pub partners: BTreeSet<Constant>,
}

impl UpdateRegions {
    pub fn compute(db_with: &Database, seeds: &[Constant], r: usize, k: usize) -> UpdateRegions {
        let step = 2 * r + 1;
        UpdateRegions {
            near: db_with.ball(seeds, step),
            candidates: db_with.ball(seeds, k * step),
            partners: db_with.ball(seeds, (k + 1) * step),
        }
    }
}

#[derive(Debug, Clone)]
struct VertexInfo {
    tuple: Tuple,
    type_id: TypeId,
}

/// The dynamic index. See the module docs for the invariants.
#[derive(Debug, Clone)]
pub struct SphereIndex {
    r: usize,
    k: usize,
    vertices: BTreeMap<VertexId, VertexInfo>,
    by_tuple: HashMap<Tuple, VertexId>,
    by_element: HashMap<Constant, BTreeSet<VertexId>>,
    /// Sorted conflict neighbors, self included.
    adjacency: HashMap<VertexId, Vec<VertexId>>,
    extents: BTreeMap<(TypeId, usize), u64>,
    next_vertex: VertexId,
}

impl SphereIndex {
    pub fn new(r: usize, k: usize) -> SphereIndex {
        assert!(k >= 1, "index needs at least arity 1");
        SphereIndex {
            r,
            k,
            vertices: BTreeMap::new(),
            by_tuple: HashMap::new(),
            by_element: HashMap::new(),
            adjacency: HashMap::new(),
            extents: BTreeMap::new(),
            next_vertex: 0,
        }
    }

    pub fn radius(&self) -> usize {
        self.r
    }

    pub fn arity_bound(&self) -> usize {
        self.k
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Conflict edges, self-loops not counted.
    pub fn edge_count(&self) -> usize {
        let total: usize = self.adjacency.values().map(|a| a.len()).sum();
        (total - self.vertices.len()) / 2
    }

    /// Constant-time vertex lookup by tuple.
    pub fn vertex_of(&self, tuple: &[Constant]) -> Option<(VertexId, TypeId)> {
        ops::tick();
        self.by_tuple
            .get(tuple)
            .map(|&v| (v, self.vertices[&v].type_id))
    }

    pub fn tuple_of(&self, v: VertexId) -> &Tuple {
        &self.vertices[&v].tuple
    }

    pub fn type_id_of(&self, v: VertexId) -> TypeId {
        self.vertices[&v].type_id
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[&v]
    }

    /// Number of vertices per (type, arity).
    pub fn extents(&self) -> &BTreeMap<(TypeId, usize), u64> {
        &self.extents
    }

    /// Largest conflict degree over all vertices, self-loop excluded.
    pub fn max_conflict_degree(&self) -> usize {
        self.adjacency
            .values()
            .map(|a| a.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    /// Recompute the affected region after an applied update. `db_after` is
    /// the database with the update in effect; `regions` must have been
    /// computed with [`UpdateRegions::compute`] on the state containing the
    /// updated tuple. Returns the ordered delta batch.
    pub fn apply(
        &mut self,
        db_after: &Database,
        regions: &UpdateRegions,
        interner: &mut TypeInterner,
    ) -> Result<Vec<Delta>, TypeError> {
        let mut memo = DistMemo::new();
        let step = 2 * self.r + 1;

        // Desired state of every candidate tuple: entries in the candidate
        // ball, at least one entry near the update, all entries in the
        // active domain, connected neighborhood. Everything else is
        // untouched by this update.
        let candidate_elems: Vec<Constant> = regions.candidates.iter().copied().collect();
        let mut desired: BTreeMap<Tuple, Option<TypeId>> = BTreeMap::new();
        for arity in 1..=self.k {
            for tuple in (0..arity)
                .map(|_| candidate_elems.iter().copied())
                .multi_cartesian_product()
            {
                ops::tick();
                if !tuple.iter().any(|e| regions.near.contains(e)) {
                    continue;
                }
                let live = tuple.iter().all(|&e| db_after.adom_contains(e))
                    && db_after.neighborhood_connected(&tuple, self.r, &mut memo);
                let ty = if live {
                    Some(interner.intern(&type_of(db_after, &tuple, self.r))?)
                } else {
                    None
                };
                desired.insert(tuple, ty);
            }
        }

        // Diff against the current vertex set.
        let mut removed: Vec<(VertexId, Tuple, TypeId)> = Vec::new();
        let mut retyped: Vec<(VertexId, TypeId, TypeId)> = Vec::new();
        let mut added: Vec<(VertexId, Tuple, TypeId)> = Vec::new();
        let mut surviving: Vec<VertexId> = Vec::new();
        for (tuple, want) in &desired {
            ops::tick();
            match (self.by_tuple.get(tuple), want) {
                (Some(&v), None) => {
                    removed.push((v, tuple.clone(), self.vertices[&v].type_id));
                }
                (Some(&v), Some(ty)) => {
                    let old = self.vertices[&v].type_id;
                    if old != *ty {
                        retyped.push((v, old, *ty));
                    }
                    surviving.push(v);
                }
                (None, Some(ty)) => {
                    let v = self.next_vertex;
                    self.next_vertex += 1;
                    added.push((v, tuple.clone(), *ty));
                    surviving.push(v);
                }
                (None, None) => {}
            }
        }

        // Conflict partners: current vertices with an element in the partner
        // ball that are not themselves recomputed. Edges with both endpoints
        // outside the recomputed set cannot change.
        let mut partners: BTreeSet<VertexId> = BTreeSet::new();
        for e in &regions.partners {
            if let Some(vs) = self.by_element.get(e) {
                for &v in vs {
                    ops::tick();
                    if !desired.contains_key(&self.vertices[&v].tuple) {
                        partners.insert(v);
                    }
                }
            }
        }

        // Desired edges among surviving/new vertices and against partners.
        let tuple_for = |this: &SphereIndex, v: VertexId| -> Tuple {
            if let Some(info) = this.vertices.get(&v) {
                info.tuple.clone()
            } else {
                added
                    .iter()
                    .find(|(id, _, _)| *id == v)
                    .map(|(_, t, _)| t.clone())
                    .expect("unknown vertex in edge recompute")
            }
        };
        let conflict = |db: &Database, a: &Tuple, b: &Tuple, memo: &mut DistMemo| -> bool {
            a.iter().any(|&x| {
                b.iter().any(|&y| {
                    ops::tick();
                    db.dist_at_most_memo(x, y, step, memo)
                })
            })
        };
        let mut edges_removed: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
        let mut edges_added: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
        for (i, &x) in surviving.iter().enumerate() {
            let tx = tuple_for(self, x);
            // Pairs within the recomputed set, self-loop included.
            for &y in &surviving[i..] {
                ops::tick();
                let want = x == y || conflict(db_after, &tx, &tuple_for(self, y), &mut memo);
                let have = self.has_edge(x, y);
                let key = (x.min(y), x.max(y));
                if want && !have {
                    edges_added.insert(key);
                } else if !want && have {
                    edges_removed.insert(key);
                }
            }
            // Pairs against untouched partners.
            for &p in &partners {
                ops::tick();
                let want = conflict(db_after, &tx, &self.vertices[&p].tuple, &mut memo);
                let have = self.has_edge(x, p);
                let key = (x.min(p), x.max(p));
                if want && !have {
                    edges_added.insert(key);
                } else if !want && have {
                    edges_removed.insert(key);
                }
            }
        }
        // All edges incident to removed vertices go away.
        for (v, _, _) in &removed {
            for &u in &self.adjacency[v] {
                edges_removed.insert((u.min(*v), u.max(*v)));
            }
        }

        // Mutate in batch order and assemble the deltas.
        let mut deltas: Vec<Delta> = Vec::new();
        for &(u, v) in &edges_removed {
            self.unlink(u, v);
            deltas.push(Delta::EdgeRemoved { u, v });
        }
        for (v, tuple, type_id) in removed {
            debug_assert!(self.adjacency[&v].is_empty());
            self.adjacency.remove(&v);
            self.by_tuple.remove(&tuple);
            for e in distinct(&tuple) {
                let set = self.by_element.get_mut(&e).unwrap();
                set.remove(&v);
                if set.is_empty() {
                    self.by_element.remove(&e);
                }
            }
            self.bump_extent(type_id, tuple.len(), -1);
            self.vertices.remove(&v);
            deltas.push(Delta::VertexRemoved { v, tuple, type_id });
        }
        for (v, old, new) in retyped {
            let arity = self.vertices[&v].tuple.len();
            self.vertices.get_mut(&v).unwrap().type_id = new;
            self.bump_extent(old, arity, -1);
            self.bump_extent(new, arity, 1);
            deltas.push(Delta::Retyped {
                v,
                old,
                new,
                neighbors: self.adjacency[&v].clone(),
            });
        }
        for (v, tuple, type_id) in added {
            self.vertices.insert(
                v,
                VertexInfo {
                    tuple: tuple.clone(),
                    type_id,
                },
            );
            self.by_tuple.insert(tuple.clone(), v);
            for e in distinct(&tuple) {
                self.by_element.entry(e).or_default().insert(v);
            }
            self.adjacency.insert(v, Vec::new());
            self.bump_extent(type_id, tuple.len(), 1);
            deltas.push(Delta::VertexAdded { v, tuple, type_id });
        }
        for &(u, v) in &edges_added {
            self.link(u, v);
            deltas.push(Delta::EdgeAdded { u, v });
        }
        debug_assert!(deltas.windows(2).all(|w| w[0].kind_rank() <= w[1].kind_rank()));
        Ok(deltas)
    }

    fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adjacency
            .get(&u)
            .is_some_and(|a| a.binary_search(&v).is_ok())
    }

    fn link(&mut self, u: VertexId, v: VertexId) {
        let au = self.adjacency.get_mut(&u).unwrap();
        if let Err(i) = au.binary_search(&v) {
            au.insert(i, v);
        }
        if u != v {
            let av = self.adjacency.get_mut(&v).unwrap();
            if let Err(i) = av.binary_search(&u) {
                av.insert(i, u);
            }
        }
    }

    fn unlink(&mut self, u: VertexId, v: VertexId) {
        let au = self.adjacency.get_mut(&u).unwrap();
        if let Ok(i) = au.binary_search(&v) {
            au.remove(i);
        }
        if u != v {
            let av = self.adjacency.get_mut(&v).unwrap();
            if let Ok(i) = av.binary_search(&u) {
                av.remove(i);
            }
        }
    }

    fn bump_extent(&mut self, ty: TypeId, arity: usize, delta: i64) {
        let slot = self.extents.entry((ty, arity)).or_insert(0);
        *slot = slot.checked_add_signed(delta).expect("extent underflow");
        if *slot == 0 {
            self.extents.remove(&(ty, arity));
        }
    }

    /// A batch equivalent to building the current state from nothing:
    /// vertex additions in id order, then edge additions. Used to bring a
    /// freshly created consumer mirror up to date.
    pub fn snapshot_deltas(&self) -> Vec<Delta> {
        let mut deltas: Vec<Delta> = self
            .vertices
            .iter()
            .map(|(&v, info)| Delta::VertexAdded {
                v,
                tuple: info.tuple.clone(),
                type_id: info.type_id,
            })
            .collect();
        let mut edges: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
        for (&v, adj) in &self.adjacency {
            for &u in adj {
                edges.insert((u.min(v), u.max(v)));
            }
        }
        deltas.extend(edges.into_iter().map(|(u, v)| Delta::EdgeAdded { u, v }));
        deltas
    }

    /// Deterministic text form keyed by tuples rather than vertex ids, so
    /// states built by different update histories compare equal exactly when
    /// they index the same database.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (tuple, &v) in self.by_tuple.iter().sorted_by_key(|(t, _)| (*t).clone()) {
            writeln!(out, "vertex {:?} -> {}", tuple, self.vertices[&v].type_id).unwrap();
        }
        let mut edges: BTreeSet<(Tuple, Tuple)> = BTreeSet::new();
        for (&v, adj) in &self.adjacency {
            for &u in adj {
                let (a, b) = (&self.vertices[&u].tuple, &self.vertices[&v].tuple);
                let key = (a.min(b).clone(), a.max(b).clone());
                edges.insert(key);
            }
        }
        for (a, b) in edges {
            writeln!(out, "edge {:?} ~ {:?}", a, b).unwrap();
        }
        for (&(ty, arity), &n) in &self.extents {
            writeln!(out, "extent {} arity {} = {}", ty, arity, n).unwrap();
        }
        out
    }

    /// Build the index for `db` from scratch by scanning all tuples over the
    /// active domain. Quadratic-and-worse in the domain size; this is the
    /// oracle the incremental path is tested against.
    pub fn rebuild(
        db: &Database,
        r: usize,
        k: usize,
        interner: &mut TypeInterner,
    ) -> Result<SphereIndex, TypeError> {
        let mut index = SphereIndex::new(r, k);
        let mut memo = DistMemo::new();
        let adom = db.adom_sorted();
        let step = 2 * r + 1;
        let mut tuples: Vec<Tuple> = Vec::new();
        for arity in 1..=k {
            for tuple in (0..arity)
                .map(|_| adom.iter().copied())
                .multi_cartesian_product()
            {
                if db.neighborhood_connected(&tuple, r, &mut memo) {
                    tuples.push(tuple);
                }
            }
        }
        tuples.sort();
        for tuple in &tuples {
            let type_id = interner.intern(&type_of(db, tuple, r))?;
            let v = index.next_vertex;
            index.next_vertex += 1;
            index.vertices.insert(
                v,
                VertexInfo {
                    tuple: tuple.clone(),
                    type_id,
                },
            );
            index.by_tuple.insert(tuple.clone(), v);
            for e in distinct(tuple) {
                index.by_element.entry(e).or_default().insert(v);
            }
            index.adjacency.insert(v, vec![]);
            index.bump_extent(type_id, tuple.len(), 1);
        }
        let ids: Vec<VertexId> = index.vertices.keys().copied().collect();
        for (i, &x) in ids.iter().enumerate() {
            for &y in &ids[i..] {
                let tx = &index.vertices[&x].tuple;
                let ty = &index.vertices[&y].tuple;
                let conflict = x == y
                    || tx.iter().any(|&a| {
                        ty.iter()
                            .any(|&b| db.dist_at_most_memo(a, b, step, &mut memo))
                    });
                if conflict {
                    index.link(x, y);
                }
            }
        }
        Ok(index)
    }

    /// Exhaustive internal consistency check against `db`: exactly the
    /// connected active-domain tuples are present, with correct types and
    /// conflict edges. Test support.
    pub fn check_against(&self, db: &Database, interner: &mut TypeInterner) -> Result<(), String> {
        let fresh = SphereIndex::rebuild(db, self.r, self.k, interner)
            .map_err(|e| format!("rebuild failed: {e}"))?;
        let (a, b) = (self.dump(), fresh.dump());
        if a != b {
            return Err(format!(
                "index drift.\nincremental:\n{a}\nrebuilt:\n{b}"
            ));
        }
        Ok(())
    }
}

fn distinct(tuple: &[Constant]) -> BTreeSet<Constant> {
    tuple.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::db::{RelId, Schema, UpdateCmd};
    use crate::types::TypeInterner;

    fn schema_e() -> Schema {
        Schema::new(vec![("E".into(), 2)]).unwrap()
    }

    fn apply_cmd(
        db: &mut Database,
        index: &mut SphereIndex,
        interner: &mut TypeInterner,
        cmd: &UpdateCmd,
    ) -> Vec<Delta> {
        use crate::db::UpdateOutcome;
        let outcome = db.apply_update(cmd).unwrap();
        assert_eq!(outcome, UpdateOutcome::Applied, "test update must apply");
        let (r, k) = (index.radius(), index.arity_bound());
        let seeds: Vec<Constant> = cmd.tuple.clone();
        let regions = if cmd.insert {
            UpdateRegions::compute(db, &seeds, r, k)
        } else {
            db.with_tuple_present(cmd.rel, &cmd.tuple, |with| {
                UpdateRegions::compute(with, &seeds, r, k)
            })
        };
        index.apply(db, &regions, interner).unwrap()
    }

    #[test]
    fn first_edge_populates_all_small_tuples() {
        let schema = schema_e();
        let mut db = Database::new(schema.clone(), 2);
        let mut interner = TypeInterner::new(schema, 2);
        let mut index = SphereIndex::new(0, 2);
        let deltas = apply_cmd(
            &mut db,
            &mut index,
            &mut interner,
            &UpdateCmd::insert(RelId(0), vec![1, 2]),
        );
        // Tuples over {1,2} of arity <= 2 are all connected at radius 0
        // once the edge exists: (1), (2), (1,1), (1,2), (2,1), (2,2).
        assert_eq!(index.vertex_count(), 6);
        // Everything is within distance 1 of everything: a clique.
        assert_eq!(index.edge_count(), 6 * 5 / 2);
        assert!(deltas
            .iter()
            .all(|d| !matches!(d, Delta::VertexRemoved { .. } | Delta::EdgeRemoved { .. })));
        // The two singletons have equal types; the two directed pairs differ.
        let (_, t1) = index.vertex_of(&[1]).unwrap();
        let (_, t2) = index.vertex_of(&[2]).unwrap();
        assert_eq!(t1, t2);
        let (_, t12) = index.vertex_of(&[1, 2]).unwrap();
        let (_, t21) = index.vertex_of(&[2, 1]).unwrap();
        assert_ne!(t12, t21);
        index.check_against(&db, &mut interner).unwrap();

        // Deleting the lone tuple empties the index again.
        let deltas = apply_cmd(
            &mut db,
            &mut index,
            &mut interner,
            &UpdateCmd::delete(RelId(0), vec![1, 2]),
        );
        assert_eq!(index.vertex_count(), 0);
        assert!(deltas
            .iter()
            .all(|d| !matches!(d, Delta::VertexAdded { .. } | Delta::EdgeAdded { .. })));
        index.check_against(&db, &mut interner).unwrap();
    }

    #[test]
    fn batches_are_ordered_and_ids_monotone() {
        let schema = schema_e();
        let mut db = Database::new(schema.clone(), 2);
        let mut interner = TypeInterner::new(schema, 2);
        let mut index = SphereIndex::new(1, 2);
        let mut seen: BTreeSet<VertexId> = BTreeSet::new();
        for cmd in [
            UpdateCmd::insert(RelId(0), vec![1, 2]),
            UpdateCmd::insert(RelId(0), vec![2, 3]),
            UpdateCmd::delete(RelId(0), vec![1, 2]),
            UpdateCmd::insert(RelId(0), vec![3, 4]),
        ] {
            let deltas = apply_cmd(&mut db, &mut index, &mut interner, &cmd);
            assert!(deltas
                .windows(2)
                .all(|w| w[0].kind_rank() <= w[1].kind_rank()));
            for d in &deltas {
                if let Delta::VertexAdded { v, .. } = d {
                    assert!(seen.insert(*v), "vertex id {v} reused");
                }
            }
            index.check_against(&db, &mut interner).unwrap();
        }
    }

    #[test]
    fn retype_happens_when_neighborhood_grows() {
        let schema = schema_e();
        let mut db = Database::new(schema.clone(), 3);
        let mut interner = TypeInterner::new(schema, 3);
        let mut index = SphereIndex::new(1, 1);
        apply_cmd(
            &mut db,
            &mut index,
            &mut interner,
            &UpdateCmd::insert(RelId(0), vec![1, 2]),
        );
        let (_, before) = index.vertex_of(&[1]).unwrap();
        let deltas = apply_cmd(
            &mut db,
            &mut index,
            &mut interner,
            &UpdateCmd::insert(RelId(0), vec![2, 1]),
        );
        // Vertex 1's radius-1 ball is still {1, 2}, but its induced
        // structure gained the reverse edge: retype, not remove-and-add.
        let (_, after) = index.vertex_of(&[1]).unwrap();
        assert_ne!(before, after);
        assert!(deltas.iter().any(
            |d| matches!(d, Delta::Retyped { old, new, .. } if *old == before && *new == after)
        ));
        index.check_against(&db, &mut interner).unwrap();
    }

    #[test]
    fn snapshot_replay_reconstructs_graph() {
        let schema = schema_e();
        let mut db = Database::new(schema.clone(), 2);
        let mut interner = TypeInterner::new(schema, 2);
        let mut index = SphereIndex::new(0, 2);
        for cmd in [
            UpdateCmd::insert(RelId(0), vec![1, 2]),
            UpdateCmd::insert(RelId(0), vec![3, 4]),
            UpdateCmd::insert(RelId(0), vec![2, 3]),
        ] {
            apply_cmd(&mut db, &mut index, &mut interner, &cmd);
        }
        let mut vertices: BTreeMap<VertexId, TypeId> = BTreeMap::new();
        let mut edges: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
        for d in index.snapshot_deltas() {
            match d {
                Delta::VertexAdded { v, type_id, .. } => {
                    vertices.insert(v, type_id);
                }
                Delta::EdgeAdded { u, v } => {
                    assert!(vertices.contains_key(&u) && vertices.contains_key(&v));
                    edges.insert((u, v));
                }
                other => panic!("unexpected snapshot delta {other:?}"),
            }
        }
        assert_eq!(vertices.len(), index.vertex_count());
        assert_eq!(
            edges.len(),
            index.edge_count() + index.vertex_count() // self-loops
        );
    }

    /// Replays every delta batch into a naive shadow graph and checks it
    /// matches the index — this is the contract the counting and
    /// enumeration mirrors rely on.
    #[derive(Default)]
    struct Shadow {
        vertices: BTreeMap<VertexId, (Tuple, TypeId)>,
        edges: BTreeSet<(VertexId, VertexId)>,
    }

    impl Shadow {
        fn apply(&mut self, deltas: &[Delta]) {
            for d in deltas {
                match d {
                    Delta::EdgeRemoved { u, v } => {
                        assert!(self.edges.remove(&(*u, *v)), "removing missing edge");
                    }
                    Delta::VertexRemoved { v, .. } => {
                        assert!(self.vertices.remove(v).is_some());
                        assert!(!self.edges.iter().any(|(a, b)| a == v || b == v));
                    }
                    Delta::Retyped { v, old, new, .. } => {
                        let slot = self.vertices.get_mut(v).unwrap();
                        assert_eq!(slot.1, *old);
                        slot.1 = *new;
                    }
                    Delta::VertexAdded { v, tuple, type_id } => {
                        assert!(self
                            .vertices
                            .insert(*v, (tuple.clone(), *type_id))
                            .is_none());
                    }
                    Delta::EdgeAdded { u, v } => {
                        assert!(self.vertices.contains_key(u) && self.vertices.contains_key(v));
                        assert!(self.edges.insert((*u, *v)), "double-adding edge");
                    }
                }
            }
        }
    }

    #[test]
    fn delta_stream_matches_state_on_random_runs() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let schema = Schema::new(vec![("E".into(), 2), ("P".into(), 1)]).unwrap();
        for seed in 0..6u64 {
            let mut rng = StdRng::seed_from_u64(seed);
            let r = seed as usize % 2;
            let k = 1 + (seed as usize % 2);
            let mut db = Database::new(schema.clone(), 3);
            let mut interner = TypeInterner::new(schema.clone(), 3);
            let mut index = SphereIndex::new(r, k);
            let mut shadow = Shadow::default();
            for _ in 0..40 {
                let rel = if rng.gen_bool(0.8) { RelId(0) } else { RelId(1) };
                let arity = db.schema().arity(rel);
                let tuple: Tuple = (0..arity).map(|_| rng.gen_range(1..=8)).collect();
                let cmd = if rng.gen_bool(0.65) {
                    UpdateCmd::insert(rel, tuple)
                } else {
                    UpdateCmd::delete(rel, tuple)
                };
                let outcome = db.apply_update(&cmd).unwrap();
                if outcome != crate::db::UpdateOutcome::Applied {
                    continue;
                }
                let regions = if cmd.insert {
                    UpdateRegions::compute(&db, &cmd.tuple, r, k)
                } else {
                    db.with_tuple_present(cmd.rel, &cmd.tuple, |with| {
                        UpdateRegions::compute(with, &cmd.tuple, r, k)
                    })
                };
                let deltas = index.apply(&db, &regions, &mut interner).unwrap();
                shadow.apply(&deltas);
                index.check_against(&db, &mut interner).unwrap();
                // Shadow graph must mirror the index exactly.
                assert_eq!(shadow.vertices.len(), index.vertex_count());
                for (v, (tuple, ty)) in &shadow.vertices {
                    assert_eq!(index.vertex_of(tuple), Some((*v, *ty)));
                }
                let shadow_degree: usize = shadow.edges.len();
                assert_eq!(
                    shadow_degree,
                    index.edge_count() + index.vertex_count(),
                    "edge counts with self-loops"
                );
            }
        }
    }
}

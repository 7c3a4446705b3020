//! The updatable store: relations over positive-integer constants, the
//! Gaifman adjacency it induces, and the degree guard.
//!
//! The Gaifman graph has an edge between two distinct constants whenever they
//! occur together in some stored tuple. Adjacency is reference counted (one
//! count per witnessing tuple), so deletes restore it exactly. An insert that
//! would push any constant's degree above the configured bound is rejected
//! with the store unchanged.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::ops;

/// A database constant. The surface syntax only admits positive integers.
pub type Constant = u32;

/// A relation tuple, component order significant.
pub type Tuple = Vec<Constant>;

/// Index of a relation within its [`Schema`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelId(pub usize);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DbError {
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("relation {relation} has arity {expected}, got {got} components")]
    ArityMismatch {
        relation: String,
        expected: usize,
        got: usize,
    },
    #[error("duplicate relation name {0}")]
    DuplicateRelation(String),
    #[error("relation {0} must have arity at least 1")]
    ZeroArity(String),
}

/// Relation names and arities, fixed for the lifetime of a database.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    rels: Vec<(String, usize)>,
    by_name: HashMap<String, RelId>,
}

impl Schema {
    pub fn new(rels: Vec<(String, usize)>) -> Result<Schema, DbError> {
        let mut by_name = HashMap::new();
        for (idx, (name, arity)) in rels.iter().enumerate() {
            if *arity == 0 {
                return Err(DbError::ZeroArity(name.clone()));
            }
            if by_name.insert(name.clone(), RelId(idx)).is_some() {
                return Err(DbError::DuplicateRelation(name.clone()));
            }
        }
        Ok(Schema { rels, by_name })
    }

    pub fn rel_id(&self, name: &str) -> Option<RelId> {
        self.by_name.get(name).copied()
    }

    pub fn arity(&self, rel: RelId) -> usize {
        self.rels[rel.0].1
    }

    pub fn name(&self, rel: RelId) -> &str {
        &self.rels[rel.0].0
    }

    pub fn len(&self) -> usize {
        self.rels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rels.is_empty()
    }

    pub fn max_arity(&self) -> usize {
        self.rels.iter().map(|(_, a)| *a).max().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (RelId, &str, usize)> {
        self.rels
            .iter()
            .enumerate()
            .map(|(i, (n, a))| (RelId(i), n.as_str(), *a))
    }
}

/// A single-tuple insert or delete.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateCmd {
    pub insert: bool,
    pub rel: RelId,
    pub tuple: Tuple,
}

impl UpdateCmd {
    pub fn insert(rel: RelId, tuple: Tuple) -> UpdateCmd {
        UpdateCmd {
            insert: true,
            rel,
            tuple,
        }
    }

    pub fn delete(rel: RelId, tuple: Tuple) -> UpdateCmd {
        UpdateCmd {
            insert: false,
            rel,
            tuple,
        }
    }
}

/// Result of applying an update that passed schema validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    /// The store changed.
    Applied,
    /// The insert would have pushed some constant past the degree bound;
    /// nothing changed.
    RejectedDegree,
    /// Inserting a present tuple or deleting an absent one; nothing changed.
    NoChange,
}

/// Memo table for bounded-distance queries, shared across one maintenance
/// pass so repeated pair probes cost one BFS each.
#[derive(Debug, Default)]
pub struct DistMemo {
    cache: HashMap<(Constant, Constant, usize), bool>,
}

impl DistMemo {
    pub fn new() -> DistMemo {
        DistMemo::default()
    }
}

/// The store plus everything maintained alongside it: per-relation tuple
/// sets, reference-counted Gaifman adjacency, the active domain, and an
/// incidence index (constant to the tuples containing it) used to restrict
/// the database to a neighborhood without scanning all tuples.
#[derive(Debug, Clone)]
pub struct Database {
    schema: Schema,
    degree_bound: usize,
    relations: Vec<HashSet<Tuple>>,
    adjacency: HashMap<Constant, HashMap<Constant, u32>>,
    adom: HashMap<Constant, u32>,
    incidence: HashMap<Constant, BTreeSet<(RelId, Tuple)>>,
}

impl Database {
    /// Empty database over `schema` with Gaifman-degree bound `degree_bound`.
    pub fn new(schema: Schema, degree_bound: usize) -> Database {
        let relations = vec![HashSet::new(); schema.len()];
        Database {
            schema,
            degree_bound,
            relations,
            adjacency: HashMap::new(),
            adom: HashMap::new(),
            incidence: HashMap::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn contains(&self, rel: RelId, tuple: &[Constant]) -> bool {
        self.relations[rel.0].contains(tuple)
    }

    pub fn relation_tuples(&self, rel: RelId) -> &HashSet<Tuple> {
        &self.relations[rel.0]
    }

    pub fn tuple_count(&self) -> usize {
        self.relations.iter().map(|r| r.len()).sum()
    }

    pub fn adom_contains(&self, c: Constant) -> bool {
        self.adom.contains_key(&c)
    }

    pub fn adom_len(&self) -> usize {
        self.adom.len()
    }

    /// Active domain in ascending order.
    pub fn adom_sorted(&self) -> Vec<Constant> {
        let mut v: Vec<Constant> = self.adom.keys().copied().collect();
        v.sort_unstable();
        v
    }

    /// Number of distinct Gaifman neighbors of `c`.
    pub fn degree_of(&self, c: Constant) -> usize {
        self.adjacency.get(&c).map_or(0, |m| m.len())
    }

    pub fn adjacent(&self, a: Constant, b: Constant) -> bool {
        self.adjacency.get(&a).is_some_and(|m| m.contains_key(&b))
    }

    fn check_cmd(&self, cmd: &UpdateCmd) -> Result<(), DbError> {
        let expected = self.schema.arity(cmd.rel);
        if cmd.tuple.len() != expected {
            return Err(DbError::ArityMismatch {
                relation: self.schema.name(cmd.rel).to_string(),
                expected,
                got: cmd.tuple.len(),
            });
        }
        Ok(())
    }

    /// Apply one insert or delete. Inserts that would violate the degree
    /// bound are rejected with the store untouched; re-inserting a present
    /// tuple or deleting an absent one reports [`UpdateOutcome::NoChange`].
    pub fn apply_update(&mut self, cmd: &UpdateCmd) -> Result<UpdateOutcome, DbError> {
        self.check_cmd(cmd)?;
        let present = self.relations[cmd.rel.0].contains(&cmd.tuple);
        if cmd.insert {
            if present {
                return Ok(UpdateOutcome::NoChange);
            }
            if !self.insert_fits_degree(&cmd.tuple) {
                return Ok(UpdateOutcome::RejectedDegree);
            }
            self.raw_insert(cmd.rel, cmd.tuple.clone());
            Ok(UpdateOutcome::Applied)
        } else {
            if !present {
                return Ok(UpdateOutcome::NoChange);
            }
            self.raw_delete(cmd.rel, &cmd.tuple);
            Ok(UpdateOutcome::Applied)
        }
    }

    /// Would inserting `tuple` keep every constant's degree within bound?
    fn insert_fits_degree(&self, tuple: &[Constant]) -> bool {
        let distinct: BTreeSet<Constant> = tuple.iter().copied().collect();
        for &u in &distinct {
            ops::tick();
            let gained = distinct
                .iter()
                .filter(|&&v| v != u && !self.adjacent(u, v))
                .count();
            if self.degree_of(u) + gained > self.degree_bound {
                return false;
            }
        }
        true
    }

    /// Insert without degree checking; callers must have validated.
    fn raw_insert(&mut self, rel: RelId, tuple: Tuple) {
        let distinct: Vec<Constant> = {
            let s: BTreeSet<Constant> = tuple.iter().copied().collect();
            s.into_iter().collect()
        };
        for (i, &u) in distinct.iter().enumerate() {
            ops::tick();
            *self.adom.entry(u).or_insert(0) += 1;
            self.incidence
                .entry(u)
                .or_default()
                .insert((rel, tuple.clone()));
            for &v in &distinct[i + 1..] {
                *self.adjacency.entry(u).or_default().entry(v).or_insert(0) += 1;
                *self.adjacency.entry(v).or_default().entry(u).or_insert(0) += 1;
            }
        }
        self.relations[rel.0].insert(tuple);
    }

    /// Delete without presence checking; callers must have validated.
    fn raw_delete(&mut self, rel: RelId, tuple: &[Constant]) {
        let distinct: Vec<Constant> = {
            let s: BTreeSet<Constant> = tuple.iter().copied().collect();
            s.into_iter().collect()
        };
        for (i, &u) in distinct.iter().enumerate() {
            ops::tick();
            let cnt = self.adom.get_mut(&u).expect("adom refcount underflow");
            *cnt -= 1;
            if *cnt == 0 {
                self.adom.remove(&u);
            }
            if let Some(set) = self.incidence.get_mut(&u) {
                set.remove(&(rel, tuple.to_vec()));
                if set.is_empty() {
                    self.incidence.remove(&u);
                }
            }
            for &v in &distinct[i + 1..] {
                for (a, b) in [(u, v), (v, u)] {
                    let nbrs = self.adjacency.get_mut(&a).expect("adjacency underflow");
                    let c = nbrs.get_mut(&b).expect("adjacency refcount underflow");
                    *c -= 1;
                    if *c == 0 {
                        nbrs.remove(&b);
                        if nbrs.is_empty() {
                            self.adjacency.remove(&a);
                        }
                    }
                }
            }
        }
        self.relations[rel.0].remove(tuple);
    }

    /// Run `f` against the database as it looks without `tuple` (which must
    /// currently be present), then restore it. Used by the maintenance passes
    /// that need the pre-insert state after an insert has been applied.
    pub fn with_tuple_absent<R>(
        &mut self,
        rel: RelId,
        tuple: &[Constant],
        f: impl FnOnce(&Database) -> R,
    ) -> R {
        assert!(
            self.relations[rel.0].contains(tuple),
            "with_tuple_absent: tuple not present"
        );
        self.raw_delete(rel, tuple);
        let out = f(self);
        self.raw_insert(rel, tuple.to_vec());
        out
    }

    /// Same dance for a tuple that is currently absent.
    pub fn with_tuple_present<R>(
        &mut self,
        rel: RelId,
        tuple: &[Constant],
        f: impl FnOnce(&Database) -> R,
    ) -> R {
        assert!(
            !self.relations[rel.0].contains(tuple),
            "with_tuple_present: tuple already present"
        );
        self.raw_insert(rel, tuple.to_vec());
        let out = f(self);
        self.raw_delete(rel, tuple);
        out
    }

    /// Union of the radius-`r` balls around the components of `seeds` in the
    /// Gaifman graph. A constant outside the active domain contributes just
    /// itself. The result is checked against the structural size bound
    /// (distinct seeds times the geometric degree sum).
    pub fn ball(&self, seeds: &[Constant], r: usize) -> BTreeSet<Constant> {
        let mut visited: BTreeSet<Constant> = BTreeSet::new();
        let mut queue: VecDeque<(Constant, usize)> = VecDeque::new();
        for &s in seeds {
            if visited.insert(s) {
                queue.push_back((s, 0));
            }
        }
        while let Some((u, depth)) = queue.pop_front() {
            ops::tick();
            if depth == r {
                continue;
            }
            if let Some(nbrs) = self.adjacency.get(&u) {
                for &v in nbrs.keys() {
                    ops::tick();
                    if visited.insert(v) {
                        queue.push_back((v, depth + 1));
                    }
                }
            }
        }
        let distinct_seeds = seeds.iter().collect::<BTreeSet<_>>().len() as u128;
        let bound = distinct_seeds.saturating_mul(geometric_degree_sum(self.degree_bound, r));
        assert!(
            (visited.len() as u128) <= bound,
            "ball size {} exceeds structural bound {}",
            visited.len(),
            bound
        );
        visited
    }

    /// Is the Gaifman distance between `a` and `b` at most `t`?
    pub fn dist_at_most(&self, a: Constant, b: Constant, t: usize) -> bool {
        if a == b {
            return true;
        }
        let mut visited: HashSet<Constant> = HashSet::from([a]);
        let mut queue: VecDeque<(Constant, usize)> = VecDeque::from([(a, 0)]);
        while let Some((u, depth)) = queue.pop_front() {
            ops::tick();
            if depth == t {
                continue;
            }
            if let Some(nbrs) = self.adjacency.get(&u) {
                for &v in nbrs.keys() {
                    ops::tick();
                    if v == b {
                        return true;
                    }
                    if visited.insert(v) {
                        queue.push_back((v, depth + 1));
                    }
                }
            }
        }
        false
    }

    /// Memoized form of [`Database::dist_at_most`].
    pub fn dist_at_most_memo(
        &self,
        a: Constant,
        b: Constant,
        t: usize,
        memo: &mut DistMemo,
    ) -> bool {
        let key = (a.min(b), a.max(b), t);
        if let Some(&hit) = memo.cache.get(&key) {
            ops::tick();
            return hit;
        }
        let out = self.dist_at_most(a, b, t);
        memo.cache.insert(key, out);
        out
    }

    /// Is the radius-`r` neighborhood of `tuple` connected? Equivalently, do
    /// the components' balls form one connected block, which holds exactly
    /// when the positions can be chained by pairwise distance at most 2r+1.
    pub fn neighborhood_connected(
        &self,
        tuple: &[Constant],
        r: usize,
        memo: &mut DistMemo,
    ) -> bool {
        let distinct: Vec<Constant> = {
            let s: BTreeSet<Constant> = tuple.iter().copied().collect();
            s.into_iter().collect()
        };
        if distinct.len() <= 1 {
            return true;
        }
        let t = 2 * r + 1;
        // Union the positions that sit within distance 2r+1 of each other.
        let n = distinct.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let root = find(parent, parent[i]);
                parent[i] = root;
            }
            parent[i]
        }
        for i in 0..n {
            for j in i + 1..n {
                ops::tick();
                if self.dist_at_most_memo(distinct[i], distinct[j], t, memo) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let root = find(&mut parent, 0);
        (1..n).all(|i| find(&mut parent, i) == root)
    }

    /// The database restricted to the radius-`r` neighborhood of `tuple`:
    /// the ball's elements plus every stored tuple lying entirely inside it.
    pub fn induced_neighborhood(&self, tuple: &[Constant], r: usize) -> NeighborhoodDb {
        let elements = self.ball(tuple, r);
        let mut tuples: BTreeSet<(RelId, Tuple)> = BTreeSet::new();
        for &e in &elements {
            if let Some(inc) = self.incidence.get(&e) {
                for (rel, t) in inc {
                    ops::tick();
                    if t.iter().all(|c| elements.contains(c)) {
                        tuples.insert((*rel, t.clone()));
                    }
                }
            }
        }
        NeighborhoodDb { elements, tuples }
    }

    /// Recompute the Gaifman adjacency from the stored relations. Test
    /// support: the maintained adjacency must always match this.
    pub fn recompute_adjacency(&self) -> HashMap<Constant, HashMap<Constant, u32>> {
        let mut adj: HashMap<Constant, HashMap<Constant, u32>> = HashMap::new();
        for rel in &self.relations {
            for tuple in rel {
                let distinct: Vec<Constant> = {
                    let s: BTreeSet<Constant> = tuple.iter().copied().collect();
                    s.into_iter().collect()
                };
                for (i, &u) in distinct.iter().enumerate() {
                    for &v in &distinct[i + 1..] {
                        *adj.entry(u).or_default().entry(v).or_insert(0) += 1;
                        *adj.entry(v).or_default().entry(u).or_insert(0) += 1;
                    }
                }
            }
        }
        adj
    }

    /// Maintained adjacency, for differential tests.
    pub fn adjacency(&self) -> &HashMap<Constant, HashMap<Constant, u32>> {
        &self.adjacency
    }

    /// Deterministic one-line-per-fact rendering of the stored relations and
    /// derived structures; used by state-identity tests.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (rel, name, _) in self.schema.iter() {
            let mut tuples: Vec<&Tuple> = self.relations[rel.0].iter().collect();
            tuples.sort();
            for t in tuples {
                out.push_str(&format!("{name}{t:?}\n"));
            }
        }
        let adj: BTreeMap<Constant, BTreeMap<Constant, u32>> = self
            .adjacency
            .iter()
            .map(|(k, v)| (*k, v.iter().map(|(a, b)| (*a, *b)).collect()))
            .collect();
        out.push_str(&format!("adjacency {adj:?}\n"));
        let adom: BTreeMap<Constant, u32> = self.adom.iter().map(|(k, v)| (*k, *v)).collect();
        out.push_str(&format!("adom {adom:?}\n"));
        out
    }
}

/// Sum of d^i for i in 0..=r, saturating.
pub fn geometric_degree_sum(d: usize, r: usize) -> u128 {
    let mut total: u128 = 0;
    let mut power: u128 = 1;
    for _ in 0..=r {
        total = total.saturating_add(power);
        power = power.saturating_mul(d as u128);
    }
    total
}

/// A finite structure cut out of some database: an explicit element set plus
/// the tuples over it. Serves as the concrete representation of
/// neighborhood types.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NeighborhoodDb {
    pub elements: BTreeSet<Constant>,
    pub tuples: BTreeSet<(RelId, Tuple)>,
}

impl NeighborhoodDb {
    pub fn new(elements: BTreeSet<Constant>, tuples: BTreeSet<(RelId, Tuple)>) -> NeighborhoodDb {
        NeighborhoodDb { elements, tuples }
    }

    /// Gaifman adjacency within this structure.
    pub fn adjacency(&self) -> HashMap<Constant, BTreeSet<Constant>> {
        let mut adj: HashMap<Constant, BTreeSet<Constant>> = HashMap::new();
        for e in &self.elements {
            adj.entry(*e).or_default();
        }
        for (_, tuple) in &self.tuples {
            let distinct: Vec<Constant> = {
                let s: BTreeSet<Constant> = tuple.iter().copied().collect();
                s.into_iter().collect()
            };
            for (i, &u) in distinct.iter().enumerate() {
                for &v in &distinct[i + 1..] {
                    adj.entry(u).or_default().insert(v);
                    adj.entry(v).or_default().insert(u);
                }
            }
        }
        adj
    }

    /// Radius-`r` ball around `seeds` inside this structure.
    pub fn ball_within(&self, seeds: &[Constant], r: usize) -> BTreeSet<Constant> {
        let adj = self.adjacency();
        let mut visited: BTreeSet<Constant> = BTreeSet::new();
        let mut queue: VecDeque<(Constant, usize)> = VecDeque::new();
        for &s in seeds {
            if visited.insert(s) {
                queue.push_back((s, 0));
            }
        }
        while let Some((u, depth)) = queue.pop_front() {
            ops::tick();
            if depth == r {
                continue;
            }
            if let Some(nbrs) = adj.get(&u) {
                for &v in nbrs {
                    if visited.insert(v) {
                        queue.push_back((v, depth + 1));
                    }
                }
            }
        }
        visited
    }

    /// Restriction to `keep`: surviving elements and the tuples lying
    /// entirely inside.
    pub fn restrict(&self, keep: &BTreeSet<Constant>) -> NeighborhoodDb {
        let elements: BTreeSet<Constant> = self.elements.intersection(keep).copied().collect();
        let tuples = self
            .tuples
            .iter()
            .filter(|(_, t)| t.iter().all(|c| elements.contains(c)))
            .cloned()
            .collect();
        NeighborhoodDb { elements, tuples }
    }

    /// Connected components of the Gaifman graph on `elements`, each sorted,
    /// ordered by smallest element.
    pub fn components(&self) -> Vec<BTreeSet<Constant>> {
        let adj = self.adjacency();
        let mut seen: BTreeSet<Constant> = BTreeSet::new();
        let mut out = Vec::new();
        for &start in &self.elements {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut queue = VecDeque::from([start]);
            seen.insert(start);
            comp.insert(start);
            while let Some(u) = queue.pop_front() {
                if let Some(nbrs) = adj.get(&u) {
                    for &v in nbrs {
                        if self.elements.contains(&v) && seen.insert(v) {
                            comp.insert(v);
                            queue.push_back(v);
                        }
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// Largest Gaifman degree occurring in the structure.
    pub fn max_degree(&self) -> usize {
        self.adjacency()
            .values()
            .map(|s| s.len())
            .max()
            .unwrap_or(0)
    }

    /// Does the element set equal the radius-`r` ball around `centres`?
    /// Required of every well-formed neighborhood type.
    pub fn is_exact_neighborhood(&self, centres: &[Constant], r: usize) -> bool {
        if !centres.iter().all(|c| self.elements.contains(c)) {
            return false;
        }
        self.ball_within(centres, r) == self.elements
    }

    /// Number of tuples per relation, used as a cheap isomorphism invariant.
    fn relation_profile(&self) -> BTreeMap<RelId, usize> {
        let mut prof = BTreeMap::new();
        for (rel, _) in &self.tuples {
            *prof.entry(*rel).or_insert(0) += 1;
        }
        prof
    }
}

/// Is there a bijection between the two structures that maps `c1` to `c2`
/// pointwise and preserves all tuples both ways? Brute-force backtracking
/// over element assignments, pruned by local invariants; intended for the
/// small structures that arise as bounded-radius neighborhoods.
pub fn isomorphic(
    n1: &NeighborhoodDb,
    c1: &[Constant],
    n2: &NeighborhoodDb,
    c2: &[Constant],
) -> bool {
    if c1.len() != c2.len()
        || n1.elements.len() != n2.elements.len()
        || n1.tuples.len() != n2.tuples.len()
        || n1.relation_profile() != n2.relation_profile()
    {
        return false;
    }
    if !c1.iter().all(|c| n1.elements.contains(c)) || !c2.iter().all(|c| n2.elements.contains(c)) {
        return false;
    }
    // Forced centre assignments; equality patterns must agree.
    let mut map: HashMap<Constant, Constant> = HashMap::new();
    let mut rev: HashMap<Constant, Constant> = HashMap::new();
    for (&a, &b) in c1.iter().zip(c2.iter()) {
        match map.get(&a) {
            Some(&prev) if prev != b => return false,
            _ => {}
        }
        match rev.get(&b) {
            Some(&prev) if prev != a => return false,
            _ => {}
        }
        map.insert(a, b);
        rev.insert(b, a);
    }

    let inv1 = local_invariants(n1);
    let inv2 = local_invariants(n2);
    // Centres must agree on invariants up front.
    for (&a, &b) in map.iter() {
        if inv1[&a] != inv2[&b] {
            return false;
        }
    }

    let adj1 = n1.adjacency();
    let adj2 = n2.adjacency();
    let mut pending: Vec<Constant> = n1
        .elements
        .iter()
        .copied()
        .filter(|e| !map.contains_key(e))
        .collect();
    // Most-constrained-first: fewer candidates means earlier pruning.
    let mut candidate_counts: HashMap<Constant, usize> = HashMap::new();
    for &e in &pending {
        let count = n2
            .elements
            .iter()
            .filter(|&&f| inv2[&f] == inv1[&e])
            .count();
        candidate_counts.insert(e, count);
    }
    pending.sort_by_key(|e| (candidate_counts[e], *e));

    fn extend(
        pending: &[Constant],
        map: &mut HashMap<Constant, Constant>,
        rev: &mut HashMap<Constant, Constant>,
        n1: &NeighborhoodDb,
        n2: &NeighborhoodDb,
        inv1: &HashMap<Constant, u64>,
        inv2: &HashMap<Constant, u64>,
        adj1: &HashMap<Constant, BTreeSet<Constant>>,
        adj2: &HashMap<Constant, BTreeSet<Constant>>,
    ) -> bool {
        let Some((&e, rest)) = pending.split_first() else {
            // All elements mapped; verify every tuple transfers.
            return n1.tuples.iter().all(|(rel, t)| {
                let image: Tuple = t.iter().map(|c| map[c]).collect();
                n2.tuples.contains(&(*rel, image))
            });
        };
        for &f in &n2.elements {
            ops::tick();
            if rev.contains_key(&f) || inv2[&f] != inv1[&e] {
                continue;
            }
            // Adjacency with already-mapped elements must correspond.
            let ok = adj1[&e].iter().all(|u| match map.get(u) {
                Some(v) => adj2[&f].contains(v),
                None => true,
            }) && adj2[&f].iter().all(|v| match rev.get(v) {
                Some(u) => adj1[&e].contains(u),
                None => true,
            });
            if !ok {
                continue;
            }
            map.insert(e, f);
            rev.insert(f, e);
            if extend(rest, map, rev, n1, n2, inv1, inv2, adj1, adj2) {
                return true;
            }
            map.remove(&e);
            rev.remove(&f);
        }
        false
    }

    extend(
        &pending, &mut map, &mut rev, n1, n2, &inv1, &inv2, &adj1, &adj2,
    )
}

/// Hash of an iterated local invariant per element: incidence profile and
/// degree, refined a few rounds by neighbor multisets. Isomorphism-invariant
/// by construction, so safe for pruning.
fn local_invariants(n: &NeighborhoodDb) -> HashMap<Constant, u64> {
    use std::collections::hash_map::DefaultHasher;
    use std::hash::{Hash, Hasher};

    let adj = n.adjacency();
    let mut colors: HashMap<Constant, u64> = HashMap::new();
    for &e in &n.elements {
        let mut profile: Vec<(RelId, Vec<usize>)> = Vec::new();
        for (rel, t) in &n.tuples {
            let positions: Vec<usize> = t
                .iter()
                .enumerate()
                .filter(|(_, &c)| c == e)
                .map(|(i, _)| i)
                .collect();
            if !positions.is_empty() {
                profile.push((*rel, positions));
            }
        }
        profile.sort();
        let mut h = DefaultHasher::new();
        (adj[&e].len(), &profile).hash(&mut h);
        colors.insert(e, h.finish());
    }
    for _ in 0..3 {
        let mut next: HashMap<Constant, u64> = HashMap::new();
        for &e in &n.elements {
            let mut nbr: Vec<u64> = adj[&e].iter().map(|v| colors[v]).collect();
            nbr.sort_unstable();
            let mut h = DefaultHasher::new();
            (colors[&e], &nbr).hash(&mut h);
            next.insert(e, h.finish());
        }
        colors = next;
    }
    colors
}

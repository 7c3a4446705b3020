//! Constant-time counting of answers with a fixed signature.
//!
//! A tuple whose signature has colours 1..c is an assignment of one index
//! vertex per colour (colour i draws from the extent T_i of the colour's
//! component type) such that the chosen vertices are pairwise
//! non-conflicting. The count is computed by inclusion–exclusion over the
//! sets of colour pairs forced to conflict:
//!
//! n1 = product of |T_i|          (all assignments)
//! n2 = sum over nonempty pair-sets K of (-1)^{|K|+1} |phi_K|
//! n3 = n1 - n2                   (assignments with no conflicting pair)
//!
//! where phi_K counts assignments whose K-pairs all conflict. The pairs of
//! K partition its colours into connected pattern components; vertices
//! assigned to one component chain through conflict edges, so a component's
//! count is maintained per anchor vertex (the component's smallest colour)
//! and each anchor's extension count only depends on the conflict graph
//! within a bounded ball around it. An update therefore recounts only the
//! anchors near the vertices an update batch touched.
//!
//! Identical vertex choices for two colours count as conflicting (every
//! vertex conflicts with itself), which is exactly right: reusing a
//! component tuple in two blocks would merge them into one component and
//! change the signature.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::ops;
use crate::sphere::{Delta, VertexId};
use crate::types::{Signature, TypeId};

/// A consumer-side mirror of the index restricted to the vertex types a
/// signature draws from, fed by delta batches. Tracks membership per type
/// and the conflict edges with both endpoints in view (self-loops
/// included), and reports the region a batch may have influenced.
#[derive(Debug, Clone)]
pub struct ViewMirror {
    wanted: BTreeSet<TypeId>,
    members: BTreeMap<TypeId, BTreeSet<VertexId>>,
    vertex_type: HashMap<VertexId, TypeId>,
    adj: HashMap<VertexId, BTreeSet<VertexId>>,
    /// Depth of the affected ball returned from [`ViewMirror::apply_batch`].
    depth: usize,
}

impl ViewMirror {
    pub fn new(wanted: BTreeSet<TypeId>, depth: usize) -> ViewMirror {
        let members = wanted.iter().map(|&t| (t, BTreeSet::new())).collect();
        ViewMirror {
            wanted,
            members,
            vertex_type: HashMap::new(),
            adj: HashMap::new(),
            depth,
        }
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.vertex_type.contains_key(&v)
    }

    pub fn members(&self, ty: TypeId) -> &BTreeSet<VertexId> {
        &self.members[&ty]
    }

    pub fn neighbors(&self, v: VertexId) -> Option<&BTreeSet<VertexId>> {
        self.adj.get(&v)
    }

    pub fn conflicting(&self, u: VertexId, v: VertexId) -> bool {
        self.adj.get(&u).is_some_and(|a| a.contains(&v))
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_type.len()
    }

    /// Largest conflict degree in view, self-loop excluded.
    pub fn max_degree(&self) -> usize {
        self.adj
            .values()
            .map(|a| a.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    fn insert_vertex(&mut self, v: VertexId, ty: TypeId) {
        self.vertex_type.insert(v, ty);
        self.members.get_mut(&ty).unwrap().insert(v);
        self.adj.entry(v).or_default();
    }

    fn remove_vertex(&mut self, v: VertexId) {
        let ty = self.vertex_type.remove(&v).unwrap();
        self.members.get_mut(&ty).unwrap().remove(&v);
        let edges = self.adj.remove(&v).unwrap_or_default();
        for u in edges {
            if u != v {
                self.adj.get_mut(&u).unwrap().remove(&v);
            }
        }
    }

    fn link(&mut self, u: VertexId, v: VertexId) {
        self.adj.get_mut(&u).unwrap().insert(v);
        self.adj.get_mut(&v).unwrap().insert(u);
    }

    /// Ball of `depth` conflict steps around `seeds` in the current state.
    fn ball(&self, seeds: &BTreeSet<VertexId>) -> BTreeSet<VertexId> {
        let mut visited: BTreeSet<VertexId> = seeds
            .iter()
            .copied()
            .filter(|v| self.contains(*v))
            .collect();
        let mut frontier: Vec<VertexId> = visited.iter().copied().collect();
        for _ in 0..self.depth {
            let mut next = Vec::new();
            for &u in &frontier {
                ops::tick();
                if let Some(nbrs) = self.adj.get(&u) {
                    for &w in nbrs {
                        if visited.insert(w) {
                            next.push(w);
                        }
                    }
                }
            }
            frontier = next;
        }
        visited
    }

    /// Whether any delta can change this view: an edge with an endpoint in
    /// view, or a vertex event on one of the view's types.
    pub fn touched_by(&self, deltas: &[Delta]) -> bool {
        deltas.iter().any(|d| match d {
            Delta::EdgeRemoved { u, v } | Delta::EdgeAdded { u, v } => {
                self.contains(*u) || self.contains(*v)
            }
            Delta::VertexRemoved { v, .. } => self.contains(*v),
            Delta::Retyped { old, new, .. } => {
                self.wanted.contains(old) || self.wanted.contains(new)
            }
            Delta::VertexAdded { type_id, .. } => self.wanted.contains(type_id),
        })
    }

    /// Apply one ordered delta batch; returns every vertex whose bounded
    /// neighborhood may have changed (the union of the affected balls in
    /// the pre- and post-states, plus the touched vertices themselves).
    pub fn apply_batch(&mut self, deltas: &[Delta]) -> BTreeSet<VertexId> {
        let mut seeds: BTreeSet<VertexId> = BTreeSet::new();
        for d in deltas {
            match d {
                Delta::EdgeRemoved { u, v } | Delta::EdgeAdded { u, v } => {
                    seeds.insert(*u);
                    seeds.insert(*v);
                }
                Delta::VertexRemoved { v, .. }
                | Delta::Retyped { v, .. }
                | Delta::VertexAdded { v, .. } => {
                    seeds.insert(*v);
                }
            }
        }
        let before = self.ball(&seeds);
        for d in deltas {
            ops::tick();
            match d {
                Delta::EdgeRemoved { u, v } => {
                    if self.contains(*u) && self.contains(*v) {
                        self.adj.get_mut(u).unwrap().remove(v);
                        self.adj.get_mut(v).unwrap().remove(u);
                    }
                }
                Delta::VertexRemoved { v, .. } => {
                    if self.contains(*v) {
                        debug_assert!(self.adj[v].is_empty(), "edges must go first");
                        self.remove_vertex(*v);
                    }
                }
                Delta::Retyped { v, old, new, neighbors } => {
                    let was = self.wanted.contains(old);
                    let is = self.wanted.contains(new);
                    match (was, is) {
                        (false, false) => {}
                        (true, false) => self.remove_vertex(*v),
                        (true, true) => {
                            self.members.get_mut(old).unwrap().remove(v);
                            self.members.get_mut(new).unwrap().insert(*v);
                            self.vertex_type.insert(*v, *new);
                        }
                        (false, true) => {
                            // Entering the view through a type change: the
                            // carried neighbor list supplies the conflict
                            // edges to vertices already in view.
                            self.insert_vertex(*v, *new);
                            for &u in neighbors {
                                if self.contains(u) {
                                    self.link(*v, u);
                                }
                            }
                        }
                    }
                }
                Delta::VertexAdded { v, type_id, .. } => {
                    if self.wanted.contains(type_id) {
                        self.insert_vertex(*v, *type_id);
                    }
                }
                Delta::EdgeAdded { u, v } => {
                    if self.contains(*u) && self.contains(*v) {
                        self.link(*u, *v);
                    }
                }
            }
        }
        let after = self.ball(&seeds);
        let mut affected = before;
        affected.extend(after);
        affected.extend(seeds);
        affected
    }
}

/// One connected component of a pair-set's constraint graph: slots in
/// breadth-first order from the anchor (the smallest colour), each non-root
/// slot listing the earlier slots it must conflict with.
#[derive(Debug, Clone)]
struct Pattern {
    /// Colour of each slot; slot 0 is the anchor.
    slot_colour: Vec<usize>,
    /// Indices of earlier slots each slot must conflict with (nonempty for
    /// every slot but the anchor).
    constraints: Vec<Vec<usize>>,
    /// Extension count per current anchor vertex.
    cnt: HashMap<VertexId, u64>,
    /// Sum of all extension counts.
    m: i128,
}

/// Reference to the factors making up one phi_K.
#[derive(Debug, Clone)]
struct KEntry {
    sign: i128,
    pattern_ids: Vec<usize>,
    /// Colours untouched by K contribute their extent size as a factor.
    untouched: Vec<usize>,
}

/// Live answer count for one signature.
#[derive(Debug, Clone)]
pub struct CountState {
    /// Component type per colour.
    colours: Vec<TypeId>,
    mirror: ViewMirror,
    patterns: Vec<Pattern>,
    k_entries: Vec<KEntry>,
}

impl CountState {
    /// Empty-index state for a signature. Bring it up to date by replaying
    /// a snapshot batch.
    pub fn new(sgn: &Signature) -> CountState {
        let colours: Vec<TypeId> = sgn.components.iter().map(|c| c.type_id).collect();
        let c = colours.len();
        assert!(c >= 1 && c <= 5, "counting supports 1..=5 components");
        let wanted: BTreeSet<TypeId> = colours.iter().copied().collect();
        let mirror = ViewMirror::new(wanted, c + 1);

        // All unordered colour pairs, then one entry per nonempty subset.
        let pairs: Vec<(usize, usize)> = (0..c)
            .flat_map(|i| (i + 1..c).map(move |j| (i, j)))
            .collect();
        let mut patterns: Vec<Pattern> = Vec::new();
        let mut k_entries: Vec<KEntry> = Vec::new();
        for mask in 1u32..(1 << pairs.len()) {
            let k_pairs: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, p)| *p)
                .collect();
            let sign: i128 = if k_pairs.len() % 2 == 1 { 1 } else { -1 };
            // Split colours into constraint components.
            let mut comp: Vec<usize> = (0..c).collect();
            fn find(comp: &mut Vec<usize>, i: usize) -> usize {
                if comp[i] != i {
                    let root = find(comp, comp[i]);
                    comp[i] = root;
                }
                comp[i]
            }
            for &(i, j) in &k_pairs {
                let (a, b) = (find(&mut comp, i), find(&mut comp, j));
                comp[a] = b;
            }
            let touched: BTreeSet<usize> =
                k_pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
            let untouched: Vec<usize> =
                (0..c).filter(|i| !touched.contains(i)).collect();
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &i in &touched {
                groups.entry(find(&mut comp, i)).or_default().push(i);
            }
            let mut pattern_ids = Vec::new();
            for (_, mut group) in groups {
                group.sort_unstable();
                // Breadth-first slot order from the smallest colour.
                let anchor = group[0];
                let mut order = vec![anchor];
                let mut placed: BTreeSet<usize> = BTreeSet::from([anchor]);
                while order.len() < group.len() {
                    let next = group
                        .iter()
                        .copied()
                        .find(|&g| {
                            !placed.contains(&g)
                                && k_pairs.iter().any(|&(i, j)| {
                                    (i == g && placed.contains(&j))
                                        || (j == g && placed.contains(&i))
                                })
                        })
                        .expect("constraint component is connected");
                    placed.insert(next);
                    order.push(next);
                }
                let constraints: Vec<Vec<usize>> = order
                    .iter()
                    .enumerate()
                    .map(|(t, &g)| {
                        (0..t)
                            .filter(|&s| {
                                let e = order[s];
                                k_pairs.contains(&(e.min(g), e.max(g)))
                            })
                            .collect()
                    })
                    .collect();
                pattern_ids.push(patterns.len());
                patterns.push(Pattern {
                    slot_colour: order,
                    constraints,
                    cnt: HashMap::new(),
                    m: 0,
                });
            }
            k_entries.push(KEntry {
                sign,
                pattern_ids,
                untouched,
            });
        }
        CountState {
            colours,
            mirror,
            patterns,
            k_entries,
        }
    }

    pub fn mirror(&self) -> &ViewMirror {
        &self.mirror
    }

    /// All assignments.
    pub fn n1(&self) -> i128 {
        self.colours
            .iter()
            .map(|&t| self.mirror.members(t).len() as i128)
            .fold(1i128, |a, b| a.checked_mul(b).expect("count overflow"))
    }

    /// Assignments with at least one conflicting pair.
    pub fn n2(&self) -> i128 {
        let mut total: i128 = 0;
        for entry in &self.k_entries {
            ops::tick();
            let mut term: i128 = entry.sign;
            for &pid in &entry.pattern_ids {
                term = term
                    .checked_mul(self.patterns[pid].m)
                    .expect("count overflow");
            }
            for &colour in &entry.untouched {
                term = term
                    .checked_mul(self.mirror.members(self.colours[colour]).len() as i128)
                    .expect("count overflow");
            }
            total += term;
        }
        total
    }

    /// Conflict-free assignments: the number of answers with this signature.
    pub fn n3(&self) -> i128 {
        self.n1() - self.n2()
    }

    /// phi for one pair-set, from the maintained pattern counts (test
    /// support; `k_entries` order matches subset masks 1..).
    pub fn phi_by_mask(&self, mask: u32) -> i128 {
        let entry = &self.k_entries[(mask - 1) as usize];
        let mut term: i128 = 1;
        for &pid in &entry.pattern_ids {
            term *= self.patterns[pid].m;
        }
        for &colour in &entry.untouched {
            term *= self.mirror.members(self.colours[colour]).len() as i128;
        }
        term
    }

    pub fn pair_subset_count(&self) -> u32 {
        self.k_entries.len() as u32
    }

    /// Extensions of `anchor` through the pattern's constraint chain,
    /// counted over the current view.
    fn count_extensions(&self, pattern: &Pattern, anchor: VertexId) -> u64 {
        fn go(
            mirror: &ViewMirror,
            colours: &[TypeId],
            pattern: &Pattern,
            assigned: &mut Vec<VertexId>,
        ) -> u64 {
            let t = assigned.len();
            if t == pattern.slot_colour.len() {
                return 1;
            }
            ops::tick();
            let want_ty = colours[pattern.slot_colour[t]];
            let cons = &pattern.constraints[t];
            let generator = assigned[cons[0]];
            let mut total = 0;
            if let Some(nbrs) = mirror.neighbors(generator) {
                for &cand in nbrs {
                    ops::tick();
                    if mirror.vertex_type[&cand] != want_ty {
                        continue;
                    }
                    if cons[1..]
                        .iter()
                        .all(|&s| mirror.conflicting(assigned[s], cand))
                    {
                        assigned.push(cand);
                        total += go(mirror, colours, pattern, assigned);
                        assigned.pop();
                    }
                }
            }
            total
        }
        let mut assigned = vec![anchor];
        go(&self.mirror, &self.colours, pattern, &mut assigned)
    }

    /// Fold one delta batch into the mirror and recount the anchors it
    /// could have affected.
    pub fn apply_batch(&mut self, deltas: &[Delta]) {
        if !self.mirror.touched_by(deltas) {
            return;
        }
        let affected = self.mirror.apply_batch(deltas);
        let mut patterns = std::mem::take(&mut self.patterns);
        for pattern in &mut patterns {
            let anchor_ty = self.colours[pattern.slot_colour[0]];
            for &v in &affected {
                ops::tick();
                let old = pattern.cnt.remove(&v).unwrap_or(0);
                let new = if self.mirror.members(anchor_ty).contains(&v) {
                    let n = self.count_extensions(pattern, v);
                    if n > 0 {
                        pattern.cnt.insert(v, n);
                    }
                    n
                } else {
                    0
                };
                pattern.m += new as i128 - old as i128;
            }
        }
        self.patterns = patterns;
    }

    /// Recount everything from the mirror by brute force, with a size guard.
    /// Returns (n1, n2, n3) or `None` if the view is too large. Test oracle.
    pub fn bruteforce(&self, cap: u64) -> Option<(i128, i128, i128)> {
        let sizes: Vec<u64> = self
            .colours
            .iter()
            .map(|&t| self.mirror.members(t).len() as u64)
            .collect();
        let mut total: u64 = 1;
        for &s in &sizes {
            total = total.checked_mul(s.max(1))?;
            if total > cap {
                return None;
            }
        }
        let member_lists: Vec<Vec<VertexId>> = self
            .colours
            .iter()
            .map(|&t| self.mirror.members(t).iter().copied().collect())
            .collect();
        let mut n1: i128 = 0;
        let mut clean: i128 = 0;
        fn walk(
            mirror: &ViewMirror,
            lists: &[Vec<VertexId>],
            depth: usize,
            chosen: &mut Vec<VertexId>,
            n1: &mut i128,
            clean: &mut i128,
        ) {
            if depth == lists.len() {
                *n1 += 1;
                let ok = (0..chosen.len()).all(|i| {
                    (i + 1..chosen.len()).all(|j| !mirror.conflicting(chosen[i], chosen[j]))
                });
                if ok {
                    *clean += 1;
                }
                return;
            }
            for &v in &lists[depth] {
                chosen.push(v);
                walk(mirror, lists, depth + 1, chosen, n1, clean);
                chosen.pop();
            }
        }
        let mut chosen = Vec::new();
        walk(
            &self.mirror,
            &member_lists,
            0,
            &mut chosen,
            &mut n1,
            &mut clean,
        );
        Some((n1, n1 - clean, clean))
    }

    /// Brute-force phi for one subset mask. Test oracle.
    pub fn phi_bruteforce(&self, mask: u32, cap: u64) -> Option<i128> {
        let c = self.colours.len();
        let pairs: Vec<(usize, usize)> = (0..c)
            .flat_map(|i| (i + 1..c).map(move |j| (i, j)))
            .collect();
        let k_pairs: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> *i & 1 == 1)
            .map(|(_, p)| *p)
            .collect();
        let member_lists: Vec<Vec<VertexId>> = self
            .colours
            .iter()
            .map(|&t| self.mirror.members(t).iter().copied().collect())
            .collect();
        let mut total: u64 = 1;
        for l in &member_lists {
            total = total.checked_mul((l.len() as u64).max(1))?;
            if total > cap {
                return None;
            }
        }
        fn walk(
            mirror: &ViewMirror,
            lists: &[Vec<VertexId>],
            k_pairs: &[(usize, usize)],
            depth: usize,
            chosen: &mut Vec<VertexId>,
            hits: &mut i128,
        ) {
            if depth == lists.len() {
                if k_pairs
                    .iter()
                    .all(|&(i, j)| mirror.conflicting(chosen[i], chosen[j]))
                {
                    *hits += 1;
                }
                return;
            }
            for &v in &lists[depth] {
                chosen.push(v);
                walk(mirror, lists, k_pairs, depth + 1, chosen, hits);
                chosen.pop();
            }
        }
        let mut hits = 0i128;
        let mut chosen = Vec::new();
        walk(
            &self.mirror,
            &member_lists,
            &k_pairs,
            0,
            &mut chosen,
            &mut hits,
        );
        Some(hits)
    }
}

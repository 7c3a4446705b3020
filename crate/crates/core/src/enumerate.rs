//! Constant-delay enumeration of answers with a fixed signature.
//!
//! Answers with signature colours 1..c are conflict-free colour assignments
//! (one index vertex per colour). The enumerator walks colour lists in a
//! maintained order with two devices that bound the gap between emissions:
//!
//! * Skip tables. Scanning a colour list for the next vertex compatible
//!   with the partial assignment S may cross long blocked stretches. For
//!   each list position y a relevance set rel(y) is maintained — a superset
//!   of every vertex that could ever block a scan starting at y (computed
//!   by a bounded chase through conflict edges and successor links) — plus
//!   a table mapping each small subset of rel(y) that blocks y itself to
//!   the scan's landing position. A live scan intersects S with rel(y)
//!   (sound because vertices outside rel(y) never block) and either stays
//!   at y or jumps via one table lookup.
//!
//! * The small-colour prefix. A partial assignment can be a dead end only
//!   at a colour whose extent is at most c * Δ (Δ = the largest conflict
//!   degree seen): bigger colours always retain an unblocked vertex, since
//!   at most (c-1) * Δ positions are blocked. Colours are reordered so the
//!   small ones form a prefix whose conflict-free partial assignments are
//!   few enough to recompute outright on every update; past the prefix,
//!   every branch completes, so there is no backtracking over dead ends.
//!
//! Updates splice the colour lists (insertions prepend, so positions of
//! existing vertices never change) and recompute relevance sets and tables
//! only for positions near the touched vertices: within a bounded ball in
//! the graph of conflict edges and list links, or within a bounded
//! predecessor window (scans from such positions can pass through the
//! changed ones).
//!
//! Skip data is kept only for lists longer than the small-colour threshold:
//! enumeration answers small colours from the precomputed prefix and never
//! skip-queries them, and on dense views (where the conflict degree
//! approaches the view size) a table per position would cost close to
//! view^c space for no reads. Lists crossing the threshold rebuild or drop
//! their tables wholesale; a skip query against an untracked list falls
//! back to a plain scan, whose length the same threshold bounds.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::ControlFlow;

use crate::ops;
use crate::sphere::{Delta, VertexId};
use crate::types::{Signature, TypeId};

#[derive(Debug, Clone, Default)]
struct ColourList {
    first: Option<VertexId>,
    succ: HashMap<VertexId, Option<VertexId>>,
    pred: HashMap<VertexId, Option<VertexId>>,
}

impl ColourList {
    fn len(&self) -> usize {
        self.succ.len()
    }

    fn contains(&self, v: VertexId) -> bool {
        self.succ.contains_key(&v)
    }

    fn prepend(&mut self, v: VertexId) {
        debug_assert!(!self.contains(v));
        if let Some(old) = self.first {
            self.pred.insert(old, Some(v));
        }
        self.succ.insert(v, self.first);
        self.pred.insert(v, None);
        self.first = Some(v);
    }

    /// Unlink `v`, returning its predecessor (the position whose successor
    /// link changed).
    fn unlink(&mut self, v: VertexId) -> Option<VertexId> {
        let succ = self.succ.remove(&v).unwrap();
        let pred = self.pred.remove(&v).unwrap();
        match pred {
            Some(p) => {
                self.succ.insert(p, succ);
            }
            None => self.first = succ,
        }
        if let Some(s) = succ {
            self.pred.insert(s, pred);
        }
        pred
    }

    fn iter(&self) -> ColourIter<'_> {
        ColourIter {
            list: self,
            at: self.first,
        }
    }
}

struct ColourIter<'a> {
    list: &'a ColourList,
    at: Option<VertexId>,
}

impl Iterator for ColourIter<'_> {
    type Item = VertexId;
    fn next(&mut self) -> Option<VertexId> {
        let v = self.at?;
        self.at = self.list.succ[&v];
        Some(v)
    }
}

/// Live enumeration structure for one signature.
#[derive(Debug, Clone)]
pub struct EnumState {
    /// Component type per colour (signature order).
    colours: Vec<TypeId>,
    c: usize,
    /// One list per distinct type; colours sharing a type share the list.
    lists: BTreeMap<TypeId, ColourList>,
    vertex_type: HashMap<VertexId, TypeId>,
    /// View-restricted conflict adjacency, self-loops included.
    adj: HashMap<VertexId, BTreeSet<VertexId>>,
    /// Largest conflict degree (self excluded) ever observed.
    delta_ever: usize,
    /// Lists currently longer than the small-colour threshold — exactly the
    /// ones whose positions carry relevance sets and skip tables.
    tabled: BTreeSet<TypeId>,
    /// Relevance set per (tracked list, position), sorted.
    rel: HashMap<(TypeId, VertexId), Vec<VertexId>>,
    /// Skip answers per (tracked list, position): blocking subset ->
    /// landing spot.
    table: HashMap<(TypeId, VertexId), HashMap<Box<[VertexId]>, Option<VertexId>>>,
    /// Colour order with the small colours first; `prefix_len` of them.
    order: Vec<usize>,
    prefix_len: usize,
    /// Conflict-free assignments of the small-prefix colours, in
    /// enumeration order (aligned with `order[..prefix_len]`).
    prefix_assignments: Vec<Vec<VertexId>>,
}

impl EnumState {
    pub fn new(sgn: &Signature) -> EnumState {
        let colours: Vec<TypeId> = sgn.components.iter().map(|c| c.type_id).collect();
        let c = colours.len();
        assert!((1..=5).contains(&c), "enumeration supports 1..=5 components");
        let lists = colours.iter().map(|&t| (t, ColourList::default())).collect();
        let mut state = EnumState {
            colours,
            c,
            lists,
            vertex_type: HashMap::new(),
            adj: HashMap::new(),
            delta_ever: 0,
            tabled: BTreeSet::new(),
            rel: HashMap::new(),
            table: HashMap::new(),
            order: vec![],
            prefix_len: 0,
            prefix_assignments: vec![],
        };
        state.refresh_prefix();
        state
    }

    pub fn colour_count(&self) -> usize {
        self.c
    }

    pub fn view_size(&self) -> usize {
        self.vertex_type.len()
    }

    pub fn delta_ever(&self) -> usize {
        self.delta_ever
    }

    pub fn colour_len(&self, colour: usize) -> usize {
        self.lists[&self.colours[colour]].len()
    }

    /// Size bound on any relevance set, as a function of the degree bound
    /// and colour count; checked by the structural-bounds tests.
    pub fn rel_bound(&self) -> u128 {
        let base = (self.delta_ever as u128 + 1).pow(2) + 1;
        base.saturating_pow(self.c as u32)
    }

    pub fn max_rel_len(&self) -> usize {
        self.rel.values().map(|r| r.len()).max().unwrap_or(0)
    }

    pub fn prefix_assignment_count(&self) -> usize {
        self.prefix_assignments.len()
    }

    fn in_view(&self, v: VertexId) -> bool {
        self.vertex_type.contains_key(&v)
    }

    fn conflicting(&self, u: VertexId, v: VertexId) -> bool {
        self.adj.get(&u).is_some_and(|a| a.contains(&v))
    }

    // ------------------------------------------------------------------
    // Update processing
    // ------------------------------------------------------------------

    /// Ball in the graph whose edges are conflicts plus list links.
    fn chase_ball(&self, seeds: &BTreeSet<VertexId>, depth: usize) -> BTreeSet<VertexId> {
        let mut visited: BTreeSet<VertexId> = seeds
            .iter()
            .copied()
            .filter(|&v| self.in_view(v))
            .collect();
        let mut frontier: Vec<VertexId> = visited.iter().copied().collect();
        for _ in 0..depth {
            let mut next = Vec::new();
            for &u in &frontier {
                ops::tick();
                let ty = self.vertex_type[&u];
                let list = &self.lists[&ty];
                let push = |w: Option<VertexId>, visited: &mut BTreeSet<VertexId>,
                            next: &mut Vec<VertexId>| {
                    if let Some(w) = w {
                        if visited.insert(w) {
                            next.push(w);
                        }
                    }
                };
                push(list.succ.get(&u).copied().flatten(), &mut visited, &mut next);
                push(list.pred.get(&u).copied().flatten(), &mut visited, &mut next);
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

    /// Positions that can reach a seed within `window` forward list steps.
    fn pred_window(&self, seeds: &BTreeSet<VertexId>, window: usize) -> BTreeSet<VertexId> {
        let mut out = BTreeSet::new();
        for &s in seeds {
            if !self.in_view(s) {
                continue;
            }
            let list = &self.lists[&self.vertex_type[&s]];
            let mut at = Some(s);
            for _ in 0..=window {
                ops::tick();
                let Some(v) = at else { break };
                out.insert(v);
                at = list.pred.get(&v).copied().flatten();
            }
        }
        out
    }

    fn insert_vertex(&mut self, v: VertexId, ty: TypeId) {
        self.vertex_type.insert(v, ty);
        self.adj.entry(v).or_default();
        self.lists.get_mut(&ty).unwrap().prepend(v);
    }

    /// Remove from list + adjacency + cached skip data; returns the splice
    /// predecessor.
    fn remove_vertex(&mut self, v: VertexId) -> Option<VertexId> {
        let ty = self.vertex_type.remove(&v).unwrap();
        let pred = self.lists.get_mut(&ty).unwrap().unlink(v);
        let edges = self.adj.remove(&v).unwrap_or_default();
        for u in edges {
            if u != v {
                self.adj.get_mut(&u).unwrap().remove(&v);
            }
        }
        self.rel.remove(&(ty, v));
        self.table.remove(&(ty, v));
        pred
    }

    /// Whether any delta can change this view: an edge with an endpoint in
    /// view, or a vertex event on one of the view's types.
    fn touches_view(&self, deltas: &[Delta]) -> bool {
        deltas.iter().any(|d| match d {
            Delta::EdgeRemoved { u, v } | Delta::EdgeAdded { u, v } => {
                self.in_view(*u) || self.in_view(*v)
            }
            Delta::VertexRemoved { v, .. } => self.in_view(*v),
            Delta::Retyped { old, new, .. } => {
                self.colours.contains(old) || self.colours.contains(new)
            }
            Delta::VertexAdded { type_id, .. } => self.colours.contains(type_id),
        })
    }

    /// Fold one ordered delta batch into the state.
    pub fn apply_batch(&mut self, deltas: &[Delta]) {
        if !self.touches_view(deltas) {
            return;
        }
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
        // The affected region only matters for lists that keep their tables
        // through this batch; pre-state positions in lists about to cross
        // the threshold are rebuilt or dropped wholesale below.
        let mut region: BTreeSet<VertexId> = BTreeSet::new();
        if !self.tabled.is_empty() {
            let window_old = (self.c - 1) * self.delta_ever + 1;
            region = self.chase_ball(&seeds, 3 * self.c);
            region.extend(self.pred_window(&seeds, window_old));
        }

        // Mutate membership, lists, and adjacency in batch order. Splice
        // predecessors join the seed set: their successor link changed.
        let mut splice_seeds: BTreeSet<VertexId> = BTreeSet::new();
        let wanted: BTreeSet<TypeId> = self.colours.iter().copied().collect();
        for d in deltas {
            ops::tick();
            match d {
                Delta::EdgeRemoved { u, v } => {
                    if self.in_view(*u) && self.in_view(*v) {
                        self.adj.get_mut(u).unwrap().remove(v);
                        self.adj.get_mut(v).unwrap().remove(u);
                    }
                }
                Delta::VertexRemoved { v, .. } => {
                    if self.in_view(*v) {
                        debug_assert!(self.adj[v].is_empty(), "edges must go first");
                        if let Some(p) = self.remove_vertex(*v) {
                            splice_seeds.insert(p);
                        }
                    }
                }
                Delta::Retyped { v, old, new, neighbors } => {
                    match (wanted.contains(old), wanted.contains(new)) {
                        (false, false) => {}
                        (true, false) => {
                            if let Some(p) = self.remove_vertex(*v) {
                                splice_seeds.insert(p);
                            }
                        }
                        (true, true) => {
                            if old != new {
                                let p = self.lists.get_mut(old).unwrap().unlink(*v);
                                if let Some(p) = p {
                                    splice_seeds.insert(p);
                                }
                                self.rel.remove(&(*old, *v));
                                self.table.remove(&(*old, *v));
                                self.vertex_type.insert(*v, *new);
                                self.lists.get_mut(new).unwrap().prepend(*v);
                            }
                        }
                        (false, true) => {
                            self.insert_vertex(*v, *new);
                            for &u in neighbors {
                                if self.in_view(u) {
                                    self.adj.get_mut(v).unwrap().insert(u);
                                    self.adj.get_mut(&u).unwrap().insert(*v);
                                }
                            }
                        }
                    }
                }
                Delta::VertexAdded { v, type_id, .. } => {
                    if wanted.contains(type_id) {
                        self.insert_vertex(*v, *type_id);
                    }
                }
                Delta::EdgeAdded { u, v } => {
                    if self.in_view(*u) && self.in_view(*v) {
                        self.adj.get_mut(u).unwrap().insert(*v);
                        self.adj.get_mut(v).unwrap().insert(*u);
                    }
                }
            }
        }
        let degree_now = self
            .adj
            .values()
            .map(|a| a.len().saturating_sub(1))
            .max()
            .unwrap_or(0);
        self.delta_ever = self.delta_ever.max(degree_now);

        let threshold = self.c * self.delta_ever;
        let tabled_now: BTreeSet<TypeId> = self
            .lists
            .iter()
            .filter(|(_, list)| list.len() > threshold)
            .map(|(&t, _)| t)
            .collect();
        let kept: BTreeSet<TypeId> = self.tabled.intersection(&tabled_now).copied().collect();

        if !kept.is_empty() {
            let mut all_seeds = seeds;
            all_seeds.extend(splice_seeds);
            let window_new = (self.c - 1) * self.delta_ever + 1;
            region.extend(self.chase_ball(&all_seeds, 3 * self.c));
            region.extend(self.pred_window(&all_seeds, window_new));
        }

        for t in self.tabled.difference(&tabled_now).copied().collect::<Vec<_>>() {
            for y in self.lists[&t].iter().collect::<Vec<_>>() {
                self.rel.remove(&(t, y));
                self.table.remove(&(t, y));
            }
        }
        for t in tabled_now.difference(&self.tabled).copied().collect::<Vec<_>>() {
            for y in self.lists[&t].iter().collect::<Vec<_>>() {
                self.recompute_position(t, y);
            }
        }
        for y in region {
            if let Some(&ty) = self.vertex_type.get(&y) {
                if kept.contains(&ty) {
                    self.recompute_position(ty, y);
                }
            }
        }
        self.tabled = tabled_now;
        self.refresh_prefix();
    }

    /// Rebuild the relevance set and skip entries of one list position.
    fn recompute_position(&mut self, ty: TypeId, y: VertexId) {
        // Chase: rel starts from the conflicts of y; each round, a known
        // potential blocker v pins the scan at its list neighbors z, from
        // where the scan steps to succ(z) and can pick up any of succ(z)'s
        // conflicts as the next blocker.
        let mut rel: BTreeSet<VertexId> = self.adj[&y].iter().copied().collect();
        let list = &self.lists[&ty];
        for _ in 0..self.c {
            let mut grown = rel.clone();
            for &v in &rel {
                ops::tick();
                if let Some(nbrs) = self.adj.get(&v) {
                    for &z in nbrs {
                        if self.vertex_type.get(&z) != Some(&ty) {
                            continue;
                        }
                        if let Some(Some(next)) = list.succ.get(&z) {
                            if let Some(next_nbrs) = self.adj.get(next) {
                                grown.extend(next_nbrs.iter().copied());
                            }
                        }
                    }
                }
            }
            if grown.len() == rel.len() {
                break;
            }
            rel = grown;
        }
        let rel_vec: Vec<VertexId> = rel.iter().copied().collect();

        // Table: every subset of rel of size < c containing a blocker of y.
        let blockers: Vec<VertexId> = rel_vec
            .iter()
            .copied()
            .filter(|&s| self.conflicting(s, y))
            .collect();
        let mut entries: HashMap<Box<[VertexId]>, Option<VertexId>> = HashMap::new();
        let max_extra = self.c - 1;
        // Enumerate subsets as (nonempty blocker subset) x (subset of the
        // rest), keeping total size <= c-1 and deduplicating via the map.
        let rest: Vec<VertexId> = rel_vec.clone();
        let mut subset: Vec<VertexId> = Vec::new();
        fn subsets(
            pool: &[VertexId],
            start: usize,
            max_len: usize,
            subset: &mut Vec<VertexId>,
            out: &mut Vec<Vec<VertexId>>,
        ) {
            out.push(subset.clone());
            if subset.len() == max_len {
                return;
            }
            for i in start..pool.len() {
                subset.push(pool[i]);
                subsets(pool, i + 1, max_len, subset, out);
                subset.pop();
            }
        }
        let mut all: Vec<Vec<VertexId>> = Vec::new();
        subsets(&rest, 0, max_extra, &mut subset, &mut all);
        for set in all {
            if set.is_empty() || !set.iter().any(|s| blockers.contains(s)) {
                continue;
            }
            ops::tick();
            let landing = self.scan(ty, Some(y), &set);
            entries.insert(set.into_boxed_slice(), landing);
        }
        self.rel.insert((ty, y), rel_vec);
        self.table.insert((ty, y), entries);
    }

    /// Plain walk: first position from `from` (inclusive) not conflicting
    /// with any member of `blockers`.
    fn scan(&self, ty: TypeId, from: Option<VertexId>, blockers: &[VertexId]) -> Option<VertexId> {
        let list = &self.lists[&ty];
        let mut at = from;
        while let Some(y) = at {
            ops::tick();
            if !blockers.iter().any(|&s| self.conflicting(s, y)) {
                return Some(y);
            }
            at = list.succ[&y];
        }
        None
    }

    /// Skip query: like [`EnumState::scan`] but via the precomputed tables,
    /// in time O(c log) independent of the scan length. Lists below the
    /// small-colour threshold carry no tables and answer by scanning — the
    /// threshold bounds that walk, and enumeration never asks them anyway.
    pub fn skip_query(
        &self,
        ty: TypeId,
        from: Option<VertexId>,
        chosen: &[VertexId],
    ) -> Option<VertexId> {
        let y = from?;
        ops::tick();
        if !self.tabled.contains(&ty) {
            return self.scan(ty, Some(y), chosen);
        }
        let rel = &self.rel[&(ty, y)];
        let mut relevant: Vec<VertexId> = chosen
            .iter()
            .copied()
            .filter(|s| rel.binary_search(s).is_ok())
            .collect();
        relevant.sort_unstable();
        relevant.dedup();
        if !relevant.iter().any(|&s| self.conflicting(s, y)) {
            return Some(y);
        }
        *self.table[&(ty, y)]
            .get(relevant.as_slice() as &[VertexId])
            .expect("skip table missing a reachable query")
    }

    /// Recompute the small-colour prefix: order, membership threshold, and
    /// the conflict-free partial assignments over the small colours.
    fn refresh_prefix(&mut self) {
        let threshold = self.c * self.delta_ever;
        let mut small: Vec<usize> = Vec::new();
        let mut big: Vec<usize> = Vec::new();
        for i in 0..self.c {
            if self.colour_len(i) <= threshold {
                small.push(i);
            } else {
                big.push(i);
            }
        }
        self.prefix_len = small.len();
        self.order = small;
        self.order.extend(big);

        // All conflict-free assignments over the small colours, in list
        // order. Bounded by threshold^prefix_len.
        let mut out: Vec<Vec<VertexId>> = Vec::new();
        let order = self.order.clone();
        let prefix_len = self.prefix_len;
        let mut chosen: Vec<VertexId> = Vec::new();
        self.prefix_walk(&order, prefix_len, &mut chosen, &mut out);
        self.prefix_assignments = out;
    }

    fn prefix_walk(
        &self,
        order: &[usize],
        prefix_len: usize,
        chosen: &mut Vec<VertexId>,
        out: &mut Vec<Vec<VertexId>>,
    ) {
        if chosen.len() == prefix_len {
            out.push(chosen.clone());
            return;
        }
        let colour = order[chosen.len()];
        for v in self.lists[&self.colours[colour]].iter() {
            ops::tick();
            if chosen.iter().all(|&u| !self.conflicting(u, v)) {
                chosen.push(v);
                self.prefix_walk(order, prefix_len, chosen, out);
                chosen.pop();
            }
        }
    }

    // ------------------------------------------------------------------
    // Enumeration
    // ------------------------------------------------------------------

    /// Emit every conflict-free assignment, one `Vec` per answer indexed by
    /// signature colour, via the skip structure: small-prefix assignments
    /// come from the precomputed set, and each further colour advances by
    /// skip queries only, so the work between emissions is bounded by the
    /// degree-and-width constants, never by the view size.
    pub fn enumerate_fast(
        &self,
        f: &mut dyn FnMut(&[VertexId]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let prefixes = &self.prefix_assignments;
        for prefix in prefixes {
            let mut chosen: Vec<VertexId> = prefix.clone();
            self.descend(&mut chosen, f)?;
        }
        ControlFlow::Continue(())
    }

    fn descend(
        &self,
        chosen: &mut Vec<VertexId>,
        f: &mut dyn FnMut(&[VertexId]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if chosen.len() == self.c {
            let mut by_colour = vec![0; self.c];
            for (slot, &colour) in self.order.iter().enumerate() {
                by_colour[colour] = chosen[slot];
            }
            return f(&by_colour);
        }
        let colour = self.order[chosen.len()];
        let ty = self.colours[colour];
        let mut at = self.skip_query(ty, self.lists[&ty].first, chosen);
        while let Some(v) = at {
            ops::tick();
            chosen.push(v);
            self.descend(chosen, f)?;
            chosen.pop();
            at = self.skip_query(ty, self.lists[&ty].succ[&v], chosen);
        }
        ControlFlow::Continue(())
    }

    /// Reference enumerator: same order, no skip structure — every list
    /// position is visited and checked against the partial assignment.
    pub fn enumerate_naive(
        &self,
        f: &mut dyn FnMut(&[VertexId]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let mut chosen: Vec<VertexId> = Vec::new();
        self.naive_descend(&mut chosen, f)
    }

    fn naive_descend(
        &self,
        chosen: &mut Vec<VertexId>,
        f: &mut dyn FnMut(&[VertexId]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if chosen.len() == self.c {
            return f(chosen);
        }
        let colour = chosen.len();
        for v in self.lists[&self.colours[colour]].iter() {
            ops::tick();
            if chosen.iter().all(|&u| !self.conflicting(u, v)) {
                chosen.push(v);
                self.naive_descend(chosen, f)?;
                chosen.pop();
            }
        }
        ControlFlow::Continue(())
    }

    /// Collect all answers (colour-indexed) — test support.
    pub fn collect_fast(&self) -> Vec<Vec<VertexId>> {
        let mut out = Vec::new();
        let _ = self.enumerate_fast(&mut |a| {
            out.push(a.to_vec());
            ControlFlow::Continue(())
        });
        out
    }

    pub fn collect_naive(&self) -> Vec<Vec<VertexId>> {
        let mut out = Vec::new();
        let _ = self.enumerate_naive(&mut |a| {
            out.push(a.to_vec());
            ControlFlow::Continue(())
        });
        out
    }

    /// Check every skip query against a plain scan, for every list position
    /// and every subset of view vertices up to size c-1. Exponential in the
    /// view size. Returns the number of queries the tables answered (the
    /// rest fell back to scans on untracked lists), or an error description
    /// on the first mismatch.
    pub fn verify_skips_exhaustive(&self, max_view: usize) -> Result<usize, String> {
        let mut all: Vec<VertexId> = self.vertex_type.keys().copied().collect();
        all.sort_unstable();
        if all.len() > max_view {
            return Err(format!(
                "view too large for exhaustive skip check: {} > {max_view}",
                all.len()
            ));
        }
        let mut subsets: Vec<Vec<VertexId>> = vec![vec![]];
        for &v in &all {
            let mut extended: Vec<Vec<VertexId>> = Vec::new();
            for s in &subsets {
                if s.len() < self.c - 1 {
                    let mut t = s.clone();
                    t.push(v);
                    extended.push(t);
                }
            }
            subsets.extend(extended);
        }
        let mut table_hits = 0usize;
        for (&ty, list) in &self.lists {
            let tracked = self.tabled.contains(&ty);
            for y in list.iter() {
                for s in &subsets {
                    let fast = self.skip_query(ty, Some(y), s);
                    let slow = self.scan(ty, Some(y), s);
                    if fast != slow {
                        return Err(format!(
                            "skip mismatch at list {ty}, position {y}, blockers {s:?}: \
                             table says {fast:?}, scan says {slow:?}"
                        ));
                    }
                    if tracked {
                        table_hits += 1;
                    }
                }
            }
        }
        Ok(table_hits)
    }

    /// The relevance set of one position — test support.
    pub fn rel_of(&self, ty: TypeId, y: VertexId) -> Option<&[VertexId]> {
        self.rel.get(&(ty, y)).map(|v| v.as_slice())
    }
}

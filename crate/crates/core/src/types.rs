//! Neighborhood types, canonical forms, and signatures.
//!
//! A neighborhood type is a finite structure together with a tuple of centre
//! elements and a radius; its element set must be exactly the ball of that
//! radius around the centres. Types are interned: structurally isomorphic
//! types (centres matched pointwise) receive the same small integer id, via
//! a canonical byte encoding.
//!
//! A [`Signature`] decomposes a type into its Gaifman-connected components:
//! the component count, and per component its interned type id, arity, and
//! the set of centre positions it carries. Two tuples have isomorphic
//! neighborhoods exactly when their signatures coincide, which is what makes
//! constant-time membership testing possible.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use itertools::Itertools;
use thiserror::Error;

use crate::db::{Constant, Database, NeighborhoodDb, RelId, Schema, Tuple};
use crate::logic::{HnfQuery, HnfTree};
use crate::ops;

/// Interned id of a canonical neighborhood type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeId(pub u32);

impl fmt::Display for TypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TypeError {
    #[error("type degree {got} exceeds the configured bound {bound}")]
    DegreeExceeded { got: usize, bound: usize },
    #[error("centres must be elements of the structure")]
    CentreOutsideStructure,
    #[error("element set is not the exact radius-{radius} neighborhood of the centres")]
    Inexact { radius: usize },
    #[error("neighborhood component carries no centre")]
    ComponentWithoutCentre,
    #[error("at most 63 centre positions are supported")]
    TooManyPositions,
    #[error("type enumeration exceeded the candidate cap of {cap}")]
    CapExceeded { cap: u64 },
}

/// A structure with designated centres and a radius.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NeighborhoodType {
    pub structure: NeighborhoodDb,
    pub centres: Tuple,
    pub radius: usize,
}

impl NeighborhoodType {
    /// Do the elements form exactly the radius ball around the centres?
    pub fn is_exact(&self) -> bool {
        self.centres.iter().all(|c| self.structure.elements.contains(c))
            && self.structure.is_exact_neighborhood(&self.centres, self.radius)
    }
}

/// The radius-`r` type of `tuple` in `db`: its induced neighborhood with the
/// tuple as centres.
pub fn type_of(db: &Database, tuple: &[Constant], r: usize) -> NeighborhoodType {
    NeighborhoodType {
        structure: db.induced_neighborhood(tuple, r),
        centres: tuple.to_vec(),
        radius: r,
    }
}

/// One Gaifman-connected block of a decomposed type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SigComponent {
    /// Number of centre positions living in this component.
    pub arity: usize,
    /// Interned id of the component's type.
    pub type_id: TypeId,
    /// Bitmask of the centre positions (bit p = position p).
    pub positions: u64,
}

impl SigComponent {
    pub fn position_list(&self) -> Vec<usize> {
        (0..64).filter(|p| self.positions >> p & 1 == 1).collect()
    }
}

/// Signature of a type: its connected components in order of smallest centre
/// position. Equal signatures mean isomorphic types.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature {
    pub components: Vec<SigComponent>,
}

impl Signature {
    pub fn c(&self) -> usize {
        self.components.len()
    }

    /// Stable text encoding, used as a map key and in state dumps.
    pub fn encode(&self) -> String {
        let parts: Vec<String> = self
            .components
            .iter()
            .map(|c| format!("{}@{:x}", c.type_id, c.positions))
            .collect();
        parts.join("|")
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.encode())
    }
}

/// One interned type with its canonical encoding and metadata.
#[derive(Debug, Clone)]
pub struct InternedType {
    pub bytes: Vec<u8>,
    /// Canonically relabeled representative (elements 1..=n, centres first).
    pub repr: NeighborhoodType,
    pub radius: usize,
    pub arity: usize,
    pub connected: bool,
}

/// The intern table. All canonicalization goes through here, so equal ids
/// really do mean isomorphic types (and unequal ids mean non-isomorphic,
/// per-radius).
#[derive(Debug, Clone)]
pub struct TypeInterner {
    schema: Schema,
    degree_bound: usize,
    by_bytes: HashMap<Vec<u8>, TypeId>,
    entries: Vec<InternedType>,
}

impl TypeInterner {
    pub fn new(schema: Schema, degree_bound: usize) -> TypeInterner {
        TypeInterner {
            schema,
            degree_bound,
            by_bytes: HashMap::new(),
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn info(&self, id: TypeId) -> &InternedType {
        &self.entries[id.0 as usize]
    }

    /// Canonicalize and intern, returning the stable id.
    pub fn intern(&mut self, ty: &NeighborhoodType) -> Result<TypeId, TypeError> {
        if !ty.centres.iter().all(|c| ty.structure.elements.contains(c)) {
            return Err(TypeError::CentreOutsideStructure);
        }
        if !ty.structure.is_exact_neighborhood(&ty.centres, ty.radius) {
            return Err(TypeError::Inexact { radius: ty.radius });
        }
        let got = ty.structure.max_degree();
        if got > self.degree_bound {
            return Err(TypeError::DegreeExceeded {
                got,
                bound: self.degree_bound,
            });
        }
        let (bytes, repr) = canonical_form(ty, &self.schema);
        if let Some(&id) = self.by_bytes.get(&bytes) {
            return Ok(id);
        }
        let id = TypeId(self.entries.len() as u32);
        let connected = repr.structure.components().len() <= 1;
        self.entries.push(InternedType {
            bytes: bytes.clone(),
            repr: repr.clone(),
            radius: ty.radius,
            arity: ty.centres.len(),
            connected,
        });
        self.by_bytes.insert(bytes, id);
        Ok(id)
    }

    /// Ids of connected types at `radius` with the given centre count;
    /// candidates for signature components.
    pub fn component_ids(&self, radius: usize, arity: usize) -> Vec<TypeId> {
        (0..self.entries.len())
            .map(|i| TypeId(i as u32))
            .filter(|id| {
                let e = self.info(*id);
                e.connected && e.radius == radius && e.arity == arity
            })
            .collect()
    }
}

/// Canonical byte encoding plus the canonically relabeled representative.
///
/// Elements are relabeled: distinct centres first in order of first
/// occurrence, then the non-centres in the ordering (among those compatible
/// with an isomorphism-invariant refinement partition) whose serialization
/// is lexicographically least. Equal encodings hold exactly for types with a
/// centre-fixing isomorphism.
pub fn canonical_form(ty: &NeighborhoodType, schema: &Schema) -> (Vec<u8>, NeighborhoodType) {
    let mut distinct_centres: Vec<Constant> = Vec::new();
    for &c in &ty.centres {
        if !distinct_centres.contains(&c) {
            distinct_centres.push(c);
        }
    }
    let non_centres: Vec<Constant> = ty
        .structure
        .elements
        .iter()
        .copied()
        .filter(|e| !distinct_centres.contains(e))
        .collect();

    let classes = refinement_classes(ty, &distinct_centres, &non_centres);

    let mut best: Option<(Vec<u8>, Vec<Constant>)> = None;
    let per_class_perms: Vec<Vec<Vec<Constant>>> = classes
        .iter()
        .map(|class| {
            class
                .iter()
                .copied()
                .permutations(class.len())
                .collect::<Vec<_>>()
        })
        .collect();
    let choices = per_class_perms
        .iter()
        .map(|perms| perms.iter())
        .multi_cartesian_product();
    let mut tried = false;
    for choice in choices {
        tried = true;
        ops::tick();
        let ordering: Vec<Constant> = choice.into_iter().flatten().copied().collect();
        let bytes = serialize(ty, schema, &distinct_centres, &ordering);
        if best.as_ref().is_none_or(|(b, _)| bytes < *b) {
            best = Some((bytes, ordering));
        }
    }
    if !tried {
        // No non-centre elements at all.
        let bytes = serialize(ty, schema, &distinct_centres, &[]);
        best = Some((bytes, vec![]));
    }
    let (bytes, ordering) = best.unwrap();

    // Build the relabeled representative from the winning ordering.
    let mut label: HashMap<Constant, Constant> = HashMap::new();
    for (i, &c) in distinct_centres.iter().enumerate() {
        label.insert(c, (i + 1) as Constant);
    }
    for (i, &e) in ordering.iter().enumerate() {
        label.insert(e, (distinct_centres.len() + i + 1) as Constant);
    }
    let elements: BTreeSet<Constant> = label.values().copied().collect();
    let tuples: BTreeSet<(RelId, Tuple)> = ty
        .structure
        .tuples
        .iter()
        .map(|(rel, t)| (*rel, t.iter().map(|c| label[c]).collect()))
        .collect();
    let repr = NeighborhoodType {
        structure: NeighborhoodDb::new(elements, tuples),
        centres: ty.centres.iter().map(|c| label[c]).collect(),
        radius: ty.radius,
    };
    (bytes, repr)
}

/// Partition the non-centres into groups no centre-fixing isomorphism can
/// tell apart, by iterated refinement of deterministic invariant keys:
/// distances to each centre, degree, incidence shape, then neighbor colors.
/// Only orderings within groups need to be tried for the canonical form.
fn refinement_classes(
    ty: &NeighborhoodType,
    distinct_centres: &[Constant],
    non_centres: &[Constant],
) -> Vec<Vec<Constant>> {
    let adj = ty.structure.adjacency();
    let all: Vec<Constant> = ty.structure.elements.iter().copied().collect();

    // Distances to every centre, capped at radius + 1 ("unreachable").
    let cap = ty.radius + 1;
    let mut dists: HashMap<Constant, Vec<usize>> = all.iter().map(|&e| (e, vec![])).collect();
    for &c in distinct_centres {
        let mut dist: HashMap<Constant, usize> = HashMap::from([(c, 0)]);
        let mut frontier = vec![c];
        for step in 1..=ty.radius {
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in adj.get(&u).map(|s| s.iter().collect::<Vec<_>>()).unwrap_or_default() {
                    if !dist.contains_key(&v) {
                        dist.insert(v, step);
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        for &e in &all {
            dists.get_mut(&e).unwrap().push(*dist.get(&e).unwrap_or(&cap));
        }
    }

    // Initial keys; centre elements get their centre index as a distinguishing
    // component so refinement can propagate centre-relative structure.
    type Key = (Option<usize>, Vec<usize>, usize, Vec<(usize, Vec<usize>)>);
    let mut key_of: HashMap<Constant, Key> = HashMap::new();
    for &e in &all {
        let centre_idx = distinct_centres.iter().position(|&c| c == e);
        let mut profile: Vec<(usize, Vec<usize>)> = Vec::new();
        for (rel, t) in &ty.structure.tuples {
            let positions: Vec<usize> = t
                .iter()
                .enumerate()
                .filter(|(_, &c)| c == e)
                .map(|(i, _)| i)
                .collect();
            if !positions.is_empty() {
                profile.push((rel.0, positions));
            }
        }
        profile.sort();
        key_of.insert(e, (centre_idx, dists[&e].clone(), adj[&e].len(), profile));
    }
    let mut rank: HashMap<Constant, usize> = rank_by_key(&all, |e| key_of[e].clone());

    // Refine by neighbor rank multisets until the partition stabilizes.
    loop {
        let next = rank_by_key(&all, |e| {
            let mut nbr: Vec<usize> = adj[e].iter().map(|v| rank[v]).collect();
            nbr.sort_unstable();
            (rank[e], nbr)
        });
        let stable = all.iter().all(|e| {
            all.iter()
                .all(|f| (rank[e] == rank[f]) == (next[e] == next[f]))
        });
        rank = next;
        if stable {
            break;
        }
    }

    let mut groups: BTreeMap<usize, Vec<Constant>> = BTreeMap::new();
    for &e in non_centres {
        groups.entry(rank[&e]).or_default().push(e);
    }
    groups.into_values().collect()
}

fn rank_by_key<K: Ord + Clone>(
    all: &[Constant],
    key: impl Fn(&Constant) -> K,
) -> HashMap<Constant, usize> {
    let mut keys: Vec<K> = all.iter().map(&key).collect();
    keys.sort();
    keys.dedup();
    all.iter()
        .map(|e| (*e, keys.binary_search(&key(e)).unwrap()))
        .collect()
}

fn push_u32(bytes: &mut Vec<u8>, v: u32) {
    bytes.extend_from_slice(&v.to_le_bytes());
}

/// Serialize under the labeling induced by `ordering` of the non-centres.
fn serialize(
    ty: &NeighborhoodType,
    schema: &Schema,
    distinct_centres: &[Constant],
    ordering: &[Constant],
) -> Vec<u8> {
    let mut label: HashMap<Constant, u32> = HashMap::new();
    for (i, &c) in distinct_centres.iter().enumerate() {
        label.insert(c, i as u32);
    }
    for (i, &e) in ordering.iter().enumerate() {
        label.insert(e, (distinct_centres.len() + i) as u32);
    }
    let mut bytes = Vec::new();
    push_u32(&mut bytes, ty.radius as u32);
    push_u32(&mut bytes, ty.centres.len() as u32);
    for c in &ty.centres {
        push_u32(&mut bytes, label[c]);
    }
    push_u32(&mut bytes, ty.structure.elements.len() as u32);
    for (rel, _, _) in schema.iter() {
        let mut tuples: Vec<Vec<u32>> = ty
            .structure
            .tuples
            .iter()
            .filter(|(r, _)| *r == rel)
            .map(|(_, t)| t.iter().map(|c| label[c]).collect())
            .collect();
        tuples.sort();
        push_u32(&mut bytes, tuples.len() as u32);
        for t in tuples {
            for v in t {
                push_u32(&mut bytes, v);
            }
        }
    }
    bytes
}

/// Decompose a type into its signature, interning each component.
pub fn decompose(ty: &NeighborhoodType, interner: &mut TypeInterner) -> Result<Signature, TypeError> {
    if ty.centres.len() > 63 {
        return Err(TypeError::TooManyPositions);
    }
    let comps = ty.structure.components();
    // Blocks ordered by smallest centre position.
    let mut blocks: Vec<(usize, SigComponent)> = Vec::new();
    for comp in &comps {
        let positions: Vec<usize> = ty
            .centres
            .iter()
            .enumerate()
            .filter(|(_, c)| comp.contains(c))
            .map(|(i, _)| i)
            .collect();
        if positions.is_empty() {
            return Err(TypeError::ComponentWithoutCentre);
        }
        let sub_centres: Tuple = positions.iter().map(|&p| ty.centres[p]).collect();
        let sub = NeighborhoodType {
            structure: ty.structure.restrict(comp),
            centres: sub_centres,
            radius: ty.radius,
        };
        let id = interner.intern(&sub)?;
        let mask = positions.iter().fold(0u64, |m, &p| m | 1 << p);
        blocks.push((
            positions[0],
            SigComponent {
                arity: positions.len(),
                type_id: id,
                positions: mask,
            },
        ));
    }
    blocks.sort();
    Ok(Signature {
        components: blocks.into_iter().map(|(_, c)| c).collect(),
    })
}

/// Signature of a tuple's radius-`r` neighborhood in `db`.
pub fn signature_of_tuple(
    db: &Database,
    tuple: &[Constant],
    r: usize,
    interner: &mut TypeInterner,
) -> Result<Signature, TypeError> {
    decompose(&type_of(db, tuple, r), interner)
}

/// Rebuild a full type from a signature: the disjoint union of the component
/// representatives, centres placed back at their positions. Signatures carry
/// exactly this much information because components of a neighborhood sit at
/// infinite distance from each other within it.
pub fn assemble_type(sgn: &Signature, interner: &TypeInterner) -> NeighborhoodType {
    let k: usize = sgn.components.iter().map(|c| c.arity).sum();
    let radius = sgn
        .components
        .first()
        .map(|c| interner.info(c.type_id).radius)
        .unwrap_or(0);
    let mut elements = BTreeSet::new();
    let mut tuples = BTreeSet::new();
    let mut centres: Tuple = vec![0; k];
    let mut offset: Constant = 0;
    for comp in &sgn.components {
        let repr = &interner.info(comp.type_id).repr;
        debug_assert_eq!(interner.info(comp.type_id).radius, radius);
        let max = repr.structure.elements.iter().max().copied().unwrap_or(0);
        for &e in &repr.structure.elements {
            elements.insert(e + offset);
        }
        for (rel, t) in &repr.structure.tuples {
            tuples.insert((*rel, t.iter().map(|c| c + offset).collect::<Tuple>()));
        }
        for (i, &p) in comp.position_list().iter().enumerate() {
            centres[p] = repr.centres[i] + offset;
        }
        offset += max;
    }
    NeighborhoodType {
        structure: NeighborhoodDb::new(elements, tuples),
        centres,
        radius,
    }
}

/// Evaluate the query's Boolean structure on a full type: sphere atoms by
/// restricting the type to the atom's radius around the selected centres and
/// comparing canonical ids, Hanf sentences by the truth bits in `j_mask`.
/// `atom_ids[i]` must be the interned id of atom i's type.
pub fn hnf_accepts(
    query: &HnfQuery,
    atom_ids: &[TypeId],
    j_mask: u64,
    ty: &NeighborhoodType,
    interner: &mut TypeInterner,
) -> Result<bool, TypeError> {
    fn eval(
        tree: &HnfTree,
        query: &HnfQuery,
        atom_ids: &[TypeId],
        j_mask: u64,
        ty: &NeighborhoodType,
        interner: &mut TypeInterner,
    ) -> Result<bool, TypeError> {
        Ok(match tree {
            HnfTree::Const(b) => *b,
            HnfTree::Sentence(j) => j_mask >> *j & 1 == 1,
            HnfTree::Not(t) => !eval(t, query, atom_ids, j_mask, ty, interner)?,
            HnfTree::And(ts) => {
                for t in ts {
                    if !eval(t, query, atom_ids, j_mask, ty, interner)? {
                        return Ok(false);
                    }
                }
                true
            }
            HnfTree::Or(ts) => {
                for t in ts {
                    if eval(t, query, atom_ids, j_mask, ty, interner)? {
                        return Ok(true);
                    }
                }
                false
            }
            HnfTree::Atom(i) => {
                ops::tick();
                let atom = &query.atoms[i.to_owned()];
                let sub_centres: Tuple =
                    atom.positions.iter().map(|&p| ty.centres[p]).collect();
                let ball = ty.structure.ball_within(&sub_centres, atom.ty.radius);
                let restricted = NeighborhoodType {
                    structure: ty.structure.restrict(&ball),
                    centres: sub_centres,
                    radius: atom.ty.radius,
                };
                interner.intern(&restricted)? == atom_ids[*i]
            }
        })
    }
    eval(&query.tree, query, atom_ids, j_mask, ty, interner)
}

/// All position partitions of `0..k` paired with component-type choices from
/// the intern table: every signature a k-tuple could have, given the types
/// seen so far.
pub fn candidate_signatures(k: usize, r: usize, interner: &TypeInterner) -> Vec<Signature> {
    let mut ids_by_arity: Vec<Vec<TypeId>> = Vec::new();
    for arity in 0..=k {
        ids_by_arity.push(if arity == 0 {
            vec![]
        } else {
            interner.component_ids(r, arity)
        });
    }
    signatures_over(k, &ids_by_arity)
}

/// All position partitions of `0..k` paired with component-type choices from
/// `ids_by_arity` (indexed by block size): every signature a k-tuple could
/// have over exactly those component types.
pub fn signatures_over(k: usize, ids_by_arity: &[Vec<TypeId>]) -> Vec<Signature> {
    let mut out = Vec::new();
    for partition in ordered_partitions(k) {
        let choices: Vec<&Vec<TypeId>> = partition
            .iter()
            .map(|block| &ids_by_arity[block.len()])
            .collect();
        if choices.iter().any(|c| c.is_empty()) {
            continue;
        }
        for pick in choices.iter().map(|c| c.iter()).multi_cartesian_product() {
            ops::tick();
            let components = partition
                .iter()
                .zip(pick.iter())
                .map(|(block, id)| SigComponent {
                    arity: block.len(),
                    type_id: **id,
                    positions: block.iter().fold(0u64, |m, &p| m | 1 << p),
                })
                .collect();
            out.push(Signature { components });
        }
    }
    out
}

/// Set partitions of `0..k`, blocks sorted by smallest member, blocks listed
/// in that order.
pub fn ordered_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(k: usize, next: usize, current: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if next == k {
            let mut sorted = current.clone();
            sorted.sort_by_key(|b| b[0]);
            out.push(sorted);
            return;
        }
        for i in 0..current.len() {
            current[i].push(next);
            go(k, next + 1, current, out);
            current[i].pop();
        }
        current.push(vec![next]);
        go(k, next + 1, current, out);
        current.pop();
    }
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    go(k, 0, &mut Vec::new(), &mut out);
    out
}

/// Exhaustively generate every degree-bounded radius-`r` type with `k`
/// centres over `schema`, up to isomorphism. The candidate space explodes
/// quickly, so generation stops with an error once `cap` raw candidates have
/// been examined. Test support only; the engine itself realizes types lazily
/// from data.
pub fn enumerate_all_types(
    schema: &Schema,
    degree_bound: usize,
    r: usize,
    k: usize,
    cap: u64,
) -> Result<(Vec<TypeId>, TypeInterner), TypeError> {
    let mut interner = TypeInterner::new(schema.clone(), degree_bound);
    let mut ids = BTreeSet::new();
    let max_n = (k as u128 * crate::db::geometric_degree_sum(degree_bound, r))
        .min(24) as usize;
    let mut examined: u64 = 0;
    for n in 1..=max_n {
        let elements: Vec<Constant> = (1..=n as Constant).collect();
        // Universe of possible tuples over the elements.
        let mut universe: Vec<(RelId, Tuple)> = Vec::new();
        for (rel, _, arity) in schema.iter() {
            let mut stack: Vec<Tuple> = vec![vec![]];
            for _ in 0..arity {
                stack = stack
                    .into_iter()
                    .flat_map(|t| {
                        elements.iter().map(move |&e| {
                            let mut t2 = t.clone();
                            t2.push(e);
                            t2
                        })
                    })
                    .collect();
            }
            universe.extend(stack.into_iter().map(|t| (rel, t)));
        }
        if universe.len() > 63 {
            return Err(TypeError::CapExceeded { cap });
        }
        let subset_count: u64 = 1u64 << universe.len();
        let centre_count = (n as u64).checked_pow(k as u32).unwrap_or(u64::MAX);
        for subset in 0..subset_count {
            let tuples: BTreeSet<(RelId, Tuple)> = universe
                .iter()
                .enumerate()
                .filter(|(i, _)| subset >> i & 1 == 1)
                .map(|(_, t)| t.clone())
                .collect();
            let structure = NeighborhoodDb::new(elements.iter().copied().collect(), tuples);
            if structure.max_degree() > degree_bound {
                examined = examined.saturating_add(centre_count);
                if examined > cap {
                    return Err(TypeError::CapExceeded { cap });
                }
                continue;
            }
            let mut centre_stack: Vec<Tuple> = vec![vec![]];
            for _ in 0..k {
                centre_stack = centre_stack
                    .into_iter()
                    .flat_map(|t| {
                        elements.iter().map(move |&e| {
                            let mut t2 = t.clone();
                            t2.push(e);
                            t2
                        })
                    })
                    .collect();
            }
            for centres in centre_stack {
                examined += 1;
                if examined > cap {
                    return Err(TypeError::CapExceeded { cap });
                }
                if !structure.is_exact_neighborhood(&centres, r) {
                    continue;
                }
                let ty = NeighborhoodType {
                    structure: structure.clone(),
                    centres,
                    radius: r,
                };
                ids.insert(interner.intern(&ty)?);
            }
        }
    }
    Ok((ids.into_iter().collect(), interner))
}

/// Filter a list of full types by the query predicate under `j_mask`.
pub fn index_set(
    query: &HnfQuery,
    atom_ids: &[TypeId],
    j_mask: u64,
    type_ids: &[TypeId],
    interner: &mut TypeInterner,
) -> Result<Vec<TypeId>, TypeError> {
    let mut out = Vec::new();
    for &id in type_ids {
        let ty = interner.info(id).repr.clone();
        if hnf_accepts(query, atom_ids, j_mask, &ty, interner)? {
            out.push(id);
        }
    }
    Ok(out)
}

//! Query abstract syntax and the brute-force evaluation oracle.
//!
//! Two query shapes exist side by side. [`FoQuery`] is full first-order
//! logic with modulo-counting quantifiers, evaluated only by the oracle.
//! [`HnfQuery`] is the normal form the incremental engine accepts: a Boolean
//! combination of sphere atoms (the neighborhood of selected free variables
//! is isomorphic to a fixed type) and Hanf sentences (the number of elements
//! realizing a one-centre type reaches a threshold or residue class).
//! Quantifiers range over the active domain.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::db::{isomorphic, Constant, Database, Tuple};
use crate::ops;
use crate::types::NeighborhoodType;

/// Variables are indices; a query with `k` free variables uses `0..k` for
/// them and larger indices for bound variables.
pub type Var = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("oracle evaluation would need about {estimate} assignments (limit {limit})")]
    TooLarge { estimate: u128, limit: u128 },
}

/// Budget on the number of assignments the oracle may enumerate.
pub const ORACLE_LIMIT: u128 = 100_000_000;

/// First-order logic with counting quantifiers, oracle-only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FoFormula {
    Const(bool),
    /// R(x1,...,xn) by schema relation index.
    Rel(crate::db::RelId, Vec<Var>),
    Eq(Var, Var),
    Not(Box<FoFormula>),
    And(Vec<FoFormula>),
    Or(Vec<FoFormula>),
    /// At least `m` active-domain witnesses (m >= 1); plain `exists` is the
    /// m = 1 case.
    AtLeast(u64, Var, Box<FoFormula>),
    /// The number of active-domain witnesses is congruent to `residue`
    /// modulo `modulus` (modulus >= 2, 0 <= residue < modulus).
    Mod {
        residue: u64,
        modulus: u64,
        var: Var,
        body: Box<FoFormula>,
    },
}

impl FoFormula {
    pub fn quantifier_rank(&self) -> usize {
        match self {
            FoFormula::Const(_) | FoFormula::Rel(..) | FoFormula::Eq(..) => 0,
            FoFormula::Not(f) => f.quantifier_rank(),
            FoFormula::And(fs) | FoFormula::Or(fs) => {
                fs.iter().map(|f| f.quantifier_rank()).max().unwrap_or(0)
            }
            FoFormula::AtLeast(_, _, f) => 1 + f.quantifier_rank(),
            FoFormula::Mod { body, .. } => 1 + body.quantifier_rank(),
        }
    }

    /// Largest variable index mentioned, if any.
    pub fn max_var(&self) -> Option<Var> {
        match self {
            FoFormula::Const(_) => None,
            FoFormula::Rel(_, vs) => vs.iter().copied().max(),
            FoFormula::Eq(a, b) => Some(*a.max(b)),
            FoFormula::Not(f) => f.max_var(),
            FoFormula::And(fs) | FoFormula::Or(fs) => fs.iter().filter_map(|f| f.max_var()).max(),
            FoFormula::AtLeast(_, v, f) => Some(*v).max(f.max_var()),
            FoFormula::Mod { var, body, .. } => Some(*var).max(body.max_var()),
        }
    }
}

/// An FO+MOD query: formula plus the number of free variables `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoQuery {
    pub k: usize,
    pub formula: FoFormula,
}

/// Evaluate `formula` under `env` (which must bind every variable the
/// formula mentions) over the active domain of `db`.
pub fn eval_fo(db: &Database, formula: &FoFormula, env: &mut Vec<Constant>) -> bool {
    match formula {
        FoFormula::Const(b) => *b,
        FoFormula::Rel(rel, vars) => {
            ops::tick();
            let tuple: Tuple = vars.iter().map(|&v| env[v]).collect();
            db.contains(*rel, &tuple)
        }
        FoFormula::Eq(a, b) => env[*a] == env[*b],
        FoFormula::Not(f) => !eval_fo(db, f, env),
        FoFormula::And(fs) => fs.iter().all(|f| eval_fo(db, f, env)),
        FoFormula::Or(fs) => fs.iter().any(|f| eval_fo(db, f, env)),
        FoFormula::AtLeast(m, var, body) => {
            let mut count: u64 = 0;
            for a in db.adom_sorted() {
                ops::tick();
                set_env(env, *var, a);
                if eval_fo(db, body, env) {
                    count += 1;
                    if count >= *m {
                        return true;
                    }
                }
            }
            false
        }
        FoFormula::Mod {
            residue,
            modulus,
            var,
            body,
        } => {
            let mut count: u64 = 0;
            for a in db.adom_sorted() {
                ops::tick();
                set_env(env, *var, a);
                if eval_fo(db, body, env) {
                    count += 1;
                }
            }
            count % modulus == *residue
        }
    }
}

fn set_env(env: &mut Vec<Constant>, var: Var, value: Constant) {
    if env.len() <= var {
        env.resize(var + 1, 0);
    }
    env[var] = value;
}

/// All result tuples of an FO+MOD query, by exhaustive enumeration of
/// active-domain assignments. Errors out if the assignment space is too big.
pub fn eval_fo_query(db: &Database, query: &FoQuery) -> Result<BTreeSet<Tuple>, EvalError> {
    let n = db.adom_len() as u128;
    let exponent = (query.k + query.formula.quantifier_rank()) as u32;
    let estimate = n.max(1).saturating_pow(exponent);
    if estimate > ORACLE_LIMIT {
        return Err(EvalError::TooLarge {
            estimate,
            limit: ORACLE_LIMIT,
        });
    }
    let adom = db.adom_sorted();
    let mut out = BTreeSet::new();
    let mut env: Vec<Constant> = vec![0; query.k];
    let mut assignment = vec![0usize; query.k];
    loop {
        for (i, &idx) in assignment.iter().enumerate() {
            env[i] = *adom.get(idx).unwrap_or(&0);
        }
        if query.k == 0 || !adom.is_empty() {
            let mut scratch = env.clone();
            if eval_fo(db, &query.formula, &mut scratch) {
                out.insert(env[..query.k].to_vec());
            }
        }
        if query.k == 0 || adom.is_empty() {
            break;
        }
        // Next assignment in lexicographic order.
        let mut pos = query.k;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            assignment[pos] += 1;
            if assignment[pos] < adom.len() {
                break;
            }
            assignment[pos] = 0;
        }
    }
    Ok(out)
}

/// Threshold or residue test of a Hanf sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HanfKind {
    /// At least `m` elements realize the type (m >= 1).
    AtLeast(u64),
    /// The number of realizing elements is `residue` mod `modulus`.
    Mod { residue: u64, modulus: u64 },
}

impl HanfKind {
    pub fn satisfied_by(&self, count: u64) -> bool {
        match self {
            HanfKind::AtLeast(m) => count >= *m,
            HanfKind::Mod { residue, modulus } => count % modulus == *residue,
        }
    }

    /// Truth on the empty database (count zero).
    pub fn on_empty(&self) -> bool {
        self.satisfied_by(0)
    }
}

/// A Hanf sentence: a one-centre neighborhood type with a count condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HanfSentence {
    pub kind: HanfKind,
    pub ty: NeighborhoodType,
}

/// A sphere atom: the joint neighborhood of the free variables at
/// `positions` (strictly increasing indices into the query's variables) must
/// be isomorphic to `ty`, centres matched pointwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SphereAtom {
    pub ty: NeighborhoodType,
    pub positions: Vec<usize>,
}

/// Boolean structure over indexed sphere atoms and Hanf sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HnfTree {
    Const(bool),
    Atom(usize),
    Sentence(usize),
    Not(Box<HnfTree>),
    And(Vec<HnfTree>),
    Or(Vec<HnfTree>),
}

impl HnfTree {
    /// Fold with the given leaf valuations.
    pub fn eval(&self, atom: &impl Fn(usize) -> bool, sentence: &impl Fn(usize) -> bool) -> bool {
        match self {
            HnfTree::Const(b) => *b,
            HnfTree::Atom(i) => atom(*i),
            HnfTree::Sentence(j) => sentence(*j),
            HnfTree::Not(t) => !t.eval(atom, sentence),
            HnfTree::And(ts) => ts.iter().all(|t| t.eval(atom, sentence)),
            HnfTree::Or(ts) => ts.iter().any(|t| t.eval(atom, sentence)),
        }
    }
}

/// A query in Hanf normal form with `k` free variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HnfQuery {
    pub k: usize,
    pub tree: HnfTree,
    pub atoms: Vec<SphereAtom>,
    pub sentences: Vec<HanfSentence>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("sphere atom {atom}: positions must be strictly increasing indices below {k}")]
    BadPositions { atom: usize, k: usize },
    #[error("sphere atom {atom}: type has {centres} centres but {positions} positions")]
    CentreCountMismatch {
        atom: usize,
        centres: usize,
        positions: usize,
    },
    #[error("Hanf sentence {0}: type must have exactly one centre")]
    SentenceCentres(usize),
    #[error("type is not an exact neighborhood of its centres at its radius")]
    InexactType,
    #[error("at-least threshold must be positive")]
    BadThreshold,
    #[error("modulus must be at least 2 and residue below it")]
    BadModulus,
    #[error("type degree {got} exceeds the configured bound {bound}")]
    TypeDegree { got: usize, bound: usize },
}

impl HnfQuery {
    /// Structural validation; degree bounds are checked separately when the
    /// query is attached to a database.
    pub fn validate(&self) -> Result<(), QueryError> {
        for (i, atom) in self.atoms.iter().enumerate() {
            let increasing = atom.positions.windows(2).all(|w| w[0] < w[1]);
            if atom.positions.is_empty()
                || !increasing
                || atom.positions.iter().any(|&p| p >= self.k)
            {
                return Err(QueryError::BadPositions {
                    atom: i,
                    k: self.k,
                });
            }
            if atom.ty.centres.len() != atom.positions.len() {
                return Err(QueryError::CentreCountMismatch {
                    atom: i,
                    centres: atom.ty.centres.len(),
                    positions: atom.positions.len(),
                });
            }
            if !atom.ty.is_exact() {
                return Err(QueryError::InexactType);
            }
        }
        for (j, sentence) in self.sentences.iter().enumerate() {
            if sentence.ty.centres.len() != 1 {
                return Err(QueryError::SentenceCentres(j));
            }
            if !sentence.ty.is_exact() {
                return Err(QueryError::InexactType);
            }
            match sentence.kind {
                HanfKind::AtLeast(m) if m == 0 => return Err(QueryError::BadThreshold),
                HanfKind::Mod { residue, modulus } if modulus < 2 || residue >= modulus => {
                    return Err(QueryError::BadModulus)
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Largest sphere-atom radius; the engine maintains types at this radius.
    pub fn max_sphere_radius(&self) -> usize {
        self.atoms.iter().map(|a| a.ty.radius).max().unwrap_or(0)
    }
}

/// Either query shape, as produced by the parser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryAst {
    Hnf(HnfQuery),
    Fo(FoQuery),
}

/// Number of active-domain elements realizing the sentence's type.
pub fn hanf_census(db: &Database, sentence: &HanfSentence) -> u64 {
    let mut count = 0;
    for a in db.adom_sorted() {
        ops::tick();
        let n = db.induced_neighborhood(&[a], sentence.ty.radius);
        if isomorphic(&n, &[a], &sentence.ty.structure, &sentence.ty.centres) {
            count += 1;
        }
    }
    count
}

/// Does `tuple` satisfy the query, given precomputed sentence truths?
pub fn hnf_holds_for(db: &Database, query: &HnfQuery, tuple: &[Constant], truths: &[bool]) -> bool {
    query.tree.eval(
        &|i| {
            let atom = &query.atoms[i];
            let sub: Tuple = atom.positions.iter().map(|&p| tuple[p]).collect();
            let n = db.induced_neighborhood(&sub, atom.ty.radius);
            isomorphic(&n, &sub, &atom.ty.structure, &atom.ty.centres)
        },
        &|j| truths[j],
    )
}

/// Truth of each Hanf sentence on `db`.
pub fn sentence_truths(db: &Database, query: &HnfQuery) -> Vec<bool> {
    query
        .sentences
        .iter()
        .map(|s| s.kind.satisfied_by(hanf_census(db, s)))
        .collect()
}

/// All result tuples of an HNF query by exhaustive enumeration; the ground
/// truth the incremental engine is tested against.
pub fn eval_hnf_query(db: &Database, query: &HnfQuery) -> Result<BTreeSet<Tuple>, EvalError> {
    let n = db.adom_len() as u128;
    let estimate = n.max(1).saturating_pow(query.k as u32);
    if estimate > ORACLE_LIMIT {
        return Err(EvalError::TooLarge {
            estimate,
            limit: ORACLE_LIMIT,
        });
    }
    let truths = sentence_truths(db, query);
    let adom = db.adom_sorted();
    let mut out = BTreeSet::new();
    if query.k == 0 {
        if query.tree.eval(&|_| false, &|j| truths[j]) {
            out.insert(vec![]);
        }
        return Ok(out);
    }
    if adom.is_empty() {
        return Ok(out);
    }
    let mut assignment = vec![0usize; query.k];
    loop {
        let tuple: Tuple = assignment.iter().map(|&i| adom[i]).collect();
        if hnf_holds_for(db, query, &tuple, &truths) {
            out.insert(tuple);
        }
        let mut pos = query.k;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            assignment[pos] += 1;
            if assignment[pos] < adom.len() {
                break;
            }
            assignment[pos] = 0;
        }
    }
}

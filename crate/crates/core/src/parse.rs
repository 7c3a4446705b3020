//! Text formats: schema files, type literals, query files, update streams.
//!
//! Schema — relation names with arities:
//! ```text
//! (schema (E 2) (P 1))
//! ```
//!
//! Type literal — a concrete neighborhood with distinguished centres:
//! ```text
//! (type (centres 1) (radius 1) (tuples (E 1 2)) (elems 1 2))
//! ```
//! `elems` may be omitted when every element appears in a tuple or as a
//! centre; `tuples` may be omitted for edgeless neighborhoods.
//!
//! Query — free variables and a Boolean tree over sphere atoms and
//! counting sentences:
//! ```text
//! (query (vars x y)
//!   (and (sphere (x y) (type ...))
//!        (at-least 2 (type ...))
//!        (modulo 0 2 (type ...))
//!        (not false)))
//! ```
//!
//! Stream — one command per line: `+ R a b` inserts, `- R a b` deletes,
//! `? answer | count | test a b | enum [limit] | check [cap]` queries, `#`
//! or `;` starts a comment.

use std::collections::BTreeSet;

use crate::db::{Schema, Tuple, UpdateCmd};
use crate::logic::{HanfKind, HanfSentence, HnfQuery, HnfTree, SphereAtom};
use crate::sexp::{parse_one, ParseError, Pos, Sexp};
use crate::types::NeighborhoodType;
use crate::NeighborhoodDb;

/// Parse `(schema (NAME ARITY) ...)`.
pub fn parse_schema(input: &str) -> Result<Schema, ParseError> {
    let sexp = parse_one(input)?;
    let (tag, rels) = sexp.as_tagged()?;
    if tag != "schema" {
        return Err(ParseError::new(sexp.pos, format!("expected (schema ...), found ({tag} ...)")));
    }
    let mut out = Vec::new();
    for rel in rels {
        let (name, rest) = rel.as_tagged()?;
        if rest.len() != 1 {
            return Err(ParseError::new(rel.pos, "expected (NAME ARITY)"));
        }
        out.push((name.to_string(), rest[0].as_usize()?));
    }
    Schema::new(out).map_err(|e| ParseError::new(sexp.pos, e.to_string()))
}

/// Parse a `(type ...)` node against `schema`.
pub fn parse_type(sexp: &Sexp, schema: &Schema) -> Result<NeighborhoodType, ParseError> {
    let (tag, sections) = sexp.as_tagged()?;
    if tag != "type" {
        return Err(ParseError::new(sexp.pos, format!("expected (type ...), found ({tag} ...)")));
    }
    let mut elems: BTreeSet<u32> = BTreeSet::new();
    let mut centres: Option<Tuple> = None;
    let mut radius: Option<usize> = None;
    let mut tuples: BTreeSet<(crate::db::RelId, Tuple)> = BTreeSet::new();
    for section in sections {
        let (name, items) = section.as_tagged()?;
        match name {
            "elems" => {
                for item in items {
                    elems.insert(item.as_u32()?);
                }
            }
            "centres" => {
                let mut cs = Vec::new();
                for item in items {
                    cs.push(item.as_u32()?);
                }
                centres = Some(cs);
            }
            "radius" => {
                if items.len() != 1 {
                    return Err(ParseError::new(section.pos, "expected (radius R)"));
                }
                radius = Some(items[0].as_usize()?);
            }
            "tuples" => {
                for t in items {
                    let (rel_name, args) = t.as_tagged()?;
                    let Some(rel) = schema.rel_id(rel_name) else {
                        return Err(ParseError::new(
                            t.pos,
                            format!("unknown relation {rel_name}"),
                        ));
                    };
                    if args.len() != schema.arity(rel) {
                        return Err(ParseError::new(
                            t.pos,
                            format!(
                                "relation {rel_name} has arity {}, got {} components",
                                schema.arity(rel),
                                args.len()
                            ),
                        ));
                    }
                    let mut tuple = Vec::new();
                    for a in args {
                        tuple.push(a.as_u32()?);
                    }
                    tuples.insert((rel, tuple));
                }
            }
            other => {
                return Err(ParseError::new(
                    section.pos,
                    format!("unknown type section {other:?}"),
                ));
            }
        }
    }
    let Some(centres) = centres else {
        return Err(ParseError::new(sexp.pos, "type is missing (centres ...)"));
    };
    let Some(radius) = radius else {
        return Err(ParseError::new(sexp.pos, "type is missing (radius R)"));
    };
    if centres.is_empty() {
        return Err(ParseError::new(sexp.pos, "type needs at least one centre"));
    }
    elems.extend(centres.iter().copied());
    for (_, t) in &tuples {
        elems.extend(t.iter().copied());
    }
    Ok(NeighborhoodType {
        structure: NeighborhoodDb::new(elems, tuples),
        centres,
        radius,
    })
}

/// Parse `(query (vars ...) TREE)`, hoisting sphere atoms and counting
/// sentences out of the tree.
pub fn parse_query(input: &str, schema: &Schema) -> Result<HnfQuery, ParseError> {
    let sexp = parse_one(input)?;
    let (tag, parts) = sexp.as_tagged()?;
    if tag != "query" {
        return Err(ParseError::new(sexp.pos, format!("expected (query ...), found ({tag} ...)")));
    }
    if parts.len() != 2 {
        return Err(ParseError::new(sexp.pos, "expected (query (vars ...) TREE)"));
    }
    let (vars_tag, var_items) = parts[0].as_tagged()?;
    if vars_tag != "vars" {
        return Err(ParseError::new(parts[0].pos, "expected (vars ...)"));
    }
    let mut vars: Vec<String> = Vec::new();
    for item in var_items {
        let name = item.as_atom()?;
        if vars.iter().any(|v| v == name) {
            return Err(ParseError::new(item.pos, format!("duplicate variable {name}")));
        }
        vars.push(name.to_string());
    }
    let mut atoms: Vec<SphereAtom> = Vec::new();
    let mut sentences: Vec<HanfSentence> = Vec::new();
    let tree = parse_tree(&parts[1], schema, &vars, &mut atoms, &mut sentences)?;
    Ok(HnfQuery {
        k: vars.len(),
        tree,
        atoms,
        sentences,
    })
}

fn parse_tree(
    sexp: &Sexp,
    schema: &Schema,
    vars: &[String],
    atoms: &mut Vec<SphereAtom>,
    sentences: &mut Vec<HanfSentence>,
) -> Result<HnfTree, ParseError> {
    if let Ok(atom) = sexp.as_atom() {
        return match atom {
            "true" => Ok(HnfTree::Const(true)),
            "false" => Ok(HnfTree::Const(false)),
            other => Err(ParseError::new(
                sexp.pos,
                format!("expected true, false, or a connective, found {other}"),
            )),
        };
    }
    let (tag, rest) = sexp.as_tagged()?;
    match tag {
        "and" | "or" => {
            let mut children = Vec::new();
            for child in rest {
                children.push(parse_tree(child, schema, vars, atoms, sentences)?);
            }
            Ok(if tag == "and" {
                HnfTree::And(children)
            } else {
                HnfTree::Or(children)
            })
        }
        "not" => {
            if rest.len() != 1 {
                return Err(ParseError::new(sexp.pos, "expected (not TREE)"));
            }
            Ok(HnfTree::Not(Box::new(parse_tree(
                &rest[0], schema, vars, atoms, sentences,
            )?)))
        }
        "sphere" => {
            if rest.len() != 2 {
                return Err(ParseError::new(sexp.pos, "expected (sphere (VARS...) TYPE)"));
            }
            let mut positions = Vec::new();
            for v in rest[0].as_list()? {
                let name = v.as_atom()?;
                let Some(idx) = vars.iter().position(|w| w == name) else {
                    return Err(ParseError::new(v.pos, format!("unknown variable {name}")));
                };
                positions.push(idx);
            }
            let ty = parse_type(&rest[1], schema)?;
            if ty.centres.len() != positions.len() {
                return Err(ParseError::new(
                    rest[1].pos,
                    format!(
                        "type has {} centres but the sphere names {} variables",
                        ty.centres.len(),
                        positions.len()
                    ),
                ));
            }
            // Normalize to strictly increasing positions, permuting centres
            // alongside.
            let mut order: Vec<usize> = (0..positions.len()).collect();
            order.sort_by_key(|&i| positions[i]);
            let sorted: Vec<usize> = order.iter().map(|&i| positions[i]).collect();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(ParseError::new(rest[0].pos, "sphere variables must be distinct"));
            }
            let centres: Tuple = order.iter().map(|&i| ty.centres[i]).collect();
            atoms.push(SphereAtom {
                ty: NeighborhoodType { centres, ..ty },
                positions: sorted,
            });
            Ok(HnfTree::Atom(atoms.len() - 1))
        }
        "at-least" => {
            if rest.len() != 2 {
                return Err(ParseError::new(sexp.pos, "expected (at-least M TYPE)"));
            }
            let m = rest[0].as_u64()?;
            let ty = parse_type(&rest[1], schema)?;
            sentences.push(HanfSentence {
                kind: HanfKind::AtLeast(m),
                ty,
            });
            Ok(HnfTree::Sentence(sentences.len() - 1))
        }
        "modulo" => {
            if rest.len() != 3 {
                return Err(ParseError::new(sexp.pos, "expected (modulo I M TYPE)"));
            }
            let residue = rest[0].as_u64()?;
            let modulus = rest[1].as_u64()?;
            let ty = parse_type(&rest[2], schema)?;
            sentences.push(HanfSentence {
                kind: HanfKind::Mod { residue, modulus },
                ty,
            });
            Ok(HnfTree::Sentence(sentences.len() - 1))
        }
        other => Err(ParseError::new(
            sexp.pos,
            format!("unknown connective {other:?}"),
        )),
    }
}

/// One line of an update stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamCmd {
    Update(UpdateCmd),
    Answer,
    Count,
    Test(Tuple),
    Enumerate(Option<usize>),
    Check(Option<u64>),
}

/// Parse a line-oriented stream of updates and query commands.
pub fn parse_stream(input: &str, schema: &Schema) -> Result<Vec<StreamCmd>, ParseError> {
    let mut out = Vec::new();
    for (lineno, raw) in input.lines().enumerate() {
        let pos = Pos {
            line: lineno + 1,
            col: 1,
        };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().unwrap();
        match head {
            "+" | "-" => {
                let Some(rel_name) = words.next() else {
                    return Err(ParseError::new(pos, "expected: +|- RELATION CONSTANTS..."));
                };
                let Some(rel) = schema.rel_id(rel_name) else {
                    return Err(ParseError::new(pos, format!("unknown relation {rel_name}")));
                };
                let mut tuple: Tuple = Vec::new();
                for w in words {
                    tuple.push(w.parse().map_err(|_| {
                        ParseError::new(pos, format!("expected a constant, found {w:?}"))
                    })?);
                }
                if tuple.len() != schema.arity(rel) {
                    return Err(ParseError::new(
                        pos,
                        format!(
                            "relation {rel_name} has arity {}, got {} constants",
                            schema.arity(rel),
                            tuple.len()
                        ),
                    ));
                }
                out.push(StreamCmd::Update(if head == "+" {
                    UpdateCmd::insert(rel, tuple)
                } else {
                    UpdateCmd::delete(rel, tuple)
                }));
            }
            "?" => {
                let Some(what) = words.next() else {
                    return Err(ParseError::new(pos, "expected: ? answer|count|test|enum|check"));
                };
                let cmd = match what {
                    "answer" => StreamCmd::Answer,
                    "count" => StreamCmd::Count,
                    "test" => {
                        let mut tuple: Tuple = Vec::new();
                        for w in words.by_ref() {
                            tuple.push(w.parse().map_err(|_| {
                                ParseError::new(pos, format!("expected a constant, found {w:?}"))
                            })?);
                        }
                        StreamCmd::Test(tuple)
                    }
                    "enum" => {
                        let limit = match words.next() {
                            Some(w) => Some(w.parse().map_err(|_| {
                                ParseError::new(pos, format!("expected a limit, found {w:?}"))
                            })?),
                            None => None,
                        };
                        StreamCmd::Enumerate(limit)
                    }
                    "check" => {
                        let cap = match words.next() {
                            Some(w) => Some(w.parse().map_err(|_| {
                                ParseError::new(pos, format!("expected a cap, found {w:?}"))
                            })?),
                            None => None,
                        };
                        StreamCmd::Check(cap)
                    }
                    other => {
                        return Err(ParseError::new(
                            pos,
                            format!("unknown query command {other:?}"),
                        ));
                    }
                };
                if words.next().is_some() {
                    return Err(ParseError::new(pos, "trailing input after query command"));
                }
                out.push(cmd);
            }
            other => {
                return Err(ParseError::new(
                    pos,
                    format!("expected +, -, ?, or a comment, found {other:?}"),
                ));
            }
        }
    }
    Ok(out)
}

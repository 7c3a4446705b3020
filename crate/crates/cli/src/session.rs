//! One query session: parse inputs, replay a stream, print results.
//!
//! The same command stream can drive either the incremental engine or a
//! plain database paired with the brute-force evaluator. Both paths print
//! identical text for identical histories, so differential runs can diff
//! their outputs directly.

use std::ops::ControlFlow;

use hanfq_core::db::Database;
use hanfq_core::engine::{Engine, EngineError};
use hanfq_core::logic::{eval_hnf_query, HnfQuery};
use hanfq_core::parse::StreamCmd;
use hanfq_core::{Schema, Tuple, UpdateCmd, UpdateOutcome};

/// What went wrong while replaying a stream.
#[derive(Debug)]
pub enum SessionError {
    /// Engine rejected an input (bad arity and such).
    Engine(EngineError),
    /// A self-check or a cross-check against the reference failed.
    Inconsistent(String),
}

impl std::fmt::Display for SessionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SessionError::Engine(e) => write!(f, "{e}"),
            SessionError::Inconsistent(m) => write!(f, "inconsistent state: {m}"),
        }
    }
}

impl std::error::Error for SessionError {}

impl From<EngineError> for SessionError {
    fn from(e: EngineError) -> SessionError {
        SessionError::Engine(e)
    }
}

enum Backend {
    Incremental(Box<Engine>),
    /// Plain store plus exhaustive re-evaluation on every question.
    Reference { db: Database, query: HnfQuery },
}

/// A replayable session over one schema, query, and degree bound.
pub struct Session {
    backend: Backend,
    /// Applied update count (rejected and no-op commands excluded).
    pub applied: usize,
    /// Run a full consistency check after every applied update.
    pub check_each: Option<u64>,
}

impl Session {
    pub fn new(
        schema: Schema,
        degree_bound: usize,
        query: HnfQuery,
        reference_only: bool,
    ) -> Result<Session, SessionError> {
        let backend = if reference_only {
            query.validate().map_err(EngineError::from)?;
            Backend::Reference {
                db: Database::new(schema, degree_bound),
                query,
            }
        } else {
            Backend::Incremental(Box::new(Engine::new(schema, degree_bound, query)?))
        };
        Ok(Session {
            backend,
            applied: 0,
            check_each: None,
        })
    }

    pub fn engine(&self) -> Option<&Engine> {
        match &self.backend {
            Backend::Incremental(e) => Some(e),
            Backend::Reference { .. } => None,
        }
    }

    fn update(&mut self, cmd: &UpdateCmd) -> Result<UpdateOutcome, SessionError> {
        let outcome = match &mut self.backend {
            Backend::Incremental(engine) => engine.update(cmd)?,
            Backend::Reference { db, .. } => db.apply_update(cmd).map_err(EngineError::from)?,
        };
        if outcome == UpdateOutcome::Applied {
            self.applied += 1;
            if let (Some(cap), Backend::Incremental(engine)) = (self.check_each, &self.backend) {
                engine
                    .check(cap)
                    .map_err(SessionError::Inconsistent)?;
            }
        }
        Ok(outcome)
    }

    fn answer(&self) -> Result<bool, SessionError> {
        match &self.backend {
            Backend::Incremental(engine) => Ok(engine.answer()),
            Backend::Reference { db, query } => Ok(!self.reference_answers(db, query)?.is_empty()),
        }
    }

    fn count(&self) -> Result<i128, SessionError> {
        match &self.backend {
            Backend::Incremental(engine) => Ok(engine.count()),
            Backend::Reference { db, query } => {
                Ok(self.reference_answers(db, query)?.len() as i128)
            }
        }
    }

    fn test(&self, tuple: &[u32]) -> Result<bool, SessionError> {
        match &self.backend {
            Backend::Incremental(engine) => Ok(engine.test(tuple)?),
            Backend::Reference { db, query } => {
                Ok(self.reference_answers(db, query)?.contains(tuple))
            }
        }
    }

    /// All answers, sorted — both backends print enumerations this way.
    fn answers_sorted(&self, limit: Option<usize>) -> Result<(Vec<Tuple>, i128), SessionError> {
        let (mut all, total) = match &self.backend {
            Backend::Incremental(engine) => {
                let mut out: Vec<Tuple> = Vec::new();
                engine.enumerate(&mut |t| {
                    out.push(t.to_vec());
                    ControlFlow::Continue(())
                });
                let total = out.len() as i128;
                (out, total)
            }
            Backend::Reference { db, query } => {
                let set = self.reference_answers(db, query)?;
                let total = set.len() as i128;
                (set.into_iter().collect(), total)
            }
        };
        all.sort();
        if let Some(limit) = limit {
            all.truncate(limit);
        }
        Ok((all, total))
    }

    fn reference_answers(
        &self,
        db: &Database,
        query: &HnfQuery,
    ) -> Result<std::collections::BTreeSet<Tuple>, SessionError> {
        eval_hnf_query(db, query).map_err(|e| SessionError::Inconsistent(e.to_string()))
    }

    fn check(&self, cap: u64) -> Result<(), SessionError> {
        match &self.backend {
            Backend::Incremental(engine) => engine.check(cap).map_err(SessionError::Inconsistent),
            Backend::Reference { .. } => Ok(()),
        }
    }

    fn database(&self) -> &Database {
        match &self.backend {
            Backend::Incremental(engine) => engine.db(),
            Backend::Reference { db, .. } => db,
        }
    }

    /// Replay the stream, appending one line per visible event to `out`.
    ///
    /// Output contract: every update echoes its outcome (`applied`,
    /// `nochange`, or `rejected … (degree bound)`); `answer` prints yes/no;
    /// `test` prints member/nonmember; `count` prints the bare integer;
    /// `enumerate` prints one tuple per line as space-separated integers and
    /// then the `#done` terminator; `check` prints `OK`.
    pub fn run(&mut self, cmds: &[StreamCmd], out: &mut Vec<String>) -> Result<(), SessionError> {
        for cmd in cmds {
            match cmd {
                StreamCmd::Update(update) => {
                    let outcome = self.update(update)?;
                    let word = match outcome {
                        UpdateOutcome::Applied => "applied",
                        UpdateOutcome::NoChange => "nochange",
                        UpdateOutcome::RejectedDegree => "rejected",
                    };
                    let parts: Vec<String> = update.tuple.iter().map(u32::to_string).collect();
                    let suffix = if outcome == UpdateOutcome::RejectedDegree {
                        " (degree bound)"
                    } else {
                        ""
                    };
                    out.push(format!(
                        "{word} {} {} {}{suffix}",
                        if update.insert { "+" } else { "-" },
                        self.database().schema().name(update.rel),
                        parts.join(" ")
                    ));
                }
                StreamCmd::Answer => out.push(if self.answer()? { "yes" } else { "no" }.into()),
                StreamCmd::Count => out.push(self.count()?.to_string()),
                StreamCmd::Test(tuple) => {
                    let verdict = if self.test(tuple)? { "member" } else { "nonmember" };
                    out.push(verdict.into());
                }
                StreamCmd::Enumerate(limit) => {
                    let (answers, _total) = self.answers_sorted(*limit)?;
                    for t in &answers {
                        let parts: Vec<String> = t.iter().map(u32::to_string).collect();
                        out.push(parts.join(" "));
                    }
                    out.push("#done".into());
                }
                StreamCmd::Check(cap) => {
                    self.check(cap.unwrap_or(100_000))?;
                    out.push("OK".into());
                }
            }
        }
        Ok(())
    }
}

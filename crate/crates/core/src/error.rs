use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("state space: {0}")]
    StateSpace(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("convex set is empty")]
    EmptySet,
    #[error("kind mismatch: {0}")]
    Kind(String),
    #[error("composition undefined at state {state}: {detail}")]
    CompositionUndefined { state: String, detail: String },
    #[error("no fixed point after {iterations} iterations")]
    NonTermination { iterations: usize },
    #[error("enumeration cap exceeded: {what} (cap {cap})")]
    Explosion { what: String, cap: usize },
    #[error("ill-formed structure: {0}")]
    IllFormed(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("policy: {0}")]
    Policy(String),
    #[error("termination: {0}")]
    Termination(String),
    #[error("rule not applicable: {0}")]
    Rule(String),
    #[error("side condition failed: {0}")]
    SideCondition(String),
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undeclared name `{0}`")]
    Undeclared(String),
    #[error("atomicity: {0}")]
    Atomicity(String),
}

impl Error {
    /// Module-qualified error code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::StateSpace(_) => "core-prob/state-space",
            Error::Domain(_) => "core-prob/domain",
            Error::EmptySet => "core-prob/empty-set",
            Error::Kind(_) => "seq-semantics/kind",
            Error::CompositionUndefined { .. } => "seq-semantics/composition-undefined",
            Error::NonTermination { .. } => "seq-semantics/non-termination",
            Error::Explosion { .. } => "core-prob/explosion",
            Error::IllFormed(_) => "ipbes/ill-formed",
            Error::Infeasible(_) => "ipbes/infeasible",
            Error::Policy(_) => "scheduler-semantics/policy",
            Error::Termination(_) => "scheduler-semantics/termination",
            Error::Rule(_) => "rg-engine/rule",
            Error::SideCondition(_) => "rg-engine/side-condition",
            Error::Syntax { .. } => "dsl-cli/syntax",
            Error::Undeclared(_) => "dsl-cli/undeclared",
            Error::Atomicity(_) => "dsl-cli/atomicity",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("{line}:{col}: unknown operator `{op}`")]
    UnknownOperator { line: usize, col: usize, op: String },

    #[error("{line}:{col}: malformed fixed-variable index: {msg}")]
    MalformedFixedIndex { line: usize, col: usize, msg: String },

    #[error("{line}:{col}: fixed variable `{name}` is only allowed in fixed mode")]
    FixedNotAllowed { line: usize, col: usize, name: String },

    #[error("duplicate lattice element `{0}`")]
    DuplicateElement(String),

    #[error("invalid lattice element name `{0}`")]
    InvalidElementName(String),

    #[error("unknown lattice element `{0}`")]
    UnknownElement(String),

    #[error("cycle in cover relation through `{0}` and `{1}`")]
    CoverCycle(String, String),

    #[error("not a lattice: pair ({left}, {right}) has {reason}")]
    NotALattice {
        left: String,
        right: String,
        reason: &'static str,
    },

    #[error("lattice has no elements")]
    EmptyLattice,

    #[error("lattice has {0} elements; at most {max} are supported", max = crate::lattice::MAX_TABLE_ELEMENTS)]
    TooManyElements(usize),

    #[error("powerset universe is empty")]
    EmptyUniverse,

    #[error("powerset universe has {0} variables; at most {max} are supported", max = crate::lattice::MAX_UNIVERSE)]
    UniverseTooLarge(usize),

    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),

    #[error("fixed variable `{0}` not allowed here")]
    FixedVariable(String),

    #[error("floating variable `{0}` in a fixed-variable program")]
    FloatingVariable(String),

    #[error("fixed variable `{var}` has index `{level}` which is not a lattice element")]
    FixedIndexNotInLattice { var: String, level: String },

    #[error("mismatched domains: {0}")]
    DomainMismatch(String),

    #[error("value domain is empty")]
    EmptyDomain,

    #[error("exhaustive search over {0} stores is too large; use random mode or a smaller domain")]
    SearchSpaceTooLarge(u128),

    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("axiom violation ({axiom}) at witness {witness:?}")]
    AxiomViolation { axiom: &'static str, witness: Vec<usize> },
    #[error("bad table: {0}")]
    BadTable(String),
    #[error("index space overflow: {0} elements")]
    Overflow(u128),
    #[error("subset lives on {got} elements, group has {expected}")]
    ParentMismatch { expected: usize, got: usize },
    #[error("subgroup is not normal: conjugation by {0} moves it")]
    NotNormal(usize),
    #[error("character modulus {character} does not match arc modulus {arc}")]
    ModulusMismatch { character: usize, arc: usize },
    #[error("empty input set")]
    EmptyInput,
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("hypothesis {name} failed: {detail}")]
    Hypothesis { name: &'static str, detail: String },
    #[error("infeasible target: {0}")]
    Infeasible(String),
    #[error("ambiguous sign for pair ({0}, {1})")]
    AmbiguousSign(usize, usize),
    #[error("no reference element: N(rho/4 - gamma) minus N(4 gamma) is empty")]
    NoReference,
    #[error("no loop found: {0}")]
    NoLoop(String),
    #[error("ball does not generate the group: {0}")]
    NotGenerated(String),
    #[error("no character within bound: best distance {best}, bound {bound}")]
    NoCharacterWithinBound { best: String, bound: String },
    #[error("no dilation maps the pair into arcs of the stated lengths")]
    NoStructureFound,
    #[error("inverse theorem conclusion failed on {0}")]
    InverseViolated(String),
    #[error("pipeline stage {stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn at(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Error {
        Error::Precondition(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

use crate::space::Node;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("edge ({0}, {1}) has nonpositive weight {2}")]
    NonPositiveWeight(Node, Node, f64),

    #[error("node {0} is isolated (total incident weight is zero)")]
    IsolatedNode(Node),

    #[error("graph is disconnected: node {0} is unreachable from node 0")]
    Disconnected(Node),

    #[error("empty support: node {0} has no neighbour with positive kernel weight")]
    EmptySupport(Node),

    #[error("kernel evaluates negative ({value}) at distance {distance}")]
    NegativeKernel { distance: f64, value: f64 },

    #[error("omega must be nonempty")]
    EmptyOmega,

    #[error("node {0} is out of range")]
    NodeOutOfRange(Node),

    #[error("field has no value at node {0}")]
    MissingNode(Node),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("boundary node {node}: m_x(omega) = {mass} is below the boundary threshold")]
    BoundaryMassTooSmall { node: Node, mass: f64 },

    #[error("no bracket found for the boundary equation at node {0} (structural condition violated?)")]
    BracketNotFound(Node),

    #[error("jacobian is singular after regularization (monotonicity violated?)")]
    SingularJacobian,

    #[error("map has no potential; the energy oracle needs a built-in map")]
    NotPotential,

    #[error("degenerate quadratic form: {0}")]
    DegenerateForm(String),

    #[error("trajectories are on different time grids")]
    MismatchedGrids,

    #[error("{what} did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence {
        what: &'static str,
        residual: f64,
        iterations: usize,
    },

    #[error("implicit Euler step {} failed to converge", .0.failed_step)]
    StepFailed(Box<crate::evolution::EvolutionFailure>),
}

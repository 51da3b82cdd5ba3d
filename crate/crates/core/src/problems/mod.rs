//! Builders for the benchmark problem families.

pub mod consensus;
pub mod lhalf;
pub mod mpc;
pub mod quadratic_box;
pub mod sparse_lsq;
pub mod spca;

pub use consensus::{build_consensus_spca, ConsensusSpca};
pub use lhalf::{prox_l_half, prox_l_half_scalar, LHalfNorm};
pub use mpc::{build_mpc, soft_corridor_prox, MpcProblem, MpcSpec};
pub use quadratic_box::QuadraticBoxAdmm;
pub use sparse_lsq::{build_sparse_lsq, LeastSquares, SparseLsqDims, SparseLsqSpec};
pub use spca::{build_spca, project_sparse_sphere, NegQuadratic, SparseSphere, SpcaDims, SpcaSpec};

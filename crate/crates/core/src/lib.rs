//! Variational quantum eigensolver study of MaxCut on random graphs.
//!
//! The pipeline runs bottom-up:
//!
//! * [`graphs`] generates connected Erdős–Rényi instances and solves them
//!   exhaustively;
//! * [`simulator`] evolves dense state vectors and evaluates the Ising energy;
//! * [`ansatz`] builds the eight layered circuit families;
//! * [`optimize`] provides COBYLA and Nelder–Mead with evaluation traces;
//! * [`vqe`] ties a circuit and a graph into one optimisation run;
//! * [`experiments`] sweeps instance × circuit × depth × seed grids and
//!   summarises them;
//! * [`report`] renders convergence curves and approximation-ratio box plots
//!   as SVG with companion CSV files.

pub mod ansatz;
pub mod error;
pub mod experiments;
pub mod graphs;
pub mod io;
pub mod optimize;
pub mod report;
pub mod simulator;
pub mod vqe;

pub use error::{Error, Result};

//! Joint measurability of quantum measurements, matrix jewel spectrahedra
//! and incompatibility witnesses, decided with a small dense SDP solver.

pub mod bounds;
pub mod compat;
pub mod error;
pub mod io;
pub mod linalg;
pub mod povm;
pub mod scan;
pub mod sdp;
pub mod spectra;
pub mod witness;

pub use error::{Error, Result};
pub use linalg::{CMat, HMat, C64};
pub use sdp::{SdpOptions, SdpProblem, SdpSolution, SdpStatus, SolveStats};

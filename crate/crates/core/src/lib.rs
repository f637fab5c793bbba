//! Pauli-entangling power and related operator measures for qubit unitaries.

pub mod clifford;
pub mod error;
pub mod factorize;
pub mod io;
pub mod linalg;
pub mod magic;
pub mod mpu;
pub mod operator;
pub mod optimize;
pub mod pauli;
pub mod spin_chain;
pub mod power;
pub mod selftest;

pub use clifford::{CliffordTableau, Sign};
pub use error::{Error, Result};
pub use linalg::{Bipartition, DenseOperator, C64};
pub use pauli::{Pauli, PauliString};

pub mod classifier;
pub mod error;
pub mod generate;
pub mod grid;
pub mod matrix;
pub mod nilpotency;
pub mod operator;
pub mod poly;
pub mod random;
pub mod scalar;
pub mod space;
pub mod verify;

pub use error::{Error, Result};
pub use matrix::{Matrix, Vector};
pub use poly::{char_poly, distinct_eigenvalue_count, Polynomial};
pub use scalar::Scalar;
pub use operator::{ElementaryOperator, GramMatrix, Representation};
pub use space::OperatorSpace;
pub use verify::{verify_certificate, VerifyReport};

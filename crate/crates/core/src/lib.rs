//! Slice rank, geometric rank and analytic rank of 3-tensors over small
//! finite fields, with explicit slice-rank decompositions.

pub mod analytic;
pub mod biascx;
pub mod config;
pub mod decomp;
mod enumerate;
pub mod error;
pub mod ffield;
pub mod format;
pub mod geometric;
pub mod linalg;
pub mod poly;
pub mod slicerank;
pub mod tensor;
pub mod variety;

pub use error::{Error, Result};
pub use ffield::{ArithOp, CharacterSum, Field, FieldDesignation, FieldElem};
pub use linalg::{Matrix, MatrixSpace, Vector};
pub use tensor::{Axis, Generator, SliceTerm, Tensor3};
pub use config::Budget;
pub use format::{parse_tensor, write_tensor};
pub use poly::{parse_poly_system, Poly, PolySystem};
pub use variety::{DimEstimate, DimStatus, PointCount};
pub use analytic::{ARValue, EntropyReport};
pub use geometric::{GRReport, GrOptions};
pub use slicerank::{ChainReport, Check, SRResult, SrMethod, VertexCover, Witness};
pub use decomp::{DecompositionDoc, SliceDecomposition, TermSource};
pub use biascx::{ClosenessReport, ComplexityBound, Ratio};

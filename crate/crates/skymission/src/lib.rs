//! Mission toolchain for autonomous quadrotors: a textual mission DSL with a
//! parser, semantic analyzer, extensible action registry, deterministic
//! discrete-time simulator, and flight-script / DOT code generators.

pub mod analyzer;
pub mod codegen;
pub mod diag;
pub mod geom;
pub mod lexer;
pub mod model;
pub mod parser;
pub mod printer;
pub mod registry;
pub mod script;
pub mod sim;

/// Scalar type used by the concrete toolchain. All vector math in [`geom`]
/// is generic over `num_traits::Float`; the toolchain instantiates it with
/// `f64` so traces are bit-reproducible.
pub type Scalar = f64;

/// Concrete 3D point/vector.
pub type Point = geom::Vec3<Scalar>;

//! Parsing, routing and executing agent commands.

pub mod effect;
pub mod engine;
pub mod grammar;
pub mod route;
pub mod surfaces;

pub use effect::{Effect, EffectKind, ExecutionResult};
pub use engine::{Engine, EngineError, ExecMode, SurfaceExecutor, EXIT_FAILED, EXIT_OK, EXIT_USAGE};
pub use grammar::{parse_command, CommandLine, ParseError};
pub use route::{bind, route, Command, Surface, Verb, VerbSpec};

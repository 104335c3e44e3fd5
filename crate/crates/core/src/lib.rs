//! Static best-case throughput prediction for marked x86 assembly loops
//! against explicit port-based machine models (Skylake, Zen).
//!
//! The pipeline: [`asm`] extracts and parses the marked loop body, [`model`]
//! holds the per-architecture instruction database, [`analyze`] totals port
//! pressure and reports the bottleneck, [`sim`] cross-checks that number by
//! deterministic scheduling, and [`bench`] generates the microbenchmarks and
//! ingests the measurements that new database entries are built from.

pub mod analyze;
pub mod asm;
pub mod bench;
pub mod cycles;
pub mod model;
pub mod sim;

pub use analyze::{analyze_kernel, render_machine_readable, render_report, KernelAnalysis};
pub use asm::{extract_marked_kernel, MarkedKernel};
pub use cycles::Cy;
pub use model::{InstructionForm, ModelDatabase, PortModel};
pub use sim::simulate;

//! Numerical toolkit for effect algebras on `ℂⁿ`: Löwner order, strength
//! of effects along rays, order-preserving maps, reconstruction of
//! implementing unitaries and antiunitaries, and the projection lattice.
//!
//! Every randomized routine takes a [`RandomSource`] and is reproducible
//! from its seed.

pub mod cli;
pub mod effects;
pub mod error;
pub mod generate;
pub mod linalg;
pub mod maps;
pub mod reconstruction;
pub mod report;
pub mod sharp;
pub mod trials;

pub use num_complex;

pub use effects::{trace_pair, Effect, Ray, State, WeakAtom};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, RandomSource};
pub use maps::{apply_map, EffectMap, EffectMapSpec};
pub use reconstruction::{
    classify_theorem1, projective_distance, reconstruct_wigner, ImplementingOperator, Kind, PipelineConfig, RayMap,
};
pub use report::{ClassificationReport, FinalVerdict, MapReport, Verdict};
pub use sharp::{extract_unitary, induced_map, theorem2_harness, ScalarExtraction, SemilinearOperator, SubspaceProjection};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x00C0_FFEE;

pub mod algebra;
pub mod error;
pub mod explorer;
pub mod hilbert_module;
pub mod instance;
pub mod morphism;
pub mod tolerance;
pub mod uncertainty;
pub mod verifier;
#[cfg(feature = "cli")]
pub mod cli;

//! Simulation and statistical certification of Shor order finding.
//!
//! The crate builds parallel phase-estimation circuits for small moduli,
//! runs them on an exact statevector engine, and decides from a measurement
//! histogram whether the outcomes concentrate in the continued-fraction
//! acceptance windows more than a flat spectrum would.
//!
//! Modules, bottom-up:
//!
//! - [`numtheory`]: gcd, modular powers, orders, convergents, factor extraction.
//! - [`circuit`]: gate-level IR, inverse QFT, phase-estimation scaffold.
//! - [`arith`]: permutation and reversible-arithmetic modular multipliers.
//! - [`sim`]: statevector execution, sampling, analytic QPE distribution.
//! - [`noise`]: distribution-level decoherence models.
//! - [`cert`]: acceptance windows, binomial test, certification reports.
//! - [`shor`]: order-finding runs, the factoring loop, experiment replication.
//!
//! ```
//! use shorcert::cert::{certify_counts, CertifyParams};
//! use shorcert::Verdict;
//!
//! // 741 of 2048 shots landed in the windows of order 4 on a 512-point grid
//! let params = CertifyParams::new(15, Some(7), 4);
//! let report = certify_counts(741, 2048, 512, &params).unwrap();
//! assert_eq!(report.verdict, Verdict::Pass);
//! assert_eq!(report.accepted_bins, 132);
//! ```
//!
//! ```
//! use shorcert::shor::{simulate_and_certify, ExperimentConfig};
//!
//! let mut config = ExperimentConfig::new(21);
//! config.base = Some(2);
//! config.seed = 7;
//! let (run, report) = simulate_and_certify(&config).unwrap();
//! assert_eq!(run.instance.order(), 6);
//! assert!(report.p_hat > report.baseline);
//! ```

pub mod arith;
pub mod cert;
pub mod circuit;
pub mod error;
pub mod noise;
pub mod numtheory;
pub mod shor;
pub mod sim;

pub use arith::{ModularArithmeticPlan, PermutationTable};
pub use cert::{AcceptanceWindows, CertificationReport, PValue, Verdict, WindowMode};
pub use circuit::{Backend, Circuit, Gate, GateKind};
pub use error::{Error, Result};
pub use noise::NoiseSpec;
pub use numtheory::{Convergent, OrderFindingInstance};
pub use shor::{ExperimentConfig, FactoringResult, PaperExperiment};
pub use sim::{Histogram, StateVector};

/// Version string embedded in every emitted artifact.
pub const TOOL_VERSION: &str = concat!("shorcert ", env!("CARGO_PKG_VERSION"));

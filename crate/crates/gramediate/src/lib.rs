//! Mediator discovery in categorical data.
//!
//! This library identifies candidate mediating variables between a treatment
//! and correlated outcomes in cross-classified categorical data. The pipeline
//! has three stages:
//!
//! 1. **Model selection** — fit hierarchical loglinear models by iterative
//!    proportional fitting and pick the model best supported by the data
//!    (likelihood-ratio tests, or AIC stepwise search with a forward/backward
//!    consensus rule).
//! 2. **Graph decomposition** — build the selected model's interaction graph,
//!    check graphicality, and extract weak decompositions `(A, B, C)` in
//!    which the treatment is isolated in `A`; the complete separator `B`
//!    holds the candidate mediators.
//! 3. **Causal mediation analysis** — quantify the candidate's role with
//!    proportional-odds mediator/outcome regressions: probability-scale
//!    ACME / ADE / total effects and bootstrap percentile intervals.
//!
//! A clinical-trial dataset (fatigue and weakness in 1,343 observation
//! records, by time point and treatment group) ships with the crate as the
//! standard worked example, and an out-of-sample validation harness measures
//! how reliably the selected models are recovered from subsamples.
//!
//! ```
//! use gramediate::*;
//!
//! // stage 1: pick the loglinear model by two-direction stepwise AIC search
//! let table = embedded_dataset();
//! let chosen = consensus(&table, &SearchOptions::default())?
//!     .agreed_class
//!     .expect("forward and backward searches agree on this data");
//!
//! // stage 2: the graph isolates the treatment behind one separator
//! let names = table.schema().names();
//! assert!(is_graphical(&chosen, &names)?);
//! let graph = InteractionGraph::from_generating_class(&chosen, &names)?;
//! let candidates = graph.mediator_candidates("IC")?;
//! assert_eq!(graph.names_of(candidates[0]), vec!["SSC-W"]);
//!
//! // stage 3: quantify the candidate's mediation on the outcome scale
//! let records = table.expand()?;
//! let effects = mediate_points(
//!     &records, "IC", "SSC-W", "SSC-F", &["TIME"],
//!     &MediationOptions::default(),
//! )?;
//! assert!(effects.acme_control[0] > 0.0);
//! # Ok::<(), gramediate::Error>(())
//! ```
//!
//! ## Runnable examples
//!
//! One example per capability:
//!
//! ```bash
//! cargo run --release --example dataset_roundtrip     # schemas, CSV, crosstab
//! cargo run --release --example fit_loglinear_models  # fits + nested tests
//! cargo run --release --example enumerate_model_space # hierarchical lattice
//! cargo run --release --example model_search          # stepwise AIC consensus
//! cargo run --release --example mediator_graph        # decompositions + DOT
//! cargo run --release --example recovery_validation   # subsample curves (CSV)
//! cargo run --release --example mediation_effects     # ACME/ADE/total + CIs
//! ```
//!
//! The same functionality is scriptable through the thin `gramediate` binary;
//! see the README for the subcommand surface.
//!
//! All types are immutable after construction and the fitting/search
//! functions are pure, so everything here is safe to share across threads;
//! the resampling harnesses parallelize internally with deterministic
//! per-replicate RNG substreams.

pub mod data;
pub mod error;
pub mod graphs;
pub mod loglin;
pub mod mediation;
pub mod modelspace;
pub mod stats;
pub mod table;
pub mod validate;

pub use data::{embedded_dataset, embedded_schema};
pub use error::{Error, Result};
pub use graphs::{is_graphical, InteractionGraph, WeakDecomposition};
pub use loglin::{
    compare_nested, ipf_fit, ipf_fit_default, param_count, FitResult, GeneratingClass,
    NestedComparison, TermSet,
};
pub use mediation::{
    category_probs, fit_prop_odds, mediate, mediate_points, Coding, MediationEstimate,
    MediationOptions, PointEffects, PredictorSpec, PropOddsModel,
};
pub use modelspace::{
    backward_neighbors, consensus, enumerate_hierarchical, forward_neighbors, stepwise,
    ConsensusResult, Direction, SearchOptions, SearchSpace, SearchTrace,
};
pub use stats::{chisq_sf, ln_gamma, reg_gamma_upper};
pub use table::{
    crosstab, parse_csv, ContingencyTable, ObservationRecords, Schema, VariableSchema,
};
pub use validate::{default_q_grid, recovery_csv, recovery_curve, subsample, RecoveryReport};

/// Default run seed; override with the `GRAMEDIATE_SEED` environment variable
/// or the `--seed` flag.
pub const DEFAULT_SEED: u64 = 20240101;

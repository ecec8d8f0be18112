//! Classical KS and coherent-state entropies of partition codings.

pub mod classical;
pub mod compare;
pub mod cs;
pub mod partition;
pub mod table;

pub use classical::{classical_probabilities_mc, ks_entropy_rate, sample_orbit_codes, EntropyRates};
pub use compare::{
    entropy_components, eta_tilde, fannes_gap_bound, fit_line, theorem3_comparison, BreakRule, ComparisonConfig,
    ComparisonReport, EntropyComponents, FannesBound, LatticeRun, LineFit, PartitionSpec,
};
pub use cs::{cs_entropies, cs_entropy, cs_orbit_codes, cs_probabilities, cs_probabilities_general, Dynamics};
pub use partition::{cell_weights, Atom, CellWeightTable, Partition};
pub use table::{shannon_entropy, OrbitCodes, ProbabilityTable, SymbolString};

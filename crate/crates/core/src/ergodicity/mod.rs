//! Empirical boundedness and mixing measurements on simulated ensembles.

pub mod assignment;
pub mod dictionary;
pub mod fit;
pub mod mixing;
pub mod returns;
pub mod stability;
pub mod wasserstein;

pub use dictionary::{wv_lower_bound, TestFunction, TestFunctionDictionary};
pub use fit::{fit_exponential, ExpFit};
pub use mixing::{mixing_experiment, mixing_series, Coupling, MixingConfig, MixingReport, MixingSeries};
pub use returns::{return_time_stats, ReturnTimeSummary};
pub use stability::{radius_quantile, stability_check, StabilityReport};
pub use wasserstein::empirical_wasserstein1;

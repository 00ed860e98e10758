//! Reading and writing case files, sweep scenarios and result tables.

pub mod matpower;
pub mod results;
pub mod scenario;

pub use matpower::{parse_case, write_case, CaseDocument};
pub use results::{read_results, write_results, RESULTS_HEADER};
pub use scenario::{parse_scenario, LoadSelector, ScenarioSpec};

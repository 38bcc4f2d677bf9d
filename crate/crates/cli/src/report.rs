//! JSON report written by `test` and `tw`.

use serde::Serialize;
use vtest::asymptotics::ChiSquareMixture;
use vtest::tracy_widom::TwStatistic;
use vtest::TestResult;

pub const SCHEMA: &str = "vtest.run_report";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command_line: Vec<String>,
    pub input: InputInfo,
    pub spec: SpecInfo,
    pub result: TestResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixture: Option<ChiSquareMixture>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tracy_widom: Option<TwStatistic>,
}

#[derive(Debug, Default, Serialize)]
pub struct InputInfo {
    pub paths: Vec<String>,
    pub kind: &'static str,
    pub n: usize,
    /// Features used by the test; absent for precomputed distances.
    pub p: Option<usize>,
    /// Features in the file before column filtering.
    pub p_input: Option<usize>,
    pub blocks: Option<usize>,
    pub binarize_threshold: Option<f64>,
    pub min_freq: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SpecInfo {
    pub method_requested: String,
    pub resamples: Option<usize>,
    pub seed: Option<u64>,
    pub p_value_type: Option<String>,
    pub metric: Option<String>,
    pub norm: Option<f64>,
    pub auto_threshold: Option<usize>,
}

impl RunReport {
    pub fn new(input: InputInfo, spec: SpecInfo, result: TestResult) -> Self {
        RunReport {
            schema: SCHEMA,
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command_line: std::env::args().collect(),
            input,
            spec,
            result,
            mixture: None,
            tracy_widom: None,
        }
    }
}

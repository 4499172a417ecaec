//! Scenario files and the experiment runner behind the `run` subcommand.
//!
//! A scenario is one JSON document:
//!
//! ```json
//! {
//!   "name": "dj_random_phase_failure",
//!   "n": 8,
//!   "protocol": "dj",
//!   "oracle": { "n": 8, "f": "1111...", "phases": { "kind": "uniform_random" } },
//!   "middle_op": "sign_flip",
//!   "second_call": "forward_u",
//!   "seed": 1994,
//!   "trials": 1000,
//!   "output": { "path": "results/random.csv", "format": "csv" }
//! }
//! ```
//!
//! `oracle` is either an inline oracle document, `{"file": "<oracle.json>"}`
//! or `{"halting_table": "<table.json>"}` (an `f ≡ 0` oracle encoding the
//! table's `h`). Relative input paths resolve against the scenario's
//! directory; the report path resolves against the working directory and
//! side files (`halting_table_out`, `certificate_out`) against the report's
//! directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classical::{
    self, build_halting_table, check_tree, min_classical_queries, transcripts_indistinguishable,
    ClassicalOracle, HaltingTableFile, DEFAULT_BUDGET, ENCODING_V1,
};
use crate::error::{Error, Result};
use crate::hilbert::{StateJson, N_MAX_DEFAULT};
use crate::oracle::{
    bits_to_string, parse_bits, MembershipTable, OracleFile, OracleSpec, PhaseFile, PhaseFileKind,
    PhaseKind,
};
use crate::protocols::{
    self, dj_run_traced, phase_readout_traced, sample_yes_count, DJConfig, MiddleOp, SampleStats,
    SecondCall, DJ_ORACLE_CALLS,
};
use crate::report::{Format, ResultSet, RunRecord};
use crate::rng::{self, derive_seed, CounterRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Dj,
    Readout,
    ClassicalSweep,
    LowerBound,
    HaltingDemo,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Dj => "dj",
            Protocol::Readout => "readout",
            Protocol::ClassicalSweep => "classical_sweep",
            Protocol::LowerBound => "lower_bound",
            Protocol::HaltingDemo => "halting_demo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OracleRef {
    File { file: PathBuf },
    HaltingTable { halting_table: PathBuf },
    Inline(OracleFile),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub n: u32,
    pub protocol: Protocol,
    #[serde(default)]
    pub oracle: Option<OracleRef>,
    /// Second oracle for `classical_sweep` transcript comparison.
    #[serde(default)]
    pub compare_oracle: Option<OracleRef>,
    #[serde(default)]
    pub middle_op: Option<MiddleOp>,
    #[serde(default)]
    pub second_call: Option<SecondCall>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub trials: Option<u64>,
    /// Special string for `readout`.
    #[serde(default)]
    pub z: Option<u64>,
    /// Step budget for `halting_demo`.
    #[serde(default)]
    pub budget: Option<u64>,
    /// Simulated measurement shots per record (reporting only).
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
    #[serde(default)]
    pub halting_table_out: Option<PathBuf>,
    #[serde(default)]
    pub certificate_out: Option<PathBuf>,
}

/// A parsed scenario together with where it came from.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub source_name: String,
    source: String,
    base_dir: PathBuf,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &path.display().to_string(), base_dir)
    }

    pub fn parse(text: &str, source_name: &str, base_dir: PathBuf) -> Result<Self> {
        let config: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: source_name.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Ok(Self {
            config,
            source_name: source_name.to_string(),
            source: text.to_string(),
            base_dir,
        })
    }

    /// Error pointing at the first line mentioning `"key"`.
    fn invalid(&self, key: &str, message: impl Into<String>) -> Error {
        let needle = format!("\"{key}\"");
        let (line, column) = self
            .source
            .lines()
            .enumerate()
            .find_map(|(i, l)| l.find(&needle).map(|c| (i + 1, c + 1)))
            .unwrap_or((1, 1));
        Error::Parse {
            context: self.source_name.clone(),
            line,
            column,
            message: message.into(),
        }
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    fn load_oracle_file(&self, key: &str, oracle: &OracleRef) -> Result<OracleFile> {
        let read = |p: &Path| -> Result<String> {
            let full = self.resolve(p);
            if !full.exists() {
                return Err(self.invalid(
                    key,
                    format!("referenced file {} does not exist", full.display()),
                ));
            }
            fs::read_to_string(&full).map_err(|e| Error::io(full, e))
        };
        let file = match oracle {
            OracleRef::Inline(f) => f.clone(),
            OracleRef::File { file } => {
                let text = read(file)?;
                serde_json::from_str(&text).map_err(|e| Error::Parse {
                    context: self.resolve(file).display().to_string(),
                    line: e.line(),
                    column: e.column(),
                    message: e.to_string(),
                })?
            }
            OracleRef::HaltingTable { halting_table } => {
                let text = read(halting_table)?;
                let table: HaltingTableFile =
                    serde_json::from_str(&text).map_err(|e| Error::Parse {
                        context: self.resolve(halting_table).display().to_string(),
                        line: e.line(),
                        column: e.column(),
                        message: e.to_string(),
                    })?;
                if table.encoding != ENCODING_V1 {
                    return Err(self.invalid(
                        key,
                        format!("unknown machine encoding {:?}", table.encoding),
                    ));
                }
                OracleFile {
                    n: table.n,
                    f: "0".repeat(1usize << table.n.min(30)),
                    phases: PhaseFile {
                        h: Some(table.h),
                        ..PhaseFile::of_kind(PhaseFileKind::EncodeFunction)
                    },
                }
            }
        };
        if file.n != self.config.n {
            return Err(self.invalid(
                key,
                format!(
                    "oracle width {} differs from scenario width {}",
                    file.n, self.config.n
                ),
            ));
        }
        Ok(file)
    }

    fn required_oracle(&self) -> Result<OracleFile> {
        let oracle = self.config.oracle.as_ref().ok_or_else(|| {
            self.invalid(
                "protocol",
                format!(
                    "protocol {} needs an \"oracle\"",
                    self.config.protocol.name()
                ),
            )
        })?;
        self.load_oracle_file("oracle", oracle)
    }
}

/// Command-line overrides; `None` keeps the scenario's value.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub n_max: u32,
    pub dump_state: bool,
    /// Simulated projector-measurement shots per record (reporting only).
    pub shots: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: None,
            trials: None,
            out: None,
            format: None,
            n_max: N_MAX_DEFAULT,
            dump_state: false,
            shots: None,
        }
    }
}

/// Resolved output destination of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputTarget {
    pub path: Option<PathBuf>,
    pub format: Format,
}

///
/// Format precedence: `--format`, the extension of `--out`, the scenario's
/// `output.format`, the extension of `output.path`, then JSON.
pub fn output_target(scenario: &Scenario, opts: &RunOptions) -> OutputTarget {
    let spec = scenario.config.output.clone().unwrap_or_default();
    let format = opts
        .format
        .or_else(|| opts.out.as_deref().and_then(Format::from_extension))
        .or(spec.format)
        .or_else(|| spec.path.as_deref().and_then(Format::from_extension))
        .unwrap_or(Format::Json);
    let path = opts.out.clone().or(spec.path);
    OutputTarget { path, format }
}

/// Executes a scenario and collects every record, the summary and any side
/// files. Nothing is written here; see [`crate::report::write_results`].
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<ResultSet> {
    let cfg = &scenario.config;
    if cfg.n == 0 || cfg.n > opts.n_max {
        return Err(scenario.invalid(
            "n",
            format!(
                "width {} outside the supported range 1..={}",
                cfg.n, opts.n_max
            ),
        ));
    }
    if cfg.trials == Some(0) || opts.trials == Some(0) {
        return Err(scenario.invalid("trials", "trials must be at least 1"));
    }
    let mut results = match cfg.protocol {
        Protocol::Dj => run_dj(scenario, opts)?,
        Protocol::Readout => run_readout(scenario, opts)?,
        Protocol::ClassicalSweep => run_classical_sweep(scenario)?,
        Protocol::LowerBound => run_lower_bound(scenario)?,
        Protocol::HaltingDemo => run_halting_demo(scenario, opts)?,
    };
    if !opts.dump_state {
        results.state_dumps.clear();
    }
    Ok(results)
}

fn empty_results(cfg: &ScenarioConfig) -> ResultSet {
    ResultSet {
        scenario: cfg.name.clone(),
        protocol: cfg.protocol.name().to_string(),
        records: Vec::new(),
        summary: BTreeMap::new(),
        artifacts: Vec::new(),
        state_dumps: Vec::new(),
    }
}

fn record(cfg: &ScenarioConfig, protocol: &str, trial: u64, regime: &str) -> RunRecord {
    RunRecord {
        scenario: cfg.name.clone(),
        protocol: protocol.to_string(),
        trial,
        n: cfg.n,
        regime: regime.to_string(),
        inner: None,
        probability: None,
        verdict: String::new(),
        oracle_calls: 0,
        seed: None,
        x: None,
        shots: None,
        shots_yes: None,
    }
}

const SHOT_SALT: u64 = 0x5348_4f54_5321;

fn shot_count(base_seed: u64, index: u64, probability: f64, shots: u64) -> u64 {
    let mut rng = CounterRng::new(derive_seed(rng::mix64(base_seed ^ SHOT_SALT), index));
    sample_yes_count(probability, shots, &mut rng)
}

fn inner_pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

fn run_dj(scenario: &Scenario, opts: &RunOptions) -> Result<ResultSet> {
    let cfg = &scenario.config;
    let oracle_file = scenario.required_oracle()?;
    let middle = cfg.middle_op.unwrap_or(MiddleOp::SignFlip);
    let second = cfg.second_call.unwrap_or(SecondCall::ForwardU);
    let trials = opts.trials.or(cfg.trials).unwrap_or(1);
    let stochastic = oracle_file.is_stochastic();
    let master = opts.seed.or(cfg.seed).or(oracle_file.phases.seed);
    if stochastic && master.is_none() {
        return Err(scenario.invalid(
            "oracle",
            "uniform_random phases need a seed (scenario \"seed\", phases \"seed\" or --seed)",
        ));
    }
    let config = DJConfig::new(middle, second, oracle_file.phases.kind.name());
    let trial_seed = |t: u64| master.map(|m| if trials == 1 { m } else { derive_seed(m, t) });

    let runs = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(t);
            let oracle = oracle_file.build(if stochastic { seed } else { None })?;
            let (outcome, chi) = dj_run_traced(&oracle, &config)?;
            let mut rec = record(cfg, "dj", t, &config.regime);
            rec.inner = Some(inner_pair(outcome.inner));
            rec.probability = Some(outcome.probability);
            rec.verdict = outcome.verdict.to_string();
            rec.oracle_calls = outcome.oracle_calls;
            rec.seed = if stochastic { seed } else { None };
            if let Some(shots) = opts.shots.or(cfg.shots) {
                rec.shots = Some(shots);
                rec.shots_yes = Some(shot_count(
                    master.unwrap_or(0),
                    t,
                    outcome.probability,
                    shots,
                ));
            }
            let dump = opts.dump_state.then(|| chi.to_json());
            Ok((rec, dump))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut results = empty_results(cfg);
    for (rec, dump) in runs {
        if let Some(state) = dump {
            results.state_dumps.push((rec.trial, state));
        }
        results.records.push(rec);
    }

    let membership = MembershipTable::parse(cfg.n, &oracle_file.f)?;
    let probs: Vec<f64> = results
        .records
        .iter()
        .filter_map(|r| r.probability)
        .collect();
    let stats = SampleStats::of(&probs).expect("at least one trial");
    let mut counts = BTreeMap::new();
    for r in &results.records {
        *counts.entry(r.verdict.clone()).or_insert(0u64) += 1;
    }
    let s = &mut results.summary;
    s.insert("runs".into(), json!(stats.count));
    s.insert("regime".into(), json!(config.regime));
    s.insert("mean_probability".into(), json!(stats.mean));
    s.insert("stderr_probability".into(), json!(stats.stderr));
    s.insert("verdict_counts".into(), json!(counts));
    s.insert("oracle_calls_per_run".into(), json!(DJ_ORACLE_CALLS));
    s.insert("accepted".into(), json!(membership.count()));
    s.insert(
        "ground_truth".into(),
        json!(if membership.is_full() {
            "A"
        } else if membership.is_balanced() {
            "B"
        } else {
            "outside_promise"
        }),
    );
    if stochastic {
        s.insert("master_seed".into(), json!(master));
        s.insert("rng".into(), json!(rng::NAME));
        if second == SecondCall::ForwardU {
            // E|Σ e^{iθ_x}|² / 4ⁿ for iid uniform θ
            s.insert(
                "random_phase_expected_mean".into(),
                json!((-(cfg.n as f64)).exp2()),
            );
        }
    }
    Ok(results)
}

/// Table-known readout: `h` when the oracle was built from one.
fn known_h(file: &OracleFile) -> Result<Option<Vec<u8>>> {
    match (&file.phases.kind, &file.phases.h) {
        (PhaseFileKind::EncodeFunction, Some(h)) => {
            Ok(Some(parse_bits(h, 1usize << file.n, "h table")?))
        }
        _ => Ok(None),
    }
}

struct ReadoutSweep {
    records: Vec<RunRecord>,
    dumps: Vec<(u64, StateJson)>,
    recovered: Vec<u8>,
}

fn readout_records(
    cfg: &ScenarioConfig,
    oracle: &OracleSpec,
    z: u64,
    dump: bool,
    shots: Option<u64>,
) -> Result<ReadoutSweep> {
    let len = 1u64 << cfg.n;
    let runs = (0..len)
        .into_par_iter()
        .filter(|&x| x != z)
        .map(|x| {
            let (outcome, chi) = phase_readout_traced(oracle, z, x)?;
            let mut rec = record(cfg, "readout", x, "encode_function+single_call");
            rec.inner = Some(inner_pair(outcome.inner));
            rec.probability = Some(outcome.probability);
            rec.verdict = outcome.bit.to_string();
            rec.oracle_calls = outcome.oracle_calls;
            rec.x = Some(x);
            if let Some(shots) = shots {
                rec.shots = Some(shots);
                rec.shots_yes = Some(shot_count(
                    cfg.seed.unwrap_or(0),
                    x,
                    outcome.probability,
                    shots,
                ));
            }
            Ok((rec, dump.then(|| chi.to_json()), outcome.bit))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut recovered = vec![1u8; len as usize];
    let mut records = Vec::with_capacity(runs.len());
    let mut dumps = Vec::new();
    for (rec, state, bit) in runs {
        recovered[rec.trial as usize] = bit;
        if let Some(s) = state {
            dumps.push((rec.trial, s));
        }
        records.push(rec);
    }
    Ok(ReadoutSweep {
        records,
        dumps,
        recovered,
    })
}

fn run_readout(scenario: &Scenario, opts: &RunOptions) -> Result<ResultSet> {
    let cfg = &scenario.config;
    let oracle_file = scenario.required_oracle()?;
    let h = known_h(&oracle_file)?;
    let z = match (cfg.z, &h) {
        (Some(z), _) => z,
        (None, Some(h)) => h.iter().position(|&b| b == 1).ok_or_else(|| {
            scenario.invalid("oracle", "encoded h has no string with h = 1 to serve as z")
        })? as u64,
        (None, None) => {
            return Err(scenario.invalid("z", "readout needs \"z\" when h is not given"))
        }
    };
    if z >= 1u64 << cfg.n {
        return Err(scenario.invalid("z", format!("z = {z} does not fit in {} bits", cfg.n)));
    }
    if let Some(h) = &h {
        protocols::check_special_string(h, z).map_err(|e| scenario.invalid("z", e.to_string()))?;
    }
    let oracle = oracle_file.build(opts.seed.or(cfg.seed))?;
    let ReadoutSweep {
        records,
        dumps,
        recovered,
    } = readout_records(cfg, &oracle, z, opts.dump_state, opts.shots.or(cfg.shots))?;
    let mut results = empty_results(cfg);
    results.records = records;
    results.state_dumps = dumps;
    let calls = results.records.len() as u64;
    let s = &mut results.summary;
    s.insert("runs".into(), json!(calls));
    s.insert("z".into(), json!(z));
    s.insert("oracle_calls_total".into(), json!(calls));
    s.insert("recovered_h".into(), json!(bits_to_string(&recovered)));
    if let Some(h) = &h {
        s.insert("h_matches".into(), json!(*h == recovered));
    }
    Ok(results)
}

fn classical_records(
    cfg: &ScenarioConfig,
    oracle: &OracleSpec,
) -> Result<(Vec<RunRecord>, Vec<u8>)> {
    let view = ClassicalOracle::new(oracle);
    let mut answers = Vec::with_capacity(1 << cfg.n);
    let mut records = Vec::with_capacity(1 << cfg.n);
    for x in classical::full_sweep(cfg.n) {
        let answer = view.query(x)?;
        answers.push(answer);
        let mut rec = record(cfg, "classical", x, "classical_query");
        rec.verdict = answer.to_string();
        rec.oracle_calls = 1;
        rec.x = Some(x);
        records.push(rec);
    }
    Ok((records, answers))
}

fn run_classical_sweep(scenario: &Scenario) -> Result<ResultSet> {
    let cfg = &scenario.config;
    let oracle_file = scenario.required_oracle()?;
    let oracle = oracle_file.build(cfg.seed)?;
    let (records, answers) = classical_records(cfg, &oracle)?;
    let mut results = empty_results(cfg);
    results.records = records;
    let s = &mut results.summary;
    s.insert("queries".into(), json!(answers.len()));
    s.insert("answers".into(), json!(bits_to_string(&answers)));
    s.insert("all_zero".into(), json!(answers.iter().all(|&a| a == 0)));
    if let Some(other) = &cfg.compare_oracle {
        let other = scenario
            .load_oracle_file("compare_oracle", other)?
            .build(cfg.seed)?;
        let same = transcripts_indistinguishable(&oracle, &other, &classical::full_sweep(cfg.n))?;
        s.insert("indistinguishable".into(), json!(same));
    }
    Ok(results)
}

fn run_lower_bound(scenario: &Scenario) -> Result<ResultSet> {
    let cfg = &scenario.config;
    if cfg.n > classical::LOWER_BOUND_MAX_N {
        return Err(scenario.invalid(
            "n",
            format!(
                "exhaustive lower-bound search supports widths up to {}",
                classical::LOWER_BOUND_MAX_N
            ),
        ));
    }
    let mut results = empty_results(cfg);
    let mut certificates = Vec::new();
    let mut separated = true;
    for width in 1..=cfg.n {
        let bound = min_classical_queries(width)?;
        let check = check_tree(&bound.certificate, width)?;
        if !check.is_valid() {
            return Err(Error::ProtocolViolation(format!(
                "certificate for width {width} failed re-checking"
            )));
        }
        if width >= 2 {
            separated &= bound.queries > DJ_ORACLE_CALLS;
        }
        let mut rec = record(cfg, "lower_bound", u64::from(width - 1), "decision_tree");
        rec.n = width;
        rec.verdict = bound.queries.to_string();
        rec.oracle_calls = bound.queries;
        results.records.push(rec);
        certificates.push(json!({
            "n": width,
            "queries": bound.queries,
            "tables_checked": check.tables_checked,
            "certificate": bound.certificate,
        }));
    }
    let s = &mut results.summary;
    s.insert(
        "min_queries".into(),
        Value::Array(
            results
                .records
                .iter()
                .map(|r| json!(r.oracle_calls))
                .collect(),
        ),
    );
    s.insert("quantum_oracle_calls".into(), json!(DJ_ORACLE_CALLS));
    s.insert("separated_for_n_ge_2".into(), json!(separated));
    if let Some(path) = &cfg.certificate_out {
        results.artifacts.push((
            path.clone(),
            serde_json::to_string_pretty(&certificates)? + "\n",
        ));
    }
    s.insert("certificates".into(), Value::Array(certificates));
    Ok(results)
}

fn run_halting_demo(scenario: &Scenario, opts: &RunOptions) -> Result<ResultSet> {
    let cfg = &scenario.config;
    let budget = cfg.budget.unwrap_or(DEFAULT_BUDGET);
    let h = build_halting_table(cfg.n, budget)?;
    // v1 reserves x = 0 as the immediate halter
    let z = 0;
    protocols::check_special_string(&h, z)?;
    let oracle = OracleSpec::with_kind(
        MembershipTable::empty(cfg.n)?,
        PhaseKind::EncodeFunction(&h),
    )?;
    let blank = OracleSpec::with_kind(MembershipTable::empty(cfg.n)?, PhaseKind::Zero)?;

    let ReadoutSweep {
        mut records,
        dumps,
        recovered,
    } = readout_records(cfg, &oracle, z, opts.dump_state, opts.shots.or(cfg.shots))?;
    let (classical, answers) = classical_records(cfg, &oracle)?;
    records.extend(classical);
    let indistinguishable =
        transcripts_indistinguishable(&oracle, &blank, &classical::full_sweep(cfg.n))?;

    let table_file = HaltingTableFile::new(cfg.n, budget, &h);
    let mut results = empty_results(cfg);
    results.records = records;
    results.state_dumps = dumps;
    if let Some(path) = &cfg.halting_table_out {
        results.artifacts.push((
            path.clone(),
            serde_json::to_string_pretty(&table_file)? + "\n",
        ));
    }
    let quantum_calls = (1u64 << cfg.n) - 1;
    let s = &mut results.summary;
    s.insert("budget".into(), json!(budget));
    s.insert("encoding".into(), json!(ENCODING_V1));
    s.insert("z".into(), json!(z));
    s.insert("h".into(), json!(table_file.h));
    s.insert(
        "halting_count".into(),
        json!(h.iter().filter(|&&b| b == 1).count()),
    );
    s.insert("recovered_h".into(), json!(bits_to_string(&recovered)));
    s.insert("h_matches".into(), json!(recovered == h));
    s.insert("quantum_oracle_calls".into(), json!(quantum_calls));
    s.insert("classical_answers".into(), json!(bits_to_string(&answers)));
    s.insert(
        "classical_all_zero".into(),
        json!(answers.iter().all(|&a| a == 0)),
    );
    s.insert(
        "indistinguishable_from_blank".into(),
        json!(indistinguishable),
    );
    Ok(results)
}

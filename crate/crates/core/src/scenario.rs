//! Config-driven scenario runner and convergence-study harness.
//!
//! A scenario names a potential (a catalog entry or an inline record), a
//! mesh, and an ordered list of operations. Operations run in order and may
//! consume earlier results: `riccati` and `diagnose` work on the solution of
//! the most recent `solve`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::diagnostics::diagnose;
use crate::forms::{assemble, form_bounds, EllipticCoeff};
use crate::mesh::{build_exhaustion_scaled, Ball, ExhaustionScale, Mesh, Weight};
use crate::potential::{catalog, catalog_names, parse_example, ExampleSpec, Potential};
use crate::solver::{
    critical_sweep, cross_check_gauge, default_sweep_parameters, form_bounds_from_riccati, log_transform,
    riccati_residual, solve_exhaustion, Convergence, ExhaustionOptions, ExhaustionSolveReport, SweepOptions,
};
use crate::ARTIFACT_VERSION;

/// Failures that abort a run before or outside the operations themselves.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("operation `{operation}` failed: {message}")]
    Operation { operation: String, message: String },
}

impl ScenarioError {
    /// 1 operation failure, 2 config error, 3 I/O error.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Operation { .. } => 1,
            ScenarioError::Config(_) => 2,
            ScenarioError::Io(_) => 3,
        }
    }
}

fn config(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Config(msg.into())
}

fn io(path: &Path, e: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Formbound,
    Solve,
    Riccati,
    Diagnose,
    Gauge,
    Sweep,
}

impl Operation {
    pub fn name(self) -> &'static str {
        match self {
            Operation::Formbound => "formbound",
            Operation::Solve => "solve",
            Operation::Riccati => "riccati",
            Operation::Diagnose => "diagnose",
            Operation::Gauge => "gauge",
            Operation::Sweep => "sweep",
        }
    }

    /// Scalar tracked by convergence studies unless the scenario says otherwise.
    pub fn primary_quantity(self) -> &'static str {
        match self {
            Operation::Formbound => "lambda",
            Operation::Solve => "u_center",
            Operation::Riccati => "relative_residual",
            Operation::Diagnose => "log_caccioppoli_ratio",
            Operation::Gauge => "u_half",
            Operation::Sweep => "energy_growth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grading {
    Uniform,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Defaults to the catalog domain.
    pub start: Option<f64>,
    pub end: Option<f64>,
    #[serde(default = "default_elements")]
    pub elements: usize,
    /// Defaults to geometric on annuli with `end/start > 100`.
    pub grading: Option<Grading>,
}

fn default_elements() -> usize {
    1000
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            start: None,
            end: None,
            elements: default_elements(),
            grading: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExhaustionConfig {
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Defaults to logarithmic on geometric meshes.
    pub scale: Option<ExhaustionScale>,
    #[serde(default = "yes")]
    pub mollify: bool,
    #[serde(default = "default_wrh")]
    pub wrh_exponent: f64,
    pub ball: Option<Ball>,
}

fn default_levels() -> usize {
    4
}

fn yes() -> bool {
    true
}

fn default_wrh() -> f64 {
    2.0
}

impl Default for ExhaustionConfig {
    fn default() -> Self {
        ExhaustionConfig {
            levels: default_levels(),
            scale: None,
            mollify: true,
            wrh_exponent: default_wrh(),
            ball: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Parameters `1 - 2^{-j}`, `j = 1..=levels`; default 8.
    pub levels: Option<usize>,
    /// Explicit parameters; override `levels`.
    pub parameters: Option<Vec<f64>>,
    /// Defaults to the first exhaustion level.
    pub energy_domain: Option<(f64, f64)>,
    pub ball: Option<Ball>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed sup-norm gap between the FEM and Neumann-series gauges.
    #[serde(default = "default_gauge_tolerance")]
    pub gauge: f64,
    /// Slack on the Riccati-implied form bounds.
    #[serde(default = "default_riccati_tolerance")]
    pub riccati: f64,
}

fn default_gauge_tolerance() -> f64 {
    1e-5
}

fn default_riccati_tolerance() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gauge: default_gauge_tolerance(),
            riccati: default_riccati_tolerance(),
        }
    }
}

/// A declared expectation on one scalar of an operation payload.
///
/// `value` with `tolerance` (absolute) and/or `relative`, or one-sided
/// `below`/`above` bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub operation: Operation,
    pub quantity: String,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub relative: Option<f64>,
    pub below: Option<f64>,
    pub above: Option<f64>,
}

impl Expectation {
    fn validate(&self) -> Result<(), ScenarioError> {
        for (name, t) in [("tolerance", self.tolerance), ("relative", self.relative)] {
            if let Some(t) = t {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(config(format!("expectation {name} must be positive, got {t}")));
                }
            }
        }
        if self.value.is_some() && self.tolerance.is_none() && self.relative.is_none() {
            return Err(config(format!(
                "expectation on {}.{} gives a value but no tolerance",
                self.operation.name(),
                self.quantity
            )));
        }
        if self.value.is_none() && self.below.is_none() && self.above.is_none() {
            return Err(config(format!(
                "expectation on {}.{} constrains nothing",
                self.operation.name(),
                self.quantity
            )));
        }
        Ok(())
    }

    fn check(&self, observed: f64) -> bool {
        let mut ok = observed.is_finite();
        if let Some(v) = self.value {
            let allowed = self.tolerance.unwrap_or(0.0) + self.relative.unwrap_or(0.0) * v.abs();
            ok &= (observed - v).abs() <= allowed;
        }
        if let Some(b) = self.below {
            ok &= observed < b;
        }
        if let Some(b) = self.above {
            ok &= observed > b;
        }
        ok
    }
}

/// A reproducible experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Catalog id such as `hardy(n=3, c=0.16)`.
    pub example: Option<String>,
    /// Inline potential; needs explicit mesh endpoints.
    pub potential: Option<Potential>,
    /// Measure for inline potentials (flat by default).
    pub weight: Option<Weight>,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub exhaustion: ExhaustionConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub operations: Vec<Operation>,
    #[serde(default)]
    pub expect: Vec<Expectation>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Quantity followed by `study`, as `operation.quantity`.
    pub track: Option<String>,
    /// Where the run record goes when no output directory is given.
    pub output: Option<PathBuf>,
}

impl Scenario {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| config(format!("json: {e}")))?
        } else {
            toml::from_str(text).map_err(|e| config(format!("toml: {e}")))?
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.name.trim().is_empty() {
            return Err(config("scenario name is empty"));
        }
        if self.operations.is_empty() {
            return Err(config("operation list is empty"));
        }
        match (&self.example, &self.potential) {
            (Some(_), Some(_)) => return Err(config("give either `example` or `potential`, not both")),
            (None, None) => return Err(config("scenario needs an `example` or a `potential`")),
            (Some(id), None) => {
                parse_example(id).map_err(|e| config(e.to_string()))?;
            }
            (None, Some(_)) => {
                if self.mesh.start.is_none() || self.mesh.end.is_none() {
                    return Err(config("inline potentials need explicit mesh endpoints"));
                }
            }
        }
        if self.mesh.elements < 2 {
            return Err(config("mesh needs at least two elements"));
        }
        for (name, t) in [("gauge", self.tolerances.gauge), ("riccati", self.tolerances.riccati)] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(config(format!("tolerance `{name}` must be positive, got {t}")));
            }
        }
        if self.exhaustion.levels < 1 {
            return Err(config("exhaustion needs at least one level"));
        }
        for (i, op) in self.operations.iter().enumerate() {
            if matches!(op, Operation::Riccati | Operation::Diagnose) && !self.operations[..i].contains(&Operation::Solve) {
                return Err(config(format!("`{}` needs an earlier `solve`", op.name())));
            }
        }
        for e in &self.expect {
            if !self.operations.contains(&e.operation) {
                return Err(config(format!("expectation on `{}`, which is not run", e.operation.name())));
            }
            e.validate()?;
        }
        if let Some(track) = &self.track {
            let (op, _) = split_track(track)?;
            if !self.operations.contains(&op) {
                return Err(config(format!("tracked quantity `{track}` belongs to an operation that is not run")));
            }
        }
        Ok(())
    }

    /// `(operation, quantity)` followed by `study`.
    pub fn tracked(&self) -> Result<(Operation, String), ScenarioError> {
        match &self.track {
            Some(t) => split_track(t),
            None => {
                let op = self.operations[0];
                Ok((op, op.primary_quantity().to_string()))
            }
        }
    }
}

fn split_track(track: &str) -> Result<(Operation, String), ScenarioError> {
    let (op, quantity) = track
        .split_once('.')
        .ok_or_else(|| config(format!("track `{track}` is not `operation.quantity`")))?;
    let op: Operation = serde_json::from_value(Value::String(op.to_string()))
        .map_err(|_| config(format!("unknown operation `{op}` in track")))?;
    Ok((op, quantity.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationOutcome {
    pub quantity: String,
    pub observed: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationRecord {
    pub operation: Operation,
    pub verdict: Verdict,
    pub payload: Value,
    pub expectations: Vec<ExpectationOutcome>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub artifact_version: String,
    pub scenario: String,
    pub operations: Vec<OperationRecord>,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.operations.iter().all(|o| o.verdict != Verdict::Fail)
    }

    /// 0 when nothing failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn payload(&self, op: Operation) -> Option<&Value> {
        self.operations.iter().find(|o| o.operation == op).map(|o| &o.payload)
    }

    /// A numeric payload entry.
    pub fn scalar(&self, op: Operation, quantity: &str) -> Option<f64> {
        self.payload(op)?.get(quantity)?.as_f64()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run records serialize")
    }

    pub fn write(&self, path: &Path) -> Result<(), ScenarioError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        }
        std::fs::write(path, self.to_json() + "\n").map_err(|e| io(path, e))
    }
}

/// Resolved inputs shared by all operations.
struct Setup {
    mesh: Arc<Mesh>,
    sigma: Option<Potential>,
    a: EllipticCoeff,
    scale: ExhaustionScale,
}

fn setup(scenario: &Scenario) -> Result<Setup, ScenarioError> {
    let example: Option<ExampleSpec> = match &scenario.example {
        Some(id) => Some(parse_example(id).map_err(|e| config(e.to_string()))?),
        None => None,
    };
    let (domain, weight, sigma) = match &example {
        Some(ex) => (ex.domain, ex.weight, ex.potential.clone()),
        None => ((f64::NAN, f64::NAN), scenario.weight.unwrap_or(Weight::Flat), scenario.potential.clone()),
    };
    let start = scenario.mesh.start.unwrap_or(domain.0);
    let end = scenario.mesh.end.unwrap_or(domain.1);
    let grading = scenario.mesh.grading.unwrap_or(if start > 0.0 && end / start > 100.0 {
        Grading::Geometric
    } else {
        Grading::Uniform
    });
    let elements = scenario.mesh.elements;
    let mesh = match grading {
        Grading::Uniform => Mesh::uniform(start, end, elements, weight),
        Grading::Geometric => Mesh::geometric(start, end, elements, weight),
    }
    .map_err(|e| config(e.to_string()))?;
    let scale = scenario.exhaustion.scale.unwrap_or(match grading {
        Grading::Geometric => ExhaustionScale::Logarithmic,
        Grading::Uniform => ExhaustionScale::Linear,
    });
    Ok(Setup {
        mesh: Arc::new(mesh),
        sigma,
        a: EllipticCoeff::identity(),
        scale,
    })
}

/// Results later operations may read.
#[derive(Default)]
struct State {
    solved: Option<ExhaustionSolveReport>,
}

fn require_sigma(setup: &Setup) -> crate::Result<&Potential> {
    setup.sigma.as_ref().ok_or_else(|| {
        crate::Error::UnsupportedPotential("this example has no scalar potential on a 1D mesh".into())
    })
}

fn to_object<T: Serialize>(value: &T) -> Map<String, Value> {
    match serde_json::to_value(value).expect("reports serialize") {
        Value::Object(map) => map,
        other => {
            let mut map = Map::new();
            map.insert("value".into(), other);
            map
        }
    }
}

fn exhaustion_levels(scenario: &Scenario, setup: &Setup) -> crate::Result<crate::mesh::ExhaustionSpec> {
    build_exhaustion_scaled(
        (setup.mesh.start(), setup.mesh.end()),
        scenario.exhaustion.levels,
        setup.scale,
    )
}

/// Runs one operation; `Ok(None)` means a dependency is missing.
fn execute(
    op: Operation,
    scenario: &Scenario,
    setup: &Setup,
    state: &mut State,
) -> crate::Result<Option<(Map<String, Value>, bool)>> {
    let mesh = &setup.mesh;
    match op {
        Operation::Formbound => {
            let bounds = form_bounds(&assemble(mesh, &setup.a, require_sigma(setup)?)?)?;
            let mut map = to_object(&bounds);
            map.insert("lambda".into(), json!(bounds.lambda_upper));
            Ok(Some((map, true)))
        }
        Operation::Solve => {
            let sigma = require_sigma(setup)?;
            let spec = exhaustion_levels(scenario, setup)?;
            let options = ExhaustionOptions {
                mollify: scenario.exhaustion.mollify,
                ball: scenario.exhaustion.ball,
                diagnostics_domain: None,
                wrh_exponent: scenario.exhaustion.wrh_exponent,
            };
            let report = solve_exhaustion(mesh, &spec, &setup.a, sigma, &options)?;
            let mut map = to_object(&report);
            let u = report.solution();
            map.insert("u_center".into(), json!(u.eval(report.ball.center)));
            map.insert("final_drift".into(), json!(report.drifts().last().copied()));
            map.insert("log_caccioppoli_spread".into(), json!(report.log_caccioppoli_spread()));
            let ok = report.convergence != Convergence::Diverging;
            state.solved = Some(report);
            Ok(Some((map, ok)))
        }
        Operation::Riccati => {
            let Some(solved) = &state.solved else { return Ok(None) };
            let sigma = require_sigma(setup)?;
            let transform = log_transform(solved.solution(), &[solved.diagnostics_domain])?;
            let residual = riccati_residual(&transform.v, &setup.a, sigma)?;
            let bounds = form_bounds_from_riccati(&transform.v, &setup.a, scenario.tolerances.riccati)?;
            let mut map = Map::new();
            map.insert("max_residual".into(), json!(residual.max_abs));
            map.insert("relative_residual".into(), json!(residual.relative));
            map.insert("energies".into(), serde_json::to_value(&transform.energies).expect("serializable"));
            map.insert("bounds".into(), serde_json::to_value(&bounds).expect("serializable"));
            Ok(Some((map, bounds.upper_holds && bounds.lower_holds)))
        }
        Operation::Diagnose => {
            let Some(solved) = &state.solved else { return Ok(None) };
            let report = diagnose(solved.solution(), solved.diagnostics_domain, scenario.exhaustion.wrh_exponent)?;
            Ok(Some((to_object(&report), true)))
        }
        Operation::Gauge => {
            let cmp = cross_check_gauge(require_sigma(setup)?, mesh, scenario.tolerances.gauge)?;
            let map = to_object(&json!({
                "u_half": cmp.fem.center_value(),
                "series_u_half": cmp.series.center_value(),
                "difference": cmp.difference,
                "min_u": cmp.fem.min_u.min(cmp.series.min_u),
                "lambda": cmp.fem.lambda,
                "monotone": cmp.series.monotone,
                "series_terms": cmp.series.partial_sums.len(),
                "fixed_point_residual": cmp.fem.fixed_point_residual,
                "interior_energy": cmp.fem.u.dirichlet_energy(0.25, 0.75)?,
            }));
            Ok(Some((map, true)))
        }
        Operation::Sweep => {
            let sigma = require_sigma(setup)?;
            let level_one = exhaustion_levels(scenario, setup)?.levels[0];
            let ball = scenario.sweep.ball.or(scenario.exhaustion.ball).unwrap_or(Ball {
                center: 0.5 * (level_one.lo + level_one.hi),
                radius: (level_one.hi - level_one.lo) / 16.0,
            });
            let options = SweepOptions {
                ball,
                energy_domain: scenario.sweep.energy_domain.unwrap_or((level_one.lo, level_one.hi)),
            };
            let parameters = match &scenario.sweep.parameters {
                Some(p) => p.clone(),
                None => default_sweep_parameters(scenario.sweep.levels.unwrap_or(8)),
            };
            let report = critical_sweep(sigma, &setup.a, mesh, &parameters, &options)?;
            Ok(Some((to_object(&report), true)))
        }
    }
}

/// Executes the operations in order. Operation failures are recorded as
/// `fail` verdicts; only invalid configs abort.
pub fn run_scenario(scenario: &Scenario) -> Result<RunRecord, ScenarioError> {
    scenario.validate()?;
    let setup = setup(scenario)?;
    let mut state = State::default();
    let mut records = Vec::with_capacity(scenario.operations.len());
    for &op in &scenario.operations {
        let started = Instant::now();
        let outcome = execute(op, scenario, &setup, &mut state);
        let seconds = started.elapsed().as_secs_f64();
        let (verdict, payload, expectations) = match outcome {
            Ok(Some((payload, intrinsic))) => {
                let outcomes: Vec<ExpectationOutcome> = scenario
                    .expect
                    .iter()
                    .filter(|e| e.operation == op)
                    .map(|e| {
                        let observed = payload.get(&e.quantity).and_then(Value::as_f64);
                        ExpectationOutcome {
                            quantity: e.quantity.clone(),
                            observed,
                            passed: observed.is_some_and(|v| e.check(v)),
                        }
                    })
                    .collect();
                let pass = intrinsic && outcomes.iter().all(|o| o.passed);
                (if pass { Verdict::Pass } else { Verdict::Fail }, Value::Object(payload), outcomes)
            }
            Ok(None) => (
                Verdict::Skipped,
                json!({ "skipped": "needs the solution of an earlier successful solve" }),
                Vec::new(),
            ),
            Err(e) => {
                if op == Operation::Solve {
                    state.solved = None;
                }
                (Verdict::Fail, json!({ "error": e.to_string() }), Vec::new())
            }
        };
        records.push(OperationRecord {
            operation: op,
            verdict,
            payload,
            expectations,
            seconds,
        });
    }
    Ok(RunRecord {
        artifact_version: ARTIFACT_VERSION.to_string(),
        scenario: scenario.name.clone(),
        operations: records,
    })
}

/// Observed convergence order at one study level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    /// Fewer than three levels, or a zero previous difference.
    Undetermined,
    /// All differences vanish.
    Exact,
    Observed(f64),
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Order::Undetermined => Ok(()),
            Order::Exact => f.write_str("exact"),
            Order::Observed(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub level: usize,
    pub elements: usize,
    pub h: f64,
    pub value: f64,
    pub difference: Option<f64>,
    pub order: Order,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub operation: Operation,
    pub quantity: String,
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    /// Whether the tracked value is nonincreasing along the refinements.
    pub fn monotone_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].value <= w[0].value)
    }

    pub fn last_order(&self) -> Order {
        self.rows.last().map_or(Order::Undetermined, |r| r.order)
    }
}

fn richardson(values: &[f64]) -> Order {
    let n = values.len();
    if n < 2 {
        return Order::Undetermined;
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let tiny = |d: f64| d.abs() <= 4.0 * f64::EPSILON * scale;
    let last = values[n - 1] - values[n - 2];
    if values.windows(2).all(|w| tiny(w[1] - w[0])) {
        return Order::Exact;
    }
    if n < 3 {
        return Order::Undetermined;
    }
    let previous = values[n - 2] - values[n - 3];
    if tiny(previous) || tiny(last) {
        return Order::Undetermined;
    }
    Order::Observed((previous / last).abs().log2())
}

/// Reruns the scenario on meshes with `elements * 2^k` elements and writes
/// `level,elements,h,value,difference,order` rows to `out`, flushing after
/// every level so a failure leaves the partial table behind.
pub fn convergence_study<W: Write>(
    scenario: &Scenario,
    refinements: usize,
    out: W,
) -> Result<StudyTable, ScenarioError> {
    if refinements < 2 {
        return Err(config(format!("a study needs at least 2 refinements, got {refinements}")));
    }
    scenario.validate()?;
    let (op, quantity) = scenario.tracked()?;
    let mut writer = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| ScenarioError::Io(format!("csv: {e}"));
    writer
        .write_record(["level", "elements", "h", "value", "difference", "order"])
        .map_err(csv_err)?;
    let mut table = StudyTable {
        operation: op,
        quantity: quantity.clone(),
        rows: Vec::new(),
    };
    let mut values = Vec::new();
    for level in 0..refinements {
        let mut refined = scenario.clone();
        refined.mesh.elements = scenario.mesh.elements << level;
        let record = run_scenario(&refined)?;
        let entry = record.operations.iter().find(|o| o.operation == op).expect("tracked op is run");
        let value = match (entry.verdict, entry.payload.get(&quantity).and_then(Value::as_f64)) {
            (Verdict::Fail | Verdict::Skipped, _) | (_, None) => {
                writer.flush().map_err(|e| ScenarioError::Io(e.to_string()))?;
                let message = entry
                    .payload
                    .get("error")
                    .and_then(Value::as_str)
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("no numeric `{quantity}` at level {level}"));
                return Err(ScenarioError::Operation {
                    operation: op.name().to_string(),
                    message,
                });
            }
            (_, Some(v)) => v,
        };
        values.push(value);
        let h = setup(&refined)?.mesh.max_element_length();
        let row = StudyRow {
            level,
            elements: refined.mesh.elements,
            h,
            value,
            difference: (values.len() > 1).then(|| value - values[values.len() - 2]),
            order: richardson(&values),
        };
        writer
            .write_record([
                row.level.to_string(),
                row.elements.to_string(),
                row.h.to_string(),
                row.value.to_string(),
                row.difference.map(|d| d.to_string()).unwrap_or_default(),
                row.order.to_string(),
            ])
            .map_err(csv_err)?;
        writer.flush().map_err(|e| ScenarioError::Io(e.to_string()))?;
        table.rows.push(row);
    }
    Ok(table)
}

/// Human-readable listing of every catalog entry at its default parameters.
pub fn emit_catalog() -> String {
    let mut out = String::new();
    for signature in catalog_names() {
        let name = signature.split('(').next().unwrap_or(signature);
        let ex = match catalog(name, &BTreeMap::new()) {
            Ok(ex) => ex,
            Err(e) => {
                let _ = writeln!(out, "{signature}: unavailable ({e})");
                continue;
            }
        };
        let _ = writeln!(out, "{signature}");
        let _ = writeln!(out, "  default: {}", ex.id);
        let _ = writeln!(out, "  {}", ex.summary);
        let weight = match ex.weight {
            Weight::Flat => "flat".to_string(),
            Weight::Radial { n } => format!("radial, n = {n}"),
        };
        let _ = writeln!(out, "  measure: {weight}; domain: ({}, {})", ex.domain.0, ex.domain.1);
        if let Some((plus, minus)) = ex.exponents {
            let _ = writeln!(
                out,
                "  exponents: alpha+- = (2-n)/2 +- sqrt(((n-2)/2)^2 - c) -> alpha+ = {plus}, alpha- = {minus}"
            );
        }
        if let Some(g) = &ex.certificate {
            let _ = writeln!(out, "  certificate: Gamma = g(r) x/r, g = {}", serde_json::to_string(g).unwrap_or_default());
        }
        if let Some(u) = &ex.solution {
            let _ = writeln!(out, "  solution: {}", serde_json::to_string(u).unwrap_or_default());
        }
        if ex.supercritical {
            let _ = writeln!(out, "  supercritical: no positive solution");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_operations_is_config_error() {
        let err = Scenario::parse("name = \"x\"\nexample = \"constant\"\noperations = []\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn riccati_needs_prior_solve() {
        let err = Scenario::parse("name = \"x\"\nexample = \"constant\"\noperations = [\"riccati\", \"solve\"]\n");
        assert!(matches!(err, Err(ScenarioError::Config(_))));
    }

    #[test]
    fn json_and_toml_agree() {
        let t = Scenario::parse("name = \"x\"\nexample = \"constant(q=1)\"\noperations = [\"formbound\"]\n").unwrap();
        let j = Scenario::parse(r#"{"name": "x", "example": "constant(q=1)", "operations": ["formbound"]}"#).unwrap();
        assert_eq!(t, j);
    }

    #[test]
    fn richardson_orders() {
        assert_eq!(richardson(&[1.0, 1.0, 1.0]), Order::Exact);
        assert_eq!(richardson(&[1.0, 2.0]), Order::Undetermined);
        match richardson(&[1.0 + 1.0, 1.0 + 0.25, 1.0 + 0.0625]) {
            Order::Observed(p) => assert!((p - 2.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_example_rejected() {
        let err = Scenario::parse("name = \"x\"\nexample = \"nope\"\noperations = [\"formbound\"]\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn catalog_listing_mentions_formulas() {
        let text = emit_catalog();
        assert!(text.contains("hardy"));
        assert!(text.contains("alpha+-"));
        assert!(text.contains("Gamma = sin r"));
    }
}

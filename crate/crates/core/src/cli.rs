//! Batch entry point: JSON run configurations, experiment dispatch, and
//! deterministic file emission.
//!
//! A run writes its tabular results as CSV (UTF-8, header row, `.` decimal
//! separator), structured reports and designs as JSON, and one `manifest.json`
//! echoing the full configuration, the seed, the code version, and every file
//! the run produced. Identical config + seed gives byte-identical result
//! files; only the manifest timestamps differ.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::designs::{causal_cost, DesignFile};
use crate::error::{Error, Result};
use crate::mix_seed;
use crate::model::{CostPair, DiscreteModel, ModelParams};
use crate::simulator::{
    feedback_containment_check, run_block, verify_achievability, Scenario, StationaryPolicy,
};
use crate::solver::{
    log_spaced_lambdas, pareto_frontier_causal, solve_noncausal_feedback, Frontier, SolverSettings,
};

/// Experiment selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// causal-causal Pareto frontier
    Region,
    /// causal-encoder/noncausal-decoder-with-feedback frontier
    RegionFeedback,
    /// Monte Carlo blocks of a saved design
    Simulate,
    /// achievability-gap schedule for a saved design
    Verify,
    /// exact binary time-sharing example
    BinaryExample,
    /// affine anchor curve
    Affine,
    /// random feedback/genie policies against the causal frontier
    Containment,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Region => "region",
            Command::RegionFeedback => "region-feedback",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::BinaryExample => "binary-example",
            Command::Affine => "affine",
            Command::Containment => "containment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCfg {
    #[serde(alias = "Q")]
    pub q: f64,
    #[serde(alias = "N")]
    pub n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridsCfg {
    pub points: usize,
    pub span_sigmas: f64,
}

impl Default for GridsCfg {
    fn default() -> Self {
        Self { points: 64, span_sigmas: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverCfg {
    /// explicit weights; `null` means 25 log-spaced weights on [1e-3, 1e3]
    pub lambda_schedule: Option<Vec<f64>>,
    pub restarts: usize,
    pub max_alternations: usize,
    pub tolerance: f64,
    pub penalty_weight: Option<f64>,
}

impl Default for SolverCfg {
    fn default() -> Self {
        Self {
            lambda_schedule: None,
            restarts: 4,
            max_alternations: 60,
            tolerance: 1e-9,
            penalty_weight: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulatorCfg {
    pub n: usize,
    pub n_schedule: Vec<usize>,
    pub seeds: usize,
    /// achievability pass threshold; `null` means `5 / sqrt(max n)`
    pub eps_target: Option<f64>,
}

impl Default for SimulatorCfg {
    fn default() -> Self {
        Self {
            n: 100_000,
            n_schedule: vec![1_000, 10_000, 100_000],
            seeds: 20,
            eps_target: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeedbackCfg {
    pub w1_size: usize,
    pub decoder_x0_aware: bool,
}

impl Default for FeedbackCfg {
    fn default() -> Self {
        Self { w1_size: 2, decoder_x0_aware: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContainmentCfg {
    pub trials: usize,
    pub genie_trials: usize,
}

impl Default for ContainmentCfg {
    fn default() -> Self {
        Self { trials: 200, genie_trials: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AffineCfg {
    pub a_grid: Vec<f64>,
}

impl Default for AffineCfg {
    fn default() -> Self {
        // 51 gains on [-1.5, 1.0]
        Self { a_grid: (0..51).map(|i| -1.5 + 0.05 * i as f64).collect() }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A validated run configuration with all defaults materialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelCfg,
    #[serde(default)]
    pub grids: GridsCfg,
    #[serde(default)]
    pub solver: SolverCfg,
    #[serde(default)]
    pub simulator: SimulatorCfg,
    #[serde(default)]
    pub feedback: FeedbackCfg,
    #[serde(default)]
    pub containment: ContainmentCfg,
    #[serde(default)]
    pub affine: AffineCfg,
    #[serde(default)]
    pub design_path: Option<PathBuf>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dump_trajectories: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.model.q.is_finite() && self.model.q > 0.0) {
            return bad(format!("model.q must be > 0 (got {})", self.model.q));
        }
        if !(self.model.n.is_finite() && self.model.n > 0.0) {
            return bad(format!("model.n must be > 0 (got {})", self.model.n));
        }
        if self.grids.points < 2 {
            return bad(format!("grids.points must be >= 2 (got {})", self.grids.points));
        }
        if !(self.grids.span_sigmas.is_finite() && self.grids.span_sigmas > 0.0) {
            return bad(format!(
                "grids.span_sigmas must be > 0 (got {})",
                self.grids.span_sigmas
            ));
        }
        if let Some(schedule) = &self.solver.lambda_schedule {
            if schedule.is_empty() {
                return bad("solver.lambda_schedule must be nonempty".into());
            }
            if schedule.iter().any(|&l| !(l.is_finite() && l >= 0.0)) {
                return bad("solver.lambda_schedule entries must be >= 0".into());
            }
        }
        if self.solver.restarts < 1 {
            return bad(format!("solver.restarts must be >= 1 (got {})", self.solver.restarts));
        }
        if self.solver.max_alternations < 1 {
            return bad(format!(
                "solver.max_alternations must be >= 1 (got {})",
                self.solver.max_alternations
            ));
        }
        if !(self.solver.tolerance.is_finite() && self.solver.tolerance > 0.0) {
            return bad(format!(
                "solver.tolerance must be > 0 (got {})",
                self.solver.tolerance
            ));
        }
        if let Some(mu) = self.solver.penalty_weight {
            if !(mu.is_finite() && mu > 0.0) {
                return bad(format!("solver.penalty_weight must be > 0 (got {mu})"));
            }
        }
        if self.simulator.n < 1 {
            return bad(format!("simulator.n must be >= 1 (got {})", self.simulator.n));
        }
        if self.simulator.seeds < 1 {
            return bad(format!("simulator.seeds must be >= 1 (got {})", self.simulator.seeds));
        }
        if self.simulator.n_schedule.is_empty() {
            return bad("simulator.n_schedule must be nonempty".into());
        }
        if self.simulator.n_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return bad("simulator.n_schedule must be strictly increasing".into());
        }
        if self.simulator.n_schedule.iter().any(|&n| n < 2) {
            return bad("simulator.n_schedule entries must be >= 2".into());
        }
        if self.feedback.w1_size < 1 {
            return bad(format!("feedback.w1_size must be >= 1 (got {})", self.feedback.w1_size));
        }
        if self.containment.trials + self.containment.genie_trials < 1 {
            return bad("containment needs at least one trial".into());
        }
        if self.affine.a_grid.is_empty() {
            return bad("affine.a_grid must be nonempty".into());
        }
        if self.affine.a_grid.iter().any(|a| !a.is_finite()) {
            return bad("affine.a_grid entries must be finite".into());
        }
        if matches!(self.command, Command::Simulate | Command::Verify) && self.design_path.is_none()
        {
            return bad(format!(
                "command {} requires design_path",
                self.command.name()
            ));
        }
        Ok(())
    }

    fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.model.q, self.model.n)
    }

    fn discrete_model(&self) -> Result<DiscreteModel> {
        DiscreteModel::with_grids(self.params()?, self.grids.points, self.grids.span_sigmas)
    }

    fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            lambda_schedule: self
                .solver
                .lambda_schedule
                .clone()
                .unwrap_or_else(|| log_spaced_lambdas(25, 1e-3, 1e3)),
            restarts: self.solver.restarts,
            max_alternations: self.solver.max_alternations,
            tolerance: self.solver.tolerance,
            penalty_weight: self.solver.penalty_weight,
            seed: self.seed,
        }
    }
}

/// Parse and validate a JSON run configuration; all defaults are filled in
/// (grids 64 points at ±4σ, 20 seeds, 25 log-spaced λ weights on [1e-3, 1e3]).
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// What a run produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub message: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    code_version: &'a str,
    seed: u64,
    wall_time_secs: f64,
    created_unix_secs: u64,
    outputs: &'a [String],
    config: &'a RunConfig,
}

struct Emitter {
    out_dir: PathBuf,
    files: Vec<String>,
}

impl Emitter {
    fn new(out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir)?;
        Ok(Self { out_dir: out_dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        std::fs::write(self.out_dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    fn finish(mut self, config: &RunConfig, started: Instant, message: String) -> Result<RunSummary> {
        let manifest = Manifest {
            command: config.command.name(),
            code_version: env!("CARGO_PKG_VERSION"),
            seed: config.seed,
            wall_time_secs: started.elapsed().as_secs_f64(),
            created_unix_secs: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs: &self.files,
            config,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(self.out_dir.join("manifest.json"), text)?;
        self.files.push("manifest.json".to_string());
        Ok(RunSummary { out_dir: self.out_dir, files: self.files, message })
    }
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn frontier_csv<D>(frontier: &Frontier<D>) -> String {
    let mut csv = String::from("lambda,P,S,slack,design_id\n");
    for (i, pt) in frontier.points.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},design_{i:03}\n",
            fmt(pt.lambda),
            fmt(pt.costs.p),
            fmt(pt.costs.s),
            fmt(pt.slack),
        ));
    }
    csv
}

#[derive(Serialize)]
struct NamedDesign {
    id: String,
    design: DesignFile,
}

fn load_causal_design(config: &RunConfig) -> Result<(DiscreteModel, crate::designs::CausalDesign)> {
    let path = config.design_path.as_ref().expect("validated");
    let text = std::fs::read_to_string(path)?;
    let doc: DesignFile = serde_json::from_str(&text)?;
    doc.into_causal()
}

/// Run the configured experiment, writing result files and the manifest into
/// the output directory. Returns the emitted files; errors carry context as a
/// machine-readable record at the binary level.
pub fn dispatch(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    let started = Instant::now();
    let mut emitter = Emitter::new(&config.out_dir)?;

    let message = match config.command {
        Command::Region => {
            let model = config.discrete_model()?;
            let frontier = pareto_frontier_causal(&model, &config.solver_settings())?;
            emitter.write("frontier.csv", frontier_csv(&frontier))?;
            let designs: Vec<NamedDesign> = frontier
                .points
                .iter()
                .enumerate()
                .map(|(i, pt)| NamedDesign {
                    id: format!("design_{i:03}"),
                    design: DesignFile::from_causal(&pt.design, &model),
                })
                .collect();
            emitter.write_json("designs.json", &designs)?;
            emitter.write_json("frontier_meta.json", &frontier.meta)?;
            format!(
                "causal frontier: {} envelope points, P in [{}, {}]",
                frontier.points.len(),
                fmt(frontier.points.first().map(|p| p.costs.p).unwrap_or(f64::NAN)),
                fmt(frontier.points.last().map(|p| p.costs.p).unwrap_or(f64::NAN)),
            )
        }
        Command::RegionFeedback => {
            let model = config.discrete_model()?;
            let frontier = solve_noncausal_feedback(
                &model,
                config.feedback.w1_size,
                config.feedback.decoder_x0_aware,
                &config.solver_settings(),
            )?;
            emitter.write("frontier_feedback.csv", frontier_csv(&frontier))?;
            let designs: Vec<NamedDesign> = frontier
                .points
                .iter()
                .enumerate()
                .map(|(i, pt)| NamedDesign {
                    id: format!("design_{i:03}"),
                    design: DesignFile::from_feedback(&pt.design, &model),
                })
                .collect();
            emitter.write_json("designs_feedback.json", &designs)?;
            emitter.write_json("frontier_meta.json", &frontier.meta)?;
            let min_slack = frontier
                .points
                .iter()
                .map(|p| p.slack)
                .fold(f64::INFINITY, f64::min);
            format!(
                "feedback frontier: {} points, min slack {} nats ({} bits), {} warnings",
                frontier.points.len(),
                fmt(min_slack),
                fmt(min_slack / std::f64::consts::LN_2),
                frontier.meta.warnings.len(),
            )
        }
        Command::Simulate => {
            let (model, design) = load_causal_design(config)?;
            let n = config.simulator.n;
            let policy = StationaryPolicy::from_causal_design(&design, &model, n)?;
            let mut csv = String::from("seed_index,seed,n,c_P,c_S,se_P,se_S\n");
            for k in 0..config.simulator.seeds {
                let seed = mix_seed(config.seed, k as u64);
                let run = run_block(
                    &policy,
                    Scenario::CausalCausal,
                    &model.params,
                    n,
                    seed,
                    config.dump_trajectories,
                )?;
                csv.push_str(&format!(
                    "{k},{seed},{n},{},{},{},{}\n",
                    fmt(run.stats.c_p),
                    fmt(run.stats.c_s),
                    fmt(run.stats.se_p),
                    fmt(run.stats.se_s),
                ));
                if let Some(rows) = run.trajectory {
                    let mut bytes = Vec::with_capacity(rows.len() * 48);
                    for row in rows {
                        for v in row {
                            bytes.extend_from_slice(&v.to_le_bytes());
                        }
                    }
                    emitter.write(&format!("trajectory_{k:03}.bin"), bytes)?;
                }
            }
            emitter.write("simulation.csv", csv)?;
            format!("simulated {} blocks of n = {n}", config.simulator.seeds)
        }
        Command::Verify => {
            let (model, design) = load_causal_design(config)?;
            let targets = causal_cost(&design, &model)?;
            let seeds: Vec<u64> =
                (0..config.simulator.seeds).map(|k| mix_seed(config.seed, k as u64)).collect();
            let max_n = *config.simulator.n_schedule.last().unwrap();
            let eps = config
                .simulator
                .eps_target
                .unwrap_or_else(|| 5.0 / (max_n as f64).sqrt());
            let report = verify_achievability(
                &design,
                &model,
                targets,
                &config.simulator.n_schedule,
                &seeds,
                eps,
            )?;
            let mut csv = String::from("n,mean_gap,se\n");
            for g in &report.per_length {
                csv.push_str(&format!("{},{},{}\n", g.n, fmt(g.mean_gap), fmt(g.se)));
            }
            emitter.write("achievability.csv", csv)?;
            emitter.write_json("achievability.json", &report)?;
            format!(
                "achievability: final gap {} (target {}), slope {}, pass = {}",
                fmt(report.final_gap),
                fmt(report.eps_target),
                fmt(report.loglog_slope),
                report.pass,
            )
        }
        Command::BinaryExample => {
            let report = crate::binary_example::verify_infeasibility_report()?;
            emitter.write_json("binary_example.json", &report)?;
            emitter.write("binary_example.txt", report.to_text())?;
            format!(
                "binary example: min single-shot distance {}, pass = {}",
                fmt(report.fact_b_min_distance),
                report.pass,
            )
        }
        Command::Affine => {
            let sample =
                crate::affine::gaussian_frontier_sample(config.params()?, &config.affine.a_grid)?;
            let mut csv = String::from("a,P,S\n");
            for (a, c) in sample.gains.iter().zip(&sample.samples) {
                csv.push_str(&format!("{},{},{}\n", fmt(*a), fmt(c.p), fmt(c.s)));
            }
            emitter.write("affine.csv", csv)?;
            let mut csv = String::from("P,S\n");
            for c in &sample.envelope {
                csv.push_str(&format!("{},{}\n", fmt(c.p), fmt(c.s)));
            }
            emitter.write("affine_envelope.csv", csv)?;
            format!("affine curve: {} gains, {} envelope points", sample.gains.len(), sample.envelope.len())
        }
        Command::Containment => {
            let model = config.discrete_model()?;
            let frontier = pareto_frontier_causal(&model, &config.solver_settings())?;
            emitter.write("frontier.csv", frontier_csv(&frontier))?;
            let envelope: Vec<CostPair> = frontier.cost_points();
            let report = feedback_containment_check(
                &model,
                &envelope,
                config.containment.trials,
                config.containment.genie_trials,
                config.simulator.n,
                mix_seed(config.seed, 0xfeed),
            )?;
            let mut csv = String::from(
                "scenario,family,c_P,c_S,se_S,envelope_S,below_envelope,band,violation\n",
            );
            for row in &report.rows {
                csv.push_str(&format!(
                    "{:?},{:?},{},{},{},{},{},{},{}\n",
                    row.scenario,
                    row.family,
                    fmt(row.c_p),
                    fmt(row.c_s),
                    fmt(row.se_s),
                    fmt(row.envelope_s),
                    fmt(row.below_envelope),
                    fmt(row.band),
                    row.violation as u8,
                ));
            }
            emitter.write("containment.csv", csv)?;
            format!(
                "containment: {} trials, {} violations, pass = {}",
                report.rows.len(),
                report.violations,
                report.pass,
            )
        }
    };

    emitter.finish(config, started, message)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let config = parse_config(r#"{"command": "affine", "model": {"Q": 1, "N": 1}}"#).unwrap();
        assert_eq!(config.command, Command::Affine);
        assert_eq!(config.grids.points, 64);
        assert_eq!(config.grids.span_sigmas, 4.0);
        assert_eq!(config.simulator.seeds, 20);
        assert!(config.solver.lambda_schedule.is_none());
        let settings = config.solver_settings();
        assert_eq!(settings.lambda_schedule.len(), 25);
        assert!((settings.lambda_schedule[0] - 1e-3).abs() < 1e-15);
        assert!((settings.lambda_schedule[24] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn negative_q_names_field_and_bound() {
        let err = parse_config(r#"{"command": "affine", "model": {"Q": -1, "N": 1}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("model.q"), "{msg}");
        assert!(msg.contains("> 0"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse_config(
            r#"{"command": "affine", "model": {"Q": 1, "N": 1}, "grdis": {"points": 8}}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown field"), "{msg}");
        assert!(msg.contains("grdis"), "{msg}");
    }

    #[test]
    fn simulate_requires_design_path() {
        let err =
            parse_config(r#"{"command": "simulate", "model": {"Q": 1, "N": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("design_path"));
    }

    #[test]
    fn config_roundtrip_is_structural_identity() {
        let text = r#"{
            "command": "region",
            "model": {"Q": 2.0, "N": 0.5},
            "grids": {"points": 16, "span_sigmas": 3.5},
            "solver": {"lambda_schedule": [0.1, 1.0], "restarts": 2, "max_alternations": 10, "tolerance": 1e-8, "penalty_weight": null},
            "seed": 99
        }"#;
        let config = parse_config(text).unwrap();
        let serialized = serde_json::to_string(&config).unwrap();
        let reparsed = parse_config(&serialized).unwrap();
        assert_eq!(config, reparsed);
    }

    #[test]
    fn binary_example_dispatch_writes_report_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut config =
            parse_config(r#"{"command": "binary-example", "model": {"Q": 1, "N": 1}}"#).unwrap();
        config.out_dir = dir.path().to_path_buf();
        let summary = dispatch(&config).unwrap();
        assert!(summary.files.contains(&"binary_example.json".to_string()));
        assert!(summary.files.contains(&"binary_example.txt".to_string()));
        assert!(summary.files.contains(&"manifest.json".to_string()));
        let manifest_text =
            std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let manifest: serde_json::Value = serde_json::from_str(&manifest_text).unwrap();
        let listed: Vec<String> = manifest["outputs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap().to_string())
            .collect();
        // every emitted file is referenced by the manifest
        for entry in std::fs::read_dir(dir.path()).unwrap() {
            let name = entry.unwrap().file_name().into_string().unwrap();
            assert!(
                listed.contains(&name) || name == "manifest.json",
                "orphan output {name}"
            );
        }
    }

    #[test]
    fn verify_and_simulate_dispatch_with_trajectory_dump() {
        let dir = tempfile::tempdir().unwrap();
        // build a tiny design file out of a region run
        let mut region = parse_config(
            r#"{"command": "region", "model": {"Q": 1, "N": 1},
                "grids": {"points": 8},
                "solver": {"lambda_schedule": [0.5], "restarts": 2, "max_alternations": 10},
                "seed": 2}"#,
        )
        .unwrap();
        region.out_dir = dir.path().join("region");
        dispatch(&region).unwrap();
        let designs: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(region.out_dir.join("designs.json")).unwrap(),
        )
        .unwrap();
        let design_path = dir.path().join("design.json");
        std::fs::write(&design_path, serde_json::to_string(&designs[0]["design"]).unwrap())
            .unwrap();

        let mut verify = parse_config(&format!(
            r#"{{"command": "verify", "model": {{"Q": 1, "N": 1}},
                 "design_path": {:?},
                 "simulator": {{"n_schedule": [500, 2000], "seeds": 4}},
                 "seed": 3}}"#,
            design_path.to_str().unwrap()
        ))
        .unwrap();
        verify.out_dir = dir.path().join("verify");
        let summary = dispatch(&verify).unwrap();
        assert!(summary.files.contains(&"achievability.csv".to_string()));
        assert!(summary.files.contains(&"achievability.json".to_string()));

        let mut simulate = parse_config(&format!(
            r#"{{"command": "simulate", "model": {{"Q": 1, "N": 1}},
                 "design_path": {:?},
                 "simulator": {{"n": 250, "seeds": 2}},
                 "dump_trajectories": true,
                 "seed": 3}}"#,
            design_path.to_str().unwrap()
        ))
        .unwrap();
        simulate.out_dir = dir.path().join("sim");
        let summary = dispatch(&simulate).unwrap();
        assert!(summary.files.contains(&"trajectory_000.bin".to_string()));
        let bytes = std::fs::read(simulate.out_dir.join("trajectory_001.bin")).unwrap();
        // 250 rows of 6 little-endian f64s
        assert_eq!(bytes.len(), 250 * 6 * 8);
        let first = f64::from_le_bytes(bytes[0..8].try_into().unwrap());
        assert_eq!(first, 0.0, "first column is the time-share symbol index");
    }

    #[test]
    fn region_dispatch_endpoints_match_affine_anchors() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = parse_config(
            r#"{"command": "region", "model": {"Q": 1, "N": 1},
                "solver": {"lambda_schedule": [0.001, 0.01, 0.1, 0.3, 1.0, 3.0, 10.0, 100.0, 1000.0],
                           "restarts": 3, "max_alternations": 40},
                "seed": 60}"#,
        )
        .unwrap();
        config.out_dir = dir.path().to_path_buf();
        dispatch(&config).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("frontier.csv")).unwrap();
        let rows: Vec<Vec<f64>> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').take(4).map(|v| v.parse().unwrap()).collect())
            .collect();
        assert!(rows.len() >= 2);
        let (first, last) = (&rows[0], &rows[rows.len() - 1]);
        // columns: lambda, P, S, slack
        assert!(first[1].abs() <= 0.05 && (first[2] - 0.5).abs() <= 0.05, "{first:?}");
        assert!((last[1] - 1.0).abs() <= 0.05 && last[2].abs() <= 0.05, "{last:?}");
    }

    #[test]
    fn containment_dispatch_reports_zero_violations() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = parse_config(
            r#"{"command": "containment", "model": {"Q": 1, "N": 1},
                "grids": {"points": 32},
                "solver": {"lambda_schedule": [0.001, 0.05, 0.3, 1.0, 10.0, 1000.0],
                           "restarts": 3, "max_alternations": 30},
                "containment": {"trials": 20, "genie_trials": 5},
                "simulator": {"n": 20000},
                "seed": 61}"#,
        )
        .unwrap();
        config.out_dir = dir.path().to_path_buf();
        let summary = dispatch(&config).unwrap();
        assert!(summary.message.contains("0 violations"), "{}", summary.message);
        let csv = std::fs::read_to_string(dir.path().join("containment.csv")).unwrap();
        let violations: u32 = csv
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<u32>().unwrap())
            .sum();
        assert_eq!(violations, 0);
    }

    #[test]
    fn affine_dispatch_is_byte_identical_across_runs() {
        let run = |dir: &Path| {
            let mut config =
                parse_config(r#"{"command": "affine", "model": {"Q": 1, "N": 1}, "seed": 5}"#)
                    .unwrap();
            config.out_dir = dir.to_path_buf();
            dispatch(&config).unwrap();
            std::fs::read(dir.join("affine.csv")).unwrap()
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        assert_eq!(run(d1.path()), run(d2.path()));
    }
}

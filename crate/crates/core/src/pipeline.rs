//! Stage orchestration: design in, sequences, BOPs, program, trace and
//! scene out, with a machine-readable report and one exit code per run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cell_match::{select_cell, Bop, CellDescription, SelectError};
use crate::codegen::{default_templates, generate_program, LineRange, PlProgram};
use crate::design::{build_joint_register, extract_recipes, load_design, DesignDoc};
use crate::feasibility::{filter_sequences_with, DirectionMode, FeasibilityParams, DEFAULT_STEP_RATIO};
use crate::liaison::build_liaison_graph;
use crate::par::Exec;
use crate::pl::{self, interpret, ExecutionTrace, PlError};
use crate::sequencer::{enumerate_sequences_with, AssemblySequence, DEFAULT_CAP};
use crate::tooling::{enrich_sequence, load_tooling, ToolingDb};
use crate::twin::{SceneDoc, Twin};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NO_SEQUENCE: u8 = 2;
pub const EXIT_NO_CELL: u8 = 3;
pub const EXIT_SIMULATION: u8 = 4;

pub const SEQUENCES_FILE: &str = "sequences.json";
pub const BOP_FILE: &str = "bop.json";
pub const PROGRAM_FILE: &str = "program.pl";
pub const PROGRAM_MAP_FILE: &str = "program.map.json";
pub const TRACE_FILE: &str = "trace.json";
pub const SCENE_FILE: &str = "scene.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Plan,
    Match,
    Codegen,
    Simulate,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub cap: usize,
    pub step_ratio: f64,
    pub directions: DirectionMode,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            cap: DEFAULT_CAP,
            step_ratio: DEFAULT_STEP_RATIO,
            directions: DirectionMode::Axes,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

/// Input file locations; which ones a command needs depends on its stages.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Paths {
    pub design: Option<PathBuf>,
    pub tooling: Option<PathBuf>,
    pub cells: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: StageStatus,
    /// Wall-clock seconds.
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    InvalidInput,
    MissingTooling,
    MissingResource,
    InfeasibleGeometry,
    Unreachable,
    InCollision,
    RuntimeError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feedback {
    pub stage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op_id: Option<String>,
    pub reason: Reason,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Kpis {
    pub op_count: usize,
    pub twin_time_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub command: Command,
    pub exit_code: u8,
    pub stages: Vec<StageRecord>,
    pub feedback: Vec<Feedback>,
    pub artifacts: Vec<String>,
    pub kpis: Kpis,
}

impl PipelineReport {
    pub fn ok(&self) -> bool {
        self.exit_code == EXIT_OK
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for st in &self.stages {
            let status = match st.status {
                StageStatus::Ok => "ok",
                StageStatus::Failed => "FAILED",
            };
            s += &format!("{:<12} {:<7} {:.3}s\n", st.stage, status, st.duration);
        }
        for f in &self.feedback {
            let at = [f.sequence_id.as_deref(), f.op_id.as_deref()]
                .into_iter()
                .flatten()
                .collect::<Vec<_>>()
                .join("/");
            let reason = serde_json::to_value(f.reason).unwrap();
            s += &format!("  [{}] {} {}: {}\n", f.stage, reason.as_str().unwrap(), at, f.detail);
        }
        s += &format!(
            "ops {}  twin time {:.3}s  exit {}\n",
            self.kpis.op_count, self.kpis.twin_time_total, self.exit_code
        );
        s
    }
}

/// Output of the plan stage, re-read by `match`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequencesDoc {
    pub design_id: String,
    pub truncated: bool,
    pub sequences: Vec<AssemblySequence>,
    /// Ids of the sequences that passed the geometric filter.
    pub feasible: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProgramMap {
    bop_id: String,
    cell_id: String,
    provenance: Vec<LineRange>,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot write `{path}`: {message}")]
    Io { path: String, message: String },
}

/// Stage failure carrying its exit code; feedback is already recorded.
struct Halt(u8);

struct Run {
    command: Command,
    paths: Paths,
    opts: Options,
    stages: Vec<StageRecord>,
    feedback: Vec<Feedback>,
    artifacts: Vec<String>,
    kpis: Kpis,
}

fn feedback(stage: &str, reason: Reason, detail: impl Into<String>) -> Feedback {
    Feedback {
        stage: stage.into(),
        sequence_id: None,
        op_id: None,
        reason,
        detail: detail.into(),
    }
}

fn json_pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("artifact serializes") + "\n"
}

/// Accepts a single cell object or a list of cells.
pub fn load_cells(bytes: &[u8]) -> Result<Vec<CellDescription>, String> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        Many(Vec<CellDescription>),
        One(Box<CellDescription>),
    }
    match serde_json::from_slice::<OneOrMany>(bytes).map_err(|e| e.to_string())? {
        OneOrMany::Many(v) => Ok(v),
        OneOrMany::One(c) => Ok(vec![*c]),
    }
}

impl Run {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T, Halt>) -> Result<T, Halt> {
        let t0 = Instant::now();
        let r = f(self);
        self.stages.push(StageRecord {
            stage: name.into(),
            status: if r.is_ok() {
                StageStatus::Ok
            } else {
                StageStatus::Failed
            },
            duration: t0.elapsed().as_secs_f64(),
        });
        r
    }

    fn input_error(&mut self, detail: String) -> Halt {
        self.feedback.push(feedback("input", Reason::InvalidInput, detail));
        Halt(EXIT_INPUT)
    }

    fn read(&mut self, what: &str, p: &Option<PathBuf>) -> Result<Vec<u8>, Halt> {
        let Some(p) = p else {
            return Err(self.input_error(format!("--{what} is required")));
        };
        fs::read(p).map_err(|e| self.input_error(format!("cannot read {what} `{}`: {e}", p.display())))
    }

    fn read_artifact(&mut self, name: &str) -> Result<Vec<u8>, Halt> {
        let p = self.paths.out.join(name);
        fs::read(&p).map_err(|e| self.input_error(format!("cannot read artifact `{}`: {e}", p.display())))
    }

    fn parse_artifact<T: for<'de> Deserialize<'de>>(&mut self, name: &str) -> Result<T, Halt> {
        let bytes = self.read_artifact(name)?;
        serde_json::from_slice(&bytes).map_err(|e| self.input_error(format!("artifact `{name}`: {e}")))
    }

    fn write(&mut self, name: &str, content: &str) -> Result<(), Halt> {
        let p = self.paths.out.join(name);
        fs::write(&p, content).map_err(|e| self.input_error(format!("cannot write `{}`: {e}", p.display())))?;
        self.artifacts.push(name.into());
        Ok(())
    }

    fn design(&mut self) -> Result<DesignDoc, Halt> {
        let path = self.paths.design.clone();
        let bytes = self.read("design", &path)?;
        load_design(&bytes).map_err(|e| self.input_error(format!("design: {e}")))
    }

    fn tooling(&mut self) -> Result<ToolingDb, Halt> {
        let path = self.paths.tooling.clone();
        let bytes = self.read("tooling", &path)?;
        load_tooling(&bytes).map_err(|e| self.input_error(format!("tooling: {e}")))
    }

    fn cells(&mut self, db: &ToolingDb) -> Result<Vec<CellDescription>, Halt> {
        let path = self.paths.cells.clone();
        let bytes = self.read("cells", &path)?;
        let cells = load_cells(&bytes).map_err(|e| self.input_error(format!("cells: {e}")))?;
        for c in &cells {
            c.validate(db)
                .map_err(|e| self.input_error(format!("cell `{}`: {e}", c.cell_id)))?;
        }
        Ok(cells)
    }

    fn plan(&mut self, design: &DesignDoc) -> Result<SequencesDoc, Halt> {
        let set = self.stage("sequence", |run| {
            let register = build_joint_register(design);
            let g = build_liaison_graph(&register, &design.part_ids());
            enumerate_sequences_with(&g, run.opts.cap, run.opts.exec).map_err(|e| {
                run.feedback
                    .push(feedback("sequence", Reason::InvalidInput, e.to_string()));
                Halt(EXIT_INPUT)
            })
        })?;
        if set.truncated {
            self.feedback.push(feedback(
                "sequence",
                Reason::RuntimeError,
                format!("enumeration stopped at the cap of {} sequences", self.opts.cap),
            ));
        }
        let doc = self.stage("feasibility", |run| {
            let params = FeasibilityParams::for_design(design, run.opts.directions, run.opts.step_ratio);
            let (kept, failures) = filter_sequences_with(&set.sequences, design, &params, run.opts.exec);
            for f in failures {
                run.feedback.push(Feedback {
                    sequence_id: Some(f.sequence_id),
                    op_id: Some(f.op_id),
                    ..feedback(
                        "feasibility",
                        Reason::InfeasibleGeometry,
                        format!("no collision-free direction among {}", f.checked_directions.len()),
                    )
                });
            }
            let doc = SequencesDoc {
                design_id: design.design_id.clone(),
                truncated: set.truncated,
                sequences: set.sequences.clone(),
                feasible: kept.iter().map(|s| s.sequence_id.clone()).collect(),
            };
            if doc.feasible.is_empty() {
                if !run.feedback.iter().any(|f| f.stage == "feasibility") {
                    run.feedback
                        .push(feedback("feasibility", Reason::InfeasibleGeometry, "no sequences"));
                }
                return Err(Halt(EXIT_NO_SEQUENCE));
            }
            Ok(doc)
        });
        let doc = doc?;
        self.write(SEQUENCES_FILE, &json_pretty(&doc))?;
        Ok(doc)
    }

    fn match_stage(
        &mut self,
        design: &DesignDoc,
        db: &ToolingDb,
        cells: &[CellDescription],
        doc: &SequencesDoc,
    ) -> Result<Vec<Bop>, Halt> {
        let feasible: Vec<&AssemblySequence> = doc
            .sequences
            .iter()
            .filter(|s| doc.feasible.contains(&s.sequence_id))
            .collect();
        let enriched = self.stage("tooling", |run| {
            let (recipes, _) = extract_recipes(design);
            let mut out = Vec::new();
            for s in &feasible {
                match enrich_sequence(s, db, &recipes, design) {
                    Ok(e) => out.push(e),
                    Err(m) => run.feedback.push(Feedback {
                        sequence_id: Some(s.sequence_id.clone()),
                        op_id: Some(m.op_id.clone()),
                        ..feedback("tooling", Reason::MissingTooling, m.to_string())
                    }),
                }
            }
            if out.is_empty() {
                return Err(Halt(EXIT_NO_CELL));
            }
            Ok(out)
        })?;
        let bops = self.stage("cell_match", |run| {
            let mut bops = Vec::new();
            for e in &enriched {
                match select_cell(e, cells, db, design) {
                    Ok((_, b)) => bops.push(b),
                    Err(SelectError::NoCells) => {
                        run.feedback.push(Feedback {
                            sequence_id: Some(e.base.sequence_id.clone()),
                            ..feedback("cell_match", Reason::MissingResource, "no cells to match against")
                        });
                    }
                    Err(SelectError::NoMatch(fails)) => {
                        for (cell, f) in fails {
                            run.feedback.push(Feedback {
                                sequence_id: Some(f.sequence_id.clone()),
                                op_id: Some(f.op_id.clone()),
                                ..feedback("cell_match", Reason::MissingResource, format!("cell {cell}: {f}"))
                            });
                        }
                    }
                }
            }
            if bops.is_empty() {
                return Err(Halt(EXIT_NO_CELL));
            }
            Ok(bops)
        })?;
        self.kpis.op_count = bops[0].ops.len();
        self.write(BOP_FILE, &json_pretty(&bops))?;
        Ok(bops)
    }

    fn codegen(&mut self, bops: &[Bop]) -> Result<PlProgram, Halt> {
        let bop = bops
            .first()
            .ok_or_else(|| self.input_error(format!("`{BOP_FILE}` holds no BOP")))?;
        self.kpis.op_count = bop.ops.len();
        let prog = self.stage("codegen", |run| {
            generate_program(bop, &default_templates()).map_err(|e| {
                run.feedback
                    .push(feedback("codegen", Reason::RuntimeError, e.to_string()));
                Halt(EXIT_SIMULATION)
            })
        })?;
        let map = ProgramMap {
            bop_id: bop.bop_id.clone(),
            cell_id: bop.cell_id.clone(),
            provenance: prog.provenance.clone(),
        };
        self.write(PROGRAM_FILE, &prog.source)?;
        self.write(PROGRAM_MAP_FILE, &json_pretty(&map))?;
        Ok(prog)
    }

    fn simulate(
        &mut self,
        design: &DesignDoc,
        db: &ToolingDb,
        cells: &[CellDescription],
        source: &str,
        map: &ProgramMap,
    ) -> Result<(), Halt> {
        let Some(cell) = cells.iter().find(|c| c.cell_id == map.cell_id).cloned() else {
            return Err(self.input_error(format!("cell `{}` not in the cells file", map.cell_id)));
        };
        let seed = self.opts.seed;
        let result = self.stage("simulate", |run| {
            let fail = |run: &mut Run, op: Option<String>, reason, detail: String| {
                run.feedback.push(Feedback {
                    op_id: op,
                    ..feedback("simulate", reason, detail)
                });
                Halt(EXIT_SIMULATION)
            };
            let mut twin = match Twin::new(cell, db.clone(), Some(design.clone()), seed) {
                Ok(t) => t,
                Err(e) => return Err(fail(run, None, Reason::RuntimeError, e.to_string())),
            };
            let ast = match pl::parse(source) {
                Ok(a) => a,
                Err(e) => return Err(fail(run, None, Reason::RuntimeError, e.to_string())),
            };
            let trace = interpret(&ast, &mut twin);
            run.kpis.twin_time_total = twin.state.twin_time;
            let scene = twin.scene();
            Ok((trace, scene))
        })?;
        let (trace, scene): (ExecutionTrace, SceneDoc) = result;
        self.write(TRACE_FILE, &trace.to_json())?;
        self.write(SCENE_FILE, &scene.to_json())?;
        if let Some(e) = &trace.error {
            let l = e.line();
            let op = map
                .provenance
                .iter()
                .find(|r| r.first_line <= l && l <= r.last_line)
                .map(|r| r.op_id.clone());
            let reason = match e {
                PlError::Ability { reason, .. } if reason == "unreachable" => Reason::Unreachable,
                PlError::Ability { reason, .. } if reason == "in_collision" => Reason::InCollision,
                _ => Reason::RuntimeError,
            };
            self.stages.last_mut().unwrap().status = StageStatus::Failed;
            self.feedback.push(Feedback {
                op_id: op,
                ..feedback("simulate", reason, e.to_string())
            });
            return Err(Halt(EXIT_SIMULATION));
        }
        Ok(())
    }

    fn execute(&mut self) -> Result<(), Halt> {
        fs::create_dir_all(&self.paths.out).map_err(|e| {
            let d = format!("cannot create `{}`: {e}", self.paths.out.display());
            self.input_error(d)
        })?;
        match self.command {
            Command::Plan => {
                let design = self.design()?;
                self.plan(&design)?;
            }
            Command::Match => {
                let design = self.design()?;
                let db = self.tooling()?;
                let cells = self.cells(&db)?;
                let doc: SequencesDoc = self.parse_artifact(SEQUENCES_FILE)?;
                self.match_stage(&design, &db, &cells, &doc)?;
            }
            Command::Codegen => {
                let bops: Vec<Bop> = self.parse_artifact(BOP_FILE)?;
                self.codegen(&bops)?;
            }
            Command::Simulate => {
                let design = self.design()?;
                let db = self.tooling()?;
                let cells = self.cells(&db)?;
                let source = self.read_artifact(PROGRAM_FILE)?;
                let source = String::from_utf8_lossy(&source).into_owned();
                let map: ProgramMap = self.parse_artifact(PROGRAM_MAP_FILE)?;
                let bops = fs::read(self.paths.out.join(BOP_FILE)).ok();
                if let Some(bops) = bops.and_then(|b| serde_json::from_slice::<Vec<Bop>>(&b).ok()) {
                    self.kpis.op_count = bops.first().map_or(0, |b| b.ops.len());
                }
                self.simulate(&design, &db, &cells, &source, &map)?;
            }
            Command::All => {
                let design = self.design()?;
                let db = self.tooling()?;
                let cells = self.cells(&db)?;
                let doc = self.plan(&design)?;
                let bops = self.match_stage(&design, &db, &cells, &doc)?;
                let prog = self.codegen(&bops)?;
                let map = ProgramMap {
                    bop_id: bops[0].bop_id.clone(),
                    cell_id: bops[0].cell_id.clone(),
                    provenance: prog.provenance.clone(),
                };
                self.simulate(&design, &db, &cells, &prog.source, &map)?;
            }
        }
        Ok(())
    }
}

/// Runs `command`, writes its artifacts and `report.json` under
/// `paths.out`, and returns the report. The exit code is in the report.
pub fn run_pipeline(command: Command, paths: &Paths, opts: &Options) -> PipelineReport {
    let mut run = Run {
        command,
        paths: paths.clone(),
        opts: opts.clone(),
        stages: Vec::new(),
        feedback: Vec::new(),
        artifacts: Vec::new(),
        kpis: Kpis::default(),
    };
    let exit_code = match run.execute() {
        Ok(()) => EXIT_OK,
        Err(Halt(c)) => c,
    };
    let mut report = PipelineReport {
        command,
        exit_code,
        stages: run.stages,
        feedback: run.feedback,
        artifacts: run.artifacts,
        kpis: run.kpis,
    };
    report.artifacts.push(REPORT_FILE.into());
    // Best effort: the report is also returned to the caller.
    let _ = fs::write(paths.out.join(REPORT_FILE), report.to_json() + "\n");
    report
}

/// Writes the fixture inputs (`design.json`, `tooling.json`, `cells.json`)
/// into `dir` and returns their paths with `out` set to `dir/out`.
pub fn write_inputs(
    dir: &Path,
    design: &DesignDoc,
    db: &ToolingDb,
    cells: &[CellDescription],
) -> Result<Paths, PipelineError> {
    let put = |name: &str, text: String| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| PipelineError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        })?;
        Ok::<_, PipelineError>(p)
    };
    Ok(Paths {
        design: Some(put("design.json", design.to_json())?),
        tooling: Some(put("tooling.json", db.to_json())?),
        cells: Some(put("cells.json", json_pretty(&cells))?),
        out: dir.join("out"),
    })
}

/// Artifact name → bytes for every file the run wrote except the report.
pub fn read_artifacts(report: &PipelineReport, out: &Path) -> BTreeMap<String, Vec<u8>> {
    report
        .artifacts
        .iter()
        .filter(|a| a.as_str() != REPORT_FILE)
        .filter_map(|a| Some((a.clone(), fs::read(out.join(a)).ok()?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn run_all(design: &DesignDoc, cells: &[CellDescription]) -> (tempfile::TempDir, PipelineReport) {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_inputs(dir.path(), design, &fixtures::tooling_db(), cells).unwrap();
        let r = run_pipeline(Command::All, &paths, &Options::default());
        (dir, r)
    }

    #[test]
    fn triplet_succeeds() {
        let (dir, r) = run_all(&fixtures::triplet_design(), &[fixtures::cell()]);
        assert!(r.ok(), "{}", r.summary());
        assert_eq!(r.kpis.op_count, 8);
        assert!(r.kpis.twin_time_total > 0.0);
        for a in &r.artifacts {
            assert!(dir.path().join("out").join(a).exists(), "{a}");
        }
        let fails = r
            .feedback
            .iter()
            .filter(|f| f.reason == Reason::MissingResource)
            .count();
        assert_eq!(fails, 7);
    }

    #[test]
    fn far_screws_are_unreachable_at_the_fasten() {
        let (_d, r) = run_all(&fixtures::triplet_far_design(), &[fixtures::cell()]);
        assert_eq!(r.exit_code, EXIT_SIMULATION);
        let f = r.feedback.iter().find(|f| f.stage == "simulate").unwrap();
        assert_eq!(f.reason, Reason::Unreachable);
        assert_eq!(f.op_id.as_deref(), Some("fasten_F"));
    }

    #[test]
    fn missing_screwdriver_robot_is_exit_3() {
        let (_d, r) = run_all(&fixtures::triplet_design(), &[fixtures::cell_without_screwdriver()]);
        assert_eq!(r.exit_code, EXIT_NO_CELL);
        assert!(r
            .feedback
            .iter()
            .any(|f| f.reason == Reason::MissingResource && f.detail.contains("SD1")));
    }

    #[test]
    fn missing_input_is_exit_1() {
        let dir = tempfile::tempdir().unwrap();
        let paths = Paths {
            design: Some(dir.path().join("nope.json")),
            out: dir.path().join("out"),
            ..Paths::default()
        };
        let r = run_pipeline(Command::Plan, &paths, &Options::default());
        assert_eq!(r.exit_code, EXIT_INPUT);
        assert_eq!(r.feedback[0].reason, Reason::InvalidInput);
    }

    #[test]
    fn sealed_part_is_exit_2() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_inputs(dir.path(), &fixtures::sealed_design(), &fixtures::tooling_db(), &[]).unwrap();
        let r = run_pipeline(Command::Plan, &paths, &Options::default());
        assert_eq!(r.exit_code, EXIT_NO_SEQUENCE, "{}", r.summary());
        assert!(r.feedback.iter().all(|f| f.reason == Reason::InfeasibleGeometry));
        assert_eq!(r.stages.last().unwrap().status, StageStatus::Failed);
    }

    #[test]
    fn cage_infeasible_sequences_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_inputs(dir.path(), &fixtures::cage_design(), &fixtures::tooling_db(), &[]).unwrap();
        let r = run_pipeline(Command::Plan, &paths, &Options::default());
        assert!(r.ok(), "{}", r.summary());
        assert!(r.feedback.iter().any(|f| f.reason == Reason::InfeasibleGeometry));
    }

    #[test]
    fn stages_rerun_from_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_inputs(
            dir.path(),
            &fixtures::triplet_design(),
            &fixtures::tooling_db(),
            &[fixtures::cell()],
        )
        .unwrap();
        let o = Options::default();
        for c in [Command::Plan, Command::Match, Command::Codegen, Command::Simulate] {
            let r = run_pipeline(c, &paths, &o);
            assert!(r.ok(), "{c:?}: {}", r.summary());
        }
        let staged = fs::read(paths.out.join(TRACE_FILE)).unwrap();
        let r = run_pipeline(Command::All, &paths, &o);
        assert!(r.ok());
        assert_eq!(staged, fs::read(paths.out.join(TRACE_FILE)).unwrap());
    }
}

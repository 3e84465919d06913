//! Certification pipeline: a 12-stage, evidence-gated state machine with a
//! per-unit production loop and PEGASUS phase/argumentation tracking.
//!
//! Projects are event-sourced: the persisted artifact is the append-only
//! event history, and state is always derived by replay, so identical
//! histories reconstruct byte-identical state. Timestamps are caller
//! supplied logical values (defaulting to the event sequence number) to keep
//! replay deterministic.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Actor {
    Manufacturer,
    SubsystemProvider,
    TestCenter,
    ConformityBody,
    Authority,
    RiskAssessmentBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Rss,
    Stpa,
    Pegasus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageDef {
    pub index: u8,
    pub name: &'static str,
    pub actors: &'static [Actor],
    pub methods: &'static [Method],
    pub required_evidence: &'static [&'static str],
}

use Actor::*;
use Method::*;

/// The shipped stage table. RSS informs the requirements and the hardware
/// and software infrastructure stages; STPA drives design verification;
/// PEGASUS tracks the process through type approval.
pub const STAGES: [StageDef; 12] = [
    StageDef {
        index: 1,
        name: "requirements definition",
        actors: &[Manufacturer, Authority],
        methods: &[Rss, Pegasus],
        required_evidence: &["requirements-dossier"],
    },
    StageDef {
        index: 2,
        name: "concept design",
        actors: &[Manufacturer],
        methods: &[Pegasus],
        required_evidence: &["concept-design-dossier"],
    },
    StageDef {
        index: 3,
        name: "hardware infrastructure",
        actors: &[Manufacturer, SubsystemProvider],
        methods: &[Rss, Pegasus],
        required_evidence: &["hardware-design-dossier"],
    },
    StageDef {
        index: 4,
        name: "software infrastructure",
        actors: &[Manufacturer, SubsystemProvider],
        methods: &[Rss, Pegasus],
        required_evidence: &["software-design-dossier"],
    },
    StageDef {
        index: 5,
        name: "design verification",
        actors: &[Manufacturer, RiskAssessmentBody],
        methods: &[Stpa, Pegasus],
        required_evidence: &["simulation-report", "hazard-analysis"],
    },
    StageDef {
        index: 6,
        name: "prototype production",
        actors: &[Manufacturer, SubsystemProvider],
        methods: &[Pegasus],
        required_evidence: &["prototype-record"],
    },
    StageDef {
        index: 7,
        name: "field and laboratory type tests",
        actors: &[TestCenter, ConformityBody],
        methods: &[Pegasus],
        required_evidence: &["type-test-certificate"],
    },
    StageDef {
        index: 8,
        name: "conformity certification",
        actors: &[ConformityBody],
        methods: &[Pegasus],
        required_evidence: &["conformity-certificate"],
    },
    StageDef {
        index: 9,
        name: "type approval",
        actors: &[Authority],
        methods: &[Pegasus],
        required_evidence: &["type-approval"],
    },
    StageDef {
        index: 10,
        name: "series production",
        actors: &[Manufacturer, ConformityBody],
        methods: &[],
        required_evidence: &["production-conformity"],
    },
    StageDef {
        index: 11,
        name: "routine tests",
        actors: &[Manufacturer, TestCenter],
        methods: &[],
        required_evidence: &["routine-test-record"],
    },
    StageDef {
        index: 12,
        name: "licensing",
        actors: &[Authority],
        methods: &[],
        required_evidence: &["license"],
    },
];

pub fn stage_table() -> &'static [StageDef; 12] {
    &STAGES
}

pub fn stage(index: u8) -> &'static StageDef {
    &STAGES[(index - 1) as usize]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PegasusPhase {
    DataProcessing,
    RequirementsDefinition,
    Database,
    Evaluation,
    Argumentation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgumentationLayer {
    Structure,
    Formalization,
    Consistency,
    Completeness,
    Conformity,
}

impl ArgumentationLayer {
    pub const ALL: [ArgumentationLayer; 5] = [
        ArgumentationLayer::Structure,
        ArgumentationLayer::Formalization,
        ArgumentationLayer::Consistency,
        ArgumentationLayer::Completeness,
        ArgumentationLayer::Conformity,
    ];
}

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("PEGASUS step {0} outside 1..=20")]
    StepOutOfRange(u8),
    #[error("step 20 requires steps 1-19 complete and all argumentation layers done")]
    Step20Blocked,
    #[error("argumentation layers require steps 1-19 complete")]
    LayersBlocked,
    #[error("evidence kind '{0}' unknown for stage {1} and not marked supplementary")]
    UnknownEvidenceKind(String, u8),
    #[error("stage {0} out of range 1..=12")]
    StageOutOfRange(u8),
    #[error("project already at terminal stage 12")]
    Terminal,
    #[error("unit cycles require type approval (stage >= 10), project is at {0}")]
    UnitsBeforeProduction(u8),
    #[error("rollback target {0} must be an earlier stage than {1}")]
    BadRollback(u8, u8),
    #[error("replay: first event must create the project")]
    ReplayNoCreate,
    #[error("replay: event {0} invalid: {1}")]
    ReplayInvalid(usize, String),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

/// The phases a PEGASUS step belongs to. Step 1 feeds both data processing
/// and requirements definition.
pub fn pegasus_phase(step: u8) -> Result<BTreeSet<PegasusPhase>, PipelineError> {
    use PegasusPhase::*;
    let set: &[PegasusPhase] = match step {
        1 => &[DataProcessing, RequirementsDefinition],
        2 | 4 | 5 => &[DataProcessing],
        3 | 6 => &[RequirementsDefinition],
        7..=11 => &[Database],
        12..=19 => &[Evaluation],
        20 => &[Argumentation],
        _ => return Err(PipelineError::StepOutOfRange(step)),
    };
    Ok(set.iter().copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceRecord {
    pub kind: String,
    pub stage_index: u8,
    pub reference: String,
    pub timestamp: u64,
    #[serde(default)]
    pub supplementary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectEvent {
    Created { id: String },
    EvidenceAdded { record: EvidenceRecord },
    Advanced { from: u8, to: u8 },
    RolledBack { from: u8, to: u8 },
    UnitEvidenceAdded { unit_id: String, record: EvidenceRecord },
    UnitLicensed { unit_id: String, timestamp: u64 },
    PegasusStepDone { step: u8 },
    PegasusLayerDone { layer: ArgumentationLayer },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PegasusStatus {
    pub completed_steps: BTreeSet<u8>,
    pub argumentation_layers: BTreeMap<ArgumentationLayer, bool>,
}

impl PegasusStatus {
    pub fn steps_1_to_19_done(&self) -> bool {
        (1..=19).all(|s| self.completed_steps.contains(&s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct UnitCycle {
    pub production_conformity: bool,
    pub routine_tests: bool,
    pub licensed: bool,
}

/// Project state, always derived by replaying the event history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationProject {
    pub id: String,
    pub current_stage: u8,
    pub evidence: Vec<EvidenceRecord>,
    pub unit_cycles: BTreeMap<String, UnitCycle>,
    pub pegasus: PegasusStatus,
    pub history: Vec<ProjectEvent>,
}

/// Outcome of an advance attempt: either the project moved, or the gate
/// refused and lists what is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvanceOutcome {
    pub advanced: bool,
    pub stage: u8,
    pub deficiencies: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitOutcome {
    pub unit_id: String,
    pub licensed: bool,
    pub deficiencies: Vec<String>,
}

fn known_kind_for_stage(kind: &str, stage_index: u8) -> bool {
    stage(stage_index).required_evidence.contains(&kind)
}

impl CertificationProject {
    pub fn create(id: &str) -> Self {
        let event = ProjectEvent::Created { id: id.to_string() };
        Self {
            id: id.to_string(),
            current_stage: 1,
            evidence: Vec::new(),
            unit_cycles: BTreeMap::new(),
            pegasus: PegasusStatus::default(),
            history: vec![event],
        }
    }

    fn next_timestamp(&self) -> u64 {
        self.history.len() as u64
    }

    /// Evidence kinds recorded for one stage (supplementary ones included).
    fn kinds_for_stage(&self, stage_index: u8) -> BTreeSet<&str> {
        self.evidence
            .iter()
            .filter(|e| e.stage_index == stage_index)
            .map(|e| e.kind.as_str())
            .collect()
    }

    /// Missing required kinds for one stage.
    pub fn deficiencies_for_stage(&self, stage_index: u8) -> Vec<String> {
        let present = self.kinds_for_stage(stage_index);
        stage(stage_index)
            .required_evidence
            .iter()
            .filter(|k| !present.contains(**k))
            .map(|k| format!("stage {} ({}): missing {}", stage_index, stage(stage_index).name, k))
            .collect()
    }

    /// Every stage strictly below `current_stage` holds its full required
    /// evidence set. Machine-checkable no-skip property.
    pub fn no_skip_holds(&self) -> bool {
        (1..self.current_stage).all(|s| self.deficiencies_for_stage(s).is_empty())
    }

    pub fn add_evidence(
        &mut self,
        kind: &str,
        stage_index: u8,
        reference: &str,
        supplementary: bool,
        timestamp: Option<u64>,
    ) -> Result<(), PipelineError> {
        if !(1..=12).contains(&stage_index) {
            return Err(PipelineError::StageOutOfRange(stage_index));
        }
        if !supplementary && !known_kind_for_stage(kind, stage_index) {
            return Err(PipelineError::UnknownEvidenceKind(kind.to_string(), stage_index));
        }
        let record = EvidenceRecord {
            kind: kind.to_string(),
            stage_index,
            reference: reference.to_string(),
            timestamp: timestamp.unwrap_or_else(|| self.next_timestamp()),
            supplementary,
        };
        self.apply_and_log(ProjectEvent::EvidenceAdded { record });
        Ok(())
    }

    /// Appends a batch of evidence for the current stage, then advances one
    /// stage if the gate is satisfied; otherwise reports deficiencies.
    pub fn advance_stage(
        &mut self,
        evidence_batch: &[(String, String)],
        supplementary: bool,
        timestamp: Option<u64>,
    ) -> Result<AdvanceOutcome, PipelineError> {
        if self.current_stage >= 12 {
            return Err(PipelineError::Terminal);
        }
        let at = self.current_stage;
        for (kind, reference) in evidence_batch {
            self.add_evidence(kind, at, reference, supplementary, timestamp)?;
        }
        let deficiencies = self.deficiencies_for_stage(at);
        if deficiencies.is_empty() {
            self.apply_and_log(ProjectEvent::Advanced { from: at, to: at + 1 });
            Ok(AdvanceOutcome { advanced: true, stage: self.current_stage, deficiencies: vec![] })
        } else {
            Ok(AdvanceOutcome { advanced: false, stage: at, deficiencies })
        }
    }

    /// Explicit history-logged rework: drop back to an earlier stage,
    /// preserving all evidence.
    pub fn rollback(&mut self, to: u8) -> Result<(), PipelineError> {
        if !(1..=12).contains(&to) {
            return Err(PipelineError::StageOutOfRange(to));
        }
        if to >= self.current_stage {
            return Err(PipelineError::BadRollback(to, self.current_stage));
        }
        self.apply_and_log(ProjectEvent::RolledBack { from: self.current_stage, to });
        Ok(())
    }

    /// Stages 10-12 repeated per produced unit: records per-unit evidence
    /// and issues the unit license once production conformity and routine
    /// tests are both evidenced.
    pub fn record_unit_cycle(
        &mut self,
        unit_id: &str,
        evidence_batch: &[(String, String)],
        timestamp: Option<u64>,
    ) -> Result<UnitOutcome, PipelineError> {
        if self.current_stage < 10 {
            return Err(PipelineError::UnitsBeforeProduction(self.current_stage));
        }
        for (kind, reference) in evidence_batch {
            let stage_index = match kind.as_str() {
                "production-conformity" => 10,
                "routine-test-record" => 11,
                other => return Err(PipelineError::UnknownEvidenceKind(other.to_string(), 10)),
            };
            let record = EvidenceRecord {
                kind: kind.clone(),
                stage_index,
                reference: reference.clone(),
                timestamp: timestamp.unwrap_or_else(|| self.next_timestamp()),
                supplementary: false,
            };
            self.apply_and_log(ProjectEvent::UnitEvidenceAdded {
                unit_id: unit_id.to_string(),
                record,
            });
        }
        let cycle = self.unit_cycles.get(unit_id).cloned().unwrap_or_default();
        let mut deficiencies = Vec::new();
        if !cycle.production_conformity {
            deficiencies.push(format!("unit {}: missing production-conformity", unit_id));
        }
        if !cycle.routine_tests {
            deficiencies.push(format!("unit {}: missing routine-test-record", unit_id));
        }
        if deficiencies.is_empty() && !cycle.licensed {
            let timestamp = timestamp.unwrap_or_else(|| self.next_timestamp());
            self.apply_and_log(ProjectEvent::UnitLicensed {
                unit_id: unit_id.to_string(),
                timestamp,
            });
        }
        let licensed = self.unit_cycles.get(unit_id).map(|c| c.licensed).unwrap_or(false);
        Ok(UnitOutcome { unit_id: unit_id.to_string(), licensed, deficiencies })
    }

    pub fn mark_pegasus_step(&mut self, step: u8) -> Result<(), PipelineError> {
        if !(1..=20).contains(&step) {
            return Err(PipelineError::StepOutOfRange(step));
        }
        if step == 20 {
            let layers_done = ArgumentationLayer::ALL
                .iter()
                .all(|l| *self.pegasus.argumentation_layers.get(l).unwrap_or(&false));
            if !self.pegasus.steps_1_to_19_done() || !layers_done {
                return Err(PipelineError::Step20Blocked);
            }
        }
        if !self.pegasus.completed_steps.contains(&step) {
            self.apply_and_log(ProjectEvent::PegasusStepDone { step });
        }
        Ok(())
    }

    /// Marks one argumentation layer done; only allowed once steps 1-19 are
    /// complete. Completing the fifth layer completes step 20.
    pub fn mark_pegasus_layer(&mut self, layer: ArgumentationLayer) -> Result<(), PipelineError> {
        if !self.pegasus.steps_1_to_19_done() {
            return Err(PipelineError::LayersBlocked);
        }
        if !*self.pegasus.argumentation_layers.get(&layer).unwrap_or(&false) {
            self.apply_and_log(ProjectEvent::PegasusLayerDone { layer });
        }
        let layers_done = ArgumentationLayer::ALL
            .iter()
            .all(|l| *self.pegasus.argumentation_layers.get(l).unwrap_or(&false));
        if layers_done && !self.pegasus.completed_steps.contains(&20) {
            self.apply_and_log(ProjectEvent::PegasusStepDone { step: 20 });
        }
        Ok(())
    }

    /// Layer status report: each of the five layers, done or pending.
    pub fn argumentation_checklist(&self) -> BTreeMap<ArgumentationLayer, bool> {
        ArgumentationLayer::ALL
            .iter()
            .map(|l| (*l, *self.pegasus.argumentation_layers.get(l).unwrap_or(&false)))
            .collect()
    }

    fn apply_and_log(&mut self, event: ProjectEvent) {
        Self::apply(self, &event);
        self.history.push(event);
    }

    /// Pure state transition; replay applies exactly this.
    fn apply(state: &mut CertificationProject, event: &ProjectEvent) {
        match event {
            ProjectEvent::Created { id } => {
                state.id = id.clone();
                state.current_stage = 1;
            }
            ProjectEvent::EvidenceAdded { record } => state.evidence.push(record.clone()),
            ProjectEvent::Advanced { to, .. } => state.current_stage = *to,
            ProjectEvent::RolledBack { to, .. } => state.current_stage = *to,
            ProjectEvent::UnitEvidenceAdded { unit_id, record } => {
                state.evidence.push(record.clone());
                let cycle = state.unit_cycles.entry(unit_id.clone()).or_default();
                match record.kind.as_str() {
                    "production-conformity" => cycle.production_conformity = true,
                    "routine-test-record" => cycle.routine_tests = true,
                    _ => {}
                }
            }
            ProjectEvent::UnitLicensed { unit_id, .. } => {
                state.unit_cycles.entry(unit_id.clone()).or_default().licensed = true;
            }
            ProjectEvent::PegasusStepDone { step } => {
                state.pegasus.completed_steps.insert(*step);
            }
            ProjectEvent::PegasusLayerDone { layer } => {
                state.pegasus.argumentation_layers.insert(*layer, true);
            }
        }
    }

    /// Reconstructs state from an event history. The first event must be the
    /// creation event.
    pub fn replay(events: &[ProjectEvent]) -> Result<Self, PipelineError> {
        let Some(ProjectEvent::Created { id }) = events.first() else {
            return Err(PipelineError::ReplayNoCreate);
        };
        let mut state = CertificationProject {
            id: id.clone(),
            current_stage: 1,
            evidence: Vec::new(),
            unit_cycles: BTreeMap::new(),
            pegasus: PegasusStatus::default(),
            history: Vec::new(),
        };
        for event in events {
            Self::apply(&mut state, event);
            state.history.push(event.clone());
        }
        Ok(state)
    }

    /// Persisted form: only the history; state derives by replay on load.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct File<'a> {
            events: &'a [ProjectEvent],
        }
        serde_json::to_string_pretty(&File { events: &self.history }).expect("project serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            events: Vec<ProjectEvent>,
        }
        let file: File =
            serde_json::from_str(text).map_err(|e| PipelineError::Parse(e.to_string()))?;
        Self::replay(&file.events)
    }
}

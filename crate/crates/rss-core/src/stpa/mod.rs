//! STPA-based hazard analysis integrated with HARA classification.
//!
//! The workflow is a sequential pipeline over immutable values: fundamentals
//! (accidents, hazards, constraints, control structure) are validated once,
//! hazardous events come from classifying hazards in operational situations,
//! unsafe control actions are confirmed against a generated candidate grid,
//! causal factors attach to confirmed actions, and the functional safety
//! concept is emitted only when the analysis is complete. Re-running on
//! identical inputs yields byte-identical documents.

pub mod asil;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use asil::{asil_lookup, default_table, AsilLevel, AsilTable, Controllability, Exposure, Severity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossCategory {
    Human,
    Property,
    Environment,
    Mission,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Accident {
    pub id: String,
    pub description: String,
    pub loss_categories: BTreeSet<LossCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hazard {
    pub id: String,
    pub description: String,
    pub linked_accidents: BTreeSet<String>,
    pub worst_case_environment: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetyConstraint {
    pub id: String,
    pub hazard_id: String,
    pub statement: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlAction {
    pub id: String,
    pub from_controller: String,
    pub to_process: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Feedback {
    pub id: String,
    pub from_process: String,
    pub to_controller: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlStructure {
    pub controllers: Vec<Node>,
    pub processes: Vec<Node>,
    pub control_actions: Vec<ControlAction>,
    pub feedback: Vec<Feedback>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperationalSituation {
    pub id: String,
    pub description: String,
    pub operating_mode: String,
}

/// User classification of one hazard in one situation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Classification {
    pub hazard_id: String,
    pub situation_id: String,
    pub severity: Severity,
    pub exposure: Exposure,
    pub controllability: Controllability,
    #[serde(default)]
    pub rationale: String,
    /// Overrides the templated safety goal when present.
    #[serde(default)]
    pub safety_goal: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardousEvent {
    pub id: String,
    pub hazard_id: String,
    pub situation_id: String,
    pub severity: Severity,
    pub exposure: Exposure,
    pub controllability: Controllability,
    pub asil: AsilLevel,
    pub safety_goal: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UcaType {
    NotProvided,
    ProvidedCausesHazard,
    WrongTimingOrder,
    StoppedTooSoonAppliedTooLong,
}

impl UcaType {
    pub const ALL: [UcaType; 4] = [
        UcaType::NotProvided,
        UcaType::ProvidedCausesHazard,
        UcaType::WrongTimingOrder,
        UcaType::StoppedTooSoonAppliedTooLong,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnsafeControlAction {
    pub id: String,
    pub control_action_id: String,
    pub uca_type: UcaType,
    pub context: String,
    pub linked_hazards: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CausalFactor {
    pub id: String,
    pub uca_id: String,
    pub factor: String,
    pub unsafe_scenario: String,
}

/// The analysis model file: everything the human analyst supplies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StpaModel {
    pub accidents: Vec<Accident>,
    pub hazards: Vec<Hazard>,
    pub constraints: Vec<SafetyConstraint>,
    pub control_structure: ControlStructure,
    pub situations: Vec<OperationalSituation>,
    pub classifications: Vec<Classification>,
    pub ucas: Vec<UnsafeControlAction>,
    pub causal_factors: Vec<CausalFactor>,
}

#[derive(Debug, Error, PartialEq)]
pub enum StpaError {
    #[error("accident list is empty")]
    NoAccidents,
    #[error("accident {0} has no loss category")]
    AccidentWithoutLoss(String),
    #[error("hazard {0} links no accidents")]
    HazardWithoutAccident(String),
    #[error("hazard {0} links unknown accident {1}")]
    DanglingAccidentLink(String, String),
    #[error("constraint {0} references unknown hazard {1}")]
    DanglingConstraintHazard(String, String),
    #[error("control structure needs at least one controller and one process")]
    EmptyControlStructure,
    #[error("control action {0} has an unknown endpoint")]
    DanglingActionEndpoint(String),
    #[error("feedback {0} has an unknown endpoint")]
    DanglingFeedbackEndpoint(String),
    #[error("controller {0} issues no control action")]
    IdleController(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("classification references unknown hazard {0}")]
    UnknownHazard(String),
    #[error("classification references unknown situation {0}")]
    UnknownSituation(String),
    #[error("duplicate classification for hazard {0} in situation {1}")]
    DuplicateClassification(String, String),
    #[error("no hazardous events to analyze")]
    NoEvents,
    #[error("UCA {0} references unknown control action {1}")]
    UnknownControlAction(String, String),
    #[error("UCA {0} links no hazards")]
    UcaWithoutHazard(String),
    #[error("UCA {0} links unknown hazard {1}")]
    UcaDanglingHazard(String, String),
    #[error("causal factor {0} references unknown UCA {1}")]
    UnknownUca(String, String),
    #[error("analysis incomplete: UCAs without causal factors: {}", .0.join(", "))]
    FactorlessUcas(Vec<String>),
}

/// Validated fundamentals (STPA step 0 output).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBase {
    pub accidents: Vec<Accident>,
    pub hazards: Vec<Hazard>,
    pub constraints: Vec<SafetyConstraint>,
    pub control_structure: ControlStructure,
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>) -> Result<(), StpaError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(StpaError::DuplicateId(id.to_string()));
        }
    }
    Ok(())
}

/// Step 0, fundamentals analysis: validates accidents, system-level hazards,
/// high-level constraints and the control structure diagram.
pub fn step0_fundamentals(
    accidents: Vec<Accident>,
    hazards: Vec<Hazard>,
    constraints: Vec<SafetyConstraint>,
    structure: ControlStructure,
) -> Result<AnalysisBase, StpaError> {
    if accidents.is_empty() {
        return Err(StpaError::NoAccidents);
    }
    check_unique(
        accidents
            .iter()
            .map(|a| a.id.as_str())
            .chain(hazards.iter().map(|h| h.id.as_str()))
            .chain(constraints.iter().map(|c| c.id.as_str())),
    )?;
    for accident in &accidents {
        if accident.loss_categories.is_empty() {
            return Err(StpaError::AccidentWithoutLoss(accident.id.clone()));
        }
    }
    let accident_ids: BTreeSet<&str> = accidents.iter().map(|a| a.id.as_str()).collect();
    for hazard in &hazards {
        if hazard.linked_accidents.is_empty() {
            return Err(StpaError::HazardWithoutAccident(hazard.id.clone()));
        }
        for link in &hazard.linked_accidents {
            if !accident_ids.contains(link.as_str()) {
                return Err(StpaError::DanglingAccidentLink(hazard.id.clone(), link.clone()));
            }
        }
    }
    let hazard_ids: BTreeSet<&str> = hazards.iter().map(|h| h.id.as_str()).collect();
    for constraint in &constraints {
        if !hazard_ids.contains(constraint.hazard_id.as_str()) {
            return Err(StpaError::DanglingConstraintHazard(
                constraint.id.clone(),
                constraint.hazard_id.clone(),
            ));
        }
    }

    if structure.controllers.is_empty() || structure.processes.is_empty() {
        return Err(StpaError::EmptyControlStructure);
    }
    check_unique(
        structure
            .controllers
            .iter()
            .chain(structure.processes.iter())
            .map(|n| n.id.as_str())
            .chain(structure.control_actions.iter().map(|a| a.id.as_str()))
            .chain(structure.feedback.iter().map(|f| f.id.as_str())),
    )?;
    let controller_ids: BTreeSet<&str> =
        structure.controllers.iter().map(|n| n.id.as_str()).collect();
    let process_ids: BTreeSet<&str> = structure.processes.iter().map(|n| n.id.as_str()).collect();
    for action in &structure.control_actions {
        if !controller_ids.contains(action.from_controller.as_str())
            || !process_ids.contains(action.to_process.as_str())
        {
            return Err(StpaError::DanglingActionEndpoint(action.id.clone()));
        }
    }
    for fb in &structure.feedback {
        if !process_ids.contains(fb.from_process.as_str())
            || !controller_ids.contains(fb.to_controller.as_str())
        {
            return Err(StpaError::DanglingFeedbackEndpoint(fb.id.clone()));
        }
    }
    for controller in &structure.controllers {
        if !structure.control_actions.iter().any(|a| a.from_controller == controller.id) {
            return Err(StpaError::IdleController(controller.id.clone()));
        }
    }

    Ok(AnalysisBase { accidents, hazards, constraints, control_structure: structure })
}

/// Item definition derived from the fundamentals: purpose, boundary, and one
/// functional requirement per control action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDefinition {
    pub purpose: String,
    /// Controllers form the item under analysis.
    pub inside: Vec<String>,
    /// Controlled processes sit at the environment boundary.
    pub outside: Vec<String>,
    pub functional_requirements: Vec<String>,
}

pub fn derive_item_definition(base: &AnalysisBase) -> ItemDefinition {
    let structure = &base.control_structure;
    let purpose = format!(
        "Control {} through {} while upholding {} safety constraint(s)",
        structure.processes.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(", "),
        structure.controllers.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(", "),
        base.constraints.len(),
    );
    let functional_requirements = structure
        .control_actions
        .iter()
        .map(|a| {
            format!(
                "FR[{}]: provide control action '{}' from {} to {}",
                a.id, a.name, a.from_controller, a.to_process
            )
        })
        .collect();
    ItemDefinition {
        purpose,
        inside: structure.controllers.iter().map(|c| c.id.clone()).collect(),
        outside: structure.processes.iter().map(|p| p.id.clone()).collect(),
        functional_requirements,
    }
}

/// HARA: one hazardous event per classified (hazard, situation) pair, with
/// the ASIL looked up and a safety goal formulated.
pub fn run_hara(
    base: &AnalysisBase,
    situations: &[OperationalSituation],
    classifications: &[Classification],
    table: &AsilTable,
) -> Result<Vec<HazardousEvent>, StpaError> {
    check_unique(situations.iter().map(|s| s.id.as_str()))?;
    let hazard_by_id: BTreeMap<&str, &Hazard> =
        base.hazards.iter().map(|h| (h.id.as_str(), h)).collect();
    let situation_by_id: BTreeMap<&str, &OperationalSituation> =
        situations.iter().map(|s| (s.id.as_str(), s)).collect();

    let mut seen_pairs = BTreeSet::new();
    let mut events = Vec::new();
    for cls in classifications {
        let hazard = hazard_by_id
            .get(cls.hazard_id.as_str())
            .ok_or_else(|| StpaError::UnknownHazard(cls.hazard_id.clone()))?;
        let situation = situation_by_id
            .get(cls.situation_id.as_str())
            .ok_or_else(|| StpaError::UnknownSituation(cls.situation_id.clone()))?;
        if !seen_pairs.insert((cls.hazard_id.clone(), cls.situation_id.clone())) {
            return Err(StpaError::DuplicateClassification(
                cls.hazard_id.clone(),
                cls.situation_id.clone(),
            ));
        }
        let asil = asil_lookup(cls.severity, cls.exposure, cls.controllability, table);
        let safety_goal = cls.safety_goal.clone().unwrap_or_else(|| {
            format!("Prevent/mitigate {} in {}", hazard.description, situation.description)
        });
        events.push(HazardousEvent {
            id: format!("{}@{}", cls.hazard_id, cls.situation_id),
            hazard_id: cls.hazard_id.clone(),
            situation_id: cls.situation_id.clone(),
            severity: cls.severity,
            exposure: cls.exposure,
            controllability: cls.controllability,
            asil,
            safety_goal,
        });
    }
    events.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(events)
}

/// Worksheet row for STPA step 1: one candidate per control action and UCA
/// type for the analyst to confirm or discard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcaCandidate {
    pub control_action_id: String,
    pub control_action_name: String,
    pub uca_type: UcaType,
}

pub fn uca_candidate_grid(base: &AnalysisBase) -> Vec<UcaCandidate> {
    let mut grid = Vec::new();
    for action in &base.control_structure.control_actions {
        for uca_type in UcaType::ALL {
            grid.push(UcaCandidate {
                control_action_id: action.id.clone(),
                control_action_name: action.name.clone(),
                uca_type,
            });
        }
    }
    grid
}

/// STPA step 1: validates the analyst-confirmed unsafe control actions
/// against the fundamentals and the hazardous events.
pub fn identify_ucas(
    base: &AnalysisBase,
    events: &[HazardousEvent],
    confirmed: &[UnsafeControlAction],
) -> Result<Vec<UnsafeControlAction>, StpaError> {
    if events.is_empty() {
        return Err(StpaError::NoEvents);
    }
    check_unique(confirmed.iter().map(|u| u.id.as_str()))?;
    let action_ids: BTreeSet<&str> = base
        .control_structure
        .control_actions
        .iter()
        .map(|a| a.id.as_str())
        .collect();
    let hazard_ids: BTreeSet<&str> = base.hazards.iter().map(|h| h.id.as_str()).collect();
    for uca in confirmed {
        if !action_ids.contains(uca.control_action_id.as_str()) {
            return Err(StpaError::UnknownControlAction(
                uca.id.clone(),
                uca.control_action_id.clone(),
            ));
        }
        if uca.linked_hazards.is_empty() {
            return Err(StpaError::UcaWithoutHazard(uca.id.clone()));
        }
        for hazard in &uca.linked_hazards {
            if !hazard_ids.contains(hazard.as_str()) {
                return Err(StpaError::UcaDanglingHazard(uca.id.clone(), hazard.clone()));
            }
        }
    }
    let mut ucas = confirmed.to_vec();
    ucas.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(ucas)
}

/// STPA step 2: validates causal factors against the confirmed UCAs.
pub fn analyze_causal_factors(
    ucas: &[UnsafeControlAction],
    entries: &[CausalFactor],
) -> Result<Vec<CausalFactor>, StpaError> {
    check_unique(entries.iter().map(|f| f.id.as_str()))?;
    let uca_ids: BTreeSet<&str> = ucas.iter().map(|u| u.id.as_str()).collect();
    for factor in entries {
        if !uca_ids.contains(factor.uca_id.as_str()) {
            return Err(StpaError::UnknownUca(factor.id.clone(), factor.uca_id.clone()));
        }
    }
    let mut factors = entries.to_vec();
    factors.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(factors)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyGoalEntry {
    pub event_id: String,
    pub asil: AsilLevel,
    pub goal: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyRequirement {
    pub id: String,
    pub uca_id: String,
    pub asil: AsilLevel,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mitigation {
    pub factor_id: String,
    pub uca_id: String,
    pub text: String,
}

/// The functional safety concept document (step 8).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyConcept {
    pub goals: Vec<SafetyGoalEntry>,
    pub requirements: Vec<SafetyRequirement>,
    pub mitigations: Vec<Mitigation>,
}

fn requirement_text(base: &AnalysisBase, uca: &UnsafeControlAction) -> String {
    let name = base
        .control_structure
        .control_actions
        .iter()
        .find(|a| a.id == uca.control_action_id)
        .map(|a| a.name.as_str())
        .unwrap_or(uca.control_action_id.as_str());
    match uca.uca_type {
        UcaType::NotProvided => {
            format!("'{}' shall be provided when {}", name, uca.context)
        }
        UcaType::ProvidedCausesHazard => {
            format!("'{}' shall not be provided when {}", name, uca.context)
        }
        UcaType::WrongTimingOrder => format!(
            "'{}' shall be provided with correct timing and order when {}",
            name, uca.context
        ),
        UcaType::StoppedTooSoonAppliedTooLong => format!(
            "'{}' shall not be stopped too soon or applied too long when {}",
            name, uca.context
        ),
    }
}

/// Step 8: emits the functional safety concept. Blocked unless every
/// confirmed UCA carries at least one causal factor and events exist.
pub fn emit_safety_concept(
    base: &AnalysisBase,
    events: &[HazardousEvent],
    ucas: &[UnsafeControlAction],
    factors: &[CausalFactor],
) -> Result<SafetyConcept, StpaError> {
    if events.is_empty() {
        return Err(StpaError::NoEvents);
    }
    let covered: BTreeSet<&str> = factors.iter().map(|f| f.uca_id.as_str()).collect();
    let factorless: Vec<String> = ucas
        .iter()
        .filter(|u| !covered.contains(u.id.as_str()))
        .map(|u| u.id.clone())
        .collect();
    if !factorless.is_empty() {
        return Err(StpaError::FactorlessUcas(factorless));
    }

    let goals = events
        .iter()
        .map(|e| SafetyGoalEntry {
            event_id: e.id.clone(),
            asil: e.asil,
            goal: e.safety_goal.clone(),
        })
        .collect();

    let mut requirements = Vec::new();
    for uca in ucas {
        // A requirement inherits the strictest ASIL among the events of its
        // linked hazards.
        let asil = events
            .iter()
            .filter(|e| uca.linked_hazards.contains(&e.hazard_id))
            .map(|e| e.asil)
            .max()
            .unwrap_or(AsilLevel::QM);
        requirements.push(SafetyRequirement {
            id: format!("req-{}", uca.id),
            uca_id: uca.id.clone(),
            asil,
            text: requirement_text(base, uca),
        });
    }
    requirements.sort_by(|a, b| a.id.cmp(&b.id));

    let mut mitigations: Vec<Mitigation> = factors
        .iter()
        .map(|f| Mitigation {
            factor_id: f.id.clone(),
            uca_id: f.uca_id.clone(),
            text: format!("Mitigate: {} ({})", f.factor, f.unsafe_scenario),
        })
        .collect();
    mitigations.sort_by(|a, b| a.factor_id.cmp(&b.factor_id));

    Ok(SafetyConcept { goals, requirements, mitigations })
}

impl SafetyConcept {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("concept serializes")
    }

    /// Human-readable rendering with deterministic ordering.
    pub fn render_text(&self) -> String {
        let mut out = String::from("FUNCTIONAL SAFETY CONCEPT\n\nSafety goals:\n");
        for g in &self.goals {
            out.push_str(&format!("  [{}] ({}) {}\n", g.event_id, g.asil, g.goal));
        }
        out.push_str("\nSafety requirements:\n");
        for r in &self.requirements {
            out.push_str(&format!("  [{}] (ASIL {}) {}\n", r.id, r.asil, r.text));
        }
        out.push_str("\nCausal factor mitigations:\n");
        for m in &self.mitigations {
            out.push_str(&format!("  [{}] on {}: {}\n", m.factor_id, m.uca_id, m.text));
        }
        out
    }
}

/// Runs the full analysis over a model file.
pub fn analyze_model(
    model: &StpaModel,
    table: &AsilTable,
) -> Result<(AnalysisBase, Vec<HazardousEvent>, Vec<UnsafeControlAction>, Vec<CausalFactor>), StpaError>
{
    let base = step0_fundamentals(
        model.accidents.clone(),
        model.hazards.clone(),
        model.constraints.clone(),
        model.control_structure.clone(),
    )?;
    let events = run_hara(&base, &model.situations, &model.classifications, table)?;
    let ucas = identify_ucas(&base, &events, &model.ucas)?;
    let factors = analyze_causal_factors(&ucas, &model.causal_factors)?;
    Ok((base, events, ucas, factors))
}

/// Checks that every requirement traces through a UCA and its hazards to at
/// least one accident. Returns the number of verified chains.
pub fn traceability_closure(
    base: &AnalysisBase,
    events: &[HazardousEvent],
    ucas: &[UnsafeControlAction],
    concept: &SafetyConcept,
) -> Result<usize, StpaError> {
    let hazard_by_id: BTreeMap<&str, &Hazard> =
        base.hazards.iter().map(|h| (h.id.as_str(), h)).collect();
    let mut chains = 0;
    for req in &concept.requirements {
        let uca = ucas
            .iter()
            .find(|u| u.id == req.uca_id)
            .ok_or_else(|| StpaError::UnknownUca(req.id.clone(), req.uca_id.clone()))?;
        if uca.linked_hazards.is_empty() {
            return Err(StpaError::UcaWithoutHazard(uca.id.clone()));
        }
        for hazard_id in &uca.linked_hazards {
            let hazard = hazard_by_id
                .get(hazard_id.as_str())
                .ok_or_else(|| StpaError::UcaDanglingHazard(uca.id.clone(), hazard_id.clone()))?;
            if hazard.linked_accidents.is_empty() {
                return Err(StpaError::HazardWithoutAccident(hazard.id.clone()));
            }
            chains += hazard.linked_accidents.len();
        }
        let _ = events;
    }
    Ok(chains)
}

impl StpaModel {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn minimal_base() -> AnalysisBase {
        step0_fundamentals(
            vec![Accident {
                id: "acc-1".into(),
                description: "collision".into(),
                loss_categories: [LossCategory::Human].into(),
            }],
            vec![Hazard {
                id: "haz-1".into(),
                description: "loss of separation".into(),
                linked_accidents: ["acc-1".to_string()].into(),
                worst_case_environment: "dense traffic".into(),
            }],
            vec![SafetyConstraint {
                id: "sc-1".into(),
                hazard_id: "haz-1".into(),
                statement: "maintain separation".into(),
            }],
            ControlStructure {
                controllers: vec![Node { id: "ctl-1".into(), name: "driving function".into() }],
                processes: vec![Node { id: "prc-1".into(), name: "vehicle motion".into() }],
                control_actions: vec![ControlAction {
                    id: "ca-brake".into(),
                    from_controller: "ctl-1".into(),
                    to_process: "prc-1".into(),
                    name: "brake".into(),
                }],
                feedback: vec![Feedback {
                    id: "fb-1".into(),
                    from_process: "prc-1".into(),
                    to_controller: "ctl-1".into(),
                    name: "motion state".into(),
                }],
            },
        )
        .unwrap()
    }

    fn situations() -> Vec<OperationalSituation> {
        vec![
            OperationalSituation {
                id: "sit-highway".into(),
                description: "highway cruising".into(),
                operating_mode: "autonomous".into(),
            },
            OperationalSituation {
                id: "sit-urban".into(),
                description: "urban driving".into(),
                operating_mode: "autonomous".into(),
            },
        ]
    }

    fn classify(situation: &str, s: Severity, e: Exposure, c: Controllability) -> Classification {
        Classification {
            hazard_id: "haz-1".into(),
            situation_id: situation.into(),
            severity: s,
            exposure: e,
            controllability: c,
            rationale: String::new(),
            safety_goal: None,
        }
    }

    #[test]
    fn step0_minimal_base_is_valid() {
        minimal_base();
    }

    #[test]
    fn step0_rejects_unlinked_hazard() {
        let err = step0_fundamentals(
            vec![Accident {
                id: "acc-1".into(),
                description: "collision".into(),
                loss_categories: [LossCategory::Human].into(),
            }],
            vec![Hazard {
                id: "haz-1".into(),
                description: "x".into(),
                linked_accidents: BTreeSet::new(),
                worst_case_environment: String::new(),
            }],
            vec![],
            minimal_base().control_structure,
        )
        .unwrap_err();
        assert_eq!(err, StpaError::HazardWithoutAccident("haz-1".into()));
    }

    #[test]
    fn step0_rejects_dangling_constraint() {
        let base = minimal_base();
        let err = step0_fundamentals(
            base.accidents.clone(),
            base.hazards.clone(),
            vec![SafetyConstraint {
                id: "sc-x".into(),
                hazard_id: "haz-nope".into(),
                statement: String::new(),
            }],
            base.control_structure,
        )
        .unwrap_err();
        assert!(matches!(err, StpaError::DanglingConstraintHazard(_, _)));
    }

    #[test]
    fn item_definition_counts_and_partition() {
        let base = minimal_base();
        let item = derive_item_definition(&base);
        assert_eq!(item.functional_requirements.len(), 1);
        // Every structure element appears exactly once across the boundary.
        let mut all: Vec<&String> = item.inside.iter().chain(item.outside.iter()).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn hara_emits_one_event_per_pair() {
        let base = minimal_base();
        let table = default_table();
        let classifications = vec![
            classify("sit-highway", Severity::S3, Exposure::E4, Controllability::C2),
            classify("sit-urban", Severity::S2, Exposure::E3, Controllability::C2),
        ];
        let events = run_hara(&base, &situations(), &classifications, &table).unwrap();
        assert_eq!(events.len(), 2);
        for e in &events {
            assert_eq!(e.asil, asil_lookup(e.severity, e.exposure, e.controllability, &table));
            assert!(!e.safety_goal.is_empty());
        }
        assert!(events[0].safety_goal.contains("Prevent/mitigate"));

        let none = run_hara(&base, &[], &[], &table).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn uca_grid_is_actions_times_four() {
        let base = minimal_base();
        assert_eq!(uca_candidate_grid(&base).len(), 4);
    }

    #[test]
    fn no_confirmed_rows_yield_empty_uca_list() {
        let base = minimal_base();
        let table = default_table();
        let classifications =
            vec![classify("sit-highway", Severity::S3, Exposure::E4, Controllability::C2)];
        let events = run_hara(&base, &situations(), &classifications, &table).unwrap();
        assert!(identify_ucas(&base, &events, &[]).unwrap().is_empty());
        assert_eq!(identify_ucas(&base, &[], &[]).unwrap_err(), StpaError::NoEvents);
    }

    #[test]
    fn concept_blocked_on_factorless_uca() {
        let base = minimal_base();
        let table = default_table();
        let classifications =
            vec![classify("sit-highway", Severity::S3, Exposure::E4, Controllability::C2)];
        let events = run_hara(&base, &situations(), &classifications, &table).unwrap();
        let ucas = identify_ucas(
            &base,
            &events,
            &[UnsafeControlAction {
                id: "uca-1".into(),
                control_action_id: "ca-brake".into(),
                uca_type: UcaType::NotProvided,
                context: "obstacle ahead".into(),
                linked_hazards: ["haz-1".to_string()].into(),
            }],
        )
        .unwrap();
        let err = emit_safety_concept(&base, &events, &ucas, &[]).unwrap_err();
        assert_eq!(err, StpaError::FactorlessUcas(vec!["uca-1".into()]));

        let factors = analyze_causal_factors(
            &ucas,
            &[CausalFactor {
                id: "cf-1".into(),
                uca_id: "uca-1".into(),
                factor: "sensor failure".into(),
                unsafe_scenario: "obstacle not detected".into(),
            }],
        )
        .unwrap();
        let concept = emit_safety_concept(&base, &events, &ucas, &factors).unwrap();
        assert_eq!(concept.goals.len(), events.len());
        assert_eq!(concept.requirements.len(), ucas.len());
        assert_eq!(concept.requirements[0].asil, events[0].asil);
        assert!(concept.requirements[0].text.contains("shall be provided"));
    }

    #[test]
    fn empty_analysis_is_an_error() {
        let base = minimal_base();
        assert_eq!(emit_safety_concept(&base, &[], &[], &[]).unwrap_err(), StpaError::NoEvents);
    }

    #[test]
    fn factor_with_dangling_uca_rejected() {
        let err = analyze_causal_factors(
            &[],
            &[CausalFactor {
                id: "cf-1".into(),
                uca_id: "uca-missing".into(),
                factor: String::new(),
                unsafe_scenario: String::new(),
            }],
        )
        .unwrap_err();
        assert!(matches!(err, StpaError::UnknownUca(_, _)));
    }

    #[test]
    fn deterministic_documents() {
        let base = minimal_base();
        let table = default_table();
        let classifications = vec![
            classify("sit-highway", Severity::S3, Exposure::E4, Controllability::C2),
            classify("sit-urban", Severity::S2, Exposure::E3, Controllability::C2),
        ];
        let events = run_hara(&base, &situations(), &classifications, &table).unwrap();
        let ucas = identify_ucas(
            &base,
            &events,
            &[UnsafeControlAction {
                id: "uca-1".into(),
                control_action_id: "ca-brake".into(),
                uca_type: UcaType::NotProvided,
                context: "obstacle ahead".into(),
                linked_hazards: ["haz-1".to_string()].into(),
            }],
        )
        .unwrap();
        let factors = analyze_causal_factors(
            &ucas,
            &[CausalFactor {
                id: "cf-1".into(),
                uca_id: "uca-1".into(),
                factor: "sensor failure".into(),
                unsafe_scenario: "obstacle not detected".into(),
            }],
        )
        .unwrap();
        let a = emit_safety_concept(&base, &events, &ucas, &factors).unwrap();
        let b = emit_safety_concept(&base, &events, &ucas, &factors).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.render_text(), b.render_text());
    }
}

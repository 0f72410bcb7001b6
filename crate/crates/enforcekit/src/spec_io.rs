//! Load/store enforcement models, traces, and API catalogs, and validate
//! models against the catalog-backed metamodel constraints.
//!
//! The on-disk encodings:
//!
//! - model: one JSON object (`name`, `lifecycleObject`, `api`, `states`,
//!   `transitions`);
//! - trace: JSONL, one event object per line;
//! - catalog: one JSON object mapping class names to their declared
//!   methods, parent class, and resource semantics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    ClassHierarchy, EnforcementModel, Event, Guard, OutputAction, Phase, Trace, ENFORCER_CLASS,
    SPECIAL_RESUME,
};

/// Resource discipline of a catalog class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    /// At most one holder system-wide; conflicting acquisition fails.
    Exclusive,
    /// Any number of holders; leaks are still tracked per holder.
    Shared,
    /// Not a resource.
    None,
}

/// Acquire/release semantics of one resource class, shared by the engine's
/// resource manager and the simulator's registry.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResourceProfile {
    pub kind: Option<ResourceKind>,
    pub acquires: BTreeSet<String>,
    pub releases: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CatalogClass {
    #[serde(default)]
    pub methods: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource_kind: Option<ResourceKind>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub acquires: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub releases: BTreeSet<String>,
}

/// Ground truth for method-existence validation and subclass matching.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiCatalog {
    pub classes: BTreeMap<String, CatalogClass>,
}

impl ApiCatalog {
    /// Parent links must be declared and acyclic; acquire/release sets must
    /// name declared methods.
    pub fn check(&self) -> Result<(), String> {
        for (name, class) in &self.classes {
            if let Some(parent) = &class.parent {
                if !self.classes.contains_key(parent) {
                    return Err(format!("class `{name}`: undeclared parent `{parent}`"));
                }
            }
            for m in class.acquires.iter().chain(class.releases.iter()) {
                if !class.methods.contains(m) {
                    return Err(format!("class `{name}`: resource method `{m}` is not declared"));
                }
            }
        }
        // cycle check by bounded parent walking
        for name in self.classes.keys() {
            let mut current = name.as_str();
            let mut hops = 0;
            while let Some(parent) = self.classes.get(current).and_then(|c| c.parent.as_deref()) {
                hops += 1;
                if hops > self.classes.len() {
                    return Err(format!("cyclic parent chain through `{name}`"));
                }
                current = parent;
            }
        }
        Ok(())
    }

    pub fn hierarchy(&self) -> ClassHierarchy {
        let mut h = ClassHierarchy::new();
        for (name, class) in &self.classes {
            h.insert(name.clone(), class.parent.clone());
        }
        h
    }

    /// Resource semantics per declaring class.
    pub fn resource_profiles(&self) -> BTreeMap<String, ResourceProfile> {
        self.classes
            .iter()
            .filter(|(_, c)| {
                c.resource_kind.is_some() || !c.acquires.is_empty() || !c.releases.is_empty()
            })
            .map(|(name, c)| {
                (
                    name.clone(),
                    ResourceProfile {
                        kind: c.resource_kind,
                        acquires: c.acquires.clone(),
                        releases: c.releases.clone(),
                    },
                )
            })
            .collect()
    }

    /// Methods visible on `class`, own and inherited.
    pub fn visible_methods(&self, class: &str) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        let mut current = Some(class);
        let mut hops = 0;
        while let Some(name) = current {
            if let Some(c) = self.classes.get(name) {
                out.extend(c.methods.iter().map(String::as_str));
                current = c.parent.as_deref();
            } else {
                break;
            }
            hops += 1;
            if hops > self.classes.len() {
                break;
            }
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum SpecIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}{}: {message}", fmt_line(.line))]
    Parse { path: String, line: Option<usize>, message: String },
    #[error("{path}: line {line}: {message}")]
    IllFormedTrace { path: String, line: usize, message: String },
}

fn fmt_line(line: &Option<usize>) -> String {
    match line {
        Some(n) => format!(": line {n}"),
        None => String::new(),
    }
}

fn read(path: &Path) -> Result<String, SpecIoError> {
    fs::read_to_string(path)
        .map_err(|source| SpecIoError::Io { path: path.display().to_string(), source })
}

/// Loads a model file and checks its structural invariants.
pub fn load_model(path: &Path) -> Result<EnforcementModel, SpecIoError> {
    let text = read(path)?;
    let model: EnforcementModel = serde_json::from_str(&text).map_err(|e| SpecIoError::Parse {
        path: path.display().to_string(),
        line: Some(e.line()),
        message: e.to_string(),
    })?;
    model.check_structure().map_err(|e| SpecIoError::Parse {
        path: path.display().to_string(),
        line: None,
        message: e.to_string(),
    })?;
    Ok(model)
}

pub fn load_catalog(path: &Path) -> Result<ApiCatalog, SpecIoError> {
    let text = read(path)?;
    let catalog: ApiCatalog = serde_json::from_str(&text).map_err(|e| SpecIoError::Parse {
        path: path.display().to_string(),
        line: Some(e.line()),
        message: e.to_string(),
    })?;
    catalog.check().map_err(|message| SpecIoError::Parse {
        path: path.display().to_string(),
        line: None,
        message,
    })?;
    Ok(catalog)
}

/// Loads a JSONL trace and rejects ill-formed ones (an AfterCall without a
/// matching open BeforeCall).
pub fn load_trace(path: &Path) -> Result<Trace, SpecIoError> {
    let text = read(path)?;
    let mut events = Vec::new();
    let mut line_of_event = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ev: Event = serde_json::from_str(line).map_err(|e| SpecIoError::Parse {
            path: path.display().to_string(),
            line: Some(idx + 1),
            message: e.to_string(),
        })?;
        events.push(ev);
        line_of_event.push(idx + 1);
    }
    let trace = Trace::new(events);
    if let Err(e) = trace.check_well_formed() {
        return Err(SpecIoError::IllFormedTrace {
            path: path.display().to_string(),
            line: line_of_event[e.index],
            message: e.to_string(),
        });
    }
    Ok(trace)
}

pub fn store_trace(trace: &Trace, path: &Path) -> Result<(), SpecIoError> {
    let mut out = String::new();
    for ev in &trace.events {
        out.push_str(&serde_json::to_string(ev).expect("event serializes"));
        out.push('\n');
    }
    fs::write(path, out)
        .map_err(|source| SpecIoError::Io { path: path.display().to_string(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FindingCode {
    MissingInitialState,
    DanglingStateRef,
    UnknownClass,
    UnknownMethod,
    UnboundVariable,
    UnknownSpecial,
    ForeignSignatureClass,
    EmptyExclusion,
    DuplicateExclusion,
    OverlappingGuards,
    UnreachableState,
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: FindingCode,
    pub location: String,
    pub message: String,
}

/// The outcome of validating one model; the model is deployable iff
/// `errors` is empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_deployable(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(
        &mut self,
        code: FindingCode,
        location: impl Into<String>,
        message: impl Into<String>,
    ) {
        self.errors.push(Finding { code, location: location.into(), message: message.into() });
    }

    fn warn(&mut self, code: FindingCode, location: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Finding { code, location: location.into(), message: message.into() });
    }
}

/// Validates a model against the catalog. Structural breakage is reported
/// too, so models built in memory get the same findings as loaded ones.
pub fn validate_model(model: &EnforcementModel, catalog: &ApiCatalog) -> ValidationReport {
    let mut report = ValidationReport::default();
    let hierarchy = catalog.hierarchy();

    let declared: BTreeSet<_> = model.states.iter().map(|s| s.id).collect();
    let initials = model.states.iter().filter(|s| s.initial).count();
    if initials != 1 {
        report.error(
            FindingCode::MissingInitialState,
            "states",
            format!("expected exactly one initial state, found {initials}"),
        );
    }

    for (class, role) in [(&model.lifecycle_object, "lifecycleObject"), (&model.api, "api")] {
        if !catalog.classes.contains_key(class.as_str()) {
            report.error(
                FindingCode::UnknownClass,
                role,
                format!("class `{class}` is not declared in the catalog"),
            );
        }
    }

    for (i, t) in model.transitions.iter().enumerate() {
        let loc = format!("transitions[{i}]");
        if !declared.contains(&t.from) {
            report.error(
                FindingCode::DanglingStateRef,
                &loc,
                format!("undeclared state {}", t.from),
            );
        }
        if !declared.contains(&t.to) {
            report.error(FindingCode::DanglingStateRef, &loc, format!("undeclared state {}", t.to));
        }
        if let Guard::AnyExcept { exclude, .. } = &t.intercepted {
            if exclude.is_empty() {
                report.error(FindingCode::EmptyExclusion, &loc, "empty exclusion set");
            }
            let mut seen = BTreeSet::new();
            for sig in exclude {
                if !seen.insert(sig.to_string()) {
                    report.error(
                        FindingCode::DuplicateExclusion,
                        &loc,
                        format!("duplicate excluded signature `{sig}`"),
                    );
                }
            }
        }
        for sig in t.intercepted.signatures() {
            check_signature(model, catalog, &mut report, &loc, sig);
        }
        for action in &t.outputs {
            match action {
                OutputAction::Emit { value } => {
                    check_signature(model, catalog, &mut report, &loc, value);
                }
                OutputAction::EmitBound { value } => {
                    if t.intercepted.binder() != Some(value.as_str()) {
                        report.error(
                            FindingCode::UnboundVariable,
                            &loc,
                            format!("emitBound variable `{value}` is not bound by the guard"),
                        );
                    }
                }
                OutputAction::Special { value } => {
                    if value != SPECIAL_RESUME {
                        report.error(
                            FindingCode::UnknownSpecial,
                            &loc,
                            format!("unknown special operation `{value}`"),
                        );
                    }
                }
            }
        }
    }

    overlapping_guards(model, catalog, &hierarchy, &mut report);
    unreachable_states(model, &mut report);
    report
}

fn check_signature(
    model: &EnforcementModel,
    catalog: &ApiCatalog,
    report: &mut ValidationReport,
    loc: &str,
    sig: &crate::model::ActionSignature,
) {
    let class = sig.class_name.as_str();
    if class == ENFORCER_CLASS {
        return;
    }
    if class != model.lifecycle_object && class != model.api {
        report.error(
            FindingCode::ForeignSignatureClass,
            loc,
            format!(
                "`{sig}` references `{class}`; only the lifecycle object, the api, and the enforcer pseudo-class are allowed (one client per library)"
            ),
        );
        return;
    }
    if !catalog.classes.contains_key(class) {
        report.error(
            FindingCode::UnknownClass,
            loc,
            format!("class `{class}` is not in the catalog"),
        );
        return;
    }
    if !catalog.visible_methods(class).contains(sig.method_name.as_str()) {
        report.error(
            FindingCode::UnknownMethod,
            loc,
            format!("`{}` is not a declared method of `{class}`", sig.method_name),
        );
    }
}

// Enumerates the catalog's event alphabet and warns when two transitions out
// of one state can match the same event. The engine resolves such overlaps
// by declaration order.
fn overlapping_guards(
    model: &EnforcementModel,
    catalog: &ApiCatalog,
    hierarchy: &ClassHierarchy,
    report: &mut ValidationReport,
) {
    let mut alphabet = Vec::new();
    for class in catalog.classes.keys() {
        for method in catalog.visible_methods(class) {
            for phase in [Phase::Before, Phase::After] {
                alphabet.push(Event {
                    phase,
                    class_name: class.clone(),
                    method_name: method.to_string(),
                    receiver_id: 0,
                    component_id: 0,
                    args: vec![],
                    source: crate::model::EventSource::App,
                });
            }
        }
    }
    let states: BTreeSet<_> = model.states.iter().map(|s| s.id).collect();
    for state in states {
        let outgoing: Vec<(usize, &Guard)> = model
            .transitions
            .iter()
            .enumerate()
            .filter(|(_, t)| t.from == state)
            .map(|(i, t)| (i, &t.intercepted))
            .collect();
        if outgoing.len() < 2 {
            continue;
        }
        for ev in &alphabet {
            let matching: Vec<usize> = outgoing
                .iter()
                .filter(|(_, g)| g.matches_lenient(ev, hierarchy))
                .map(|(i, _)| *i)
                .collect();
            if matching.len() >= 2 {
                report.warn(
                    FindingCode::OverlappingGuards,
                    format!("state {state}"),
                    format!(
                        "transitions {matching:?} can all match `{}#{}.{}`; the first in declaration order wins",
                        ev.phase_prefix(),
                        ev.class_name,
                        ev.method_name
                    ),
                );
                break; // one example per state is enough
            }
        }
    }
}

fn unreachable_states(model: &EnforcementModel, report: &mut ValidationReport) {
    let Some(initial) = model.initial_state() else { return };
    let mut reached = BTreeSet::from([initial]);
    let mut frontier = vec![initial];
    while let Some(state) = frontier.pop() {
        for t in model.transitions.iter().filter(|t| t.from == state) {
            if reached.insert(t.to) {
                frontier.push(t.to);
            }
        }
    }
    for s in &model.states {
        if !reached.contains(&s.id) {
            report.warn(
                FindingCode::UnreachableState,
                format!("state {}", s.id),
                "not reachable from the initial state",
            );
        }
    }
}

impl Event {
    fn phase_prefix(&self) -> &'static str {
        match self.phase {
            Phase::Before => "before",
            Phase::After => "after",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_signature, EventSource, State, Transition};
    use std::io::Write;

    fn tmpfile(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn small_catalog() -> ApiCatalog {
        serde_json::from_str(
            r#"{
              "classes": {
                "android.content.Context": {"methods": ["onCreate", "onDestroy"]},
                "android.app.Activity": {
                  "methods": ["onCreate", "onResume", "onPause"],
                  "parent": "android.content.Context"
                },
                "android.hardware.Camera": {
                  "methods": ["open", "release"],
                  "resourceKind": "exclusive",
                  "acquires": ["open"],
                  "releases": ["release"]
                }
              }
            }"#,
        )
        .unwrap()
    }

    fn valid_model_json() -> &'static str {
        r#"{
          "name": "CameraReleaseOnPause",
          "lifecycleObject": "android.app.Activity",
          "api": "android.hardware.Camera",
          "states": [
            {"id": 0, "initial": true},
            {"id": 1},
            {"id": 2}
          ],
          "transitions": [
            {"from": 0, "to": 1,
             "intercepted": {"kind": "exact", "signature": "before#android.app.Activity.onCreate"},
             "outputs": [{"kind": "emit", "value": "before#android.app.Activity.onCreate"}]},
            {"from": 1, "to": 2,
             "intercepted": {"kind": "exact", "signature": "after#android.hardware.Camera.open"},
             "outputs": [{"kind": "emit", "value": "after#android.hardware.Camera.open"}]},
            {"from": 2, "to": 1,
             "intercepted": {"kind": "exact", "signature": "before#android.hardware.Camera.release"},
             "outputs": [{"kind": "emit", "value": "before#android.hardware.Camera.release"}]},
            {"from": 2, "to": 0,
             "intercepted": {"kind": "exact", "signature": "after#android.app.Activity.onPause"},
             "outputs": [{"kind": "emit", "value": "before#android.hardware.Camera.release"},
                         {"kind": "emit", "value": "after#android.app.Activity.onPause"}]}
          ]
        }"#
    }

    #[test]
    fn loads_valid_model() {
        let f = tmpfile(valid_model_json());
        let m = load_model(f.path()).unwrap();
        assert_eq!(m.name, "CameraReleaseOnPause");
        assert_eq!(m.states.len(), 3);
        assert_eq!(m.transitions.len(), 4);
    }

    #[test]
    fn rejects_two_initial_states() {
        let bad = valid_model_json().replace("{\"id\": 1}", "{\"id\": 1, \"initial\": true}");
        let f = tmpfile(&bad);
        let e = load_model(f.path()).unwrap_err();
        assert!(e.to_string().contains("initial"), "{e}");
    }

    #[test]
    fn accepts_vacuous_model() {
        let f = tmpfile(
            r#"{"name":"Noop","lifecycleObject":"a.B","api":"c.D",
                "states":[{"id":0,"initial":true}],"transitions":[]}"#,
        );
        let m = load_model(f.path()).unwrap();
        assert!(m.transitions.is_empty());
    }

    #[test]
    fn validation_accepts_the_camera_model() {
        let f = tmpfile(valid_model_json());
        let m = load_model(f.path()).unwrap();
        let report = validate_model(&m, &small_catalog());
        assert!(report.errors.is_empty(), "{:?}", report.errors);
    }

    #[test]
    fn validation_flags_unknown_method() {
        let text = valid_model_json().replace("Camera.open", "Camera.openn");
        let f = tmpfile(&text);
        let m = load_model(f.path()).unwrap();
        let report = validate_model(&m, &small_catalog());
        assert!(report.errors.iter().any(|f| f.code == FindingCode::UnknownMethod));
    }

    #[test]
    fn validation_warns_on_overlapping_guards() {
        // Exact(before#Camera.open) and AnyExcept({before#Activity.onPause})
        // out of one state both match before#Camera.open.
        let m = EnforcementModel {
            name: "Overlap".to_string(),
            lifecycle_object: "android.app.Activity".to_string(),
            api: "android.hardware.Camera".to_string(),
            states: vec![State { id: 1, initial: true }],
            transitions: vec![
                Transition {
                    from: 1,
                    to: 1,
                    intercepted: Guard::Exact {
                        signature: parse_signature("before#android.hardware.Camera.open").unwrap(),
                    },
                    outputs: vec![],
                },
                Transition {
                    from: 1,
                    to: 1,
                    intercepted: Guard::AnyExcept {
                        exclude: vec![
                            parse_signature("before#android.app.Activity.onPause").unwrap()
                        ],
                        binder: Some("e".to_string()),
                    },
                    outputs: vec![OutputAction::EmitBound { value: "e".to_string() }],
                },
            ],
        };
        let catalog = small_catalog();
        let report = validate_model(&m, &catalog);

        // independent oracle: enumerate the catalog alphabet by hand and
        // count guard matches per event
        let hierarchy = catalog.hierarchy();
        let mut overlap_exists = false;
        for class in catalog.classes.keys() {
            for method in catalog.visible_methods(class) {
                for phase in [Phase::Before, Phase::After] {
                    let ev = Event {
                        phase,
                        class_name: class.clone(),
                        method_name: method.to_string(),
                        receiver_id: 0,
                        component_id: 0,
                        args: vec![],
                        source: EventSource::App,
                    };
                    let n = m
                        .transitions
                        .iter()
                        .filter(|t| t.intercepted.matches_lenient(&ev, &hierarchy))
                        .count();
                    if n >= 2 {
                        overlap_exists = true;
                    }
                }
            }
        }
        assert!(overlap_exists);
        assert!(report.warnings.iter().any(|f| f.code == FindingCode::OverlappingGuards));
    }

    #[test]
    fn validation_warns_on_unreachable_state() {
        let f = tmpfile(
            r#"{"name":"Orphan","lifecycleObject":"a.B","api":"c.D",
                "states":[{"id":0,"initial":true},{"id":9}],"transitions":[]}"#,
        );
        let m = load_model(f.path()).unwrap();
        let report = validate_model(&m, &small_catalog());
        assert!(report.warnings.iter().any(|f| f.code == FindingCode::UnreachableState));
    }

    #[test]
    fn trace_roundtrip_and_rejections() {
        let f = tmpfile("");
        assert!(load_trace(f.path()).unwrap().is_empty());

        let line = r#"{"phase":"before","class":"demo.Ops","method":"opA","receiver":0,"component":1,"args":[],"source":"app"}"#;
        let f = tmpfile(&format!("{line}\n"));
        let t = load_trace(f.path()).unwrap();
        assert_eq!(t.len(), 1);

        let out = tempfile::NamedTempFile::new().unwrap();
        store_trace(&t, out.path()).unwrap();
        assert_eq!(load_trace(out.path()).unwrap(), t);

        let after_only = line.replace("\"before\"", "\"after\"");
        let f = tmpfile(&format!("{after_only}\n"));
        assert!(matches!(load_trace(f.path()), Err(SpecIoError::IllFormedTrace { .. })));
    }

    #[test]
    fn catalog_rejects_undeclared_parent() {
        let f = tmpfile(r#"{"classes":{"a.B":{"methods":[],"parent":"no.Such"}}}"#);
        assert!(load_catalog(f.path()).is_err());
    }

    #[test]
    fn shipped_camera_model_loads_and_validates() {
        let root = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
        let model = load_model(&root.join("corpus/models/camera_policy1.json")).unwrap();
        assert_eq!(model.name, "CameraReleaseOnPause");
        assert_eq!(model.states.len(), 4);
        assert_eq!(model.transitions.len(), 8);
        assert!(model.uses_resume());
        let catalog = load_catalog(&root.join("catalog.android.json")).unwrap();
        let report = validate_model(&model, &catalog);
        assert!(report.errors.is_empty(), "{:?}", report.errors);
        assert!(report.warnings.is_empty(), "{:?}", report.warnings);
    }

    #[test]
    fn every_shipped_corpus_model_is_deployable() {
        let root = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
        let catalog = load_catalog(&root.join("catalog.android.json")).unwrap();
        let mut checked = 0;
        for entry in std::fs::read_dir(root.join("corpus/models")).unwrap() {
            let path = entry.unwrap().path();
            let model = load_model(&path).unwrap();
            let report = validate_model(&model, &catalog);
            assert!(report.is_deployable(), "{}: {:?}", path.display(), report.errors);
            checked += 1;
        }
        assert_eq!(checked, 19);
    }

    mod properties {
        use super::*;
        use crate::engine::{Session, SessionConfig};
        use crate::model::{EventSource, OutputAction, StateId};
        use proptest::prelude::*;

        // catalog signatures random models draw from
        fn sig_pool() -> Vec<crate::model::ActionSignature> {
            [
                "before#android.app.Activity.onCreate",
                "before#android.app.Activity.onResume",
                "after#android.app.Activity.onPause",
                "after#android.hardware.Camera.open",
                "before#android.hardware.Camera.release",
            ]
            .iter()
            .map(|s| parse_signature(s).unwrap())
            .collect()
        }

        prop_compose! {
            fn arb_transition(n_states: StateId)(
                from in 0..n_states,
                to in 0..n_states,
                guard_pick in 0usize..5,
                any_except in prop::bool::ANY,
                shape in 0usize..4,
            ) -> Transition {
                let pool = sig_pool();
                let picked = pool[guard_pick].clone();
                let intercepted = if any_except {
                    Guard::AnyExcept { exclude: vec![picked.clone()], binder: Some("e".to_string()) }
                } else {
                    Guard::Exact { signature: picked.clone() }
                };
                let outputs = match shape {
                    0 => vec![], // suppression
                    1 if any_except => vec![OutputAction::EmitBound { value: "e".to_string() }],
                    1 => vec![OutputAction::Emit { value: picked }],
                    2 => vec![OutputAction::Emit {
                        value: parse_signature("before#android.hardware.Camera.release").unwrap(),
                    }],
                    _ => vec![OutputAction::Special { value: "resume".to_string() }],
                };
                Transition { from, to, intercepted, outputs }
            }
        }

        prop_compose! {
            fn arb_model()(n_states in 1..4u32)(
                transitions in prop::collection::vec(arb_transition(n_states), 0..6),
                n_states in Just(n_states),
            ) -> EnforcementModel {
                EnforcementModel {
                    name: "Generated".to_string(),
                    lifecycle_object: "android.app.Activity".to_string(),
                    api: "android.hardware.Camera".to_string(),
                    states: (0..n_states)
                        .map(|id| State { id, initial: id == 0 })
                        .collect(),
                    transitions,
                }
            }
        }

        proptest! {
            // models that validate with zero errors always instantiate and
            // run without runtime failures; validation itself is pure
            #[test]
            fn validated_models_instantiate_and_run(model in arb_model()) {
                let catalog = small_catalog();
                let report = validate_model(&model, &catalog);
                prop_assert_eq!(&report, &validate_model(&model, &catalog));
                prop_assume!(report.is_deployable());

                let cfg = SessionConfig {
                    hierarchy: catalog.hierarchy(),
                    resource_profiles: catalog.resource_profiles(),
                    ..Default::default()
                };
                let mut session = Session::new(vec![model], cfg).unwrap();
                for sig in sig_pool() {
                    let out = session.dispatch(Event {
                        phase: sig.phase,
                        class_name: sig.class_name.clone(),
                        method_name: sig.method_name.clone(),
                        receiver_id: 7,
                        component_id: 1,
                        args: vec![],
                        source: EventSource::App,
                    });
                    drop(out);
                }
                prop_assert!(session.finalize().bookkeeping_holds());
            }
        }
    }
}

//! Core domain types for enforcement models: action signatures, guards,
//! output actions, transitions, events, and traces.
//!
//! Everything here is an immutable value after construction and can be
//! shared freely across threads. File encodings live in [`crate::spec_io`];
//! this module only defines the data and the matching rules.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The only special operation understood by the engine and the generators.
pub const SPECIAL_RESUME: &str = "resume";

/// Pseudo-class reserved for operations implemented by the enforcer itself.
pub const ENFORCER_CLASS: &str = "enforcer";

/// Whether an event (or an intercepted action) refers to the start of a
/// method call or to its completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Before,
    After,
}

impl Phase {
    fn prefix(self) -> &'static str {
        match self {
            Phase::Before => "before",
            Phase::After => "after",
        }
    }
}

/// A phased method reference: `before#<class>.<method>` or
/// `after#<class>.<method>`.
///
/// The textual form is canonical; parsing and printing round-trip exactly.
/// `<init>` is accepted as a method name so constructor calls are ordinary
/// method events.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionSignature {
    pub phase: Phase,
    pub class_name: String,
    pub method_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed signature `{text}`: {reason}")]
pub struct MalformedSignature {
    pub text: String,
    pub reason: String,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '$' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
}

fn is_method_name(s: &str) -> bool {
    s == "<init>" || is_identifier(s)
}

fn is_class_name(s: &str) -> bool {
    !s.is_empty() && s.split('.').all(is_identifier)
}

/// Parses the canonical textual form of an action signature.
pub fn parse_signature(text: &str) -> Result<ActionSignature, MalformedSignature> {
    let err =
        |reason: &str| MalformedSignature { text: text.to_string(), reason: reason.to_string() };
    let (prefix, rest) = text.split_once('#').ok_or_else(|| err("missing phase prefix"))?;
    let phase = match prefix {
        "before" => Phase::Before,
        "after" => Phase::After,
        _ => return Err(err("phase prefix must be `before` or `after`")),
    };
    let (class_name, method_name) =
        rest.rsplit_once('.').ok_or_else(|| err("expected `<class>.<method>`"))?;
    if !is_class_name(class_name) {
        return Err(err("class name must be non-empty dotted identifiers"));
    }
    if !is_method_name(method_name) {
        return Err(err("method name must be an identifier or `<init>`"));
    }
    Ok(ActionSignature {
        phase,
        class_name: class_name.to_string(),
        method_name: method_name.to_string(),
    })
}

impl ActionSignature {
    /// Checks the structural invariants for signatures built in memory
    /// rather than parsed.
    pub fn check(&self) -> Result<(), MalformedSignature> {
        let text = self.to_string();
        if !is_class_name(&self.class_name) || !is_method_name(&self.method_name) {
            return Err(MalformedSignature {
                text,
                reason: "invalid class or method name".to_string(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for ActionSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}.{}", self.phase.prefix(), self.class_name, self.method_name)
    }
}

impl FromStr for ActionSignature {
    type Err = MalformedSignature;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_signature(s)
    }
}

impl Serialize for ActionSignature {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ActionSignature {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_signature(&text).map_err(serde::de::Error::custom)
    }
}

/// Declared subclass relationships, built from a catalog and extended with
/// scenario component classes. Lookup is reflexive: every class is a
/// subtype of itself, known to the hierarchy or not.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassHierarchy {
    parents: BTreeMap<String, Option<String>>,
}

impl ClassHierarchy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, class: impl Into<String>, parent: Option<String>) {
        self.parents.insert(class.into(), parent);
    }

    pub fn contains(&self, class: &str) -> bool {
        self.parents.contains_key(class)
    }

    /// True iff `sub` equals `sup` or is a declared (transitive) subclass.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sub == sup {
            return true;
        }
        let mut current = sub;
        let mut hops = 0;
        while let Some(Some(parent)) = self.parents.get(current) {
            if parent == sup {
                return true;
            }
            current = parent;
            hops += 1;
            if hops > self.parents.len() {
                break; // cyclic input; treated as no relation
            }
        }
        false
    }

    /// Walks `class` and its ancestors, innermost first.
    pub fn ancestors<'a>(&'a self, class: &'a str) -> Ancestors<'a> {
        Ancestors { hierarchy: self, next: Some(class), hops: 0 }
    }
}

pub struct Ancestors<'a> {
    hierarchy: &'a ClassHierarchy,
    next: Option<&'a str>,
    hops: usize,
}

impl<'a> Iterator for Ancestors<'a> {
    type Item = &'a str;

    fn next(&mut self) -> Option<&'a str> {
        let current = self.next?;
        self.hops += 1;
        if self.hops > self.hierarchy.parents.len() + 1 {
            self.next = None;
            return None;
        }
        self.next = match self.hierarchy.parents.get(current) {
            Some(Some(parent)) => Some(parent.as_str()),
            _ => None,
        };
        Some(current)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("event class `{0}` is not declared in the hierarchy")]
    UnknownClass(String),
}

/// True iff the phases and method names are equal and the event class is the
/// signature class or a declared subclass of it. Unknown event classes only
/// match by exact name; this is the total variant used by the engine.
pub fn signature_matches_lenient(
    sig: &ActionSignature,
    ev: &Event,
    hierarchy: &ClassHierarchy,
) -> bool {
    sig.phase == ev.phase
        && sig.method_name == ev.method_name
        && hierarchy.is_subtype(&ev.class_name, &sig.class_name)
}

/// Strict matching: errs when the event class is not declared.
pub fn signature_matches(
    sig: &ActionSignature,
    ev: &Event,
    hierarchy: &ClassHierarchy,
) -> Result<bool, MatchError> {
    if !hierarchy.contains(&ev.class_name) {
        return Err(MatchError::UnknownClass(ev.class_name.clone()));
    }
    Ok(signature_matches_lenient(sig, ev, hierarchy))
}

/// Condition on the intercepted event of a transition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Guard {
    /// Matches exactly one signature (subclass-aware on the event side).
    #[serde(rename = "exact")]
    Exact { signature: ActionSignature },
    /// Matches any event not matched by the exclusion set, optionally
    /// binding the concrete event to `binder` for re-emission.
    #[serde(rename = "anyExcept")]
    AnyExcept {
        exclude: Vec<ActionSignature>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        binder: Option<String>,
    },
}

impl Guard {
    pub fn binder(&self) -> Option<&str> {
        match self {
            Guard::Exact { .. } => None,
            Guard::AnyExcept { binder, .. } => binder.as_deref(),
        }
    }

    /// All signatures textually present in the guard.
    pub fn signatures(&self) -> Vec<&ActionSignature> {
        match self {
            Guard::Exact { signature } => vec![signature],
            Guard::AnyExcept { exclude, .. } => exclude.iter().collect(),
        }
    }

    /// Total matching used by the engine; never errs.
    pub fn matches_lenient(&self, ev: &Event, hierarchy: &ClassHierarchy) -> bool {
        match self {
            Guard::Exact { signature } => signature_matches_lenient(signature, ev, hierarchy),
            Guard::AnyExcept { exclude, .. } => {
                !exclude.iter().any(|sig| signature_matches_lenient(sig, ev, hierarchy))
            }
        }
    }
}

/// Successful guard match, carrying the binder name when the guard binds
/// the intercepted event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardMatch {
    pub binder: Option<String>,
}

/// Strict guard matching: errs when the event class is undeclared.
pub fn guard_matches(
    guard: &Guard,
    ev: &Event,
    hierarchy: &ClassHierarchy,
) -> Result<Option<GuardMatch>, MatchError> {
    if !hierarchy.contains(&ev.class_name) {
        return Err(MatchError::UnknownClass(ev.class_name.clone()));
    }
    if guard.matches_lenient(ev, hierarchy) {
        Ok(Some(GuardMatch { binder: guard.binder().map(str::to_string) }))
    } else {
        Ok(None)
    }
}

/// One action emitted when a transition fires.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum OutputAction {
    /// Emit the named action. When the signature describes the intercepted
    /// event itself this re-emits the event unchanged (pass-through);
    /// otherwise a new enforcer-sourced event is inserted.
    #[serde(rename = "emit")]
    Emit { value: ActionSignature },
    /// Re-emit the event bound by the guard's binder variable.
    #[serde(rename = "emitBound")]
    EmitBound { value: String },
    /// A special operation with generator-known semantics. Only `resume`
    /// is registered.
    #[serde(rename = "special")]
    Special { value: String },
}

pub type StateId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct State {
    pub id: StateId,
    #[serde(default)]
    pub initial: bool,
}

/// A guarded transition. Empty `outputs` suppresses the intercepted event;
/// outputs consisting of a re-emission of the intercepted event leave the
/// execution unaltered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: StateId,
    pub to: StateId,
    pub intercepted: Guard,
    #[serde(default)]
    pub outputs: Vec<OutputAction>,
}

/// An edit automaton enforcing one usage policy of `api` relative to the
/// lifecycle of `lifecycle_object` instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EnforcementModel {
    pub name: String,
    pub lifecycle_object: String,
    pub api: String,
    pub states: Vec<State>,
    #[serde(default)]
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("model `{model}`: {reason}")]
pub struct ModelStructureError {
    pub model: String,
    pub reason: String,
}

impl EnforcementModel {
    pub fn initial_state(&self) -> Option<StateId> {
        self.states.iter().find(|s| s.initial).map(|s| s.id)
    }

    /// Every signature textually present in the model, guards and outputs
    /// alike, in declaration order.
    pub fn signatures(&self) -> Vec<&ActionSignature> {
        let mut out = Vec::new();
        for t in &self.transitions {
            out.extend(t.intercepted.signatures());
            for action in &t.outputs {
                if let OutputAction::Emit { value } = action {
                    out.push(value);
                }
            }
        }
        out
    }

    pub fn uses_resume(&self) -> bool {
        self.transitions.iter().any(|t| {
            t.outputs
                .iter()
                .any(|a| matches!(a, OutputAction::Special { value } if value == SPECIAL_RESUME))
        })
    }

    /// Checks the structural invariants that hold independently of any
    /// catalog: exactly one initial state, declared transition endpoints,
    /// well-formed guards and outputs, and signature classes confined to
    /// the lifecycle object, the api, or the enforcer pseudo-class.
    pub fn check_structure(&self) -> Result<(), ModelStructureError> {
        let err = |reason: String| ModelStructureError { model: self.name.clone(), reason };
        if self.name.is_empty() {
            return Err(err("model name is empty".to_string()));
        }
        if !is_class_name(&self.lifecycle_object) || !is_class_name(&self.api) {
            return Err(err("lifecycleObject and api must be dotted class names".to_string()));
        }
        let mut ids = BTreeSet::new();
        for s in &self.states {
            if !ids.insert(s.id) {
                return Err(err(format!("duplicate state id {}", s.id)));
            }
        }
        let initials = self.states.iter().filter(|s| s.initial).count();
        if initials != 1 {
            return Err(err(format!("expected exactly one initial state, found {initials}")));
        }
        for (i, t) in self.transitions.iter().enumerate() {
            if !ids.contains(&t.from) || !ids.contains(&t.to) {
                return Err(err(format!("transition {i} references an undeclared state")));
            }
            match &t.intercepted {
                Guard::Exact { signature } => {
                    signature.check().map_err(|e| err(format!("transition {i}: {e}")))?;
                }
                Guard::AnyExcept { exclude, binder } => {
                    if exclude.is_empty() {
                        return Err(err(format!("transition {i}: empty exclusion set")));
                    }
                    let mut seen = BTreeSet::new();
                    for sig in exclude {
                        sig.check().map_err(|e| err(format!("transition {i}: {e}")))?;
                        if !seen.insert(sig.to_string()) {
                            return Err(err(format!(
                                "transition {i}: duplicate excluded signature `{sig}`"
                            )));
                        }
                    }
                    if let Some(b) = binder {
                        if !is_identifier(b) {
                            return Err(err(format!(
                                "transition {i}: binder `{b}` is not an identifier"
                            )));
                        }
                    }
                }
            }
            for action in &t.outputs {
                match action {
                    OutputAction::Emit { value } => {
                        value.check().map_err(|e| err(format!("transition {i}: {e}")))?;
                    }
                    OutputAction::EmitBound { value } => {
                        if t.intercepted.binder() != Some(value.as_str()) {
                            return Err(err(format!(
                                "transition {i}: emitBound variable `{value}` is not bound by the guard"
                            )));
                        }
                    }
                    OutputAction::Special { value } => {
                        if value != SPECIAL_RESUME {
                            return Err(err(format!(
                                "transition {i}: unknown special operation `{value}`"
                            )));
                        }
                    }
                }
            }
        }
        for sig in self.signatures() {
            let class = sig.class_name.as_str();
            if class != self.lifecycle_object && class != self.api && class != ENFORCER_CLASS {
                return Err(err(format!(
                    "signature `{sig}` references class `{class}`, which is neither the lifecycle object, the api, nor the enforcer pseudo-class"
                )));
            }
        }
        Ok(())
    }
}

/// Provenance of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventSource {
    App,
    Enforcer,
    Framework,
}

/// Scalar call-argument literal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarValue {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl fmt::Display for ScalarValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarValue::Bool(b) => write!(f, "{b}"),
            ScalarValue::Int(i) => write!(f, "{i}"),
            ScalarValue::Str(s) => write!(f, "{s:?}"),
        }
    }
}

/// One begin-of-call or end-of-call occurrence.
///
/// `receiver_id` is an opaque instance token assigned by the trace producer;
/// 0 is reserved for static calls that create no resource. `component_id`
/// identifies the lifecycle object on whose behalf the call happens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub phase: Phase,
    #[serde(rename = "class")]
    pub class_name: String,
    #[serde(rename = "method")]
    pub method_name: String,
    #[serde(rename = "receiver")]
    pub receiver_id: u64,
    #[serde(rename = "component")]
    pub component_id: u64,
    #[serde(default)]
    pub args: Vec<ScalarValue>,
    pub source: EventSource,
}

impl Event {
    pub fn signature(&self) -> ActionSignature {
        ActionSignature {
            phase: self.phase,
            class_name: self.class_name.clone(),
            method_name: self.method_name.clone(),
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}#{}.{}[recv={},comp={}]",
            self.phase.prefix(),
            self.class_name,
            self.method_name,
            self.receiver_id,
            self.component_id
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("ill-formed trace at event {index}: AfterCall without a matching open BeforeCall")]
pub struct IllFormedTrace {
    pub index: usize,
}

/// An ordered event sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<Event>,
}

impl Trace {
    pub fn new(events: Vec<Event>) -> Self {
        Self { events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Well-formedness: every AfterCall must be preceded by a still-open
    /// BeforeCall with the same receiver, class, and method. Lone
    /// BeforeCalls are permitted (a call may have no recorded return).
    pub fn check_well_formed(&self) -> Result<(), IllFormedTrace> {
        let mut open: BTreeMap<(u64, &str, &str), usize> = BTreeMap::new();
        for (index, ev) in self.events.iter().enumerate() {
            let key = (ev.receiver_id, ev.class_name.as_str(), ev.method_name.as_str());
            match ev.phase {
                Phase::Before => *open.entry(key).or_insert(0) += 1,
                Phase::After => match open.get_mut(&key) {
                    Some(n) if *n > 0 => *n -= 1,
                    _ => return Err(IllFormedTrace { index }),
                },
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(phase: Phase, class: &str, method: &str) -> Event {
        Event {
            phase,
            class_name: class.to_string(),
            method_name: method.to_string(),
            receiver_id: 7,
            component_id: 1,
            args: vec![],
            source: EventSource::App,
        }
    }

    fn sig(text: &str) -> ActionSignature {
        parse_signature(text).unwrap()
    }

    #[test]
    fn parses_camera_open() {
        let s = sig("before#android.hardware.Camera.open");
        assert_eq!(s.phase, Phase::Before);
        assert_eq!(s.class_name, "android.hardware.Camera");
        assert_eq!(s.method_name, "open");
    }

    #[test]
    fn parses_after_on_pause() {
        let s = sig("after#android.app.Activity.onPause");
        assert_eq!(s.phase, Phase::After);
        assert_eq!(s.class_name, "android.app.Activity");
        assert_eq!(s.method_name, "onPause");
    }

    #[test]
    fn rejects_missing_prefix() {
        let e = parse_signature("android.app.Activity.onPause").unwrap_err();
        assert!(e.reason.contains("prefix"), "{e}");
    }

    #[test]
    fn rejects_empty_parts() {
        assert!(parse_signature("before#.open").is_err());
        assert!(parse_signature("before#Camera.").is_err());
        assert!(parse_signature("during#Camera.open").is_err());
    }

    #[test]
    fn accepts_constructor_name() {
        let s = sig("after#android.media.MediaPlayer.<init>");
        assert_eq!(s.method_name, "<init>");
        assert_eq!(s.to_string(), "after#android.media.MediaPlayer.<init>");
    }

    #[test]
    fn signature_match_exact_and_phase() {
        let mut h = ClassHierarchy::new();
        h.insert("Camera", None);
        let open = sig("before#Camera.open");
        assert!(signature_matches(&open, &ev(Phase::Before, "Camera", "open"), &h).unwrap());
        assert!(!signature_matches(&open, &ev(Phase::After, "Camera", "open"), &h).unwrap());
    }

    #[test]
    fn signature_match_subclass() {
        let mut h = ClassHierarchy::new();
        h.insert("Activity", None);
        h.insert("MyActivity", Some("Activity".to_string()));
        let s = sig("before#Activity.onPause");
        assert!(signature_matches(&s, &ev(Phase::Before, "MyActivity", "onPause"), &h).unwrap());
    }

    #[test]
    fn signature_match_unknown_class_errs() {
        let h = ClassHierarchy::new();
        let s = sig("before#Camera.open");
        let e = signature_matches(&s, &ev(Phase::Before, "Camera", "open"), &h).unwrap_err();
        assert_eq!(e, MatchError::UnknownClass("Camera".to_string()));
    }

    #[test]
    fn guard_any_except_binds() {
        let mut h = ClassHierarchy::new();
        h.insert("Ops", None);
        let g = Guard::AnyExcept {
            exclude: vec![sig("before#Ops.opA")],
            binder: Some("e".to_string()),
        };
        let m = guard_matches(&g, &ev(Phase::Before, "Ops", "opB"), &h).unwrap().unwrap();
        assert_eq!(m.binder.as_deref(), Some("e"));
        assert!(guard_matches(&g, &ev(Phase::Before, "Ops", "opA"), &h).unwrap().is_none());
    }

    #[test]
    fn guard_exact_matches() {
        let mut h = ClassHierarchy::new();
        h.insert("Camera", None);
        let g = Guard::Exact { signature: sig("before#Camera.release") };
        let m = guard_matches(&g, &ev(Phase::Before, "Camera", "release"), &h).unwrap().unwrap();
        assert_eq!(m.binder, None);
    }

    // Exhaustive check over a 6-symbol alphabet: AnyExcept matches exactly
    // when no excluded signature matches.
    #[test]
    fn any_except_agrees_with_negated_union() {
        let mut h = ClassHierarchy::new();
        h.insert("Ops", None);
        let alphabet: Vec<ActionSignature> = ["opA", "opB", "opC", "opD", "opE", "stop"]
            .iter()
            .map(|m| sig(&format!("before#Ops.{m}")))
            .collect();
        let events: Vec<Event> =
            alphabet.iter().map(|s| ev(s.phase, &s.class_name, &s.method_name)).collect();
        for mask in 1u32..(1 << alphabet.len()) {
            let exclude: Vec<ActionSignature> = alphabet
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, s)| s.clone())
                .collect();
            let guard =
                Guard::AnyExcept { exclude: exclude.clone(), binder: Some("e".to_string()) };
            for e in &events {
                let matched = guard_matches(&guard, e, &h).unwrap().is_some();
                let any_excluded = exclude.iter().any(|s| signature_matches(s, e, &h).unwrap());
                assert_eq!(matched, !any_excluded, "mask={mask:b} event={e}");
            }
        }
    }

    #[test]
    fn trace_well_formedness() {
        let before = ev(Phase::Before, "Camera", "open");
        let after = ev(Phase::After, "Camera", "open");
        assert!(Trace::new(vec![before.clone(), after.clone()]).check_well_formed().is_ok());
        assert!(Trace::new(vec![before.clone()]).check_well_formed().is_ok());
        let bad = Trace::new(vec![after]).check_well_formed().unwrap_err();
        assert_eq!(bad.index, 0);
    }

    #[test]
    fn structure_rejects_foreign_signature_class() {
        let m = EnforcementModel {
            name: "x".to_string(),
            lifecycle_object: "android.app.Activity".to_string(),
            api: "android.hardware.Camera".to_string(),
            states: vec![State { id: 0, initial: true }],
            transitions: vec![Transition {
                from: 0,
                to: 0,
                intercepted: Guard::Exact { signature: sig("before#other.Thing.run") },
                outputs: vec![],
            }],
        };
        let e = m.check_structure().unwrap_err();
        assert!(e.reason.contains("other.Thing"), "{e}");
    }

    fn ident_strategy() -> impl Strategy<Value = String> {
        "[a-z][a-zA-Z0-9_]{0,8}"
    }

    proptest! {
        // print . parse identity on canonical signature strings
        #[test]
        fn signature_roundtrip(
            phase in prop_oneof![Just(Phase::Before), Just(Phase::After)],
            parts in prop::collection::vec(ident_strategy(), 1..4),
            method in prop_oneof![ident_strategy(), Just("<init>".to_string())],
        ) {
            let sig = ActionSignature { phase, class_name: parts.join("."), method_name: method };
            let text = sig.to_string();
            prop_assert_eq!(parse_signature(&text).unwrap(), sig);
        }
    }
}

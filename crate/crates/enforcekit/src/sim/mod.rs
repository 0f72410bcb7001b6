//! Deterministic Android-like environment: scripted scenarios drive
//! component lifecycles and resource APIs, a registry detects misuses
//! (leaks, exclusive-resource conflicts), and policy acceptors classify the
//! outcome as healed / no-violation / violation-unhealed.
//!
//! With enforcement on, every emitted event flows through
//! [`crate::engine::Session::dispatch`] and enforcer-inserted calls take
//! effect in the registry exactly like app calls.

mod acceptor;
mod bench;

pub use acceptor::{
    derive_acceptor, BadTemplateParams, MethodRef, PolicyAcceptor, PolicySpec, TemplateKind,
};
pub use bench::{bench_overhead, replicate_models, BenchReport, BenchRow};

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EnforcementReport, EngineError, Session, SessionConfig};
use crate::model::{ClassHierarchy, EnforcementModel, Event, EventSource, Phase, ScalarValue};
use crate::spec_io::{ApiCatalog, ResourceKind, ResourceProfile, SpecIoError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ComponentKind {
    Activity,
    Service,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioComponent {
    pub class: String,
    pub kind: ComponentKind,
}

/// One scripted step. Lifecycle steps emit the corresponding framework
/// callback pair; `call` emits an app API call; `user` is a label only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "camelCase")]
pub enum Directive {
    Create {
        component: String,
    },
    Start {
        component: String,
    },
    Resume {
        component: String,
    },
    Pause {
        component: String,
    },
    Stop {
        component: String,
    },
    Restart {
        component: String,
    },
    Destroy {
        component: String,
    },
    StartCommand {
        component: String,
    },
    Call {
        component: String,
        class: String,
        method: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        args: Vec<ScalarValue>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bind: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        on: Option<String>,
    },
    User {
        label: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub app: Option<String>,
    pub components: Vec<ScenarioComponent>,
    pub script: Vec<Directive>,
    #[serde(default)]
    pub policies: Vec<PolicySpec>,
    /// Model file stems this case deploys; resolved by the corpus runner.
    #[serde(default)]
    pub models: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Verdict>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Verdict {
    Healed,
    NoViolation,
    ViolationUnhealed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimException {
    pub step: usize,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Leak {
    pub class: String,
    pub component: u64,
    pub receiver: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimOutcome {
    pub scenario: String,
    pub enforcement: bool,
    pub verdict: Verdict,
    pub leaks: Vec<Leak>,
    pub exceptions: Vec<SimException>,
    pub trace_in: Vec<Event>,
    pub trace_out: Vec<Event>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EnforcementReport>,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("missing fixture: {0}")]
    MissingFixture(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Io(#[from] SpecIoError),
    #[error(transparent)]
    Policy(#[from] BadTemplateParams),
}

pub fn load_scenario(path: &Path) -> Result<Scenario, SpecIoError> {
    let text = fs::read_to_string(path)
        .map_err(|source| SpecIoError::Io { path: path.display().to_string(), source })?;
    serde_json::from_str(&text).map_err(|e| SpecIoError::Parse {
        path: path.display().to_string(),
        line: Some(e.line()),
        message: e.to_string(),
    })
}

/// Hierarchy and resource knowledge for a scenario: the catalog plus the
/// scenario's component classes grafted under their framework base class.
pub fn session_config(scenario: &Scenario, catalog: &ApiCatalog) -> SessionConfig {
    let mut hierarchy = catalog.hierarchy();
    for c in &scenario.components {
        let base = match c.kind {
            ComponentKind::Activity => "android.app.Activity",
            ComponentKind::Service => "android.app.Service",
        };
        hierarchy.insert(c.class.clone(), Some(base.to_string()));
    }
    SessionConfig {
        hierarchy,
        resource_profiles: catalog.resource_profiles(),
        ..Default::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LifePhase {
    Created,
    Started,
    Resumed,
    Paused,
    Stopped,
    Restarted,
    Dead,
}

struct LiveComponent {
    class: String,
    kind: ComponentKind,
    id: u64,
    phase: LifePhase,
}

/// Holders per resource class; an exclusive resource admits at most one.
struct ResourceRegistry<'a> {
    profiles: &'a BTreeMap<String, ResourceProfile>,
    hierarchy: &'a ClassHierarchy,
    holders: BTreeMap<String, Vec<(u64, u64)>>,
}

impl<'a> ResourceRegistry<'a> {
    fn new(profiles: &'a BTreeMap<String, ResourceProfile>, hierarchy: &'a ClassHierarchy) -> Self {
        Self { profiles, hierarchy, holders: BTreeMap::new() }
    }

    fn profile_key(&self, class: &str) -> Option<&'a str> {
        if let Some((k, _)) = self.profiles.get_key_value(class) {
            return Some(k.as_str());
        }
        for ancestor in self.hierarchy.ancestors(class) {
            if let Some((k, _)) = self.profiles.get_key_value(ancestor) {
                return Some(k.as_str());
            }
        }
        None
    }

    /// Applies one event's effect. Acquisitions are checked at the
    /// BeforeCall (the attempt can fail) and committed at the AfterCall;
    /// releases take effect at the BeforeCall.
    fn apply(&mut self, ev: &Event) -> Result<(), String> {
        let Some(key) = self.profile_key(&ev.class_name) else {
            return Ok(());
        };
        let profile = &self.profiles[key];
        if profile.acquires.contains(&ev.method_name) {
            match ev.phase {
                Phase::Before => {
                    let held = self.holders.get(key).is_some_and(|h| !h.is_empty());
                    if profile.kind == Some(ResourceKind::Exclusive) && held {
                        let short = key.rsplit('.').next().unwrap_or(key);
                        return Err(format!("{short}InUse"));
                    }
                }
                Phase::After => {
                    let holders = self.holders.entry(key.to_string()).or_default();
                    holders.push((ev.component_id, ev.receiver_id));
                    // the BeforeCall check keeps exclusive resources single-held
                    debug_assert!(
                        profile.kind != Some(ResourceKind::Exclusive) || holders.len() <= 1,
                        "exclusive resource {key} acquired twice"
                    );
                }
            }
        } else if profile.releases.contains(&ev.method_name) && ev.phase == Phase::Before {
            if let Some(holders) = self.holders.get_mut(key) {
                holders.retain(|(_, receiver)| *receiver != ev.receiver_id);
            }
        }
        Ok(())
    }

    pub(crate) fn exclusive_invariant_holds(&self) -> bool {
        self.holders.iter().all(|(class, holders)| {
            self.profiles[class].kind != Some(ResourceKind::Exclusive) || holders.len() <= 1
        })
    }
}

struct ScenarioRun<'a> {
    scenario: &'a Scenario,
    hierarchy: ClassHierarchy,
    registry: ResourceRegistry<'a>,
    session: Option<&'a mut Session>,
    live: Vec<LiveComponent>,
    vars: BTreeMap<String, u64>,
    next_id: u64,
    trace_in: Vec<Event>,
    trace_out: Vec<Event>,
    exceptions: Vec<SimException>,
}

impl<'a> ScenarioRun<'a> {
    fn component_mut(&mut self, class: &str) -> Option<&mut LiveComponent> {
        self.live.iter_mut().rev().find(|c| c.class == class && c.phase != LifePhase::Dead)
    }

    fn lifecycle_step(&mut self, step: usize, action: &str, class: &str) -> Result<(), SimError> {
        use LifePhase::*;
        if action == "create" {
            let Some(decl) = self.scenario.components.iter().find(|c| c.class == class) else {
                return Err(SimError::Scenario(format!("undeclared component `{class}`")));
            };
            let id = self.next_id;
            self.next_id += 1;
            self.live.push(LiveComponent {
                class: class.to_string(),
                kind: decl.kind,
                id,
                phase: Created,
            });
            self.emit_callback(step, class, id, "onCreate")?;
            return Ok(());
        }
        let (kind, id, phase) = match self.component_mut(class) {
            Some(c) => (c.kind, c.id, c.phase),
            None => {
                return Err(SimError::Scenario(format!(
                    "step {step}: no live `{class}` for `{action}`"
                )))
            }
        };
        let next = match (kind, action, phase) {
            (ComponentKind::Activity, "start", Created | Restarted) => Started,
            (ComponentKind::Activity, "resume", Started) => Resumed,
            (ComponentKind::Activity, "pause", Resumed) => Paused,
            (ComponentKind::Activity, "stop", Paused) => Stopped,
            (ComponentKind::Activity, "restart", Stopped) => Restarted,
            (ComponentKind::Activity, "destroy", Stopped) => Dead,
            (ComponentKind::Service, "startCommand", Created) => Created,
            (ComponentKind::Service, "destroy", Created) => Dead,
            _ => {
                return Err(SimError::Scenario(format!(
                    "step {step}: illegal lifecycle `{action}` for {kind:?} `{class}` in {phase:?}"
                )))
            }
        };
        self.component_mut(class).expect("resolved above").phase = next;
        let callback = match action {
            "start" => "onStart",
            "resume" => "onResume",
            "pause" => "onPause",
            "stop" => "onStop",
            "restart" => "onRestart",
            "destroy" => "onDestroy",
            "startCommand" => "onStartCommand",
            _ => unreachable!(),
        };
        self.emit_callback(step, class, id, callback)
    }

    fn emit_callback(
        &mut self,
        step: usize,
        class: &str,
        id: u64,
        method: &str,
    ) -> Result<(), SimError> {
        for phase in [Phase::Before, Phase::After] {
            let ev = Event {
                phase,
                class_name: class.to_string(),
                method_name: method.to_string(),
                receiver_id: id,
                component_id: id,
                args: vec![],
                source: EventSource::Framework,
            };
            self.process(step, ev);
        }
        Ok(())
    }

    /// Feeds one event through enforcement (when on) and applies every
    /// surviving or inserted event to the registry. Returns whether the
    /// event itself survived and succeeded.
    fn process(&mut self, step: usize, ev: Event) -> bool {
        self.trace_in.push(ev.clone());
        let mut executed = false;
        if let Some(session) = self.session.as_deref_mut() {
            let outs = session.dispatch(ev.clone());
            for out in outs {
                let is_original = out == ev;
                match self.registry.apply(&out) {
                    Ok(()) => {
                        if is_original {
                            executed = true;
                        }
                    }
                    Err(kind) => self.exceptions.push(SimException { step, kind }),
                }
                self.trace_out.push(out);
            }
        } else {
            match self.registry.apply(&ev) {
                Ok(()) => executed = true,
                Err(kind) => self.exceptions.push(SimException { step, kind }),
            }
            self.trace_out.push(ev);
        }
        executed
    }

    fn call_step(
        &mut self,
        step: usize,
        component: &str,
        class: &str,
        method: &str,
        args: &[ScalarValue],
        bindings: (Option<&str>, Option<&str>),
    ) -> Result<(), SimError> {
        let (bind, on) = bindings;
        let comp_id = match self.component_mut(component) {
            Some(c) => c.id,
            None => {
                return Err(SimError::Scenario(format!(
                    "step {step}: no live `{component}` to perform the call"
                )))
            }
        };
        let acquiring = self
            .registry
            .profile_key(class)
            .map(|k| self.registry.profiles[k].acquires.contains(method))
            .unwrap_or(false);
        let receiver = if acquiring {
            let id = self.next_id;
            self.next_id += 1;
            id
        } else if let Some(var) = on {
            *self.vars.get(var).ok_or_else(|| {
                SimError::Scenario(format!("step {step}: unknown binding `{var}`"))
            })?
        } else {
            0
        };

        let before = Event {
            phase: Phase::Before,
            class_name: class.to_string(),
            method_name: method.to_string(),
            receiver_id: receiver,
            component_id: comp_id,
            args: args.to_vec(),
            source: EventSource::App,
        };
        let executed = self.process(step, before);
        if !executed {
            // the call was suppressed or threw; it never returns
            return Ok(());
        }
        let after = Event {
            phase: Phase::After,
            class_name: class.to_string(),
            method_name: method.to_string(),
            receiver_id: receiver,
            component_id: comp_id,
            args: args.to_vec(),
            source: EventSource::App,
        };
        self.process(step, after);
        if let Some(var) = bind {
            self.vars.insert(var.to_string(), receiver);
        }
        Ok(())
    }
}

/// Executes a scenario. `session` carries the deployed models; pass `None`
/// to run with enforcement off.
pub fn run_with_session(
    scenario: &Scenario,
    catalog: &ApiCatalog,
    mut session: Option<&mut Session>,
) -> Result<SimOutcome, SimError> {
    let enforcement = session.is_some();
    if let Some(s) = session.as_deref_mut() {
        s.reset();
    }
    let cfg = session_config(scenario, catalog);
    let profiles = catalog.resource_profiles();
    let mut run = ScenarioRun {
        scenario,
        hierarchy: cfg.hierarchy.clone(),
        registry: ResourceRegistry::new(&profiles, &cfg.hierarchy),
        session,
        live: Vec::new(),
        vars: BTreeMap::new(),
        next_id: 1,
        trace_in: Vec::new(),
        trace_out: Vec::new(),
        exceptions: Vec::new(),
    };

    for (step, directive) in scenario.script.iter().enumerate() {
        match directive {
            Directive::Create { component } => run.lifecycle_step(step, "create", component)?,
            Directive::Start { component } => run.lifecycle_step(step, "start", component)?,
            Directive::Resume { component } => run.lifecycle_step(step, "resume", component)?,
            Directive::Pause { component } => run.lifecycle_step(step, "pause", component)?,
            Directive::Stop { component } => run.lifecycle_step(step, "stop", component)?,
            Directive::Restart { component } => run.lifecycle_step(step, "restart", component)?,
            Directive::Destroy { component } => run.lifecycle_step(step, "destroy", component)?,
            Directive::StartCommand { component } => {
                run.lifecycle_step(step, "startCommand", component)?
            }
            Directive::Call { component, class, method, args, bind, on } => run.call_step(
                step,
                component,
                class,
                method,
                args,
                (bind.as_deref(), on.as_deref()),
            )?,
            Directive::User { .. } => {}
        }
    }
    debug_assert!(run.registry.exclusive_invariant_holds());

    let mut leaks = Vec::new();
    for (class, holders) in &run.registry.holders {
        for (component, receiver) in holders {
            let alive = run.live.iter().any(|c| {
                c.id == *component
                    && matches!(
                        c.phase,
                        LifePhase::Created
                            | LifePhase::Started
                            | LifePhase::Resumed
                            | LifePhase::Restarted
                    )
            });
            if !alive {
                leaks.push(Leak {
                    class: class.clone(),
                    component: *component,
                    receiver: *receiver,
                });
            }
        }
    }

    let mut acceptors = Vec::new();
    for spec in &scenario.policies {
        acceptors.push(derive_acceptor(spec)?);
    }
    let in_ok = acceptors.iter().all(|a| a.accepts(&run.trace_in, &run.hierarchy));
    let out_ok = acceptors.iter().all(|a| a.accepts(&run.trace_out, &run.hierarchy));
    let verdict = if in_ok {
        Verdict::NoViolation
    } else if out_ok {
        Verdict::Healed
    } else {
        Verdict::ViolationUnhealed
    };

    let report = run.session.map(|s| s.finalize());
    Ok(SimOutcome {
        scenario: scenario.name.clone(),
        enforcement,
        verdict,
        leaks,
        exceptions: run.exceptions,
        trace_in: run.trace_in,
        trace_out: run.trace_out,
        report,
    })
}

/// Runs one scenario with the given models, enforcement on or off.
pub fn run_scenario(
    scenario: &Scenario,
    models: &[EnforcementModel],
    enforcement: bool,
    catalog: &ApiCatalog,
) -> Result<SimOutcome, SimError> {
    if enforcement {
        let mut session = Session::new(models.to_vec(), session_config(scenario, catalog))?;
        run_with_session(scenario, catalog, Some(&mut session))
    } else {
        run_with_session(scenario, catalog, None)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub case: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub app: Option<String>,
    pub models: Vec<String>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<Verdict>,
    pub leaks: usize,
    pub exceptions: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusReport {
    pub cases: Vec<CaseResult>,
    pub healed: usize,
    pub no_violation: usize,
    pub violation_unhealed: usize,
}

impl CorpusReport {
    pub fn matches_expected(&self) -> bool {
        self.cases.iter().all(|c| c.expected.is_none_or(|e| e == c.verdict))
    }

    pub fn text_table(&self) -> String {
        let mut out = String::new();
        let width = self.cases.iter().map(|c| c.case.len()).max().unwrap_or(4).max(4);
        out.push_str(&format!("{:<width$}  {:<18} {:<18} match\n", "case", "verdict", "expected"));
        for c in &self.cases {
            let expected = c.expected.map(|e| format!("{e:?}")).unwrap_or_else(|| "-".to_string());
            let matches = c.expected.map_or("-", |e| if e == c.verdict { "yes" } else { "NO" });
            out.push_str(&format!(
                "{:<width$}  {:<18} {:<18} {}\n",
                c.case,
                format!("{:?}", c.verdict),
                expected,
                matches
            ));
        }
        out.push_str(&format!(
            "total: {} healed, {} no-violation, {} violation-unhealed\n",
            self.healed, self.no_violation, self.violation_unhealed
        ));
        out
    }
}

/// Loads every case in `cases_dir`, resolves its models against
/// `models_dir`, and runs them all.
pub fn run_corpus(
    cases_dir: &Path,
    models_dir: &Path,
    catalog: &ApiCatalog,
    enforcement: bool,
) -> Result<CorpusReport, SimError> {
    let mut case_files: Vec<_> = fs::read_dir(cases_dir)
        .map_err(|e| SimError::MissingFixture(format!("{}: {e}", cases_dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    case_files.sort();
    if case_files.is_empty() {
        return Err(SimError::MissingFixture(format!("no case files in {}", cases_dir.display())));
    }

    let mut cases = Vec::new();
    let (mut healed, mut no_violation, mut violation_unhealed) = (0, 0, 0);
    for path in case_files {
        let scenario = load_scenario(&path)?;
        let mut models = Vec::new();
        for stem in &scenario.models {
            let model_path = models_dir.join(format!("{stem}.json"));
            if !model_path.exists() {
                return Err(SimError::MissingFixture(model_path.display().to_string()));
            }
            models.push(crate::spec_io::load_model(&model_path)?);
        }
        let outcome = run_scenario(&scenario, &models, enforcement, catalog)?;
        match outcome.verdict {
            Verdict::Healed => healed += 1,
            Verdict::NoViolation => no_violation += 1,
            Verdict::ViolationUnhealed => violation_unhealed += 1,
        }
        cases.push(CaseResult {
            case: scenario.name.clone(),
            app: scenario.app.clone(),
            models: scenario.models.clone(),
            verdict: outcome.verdict,
            expected: scenario.expected,
            leaks: outcome.leaks.len(),
            exceptions: outcome.exceptions.len(),
        });
    }
    Ok(CorpusReport { cases, healed, no_violation, violation_unhealed })
}

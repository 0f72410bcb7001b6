//! The policy enforcer: routes an event stream through the active
//! enforcement models and emits the transformed stream.
//!
//! One enforcer instance tracks one (lifecycle object, resource) pair:
//! instances are keyed by component, and the resource receiver binds at the
//! first matched API event (rebinding on later acquisitions). Events
//! inserted by the enforcer carry `source = Enforcer` and are never offered
//! back to any instance, so an enforcer cannot trigger itself or cascade
//! into other models.
//!
//! A session is single-threaded; distinct sessions are independent.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    signature_matches_lenient, ClassHierarchy, EnforcementModel, Event, EventSource, OutputAction,
    Phase, ScalarValue, StateId,
};
use crate::spec_io::ResourceProfile;

/// Session-wide configuration: which components enforcement applies to
/// (empty set = all), the activation order of the models, and the
/// catalog-derived class knowledge.
#[derive(Debug, Clone, Default)]
pub struct SessionConfig {
    pub target_components: BTreeSet<String>,
    /// Activation (and chaining) order. Empty activates every loaded model
    /// in the order given.
    pub active_models: Vec<String>,
    pub hierarchy: ClassHierarchy,
    pub resource_profiles: BTreeMap<String, ResourceProfile>,
}

/// Stored acquisition info that lets the enforcer destroy and recreate a
/// resource transparently to the app.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResourceRecord {
    pub class_name: String,
    pub acquisition_calls: Vec<(String, Vec<ScalarValue>)>,
    pub held: bool,
}

#[derive(Debug, Clone, Error)]
pub enum EngineError {
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug)]
struct EnforcerInstance {
    state: usize,
    component_id: u64,
    resource_receiver: Option<u64>,
    resume_store: Option<ResourceRecord>,
    suppressed: u64,
    inserted: u64,
    resumes: u64,
}

impl EnforcerInstance {
    fn new(initial: usize, component_id: u64) -> Self {
        Self {
            state: initial,
            component_id,
            resource_receiver: None,
            resume_store: None,
            suppressed: 0,
            inserted: 0,
            resumes: 0,
        }
    }
}

struct CompiledModel {
    model: EnforcementModel,
    state_ids: Vec<StateId>,
    initial_pos: usize,
    transitions_by_state: Vec<Vec<usize>>,
    /// Dense index of each transition's target state.
    to_pos: Vec<usize>,
    /// Transitions whose only effect is re-emitting the intercepted event.
    pure_pass: Vec<bool>,
}

impl CompiledModel {
    fn new(model: EnforcementModel) -> Result<Self, EngineError> {
        model.check_structure().map_err(|e| EngineError::InvalidConfig(e.to_string()))?;
        let state_ids: Vec<StateId> = model.states.iter().map(|s| s.id).collect();
        let state_pos: BTreeMap<StateId, usize> =
            state_ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let initial_pos = state_pos[&model.initial_state().expect("structure checked")];
        let mut transitions_by_state = vec![Vec::new(); state_ids.len()];
        let mut to_pos = Vec::with_capacity(model.transitions.len());
        let mut pure_pass = Vec::with_capacity(model.transitions.len());
        for (i, t) in model.transitions.iter().enumerate() {
            transitions_by_state[state_pos[&t.from]].push(i);
            to_pos.push(state_pos[&t.to]);
            let pure = t.outputs.len() == 1
                && match (&t.outputs[0], &t.intercepted) {
                    (OutputAction::EmitBound { .. }, _) => true,
                    (OutputAction::Emit { value }, crate::model::Guard::Exact { signature }) => {
                        value == signature
                    }
                    _ => false,
                };
            pure_pass.push(pure);
        }
        Ok(Self { model, state_ids, initial_pos, transitions_by_state, to_pos, pure_pass })
    }
}

/// Resource-manager effect of an event symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ResourceOp {
    Acquire,
    Release,
}

/// Pre-resolved routing for one (phase, class, method) symbol in one model:
/// the first matching transition per state plus the resource-manager effect.
struct RouteRow {
    first_match: Vec<Option<usize>>,
    is_api_event: bool,
    resource_op: Option<ResourceOp>,
}

/// The models that can react to one event symbol, in activation order.
/// Empty for symbols no model covers, which is the common case and keeps
/// per-event cost independent of how many modules are deployed.
struct CompactRoute {
    entries: Vec<(usize, RouteRow)>,
}

/// Per-method routes, one slot per phase.
type MethodRoutes = HashMap<String, [Option<Arc<CompactRoute>>; 2]>;

fn phase_slot(phase: Phase) -> usize {
    match phase {
        Phase::Before => 0,
        Phase::After => 1,
    }
}

#[derive(Debug, Default, Clone, Serialize)]
pub struct SessionTotals {
    pub events_in: u64,
    pub events_out: u64,
    pub suppressed: u64,
    pub inserted: u64,
    pub resumes: u64,
    /// State changes driven by enforcer-sourced events. The dispatch loop
    /// never offers such events, so this stays zero.
    pub enforcer_driven_steps: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceReport {
    pub model: String,
    pub component: u64,
    pub resource_receiver: Option<u64>,
    pub final_state: StateId,
    pub suppressed: u64,
    pub inserted: u64,
    pub resumes: u64,
    /// Left in a non-initial state with a held resource at end of trace.
    pub pending: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResumeFailure {
    pub model: String,
    pub component: u64,
    pub at_event: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnforcementReport {
    pub instances: Vec<InstanceReport>,
    pub totals: SessionTotals,
    pub resume_unavailable: Vec<ResumeFailure>,
}

impl EnforcementReport {
    /// events_out = events_in - suppressed + inserted, always.
    pub fn bookkeeping_holds(&self) -> bool {
        self.totals.events_out + self.totals.suppressed
            == self.totals.events_in + self.totals.inserted
    }

    pub fn pending_instances(&self) -> usize {
        self.instances.iter().filter(|i| i.pending).count()
    }
}

pub struct Session {
    cfg: SessionConfig,
    models: Vec<CompiledModel>,
    // a handful of live components per model at most; linear scan beats
    // hashing and keeps creation order for the report
    instances: Vec<Vec<EnforcerInstance>>,
    route_cache: HashMap<String, MethodRoutes>,
    component_classes: BTreeMap<u64, String>,
    pending_after_drops: HashMap<(u64, String, String), Vec<usize>>,
    totals: SessionTotals,
    resume_unavailable: Vec<ResumeFailure>,
}

/// Creates a session over validated models. Instances are created lazily on
/// the first event the model's initial state can match.
pub fn new_session(
    models: Vec<EnforcementModel>,
    cfg: SessionConfig,
) -> Result<Session, EngineError> {
    Session::new(models, cfg)
}

impl Session {
    pub fn new(models: Vec<EnforcementModel>, cfg: SessionConfig) -> Result<Self, EngineError> {
        let mut by_name: BTreeMap<String, EnforcementModel> = BTreeMap::new();
        let mut load_order = Vec::new();
        for m in models {
            let name = m.name.clone();
            if by_name.insert(name.clone(), m).is_some() {
                return Err(EngineError::InvalidConfig(format!("duplicate model name `{name}`")));
            }
            load_order.push(name);
        }
        let order: Vec<String> = if cfg.active_models.is_empty() {
            load_order
        } else {
            let mut seen = BTreeSet::new();
            for name in &cfg.active_models {
                if !by_name.contains_key(name) {
                    return Err(EngineError::InvalidConfig(format!(
                        "unknown model `{name}` in active_models"
                    )));
                }
                if !seen.insert(name.clone()) {
                    return Err(EngineError::InvalidConfig(format!(
                        "model `{name}` activated twice"
                    )));
                }
            }
            cfg.active_models.clone()
        };
        let mut compiled = Vec::with_capacity(order.len());
        for name in &order {
            compiled.push(CompiledModel::new(by_name[name].clone())?);
        }
        let instances = (0..compiled.len()).map(|_| Vec::new()).collect();
        Ok(Self {
            cfg,
            models: compiled,
            instances,
            route_cache: HashMap::new(),
            component_classes: BTreeMap::new(),
            pending_after_drops: HashMap::new(),
            totals: SessionTotals::default(),
            resume_unavailable: Vec::new(),
        })
    }

    pub fn instance_count(&self) -> usize {
        self.instances.iter().map(Vec::len).sum()
    }

    pub fn totals(&self) -> &SessionTotals {
        &self.totals
    }

    /// Clears all runtime state but keeps the compiled models and routing
    /// tables; used for repeated runs over the same configuration.
    pub fn reset(&mut self) {
        for m in &mut self.instances {
            m.clear();
        }
        self.component_classes.clear();
        self.pending_after_drops.clear();
        self.totals = SessionTotals::default();
        self.resume_unavailable.clear();
    }

    fn instance_pos(&self, model_idx: usize, component: u64) -> Option<usize> {
        self.instances[model_idx].iter().position(|i| i.component_id == component)
    }

    fn resolve_profile<'a>(cfg: &'a SessionConfig, class: &str) -> Option<&'a ResourceProfile> {
        for ancestor in cfg.hierarchy.ancestors(class) {
            if let Some(p) = cfg.resource_profiles.get(ancestor) {
                return Some(p);
            }
        }
        // class may be absent from the hierarchy entirely
        cfg.resource_profiles.get(class)
    }

    fn resource_op_for(
        cfg: &SessionConfig,
        phase: Phase,
        class: &str,
        method: &str,
    ) -> Option<ResourceOp> {
        let profile = Self::resolve_profile(cfg, class)?;
        match phase {
            Phase::After if profile.acquires.contains(method) => Some(ResourceOp::Acquire),
            Phase::Before if profile.releases.contains(method) => Some(ResourceOp::Release),
            _ => None,
        }
    }

    fn build_route(&self, phase: Phase, class: &str, method: &str) -> CompactRoute {
        let probe = Event {
            phase,
            class_name: class.to_string(),
            method_name: method.to_string(),
            receiver_id: 0,
            component_id: 0,
            args: vec![],
            source: EventSource::App,
        };
        let h = &self.cfg.hierarchy;
        let mut entries = Vec::new();
        for (model_idx, cm) in self.models.iter().enumerate() {
            let is_api_event = h.is_subtype(class, &cm.model.api);
            let covered = is_api_event || h.is_subtype(class, &cm.model.lifecycle_object);
            if !covered {
                continue;
            }
            let first_match: Vec<Option<usize>> = cm
                .transitions_by_state
                .iter()
                .map(|ts| {
                    ts.iter()
                        .copied()
                        .find(|&ti| cm.model.transitions[ti].intercepted.matches_lenient(&probe, h))
                })
                .collect();
            let resource_op = if is_api_event {
                Self::resource_op_for(&self.cfg, phase, class, method)
            } else {
                None
            };
            if first_match.iter().all(Option::is_none) && resource_op.is_none() {
                continue;
            }
            entries.push((model_idx, RouteRow { first_match, is_api_event, resource_op }));
        }
        CompactRoute { entries }
    }

    fn route_for(&mut self, ev: &Event) -> Arc<CompactRoute> {
        if let Some(by_method) = self.route_cache.get(ev.class_name.as_str()) {
            if let Some(slots) = by_method.get(ev.method_name.as_str()) {
                if let Some(route) = &slots[phase_slot(ev.phase)] {
                    return Arc::clone(route);
                }
            }
        }
        let route = Arc::new(self.build_route(ev.phase, &ev.class_name, &ev.method_name));
        self.route_cache
            .entry(ev.class_name.clone())
            .or_default()
            .entry(ev.method_name.clone())
            .or_insert([None, None])[phase_slot(ev.phase)] = Some(Arc::clone(&route));
        route
    }

    fn learn_component(&mut self, ev: &Event) {
        if ev.component_id != 0 && ev.receiver_id == ev.component_id {
            self.component_classes.entry(ev.component_id).or_insert_with(|| ev.class_name.clone());
        }
    }

    // App-identity gate, applied when an instance would be created. A
    // component passes when the target set is empty or names its class (or
    // an ancestor of it).
    fn gate_allows(&self, component: u64) -> bool {
        if self.cfg.target_components.is_empty() {
            return true;
        }
        let Some(class) = self.component_classes.get(&component) else {
            return false;
        };
        self.cfg.hierarchy.ancestors(class).any(|c| self.cfg.target_components.contains(c))
            || self.cfg.target_components.contains(class)
    }

    /// Offers one externally produced event to the active models in
    /// activation order and returns the transformed sub-stream. The output
    /// of model i is the input of model i+1; enforcer-sourced events are
    /// never offered to anyone.
    pub fn dispatch(&mut self, ev: Event) -> Vec<Event> {
        self.totals.events_in += 1;
        self.learn_component(&ev);

        // A suppressed BeforeCall never executed, so its recorded AfterCall
        // is dropped before any model sees it.
        if ev.phase == Phase::After
            && ev.source != EventSource::Enforcer
            && !self.pending_after_drops.is_empty()
        {
            let key = (ev.receiver_id, ev.class_name.clone(), ev.method_name.clone());
            if let Some(stack) = self.pending_after_drops.get_mut(&key) {
                if let Some(model_idx) = stack.pop() {
                    if stack.is_empty() {
                        self.pending_after_drops.remove(&key);
                    }
                    if let Some(pos) = self.instance_pos(model_idx, ev.component_id) {
                        self.instances[model_idx][pos].suppressed += 1;
                    }
                    self.totals.suppressed += 1;
                    return Vec::new();
                }
            }
        }

        let route = self.route_for(&ev);
        if route.entries.is_empty() {
            self.totals.events_out += 1;
            return vec![ev];
        }
        // Enforcer-sourced insertions are inert, so the buffer is edited in
        // place: each model only touches the events it actually transforms.
        let mut current = vec![ev];
        for (model_idx, row) in &route.entries {
            let mut i = 0;
            while i < current.len() {
                if current[i].source == EventSource::Enforcer {
                    i += 1;
                } else {
                    i = self.offer_at(*model_idx, row, &mut current, i);
                }
            }
        }
        self.totals.events_out += current.len() as u64;
        current
    }

    /// Offers `current[i]` to one model. Returns the index at which the
    /// model's scan should continue (past whatever replaced the event).
    fn offer_at(
        &mut self,
        model_idx: usize,
        row: &RouteRow,
        current: &mut Vec<Event>,
        i: usize,
    ) -> usize {
        let pos = match self.instance_pos(model_idx, current[i].component_id) {
            Some(pos) => pos,
            None => {
                let component = current[i].component_id;
                let creates = row.first_match[self.models[model_idx].initial_pos].is_some()
                    && self.gate_allows(component);
                if !creates {
                    return i + 1;
                }
                self.instances[model_idx]
                    .push(EnforcerInstance::new(self.models[model_idx].initial_pos, component));
                self.instances[model_idx].len() - 1
            }
        };

        let cfg = &self.cfg;
        let cm = &self.models[model_idx];
        let inst = &mut self.instances[model_idx][pos];
        let fired = row.first_match[inst.state];

        // resource-manager bookkeeping happens for every routed API event,
        // fired or not
        if row.is_api_event {
            if fired.is_some() && inst.resource_receiver.is_none() {
                inst.resource_receiver = Some(current[i].receiver_id);
            }
            apply_resource_op(inst, row.resource_op, &current[i]);
        }

        let Some(ti) = fired else {
            return i + 1;
        };
        if current[i].source == EventSource::Enforcer {
            // unreachable by construction; counted so the invariant stays checkable
            self.totals.enforcer_driven_steps += 1;
        }
        if cm.pure_pass[ti] {
            inst.state = cm.to_pos[ti];
            return i + 1;
        }

        let ev = current.remove(i);
        let transition = &cm.model.transitions[ti];
        // which actions re-emit the intercepted event, so the last one can
        // take it by move
        let reemit_flags: Vec<bool> = transition
            .outputs
            .iter()
            .map(|a| match a {
                OutputAction::EmitBound { .. } => true,
                OutputAction::Emit { value } => {
                    signature_matches_lenient(value, &ev, &cfg.hierarchy)
                }
                OutputAction::Special { .. } => false,
            })
            .collect();
        let mut reemits_left = reemit_flags.iter().filter(|f| **f).count();
        let reemitted = reemits_left > 0;
        let mut ev_slot = Some(ev);
        let mut replacement: Vec<Event> = Vec::with_capacity(transition.outputs.len());
        for (action, reemits) in transition.outputs.iter().zip(&reemit_flags) {
            if *reemits {
                reemits_left -= 1;
                if reemits_left == 0 {
                    replacement.push(ev_slot.take().expect("last re-emission"));
                } else {
                    replacement.push(ev_slot.as_ref().expect("still held").clone());
                }
                continue;
            }
            match action {
                OutputAction::EmitBound { .. } => unreachable!("re-emission handled above"),
                OutputAction::Emit { value: sig } => {
                    let targets_api = cfg.hierarchy.is_subtype(&sig.class_name, &cm.model.api);
                    let receiver = if targets_api {
                        inst.resource_receiver.unwrap_or(0)
                    } else {
                        inst.component_id
                    };
                    let inserted = Event {
                        phase: sig.phase,
                        class_name: sig.class_name.clone(),
                        method_name: sig.method_name.clone(),
                        receiver_id: receiver,
                        component_id: inst.component_id,
                        args: vec![],
                        source: EventSource::Enforcer,
                    };
                    if targets_api {
                        let op = Self::resource_op_for(
                            cfg,
                            sig.phase,
                            &sig.class_name,
                            &sig.method_name,
                        );
                        apply_resource_op(inst, op, &inserted);
                    }
                    inst.inserted += 1;
                    self.totals.inserted += 1;
                    replacement.push(inserted);
                }
                OutputAction::Special { .. } => match &mut inst.resume_store {
                    Some(store) if !store.held && !store.acquisition_calls.is_empty() => {
                        let receiver = inst.resource_receiver.unwrap_or(0);
                        for (method, args) in store.acquisition_calls.clone() {
                            for phase in [Phase::Before, Phase::After] {
                                replacement.push(Event {
                                    phase,
                                    class_name: store.class_name.clone(),
                                    method_name: method.clone(),
                                    receiver_id: receiver,
                                    component_id: inst.component_id,
                                    args: args.clone(),
                                    source: EventSource::Enforcer,
                                });
                                inst.inserted += 1;
                                self.totals.inserted += 1;
                            }
                        }
                        store.held = true;
                        inst.resumes += 1;
                        self.totals.resumes += 1;
                    }
                    Some(store) if store.held => {
                        // the app already took the resource back on its own
                    }
                    _ => {
                        self.resume_unavailable.push(ResumeFailure {
                            model: cm.model.name.clone(),
                            component: inst.component_id,
                            at_event: self.totals.events_in,
                        });
                    }
                },
            }
        }

        if !reemitted {
            inst.suppressed += 1;
            self.totals.suppressed += 1;
            let ev = ev_slot.take().expect("suppressed event was not re-emitted");
            if ev.phase == Phase::Before {
                self.pending_after_drops
                    .entry((ev.receiver_id, ev.class_name, ev.method_name))
                    .or_default()
                    .push(model_idx);
            }
        }
        inst.state = cm.to_pos[ti];
        let advance = replacement.len();
        current.splice(i..i, replacement);
        i + advance
    }

    pub fn finalize(&self) -> EnforcementReport {
        let mut instances = Vec::new();
        for (model_idx, cm) in self.models.iter().enumerate() {
            let mut order: Vec<&EnforcerInstance> = self.instances[model_idx].iter().collect();
            order.sort_by_key(|inst| inst.component_id);
            for inst in order {
                let held = inst.resume_store.as_ref().is_some_and(|s| s.held);
                instances.push(InstanceReport {
                    model: cm.model.name.clone(),
                    component: inst.component_id,
                    resource_receiver: inst.resource_receiver,
                    final_state: cm.state_ids[inst.state],
                    suppressed: inst.suppressed,
                    inserted: inst.inserted,
                    resumes: inst.resumes,
                    pending: inst.state != cm.initial_pos && held,
                });
            }
        }
        EnforcementReport {
            instances,
            totals: self.totals.clone(),
            resume_unavailable: self.resume_unavailable.clone(),
        }
    }
}

fn apply_resource_op(inst: &mut EnforcerInstance, op: Option<ResourceOp>, ev: &Event) {
    match op {
        Some(ResourceOp::Acquire) => {
            inst.resource_receiver = Some(ev.receiver_id);
            inst.resume_store = Some(ResourceRecord {
                class_name: ev.class_name.clone(),
                acquisition_calls: vec![(ev.method_name.clone(), ev.args.clone())],
                held: true,
            });
        }
        Some(ResourceOp::Release) if inst.resource_receiver == Some(ev.receiver_id) => {
            if let Some(store) = inst.resume_store.as_mut() {
                store.held = false;
            }
        }
        Some(ResourceOp::Release) => {}
        None => {}
    }
}

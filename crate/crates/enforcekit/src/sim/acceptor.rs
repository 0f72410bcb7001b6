//! Policy templates and the acceptors derived from them.
//!
//! An acceptor is the trace-level ground truth for verdicts: it judges a
//! trace against the policy directly, never consulting the engine, so the
//! healed / no-violation classification stays independent of the component
//! under test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ClassHierarchy, Event, Phase};

/// The three policy shapes the corpus instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TemplateKind {
    /// If methodA is invoked, invoke methodB when the callback completes,
    /// unless methodB has already been invoked before.
    InvokeWhenCallback,
    /// If methodA is invoked, replace the call with methodB.
    ReplaceWith,
    /// If methodB is invoked after methodA, suppress it.
    DoNotInvoke,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodRef {
    pub class: String,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub template: TemplateKind,
    #[serde(rename = "methodA")]
    pub method_a: MethodRef,
    #[serde(rename = "methodB")]
    pub method_b: MethodRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub callback: Option<MethodRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad template params: {0}")]
pub struct BadTemplateParams(pub String);

/// A finite-state acceptor, total over any event alphabet: events that do
/// not mention the template's methods never change its state.
#[derive(Debug, Clone)]
pub struct PolicyAcceptor {
    spec: PolicySpec,
}

/// Compiles a template instance into its acceptor.
pub fn derive_acceptor(spec: &PolicySpec) -> Result<PolicyAcceptor, BadTemplateParams> {
    match spec.template {
        TemplateKind::InvokeWhenCallback => {
            if spec.callback.is_none() {
                return Err(BadTemplateParams(
                    "invokeWhenCallback requires a callback".to_string(),
                ));
            }
        }
        TemplateKind::ReplaceWith | TemplateKind::DoNotInvoke => {
            if spec.callback.is_some() {
                return Err(BadTemplateParams(format!("{:?} takes no callback", spec.template)));
            }
        }
    }
    Ok(PolicyAcceptor { spec: spec.clone() })
}

fn matches_ref(ev: &Event, m: &MethodRef, hierarchy: &ClassHierarchy) -> bool {
    ev.method_name == m.method && hierarchy.is_subtype(&ev.class_name, &m.class)
}

impl PolicyAcceptor {
    pub fn spec(&self) -> &PolicySpec {
        &self.spec
    }

    /// True iff the trace satisfies the policy. Obligations are tracked per
    /// component: only the component that invoked methodA owes the matching
    /// methodB at its own callback.
    pub fn accepts(&self, events: &[Event], hierarchy: &ClassHierarchy) -> bool {
        let mut armed: BTreeMap<u64, bool> = BTreeMap::new();
        for ev in events {
            match self.spec.template {
                TemplateKind::InvokeWhenCallback => {
                    if ev.phase == Phase::After && matches_ref(ev, &self.spec.method_a, hierarchy) {
                        armed.insert(ev.component_id, true);
                    } else if matches_ref(ev, &self.spec.method_b, hierarchy) {
                        armed.insert(ev.component_id, false);
                    } else if ev.phase == Phase::After
                        && matches_ref(ev, self.spec.callback.as_ref().expect("checked"), hierarchy)
                        && armed.get(&ev.component_id).copied().unwrap_or(false)
                    {
                        return false;
                    }
                }
                TemplateKind::ReplaceWith => {
                    if matches_ref(ev, &self.spec.method_a, hierarchy) {
                        return false;
                    }
                }
                TemplateKind::DoNotInvoke => {
                    if ev.phase == Phase::After && matches_ref(ev, &self.spec.method_a, hierarchy) {
                        armed.insert(ev.component_id, true);
                    } else if ev.phase == Phase::Before
                        && matches_ref(ev, &self.spec.method_b, hierarchy)
                        && armed.get(&ev.component_id).copied().unwrap_or(false)
                    {
                        return false;
                    }
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EventSource;

    fn hierarchy() -> ClassHierarchy {
        let mut h = ClassHierarchy::new();
        h.insert("android.app.Activity", None);
        h.insert("android.hardware.Camera", None);
        h.insert("android.media.MediaRecorder", None);
        h.insert("android.content.ContentResolver", None);
        h
    }

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

    fn mref(class: &str, method: &str) -> MethodRef {
        MethodRef { class: class.to_string(), method: method.to_string() }
    }

    #[test]
    fn invoke_when_callback_checks_the_obligation_at_callback_completion() {
        let acceptor = derive_acceptor(&PolicySpec {
            template: TemplateKind::InvokeWhenCallback,
            method_a: mref("android.hardware.Camera", "open"),
            method_b: mref("android.hardware.Camera", "release"),
            callback: Some(mref("android.app.Activity", "onPause")),
        })
        .unwrap();
        let h = hierarchy();
        let open = ev(Phase::After, "android.hardware.Camera", "open");
        let release = ev(Phase::Before, "android.hardware.Camera", "release");
        let pause_done = ev(Phase::After, "android.app.Activity", "onPause");
        assert!(!acceptor.accepts(&[open.clone(), pause_done.clone()], &h));
        assert!(acceptor.accepts(&[open.clone(), release.clone(), pause_done.clone()], &h));
        // methodB already invoked before re-arming counts for the next cycle
        assert!(!acceptor.accepts(&[open.clone(), release, open, pause_done], &h));
    }

    #[test]
    fn do_not_invoke_permits_method_b_before_method_a() {
        let acceptor = derive_acceptor(&PolicySpec {
            template: TemplateKind::DoNotInvoke,
            method_a: mref("android.media.MediaRecorder", "start"),
            method_b: mref("android.hardware.Camera", "lock"),
            callback: None,
        })
        .unwrap();
        let h = hierarchy();
        let start = ev(Phase::After, "android.media.MediaRecorder", "start");
        let lock = ev(Phase::Before, "android.hardware.Camera", "lock");
        assert!(acceptor.accepts(&[lock.clone(), start.clone()], &h));
        assert!(!acceptor.accepts(&[start, lock], &h));
    }

    #[test]
    fn replace_with_rejects_any_executed_method_a() {
        let acceptor = derive_acceptor(&PolicySpec {
            template: TemplateKind::ReplaceWith,
            method_a: mref("android.app.Activity", "managedQuery"),
            method_b: mref("android.content.ContentResolver", "query"),
            callback: None,
        })
        .unwrap();
        let h = hierarchy();
        let mq = ev(Phase::Before, "android.app.Activity", "managedQuery");
        let query = ev(Phase::Before, "android.content.ContentResolver", "query");
        assert!(!acceptor.accepts(&[mq], &h));
        assert!(acceptor.accepts(&[query], &h));
    }

    #[test]
    fn obligations_are_per_component() {
        let acceptor = derive_acceptor(&PolicySpec {
            template: TemplateKind::InvokeWhenCallback,
            method_a: mref("android.hardware.Camera", "open"),
            method_b: mref("android.hardware.Camera", "release"),
            callback: Some(mref("android.app.Activity", "onPause")),
        })
        .unwrap();
        let h = hierarchy();
        let mut open_by_2 = ev(Phase::After, "android.hardware.Camera", "open");
        open_by_2.component_id = 2;
        let pause_of_1 = ev(Phase::After, "android.app.Activity", "onPause");
        assert!(acceptor.accepts(&[open_by_2, pause_of_1], &h));
    }

    #[test]
    fn callback_parameter_is_enforced() {
        let base = PolicySpec {
            template: TemplateKind::InvokeWhenCallback,
            method_a: mref("a.B", "m"),
            method_b: mref("a.B", "n"),
            callback: None,
        };
        assert!(derive_acceptor(&base).is_err());
        let mut replace = base;
        replace.template = TemplateKind::ReplaceWith;
        replace.callback = Some(mref("a.B", "cb"));
        assert!(derive_acceptor(&replace).is_err());
    }
}

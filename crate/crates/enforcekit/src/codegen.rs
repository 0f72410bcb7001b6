//! Hook-module source generation from validated enforcement models.
//!
//! Generation separates the platform-independent transition logic (a
//! state-switch program derived from the model) from platform-dependent
//! scaffolding supplied by a [`TargetProfile`]. The `xposed-java` profile
//! emits a hook module laid out as: package-load entry, app-identity check,
//! data-class injection, then one hook block per instrumented class with
//! before/after wrappers exactly for the phases the model uses. The
//! `simscript` profile emits the model plus its dispatch-order annotation
//! as JSON, replayable by the engine.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    ActionSignature, EnforcementModel, Guard, OutputAction, Phase, StateId, SPECIAL_RESUME,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    XposedJava,
    SimScript,
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileKind::XposedJava => write!(f, "xposed-java"),
            ProfileKind::SimScript => write!(f, "simscript"),
        }
    }
}

impl FromStr for ProfileKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "xposed-java" => Ok(ProfileKind::XposedJava),
            "simscript" => Ok(ProfileKind::SimScript),
            other => Err(format!("unknown profile `{other}` (expected xposed-java or simscript)")),
        }
    }
}

/// Scaffolding fragments of one target. Placeholders use `@NAME@` markers
/// so the fragments can contain braces freely.
#[derive(Debug, Clone)]
pub struct ProfileTemplates {
    pub entry: String,
    pub identity_check: String,
    pub data_classes: String,
    pub hook_block: String,
    pub before_wrapper: String,
    pub after_wrapper: String,
}

#[derive(Debug, Clone)]
pub struct TargetProfile {
    pub kind: ProfileKind,
    pub templates: ProfileTemplates,
}

impl TargetProfile {
    pub fn xposed_java() -> Self {
        Self {
            kind: ProfileKind::XposedJava,
            templates: ProfileTemplates {
                entry: "package proactive.modules;

import java.util.Map;
import java.util.WeakHashMap;

import de.robv.android.xposed.IXposedHookLoadPackage;
import de.robv.android.xposed.XC_MethodHook;
import de.robv.android.xposed.XposedHelpers;
import de.robv.android.xposed.callbacks.XC_LoadPackage.LoadPackageParam;

public class @MODULE@ implements IXposedHookLoadPackage {

    @Override
    public void handleLoadPackage(final LoadPackageParam lpparam) throws Throwable {"
                    .to_string(),
                identity_check: "        // check app identity
        if (!EnforcedApps.shouldEnforce(lpparam.packageName)) {
            return;
        }"
                .to_string(),
                data_classes: "        // inject data classes
        DataClassInjector.inject(lpparam.classLoader, \"ResourceManager\");
        final Map<Object, Integer> currentStates = new WeakHashMap<Object, Integer>();
        final Map<Object, Object> lifeCycleObject2resource = new WeakHashMap<Object, Object>();
        final boolean[] doNotAlterExecution = { false };"
                    .to_string(),
                hook_block: "        // hook @CLASS@
        final Class<?> @VAR@ = XposedHelpers.findClass(\"@CLASS@\", lpparam.classLoader);
        for (Class<?> appClass : DexScanner.getAppClassesFromDex(lpparam)) {
            if (!@VAR@.isAssignableFrom(appClass)) {
                continue;
            }
            HookTargets.register(appClass);
        }"
                .to_string(),
                before_wrapper: "        XposedHelpers.findAndHookMethod(@VAR@, \"@METHOD@\", new XC_MethodHook() {
            @Override
            protected void beforeHookedMethod(MethodHookParam param) throws Throwable {
                if (doNotAlterExecution[0]) {
                    return;
                }
@BODY@
            }
        });"
                .to_string(),
                after_wrapper: "        XposedHelpers.findAndHookMethod(@VAR@, \"@METHOD@\", new XC_MethodHook() {
            @Override
            protected void afterHookedMethod(MethodHookParam param) throws Throwable {
                if (doNotAlterExecution[0]) {
                    return;
                }
@BODY@
            }
        });"
                .to_string(),
            },
        }
    }

    pub fn sim_script() -> Self {
        // the JSON envelope pieces double as this profile's scaffolding slots
        Self {
            kind: ProfileKind::SimScript,
            templates: ProfileTemplates {
                entry: "{\n  \"format\": \"simscript\",".to_string(),
                identity_check: "  \"appIdentity\": \"session-config\",".to_string(),
                data_classes: "  \"stateStorage\": \"per-component-map\",".to_string(),
                hook_block: "  \"model\": @MODEL@,".to_string(),
                before_wrapper: "@DISPATCH@".to_string(),
                after_wrapper: "}".to_string(),
            },
        }
    }

    pub fn by_kind(kind: ProfileKind) -> Self {
        match kind {
            ProfileKind::XposedJava => Self::xposed_java(),
            ProfileKind::SimScript => Self::sim_script(),
        }
    }

    fn check(&self) -> Result<(), CodegenError> {
        let slots = [
            ("entry", &self.templates.entry),
            ("identity_check", &self.templates.identity_check),
            ("data_classes", &self.templates.data_classes),
            ("hook_block", &self.templates.hook_block),
            ("before_wrapper", &self.templates.before_wrapper),
            ("after_wrapper", &self.templates.after_wrapper),
        ];
        for (name, body) in slots {
            if body.trim().is_empty() {
                return Err(CodegenError::UnsupportedProfile(format!(
                    "profile `{}` has an empty `{name}` template slot",
                    self.kind
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CodegenError {
    #[error("unsupported profile: {0}")]
    UnsupportedProfile(String),
    #[error("model failed validation: {0}")]
    UnvalidatedModel(String),
    #[error("bad simscript input: {0}")]
    BadSimScript(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Section {
    pub name: String,
    /// 1-based inclusive line span within `source_text`.
    pub start_line: usize,
    pub end_line: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratedModule {
    pub source_text: String,
    pub sections: Vec<Section>,
    /// Canonical rendering of the platform-independent transition program;
    /// identical for every profile.
    pub program_text: String,
}

impl GeneratedModule {
    /// Sections must be disjoint, ordered, and cover every non-blank line.
    pub fn check_sections(&self) -> Result<(), String> {
        let mut last_end = 0usize;
        for s in &self.sections {
            if s.start_line <= last_end {
                return Err(format!("section `{}` overlaps or is out of order", s.name));
            }
            if s.end_line < s.start_line {
                return Err(format!("section `{}` has an inverted span", s.name));
            }
            last_end = s.end_line;
        }
        for (idx, line) in self.source_text.lines().enumerate() {
            let n = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let covered = self.sections.iter().any(|s| s.start_line <= n && n <= s.end_line);
            if !covered {
                return Err(format!("line {n} is outside every section: {line:?}"));
            }
        }
        Ok(())
    }

    pub fn section_text(&self, name: &str) -> Option<String> {
        let s = self.sections.iter().find(|s| s.name == name)?;
        let lines: Vec<&str> = self.source_text.lines().collect();
        Some(lines[s.start_line - 1..s.end_line].join("\n"))
    }
}

/// Section names in emission order.
pub fn section_report(module: &GeneratedModule) -> Vec<String> {
    module.sections.iter().map(|s| s.name.clone()).collect()
}

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("@{k}@"), v);
    }
    out
}

fn short_name(class: &str) -> &str {
    class.rsplit('.').next().unwrap_or(class)
}

fn hook_var(class: &str) -> String {
    let short = short_name(class);
    let mut chars = short.chars();
    match chars.next() {
        Some(c) => format!("{}{}Class", c.to_lowercase(), chars.as_str()),
        None => "targetClass".to_string(),
    }
}

fn render_outputs(outputs: &[OutputAction]) -> String {
    if outputs.is_empty() {
        return "suppress".to_string();
    }
    outputs
        .iter()
        .map(|a| match a {
            OutputAction::Emit { value } => format!("emit {value}"),
            OutputAction::EmitBound { value } => format!("emit-bound {value}"),
            OutputAction::Special { value } => format!("special {value}"),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn render_guard(guard: &Guard) -> String {
    match guard {
        Guard::Exact { signature } => signature.to_string(),
        Guard::AnyExcept { exclude, binder } => {
            let set = exclude.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
            match binder {
                Some(b) => format!("{b} not in {{{set}}}"),
                None => format!("any except {{{set}}}"),
            }
        }
    }
}

/// Canonical rendering of the platform-independent transition program:
/// per-state dispatch rows in evaluation (declaration) order.
fn program_text(model: &EnforcementModel) -> String {
    let mut out = String::new();
    for state in &model.states {
        let marker = if state.initial { " initial" } else { "" };
        out.push_str(&format!("state {}{}:\n", state.id, marker));
        for (i, t) in model.transitions.iter().enumerate() {
            if t.from != state.id {
                continue;
            }
            out.push_str(&format!(
                "  [{i}] on {} -> state {} / {}\n",
                render_guard(&t.intercepted),
                t.to,
                render_outputs(&t.outputs)
            ));
        }
    }
    out
}

/// Per-state transition indices in evaluation order; the dispatch-order
/// annotation embedded in simscript output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchEntry {
    pub state: StateId,
    pub transitions: Vec<usize>,
}

fn dispatch_order(model: &EnforcementModel) -> Vec<DispatchEntry> {
    model
        .states
        .iter()
        .map(|s| DispatchEntry {
            state: s.id,
            transitions: model
                .transitions
                .iter()
                .enumerate()
                .filter(|(_, t)| t.from == s.id)
                .map(|(i, _)| i)
                .collect(),
        })
        .collect()
}

struct Emitter {
    lines: Vec<String>,
    sections: Vec<Section>,
    open: Option<(String, usize)>,
}

impl Emitter {
    fn new() -> Self {
        Self { lines: Vec::new(), sections: Vec::new(), open: None }
    }

    fn begin(&mut self, name: &str) {
        self.close();
        self.open = Some((name.to_string(), self.lines.len() + 1));
    }

    fn close(&mut self) {
        if let Some((name, start)) = self.open.take() {
            self.sections.push(Section { name, start_line: start, end_line: self.lines.len() });
        }
    }

    fn push_block(&mut self, text: &str) {
        for line in text.lines() {
            self.lines.push(line.to_string());
        }
    }

    fn gap(&mut self) {
        self.close();
        self.lines.push(String::new());
    }

    fn finish(mut self, program: String) -> GeneratedModule {
        self.close();
        let mut source_text = self.lines.join("\n");
        source_text.push('\n');
        GeneratedModule { source_text, sections: self.sections, program_text: program }
    }
}

/// The hooks a model needs: one entry per instrumented class, with the
/// hooked methods per phase in first-use order.
struct HookPlan {
    class: String,
    methods: Vec<(String, Phase)>,
    hook_all: bool,
}

fn hook_plan(model: &EnforcementModel) -> Vec<HookPlan> {
    let mut classes: Vec<String> = Vec::new();
    let push_class = |c: &str, classes: &mut Vec<String>| {
        if !classes.iter().any(|x| x == c) {
            classes.push(c.to_string());
        }
    };

    // intercepted signatures drive the hooks; api class first, then the
    // lifecycle object, then anything else in first-use order
    let mut intercepted: Vec<&ActionSignature> = Vec::new();
    let mut any_except_classes: BTreeSet<String> = BTreeSet::new();
    for t in &model.transitions {
        match &t.intercepted {
            Guard::Exact { signature } => intercepted.push(signature),
            Guard::AnyExcept { .. } => {
                any_except_classes.insert(model.api.clone());
                any_except_classes.insert(model.lifecycle_object.clone());
            }
        }
    }
    let used: Vec<&str> = intercepted.iter().map(|s| s.class_name.as_str()).collect();
    if used.iter().any(|c| *c == model.api) || any_except_classes.contains(&model.api) {
        push_class(&model.api, &mut classes);
    }
    if used.iter().any(|c| *c == model.lifecycle_object)
        || any_except_classes.contains(&model.lifecycle_object)
    {
        push_class(&model.lifecycle_object, &mut classes);
    }
    for c in used {
        push_class(c, &mut classes);
    }

    classes
        .into_iter()
        .map(|class| {
            let mut methods: Vec<(String, Phase)> = Vec::new();
            for sig in &intercepted {
                if sig.class_name == class
                    && !methods.iter().any(|(m, p)| *m == sig.method_name && *p == sig.phase)
                {
                    methods.push((sig.method_name.clone(), sig.phase));
                }
            }
            let hook_all = any_except_classes.contains(&class);
            HookPlan { class, methods, hook_all }
        })
        .collect()
}

// Switch body for one hooked (class, method, phase): the per-state dispatch
// over the transitions that can intercept this symbol.
fn wrapper_body(model: &EnforcementModel, class: &str, method: &str, phase: Phase) -> String {
    let probe =
        ActionSignature { phase, class_name: class.to_string(), method_name: method.to_string() };
    let is_api = class == model.api;
    let mut body = String::new();
    let pad = "                ";
    if is_api {
        body.push_str(&format!(
            "{pad}Object lifeCycleObject = ResourceManager.ownerOf(param.thisObject);\n"
        ));
        body.push_str(&format!("{pad}Object resource = param.thisObject;\n"));
        body.push_str(&format!("{pad}lifeCycleObject2resource.put(lifeCycleObject, resource);\n"));
    } else {
        body.push_str(&format!("{pad}Object lifeCycleObject = param.thisObject;\n"));
        body.push_str(&format!(
            "{pad}Object resource = lifeCycleObject2resource.get(lifeCycleObject);\n"
        ));
    }
    body.push_str(&format!("{pad}Integer state = currentStates.get(lifeCycleObject);\n"));
    body.push_str(&format!(
        "{pad}switch (state == null ? {} : state.intValue()) {{\n",
        model.initial_state().expect("validated model")
    ));
    for s in &model.states {
        let firing = model.transitions.iter().enumerate().find(|(_, t)| {
            t.from == s.id
                && match &t.intercepted {
                    Guard::Exact { signature } => *signature == probe,
                    Guard::AnyExcept { exclude, .. } => !exclude.contains(&probe),
                }
        });
        let Some((ti, t)) = firing else { continue };
        body.push_str(&format!("{pad}    case {}:\n", s.id));
        body.push_str(&format!(
            "{pad}        // t{ti}: {} / {}\n",
            render_guard(&t.intercepted),
            render_outputs(&t.outputs)
        ));
        let reemits = t.outputs.iter().any(|a| match a {
            OutputAction::EmitBound { .. } => true,
            OutputAction::Emit { value } => *value == probe,
            OutputAction::Special { .. } => false,
        });
        if !reemits && phase == Phase::Before {
            body.push_str(&format!("{pad}        param.setResult(null); // suppress the call\n"));
        }
        for action in &t.outputs {
            match action {
                OutputAction::Emit { value } if *value != probe => {
                    let target =
                        if value.class_name == model.api { "resource" } else { "lifeCycleObject" };
                    body.push_str(&format!("{pad}        doNotAlterExecution[0] = true;\n"));
                    body.push_str(&format!(
                        "{pad}        XposedHelpers.callMethod({target}, \"{}\");\n",
                        value.method_name
                    ));
                    body.push_str(&format!("{pad}        doNotAlterExecution[0] = false;\n"));
                }
                OutputAction::Special { value } if value == SPECIAL_RESUME => {
                    body.push_str(&format!(
                        "{pad}        ResumeSupport.resumeIfNeeded(lifeCycleObject, lifeCycleObject2resource, doNotAlterExecution);\n"
                    ));
                }
                _ => {}
            }
        }
        body.push_str(&format!("{pad}        currentStates.put(lifeCycleObject, {});\n", t.to));
        body.push_str(&format!("{pad}        break;\n"));
    }
    body.push_str(&format!("{pad}    default:\n"));
    body.push_str(&format!("{pad}        break;\n"));
    body.push_str(&format!("{pad}}}"));
    body
}

fn generate_xposed(model: &EnforcementModel, profile: &TargetProfile) -> GeneratedModule {
    let templates = &profile.templates;
    let mut em = Emitter::new();
    let module_name = format!("{}Module", model.name);

    em.begin("entry");
    em.push_block(&fill(&templates.entry, &[("MODULE", &module_name)]));
    em.gap();

    em.begin("identity-check");
    em.push_block(&templates.identity_check);
    em.gap();

    let plans = hook_plan(model);
    if !model.transitions.is_empty() {
        em.begin("data-classes");
        em.push_block(&templates.data_classes);
        if model.uses_resume() {
            em.push_block(
                "        DataClassInjector.inject(lpparam.classLoader, \"ResumeSupport\");\n        final Map<Object, Object[]> resumeStore = new WeakHashMap<Object, Object[]>();",
            );
        }
        em.gap();
    }

    for plan in &plans {
        let var = hook_var(&plan.class);
        em.begin(&format!("hook:{}", short_name(&plan.class)));
        em.push_block(&fill(&templates.hook_block, &[("CLASS", &plan.class), ("VAR", &var)]));
        for (method, phase) in &plan.methods {
            let body = wrapper_body(model, &plan.class, method, *phase);
            let wrapper = match phase {
                Phase::Before => &templates.before_wrapper,
                Phase::After => &templates.after_wrapper,
            };
            em.push_block(&fill(wrapper, &[("VAR", &var), ("METHOD", method), ("BODY", &body)]));
        }
        if plan.hook_all {
            em.push_block(&format!(
                "        XposedBridge.hookAllMethods({var}, new XC_MethodHook() {{ /* guard ranges over every method of {} */ }});",
                plan.class
            ));
        }
        em.gap();
    }

    // closing braces belong to the last open scope
    let closer = "    }\n}";
    if let Some(last) = em.sections.last().map(|s| s.name.clone()) {
        // reopen the most recent section so the span stays contiguous
        let last_section = em.sections.pop().expect("non-empty");
        em.open = Some((last, last_section.start_line));
        em.push_block(closer);
    } else {
        em.push_block(closer);
    }
    em.finish(program_text(model))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SimScriptFile {
    format: String,
    app_identity: String,
    state_storage: String,
    model: EnforcementModel,
    dispatch_order: Vec<DispatchEntry>,
}

fn generate_simscript(model: &EnforcementModel) -> GeneratedModule {
    let file = SimScriptFile {
        format: "simscript".to_string(),
        app_identity: "session-config".to_string(),
        state_storage: "per-component-map".to_string(),
        model: model.clone(),
        dispatch_order: dispatch_order(model),
    };
    let mut source_text = serde_json::to_string_pretty(&file).expect("model serializes");
    source_text.push('\n');
    let end_line = source_text.lines().count();
    GeneratedModule {
        source_text,
        sections: vec![Section { name: "model".to_string(), start_line: 1, end_line }],
        program_text: program_text(model),
    }
}

/// Emits hook-module source for a validated model under the given profile.
pub fn generate(
    model: &EnforcementModel,
    profile: &TargetProfile,
) -> Result<GeneratedModule, CodegenError> {
    profile.check()?;
    model.check_structure().map_err(|e| CodegenError::UnvalidatedModel(e.to_string()))?;
    Ok(match profile.kind {
        ProfileKind::XposedJava => generate_xposed(model, profile),
        ProfileKind::SimScript => generate_simscript(model),
    })
}

/// File name the CLI writes for a generated module.
pub fn output_file_name(model: &EnforcementModel, kind: ProfileKind) -> String {
    match kind {
        ProfileKind::XposedJava => format!("{}.xposed-java.txt", model.name),
        ProfileKind::SimScript => format!("{}.simscript.json", model.name),
    }
}

/// Parses simscript text back into the model it encodes, verifying the
/// dispatch-order annotation matches the model's declaration order.
pub fn parse_simscript(text: &str) -> Result<EnforcementModel, CodegenError> {
    let file: SimScriptFile =
        serde_json::from_str(text).map_err(|e| CodegenError::BadSimScript(e.to_string()))?;
    if file.format != "simscript" {
        return Err(CodegenError::BadSimScript(format!("unknown format `{}`", file.format)));
    }
    file.model.check_structure().map_err(|e| CodegenError::BadSimScript(e.to_string()))?;
    if file.dispatch_order != dispatch_order(&file.model) {
        return Err(CodegenError::BadSimScript(
            "dispatch order annotation does not match the embedded model".to_string(),
        ));
    }
    Ok(file.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::State;
    use std::path::PathBuf;

    fn fixture(rel: &str) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
    }

    fn camera_model() -> EnforcementModel {
        crate::spec_io::load_model(&fixture("corpus/models/camera_policy1.json")).unwrap()
    }

    fn empty_model() -> EnforcementModel {
        EnforcementModel {
            name: "Noop".to_string(),
            lifecycle_object: "android.app.Activity".to_string(),
            api: "android.hardware.Camera".to_string(),
            states: vec![State { id: 0, initial: true }],
            transitions: vec![],
        }
    }

    #[test]
    fn camera_module_has_the_four_layers_in_order() {
        let module = generate(&camera_model(), &TargetProfile::xposed_java()).unwrap();
        assert_eq!(
            section_report(&module),
            ["entry", "identity-check", "data-classes", "hook:Camera", "hook:Activity"]
        );
        module.check_sections().unwrap();
    }

    #[test]
    fn camera_module_hooks_the_phases_the_model_uses() {
        let module = generate(&camera_model(), &TargetProfile::xposed_java()).unwrap();
        let camera = module.section_text("hook:Camera").unwrap();
        assert!(camera.contains("\"open\""));
        assert!(camera.contains("afterHookedMethod"));
        assert!(camera.contains("\"release\""));
        assert!(camera.contains("beforeHookedMethod"));
        let activity = module.section_text("hook:Activity").unwrap();
        assert!(activity.contains("\"onPause\""));
        assert!(activity.contains("afterHookedMethod"));
        // every wrapper starts with the self-interception flag
        let wrappers = module.source_text.matches("HookedMethod(MethodHookParam param)").count();
        let checks = module.source_text.matches("if (doNotAlterExecution[0])").count();
        assert_eq!(wrappers, checks);
        assert!(wrappers >= 5);
    }

    #[test]
    fn resume_support_is_emitted_only_when_used() {
        let with = generate(&camera_model(), &TargetProfile::xposed_java()).unwrap();
        assert!(with.source_text.contains("ResumeSupport"));
        let without = generate(
            &crate::spec_io::load_model(&fixture(
                "corpus/models/bluetooth_disable_on_destroy.json",
            ))
            .unwrap(),
            &TargetProfile::xposed_java(),
        )
        .unwrap();
        assert!(!without.source_text.contains("ResumeSupport"));
    }

    #[test]
    fn empty_model_keeps_only_entry_and_identity_check() {
        let module = generate(&empty_model(), &TargetProfile::xposed_java()).unwrap();
        assert_eq!(section_report(&module), ["entry", "identity-check"]);
        module.check_sections().unwrap();
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&camera_model(), &TargetProfile::xposed_java()).unwrap();
        let b = generate(&camera_model(), &TargetProfile::xposed_java()).unwrap();
        assert_eq!(a.source_text, b.source_text);
    }

    #[test]
    fn transition_program_is_profile_independent() {
        let model = camera_model();
        let xposed = generate(&model, &TargetProfile::xposed_java()).unwrap();
        let script = generate(&model, &TargetProfile::sim_script()).unwrap();
        assert_eq!(xposed.program_text, script.program_text);
        assert_ne!(xposed.source_text, script.source_text);
    }

    #[test]
    fn simscript_roundtrips_to_the_same_model() {
        let model = camera_model();
        let script = generate(&model, &TargetProfile::sim_script()).unwrap();
        let parsed = parse_simscript(&script.source_text).unwrap();
        assert_eq!(parsed, model);
    }

    #[test]
    fn empty_template_slot_is_an_unsupported_profile() {
        let mut profile = TargetProfile::xposed_java();
        profile.templates.identity_check = "  ".to_string();
        assert!(matches!(
            generate(&empty_model(), &profile),
            Err(CodegenError::UnsupportedProfile(_))
        ));
    }

    #[test]
    fn unvalidated_model_is_rejected() {
        let mut model = empty_model();
        model.states.clear();
        assert!(matches!(
            generate(&model, &TargetProfile::xposed_java()),
            Err(CodegenError::UnvalidatedModel(_))
        ));
    }
}

//! Batch driver: load specifications, evaluate their assertions, and build
//! deterministic reports.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::analysis::{
    check_deadlock_free, check_failures_equivalence, check_failures_refinement, CounterExample,
    Status, Verdict,
};
use crate::contract::{
    compose_communication, compose_feedback, compose_interleave, compose_reflexive,
    contract_semantics, validate_contract, Contract, ContractDenotation, ContractError,
};
use crate::convergence::{check_cvg, check_ecvg, GlbConfig, Method, Relation};
use crate::ioproc::{check_io_process, serialize};
use crate::lts::{
    check_divergence_free, compile, failures_model, DivergenceVerdict, Lts, NormLts,
};
use crate::syntax::types::{Dir, EventId};
use crate::syntax::{
    parser, pretty, Assertion, AssertionKind, CompositionOp, ContractDecl, Diagnostic, ErrCode,
    ProcOperand, ProcessExpr, Spec,
};

/// Flags shared by a whole run; per-assertion options override them.
#[derive(Debug, Clone)]
pub struct RunFlags {
    pub gap: Option<u32>,
    pub buffer: u32,
    pub max_states: Option<usize>,
    pub oracle: bool,
    pub seed: Option<u64>,
}

impl Default for RunFlags {
    fn default() -> Self {
        RunFlags {
            gap: None,
            buffer: 1,
            max_states: None,
            oracle: false,
            seed: None,
        }
    }
}

impl RunFlags {
    pub fn compile_budget(&self) -> usize {
        self.max_states.unwrap_or(crate::lts::DEFAULT_MAX_STATES)
    }
}

const GLB_BUDGET: usize = 5_000_000;

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

/// Load a specification from a file, splicing in `include` directives
/// relative to the including file.
pub fn load_spec(path: &Path) -> Result<Spec, Vec<Diagnostic>> {
    let mut items = Vec::new();
    let mut diags = Vec::new();
    let mut seen = Vec::new();
    load_file(path, &mut items, &mut diags, &mut seen);
    crate::syntax::resolve_items(items, diags)
}

/// Load and merge several files into one specification.
pub fn load_specs(paths: &[PathBuf]) -> Result<Spec, Vec<Diagnostic>> {
    let mut items = Vec::new();
    let mut diags = Vec::new();
    let mut seen = Vec::new();
    for p in paths {
        load_file(p, &mut items, &mut diags, &mut seen);
    }
    crate::syntax::resolve_items(items, diags)
}

fn load_file(
    path: &Path,
    items: &mut Vec<parser::Item>,
    diags: &mut Vec<Diagnostic>,
    seen: &mut Vec<PathBuf>,
) {
    let canonical = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
    if seen.contains(&canonical) {
        return;
    }
    seen.push(canonical);
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            diags.push(Diagnostic {
                pos: None,
                code: ErrCode::Syntax,
                message: format!("E_IO: cannot read {}: {e}", path.display()),
            });
            return;
        }
    };
    let parsed = parser::parse_items(&text);
    diags.extend(parsed.diagnostics);
    for item in parsed.items {
        match item {
            parser::Item::Include(rel) => {
                let base = path.parent().unwrap_or(Path::new("."));
                load_file(&base.join(rel), items, diags, seen);
            }
            other => items.push(other),
        }
    }
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub trace: Vec<String>,
    /// Positions in `trace` communicating events the original process could
    /// not perform at that point (convergence failures only).
    pub new_in_context: Vec<usize>,
    pub refusal: Option<Vec<String>>,
    pub tick: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub id: usize,
    pub kind: &'static str,
    pub text: String,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
    pub states_explored: usize,
    /// Wall time; excluded from the structured form to keep it canonical.
    #[serde(skip)]
    pub micros: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub gap: Option<u32>,
    pub buffer: u32,
    pub max_states: Option<usize>,
    pub oracle: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: ConfigEcho,
    pub records: Vec<Record>,
    pub summary: Summary,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.summary.errors > 0 {
            2
        } else if self.summary.failed > 0 {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(
                out,
                "[{:>3}] {:<5} {:<14} {}  ({} states, {:.1} ms)",
                r.id,
                r.status,
                r.kind,
                r.text,
                r.states_explored,
                r.micros as f64 / 1000.0
            );
            if let Some(m) = r.method {
                let _ = writeln!(out, "      method: {m}");
            }
            if let Some(d) = &r.detail {
                let _ = writeln!(out, "      {d}");
            }
            if let Some(w) = &r.witness {
                let _ = writeln!(out, "      {}", render_witness(w));
            }
            for n in &r.notes {
                let _ = writeln!(out, "      note: {n}");
            }
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "{} assertion(s): {} passed, {} failed, {} error(s)",
            self.records.len(),
            s.passed,
            s.failed,
            s.errors
        );
        out
    }
}

fn render_witness(w: &Witness) -> String {
    let mut steps: Vec<String> = w
        .trace
        .iter()
        .enumerate()
        .map(|(i, e)| {
            if w.new_in_context.contains(&i) {
                format!("{e} (new in context)")
            } else {
                e.clone()
            }
        })
        .collect();
    if w.tick {
        steps.push("tick".into());
    }
    let mut s = format!("witness trace <{}>", steps.join(", "));
    if let Some(r) = &w.refusal {
        let shown: Vec<&str> = r.iter().take(8).map(|x| x.as_str()).collect();
        let ell = if r.len() > 8 { ", ..." } else { "" };
        s.push_str(&format!(" refusing {{{}{}}}", shown.join(", "), ell));
    }
    s
}

/// Render the witness of a failed record event by event with direction
/// tags; errors when the record has no witness.
pub fn explain(record: &Record, spec: &Spec) -> Result<String, String> {
    let w = record
        .witness
        .as_ref()
        .ok_or_else(|| "E_NO_WITNESS: the assertion has no counterexample".to_string())?;
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "counterexample for [{}] {}", record.id, record.text);
    for (i, name) in w.trace.iter().enumerate() {
        let dir = spec
            .table
            .channel_id(name.split('.').next().unwrap_or(""))
            .map(|_| {
                let ev = (0..spec.table.declared_len())
                    .find(|&e| spec.table.event_name(e) == name);
                match ev.map(|e| spec.table.dir_of(e)) {
                    Some(Dir::In) => "input",
                    Some(Dir::Out) => "output",
                    _ => "event",
                }
            })
            .unwrap_or("event");
        let mark = if w.new_in_context.contains(&i) {
            "  <- new in context"
        } else {
            ""
        };
        let _ = writeln!(out, "  {:>2}. {name} ({dir}){mark}", i + 1);
    }
    if w.tick {
        let _ = writeln!(out, "  then terminates");
    }
    if let Some(r) = &w.refusal {
        let _ = writeln!(out, "  refusing: {{{}}}", r.join(", "));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Evaluates assertions against a specification, caching compiled automata
/// and contract denotations.
pub struct Evaluator {
    pub spec: Spec,
    flags: RunFlags,
    lts_cache: HashMap<String, Arc<Lts>>,
    norm_cache: HashMap<String, Arc<NormLts>>,
    contracts: HashMap<String, Arc<Contract>>,
    dens: HashMap<String, Arc<ContractDenotation>>,
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct EvalFailure(pub String);

impl Evaluator {
    pub fn new(spec: Spec, flags: RunFlags) -> Evaluator {
        Evaluator {
            spec,
            flags,
            lts_cache: HashMap::new(),
            norm_cache: HashMap::new(),
            contracts: HashMap::new(),
            dens: HashMap::new(),
        }
    }

    /// Evaluate every assertion of the specification, in order.
    pub fn run(&mut self) -> Report {
        let assertions = self.spec.assertions.clone();
        let mut records = Vec::new();
        for (i, a) in assertions.iter().enumerate() {
            records.push(self.eval_assertion(i + 1, a));
        }
        let summary = Summary {
            passed: records.iter().filter(|r| r.status == "PASS").count(),
            failed: records.iter().filter(|r| r.status == "FAIL").count(),
            errors: records.iter().filter(|r| r.status == "ERROR").count(),
        };
        Report {
            tool: "bricc",
            version: env!("CARGO_PKG_VERSION"),
            config: ConfigEcho {
                gap: self.flags.gap,
                buffer: self.flags.buffer,
                max_states: self.flags.max_states,
                oracle: self.flags.oracle,
                seed: self.flags.seed,
            },
            records,
            summary,
        }
    }

    fn compiled(&mut self, name: &str) -> Result<Arc<Lts>, EvalFailure> {
        if let Some(l) = self.lts_cache.get(name) {
            return Ok(l.clone());
        }
        let lts = compile(
            &self.spec,
            &ProcessExpr::named(name),
            self.flags.compile_budget(),
        )
        .map_err(|e| EvalFailure(e.to_string()))?;
        let arc = Arc::new(lts);
        self.lts_cache.insert(name.to_string(), arc.clone());
        Ok(arc)
    }

    fn normalized(&mut self, name: &str) -> Result<Arc<NormLts>, EvalFailure> {
        if let Some(n) = self.norm_cache.get(name) {
            return Ok(n.clone());
        }
        let lts = self.compiled(name)?;
        let n = Arc::new(failures_model(&lts));
        self.norm_cache.insert(name.to_string(), n.clone());
        Ok(n)
    }

    fn operand_norm(&mut self, op: &ProcOperand, opts_gap: Option<u32>, other: Option<&ProcOperand>) -> Result<Arc<NormLts>, EvalFailure> {
        match op {
            ProcOperand::Named { name, hide: None } => self.normalized(name),
            ProcOperand::Named {
                name,
                hide: Some(set),
            } => {
                let key = format!("{name}\\{}", set.channels.join(","));
                if let Some(n) = self.norm_cache.get(&key) {
                    return Ok(n.clone());
                }
                let expr = ProcessExpr::Hide(Box::new(ProcessExpr::named(name)), set.clone());
                let lts = compile(&self.spec, &expr, self.flags.compile_budget())
                    .map_err(|e| EvalFailure(e.to_string()))?;
                let n = Arc::new(failures_model(&lts));
                self.norm_cache.insert(key, n.clone());
                Ok(n)
            }
            ProcOperand::GlbCvg(_) | ProcOperand::GlbEcvg(_) => {
                let glb = self.operand_glb(op, opts_gap, other)?;
                Ok(Arc::new(failures_model(&glb)))
            }
        }
    }

    /// Build the lower-bound automaton named by a `GLB_*` operand.
    fn operand_glb(
        &mut self,
        op: &ProcOperand,
        opts_gap: Option<u32>,
        other: Option<&ProcOperand>,
    ) -> Result<Lts, EvalFailure> {
        let (ProcOperand::GlbCvg(name) | ProcOperand::GlbEcvg(name)) = op else {
            return Err(EvalFailure("not a lower-bound operand".into()));
        };
        let extended = matches!(op, ProcOperand::GlbEcvg(_));
        let base = self.normalized(name)?;
        let sp = serialize(&base).map_err(|e| EvalFailure(e.to_string()))?;
        let gap = match opts_gap.or(self.flags.gap) {
            Some(g) => g,
            None => {
                // Infer from the other operand when it is a plain reference.
                match other {
                    Some(ProcOperand::Named { name: o, hide: None }) => {
                        let on = self.normalized(o)?;
                        match crate::ioproc::depth(&on) {
                            Ok(d) => d.saturating_sub(sp.source_depth),
                            Err(_) => on.state_count() as u32,
                        }
                    }
                    _ => 0,
                }
            }
        };
        let budget = self.flags.max_states.unwrap_or(GLB_BUDGET);
        let mut used = crate::convergence::used_events(&base);
        if let Some(ProcOperand::Named { name: o, hide: None }) = other {
            if let Ok(on) = self.normalized(o) {
                used.union_with(&crate::convergence::used_events(&on));
            }
        }
        let cfg = crate::convergence::GlbConfig {
            gap: None,
            max_states: budget,
            force_oracle: false,
            inputs: Some(used.clone()),
            all_events: Some(used),
        };
        crate::convergence::glb::build_glb_with(&sp, gap, extended, &cfg)
            .map_err(|e| EvalFailure(e.to_string()))
    }

    /// Resolve a contract by name (declared or composed), as the
    /// assertion evaluator would.
    pub fn contract_by_name(&mut self, name: &str) -> Option<Arc<Contract>> {
        self.contract(name).ok()
    }

    fn contract(&mut self, name: &str) -> Result<Arc<Contract>, EvalFailure> {
        if let Some(c) = self.contracts.get(name) {
            return Ok(c.clone());
        }
        let decl = self
            .spec
            .contract_decl(name)
            .cloned()
            .ok_or_else(|| EvalFailure(format!("E_UNBOUND: unknown contract `{name}`")))?;
        let budget = self.flags.compile_budget();
        let ctr = match &decl {
            ContractDecl::Literal { .. } => {
                let c = Contract::from_decl(&self.spec, &decl)
                    .map_err(|e| EvalFailure(e.to_string()))?;
                let den = validate_contract(&self.spec, &c, budget)
                    .map_err(|e| EvalFailure(e.to_string()))?;
                self.dens.insert(name.to_string(), Arc::new(den));
                c
            }
            ContractDecl::Composed { op, buffer, .. } => {
                let cap = buffer.unwrap_or(self.flags.buffer);
                self.compose(name, op, cap)?
            }
        };
        let arc = Arc::new(ctr);
        self.contracts.insert(name.to_string(), arc.clone());
        Ok(arc)
    }

    fn compose(
        &mut self,
        name: &str,
        op: &CompositionOp,
        cap: u32,
    ) -> Result<Contract, EvalFailure> {
        let budget = self.flags.compile_budget();
        let chan = |spec: &Spec, n: &str| {
            spec.table
                .channel_id(n)
                .ok_or_else(|| EvalFailure(format!("E_UNBOUND: unknown channel `{n}`")))
        };
        let err = |e: ContractError| EvalFailure(e.to_string());
        match op {
            CompositionOp::Interleave { left, right } => {
                let l = self.contract(left)?;
                let r = self.contract(right)?;
                compose_interleave(&self.spec, &l, &r, name).map_err(err)
            }
            CompositionOp::Communication {
                left,
                left_chan,
                right,
                right_chan,
            } => {
                let l = self.contract(left)?;
                let r = self.contract(right)?;
                let ic = chan(&self.spec, left_chan)?;
                let oc = chan(&self.spec, right_chan)?;
                compose_communication(&mut self.spec, &l, ic, &r, oc, cap, budget, name)
                    .map_err(err)
            }
            CompositionOp::Feedback {
                base,
                input_chan,
                output_chan,
            } => {
                let b = self.contract(base)?;
                let ic = chan(&self.spec, input_chan)?;
                let oc = chan(&self.spec, output_chan)?;
                compose_feedback(&mut self.spec, &b, ic, oc, cap, budget, name).map_err(err)
            }
            CompositionOp::Reflexive {
                base,
                input_chan,
                output_chan,
            } => {
                let b = self.contract(base)?;
                let ic = chan(&self.spec, input_chan)?;
                let oc = chan(&self.spec, output_chan)?;
                compose_reflexive(&mut self.spec, &b, ic, oc, cap, budget, name).map_err(err)
            }
        }
    }

    fn denotation(&mut self, name: &str) -> Result<Arc<ContractDenotation>, EvalFailure> {
        if let Some(d) = self.dens.get(name) {
            return Ok(d.clone());
        }
        let ctr = self.contract(name)?;
        let den = contract_semantics(&self.spec, &ctr, self.flags.compile_budget())
            .map_err(|e| EvalFailure(e.to_string()))?;
        let arc = Arc::new(den);
        self.dens.insert(name.to_string(), arc.clone());
        Ok(arc)
    }

    /// Behaviour of a process or contract, in the stable-failures view.
    fn behaviour_norm(&mut self, name: &str) -> Result<Arc<NormLts>, EvalFailure> {
        if self.spec.process(name).is_some() {
            return self.normalized(name);
        }
        if self.spec.contract_decl(name).is_some() {
            let ctr = self.contract(name)?;
            let key = format!("contract:{name}");
            if let Some(n) = self.norm_cache.get(&key) {
                return Ok(n.clone());
            }
            let lts = compile(&self.spec, &ctr.behaviour, self.flags.compile_budget())
                .map_err(|e| EvalFailure(e.to_string()))?;
            let n = Arc::new(failures_model(&lts));
            self.norm_cache.insert(key, n.clone());
            return Ok(n);
        }
        Err(EvalFailure(format!(
            "E_UNBOUND: unknown process or contract `{name}`"
        )))
    }

    fn behaviour_lts(&mut self, name: &str) -> Result<Arc<Lts>, EvalFailure> {
        if self.spec.process(name).is_some() {
            return self.compiled(name);
        }
        if self.spec.contract_decl(name).is_some() {
            let ctr = self.contract(name)?;
            let lts = compile(&self.spec, &ctr.behaviour, self.flags.compile_budget())
                .map_err(|e| EvalFailure(e.to_string()))?;
            return Ok(Arc::new(lts));
        }
        Err(EvalFailure(format!(
            "E_UNBOUND: unknown process or contract `{name}`"
        )))
    }

    fn glb_config(&self, a: &Assertion) -> GlbConfig {
        GlbConfig {
            gap: a.opts.gap.or(self.flags.gap),
            max_states: a
                .opts
                .max_states
                .or(self.flags.max_states)
                .unwrap_or(GLB_BUDGET),
            force_oracle: a.opts.oracle || self.flags.oracle,
            inputs: None,
            all_events: None,
        }
    }

    fn eval_assertion(&mut self, id: usize, a: &Assertion) -> Record {
        let text = pretty::print_assertion(a)
            .trim_start_matches("assert ")
            .to_string();
        let start = std::time::Instant::now();
        let result = self.eval_kind(a);
        let micros = start.elapsed().as_micros();
        match result {
            Ok(outcome) => {
                let mut rec = outcome.into_record(id, &self.spec);
                rec.text = text;
                if rec.micros == 0 {
                    rec.micros = micros;
                }
                rec
            }
            Err(e) => Record {
                id,
                kind: kind_name(&a.kind),
                text,
                status: "ERROR",
                method: None,
                witness: None,
                detail: Some(e.0),
                notes: Vec::new(),
                states_explored: 0,
                micros,
            },
        }
    }

    fn eval_kind(&mut self, a: &Assertion) -> Result<Outcome, EvalFailure> {
        let kind = kind_name(&a.kind);
        match &a.kind {
            AssertionKind::FailuresRefine(l, r) => {
                let impl_n = self.operand_norm(r, a.opts.gap, Some(l))?;
                let v = match l {
                    ProcOperand::GlbCvg(_) | ProcOperand::GlbEcvg(_) => {
                        let glb = self.operand_glb(l, a.opts.gap, Some(r))?;
                        crate::analysis::check_failures_refinement_lazy(&glb, &impl_n)
                    }
                    _ => {
                        let spec_n = self.operand_norm(l, a.opts.gap, Some(r))?;
                        check_failures_refinement(&spec_n, &impl_n)
                    }
                }
                .map_err(|e| EvalFailure(e.to_string()))?;
                let marks = self.witness_marks(l, &v);
                Ok(Outcome::verdict(kind, v, marks))
            }
            AssertionKind::Equivalent(l, r) => {
                let ln = self.operand_norm(l, a.opts.gap, Some(r))?;
                let rn = self.operand_norm(r, a.opts.gap, Some(l))?;
                let v = check_failures_equivalence(&ln, &rn)
                    .map_err(|e| EvalFailure(e.to_string()))?;
                Ok(Outcome::verdict(kind, v, Vec::new()))
            }
            AssertionKind::DeadlockFree(n) => {
                let norm = self.behaviour_norm(n)?;
                let mut out = Outcome::verdict(kind, check_deadlock_free(&norm), Vec::new());
                if let Ok(c) = self.contract(n) {
                    out.notes = c.notes.clone();
                }
                Ok(out)
            }
            AssertionKind::DivergenceFree(n) => {
                let lts = self.behaviour_lts(n)?;
                match check_divergence_free(&lts) {
                    DivergenceVerdict::Pass => Ok(Outcome::pass(kind)),
                    DivergenceVerdict::Fail { trace } => Ok(Outcome {
                        kind,
                        status: Status::Fail,
                        witness: Some((trace, None, false)),
                        marks: Vec::new(),
                        method: None,
                        detail: Some("an internal-action cycle is reachable".into()),
                        notes: Vec::new(),
                        states: lts.state_count(),
                        micros: 0,
                    }),
                }
            }
            AssertionKind::IoProcess(n) => {
                let lts = self.compiled(n)?;
                let norm = self.normalized(n)?;
                let report = check_io_process(&lts, &norm);
                if report.passed() {
                    Ok(Outcome::pass(kind))
                } else {
                    let c = report.first_failure().unwrap();
                    let witness = c.witness.clone().map(|(t, evs)| {
                        let refusal = (!evs.is_empty()).then_some(evs);
                        (t, refusal, false)
                    });
                    Ok(Outcome {
                        kind,
                        status: Status::Fail,
                        witness,
                        marks: Vec::new(),
                        method: None,
                        detail: Some(format!("condition `{}` fails", c.name)),
                        notes: Vec::new(),
                        states: norm.state_count(),
                        micros: 0,
                    })
                }
            }
            AssertionKind::Cvg(t, tp) | AssertionKind::Ecvg(t, tp) => {
                let tn = self.normalized(t)?;
                let tpn = self.normalized(tp)?;
                let cfg = self.glb_config(a);
                let cv = match &a.kind {
                    AssertionKind::Cvg(..) => check_cvg(&tn, &tpn, &cfg),
                    _ => check_ecvg(&tn, &tpn, &cfg),
                }
                .map_err(|e| EvalFailure(e.to_string()))?;
                let marks = match &cv.verdict.counterexample {
                    Some(cx) => mark_new_in_context(&tn, cx.trace()),
                    None => Vec::new(),
                };
                let mut out = Outcome::verdict(kind, cv.verdict.clone(), marks);
                out.method = Some(method_name(cv.method));
                if cv.gap_limited {
                    out.notes.push(
                        "E_GAP_TOO_SMALL: the witness deviates more than the gap allows; \
                         the failure may be an artefact of the bound"
                            .into(),
                    );
                }
                if let Some(g) = cv.gap_used {
                    out.notes.push(format!("gap = {g}"));
                }
                Ok(out)
            }
            AssertionKind::BricRefine(t, tp) => {
                let (tc, tpc) = (self.contract(t)?, self.contract(tp)?);
                let (td, tpd) = (self.denotation(t)?, self.denotation(tp)?);
                let v = crate::contract::check_bric_refinement(&tc, &tpc, &td, &tpd)
                    .map_err(|e| EvalFailure(e.to_string()))?;
                Ok(Outcome::verdict(kind, v, Vec::new()))
            }
            AssertionKind::InheritCvg(t, tp) | AssertionKind::InheritEcvg(t, tp) => {
                let rel = match &a.kind {
                    AssertionKind::InheritCvg(..) => Relation::Cvg,
                    _ => Relation::Ecvg,
                };
                let (tc, tpc) = (self.contract(t)?, self.contract(tp)?);
                let (td, tpd) = (self.denotation(t)?, self.denotation(tp)?);
                let cfg = self.glb_config(a);
                let rep =
                    crate::contract::check_inheritance(&self.spec, &tc, &tpc, &td, &tpd, rel, &cfg)
                        .map_err(|e| EvalFailure(e.to_string()))?;
                let marks = match &rep.verdict.counterexample {
                    Some(cx) => mark_new_in_context(&td.overall, cx.trace()),
                    None => Vec::new(),
                };
                let mut out = Outcome::verdict(kind, rep.verdict.clone(), marks);
                if let Some(cv) = &rep.convergence {
                    out.method = Some(method_name(cv.method));
                    if cv.gap_limited {
                        out.notes.push("E_GAP_TOO_SMALL: witness exceeds the gap".into());
                    }
                }
                for (c, cong) in &rep.channel_congruence {
                    out.notes.push(format!(
                        "channel {}: {} congruence",
                        self.spec.table.channels[*c].name,
                        match cong {
                            crate::contract::Congruence::Default => "default",
                            crate::contract::Congruence::Input => "input",
                        }
                    ));
                }
                Ok(out)
            }
            AssertionKind::Decoupled(p, c, z) => {
                let lts = self.behaviour_lts(p)?;
                let ci = self
                    .spec
                    .table
                    .channel_id(c)
                    .ok_or_else(|| EvalFailure(format!("E_UNBOUND: unknown channel `{c}`")))?;
                let zi = self
                    .spec
                    .table
                    .channel_id(z)
                    .ok_or_else(|| EvalFailure(format!("E_UNBOUND: unknown channel `{z}`")))?;
                let v = crate::contract::check_decoupled(&self.spec, &lts, ci, zi)
                    .map_err(|e| EvalFailure(e.to_string()))?;
                Ok(Outcome::verdict(kind, v, Vec::new()))
            }
        }
    }

    fn witness_marks(&mut self, lhs: &ProcOperand, v: &Verdict) -> Vec<usize> {
        // Only greatest-lower-bound specifications have a meaningful
        // new-in-context notion.
        let (ProcOperand::GlbCvg(name) | ProcOperand::GlbEcvg(name)) = lhs else {
            return Vec::new();
        };
        let Some(cx) = &v.counterexample else {
            return Vec::new();
        };
        match self.normalized(name) {
            Ok(n) => mark_new_in_context(&n, cx.trace()),
            Err(_) => Vec::new(),
        }
    }
}

/// Positions of a trace whose events the process cannot communicate after
/// any convergent matching of the prefix.
pub fn mark_new_in_context(t: &NormLts, trace: &[EventId]) -> Vec<usize> {
    let mut marks = Vec::new();
    let mut frontier: Vec<u32> = vec![t.root];
    for (i, &e) in trace.iter().enumerate() {
        let mut next: Vec<u32> = Vec::new();
        let mut any_match = false;
        for &s in &frontier {
            if let Some(sn) = t.succ_event(s, e) {
                any_match = true;
                next.push(sn);
            } else {
                next.push(s);
            }
        }
        if !any_match {
            marks.push(i);
        }
        next.sort_unstable();
        next.dedup();
        frontier = next;
    }
    marks
}

struct Outcome {
    kind: &'static str,
    status: Status,
    witness: Option<(Vec<EventId>, Option<Vec<EventId>>, bool)>,
    marks: Vec<usize>,
    method: Option<&'static str>,
    detail: Option<String>,
    notes: Vec<String>,
    states: usize,
    micros: u128,
}

impl Outcome {
    fn pass(kind: &'static str) -> Outcome {
        Outcome {
            kind,
            status: Status::Pass,
            witness: None,
            marks: Vec::new(),
            method: None,
            detail: None,
            notes: Vec::new(),
            states: 0,
            micros: 0,
        }
    }

    fn verdict(kind: &'static str, v: Verdict, marks: Vec<usize>) -> Outcome {
        let witness = v.counterexample.as_ref().map(|cx| match cx {
            CounterExample::Trace { trace, tick } => (trace.clone(), None, *tick),
            CounterExample::Refusal { trace, refusal } => {
                (trace.clone(), Some(refusal.iter().collect()), false)
            }
        });
        Outcome {
            kind,
            status: v.status,
            witness,
            marks,
            method: None,
            detail: v.detail,
            notes: Vec::new(),
            states: v.stats.states_explored,
            micros: v.stats.micros,
        }
    }

    fn into_record(self, id: usize, spec: &Spec) -> Record {
        let table = &spec.table;
        let name_of = |e: EventId| {
            if e == table.tick_bit() {
                "tick".to_string()
            } else {
                table.event_name(e).to_string()
            }
        };
        let witness = self.witness.map(|(trace, refusal, tick)| Witness {
            trace: trace.iter().map(|&e| name_of(e)).collect(),
            new_in_context: self.marks.clone(),
            refusal: refusal.map(|r| r.iter().map(|&e| name_of(e)).collect()),
            tick,
        });
        Record {
            id,
            kind: self.kind,
            text: String::new(),
            status: match self.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
            },
            method: self.method,
            witness,
            detail: self.detail,
            notes: self.notes,
            states_explored: self.states,
            micros: self.micros,
        }
    }
}

fn kind_name(k: &AssertionKind) -> &'static str {
    match k {
        AssertionKind::FailuresRefine(..) => "refine",
        AssertionKind::Equivalent(..) => "equivalent",
        AssertionKind::DeadlockFree(..) => "deadlock-free",
        AssertionKind::DivergenceFree(..) => "divergence-free",
        AssertionKind::IoProcess(..) => "io-process",
        AssertionKind::Cvg(..) => "cvg",
        AssertionKind::Ecvg(..) => "ecvg",
        AssertionKind::BricRefine(..) => "bric-refine",
        AssertionKind::InheritCvg(..) => "inherit-cvg",
        AssertionKind::InheritEcvg(..) => "inherit-ecvg",
        AssertionKind::Decoupled(..) => "decoupled",
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::GlbRefinement => "glb-refinement",
        Method::BruteForce => "brute-force",
    }
}

/// Load the given scripts, run every assertion, and return the report with
/// its exit code. Exit code 0 means every assertion passed, 1 that at
/// least one failed, 2 that the tool could not evaluate the script.
pub fn run(paths: &[PathBuf], flags: RunFlags) -> (Option<Report>, i32) {
    match load_specs(paths) {
        Err(diags) => {
            for d in &diags {
                eprintln!("{d}");
            }
            (None, 2)
        }
        Ok(spec) => {
            let mut ev = Evaluator::new(spec, flags);
            let report = ev.run();
            let code = report.exit_code();
            (Some(report), code)
        }
    }
}

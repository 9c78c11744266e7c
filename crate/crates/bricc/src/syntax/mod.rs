//! Declarations, abstract syntax, parser and well-formedness checks for the
//! machine-readable process notation (`.iop` files).

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod types;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::util::BitSet;
pub use ast::*;
pub use lexer::Pos;
use parser::{Item, TypeBody, TypeFlavor};
pub use types::{ChanId, ChannelDecl, Dir, EventId, EventTable, TypeDecl, TypeId, TypeKind, Value, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrCode {
    Syntax,
    Unbound,
    Type,
    EmptyRepl,
}

impl ErrCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrCode::Syntax => "E_SYNTAX",
            ErrCode::Unbound => "E_UNBOUND",
            ErrCode::Type => "E_TYPE",
            ErrCode::EmptyRepl => "E_EMPTY_REPL",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub pos: Option<Pos>,
    pub code: ErrCode,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pos {
            Some(p) => write!(f, "{}: {} at {p}", self.code.as_str(), self.message),
            None => write!(f, "{}: {}", self.code.as_str(), self.message),
        }
    }
}

/// A fully resolved specification: declarations in source order plus the
/// canonical event table derived from them.
pub struct Spec {
    pub types: Vec<ResolvedType>,
    pub table: Arc<EventTable>,
    pub processes: Vec<ProcessDef>,
    pub contracts: Vec<ContractDecl>,
    pub assertions: Vec<Assertion>,
    proc_index: HashMap<String, usize>,
    contract_index: HashMap<String, usize>,
    type_index: HashMap<String, TypeId>,
    /// Every enum label / variant tag in scope, for identifier resolution.
    tags: HashSet<String>,
    synth_counter: u32,
}

#[derive(Debug, Clone)]
pub struct ResolvedType {
    pub decl: TypeDecl,
    pub flavor: TypeFlavor,
    pub values: Vec<Value>,
}

impl Spec {
    pub fn process(&self, name: &str) -> Option<&ProcessDef> {
        self.proc_index.get(name).map(|&i| &self.processes[i])
    }

    pub fn contract_decl(&self, name: &str) -> Option<&ContractDecl> {
        self.contract_index.get(name).map(|&i| &self.contracts[i])
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.type_index.get(name).copied()
    }

    pub fn type_values(&self, id: TypeId) -> &[Value] {
        &self.types[id].values
    }

    pub fn is_tag(&self, name: &str) -> bool {
        self.tags.contains(name)
    }

    /// Register a generated process definition under a fresh name.
    pub fn add_synthetic_process(&mut self, hint: &str, params: Vec<String>, body: ProcessExpr) -> String {
        loop {
            let name = format!("{hint}'{}", self.synth_counter);
            self.synth_counter += 1;
            if !self.proc_index.contains_key(&name) {
                self.proc_index.insert(name.clone(), self.processes.len());
                self.processes.push(ProcessDef {
                    name: name.clone(),
                    params,
                    body,
                });
                return name;
            }
        }
    }

    /// Events of channel `chan` restricted to interface type `iface`.
    ///
    /// The interface type is interpreted exactly like a channel type; its
    /// value set must be a subset of the channel's event space.
    pub fn interface_events(&self, chan: &str, iface: &str) -> Result<BitSet, Diagnostic> {
        let ci = self.table.channel_id(chan).ok_or_else(|| Diagnostic {
            pos: None,
            code: ErrCode::Unbound,
            message: format!("unknown channel `{chan}`"),
        })?;
        let ty = self.type_id(iface).ok_or_else(|| Diagnostic {
            pos: None,
            code: ErrCode::Unbound,
            message: format!("unknown interface type `{iface}`"),
        })?;
        let mut set = BitSet::empty(self.table.refusal_len());
        let (io, payload_values) = match io_shape(self, ty) {
            Some(pt) => (true, self.type_values(pt).to_vec()),
            None => (false, self.type_values(ty).to_vec()),
        };
        let decl = &self.table.channels[ci];
        if io != decl.io_discipline {
            return Err(Diagnostic {
                pos: None,
                code: ErrCode::Type,
                message: format!(
                    "interface `{iface}` does not match the I/O discipline of channel `{chan}`"
                ),
            });
        }
        for v in &payload_values {
            let dirs: &[Dir] = if io { &[Dir::In, Dir::Out] } else { &[Dir::Plain] };
            for dir in dirs {
                match self.table.lookup(ci, *dir, v) {
                    Some(e) => set.insert(e),
                    None => {
                        return Err(Diagnostic {
                            pos: None,
                            code: ErrCode::Type,
                            message: format!(
                                "interface `{iface}` value `{v}` is outside the payload of channel `{chan}`"
                            ),
                        })
                    }
                }
            }
        }
        Ok(set)
    }
}

impl fmt::Debug for Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Spec({} types, {} channels, {} processes, {} contracts, {} assertions)",
            self.types.len(),
            self.table.channels.len(),
            self.processes.len(),
            self.contracts.len(),
            self.assertions.len()
        )
    }
}

/// Parse and resolve a complete specification from one text.
///
/// Parsing is total: all problems are reported together as diagnostics with
/// positions where available. `include` directives are not resolved here;
/// use [`crate::script::load_spec`] for file-based loading.
pub fn parse_spec(text: &str) -> Result<Spec, Vec<Diagnostic>> {
    let parsed = parser::parse_items(text);
    let mut diags = parsed.diagnostics;
    for item in &parsed.items {
        if let Item::Include(path) = item {
            diags.push(Diagnostic {
                pos: None,
                code: ErrCode::Syntax,
                message: format!("include \"{path}\" requires file-based loading"),
            });
        }
    }
    resolve_items(parsed.items, diags)
}

/// Resolve already-parsed items (used by the file loader after includes
/// have been spliced in).
pub fn resolve_items(items: Vec<Item>, mut diags: Vec<Diagnostic>) -> Result<Spec, Vec<Diagnostic>> {
    let mut types: Vec<ResolvedType> = vec![ResolvedType {
        decl: TypeDecl {
            name: "Bool".into(),
            kind: TypeKind::Bool,
        },
        flavor: TypeFlavor::Datatype,
        values: vec![Value::Bool(false), Value::Bool(true)],
    }];
    let mut type_index: HashMap<String, TypeId> = HashMap::new();
    type_index.insert("Bool".into(), 0);

    // Pass 1: register type names (allowing forward references), then
    // resolve bodies in order.
    let mut raw_types: Vec<(String, TypeFlavor, TypeBody)> = Vec::new();
    for item in &items {
        if let Item::Type { flavor, name, body } = item {
            if type_index.contains_key(name) {
                diags.push(err(ErrCode::Syntax, format!("duplicate type `{name}`")));
                continue;
            }
            type_index.insert(name.clone(), types.len() + raw_types.len());
            raw_types.push((name.clone(), *flavor, body.clone()));
        }
    }
    let first_user_type = types.len();
    for (name, flavor, body) in &raw_types {
        let kind = match body {
            TypeBody::Range(lo, hi) => {
                if lo > hi {
                    diags.push(err(
                        ErrCode::Type,
                        format!("type `{name}`: empty range {lo}..{hi}"),
                    ));
                }
                TypeKind::IntRange(*lo, *hi)
            }
            TypeBody::Variants(vs) => {
                if vs.iter().all(|(_, comps)| comps.is_empty()) {
                    TypeKind::Enum(vs.iter().map(|(t, _)| t.clone()).collect())
                } else {
                    let mut variants = Vec::new();
                    for (tag, comps) in vs {
                        let mut ids = Vec::new();
                        for c in comps {
                            match type_index.get(c) {
                                Some(&id) => ids.push(id),
                                None => {
                                    diags.push(err(
                                        ErrCode::Unbound,
                                        format!("type `{name}`: unknown component type `{c}`"),
                                    ));
                                }
                            }
                        }
                        variants.push(Variant {
                            tag: tag.clone(),
                            components: ids,
                        });
                    }
                    TypeKind::Union(variants)
                }
            }
        };
        types.push(ResolvedType {
            decl: TypeDecl {
                name: name.clone(),
                kind,
            },
            flavor: *flavor,
            values: Vec::new(),
        });
    }
    if !diags.is_empty() {
        return Err(diags);
    }

    // Enumerate all value sets, rejecting non-finite (recursive) types.
    for id in first_user_type..types.len() {
        match enumerate_type(&types, id, &mut Vec::new()) {
            Ok(values) => {
                if values.is_empty() {
                    diags.push(err(
                        ErrCode::Type,
                        format!("type `{}` denotes an empty value set", types[id].decl.name),
                    ));
                }
                types[id].values = values;
            }
            Err(msg) => diags.push(err(ErrCode::Type, msg)),
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }

    // Channels.
    let mut channels: Vec<ChannelDecl> = Vec::new();
    let mut payload_values: Vec<Vec<Value>> = Vec::new();
    let mut seen_chans: HashSet<String> = HashSet::new();
    for item in &items {
        if let Item::Channel { names, type_name } = item {
            for n in names {
                if !seen_chans.insert(n.clone()) {
                    diags.push(err(ErrCode::Syntax, format!("duplicate channel `{n}`")));
                    continue;
                }
                let (decl, values) = match type_name {
                    None => (
                        ChannelDecl {
                            name: n.clone(),
                            type_name: None,
                            payload: None,
                            io_discipline: false,
                        },
                        vec![Value::Unit],
                    ),
                    Some(tn) => match type_index.get(tn) {
                        None => {
                            diags.push(err(
                                ErrCode::Unbound,
                                format!("channel `{n}`: unknown type `{tn}`"),
                            ));
                            continue;
                        }
                        Some(&ty) => {
                            let tmp = SpecTypes { types: &types };
                            match tmp.io_shape(ty) {
                                Some(payload) => (
                                    ChannelDecl {
                                        name: n.clone(),
                                        type_name: Some(tn.clone()),
                                        payload: Some(payload),
                                        io_discipline: true,
                                    },
                                    types[payload].values.clone(),
                                ),
                                None => (
                                    ChannelDecl {
                                        name: n.clone(),
                                        type_name: Some(tn.clone()),
                                        payload: Some(ty),
                                        io_discipline: false,
                                    },
                                    types[ty].values.clone(),
                                ),
                            }
                        }
                    },
                };
                channels.push(decl);
                payload_values.push(values);
            }
        }
    }

    let table = EventTable::build(channels, &payload_values);

    // Processes, contracts, assertions.
    let mut processes: Vec<ProcessDef> = Vec::new();
    let mut proc_index: HashMap<String, usize> = HashMap::new();
    let mut contracts: Vec<ContractDecl> = Vec::new();
    let mut contract_index: HashMap<String, usize> = HashMap::new();
    let mut assertions: Vec<Assertion> = Vec::new();
    for item in items {
        match item {
            Item::Process(def) => {
                if proc_index.contains_key(&def.name) {
                    diags.push(err(
                        ErrCode::Syntax,
                        format!("duplicate process `{}`", def.name),
                    ));
                } else {
                    proc_index.insert(def.name.clone(), processes.len());
                    processes.push(def);
                }
            }
            Item::Contract(c) => {
                if contract_index.contains_key(c.name()) {
                    diags.push(err(
                        ErrCode::Syntax,
                        format!("duplicate contract `{}`", c.name()),
                    ));
                } else {
                    contract_index.insert(c.name().to_string(), contracts.len());
                    contracts.push(c);
                }
            }
            Item::Assert(a) => assertions.push(a),
            _ => {}
        }
    }

    let tags: HashSet<String> = types
        .iter()
        .flat_map(|t| match &t.decl.kind {
            TypeKind::Enum(labels) => labels.clone(),
            TypeKind::Union(vs) => vs.iter().map(|v| v.tag.clone()).collect(),
            _ => Vec::new(),
        })
        .collect();

    let spec = Spec {
        types,
        table,
        processes,
        contracts,
        assertions,
        proc_index,
        contract_index,
        type_index,
        tags,
        synth_counter: 0,
    };

    check_wellformed(&spec, &mut diags);
    if diags.is_empty() {
        Ok(spec)
    } else {
        Err(diags)
    }
}

fn err(code: ErrCode, message: String) -> Diagnostic {
    Diagnostic {
        pos: None,
        code,
        message,
    }
}

struct SpecTypes<'a> {
    types: &'a [ResolvedType],
}

impl SpecTypes<'_> {
    fn io_shape(&self, ty: TypeId) -> Option<TypeId> {
        io_shape_kind(&self.types[ty].decl.kind)
    }
}

/// Recognize `in.X | out.X` unions: such a type gives the channel its I/O
/// discipline with payload `X`.
fn io_shape(spec: &Spec, ty: TypeId) -> Option<TypeId> {
    io_shape_kind(&spec.types[ty].decl.kind)
}

fn io_shape_kind(kind: &TypeKind) -> Option<TypeId> {
    if let TypeKind::Union(vs) = kind {
        if vs.len() == 2 {
            let find = |tag: &str| {
                vs.iter()
                    .find(|v| v.tag == tag && v.components.len() == 1)
                    .map(|v| v.components[0])
            };
            if let (Some(i), Some(o)) = (find("in"), find("out")) {
                if i == o {
                    return Some(i);
                }
            }
        }
    }
    None
}

fn enumerate_type(
    types: &[ResolvedType],
    id: TypeId,
    visiting: &mut Vec<TypeId>,
) -> Result<Vec<Value>, String> {
    if visiting.contains(&id) {
        return Err(format!(
            "type `{}` is recursive and does not denote a finite set",
            types[id].decl.name
        ));
    }
    if !types[id].values.is_empty() {
        return Ok(types[id].values.clone());
    }
    visiting.push(id);
    let out = match &types[id].decl.kind {
        TypeKind::Bool => vec![Value::Bool(false), Value::Bool(true)],
        TypeKind::IntRange(lo, hi) => (*lo..=*hi).map(Value::Int).collect(),
        TypeKind::Enum(labels) => labels.iter().map(|l| Value::Tag(l.clone())).collect(),
        TypeKind::Union(vs) => {
            let mut out = Vec::new();
            for v in vs {
                if v.components.is_empty() {
                    out.push(Value::Tag(v.tag.clone()));
                    continue;
                }
                let mut combos: Vec<Vec<Value>> = vec![Vec::new()];
                for &c in &v.components {
                    let cvals = enumerate_type(types, c, visiting)?;
                    let mut next = Vec::with_capacity(combos.len() * cvals.len());
                    for prefix in &combos {
                        for cv in &cvals {
                            let mut p = prefix.clone();
                            p.push(cv.clone());
                            next.push(p);
                        }
                    }
                    combos = next;
                }
                for c in combos {
                    out.push(Value::Tagged(v.tag.clone(), c));
                }
            }
            out
        }
    };
    visiting.pop();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Well-formedness
// ---------------------------------------------------------------------------

fn check_wellformed(spec: &Spec, diags: &mut Vec<Diagnostic>) {
    for def in &spec.processes {
        let mut env: Vec<String> = def.params.clone();
        check_expr_names(spec, &def.name, &def.body, &mut env, diags);
    }
    for c in &spec.contracts {
        match c {
            ContractDecl::Literal {
                name,
                behaviour,
                entries,
            } => {
                match spec.process(behaviour) {
                    None => diags.push(err(
                        ErrCode::Unbound,
                        format!("contract `{name}`: unknown behaviour `{behaviour}`"),
                    )),
                    Some(def) if !def.params.is_empty() => diags.push(err(
                        ErrCode::Type,
                        format!("contract `{name}`: behaviour `{behaviour}` takes parameters"),
                    )),
                    _ => {}
                }
                for (ch, iface) in entries {
                    if let Err(d) = spec.interface_events(ch, iface) {
                        diags.push(Diagnostic {
                            message: format!("contract `{name}`: {}", d.message),
                            ..d
                        });
                    }
                }
            }
            ContractDecl::Composed { name, op, .. } => {
                let mut check_ctr = |n: &str| {
                    if !spec.contract_index.contains_key(n) {
                        diags.push(err(
                            ErrCode::Unbound,
                            format!("contract `{name}`: unknown contract `{n}`"),
                        ));
                    }
                };
                match op {
                    CompositionOp::Interleave { left, right } => {
                        check_ctr(left);
                        check_ctr(right);
                    }
                    CompositionOp::Communication { left, right, .. } => {
                        check_ctr(left);
                        check_ctr(right);
                    }
                    CompositionOp::Feedback { base, .. } | CompositionOp::Reflexive { base, .. } => {
                        check_ctr(base)
                    }
                }
            }
        }
    }
    for a in &spec.assertions {
        check_assertion_names(spec, a, diags);
    }
}

fn check_channel(spec: &Spec, ctx: &str, name: &str, diags: &mut Vec<Diagnostic>) {
    if spec.table.channel_id(name).is_none() {
        diags.push(err(
            ErrCode::Unbound,
            format!("{ctx}: unknown channel `{name}`"),
        ));
    }
}

fn check_expr_names(
    spec: &Spec,
    ctx: &str,
    e: &ProcessExpr,
    env: &mut Vec<String>,
    diags: &mut Vec<Diagnostic>,
) {
    match e {
        ProcessExpr::Stop | ProcessExpr::Skip => {}
        ProcessExpr::Prefix(pat, k) => {
            let depth = env.len();
            check_pattern(spec, ctx, pat, env, diags);
            check_expr_names(spec, ctx, k, env, diags);
            env.truncate(depth);
        }
        ProcessExpr::ExtChoice(l, r)
        | ProcessExpr::IntChoice(l, r)
        | ProcessExpr::Seq(l, r)
        | ProcessExpr::Interleave(l, r) => {
            check_expr_names(spec, ctx, l, env, diags);
            check_expr_names(spec, ctx, r, env, diags);
        }
        ProcessExpr::ParSync(l, set, r) => {
            for ch in &set.channels {
                check_channel(spec, ctx, ch, diags);
            }
            check_expr_names(spec, ctx, l, env, diags);
            check_expr_names(spec, ctx, r, env, diags);
        }
        ProcessExpr::Guard(g, body) => {
            check_value_expr(spec, ctx, g, env, diags);
            check_expr_names(spec, ctx, body, env, diags);
        }
        ProcessExpr::IfThenElse(c, t, f) => {
            check_value_expr(spec, ctx, c, env, diags);
            check_expr_names(spec, ctx, t, env, diags);
            check_expr_names(spec, ctx, f, env, diags);
        }
        ProcessExpr::Hide(body, set) => {
            for ch in &set.channels {
                check_channel(spec, ctx, ch, diags);
            }
            check_expr_names(spec, ctx, body, env, diags);
        }
        ProcessExpr::Rename(body, pairs) => {
            for (a, b) in pairs {
                check_channel(spec, ctx, &a.channel, diags);
                check_channel(spec, ctx, &b.channel, diags);
                for p in a.parts.iter().chain(b.parts.iter()) {
                    match p {
                        PatPart::Bind(x) => diags.push(err(
                            ErrCode::Syntax,
                            format!("{ctx}: renaming patterns must be ground (found `?{x}`)"),
                        )),
                        PatPart::Expr(e) => check_value_expr(spec, ctx, e, env, diags),
                    }
                }
            }
            check_expr_names(spec, ctx, body, env, diags);
        }
        ProcessExpr::ReplExtChoice(x, set, body) | ProcessExpr::ReplIntChoice(x, set, body) => {
            match set_size(spec, set, env) {
                Ok(0) => diags.push(err(
                    ErrCode::EmptyRepl,
                    format!("{ctx}: replicated choice over an empty set"),
                )),
                Ok(_) => {}
                Err(msg) => diags.push(err(ErrCode::Unbound, format!("{ctx}: {msg}"))),
            }
            env.push(x.clone());
            check_expr_names(spec, ctx, body, env, diags);
            env.pop();
        }
        ProcessExpr::Ref(name, args) => {
            for a in args {
                check_value_expr(spec, ctx, a, env, diags);
            }
            match spec.process(name) {
                None => diags.push(err(
                    ErrCode::Unbound,
                    format!("{ctx}: unknown process `{name}`"),
                )),
                Some(def) if def.params.len() != args.len() => diags.push(err(
                    ErrCode::Type,
                    format!(
                        "{ctx}: `{name}` takes {} argument(s), {} given",
                        def.params.len(),
                        args.len()
                    ),
                )),
                _ => {}
            }
        }
    }
}

fn check_pattern(
    spec: &Spec,
    ctx: &str,
    pat: &EventPattern,
    env: &mut Vec<String>,
    diags: &mut Vec<Diagnostic>,
) {
    let Some(ci) = spec.table.channel_id(&pat.channel) else {
        diags.push(err(
            ErrCode::Unbound,
            format!("{ctx}: unknown channel `{}`", pat.channel),
        ));
        return;
    };
    let decl = &spec.table.channels[ci];
    let mut parts = pat.parts.as_slice();
    if decl.io_discipline {
        match parts.first() {
            Some(PatPart::Expr(Expr::Ident(d))) if d == "in" || d == "out" => {
                parts = &parts[1..];
            }
            _ => {
                diags.push(err(
                    ErrCode::Type,
                    format!(
                        "{ctx}: channel `{}` requires an `in`/`out` direction component",
                        pat.channel
                    ),
                ));
                return;
            }
        }
    }
    for p in parts {
        match p {
            PatPart::Bind(x) => env.push(x.clone()),
            PatPart::Expr(e) => check_value_expr(spec, ctx, e, env, diags),
        }
    }
}

fn check_value_expr(
    spec: &Spec,
    ctx: &str,
    e: &Expr,
    env: &[String],
    diags: &mut Vec<Diagnostic>,
) {
    match e {
        Expr::Int(_) | Expr::Bool(_) => {}
        Expr::Ident(x) => {
            if !env.contains(x) && !spec.is_tag(x) {
                diags.push(err(
                    ErrCode::Unbound,
                    format!("{ctx}: unbound variable `{x}`"),
                ));
            }
        }
        Expr::Unary(_, a) => check_value_expr(spec, ctx, a, env, diags),
        Expr::Binary(_, a, b) => {
            check_value_expr(spec, ctx, a, env, diags);
            check_value_expr(spec, ctx, b, env, diags);
        }
    }
}

fn check_assertion_names(spec: &Spec, a: &Assertion, diags: &mut Vec<Diagnostic>) {
    fn proc_op(spec: &Spec, diags: &mut Vec<Diagnostic>, op: &ProcOperand) {
        match op {
        ProcOperand::Named { name, hide } => {
            if spec.process(name).is_none() {
                diags.push(err(
                    ErrCode::Unbound,
                    format!("assertion: unknown process `{name}`"),
                ));
            }
            if let Some(set) = hide {
                for ch in &set.channels {
                    if spec.table.channel_id(ch).is_none() {
                        diags.push(err(
                            ErrCode::Unbound,
                            format!("assertion: unknown channel `{ch}`"),
                        ));
                    }
                }
            }
        }
            ProcOperand::GlbCvg(name) | ProcOperand::GlbEcvg(name) => {
                if spec.process(name).is_none() {
                    diags.push(err(
                        ErrCode::Unbound,
                        format!("assertion: unknown process `{name}`"),
                    ));
                }
            }
        }
    }
    fn proc_name(spec: &Spec, diags: &mut Vec<Diagnostic>, name: &str) {
        if spec.process(name).is_none() {
            diags.push(err(
                ErrCode::Unbound,
                format!("assertion: unknown process `{name}`"),
            ));
        }
    }
    fn ctr_name(spec: &Spec, diags: &mut Vec<Diagnostic>, name: &str) {
        if !spec.contract_index.contains_key(name) {
            diags.push(err(
                ErrCode::Unbound,
                format!("assertion: unknown contract `{name}`"),
            ));
        }
    }
    match &a.kind {
        AssertionKind::FailuresRefine(l, r) | AssertionKind::Equivalent(l, r) => {
            proc_op(spec, diags, l);
            proc_op(spec, diags, r);
        }
        AssertionKind::DeadlockFree(n) | AssertionKind::DivergenceFree(n) => {
            if spec.process(n).is_none() && !spec.contract_index.contains_key(n) {
                diags.push(err(
                    ErrCode::Unbound,
                    format!("assertion: unknown process or contract `{n}`"),
                ));
            }
        }
        AssertionKind::IoProcess(n) => proc_name(spec, diags, n),
        AssertionKind::Cvg(a, b) | AssertionKind::Ecvg(a, b) => {
            proc_name(spec, diags, a);
            proc_name(spec, diags, b);
        }
        AssertionKind::BricRefine(a, b)
        | AssertionKind::InheritCvg(a, b)
        | AssertionKind::InheritEcvg(a, b) => {
            ctr_name(spec, diags, a);
            ctr_name(spec, diags, b);
        }
        AssertionKind::Decoupled(p, c, z) => {
            proc_name(spec, diags, p);
            check_channel(spec, "assertion", c, diags);
            check_channel(spec, "assertion", z, diags);
        }
    }
}

// ---------------------------------------------------------------------------
// Expression evaluation (shared by compilation and set expansion)
// ---------------------------------------------------------------------------

pub type Env = Vec<(String, Value)>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("{0}")]
    Type(String),
}

pub fn eval_expr(spec: &Spec, e: &Expr, env: &Env) -> Result<Value, EvalError> {
    match e {
        Expr::Int(n) => Ok(Value::Int(*n)),
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Ident(x) => {
            if let Some((_, v)) = env.iter().rev().find(|(n, _)| n == x) {
                Ok(v.clone())
            } else if spec.is_tag(x) {
                Ok(Value::Tag(x.clone()))
            } else {
                Err(EvalError::Unbound(x.clone()))
            }
        }
        Expr::Unary(op, a) => {
            let v = eval_expr(spec, a, env)?;
            match (op, v) {
                (UnOp::Neg, Value::Int(n)) => Ok(Value::Int(-n)),
                (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                (op, v) => Err(EvalError::Type(format!("cannot apply {op:?} to `{v}`"))),
            }
        }
        Expr::Binary(op, a, b) => {
            let va = eval_expr(spec, a, env)?;
            let vb = eval_expr(spec, b, env)?;
            use BinOp::*;
            match op {
                Eq => Ok(Value::Bool(va == vb)),
                Ne => Ok(Value::Bool(va != vb)),
                And | Or => match (va, vb) {
                    (Value::Bool(x), Value::Bool(y)) => {
                        Ok(Value::Bool(if *op == And { x && y } else { x || y }))
                    }
                    (va, vb) => Err(EvalError::Type(format!(
                        "boolean operator applied to `{va}` and `{vb}`"
                    ))),
                },
                Add | Sub | Mul | Mod | Lt | Le | Gt | Ge => match (va, vb) {
                    (Value::Int(x), Value::Int(y)) => match op {
                        Add => Ok(Value::Int(x + y)),
                        Sub => Ok(Value::Int(x - y)),
                        Mul => Ok(Value::Int(x * y)),
                        Mod => {
                            if y == 0 {
                                Err(EvalError::Type("modulo by zero".into()))
                            } else {
                                Ok(Value::Int(x.rem_euclid(y)))
                            }
                        }
                        Lt => Ok(Value::Bool(x < y)),
                        Le => Ok(Value::Bool(x <= y)),
                        Gt => Ok(Value::Bool(x > y)),
                        Ge => Ok(Value::Bool(x >= y)),
                        _ => unreachable!(),
                    },
                    (va, vb) => Err(EvalError::Type(format!(
                        "arithmetic operator applied to `{va}` and `{vb}`"
                    ))),
                },
            }
        }
    }
}

/// Number of elements a replicated-choice set denotes, or an error for
/// unresolvable names. Sets are constant, so this is exact.
fn set_size(spec: &Spec, set: &SetExpr, _env: &[String]) -> Result<usize, String> {
    match set {
        SetExpr::Range(lo, hi) => Ok(if lo > hi { 0 } else { (hi - lo + 1) as usize }),
        SetExpr::List(items) => Ok(items.len()),
        SetExpr::TypeName(n) => match spec.type_id(n) {
            Some(id) => Ok(spec.type_values(id).len()),
            None => Err(format!("unknown type `{n}` in replicated choice")),
        },
    }
}

/// All values of a replicated-choice set, in canonical order.
pub fn set_values(spec: &Spec, set: &SetExpr, env: &Env) -> Result<Vec<Value>, EvalError> {
    match set {
        SetExpr::Range(lo, hi) => Ok((*lo..=*hi).map(Value::Int).collect()),
        SetExpr::List(items) => items.iter().map(|e| eval_expr(spec, e, env)).collect(),
        SetExpr::TypeName(n) => match spec.type_id(n) {
            Some(id) => Ok(spec.type_values(id).to_vec()),
            None => Err(EvalError::Unbound(n.clone())),
        },
    }
}

/// Flatten a payload value into the dotted components an event pattern
/// matches against: `administer.insulin.3` has three components.
pub fn flatten_value(v: &Value) -> Vec<Value> {
    match v {
        Value::Tagged(tag, comps) => {
            let mut out = vec![Value::Tag(tag.clone())];
            for c in comps {
                out.extend(flatten_value(c));
            }
            out
        }
        other => vec![other.clone()],
    }
}

// ---------------------------------------------------------------------------
// Syntactic alphabet
// ---------------------------------------------------------------------------

/// The set of visible events syntactically reachable from `expr`: every
/// event of every channel mentioned in a prefix or renaming, transitively
/// through process references. A superset of the semantically communicable
/// events.
pub fn alphabet(spec: &Spec, expr: &ProcessExpr) -> BitSet {
    let mut chans: HashSet<ChanId> = HashSet::new();
    let mut seen: HashSet<String> = HashSet::new();
    collect_channels(spec, expr, &mut chans, &mut seen);
    let mut set = BitSet::empty(spec.table.refusal_len());
    for ci in chans {
        for e in spec.table.events_of_channel(ci) {
            set.insert(e);
        }
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;

    const T_FAMILY: &str = r#"
-- request/response loop over a single channel
nametype VV = {1..4}
datatype CV = v.VV
subtype I_CV = in.CV | out.CV
channel c : I_CV

T = c.in.v.1 -> (c.out.v.1 -> T |~| c.out.v.2 -> T)
    []
    c.in.v.2 -> (c.out.v.3 -> T |~| c.out.v.4 -> T)
"#;

    #[test]
    fn parses_choice_nest() {
        let spec = parse_spec(T_FAMILY).expect("parse");
        assert_eq!(spec.table.declared_len(), 8);
        let t = spec.process("T").unwrap();
        match &t.body {
            ProcessExpr::ExtChoice(l, _) => match l.as_ref() {
                ProcessExpr::Prefix(pat, k) => {
                    assert_eq!(pat.channel, "c");
                    assert!(matches!(k.as_ref(), ProcessExpr::IntChoice(..)));
                }
                other => panic!("expected prefix, got {other:?}"),
            },
            other => panic!("expected external choice, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_empty_spec() {
        let spec = parse_spec("").expect("parse");
        assert!(spec.processes.is_empty());
        assert_eq!(spec.table.declared_len(), 0);
    }

    #[test]
    fn canonical_event_order_ins_before_outs() {
        let spec = parse_spec(T_FAMILY).unwrap();
        let names: Vec<_> = (0..spec.table.declared_len())
            .map(|e| spec.table.event_name(e).to_string())
            .collect();
        assert_eq!(
            names,
            vec![
                "c.in.v.1", "c.in.v.2", "c.in.v.3", "c.in.v.4", "c.out.v.1", "c.out.v.2",
                "c.out.v.3", "c.out.v.4"
            ]
        );
    }

    #[test]
    fn unresolved_reference_is_unbound() {
        let res = parse_spec("P = a -> Q\nchannel a");
        let diags = res.err().expect("diagnostics");
        assert!(diags.iter().any(|d| d.code == ErrCode::Unbound));
    }

    #[test]
    fn empty_replicated_choice_rejected() {
        let res = parse_spec("channel c\nP = |~| x : {1..0} @ c -> P");
        let diags = res.err().expect("diagnostics");
        assert!(diags.iter().any(|d| d.code == ErrCode::EmptyRepl));
    }

    #[test]
    fn guard_and_if_parse() {
        let src = r#"
nametype N = {0..3}
datatype D = v.N
subtype IOD = in.D | out.D
channel c : IOD
P(x) = x < 3 & c.in.v?y -> if y == 2 then P(x) else c.out.v.1 -> P(x + 1)
"#;
        let spec = parse_spec(src).expect("parse");
        let p = spec.process("P").unwrap();
        assert!(matches!(p.body, ProcessExpr::Guard(..)));
    }

    #[test]
    fn if_branches_stop_at_choice() {
        // The trailing choice binds the whole conditional, not the else arm.
        let src = r#"
channel a
channel b
P = if true then a -> P else b -> P [] b -> P
"#;
        let spec = parse_spec(src).expect("parse");
        let p = spec.process("P").unwrap();
        assert!(matches!(p.body, ProcessExpr::ExtChoice(..)));
    }

    #[test]
    fn roundtrip_through_printer() {
        let spec = parse_spec(T_FAMILY).unwrap();
        let printed = pretty::print_spec(&spec);
        let spec2 = parse_spec(&printed).expect("reparse");
        assert_eq!(pretty::print_spec(&spec2), printed);
        assert_eq!(spec.processes, spec2.processes);
        assert!(spec.table.same_alphabet(&spec2.table));
    }

    #[test]
    fn alphabet_enumerates_mentioned_channels() {
        let spec = parse_spec(T_FAMILY).unwrap();
        let t = spec.process("T").unwrap().body.clone();
        let a = alphabet(&spec, &t);
        assert_eq!(a.count(), 8);
        assert_eq!(alphabet(&spec, &ProcessExpr::Stop).count(), 0);
    }

    #[test]
    fn assertion_forms_parse() {
        let src = r#"
channel c
P = c -> P
Q = c -> Q
assert P [F= Q
assert P =F Q {max_states = 100}
assert deadlock free P
assert divergence free Q
assert io process P
assert cvg(P, Q) {gap = 2, oracle}
assert GLB_CVG(P) [F= Q
"#;
        let spec = parse_spec(src).expect("parse");
        assert_eq!(spec.assertions.len(), 7);
        assert!(matches!(
            spec.assertions[6].kind,
            AssertionKind::FailuresRefine(ProcOperand::GlbCvg(_), _)
        ));
        assert_eq!(spec.assertions[5].opts.gap, Some(2));
        assert!(spec.assertions[5].opts.oracle);
    }
}

fn collect_channels(
    spec: &Spec,
    e: &ProcessExpr,
    chans: &mut HashSet<ChanId>,
    seen: &mut HashSet<String>,
) {
    match e {
        ProcessExpr::Stop | ProcessExpr::Skip => {}
        ProcessExpr::Prefix(pat, k) => {
            if let Some(ci) = spec.table.channel_id(&pat.channel) {
                chans.insert(ci);
            }
            collect_channels(spec, k, chans, seen);
        }
        ProcessExpr::ExtChoice(l, r)
        | ProcessExpr::IntChoice(l, r)
        | ProcessExpr::Seq(l, r)
        | ProcessExpr::Interleave(l, r)
        | ProcessExpr::ParSync(l, _, r) => {
            collect_channels(spec, l, chans, seen);
            collect_channels(spec, r, chans, seen);
        }
        ProcessExpr::Guard(_, b)
        | ProcessExpr::Hide(b, _)
        | ProcessExpr::ReplExtChoice(_, _, b)
        | ProcessExpr::ReplIntChoice(_, _, b)
        | ProcessExpr::IfThenElse(_, b, _) => {
            collect_channels(spec, b, chans, seen);
            if let ProcessExpr::IfThenElse(_, _, f) = e {
                collect_channels(spec, f, chans, seen);
            }
        }
        ProcessExpr::Rename(b, pairs) => {
            for (x, y) in pairs {
                for p in [x, y] {
                    if let Some(ci) = spec.table.channel_id(&p.channel) {
                        chans.insert(ci);
                    }
                }
            }
            collect_channels(spec, b, chans, seen);
        }
        ProcessExpr::Ref(name, _) => {
            if seen.insert(name.clone()) {
                if let Some(def) = spec.process(name) {
                    let body = def.body.clone();
                    collect_channels(spec, &body, chans, seen);
                }
            }
        }
    }
}

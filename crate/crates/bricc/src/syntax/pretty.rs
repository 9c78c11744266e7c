//! Pretty-printer for specifications; `parse(print(s))` is structurally
//! identical to `s`.

use super::ast::*;
use super::parser::TypeFlavor;
use super::types::TypeKind;
use super::Spec;
use std::fmt::Write;

pub fn print_spec(spec: &Spec) -> String {
    let mut out = String::new();
    for t in &spec.types {
        if t.decl.name == "Bool" {
            continue;
        }
        let kw = match t.flavor {
            TypeFlavor::Nametype => "nametype",
            TypeFlavor::Datatype => "datatype",
            TypeFlavor::Subtype => "subtype",
        };
        match &t.decl.kind {
            TypeKind::IntRange(lo, hi) => {
                let _ = writeln!(out, "{kw} {} = {{{lo}..{hi}}}", t.decl.name);
            }
            TypeKind::Enum(labels) => {
                let _ = writeln!(out, "{kw} {} = {}", t.decl.name, labels.join(" | "));
            }
            TypeKind::Union(vs) => {
                let body = vs
                    .iter()
                    .map(|v| {
                        let mut s = v.tag.clone();
                        for &c in &v.components {
                            s.push('.');
                            s.push_str(&spec.types[c].decl.name);
                        }
                        s
                    })
                    .collect::<Vec<_>>()
                    .join(" | ");
                let _ = writeln!(out, "{kw} {} = {body}", t.decl.name);
            }
            TypeKind::Bool => {}
        }
    }
    for ch in &spec.table.channels {
        match &ch.type_name {
            Some(t) => {
                let _ = writeln!(out, "channel {} : {t}", ch.name);
            }
            None => {
                let _ = writeln!(out, "channel {}", ch.name);
            }
        }
    }
    for def in &spec.processes {
        if def.params.is_empty() {
            let _ = writeln!(out, "{} = {}", def.name, print_proc(&def.body));
        } else {
            let _ = writeln!(
                out,
                "{}({}) = {}",
                def.name,
                def.params.join(", "),
                print_proc(&def.body)
            );
        }
    }
    for c in &spec.contracts {
        match c {
            ContractDecl::Literal {
                name,
                behaviour,
                entries,
            } => {
                let _ = writeln!(out, "contract {name} {{");
                let _ = writeln!(out, "  behaviour {behaviour}");
                for (ch, iface) in entries {
                    let _ = writeln!(out, "  channel {ch} : {iface}");
                }
                let _ = writeln!(out, "}}");
            }
            ContractDecl::Composed { name, op, buffer } => {
                let body = match op {
                    CompositionOp::Interleave { left, right } => {
                        format!("interleave({left}, {right})")
                    }
                    CompositionOp::Communication {
                        left,
                        left_chan,
                        right,
                        right_chan,
                    } => format!("comm({left}, {left_chan}, {right}, {right_chan})"),
                    CompositionOp::Feedback {
                        base,
                        input_chan,
                        output_chan,
                    } => format!("feedback({base}, {input_chan}, {output_chan})"),
                    CompositionOp::Reflexive {
                        base,
                        input_chan,
                        output_chan,
                    } => format!("reflexive({base}, {input_chan}, {output_chan})"),
                };
                match buffer {
                    Some(n) => {
                        let _ = writeln!(out, "contract {name} = {body} {{buffer = {n}}}");
                    }
                    None => {
                        let _ = writeln!(out, "contract {name} = {body}");
                    }
                }
            }
        }
    }
    for a in &spec.assertions {
        let _ = writeln!(out, "{}", print_assertion(a));
    }
    out
}

pub fn print_assertion(a: &Assertion) -> String {
    let body = match &a.kind {
        AssertionKind::FailuresRefine(l, r) => {
            format!("{} [F= {}", print_operand(l), print_operand(r))
        }
        AssertionKind::Equivalent(l, r) => {
            format!("{} =F {}", print_operand(l), print_operand(r))
        }
        AssertionKind::DeadlockFree(n) => format!("deadlock free {n}"),
        AssertionKind::DivergenceFree(n) => format!("divergence free {n}"),
        AssertionKind::IoProcess(n) => format!("io process {n}"),
        AssertionKind::Cvg(a, b) => format!("cvg({a}, {b})"),
        AssertionKind::Ecvg(a, b) => format!("ecvg({a}, {b})"),
        AssertionKind::BricRefine(a, b) => format!("{a} [B= {b}"),
        AssertionKind::InheritCvg(a, b) => format!("{a} <-cvg {b}"),
        AssertionKind::InheritEcvg(a, b) => format!("{a} <-ecvg {b}"),
        AssertionKind::Decoupled(p, c, z) => format!("decoupled({p}, {c}, {z})"),
    };
    let mut opts = Vec::new();
    if let Some(g) = a.opts.gap {
        opts.push(format!("gap = {g}"));
    }
    if let Some(b) = a.opts.buffer {
        opts.push(format!("buffer = {b}"));
    }
    if let Some(m) = a.opts.max_states {
        opts.push(format!("max_states = {m}"));
    }
    if a.opts.oracle {
        opts.push("oracle".into());
    }
    if opts.is_empty() {
        format!("assert {body}")
    } else {
        format!("assert {body} {{{}}}", opts.join(", "))
    }
}

fn print_operand(op: &ProcOperand) -> String {
    match op {
        ProcOperand::Named { name, hide: None } => name.clone(),
        ProcOperand::Named {
            name,
            hide: Some(set),
        } => format!("{name} \\ {}", print_chanset(set)),
        ProcOperand::GlbCvg(n) => format!("GLB_CVG({n})"),
        ProcOperand::GlbEcvg(n) => format!("GLB_ECVG({n})"),
    }
}

fn print_chanset(set: &ChannelSet) -> String {
    format!("{{| {} |}}", set.channels.join(", "))
}

// Precedence levels, loosest first.
const L_INT: u8 = 0;
const L_EXT: u8 = 1;
const L_PAR: u8 = 2;
const L_SEQ: u8 = 3;
const L_POST: u8 = 4;
const L_PREFIX: u8 = 5;

fn level(e: &ProcessExpr) -> u8 {
    match e {
        ProcessExpr::IntChoice(..) => L_INT,
        ProcessExpr::ExtChoice(..) => L_EXT,
        ProcessExpr::ParSync(..) | ProcessExpr::Interleave(..) => L_PAR,
        ProcessExpr::Seq(..) => L_SEQ,
        ProcessExpr::Hide(..) | ProcessExpr::Rename(..) => L_POST,
        _ => L_PREFIX,
    }
}

pub fn print_proc(e: &ProcessExpr) -> String {
    let mut s = String::new();
    write_proc(&mut s, e, L_INT);
    s
}

fn write_at(out: &mut String, e: &ProcessExpr, min: u8) {
    if level(e) < min {
        out.push('(');
        write_proc(out, e, L_INT);
        out.push(')');
    } else {
        write_proc(out, e, min);
    }
}

fn write_proc(out: &mut String, e: &ProcessExpr, _ctx: u8) {
    match e {
        ProcessExpr::Stop => out.push_str("STOP"),
        ProcessExpr::Skip => out.push_str("SKIP"),
        ProcessExpr::IntChoice(l, r) => {
            write_at(out, l, L_INT);
            out.push_str(" |~| ");
            write_at(out, r, L_EXT);
        }
        ProcessExpr::ExtChoice(l, r) => {
            write_at(out, l, L_EXT);
            out.push_str(" [] ");
            write_at(out, r, L_PAR);
        }
        ProcessExpr::Interleave(l, r) => {
            write_at(out, l, L_PAR);
            out.push_str(" ||| ");
            write_at(out, r, L_SEQ);
        }
        ProcessExpr::ParSync(l, set, r) => {
            write_at(out, l, L_PAR);
            let _ = write!(out, " [| {} |] ", print_chanset(set));
            write_at(out, r, L_SEQ);
        }
        ProcessExpr::Seq(l, r) => {
            write_at(out, l, L_SEQ);
            out.push_str(" ; ");
            write_at(out, r, L_POST);
        }
        ProcessExpr::Hide(b, set) => {
            write_at(out, b, L_POST);
            let _ = write!(out, " \\ {}", print_chanset(set));
        }
        ProcessExpr::Rename(b, pairs) => {
            write_at(out, b, L_POST);
            out.push_str(" [[");
            for (i, (x, y)) in pairs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{} <- {}", print_pattern(x), print_pattern(y));
            }
            out.push_str("]]");
        }
        ProcessExpr::Prefix(pat, k) => {
            let _ = write!(out, "{} -> ", print_pattern(pat));
            write_at(out, k, L_PREFIX);
        }
        ProcessExpr::Guard(g, b) => {
            let _ = write!(out, "{} & ", print_expr(g, 0));
            write_at(out, b, L_PREFIX);
        }
        ProcessExpr::IfThenElse(c, t, f) => {
            let _ = write!(out, "if {} then ", print_expr(c, 0));
            write_at(out, t, L_SEQ);
            out.push_str(" else ");
            write_at(out, f, L_SEQ);
        }
        ProcessExpr::ReplExtChoice(x, set, b) => {
            let _ = write!(out, "[] {x} : {} @ ", print_set(set));
            write_at(out, b, L_SEQ);
        }
        ProcessExpr::ReplIntChoice(x, set, b) => {
            let _ = write!(out, "|~| {x} : {} @ ", print_set(set));
            write_at(out, b, L_SEQ);
        }
        ProcessExpr::Ref(name, args) => {
            out.push_str(name);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&print_expr(a, 0));
                }
                out.push(')');
            }
        }
    }
}

pub fn print_pattern(p: &EventPattern) -> String {
    let mut s = p.channel.clone();
    for part in &p.parts {
        match part {
            PatPart::Bind(x) => {
                let _ = write!(s, "?{x}");
            }
            PatPart::Expr(e) => {
                // Pattern components parse at additive precedence; anything
                // looser must be parenthesised.
                let txt = print_expr(e, 3);
                let _ = write!(s, ".{txt}");
            }
        }
    }
    s
}

fn print_set(s: &SetExpr) -> String {
    match s {
        SetExpr::Range(lo, hi) => format!("{{{lo}..{hi}}}"),
        SetExpr::List(items) => format!(
            "{{{}}}",
            items
                .iter()
                .map(|e| print_expr(e, 0))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        SetExpr::TypeName(n) => n.clone(),
    }
}

// Expression precedence: or=0, and=1, cmp=2, add=3, mul=4, unary=5.
fn expr_level(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Or, ..) => 0,
        Expr::Binary(BinOp::And, ..) => 1,
        Expr::Binary(
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge,
            ..,
        ) => 2,
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 3,
        Expr::Binary(BinOp::Mul | BinOp::Mod, ..) => 4,
        Expr::Unary(..) => 5,
        _ => 6,
    }
}

pub fn print_expr(e: &Expr, min: u8) -> String {
    let lvl = expr_level(e);
    let body = match e {
        Expr::Int(n) => format!("{n}"),
        Expr::Bool(b) => format!("{b}"),
        Expr::Ident(x) => x.clone(),
        Expr::Unary(UnOp::Neg, a) => format!("-{}", print_expr(a, 5)),
        Expr::Unary(UnOp::Not, a) => format!("not {}", print_expr(a, 5)),
        Expr::Binary(op, a, b) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Mod => "%",
                BinOp::Eq => "==",
                BinOp::Ne => "!=",
                BinOp::Lt => "<",
                BinOp::Le => "<=",
                BinOp::Gt => ">",
                BinOp::Ge => ">=",
                BinOp::And => "and",
                BinOp::Or => "or",
            };
            format!("{} {sym} {}", print_expr(a, lvl), print_expr(b, lvl + 1))
        }
    };
    if lvl < min {
        format!("({body})")
    } else {
        body
    }
}

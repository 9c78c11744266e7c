//! Recursive descent parser for `.iop` specifications.
//!
//! The parser is total: errors are collected as diagnostics and parsing
//! resumes at the next plausible declaration start.

use super::ast::*;
use super::lexer::{tokenize, Pos, Tok, Token};
use super::{Diagnostic, ErrCode};

/// Raw parsed items, prior to name resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Type {
        flavor: TypeFlavor,
        name: String,
        body: TypeBody,
    },
    Channel {
        names: Vec<String>,
        type_name: Option<String>,
    },
    Process(ProcessDef),
    Contract(ContractDecl),
    Assert(Assertion),
    Include(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeFlavor {
    Nametype,
    Datatype,
    Subtype,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeBody {
    Range(i64, i64),
    /// tag(.component-type-name)* alternatives
    Variants(Vec<(String, Vec<String>)>),
}

pub struct ParsedFile {
    pub items: Vec<Item>,
    pub diagnostics: Vec<Diagnostic>,
}

const RESERVED: &[&str] = &[
    "if", "then", "else", "STOP", "SKIP", "nametype", "datatype", "subtype", "channel",
    "contract", "assert", "include", "behaviour", "true", "false", "and", "or", "not",
];

pub fn parse_items(src: &str) -> ParsedFile {
    let (tokens, lex_errors) = tokenize(src);
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        diags: lex_errors
            .into_iter()
            .map(|e| Diagnostic {
                pos: Some(e.pos),
                code: ErrCode::Syntax,
                message: e.message,
            })
            .collect(),
    };
    let items = p.parse_spec_items();
    ParsedFile {
        items,
        diagnostics: p.diags,
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

type PResult<T> = Result<T, ()>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> Pos {
        self.toks[self.pos].pos
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&mut self, message: String) -> PResult<T> {
        self.diags.push(Diagnostic {
            pos: Some(self.here()),
            code: ErrCode::Syntax,
            message,
        });
        Err(())
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            let found = self.peek().clone();
            self.error(format!("expected {tok}, found {found}"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            other => self.error(format!("expected identifier, found {other}")),
        }
    }

    fn peek_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.peek_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    // ---- top level -------------------------------------------------------

    fn parse_spec_items(&mut self) -> Vec<Item> {
        let mut items = Vec::new();
        while *self.peek() != Tok::Eof {
            let before = self.pos;
            match self.parse_item() {
                Ok(item) => items.push(item),
                Err(()) => {
                    if self.pos == before {
                        self.advance();
                    }
                    self.recover();
                }
            }
        }
        items
    }

    /// Skip to the next token that plausibly starts a declaration.
    fn recover(&mut self) {
        while *self.peek() != Tok::Eof {
            if let Tok::Ident(s) = self.peek() {
                let starts = matches!(
                    s.as_str(),
                    "nametype" | "datatype" | "subtype" | "channel" | "contract" | "assert"
                        | "include"
                );
                let def_start = self.toks[self.pos].pos.col == 1
                    && (matches!(self.peek_at(1), Tok::Assign)
                        || matches!(self.peek_at(1), Tok::LParen));
                if starts || def_start {
                    return;
                }
            }
            self.advance();
        }
    }

    fn parse_item(&mut self) -> PResult<Item> {
        match self.peek().clone() {
            Tok::Ident(s) => match s.as_str() {
                "nametype" => self.parse_nametype(),
                "datatype" => self.parse_variant_type(TypeFlavor::Datatype),
                "subtype" => self.parse_variant_type(TypeFlavor::Subtype),
                "channel" => self.parse_channel(),
                "contract" => self.parse_contract(),
                "assert" => self.parse_assert(),
                "include" => {
                    self.advance();
                    match self.peek().clone() {
                        Tok::Str(path) => {
                            self.advance();
                            Ok(Item::Include(path))
                        }
                        other => self.error(format!("expected string after include, found {other}")),
                    }
                }
                _ => self.parse_process_def(),
            },
            other => self.error(format!("expected declaration, found {other}")),
        }
    }

    fn parse_nametype(&mut self) -> PResult<Item> {
        self.advance(); // nametype
        let name = self.ident()?;
        self.expect(Tok::Assign)?;
        self.expect(Tok::LBrace)?;
        let lo = self.int_lit()?;
        self.expect(Tok::DotDot)?;
        let hi = self.int_lit()?;
        self.expect(Tok::RBrace)?;
        Ok(Item::Type {
            flavor: TypeFlavor::Nametype,
            name,
            body: TypeBody::Range(lo, hi),
        })
    }

    fn int_lit(&mut self) -> PResult<i64> {
        let neg = *self.peek() == Tok::Minus;
        if neg {
            self.advance();
        }
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(if neg { -n } else { n })
            }
            other => self.error(format!("expected integer, found {other}")),
        }
    }

    fn parse_variant_type(&mut self, flavor: TypeFlavor) -> PResult<Item> {
        self.advance(); // datatype / subtype
        let name = self.ident()?;
        self.expect(Tok::Assign)?;
        let mut variants = Vec::new();
        loop {
            let tag = self.ident()?;
            let mut comps = Vec::new();
            while *self.peek() == Tok::Dot {
                self.advance();
                comps.push(self.ident()?);
            }
            variants.push((tag, comps));
            if *self.peek() == Tok::Bar {
                self.advance();
                continue;
            }
            break;
        }
        Ok(Item::Type {
            flavor,
            name,
            body: TypeBody::Variants(variants),
        })
    }

    fn parse_channel(&mut self) -> PResult<Item> {
        self.advance(); // channel
        let mut names = vec![self.ident()?];
        while *self.peek() == Tok::Comma {
            self.advance();
            names.push(self.ident()?);
        }
        let type_name = if *self.peek() == Tok::Colon {
            self.advance();
            Some(self.ident()?)
        } else {
            None
        };
        Ok(Item::Channel { names, type_name })
    }

    fn parse_contract(&mut self) -> PResult<Item> {
        self.advance(); // contract
        let name = self.ident()?;
        if *self.peek() == Tok::LBrace {
            self.advance();
            let mut behaviour = None;
            let mut entries = Vec::new();
            while *self.peek() != Tok::RBrace {
                if self.eat_kw("behaviour") {
                    behaviour = Some(self.ident()?);
                } else if self.eat_kw("channel") {
                    let ch = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let iface = self.ident()?;
                    entries.push((ch, iface));
                } else {
                    let found = self.peek().clone();
                    return self.error(format!(
                        "expected `behaviour` or `channel` in contract body, found {found}"
                    ));
                }
            }
            self.expect(Tok::RBrace)?;
            let Some(behaviour) = behaviour else {
                return self.error(format!("contract {name} has no behaviour"));
            };
            Ok(Item::Contract(ContractDecl::Literal {
                name,
                behaviour,
                entries,
            }))
        } else {
            self.expect(Tok::Assign)?;
            let opname = self.ident()?;
            self.expect(Tok::LParen)?;
            let op = match opname.as_str() {
                "interleave" => {
                    let left = self.ident()?;
                    self.expect(Tok::Comma)?;
                    let right = self.ident()?;
                    CompositionOp::Interleave { left, right }
                }
                "comm" => {
                    let left = self.ident()?;
                    self.expect(Tok::Comma)?;
                    let left_chan = self.ident()?;
                    self.expect(Tok::Comma)?;
                    let right = self.ident()?;
                    self.expect(Tok::Comma)?;
                    let right_chan = self.ident()?;
                    CompositionOp::Communication {
                        left,
                        left_chan,
                        right,
                        right_chan,
                    }
                }
                "feedback" | "reflexive" => {
                    let base = self.ident()?;
                    self.expect(Tok::Comma)?;
                    let input_chan = self.ident()?;
                    self.expect(Tok::Comma)?;
                    let output_chan = self.ident()?;
                    if opname == "feedback" {
                        CompositionOp::Feedback {
                            base,
                            input_chan,
                            output_chan,
                        }
                    } else {
                        CompositionOp::Reflexive {
                            base,
                            input_chan,
                            output_chan,
                        }
                    }
                }
                other => {
                    return self.error(format!(
                        "unknown composition `{other}` (expected interleave, comm, feedback or reflexive)"
                    ))
                }
            };
            self.expect(Tok::RParen)?;
            let opts = self.parse_opts()?;
            Ok(Item::Contract(ContractDecl::Composed {
                name,
                op,
                buffer: opts.buffer,
            }))
        }
    }

    fn parse_opts(&mut self) -> PResult<AssertOpts> {
        let mut opts = AssertOpts::default();
        if *self.peek() != Tok::LBrace {
            return Ok(opts);
        }
        self.advance();
        loop {
            let key = self.ident()?;
            match key.as_str() {
                "oracle" => opts.oracle = true,
                "gap" => {
                    self.expect(Tok::Assign)?;
                    opts.gap = Some(self.int_lit()? as u32);
                }
                "buffer" => {
                    self.expect(Tok::Assign)?;
                    opts.buffer = Some(self.int_lit()? as u32);
                }
                "max_states" => {
                    self.expect(Tok::Assign)?;
                    opts.max_states = Some(self.int_lit()? as usize);
                }
                other => return self.error(format!("unknown option `{other}`")),
            }
            if *self.peek() == Tok::Comma {
                self.advance();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(opts)
    }

    fn parse_assert(&mut self) -> PResult<Item> {
        self.advance(); // assert
        let kind = if self.peek_kw("deadlock") {
            self.advance();
            if !self.eat_kw("free") {
                return self.error("expected `free` after `deadlock`".into());
            }
            AssertionKind::DeadlockFree(self.ident()?)
        } else if self.peek_kw("divergence") {
            self.advance();
            if !self.eat_kw("free") {
                return self.error("expected `free` after `divergence`".into());
            }
            AssertionKind::DivergenceFree(self.ident()?)
        } else if self.peek_kw("io") {
            self.advance();
            if !self.eat_kw("process") {
                return self.error("expected `process` after `io`".into());
            }
            AssertionKind::IoProcess(self.ident()?)
        } else if self.peek_kw("cvg") && *self.peek_at(1) == Tok::LParen {
            self.advance();
            self.advance();
            let a = self.ident()?;
            self.expect(Tok::Comma)?;
            let b = self.ident()?;
            self.expect(Tok::RParen)?;
            AssertionKind::Cvg(a, b)
        } else if self.peek_kw("ecvg") && *self.peek_at(1) == Tok::LParen {
            self.advance();
            self.advance();
            let a = self.ident()?;
            self.expect(Tok::Comma)?;
            let b = self.ident()?;
            self.expect(Tok::RParen)?;
            AssertionKind::Ecvg(a, b)
        } else if self.peek_kw("decoupled") && *self.peek_at(1) == Tok::LParen {
            self.advance();
            self.advance();
            let p = self.ident()?;
            self.expect(Tok::Comma)?;
            let c = self.ident()?;
            self.expect(Tok::Comma)?;
            let z = self.ident()?;
            self.expect(Tok::RParen)?;
            AssertionKind::Decoupled(p, c, z)
        } else {
            let lhs = self.parse_proc_operand()?;
            match self.advance() {
                Tok::FRefine => AssertionKind::FailuresRefine(lhs, self.parse_proc_operand()?),
                Tok::FEquiv => AssertionKind::Equivalent(lhs, self.parse_proc_operand()?),
                Tok::BRefine => {
                    let rhs = self.ident()?;
                    AssertionKind::BricRefine(operand_name(&lhs, self)?, rhs)
                }
                Tok::InheritCvg => {
                    let rhs = self.ident()?;
                    AssertionKind::InheritCvg(operand_name(&lhs, self)?, rhs)
                }
                Tok::InheritEcvg => {
                    let rhs = self.ident()?;
                    AssertionKind::InheritEcvg(operand_name(&lhs, self)?, rhs)
                }
                other => {
                    return self.error(format!(
                        "expected `[F=`, `=F`, `[B=`, `<-cvg` or `<-ecvg`, found {other}"
                    ))
                }
            }
        };
        let opts = self.parse_opts()?;
        Ok(Item::Assert(Assertion { kind, opts }))
    }

    fn parse_proc_operand(&mut self) -> PResult<ProcOperand> {
        let name = self.ident()?;
        if (name == "GLB_CVG" || name == "GLB_ECVG") && *self.peek() == Tok::LParen {
            self.advance();
            let inner = self.ident()?;
            self.expect(Tok::RParen)?;
            return Ok(if name == "GLB_CVG" {
                ProcOperand::GlbCvg(inner)
            } else {
                ProcOperand::GlbEcvg(inner)
            });
        }
        let hide = if *self.peek() == Tok::Backslash {
            self.advance();
            Some(self.parse_channel_set()?)
        } else {
            None
        };
        Ok(ProcOperand::Named { name, hide })
    }

    fn parse_channel_set(&mut self) -> PResult<ChannelSet> {
        self.expect(Tok::LSetBar)?;
        let mut channels = vec![self.ident()?];
        while *self.peek() == Tok::Comma {
            self.advance();
            channels.push(self.ident()?);
        }
        self.expect(Tok::RSetBar)?;
        Ok(ChannelSet { channels })
    }

    fn parse_process_def(&mut self) -> PResult<Item> {
        let name = self.ident()?;
        if RESERVED.contains(&name.as_str()) {
            return self.error(format!("`{name}` is reserved and cannot name a process"));
        }
        let mut params = Vec::new();
        if *self.peek() == Tok::LParen {
            self.advance();
            params.push(self.ident()?);
            while *self.peek() == Tok::Comma {
                self.advance();
                params.push(self.ident()?);
            }
            self.expect(Tok::RParen)?;
        }
        self.expect(Tok::Assign)?;
        let body = self.parse_proc()?;
        Ok(Item::Process(ProcessDef { name, params, body }))
    }

    // ---- process expressions ---------------------------------------------

    fn parse_proc(&mut self) -> PResult<ProcessExpr> {
        self.parse_intchoice()
    }

    fn parse_intchoice(&mut self) -> PResult<ProcessExpr> {
        let mut lhs = self.parse_extchoice()?;
        while *self.peek() == Tok::IntCh && !self.replicated_ahead() {
            self.advance();
            let rhs = self.parse_extchoice()?;
            lhs = ProcessExpr::int(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_extchoice(&mut self) -> PResult<ProcessExpr> {
        let mut lhs = self.parse_par()?;
        while *self.peek() == Tok::ExtCh && !self.replicated_ahead() {
            self.advance();
            let rhs = self.parse_par()?;
            lhs = ProcessExpr::ext(lhs, rhs);
        }
        Ok(lhs)
    }

    /// True when the choice token at the cursor starts a replicated choice
    /// (`[] x : S @ ...` / `|~| x : S @ ...`) rather than an infix operator.
    fn replicated_ahead(&self) -> bool {
        matches!(self.peek_at(1), Tok::Ident(_)) && *self.peek_at(2) == Tok::Colon
    }

    fn parse_par(&mut self) -> PResult<ProcessExpr> {
        let mut lhs = self.parse_seq()?;
        loop {
            match self.peek() {
                Tok::Ileave => {
                    self.advance();
                    let rhs = self.parse_seq()?;
                    lhs = ProcessExpr::Interleave(Box::new(lhs), Box::new(rhs));
                }
                Tok::LParSync => {
                    self.advance();
                    let set = self.parse_channel_set()?;
                    self.expect(Tok::RParSync)?;
                    let rhs = self.parse_seq()?;
                    lhs = ProcessExpr::ParSync(Box::new(lhs), set, Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_seq(&mut self) -> PResult<ProcessExpr> {
        let mut lhs = self.parse_postfix()?;
        while *self.peek() == Tok::Semi {
            self.advance();
            let rhs = self.parse_postfix()?;
            lhs = ProcessExpr::Seq(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_postfix(&mut self) -> PResult<ProcessExpr> {
        let mut p = self.parse_prefixlevel()?;
        loop {
            match self.peek() {
                Tok::Backslash => {
                    self.advance();
                    let set = self.parse_channel_set()?;
                    p = ProcessExpr::Hide(Box::new(p), set);
                }
                Tok::LRename => {
                    self.advance();
                    let mut pairs = Vec::new();
                    loop {
                        let from = self.parse_event_pattern()?;
                        self.expect(Tok::RenameTo)?;
                        let to = self.parse_event_pattern()?;
                        pairs.push((from, to));
                        if *self.peek() == Tok::Comma {
                            self.advance();
                        } else {
                            break;
                        }
                    }
                    self.expect(Tok::RRename)?;
                    p = ProcessExpr::Rename(Box::new(p), pairs);
                }
                _ => return Ok(p),
            }
        }
    }

    fn parse_prefixlevel(&mut self) -> PResult<ProcessExpr> {
        match self.peek().clone() {
            Tok::IntCh | Tok::ExtCh => {
                let external = *self.peek() == Tok::ExtCh;
                self.advance();
                let binder = self.ident()?;
                self.expect(Tok::Colon)?;
                let set = self.parse_set_expr()?;
                self.expect(Tok::At)?;
                let body = self.parse_seq()?;
                Ok(if external {
                    ProcessExpr::ReplExtChoice(binder, set, Box::new(body))
                } else {
                    ProcessExpr::ReplIntChoice(binder, set, Box::new(body))
                })
            }
            Tok::Ident(s) if s == "if" => {
                self.advance();
                let cond = self.parse_expr()?;
                if !self.eat_kw("then") {
                    return self.error("expected `then`".into());
                }
                let t = self.parse_seq()?;
                if !self.eat_kw("else") {
                    return self.error("expected `else`".into());
                }
                let f = self.parse_seq()?;
                Ok(ProcessExpr::IfThenElse(cond, Box::new(t), Box::new(f)))
            }
            Tok::Ident(s) if s == "STOP" => {
                self.advance();
                Ok(ProcessExpr::Stop)
            }
            Tok::Ident(s) if s == "SKIP" => {
                self.advance();
                Ok(ProcessExpr::Skip)
            }
            Tok::LParen => {
                // Either a parenthesised process or a parenthesised boolean
                // guard `(g) & P`.
                let save = self.pos;
                let save_diags = self.diags.len();
                if let Ok(e) = self.parse_expr() {
                    if *self.peek() == Tok::Amp {
                        self.advance();
                        let body = self.parse_prefixlevel()?;
                        return Ok(ProcessExpr::Guard(e, Box::new(body)));
                    }
                }
                self.pos = save;
                self.diags.truncate(save_diags);
                self.advance(); // (
                let p = self.parse_proc()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Tok::Ident(_) => {
                // Guard (`x < 3 & P`), event prefix, or process reference.
                let save = self.pos;
                let save_diags = self.diags.len();
                if let Ok(e) = self.parse_expr() {
                    if *self.peek() == Tok::Amp {
                        self.advance();
                        let body = self.parse_prefixlevel()?;
                        return Ok(ProcessExpr::Guard(e, Box::new(body)));
                    }
                }
                self.pos = save;
                self.diags.truncate(save_diags);
                let pat = self.parse_event_pattern()?;
                if *self.peek() == Tok::Arrow {
                    self.advance();
                    let k = self.parse_prefixlevel()?;
                    Ok(ProcessExpr::prefix(pat, k))
                } else {
                    // Plain reference; pattern parts are not allowed here.
                    if !pat.parts.is_empty() {
                        return self.error(format!(
                            "`{}` looks like an event but is not followed by `->`",
                            pat.channel
                        ));
                    }
                    let name = pat.channel;
                    let mut args = Vec::new();
                    if *self.peek() == Tok::LParen && !self.paren_group_is_def_head() {
                        self.advance();
                        args.push(self.parse_expr()?);
                        while *self.peek() == Tok::Comma {
                            self.advance();
                            args.push(self.parse_expr()?);
                        }
                        self.expect(Tok::RParen)?;
                    }
                    Ok(ProcessExpr::Ref(name, args))
                }
            }
            other => self.error(format!("expected process expression, found {other}")),
        }
    }

    /// Lookahead: does the parenthesised group at the cursor belong to the
    /// next definition (`Name(params) = ...`) rather than to this reference?
    fn paren_group_is_def_head(&self) -> bool {
        debug_assert!(*self.peek() == Tok::LParen);
        let mut depth = 0usize;
        let mut i = self.pos;
        loop {
            match &self.toks[i].tok {
                Tok::LParen => depth += 1,
                Tok::RParen => {
                    depth -= 1;
                    if depth == 0 {
                        return self.toks.get(i + 1).map(|t| &t.tok) == Some(&Tok::Assign);
                    }
                }
                Tok::Eof => return false,
                _ => {}
            }
            i += 1;
        }
    }

    fn parse_event_pattern(&mut self) -> PResult<EventPattern> {
        let channel = self.ident()?;
        let mut parts = Vec::new();
        loop {
            match self.peek() {
                Tok::Dot => {
                    self.advance();
                    let e = self.parse_part_expr()?;
                    parts.push(PatPart::Expr(e));
                }
                Tok::Bang => {
                    self.advance();
                    let e = self.parse_part_expr()?;
                    parts.push(PatPart::Expr(e));
                }
                Tok::Query => {
                    self.advance();
                    parts.push(PatPart::Bind(self.ident()?));
                }
                _ => break,
            }
        }
        Ok(EventPattern { channel, parts })
    }

    /// Pattern component expression: additive precedence, so `t%38` and
    /// `(c+1)%4` work without parentheses while `->` still terminates.
    fn parse_part_expr(&mut self) -> PResult<Expr> {
        self.parse_additive()
    }

    fn parse_set_expr(&mut self) -> PResult<SetExpr> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok(SetExpr::TypeName(name))
            }
            Tok::LBrace => {
                self.advance();
                if *self.peek() == Tok::RBrace {
                    self.advance();
                    return Ok(SetExpr::List(Vec::new()));
                }
                let first = self.parse_expr()?;
                if *self.peek() == Tok::DotDot {
                    self.advance();
                    let hi = self.int_lit()?;
                    self.expect(Tok::RBrace)?;
                    match first {
                        Expr::Int(lo) => Ok(SetExpr::Range(lo, hi)),
                        _ => self.error("range bounds must be integer literals".into()),
                    }
                } else {
                    let mut items = vec![first];
                    while *self.peek() == Tok::Comma {
                        self.advance();
                        items.push(self.parse_expr()?);
                    }
                    self.expect(Tok::RBrace)?;
                    Ok(SetExpr::List(items))
                }
            }
            other => self.error(format!("expected value set, found {other}")),
        }
    }

    // ---- expressions -------------------------------------------------------

    fn parse_expr(&mut self) -> PResult<Expr> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_and()?;
        while self.peek_kw("or") {
            self.advance();
            let rhs = self.parse_and()?;
            lhs = Expr::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_cmp()?;
        while self.peek_kw("and") {
            self.advance();
            let rhs = self.parse_cmp()?;
            lhs = Expr::Binary(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_cmp(&mut self) -> PResult<Expr> {
        let lhs = self.parse_additive()?;
        let op = match self.peek() {
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.parse_additive()?;
        Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    fn parse_additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_mul()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.parse_mul()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn parse_mul(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Percent => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.parse_unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Minus => {
                self.advance();
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.parse_unary()?)))
            }
            Tok::Ident(s) if s == "not" => {
                self.advance();
                Ok(Expr::Unary(UnOp::Not, Box::new(self.parse_unary()?)))
            }
            Tok::Ident(s) if s == "true" => {
                self.advance();
                Ok(Expr::Bool(true))
            }
            Tok::Ident(s) if s == "false" => {
                self.advance();
                Ok(Expr::Bool(false))
            }
            Tok::Ident(s) => {
                self.advance();
                Ok(Expr::Ident(s))
            }
            Tok::Int(n) => {
                self.advance();
                Ok(Expr::Int(n))
            }
            Tok::LParen => {
                self.advance();
                let e = self.parse_expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => self.error(format!("expected expression, found {other}")),
        }
    }
}

fn operand_name(op: &ProcOperand, p: &mut Parser) -> PResult<String> {
    match op {
        ProcOperand::Named { name, hide: None } => Ok(name.clone()),
        _ => p.error("contract relations take plain contract names".into()),
    }
}

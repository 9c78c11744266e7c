//! Abstract syntax for process definitions, contracts and assertion scripts.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    /// Variable or enum/variant tag; resolved against the expected type when
    /// the expression is used inside an event pattern.
    Ident(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

/// One dotted/queried component of an event pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatPart {
    /// `?x` — binds every admissible value at this position.
    Bind(String),
    /// `.e` or `!e` — a concrete component, evaluated at expansion time.
    Expr(Expr),
}

/// `channel(.part | ?x | !e)*` as written; the direction component of an
/// I/O channel is the leading `in`/`out` part and is split off during
/// resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventPattern {
    pub channel: String,
    pub parts: Vec<PatPart>,
}

/// `{| c, d |}` — all events communicated through the listed channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelSet {
    pub channels: Vec<String>,
}

/// Value set of a replicated choice; restricted to constant sets so choices
/// can be expanded (and empties rejected) when the definition is parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetExpr {
    Range(i64, i64),
    List(Vec<Expr>),
    TypeName(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProcessExpr {
    Stop,
    Skip,
    Prefix(EventPattern, Box<ProcessExpr>),
    ExtChoice(Box<ProcessExpr>, Box<ProcessExpr>),
    IntChoice(Box<ProcessExpr>, Box<ProcessExpr>),
    Guard(Expr, Box<ProcessExpr>),
    IfThenElse(Expr, Box<ProcessExpr>, Box<ProcessExpr>),
    Seq(Box<ProcessExpr>, Box<ProcessExpr>),
    Hide(Box<ProcessExpr>, ChannelSet),
    Rename(Box<ProcessExpr>, Vec<(EventPattern, EventPattern)>),
    ParSync(Box<ProcessExpr>, ChannelSet, Box<ProcessExpr>),
    Interleave(Box<ProcessExpr>, Box<ProcessExpr>),
    ReplExtChoice(String, SetExpr, Box<ProcessExpr>),
    ReplIntChoice(String, SetExpr, Box<ProcessExpr>),
    Ref(String, Vec<Expr>),
}

impl ProcessExpr {
    pub fn ext(l: ProcessExpr, r: ProcessExpr) -> ProcessExpr {
        ProcessExpr::ExtChoice(Box::new(l), Box::new(r))
    }
    pub fn int(l: ProcessExpr, r: ProcessExpr) -> ProcessExpr {
        ProcessExpr::IntChoice(Box::new(l), Box::new(r))
    }
    pub fn prefix(p: EventPattern, k: ProcessExpr) -> ProcessExpr {
        ProcessExpr::Prefix(p, Box::new(k))
    }
    pub fn named(name: &str) -> ProcessExpr {
        ProcessExpr::Ref(name.to_string(), Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: ProcessExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContractDecl {
    /// `contract Name { behaviour P  channel c : I  ... }`
    Literal {
        name: String,
        behaviour: String,
        /// channel name -> interface (type) name, in declaration order.
        entries: Vec<(String, String)>,
    },
    /// `contract Name = comm(A, c, B, z)` and friends.
    Composed {
        name: String,
        op: CompositionOp,
        buffer: Option<u32>,
    },
}

impl ContractDecl {
    pub fn name(&self) -> &str {
        match self {
            ContractDecl::Literal { name, .. } | ContractDecl::Composed { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompositionOp {
    Interleave {
        left: String,
        right: String,
    },
    Communication {
        left: String,
        left_chan: String,
        right: String,
        right_chan: String,
    },
    Feedback {
        base: String,
        input_chan: String,
        output_chan: String,
    },
    Reflexive {
        base: String,
        input_chan: String,
        output_chan: String,
    },
}

/// A process operand in an assertion: a named process with an optional
/// hiding set, or a greatest-lower-bound construction over a named process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProcOperand {
    Named {
        name: String,
        hide: Option<ChannelSet>,
    },
    GlbCvg(String),
    GlbEcvg(String),
}

impl ProcOperand {
    pub fn named(name: &str) -> ProcOperand {
        ProcOperand::Named {
            name: name.to_string(),
            hide: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssertionKind {
    /// `assert P [F= Q` — every stable failure of Q is one of P.
    FailuresRefine(ProcOperand, ProcOperand),
    /// `assert P =F Q`
    Equivalent(ProcOperand, ProcOperand),
    /// `assert deadlock free P` (process or contract reference)
    DeadlockFree(String),
    /// `assert divergence free P`
    DivergenceFree(String),
    /// `assert io process P`
    IoProcess(String),
    /// `assert cvg(T, T2)` — T2 converges to T.
    Cvg(String, String),
    Ecvg(String, String),
    /// `assert CtrA [B= CtrB`
    BricRefine(String, String),
    /// `assert CtrA <-cvg CtrB` — CtrB inherits from CtrA.
    InheritCvg(String, String),
    InheritEcvg(String, String),
    /// `assert decoupled(P, c, z)`
    Decoupled(String, String, String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssertOpts {
    pub gap: Option<u32>,
    pub buffer: Option<u32>,
    pub max_states: Option<usize>,
    /// Force the brute-force method for convergence checks.
    pub oracle: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub kind: AssertionKind,
    pub opts: AssertOpts,
}

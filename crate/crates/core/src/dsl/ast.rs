use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Arccos,
    Arcsin,
    Tan,
    Sqrt,
    Cos,
    Sin,
    Round,
    Abs,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Arccos,
        Func::Arcsin,
        Func::Tan,
        Func::Sqrt,
        Func::Cos,
        Func::Sin,
        Func::Round,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Arccos => "arccos",
            Func::Arcsin => "arcsin",
            Func::Tan => "tan",
            Func::Sqrt => "sqrt",
            Func::Cos => "cos",
            Func::Sin => "sin",
            Func::Round => "round",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Func::Arccos => x.acos(),
            Func::Arcsin => x.asin(),
            Func::Tan => x.tan(),
            Func::Sqrt => x.sqrt(),
            Func::Cos => x.cos(),
            Func::Sin => x.sin(),
            Func::Round => x.round(),
            Func::Abs => x.abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Identifiers read by the expression.
    pub fn variables(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Expr::Num(_) | Expr::Pi => {}
            Expr::Var(name) => {
                out.insert(name);
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_variables(out),
            Expr::Bin(_, a, b) => {
                a.collect_variables(out);
                b.collect_variables(out);
            }
        }
    }

    /// Evaluates with `lookup` resolving identifiers; `None` for unbound names.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
        Some(match self {
            Expr::Num(x) => *x,
            Expr::Pi => std::f64::consts::PI,
            Expr::Var(name) => lookup(name)?,
            Expr::Neg(e) => -e.eval(lookup)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(lookup)?, b.eval(lookup)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Expr::Call(f, e) => f.apply(e.eval(lookup)?),
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(op, _, _) => op.precedence(),
            Expr::Neg(_) => 3,
            _ => 4,
        }
    }

    fn write_with(&self, out: &mut String, min_precedence: u8) {
        let parens = self.precedence() < min_precedence;
        if parens {
            out.push('(');
        }
        match self {
            Expr::Num(x) => {
                let _ = write!(out, "{x:?}");
            }
            Expr::Pi => out.push_str("pi"),
            Expr::Var(name) => out.push_str(name),
            Expr::Neg(e) => {
                out.push('-');
                e.write_with(out, 3);
            }
            Expr::Bin(op, a, b) => {
                let p = op.precedence();
                a.write_with(out, p);
                let _ = write!(out, " {} ", op.symbol());
                // Operators are left-associative.
                b.write_with(out, p + 1);
            }
            Expr::Call(f, e) => {
                out.push_str(f.name());
                out.push('(');
                e.write_with(out, 0);
                out.push(')');
            }
        }
        if parens {
            out.push(')');
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_with(&mut s, 0);
        f.write_str(&s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

/// The beam-splitter phase.
#[derive(Clone, Debug, PartialEq)]
pub enum Chi {
    /// Omitted: χ = 0.
    Zero,
    /// `@sym`: χ = π/2.
    Symmetric,
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Statement {
    Bs {
        first: usize,
        second: usize,
        gamma: Expr,
        chi: Chi,
    },
    Ps {
        mode: usize,
        chi: Expr,
    },
    /// Counts photons in `mode`, stores the count and leaves the mode empty.
    Detect {
        mode: usize,
        register: String,
    },
    /// Appends `count` vacuum modes.
    Vacuum {
        count: usize,
    },
    If {
        condition: Condition,
        then_block: Vec<Statement>,
        else_block: Option<Vec<Statement>>,
    },
    DiscardIf(Condition),
    /// Reaching this statement on a live branch is a runtime error.
    Unreachable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub default: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub mode_count: usize,
    pub params: Vec<ParamDecl>,
    pub statements: Vec<Statement>,
    pub register_names: BTreeSet<String>,
}

impl Program {
    /// Canonical source text; parsing it gives back an identical program.
    pub fn pretty(&self) -> String {
        let mut out = format!("modes {}\n", self.mode_count);
        for p in &self.params {
            match &p.default {
                Some(e) => {
                    let _ = writeln!(out, "param {} = {e}", p.name);
                }
                None => {
                    let _ = writeln!(out, "param {}", p.name);
                }
            }
        }
        write_block(&mut out, &self.statements, 0);
        out
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}

fn write_block(out: &mut String, statements: &[Statement], depth: usize) {
    for s in statements {
        let indent = "  ".repeat(depth);
        out.push_str(&indent);
        match s {
            Statement::Bs {
                first,
                second,
                gamma,
                chi,
            } => {
                let _ = write!(out, "bs {first} {second} {gamma}");
                match chi {
                    Chi::Zero => {}
                    Chi::Symmetric => out.push_str(" @sym"),
                    Chi::Expr(e) => {
                        // A leading minus would be read as part of γ.
                        let text = e.to_string();
                        if text.starts_with('-') {
                            let _ = write!(out, " ({text})");
                        } else {
                            let _ = write!(out, " {text}");
                        }
                    }
                }
                out.push('\n');
            }
            Statement::Ps { mode, chi } => {
                let _ = writeln!(out, "ps {mode} {chi}");
            }
            Statement::Detect { mode, register } => {
                let _ = writeln!(out, "detect {mode} -> {register}");
            }
            Statement::Vacuum { count } => {
                let _ = writeln!(out, "vacuum {count}");
            }
            Statement::If {
                condition,
                then_block,
                else_block,
            } => {
                let _ = writeln!(out, "if {condition} {{");
                write_block(out, then_block, depth + 1);
                out.push_str(&indent);
                out.push('}');
                if let Some(block) = else_block {
                    out.push_str(" else {\n");
                    write_block(out, block, depth + 1);
                    out.push_str(&indent);
                    out.push('}');
                }
                out.push('\n');
            }
            Statement::DiscardIf(c) => {
                let _ = writeln!(out, "discard_if {c}");
            }
            Statement::Unreachable => out.push_str("unreachable\n"),
        }
    }
}

use std::collections::BTreeSet;

use super::ast::{BinOp, Chi, CmpOp, Condition, Expr, Func, ParamDecl, Program, Statement};
use super::{ParseError, ParseErrorKind, Span};

/// Deepest allowed nesting of blocks, parentheses and unary minus.
pub const MAX_NESTING: usize = 64;

const KEYWORDS: [&str; 12] = [
    "modes",
    "param",
    "bs",
    "ps",
    "detect",
    "vacuum",
    "if",
    "else",
    "discard_if",
    "unreachable",
    "pi",
    "sym",
];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(u64),
    Num(f64),
    Ident(String),
    Arrow,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    EqEq,
    Gt,
    Ge,
    Assign,
    At,
    Newline,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("integer {n}"),
            Tok::Num(x) => format!("number {x}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Arrow => "'->'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Lt => "'<'".into(),
            Tok::Le => "'<='".into(),
            Tok::EqEq => "'=='".into(),
            Tok::Gt => "'>'".into(),
            Tok::Ge => "'>='".into(),
            Tok::Assign => "'='".into(),
            Tok::At => "'@'".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn syntax(span: Span, message: impl Into<String>, expected: &[&str]) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Syntax,
        span,
        message: message.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

fn validation(span: Span, message: impl Into<String>) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Validation,
        span,
        message: message.into(),
        expected: Vec::new(),
    }
}

fn lex(source: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = source.char_indices().peekable();
    let (mut line, mut column) = (1, 1);
    while let Some(&(offset, c)) = chars.peek() {
        let span = Span { offset, line, column };
        let mut advance = |chars: &mut std::iter::Peekable<std::str::CharIndices>| {
            chars.next();
            column += 1;
        };
        match c {
            '\n' => {
                chars.next();
                tokens.push((Tok::Newline, span));
                line += 1;
                column = 1;
                continue;
            }
            ' ' | '\t' | '\r' => advance(&mut chars),
            '#' => {
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    advance(&mut chars);
                }
            }
            '0'..='9' => {
                let start = offset;
                let mut end = offset;
                let mut is_float = false;
                let mut push = |chars: &mut std::iter::Peekable<std::str::CharIndices>, end: &mut usize| {
                    let (i, c) = chars.next().expect("peeked");
                    *end = i + c.len_utf8();
                    column += 1;
                };
                while matches!(chars.peek(), Some((_, '0'..='9'))) {
                    push(&mut chars, &mut end);
                }
                if matches!(chars.peek(), Some((_, '.'))) {
                    is_float = true;
                    push(&mut chars, &mut end);
                    if !matches!(chars.peek(), Some((_, '0'..='9'))) {
                        return Err(syntax(span, "malformed number", &["digit after '.'"]));
                    }
                    while matches!(chars.peek(), Some((_, '0'..='9'))) {
                        push(&mut chars, &mut end);
                    }
                }
                if matches!(chars.peek(), Some((_, 'e' | 'E'))) {
                    is_float = true;
                    push(&mut chars, &mut end);
                    if matches!(chars.peek(), Some((_, '+' | '-'))) {
                        push(&mut chars, &mut end);
                    }
                    if !matches!(chars.peek(), Some((_, '0'..='9'))) {
                        return Err(syntax(span, "malformed number", &["exponent digits"]));
                    }
                    while matches!(chars.peek(), Some((_, '0'..='9'))) {
                        push(&mut chars, &mut end);
                    }
                }
                let text = &source[start..end];
                let tok = if is_float {
                    let x: f64 = text
                        .parse()
                        .map_err(|_| syntax(span, "malformed number", &[]))?;
                    if !x.is_finite() {
                        return Err(syntax(span, format!("number {text} is out of range"), &[]));
                    }
                    Tok::Num(x)
                } else {
                    Tok::Int(
                        text.parse()
                            .map_err(|_| syntax(span, format!("integer {text} is out of range"), &[]))?,
                    )
                };
                tokens.push((tok, span));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if !(c.is_ascii_alphanumeric() || c == '_') {
                        break;
                    }
                    name.push(c);
                    advance(&mut chars);
                }
                tokens.push((Tok::Ident(name), span));
                continue;
            }
            _ => {
                advance(&mut chars);
                let two = |chars: &mut std::iter::Peekable<std::str::CharIndices>, next: char| {
                    matches!(chars.peek(), Some(&(_, c)) if c == next)
                };
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '+' => Tok::Plus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '@' => Tok::At,
                    '-' if two(&mut chars, '>') => {
                        advance(&mut chars);
                        Tok::Arrow
                    }
                    '-' => Tok::Minus,
                    '<' if two(&mut chars, '=') => {
                        advance(&mut chars);
                        Tok::Le
                    }
                    '<' => Tok::Lt,
                    '>' if two(&mut chars, '=') => {
                        advance(&mut chars);
                        Tok::Ge
                    }
                    '>' => Tok::Gt,
                    '=' if two(&mut chars, '=') => {
                        advance(&mut chars);
                        Tok::EqEq
                    }
                    '=' => Tok::Assign,
                    other => {
                        return Err(syntax(span, format!("unexpected character {other:?}"), &[]));
                    }
                };
                tokens.push((tok, span));
                continue;
            }
        }
    }
    tokens.push((
        Tok::Eof,
        Span {
            offset: source.len(),
            line,
            column,
        },
    ));
    Ok(tokens)
}

/// Parses and validates a program.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    let tokens = lex(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        modes: 0,
        params: BTreeSet::new(),
        scopes: vec![BTreeSet::new()],
        claimed: BTreeSet::new(),
        depth: 0,
    };
    parser.program()
}

struct Parser {
    tokens: Vec<(Tok, Span)>,
    pos: usize,
    /// Modes live at the current point of the program.
    modes: usize,
    params: BTreeSet<String>,
    /// Registers readable at the current point, innermost block last.
    scopes: Vec<BTreeSet<String>>,
    /// Registers already written on some path through the enclosing code.
    claimed: BTreeSet<String>,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.tokens[self.pos].clone();
        if t.0 != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn is_keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        syntax(self.span(), format!("unexpected {}", self.peek().describe()), expected)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Span, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(&[what]))
        }
    }

    fn skip_newlines(&mut self) {
        while *self.peek() == Tok::Newline {
            self.bump();
        }
    }

    fn end_of_statement(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::RBrace | Tok::Eof => Ok(()),
            _ => Err(self.unexpected(&["end of line"])),
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(syntax(self.span(), format!("nesting deeper than {MAX_NESTING}"), &[]));
        }
        Ok(())
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        self.skip_newlines();
        if !self.is_keyword("modes") {
            return Err(self.unexpected(&["'modes'"]));
        }
        self.bump();
        let (count, span) = self.integer("mode count")?;
        if count == 0 {
            return Err(validation(span, "a program needs at least one mode"));
        }
        self.modes = count;
        self.end_of_statement()?;

        let mut params = Vec::new();
        loop {
            self.skip_newlines();
            if !self.is_keyword("param") {
                break;
            }
            self.bump();
            let (name, span) = self.identifier("parameter name")?;
            if self.params.contains(&name) {
                return Err(validation(span, format!("parameter {name} declared twice")));
            }
            let default = if *self.peek() == Tok::Assign {
                self.bump();
                Some(self.expr()?)
            } else {
                None
            };
            self.end_of_statement()?;
            self.params.insert(name.clone());
            params.push(ParamDecl { name, default });
        }

        let statements = self.block_body()?;
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected(&["statement"]));
        }
        Ok(Program {
            mode_count: count,
            params,
            statements,
            register_names: std::mem::take(&mut self.claimed),
        })
    }

    /// Statements up to a closing brace or the end of input.
    fn block_body(&mut self) -> Result<Vec<Statement>, ParseError> {
        let mut statements = Vec::new();
        loop {
            self.skip_newlines();
            if matches!(self.peek(), Tok::RBrace | Tok::Eof) {
                return Ok(statements);
            }
            statements.push(self.statement()?);
        }
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        let (tok, span) = self.bump();
        let word = match tok {
            Tok::Ident(w) => w,
            other => {
                return Err(syntax(span, format!("unexpected {}", other.describe()), &["statement"]));
            }
        };
        let statement = match word.as_str() {
            "bs" => {
                let first = self.mode_index()?;
                let (second, second_span) = (self.peek().clone(), self.span());
                let second = self.mode_index_from(second, second_span)?;
                if first == second {
                    return Err(validation(second_span, "beam splitter needs two distinct modes"));
                }
                let gamma = self.expr()?;
                let chi = if *self.peek() == Tok::At {
                    self.bump();
                    let (name, span) = self.bump();
                    if name != Tok::Ident("sym".into()) {
                        return Err(syntax(span, format!("unexpected {}", name.describe()), &["'sym'"]));
                    }
                    Chi::Symmetric
                } else if self.starts_expr() {
                    Chi::Expr(self.expr()?)
                } else {
                    Chi::Zero
                };
                Statement::Bs {
                    first,
                    second,
                    gamma,
                    chi,
                }
            }
            "ps" => {
                let mode = self.mode_index()?;
                let chi = self.expr()?;
                Statement::Ps { mode, chi }
            }
            "detect" => {
                let mode = self.mode_index()?;
                self.expect(Tok::Arrow, "'->'")?;
                let (register, span) = self.identifier("register name")?;
                if self.params.contains(&register) {
                    return Err(validation(span, format!("{register} is a parameter, not a register")));
                }
                if !self.claimed.insert(register.clone()) {
                    return Err(validation(span, format!("register {register} written twice")));
                }
                self.scopes.last_mut().expect("scope").insert(register.clone());
                Statement::Detect { mode, register }
            }
            "vacuum" => {
                let (count, span) = self.integer("mode count")?;
                if count == 0 {
                    return Err(validation(span, "vacuum needs at least one mode"));
                }
                self.modes = self
                    .modes
                    .checked_add(count)
                    .filter(|m| *m <= u32::MAX as usize)
                    .ok_or_else(|| validation(span, "too many modes"))?;
                Statement::Vacuum { count }
            }
            "if" => return self.if_statement(span),
            "discard_if" => Statement::DiscardIf(self.condition()?),
            "unreachable" => Statement::Unreachable,
            "param" => return Err(validation(span, "parameters must be declared before any statement")),
            "modes" => return Err(validation(span, "the mode count is declared once, on the first line")),
            _ => return Err(syntax(span, format!("unknown statement '{word}'"), &["statement"])),
        };
        self.end_of_statement()?;
        Ok(statement)
    }

    fn if_statement(&mut self, span: Span) -> Result<Statement, ParseError> {
        self.enter()?;
        let condition = self.condition()?;
        self.expect(Tok::LBrace, "'{'")?;
        let modes_before = self.modes;
        let claimed_before = self.claimed.clone();

        self.scopes.push(BTreeSet::new());
        let then_block = self.block_body()?;
        self.expect(Tok::RBrace, "'}'")?;
        self.scopes.pop();
        let then_modes = std::mem::replace(&mut self.modes, modes_before);
        let then_claimed = std::mem::replace(&mut self.claimed, claimed_before);

        let else_block = if self.is_keyword("else") {
            self.bump();
            self.expect(Tok::LBrace, "'{'")?;
            self.scopes.push(BTreeSet::new());
            let block = self.block_body()?;
            self.expect(Tok::RBrace, "'}'")?;
            self.scopes.pop();
            Some(block)
        } else {
            None
        };
        if self.modes != then_modes {
            return Err(validation(
                span,
                format!(
                    "branches of this if end with different mode counts ({then_modes} and {})",
                    self.modes
                ),
            ));
        }
        self.claimed.extend(then_claimed);
        self.depth -= 1;
        self.end_of_statement()?;
        Ok(Statement::If {
            condition,
            then_block,
            else_block,
        })
    }

    fn integer(&mut self, what: &str) -> Result<(usize, Span), ParseError> {
        match self.bump() {
            (Tok::Int(n), span) => usize::try_from(n)
                .map(|n| (n, span))
                .map_err(|_| validation(span, "integer out of range")),
            (other, span) => Err(syntax(span, format!("unexpected {}", other.describe()), &[what])),
        }
    }

    fn mode_index(&mut self) -> Result<usize, ParseError> {
        let (tok, span) = (self.peek().clone(), self.span());
        self.mode_index_from(tok, span)
    }

    fn mode_index_from(&mut self, tok: Tok, span: Span) -> Result<usize, ParseError> {
        self.bump();
        let Tok::Int(n) = tok else {
            return Err(syntax(span, format!("unexpected {}", tok.describe()), &["mode index"]));
        };
        match usize::try_from(n) {
            Ok(m) if m < self.modes => Ok(m),
            _ => Err(validation(
                span,
                format!("mode {n} out of range: {} modes are live here", self.modes),
            )),
        }
    }

    fn identifier(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        match self.bump() {
            (Tok::Ident(name), span) => {
                if KEYWORDS.contains(&name.as_str()) || Func::from_name(&name).is_some() {
                    return Err(validation(span, format!("'{name}' is reserved")));
                }
                Ok((name, span))
            }
            (other, span) => Err(syntax(span, format!("unexpected {}", other.describe()), &[what])),
        }
    }

    fn condition(&mut self) -> Result<Condition, ParseError> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::EqEq => CmpOp::Eq,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Err(self.unexpected(&["'<'", "'<='", "'=='", "'>'", "'>='"])),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Condition { lhs, op, rhs })
    }

    fn starts_expr(&self) -> bool {
        match self.peek() {
            Tok::Int(_) | Tok::Num(_) | Tok::LParen | Tok::Minus => true,
            Tok::Ident(name) => !KEYWORDS.contains(&name.as_str()) || name == "pi",
            _ => false,
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            self.enter()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let (tok, span) = self.bump();
        match tok {
            Tok::Int(n) => Ok(Expr::Num(n as f64)),
            Tok::Num(x) => Ok(Expr::Num(x)),
            Tok::LParen => {
                self.enter()?;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                self.depth -= 1;
                Ok(inner)
            }
            Tok::Ident(name) if name == "pi" => Ok(Expr::Pi),
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Tok::LParen, "'('")?;
                    self.enter()?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "')'")?;
                    self.depth -= 1;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                if KEYWORDS.contains(&name.as_str()) {
                    return Err(syntax(span, format!("unexpected '{name}'"), &["expression"]));
                }
                let bound = self.params.contains(&name) || self.scopes.iter().any(|s| s.contains(&name));
                // A bound name before '(' is a γ followed by a parenthesized χ.
                if !bound && *self.peek() == Tok::LParen {
                    return Err(validation(span, format!("unknown function '{name}'")));
                }
                if bound {
                    Ok(Expr::Var(name))
                } else if self.claimed.contains(&name) {
                    Err(validation(span, format!("register {name} is not visible here")))
                } else {
                    Err(validation(
                        span,
                        format!("{name} is read before it is written"),
                    ))
                }
            }
            other => Err(syntax(span, format!("unexpected {}", other.describe()), &["expression"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(src: &str) -> ParseError {
        parse(src).unwrap_err()
    }

    #[test]
    fn minimal_program() {
        let p = parse("modes 2\n").unwrap();
        assert_eq!(p.mode_count, 2);
        assert!(p.statements.is_empty());
    }

    #[test]
    fn missing_angle_points_at_newline() {
        let e = err("modes 3\nbs 1 2\nps 0 1\n");
        assert_eq!(e.kind, ParseErrorKind::Syntax);
        assert_eq!((e.span.line, e.span.column, e.span.offset), (2, 7, 14));
        assert_eq!(e.expected, vec!["expression"]);
    }

    #[test]
    fn duplicate_register() {
        let e = err("modes 4\ndetect 3 -> l\ndetect 3 -> l\n");
        assert_eq!(e.kind, ParseErrorKind::Validation);
        assert_eq!(e.message, "register l written twice");
        assert_eq!(e.span.line, 3);
    }

    #[test]
    fn read_before_write_and_range() {
        assert_eq!(err("modes 2\nps 0 k\n").kind, ParseErrorKind::Validation);
        assert_eq!(err("modes 2\nps 2 1\n").kind, ParseErrorKind::Validation);
        assert!(parse("modes 2\nvacuum 1\nps 2 1\n").is_ok());
    }

    #[test]
    fn arms_must_agree_on_modes() {
        let e = err("modes 2\ndetect 0 -> a\nif a > 0 {\n vacuum 1\n}\n");
        assert!(e.message.contains("different mode counts"));
        assert!(parse("modes 2\ndetect 0 -> a\nif a > 0 {\n vacuum 1\n} else {\n vacuum 1\n}\nps 2 a\n").is_ok());
    }

    #[test]
    fn arm_registers_are_scoped() {
        let src = "modes 2\ndetect 0 -> a\nif a > 0 {\n detect 1 -> b\n ps 1 b\n} else {\n detect 1 -> b\n}\n";
        assert!(parse(src).is_ok());
        let e = err(&format!("{src}ps 0 b\n"));
        assert!(e.message.contains("not visible"));
        let e = err(&format!("{src}detect 1 -> b\n"));
        assert_eq!(e.message, "register b written twice");
    }

    #[test]
    fn sym_sugar_and_chi() {
        let p = parse("modes 2\nbs 0 1 pi/4 @sym\nbs 0 1 pi/4 (-pi/2)\nbs 0 1 pi/4 -pi/2\n").unwrap();
        assert!(matches!(p.statements[0], Statement::Bs { chi: Chi::Symmetric, .. }));
        assert!(matches!(p.statements[1], Statement::Bs { chi: Chi::Expr(_), .. }));
        // Without parentheses the minus continues the γ expression.
        assert!(matches!(p.statements[2], Statement::Bs { chi: Chi::Zero, .. }));
        assert_eq!(parse(&p.pretty()).unwrap(), p);
    }

    #[test]
    fn precedence() {
        let p = parse("modes 1\nparam a = 1 - 2 - 3 * 4 / -2\n").unwrap();
        let v = p.params[0].default.as_ref().unwrap().eval(&|_| None).unwrap();
        assert_eq!(v, 1.0 - 2.0 - 3.0 * 4.0 / -2.0);
    }

    #[test]
    fn pretty_round_trip() {
        let src = "# c\nmodes 2\nparam f = 1e-3\nparam g = -(f + 2) * 3\nvacuum 1\nbs 0 2 arcsin(sqrt(f)) @sym\ndetect 2 -> k\nif k >= 1 {\n  ps 1 pi / (k + 1)\n} else {\n  discard_if g < 0\n}\nunreachable\n";
        let p = parse(src).unwrap();
        let again = parse(&p.pretty()).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn deep_nesting_is_rejected() {
        let src = format!("modes 1\nparam a = {}1{}\n", "(".repeat(200), ")".repeat(200));
        assert_eq!(err(&src).kind, ParseErrorKind::Syntax);
    }

    #[test]
    fn bad_characters_and_numbers() {
        assert_eq!(err("modes 1\nps 0 1.\n").kind, ParseErrorKind::Syntax);
        assert_eq!(err("modes 1\nps 0 1e999\n").kind, ParseErrorKind::Syntax);
        assert_eq!(err("modes 1\nps 0 $\n").kind, ParseErrorKind::Syntax);
        assert_eq!(err("").expected, vec!["'modes'"]);
    }
}

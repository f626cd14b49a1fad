//! Recursive-descent parser producing [`SourceModule`]s.
//!
//! Binary operators use precedence climbing over the table in
//! [`BinOp::precedence`]. The `<` token is ambiguous between a comparison and
//! the start of a template application (`foldP<uint32, pinState>(...)`); after
//! a name the parser tries a template application first and backtracks when it
//! does not close, or when the closing `>` is followed by something that starts
//! a new operand.

use std::sync::Arc;

use crate::diagnostics::{Diagnostic, Span};
use crate::frontend::ast::*;
use crate::frontend::lexer::{Token, TokenKind};

type PResult<T> = Result<T, Diagnostic>;

pub struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    eof: Span,
    /// Tokens overwritten while splitting `>>>` into single `>`s, so that a
    /// failed speculative parse can restore them.
    splits: Vec<(usize, Token)>,
}

/// Parses one module from a token stream. Reports the first error of each
/// declaration, resynchronizing at the next declaration keyword.
pub fn parse_module(tokens: Vec<Token>, file: &str) -> Result<SourceModule, Vec<Diagnostic>> {
    let eof = match tokens.last() {
        Some(t) => {
            Span::new(t.span.file.clone(), t.span.offset + t.span.len, 0, t.span.line, t.span.col + t.span.len as u32)
        }
        None => Span::new(Arc::from(file), 0, 0, 1, 1),
    };
    let mut p = Parser { tokens, pos: 0, eof, splits: Vec::new() };
    p.module()
}

/// Parses a standalone expression; used by tests and tooling.
pub fn parse_expr(tokens: Vec<Token>, file: &str) -> PResult<Expr> {
    let eof = Span::new(Arc::from(file), 0, 0, 1, 1);
    let mut p = Parser { tokens, pos: 0, eof, splits: Vec::new() };
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(Diagnostic::error(t.span.clone(), format!("unexpected `{}` after expression", t.text)));
    }
    Ok(e)
}

const DECL_KEYWORDS: &[&str] = &["open", "export", "include", "type", "let", "fun"];

impl Parser {
    // ---- token plumbing -------------------------------------------------

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_n(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n)
    }

    fn at(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(text))
    }

    fn at_n(&self, n: usize, text: &str) -> bool {
        self.peek_n(n).is_some_and(|t| t.is(text))
    }

    fn at_kind(&self, kind: TokenKind) -> bool {
        self.peek().is_some_and(|t| t.kind == kind)
    }

    fn kind_n(&self, n: usize) -> Option<TokenKind> {
        self.peek_n(n).map(|t| t.kind)
    }

    fn span(&self) -> Span {
        self.peek().map_or_else(|| self.eof.clone(), |t| t.span.clone())
    }

    fn prev_span(&self) -> Span {
        self.pos.checked_sub(1).and_then(|i| self.tokens.get(i)).map_or_else(|| self.eof.clone(), |t| t.span.clone())
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        self.pos += 1;
        t
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.at(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => format!("`{}`", t.text),
            None => "end of file".to_string(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> Diagnostic {
        let list = match expected {
            [one] => one.to_string(),
            [init @ .., last] => format!("{} or {}", init.join(", "), last),
            [] => "more input".to_string(),
        };
        Diagnostic::error(self.span(), format!("expected {list}, found {}", self.found()))
    }

    fn expect(&mut self, text: &str) -> PResult<Span> {
        if self.at(text) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[&format!("`{text}`")]))
        }
    }

    fn expect_close(&mut self, close: &str, open: &Span) -> PResult<Span> {
        if self.at(close) {
            return Ok(self.bump().span);
        }
        let opener = match close {
            ")" => "(",
            "]" => "[",
            "}" => "{",
            _ => close,
        };
        Err(Diagnostic::error(
            self.span(),
            format!(
                "expected `{close}` to close `{opener}` opened at {}:{}, found {}",
                open.line,
                open.col,
                self.found()
            ),
        ))
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                let t = self.bump();
                Ok(Ident::new(t.text, t.span))
            }
            Some(t) if t.kind == TokenKind::Keyword => {
                Err(Diagnostic::error(t.span.clone(), format!("expected an identifier, found keyword `{}`", t.text)))
            }
            _ => Err(self.unexpected(&["an identifier"])),
        }
    }

    fn checkpoint(&self) -> (usize, usize) {
        (self.pos, self.splits.len())
    }

    fn rollback(&mut self, cp: (usize, usize)) {
        while self.splits.len() > cp.1 {
            let (i, tok) = self.splits.pop().expect("split log entry");
            self.tokens[i] = tok;
        }
        self.pos = cp.0;
    }

    /// Consumes one `>`, splitting a `>>>` token when nested template
    /// applications close together.
    fn close_angle(&mut self) -> PResult<()> {
        let Some(t) = self.peek() else {
            return Err(self.unexpected(&["`>`"]));
        };
        if t.is(">") {
            self.pos += 1;
            return Ok(());
        }
        if t.is(">>>") {
            let original = t.clone();
            let mut rest = original.clone();
            rest.text = ">>".to_string();
            rest.span = Span::new(t.span.file.clone(), t.span.offset + 1, 2, t.span.line, t.span.col + 1);
            // `>>` is not an operator; the next close_angle sees it as text
            // starting with `>` and splits again.
            self.splits.push((self.pos, original));
            self.tokens[self.pos] = rest;
            return Ok(());
        }
        if t.kind == TokenKind::Op && t.text == ">>" {
            let original = t.clone();
            let mut rest = original.clone();
            rest.text = ">".to_string();
            rest.span = Span::new(t.span.file.clone(), t.span.offset + 1, 1, t.span.line, t.span.col + 1);
            self.splits.push((self.pos, original));
            self.tokens[self.pos] = rest;
            return Ok(());
        }
        Err(self.unexpected(&["`>`"]))
    }

    fn at_close_angle(&self) -> bool {
        self.peek().is_some_and(|t| t.kind == TokenKind::Op && matches!(t.text.as_str(), ">" | ">>" | ">>>"))
    }

    fn at_decl_start(&self) -> bool {
        self.peek().is_some_and(|t| t.kind == TokenKind::Keyword && DECL_KEYWORDS.contains(&t.text.as_str()))
    }

    fn resync(&mut self) {
        if self.pos < self.tokens.len() {
            self.pos += 1;
        }
        while let Some(t) = self.peek() {
            let decl_kw = t.kind == TokenKind::Keyword && DECL_KEYWORDS.contains(&t.text.as_str());
            if decl_kw && (t.text != "let" || t.span.col == 1) {
                break;
            }
            self.pos += 1;
        }
    }

    // ---- module and declarations ---------------------------------------

    fn module(&mut self) -> Result<SourceModule, Vec<Diagnostic>> {
        let start = self.span();
        if !self.at("module") {
            return Err(vec![Diagnostic::error(
                start,
                format!("expected `module <name>` header, found {}", self.found()),
            )]);
        }
        self.bump();
        let name = self.ident().map_err(|d| vec![d])?;
        let mut decls = Vec::new();
        let mut diags = Vec::new();
        while let Some(t) = self.peek() {
            if t.is("module") {
                diags.push(
                    Diagnostic::error(t.span.clone(), "a source file holds exactly one module")
                        .with_hint("move the second module into its own `.jun` file"),
                );
                break;
            }
            if !self.at_decl_start() {
                diags.push(self.unexpected(&["a declaration (`open`, `export`, `include`, `type`, `let` or `fun`)"]));
                self.resync();
                continue;
            }
            match self.decl() {
                Ok(d) => decls.push(d),
                Err(d) => {
                    diags.push(d);
                    self.resync();
                }
            }
        }
        if diags.is_empty() {
            let span = start.to(&self.prev_span());
            Ok(SourceModule { name, decls, span })
        } else {
            Err(diags)
        }
    }

    fn decl(&mut self) -> PResult<Decl> {
        let start = self.span();
        let kw = self.bump();
        let kind = match kw.text.as_str() {
            "open" => DeclKind::Open(self.paren_ident_list()?),
            "export" => DeclKind::Export(self.paren_ident_list()?),
            "include" => {
                let open = self.expect("(")?;
                let mut headers = Vec::new();
                if !self.at(")") {
                    loop {
                        match self.peek() {
                            Some(t) if t.kind == TokenKind::Str => {
                                let t = self.bump();
                                headers.push(unescape(&t.text[1..t.text.len() - 1]));
                            }
                            _ => return Err(self.unexpected(&["a header string"])),
                        }
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect_close(")", &open)?;
                DeclKind::Include(headers)
            }
            "type" => self.type_decl()?,
            "let" => {
                let name = self.ident()?;
                self.expect(":")?;
                let ty = self.ty()?;
                self.expect("=")?;
                let value = self.expr()?;
                DeclKind::Let(LetDecl { name, ty, value })
            }
            "fun" => {
                let name = self.ident()?;
                let template = if self.at("<") { Some(self.template_dec()?) } else { None };
                let params = self.params()?;
                self.expect(":")?;
                let ret = self.ty()?;
                self.expect("=")?;
                let body = self.expr()?;
                DeclKind::Function(FunDecl { name, template, params, ret, body })
            }
            _ => unreachable!("at_decl_start checked"),
        };
        Ok(Decl { kind, span: start.to(&self.prev_span()) })
    }

    fn paren_ident_list(&mut self) -> PResult<Vec<Ident>> {
        let open = self.expect("(")?;
        let mut out = Vec::new();
        if !self.at(")") {
            loop {
                out.push(self.ident()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect_close(")", &open)?;
        Ok(out)
    }

    fn type_decl(&mut self) -> PResult<DeclKind> {
        let name = self.ident()?;
        let template = if self.at("<") { Some(self.template_dec()?) } else { None };
        self.expect("=")?;
        if self.at("{") {
            let open = self.bump().span;
            let mut fields = Vec::new();
            if !self.at("}") {
                loop {
                    let f = self.ident()?;
                    self.expect(":")?;
                    fields.push((f, self.ty()?));
                    if !self.eat(";") {
                        break;
                    }
                }
            }
            self.expect_close("}", &open)?;
            return Ok(DeclKind::Record(RecordDecl { name, template, fields }));
        }
        self.eat("|");
        let mut ctors = Vec::new();
        loop {
            let cname = self.ident()?;
            let payload = if self.eat("of") { Some(self.ty()?) } else { None };
            ctors.push(ValueCtor { name: cname, payload });
            if !self.eat("|") {
                break;
            }
        }
        Ok(DeclKind::Adt(AdtDecl { name, template, ctors }))
    }

    fn template_dec(&mut self) -> PResult<TemplateDec> {
        self.expect("<")?;
        let mut dec = TemplateDec::default();
        if self.at_kind(TokenKind::TyVar) {
            loop {
                match self.peek() {
                    Some(t) if t.kind == TokenKind::TyVar => {
                        let t = self.bump();
                        dec.type_vars.push(Ident::new(&t.text[1..], t.span));
                    }
                    _ => {
                        return Err(Diagnostic::error(
                            self.span(),
                            format!("malformed template declaration: expected a type variable, found {}", self.found()),
                        ))
                    }
                }
                if !self.eat(",") {
                    break;
                }
            }
        }
        if self.eat(";") {
            loop {
                dec.cap_vars.push(self.ident().map_err(|d| {
                    Diagnostic::error(d.span, "malformed template declaration: expected a capacity variable")
                })?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        if !self.at_close_angle() {
            return Err(Diagnostic::error(
                self.span(),
                format!("malformed template declaration: expected `,`, `;` or `>`, found {}", self.found()),
            )
            .with_hint("type variables come first and start with `'`; capacity variables follow a `;`"));
        }
        self.close_angle()?;
        Ok(dec)
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        let open = self.expect("(")?;
        let mut params = Vec::new();
        if !self.at(")") {
            loop {
                let name = self.ident()?;
                self.expect(":")?;
                params.push(Param { name, ty: self.ty()? });
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect_close(")", &open)?;
        Ok(params)
    }

    // ---- types ------------------------------------------------------------

    pub(crate) fn ty(&mut self) -> PResult<TypeExpr> {
        let mut t = self.ty_atom()?;
        loop {
            if self.at("ref") {
                let end = self.bump().span;
                let span = t.span.to(&end);
                t = TypeExpr { kind: TypeExprKind::Ref(Box::new(t)), span };
            } else if self.at("[") {
                let open = self.bump().span;
                let cap = self.cap_expr()?;
                let end = self.expect_close("]", &open)?;
                let span = t.span.to(&end);
                t = TypeExpr { kind: TypeExprKind::Array(Box::new(t), cap), span };
            } else {
                return Ok(t);
            }
        }
    }

    fn ty_atom(&mut self) -> PResult<TypeExpr> {
        let start = self.span();
        match self.peek() {
            Some(t) if t.kind == TokenKind::TyVar => {
                let t = self.bump();
                Ok(TypeExpr { kind: TypeExprKind::Var(Ident::new(&t.text[1..], t.span.clone())), span: t.span })
            }
            Some(t) if t.is("(") => {
                let open = self.bump().span;
                if self.at(")") {
                    self.bump();
                    self.expect("->")?;
                    let ret = self.ty()?;
                    let span = start.to(&ret.span);
                    return Ok(TypeExpr { kind: TypeExprKind::Fun(Vec::new(), Box::new(ret)), span });
                }
                let first = self.ty()?;
                if self.at("*") {
                    let mut elems = vec![first];
                    while self.eat("*") {
                        elems.push(self.ty()?);
                    }
                    let end = self.expect_close(")", &open)?;
                    return Ok(TypeExpr { kind: TypeExprKind::Tuple(elems), span: start.to(&end) });
                }
                let mut params = vec![first];
                while self.eat(",") {
                    params.push(self.ty()?);
                }
                self.expect_close(")", &open)?;
                if self.eat("->") {
                    let ret = self.ty()?;
                    let span = start.to(&ret.span);
                    return Ok(TypeExpr { kind: TypeExprKind::Fun(params, Box::new(ret)), span });
                }
                if params.len() == 1 {
                    let mut inner = params.pop().expect("one element");
                    inner.span = start.to(&self.prev_span());
                    return Ok(inner);
                }
                Err(self.unexpected(&["`->` after a parameter type list"]))
            }
            Some(t) if t.kind == TokenKind::Ident => {
                let r = self.decl_ref()?;
                let apply = if self.at("<") { Some(self.template_apply()?) } else { None };
                Ok(TypeExpr { kind: TypeExprKind::Named(r, apply), span: start.to(&self.prev_span()) })
            }
            _ => Err(self.unexpected(&["a type"])),
        }
    }

    fn decl_ref(&mut self) -> PResult<DeclRef> {
        let first = self.ident()?;
        if self.at(":") && self.kind_n(1) == Some(TokenKind::Ident) {
            self.bump();
            let second = self.ident()?;
            return Ok(DeclRef::Qualified(first, second));
        }
        Ok(DeclRef::Local(first))
    }

    pub(crate) fn template_apply(&mut self) -> PResult<TemplateApply> {
        self.expect("<")?;
        let mut apply = TemplateApply::default();
        if !self.at(";") && !self.at_close_angle() {
            loop {
                apply.types.push(self.ty()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        if self.eat(";") {
            loop {
                apply.caps.push(self.cap_expr()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.close_angle()?;
        Ok(apply)
    }

    fn cap_expr(&mut self) -> PResult<CapExpr> {
        self.cap_binary(1)
    }

    fn cap_binary(&mut self, min_prec: u8) -> PResult<CapExpr> {
        let mut lhs = self.cap_atom()?;
        loop {
            let op = match self.peek() {
                Some(t) if t.is("+") => CapOp::Add,
                Some(t) if t.is("-") => CapOp::Sub,
                Some(t) if t.is("*") => CapOp::Mul,
                Some(t) if t.is("/") => CapOp::Div,
                _ => return Ok(lhs),
            };
            if op.precedence() < min_prec {
                return Ok(lhs);
            }
            self.bump();
            let rhs = self.cap_binary(op.precedence() + 1)?;
            let span = lhs.span.to(&rhs.span);
            lhs = CapExpr { kind: CapExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span };
        }
    }

    fn cap_atom(&mut self) -> PResult<CapExpr> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Int => {
                let t = self.bump();
                let v = parse_int(&t.text)
                    .and_then(|v| u64::try_from(v).ok())
                    .ok_or_else(|| Diagnostic::error(t.span.clone(), "capacity literal out of range"))?;
                Ok(CapExpr { kind: CapExprKind::Int(v), span: t.span })
            }
            Some(t) if t.kind == TokenKind::Ident => {
                let t = self.bump();
                Ok(CapExpr { kind: CapExprKind::Var(Ident::new(t.text, t.span.clone())), span: t.span })
            }
            Some(t) if t.is("(") => {
                let open = self.bump().span;
                let mut inner = self.cap_expr()?;
                let end = self.expect_close(")", &open)?;
                inner.span = open.to(&end);
                Ok(inner)
            }
            _ => Err(self.unexpected(&["a capacity expression"])),
        }
    }

    // ---- expressions ------------------------------------------------------

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        crate::deep(|| self.binary(1))
    }

    fn binop_here(&self) -> Option<BinOp> {
        let t = self.peek()?;
        match t.kind {
            TokenKind::Op | TokenKind::Keyword => BinOp::from_symbol(&t.text),
            _ => None,
        }
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.prefix()?;
        while let Some(op) = self.binop_here() {
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            let span = lhs.span.to(&rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> PResult<Expr> {
        let start = self.span();
        let wrap = |kind: fn(Box<Expr>) -> ExprKind, inner: Expr| {
            let span = start.to(&inner.span);
            Expr::new(kind(Box::new(inner)), span)
        };
        if self.eat("not") {
            let inner = self.prefix()?;
            return Ok(wrap(ExprKind::Not, inner));
        }
        if self.eat("~~~") {
            let inner = self.prefix()?;
            return Ok(wrap(ExprKind::BitNot, inner));
        }
        if self.eat("!") {
            let inner = self.prefix()?;
            return Ok(wrap(ExprKind::Deref, inner));
        }
        if self.eat("ref") {
            let inner = self.prefix()?;
            return Ok(wrap(ExprKind::Ref, inner));
        }
        if self.at("-") && matches!(self.kind_n(1), Some(TokenKind::Int | TokenKind::Float)) {
            self.bump();
            let lit = self.literal(true, &start)?;
            return self.postfix(lit);
        }
        let e = self.primary()?;
        self.postfix(e)
    }

    fn literal(&mut self, negative: bool, start: &Span) -> PResult<Expr> {
        let t = self.bump();
        let span = start.to(&t.span);
        match t.kind {
            TokenKind::Int => {
                let v =
                    parse_int(&t.text).ok_or_else(|| Diagnostic::error(t.span.clone(), "integer literal too large"))?;
                Ok(Expr::new(ExprKind::Int(if negative { -v } else { v }), span))
            }
            TokenKind::Float => {
                let v: f64 =
                    t.text.parse().map_err(|_| Diagnostic::error(t.span.clone(), "malformed float literal"))?;
                Ok(Expr::new(ExprKind::Float(if negative { -v } else { v }), span))
            }
            _ => unreachable!("caller checked literal kind"),
        }
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        loop {
            if self.at("(") {
                let open = self.bump().span;
                let mut args = Vec::new();
                if !self.at(")") {
                    loop {
                        args.push(self.expr()?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                let end = self.expect_close(")", &open)?;
                let span = e.span.to(&end);
                e = Expr::new(ExprKind::Call(Box::new(e), args), span);
            } else if self.at("[") {
                let open = self.bump().span;
                let idx = self.expr()?;
                let end = self.expect_close("]", &open)?;
                let span = e.span.to(&end);
                e = Expr::new(ExprKind::Index(Box::new(e), Box::new(idx)), span);
            } else if self.at(".") {
                self.bump();
                let field = self.ident()?;
                let span = e.span.to(&field.span);
                e = Expr::new(ExprKind::Field(Box::new(e), field), span);
            } else {
                return Ok(e);
            }
        }
    }

    /// Template application after a name in expression position, or `None`
    /// when the `<` is a comparison.
    fn try_expr_template_apply(&mut self) -> Option<TemplateApply> {
        let cp = self.checkpoint();
        match self.template_apply() {
            Ok(apply) if !self.starts_operand() => Some(apply),
            _ => {
                self.rollback(cp);
                None
            }
        }
    }

    fn starts_operand(&self) -> bool {
        match self.peek() {
            Some(t) => match t.kind {
                TokenKind::Ident
                | TokenKind::TyVar
                | TokenKind::Int
                | TokenKind::Float
                | TokenKind::Str
                | TokenKind::Inline => true,
                // Keywords such as `let`, `do` and `while` also follow whole
                // expressions, so they never force the comparison reading.
                _ => false,
            },
            None => false,
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        let Some(tok) = self.peek() else {
            return Err(self.unexpected(&["an expression"]));
        };
        match tok.kind {
            TokenKind::Int | TokenKind::Float => return self.literal(false, &start),
            TokenKind::Inline => {
                let t = self.bump();
                let body = t.inline_body().expect("inline token").to_string();
                return Ok(Expr::new(ExprKind::Inline(body), t.span));
            }
            TokenKind::Ident => return self.name_expr(),
            _ => {}
        }
        let text = tok.text.clone();
        let kind = match text.as_str() {
            "(" => return self.paren_expr(),
            "true" => {
                self.bump();
                ExprKind::True
            }
            "false" => {
                self.bump();
                ExprKind::False
            }
            "null" => {
                self.bump();
                ExprKind::Null
            }
            "if" => {
                self.bump();
                let mut branches = Vec::new();
                let cond = self.expr()?;
                self.expect("then")?;
                branches.push((cond, self.expr()?));
                while self.eat("elif") {
                    let cond = self.expr()?;
                    self.expect("then")?;
                    branches.push((cond, self.expr()?));
                }
                self.expect("else")?;
                let otherwise = Box::new(self.expr()?);
                self.expect("end")?;
                ExprKind::If { branches, otherwise }
            }
            "let" => {
                self.bump();
                let pat = self.pattern()?;
                self.expect("=")?;
                let value = self.expr()?;
                let span = start.to(&value.span);
                return Ok(Expr::new(ExprKind::Let(Box::new(pat), Box::new(value)), span));
            }
            "set" => {
                self.bump();
                let is_ref = self.eat("ref");
                let target = self.left_assign()?;
                self.expect("=")?;
                let value = self.expr()?;
                let span = start.to(&value.span);
                let kind = if is_ref {
                    ExprKind::SetRef(target, Box::new(value))
                } else {
                    ExprKind::Set(target, Box::new(value))
                };
                return Ok(Expr::new(kind, span));
            }
            "for" => {
                self.bump();
                let var = self.ident()?;
                self.expect(":")?;
                let ty = self.ty()?;
                self.expect("in")?;
                let start_e = self.expr()?;
                let direction = if self.eat("to") {
                    ForDirection::Up
                } else if self.eat("downto") {
                    ForDirection::Down
                } else {
                    return Err(self.unexpected(&["`to`", "`downto`"]));
                };
                let end_e = self.expr()?;
                self.expect("do")?;
                let body = self.expr()?;
                self.expect("end")?;
                ExprKind::For {
                    var,
                    ty,
                    start: Box::new(start_e),
                    end: Box::new(end_e),
                    direction,
                    body: Box::new(body),
                }
            }
            "do" => {
                self.bump();
                let body = self.expr()?;
                self.expect("while")?;
                let cond = self.expr()?;
                self.expect("end")?;
                ExprKind::DoWhile(Box::new(body), Box::new(cond))
            }
            "while" => {
                self.bump();
                let cond = self.expr()?;
                self.expect("do")?;
                let body = self.expr()?;
                self.expect("end")?;
                ExprKind::While(Box::new(cond), Box::new(body))
            }
            "fn" => {
                self.bump();
                let params = self.params()?;
                self.expect(":")?;
                let ret = self.ty()?;
                self.expect("->")?;
                let body = self.expr()?;
                let span = start.to(&body.span);
                return Ok(Expr::new(ExprKind::Lambda { params, ret, body: Box::new(body) }, span));
            }
            "case" => {
                self.bump();
                let scrutinee = self.expr()?;
                self.expect("of")?;
                self.expect("|")?;
                let mut clauses = Vec::new();
                loop {
                    let pattern = self.pattern()?;
                    self.expect("=>")?;
                    let body = self.expr()?;
                    clauses.push(CaseClause { pattern, body });
                    if !self.eat("|") {
                        break;
                    }
                }
                self.expect("end")?;
                ExprKind::Case(Box::new(scrutinee), clauses)
            }
            "[" => {
                let open = self.bump().span;
                let mut elems = vec![self.expr()?];
                while self.eat(",") {
                    elems.push(self.expr()?);
                }
                self.expect_close("]", &open)?;
                ExprKind::Array(elems)
            }
            "array" => {
                self.bump();
                let ty = self.ty()?;
                if self.eat("of") {
                    let fill = self.expr()?;
                    self.expect("end")?;
                    ExprKind::ArrayOf(ty, Box::new(fill))
                } else {
                    self.expect("end")?;
                    ExprKind::ArrayEmpty(ty)
                }
            }
            _ => return Err(self.unexpected(&["an expression"])),
        };
        Ok(Expr::new(kind, start.to(&self.prev_span())))
    }

    fn paren_expr(&mut self) -> PResult<Expr> {
        let open = self.bump().span;
        if self.at(")") {
            let end = self.bump().span;
            return Ok(Expr::new(ExprKind::Unit, open.to(&end)));
        }
        let first = self.expr()?;
        if self.at(";") {
            let mut elems = vec![first];
            while self.eat(";") {
                elems.push(self.expr()?);
            }
            let end = self.expect_close(")", &open)?;
            return Ok(Expr::new(ExprKind::Seq(elems), open.to(&end)));
        }
        if self.at(",") {
            let mut elems = vec![first];
            while self.eat(",") {
                elems.push(self.expr()?);
            }
            let end = self.expect_close(")", &open)?;
            return Ok(Expr::new(ExprKind::Tuple(elems), open.to(&end)));
        }
        self.expect_close(")", &open)?;
        Ok(first)
    }

    fn name_expr(&mut self) -> PResult<Expr> {
        let start = self.span();
        let r = self.decl_ref()?;
        let apply = if self.at("<") { self.try_expr_template_apply() } else { None };
        if self.at("{") {
            let open = self.bump().span;
            let mut fields = Vec::new();
            if !self.at("}") {
                loop {
                    let f = self.ident()?;
                    self.expect("=")?;
                    fields.push((f, self.expr()?));
                    if !self.eat(";") {
                        break;
                    }
                }
            }
            let end = self.expect_close("}", &open)?;
            return Ok(Expr::new(ExprKind::Record { ty: r, apply, fields }, start.to(&end)));
        }
        let span = start.to(&self.prev_span());
        let kind = match (r, apply) {
            (r, Some(apply)) => ExprKind::TemplateRef(r, apply),
            (DeclRef::Local(n), None) => ExprKind::Var(n),
            (DeclRef::Qualified(m, n), None) => ExprKind::Qualified(m, n),
        };
        Ok(Expr::new(kind, span))
    }

    fn left_assign(&mut self) -> PResult<LeftAssign> {
        let start = self.span();
        let mut la = match self.decl_ref()? {
            DeclRef::Local(n) => LeftAssign { span: n.span.clone(), kind: LeftAssignKind::Var(n) },
            DeclRef::Qualified(m, n) => LeftAssign { span: m.span.to(&n.span), kind: LeftAssignKind::Qualified(m, n) },
        };
        loop {
            if self.at("[") {
                let open = self.bump().span;
                let idx = self.expr()?;
                let end = self.expect_close("]", &open)?;
                la = LeftAssign { kind: LeftAssignKind::Index(Box::new(la), Box::new(idx)), span: start.to(&end) };
            } else if self.at(".") {
                self.bump();
                let f = self.ident()?;
                let span = start.to(&f.span);
                la = LeftAssign { kind: LeftAssignKind::Field(Box::new(la), f), span };
            } else {
                return Ok(la);
            }
        }
    }

    // ---- patterns ---------------------------------------------------------

    pub(crate) fn pattern(&mut self) -> PResult<Pattern> {
        let start = self.span();
        let Some(tok) = self.peek() else {
            return Err(self.unexpected(&["a pattern"]));
        };
        if tok.is("_") {
            self.bump();
            return Ok(Pattern { kind: PatternKind::Wildcard, span: start });
        }
        if tok.is("mutable") {
            self.bump();
            let name = self.ident()?;
            let ty = if self.eat(":") { Some(self.ty()?) } else { None };
            return Ok(Pattern {
                kind: PatternKind::Var { mutable: true, name, ty },
                span: start.to(&self.prev_span()),
            });
        }
        let negative = tok.is("-") && matches!(self.kind_n(1), Some(TokenKind::Int | TokenKind::Float));
        if negative {
            self.bump();
        }
        match self.peek().map(|t| t.kind) {
            Some(TokenKind::Int | TokenKind::Float) => {
                let lit = self.literal(negative, &start)?;
                let kind = match lit.kind {
                    ExprKind::Int(v) => PatternKind::Int(v),
                    ExprKind::Float(v) => PatternKind::Float(v),
                    _ => unreachable!(),
                };
                return Ok(Pattern { kind, span: lit.span });
            }
            _ if negative => return Err(self.unexpected(&["a number"])),
            _ => {}
        }
        if self.at("(") {
            let open = self.bump().span;
            let mut elems = vec![self.pattern()?];
            if !self.at(",") {
                return Err(self.unexpected(&["`,` (tuple patterns need at least two elements)"]));
            }
            while self.eat(",") {
                elems.push(self.pattern()?);
            }
            let end = self.expect_close(")", &open)?;
            return Ok(Pattern { kind: PatternKind::Tuple(elems), span: open.to(&end) });
        }
        if !self.at_kind(TokenKind::Ident) {
            return Err(self.unexpected(&["a pattern"]));
        }

        // `x : T` is a typed variable while `M:c(...)` is a qualified constructor.
        let qualified_ctor = self.at_n(1, ":")
            && self.kind_n(2) == Some(TokenKind::Ident)
            && (self.at_n(3, "(") || self.at_n(3, "{") || (self.at_n(3, "<") && self.qualified_apply_follows()));
        let structured =
            qualified_ctor || (!self.at_n(1, ":") && (self.at_n(1, "(") || self.at_n(1, "{") || self.at_n(1, "<")));
        if !structured {
            let name = self.ident()?;
            let ty = if self.eat(":") { Some(self.ty()?) } else { None };
            return Ok(Pattern {
                kind: PatternKind::Var { mutable: false, name, ty },
                span: start.to(&self.prev_span()),
            });
        }
        let r = self.decl_ref()?;
        let apply = if self.at("<") { Some(self.template_apply()?) } else { None };
        if self.at("{") {
            let open = self.bump().span;
            let ty_span = start.to(&self.prev_span());
            let mut fields = Vec::new();
            if !self.at("}") {
                loop {
                    let f = self.ident()?;
                    self.expect("=")?;
                    fields.push((f, self.pattern()?));
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            let end = self.expect_close("}", &open)?;
            let ty = TypeExpr { kind: TypeExprKind::Named(r, apply), span: ty_span };
            return Ok(Pattern { kind: PatternKind::Record { ty, fields }, span: start.to(&end) });
        }
        let open = self.expect("(")?;
        let inner = if self.at(")") { None } else { Some(Box::new(self.pattern()?)) };
        let end = self.expect_close(")", &open)?;
        Ok(Pattern { kind: PatternKind::Ctor { ctor: r, apply, inner }, span: start.to(&end) })
    }

    /// With the cursor on `M : c <`, decides whether a template application
    /// followed by `(` or `{` comes next.
    fn qualified_apply_follows(&mut self) -> bool {
        let cp = self.checkpoint();
        self.pos += 3;
        let ok = self.template_apply().is_ok() && (self.at("(") || self.at("{"));
        self.rollback(cp);
        ok
    }
}

fn parse_int(text: &str) -> Option<i128> {
    match text.strip_prefix("0x") {
        Some(hex) => i128::from_str_radix(hex, 16).ok(),
        None => text.parse().ok(),
    }
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::lexer::tokenize;

    fn module(src: &str) -> SourceModule {
        parse_module(tokenize(src, "t.jun").unwrap(), "t.jun").unwrap_or_else(|d| panic!("{d:?}"))
    }

    fn expr(src: &str) -> Expr {
        parse_expr(tokenize(src, "t.jun").unwrap(), "t.jun").unwrap_or_else(|d| panic!("{d:?}"))
    }

    fn module_err(src: &str) -> Vec<Diagnostic> {
        parse_module(tokenize(src, "t.jun").unwrap(), "t.jun").unwrap_err()
    }

    #[test]
    fn minimal_module() {
        let m = module("module M");
        assert_eq!(m.name.name, "M");
        assert!(m.decls.is_empty());
    }

    #[test]
    fn sig_adt_declaration() {
        let m = module("module Prelude\ntype sig<'a> = signal of maybe<'a>");
        let DeclKind::Adt(adt) = &m.decls[0].kind else { panic!() };
        assert_eq!(adt.name.name, "sig");
        let tdec = adt.template.as_ref().unwrap();
        assert_eq!(tdec.type_vars.iter().map(|v| v.name.as_str()).collect::<Vec<_>>(), ["a"]);
        assert_eq!(adt.ctors.len(), 1);
        assert_eq!(adt.ctors[0].name.name, "signal");
        let TypeExprKind::Named(DeclRef::Local(n), Some(apply)) = &adt.ctors[0].payload.as_ref().unwrap().kind else {
            panic!()
        };
        assert_eq!(n.name, "maybe");
        assert!(matches!(&apply.types[0].kind, TypeExprKind::Var(v) if v.name == "a"));
    }

    #[test]
    fn precedence_table() {
        // `*` over `+`, `+` over comparisons, comparisons over `==`, `and` over `or`.
        let e = expr("a + b * c < d == e and f or g");
        let ExprKind::Binary(BinOp::Or, lhs, _) = &e.kind else { panic!("{e:?}") };
        let ExprKind::Binary(BinOp::And, lhs, _) = &lhs.kind else { panic!() };
        let ExprKind::Binary(BinOp::Eq, lhs, _) = &lhs.kind else { panic!() };
        let ExprKind::Binary(BinOp::Lt, lhs, _) = &lhs.kind else { panic!() };
        let ExprKind::Binary(BinOp::Add, _, rhs) = &lhs.kind else { panic!() };
        assert!(matches!(rhs.kind, ExprKind::Binary(BinOp::Mul, _, _)));
        // left associativity
        let e = expr("a - b - c");
        let ExprKind::Binary(BinOp::Sub, lhs, _) = &e.kind else { panic!() };
        assert!(matches!(lhs.kind, ExprKind::Binary(BinOp::Sub, _, _)));
        // unary binds tightest
        let e = expr("!timeRemaining <= 0");
        assert!(matches!(&e.kind, ExprKind::Binary(BinOp::Le, l, _) if matches!(l.kind, ExprKind::Deref(_))));
        // shifts over &&& over |||
        let e = expr("a ||| b &&& c <<< d");
        let ExprKind::Binary(BinOp::BitOr, _, rhs) = &e.kind else { panic!() };
        assert!(
            matches!(&rhs.kind, ExprKind::Binary(BinOp::BitAnd, _, r) if matches!(r.kind, ExprKind::Binary(BinOp::Shl, _, _)))
        );
    }

    #[test]
    fn qualifier_binds_tighter_than_call() {
        let e = expr("Time:every(1000, tState)");
        let ExprKind::Call(callee, args) = &e.kind else { panic!() };
        assert!(matches!(&callee.kind, ExprKind::Qualified(m, n) if m.name == "Time" && n.name == "every"));
        assert_eq!(args.len(), 2);
    }

    #[test]
    fn template_application_versus_comparison() {
        let e = expr("Signal:foldP<uint32, pinState>(f, s, t)");
        let ExprKind::Call(callee, _) = &e.kind else { panic!() };
        assert!(matches!(&callee.kind, ExprKind::TemplateRef(DeclRef::Qualified(..), a) if a.types.len() == 2));
        assert!(matches!(expr("a < b").kind, ExprKind::Binary(BinOp::Lt, _, _)));
        assert!(matches!(expr("a < b > c").kind, ExprKind::Binary(BinOp::Gt, _, _)));
        let nested = expr("signal<maybe<sig<'a>>>(x)");
        let ExprKind::Call(callee, _) = &nested.kind else { panic!("{nested:?}") };
        assert!(matches!(callee.kind, ExprKind::TemplateRef(..)));
    }

    #[test]
    fn parens_group_sequence_and_tuple() {
        assert!(matches!(expr("(a)").kind, ExprKind::Var(_)));
        assert!(matches!(expr("(a; b)").kind, ExprKind::Seq(ref v) if v.len() == 2));
        assert!(matches!(expr("(a, b, c)").kind, ExprKind::Tuple(ref v) if v.len() == 3));
        assert!(matches!(expr("()").kind, ExprKind::Unit));
    }

    #[test]
    fn patterns_disambiguate_typed_variables() {
        let p = |src: &str| {
            let mut parser =
                Parser { tokens: tokenize(src, "t").unwrap(), pos: 0, eof: Span::default(), splits: vec![] };
            parser.pattern().unwrap()
        };
        assert!(matches!(p("x : int32").kind, PatternKind::Var { ref ty, .. } if ty.is_some()));
        assert!(matches!(p("x : sig<int32>").kind, PatternKind::Var { .. }));
        assert!(matches!(p("Io:low()").kind, PatternKind::Ctor { inner: None, .. }));
        assert!(matches!(p("Io:just<int32>(v)").kind, PatternKind::Ctor { inner: Some(_), .. }));
        assert!(matches!(p("signal<'a>(just<'a>(val))").kind, PatternKind::Ctor { .. }));
        assert!(matches!(p("(flipUp(), setting())").kind, PatternKind::Tuple(ref v) if v.len() == 2));
        assert!(matches!(p("timerState{lastPulse = t}").kind, PatternKind::Record { .. }));
        assert!(matches!(p("-3").kind, PatternKind::Int(-3)));
        assert!(matches!(p("mutable x").kind, PatternKind::Var { mutable: true, .. }));
    }

    #[test]
    fn trailing_content_is_an_error() {
        let d = module_err("module M\nlet x : int32 = 1\n)");
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("expected a declaration"), "{}", d[0].message);
    }

    #[test]
    fn unbalanced_delimiters_name_the_opener() {
        let d = module_err("module M\nfun f() : int32 = (1; 2\nfun g() : unit = ()");
        assert!(d[0].message.contains("to close `(` opened at 2:19"), "{}", d[0].message);
    }

    #[test]
    fn malformed_template_declaration() {
        let d = module_err("module M\nfun f<'a; n, 'b>() : unit = ()");
        assert!(d[0].message.contains("malformed template declaration"), "{}", d[0].message);
    }

    #[test]
    fn resynchronizes_at_declarations() {
        let d = module_err("module M\nlet x : int32 = )\nlet y : = 2\nfun ok() : unit = ()");
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].span.line, 2);
        assert_eq!(d[1].span.line, 3);
    }

    #[test]
    fn second_module_header_rejected() {
        let d = module_err("module A\nmodule B");
        assert!(d[0].message.contains("exactly one module"));
    }

    #[test]
    fn include_headers_are_unescaped() {
        let m = module(r#"module M include("<FastLED.h>", "\"local.h\"")"#);
        assert_eq!(m.decls[0].kind, DeclKind::Include(vec!["<FastLED.h>".into(), "\"local.h\"".into()]));
    }

    #[test]
    fn types_with_postfix_and_functions() {
        let mut parser = Parser {
            tokens: tokenize("((int32) -> unit) ref", "t").unwrap(),
            pos: 0,
            eof: Span::default(),
            splits: vec![],
        };
        let t = parser.ty().unwrap();
        let TypeExprKind::Ref(inner) = &t.kind else { panic!() };
        assert!(matches!(inner.kind, TypeExprKind::Fun(ref ps, _) if ps.len() == 1));
        let mut parser = Parser {
            tokens: tokenize("(mode * pinState) ref", "t").unwrap(),
            pos: 0,
            eof: Span::default(),
            splits: vec![],
        };
        assert!(matches!(parser.ty().unwrap().kind, TypeExprKind::Ref(_)));
        let mut parser =
            Parser { tokens: tokenize("'a[n + 1]", "t").unwrap(), pos: 0, eof: Span::default(), splits: vec![] };
        assert!(matches!(parser.ty().unwrap().kind, TypeExprKind::Array(_, _)));
    }
}

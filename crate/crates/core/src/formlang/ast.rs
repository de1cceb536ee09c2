use std::fmt;

/// 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "**",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Number(f64),
    Str(String),
    Name(String),
    Call {
        func: String,
        args: Vec<Expr>,
    },
    Index {
        base: Box<Expr>,
        indices: Vec<Expr>,
    },
    /// `base.dx(direction)`
    Derivative {
        base: Box<Expr>,
        direction: Box<Expr>,
    },
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span }
    }

    /// Resets every span, leaving only the tree structure.
    pub fn strip_spans(&mut self) {
        self.span = Span::default();
        match &mut self.kind {
            ExprKind::Number(_) | ExprKind::Str(_) | ExprKind::Name(_) => {}
            ExprKind::Call { args, .. } => args.iter_mut().for_each(Expr::strip_spans),
            ExprKind::Index { base, indices } => {
                base.strip_spans();
                indices.iter_mut().for_each(Expr::strip_spans);
            }
            ExprKind::Derivative { base, direction } => {
                base.strip_spans();
                direction.strip_spans();
            }
            ExprKind::Neg(e) => e.strip_spans(),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.strip_spans();
                rhs.strip_spans();
            }
        }
    }

    /// Calls `f` on every name and callee in the tree.
    pub fn visit_names(&self, f: &mut impl FnMut(&str, Span)) {
        match &self.kind {
            ExprKind::Number(_) | ExprKind::Str(_) => {}
            ExprKind::Name(n) => f(n, self.span),
            ExprKind::Call { func, args } => {
                f(func, self.span);
                args.iter().for_each(|a| a.visit_names(f));
            }
            ExprKind::Index { base, indices } => {
                base.visit_names(f);
                indices.iter().for_each(|a| a.visit_names(f));
            }
            ExprKind::Derivative { base, direction } => {
                base.visit_names(f);
                direction.visit_names(f);
            }
            ExprKind::Neg(e) => e.visit_names(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.visit_names(f);
                rhs.visit_names(f);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statement {
    pub name: String,
    pub span: Span,
    pub value: Expr,
}

/// A parsed form file: assignments in source order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FormAst {
    pub statements: Vec<Statement>,
}

impl FormAst {
    pub fn statement(&self, name: &str) -> Option<&Statement> {
        self.statements.iter().find(|s| s.name == name)
    }

    pub fn strip_spans(&mut self) {
        for s in &mut self.statements {
            s.span = Span::default();
            s.value.strip_spans();
        }
    }

    /// Names of statements that define forms, i.e. that mention a measure
    /// directly or through an earlier form.
    pub fn form_names(&self) -> Vec<String> {
        let mut forms: Vec<String> = Vec::new();
        for s in &self.statements {
            let mut is_form = false;
            s.value.visit_names(&mut |n, _| {
                if matches!(n, "dx" | "ds" | "dS") || forms.iter().any(|f| f == n) {
                    is_form = true;
                }
            });
            if is_form {
                forms.push(s.name.clone());
            }
        }
        forms
    }
}

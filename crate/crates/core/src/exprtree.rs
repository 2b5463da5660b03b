//! Expression-tree genotype.
//!
//! A tree is stored as a flat vector of nodes in prefix (pre-order) order, so
//! every subtree occupies a contiguous slice. All function symbols are binary,
//! which makes `size = 2 * internal + 1` for every well-formed tree.
//!
//! Text format (prefix notation, whitespace separated):
//!
//! ```text
//! expr     := terminal | "(" op expr expr ")"
//! op       := "+" | "-" | "*" | "/"
//! terminal := "sinhour" | "coshour" | "sinday" | "cosday" | "ssn" | number
//! ```
//!
//! Numbers are written in the shortest decimal form that parses back to the
//! identical `f64`, so `parse_prefix(to_prefix(t)) == t` holds exactly.

use std::fmt;

use rand::Rng;
use thiserror::Error;

/// Number of model inputs.
pub const NUM_VARS: usize = 5;

/// Canonical variable names, indexed by `Terminal::Var`.
pub const VAR_NAMES: [&str; NUM_VARS] = ["sinhour", "coshour", "sinday", "cosday", "ssn"];

/// One input vector, in `VAR_NAMES` order.
pub type Inputs = [f64; NUM_VARS];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Function {
    Add,
    Sub,
    Mul,
    /// Protected division: `a / 0 == 1`.
    Div,
}

impl Function {
    pub const ALL: [Function; 4] = [Function::Add, Function::Sub, Function::Mul, Function::Div];

    pub fn arity(self) -> usize {
        2
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Function::Add => "+",
            Function::Sub => "-",
            Function::Mul => "*",
            Function::Div => "/",
        }
    }

    fn from_symbol(s: &str) -> Option<Function> {
        Function::ALL.into_iter().find(|f| f.symbol() == s)
    }

    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Function::Add => a + b,
            Function::Sub => a - b,
            Function::Mul => a * b,
            Function::Div => {
                if b == 0.0 {
                    1.0
                } else {
                    a / b
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Terminal {
    Var(u8),
    Const(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Node {
    Func(Function),
    Term(Terminal),
}

impl Node {
    pub fn arity(self) -> usize {
        match self {
            Node::Func(f) => f.arity(),
            Node::Term(_) => 0,
        }
    }
}

/// The primitive language: the four arithmetic operators, the five inputs,
/// and optionally ephemeral random constants drawn uniformly from a range.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PrimitiveSet {
    pub constants: Option<(f64, f64)>,
}

impl PrimitiveSet {
    pub fn with_constants(lo: f64, hi: f64) -> Self {
        PrimitiveSet {
            constants: Some((lo, hi)),
        }
    }

    /// Terminal slots seen by the generators: the variables plus one slot
    /// for constants when enabled.
    pub fn terminal_slots(&self) -> usize {
        NUM_VARS + usize::from(self.constants.is_some())
    }

    /// Probability of choosing a function while growing above the depth limit.
    pub fn function_probability(&self) -> f64 {
        let f = Function::ALL.len() as f64;
        f / (f + self.terminal_slots() as f64)
    }

    pub fn random_function<R: Rng + ?Sized>(&self, rng: &mut R) -> Function {
        Function::ALL[rng.gen_range(0..Function::ALL.len())]
    }

    pub fn random_constant<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        self.constants.map(|(lo, hi)| rng.gen_range(lo..=hi))
    }

    pub fn random_terminal<R: Rng + ?Sized>(&self, rng: &mut R) -> Terminal {
        let slot = rng.gen_range(0..self.terminal_slots());
        if slot < NUM_VARS {
            Terminal::Var(slot as u8)
        } else {
            Terminal::Const(self.random_constant(rng).expect("constant slot exists"))
        }
    }
}

/// An immutable expression tree in prefix order.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprTree {
    nodes: Vec<Node>,
}

impl ExprTree {
    /// Builds a tree from prefix-ordered nodes, checking well-formedness.
    pub fn from_prefix_nodes(nodes: Vec<Node>) -> Result<Self, ParseError> {
        let mut need = 1usize;
        for (i, node) in nodes.iter().enumerate() {
            if need == 0 {
                return Err(ParseError::new(i, ParseErrorKind::TrailingTokens));
            }
            if let Node::Term(Terminal::Const(c)) = node {
                if !c.is_finite() {
                    return Err(ParseError::new(i, ParseErrorKind::NonFiniteConstant));
                }
            }
            if let Node::Term(Terminal::Var(v)) = node {
                if *v as usize >= NUM_VARS {
                    return Err(ParseError::new(i, ParseErrorKind::UnknownSymbol(format!("var{v}"))));
                }
            }
            need = need - 1 + node.arity();
        }
        if need != 0 {
            return Err(ParseError::new(nodes.len(), ParseErrorKind::UnexpectedEnd));
        }
        Ok(ExprTree { nodes })
    }

    pub(crate) fn from_nodes_unchecked(nodes: Vec<Node>) -> Self {
        debug_assert!(Self::from_prefix_nodes(nodes.clone()).is_ok());
        ExprTree { nodes }
    }

    pub fn var(index: usize) -> Self {
        assert!(index < NUM_VARS);
        ExprTree {
            nodes: vec![Node::Term(Terminal::Var(index as u8))],
        }
    }

    pub fn constant(value: f64) -> Self {
        assert!(value.is_finite());
        ExprTree {
            nodes: vec![Node::Term(Terminal::Const(value))],
        }
    }

    pub fn apply(f: Function, left: &ExprTree, right: &ExprTree) -> Self {
        let mut nodes = Vec::with_capacity(1 + left.size() + right.size());
        nodes.push(Node::Func(f));
        nodes.extend_from_slice(&left.nodes);
        nodes.extend_from_slice(&right.nodes);
        ExprTree { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Total node count.
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.node_depths().into_iter().max().unwrap_or(0)
    }

    /// Depth of every node, in prefix order.
    pub fn node_depths(&self) -> Vec<usize> {
        let mut depths = Vec::with_capacity(self.nodes.len());
        // (depth, remaining children) of open ancestors
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for node in &self.nodes {
            let d = stack.last().map_or(0, |&(d, _)| d + 1);
            depths.push(d);
            if let Some(top) = stack.last_mut() {
                top.1 -= 1;
            }
            if node.arity() > 0 {
                stack.push((d, node.arity()));
            }
            while matches!(stack.last(), Some(&(_, 0))) {
                stack.pop();
            }
        }
        depths
    }

    /// Exclusive end index of the subtree rooted at `start`.
    pub fn subtree_end(&self, start: usize) -> usize {
        let mut need = 1usize;
        let mut i = start;
        while need > 0 {
            need = need - 1 + self.nodes[i].arity();
            i += 1;
        }
        i
    }

    /// Returns a new tree with the subtree at `start` replaced by `replacement`.
    pub fn replace_subtree(&self, start: usize, replacement: &ExprTree) -> ExprTree {
        let end = self.subtree_end(start);
        let mut nodes = Vec::with_capacity(self.size() - (end - start) + replacement.size());
        nodes.extend_from_slice(&self.nodes[..start]);
        nodes.extend_from_slice(&replacement.nodes);
        nodes.extend_from_slice(&self.nodes[end..]);
        ExprTree { nodes }
    }

    /// Returns a new tree with the node at `index` swapped for `node` of the same arity.
    pub fn replace_node(&self, index: usize, node: Node) -> ExprTree {
        assert_eq!(self.nodes[index].arity(), node.arity());
        let mut nodes = self.nodes.clone();
        nodes[index] = node;
        ExprTree { nodes }
    }

    /// Evaluates the tree on one input vector.
    pub fn evaluate(&self, inputs: &Inputs) -> f64 {
        let mut stack: Vec<f64> = Vec::with_capacity(16);
        for node in self.nodes.iter().rev() {
            match *node {
                Node::Term(Terminal::Var(v)) => stack.push(inputs[v as usize]),
                Node::Term(Terminal::Const(c)) => stack.push(c),
                Node::Func(f) => {
                    let a = stack.pop().expect("well-formed tree");
                    let b = stack.pop().expect("well-formed tree");
                    stack.push(f.apply(a, b));
                }
            }
        }
        stack.pop().expect("non-empty tree")
    }

    /// Evaluates the tree on every row of a column-major input table.
    ///
    /// Produces exactly the values `evaluate` would produce row by row.
    pub fn evaluate_columns(&self, columns: [&[f64]; NUM_VARS]) -> Vec<f64> {
        let n = columns[0].len();
        debug_assert!(columns.iter().all(|c| c.len() == n));

        enum Val<'a> {
            Col(&'a [f64]),
            Owned(Vec<f64>),
            Scalar(f64),
        }

        #[inline]
        fn at(v: &Val<'_>, i: usize) -> f64 {
            match v {
                Val::Col(c) => c[i],
                Val::Scalar(s) => *s,
                Val::Owned(o) => o[i],
            }
        }

        let mut spare: Vec<Vec<f64>> = Vec::new();
        let mut stack: Vec<Val<'_>> = Vec::with_capacity(16);
        for node in self.nodes.iter().rev() {
            match *node {
                Node::Term(Terminal::Var(v)) => stack.push(Val::Col(columns[v as usize])),
                Node::Term(Terminal::Const(c)) => stack.push(Val::Scalar(c)),
                Node::Func(f) => {
                    let a = stack.pop().expect("well-formed tree");
                    let b = stack.pop().expect("well-formed tree");
                    let out = match (a, b) {
                        (Val::Scalar(x), Val::Scalar(y)) => Val::Scalar(f.apply(x, y)),
                        (Val::Owned(mut va), b) => {
                            for (i, x) in va.iter_mut().enumerate() {
                                *x = f.apply(*x, at(&b, i));
                            }
                            if let Val::Owned(vb) = b {
                                spare.push(vb);
                            }
                            Val::Owned(va)
                        }
                        (a, Val::Owned(mut vb)) => {
                            for (i, y) in vb.iter_mut().enumerate() {
                                *y = f.apply(at(&a, i), *y);
                            }
                            Val::Owned(vb)
                        }
                        (a, b) => {
                            let mut buf = spare.pop().unwrap_or_default();
                            buf.clear();
                            buf.extend((0..n).map(|i| f.apply(at(&a, i), at(&b, i))));
                            Val::Owned(buf)
                        }
                    };
                    stack.push(out);
                }
            }
        }

        match stack.pop().expect("non-empty tree") {
            Val::Col(c) => c.to_vec(),
            Val::Owned(o) => o,
            Val::Scalar(s) => vec![s; n],
        }
    }

    /// Prefix notation with the canonical variable names.
    pub fn to_prefix(&self) -> String {
        self.to_prefix_with_names(&VAR_NAMES)
    }

    /// Prefix notation with caller-supplied variable names.
    pub fn to_prefix_with_names(&self, names: &[&str; NUM_VARS]) -> String {
        let mut out = String::with_capacity(self.nodes.len() * 6);
        let mut open: Vec<usize> = Vec::new();
        for node in &self.nodes {
            if matches!(open.last(), Some(&r) if r < 2) {
                out.push(' ');
            }
            match *node {
                Node::Func(f) => {
                    out.push('(');
                    out.push_str(f.symbol());
                    out.push(' ');
                }
                Node::Term(Terminal::Var(v)) => out.push_str(names[v as usize]),
                Node::Term(Terminal::Const(c)) => out.push_str(&format_constant(c)),
            }
            if let Some(top) = open.last_mut() {
                *top -= 1;
            }
            if node.arity() > 0 {
                open.push(node.arity());
            } else {
                while matches!(open.last(), Some(&0)) {
                    open.pop();
                    out.push(')');
                }
            }
        }
        out
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_prefix())
    }
}

impl std::str::FromStr for ExprTree {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_prefix(s)
    }
}

/// Shortest decimal that round-trips to the same `f64`.
fn format_constant(c: f64) -> String {
    format!("{c}")
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("at offset {position}: {kind}")]
pub struct ParseError {
    /// Byte offset into the input (or node index for `from_prefix_nodes`).
    pub position: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn new(position: usize, kind: ParseErrorKind) -> Self {
        ParseError { position, kind }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("operator `{op}` takes 2 operands, found {found}")]
    Arity { op: String, found: usize },
    #[error("expected an operator after `(`")]
    ExpectedOperator,
    #[error("unexpected `)`")]
    UnexpectedClose,
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("trailing tokens after expression")]
    TrailingTokens,
    #[error("constant is not finite")]
    NonFiniteConstant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(s: &str) -> Vec<(usize, Token<'_>)> {
    let mut tokens = Vec::new();
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'(' {
            tokens.push((i, Token::Open));
            i += 1;
        } else if c == b')' {
            tokens.push((i, Token::Close));
            i += 1;
        } else {
            let start = i;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'(' && bytes[i] != b')' {
                i += 1;
            }
            tokens.push((start, Token::Atom(&s[start..i])));
        }
    }
    tokens
}

fn parse_terminal(pos: usize, atom: &str) -> Result<Terminal, ParseError> {
    if let Some(v) = VAR_NAMES.iter().position(|&n| n == atom) {
        return Ok(Terminal::Var(v as u8));
    }
    let looks_numeric = atom
        .bytes()
        .next()
        .is_some_and(|b| b.is_ascii_digit() || b == b'-' || b == b'+' || b == b'.');
    match atom.parse::<f64>() {
        Ok(c) if looks_numeric && c.is_finite() => Ok(Terminal::Const(c)),
        Ok(_) if looks_numeric => Err(ParseError::new(pos, ParseErrorKind::NonFiniteConstant)),
        _ => Err(ParseError::new(pos, ParseErrorKind::UnknownSymbol(atom.to_string()))),
    }
}

/// Parses prefix notation into a tree.
pub fn parse_prefix(s: &str) -> Result<ExprTree, ParseError> {
    let tokens = tokenize(s);
    let mut nodes = Vec::new();
    let mut cursor = 0usize;
    parse_expr(&tokens, &mut cursor, &mut nodes, s.len())?;
    if let Some(&(pos, _)) = tokens.get(cursor) {
        return Err(ParseError::new(pos, ParseErrorKind::TrailingTokens));
    }
    Ok(ExprTree::from_nodes_unchecked(nodes))
}

fn parse_expr(
    tokens: &[(usize, Token<'_>)],
    cursor: &mut usize,
    nodes: &mut Vec<Node>,
    end: usize,
) -> Result<(), ParseError> {
    let Some(&(pos, tok)) = tokens.get(*cursor) else {
        return Err(ParseError::new(end, ParseErrorKind::UnexpectedEnd));
    };
    *cursor += 1;
    match tok {
        Token::Close => Err(ParseError::new(pos, ParseErrorKind::UnexpectedClose)),
        Token::Atom(a) => {
            if Function::from_symbol(a).is_some() {
                // Bare operator outside parentheses.
                return Err(ParseError::new(pos, ParseErrorKind::Arity { op: a.to_string(), found: 0 }));
            }
            nodes.push(Node::Term(parse_terminal(pos, a)?));
            Ok(())
        }
        Token::Open => {
            let Some(&(op_pos, op_tok)) = tokens.get(*cursor) else {
                return Err(ParseError::new(end, ParseErrorKind::UnexpectedEnd));
            };
            let f = match op_tok {
                Token::Atom(a) => Function::from_symbol(a).ok_or_else(|| {
                    if VAR_NAMES.contains(&a) || a.parse::<f64>().is_ok() {
                        ParseError::new(op_pos, ParseErrorKind::ExpectedOperator)
                    } else {
                        ParseError::new(op_pos, ParseErrorKind::UnknownSymbol(a.to_string()))
                    }
                })?,
                _ => return Err(ParseError::new(op_pos, ParseErrorKind::ExpectedOperator)),
            };
            *cursor += 1;
            nodes.push(Node::Func(f));
            let mut found = 0;
            loop {
                match tokens.get(*cursor) {
                    None => return Err(ParseError::new(end, ParseErrorKind::UnexpectedEnd)),
                    Some(&(close_pos, Token::Close)) => {
                        *cursor += 1;
                        if found != f.arity() {
                            return Err(ParseError::new(
                                close_pos,
                                ParseErrorKind::Arity { op: f.symbol().to_string(), found },
                            ));
                        }
                        return Ok(());
                    }
                    Some(&(p, _)) => {
                        if found == f.arity() {
                            // count the surplus operands for the message
                            let mut surplus = found;
                            let mut scratch = Vec::new();
                            while matches!(tokens.get(*cursor), Some((_, t)) if *t != Token::Close) {
                                if parse_expr(tokens, cursor, &mut scratch, end).is_err() {
                                    break;
                                }
                                surplus += 1;
                            }
                            return Err(ParseError::new(
                                p,
                                ParseErrorKind::Arity { op: f.symbol().to_string(), found: surplus },
                            ));
                        }
                        parse_expr(tokens, cursor, nodes, end)?;
                        found += 1;
                    }
                }
            }
        }
    }
}

/// Full method: every leaf at exactly `depth`.
pub fn generate_full<R: Rng + ?Sized>(rng: &mut R, depth: usize, pset: &PrimitiveSet) -> ExprTree {
    fn go<R: Rng + ?Sized>(rng: &mut R, depth: usize, pset: &PrimitiveSet, out: &mut Vec<Node>) {
        if depth == 0 {
            out.push(Node::Term(pset.random_terminal(rng)));
        } else {
            let f = pset.random_function(rng);
            out.push(Node::Func(f));
            for _ in 0..f.arity() {
                go(rng, depth - 1, pset, out);
            }
        }
    }
    let mut nodes = Vec::with_capacity((1usize << (depth.min(16) + 1)) - 1);
    go(rng, depth, pset, &mut nodes);
    ExprTree::from_nodes_unchecked(nodes)
}

/// Grow method: below `max_depth` each node is a function with probability
/// `|F| / (|F| + |T|)`, at `max_depth` always a terminal.
pub fn generate_grow<R: Rng + ?Sized>(rng: &mut R, max_depth: usize, pset: &PrimitiveSet) -> ExprTree {
    fn go<R: Rng + ?Sized>(rng: &mut R, remaining: usize, pset: &PrimitiveSet, p_func: f64, out: &mut Vec<Node>) {
        if remaining > 0 && rng.gen::<f64>() < p_func {
            let f = pset.random_function(rng);
            out.push(Node::Func(f));
            for _ in 0..f.arity() {
                go(rng, remaining - 1, pset, p_func, out);
            }
        } else {
            out.push(Node::Term(pset.random_terminal(rng)));
        }
    }
    let mut nodes = Vec::new();
    go(rng, max_depth, pset, pset.function_probability(), &mut nodes);
    ExprTree::from_nodes_unchecked(nodes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitMethod {
    Full,
    Grow,
}

/// The (depth, method) assignment ramped half-and-half uses for `count` trees.
///
/// Depths ramp over `min(2, max_depth)..=max_depth`. Each (depth, method) pair
/// gets `count / (2 * buckets)` trees; the remainder is dealt round-robin over
/// the order full-deepest .. full-shallowest, grow-deepest .. grow-shallowest.
pub fn ramp_plan(count: usize, max_depth: usize) -> Vec<(usize, InitMethod)> {
    assert!(max_depth >= 1, "ramped half-and-half needs max_depth >= 1");
    let lo = max_depth.min(2);
    let depths: Vec<usize> = (lo..=max_depth).rev().collect();
    let mut pairs: Vec<(usize, InitMethod)> = depths.iter().map(|&d| (d, InitMethod::Full)).collect();
    pairs.extend(depths.iter().map(|&d| (d, InitMethod::Grow)));
    let per_pair = count / pairs.len();
    let remainder = count % pairs.len();
    let mut plan = Vec::with_capacity(count);
    for (k, &pair) in pairs.iter().enumerate() {
        let n = per_pair + usize::from(k < remainder);
        plan.extend(std::iter::repeat_n(pair, n));
    }
    plan
}

/// Ramped half-and-half initialisation.
pub fn ramped_half_and_half<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    max_depth: usize,
    pset: &PrimitiveSet,
) -> Vec<ExprTree> {
    ramp_plan(count, max_depth)
        .into_iter()
        .map(|(depth, method)| match method {
            InitMethod::Full => generate_full(rng, depth, pset),
            InitMethod::Grow => generate_grow(rng, depth, pset),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn sample_tree() -> ExprTree {
        // (+ x (* 3 y)) with x = sinhour, y = coshour
        ExprTree::apply(
            Function::Add,
            &ExprTree::var(0),
            &ExprTree::apply(Function::Mul, &ExprTree::constant(3.0), &ExprTree::var(1)),
        )
    }

    #[test]
    fn full_tree_shapes() {
        let pset = PrimitiveSet::default();
        let t0 = generate_full(&mut rng(1), 0, &pset);
        assert_eq!(t0.size(), 1);
        assert_eq!(t0.depth(), 0);
        let t2 = generate_full(&mut rng(1), 2, &pset);
        assert_eq!(t2.size(), 7);
        let a = generate_full(&mut rng(42), 3, &pset);
        let b = generate_full(&mut rng(42), 3, &pset);
        assert_eq!(a.size(), 15);
        assert_eq!(a, b);
        // every leaf sits at the full depth
        let depths = a.node_depths();
        for (node, d) in a.nodes().iter().zip(depths) {
            if node.arity() == 0 {
                assert_eq!(d, 3);
            }
        }
    }

    #[test]
    fn grow_respects_depth_and_spreads() {
        let pset = PrimitiveSet::default();
        assert_eq!(generate_grow(&mut rng(3), 0, &pset).size(), 1);
        let mut seen = [false; 7];
        for seed in 0..1000 {
            let t = generate_grow(&mut rng(seed), 6, &pset);
            assert!(t.depth() <= 6);
            seen[t.depth()] = true;
        }
        assert!(seen[1..=6].iter().all(|&s| s), "{seen:?}");
    }

    #[test]
    fn ramp_bucket_counts() {
        let plan = ramp_plan(1000, 6);
        for d in 2..=6 {
            let n = plan.iter().filter(|p| p.0 == d).count();
            assert!((199..=201).contains(&n), "depth {d}: {n}");
            let full = plan.iter().filter(|p| p.0 == d && p.1 == InitMethod::Full).count();
            assert_eq!(full, n - full);
        }
        let trees = ramped_half_and_half(&mut rng(0), 10, 6, &PrimitiveSet::default());
        assert_eq!(trees.len(), 10);
        assert!(trees.iter().all(|t| t.depth() <= 6));

        assert_eq!(ramp_plan(2, 2), vec![(2, InitMethod::Full), (2, InitMethod::Grow)]);
        let two = ramped_half_and_half(&mut rng(5), 2, 2, &PrimitiveSet::default());
        assert_eq!(two[0].size(), 7);
        assert!(two[1].depth() <= 2);

        // odd remainders: deepest full first
        let plan7 = ramp_plan(7, 6);
        assert_eq!(plan7[0], (6, InitMethod::Full));
        assert_eq!(plan7[5], (6, InitMethod::Grow));
    }

    #[test]
    fn evaluation_examples() {
        let mut row = [0.0; NUM_VARS];
        row[0] = 0.5;
        assert_eq!(ExprTree::var(0).evaluate(&row), 0.5);

        let x = ExprTree::var(0);
        let div = ExprTree::apply(Function::Div, &x, &x);
        row[0] = 0.0;
        assert_eq!(div.evaluate(&row), 1.0);

        let t = sample_tree();
        let row = [2.0, 4.0, 0.0, 0.0, 0.0];
        assert_eq!(t.evaluate(&row), 14.0);
    }

    #[test]
    fn size_and_depth_examples() {
        assert_eq!(ExprTree::var(3).size(), 1);
        assert_eq!(ExprTree::var(3).depth(), 0);
        let xy = ExprTree::apply(Function::Add, &ExprTree::var(0), &ExprTree::var(1));
        assert_eq!(xy.depth(), 1);
        assert_eq!(sample_tree().size(), 5);
        assert_eq!(sample_tree().depth(), 2);
        assert_eq!(generate_full(&mut rng(9), 3, &PrimitiveSet::default()).size(), 15);
    }

    #[test]
    fn prefix_rendering() {
        assert_eq!(ExprTree::var(0).to_prefix(), "sinhour");
        assert_eq!(parse_prefix("sinhour").unwrap(), ExprTree::var(0));
        let names = ["x", "y", "c", "d", "e"];
        assert_eq!(sample_tree().to_prefix_with_names(&names), "(+ x (* 3 y))");
        assert_eq!(sample_tree().to_prefix(), "(+ sinhour (* 3 coshour))");
        let t = parse_prefix("  ( /   (- ssn 0.1) cosday )").unwrap();
        assert_eq!(t.to_prefix(), "(/ (- ssn 0.1) cosday)");
    }

    #[test]
    fn parse_errors() {
        let e = parse_prefix("(+ sinhour foo)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownSymbol("foo".into()));
        assert_eq!(e.position, 11);
        let e = parse_prefix("(+ sinhour)").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Arity { found: 1, .. }));
        let e = parse_prefix("(+ sinhour coshour ssn)").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Arity { found: 3, .. }));
        let e = parse_prefix("sinhour coshour").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::TrailingTokens);
        assert_eq!(e.position, 8);
        assert_eq!(parse_prefix("(+ sinhour").unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(parse_prefix("").unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(parse_prefix("(% a b)").unwrap_err().kind, ParseErrorKind::UnknownSymbol("%".into()));
        assert_eq!(parse_prefix("inf").unwrap_err().kind, ParseErrorKind::UnknownSymbol("inf".into()));
        assert_eq!(parse_prefix("1e999").unwrap_err().kind, ParseErrorKind::NonFiniteConstant);
        assert_eq!(parse_prefix(")").unwrap_err().kind, ParseErrorKind::UnexpectedClose);
    }

    #[test]
    fn constants_round_trip_exactly() {
        for c in [0.1, -2.5, 1.0 / 3.0, 4.999999999999999, -0.0, 1e-7, 123456.789] {
            let t = ExprTree::apply(Function::Sub, &ExprTree::constant(c), &ExprTree::var(4));
            let back = parse_prefix(&t.to_prefix()).unwrap();
            match back.nodes()[1] {
                Node::Term(Terminal::Const(v)) => assert_eq!(v.to_bits(), c.to_bits()),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn columns_match_rows() {
        let pset = PrimitiveSet::with_constants(-5.0, 5.0);
        let mut r = rng(11);
        let n = 37;
        let cols: Vec<Vec<f64>> = (0..NUM_VARS).map(|_| (0..n).map(|_| r.gen_range(-2.0..2.0)).collect()).collect();
        let refs = [&cols[0][..], &cols[1][..], &cols[2][..], &cols[3][..], &cols[4][..]];
        for seed in 0..300 {
            let t = generate_grow(&mut rng(seed), 6, &pset);
            let batch = t.evaluate_columns(refs);
            for i in 0..n {
                let row = [cols[0][i], cols[1][i], cols[2][i], cols[3][i], cols[4][i]];
                assert_eq!(batch[i].to_bits(), t.evaluate(&row).to_bits(), "{t}");
            }
        }
    }

    #[test]
    fn subtree_replacement() {
        let t = sample_tree();
        // node 2 is the `*` subtree
        assert_eq!(t.subtree_end(2), 5);
        let r = t.replace_subtree(2, &ExprTree::var(4));
        assert_eq!(r.to_prefix(), "(+ sinhour ssn)");
        assert_eq!(t.to_prefix(), "(+ sinhour (* 3 coshour))");
    }
}

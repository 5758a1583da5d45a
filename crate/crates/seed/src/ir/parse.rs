//! Line-oriented parser for textual LLVM IR.
//!
//! The parser works on logical lines (physical lines joined while brackets
//! remain open, so multi-line `switch` tables parse), strips comments and
//! metadata, and validates block structure as it goes. It never panics on
//! arbitrary input; every failure is a typed error with a 1-based line
//! number.

use std::collections::HashMap;

use super::{BasicBlock, InstKind, Instruction, IrFunction, Operand, Param, ParseError};

/// Integer/float binary arithmetic opcodes.
const BIN_OPS: &[&str] = &[
    "add", "fadd", "sub", "fsub", "mul", "fmul", "udiv", "sdiv", "fdiv", "urem", "srem", "frem",
];

/// Value conversion opcodes. The destination type becomes the instruction
/// dtype.
const CAST_OPS: &[&str] = &["trunc", "zext", "sext", "bitcast", "sitofp", "fptosi"];

/// Instruction flags that carry no operand information.
const FLAG_TOKENS: &[&str] = &[
    "nuw", "nsw", "exact", "fast", "nnan", "ninf", "nsz", "arcp", "contract", "afn", "reassoc",
    "inbounds", "inrange", "volatile", "disjoint", "nneg", "samesign",
];

/// Parameter attributes that may precede a value in an argument position.
const PARAM_ATTRS: &[&str] = &[
    "noundef", "nonnull", "noalias", "nocapture", "readonly", "readnone", "writeonly", "signext",
    "zeroext", "inreg", "immarg", "returned", "nest", "swiftself",
];

/// Attributes written with a parenthesized payload, e.g. `dereferenceable(8)`.
const PAREN_ATTRS: &[&str] = &["dereferenceable", "byval", "sret", "byref", "align"];

/// Recognized LLVM opcodes that are outside the supported subset. Listing
/// them keeps the error message honest (`unsupported instruction`) instead of
/// reporting malformed IR.
const KNOWN_UNSUPPORTED: &[&str] = &[
    "shl", "lshr", "ashr", "and", "or", "xor", "fneg", "extractelement", "insertelement",
    "shufflevector", "extractvalue", "insertvalue", "fence", "cmpxchg", "atomicrmw", "uitofp",
    "fptoui", "fpext", "fptrunc", "ptrtoint", "inttoptr", "addrspacecast", "freeze", "invoke",
    "callbr", "resume", "unreachable", "indirectbr", "landingpad", "catchswitch", "catchret",
    "cleanupret", "va_arg",
];

const ICMP_PREDS: &[&str] = &["eq", "ne", "ugt", "uge", "ult", "ule", "sgt", "sge", "slt", "sle"];
const FCMP_PREDS: &[&str] = &[
    "false", "oeq", "ogt", "oge", "olt", "ole", "one", "ord", "ueq", "ugt", "uge", "ult", "ule",
    "une", "uno", "true",
];

/// Parser behavior switches.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// When set, an unsupported instruction fails the whole parse instead of
    /// being skipped and reported.
    pub strict: bool,
}

/// An instruction dropped in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedInstruction {
    pub line: usize,
    pub opcode: String,
}

/// Result of parsing one module of textual IR.
#[derive(Debug, Clone, Default)]
pub struct ParsedModule {
    pub functions: Vec<IrFunction>,
    /// Unsupported instructions dropped in lenient mode, in source order.
    pub skipped: Vec<SkippedInstruction>,
}

/// Parse a whole module. Module-level constructs other than function
/// definitions (globals, declares, metadata, attribute groups) are ignored.
pub fn parse_module(source: &str, opts: ParseOptions) -> Result<ParsedModule, ParseError> {
    let mut lines = LogicalLines::new(source);
    let mut module = ParsedModule::default();
    while let Some((line_no, text)) = lines.next_line() {
        if let Some(rest) = text.strip_prefix("define") {
            if rest.starts_with(char::is_whitespace) {
                let func = parse_function(&text, line_no, &mut lines, opts, &mut module.skipped)?;
                module.functions.push(func);
            }
        }
        // Anything else at module level is not instruction text; skip it.
    }
    Ok(module)
}

/// Parse a single instruction line outside any function context. Operands
/// that name function parameters stay `Operand::Value` because there is no
/// parameter list to resolve against.
pub fn parse_instruction(line: &str) -> Result<Instruction, ParseError> {
    let text = strip_comment(line);
    let text = text.trim();
    if text.is_empty() {
        return Err(ParseError::malformed("empty instruction", 1));
    }
    parse_instruction_at(text, 1)
}

// ---------------------------------------------------------------------------
// Logical line scanning
// ---------------------------------------------------------------------------

struct LogicalLines<'a> {
    lines: std::vec::IntoIter<(usize, &'a str)>,
}

impl<'a> LogicalLines<'a> {
    fn new(source: &'a str) -> Self {
        let lines: Vec<(usize, &str)> = source.lines().enumerate().map(|(i, l)| (i + 1, l)).collect();
        LogicalLines { lines: lines.into_iter() }
    }

    /// Next non-empty logical line: comments stripped, trimmed, physical
    /// lines joined while brackets stay open (multi-line `switch` tables).
    fn next_line(&mut self) -> Option<(usize, String)> {
        loop {
            let (line_no, raw) = self.lines.next()?;
            let stripped = strip_comment(raw);
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let mut text = stripped.to_string();
            // A function header's trailing `{` opens the body, not a bracket
            // group, so it must not trigger joining.
            let is_define = text.starts_with("define");
            let mut depth = bracket_depth(&text) - if is_define && text.ends_with('{') { 1 } else { 0 };
            while depth > 0 {
                let Some((_, more)) = self.lines.next() else { break };
                let more = strip_comment(more);
                let more = more.trim();
                if more.is_empty() {
                    continue;
                }
                text.push(' ');
                text.push_str(more);
                depth += bracket_depth(more);
            }
            return Some((line_no, text));
        }
    }
}

/// Cut the line at the first `;` that sits outside a quoted string.
fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_str = !in_str,
            ';' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Net bracket depth change of `s`, ignoring brackets inside quoted strings.
fn bracket_depth(s: &str) -> i64 {
    let mut depth = 0i64;
    let mut in_str = false;
    for c in s.chars() {
        match c {
            '"' => in_str = !in_str,
            '(' | '[' | '{' | '<' if !in_str => depth += 1,
            ')' | ']' | '}' | '>' if !in_str => depth -= 1,
            _ => {}
        }
    }
    depth
}

/// Split on whitespace at bracket depth zero; bracketed groups keep their
/// inner spaces, so `[4 x i32]*` and `@f(i32 %x)` are single tokens.
fn tokenize(s: &str) -> Vec<String> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i64;
    let mut in_str = false;
    for c in s.chars() {
        if in_str {
            cur.push(c);
            if c == '"' {
                in_str = false;
            }
            continue;
        }
        match c {
            '"' => {
                in_str = true;
                cur.push(c);
            }
            '(' | '[' | '{' | '<' => {
                depth += 1;
                cur.push(c);
            }
            ')' | ']' | '}' | '>' => {
                depth -= 1;
                cur.push(c);
            }
            c if c.is_whitespace() && depth <= 0 => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
            }
            _ => cur.push(c),
        }
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    toks
}

/// Split on commas at bracket depth zero.
fn split_commas(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i64;
    let mut in_str = false;
    let mut start = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '"' => in_str = !in_str,
            '(' | '[' | '{' | '<' if !in_str => depth += 1,
            ')' | ']' | '}' | '>' if !in_str => depth -= 1,
            ',' if !in_str && depth <= 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(s[start..].trim());
    parts
}

/// Strip surrounding quotes from a `%"quoted name"` style identifier.
fn unquote(name: &str) -> String {
    let n = name.trim();
    if n.len() >= 2 && n.starts_with('"') && n.ends_with('"') {
        n[1..n.len() - 1].to_string()
    } else {
        n.to_string()
    }
}

fn is_flag(tok: &str) -> bool {
    FLAG_TOKENS.contains(&tok)
}

fn is_param_attr(tok: &str) -> bool {
    PARAM_ATTRS.contains(&tok)
        || PAREN_ATTRS
            .iter()
            .any(|a| tok == *a || (tok.starts_with(a) && tok[a.len()..].starts_with('(')))
}

// ---------------------------------------------------------------------------
// Function parsing
// ---------------------------------------------------------------------------

fn parse_function(
    header: &str,
    header_line: usize,
    lines: &mut LogicalLines,
    opts: ParseOptions,
    skipped: &mut Vec<SkippedInstruction>,
) -> Result<IrFunction, ParseError> {
    let (name, params) = parse_header(header, header_line)?;

    let mut blocks: Vec<BasicBlock> = Vec::new();
    let mut block_lines: Vec<usize> = Vec::new();
    // SSA definitions and label uses, tracked for validation.
    let mut defined: HashMap<String, usize> = HashMap::new();
    for p in &params {
        defined.insert(p.name.clone(), header_line);
    }
    let mut label_uses: Vec<(String, usize)> = Vec::new();
    let mut closed = false;

    while let Some((line_no, text)) = lines.next_line() {
        if text == "}" {
            closed = true;
            break;
        }
        if let Some(label) = block_label(&text) {
            if blocks.iter().any(|b| b.label == label) {
                return Err(ParseError::malformed(
                    format!("duplicate block label `{label}`"),
                    line_no,
                ));
            }
            if let Some(prev) = blocks.last() {
                if prev.instructions.is_empty() {
                    return Err(ParseError::malformed(
                        format!("block `{}` is empty", prev.label),
                        line_no,
                    ));
                }
            }
            blocks.push(BasicBlock { label, instructions: Vec::new() });
            block_lines.push(line_no);
            continue;
        }

        // Instruction line. The first block may start without a label.
        if blocks.is_empty() {
            blocks.push(BasicBlock { label: "entry".to_string(), instructions: Vec::new() });
            block_lines.push(line_no);
        }
        let inst = match parse_instruction_at(&text, line_no) {
            Ok(inst) => inst,
            Err(err @ ParseError::UnsupportedInstruction { .. }) if !opts.strict => {
                let ParseError::UnsupportedInstruction { opcode, line } = err else { unreachable!() };
                skipped.push(SkippedInstruction { line, opcode });
                continue;
            }
            Err(err) => return Err(err),
        };

        let block = blocks.last_mut().expect("block exists");
        if let Some(last) = block.instructions.last() {
            if matches!(last.kind, InstKind::Branch | InstKind::Return) {
                return Err(ParseError::malformed(
                    format!("instruction after terminator in block `{}`", block.label),
                    line_no,
                ));
            }
        }
        if let Some(res) = &inst.result {
            if let Some(first) = defined.insert(res.clone(), line_no) {
                return Err(ParseError::malformed(
                    format!("duplicate SSA name `%{res}` (first defined on line {first})"),
                    line_no,
                ));
            }
        }
        for target in inst.target_labels() {
            label_uses.push((target.to_string(), line_no));
        }
        if let InstKind::Operator = inst.kind {
            if inst.operands.is_empty() {
                return Err(ParseError::malformed(
                    format!("operator `{}` has no operands", inst.opcode),
                    line_no,
                ));
            }
        }
        block.instructions.push(inst);
    }

    if !closed {
        return Err(ParseError::malformed(
            format!("function `@{name}` is missing its closing `}}`"),
            header_line,
        ));
    }
    if blocks.is_empty() {
        return Err(ParseError::malformed(
            format!("function `@{name}` has no basic blocks"),
            header_line,
        ));
    }
    for (block, &line) in blocks.iter().zip(&block_lines) {
        match block.instructions.last() {
            None => {
                return Err(ParseError::malformed(format!("block `{}` is empty", block.label), line))
            }
            Some(last) if !matches!(last.kind, InstKind::Branch | InstKind::Return) => {
                return Err(ParseError::malformed(
                    format!("block `{}` does not end with a branch or return", block.label),
                    line,
                ));
            }
            _ => {}
        }
    }
    for (label, line) in &label_uses {
        if !blocks.iter().any(|b| &b.label == label) {
            return Err(ParseError::malformed(format!("branch to missing label `%{label}`"), *line));
        }
    }

    let mut func = IrFunction { name, params, blocks };
    resolve_inputs(&mut func);
    Ok(func)
}

/// Parse `define <attrs> <ret> @name(<params>) <attrs> {`.
fn parse_header(text: &str, line: usize) -> Result<(String, Vec<Param>), ParseError> {
    if !text.ends_with('{') {
        return Err(ParseError::malformed("expected `{` at end of function header", line));
    }
    let at = text
        .find('@')
        .ok_or_else(|| ParseError::malformed("function header has no `@name`", line))?;
    let rest = &text[at + 1..];
    let paren = rest
        .find('(')
        .ok_or_else(|| ParseError::malformed("function header has no parameter list", line))?;
    let name = unquote(&rest[..paren]);
    if name.is_empty() {
        return Err(ParseError::malformed("empty function name", line));
    }
    let after = &rest[paren..];
    let close = matching_paren(after)
        .ok_or_else(|| ParseError::malformed("unbalanced parameter list", line))?;
    let param_text = &after[1..close];

    let mut params = Vec::new();
    let mut unnamed = 0usize;
    if !param_text.trim().is_empty() {
        for part in split_commas(param_text) {
            if part.is_empty() || part == "..." {
                continue;
            }
            let toks: Vec<String> =
                tokenize(part).into_iter().filter(|t| !is_param_attr(t)).collect();
            if toks.is_empty() {
                return Err(ParseError::malformed(format!("bad parameter `{part}`"), line));
            }
            let (name, dtype_toks) = match toks.last() {
                Some(last) if last.starts_with('%') => {
                    (unquote(&last[1..]), &toks[..toks.len() - 1])
                }
                _ => {
                    // Unnamed parameters get their positional register name.
                    let n = unnamed.to_string();
                    unnamed += 1;
                    (n, &toks[..])
                }
            };
            if name.is_empty() || dtype_toks.is_empty() {
                return Err(ParseError::malformed(format!("bad parameter `{part}`"), line));
            }
            params.push(Param { name, dtype: dtype_toks.join(" ") });
        }
    }
    Ok((name, params))
}

/// Byte offset of the `)` matching the `(` that `s` starts with.
fn matching_paren(s: &str) -> Option<usize> {
    let mut depth = 0i64;
    let mut in_str = false;
    for (i, c) in s.char_indices() {
        match c {
            '"' => in_str = !in_str,
            '(' if !in_str => depth += 1,
            ')' if !in_str => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// `label:` lines introduce a new block.
fn block_label(text: &str) -> Option<String> {
    let stripped = text.strip_suffix(':')?;
    if stripped.is_empty() || stripped.contains(char::is_whitespace) {
        return None;
    }
    if stripped.starts_with('%') || stripped.starts_with('@') {
        return None;
    }
    Some(unquote(stripped))
}

/// Turn `Operand::Value` references to function parameters into
/// `Operand::Input`.
fn resolve_inputs(func: &mut IrFunction) {
    let params: std::collections::HashSet<String> =
        func.params.iter().map(|p| p.name.clone()).collect();
    for block in &mut func.blocks {
        for inst in &mut block.instructions {
            for op in &mut inst.operands {
                if let Operand::Value(name) = op {
                    if params.contains(name.as_str()) {
                        *op = Operand::Input(std::mem::take(name));
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Instruction parsing
// ---------------------------------------------------------------------------

fn parse_instruction_at(text: &str, line: usize) -> Result<Instruction, ParseError> {
    // Split off `%result = `.
    let (result, body) = match text.strip_prefix('%') {
        Some(rest) => {
            let eq = rest
                .find('=')
                .ok_or_else(|| ParseError::malformed("`%name` without `= <instruction>`", line))?;
            let name = unquote(rest[..eq].trim());
            if name.is_empty() {
                return Err(ParseError::malformed("empty result name", line));
            }
            (Some(name), rest[eq + 1..].trim())
        }
        None => (None, text),
    };
    if body.is_empty() {
        return Err(ParseError::malformed("missing instruction body", line));
    }

    // Drop trailing metadata/alignment/attribute-group segments.
    let segments: Vec<&str> = split_commas(body)
        .into_iter()
        .filter(|seg| {
            let first = seg.split_whitespace().next().unwrap_or("");
            !(first == "align" || first.starts_with('!') || first.starts_with('#'))
        })
        .collect();
    let body = segments.join(", ");
    let mut toks: Vec<String> =
        tokenize(&body).into_iter().filter(|t| !t.starts_with('#')).collect();
    if toks.is_empty() {
        return Err(ParseError::malformed("missing instruction body", line));
    }

    // `tail call`, `musttail call`, `notail call`.
    if matches!(toks[0].as_str(), "tail" | "musttail" | "notail") {
        toks.remove(0);
        if toks.first().map(String::as_str) != Some("call") {
            return Err(ParseError::malformed("`tail` without `call`", line));
        }
    }
    let opcode = toks[0].clone();
    let rest_toks: Vec<String> = toks[1..].iter().filter(|t| !is_flag(t)).cloned().collect();
    let rest = rest_toks.join(" ");

    let inst = if BIN_OPS.contains(&opcode.as_str()) {
        parse_binop(&opcode, &rest, line)?
    } else if opcode == "icmp" || opcode == "fcmp" {
        parse_cmp(&opcode, &rest_toks, line)?
    } else if CAST_OPS.contains(&opcode.as_str()) {
        parse_cast(&opcode, &rest, line)?
    } else if opcode == "alloca" {
        parse_alloca(&rest, line)?
    } else if opcode == "load" {
        parse_load(&rest, line)?
    } else if opcode == "store" {
        parse_store(&rest, line)?
    } else if opcode == "getelementptr" {
        parse_gep(&rest, line)?
    } else if opcode == "phi" {
        parse_phi(&rest, line)?
    } else if opcode == "select" {
        parse_select(&rest, line)?
    } else if opcode == "call" {
        parse_call(&rest_toks, line)?
    } else if opcode == "br" {
        parse_br(&rest, line)?
    } else if opcode == "ret" {
        parse_ret(&rest_toks, line)?
    } else if opcode == "switch" {
        parse_switch(&rest, line)?
    } else if KNOWN_UNSUPPORTED.contains(&opcode.as_str()) {
        return Err(ParseError::UnsupportedInstruction { opcode, line });
    } else {
        // Unknown word: treat as an unsupported opcode rather than malformed
        // so lenient parsing can skip dialect extensions.
        return Err(ParseError::UnsupportedInstruction { opcode, line });
    };
    if result.is_some() && matches!(inst.kind, InstKind::Branch | InstKind::Return) {
        return Err(ParseError::malformed("a terminator cannot define a value", line));
    }
    if result.is_some() && opcode == "store" {
        return Err(ParseError::malformed("`store` does not produce a value", line));
    }
    Ok(Instruction { result, ..inst })
}

/// Parse one value operand appearing under type `dtype`.
fn parse_operand(text: &str, dtype: &str, line: usize) -> Result<Operand, ParseError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(ParseError::malformed("empty operand", line));
    }
    if let Some(name) = t.strip_prefix('%') {
        let name = unquote(name);
        if name.is_empty() {
            return Err(ParseError::malformed("empty value name", line));
        }
        return Ok(Operand::Value(name));
    }
    // Globals, metadata references, and constant expressions (which always
    // reference globals) all collapse to the `@str` placeholder constant.
    if t.starts_with('@') || t.starts_with('!') || t.starts_with('$') || t.contains('(') {
        return Ok(Operand::Constant { literal: "@str".to_string(), dtype: dtype.to_string() });
    }
    Ok(Operand::Constant { literal: t.to_string(), dtype: dtype.to_string() })
}

/// Split `<type> <value>` where the type is the leading token group.
fn typed_operand(seg: &str, line: usize) -> Result<(String, String), ParseError> {
    let toks: Vec<String> = tokenize(seg).into_iter().filter(|t| !is_param_attr(t)).collect();
    if toks.len() < 2 {
        return Err(ParseError::malformed(format!("expected `<type> <value>` in `{seg}`"), line));
    }
    let dtype = toks[0].clone();
    let value = toks[1..].join(" ");
    Ok((dtype, value))
}

fn parse_binop(opcode: &str, rest: &str, line: usize) -> Result<Instruction, ParseError> {
    let segs = split_commas(rest);
    if segs.len() != 2 {
        return Err(ParseError::malformed(format!("`{opcode}` expects two operands"), line));
    }
    let (dtype, first) = typed_operand(segs[0], line)?;
    let a = parse_operand(&first, &dtype, line)?;
    let b = parse_operand(segs[1], &dtype, line)?;
    Ok(Instruction {
        kind: InstKind::Operator,
        opcode: opcode.to_string(),
        result: None,
        operands: vec![a, b],
        dtype: Some(dtype),
    })
}

fn parse_cmp(opcode: &str, rest_toks: &[String], line: usize) -> Result<Instruction, ParseError> {
    let Some(pred) = rest_toks.first() else {
        return Err(ParseError::malformed(format!("`{opcode}` is missing its predicate"), line));
    };
    let preds = if opcode == "icmp" { ICMP_PREDS } else { FCMP_PREDS };
    if !preds.contains(&pred.as_str()) {
        return Err(ParseError::malformed(format!("unknown {opcode} predicate `{pred}`"), line));
    }
    let rest = rest_toks[1..].join(" ");
    let segs = split_commas(&rest);
    if segs.len() != 2 {
        return Err(ParseError::malformed(format!("`{opcode}` expects two operands"), line));
    }
    let (dtype, first) = typed_operand(segs[0], line)?;
    let a = parse_operand(&first, &dtype, line)?;
    let b = parse_operand(segs[1], &dtype, line)?;
    Ok(Instruction {
        kind: InstKind::Operator,
        opcode: format!("{opcode}.{pred}"),
        result: None,
        operands: vec![a, b],
        dtype: Some(dtype),
    })
}

fn parse_cast(opcode: &str, rest: &str, line: usize) -> Result<Instruction, ParseError> {
    let Some(to) = rest.rfind(" to ") else {
        return Err(ParseError::malformed(format!("`{opcode}` is missing `to <type>`"), line));
    };
    let (src, dst) = (rest[..to].trim(), rest[to + 4..].trim());
    let (src_ty, value) = typed_operand(src, line)?;
    if dst.is_empty() {
        return Err(ParseError::malformed(format!("`{opcode}` is missing `to <type>`"), line));
    }
    let op = parse_operand(&value, &src_ty, line)?;
    Ok(Instruction {
        kind: InstKind::Operator,
        opcode: opcode.to_string(),
        result: None,
        operands: vec![op],
        dtype: Some(dst.to_string()),
    })
}

fn parse_alloca(rest: &str, line: usize) -> Result<Instruction, ParseError> {
    let segs = split_commas(rest);
    if segs.is_empty() || segs[0].is_empty() {
        return Err(ParseError::malformed("`alloca` is missing its type", line));
    }
    let dtype = segs[0].to_string();
    // Explicit element count, else the implicit single element.
    let count = if segs.len() >= 2 {
        let (cty, cval) = typed_operand(segs[1], line)?;
        parse_operand(&cval, &cty, line)?
    } else {
        Operand::Constant { literal: "1".to_string(), dtype: "i32".to_string() }
    };
    Ok(Instruction {
        kind: InstKind::Operator,
        opcode: "alloca".to_string(),
        result: None,
        operands: vec![count],
        dtype: Some(dtype),
    })
}

fn parse_load(rest: &str, line: usize) -> Result<Instruction, ParseError> {
    let segs = split_commas(rest);
    if segs.len() != 2 {
        return Err(ParseError::malformed("`load` expects `<type>, <type> <pointer>`", line));
    }
    let dtype = segs[0].to_string();
    let (pty, pval) = typed_operand(segs[1], line)?;
    let ptr = parse_operand(&pval, &pty, line)?;
    Ok(Instruction {
        kind: InstKind::Operator,
        opcode: "load".to_string(),
        result: None,
        operands: vec![ptr],
        dtype: Some(dtype),
    })
}

fn parse_store(rest: &str, line: usize) -> Result<Instruction, ParseError> {
    let segs = split_commas(rest);
    if segs.len() != 2 {
        return Err(ParseError::malformed("`store` expects `<type> <value>, <type> <pointer>`", line));
    }
    let (vty, vval) = typed_operand(segs[0], line)?;
    let value = parse_operand(&vval, &vty, line)?;
    let (pty, pval) = typed_operand(segs[1], line)?;
    let ptr = parse_operand(&pval, &pty, line)?;
    Ok(Instruction {
        kind: InstKind::Operator,
        opcode: "store".to_string(),
        result: None,
        operands: vec![value, ptr],
        dtype: Some(vty),
    })
}

fn parse_gep(rest: &str, line: usize) -> Result<Instruction, ParseError> {
    let segs = split_commas(rest);
    if segs.len() < 2 {
        return Err(ParseError::malformed(
            "`getelementptr` expects `<type>, <type> <pointer>, ...`",
            line,
        ));
    }
    let dtype = segs[0].to_string();
    if dtype.is_empty() {
        return Err(ParseError::malformed("`getelementptr` is missing its type", line));
    }
    let (pty, pval) = typed_operand(segs[1], line)?;
    let mut operands = vec![parse_operand(&pval, &pty, line)?];
    for seg in &segs[2..] {
        let (ity, ival) = typed_operand(seg, line)?;
        operands.push(parse_operand(&ival, &ity, line)?);
    }
    Ok(Instruction {
        kind: InstKind::Operator,
        opcode: "getelementptr".to_string(),
        result: None,
        operands,
        dtype: Some(dtype),
    })
}

fn parse_phi(rest: &str, line: usize) -> Result<Instruction, ParseError> {
    let segs = split_commas(rest);
    if segs.is_empty() {
        return Err(ParseError::malformed("`phi` is missing its type", line));
    }
    // First segment is `<type> [ value, %label ]`; later ones are bare pairs.
    let toks = tokenize(segs[0]);
    if toks.len() < 2 {
        return Err(ParseError::malformed("`phi` expects `<type> [ <value>, %<label> ]`", line));
    }
    let dtype = toks[0].clone();
    let mut pair_texts: Vec<String> = vec![toks[1..].join(" ")];
    pair_texts.extend(segs[1..].iter().map(|s| s.to_string()));

    let mut operands = Vec::new();
    for pair in &pair_texts {
        let p = pair.trim();
        let inner = p
            .strip_prefix('[')
            .and_then(|x| x.strip_suffix(']'))
            .ok_or_else(|| ParseError::malformed(format!("bad phi pair `{p}`"), line))?;
        let parts = split_commas(inner);
        if parts.len() != 2 {
            return Err(ParseError::malformed(format!("bad phi pair `{p}`"), line));
        }
        let value = parse_operand(parts[0], &dtype, line)?;
        let label = parts[1]
            .strip_prefix('%')
            .ok_or_else(|| ParseError::malformed(format!("bad phi predecessor `{}`", parts[1]), line))?;
        operands.push(value);
        operands.push(Operand::Label(unquote(label)));
    }
    if pair_texts.len() < 2 {
        return Err(ParseError::malformed("`phi` needs at least two incoming pairs", line));
    }
    Ok(Instruction {
        kind: InstKind::Phi,
        opcode: "phi".to_string(),
        result: None,
        operands,
        dtype: Some(dtype),
    })
}

fn parse_select(rest: &str, line: usize) -> Result<Instruction, ParseError> {
    let segs = split_commas(rest);
    if segs.len() != 3 {
        return Err(ParseError::malformed("`select` expects three operands", line));
    }
    let (cty, cval) = typed_operand(segs[0], line)?;
    let cond = parse_operand(&cval, &cty, line)?;
    let (aty, aval) = typed_operand(segs[1], line)?;
    let a = parse_operand(&aval, &aty, line)?;
    let (bty, bval) = typed_operand(segs[2], line)?;
    let b = parse_operand(&bval, &bty, line)?;
    Ok(Instruction {
        kind: InstKind::Operator,
        opcode: "select".to_string(),
        result: None,
        operands: vec![cond, a, b],
        dtype: Some(aty),
    })
}

fn parse_call(rest_toks: &[String], line: usize) -> Result<Instruction, ParseError> {
    // Skip calling conventions and return attributes; the callee is the
    // first `@name(args)` token.
    let mut callee_idx = None;
    for (i, tok) in rest_toks.iter().enumerate() {
        if tok.starts_with('@') {
            callee_idx = Some(i);
            break;
        }
        if tok.starts_with('%') {
            // `%struct.S*`-style tokens are return types; a bare `%name`
            // here is a function-pointer call, which is out of scope.
            let looks_like_type = tok.ends_with('*')
                || tok.starts_with("%struct.")
                || tok.starts_with("%class.")
                || tok.starts_with("%union.");
            if !looks_like_type {
                return Err(ParseError::UnsupportedInstruction {
                    opcode: "call (indirect)".to_string(),
                    line,
                });
            }
        }
    }
    let Some(callee_idx) = callee_idx else {
        return Err(ParseError::malformed("`call` has no `@callee`", line));
    };
    // The return type is the last type-shaped token before the callee; a
    // function type `i32 (i8*, ...)` spans two tokens, and attribute words
    // may sit in between.
    let mut dtype = None;
    for tok in rest_toks[..callee_idx].iter() {
        if is_param_attr(tok) || tok.starts_with('(') {
            continue;
        }
        dtype = Some(tok.clone());
    }
    let dtype = dtype.ok_or_else(|| ParseError::malformed("`call` has no return type", line))?;

    let callee_tok = &rest_toks[callee_idx];
    let paren = callee_tok
        .find('(')
        .ok_or_else(|| ParseError::malformed("`call` has no argument list", line))?;
    let name = unquote(&callee_tok[1..paren]);
    if name.is_empty() {
        return Err(ParseError::malformed("empty callee name", line));
    }
    let after = &callee_tok[paren..];
    let close = matching_paren(after)
        .ok_or_else(|| ParseError::malformed("unbalanced call argument list", line))?;
    let arg_text = &after[1..close];

    let mut operands = Vec::new();
    if !arg_text.trim().is_empty() {
        for seg in split_commas(arg_text) {
            if seg.is_empty() {
                return Err(ParseError::malformed("empty call argument", line));
            }
            let (aty, aval) = typed_operand(seg, line)?;
            operands.push(parse_operand(&aval, &aty, line)?);
        }
    }
    Ok(Instruction {
        kind: InstKind::ApiCall,
        opcode: name,
        result: None,
        operands,
        dtype: Some(dtype),
    })
}

fn parse_br(rest: &str, line: usize) -> Result<Instruction, ParseError> {
    let segs = split_commas(rest);
    let mut operands = Vec::new();
    if segs.len() == 1 {
        // `br label %x`
        let toks = tokenize(segs[0]);
        if toks.len() != 2 || toks[0] != "label" || !toks[1].starts_with('%') {
            return Err(ParseError::malformed("`br` expects `label %<target>`", line));
        }
        operands.push(Operand::Label(unquote(&toks[1][1..])));
    } else {
        // `br <type> <cond>, label %a, label %b[, label %c ...]`
        let (cty, cval) = typed_operand(segs[0], line)?;
        operands.push(parse_operand(&cval, &cty, line)?);
        for seg in &segs[1..] {
            let toks = tokenize(seg);
            if toks.len() != 2 || toks[0] != "label" || !toks[1].starts_with('%') {
                return Err(ParseError::malformed(
                    format!("bad branch target `{seg}`"),
                    line,
                ));
            }
            operands.push(Operand::Label(unquote(&toks[1][1..])));
        }
        if operands.len() < 3 {
            return Err(ParseError::malformed("conditional `br` needs two targets", line));
        }
    }
    Ok(Instruction {
        kind: InstKind::Branch,
        opcode: "br".to_string(),
        result: None,
        operands,
        dtype: None,
    })
}

fn parse_ret(rest_toks: &[String], line: usize) -> Result<Instruction, ParseError> {
    let (operands, dtype) = match rest_toks {
        [] => return Err(ParseError::malformed("`ret` is missing its type", line)),
        [v] if v == "void" => (Vec::new(), None),
        toks => {
            let dtype = toks[0].clone();
            let value = toks[1..].join(" ");
            if value.is_empty() {
                return Err(ParseError::malformed("`ret` is missing its value", line));
            }
            (vec![parse_operand(&value, &dtype, line)?], Some(dtype))
        }
    };
    Ok(Instruction { kind: InstKind::Return, opcode: "ret".to_string(), result: None, operands, dtype })
}

/// `switch` folds into a multi-target branch: the scrutinee stays as the
/// condition operand, the default and case labels become targets, and the
/// case constants are dropped.
fn parse_switch(rest: &str, line: usize) -> Result<Instruction, ParseError> {
    let segs = split_commas(rest);
    if segs.len() != 2 {
        return Err(ParseError::malformed(
            "`switch` expects `<type> <value>, label %default [ ... ]`",
            line,
        ));
    }
    let (cty, cval) = typed_operand(segs[0], line)?;
    let cond = parse_operand(&cval, &cty, line)?;

    let toks = tokenize(segs[1]);
    if toks.len() < 3 || toks[0] != "label" || !toks[1].starts_with('%') {
        return Err(ParseError::malformed("`switch` is missing its default label", line));
    }
    let mut operands = vec![cond, Operand::Label(unquote(&toks[1][1..]))];

    let table = toks[2..].join(" ");
    let inner = table
        .strip_prefix('[')
        .and_then(|x| x.strip_suffix(']'))
        .ok_or_else(|| ParseError::malformed("`switch` case table must be bracketed", line))?;
    // Case rows are `<type> <const>, label %target`; rows are separated by
    // whitespace once physical lines are joined.
    let words: Vec<&str> =
        inner.split(|c: char| c == ',' || c.is_whitespace()).filter(|w| !w.is_empty()).collect();
    if !words.len().is_multiple_of(4) {
        return Err(ParseError::malformed("`switch` case table is truncated", line));
    }
    for row in words.chunks(4) {
        if row[2] != "label" || !row[3].starts_with('%') {
            return Err(ParseError::malformed(
                format!("bad switch case `{} {} {} {}`", row[0], row[1], row[2], row[3]),
                line,
            ));
        }
        operands.push(Operand::Label(unquote(&row[3][1..])));
    }
    if operands.len() == 2 {
        // A caseless switch still carries a condition; repeat the default
        // target so the conditional-branch shape (condition + ≥2 targets)
        // holds.
        let default = operands[1].clone();
        operands.push(default);
    }
    Ok(Instruction {
        kind: InstKind::Branch,
        opcode: "br".to_string(),
        result: None,
        operands,
        dtype: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_one(source: &str) -> IrFunction {
        let module = parse_module(source, ParseOptions { strict: true }).expect("parses");
        assert_eq!(module.functions.len(), 1, "expected exactly one function");
        module.functions.into_iter().next().unwrap()
    }

    const COUNTDOWN: &str = r#"
define i32 @countdown(i32 %n) {
entry:
  br label %loop

loop:
  %i = phi i32 [ %n, %entry ], [ %next, %loop ]
  %next = sub nsw i32 %i, 1
  %done = icmp sle i32 %next, 0
  br i1 %done, label %exit, label %loop

exit:
  ret i32 %next
}
"#;

    #[test]
    fn function_header_and_blocks() {
        let f = parse_one(COUNTDOWN);
        assert_eq!(f.name, "countdown");
        assert_eq!(f.params, vec![Param { name: "n".into(), dtype: "i32".into() }]);
        let labels: Vec<&str> = f.blocks.iter().map(|b| b.label.as_str()).collect();
        assert_eq!(labels, ["entry", "loop", "exit"]);
        assert_eq!(f.instruction_count(), 6);
    }

    #[test]
    fn implicit_entry_label_is_synthesized() {
        let f = parse_one("define void @f() {\n  ret void\n}\n");
        assert_eq!(f.blocks.len(), 1);
        assert_eq!(f.blocks[0].label, "entry");
    }

    #[test]
    fn binop_shape() {
        let f = parse_one(COUNTDOWN);
        let sub = &f.blocks[1].instructions[1];
        assert_eq!(sub.kind, InstKind::Operator);
        assert_eq!(sub.opcode, "sub");
        assert_eq!(sub.result.as_deref(), Some("next"));
        assert_eq!(sub.dtype.as_deref(), Some("i32"));
        assert_eq!(
            sub.operands,
            vec![
                Operand::Value("i".into()),
                Operand::Constant { literal: "1".into(), dtype: "i32".into() },
            ]
        );
    }

    #[test]
    fn comparison_folds_predicate_into_opcode() {
        let f = parse_one(COUNTDOWN);
        let cmp = &f.blocks[1].instructions[2];
        assert_eq!(cmp.opcode, "icmp.sle");
        assert_eq!(cmp.result_dtype().as_deref(), Some("i1"));
    }

    #[test]
    fn unknown_comparison_predicate_is_malformed() {
        let err = parse_instruction("%c = icmp wat i32 %a, %b").unwrap_err();
        assert!(matches!(err, ParseError::MalformedIr { .. }));
    }

    #[test]
    fn phi_alternates_values_and_labels() {
        let f = parse_one(COUNTDOWN);
        let phi = &f.blocks[1].instructions[0];
        assert_eq!(phi.kind, InstKind::Phi);
        assert_eq!(phi.opcode, "phi");
        assert_eq!(
            phi.operands,
            vec![
                Operand::Input("n".into()),
                Operand::Label("entry".into()),
                Operand::Value("next".into()),
                Operand::Label("loop".into()),
            ]
        );
    }

    #[test]
    fn phi_with_single_incoming_is_malformed() {
        let err = parse_instruction("%x = phi i32 [ 1, %a ]").unwrap_err();
        assert!(matches!(err, ParseError::MalformedIr { .. }));
    }

    #[test]
    fn parameters_become_input_operands() {
        let f = parse_one(COUNTDOWN);
        let phi = &f.blocks[1].instructions[0];
        assert!(matches!(phi.operands[0], Operand::Input(_)));
        // %next is a local value, not an input.
        assert!(matches!(phi.operands[2], Operand::Value(_)));
    }

    #[test]
    fn conditional_branch_records_targets() {
        let f = parse_one(COUNTDOWN);
        let br = &f.blocks[1].instructions[3];
        assert_eq!(br.kind, InstKind::Branch);
        assert_eq!(br.target_labels().collect::<Vec<_>>(), vec!["exit", "loop"]);
        assert!(matches!(br.operands[0], Operand::Value(ref v) if v == "done"));
    }

    #[test]
    fn switch_desugars_to_conditional_branch() {
        let inst = parse_instruction(
            "switch i32 %v, label %default [ i32 0, label %a\n i32 1, label %b ]",
        )
        .unwrap();
        assert_eq!(inst.kind, InstKind::Branch);
        assert_eq!(inst.opcode, "br");
        assert_eq!(inst.target_labels().collect::<Vec<_>>(), vec!["default", "a", "b"]);
    }

    #[test]
    fn caseless_switch_still_branches_conditionally() {
        let inst = parse_instruction("switch i32 %v, label %only [ ]").unwrap();
        assert_eq!(inst.target_labels().collect::<Vec<_>>(), vec!["only", "only"]);
    }

    #[test]
    fn call_collects_ret_type_and_arguments() {
        let inst = parse_instruction("%r = call i32 @max(i32 %a, i32 5)").unwrap();
        assert_eq!(inst.kind, InstKind::ApiCall);
        assert_eq!(inst.opcode, "max");
        assert_eq!(inst.dtype.as_deref(), Some("i32"));
        assert_eq!(
            inst.operands,
            vec![
                Operand::Value("a".into()),
                Operand::Constant { literal: "5".into(), dtype: "i32".into() },
            ]
        );
    }

    #[test]
    fn vararg_call_with_constant_expression_argument() {
        let inst = parse_instruction(
            "%1 = call i32 (i8*, ...) @printf(i8* getelementptr inbounds \
             ([4 x i8], [4 x i8]* @.str, i64 0, i64 0), i32 %x)",
        )
        .unwrap();
        assert_eq!(inst.opcode, "printf");
        assert_eq!(inst.dtype.as_deref(), Some("i32"));
        assert_eq!(
            inst.operands,
            vec![
                Operand::Constant { literal: "@str".into(), dtype: "i8*".into() },
                Operand::Value("x".into()),
            ]
        );
    }

    #[test]
    fn indirect_call_is_unsupported() {
        let err = parse_instruction("%r = call i32 %fptr(i32 %a)").unwrap_err();
        assert!(matches!(err, ParseError::UnsupportedInstruction { .. }));
    }

    #[test]
    fn alloca_gains_implicit_element_count() {
        let inst = parse_instruction("%p = alloca i32, align 4").unwrap();
        assert_eq!(inst.opcode, "alloca");
        assert_eq!(
            inst.operands,
            vec![Operand::Constant { literal: "1".into(), dtype: "i32".into() }]
        );
        assert_eq!(inst.result_dtype().as_deref(), Some("i32*"));
    }

    #[test]
    fn load_and_store_shapes() {
        let load = parse_instruction("%v = load i32, i32* %p, align 4").unwrap();
        assert_eq!(load.operands, vec![Operand::Value("p".into())]);
        assert_eq!(load.dtype.as_deref(), Some("i32"));

        let store = parse_instruction("store i32 %v, i32* %p, align 4").unwrap();
        assert_eq!(store.result, None);
        assert_eq!(
            store.operands,
            vec![Operand::Value("v".into()), Operand::Value("p".into())]
        );
    }

    #[test]
    fn store_result_is_malformed() {
        let err = parse_instruction("%x = store i32 %v, i32* %p").unwrap_err();
        assert!(matches!(err, ParseError::MalformedIr { .. }));
    }

    #[test]
    fn terminator_defining_a_value_is_malformed() {
        let err = parse_instruction("%x = br label %next").unwrap_err();
        assert!(matches!(err, ParseError::MalformedIr { .. }));
    }

    #[test]
    fn getelementptr_keeps_pointer_then_indices() {
        let inst =
            parse_instruction("%q = getelementptr inbounds [8 x i32], [8 x i32]* %arr, i64 0, i64 %i")
                .unwrap();
        assert_eq!(inst.opcode, "getelementptr");
        assert_eq!(inst.operands.len(), 3);
        assert!(matches!(inst.operands[0], Operand::Value(ref v) if v == "arr"));
        assert_eq!(inst.result_dtype().as_deref(), Some("[8 x i32]*"));
    }

    #[test]
    fn cast_records_destination_type() {
        let inst = parse_instruction("%w = sext i32 %v to i64").unwrap();
        assert_eq!(inst.opcode, "sext");
        assert_eq!(inst.dtype.as_deref(), Some("i64"));
        assert_eq!(inst.operands, vec![Operand::Value("v".into())]);
    }

    #[test]
    fn unsupported_opcode_is_reported_with_line() {
        let source = "define i32 @f(i32 %a) {\n  %x = and i32 %a, 1\n  ret i32 %x\n}\n";
        let err = parse_module(source, ParseOptions { strict: true }).unwrap_err();
        match err {
            ParseError::UnsupportedInstruction { opcode, line } => {
                assert_eq!(opcode, "and");
                assert_eq!(line, 2);
            }
            other => panic!("expected UnsupportedInstruction, got {other:?}"),
        }
    }

    #[test]
    fn lenient_mode_skips_unsupported_instructions() {
        let source =
            "define i32 @f(i32 %a) {\n  %x = and i32 %a, 1\n  %y = add i32 %a, 2\n  ret i32 %y\n}\n";
        let module = parse_module(source, ParseOptions { strict: false }).unwrap();
        assert_eq!(module.functions[0].instruction_count(), 2);
        assert_eq!(module.skipped.len(), 1);
        assert_eq!(module.skipped[0].opcode, "and");
    }

    #[test]
    fn lenient_mode_still_rejects_malformed_ir() {
        let source = "define i32 @f() {\n  %x = add i32 1, 2\n  %x = add i32 3, 4\n  ret i32 %x\n}\n";
        let err = parse_module(source, ParseOptions { strict: false }).unwrap_err();
        assert!(matches!(err, ParseError::MalformedIr { line: 3, .. }));
    }

    #[test]
    fn duplicate_block_label_is_malformed() {
        let source = "define void @f() {\na:\n  br label %a\na:\n  ret void\n}\n";
        assert!(parse_module(source, ParseOptions::default()).is_err());
    }

    #[test]
    fn instruction_after_terminator_is_malformed() {
        let source = "define i32 @f() {\n  ret i32 0\n  ret i32 1\n}\n";
        assert!(parse_module(source, ParseOptions::default()).is_err());
    }

    #[test]
    fn branch_to_missing_label_is_malformed() {
        let source = "define void @f() {\n  br label %nowhere\n}\n";
        assert!(parse_module(source, ParseOptions::default()).is_err());
    }

    #[test]
    fn block_without_instructions_is_malformed() {
        let source = "define void @f() {\nentry:\n  br label %next\nnext:\n}\n";
        assert!(parse_module(source, ParseOptions::default()).is_err());
    }

    #[test]
    fn module_level_noise_is_ignored() {
        let source = r#"
; ModuleID = 'demo.c'
target datalayout = "e-m:e-p270:32:32"
@.str = private unnamed_addr constant [4 x i8] c"%d\0A\00", align 1

declare i32 @printf(i8*, ...)

define void @f() {
  ret void
}

!0 = !{i32 1, !"wchar_size", i32 4}
"#;
        let module = parse_module(source, ParseOptions { strict: true }).unwrap();
        assert_eq!(module.functions.len(), 1);
        assert_eq!(module.functions[0].name, "f");
    }

    #[test]
    fn empty_source_has_no_functions() {
        let module = parse_module("", ParseOptions::default()).unwrap();
        assert!(module.functions.is_empty());
    }

    #[test]
    fn comments_are_stripped_outside_strings() {
        let source = "define void @f() {\n  ret void ; done\n}\n";
        assert!(parse_module(source, ParseOptions::default()).is_ok());
    }

    #[test]
    fn instructions_spanning_physical_lines_are_joined() {
        let source =
            "define i32 @f(i32 %a) {\n  %r = call i32 @g(i32 %a,\n     i32 7)\n  ret i32 %r\n}\n";
        let f = parse_one(source);
        assert_eq!(f.blocks[0].instructions[0].opcode, "g");
        assert_eq!(f.blocks[0].instructions[0].operands.len(), 2);
    }

    #[test]
    fn unnamed_parameters_get_positional_names() {
        let f = parse_one("define i32 @f(i32, i32) {\n  ret i32 0\n}\n");
        let names: Vec<&str> = f.params.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["0", "1"]);
    }

    #[test]
    fn select_keeps_three_operands() {
        let inst = parse_instruction("%m = select i1 %c, i32 %a, i32 %b").unwrap();
        assert_eq!(inst.opcode, "select");
        assert_eq!(inst.operands.len(), 3);
        assert_eq!(inst.dtype.as_deref(), Some("i32"));
    }

    #[test]
    fn void_return_has_no_operands() {
        let inst = parse_instruction("ret void").unwrap();
        assert_eq!(inst.kind, InstKind::Return);
        assert!(inst.operands.is_empty());
    }
}

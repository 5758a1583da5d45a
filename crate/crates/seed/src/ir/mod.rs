//! Instruction-level model of textual LLVM IR.
//!
//! The parser understands the instruction subset that shows up in
//! straightforward C/C++ translation units: integer/float arithmetic,
//! comparisons, memory access, casts, phi/select, calls, and the branch
//! and return terminators. `switch` is folded into a multi-target branch.
//! Everything else is rejected (strict mode) or skipped (lenient mode).

mod parse;
mod print;

pub use parse::{parse_instruction, parse_module, ParseOptions, ParsedModule, SkippedInstruction};
pub use print::{format_function, format_instruction};

use thiserror::Error;

/// How an instruction participates in control and data flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstKind {
    /// Value-producing computation (arithmetic, comparison, memory, cast,
    /// select). Always has at least one operand.
    Operator,
    /// Call to a named function; the node token is the callee name.
    ApiCall,
    /// Conditional or unconditional branch, including desugared `switch`.
    Branch,
    /// Function return.
    Return,
    /// SSA join: operands alternate (incoming value, predecessor label).
    Phi,
}

/// One instruction operand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    /// Reference to an SSA value defined by an instruction in this function.
    Value(String),
    /// Reference to a function parameter.
    Input(String),
    /// Literal constant and the type it appeared under. Global references
    /// and constant expressions are normalized to the literal `@str`.
    Constant { literal: String, dtype: String },
    /// Reference to a basic-block label (branch targets, phi predecessors).
    Label(String),
}

impl Operand {
    /// The SSA value name this operand reads, if any.
    pub fn value_name(&self) -> Option<&str> {
        match self {
            Operand::Value(name) | Operand::Input(name) => Some(name),
            _ => None,
        }
    }
}

/// A single parsed instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub kind: InstKind,
    /// Opcode with the comparison predicate folded in (`icmp.sgt`), or the
    /// callee name for calls (`printf`).
    pub opcode: String,
    /// SSA name defined by this instruction, without the `%` sigil.
    pub result: Option<String>,
    pub operands: Vec<Operand>,
    /// Operating type: the operand type for most operators, the destination
    /// type for casts, the return type for calls.
    pub dtype: Option<String>,
}

impl Instruction {
    /// Type of the value this instruction defines. Comparisons produce `i1`
    /// regardless of their operand type; `alloca` and `getelementptr`
    /// produce pointers to their operating type.
    pub fn result_dtype(&self) -> Option<String> {
        self.result.as_ref()?;
        if self.opcode.starts_with("icmp.") || self.opcode.starts_with("fcmp.") {
            return Some("i1".to_string());
        }
        let dtype = self.dtype.as_deref()?;
        if self.opcode == "alloca" || self.opcode == "getelementptr" {
            return Some(format!("{dtype}*"));
        }
        Some(dtype.to_string())
    }

    /// Labels this instruction jumps to (empty unless it is a branch).
    pub fn target_labels(&self) -> impl Iterator<Item = &str> {
        self.operands.iter().filter_map(|op| match op {
            Operand::Label(l) => Some(l.as_str()),
            _ => None,
        })
    }
}

/// A labeled straight-line run of instructions ending in a terminator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock {
    pub label: String,
    pub instructions: Vec<Instruction>,
}

/// A function parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub dtype: String,
}

/// One parsed function definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrFunction {
    pub name: String,
    pub params: Vec<Param>,
    pub blocks: Vec<BasicBlock>,
}

impl IrFunction {
    pub fn instruction_count(&self) -> usize {
        self.blocks.iter().map(|b| b.instructions.len()).sum()
    }

    /// All instructions in block order, with their block index.
    pub fn instructions(&self) -> impl Iterator<Item = (usize, &Instruction)> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(bi, b)| b.instructions.iter().map(move |inst| (bi, inst)))
    }
}

/// Parse and validation failures. Every variant carries the 1-based source
/// line so corpus-level skip reports can point at the offending input.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: unsupported instruction `{opcode}`")]
    UnsupportedInstruction { opcode: String, line: usize },
    #[error("line {line}: malformed IR: {msg}")]
    MalformedIr { msg: String, line: usize },
}

impl ParseError {
    pub fn malformed(msg: impl Into<String>, line: usize) -> Self {
        ParseError::MalformedIr { msg: msg.into(), line }
    }
}

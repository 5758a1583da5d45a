//! Pretty-printer for parsed functions.
//!
//! The output is LLVM-flavored text whose re-parse produces a structurally
//! identical function. Value operand types are reconstructed from the
//! defining instruction (or parameter), so the printer does not need type
//! annotations the instruction model never stored.

use std::collections::HashMap;

use super::{InstKind, Instruction, IrFunction, Operand};

/// Render a whole function definition.
pub fn format_function(func: &IrFunction) -> String {
    let types = value_types(func);
    let ret = func
        .blocks
        .iter()
        .flat_map(|b| b.instructions.iter())
        .find(|i| i.kind == InstKind::Return)
        .and_then(|i| i.dtype.clone())
        .unwrap_or_else(|| "void".to_string());
    let params: Vec<String> =
        func.params.iter().map(|p| format!("{} %{}", p.dtype, quote(&p.name))).collect();

    let mut out = format!("define {ret} @{}({}) {{\n", quote(&func.name), params.join(", "));
    for (bi, block) in func.blocks.iter().enumerate() {
        if bi > 0 {
            out.push('\n');
        }
        out.push_str(&quote(&block.label));
        out.push_str(":\n");
        for inst in &block.instructions {
            out.push_str("  ");
            out.push_str(&format_instruction_with(inst, &types));
            out.push('\n');
        }
    }
    out.push_str("}\n");
    out
}

/// Render one instruction using generic fallback types for value operands.
pub fn format_instruction(inst: &Instruction) -> String {
    format_instruction_with(inst, &HashMap::new())
}

/// Types of every SSA value defined in the function.
fn value_types(func: &IrFunction) -> HashMap<String, String> {
    let mut types = HashMap::new();
    for p in &func.params {
        types.insert(p.name.clone(), p.dtype.clone());
    }
    for (_, inst) in func.instructions() {
        if let (Some(res), Some(ty)) = (&inst.result, inst.result_dtype()) {
            types.insert(res.clone(), ty);
        }
    }
    types
}

fn quote(name: &str) -> String {
    let plain = !name.is_empty()
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-' | '$'));
    if plain {
        name.to_string()
    } else {
        format!("\"{name}\"")
    }
}

/// Operand value text: `%name` for values/inputs, the literal for constants.
fn operand_value(op: &Operand) -> String {
    match op {
        Operand::Value(n) | Operand::Input(n) => format!("%{}", quote(n)),
        Operand::Constant { literal, .. } => literal.clone(),
        Operand::Label(l) => format!("%{}", quote(l)),
    }
}

/// Operand type: a constant's recorded type, a value's defining type, or the
/// fallback when the name is not locally defined.
fn operand_type(op: &Operand, types: &HashMap<String, String>, fallback: &str) -> String {
    match op {
        Operand::Constant { dtype, .. } => dtype.clone(),
        Operand::Value(n) | Operand::Input(n) => {
            types.get(n).cloned().unwrap_or_else(|| fallback.to_string())
        }
        Operand::Label(_) => "label".to_string(),
    }
}

fn typed(op: &Operand, types: &HashMap<String, String>, fallback: &str) -> String {
    format!("{} {}", operand_type(op, types, fallback), operand_value(op))
}

fn format_instruction_with(inst: &Instruction, types: &HashMap<String, String>) -> String {
    let dtype = inst.dtype.as_deref().unwrap_or("i64");
    let body = match inst.kind {
        InstKind::Branch => match inst.operands.as_slice() {
            [Operand::Label(l)] => format!("br label %{}", quote(l)),
            [cond, targets @ ..] => {
                let mut s = format!("br {}", typed(cond, types, "i1"));
                for t in targets {
                    s.push_str(&format!(", label {}", operand_value(t)));
                }
                s
            }
            [] => "br".to_string(),
        },
        InstKind::Return => match inst.operands.first() {
            Some(v) => format!("ret {} {}", dtype, operand_value(v)),
            None => "ret void".to_string(),
        },
        InstKind::ApiCall => {
            let args: Vec<String> =
                inst.operands.iter().map(|op| typed(op, types, "i64")).collect();
            format!("call {} @{}({})", dtype, quote(&inst.opcode), args.join(", "))
        }
        InstKind::Phi => {
            let pairs: Vec<String> = inst
                .operands
                .chunks(2)
                .map(|pair| match pair {
                    [v, Operand::Label(l)] => format!("[ {}, %{} ]", operand_value(v), quote(l)),
                    [v] => format!("[ {}, %? ]", operand_value(v)),
                    _ => String::new(),
                })
                .collect();
            format!("phi {} {}", dtype, pairs.join(", "))
        }
        InstKind::Operator => match inst.opcode.as_str() {
            "select" => {
                let ops: Vec<String> = inst
                    .operands
                    .iter()
                    .enumerate()
                    .map(|(i, op)| typed(op, types, if i == 0 { "i1" } else { dtype }))
                    .collect();
                format!("select {}", ops.join(", "))
            }
            "alloca" => {
                let count = inst
                    .operands
                    .first()
                    .map(|c| format!(", {}", typed(c, types, "i32")))
                    .unwrap_or_default();
                format!("alloca {dtype}{count}")
            }
            "load" => {
                let ptr = inst.operands.first().map(operand_value).unwrap_or_default();
                format!("load {dtype}, {dtype}* {ptr}")
            }
            "store" => {
                let val = inst.operands.first().map(operand_value).unwrap_or_default();
                let ptr = inst.operands.get(1).map(operand_value).unwrap_or_default();
                format!("store {dtype} {val}, {dtype}* {ptr}")
            }
            "getelementptr" => {
                let ptr = inst.operands.first().map(operand_value).unwrap_or_default();
                let mut s = format!("getelementptr {dtype}, {dtype}* {ptr}");
                for idx in inst.operands.iter().skip(1) {
                    s.push_str(&format!(", {}", typed(idx, types, "i64")));
                }
                s
            }
            op if op.starts_with("icmp.") || op.starts_with("fcmp.") => {
                let (family, pred) = op.split_once('.').unwrap_or((op, "eq"));
                let lhs = inst.operands.first().map(operand_value).unwrap_or_default();
                let rhs = inst.operands.get(1).map(operand_value).unwrap_or_default();
                format!("{family} {pred} {dtype} {lhs}, {rhs}")
            }
            "trunc" | "zext" | "sext" | "bitcast" | "sitofp" | "fptosi" => {
                let src = inst.operands.first();
                let src_text = src.map(operand_value).unwrap_or_default();
                let src_ty = src.map(|op| operand_type(op, types, "i64")).unwrap_or_default();
                format!("{} {} {} to {}", inst.opcode, src_ty, src_text, dtype)
            }
            _ => {
                // Binary arithmetic.
                let ops: Vec<String> = inst.operands.iter().map(operand_value).collect();
                format!("{} {} {}", inst.opcode, dtype, ops.join(", "))
            }
        },
    };
    match &inst.result {
        Some(r) => format!("%{} = {}", quote(r), body),
        None => body,
    }
}

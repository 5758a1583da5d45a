//! Semantic graph construction.
//!
//! Each function becomes a directed graph: one operation node per
//! instruction, one label node per basic block, one constant node per
//! constant operand occurrence, and one input node per parameter. Data-flow
//! edges run producer → consumer; control-flow edges run block-label → member
//! operation and branch → target label.
//!
//! Two enriched variants add one extra node per SSA value, connected to every
//! operation consuming that value: `seed+identifier` uses the variable name
//! as the token, `seed+type` the value's type. The base `seed` variant leaves
//! identifiers and types out of the vocabulary entirely.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::ir::{InstKind, IrFunction, Operand};

/// Which node classes participate in the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Variant {
    #[default]
    Seed,
    SeedType,
    SeedIdentifier,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Seed, Variant::SeedType, Variant::SeedIdentifier];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Seed => "seed",
            Variant::SeedType => "seed+type",
            Variant::SeedIdentifier => "seed+identifier",
        }
    }

}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Variant, String> {
        match s {
            "seed" => Ok(Variant::Seed),
            "seed+type" => Ok(Variant::SeedType),
            "seed+identifier" => Ok(Variant::SeedIdentifier),
            other => Err(format!(
                "unknown variant `{other}` (expected seed, seed+type, or seed+identifier)"
            )),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Operation,
    Label,
    Constant,
    Input,
    Identifier,
    Datatype,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Operation => "operation",
            NodeKind::Label => "label",
            NodeKind::Constant => "constant",
            NodeKind::Input => "input",
            NodeKind::Identifier => "identifier",
            NodeKind::Datatype => "datatype",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub kind: NodeKind,
    pub token: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeType {
    #[serde(rename = "data")]
    Data,
    #[serde(rename = "control")]
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub etype: EdgeType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticGraph {
    pub function: String,
    pub variant: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl SemanticGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// Build the semantic graph of one function.
pub fn build_graph(func: &IrFunction, variant: Variant) -> SemanticGraph {
    let mut b = Builder::new(func, variant);
    b.add_label_and_operation_nodes();
    b.add_input_nodes();
    b.add_dataflow_edges();
    b.add_controlflow_edges();
    if variant != Variant::Seed {
        b.add_value_nodes(variant);
    }
    SemanticGraph {
        function: func.name.clone(),
        variant: variant.as_str().to_string(),
        nodes: b.nodes,
        edges: b.edges,
    }
}

struct Builder<'f> {
    func: &'f IrFunction,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    seen_edges: HashSet<(usize, usize, EdgeType)>,
    /// Node id of each block's label node, by block index.
    label_nodes: Vec<usize>,
    /// Node id of each instruction's operation node, in block-walk order.
    op_nodes: Vec<usize>,
    /// Node id of each parameter's input node, by parameter index.
    input_nodes: Vec<usize>,
    /// Producing operation node of each SSA result name.
    producer: HashMap<&'f str, usize>,
    /// Parameter index by name.
    param_index: HashMap<&'f str, usize>,
}

impl<'f> Builder<'f> {
    fn new(func: &'f IrFunction, _variant: Variant) -> Self {
        Builder {
            func,
            nodes: Vec::new(),
            edges: Vec::new(),
            seen_edges: HashSet::new(),
            label_nodes: Vec::new(),
            op_nodes: Vec::new(),
            input_nodes: Vec::new(),
            producer: HashMap::new(),
            param_index: HashMap::new(),
        }
    }

    fn add_node(&mut self, kind: NodeKind, token: impl Into<String>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node { id, kind, token: token.into() });
        id
    }

    /// Duplicate edges collapse; self-edges are dropped.
    fn add_edge(&mut self, src: usize, dst: usize, etype: EdgeType) {
        if src == dst {
            return;
        }
        if self.seen_edges.insert((src, dst, etype)) {
            self.edges.push(Edge { src, dst, etype });
        }
    }

    fn add_label_and_operation_nodes(&mut self) {
        for block in &self.func.blocks {
            let id = self.add_node(NodeKind::Label, format!("label:{}", block.label));
            self.label_nodes.push(id);
        }
        for (_, inst) in self.func.instructions() {
            let id = self.add_node(NodeKind::Operation, inst.opcode.clone());
            self.op_nodes.push(id);
            if let Some(res) = &inst.result {
                self.producer.insert(res.as_str(), id);
            }
        }
    }

    fn add_input_nodes(&mut self) {
        for (i, p) in self.func.params.iter().enumerate() {
            let id = self.add_node(NodeKind::Input, p.dtype.clone());
            self.input_nodes.push(id);
            self.param_index.insert(p.name.as_str(), i);
        }
    }

    fn add_dataflow_edges(&mut self) {
        for (op_idx, (_, inst)) in self.func.instructions().enumerate() {
            let op_node = self.op_nodes[op_idx];
            // One constant node per distinct constant value used by this
            // instruction, shared by repeated uses within it.
            let mut local_consts: HashMap<String, usize> = HashMap::new();
            for operand in &inst.operands {
                match operand {
                    Operand::Value(name) => {
                        if let Some(&src) = self.producer.get(name.as_str()) {
                            self.add_edge(src, op_node, EdgeType::Data);
                        }
                        // Dangling references (no local producer) get no edge.
                    }
                    Operand::Input(name) => {
                        if let Some(&pi) = self.param_index.get(name.as_str()) {
                            self.add_edge(self.input_nodes[pi], op_node, EdgeType::Data);
                        }
                    }
                    Operand::Constant { literal, .. } => {
                        let token = constant_token(literal);
                        let id = match local_consts.get(&token) {
                            Some(&id) => id,
                            None => {
                                let id = self.add_node(NodeKind::Constant, token.clone());
                                local_consts.insert(token, id);
                                id
                            }
                        };
                        self.add_edge(id, op_node, EdgeType::Data);
                    }
                    Operand::Label(_) => {}
                }
            }
        }
    }

    fn add_controlflow_edges(&mut self) {
        let block_of_label: HashMap<&str, usize> = self
            .func
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| (b.label.as_str(), i))
            .collect();
        for (op_idx, (block_idx, inst)) in self.func.instructions().enumerate() {
            let op_node = self.op_nodes[op_idx];
            self.add_edge(self.label_nodes[block_idx], op_node, EdgeType::Control);
            if inst.kind == InstKind::Branch {
                for target in inst.target_labels() {
                    if let Some(&bi) = block_of_label.get(target) {
                        self.add_edge(op_node, self.label_nodes[bi], EdgeType::Control);
                    }
                }
            }
        }
    }

    /// Variant nodes: one per SSA value (parameters first, then results in
    /// instruction order), with a data-flow edge to every consumer.
    fn add_value_nodes(&mut self, variant: Variant) {
        // Consumers of each value name, in instruction order.
        let mut consumers: HashMap<&str, Vec<usize>> = HashMap::new();
        for (op_idx, (_, inst)) in self.func.instructions().enumerate() {
            for operand in &inst.operands {
                if let Some(name) = operand.value_name() {
                    consumers.entry(name).or_default().push(self.op_nodes[op_idx]);
                }
            }
        }

        let mut values: Vec<(&str, String)> = Vec::new();
        for p in &self.func.params {
            values.push((p.name.as_str(), p.dtype.clone()));
        }
        for (_, inst) in self.func.instructions() {
            if let (Some(res), Some(ty)) = (&inst.result, inst.result_dtype()) {
                values.push((res.as_str(), ty));
            }
        }

        for (name, dtype) in values {
            let node = match variant {
                Variant::SeedIdentifier => self.add_node(NodeKind::Identifier, name),
                Variant::SeedType => self.add_node(NodeKind::Datatype, dtype),
                Variant::Seed => unreachable!("base variant adds no value nodes"),
            };
            if let Some(ops) = consumers.get(name) {
                for &op in ops {
                    self.add_edge(node, op, EdgeType::Data);
                }
            }
        }
    }
}

/// Vocabulary token for a constant literal. Small integers keep their
/// literal spelling; everything else collapses into a coarse bucket so the
/// vocabulary stays bounded.
pub fn constant_token(literal: &str) -> String {
    const KEEP: &[&str] = &["true", "false", "null", "undef", "none", "poison", "zeroinitializer"];
    if KEEP.contains(&literal) {
        return literal.to_string();
    }
    if let Ok(v) = literal.parse::<i128>() {
        return if v.abs() <= 255 { literal.to_string() } else { "@int".to_string() };
    }
    // LLVM spells exotic float constants as 0x-prefixed bit patterns.
    if literal.starts_with("0x") || literal.parse::<f64>().is_ok() {
        return "@float".to_string();
    }
    "@str".to_string()
}

// ---------------------------------------------------------------------------
// Stats
// ---------------------------------------------------------------------------

/// Size measurements of one graph (or an aggregate over many).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub operation_nodes: usize,
    pub label_nodes: usize,
    pub constant_nodes: usize,
    pub input_nodes: usize,
    pub identifier_nodes: usize,
    pub datatype_nodes: usize,
    /// Constant + input + identifier + datatype nodes: everything feeding
    /// operations as operands.
    pub operand_nodes: usize,
    pub edges: usize,
    pub data_edges: usize,
    pub control_edges: usize,
    pub distinct_tokens: usize,
}

pub fn graph_stats(g: &SemanticGraph) -> GraphStats {
    let mut s = GraphStats { nodes: g.nodes.len(), edges: g.edges.len(), ..Default::default() };
    let mut tokens = BTreeSet::new();
    for n in &g.nodes {
        match n.kind {
            NodeKind::Operation => s.operation_nodes += 1,
            NodeKind::Label => s.label_nodes += 1,
            NodeKind::Constant => s.constant_nodes += 1,
            NodeKind::Input => s.input_nodes += 1,
            NodeKind::Identifier => s.identifier_nodes += 1,
            NodeKind::Datatype => s.datatype_nodes += 1,
        }
        tokens.insert(n.token.as_str());
    }
    s.operand_nodes = s.constant_nodes + s.input_nodes + s.identifier_nodes + s.datatype_nodes;
    for e in &g.edges {
        match e.etype {
            EdgeType::Data => s.data_edges += 1,
            EdgeType::Control => s.control_edges += 1,
        }
    }
    s.distinct_tokens = tokens.len();
    s
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Dot,
}

pub fn export(g: &SemanticGraph, format: ExportFormat) -> String {
    match format {
        ExportFormat::Json => export_json(g),
        ExportFormat::Dot => export_dot(g),
    }
}

/// JSON export: `{"function", "variant", "nodes": [{id, kind, token}],
/// "edges": [{src, dst, etype}]}` with stable field and element order.
pub fn export_json(g: &SemanticGraph) -> String {
    serde_json::to_string_pretty(g).expect("graph serialization cannot fail")
}

fn dot_shape(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Operation => "ellipse",
        NodeKind::Label => "box",
        NodeKind::Constant => "diamond",
        NodeKind::Input => "parallelogram",
        NodeKind::Identifier => "note",
        NodeKind::Datatype => "hexagon",
    }
}

/// Tokens with separators read better quoted in the edge comments.
fn dot_token(token: &str) -> String {
    if token.contains(':') {
        format!("\"{token}\"")
    } else {
        token.to_string()
    }
}

/// DOT export: node shape encodes the kind, edge style the type (solid data
/// flow, dashed control flow). Edge comments name the endpoint tokens.
pub fn export_dot(g: &SemanticGraph) -> String {
    let mut out = String::new();
    out.push_str(&format!("digraph \"{} ({})\" {{\n", g.function, g.variant));
    for n in &g.nodes {
        out.push_str(&format!(
            "  n{} [label=\"{}\", shape={}];\n",
            n.id,
            n.token.replace('"', "\\\""),
            dot_shape(n.kind)
        ));
    }
    for e in &g.edges {
        let style = match e.etype {
            EdgeType::Data => "solid",
            EdgeType::Control => "dashed",
        };
        let src_tok = g.nodes.get(e.src).map(|n| n.token.as_str()).unwrap_or("?");
        let dst_tok = g.nodes.get(e.dst).map(|n| n.token.as_str()).unwrap_or("?");
        out.push_str(&format!(
            "  n{} -> n{} [style={}]; // {} -> {}\n",
            e.src,
            e.dst,
            style,
            dot_token(src_tok),
            dot_token(dst_tok)
        ));
    }
    out.push_str("}\n");
    out
}

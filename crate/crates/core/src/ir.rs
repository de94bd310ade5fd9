//! Gate-level intermediate representation.
//!
//! A program is an n-ary tree: [`Instruction`]s sit at the leaves and named
//! kernels ([`CompositeInstruction`]) form the interior nodes. A kernel that
//! calls another kernel holds a [`KernelCall`] child carrying the callee body
//! and the actual arguments of the call. Execution order is the pre-order
//! traversal of the tree, produced by [`flatten`].
//!
//! Backends consume instructions through [`GateVisitor`]: every instruction
//! dispatches to exactly one handler via [`Instruction::accept`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IrError {
    #[error("gate {kind} expects {expected} qubit(s), got {got}")]
    QubitArity { kind: GateKind, expected: usize, got: usize },
    #[error("gate {kind} expects {expected} parameter(s), got {got}")]
    ParamArity { kind: GateKind, expected: usize, got: usize },
    #[error("gate {kind} acts on qubit {qubit} more than once")]
    RepeatedQubit { kind: GateKind, qubit: usize },
    #[error("only MEASURE may carry a classical target")]
    UnexpectedClassicalTarget,
    #[error("kernel `{kernel}` expects {expected} argument(s), got {got}")]
    ArgumentArity { kernel: String, expected: usize, got: usize },
    #[error("unknown parameter `{name}` in kernel `{kernel}`")]
    UnknownParameter { kernel: String, name: String },
    #[error("parameter `{name}` is unbound")]
    UnboundParameter { name: String },
}

/// The gate alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    Rx,
    Ry,
    Rz,
    Cnot,
    Cz,
    Swap,
    Measure,
    I,
}

impl GateKind {
    pub const ALL: [GateKind; 12] = [
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cnot,
        GateKind::Cz,
        GateKind::Swap,
        GateKind::Measure,
        GateKind::I,
    ];

    /// Mnemonic used by the kernel language.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
            GateKind::Swap => "SWAP",
            GateKind::Measure => "MEASURE",
            GateKind::I => "I",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn num_qubits(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz | GateKind::Swap => 2,
            _ => 1,
        }
    }

    pub fn num_params(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A gate parameter slot: either a concrete angle in radians or a reference
/// to a formal parameter of the enclosing kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum Param {
    Value(f64),
    Named(String),
}

impl Param {
    pub fn value(&self) -> Option<f64> {
        match self {
            Param::Value(v) => Some(*v),
            Param::Named(_) => None,
        }
    }

    fn resolve(&self, env: &HashMap<&str, f64>, kernel: &str) -> Result<f64, IrError> {
        match self {
            Param::Value(v) => Ok(*v),
            Param::Named(name) => {
                env.get(name.as_str())
                    .copied()
                    .ok_or_else(|| IrError::UnknownParameter {
                        kernel: kernel.to_string(),
                        name: name.clone(),
                    })
            }
        }
    }
}

impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Param::Value(v)
    }
}

impl From<&str> for Param {
    fn from(name: &str) -> Self {
        Param::Named(name.to_string())
    }
}

/// One gate applied to an ordered list of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Instruction {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub params: Vec<Param>,
    pub classical_target: Option<usize>,
}

impl Instruction {
    /// Builds a validated instruction.
    pub fn new(kind: GateKind, qubits: Vec<usize>, params: Vec<Param>) -> Result<Self, IrError> {
        let instr = Instruction { kind, qubits, params, classical_target: None };
        instr.validate()?;
        Ok(instr)
    }

    pub fn measure(qubit: usize, creg: usize) -> Self {
        Instruction {
            kind: GateKind::Measure,
            qubits: vec![qubit],
            params: Vec::new(),
            classical_target: Some(creg),
        }
    }

    /// Fixed-angle or parameter-free gate; panics on arity errors, so only for
    /// literals whose shape is known at the call site.
    pub fn gate(kind: GateKind, qubits: &[usize], angles: &[f64]) -> Self {
        Instruction::new(kind, qubits.to_vec(), angles.iter().map(|&a| Param::Value(a)).collect())
            .expect("malformed gate literal")
    }

    pub fn validate(&self) -> Result<(), IrError> {
        let kind = self.kind;
        if self.qubits.len() != kind.num_qubits() {
            return Err(IrError::QubitArity {
                kind,
                expected: kind.num_qubits(),
                got: self.qubits.len(),
            });
        }
        if self.params.len() != kind.num_params() {
            return Err(IrError::ParamArity {
                kind,
                expected: kind.num_params(),
                got: self.params.len(),
            });
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(IrError::RepeatedQubit { kind, qubit: self.qubits[0] });
        }
        if kind != GateKind::Measure && self.classical_target.is_some() {
            return Err(IrError::UnexpectedClassicalTarget);
        }
        Ok(())
    }

    /// Concrete angle of a rotation gate. `None` for parameter-free gates or
    /// unbound slots.
    pub fn angle(&self) -> Option<f64> {
        self.params.first().and_then(Param::value)
    }

    pub fn is_unitary(&self) -> bool {
        self.kind != GateKind::Measure
    }

    /// Double dispatch onto the handler for this instruction's kind.
    ///
    /// Rotation handlers receive the bound angle; an unbound slot is passed as
    /// NaN, which never occurs for output of [`flatten`].
    pub fn accept<V: GateVisitor + ?Sized>(&self, visitor: &mut V) -> V::Output {
        let q = &self.qubits;
        let theta = self.angle().unwrap_or(f64::NAN);
        match self.kind {
            GateKind::H => visitor.visit_h(q[0]),
            GateKind::X => visitor.visit_x(q[0]),
            GateKind::Y => visitor.visit_y(q[0]),
            GateKind::Z => visitor.visit_z(q[0]),
            GateKind::Rx => visitor.visit_rx(q[0], theta),
            GateKind::Ry => visitor.visit_ry(q[0], theta),
            GateKind::Rz => visitor.visit_rz(q[0], theta),
            GateKind::Cnot => visitor.visit_cnot(q[0], q[1]),
            GateKind::Cz => visitor.visit_cz(q[0], q[1]),
            GateKind::Swap => visitor.visit_swap(q[0], q[1]),
            GateKind::Measure => visitor.visit_measure(q[0], self.classical_target),
            GateKind::I => visitor.visit_identity(q[0]),
        }
    }
}

/// One handler per gate kind.
pub trait GateVisitor {
    type Output;

    fn visit_h(&mut self, q: usize) -> Self::Output;
    fn visit_x(&mut self, q: usize) -> Self::Output;
    fn visit_y(&mut self, q: usize) -> Self::Output;
    fn visit_z(&mut self, q: usize) -> Self::Output;
    fn visit_rx(&mut self, q: usize, theta: f64) -> Self::Output;
    fn visit_ry(&mut self, q: usize, theta: f64) -> Self::Output;
    fn visit_rz(&mut self, q: usize, theta: f64) -> Self::Output;
    fn visit_cnot(&mut self, control: usize, target: usize) -> Self::Output;
    fn visit_cz(&mut self, q1: usize, q2: usize) -> Self::Output;
    fn visit_swap(&mut self, q1: usize, q2: usize) -> Self::Output;
    fn visit_measure(&mut self, q: usize, creg: Option<usize>) -> Self::Output;
    fn visit_identity(&mut self, q: usize) -> Self::Output;
}

/// A call site inside a kernel body. `args` are expressed in terms of the
/// caller's formal parameters; `kernel` is the callee as defined.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCall {
    pub args: Vec<Param>,
    pub kernel: CompositeInstruction,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Gate(Instruction),
    Call(KernelCall),
}

/// A named kernel: formal parameters plus an ordered body.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeInstruction {
    pub name: String,
    pub formal_params: Vec<String>,
    pub children: Vec<Node>,
}

impl CompositeInstruction {
    pub fn new(name: impl Into<String>) -> Self {
        CompositeInstruction { name: name.into(), formal_params: Vec::new(), children: Vec::new() }
    }

    pub fn with_params<S: Into<String>>(mut self, params: impl IntoIterator<Item = S>) -> Self {
        self.formal_params = params.into_iter().map(Into::into).collect();
        self
    }

    pub fn push(&mut self, instr: Instruction) -> &mut Self {
        self.children.push(Node::Gate(instr));
        self
    }

    pub fn push_call(&mut self, kernel: CompositeInstruction, args: Vec<Param>) -> &mut Self {
        self.children.push(Node::Call(KernelCall { args, kernel }));
        self
    }

    /// Number of leaf instructions reachable from this node.
    pub fn leaf_count(&self) -> usize {
        self.children
            .iter()
            .map(|c| match c {
                Node::Gate(_) => 1,
                Node::Call(call) => call.kernel.leaf_count(),
            })
            .sum()
    }

    /// Largest qubit index used anywhere in the tree.
    pub fn max_qubit(&self) -> Option<usize> {
        self.children
            .iter()
            .filter_map(|c| match c {
                Node::Gate(i) => i.qubits.iter().copied().max(),
                Node::Call(call) => call.kernel.max_qubit(),
            })
            .max()
    }
}

/// Returns a copy of `root` with every parameter slot, including those in
/// called kernels, replaced by a concrete value. `root` is left untouched.
pub fn bind_parameters(
    root: &CompositeInstruction,
    values: &[f64],
) -> Result<CompositeInstruction, IrError> {
    if values.len() != root.formal_params.len() {
        return Err(IrError::ArgumentArity {
            kernel: root.name.clone(),
            expected: root.formal_params.len(),
            got: values.len(),
        });
    }
    let env: HashMap<&str, f64> =
        root.formal_params.iter().map(String::as_str).zip(values.iter().copied()).collect();

    let mut children = Vec::with_capacity(root.children.len());
    for child in &root.children {
        children.push(match child {
            Node::Gate(instr) => {
                let params = instr
                    .params
                    .iter()
                    .map(|p| p.resolve(&env, &root.name).map(Param::Value))
                    .collect::<Result<Vec<_>, _>>()?;
                Node::Gate(Instruction { params, ..instr.clone() })
            }
            Node::Call(call) => {
                let args = call
                    .args
                    .iter()
                    .map(|p| p.resolve(&env, &root.name))
                    .collect::<Result<Vec<_>, _>>()?;
                let kernel = bind_parameters(&call.kernel, &args)?;
                Node::Call(KernelCall { args: args.into_iter().map(Param::Value).collect(), kernel })
            }
        });
    }
    Ok(CompositeInstruction {
        name: root.name.clone(),
        formal_params: root.formal_params.clone(),
        children,
    })
}

/// Pre-order list of leaf instructions of a fully bound tree.
pub fn flatten(root: &CompositeInstruction) -> Result<Vec<Instruction>, IrError> {
    fn walk(node: &CompositeInstruction, out: &mut Vec<Instruction>) -> Result<(), IrError> {
        for child in &node.children {
            match child {
                Node::Gate(instr) => {
                    if let Some(Param::Named(name)) =
                        instr.params.iter().find(|p| matches!(p, Param::Named(_)))
                    {
                        return Err(IrError::UnboundParameter { name: name.clone() });
                    }
                    out.push(instr.clone());
                }
                Node::Call(call) => walk(&call.kernel, out)?,
            }
        }
        Ok(())
    }
    let mut out = Vec::with_capacity(root.leaf_count());
    walk(root, &mut out)?;
    Ok(out)
}

/// Register of qubits plus the results an execution leaves behind.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QubitBuffer {
    pub name: String,
    pub size: usize,
    /// Bitstrings list MEASURE outcomes in program order.
    pub measurement_counts: BTreeMap<String, u64>,
    pub metadata: BTreeMap<String, f64>,
}

impl QubitBuffer {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        QubitBuffer { name: name.into(), size, ..Default::default() }
    }

    pub fn reset(&mut self) {
        self.measurement_counts.clear();
        self.metadata.clear();
    }
}

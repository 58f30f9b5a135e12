// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Circuit representation, the QASM-like text format, and ASAP layering.
//!
//! The text format is a strict subset of OpenQASM 2: a single quantum
//! register, an optional single classical register, and one statement per
//! line. `OPENQASM 2.0;` and `include "...";` lines are accepted and ignored
//! so that files produced by other tools load unchanged.

use std::fmt;

use thiserror::Error;

/// The closed set of operations a [`Circuit`] may contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    Id,
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    Sx,
    Rz,
    Cx,
    Cz,
    Swap,
    Measure,
    Reset,
    Barrier,
}

impl GateKind {
    pub const ALL: [GateKind; 15] = [
        GateKind::Id,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::Sdg,
        GateKind::Sx,
        GateKind::Rz,
        GateKind::Cx,
        GateKind::Cz,
        GateKind::Swap,
        GateKind::Measure,
        GateKind::Reset,
        GateKind::Barrier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Id => "id",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::Sx => "sx",
            GateKind::Rz => "rz",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Swap => "swap",
            GateKind::Measure => "measure",
            GateKind::Reset => "reset",
            GateKind::Barrier => "barrier",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Number of qubits the operation acts on. Barriers span the whole
    /// register and report 0.
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cz | GateKind::Swap => 2,
            GateKind::Barrier => 0,
            _ => 1,
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            GateKind::Rz => 1,
            _ => 0,
        }
    }

    /// True for operations with a unitary action on the state.
    pub fn is_unitary(self) -> bool {
        !matches!(self, GateKind::Measure | GateKind::Reset | GateKind::Barrier)
    }

    pub fn is_two_qubit(self) -> bool {
        self.arity() == 2
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One operation in program order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub params: Vec<f64>,
    /// Classical target; only set for `measure`.
    pub clbit: Option<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: &[usize]) -> Gate {
        Gate {
            kind,
            qubits: qubits.to_vec(),
            params: Vec::new(),
            clbit: None,
        }
    }

    pub fn one(kind: GateKind, q: usize) -> Gate {
        Gate::new(kind, &[q])
    }

    pub fn two(kind: GateKind, a: usize, b: usize) -> Gate {
        Gate::new(kind, &[a, b])
    }

    pub fn rz(angle: f64, q: usize) -> Gate {
        Gate {
            kind: GateKind::Rz,
            qubits: vec![q],
            params: vec![angle],
            clbit: None,
        }
    }

    pub fn measure(q: usize, c: usize) -> Gate {
        Gate {
            kind: GateKind::Measure,
            qubits: vec![q],
            params: Vec::new(),
            clbit: Some(c),
        }
    }

    pub fn barrier() -> Gate {
        Gate::new(GateKind::Barrier, &[])
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("{kind} expects {expected} qubit(s), got {got}")]
    Arity {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("{kind} expects {expected} parameter(s), got {got}")]
    ParamCount {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("non-finite parameter {0} on {1}")]
    NonFiniteParam(f64, GateKind),
    #[error("qubit index {index} out of range for width {width}")]
    QubitOutOfRange { index: usize, width: usize },
    #[error("classical bit {index} out of range for {width} classical bits")]
    ClbitOutOfRange { index: usize, width: usize },
    #[error("repeated qubit {0} in one gate")]
    RepeatedQubit(usize),
    #[error("classical bit {0} is measured more than once")]
    DoubleMeasure(usize),
    #[error("measure without a classical target")]
    MissingClbit,
}

/// An ordered gate list over `n_qubits` qubits and `n_clbits` classical bits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    n_qubits: usize,
    n_clbits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_clbits: usize) -> Circuit {
        Circuit {
            n_qubits,
            n_clbits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(
        n_qubits: usize,
        n_clbits: usize,
        gates: impl IntoIterator<Item = Gate>,
    ) -> Result<Circuit, CircuitError> {
        let mut c = Circuit::new(n_qubits, n_clbits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_clbits(&self) -> usize {
        self.n_clbits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Appends a gate after checking it against the circuit's invariants.
    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        self.check(&gate)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Appends every gate of `other`, which must fit within this circuit's
    /// registers.
    pub fn extend_from(&mut self, other: &Circuit) -> Result<(), CircuitError> {
        for g in other.gates() {
            self.push(g.clone())?;
        }
        Ok(())
    }

    fn check(&self, gate: &Gate) -> Result<(), CircuitError> {
        let kind = gate.kind;
        if kind != GateKind::Barrier && gate.qubits.len() != kind.arity() {
            return Err(CircuitError::Arity {
                kind,
                expected: kind.arity(),
                got: gate.qubits.len(),
            });
        }
        if kind == GateKind::Barrier && !gate.qubits.is_empty() {
            return Err(CircuitError::Arity {
                kind,
                expected: 0,
                got: gate.qubits.len(),
            });
        }
        if gate.params.len() != kind.param_count() {
            return Err(CircuitError::ParamCount {
                kind,
                expected: kind.param_count(),
                got: gate.params.len(),
            });
        }
        if let Some(p) = gate.params.iter().find(|p| !p.is_finite()) {
            return Err(CircuitError::NonFiniteParam(*p, kind));
        }
        for (i, &q) in gate.qubits.iter().enumerate() {
            if q >= self.n_qubits {
                return Err(CircuitError::QubitOutOfRange {
                    index: q,
                    width: self.n_qubits,
                });
            }
            if gate.qubits[..i].contains(&q) {
                return Err(CircuitError::RepeatedQubit(q));
            }
        }
        match (kind, gate.clbit) {
            (GateKind::Measure, None) => return Err(CircuitError::MissingClbit),
            (GateKind::Measure, Some(c)) => {
                if c >= self.n_clbits {
                    return Err(CircuitError::ClbitOutOfRange {
                        index: c,
                        width: self.n_clbits,
                    });
                }
                if self
                    .gates
                    .iter()
                    .any(|g| g.kind == GateKind::Measure && g.clbit == Some(c))
                {
                    return Err(CircuitError::DoubleMeasure(c));
                }
            }
            (_, Some(_)) => {
                return Err(CircuitError::Arity {
                    kind,
                    expected: kind.arity(),
                    got: gate.qubits.len(),
                })
            }
            (_, None) => {}
        }
        Ok(())
    }

    /// Measured `(qubit, clbit)` pairs sorted by classical bit.
    pub fn measurements(&self) -> Vec<(usize, usize)> {
        let mut m: Vec<(usize, usize)> = self
            .gates
            .iter()
            .filter(|g| g.kind == GateKind::Measure)
            .map(|g| (g.qubits[0], g.clbit.expect("measure carries a clbit")))
            .collect();
        m.sort_by_key(|&(_, c)| c);
        m
    }

    /// Qubits touched by at least one non-barrier operation, ascending.
    pub fn active_qubits(&self) -> Vec<usize> {
        let mut used = vec![false; self.n_qubits];
        for g in &self.gates {
            for &q in &g.qubits {
                used[q] = true;
            }
        }
        (0..self.n_qubits).filter(|&q| used[q]).collect()
    }

    /// Number of layers in the ASAP schedule.
    pub fn depth(&self) -> usize {
        layerize(self).depth()
    }

    /// Number of CNOTs once every SWAP is lowered to three of them.
    pub fn cnot_count(&self) -> usize {
        self.gates
            .iter()
            .map(|g| match g.kind {
                GateKind::Cx => 1,
                GateKind::Swap => 3,
                _ => 0,
            })
            .sum()
    }

    pub fn count_kind(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }
}

/// One ASAP time step: `slots[q]` holds the index of the gate occupying
/// lane `q`, or `None` when the lane is idle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub slots: Vec<Option<usize>>,
    /// Gate indices in this layer, in program order.
    pub gates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredCircuit {
    pub n_qubits: usize,
    pub layers: Vec<Layer>,
}

impl LayeredCircuit {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Gate indices in layer order; within a layer, program order.
    pub fn replay(&self) -> impl Iterator<Item = usize> + '_ {
        self.layers.iter().flat_map(|l| l.gates.iter().copied())
    }
}

/// Places each gate in the earliest layer where all of its qubits are free.
/// A barrier closes the current set of layers and occupies no lane.
pub fn layerize(c: &Circuit) -> LayeredCircuit {
    let n = c.n_qubits();
    let mut frontier = vec![0usize; n];
    let mut floor = 0usize;
    let mut layers: Vec<Layer> = Vec::new();
    for (idx, g) in c.gates().iter().enumerate() {
        if g.kind == GateKind::Barrier {
            floor = layers.len();
            continue;
        }
        let at = g
            .qubits
            .iter()
            .map(|&q| frontier[q])
            .max()
            .unwrap_or(0)
            .max(floor);
        while layers.len() <= at {
            layers.push(Layer {
                slots: vec![None; n],
                gates: Vec::new(),
            });
        }
        for &q in &g.qubits {
            layers[at].slots[q] = Some(idx);
            frontier[q] = at + 1;
        }
        layers[at].gates.push(idx);
    }
    LayeredCircuit {
        n_qubits: n,
        layers,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown gate `{name}` at {line}:{col}")]
    UnknownGate {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("qubit index {index} out of range (width {width}) at {line}:{col}")]
    QubitOutOfRange {
        line: usize,
        col: usize,
        index: usize,
        width: usize,
    },
    #[error("invalid statement at {line}:{col}: {source}")]
    Invalid {
        line: usize,
        col: usize,
        source: CircuitError,
    },
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col0: usize,
}

impl<'a> Cursor<'a> {
    fn col(&self) -> usize {
        self.col0 + self.pos + 1
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col: self.col(),
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(ch) = self.src[self.pos..].chars().next() {
            if ch.is_whitespace() {
                self.pos += ch.len_utf8();
            } else {
                break;
            }
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.src.len()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str, ParseError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .char_indices()
            .find(|&(i, ch)| {
                !(ch.is_ascii_alphanumeric() || ch == '_') || (i == 0 && ch.is_ascii_digit())
            })
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.err("expected identifier"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn uint(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|ch: char| !ch.is_ascii_digit())
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.err("expected integer"));
        }
        let v = rest[..len]
            .parse()
            .map_err(|_| self.err("integer too large"))?;
        self.pos += len;
        Ok(v)
    }

    fn float(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|ch: char| !(ch.is_ascii_digit() || matches!(ch, '.' | '-' | '+' | 'e' | 'E')))
            .unwrap_or(rest.len());
        let v: f64 = rest[..len]
            .parse()
            .map_err(|_| self.err("expected floating-point literal"))?;
        self.pos += len;
        Ok(v)
    }

    /// `name[index]`
    fn indexed(&mut self) -> Result<(&'a str, usize, usize), ParseError> {
        self.skip_ws();
        let col = self.col();
        let name = self.ident()?;
        self.expect("[")?;
        let i = self.uint()?;
        self.expect("]")?;
        Ok((name, i, col))
    }
}

/// Parses the QASM-like text format into a [`Circuit`].
pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    let mut qreg: Option<(String, usize)> = None;
    let mut creg: Option<(String, usize)> = None;
    let mut circuit: Option<Circuit> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let code = raw.split("//").next().unwrap_or("");
        let mut offset = 0usize;
        for stmt in code.split_inclusive(';') {
            let col0 = offset;
            offset += stmt.len();
            let (body, terminated) = match stmt.strip_suffix(';') {
                Some(b) => (b, true),
                None => (stmt, false),
            };
            if body.trim().is_empty() {
                continue;
            }
            let mut cur = Cursor {
                src: body,
                pos: 0,
                line,
                col0,
            };
            if !terminated {
                return Err(ParseError::Syntax {
                    line,
                    col: col0 + body.len() + 1,
                    msg: "missing `;`".into(),
                });
            }
            let head_col = {
                cur.skip_ws();
                cur.col()
            };
            let head = cur.ident()?;
            match head {
                "OPENQASM" => continue,
                "include" => continue,
                "qreg" | "creg" => {
                    let (name, size, _) = cur.indexed()?;
                    if !cur.at_end() {
                        return Err(cur.err("unexpected trailing input"));
                    }
                    let slot = if head == "qreg" { &mut qreg } else { &mut creg };
                    if slot.is_some() {
                        return Err(ParseError::Syntax {
                            line,
                            col: head_col,
                            msg: format!("only one {head} declaration is supported"),
                        });
                    }
                    if circuit.as_ref().is_some_and(|c| !c.is_empty()) {
                        return Err(ParseError::Syntax {
                            line,
                            col: head_col,
                            msg: "register declared after the first gate".into(),
                        });
                    }
                    *slot = Some((name.to_string(), size));
                    circuit = None;
                    continue;
                }
                _ => {}
            }

            let (qname, nq) = qreg.clone().ok_or_else(|| ParseError::Syntax {
                line,
                col: head_col,
                msg: "gate before `qreg` declaration".into(),
            })?;
            let nc = creg.as_ref().map(|c| c.1).unwrap_or(0);
            let circ = circuit.get_or_insert_with(|| Circuit::new(nq, nc));

            let qubit = |cur: &mut Cursor| -> Result<usize, ParseError> {
                let (name, i, col) = cur.indexed()?;
                if name != qname {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        msg: format!("unknown quantum register `{name}`"),
                    });
                }
                if i >= nq {
                    return Err(ParseError::QubitOutOfRange {
                        line,
                        col,
                        index: i,
                        width: nq,
                    });
                }
                Ok(i)
            };

            let gate = match head {
                "barrier" => {
                    // Operands are accepted but a barrier always spans the register.
                    if !cur.at_end() {
                        qubit(&mut cur)?;
                        while cur.eat(",") {
                            qubit(&mut cur)?;
                        }
                    }
                    Gate::barrier()
                }
                "measure" => {
                    let q = qubit(&mut cur)?;
                    cur.expect("->")?;
                    let (name, c, col) = cur.indexed()?;
                    match &creg {
                        Some((cn, _)) if cn == name => {}
                        _ => {
                            return Err(ParseError::Syntax {
                                line,
                                col,
                                msg: format!("unknown classical register `{name}`"),
                            })
                        }
                    }
                    Gate::measure(q, c)
                }
                name => {
                    let kind = GateKind::from_name(name)
                        .filter(|k| !matches!(k, GateKind::Measure | GateKind::Barrier))
                        .ok_or_else(|| ParseError::UnknownGate {
                            line,
                            col: head_col,
                            name: name.to_string(),
                        })?;
                    let mut params = Vec::new();
                    if cur.eat("(") {
                        params.push(cur.float()?);
                        while cur.eat(",") {
                            params.push(cur.float()?);
                        }
                        cur.expect(")")?;
                    }
                    let mut qubits = vec![qubit(&mut cur)?];
                    while cur.eat(",") {
                        qubits.push(qubit(&mut cur)?);
                    }
                    Gate {
                        kind,
                        qubits,
                        params,
                        clbit: None,
                    }
                }
            };
            if !cur.at_end() {
                return Err(cur.err("unexpected trailing input"));
            }
            circ.push(gate).map_err(|source| ParseError::Invalid {
                line,
                col: head_col,
                source,
            })?;
        }
    }

    match (circuit, qreg) {
        (Some(c), _) => Ok(c),
        (None, Some((_, nq))) => Ok(Circuit::new(nq, creg.map(|c| c.1).unwrap_or(0))),
        (None, None) => Err(ParseError::Syntax {
            line: text.lines().count().max(1),
            col: 1,
            msg: "missing `qreg` declaration".into(),
        }),
    }
}

/// Canonical text for `c`; [`parse_circuit`] maps it back to an equal value.
pub fn emit_circuit(c: &Circuit) -> String {
    let mut lines = vec![format!("qreg q[{}];", c.n_qubits())];
    if c.n_clbits() > 0 {
        lines.push(format!("creg c[{}];", c.n_clbits()));
    }
    for g in c.gates() {
        let line = match g.kind {
            GateKind::Barrier => "barrier;".to_string(),
            GateKind::Measure => format!(
                "measure q[{}] -> c[{}];",
                g.qubits[0],
                g.clbit.expect("measure carries a clbit")
            ),
            kind => {
                let mut s = kind.name().to_string();
                if !g.params.is_empty() {
                    let ps: Vec<String> = g.params.iter().map(|p| format!("{p:?}")).collect();
                    s.push('(');
                    s.push_str(&ps.join(","));
                    s.push(')');
                }
                let qs: Vec<String> = g.qubits.iter().map(|q| format!("q[{q}]")).collect();
                format!("{s} {};", qs.join(","))
            }
        };
        lines.push(line);
    }
    lines.join("\n")
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_circuit(self))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_single_gate() {
        let c = parse_circuit("qreg q[3]; h q[2];").unwrap();
        assert_eq!(c.n_qubits(), 3);
        assert_eq!(c.gates(), &[Gate::one(GateKind::H, 2)]);
    }

    #[test]
    fn parses_two_qubit_gate() {
        let c = parse_circuit("qreg q[4]; cx q[0],q[3];").unwrap();
        assert_eq!(c.gates(), &[Gate::two(GateKind::Cx, 0, 3)]);
    }

    #[test]
    fn emits_canonical_form() {
        let c = Circuit::from_gates(2, 0, [Gate::two(GateKind::Cx, 0, 1)]).unwrap();
        assert_eq!(emit_circuit(&c), "qreg q[2];\ncx q[0],q[1];");
        assert_eq!(emit_circuit(&Circuit::new(1, 0)), "qreg q[1];");
    }

    #[test]
    fn emit_normalizes_whitespace() {
        let src = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg  q[2] ;\n creg c[2];\n\n  h   q[0] ; // prep\ncx q[0] , q[1];\nmeasure q[0]->c[0];\nrz( -0.5 ) q[1];";
        let c = parse_circuit(src).unwrap();
        assert_eq!(
            emit_circuit(&c),
            "qreg q[2];\ncreg c[2];\nh q[0];\ncx q[0],q[1];\nmeasure q[0] -> c[0];\nrz(-0.5) q[1];"
        );
    }

    #[test]
    fn reports_errors_with_position() {
        match parse_circuit("qreg q[2];\nfoo q[0];") {
            Err(ParseError::UnknownGate { line, col, name }) => {
                assert_eq!((line, col, name.as_str()), (2, 1, "foo"));
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse_circuit("qreg q[2];\nh q[5];") {
            Err(ParseError::QubitOutOfRange { line, index, .. }) => {
                assert_eq!((line, index), (2, 5));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_circuit("qreg q[2];\nh q[0]"),
            Err(ParseError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_circuit("h q[0];"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_circuit("qreg q[2];\ncx q[0],q[0];"),
            Err(ParseError::Invalid {
                source: CircuitError::RepeatedQubit(0),
                ..
            })
        ));
        assert!(matches!(
            parse_circuit("qreg q[1];\ncreg c[1];\nmeasure q[0] -> c[0];\nmeasure q[0] -> c[0];"),
            Err(ParseError::Invalid {
                source: CircuitError::DoubleMeasure(0),
                ..
            })
        ));
    }

    #[test]
    fn layering_matches_asap() {
        let c = Circuit::from_gates(
            2,
            2,
            [
                Gate::one(GateKind::H, 0),
                Gate::two(GateKind::Cx, 0, 1),
                Gate::measure(0, 0),
                Gate::measure(1, 1),
            ],
        )
        .unwrap();
        let l = layerize(&c);
        let slots: Vec<_> = l.layers.iter().map(|l| l.slots.clone()).collect();
        assert_eq!(
            slots,
            vec![
                vec![Some(0), None],
                vec![Some(1), Some(1)],
                vec![Some(2), Some(3)]
            ]
        );

        let par = Circuit::from_gates(2, 0, [Gate::one(GateKind::H, 0), Gate::one(GateKind::H, 1)])
            .unwrap();
        assert_eq!(par.depth(), 1);
        let ser = Circuit::from_gates(1, 0, vec![Gate::one(GateKind::H, 0); 3]).unwrap();
        assert_eq!(ser.depth(), 3);
        assert_eq!(Circuit::new(3, 0).depth(), 0);
    }

    #[test]
    fn barrier_forces_boundary() {
        let c = Circuit::from_gates(
            2,
            0,
            [
                Gate::one(GateKind::H, 0),
                Gate::barrier(),
                Gate::one(GateKind::H, 1),
            ],
        )
        .unwrap();
        assert_eq!(c.depth(), 2);
        let l = layerize(&c);
        assert_eq!(l.layers[1].slots, vec![None, Some(2)]);
    }

    #[test]
    fn swap_counts_three_cnots() {
        let c = Circuit::from_gates(
            2,
            0,
            [Gate::two(GateKind::Swap, 0, 1), Gate::two(GateKind::Cx, 1, 0)],
        )
        .unwrap();
        assert_eq!(c.cnot_count(), 4);
    }

    pub(crate) fn arb_gate(n: usize, nc: usize) -> impl Strategy<Value = Gate> {
        let one = (0..10usize, 0..n, -7.0f64..7.0).prop_map(|(k, q, a)| {
            let kinds = [
                GateKind::Id,
                GateKind::X,
                GateKind::Y,
                GateKind::Z,
                GateKind::H,
                GateKind::S,
                GateKind::Sdg,
                GateKind::Sx,
                GateKind::Rz,
                GateKind::Reset,
            ];
            match kinds[k] {
                GateKind::Rz => Gate::rz(a, q),
                kind => Gate::one(kind, q),
            }
        });
        let two = (0..3usize, 0..n, 1..n.max(2)).prop_map(move |(k, a, d)| {
            let kind = [GateKind::Cx, GateKind::Cz, GateKind::Swap][k];
            Gate::two(kind, a, (a + d) % n)
        });
        let meas = (0..n, 0..nc).prop_map(|(q, c)| Gate::measure(q, c));
        prop_oneof![4 => one, 2 => two, 1 => Just(Gate::barrier()), 1 => meas]
    }

    pub(crate) fn arb_circuit() -> impl Strategy<Value = Circuit> {
        (2usize..5)
            .prop_flat_map(|n| (Just(n), prop::collection::vec(arb_gate(n, n), 0..40)))
            .prop_map(|(n, gates)| {
                let mut c = Circuit::new(n, n);
                for g in gates {
                    // Drop draws that violate invariants (repeated clbit).
                    let _ = c.push(g);
                }
                c
            })
    }

    proptest! {
        #[test]
        fn round_trip(c in arb_circuit()) {
            let back = parse_circuit(&emit_circuit(&c)).unwrap();
            prop_assert_eq!(back, c);
        }

        #[test]
        fn layering_preserves_lane_order(c in arb_circuit()) {
            let l = layerize(&c);
            let replayed: Vec<usize> = l.replay().collect();
            for q in 0..c.n_qubits() {
                let orig: Vec<usize> = (0..c.len()).filter(|&i| c.gates()[i].qubits.contains(&q)).collect();
                let rep: Vec<usize> = replayed.iter().copied().filter(|&i| c.gates()[i].qubits.contains(&q)).collect();
                prop_assert_eq!(orig, rep);
            }
            for layer in &l.layers {
                prop_assert!(!layer.gates.is_empty());
            }
            prop_assert!(l.depth() <= c.len());
        }

        #[test]
        fn depth_is_monotone(c in arb_circuit(), g in arb_gate(2, 2)) {
            let d = c.depth();
            let mut c2 = c.clone();
            if c2.push(g).is_ok() {
                prop_assert!(c2.depth() >= d);
            }
        }
    }
}

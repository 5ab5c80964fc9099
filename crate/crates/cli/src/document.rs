//! The batch document: a ring block, named objects and a job list.

use std::collections::BTreeMap;
use std::fmt;

use logconn::{Connection, Family, LinearData, QMat, RingSpec, SMat, Series, Q};
use num_rational::BigRational;
use num_traits::Zero;
use serde_json::{json, Map, Value};

use crate::locate::{locate, render, Seg};
use crate::number::{multi_index, parse_int, parse_rational, qmat_to_json, ring_to_json, smat_to_json};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    Syntax,
    Schema,
    DanglingReference,
    Inadmissible,
}

impl DiagnosticKind {
    pub fn name(self) -> &'static str {
        match self {
            DiagnosticKind::Syntax => "syntax error",
            DiagnosticKind::Schema => "invalid document",
            DiagnosticKind::DanglingReference => "dangling reference",
            DiagnosticKind::Inadmissible => "inadmissible monomial",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
    /// JSON pointer style path of the offending value.
    pub path: String,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.column, self.kind.name(), self.message)?;
        if !self.path.is_empty() {
            write!(f, " (at {})", self.path)?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostic {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Command {
    Check,
    NormalForm,
    Reduce,
    Expand,
    KernelCokernel,
    Sections,
    Cohomology,
    Ext1,
    BicomplexVerify,
    LiftRank1,
    PushForward,
    GaRep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArgKind {
    /// Name of an object in the document.
    Ref,
    Int,
}

pub struct ArgSpec {
    pub name: &'static str,
    pub kind: ArgKind,
    pub required: bool,
}

const fn arg(name: &'static str, kind: ArgKind, required: bool) -> ArgSpec {
    ArgSpec { name, kind, required }
}

impl Command {
    pub const ALL: [Command; 12] = [
        Command::Check,
        Command::NormalForm,
        Command::Reduce,
        Command::Expand,
        Command::KernelCokernel,
        Command::Sections,
        Command::Cohomology,
        Command::Ext1,
        Command::BicomplexVerify,
        Command::LiftRank1,
        Command::PushForward,
        Command::GaRep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::NormalForm => "normal-form",
            Command::Reduce => "reduce",
            Command::Expand => "expand",
            Command::KernelCokernel => "kernel-cokernel",
            Command::Sections => "sections",
            Command::Cohomology => "cohomology",
            Command::Ext1 => "ext1",
            Command::BicomplexVerify => "bicomplex-verify",
            Command::LiftRank1 => "lift-rank1",
            Command::PushForward => "push-forward",
            Command::GaRep => "ga-rep",
        }
    }

    pub fn from_name(s: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn args(self) -> &'static [ArgSpec] {
        use ArgKind::*;
        match self {
            Command::Check | Command::Reduce | Command::Sections | Command::PushForward => {
                const A: [ArgSpec; 1] = [arg("connection", Ref, true)];
                &A
            }
            Command::NormalForm => {
                const A: [ArgSpec; 2] = [arg("connection", Ref, true), arg("pivot", Int, false)];
                &A
            }
            Command::Expand | Command::GaRep => {
                const A: [ArgSpec; 1] = [arg("linear_data", Ref, true)];
                &A
            }
            Command::KernelCokernel => {
                const A: [ArgSpec; 1] = [arg("morphism", Ref, true)];
                &A
            }
            Command::Cohomology => {
                const A: [ArgSpec; 2] = [arg("connection", Ref, false), arg("linear_data", Ref, false)];
                &A
            }
            Command::Ext1 => {
                const A: [ArgSpec; 2] = [arg("source", Ref, true), arg("target", Ref, true)];
                &A
            }
            Command::BicomplexVerify => {
                const A: [ArgSpec; 2] = [arg("connection", Ref, true), arg("u_trunc", Int, false)];
                &A
            }
            Command::LiftRank1 => {
                const A: [ArgSpec; 2] = [arg("connection", Ref, true), arg("candidate", Ref, false)];
                &A
            }
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Arg {
    Ref(String),
    Int(u64),
}

impl Arg {
    pub fn to_json(&self) -> Value {
        match self {
            Arg::Ref(s) => json!(s),
            Arg::Int(i) => json!(i),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Job {
    pub command: Command,
    pub args: BTreeMap<String, Arg>,
}

impl Job {
    pub fn reference(&self, key: &str) -> Option<&str> {
        match self.args.get(key) {
            Some(Arg::Ref(s)) => Some(s),
            _ => None,
        }
    }

    pub fn int(&self, key: &str) -> Option<u64> {
        match self.args.get(key) {
            Some(Arg::Int(i)) => Some(*i),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        let args: Map<String, Value> = self.args.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
        json!({"command": self.command.name(), "args": args})
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Morphism {
    pub source: String,
    pub target: String,
    pub matrix: SMat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Object {
    Connection(Connection),
    LinearData(LinearData),
    Morphism(Morphism),
}

impl Object {
    pub fn kind(&self) -> &'static str {
        match self {
            Object::Connection(_) => "connection",
            Object::LinearData(_) => "linear_data",
            Object::Morphism(_) => "morphism",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub ring: RingSpec,
    pub u_trunc: Option<u32>,
    pub objects: BTreeMap<String, Object>,
    pub jobs: Vec<Job>,
}

pub fn parse_family(s: &str) -> Option<Family> {
    [Family::Relative, Family::Absolute, Family::UExtended]
        .into_iter()
        .find(|f| f.name() == s)
}

struct Parser<'a> {
    text: &'a str,
}

type Path = Vec<Seg>;

fn push(path: &[Seg], seg: impl Into<Seg>) -> Path {
    let mut p = path.to_vec();
    p.push(seg.into());
    p
}

impl Parser<'_> {
    fn diag(&self, kind: DiagnosticKind, path: &[Seg], message: impl Into<String>) -> Diagnostic {
        let (line, column) = locate(self.text, path);
        Diagnostic {
            kind,
            message: message.into(),
            path: render(path),
            line,
            column,
        }
    }

    fn schema(&self, path: &[Seg], message: impl Into<String>) -> Diagnostic {
        self.diag(DiagnosticKind::Schema, path, message)
    }

    fn object<'v>(&self, v: &'v Value, path: &[Seg]) -> Result<&'v Map<String, Value>, Diagnostic> {
        v.as_object().ok_or_else(|| self.schema(path, "expected an object"))
    }

    fn array<'v>(&self, v: &'v Value, path: &[Seg]) -> Result<&'v Vec<Value>, Diagnostic> {
        v.as_array().ok_or_else(|| self.schema(path, "expected an array"))
    }

    fn field<'v>(&self, m: &'v Map<String, Value>, key: &str, path: &[Seg]) -> Result<&'v Value, Diagnostic> {
        m.get(key).ok_or_else(|| self.schema(path, format!("missing field \"{key}\"")))
    }

    fn uint(&self, v: &Value, path: &[Seg]) -> Result<u64, Diagnostic> {
        v.as_u64().ok_or_else(|| self.schema(path, "expected a non-negative integer"))
    }

    fn small(&self, v: &Value, path: &[Seg]) -> Result<u32, Diagnostic> {
        let x = self.uint(v, path)?;
        u32::try_from(x).map_err(|_| self.schema(path, "integer out of range"))
    }

    fn only_keys(&self, m: &Map<String, Value>, allowed: &[&str], path: &[Seg]) -> Result<(), Diagnostic> {
        match m.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(self.schema(&push(path, k.as_str()), format!("unknown field \"{k}\""))),
            None => Ok(()),
        }
    }

    fn ring(&self, v: &Value) -> Result<(RingSpec, Option<u32>), Diagnostic> {
        let path = vec![Seg::from("ring")];
        let m = self.object(v, &path)?;
        self.only_keys(m, &["n", "r", "trunc", "u_trunc", "tail_weight"], &path)?;
        let get = |k: &str| -> Result<u32, Diagnostic> { self.small(self.field(m, k, &path)?, &push(&path, k)) };
        let (n, r, trunc) = (get("n")?, get("r")?, get("trunc")?);
        let u_trunc = m.get("u_trunc").map(|v| self.small(v, &push(&path, "u_trunc"))).transpose()?;
        let mut ring = RingSpec::new(n as usize, r as usize, trunc).map_err(|e| self.schema(&path, e.to_string()))?;
        if let Some(w) = m.get("tail_weight") {
            let w = self.small(w, &push(&path, "tail_weight"))?;
            if w == 0 || n != r {
                return Err(self.schema(&push(&path, "tail_weight"), "tail weight needs n = r and w >= 1"));
            }
            ring = ring.with_tail_weight(w);
        }
        Ok((ring, u_trunc))
    }

    fn rational(&self, v: &Value, path: &[Seg]) -> Result<Q, Diagnostic> {
        parse_rational(v).ok_or_else(|| self.schema(path, "expected an integer or a \"p/q\" string"))
    }

    fn term(&self, v: &Value, ring: RingSpec, ut: u32, out: &mut Series, path: &[Seg]) -> Result<(), Diagnostic> {
        let t = self.array(v, path)?;
        if t.len() != 3 && t.len() != 4 {
            return Err(self.schema(path, "a term is [multi-index, numerator, denominator, optional u-degree]"));
        }
        let kp = push(path, 0);
        let k = multi_index(&t[0], ring.n)
            .ok_or_else(|| self.schema(&kp, format!("expected {} non-negative exponents", ring.n)))?;
        if !ring.is_admissible(&k) {
            return Err(self.diag(
                DiagnosticKind::Inadmissible,
                &kp,
                format!("{k} is not an admissible monomial of {ring}"),
            ));
        }
        let num = parse_int(&t[1]).ok_or_else(|| self.schema(&push(path, 1), "expected an integer"))?;
        let den = parse_int(&t[2]).ok_or_else(|| self.schema(&push(path, 2), "expected an integer"))?;
        if den.is_zero() {
            return Err(self.schema(&push(path, 2), "zero denominator"));
        }
        let j = match t.get(3) {
            Some(j) => self.small(j, &push(path, 3))?,
            None => 0,
        };
        if j > ut {
            return Err(self.diag(
                DiagnosticKind::Inadmissible,
                &push(path, 3),
                format!("u-degree {j} exceeds the u-truncation {ut}"),
            ));
        }
        out.add_term(k, j, BigRational::new(num, den));
        Ok(())
    }

    fn sparse(&self, v: &Value, ring: RingSpec, ut: u32, rows: usize, cols: usize, path: &[Seg]) -> Result<SMat, Diagnostic> {
        let mut m = SMat::zeros(ring, ut, rows, cols);
        for (e, entry) in self.array(v, path)?.iter().enumerate() {
            let ep = push(path, e);
            let a = self.array(entry, &ep)?;
            if a.len() != 3 {
                return Err(self.schema(&ep, "an entry is [row, col, terms]"));
            }
            let i = self.uint(&a[0], &push(&ep, 0))? as usize;
            let j = self.uint(&a[1], &push(&ep, 1))? as usize;
            if i >= rows || j >= cols {
                return Err(self.schema(&ep, format!("entry ({i}, {j}) outside a {rows}x{cols} matrix")));
            }
            let mut s = m.get(i, j).clone();
            for (t, term) in self.array(&a[2], &push(&ep, 2))?.iter().enumerate() {
                self.term(term, ring, ut, &mut s, &push(&push(&ep, 2), t))?;
            }
            m.set(i, j, s);
        }
        Ok(m)
    }

    fn connection(&self, m: &Map<String, Value>, ring: RingSpec, u_trunc: Option<u32>, path: &[Seg]) -> Result<Connection, Diagnostic> {
        self.only_keys(m, &["kind", "family", "rank", "matrices"], path)?;
        let fp = push(path, "family");
        let family = self
            .field(m, "family", path)?
            .as_str()
            .and_then(parse_family)
            .ok_or_else(|| self.schema(&fp, "family is \"relative\", \"absolute\" or \"u-extended\""))?;
        let ut = match family {
            Family::UExtended => u_trunc.ok_or_else(|| self.schema(&fp, "u-extended connections need ring.u_trunc"))?,
            _ => 0,
        };
        let rank = self.uint(self.field(m, "rank", path)?, &push(path, "rank"))? as usize;
        let derivations = family.derivations(&ring);
        let mut mats: Vec<SMat> = derivations.iter().map(|_| SMat::zeros(ring, ut, rank, rank)).collect();
        if let Some(ms) = m.get("matrices") {
            let mp = push(path, "matrices");
            for (name, v) in self.object(ms, &mp)? {
                let np = push(&mp, name.as_str());
                let idx = derivations
                    .iter()
                    .position(|d| d.to_string() == *name)
                    .ok_or_else(|| self.schema(&np, format!("{name} is not a derivation of the {family} family")))?;
                mats[idx] = self.sparse(v, ring, ut, rank, rank, &np)?;
            }
        }
        Connection::with_rank(ring, family, ut, rank, mats).map_err(|e| self.schema(path, e.to_string()))
    }

    fn dense(&self, v: &Value, dim: usize, path: &[Seg]) -> Result<QMat, Diagnostic> {
        let rows = self.array(v, path)?;
        if rows.len() != dim {
            return Err(self.schema(path, format!("expected {dim} rows")));
        }
        let mut out = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let rp = push(path, i);
            let row = self.array(row, &rp)?;
            if row.len() != dim {
                return Err(self.schema(&rp, format!("expected {dim} entries")));
            }
            out.push(
                row.iter()
                    .enumerate()
                    .map(|(j, x)| self.rational(x, &push(&rp, j)))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        Ok(if dim == 0 { QMat::zeros(0, 0) } else { QMat::from_rows(out) })
    }

    fn linear_data(&self, m: &Map<String, Value>, path: &[Seg]) -> Result<LinearData, Diagnostic> {
        self.only_keys(m, &["kind", "dim", "nilpotents"], path)?;
        let dim = self.uint(self.field(m, "dim", path)?, &push(path, "dim"))? as usize;
        let np = push(path, "nilpotents");
        let mats = self
            .array(self.field(m, "nilpotents", path)?, &np)?
            .iter()
            .enumerate()
            .map(|(i, v)| self.dense(v, dim, &push(&np, i)))
            .collect::<Result<Vec<_>, _>>()?;
        LinearData::new(dim, mats).map_err(|e| self.schema(path, e.to_string()))
    }

    fn reference(&self, m: &Map<String, Value>, key: &str, path: &[Seg]) -> Result<String, Diagnostic> {
        self.field(m, key, path)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| self.schema(&push(path, key), "expected an object name"))
    }

    fn job(&self, v: &Value, path: &[Seg], objects: &BTreeMap<String, Value>) -> Result<Job, Diagnostic> {
        let m = self.object(v, path)?;
        self.only_keys(m, &["command", "args"], path)?;
        let cp = push(path, "command");
        let name = self
            .field(m, "command", path)?
            .as_str()
            .ok_or_else(|| self.schema(&cp, "expected a command name"))?;
        let command = Command::from_name(name).ok_or_else(|| self.schema(&cp, format!("unknown command \"{name}\"")))?;
        let ap = push(path, "args");
        let empty = Map::new();
        let given = match m.get("args") {
            Some(a) => self.object(a, &ap)?,
            None => &empty,
        };
        let specs = command.args();
        let mut args = BTreeMap::new();
        for (key, value) in given {
            let kp = push(&ap, key.as_str());
            let spec = specs
                .iter()
                .find(|s| s.name == key)
                .ok_or_else(|| self.schema(&kp, format!("{command} takes no argument \"{key}\"")))?;
            let a = match spec.kind {
                ArgKind::Ref => {
                    let name = value.as_str().ok_or_else(|| self.schema(&kp, "expected an object name"))?;
                    if !objects.contains_key(name) {
                        return Err(self.diag(
                            DiagnosticKind::DanglingReference,
                            &kp,
                            format!("no object named \"{name}\""),
                        ));
                    }
                    Arg::Ref(name.to_string())
                }
                ArgKind::Int => Arg::Int(self.uint(value, &kp)?),
            };
            args.insert(key.clone(), a);
        }
        if let Some(s) = specs.iter().find(|s| s.required && !args.contains_key(s.name)) {
            return Err(self.schema(&ap, format!("{command} needs the argument \"{}\"", s.name)));
        }
        Ok(Job { command, args })
    }
}

/// Parses and validates a document. Every object is checked against the
/// ring block; morphisms must name connections of matching ranks.
pub fn parse_document(text: &str) -> Result<Document, Diagnostic> {
    let value: Value = serde_json::from_str(text).map_err(|e| Diagnostic {
        kind: DiagnosticKind::Syntax,
        message: e.to_string(),
        path: String::new(),
        line: e.line(),
        column: e.column(),
    })?;
    let p = Parser { text };
    let root = p.object(&value, &[])?;
    p.only_keys(root, &["ring", "objects", "jobs"], &[])?;
    let (ring, u_trunc) = p.ring(p.field(root, "ring", &[])?)?;
    let op = vec![Seg::from("objects")];
    let raw: BTreeMap<String, Value> = match root.get("objects") {
        Some(o) => p.object(o, &op)?.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        None => BTreeMap::new(),
    };
    let mut objects = BTreeMap::new();
    // Morphisms last: they need their endpoints.
    let mut pending = Vec::new();
    for (name, v) in &raw {
        let path = push(&op, name.as_str());
        let m = p.object(v, &path)?;
        let kind = p.field(m, "kind", &path)?.as_str().unwrap_or_default();
        match kind {
            "connection" => {
                objects.insert(name.clone(), Object::Connection(p.connection(m, ring, u_trunc, &path)?));
            }
            "linear_data" => {
                objects.insert(name.clone(), Object::LinearData(p.linear_data(m, &path)?));
            }
            "morphism" => pending.push((name, m, path)),
            _ => {
                return Err(p.schema(
                    &push(&path, "kind"),
                    "kind is \"connection\", \"linear_data\" or \"morphism\"",
                ))
            }
        }
    }
    for (name, m, path) in pending {
        p.only_keys(m, &["kind", "source", "target", "matrix"], &path)?;
        let mut ends = Vec::new();
        for key in ["source", "target"] {
            let r = p.reference(m, key, &path)?;
            let kp = push(&path, key);
            match objects.get(&r) {
                Some(Object::Connection(c)) => ends.push(c.clone()),
                Some(_) => return Err(p.schema(&kp, format!("\"{r}\" is not a connection"))),
                None => {
                    return Err(p.diag(DiagnosticKind::DanglingReference, &kp, format!("no object named \"{r}\"")))
                }
            }
        }
        if ends[0].family() != ends[1].family() || ends[0].u_trunc() != ends[1].u_trunc() {
            return Err(p.schema(&path, "source and target must share family and u-truncation"));
        }
        let matrix = p.sparse(
            p.field(m, "matrix", &path)?,
            ring,
            ends[0].u_trunc(),
            ends[1].rank(),
            ends[0].rank(),
            &push(&path, "matrix"),
        )?;
        objects.insert(
            name.clone(),
            Object::Morphism(Morphism {
                source: p.reference(m, "source", &path)?,
                target: p.reference(m, "target", &path)?,
                matrix,
            }),
        );
    }
    let jp = vec![Seg::from("jobs")];
    let jobs = match root.get("jobs") {
        Some(j) => p
            .array(j, &jp)?
            .iter()
            .enumerate()
            .map(|(i, v)| p.job(v, &push(&jp, i), &raw))
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    Ok(Document {
        ring,
        u_trunc,
        objects,
        jobs,
    })
}

pub fn connection_to_json(c: &Connection) -> Value {
    let mats: Map<String, Value> = c
        .derivations()
        .iter()
        .zip(c.mats())
        .map(|(d, m)| (d.to_string(), smat_to_json(m)))
        .collect();
    json!({"kind": "connection", "family": c.family().name(), "rank": c.rank(), "matrices": mats})
}

pub fn linear_data_to_json(l: &LinearData) -> Value {
    let ops: Vec<Value> = l.nilpotents.iter().map(qmat_to_json).collect();
    json!({"kind": "linear_data", "dim": l.dim, "nilpotents": ops})
}

pub fn object_to_json(o: &Object) -> Value {
    match o {
        Object::Connection(c) => connection_to_json(c),
        Object::LinearData(l) => linear_data_to_json(l),
        Object::Morphism(m) => {
            json!({"kind": "morphism", "source": m.source, "target": m.target, "matrix": smat_to_json(&m.matrix)})
        }
    }
}

pub fn document_to_json(doc: &Document) -> Value {
    let objects: Map<String, Value> = doc.objects.iter().map(|(k, o)| (k.clone(), object_to_json(o))).collect();
    let jobs: Vec<Value> = doc.jobs.iter().map(Job::to_json).collect();
    json!({"ring": ring_to_json(&doc.ring, doc.u_trunc), "objects": objects, "jobs": jobs})
}

/// Canonical text: sorted keys, two-space indentation, trailing newline.
pub fn serialize_document(doc: &Document) -> String {
    let mut s = serde_json::to_string_pretty(&document_to_json(doc)).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Applies `--trunc` / `--u-trunc` overrides to every object.
pub fn retruncate(doc: &Document, trunc: Option<u32>, u_trunc: Option<u32>) -> Result<Document, String> {
    let ring = doc.ring.with_trunc(trunc.unwrap_or(doc.ring.trunc));
    let u = u_trunc.or(doc.u_trunc);
    let mut objects = BTreeMap::new();
    for (name, o) in &doc.objects {
        let o = match o {
            Object::Connection(c) => {
                let ut = (c.family() == Family::UExtended).then_some(u).flatten();
                Object::Connection(c.retruncate(ring.trunc, ut).map_err(|e| format!("{name}: {e}"))?)
            }
            Object::LinearData(l) => Object::LinearData(l.clone()),
            Object::Morphism(m) => {
                let ut = match doc.objects.get(&m.source) {
                    Some(Object::Connection(c)) if c.family() == Family::UExtended => u.unwrap_or(c.u_trunc()),
                    _ => 0,
                };
                let matrix = m.matrix.map_monomials(ring, ut, |k, j| Some((k.clone(), j)));
                Object::Morphism(Morphism { matrix, ..m.clone() })
            }
        };
        objects.insert(name.clone(), o);
    }
    Ok(Document {
        ring,
        u_trunc: u,
        objects,
        jobs: doc.jobs.clone(),
    })
}

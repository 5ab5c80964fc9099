//! Dispatch of document jobs and the reports they produce.

use logconn::homological::{
    check_horizontal, check_lift_uniqueness, de_rham_cohomology, ext1, ext1_linear_data, ga_rep, homomorphism_law_holds,
    horizontal_sections, kernel_cokernel, lift_rank1, linear_data_cohomology, nilpotent_log, pushforward_log_point,
    u_bicomplex_cohomology, HorizontalMorphism, LiftVerdict,
};
use logconn::normal_form::gauge::normal_form_residual;
use logconn::normal_form::{
    expand_from_linear_data, expand_model, gauge_normal_form, nilpotent_trigonalize, reduce_model, reduce_to_linear_data,
};
use logconn::{Connection, LinearData, SMat};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::document::{connection_to_json, linear_data_to_json, Command, Document, Job, Object};
use crate::number::{q_to_json, qmat_to_json, ring_to_json, series_to_json, smat_to_json, vector_to_json};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Computation without a pass/fail criterion.
    Info,
    Error,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Info => "info",
            Verdict::Error => "error",
        }
    }

    pub fn ok(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::Info)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub index: usize,
    pub job: Job,
    pub parameters: Value,
    pub verdict: Verdict,
    pub message: String,
    pub result: Value,
}

impl Report {
    pub fn to_json(&self) -> Value {
        json!({
            "report": "job",
            "job": self.index,
            "command": self.job.command.name(),
            "args": self.job.to_json()["args"],
            "parameters": self.parameters,
            "verdict": self.verdict.name(),
            "message": self.message,
            "result": self.result,
        })
    }

    pub fn to_text(&self) -> String {
        let args: Vec<String> = self
            .job
            .args
            .iter()
            .map(|(k, v)| format!("{k}={}", v.to_json()))
            .collect();
        format!(
            "[{}] job {} {} {}: {}",
            self.verdict.name().to_uppercase(),
            self.index,
            self.job.command,
            args.join(" "),
            self.message
        )
    }
}

struct Outcome {
    verdict: Verdict,
    message: String,
    result: Value,
}

fn outcome(pass: bool, message: impl Into<String>, result: Value) -> Outcome {
    Outcome {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        message: message.into(),
        result,
    }
}

fn info(message: impl Into<String>, result: Value) -> Outcome {
    Outcome {
        verdict: Verdict::Info,
        message: message.into(),
        result,
    }
}

type JobResult = Result<Outcome, String>;

fn connection<'a>(doc: &'a Document, job: &Job, key: &str) -> Result<&'a Connection, String> {
    let name = job.reference(key).ok_or_else(|| format!("missing argument {key}"))?;
    match doc.objects.get(name) {
        Some(Object::Connection(c)) => Ok(c),
        Some(o) => Err(format!("{key} \"{name}\" is a {}, not a connection", o.kind())),
        None => Err(format!("no object named \"{name}\"")),
    }
}

fn linear_data<'a>(doc: &'a Document, job: &Job, key: &str) -> Result<&'a LinearData, String> {
    let name = job.reference(key).ok_or_else(|| format!("missing argument {key}"))?;
    match doc.objects.get(name) {
        Some(Object::LinearData(l)) => Ok(l),
        Some(o) => Err(format!("{key} \"{name}\" is a {}, not linear data", o.kind())),
        None => Err(format!("no object named \"{name}\"")),
    }
}

fn residues_json(c: &Connection) -> Value {
    let r = c.residues();
    Value::Object(r.derivations.iter().zip(&r.mats).map(|(d, m)| (d.to_string(), qmat_to_json(m))).collect())
}

fn check(c: &Connection) -> JobResult {
    let integ = c.check_integrability();
    let residuals: Vec<Value> = integ
        .failures
        .iter()
        .map(|f| json!({"first": f.first.to_string(), "second": f.second.to_string(), "residual": smat_to_json(&f.residual)}))
        .collect();
    if !integ.passed() {
        let f = &integ.failures[0];
        return Ok(outcome(
            false,
            format!("not integrable: [{}, {}] residual is nonzero", f.first, f.second),
            json!({"integrable": false, "residuals": residuals, "residues": residues_json(c)}),
        ));
    }
    let nr = c.check_nilpotent_residues().map_err(|e| e.to_string())?;
    let witness = nr
        .witness
        .as_ref()
        .map_or(Value::Null, |w| json!({"label": w.label, "matrix": qmat_to_json(&w.matrix)}));
    let message = match &nr.witness {
        None => "integrable; residues nilpotent".to_string(),
        Some(w) => format!("residues not nilpotent: witness {} = {}", w.label, qmat_to_json(&w.matrix)),
    };
    Ok(outcome(
        nr.nilpotent,
        message,
        json!({"integrable": true, "residuals": residuals, "residues": residues_json(c), "nilpotent": nr.nilpotent, "witness": witness}),
    ))
}

fn normal_form(c: &Connection, pivot: usize) -> JobResult {
    let ring = c.ring();
    let idx = c
        .index_of(logconn::Derivation::Log(pivot))
        .ok_or_else(|| format!("log{pivot} is not a derivation of this connection"))?;
    c.require_nr().map_err(|e| e.to_string())?;
    let (p, _) = nilpotent_trigonalize(c.rank(), &[c.mats()[idx].constant_term()]).map_err(|e| e.to_string())?;
    let c = c.gauge(&SMat::constant(ring, c.u_trunc(), &p)).map_err(|e| e.to_string())?;
    let nf = gauge_normal_form(&c, pivot).map_err(|e| e.to_string())?;
    let residual = normal_form_residual(&c, pivot, &nf).truncated(ring.trunc as i64, c.u_trunc() as i64);
    let ok = residual.is_zero();
    Ok(outcome(
        ok,
        if ok { "defining equation holds to the truncation" } else { "defining equation fails" },
        json!({
            "pivot": format!("log{pivot}"),
            "trigonalizer": qmat_to_json(&p),
            "transform": smat_to_json(nf.transform.matrix()),
            "normalized": smat_to_json(&nf.normalized),
            "connection": connection_to_json(&nf.connection),
            "residual": smat_to_json(&residual),
            "unstabilized_at": nf.unstabilized_at,
        }),
    ))
}

fn reduce(c: &Connection) -> JobResult {
    let red = reduce_model(c).map_err(|e| e.to_string())?;
    let expanded = expand_model(&red.model, c.ring()).map_err(|e| e.to_string())?;
    let ok = red.transform.verify(c, &expanded).map_err(|e| e.to_string())?;
    let ops: Vec<Value> = red
        .model
        .ops
        .iter()
        .map(|op| Value::Array(op.iter().map(qmat_to_json).collect()))
        .collect();
    let ld = red.model.linear_data().map_or(Value::Null, |l| linear_data_to_json(&l));
    Ok(outcome(
        ok,
        if ok { "gauge certificate verified" } else { "gauge certificate has a nonzero residual" },
        json!({
            "family": red.model.family.name(),
            "dim": red.model.dim,
            "u_trunc": red.model.u_trunc,
            "operators": ops,
            "linear_data": ld,
            "transform": smat_to_json(red.transform.matrix()),
            "unstabilized_at": red.unstabilized_at,
        }),
    ))
}

fn expand(doc: &Document, l: &LinearData) -> JobResult {
    let c = expand_from_linear_data(l, doc.ring).map_err(|e| e.to_string())?;
    let back = reduce_to_linear_data(&c).map_err(|e| e.to_string())?;
    let ok = back == *l;
    Ok(outcome(
        ok,
        if ok { "reduce(expand(L)) = L" } else { "reduce(expand(L)) differs from L" },
        json!({"connection": connection_to_json(&c), "reduced": linear_data_to_json(&back)}),
    ))
}

fn kernel_job(doc: &Document, job: &Job) -> JobResult {
    let name = job.reference("morphism").ok_or("missing argument morphism")?;
    let Some(Object::Morphism(m)) = doc.objects.get(name) else {
        return Err(format!("\"{name}\" is not a morphism"));
    };
    let get = |n: &str| match doc.objects.get(n) {
        Some(Object::Connection(c)) => Ok(c.clone()),
        _ => Err(format!("\"{n}\" is not a connection")),
    };
    let phi = HorizontalMorphism::new(get(&m.source)?, get(&m.target)?, m.matrix.clone()).map_err(|e| e.to_string())?;
    let hz = check_horizontal(&phi);
    if !hz.passed() {
        let res: Vec<Value> = hz.residuals.iter().map(|(d, r)| json!([d.to_string(), smat_to_json(r)])).collect();
        return Ok(outcome(false, "morphism is not horizontal", json!({"residuals": res})));
    }
    let kc = match kernel_cokernel(&phi) {
        Ok(kc) => kc,
        Err(e) => return Ok(outcome(false, format!("rejected: {e}"), Value::Null)),
    };
    let (s1, s2) = (phi.source.rank(), phi.target.rank());
    let rank = s1 - kc.kernel.rank();
    let ok = check_horizontal(&kc.inclusion).passed()
        && check_horizontal(&kc.projection).passed()
        && s2 - kc.cokernel.rank() == rank;
    Ok(outcome(
        ok,
        format!("kernel rank {}, cokernel rank {}", kc.kernel.rank(), kc.cokernel.rank()),
        json!({
            "kernel": connection_to_json(&kc.kernel),
            "cokernel": connection_to_json(&kc.cokernel),
            "inclusion": smat_to_json(&kc.inclusion.mat),
            "projection": smat_to_json(&kc.projection.mat),
            "intertwiner": qmat_to_json(&kc.intertwiner),
        }),
    ))
}

fn sections(c: &Connection) -> JobResult {
    let s = horizontal_sections(c).map_err(|e| e.to_string())?;
    let basis: Vec<Value> = s.basis.iter().map(|v| vector_to_json(v)).collect();
    Ok(info(
        format!("{} horizontal sections", s.dim),
        json!({"dim": s.dim, "basis": basis, "via_linear_data": s.via_linear_data}),
    ))
}

fn cohomology(doc: &Document, job: &Job) -> JobResult {
    match (job.reference("connection"), job.reference("linear_data")) {
        (Some(_), None) => {
            let c = connection(doc, job, "connection")?;
            let rep = de_rham_cohomology(c).map_err(|e| e.to_string())?;
            let graded = rep.graded.as_ref().map_or(Value::Null, |g| {
                Value::Array(
                    g.iter()
                        .map(|m| Value::Object(m.iter().map(|(j, d)| (j.to_string(), json!(d))).collect()))
                        .collect(),
                )
            });
            let ok = rep.euler_consistent();
            Ok(outcome(
                ok,
                format!("dims {:?}", rep.dims),
                json!({
                    "trunc": rep.trunc,
                    "u_trunc": rep.u_trunc,
                    "cochain_dims": rep.cochain_dims,
                    "dims": rep.dims,
                    "graded": graded,
                    "previous": rep.previous,
                    "stabilized": rep.stabilized,
                    "euler_consistent": ok,
                }),
            ))
        }
        (None, Some(_)) => {
            let l = linear_data(doc, job, "linear_data")?;
            let dims = linear_data_cohomology(l);
            Ok(info(format!("dims {dims:?}"), json!({"dims": dims})))
        }
        _ => Err("cohomology takes exactly one of connection, linear_data".into()),
    }
}

fn ext1_job(doc: &Document, job: &Job) -> JobResult {
    let (a, b) = (job.reference("source").unwrap_or_default(), job.reference("target").unwrap_or_default());
    match (doc.objects.get(a), doc.objects.get(b)) {
        (Some(Object::Connection(c1)), Some(Object::Connection(c2))) => {
            let e = ext1(c1, c2).map_err(|e| e.to_string())?;
            let cocycles: Vec<Value> = e
                .cocycles
                .iter()
                .map(|cl| Value::Array(cl.iter().map(qmat_to_json).collect()))
                .collect();
            let ext: Vec<Value> = e.extensions.iter().map(connection_to_json).collect();
            Ok(info(
                format!("dim Ext1 = {}", e.dim),
                json!({"dim": e.dim, "cocycles": cocycles, "extensions": ext, "de_rham_h1": e.de_rham_h1}),
            ))
        }
        (Some(Object::LinearData(l1)), Some(Object::LinearData(l2))) => {
            let classes = ext1_linear_data(l1, l2).map_err(|e| e.to_string())?;
            let cocycles: Vec<Value> = classes
                .iter()
                .map(|cl| Value::Array(cl.iter().map(qmat_to_json).collect()))
                .collect();
            Ok(info(format!("dim Ext1 = {}", classes.len()), json!({"dim": classes.len(), "cocycles": cocycles})))
        }
        _ => Err("ext1 takes two connections or two linear data".into()),
    }
}

fn bicomplex(doc: &Document, c: &Connection, job: &Job) -> JobResult {
    let t = job.int("u_trunc").map(|t| t as u32).or(doc.u_trunc).unwrap_or(2);
    let rep = u_bicomplex_cohomology(c, t).map_err(|e| e.to_string())?;
    let ok = rep.equal && rep.column_exact;
    let message = match (rep.equal, rep.column_exact) {
        (true, true) => "equal on stabilized degrees".to_string(),
        (false, _) => "total and relative cohomology differ on a stabilized degree".to_string(),
        (true, false) => "a column is not exact away from the bottom row".to_string(),
    };
    let columns: Vec<Value> = rep.columns.iter().map(|(o, e)| json!({"observed": o, "expected": e})).collect();
    Ok(outcome(
        ok,
        message,
        json!({
            "trunc": rep.trunc,
            "u_trunc": rep.u_trunc,
            "total": rep.total,
            "total_previous": rep.total_previous,
            "relative": rep.relative,
            "relative_previous": rep.relative_previous,
            "stabilized": rep.stabilized,
            "equal": rep.equal,
            "columns": columns,
            "column_exact": rep.column_exact,
        }),
    ))
}

fn lift(doc: &Document, c: &Connection, job: &Job) -> JobResult {
    let l = lift_rank1(c).map_err(|e| e.to_string())?;
    let restricts = l.lift.restrict().map_err(|e| e.to_string())? == *c;
    let mut result = json!({
        "lift": connection_to_json(&l.lift),
        "alpha": series_to_json(&l.alpha),
        "trivializer": series_to_json(&l.trivializer),
        "restricts": restricts,
    });
    if job.reference("candidate").is_none() {
        return Ok(outcome(
            restricts,
            if restricts { "lift restricts to the input" } else { "lift does not restrict to the input" },
            result,
        ));
    }
    let cand = connection(doc, job, "candidate")?;
    let v = check_lift_uniqueness(c, cand).map_err(|e| e.to_string())?;
    let (name, detail) = match &v {
        LiftVerdict::Equal => ("equal", Value::Null),
        LiftVerdict::NotALift => ("not-a-lift", Value::Null),
        LiftVerdict::NonConstantDifference { derivation, residual } => (
            "non-constant-difference",
            json!({"derivation": derivation.to_string(), "residual": series_to_json(residual)}),
        ),
        LiftVerdict::NonNilpotentResidue { residue } => ("non-nilpotent-residue", json!({"residue": q_to_json(residue)})),
    };
    result["candidate"] = json!({"verdict": name, "detail": detail});
    Ok(outcome(restricts && v.valid(), format!("candidate: {name}"), result))
}

fn push_forward(c: &Connection) -> JobResult {
    let l = pushforward_log_point(c).map_err(|e| e.to_string())?;
    Ok(info(format!("log point data of dimension {}", l.dim), linear_data_to_json(&l)))
}

fn ga(l: &LinearData) -> JobResult {
    let mut reps = Vec::new();
    let mut ok = true;
    for n in &l.nilpotents {
        let rep = ga_rep(n).map_err(|e| e.to_string())?;
        let law = homomorphism_law_holds(&rep);
        let log_ok = nilpotent_log(&rep).map_err(|e| e.to_string())? == *n;
        ok &= law && log_ok;
        let coeffs: Vec<Value> = rep.coeffs.iter().map(qmat_to_json).collect();
        reps.push(json!({"coefficients": coeffs, "homomorphism_law": law, "log_recovers_operator": log_ok}));
    }
    Ok(outcome(
        ok,
        if ok { "exp(Nt) is a homomorphism with logarithm N" } else { "homomorphism law fails" },
        json!({"representations": reps}),
    ))
}

fn dispatch(doc: &Document, job: &Job) -> JobResult {
    match job.command {
        Command::Check => check(connection(doc, job, "connection")?),
        Command::NormalForm => normal_form(connection(doc, job, "connection")?, job.int("pivot").unwrap_or(1) as usize),
        Command::Reduce => reduce(connection(doc, job, "connection")?),
        Command::Expand => expand(doc, linear_data(doc, job, "linear_data")?),
        Command::KernelCokernel => kernel_job(doc, job),
        Command::Sections => sections(connection(doc, job, "connection")?),
        Command::Cohomology => cohomology(doc, job),
        Command::Ext1 => ext1_job(doc, job),
        Command::BicomplexVerify => bicomplex(doc, connection(doc, job, "connection")?, job),
        Command::LiftRank1 => lift(doc, connection(doc, job, "connection")?, job),
        Command::PushForward => push_forward(connection(doc, job, "connection")?),
        Command::GaRep => ga(linear_data(doc, job, "linear_data")?),
    }
}

/// Runs one job. Failures of the computation become `error` reports.
pub fn run_job(doc: &Document, index: usize, job: &Job) -> Report {
    let mut parameters = Map::new();
    parameters.insert("ring".into(), ring_to_json(&doc.ring, doc.u_trunc));
    let (verdict, message, result) = match dispatch(doc, job) {
        Ok(o) => (o.verdict, o.message, o.result),
        Err(e) => (Verdict::Error, e, Value::Null),
    };
    Report {
        index,
        job: job.clone(),
        parameters: Value::Object(parameters),
        verdict,
        message,
        result,
    }
}

/// Runs the jobs in parallel; reports come back in the given order.
pub fn run_jobs(doc: &Document, jobs: &[(usize, Job)]) -> Vec<Report> {
    jobs.par_iter().map(|(i, j)| run_job(doc, *i, j)).collect()
}

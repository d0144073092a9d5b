//! Command implementations.

use std::path::{Path, PathBuf};

use serde_json::json;
use streamcore::ast::{FormTag, FunDef, Ident, Span};
use streamcore::exec::{generate_inputs, read_csv, ExecError, MachineProgram};
use streamcore::frontend::{load_source, FrontendError, LoadError, ProgramDB};
use streamcore::graph::to_dot;
use streamcore::logic::{
    analyze_matching, infer_domain, infer_third_domain, print_third_program, satisfy_relation, third_from_box, OpEval,
};
use streamcore::normalize::{
    normalize_program, print_normal_program, Compiled, NormalProgram, NormalizeError, NormalizeOptions,
};
use streamcore::relsem::{
    enumerate_relation, show_tuple, AcceptableStateSpace, FiniteDomain, Row, StepRelation, Value,
};

use crate::report::{Format, Loc, Report};
use crate::{Command, DomainArgs, RunArgs, TraceFormat};

pub fn dispatch(format: Format, cmd: Command) -> u8 {
    let mut r = Report::new(format);
    match cmd {
        Command::Check { files } => check(&mut r, &files),
        Command::Normalize { file, to, no_copyprop, output } => {
            normalize(&mut r, &file, to, !no_copyprop);
            if let Some(path) = output {
                write_output(&mut r, &path);
            }
        }
        Command::Analyze { file, select, domain } => analyze(&mut r, &file, select.fun.as_deref(), &domain),
        Command::Run(args) => run(&mut r, &args),
        Command::Graph { file, select, output } => {
            graph(&mut r, &file, select.fun.as_deref());
            if let Some(path) = output {
                write_output(&mut r, &path);
            }
        }
        Command::Relations { file, select, domain } => relations(&mut r, &file, select.fun.as_deref(), &domain),
    }
    r.finish()
}

fn write_output(r: &mut Report, path: &Path) {
    let bytes = r.take_output();
    if let Err(e) = std::fs::write(path, bytes) {
        r.usage(&format!("cannot write {}: {e}", path.display()));
    }
}

fn span_loc(file: &Path, span: Span) -> Loc {
    if span.is_synthetic() {
        Loc::file(file)
    } else {
        Loc::file(file).at(span.line, span.col)
    }
}

/// Message without the leading `line:col: ` that error displays carry.
fn strip_span(msg: String, span: Span) -> String {
    let prefix = format!("{span}: ");
    msg.strip_prefix(&prefix).map(str::to_string).unwrap_or(msg)
}

fn load_error_span(e: &LoadError) -> Option<Span> {
    match e {
        LoadError::DuplicateName { span, .. }
        | LoadError::ForwardReference { span, .. }
        | LoadError::Unresolved { span, .. }
        | LoadError::WrongKind { span, .. }
        | LoadError::ReservedName { span, .. }
        | LoadError::Primitive { span, .. } => Some(*span),
        LoadError::Shape(s) => Some(s.span),
        LoadError::Sanity(_) => None,
    }
}

fn report_frontend_error(r: &mut Report, file: &Path, e: &FrontendError) {
    match e {
        FrontendError::Parse(p) => {
            let loc = Loc::file(file).at(p.line, p.col);
            r.error(&loc, "ParseError", &format!("expected {}, found {}", p.expected, p.found));
        }
        FrontendError::Load(LoadError::Sanity(vs)) => {
            for v in vs {
                let mut msg = format!("{} violation on variable `{}`", v.kind.name(), v.var);
                if let Some(d) = &v.def {
                    msg.push_str(&format!(" in `{d}`"));
                }
                r.error(&span_loc(file, v.span), v.kind.name(), &msg);
            }
        }
        FrontendError::Load(l) => {
            let span = load_error_span(l).unwrap_or_default();
            r.error(&span_loc(file, span), l.kind(), &strip_span(l.to_string(), span));
        }
    }
}

fn read_file(r: &mut Report, file: &Path) -> Option<String> {
    match std::fs::read_to_string(file) {
        Ok(s) => Some(s),
        Err(e) => {
            r.usage(&format!("cannot read {}: {e}", file.display()));
            None
        }
    }
}

fn load_file(r: &mut Report, file: &Path) -> Option<ProgramDB> {
    let src = read_file(r, file)?;
    match load_source(&src) {
        Ok(db) => {
            for w in db.warnings() {
                r.warning(&span_loc(file, w.span), "Warning", &w.message);
            }
            Some(db)
        }
        Err(e) => {
            report_frontend_error(r, file, &e);
            None
        }
    }
}

fn report_normalize_error(r: &mut Report, file: &Path, db: &ProgramDB, e: &NormalizeError) {
    let def = match e {
        NormalizeError::InDef { def, .. }
        | NormalizeError::NotCompilable { def, .. }
        | NormalizeError::UncompilableCallee { def, .. } => Some(def),
        _ => None,
    };
    let span = def.and_then(|d| db.fun(d)).map(|f| f.span).unwrap_or_default();
    r.error(&span_loc(file, span), e.kind(), &e.to_string());
}

fn compile(r: &mut Report, file: &Path, db: &ProgramDB, copyprop: bool) -> Option<NormalProgram> {
    match normalize_program(db, NormalizeOptions { copy_propagation: copyprop }) {
        Ok(p) => Some(p),
        Err(e) => {
            report_normalize_error(r, file, db, &e);
            None
        }
    }
}

fn check(r: &mut Report, files: &[PathBuf]) {
    let mut defs = 0;
    for file in files {
        let Some(db) = load_file(r, file) else { continue };
        let funs: Vec<&FunDef> = db.funs().collect();
        r.line(format!("{}: {} definition(s)", file.display(), funs.len()));
        for f in funs {
            defs += 1;
            let form = f.form.map_or("?", FormTag::as_str);
            let shape = db.shape_of(&f.name).map(|s| s.to_string()).unwrap_or_else(|| "?".into());
            r.line(format!("  fun {}: form {form}, shape {shape}", f.name));
            r.record(
                "definition",
                json!({"file": file.display().to_string(), "name": f.name.as_str(), "form": form, "shape": shape}),
            );
        }
    }
    let (errors, warnings) = (r.errors, r.warnings);
    r.record("summary", json!({"files": files.len(), "definitions": defs, "errors": errors, "warnings": warnings}));
}

fn normalize(r: &mut Report, file: &Path, to: u8, copyprop: bool) {
    let Some(db) = load_file(r, file) else { return };
    let Some(prog) = compile(r, file, &db, copyprop) else { return };
    let text = if to == 3 { print_third_program(&db, &prog) } else { print_normal_program(&db, &prog) };
    if r.is_json() {
        r.record("program", json!({"file": file.display().to_string(), "form": to, "text": text}));
    } else {
        r.raw(&text);
    }
}

fn select<'p>(r: &mut Report, prog: &'p NormalProgram, db: &ProgramDB, fun: Option<&str>) -> Option<&'p Compiled> {
    match prog.select(fun) {
        Some(c) => Some(c),
        None => {
            let msg = match fun {
                Some(f) if db.fun(&Ident::new(f)).is_some() => format!("`{f}` has no second form"),
                Some(f) => format!("no definition named `{f}`"),
                None => "the program has no compilable definition".into(),
            };
            r.usage(&msg);
            None
        }
    }
}

fn base_domain(r: &mut Report, prog: &NormalProgram, args: &DomainArgs) -> Option<FiniteDomain> {
    if let Some(path) = &args.domain {
        let text = read_file(r, path)?;
        return match FiniteDomain::from_json(&text, &prog.sig) {
            Ok(d) => Some(d),
            Err(e) => {
                r.usage(&e.to_string());
                None
            }
        };
    }
    Some(match &args.numbers {
        Some(ns) => FiniteDomain::numeric(ns),
        None => FiniteDomain::default(),
    })
}

fn valuation_json(v: &streamcore::logic::Valuation) -> serde_json::Value {
    serde_json::Value::Object(v.0.iter().map(|(k, x)| (k.to_string(), x.to_json())).collect())
}

fn analyze(r: &mut Report, file: &Path, fun: Option<&str>, dargs: &DomainArgs) {
    let Some(db) = load_file(r, file) else { return };
    let Some(prog) = compile(r, file, &db, true) else { return };
    let Some(base) = base_domain(r, &prog, dargs) else { return };
    let targets: Vec<&Compiled> = match fun {
        Some(_) => match select(r, &prog, &db, fun) {
            Some(c) => vec![c],
            None => return,
        },
        None => prog.order.iter().filter_map(|n| prog.get(n)).map(|c| &**c).collect(),
    };
    for c in targets {
        let dom = infer_domain(c, &prog.sig, &base);
        let rep = match analyze_matching(c, &prog, &dom) {
            Ok(rep) => rep,
            Err(e) => {
                r.error(&Loc::file(file), "AnalysisError", &format!("in `{}`: {e}", c.name));
                continue;
            }
        };
        r.line(format!("fun {}: {} case expression(s)", c.name, rep.cases.len()));
        for case in &rep.cases {
            let show = |vs: &std::collections::BTreeSet<streamcore::logic::Valuation>| {
                if vs.is_empty() {
                    "none".to_string()
                } else {
                    vs.iter().map(|v| format!("{{{v}}}")).collect::<Vec<_>>().join(" ")
                }
            };
            let cone: Vec<&str> = case.cone.iter().map(Ident::as_str).collect();
            r.line(format!("  case at {} on {}: {} alternative(s)", case.span, cone.join(", "), case.branches));
            r.line(format!("    missing: {}", show(&case.missing)));
            r.line(format!("    overlapping: {}", show(&case.overlapping)));
            r.findings += case.missing.len() + case.overlapping.len();
            r.record(
                "case",
                json!({
                    "fun": c.name.as_str(),
                    "line": case.span.line,
                    "col": case.span.col,
                    "alternatives": case.branches,
                    "sources": cone,
                    "missing": case.missing.iter().map(valuation_json).collect::<Vec<_>>(),
                    "overlapping": case.overlapping.iter().map(valuation_json).collect::<Vec<_>>(),
                }),
            );
        }
        if !rep.unconstrained.is_empty() {
            let names: Vec<&str> = rep.unconstrained.iter().map(Ident::as_str).collect();
            r.warning(&Loc::file(file), "Unconstrained", &format!("in `{}`: never assigned: {}", c.name, names.join(", ")));
        }
        r.record(
            "match_summary",
            json!({
                "fun": c.name.as_str(),
                "missing": rep.missing.iter().map(valuation_json).collect::<Vec<_>>(),
                "overlapping": rep.overlapping.iter().map(valuation_json).collect::<Vec<_>>(),
            }),
        );
    }
}

fn parse_values(text: &str) -> Result<Vec<Value>, String> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let e = streamcore::frontend::parse_expr(&format!("({text})")).map_err(|e| e.to_string())?;
    e.flatten().into_iter().map(|x| streamcore::exec::parse_value(&streamcore::frontend::print_expr(x))).collect()
}

fn run(r: &mut Report, a: &RunArgs) {
    let file = &a.file;
    let Some(db) = load_file(r, file) else { return };
    let Some(prog) = compile(r, file, &db, true) else { return };
    let Some(c) = select(r, &prog, &db, a.select.fun.as_deref()) else { return };
    let mut m = match MachineProgram::new(&prog, &c.name) {
        Ok(m) => m,
        Err(e) => return exec_error(r, file, &e),
    };
    if let Some(init) = &a.init {
        let s = match parse_values(init) {
            Ok(s) => s,
            Err(e) => return r.usage(&format!("--init: {e}")),
        };
        m = match m.with_initial_state(s) {
            Ok(m) => m,
            Err(e) => return r.usage(&format!("--init: {e}")),
        };
    }
    let inputs = &m.face.inputs;
    let rows = match a.input.as_deref() {
        Some(spec) if spec.starts_with("expr:") => {
            let Some(n) = a.steps else { return r.usage("--steps is required with generated input") };
            match generate_inputs(&spec["expr:".len()..], inputs, n, a.seed) {
                Ok(rows) => rows,
                Err(e) => return r.usage(&e.to_string()),
            }
        }
        Some(spec) => {
            let path = Path::new(spec.strip_prefix("csv:").unwrap_or(spec));
            let Some(text) = read_file(r, path) else { return };
            match read_csv(&text, inputs) {
                Ok(mut rows) => {
                    if let Some(n) = a.steps {
                        rows.truncate(n);
                    }
                    rows
                }
                Err(e) => return r.error(&Loc::file(path), "InputError", &e.to_string()),
            }
        }
        None if inputs.is_empty() => vec![Vec::new(); a.steps.unwrap_or(1)],
        None => return r.usage("--input is required for a definition with inputs"),
    };
    let trace = match m.run_unrolled_from(a.unroll, &m.initial_state, &rows, a.trace_state) {
        Ok(t) => t,
        Err(e) => return exec_error(r, file, &e),
    };
    match a.out {
        TraceFormat::Csv => match trace.to_csv() {
            Ok(s) => r.raw(&s),
            Err(e) => r.error(&Loc::file(file), "TraceError", &e.to_string()),
        },
        TraceFormat::Jsonl => r.raw(&trace.to_jsonl()),
    }
    if let Some(path) = &a.output {
        write_output(r, path);
    }
}

fn exec_error(r: &mut Report, file: &Path, e: &ExecError) {
    let code = match e {
        ExecError::NondeterminismTrap { .. } => "NondeterminismTrap",
        ExecError::UndefinedOutputTrap { .. } => "UndefinedOutputTrap",
        ExecError::UndefinedInput { .. } => "UndefinedInput",
        _ => "ExecError",
    };
    r.error(&Loc::file(file), code, &e.to_string());
}

fn graph(r: &mut Report, file: &Path, fun: Option<&str>) {
    let Some(db) = load_file(r, file) else { return };
    let Some(prog) = compile(r, file, &db, true) else { return };
    let Some(c) = select(r, &prog, &db, fun) else { return };
    let dot = to_dot(&c.flat, c.name.as_str());
    if r.is_json() {
        r.record("graph", json!({"fun": c.name.as_str(), "dot": dot}));
    } else {
        r.raw(&dot);
    }
}

/// The internal relation of the selected definition: enumerated from its
/// second form, or solved from its third form.
fn internal_relation(
    r: &mut Report,
    file: &Path,
    db: &ProgramDB,
    prog: &NormalProgram,
    fun: Option<&str>,
    base: &FiniteDomain,
) -> Option<(Ident, StepRelation)> {
    let def = match db.select_fun(fun) {
        Some(d) => d,
        None => {
            r.usage(&match fun {
                Some(f) => format!("no definition named `{f}`"),
                None => "the program defines no functions".into(),
            });
            return None;
        }
    };
    let result = match prog.get(&def.name) {
        Some(c) => {
            let dom = infer_domain(c, &prog.sig, base);
            enumerate_relation(prog, &def.name, &dom).map_err(|e| e.to_string())
        }
        None => match &def.abs {
            streamcore::ast::Abs::Box(b) => third_from_box(b).map_err(|e| e.to_string()).and_then(|t| {
                let ev = OpEval::new(prog).map_err(|e| e.to_string())?;
                satisfy_relation(&t, &infer_third_domain(&t, &prog.sig, base), &ev).map_err(|e| e.to_string())
            }),
            _ => Err("not a box".to_string()),
        },
    };
    match result {
        Ok(rel) => Some((def.name.clone(), rel)),
        Err(e) => {
            r.error(&span_loc(file, def.span), "RelationError", &format!("in `{}`: {e}", def.name));
            None
        }
    }
}

fn row_text(row: &Row) -> String {
    format!("{} / {} -> {} / {}", show_tuple(&row.s), show_tuple(&row.x), show_tuple(&row.y), show_tuple(&row.s_))
}

fn tuple_json(vs: &[Value]) -> serde_json::Value {
    serde_json::Value::Array(vs.iter().map(Value::to_json).collect())
}

fn dump(r: &mut Report, name: &Ident, level: &str, rel: &StepRelation) {
    let rows = rel.rows();
    let total = rel.is_left_total();
    r.line(format!("{level}: {} row(s), left-total: {}", rows.len(), if total { "yes" } else { "no" }));
    for row in &rows {
        r.line(format!("  {}", row_text(row)));
        r.record(
            "row",
            json!({"fun": name.as_str(), "relation": level, "s": tuple_json(&row.s), "x": tuple_json(&row.x), "y": tuple_json(&row.y), "s_": tuple_json(&row.s_)}),
        );
    }
    let witness = rel.left_totality_witness().map(|(s, x)| json!({"s": tuple_json(&s), "x": tuple_json(&x)}));
    if let Some((s, x)) = rel.left_totality_witness() {
        r.line(format!("  no image at {} / {}", show_tuple(&s), show_tuple(&x)));
    }
    r.record(
        "relation",
        json!({"fun": name.as_str(), "relation": level, "rows": rows.len(), "left_total": total, "witness": witness}),
    );
}

fn relations(r: &mut Report, file: &Path, fun: Option<&str>, dargs: &DomainArgs) {
    let Some(db) = load_file(r, file) else { return };
    let Some(prog) = compile(r, file, &db, true) else { return };
    let Some(base) = base_domain(r, &prog, dargs) else { return };
    let Some((name, internal)) = internal_relation(r, file, &db, &prog, fun, &base) else { return };
    let f = &internal.face;
    let names = |vs: &[Ident]| vs.iter().map(Ident::as_str).collect::<Vec<_>>().join(", ");
    r.line(format!(
        "fun {name}: {} / {} -> {} / {}",
        names(&f.pre_state),
        names(&f.inputs),
        names(&f.outputs),
        names(&f.post_state)
    ));
    dump(r, &name, "internal", &internal);
    let external = internal.externalize();
    dump(r, &name, "external", &external);
    let d = AcceptableStateSpace::defined();
    match external.restrict_deterministic(&d) {
        Ok(det) => {
            r.line(format!("deterministic: certified on D = {}", d.description));
            r.record("certificate", json!({"fun": name.as_str(), "certified": true, "space": d.description}));
            dump(r, &name, "deterministic", &det);
        }
        Err(e) => {
            let (s, x) = e.witness();
            let wit: Vec<String> = f.inputs.iter().zip(x).map(|(v, val)| format!("{v}={val}")).collect();
            r.line(format!("deterministic: not certified: {e}"));
            r.line(format!("  witness: s = {}, {}", show_tuple(s), wit.join(", ")));
            r.findings += 1;
            r.record(
                "certificate",
                json!({"fun": name.as_str(), "certified": false, "reason": e.to_string(), "s": tuple_json(s), "x": tuple_json(x)}),
            );
        }
    }
}

//! Subcommand implementations behind the `penny` binary.
//!
//! Exit status: 0 when every asserted invariant holds, 1 on a violation or
//! runtime failure (with `violations.json` in the output directory), 2 on an
//! invalid configuration.

pub mod config;

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};

use penny_core::contact_graph::ContactGraph;
use penny_core::faces::{facial_degree_stats, faces_of, verify_face_metrics, FaceSet};
use penny_core::io::{fmt_f64, write_json, Table};
use penny_core::laplace::{
    harnack_constant, maximum_principle_check, poincare_constant, solve_dirichlet, DirichletProblem,
    PoincareVariant, ScalarField, DEFAULT_RESIDUAL_TOL,
};
use penny_core::lemmas::{check_configuration, run_separation_suite, sample_seed};
use penny_core::metrics::{quasi_isometry_report, relative_volume_check, volume_report, Window};
use penny_core::packing::{
    gen_square_lattice, gen_tangency_growth, gen_triangular_lattice, triangular_index, validate, PennyConfig,
    MAX_CONTACT_DEGREE,
};
use penny_core::poly_growth::{dim_report, export_basis, harmonic_poly_dim, LatticeModel};
use penny_core::walk::{evolve_distribution, green_truncated, simulate_visits};
use penny_core::{par, Error};

use config::{Cli, Command, Family, FieldKind, Resolved, Variant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

const GREEN_RADII: [u32; 5] = [4, 8, 16, 32, 64];
const DOUBLING_BOUND: f64 = 4.0 + 1e-9;
const RELATIVE_VOLUME_NU: f64 = 2.0;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    /// Invariant violations, each a JSON witness.
    Violation(Vec<Value>),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::WindowTooSmall(_) | Error::InvalidArgument(_) | Error::SizeOverflow { .. } => {
                Failure::Config(e.to_string())
            }
            Error::OverlapDetected { .. }
            | Error::DegreeBoundViolated { .. }
            | Error::FaceMetricViolation { .. }
            | Error::HypothesisViolated(_)
            | Error::UnderflowGuard { .. }
            | Error::DegenerateAngle(_) => Failure::Violation(vec![json!({ "error": e.to_string() })]),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome = Result<Vec<Value>, Failure>;

/// Parses `args` (including the program name) and runs one subcommand.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let resolved = match config::resolve(cli.command, cli.flags) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    run(cli.command, &resolved)
}

pub fn run(cmd: Command, r: &Resolved) -> i32 {
    if let Err(e) = std::fs::create_dir_all(&r.out) {
        eprintln!("error: cannot create {}: {e}", r.out.display());
        return EXIT_VIOLATION;
    }
    let violations_path = r.out.join("violations.json");
    let _ = std::fs::remove_file(&violations_path);
    let outcome = par::with_workers(r.workers, || dispatch(cmd, r));
    let (code, violations) = match outcome {
        Ok(v) if v.is_empty() => return EXIT_OK,
        Ok(v) => (EXIT_VIOLATION, v),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
        Err(Failure::Violation(v)) => (EXIT_VIOLATION, v),
        Err(Failure::Runtime(msg)) => (EXIT_VIOLATION, vec![json!({ "error": msg })]),
    };
    let doc = json!({ "subcommand": cmd.name(), "violations": violations });
    if let Err(e) = write_json(&violations_path, &doc) {
        eprintln!("error: cannot write violations: {e}");
    }
    eprintln!("{}: {} violation(s), see {}", cmd.name(), violations.len(), violations_path.display());
    code
}

fn dispatch(cmd: Command, r: &Resolved) -> Outcome {
    match cmd {
        Command::Generate => generate(r),
        Command::Validate => validate_cmd(r),
        Command::BuildGraph => build_graph(r),
        Command::Faces => faces(r),
        Command::VerifyLemmas => verify_lemmas(r),
        Command::Metrics => metrics(r),
        Command::Solve => solve(r),
        Command::Harnack => harnack(r),
        Command::Poincare => poincare(r),
        Command::Polydim => polydim(r),
        Command::Walk => walk(r),
        Command::Render => render(r),
    }
}

fn save<T: Serialize + ?Sized>(r: &Resolved, name: &str, value: &T) -> Result<(), Failure> {
    write_json(&r.out.join(name), value).map_err(|e| Failure::Runtime(e.to_string()))
}

fn save_text(r: &Resolved, name: &str, text: &str) -> Result<(), Failure> {
    std::fs::write(r.out.join(name), text).map_err(|e| Failure::Runtime(format!("{name}: {e}")))
}

fn summary(r: &Resolved, ok: bool, body: Value) -> Value {
    json!({ "subcommand": r.command, "params": r, "ok": ok, "result": body })
}

fn configuration(r: &Resolved) -> Result<PennyConfig, Failure> {
    let mut cfg = match &r.input {
        Some(path) => load_input(path)?,
        None => match r.family {
            Family::Square => gen_square_lattice(r.size, r.size)?,
            Family::Triangular => gen_triangular_lattice(r.size, r.size)?,
            Family::Growth => gen_tangency_growth(r.size, r.seed)?,
        },
    };
    if r.input.is_none() || r.tol != penny_core::packing::DEFAULT_TOL {
        cfg.tol = r.tol;
    }
    Ok(cfg)
}

fn load_input(path: &Path) -> Result<PennyConfig, Failure> {
    PennyConfig::load(path).map_err(|e| Failure::Config(format!("--input {}: {e}", path.display())))
}

struct Scene {
    g: ContactGraph,
    fs: FaceSet,
    window: Window,
}

fn scene(r: &Resolved) -> Result<Scene, Failure> {
    let g = ContactGraph::build(&configuration(r)?)?;
    let fs = faces_of(&g)?;
    let window = Window::new(&g, &fs);
    Ok(Scene { g, fs, window })
}

fn generate(r: &Resolved) -> Outcome {
    let cfg = configuration(r)?;
    save(r, "config.json", &cfg)?;
    save(r, "summary.json", &summary(r, true, json!({ "disks": cfg.len(), "label": cfg.label })))?;
    Ok(vec![])
}

fn validate_cmd(r: &Resolved) -> Outcome {
    let cfg = configuration(r)?;
    let mut violations = Vec::new();
    let report = match validate(&cfg) {
        Ok(rep) => {
            if rep.max_contact_degree > MAX_CONTACT_DEGREE {
                violations.push(json!({ "what": "contact degree", "value": rep.max_contact_degree }));
            }
            Some(rep)
        }
        Err(Error::OverlapDetected { i, j, distance }) => {
            violations.push(json!({ "what": "overlap", "disks": [i, j], "distance": distance }));
            None
        }
        Err(e) => return Err(e.into()),
    };
    let doc = json!({
        "disks": cfg.len(),
        "tol": cfg.tol,
        "report": report,
        "ok": violations.is_empty(),
        "violations": violations,
    });
    save(r, "validation.json", &doc)?;
    Ok(violations)
}

fn build_graph(r: &Resolved) -> Outcome {
    let g = ContactGraph::build(&configuration(r)?)?;
    save_text(r, "graph.json", &g.to_json()?)?;
    let mut t = Table::new(["vertex", "x", "y", "degree"]);
    for (v, p) in g.coords.iter().enumerate() {
        t.push(vec![v.to_string(), fmt_f64(p.x), fmt_f64(p.y), g.degree(v).to_string()]);
    }
    save_text(r, "degrees.csv", &t.to_csv())?;
    let stats = g.degree_stats()?;
    let body = json!({
        "vertices": g.n(),
        "edges": g.edge_count(),
        "connected": g.is_connected(),
        "degrees": stats,
    });
    save(r, "summary.json", &summary(r, true, body))?;
    Ok(vec![])
}

fn faces(r: &Resolved) -> Outcome {
    let g = ContactGraph::build(&configuration(r)?)?;
    let fs = faces_of(&g)?;
    save_text(r, "faces.json", &fs.to_json()?)?;
    let mut t = Table::new(["face", "degree", "outer"]);
    for (i, f) in fs.faces.iter().enumerate() {
        t.push(vec![i.to_string(), f.degree.to_string(), f.is_outer.to_string()]);
    }
    save_text(r, "facial_degrees.csv", &t.to_csv())?;
    let mut violations = Vec::new();
    if !fs.euler_check {
        violations.push(json!({ "what": "euler characteristic" }));
    }
    let degree_sum = fs.degree_sum();
    if degree_sum != 2 * g.edge_count() {
        violations.push(json!({ "what": "facial degree sum", "sum": degree_sum, "edges": g.edge_count() }));
    }
    let metric = match verify_face_metrics(&g, &fs, r.samples as usize, r.seed) {
        Ok(m) => Some(m),
        Err(e @ Error::FaceMetricViolation { .. }) => {
            violations.push(json!({ "what": "face metric", "error": e.to_string() }));
            None
        }
        Err(e) => return Err(e.into()),
    };
    let body = json!({
        "vertices": g.n(),
        "edges": g.edge_count(),
        "faces": fs.faces.len(),
        "components": fs.components,
        "euler_check": fs.euler_check,
        "degree_sum": degree_sum,
        "interior_degrees": facial_degree_stats(&fs, true),
        "metric": metric,
    });
    save(r, "summary.json", &summary(r, violations.is_empty(), body))?;
    Ok(violations)
}

fn verify_lemmas(r: &Resolved) -> Outcome {
    let suite = run_separation_suite(r.samples, r.seed);
    let configuration_report = if r.input.is_some() || r.family_explicit {
        Some(check_configuration(&configuration(r)?)?)
    } else {
        None
    };
    let mut violations = Vec::new();
    if !suite.ok() {
        violations.push(json!({ "suite": "separation", "count": suite.violation_count(), "witnesses": suite.witnesses }));
    }
    if let Some(c) = configuration_report.as_ref().filter(|c| !c.ok()) {
        violations.push(json!({
            "suite": "configuration",
            "overlaps": c.overlaps,
            "count": c.violation_count,
            "witnesses": c.violations,
        }));
    }
    let doc = json!({
        "ok": violations.is_empty(),
        "suite": suite,
        "configuration": configuration_report,
    });
    save(r, "lemmas.json", &doc)?;
    Ok(violations)
}

fn metrics(r: &Resolved) -> Outcome {
    let s = scene(r)?;
    let x = s.window.deepest();
    let vol = volume_report(&s.g, &s.window, x, r.rmax)?;
    save_text(r, "volume.csv", &vol.to_table().to_csv())?;
    let rel = relative_volume_check(&vol, RELATIVE_VOLUME_NU)?;
    let qi = quasi_isometry_report(&s.g, &s.fs, r.radius, r.pairs, r.seed)?;
    let mut violations = Vec::new();
    for c in &qi.violations {
        violations.push(json!({ "what": "quasi-isometry", "pair": c }));
    }
    let lattice = r.input.is_none() && r.family != Family::Growth;
    if lattice {
        let (a, b) = if r.family == Family::Square { (2, 2) } else { (3, 3) };
        for &(rr, size) in &vol.sizes {
            let want = a * (rr as usize).pow(2) + b * rr as usize + 1;
            if size != want {
                violations.push(json!({ "what": "ball size", "radius": rr, "size": size, "expected": want }));
            }
        }
        if vol.c1 > DOUBLING_BOUND {
            violations.push(json!({ "what": "doubling ratio", "value": vol.c1 }));
        }
    }
    let body = json!({ "volume": vol, "relative_volume": rel, "quasi_isometry": qi });
    save(r, "metrics.json", &summary(r, violations.is_empty(), body))?;
    Ok(violations)
}

fn unit_noise(seed: u64, v: usize) -> f64 {
    // 53 random bits mapped to [-1, 1)
    (sample_seed(seed, v as u64) >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

fn linear_value(r: &Resolved, g: &ContactGraph, v: usize) -> f64 {
    let p = g.coords[v];
    if r.input.is_none() && r.family == Family::Triangular {
        let (i, j) = triangular_index(p);
        (i + 2 * j) as f64
    } else {
        p.x + p.y
    }
}

fn field_value(r: &Resolved, s: &Scene, kind: FieldKind, v: usize) -> f64 {
    match kind {
        FieldKind::Linear => linear_value(r, &s.g, v),
        FieldKind::Random => unit_noise(r.seed, v),
        FieldKind::Depth => s.window.depth_of(v) as f64,
        FieldKind::None => 0.0,
    }
}

fn solve(r: &Resolved) -> Outcome {
    if r.field == FieldKind::None {
        return Err(Failure::Config("solve needs boundary data: --field linear|random|depth".into()));
    }
    let s = scene(r)?;
    let x = s.window.deepest();
    s.window.require_depth(x, r.radius + 1)?;
    let omega: Vec<usize> = s.g.ball(x, r.radius)?.members.into_iter().map(|v| v as usize).collect();
    let prob = DirichletProblem::with_boundary_fn(&s.g, &omega, |v| field_value(r, &s, r.field, v))?;
    let sol = solve_dirichlet(&s.g, &prob, DEFAULT_RESIDUAL_TOL)?;
    save_text(r, "solution.csv", &sol.u.to_table(&s.g).to_csv())?;
    let max_principle = maximum_principle_check(&prob, &sol.u, 1e-9);
    let mut violations = Vec::new();
    if !max_principle {
        violations.push(json!({ "what": "maximum principle" }));
    }
    let body = json!({
        "center": x,
        "radius": r.radius,
        "omega_size": prob.omega.len(),
        "boundary_size": prob.boundary.len(),
        "residual": sol.residual,
        "residual_tol": DEFAULT_RESIDUAL_TOL,
        "maximum_principle": max_principle,
    });
    save(r, "solve.json", &summary(r, violations.is_empty(), body))?;
    Ok(violations)
}

fn harnack(r: &Resolved) -> Outcome {
    let s = scene(r)?;
    let rep = harnack_constant(&s.g, &s.window, s.window.deepest(), r.radius)?;
    let mut violations = Vec::new();
    if !rep.c_h.is_finite() {
        violations.push(json!({ "what": "harnack constant not finite" }));
    }
    if rep.row_sum_error > DEFAULT_RESIDUAL_TOL {
        violations.push(json!({ "what": "harmonic measure row sum", "error": rep.row_sum_error }));
    }
    save(r, "harnack.json", &summary(r, violations.is_empty(), json!(rep)))?;
    Ok(violations)
}

fn poincare(r: &Resolved) -> Outcome {
    let s = scene(r)?;
    let variant = match r.variant {
        Variant::Edges => PoincareVariant::Edges,
        Variant::AllPairs => PoincareVariant::AllPairs,
    };
    let rep = poincare_constant(&s.g, &s.window, s.window.deepest(), r.radius, variant, r.samples as usize, r.seed)?;
    save_text(r, "witness.csv", &rep.witness_field.to_table(&s.g).to_csv())?;
    let mut violations = Vec::new();
    if (rep.witness_quotient - rep.c_sharp).abs() > 1e-6 * rep.c_sharp.max(1.0) {
        violations.push(json!({ "what": "witness quotient", "quotient": rep.witness_quotient, "c_sharp": rep.c_sharp }));
    }
    let body = json!({
        "center": rep.center,
        "radius": rep.radius,
        "variant": rep.variant,
        "c_sharp": rep.c_sharp,
        "witness_quotient": rep.witness_quotient,
        "random_quotients": rep.random_quotients,
        "max_random_quotient": rep.max_random_quotient,
        "domain_size": rep.domain_size,
    });
    save(r, "poincare.json", &summary(r, violations.is_empty(), body))?;
    Ok(violations)
}

fn polydim(r: &Resolved) -> Outcome {
    let model = LatticeModel::by_name(&r.model)?;
    let table = dim_report(&model, r.kmax)?;
    let basis: Vec<Value> = par::map_range(r.kmax as usize + 1, |k| {
        let space = harmonic_poly_dim(&model, k as u32);
        json!({ "k": k, "dim": space.dim, "basis": export_basis(&space) })
    });
    save(r, "basis.json", &json!({ "model": model.name, "degrees": basis }))?;
    let mut violations = Vec::new();
    if !table.all_ok() {
        for row in table.rows.iter().filter(|row| {
            !(row.verified && row.bound_ck2_ok && row.bound_conjecture_ok && row.bound_ancient_ok != Some(false))
        }) {
            violations.push(json!({ "what": "dimension bound or verification", "row": row }));
        }
    }
    let body = json!({ "dims": table.dims(), "table": table });
    save(r, "polydim.json", &summary(r, violations.is_empty(), body))?;
    Ok(violations)
}

fn walk(r: &Resolved) -> Outcome {
    let radii: Vec<u32> = GREEN_RADII.iter().copied().filter(|&q| q <= r.rmax).collect();
    if radii.is_empty() {
        return Err(Failure::Config("--rmax must be >= 4 for the Green radii".into()));
    }
    let s = scene(r)?;
    let x = s.window.deepest();
    let stats = simulate_visits(&s.g, &s.window, x, r.steps, r.trials, r.seed)?;
    let oracle = evolve_distribution(&s.g, &s.window, x, r.steps)?;
    let green = green_truncated(&s.g, &s.window, x, &radii)?;
    save_text(r, "visits.csv", &stats.to_table().to_csv())?;
    save_text(r, "green.csv", &green.to_table().to_csv())?;
    let mut violations = Vec::new();
    if !stats.valid {
        violations.push(json!({ "what": "exit rate", "discarded": stats.discarded, "trials": stats.trials }));
    }
    if !green.strictly_increasing {
        violations.push(json!({ "what": "green values not increasing", "values": green.values }));
    }
    let body = json!({
        "origin": x,
        "monte_carlo": stats,
        "oracle": oracle,
        "oracle_within_ci": stats.contains(oracle.expected_visits),
        "green": green,
        "green_growth_ratio": green.growth_ratio(),
    });
    save(r, "walk.json", &summary(r, violations.is_empty(), body))?;
    Ok(violations)
}

fn render(r: &Resolved) -> Outcome {
    let s = scene(r)?;
    let field = match r.field {
        FieldKind::None => None,
        kind => Some(ScalarField::from_fn(0..s.g.n(), |v| field_value(r, &s, kind, v))),
    };
    let faces = r.faces.then_some(&s.fs);
    save_text(r, "scene.svg", &penny_core::render::render_svg(&s.g, faces, field.as_ref()))?;
    Ok(vec![])
}

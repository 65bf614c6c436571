use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Square,
    Triangular,
    Growth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Edges,
    AllPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    None,
    Linear,
    Random,
    Depth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a penny configuration
    Generate,
    /// Check non-overlap, tangencies and the contact degree bound
    Validate,
    /// Build the contact graph and export it
    BuildGraph,
    /// Enumerate faces and check per-face metric bounds
    Faces,
    /// Run the segment separation suites
    VerifyLemmas,
    /// Quasi-isometry pairs and ball volume growth
    Metrics,
    /// Solve a Dirichlet problem on a ball
    Solve,
    /// Harnack constant from harmonic measure
    Harnack,
    /// Sharp Poincaré constant on a ball
    Poincare,
    /// Dimensions of harmonic and caloric polynomial spaces
    Polydim,
    /// Random-walk visits and truncated Green function
    Walk,
    /// Render the configuration as SVG
    Render,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Validate => "validate",
            Command::BuildGraph => "build-graph",
            Command::Faces => "faces",
            Command::VerifyLemmas => "verify-lemmas",
            Command::Metrics => "metrics",
            Command::Solve => "solve",
            Command::Harnack => "harnack",
            Command::Poincare => "poincare",
            Command::Polydim => "polydim",
            Command::Walk => "walk",
            Command::Render => "render",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "penny", version, about = "Experiments on penny graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Params,
}

/// Every tunable; unset values fall back to the config file, then to
/// per-command defaults.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Configuration family
    #[arg(long, global = true, value_enum)]
    pub family: Option<Family>,
    /// Lattice side length, or disk count for growth
    #[arg(long, global = true)]
    pub size: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Ball radius (also the window margin for metrics)
    #[arg(long, global = true)]
    pub radius: Option<u32>,
    #[arg(long, global = true)]
    pub rmax: Option<u32>,
    #[arg(long, global = true)]
    pub kmax: Option<u32>,
    #[arg(long, global = true)]
    pub pairs: Option<usize>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Tangency tolerance
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// JSON file with any of these keys; flags take precedence
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Lattice model for polydim: z2 or triangular
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Sample count: lemma suite size, pairs per face, or random Poincaré quotients
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// Walk length
    #[arg(long, global = true)]
    pub steps: Option<u64>,
    /// Load the configuration from a JSON file instead of generating it
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Poincaré denominator convention
    #[arg(long, global = true, value_enum)]
    pub variant: Option<Variant>,
    /// Field for solve boundary data or render labels
    #[arg(long, global = true, value_enum)]
    pub field: Option<FieldKind>,
    /// Shade interior faces in render
    #[arg(long, global = true)]
    #[serde(default)]
    pub faces: bool,
    /// Optional subcommand guard in config files
    #[arg(skip)]
    pub subcommand: Option<Command>,
}

impl Params {
    /// `self` wins over `other` key by key.
    fn or(self, other: Params) -> Params {
        Params {
            family: self.family.or(other.family),
            size: self.size.or(other.size),
            seed: self.seed.or(other.seed),
            radius: self.radius.or(other.radius),
            rmax: self.rmax.or(other.rmax),
            kmax: self.kmax.or(other.kmax),
            pairs: self.pairs.or(other.pairs),
            trials: self.trials.or(other.trials),
            tol: self.tol.or(other.tol),
            out: self.out.or(other.out),
            workers: self.workers.or(other.workers),
            config: self.config.or(other.config),
            model: self.model.or(other.model),
            samples: self.samples.or(other.samples),
            steps: self.steps.or(other.steps),
            input: self.input.or(other.input),
            variant: self.variant.or(other.variant),
            field: self.field.or(other.field),
            faces: self.faces || other.faces,
            subcommand: self.subcommand.or(other.subcommand),
        }
    }
}

/// Parameters after merging, with defaults applied and ranges checked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub command: &'static str,
    pub family: Family,
    #[serde(skip)]
    pub family_explicit: bool,
    pub size: usize,
    pub seed: u64,
    pub radius: u32,
    pub rmax: u32,
    pub kmax: u32,
    pub pairs: usize,
    pub trials: u64,
    pub tol: f64,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub workers: Option<usize>,
    pub model: String,
    pub samples: u64,
    pub steps: u64,
    pub input: Option<PathBuf>,
    pub variant: Variant,
    pub field: FieldKind,
    pub faces: bool,
}

fn defaults(cmd: Command) -> Params {
    let mut p = Params {
        family: Some(Family::Square),
        seed: Some(0),
        radius: Some(2),
        rmax: Some(16),
        kmax: Some(6),
        pairs: Some(10_000),
        trials: Some(10_000),
        tol: Some(penny_core::packing::DEFAULT_TOL),
        out: Some(PathBuf::from("out")),
        model: Some("z2".into()),
        steps: Some(1000),
        variant: Some(Variant::Edges),
        field: Some(FieldKind::None),
        ..Params::default()
    };
    match cmd {
        Command::Metrics => {
            p.size = Some(101);
            p.radius = Some(8);
            p.rmax = Some(40);
        }
        Command::Walk => {
            p.size = Some(401);
            p.rmax = Some(64);
        }
        Command::Harnack => p.size = Some(41),
        Command::Poincare => {
            p.size = Some(41);
            p.samples = Some(penny_core::laplace::RANDOM_QUOTIENTS as u64);
        }
        Command::Solve => {
            p.size = Some(41);
            p.radius = Some(10);
            p.field = Some(FieldKind::Random);
        }
        Command::VerifyLemmas => p.samples = Some(1_000_000),
        Command::Faces => {
            p.size = Some(30);
            p.samples = Some(100);
        }
        _ => {}
    }
    if p.size.is_none() {
        p.size = Some(10);
    }
    p
}

pub fn load_config_file(path: &Path) -> Result<Params, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

pub fn resolve(cmd: Command, flags: Params) -> Result<Resolved, String> {
    let file = match &flags.config {
        Some(path) => load_config_file(path)?,
        None => Params::default(),
    };
    if let Some(c) = file.subcommand {
        if c != cmd {
            return Err(format!("config is for '{}', not '{}'", c.name(), cmd.name()));
        }
    }
    let family_explicit = flags.family.is_some() || file.family.is_some();
    let family = flags.family.or(file.family);
    let mut merged = flags.or(file);
    // a growth family without an explicit size gets a disk count, not a side
    if family == Some(Family::Growth) && merged.size.is_none() {
        merged.size = Some(2000);
    }
    let m = merged.or(defaults(cmd));
    let r = Resolved {
        command: cmd.name(),
        family: m.family.unwrap(),
        family_explicit,
        size: m.size.unwrap(),
        seed: m.seed.unwrap(),
        radius: m.radius.unwrap(),
        rmax: m.rmax.unwrap(),
        kmax: m.kmax.unwrap(),
        pairs: m.pairs.unwrap(),
        trials: m.trials.unwrap(),
        tol: m.tol.unwrap(),
        out: m.out.unwrap(),
        workers: m.workers,
        model: m.model.unwrap(),
        samples: m.samples.unwrap_or(100),
        steps: m.steps.unwrap(),
        input: m.input,
        variant: m.variant.unwrap(),
        field: m.field.unwrap(),
        faces: m.faces,
    };
    check(&r)?;
    Ok(r)
}

fn check(r: &Resolved) -> Result<(), String> {
    let bad = |what: &str| Err(format!("invalid {what}"));
    if r.size == 0 {
        return bad("--size: must be >= 1");
    }
    let disks = match r.family {
        Family::Growth => r.size as u64,
        _ => (r.size as u64).saturating_mul(r.size as u64),
    };
    if disks > penny_core::packing::MAX_DISKS {
        return bad("--size: configuration exceeds the disk cap");
    }
    if !(r.tol > 0.0 && r.tol < 0.1) {
        return bad("--tol: must be in (0, 0.1)");
    }
    if r.workers == Some(0) {
        return bad("--workers: must be >= 1");
    }
    if r.kmax > penny_core::poly_growth::MAX_KMAX {
        return bad("--kmax: must be <= 8");
    }
    if r.rmax < 2 {
        return bad("--rmax: must be >= 2");
    }
    if r.pairs == 0 || r.trials == 0 || r.samples == 0 {
        return bad("--pairs/--trials/--samples: must be >= 1");
    }
    if r.model != "z2" && r.model != "square" && r.model != "triangular" && r.model != "tri" {
        return bad("--model: expected z2 or triangular");
    }
    Ok(())
}

//! Command-line front end: reads space files and function expressions,
//! runs the analysis operations, and emits one JSON report per run on
//! standard output.
//!
//! Exit codes: 0 on success, 1 on domain errors (and on violations when
//! `--expect-pass` is given), 2 on usage errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use metricforge::{
    build_witness_space, chain_concatenate, concatenate, estimate_gmap, generate_strong_space,
    implement_polygon, preservation_scan, verify_on_space, Axiom, BridgeMode, ClassSpec,
    CombineError, FnParseError, FunctionSpec, GridSpec, Outcome, Property, ScanError,
    ScanOptions, SemimetricSpace, SpaceError, Triplet, DEFAULT_TOL,
};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "metricforge",
    version,
    about = "Semimetric space analysis: axiom classification, space combinators, and transform checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Relative tolerance for floating comparisons.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Worker threads for scans; falls back to METRICFORGE_THREADS,
    /// then 1.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct GridArgs {
    /// Arithmetic grid step.
    #[arg(long, default_value_t = 0.125)]
    grid_step: f64,
    /// Largest grid value.
    #[arg(long, default_value_t = 16.0)]
    grid_max: f64,
    /// Number of geometric levels below the maximum.
    #[arg(long, default_value_t = 12)]
    grid_geo_levels: u32,
    /// Extra grid values (comma separated).
    #[arg(long, value_delimiter = ',')]
    grid_extra: Vec<f64>,
}

impl GridArgs {
    fn to_spec(&self) -> GridSpec {
        GridSpec {
            step: self.grid_step,
            max: self.grid_max,
            geo_ratio: 0.5,
            geo_levels: self.grid_geo_levels,
            extra: self.grid_extra.clone(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strong,
    B,
    Rpi,
}

impl From<ModeArg> for BridgeMode {
    fn from(m: ModeArg) -> BridgeMode {
        match m {
            ModeArg::Strong => BridgeMode::Strong,
            ModeArg::B => BridgeMode::BMetric,
            ModeArg::Rpi => BridgeMode::Rpi,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify a space file along the axiom ladder.
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Apply a transform pointwise to a space's distances.
    Transform {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Concatenate two disjoint spaces with a bridging distance.
    Concat {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        k: f64,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Chain-concatenate several disjoint spaces left to right.
    Chain {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        k: f64,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Realize a sorted tuple as a cycle space.
    PolygonImplement {
        /// JSON array of decimals, sorted nonincreasing.
        #[arg(long)]
        tuple: String,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate a reproducible strong-but-not-metric space.
    Generate {
        #[arg(long)]
        blocks: usize,
        #[arg(long)]
        k_target: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check a pointwise property of a transform on the grid.
    FnCheck {
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        property: String,
        /// Exit 1 when a counterexample is found.
        #[arg(long)]
        expect_pass: bool,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Scan source-class tuples for the worst target constant.
    PreserveScan {
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        source_axiom: Axiom,
        #[arg(long, default_value_t = 1.0)]
        k1: f64,
        #[arg(long)]
        target_axiom: Axiom,
        /// Longest polygon tuple enumerated (polygonal scans only).
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        /// Exit 1 when a violation is found.
        #[arg(long)]
        expect_pass: bool,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Estimate the constant mapping K1 -> K2 over a list of K1 values.
    Gmap {
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        source_axiom: Axiom,
        #[arg(long)]
        target_axiom: Axiom,
        /// Comma-separated ascending source constants.
        #[arg(long, value_delimiter = ',', required = true)]
        k1_list: Vec<f64>,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Chain three-point blocks realizing the given triplets.
    Witness {
        /// JSON array of three-element arrays.
        #[arg(long)]
        triplets: String,
        #[arg(long)]
        source_axiom: Axiom,
        #[arg(long, default_value_t = 1.0)]
        k1: f64,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Transform a space and check the target axiom at a constant.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        target_axiom: Axiom,
        #[arg(long, default_value_t = 1.0)]
        k2: f64,
        /// Exit 1 when the axiom fails at k2.
        #[arg(long)]
        expect_pass: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// Structured domain failure: JSON on stdout, exit code 1.
struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(kind: &'static str, message: impl ToString) -> Failure {
        Failure {
            kind,
            message: message.to_string(),
        }
    }
}

impl From<SpaceError> for Failure {
    fn from(e: SpaceError) -> Failure {
        let kind = match &e {
            SpaceError::Shape { .. } => "ShapeError",
            SpaceError::DuplicateLabel { .. } => "DuplicateLabelError",
            SpaceError::Asymmetry { .. } => "AsymmetryError",
            SpaceError::ZeroDistance { .. } => "ZeroDistanceError",
            SpaceError::NonfiniteEntry { .. } => "NonfiniteEntryError",
            SpaceError::Parse(_) => "ParseError",
        };
        Failure::new(kind, e)
    }
}

impl From<CombineError> for Failure {
    fn from(e: CombineError) -> Failure {
        let kind = match &e {
            CombineError::LabelCollision { .. } => "LabelCollisionError",
            CombineError::TooSmall { .. } => "TooSmallError",
            CombineError::ConstantTooSmall { .. } => "ConstantTooSmallError",
            CombineError::TargetNotAboveOne(_) => "ConstantTooSmallError",
            CombineError::NotSorted { .. } => "NotSortedError",
            CombineError::Degenerate { .. } => "DegenerateError",
            CombineError::Sampling { .. } => "InternalSamplingError",
            CombineError::Space(inner) => return Failure::from(inner.clone()),
        };
        Failure::new(kind, e)
    }
}

impl From<FnParseError> for Failure {
    fn from(e: FnParseError) -> Failure {
        let kind = match &e {
            FnParseError::Parse { .. } => "ParseError",
            FnParseError::UnknownBuiltin { .. } => "UnknownBuiltinError",
            FnParseError::Arity { .. } => "ArityError",
            FnParseError::InvalidParameter { .. } => "InvalidParameterError",
        };
        Failure::new(kind, e)
    }
}

impl From<ScanError> for Failure {
    fn from(e: ScanError) -> Failure {
        let kind = match &e {
            ScanError::UnsupportedPair { .. } => "UnsupportedPairError",
            ScanError::InvalidClassConstant { .. } => "InvalidConstantError",
            ScanError::BlockViolatesSource(..) => "BlockViolatesSourceError",
            ScanError::EmptyWitness => "EmptyWitnessError",
            ScanError::BadConstantList => "BadConstantListError",
            ScanError::Combine(inner) => return Failure::from(inner.clone()),
            ScanError::Space(inner) => return Failure::from(inner.clone()),
        };
        Failure::new(kind, e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(failure) => {
            let body = json!({
                "tool": "metricforge",
                "version": env!("CARGO_PKG_VERSION"),
                "error": { "kind": failure.kind, "message": failure.message },
            });
            println!("{body}");
            ExitCode::from(1)
        }
    }
}

fn read_space(path: &Path) -> Result<SemimetricSpace, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new("IoError", format!("{}: {e}", path.display())))?;
    Ok(SemimetricSpace::from_json(&text)?)
}

fn parse_function(text: &str) -> Result<FunctionSpec, Failure> {
    Ok(FunctionSpec::parse(text)?)
}

fn write_output(path: &Option<PathBuf>, space: &SemimetricSpace) -> Result<(), Failure> {
    if let Some(path) = path {
        std::fs::write(path, space.to_json())
            .map_err(|e| Failure::new("IoError", format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("METRICFORGE_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(1)
    .max(1)
}

fn scan_options(
    grid: &GridArgs,
    common: &CommonArgs,
    max_len: usize,
) -> Result<ScanOptions, Failure> {
    let spec = grid.to_spec();
    spec.validate().map_err(|e| Failure::new("GridError", e))?;
    Ok(ScanOptions {
        grid: spec,
        max_len,
        tol: common.tol,
        threads: resolve_threads(common.threads),
        ..ScanOptions::default()
    })
}

/// Wraps a payload in the report envelope and prints it.
fn emit(command: &str, tol: f64, mut payload: Value) {
    let mut body = json!({
        "tool": "metricforge",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "tol": tol,
    });
    if let (Value::Object(envelope), Value::Object(extra)) = (&mut body, &mut payload) {
        envelope.append(extra);
    }
    println!("{body}");
}

fn space_value(space: &SemimetricSpace) -> Value {
    serde_json::from_str(&space.to_json()).expect("space JSON is valid")
}

fn run(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Classify { input, common } => {
            let space = read_space(&input)?;
            let profile = space.classify(common.tol);
            emit(
                "classify",
                common.tol,
                json!({
                    "input": input.display().to_string(),
                    "points": space.len(),
                    "profile": profile,
                }),
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Transform {
            input,
            function,
            output,
            common,
        } => {
            let space = read_space(&input)?;
            let f = parse_function(&function)?;
            let image = space.transform(&f)?;
            write_output(&output, &image)?;
            emit(
                "transform",
                common.tol,
                json!({
                    "fn": f.canonical(),
                    "space": space_value(&image),
                    "profile": image.classify(common.tol),
                }),
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Concat {
            a,
            b,
            k,
            mode,
            output,
            common,
        } => {
            let s1 = read_space(&a)?;
            let s2 = read_space(&b)?;
            let mode = BridgeMode::from(mode);
            let joined = concatenate(&s1, &s2, k, mode, common.tol)?;
            write_output(&output, &joined)?;
            emit(
                "concat",
                common.tol,
                json!({
                    "k": k,
                    "mode": mode.axiom_name(),
                    "space": space_value(&joined),
                }),
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Chain {
            inputs,
            k,
            mode,
            output,
            common,
        } => {
            let blocks: Vec<SemimetricSpace> = inputs
                .iter()
                .map(|p| read_space(p))
                .collect::<Result<_, _>>()?;
            let mode = BridgeMode::from(mode);
            let joined = chain_concatenate(&blocks, k, mode, common.tol)?;
            write_output(&output, &joined)?;
            emit(
                "chain",
                common.tol,
                json!({
                    "k": k,
                    "mode": mode.axiom_name(),
                    "blocks": blocks.len(),
                    "space": space_value(&joined),
                }),
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::PolygonImplement {
            tuple,
            output,
            common,
        } => {
            let entries: Vec<f64> = serde_json::from_str(&tuple)
                .map_err(|e| Failure::new("ParseError", format!("tuple: {e}")))?;
            let space = implement_polygon(&entries)?;
            write_output(&output, &space)?;
            let cert = space.rpi_certificate();
            emit(
                "polygon-implement",
                common.tol,
                json!({
                    "tuple": entries,
                    "rpi_constant": cert.raw.max(1.0),
                    "space": space_value(&space),
                }),
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Generate {
            blocks,
            k_target,
            seed,
            output,
            common,
        } => {
            let space = generate_strong_space(blocks, k_target, seed)?;
            write_output(&output, &space)?;
            emit(
                "generate",
                common.tol,
                json!({
                    "blocks": blocks,
                    "k_target": k_target,
                    "seed": seed,
                    "space": space_value(&space),
                    "profile": space.classify(common.tol),
                }),
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::FnCheck {
            function,
            property,
            expect_pass,
            grid,
            common,
        } => {
            let f = parse_function(&function)?;
            let property: Property = property
                .parse()
                .map_err(|e| Failure::new("UnknownPropertyError", e))?;
            let spec = grid.to_spec();
            spec.validate().map_err(|e| Failure::new("GridError", e))?;
            let verdict = metricforge::check_property(&f, property, &spec, common.tol);
            let failed = verdict.outcome == Outcome::Counterexample;
            emit("fn-check", common.tol, json!({ "verdict": verdict }));
            Ok(exit_for(expect_pass, failed))
        }
        Command::PreserveScan {
            function,
            source_axiom,
            k1,
            target_axiom,
            max_len,
            expect_pass,
            grid,
            common,
        } => {
            let f = parse_function(&function)?;
            let source = ClassSpec::new(source_axiom, k1)?;
            let opts = scan_options(&grid, &common, max_len)?;
            let report = preservation_scan(&f, source, target_axiom, &opts)?;
            let failed = report.violation;
            emit("preserve-scan", common.tol, json!({ "report": report }));
            Ok(exit_for(expect_pass, failed))
        }
        Command::Gmap {
            function,
            source_axiom,
            target_axiom,
            k1_list,
            max_len,
            grid,
            common,
        } => {
            let f = parse_function(&function)?;
            let opts = scan_options(&grid, &common, max_len)?;
            let points = estimate_gmap(&f, source_axiom, target_axiom, &k1_list, &opts)?;
            let points: Vec<Value> = points
                .iter()
                .map(|&(k1, k2)| {
                    let k2 = if k2.is_finite() { json!(k2) } else { json!("inf") };
                    json!([k1, k2])
                })
                .collect();
            emit(
                "gmap",
                common.tol,
                json!({
                    "fn": f.canonical(),
                    "source_axiom": source_axiom,
                    "target_axiom": target_axiom,
                    "grid": opts.grid.descriptor(),
                    "points": points,
                }),
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Witness {
            triplets,
            source_axiom,
            k1,
            output,
            common,
        } => {
            let rows: Vec<Vec<f64>> = serde_json::from_str(&triplets)
                .map_err(|e| Failure::new("ParseError", format!("triplets: {e}")))?;
            let mut ts = Vec::with_capacity(rows.len());
            for row in &rows {
                if row.len() != 3 {
                    return Err(Failure::new(
                        "ParseError",
                        format!("triplet needs exactly 3 values, got {}", row.len()),
                    ));
                }
                ts.push(
                    Triplet::new(row[0], row[1], row[2])
                        .map_err(|e| Failure::new("ParseError", e))?,
                );
            }
            let source = ClassSpec::new(source_axiom, k1)?;
            let space = build_witness_space(&ts, source, common.tol)?;
            write_output(&output, &space)?;
            emit(
                "witness",
                common.tol,
                json!({
                    "source": source,
                    "space": space_value(&space),
                    "profile": space.classify(common.tol),
                }),
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            input,
            function,
            target_axiom,
            k2,
            expect_pass,
            common,
        } => {
            let space = read_space(&input)?;
            let f = parse_function(&function)?;
            let (holds, profile) = verify_on_space(&f, &space, target_axiom, k2, common.tol)?;
            emit(
                "verify",
                common.tol,
                json!({
                    "fn": f.canonical(),
                    "target_axiom": target_axiom,
                    "k2": k2,
                    "holds": holds,
                    "profile": profile,
                }),
            );
            Ok(exit_for(expect_pass, !holds))
        }
    }
}

fn exit_for(expect_pass: bool, failed: bool) -> ExitCode {
    if expect_pass && failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

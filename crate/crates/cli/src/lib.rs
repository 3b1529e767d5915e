//! Batch entry points: render, gradcheck, augment, project, manipulate,
//! losses and serve.
//!
//! Exit codes: 0 on success, 1 for invalid input or a failed check, 2 for
//! usage errors.

use std::ffi::OsString;
use std::fmt;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use panolayout_core::grad::{run_gradcheck, GradcheckConfig};
use panolayout_core::imageops::{augment, load_png, save_png, project_perspective, PerspectiveCamera};
use panolayout_core::layout::{composite, composite_weight, distance_field, manipulate, opacity_field};
use panolayout_core::losses::LossFixture;
use panolayout_core::{Grid, Manipulation, SceneLayout};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "panolayout", version, about = "Panorama layout rendering and checking")]
pub struct Cli {
    /// Cap on worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a layout to a PLT1 grid.
    Render(RenderArgs),
    /// Compare analytic gradients with central differences.
    Gradcheck(GradcheckArgs),
    /// Shift and maybe mirror an image together with its layout.
    Augment(AugmentArgs),
    /// Write a perspective view of a panorama.
    Project(ProjectArgs),
    /// Apply one manipulation to a layout.
    Manipulate(ManipulateArgs),
    /// Evaluate a loss fixture file.
    Losses(LossesArgs),
    /// Start the editing service.
    Serve(ServeArgs),
}

/// Grid selected by `render --mode`; object numbers are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    Composite,
    Weight,
    Distance(usize),
    Opacity(usize),
}

impl FromStr for RenderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let object = |i: &str| match i.parse::<usize>() {
            Ok(i) if i >= 1 => Ok(i),
            _ => Err(format!("object number must be a positive integer, got {i:?}")),
        };
        match s.split_once(':') {
            Some(("distance", i)) => Ok(RenderMode::Distance(object(i)?)),
            Some(("opacity", i)) => Ok(RenderMode::Opacity(object(i)?)),
            None if s == "composite" => Ok(RenderMode::Composite),
            None if s == "weight" => Ok(RenderMode::Weight),
            _ => Err(format!(
                "unknown mode {s:?}; expected composite, weight, distance:i or opacity:i"
            )),
        }
    }
}

impl fmt::Display for RenderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RenderMode::Composite => f.write_str("composite"),
            RenderMode::Weight => f.write_str("weight"),
            RenderMode::Distance(i) => write!(f, "distance:{i}"),
            RenderMode::Opacity(i) => write!(f, "opacity:{i}"),
        }
    }
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub layout: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the composite weight as a grayscale PNG.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, default_value = "composite")]
    pub mode: RenderMode,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub width: usize,
    #[arg(long, default_value_t = 8)]
    pub height: usize,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub layout: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Writes PREFIX.png, PREFIX.layout.json and PREFIX.record.json.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Radians; all angles below are radians too.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub yaw: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub pitch: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub roll: f64,
    /// Horizontal field of view.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    pub fov: f64,
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    #[arg(long, default_value_t = 512)]
    pub height: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ManipulateArgs {
    #[arg(long)]
    pub layout: PathBuf,
    /// remove:i | translate:i:da:db | resize:i:ds | rotate:i:dg | ecc:i:e
    #[arg(long, allow_hyphen_values = true)]
    pub op: Manipulation,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LossesArgs {
    #[arg(long)]
    pub fixture: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Directory of static editor files.
    #[arg(long)]
    pub root: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError(String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

impl From<panolayout_core::Error> for CliError {
    fn from(e: panolayout_core::Error) -> Self {
        CliError(e.to_string())
    }
}

type CliResult<T = i32> = Result<T, CliError>;

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn render_grid(layout: &SceneLayout, mode: RenderMode) -> CliResult<Grid> {
    Ok(match mode {
        RenderMode::Composite => composite(layout),
        RenderMode::Weight => composite_weight(layout),
        RenderMode::Distance(i) => distance_field(layout, i - 1)?,
        RenderMode::Opacity(i) => opacity_field(layout, i - 1)?,
    })
}

fn cmd_render(args: &RenderArgs) -> CliResult {
    let layout = SceneLayout::load(&args.layout)?;
    let grid = render_grid(&layout, args.mode)?;
    grid.save_plt(&args.out)?;
    if let Some(path) = &args.weights {
        save_png(&composite_weight(&layout), path)?;
    }
    println!(
        "rendered {} {}x{}x{} -> {}",
        args.mode,
        grid.width(),
        grid.height(),
        grid.channels(),
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_gradcheck(args: &GradcheckArgs) -> CliResult {
    let cfg = GradcheckConfig {
        samples: args.samples,
        seed: args.seed,
        width: args.width,
        height: args.height,
        ..GradcheckConfig::default()
    };
    let report = run_gradcheck(&cfg)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match &args.report {
        Some(path) => write_file(path, format!("{json}\n").as_bytes())?,
        None => println!("{json}"),
    }
    let stats = [
        ("alpha", &report.alpha),
        ("beta", &report.beta),
        ("s", &report.s),
        ("gamma", &report.gamma),
        ("e", &report.e),
        ("f", &report.f),
    ];
    for (name, st) in stats {
        eprintln!(
            "{name:>5}: checked {:>5}  failures {:>4}  max rel error {:.3e}",
            st.checked, st.failures, st.max_rel_error
        );
    }
    eprintln!(
        "gradcheck: {}/{} within tolerance ({:.4}), {} singular exclusions: {}",
        report.checked - report.failures,
        report.checked,
        report.pass_rate,
        report.singular_exclusions,
        if report.passed { "PASS" } else { "FAIL" }
    );
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_augment(args: &AugmentArgs) -> CliResult {
    let img = load_png(&args.image)?;
    let layout = SceneLayout::load(&args.layout)?;
    let (img, layout, record) = augment(&img, &layout, args.seed)?;
    write_file(&with_suffix(&args.out_prefix, ".png"), &img.to_png_bytes()?)?;
    layout.save(with_suffix(&args.out_prefix, ".layout.json"))?;
    let record_json = serde_json::to_string_pretty(&record).expect("record serializes");
    write_file(
        &with_suffix(&args.out_prefix, ".record.json"),
        format!("{record_json}\n").as_bytes(),
    )?;
    println!("augmented with t={} flip={}", record.t, record.flip);
    Ok(EXIT_OK)
}

fn cmd_project(args: &ProjectArgs) -> CliResult {
    let img = load_png(&args.image)?;
    let cam = PerspectiveCamera::new(args.yaw, args.pitch, args.roll, args.fov, args.width, args.height)?;
    save_png(&project_perspective(&img, &cam)?, &args.out)?;
    Ok(EXIT_OK)
}

fn cmd_manipulate(args: &ManipulateArgs) -> CliResult {
    let layout = SceneLayout::load(&args.layout)?;
    manipulate(&layout, &args.op)?.save(&args.out)?;
    Ok(EXIT_OK)
}

fn cmd_losses(args: &LossesArgs) -> CliResult {
    let fixture = LossFixture::from_json(&read_text(&args.fixture)?)?;
    let results = fixture.evaluate()?;
    let mut all_ok = true;
    for r in &results {
        all_ok &= r.ok;
        match r.expected {
            Some(e) => println!(
                "{}\t{}\texpected {}\t{}",
                r.name,
                r.value,
                e,
                if r.ok { "ok" } else { "MISMATCH" }
            ),
            None => println!("{}\t{}", r.name, r.value),
        }
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_serve(args: &ServeArgs) -> CliResult {
    let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, args.port));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError(e.to_string()))?;
    eprintln!("serving on http://{addr}");
    runtime
        .block_on(panolayout_service::serve(addr, args.root.clone()))
        .map_err(|e| CliError(format!("serve: {e}")))?;
    Ok(EXIT_OK)
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_FAILURE;
        }
        // a pool that was already built keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match &cli.command {
        Command::Render(a) => cmd_render(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Augment(a) => cmd_augment(a),
        Command::Project(a) => cmd_project(a),
        Command::Manipulate(a) => cmd_manipulate(a),
        Command::Losses(a) => cmd_losses(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

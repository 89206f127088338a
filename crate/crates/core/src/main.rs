use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pcbplace::bench::{reference_row, run_benchmark, run_once, build_outline, RunRecord, RunStats};
use pcbplace::config::RunConfig;
use pcbplace::driver::PlacementMode;
use pcbplace::gen::{generate_case, generate_circuit, CaseSpec, CircuitSpec};
use pcbplace::io::{load_case, parse_bookshelf, read_solution, write_solution, write_svg, BookshelfPaths, SvgOptions};
use pcbplace::legalize::check;
use pcbplace::model::{Layer, LegalityReport, PlacementProblem};
use pcbplace::pipeline::{place_case, LayerSelection};

#[derive(Parser)]
#[command(name = "pcbplace", version, about = "Two-layer placement for IC-centred PCB modules")]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Restart rounds of global placement.
    #[arg(long, global = true)]
    rounds: Option<usize>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "PCBPLACE_THREADS")]
    threads: Option<usize>,
    /// TOML file overriding any parameter.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fixed-outline runs on Bookshelf circuits.
    Bench(BenchArgs),
    /// Place a PCB case file.
    Place(PlaceArgs),
    /// Write a synthetic case or circuit.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Audit the legality of an existing solution.
    Check(CheckArgs),
    /// Draw a solution as SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// Circuit names; `<dir>/<name>.blocks` and `<name>.nets` are read.
    #[arg(required = true)]
    circuits: Vec<String>,
    #[arg(long, default_value = ".")]
    dir: PathBuf,
    /// Aspect ratios (height / width); defaults to the configured list.
    #[arg(long, value_delimiter = ',')]
    aspect: Option<Vec<f64>>,
    #[arg(long)]
    runs: Option<usize>,
    /// Whitespace fraction.
    #[arg(long)]
    gamma: Option<f64>,
    /// Per-run CSV output; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Directory for one SVG per run.
    #[arg(long)]
    svg_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayerArg {
    Top,
    Bottom,
    Both,
}

#[derive(Args)]
struct PlaceArgs {
    case: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    layers: LayerArg,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Repeat with seeds seed..seed+batch and report HPWL statistics.
    #[arg(long, default_value_t = 1)]
    batch: usize,
}

#[derive(Subcommand)]
enum GenCommand {
    /// A PCB case as JSON.
    Case {
        /// Preset shape: case1, case2, case3 or case4.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value_t = 0)]
        top: usize,
        #[arg(long, default_value_t = 0)]
        bottom: usize,
        #[arg(long, default_value_t = 0)]
        pins: usize,
        #[arg(long, default_value_t = 0)]
        nets: usize,
        #[arg(long)]
        closetopin_fraction: Option<f64>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// A hard-block circuit as Bookshelf files.
    Circuit {
        #[arg(long, default_value = "synth")]
        name: String,
        #[arg(long, default_value_t = 100)]
        blocks: usize,
        #[arg(long, default_value_t = 334)]
        terminals: usize,
        #[arg(long, default_value_t = 885)]
        nets: usize,
        #[arg(long, default_value = ".")]
        dir: PathBuf,
    },
}

#[derive(Args)]
struct CheckArgs {
    case: PathBuf,
    solution: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    case: PathBuf,
    solution: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
        cfg.bench.seed = s;
    }
    if let Some(r) = cli.rounds {
        cfg.driver.i_max = r;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report_line(label: &str, r: &LegalityReport) -> String {
    format!(
        "{label}: overlap {:.6} out-of-bounds {:.6} spacing {} close-to-pin {} unplaceable {}",
        r.total_overlap_area,
        r.out_of_bounds_length,
        r.spacing_violations,
        r.close_to_pin_violations,
        r.unplaceable.len()
    )
}

fn layer_mode(layer: Layer) -> PlacementMode {
    match layer {
        Layer::Top => PlacementMode::Top,
        Layer::Bottom => PlacementMode::Bottom,
    }
}

fn layer_name(layer: Layer) -> &'static str {
    match layer {
        Layer::Top => "top",
        Layer::Bottom => "bottom",
    }
}

fn cmd_place(cfg: &RunConfig, args: &PlaceArgs) -> Result<bool> {
    let problem = load_case(&args.case)?;
    let layers = match args.layers {
        LayerArg::Top => LayerSelection { top: true, bottom: false },
        LayerArg::Bottom => LayerSelection { top: false, bottom: true },
        LayerArg::Both => LayerSelection::default(),
    };
    if args.batch < 1 {
        bail!("--batch must be >= 1");
    }
    let pipeline = cfg.pipeline();
    let mut all_legal = true;
    let mut hpwl: Vec<(Layer, Vec<f64>)> = Vec::new();
    let mut first = None;
    for k in 0..args.batch {
        let seed = cfg.seed + k as u64;
        let outcome = place_case(&problem, layers, &pipeline, seed);
        for l in &outcome.layers {
            println!(
                "seed {seed} {}: hpwl {:.3} (global {:.3}) time {:.3}s",
                layer_name(l.layer),
                l.hpwl,
                l.hpwl_global,
                l.seconds
            );
            println!("  {}", report_line("legality", &l.legality));
            match hpwl.iter_mut().find(|(layer, _)| *layer == l.layer) {
                Some((_, v)) => v.push(l.hpwl),
                None => hpwl.push((l.layer, vec![l.hpwl])),
            }
        }
        all_legal &= outcome.is_legal();
        if first.is_none() {
            first = Some((seed, outcome));
        }
    }
    let (seed, outcome) = first.expect("batch >= 1");
    write_solution(&outcome.solution_file(&problem, seed), &args.out)?;
    if let Some(svg) = &args.svg {
        let opts = SvgOptions {
            contour: outcome.contour,
            title: args.case.file_stem().map(|s| s.to_string_lossy().into_owned()),
        };
        write_svg(&problem, &outcome.solution, &opts, svg)?;
    }
    if args.batch > 1 {
        println!("{:<8} {:>14} {:>12} {:>8}", "layer", "hpwl mean", "hpwl std", "rel");
        for (layer, v) in &hpwl {
            let n = v.len() as f64;
            let m = v.iter().sum::<f64>() / n;
            let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
            println!("{:<8} {:>14.3} {:>12.3} {:>8.4}", layer_name(*layer), m, s, s / m);
        }
    }
    Ok(all_legal)
}

fn cmd_check(cfg: &RunConfig, args: &CheckArgs) -> Result<bool> {
    let problem = load_case(&args.case)?;
    let sol = read_solution(&args.solution)?.to_solution(&problem)?;
    let mut legal = true;
    for layer in [Layer::Bottom, Layer::Top] {
        if !problem.has_layer(layer) {
            continue;
        }
        let r = check(&problem, layer_mode(layer), &sol, &cfg.legalize);
        println!("{}", report_line(layer_name(layer), &r));
        legal &= r.is_legal();
    }
    println!("{}", if legal { "legal" } else { "illegal" });
    Ok(legal)
}

fn cmd_render(args: &RenderArgs) -> Result<()> {
    let problem = load_case(&args.case)?;
    let sol = read_solution(&args.solution)?.to_solution(&problem)?;
    let opts = SvgOptions {
        contour: None,
        title: args.case.file_stem().map(|s| s.to_string_lossy().into_owned()),
    };
    write_svg(&problem, &sol, &opts, &args.out)?;
    Ok(())
}

fn cmd_gen(cfg: &RunConfig, cmd: &GenCommand) -> Result<()> {
    match cmd {
        GenCommand::Case {
            preset,
            top,
            bottom,
            pins,
            nets,
            closetopin_fraction,
            out,
        } => {
            let mut spec = match preset {
                Some(name) => CaseSpec::preset(name, cfg.seed).with_context(|| format!("unknown preset {name:?}"))?,
                None => {
                    let name = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    CaseSpec::new(&name, *top, *bottom, *pins, *nets, cfg.seed)
                }
            };
            if let Some(f) = closetopin_fraction {
                spec.closetopin_fraction = *f;
            }
            generate_case(&spec).save(out)?;
            println!("wrote {}", out.display());
        }
        GenCommand::Circuit {
            name,
            blocks,
            terminals,
            nets,
            dir,
        } => {
            let spec = CircuitSpec {
                blocks: *blocks,
                terminals: *terminals,
                nets: *nets,
                seed: cfg.seed,
                ..Default::default()
            };
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let paths = generate_circuit(&spec).write(dir, name)?;
            println!("wrote {}", paths.blocks.display());
        }
    }
    Ok(())
}

fn write_records(records: &[RunRecord], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = csv::Writer::from_path(p).with_context(|| format!("writing {}", p.display()))?;
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_bench(cfg: &RunConfig, args: &BenchArgs) -> Result<bool> {
    let mut protocol = cfg.bench.clone();
    if let Some(a) = &args.aspect {
        protocol.aspect_ratios = a.clone();
    }
    if let Some(r) = args.runs {
        protocol.runs = r;
    }
    if let Some(g) = args.gamma {
        protocol.gamma = g;
    }
    protocol.validate()?;
    let pipeline = cfg.pipeline();
    let mut records = Vec::new();
    let mut rows: Vec<(String, f64, RunStats)> = Vec::new();
    for name in &args.circuits {
        let circuit = parse_bookshelf(&BookshelfPaths::from_stem(&args.dir, name))?;
        for &aspect in &protocol.aspect_ratios {
            let (stats, recs) = run_benchmark(name, &circuit, aspect, &protocol, &pipeline)?;
            if let Some(dir) = &args.svg_dir {
                std::fs::create_dir_all(dir)?;
                let outline = build_outline(circuit.total_block_area(), protocol.gamma, aspect);
                let problem: PlacementProblem = circuit.to_problem(outline)?;
                for r in &recs {
                    let (_, sol) = run_once(&circuit, outline, &pipeline, r.seed)?;
                    let path = dir.join(format!("{name}_r{aspect}_run{}.svg", r.run));
                    write_svg(&problem, &sol, &SvgOptions::default(), path)?;
                }
            }
            records.extend(recs);
            rows.push((name.clone(), aspect, stats));
        }
    }
    write_records(&records, args.csv.as_deref())?;
    println!();
    println!(
        "{:<8} {:>5} {:>6} {:>14} {:>12} {:>9} {:>9}   {:>6} {:>12} {:>7}",
        "circuit", "R", "#succ", "hpwl mean", "hpwl std", "time", "time std", "ref", "ref hpwl", "ref t"
    );
    for (name, aspect, s) in &rows {
        let reference = reference_row(name, *aspect)
            .map(|r| format!("{:>6.2} {:>12.0} {:>7.2}", r.reference.0, r.reference.1, r.reference.2))
            .unwrap_or_else(|| format!("{:>6} {:>12} {:>7}", "-", "-", "-"));
        println!(
            "{:<8} {:>5.2} {:>6.2} {:>14.1} {:>12.1} {:>9.3} {:>9.3}   {}",
            name, aspect, s.success_rate, s.hpwl_mean, s.hpwl_std, s.time_mean, s.time_std, reference
        );
    }
    Ok(records.iter().all(|r| r.success))
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global()?;
    }
    match &cli.command {
        Command::Bench(a) => cmd_bench(&cfg, a),
        Command::Place(a) => cmd_place(&cfg, a),
        Command::Check(a) => cmd_check(&cfg, a),
        Command::Render(a) => cmd_render(a).map(|_| true),
        Command::Gen(g) => cmd_gen(&cfg, g).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

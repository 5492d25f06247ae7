use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use majutsu_core::edit::{apply_in_place, parse_command, redo_in_place, undo_in_place};
use majutsu_core::layout::{encode_height_image, encode_layout_image};
use majutsu_core::scene::{export_gltf, load_document_from_path, save_document_to_dir};
use majutsu_eval::rank::read_records_jsonl;
use majutsu_eval::{
    aggregate_aqs, compute_fid, compute_is, compute_kid, load_features, rank_methods, schedule_comparisons, Dimension,
    ScoreSheet, StudyConfig, TrueSkill,
};
use majutsu_orchestrator::{
    load_libraries, run_pipeline, serve_listener, AppState, AssetSource, PipelineConfig, DEFAULT_PROMPT,
};
use majutsu_providers::{design_scene, generate_layout_pair, DesignSpec};
use serde_json::json;

#[derive(Parser)]
#[command(name = "majutsu", version, about = "Text-to-city scene generation, editing and evaluation")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalOpts {
    /// Run seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use the deterministic offline providers regardless of configuration.
    #[arg(long, global = true)]
    offline: bool,
    /// Library directory or manifest file (repeatable).
    #[arg(long, global = true)]
    libs: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML or JSON pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: design, layout, assets, assembly and export.
    Run(RunArgs),
    /// Scene design only; writes design.json.
    Design {
        #[arg(long)]
        prompt: String,
    },
    /// Design and layout; writes design.json, layout.png and height.png.
    Layout {
        #[arg(long, conflicts_with = "design")]
        prompt: Option<String>,
        /// Previously written design.json.
        #[arg(long)]
        design: Option<PathBuf>,
    },
    /// Pipeline from existing layout and height maps.
    Assemble {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        height: PathBuf,
        /// Design prompt for materials and styles.
        #[arg(long)]
        style: Option<String>,
        #[arg(long, value_enum)]
        asset_source: Option<AssetSourceArg>,
    },
    /// Apply edit commands to a saved scene document.
    Edit {
        #[arg(long)]
        scene: PathBuf,
        /// Command text, e.g. "move bldg_0001 by (10,0)" (repeatable).
        #[arg(long = "command", short = 'c')]
        commands: Vec<String>,
        #[arg(long, default_value_t = 0)]
        undo: usize,
        #[arg(long, default_value_t = 0)]
        redo: usize,
        /// Also export a GLB next to the document.
        #[arg(long)]
        glb: bool,
    },
    /// Evaluation tools.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// Persist sessions and verdicts here.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Study definition: {"images": {method: [image ids]}, "seed": n}.
        #[arg(long)]
        study: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    prompt: Option<String>,
    #[arg(long, requires = "height")]
    layout: Option<PathBuf>,
    #[arg(long, requires = "layout")]
    height: Option<PathBuf>,
    #[arg(long, value_enum)]
    asset_source: Option<AssetSourceArg>,
    #[arg(long)]
    fan_out: Option<usize>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum AssetSourceArg {
    Generate,
    Library,
}

impl From<AssetSourceArg> for AssetSource {
    fn from(a: AssetSourceArg) -> Self {
        match a {
            AssetSourceArg::Generate => AssetSource::Generate,
            AssetSourceArg::Library => AssetSource::Library,
        }
    }
}

#[derive(Subcommand)]
enum EvalCommand {
    /// FID and KID between two feature files (.mcfv or .csv).
    Metrics {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        generated: PathBuf,
    },
    /// Inception score from a JSON array of class-probability rows.
    Is {
        #[arg(long)]
        probs: PathBuf,
    },
    /// Mean judge scores from a JSON array of score sheets.
    Aqs {
        #[arg(long)]
        scores: PathBuf,
    },
    /// TrueSkill leaderboards from a JSONL verdict log.
    Rank {
        #[arg(long)]
        records: PathBuf,
    },
    /// Comparison schedule for a study definition.
    Schedule {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        dimension: Option<String>,
    },
}

fn base_config(g: &GlobalOpts) -> Result<PipelineConfig> {
    let mut cfg = match &g.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if !g.libs.is_empty() {
        cfg.libs = g.libs.clone();
    }
    if let Some(o) = &g.out {
        cfg.out_dir = o.clone();
    }
    cfg.resolve_mode(g.offline);
    Ok(cfg)
}

fn print_report(report: &majutsu_orchestrator::PipelineReport, out: &Path) {
    println!(
        "{}: {} buildings, {} trees, {} streetlights, {} triangles; glb valid {}, node count ok {}; {:.0} ms",
        out.display(),
        report.counts.buildings,
        report.counts.trees,
        report.counts.streetlights,
        report.counts.triangles,
        report.glb_valid,
        report.node_count_ok,
        report.timings_ms.get("total").copied().unwrap_or(0.0)
    );
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d)?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn write_design(out: &Path, prompt: &str, seed: u64, design: &DesignSpec) -> Result<()> {
    let v = json!({
        "schema": majutsu_providers::design::DESIGN_SCHEMA,
        "prompt": prompt,
        "seed": seed,
        "design": design,
    });
    write(&out.join("design.json"), &serde_json::to_vec_pretty(&v)?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn eval(cmd: EvalCommand) -> Result<()> {
    match cmd {
        EvalCommand::Metrics { real, generated } => {
            let a = load_features(&real)?;
            let b = load_features(&generated)?;
            let v = json!({ "fid": compute_fid(&a, &b)?, "kid": compute_kid(&a, &b)?, "n_real": a.n, "n_generated": b.n });
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        EvalCommand::Is { probs } => {
            let rows: Vec<Vec<f64>> = read_json(&probs)?;
            println!("{}", json!({ "is": compute_is(&rows)? }));
        }
        EvalCommand::Aqs { scores } => {
            let sheets: Vec<ScoreSheet> = read_json(&scores)?;
            print!("{}", aggregate_aqs(&sheets)?.format_rows());
        }
        EvalCommand::Rank { records } => {
            let text = std::fs::read_to_string(&records)?;
            let board = rank_methods(&read_records_jsonl(&text)?, &TrueSkill::default())?;
            print!("{}", board.to_json_lines());
        }
        EvalCommand::Schedule { images, dimension } => {
            let study: StudyConfig = read_json(&images)?;
            let dims: Vec<Dimension> = match dimension {
                Some(code) => vec![Dimension::from_code(&code).with_context(|| format!("unknown dimension {code}"))?],
                None => Dimension::ALL.to_vec(),
            };
            for d in dims {
                for pair in schedule_comparisons(&study.images, d, study.seed)? {
                    println!("{}", serde_json::to_string(&pair)?);
                }
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let g = cli.global;
    match cli.command {
        Command::Run(args) => {
            let mut cfg = base_config(&g)?;
            if args.prompt.is_some() || args.layout.is_some() {
                cfg.prompt = args.prompt;
                if args.layout.is_some() {
                    cfg.layout_path = args.layout;
                    cfg.height_path = args.height;
                }
            }
            if cfg.prompt.is_none() && cfg.layout_path.is_none() {
                cfg.prompt = Some(DEFAULT_PROMPT.into());
            }
            if let Some(a) = args.asset_source {
                cfg.asset_source = a.into();
            }
            if let Some(f) = args.fan_out {
                cfg.fan_out = f;
            }
            let report = run_pipeline(&cfg)?;
            print_report(&report, &cfg.out_dir);
        }
        Command::Design { prompt } => {
            let cfg = base_config(&g)?;
            let design = design_scene(&prompt, &cfg.effective_provider())?;
            write_design(&cfg.out_dir, &prompt, cfg.seed, &design)?;
            println!("{}", serde_json::to_string_pretty(&design)?);
        }
        Command::Layout { prompt, design } => {
            let cfg = base_config(&g)?;
            let provider = cfg.effective_provider();
            let spec: DesignSpec = match (prompt, design) {
                (_, Some(path)) => {
                    let v: serde_json::Value = read_json(&path)?;
                    serde_json::from_value(v.get("design").cloned().unwrap_or(v))?
                }
                (Some(p), None) => {
                    let d = design_scene(&p, &provider)?;
                    write_design(&cfg.out_dir, &p, cfg.seed, &d)?;
                    d
                }
                (None, None) => bail!("give --prompt or --design"),
            };
            let pair = generate_layout_pair(&spec, &provider)?;
            write(&cfg.out_dir.join("layout.png"), &encode_layout_image(&pair.layout))?;
            write(&cfg.out_dir.join("height.png"), &encode_height_image(&pair.hmap))?;
            println!("wrote {}", cfg.out_dir.display());
        }
        Command::Assemble {
            layout,
            height,
            style,
            asset_source,
        } => {
            let mut cfg = base_config(&g)?;
            cfg.prompt = None;
            cfg.layout_path = Some(layout);
            cfg.height_path = Some(height);
            cfg.style_hint = style.or(cfg.style_hint);
            if let Some(a) = asset_source {
                cfg.asset_source = a.into();
            }
            let report = run_pipeline(&cfg)?;
            print_report(&report, &cfg.out_dir);
        }
        Command::Edit {
            scene,
            commands,
            undo,
            redo,
            glb,
        } => {
            let mut doc = load_document_from_path(&scene)?;
            for text in &commands {
                let diff = apply_in_place(&mut doc, &parse_command(text)?)?;
                println!("{}", serde_json::to_string(&diff)?);
            }
            for _ in 0..undo {
                println!("{}", serde_json::to_string(&undo_in_place(&mut doc)?)?);
            }
            for _ in 0..redo {
                println!("{}", serde_json::to_string(&redo_in_place(&mut doc)?)?);
            }
            let (dir, name) = match &g.out {
                Some(o) => (o.clone(), "scene.majutsu.json".to_string()),
                None => (
                    scene.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
                    scene.file_name().context("scene path has no file name")?.to_string_lossy().into_owned(),
                ),
            };
            save_document_to_dir(&doc, &dir, &name)?;
            if glb {
                write(&dir.join("scene.glb"), &export_gltf(&doc)?)?;
            }
            println!("revision {}", doc.revision);
        }
        Command::Eval(cmd) => eval(cmd)?,
        Command::Serve { bind, data, study } => {
            let cfg = base_config(&g)?;
            let libs = load_libraries(&cfg.libs)?;
            let study: StudyConfig = match study {
                Some(p) => read_json(&p)?,
                None => StudyConfig::default(),
            };
            let state = match data {
                Some(d) => AppState::open(&d, cfg, libs, study)?,
                None => AppState::in_memory(cfg, libs, study)?,
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&bind).await?;
                println!("listening on http://{}", listener.local_addr()?);
                serve_listener(listener, Arc::new(state)).await
            })?;
        }
    }
    Ok(())
}

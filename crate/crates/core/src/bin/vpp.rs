use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vpp::eval::{evaluate, MetricsReport};
use vpp::hints::{analyze_hints, apply_sensor_noise, format_hint_csv, load_sparse_hints, sample_from_gt};
use vpp::io::{read_disparity, read_image, write_disparity, write_image, write_mask, DisparityFormat};
use vpp::pipeline::{density_sweep, project, relative_reduction};
use vpp::synthetic::{desk_scene, textured_plane, two_plane_scene, DESK_NOISE_SIGMA};
use vpp::{match_stereo, Error, Result, RunConfig, StereoPair};

macro_rules! config_flags {
    ($($field:ident, $key:literal, $env:literal;)*) => {
        /// Overrides for configuration keys. Each flag also reads the
        /// matching `VPP_*` environment variable.
        #[derive(Args, Debug)]
        struct ConfigFlags {
            $(
                #[arg(long, global = true, env = $env, value_name = "VALUE", help_heading = "Configuration")]
                $field: Option<String>,
            )*
        }

        impl ConfigFlags {
            fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
                $(
                    if let Some(v) = &self.$field {
                        cfg.set($key, v)?;
                    }
                )*
                Ok(())
            }
        }
    };
}

config_flags! {
    seed, "seed", "VPP_SEED";
    pattern, "pattern", "VPP_PATTERN";
    alpha, "alpha", "VPP_ALPHA";
    search_length, "search_length", "VPP_SEARCH_LENGTH";
    patch_strategy, "patch_strategy", "VPP_PATCH_STRATEGY";
    n_max, "n_max", "VPP_N_MAX";
    phi, "phi", "VPP_PHI";
    sigma_s, "sigma_s", "VPP_SIGMA_S";
    sigma_c, "sigma_c", "VPP_SIGMA_C";
    t_w, "t_w", "VPP_T_W";
    uniform_fill, "uniform_fill", "VPP_UNIFORM_FILL";
    lambda, "lambda", "VPP_LAMBDA";
    gamma, "gamma", "VPP_GAMMA";
    occlusion_threshold, "occlusion_threshold", "VPP_OCCLUSION_THRESHOLD";
    window_x, "window_x", "VPP_WINDOW_X";
    window_y, "window_y", "VPP_WINDOW_Y";
    policy, "policy", "VPP_POLICY";
    max_disparity, "max_disparity", "VPP_MAX_DISPARITY";
    p1, "p1", "VPP_P1";
    p2_min, "p2_min", "VPP_P2_MIN";
    p2_alpha, "p2_alpha", "VPP_P2_ALPHA";
    p2_gamma, "p2_gamma", "VPP_P2_GAMMA";
    paths, "paths", "VPP_PATHS";
    census_window, "census_window", "VPP_CENSUS_WINDOW";
    lr_check, "lr_check", "VPP_LR_CHECK";
    lr_threshold, "lr_threshold", "VPP_LR_THRESHOLD";
    speckle, "speckle", "VPP_SPECKLE";
    speckle_max_size, "speckle_max_size", "VPP_SPECKLE_MAX_SIZE";
    speckle_tol, "speckle_tol", "VPP_SPECKLE_TOL";
    fill_holes, "fill_holes", "VPP_FILL_HOLES";
    density, "density", "VPP_DENSITY";
    noise, "noise", "VPP_NOISE";
    noise_k, "noise_k", "VPP_NOISE_K";
    focal_px, "focal_px", "VPP_FOCAL_PX";
    baseline_m, "baseline_m", "VPP_BASELINE_M";
    bins, "bins", "VPP_BINS";
    taus, "taus", "VPP_TAUS";
    densities, "densities", "VPP_DENSITIES";
}

/// Virtual pattern projection and semi-global stereo matching.
#[derive(Parser, Debug)]
#[command(name = "vpp", version)]
struct Cli {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long, global = true, env = "VPP_CONFIG")]
    config: Option<PathBuf>,

    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,

    /// Also write the key=value report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,

    #[command(flatten)]
    flags: ConfigFlags,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Paint virtual patterns onto a stereo pair from sparse hints.
    Project {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Hint CSV (x,y,disparity) or sparse disparity map.
        #[arg(long)]
        hints: PathBuf,
        #[arg(long)]
        out_left: PathBuf,
        #[arg(long)]
        out_right: PathBuf,
        /// PNG mask of the hints classified as occluded.
        #[arg(long, alias = "density-debug")]
        mask: Option<PathBuf>,
        /// CSV of the hint owning each patterned pixel.
        #[arg(long)]
        ownership: Option<PathBuf>,
    },
    /// Compute a disparity map (.pfm or 16-bit .png).
    Match {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a disparity map against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Draw sparse hints from a ground-truth map.
    SampleHints {
        #[arg(long)]
        gt: PathBuf,
        /// Output .csv, .pfm or .png.
        #[arg(long)]
        out: PathBuf,
    },
    /// Density, accuracy and disparity histogram of a hint set.
    AnalyzeHints {
        #[arg(long)]
        hints: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Sample, project, match and evaluate against the plain pair.
    Pipeline {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Directory for the patterned pair and disparity maps.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Render a synthetic pair with ground truth into a directory.
    Synth {
        #[arg(long, value_enum)]
        scene: SceneKind,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 384)]
        width: usize,
        #[arg(long, default_value_t = 288)]
        height: usize,
        /// Plane disparity for the plane scene.
        #[arg(long, default_value_t = 16)]
        disparity: u32,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SceneKind {
    Desk,
    Plane,
    TwoPlane,
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).map_err(|e| Error::File {
            path: path.clone(),
            message: e.to_string(),
        })?;
        cfg.apply_text(&text, &path.display().to_string())?;
    }
    cli.flags.apply(&mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

fn read_pair(left: &Path, right: &Path) -> Result<StereoPair> {
    StereoPair::new(read_image(left)?, read_image(right)?)
}

fn write_hints(hints: &vpp::HintSet, path: &Path) -> Result<()> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        fs::write(path, format_hint_csv(hints))?;
        Ok(())
    } else {
        write_disparity(hints.map(), path, DisparityFormat::from_path(path)?)
    }
}

fn ownership_csv(projection: &vpp::patching::Projection, width: usize) -> String {
    let mut out = String::from("view,x,y,hint_x,hint_y,weight\n");
    for (view, buf) in [("left", &projection.left), ("right", &projection.right)] {
        for (p, owner) in buf.owners().iter().enumerate() {
            if let Some(id) = owner {
                let (hx, hy, _) = projection.hints[*id as usize];
                let w = buf.score(p).expect("owned pixel has a score");
                writeln!(out, "{view},{},{},{hx},{hy},{w}", p % width, p / width).unwrap();
            }
        }
    }
    out
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<String> {
    let mut report = String::new();
    match &cli.command {
        Command::Project {
            left,
            right,
            hints,
            out_left,
            out_right,
            mask,
            ownership,
        } => {
            let pair = read_pair(left, right)?;
            let hints = load_sparse_hints(hints, pair.width(), pair.height())?;
            let (projection, occ) = project(&pair, &hints, cfg)?;
            write_image(&projection.pair.left, out_left)?;
            write_image(&projection.pair.right, out_right)?;
            if let Some(path) = mask {
                write_mask(&occ, path)?;
            }
            if let Some(path) = ownership {
                fs::write(path, ownership_csv(&projection, pair.width()))?;
            }
            writeln!(report, "hints={}", hints.count()).unwrap();
            writeln!(report, "occluded={}", occ.count()).unwrap();
        }
        Command::Match { left, right, out } => {
            let format = DisparityFormat::from_path(out)?;
            let disp = match_stereo(&read_pair(left, right)?, &cfg.sgm)?;
            write_disparity(&disp, out, format)?;
            writeln!(report, "valid_pixels={}", disp.valid_count()).unwrap();
        }
        Command::Eval { pred, gt } => {
            let r = evaluate(&read_disparity(pred)?, &read_disparity(gt)?, &cfg.taus)?;
            eprint!("{}", MetricsReport::table(&[("pred", &r)]));
            report.push_str(&r.to_kv());
        }
        Command::SampleHints { gt, out } => {
            let gt = read_disparity(gt)?;
            let mut hints = sample_from_gt(&gt, &cfg.sampling_config(cfg.density))?;
            if cfg.noise {
                hints = apply_sensor_noise(&hints, &cfg.calibration()?, &cfg.noise_config());
            }
            write_hints(&hints, out)?;
            writeln!(report, "hints={}", hints.count()).unwrap();
            writeln!(report, "density={:.6}", hints.density()).unwrap();
        }
        Command::AnalyzeHints { hints, gt } => {
            let gt = read_disparity(gt)?;
            let hints = load_sparse_hints(hints, gt.width(), gt.height())?;
            let s = analyze_hints(&hints, &gt, cfg.bins)?;
            writeln!(report, "density={:.6}", s.density).unwrap();
            writeln!(report, "mae_vs_gt={:.6}", s.mae_vs_gt).unwrap();
            writeln!(report, "compared_pixels={}", s.compared_pixels).unwrap();
            writeln!(report, "max_disparity={}", s.max_disparity).unwrap();
            for (i, n) in s.histogram.iter().enumerate() {
                writeln!(report, "bin_{i}={n}").unwrap();
            }
        }
        Command::Pipeline { left, right, gt, out_dir } => {
            let pair = read_pair(left, right)?;
            let gt = read_disparity(gt)?;
            let densities = if cfg.densities.is_empty() {
                vec![0.0, cfg.density]
            } else {
                cfg.densities.clone()
            };
            let sweep = density_sweep(&pair, &gt, &densities, cfg)?;
            let names: Vec<String> = sweep.iter().map(|e| format!("d={}", e.density)).collect();
            let rows: Vec<(&str, &MetricsReport)> =
                names.iter().zip(&sweep).map(|(n, e)| (n.as_str(), &e.report)).collect();
            eprint!("{}", MetricsReport::table(&rows));
            for e in &sweep {
                let prefix = format!("density_{}.", e.density);
                writeln!(report, "{prefix}hints={}", e.hints).unwrap();
                report.push_str(&e.report.to_kv_prefixed(&prefix));
            }
            let vanilla = sweep.iter().find(|e| e.density == 0.0).and_then(|e| e.report.bad_at(2.0));
            if let Some(v) = vanilla {
                for e in sweep.iter().filter(|e| e.density > 0.0) {
                    if let Some(b) = e.report.bad_at(2.0) {
                        writeln!(report, "density_{}.bad_2_reduction={:.4}", e.density, relative_reduction(v, b))
                            .unwrap();
                    }
                }
            }
            if let Some(dir) = out_dir {
                fs::create_dir_all(dir)?;
                let density = densities.iter().copied().find(|&d| d > 0.0).unwrap_or(cfg.density);
                let hints = vpp::pipeline::hints_from_gt(&gt, density, cfg)?;
                let (projection, _) = project(&pair, &hints, cfg)?;
                write_image(&projection.pair.left, &dir.join("left_vpp.png"))?;
                write_image(&projection.pair.right, &dir.join("right_vpp.png"))?;
                let fmt = DisparityFormat::Pfm;
                write_disparity(&match_stereo(&pair, &cfg.sgm)?, &dir.join("disp_vanilla.pfm"), fmt)?;
                write_disparity(&match_stereo(&projection.pair, &cfg.sgm)?, &dir.join("disp_vpp.pfm"), fmt)?;
            }
        }
        Command::Synth {
            scene,
            out_dir,
            width,
            height,
            disparity,
        } => {
            let (pair, gt) = match scene {
                SceneKind::Desk => {
                    let s = desk_scene(*width, *height);
                    (s.render(DESK_NOISE_SIGMA, cfg.seed), s.ground_truth())
                }
                SceneKind::Plane => textured_plane(*width, *height, *disparity, cfg.seed),
                SceneKind::TwoPlane => {
                    let s = two_plane_scene(*width, *height, cfg.seed);
                    (s.render(0.0, cfg.seed), s.ground_truth())
                }
            };
            fs::create_dir_all(out_dir)?;
            write_image(&pair.left, &out_dir.join("left.png"))?;
            write_image(&pair.right, &out_dir.join("right.png"))?;
            write_disparity(&gt, &out_dir.join("gt.pfm"), DisparityFormat::Pfm)?;
            writeln!(report, "width={width}").unwrap();
            writeln!(report, "height={height}").unwrap();
        }
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.print_config {
        print!("{}", cfg.to_text());
        return ExitCode::SUCCESS;
    }
    for line in cfg.to_text().lines() {
        eprintln!("# {line}");
    }
    match run(&cli, &cfg) {
        Ok(report) => {
            print!("{report}");
            if let Some(path) = &cli.report {
                if let Err(e) = fs::write(path, &report) {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::FAILURE;
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

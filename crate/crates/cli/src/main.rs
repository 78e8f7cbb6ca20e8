//! `texton`: command-line front end for the texton engine.
//!
//! Exit codes: 0 on success, 1 when an operation fails, 2 on usage errors.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use texton_core::animation::{animate, Flow, ShearFlow, VortexFlow};
use texton_core::editing::{
    interpolate, merge_patch_sets, modify_variations, propagate_edit, rescale_gaussians, reshuffle,
    spatial_morph, transfer_mean_align, transfer_replace, transform_texton, Ramp, ReshuffleMode,
    ReshufflePlan, TextonOp, VariationEdit, DEFAULT_EDIT_THRESHOLD, DEFAULT_GAMMA,
};
use texton_core::estimation::{estimate_gaussians, synth_world, DenseMaps, LayoutSpec, Sampling, SegmentationStack};
use texton_core::io::{load_set, read_image, save_set, save_set_with, write_image, Provenance, Tensor};
use texton_core::objectives::{
    compactness_loss, cycle_consistency, entropy_loss, reconstruction_distance, texture_distance,
};
use texton_core::splatting::{render_set_at, splat, Projection};
use texton_core::{GaussianSet, ImageFrame, TextonError, Vec2, DEFAULT_CAPACITY, DEFAULT_FEATURE_DIM};

#[derive(Parser, Debug)]
#[command(name = "texton", version, about = "Gaussian texton engine", propagate_version = true)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output path (file or directory, depending on the command).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Frame size as WxH.
    #[arg(long, global = true)]
    frame: Option<ImageFrame>,
    /// Appearance feature dimension.
    #[arg(long, global = true, default_value_t = DEFAULT_FEATURE_DIM)]
    nf: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic texton set (and optionally its masks and maps).
    Synth(SynthArgs),
    /// Estimate textons from TXG1 masks and dense maps.
    Estimate(EstimateArgs),
    /// Splat a set into a TXG1 feature grid [H, W, n_f + 2].
    Splat { input: PathBuf },
    /// Render a preview image (.png or .ppm by extension).
    Render { input: PathBuf },
    /// Reshuffle appearance features.
    Reshuffle {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Hard)]
        mode: ModeArg,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
    },
    /// Transfer appearance from one set to another.
    #[command(subcommand)]
    Transfer(TransferCommand),
    /// Scale feature and covariance variations.
    Vary {
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        delta_f: f64,
        #[arg(long, default_value_t = 1.0)]
        delta_u: f64,
    },
    /// Interpolate between two sets.
    Interp {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        eta: f64,
    },
    /// Spatially varying interpolation.
    Morph {
        a: PathBuf,
        b: PathBuf,
        /// `left-to-right` or a constant in [0,1].
        #[arg(long, default_value = "left-to-right")]
        ramp: String,
    },
    /// Move, scale or rotate one texton.
    #[command(subcommand)]
    Edit(EditCommand),
    /// Propagate an image edit to other textons.
    Propagate(PropagateArgs),
    /// Merge patch sets given as PATH@X,Y.
    Merge {
        #[arg(required = true)]
        patches: Vec<String>,
        #[arg(long, default_value_t = 8.0)]
        overlap: f64,
    },
    /// Scale every texton about an anchor point.
    Rescale {
        input: PathBuf,
        #[arg(long)]
        s: f64,
        /// Anchor as X,Y (default: frame center).
        #[arg(long)]
        anchor: Option<String>,
    },
    /// Render an animation into the `--out` directory.
    #[command(subcommand)]
    Animate(AnimateCommand),
    /// Cycle-consistency distance between two sets.
    Cc { a: PathBuf, b: PathBuf },
    /// Image and segmentation metrics as key=value lines.
    Metrics(MetricsArgs),
    /// Run the HTTP session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_CAPACITY)]
    capacity: usize,
    /// Round circular textons only.
    #[arg(long)]
    isotropic: bool,
    /// Write the segmentation stack [n, H, W] (mask 0 is background).
    #[arg(long)]
    masks: Option<PathBuf>,
    /// Write the appearance map [H, W, n_f].
    #[arg(long)]
    appearance: Option<PathBuf>,
    /// Write the direction map [H, W, 2].
    #[arg(long)]
    directions: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    masks: PathBuf,
    #[arg(long)]
    appearance: PathBuf,
    #[arg(long)]
    directions: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CAPACITY)]
    capacity: usize,
    /// Sample relaxed weights at this temperature instead of rounding.
    #[arg(long)]
    temperature: Option<f64>,
    /// Drop this many leading (background) masks from the output.
    #[arg(long, default_value_t = 0)]
    skip: usize,
}

#[derive(Subcommand, Debug)]
enum TransferCommand {
    Mean { structure: PathBuf, appearance: PathBuf },
    Replace { structure: PathBuf, appearance: PathBuf },
}

#[derive(Subcommand, Debug)]
enum EditCommand {
    Move {
        input: PathBuf,
        #[arg(long)]
        index: usize,
        #[arg(long, allow_hyphen_values = true)]
        dx: f64,
        #[arg(long, allow_hyphen_values = true)]
        dy: f64,
    },
    Scale {
        input: PathBuf,
        #[arg(long)]
        index: usize,
        #[arg(long)]
        s: f64,
    },
    Rotate {
        input: PathBuf,
        #[arg(long)]
        index: usize,
        /// Angle in radians.
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
    },
}

#[derive(Args, Debug)]
struct PropagateArgs {
    #[arg(long)]
    original: PathBuf,
    #[arg(long)]
    edited: PathBuf,
    #[arg(long)]
    textons: PathBuf,
    /// Comma-separated target indices.
    #[arg(long, value_delimiter = ',', required = true)]
    targets: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_EDIT_THRESHOLD)]
    threshold: f64,
}

#[derive(Subcommand, Debug)]
enum AnimateCommand {
    Shear {
        input: PathBuf,
        #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
        velocity: f64,
        #[command(flatten)]
        clip: ClipArgs,
    },
    Vortex {
        input: PathBuf,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4, allow_hyphen_values = true)]
        omega: f64,
        #[command(flatten)]
        clip: ClipArgs,
    },
}

#[derive(Args, Debug)]
struct ClipArgs {
    #[arg(long, default_value_t = 10)]
    frames: usize,
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    #[arg(long, value_enum, default_value_t = FormatArg::Png)]
    format: FormatArg,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Two images to compare.
    #[arg(num_args = 0..=2)]
    images: Vec<PathBuf>,
    /// TXG1 segmentation stack [n, H, W] for entropy and compactness.
    #[arg(long)]
    masks: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    patch: usize,
    #[arg(long, default_value_t = 32)]
    projections: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Hard,
    Soft,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Png,
    Ppm,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Op(TextonError),
}

impl From<TextonError> for CliError {
    fn from(e: TextonError) -> Self {
        CliError::Op(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Op(e.into())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

struct Ctx {
    seed: u64,
    out: Option<PathBuf>,
    frame: Option<ImageFrame>,
    nf: usize,
}

impl Ctx {
    fn out(&self) -> CliResult<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Usage("this command requires --out".into()))
    }

    fn save(&self, set: &GaussianSet) -> CliResult {
        save_set(set, self.out()?)?;
        Ok(())
    }
}

fn parse_pair(s: &str, what: &str) -> CliResult<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| CliError::Usage(format!("{what}: expected X,Y, got `{s}`")))?;
    let p = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|e| CliError::Usage(format!("{what}: `{s}`: {e}")))
    };
    Ok((p(a)?, p(b)?))
}

fn read_tensor(path: &Path, rank: usize, what: &str) -> CliResult<Tensor> {
    let t = Tensor::read(path)?;
    if t.dims.len() != rank {
        return Err(CliError::Op(TextonError::DimensionMismatch(format!(
            "{what} tensor must have rank {rank}, found dims {:?}",
            t.dims
        ))));
    }
    Ok(t)
}

fn run(cli: Cli) -> CliResult {
    let ctx = Ctx {
        seed: cli.seed,
        out: cli.out,
        frame: cli.frame,
        nf: cli.nf,
    };
    match cli.command {
        Command::Synth(a) => synth(&ctx, a),
        Command::Estimate(a) => estimate(&ctx, a),
        Command::Splat { input } => {
            let grid = splat(&load_set(input)?)?;
            Tensor::from_grid(&grid).write(ctx.out()?)?;
            Ok(())
        }
        Command::Render { input } => {
            let set = load_set(input)?;
            let frame = ctx.frame.unwrap_or(set.frame);
            let img = render_set_at(&set, frame, &Projection::auto(set.feature_dim))?;
            write_image(&img, ctx.out()?)?;
            Ok(())
        }
        Command::Reshuffle { input, mode, gamma } => {
            let set = load_set(input)?;
            let mode = match mode {
                ModeArg::Hard => ReshuffleMode::Hard,
                ModeArg::Soft => ReshuffleMode::Soft,
            };
            let plan = ReshufflePlan::random(set.len(), mode, ctx.seed).with_gamma(gamma);
            ctx.save(&reshuffle(&set, &plan)?)
        }
        Command::Transfer(TransferCommand::Mean { structure, appearance }) => {
            ctx.save(&transfer_mean_align(&load_set(structure)?, &load_set(appearance)?)?)
        }
        Command::Transfer(TransferCommand::Replace { structure, appearance }) => ctx.save(
            &transfer_replace(&load_set(structure)?, &load_set(appearance)?, ctx.seed)?,
        ),
        Command::Vary { input, delta_f, delta_u } => ctx.save(&modify_variations(
            &load_set(input)?,
            &VariationEdit {
                feature: delta_f,
                covariance: delta_u,
            },
        )?),
        Command::Interp { a, b, eta } => {
            ctx.save(&interpolate(&load_set(a)?, &load_set(b)?, eta, ctx.seed)?)
        }
        Command::Morph { a, b, ramp } => {
            let ramp = match ramp.as_str() {
                "left-to-right" => Ramp::LeftToRight,
                v => Ramp::Constant(v.parse().map_err(|_| {
                    CliError::Usage(format!("--ramp: expected `left-to-right` or a number, got `{v}`"))
                })?),
            };
            ctx.save(&spatial_morph(&load_set(a)?, &load_set(b)?, &ramp, ctx.seed)?)
        }
        Command::Edit(cmd) => {
            let (input, index, op) = match cmd {
                EditCommand::Move { input, index, dx, dy } => (input, index, TextonOp::Move(Vec2::new(dx, dy))),
                EditCommand::Scale { input, index, s } => (input, index, TextonOp::Scale(s)),
                EditCommand::Rotate { input, index, theta } => (input, index, TextonOp::Rotate(theta)),
            };
            ctx.save(&transform_texton(&load_set(input)?, index, op)?)
        }
        Command::Propagate(a) => {
            let out = propagate_edit(
                &read_image(a.original)?,
                &read_image(a.edited)?,
                &load_set(a.textons)?,
                &a.targets,
                a.threshold,
            )?;
            write_image(&out, ctx.out()?)?;
            Ok(())
        }
        Command::Merge { patches, overlap } => {
            let mut sets = Vec::with_capacity(patches.len());
            for p in &patches {
                let (path, at) = p
                    .rsplit_once('@')
                    .ok_or_else(|| CliError::Usage(format!("patch `{p}`: expected PATH@X,Y")))?;
                let (x, y) = parse_pair(at, "patch offset")?;
                if x.fract() != 0.0 || y.fract() != 0.0 {
                    return Err(CliError::Usage(format!("patch `{p}`: offsets must be integers")));
                }
                sets.push((load_set(path)?, (x as i64, y as i64)));
            }
            ctx.save(&merge_patch_sets(&sets, overlap)?)
        }
        Command::Rescale { input, s, anchor } => {
            let set = load_set(input)?;
            let anchor = match anchor {
                Some(a) => {
                    let (x, y) = parse_pair(&a, "--anchor")?;
                    Vec2::new(x, y)
                }
                None => set.frame.center(),
            };
            ctx.save(&rescale_gaussians(&set, s, anchor)?)
        }
        Command::Animate(cmd) => {
            let (input, flow, clip) = match cmd {
                AnimateCommand::Shear { input, velocity, clip } => {
                    let duration = (clip.frames.saturating_sub(1)) as f64 * clip.dt;
                    (input, Flow::Shear(ShearFlow::new(velocity, duration, ctx.seed)), clip)
                }
                AnimateCommand::Vortex { input, omega, clip } => (
                    input,
                    Flow::Vortex(VortexFlow {
                        angular_velocity: omega,
                    }),
                    clip,
                ),
            };
            let set = load_set(input)?;
            let frames = animate(&set, &flow, clip.frames, clip.dt, &Projection::auto(set.feature_dim))?;
            let dir = ctx.out()?;
            std::fs::create_dir_all(dir)?;
            let ext = match clip.format {
                FormatArg::Png => "png",
                FormatArg::Ppm => "ppm",
            };
            for (k, img) in frames.iter().enumerate() {
                write_image(img, dir.join(format!("frame_{k:04}.{ext}")))?;
            }
            Ok(())
        }
        Command::Cc { a, b } => {
            println!("cc={}", cycle_consistency(&load_set(a)?, &load_set(b)?)?);
            Ok(())
        }
        Command::Metrics(a) => metrics(a),
        Command::Serve { addr } => {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()?;
            eprintln!("listening on {addr}");
            rt.block_on(texton_service::serve(addr))?;
            Ok(())
        }
    }
}

fn synth(ctx: &Ctx, a: SynthArgs) -> CliResult {
    let frame = match ctx.frame {
        Some(f) => f,
        None => ImageFrame::new(128, 128)?,
    };
    let mut spec = LayoutSpec::new(frame, a.k, ctx.nf);
    spec.capacity = a.capacity;
    spec.isotropic = a.isotropic;
    let world = synth_world(&spec, ctx.seed)?;
    save_set_with(
        &world.truth,
        Some(Provenance {
            op: "synth".into(),
            seed: Some(ctx.seed),
        }),
        ctx.out()?,
    )?;
    let (w, h) = (frame.width, frame.height);
    if let Some(path) = a.masks {
        let data = world.masks.masks().iter().flatten().map(|&v| v as f32).collect();
        Tensor::new(vec![world.masks.len(), h, w], data)?.write(path)?;
    }
    if let Some(path) = a.appearance {
        let d = world.maps.appearance_dim();
        let data = world.maps.appearance().iter().map(|&v| v as f32).collect();
        Tensor::new(vec![h, w, d], data)?.write(path)?;
    }
    if let Some(path) = a.directions {
        let data = world.maps.directions().iter().map(|&v| v as f32).collect();
        Tensor::new(vec![h, w, 2], data)?.write(path)?;
    }
    Ok(())
}

fn estimate(ctx: &Ctx, a: EstimateArgs) -> CliResult {
    let masks = read_tensor(&a.masks, 3, "masks")?;
    let (n, h, w) = (masks.dims[0], masks.dims[1], masks.dims[2]);
    let frame = ImageFrame::new(w, h)?;
    let values = masks.to_f64();
    let stack = SegmentationStack::new(frame, values.chunks(h * w).map(<[f64]>::to_vec).take(n).collect())?;
    let app = read_tensor(&a.appearance, 3, "appearance")?;
    let dirs = read_tensor(&a.directions, 3, "directions")?;
    if app.dims[..2] != [h, w] || dirs.dims != [h, w, 2] {
        return Err(CliError::Op(TextonError::FrameMismatch {
            expected: frame.to_string(),
            actual: format!("appearance {:?}, directions {:?}", app.dims, dirs.dims),
        }));
    }
    let maps = DenseMaps::new(frame, app.dims[2], app.to_f64(), dirs.to_f64())?;
    let sampling = match a.temperature {
        Some(t) => Sampling::relaxed(t, ctx.seed),
        None => Sampling::rounded(),
    };
    let mut set = estimate_gaussians(&stack, &maps, &sampling, a.capacity.max(n))?;
    let skip = a.skip.min(set.len());
    set.gaussians.drain(..skip);
    set.capacity = a.capacity;
    set.ensure_valid()?;
    ctx.save(&set)
}

fn metrics(a: MetricsArgs) -> CliResult {
    match a.images.len() {
        0 => {}
        2 => {
            let x = read_image(&a.images[0])?;
            let y = read_image(&a.images[1])?;
            let r = reconstruction_distance(&x, &y, None)?;
            println!("l1={}", r.l1);
            println!("perceptual={}", r.perceptual);
            println!("recon={}", r.value);
            println!(
                "texture={}",
                texture_distance(&x, &y, a.patch, a.projections, 0)?
            );
        }
        _ => return Err(CliError::Usage("metrics takes zero or two images".into())),
    }
    if let Some(path) = a.masks {
        let t = read_tensor(&path, 3, "masks")?;
        let (h, w) = (t.dims[1], t.dims[2]);
        let frame = ImageFrame::new(w, h)?;
        let stack = SegmentationStack::new(frame, t.to_f64().chunks(h * w).map(<[f64]>::to_vec).collect())?;
        println!("entropy={}", entropy_loss(&stack));
        println!("compactness={}", compactness_loss(&stack));
    } else if a.images.is_empty() {
        return Err(CliError::Usage("metrics needs two images or --masks".into()));
    }
    Ok(())
}

fn configure_threads() -> CliResult {
    if let Ok(v) = std::env::var("TEXTON_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("TEXTON_THREADS: expected an integer, got `{v}`")))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Usage(e.to_string()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|()| run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Op(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}


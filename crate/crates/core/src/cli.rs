//! Command line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{load_config, RunConfig, Scenario};
use crate::error::{Error, Result};
use crate::geometry::{classify_periodicity, rotational_symmetry_defect, Periodicity, WavevectorMatrix};
use crate::grid::{evaluate_arp_grid, FieldGrid};
use crate::imaging::{
    agreement_curve, binarize, format_curve_csv, parse_correspondences, project_minima, read_pgm,
    write_pgm, BinaryMask, GrayImage, Polarity,
};
use crate::imaging::fit_homography;
use crate::minima::{detect_minima, refine_set, relax_particles, MinimaSet, RefineOptions, RelaxOptions};

#[derive(Debug, Parser)]
#[command(name = "quasiwave", version, about = "Particle assembly in plane-wave superpositions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Named configuration: pair, square, hexagon, octagon, decagon, dodecagon, exp1, exp2.
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    /// Half width of the square analysis box, in wavelengths.
    #[arg(long = "grid-box", global = true, value_name = "F")]
    pub grid_box: Option<f64>,
    /// Grid points per axis.
    #[arg(long = "grid-res", global = true, value_name = "N")]
    pub grid_res: Option<usize>,
    /// Rotation order for the symmetry check.
    #[arg(long, global = true, value_name = "M")]
    pub order: Option<usize>,
    /// Worker thread cap.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Seed for the relaxation start positions
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Potential over the grid: PGM rendering, raw planes and metadata.
    Field,
    /// Detected and refined minima as CSV.
    Minima,
    /// Rotational-symmetry defect of the potential.
    Symmetry,
    /// Periodic or quasiperiodic classification of the wavevectors.
    Classify,
    /// Relax test particles along the radiation force.
    Relax,
    /// Register minima onto a photograph and compute the agreement curve.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Experiment photograph (PGM, P5).
    #[arg(long, value_name = "PATH")]
    pub image: Option<PathBuf>,
    /// Correspondences, one "sx sy tx ty" per line (physical -> pixel).
    #[arg(long, value_name = "PATH")]
    pub pairs: Option<PathBuf>,
    /// Threshold sensitivity in [0, 1]; higher keeps more pixels
    #[arg(long, value_name = "S")]
    pub sensitivity: Option<f64>,
    /// Comma separated circle fractions in [0.5, 1].
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Resolves the configuration from `--config`/`--preset` and flag overrides.
pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(path), None) => load_config(path)?,
        (Some(path), Some(_)) => RunConfig::parse_toml(&fs::read_to_string(path)?)?,
        (None, Some(name)) => RunConfig::from_preset(name)?,
        (None, None) => {
            return Err(Error::Validation("either --config or --preset is required".into()))
        }
    };
    if let (Some(_), Some(name)) = (&common.config, &common.preset) {
        if cfg.wave.wavevectors.is_some() {
            return Err(Error::Config(
                "wave: --preset conflicts with explicit wavevectors in the configuration".into(),
            ));
        }
        cfg.wave.preset = Some(name.clone());
    }
    if let Some(b) = common.grid_box {
        cfg.grid.half_width_wavelengths = b;
    }
    if let Some(n) = common.grid_res {
        cfg.grid.resolution = n;
    }
    if let Some(m) = common.order {
        cfg.symmetry.order = m;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = resolve_config(&cli.common)?;
    if let Command::Compare(args) = &cli.command {
        if let Some(p) = &args.image {
            cfg.compare.image = Some(p.clone());
        }
        if let Some(p) = &args.pairs {
            cfg.compare.pairs = Some(p.clone());
        }
        if let Some(s) = args.sensitivity {
            cfg.compare.sensitivity = s;
        }
        if let Some(a) = &args.alphas {
            cfg.compare.alphas = a.clone();
        }
    }
    let scenario = cfg.validate()?;
    let threads = match cli.common.threads {
        Some(0) => return Err(Error::Validation("--threads must be at least 1".into())),
        Some(n) => n,
        None => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    let out = cli.common.out.as_path();
    pool.install(|| match &cli.command {
        Command::Field => cmd_field(&cfg, &scenario, out),
        Command::Minima => cmd_minima(&cfg, &scenario, out),
        Command::Symmetry => cmd_symmetry(&cfg, &scenario),
        Command::Classify => cmd_classify(&cfg, &scenario),
        Command::Relax => cmd_relax(&cfg, &scenario, out),
        Command::Compare(_) => cmd_compare(&cfg, &scenario, out),
    })
}

fn prepare_out(cfg: &RunConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("config.toml"), cfg.to_toml_string())?;
    Ok(())
}

fn require_2d(sc: &Scenario, what: &str) -> Result<()> {
    if sc.wave.dim() != 2 {
        return Err(Error::Validation(format!("{what} requires a 2D configuration")));
    }
    Ok(())
}

/// Maps the potential to `[0, 1]` by the given range.
pub fn normalize_field(grid: &FieldGrid, range: (f64, f64)) -> GrayImage {
    let (lo, hi) = range;
    let width = grid.spec.points()[0];
    let height = grid.spec.points()[1];
    let span = hi - lo;
    let samples = (0..width * height)
        .map(|i| {
            // image rows run top to bottom, grid rows bottom to top
            let (row, col) = (i / width, i % width);
            let v = grid.psi[(height - 1 - row) * width + col];
            if span > 0.0 {
                ((v - lo) / span).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    GrayImage::new(width, height, samples).expect("normalized samples lie in [0, 1]")
}

fn cmd_field(cfg: &RunConfig, sc: &Scenario, out: &Path) -> Result<()> {
    require_2d(sc, "field image export")?;
    prepare_out(cfg, out)?;
    let grid = evaluate_arp_grid(&sc.wave, &sc.coefficients, &sc.grid)?;
    let (min, max) = grid.psi_range();
    let (range, normalization) = match cfg.field.fixed_scale {
        Some([lo, hi]) => ((lo, hi), "fixed"),
        None => ((min, max), "per-image"),
    };
    let img = normalize_field(&grid, range);
    write_pgm(BufWriter::new(fs::File::create(out.join("psi.pgm"))?), &img, cfg.field.maxval)?;

    let mut raw = Vec::with_capacity(grid.len() * 24);
    for plane in [&grid.psi, &grid.grad_norm, &grid.min_eig] {
        for v in plane.iter() {
            raw.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(out.join("grid.bin"), raw)?;

    let mut meta = String::new();
    let _ = writeln!(meta, "image = \"psi.pgm\"");
    let _ = writeln!(meta, "raw = \"grid.bin\"");
    let _ = writeln!(
        meta,
        "raw_layout = \"three little-endian f64 planes (psi, grad_norm, min_eig), row-major, x fastest, y increasing\""
    );
    let _ = writeln!(meta, "image_orientation = \"top row is the largest y\"");
    let _ = writeln!(meta, "normalization = \"{normalization}\"");
    let _ = writeln!(meta, "psi_min = {:?}", min);
    let _ = writeln!(meta, "psi_max = {:?}", max);
    let _ = writeln!(meta, "scale_min = {:?}", range.0);
    let _ = writeln!(meta, "scale_max = {:?}", range.1);
    let _ = writeln!(meta, "maxval = {}", cfg.field.maxval);
    let _ = writeln!(meta, "wavelength = {:?}", sc.wave.wavelength());
    let _ = writeln!(meta, "lower = {:?}", sc.grid.lower());
    let _ = writeln!(meta, "upper = {:?}", sc.grid.upper());
    let _ = writeln!(meta, "resolution = {:?}", sc.grid.points());
    fs::write(out.join("psi.meta.toml"), meta)?;
    println!("wrote {} ({}x{}), psi in [{min:e}, {max:e}]", out.join("psi.pgm").display(), img.width(), img.height());
    Ok(())
}

/// Grid sweep, detection and refinement for a scenario.
pub fn compute_minima(sc: &Scenario) -> Result<(MinimaSet, MinimaSet, usize)> {
    let grid = evaluate_arp_grid(&sc.wave, &sc.coefficients, &sc.grid)?;
    let detected = detect_minima(&grid, &sc.criteria)?;
    let (refined, failures) = refine_set(&sc.wave, &sc.coefficients, &detected, &RefineOptions::within(&sc.grid));
    Ok((detected, refined, failures))
}

/// CSV with columns `x,y[,z],psi,grad_norm,min_eig,refined`.
pub fn minima_csv(detected: &MinimaSet, refined: &MinimaSet) -> String {
    let dim = detected.grid.dim();
    let coords = if dim == 3 { "x,y,z" } else { "x,y" };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# coordinates in m; psi in potential units; grad_norm per m; min_eig per m^2; refined=false rows are grid nodes"
    );
    let _ = writeln!(s, "{coords},psi,grad_norm,min_eig,refined");
    for m in detected.points.iter().chain(&refined.points) {
        for c in &m.location {
            let _ = write!(s, "{c},");
        }
        let _ = writeln!(s, "{},{},{},{}", m.psi, m.grad_norm, m.min_eig, m.refined);
    }
    s
}

fn cmd_minima(cfg: &RunConfig, sc: &Scenario, out: &Path) -> Result<()> {
    prepare_out(cfg, out)?;
    let (detected, refined, failures) = compute_minima(sc)?;
    fs::write(out.join("minima.csv"), minima_csv(&detected, &refined))?;
    println!(
        "{} grid minima, {} refined ({} seeds did not refine); thresholds eig_min = {:e}, grad_max = {:e}",
        detected.len(),
        refined.len(),
        failures,
        detected.thresholds.eig_min,
        detected.thresholds.grad_max
    );
    Ok(())
}

fn cmd_symmetry(cfg: &RunConfig, sc: &Scenario) -> Result<()> {
    let radius = cfg.symmetry.radius_wavelengths * sc.wave.wavelength();
    let defect = rotational_symmetry_defect(
        &sc.wave,
        &sc.coefficients,
        cfg.symmetry.order,
        radius,
        cfg.symmetry.samples,
    )?;
    println!("order {} defect {defect:e}", cfg.symmetry.order);
    Ok(())
}

fn cmd_classify(cfg: &RunConfig, sc: &Scenario) -> Result<()> {
    let k = WavevectorMatrix::from_config(&sc.wave)?;
    match classify_periodicity(&k, cfg.classify.qmax)? {
        Periodicity::Periodic(w) => {
            println!("periodic");
            println!("witness: {w}");
            for (i, t) in w.translations.iter().enumerate() {
                println!("translation {}: {:?}", i + 1, t);
            }
        }
        Periodicity::Quasiperiodic => {
            println!("quasiperiodic");
            println!("no rational relation with denominator <= {}", cfg.classify.qmax);
        }
    }
    Ok(())
}

/// Uniform random starting points in the disk of the given radius.
pub fn relax_seeds(seed: u64, count: usize, radius: f64, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-radius..=radius)).collect();
            if p.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
                break p;
            }
        })
        .collect()
}

fn cmd_relax(cfg: &RunConfig, sc: &Scenario, out: &Path) -> Result<()> {
    prepare_out(cfg, out)?;
    let radius = cfg.relax.radius_wavelengths * sc.wave.wavelength();
    let seeds = relax_seeds(cfg.seed, cfg.relax.particles, radius, sc.wave.dim());
    let opts = RelaxOptions {
        iters: cfg.relax.iterations,
        record_paths: true,
        ..Default::default()
    };
    let traj = relax_particles(&sc.wave, &sc.coefficients, &seeds, &opts)?;
    let dim = sc.wave.dim();
    let axes = ["x", "y", "z"][..dim].join(",");
    let mut csv = String::new();
    let _ = writeln!(csv, "# coordinates in m; psi in potential units");
    let _ = writeln!(csv, "particle,step,{axes},psi");
    for (i, t) in traj.iter().enumerate() {
        let steps: Vec<usize> = if cfg.relax.record_paths {
            (0..t.path.len()).collect()
        } else {
            vec![0, t.path.len() - 1]
        };
        for s in steps {
            let _ = write!(csv, "{i},{s}");
            for c in &t.path[s] {
                let _ = write!(csv, ",{c}");
            }
            let _ = writeln!(csv, ",{}", t.psi_path[s]);
        }
    }
    fs::write(out.join("trajectories.csv"), csv)?;
    let converged = traj.iter().filter(|t| t.converged).count();
    println!("{converged} of {} particles converged", traj.len());
    Ok(())
}

fn overlay(sim: &BinaryMask, exp: &BinaryMask) -> GrayImage {
    let samples = sim
        .bits()
        .iter()
        .zip(exp.bits())
        .map(|(&s, &e)| match (s, e) {
            (true, true) => 0.0,
            (true, false) => 1.0 / 3.0,
            (false, true) => 2.0 / 3.0,
            (false, false) => 1.0,
        })
        .collect();
    GrayImage::new(sim.width(), sim.height(), samples).expect("overlay levels lie in [0, 1]")
}

fn cmd_compare(cfg: &RunConfig, sc: &Scenario, out: &Path) -> Result<()> {
    require_2d(sc, "compare")?;
    let c = &cfg.compare;
    let image_path = c
        .image
        .as_ref()
        .ok_or_else(|| Error::Validation("compare needs --image".into()))?;
    let pairs_path = c
        .pairs
        .as_ref()
        .ok_or_else(|| Error::Validation("compare needs --pairs".into()))?;
    let photo = read_pgm(std::io::BufReader::new(fs::File::open(image_path)?))?;
    let pairs = parse_correspondences(&fs::read_to_string(pairs_path)?)?;
    prepare_out(cfg, out)?;

    let polarity = if c.polarity == "bright" { Polarity::Bright } else { Polarity::Dark };
    let exp = binarize(&photo, c.sensitivity, polarity)?;
    let h = fit_homography(&pairs)?;
    let (_, refined, _) = compute_minima(sc)?;
    let proj = project_minima(&h, &refined, photo.width(), photo.height(), c.marker_radius)?;
    let d = c.transducer_width_wavelengths * sc.wave.wavelength();
    let center = h
        .apply([0.0, 0.0])
        .ok_or_else(|| Error::Validation("origin maps to infinity".into()))?;
    let (a, b) = (h.apply([-0.5 * d, 0.0]), h.apply([0.5 * d, 0.0]));
    let (Some(a), Some(b)) = (a, b) else {
        return Err(Error::Validation("reference width maps to infinity".into()));
    };
    let d_px = (b[0] - a[0]).hypot(b[1] - a[1]);
    let curve = agreement_curve(&proj.mask, &exp, center, d_px, &c.alphas)?;

    write_pgm(BufWriter::new(fs::File::create(out.join("sim_mask.pgm"))?), &proj.mask.to_image(), 255)?;
    write_pgm(BufWriter::new(fs::File::create(out.join("exp_mask.pgm"))?), &exp.to_image(), 255)?;
    write_pgm(BufWriter::new(fs::File::create(out.join("overlay.pgm"))?), &overlay(&proj.mask, &exp), 255)?;
    fs::write(out.join("agreement.csv"), format_curve_csv(&curve))?;
    if proj.skipped > 0 {
        eprintln!("warning: {} minima mapped to the line at infinity", proj.skipped);
    }
    println!("homography {:?}", h.matrix());
    print!("{}", format_curve_csv(&curve));
    Ok(())
}

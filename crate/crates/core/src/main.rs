//! `medial` — the full medial-spectral pipeline as subcommands.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use medial_spectral::config::PipelineConfig;
use medial_spectral::correspond::{align_spectra_weighted, match_points, MatchMode};
use medial_spectral::features::{export_features, gsc, load_points};
use medial_spectral::medial::{
    average_outward_flux, distance_transform, gradient_field, thin, SkeletalPointSet,
};
use medial_spectral::pipeline::{run_pipeline, PipelineInputs, Stage};
use medial_spectral::recon::{miou, reconstruct};
use medial_spectral::segment::{augment_features, cluster, FeatureMatrix};
use medial_spectral::spectral::{
    build_graph, map_boundary_to_medial, solve_eigens, RhoMode, SpectralEmbedding,
};
use medial_spectral::voxelio::{export_mesh_scalars, load_mesh, voxelize, VoxelGrid};
use medial_spectral::{synth, Result};

#[derive(Parser)]
#[command(
    name = "medial",
    about = "Medial-surface driven spectral coordinates for 3D shape analysis",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RhoArg {
    Radius,
    Volume,
}

impl From<RhoArg> for RhoMode {
    fn from(r: RhoArg) -> RhoMode {
        match r {
            RhoArg::Radius => RhoMode::Radius,
            RhoArg::Volume => RhoMode::Volume,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Nearest,
    Drift,
}

impl From<ModeArg> for MatchMode {
    fn from(m: ModeArg) -> MatchMode {
        match m {
            ModeArg::Nearest => MatchMode::Nearest,
            ModeArg::Drift => MatchMode::Drift,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Cube,
    Ball,
    Cylinder,
    Torus,
    LSolid,
    Dumbbell,
    BentTube,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic watertight test mesh (ASCII PLY).
    Synth {
        #[arg(long, value_enum)]
        shape: ShapeArg,
        #[arg(long)]
        out: PathBuf,
        /// Bend angle for the bent tube, radians.
        #[arg(long, default_value_t = 0.4)]
        bend: f64,
    },
    /// Voxelize a watertight mesh into a solid occupancy grid.
    Voxelize {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = 128)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the medial surface of a voxel grid by flux-guided thinning.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        tau: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct the solid as the envelope of the medial spheres.
    Reconstruct {
        #[arg(long)]
        skel: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the mean intersection-over-union of two voxel grids.
    Miou {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Solve the medially weighted spectral embedding of a mesh boundary.
    Spectral {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        skel: PathBuf,
        #[arg(long, default_value_t = 30)]
        k: usize,
        #[arg(long = "K", default_value_t = 16)]
        big_k: usize,
        #[arg(long, value_enum, default_value = "radius")]
        rho: RhoArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Align two spectra and match points between two embeddings.
    Correspond {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Mesh that produced embedding A (spatial alignment term).
        #[arg(long)]
        mesh_a: PathBuf,
        /// Mesh that produced embedding B.
        #[arg(long)]
        mesh_b: PathBuf,
        #[arg(long, value_enum, default_value = "drift")]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble the medially augmented per-vertex feature table.
    Augment {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        skel: PathBuf,
        #[arg(long)]
        emb: PathBuf,
        /// Disable the sqrt(lambda_1/lambda_i) weighting of spectral columns.
        #[arg(long)]
        no_eigen_weighting: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster a feature table into parts.
    Segment {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 4)]
        parts: usize,
        #[arg(long, default_value_t = 8)]
        subspaces: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the 9-dimensional per-point features of a cloud.
    Gsc {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        emb: PathBuf,
        #[arg(long, default_value_t = 8)]
        k: usize,
        /// Optional class id appended as a label column.
        #[arg(long)]
        label: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run pipeline stages in dependency order with artifact caching.
    Run {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        mesh_b: Option<PathBuf>,
        #[arg(long, default_value = "all")]
        stage: String,
        #[arg(long)]
        out: PathBuf,
        /// Flat key=value configuration file overriding the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Manifest location (default: <out>/manifest.txt).
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth { shape, out, bend } => {
            let mesh = match shape {
                ShapeArg::Cube => synth::cube(1.0),
                ShapeArg::Ball => synth::icosphere(1.0, 3),
                ShapeArg::Cylinder => synth::cylinder(0.5, 2.0, 24, 16),
                ShapeArg::Torus => synth::torus(1.0, 0.35, 32, 16),
                ShapeArg::LSolid => synth::l_solid(1.0, 0.5),
                ShapeArg::Dumbbell => synth::dumbbell(24, 48),
                ShapeArg::BentTube => synth::bent_tube(bend, 30, 10, 0.15),
            };
            export_mesh_scalars(&mesh, &BTreeMap::new(), &out)
        }
        Command::Voxelize { mesh, resolution, out } => {
            let mesh = load_mesh(&mesh)?;
            voxelize(&mesh, resolution)?.save(&out)
        }
        Command::Extract { input, tau, out } => {
            let grid = VoxelGrid::load(&input)?;
            let df = distance_transform(&grid)?;
            let vf = gradient_field(&df, &grid);
            let aof = average_outward_flux(&vf, &grid);
            thin(&grid, &aof, &df, tau)?.save(&out)
        }
        Command::Reconstruct { skel, out } => {
            let skel = SkeletalPointSet::load(&skel)?;
            reconstruct(&skel)?.grid.save(&out)
        }
        Command::Miou { a, b } => {
            let ga = VoxelGrid::load(&a)?;
            let gb = VoxelGrid::load(&b)?;
            println!("{:.6}", miou(&ga, &gb)?);
            Ok(())
        }
        Command::Spectral { mesh, skel, k, big_k, rho, seed, out } => {
            let mesh = load_mesh(&mesh)?;
            let skel = SkeletalPointSet::load(&skel)?;
            let rec = reconstruct(&skel)?;
            let map = map_boundary_to_medial(&mesh, &skel, &rec)?;
            let graph = build_graph(&mesh, &map, &skel, big_k, rho.into())?;
            solve_eigens(&graph, k, seed)?.save(&out)
        }
        Command::Correspond { a, b, mesh_a, mesh_b, mode, out } => {
            let ea = SpectralEmbedding::load(&a)?;
            let eb = SpectralEmbedding::load(&b)?;
            let ma = load_mesh(&mesh_a)?;
            let mb = load_mesh(&mesh_b)?;
            let cfg = PipelineConfig::default();
            let alignment =
                align_spectra_weighted(&ea, &eb, &ma, &mb, cfg.alpha, cfg.beta, cfg.gamma)?;
            match_points(&ea, &eb, &alignment, mode.into())?.save(&out)
        }
        Command::Augment { mesh, skel, emb, no_eigen_weighting, out } => {
            let mesh = load_mesh(&mesh)?;
            let skel = SkeletalPointSet::load(&skel)?;
            let emb = SpectralEmbedding::load(&emb)?;
            let rec = reconstruct(&skel)?;
            let map = map_boundary_to_medial(&mesh, &skel, &rec)?;
            augment_features(&mesh, &map, &skel, Some(&emb), !no_eigen_weighting)?.save(&out)
        }
        Command::Segment { features, parts, subspaces, seed, out } => {
            let f = FeatureMatrix::load(&features)?;
            cluster(&f, parts, subspaces, seed)?.save(&out)
        }
        Command::Gsc { points, emb, k, label, out } => {
            let pts = load_points(&points)?;
            let emb = SpectralEmbedding::load(&emb)?;
            export_features(&gsc(&pts, &emb, k)?, label, &out)
        }
        Command::Run { mesh, mesh_b, stage, out, config, manifest } => {
            let cfg = match config {
                Some(p) => PipelineConfig::load(&p)?,
                None => PipelineConfig::default(),
            };
            let stage: Stage = stage.parse()?;
            let inputs = PipelineInputs { mesh, mesh_b };
            let m = run_pipeline(&cfg, &inputs, stage, &out, manifest.as_deref())?;
            for r in &m.records {
                println!(
                    "{}: {} ({} ms)",
                    r.name,
                    match r.status {
                        medial_spectral::pipeline::StageStatus::Done => "done",
                        medial_spectral::pipeline::StageStatus::Cached => "cached",
                        medial_spectral::pipeline::StageStatus::Failed => "failed",
                    },
                    r.millis
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
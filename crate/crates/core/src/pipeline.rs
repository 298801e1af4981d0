//! End-to-end pipeline driver: runs the stages in dependency order over one
//! or two input meshes, caches artifacts by content hash, and records a run
//! manifest (inputs, configuration, versions, per-stage wall time) even when
//! a stage fails.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::correspond::{align_spectra_weighted, match_points};
use crate::features::{export_features, gsc};
use crate::medial::{average_outward_flux, distance_transform, gradient_field, thin, SkeletalPointSet};
use crate::recon::{miou, reconstruct};
use crate::segment::{augment_features, cluster};
use crate::spectral::{build_graph, map_boundary_to_medial, solve_eigens, SpectralEmbedding};
use crate::voxelio::{load_mesh, voxelize, TriangleMesh, VoxelGrid};
use crate::{Error, Result};

/// A pipeline stage, or `All` for the full dependency-ordered run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Voxelize,
    Skeleton,
    Reconstruct,
    Spectral,
    Correspond,
    Segment,
    Gsc,
    All,
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Stage> {
        Ok(match s {
            "voxelize" => Stage::Voxelize,
            "skeleton" => Stage::Skeleton,
            "reconstruct" => Stage::Reconstruct,
            "spectral" => Stage::Spectral,
            "correspond" => Stage::Correspond,
            "segment" => Stage::Segment,
            "gsc" => Stage::Gsc,
            "all" => Stage::All,
            _ => {
                return Err(Error::Validation {
                    field: "stage".into(),
                    msg: format!(
                        "{s:?} is not one of voxelize|skeleton|reconstruct|spectral|\
                         correspond|segment|gsc|all"
                    ),
                })
            }
        })
    }
}

impl Stage {
    fn name(self) -> &'static str {
        match self {
            Stage::Voxelize => "voxelize",
            Stage::Skeleton => "skeleton",
            Stage::Reconstruct => "reconstruct",
            Stage::Spectral => "spectral",
            Stage::Correspond => "correspond",
            Stage::Segment => "segment",
            Stage::Gsc => "gsc",
            Stage::All => "all",
        }
    }
}

/// Input mesh paths; `mesh_b` enables the correspondence stage.
#[derive(Debug, Clone)]
pub struct PipelineInputs {
    pub mesh: PathBuf,
    pub mesh_b: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Done,
    Cached,
    Failed,
}

impl StageStatus {
    fn label(self) -> &'static str {
        match self {
            StageStatus::Done => "done",
            StageStatus::Cached => "cached",
            StageStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub millis: u128,
    pub artifacts: Vec<String>,
    pub error: Option<String>,
}

/// Reproducibility record of one pipeline invocation.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub version: String,
    pub stage: String,
    /// (role, path, content hash) per input file.
    pub inputs: Vec<(String, String, String)>,
    pub config: String,
    pub records: Vec<StageRecord>,
}

impl Manifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "medial-spectral {}", self.version);
        let _ = writeln!(out, "stage {}", self.stage);
        for (role, p, h) in &self.inputs {
            let _ = writeln!(out, "input {role} {p} sha256 {h}");
        }
        out.push_str("config:\n");
        for line in self.config.lines() {
            let _ = writeln!(out, "  {line}");
        }
        out.push_str("stages:\n");
        for r in &self.records {
            let _ = write!(
                out,
                "  {} status={} millis={} artifacts={}",
                r.name,
                r.status.label(),
                r.millis,
                r.artifacts.join(",")
            );
            if let Some(e) = &r.error {
                let _ = write!(out, " error={:?}", e);
            }
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

fn hex_hash(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    format!("{:x}", h.finalize())
}

fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| {
        Error::Dependency(format!("{}: {e}", path.display()))
    })?;
    Ok(hex_hash(&[&bytes]))
}

/// One shape's artifact names under the output directory.
struct ShapeArtifacts {
    prefix: &'static str,
}

impl ShapeArtifacts {
    fn name(&self, base: &str) -> String {
        format!("{}{base}", self.prefix)
    }
    fn voxels(&self) -> String {
        self.name("voxels.grid")
    }
    fn skeleton(&self) -> String {
        self.name("skeleton.txt")
    }
    fn recon(&self) -> String {
        self.name("recon.grid")
    }
    fn miou(&self) -> String {
        self.name("miou.txt")
    }
    fn embedding(&self) -> String {
        self.name("embedding.txt")
    }
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    out: &'a Path,
    records: Vec<StageRecord>,
}

impl<'a> Runner<'a> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Demand an upstream artifact produced by `producer`.
    fn require(&self, name: &str, producer: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if !p.exists() {
            return Err(Error::Dependency(format!(
                "{} not found in {}; run the {producer} stage (or `all`) first",
                name,
                self.out.display()
            )));
        }
        Ok(p)
    }

    /// Run one stage with content-hash caching: `key` identifies the inputs
    /// and configuration; if the stored key matches and all artifacts exist
    /// the stage is skipped as a cache hit.
    fn run_stage<F>(&mut self, label: String, key: String, artifacts: Vec<String>, body: F) -> Result<()>
    where
        F: FnOnce(&Self) -> Result<()>,
    {
        let key_file = self.path(&format!("{label}.key"));
        let cached = std::fs::read_to_string(&key_file)
            .map(|stored| stored.trim() == key)
            .unwrap_or(false)
            && artifacts.iter().all(|a| self.path(a).exists());
        if cached {
            self.records.push(StageRecord {
                name: label,
                status: StageStatus::Cached,
                millis: 0,
                artifacts,
                error: None,
            });
            return Ok(());
        }
        let start = Instant::now();
        let result = body(self);
        let millis = start.elapsed().as_millis();
        match result {
            Ok(()) => {
                std::fs::write(&key_file, format!("{key}\n"))?;
                self.records.push(StageRecord {
                    name: label,
                    status: StageStatus::Done,
                    millis,
                    artifacts,
                    error: None,
                });
                Ok(())
            }
            Err(e) => {
                self.records.push(StageRecord {
                    name: label,
                    status: StageStatus::Failed,
                    millis,
                    artifacts,
                    error: Some(e.to_string()),
                });
                Err(e)
            }
        }
    }

    fn voxelize(&mut self, mesh_path: &Path, arts: &ShapeArtifacts) -> Result<()> {
        let cfg = self.cfg;
        let key = hex_hash(&[
            b"voxelize",
            file_hash(mesh_path)?.as_bytes(),
            cfg.resolution.to_string().as_bytes(),
        ]);
        let out = self.path(&arts.voxels());
        self.run_stage(
            arts.name("voxelize"),
            key,
            vec![arts.voxels()],
            move |_| {
                let mesh = load_mesh(mesh_path)?;
                let grid = voxelize(&mesh, cfg.resolution)?;
                grid.save(&out)
            },
        )
    }

    fn skeleton(&mut self, arts: &ShapeArtifacts) -> Result<()> {
        let cfg = self.cfg;
        let voxels = self.require(&arts.voxels(), "voxelize")?;
        let key = hex_hash(&[
            b"skeleton",
            file_hash(&voxels)?.as_bytes(),
            cfg.tau.to_string().as_bytes(),
        ]);
        let out = self.path(&arts.skeleton());
        self.run_stage(arts.name("skeleton"), key, vec![arts.skeleton()], move |_| {
            let grid = VoxelGrid::load(&voxels)?;
            let df = distance_transform(&grid)?;
            let vf = gradient_field(&df, &grid);
            let aof = average_outward_flux(&vf, &grid);
            let skel = thin(&grid, &aof, &df, cfg.tau)?;
            skel.save(&out)
        })
    }

    fn reconstruct(&mut self, arts: &ShapeArtifacts) -> Result<()> {
        let skel_path = self.require(&arts.skeleton(), "skeleton")?;
        let voxels = self.require(&arts.voxels(), "voxelize")?;
        let key = hex_hash(&[
            b"reconstruct",
            file_hash(&skel_path)?.as_bytes(),
            file_hash(&voxels)?.as_bytes(),
        ]);
        let out_grid = self.path(&arts.recon());
        let out_miou = self.path(&arts.miou());
        self.run_stage(
            arts.name("reconstruct"),
            key,
            vec![arts.recon(), arts.miou()],
            move |_| {
                let skel = SkeletalPointSet::load(&skel_path)?;
                let rec = reconstruct(&skel)?;
                rec.grid.save(&out_grid)?;
                let original = VoxelGrid::load(&voxels)?;
                let score = miou(&original, &rec.grid)?;
                std::fs::write(&out_miou, format!("{score:.6}\n"))?;
                Ok(())
            },
        )
    }

    fn spectral(&mut self, mesh_path: &Path, arts: &ShapeArtifacts) -> Result<()> {
        let cfg = self.cfg;
        let skel_path = self.require(&arts.skeleton(), "skeleton")?;
        let key = hex_hash(&[
            b"spectral",
            file_hash(mesh_path)?.as_bytes(),
            file_hash(&skel_path)?.as_bytes(),
            cfg.big_k.to_string().as_bytes(),
            cfg.k.to_string().as_bytes(),
            format!("{:?}", cfg.rho).as_bytes(),
            cfg.seed.to_string().as_bytes(),
        ]);
        let out = self.path(&arts.embedding());
        self.run_stage(arts.name("spectral"), key, vec![arts.embedding()], move |_| {
            let mesh = load_mesh(mesh_path)?;
            let skel = SkeletalPointSet::load(&skel_path)?;
            let rec = reconstruct(&skel)?;
            let map = map_boundary_to_medial(&mesh, &skel, &rec)?;
            let graph = build_graph(&mesh, &map, &skel, cfg.big_k, cfg.rho)?;
            let emb = solve_eigens(&graph, cfg.k, cfg.seed)?;
            emb.save(&out)
        })
    }

    fn segment(&mut self, mesh_path: &Path, arts: &ShapeArtifacts) -> Result<()> {
        let cfg = self.cfg;
        let skel_path = self.require(&arts.skeleton(), "skeleton")?;
        let emb_path = self.require(&arts.embedding(), "spectral")?;
        let key = hex_hash(&[
            b"segment",
            file_hash(mesh_path)?.as_bytes(),
            file_hash(&skel_path)?.as_bytes(),
            file_hash(&emb_path)?.as_bytes(),
            cfg.parts.to_string().as_bytes(),
            cfg.subspaces.to_string().as_bytes(),
            cfg.seg_seed.to_string().as_bytes(),
            cfg.eigen_weighting.to_string().as_bytes(),
        ]);
        let out = self.path("labels.txt");
        self.run_stage("segment".into(), key, vec!["labels.txt".into()], move |_| {
            let mesh = load_mesh(mesh_path)?;
            let skel = SkeletalPointSet::load(&skel_path)?;
            let emb = SpectralEmbedding::load(&emb_path)?;
            let rec = reconstruct(&skel)?;
            let map = map_boundary_to_medial(&mesh, &skel, &rec)?;
            let f = augment_features(&mesh, &map, &skel, Some(&emb), cfg.eigen_weighting)?;
            let labels = cluster(&f, cfg.parts, cfg.subspaces, cfg.seg_seed)?;
            labels.save(&out)
        })
    }

    fn gsc(&mut self, mesh_path: &Path, arts: &ShapeArtifacts) -> Result<()> {
        let cfg = self.cfg;
        let emb_path = self.require(&arts.embedding(), "spectral")?;
        let key = hex_hash(&[
            b"gsc",
            file_hash(mesh_path)?.as_bytes(),
            file_hash(&emb_path)?.as_bytes(),
            cfg.gsc_k.to_string().as_bytes(),
        ]);
        let out = self.path("features.txt");
        self.run_stage("gsc".into(), key, vec!["features.txt".into()], move |_| {
            let mesh = load_mesh(mesh_path)?;
            let emb = SpectralEmbedding::load(&emb_path)?;
            let f = gsc(&mesh.vertices, &emb, cfg.gsc_k)?;
            export_features(&f, None, &out)
        })
    }

    fn correspond(
        &mut self,
        mesh_a: &Path,
        mesh_b: &Path,
        arts_a: &ShapeArtifacts,
        arts_b: &ShapeArtifacts,
    ) -> Result<()> {
        let cfg = self.cfg;
        let emb_a_path = self.require(&arts_a.embedding(), "spectral")?;
        let emb_b_path = self.require(&arts_b.embedding(), "spectral")?;
        let key = hex_hash(&[
            b"correspond",
            file_hash(mesh_a)?.as_bytes(),
            file_hash(mesh_b)?.as_bytes(),
            file_hash(&emb_a_path)?.as_bytes(),
            file_hash(&emb_b_path)?.as_bytes(),
            format!("{:?}", cfg.mode).as_bytes(),
            cfg.alpha.to_string().as_bytes(),
            cfg.beta.to_string().as_bytes(),
            cfg.gamma.to_string().as_bytes(),
        ]);
        let out = self.path("correspondence.txt");
        self.run_stage(
            "correspond".into(),
            key,
            vec!["correspondence.txt".into()],
            move |_| {
                let ma = load_mesh(mesh_a)?;
                let mb = load_mesh(mesh_b)?;
                let ea = SpectralEmbedding::load(&emb_a_path)?;
                let eb = SpectralEmbedding::load(&emb_b_path)?;
                let alignment = align_spectra_weighted(
                    &ea, &eb, &ma, &mb, cfg.alpha, cfg.beta, cfg.gamma,
                )?;
                let map = match_points(&ea, &eb, &alignment, cfg.mode)?;
                map.save(&out)
            },
        )
    }
}

/// Execute the requested stage (or the full dependency-ordered chain) and
/// write the manifest. The manifest is written even when a stage fails; the
/// failing error is still returned.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    inputs: &PipelineInputs,
    stage: Stage,
    out_dir: &Path,
    manifest_path: Option<&Path>,
) -> Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;

    let mut manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        stage: stage.name().to_string(),
        inputs: Vec::new(),
        config: cfg.serialize(),
        records: Vec::new(),
    };
    manifest.inputs.push((
        "mesh".into(),
        inputs.mesh.display().to_string(),
        file_hash(&inputs.mesh).unwrap_or_else(|_| "missing".into()),
    ));
    if let Some(b) = &inputs.mesh_b {
        manifest.inputs.push((
            "mesh_b".into(),
            b.display().to_string(),
            file_hash(b).unwrap_or_else(|_| "missing".into()),
        ));
    }

    let mut runner = Runner { cfg, out: out_dir, records: Vec::new() };
    let a = ShapeArtifacts { prefix: "" };
    let b = ShapeArtifacts { prefix: "b_" };

    let result = (|| -> Result<()> {
        match stage {
            Stage::Voxelize => runner.voxelize(&inputs.mesh, &a),
            Stage::Skeleton => runner.skeleton(&a),
            Stage::Reconstruct => runner.reconstruct(&a),
            Stage::Spectral => runner.spectral(&inputs.mesh, &a),
            Stage::Segment => runner.segment(&inputs.mesh, &a),
            Stage::Gsc => runner.gsc(&inputs.mesh, &a),
            Stage::Correspond => {
                let mesh_b = inputs.mesh_b.as_ref().ok_or_else(|| {
                    Error::Dependency("correspond needs a second input mesh".into())
                })?;
                runner.correspond(&inputs.mesh, mesh_b, &a, &b)
            }
            Stage::All => {
                runner.voxelize(&inputs.mesh, &a)?;
                runner.skeleton(&a)?;
                runner.reconstruct(&a)?;
                runner.spectral(&inputs.mesh, &a)?;
                if let Some(mesh_b) = &inputs.mesh_b {
                    runner.voxelize(mesh_b, &b)?;
                    runner.skeleton(&b)?;
                    runner.reconstruct(&b)?;
                    runner.spectral(mesh_b, &b)?;
                    runner.correspond(&inputs.mesh, mesh_b, &a, &b)?;
                }
                runner.segment(&inputs.mesh, &a)?;
                runner.gsc(&inputs.mesh, &a)
            }
        }
    })();

    manifest.records = runner.records;
    if let Err(e) = &result {
        // A dependency failure may precede any stage record; keep the error
        // visible in the manifest regardless.
        if !manifest.records.iter().any(|r| r.status == StageStatus::Failed) {
            manifest.records.push(StageRecord {
                name: stage.name().into(),
                status: StageStatus::Failed,
                millis: 0,
                artifacts: Vec::new(),
                error: Some(e.to_string()),
            });
        }
    }
    let mpath = manifest_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out_dir.join("manifest.txt"));
    manifest.save(&mpath)?;
    result.map(|()| manifest)
}

/// Names of the artifacts an `all` run produces for a single input mesh.
pub const SINGLE_MESH_ARTIFACTS: [&str; 7] = [
    "voxels.grid",
    "skeleton.txt",
    "recon.grid",
    "miou.txt",
    "embedding.txt",
    "labels.txt",
    "features.txt",
];

// Re-exported so callers can build meshes for tests without extra imports.
#[allow(unused)]
fn _assert_mesh_type(_: &TriangleMesh) {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correspond::MatchMode;
    use crate::synth;
    use crate::voxelio::export_mesh_scalars;
    use std::collections::BTreeMap;

    fn small_config() -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        cfg.resolution = 32;
        cfg.k = 4;
        cfg.parts = 2;
        cfg.subspaces = 4;
        cfg.gsc_k = 4;
        cfg
    }

    fn write_mesh(dir: &Path, name: &str, mesh: &crate::voxelio::TriangleMesh) -> PathBuf {
        let p = dir.join(name);
        export_mesh_scalars(mesh, &BTreeMap::new(), &p).unwrap();
        p
    }

    fn artifact_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
        SINGLE_MESH_ARTIFACTS
            .iter()
            .map(|a| (a.to_string(), std::fs::read(dir.join(a)).unwrap()))
            .collect()
    }

    #[test]
    fn all_on_cube_produces_artifacts_then_cache_hits() {
        let dir = tempfile::tempdir().unwrap();
        let mesh_path = write_mesh(dir.path(), "cube.ply", &synth::cube(1.0));
        let out = dir.path().join("out");
        let cfg = small_config();
        let inputs = PipelineInputs { mesh: mesh_path, mesh_b: None };

        let m1 = run_pipeline(&cfg, &inputs, Stage::All, &out, None).unwrap();
        for a in SINGLE_MESH_ARTIFACTS {
            assert!(out.join(a).exists(), "missing artifact {a}");
        }
        assert!(out.join("manifest.txt").exists());
        assert!(m1.records.iter().all(|r| r.status == StageStatus::Done));

        let first = artifact_bytes(&out);
        let m2 = run_pipeline(&cfg, &inputs, Stage::All, &out, None).unwrap();
        assert!(
            m2.records.iter().all(|r| r.status == StageStatus::Cached),
            "rerun must be a full cache hit: {:?}",
            m2.records.iter().map(|r| (r.name.clone(), r.status)).collect::<Vec<_>>()
        );
        assert_eq!(first, artifact_bytes(&out), "cache hit must not rewrite artifacts");
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mesh_path = write_mesh(dir.path(), "cube.ply", &synth::cube(1.0));
        let cfg = small_config();
        let inputs = PipelineInputs { mesh: mesh_path, mesh_b: None };
        let out1 = dir.path().join("run1");
        let out2 = dir.path().join("run2");
        run_pipeline(&cfg, &inputs, Stage::All, &out1, None).unwrap();
        run_pipeline(&cfg, &inputs, Stage::All, &out2, None).unwrap();
        assert_eq!(artifact_bytes(&out1), artifact_bytes(&out2));
    }

    #[test]
    fn missing_upstream_is_dependency_error_with_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mesh_path = write_mesh(dir.path(), "cube.ply", &synth::cube(1.0));
        let out = dir.path().join("out");
        let cfg = small_config();
        let inputs = PipelineInputs { mesh: mesh_path, mesh_b: None };
        let err = run_pipeline(&cfg, &inputs, Stage::Skeleton, &out, None).unwrap_err();
        assert!(matches!(err, Error::Dependency(_)), "got {err:?}");
        // Manifest written despite the failure, and it records the error.
        let text = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
        assert!(text.contains("status=failed"), "{text}");
        assert!(text.contains("error="), "{text}");
    }

    #[test]
    fn config_change_invalidates_only_dependent_stages() {
        let dir = tempfile::tempdir().unwrap();
        let mesh_path = write_mesh(dir.path(), "cube.ply", &synth::cube(1.0));
        let out = dir.path().join("out");
        let mut cfg = small_config();
        let inputs = PipelineInputs { mesh: mesh_path, mesh_b: None };
        run_pipeline(&cfg, &inputs, Stage::All, &out, None).unwrap();
        cfg.gsc_k = 6;
        let m = run_pipeline(&cfg, &inputs, Stage::All, &out, None).unwrap();
        for r in &m.records {
            let want =
                if r.name == "gsc" { StageStatus::Done } else { StageStatus::Cached };
            assert_eq!(r.status, want, "stage {}", r.name);
        }
    }

    #[test]
    fn pair_run_adds_correspondence() {
        let dir = tempfile::tempdir().unwrap();
        let mesh_a = write_mesh(dir.path(), "a.ply", &synth::cube(1.0));
        let mesh_b = write_mesh(dir.path(), "b.ply", &synth::cube(1.0));
        let out = dir.path().join("out");
        let mut cfg = small_config();
        cfg.mode = MatchMode::Nearest;
        let inputs = PipelineInputs { mesh: mesh_a, mesh_b: Some(mesh_b) };
        run_pipeline(&cfg, &inputs, Stage::All, &out, None).unwrap();
        assert!(out.join("correspondence.txt").exists());
        assert!(out.join("b_embedding.txt").exists());
        let map = crate::correspond::CorrespondenceMap::load(&out.join("correspondence.txt"))
            .unwrap();
        // Identical shapes: self-correspondence should be near-exact.
        let exact = map
            .target
            .iter()
            .enumerate()
            .filter(|&(i, &t)| i == t)
            .count();
        assert!(
            exact as f64 >= 0.9 * map.target.len() as f64,
            "only {exact}/{} exact matches on identical cubes",
            map.target.len()
        );
    }

    #[test]
    fn stage_parsing_and_bad_stage() {
        assert_eq!("all".parse::<Stage>().unwrap(), Stage::All);
        assert_eq!("gsc".parse::<Stage>().unwrap(), Stage::Gsc);
        assert!(matches!(
            "fuse".parse::<Stage>(),
            Err(Error::Validation { field, .. }) if field == "stage"
        ));
    }

    #[test]
    fn manifest_custom_path() {
        let dir = tempfile::tempdir().unwrap();
        let mesh_path = write_mesh(dir.path(), "cube.ply", &synth::cube(1.0));
        let out = dir.path().join("out");
        let mpath = dir.path().join("custom_manifest.txt");
        let cfg = small_config();
        let inputs = PipelineInputs { mesh: mesh_path, mesh_b: None };
        run_pipeline(&cfg, &inputs, Stage::Voxelize, &out, Some(&mpath)).unwrap();
        assert!(mpath.exists());
        assert!(!out.join("manifest.txt").exists());
        let text = std::fs::read_to_string(&mpath).unwrap();
        assert!(text.contains("input mesh"));
        assert!(text.contains("resolution=32"));
    }
}

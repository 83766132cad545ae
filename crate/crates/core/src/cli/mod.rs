//! End-to-end runs and parameter sweeps with CSV, SVG and JSON artifacts.

pub mod args;
pub mod svg;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{self, DatasetKind, DatasetSpec};
use crate::dissim::DissimilarityMatrix;
use crate::embed::{self, Embedding, MdsConfig, Point2};
use crate::error::{Error, Result};
use crate::local::{self, OuterMode, PointCloud, StarOptions};
use crate::merge::{self, DisconnectPolicy, TriangleCensus};
use crate::mscheme::{MScheme, SchemeFamily};

/// Largest embedded size for which the completed metric is re-validated
/// with the full O(n^3) triangle scan.
pub const DEFAULT_VALIDATE_LIMIT: usize = 1500;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub dataset: DatasetSpec,
    pub k: usize,
    pub scheme: MScheme,
    pub subtract_rho: bool,
    pub outer: OuterMode,
    pub on_disconnect: DisconnectPolicy,
    pub mds: MdsConfig,
    pub out: PathBuf,
    pub validate_limit: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::new(DatasetKind::SwissRoll, 1000),
            k: 15,
            scheme: MScheme::Min,
            subtract_rho: false,
            outer: OuterMode::default(),
            on_disconnect: DisconnectPolicy::Error,
            mds: MdsConfig::default(),
            out: PathBuf::from("out"),
            validate_limit: DEFAULT_VALIDATE_LIMIT,
        }
    }
}

impl PipelineConfig {
    pub fn star_options(&self) -> StarOptions {
        StarOptions {
            subtract_rho: self.subtract_rho,
            outer: self.outer,
            ..StarOptions::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        self.dataset.validate()?;
        self.scheme.validate()?;
        self.star_options().validate()?;
        self.mds.validate()?;
        if let DisconnectPolicy::Cap { factor } = self.on_disconnect {
            if !(factor.is_finite() && factor > 0.0) {
                return Err(Error::Config(format!("cap factor {factor} must be positive")));
            }
        }
        Ok(())
    }

    /// Reads a TOML file; missing keys take their defaults.
    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub coords: PathBuf,
    pub svg: PathBuf,
    pub report: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub n_points: usize,
    /// Points that made it into the embedding (all of them unless the
    /// largest-component policy dropped some).
    pub n_embedded: usize,
    pub component_sizes: Vec<usize>,
    pub timings: Vec<StageTiming>,
    pub star_edges: usize,
    pub multigraph_pairs: usize,
    pub merged_edges: usize,
    /// Two-edge paths in the merged graph whose closing edge is longer
    /// than the path, before metric completion.
    pub violations_before: TriangleCensus,
    /// Triangle violations of the geodesic metric; `None` when the
    /// embedded size exceeds `validate_limit`.
    pub violations_after: Option<usize>,
    pub final_stress: f64,
    pub iterations_used: usize,
    pub stress_history: Vec<f64>,
    pub outputs: Option<OutputPaths>,
}

/// Everything a run computes, before anything is written.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub points: PointCloud,
    /// Input index of each embedded row.
    pub vertices: Vec<usize>,
    pub geodesic: DissimilarityMatrix,
    pub initial: Vec<Point2>,
    pub embedding: Embedding,
    pub report: RunReport,
}

impl PipelineOutput {
    pub fn coords_csv(&self) -> String {
        embed::coords_to_csv(&self.embedding.coords, Some(&self.vertices))
    }

    /// Intrinsic parameter of each embedded row.
    pub fn embedded_param(&self) -> Option<Vec<f64>> {
        self.points
            .intrinsic_param()
            .map(|p| self.vertices.iter().map(|&v| p[v]).collect())
    }

    pub fn svg(&self) -> String {
        let title = format!("{} / {} / k={}", self.report.config.dataset.kind, self.report.config.scheme, self.report.config.k);
        svg::scatter(&self.embedding.coords, self.embedded_param().as_deref(), &title)
    }
}

struct Clock {
    timings: Vec<StageTiming>,
    last: Instant,
}

impl Clock {
    fn new() -> Self {
        Self {
            timings: Vec::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: (now - self.last).as_secs_f64(),
        });
        log::debug!("{stage}: {:.3}s", (now - self.last).as_secs_f64());
        self.last = now;
    }
}

/// Runs the pipeline on an already loaded point cloud without writing files.
pub fn execute_on(config: &PipelineConfig, points: PointCloud) -> Result<PipelineOutput> {
    config.validate()?;
    let mut clock = Clock::new();
    let neighbors = local::knn(&points, config.k)?;
    clock.lap("knn");
    let opts = config.star_options();
    let stars = neighbors
        .par_iter()
        .map(|nl| local::build_star(nl, &opts, &points))
        .collect::<Result<Vec<_>>>()?;
    clock.lap("stars");
    let star_edges = stars.iter().map(|s| s.edge_count()).sum();
    let multigraph = merge::assemble(&stars, points.n())?;
    clock.lap("assemble");
    let hazy = merge::aggregate(&multigraph, &config.scheme);
    clock.lap("aggregate");
    let violations_before = hazy.triangle_violations();
    clock.lap("census");
    let geo = merge::geodesics(&hazy, config.on_disconnect)?;
    clock.lap("geodesics");
    let violations_after = (geo.vertices.len() <= config.validate_limit).then(|| geo.distances.validate().violations.len());
    clock.lap("validate");
    let initial = embed::classical_mds(&geo.distances, &config.mds)?;
    clock.lap("classical_mds");
    let embedding = embed::smacof(&geo.distances, &initial, &config.mds)?;
    clock.lap("smacof");

    let report = RunReport {
        config: config.clone(),
        n_points: points.n(),
        n_embedded: geo.vertices.len(),
        component_sizes: geo.component_sizes.clone(),
        timings: clock.timings,
        star_edges,
        multigraph_pairs: multigraph.pair_count(),
        merged_edges: hazy.edge_count(),
        violations_before,
        violations_after,
        final_stress: embedding.stress,
        iterations_used: embedding.iterations_used,
        stress_history: embedding.stress_history.clone(),
        outputs: None,
    };
    Ok(PipelineOutput {
        points,
        vertices: geo.vertices,
        geodesic: geo.distances,
        initial,
        embedding,
        report,
    })
}

/// Generates or loads the dataset and runs the pipeline in memory.
pub fn execute(config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let start = Instant::now();
    let points = datasets::generate(&config.dataset)?;
    let generated = start.elapsed().as_secs_f64();
    let mut out = execute_on(config, points)?;
    out.report.timings.insert(
        0,
        StageTiming {
            stage: "dataset".into(),
            seconds: generated,
        },
    );
    Ok(out)
}

/// [`execute`] and write `coords.csv`, `plot.svg` and `report.json` into
/// `config.out`.
pub fn run(config: &PipelineConfig) -> Result<RunReport> {
    let mut out = execute(config)?;
    let start = Instant::now();
    fs::create_dir_all(&config.out)?;
    let paths = OutputPaths {
        coords: config.out.join("coords.csv"),
        svg: config.out.join("plot.svg"),
        report: config.out.join("report.json"),
    };
    fs::write(&paths.coords, out.coords_csv())?;
    fs::write(&paths.svg, out.svg())?;
    out.report.timings.push(StageTiming {
        stage: "write".into(),
        seconds: start.elapsed().as_secs_f64(),
    });
    out.report.outputs = Some(paths.clone());
    fs::write(&paths.report, serde_json::to_string_pretty(&out.report)?)?;
    Ok(out.report)
}

/// Grid of a sweep: one row per scheme family, one column per parameter.
/// Families without a parameter get a single cell in the `1.0` column (or
/// the first column when `1.0` is not in the grid).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub schemes: Vec<SchemeFamily>,
    pub params: Vec<f64>,
    /// Cells run concurrently; `0` means one per available core.
    pub workers: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            schemes: vec![SchemeFamily::Mv, SchemeFamily::Mpi, SchemeFamily::Mw, SchemeFamily::H],
            params: vec![0.01, 0.25, 0.5, 0.75, 1.0, 2.0, 5.0, 10.0],
            workers: 0,
        }
    }
}

impl SweepSpec {
    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::Config("sweep needs at least one scheme".into()));
        }
        if self.params.is_empty() {
            return Err(Error::Config("sweep needs at least one parameter".into()));
        }
        Ok(())
    }

    /// `(row, column, family, parameter)` of every cell, row-major.
    pub fn cells(&self) -> Vec<(usize, usize, SchemeFamily, Option<f64>)> {
        let fixed_col = self.params.iter().position(|&p| p == 1.0).unwrap_or(0);
        let mut cells = Vec::new();
        for (row, &family) in self.schemes.iter().enumerate() {
            if family.takes_parameter() {
                for (col, &p) in self.params.iter().enumerate() {
                    cells.push((row, col, family, Some(p)));
                }
            } else {
                cells.push((row, fixed_col, family, None));
            }
        }
        cells
    }
}

fn family_code(f: SchemeFamily) -> &'static str {
    match f {
        SchemeFamily::Min => "min",
        SchemeFamily::Ext => "ext",
        SchemeFamily::Mv => "mv",
        SchemeFamily::Mpi => "mpi",
        SchemeFamily::Mw => "mw",
        SchemeFamily::H => "h",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub row: usize,
    pub column: usize,
    pub family: SchemeFamily,
    pub param: Option<f64>,
    pub dir: PathBuf,
    pub report: Option<RunReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub spec: SweepSpec,
    pub cells: Vec<SweepCell>,
    pub gallery_markdown: PathBuf,
    pub gallery_html: PathBuf,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }
}

/// One run per grid cell under `base.out/<family>_<param>/`, plus
/// `gallery.md`, `index.html` and `sweep.json` in `base.out`. A failing cell
/// is recorded and the sweep carries on.
pub fn sweep(base: &PipelineConfig, spec: &SweepSpec) -> Result<SweepReport> {
    spec.validate()?;
    base.validate()?;
    fs::create_dir_all(&base.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let cells: Vec<SweepCell> = pool.install(|| {
        spec.cells()
            .into_par_iter()
            .map(|(row, column, family, param)| {
                let name = match param {
                    Some(p) => format!("{}_{p}", family_code(family)),
                    None => family_code(family).to_string(),
                };
                let dir = base.out.join(&name);
                let outcome = family.instantiate(param.unwrap_or(1.0)).and_then(|scheme| {
                    let cfg = PipelineConfig {
                        scheme,
                        out: dir.clone(),
                        ..base.clone()
                    };
                    run(&cfg)
                });
                if let Err(e) = &outcome {
                    log::warn!("sweep cell {name} failed: {e}");
                }
                let (report, error) = match outcome {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                SweepCell {
                    row,
                    column,
                    family,
                    param,
                    dir,
                    report,
                    error,
                }
            })
            .collect()
    });

    let report = SweepReport {
        spec: spec.clone(),
        gallery_markdown: base.out.join("gallery.md"),
        gallery_html: base.out.join("index.html"),
        cells,
    };
    fs::write(&report.gallery_markdown, gallery_markdown(&report, &base.out))?;
    fs::write(&report.gallery_html, gallery_html(&report, &base.out))?;
    fs::write(base.out.join("sweep.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

fn relative_svg(cell: &SweepCell, root: &Path) -> String {
    let dir = cell.dir.strip_prefix(root).unwrap_or(&cell.dir);
    dir.join("plot.svg").to_string_lossy().replace('\\', "/")
}

fn cell_grid(report: &SweepReport) -> Vec<Vec<Option<&SweepCell>>> {
    let mut grid = vec![vec![None; report.spec.params.len()]; report.spec.schemes.len()];
    for c in &report.cells {
        grid[c.row][c.column] = Some(c);
    }
    grid
}

fn cell_caption(c: &SweepCell) -> String {
    match c.param {
        Some(p) => format!("{} {p}", c.family.label()),
        None => c.family.label().to_string(),
    }
}

fn gallery_markdown(report: &SweepReport, root: &Path) -> String {
    let mut s = String::from("| scheme |");
    for p in &report.spec.params {
        write!(s, " {p} |").unwrap();
    }
    s.push_str("\n|---|");
    s.push_str(&"---|".repeat(report.spec.params.len()));
    s.push('\n');
    for (row, cells) in cell_grid(report).iter().enumerate() {
        write!(s, "| {} |", report.spec.schemes[row].label()).unwrap();
        for c in cells {
            match c {
                None => s.push_str(" |"),
                Some(c) if c.error.is_some() => {
                    write!(s, " failed: {} |", c.error.as_deref().unwrap_or("").replace('|', "/")).unwrap()
                }
                Some(c) => write!(s, " ![{}]({}) |", cell_caption(c), relative_svg(c, root)).unwrap(),
            }
        }
        s.push('\n');
    }
    s
}

fn gallery_html(report: &SweepReport, root: &Path) -> String {
    let mut s = String::from("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>sweep</title>\n");
    s.push_str("<style>td{text-align:center;vertical-align:top}img{width:200px}</style></head><body>\n<table>\n<tr><th>scheme</th>");
    for p in &report.spec.params {
        write!(s, "<th>{p}</th>").unwrap();
    }
    s.push_str("</tr>\n");
    for (row, cells) in cell_grid(report).iter().enumerate() {
        write!(s, "<tr><th>{}</th>", svg::escape(report.spec.schemes[row].label())).unwrap();
        for c in cells {
            match c {
                None => s.push_str("<td></td>"),
                Some(c) if c.error.is_some() => {
                    write!(s, "<td>failed: {}</td>", svg::escape(c.error.as_deref().unwrap_or(""))).unwrap()
                }
                Some(c) => write!(
                    s,
                    "<td><img src=\"{}\" alt=\"{}\"><br>{}</td>",
                    svg::escape(&relative_svg(c, root)),
                    svg::escape(&cell_caption(c)),
                    svg::escape(&cell_caption(c))
                )
                .unwrap(),
            }
        }
        s.push_str("</tr>\n");
    }
    s.push_str("</table>\n</body></html>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: DatasetKind, n: usize, out: &Path) -> PipelineConfig {
        PipelineConfig {
            dataset: DatasetSpec::new(kind, n).with_seed(1),
            k: 8,
            out: out.to_path_buf(),
            ..Default::default()
        }
    }

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!(c.k, 15);
        assert!(!c.subtract_rho);
        assert_eq!(c.outer, OuterMode::Chain { a: 1.0 });
        assert_eq!(c.on_disconnect, DisconnectPolicy::Error);
        c.validate().unwrap();
    }

    #[test]
    fn k_zero_is_rejected() {
        let c = PipelineConfig {
            k: 0,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        assert!(execute(&c).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = PipelineConfig::default();
        c.scheme = "mw:2".parse().unwrap();
        c.on_disconnect = DisconnectPolicy::Cap { factor: 2.5 };
        c.outer = OuterMode::Ambient;
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<PipelineConfig>(&text).unwrap(), c);
        let partial: PipelineConfig = toml::from_str("k = 7\nscheme = \"h\"\n").unwrap();
        assert_eq!((partial.k, partial.scheme), (7, MScheme::Hyperbolic));
        assert_eq!(partial.dataset, PipelineConfig::default().dataset);
    }

    #[test]
    fn two_points() {
        let pts = PointCloud::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let cfg = PipelineConfig {
            k: 1,
            ..Default::default()
        };
        let out = execute_on(&cfg, pts).unwrap();
        let c = &out.embedding.coords;
        let d = ((c[0][0] - c[1][0]).powi(2) + (c[0][1] - c[1][1]).powi(2)).sqrt();
        // the single spoke has normalized weight 1
        assert!((d - 1.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(DatasetKind::Torus, 150, dir.path());
        let report = run(&cfg).unwrap();
        let paths = report.outputs.clone().unwrap();
        for p in [&paths.coords, &paths.svg, &paths.report] {
            assert!(p.exists(), "{}", p.display());
        }
        let csv = fs::read_to_string(&paths.coords).unwrap();
        assert!(csv.starts_with("index,x,y\n"));
        assert_eq!(csv.lines().count(), 151);
        let back: RunReport = serde_json::from_str(&fs::read_to_string(&paths.report).unwrap()).unwrap();
        assert_eq!(back.stress_history, report.stress_history);
        assert_eq!(report.violations_after, Some(0));
        for stage in ["dataset", "knn", "stars", "assemble", "aggregate", "geodesics", "classical_mds", "smacof", "write"] {
            assert!(report.timings.iter().any(|t| t.stage == stage), "{stage}");
        }
        assert!(report.stress_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn disconnected_reports_component_sizes() {
        let pts = PointCloud::from_rows(&[
            vec![0.0],
            vec![1.0],
            vec![2.0],
            vec![100.0],
            vec![101.0],
        ])
        .unwrap();
        let cfg = PipelineConfig {
            k: 1,
            ..Default::default()
        };
        match execute_on(&cfg, pts.clone()) {
            Err(Error::Disconnected { sizes }) => assert_eq!(sizes, vec![3, 2]),
            other => panic!("{other:?}"),
        }
        let cfg = PipelineConfig {
            k: 1,
            on_disconnect: DisconnectPolicy::LargestComponent,
            ..Default::default()
        };
        let out = execute_on(&cfg, pts).unwrap();
        assert_eq!(out.vertices, vec![0, 1, 2]);
        assert!(out.coords_csv().lines().nth(3).unwrap().starts_with("2,"));
    }

    #[test]
    fn sweep_layout_and_failures() {
        let spec = SweepSpec {
            schemes: vec![SchemeFamily::Mv, SchemeFamily::H, SchemeFamily::Mw],
            params: vec![0.5, 1.0, -2.0],
            workers: 2,
        };
        let cells = spec.cells();
        assert_eq!(cells.len(), 3 + 1 + 3);
        assert_eq!(cells[3], (1, 1, SchemeFamily::H, None));

        let dir = tempfile::tempdir().unwrap();
        let base = small(DatasetKind::TwoMoons, 60, dir.path());
        let base = PipelineConfig {
            on_disconnect: DisconnectPolicy::Cap { factor: 3.0 },
            ..base
        };
        let report = sweep(&base, &spec).unwrap();
        assert_eq!(report.cells.len(), 7);
        // negative parameters are rejected per cell, the rest run
        assert_eq!(report.failures(), 2);
        let md = fs::read_to_string(&report.gallery_markdown).unwrap();
        assert!(md.contains("| H | | ![H](h/plot.svg) | |"), "{md}");
        assert!(md.contains("mv_0.5/plot.svg"));
        assert!(fs::read_to_string(&report.gallery_html).unwrap().contains("<img src=\"mw_1/plot.svg\""));
        assert!(dir.path().join("sweep.json").exists());
    }

    #[test]
    fn sweep_rejects_empty_grids() {
        let base = PipelineConfig::default();
        for spec in [
            SweepSpec {
                schemes: vec![],
                ..Default::default()
            },
            SweepSpec {
                params: vec![],
                ..Default::default()
            },
        ] {
            assert!(sweep(&base, &spec).is_err());
        }
    }

    #[test]
    fn five_truncation_cells() {
        let spec = SweepSpec {
            schemes: vec![SchemeFamily::Mv],
            params: vec![0.01, 0.25, 0.5, 0.75, 1.0],
            workers: 1,
        };
        assert_eq!(spec.cells().len(), 5);
        let spec = SweepSpec {
            schemes: vec![SchemeFamily::Mw, SchemeFamily::Mpi],
            params: vec![2.0, 5.0, 10.0],
            workers: 1,
        };
        assert_eq!(spec.cells().len(), 6);
    }
}

//! Seeded toy manifolds and CSV point clouds.
//!
//! All generators draw from `ChaCha8Rng::seed_from_u64(seed)`. The stream is
//! consumed point by point: first the point's parameters in the order listed
//! on each generator, then one standard normal per ambient coordinate for
//! the noise (drawn even when `noise == 0`, so the parameter stream does not
//! depend on the noise level). The swiss roll with a hole redraws `(t, h)`
//! pairs until one falls outside the hole, before drawing that point's noise.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local::PointCloud;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    SwissRoll,
    SwissRollHole,
    Torus,
    TwoMoons,
    Mobius,
    Csv,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::SwissRoll => "swiss_roll",
            DatasetKind::SwissRollHole => "swiss_roll_hole",
            DatasetKind::Torus => "torus",
            DatasetKind::TwoMoons => "two_moons",
            DatasetKind::Mobius => "mobius",
            DatasetKind::Csv => "csv",
        })
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "swiss_roll" => DatasetKind::SwissRoll,
            "swiss_roll_hole" => DatasetKind::SwissRollHole,
            "torus" => DatasetKind::Torus,
            "two_moons" | "moons" => DatasetKind::TwoMoons,
            "mobius" => DatasetKind::Mobius,
            "csv" => DatasetKind::Csv,
            other => return Err(Error::Parse(format!("unknown dataset {other:?}"))),
        })
    }
}

/// Constants of the parametrizations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapeParams {
    /// Range of the roll parameter `t`.
    pub swiss_t: (f64, f64),
    pub swiss_height: f64,
    /// The hole is `hole_t x hole_h` in `(t, h)` coordinates.
    pub hole_t: (f64, f64),
    pub hole_h: (f64, f64),
    pub torus_major: f64,
    pub torus_minor: f64,
    /// Centre of the second moon.
    pub moons_offset: (f64, f64),
    pub mobius_width: f64,
}

impl Default for ShapeParams {
    fn default() -> Self {
        Self {
            swiss_t: (1.5 * PI, 4.5 * PI),
            swiss_height: 21.0,
            hole_t: (2.7 * PI, 3.3 * PI),
            hole_h: (8.0, 13.0),
            torus_major: 2.0,
            torus_minor: 1.0,
            moons_offset: (1.0, 0.5),
            mobius_width: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub n: usize,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub shape: ShapeParams,
}

impl DatasetSpec {
    pub fn new(kind: DatasetKind, n: usize) -> Self {
        Self {
            kind,
            n,
            noise: 0.0,
            seed: 0,
            path: None,
            shape: ShapeParams::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == DatasetKind::Csv {
            if self.path.is_none() {
                return Err(Error::Config("csv dataset needs a path".into()));
            }
            return Ok(());
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("dataset size n must be at least 1".into()));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise {} must be >= 0", self.noise)));
        }
        Ok(())
    }
}

/// Produces the point cloud described by `spec`.
pub fn generate(spec: &DatasetSpec) -> Result<PointCloud> {
    spec.validate()?;
    let s = &spec.shape;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut coords = Vec::with_capacity(spec.n * 3);
    let mut param = Vec::with_capacity(spec.n);
    let dim = match spec.kind {
        DatasetKind::Csv => {
            let path = spec.path.as_ref().expect("validated");
            return load_csv(path);
        }
        DatasetKind::TwoMoons => 2,
        _ => 3,
    };
    for i in 0..spec.n {
        let (p, label): ([f64; 3], f64) = match spec.kind {
            // t, h
            DatasetKind::SwissRoll | DatasetKind::SwissRollHole => {
                let (t, h) = loop {
                    let t = rng.random_range(s.swiss_t.0..s.swiss_t.1);
                    let h = rng.random_range(0.0..s.swiss_height);
                    let in_hole = spec.kind == DatasetKind::SwissRollHole
                        && (s.hole_t.0..=s.hole_t.1).contains(&t)
                        && (s.hole_h.0..=s.hole_h.1).contains(&h);
                    if !in_hole {
                        break (t, h);
                    }
                };
                ([t * t.cos(), h, t * t.sin()], t)
            }
            // u, v
            DatasetKind::Torus => {
                let u = rng.random_range(0.0..2.0 * PI);
                let v = rng.random_range(0.0..2.0 * PI);
                let ring = s.torus_major + s.torus_minor * v.cos();
                ([ring * u.cos(), ring * u.sin(), s.torus_minor * v.sin()], u)
            }
            // t; the moon alternates with the point index
            DatasetKind::TwoMoons => {
                let t = rng.random_range(0.0..=PI);
                let label = (i % 2) as f64;
                let p = if i % 2 == 0 {
                    [t.cos(), t.sin(), 0.0]
                } else {
                    [s.moons_offset.0 - t.cos(), s.moons_offset.1 - t.sin(), 0.0]
                };
                (p, label)
            }
            // t, w
            DatasetKind::Mobius => {
                let t = rng.random_range(0.0..2.0 * PI);
                let w = rng.random_range(-0.5..=0.5) * s.mobius_width;
                let r = 1.0 + 0.5 * w * (0.5 * t).cos();
                ([r * t.cos(), r * t.sin(), 0.5 * w * (0.5 * t).sin()], t)
            }
            DatasetKind::Csv => unreachable!(),
        };
        for &c in &p[..dim] {
            let z: f64 = rng.sample(StandardNormal);
            coords.push(c + spec.noise * z);
        }
        param.push(label);
    }
    PointCloud::new(dim, coords, Some(param))
}

/// Reads comma-separated numeric rows. A first row with any non-numeric
/// field is a header; a header whose last column is `param` turns that
/// column into the intrinsic parameter.
pub fn load_csv(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| err(e.to_string()))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut has_param = false;
    let mut width = None;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| err(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) => {
                let w = *width.get_or_insert(values.len());
                if values.len() != w {
                    return Err(err(format!("row {} has {} fields, expected {w}", line + 1, values.len())));
                }
                rows.push(values);
            }
            Err(_) if line == 0 => {
                has_param = record.iter().next_back().is_some_and(|h| h.eq_ignore_ascii_case("param"));
                width = Some(record.len());
            }
            Err(_) => {
                let bad = record.iter().find(|f| f.parse::<f64>().is_err()).unwrap_or_default();
                return Err(err(format!("row {}: non-numeric field {bad:?}", line + 1)));
            }
        }
    }
    if rows.is_empty() {
        return Err(err("no data rows".into()));
    }
    let w = rows[0].len();
    let dim = if has_param { w - 1 } else { w };
    if dim == 0 {
        return Err(err("no coordinate columns".into()));
    }
    let param = has_param.then(|| rows.iter().map(|r| r[dim]).collect());
    let coords = rows.iter().flat_map(|r| r[..dim].iter().copied()).collect();
    PointCloud::new(dim, coords, param).map_err(|e| err(e.to_string()))
}

/// Writes `x0,...,x{d-1}[,param]` with a header line.
pub fn write_csv(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(|e| Error::Csv {
        path: path.as_ref().to_path_buf(),
        message: e.to_string(),
    })?;
    let io = |e: csv::Error| Error::Csv {
        path: path.as_ref().to_path_buf(),
        message: e.to_string(),
    };
    let mut header: Vec<String> = (0..cloud.dim()).map(|d| format!("x{d}")).collect();
    if cloud.intrinsic_param().is_some() {
        header.push("param".into());
    }
    w.write_record(&header).map_err(io)?;
    for i in 0..cloud.n() {
        let mut row: Vec<String> = cloud.point(i).iter().map(|v| v.to_string()).collect();
        if let Some(p) = cloud.intrinsic_param() {
            row.push(p[i].to_string());
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

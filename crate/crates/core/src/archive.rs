//! Behavior-performance map: a fixed grid over the safety-augmented
//! descriptor space holding the best elite found per cell, and its on-disk
//! text format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GENOTYPE_LEN: usize = 24;
/// Four limb duty factors plus one safety dimension.
pub const DESCRIPTOR_DIMS: usize = 5;
pub const DEFAULT_RESOLUTION: [usize; DESCRIPTOR_DIMS] = [5; DESCRIPTOR_DIMS];

const FORMAT_TAG: &str = "sitemap-archive v1";

/// Controller parameters in `[0,1]^G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genotype(Vec<f64>);

impl Genotype {
    pub fn new(params: Vec<f64>) -> Result<Self> {
        if let Some(v) = params.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!("gene {v} outside [0,1]")));
        }
        Ok(Genotype(params))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Limb duty factors and the normalized contact-force dimension, all in `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub duty: [f64; 4],
    pub safety_dim: f64,
}

impl Descriptor {
    pub fn new(duty: [f64; 4], safety_dim: f64) -> Result<Self> {
        let d = Descriptor { duty, safety_dim };
        if d.as_array().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput(format!("descriptor {:?} outside [0,1]", d.as_array())));
        }
        Ok(d)
    }

    /// Builds the descriptor from raw measurements; the force is scaled by
    /// `force_norm_max` and clamped into `[0,1]`.
    pub fn from_measurements(duty: [f64; 4], force_sum: f64, force_norm_max: f64) -> Result<Self> {
        let duty = duty.map(|d| d.clamp(0.0, 1.0));
        let s = if force_norm_max > 0.0 {
            (force_sum / force_norm_max).clamp(0.0, 1.0)
        } else {
            0.0
        };
        Descriptor::new(duty, s)
    }

    pub fn as_array(&self) -> [f64; DESCRIPTOR_DIMS] {
        [self.duty[0], self.duty[1], self.duty[2], self.duty[3], self.safety_dim]
    }

    pub fn from_array(a: [f64; DESCRIPTOR_DIMS]) -> Result<Self> {
        Descriptor::new([a[0], a[1], a[2], a[3]], a[4])
    }
}

/// Grid coordinates of a cell.
pub type CellCoords = [usize; DESCRIPTOR_DIMS];

/// `index_k = min(floor(d_k · res_k), res_k − 1)`
pub fn discretize(d: &Descriptor, resolution: &[usize; DESCRIPTOR_DIMS]) -> CellCoords {
    let a = d.as_array();
    let mut out = [0; DESCRIPTOR_DIMS];
    for k in 0..DESCRIPTOR_DIMS {
        let r = resolution[k];
        out[k] = ((a[k] * r as f64).floor() as usize).min(r - 1);
    }
    out
}

/// Row-major linear index, first dimension most significant.
pub fn linear_index(coords: &CellCoords, resolution: &[usize; DESCRIPTOR_DIMS]) -> usize {
    coords.iter().zip(resolution).fold(0, |acc, (&c, &r)| acc * r + c)
}

pub fn coords_of(mut index: usize, resolution: &[usize; DESCRIPTOR_DIMS]) -> CellCoords {
    let mut out = [0; DESCRIPTOR_DIMS];
    for k in (0..DESCRIPTOR_DIMS).rev() {
        out[k] = index % resolution[k];
        index /= resolution[k];
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elite {
    pub genotype: Genotype,
    pub descriptor: Descriptor,
    /// Crawling speed on the intact robot, m/s. The performance prior.
    pub performance: f64,
    /// Raw safety measurements on the intact robot (summed contact force, N).
    pub safety_values: Vec<f64>,
}

impl Elite {
    pub fn validate(&self) -> Result<()> {
        Descriptor::new(self.descriptor.duty, self.descriptor.safety_dim)?;
        if !self.performance.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite performance {}", self.performance)));
        }
        if let Some(v) = self.safety_values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidInput(format!("invalid safety value {v}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveMeta {
    pub genotype_len: usize,
    /// Scale that maps the raw force sum onto the safety descriptor dimension.
    pub force_norm_max: f64,
    pub seed: u64,
    pub budget: u64,
    /// Identifies the simulator configuration the map was generated with.
    pub sim_version: String,
    /// Default safety threshold on the raw force sum, N, derived from the initial batch.
    pub safety_threshold: Option<f64>,
}

impl Default for ArchiveMeta {
    fn default() -> Self {
        ArchiveMeta {
            genotype_len: GENOTYPE_LEN,
            force_norm_max: 1.0,
            seed: 0,
            budget: 0,
            sim_version: String::from("unknown"),
            safety_threshold: None,
        }
    }
}

/// At most one elite per grid cell; every elite's descriptor discretizes to its cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    resolution: [usize; DESCRIPTOR_DIMS],
    cells: BTreeMap<usize, Elite>,
    pub meta: ArchiveMeta,
}

impl Archive {
    pub fn new(resolution: [usize; DESCRIPTOR_DIMS], meta: ArchiveMeta) -> Result<Self> {
        if resolution.contains(&0) {
            return Err(Error::InvalidInput("resolution entries must be ≥ 1".into()));
        }
        Ok(Archive {
            resolution,
            cells: BTreeMap::new(),
            meta,
        })
    }

    pub fn resolution(&self) -> &[usize; DESCRIPTOR_DIMS] {
        &self.resolution
    }

    pub fn capacity(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_of(&self, d: &Descriptor) -> usize {
        linear_index(&discretize(d, &self.resolution), &self.resolution)
    }

    pub fn get(&self, cell: usize) -> Option<&Elite> {
        self.cells.get(&cell)
    }

    /// Filled cells in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Elite)> {
        self.cells.iter().map(|(&k, v)| (k, v))
    }

    pub fn best(&self) -> Option<(usize, &Elite)> {
        // Lowest index wins ties.
        self.iter()
            .fold(None, |best: Option<(usize, &Elite)>, (k, e)| match best {
                Some((_, b)) if b.performance >= e.performance => best,
                _ => Some((k, e)),
            })
    }

    /// Stores `candidate` if its cell is empty or it strictly beats the occupant.
    pub fn insert_if_better(&mut self, candidate: Elite) -> Result<bool> {
        candidate.validate()?;
        let cell = self.cell_of(&candidate.descriptor);
        match self.cells.get(&cell) {
            Some(occupant) if candidate.performance <= occupant.performance => Ok(false),
            _ => {
                self.cells.insert(cell, candidate);
                Ok(true)
            }
        }
    }

    fn check_invariants(&self) -> Result<()> {
        for (&cell, e) in &self.cells {
            e.validate()?;
            if self.cell_of(&e.descriptor) != cell {
                return Err(Error::InvalidInput(format!(
                    "elite stored in cell {cell} discretizes to {}",
                    self.cell_of(&e.descriptor)
                )));
            }
            if e.genotype.len() != self.meta.genotype_len {
                return Err(Error::InvalidInput(format!(
                    "elite in cell {cell} has {} genes, expected {}",
                    e.genotype.len(),
                    self.meta.genotype_len
                )));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> Result<String> {
        self.check_invariants()?;
        let m = &self.meta;
        let res = self.resolution.map(|r| r.to_string()).join(",");
        let mut out = format!(
            "{FORMAT_TAG}; dims={DESCRIPTOR_DIMS}; res={res}; G={}; force_norm_max={}; seed={}; budget={}; sim={}; count={}",
            m.genotype_len,
            m.force_norm_max,
            m.seed,
            m.budget,
            m.sim_version,
            self.cells.len()
        );
        if let Some(t) = m.safety_threshold {
            write!(out, "; threshold={t}").unwrap();
        }
        out.push('\n');
        for (cell, e) in &self.cells {
            let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
            writeln!(
                out,
                "{cell} | {} | {} | {} | {}",
                join(&e.descriptor.as_array()),
                e.performance,
                join(&e.safety_values),
                join(e.genotype.as_slice())
            )
            .unwrap();
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = self.to_text()?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Archive> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Archive::parse(&text, path)
    }

    /// Parses the text format; `origin` only labels error messages.
    pub fn parse(text: &str, origin: impl AsRef<Path>) -> Result<Archive> {
        let origin = origin.as_ref();
        let err = |line: usize, msg: String| Error::format(origin, line, msg);

        if !text.ends_with('\n') {
            return Err(err(text.lines().count().max(1), "truncated file (no trailing newline)".into()));
        }
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let mut fields = header.split(';').map(str::trim);
        match fields.next() {
            Some(FORMAT_TAG) => {}
            Some(tag) if tag.starts_with("sitemap-archive") => {
                return Err(err(1, format!("unsupported version `{tag}`, expected `{FORMAT_TAG}`")))
            }
            _ => return Err(err(1, "not a sitemap archive".into())),
        }

        let mut dims = None;
        let mut resolution = None;
        let mut meta = ArchiveMeta::default();
        let mut have_g = false;
        let mut have_norm = false;
        let mut have_seed = false;
        let mut count = None;
        for field in fields.filter(|f| !f.is_empty()) {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| err(1, format!("malformed header field `{field}`")))?;
            let bad = |what: &str| err(1, format!("invalid {what} `{value}`"));
            match key.trim() {
                "dims" => dims = Some(value.parse::<usize>().map_err(|_| bad("dims"))?),
                "res" => {
                    let v: Vec<usize> = value
                        .split(',')
                        .map(|s| s.trim().parse())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("res"))?;
                    let arr: [usize; DESCRIPTOR_DIMS] = v.try_into().map_err(|_| bad("res"))?;
                    if arr.contains(&0) {
                        return Err(bad("res"));
                    }
                    resolution = Some(arr);
                }
                "G" => {
                    meta.genotype_len = value.parse().map_err(|_| bad("G"))?;
                    have_g = true;
                }
                "force_norm_max" => {
                    meta.force_norm_max = parse_f64(value).ok_or_else(|| bad("force_norm_max"))?;
                    have_norm = true;
                }
                "seed" => {
                    meta.seed = value.parse().map_err(|_| bad("seed"))?;
                    have_seed = true;
                }
                "budget" => meta.budget = value.parse().map_err(|_| bad("budget"))?,
                "sim" => meta.sim_version = value.to_string(),
                "count" => count = Some(value.parse::<usize>().map_err(|_| bad("count"))?),
                "threshold" => {
                    meta.safety_threshold = Some(parse_f64(value).ok_or_else(|| bad("threshold"))?)
                }
                other => return Err(err(1, format!("unknown header key `{other}`"))),
            }
        }
        if dims != Some(DESCRIPTOR_DIMS) {
            return Err(err(1, format!("expected dims={DESCRIPTOR_DIMS}")));
        }
        let resolution = resolution.ok_or_else(|| err(1, "missing res".into()))?;
        if !(have_g && have_norm && have_seed) {
            return Err(err(1, "header must define G, force_norm_max and seed".into()));
        }

        let mut archive = Archive::new(resolution, meta)?;
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('|').map(str::trim).collect();
            if parts.len() != 5 {
                return Err(err(n, format!("expected 5 `|`-separated fields, found {}", parts.len())));
            }
            let cell: usize = parts[0]
                .parse()
                .map_err(|_| err(n, format!("invalid cell index `{}`", parts[0])))?;
            let floats = |s: &str, what: &str| -> Result<Vec<f64>> {
                if s.is_empty() {
                    return Ok(Vec::new());
                }
                s.split(',')
                    .map(|x| parse_f64(x.trim()).ok_or_else(|| err(n, format!("invalid {what} value `{x}`"))))
                    .collect()
            };
            let desc = floats(parts[1], "descriptor")?;
            let desc: [f64; DESCRIPTOR_DIMS] = desc
                .try_into()
                .map_err(|_| err(n, format!("descriptor must have {DESCRIPTOR_DIMS} values")))?;
            let descriptor = Descriptor::from_array(desc).map_err(|e| err(n, e.to_string()))?;
            let performance = parse_f64(parts[2]).ok_or_else(|| err(n, format!("invalid performance `{}`", parts[2])))?;
            let safety_values = floats(parts[3], "safety")?;
            let genes = floats(parts[4], "genotype")?;
            if genes.len() != archive.meta.genotype_len {
                return Err(err(
                    n,
                    format!("genotype has {} values, expected {}", genes.len(), archive.meta.genotype_len),
                ));
            }
            let genotype = Genotype::new(genes).map_err(|e| err(n, e.to_string()))?;
            let elite = Elite {
                genotype,
                descriptor,
                performance,
                safety_values,
            };
            elite.validate().map_err(|e| err(n, e.to_string()))?;
            if cell >= archive.capacity() {
                return Err(err(n, format!("cell index {cell} out of range")));
            }
            if archive.cell_of(&descriptor) != cell {
                return Err(err(
                    n,
                    format!("descriptor discretizes to cell {}, not {cell}", archive.cell_of(&descriptor)),
                ));
            }
            if archive.cells.insert(cell, elite).is_some() {
                return Err(err(n, format!("duplicate cell {cell}")));
            }
        }
        if let Some(expected) = count {
            if archive.len() != expected {
                return Err(err(
                    text.lines().count(),
                    format!("truncated file: header announces {expected} elites, found {}", archive.len()),
                ));
            }
        }
        Ok(archive)
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

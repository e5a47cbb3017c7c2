//! Run configuration, branch/profile persistence and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::continuation::{Branch, ContinuationConfig, Termination};
use crate::error::{Error, Result};
use crate::profile::{gamma, NewtonOptions};
use crate::spectral::{CollocationGrid, WaveProfile, DEFAULT_MODES};
use crate::VERSION;

/// Environment variable overriding the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "WHITHAM_OUTPUT_DIR";

pub const CONFIG_KEYS: [&str; 13] = [
    "n_modes",
    "k",
    "epsilon0",
    "h0",
    "h_min",
    "h_max",
    "gap_threshold_rel",
    "max_steps",
    "newton_tol",
    "newton_max_iter",
    "output_dir",
    "emit_svg",
    "refine_terminal",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_modes: usize,
    pub k: usize,
    pub epsilon0: f64,
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub gap_threshold_rel: f64,
    pub max_steps: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub output_dir: PathBuf,
    pub emit_svg: bool,
    pub refine_terminal: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let cont = ContinuationConfig::default();
        Self {
            n_modes: DEFAULT_MODES,
            k: cont.k,
            epsilon0: cont.epsilon0,
            h0: cont.h0,
            h_min: cont.h_min,
            h_max: cont.h_max,
            gap_threshold_rel: cont.gap_threshold_rel,
            max_steps: cont.max_steps,
            newton_tol: cont.newton.tol,
            newton_max_iter: cont.newton.max_iter,
            output_dir: PathBuf::from("out"),
            emit_svg: true,
            refine_terminal: true,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "n_modes" => self.n_modes = parse_value(key, value)?,
            "k" => self.k = parse_value(key, value)?,
            "epsilon0" => self.epsilon0 = parse_value(key, value)?,
            "h0" => self.h0 = parse_value(key, value)?,
            "h_min" => self.h_min = parse_value(key, value)?,
            "h_max" => self.h_max = parse_value(key, value)?,
            "gap_threshold_rel" => self.gap_threshold_rel = parse_value(key, value)?,
            "max_steps" => self.max_steps = parse_value(key, value)?,
            "newton_tol" => self.newton_tol = parse_value(key, value)?,
            "newton_max_iter" => self.newton_max_iter = parse_value(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "emit_svg" => self.emit_svg = parse_value(key, value)?,
            "refine_terminal" => self.refine_terminal = parse_value(key, value)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown key {key:?}; valid keys: {}",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes < 8 {
            return Err(Error::Config("n_modes must be >= 8".into()));
        }
        if self.k < 1 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if !(self.epsilon0.is_finite() && self.epsilon0 != 0.0) {
            return Err(Error::Config("epsilon0 must be finite and nonzero".into()));
        }
        if !(self.h_min > 0.0 && self.h_min <= self.h0 && self.h0 <= self.h_max) {
            return Err(Error::Config("h0: need 0 < h_min <= h0 <= h_max".into()));
        }
        if !(self.gap_threshold_rel > 0.0 && self.gap_threshold_rel < 1.0) {
            return Err(Error::Config("gap_threshold_rel must lie in (0, 1)".into()));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::Config("newton_tol must be > 0".into()));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::Config("newton_max_iter must be >= 1".into()));
        }
        Ok(())
    }

    pub fn continuation(&self) -> ContinuationConfig {
        ContinuationConfig {
            k: self.k,
            epsilon0: self.epsilon0,
            h0: self.h0,
            h_min: self.h_min,
            h_max: self.h_max,
            gap_threshold_rel: self.gap_threshold_rel,
            max_steps: self.max_steps,
            newton: self.newton(),
        }
    }

    pub fn newton(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.newton_tol,
            max_iter: self.newton_max_iter,
        }
    }

    /// Flat `key = value` text that [`parse_config`] reads back unchanged.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n_modes = {}", self.n_modes);
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "epsilon0 = {:?}", self.epsilon0);
        let _ = writeln!(s, "h0 = {:?}", self.h0);
        let _ = writeln!(s, "h_min = {:?}", self.h_min);
        let _ = writeln!(s, "h_max = {:?}", self.h_max);
        let _ = writeln!(s, "gap_threshold_rel = {:?}", self.gap_threshold_rel);
        let _ = writeln!(s, "max_steps = {}", self.max_steps);
        let _ = writeln!(s, "newton_tol = {:?}", self.newton_tol);
        let _ = writeln!(s, "newton_max_iter = {}", self.newton_max_iter);
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(s, "emit_svg = {}", self.emit_svg);
        let _ = writeln!(s, "refine_terminal = {}", self.refine_terminal);
        s
    }
}

/// Parses flat `key = value` text (`#` starts a comment), then applies
/// `overrides` in order, then validates.
pub fn parse_config(text: &str, overrides: &[(&str, String)]) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        config.set(key.trim(), value)?;
    }
    for (key, value) in overrides {
        config.set(key, value)?;
    }
    config.validate()?;
    Ok(config)
}

pub fn read_config(path: &Path, overrides: &[(&str, String)]) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, overrides)
}

/// The output directory after applying [`OUTPUT_DIR_ENV`], if set.
pub fn resolve_output_dir(config: &RunConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => config.output_dir.clone(),
    }
}

pub const BRANCH_COLUMNS: [&str; 8] = [
    "index",
    "arclength",
    "c",
    "waveheight",
    "crest",
    "gap",
    "step",
    "newton_iters",
];

/// One row of the branch table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRow {
    pub index: usize,
    pub arclength: f64,
    pub c: f64,
    pub waveheight: f64,
    pub crest: f64,
    pub gap: f64,
    pub step: f64,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchMetadata {
    pub version: String,
    pub config: RunConfig,
    pub termination: Termination,
    /// Absolute crest-gap threshold used for termination.
    pub gap_threshold: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchRecord {
    pub rows: Vec<BranchRow>,
    pub metadata: BranchMetadata,
}

pub fn branch_rows(branch: &Branch) -> Vec<BranchRow> {
    branch
        .points
        .iter()
        .enumerate()
        .map(|(index, p)| BranchRow {
            index,
            arclength: p.arclength,
            c: p.c(),
            waveheight: p.waveheight,
            crest: p.crest(),
            gap: p.gap,
            step: p.step_used,
            newton_iters: p.newton_iters,
        })
        .collect()
}

impl BranchRecord {
    pub fn new(branch: &Branch, config: &RunConfig) -> Self {
        let rows = branch_rows(branch);
        Self {
            metadata: BranchMetadata {
                version: VERSION.to_string(),
                config: config.clone(),
                termination: branch.termination,
                gap_threshold: branch.gap_threshold,
                n_points: rows.len(),
            },
            rows,
        }
    }

    /// Writes `<stem>.csv` and `<stem>.meta.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let meta_path = dir.join(format!("{stem}.meta.json"));
        write_rows_csv(&self.rows, &csv_path)?;
        write_json(&self.metadata, &meta_path)?;
        Ok((csv_path, meta_path))
    }

    pub fn read(csv_path: &Path, meta_path: &Path) -> Result<Self> {
        Ok(Self {
            rows: read_branch_csv(csv_path)?,
            metadata: read_json(meta_path)?,
        })
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_branch_csv(branch: &Branch, path: &Path) -> Result<()> {
    if branch.points.is_empty() {
        return Err(Error::InvalidArgument("branch has no points".into()));
    }
    write_rows_csv(&branch_rows(branch), path)
}

fn write_rows_csv(rows: &[BranchRow], path: &Path) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(BRANCH_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.index.to_string(),
            fmt_f64(r.arclength),
            fmt_f64(r.c),
            fmt_f64(r.waveheight),
            fmt_f64(r.crest),
            fmt_f64(r.gap),
            fmt_f64(r.step),
            r.newton_iters.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_branch_csv(path: &Path) -> Result<Vec<BranchRow>> {
    let fmt_err = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| fmt_err(e.to_string()))?;
    let header = r.headers().map_err(|e| fmt_err(e.to_string()))?.clone();
    if header.iter().ne(BRANCH_COLUMNS) {
        return Err(fmt_err(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| fmt_err(e.to_string()))?;
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| fmt_err(format!("bad number {:?}", &rec[i])))
        };
        let u = |i: usize| -> Result<usize> {
            rec[i]
                .parse()
                .map_err(|_| fmt_err(format!("bad integer {:?}", &rec[i])))
        };
        rows.push(BranchRow {
            index: u(0)?,
            arclength: f(1)?,
            c: f(2)?,
            waveheight: f(3)?,
            crest: f(4)?,
            gap: f(5)?,
            step: f(6)?,
            newton_iters: u(7)?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMetadata {
    pub version: String,
    /// `γ(c) - φ(x_1)`.
    pub gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arclength: Option<f64>,
    pub source: String,
}

/// On-disk profile document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub n_modes: usize,
    pub c: f64,
    pub gamma: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub metadata: ProfileMetadata,
}

impl ProfileDocument {
    pub fn new(profile: &WaveProfile, grid: &CollocationGrid, source: &str) -> Result<Self> {
        grid.check_len(profile.len())?;
        Ok(Self {
            n_modes: grid.n_modes(),
            c: profile.c,
            gamma: gamma(profile.c),
            nodes: grid.nodes().to_vec(),
            values: profile.values.clone(),
            metadata: ProfileMetadata {
                version: VERSION.to_string(),
                gap: gamma(profile.c) - profile.values[0],
                gap_threshold: None,
                residual_norm: None,
                arclength: None,
                source: source.to_string(),
            },
        })
    }

    pub fn profile(&self) -> WaveProfile {
        WaveProfile::new(self.c, self.values.clone())
    }

    /// Rebuilds the grid and checks it matches the stored nodes.
    pub fn grid(&self) -> Result<CollocationGrid> {
        if self.values.len() != self.n_modes || self.nodes.len() != self.n_modes {
            return Err(Error::InvalidArgument(format!(
                "profile document: n_modes {} but {} nodes and {} values",
                self.n_modes,
                self.nodes.len(),
                self.values.len()
            )));
        }
        let grid = CollocationGrid::new(self.n_modes)?;
        if grid
            .nodes()
            .iter()
            .zip(&self.nodes)
            .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(Error::InvalidArgument(
                "stored nodes do not match the collocation grid".into(),
            ));
        }
        Ok(grid)
    }
}

pub fn write_profile_json(doc: &ProfileDocument, path: &Path) -> Result<()> {
    write_json(doc, path)
}

pub fn read_profile_json(path: &Path) -> Result<ProfileDocument> {
    read_json(path)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// What to draw.
#[derive(Debug, Clone, Copy)]
pub enum PlotData<'a> {
    /// `(c, waveheight)` pairs along a branch.
    Branch(&'a [(f64, f64)]),
    /// Profiles on a common grid, drawn over a full period.
    Profiles {
        grid: &'a CollocationGrid,
        profiles: &'a [WaveProfile],
    },
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let span = hi - lo;
    if span > 0.0 {
        (lo - 0.05 * span, hi + 0.05 * span)
    } else {
        let pad = 0.5 * lo.abs().max(1e-3);
        (lo - pad, hi + pad)
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }

    fn axes(&self, out: &mut String, xlabel: &str, ylabel: &str) {
        let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
        let _ = writeln!(
            out,
            r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        for i in 0..TICKS {
            let t = i as f64 / (TICKS - 1) as f64;
            let xv = self.x.0 + t * (self.x.1 - self.x.0);
            let px = self.px(xv);
            let _ = writeln!(
                out,
                r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" font-size="12" text-anchor="middle">{xv:.3}</text>"#,
                y0 + 5.0,
                y0 + 20.0
            );
            let yv = self.y.0 + t * (self.y.1 - self.y.0);
            let py = self.py(yv);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{yv:.3}</text>"#,
                x0 - 5.0,
                x0 - 8.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{xlabel}</text>"#,
            0.5 * (x0 + x1),
            HEIGHT - 15.0
        );
        let _ = writeln!(
            out,
            r#"<text x="20" y="{:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {:.2})">{ylabel}</text>"#,
            0.5 * (y0 + y1),
            0.5 * (y0 + y1)
        );
    }

    fn polyline(&self, out: &mut String, pts: &[(f64, f64)], color: &str) {
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", self.px(x), self.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
    }
}

/// Profile values mirrored evenly onto `[-π, π]`.
pub fn even_extension(grid: &CollocationGrid, profile: &WaveProfile) -> Vec<(f64, f64)> {
    let nodes = grid.nodes();
    let left = nodes.iter().zip(&profile.values).rev().map(|(&x, &v)| (-x, v));
    let right = nodes.iter().zip(&profile.values).map(|(&x, &v)| (x, v));
    left.chain(right).collect()
}

/// Renders a standalone SVG document; output depends only on the input data.
pub fn render_svg(data: PlotData<'_>) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    match data {
        PlotData::Branch(points) => {
            if points.is_empty() {
                return Err(Error::InvalidArgument("nothing to plot".into()));
            }
            let frame = Frame {
                x: padded_range(points.iter().map(|p| p.0)),
                y: padded_range(points.iter().map(|p| p.1)),
            };
            frame.axes(&mut out, "wavespeed c", "waveheight");
            frame.polyline(&mut out, points, COLORS[0]);
        }
        PlotData::Profiles { grid, profiles } => {
            if profiles.is_empty() {
                return Err(Error::InvalidArgument("nothing to plot".into()));
            }
            for p in profiles {
                grid.check_len(p.len())?;
            }
            let frame = Frame {
                x: (-std::f64::consts::PI, std::f64::consts::PI),
                y: padded_range(profiles.iter().flat_map(|p| p.values.iter().copied())),
            };
            frame.axes(&mut out, "x", "profile");
            for (i, p) in profiles.iter().enumerate() {
                frame.polyline(&mut out, &even_extension(grid, p), COLORS[i % COLORS.len()]);
            }
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_svg(data: PlotData<'_>, path: &Path) -> Result<()> {
    let svg = render_svg(data)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

/// Indices of `count` points spread evenly in waveheight along the branch.
pub fn select_by_waveheight(branch: &Branch, count: usize) -> Vec<usize> {
    let pts = &branch.points;
    if pts.is_empty() || count == 0 {
        return Vec::new();
    }
    let max = pts.iter().map(|p| p.waveheight).fold(f64::NEG_INFINITY, f64::max);
    let min = pts[0].waveheight;
    let mut picked: Vec<usize> = (1..=count)
        .map(|j| {
            let target = min + (max - min) * j as f64 / count as f64;
            pts.iter()
                .enumerate()
                .min_by(|a, b| {
                    (a.1.waveheight - target)
                        .abs()
                        .total_cmp(&(b.1.waveheight - target).abs())
                })
                .map(|(i, _)| i)
                .unwrap_or(0)
        })
        .collect();
    picked.dedup();
    picked
}

//! File formats: operator-set JSON, region and threshold CSV, the region
//! SVG, and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::qstate::{entropy, OperatorSet, SchmidtVector, Unitary};
use crate::search::region::RegionMap;

/// On-disk layout of an operator set. Matrices are row-major with each
/// entry stored as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSetFile {
    pub d: usize,
    pub lambda: Vec<f64>,
    pub unitaries: Vec<Vec<Vec<[f64; 2]>>>,
    pub residual: f64,
    #[serde(default)]
    pub meta: serde_json::Map<String, serde_json::Value>,
}

impl OperatorSetFile {
    pub fn from_set(set: &OperatorSet, meta: serde_json::Map<String, serde_json::Value>) -> Self {
        let d = set.state().dim();
        let unitaries = set
            .unitaries()
            .iter()
            .map(|u| {
                (0..d)
                    .map(|r| (0..d).map(|c| [u.matrix()[(r, c)].re, u.matrix()[(r, c)].im]).collect())
                    .collect()
            })
            .collect();
        Self {
            d,
            lambda: set.state().lambda().to_vec(),
            unitaries,
            residual: set.gram_residual(),
            meta,
        }
    }

    /// Rebuilds the set. Unitarity is not enforced here so that corrupted
    /// sets can still be loaded and reported on; the residual is recomputed.
    pub fn to_set(&self) -> Result<OperatorSet> {
        let state = SchmidtVector::new(&self.lambda, self.d)?;
        let unitaries = self
            .unitaries
            .iter()
            .enumerate()
            .map(|(k, rows)| {
                if rows.len() != self.d || rows.iter().any(|r| r.len() != self.d) {
                    return Err(Error::Dimension(format!("unitary {k} is not {0}x{0}", self.d)));
                }
                Unitary::from_raw(DMatrix::from_fn(self.d, self.d, |r, c| {
                    Complex64::new(rows[r][c][0], rows[r][c][1])
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        OperatorSet::new(state, unitaries)
    }
}

pub fn operator_set_to_json(set: &OperatorSet, meta: serde_json::Map<String, serde_json::Value>) -> String {
    serde_json::to_string_pretty(&OperatorSetFile::from_set(set, meta)).expect("serializable") + "\n"
}

pub fn operator_set_from_json(text: &str) -> std::result::Result<OperatorSet, IoError> {
    let file: OperatorSetFile = serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    file.to_set().map_err(IoError::Invalid)
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Invalid(#[from] Error),
}

pub fn read_operator_set(path: &Path) -> std::result::Result<OperatorSet, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
    operator_set_from_json(&text)
}

pub fn write_file(path: &Path, contents: &str) -> std::result::Result<(), IoError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| IoError::Io { path: parent.to_path_buf(), source })?;
    }
    fs::write(path, contents).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

/// `lambda0,lambda1,nmax`, one lattice point per row.
pub fn region_csv(map: &RegionMap) -> String {
    let mut out = String::from("lambda0,lambda1,nmax\n");
    for c in &map.cells {
        let _ = writeln!(out, "{},{},{}", c.lambda0, c.lambda1, c.n_max);
    }
    out
}

pub fn parse_region_csv(text: &str) -> std::result::Result<Vec<(f64, f64, usize)>, IoError> {
    let mut lines = text.lines();
    match lines.next() {
        Some("lambda0,lambda1,nmax") => {}
        other => return Err(IoError::Parse(format!("unexpected header {other:?}"))),
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 3 {
                return Err(IoError::Parse(format!("bad row {l:?}")));
            }
            let bad = |_| IoError::Parse(format!("bad row {l:?}"));
            Ok((f[0].parse().map_err(bad)?, f[1].parse().map_err(bad)?, f[2].parse().map_err(|_| IoError::Parse(format!("bad row {l:?}")))?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub n: usize,
    pub d: usize,
    pub lambda0_min: f64,
    pub entropy_min: f64,
    pub capacity_bound: f64,
}

pub fn threshold_csv(rows: &[ThresholdRow]) -> String {
    let mut out = String::from("N,d,lambda0_min,entropy_min,capacity_bound\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.n, r.d, r.lambda0_min, r.entropy_min, r.capacity_bound);
    }
    out
}

/// Numeric minimal entropy against the capacity bound, per alphabet size.
pub fn entropy_curve_csv(rows: &[ThresholdRow]) -> String {
    let mut out = String::from("N,entropy_min,capacity_bound\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.n, r.entropy_min, r.capacity_bound);
    }
    out
}

pub const CONTOUR_LEVELS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

const PALETTE: [(usize, &str); 7] = [
    (3, "#f7fbff"),
    (4, "#c6dbef"),
    (5, "#6baed6"),
    (6, "#2171b5"),
    (7, "#08306b"),
    (8, "#e31a1c"),
    (9, "#ffd92f"),
];

fn entropy3(l0: f64, l1: f64) -> f64 {
    let l2 = (1.0 - l0 - l1).max(0.0);
    SchmidtVector::new(&[l0, l1, l2], 3).map(|s| entropy(&s, 3.0)).unwrap_or(f64::NAN)
}

/// Points `(λ0, λ1)` on the entropy level set `S = level` (in etrits) inside
/// the region, one per sampled `λ0`. Along each vertical segment of the
/// region the entropy decreases with `λ1`, so each column has at most one crossing.
pub fn entropy_contour(level: f64, samples: usize) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for k in 0..=samples {
        let l0 = 1.0 / 3.0 + (2.0 / 3.0) * k as f64 / samples as f64;
        let lo = (1.0 - l0) / 2.0;
        let mut hi = l0.min(1.0 - l0);
        if hi < lo - 1e-12 {
            continue;
        }
        hi = hi.max(lo);
        let (s_lo, s_hi) = (entropy3(l0, lo), entropy3(l0, hi));
        if (s_lo - level).abs() <= 1e-12 {
            pts.push((l0, lo));
            continue;
        }
        if !(s_hi <= level && level <= s_lo) {
            continue;
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if entropy3(l0, m) > level {
                a = m;
            } else {
                b = m;
            }
        }
        pts.push((l0, 0.5 * (a + b)));
    }
    pts
}

/// Heatmap of `n_max` over `(λ0, λ1)` with a legend and entropy contours.
pub fn region_svg(map: &RegionMap) -> String {
    const W: f64 = 640.0;
    const H: f64 = 520.0;
    const LEFT: f64 = 60.0;
    const TOP: f64 = 20.0;
    const PW: f64 = 460.0;
    const PH: f64 = 440.0;
    let x = |l0: f64| LEFT + (l0 - 1.0 / 3.0) / (2.0 / 3.0) * PW;
    let y = |l1: f64| TOP + PH - l1 / 0.5 * PH;

    let r = map.resolution as f64;
    let cw = PW / (2.0 * r) * 1.05;
    let ch = PH / r * 0.55;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<g id="cells">"#);
    for c in &map.cells {
        let colour = PALETTE.iter().find(|p| p.0 == c.n_max).map_or("#999999", |p| p.1);
        let _ = writeln!(
            s,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{colour}"><title>lambda0={} lambda1={} nmax={}</title></rect>"#,
            x(c.lambda0) - cw / 2.0,
            y(c.lambda1) - ch / 2.0,
            cw,
            ch,
            c.lambda0,
            c.lambda1,
            c.n_max
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r##"<g id="contours" fill="none" stroke="#444444" stroke-width="1" stroke-dasharray="4 3">"##);
    for level in CONTOUR_LEVELS {
        let pts = entropy_contour(level, 400);
        if pts.is_empty() {
            continue;
        }
        let path: Vec<String> = pts.iter().map(|&(a, b)| format!("{:.3},{:.3}", x(a), y(b))).collect();
        let _ = writeln!(s, r#"<polyline data-entropy="{level}" points="{}"/>"#, path.join(" "));
        let (lx, ly) = pts[pts.len() / 2];
        let _ = writeln!(
            s,
            r##"<text x="{:.3}" y="{:.3}" font-size="10" fill="#444444" stroke="none">S={level}</text>"##,
            x(lx) + 3.0,
            y(ly) - 3.0
        );
    }
    let _ = writeln!(s, "</g>");

    // axes
    let _ = writeln!(
        s,
        r#"<g id="axes" stroke="black"><line x1="{LEFT}" y1="{0}" x2="{1}" y2="{0}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{0}"/></g>"#,
        TOP + PH,
        LEFT + PW
    );
    for (v, label) in [(1.0 / 3.0, "1/3"), (0.5, "1/2"), (2.0 / 3.0, "2/3"), (1.0, "1")] {
        let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" font-size="11" text-anchor="middle">{label}</text>"#, x(v), TOP + PH + 15.0);
    }
    for (v, label) in [(0.0, "0"), (0.25, "1/4"), (0.5, "1/2")] {
        let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" font-size="11" text-anchor="end">{label}</text>"#, LEFT - 5.0, y(v) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" font-size="13" text-anchor="middle">lambda0</text>"#, LEFT + PW / 2.0, H - 15.0);
    let _ = writeln!(s, r#"<text x="15" y="{:.3}" font-size="13" transform="rotate(-90 15 {:.3})" text-anchor="middle">lambda1</text>"#, TOP + PH / 2.0, TOP + PH / 2.0);

    let _ = writeln!(s, r#"<g id="legend" font-size="12">"#);
    for (k, (n, colour)) in PALETTE.iter().enumerate() {
        let ly = TOP + 10.0 + 22.0 * k as f64;
        let lx = LEFT + PW + 25.0;
        let _ = writeln!(s, r#"<rect x="{lx}" y="{ly}" width="16" height="16" fill="{colour}" stroke="black"/><text x="{}" y="{}">N = {n}</text>"#, lx + 22.0, ly + 13.0);
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to regenerate the outputs it lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub input_state: Option<Vec<f64>>,
    pub version: String,
    pub duration_seconds: f64,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn path_for(output: &Path) -> PathBuf {
        let name = output.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let stem = name.rsplit_once('.').map_or(name.as_str(), |(s, _)| s).to_string();
        output.with_file_name(format!("{stem}.manifest.json"))
    }

    pub fn write_beside(&self, output: &Path) -> std::result::Result<PathBuf, IoError> {
        let path = Self::path_for(output);
        write_file(&path, &(serde_json::to_string_pretty(self).expect("serializable") + "\n"))?;
        Ok(path)
    }
}

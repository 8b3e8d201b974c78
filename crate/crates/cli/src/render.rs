//! PNG rendering of geometry fields.
//!
//! Three styles: square-grid heatmaps, slice curves coloured by predicted
//! class, and ternary-simplex heatmaps. Each heatmap carries a vertical
//! colour bar whose ends are the displayed value bounds. Clipping only
//! affects the colour mapping, never the field.

use std::path::Path;

use colorous::Gradient;
use image::{Rgb, RgbImage};
use pullback::field::{GeometryField, Provenance, PREDICTED_CLASS};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderStyle {
    Grid,
    Line,
    Ternary,
}

impl std::str::FromStr for RenderStyle {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "grid" => Ok(RenderStyle::Grid),
            "line" => Ok(RenderStyle::Line),
            "ternary" => Ok(RenderStyle::Ternary),
            _ => Err(CliError::config(format!(
                "style: expected grid, line or ternary, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub colormap: String,
    /// Values are clamped to `[-clip, clip]` before colouring.
    pub clip: Option<f64>,
    pub width: u32,
    pub height: u32,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            colormap: "viridis".into(),
            clip: None,
            width: 400,
            height: 400,
        }
    }
}

/// Value range actually mapped to the colour bar ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Legend {
    pub lo: f64,
    pub hi: f64,
}

const COLORMAPS: [(&str, Gradient); 5] = [
    ("viridis", colorous::VIRIDIS),
    ("magma", colorous::MAGMA),
    ("inferno", colorous::INFERNO),
    ("plasma", colorous::PLASMA),
    ("cividis", colorous::CIVIDIS),
];

pub fn colormap_names() -> Vec<&'static str> {
    COLORMAPS.iter().map(|(n, _)| *n).collect()
}

fn gradient(name: &str) -> CliResult<Gradient> {
    COLORMAPS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, g)| *g)
        .ok_or_else(|| CliError::config(format!("render.colormap: unknown colormap {name:?}")))
}

const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);
const MISSING: Rgb<u8> = Rgb([128, 128, 128]);
const BOUNDARY: Rgb<u8> = Rgb([228, 26, 28]);
const AXIS: Rgb<u8> = Rgb([90, 90, 90]);
const BAR_WIDTH: u32 = 16;
const BAR_GAP: u32 = 8;
const MARGIN: u32 = 12;

struct ColorScale {
    gradient: Gradient,
    legend: Legend,
    clip: Option<f64>,
}

impl ColorScale {
    fn new(values: &[f64], opts: &RenderOptions) -> CliResult<Self> {
        let clip = opts.clip.filter(|c| *c > 0.0);
        let shown = values.iter().filter(|v| v.is_finite()).map(|&v| clamp(v, clip));
        let (lo, hi) = shown.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let legend = if lo.is_finite() {
            Legend { lo, hi }
        } else {
            Legend { lo: 0.0, hi: 0.0 }
        };
        Ok(Self {
            gradient: gradient(&opts.colormap)?,
            legend,
            clip,
        })
    }

    fn fraction(&self, v: f64) -> f64 {
        let Legend { lo, hi } = self.legend;
        if hi > lo {
            ((clamp(v, self.clip) - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.5
        }
    }

    fn color(&self, v: f64) -> Rgb<u8> {
        if !v.is_finite() {
            return MISSING;
        }
        rgb(self.gradient.eval_continuous(self.fraction(v)))
    }

    /// Colour bar in the column strip starting at `x0`, top = `hi`.
    fn draw_bar(&self, img: &mut RgbImage, x0: u32, y0: u32, h: u32) {
        let flat = !(self.legend.hi > self.legend.lo);
        for dy in 0..h {
            let t = if flat || h < 2 {
                0.5
            } else {
                1.0 - f64::from(dy) / f64::from(h - 1)
            };
            let c = rgb(self.gradient.eval_continuous(t));
            for dx in 0..BAR_WIDTH {
                img.put_pixel(x0 + dx, y0 + dy, c);
            }
        }
    }
}

fn clamp(v: f64, clip: Option<f64>) -> f64 {
    match clip {
        Some(c) => v.clamp(-c, c),
        None => v,
    }
}

fn rgb(c: colorous::Color) -> Rgb<u8> {
    Rgb([c.r, c.g, c.b])
}

fn class_color(class: f64) -> Rgb<u8> {
    if !class.is_finite() || class < 0.0 {
        return MISSING;
    }
    let cats = colorous::CATEGORY10;
    rgb(cats[(class as usize) % cats.len()])
}

/// Renders `channel` of `field` in `style`.
pub fn render_field(
    field: &GeometryField,
    channel: &str,
    style: RenderStyle,
    opts: &RenderOptions,
) -> CliResult<(RgbImage, Legend)> {
    let values = field
        .channels
        .get(channel)
        .ok_or_else(|| CliError::config(format!("render: field has no channel {channel:?}")))?;
    let classes = field.channels.get(PREDICTED_CLASS).map(Vec::as_slice);
    match (style, &field.provenance) {
        (RenderStyle::Grid, Provenance::Grid(g)) => render_grid(values, classes, g.n, opts),
        (RenderStyle::Line, Provenance::Slice { t, .. }) => render_line(t, values, classes, opts),
        (RenderStyle::Ternary, Provenance::Plane { resolution, .. }) => {
            render_ternary(values, classes, *resolution, opts)
        }
        (s, p) => Err(CliError::config(format!(
            "render: style {s:?} does not fit a field from {}",
            p.describe()
        ))),
    }
}

pub fn save_png(img: &RgbImage, path: &Path) -> CliResult<Vec<u8>> {
    let mut bytes = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| CliError::Other(format!("{}: png encoding failed: {e}", path.display())))?;
    std::fs::write(path, &bytes).map_err(|e| CliError::io(path, e))?;
    Ok(bytes)
}

/// Grid heatmap. Row 0 of the field (lowest y) is drawn at the bottom.
fn render_grid(
    values: &[f64],
    classes: Option<&[f64]>,
    n: usize,
    opts: &RenderOptions,
) -> CliResult<(RgbImage, Legend)> {
    let scale = ColorScale::new(values, opts)?;
    let (w, h) = (opts.width, opts.height);
    let mut img = RgbImage::from_pixel(w + BAR_GAP + BAR_WIDTH + MARGIN, h, BACKGROUND);
    let cell = |px: u32, py: u32| -> usize {
        let col = (px as usize * n) / w as usize;
        let row = n - 1 - (py as usize * n) / h as usize;
        row * n + col
    };
    for py in 0..h {
        for px in 0..w {
            let i = cell(px, py);
            let mut c = scale.color(values[i]);
            if let Some(cls) = classes {
                let nb = [
                    (px + 1 < w).then(|| cell(px + 1, py)),
                    (py + 1 < h).then(|| cell(px, py + 1)),
                    (px > 0).then(|| cell(px - 1, py)),
                    (py > 0).then(|| cell(px, py - 1)),
                ];
                if nb.into_iter().flatten().any(|j| cls[j] != cls[i]) {
                    c = BOUNDARY;
                }
            }
            img.put_pixel(px, py, c);
        }
    }
    scale.draw_bar(&mut img, w + BAR_GAP, 0, h);
    Ok((img, scale.legend))
}

/// Curve of `values` against `t`, each segment in its left end's class colour.
fn render_line(
    t: &[f64],
    values: &[f64],
    classes: Option<&[f64]>,
    opts: &RenderOptions,
) -> CliResult<(RgbImage, Legend)> {
    let scale = ColorScale::new(values, opts)?;
    let (w, h) = (opts.width, opts.height);
    let mut img = RgbImage::from_pixel(w, h, BACKGROUND);
    let (x0, x1) = (MARGIN as f64, (w - MARGIN) as f64);
    let (y0, y1) = ((h - MARGIN) as f64, MARGIN as f64);
    for px in MARGIN..=w - MARGIN {
        img.put_pixel(px, h - MARGIN, AXIS);
    }
    for py in MARGIN..=h - MARGIN {
        img.put_pixel(MARGIN, py, AXIS);
    }
    let (t_lo, t_hi) = (t.first().copied().unwrap_or(0.0), t.last().copied().unwrap_or(1.0));
    let span = if t_hi > t_lo { t_hi - t_lo } else { 1.0 };
    let to_px = |i: usize| -> Option<(f64, f64)> {
        let v = values[i];
        v.is_finite().then(|| {
            (
                x0 + (t[i] - t_lo) / span * (x1 - x0),
                y0 + scale.fraction(v) * (y1 - y0),
            )
        })
    };
    for i in 0..values.len().saturating_sub(1) {
        let (Some(a), Some(b)) = (to_px(i), to_px(i + 1)) else {
            continue;
        };
        let color = classes.map_or(AXIS, |c| class_color(c[i]));
        draw_segment(&mut img, a, b, color);
    }
    Ok((img, scale.legend))
}

fn draw_segment(img: &mut RgbImage, a: (f64, f64), b: (f64, f64), color: Rgb<u8>) {
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
    for s in 0..=steps {
        let f = s as f64 / steps as f64;
        let (x, y) = (a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1));
        for dx in -1..=1i64 {
            for dy in -1..=1i64 {
                let (px, py) = (x.round() as i64 + dx, y.round() as i64 + dy);
                if px >= 0 && py >= 0 && (px as u32) < img.width() && (py as u32) < img.height() {
                    img.put_pixel(px as u32, py as u32, color);
                }
            }
        }
    }
}

/// Index of lattice point `(k1, k2)` in the plane generator's ordering.
fn lattice_index(k1: usize, k2: usize, top: usize) -> usize {
    (0..k1).map(|a| top - a + 1).sum::<usize>() + k2
}

/// Ternary heatmap with anchor 1 at the bottom left, anchor 2 at the bottom
/// right and anchor 3 at the apex of an equilateral triangle.
fn render_ternary(
    values: &[f64],
    classes: Option<&[f64]>,
    resolution: usize,
    opts: &RenderOptions,
) -> CliResult<(RgbImage, Legend)> {
    let top = resolution - 1;
    let expected = resolution * (resolution + 1) / 2;
    if values.len() != expected {
        return Err(CliError::config(format!(
            "render: plane of resolution {resolution} needs {expected} points, found {}",
            values.len()
        )));
    }
    let scale = ColorScale::new(values, opts)?;
    let (w, h) = (opts.width, opts.height);
    let mut img = RgbImage::from_pixel(w + BAR_GAP + BAR_WIDTH + MARGIN, h, BACKGROUND);
    let m = MARGIN as f64;
    let side = (w as f64 - 2.0 * m).min((h as f64 - 2.0 * m) * 2.0 / 3f64.sqrt());
    let v1 = (w as f64 / 2.0 - side / 2.0, h as f64 - m);
    let v2 = (w as f64 / 2.0 + side / 2.0, h as f64 - m);
    let v3 = (w as f64 / 2.0, h as f64 - m - side * 3f64.sqrt() / 2.0);
    let det = (v2.1 - v3.1) * (v1.0 - v3.0) + (v3.0 - v2.0) * (v1.1 - v3.1);
    let lookup = |px: u32, py: u32| -> Option<usize> {
        let (x, y) = (px as f64 + 0.5, py as f64 + 0.5);
        let l1 = ((v2.1 - v3.1) * (x - v3.0) + (v3.0 - v2.0) * (y - v3.1)) / det;
        let l2 = ((v3.1 - v1.1) * (x - v3.0) + (v1.0 - v3.0) * (y - v3.1)) / det;
        let l3 = 1.0 - l1 - l2;
        if l1 < 0.0 || l2 < 0.0 || l3 < 0.0 {
            return None;
        }
        let k1 = ((l1 * top as f64).round() as usize).min(top);
        let k2 = ((l2 * top as f64).round() as usize).min(top - k1);
        Some(lattice_index(k1, k2, top))
    };
    for py in 0..h {
        for px in 0..w {
            let Some(i) = lookup(px, py) else { continue };
            let mut c = scale.color(values[i]);
            if let Some(cls) = classes {
                let nb = [
                    (px + 1 < w).then(|| lookup(px + 1, py)),
                    (py + 1 < h).then(|| lookup(px, py + 1)),
                    (px > 0).then(|| lookup(px - 1, py)),
                    (py > 0).then(|| lookup(px, py - 1)),
                ];
                if nb.into_iter().flatten().flatten().any(|j| cls[j] != cls[i]) {
                    c = BOUNDARY;
                }
            }
            img.put_pixel(px, py, c);
        }
    }
    scale.draw_bar(&mut img, w + BAR_GAP, 0, h);
    Ok((img, scale.legend))
}

//! Deterministic rendering of detection overlays.
//!
//! An overlay plots the flagged test window (blue) on top of its nearest
//! training window (green) in one 800x400 chart. The renderer is a small
//! self-contained rasterizer — anti-aliased polylines, axis ticks, and a
//! bitmap digit font — so identical inputs always produce byte-identical
//! PNGs on every platform. Nothing here consults system fonts, locales, or
//! clocks.
//!
//! The same window pair can also be serialized as plain text for models
//! without vision input: both series are independently rescaled to the unit
//! interval and quantized to two significant figures, one
//! `<index>,<actual>,<prediction>` row per sample.

use std::io::Cursor;

use crate::error::Error;

/// Fixed chart margins in pixels. Keeping them constant (rather than sized
/// to the tick labels) guarantees the plot area's geometry depends only on
/// the canvas size, so curve pixels are comparable across renders.
const MARGIN_LEFT: u32 = 64;
const MARGIN_RIGHT: u32 = 12;
const MARGIN_TOP: u32 = 12;
const MARGIN_BOTTOM: u32 = 30;

/// Stroke radius in pixels (half the line width). Large enough that every
/// point on a curve fully covers at least one pixel center (the farthest a
/// point can sit from one is sqrt(2)/2, and full coverage needs
/// radius - 0.5 to reach it), so each stroked series always contributes
/// pure-color pixels.
const STROKE_RADIUS: f64 = 1.25;

const WHITE: [u8; 3] = [255, 255, 255];
const FRAME_GRAY: [u8; 3] = [64, 64, 64];

/// Visual parameters for [`render_overlay`].
#[derive(Debug, Clone, PartialEq)]
pub struct OverlayStyle {
    pub width: u32,
    pub height: u32,
    /// Color of the test window under scrutiny (drawn on top).
    pub actual_color: [u8; 3],
    /// Color of the nearest training window (drawn first).
    pub prediction_color: [u8; 3],
    /// Value of the first x tick label; lets the chart show real test-series
    /// sample indices instead of window-relative ones.
    pub x_start: usize,
}

impl Default for OverlayStyle {
    fn default() -> Self {
        Self {
            width: 800,
            height: 400,
            actual_color: [0, 0, 255],
            prediction_color: [0, 128, 0],
            x_start: 0,
        }
    }
}

/// The pixel rectangle `(x, y, width, height)` the curves are drawn into,
/// exclusive of axes and labels. Exposed so tests and embedders can crop to
/// the data region.
pub fn plot_area(style: &OverlayStyle) -> (u32, u32, u32, u32) {
    (
        MARGIN_LEFT,
        MARGIN_TOP,
        style.width - MARGIN_LEFT - MARGIN_RIGHT,
        style.height - MARGIN_TOP - MARGIN_BOTTOM,
    )
}

/// Renders the overlay chart and returns encoded PNG bytes.
///
/// Both slices must be non-empty and the same length. The y-axis covers the
/// combined range of both series with 5% headroom on each side; a flat pair
/// of series gets a unit of headroom so the lines sit mid-chart.
pub fn render_overlay(
    actual: &[f64],
    prediction: &[f64],
    style: &OverlayStyle,
) -> Result<Vec<u8>, Error> {
    if actual.len() != prediction.len() {
        return Err(Error::LengthMismatch {
            actual: actual.len(),
            prediction: prediction.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::Render {
            reason: "cannot render an empty window".to_string(),
        });
    }
    if style.width <= MARGIN_LEFT + MARGIN_RIGHT + 1 || style.height <= MARGIN_TOP + MARGIN_BOTTOM + 1
    {
        return Err(Error::Render {
            reason: format!(
                "canvas {}x{} leaves no room for the plot area",
                style.width, style.height
            ),
        });
    }
    if let Some(v) = actual
        .iter()
        .chain(prediction.iter())
        .find(|v| !v.is_finite())
    {
        return Err(Error::Render {
            reason: format!("cannot render non-finite value {v}"),
        });
    }

    let (lo, hi) = padded_y_range(actual, prediction);
    let mut canvas = Canvas::new(style.width, style.height);
    let plot = plot_area(style);

    draw_frame_and_ticks(&mut canvas, style, plot, lo, hi, actual.len());

    // Prediction first, actual second: where the curves cross, the test
    // window stays visible on top of its reference pattern.
    stroke_series(&mut canvas, prediction, plot, lo, hi, style.prediction_color);
    stroke_series(&mut canvas, actual, plot, lo, hi, style.actual_color);

    encode_png(&canvas)
}

/// Combined min/max of both series with 5% of the span added on each side.
fn padded_y_range(actual: &[f64], prediction: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in actual.iter().chain(prediction.iter()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Maps a sample (i, v) to pixel-center coordinates inside the plot area.
fn to_pixel(
    i: usize,
    v: f64,
    len: usize,
    plot: (u32, u32, u32, u32),
    lo: f64,
    hi: f64,
) -> (f64, f64) {
    let (px, py, pw, ph) = plot;
    let fx = if len > 1 {
        i as f64 / (len - 1) as f64
    } else {
        0.5
    };
    let fy = (v - lo) / (hi - lo);
    (
        px as f64 + fx * (pw - 1) as f64 + 0.5,
        py as f64 + (1.0 - fy) * (ph - 1) as f64 + 0.5,
    )
}

fn stroke_series(
    canvas: &mut Canvas,
    values: &[f64],
    plot: (u32, u32, u32, u32),
    lo: f64,
    hi: f64,
    color: [u8; 3],
) {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| to_pixel(i, v, values.len(), plot, lo, hi))
        .collect();
    canvas.stroke_polyline(&pts, color, STROKE_RADIUS, plot);
}

fn draw_frame_and_ticks(
    canvas: &mut Canvas,
    style: &OverlayStyle,
    plot: (u32, u32, u32, u32),
    lo: f64,
    hi: f64,
    len: usize,
) {
    let (px, py, pw, ph) = plot;
    let (x1, y1) = (px + pw - 1, py + ph - 1);

    // Plot frame.
    canvas.hline(px, x1, py, FRAME_GRAY);
    canvas.hline(px, x1, y1, FRAME_GRAY);
    canvas.vline(py, y1, px, FRAME_GRAY);
    canvas.vline(py, y1, x1, FRAME_GRAY);

    // Y ticks and labels.
    let y_step = nice_step((hi - lo) / 5.0);
    let decimals = step_decimals(y_step);
    for value in tick_values(lo, hi, y_step) {
        let fy = (value - lo) / (hi - lo);
        let row = py as f64 + (1.0 - fy) * (ph - 1) as f64;
        let row = row.round() as i64;
        if row < py as i64 || row > y1 as i64 {
            continue;
        }
        let row = row as u32;
        canvas.hline(px.saturating_sub(4), px.saturating_sub(1), row, FRAME_GRAY);
        let label = format_tick(value, decimals, y_step);
        let scale = label_scale(&label);
        let text_w = text_width(&label, scale);
        let x = px.saturating_sub(6 + text_w) as i64;
        let y = row as i64 - (GLYPH_H as i64 * scale as i64) / 2;
        canvas.draw_text(x, y, &label, FRAME_GRAY, scale);
    }

    // X ticks and labels: integer sample indices offset by x_start.
    let x_lo = style.x_start as f64;
    let x_hi = (style.x_start + len.max(2) - 1) as f64;
    let x_step = nice_step((x_hi - x_lo) / 6.0).max(1.0);
    for value in tick_values(x_lo, x_hi, x_step) {
        let fx = if len > 1 {
            (value - x_lo) / (x_hi - x_lo)
        } else {
            0.5
        };
        let col = px as f64 + fx * (pw - 1) as f64;
        let col = col.round() as i64;
        if col < px as i64 || col > x1 as i64 {
            continue;
        }
        let col = col as u32;
        canvas.vline(y1 + 1, (y1 + 4).min(style.height - 1), col, FRAME_GRAY);
        let label = format_tick(value, 0, x_step);
        let scale = 2;
        let text_w = text_width(&label, scale) as i64;
        let x = col as i64 - text_w / 2;
        let y = (y1 + 7) as i64;
        canvas.draw_text(x, y, &label, FRAME_GRAY, scale);
    }
}

/// Smallest "nice" step (1, 2, or 5 times a power of ten) that is at least
/// `raw`.
fn nice_step(raw: f64) -> f64 {
    debug_assert!(raw > 0.0 && raw.is_finite());
    let mag = 10f64.powf(raw.log10().floor());
    for m in [1.0, 2.0, 5.0, 10.0] {
        let step = m * mag;
        if step >= raw * (1.0 - 1e-12) {
            return step;
        }
    }
    10.0 * mag
}

/// Decimal places needed to print multiples of `step` exactly enough:
/// zero for integral steps, more as the step shrinks.
fn step_decimals(step: f64) -> usize {
    if step >= 1.0 {
        0
    } else {
        (-(step.log10() + 1e-9).floor()) as usize
    }
}

/// Multiples of `step` within `[lo, hi]`, ascending.
fn tick_values(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let first = (lo / step).ceil();
    let last = (hi / step).floor();
    let mut out = Vec::new();
    let mut k = first;
    while k <= last {
        out.push(k * step);
        k += 1.0;
    }
    out
}

fn format_tick(value: f64, decimals: usize, step: f64) -> String {
    // Snap -0.0 and tiny residue to a clean zero.
    let v = if value.abs() < step * 1e-9 { 0.0 } else { value };
    format!("{v:.decimals$}")
}

/// Wide labels drop to the small font so they stay inside the left margin.
fn label_scale(label: &str) -> u32 {
    if label.len() <= 5 {
        2
    } else {
        1
    }
}

fn text_width(text: &str, scale: u32) -> u32 {
    text.chars().count() as u32 * (GLYPH_W + 1) * scale
}

// ---------------------------------------------------------------------------
// Canvas: a plain RGB buffer with anti-aliased stroking and bitmap text.
// ---------------------------------------------------------------------------

const GLYPH_W: u32 = 5;
const GLYPH_H: u32 = 7;

/// 5x7 glyphs for the characters tick labels can contain. Rows are listed
/// top to bottom; bit 4 is the leftmost column.
fn glyph(c: char) -> [u8; 7] {
    match c {
        '0' => [0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110],
        '1' => [0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110],
        '2' => [0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111],
        '3' => [0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110],
        '4' => [0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010],
        '5' => [0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110],
        '6' => [0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110],
        '7' => [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000],
        '8' => [0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110],
        '9' => [0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100],
        '-' => [0b00000, 0b00000, 0b00000, 0b01110, 0b00000, 0b00000, 0b00000],
        '.' => [0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b01100, 0b01100],
        _ => [0; 7],
    }
}

struct Canvas {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl Canvas {
    fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: WHITE.repeat((width * height) as usize),
        }
    }

    fn set(&mut self, x: u32, y: u32, color: [u8; 3]) {
        let i = ((y * self.width + x) * 3) as usize;
        self.data[i..i + 3].copy_from_slice(&color);
    }

    /// Alpha-blends `color` over the existing pixel with coverage `cov`.
    fn blend(&mut self, x: u32, y: u32, color: [u8; 3], cov: f32) {
        let i = ((y * self.width + x) * 3) as usize;
        for (px, fg) in self.data[i..i + 3].iter_mut().zip(color) {
            let bg = *px as f32;
            *px = (fg as f32 * cov + bg * (1.0 - cov) + 0.5) as u8;
        }
    }

    fn hline(&mut self, x0: u32, x1: u32, y: u32, color: [u8; 3]) {
        for x in x0..=x1.min(self.width - 1) {
            self.set(x, y, color);
        }
    }

    fn vline(&mut self, y0: u32, y1: u32, x: u32, color: [u8; 3]) {
        for y in y0..=y1.min(self.height - 1) {
            self.set(x, y, color);
        }
    }

    /// Strokes a polyline with round joins/caps, clipped to `clip`.
    ///
    /// Coverage is computed per pixel as the max over all segments (one
    /// shared buffer), then blended in a single pass — overlapping segments
    /// at joints never double-darken.
    fn stroke_polyline(
        &mut self,
        pts: &[(f64, f64)],
        color: [u8; 3],
        radius: f64,
        clip: (u32, u32, u32, u32),
    ) {
        if pts.is_empty() {
            return;
        }
        let (cx, cy, cw, ch) = clip;
        let mut coverage = vec![0f32; (cw * ch) as usize];
        let reach = radius + 1.0;

        let segments: Vec<((f64, f64), (f64, f64))> = if pts.len() == 1 {
            vec![(pts[0], pts[0])]
        } else {
            pts.windows(2).map(|w| (w[0], w[1])).collect()
        };

        for (a, b) in segments {
            let x_min = (a.0.min(b.0) - reach).floor().max(cx as f64) as u32;
            let x_max = (a.0.max(b.0) + reach).ceil().min((cx + cw - 1) as f64) as u32;
            let y_min = (a.1.min(b.1) - reach).floor().max(cy as f64) as u32;
            let y_max = (a.1.max(b.1) + reach).ceil().min((cy + ch - 1) as f64) as u32;
            if x_min > x_max || y_min > y_max {
                continue;
            }
            for y in y_min..=y_max {
                for x in x_min..=x_max {
                    let p = (x as f64 + 0.5, y as f64 + 0.5);
                    let d = dist_point_segment(p, a, b);
                    let cov = (radius + 0.5 - d).clamp(0.0, 1.0) as f32;
                    if cov > 0.0 {
                        let idx = ((y - cy) * cw + (x - cx)) as usize;
                        coverage[idx] = coverage[idx].max(cov);
                    }
                }
            }
        }

        for y in 0..ch {
            for x in 0..cw {
                let cov = coverage[(y * cw + x) as usize];
                if cov > 0.0 {
                    self.blend(cx + x, cy + y, color, cov);
                }
            }
        }
    }

    /// Draws text with the built-in 5x7 font at an integer scale. Pixels
    /// falling outside the canvas are clipped.
    fn draw_text(&mut self, x: i64, y: i64, text: &str, color: [u8; 3], scale: u32) {
        let mut pen_x = x;
        for c in text.chars() {
            let rows = glyph(c);
            for (gy, row) in rows.iter().enumerate() {
                for gx in 0..GLYPH_W {
                    if row & (1 << (GLYPH_W - 1 - gx)) != 0 {
                        for sy in 0..scale {
                            for sx in 0..scale {
                                let px = pen_x + (gx * scale + sx) as i64;
                                let py = y + (gy as u32 * scale + sy) as i64;
                                if px >= 0
                                    && py >= 0
                                    && (px as u32) < self.width
                                    && (py as u32) < self.height
                                {
                                    self.set(px as u32, py as u32, color);
                                }
                            }
                        }
                    }
                }
            }
            pen_x += ((GLYPH_W + 1) * scale) as i64;
        }
    }
}

fn dist_point_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (apx, apy) = (p.0 - a.0, p.1 - a.1);
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let ab2 = abx * abx + aby * aby;
    let t = if ab2 > 0.0 {
        ((apx * abx + apy * aby) / ab2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (dx, dy) = (p.0 - (a.0 + t * abx), p.1 - (a.1 + t * aby));
    (dx * dx + dy * dy).sqrt()
}

fn encode_png(canvas: &Canvas) -> Result<Vec<u8>, Error> {
    let img = image::RgbImage::from_raw(canvas.width, canvas.height, canvas.data.clone())
        .expect("buffer dimensions match by construction");
    let mut cursor = Cursor::new(Vec::new());
    img.write_to(&mut cursor, image::ImageFormat::Png)
        .map_err(|e| Error::Render {
            reason: format!("PNG encoding failed: {e}"),
        })?;
    Ok(cursor.into_inner())
}

// ---------------------------------------------------------------------------
// Text serialization
// ---------------------------------------------------------------------------

/// Rescales values linearly onto `[0, 1]`: the minimum maps to 0, the
/// maximum to 1. A constant slice maps to all zeros.
pub fn scale_unit(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if lo == hi {
        return vec![0.0; values.len()];
    }
    let span = hi - lo;
    values.iter().map(|v| (v - lo) / span).collect()
}

/// Formats `value` with exactly `figures` significant figures in plain
/// decimal notation (no exponents), rounding half away from zero. Zero
/// formats as `"0"`.
///
/// Examples with two figures: `0.12345` -> `"0.12"`, `0.0012345` ->
/// `"0.0012"`, `1.0` -> `"1.0"`, `0.5` -> `"0.50"`, `0.996` -> `"1.0"`.
pub fn quantize_sigfigs(value: f64, figures: u32) -> String {
    assert!(value.is_finite(), "quantize_sigfigs requires a finite value");
    assert!(figures >= 1, "at least one significant figure is required");
    if value == 0.0 {
        return "0".to_string();
    }
    let neg = value < 0.0;
    let v = value.abs();
    let fig = figures as i32;

    // Normalize so `scaled` has `figures` digits before the point, i.e.
    // scaled in [10^(fig-1), 10^fig). log10 gets us close; the loops absorb
    // any off-by-one from floating-point rounding at decade boundaries.
    let mut exp = v.log10().floor() as i32;
    let mut scaled = v * 10f64.powi(fig - 1 - exp);
    while scaled >= 10f64.powi(fig) {
        exp += 1;
        scaled = v * 10f64.powi(fig - 1 - exp);
    }
    while scaled < 10f64.powi(fig - 1) {
        exp -= 1;
        scaled = v * 10f64.powi(fig - 1 - exp);
    }

    let mut d = (scaled + 0.5).floor() as i64;
    if d >= 10i64.pow(figures) {
        // Rounding overflowed into the next decade (e.g. 99.6 -> 100).
        d = 10i64.pow(figures - 1);
        exp += 1;
    }

    let digits = d.to_string();
    debug_assert_eq!(digits.len(), figures as usize);
    let last_exp = exp - fig + 1; // exponent of the least significant digit
    let body = if last_exp >= 0 {
        format!("{digits}{}", "0".repeat(last_exp as usize))
    } else {
        let frac = (-last_exp) as usize;
        if digits.len() > frac {
            let split = digits.len() - frac;
            format!("{}.{}", &digits[..split], &digits[split..])
        } else {
            format!("0.{}{}", "0".repeat(frac - digits.len()), digits)
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Serializes an overlay as comma-separated text rows.
///
/// Both series are independently rescaled to `[0, 1]` and quantized to two
/// significant figures; each row is `<index>,<actual>,<prediction>` with the
/// index offset by `start` to show real test-series positions.
pub fn serialize_text_table(
    actual: &[f64],
    prediction: &[f64],
    start: usize,
) -> Result<String, Error> {
    if actual.len() != prediction.len() {
        return Err(Error::LengthMismatch {
            actual: actual.len(),
            prediction: prediction.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::Render {
            reason: "cannot serialize an empty window".to_string(),
        });
    }
    let a = scale_unit(actual);
    let p = scale_unit(prediction);
    let mut out = String::new();
    for i in 0..a.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            start + i,
            quantize_sigfigs(a[i], 2),
            quantize_sigfigs(p[i], 2)
        ));
    }
    Ok(out)
}

//! Raster output: shaded basin pictures, net overlays and binary PPM.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::dynamics::{BasinClass, BasinField, Window};
use crate::rotation::{GenCircle, SteinerNet};

pub type Rgb = [u8; 3];

pub const SHADE_FACTOR: f64 = 0.97;
pub const MIN_LIGHTNESS: f64 = 32.0;
pub const OVERLAY_COLOR: Rgb = [255, 255, 255];
pub const NEUTRAL_BACKGROUND: Rgb = [128, 128, 128];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub pixels: Vec<Rgb>,
}

impl Image {
    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        Image {
            width,
            height,
            pixels: vec![color; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, color: Rgb) {
        self.pixels[y * self.width + x] = color;
    }

    /// Sets a pixel given signed coordinates, ignoring those outside.
    fn plot(&mut self, x: i64, y: i64, color: Rgb) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.set(x as usize, y as usize, color);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Palette {
    pub zero_hue: Rgb,
    pub infinity_hue: Rgb,
    pub undecided_color: Rgb,
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            zero_hue: [0, 160, 0],
            infinity_hue: [0, 64, 208],
            undecided_color: [0, 0, 0],
        }
    }
}

/// `255 * 0.97^t` clamped to `[32, 255]`.
pub fn lightness(time: u32) -> f64 {
    (255.0 * SHADE_FACTOR.powi(time.min(i32::MAX as u32) as i32)).clamp(MIN_LIGHTNESS, 255.0)
}

fn shade(base: Rgb, time: u32) -> Rgb {
    let l = lightness(time);
    base.map(|c| (c as f64 * l / 255.0).round() as u8)
}

pub fn render_basin(field: &BasinField, palette: &Palette) -> Image {
    let pixels = field
        .cells
        .iter()
        .map(|cell| match cell.class {
            BasinClass::ZeroBasin => shade(palette.zero_hue, cell.time),
            BasinClass::InfinityBasin => shade(palette.infinity_hue, cell.time),
            BasinClass::Undecided => palette.undecided_color,
        })
        .collect();
    Image {
        width: field.width,
        height: field.height,
        pixels,
    }
}

/// Maps a chart point to pixel coordinates where pixel `(i, j)` has its center at `(i, j)`.
fn chart_to_pixel(window: &Window, res: (usize, usize), z: Complex64) -> (f64, f64) {
    let (x, y) = window.to_pixel(z, res);
    (x - 0.5, y - 0.5)
}

/// Draws one circle or line with a 1-pixel stroke.
pub fn draw_gen_circle(img: &mut Image, curve: &GenCircle, window: &Window, color: Rgb) {
    let res = (img.width, img.height);
    let (dx, dy) = window.pixel_size(res);
    match *curve {
        GenCircle::Circle { center, radius } => {
            let (cx, cy) = chart_to_pixel(window, res, center);
            let r = radius / dx;
            if r > 2.0 * (img.width + img.height) as f64 {
                scan_circle(img, (cx, cy), r, dx / dy, color);
            } else {
                midpoint_circle(img, (cx, cy), r, dx / dy, color);
            }
        }
        GenCircle::Line { point, dir } => {
            let p = chart_to_pixel(window, res, point);
            // pixel rows grow downward
            let d = (dir.re / dx, -dir.im / dy);
            if let Some((a, b)) = clip_line(p, d, img.width, img.height) {
                bresenham(img, a, b, color);
            }
        }
    }
}

/// Midpoint circle in x-pixel units; `aspect = dx/dy` stretches the vertical offsets.
fn midpoint_circle(img: &mut Image, center: (f64, f64), radius: f64, aspect: f64, color: Rgb) {
    let (cx, cy) = (center.0.round() as i64, center.1.round() as i64);
    let r = radius.round() as i64;
    if r == 0 {
        img.plot(cx, cy, color);
        return;
    }
    let sy = |v: i64| (v as f64 * aspect).round() as i64;
    let (mut x, mut y, mut err) = (r, 0i64, 1 - r);
    while x >= y {
        for (ox, oy) in [
            (x, y),
            (y, x),
            (-y, x),
            (-x, y),
            (-x, -y),
            (-y, -x),
            (y, -x),
            (x, -y),
        ] {
            img.plot(cx + ox, cy + sy(oy), color);
        }
        y += 1;
        if err < 0 {
            err += 2 * y + 1;
        } else {
            x -= 1;
            err += 2 * (y - x) + 1;
        }
    }
}

/// Very large circles: intersect every pixel row and column with the curve.
fn scan_circle(img: &mut Image, center: (f64, f64), radius: f64, aspect: f64, color: Rgb) {
    let (cx, cy) = center;
    let ry = radius * aspect;
    for x in 0..img.width {
        let t = (x as f64 - cx) / radius;
        if t.abs() <= 1.0 {
            let h = ry * (1.0 - t * t).sqrt();
            img.plot(x as i64, (cy + h).round() as i64, color);
            img.plot(x as i64, (cy - h).round() as i64, color);
        }
    }
    for y in 0..img.height {
        let t = (y as f64 - cy) / ry;
        if t.abs() <= 1.0 {
            let w = radius * (1.0 - t * t).sqrt();
            img.plot((cx + w).round() as i64, y as i64, color);
            img.plot((cx - w).round() as i64, y as i64, color);
        }
    }
}

/// Clips the line `p + t d` to the pixel rectangle, returning integer endpoints.
fn clip_line(p: (f64, f64), d: (f64, f64), w: usize, h: usize) -> Option<((i64, i64), (i64, i64))> {
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for (pc, dc, hi) in [(p.0, d.0, w as f64 - 0.5), (p.1, d.1, h as f64 - 0.5)] {
        let lo = -0.5;
        if dc.abs() < 1e-300 {
            if pc < lo || pc > hi {
                return None;
            }
            continue;
        }
        let (a, b) = ((lo - pc) / dc, (hi - pc) / dc);
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    if t0 > t1 {
        return None;
    }
    let end = |t: f64| {
        (
            (p.0 + t * d.0).round() as i64,
            (p.1 + t * d.1).round() as i64,
        )
    };
    Some((end(t0), end(t1)))
}

fn bresenham(img: &mut Image, a: (i64, i64), b: (i64, i64), color: Rgb) {
    let (mut x, mut y) = a;
    let (dx, dy) = ((b.0 - a.0).abs(), -(b.1 - a.1).abs());
    let (sx, sy) = ((b.0 - a.0).signum(), (b.1 - a.1).signum());
    let mut err = dx + dy;
    loop {
        img.plot(x, y, color);
        if (x, y) == b {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Draws every meridian and latitude of `net` in [`OVERLAY_COLOR`].
pub fn overlay_net(img: &Image, net: &SteinerNet, window: &Window) -> Image {
    let mut out = img.clone();
    for curve in net.meridians.iter().chain(&net.latitudes) {
        draw_gen_circle(&mut out, curve, window, OVERLAY_COLOR);
    }
    out
}

/// Binary P6 encoding.
pub fn ppm_bytes(img: &Image) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + 3 * img.pixels.len());
    out.extend_from_slice(header.as_bytes());
    for px in &img.pixels {
        out.extend_from_slice(px);
    }
    out
}

pub fn write_ppm(img: &Image, path: impl AsRef<Path>) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&ppm_bytes(img))?;
    w.flush()
}

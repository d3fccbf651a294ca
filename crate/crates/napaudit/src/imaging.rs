//! PNG output, bitmap text, the per-layer composite grid and line charts.

use std::path::Path;

use font8x8::legacy::BASIC_LEGACY;
use napaudit_core::color::{ColorScale, Rgb, RgbImage, WHITE};
use napaudit_core::groups::{GroupKey, Schema, Variable};
use napaudit_core::raster::GridArrangement;

use crate::error::{AuditError, Result};

pub const GLYPH: usize = 8;
const BLACK: Rgb = [0, 0, 0];
const FRAME: Rgb = [170, 170, 170];
const MISSING: Rgb = [228, 228, 228];

pub fn write_png(img: &RgbImage, path: &Path) -> Result<()> {
    let buf = image::RgbImage::from_raw(img.width as u32, img.height as u32, img.pixels.clone())
        .expect("pixel buffer matches dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| AuditError::Image {
            path: path.to_path_buf(),
            source,
        })
}

pub fn read_png(path: &Path) -> Result<RgbImage> {
    let img = image::open(path)
        .map_err(|source| AuditError::Image {
            path: path.to_path_buf(),
            source,
        })?
        .to_rgb8();
    Ok(RgbImage {
        width: img.width() as usize,
        height: img.height() as usize,
        pixels: img.into_raw(),
    })
}

/// Draws ASCII text with its top-left corner at `(x, y)`; clipped at edges.
pub fn draw_text(img: &mut RgbImage, x: usize, y: usize, text: &str, color: Rgb) {
    for (i, ch) in text.chars().enumerate() {
        let glyph = BASIC_LEGACY[if ch.is_ascii() { ch as usize } else { b'?' as usize }];
        for (dy, bits) in glyph.iter().enumerate() {
            for dx in 0..GLYPH {
                let (px, py) = (x + i * GLYPH + dx, y + dy);
                if bits & (1 << dx) != 0 && px < img.width && py < img.height {
                    img.put(px, py, color);
                }
            }
        }
    }
}

fn fill_rect(img: &mut RgbImage, x: usize, y: usize, w: usize, h: usize, color: Rgb) {
    for py in y..(y + h).min(img.height) {
        for px in x..(x + w).min(img.width) {
            img.put(px, py, color);
        }
    }
}

fn frame_rect(img: &mut RgbImage, x: usize, y: usize, w: usize, h: usize, color: Rgb) {
    for px in x..x + w {
        img.put(px, y, color);
        img.put(px, y + h - 1, color);
    }
    for py in y..y + h {
        img.put(x, py, color);
        img.put(x + w - 1, py, color);
    }
}

fn fit(text: &str, width: usize) -> String {
    text.chars().take(width / GLYPH).collect()
}

/// Lays group maps out in the frequency-table arrangement (rows race × gender,
/// columns age) with category labels and a colour bar. Groups without a map
/// get a grey cell.
pub fn composite(schema: &Schema, maps: &[(GroupKey, RgbImage)], resolution: usize, scale: &ColorScale) -> RgbImage {
    let grid = GridArrangement::for_schema(schema);
    let gap = 6;
    let cell = resolution + gap;
    let row_label = |row: usize| {
        let (r, g) = grid.row_categories(schema, row);
        format!(
            "{} {}",
            schema.label(Variable::Race, r),
            schema.label(Variable::Gender, g)
        )
    };
    let label_w = (0..grid.rows).map(|r| row_label(r).len()).max().unwrap_or(0) * GLYPH + 2 * gap;
    let top = GLYPH + 2 * gap;
    let bar_h = 3 * GLYPH + 2 * gap;
    let width = label_w + grid.cols * cell + gap;
    let height = top + grid.rows * cell + bar_h;
    let mut img = RgbImage::filled(width, height, WHITE);

    for col in 0..grid.cols {
        let label = fit(schema.label(Variable::Age, col as u16), cell);
        let x = label_w + col * cell + (cell.saturating_sub(label.len() * GLYPH)) / 2;
        draw_text(&mut img, x, gap, &label, BLACK);
    }
    for row in 0..grid.rows {
        let y = top + row * cell + (cell.saturating_sub(GLYPH)) / 2;
        draw_text(&mut img, gap, y, &row_label(row), BLACK);
        for col in 0..grid.cols {
            let (x, y) = (label_w + col * cell + gap / 2, top + row * cell + gap / 2);
            fill_rect(&mut img, x, y, resolution, resolution, MISSING);
        }
    }
    for (key, map) in maps {
        let (row, col) = grid.cell(schema, *key);
        let (x, y) = (label_w + col * cell + gap / 2, top + row * cell + gap / 2);
        img.blit(map, x, y);
        frame_rect(&mut img, x - 1, y - 1, resolution + 2, resolution + 2, FRAME);
    }

    let bar_y = top + grid.rows * cell + gap;
    let bar_w = (grid.cols * cell).min(width - label_w - gap);
    for i in 0..bar_w {
        let v = scale.vmax() * (2.0 * i as f64 / (bar_w - 1).max(1) as f64 - 1.0);
        fill_rect(&mut img, label_w + i, bar_y, 1, GLYPH, scale.map(v));
    }
    frame_rect(&mut img, label_w - 1, bar_y - 1, bar_w + 2, GLYPH + 2, FRAME);
    let lo = format!("{:.3e}", -scale.vmax());
    let hi = format!("{:.3e}", scale.vmax());
    draw_text(&mut img, label_w, bar_y + GLYPH + gap, &lo, BLACK);
    draw_text(&mut img, label_w + (bar_w - GLYPH) / 2, bar_y + GLYPH + gap, "0", BLACK);
    draw_text(
        &mut img,
        (label_w + bar_w).saturating_sub(hi.len() * GLYPH),
        bar_y + GLYPH + gap,
        &hi,
        BLACK,
    );
    img
}

/// One line of a chart; `None` values leave gaps.
pub struct Series<'a> {
    pub name: &'a str,
    pub color: Rgb,
    pub values: &'a [Option<f64>],
}

fn draw_line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), color: Rgb) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        if x >= 0 && y >= 0 && (x as usize) < img.width && (y as usize) < img.height {
            img.put(x as usize, y as usize, color);
        }
        if x == x1 && y == y1 {
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

/// Line chart over `[0, 1]` on the y axis with a legend.
pub fn line_chart(title: &str, series: &[Series<'_>], x_label: &str) -> RgbImage {
    let (width, height) = (480, 320);
    let (left, right, top, bottom) = (48, 16, 28, 36);
    let (pw, ph) = (width - left - right, height - top - bottom);
    let mut img = RgbImage::filled(width, height, WHITE);
    draw_text(&mut img, left, 8, &fit(title, pw), BLACK);
    for tick in 0..=4 {
        let y = top + ph - tick * ph / 4;
        for x in left..left + pw {
            img.put(x, y, if tick == 0 { BLACK } else { MISSING });
        }
        draw_text(
            &mut img,
            8,
            y.saturating_sub(GLYPH / 2),
            &format!("{:.2}", tick as f64 / 4.0),
            BLACK,
        );
    }
    for y in top..=top + ph {
        img.put(left, y, BLACK);
    }
    draw_text(
        &mut img,
        left + pw.saturating_sub(x_label.len() * GLYPH),
        height - 14,
        x_label,
        BLACK,
    );

    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let px = |i: usize| {
        left as i64
            + if n > 1 {
                (i * (pw - 1) / (n - 1)) as i64
            } else {
                (pw / 2) as i64
            }
    };
    let py = |v: f64| (top + ph) as i64 - (v.clamp(0.0, 1.0) * ph as f64).round() as i64;
    for (k, s) in series.iter().enumerate() {
        let mut prev: Option<(i64, i64)> = None;
        for (i, v) in s.values.iter().enumerate() {
            let point = v.filter(|v| v.is_finite()).map(|v| (px(i), py(v)));
            if let (Some(a), Some(b)) = (prev, point) {
                draw_line(&mut img, a, b, s.color);
            }
            if let Some((x, y)) = point {
                fill_rect(
                    &mut img,
                    (x - 1).max(0) as usize,
                    (y - 1).max(0) as usize,
                    3,
                    3,
                    s.color,
                );
            }
            prev = point;
        }
        let lx = left + 8 + k * 96;
        fill_rect(&mut img, lx, height - 14 + 2, 12, 4, s.color);
        draw_text(&mut img, lx + 16, height - 14, &fit(s.name, 72), BLACK);
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_draws_inside_bounds() {
        let mut img = RgbImage::filled(20, 10, WHITE);
        draw_text(&mut img, 0, 0, "Hi there", BLACK);
        assert!(img.pixels.chunks(3).any(|p| p == BLACK));
    }

    #[test]
    fn composite_places_every_group_cell() {
        let schema = Schema::new(
            vec!["A".into(), "B".into()],
            vec!["young".into(), "old".into()],
            vec!["F".into()],
        )
        .unwrap();
        let scale = ColorScale::new(1.0).unwrap();
        let red = RgbImage::filled(10, 10, [255, 0, 0]);
        let keys: Vec<GroupKey> = schema.keys().collect();
        let maps: Vec<_> = keys.iter().take(3).map(|&k| (k, red.clone())).collect();
        let img = composite(&schema, &maps, 10, &scale);
        let reds = img.pixels.chunks(3).filter(|p| *p == [255, 0, 0]).count();
        assert!(reds >= 300);
    }

    #[test]
    fn chart_with_gaps_renders() {
        let vals = [Some(0.1), None, Some(0.9)];
        let img = line_chart(
            "t",
            &[Series {
                name: "val",
                color: [0, 0, 255],
                values: &vals,
            }],
            "epoch",
        );
        assert_eq!((img.width, img.height), (480, 320));
        assert!(img.pixels.chunks(3).any(|p| p == [0, 0, 255]));
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.png");
        let mut img = RgbImage::filled(4, 3, WHITE);
        img.put(1, 2, [1, 2, 3]);
        write_png(&img, &p).unwrap();
        assert_eq!(read_png(&p).unwrap(), img);
    }
}

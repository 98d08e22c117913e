//! Binary morphology and the mask denoising pipeline.
//!
//! Denoising runs four stages in order: merge nearby fragments with a
//! growing closing, extract one outer contour per 8-connected component,
//! drop components below an area threshold, and rasterize the surviving
//! contours back into a filled mask.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::raster::BinaryMask;

/// Neighbour offsets in clockwise order on screen (y down), starting east.
const DIRS: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];
const WEST: usize = 4;

fn dir_index(dx: i32, dy: i32) -> usize {
    DIRS.iter()
        .position(|&d| d == (dx, dy))
        .expect("offset is a unit neighbour")
}

/// Separable 3x3 max/min filter over a raw buffer; out-of-buffer samples
/// read as `border`.
fn filter3(width: usize, height: usize, src: &[bool], dilate: bool, border: bool) -> Vec<bool> {
    let combine = |a: bool, b: bool| if dilate { a || b } else { a && b };
    let mut rows = vec![false; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            let left = if x > 0 { row[x - 1] } else { border };
            let right = if x + 1 < width { row[x + 1] } else { border };
            rows[y * width + x] = combine(combine(left, row[x]), right);
        }
    }
    // a padded row is all `border`, and so is its horizontal filter
    let mut out = vec![false; src.len()];
    for y in 0..height {
        for x in 0..width {
            let up = if y > 0 { rows[(y - 1) * width + x] } else { border };
            let down = if y + 1 < height { rows[(y + 1) * width + x] } else { border };
            out[y * width + x] = combine(combine(up, rows[y * width + x]), down);
        }
    }
    out
}

/// 3x3 erosion with out-of-frame pixels reading as `border`.
pub fn erode_with_border(mask: &BinaryMask, border: bool) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_values(w, h, filter3(w, h, mask.values(), false, border)).unwrap()
}

/// 3x3 dilation with out-of-frame pixels reading as `border`.
pub fn dilate_with_border(mask: &BinaryMask, border: bool) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_values(w, h, filter3(w, h, mask.values(), true, border)).unwrap()
}

/// 3x3 erosion. Out-of-frame neighbours are background, so the frame
/// border is always eroded away.
pub fn erode(mask: &BinaryMask) -> BinaryMask {
    erode_with_border(mask, false)
}

/// 3x3 dilation, out-of-frame neighbours are background.
pub fn dilate(mask: &BinaryMask) -> BinaryMask {
    dilate_with_border(mask, false)
}

/// Closing with a `(2r+1)x(2r+1)` square (r dilations then r erosions),
/// evaluated on a canvas padded by `r` so pixels touching the frame are not
/// eroded. The result is always a superset of the input.
pub fn close_padded(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = mask.dims();
    let (pw, ph) = (w + 2 * radius, h + 2 * radius);
    let mut canvas = vec![false; pw * ph];
    for y in 0..h {
        for x in 0..w {
            canvas[(y + radius) * pw + x + radius] = mask.get(x, y);
        }
    }
    for _ in 0..radius {
        canvas = filter3(pw, ph, &canvas, true, false);
    }
    for _ in 0..radius {
        canvas = filter3(pw, ph, &canvas, false, false);
    }
    BinaryMask::from_fn(w, h, |x, y| canvas[(y + radius) * pw + x + radius])
}

/// 8-connected component labels (0 = background, components numbered from 1
/// in raster order of their first pixel) and the component count.
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, usize) {
    let (w, h) = mask.dims();
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.values()[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (x, y) = ((idx % w) as i64, (idx / w) as i64);
            for (dx, dy) in DIRS {
                let (nx, ny) = (x + dx as i64, y + dy as i64);
                if mask.get_or_false(nx, ny) {
                    let n = ny as usize * w + nx as usize;
                    if labels[n] == 0 {
                        labels[n] = next;
                        stack.push(n);
                    }
                }
            }
        }
    }
    (labels, next as usize)
}

pub fn count_components(mask: &BinaryMask) -> usize {
    label_components(mask).1
}

/// Outer contour of one connected plume region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlumePolygon {
    /// Closed boundary chain, starting at the topmost-leftmost pixel and
    /// running clockwise. The last point is 8-adjacent to the first.
    pub contour: Vec<Point>,
    /// Pixel count of the component with its holes filled.
    pub area: usize,
    pub component_id: usize,
}

/// Moore-neighbour border following with the Suzuki stopping rule.
fn trace_outer(labels: &[u32], w: usize, h: usize, id: u32, start: Point) -> Vec<Point> {
    let inside = |p: Point| p.in_frame(w, h) && labels[p.y as usize * w + p.x as usize] == id;
    let step = |p: Point, d: usize| Point::new(p.x + DIRS[d].0, p.y + DIRS[d].1);
    // scan clockwise starting just after the backtrack direction
    let scan = |p: Point, back: usize| (1..=8).map(|k| (back + k) % 8).find(|&d| inside(step(p, d)));

    let Some(first_dir) = scan(start, WEST) else {
        return vec![start];
    };
    let first_next = step(start, first_dir);

    let mut contour = Vec::new();
    let (mut cur, mut back) = (start, WEST);
    let limit = 4 * labels.len() + 8;
    for _ in 0..limit {
        let d = scan(cur, back).expect("component has more than one pixel");
        let next = step(cur, d);
        if !contour.is_empty() && cur == start && next == first_next {
            break;
        }
        contour.push(cur);
        let bg = step(cur, (d + 7) % 8);
        back = dir_index(bg.x - next.x, bg.y - next.y);
        cur = next;
    }
    contour
}

/// Pixels enclosed by a closed contour (boundary included), stored over the
/// contour's bounding box.
#[derive(Debug, Clone)]
pub struct FilledRegion {
    x0: i32,
    y0: i32,
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl FilledRegion {
    pub fn from_contour(contour: &[Point]) -> Self {
        assert!(!contour.is_empty(), "contour must be non-empty");
        let min_x = contour.iter().map(|p| p.x).min().unwrap();
        let max_x = contour.iter().map(|p| p.x).max().unwrap();
        let min_y = contour.iter().map(|p| p.y).min().unwrap();
        let max_y = contour.iter().map(|p| p.y).max().unwrap();
        let (bw, bh) = ((max_x - min_x + 1) as usize, (max_y - min_y + 1) as usize);
        // one pixel of padding so the exterior is connected around the contour
        let (pw, ph) = (bw + 2, bh + 2);
        let mut wall = vec![false; pw * ph];
        for p in contour {
            wall[(p.y - min_y + 1) as usize * pw + (p.x - min_x + 1) as usize] = true;
        }
        // 4-connected flood of the exterior; an 8-connected closed chain
        // cannot be crossed by it
        let mut outside = vec![false; pw * ph];
        let mut stack = vec![0usize];
        outside[0] = true;
        while let Some(idx) = stack.pop() {
            let (x, y) = (idx % pw, idx / pw);
            let mut visit = |n: usize| {
                if !wall[n] && !outside[n] {
                    outside[n] = true;
                    stack.push(n);
                }
            };
            if x > 0 {
                visit(idx - 1);
            }
            if x + 1 < pw {
                visit(idx + 1);
            }
            if y > 0 {
                visit(idx - pw);
            }
            if y + 1 < ph {
                visit(idx + pw);
            }
        }
        let mut bits = Vec::with_capacity(bw * bh);
        for y in 1..=bh {
            for x in 1..=bw {
                bits.push(!outside[y * pw + x]);
            }
        }
        Self {
            x0: min_x,
            y0: min_y,
            width: bw,
            height: bh,
            bits,
        }
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        let (lx, ly) = (p.x - self.x0, p.y - self.y0);
        lx >= 0
            && ly >= 0
            && (lx as usize) < self.width
            && (ly as usize) < self.height
            && self.bits[ly as usize * self.width + lx as usize]
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn pixels(&self) -> impl Iterator<Item = Point> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| {
            Point::new(self.x0 + (i % self.width) as i32, self.y0 + (i / self.width) as i32)
        })
    }
}

impl PlumePolygon {
    pub fn filled(&self) -> FilledRegion {
        FilledRegion::from_contour(&self.contour)
    }
}

/// One polygon per 8-connected component, in raster order of each
/// component's topmost-leftmost pixel. Holes are not reported.
pub fn get_contours(mask: &BinaryMask) -> Vec<PlumePolygon> {
    let (w, h) = mask.dims();
    let (labels, count) = label_components(mask);
    let mut starts = vec![None; count];
    for (idx, &l) in labels.iter().enumerate() {
        if l != 0 && starts[l as usize - 1].is_none() {
            starts[l as usize - 1] = Some(Point::new((idx % w) as i32, (idx / w) as i32));
        }
    }
    starts
        .into_iter()
        .enumerate()
        .map(|(i, start)| {
            let contour = trace_outer(&labels, w, h, i as u32 + 1, start.unwrap());
            let area = FilledRegion::from_contour(&contour).area();
            PlumePolygon {
                contour,
                area,
                component_id: i,
            }
        })
        .collect()
}

/// Repeated closing with growing radius until the fragments merge. Round `i`
/// closes the input with a `(2i+1)`-square. Stops once a round fails to
/// reduce the component count, the count reaches one, or `max_iters` rounds
/// have run; returns the earliest mask with the fewest components.
pub fn merge_by_closing(mask: &BinaryMask, max_iters: usize) -> BinaryMask {
    let mut best = mask.clone();
    let mut best_count = count_components(mask);
    for radius in 1..=max_iters {
        if best_count <= 1 {
            break;
        }
        let closed = close_padded(mask, radius);
        let count = count_components(&closed);
        if count < best_count {
            best = closed;
            best_count = count;
        } else {
            break;
        }
    }
    best
}

/// Keeps polygons whose filled area is at least `min_area`, preserving order.
pub fn filter_by_area(polygons: Vec<PlumePolygon>, min_area: f64) -> Vec<PlumePolygon> {
    polygons
        .into_iter()
        .filter(|p| p.area as f64 >= min_area)
        .collect()
}

/// Union of the filled polygons.
pub fn reconstruct_mask(polygons: &[PlumePolygon], dims: (usize, usize)) -> Result<BinaryMask> {
    let (w, h) = dims;
    let mut mask = BinaryMask::new(w, h);
    for poly in polygons {
        if poly.contour.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "polygon {} has an empty contour",
                poly.component_id
            )));
        }
        if let Some(p) = poly.contour.iter().find(|p| !p.in_frame(w, h)) {
            return Err(Error::InvalidArgument(format!(
                "contour point ({}, {}) outside {w}x{h} frame",
                p.x, p.y
            )));
        }
        for p in poly.filled().pixels() {
            mask.set(p.x as usize, p.y as usize, true);
        }
    }
    Ok(mask)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DenoiseConfig {
    pub max_merge_iterations: usize,
    /// Minimum component area as a fraction of the frame's pixel count.
    pub min_area_fraction: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            max_merge_iterations: 10,
            min_area_fraction: 0.001,
        }
    }
}

impl DenoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.min_area_fraction) {
            return Err(Error::InvalidArgument(format!(
                "min_area_fraction {} not in [0,1)",
                self.min_area_fraction
            )));
        }
        Ok(())
    }

    pub fn min_area(&self, dims: (usize, usize)) -> f64 {
        self.min_area_fraction * (dims.0 * dims.1) as f64
    }
}

/// Surviving polygons after merge, contour extraction and area filtering.
pub fn denoise_polygons(mask: &BinaryMask, config: &DenoiseConfig) -> Vec<PlumePolygon> {
    let merged = merge_by_closing(mask, config.max_merge_iterations);
    filter_by_area(get_contours(&merged), config.min_area(mask.dims()))
}

pub fn denoise(mask: &BinaryMask, config: &DenoiseConfig) -> Result<BinaryMask> {
    config.validate()?;
    let polygons = denoise_polygons(mask, config);
    reconstruct_mask(&polygons, mask.dims())
}

/// Debug export: one `componentId,pointIndex,x,y` row per contour point.
pub fn write_contours_csv<W: Write>(polygons: &[PlumePolygon], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["componentId", "pointIndex", "x", "y"])?;
    for poly in polygons {
        for (i, p) in poly.contour.iter().enumerate() {
            wtr.write_record(&[
                poly.component_id.to_string(),
                i.to_string(),
                p.x.to_string(),
                p.y.to_string(),
            ])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

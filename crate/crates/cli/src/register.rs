//! Image registration: segment both images, carry the first image's points
//! into the second through a planar pose, and measure how well they land.

use cfpose::geometry::PoseFrame;
use cfpose::{Model, Pose};
use cfpose_ingest::{segment_hsv, HsvThreshold, Intrinsics, Raster};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegisterConfig {
    pub threshold: HsvThreshold,
    pub intrinsics: Intrinsics,
    /// Plane `nᵀ M = d` carrying the pattern, in the first camera frame.
    pub normal: [f64; 3],
    pub offset: f64,
}

impl Default for RegisterConfig {
    fn default() -> Self {
        Self {
            threshold: HsvThreshold::default(),
            intrinsics: Intrinsics::new(800.0),
            normal: [0.0, 0.0, 1.0],
            offset: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationReport {
    pub theta: Pose,
    pub n_p: usize,
    pub n_q: usize,
    /// Points of the first image that land in front of the second camera.
    pub reprojected: usize,
    /// Reprojected points that fall inside the second image.
    pub in_frame: usize,
    pub mean_px: f64,
    pub p95_px: f64,
    pub max_px: f64,
    pub config: RegisterConfig,
}

/// Uniform-grid nearest-neighbour index over pixel positions.
struct PixelGrid {
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<[f64; 2]>>,
}

impl PixelGrid {
    fn new(points: &[[f64; 2]], width: u32, height: u32) -> Self {
        let cell = 8.0;
        let cols = (width as f64 / cell).ceil().max(1.0) as usize;
        let rows = (height as f64 / cell).ceil().max(1.0) as usize;
        let mut buckets = vec![Vec::new(); cols * rows];
        for p in points {
            let (c, r) = Self::clamp_cell(p, cell, cols, rows);
            buckets[r * cols + c].push(*p);
        }
        Self { cell, cols, rows, buckets }
    }

    fn clamp_cell(p: &[f64; 2], cell: f64, cols: usize, rows: usize) -> (usize, usize) {
        let c = (p[0] / cell).floor().clamp(0.0, (cols - 1) as f64) as usize;
        let r = (p[1] / cell).floor().clamp(0.0, (rows - 1) as f64) as usize;
        (c, r)
    }

    /// Exact nearest distance: rings of cells are scanned until no unscanned
    /// cell can hold a closer point.
    fn nearest(&self, x: &[f64; 2]) -> f64 {
        let (c0, r0) = Self::clamp_cell(x, self.cell, self.cols, self.rows);
        let mut best = f64::INFINITY;
        for ring in 0..=self.cols.max(self.rows) {
            // Clamping a query from outside the frame only moves it closer to
            // the cells, so the bound still holds.
            if (ring as f64 - 1.0).max(0.0) * self.cell > best {
                break;
            }
            let (ri, ci) = (ring as isize, ring as isize);
            for dr in -ri..=ri {
                for dc in -ci..=ci {
                    if dr.abs() != ri && dc.abs() != ci {
                        continue;
                    }
                    let (r, c) = (r0 as isize + dr, c0 as isize + dc);
                    if r < 0 || c < 0 || r >= self.rows as isize || c >= self.cols as isize {
                        continue;
                    }
                    for p in &self.buckets[r as usize * self.cols + c as usize] {
                        let d = ((p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)).sqrt();
                        best = best.min(d);
                    }
                }
            }
        }
        best
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    // Linear interpolation between closest ranks.
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Reprojects the segmented first image into the second and overlays both
/// point sets on a dimmed copy of the second image: its own points in red,
/// reprojected points in cyan.
pub fn register(p_img: &Raster, q_img: &Raster, theta: &Pose, cfg: &RegisterConfig) -> CliResult<(RegistrationReport, Raster)> {
    let intr = &cfg.intrinsics;
    let set_p = segment_hsv(p_img, &cfg.threshold, intr)?;
    let set_q = segment_hsv(q_img, &cfg.threshold, intr)?;
    let model = Model::homography(Vector3::from(cfg.normal), cfg.offset)?;
    let frame = PoseFrame::new(&model, theta)?;

    let q_px: Vec<[f64; 2]> = set_q
        .points()
        .iter()
        .map(|q| {
            let (x, y) = intr.to_pixel(q_img, q.x, q.y);
            [x, y]
        })
        .collect();
    let grid = PixelGrid::new(&q_px, q_img.width(), q_img.height());

    let mut reproj = Vec::with_capacity(set_p.len());
    for p in set_p.points() {
        let Ok(h) = frame.map(p) else { continue };
        if h.z <= 1e-12 {
            continue;
        }
        let (x, y) = intr.to_pixel(q_img, h.x / h.z, h.y / h.z);
        reproj.push([x, y]);
    }
    if reproj.is_empty() {
        return Err(CliError::new(
            crate::error::ExitKind::Estimation,
            "no point of the first image reprojects in front of the second camera",
        ));
    }
    let mut dist: Vec<f64> = reproj.iter().map(|x| grid.nearest(x)).collect();
    dist.sort_by(f64::total_cmp);

    let mut overlay = q_img.clone();
    for y in 0..overlay.height() {
        for x in 0..overlay.width() {
            let [r, g, b] = overlay.pixel(x, y);
            overlay.set_pixel(x, y, [r / 3, g / 3, b / 3]);
        }
    }
    let mut plot = |pts: &[[f64; 2]], rgb: [u8; 3]| {
        let mut inside = 0;
        for p in pts {
            let (x, y) = (p[0].round(), p[1].round());
            if x >= 0.0 && y >= 0.0 && x < overlay.width() as f64 && y < overlay.height() as f64 {
                overlay.set_pixel(x as u32, y as u32, rgb);
                inside += 1;
            }
        }
        inside
    };
    plot(&q_px, [255, 40, 40]);
    let in_frame = plot(&reproj, [0, 255, 255]);

    let report = RegistrationReport {
        theta: *theta,
        n_p: set_p.len(),
        n_q: set_q.len(),
        reprojected: reproj.len(),
        in_frame,
        mean_px: dist.iter().sum::<f64>() / dist.len() as f64,
        p95_px: percentile(&dist, 0.95),
        max_px: *dist.last().expect("nonempty"),
        config: *cfg,
    };
    Ok((report, overlay))
}

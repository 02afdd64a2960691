//! Planar footprint measurement on an adaptive occupancy grid.
//!
//! The island cloud is collapsed to `(X, Y)`, the cell size is derived from
//! the mean nearest-neighbour spacing as `s = max(2·dist_avg, 0.05)`, and
//! points are binned to `⌊(P − origin)/s⌋` with the origin at the data's
//! componentwise minimum. Area is `|cells|·s²`; perimeter counts the
//! 4-connected cell edges that border an empty cell. The perimeter therefore
//! measures taxicab length: a smooth curve is overestimated by up to `4/π`
//! (a disk of radius `r` converges to `8r`).

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::geom::PointCloud;
use crate::ingest::GrayImage;

/// Smallest cell size produced by [`grid_size`], in meters.
pub const MIN_CELL_SIZE: f64 = 0.05;
/// Above this many points the nearest-neighbour mean uses a stride subsample.
pub const NN_SUBSAMPLE_THRESHOLD: usize = 50_000;
/// Footprint images larger than this many pixels are refused.
pub const MAX_IMAGE_PIXELS: u64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FootprintError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("no points to rasterize")]
    EmptyInput,
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("cell size must be positive and finite, got {0}")]
    NonPositiveCellSize(f64),
    #[error("{points} points but {heights} heights")]
    LengthMismatch { points: usize, heights: usize },
    #[error("ground truth must be positive, got {0}")]
    NonPositiveGroundTruth(f64),
    #[error("footprint image of {width}×{height} cells is too large")]
    ImageTooLarge { width: u64, height: u64 },
}

/// `(X, Y)` of every point plus its retained `Z`, in input order.
pub fn drop_to_2d(cloud: &PointCloud) -> Result<(Vec<Point2<f64>>, Vec<f64>), FootprintError> {
    if cloud.is_empty() {
        return Err(FootprintError::EmptyCloud);
    }
    Ok(cloud.positions().iter().map(|p| (Point2::new(p.x, p.y), p.z)).unzip())
}

/// Uniform bins over the bounding box, stored CSR-style.
struct BinIndex {
    min: Point2<f64>,
    bin: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    members: Vec<u32>,
}

impl BinIndex {
    /// `None` when every point coincides.
    fn build(points: &[Point2<f64>]) -> Option<Self> {
        let n = points.len();
        let (min, max) = bounds_of(points);
        let (w, h) = (max.x - min.x, max.y - min.y);
        let extent = w.max(h);
        if extent <= 0.0 {
            return None;
        }
        // About two points per bin for 2D spreads; a line of bins when flat.
        let area = w * h;
        let mut bin = if area > 0.0 { (2.0 * area / n as f64).sqrt() } else { 2.0 * extent / n as f64 };
        bin = bin.max(extent * 1e-9);
        let cap = 4 * n + 16;
        let dims = |bin: f64| ((w / bin) as usize + 1, (h / bin) as usize + 1);
        let (mut nx, mut ny) = dims(bin);
        while nx.saturating_mul(ny) > cap {
            bin *= 1.5;
            (nx, ny) = dims(bin);
        }

        let index_of = |p: &Point2<f64>| {
            let bx = (((p.x - min.x) / bin) as usize).min(nx - 1);
            let by = (((p.y - min.y) / bin) as usize).min(ny - 1);
            by * nx + bx
        };
        let mut starts = vec![0u32; nx * ny + 1];
        for p in points {
            starts[index_of(p) + 1] += 1;
        }
        for i in 1..starts.len() {
            starts[i] += starts[i - 1];
        }
        let mut fill = starts.clone();
        let mut members = vec![0u32; n];
        for (i, p) in points.iter().enumerate() {
            let b = index_of(p);
            members[fill[b] as usize] = i as u32;
            fill[b] += 1;
        }
        Some(Self { min, bin, nx, ny, starts, members })
    }

    /// Distance from `points[query]` to the nearest other point.
    fn nearest_other(&self, points: &[Point2<f64>], query: usize) -> f64 {
        let q = points[query];
        let bx = (((q.x - self.min.x) / self.bin) as usize).min(self.nx - 1) as isize;
        let by = (((q.y - self.min.y) / self.bin) as usize).min(self.ny - 1) as isize;
        let mut best = f64::INFINITY;
        let max_ring = self.nx.max(self.ny) as isize;
        for ring in 0..=max_ring {
            for y in (by - ring)..=(by + ring) {
                if y < 0 || y >= self.ny as isize {
                    continue;
                }
                let on_edge_row = y == by - ring || y == by + ring;
                let step = if on_edge_row || ring == 0 { 1 } else { 2 * ring as usize };
                let mut x = bx - ring;
                while x <= bx + ring {
                    if x >= 0 && x < self.nx as isize {
                        let b = y as usize * self.nx + x as usize;
                        for &j in &self.members[self.starts[b] as usize..self.starts[b + 1] as usize] {
                            if j as usize != query {
                                let d2 = (points[j as usize] - q).norm_squared();
                                if d2 < best {
                                    best = d2;
                                }
                            }
                        }
                    }
                    x += step as isize;
                }
            }
            // Anything in ring + 1 or beyond is at least `ring·bin` away.
            if best.sqrt() <= ring as f64 * self.bin {
                break;
            }
        }
        best.sqrt()
    }
}

fn bounds_of(points: &[Point2<f64>]) -> (Point2<f64>, Point2<f64>) {
    points.iter().fold(
        (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(lo, hi), p| (Point2::new(lo.x.min(p.x), lo.y.min(p.y)), Point2::new(hi.x.max(p.x), hi.y.max(p.y))),
    )
}

/// Mean distance from each point to its nearest other point.
pub fn avg_nn_distance(points: &[Point2<f64>]) -> Result<f64, FootprintError> {
    avg_nn_distance_with(points, Execution::default())
}

/// As [`avg_nn_distance`]. Beyond [`NN_SUBSAMPLE_THRESHOLD`] points only every
/// `⌈N/50 000⌉`-th point is queried, still against the full set.
pub fn avg_nn_distance_with(points: &[Point2<f64>], exec: Execution) -> Result<f64, FootprintError> {
    let n = points.len();
    if n < 2 {
        return Err(FootprintError::TooFewPoints(n));
    }
    let Some(index) = BinIndex::build(points) else {
        return Ok(0.0);
    };
    let stride = if n > NN_SUBSAMPLE_THRESHOLD { n.div_ceil(NN_SUBSAMPLE_THRESHOLD) } else { 1 };
    let queries: Vec<usize> = (0..n).step_by(stride).collect();

    #[cfg(feature = "parallel")]
    let distances: Vec<f64> = if exec.is_parallel() {
        use rayon::prelude::*;
        queries.par_iter().map(|&i| index.nearest_other(points, i)).collect()
    } else {
        queries.iter().map(|&i| index.nearest_other(points, i)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let distances: Vec<f64> = {
        let _ = exec;
        queries.iter().map(|&i| index.nearest_other(points, i)).collect()
    };

    // Summed in query order so both schedules give bit-identical means.
    Ok(distances.iter().sum::<f64>() / distances.len() as f64)
}

/// `max(2·dist_avg, 0.05)` meters.
pub fn grid_size(dist_avg: f64) -> f64 {
    (2.0 * dist_avg).max(MIN_CELL_SIZE)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupiedCell {
    pub ix: i64,
    pub iy: i64,
    /// Highest `Z` of the points in the cell.
    pub max_z: f64,
}

/// Occupied cells sorted by `(ix, iy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    cell_size: f64,
    origin: Point2<f64>,
    cells: Vec<OccupiedCell>,
}

impl OccupancyGrid {
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> Point2<f64> {
        self.origin
    }

    pub fn cells(&self) -> &[OccupiedCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, ix: i64, iy: i64) -> bool {
        self.find(ix, iy).is_some()
    }

    fn find(&self, ix: i64, iy: i64) -> Option<usize> {
        self.cells.binary_search_by(|c| (c.ix, c.iy).cmp(&(ix, iy))).ok()
    }

    /// `(min_ix, min_iy, max_ix, max_iy)`.
    pub fn index_bounds(&self) -> Option<(i64, i64, i64, i64)> {
        let first = self.cells.first()?;
        let init = (first.ix, first.iy, first.ix, first.iy);
        Some(self.cells.iter().fold(init, |(a, b, c, d), cell| {
            (a.min(cell.ix), b.min(cell.iy), c.max(cell.ix), d.max(cell.iy))
        }))
    }
}

/// Bins points with the origin at their componentwise minimum.
pub fn rasterize(points: &[Point2<f64>], heights: &[f64], cell_size: f64) -> Result<OccupancyGrid, FootprintError> {
    rasterize_with(points, heights, cell_size, Execution::default())
}

pub fn rasterize_with(
    points: &[Point2<f64>],
    heights: &[f64],
    cell_size: f64,
    exec: Execution,
) -> Result<OccupancyGrid, FootprintError> {
    if points.is_empty() {
        return Err(FootprintError::EmptyInput);
    }
    let (origin, _) = bounds_of(points);
    rasterize_with_origin(points, heights, cell_size, origin, exec)
}

/// Bins points to `⌊(P − origin)/s⌋` keeping the per-cell maximum height.
pub fn rasterize_with_origin(
    points: &[Point2<f64>],
    heights: &[f64],
    cell_size: f64,
    origin: Point2<f64>,
    exec: Execution,
) -> Result<OccupancyGrid, FootprintError> {
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(FootprintError::NonPositiveCellSize(cell_size));
    }
    if points.is_empty() {
        return Err(FootprintError::EmptyInput);
    }
    if points.len() != heights.len() {
        return Err(FootprintError::LengthMismatch { points: points.len(), heights: heights.len() });
    }
    let key = |p: &Point2<f64>, z: f64| OccupiedCell {
        ix: ((p.x - origin.x) / cell_size).floor() as i64,
        iy: ((p.y - origin.y) / cell_size).floor() as i64,
        max_z: z,
    };

    let mut keyed: Vec<OccupiedCell>;
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            use rayon::prelude::*;
            keyed = points.par_iter().zip(heights.par_iter()).map(|(p, &z)| key(p, z)).collect();
            keyed.par_sort_unstable_by_key(|c| (c.ix, c.iy));
        } else {
            keyed = points.iter().zip(heights).map(|(p, &z)| key(p, z)).collect();
            keyed.sort_unstable_by_key(|c| (c.ix, c.iy));
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = exec;
        keyed = points.iter().zip(heights).map(|(p, &z)| key(p, z)).collect();
        keyed.sort_unstable_by_key(|c| (c.ix, c.iy));
    }

    // Equal keys are adjacent; max is order-independent so the unstable sort is fine.
    let mut cells: Vec<OccupiedCell> = Vec::new();
    for c in keyed {
        match cells.last_mut() {
            Some(last) if last.ix == c.ix && last.iy == c.iy => last.max_z = last.max_z.max(c.max_z),
            _ => cells.push(c),
        }
    }
    Ok(OccupancyGrid { cell_size, origin, cells })
}

/// `|U_cells|·s²`.
pub fn area(grid: &OccupancyGrid) -> f64 {
    grid.len() as f64 * grid.cell_size * grid.cell_size
}

/// Number of cell edges whose 4-neighbour is unoccupied.
pub fn boundary_edge_count(grid: &OccupancyGrid, exec: Execution) -> u64 {
    let cells = &grid.cells;
    let exposed = |i: usize| -> u64 {
        let c = cells[i];
        let up = cells.get(i + 1).is_some_and(|n| n.ix == c.ix && n.iy == c.iy + 1);
        let down = i > 0 && cells[i - 1].ix == c.ix && cells[i - 1].iy == c.iy - 1;
        let left = grid.contains(c.ix - 1, c.iy);
        let right = grid.contains(c.ix + 1, c.iy);
        [up, down, left, right].iter().filter(|&&b| !b).count() as u64
    };
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..cells.len()).into_par_iter().map(exposed).sum();
    }
    let _ = exec;
    (0..cells.len()).map(exposed).sum()
}

/// Taxicab boundary length `s·(exposed edges)`.
pub fn perimeter(grid: &OccupancyGrid) -> f64 {
    perimeter_with(grid, Execution::default())
}

pub fn perimeter_with(grid: &OccupancyGrid, exec: Execution) -> f64 {
    boundary_edge_count(grid, exec) as f64 * grid.cell_size
}

/// A top-down raster of the grid with its placement in the world.
///
/// Column `c` holds cells `ix = min_ix + c`; row `r` holds `iy = max_iy − r`,
/// so north (+y) is up. `origin` is the world position of the lower-left
/// corner of the bottom-left pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoImage {
    pub image: GrayImage,
    pub origin: Point2<f64>,
    pub cell_size: f64,
}

fn raster_layout(grid: &OccupancyGrid) -> Result<(i64, i64, u32, u32), FootprintError> {
    let (min_ix, min_iy, max_ix, max_iy) = grid.index_bounds().ok_or(FootprintError::EmptyInput)?;
    let width = (max_ix - min_ix) as u64 + 1;
    let height = (max_iy - min_iy) as u64 + 1;
    if width > u32::MAX as u64 || height > u32::MAX as u64 || width * height > MAX_IMAGE_PIXELS {
        return Err(FootprintError::ImageTooLarge { width, height });
    }
    Ok((min_ix, max_iy, width as u32, height as u32))
}

fn render(grid: &OccupancyGrid, value: impl Fn(&OccupiedCell) -> u8) -> Result<GeoImage, FootprintError> {
    let (min_ix, max_iy, width, height) = raster_layout(grid)?;
    let mut data = vec![0u8; width as usize * height as usize];
    for c in &grid.cells {
        let col = (c.ix - min_ix) as usize;
        let row = (max_iy - c.iy) as usize;
        data[row * width as usize + col] = value(c);
    }
    let min_iy = max_iy - (height as i64 - 1);
    Ok(GeoImage {
        image: GrayImage::new(width, height, data).expect("layout matches buffer"),
        origin: Point2::new(
            grid.origin.x + min_ix as f64 * grid.cell_size,
            grid.origin.y + min_iy as f64 * grid.cell_size,
        ),
        cell_size: grid.cell_size,
    })
}

/// Occupied cells white (255), empty cells black.
pub fn footprint_image(grid: &OccupancyGrid) -> Result<GeoImage, FootprintError> {
    render(grid, |_| 255)
}

/// Per-cell `⌊255·(z − z_min)/(z_max − z_min)⌋`; all occupied cells are 255
/// when the heights are flat, empty cells 0.
pub fn height_map(grid: &OccupancyGrid) -> Result<GeoImage, FootprintError> {
    let (z_min, z_max) = grid
        .cells
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.max_z), hi.max(c.max_z)));
    let range = z_max - z_min;
    render(grid, |c| {
        if range > 0.0 {
            (255.0 * (c.max_z - z_min) / range).floor().clamp(0.0, 255.0) as u8
        } else {
            255
        }
    })
}

/// Signed relative error in percent.
pub fn relative_error(estimate: f64, ground_truth: f64) -> Result<f64, FootprintError> {
    if !(ground_truth > 0.0 && ground_truth.is_finite()) {
        return Err(FootprintError::NonPositiveGroundTruth(ground_truth));
    }
    Ok(100.0 * (estimate - ground_truth) / ground_truth)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementReport {
    pub area_m2: f64,
    pub perimeter_m: f64,
    pub cell_size_m: f64,
    pub cell_count: u64,
    pub dist_avg_m: f64,
    pub bounds: Bounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_error_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub report: MeasurementReport,
    pub grid: OccupancyGrid,
}

/// Rasterizes an island cloud and measures it.
///
/// `cell_size` overrides the adaptive `max(2·dist_avg, 0.05)`; with an
/// override a single-point cloud is accepted and reports `dist_avg_m = 0`.
pub fn measure(
    cloud: &PointCloud,
    cell_size: Option<f64>,
    ground_truth_m2: Option<f64>,
    exec: Execution,
) -> Result<Measurement, FootprintError> {
    let (points, heights) = drop_to_2d(cloud)?;
    let dist_avg = match (cell_size, points.len()) {
        (Some(_), 1) => 0.0,
        _ => avg_nn_distance_with(&points, exec)?,
    };
    let s = match cell_size {
        Some(s) if !(s > 0.0 && s.is_finite()) => return Err(FootprintError::NonPositiveCellSize(s)),
        Some(s) => s,
        None => grid_size(dist_avg),
    };
    let grid = rasterize_with(&points, &heights, s, exec)?;
    let a = area(&grid);
    let relative_error_percent = ground_truth_m2.map(|gt| relative_error(a, gt)).transpose()?;
    let (lo, hi) = bounds_of(&points);
    Ok(Measurement {
        report: MeasurementReport {
            area_m2: a,
            perimeter_m: perimeter_with(&grid, exec),
            cell_size_m: s,
            cell_count: grid.len() as u64,
            dist_avg_m: dist_avg,
            bounds: Bounds { min_x: lo.x, min_y: lo.y, max_x: hi.x, max_y: hi.y },
            relative_error_percent,
        },
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    fn lattice(nx: usize, ny: usize, step: f64) -> Vec<Point2<f64>> {
        (0..nx).flat_map(|i| (0..ny).map(move |j| Point2::new(i as f64 * step, j as f64 * step))).collect()
    }

    fn grid_of(points: &[Point2<f64>], s: f64) -> OccupancyGrid {
        rasterize(points, &vec![0.0; points.len()], s).unwrap()
    }

    #[test]
    fn drop_keeps_order_and_height() {
        let cloud = PointCloud::new(vec![Point3::new(1.0, 2.0, 3.0), Point3::new(4.0, 5.0, 6.0), Point3::new(7.0, 8.0, 9.0)])
            .unwrap();
        let (p, z) = drop_to_2d(&cloud).unwrap();
        assert_eq!(p, vec![Point2::new(1.0, 2.0), Point2::new(4.0, 5.0), Point2::new(7.0, 8.0)]);
        assert_eq!(z, vec![3.0, 6.0, 9.0]);
        assert_eq!(drop_to_2d(&PointCloud::default()), Err(FootprintError::EmptyCloud));
    }

    #[test]
    fn nn_examples() {
        assert_eq!(avg_nn_distance(&[Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)]).unwrap(), 1.0);
        assert_eq!(avg_nn_distance(&lattice(10, 10, 1.0)).unwrap(), 1.0);
        assert_eq!(avg_nn_distance(&[Point2::new(0.0, 0.0)]), Err(FootprintError::TooFewPoints(1)));
        assert_eq!(avg_nn_distance(&[Point2::new(3.0, 3.0); 4]).unwrap(), 0.0);
        // Collinear spread and duplicates.
        let line = [Point2::new(0.0, 1.0), Point2::new(2.0, 1.0), Point2::new(2.0, 1.0), Point2::new(5.0, 1.0)];
        assert_eq!(avg_nn_distance(&line).unwrap(), (2.0 + 0.0 + 0.0 + 3.0) / 4.0);
    }

    #[test]
    fn grid_size_examples() {
        assert_eq!(grid_size(0.01), 0.05);
        assert_eq!(grid_size(0.2), 0.4);
        assert_eq!(grid_size(0.025), 0.05);
    }

    #[test]
    fn rasterize_examples() {
        let g = grid_of(&[Point2::new(-4.2, 17.0)], 0.3);
        assert_eq!(g.len(), 1);
        let g = grid_of(&[Point2::new(0.1, 0.1), Point2::new(0.9, 0.9)], 0.5);
        let keys: Vec<_> = g.cells().iter().map(|c| (c.ix, c.iy)).collect();
        assert_eq!(keys, vec![(0, 0), (1, 1)]);
        assert_eq!(rasterize(&[], &[], 1.0), Err(FootprintError::EmptyInput));
        assert_eq!(rasterize(&[Point2::origin()], &[0.0], 0.0), Err(FootprintError::NonPositiveCellSize(0.0)));
    }

    #[test]
    fn max_height_per_cell() {
        let pts = [Point2::new(0.1, 0.1), Point2::new(0.2, 0.2), Point2::new(1.5, 0.1)];
        let g = rasterize(&pts, &[3.0, 7.0, -1.0], 1.0).unwrap();
        assert_eq!(g.cells()[0].max_z, 7.0);
        assert_eq!(g.cells()[1].max_z, -1.0);
    }

    #[test]
    fn area_and_perimeter_examples() {
        let one = grid_of(&[Point2::origin()], 0.5);
        assert_eq!(area(&one), 0.25);
        assert_eq!(perimeter(&one), 2.0);
        let block = grid_of(&lattice(10, 10, 1.0), 1.0);
        assert_eq!(area(&block), 100.0);
        assert_eq!(perimeter(&block), 40.0);
        let rect = grid_of(&lattice(7, 3, 1.0), 1.0);
        assert_eq!(perimeter(&rect), 2.0 * (7.0 + 3.0));
        // A ring has inner and outer boundary.
        let ring: Vec<_> = lattice(3, 3, 1.0).into_iter().filter(|p| *p != Point2::new(1.0, 1.0)).collect();
        assert_eq!(perimeter(&grid_of(&ring, 1.0)), 16.0);
    }

    #[test]
    fn images() {
        let single = footprint_image(&grid_of(&[Point2::origin()], 1.0)).unwrap();
        assert_eq!((single.image.width(), single.image.height()), (1, 1));
        assert_eq!(single.image.data(), &[255]);

        // L: cells (0,0), (1,0), (0,1). Row 0 is iy = 1.
        let l = grid_of(&[Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)], 1.0);
        let img = footprint_image(&l).unwrap();
        assert_eq!((img.image.width(), img.image.height()), (2, 2));
        assert_eq!(img.image.data(), &[255, 0, 255, 255]);
        assert_eq!(img.origin, Point2::origin());
    }

    #[test]
    fn height_map_examples() {
        let pts = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)];
        let g = rasterize(&pts, &[0.0, 5.0, 10.0], 1.0).unwrap();
        assert_eq!(height_map(&g).unwrap().image.data(), &[0, 127, 255]);
        let flat = rasterize(&pts[..2], &[4.0, 4.0], 1.0).unwrap();
        assert_eq!(height_map(&flat).unwrap().image.data(), &[255, 255]);
        let gap = rasterize(&[pts[0], pts[2]], &[1.0, 2.0], 1.0).unwrap();
        assert_eq!(height_map(&gap).unwrap().image.data(), &[0, 0, 255]);
    }

    #[test]
    fn relative_error_examples() {
        assert!((relative_error(56_685.68, 59_560.0).unwrap() - -4.83).abs() < 0.01);
        assert!((relative_error(623_323.31, 696_000.0).unwrap() - -10.44).abs() < 0.01);
        assert_eq!(relative_error(5.0, 5.0).unwrap(), 0.0);
        assert_eq!(relative_error(5.0, 0.0), Err(FootprintError::NonPositiveGroundTruth(0.0)));
    }

    #[test]
    fn measure_with_override() {
        let cloud = PointCloud::new(vec![Point3::new(0.0, 0.0, 1.0)]).unwrap();
        let m = measure(&cloud, Some(1.0), Some(2.0), Execution::Sequential).unwrap();
        assert_eq!(m.report.cell_size_m, 1.0);
        assert_eq!(m.report.area_m2, 1.0);
        assert_eq!(m.report.relative_error_percent, Some(-50.0));
        assert_eq!(measure(&cloud, None, None, Execution::Sequential).unwrap_err(), FootprintError::TooFewPoints(1));
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{lit, usize_as, Point, Real};

/// Axis-aligned rectangle with a scan resolution per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion<T> {
    pub x_min: T,
    pub x_max: T,
    pub y_min: T,
    pub y_max: T,
    #[serde(default = "default_resolution")]
    pub scan_resolution: usize,
}

pub const DEFAULT_SCAN_RESOLUTION: usize = 256;

fn default_resolution() -> usize {
    DEFAULT_SCAN_RESOLUTION
}

impl<T: Real> SearchRegion<T> {
    pub fn new(x_min: T, x_max: T, y_min: T, y_max: T, scan_resolution: usize) -> Result<Self> {
        let r = SearchRegion { x_min, x_max, y_min, y_max, scan_resolution };
        r.validate()?;
        Ok(r)
    }

    /// `[-half, half]^2` at the default resolution.
    pub fn square(half: T) -> Self {
        SearchRegion { x_min: -half, x_max: half, y_min: -half, y_max: half, scan_resolution: DEFAULT_SCAN_RESOLUTION }
    }

    pub fn with_resolution(mut self, scan_resolution: usize) -> Self {
        self.scan_resolution = scan_resolution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if !finite || !(self.x_min < self.x_max) || !(self.y_min < self.y_max) {
            return Err(Error::InvalidParameter(format!(
                "region [{}, {}] x [{}, {}] is empty or non-finite",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        if self.scan_resolution < 16 {
            return Err(Error::InvalidParameter(format!("scan_resolution {} < 16", self.scan_resolution)));
        }
        Ok(())
    }

    pub fn contains(&self, p: Point<T>) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    pub fn center(&self) -> Point<T> {
        let half = lit::<T>(0.5);
        [(self.x_min + self.x_max) * half, (self.y_min + self.y_max) * half]
    }

    pub fn width(&self) -> T {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> T {
        self.y_max - self.y_min
    }

    /// Cell spacing `(dx, dy)` of an `nx` by `ny` cell-centred grid.
    pub fn spacing(&self, nx: usize, ny: usize) -> Point<T> {
        [self.width() / usize_as::<T>(nx), self.height() / usize_as::<T>(ny)]
    }

    /// Centre of cell `(i, j)` of an `nx` by `ny` grid.
    pub fn cell_center(&self, nx: usize, ny: usize, i: usize, j: usize) -> Point<T> {
        let [dx, dy] = self.spacing(nx, ny);
        let half = lit::<T>(0.5);
        [self.x_min + (usize_as::<T>(i) + half) * dx, self.y_min + (usize_as::<T>(j) + half) * dy]
    }
}

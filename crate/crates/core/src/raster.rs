//! Raster data model.
//!
//! An [`ImagePlane`] is a single band of finite real samples stored row-major.
//! A [`MultibandVolume`] stacks planes of identical size. Samples nominally
//! live in `[0, 1]`; importers divide by the source bit depth maximum.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyPlane { width, height });
        }
        if data.len() != width * height {
            return Err(Error::SampleCount {
                width,
                height,
                actual: data.len(),
            });
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds a plane from a generator called as `f(row, col)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(width, height, data)
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Internal constructor for arithmetic results whose inputs were already
    /// validated; only checked in debug builds.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.data
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Sample with periodic wrap-around on both axes.
    #[inline]
    pub fn get_wrapped(&self, row: isize, col: isize) -> f64 {
        let r = row.rem_euclid(self.height as isize) as usize;
        let c = col.rem_euclid(self.width as isize) as usize;
        self.data[r * self.width + c]
    }

    /// Sample with coordinates clamped to the border.
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.data[r * self.width + c]
    }

    pub fn same_dims(&self, other: &ImagePlane) -> bool {
        self.dims() == other.dims()
    }

    pub(crate) fn ensure_same_dims(&self, other: &ImagePlane, what: &str) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    /// Elementwise map. Panics in debug builds if `f` produces non-finite values.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImagePlane {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        debug_assert!(data.iter().all(|v| v.is_finite()));
        ImagePlane::from_raw(self.width, self.height, data)
    }

    pub fn scale(&self, k: f64) -> ImagePlane {
        self.map(|v| v * k)
    }

    /// `self + k * other`; dimensions must match.
    pub fn add_scaled(&self, other: &ImagePlane, k: f64) -> Result<ImagePlane> {
        self.ensure_same_dims(other, "add_scaled")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + k * b)
            .collect();
        Ok(ImagePlane::from_raw(self.width, self.height, data))
    }

    pub fn sub(&self, other: &ImagePlane) -> Result<ImagePlane> {
        self.add_scaled(other, -1.0)
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Copies the `w`x`h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<ImagePlane> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::InvalidArgument(format!(
                "crop {w}x{h}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h);
        for r in y0..y0 + h {
            data.extend_from_slice(&self.data[r * self.width + x0..r * self.width + x0 + w]);
        }
        Ok(ImagePlane::from_raw(w, h, data))
    }

    /// Integer circular shift: `out[r][c] = in[r + dy][c + dx]` (indices wrap).
    pub fn roll(&self, dx: isize, dy: isize) -> ImagePlane {
        let (w, h) = (self.width as isize, self.height as isize);
        let mut data = Vec::with_capacity(self.data.len());
        for r in 0..h {
            let sr = (r + dy).rem_euclid(h) as usize;
            for c in 0..w {
                let sc = (c + dx).rem_euclid(w) as usize;
                data.push(self.data[sr * self.width + sc]);
            }
        }
        ImagePlane::from_raw(self.width, self.height, data)
    }
}

/// Divides every sample by `source_max`.
pub fn normalize(plane: &ImagePlane, source_max: f64) -> Result<ImagePlane> {
    if !(source_max > 0.0) || !source_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "source_max must be positive and finite, got {source_max}"
        )));
    }
    if let Some((index, &value)) = plane.data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    Ok(plane.map(|v| v / source_max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultibandVolume {
    bands: Vec<ImagePlane>,
    labels: Vec<String>,
}

impl MultibandVolume {
    /// Bands are labelled `b1`, `b2`, ... in order.
    pub fn new(bands: Vec<ImagePlane>) -> Result<Self> {
        let labels = (1..=bands.len()).map(|i| format!("b{i}")).collect();
        Self::with_labels(bands, labels)
    }

    pub fn with_labels(bands: Vec<ImagePlane>, labels: Vec<String>) -> Result<Self> {
        let first = bands.first().ok_or(Error::EmptyVolume)?;
        if labels.len() != bands.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} bands",
                labels.len(),
                bands.len()
            )));
        }
        for (i, b) in bands.iter().enumerate().skip(1) {
            if !b.same_dims(first) {
                return Err(Error::DimensionMismatch(format!(
                    "band {i} is {}x{}, band 0 is {}x{}",
                    b.width(),
                    b.height(),
                    first.width(),
                    first.height()
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if l.is_empty() || !seen.insert(l.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "band labels must be unique and non-empty, got {l:?}"
                )));
            }
        }
        Ok(Self { bands, labels })
    }

    pub fn bands(&self) -> &[ImagePlane] {
        &self.bands
    }

    pub fn band(&self, i: usize) -> &ImagePlane {
        &self.bands[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn width(&self) -> usize {
        self.bands[0].width()
    }

    pub fn height(&self) -> usize {
        self.bands[0].height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.bands[0].dims()
    }

    pub fn into_bands(self) -> Vec<ImagePlane> {
        self.bands
    }

    /// Applies `f` to every band and keeps the labels.
    pub fn try_map_bands(
        &self,
        f: impl Fn(&ImagePlane) -> Result<ImagePlane>,
    ) -> Result<MultibandVolume> {
        let bands = self.bands.iter().map(f).collect::<Result<Vec<_>>>()?;
        MultibandVolume::with_labels(bands, self.labels.clone())
    }
}

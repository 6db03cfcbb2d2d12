//! Dense 2D buffers shared by the renderer, the losses and the IO layer.
//!
//! All buffers are row-major with `(x, y)` addressing, `x` along the width.

use crate::error::{Error, Result};

/// Binary image. Foreground pixels are `true`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "mask data has {} entries, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    /// Mask as a 0/1 real-valued map.
    pub fn to_map(&self) -> ScalarMap {
        ScalarMap {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn invert(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| !v).collect(),
        }
    }

    /// Euclidean dilation by a disk of `radius` pixels.
    pub fn dilate(&self, radius: f64) -> Mask {
        if self.is_empty() {
            return self.clone();
        }
        let dist = crate::loss::squared_distance_to_foreground(self);
        let r2 = radius * radius;
        Mask {
            width: self.width,
            height: self.height,
            data: dist.iter().map(|&d| (d as f64) <= r2).collect(),
        }
    }

    /// Euclidean erosion by a disk of `radius` pixels.
    pub fn erode(&self, radius: f64) -> Mask {
        let inv = self.invert();
        if inv.is_empty() {
            return self.clone();
        }
        inv.dilate(radius).invert()
    }

    /// Foreground centroid in continuous pixel coordinates (pixel centres at
    /// `i + 0.5`), or `None` for an empty mask.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    sx += x as f64 + 0.5;
                    sy += y as f64 + 0.5;
                    n += 1;
                }
            }
        }
        (n > 0).then(|| (sx / n as f64, sy / n as f64))
    }
}

/// Single-channel real-valued image (silhouettes, depth, distance maps).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarMap {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "map data has {} entries, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, data })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Binarize with `value > threshold`.
    pub fn threshold(&self, threshold: f64) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v > threshold).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilation_contains_original_and_grows_by_radius() {
        let mut m = Mask::new(11, 11);
        m.set(5, 5, true);
        let d = m.dilate(2.0);
        assert!(d.get(5, 5));
        assert!(d.get(7, 5));
        assert!(d.get(5, 3));
        assert!(!d.get(7, 7)); // sqrt(8) > 2
        assert_eq!(d.count(), 13);
        let e = d.erode(2.0);
        assert!(e.get(5, 5));
        assert!(e.count() <= d.count());
    }

    #[test]
    fn centroid_of_block() {
        let m = Mask::from_fn(6, 4, |x, y| (2..4).contains(&x) && y < 2);
        assert_eq!(m.centroid(), Some((3.0, 1.0)));
        assert_eq!(Mask::new(3, 3).centroid(), None);
    }
}

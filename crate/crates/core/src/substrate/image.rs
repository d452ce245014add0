//! Row-major grayscale images with values in `[0, 1]`.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::from_pixels(rows, cols, vec![value; rows * cols])
    }

    /// Validates the shape and that every pixel lies in `[0, 1]`.
    pub fn from_pixels(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || pixels.len() != rows * cols {
            return invalid(format!(
                "image {rows}x{cols} needs {} pixels, got {}",
                rows * cols,
                pixels.len()
            ));
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return invalid(format!(
                "pixel {} at ({}, {}) outside [0, 1]",
                pixels[i],
                i / cols,
                i % cols
            ));
        }
        Ok(Self { rows, cols, pixels })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                pixels.push(f(r, c));
            }
        }
        Self::from_pixels(rows, cols, pixels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.cols + col]
    }

    /// Copy of the `rows x cols` window whose top-left corner is `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, rows: usize, cols: usize) -> Result<Image> {
        if top + rows > self.rows || left + cols > self.cols {
            return invalid(format!(
                "crop {rows}x{cols} at ({top}, {left}) exceeds image {}x{}",
                self.rows, self.cols
            ));
        }
        Image::from_fn(rows, cols, |r, c| self.get(top + r, left + c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(Image::from_pixels(1, 2, vec![0.5, 1.5]).is_err());
        assert!(Image::from_pixels(1, 2, vec![0.5, f64::NAN]).is_err());
        assert!(Image::from_pixels(2, 2, vec![0.5; 3]).is_err());
    }

    #[test]
    fn crop_copies_window() {
        let img = Image::from_fn(4, 5, |r, c| (r * 5 + c) as f64 / 20.0).unwrap();
        let w = img.crop(1, 2, 2, 3).unwrap();
        assert_eq!(w.get(0, 0), img.get(1, 2));
        assert_eq!(w.get(1, 2), img.get(2, 4));
        assert!(img.crop(3, 0, 2, 1).is_err());
    }
}

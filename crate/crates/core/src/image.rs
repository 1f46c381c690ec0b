use crate::error::{Error, Result};

/// Row-major 2D image of `f64` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Image2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Image2 {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Image2 {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} samples cannot fill {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Image2 { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Image2 { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Image2 {
        Image2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Image2 {
        self.map(|v| a * v)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    /// Bilinear sample at fractional (row, col); zero outside the grid.
    #[inline]
    pub fn sample_bilinear(&self, r: f64, c: f64) -> f64 {
        if !(r > -1.0 && c > -1.0 && r < self.rows as f64 && c < self.cols as f64) {
            return 0.0;
        }
        let r0 = r.floor();
        let c0 = c.floor();
        let fr = r - r0;
        let fc = c - c0;
        let r0 = r0 as isize;
        let c0 = c0 as isize;
        let at = |rr: isize, cc: isize| -> f64 {
            if rr < 0 || cc < 0 || rr >= self.rows as isize || cc >= self.cols as isize {
                0.0
            } else {
                self.data[rr as usize * self.cols + cc as usize]
            }
        };
        let top = at(r0, c0) * (1.0 - fc) + at(r0, c0 + 1) * fc;
        let bottom = at(r0 + 1, c0) * (1.0 - fc) + at(r0 + 1, c0 + 1) * fc;
        top * (1.0 - fr) + bottom * fr
    }

    /// Sub-image starting at (r0, c0).
    pub fn crop(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Result<Image2> {
        if r0 + rows > self.rows || c0 + cols > self.cols {
            return Err(Error::Shape(format!(
                "crop {rows}x{cols} at ({r0},{c0}) exceeds {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(Image2::from_fn(rows, cols, |r, c| self.get(r0 + r, c0 + c)))
    }

    /// 2×2 mean pooling; a trailing odd row/column is dropped.
    pub fn downsample2(&self) -> Image2 {
        let rows = self.rows / 2;
        let cols = self.cols / 2;
        Image2::from_fn(rows, cols, |r, c| {
            0.25 * (self.get(2 * r, 2 * c)
                + self.get(2 * r, 2 * c + 1)
                + self.get(2 * r + 1, 2 * c)
                + self.get(2 * r + 1, 2 * c + 1))
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_matches_grid_and_midpoints() {
        let img = Image2::from_fn(3, 3, |r, c| (r * 3 + c) as f64);
        assert_eq!(img.sample_bilinear(1.0, 2.0), 5.0);
        assert!((img.sample_bilinear(0.5, 0.5) - 2.0).abs() < 1e-12);
        assert_eq!(img.sample_bilinear(-2.0, 0.0), 0.0);
    }

    #[test]
    fn downsample_means() {
        let img = Image2::from_fn(4, 4, |r, c| (r + c) as f64);
        let d = img.downsample2();
        assert_eq!(d.shape(), (2, 2));
        assert!((d.get(0, 0) - 1.0).abs() < 1e-12);
    }
}

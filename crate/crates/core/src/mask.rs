//! Binary segmentation masks and their 8-bit file encoding.
//!
//! On read any byte `>= 128` is foreground; on write foreground is 255 and
//! background 0.

use std::collections::VecDeque;
use std::path::Path;

use crate::error::{FcsnError, Result};
use crate::grid::{read_gray8, write_gray8, Grid};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(FcsnError::ShapeMismatch(format!(
                "mask must be at least 1x1, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(FcsnError::ShapeMismatch(format!(
                "{} labels for a {height}x{width} mask",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|&&v| v > 1) {
            return Err(FcsnError::InvalidParameter(format!(
                "mask label {bad} is not 0 or 1"
            )));
        }
        Ok(BinaryMask {
            height,
            width,
            data,
        })
    }

    /// All-background mask. Panics on a zero dimension.
    pub fn empty(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "mask dimensions must be positive");
        BinaryMask {
            height,
            width,
            data: vec![0; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::empty(height, width);
        for r in 0..height {
            for c in 0..width {
                if f(r, c) {
                    m.data[r * width + c] = 1;
                }
            }
        }
        m
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.width + c] != 0
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, fg: bool) {
        self.data[r * self.width + c] = fg as u8;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Foreground pixel coordinates in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(move |(i, _)| (i / self.width, i % self.width))
    }

    /// 8-connected foreground components, each as a list of linear indices,
    /// ordered by their first pixel in scan order.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let (h, w) = (self.height as isize, self.width as isize);
        let mut seen = vec![false; self.data.len()];
        let mut out = Vec::new();
        for start in 0..self.data.len() {
            if self.data[start] == 0 || seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                let (r, c) = ((i / self.width) as isize, (i % self.width) as isize);
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (nr, nc) = (r + dr, c + dc);
                        if nr < 0 || nc < 0 || nr >= h || nc >= w {
                            continue;
                        }
                        let j = (nr * w + nc) as usize;
                        if self.data[j] != 0 && !seen[j] {
                            seen[j] = true;
                            comp.push(j);
                            queue.push_back(j);
                        }
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// The largest 8-connected component; ties go to the component whose
    /// first pixel comes earliest in scan order.
    pub fn largest_component(&self) -> Result<BinaryMask> {
        let comps = self.components();
        let best = comps
            .iter()
            .enumerate()
            .max_by_key(|(i, c)| (c.len(), std::cmp::Reverse(*i)))
            .map(|(_, c)| c)
            .ok_or(FcsnError::EmptyMask)?;
        let mut m = BinaryMask::empty(self.height, self.width);
        for &i in best {
            m.data[i] = 1;
        }
        Ok(m)
    }

    /// Background regions not 4-connected to the frame, i.e. holes.
    pub fn holes(&self) -> BinaryMask {
        let (h, w) = (self.height, self.width);
        let mut outside = vec![false; self.data.len()];
        let mut queue = VecDeque::new();
        for r in 0..h {
            for c in 0..w {
                if (r == 0 || c == 0 || r + 1 == h || c + 1 == w) && self.data[r * w + c] == 0 {
                    outside[r * w + c] = true;
                    queue.push_back(r * w + c);
                }
            }
        }
        while let Some(i) = queue.pop_front() {
            let (r, c) = (i / w, i % w);
            let mut visit = |j: usize| {
                if self.data[j] == 0 && !outside[j] {
                    outside[j] = true;
                    queue.push_back(j);
                }
            };
            if r > 0 {
                visit(i - w);
            }
            if r + 1 < h {
                visit(i + w);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < w {
                visit(i + 1);
            }
        }
        BinaryMask {
            height: h,
            width: w,
            data: self
                .data
                .iter()
                .zip(&outside)
                .map(|(&v, &o)| (v == 0 && !o) as u8)
                .collect(),
        }
    }

    pub fn fill_holes(&self) -> BinaryMask {
        let holes = self.holes();
        BinaryMask {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .zip(&holes.data)
                .map(|(&a, &b)| a | b)
                .collect(),
        }
    }

    pub fn to_grid(&self) -> Grid {
        Grid::from_fn(self.height, self.width, |r, c| self.get(r, c) as u8 as f64)
    }

    pub fn read(path: &Path) -> Result<BinaryMask> {
        let (height, width, bytes) = read_gray8(path)?;
        BinaryMask::new(
            height,
            width,
            bytes.into_iter().map(|b| (b >= 128) as u8).collect(),
        )
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self.data.iter().map(|&v| v * 255).collect();
        write_gray8(path, self.height, self.width, &bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(rows: &[&str]) -> BinaryMask {
        BinaryMask::from_fn(rows.len(), rows[0].len(), |r, c| {
            rows[r].as_bytes()[c] == b'#'
        })
    }

    #[test]
    fn rejects_non_binary_labels() {
        assert!(BinaryMask::new(1, 2, vec![0, 2]).is_err());
        assert!(BinaryMask::new(1, 2, vec![0]).is_err());
    }

    #[test]
    fn diagonal_pixels_are_one_component() {
        let m = parse(&["#..", ".#.", "..#"]);
        assert_eq!(m.components().len(), 1);
    }

    #[test]
    fn largest_component_tie_breaks_on_scan_order() {
        let m = parse(&["##...", ".....", "...##"]);
        let big = m.largest_component().unwrap();
        assert!(big.get(0, 0) && big.get(0, 1));
        assert!(!big.get(2, 3));
        let m = parse(&["#....", ".....", "..###"]);
        let big = m.largest_component().unwrap();
        assert_eq!(big.count(), 3);
        assert!(big.get(2, 2));
    }

    #[test]
    fn empty_mask_has_no_largest_component() {
        assert!(matches!(
            BinaryMask::empty(4, 4).largest_component(),
            Err(FcsnError::EmptyMask)
        ));
    }

    #[test]
    fn ring_holes_are_filled() {
        let m = parse(&[".....", ".###.", ".#.#.", ".###.", "....."]);
        assert_eq!(m.holes().count(), 1);
        assert_eq!(m.fill_holes().count(), 9);
        // A gap open to the frame through a 4-connected path is not a hole.
        let m = parse(&[".....", ".###.", ".#...", ".###.", "....."]);
        assert_eq!(m.holes().count(), 0);
    }

    #[test]
    fn file_round_trip_thresholds_at_128() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        crate::grid::write_gray8(&path, 1, 4, &[0, 127, 128, 255]).unwrap();
        let m = BinaryMask::read(&path).unwrap();
        assert_eq!(m.as_slice(), &[0, 0, 1, 1]);
        let png = dir.path().join("m.png");
        m.write(&png).unwrap();
        assert_eq!(BinaryMask::read(&png).unwrap(), m);
        let raw = std::fs::read(&path).unwrap();
        assert!(raw.starts_with(b"P5\n4 1\n255\n"));
    }
}

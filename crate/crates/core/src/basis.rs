//! Zigzag-ordered 2-D DCT basis evaluated on the block grid.
//!
//! Column `k` of the basis matrix is the vectorized (row-major, `y * N + x`)
//! function `β_u β_v cos((2x+1)πu / 2N) cos((2y+1)πv / 2N)` for the `k`-th
//! frequency pair in zigzag order, with `β_0 = √(1/N)` and `β_u = √(2/N)`
//! otherwise. Columns are orthonormal.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Result, SegError};
use crate::model::BlockRef;

/// Horizontal (`u`, along x) and vertical (`v`, along y) frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Freq {
    pub u: usize,
    pub v: usize,
}

impl From<(usize, usize)> for Freq {
    fn from((u, v): (usize, usize)) -> Self {
        Freq { u, v }
    }
}

/// First `count` frequency pairs of the unbounded zigzag traversal.
pub fn zigzag_order(count: usize) -> Vec<Freq> {
    zigzag_order_within(count, usize::MAX)
}

/// First `count` frequency pairs of the zigzag traversal of a `side`×`side`
/// frequency plane.
///
/// Starts at DC, then steps to `(0,1)`. Odd anti-diagonals run with `u`
/// increasing, even ones with `u` decreasing.
pub fn zigzag_order_within(count: usize, side: usize) -> Vec<Freq> {
    let mut out = Vec::with_capacity(count);
    let mut diag = 0usize;
    let max_diag = side.saturating_mul(2).saturating_sub(1);
    while out.len() < count && diag < max_diag {
        let lo = diag.saturating_sub(side - 1);
        let hi = diag.min(side - 1);
        let cells = (lo..=hi).map(|u| Freq { u, v: diag - u });
        if diag % 2 == 1 {
            out.extend(cells.take(count - out.len()));
        } else {
            out.extend(cells.rev().take(count - out.len()));
        }
        diag += 1;
    }
    out
}

fn beta(freq: usize, n: usize) -> f64 {
    if freq == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    }
}

/// Evaluated basis for one `(N, K)` pair. Shared read-only across blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    block_size: usize,
    order: Vec<Freq>,
    matrix: DMatrix<f64>,
}

impl BasisSet {
    /// Evaluates the first `num_bases` zigzag DCT functions on an
    /// `block_size`×`block_size` grid.
    pub fn new(block_size: usize, num_bases: usize) -> Result<Self> {
        let area = block_size * block_size;
        if block_size == 0 || num_bases == 0 || num_bases > area {
            return Err(SegError::TooManyBases { k: num_bases, area });
        }
        let n = block_size;
        let order = zigzag_order_within(num_bases, n);

        // cos tables indexed [freq][coord]
        let table = |freqs: &mut dyn Iterator<Item = usize>| -> Vec<Vec<f64>> {
            freqs
                .map(|f| {
                    let b = beta(f, n);
                    (0..n)
                        .map(|c| b * ((2 * c + 1) as f64 * PI * f as f64 / (2 * n) as f64).cos())
                        .collect()
                })
                .collect()
        };
        let cx = table(&mut order.iter().map(|f| f.u));
        let cy = table(&mut order.iter().map(|f| f.v));

        let matrix = DMatrix::from_fn(area, num_bases, |row, k| {
            let (x, y) = (row % n, row / n);
            cx[k][x] * cy[k][y]
        });
        Ok(Self {
            block_size,
            order,
            matrix,
        })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn num_bases(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[Freq] {
        &self.order
    }

    /// `N²×K` matrix, rows in row-major pixel order.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Rows of the basis matrix for the valid `w×h` region of `block`, in
    /// row-major order of that region.
    pub fn restrict(&self, block: &BlockRef) -> Result<DMatrix<f64>> {
        self.restrict_region(block.w, block.h)
    }

    pub fn restrict_region(&self, w: usize, h: usize) -> Result<DMatrix<f64>> {
        let n = self.block_size;
        if w > n || h > n || w == 0 || h == 0 {
            return Err(SegError::BlockTooLarge { w, h, n });
        }
        if w == n && h == n {
            return Ok(self.matrix.clone());
        }
        Ok(DMatrix::from_fn(w * h, self.num_bases(), |row, k| {
            let (x, y) = (row % w, row / w);
            self.matrix[(y * n + x, k)]
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(v: &[Freq]) -> Vec<(usize, usize)> {
        v.iter().map(|f| (f.u, f.v)).collect()
    }

    #[test]
    fn zigzag_prefixes() {
        assert_eq!(pairs(&zigzag_order(1)), vec![(0, 0)]);
        assert_eq!(pairs(&zigzag_order(3)), vec![(0, 0), (0, 1), (1, 0)]);
        let mut ten = pairs(&zigzag_order(10));
        ten.sort();
        let mut expected = vec![
            (0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2), (0, 3), (1, 2), (2, 1), (3, 0),
        ];
        expected.sort();
        assert_eq!(ten, expected);
    }

    #[test]
    fn zigzag_matches_jpeg_table_transposed() {
        // Standard JPEG zigzag on an 8x8 grid of natural index row*8+col.
        // With row = u and col = v this is the same traversal.
        const JPEG: [usize; 16] = [0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5];
        let got: Vec<usize> = zigzag_order_within(16, 8).iter().map(|f| f.u * 8 + f.v).collect();
        assert_eq!(got, JPEG);
    }

    #[test]
    fn bounded_zigzag_covers_plane() {
        let all = zigzag_order_within(100, 4);
        assert_eq!(all.len(), 16);
        let mut seen: Vec<_> = pairs(&all);
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn dc_only_basis_is_flat() {
        let b = BasisSet::new(64, 1).unwrap();
        assert!(b.matrix().iter().all(|&v| (v - 1.0 / 64.0).abs() < 1e-15));
    }

    #[test]
    fn hand_evaluated_entry() {
        let b = BasisSet::new(2, 4).unwrap();
        let k = b.order().iter().position(|f| (f.u, f.v) == (1, 1)).unwrap();
        assert!((b.matrix()[(0, k)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_too_many_bases() {
        assert!(BasisSet::new(2, 5).is_err());
        assert!(BasisSet::new(4, 0).is_err());
    }

    fn ortho_error(b: &BasisSet) -> f64 {
        let g = b.matrix().transpose() * b.matrix();
        let k = b.num_bases();
        (g - DMatrix::<f64>::identity(k, k)).amax()
    }

    #[test]
    fn orthonormal_columns() {
        for n in [4, 8, 16, 64] {
            let b = BasisSet::new(n, 10.min(n * n)).unwrap();
            assert!(ortho_error(&b) < 1e-9, "N={n}");
            assert!(b.matrix().iter().all(|v| v.abs() <= 2.0 / n as f64 + 1e-15));
        }
    }

    #[test]
    fn restrict_shapes() {
        let b = BasisSet::new(64, 10).unwrap();
        assert_eq!(b.restrict_region(64, 64).unwrap(), *b.matrix());

        let r = b.restrict_region(36, 64).unwrap();
        assert_eq!(r.shape(), (2304, 10));
        for row in [0, 35, 36, 2303] {
            let (x, y) = (row % 36, row / 36);
            assert_eq!(r.row(row), b.matrix().row(y * 64 + x));
        }

        let one = b.restrict_region(1, 1).unwrap();
        assert_eq!(one.row(0), b.matrix().row(0));
        assert!(b.restrict_region(65, 1).is_err());
    }

    proptest! {
        #[test]
        fn zigzag_is_prefix_closed(k in 1usize..200) {
            let a = zigzag_order(k);
            let b = zigzag_order(k + 1);
            prop_assert_eq!(&a[..], &b[..k]);
        }

        #[test]
        fn small_bases_orthonormal(n in 1usize..12, k in 1usize..20) {
            let k = k.min(n * n);
            let b = BasisSet::new(n, k).unwrap();
            prop_assert!(ortho_error(&b) < 1e-9);
        }
    }
}

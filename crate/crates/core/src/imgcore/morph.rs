//! Binary morphology with a rasterized disk structuring element.
//!
//! Pixels outside the frame count as background for both dilation and
//! erosion. Opening is therefore the exact set opening of the mask, and
//! closing is defined through complement duality, which keeps both
//! operators idempotent.

use super::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    Dilate,
    Erode,
    Open,
    Close,
}

/// Offsets `(dx, dy)` of the disk element of the given diameter:
/// all integer points with `dx² + dy² <= (diameter / 2)²`.
pub fn disk_offsets(diameter: usize) -> Vec<(i64, i64)> {
    let d = diameter.max(1);
    let r = d as f64 / 2.0;
    let r2 = r * r;
    let reach = r.floor() as i64;
    let mut out = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            if ((dx * dx + dy * dy) as f64) <= r2 {
                out.push((dx, dy));
            }
        }
    }
    out
}

pub fn morph(mask: &BinaryMask, op: MorphOp, kernel_diameter: usize) -> BinaryMask {
    assert!(kernel_diameter >= 1, "kernel diameter must be at least 1");
    let k = disk_offsets(kernel_diameter);
    match op {
        MorphOp::Dilate => dilate(mask, &k),
        MorphOp::Erode => erode(mask, &k),
        MorphOp::Open => dilate(&erode(mask, &k), &k),
        MorphOp::Close => dilate(&erode(&mask.complement(), &k), &k).complement(),
    }
}

fn dilate(mask: &BinaryMask, k: &[(i64, i64)]) -> BinaryMask {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let mut out = BinaryMask::empty(mask.width(), mask.height());
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x as usize, y as usize) {
                continue;
            }
            for &(dx, dy) in k {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && ny >= 0 && nx < w && ny < h {
                    out.set(nx as usize, ny as usize, true);
                }
            }
        }
    }
    out
}

fn erode(mask: &BinaryMask, k: &[(i64, i64)]) -> BinaryMask {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
        let (x, y) = (x as i64, y as i64);
        k.iter().all(|&(dx, dy)| {
            let (nx, ny) = (x + dx, y + dy);
            nx >= 0 && ny >= 0 && nx < w && ny < h && mask.get(nx as usize, ny as usize)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook definitions evaluated point by point, used as an oracle.
    fn brute(mask: &BinaryMask, op: MorphOp, d: usize) -> BinaryMask {
        let k = disk_offsets(d);
        let inside = |m: &BinaryMask, x: i64, y: i64| {
            x >= 0 && y >= 0 && x < m.width() as i64 && y < m.height() as i64 && m.get(x as usize, y as usize)
        };
        let dil = |m: &BinaryMask| {
            BinaryMask::from_fn(m.width(), m.height(), |x, y| {
                k.iter().any(|&(dx, dy)| inside(m, x as i64 - dx, y as i64 - dy))
            })
        };
        let ero = |m: &BinaryMask| {
            BinaryMask::from_fn(m.width(), m.height(), |x, y| {
                k.iter().all(|&(dx, dy)| inside(m, x as i64 + dx, y as i64 + dy))
            })
        };
        match op {
            MorphOp::Dilate => dil(mask),
            MorphOp::Erode => ero(mask),
            MorphOp::Open => dil(&ero(mask)),
            MorphOp::Close => dil(&ero(&mask.complement())).complement(),
        }
    }

    fn disk_mask(n: usize, cx: f64, cy: f64, r: f64) -> BinaryMask {
        BinaryMask::from_fn(n, n, |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            dx * dx + dy * dy <= r * r
        })
    }

    #[test]
    fn element_shapes() {
        assert_eq!(disk_offsets(1), vec![(0, 0)]);
        assert_eq!(disk_offsets(3).len(), 9);
        // Diameter 13: radius 6.5 disk.
        let k13 = disk_offsets(13);
        assert!(k13.contains(&(6, 0)) && !k13.contains(&(6, 3)) && k13.contains(&(4, 4)));
    }

    #[test]
    fn dilate_empty_is_empty() {
        let m = BinaryMask::empty(8, 8);
        assert!(morph(&m, MorphOp::Dilate, 5).is_empty());
    }

    #[test]
    fn open_removes_isolated_pixel() {
        let mut m = BinaryMask::empty(5, 5);
        m.set(2, 2, true);
        assert_eq!(brute(&m, MorphOp::Open, 3), BinaryMask::empty(5, 5));
        assert!(morph(&m, MorphOp::Open, 3).is_empty());
    }

    #[test]
    fn open_keeps_large_disk() {
        let m = disk_mask(64, 31.5, 31.5, 20.0);
        let opened = morph(&m, MorphOp::Open, 13);
        assert_eq!(opened, brute(&m, MorphOp::Open, 13));
        let agree = m.data().iter().zip(opened.data()).filter(|(a, b)| a == b).count();
        assert!(agree as f64 / m.data().len() as f64 >= 0.99);
    }

    fn arb_mask() -> impl Strategy<Value = BinaryMask> {
        proptest::collection::vec(proptest::bool::weighted(0.45), 32 * 32)
            .prop_map(|d| BinaryMask::new(32, 32, d).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn matches_brute_force(m in arb_mask(), d in 1usize..6) {
            for op in [MorphOp::Dilate, MorphOp::Erode, MorphOp::Open, MorphOp::Close] {
                prop_assert_eq!(morph(&m, op, d), brute(&m, op, d));
            }
        }

        #[test]
        fn open_close_idempotent(m in arb_mask(), d in 1usize..8) {
            let o = morph(&m, MorphOp::Open, d);
            prop_assert_eq!(morph(&o, MorphOp::Open, d), o.clone());
            let c = morph(&m, MorphOp::Close, d);
            prop_assert_eq!(morph(&c, MorphOp::Close, d), c.clone());
            prop_assert!(o.is_subset_of(&m));
            prop_assert!(m.is_subset_of(&c));
        }
    }
}

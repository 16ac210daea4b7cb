use std::collections::VecDeque;

use super::BinaryMask;

const NEIGHBORS8: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// 8-connected labeling. Labels start at 1 in raster order of each
/// component's first pixel; 0 is background. Returns labels and sizes
/// (indexed by `label - 1`).
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; w * h];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.data()[start] || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        let mut size = 0usize;
        labels[start] = label;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            size += 1;
            let (x, y) = ((idx % w) as i64, (idx / w) as i64);
            for (dx, dy) in NEIGHBORS8 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let n = ny as usize * w + nx as usize;
                if mask.data()[n] && labels[n] == 0 {
                    labels[n] = label;
                    queue.push_back(n);
                }
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// The largest 8-connected region; ties go to the component found first in
/// raster order.
pub fn largest_component(mask: &BinaryMask) -> BinaryMask {
    let (labels, sizes) = label_components(mask);
    let Some((best, _)) = sizes.iter().enumerate().fold(None, |acc: Option<(usize, usize)>, (i, &s)| match acc {
        Some((_, bs)) if bs >= s => acc,
        _ => Some((i, s)),
    }) else {
        return BinaryMask::empty(mask.width(), mask.height());
    };
    let target = best as u32 + 1;
    BinaryMask::new(mask.width(), mask.height(), labels.iter().map(|&l| l == target).collect()).expect("same shape")
}

/// `true` when the set pixels form at most one 8-connected region.
pub fn is_connected(mask: &BinaryMask) -> bool {
    label_components(mask).1.len() <= 1
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Recursive flood fill, independent of the queue-based labeler.
    fn flood(mask: &BinaryMask, seen: &mut Vec<bool>, x: i64, y: i64) -> usize {
        if x < 0 || y < 0 || x >= mask.width() as i64 || y >= mask.height() as i64 {
            return 0;
        }
        let i = y as usize * mask.width() + x as usize;
        if seen[i] || !mask.data()[i] {
            return 0;
        }
        seen[i] = true;
        let mut n = 1;
        for dy in -1..=1 {
            for dx in -1..=1 {
                n += flood(mask, seen, x + dx, y + dy);
            }
        }
        n
    }

    #[test]
    fn keeps_bigger_blob() {
        let mut m = BinaryMask::empty(12, 8);
        for x in 0..5 {
            for y in 0..2 {
                m.set(x, y, true);
            }
        }
        for (x, y) in [(9, 5), (10, 6), (11, 7), (9, 7)] {
            m.set(x, y, true);
        }
        let mut seen = vec![false; 96];
        assert_eq!(flood(&m, &mut seen, 0, 0), 10);
        assert_eq!(flood(&m, &mut seen, 9, 5), 4);

        let out = largest_component(&m);
        assert_eq!(out.count(), 10);
        assert!(out.get(0, 0) && !out.get(9, 5));
    }

    #[test]
    fn diagonal_touch_is_connected() {
        let mut m = BinaryMask::empty(3, 3);
        m.set(0, 0, true);
        m.set(1, 1, true);
        m.set(2, 2, true);
        assert_eq!(largest_component(&m).count(), 3);
    }

    #[test]
    fn empty_and_full() {
        let e = BinaryMask::empty(4, 4);
        assert!(largest_component(&e).is_empty());
        let f = BinaryMask::from_fn(4, 4, |_, _| true);
        assert_eq!(largest_component(&f), f);
    }

    #[test]
    fn output_is_connected_subset() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = BinaryMask::from_fn(24, 24, |_, _| rng.gen_bool(0.4));
            let out = largest_component(&m);
            assert!(out.is_subset_of(&m));
            if let Some(start) = out.data().iter().position(|&b| b) {
                let mut seen = vec![false; 24 * 24];
                let n = flood(&out, &mut seen, (start % 24) as i64, (start / 24) as i64);
                assert_eq!(n, out.count());
            }
        }
    }
}

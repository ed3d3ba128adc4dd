//! Morphology against a set-based oracle on the finite frame.
//!
//! Convention under test: erosion ignores taps that fall outside the frame,
//! dilation never reaches outside it.

use std::collections::HashSet;

use proptest::prelude::*;
use synthforge::chroma::{clean_mask, dilate, erode, morph_close, morph_open, MorphKernel};
use synthforge::Mask;

type Set = HashSet<(i64, i64)>;

fn to_set(m: &Mask) -> Set {
    let mut s = HashSet::new();
    for y in 0..m.height() {
        for x in 0..m.width() {
            if m.get(x, y) {
                s.insert((x as i64, y as i64));
            }
        }
    }
    s
}

fn element(k: &MorphKernel) -> Vec<(i64, i64)> {
    let (cy, cx) = ((k.shape.len() / 2) as i64, (k.shape[0].len() / 2) as i64);
    let mut out = Vec::new();
    for (r, row) in k.shape.iter().enumerate() {
        for (col, &on) in row.iter().enumerate() {
            if on {
                out.push((col as i64 - cx, r as i64 - cy));
            }
        }
    }
    out
}

fn in_frame(p: (i64, i64), w: i64, h: i64) -> bool {
    p.0 >= 0 && p.1 >= 0 && p.0 < w && p.1 < h
}

fn oracle_erode(s: &Set, b: &[(i64, i64)], w: i64, h: i64) -> Set {
    let mut out = HashSet::new();
    for y in 0..h {
        for x in 0..w {
            let keep = b.iter().all(|&(dx, dy)| {
                let q = (x + dx, y + dy);
                !in_frame(q, w, h) || s.contains(&q)
            });
            if keep {
                out.insert((x, y));
            }
        }
    }
    out
}

fn oracle_dilate(s: &Set, b: &[(i64, i64)], w: i64, h: i64) -> Set {
    let mut out = HashSet::new();
    for &(x, y) in s {
        for &(dx, dy) in b {
            let q = (x + dx, y + dy);
            if in_frame(q, w, h) {
                out.insert(q);
            }
        }
    }
    out
}

fn mask_strategy(w: u32, h: u32) -> impl Strategy<Value = Mask> {
    (prop::collection::vec(any::<bool>(), (w * h) as usize), 0u32..4).prop_map(move |(bits, sparsify)| {
        // Vary density: `sparsify` extra ANDed bit patterns thin the mask.
        let bits = bits.iter().enumerate().map(|(i, &b)| b && ((i as u32).is_multiple_of(sparsify + 1) || sparsify == 0)).collect();
        Mask::from_bits(w, h, bits)
    })
}

fn kernel_strategy() -> impl Strategy<Value = MorphKernel> {
    (0usize..3, 0usize..3, any::<u32>(), 0u32..3, 0u32..3).prop_map(|(hr, hc, pattern, io, ic)| {
        let (rows, cols) = (2 * hr + 1, 2 * hc + 1);
        let mut shape = vec![vec![false; cols]; rows];
        for (i, cell) in shape.iter_mut().flatten().enumerate() {
            *cell = (pattern >> (i % 32)) & 1 == 1;
        }
        shape[hr][hc] = true;
        MorphKernel { shape, iterations_open: io, iterations_close: ic }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn erosion_and_dilation_match_oracle(m in mask_strategy(32, 32), k in kernel_strategy()) {
        let s = to_set(&m);
        let b = element(&k);
        prop_assert_eq!(to_set(&erode(&m, &k)), oracle_erode(&s, &b, 32, 32));
        prop_assert_eq!(to_set(&dilate(&m, &k)), oracle_dilate(&s, &b, 32, 32));
    }

    #[test]
    fn opening_and_closing_match_composed_oracle(m in mask_strategy(32, 32), k in kernel_strategy()) {
        let b = element(&k);
        let mut open = to_set(&m);
        for _ in 0..k.iterations_open { open = oracle_erode(&open, &b, 32, 32); }
        for _ in 0..k.iterations_open { open = oracle_dilate(&open, &b, 32, 32); }
        prop_assert_eq!(to_set(&morph_open(&m, &k)), open);
        let mut close = to_set(&m);
        for _ in 0..k.iterations_close { close = oracle_dilate(&close, &b, 32, 32); }
        for _ in 0..k.iterations_close { close = oracle_erode(&close, &b, 32, 32); }
        prop_assert_eq!(to_set(&morph_close(&m, &k)), close);
    }

    #[test]
    fn opening_and_closing_are_idempotent(m in mask_strategy(32, 32), k in kernel_strategy()) {
        let o = morph_open(&m, &k);
        prop_assert_eq!(morph_open(&o, &k), o);
        let c = morph_close(&m, &k);
        prop_assert_eq!(morph_close(&c, &k), c);
    }

    #[test]
    fn opening_shrinks_closing_grows(m in mask_strategy(24, 40), k in kernel_strategy()) {
        prop_assert!(morph_open(&m, &k).is_subset_of(&m));
        prop_assert!(m.is_subset_of(&morph_close(&m, &k)));
        prop_assert!(erode(&m, &k).is_subset_of(&m));
        prop_assert!(m.is_subset_of(&dilate(&m, &k)));
    }

    #[test]
    fn operators_are_monotone(a in mask_strategy(16, 16), b in mask_strategy(16, 16), k in kernel_strategy()) {
        let union = Mask::from_fn(16, 16, |x, y| a.get(x, y) || b.get(x, y));
        prop_assert!(erode(&a, &k).is_subset_of(&erode(&union, &k)));
        prop_assert!(dilate(&a, &k).is_subset_of(&dilate(&union, &k)));
        prop_assert!(clean_mask(&a, &k).width() == 16);
    }
}

#[test]
fn isolated_pixel_opens_to_nothing_and_full_mask_closes_to_itself() {
    let k = MorphKernel::default();
    let mut m = Mask::new(9, 9);
    m.set(4, 4, true);
    assert!(morph_open(&m, &k).is_empty());
    let full = Mask::full(9, 9);
    assert_eq!(morph_close(&full, &k), full);
    assert_eq!(morph_open(&full, &k), full);
}

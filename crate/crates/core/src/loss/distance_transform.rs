//! Exact Euclidean distance transform via the separable lower-envelope
//! (Felzenszwalb-Huttenlocher) algorithm on integer squared distances.

use crate::image::{Mask, ScalarMap};

/// Sentinel for pixels with no foreground pixel anywhere in the image.
pub const NO_FOREGROUND: u64 = u64::MAX;

/// Distance map of a mask, normalized by the image diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    pub map: ScalarMap,
    /// The mask had no foreground; every value is the cap `1.0`.
    pub empty_mask: bool,
}

/// Squared Euclidean distance (in pixels²) from every pixel to its nearest
/// foreground pixel, or [`NO_FOREGROUND`] for an all-background mask.
pub fn squared_distance_to_foreground(mask: &Mask) -> Vec<u64> {
    let (w, h) = mask.dims();
    let mut out = vec![NO_FOREGROUND; w * h];
    if w == 0 || h == 0 || mask.is_empty() {
        return out;
    }

    // columns: squared vertical distance to the nearest foreground pixel
    let mut col_in = vec![NO_FOREGROUND; h];
    let mut col_out = vec![NO_FOREGROUND; h];
    let mut scratch = Envelope::with_capacity(w.max(h));
    for x in 0..w {
        for y in 0..h {
            col_in[y] = if mask.get(x, y) { 0 } else { NO_FOREGROUND };
        }
        scratch.transform(&col_in, &mut col_out);
        for y in 0..h {
            out[y * w + x] = col_out[y];
        }
    }

    // rows
    let mut row_out = vec![NO_FOREGROUND; w];
    for y in 0..h {
        let row = &out[y * w..(y + 1) * w];
        scratch.transform(row, &mut row_out);
        out[y * w..(y + 1) * w].copy_from_slice(&row_out);
    }
    out
}

/// Euclidean distance to the nearest foreground pixel divided by the image
/// diagonal `sqrt(W² + H²)`; zero on foreground. An empty mask yields `1.0`
/// everywhere and sets [`DistanceMap::empty_mask`].
pub fn distance_transform(mask: &Mask) -> DistanceMap {
    let (w, h) = mask.dims();
    let sq = squared_distance_to_foreground(mask);
    let diag = ((w * w + h * h) as f64).sqrt();
    let empty_mask = mask.is_empty();
    let data = sq
        .iter()
        .map(|&d| {
            if d == NO_FOREGROUND {
                1.0
            } else {
                (d as f64).sqrt() / diag
            }
        })
        .collect();
    DistanceMap {
        map: ScalarMap::from_vec(w, h, data).expect("dimensions preserved"),
        empty_mask,
    }
}

struct Envelope {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    /// `out[q] = min_p (q - p)² + f[p]` over sites with finite `f[p]`.
    fn transform(&mut self, f: &[u64], out: &mut [u64]) {
        self.sites.clear();
        self.bounds.clear();
        let key = |p: usize| f[p] as f64 + (p * p) as f64;
        for q in 0..f.len() {
            if f[q] == NO_FOREGROUND {
                continue;
            }
            loop {
                match self.sites.last() {
                    None => {
                        self.sites.push(q);
                        self.bounds.push(f64::NEG_INFINITY);
                        break;
                    }
                    Some(&v) => {
                        let s = (key(q) - key(v)) / (2.0 * (q - v) as f64);
                        if s <= *self.bounds.last().unwrap() {
                            self.sites.pop();
                            self.bounds.pop();
                        } else {
                            self.sites.push(q);
                            self.bounds.push(s);
                            break;
                        }
                    }
                }
            }
        }
        if self.sites.is_empty() {
            out.iter_mut().for_each(|o| *o = NO_FOREGROUND);
            return;
        }
        let mut k = 0;
        for (q, o) in out.iter_mut().enumerate() {
            while k + 1 < self.sites.len() && self.bounds[k + 1] < q as f64 {
                k += 1;
            }
            let p = self.sites[k];
            let d = q.abs_diff(p) as u64;
            *o = d * d + f[p];
        }
    }
}

//! Maximum-guided multiscale error diffusion on a constant-gray patch.
//!
//! Dots are placed one at a time at the unprocessed pixel with the largest
//! accumulated value, located through a dyadic max pyramid. The placement
//! error `value − 1` is spread over the unprocessed in-bounds cells of the
//! diffusion kernel, renormalized over those cells.

use super::kernel::DiffusionKernel;
use crate::random::RandomStream;

const NONE: u32 = u32::MAX;

/// Pyramid of argmax leaf indices; level 0 holds the pixels themselves.
struct MaxPyramid {
    values: Vec<f64>,
    alive: Vec<bool>,
    priority: Vec<u64>,
    levels: Vec<(usize, usize, Vec<u32>)>,
}

impl MaxPyramid {
    fn new(width: usize, height: usize, init: f64, priority: Vec<u64>) -> Self {
        let n = width * height;
        let mut p = Self {
            values: vec![init; n],
            alive: vec![true; n],
            priority,
            levels: Vec::new(),
        };
        let mut cur = (width, height, (0..n as u32).collect::<Vec<_>>());
        loop {
            let (w, h, ref nodes) = cur;
            if w == 1 && h == 1 {
                p.levels.push(cur);
                break;
            }
            let (pw, ph) = (w.div_ceil(2), h.div_ceil(2));
            let mut parent = vec![NONE; pw * ph];
            for r in 0..ph {
                for c in 0..pw {
                    parent[r * pw + c] = p.best_child(nodes, w, h, r, c);
                }
            }
            p.levels.push(cur);
            cur = (pw, ph, parent);
        }
        p
    }

    /// Ordering: larger value wins, then larger random priority.
    fn beats(&self, a: u32, b: u32) -> bool {
        if b == NONE {
            return a != NONE;
        }
        if a == NONE {
            return false;
        }
        let (a, b) = (a as usize, b as usize);
        match self.values[a].total_cmp(&self.values[b]) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => self.priority[a] > self.priority[b],
        }
    }

    fn best_child(&self, nodes: &[u32], w: usize, h: usize, r: usize, c: usize) -> u32 {
        let mut best = NONE;
        for rr in 2 * r..(2 * r + 2).min(h) {
            for cc in 2 * c..(2 * c + 2).min(w) {
                let cand = nodes[rr * w + cc];
                if self.beats(cand, best) {
                    best = cand;
                }
            }
        }
        best
    }

    fn refresh(&mut self, leaf: usize) {
        let (w0, _, _) = self.levels[0];
        self.levels[0].2[leaf] = if self.alive[leaf] { leaf as u32 } else { NONE };
        let (mut r, mut c) = (leaf / w0, leaf % w0);
        for k in 1..self.levels.len() {
            r /= 2;
            c /= 2;
            let (cw, ch, _) = self.levels[k - 1];
            let best = self.best_child(&self.levels[k - 1].2, cw, ch, r, c);
            let pw = self.levels[k].0;
            self.levels[k].2[r * pw + c] = best;
        }
    }

    /// Coarse-to-fine descent from the apex to the winning pixel.
    fn argmax(&self) -> Option<usize> {
        let top = self.levels.last()?.2[0];
        if top == NONE {
            return None;
        }
        let mut r = 0;
        let mut c = 0;
        for k in (0..self.levels.len() - 1).rev() {
            let (w, h, ref nodes) = self.levels[k];
            let (mut br, mut bc) = (2 * r, 2 * c);
            for rr in 2 * r..(2 * r + 2).min(h) {
                for cc in 2 * c..(2 * c + 2).min(w) {
                    if nodes[rr * w + cc] == top {
                        br = rr;
                        bc = cc;
                    }
                }
            }
            r = br;
            c = bc;
        }
        debug_assert_eq!(r * self.levels[0].0 + c, top as usize);
        Some(top as usize)
    }
}

/// Runs the error-diffusion recurrence and returns the row-major bit grid.
///
/// Exactly `⌊sigma·width·height + 0.5⌋` dots are placed unless the grid runs
/// out of unprocessed pixels first.
pub(crate) fn diffuse(
    width: usize,
    height: usize,
    sigma: f64,
    kernel: &DiffusionKernel,
    rng: &mut RandomStream,
) -> Vec<u8> {
    let n = width * height;
    let target = (sigma * n as f64 + 0.5).floor() as usize;
    let priority = (0..n).map(|_| rng.next_draw()).collect();
    let mut pyr = MaxPyramid::new(width, height, sigma, priority);
    let mut bits = vec![0u8; n];
    let mut placed = 0;
    let mut admissible: Vec<(usize, f64)> = Vec::with_capacity(kernel.support_len());

    while placed < target {
        let Some(p) = pyr.argmax() else { break };
        bits[p] = 1;
        placed += 1;
        let err = pyr.values[p] - 1.0;
        pyr.alive[p] = false;
        pyr.refresh(p);

        let (row, col) = ((p / width) as isize, (p % width) as isize);
        admissible.clear();
        let mut total = 0.0;
        for &(dy, dx, w) in kernel.taps() {
            let (r, c) = (row + dy, col + dx);
            if r < 0 || c < 0 || r >= height as isize || c >= width as isize {
                continue;
            }
            let q = r as usize * width + c as usize;
            if pyr.alive[q] {
                admissible.push((q, w));
                total += w;
            }
        }
        // With no admissible cell the residual is discarded.
        if total > 0.0 {
            for &(q, w) in &admissible {
                pyr.values[q] += err * w / total;
                pyr.refresh(q);
            }
        }
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskgen::kernel::ring_filter;

    #[test]
    fn pyramid_tracks_argmax_under_updates() {
        let (w, h) = (7, 5);
        let mut rng = RandomStream::new(1, "t");
        let prio = (0..w * h).map(|_| rng.next_draw()).collect();
        let mut p = MaxPyramid::new(w, h, 0.0, prio);
        for step in 0..200 {
            let leaf = rng.below(w * h);
            if step % 7 == 0 {
                p.alive[leaf] = false;
            } else {
                p.values[leaf] = rng.uniform() - 0.5;
            }
            p.refresh(leaf);
            let brute = (0..w * h)
                .filter(|&i| p.alive[i])
                .max_by(|&a, &b| {
                    p.values[a]
                        .total_cmp(&p.values[b])
                        .then(p.priority[a].cmp(&p.priority[b]))
                });
            assert_eq!(p.argmax(), brute);
        }
    }

    #[test]
    fn places_exact_count() {
        let k = ring_filter(1.5).unwrap();
        for &(w, h, s) in &[(16, 16, 0.5), (13, 7, 0.3), (2, 2, 0.5), (30, 20, 0.93)] {
            let bits = diffuse(w, h, s, &k, &mut RandomStream::new(9, "x"));
            let ones: usize = bits.iter().map(|&b| b as usize).sum();
            assert_eq!(ones, (s * (w * h) as f64 + 0.5).floor() as usize);
        }
    }
}

use rand::Rng;

use super::derive_rng;
use super::entity::{Entity, EntityMap};

/// Candidate object positions over the sea entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorGrid {
    pub spacing: usize,
    pub points: Vec<(usize, usize)>,
    pub seed: u64,
}

/// One candidate at the centre of every `spacing x spacing` cell that lies
/// entirely on sea, moved by an integer jitter of at most
/// `floor(spacing * jitter)` per axis. Jittered points that leave the sea are
/// dropped. With `jitter <= 0.25` neighbours stay at least `spacing / 2`
/// apart along some axis.
pub fn make_anchor_grid(em: &EntityMap, spacing: usize, jitter: f64, seed: u64) -> AnchorGrid {
    let spacing = spacing.max(1);
    let mut rng = derive_rng(seed, &[0xa7c4]);
    let amp = (spacing as f64 * jitter.max(0.0)).floor() as i64;
    let half = (spacing as f64 / 2.0).round() as usize;
    let sea = SeaCounts::new(em);
    let mut points = Vec::new();
    for cy in 0..em.height / spacing {
        for cx in 0..em.width / spacing {
            let (x0, y0) = (cx * spacing, cy * spacing);
            if sea.count(x0, y0, spacing, spacing) != spacing * spacing {
                continue;
            }
            let (dx, dy) = if amp > 0 {
                (rng.random_range(-amp..=amp), rng.random_range(-amp..=amp))
            } else {
                (0, 0)
            };
            let x = (x0 + half) as i64 + dx;
            let y = (y0 + half) as i64 + dy;
            if x >= 0 && y >= 0 && em.is_sea(x as usize, y as usize) {
                points.push((x as usize, y as usize));
            }
        }
    }
    AnchorGrid {
        spacing,
        points,
        seed,
    }
}

/// Summed-area table of sea pixels.
struct SeaCounts {
    w: usize,
    table: Vec<usize>,
}

impl SeaCounts {
    fn new(em: &EntityMap) -> Self {
        let w = em.width + 1;
        let mut table = vec![0usize; w * (em.height + 1)];
        for y in 0..em.height {
            let mut row = 0;
            for x in 0..em.width {
                row += usize::from(em.get(x, y) == Entity::Sea);
                table[(y + 1) * w + x + 1] = table[y * w + x + 1] + row;
            }
        }
        Self { w, table }
    }

    fn count(&self, x: usize, y: usize, cw: usize, ch: usize) -> usize {
        let t = |xx: usize, yy: usize| self.table[yy * self.w + xx];
        t(x + cw, y + ch) + t(x, y) - t(x + cw, y) - t(x, y + ch)
    }
}

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spacetime_tasks::geometry::Diamond;

/// Lattice resolution: 16 cells per unit, 256 cells spanning [-1, 15).
pub const RASTER_N: usize = 256;
const PER_UNIT: i64 = 16;

/// Integer light-cone box `[u0, u1] x [v0, v1]`.
#[derive(Clone, Copy, Debug)]
pub struct IBox {
    pub u: (i64, i64),
    pub v: (i64, i64),
}

impl IBox {
    pub fn diamond(&self) -> Diamond {
        Diamond::from_box((self.u.0 as f64, self.u.1 as f64), (self.v.0 as f64, self.v.1 as f64)).unwrap()
    }

    fn cells(&self) -> ((usize, usize), (usize, usize)) {
        let f = |x: i64| ((x + 1) * PER_UNIT) as usize;
        ((f(self.u.0), f(self.u.1)), (f(self.v.0), f(self.v.1)))
    }
}

pub struct EscapeInstance {
    pub through: Vec<IBox>,
    pub avoiding: Vec<IBox>,
}

fn random_box(rng: &mut ChaCha8Rng, max_w: i64) -> IBox {
    let u0 = rng.gen_range(0..=12);
    let v0 = rng.gen_range(0..=12);
    let u1 = (u0 + rng.gen_range(0..=max_w)).min(13);
    let v1 = (v0 + rng.gen_range(0..=max_w)).min(13);
    IBox { u: (u0, u1), v: (v0, v1) }
}

pub fn random_escape_instance(seed: u64) -> EscapeInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_obs = rng.gen_range(0..=6);
    let avoiding = (0..n_obs).map(|_| random_box(&mut rng, 5)).collect();
    let through = match rng.gen_range(0..3) {
        0 => {
            let u = rng.gen_range(0..=13);
            let v = rng.gen_range(0..=13);
            vec![IBox { u: (u, u), v: (v, v) }]
        }
        1 => vec![random_box(&mut rng, 3)],
        _ => vec![random_box(&mut rng, 2), random_box(&mut rng, 2)],
    };
    EscapeInstance { through, avoiding }
}

/// Brute-force escape test on a 256x256 lattice with right/up moves. Cells are
/// lattice points; integer coordinates land exactly on lattice points.
pub fn raster_escape(inst: &EscapeInstance) -> bool {
    let n = RASTER_N;
    let mut blocked = vec![false; n * n];
    let mut target = vec![false; n * n];
    for (boxes, grid) in [(&inst.avoiding, &mut blocked), (&inst.through, &mut target)] {
        for b in boxes.iter() {
            let ((u0, u1), (v0, v1)) = b.cells();
            for i in u0..=u1 {
                for j in v0..=v1 {
                    grid[i * n + j] = true;
                }
            }
        }
    }
    let mut fwd = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            if blocked[k] {
                continue;
            }
            fwd[k] = (i == 0 && j == 0) || (i > 0 && fwd[k - n]) || (j > 0 && fwd[k - 1]);
        }
    }
    let mut bwd = vec![false; n * n];
    for i in (0..n).rev() {
        for j in (0..n).rev() {
            let k = i * n + j;
            if blocked[k] {
                continue;
            }
            bwd[k] = (i == n - 1 && j == n - 1) || (i + 1 < n && bwd[k + n]) || (j + 1 < n && bwd[k + 1]);
        }
    }
    (0..n * n).any(|k| target[k] && fwd[k] && bwd[k])
}

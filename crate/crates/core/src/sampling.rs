//! Deterministic low-discrepancy point sets.

const PRIMES: [u32; 3] = [2, 3, 5];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Halton point `i` in `[0, 1)^dim`, skipping the origin.
pub fn halton(i: usize, dim: usize) -> [f64; 3] {
    let mut p = [0.0; 3];
    for (k, slot) in p.iter_mut().enumerate().take(dim) {
        *slot = radical_inverse(i as u64 + 1, PRIMES[k]);
    }
    p
}

/// `count` Halton points in the cube `center +- half_side`.
pub fn halton_in_cube(center: &[f64], half_side: f64, count: usize) -> Vec<[f64; 3]> {
    let n = center.len();
    (0..count)
        .map(|i| {
            let u = halton(i, n);
            let mut p = [0.0; 3];
            for k in 0..n {
                p[k] = center[k] + half_side * (2.0 * u[k] - 1.0);
            }
            p
        })
        .collect()
}

/// `count` points of the Halton sequence that fall inside the ball
/// `B(center, radius)` (rejection from the enclosing cube).
pub fn halton_in_ball(center: &[f64], radius: f64, count: usize) -> Vec<[f64; 3]> {
    let n = center.len();
    let mut out = Vec::with_capacity(count);
    let mut i = 0usize;
    while out.len() < count {
        let u = halton(i, n);
        i += 1;
        let mut p = [0.0; 3];
        let mut r2 = 0.0;
        for k in 0..n {
            let t = 2.0 * u[k] - 1.0;
            r2 += t * t;
            p[k] = center[k] + radius * t;
        }
        if r2 < 1.0 {
            out.push(p);
        }
    }
    out
}

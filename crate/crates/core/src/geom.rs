//! Small fixed-dimension helpers. Points are plain `&[f64]` slices of
//! length 1, 2 or 3; scratch points live in `[f64; 3]`.

pub const MAX_DIM: usize = 3;

pub type Scratch = [f64; MAX_DIM];

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `out[..n] = center + r * dir`
#[inline]
pub fn offset(out: &mut Scratch, center: &[f64], r: f64, dir: &[f64]) {
    for i in 0..center.len() {
        out[i] = center[i] + r * dir[i];
    }
}

pub fn to_scratch(p: &[f64]) -> Scratch {
    let mut s = [0.0; MAX_DIM];
    s[..p.len()].copy_from_slice(p);
    s
}

/// Pairwise summation; deterministic for a given input order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// C-infinity step: 1 on `[0, 1/2]`, 0 on `[1, inf)`.
pub fn smooth_cutoff(t: f64) -> f64 {
    if t <= 0.5 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let s = 2.0 - 2.0 * t; // in (0, 1)
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-12);
    }

    #[test]
    fn cutoff_is_monotone_partition() {
        let mut prev = 1.0;
        for i in 0..=200 {
            let c = smooth_cutoff(i as f64 / 150.0);
            assert!((0.0..=1.0).contains(&c));
            assert!(c <= prev);
            prev = c;
        }
        assert_eq!(smooth_cutoff(0.5), 1.0);
        assert_eq!(smooth_cutoff(1.0), 0.0);
        assert!((smooth_cutoff(0.75) - 0.5).abs() < 1e-12);
    }
}

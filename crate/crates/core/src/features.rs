//! Helpers for appearance-feature vectors.

pub fn norm(f: &[f64]) -> f64 {
    f.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Unit-normalize in place; zero vectors are left untouched.
pub fn normalize(f: &mut [f64]) {
    let n = norm(f);
    if n > 0.0 && n.is_finite() {
        f.iter_mut().for_each(|v| *v /= n);
    }
}

pub fn normalized(mut f: Vec<f64>) -> Vec<f64> {
    normalize(&mut f);
    f
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `(1 - t)·a + t·b`, returning exact copies at the endpoints.
pub fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    if t == 0.0 {
        return a.to_vec();
    }
    if t == 1.0 {
        return b.to_vec();
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| if x == y { *x } else { (1.0 - t) * x + t * y })
        .collect()
}

/// Weighted mean of feature vectors; `None` when the weights sum to zero.
pub fn weighted_mean<'a>(
    dim: usize,
    items: impl IntoIterator<Item = (&'a [f64], f64)>,
) -> Option<Vec<f64>> {
    let mut acc = vec![0.0; dim];
    let mut total = 0.0;
    for (f, w) in items {
        if w == 0.0 {
            continue;
        }
        total += w;
        acc.iter_mut().zip(f).for_each(|(a, v)| *a += w * v);
    }
    (total > 0.0).then(|| {
        acc.iter_mut().for_each(|a| *a /= total);
        acc
    })
}

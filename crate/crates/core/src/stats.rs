//! Small statistical helpers shared by the tests, the samplers and the experiment.

/// Kendall's tau-b in O(n log n) (Knight's merge-sort algorithm).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "kendall_tau needs paired samples");
    let n = x.len();
    if n < 2 {
        return f64::NAN;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let pairs = |runs: &mut dyn Iterator<Item = usize>| runs.map(|t| (t * (t - 1) / 2) as u64).sum::<u64>();
    let ties_x = pairs(&mut run_lengths(idx.iter().map(|&i| x[i])));
    let ties_xy = pairs(&mut run_lengths_pairs(idx.iter().map(|&i| (x[i], y[i]))));

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);
    let ties_y = pairs(&mut run_lengths(ys.iter().copied()));

    let total = (n * (n - 1) / 2) as u64;
    let concordant_minus_discordant =
        total as f64 - (ties_x + ties_y) as f64 + ties_xy as f64 - 2.0 * swaps as f64;
    let denom = (((total - ties_x) as f64) * ((total - ties_y) as f64)).sqrt();
    concordant_minus_discordant / denom
}

fn run_lengths(values: impl Iterator<Item = f64>) -> impl Iterator<Item = usize> {
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    for v in values {
        match prev {
            Some(p) if p == v => *out.last_mut().unwrap() += 1,
            _ => out.push(1),
        }
        prev = Some(v);
    }
    out.into_iter()
}

fn run_lengths_pairs(values: impl Iterator<Item = (f64, f64)>) -> impl Iterator<Item = usize> {
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for v in values {
        match prev {
            Some(p) if p == v => *out.last_mut().unwrap() += 1,
            _ => out.push(1),
        }
        prev = Some(v);
    }
    out.into_iter()
}

// Sorts `v` and returns the number of inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    let k2 = k + mid - i;
    buf[k2..n].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// sup_x |F_n(x) − F(x)| for the empirical df of `sample` against `cdf`.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |acc, (i, &x)| {
        let f = cdf(x);
        acc.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// The ⌈level·n⌉-th order statistic.
pub fn upper_quantile(values: &[f64], level: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = ((level * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[rank - 1]
}

/// Average ranks (1-based); ties share the mean of their positions.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            out[i] = avg;
        }
        start = end;
    }
    out
}

/// Exact two-sided acceptance interval [lo, hi] for a Binomial(m, p) count at the given
/// confidence: the largest lo and smallest hi with P(X < lo) ≤ (1−conf)/2 and
/// P(X > hi) ≤ (1−conf)/2.
pub fn binomial_acceptance(m: u64, p: f64, confidence: f64) -> (u64, u64) {
    let tail = (1.0 - confidence) / 2.0;
    let pmf: Vec<f64> = {
        let mut v = Vec::with_capacity(m as usize + 1);
        let mut log_c = 0.0f64;
        for k in 0..=m {
            if k > 0 {
                log_c += ((m - k + 1) as f64).ln() - (k as f64).ln();
            }
            v.push((log_c + k as f64 * p.ln() + (m - k) as f64 * (1.0 - p).ln()).exp());
        }
        v
    };
    let mut lo = 0;
    let mut below = 0.0;
    while lo < m && below + pmf[lo as usize] <= tail {
        below += pmf[lo as usize];
        lo += 1;
    }
    let mut hi = m;
    let mut above = 0.0;
    while hi > 0 && above + pmf[hi as usize] <= tail {
        above += pmf[hi as usize];
        hi -= 1;
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tau_brute(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let (mut c, mut tx, mut ty) = (0.0, 0u64, 0u64);
        for i in 0..n {
            for j in i + 1..n {
                let a = (x[i] - x[j]).signum() * if x[i] == x[j] { 0.0 } else { 1.0 };
                let b = (y[i] - y[j]).signum() * if y[i] == y[j] { 0.0 } else { 1.0 };
                c += a * b;
                tx += (x[i] == x[j]) as u64;
                ty += (y[i] == y[j]) as u64;
            }
        }
        let total = (n * (n - 1) / 2) as u64;
        c / (((total - tx) as f64) * ((total - ty) as f64)).sqrt()
    }

    proptest! {
        #[test]
        fn knight_matches_brute_force(pairs in proptest::collection::vec((0u8..6, 0u8..6), 2..60)) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let (a, b) = (kendall_tau(&x, &y), tau_brute(&x, &y));
            prop_assert!((a.is_nan() && b.is_nan()) || (a - b).abs() < 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn quantile_and_ks() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(upper_quantile(&v, 0.95), 95.0);
        let u: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_distance(&u, |x| x) <= 0.0005 + 1e-12);
    }

    #[test]
    fn binomial_band_around_five_percent() {
        let (lo, hi) = binomial_acceptance(200, 0.05, 0.99);
        assert_eq!((lo, hi), (3, 19));
        // Reference values from scipy.stats.binom.ppf / isf at 0.005.
        assert_eq!(binomial_acceptance(400, 0.05, 0.99), (10, 32));
        assert_eq!(binomial_acceptance(1000, 0.05, 0.99), (33, 69));
        assert_eq!(binomial_acceptance(100, 0.05, 0.99), (0, 11));
    }
}

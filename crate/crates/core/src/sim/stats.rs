use statrs::function::beta::beta_reg;

/// Exact (Clopper-Pearson) two-sided binomial confidence interval for
/// `failures` successes in `trials` draws at confidence `level`.
pub fn clopper_pearson(failures: u64, trials: u64, level: f64) -> (f64, f64) {
    assert!(trials >= 1, "need at least one trial");
    assert!(failures <= trials, "more failures than trials");
    assert!(level > 0.0 && level < 1.0, "level must be in (0, 1)");
    let (k, n) = (failures as f64, trials as f64);
    let alpha = 1.0 - level;
    // P[X >= k | p] = I_p(k, n - k + 1) is increasing in p.
    let low = if failures == 0 {
        0.0
    } else {
        bisect(|p| beta_reg(k, n - k + 1.0, p), alpha / 2.0)
    };
    // P[X <= k | p] = 1 - I_p(k + 1, n - k) is decreasing in p.
    let high = if failures == trials {
        1.0
    } else {
        bisect(|p| beta_reg(k + 1.0, n - k, p), 1.0 - alpha / 2.0)
    };
    (low, high)
}

/// Root of `f(p) = target` on `[0, 1]` for increasing `f`.
fn bisect(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

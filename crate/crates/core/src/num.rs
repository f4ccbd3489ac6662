//! Shared numeric kernels: stable binomial pmf scans and log-factorials.

/// Visit the binomial pmf `Binom(k; count, p)` for `k = 0..=count`, calling
/// `emit(k, weight)` for every term that is representable as a nonzero f64.
///
/// Terms are generated by the multiplicative recurrence
/// `w(k+1) = w(k) * (count-k)/(k+1) * p/(1-p)` starting from `(1-p)^count`;
/// when that starting value underflows, the scan restarts from the mode in
/// log-domain and recurses outward. Terms that underflow to zero in the tail
/// are skipped, which leaves sums unchanged.
pub(crate) fn binomial_scan<F: FnMut(u32, f64)>(count: u32, p: f64, mut emit: F) {
    debug_assert!((-1e-12..=1.0 + 1e-12).contains(&p), "p out of range: {p}");
    if count == 0 || p <= 0.0 {
        emit(0, 1.0);
        return;
    }
    if p >= 1.0 {
        emit(count, 1.0);
        return;
    }
    let nf = count as f64;
    let ratio = p / (1.0 - p);
    let mode = (nf + 1.0) * p;
    let start = (1.0 - p).powi(count as i32);
    if start > 0.0 {
        let mut w = start;
        let mut k = 0u32;
        loop {
            emit(k, w);
            if k == count {
                break;
            }
            w *= (nf - k as f64) / (k as f64 + 1.0) * ratio;
            k += 1;
            if w == 0.0 && k as f64 > mode {
                break; // tail underflow, nothing left to add
            }
        }
        return;
    }

    // Starting term underflowed; build the mode term in log-domain and
    // recurse outward in both directions.
    let k0 = (mode.floor() as u32).min(count);
    let mut ln_c = 0.0f64; // ln C(count, k0)
    for j in 1..=k0 {
        ln_c += ((count - j + 1) as f64).ln() - (j as f64).ln();
    }
    let w0 = (ln_c + k0 as f64 * p.ln() + (count - k0) as f64 * (1.0 - p).ln()).exp();
    if w0 == 0.0 {
        // The whole pmf is below f64 range; callers scale by masses that are
        // themselves bounded by 1, so there is nothing to emit.
        return;
    }
    emit(k0, w0);
    let mut w = w0;
    let mut k = k0;
    while k < count {
        w *= (nf - k as f64) / (k as f64 + 1.0) * ratio;
        k += 1;
        if w == 0.0 {
            break;
        }
        emit(k, w);
    }
    w = w0;
    k = k0;
    while k > 0 {
        w *= k as f64 / (nf - k as f64 + 1.0) / ratio;
        k -= 1;
        if w == 0.0 {
            break;
        }
        emit(k, w);
    }
}

/// Cumulative table of `ln(k!)` for `k = 0..=max`.
pub(crate) fn ln_factorial_table(max: u32) -> Vec<f64> {
    let mut table = Vec::with_capacity(max as usize + 1);
    table.push(0.0);
    let mut acc = 0.0f64;
    for k in 1..=max {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

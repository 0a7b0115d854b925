/// `-x log2 x`, with `0 log 0 = 0`.
#[inline]
pub fn neg_xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// Binary entropy in bits.
#[inline]
pub fn binary_entropy(p: f64) -> f64 {
    neg_xlog2x(p) + neg_xlog2x(1.0 - p)
}

/// Shannon entropy of a pmf in bits.
pub fn entropy(pmf: &[f64]) -> f64 {
    pmf.iter().map(|&p| neg_xlog2x(p)).sum()
}

/// Mutual information (bits) of input `p` through the row-major channel
/// `w[x * cols + y] = W(y | x)`.
pub fn mutual_information(p: &[f64], w: &[f64], cols: usize) -> f64 {
    let mut out = vec![0.0; cols];
    for (x, &px) in p.iter().enumerate() {
        for y in 0..cols {
            out[y] += px * w[x * cols + y];
        }
    }
    let mut mi = 0.0;
    for (x, &px) in p.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for y in 0..cols {
            let wxy = w[x * cols + y];
            if wxy > 0.0 && out[y] > 0.0 {
                mi += px * wxy * (wxy / out[y]).log2();
            }
        }
    }
    mi
}

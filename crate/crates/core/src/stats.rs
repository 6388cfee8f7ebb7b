//! Shape statistics of a value sequence, shared by the embedder and the
//! template generator so both agree on what "increasing" means.

/// Sign of the least-squares slope of `values` against their index.
/// Slopes within rounding noise of zero count as flat.
pub fn slope_sign(values: &[f64]) -> i8 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mean_i = (n - 1) as f64 / 2.0;
    let mean_y = values.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut scale = 0.0;
    for (i, &y) in values.iter().enumerate() {
        let term = (i as f64 - mean_i) * (y - mean_y);
        num += term;
        scale += term.abs();
    }
    if num.abs() <= 1e-9 * scale || num == 0.0 {
        0
    } else if num > 0.0 {
        1
    } else {
        -1
    }
}

/// `(max - min) / max|y|`, zero when all values are zero.
pub fn normalized_range(values: &[f64]) -> f64 {
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return 0.0;
    }
    let (lo, hi) = min_max(values);
    (hi - lo) / max_abs
}

/// Fraction of consecutive steps moving in the dominant direction; 1 for
/// sequences shorter than two.
pub fn monotonicity(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 1.0;
    }
    let steps = values.len() - 1;
    let up = values.windows(2).filter(|w| w[1] > w[0]).count();
    let down = values.windows(2).filter(|w| w[1] < w[0]).count();
    let flat = steps - up - down;
    up.max(down).max(flat) as f64 / steps as f64
}

/// Index of the first maximum divided by `len - 1`; 0 for a single value.
pub fn argmax_position(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let idx = argmax(values);
    idx as f64 / (values.len() - 1) as f64
}

pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > values[best] { i } else { best })
}

pub fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v < values[best] { i } else { best })
}

pub fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

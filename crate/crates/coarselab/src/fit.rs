//! Small least-squares helpers used by the growth/divergence/bigon reports.

/// Affine least-squares fit y ≈ slope·x + intercept.
/// Returns (slope, intercept, rms residual). Needs at least two points.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-12 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    Some((slope, intercept, (rss / n).sqrt()))
}

/// Proportional least-squares fit y ≈ d·x (through the origin).
/// Returns (d, relative rms residual = rms / mean|y|).
pub fn proportional_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() || xs.len() != ys.len() {
        return None;
    }
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx < 1e-12 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let d = sxy / sxx;
    let n = xs.len() as f64;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - d * x;
            e * e
        })
        .sum();
    let mean_y: f64 = ys.iter().map(|y| y.abs()).sum::<f64>() / n;
    if mean_y < 1e-12 {
        return Some((d, 0.0));
    }
    Some((d, (rss / n).sqrt() / mean_y))
}

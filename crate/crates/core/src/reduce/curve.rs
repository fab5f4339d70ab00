/// Low-dimensional similarity kernel `1 / (1 + a·x^(2b))`.
pub fn umap_kernel(x: f64, a: f64, b: f64) -> f64 {
    1.0 / (1.0 + a * x.powf(2.0 * b))
}

fn target(x: f64, min_dist: f64) -> f64 {
    if x <= min_dist { 1.0 } else { (-(x - min_dist)).exp() }
}

fn sse(xs: &[f64], ys: &[f64], a: f64, b: f64) -> f64 {
    xs.iter().zip(ys).map(|(&x, &y)| (umap_kernel(x, a, b) - y).powi(2)).sum()
}

/// Least-squares fit of the kernel to `1` below `min_dist` and
/// `exp(-(x - min_dist))` above it, on 300 points in [0, 3]. Damped
/// Gauss-Newton, 100 iterations, starting from (1, 1).
pub fn fit_ab(min_dist: f64) -> (f64, f64) {
    assert!(min_dist > 0.0 && min_dist < 1.0, "min_dist must be in (0, 1)");
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * i as f64 / 299.0).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| target(x, min_dist)).collect();
    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut cost = sse(&xs, &ys, a, b);
    for _ in 0..100 {
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            if x == 0.0 {
                continue;
            }
            let p = x.powf(2.0 * b);
            let den = 1.0 + a * p;
            let r = 1.0 / den - y;
            let da = -p / (den * den);
            let db = -a * p * 2.0 * x.ln() / (den * den);
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let det = jaa * jbb - jab * jab;
        if det.abs() < 1e-300 {
            break;
        }
        let step_a = (jbb * ga - jab * gb) / det;
        let step_b = (jaa * gb - jab * ga) / det;
        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-8 {
            let (na, nb) = (a - t * step_a, b - t * step_b);
            if na > 0.0 && nb > 0.0 {
                let c = sse(&xs, &ys, na, nb);
                if c <= cost {
                    a = na;
                    b = nb;
                    cost = c;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

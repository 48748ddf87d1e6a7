//! One-dimensional maximisation helpers used for phase optimisation.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
/// Stops once the bracket is narrower than `tol`.
pub fn golden_section_max<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
        // bracket no longer shrinks in floating point
        if x1 >= x2 {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    if f1 > fx && f1 >= f2 {
        (x1, f1)
    } else if f2 > fx {
        (x2, f2)
    } else {
        (x, fx)
    }
}

/// Evaluate `f` on `points` equally spaced nodes of `[lo, hi]`, then refine
/// the best node by golden-section search within its neighbouring nodes.
pub fn grid_then_golden_max<F>(f: F, lo: f64, hi: f64, points: usize, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    assert!(points >= 3, "grid needs at least three points");
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = (lo, f(lo));
    let mut best_idx = 0;
    for i in 1..points {
        let x = lo + step * i as f64;
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
            best_idx = i;
        }
    }
    let a = lo + step * best_idx.saturating_sub(1) as f64;
    let b = (lo + step * (best_idx + 1) as f64).min(hi);
    let refined = golden_section_max(&f, a, b, tol);
    if refined.1 >= best.1 {
        refined
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3).powi(2) + 2.0, 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 2.0).abs() < 1e-12);
    }

    #[test]
    fn grid_handles_multimodal_functions() {
        let f = |x: f64| (3.0 * x).sin() + 0.1 * x;
        let (x, _) = grid_then_golden_max(f, 0.0, 10.0, 1001, 1e-12);
        // global maximum of sin(3x)+0.1x on [0,10] lies near the last crest
        let crest = (std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * 4.0
            - (1.0f64 / 30.0).acos()
            + std::f64::consts::FRAC_PI_2)
            / 3.0;
        assert!((x - crest).abs() < 1e-5, "x = {x}, crest = {crest}");
    }

    #[test]
    fn maximum_at_boundary() {
        let (x, _) = grid_then_golden_max(|x| x, 0.0, 1.0, 11, 1e-12);
        assert!((x - 1.0).abs() < 1e-9);
    }
}

//! Adaptive Simpson quadrature.

use crate::scalar::Real;

pub const DEFAULT_ABS_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_DEPTH: u32 = 40;

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`, refining at most
/// `max_depth` levels.
pub fn adaptive_simpson<T: Real>(f: impl Fn(T) -> T, a: T, b: T, tol: T, max_depth: u32) -> T {
    if a == b {
        return T::zero();
    }
    let half = T::lit(0.5);
    let m = (a + b) * half;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    refine(&f, a, b, fa, fm, fb, whole, tol, max_depth)
}

/// Integrate over `[a, b]` with extra subdivision at `breaks` (kinks or jumps
/// of the integrand). Points outside `(a, b)` are ignored.
pub fn integrate_with_breaks<T: Real>(f: impl Fn(T) -> T, a: T, b: T, breaks: &[T], tol: T) -> T {
    let mut cuts: Vec<T> = breaks
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);
    let pieces = T::from_usize_lossy(edges.len() - 1);
    edges
        .windows(2)
        .map(|w| adaptive_simpson(&f, w[0], w[1], tol / pieces, DEFAULT_MAX_DEPTH))
        .sum()
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<T: Real>(
    f: &impl Fn(T) -> T,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> T {
    let half = T::lit(0.5);
    let m = (a + b) * half;
    let lm = (a + m) * half;
    let rm = (m + b) * half;
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol || m <= a || m >= b {
        return left + right + delta / T::lit(15.0);
    }
    refine(f, a, m, fa, flm, fm, left, tol * half, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, tol * half, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = adaptive_simpson(|x: f64| x * x * x, 0.0, 2.0, 1e-12, 20);
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_function() {
        let v = adaptive_simpson(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-10, 40);
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn kink_with_break() {
        let f = |x: f64| (x - 0.3).abs();
        let exact = 0.3 * 0.3 / 2.0 + 0.7 * 0.7 / 2.0;
        let v = integrate_with_breaks(f, 0.0, 1.0, &[0.3], 1e-12);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn jump_with_break() {
        let f = |x: f64| if x < 0.37 { 0.0 } else { 1.0 };
        let v = integrate_with_breaks(f, 0.0, 1.0, &[0.37, 5.0], 1e-12);
        assert!((v - 0.63).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2, evaluated away from the pole at 0.
        let f = |x: f64| if x == 0.0 { 0.0 } else { x.powf(-0.5) };
        let v = adaptive_simpson(f, 0.0, 1.0, 1e-8, 40);
        assert!((v - 2.0).abs() < 1e-3);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(adaptive_simpson(|x: f64| x, 1.0, 1.0, 1e-8, 10), 0.0);
    }
}

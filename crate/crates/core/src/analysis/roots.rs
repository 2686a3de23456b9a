//! Bracketed root finding for monotone functions.

/// Solve `g(z) = target` on `[a, b]` given `ga = g(a)` and `gb = g(b)` on
/// opposite sides of the target. Returns a point of a bracket no wider
/// than `tol` times the initial width, or of two adjacent floats.
///
/// Illinois-modified regula falsi; a bisection step is forced whenever two
/// consecutive steps fail to halve the bracket.
pub(crate) fn solve_bracketed<G: FnMut(f64) -> f64>(
    mut g: G,
    mut a: f64,
    mut b: f64,
    ga: f64,
    gb: f64,
    target: f64,
    tol: f64,
) -> f64 {
    let mut fa = ga - target;
    let mut fb = gb - target;
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    if fa.signum() == fb.signum() {
        // no crossing inside: return the closer end
        return if fa.abs() < fb.abs() { a } else { b };
    }
    let mut side = 0i8;
    let mut width = b - a;
    let stop = tol * width;
    let mut stalls = 0;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if b - a <= stop || mid <= a || mid >= b {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if stalls >= 2 || !(c > a && c < b) {
            c = mid;
            stalls = 0;
        }
        let fc = g(c) - target;
        if fc == 0.0 {
            return c;
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if b - a > 0.5 * width {
            stalls += 1;
        } else {
            stalls = 0;
            width = b - a;
        }
    }
    0.5 * (a + b)
}

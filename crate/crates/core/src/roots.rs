//! Bracketed scalar root refinement for monotone pieces.
//!
//! Illinois-style false position with a forced bisection whenever three
//! consecutive steps fail to halve the bracket. On a monotone bracket this
//! always converges; it stops at parameter precision.

/// Returns `x` in `[lo, hi]` with `f(x)` as close to `target` as the bracket
/// allows. `f_lo`/`f_hi` are `f(lo)` and `f(hi)`.
///
/// If the bracket does not straddle `target`, the endpoint with the smaller
/// residual is returned.
pub fn solve_bracketed<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    f_lo: f64,
    f_hi: f64,
    target: f64,
) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f_lo - target, f_hi - target);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        if fa.is_finite() && fb.is_finite() {
            return if fa.abs() <= fb.abs() { a } else { b };
        }
        return bisect_only(&f, a, b, fa, target);
    }
    let mut side = 0i8;
    let mut width_mark = (b - a).abs();
    for it in 0..300 {
        let width = (b - a).abs();
        if width <= 2.0 * f64::EPSILON * a.abs().max(b.abs()) || width == 0.0 {
            break;
        }
        let mut x = (a * fb - b * fa) / (fb - fa);
        let forced = it % 3 == 2 && width > 0.5 * width_mark;
        if forced || !x.is_finite() || x <= a.min(b) || x >= a.max(b) {
            x = 0.5 * (a + b);
            side = 0;
        }
        if it % 3 == 2 {
            width_mark = width;
        }
        if x == a || x == b {
            break;
        }
        let fx = f(x) - target;
        if fx == 0.0 {
            return x;
        }
        if !fx.is_finite() {
            return bisect_only(&f, a, b, fa, target);
        }
        if fx.signum() == fb.signum() {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    // fa/fb may have been scaled by the Illinois step; compare fresh values.
    let ra = (f(a) - target).abs();
    let rb = (f(b) - target).abs();
    if ra <= rb {
        a
    } else {
        b
    }
}

/// Newton's method kept inside a sign-changing bracket, for when the
/// derivative is cheap. Steps that leave the bracket or fail to halve it
/// twice in a row fall back to bisection. `fd` returns `(f(x), f'(x))`.
pub fn solve_newton_bracketed<F: Fn(f64) -> (f64, f64)>(
    fd: F,
    lo: f64,
    hi: f64,
    f_lo: f64,
    f_hi: f64,
    target: f64,
) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f_lo - target, f_hi - target);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return solve_bracketed(|x| fd(x).0, lo, hi, f_lo, f_hi, target);
    }
    let neg_at_a = fa < 0.0;
    let mut x = (a * fb - b * fa) / (fb - fa);
    if !(x > a && x < b) {
        x = 0.5 * (a + b);
    }
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let mut slow = 0;
    let mut last_step = f64::INFINITY;
    for _ in 0..100 {
        let (f, d) = fd(x);
        let f = f - target;
        if f == 0.0 {
            return x;
        }
        if (f < 0.0) == neg_at_a {
            a = x;
        } else {
            b = x;
        }
        let width = b - a;
        if width <= 2.0 * f64::EPSILON * a.abs().max(b.abs()) {
            break;
        }
        let step = f / d;
        // Past the noise floor the steps stop shrinking.
        if step.abs() <= 4.0 * f64::EPSILON * scale || (step.abs() >= last_step && last_step <= 1e-9 * scale) {
            return x;
        }
        last_step = step.abs();
        let mut next = x - step;
        if !next.is_finite() || next <= a || next >= b || slow >= 2 {
            next = 0.5 * (a + b);
            slow = 0;
        } else if step.abs() > 0.25 * width {
            slow += 1;
        }
        x = next;
    }
    x
}

fn bisect_only<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, mut fa: f64, target: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m) - target;
        if fm == 0.0 {
            return m;
        }
        if fm.is_finite() && fa.is_finite() && fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Locates sign changes of `g` on `[lo, hi]` by sampling `n` cells and
/// refining each change. Exact zeros at samples are reported directly.
pub fn sign_change_roots<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let h = (hi - lo) / n as f64;
    let mut x_prev = lo;
    let mut g_prev = g(lo);
    if g_prev == 0.0 {
        out.push(lo);
    }
    for i in 1..=n {
        let x = if i == n { hi } else { lo + h * i as f64 };
        let gx = g(x);
        if gx == 0.0 {
            out.push(x);
        } else if g_prev != 0.0 && gx.signum() != g_prev.signum() {
            out.push(solve_bracketed(&g, x_prev, x, g_prev, gx, 0.0));
        }
        x_prev = x;
        g_prev = gx;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let f = |x: f64| x * x * x;
        let r = solve_bracketed(f, -1.0, 2.0, -1.0, 8.0, 0.001);
        assert!((r - 0.1).abs() < 1e-15);
    }

    #[test]
    fn flat_ends_still_converge() {
        // tanh is nearly flat at both ends, which stalls plain false position.
        let f = |x: f64| (x - 3.0).tanh();
        let r = solve_bracketed(f, -50.0, 60.0, f(-50.0), f(60.0), 0.5);
        assert!((r - (3.0 + 0.5f64.atanh())).abs() < 1e-13);
    }

    #[test]
    fn decreasing_bracket() {
        let f = |x: f64| (2.0 * std::f64::consts::PI * x).cos();
        let r = solve_bracketed(f, 0.0, 0.5, 1.0, -1.0, 0.0);
        assert!((r - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sampled_sign_changes() {
        let g = |x: f64| (x - 0.3) * (x - 0.7);
        let r = sign_change_roots(g, 0.0, 1.0, 64);
        assert_eq!(r.len(), 2);
        assert!((r[0] - 0.3).abs() < 1e-14 && (r[1] - 0.7).abs() < 1e-14);
    }
}

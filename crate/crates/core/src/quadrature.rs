//! Adaptive composite Simpson quadrature, including the real line.

use alloc::vec::Vec;

const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    // Seed with a few panels so narrow features are not missed.
    let panels = 16;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    let mut x0 = a;
    let mut f0 = fa;
    for k in 0..panels {
        let x1 = if k + 1 == panels {
            b
        } else {
            a + (k + 1) as f64 * h
        };
        let f1 = if k + 1 == panels { fb } else { f(x1) };
        let xm = 0.5 * (x0 + x1);
        let fmid = f(xm);
        let s = (x1 - x0) / 6.0 * (f0 + 4.0 * fmid + f1);
        total += recurse(
            &mut f,
            x0,
            x1,
            f0,
            fmid,
            f1,
            s,
            tol / panels as f64,
            MAX_DEPTH,
        );
        x0 = x1;
        f0 = f1;
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrates `f` over the whole real line, splitting at `breakpoints`.
///
/// The two unbounded pieces are mapped to `[0, 1)` by `x = b ± t/(1-t)`,
/// which keeps algebraically decaying tails integrable.
pub fn integrate_real_line<F: FnMut(f64) -> f64>(mut f: F, breakpoints: &[f64], tol: f64) -> f64 {
    let mut bps: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| x.is_finite())
        .collect();
    if bps.is_empty() {
        bps.push(0.0);
    }
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bps.dedup();
    let pieces = bps.len() + 1;
    let piece_tol = tol / pieces as f64;
    let lo = bps[0];
    let hi = *bps.last().unwrap();
    let mut total = 0.0;
    total += simpson(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let u = 1.0 - t;
            let v = f(lo - t / u);
            if v == 0.0 {
                0.0
            } else {
                v / (u * u)
            }
        },
        0.0,
        1.0,
        piece_tol,
    );
    for w in bps.windows(2) {
        total += simpson(&mut f, w[0], w[1], piece_tol);
    }
    total += simpson(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let u = 1.0 - t;
            let v = f(hi + t / u);
            if v == 0.0 {
                0.0
            } else {
                v / (u * u)
            }
        },
        0.0,
        1.0,
        piece_tol,
    );
    total
}

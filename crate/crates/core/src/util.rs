//! Small numeric helpers shared across modules.

use crate::Real;

/// Composite trapezoid rule for `f` on `[a, b]` with `steps` intervals.
pub fn trapezoid<R: Real>(a: R, b: R, steps: usize, mut f: impl FnMut(R) -> R) -> R {
    assert!(steps >= 1);
    let h = (b - a) / R::of(steps as f64);
    let mut acc = (f(a) + f(b)) * R::of(0.5);
    for k in 1..steps {
        acc += f(a + h * R::of(k as f64));
    }
    acc * h
}

/// Least-squares fit of `y = slope * x + intercept`, returning
/// `(slope, intercept, r_squared)`. Needs at least two points; with constant
/// `y` the slope is 0 and `r_squared` is 1 (the fit is exact).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some((slope, intercept, r2))
}

/// Format a float with 9 significant digits, `%.9g`-style: fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros stripped. Used for
/// all CSV output so reruns diff cleanly.
pub fn fmt_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in sci format");
    let exp: i32 = exp.parse().expect("numeric exponent");
    if !(-5..9).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{exp}");
    }
    // Fixed notation with 9 significant digits: 8 - exp fractional digits.
    let frac = (8 - exp).max(0) as usize;
    let fixed = format!("{:.*}", frac, x);
    if fixed.contains('.') {
        fixed.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        fixed
    }
}

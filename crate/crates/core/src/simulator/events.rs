use crate::error::{Error, Result};

/// Width of the bracket returned by [`locate_mode_switch`], s.
pub const SWITCH_TOLERANCE: f64 = 1e-6;

/// Locates a sign change of `f` on `[t1, t2]` by bisection.
///
/// Returns `t1` when `f(t1) == 0`; otherwise the right end of a bracket no
/// wider than `tol`, i.e. the first located time at which `f` has left the
/// sign it had at `t1`.
pub fn locate_mode_switch<F>(mut f: F, t1: f64, t2: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let f1 = f(t1);
    if f1 == 0.0 {
        return Ok(t1);
    }
    let f2 = f(t2);
    if f1 * f2 > 0.0 || f1.is_nan() || f2.is_nan() {
        return Err(Error::NoSignChange { t1, t2 });
    }
    let (mut lo, mut hi) = (t1, t2);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm * f1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        let t = locate_mode_switch(|t| t - 0.5, 0.0, 1.0, SWITCH_TOLERANCE).unwrap();
        assert!((t - 0.5).abs() <= SWITCH_TOLERANCE);
        assert!(t >= 0.5);
    }

    #[test]
    fn zero_at_left_end() {
        assert_eq!(locate_mode_switch(|t| t - 2.0, 2.0, 3.0, SWITCH_TOLERANCE).unwrap(), 2.0);
    }

    #[test]
    fn sinusoid_against_closed_form() {
        // 2 sin(3t + 0.4) - 1 = 0 on [0, 0.5]: t* = (asin(0.5) - 0.4) / 3
        let exact = ((0.5f64).asin() - 0.4) / 3.0;
        let t = locate_mode_switch(|t| 2.0 * (3.0 * t + 0.4).sin() - 1.0, 0.0, 0.5, SWITCH_TOLERANCE).unwrap();
        assert!((t - exact).abs() < 1e-6);
    }

    #[test]
    fn no_sign_change() {
        assert!(matches!(
            locate_mode_switch(|t| t + 1.0, 0.0, 1.0, SWITCH_TOLERANCE),
            Err(Error::NoSignChange { .. })
        ));
    }
}

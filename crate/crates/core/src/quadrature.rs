//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the odd Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature<T: Scalar> {
    pub value: T,
    pub error_estimate: T,
    pub evaluations: usize,
}

fn gk15<T: Scalar, F: FnMut(T) -> Result<T>>(f: &mut F, a: T, b: T) -> Result<(T, T)> {
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    let fc = f(mid)?;
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for k in 0..7 {
        let dx = half * T::lit(XGK[k]);
        let s = f(mid - dx)? + f(mid + dx)?;
        kronrod += s * T::lit(WGK[k]);
        if k % 2 == 1 {
            gauss += s * T::lit(WG[k / 2]);
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// Integrates `f` over `[a, b]` by bisecting subintervals until the
/// Kronrod–Gauss difference is below `tol` (absolute, split proportionally).
pub fn integrate<T: Scalar, F: FnMut(T) -> Result<T>>(
    mut f: F,
    a: T,
    b: T,
    tol: T,
    max_depth: usize,
) -> Result<Quadrature<T>> {
    let mut value = T::zero();
    let mut error_estimate = T::zero();
    let mut evaluations = 0;
    let mut stack = vec![(a, b, tol, 0usize)];
    while let Some((lo, hi, local_tol, depth)) = stack.pop() {
        let (v, e) = gk15(&mut f, lo, hi)?;
        evaluations += 15;
        if e <= local_tol || depth >= max_depth {
            if e > local_tol {
                return Err(Error::Precondition(format!(
                    "quadrature did not converge on [{lo}, {hi}] (error {e:e})"
                )));
            }
            value += v;
            error_estimate += e;
        } else {
            let mid = (lo + hi) / T::lit(2.0);
            let t = local_tol / T::lit(2.0);
            stack.push((mid, hi, t, depth + 1));
            stack.push((lo, mid, t, depth + 1));
        }
    }
    Ok(Quadrature {
        value,
        error_estimate,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        // GK15 integrates degree ≤ 22 exactly
        let q = integrate(|t: f64| Ok(t.powi(10) - 3.0 * t * t), 0.0, 1.0, 1e-14, 0).unwrap();
        assert!((q.value - (1.0 / 11.0 - 1.0)).abs() < 1e-15);
        assert_eq!(q.evaluations, 15);
    }

    #[test]
    fn adaptive_on_peaked_integrand() {
        let f = |t: f64| Ok(1.0 / (1e-3 + (t - 0.3).powi(2)));
        let exact = (0.7 / 1e-3f64.sqrt()).atan() / 1e-3f64.sqrt() + (0.3 / 1e-3f64.sqrt()).atan() / 1e-3f64.sqrt();
        let q = integrate(f, 0.0, 1.0, 1e-10, 40).unwrap();
        assert!((q.value - exact).abs() < 1e-9);
        assert!(q.evaluations > 15);
    }

    #[test]
    fn single_precision() {
        let q = integrate(|t: f32| Ok(t.sin()), 0.0, std::f32::consts::PI, 1e-5, 20).unwrap();
        assert!((q.value - 2.0).abs() < 1e-5);
    }

    #[test]
    fn depth_limit_reports_failure() {
        let f = |t: f64| Ok(if t < 0.123456 { 0.0 } else { 1.0 });
        assert!(integrate(f, 0.0, 1.0, 1e-14, 3).is_err());
    }
}

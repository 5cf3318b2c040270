//! Elementary functions routed through `libm` so results do not depend on
//! whether the crate is built with `std`.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub(crate) fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

#[inline]
pub(crate) fn log10(x: f64) -> f64 {
    libm::log10(x)
}

/// `tanh` over a slice, written so the loop vectorizes.
///
/// Uses `tanh(x) = e / (e + 2)` with `e = expm1(2x)`, the exponential being
/// reduced to `2^n exp(r)`, `|r| <= ln(2) / 2`, and `exp(r) - 1` expanded
/// to degree 13. Accurate to a few ulps; NaN propagates.
pub(crate) fn tanh_slice(x: &[f64], out: &mut [f64]) {
    const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;
    const MAGIC: f64 = 6_755_399_441_055_744.0; // 1.5 * 2^52
                                                // 1 / k! for k = 2..=13
    const C: [f64; 12] = [
        0.5,
        1.666_666_666_666_666_6e-1,
        4.166_666_666_666_666_4e-2,
        8.333_333_333_333_333e-3,
        1.388_888_888_888_888_9e-3,
        1.984_126_984_126_984e-4,
        2.480_158_730_158_730_2e-5,
        2.755_731_922_398_589e-6,
        2.755_731_922_398_589_3e-7,
        2.505_210_838_544_172e-8,
        2.087_675_698_786_81e-9,
        1.605_904_383_682_161_3e-10,
    ];
    let n = x.len().min(out.len());
    let (x, out) = (&x[..n], &mut out[..n]);
    for (o, &xi) in out.iter_mut().zip(x) {
        let y = 2.0 * xi;
        let y = if y > 40.0 {
            40.0
        } else if y < -40.0 {
            -40.0
        } else {
            y
        };
        let t = y * core::f64::consts::LOG2_E + MAGIC;
        let k = t - MAGIC;
        let r = (y - k * LN2_HI) - k * LN2_LO;
        let mut p = C[11];
        for &c in C[..11].iter().rev() {
            p = p * r + c;
        }
        let q = r + r * r * p;
        let bits = t.to_bits().wrapping_add(1023) << 52;
        let scale = f64::from_bits(bits);
        let e = (scale - 1.0) + scale * q;
        *o = e / (e + 2.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_slice_matches_libm() {
        let xs: Vec<f64> =
            (-4000..=4000).map(|i| i as f64 * 5e-3).chain([1e-300, -1e-12, 3e-8, 25.0, -700.0, 1e10]).collect();
        let mut out = vec![0.0; xs.len()];
        tanh_slice(&xs, &mut out);
        for (x, t) in xs.iter().zip(&out) {
            let exact = libm::tanh(*x);
            assert!((t - exact).abs() <= 4.0 * f64::EPSILON * exact.abs(), "{x}: {t} vs {exact}");
        }
        let mut nan = [0.0];
        tanh_slice(&[f64::NAN], &mut nan);
        assert!(nan[0].is_nan());
    }
}

//! sRGB (D65) to CIELab conversion for the LAB method.

fn srgb_linearize(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    if u <= 0.04045 {
        u / 12.92
    } else {
        ((u + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// a-channel of CIELab for one sRGB color with components in [0, 1].
pub fn srgb_to_lab_a(r: f64, g: f64, b: f64) -> f64 {
    let rl = srgb_linearize(r);
    let gl = srgb_linearize(g);
    let bl = srgb_linearize(b);
    // sRGB -> XYZ, D65 white.
    let x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
    let y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
    // D65 reference white.
    const XN: f64 = 0.95047;
    const YN: f64 = 1.0;
    500.0 * (lab_f(x / XN) - lab_f(y / YN))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_has_zero_a() {
        for v in [0.0, 0.2, 0.5, 0.8, 1.0] {
            let a = srgb_to_lab_a(v, v, v);
            assert!(a.abs() < 0.2, "gray {v} -> a = {a}");
        }
    }

    #[test]
    fn red_is_positive_green_is_negative() {
        assert!(srgb_to_lab_a(1.0, 0.0, 0.0) > 50.0);
        assert!(srgb_to_lab_a(0.0, 1.0, 0.0) < -50.0);
    }
}

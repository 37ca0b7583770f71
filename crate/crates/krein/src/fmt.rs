//! Deterministic number formatting shared by reports and renderers:
//! 12 significant decimal digits, locale-independent, complex values as
//! `a+bi`.

use num_complex::Complex64;

/// Format with 12 significant digits in scientific decimal notation.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000000e0".to_string();
    }
    format!("{x:.11e}")
}

/// `a+bi` / `a-bi` with 12 significant digits per part.
pub fn complex(z: Complex64) -> String {
    if z.im == 0.0 {
        return sig12(z.re);
    }
    if z.im < 0.0 {
        format!("{}-{}i", sig12(z.re), sig12(-z.im))
    } else {
        format!("{}+{}i", sig12(z.re), sig12(z.im))
    }
}

/// Compact human-oriented complex formatting for rendered equations.
pub fn complex_compact(z: Complex64) -> String {
    let re = format!("{:.6}", z.re);
    if z.im == 0.0 {
        re
    } else if z.im < 0.0 {
        format!("({re}-{:.6}i)", -z.im)
    } else {
        format!("({re}+{:.6}i)", z.im)
    }
}

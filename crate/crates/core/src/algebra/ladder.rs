//! Reordering coefficients for `a^q a†^p = Σ_k k!·C(q,k)·C(p,k) a†^{p-k} a^{q-k}`.

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

/// Largest exponent served from the exact table.
pub const TABLE_DEGREE: usize = 64;

const SIDE: usize = TABLE_DEGREE + 1;

fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = vec![0.0; SIDE * SIDE * SIDE];
        for q in 0..SIDE {
            for p in 0..SIDE {
                // Exact integer recursion, rounded to f64 once per entry.
                let mut c = BigUint::one();
                for k in 0..=q.min(p) {
                    out[(q * SIDE + p) * SIDE + k] = c.to_f64().unwrap_or(f64::INFINITY);
                    c *= BigUint::from((q - k) * (p - k));
                    c /= BigUint::from(k + 1);
                }
            }
        }
        out
    })
}

/// `k!·C(q,k)·C(p,k)`; zero when `k > min(q, p)`.
pub fn reorder_coefficient(q: usize, p: usize, k: usize) -> f64 {
    if k > q.min(p) {
        return 0.0;
    }
    if q <= TABLE_DEGREE && p <= TABLE_DEGREE {
        return table()[(q * SIDE + p) * SIDE + k];
    }
    (0..k).fold(1.0, |c, j| c * ((q - j) * (p - j)) as f64 / (j + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        // a a† = a†a + 1
        assert_eq!(reorder_coefficient(1, 1, 0), 1.0);
        assert_eq!(reorder_coefficient(1, 1, 1), 1.0);
        // a² a†² = a†²a² + 4 a†a + 2
        assert_eq!(reorder_coefficient(2, 2, 1), 4.0);
        assert_eq!(reorder_coefficient(2, 2, 2), 2.0);
        assert_eq!(reorder_coefficient(3, 1, 2), 0.0);
    }

    #[test]
    fn large_entries_match_float_recursion() {
        let exact = reorder_coefficient(60, 50, 30);
        let approx = (0..30).fold(1.0f64, |c, j| c * ((60 - j) * (50 - j)) as f64 / (j + 1) as f64);
        assert!(((exact - approx) / exact).abs() < 1e-12);
        assert!(reorder_coefficient(70, 70, 3) > 0.0);
    }
}

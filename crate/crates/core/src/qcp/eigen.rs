use num::{BigRational, One, Zero};
use serde::Serialize;

use crate::laurent::rational_to_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ContractionKind {
    /// `s ↦ c - q^{-2} c + q^{-2} s`, fixed point `c`
    F1,
    /// `s ↦ 1 - q^{-2} + q^{-2} s`, fixed point `1`
    F2,
}

/// Affine map `s ↦ p + ratio (s - p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineContraction {
    pub kind: ContractionKind,
    pub fixed_point: f64,
    pub ratio: f64,
}

impl AffineContraction {
    pub fn f1(q: f64, c: f64) -> Self {
        AffineContraction { kind: ContractionKind::F1, fixed_point: c, ratio: q.powi(-2) }
    }

    pub fn f2(q: f64) -> Self {
        AffineContraction { kind: ContractionKind::F2, fixed_point: 1.0, ratio: q.powi(-2) }
    }

    /// Evaluated in the expanded form `a + ratio s`, as it appears in the recursion.
    pub fn apply(&self, s: f64) -> f64 {
        (self.fixed_point - self.ratio * self.fixed_point) + self.ratio * s
    }

    pub fn iterate(&self, s: f64, times: usize) -> f64 {
        (0..times).fold(s, |acc, _| self.apply(acc))
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            ContractionKind::F1 => "f1",
            ContractionKind::F2 => "f2",
        }
    }
}

/// Eigenvalues `c_k` of `x1*x1` on `v_k` and `c'_k = 1 + q^{-2} c - q^{-2} c_k` of `x2*x2`.
#[derive(Debug, Clone)]
pub struct EigenSequence {
    pub q: f64,
    pub c: f64,
    values: Vec<f64>,
    companion: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl EigenSequence {
    /// Floating-point recursion.
    pub fn new(q: f64, c: f64, len: usize) -> Self {
        assert!(len >= 2, "eigen sequence needs at least two terms");
        let f1 = AffineContraction::f1(q, c);
        let mut values = vec![0.0, 1.0 + c];
        while values.len() < len {
            let prev = values[values.len() - 2];
            values.push(f1.apply(prev));
        }
        let r = q.powi(-2);
        let companion = values.iter().map(|ck| 1.0 + r * c - r * ck).collect();
        EigenSequence { q, c, values, companion, exact: None }
    }

    /// Exact rational recursion; the float values are the exact ones rounded.
    pub fn exact(q: &BigRational, c: &BigRational, len: usize) -> Self {
        assert!(len >= 2, "eigen sequence needs at least two terms");
        let r = (q * q).recip();
        let one = BigRational::one();
        let mut exact = vec![BigRational::zero(), &one + c];
        while exact.len() < len {
            let prev = &exact[exact.len() - 2];
            exact.push(c - &r * c + &r * prev);
        }
        let values: Vec<f64> = exact.iter().map(rational_to_f64).collect();
        let companion = exact.iter().map(|ck| rational_to_f64(&(&one + &r * c - &r * ck))).collect();
        EigenSequence {
            q: rational_to_f64(q),
            c: rational_to_f64(c),
            values,
            companion,
            exact: Some(exact),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `c_k`, 1-based.
    pub fn c(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    /// `c'_k`, 1-based.
    pub fn companion(&self, k: usize) -> f64 {
        self.companion[k - 1]
    }

    pub fn exact_value(&self, k: usize) -> Option<&BigRational> {
        self.exact.as_ref().map(|e| &e[k - 1])
    }

    /// Weight of the double shift `x1*x2 v_k = w_k v_{k+2}`.
    pub fn weight(&self, k: usize) -> f64 {
        self.c(k + 2).sqrt() * self.companion(k).sqrt()
    }

    /// `c_{2n} = q^{-2(n-1)} + c`, `c_{2n+1} = (1 - q^{-2n}) c`.
    pub fn closed_form(q: f64, c: f64, k: usize) -> f64 {
        let n = (k / 2) as i32;
        if k.is_multiple_of(2) {
            q.powi(-2 * (n - 1)) + c
        } else {
            (1.0 - q.powi(-2 * n)) * c
        }
    }

    pub fn closed_form_exact(q: &BigRational, c: &BigRational, k: usize) -> BigRational {
        let n = k / 2;
        let r = (q * q).recip();
        let pow = |m: usize| (0..m).fold(BigRational::one(), |acc, _| acc * &r);
        if k.is_multiple_of(2) {
            pow(n - 1) + c
        } else {
            (BigRational::one() - pow(n)) * c
        }
    }

    /// `Some(true)` iff every exact term equals its closed form.
    pub fn recursion_matches_closed_form(&self, q: &BigRational, c: &BigRational) -> Option<bool> {
        let exact = self.exact.as_ref()?;
        Some(exact.iter().enumerate().all(|(i, v)| *v == Self::closed_form_exact(q, c, i + 1)))
    }

    /// Largest `|c_k - closed_form(k)|` over the float values.
    pub fn closed_form_deviation(&self) -> f64 {
        (1..=self.len())
            .map(|k| (self.c(k) - Self::closed_form(self.q, self.c, k)).abs())
            .fold(0.0, f64::max)
    }
}

/// Exact rational from a finite double; every double is a dyadic rational.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigInt;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn first_terms() {
        let e = EigenSequence::new(2.0, 1.0, 6);
        assert_eq!(e.c(1), 0.0);
        assert_eq!(e.c(2), 2.0);
        assert_eq!(e.c(3), 0.75);
        assert_eq!(e.c(4), 1.25);
        assert_eq!(e.c(5), 0.9375);
        assert_eq!(e.c(6), 1.0625);
        assert_eq!(e.companion(1), 1.25);
    }

    #[test]
    fn weights_at_reference() {
        let e = EigenSequence::new(2.0, 1.0, 8);
        assert!((e.weight(1) - 0.968246).abs() < 1e-6);
        assert!((e.weight(3) - 0.998045).abs() < 1e-6);
    }

    #[test]
    fn exact_recursion_is_closed_form() {
        for (q, c) in [(rat(6, 5), rat(1, 2)), (rat(2, 1), rat(1, 1)), (rat(5, 1), rat(3, 1)), (rat(7, 3), rat(11, 13))] {
            let e = EigenSequence::exact(&q, &c, 40);
            assert_eq!(e.recursion_matches_closed_form(&q, &c), Some(true));
        }
        let e = EigenSequence::exact(&rat(2, 1), &rat(1, 1), 6);
        assert_eq!(e.exact_value(5), Some(&rat(15, 16)));
    }

    #[test]
    fn float_recursion_tracks_closed_form() {
        for q in [1.2, 2.0, 5.0] {
            for c in [0.5, 1.0, 3.0] {
                assert!(EigenSequence::new(q, c, 60).closed_form_deviation() < 1e-14 * (1.0 + c));
            }
        }
    }

    #[test]
    fn companion_follows_f2() {
        let e = EigenSequence::new(1.7, 2.3, 30);
        let f2 = AffineContraction::f2(1.7);
        for k in 1..=28 {
            assert!((e.companion(k + 2) - f2.apply(e.companion(k))).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn contraction_is_exact_affine(q in 1.01f64..10.0, c in 0.01f64..10.0, s in -10.0f64..10.0) {
            for f in [AffineContraction::f1(q, c), AffineContraction::f2(q)] {
                let lhs = f.apply(s) - f.fixed_point;
                let rhs = f.ratio * (s - f.fixed_point);
                prop_assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + s.abs() + f.fixed_point.abs()));
            }
        }

        #[test]
        fn tails_contract_to_c(q in 1.1f64..6.0, c in 0.1f64..5.0) {
            let e = EigenSequence::new(q, c, 30);
            for k in 3..=30 {
                let base = if k % 2 == 1 { e.c(1) } else { e.c(2) };
                let m = ((k - 1) / 2) as i32;
                let predicted = q.powi(-2 * m) * (base - c).abs();
                prop_assert!(((e.c(k) - c).abs() - predicted).abs() < 1e-12);
            }
        }

        #[test]
        fn exact_and_float_agree(num in 11i64..80, den in 1i64..10, cn in 1i64..40, cd in 1i64..10) {
            prop_assume!(num * 10 > 11 * den);
            let (q, c) = (rat(num, den), rat(cn, cd));
            let exact = EigenSequence::exact(&q, &c, 24);
            let float = EigenSequence::new(rational_to_f64(&q), rational_to_f64(&c), 24);
            prop_assert_eq!(exact.recursion_matches_closed_form(&q, &c), Some(true));
            for k in 1..=24 {
                prop_assert!((exact.c(k) - float.c(k)).abs() < 1e-13 * (1.0 + float.c(k)));
            }
        }
    }
}

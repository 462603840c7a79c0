//! Normal forms for the *-algebra generated by `α`, `α*` and a self-adjoint `γ`.
//!
//! Four rewriting rules drive every word to the basis `γ^b α^k` or
//! `γ^b (α*)^k`:
//!
//! ```text
//! α γ   -> P γ α
//! α* γ  -> P^-1 γ α*
//! α α*  -> 1 - P^2 γ^2
//! α* α  -> 1 - γ^2
//! ```
//!
//! The system is terminating and locally confluent (see [`check_local_confluence`]),
//! so two elements are equal modulo the relations iff their normal forms agree.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::laurent::LaurentPoly;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    Gamma,
    Alpha,
    AlphaStar,
}

impl Letter {
    pub fn adjoint(self) -> Letter {
        match self {
            Letter::Gamma => Letter::Gamma,
            Letter::Alpha => Letter::AlphaStar,
            Letter::AlphaStar => Letter::Alpha,
        }
    }
}

/// `γ^gamma_pow α^ladder` for `ladder > 0`, `γ^gamma_pow (α*)^-ladder` for `ladder < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormalWord {
    pub gamma_pow: u32,
    pub ladder: i32,
}

impl NormalWord {
    pub const ONE: NormalWord = NormalWord { gamma_pow: 0, ladder: 0 };

    pub fn new(gamma_pow: u32, ladder: i32) -> Self {
        NormalWord { gamma_pow, ladder }
    }

    pub fn letters(&self) -> Vec<Letter> {
        let ladder_letter = if self.ladder > 0 { Letter::Alpha } else { Letter::AlphaStar };
        std::iter::repeat_n(Letter::Gamma, self.gamma_pow as usize)
            .chain(std::iter::repeat_n(ladder_letter, self.ladder.unsigned_abs() as usize))
            .collect()
    }

    /// Reads a word that contains no redex.
    fn from_irreducible(word: &[Letter]) -> NormalWord {
        let gamma_pow = word.iter().take_while(|l| **l == Letter::Gamma).count();
        let rest = &word[gamma_pow..];
        debug_assert!(rest.iter().all(|l| *l != Letter::Gamma));
        let ladder = match rest.first() {
            None => 0,
            Some(Letter::Alpha) => rest.len() as i32,
            Some(_) => -(rest.len() as i32),
        };
        NormalWord { gamma_pow: gamma_pow as u32, ladder }
    }
}

impl fmt::Display for NormalWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.gamma_pow > 0 {
            parts.push(format!("g^{}", self.gamma_pow));
        }
        match self.ladder {
            0 => {}
            k if k > 0 => parts.push(format!("a^{k}")),
            k => parts.push(format!("A^{}", -k)),
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join(" * "))
        }
    }
}

/// One of the four rewriting rules, named by its left-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    AlphaGamma,
    AlphaStarGamma,
    AlphaAlphaStar,
    AlphaStarAlpha,
}

impl Rule {
    pub fn matching(pair: (Letter, Letter)) -> Option<Rule> {
        match pair {
            (Letter::Alpha, Letter::Gamma) => Some(Rule::AlphaGamma),
            (Letter::AlphaStar, Letter::Gamma) => Some(Rule::AlphaStarGamma),
            (Letter::Alpha, Letter::AlphaStar) => Some(Rule::AlphaAlphaStar),
            (Letter::AlphaStar, Letter::Alpha) => Some(Rule::AlphaStarAlpha),
            _ => None,
        }
    }

    /// Right-hand side as a list of (coefficient, replacement letters).
    fn rhs(self) -> Vec<(LaurentPoly, Vec<Letter>)> {
        use Letter::*;
        match self {
            Rule::AlphaGamma => vec![(LaurentPoly::p(), vec![Gamma, Alpha])],
            Rule::AlphaStarGamma => vec![(LaurentPoly::mono(-1, 0, 0), vec![Gamma, AlphaStar])],
            Rule::AlphaAlphaStar => vec![
                (LaurentPoly::one(), vec![]),
                (-LaurentPoly::mono(2, 0, 0), vec![Gamma, Gamma]),
            ],
            Rule::AlphaStarAlpha => {
                vec![(LaurentPoly::one(), vec![]), (-LaurentPoly::one(), vec![Gamma, Gamma])]
            }
        }
    }
}

/// Positions `i` where `word[i..i+2]` is the left-hand side of a rule.
pub fn redexes(word: &[Letter]) -> Vec<usize> {
    word.windows(2)
        .enumerate()
        .filter(|(_, w)| Rule::matching((w[0], w[1])).is_some())
        .map(|(i, _)| i)
        .collect()
}

/// Applies the rule at `pos` once. Panics if there is no redex there.
pub fn rewrite_at(word: &[Letter], pos: usize) -> Vec<(LaurentPoly, Vec<Letter>)> {
    let rule = Rule::matching((word[pos], word[pos + 1])).expect("no redex at position");
    rule.rhs()
        .into_iter()
        .map(|(coeff, middle)| {
            let mut out = Vec::with_capacity(word.len());
            out.extend_from_slice(&word[..pos]);
            out.extend(middle);
            out.extend_from_slice(&word[pos + 2..]);
            (coeff, out)
        })
        .collect()
}

/// A linear combination of arbitrary (not necessarily reduced) words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FreeElement {
    terms: BTreeMap<Vec<Letter>, LaurentPoly>,
}

impl FreeElement {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn word(coeff: LaurentPoly, letters: Vec<Letter>) -> Self {
        let mut out = Self::new();
        out.push(coeff, letters);
        out
    }

    pub fn push(&mut self, coeff: LaurentPoly, letters: Vec<Letter>) {
        if coeff.is_zero() {
            return;
        }
        let slot = self.terms.entry(letters.clone()).or_default();
        *slot += &coeff;
        if slot.is_zero() {
            self.terms.remove(&letters);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Letter>, &LaurentPoly)> {
        self.terms.iter()
    }
}

/// Result of exhaustive rewriting, with the number of single-rule steps taken.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub element: NCElement,
    pub steps: usize,
}

/// Rewrites every word at its leftmost redex until none remains.
///
/// Identical intermediate words are merged, so the step count stays
/// polynomial in the word length.
pub fn nc_normalize(input: &FreeElement) -> Reduction {
    let mut pending = input.terms.clone();
    let mut done = NCElement::zero();
    let mut steps = 0usize;
    while let Some((word, coeff)) = pending.pop_first() {
        match redexes(&word).first() {
            None => done.add_term(NormalWord::from_irreducible(&word), coeff),
            Some(&pos) => {
                steps += 1;
                for (c, w) in rewrite_at(&word, pos) {
                    let c = &coeff * &c;
                    let slot = pending.entry(w.clone()).or_default();
                    *slot += &c;
                    if slot.is_zero() {
                        pending.remove(&w);
                    }
                }
            }
        }
    }
    Reduction { element: done, steps }
}

/// Normal form of a single word with coefficient.
pub fn normalize_word(coeff: LaurentPoly, letters: Vec<Letter>) -> NCElement {
    nc_normalize(&FreeElement::word(coeff, letters)).element
}

/// Fully reduced element: a finite sum of [`NormalWord`]s with Laurent coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct NCElement {
    terms: BTreeMap<NormalWord, LaurentPoly>,
}

impl NCElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn scalar(coeff: LaurentPoly) -> Self {
        let mut out = Self::zero();
        out.add_term(NormalWord::ONE, coeff);
        out
    }

    pub fn one() -> Self {
        Self::scalar(LaurentPoly::one())
    }

    pub fn alpha() -> Self {
        normalize_word(LaurentPoly::one(), vec![Letter::Alpha])
    }

    pub fn alpha_star() -> Self {
        normalize_word(LaurentPoly::one(), vec![Letter::AlphaStar])
    }

    pub fn gamma() -> Self {
        normalize_word(LaurentPoly::one(), vec![Letter::Gamma])
    }

    /// Normal form of `coeff * w1 w2 ... wn`.
    pub fn from_letters(coeff: LaurentPoly, letters: &[Letter]) -> Self {
        normalize_word(coeff, letters.to_vec())
    }

    fn add_term(&mut self, word: NormalWord, coeff: LaurentPoly) {
        if coeff.is_zero() {
            return;
        }
        let slot = self.terms.entry(word).or_default();
        *slot += &coeff;
        if slot.is_zero() {
            self.terms.remove(&word);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&NormalWord, &LaurentPoly)> {
        self.terms.iter()
    }

    pub fn coeff(&self, word: NormalWord) -> LaurentPoly {
        self.terms.get(&word).cloned().unwrap_or_default()
    }

    pub fn scale(&self, factor: &LaurentPoly) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            out.add_term(*w, c * factor);
        }
        out
    }

    pub fn to_free(&self) -> FreeElement {
        let mut out = FreeElement::new();
        for (w, c) in &self.terms {
            out.push(c.clone(), w.letters());
        }
        out
    }

    /// Bilinear product followed by normalization.
    pub fn mul_with_stats(&self, rhs: &NCElement) -> Reduction {
        let mut free = FreeElement::new();
        for (wa, ca) in &self.terms {
            let la = wa.letters();
            for (wb, cb) in &rhs.terms {
                let mut letters = la.clone();
                letters.extend(wb.letters());
                free.push(ca * cb, letters);
            }
        }
        nc_normalize(&free)
    }

    /// Reverse words, swap `α` and `α*`, conjugate coefficients, renormalize.
    pub fn adjoint(&self) -> NCElement {
        let mut free = FreeElement::new();
        for (w, c) in &self.terms {
            let letters: Vec<Letter> = w.letters().into_iter().rev().map(Letter::adjoint).collect();
            free.push(c.conj(), letters);
        }
        nc_normalize(&free).element
    }

    pub fn commutator(&self, rhs: &NCElement) -> NCElement {
        &(self * rhs) - &(rhs * self)
    }
}

impl<'a> Add<&'a NCElement> for &'a NCElement {
    type Output = NCElement;

    fn add(self, rhs: &NCElement) -> NCElement {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(*w, c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a NCElement> for &'a NCElement {
    type Output = NCElement;

    fn sub(self, rhs: &NCElement) -> NCElement {
        self + &(-rhs)
    }
}

impl Neg for &NCElement {
    type Output = NCElement;

    fn neg(self) -> NCElement {
        NCElement { terms: self.terms.iter().map(|(w, c)| (*w, -c)).collect() }
    }
}

impl<'a> Mul<&'a NCElement> for &'a NCElement {
    type Output = NCElement;

    fn mul(self, rhs: &NCElement) -> NCElement {
        self.mul_with_stats(rhs).element
    }
}

impl fmt::Display for NCElement {
    /// `coef * g^b * a^c` terms joined by ` + `; multi-term coefficients are parenthesized.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let coeff = if c.len() > 1 { format!("({c})") } else { c.to_string() };
            if *w == NormalWord::ONE {
                write!(f, "{coeff}")?;
            } else {
                write!(f, "{coeff} * {w}")?;
            }
        }
        Ok(())
    }
}

pub fn nc_mul(x: &NCElement, y: &NCElement) -> NCElement {
    x * y
}

pub fn nc_adjoint(x: &NCElement) -> NCElement {
    x.adjoint()
}

/// `x1 = S T α + T^-1 γ` and `x2 = -P S T γ + T^-1 α*`.
pub fn nc_build_generators() -> (NCElement, NCElement) {
    let t_inv = LaurentPoly::mono(0, 0, -1);
    let x1 = &NCElement::alpha().scale(&LaurentPoly::mono(0, 1, 1)) + &NCElement::gamma().scale(&t_inv);
    let x2 = &NCElement::gamma().scale(&-LaurentPoly::mono(1, 1, 1)) + &NCElement::alpha_star().scale(&t_inv);
    (x1, x2)
}

/// True iff `lhs - rhs` normalizes to zero.
pub fn nc_verify_identity(lhs: &NCElement, rhs: &NCElement) -> bool {
    (lhs - rhs).is_zero()
}

/// The six quadratic expressions in the generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expansion {
    X1sX1,
    X2sX2,
    X1sX2,
    X2sX1,
    X1X1s,
    X2X2s,
}

impl Expansion {
    pub const ALL: [Expansion; 6] = [
        Expansion::X1sX1,
        Expansion::X2sX2,
        Expansion::X1sX2,
        Expansion::X2sX1,
        Expansion::X1X1s,
        Expansion::X2X2s,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Expansion::X1sX1 => "x1*x1",
            Expansion::X2sX2 => "x2*x2",
            Expansion::X1sX2 => "x1*x2",
            Expansion::X2sX1 => "x2*x1",
            Expansion::X1X1s => "x1x1*",
            Expansion::X2X2s => "x2x2*",
        }
    }
}

/// Fully reduced product for one of the six expressions.
pub fn nc_expand_canonical(which: Expansion) -> NCElement {
    let (x1, x2) = nc_build_generators();
    match which {
        Expansion::X1sX1 => &x1.adjoint() * &x1,
        Expansion::X2sX2 => &x2.adjoint() * &x2,
        Expansion::X1sX2 => &x1.adjoint() * &x2,
        Expansion::X2sX1 => &x2.adjoint() * &x1,
        Expansion::X1X1s => &x1 * &x1.adjoint(),
        Expansion::X2X2s => &x2 * &x2.adjoint(),
    }
}

/// The hand-expanded right-hand sides, each written exactly as a sum of
/// coefficient-times-word terms (words need not be reduced).
pub fn displayed_forms(which: Expansion) -> Vec<NCElement> {
    use Letter::{Alpha as A, AlphaStar as As, Gamma as G};
    let m = LaurentPoly::mono;
    let one = LaurentPoly::one;
    let c = || m(0, 2, 0);
    let build = |terms: Vec<(LaurentPoly, Vec<Letter>)>| {
        let mut free = FreeElement::new();
        for (coeff, letters) in terms {
            free.push(coeff, letters);
        }
        nc_normalize(&free).element
    };
    match which {
        Expansion::X1sX1 => vec![
            build(vec![
                (c(), vec![As, A]),
                (m(0, 1, -2), vec![As, G]),
                (m(0, 1, 2), vec![G, A]),
                (one(), vec![G, G]),
            ]),
            build(vec![
                (c(), vec![]),
                (one() - c(), vec![G, G]),
                (m(0, 1, -2), vec![As, G]),
                (m(0, 1, 2), vec![G, A]),
            ]),
        ],
        Expansion::X2sX2 => vec![
            build(vec![
                (one(), vec![A, As]),
                (-m(1, 1, 2), vec![A, G]),
                (-m(1, 1, -2), vec![G, As]),
                (m(2, 2, 0), vec![G, G]),
            ]),
            build(vec![
                (one(), vec![]),
                (m(2, 2, 0) - m(2, 0, 0), vec![G, G]),
                (-m(1, 1, 2), vec![A, G]),
                (-m(1, 1, -2), vec![G, As]),
            ]),
            build(vec![
                (one(), vec![]),
                (m(2, 2, 0) - m(2, 0, 0), vec![G, G]),
                (-m(2, 1, 2), vec![G, A]),
                (-m(2, 1, -2), vec![As, G]),
            ]),
        ],
        Expansion::X1sX2 => vec![build(vec![
            (m(0, 1, -2), vec![As, As]),
            (-m(1, 2, 0), vec![As, G]),
            (one(), vec![G, As]),
            (-m(1, 1, 2), vec![G, G]),
        ])],
        Expansion::X2sX1 => vec![build(vec![
            (m(0, 1, 2), vec![A, A]),
            (-m(1, 2, 0), vec![G, A]),
            (one(), vec![A, G]),
            (-m(1, 1, -2), vec![G, G]),
        ])],
        Expansion::X1X1s => vec![
            build(vec![
                (c(), vec![A, As]),
                (m(0, 1, 2), vec![A, G]),
                (m(0, 1, -2), vec![G, As]),
                (one(), vec![G, G]),
            ]),
            build(vec![
                (c(), vec![]),
                (-m(2, 2, 0), vec![G, G]),
                (m(1, 1, 2), vec![G, A]),
                (m(1, 1, -2), vec![As, G]),
                (one(), vec![G, G]),
            ]),
        ],
        Expansion::X2X2s => vec![
            build(vec![
                (one(), vec![As, A]),
                (-m(1, 1, -2), vec![As, G]),
                (-m(1, 1, 2), vec![G, A]),
                (m(2, 2, 0), vec![G, G]),
            ]),
            build(vec![
                (one(), vec![]),
                (-one(), vec![G, G]),
                (-m(1, 1, -2), vec![As, G]),
                (-m(1, 1, 2), vec![G, A]),
                (m(2, 2, 0), vec![G, G]),
            ]),
        ],
    }
}

/// The four words where two rule left-hand sides overlap.
pub fn critical_overlaps() -> [Vec<Letter>; 4] {
    use Letter::{Alpha as A, AlphaStar as As, Gamma as G};
    [vec![A, As, G], vec![As, A, G], vec![A, As, A], vec![As, A, As]]
}

/// Rewrites `word` once at every redex position and checks that all
/// one-step successors share a normal form.
pub fn check_local_confluence(word: &[Letter]) -> bool {
    let forms: Vec<NCElement> = redexes(word)
        .into_iter()
        .map(|pos| {
            let mut free = FreeElement::new();
            for (c, w) in rewrite_at(word, pos) {
                free.push(c, w);
            }
            nc_normalize(&free).element
        })
        .collect();
    forms.windows(2).all(|w| w[0] == w[1])
}

/// Outcome of one exact identity check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub proven: bool,
}

/// Every exact identity the symbolic engine certifies.
pub fn identity_suite() -> Vec<IdentityCheck> {
    let mut out = Vec::new();
    let mut record = |identity: String, proven: bool| out.push(IdentityCheck { identity, proven });

    for which in Expansion::ALL {
        let expanded = nc_expand_canonical(which);
        for (i, form) in displayed_forms(which).iter().enumerate() {
            record(
                format!("{} = displayed form {}", which.label(), i + 1),
                nc_verify_identity(&expanded, form),
            );
        }
    }

    let (x1, x2) = nc_build_generators();
    let x1s = x1.adjoint();
    let x2s = x2.adjoint();
    let x1sx1 = &x1s * &x1;
    let x2sx2 = &x2s * &x2;
    let x1x1s = &x1 * &x1s;
    let x2x2s = &x2 * &x2s;
    let q2 = LaurentPoly::mono(-2, 0, 0);
    let c = LaurentPoly::mono(0, 2, 0);

    record(
        "x1*x1 + q^2 x2*x2 = q^2 + c".into(),
        nc_verify_identity(&(&x1sx1 + &x2sx2.scale(&q2)), &NCElement::scalar(&q2 + &c)),
    );
    record(
        "x1x1* + x2x2* = 1 + c".into(),
        nc_verify_identity(&(&x1x1s + &x2x2s), &NCElement::scalar(&LaurentPoly::one() + &c)),
    );
    record(
        "x2*x2 = 1 + c q^-2 - q^-2 x1*x1".into(),
        nc_verify_identity(
            &x2sx2,
            &(&NCElement::scalar(LaurentPoly::one() + LaurentPoly::mono(2, 2, 0))
                - &x1sx1.scale(&LaurentPoly::mono(2, 0, 0))),
        ),
    );
    record("[x1*x1, x2*x2] = 0".into(), x1sx1.commutator(&x2sx2).is_zero());
    record("[x1x1*, x2x2*] = 0".into(), x1x1s.commutator(&x2x2s).is_zero());
    record(
        "x2*x1 = (x1*x2)*".into(),
        nc_verify_identity(&(&x2s * &x1), &(&x1s * &x2).adjoint()),
    );

    // Relations of the ambient algebra, restated with γ* = γ.
    let a = NCElement::alpha();
    let a_s = NCElement::alpha_star();
    let g = NCElement::gamma();
    let p = LaurentPoly::p();
    record(
        "α*α + γ² = 1".into(),
        nc_verify_identity(&(&(&a_s * &a) + &(&g * &g)), &NCElement::one()),
    );
    record(
        "αα* + q^-2 γ² = 1".into(),
        nc_verify_identity(&(&(&a * &a_s) + &(&g * &g).scale(&p.pow(2))), &NCElement::one()),
    );
    record(
        "γα* - q^-1 α*γ = 0".into(),
        (&(&g * &a_s) - &(&a_s * &g).scale(&p)).is_zero(),
    );
    record(
        "αγ* - q^-1 γ*α = 0".into(),
        (&(&a * &g.adjoint()) - &(&g.adjoint() * &a).scale(&p)).is_zero(),
    );
    record(
        "γ*α* - q^-1 α*γ* = 0".into(),
        (&(&g.adjoint() * &a_s) - &(&a_s * &g.adjoint()).scale(&p)).is_zero(),
    );

    for word in critical_overlaps() {
        let name: String = word
            .iter()
            .map(|l| match l {
                Letter::Alpha => "α",
                Letter::AlphaStar => "α*",
                Letter::Gamma => "γ",
            })
            .collect();
        record(format!("local confluence at {name}"), check_local_confluence(&word));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::complex::Complex64;
    use proptest::prelude::*;
    use Letter::{Alpha as A, AlphaStar as As, Gamma as G};

    fn m(p: i32, s: i32, t: i32) -> LaurentPoly {
        LaurentPoly::mono(p, s, t)
    }

    fn word_elem(coeff: LaurentPoly, gamma_pow: u32, ladder: i32) -> NCElement {
        let mut out = NCElement::zero();
        out.add_term(NormalWord::new(gamma_pow, ladder), coeff);
        out
    }

    #[test]
    fn contraction_rules() {
        let aa_s = NCElement::from_letters(LaurentPoly::one(), &[A, As]);
        assert_eq!(aa_s, &NCElement::one() - &word_elem(m(2, 0, 0), 2, 0));
        let a_sa = NCElement::from_letters(LaurentPoly::one(), &[As, A]);
        assert_eq!(a_sa, &NCElement::one() - &word_elem(LaurentPoly::one(), 2, 0));
    }

    #[test]
    fn alpha_star_gamma_alpha() {
        let lhs = NCElement::from_letters(LaurentPoly::one(), &[As, G, A]);
        let rhs = &word_elem(m(-1, 0, 0), 1, 0) - &word_elem(m(-1, 0, 0), 3, 0);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn small_products() {
        let g = NCElement::gamma();
        assert_eq!(&g * &g, word_elem(LaurentPoly::one(), 2, 0));
        assert_eq!(&NCElement::alpha() * &g, word_elem(LaurentPoly::p(), 1, 1));
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(NCElement::alpha().adjoint(), NCElement::alpha_star());
        let x = word_elem(LaurentPoly::t(), 1, 1);
        assert_eq!(x.adjoint(), word_elem(m(-1, 0, -1), 1, -1));
    }

    #[test]
    fn generators_have_two_terms() {
        let (x1, x2) = nc_build_generators();
        assert_eq!(x1.len(), 2);
        assert_eq!(x1.coeff(NormalWord::new(0, 1)), m(0, 1, 1));
        assert_eq!(x1.coeff(NormalWord::new(1, 0)), m(0, 0, -1));
        assert_eq!(x2.len(), 2);
        assert_eq!(x2.coeff(NormalWord::new(1, 0)), -m(1, 1, 1));
        assert_eq!(x2.coeff(NormalWord::new(0, -1)), m(0, 0, -1));
    }

    #[test]
    fn x1s_x1_term_for_term() {
        let e = nc_expand_canonical(Expansion::X1sX1);
        // α*γ is not reduced: S T^-2 α*γ appears as P^-1 S T^-2 γα*
        let expected: Vec<(NormalWord, LaurentPoly)> = vec![
            (NormalWord::ONE, m(0, 2, 0)),
            (NormalWord::new(1, -1), m(-1, 1, -2)),
            (NormalWord::new(1, 1), m(0, 1, 2)),
            (NormalWord::new(2, 0), LaurentPoly::one() - m(0, 2, 0)),
        ];
        let got: Vec<(NormalWord, LaurentPoly)> = e.terms().map(|(w, c)| (*w, c.clone())).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn suite_is_all_proven() {
        let suite = identity_suite();
        assert!(suite.len() >= 20);
        for check in &suite {
            assert!(check.proven, "{} not proven", check.identity);
        }
    }

    #[test]
    fn critical_overlaps_are_confluent() {
        for w in critical_overlaps() {
            assert_eq!(redexes(&w).len(), 2);
            assert!(check_local_confluence(&w));
        }
    }

    #[test]
    fn a_wrong_identity_is_rejected() {
        let (x1, x2) = nc_build_generators();
        let lhs = &(&x1.adjoint() * &x1) + &(&x2.adjoint() * &x2);
        let rhs = NCElement::scalar(LaurentPoly::mono(-2, 0, 0) + m(0, 2, 0));
        assert!(!nc_verify_identity(&lhs, &rhs));
    }

    #[test]
    fn rendering() {
        let (x1, _) = nc_build_generators();
        assert_eq!(x1.to_string(), "S*T * a^1 + T^-1 * g^1");
        let e = nc_expand_canonical(Expansion::X1sX1);
        assert_eq!(
            e.to_string(),
            "S^2 + P^-1*S*T^-2 * g^1 * A^1 + S*T^2 * g^1 * a^1 + (1 - S^2) * g^2"
        );
        assert_eq!(NCElement::zero().to_string(), "0");
    }

    fn arb_letters(max_len: usize) -> impl Strategy<Value = Vec<Letter>> {
        prop::collection::vec(prop_oneof![Just(A), Just(As), Just(G)], 0..=max_len)
    }

    fn arb_element() -> impl Strategy<Value = NCElement> {
        prop::collection::vec((arb_letters(4), -2i32..=2, -2i32..=2, -3i64..=3), 0..4).prop_map(
            |terms| {
                let mut free = FreeElement::new();
                for (letters, p, t, k) in terms {
                    free.push(LaurentPoly::mono(p, 1, t).scale(&num::BigRational::from_integer(k.into())), letters);
                }
                nc_normalize(&free).element
            },
        )
    }

    proptest! {
        #[test]
        fn reduction_terminates_polynomially(word in arb_letters(10)) {
            let n = word.len().max(1);
            let r = nc_normalize(&FreeElement::word(LaurentPoly::one(), word));
            prop_assert!(r.steps <= n.pow(4), "steps {} for length {}", r.steps, n);
            for (w, _) in r.element.terms() {
                prop_assert!(redexes(&w.letters()).is_empty());
            }
        }

        #[test]
        fn multiplication_is_associative(a in arb_element(), b in arb_element(), c in arb_element()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        }

        #[test]
        fn adjoint_is_involutive_antihomomorphism(a in arb_element(), b in arb_element()) {
            prop_assert_eq!(a.adjoint().adjoint(), a.clone());
            prop_assert_eq!((&a * &b).adjoint(), &b.adjoint() * &a.adjoint());
        }

        #[test]
        fn normal_form_is_independent_of_redex_choice(word in arb_letters(7)) {
            // rewrite at the rightmost redex first, then finish normally
            let reference = normalize_word(LaurentPoly::one(), word.clone());
            if let Some(&pos) = redexes(&word).last() {
                let mut free = FreeElement::new();
                for (c, w) in rewrite_at(&word, pos) {
                    free.push(c, w);
                }
                prop_assert_eq!(nc_normalize(&free).element, reference);
            }
        }
    }

    #[test]
    fn coefficients_evaluate() {
        let (x1, _) = nc_build_generators();
        let v = x1
            .coeff(NormalWord::new(0, 1))
            .eval(2.0, 4.0, Complex64::new(1.0, 0.0))
            .unwrap();
        assert!((v.re - 2.0).abs() < 1e-15);
    }
}

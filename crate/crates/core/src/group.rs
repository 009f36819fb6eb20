//! Countable groups with a fixed enumeration `g_0 = e, g_1, g_2, ...`.
//!
//! Three algebraic families back every instance: the integers under
//! addition, the rationals under addition, and the free group on `a, b`.
//! Elements are immutable canonical values, so structural equality is group
//! equality.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::ParseError;
use crate::exact::{format_ratio, parse_ratio};

/// A generator of the free group or its inverse.
///
/// Declaration order is the enumeration order `a < a^-1 < b < b^-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    A,
    AInv,
    B,
    BInv,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::A, Letter::AInv, Letter::B, Letter::BInv];

    pub fn inverse(self) -> Letter {
        match self {
            Letter::A => Letter::AInv,
            Letter::AInv => Letter::A,
            Letter::B => Letter::BInv,
            Letter::BInv => Letter::B,
        }
    }

    fn rank(self) -> usize {
        self as usize
    }

    fn as_char(self) -> char {
        match self {
            Letter::A => 'a',
            Letter::AInv => 'A',
            Letter::B => 'b',
            Letter::BInv => 'B',
        }
    }

    fn from_char(c: char) -> Option<Letter> {
        match c {
            'a' => Some(Letter::A),
            'A' => Some(Letter::AInv),
            'b' => Some(Letter::B),
            'B' => Some(Letter::BInv),
            _ => None,
        }
    }

    /// The three letters allowed after `self` in a reduced word, in order.
    fn successors(self) -> impl Iterator<Item = Letter> {
        let banned = self.inverse();
        Letter::ALL.into_iter().filter(move |l| *l != banned)
    }
}

/// A freely reduced word over `a, b` and their inverses.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Reduces an arbitrary letter sequence.
    pub fn reduce(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word::reduce(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

/// A canonical group element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Int(i64),
    Rat(BigRational),
    Word(Word),
}

impl Element {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Element::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_rat(&self) -> Option<&BigRational> {
        match self {
            Element::Rat(r) => Some(r),
            _ => None,
        }
    }
}

/// Trace serialization: decimal integers, `num/den` rationals, words over
/// `a A b B` with the empty word as `""`.
impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Int(n) => write!(f, "{n}"),
            Element::Rat(r) => f.write_str(&format_ratio(r)),
            Element::Word(w) => write!(f, "{w}"),
        }
    }
}

/// The algebraic family of an instance: its group law and enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// ℤ enumerated 0, 1, -1, 2, -2, ...
    Integers,
    /// ℚ enumerated 0, then the Calkin–Wilf sequence with each term
    /// followed by its negative.
    Rationals,
    /// F₂ enumerated length-lexicographically over reduced words.
    Free,
}

impl Family {
    pub fn enumeration_name(self) -> &'static str {
        match self {
            Family::Integers => "zigzag",
            Family::Rationals => "calkin-wilf-signed",
            Family::Free => "shortlex-aAbB",
        }
    }

    pub fn identity(self) -> Element {
        match self {
            Family::Integers => Element::Int(0),
            Family::Rationals => Element::Rat(BigRational::zero()),
            Family::Free => Element::Word(Word::empty()),
        }
    }

    pub fn compose(self, a: &Element, b: &Element) -> Element {
        match (self, a, b) {
            (Family::Integers, Element::Int(x), Element::Int(y)) => {
                Element::Int(x.checked_add(*y).expect("integer element overflow"))
            }
            (Family::Rationals, Element::Rat(x), Element::Rat(y)) => Element::Rat(x + y),
            (Family::Free, Element::Word(x), Element::Word(y)) => Element::Word(x.concat(y)),
            _ => panic!("elements {a:?} and {b:?} do not belong to the {self:?} family"),
        }
    }

    pub fn inverse(self, a: &Element) -> Element {
        match (self, a) {
            (Family::Integers, Element::Int(x)) => {
                Element::Int(x.checked_neg().expect("integer element overflow"))
            }
            (Family::Rationals, Element::Rat(x)) => Element::Rat(-x),
            (Family::Free, Element::Word(w)) => Element::Word(w.inverse()),
            _ => panic!("element {a:?} does not belong to the {self:?} family"),
        }
    }

    /// `a * b^-1`
    pub fn difference(self, a: &Element, b: &Element) -> Element {
        match (self, a, b) {
            (Family::Integers, Element::Int(x), Element::Int(y)) => {
                Element::Int(x.checked_sub(*y).expect("integer element overflow"))
            }
            (Family::Rationals, Element::Rat(x), Element::Rat(y)) => Element::Rat(x - y),
            _ => self.compose(a, &self.inverse(b)),
        }
    }

    pub fn is_abelian(self) -> bool {
        !matches!(self, Family::Free)
    }

    pub fn element_at(self, i: u64) -> Element {
        match self {
            Family::Integers => Element::Int(zigzag(i)),
            Family::Rationals => {
                if i == 0 {
                    return Element::Rat(BigRational::zero());
                }
                let k = i.div_ceil(2);
                let (n, d) = calkin_wilf_term(k);
                let n = BigInt::from(n);
                let n = if i % 2 == 1 { n } else { -n };
                Element::Rat(BigRational::new(n, BigInt::from(d)))
            }
            Family::Free => Element::Word(free_word_at(i)),
        }
    }

    pub fn index_of(self, x: &Element) -> BigUint {
        match (self, x) {
            (Family::Integers, Element::Int(n)) => BigUint::from(zigzag_index(*n)),
            (Family::Rationals, Element::Rat(r)) => {
                if r.is_zero() {
                    return BigUint::zero();
                }
                let k = calkin_wilf_index(r.numer().magnitude(), r.denom().magnitude());
                if r.is_positive() {
                    (k << 1u32) - 1u32
                } else {
                    k << 1u32
                }
            }
            (Family::Free, Element::Word(w)) => free_word_index(w),
            _ => panic!("element {x:?} does not belong to the {self:?} family"),
        }
    }

    /// `index_of` when it fits in a u64.
    pub fn small_index_of(self, x: &Element) -> Option<u64> {
        match (self, x) {
            (Family::Integers, Element::Int(n)) => u64::try_from(zigzag_index(*n)).ok(),
            _ => self.index_of(x).to_u64(),
        }
    }

    pub fn parse(self, s: &str) -> Result<Element, ParseError> {
        let bad = || ParseError::Element(s.to_string());
        match self {
            Family::Integers => s.parse::<i64>().map(Element::Int).map_err(|_| bad()),
            Family::Rationals => {
                if !s.contains('/') {
                    return Err(bad());
                }
                let r = parse_ratio(s).map_err(|_| bad())?;
                // canonical form is required on input too
                if format_ratio(&r) != s {
                    return Err(bad());
                }
                Ok(Element::Rat(r))
            }
            Family::Free => {
                let letters: Option<Vec<Letter>> = s.chars().map(Letter::from_char).collect();
                let letters = letters.ok_or_else(bad)?;
                let w = Word::reduce(letters.iter().copied());
                if w.len() != letters.len() {
                    return Err(bad());
                }
                Ok(Element::Word(w))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Enumerations

pub fn zigzag(i: u64) -> i64 {
    if i % 2 == 1 {
        i.div_ceil(2) as i64
    } else {
        -((i / 2) as i64)
    }
}

pub fn zigzag_index(n: i64) -> u128 {
    let m = (n as i128).unsigned_abs();
    if n > 0 {
        2 * m - 1
    } else {
        2 * m
    }
}

/// The k-th Calkin–Wilf term (1-based) as (numerator, denominator).
///
/// Walks the tree from the root along the binary digits of `k`: a 0 goes to
/// the left child a/(a+b), a 1 to the right child (a+b)/b.
pub fn calkin_wilf_term(k: u64) -> (u64, u64) {
    assert!(k >= 1, "Calkin-Wilf positions start at 1");
    let (mut a, mut b) = (1u64, 1u64);
    let top = 63 - k.leading_zeros();
    for bit in (0..top).rev() {
        if (k >> bit) & 1 == 0 {
            b += a;
        } else {
            a += b;
        }
    }
    (a, b)
}

/// Position (1-based) of a/b in the Calkin–Wilf sequence; gcd(a, b) = 1.
pub fn calkin_wilf_index(a: &BigUint, b: &BigUint) -> BigUint {
    // Walk up to the root in runs of identical steps, collecting the path
    // bits from the bottom.
    let mut runs: Vec<(bool, BigUint)> = Vec::new();
    let (mut a, mut b) = (a.clone(), b.clone());
    let one = BigUint::one();
    while !(a.is_one() && b.is_one()) {
        if a > b {
            let steps = if b.is_one() { &a - &one } else { &a / &b };
            a -= &steps * &b;
            runs.push((true, steps));
        } else {
            let steps = if a.is_one() { &b - &one } else { &b / &a };
            b -= &steps * &a;
            runs.push((false, steps));
        }
    }
    let mut index = BigUint::one();
    for (bit, count) in runs.into_iter().rev() {
        let count = count.to_u64().expect("Calkin-Wilf depth beyond u64");
        index <<= count;
        if bit {
            index += (BigUint::one() << count) - 1u32;
        }
    }
    index
}

fn pow3(e: u32) -> u128 {
    3u128.pow(e)
}

/// Index where words of length `len >= 1` start: 2·3^(len-1) − 1.
fn free_offset(len: u32) -> u128 {
    2 * pow3(len - 1) - 1
}

fn free_word_at(i: u64) -> Word {
    if i == 0 {
        return Word::empty();
    }
    let i = i as u128;
    let mut len = 1;
    while free_offset(len + 1) <= i {
        len += 1;
    }
    let mut rest = i - free_offset(len);
    let block = pow3(len - 1);
    let mut letters = vec![Letter::ALL[(rest / block) as usize]];
    rest %= block;
    for pos in (0..len - 1).rev() {
        let p = pow3(pos);
        let digit = (rest / p) as usize;
        rest %= p;
        let prev = *letters.last().unwrap();
        letters.push(prev.successors().nth(digit).unwrap());
    }
    Word(letters)
}

fn free_word_index(w: &Word) -> BigUint {
    let letters = w.letters();
    if letters.is_empty() {
        return BigUint::zero();
    }
    let len = letters.len() as u32;
    let three = BigUint::from(3u32);
    // offset(len) = 2 * 3^(len-1) - 1
    let mut index = BigUint::from(2u32) * three.pow(len - 1) - 1u32;
    let mut rank = BigUint::from(letters[0].rank());
    for pair in letters.windows(2) {
        let digit = pair[0].successors().position(|l| l == pair[1]).unwrap();
        rank = rank * 3u32 + digit;
    }
    index += rank;
    index
}

//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;

use discrete_cover::exact::Quad;
use discrete_cover::geometry::{Cell, CellSize, Topology};
use discrete_cover::group::Element;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pair budget above which a level's centers are no longer all enumerated.
pub const FULL_PAIR_LIMIT: u64 = 6561 * 6561;

#[derive(Debug, Default, Clone, Copy)]
pub struct Tally {
    pub membership: u64,
    pub disjoint: u64,
}

/// Integer representative of residue `r` mod `m`, pushed out of `[0, m)`
/// by a few multiples of `m` so valuations see negative and large offsets.
fn rep(r: u64, m: u64, salt: u64) -> i64 {
    let shift = [0i64, -1, 2, -3, 5][(salt % 5) as usize];
    r as i64 + shift * m as i64
}

/// Residues `r ∈ [0, p^big)` of the ball `c + p^k ℤ_p`, marked in a table.
fn ball_residues(p: u64, k: u32, big: u32, c: i64) -> Vec<bool> {
    let m = p.pow(big);
    let step = p.pow(k);
    let mut marks = vec![false; m as usize];
    let mut r = c.rem_euclid(step as i64) as u64;
    while r < m {
        marks[r as usize] = true;
        r += step;
    }
    marks
}

fn ball(c: i64, k: u32) -> Cell {
    Cell::new(Element::Int(c), CellSize::Level(k))
}

/// Centers used at modulus `m`: every residue when the pair count is small
/// enough, otherwise every residue mod `sub` for the first coordinate.
fn first_centers(m: u64, sub: u64) -> Vec<u64> {
    if m * m <= FULL_PAIR_LIMIT {
        (0..m).collect()
    } else {
        (0..sub).collect()
    }
}

/// Ball membership and disjointness against residue tables, levels `≤ kmax`.
pub fn padic_oracle(p: u64, kmax: u32, sub: u64) -> Result<Tally, String> {
    let topo = Topology::PAdic { p };
    let mut tally = Tally::default();
    for k in 0..=kmax {
        let m = p.pow(k);
        // membership: g ∈ c + p^k ℤ_p iff g's residue is marked
        for c in first_centers(m, sub) {
            let c = rep(c, m, c);
            let marks = ball_residues(p, k, k, c);
            for g in 0..m {
                let g_rep = rep(g, m, g + 1);
                let want = marks[g_rep.rem_euclid(m as i64) as usize];
                if topo.contains(&ball(c, k), &Element::Int(g_rep)) != want {
                    return Err(format!("p={p} k={k}: membership of {g_rep} in ball at {c}"));
                }
                tally.membership += 1;
            }
        }
        // disjointness at equal level: residue sets mod p^k share nothing
        for c1 in first_centers(m, sub) {
            let a = rep(c1, m, c1 + 2);
            let marks = ball_residues(p, k, k, a);
            for c2 in 0..m {
                let b = rep(c2, m, c2);
                let want = !marks[b.rem_euclid(m as i64) as usize];
                if topo.cells_disjoint(&ball(a, k), &ball(b, k)) != want {
                    return Err(format!("p={p} k={k}: balls at {a} and {b}"));
                }
                tally.disjoint += 1;
            }
        }
    }
    Ok(tally)
}

/// Disjointness of balls at different levels `k1 < k2 ≤ kmax`. The level-k1
/// ball is tabulated as its residues mod `p^k2`; a level-k2 ball is a single
/// residue there, so the balls meet iff that residue is marked. Centers run
/// over every residue until `pairs` comparisons or `cells` table entries per
/// level pair would be exceeded, then step by a unit.
pub fn padic_mixed_oracle(p: u64, kmax: u32, pairs: u64, cells: u64) -> Result<u64, String> {
    let topo = Topology::PAdic { p };
    let mut count = 0;
    for k2 in 1..=kmax {
        let m2 = p.pow(k2);
        for k1 in 0..k2 {
            let m1 = p.pow(k1);
            let n1 = m1.min((cells / m2).max(1));
            let s1 = if n1 == m1 { 1 } else { unit_stride(p, m1 / n1) };
            let n2 = m2.min((pairs / n1).max(1));
            let s2 = if n2 == m2 { 1 } else { unit_stride(p, m2 / n2) };
            let mut c1 = 0;
            while c1 < m1 {
                let a = rep(c1, m1, c1);
                let big = ball_residues(p, k1, k2, a);
                let mut c2 = 0;
                while c2 < m2 {
                    let b = rep(c2, m2, c2 + 1);
                    let meet = big[b.rem_euclid(m2 as i64) as usize];
                    if topo.cells_disjoint(&ball(a, k1), &ball(b, k2)) == meet
                        || topo.cells_disjoint(&ball(b, k2), &ball(a, k1)) == meet
                    {
                        return Err(format!("p={p}: level {k1} at {a} vs level {k2} at {b}"));
                    }
                    count += 1;
                    c2 += s2;
                }
                c1 += s1;
            }
        }
    }
    Ok(count)
}

/// Smallest stride `≥ s` prime to `p`.
fn unit_stride(p: u64, s: u64) -> u64 {
    (s..).find(|t| t % p != 0).unwrap()
}

/// `a + b√5` evaluated with 100 correct decimal digits; `None` when the
/// value is too close to zero to call at that precision.
pub fn decimal_sign(q: &Quad, digits: u32) -> Option<Ordering> {
    let scale = BigInt::from(10u32).pow(digits);
    let root = (BigInt::from(5) * &scale * &scale).sqrt(); // ⌊√5·10^digits⌋
    let (an, ad) = (q.rational.numer(), q.rational.denom());
    let (bn, bd) = (q.surd.numer(), q.surd.denom());
    // a + b√5 ≈ (an·bd·10^d + bn·ad·root) / (ad·bd·10^d), error < |bn·ad|
    let approx = an * bd * &scale + bn * ad * &root;
    let err = (bn * ad).abs() + 1;
    if approx.abs() <= err {
        None
    } else {
        Some(if approx.is_positive() { Ordering::Greater } else { Ordering::Less })
    }
}

/// Random elements of Q(√5) with a share of near-cancelling pairs built from
/// Lucas and Fibonacci numbers (`L_n − F_n√5 → 0`).
pub fn quad_samples(count: usize, seed: u64) -> Vec<Quad> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let (mut f, mut l) = (vec![BigInt::from(0), BigInt::from(1)], vec![BigInt::from(2), BigInt::from(1)]);
    for i in 2..160 {
        let fi = &f[i - 1] + &f[i - 2];
        let li = &l[i - 1] + &l[i - 2];
        f.push(fi);
        l.push(li);
    }
    let rat = |rng: &mut ChaCha8Rng, bits: u32| {
        let n: i64 = rng.gen_range(-(1i64 << bits)..=(1i64 << bits));
        let d: i64 = rng.gen_range(1..=(1i64 << 20));
        BigRational::new(n.into(), d.into())
    };
    while out.len() < count {
        let q = if rng.gen_bool(0.3) {
            let n = rng.gen_range(2..160);
            let scale = loop {
                let s = rat(&mut rng, 30);
                if !s.is_zero() {
                    break s;
                }
            };
            let sign = if rng.gen_bool(0.5) { BigInt::from(1) } else { BigInt::from(-1) };
            let a = BigRational::from_integer(l[n].clone() * &sign) * &scale;
            let b = -BigRational::from_integer(f[n].clone() * &sign) * &scale;
            Quad::new(a, b)
        } else {
            let bits = rng.gen_range(1..60);
            Quad::new(rat(&mut rng, bits), rat(&mut rng, bits))
        };
        if !(q.rational.is_zero() && q.surd.is_zero()) {
            out.push(q);
        }
    }
    out
}

/// Exact signs of `a − b` for consecutive samples against 100-digit decimals.
pub fn quad_sign_oracle(count: usize, seed: u64) -> Result<usize, String> {
    let samples = quad_samples(count + 1, seed);
    let mut checked = 0;
    for pair in samples.windows(2) {
        for q in [pair[0].clone(), &pair[0] - &pair[1]] {
            if checked == count {
                return Ok(checked);
            }
            let exact = q.signum();
            match decimal_sign(&q, 100) {
                Some(s) if s == exact => checked += 1,
                Some(s) => return Err(format!("{q}: exact {exact:?}, decimal {s:?}")),
                None if q.rational.is_zero() && q.surd.is_zero() => checked += 1,
                None => return Err(format!("{q}: not resolved at 100 digits")),
            }
        }
    }
    Ok(checked)
}

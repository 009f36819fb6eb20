mod common;

use std::cmp::Ordering;

use discrete_cover::exact::Quad;
use discrete_cover::geometry::{Cell, CellSize, Topology};
use discrete_cover::group::Element;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;

#[test]
fn padic_balls_match_residue_tables() {
    for (p, kmax) in [(2, 8), (3, 6), (5, 4)] {
        let t = common::padic_oracle(p, kmax, 125).unwrap();
        assert!(t.membership > 0 && t.disjoint > 0);
    }
}

#[test]
fn padic_mixed_levels() {
    for p in [2, 3, 5] {
        assert!(common::padic_mixed_oracle(p, 5, 200_000, 1_000_000).unwrap() > 0);
    }
}

#[test]
fn quad_signs_match_decimals() {
    assert_eq!(common::quad_sign_oracle(300, 7).unwrap(), 300);
}

#[test]
fn decimal_sign_is_honest_near_zero() {
    // L_150 − F_150·√5 ≈ 1e-31: resolved at 100 digits, not at 20
    let mut f = (BigInt::from(0), BigInt::from(1));
    let mut l = (BigInt::from(2), BigInt::from(1));
    for _ in 0..150 {
        f = (f.1.clone(), &f.0 + &f.1);
        l = (l.1.clone(), &l.0 + &l.1);
    }
    let q = Quad::new(BigRational::from_integer(l.0), -BigRational::from_integer(f.0));
    assert_eq!(common::decimal_sign(&q, 100), Some(Ordering::Greater));
    assert_eq!(q.signum(), Ordering::Greater);
    assert_eq!(common::decimal_sign(&q, 20), None);
}

#[test]
fn golden_arcs_against_decimal_positions() {
    // nφ mod 1 to 60 digits; arcs of radius 2^-(k+1) around 0 and n
    let digits = 60u32;
    let scale = BigInt::from(10u32).pow(digits);
    let root = (BigInt::from(5) * &scale * &scale).sqrt();
    let phi: BigInt = (&root - &scale) / 2; // ⌊φ·10^60⌋ up to one unit
    let topo = Topology::GoldenCircle;
    for n in -300i64..=300 {
        let x = (&phi * BigInt::from(n)).mod_floor(&scale);
        let slack = n.abs() + 2; // truncation error of φ, scaled
        let dist = x.clone().min(&scale - &x); // circle distance to 0, scaled
        for k in 0..12u32 {
            let width = &scale >> (k + 1); // 2^-(k+1)
            // closed arcs about 0 and nφ, radius 2^-(k+1) each
            let want_disjoint = dist > &width * 2 + slack;
            let want_overlap = dist < &width * 2 - slack;
            let got = topo.cells_disjoint(
                &Cell::new(Element::Int(0), CellSize::Level(k)),
                &Cell::new(Element::Int(n), CellSize::Level(k)),
            );
            if want_disjoint {
                assert!(got, "n={n} k={k}");
            }
            if want_overlap {
                assert!(!got, "n={n} k={k}");
            }
            let inside = topo.contains(&Cell::new(Element::Int(0), CellSize::Level(k)), &Element::Int(n));
            if dist > &width + slack {
                assert!(!inside, "n={n} k={k}");
            }
            if dist < &width - slack {
                assert!(inside, "n={n} k={k}");
            }
        }
    }
}

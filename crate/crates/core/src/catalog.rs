//! Built-in examples with their expected results.
//!
//! Labels: `P2`, `P1xP1`, `cp2-blowup`, `cpn-blowup/n=<k>`, `B1`,
//! `hirzebruch/a=<k>` and `reflexive2d/<label>` for the sixteen reflexive
//! polygons (`3`, `4a`-`4c`, `5a`-`5b`, `6a`-`6d`, `7a`-`7b`, `8a`-`8c`, `9`).
//! A reflexive label names the polygon used as the moment polytope Δ.

use crate::error::{invalid, Result};
use crate::function::AffineFunction;
use crate::geometry::{FanoPair, HalfSpace, RationalVector};
use crate::rational::{int, rat, Rational};
use crate::stability::Classification;

#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedValue {
    pub value: f64,
    pub tol: f64,
    pub exact: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedDestabilizer {
    /// `[c0, c1, .., cn]` of `h`.
    pub coeffs: Vec<f64>,
    pub tol: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Expected {
    pub classification: Option<Classification>,
    pub ricci: Option<AffineFunction>,
    pub smooth: Option<bool>,
    pub destabilizer: Option<ExpectedDestabilizer>,
    pub energy_infimum: Option<ExpectedValue>,
    /// Label of the polygon whose moment polytope is dual to this one.
    pub dual_label: Option<String>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub label: String,
    pub pair: FanoPair,
    pub expected: Expected,
}

fn pts(v: &[&[i64]]) -> Vec<RationalVector> {
    v.iter().map(|p| p.iter().map(|&x| int(x)).collect()).collect()
}

/// Moment polytopes of the primal column of the reflexive polygon table.
const PRIMAL: [(&str, &[&[i64]]); 10] = [
    ("3", &[&[1, 0], &[0, 1], &[-1, -1]]),
    ("4a", &[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]]),
    ("4b", &[&[1, 0], &[1, 1], &[0, 1], &[-1, -1]]),
    ("4c", &[&[1, 0], &[0, 1], &[-2, -1]]),
    ("5a", &[&[1, 0], &[1, 1], &[0, 1], &[-1, 0], &[-1, -1]]),
    ("5b", &[&[1, 0], &[0, 1], &[-1, 1], &[-1, -1]]),
    ("6a", &[&[1, 0], &[1, 1], &[0, 1], &[-1, 0], &[-1, -1], &[0, -1]]),
    ("6b", &[&[-2, -1], &[-1, -1], &[1, 0], &[1, 1], &[0, 1]]),
    ("6c", &[&[-2, -1], &[-1, -1], &[2, 1], &[0, 1]]),
    ("6d", &[&[-1, 1], &[1, 1], &[-1, -2]]),
];

/// Dual labels: the moment polytope of the right column is the dual of the left one.
const DUALS: [(&str, &str); 6] = [("3", "9"), ("4a", "8a"), ("4b", "8b"), ("4c", "8c"), ("5a", "7a"), ("5b", "7b")];

/// `(label, smooth, sign)` with sign 2 for Kähler-Einstein.
const TABLE: [(&str, bool, i32); 16] = [
    ("3", false, 2),
    ("9", true, 2),
    ("4a", false, 2),
    ("8a", true, 2),
    ("4b", false, 1),
    ("8b", true, 1),
    ("4c", false, 0),
    ("8c", false, 0),
    ("5a", false, 1),
    ("7a", true, 1),
    ("5b", false, -1),
    ("7b", false, -1),
    ("6a", true, 2),
    ("6b", false, 1),
    ("6c", false, -1),
    ("6d", false, -1),
];

pub const REFLEXIVE_LABELS: [&str; 16] = [
    "3", "4a", "4b", "4c", "5a", "5b", "6a", "6b", "6c", "6d", "7a", "7b", "8a", "8b", "8c", "9",
];

fn sign_class(sign: i32) -> Classification {
    match sign {
        2 => Classification::KahlerEinstein,
        1 => Classification::UniformlyStable,
        0 => Classification::Semistable,
        _ => Classification::Unstable,
    }
}

fn reflexive_pair(label: &str) -> Result<FanoPair> {
    if let Some((_, v)) = PRIMAL.iter().find(|(l, _)| *l == label) {
        return FanoPair::from_delta_vertices(2, &pts(v));
    }
    if let Some((primal, _)) = DUALS.iter().find(|(_, d)| *d == label) {
        let (_, v) = PRIMAL.iter().find(|(l, _)| l == primal).unwrap();
        return FanoPair::from_fano_vertices(2, &pts(v));
    }
    invalid(format!("unknown reflexive polygon {label:?}"))
}

fn reflexive_entry(label: &str) -> Result<CatalogEntry> {
    let pair = reflexive_pair(label)?;
    let (_, smooth, sign) = TABLE.iter().find(|(l, _, _)| *l == label).unwrap();
    let dual_label = DUALS
        .iter()
        .find_map(|(a, b)| {
            if *a == label {
                Some(b.to_string())
            } else if *b == label {
                Some(a.to_string())
            } else {
                None
            }
        })
        .or_else(|| label.starts_with('6').then(|| label.to_string()));
    let mut expected = Expected {
        classification: Some(sign_class(*sign)),
        smooth: Some(*smooth),
        dual_label,
        ..Expected::default()
    };
    if label == "6d" {
        let s7 = 7f64.sqrt();
        let a = (67.0 + 26.0 * s7) / 162.0;
        let b = 2.0 * (29.0 + 4.0 * s7) / 243.0;
        let c = 7.0 * (29.0 + 4.0 * s7) / 486.0;
        expected.destabilizer = Some(ExpectedDestabilizer { coeffs: vec![c, a, -b], tol: 1e-9 });
        expected
            .notes
            .push("h = a y1 - b y2 + c with a = (67+26√7)/162, b = 2(29+4√7)/243, c = 7(29+4√7)/486".into());
    }
    if label == "8b" {
        expected.energy_infimum = Some(ExpectedValue { value: 1.0 / 11.0, tol: 0.0, exact: Some(rat(1, 11)) });
    }
    Ok(CatalogEntry { label: format!("reflexive2d/{label}"), pair, expected })
}

/// `P^2` blown up at a point as `cpn-blowup` with `n = 2`; generally `Δ = { y_i >= -1, -1 <= Σ y_i <= 1 }`.
pub fn cpn_blowup(n: usize) -> Result<FanoPair> {
    if n < 1 {
        return invalid("n must be positive");
    }
    let mut hs: Vec<HalfSpace> = (0..n)
        .map(|i| HalfSpace::new((0..n).map(|j| int((i == j) as i64)).collect(), int(1)))
        .collect();
    hs.push(HalfSpace::new(vec![int(1); n], int(1)));
    hs.push(HalfSpace::new(vec![int(-1); n], int(1)));
    FanoPair::from_halfspaces(n, hs)
}

/// `Q = conv{(1,0), (0,1), (-a,-1)}`.
pub fn hirzebruch(a: i64) -> Result<FanoPair> {
    if a < 1 {
        return invalid("a must be at least 1");
    }
    FanoPair::from_fano_vertices(2, &pts(&[&[1, 0], &[0, 1], &[-a, -1]]))
}

/// `Δ = { y1 + y2 + 2 y3 <= 1, y1 >= -1, y2 >= -1, -1 <= y3 <= 1 }`.
pub fn b1() -> Result<FanoPair> {
    let h = |n: &[i64]| HalfSpace::new(n.iter().map(|&x| int(x)).collect(), int(1));
    FanoPair::from_halfspaces(3, vec![h(&[-1, -1, -2]), h(&[1, 0, 0]), h(&[0, 1, 0]), h(&[0, 0, 1]), h(&[0, 0, -1])])
}

/// Root of the cubic defining the constant of the three-fold destabilizer `h = a (y3 + b)`.
pub fn b1_cubic_root() -> f64 {
    let s = 51f64.sqrt();
    (30.0 * (9.0 + s)).cbrt() / 6.0 + (30.0 * (9.0 - s)).cbrt() / 6.0 - 1.0
}

pub fn entry(label: &str) -> Result<CatalogEntry> {
    if let Some(l) = label.strip_prefix("reflexive2d/") {
        return reflexive_entry(l);
    }
    if let Some(a) = label.strip_prefix("hirzebruch/a=") {
        let a: i64 = a.parse().map_err(|_| crate::error::Error::InvalidInput(format!("bad parameter in {label:?}")))?;
        let pair = hirzebruch(a)?;
        let classification = Some(match a {
            1 => Classification::KahlerEinstein,
            2 => Classification::Semistable,
            _ => Classification::Unstable,
        });
        let gor = if a % 2 == 1 { a } else { a / 2 };
        let notes = vec![format!("Gorenstein index {gor}")];
        return Ok(CatalogEntry { label: label.into(), pair, expected: Expected { classification, notes, ..Expected::default() } });
    }
    if let Some(n) = label.strip_prefix("cpn-blowup/n=") {
        let n: usize = n.parse().map_err(|_| crate::error::Error::InvalidInput(format!("bad parameter in {label:?}")))?;
        return Ok(CatalogEntry { label: label.into(), pair: cpn_blowup(n)?, expected: Expected::default() });
    }
    match label {
        "P2" => Ok(CatalogEntry {
            label: label.into(),
            pair: FanoPair::from_fano_vertices(2, &pts(&[&[1, 0], &[0, 1], &[-1, -1]]))?,
            expected: Expected {
                classification: Some(Classification::KahlerEinstein),
                ricci: Some(AffineFunction::new(vec![rat(2, 9), int(0), int(0)])),
                smooth: Some(true),
                energy_infimum: Some(ExpectedValue { value: 0.0, tol: 0.0, exact: Some(int(0)) }),
                ..Expected::default()
            },
        }),
        "P1xP1" => Ok(CatalogEntry {
            label: label.into(),
            pair: FanoPair::from_fano_vertices(2, &pts(&[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]]))?,
            expected: Expected {
                classification: Some(Classification::KahlerEinstein),
                smooth: Some(true),
                ..Expected::default()
            },
        }),
        "cp2-blowup" => Ok(CatalogEntry {
            label: label.into(),
            pair: cpn_blowup(2)?,
            expected: Expected {
                classification: Some(Classification::UniformlyStable),
                ricci: Some(AffineFunction::new(vec![rat(3, 11), rat(-3, 22), rat(-3, 22)])),
                smooth: Some(true),
                energy_infimum: Some(ExpectedValue { value: 1.0 / 11.0, tol: 0.0, exact: Some(rat(1, 11)) }),
                ..Expected::default()
            },
        }),
        "B1" => {
            let b = b1_cubic_root();
            let a = 0.1727;
            Ok(CatalogEntry {
                label: label.into(),
                pair: b1()?,
                expected: Expected {
                    classification: Some(Classification::Unstable),
                    ricci: Some(AffineFunction::new(vec![rat(57, 349), int(0), int(0), rat(60, 349)])),
                    smooth: Some(true),
                    destabilizer: Some(ExpectedDestabilizer { coeffs: vec![a * b, 0.0, 0.0, a], tol: 5e-4 }),
                    energy_infimum: Some(ExpectedValue { value: 0.6878, tol: 5e-4, exact: None }),
                    notes: vec!["h = a (y3 + b), a ≈ 0.1727, b = cubic radical ≈ 0.9455".into()],
                    ..Expected::default()
                },
            })
        }
        _ => invalid(format!("unknown catalog label {label:?}")),
    }
}

/// Labels of the fixed entries (parametric families are listed with representative parameters).
pub fn labels() -> Vec<String> {
    let mut out: Vec<String> = ["P2", "P1xP1", "cp2-blowup", "cpn-blowup/n=3", "B1"].iter().map(|s| s.to_string()).collect();
    out.extend((2..=5).map(|a| format!("hirzebruch/a={a}")));
    out.extend(REFLEXIVE_LABELS.iter().map(|l| format!("reflexive2d/{l}")));
    out
}

pub fn catalog() -> Result<Vec<CatalogEntry>> {
    labels().iter().map(|l| entry(l)).collect()
}

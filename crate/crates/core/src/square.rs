//! Matrix-level data of the Tartar square.
//!
//! All matrices involved are diagonal, so they are stored as the pair of
//! diagonal entries. The four wells `A1..A4`, the auxiliary corners
//! `P1..P4` of the inner square and the first-order states `B1`, `B2` are
//! integer matrices; hull and projection queries are exact on them.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// Absolute tolerance used by floating-point hull membership tests.
pub const HULL_TOL: f64 = 1e-12;

/// A diagonal 2x2 matrix `diag(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagMatrix {
    pub a: f64,
    pub b: f64,
}

impl DiagMatrix {
    pub const ZERO: DiagMatrix = DiagMatrix { a: 0.0, b: 0.0 };

    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// Squared Frobenius norm.
    pub fn norm_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }

    pub fn dist_sq(&self, other: &DiagMatrix) -> f64 {
        (*self - *other).norm_sq()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(s * self.a, s * self.b)
    }
}

impl std::ops::Sub for DiagMatrix {
    type Output = DiagMatrix;
    fn sub(self, rhs: Self) -> Self {
        DiagMatrix::new(self.a - rhs.a, self.b - rhs.b)
    }
}

impl std::ops::Add for DiagMatrix {
    type Output = DiagMatrix;
    fn add(self, rhs: Self) -> Self {
        DiagMatrix::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl std::ops::Neg for DiagMatrix {
    type Output = DiagMatrix;
    fn neg(self) -> Self {
        DiagMatrix::new(-self.a, -self.b)
    }
}

impl fmt::Display for DiagMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "diag({}, {})", self.a, self.b)
    }
}

/// One of the four phases; phase `i` is the well `A_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Phase {
    A1 = 1,
    A2 = 2,
    A3 = 3,
    A4 = 4,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::A1, Phase::A2, Phase::A3, Phase::A4];

    pub fn from_index(i: u8) -> Option<Phase> {
        match i {
            1 => Some(Phase::A1),
            2 => Some(Phase::A2),
            3 => Some(Phase::A3),
            4 => Some(Phase::A4),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    /// The phase of `-A_i`: `A3 = -A1`, `A4 = -A2`.
    pub fn opposite(self) -> Phase {
        match self {
            Phase::A1 => Phase::A3,
            Phase::A2 => Phase::A4,
            Phase::A3 => Phase::A1,
            Phase::A4 => Phase::A2,
        }
    }

    pub fn matrix(self) -> DiagMatrix {
        phase_matrix(self)
    }

    /// The integer diagonal `(chi11, chi22)` of this well.
    pub fn diag_ints(self) -> (i32, i32) {
        match self {
            Phase::A1 => (-1, -3),
            Phase::A2 => (-3, 1),
            Phase::A3 => (1, 3),
            Phase::A4 => (3, -1),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{}", self.index())
    }
}

pub fn phase_matrix(i: Phase) -> DiagMatrix {
    let (a, b) = i.diag_ints();
    DiagMatrix::new(a as f64, b as f64)
}

/// Corner `P_i` of the inner square, `i` in `1..=4`.
pub fn aux_matrix(i: u8) -> DiagMatrix {
    match i {
        1 => DiagMatrix::new(-1.0, -1.0),
        2 => DiagMatrix::new(-1.0, 1.0),
        3 => DiagMatrix::new(1.0, 1.0),
        4 => DiagMatrix::new(1.0, -1.0),
        _ => panic!("auxiliary index {i} out of range 1..=4"),
    }
}

pub const B1: DiagMatrix = DiagMatrix::new(-1.0, 0.0);
pub const B2: DiagMatrix = DiagMatrix::new(1.0, 0.0);

/// `(chi11, chi22)` for phase weights `w1..w4`.
pub fn chi_diag(w: [f64; 4]) -> (f64, f64) {
    let [w1, w2, w3, w4] = w;
    (
        -w1 + w3 - 3.0 * w2 + 3.0 * w4,
        -3.0 * w1 + 3.0 * w3 + w2 - w4,
    )
}

/// Nearest well in Frobenius distance, ties resolved towards the lowest index.
pub fn project_to_k(m: &DiagMatrix) -> Phase {
    let mut best = Phase::A1;
    let mut best_d = m.dist_sq(&Phase::A1.matrix());
    for p in &Phase::ALL[1..] {
        let d = m.dist_sq(&p.matrix());
        if d < best_d {
            best = *p;
            best_d = d;
        }
    }
    best
}

pub fn dist_to_k(m: &DiagMatrix) -> f64 {
    Phase::ALL
        .iter()
        .map(|p| m.dist_sq(&p.matrix()))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

pub fn is_well(m: &DiagMatrix) -> bool {
    dist_to_k(m) <= HULL_TOL
}

/// Diagonal matrices are rank-one connected iff they differ in exactly one entry.
pub fn rank_one_connected(x: &DiagMatrix, y: &DiagMatrix) -> bool {
    let d = *x - *y;
    (d.a != 0.0) != (d.b != 0.0)
}

/// Part of `K^qc` a matrix belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HullRegion {
    /// The inner square `conv{P1..P4}`.
    ConvP,
    /// The segment `conv{A_i, P_i}` (outside the inner square).
    Segment(u8),
    Outside,
}

impl HullRegion {
    pub fn contains(self) -> bool {
        !matches!(self, HullRegion::Outside)
    }
}

impl fmt::Display for HullRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HullRegion::ConvP => write!(f, "convP"),
            HullRegion::Segment(i) => write!(f, "segment-{i}"),
            HullRegion::Outside => write!(f, "outside"),
        }
    }
}

/// Membership in `K^qc = conv{P1..P4} ∪ conv{A_i,P_i}`, with tolerance [`HULL_TOL`].
pub fn in_qc_hull(m: &DiagMatrix) -> HullRegion {
    let tol = HULL_TOL;
    let (a, b) = (m.a, m.b);
    let eq = |x: f64, y: f64| (x - y).abs() <= tol;
    let within = |x: f64, lo: f64, hi: f64| x >= lo - tol && x <= hi + tol;
    if a.abs() <= 1.0 + tol && b.abs() <= 1.0 + tol {
        HullRegion::ConvP
    } else if eq(a, -1.0) && within(b, -3.0, -1.0) {
        HullRegion::Segment(1)
    } else if eq(b, 1.0) && within(a, -3.0, -1.0) {
        HullRegion::Segment(2)
    } else if eq(a, 1.0) && within(b, 1.0, 3.0) {
        HullRegion::Segment(3)
    } else if eq(b, -1.0) && within(a, 1.0, 3.0) {
        HullRegion::Segment(4)
    } else {
        HullRegion::Outside
    }
}

/// Exact variant of [`in_qc_hull`] for rational entries.
pub fn in_qc_hull_exact(a: Ratio<i64>, b: Ratio<i64>) -> HullRegion {
    let one = Ratio::from_integer(1);
    let three = Ratio::from_integer(3);
    let within = |x: Ratio<i64>, lo: Ratio<i64>, hi: Ratio<i64>| x >= lo && x <= hi;
    if within(a, -one, one) && within(b, -one, one) {
        HullRegion::ConvP
    } else if a == -one && within(b, -three, -one) {
        HullRegion::Segment(1)
    } else if b == one && within(a, -three, -one) {
        HullRegion::Segment(2)
    } else if a == one && within(b, one, three) {
        HullRegion::Segment(3)
    } else if b == -one && within(a, one, three) {
        HullRegion::Segment(4)
    } else {
        HullRegion::Outside
    }
}

/// A polynomial with rational coefficients, stored over a common denominator
/// so that evaluation at small integers is exact in floating point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingPoly {
    /// Numerators in ascending degree.
    numerators: Vec<i64>,
    denominator: i64,
}

impl CouplingPoly {
    pub fn new(numerators: Vec<i64>, denominator: i64) -> Self {
        assert!(denominator > 0, "denominator must be positive");
        let mut numerators = numerators;
        while numerators.len() > 1 && *numerators.last().unwrap() == 0 {
            numerators.pop();
        }
        Self {
            numerators,
            denominator,
        }
    }

    pub fn degree(&self) -> usize {
        self.numerators.len().saturating_sub(1)
    }

    pub fn coefficients(&self) -> Vec<Ratio<i64>> {
        self.numerators
            .iter()
            .map(|&c| Ratio::new(c, self.denominator))
            .collect()
    }

    pub fn eval_exact(&self, t: Ratio<i64>) -> Ratio<i64> {
        let mut acc = Ratio::from_integer(0);
        for &c in self.numerators.iter().rev() {
            acc = acc * t + Ratio::from_integer(c);
        }
        acc / Ratio::from_integer(self.denominator)
    }

    /// Horner on the integer numerators, one final division.
    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.numerators.iter().rev() {
            acc = acc * t + c as f64;
        }
        acc / self.denominator as f64
    }

    pub fn negated(&self) -> Self {
        Self::new(
            self.numerators.iter().map(|c| -c).collect(),
            self.denominator,
        )
    }
}

/// The interpolating pair `g(t) = (5 t^3 - 41 t) / 12`, `h = -g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingPolys {
    pub g: CouplingPoly,
    pub h: CouplingPoly,
}

impl CouplingPolys {
    pub fn tartar() -> Self {
        let g = CouplingPoly::new(vec![0, -41, 0, 5], 12);
        let h = g.negated();
        Self { g, h }
    }

    pub fn degree(&self) -> usize {
        self.g.degree().max(self.h.degree())
    }
}

impl Default for CouplingPolys {
    fn default() -> Self {
        Self::tartar()
    }
}

pub fn eval_g(t: f64) -> f64 {
    CouplingPolys::tartar().g.eval(t)
}

pub fn eval_h(t: f64) -> f64 {
    CouplingPolys::tartar().h.eval(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Ratio<i64> {
        Ratio::from_integer(n)
    }

    #[test]
    fn wells() {
        assert_eq!(phase_matrix(Phase::A1), DiagMatrix::new(-1.0, -3.0));
        assert_eq!(phase_matrix(Phase::A3), -phase_matrix(Phase::A1));
        assert_eq!(phase_matrix(Phase::A4), -phase_matrix(Phase::A2));
        assert_eq!(phase_matrix(Phase::A4), DiagMatrix::new(3.0, -1.0));
    }

    #[test]
    fn chi_diag_examples() {
        assert_eq!(chi_diag([1.0, 0.0, 0.0, 0.0]), (-1.0, -3.0));
        assert_eq!(chi_diag([0.0; 4]), (0.0, 0.0));
        assert_eq!(chi_diag([0.25; 4]), (0.0, 0.0));
        for p in Phase::ALL {
            let mut w = [0.0; 4];
            w[p.index() as usize - 1] = 1.0;
            let (a, b) = chi_diag(w);
            assert_eq!(DiagMatrix::new(a, b), p.matrix());
        }
    }

    #[test]
    fn coupling_values() {
        let polys = CouplingPolys::tartar();
        assert_eq!(polys.g.eval_exact(r(-3)), r(-1));
        assert_eq!(polys.g.eval_exact(r(0)), r(0));
        assert_eq!(polys.g.eval_exact(r(2)), Ratio::new(-7, 2));
        assert_eq!(polys.h.eval_exact(r(-1)), r(-3));
        assert_eq!(eval_g(-3.0), -1.0);
        assert_eq!(eval_g(2.0), -3.5);
        assert_eq!(eval_h(-1.0), -3.0);
        assert_eq!(polys.degree(), 3);
        assert_eq!(
            polys.g.coefficients(),
            vec![r(0), Ratio::new(-41, 12), r(0), Ratio::new(5, 12)]
        );
    }

    #[test]
    fn coupling_interpolates_the_wells() {
        let polys = CouplingPolys::tartar();
        for p in Phase::ALL {
            let (c11, c22) = p.diag_ints();
            assert_eq!(polys.g.eval_exact(r(c22 as i64)), r(c11 as i64));
            assert_eq!(polys.h.eval_exact(r(c11 as i64)), r(c22 as i64));
            assert_eq!(polys.g.eval(c22 as f64), c11 as f64);
            assert_eq!(polys.h.eval(c11 as f64), c22 as f64);
        }
        for t in [-3, -1, 1, 3] {
            assert_eq!(polys.h.eval_exact(polys.g.eval_exact(r(t))), r(t));
        }
    }

    #[test]
    fn no_rank_one_connections_in_k() {
        for i in Phase::ALL {
            for j in Phase::ALL {
                if i < j {
                    let d = i.matrix() - j.matrix();
                    assert!(d.a != 0.0 && d.b != 0.0, "{i} and {j}");
                    assert!(!rank_one_connected(&i.matrix(), &j.matrix()));
                }
            }
        }
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_to_k(&aux_matrix(1)), Phase::A1);
        assert_eq!(project_to_k(&Phase::A1.matrix()), Phase::A1);
        assert_eq!(project_to_k(&B1), Phase::A2);
        assert_eq!(B1.dist_sq(&Phase::A2.matrix()), 5.0);
        assert_eq!(B1.dist_sq(&Phase::A1.matrix()), 9.0);
        for i in 1..=4u8 {
            assert_eq!(project_to_k(&aux_matrix(i)).index(), i);
        }
    }

    #[test]
    fn projection_tie_breaks_low() {
        // The origin is equidistant from all four wells.
        assert_eq!(project_to_k(&DiagMatrix::ZERO), Phase::A1);
    }

    #[test]
    fn projection_symmetry() {
        let samples = [
            DiagMatrix::new(0.3, -2.2),
            DiagMatrix::new(-1.7, 0.4),
            DiagMatrix::new(2.5, 2.5),
            DiagMatrix::new(-0.1, 0.9),
        ];
        for m in samples {
            assert_eq!(project_to_k(&-m), project_to_k(&m).opposite());
        }
        for p in Phase::ALL {
            assert_eq!(project_to_k(&p.matrix()), p);
        }
    }

    #[test]
    fn distance_examples() {
        assert!((dist_to_k(&DiagMatrix::ZERO) - 10f64.sqrt()).abs() < 1e-15);
        assert_eq!(dist_to_k(&Phase::A2.matrix()), 0.0);
        assert_eq!(dist_to_k(&aux_matrix(1)), 2.0);
    }

    #[test]
    fn hull_examples() {
        assert_eq!(in_qc_hull(&DiagMatrix::ZERO), HullRegion::ConvP);
        assert_eq!(
            in_qc_hull(&DiagMatrix::new(-1.0, -2.0)),
            HullRegion::Segment(1)
        );
        assert_eq!(in_qc_hull(&DiagMatrix::new(2.0, 0.0)), HullRegion::Outside);
        assert_eq!(in_qc_hull_exact(r(0), r(0)), HullRegion::ConvP);
        assert_eq!(in_qc_hull_exact(r(-1), r(-2)), HullRegion::Segment(1));
        assert_eq!(in_qc_hull_exact(r(2), r(0)), HullRegion::Outside);
        assert_eq!(
            in_qc_hull_exact(Ratio::new(-5, 2), r(1)),
            HullRegion::Segment(2)
        );
        assert_eq!(
            in_qc_hull_exact(Ratio::new(1, 1), Ratio::new(3, 1)),
            HullRegion::Segment(3)
        );
    }

    #[test]
    fn hull_contains_wells_and_corners() {
        for p in Phase::ALL {
            let m = p.matrix();
            assert!(in_qc_hull(&m).contains());
            assert_eq!(in_qc_hull(&m), HullRegion::Segment(p.index()));
        }
        for i in 1..=4 {
            assert_eq!(in_qc_hull(&aux_matrix(i)), HullRegion::ConvP);
        }
        let probes = [
            DiagMatrix::new(-1.0, -2.5),
            DiagMatrix::new(0.5, 0.5),
            DiagMatrix::new(2.0, 2.0),
            DiagMatrix::new(1.0, 2.0),
            DiagMatrix::new(-2.0, 1.0),
            DiagMatrix::new(1.5, -1.0),
        ];
        for m in probes {
            assert_eq!(in_qc_hull(&m).contains(), in_qc_hull(&-m).contains());
        }
    }

    #[test]
    fn first_order_states_split_exactly() {
        // B1 = 1/4 A1 + 3/4 P2 and P_j = 1/2 A_j + 1/2 P_{j+1}.
        let b1 = Phase::A1.matrix().scale(0.25) + aux_matrix(2).scale(0.75);
        assert_eq!(b1, B1);
        let b2 = Phase::A3.matrix().scale(0.25) + aux_matrix(4).scale(0.75);
        assert_eq!(b2, B2);
        for j in 1..=4u8 {
            let next = j % 4 + 1;
            let pj = Phase::from_index(j).unwrap().matrix().scale(0.5)
                + aux_matrix(next).scale(0.5);
            assert_eq!(pj, aux_matrix(j));
            assert!(rank_one_connected(
                &Phase::from_index(j).unwrap().matrix(),
                &aux_matrix(next)
            ));
        }
    }
}

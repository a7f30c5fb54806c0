//! Rectangle-level construction of the infinite-order laminate.
//!
//! Generation 1 splits the boundary datum into two rank-one connected
//! layers. Each later generation replaces every non-well, non-cut-off
//! rectangle by a finer laminate of a well and an auxiliary matrix,
//! oriented along the rank-one direction of that pair, with cut-off frames
//! of half a period at both ends of the layers. All rectangles have integer
//! pixel corners on an `n x n` grid.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::energy::EnergyBreakdown;
use crate::error::{Error, Result};
use crate::field::{DisplacementField, Grid, PhaseField, ScalarField};
use crate::square::{aux_matrix, in_qc_hull, is_well, project_to_k, DiagMatrix, HullRegion, Phase, B1, B2, HULL_TOL};

/// Direction along which a laminate varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X1,
    X2,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::X1 => Axis::X2,
            Axis::X2 => Axis::X1,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X1 => write!(f, "x1"),
            Axis::X2 => write!(f, "x2"),
        }
    }
}

/// Named gradient carried by a rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Label {
    Well(Phase),
    Aux(u8),
    B1,
    B2,
    Mixed(DiagMatrix),
}

impl Label {
    pub fn of(m: DiagMatrix) -> Label {
        if let Some(p) = Phase::ALL.iter().find(|p| p.matrix() == m) {
            return Label::Well(*p);
        }
        if let Some(i) = (1..=4).find(|&i| aux_matrix(i) == m) {
            return Label::Aux(i);
        }
        if m == B1 {
            Label::B1
        } else if m == B2 {
            Label::B2
        } else {
            Label::Mixed(m)
        }
    }

    pub fn matrix(&self) -> DiagMatrix {
        match *self {
            Label::Well(p) => p.matrix(),
            Label::Aux(i) => aux_matrix(i),
            Label::B1 => B1,
            Label::B2 => B2,
            Label::Mixed(m) => m,
        }
    }

    /// Nearest well.
    pub fn phase(&self) -> Phase {
        match *self {
            Label::Well(p) => p,
            other => project_to_k(&other.matrix()),
        }
    }

    pub fn is_well(&self) -> bool {
        matches!(self, Label::Well(_))
    }

    pub fn is_aux(&self) -> bool {
        matches!(self, Label::Aux(_))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Well(p) => write!(f, "{p}"),
            Label::Aux(i) => write!(f, "P{i}"),
            Label::B1 => write!(f, "B1"),
            Label::B2 => write!(f, "B2"),
            Label::Mixed(m) => write!(f, "M({};{})", m.a, m.b),
        }
    }
}

/// A rank-one split `lambda * first + (1 - lambda) * second`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub first: DiagMatrix,
    pub second: DiagMatrix,
    pub lambda: f64,
    /// Direction of variation, i.e. the rank-one normal of `first - second`.
    pub axis: Axis,
}

impl Split {
    fn new(first: DiagMatrix, second: DiagMatrix, lambda: f64) -> Self {
        let axis = if first.a != second.a { Axis::X1 } else { Axis::X2 };
        Self {
            first,
            second,
            lambda,
            axis,
        }
    }

    pub fn mean(&self) -> DiagMatrix {
        self.first.scale(self.lambda) + self.second.scale(1.0 - self.lambda)
    }
}

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= HULL_TOL
}

fn well(i: u8) -> DiagMatrix {
    Phase::from_index(i).expect("index in 1..=4").matrix()
}

/// Refinement of a point on the boundary of the inner square.
///
/// A matrix on the half-open edge from `P_i` to `P_{i+1}` is split into
/// `A_i` and `P_{i+1}`; in particular `P_i = A_i/2 + P_{i+1}/2`,
/// `B1 = A_1/4 + 3 P_2/4` and `B2 = A_3/4 + 3 P_4/4`.
pub fn split_rule(m: &DiagMatrix) -> Option<Split> {
    let (a, b) = (m.a, m.b);
    let in_open = |x: f64, lo: f64, hi: f64| x >= lo - HULL_TOL && x < hi - HULL_TOL;
    let in_open_low = |x: f64, lo: f64, hi: f64| x > lo + HULL_TOL && x <= hi + HULL_TOL;
    if near(a, -1.0) && in_open(b, -1.0, 1.0) {
        Some(Split::new(well(1), aux_matrix(2), (1.0 - b) / 4.0))
    } else if near(b, 1.0) && in_open(a, -1.0, 1.0) {
        Some(Split::new(well(2), aux_matrix(3), (1.0 - a) / 4.0))
    } else if near(a, 1.0) && in_open_low(b, -1.0, 1.0) {
        Some(Split::new(well(3), aux_matrix(4), (1.0 + b) / 4.0))
    } else if near(b, -1.0) && in_open_low(a, -1.0, 1.0) {
        Some(Split::new(well(4), aux_matrix(1), (1.0 + a) / 4.0))
    } else {
        None
    }
}

/// First-order layers for a boundary datum in the hull but not a well.
///
/// Inside the inner square the datum is split along `x1` into points on
/// its left and right edges (or along `x2` on its vertical edges); a
/// corner `P_i` uses its own refinement pair; a point on a segment
/// `[A_i, P_i]` is split into its endpoints.
#[allow(non_snake_case)]
pub fn decompose_F(f: &DiagMatrix) -> Result<Split> {
    let region = in_qc_hull(f);
    if region == HullRegion::Outside {
        return Err(Error::NotInHull(*f));
    }
    if is_well(f) {
        return Err(Error::DatumInK(*f));
    }
    let (a, b) = (f.a, f.b);
    Ok(match region {
        HullRegion::ConvP => {
            if near(a.abs(), 1.0) && near(b.abs(), 1.0) {
                split_rule(&DiagMatrix::new(a.signum(), b.signum())).expect("corner is refinable")
            } else if a.abs() < 1.0 - HULL_TOL {
                Split::new(DiagMatrix::new(-1.0, b), DiagMatrix::new(1.0, b), (1.0 - a) / 2.0)
            } else {
                Split::new(DiagMatrix::new(a, -1.0), DiagMatrix::new(a, 1.0), (1.0 - b) / 2.0)
            }
        }
        HullRegion::Segment(i) => {
            let lambda = match i {
                1 => (-1.0 - b) / 2.0,
                2 => (-1.0 - a) / 2.0,
                3 => (b - 1.0) / 2.0,
                _ => (a - 1.0) / 2.0,
            };
            Split::new(well(i), aux_matrix(i), lambda)
        }
        HullRegion::Outside => unreachable!(),
    })
}

/// A dyadic length scale `2^-p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicScale {
    p: u32,
}

impl DyadicScale {
    pub fn from_exponent(p: u32) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidSpec(format!(
                "scale 2^-{p} must be at most 1/4"
            )));
        }
        if p > 60 {
            return Err(Error::InvalidSpec(format!("scale 2^-{p} is too fine")));
        }
        Ok(Self { p })
    }

    /// Accepts `r` only if it is exactly `2^-p` with `p >= 2`.
    pub fn from_value(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidSpec(format!("scale {r} is not in (0, 1)")));
        }
        let p = (-r.log2()).round();
        if (0.5f64).powi(p as i32) != r {
            return Err(Error::InvalidSpec(format!("scale {r} is not a power of 1/2")));
        }
        Self::from_exponent(p as u32)
    }

    pub fn exponent(&self) -> u32 {
        self.p
    }

    pub fn value(&self) -> f64 {
        0.5f64.powi(self.p as i32)
    }
}

/// Parameters of the construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaminateSpec {
    pub order: usize,
    pub scale: DyadicScale,
    pub datum: DiagMatrix,
    pub grid: Grid,
}

impl LaminateSpec {
    pub fn new(order: usize, r: f64, datum: DiagMatrix, n: usize) -> Result<Self> {
        let spec = Self {
            order,
            scale: DyadicScale::from_value(r)?,
            datum,
            grid: Grid::new(n)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the order and that the grid resolves a quarter of the finest period.
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidSpec("order must be at least 1".into()));
        }
        let q = self.grid.n().trailing_zeros() as u64;
        let need = self.scale.exponent() as u64 * self.order as u64 + 2;
        if q < need {
            return Err(Error::Resolution(format!(
                "order {} at scale 2^-{} needs n >= 2^{need}, got {}",
                self.order,
                self.scale.exponent(),
                self.grid.n()
            )));
        }
        Ok(())
    }

    /// Period of generation `j` in pixels, `n r^j`.
    pub fn period(&self, j: usize) -> usize {
        self.grid.n() >> (self.scale.exponent() as usize * j)
    }

    /// Smallest admissible grid side for this order and scale.
    pub fn min_grid(order: usize, scale: DyadicScale) -> u64 {
        let shift = scale.exponent() as u64 * order as u64 + 2;
        if shift >= 64 {
            u64::MAX
        } else {
            1u64 << shift
        }
    }
}

/// Axis-aligned rectangle `[x0, x1) x [y0, y1)` in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub label: Label,
    pub generation: usize,
    pub cutoff: bool,
}

impl Rect {
    pub fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    fn span(&self, axis: Axis) -> (usize, usize) {
        match axis {
            Axis::X1 => (self.x0, self.x1),
            Axis::X2 => (self.y0, self.y1),
        }
    }

    fn with_spans(axis: Axis, s: (usize, usize), t: (usize, usize), label: Label, generation: usize, cutoff: bool) -> Rect {
        let ((x0, x1), (y0, y1)) = match axis {
            Axis::X1 => (s, t),
            Axis::X2 => (t, s),
        };
        Rect {
            x0,
            y0,
            x1,
            y1,
            label,
            generation,
            cutoff,
        }
    }

    /// Refinable: not a well and not inside a cut-off region.
    pub fn is_active(&self) -> bool {
        !self.cutoff && !self.label.is_well()
    }
}

/// How the two cut-off ends of a laminated rectangle are labeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameLabel {
    /// Frame pieces keep the label of the layer they continue.
    Layer,
    /// The whole frame keeps the parent label.
    #[default]
    Parent,
}

/// Lays an `period`-periodic laminate of `split` into `parent`.
fn laminate_rect(
    parent: &Rect,
    split: &Split,
    period: usize,
    generation: usize,
    frames: FrameLabel,
    out: &mut Vec<Rect>,
) -> Result<()> {
    let axis = split.axis;
    let (s0, s1) = parent.span(axis);
    let (t0, t1) = parent.span(axis.other());
    let half = period / 2;
    if period < 2 || (s1 - s0) % period != 0 {
        return Err(Error::Resolution(format!(
            "extent {} along {axis} is not a multiple of the period {period}",
            s1 - s0
        )));
    }
    if t1 - t0 <= period {
        return Err(Error::Resolution(format!(
            "extent {} along {} leaves no room inside cut-off frames of width {half}",
            t1 - t0,
            axis.other()
        )));
    }
    let width = split.lambda * period as f64;
    if width.fract() != 0.0 || width <= 0.0 || width >= period as f64 {
        return Err(Error::Resolution(format!(
            "layer width {width} pixels at period {period} is not a positive integer below the period"
        )));
    }
    let width = width as usize;
    let first = Label::of(split.first);
    let second = Label::of(split.second);
    let bands = [(t0, t0 + half, true), (t0 + half, t1 - half, false), (t1 - half, t1, true)];
    for (ta, tb, is_frame) in bands {
        if is_frame && frames == FrameLabel::Parent {
            out.push(Rect::with_spans(axis, (s0, s1), (ta, tb), parent.label, generation, true));
            continue;
        }
        for start in (s0..s1).step_by(period) {
            out.push(Rect::with_spans(axis, (start, start + width), (ta, tb), first, generation, is_frame));
            out.push(Rect::with_spans(axis, (start + width, start + period), (ta, tb), second, generation, is_frame));
        }
    }
    Ok(())
}

/// Rectangle decomposition after some generation.
#[derive(Debug, Clone, PartialEq)]
pub struct LaminateState {
    pub spec: LaminateSpec,
    pub generation: usize,
    pub first_order: Split,
    pub rects: Vec<Rect>,
}

/// Generation 1: layers of the datum's split with period `n r`, cut off
/// over half a period at both ends.
pub fn build_first_order(spec: &LaminateSpec) -> Result<LaminateState> {
    spec.validate()?;
    let split = decompose_F(&spec.datum)?;
    let n = spec.grid.n();
    let whole = Rect {
        x0: 0,
        y0: 0,
        x1: n,
        y1: n,
        label: Label::of(spec.datum),
        generation: 0,
        cutoff: false,
    };
    let mut rects = Vec::new();
    laminate_rect(&whole, &split, spec.period(1), 1, FrameLabel::Layer, &mut rects)?;
    Ok(LaminateState {
        spec: *spec,
        generation: 1,
        first_order: split,
        rects,
    })
}

/// Generation `j`: every active rectangle becomes an `n r^j`-periodic
/// laminate of its refinement pair, framed by parent-labeled cut-offs.
pub fn refine(state: &LaminateState, j: usize) -> Result<LaminateState> {
    refine_with(state, j, FrameLabel::Parent)
}

/// [`refine`] with a choice of frame labels.
pub fn refine_with(state: &LaminateState, j: usize, frames: FrameLabel) -> Result<LaminateState> {
    if j != state.generation + 1 {
        return Err(Error::WrongGeneration {
            current: state.generation,
            requested: j,
        });
    }
    let period = state.spec.period(j);
    let mut rects = Vec::with_capacity(state.rects.len() * 4);
    for rect in &state.rects {
        if !rect.is_active() {
            rects.push(*rect);
            continue;
        }
        let split = split_rule(&rect.label.matrix()).ok_or_else(|| {
            Error::Unsupported(format!("no refinement for {} off the inner square boundary", rect.label))
        })?;
        laminate_rect(rect, &split, period, j, frames, &mut rects)?;
    }
    Ok(LaminateState {
        spec: state.spec,
        generation: j,
        first_order: state.first_order,
        rects,
    })
}

/// All generations up to the spec's order, without rasterizing.
pub fn build_state(spec: &LaminateSpec) -> Result<LaminateState> {
    build_state_with(spec, FrameLabel::Parent)
}

pub fn build_state_with(spec: &LaminateSpec, frames: FrameLabel) -> Result<LaminateState> {
    let mut state = build_first_order(spec)?;
    for j in 2..=spec.order {
        state = refine_with(&state, j, frames)?;
    }
    Ok(state)
}

/// Builds the construction and its projected phase field.
pub fn build(spec: &LaminateSpec) -> Result<(PhaseField, LaminateState)> {
    build_with(spec, FrameLabel::Parent)
}

pub fn build_with(spec: &LaminateSpec, frames: FrameLabel) -> Result<(PhaseField, LaminateState)> {
    let state = build_state_with(spec, frames)?;
    let field = state.rasterize()?;
    Ok((field, state))
}

impl LaminateState {
    pub fn grid(&self) -> Grid {
        self.spec.grid
    }

    /// Paints each rectangle with its nearest well.
    pub fn rasterize(&self) -> Result<PhaseField> {
        let n = self.grid().n();
        let area: usize = self.rects.iter().map(Rect::area).sum();
        if area != n * n {
            return Err(Error::InvalidSpec(format!(
                "rectangles cover {area} pixels of {}",
                n * n
            )));
        }
        let mut painted: Vec<Option<Phase>> = vec![None; n * n];
        for r in &self.rects {
            let p = r.label.phase();
            for x in r.x0..r.x1 {
                for cell in &mut painted[x * n + r.y0..x * n + r.y1] {
                    if cell.is_some() {
                        return Err(Error::InvalidSpec(format!("pixel overlap in {r:?}")));
                    }
                    *cell = Some(p);
                }
            }
        }
        let labels = painted
            .into_iter()
            .collect::<Option<Vec<Phase>>>()
            .ok_or_else(|| Error::InvalidSpec("unpainted pixel".into()))?;
        PhaseField::new(self.grid(), labels)
    }

    /// Fraction of the unit square covered by rectangles matching `pred`.
    pub fn volume_where(&self, pred: impl Fn(&Rect) -> bool) -> f64 {
        let px: usize = self.rects.iter().filter(|r| pred(r)).map(Rect::area).sum();
        px as f64 / self.grid().len() as f64
    }

    /// Volume still to be refined (non-well, outside cut-offs).
    pub fn active_volume(&self) -> f64 {
        self.volume_where(Rect::is_active)
    }

    /// Volume of cut-off regions.
    pub fn cutoff_volume(&self) -> f64 {
        self.volume_where(|r| r.cutoff)
    }

    /// Number of unit pixel edges (periodic) separating different nearest
    /// wells, computed from the rectangle geometry alone.
    pub fn interface_edges(&self) -> usize {
        let n = self.grid().n();
        let mut by_x0: HashMap<usize, Vec<(usize, usize, Phase)>> = HashMap::new();
        let mut by_y0: HashMap<usize, Vec<(usize, usize, Phase)>> = HashMap::new();
        for r in &self.rects {
            let p = r.label.phase();
            by_x0.entry(r.x0).or_default().push((r.y0, r.y1, p));
            by_y0.entry(r.y0).or_default().push((r.x0, r.x1, p));
        }
        for list in by_x0.values_mut().chain(by_y0.values_mut()) {
            list.sort_by_key(|e| e.0);
        }
        let crossing = |map: &HashMap<usize, Vec<(usize, usize, Phase)>>, at: usize, lo: usize, hi: usize, p: Phase| -> usize {
            let Some(list) = map.get(&(at % n)) else {
                return 0;
            };
            let start = list.partition_point(|e| e.1 <= lo);
            list[start..]
                .iter()
                .take_while(|e| e.0 < hi)
                .filter(|e| e.2 != p)
                .map(|e| e.1.min(hi) - e.0.max(lo))
                .sum()
        };
        self.rects
            .iter()
            .map(|r| {
                let p = r.label.phase();
                crossing(&by_x0, r.x1, r.y0, r.y1, p) + crossing(&by_y0, r.y1, r.x0, r.x1, p)
            })
            .sum()
    }

    /// Exact surface energy of the projected field, `2 h * interface_edges`.
    pub fn surface_energy(&self) -> f64 {
        2.0 * self.interface_edges() as f64 * self.grid().h()
    }

    /// CSV rows `x0,y0,x1,y1,label,generation` in unit coordinates; cut-off
    /// rectangles carry the label `cut(<label>)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let h = self.grid().h();
        writeln!(w, "x0,y0,x1,y1,label,generation")?;
        for r in &self.rects {
            let label = if r.cutoff {
                format!("cut({})", r.label)
            } else {
                r.label.to_string()
            };
            writeln!(
                w,
                "{},{},{},{},{label},{}",
                crate::io::fmt_f64(r.x0 as f64 * h),
                crate::io::fmt_f64(r.y0 as f64 * h),
                crate::io::fmt_f64(r.x1 as f64 * h),
                crate::io::fmt_f64(r.y1 as f64 * h),
                r.generation
            )?;
        }
        Ok(())
    }
}

/// `max(0, min(2t, 1))`.
pub fn cutoff(t: f64) -> f64 {
    (2.0 * t).clamp(0.0, 1.0)
}

/// Nodal samples of the explicit displacement for orders 1 and 2, zero datum.
///
/// `u1` is a sawtooth in `x1` with slopes `-1, +1` on the `B1, B2` halves of
/// each period, cut off in `x2`. At order 2, `u2` adds inside each bulk
/// stripe the `x2` sawtooth of the `A/P` layers, cut off in `x1` at the
/// stripe ends.
pub fn build_displacement(spec: &LaminateSpec) -> Result<DisplacementField> {
    spec.validate()?;
    if spec.order > 2 {
        return Err(Error::Unsupported(format!(
            "explicit displacement only for orders 1 and 2, got {}",
            spec.order
        )));
    }
    if spec.datum != DiagMatrix::ZERO {
        return Err(Error::Unsupported(
            "explicit displacement only for the zero datum".into(),
        ));
    }
    let grid = spec.grid;
    let r = spec.scale.value();
    let r2 = r * r;
    let order = spec.order;
    let u1 = ScalarField::sample(grid, |x1, x2| {
        let s = x1.rem_euclid(r);
        let v = if s <= r / 2.0 { -s } else { -(r - s) };
        cutoff(x2 / r) * cutoff((1.0 - x2) / r) * v
    });
    let u2 = ScalarField::sample(grid, |x1, x2| {
        if order < 2 || x2 < r / 2.0 || x2 > 1.0 - r / 2.0 {
            return 0.0;
        }
        let s = x1.rem_euclid(r);
        let (local, sign) = if s < r / 2.0 { (s, 1.0) } else { (s - r / 2.0, -1.0) };
        let across = cutoff(local / r2) * cutoff((r / 2.0 - local) / r2);
        let y = (x2 - r / 2.0).rem_euclid(r2);
        let w = if y <= r2 / 4.0 { -3.0 * y } else { y - r2 };
        sign * across * w
    });
    DisplacementField::new(u1, u2, DiagMatrix::ZERO)
}

/// Unit-constant predictions `E_el = 2^-m + sum_{j=2}^m 2^-j r + r`,
/// `E_surf = 2^-m r^-m`, `E = E_el + eps E_surf`.
pub fn analytic_energy_estimate(order: usize, r: f64, eps: f64) -> EnergyBreakdown {
    let m = order as i32;
    let middle: f64 = (2..=m).map(|j| 0.5f64.powi(j) * r).sum();
    let elastic = 0.5f64.powi(m) + middle + r;
    let surface = 0.5f64.powi(m) * r.powi(-m);
    EnergyBreakdown {
        elastic,
        surface,
        epsilon: eps,
        total: elastic + eps * surface,
        h1m_d2chi11: 0.0,
        h1m_d1chi22: 0.0,
        mean_dev: 0.0,
    }
}

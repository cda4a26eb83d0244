//! Atom rearrangement with two crossed AODs: reflection and rotation plans,
//! a replaying verifier and the ancilla addressing check.
//!
//! Kinematics are discrete. A batch picks the occupied sites on a product of
//! row and column lines and translates them rigidly; everything else stays.
//! A horizontal AOD has lines x = const and y = const and moves along the
//! axes. A diagonal AOD has lines x − y = const and x + y = const and moves
//! along the ±45° directions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, ParseError, Result};
use crate::geometry::Coord;
use crate::layout::Layout;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Horizontal,
    Diagonal,
}

impl Orientation {
    /// (column line, row line) of a site.
    pub fn lines_of(self, c: Coord) -> (i32, i32) {
        match self {
            Orientation::Horizontal => (c.x2, c.y2),
            Orientation::Diagonal => (c.x2 - c.y2, c.x2 + c.y2),
        }
    }

    fn site(self, col: i32, row: i32) -> Coord {
        match self {
            Orientation::Horizontal => Coord::new(col, row),
            Orientation::Diagonal => Coord::new((col + row) / 2, (row - col) / 2),
        }
    }

    /// Translation of a (column, row) line shift; both must keep sites on
    /// the lattice.
    fn translation(self, dcol: i32, drow: i32) -> (i32, i32) {
        match self {
            Orientation::Horizontal => (dcol, drow),
            Orientation::Diagonal => ((dcol + drow) / 2, (drow - dcol) / 2),
        }
    }

    pub fn allows(self, (dx, dy): (i32, i32)) -> bool {
        match self {
            Orientation::Horizontal => dx == 0 || dy == 0,
            Orientation::Diagonal => dx.abs() == dy.abs(),
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Horizontal => "horizontal",
            Orientation::Diagonal => "diagonal",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AodGrid {
    pub orientation: Orientation,
    pub row_lines: Vec<i32>,
    pub col_lines: Vec<i32>,
}

impl AodGrid {
    pub fn new(
        orientation: Orientation,
        rows: impl IntoIterator<Item = i32>,
        cols: impl IntoIterator<Item = i32>,
    ) -> Self {
        let sorted = |it: &mut dyn Iterator<Item = i32>| it.collect::<BTreeSet<_>>().into_iter().collect();
        Self { orientation, row_lines: sorted(&mut rows.into_iter()), col_lines: sorted(&mut cols.into_iter()) }
    }

    /// Smallest grid holding every given site.
    pub fn covering(orientation: Orientation, sites: &[Coord]) -> Self {
        let lines: Vec<(i32, i32)> = sites.iter().map(|&c| orientation.lines_of(c)).collect();
        Self::new(orientation, lines.iter().map(|l| l.1), lines.iter().map(|l| l.0))
    }

    pub fn selects(&self, c: Coord) -> bool {
        let (col, row) = self.orientation.lines_of(c);
        self.col_lines.binary_search(&col).is_ok() && self.row_lines.binary_search(&row).is_ok()
    }

    fn is_well_formed(&self) -> bool {
        self.row_lines.windows(2).all(|w| w[0] < w[1]) && self.col_lines.windows(2).all(|w| w[0] < w[1])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoveBatch {
    pub grid: AodGrid,
    /// Doubled-coordinate displacement.
    pub translation: (i32, i32),
}

fn write_list(f: &mut fmt::Formatter<'_>, v: &[i32]) -> fmt::Result {
    let items: Vec<String> = v.iter().map(i32::to_string).collect();
    write!(f, "[{}]", items.join(","))
}

impl fmt::Display for MoveBatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BATCH rows:")?;
        write_list(f, &self.grid.row_lines)?;
        f.write_str(" cols:")?;
        write_list(f, &self.grid.col_lines)?;
        write!(f, " d:({},{})", self.translation.0, self.translation.1)
    }
}

impl FromStr for MoveBatch {
    type Err = ParseError;

    /// The orientation is recovered from the translation: axis-aligned moves
    /// belong to the horizontal AOD, ±45° moves to the diagonal one.
    fn from_str(s: &str) -> std::result::Result<Self, ParseError> {
        let bad = || ParseError::new(format!("malformed batch line: {s}"));
        let rest = s.trim().strip_prefix("BATCH").ok_or_else(bad)?.trim();
        let rest = rest.strip_prefix("rows:").ok_or_else(bad)?;
        let (rows, rest) = rest.split_once(" cols:").ok_or_else(bad)?;
        let (cols, d) = rest.split_once(" d:").ok_or_else(bad)?;
        let list = |t: &str| -> std::result::Result<Vec<i32>, ParseError> {
            let inner = t.trim().strip_prefix('[').and_then(|t| t.strip_suffix(']')).ok_or_else(bad)?;
            inner.split(',').filter(|x| !x.trim().is_empty()).map(|x| x.trim().parse().map_err(|_| bad())).collect()
        };
        let d = list(&d.trim().replace('(', "[").replace(')', "]"))?;
        let [dx, dy] = d[..] else { return Err(bad()) };
        let orientation = if Orientation::Horizontal.allows((dx, dy)) {
            Orientation::Horizontal
        } else if Orientation::Diagonal.allows((dx, dy)) {
            Orientation::Diagonal
        } else {
            return Err(bad());
        };
        Ok(MoveBatch { grid: AodGrid::new(orientation, list(rows)?, list(cols)?), translation: (dx, dy) })
    }
}

/// Mirror line of a reflection in column-line units: line `a` maps to
/// `sum − a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Axis(pub i32);

impl Axis {
    /// The mirror line through the centre of the sites' bounding box.
    pub fn centered(sites: &[Coord], orientation: Orientation) -> Option<Self> {
        let (sx, sy) = bbox_sums(sites)?;
        Some(Axis(match orientation {
            Orientation::Horizontal => sx,
            Orientation::Diagonal => sx - sy,
        }))
    }
}

fn bbox(sites: &[Coord]) -> Option<(Coord, Coord)> {
    let lo = Coord::new(sites.iter().map(|c| c.x2).min()?, sites.iter().map(|c| c.y2).min()?);
    let hi = Coord::new(sites.iter().map(|c| c.x2).max()?, sites.iter().map(|c| c.y2).max()?);
    Some((lo, hi))
}

fn bbox_sums(sites: &[Coord]) -> Option<(i32, i32)> {
    bbox(sites).map(|(lo, hi)| (lo.x2 + hi.x2, lo.y2 + hi.y2))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RearrangementPlan {
    pub batches: Vec<MoveBatch>,
    /// Start site → end site of every atom the plan is responsible for.
    pub target: BTreeMap<Coord, Coord>,
}

impl RearrangementPlan {
    /// Runs `self` then `next`. Atoms outside `next`'s sites stay put.
    pub fn then(mut self, next: RearrangementPlan) -> Self {
        for end in self.target.values_mut() {
            *end = next.target.get(end).copied().unwrap_or(*end);
        }
        self.batches.extend(next.batches);
        self
    }

    pub fn sites(&self) -> Vec<Coord> {
        self.target.keys().copied().collect()
    }

    pub fn image(&self) -> Vec<Coord> {
        self.target.values().copied().collect()
    }
}

impl fmt::Display for RearrangementPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.batches {
            writeln!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Parses an exported plan, one batch per non-empty line.
pub fn parse_batches(text: &str) -> std::result::Result<Vec<MoveBatch>, ParseError> {
    text.lines().filter(|l| !l.trim().is_empty()).map(str::parse).collect()
}

/// One atom line of a reflection, tracked through the schedule.
struct Token {
    col: i32,
    rows: Vec<i32>,
    lift: i32,
}

impl Token {
    fn current_rows(&self) -> impl Iterator<Item = i32> + '_ {
        self.rows.iter().map(move |r| r + self.lift)
    }
}

fn bits_needed(max: usize) -> u32 {
    usize::BITS - max.leading_zeros()
}

/// Mirror the sites about `axis`, moving whole column lines.
///
/// Line i (in increasing order) is parked i lanes beyond the patch, lanes
/// being one patch height apart, using one batch per bit of i. With every
/// line alone in its lane the horizontal shifts cannot cross anything: one
/// common shift, then one batch per bit of the line's offset from line 0.
/// The lines then come back down bit by bit.
pub fn plan_reflection(sites: &[Coord], axis: Axis, orientation: Orientation) -> Result<RearrangementPlan> {
    let sites: Vec<Coord> = sites.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let Some(centre) = Axis::centered(&sites, orientation) else {
        return Ok(RearrangementPlan::default());
    };
    if axis != centre {
        return Err(Error::Plan(format!("{orientation} axis {} is off the patch centre {}", axis.0, centre.0)));
    }
    if orientation == Orientation::Diagonal && axis.0 % 2 != 0 {
        return Err(Error::Plan(format!("diagonal axis {} leaves the lattice", axis.0)));
    }
    let mut by_col: BTreeMap<i32, Vec<i32>> = BTreeMap::new();
    for &c in &sites {
        let (col, row) = orientation.lines_of(c);
        by_col.entry(col).or_default().push(row);
    }
    let target = sites
        .iter()
        .map(|&c| {
            let (col, row) = orientation.lines_of(c);
            (c, orientation.site(axis.0 - col, row))
        })
        .collect();
    let mut tokens: Vec<Token> = by_col.into_iter().map(|(col, rows)| Token { col, rows, lift: 0 }).collect();
    let n = tokens.len();
    let mut plan = RearrangementPlan { batches: Vec::new(), target };
    if tokens.iter().all(|t| 2 * t.col == axis.0) {
        return Ok(plan);
    }

    let rows: Vec<i32> = tokens.iter().flat_map(|t| t.rows.iter().copied()).collect();
    let span = rows.iter().max().unwrap() - rows.iter().min().unwrap();
    let lane = (span + 2 + 1) & !1;
    let col0 = tokens[0].col;
    let step = tokens.iter().fold(0, |g, t| gcd(g, t.col - col0)).max(1);
    let offsets: Vec<usize> = tokens.iter().map(|t| ((t.col - col0) / step) as usize).collect();

    let mut push = |tokens: &mut [Token], chosen: &[usize], dcol: i32, drow: i32| {
        if chosen.is_empty() || (dcol == 0 && drow == 0) {
            return;
        }
        let grid = AodGrid::new(
            orientation,
            chosen.iter().flat_map(|&i| tokens[i].current_rows().collect::<Vec<_>>()),
            chosen.iter().map(|&i| tokens[i].col),
        );
        plan.batches.push(MoveBatch { grid, translation: orientation.translation(dcol, drow) });
        for &i in chosen {
            tokens[i].col += dcol;
            tokens[i].lift += drow;
        }
    };

    let lift_bits = bits_needed(n - 1);
    for k in 0..lift_bits {
        let chosen: Vec<usize> = (0..n).filter(|i| i >> k & 1 == 1).collect();
        push(&mut tokens, &chosen, 0, lane << k);
    }
    let all: Vec<usize> = (0..n).collect();
    push(&mut tokens, &all, axis.0 - 2 * col0, 0);
    for k in 0..bits_needed(*offsets.iter().max().unwrap()) {
        let chosen: Vec<usize> = (0..n).filter(|&i| offsets[i] >> k & 1 == 1).collect();
        push(&mut tokens, &chosen, -2 * step << k, 0);
    }
    for k in 0..lift_bits {
        let chosen: Vec<usize> = (0..n).filter(|i| i >> k & 1 == 1).collect();
        push(&mut tokens, &chosen, 0, -(lane << k));
    }
    Ok(plan)
}

fn gcd(a: i32, b: i32) -> i32 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Quarter turn (x, y) → (y, 2c − x) about the centre of a square patch:
/// a horizontal reflection followed by a diagonal one.
pub fn plan_rotation(sites: &[Coord]) -> Result<RearrangementPlan> {
    let Some((lo, hi)) = bbox(sites) else {
        return Ok(RearrangementPlan::default());
    };
    if hi.x2 - lo.x2 != hi.y2 - lo.y2 {
        return Err(Error::Plan(format!("patch {lo}..{hi} is not square")));
    }
    let centered = |s: &[Coord], o| Axis::centered(s, o).expect("non-empty");
    let first = plan_reflection(sites, centered(sites, Orientation::Horizontal), Orientation::Horizontal)?;
    let mid = first.image();
    let second = plan_reflection(&mid, centered(&mid, Orientation::Diagonal), Orientation::Diagonal)?;
    Ok(first.then(second))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Lines not strictly increasing.
    MalformedGrid { batch: usize },
    /// Translation not along the AOD's axes.
    Misaligned { batch: usize, translation: (i32, i32) },
    /// A moving atom swept through an atom that stayed. `lines` holds the
    /// moving and the crossed line, measured across the direction of motion.
    Crossing { batch: usize, moving: Coord, blocker: Coord, lines: (i32, i32) },
    /// A moving atom landed on an atom that stayed.
    Collision { batch: usize, site: Coord },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MalformedGrid { batch } => write!(f, "batch {batch}: lines not strictly increasing"),
            Violation::Misaligned { batch, translation } => {
                write!(f, "batch {batch}: translation {translation:?} off the AOD axes")
            }
            Violation::Crossing { batch, moving, blocker, lines } => {
                write!(f, "batch {batch}: atom at {moving} crosses {blocker} (lines {} / {})", lines.0, lines.1)
            }
            Violation::Collision { batch, site } => write!(f, "batch {batch}: collision at {site}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub achieved: BTreeMap<Coord, Coord>,
    pub violations: Vec<Violation>,
    pub matches_target: bool,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.matches_target && self.violations.is_empty()
    }
}

/// Replays the plan's batches on atoms at `sites`.
pub fn verify_plan(plan: &RearrangementPlan, sites: &[Coord]) -> VerifyReport {
    let start: Vec<Coord> = sites.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut at = start.clone();
    let mut violations = Vec::new();
    for (batch, mv) in plan.batches.iter().enumerate() {
        let grid = &mv.grid;
        if !grid.is_well_formed() {
            violations.push(Violation::MalformedGrid { batch });
        }
        let (dx, dy) = mv.translation;
        let aligned = grid.orientation.allows(mv.translation);
        if !aligned {
            violations.push(Violation::Misaligned { batch, translation: mv.translation });
        }
        let moving: Vec<bool> = at.iter().map(|&c| grid.selects(c)).collect();
        let still: HashMap<Coord, usize> =
            at.iter().enumerate().filter(|&(i, _)| !moving[i]).map(|(i, &c)| (c, i)).collect();
        let steps = dx.abs().max(dy.abs());
        let along_cols = grid.orientation.lines_of(Coord::new(dx, dy)).0 != 0;
        let line = |c: Coord| {
            let (col, row) = grid.orientation.lines_of(c);
            if along_cols {
                col
            } else {
                row
            }
        };
        for i in (0..at.len()).filter(|&i| moving[i]) {
            let c = at[i];
            if aligned && steps > 1 {
                let (sx, sy) = (dx / steps, dy / steps);
                if let Some(blocker) = (1..steps).map(|k| c.offset(k * sx, k * sy)).find(|p| still.contains_key(p)) {
                    violations.push(Violation::Crossing { batch, moving: c, blocker, lines: (line(c), line(blocker)) });
                }
            }
            let end = c.offset(dx, dy);
            if still.contains_key(&end) {
                violations.push(Violation::Collision { batch, site: end });
            }
            at[i] = end;
        }
    }
    let achieved: BTreeMap<Coord, Coord> = start.into_iter().zip(at).collect();
    let matches_target = achieved == plan.target;
    VerifyReport { achieved, violations, matches_target }
}

/// Which ancillas a grid aimed at the X ancillas would also pick up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AddressingReport {
    pub x_diagonals: BTreeSet<i32>,
    pub z_diagonals: BTreeSet<i32>,
    /// Z ancillas selected by the smallest diagonal grid covering all X ancillas.
    pub diagonal_spill: Vec<Coord>,
    /// Z ancillas selected by the smallest horizontal grid covering all X ancillas.
    pub horizontal_spill: Vec<Coord>,
}

impl AddressingReport {
    pub fn diagonals_disjoint(&self) -> bool {
        self.x_diagonals.is_disjoint(&self.z_diagonals)
    }
}

pub fn check_diagonal_addressing(layout: &Layout) -> AddressingReport {
    let diagonals = |v: &[Coord]| v.iter().map(|&c| Layout::diagonal(c)).collect::<BTreeSet<_>>();
    let spill = |o| {
        let grid = AodGrid::covering(o, &layout.ancilla_x);
        layout.ancilla_z.iter().copied().filter(|&c| grid.selects(c)).collect()
    };
    AddressingReport {
        x_diagonals: diagonals(&layout.ancilla_x),
        z_diagonals: diagonals(&layout.ancilla_z),
        diagonal_spill: spill(Orientation::Diagonal),
        horizontal_spill: spill(Orientation::Horizontal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_line_round_trips() {
        let b = MoveBatch {
            grid: AodGrid::new(Orientation::Diagonal, [4, -2], [0]),
            translation: (-3, 3),
        };
        let line = b.to_string();
        assert_eq!(line, "BATCH rows:[-2,4] cols:[0] d:(-3,3)");
        assert_eq!(line.parse::<MoveBatch>().unwrap(), b);
        assert!("BATCH rows:[1] cols:[2] d:(1,2)".parse::<MoveBatch>().is_err());
    }

    #[test]
    fn diagonal_frame_inverts() {
        for c in [Coord::new(3, -1), Coord::new(0, 4), Coord::new(-5, -7)] {
            let (a, b) = Orientation::Diagonal.lines_of(c);
            assert_eq!(Orientation::Diagonal.site(a, b), c);
        }
    }
}

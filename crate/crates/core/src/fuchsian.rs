//! Surface groups and their fundamental polygons.
//!
//! The genus-`g` group is realized by the regular hyperbolic `4g`-gon with all
//! interior angles `2π/4g`, centred at `i`, whose sides are labelled in
//! boundary order `γ_1, γ_{1+g}, γ_1⁻¹, γ_{1+g}⁻¹, …`. The side pairing `α_i`
//! carries `γ_i` onto `γ_i⁻¹` and `β_i` carries `γ_{i+g}` onto `γ_{i+g}⁻¹`,
//! both reversing the boundary orientation. The one-relator presentation is
//! `∏_i α_i⁻¹ β_i α_i β_i⁻¹ = 1`.
//!
//! A cyclic hyperbolic group `⟨diag(λ, 1/λ)⟩` is provided as an exact model:
//! its forms can be written in closed form.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::contour::PathInH;
use crate::error::{Error, Result};
use crate::moebius::{MoebiusMap, C64};

pub const RELATOR_TOL: f64 = 1e-9;
pub const DEFAULT_ELEMENT_CAP: usize = 1_000_000;

/// A generator or its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

impl Letter {
    pub const fn new(generator: usize, inverse: bool) -> Self {
        Self { generator, inverse }
    }

    pub fn inv(self) -> Self {
        Self { generator: self.generator, inverse: !self.inverse }
    }
}

/// Freely reduced word in the generators.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupWord {
    letters: Vec<Letter>,
}

impl GroupWord {
    pub fn identity() -> Self {
        Self { letters: Vec::new() }
    }

    /// Rejects words containing a cancelling pair `x x⁻¹`.
    pub fn new(letters: Vec<Letter>) -> Result<Self> {
        if let Some(w) = letters.windows(2).find(|w| w[0] == w[1].inv()) {
            return Err(Error::Precondition(format!("word is not reduced: {:?} followed by its inverse", w[0])));
        }
        Ok(Self { letters })
    }

    /// Free reduction of an arbitrary letter sequence.
    pub fn reduce(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inv()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Self { letters: out }
    }

    pub fn letter(l: Letter) -> Self {
        Self { letters: vec![l] }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_identity()
    }

    /// Reduced concatenation `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        Self::reduce(self.letters.iter().chain(&other.letters).copied())
    }

    pub fn inverse(&self) -> Self {
        Self { letters: self.letters.iter().rev().map(|l| l.inv()).collect() }
    }
}

/// Which concrete group a [`SurfaceGroup`] realizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GroupModel {
    /// Cocompact surface group of the given genus.
    Surface { genus: usize },
    /// Infinite cyclic group generated by `diag(λ, 1/λ)`.
    Cyclic { lambda: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceGroup {
    pub model: GroupModel,
    generators: Vec<MoebiusMap>,
    /// Extra hyperbolic distance allowed when pruning the orbit search.
    pruning_margin: f64,
    /// Base vertex of the standard fundamental polygon.
    base_vertex: Option<C64>,
}

impl SurfaceGroup {
    pub fn generators(&self) -> &[MoebiusMap] {
        &self.generators
    }

    pub fn genus(&self) -> Option<usize> {
        match self.model {
            GroupModel::Surface { genus } => Some(genus),
            GroupModel::Cyclic { .. } => None,
        }
    }

    pub fn pruning_margin(&self) -> f64 {
        self.pruning_margin
    }

    pub fn base_vertex(&self) -> Option<C64> {
        self.base_vertex
    }

    /// All generators and inverses, generators first.
    pub fn letters(&self) -> Vec<Letter> {
        let n = self.generators.len();
        (0..n).map(|g| Letter::new(g, false)).chain((0..n).map(|g| Letter::new(g, true))).collect()
    }

    /// `α_i` (1-based).
    pub fn alpha(&self, i: usize) -> Letter {
        let g = self.genus().expect("alpha letters exist only for surface groups");
        assert!((1..=g).contains(&i));
        Letter::new(i - 1, false)
    }

    /// `β_i` (1-based).
    pub fn beta(&self, i: usize) -> Letter {
        let g = self.genus().expect("beta letters exist only for surface groups");
        assert!((1..=g).contains(&i));
        Letter::new(g + i - 1, false)
    }

    pub fn letter_matrix(&self, l: Letter) -> MoebiusMap {
        let m = self.generators[l.generator];
        if l.inverse {
            m.inverse()
        } else {
            m
        }
    }

    pub fn word_to_matrix(&self, w: &GroupWord) -> MoebiusMap {
        w.letters.iter().fold(MoebiusMap::identity(), |acc, &l| acc.compose(&self.letter_matrix(l)))
    }

    pub fn letter_name(&self, l: Letter) -> String {
        let base = match self.model {
            GroupModel::Surface { genus } => {
                if l.generator < genus {
                    format!("a{}", l.generator + 1)
                } else {
                    format!("b{}", l.generator - genus + 1)
                }
            }
            GroupModel::Cyclic { .. } => "A".to_string(),
        };
        if l.inverse {
            format!("{base}^-1")
        } else {
            base
        }
    }

    pub fn word_name(&self, w: &GroupWord) -> String {
        if w.is_identity() {
            return "e".to_string();
        }
        w.letters.iter().map(|&l| self.letter_name(l)).collect::<Vec<_>>().join(" ")
    }

    /// The defining relator `∏_i α_i⁻¹ β_i α_i β_i⁻¹`.
    pub fn relator(&self) -> Result<GroupWord> {
        let g = self
            .genus()
            .ok_or_else(|| Error::UnsupportedGroup("the cyclic model has no surface relator".into()))?;
        let mut letters = Vec::with_capacity(4 * g);
        for i in 1..=g {
            let (a, b) = (self.alpha(i), self.beta(i));
            letters.extend([a.inv(), b, a, b.inv()]);
        }
        GroupWord::new(letters)
    }

    /// Entrywise distance of the relator matrix from `±I`.
    pub fn relator_residual(&self) -> Result<f64> {
        Ok(self.word_to_matrix(&self.relator()?).projective_distance(&MoebiusMap::identity()))
    }
}

/// Label of a polygon side: `γ_index` or `γ_index⁻¹`, `index ∈ 1..=2g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeLabel {
    pub index: usize,
    pub inverse: bool,
}

impl EdgeLabel {
    pub const fn new(index: usize, inverse: bool) -> Self {
        Self { index, inverse }
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "gamma_{}^-1", self.index)
        } else {
            write!(f, "gamma_{}", self.index)
        }
    }
}

/// Oriented side of the fundamental polygon, between two vertex indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonEdge {
    pub label: EdgeLabel,
    pub start: usize,
    pub end: usize,
}

/// Vertices and labelled sides of the fundamental `4g`-gon.
///
/// `vertices[j]` is `τ_{j+1}`; there are `4g + 1` of them, the last one being
/// the chase's return to `τ_1`.
#[derive(Clone, Debug)]
pub struct FundamentalOctagon {
    pub genus: usize,
    pub vertices: Vec<C64>,
    /// `chase_words[j]` maps `τ_1` to `vertices[j]`.
    pub chase_words: Vec<GroupWord>,
    pub edges: Vec<PolygonEdge>,
    group: Arc<SurfaceGroup>,
}

impl FundamentalOctagon {
    pub fn group(&self) -> &Arc<SurfaceGroup> {
        &self.group
    }

    pub fn tau1(&self) -> C64 {
        self.vertices[0]
    }

    pub fn edge(&self, label: EdgeLabel) -> &PolygonEdge {
        self.edges.iter().find(|e| e.label == label).expect("edge label out of range")
    }

    pub fn edge_endpoints(&self, label: EdgeLabel) -> (C64, C64) {
        let e = self.edge(label);
        (self.vertices[e.start], self.vertices[e.end])
    }

    pub fn edge_path(&self, label: EdgeLabel) -> Result<PathInH> {
        let (a, b) = self.edge_endpoints(label);
        PathInH::chord(a, b)
    }

    /// The whole boundary, traversed in vertex order.
    pub fn boundary(&self) -> Result<PathInH> {
        PathInH::polyline(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Side-pairing element: `α_i` for `γ_i^{±1}`, `β_i` for `γ_{i+g}^{±1}`.
    pub fn pairing(&self, label: EdgeLabel) -> GroupWord {
        let g = self.genus;
        let letter = if label.index <= g { self.group.alpha(label.index) } else { self.group.beta(label.index - g) };
        GroupWord::letter(letter)
    }

    /// Word `V` with `V⁻¹ τ_1 = τ_{j+1}`.
    pub fn vertex_word(&self, j: usize) -> GroupWord {
        self.chase_words[j].inverse()
    }

    /// Largest endpoint mismatch when each pairing element is applied to its
    /// side and compared with the partner side (as unordered pairs).
    pub fn pairing_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for e in self.edges.iter().filter(|e| !e.label.inverse) {
            let partner = self.edge(EdgeLabel::new(e.label.index, true));
            let m = self.group.word_to_matrix(&self.pairing(e.label));
            let (p, q) = (m.act(self.vertices[e.start]), m.act(self.vertices[e.end]));
            let (u, v) = (self.vertices[partner.start], self.vertices[partner.end]);
            let direct = (p - u).norm().max((q - v).norm());
            let swapped = (p - v).norm().max((q - u).norm());
            worst = worst.max(direct.min(swapped));
        }
        worst
    }

    /// Distance between the chase's final vertex and `τ_1`.
    pub fn closure_residual(&self) -> f64 {
        (self.vertices[self.vertices.len() - 1] - self.vertices[0]).norm()
    }
}

/// Vertex relations of the fundamental polygon.
///
/// Starting from `τ_1`, each block `i` with starting vertex `s` gives
/// `τ_{4i} = α_i s`, `τ_{4i-1} = β_i⁻¹ α_i s`, `τ_{4i-2} = α_i⁻¹ β_i⁻¹ α_i s`
/// and `τ_{4i+1} = β_i α_i⁻¹ β_i⁻¹ α_i s`.
pub fn vertex_chase(group: &Arc<SurfaceGroup>, tau1: C64) -> Result<FundamentalOctagon> {
    let g = group
        .genus()
        .ok_or_else(|| Error::UnsupportedGroup("vertex chase needs a surface group".into()))?;
    if !(tau1.im > 0.0) {
        return Err(Error::Precondition("base vertex must lie in the upper half-plane".into()));
    }
    let mut words = vec![GroupWord::identity()];
    for i in 1..=g {
        let (a, b) = (group.alpha(i), group.beta(i));
        let s = words[words.len() - 1].clone();
        let pre = |ls: &[Letter]| GroupWord::reduce(ls.iter().copied()).mul(&s);
        words.push(pre(&[a.inv(), b.inv(), a]));
        words.push(pre(&[b.inv(), a]));
        words.push(pre(&[a]));
        words.push(pre(&[b, a.inv(), b.inv(), a]));
    }
    let vertices = words
        .iter()
        .map(|w| group.word_to_matrix(w).apply(tau1))
        .collect::<Result<Vec<_>>>()?;
    let mut edges = Vec::with_capacity(4 * g);
    for i in 1..=g {
        let s = 4 * (i - 1);
        edges.push(PolygonEdge { label: EdgeLabel::new(i, false), start: s, end: s + 1 });
        edges.push(PolygonEdge { label: EdgeLabel::new(i + g, false), start: s + 1, end: s + 2 });
        edges.push(PolygonEdge { label: EdgeLabel::new(i, true), start: s + 2, end: s + 3 });
        edges.push(PolygonEdge { label: EdgeLabel::new(i + g, true), start: s + 3, end: s + 4 });
    }
    Ok(FundamentalOctagon { genus: g, vertices, chase_words: words, edges, group: group.clone() })
}

/// The fundamental polygon based at the group's standard base vertex.
pub fn standard_polygon(group: &Arc<SurfaceGroup>) -> Result<FundamentalOctagon> {
    let base = group
        .base_vertex()
        .ok_or_else(|| Error::UnsupportedGroup("the cyclic model has no fundamental polygon".into()))?;
    vertex_chase(group, base)
}

/// Interior angle of the regular `n`-gon with circumradius `r`.
fn regular_polygon_angle(n: usize, r: f64) -> f64 {
    2.0 * (1.0 / (r.cosh() * (PI / n as f64).tan())).atan()
}

/// Circumradius of the regular `4g`-gon whose angles sum to `2π`, found by
/// bisection on the angle condition.
pub fn polygon_circumradius(genus: usize) -> f64 {
    let n = 4 * genus;
    let target = 2.0 * PI / n as f64;
    let (mut lo, mut hi) = (1e-6, 50.0);
    // the interior angle decreases with the circumradius
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if regular_polygon_angle(n, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maps the unit disk to the upper half-plane, sending 0 to `i`.
pub fn disk_to_half_plane(w: C64) -> C64 {
    C64::new(0.0, 1.0) * (1.0 + w) / (1.0 - w)
}

pub fn half_plane_to_disk(z: C64) -> C64 {
    (z - C64::new(0.0, 1.0)) / (z + C64::new(0.0, 1.0))
}

/// Surface group of the regular `4g`-gon with angles `2π/4g`, with the polygon
/// based at the vertex preceding side `γ_1`.
pub fn regular_surface_group(genus: usize) -> Result<(Arc<SurfaceGroup>, FundamentalOctagon)> {
    if genus < 2 {
        return Err(Error::ConstructionFailure(format!("genus must be at least 2, got {genus}")));
    }
    let n = 4 * genus;
    let step = 2.0 * PI / n as f64;
    let circumradius = polygon_circumradius(genus);
    let inradius = (circumradius.tanh() * (PI / n as f64).cos()).atanh();
    let theta0 = -0.5 * step;
    let side_mid = |j: usize| theta0 + (j as f64 + 0.5) * step;

    // pairing of side j onto side j+2 (reversed): rotate the side's midpoint
    // onto the axis, slide it across the centre, rotate onto the partner side
    let pairing = |j: usize| {
        MoebiusMap::rotation_about_i(side_mid(j + 2) - PI)
            .compose(&MoebiusMap::axial_translation(-2.0 * inradius))
            .compose(&MoebiusMap::rotation_about_i(-side_mid(j)))
    };
    let mut generators = vec![MoebiusMap::identity(); 2 * genus];
    for i in 0..genus {
        generators[i] = pairing(4 * i);
        generators[genus + i] = pairing(4 * i + 1);
    }
    let r_disk = (0.5 * circumradius).tanh();
    let geometric: Vec<C64> =
        (0..n).map(|k| disk_to_half_plane(C64::from_polar(r_disk, theta0 + k as f64 * step))).collect();
    let group = Arc::new(SurfaceGroup {
        model: GroupModel::Surface { genus },
        generators,
        pruning_margin: circumradius + 0.1,
        base_vertex: Some(geometric[0]),
    });

    let residual = group.relator_residual()?;
    if !(residual <= RELATOR_TOL) {
        return Err(Error::ConstructionFailure(format!("relator residual {residual:.3e} exceeds {RELATOR_TOL:e}")));
    }
    if let Some(bad) = group.generators.iter().find(|m| !m.is_hyperbolic()) {
        return Err(Error::ConstructionFailure(format!("generator {bad} is not hyperbolic")));
    }

    let polygon = vertex_chase(&group, geometric[0])?;
    let chase_err = geometric
        .iter()
        .zip(&polygon.vertices)
        .map(|(a, b)| (a - b).norm() / (1.0 + a.norm()))
        .fold(0.0, f64::max);
    if !(chase_err <= RELATOR_TOL) {
        return Err(Error::ConstructionFailure(format!(
            "vertex chase misses the polygon vertices by {chase_err:.3e}"
        )));
    }
    Ok((group, polygon))
}

/// The genus-2 group of the regular octagon with angles `π/4`.
pub fn octagon_group() -> Result<(Arc<SurfaceGroup>, FundamentalOctagon)> {
    regular_surface_group(2)
}

/// Cyclic model generated by `diag(λ, 1/λ)`.
pub fn cyclic_group(lambda: f64) -> Result<Arc<SurfaceGroup>> {
    if !(lambda > 1.0) {
        return Err(Error::Precondition(format!("cyclic model needs lambda > 1, got {lambda}")));
    }
    Ok(Arc::new(SurfaceGroup {
        model: GroupModel::Cyclic { lambda },
        generators: vec![MoebiusMap::dilation(lambda)],
        pruning_margin: 0.0,
        base_vertex: None,
    }))
}

/// A group element found by [`enumerate_ball`].
#[derive(Clone, Debug)]
pub struct BallElement {
    pub word: GroupWord,
    pub matrix: MoebiusMap,
    pub displacement: f64,
}

#[derive(Clone, Debug)]
pub struct BallEnumeration {
    pub radius: f64,
    /// Sorted by displacement, then word.
    pub elements: Vec<BallElement>,
    /// Distinct elements examined (inside the pruning radius).
    pub visited: usize,
    /// Key collisions between numerically distinct matrices.
    pub collisions: usize,
}

impl BallEnumeration {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn matrices(&self) -> Vec<MoebiusMap> {
        self.elements.iter().map(|e| e.matrix).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EnumerationOptions {
    pub cap: usize,
    /// Multiplies the group's pruning margin (completeness audits use 2).
    pub margin_factor: f64,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_ELEMENT_CAP, margin_factor: 1.0 }
    }
}

const KEY_CELL: f64 = 1e-8;
const SAME_ELEMENT: f64 = 1e-6;

/// Matrix dedup table keyed on sign-normalized entries rounded to a grid;
/// entries near a cell boundary also probe the neighbouring cell.
struct ElementTable {
    cells: HashMap<[i64; 4], Vec<usize>>,
    matrices: Vec<MoebiusMap>,
    collisions: usize,
}

impl ElementTable {
    fn new() -> Self {
        Self { cells: HashMap::new(), matrices: Vec::new(), collisions: 0 }
    }

    fn candidate_keys(m: &MoebiusMap) -> Vec<[i64; 4]> {
        let e = m.sign_normalized().entries();
        let mut keys = vec![[0i64; 4]];
        for (k, x) in e.iter().enumerate() {
            let s = x / KEY_CELL;
            let base = s.floor();
            let frac = s - base;
            let mut next = Vec::with_capacity(keys.len() * 2);
            for key in &keys {
                let mut a = *key;
                a[k] = base as i64;
                next.push(a);
                if !(0.25..=0.75).contains(&frac) {
                    let mut b = *key;
                    b[k] = if frac < 0.25 { base as i64 - 1 } else { base as i64 + 1 };
                    next.push(b);
                }
            }
            keys = next;
        }
        keys
    }

    /// Returns `true` if `m` was not present.
    fn insert(&mut self, m: MoebiusMap) -> bool {
        let keys = Self::candidate_keys(&m);
        for key in &keys {
            if let Some(ids) = self.cells.get(key) {
                for &id in ids {
                    let d = self.matrices[id].projective_distance(&m);
                    if d < SAME_ELEMENT {
                        return false;
                    }
                    self.collisions += 1;
                }
            }
        }
        let id = self.matrices.len();
        self.matrices.push(m);
        self.cells.entry(keys[0]).or_default().push(id);
        true
    }
}

/// Group elements `A` with `dist(i, A i) <= radius`.
///
/// Breadth-first search over reduced words; a node is expanded only while its
/// displacement stays below `radius + margin`. For the regular polygon the
/// margin is the circumradius: every tile met by the geodesic from `i` to
/// `A i` has its centre within that distance of the geodesic, and
/// neighbouring tiles differ by one generator.
pub fn enumerate_ball(group: &SurfaceGroup, radius: f64, opts: EnumerationOptions) -> Result<BallEnumeration> {
    if !(radius >= 0.0) {
        return Err(Error::Precondition(format!("radius must be non-negative, got {radius}")));
    }
    if let GroupModel::Cyclic { lambda } = group.model {
        let step = 2.0 * lambda.ln();
        let n_max = (radius / step + 1e-12).floor() as i64;
        let a = Letter::new(0, false);
        let mut elements = Vec::new();
        for n in -n_max..=n_max {
            let letter = if n < 0 { a.inv() } else { a };
            let word = GroupWord::reduce(std::iter::repeat_n(letter, n.unsigned_abs() as usize));
            let matrix = MoebiusMap::dilation(lambda.powi(n as i32));
            elements.push(BallElement { word, matrix, displacement: (n.abs() as f64) * step });
        }
        if elements.len() > opts.cap {
            return Err(Error::BudgetExceeded { cap: opts.cap });
        }
        elements.sort_by(order_elements);
        let visited = elements.len();
        return Ok(BallEnumeration { radius, elements, visited, collisions: 0 });
    }

    let prune = radius + opts.margin_factor * group.pruning_margin;
    let letters = group.letters();
    let mut table = ElementTable::new();
    table.insert(MoebiusMap::identity());
    let mut queue = VecDeque::new();
    queue.push_back(BallElement { word: GroupWord::identity(), matrix: MoebiusMap::identity(), displacement: 0.0 });
    let mut elements = Vec::new();
    let mut visited = 0usize;
    while let Some(node) = queue.pop_front() {
        visited += 1;
        if visited > opts.cap.saturating_mul(64) {
            return Err(Error::BudgetExceeded { cap: opts.cap });
        }
        for &l in &letters {
            if node.word.letters().last() == Some(&l.inv()) {
                continue;
            }
            let matrix = node.matrix.compose(&group.letter_matrix(l));
            let displacement = matrix.displacement();
            if displacement > prune || !table.insert(matrix) {
                continue;
            }
            let mut letters_next = node.word.letters().to_vec();
            letters_next.push(l);
            queue.push_back(BallElement { word: GroupWord { letters: letters_next }, matrix, displacement });
        }
        if node.displacement <= radius {
            elements.push(node);
            if elements.len() > opts.cap {
                return Err(Error::BudgetExceeded { cap: opts.cap });
            }
        }
    }
    elements.sort_by(order_elements);
    Ok(BallEnumeration { radius, elements, visited, collisions: table.collisions })
}

fn order_elements(x: &BallElement, y: &BallElement) -> Ordering {
    x.displacement.total_cmp(&y.displacement).then_with(|| x.word.cmp(&y.word))
}

/// Generator matrices as CSV (`name,a,b,c,d`), full precision.
pub fn generators_csv(group: &SurfaceGroup) -> String {
    let mut out = String::from("name,a,b,c,d\n");
    for (k, m) in group.generators().iter().enumerate() {
        let name = group.letter_name(Letter::new(k, false));
        let _ = writeln!(out, "{name},{:e},{:e},{:e},{:e}", m.a, m.b, m.c, m.d);
    }
    out
}

/// Points along the disk-model geodesic from `p` to `q`.
fn disk_geodesic(p: C64, q: C64, samples: usize) -> Vec<C64> {
    let to0 = |w: C64| (w - p) / (1.0 - p.conj() * w);
    let from0 = |w: C64| (w + p) / (1.0 + p.conj() * w);
    let target = to0(q);
    (0..=samples).map(|k| from0(target * (k as f64 / samples as f64))).collect()
}

/// SVG drawing of the fundamental polygon in the disk model, with vertex
/// and side labels.
pub fn octagon_svg(polygon: &FundamentalOctagon) -> String {
    let size = 600.0;
    let scale = 0.45 * size;
    let map = |w: C64| (0.5 * size + scale * w.re, 0.5 * size - scale * w.im);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(
        out,
        r#"  <circle cx="{c}" cy="{c}" r="{scale}" fill="none" stroke="gray" stroke-width="1"/>"#,
        c = 0.5 * size
    );
    let disk: Vec<C64> = polygon.vertices.iter().map(|&z| half_plane_to_disk(z)).collect();
    let mut d = String::new();
    for (k, e) in polygon.edges.iter().enumerate() {
        let pts = disk_geodesic(disk[e.start], disk[e.end], 32);
        for (j, p) in pts.iter().enumerate() {
            let (x, y) = map(*p);
            let cmd = if k == 0 && j == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{x:.3},{y:.3} ");
        }
        let (x, y) = map(pts[16] * 0.9);
        let _ = writeln!(
            out,
            r#"  <text x="{x:.3}" y="{y:.3}" font-size="12" fill="steelblue" text-anchor="middle">{}</text>"#,
            e.label
        );
    }
    let _ = writeln!(out, r#"  <path d="{}Z" fill="none" stroke="black" stroke-width="1.5"/>"#, d.trim_end());
    for (j, w) in disk.iter().take(disk.len() - 1).enumerate() {
        let (x, y) = map(*w);
        let (lx, ly) = map(*w * 1.08);
        let _ = writeln!(out, r#"  <circle cx="{x:.3}" cy="{y:.3}" r="3" fill="crimson"/>"#);
        let _ = writeln!(
            out,
            r#"  <text x="{lx:.3}" y="{ly:.3}" font-size="13" text-anchor="middle">tau_{}</text>"#,
            j + 1
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circumradius_matches_closed_form() {
        // cosh R = cot(π/8)² for the regular octagon with angles π/4
        let r = polygon_circumradius(2);
        let want = (1.0 / (PI / 8.0).tan()).powi(2).acosh();
        assert!((r - want).abs() < 1e-11);
    }

    #[test]
    fn octagon_relator_and_generators() {
        let (g, _) = octagon_group().unwrap();
        assert!(g.relator_residual().unwrap() < 1e-9);
        assert_eq!(g.generators().len(), 4);
        assert!(g.generators().iter().all(|m| m.is_hyperbolic() && m.is_valid()));
        let words = g.letters().len();
        assert_eq!(words, 8);
    }

    #[test]
    fn octagon_vertex_chase_relations() {
        let (g, oct) = octagon_group().unwrap();
        let t1 = oct.tau1();
        let a1 = g.letter_matrix(g.alpha(1));
        let b1 = g.letter_matrix(g.beta(1));
        let v = &oct.vertices;
        let near = |x: C64, y: C64| (x - y).norm() < 1e-9;
        assert!(near(v[3], a1.act(t1)));
        assert!(near(v[2], b1.inverse().act(v[3])));
        assert!(near(v[1], a1.inverse().act(v[2])));
        assert!(near(v[4], b1.act(v[1])));
        assert!(v.iter().all(|z| z.im > 0.0));
        assert!(oct.closure_residual() < 1e-9);
        assert!(oct.pairing_residual() < 1e-9);
    }

    #[test]
    fn vertex_chase_works_from_any_base_point() {
        let (g, _) = octagon_group().unwrap();
        let oct = vertex_chase(&g, C64::new(0.3, 1.7)).unwrap();
        assert!(oct.pairing_residual() < 1e-9);
        assert!(oct.closure_residual() < 1e-9);
        // τ_2 = α₁⁻¹β₁⁻¹α₁ τ_1
        let w = GroupWord::new(vec![g.alpha(1).inv(), g.beta(1).inv(), g.alpha(1)]).unwrap();
        assert!((oct.vertices[1] - g.word_to_matrix(&w).act(oct.tau1())).norm() < 1e-12);
    }

    #[test]
    fn vertex_words_match_long_word_pattern() {
        let (g, oct) = octagon_group().unwrap();
        let (a1, b1, a2, b2) = (g.alpha(1), g.beta(1), g.alpha(2), g.beta(2));
        let w = |ls: &[Letter]| GroupWord::new(ls.to_vec()).unwrap();
        assert_eq!(oct.vertex_word(1), w(&[a1.inv(), b1, a1]));
        assert_eq!(oct.vertex_word(2), w(&[a1.inv(), b1]));
        assert_eq!(oct.vertex_word(3), w(&[a1.inv()]));
        assert_eq!(oct.vertex_word(4), w(&[a1.inv(), b1, a1, b1.inv()]));
        assert_eq!(oct.vertex_word(5), w(&[a1.inv(), b1, a1, b1.inv(), a2.inv(), b2, a2]));
        assert_eq!(oct.vertex_word(7), w(&[a1.inv(), b1, a1, b1.inv(), a2.inv()]));
    }

    #[test]
    fn vertex_chase_rejects_cyclic_model() {
        let g = cyclic_group(2.0).unwrap();
        assert!(matches!(vertex_chase(&g, C64::new(0.0, 1.0)), Err(Error::UnsupportedGroup(_))));
    }

    #[test]
    fn words_reduce_and_map_to_matrices() {
        let (g, _) = octagon_group().unwrap();
        let a = g.alpha(1);
        assert!(GroupWord::new(vec![a, a.inv()]).is_err());
        assert_eq!(g.word_to_matrix(&GroupWord::identity()), MoebiusMap::identity());
        let u = GroupWord::new(vec![a, g.beta(2)]).unwrap();
        let v = GroupWord::new(vec![g.beta(2).inv(), g.alpha(2)]).unwrap();
        let uv = u.mul(&v);
        assert_eq!(uv, GroupWord::new(vec![a, g.alpha(2)]).unwrap());
        let lhs = g.word_to_matrix(&uv);
        let rhs = g.word_to_matrix(&u).compose(&g.word_to_matrix(&v));
        assert!(lhs.projective_distance(&rhs) < 1e-12);
        let r = g.relator().unwrap();
        assert!(g.word_to_matrix(&r).projective_distance(&MoebiusMap::identity()) < 1e-9);
    }

    #[test]
    fn ball_of_radius_zero_is_identity() {
        let (g, _) = octagon_group().unwrap();
        let ball = enumerate_ball(&g, 0.0, EnumerationOptions::default()).unwrap();
        assert_eq!(ball.len(), 1);
        assert!(ball.elements[0].word.is_identity());
    }

    #[test]
    fn ball_contains_all_generators_at_their_displacement() {
        let (g, _) = octagon_group().unwrap();
        let d = g.generators()[0].displacement();
        let ball = enumerate_ball(&g, d + 1e-9, EnumerationOptions::default()).unwrap();
        // identity and the 8 letters (all generators displace i by the same amount)
        assert_eq!(ball.len(), 9);
    }

    #[test]
    fn ball_elements_are_distinct_and_complete() {
        let (g, _) = octagon_group().unwrap();
        let ball = enumerate_ball(&g, 6.0, EnumerationOptions::default()).unwrap();
        let ms = ball.matrices();
        for i in 0..ms.len() {
            for j in 0..i {
                assert!(ms[i].projective_distance(&ms[j]) > 1e-6);
            }
        }
        assert_eq!(ball.collisions, 0);
        let wide = enumerate_ball(&g, 6.0, EnumerationOptions { margin_factor: 2.0, ..Default::default() }).unwrap();
        assert_eq!(wide.len(), ball.len());
    }

    #[test]
    fn ball_is_monotone_in_radius() {
        let (g, _) = octagon_group().unwrap();
        let small = enumerate_ball(&g, 4.0, EnumerationOptions::default()).unwrap();
        let big = enumerate_ball(&g, 5.5, EnumerationOptions::default()).unwrap();
        for e in &small.elements {
            assert!(big.elements.iter().any(|f| f.matrix.projective_distance(&e.matrix) < 1e-6));
        }
    }

    #[test]
    fn ball_growth_rate_is_near_one() {
        let (g, _) = octagon_group().unwrap();
        let n4 = enumerate_ball(&g, 4.0, EnumerationOptions::default()).unwrap().len() as f64;
        let n9 = enumerate_ball(&g, 9.0, EnumerationOptions::default()).unwrap().len() as f64;
        let slope = (n9.ln() - n4.ln()) / 5.0;
        assert!((0.8..=1.2).contains(&slope), "slope {slope}");
    }

    #[test]
    fn ball_respects_cap() {
        let (g, _) = octagon_group().unwrap();
        let r = enumerate_ball(&g, 8.0, EnumerationOptions { cap: 50, margin_factor: 1.0 });
        assert!(matches!(r, Err(Error::BudgetExceeded { cap: 50 })));
    }

    #[test]
    fn cyclic_model() {
        let g = cyclic_group(2.0).unwrap();
        let a = g.generators()[0];
        assert!((a.act(C64::new(0.0, 1.0)) - C64::new(0.0, 4.0)).norm() < 1e-15);
        assert!((a.displacement() - 2.0 * 2f64.ln()).abs() < 1e-14);
        let ball = enumerate_ball(&g, 3.0, EnumerationOptions::default()).unwrap();
        // 2 ln 2 ≈ 1.386: n ∈ {-2, …, 2}
        assert_eq!(ball.len(), 5);
        let a3 = g.word_to_matrix(&GroupWord::reduce([Letter::new(0, false); 3]));
        assert!(a3.projective_distance(&MoebiusMap::dilation(8.0)) < 1e-12);
        assert!(cyclic_group(0.5).is_err());
    }

    #[test]
    fn exports_render() {
        let (g, oct) = octagon_group().unwrap();
        let csv = generators_csv(&g);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("name,a,b,c,d\na1,"));
        let svg = octagon_svg(&oct);
        assert!(svg.contains("tau_8") && svg.contains("gamma_4^-1"));
    }
}

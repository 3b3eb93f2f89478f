//! Orbit enumeration for discrete isometry groups.
//!
//! A [`GroupPresentation`] holds a finite symmetric generating set. The
//! central operation is [`enumerate_orbit`]: list the orbit points `γ·y`
//! inside a closed ball `B(x, ρ)`, together with certified completeness
//! where a certificate is available.
//!
//! # Completeness certificates
//!
//! A breadth-first search over words prunes states whose orbit point falls
//! outside `B(x, ρ + margin)`. Pruning is sound when every group element
//! landing in `B(x, ρ)` is reachable through intermediate words that stay
//! within the margin. Three certificates are implemented:
//!
//! * **trivial group** — the orbit is `{y}`; margin 0.
//! * **cyclic diagonal** — generated by one diagonal matrix `diag(q, 1/q)`
//!   with `|q| ≠ 1` (a loxodromic translation along the vertical axis).
//!   Powers move monotonically along the axis, so a chain to `a^k` stays
//!   within `d(x, A) + d(y, A) + max(0, d(x,y) − ρ)` of the target ball,
//!   where `A` is the axis.
//! * **free ping-pong** — the generators carry pairwise disjoint isometric
//!   disks none of whose hemispheres contains the basepoint `o`. A height
//!   contraction argument gives `d(o, w·o) ≥ (n−1)·L₀ + A₀` for every
//!   reduced word of length `n`, which bounds the word length of any
//!   element meeting the ball and hence the detour of its prefixes.
//!
//! Groups matching no certificate are still enumerated (the result is a
//! certified *lower* set: every listed point is genuinely in the ball) but
//! are flagged `complete = false`.
//!
//! Words index into the symmetric-closed generator list returned by
//! [`GroupPresentation::generators`].

use std::collections::HashSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hyperbolic_core::{
    ball_volume, distance_to_vertical_axis, hyperbolic_distance, sample_ball, Isometry, Point,
};
use crate::numerics::rng::mix;
use crate::{Error, Result};

/// Default cap on the number of breadth-first states before enumeration
/// aborts with [`Error::FrontierCap`].
pub const DEFAULT_FRONTIER_CAP: usize = 50_000_000;

/// Entrywise tolerance for recognizing matrix coincidences (inverse pairs,
/// duplicate generators, identity).
const MATRIX_TOLERANCE: f64 = 1e-9;

/// Two enumerated orbit points closer than this (hyperbolic distance) are
/// treated as the same point and deduplicated.
const POINT_DEDUP_TOLERANCE: f64 = 1e-6;

/// Word-count budget for the unpruned oracle enumeration.
const ORACLE_BUDGET: f64 = 1e7;

/// A finitely generated group of isometries given by a symmetric generating
/// set (closed under inverses; no identity entries; duplicates removed).
#[derive(Debug, Clone)]
pub struct GroupPresentation {
    name: String,
    dimension: usize,
    generators: Vec<Isometry>,
    pruning_margin: f64,
    is_free_hint: bool,
}

/// On-disk JSON schema for a group presentation. Each generator is a 2×2
/// matrix of `[re, im]` pairs in row-major order.
#[derive(Deserialize)]
struct GroupFile {
    name: String,
    dimension: usize,
    generators: Vec<[[[f64; 2]; 2]; 2]>,
    #[serde(default)]
    is_free_hint: bool,
    #[serde(default)]
    pruning_margin: f64,
}

impl GroupPresentation {
    /// Build a presentation from explicit generators. The set is closed
    /// under inverses, duplicates (within `1e−9`) are dropped, and identity
    /// generators are discarded.
    pub fn new(
        name: &str,
        dimension: usize,
        generators: &[Isometry],
        pruning_margin: f64,
        is_free_hint: bool,
    ) -> Result<Self> {
        if !(pruning_margin >= 0.0 && pruning_margin.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "pruning margin must be finite and non-negative, got {pruning_margin}"
            )));
        }
        let identity = Isometry::identity(dimension)?;
        let mut closed: Vec<Isometry> = Vec::with_capacity(2 * generators.len());
        for g in generators {
            if g.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: g.dimension(),
                });
            }
            if g.approx_eq(&identity, MATRIX_TOLERANCE)
                || closed.iter().any(|h| h.approx_eq(g, MATRIX_TOLERANCE))
            {
                continue;
            }
            closed.push(*g);
        }
        let listed = closed.clone();
        for g in &listed {
            let inv = g.inverse();
            if !closed.iter().any(|h| h.approx_eq(&inv, MATRIX_TOLERANCE)) {
                closed.push(inv);
            }
        }
        Ok(GroupPresentation {
            name: name.to_string(),
            dimension,
            generators: closed,
            pruning_margin,
            is_free_hint,
        })
    }

    /// Parse a presentation from its JSON representation.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GroupFile = serde_json::from_str(text)?;
        if file.dimension != 2 && file.dimension != 3 {
            return Err(Error::GroupFile(format!(
                "dimension must be 2 or 3, got {}",
                file.dimension
            )));
        }
        let mut gens = Vec::with_capacity(file.generators.len());
        for (k, rows) in file.generators.iter().enumerate() {
            let entry = |r: usize, c: usize| Complex64::new(rows[r][c][0], rows[r][c][1]);
            let m = [entry(0, 0), entry(0, 1), entry(1, 0), entry(1, 1)];
            if file.dimension == 2 && m.iter().any(|e| e.im != 0.0) {
                return Err(Error::GroupFile(format!(
                    "generator {k}: plane isometries must have real entries"
                )));
            }
            let g = Isometry::new_renormalized(file.dimension, m)
                .map_err(|e| Error::GroupFile(format!("generator {k}: {e}")))?;
            gens.push(g);
        }
        GroupPresentation::new(
            &file.name,
            file.dimension,
            &gens,
            file.pruning_margin,
            file.is_free_hint,
        )
    }

    /// Group name (for diagnostics and reports).
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Dimension of the half-space the group acts on.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// The symmetric-closed generator list. Word indices refer to this list.
    pub fn generators(&self) -> &[Isometry] {
        &self.generators
    }

    /// User-supplied extra pruning slack (added on top of any certificate
    /// margin; enlarging it can only grow the explored region).
    pub fn pruning_margin(&self) -> f64 {
        self.pruning_margin
    }

    /// Whether the presentation is marked as (expected to be) free.
    pub fn is_free_hint(&self) -> bool {
        self.is_free_hint
    }
}

/// One orbit point `γ·y` inside the ball, with its distance from the center
/// and the word (generator indices, applied left to right) realizing `γ`.
#[derive(Debug, Clone)]
pub struct OrbitPoint {
    /// The point `γ·y`.
    pub point: Point,
    /// `d(x, γ·y)`.
    pub distance: f64,
    /// Generator indices of a shortest word for `γ`.
    pub word: Vec<usize>,
}

/// The orbit of `y` restricted to the closed ball `B(x, ρ)`.
#[derive(Debug, Clone)]
pub struct OrbitBall {
    /// Ball center.
    pub basepoint_x: Point,
    /// Orbit basepoint.
    pub basepoint_y: Point,
    /// Ball radius.
    pub radius: f64,
    /// Orbit points sorted by distance (ties broken by word, lexicographic).
    pub points: Vec<OrbitPoint>,
    /// Whether a completeness certificate guarantees no point was missed.
    pub complete: bool,
}

/// Group elements whose orbit point lies in the ball, in the same order as
/// the corresponding [`OrbitBall`] points.
#[derive(Debug, Clone)]
pub struct OrbitElements {
    /// Elements `γ` with `d(x, γ·y) ≤ ρ`.
    pub elements: Vec<Isometry>,
    /// Whether a completeness certificate applied.
    pub complete: bool,
}

/// Monte Carlo estimate of the averaged orbital counting pairing.
#[derive(Debug, Clone, Serialize)]
pub struct ScalarProductEstimate {
    /// Sample mean of `N(w, z, ρ) / 𝒱(ρ)` over perturbed centers.
    pub mean: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    /// Number of Monte Carlo samples.
    pub samples: usize,
    /// Whether the underlying (enlarged-radius) enumeration was certified
    /// complete.
    pub complete: bool,
}

// ---------------------------------------------------------------------------
// Completeness certificates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Certificate {
    Trivial,
    CyclicDiagonal { margin: f64 },
    PingPong { margin: f64, max_len: usize },
    Exploratory { margin: f64 },
}

impl Certificate {
    fn complete(&self) -> bool {
        !matches!(self, Certificate::Exploratory { .. })
    }

    fn margin(&self) -> f64 {
        match *self {
            Certificate::Trivial => 0.0,
            Certificate::CyclicDiagonal { margin }
            | Certificate::PingPong { margin, .. }
            | Certificate::Exploratory { margin } => margin,
        }
    }

    fn length_cap(&self) -> Option<usize> {
        match *self {
            Certificate::PingPong { max_len, .. } => Some(max_len),
            _ => None,
        }
    }
}

/// Data of a verified ping-pong configuration, independent of the query.
struct PingPongData {
    /// `ln(1/σ_max)` where `σ_max` is the supremal squared per-letter height
    /// contraction factor: guaranteed distance growth per letter.
    l0: f64,
    /// First-letter offset: `d(o, w·o) ≥ (n−1)·L₀ + A₀` for reduced words
    /// of length `n ≥ 1`.
    a0: f64,
    /// `max_g d(o, g·o)`.
    d_max: f64,
}

/// Try to verify the ping-pong (Schottky) conditions for the symmetric
/// generator list: every generator moves the boundary point at infinity
/// (`c ≠ 0`), the isometric disks are pairwise disjoint, no hemisphere over
/// a disk contains the basepoint, and heights contract strictly.
fn ping_pong_data(gens: &[Isometry]) -> Option<PingPongData> {
    if gens.is_empty() {
        return None;
    }
    // Disk of g (the image disk of the exterior of the disk of g⁻¹):
    // center a/c, radius 1/|c|. The disk of g⁻¹ has center −d/c.
    let mut center = Vec::with_capacity(gens.len());
    let mut center_inv = Vec::with_capacity(gens.len());
    let mut radius = Vec::with_capacity(gens.len());
    let mut inverse_of = Vec::with_capacity(gens.len());
    for g in gens {
        let [a, _, c, d] = g.entries();
        if c.norm() <= MATRIX_TOLERANCE {
            return None;
        }
        center.push(a / c);
        center_inv.push(-d / c);
        radius.push(1.0 / c.norm());
        let inv = g.inverse();
        let j = gens
            .iter()
            .position(|h| h.approx_eq(&inv, MATRIX_TOLERANCE))?;
        inverse_of.push(j);
    }
    // Pairwise disjoint isometric disks.
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            if (center[i] - center[j]).norm() <= radius[i] + radius[j] {
                return None;
            }
        }
    }
    // No hemisphere contains the basepoint o = (0, 1), quantitatively:
    // the first applied letter u sends o to height r_u² / (|m_{u⁻¹}|² + 1).
    let mut h1 = 0.0_f64;
    for i in 0..gens.len() {
        let denom = center_inv[i].norm_sqr() + 1.0;
        if radius[i] * radius[i] >= denom {
            return None;
        }
        h1 = h1.max(radius[i] * radius[i] / denom);
    }
    // Height contraction u·w over w in the hemisphere of the disk of v,
    // v ≠ u⁻¹: factor (r_u / (|m_v − m_{u⁻¹}| − r_v))².
    let mut sigma_max = 0.0_f64;
    for u in 0..gens.len() {
        for v in 0..gens.len() {
            if v == inverse_of[u] {
                continue;
            }
            let gap = (center[v] - center_inv[u]).norm() - radius[v];
            if gap <= 0.0 {
                return None;
            }
            let s = radius[u] / gap;
            sigma_max = sigma_max.max(s * s);
        }
    }
    if !(sigma_max > 0.0 && sigma_max < 1.0) {
        return None;
    }
    let d_max = gens
        .iter()
        .map(Isometry::basepoint_displacement)
        .fold(0.0_f64, f64::max);
    Some(PingPongData {
        l0: -sigma_max.ln(),
        a0: -h1.ln() - std::f64::consts::LN_2,
        d_max,
    })
}

/// Whether the symmetric generator list is a diagonal loxodromic pair
/// `{a, a⁻¹}` with `a = diag(q, 1/q)`, `|q| ≠ 1`.
fn is_cyclic_diagonal(gens: &[Isometry]) -> bool {
    if gens.len() != 2 {
        return false;
    }
    let diag = |g: &Isometry| {
        let [a, b, c, _] = g.entries();
        b.norm() <= MATRIX_TOLERANCE
            && c.norm() <= MATRIX_TOLERANCE
            && (a.norm() - 1.0).abs() > MATRIX_TOLERANCE
    };
    diag(&gens[0]) && diag(&gens[1]) && gens[1].approx_eq(&gens[0].inverse(), MATRIX_TOLERANCE)
}

/// Compute the applicable completeness certificate for a ball query.
fn certify(group: &GroupPresentation, x: &Point, y: &Point, rho: f64) -> Result<Certificate> {
    let gens = group.generators();
    if gens.is_empty() {
        return Ok(Certificate::Trivial);
    }
    if is_cyclic_diagonal(gens) {
        // Powers a^k translate along the vertical axis A; the projection
        // onto A of the chain y, a·y, …, a^k·y moves monotonically, so
        // intermediate distances exceed max(d(x,y), d(x, a^k y)) by at most
        // d(x, A) + d(y, A).
        let margin = distance_to_vertical_axis(x)
            + distance_to_vertical_axis(y)
            + (hyperbolic_distance(x, y)? - rho).max(0.0);
        return Ok(Certificate::CyclicDiagonal { margin });
    }
    if group.is_free_hint() {
        if let Some(pp) = ping_pong_data(gens) {
            let o = Point::basepoint(group.dimension())?;
            let dxo = hyperbolic_distance(x, &o)?;
            let doy = hyperbolic_distance(&o, y)?;
            // d(o, w·o) ≥ (n−1)·L₀ + A₀ bounds the reduced length of any
            // word meeting the ball; its prefixes then stay within
            // d(x,o) + d(o,y) + n_max·D_max of the center.
            let bound = rho + dxo + doy;
            let n_max = (1.0 + (bound - pp.a0) / pp.l0).ceil().clamp(1.0, 1e9) as usize;
            let margin = (dxo + doy + n_max as f64 * pp.d_max - rho).max(0.0);
            return Ok(Certificate::PingPong {
                margin,
                max_len: n_max,
            });
        }
    }
    // No certificate: explore with the generators' own displacement as
    // slack. Every reported point is genuinely in the ball, but points
    // reachable only through wide detours may be missed.
    let margin = gens
        .iter()
        .map(|g| {
            let gy = g.apply(y)?;
            hyperbolic_distance(y, &gy)
        })
        .try_fold(0.0_f64, |m, d| d.map(|d| m.max(d)))?;
    Ok(Certificate::Exploratory { margin })
}

// ---------------------------------------------------------------------------
// Breadth-first enumeration
// ---------------------------------------------------------------------------

struct BfsNode {
    element: Isometry,
    distance: f64,
    parent: usize,
    gen_idx: usize,
    level: usize,
}

fn check_query(group: &GroupPresentation, x: &Point, y: &Point, rho: f64) -> Result<()> {
    for dim in [x.dimension(), y.dimension()] {
        if dim != group.dimension() {
            return Err(Error::DimensionMismatch {
                expected: group.dimension(),
                got: dim,
            });
        }
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ball radius must be finite and non-negative, got {rho}"
        )));
    }
    Ok(())
}

/// Level-synchronized breadth-first search over group elements. States are
/// deduplicated by the canonical matrix key; the identity is always
/// expanded, and other states only while their orbit point stays within
/// `ρ + margin` (and, under a ping-pong certificate, their word length
/// stays below the certified cap).
fn bfs_ball(
    group: &GroupPresentation,
    x: &Point,
    y: &Point,
    rho: f64,
    frontier_cap: usize,
) -> Result<(Vec<BfsNode>, bool)> {
    check_query(group, x, y, rho)?;
    let certificate = certify(group, x, y, rho)?;
    let margin = certificate.margin().max(group.pruning_margin());
    let length_cap = certificate.length_cap();
    let reach = rho + margin;

    let identity = Isometry::identity(group.dimension())?;
    let mut arena = vec![BfsNode {
        element: identity,
        distance: hyperbolic_distance(x, &identity.apply(y)?)?,
        parent: usize::MAX,
        gen_idx: usize::MAX,
        level: 0,
    }];
    let mut visited: HashSet<[u64; 8]> = HashSet::new();
    visited.insert(identity.canonical_key());

    let mut level_start = 0;
    while level_start < arena.len() {
        let level_end = arena.len();
        for idx in level_start..level_end {
            let expandable = idx == 0 || arena[idx].distance <= reach;
            let within_len = length_cap.is_none_or(|cap| arena[idx].level < cap);
            if !(expandable && within_len) {
                continue;
            }
            for (gen_idx, gen) in group.generators().iter().enumerate() {
                let child = arena[idx].element.mul_unchecked(gen);
                if !visited.insert(child.canonical_key()) {
                    continue;
                }
                if arena.len() >= frontier_cap {
                    return Err(Error::FrontierCap {
                        cap: frontier_cap,
                        radius: rho,
                    });
                }
                let point = child.apply_unchecked(y);
                arena.push(BfsNode {
                    element: child,
                    distance: hyperbolic_distance(x, &point)?,
                    parent: idx,
                    gen_idx,
                    level: arena[idx].level + 1,
                });
            }
        }
        level_start = level_end;
    }
    Ok((arena, certificate.complete()))
}

fn word_of(arena: &[BfsNode], mut idx: usize) -> Vec<usize> {
    let mut word = Vec::with_capacity(arena[idx].level);
    while arena[idx].parent != usize::MAX {
        word.push(arena[idx].gen_idx);
        idx = arena[idx].parent;
    }
    word.reverse();
    word
}

/// Indices of in-ball nodes, sorted by `(distance, word)` and deduplicated
/// in point space (coincident orbit points keep the earliest word).
fn select_ball_nodes(arena: &[BfsNode], y: &Point, rho: f64) -> Result<Vec<(usize, Vec<usize>)>> {
    let mut hits: Vec<(usize, Vec<usize>)> = arena
        .iter()
        .enumerate()
        .filter(|(_, node)| node.distance <= rho)
        .map(|(idx, _)| (idx, word_of(arena, idx)))
        .collect();
    hits.sort_by(|(i, wi), (j, wj)| {
        arena[*i]
            .distance
            .total_cmp(&arena[*j].distance)
            .then_with(|| wi.cmp(wj))
    });
    let points: Vec<Point> = hits
        .iter()
        .map(|(idx, _)| arena[*idx].element.apply_unchecked(y))
        .collect();
    let mut keep = vec![true; hits.len()];
    for i in 0..hits.len() {
        if !keep[i] {
            continue;
        }
        for j in (i + 1)..hits.len() {
            if arena[hits[j].0].distance - arena[hits[i].0].distance > POINT_DEDUP_TOLERANCE {
                break;
            }
            if keep[j] && hyperbolic_distance(&points[i], &points[j])? < POINT_DEDUP_TOLERANCE {
                keep[j] = false;
            }
        }
    }
    Ok(hits
        .into_iter()
        .zip(keep)
        .filter_map(|(hit, k)| k.then_some(hit))
        .collect())
}

/// Enumerate the orbit points `γ·y` in the closed ball `B(x, ρ)` with the
/// default frontier cap.
pub fn enumerate_orbit(
    group: &GroupPresentation,
    x: &Point,
    y: &Point,
    rho: f64,
) -> Result<OrbitBall> {
    enumerate_orbit_with(group, x, y, rho, DEFAULT_FRONTIER_CAP)
}

/// Enumerate the orbit points `γ·y` in the closed ball `B(x, ρ)`, aborting
/// with [`Error::FrontierCap`] if the search needs more than `frontier_cap`
/// states.
pub fn enumerate_orbit_with(
    group: &GroupPresentation,
    x: &Point,
    y: &Point,
    rho: f64,
    frontier_cap: usize,
) -> Result<OrbitBall> {
    let (arena, complete) = bfs_ball(group, x, y, rho, frontier_cap)?;
    let points = select_ball_nodes(&arena, y, rho)?
        .into_iter()
        .map(|(idx, word)| OrbitPoint {
            point: arena[idx].element.apply_unchecked(y),
            distance: arena[idx].distance,
            word,
        })
        .collect();
    Ok(OrbitBall {
        basepoint_x: *x,
        basepoint_y: *y,
        radius: rho,
        points,
        complete,
    })
}

/// Enumerate the group elements whose orbit point lies in `B(x, ρ)`.
pub fn enumerate_orbit_elements(
    group: &GroupPresentation,
    x: &Point,
    y: &Point,
    rho: f64,
) -> Result<OrbitElements> {
    let (arena, complete) = bfs_ball(group, x, y, rho, DEFAULT_FRONTIER_CAP)?;
    let elements = select_ball_nodes(&arena, y, rho)?
        .into_iter()
        .map(|(idx, _)| arena[idx].element)
        .collect();
    Ok(OrbitElements { elements, complete })
}

/// The orbital counting function `N(x, y, ρ) = #{γ : d(x, γ·y) ≤ ρ}`.
pub fn orbital_count(group: &GroupPresentation, x: &Point, y: &Point, rho: f64) -> Result<usize> {
    Ok(enumerate_orbit(group, x, y, rho)?.points.len())
}

/// Unpruned reference enumeration: all products of up to `max_word_length`
/// generators (deduplicated as they are produced — identical matrices have
/// identical continuations, so discarding repeats loses no element), with
/// orbit points filtered to the ball. Sorted by distance, then coordinates.
///
/// The word budget `|generators|^max_word_length` must stay below `10⁷`.
pub fn orbital_oracle_points(
    group: &GroupPresentation,
    x: &Point,
    y: &Point,
    rho: f64,
    max_word_length: usize,
) -> Result<Vec<Point>> {
    check_query(group, x, y, rho)?;
    let n_gens = group.generators().len();
    if n_gens > 0 && (n_gens as f64).powi(max_word_length as i32) > ORACLE_BUDGET {
        return Err(Error::InvalidArgument(format!(
            "oracle budget exceeded: {n_gens}^{max_word_length} > {ORACLE_BUDGET:.0} words"
        )));
    }
    let identity = Isometry::identity(group.dimension())?;
    let mut visited: HashSet<[u64; 8]> = HashSet::new();
    visited.insert(identity.canonical_key());
    let mut all = vec![identity];
    let mut level = vec![identity];
    for _ in 0..max_word_length {
        let mut next = Vec::new();
        for e in &level {
            for gen in group.generators() {
                let child = e.mul_unchecked(gen);
                if visited.insert(child.canonical_key()) {
                    all.push(child);
                    next.push(child);
                }
            }
        }
        level = next;
    }
    let mut hits: Vec<(f64, Point)> = Vec::new();
    for e in &all {
        let p = e.apply_unchecked(y);
        let d = hyperbolic_distance(x, &p)?;
        if d <= rho {
            hits.push((d, p));
        }
    }
    hits.sort_by(|(da, pa), (db, pb)| {
        da.total_cmp(db).then_with(|| {
            let ka = (pa.horizontal().re, pa.horizontal().im, pa.height());
            let kb = (pb.horizontal().re, pb.horizontal().im, pb.height());
            ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    Ok(hits.into_iter().map(|(_, p)| p).collect())
}

/// Counting via the unpruned reference enumeration.
pub fn orbital_count_oracle(
    group: &GroupPresentation,
    x: &Point,
    y: &Point,
    rho: f64,
    max_word_length: usize,
) -> Result<usize> {
    Ok(orbital_oracle_points(group, x, y, rho, max_word_length)?.len())
}

/// Least-squares slope of `ln N` against `ρ` over the largest-`ρ` half of
/// the samples: an estimate of the exponential growth rate of the orbit.
///
/// Requires at least 3 samples, strictly increasing in `ρ`, all with
/// `N ≥ 1`.
pub fn critical_exponent_estimate(samples: &[(f64, usize)]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "exponent fit needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InsufficientData(
            "exponent fit needs strictly increasing radii".into(),
        ));
    }
    if samples.iter().any(|&(_, n)| n == 0) {
        return Err(Error::InsufficientData(
            "exponent fit needs N ≥ 1 at every radius".into(),
        ));
    }
    let tail = &samples[samples.len() / 2..];
    let n = tail.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(rho, count) in tail {
        sx += rho;
        sy += (count as f64).ln();
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(rho, count) in tail {
        let dx = rho - mx;
        sxx += dx * dx;
        sxy += dx * ((count as f64).ln() - my);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "exponent fit needs spread in the radii".into(),
        ));
    }
    Ok(sxy / sxx)
}

/// Monte Carlo estimate of `⟨O_ρ^x X, Y⟩ / 𝒱(ρ)`-type pairings: the mean of
/// `N(w, z, ρ) / 𝒱(ρ)` over centers `w ∈ B(x, δ)`, `z ∈ B(y, δ)` sampled
/// uniformly.
///
/// A single enumeration at radius `ρ + 2δ` provides a superset of every
/// per-sample candidate list (by the triangle inequality
/// `d(w, γ·z) ≤ ρ ⟹ d(x, γ·y) ≤ ρ + 2δ`), so each sample only needs
/// distance evaluations.
pub fn orbital_scalar_product(
    group: &GroupPresentation,
    x: &Point,
    y: &Point,
    delta: f64,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<ScalarProductEstimate> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "perturbation radius must be positive, got {delta}"
        )));
    }
    if rho <= 2.0 * delta {
        return Err(Error::InvalidArgument(format!(
            "need ρ > 2δ (got ρ = {rho}, δ = {delta})"
        )));
    }
    if samples < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 Monte Carlo samples".into(),
        ));
    }
    let superset = enumerate_orbit_elements(group, x, y, rho + 2.0 * delta)?;
    let ws = sample_ball(x, delta, mix(seed, 1), samples)?;
    let zs = sample_ball(y, delta, mix(seed, 2), samples)?;
    let volume = ball_volume(group.dimension(), rho)?;
    let mut values = Vec::with_capacity(samples);
    for (w, z) in ws.iter().zip(zs.iter()) {
        let mut count = 0usize;
        for e in &superset.elements {
            if hyperbolic_distance(w, &e.apply_unchecked(z))? <= rho {
                count += 1;
            }
        }
        values.push(count as f64 / volume);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n * (n - 1.0));
    Ok(ScalarProductEstimate {
        mean,
        std_error: var.sqrt(),
        samples,
        complete: superset.complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::bundled_group;
    use approx::assert_relative_eq;

    fn origin(dim: usize) -> Point {
        Point::basepoint(dim).unwrap()
    }

    #[test]
    fn symmetric_closure_adds_inverses_and_drops_duplicates() {
        let g = bundled_group("cyclic-one").unwrap();
        assert_eq!(g.generators().len(), 2);
        assert!(g.generators()[1].approx_eq(&g.generators()[0].inverse(), 1e-12));

        // Listing a generator together with its inverse must not duplicate.
        let a = g.generators()[0];
        let again = GroupPresentation::new("closure", 3, &[a, a.inverse(), a], 0.0, false).unwrap();
        assert_eq!(again.generators().len(), 2);
    }

    #[test]
    fn malformed_group_json_is_rejected() {
        assert!(GroupPresentation::from_json("{\"name\": \"x\"}").is_err());
        // Wrong dimension.
        let bad_dim = r#"{"name":"x","dimension":4,"generators":[]}"#;
        assert!(matches!(
            GroupPresentation::from_json(bad_dim),
            Err(Error::GroupFile(_))
        ));
        // Complex entries in the plane.
        let complex_plane = r#"{"name":"x","dimension":2,
            "generators":[[[[1.0,0.5],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]]]}"#;
        assert!(matches!(
            GroupPresentation::from_json(complex_plane),
            Err(Error::GroupFile(_))
        ));
        // Determinant far from one.
        let bad_det = r#"{"name":"x","dimension":3,
            "generators":[[[[2.0,0.0],[0.0,0.0]],[[0.0,0.0],[2.0,0.0]]]]}"#;
        assert!(GroupPresentation::from_json(bad_det).is_err());
    }

    #[test]
    fn trivial_group_orbit_is_a_single_point() {
        let g = bundled_group("trivial").unwrap();
        let o = origin(3);
        let ball = enumerate_orbit(&g, &o, &o, 5.0).unwrap();
        assert!(ball.complete);
        assert_eq!(ball.points.len(), 1);
        assert_eq!(ball.points[0].distance, 0.0);
        assert!(ball.points[0].word.is_empty());

        let far = Point::new(&[10.0, 0.0, 1.0]).unwrap();
        let empty = enumerate_orbit(&g, &far, &o, 1.0).unwrap();
        assert!(empty.points.is_empty() && empty.complete);
    }

    #[test]
    fn cyclic_orbit_counts_and_distances() {
        let g = bundled_group("cyclic-one").unwrap();
        let o = origin(3);
        let ball = enumerate_orbit(&g, &o, &o, 3.5).unwrap();
        assert!(ball.complete);
        // Powers a^k with |k| ≤ 3: distances 0, 1, 1, 2, 2, 3, 3.
        assert_eq!(ball.points.len(), 7);
        let dists: Vec<f64> = ball.points.iter().map(|p| p.distance).collect();
        for (got, want) in dists.iter().zip([0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
        // N(ρ) = 2⌊ρ⌋ + 1 on a grid of generic radii.
        for rho in [0.5, 1.5, 2.5, 4.5, 7.5, 12.3] {
            let n = orbital_count(&g, &o, &o, rho).unwrap();
            assert_eq!(n, 2 * (rho.floor() as usize) + 1, "rho = {rho}");
        }
    }

    #[test]
    fn bfs_matches_oracle_exactly_on_bundled_groups() {
        let cases = [
            ("trivial", 4.0, 3),
            ("cyclic-half", 3.3, 16),
            ("cyclic-one", 3.5, 6),
            ("cyclic-two", 5.3, 5),
            ("schottky-plane", 6.2, 5),
            ("schottky-space", 5.1, 4),
            ("parabolic", 4.3, 11),
        ];
        for (name, rho, len) in cases {
            let g = bundled_group(name).unwrap();
            let o = origin(g.dimension());
            let ball = enumerate_orbit(&g, &o, &o, rho).unwrap();
            let oracle = orbital_oracle_points(&g, &o, &o, rho, len).unwrap();
            assert_eq!(ball.points.len(), oracle.len(), "count mismatch for {name}");
            let key = |p: &Point| {
                let z = p.horizontal();
                [z.re.to_bits(), z.im.to_bits(), p.height().to_bits()]
            };
            let mut got: Vec<_> = ball.points.iter().map(|p| key(&p.point)).collect();
            let mut want: Vec<_> = oracle.iter().map(key).collect();
            got.sort_unstable();
            want.sort_unstable();
            assert_eq!(got, want, "point set mismatch for {name}");
        }
    }

    #[test]
    fn counting_is_symmetric_and_group_invariant() {
        for name in ["cyclic-one", "schottky-plane", "schottky-space"] {
            let g = bundled_group(name).unwrap();
            let dim = g.dimension();
            let x = origin(dim);
            let y = if dim == 2 {
                Point::new(&[0.4, 1.7]).unwrap()
            } else {
                Point::new(&[0.4, -0.2, 1.7]).unwrap()
            };
            for rho in [1.3, 3.1, 4.6] {
                let base = orbital_count(&g, &x, &y, rho).unwrap();
                let swapped = orbital_count(&g, &y, &x, rho).unwrap();
                assert_eq!(base, swapped, "{name} at rho = {rho}");
                // Translating both arguments by a word in the group fixes N.
                let gamma = g.generators()[0].mul_unchecked(&g.generators()[1]);
                let moved = orbital_count(
                    &g,
                    &gamma.apply(&x).unwrap(),
                    &gamma.apply(&y).unwrap(),
                    rho,
                )
                .unwrap();
                assert_eq!(base, moved, "{name} at rho = {rho}");
            }
        }
    }

    #[test]
    fn counts_are_monotone_in_radius_and_obey_packing_bound() {
        for name in [
            "cyclic-one",
            "schottky-plane",
            "schottky-space",
            "parabolic",
        ] {
            let g = bundled_group(name).unwrap();
            let o = origin(g.dimension());
            let mut prev = 0;
            for rho in [0.5, 1.5, 2.5, 3.5, 4.5, 5.5] {
                let n = orbital_count(&g, &o, &o, rho).unwrap();
                assert!(n >= prev, "{name}: N must grow with the radius");
                prev = n;
                // Balls of radius r around orbit points are disjoint for
                // 2r below the minimal displacement, and all fit inside
                // B(x, ρ + r): N ≤ V(ρ + r)/V(r).
                let r = 0.2;
                let cap = ball_volume(g.dimension(), rho + r).unwrap()
                    / ball_volume(g.dimension(), r).unwrap();
                assert!((n as f64) <= cap, "{name}: packing bound at rho = {rho}");
            }
        }
    }

    #[test]
    fn orbit_ball_invariants_hold() {
        for name in [
            "cyclic-half",
            "schottky-plane",
            "schottky-space",
            "parabolic",
        ] {
            let g = bundled_group(name).unwrap();
            let o = origin(g.dimension());
            let ball = enumerate_orbit(&g, &o, &o, 5.0).unwrap();
            for (i, p) in ball.points.iter().enumerate() {
                assert!(p.distance <= ball.radius + 1e-9);
                let direct = hyperbolic_distance(&o, &p.point).unwrap();
                assert!((direct - p.distance).abs() <= 1e-9);
                // Words reproduce the point.
                let mut e = Isometry::identity(g.dimension()).unwrap();
                for &gi in &p.word {
                    e = e.compose(&g.generators()[gi]).unwrap();
                }
                let rebuilt = e.apply(&o).unwrap();
                assert!(hyperbolic_distance(&rebuilt, &p.point).unwrap() <= 1e-9);
                for q in &ball.points[i + 1..] {
                    assert!(
                        hyperbolic_distance(&p.point, &q.point).unwrap() > POINT_DEDUP_TOLERANCE,
                        "{name}: coincident points listed"
                    );
                }
            }
            // Sorted by distance.
            assert!(ball
                .points
                .windows(2)
                .all(|w| w[0].distance <= w[1].distance));
        }
    }

    #[test]
    fn ping_pong_certificate_verifies_on_schottky_groups() {
        let plane = bundled_group("schottky-plane").unwrap();
        let data = ping_pong_data(plane.generators()).unwrap();
        assert_relative_eq!(data.l0, 9.0_f64.ln(), epsilon = 1e-12);

        let space = bundled_group("schottky-space").unwrap();
        let data = ping_pong_data(space.generators()).unwrap();
        assert!(data.l0 > -0.1_f64.ln());
        assert!(data.d_max < 5.0);

        // The certificate must reject a non-Schottky set (parabolic: c = 0).
        let para = bundled_group("parabolic").unwrap();
        assert!(ping_pong_data(para.generators()).is_none());
    }

    #[test]
    fn classification_marks_completeness_as_expected() {
        let o3 = origin(3);
        for (name, expect) in [
            ("trivial", true),
            ("cyclic-half", true),
            ("cyclic-one", true),
            ("cyclic-two", true),
            ("schottky-space", true),
            ("parabolic", false),
        ] {
            let g = bundled_group(name).unwrap();
            let ball = enumerate_orbit(&g, &o3, &o3, 2.0).unwrap();
            assert_eq!(ball.complete, expect, "group {name}");
        }
        let plane = bundled_group("schottky-plane").unwrap();
        let o2 = origin(2);
        assert!(enumerate_orbit(&plane, &o2, &o2, 2.0).unwrap().complete);
    }

    #[test]
    fn cyclic_completeness_holds_for_offset_basepoints() {
        // Certificate margins must cover targets reached through detours:
        // centers off the axis and distinct basepoints.
        let g = bundled_group("cyclic-one").unwrap();
        let x = Point::new(&[1.2, -0.3, 0.4]).unwrap();
        let y = Point::new(&[-0.5, 0.1, 2.5]).unwrap();
        for rho in [0.7, 2.2, 4.9] {
            let ball = enumerate_orbit(&g, &x, &y, rho).unwrap();
            assert!(ball.complete);
            let oracle = orbital_count_oracle(&g, &x, &y, rho, 14).unwrap();
            assert_eq!(ball.points.len(), oracle, "rho = {rho}");
        }
    }

    #[test]
    fn schottky_completeness_holds_for_offset_basepoints() {
        let g = bundled_group("schottky-space").unwrap();
        let x = Point::new(&[0.3, 0.4, 1.4]).unwrap();
        let y = Point::new(&[-0.2, 0.1, 0.8]).unwrap();
        for rho in [2.9, 4.7] {
            let ball = enumerate_orbit(&g, &x, &y, rho).unwrap();
            assert!(ball.complete);
            let oracle = orbital_count_oracle(&g, &x, &y, rho, 5).unwrap();
            assert_eq!(ball.points.len(), oracle, "rho = {rho}");
        }
    }

    #[test]
    fn frontier_cap_aborts_runaway_enumeration() {
        let g = bundled_group("schottky-plane").unwrap();
        let o = origin(2);
        let err = enumerate_orbit_with(&g, &o, &o, 12.0, 50).unwrap_err();
        assert!(matches!(err, Error::FrontierCap { cap: 50, .. }));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = bundled_group("cyclic-one").unwrap();
        let o2 = origin(2);
        assert!(matches!(
            enumerate_orbit(&g, &o2, &o2, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn exponent_estimate_recovers_slopes() {
        // Synthetic N(ρ) = e^{0.75 ρ} has slope 0.75.
        let samples: Vec<(f64, usize)> = (1..=8)
            .map(|k| {
                let rho = k as f64;
                (rho, (0.75 * rho).exp().round() as usize)
            })
            .collect();
        let slope = critical_exponent_estimate(&samples).unwrap();
        assert!((slope - 0.75).abs() < 0.05, "slope = {slope}");

        // Cyclic groups grow linearly: exponent near zero.
        let g = bundled_group("cyclic-one").unwrap();
        let o = origin(3);
        let counts: Vec<(f64, usize)> = [4.5, 6.5, 8.5, 10.5, 12.5]
            .iter()
            .map(|&rho| (rho, orbital_count(&g, &o, &o, rho).unwrap()))
            .collect();
        let slope = critical_exponent_estimate(&counts).unwrap();
        assert!(slope.abs() < 0.2, "slope = {slope}");

        assert!(matches!(
            critical_exponent_estimate(&[(1.0, 3), (2.0, 5)]),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            critical_exponent_estimate(&[(1.0, 3), (2.0, 0), (3.0, 5)]),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            critical_exponent_estimate(&[(1.0, 3), (1.0, 4), (3.0, 5)]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn trivial_scalar_product_matches_inverse_volume() {
        // For the trivial group, N(w, z, ρ) = 1 whenever d(w, z) ≤ ρ, which
        // holds for every sampled pair since 2δ < ρ. The pairing is 1/𝒱(ρ).
        let g = bundled_group("trivial").unwrap();
        let o = origin(3);
        let est = orbital_scalar_product(&g, &o, &o, 0.3, 2.0, 2_000, 7).unwrap();
        assert!(est.complete);
        let expected = 1.0 / ball_volume(3, 2.0).unwrap();
        assert_relative_eq!(est.mean, expected, epsilon = 1e-12);
        assert!(est.std_error < 1e-12);
    }

    #[test]
    fn scalar_product_tracks_counts_for_cyclic_groups() {
        let g = bundled_group("cyclic-one").unwrap();
        let o = origin(3);
        let delta = 0.05;
        let rho = 3.5;
        let est = orbital_scalar_product(&g, &o, &o, delta, rho, 3_000, 11).unwrap();
        assert!(est.complete);
        // Counts at perturbed centers stay within the sandwich
        // N(ρ − 2δ) ≤ N(w, z, ρ) ≤ N(ρ + 2δ); here both bounds equal 7.
        let expected = 7.0 / ball_volume(3, rho).unwrap();
        assert_relative_eq!(est.mean, expected, epsilon = 1e-12);
    }

    #[test]
    fn scalar_product_validates_arguments() {
        let g = bundled_group("trivial").unwrap();
        let o = origin(3);
        assert!(orbital_scalar_product(&g, &o, &o, 0.0, 1.0, 10, 1).is_err());
        assert!(orbital_scalar_product(&g, &o, &o, 0.6, 1.0, 10, 1).is_err());
        assert!(orbital_scalar_product(&g, &o, &o, 0.1, 1.0, 1, 1).is_err());
    }
}

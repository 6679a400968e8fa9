//! Continuation of the zero set inside a box, box counting and the
//! interior-emptiness test.

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use super::{pointwise_norm, section_jets, seed_matrix, ZeroDivisorError, DEFAULT_SEED, NONTRIVIAL_TOL, V4, ZERO_TOL};
use crate::forms::{anti_invariance_residual, closedness_residual, AlmostComplexStructure, Domain, Sampling, TwoForm, VALIDATION_TOL};
use crate::linalg::Mat4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Points per axis of the seed scan (endpoints included).
    pub resolution: usize,
    /// Box sizes `2^-k * size` for `k` in `ladder.0..=ladder.1`.
    pub ladder: (i32, i32),
    pub zero_tol: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Largest turning angle between consecutive steps of a segment.
    pub max_angle_degrees: f64,
    pub max_points: usize,
    pub seed: [f64; 6],
    pub validation: Sampling,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            resolution: 9,
            ladder: (3, 7),
            zero_tol: ZERO_TOL,
            newton_tol: 1e-12,
            max_newton: 25,
            max_angle_degrees: 30.0,
            max_points: 1_000_000,
            seed: DEFAULT_SEED,
            validation: Sampling { grid: 4, n_random: 64, seed: 0 },
        }
    }
}

impl TraceOptions {
    pub fn epsilons(&self, domain: &Domain) -> Vec<f64> {
        (self.ladder.0..=self.ladder.1).map(|k| domain.size() * 2f64.powi(-k)).collect()
    }

    /// Continuation step: a quarter of the smallest box size.
    pub fn step(&self, domain: &Domain) -> f64 {
        0.25 * domain.size() * 2f64.powi(-self.ladder.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroPoint {
    pub x: V4,
    pub abs_alpha: f64,
    pub segment: usize,
    /// Orthonormal basis of the kernel of `D(f, g)`; zero at singular points.
    pub tangent: [V4; 2],
    pub singular: bool,
}

/// A chain of continuation steps taken in the same transported direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub points: Vec<usize>,
    /// Set when the chain ended on a failed or over-turning step rather than
    /// at the box boundary or an already sampled point.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxCount {
    pub epsilon: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSetSample {
    pub domain: Domain,
    pub points: Vec<ZeroPoint>,
    pub segments: Vec<Segment>,
    pub box_counts: Vec<BoxCount>,
    pub step: f64,
    /// Number of truncated segments.
    pub flagged: usize,
    /// The point budget ran out before continuation finished.
    pub capped: bool,
}

impl ZeroSetSample {
    /// A sample made of given points, with box counts on the ladder
    /// `2^-k * size`, `k = 3..=7`.
    pub fn from_points(domain: Domain, points: &[V4]) -> Self {
        let opts = TraceOptions::default();
        let eps = opts.epsilons(&domain);
        ZeroSetSample {
            box_counts: box_counts(points, &domain, &eps),
            points: points.iter().map(|&x| ZeroPoint { x, abs_alpha: 0.0, segment: 0, tangent: [[0.0; 4]; 2], singular: false }).collect(),
            segments: Vec::new(),
            step: opts.step(&domain),
            flagged: 0,
            capped: false,
            domain,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn singular_points(&self) -> impl Iterator<Item = &ZeroPoint> {
        self.points.iter().filter(|p| p.singular)
    }
}

/// Fraction of `epsilon` by which box grids are shifted below the lower
/// corner, so that coordinate planes of the box do not fall on box faces.
const GRID_OFFSET: f64 = 0.381966;

/// Number of boxes of side `epsilon` (on a grid anchored near the lower
/// corner of `domain`) that contain a point, for each `epsilon`.
pub fn box_counts(points: &[V4], domain: &Domain, epsilons: &[f64]) -> Vec<BoxCount> {
    epsilons
        .iter()
        .map(|&eps| {
            let mut cells: Vec<[i64; 4]> =
                points.iter().map(|x| std::array::from_fn(|k| ((x[k] - domain.lo[k] + GRID_OFFSET * eps) / eps).floor() as i64)).collect();
            cells.sort_unstable();
            cells.dedup();
            BoxCount { epsilon: eps, count: cells.len() }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDimension {
    /// Least-squares slope of `log N(eps)` against `log(1 / eps)`.
    pub slope: f64,
    /// `sup N(eps) eps^2`.
    pub measure_proxy: f64,
    pub levels: usize,
}

pub fn box_dimension(sample: &ZeroSetSample) -> Result<BoxDimension, ZeroDivisorError> {
    let used: Vec<&BoxCount> = sample.box_counts.iter().filter(|b| b.count > 0).collect();
    if used.len() < 3 {
        return Err(ZeroDivisorError::DegenerateLadder { levels: used.len() });
    }
    let xs: Vec<f64> = used.iter().map(|b| -b.epsilon.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|b| (b.count as f64).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let measure_proxy = used.iter().map(|b| b.count as f64 * b.epsilon.powi(2)).fold(0.0, f64::max);
    Ok(BoxDimension { slope: sxy / sxx, measure_proxy, levels: used.len() })
}

/// `(f, g)` with gradient rows.
struct Local {
    value: [f64; 2],
    grad: [V4; 2],
}

struct Section<'a> {
    alpha: &'a TwoForm,
    j: &'a AlmostComplexStructure,
    seed: Mat4,
}

impl Section<'_> {
    fn at(&self, x: &V4) -> Local {
        let (f, g, _) = section_jets(self.alpha, self.j, &self.seed, x);
        Local { value: [f.v, g.v], grad: [f.d, g.d] }
    }
}

fn dot(a: &V4, b: &V4) -> f64 {
    (0..4).map(|k| a[k] * b[k]).sum()
}

fn norm(a: &V4) -> f64 {
    dot(a, a).sqrt()
}

fn combo(a: f64, x: &V4, b: f64, y: &V4) -> V4 {
    std::array::from_fn(|k| a * x[k] + b * y[k])
}

/// Singular values below this mark a rank-deficient Jacobian.
const RANK_TOL: f64 = 1e-8;

/// Orthonormal basis of the row space of the 2x4 Jacobian.
fn row_basis(g: &[V4; 2]) -> Vec<V4> {
    let mut out: Vec<V4> = Vec::new();
    let mut rows = [g[0], g[1]];
    rows.sort_by(|a, b| norm(b).total_cmp(&norm(a)));
    for r in rows {
        let mut v = r;
        for b in &out {
            v = combo(1.0, &v, -dot(&v, b), b);
        }
        let n = norm(&v);
        if n > RANK_TOL {
            out.push(v.map(|c| c / n));
        }
    }
    out
}

fn project_out(v: &V4, basis: &[V4]) -> V4 {
    basis.iter().fold(*v, |acc, b| combo(1.0, &acc, -dot(&acc, b), b))
}

/// Orthonormal kernel basis, following `prefer` when given.
fn kernel_basis(rows: &[V4], prefer: Option<&[V4; 2]>) -> Option<[V4; 2]> {
    if rows.len() != 2 {
        return None;
    }
    let mut candidates: Vec<V4> = match prefer {
        Some(p) => p.to_vec(),
        None => Vec::new(),
    };
    let mut units: Vec<V4> = (0..4).map(|k| std::array::from_fn(|m| if m == k { 1.0 } else { 0.0 })).collect();
    units.sort_by(|a, b| norm(&project_out(b, rows)).total_cmp(&norm(&project_out(a, rows))));
    candidates.extend(units);
    let mut out: Vec<V4> = Vec::new();
    for c in candidates {
        let mut v = project_out(&c, rows);
        for b in &out {
            v = combo(1.0, &v, -dot(&v, b), b);
        }
        let n = norm(&v);
        if n > 1e-3 {
            out.push(v.map(|x| x / n));
            if out.len() == 2 {
                return Some([out[0], out[1]]);
            }
        }
    }
    None
}

/// Minimum-norm Newton iteration on `(f, g) = 0`, rejecting iterates that
/// move farther than `max_move` from the start.
fn newton(section: &Section, x0: &V4, opts: &TraceOptions, max_move: f64) -> Option<(V4, Local)> {
    let mut x = *x0;
    for _ in 0..=opts.max_newton {
        let l = section.at(&x);
        let r = l.value[0].hypot(l.value[1]);
        if r <= opts.newton_tol {
            return Some((x, l));
        }
        // Step -G^T (G G^T)^+ F with the 2x2 Gram matrix inverted on its
        // numerically nonzero eigenspace.
        let [a, b] = l.grad;
        let (p, q, s) = (dot(&a, &a), dot(&a, &b), dot(&b, &b));
        let tr = 0.5 * (p + s);
        let disc = (0.25 * (p - s).powi(2) + q * q).sqrt();
        let (l1, l2) = (tr + disc, tr - disc);
        if l1 <= RANK_TOL * RANK_TOL {
            return None;
        }
        let e1 = if q.abs() > 0.0 || p >= s { normalize2([l1 - s, q], [1.0, 0.0]) } else { [0.0, 1.0] };
        let e2 = [-e1[1], e1[0]];
        let apply = |e: [f64; 2], lam: f64| {
            let c = (e[0] * l.value[0] + e[1] * l.value[1]) / lam;
            [c * e[0], c * e[1]]
        };
        let mut y = apply(e1, l1);
        if l2 > RANK_TOL * RANK_TOL * l1.max(1.0) {
            let y2 = apply(e2, l2);
            y = [y[0] + y2[0], y[1] + y2[1]];
        }
        x = std::array::from_fn(|k| x[k] - (a[k] * y[0] + b[k] * y[1]));
        if norm(&combo(1.0, &x, -1.0, x0)) > max_move || x.iter().any(|v| !v.is_finite()) {
            return None;
        }
    }
    None
}

fn normalize2(v: [f64; 2], fallback: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    if n > 0.0 {
        [v[0] / n, v[1] / n]
    } else {
        fallback
    }
}

/// Samples closer than this many steps to an existing one are dropped; above
/// `sqrt(2) / 2` so that no second lattice can interleave with a first one.
const DUPLICATE_RADIUS: f64 = 0.75;

/// Point lookup on a uniform grid of cells of side `cell`.
struct Occupancy {
    cell: f64,
    map: HashMap<[i64; 4], Vec<u32>>,
}

impl Occupancy {
    fn key(&self, x: &V4) -> [i64; 4] {
        std::array::from_fn(|k| (x[k] / self.cell).floor() as i64)
    }

    fn insert(&mut self, x: &V4, id: usize) {
        let k = self.key(x);
        self.map.entry(k).or_default().push(id as u32);
    }

    /// Whether a stored point lies within `r` of `x`.
    fn near(&self, x: &V4, r: f64, points: &[ZeroPoint]) -> bool {
        let lo: [i64; 4] = std::array::from_fn(|k| ((x[k] - r) / self.cell).floor() as i64);
        let hi: [i64; 4] = std::array::from_fn(|k| ((x[k] + r) / self.cell).floor() as i64);
        for a in lo[0]..=hi[0] {
            for b in lo[1]..=hi[1] {
                for c in lo[2]..=hi[2] {
                    for d in lo[3]..=hi[3] {
                        if let Some(ids) = self.map.get(&[a, b, c, d]) {
                            if ids.iter().any(|&i| norm(&combo(1.0, &points[i as usize].x, -1.0, x)) < r) {
                                return true;
                            }
                        }
                    }
                }
            }
        }
        false
    }
}

/// Per-point bookkeeping of the flood fill.
#[derive(Clone, Copy)]
struct Origin {
    parent: Option<usize>,
    /// Predictor direction `+t1, -t1, +t2, -t2`, or none for seeds and
    /// branch points.
    label: Option<u8>,
}

struct Tracer<'a> {
    section: Section<'a>,
    domain: Domain,
    opts: TraceOptions,
    step: f64,
    points: Vec<ZeroPoint>,
    origins: Vec<Origin>,
    segments: Vec<Segment>,
    occupancy: Occupancy,
    queue: VecDeque<usize>,
    flagged: usize,
    capped: bool,
}

impl Tracer<'_> {
    /// Store a polished zero; returns its index.
    fn add(&mut self, x: V4, local: &Local, origin: Origin, prefer: Option<&[V4; 2]>) -> usize {
        let rows = row_basis(&local.grad);
        let tangent = kernel_basis(&rows, prefer);
        let id = self.points.len();
        let segment = self.segment_for(id, &x, origin);
        self.points.push(ZeroPoint {
            x,
            abs_alpha: pointwise_norm(self.section.alpha, &x),
            segment,
            tangent: tangent.unwrap_or([[0.0; 4]; 2]),
            singular: tangent.is_none(),
        });
        self.origins.push(origin);
        self.occupancy.insert(&x, id);
        self.queue.push_back(id);
        if self.points.len() >= self.opts.max_points {
            self.capped = true;
        }
        id
    }

    fn segment_for(&mut self, id: usize, x: &V4, origin: Origin) -> usize {
        if let (Some(p), Some(label)) = (origin.parent, origin.label) {
            let po = self.origins[p];
            let seg = self.points[p].segment;
            let chain_end = self.segments[seg].points.last() == Some(&p);
            if po.label == Some(label) && chain_end {
                let gp = po.parent.expect("labelled points have parents");
                let prev = combo(1.0, &self.points[p].x, -1.0, &self.points[gp].x);
                let next = combo(1.0, x, -1.0, &self.points[p].x);
                let cos = dot(&prev, &next) / (norm(&prev) * norm(&next));
                if cos >= self.opts.max_angle_degrees.to_radians().cos() {
                    self.segments[seg].points.push(id);
                    return seg;
                }
                self.truncate(seg);
            }
        }
        self.segments.push(Segment { points: vec![id], truncated: false });
        self.segments.len() - 1
    }

    fn truncate(&mut self, seg: usize) {
        if !self.segments[seg].truncated {
            self.segments[seg].truncated = true;
            self.flagged += 1;
        }
    }

    /// Predict from `from` along `dir`, correct, and store the result unless
    /// it leaves the box or duplicates a sampled point.
    fn try_step(&mut self, from: usize, dir: &V4, label: Option<u8>) {
        let p = self.points[from];
        let y = combo(1.0, &p.x, self.step, dir);
        if !self.domain.contains(&y) || self.occupancy.near(&y, DUPLICATE_RADIUS * self.step, &self.points) {
            return;
        }
        let chain_continues = label.is_some() && self.origins[from].label == label;
        match newton(&self.section, &y, &self.opts, self.step) {
            Some((z, local)) if self.domain.contains(&z) && pointwise_norm(self.section.alpha, &z) <= self.opts.zero_tol => {
                if !self.occupancy.near(&z, DUPLICATE_RADIUS * self.step, &self.points) {
                    let prefer = (!p.singular).then_some(p.tangent);
                    self.add(z, &local, Origin { parent: Some(from), label }, prefer.as_ref());
                }
            }
            Some((z, _)) if !self.domain.contains(&z) => {}
            _ => {
                if chain_continues {
                    let seg = p.segment;
                    self.truncate(seg);
                }
            }
        }
    }

    fn flood(&mut self) {
        while let Some(id) = self.queue.pop_front() {
            if self.capped {
                return;
            }
            let p = self.points[id];
            if p.singular {
                for dir in circle_directions() {
                    self.try_step(id, &dir, None);
                }
            } else {
                let [t1, t2] = p.tangent;
                let dirs = [t1, t1.map(|v| -v), t2, t2.map(|v| -v)];
                for (k, d) in dirs.iter().enumerate() {
                    self.try_step(id, d, Some(k as u8));
                }
            }
        }
    }
}

/// Eight directions on the unit circle of each coordinate 2-plane.
fn circle_directions() -> Vec<V4> {
    let mut out = Vec::with_capacity(48);
    for a in 0..4 {
        for b in a + 1..4 {
            for k in 0..8 {
                let t = std::f64::consts::TAU * k as f64 / 8.0;
                let mut v = [0.0; 4];
                v[a] = t.cos();
                v[b] = t.sin();
                out.push(v);
            }
        }
    }
    out
}

/// Sample the zero set of `alpha` in `domain`: grid-scan seeds, Newton
/// polish on the frame coefficients `(f, g)`, then predictor-corrector
/// continuation along the kernel of `D(f, g)` with step `eps_min / 4`.
pub fn trace_zero_set(alpha: &TwoForm, j: &AlmostComplexStructure, domain: &Domain, opts: &TraceOptions) -> Result<ZeroSetSample, ZeroDivisorError> {
    let sample_points = opts.validation.points(domain);
    let scale = sample_points.iter().map(|x| pointwise_norm(alpha, x)).fold(1.0, f64::max);
    let probe = TwoForm::new(alpha.coeffs(), domain.clone());
    let closed = closedness_residual(&probe, &opts.validation);
    if !(closed <= VALIDATION_TOL * scale) {
        return Err(ZeroDivisorError::NotClosed { residual: closed });
    }
    let anti = anti_invariance_residual(&probe, j, &opts.validation).0;
    if !(anti <= VALIDATION_TOL * scale) {
        return Err(ZeroDivisorError::NotAntiInvariant { residual: anti });
    }
    let j_box = AlmostComplexStructure::new(j.entries(), domain.clone());
    j_box.validate(&opts.validation).map_err(ZeroDivisorError::Forms)?;

    let step = opts.step(domain);
    let mut tracer = Tracer {
        section: Section { alpha, j, seed: seed_matrix(&opts.seed) },
        domain: domain.clone(),
        opts: *opts,
        step,
        points: Vec::new(),
        origins: Vec::new(),
        segments: Vec::new(),
        occupancy: Occupancy { cell: step, map: HashMap::new() },
        queue: VecDeque::new(),
        flagged: 0,
        capped: false,
    };
    let spacing = domain.size() / (opts.resolution.max(2) - 1) as f64;
    for x in domain.grid_points(opts.resolution) {
        if tracer.capped {
            break;
        }
        let l = tracer.section.at(&x);
        let slope = norm(&l.grad[0]).hypot(norm(&l.grad[1]));
        if l.value[0].hypot(l.value[1]) > slope * spacing {
            continue;
        }
        if let Some((z, local)) = newton(&tracer.section, &x, opts, 2.0 * spacing) {
            let good = domain.contains(&z) && pointwise_norm(alpha, &z) <= opts.zero_tol && !tracer.occupancy.near(&z, DUPLICATE_RADIUS * step, &tracer.points);
            if good {
                tracer.add(z, &local, Origin { parent: None, label: None }, None);
                tracer.flood();
            }
        }
    }
    let xs: Vec<V4> = tracer.points.iter().map(|p| p.x).collect();
    Ok(ZeroSetSample {
        box_counts: box_counts(&xs, domain, &opts.epsilons(domain)),
        domain: domain.clone(),
        points: tracer.points,
        segments: tracer.segments,
        step,
        flagged: tracer.flagged,
        capped: tracer.capped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmptinessReport {
    /// No cell has `|alpha| <= 1e-7` at all corners and the centre.
    pub empty: bool,
    pub offending: Vec<[usize; 4]>,
    pub max_abs: f64,
    pub cells: usize,
}

/// Look for a grid cell of `domain` (`grid` cells per axis) on which `alpha`
/// vanishes at all 16 corners and the centre.
pub fn interior_emptiness_check(alpha: &TwoForm, domain: &Domain, grid: usize) -> Result<EmptinessReport, ZeroDivisorError> {
    let n = grid.max(1);
    let h: [f64; 4] = std::array::from_fn(|k| (domain.hi[k] - domain.lo[k]) / n as f64);
    let m = n + 1;
    let corner = |i: [usize; 4]| -> V4 { std::array::from_fn(|k| domain.lo[k] + i[k] as f64 * h[k]) };
    let mut values = vec![0.0; m.pow(4)];
    let mut max_abs: f64 = 0.0;
    let index = |i: [usize; 4]| ((i[0] * m + i[1]) * m + i[2]) * m + i[3];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let v = pointwise_norm(alpha, &corner([a, b, c, d]));
                    max_abs = max_abs.max(v);
                    values[index([a, b, c, d])] = v;
                }
            }
        }
    }
    let mut offending = Vec::new();
    let mut centre_max: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let i = [a, b, c, d];
                    let centre: V4 = std::array::from_fn(|k| domain.lo[k] + (i[k] as f64 + 0.5) * h[k]);
                    let vc = pointwise_norm(alpha, &centre);
                    centre_max = centre_max.max(vc);
                    let corners_zero = (0..16).all(|mask| {
                        let ci: [usize; 4] = std::array::from_fn(|k| i[k] + ((mask >> k) & 1));
                        values[index(ci)] <= ZERO_TOL
                    });
                    if corners_zero && vc <= ZERO_TOL {
                        offending.push(i);
                    }
                }
            }
        }
    }
    max_abs = max_abs.max(centre_max);
    if !(max_abs > NONTRIVIAL_TOL) {
        return Err(ZeroDivisorError::Trivial { max: max_abs });
    }
    Ok(EmptinessReport { empty: offending.is_empty(), offending, max_abs, cells: n.pow(4) })
}

/// Columns `x1, x2, x3, x4, abs_alpha, segment`.
pub fn write_points_csv<W: Write>(sample: &ZeroSetSample, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x1", "x2", "x3", "x4", "abs_alpha", "segment"])?;
    for p in &sample.points {
        w.write_record([
            format!("{:.12e}", p.x[0]),
            format!("{:.12e}", p.x[1]),
            format!("{:.12e}", p.x[2]),
            format!("{:.12e}", p.x[3]),
            format!("{:.3e}", p.abs_alpha),
            p.segment.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `epsilon, count`.
pub fn write_box_counts_csv<W: Write>(sample: &ZeroSetSample, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epsilon", "count"])?;
    for b in &sample.box_counts {
        w.write_record([format!("{:.12e}", b.epsilon), b.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::FieldExpr;
    use crate::fixtures::re_holo;

    fn quick() -> TraceOptions {
        TraceOptions { ladder: (2, 5), ..TraceOptions::default() }
    }

    fn j0() -> AlmostComplexStructure {
        AlmostComplexStructure::standard(Domain::cube(1.0))
    }

    #[test]
    fn coordinate_plane_has_dimension_two() {
        let d = Domain::cube(1.0);
        let s = trace_zero_set(&re_holo("w0", d.clone()), &j0(), &d, &quick()).unwrap();
        assert!(!s.is_empty());
        assert!(!s.capped);
        assert_eq!(s.flagged, 0);
        assert!(s.points.iter().all(|p| p.abs_alpha <= 1e-7 && p.x[0].abs() < 1e-9 && p.x[1].abs() < 1e-9));
        let dim = box_dimension(&s).unwrap();
        assert!((1.8..=2.2).contains(&dim.slope), "{dim:?}");
        // Every box of the finest level on the plane is hit.
        let last = s.box_counts.last().unwrap();
        let per_axis = (2.0 / last.epsilon).round() as usize + 1;
        assert_eq!(last.count, per_axis * per_axis);
    }

    #[test]
    fn product_gives_both_sheets() {
        let d = Domain::cube(1.0);
        let s = trace_zero_set(&re_holo("w0*w1", d.clone()), &j0(), &d, &quick()).unwrap();
        let on = |p: &ZeroPoint, a: usize| p.x[a].abs() < 1e-9 && p.x[a + 1].abs() < 1e-9;
        let far = |p: &ZeroPoint, a: usize| p.x[a].hypot(p.x[a + 1]) > 0.5;
        assert!(s.points.iter().any(|p| on(p, 0) && far(p, 2)));
        assert!(s.points.iter().any(|p| on(p, 2) && far(p, 0)));
        assert!(s.points.iter().all(|p| on(p, 0) || on(p, 2)));
        let dim = box_dimension(&s).unwrap();
        assert!((1.8..=2.2).contains(&dim.slope), "{dim:?}");
    }

    #[test]
    fn constant_form_has_empty_zero_set() {
        let d = Domain::cube(1.0);
        let s = trace_zero_set(&TwoForm::phi0(d.clone()), &j0(), &d, &quick()).unwrap();
        assert!(s.is_empty());
        assert!(matches!(box_dimension(&s), Err(ZeroDivisorError::DegenerateLadder { levels: 0 })));
    }

    #[test]
    fn non_closed_form_is_rejected() {
        let d = Domain::cube(1.0);
        let z = FieldExpr::zero();
        let alpha = TwoForm::new([z.clone(), FieldExpr::var(3), z.clone(), z.clone(), -FieldExpr::var(2), z], d.clone());
        assert!(matches!(trace_zero_set(&alpha, &j0(), &d, &quick()), Err(ZeroDivisorError::NotClosed { .. })));
    }

    #[test]
    fn point_and_line_dimensions() {
        let d = Domain::cube(1.0);
        let pts = vec![[0.1, 0.2, -0.3, 0.4], [-0.5, 0.5, 0.5, -0.5], [0.9, -0.9, 0.0, 0.3]];
        let dim = box_dimension(&ZeroSetSample::from_points(d.clone(), &pts)).unwrap();
        assert!((-0.2..=0.2).contains(&dim.slope), "{dim:?}");
        let line: Vec<V4> = (0..=4000).map(|k| {
            let t = -1.0 + 2.0 * k as f64 / 4000.0;
            [t, 0.3 * t, 0.1, -0.2]
        }).collect();
        let dim = box_dimension(&ZeroSetSample::from_points(d, &line)).unwrap();
        assert!((0.8..=1.2).contains(&dim.slope), "{dim:?}");
    }

    #[test]
    fn interior_emptiness() {
        let d = Domain::cube(1.0);
        assert!(interior_emptiness_check(&re_holo("w0", d.clone()), &d, 6).unwrap().empty);
        assert!(interior_emptiness_check(&TwoForm::phi0(d.clone()), &d, 6).unwrap().empty);
        assert!(matches!(interior_emptiness_check(&TwoForm::zero(d.clone()), &d, 6), Err(ZeroDivisorError::Trivial { .. })));
        // Flat to within the zero tolerance on the slab |x1| <= 1/4.
        let flat = TwoForm::new(std::array::from_fn(|k| if k == 0 { 1e-3 * FieldExpr::var(0).powi(8) } else { FieldExpr::zero() }), d.clone());
        let r = interior_emptiness_check(&flat, &d, 8).unwrap();
        assert!(!r.empty);
        assert_eq!(r.offending.len(), 2 * 8 * 8 * 8);
        assert!(r.offending.iter().all(|c| c[0] == 3 || c[0] == 4));
    }

    #[test]
    fn csv_output() {
        let d = Domain::cube(1.0);
        let s = ZeroSetSample::from_points(d, &[[0.0; 4]]);
        let mut buf = Vec::new();
        write_points_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x1,x2,x3,x4,abs_alpha,segment\n"));
        let mut buf = Vec::new();
        write_box_counts_csv(&s, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 6);
    }
}

//! Planar Boolean model with disc grains.
//!
//! Germs form a Poisson process, radii follow Beta(1, α) on `[0, 0.1]`.
//! The model is observed through a rectangular window: covered area
//! fraction (pixel grid), perimeter per unit area (exact exposed arcs) and
//! counts of lower tangent points in random directions.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution as _, Poisson};

use crate::averaging::EstimatorVector;
use crate::distributions::{Distribution, BETA_SCALED_MAX};
use crate::error::{Error, Result};
use crate::group::GroupStructure;
use crate::mse::{EstimatorBank, ModelSimulator};
use crate::rng::RngStream;

/// Largest grain radius; germs are simulated on the window dilated by it.
pub const R_MAX: f64 = BETA_SCALED_MAX;
pub const DEFAULT_RESOLUTION: usize = 1024;
pub const DEFAULT_DIRECTIONS: usize = 100;

/// Axis-aligned observation window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Window {
    pub fn unit() -> Self {
        Self { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 }
    }

    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("window must have positive finite extent".into()));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn dilate(&self, r: f64) -> Self {
        Self { x0: self.x0 - r, y0: self.y0 - r, x1: self.x1 + r, y1: self.y1 + r }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }
}

impl Default for Window {
    fn default() -> Self {
        Self::unit()
    }
}

/// A realization of disc grains with its observation window.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscSet {
    pub centers: Vec<[f64; 2]>,
    pub radii: Vec<f64>,
    pub window: Window,
}

impl DiscSet {
    pub fn new(centers: Vec<[f64; 2]>, radii: Vec<f64>, window: Window) -> Result<Self> {
        if centers.len() != radii.len() {
            return Err(Error::DimensionMismatch { expected: centers.len(), got: radii.len() });
        }
        if radii.iter().any(|&r| !(r > 0.0 && r <= R_MAX)) {
            return Err(Error::InvalidArgument(format!("radii must lie in (0, {R_MAX}]")));
        }
        let outer = window.dilate(R_MAX);
        if centers.iter().any(|c| !outer.contains(c[0], c[1])) {
            return Err(Error::InvalidArgument("center outside the dilated window".into()));
        }
        Ok(Self { centers, radii, window })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Writes one `cx cy r` row per disc.
    pub fn write_xyr<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (c, r) in self.centers.iter().zip(&self.radii) {
            writeln!(out, "{} {} {}", c[0], c[1], r)?;
        }
        Ok(())
    }

    fn coincident(&self, i: usize, j: usize) -> bool {
        let tol = 1e-12;
        (self.centers[i][0] - self.centers[j][0]).abs() <= tol
            && (self.centers[i][1] - self.centers[j][1]).abs() <= tol
            && (self.radii[i] - self.radii[j]).abs() <= tol
    }

    /// Whether `(x, y)` is hidden from disc `i` by a neighbour: strictly
    /// inside it, or on a coincident circle of lower index.
    fn covered_by(&self, i: usize, neighbours: &[usize], x: f64, y: f64) -> bool {
        neighbours.iter().any(|&j| {
            if self.coincident(i, j) {
                return j < i;
            }
            let dx = x - self.centers[j][0];
            let dy = y - self.centers[j][1];
            dx * dx + dy * dy < self.radii[j] * self.radii[j]
        })
    }

    /// Neighbour lists of every disc.
    pub fn neighbour_lists(&self) -> Vec<Vec<usize>> {
        (0..self.len()).map(|i| self.neighbours(i)).collect()
    }

    /// Indices of discs whose interiors meet disc `i`.
    fn neighbours(&self, i: usize) -> Vec<usize> {
        let [xi, yi] = self.centers[i];
        let ri = self.radii[i];
        (0..self.len())
            .filter(|&j| {
                if j == i {
                    return false;
                }
                let dx = self.centers[j][0] - xi;
                let dy = self.centers[j][1] - yi;
                let reach = ri + self.radii[j];
                dx * dx + dy * dy < reach * reach
            })
            .collect()
    }
}

/// Germ count `Poisson(ρ |W ⊕ r_max|)`, uniform centers on the dilated
/// window, Beta(1, α) radii on `[0, 0.1]`.
pub fn simulate_boolean<R: Rng + ?Sized>(rho: f64, alpha: f64, window: Window, rng: &mut R) -> Result<DiscSet> {
    if !(rho > 0.0 && rho.is_finite()) || !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("need rho > 0 and alpha > 0, got ({rho}, {alpha})")));
    }
    let outer = window.dilate(R_MAX);
    let count =
        Poisson::new(rho * outer.area()).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(rng) as usize;
    let radius = Distribution::BetaScaled { alpha };
    let mut centers = Vec::with_capacity(count);
    let mut radii = Vec::with_capacity(count);
    for _ in 0..count {
        let x = outer.x0 + outer.width() * rng.random::<f64>();
        let y = outer.y0 + outer.height() * rng.random::<f64>();
        let r = radius.draw(rng);
        // Beta radii can round to zero; such grains are invisible.
        if r > 0.0 {
            centers.push([x, y]);
            radii.push(r.min(R_MAX));
        }
    }
    Ok(DiscSet { centers, radii, window })
}

/// Fraction of an `resolution × resolution` grid of pixel centers over the
/// window covered by at least one disc.
pub fn area_fraction(discs: &DiscSet, resolution: usize) -> f64 {
    let w = discs.window;
    let (px, py) = (w.width() / resolution as f64, w.height() / resolution as f64);
    let mut rows: Vec<Vec<(i64, i64)>> = vec![Vec::new(); resolution];
    let last = resolution as i64 - 1;
    for (c, &r) in discs.centers.iter().zip(&discs.radii) {
        // rows whose pixel-center ordinate lies within the disc
        let j_lo = (((c[1] - r - w.y0) / py - 0.5).ceil() as i64).max(0);
        let j_hi = (((c[1] + r - w.y0) / py - 0.5).floor() as i64).min(last);
        for j in j_lo..=j_hi {
            let yc = w.y0 + (j as f64 + 0.5) * py;
            let dy = yc - c[1];
            let h = r * r - dy * dy;
            if h < 0.0 {
                continue;
            }
            let dx = h.sqrt();
            let i_lo = (((c[0] - dx - w.x0) / px - 0.5).ceil() as i64).max(0);
            let i_hi = (((c[0] + dx - w.x0) / px - 0.5).floor() as i64).min(last);
            if i_lo <= i_hi {
                rows[j as usize].push((i_lo, i_hi));
            }
        }
    }
    let mut covered: u64 = 0;
    for spans in rows.iter_mut() {
        if spans.is_empty() {
            continue;
        }
        spans.sort_unstable();
        let (mut lo, mut hi) = spans[0];
        for &(a, b) in &spans[1..] {
            if a > hi + 1 {
                covered += (hi - lo + 1) as u64;
                lo = a;
                hi = b;
            } else {
                hi = hi.max(b);
            }
        }
        covered += (hi - lo + 1) as u64;
    }
    covered as f64 / (resolution * resolution) as f64
}

/// Angles `offset ± acos((a - center)/r)` at which a circle crosses an
/// axis-parallel line.
fn line_crossings(center: f64, r: f64, a: f64, offset: f64, out: &mut Vec<f64>) {
    let t = (a - center) / r;
    if t.abs() < 1.0 {
        let base = t.acos();
        out.push((offset + base).rem_euclid(TAU));
        out.push((offset - base).rem_euclid(TAU));
    }
}

/// Total boundary length of the union inside the window, per unit area.
pub fn perimeter_per_area(discs: &DiscSet) -> f64 {
    let w = discs.window;
    let mut total = 0.0;
    let mut breaks = Vec::new();
    for i in 0..discs.len() {
        let [cx, cy] = discs.centers[i];
        let r = discs.radii[i];
        if cx + r < w.x0 || cx - r > w.x1 || cy + r < w.y0 || cy - r > w.y1 {
            continue;
        }
        let nb = discs.neighbours(i);
        breaks.clear();
        breaks.push(0.0);
        for &j in &nb {
            let [xj, yj] = discs.centers[j];
            let (dx, dy) = (xj - cx, yj - cy);
            let d = (dx * dx + dy * dy).sqrt();
            let rj = discs.radii[j];
            if d > (r - rj).abs() && d < r + rj {
                let phi = dy.atan2(dx);
                let cos_a = ((d * d + r * r - rj * rj) / (2.0 * d * r)).clamp(-1.0, 1.0);
                let a = cos_a.acos();
                breaks.push((phi + a).rem_euclid(TAU));
                breaks.push((phi - a).rem_euclid(TAU));
            }
        }
        // cos θ = (a - cx)/r for vertical edges, sin θ = (a - cy)/r for horizontal
        line_crossings(cx, r, w.x0, 0.0, &mut breaks);
        line_crossings(cx, r, w.x1, 0.0, &mut breaks);
        line_crossings(cy, r, w.y0, PI / 2.0, &mut breaks);
        line_crossings(cy, r, w.y1, PI / 2.0, &mut breaks);
        breaks.sort_unstable_by(f64::total_cmp);
        breaks.push(TAU);
        for k in 0..breaks.len() - 1 {
            let (a, b) = (breaks[k], breaks[k + 1]);
            if b - a <= 0.0 {
                continue;
            }
            let mid = 0.5 * (a + b);
            let (x, y) = (cx + r * mid.cos(), cy + r * mid.sin());
            if w.contains(x, y) && !discs.covered_by(i, &nb, x, y) {
                total += r * (b - a);
            }
        }
    }
    total / w.area()
}

/// `N(u)`: discs whose extreme point `c - r u/‖u‖` lies in the window and is
/// not hidden by another disc.
pub fn tangent_count(discs: &DiscSet, u: [f64; 2]) -> Result<usize> {
    tangent_count_with(discs, &discs.neighbour_lists(), u)
}

fn tangent_count_with(discs: &DiscSet, neighbours: &[Vec<usize>], u: [f64; 2]) -> Result<usize> {
    let norm = u[0].hypot(u[1]);
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    let (ux, uy) = (u[0] / norm, u[1] / norm);
    let mut count = 0;
    for (i, nb) in neighbours.iter().enumerate() {
        let [cx, cy] = discs.centers[i];
        let r = discs.radii[i];
        let (x, y) = (cx - r * ux, cy - r * uy);
        if discs.window.contains(x, y) && !discs.covered_by(i, nb, x, y) {
            count += 1;
        }
    }
    Ok(count)
}

fn random_tangent_counts<R: Rng + ?Sized>(
    discs: &DiscSet,
    n_directions: usize,
    rng: &mut R,
) -> Result<Vec<(f64, usize)>> {
    let neighbours = discs.neighbour_lists();
    (0..n_directions)
        .map(|_| {
            let angle = TAU * rng.random::<f64>();
            Ok((angle, tangent_count_with(discs, &neighbours, [angle.cos(), angle.sin()])?))
        })
        .collect()
}

/// Observed summaries of a realization.
#[derive(Debug, Clone, PartialEq)]
pub struct BooleanMeasurements {
    pub a_obs: f64,
    pub p_obs: f64,
    /// `(angle, N(u))` for each random direction.
    pub tangent_counts: Vec<(f64, usize)>,
}

impl BooleanMeasurements {
    pub fn measure<R: Rng + ?Sized>(
        discs: &DiscSet,
        resolution: usize,
        n_directions: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let tangent_counts = random_tangent_counts(discs, n_directions, rng)?;
        Ok(Self { a_obs: area_fraction(discs, resolution), p_obs: perimeter_per_area(discs), tangent_counts })
    }

    /// `mean N(u) / (|W| (1 - A_obs))`.
    pub fn rho2(&self, window: &Window) -> Result<f64> {
        if !(self.a_obs < 1.0) {
            return Err(Error::Degenerate("window fully covered".into()));
        }
        if self.tangent_counts.is_empty() {
            return Err(Error::InvalidArgument("at least one direction is required".into()));
        }
        let mean = self.tangent_counts.iter().map(|&(_, n)| n as f64).sum::<f64>() / self.tangent_counts.len() as f64;
        Ok(mean / (window.area() * (1.0 - self.a_obs)))
    }
}

/// `ρ̂₂` from `n_directions` uniformly random directions.
pub fn estimator_rho2<R: Rng + ?Sized>(discs: &DiscSet, a_obs: f64, n_directions: usize, rng: &mut R) -> Result<f64> {
    if n_directions == 0 {
        return Err(Error::InvalidArgument("at least one direction is required".into()));
    }
    let tangent_counts = random_tangent_counts(discs, n_directions, rng)?;
    BooleanMeasurements { a_obs, p_obs: f64::NAN, tangent_counts }.rho2(&discs.window)
}

/// `(ρ̂₁, α̂₁)` from area fraction and perimeter density.
pub fn estimators_rho1_alpha1(a_obs: f64, p_obs: f64) -> Result<(f64, f64)> {
    if !(a_obs > 0.0 && a_obs < 1.0) {
        return Err(Error::Degenerate(format!("area fraction {a_obs} outside (0, 1)")));
    }
    if !(p_obs > 0.0) {
        return Err(Error::Degenerate("zero perimeter".into()));
    }
    let alpha1 = p_obs / (10.0 * (a_obs - 1.0) * (-a_obs).ln_1p()) - 2.0;
    let rho1 = 5.0 * (alpha1 + 1.0) * p_obs / (PI * (1.0 - a_obs));
    Ok((rho1, alpha1))
}

/// `E R` and `E R²` for Beta(1, α) radii on `[0, 0.1]`.
pub fn radius_moments(alpha: f64) -> (f64, f64) {
    (R_MAX / (1.0 + alpha), R_MAX * R_MAX * 2.0 / ((alpha + 1.0) * (alpha + 2.0)))
}

/// `A = 1 - exp(-πρ E R²)`
pub fn theoretical_area_fraction(rho: f64, alpha: f64) -> f64 {
    let (_, m2) = radius_moments(alpha);
    -(-PI * rho * m2).exp_m1()
}

/// `P = 2πρ E R exp(-πρ E R²)`
pub fn theoretical_perimeter(rho: f64, alpha: f64) -> f64 {
    let (m1, m2) = radius_moments(alpha);
    TAU * rho * m1 * (-PI * rho * m2).exp()
}

/// `T = (ρ̂₁, ρ̂₂, α̂₁)` with groups (2, 1).
#[derive(Debug, Clone)]
pub struct BooleanBank {
    pub resolution: usize,
    pub n_directions: usize,
    group: GroupStructure,
}

impl BooleanBank {
    pub const LABELS: [&'static str; 3] = ["rho1", "rho2", "alpha1"];

    pub fn new(resolution: usize, n_directions: usize) -> Result<Self> {
        if resolution < 64 {
            return Err(Error::InvalidArgument(format!("resolution {resolution} below 64")));
        }
        if n_directions == 0 {
            return Err(Error::InvalidArgument("at least one direction is required".into()));
        }
        Ok(Self { resolution, n_directions, group: GroupStructure::new(vec![2, 1]).unwrap() })
    }

    pub fn from_measurements(&self, m: &BooleanMeasurements, window: &Window) -> Result<EstimatorVector> {
        let (rho1, alpha1) = estimators_rho1_alpha1(m.a_obs, m.p_obs)?;
        let rho2 = m.rho2(window)?;
        EstimatorVector::new(vec![rho1, rho2, alpha1], self.group.clone())
    }

    /// Bootstrap center `(0.5(ρ̂₁ + ρ̂₂), α̂₁)`.
    pub fn initial_estimate(t: &EstimatorVector) -> [f64; 2] {
        let v = t.values();
        [0.5 * (v[0] + v[1]), v[2]]
    }
}

impl EstimatorBank for BooleanBank {
    type Sample = DiscSet;

    fn group(&self) -> &GroupStructure {
        &self.group
    }

    fn estimate(&self, sample: &DiscSet, rng: &mut RngStream) -> Result<EstimatorVector> {
        let m = BooleanMeasurements::measure(sample, self.resolution, self.n_directions, rng)?;
        self.from_measurements(&m, &sample.window)
    }
}

/// Simulates the model at `θ = (ρ, α)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BooleanSimulator {
    pub window: Window,
}

impl ModelSimulator for BooleanSimulator {
    type Sample = DiscSet;
    type Owned = DiscSet;

    fn simulate(&self, theta: &[f64], rng: &mut RngStream) -> Result<DiscSet> {
        simulate_boolean(theta[0], theta[1], self.window, rng)
    }
}

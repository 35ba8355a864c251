//! Leray–Lions integrands `a_p(x, y, r)` and a sampling check of their
//! structural conditions.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{Node, Space};

/// Regularization used only inside derivative evaluation for `p < 2`.
pub const DERIV_DELTA: f64 = 1e-12;

pub type EvalFn = Arc<dyn Fn(Node, Node, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum MapKind {
    PLaplacian,
    /// Two-point average `(phi(x) + phi(y)) / 2` in front of `|r|^{p-2} r`.
    Weighted(Arc<Vec<f64>>),
    Custom {
        eval: EvalFn,
        deriv: Option<EvalFn>,
    },
}

#[derive(Clone)]
pub struct LerayLionsMap {
    p: f64,
    c: f64,
    big_c: f64,
    homogeneous: bool,
    kind: MapKind,
}

impl fmt::Debug for LerayLionsMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            MapKind::PLaplacian => "plaplacian",
            MapKind::Weighted(_) => "weighted",
            MapKind::Custom { .. } => "custom",
        };
        f.debug_struct("LerayLionsMap")
            .field("kind", &kind)
            .field("p", &self.p)
            .field("c", &self.c)
            .field("C", &self.big_c)
            .field("homogeneous", &self.homogeneous)
            .finish()
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("exponent p = {p} must exceed 1")))
    }
}

/// `|r|^{p-2} r`, with `c = C = 1`.
pub fn make_plaplacian(p: f64) -> Result<LerayLionsMap> {
    check_p(p)?;
    Ok(LerayLionsMap {
        p,
        c: 1.0,
        big_c: 1.0,
        homogeneous: true,
        kind: MapKind::PLaplacian,
    })
}

/// `((phi(x) + phi(y)) / 2) |r|^{p-2} r` with `c = min phi`, `C = max phi`.
pub fn make_weighted_plaplacian(p: f64, phi: Vec<f64>) -> Result<LerayLionsMap> {
    check_p(p)?;
    if phi.is_empty() {
        return Err(Error::InvalidParameter("weight phi is empty".into()));
    }
    if let Some((x, w)) = phi
        .iter()
        .enumerate()
        .find(|(_, w)| !(**w > 0.0 && w.is_finite()))
    {
        return Err(Error::InvalidParameter(format!(
            "weight phi({x}) = {w} is not bounded away from zero"
        )));
    }
    let c = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let big_c = phi.iter().copied().fold(0.0, f64::max);
    Ok(LerayLionsMap {
        p,
        c,
        big_c,
        homogeneous: true,
        kind: MapKind::Weighted(Arc::new(phi)),
    })
}

/// Admits an arbitrary integrand. Nothing is checked here beyond `p > 1`;
/// run [`verify_structure`] before trusting a solver with it.
pub fn make_custom(
    p: f64,
    c: f64,
    big_c: f64,
    homogeneous: bool,
    eval: EvalFn,
    deriv: Option<EvalFn>,
) -> Result<LerayLionsMap> {
    check_p(p)?;
    if !(c > 0.0 && big_c > 0.0) {
        return Err(Error::InvalidParameter("constants c and C must be positive".into()));
    }
    Ok(LerayLionsMap {
        p,
        c,
        big_c,
        homogeneous,
        kind: MapKind::Custom { eval, deriv },
    })
}

#[inline]
fn signed_pow(r: f64, e: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r.signum() * r.abs().powf(e)
    }
}

impl LerayLionsMap {
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Coercivity constant `c`.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Growth constant `C`.
    pub fn big_c(&self) -> f64 {
        self.big_c
    }

    pub fn positively_homogeneous(&self) -> bool {
        self.homogeneous
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    /// The scalar in front of `|r|^{p-2} r` for built-in maps.
    #[inline]
    pub fn coefficient(&self, x: Node, y: Node) -> Option<f64> {
        match &self.kind {
            MapKind::PLaplacian => Some(1.0),
            MapKind::Weighted(phi) => Some(0.5 * (phi[x] + phi[y])),
            MapKind::Custom { .. } => None,
        }
    }

    #[inline]
    pub fn eval(&self, x: Node, y: Node, r: f64) -> f64 {
        match &self.kind {
            MapKind::PLaplacian => signed_pow(r, self.p - 1.0),
            MapKind::Weighted(phi) => 0.5 * (phi[x] + phi[y]) * signed_pow(r, self.p - 1.0),
            MapKind::Custom { eval, .. } => eval(x, y, r),
        }
    }

    pub fn has_derivative(&self) -> bool {
        !matches!(self.kind, MapKind::Custom { deriv: None, .. })
    }

    /// `d/dr a_p(x, y, r)`; `None` when a custom map came without one.
    #[inline]
    pub fn deriv(&self, x: Node, y: Node, r: f64) -> Option<f64> {
        let base = |p: f64| {
            if p == 2.0 {
                1.0
            } else if p < 2.0 {
                (p - 1.0) * (r * r + DERIV_DELTA * DERIV_DELTA).powf(0.5 * (p - 2.0))
            } else {
                (p - 1.0) * r.abs().powf(p - 2.0)
            }
        };
        match &self.kind {
            MapKind::PLaplacian => Some(base(self.p)),
            MapKind::Weighted(phi) => Some(0.5 * (phi[x] + phi[y]) * base(self.p)),
            MapKind::Custom { deriv, .. } => deriv.as_ref().map(|d| d(x, y, r)),
        }
    }

    /// Derivative, falling back to a central difference with step `1e-6 (1 + |r|)`.
    #[inline]
    pub fn deriv_or_fd(&self, x: Node, y: Node, r: f64) -> f64 {
        match self.deriv(x, y, r) {
            Some(d) => d,
            None => {
                let h = 1e-6 * (1.0 + r.abs());
                (self.eval(x, y, r + h) - self.eval(x, y, r - h)) / (2.0 * h)
            }
        }
    }

    /// Convex primitive `A(x, y, r) = coef |r|^p / p`, only for built-in maps.
    #[inline]
    pub fn primitive(&self, x: Node, y: Node, r: f64) -> Option<f64> {
        self.coefficient(x, y)
            .map(|k| k * r.abs().powf(self.p) / self.p)
    }

    pub fn is_potential(&self) -> bool {
        !matches!(self.kind, MapKind::Custom { .. })
    }

    /// Checks that weights, if any, cover every node of `space`.
    pub(crate) fn ensure_fits(&self, space: &Space) -> Result<()> {
        if let MapKind::Weighted(phi) = &self.kind {
            if phi.len() != space.node_count() {
                return Err(Error::InvalidParameter(format!(
                    "weight phi has {} entries for {} nodes",
                    phi.len(),
                    space.node_count()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StructureReport {
    pub antisymmetry_violation: f64,
    pub monotonicity_violation: f64,
    pub growth_violation: f64,
    pub coercivity_violation: f64,
    pub samples_used: usize,
}

impl StructureReport {
    pub fn max_violation(&self) -> f64 {
        self.antisymmetry_violation
            .max(self.monotonicity_violation)
            .max(self.growth_violation)
            .max(self.coercivity_violation)
    }
}

// Defects smaller than a few ulps of the compared magnitudes are rounding,
// not structure.
const ROUNDING: f64 = 8.0 * f64::EPSILON;

fn defect(raw: f64, magnitude: f64) -> f64 {
    (raw - ROUNDING * magnitude).max(0.0)
}

fn sample_r(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_range(0..16) == 0 {
        return 0.0;
    }
    let mag = 10f64.powf(rng.random_range(-6.0..3.0));
    if rng.random_bool(0.5) {
        mag
    } else {
        -mag
    }
}

/// Samples `(x, y, r, s)` with `y` drawn from the row of `x` and records the
/// worst defect of each structural condition.
pub fn verify_structure(
    map: &LerayLionsMap,
    space: &Space,
    n_samples: usize,
    rng_seed: u64,
) -> Result<StructureReport> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    map.ensure_fits(space)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let p = map.p;
    let mut rep = StructureReport {
        samples_used: n_samples,
        ..Default::default()
    };
    for _ in 0..n_samples {
        let x = rng.random_range(0..space.node_count());
        let row = space.row(x);
        let y = row[rng.random_range(0..row.len())].0;
        let r = sample_r(&mut rng);
        let s = sample_r(&mut rng);

        let ar = map.eval(x, y, r);
        let back = map.eval(y, x, -r);
        rep.antisymmetry_violation = rep
            .antisymmetry_violation
            .max(defect((ar + back).abs(), ar.abs() + back.abs()));

        if r != s {
            let a_s = map.eval(x, y, s);
            let raw = -(ar - a_s) * (r - s);
            let mag = (ar.abs() + a_s.abs()) * (r - s).abs();
            rep.monotonicity_violation = rep.monotonicity_violation.max(defect(raw, mag));
        }

        let bound = map.big_c * (1.0 + r.abs().powf(p - 1.0));
        rep.growth_violation = rep.growth_violation.max(defect(ar.abs() - bound, bound));

        let floor = map.c * r.abs().powf(p);
        rep.coercivity_violation = rep
            .coercivity_violation
            .max(defect(floor - ar * r, floor));
    }
    Ok(rep)
}

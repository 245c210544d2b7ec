//! Linear function class `V_θ = Φθ`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Feature matrix `Φ` (row `s` is `φ(s)ᵀ`) with full column rank.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<T: Real> {
    phi: DMatrix<T>,
    b_phi: T,
}

impl<T: Real> FeatureMap<T> {
    pub fn new(phi: DMatrix<T>) -> Result<Self> {
        if phi.nrows() == 0 || phi.ncols() == 0 {
            return Err(invalid("feature matrix must be non-empty"));
        }
        if phi.iter().any(|x| !x.is_finite()) {
            return Err(invalid("feature matrix has non-finite entries"));
        }
        let rank = linalg::rank(&phi, T::rank_tol());
        if rank < phi.ncols() {
            return Err(Error::RankDeficient(format!(
                "feature matrix has rank {rank} but {} columns",
                phi.ncols()
            )));
        }
        let b_phi = phi.row_iter().map(|r| r.norm()).fold(T::zero(), |a, b| a.max(b));
        Ok(Self { phi, b_phi })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(invalid("feature rows have different lengths"));
        }
        let flat: Vec<T> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), d, &flat))
    }

    /// Identity features: one indicator per state.
    pub fn tabular(n_states: usize) -> Self {
        Self::new(DMatrix::identity(n_states, n_states)).expect("identity has full rank")
    }

    pub fn phi(&self) -> &DMatrix<T> {
        &self.phi
    }

    /// `φ(s)` as a column vector.
    pub fn row(&self, s: usize) -> DVector<T> {
        self.phi.row(s).transpose()
    }

    /// `max_s ‖φ(s)‖₂`.
    pub fn b_phi(&self) -> T {
        self.b_phi
    }

    pub fn n_states(&self) -> usize {
        self.phi.nrows()
    }

    pub fn dim(&self) -> usize {
        self.phi.ncols()
    }

    /// Reads `|S|` rows of `d` comma-separated values. Lines starting with
    /// `#` and non-numeric header lines are skipped.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            match parsed {
                Ok(v) => rows.push(v.into_iter().map(T::lit).collect::<Vec<T>>()),
                Err(_) if rows.is_empty() && i == 0 => continue,
                Err(_) => {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: "bad feature value".into(),
                    })
                }
            }
        }
        Self::from_rows(&rows)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_csv(&std::fs::read_to_string(path)?)
    }
}

/// One-dimensional Baird features.
pub fn baird_phi1<T: Real>() -> FeatureMap<T> {
    let rows: Vec<Vec<T>> = [0.35, 0.35, 0.35, 0.35, 0.35, 0.35, 0.37]
        .iter()
        .map(|&x| vec![T::lit(x)])
        .collect();
    FeatureMap::from_rows(&rows).expect("preset has full rank")
}

/// Two-dimensional Baird features, first set.
pub fn baird_phi2<T: Real>() -> FeatureMap<T> {
    preset_2d(&[
        [0.3425, 0.0171],
        [0.1902, 0.4248],
        [0.1354, 0.76],
        [0.1357, 0.7973],
        [0.8674, 0.8774],
        [0.5166, 0.9493],
        [0.3094, 0.8535],
    ])
}

/// Two-dimensional Baird features, second set.
pub fn baird_phi3<T: Real>() -> FeatureMap<T> {
    preset_2d(&[
        [0.5162, 0.9013],
        [0.5128, 0.5999],
        [0.289, 0.4649],
        [0.3399, 0.5334],
        [0.315, 0.2278],
        [0.667, 0.461],
        [0.3706, 0.1457],
    ])
}

fn preset_2d<T: Real>(rows: &[[f64; 2]]) -> FeatureMap<T> {
    let rows: Vec<Vec<T>> = rows.iter().map(|r| r.iter().map(|&x| T::lit(x)).collect()).collect();
    FeatureMap::from_rows(&rows).expect("preset has full rank")
}

/// Looks up `phi1`, `phi2`, `phi3` or `tabular` (for the 7-state preset).
pub fn feature_preset<T: Real>(name: &str) -> Option<FeatureMap<T>> {
    match name {
        "phi1" => Some(baird_phi1()),
        "phi2" => Some(baird_phi2()),
        "phi3" => Some(baird_phi3()),
        "tabular" => Some(FeatureMap::tabular(7)),
        _ => None,
    }
}

/// Euclidean ball `{θ : ‖θ‖₂ ≤ radius}`, or no constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionBall<T> {
    Disabled,
    Radius(T),
}

impl<T: Real> ProjectionBall<T> {
    pub fn with_radius(radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(invalid(format!("projection radius {radius} must be positive")));
        }
        Ok(Self::Radius(radius))
    }

    pub fn radius(&self) -> Option<T> {
        match *self {
            Self::Disabled => None,
            Self::Radius(r) => Some(r),
        }
    }
}

/// `Φθ`.
pub fn value_estimate<T: Real>(features: &FeatureMap<T>, theta: &DVector<T>) -> Result<DVector<T>> {
    if theta.len() != features.dim() {
        return Err(invalid(format!(
            "theta has length {}, features have dimension {}",
            theta.len(),
            features.dim()
        )));
    }
    Ok(features.phi() * theta)
}

/// Radial projection onto the ball.
pub fn project_ball<T: Real>(theta: DVector<T>, ball: &ProjectionBall<T>) -> DVector<T> {
    match *ball {
        ProjectionBall::Disabled => theta,
        ProjectionBall::Radius(r) => {
            let norm = theta.norm();
            if norm <= r {
                theta
            } else {
                theta * (r / norm)
            }
        }
    }
}

/// `argmin_θ Σ_s w(s)(φ(s)ᵀθ − v(s))²` via the normal equations.
pub fn weighted_projection<T: Real>(
    v: &DVector<T>,
    features: &FeatureMap<T>,
    weights: &DVector<T>,
) -> Result<DVector<T>> {
    let n = features.n_states();
    if v.len() != n || weights.len() != n {
        return Err(invalid("value and weight vectors must have one entry per state"));
    }
    if weights.iter().any(|&w| !(w >= T::zero())) {
        return Err(invalid("projection weights must be nonnegative"));
    }
    let phi = features.phi();
    let weighted = DMatrix::from_fn(n, features.dim(), |s, j| phi[(s, j)] * weights[s]);
    let gram = phi.tr_mul(&weighted);
    let rhs = weighted.tr_mul(v);
    if linalg::rank(&gram, T::rank_tol()) < features.dim() {
        return Err(Error::RankDeficient("weighted Gram matrix ΦᵀWΦ is singular".into()));
    }
    match gram.clone().cholesky() {
        Some(ch) => Ok(ch.solve(&rhs)),
        None => Err(Error::RankDeficient(
            "weighted Gram matrix ΦᵀWΦ is not positive definite".into(),
        )),
    }
}

/// Projection radius `‖Φᵀ‖₂ r_max / ((1 − γ) μ)`.
pub fn default_radius<T: Real>(features: &FeatureMap<T>, r_max: T, gamma: T, mu: T) -> Result<T> {
    if !(mu > T::zero()) {
        return Err(invalid(format!("monotonicity constant {mu} must be positive")));
    }
    let norm = linalg::spectral_norm(&features.phi().transpose());
    Ok(norm * r_max / ((T::one() - gamma) * mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn value_estimate_examples() {
        let f = baird_phi1::<f64>();
        assert_eq!(value_estimate(&f, &v(&[0.0])).unwrap(), DVector::zeros(7));
        let out = value_estimate(&f, &v(&[1.0])).unwrap();
        assert_eq!(out.as_slice(), &[0.35, 0.35, 0.35, 0.35, 0.35, 0.35, 0.37]);
        let tab = FeatureMap::<f64>::tabular(3);
        assert_eq!(value_estimate(&tab, &v(&[1.0, 2.0, 3.0])).unwrap(), v(&[1.0, 2.0, 3.0]));
        assert!(value_estimate(&tab, &v(&[1.0])).is_err());
    }

    #[test]
    fn presets_are_well_formed() {
        assert_relative_eq!(baird_phi1::<f64>().b_phi(), 0.37);
        for f in [baird_phi2::<f64>(), baird_phi3()] {
            assert_eq!((f.n_states(), f.dim()), (7, 2));
        }
        assert_relative_eq!(baird_phi3::<f64>().phi()[(5, 0)], 0.667);
    }

    #[test]
    fn rank_deficient_features_rejected() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![0.5, 1.0]];
        assert!(matches!(FeatureMap::from_rows(&rows), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn project_ball_examples() {
        let ball = ProjectionBall::with_radius(5.0).unwrap();
        assert_eq!(project_ball(v(&[3.0, 4.0]), &ball), v(&[3.0, 4.0]));
        let p = project_ball(v(&[6.0, 8.0]), &ball);
        assert_relative_eq!(p[0], 3.0, epsilon = 1e-15);
        assert_relative_eq!(p[1], 4.0, epsilon = 1e-15);
        assert_eq!(
            project_ball(v(&[60.0, 8.0]), &ProjectionBall::Disabled),
            v(&[60.0, 8.0])
        );
        assert!(ProjectionBall::with_radius(0.0).is_err());
    }

    #[test]
    fn weighted_projection_examples() {
        let f = baird_phi3::<f64>();
        let theta0 = v(&[1.5, -0.25]);
        let w = v(&[0.1, 0.2, 0.05, 0.3, 0.1, 0.15, 0.1]);
        let got = weighted_projection(&(f.phi() * &theta0), &f, &w).unwrap();
        assert_relative_eq!(got, theta0, epsilon = 1e-12);

        let ones = FeatureMap::from_rows(&vec![vec![1.0]; 4]).unwrap();
        let got = weighted_projection(&v(&[1.0, 2.0, 3.0, 6.0]), &ones, &v(&[0.25; 4])).unwrap();
        assert_relative_eq!(got[0], 3.0, epsilon = 1e-14);

        let zero = v(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let v7 = DVector::from_element(7, 1.0);
        assert!(matches!(
            weighted_projection(&v7, &f, &zero),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn default_radius_examples() {
        let f = FeatureMap::<f64>::tabular(1);
        assert_relative_eq!(default_radius(&f, 1.0, 0.5, 1.0).unwrap(), 2.0);
        let r1 = default_radius(&baird_phi2::<f64>(), 1.0, 0.99, 0.3).unwrap();
        let r3 = default_radius(&baird_phi2::<f64>(), 3.0, 0.99, 0.3).unwrap();
        assert_relative_eq!(r3, 3.0 * r1, epsilon = 1e-12);
        assert!(default_radius(&f, 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn parse_feature_csv() {
        let f = FeatureMap::<f64>::parse_csv("x,y\n1,0\n0,1\n1,1\n").unwrap();
        assert_eq!((f.n_states(), f.dim()), (3, 2));
        assert!(FeatureMap::<f64>::parse_csv("1,0\n0,zz\n").is_err());
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_bounded(
            x in prop::collection::vec(-100.0f64..100.0, 1..5),
            r in 0.1f64..50.0,
        ) {
            let ball = ProjectionBall::with_radius(r).unwrap();
            let once = project_ball(DVector::from_vec(x), &ball);
            prop_assert!(once.norm() <= r * (1.0 + 1e-12));
            let twice = project_ball(once.clone(), &ball);
            prop_assert!((twice - once).norm() <= 1e-12 * r);
        }

        #[test]
        fn projection_residual_is_weight_orthogonal(
            vals in prop::collection::vec(-10.0f64..10.0, 7),
            w in prop::collection::vec(0.01f64..1.0, 7),
        ) {
            let f = baird_phi2::<f64>();
            let (vv, ww) = (DVector::from_vec(vals), DVector::from_vec(w));
            let th = weighted_projection(&vv, &f, &ww).unwrap();
            let resid = &vv - f.phi() * th;
            let ortho = f.phi().transpose() * resid.component_mul(&ww);
            prop_assert!(ortho.norm() <= 1e-9);
        }

        #[test]
        fn value_estimate_is_linear(
            t1 in prop::collection::vec(-10.0f64..10.0, 2),
            t2 in prop::collection::vec(-10.0f64..10.0, 2),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let f = baird_phi3::<f64>();
            let (t1, t2) = (DVector::from_vec(t1), DVector::from_vec(t2));
            let lhs = value_estimate(&f, &(&t1 * a + &t2 * b)).unwrap();
            let rhs = value_estimate(&f, &t1).unwrap() * a + value_estimate(&f, &t2).unwrap() * b;
            prop_assert!((lhs - rhs).amax() <= 1e-12);
        }
    }
}

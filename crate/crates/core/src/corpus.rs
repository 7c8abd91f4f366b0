//! Named example sprays and connections with known behaviour.

use crate::geometry::{
    Chart, ChristoffelConnection, HomogeneityClass, Interval, Spray,
};

/// A named spray with its expected homogeneity.
#[derive(Debug, Clone)]
pub struct CorpusSpray {
    pub name: &'static str,
    pub spray: Spray,
    pub class: HomogeneityClass,
    /// Degree `m` when homogeneous.
    pub degree: Option<f64>,
    pub bounded_chart: bool,
}

impl CorpusSpray {
    pub fn is_quadratic(&self) -> bool {
        self.class == HomogeneityClass::Complete && self.degree == Some(2.0)
    }
}

#[derive(Debug, Clone)]
pub struct CorpusConnection {
    pub name: &'static str,
    pub connection: ChristoffelConnection,
    pub linear: bool,
}

pub fn half_plane_chart() -> Chart {
    Chart::new(2, Some(vec![Interval::REAL_LINE, Interval::new(0.0, f64::INFINITY)])).expect("valid chart")
}

/// Polar-angle/longitude chart of the round sphere.
pub fn sphere_chart() -> Chart {
    Chart::new(2, Some(vec![Interval::new(0.0, std::f64::consts::PI), Interval::REAL_LINE])).expect("valid chart")
}

fn euclid(n: usize) -> Chart {
    Chart::euclidean(n).expect("valid chart")
}

fn make(chart: Chart, src: &[&str]) -> Spray {
    Spray::parse(chart, src).expect("corpus sprays parse")
}

pub fn zero_spray(n: usize) -> Spray {
    make(euclid(n), &vec!["0"; n])
}

/// `ẍ = x`; solutions `p cosh t + v sinh t`.
pub fn linear_growth_spray() -> Spray {
    make(euclid(1), &["x1"])
}

/// `ẍ = π(1 + ẋ²)`; blows up at `t = 1/2 − C₁/π` when `ẋ(0) = tan C₁`.
pub fn blow_up_spray() -> Spray {
    make(euclid(1), &["pi*(1 + y1^2)"])
}

pub fn half_plane_spray() -> Spray {
    make(half_plane_chart(), &["2*y1*y2/x2", "(y2^2 - y1^2)/x2"])
}

pub fn sphere_spray() -> Spray {
    make(sphere_chart(), &["sin(x1)*cos(x1)*y2^2", "-2*cos(x1)/sin(x1)*y1*y2"])
}

/// `ẍ = ω Jẋ` with `ω = 1`; geodesics are circles of radius `‖v‖`.
pub fn rotation_spray() -> Spray {
    make(euclid(2), &["-y2", "y1"])
}

pub fn quadratic_spray() -> Spray {
    make(euclid(2), &["y1^2", "y1*y2"])
}

/// `|ẋ|ẋ`: positively but not completely homogeneous of degree 2.
pub fn abs_spray() -> Spray {
    make(euclid(1), &["abs(y1)*y1"])
}

pub fn sprays() -> Vec<CorpusSpray> {
    use HomogeneityClass::*;
    let entry = |name, spray, class, degree: Option<f64>, bounded_chart| CorpusSpray {
        name,
        spray,
        class,
        degree,
        bounded_chart,
    };
    vec![
        entry("zero", zero_spray(2), Complete, Some(2.0), false),
        entry("linear_growth", linear_growth_spray(), Inhomogeneous, None, false),
        entry("blow_up", blow_up_spray(), Inhomogeneous, None, false),
        entry("half_plane", half_plane_spray(), Complete, Some(2.0), true),
        entry("sphere", sphere_spray(), Complete, Some(2.0), true),
        entry("rotation", rotation_spray(), Complete, Some(1.0), false),
        entry("quadratic", quadratic_spray(), Complete, Some(2.0), false),
        entry("abs", abs_spray(), Positive, Some(2.0), false),
    ]
}

pub fn spray(name: &str) -> Option<Spray> {
    sprays().into_iter().find(|s| s.name == name).map(|s| s.spray)
}

pub fn half_plane_connection() -> ChristoffelConnection {
    ChristoffelConnection::parse(half_plane_chart(), &[vec!["y2/x2", "y1/x2"], vec!["-y1/x2", "y2/x2"]])
        .expect("valid connection")
}

pub fn sphere_connection() -> ChristoffelConnection {
    ChristoffelConnection::parse(
        sphere_chart(),
        &[
            vec!["0", "sin(x1)*cos(x1)*y2"],
            vec!["-cos(x1)/sin(x1)*y2", "-cos(x1)/sin(x1)*y1"],
        ],
    )
    .expect("valid connection")
}

/// Linear connection on ℝ² whose only nonzero symbol is `Γ¹₁₂ = 1`.
pub fn asymmetric_connection() -> ChristoffelConnection {
    ChristoffelConnection::parse(euclid(2), &[vec!["y2", "0"], vec!["0", "0"]]).expect("valid connection")
}

/// `Γ(x, v) = v²` on ℝ.
pub fn square_connection() -> ChristoffelConnection {
    ChristoffelConnection::parse(euclid(1), &[vec!["y1^2"]]).expect("valid connection")
}

/// A nonlinear connection on ℝ² with `Γ(x, 0) ≠ 0`.
pub fn shifted_connection() -> ChristoffelConnection {
    ChristoffelConnection::parse(euclid(2), &[vec!["sin(x2) + y1*y2", "y1^2"], vec!["x1*y2", "1 + cos(y1)"]])
        .expect("valid connection")
}

pub fn connections() -> Vec<CorpusConnection> {
    let entry = |name, connection, linear| CorpusConnection {
        name,
        connection,
        linear,
    };
    vec![
        entry("flat", ChristoffelConnection::flat(euclid(2)), true),
        entry("half_plane", half_plane_connection(), true),
        entry("sphere", sphere_connection(), true),
        entry("asymmetric", asymmetric_connection(), true),
        entry("square", square_connection(), false),
        entry("shifted", shifted_connection(), false),
    ]
}

pub fn connection(name: &str) -> Option<ChristoffelConnection> {
    connections().into_iter().find(|c| c.name == name).map(|c| c.connection)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::geodesic_spray_of;

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = sprays().iter().map(|s| s.name).collect();
        names.extend(connections().iter().map(|c| c.name));
        let spray_count = sprays().len();
        assert_eq!(names[..spray_count].iter().collect::<std::collections::BTreeSet<_>>().len(), spray_count);
        assert!(spray("half_plane").is_some() && connection("square").is_some());
        assert!(spray("nope").is_none());
    }

    #[test]
    fn sphere_connection_induces_sphere_spray() {
        let induced = geodesic_spray_of(&sphere_connection());
        let s = sphere_spray();
        for (x, y) in [([0.7, 0.2], [0.3, -1.1]), ([2.0, -1.0], [1.5, 0.4])] {
            let a = induced.eval(&x, &y).unwrap();
            let b = s.eval(&x, &y).unwrap();
            assert!(a.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-12), "{a:?} {b:?}");
        }
    }
}

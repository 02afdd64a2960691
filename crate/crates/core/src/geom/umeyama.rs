use nalgebra::{DMatrix, Matrix3, Point3, Vector3};

use super::{GeomError, Sim3Transform, MIN_SOURCE_VARIANCE, RANK_TOLERANCE};

/// Result of [`umeyama_align`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UmeyamaFit {
    pub transform: Sim3Transform,
    /// Two or more singular values of the cross-covariance vanished: the
    /// points are collinear and the rotation about their line is arbitrary.
    pub rank_deficient: bool,
    /// Singular values of the cross-covariance, descending.
    pub singular_values: Vector3<f64>,
}

/// Closed-form least-squares similarity mapping `source` onto `target`.
///
/// Minimises `(1/N)·Σ‖y_i − (c·R·x_i + t)‖²` over scale, proper rotation
/// and translation.
pub fn umeyama_align(source: &[Point3<f64>], target: &[Point3<f64>]) -> Result<UmeyamaFit, GeomError> {
    if source.len() != target.len() {
        return Err(GeomError::LengthMismatch { source_len: source.len(), target_len: target.len() });
    }
    let n = source.len();
    if n < 3 {
        return Err(GeomError::TooFewPoints(n));
    }
    let finite = |p: &Point3<f64>| p.coords.iter().all(|v| v.is_finite());
    if !source.iter().all(finite) || !target.iter().all(finite) {
        return Err(GeomError::NonFinite("alignment points"));
    }

    let inv_n = 1.0 / n as f64;
    let mu_x = source.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) * inv_n;
    let mu_y = target.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) * inv_n;

    let mut sigma_xy = Matrix3::zeros();
    let mut var_x = 0.0;
    for (x, y) in source.iter().zip(target) {
        let dx = x.coords - mu_x;
        let dy = y.coords - mu_y;
        sigma_xy += dy * dx.transpose();
        var_x += dx.norm_squared();
    }
    sigma_xy *= inv_n;
    var_x *= inv_n;
    if var_x <= MIN_SOURCE_VARIANCE {
        return Err(GeomError::DegenerateSource(var_x));
    }

    // The fixed-size 3×3 SVD goes through an eigendecomposition of AᵀA,
    // which squares the condition number; the dynamic path is Golub–Kahan.
    let svd = DMatrix::from_column_slice(3, 3, sigma_xy.as_slice()).svd(true, true);
    let u: Matrix3<f64> = svd.u.expect("U requested").fixed_view::<3, 3>(0, 0).into_owned();
    let v_t: Matrix3<f64> = svd.v_t.expect("Vᵀ requested").fixed_view::<3, 3>(0, 0).into_owned();
    let d = Vector3::new(svd.singular_values[0], svd.singular_values[1], svd.singular_values[2]);

    let mut s = Vector3::new(1.0, 1.0, 1.0);
    if u.determinant() * v_t.determinant() < 0.0 {
        s[2] = -1.0;
    }
    let rotation = u * Matrix3::from_diagonal(&s) * v_t;
    let scale = d.dot(&s) / var_x;
    let translation = mu_y - rotation * mu_x * scale;

    let largest = d[0];
    let near_zero = d.iter().filter(|&&sv| sv < RANK_TOLERANCE * largest).count();

    Ok(UmeyamaFit {
        transform: Sim3Transform::new(scale, rotation, translation)?,
        rank_deficient: near_zero >= 2 || largest == 0.0,
        singular_values: d,
    })
}

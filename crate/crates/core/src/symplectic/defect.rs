use super::DiffMap;
use crate::error::{Error, Result};
use crate::numcore::{finite_diff_jacobian, poisson, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DefectMode {
    Analytic,
    /// Central differences with the given step.
    FiniteDiff(f64),
}

fn jacobian_of<M: DiffMap>(map: &M, point: &[f64], mode: DefectMode) -> Result<Matrix> {
    let d = match mode {
        DefectMode::Analytic => map.jacobian(point)?,
        DefectMode::FiniteDiff(h) => finite_diff_jacobian(
            |z| map.apply(z).unwrap_or_else(|_| vec![f64::NAN; map.dim_out()]),
            point,
            h,
        )?,
    };
    if !d.is_finite() {
        return Err(Error::NonFinite("Jacobian entries".into()));
    }
    Ok(d)
}

fn form_defect(d: &Matrix, sign: f64) -> Result<f64> {
    let j_out = poisson(d.rows() / 2);
    let j_in = poisson(d.cols() / 2);
    let djd = d.transpose().matmul(&j_out)?.matmul(d)?;
    Ok(djd.sub(&j_in.scale(sign))?.max_abs())
}

/// `‖DᵀJ_out D − J_in‖∞` at `point`.
pub fn symplecticity_defect<M: DiffMap>(map: &M, point: &[f64], mode: DefectMode) -> Result<f64> {
    form_defect(&jacobian_of(map, point, mode)?, 1.0)
}

/// `‖DᵀJD + J‖∞`, zero for anti-symplectic maps.
pub fn anti_symplecticity_defect<M: DiffMap>(
    map: &M,
    point: &[f64],
    mode: DefectMode,
) -> Result<f64> {
    form_defect(&jacobian_of(map, point, mode)?, -1.0)
}

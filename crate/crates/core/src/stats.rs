//! Moments, CDFs and error norms for densities on a grid.

use crate::error::{Error, Result};
use crate::fpk::{Grid1D, PdfField, PdfSurface};

/// Mean, standard deviation and standardized third/fourth moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub mean: f64,
    pub std: f64,
    /// `None` when the spread vanishes.
    pub skewness: Option<f64>,
    /// Raw standardized kurtosis (3 for a Gaussian).
    pub kurtosis: Option<f64>,
}

const MASS_TOL: f64 = 1e-4;

/// Trapezoid moments of a grid density.
pub fn moments_from_pdf(p: &PdfField, grid: &Grid1D) -> Result<MomentSet> {
    if p.values.len() != grid.n_cells() {
        return Err(Error::GridMismatch(format!(
            "{} values on a {}-node grid",
            p.values.len(),
            grid.n_cells()
        )));
    }
    let mass = grid.trapezoid(&p.values);
    if !((mass - 1.0).abs() <= MASS_TOL) {
        return Err(Error::domain(format!(
            "density mass {mass} is not within {MASS_TOL} of 1"
        )));
    }
    let xs = grid.node_vec();
    let integrate = |k: i32, c: f64| {
        let w: Vec<f64> = xs.iter().zip(&p.values).map(|(x, v)| (x - c).powi(k) * v).collect();
        grid.trapezoid(&w) / mass
    };
    let mean = integrate(1, 0.0);
    let var = integrate(2, mean).max(0.0);
    let std = var.sqrt();
    let (skewness, kurtosis) = if var > 0.0 {
        (
            Some(integrate(3, mean) / (var * std)),
            Some(integrate(4, mean) / (var * var)),
        )
    } else {
        (None, None)
    };
    Ok(MomentSet {
        mean,
        std,
        skewness,
        kurtosis,
    })
}

/// Cumulative trapezoid integral at the nodes, clamped to `[0, 1]`, ending at 1.
pub fn pdf_to_cdf(p: &PdfField, grid: &Grid1D) -> Vec<f64> {
    let dx = grid.dx();
    let mut cdf = Vec::with_capacity(p.values.len());
    let mut acc = 0.0;
    for (i, &v) in p.values.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * dx * (p.values[i - 1].max(0.0) + v.max(0.0));
        }
        cdf.push(acc);
    }
    let total = acc;
    if total > 0.0 {
        cdf.iter_mut().for_each(|c| *c = (*c / total).clamp(0.0, 1.0));
    }
    cdf
}

/// Distances between two surfaces on the same grid and time stack.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceComparison {
    pub times: Vec<f64>,
    pub linf: f64,
    pub linf_per_time: Vec<f64>,
    pub l1_per_time: Vec<f64>,
}

pub fn compare_surfaces(a: &PdfSurface, b: &PdfSurface) -> Result<SurfaceComparison> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", a.grid, b.grid)));
    }
    if a.fields.len() != b.fields.len() {
        return Err(Error::GridMismatch(format!(
            "{} output times vs {}",
            a.fields.len(),
            b.fields.len()
        )));
    }
    let grid = a.grid;
    let mut out = SurfaceComparison {
        times: Vec::with_capacity(a.fields.len()),
        linf: 0.0,
        linf_per_time: Vec::new(),
        l1_per_time: Vec::new(),
    };
    for (fa, fb) in a.fields.iter().zip(&b.fields) {
        if (fa.t - fb.t).abs() > 1e-9 * fa.t.abs().max(1.0) {
            return Err(Error::GridMismatch(format!("output time {} vs {}", fa.t, fb.t)));
        }
        let diff: Vec<f64> = fa.values.iter().zip(&fb.values).map(|(x, y)| (x - y).abs()).collect();
        let linf = diff.iter().copied().fold(0.0, f64::max);
        out.times.push(fa.t);
        out.linf = out.linf.max(linf);
        out.linf_per_time.push(linf);
        out.l1_per_time.push(grid.trapezoid(&diff));
    }
    Ok(out)
}

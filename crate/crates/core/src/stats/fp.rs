use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::drift::Diffusion;
use crate::error::{Error, Result};
use crate::expfam::{density, ExponentialFamily, ParameterCurve, MAX_STATISTICS};

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn uniform_mesh(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + i as f64 * h })
        .collect()
}

fn check_uniform(name: &str, mesh: &[f64]) -> Result<f64> {
    if mesh.len() < 3 {
        return Err(Error::invalid(format!("{name} mesh needs at least 3 points")));
    }
    let h = (mesh[mesh.len() - 1] - mesh[0]) / (mesh.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::invalid(format!("{name} mesh must be increasing")));
    }
    for (i, &v) in mesh.iter().enumerate() {
        if (v - (mesh[0] + i as f64 * h)).abs() > 1e-9 * h.max(v.abs()) {
            return Err(Error::invalid(format!("{name} mesh must be uniform")));
        }
    }
    Ok(h)
}

/// Fokker–Planck residual `|∂_t p + ∂_x(u p) − ½ ∂²_x(a p)|` on the interior
/// nodes of a `(t, x)` mesh, divided by `max |∂_t p|` over the same nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpResidualReport {
    pub t_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    /// Row-major over interior nodes: `(len(t) − 2) × (len(x) − 2)`.
    pub residual: Vec<f64>,
    pub max_residual: f64,
    pub argmax: (f64, f64),
    pub normalization: f64,
}

impl FpResidualReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x,residual")?;
        let nx = self.x_grid.len() - 2;
        for (idx, r) in self.residual.iter().enumerate() {
            let (i, k) = (idx / nx + 1, idx % nx + 1);
            writeln!(w, "{:.16e},{:.16e},{:.16e}", self.t_grid[i], self.x_grid[k], r)?;
        }
        Ok(())
    }
}

/// Central second-order differences in `t` and `x` on uniform meshes.
pub fn fp_residual<F, C, U>(
    fam: &F,
    curve: &C,
    diffusion: &Diffusion<'_>,
    drift: U,
    t_grid: &[f64],
    x_grid: &[f64],
) -> Result<FpResidualReport>
where
    F: ExponentialFamily + ?Sized,
    C: ParameterCurve + ?Sized,
    U: Fn(f64, f64) -> f64,
{
    let ht = check_uniform("t", t_grid)?;
    let hx = check_uniform("x", x_grid)?;
    if t_grid[0] <= 0.0 {
        return Err(Error::invalid("t mesh must stay at t > 0"));
    }
    let support = fam.support();
    if let Some(&x) = x_grid.iter().find(|&&x| !support.contains(x)) {
        return Err(Error::Support {
            x,
            support: support.describe(),
        });
    }
    let nt = t_grid.len();
    let nx = x_grid.len();
    let mut p = vec![0.0; nt * nx];
    let mut up = vec![0.0; nt * nx];
    let mut ap = vec![0.0; nt * nx];
    let mut theta = [0.0; MAX_STATISTICS];
    let dim = curve.dim();
    for (i, &t) in t_grid.iter().enumerate() {
        curve.theta(t, &mut theta[..dim]);
        for (k, &x) in x_grid.iter().enumerate() {
            let d = density(fam, &theta[..dim], x)?;
            let idx = i * nx + k;
            p[idx] = d;
            up[idx] = drift(t, x) * d;
            ap[idx] = diffusion.a(t, x) * d;
        }
    }
    if let Some(bad) = up.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric {
            message: format!("drift is not finite at node {bad}"),
            residual: f64::NAN,
        });
    }
    let mut raw = Vec::with_capacity((nt - 2) * (nx - 2));
    let mut norm: f64 = 0.0;
    for i in 1..nt - 1 {
        for k in 1..nx - 1 {
            let idx = i * nx + k;
            let dt = (p[idx + nx] - p[idx - nx]) / (2.0 * ht);
            let dflux = (up[idx + 1] - up[idx - 1]) / (2.0 * hx);
            let diff = (ap[idx + 1] - 2.0 * ap[idx] + ap[idx - 1]) / (hx * hx);
            norm = norm.max(dt.abs());
            raw.push(dt + dflux - 0.5 * diff);
        }
    }
    if !(norm > 0.0) {
        return Err(Error::Numeric {
            message: "density does not move on the mesh".into(),
            residual: 0.0,
        });
    }
    let residual: Vec<f64> = raw.iter().map(|r| r.abs() / norm).collect();
    let (imax, max_residual) =
        residual
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0), |acc, (i, r)| if r > acc.1 { (i, r) } else { acc });
    let argmax = (t_grid[imax / (nx - 2) + 1], x_grid[imax % (nx - 2) + 1]);
    Ok(FpResidualReport {
        t_grid: t_grid.to_vec(),
        x_grid: x_grid.to_vec(),
        residual,
        max_residual,
        argmax,
        normalization: norm,
    })
}

use std::f64::consts::PI;

use rayon::prelude::*;

use super::geometry::Geometry;
use crate::error::{Error, Result};
use crate::linalg::{self, RMat};
use crate::scf::MolecularHamiltonian;

/// Bohr radius in Ångström.
pub const BOHR_PER_ANGSTROM: f64 = 1.0 / 0.52917721092;

const EXPONENTS: [f64; 3] = [3.42525091, 0.62391373, 0.1688554];
const COEFFS: [f64; 3] = [0.15432897, 0.53532814, 0.44463454];

#[derive(Clone, Copy)]
struct Primitive {
    alpha: f64,
    /// Contraction coefficient times the primitive normalization.
    weight: f64,
}

fn primitives() -> [Primitive; 3] {
    std::array::from_fn(|k| Primitive {
        alpha: EXPONENTS[k],
        weight: COEFFS[k] * (2.0 * EXPONENTS[k] / PI).powf(0.75),
    })
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum()
}

fn product_center(a: f64, ra: &[f64; 3], b: f64, rb: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|k| (a * ra[k] + b * rb[k]) / (a + b))
}

/// Order-0 Boys function.
fn boys0(t: f64) -> f64 {
    if t < 1e-12 {
        1.0 - t / 3.0
    } else {
        0.5 * (PI / t).sqrt() * libm::erf(t.sqrt())
    }
}

/// Integrals over the symmetrically orthogonalized STO-3G 1s basis of a hydrogen-only geometry.
pub fn hydrogen_sto3g_integrals(geom: &Geometry) -> Result<MolecularHamiltonian> {
    if let Some((sym, _)) = geom.atoms.iter().find(|(s, _)| s != "H") {
        return Err(Error::Unsupported(format!(
            "built-in integrals cover hydrogen only; found '{sym}', supply an FCIDUMP file instead"
        )));
    }
    let centers: Vec<[f64; 3]> = geom
        .atoms
        .iter()
        .map(|(_, x)| x.map(|c| c * BOHR_PER_ANGSTROM))
        .collect();
    let n = centers.len();
    let prims = primitives();

    let mut s = RMat::zeros(n, n);
    let mut h = RMat::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let (ra, rb) = (&centers[a], &centers[b]);
            let rab2 = dist2(ra, rb);
            let (mut sab, mut tab, mut vab) = (0.0, 0.0, 0.0);
            for pa in &prims {
                for pb in &prims {
                    let p = pa.alpha + pb.alpha;
                    let mu = pa.alpha * pb.alpha / p;
                    let w = pa.weight * pb.weight;
                    let ov = (PI / p).powf(1.5) * (-mu * rab2).exp();
                    sab += w * ov;
                    tab += w * mu * (3.0 - 2.0 * mu * rab2) * ov;
                    let rp = product_center(pa.alpha, ra, pb.alpha, rb);
                    for rc in &centers {
                        vab -= w * 2.0 * PI / p * (-mu * rab2).exp() * boys0(p * dist2(&rp, rc));
                    }
                }
            }
            s[(a, b)] = sab;
            h[(a, b)] = tab + vab;
        }
    }

    let v: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|a| {
            let centers = &centers;
            (0..n * n * n).map(move |rest| {
                let (b, c, d) = (rest / (n * n), (rest / n) % n, rest % n);
                eri(&prims, &centers[a], &centers[b], &centers[c], &centers[d])
            })
        })
        .collect();

    let mut nuclear = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            nuclear += 1.0 / dist2(&centers[a], &centers[b]).sqrt();
        }
    }

    // S^{-1/2}
    let (vals, vecs) = linalg::eigh_real(&s);
    if vals[0] <= 1e-10 {
        return Err(Error::Numerical("overlap matrix is singular; atoms coincide".into()));
    }
    let inv_sqrt = RMat::from_diagonal(&nalgebra::DVector::from_iterator(n, vals.iter().map(|l| 1.0 / l.sqrt())));
    let x = &vecs * inv_sqrt * vecs.transpose();

    let ao = MolecularHamiltonian::new(nuclear, linalg::symmetrize_real(&h), v)?;
    Ok(ao.rotated(&x))
}

fn eri(prims: &[Primitive; 3], ra: &[f64; 3], rb: &[f64; 3], rc: &[f64; 3], rd: &[f64; 3]) -> f64 {
    let (rab2, rcd2) = (dist2(ra, rb), dist2(rc, rd));
    let mut acc = 0.0;
    for pa in prims {
        for pb in prims {
            let p = pa.alpha + pb.alpha;
            let rp = product_center(pa.alpha, ra, pb.alpha, rb);
            let kab = (-pa.alpha * pb.alpha / p * rab2).exp();
            for pc in prims {
                for pd in prims {
                    let q = pc.alpha + pd.alpha;
                    let rq = product_center(pc.alpha, rc, pd.alpha, rd);
                    let kcd = (-pc.alpha * pd.alpha / q * rcd2).exp();
                    let w = pa.weight * pb.weight * pc.weight * pd.weight;
                    acc += w * 2.0 * PI.powf(2.5) / (p * q * (p + q).sqrt())
                        * kab
                        * kcd
                        * boys0(p * q / (p + q) * dist2(&rp, &rq));
                }
            }
        }
    }
    acc
}

//! Von Neumann analysis of D2Q9 collision models.
//!
//! A perturbation `f' ∝ e^{i(k·x − ωt)}` around a uniform equilibrium evolves
//! as `f'(t+1) = G(k) f'(t)` with `G = D(k) J`, where `D(k) = diag(e^{−ik·c_i})`
//! is streaming and `J` the linearized collision. Eigenvalues `λ = e^{−iω}`
//! give `Im ω = ln|λ|` and `Re ω = −arg λ`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::collision::{checked_inverse, nocm_matrix, rm_matrix, Mat9, RelaxationConfig};
use crate::error::{LbmError, Result};
use crate::lattice::{EquilibriumOrder, Lattice, LatticeKind, CS2};

pub type CMat9 = SMatrix<Complex64, 9, 9>;
pub type CVec9 = SVector<Complex64, 9>;

/// Tolerance for counting eigenvalues equal to one.
pub const UNIT_EIGEN_TOL: f64 = 1e-9;

/// Round-off allowance when classifying a spectral radius as unstable.
pub const STABILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Bgk,
    RmMrt,
    NocmMrt,
    Home,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Bgk, Model::RmMrt, Model::NocmMrt, Model::Home];

    pub fn name(self) -> &'static str {
        match self {
            Model::Bgk => "bgk",
            Model::RmMrt => "rm_mrt",
            Model::NocmMrt => "nocm_mrt",
            Model::Home => "home",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = LbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "bgk" => Ok(Model::Bgk),
            "rm_mrt" | "rm" => Ok(Model::RmMrt),
            "nocm_mrt" | "nocm" => Ok(Model::NocmMrt),
            "home" => Ok(Model::Home),
            other => Err(LbmError::InvalidInput(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVector {
    pub kx: f64,
    pub ky: f64,
}

impl WaveVector {
    pub fn new(kx: f64, ky: f64) -> Self {
        WaveVector { kx, ky }
    }

    pub fn norm(&self) -> f64 {
        self.kx.hypot(self.ky)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizationPoint {
    pub rho_bar: f64,
    pub u_bar: [f64; 2],
    pub nu: f64,
}

impl LinearizationPoint {
    pub fn new(u_bar: [f64; 2], nu: f64) -> Self {
        LinearizationPoint {
            rho_bar: 1.0,
            u_bar,
            nu,
        }
    }
}

fn d2q9() -> Lattice {
    Lattice::new(LatticeKind::D2Q9)
}

/// `Λ_ij = ∂f^eq_i/∂ρ + Σ_α ∂f^eq_i/∂u_α (c_jα − ū_α)/ρ̄`.
pub fn jacobian_lambda(
    lat: &Lattice,
    point: &LinearizationPoint,
    order: EquilibriumOrder,
) -> Result<Mat9> {
    if lat.kind() != LatticeKind::D2Q9 {
        return Err(LbmError::InvalidInput("stability analysis is D2Q9 only".into()));
    }
    let jac = lat.equilibrium_jacobians(point.rho_bar, &point.u_bar, order)?;
    let mut l = Mat9::zeros();
    for i in 0..9 {
        for j in 0..9 {
            let c = lat.c(j);
            let mut v = jac.d_rho[i];
            for a in 0..2 {
                v += jac.d_u[a][i] * (c[a] - point.u_bar[a]) / point.rho_bar;
            }
            l[(i, j)] = v;
        }
    }
    Ok(l)
}

/// Hermite second-order basis `A₂` (9×3), consuming `[S_xx, 2S_xy, S_yy]`.
pub fn matrix_a2(lat: &Lattice) -> SMatrix<f64, 9, 3> {
    let cs4 = CS2 * CS2;
    let mut a = SMatrix::<f64, 9, 3>::zeros();
    for i in 0..9 {
        let c = lat.c(i);
        let w = lat.weights()[i] / (2.0 * cs4);
        a[(i, 0)] = w * (c[0] * c[0] - CS2);
        a[(i, 1)] = w * c[0] * c[1];
        a[(i, 2)] = w * (c[1] * c[1] - CS2);
    }
    a
}

/// Hermite third-order basis `A₃` (9×4) over `[xxx, xxy, xyy, yyy]`.
pub fn matrix_a3(lat: &Lattice) -> SMatrix<f64, 9, 4> {
    let cs6 = CS2 * CS2 * CS2;
    let mut a = SMatrix::<f64, 9, 4>::zeros();
    for i in 0..9 {
        let [x, y, _] = lat.c(i);
        let w = lat.weights()[i] / (2.0 * cs6);
        a[(i, 0)] = w * (x * x * x - 3.0 * CS2 * x);
        a[(i, 1)] = w * (x * x * y - CS2 * y);
        a[(i, 2)] = w * (x * y * y - CS2 * x);
        a[(i, 3)] = w * (y * y * y - 3.0 * CS2 * y);
    }
    a
}

/// Recursive closure `a³ = R_u a²` with Voigt input `[S_xx, 2S_xy, S_yy]`.
pub fn matrix_ru(u: [f64; 2]) -> SMatrix<f64, 4, 3> {
    let [ux, uy] = u;
    #[rustfmt::skip]
    let m = SMatrix::<f64, 4, 3>::new(
        3.0 * ux, 0.0, 0.0,
        uy,       ux,  0.0,
        0.0,      uy,  ux,
        0.0,      0.0, 3.0 * uy,
    );
    m
}

/// Second-moment projection `B` (3×9) onto `[S_xx, 2S_xy, S_yy]`.
pub fn matrix_b(lat: &Lattice) -> SMatrix<f64, 3, 9> {
    let mut b = SMatrix::<f64, 3, 9>::zeros();
    for i in 0..9 {
        let [x, y, _] = lat.c(i);
        b[(0, i)] = x * x - CS2;
        b[(1, i)] = 2.0 * x * y;
        b[(2, i)] = y * y - CS2;
    }
    b
}

/// Linearized collision `J` for one model.
pub fn collision_jacobian(
    model: Model,
    lat: &Lattice,
    point: &LinearizationPoint,
    order: EquilibriumOrder,
) -> Result<Mat9> {
    let lambda = jacobian_lambda(lat, point, order)?;
    let id = Mat9::identity();
    let mrt = |m: Mat9, rates: [f64; 9]| -> Result<Mat9> {
        let inv = checked_inverse(&m)?;
        let r = Mat9::from_diagonal(&SVector::<f64, 9>::from_column_slice(&rates));
        Ok(id - inv * r * m * (id - lambda))
    };
    match model {
        Model::Bgk => {
            let cfg = RelaxationConfig::uniform(point.nu);
            Ok(id - (id - lambda) / cfg.tau)
        }
        Model::RmMrt => mrt(rm_matrix(), RelaxationConfig::raw_moment(point.nu).rates),
        Model::NocmMrt => mrt(
            nocm_matrix(lat, point.u_bar),
            RelaxationConfig::central_moment(point.nu).rates,
        ),
        Model::Home => {
            let j_nocm = mrt(
                nocm_matrix(lat, point.u_bar),
                RelaxationConfig::central_moment(point.nu).rates,
            )?;
            let q_u = matrix_a2(lat) + matrix_a3(lat) * matrix_ru(point.u_bar);
            Ok(lambda + q_u * matrix_b(lat) * (j_nocm - lambda))
        }
    }
}

/// Precomputed analyzer for a (model, linearization point) pair.
#[derive(Debug, Clone)]
pub struct Analyzer {
    model: Model,
    point: LinearizationPoint,
    velocities: [[f64; 2]; 9],
    j: Mat9,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSample {
    pub k: WaveVector,
    pub eigenvalues: Vec<Complex64>,
    pub max_modulus: f64,
    pub max_im_omega: f64,
    pub re_omega: Vec<f64>,
}

impl Analyzer {
    pub fn new(model: Model, point: LinearizationPoint) -> Result<Self> {
        Self::with_order(model, point, EquilibriumOrder::Fourth)
    }

    pub fn with_order(
        model: Model,
        point: LinearizationPoint,
        order: EquilibriumOrder,
    ) -> Result<Self> {
        let lat = d2q9();
        let j = collision_jacobian(model, &lat, &point, order)?;
        let mut velocities = [[0.0; 2]; 9];
        for (i, v) in velocities.iter_mut().enumerate() {
            let c = lat.c(i);
            *v = [c[0], c[1]];
        }
        Ok(Analyzer {
            model,
            point,
            velocities,
            j,
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn point(&self) -> &LinearizationPoint {
        &self.point
    }

    pub fn collision_jacobian(&self) -> &Mat9 {
        &self.j
    }

    /// `G(k) = D(k) J`.
    pub fn amplification(&self, k: WaveVector) -> CMat9 {
        let mut g = CMat9::zeros();
        for i in 0..9 {
            let [cx, cy] = self.velocities[i];
            let phase = Complex64::from_polar(1.0, -(k.kx * cx + k.ky * cy));
            for j in 0..9 {
                g[(i, j)] = phase * self.j[(i, j)];
            }
        }
        g
    }

    pub fn eigenvalues(&self, k: WaveVector) -> Result<Vec<Complex64>> {
        eigenvalues(&self.amplification(k))
    }

    pub fn sample(&self, k: WaveVector) -> Result<SpectralSample> {
        let eigenvalues = self.eigenvalues(k)?;
        let max_modulus = eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
        let max_im_omega = eigenvalues
            .iter()
            .map(|l| l.norm().ln())
            .fold(f64::NEG_INFINITY, f64::max);
        let re_omega = eigenvalues.iter().map(|l| -l.arg()).collect();
        Ok(SpectralSample {
            k,
            eigenvalues,
            max_modulus,
            max_im_omega,
            re_omega,
        })
    }

    pub fn spectral_radius(&self, k: WaveVector) -> Result<f64> {
        Ok(self
            .eigenvalues(k)?
            .iter()
            .map(|l| l.norm())
            .fold(0.0, f64::max))
    }
}

/// Free-function form of [`Analyzer::amplification`] with the default equilibrium.
pub fn amplification(model: Model, k: WaveVector, point: &LinearizationPoint) -> Result<CMat9> {
    Ok(Analyzer::new(model, *point)?.amplification(k))
}

/// All eigenvalues of a complex 9×9 matrix via complex Schur decomposition.
pub fn eigenvalues(g: &CMat9) -> Result<Vec<Complex64>> {
    let schur = nalgebra::linalg::Schur::try_new(*g, f64::EPSILON, 10_000)
        .ok_or_else(|| LbmError::Numerical("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..9).map(|i| t[(i, i)]).collect())
}

/// Eigenvector for a known eigenvalue by shifted inverse iteration.
pub fn eigenvector(g: &CMat9, lambda: Complex64) -> CVec9 {
    let shift = lambda + Complex64::new(1e-10, 1e-10) * (1.0 + lambda.norm());
    let a = g - CMat9::identity() * shift;
    let lu = a.lu();
    let mut v = CVec9::from_element(Complex64::new(1.0, 0.3));
    for _ in 0..3 {
        match lu.solve(&v) {
            Some(x) => {
                let n = x.norm();
                if n == 0.0 || !n.is_finite() {
                    break;
                }
                v = x / Complex64::new(n, 0.0);
            }
            None => break,
        }
    }
    v
}

/// Number of eigenvalues within [`UNIT_EIGEN_TOL`] of one.
pub fn unit_eigenvalue_multiplicity(eigs: &[Complex64]) -> usize {
    eigs.iter()
        .filter(|l| (*l - Complex64::new(1.0, 0.0)).norm() < UNIT_EIGEN_TOL)
        .count()
}

/// Uniform grid over `[0, π]` with `n` samples including both endpoints.
pub fn k_axis(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|i| std::f64::consts::PI * i as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipationMap {
    pub model: Model,
    pub point: LinearizationPoint,
    pub k: Vec<f64>,
    /// Row-major over (ky, kx): index `iy * n + ix`.
    pub max_abs_lambda: Vec<f64>,
    pub max_im_omega: Vec<f64>,
}

impl DissipationMap {
    pub fn n(&self) -> usize {
        self.k.len()
    }

    /// Points with `max|λ| > 1 + STABILITY_TOL`.
    pub fn unstable_count(&self) -> usize {
        self.max_abs_lambda
            .iter()
            .filter(|v| **v > 1.0 + STABILITY_TOL)
            .count()
    }

    /// Zero level set of `max Im ω` as line segments in (kx, ky).
    pub fn zero_contour(&self) -> Vec<[[f64; 2]; 2]> {
        marching_squares(&self.k, &self.max_im_omega, 0.0)
    }
}

/// Scans `n × n` wavevectors over `[0, π]²`.
pub fn dissipation_map(model: Model, n: usize, point: LinearizationPoint) -> Result<DissipationMap> {
    let an = Analyzer::new(model, point)?;
    let k = k_axis(n);
    let cells: Vec<Result<(f64, f64)>> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (iy, ix) = (idx / n, idx % n);
            let s = an.sample(WaveVector::new(k[ix], k[iy]))?;
            Ok((s.max_modulus, s.max_im_omega))
        })
        .collect();
    let mut max_abs_lambda = Vec::with_capacity(n * n);
    let mut max_im_omega = Vec::with_capacity(n * n);
    for c in cells {
        let (a, b) = c?;
        max_abs_lambda.push(a);
        max_im_omega.push(b);
    }
    Ok(DissipationMap {
        model,
        point,
        k,
        max_abs_lambda,
        max_im_omega,
    })
}

fn marching_squares(k: &[f64], field: &[f64], level: f64) -> Vec<[[f64; 2]; 2]> {
    let n = k.len();
    let mut segs = Vec::new();
    if n < 2 {
        return segs;
    }
    let at = |ix: usize, iy: usize| field[iy * n + ix] - level;
    let lerp = |a: f64, b: f64, ka: f64, kb: f64| {
        let t = if a == b { 0.5 } else { a / (a - b) };
        ka + t * (kb - ka)
    };
    for iy in 0..n - 1 {
        for ix in 0..n - 1 {
            let v = [at(ix, iy), at(ix + 1, iy), at(ix + 1, iy + 1), at(ix, iy + 1)];
            let p = [
                [k[ix], k[iy]],
                [k[ix + 1], k[iy]],
                [k[ix + 1], k[iy + 1]],
                [k[ix], k[iy + 1]],
            ];
            let mut pts = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if (v[a] > 0.0) != (v[b] > 0.0) {
                    pts.push([
                        lerp(v[a], v[b], p[a][0], p[b][0]),
                        lerp(v[a], v[b], p[a][1], p[b][1]),
                    ]);
                }
            }
            if pts.len() == 2 {
                segs.push([pts[0], pts[1]]);
            } else if pts.len() == 4 {
                segs.push([pts[0], pts[1]]);
                segs.push([pts[2], pts[3]]);
            }
        }
    }
    segs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchLabel {
    AcousticPlus,
    Shear,
    AcousticMinus,
    Ghost(usize),
}

impl fmt::Display for BranchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchLabel::AcousticPlus => f.write_str("acoustic_plus"),
            BranchLabel::Shear => f.write_str("shear"),
            BranchLabel::AcousticMinus => f.write_str("acoustic_minus"),
            BranchLabel::Ghost(i) => write!(f, "ghost_{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub label: BranchLabel,
    pub re_omega: Vec<f64>,
    pub im_omega: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionCurves {
    pub model: Model,
    pub kx: Vec<f64>,
    pub branches: Vec<Branch>,
    /// Samples where eigenvector matching was ambiguous and proximity was used.
    pub flagged: Vec<bool>,
}

impl DispersionCurves {
    pub fn branch(&self, label: BranchLabel) -> Option<&Branch> {
        self.branches.iter().find(|b| b.label == label)
    }

    /// Slope of `Re ω` at the first nonzero sample.
    pub fn small_k_slope(&self, label: BranchLabel) -> Option<f64> {
        let b = self.branch(label)?;
        let i = self.kx.iter().position(|k| *k > 0.0)?;
        Some((b.re_omega[i] - b.re_omega[0]) / (self.kx[i] - self.kx[0]))
    }
}

const OVERLAP_MIN: f64 = 0.9;
const OVERLAP_MARGIN: f64 = 0.05;
const DEGENERATE_TOL: f64 = 1e-8;
const PARALLEL_TOL: f64 = 1e-6;

/// Tracks all nine modes along `ky = 0` with `n` samples over `[0, π]`.
pub fn dispersion_curves(model: Model, n: usize, point: LinearizationPoint) -> Result<DispersionCurves> {
    if n < 3 {
        return Err(LbmError::InvalidInput("dispersion needs at least 3 samples".into()));
    }
    let an = Analyzer::new(model, point)?;
    let kx = k_axis(n);
    let spectra: Vec<Result<(Vec<Complex64>, Vec<CVec9>)>> = kx
        .par_iter()
        .map(|&k| {
            let g = an.amplification(WaveVector::new(k, 0.0));
            let eig = eigenvalues(&g)?;
            let vecs = eig.iter().map(|l| eigenvector(&g, *l)).collect();
            Ok((eig, vecs))
        })
        .collect();
    let spectra: Vec<(Vec<Complex64>, Vec<CVec9>)> = spectra.into_iter().collect::<Result<_>>()?;

    // order[s][b] = index of the eigenpair at sample s that belongs to branch b.
    let mut order = vec![vec![0usize; 9]; n];
    let mut flagged = vec![false; n];
    order[1] = (0..9).collect();
    for s in 2..n {
        let prev: Vec<usize> = order[s - 1].clone();
        let (pe, pv) = &spectra[s - 1];
        let (ce, cv) = &spectra[s];
        let mut overlap = [[0.0; 9]; 9];
        for b in 0..9 {
            for j in 0..9 {
                overlap[b][j] = pv[prev[b]].dotc(&cv[j]).norm();
            }
        }
        let mut cluster = [[false; 9]; 9];
        for j in 0..9 {
            for jj in 0..9 {
                cluster[j][jj] = jj != j
                    && ((ce[j] - ce[jj]).norm() <= DEGENERATE_TOL
                        || cv[j].dotc(&cv[jj]).norm() > 1.0 - PARALLEL_TOL);
            }
        }
        let (assign, ok) = greedy_assign(&overlap, Some(&cluster));
        if ok {
            order[s] = assign;
        } else {
            flagged[s] = true;
            let mut closeness = [[0.0; 9]; 9];
            for b in 0..9 {
                for j in 0..9 {
                    closeness[b][j] = -(pe[prev[b]] - ce[j]).norm();
                }
            }
            order[s] = greedy_assign(&closeness, None).0;
        }
    }
    // k = 0 is degenerate; attach it by proximity to the first nonzero sample.
    {
        let (e1, _) = &spectra[1];
        let (e0, _) = &spectra[0];
        let mut closeness = [[0.0; 9]; 9];
        for b in 0..9 {
            for j in 0..9 {
                closeness[b][j] = -(e1[order[1][b]] - e0[j]).norm();
            }
        }
        order[0] = greedy_assign(&closeness, None).0;
    }

    // Label: the three least-damped modes at the first nonzero sample are
    // hydrodynamic, ordered by Re ω.
    let first: Vec<Complex64> = (0..9).map(|b| spectra[1].0[order[1][b]]).collect();
    let mut by_mod: Vec<usize> = (0..9).collect();
    by_mod.sort_by(|a, b| first[*b].norm().total_cmp(&first[*a].norm()));
    let mut hydro: Vec<usize> = by_mod[..3].to_vec();
    hydro.sort_by(|a, b| (-first[*b].arg()).total_cmp(&-first[*a].arg()));
    let mut labels = [BranchLabel::Ghost(0); 9];
    labels[hydro[0]] = BranchLabel::AcousticPlus;
    labels[hydro[1]] = BranchLabel::Shear;
    labels[hydro[2]] = BranchLabel::AcousticMinus;
    let mut g = 0;
    for (b, l) in labels.iter_mut().enumerate() {
        if !hydro.contains(&b) {
            *l = BranchLabel::Ghost(g);
            g += 1;
        }
    }

    let mut branches: Vec<Branch> = (0..9)
        .map(|b| {
            let mut re: Vec<f64> = Vec::with_capacity(n);
            let mut im = Vec::with_capacity(n);
            for s in 0..n {
                let l = spectra[s].0[order[s][b]];
                let mut r = -l.arg();
                if let Some(&last) = re.last() {
                    let tau = std::f64::consts::TAU;
                    r -= tau * ((r - last) / tau).round();
                }
                re.push(r);
                im.push(l.norm().ln());
            }
            Branch {
                label: labels[b],
                re_omega: re,
                im_omega: im,
            }
        })
        .collect();
    branches.sort_by_key(|b| match b.label {
        BranchLabel::AcousticPlus => 0,
        BranchLabel::Shear => 1,
        BranchLabel::AcousticMinus => 2,
        BranchLabel::Ghost(i) => 3 + i,
    });
    Ok(DispersionCurves {
        model,
        kx,
        branches,
        flagged,
    })
}

/// Greedy maximum-score matching of rows (branches) to columns (eigenpairs).
/// Given which columns form (near-)degenerate clusters, reports failure when
/// a match is weak or nearly tied with a column outside its cluster.
fn greedy_assign(score: &[[f64; 9]; 9], cluster: Option<&[[bool; 9]; 9]>) -> (Vec<usize>, bool) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(81);
    for (b, row) in score.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            pairs.push((*s, b, j));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut assign = vec![usize::MAX; 9];
    let mut used = [false; 9];
    let mut ok = true;
    for (s, b, j) in pairs {
        if assign[b] != usize::MAX || used[j] {
            continue;
        }
        assign[b] = j;
        used[j] = true;
        if let Some(cluster) = cluster {
            // Inside a degenerate cluster any basis is valid.
            if cluster[j].iter().any(|c| *c) {
                continue;
            }
            let runner_up = (0..9)
                .filter(|&jj| jj != j && !used[jj])
                .map(|jj| score[b][jj])
                .fold(0.0, f64::max);
            if s < OVERLAP_MIN || s - runner_up < OVERLAP_MARGIN {
                ok = false;
            }
        }
    }
    (assign, ok)
}

/// Analytic hydrodynamic modes for a background flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalModes {
    pub shear: Complex64,
    pub acoustic_plus: Complex64,
    pub acoustic_minus: Complex64,
}

/// Linearized Navier–Stokes shear and acoustic modes.
pub fn theoretical_modes(k: [f64; 2], u: [f64; 2], nu: f64, mu_v: f64, dims: usize) -> TheoreticalModes {
    let k2 = k[0] * k[0] + k[1] * k[1];
    let kn = k2.sqrt();
    let ku = k[0] * u[0] + k[1] * u[1];
    let cs = CS2.sqrt();
    let d = dims as f64;
    let damp = k2 * ((d - 1.0) / d * nu + mu_v / 2.0);
    TheoreticalModes {
        shear: Complex64::new(ku, -k2 * nu),
        acoustic_plus: Complex64::new(ku + kn * cs, -damp),
        acoustic_minus: Complex64::new(ku - kn * cs, -damp),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lambda_row_structure_at_rest() {
        let lat = d2q9();
        let p = LinearizationPoint::new([0.0, 0.0], 1e-3);
        let l = jacobian_lambda(&lat, &p, EquilibriumOrder::Fourth).unwrap();
        // A density perturbation shaped like the weights is reproduced exactly;
        // a flat perturbation carries mass 9 and no momentum at rest.
        let w = SVector::<f64, 9>::from_column_slice(lat.weights());
        let ones = SVector::<f64, 9>::from_element(1.0);
        let vw = l * w;
        let v1 = l * ones;
        for i in 0..9 {
            assert_abs_diff_eq!(vw[i], lat.weights()[i], epsilon = 1e-15);
            assert_abs_diff_eq!(v1[i], 9.0 * lat.weights()[i], epsilon = 1e-14);
        }
        let rank = l.svd(false, false).singular_values.iter().filter(|s| **s > 1e-12).count();
        assert!(rank <= 3);
    }

    #[test]
    fn eigen_residuals_are_small() {
        let an = Analyzer::new(Model::Home, LinearizationPoint::new([0.1, 0.05], 1e-3)).unwrap();
        let g = an.amplification(WaveVector::new(0.7, 1.3));
        for l in eigenvalues(&g).unwrap() {
            let det = (g - CMat9::identity() * l).determinant().norm();
            assert!(det < 1e-10, "det {det}");
        }
    }

    #[test]
    fn theory_examples() {
        let m = theoretical_modes([0.1, 0.0], [0.0, 0.0], 1e-3, 0.0, 2);
        assert_abs_diff_eq!(m.acoustic_plus.re, 0.1 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(m.acoustic_plus.im, -0.01 * 0.5e-3, epsilon = 1e-18);
        assert_abs_diff_eq!(m.shear.im, -0.01 * 1e-3, epsilon = 1e-18);
        let m = theoretical_modes([0.3, 0.0], [0.2, 0.0], 1e-3, 0.0, 2);
        assert_abs_diff_eq!(m.shear.re, 0.06, epsilon = 1e-15);
    }

    #[test]
    fn k_zero_conserves_three_modes() {
        for model in Model::ALL {
            for u in [[0.0, 0.0], [0.1, 0.1], [0.2, -0.1]] {
                let an = Analyzer::new(model, LinearizationPoint::new(u, 1e-4)).unwrap();
                let e = an.eigenvalues(WaveVector::new(0.0, 0.0)).unwrap();
                assert!(unit_eigenvalue_multiplicity(&e) >= 3, "{model} {u:?} {e:?}");
            }
        }
    }

    #[test]
    fn contour_of_plane_is_a_line() {
        let k = k_axis(5);
        let field: Vec<f64> = (0..25).map(|i| (i % 5) as f64 - 2.5).collect();
        let segs = marching_squares(&k, &field, 0.0);
        assert_eq!(segs.len(), 4);
        for s in segs {
            assert_abs_diff_eq!(s[0][0], std::f64::consts::PI * 2.5 / 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn model_names_round_trip() {
        for m in Model::ALL {
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
        }
        assert!("lbgk".parse::<Model>().is_err());
    }
}

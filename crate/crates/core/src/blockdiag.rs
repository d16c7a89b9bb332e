//! Shearing and formal block diagonalization of the connection at `q₁ = ∞`,
//! the deformed frames `f_i`, `g_i` of the `(2,1)` flip, and the pairing and
//! weight-zero checks built on them.
//!
//! Coordinates are `x = 1/q₁`, `y = q₁q₂` with `x = u^d`. The systems are read
//! as `z ∂ S = A S` for a fundamental solution `S`; a gauge `S = P Z` turns `A`
//! into `E = P⁻¹(A P − z ∂P)`.

use std::sync::Arc;

use flipqh_series::{q, qi, QMatrix, Rational, Series, SeriesMatrix, VarTable, NO_CAP};
use nalgebra::Complex;
use num_traits::{One, Zero};
use serde_json::json;

use crate::cohring::{CaseTag, FlipGeometry};
use crate::error::{FlipError, Result};
use crate::pfsys::ConnectionMatrices;
use crate::report::CheckReport;

fn sign(n: usize) -> i64 {
    if n.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `{x (Laurent, weight −d), y (weight r+2), z}`.
pub fn xy_table(geom: &FlipGeometry) -> Arc<VarTable> {
    VarTable::of(&[("x", -(geom.d() as i64), true), ("y", geom.r as i64 + 2, false), ("z", 1, false)])
}

/// `{u (Laurent, weight −1), y, z}` with `x = u^d`.
pub fn u_table(geom: &FlipGeometry) -> Arc<VarTable> {
    VarTable::of(&[("u", -1, true), ("y", geom.r as i64 + 2, false), ("z", 1, false)])
}

/// `{y, z}`, the coefficient table of a single `u`-order.
pub fn yz_table(geom: &FlipGeometry) -> Arc<VarTable> {
    VarTable::of(&[("y", geom.r as i64 + 2, false), ("z", 1, false)])
}

fn require_kernel(geom: &FlipGeometry) -> Result<()> {
    if geom.case_tag() == CaseTag::Flop {
        return Err(FlipError::Geometry("flops have no kernel block at q1 = infinity".into()));
    }
    Ok(())
}

/// `(M_x, M_y) = (C₂ − C₁, C₂)` in `x = 1/q₁`, `y = q₁q₂`: the matrices of
/// `z x∂_x` and `z y∂_y`.
pub fn to_xy(cm: &ConnectionMatrices) -> Result<(SeriesMatrix, SeriesMatrix)> {
    require_kernel(&cm.geom)?;
    let t = xy_table(&cm.geom);
    let bind =
        [("q1", Series::mono(&t, qi(1), &[("x", -1)])?), ("q2", Series::mono(&t, qi(1), &[("x", 1), ("y", 1)])?)];
    Ok((cm.b().substitute(&bind, &t)?, cm.c2.substitute(&bind, &t)?))
}

/// Connection after the gauge `Y = diag(1^{R′}, u⁰, …, u^{d−1})`.
///
/// `d1` is the matrix of `z u∂_u` and `d2` that of `z y∂_y`.
#[derive(Debug, Clone)]
pub struct ShearedSystem {
    pub geom: FlipGeometry,
    pub d1: SeriesMatrix,
    pub d2: SeriesMatrix,
}

/// Shear `(C₁, C₂)` into `u`: `D₁ = d·Y⁻¹M_xY − z·diag(0^{R′}, 0, …, d−1)`, `D₂ = Y⁻¹C₂Y`.
pub fn shear(cm: &ConnectionMatrices) -> Result<ShearedSystem> {
    let geom = &cm.geom;
    require_kernel(geom)?;
    let d = geom.d() as i32;
    let t = u_table(geom);
    let bind =
        [("q1", Series::mono(&t, qi(1), &[("u", -d)])?), ("q2", Series::mono(&t, qi(1), &[("u", d), ("y", 1)])?)];
    let mx = cm.b().substitute(&bind, &t)?;
    let my = cm.c2.substitute(&bind, &t)?;
    let n = geom.big_r();
    let rp = geom.big_rp();
    let a = |i: usize| if i < rp { 0 } else { (i - rp) as i32 };
    let z = Series::var(&t, "z")?;
    let conj = |m: &SeriesMatrix| -> Result<SeriesMatrix> {
        let mut out = SeriesMatrix::zeros(&t, n, n);
        for (i, j, s) in m.entries() {
            out.set(i, j, s.shift(&[a(j) - a(i), 0, 0])?);
        }
        Ok(out)
    };
    let mut d1 = conj(&mx)?.scale(&qi(d as i64));
    for i in rp..n {
        let cur = d1.get(i, i).clone();
        d1.set(i, i, &cur - &z.scale(&qi(a(i) as i64)));
    }
    let d2 = conj(&my)?;
    let sys = ShearedSystem { geom: geom.clone(), d1, d2 };
    sys.validate()?;
    Ok(sys)
}

impl ShearedSystem {
    /// Poincaré rank one in `u`, `D₂` holomorphic, `D₁^{21}` a power series.
    pub fn validate(&self) -> Result<()> {
        let rp = self.geom.big_rp();
        let low = |m: &SeriesMatrix, f: &dyn Fn(usize, usize) -> bool| {
            m.entries().filter(|(i, j, _)| f(*i, *j)).filter_map(|(_, _, s)| s.min_exp("u")).min().unwrap_or(0)
        };
        if low(&self.d1, &|_, _| true) < -1 {
            return Err(FlipError::Invariant("sheared D1 has a pole of order above one".into()));
        }
        if low(&self.d2, &|_, _| true) < 0 {
            return Err(FlipError::Invariant("sheared D2 is not holomorphic in u".into()));
        }
        if low(&self.d1, &|i, j| i >= rp && j < rp) < 0 {
            return Err(FlipError::Invariant("D1 block (2,1) has negative u-powers".into()));
        }
        Ok(())
    }

    /// `u⁰`-coefficient of `u·D₁`.
    pub fn leading(&self) -> Result<QMatrix> {
        let c = u_coefficients(&self.d1, 1, 0, &yz_table(&self.geom))?;
        let m = &c[0];
        if m.entries().any(|(_, _, s)| s.terms().any(|(e, _)| e.iter().any(|&x| x != 0))) {
            return Err(FlipError::Invariant("leading term of u D1 depends on y or z".into()));
        }
        Ok(m.constant_part())
    }

    /// Conjugate by a constant block-diagonal change of frame `S = T S′`.
    pub fn conjugate(&self, t: &QMatrix) -> Result<ShearedSystem> {
        let tab = self.d1.table().clone();
        let ts = SeriesMatrix::from_q(&tab, t);
        let ti = SeriesMatrix::from_q(&tab, &t.inverse()?);
        Ok(ShearedSystem { geom: self.geom.clone(), d1: ti.mul(&self.d1)?.mul(&ts)?, d2: ti.mul(&self.d2)?.mul(&ts)? })
    }
}

/// Coefficient matrices of `u^k` in `u^{shift}·m` for `k = 0..=order`, over `{y, z}`.
pub fn u_coefficients(m: &SeriesMatrix, shift: i32, order: usize, yz: &Arc<VarTable>) -> Result<Vec<SeriesMatrix>> {
    let mut out = vec![SeriesMatrix::zeros(yz, m.rows(), m.cols()); order + 1];
    for (i, j, s) in m.entries() {
        for (e, c) in s.terms() {
            let k = e[0] + shift;
            if k < 0 {
                return Err(FlipError::Invariant(format!("u-power {k} below the expansion start")));
            }
            if k as usize > order {
                continue;
            }
            let t = Series::monomial(yz, &[e[1], e[2]], c.clone())?;
            let cur = out[k as usize].get(i, j).clone();
            out[k as usize].set(i, j, &cur + &t);
        }
    }
    Ok(out)
}

/// Reassemble `Σ_k m_k u^{k+shift}` over the `u` table with `u`-cap `cap`.
pub fn u_assemble(parts: &[SeriesMatrix], shift: i32, cap: i32, ut: &Arc<VarTable>) -> Result<SeriesMatrix> {
    let (r, c) = (parts[0].rows(), parts[0].cols());
    let mut out = SeriesMatrix::zeros(ut, r, c).truncate(&[cap, NO_CAP, NO_CAP]);
    for (k, p) in parts.iter().enumerate() {
        for (i, j, s) in p.entries() {
            if s.is_zero() {
                continue;
            }
            let terms: Vec<(Vec<i32>, Rational)> =
                s.terms().map(|(e, v)| (vec![k as i32 + shift, e[0], e[1]], v.clone())).collect();
            let add = Series::from_terms(ut, &[cap, NO_CAP, NO_CAP], terms)?;
            let cur = out.get(i, j).clone();
            out.set(i, j, &cur + &add);
        }
    }
    Ok(out)
}

/// Whether the kernel eigenvalues `−ω_j` are rational, so the kernel block
/// can be split into scalars over `Q`.
pub fn kernel_diagonalizable_over_q(geom: &FlipGeometry) -> bool {
    geom.d() == 1 || (geom.d() == 2 && geom.rp % 2 == 1)
}

/// Kernel change of frame with columns `(ω^{−i})_i`, for rational `ω`.
fn kernel_eigenbasis(geom: &FlipGeometry) -> QMatrix {
    let d = geom.d();
    let omegas: Vec<Rational> = match d {
        1 => vec![qi(sign(geom.rp + 1))],
        _ => vec![qi(1), qi(-1)],
    };
    QMatrix::from_fn(d, d, |i, j| omegas[j].pow(-(i as i32)))
}

/// Result of the formal block diagonalization.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub geom: FlipGeometry,
    pub order: usize,
    /// Block sizes: the image block first, then the kernel block(s).
    pub blocks: Vec<usize>,
    /// Constant kernel change of frame applied before the recursion.
    pub kernel_basis: QMatrix,
    /// Gauge `P = Σ_l P_l u^l` with `P₀ = I` and `P_l` off-block-diagonal.
    pub p: SeriesMatrix,
    /// Block-diagonal matrix of `z u∂_u`.
    pub e1: SeriesMatrix,
    /// Block-diagonal matrix of `z y∂_y`.
    pub e2: SeriesMatrix,
    /// Coefficients `Ē_l` of `u·E₁`.
    pub ebar: Vec<SeriesMatrix>,
}

fn block_ranges(blocks: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut s = 0;
    for &b in blocks {
        out.push((s, s + b));
        s += b;
    }
    out
}

/// `D̄₀P_l − P_lD̄₀ + H_l − Ē_l = 0` solved order by order.
///
/// `dbar[k]` is the `u^k` coefficient of `u·D₁`; `D̄₀` must vanish on the first
/// block and be invertible on the others, which must be scalars if more than one.
pub fn wasow_core(
    dbar: &[SeriesMatrix],
    blocks: &[usize],
    order: usize,
) -> Result<(Vec<SeriesMatrix>, Vec<SeriesMatrix>)> {
    let t = dbar[0].table().clone();
    let n = dbar[0].rows();
    let ranges = block_ranges(blocks);
    let d0 = dbar[0].constant_part();
    let sub = |m: &QMatrix, (a0, a1): (usize, usize), (b0, b1): (usize, usize)| {
        QMatrix::from_fn(a1 - a0, b1 - b0, |i, j| m.get(a0 + i, b0 + j).clone())
    };
    for (a, &ra) in ranges.iter().enumerate() {
        for (b, &rb) in ranges.iter().enumerate() {
            let blk = sub(&d0, ra, rb);
            if (a != b || a == 0) && !blk.is_zero() {
                return Err(FlipError::Invariant("leading term is not block diagonal with a zero image block".into()));
            }
        }
    }
    let inv: Vec<Option<SeriesMatrix>> = ranges
        .iter()
        .enumerate()
        .map(|(a, &r)| if a == 0 { Ok(None) } else { Ok(Some(SeriesMatrix::from_q(&t, &sub(&d0, r, r).inverse()?))) })
        .collect::<Result<_>>()?;
    if ranges.len() > 2 && blocks[1..].iter().any(|&b| b != 1) {
        return Err(FlipError::Invariant("several kernel blocks must be scalar".into()));
    }
    let z = Series::var(&t, "z")?;
    let zero = SeriesMatrix::zeros(&t, n, n);
    let mut p = vec![SeriesMatrix::identity(&t, n)];
    let mut e = vec![dbar[0].clone()];
    for l in 1..=order {
        let mut h = p[l - 1].scale_series(&z).scale(&qi(-(l as i64 - 1)));
        for k in 1..=l {
            if let Some(dk) = dbar.get(k) {
                h = h.add(&dk.mul(&p[l - k])?)?;
            }
        }
        for k in 1..l {
            h = h.sub(&p[l - k].mul(&e[k])?)?;
        }
        let mut pl = zero.clone();
        let mut el = zero.clone();
        for (a, &(a0, a1)) in ranges.iter().enumerate() {
            for (b, &(b0, b1)) in ranges.iter().enumerate() {
                let hab = h.block(a0, a1, b0, b1);
                if a == b {
                    el.set_block(a0, b0, &hab);
                    continue;
                }
                let pab = match (&inv[a], &inv[b]) {
                    (None, Some(db)) => hab.mul(db)?,
                    (Some(da), None) => da.mul(&hab)?.scale(&-Rational::one()),
                    (Some(_), Some(_)) => {
                        let la = d0.get(a0, a0).clone();
                        let lb = d0.get(b0, b0).clone();
                        if la == lb {
                            return Err(FlipError::Obstruction("repeated kernel eigenvalue".into()));
                        }
                        hab.scale(&(Rational::one() / (lb - la)))
                    }
                    (None, None) => unreachable!("only one zero block"),
                };
                pl.set_block(a0, b0, &pab);
            }
        }
        p.push(pl);
        e.push(el);
    }
    Ok((p, e))
}

/// Block diagonalize a sheared system to `u`-order `order`.
///
/// With `diagonalize` and rational `ω`, the kernel block is split into scalars.
pub fn wasow_blockdiag(sys: &ShearedSystem, order: usize, diagonalize: bool) -> Result<Decomposition> {
    let geom = &sys.geom;
    let d = geom.d();
    let rp = geom.big_rp();
    let n = geom.big_r();
    let split = diagonalize && kernel_diagonalizable_over_q(geom) && d > 1;
    let kernel_basis = if split || (diagonalize && d == 1) { kernel_eigenbasis(geom) } else { QMatrix::identity(d) };
    let mut full = QMatrix::identity(n);
    for i in 0..d {
        for j in 0..d {
            full.set(rp + i, rp + j, kernel_basis.get(i, j).clone());
        }
    }
    let sys = if full == QMatrix::identity(n) { sys.clone() } else { sys.conjugate(&full)? };
    let blocks: Vec<usize> =
        if split { std::iter::once(rp).chain(std::iter::repeat_n(1, d)).collect() } else { vec![rp, d] };
    decompose(&sys, &blocks, order, kernel_basis)
}

/// Run the recursion on `sys` with the given blocks and derive `E₂` from flatness.
pub fn decompose(sys: &ShearedSystem, blocks: &[usize], order: usize, kernel_basis: QMatrix) -> Result<Decomposition> {
    let geom = &sys.geom;
    let yz = yz_table(geom);
    let ut = sys.d1.table().clone();
    let dbar = u_coefficients(&sys.d1, 1, order, &yz)?;
    let (p_parts, e_parts) = wasow_core(&dbar, blocks, order)?;
    let cap = order as i32;
    let p = u_assemble(&p_parts, 0, cap, &ut)?;
    let e1 = u_assemble(&e_parts, -1, cap - 1, &ut)?;
    // E₂ = P⁻¹(D₂P − z y∂_y P)
    let z = Series::var(&ut, "z")?;
    let rhs = sys.d2.mul(&p)?.sub(&p.log_deriv("y")?.scale_series(&z))?;
    let e2 = p.inverse()?.mul(&rhs)?;
    if !e2.is_block_diagonal(blocks) {
        return Err(FlipError::Invariant("E2 is not block diagonal".into()));
    }
    Ok(Decomposition { geom: geom.clone(), order, blocks: blocks.to_vec(), kernel_basis, p, e1, e2, ebar: e_parts })
}

impl Decomposition {
    /// `D₁P − z u∂_uP − P E₁` on its determined region.
    pub fn residual_1(&self, sys: &ShearedSystem) -> Result<SeriesMatrix> {
        let sys = self.frame_system(sys)?;
        let z = Series::var(self.p.table(), "z")?;
        Ok(sys.d1.mul(&self.p)?.sub(&self.p.log_deriv("u")?.scale_series(&z))?.sub(&self.p.mul(&self.e1)?)?)
    }

    /// `D₂P − z y∂_yP − P E₂` on its determined region.
    pub fn residual_2(&self, sys: &ShearedSystem) -> Result<SeriesMatrix> {
        let sys = self.frame_system(sys)?;
        let z = Series::var(self.p.table(), "z")?;
        Ok(sys.d2.mul(&self.p)?.sub(&self.p.log_deriv("y")?.scale_series(&z))?.sub(&self.p.mul(&self.e2)?)?)
    }

    fn frame_system(&self, sys: &ShearedSystem) -> Result<ShearedSystem> {
        let rp = self.geom.big_rp();
        let d = self.geom.d();
        let mut full = QMatrix::identity(self.geom.big_r());
        for i in 0..d {
            for j in 0..d {
                full.set(rp + i, rp + j, self.kernel_basis.get(i, j).clone());
            }
        }
        if self.kernel_basis == QMatrix::identity(d) {
            Ok(sys.clone())
        } else {
            sys.conjugate(&full)
        }
    }

    pub fn image_block(&self, k: usize) -> SeriesMatrix {
        let rp = self.geom.big_rp();
        let m = if k == 1 { &self.e1 } else { &self.e2 };
        m.block(0, rp, 0, rp)
    }

    pub fn kernel_block(&self, k: usize) -> SeriesMatrix {
        let rp = self.geom.big_rp();
        let n = self.geom.big_r();
        let m = if k == 1 { &self.e1 } else { &self.e2 };
        m.block(rp, n, rp, n)
    }

    /// `E₁^{11}` only involves `u`-powers divisible by `d`, i.e. it is a series in `x`.
    pub fn image_block_in_x(&self) -> bool {
        let d = self.geom.d() as i32;
        [1, 2]
            .iter()
            .all(|&k| self.image_block(k).entries().all(|(_, _, s)| s.terms().all(|(e, _)| e[0].rem_euclid(d) == 0)))
    }

    /// Row `i` of `P^{21}` only involves `u`-powers `≡ −i (mod d)`.
    pub fn lower_gauge_factorizes(&self) -> bool {
        let d = self.geom.d() as i32;
        let rp = self.geom.big_rp();
        if self.kernel_basis != QMatrix::identity(self.geom.d()) {
            return true;
        }
        self.p
            .block(rp, self.geom.big_r(), 0, rp)
            .entries()
            .all(|(i, _, s)| s.terms().all(|(e, _)| (e[0] + i as i32).rem_euclid(d) == 0))
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "r": self.geom.r, "rp": self.geom.rp, "order": self.order, "blocks": self.blocks,
            "P": self.p.to_json(), "E1": self.e1.to_json(), "E2": self.e2.to_json(),
        })
    }
}

/// The leading kernel block of `u·E₁`, divided by `d`, has characteristic
/// polynomial `λ^d − (−1)^{d+r′+1}`: its eigenvalues are `−ω_j`, `ω_j^d = (−1)^{r′+1}`,
/// so the kernel eigenvalues of `z x∂_x` start with `−ω_j/u`.
pub fn z0_kernel_eigenvalue_check(dec: &Decomposition) -> CheckReport {
    let g = &dec.geom;
    let d = g.d();
    let rp = g.big_rp();
    let lead = dec.ebar[0].constant_part();
    let k = QMatrix::from_fn(d, d, |i, j| lead.get(rp + i, rp + j) / qi(d as i64));
    let cp = k.charpoly();
    let mut want = vec![Rational::zero(); d + 1];
    want[d] = Rational::one();
    want[0] = -qi(sign(d + g.rp + 1));
    let ok = cp == want;
    CheckReport::new(
        &format!("kernel eigenvalue leading term ({}, {})", g.r, g.rp),
        "leading term -omega_j / u, omega^d = (-1)^(r'+1)",
        ok,
        json!({"charpoly": cp.iter().map(|c| c.to_string()).collect::<Vec<_>>()}),
    )
}

/// Eigenvectors `K_j = Σ_i ω_j^{−i} u^i κ_i` of the leading kernel block.
#[derive(Debug, Clone)]
pub struct KernelEigenFrame {
    pub omegas: Vec<Complex<f64>>,
    /// `vectors[j][i] = ω_j^{−i}`.
    pub vectors: Vec<Vec<Complex<f64>>>,
}

impl KernelEigenFrame {
    pub fn new(geom: &FlipGeometry) -> Self {
        let d = geom.d();
        let base = if geom.rp.is_multiple_of(2) { std::f64::consts::PI } else { 0.0 };
        let omegas: Vec<Complex<f64>> = (0..d)
            .map(|j| Complex::from_polar(1.0, (base + 2.0 * std::f64::consts::PI * j as f64) / d as f64))
            .collect();
        let vectors = omegas.iter().map(|w| (0..d).map(|i| w.powi(-(i as i32))).collect()).collect();
        KernelEigenFrame { omegas, vectors }
    }

    /// Largest `|M K_j + ω_j K_j|` for the leading kernel block `M` of `u D₁ / d`.
    pub fn residual(&self, leading_kernel: &QMatrix) -> f64 {
        let d = leading_kernel.rows();
        let m = leading_kernel.to_f64();
        let mut worst = 0.0f64;
        for (w, v) in self.omegas.iter().zip(&self.vectors) {
            for i in 0..d {
                let mv: Complex<f64> = (0..d).map(|j| v[j] * m[i * d + j]).sum();
                worst = worst.max((mv + w * v[i]).norm());
            }
        }
        worst
    }
}

// ---------------------------------------------------------------------------
// The (2,1) flip in the orthogonal w-frame

fn geom21() -> FlipGeometry {
    FlipGeometry { r: 2, rp: 1 }
}

/// `(A₁^w, A₂^w)` for `z x∂_x` and `z y∂_y` in the frame `w = vT`.
pub fn w_frame_matrices(cm: &ConnectionMatrices) -> Result<(SeriesMatrix, SeriesMatrix)> {
    if (cm.geom.r, cm.geom.rp) != (2, 1) {
        return Err(FlipError::Geometry("the w-frame is defined for (2,1) only".into()));
    }
    let (mx, my) = to_xy(cm)?;
    let t = cm.geom.w_change()?;
    let tab = mx.table().clone();
    let ts = SeriesMatrix::from_q(&tab, &t);
    let ti = SeriesMatrix::from_q(&tab, &t.inverse()?);
    Ok((ti.mul(&mx)?.mul(&ts)?, ti.mul(&my)?.mul(&ts)?))
}

/// Sheared `(2,1)` system in the w-frame (`d = 1`, so `u = x`).
pub fn w_frame_sheared(cm: &ConnectionMatrices) -> Result<ShearedSystem> {
    let sys = shear(cm)?;
    sys.conjugate(&cm.geom.w_change()?)
}

/// Border vectors of the `(2,1)` gauge `P = [[I, g], [f, 1]]`.
#[derive(Debug, Clone)]
pub struct BorderSolution {
    /// `f₁ … f₈`.
    pub f: Vec<Series>,
    /// `g₁ … g₈`.
    pub g: Vec<Series>,
    /// `E₁^{22} = −1/x + A₁^{21}g`.
    pub e1_22: Series,
    /// `E₂^{22} = A₂^{21}g`.
    pub e2_22: Series,
    /// `E_k^{11} = A_k^{11} + A_k^{12} f`.
    pub e11: [SeriesMatrix; 2],
    pub caps: [i32; 3],
}

/// Solve the border equations of the `(2,1)` flip by `x`-adic fixed-point iteration:
/// `g = x(z x∂_x g − A¹¹g − A¹² + g(A²¹g))`, `f = x(A²¹ − fA¹¹ − (fA¹²)f − z x∂_x f)`.
pub fn borderline_solve_21(cm: &ConnectionMatrices, caps: [i32; 3]) -> Result<BorderSolution> {
    let (a1, a2) = w_frame_matrices(cm)?;
    let t = a1.table().clone();
    let a1 = a1.truncate(&caps);
    let a2 = a2.truncate(&caps);
    let a11 = a1.block(0, 8, 0, 8);
    let a12 = a1.block(0, 8, 8, 9);
    let a21 = a1.block(8, 9, 0, 8);
    let x = Series::var(&t, "x")?;
    let z = Series::var(&t, "z")?;
    let xm = |m: &SeriesMatrix| m.scale_series(&x).truncate(&caps);
    let zd = |m: &SeriesMatrix| -> Result<SeriesMatrix> { Ok(m.log_deriv("x")?.scale_series(&z)) };
    let mut g = SeriesMatrix::zeros(&t, 8, 1).truncate(&caps);
    let mut f = SeriesMatrix::zeros(&t, 1, 8).truncate(&caps);
    let limit = caps[0].max(0) as usize + 4;
    let mut converged = false;
    for _ in 0..limit {
        let a21g = a21.mul(&g)?;
        let g_new = xm(&zd(&g)?.sub(&a11.mul(&g)?)?.sub(&a12)?.add(&g.mul(&a21g)?)?);
        let fa12 = f.mul(&a12)?;
        let f_new = xm(&a21.sub(&f.mul(&a11)?)?.sub(&fa12.mul(&f)?)?.sub(&zd(&f)?)?);
        if g_new == g && f_new == f {
            converged = true;
            break;
        }
        g = g_new;
        f = f_new;
    }
    if !converged {
        return Err(FlipError::Obstruction("border iteration did not stabilize".into()));
    }
    let minus_inv_x = Series::mono(&t, qi(-1), &[("x", -1)])?;
    let e1_22 = &minus_inv_x + a21.mul(&g)?.get(0, 0);
    let e2_22 = a2.block(8, 9, 0, 8).mul(&g)?.get(0, 0).clone();
    let e11_1 = a11.add(&a12.mul(&f)?)?;
    let e11_2 = a2.block(0, 8, 0, 8).add(&a2.block(0, 8, 8, 9).mul(&f)?)?;
    Ok(BorderSolution {
        f: (0..8).map(|i| f.get(0, i).clone()).collect(),
        g: (0..8).map(|i| g.get(i, 0).clone()).collect(),
        e1_22,
        e2_22,
        e11: [e11_1, e11_2],
        caps,
    })
}

/// `z ↦ −z`.
pub fn flip_z(s: &Series) -> Result<Series> {
    let zi = s.table().index("z")?;
    Ok(s.map_coeffs(|e, c| if e[zi] % 2 == 0 { c.clone() } else { -c.clone() }))
}

impl BorderSolution {
    /// The gauge `P = [[I, g], [f, 1]]`.
    pub fn gauge(&self) -> SeriesMatrix {
        let t = self.f[0].table().clone();
        let mut p = SeriesMatrix::identity(&t, 9).truncate(&self.caps);
        for i in 0..8 {
            p.set(i, 8, self.g[i].clone());
            p.set(8, i, self.f[i].clone());
        }
        p
    }

    /// `A_k P − z x_k∂_{x_k} P − P E_k` for `k = 1, 2` (`x₁ = x`, `x₂ = y`) in
    /// the w-frame, with `E_k` the block-diagonal reduced matrices.
    pub fn gauge_residuals(&self, cm: &ConnectionMatrices) -> Result<[SeriesMatrix; 2]> {
        let (a1, a2) = w_frame_matrices(cm)?;
        let p = self.gauge();
        let t = p.table().clone();
        let z = Series::var(&t, "z")?;
        let mut out = Vec::with_capacity(2);
        for (k, (a, var)) in [(a1, "x"), (a2, "y")].into_iter().enumerate() {
            let mut e = SeriesMatrix::zeros(&t, 9, 9);
            e.set_block(0, 0, &self.e11[k]);
            e.set(8, 8, if k == 0 { self.e1_22.clone() } else { self.e2_22.clone() });
            let r = a.mul(&p)?.sub(&p.log_deriv(var)?.scale_series(&z))?.sub(&p.mul(&e)?)?;
            out.push(r);
        }
        let [r1, r2]: [SeriesMatrix; 2] = out.try_into().expect("two directions");
        Ok([r1, r2])
    }

    /// `f_i(z) = −g_{9−i}(−z)`.
    pub fn antisymmetry(&self) -> Result<bool> {
        for i in 0..8 {
            let rhs = -flip_z(&self.g[7 - i])?;
            if !self.f[i].agrees_with(&rhs) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Polarized Gram matrix `P(z)ᵀ G P(−z)` of the deformed frame.
    pub fn polarized_gram(&self, gram: &QMatrix) -> Result<SeriesMatrix> {
        let p = self.gauge();
        let t = p.table().clone();
        let pm = p.try_map(|s| {
            flip_z(s).map_err(|e| match e {
                FlipError::Series(s) => s,
                other => flipqh_series::SeriesError::Shape(other.to_string()),
            })
        })?;
        Ok(p.transpose().mul(&SeriesMatrix::from_q(&t, gram))?.mul(&pm)?)
    }

    /// `det P = 1 − Σ f_i g_i`.
    pub fn det_p(&self) -> Series {
        let t = self.f[0].table().clone();
        self.f.iter().zip(&self.g).fold(Series::one(&t).truncate(&self.caps), |acc, (f, g)| &acc - &(f * g))
    }
}

/// Checks the polarized pairing of the deformed frame against the constant Gram.
///
/// `((w̃_i, K̃₁)) = 0`, `((w̃_i, w̃_j)) = G_{ij} + f_i(z) f_j(−z)` and
/// `((K̃₁, K̃₁)) = det P`.
pub fn polarized_pairing_check(sol: &BorderSolution, w_gram: &QMatrix) -> Result<CheckReport> {
    let m = sol.polarized_gram(w_gram)?;
    let t = m.table().clone();
    let mut bad = Vec::new();
    for i in 0..8 {
        if !m.get(i, 8).is_zero() || !m.get(8, i).is_zero() {
            bad.push(format!("(w{}, K)", i + 1));
        }
        for j in 0..8 {
            let want = &Series::constant(&t, w_gram.get(i, j).clone()) + &(&sol.f[i] * &flip_z(&sol.f[j])?);
            if !m.get(i, j).agrees_with(&want) {
                bad.push(format!("(w{}, w{})", i + 1, j + 1));
            }
        }
    }
    let det_ok = m.get(8, 8).agrees_with(&sol.det_p());
    Ok(CheckReport::new(
        "polarized pairing (2,1)",
        "((w_i, K)) = 0 and ((K, K)) = det P = 1 - sum f_i g_i",
        bad.is_empty() && det_ok,
        json!({"violations": bad, "det_matches": det_ok}),
    ))
}

/// Gram matrix of the w-frame (`δ_{9,i+j}` on the image, `1` on `K₁`).
pub fn w_frame_gram() -> Result<QMatrix> {
    let g = geom21();
    let t = g.w_change()?;
    Ok(t.transpose().mul(&g.frame_pairing()).mul(&t))
}

// ---------------------------------------------------------------------------
// Weight-zero coordinates s = zx, t = x⁴y

/// `x`-exponents of `f_i` relative to the weight-zero normalizations.
pub const WEIGHT_SHIFTS: [i32; 8] = [2, 1, 1, 0, 0, -1, -1, -2];

/// `{s, t}`.
pub fn st_table() -> Arc<VarTable> {
    VarTable::of(&[("s", 0, false), ("t", 0, false)])
}

/// `h̃_i(s, t)` with `f_i = x^{e_i} h̃_i(zx, x⁴y)`.
pub fn weight_zero_forms(sol: &BorderSolution) -> Result<Vec<Series>> {
    let st = st_table();
    sol.f
        .iter()
        .zip(WEIGHT_SHIFTS)
        .map(|(f, e)| {
            let mut terms = Vec::new();
            for (m, c) in f.terms() {
                let (a, b, cz) = (m[0], m[1], m[2]);
                if a != e + cz + 4 * b {
                    return Err(FlipError::Invariant(format!("term x^{a} y^{b} z^{cz} is not of weight zero")));
                }
                terms.push((vec![cz, b], c.clone()));
            }
            Ok(Series::from_terms(&st, &[NO_CAP, NO_CAP], terms)?)
        })
        .collect()
}

/// One polynomial term `c · t^k · Π h_idx`.
type Poly = Vec<(Rational, i32, Vec<usize>)>;

fn eval_poly(p: &Poly, h: &[Series], st: &Arc<VarTable>) -> Series {
    p.iter().fold(Series::zero_exact(st), |acc, (c, k, idx)| {
        let m = idx.iter().fold(Series::mono(st, c.clone(), &[("t", *k)]).expect("t"), |m, &i| &m * &h[i]);
        &acc + &m
    })
}

fn term(c: Rational, k: i32, idx: &[usize]) -> (Rational, i32, Vec<usize>) {
    (c, k, idx.to_vec())
}

/// Right-hand sides of the `t`-direction system, `s t∂_t h̃_i = −R_i`.
fn det_rhs() -> Vec<Poly> {
    let h = q(1, 2);
    vec![
        vec![term(qi(1), 0, &[1]), term(h.clone(), 0, &[2]), term(qi(1), 1, &[0, 0])],
        vec![term(qi(1), 0, &[3]), term(qi(1), 0, &[4]), term(qi(1), 1, &[1, 0])],
        vec![term(qi(1), 0, &[4]), term(qi(1), 1, &[2, 0])],
        vec![term(-h.clone(), 1, &[0]), term(qi(1), 0, &[5]), term(qi(1), 0, &[6]), term(qi(1), 1, &[3, 0])],
        vec![term(qi(1), 1, &[0]), term(qi(1), 0, &[6]), term(qi(1), 1, &[4, 0])],
        vec![
            term(qi(1), 1, &[0]),
            term(-h.clone(), 1, &[1]),
            term(q(1, 4), 1, &[2]),
            term(h.clone(), 0, &[7]),
            term(qi(1), 1, &[5, 0]),
        ],
        vec![term(qi(1), 1, &[1]), term(-h.clone(), 1, &[2]), term(qi(1), 0, &[7]), term(qi(1), 1, &[6, 0])],
        vec![
            term(qi(-1), 1, &[]),
            term(qi(1), 1, &[2]),
            term(qi(1), 1, &[3]),
            term(-h, 1, &[4]),
            term(qi(1), 1, &[7, 0]),
        ],
    ]
}

/// `s`-direction system without the `Φ` terms, in `h̃` (`scaled = false`) or in
/// `L` with `h̃_i = t L_i` for `i ≥ 4` (`scaled = true`).
fn des_rhs(scaled: bool) -> Vec<Poly> {
    let tk = |k: i32| if scaled { k - 1 } else { k };
    let lt = |k: i32| if scaled { k + 1 } else { k };
    vec![
        vec![term(qi(4), 0, &[1]), term(qi(1), 0, &[2])],
        vec![term(q(-1, 2), 0, &[]), term(qi(4), lt(0), &[3]), term(qi(3), lt(0), &[4])],
        vec![term(qi(1), 0, &[]), term(qi(4), lt(0), &[4])],
        vec![term(q(-3, 2), tk(1), &[0]), term(qi(4), 0, &[5]), term(qi(3), 0, &[6])],
        vec![term(qi(3), tk(1), &[0]), term(qi(4), 0, &[6])],
        vec![term(qi(4), tk(1), &[0]), term(q(-3, 2), tk(1), &[1]), term(q(3, 4), tk(1), &[2]), term(qi(1), 0, &[7])],
        vec![term(qi(3), tk(1), &[1]), term(q(-3, 2), tk(1), &[2]), term(qi(4), 0, &[7])],
        vec![term(qi(-3), tk(1), &[]), term(qi(4), tk(1), &[2]), term(qi(3), 1, &[3]), term(q(-3, 2), 1, &[4])],
    ]
}

const S_SYSTEM_ALPHA: [i64; 8] = [-2, -1, -1, 0, 0, 1, 1, 2];

fn vanishes_on(s: &Series, keep: impl Fn(i32, i32) -> bool) -> bool {
    s.terms().all(|(e, _)| !keep(e[0], e[1]))
}

fn s_times(s: &Series) -> Series {
    s.shift(&[1, 0]).expect("s shift")
}

/// Verify the `t`- and `s`-direction systems satisfied by the weight-zero forms.
pub fn weight_zero_reduction_check(sol: &BorderSolution) -> Result<CheckReport> {
    let st = st_table();
    let h = weight_zero_forms(sol)?;
    let [xc, yc, zc] = sol.caps;
    let in_t = |c: i32, b: i32| b <= yc && c <= zc && c + 4 * b <= xc - 2;
    let in_s = |c: i32, b: i32| b < yc && c <= zc && c + 4 * b <= xc - 4;
    let tvar = Series::var(&st, "t")?;
    let mut failures = Vec::new();

    for (i, r) in det_rhs().iter().enumerate() {
        let lhs = s_times(&h[i].log_deriv("t")?);
        let res = &lhs + &eval_poly(r, &h, &st);
        if !vanishes_on(&res, in_t) {
            failures.push(format!("t-system row {}", i + 1));
        }
    }

    let phi_h = &(&(&tvar * &h[0]).scale(&qi(3)) - &h[5]) + &h[6].scale(&q(1, 2));
    let phi_h = &phi_h - &Series::one(&st);
    for (i, r) in des_rhs(false).iter().enumerate() {
        let lhs = s_times(&h[i].log_deriv("s")?);
        let rhs = &(&s_times(&h[i]).scale(&qi(S_SYSTEM_ALPHA[i])) + &eval_poly(r, &h, &st)) + &(&phi_h * &h[i]);
        let res = &lhs - &rhs;
        if !vanishes_on(&res, in_t) {
            failures.push(format!("s-system row {}: {}", i + 1, res.filter(|e| in_t(e[0], e[1]))));
        }
    }

    let mut l = h.clone();
    let mut divisible = true;
    for li in l.iter_mut().skip(3) {
        if li.min_exp("t").is_some_and(|m| m < 1) {
            divisible = false;
        }
        *li = li.filter(|e| e[1] >= 1).shift(&[0, -1])?;
    }
    let phi_l = &(&tvar * &(&(&l[0].scale(&qi(3)) - &l[5]) + &l[6].scale(&q(1, 2)))) - &Series::one(&st);
    for (i, r) in des_rhs(true).iter().enumerate() {
        let lhs = s_times(&l[i].log_deriv("s")?);
        let rhs = &(&s_times(&l[i]).scale(&qi(S_SYSTEM_ALPHA[i])) + &eval_poly(r, &l, &st)) + &(&phi_l * &l[i]);
        let res = &lhs - &rhs;
        if !vanishes_on(&res, in_s) {
            failures.push(format!("L-system row {}: {}", i + 1, res.filter(|e| in_s(e[0], e[1]))));
        }
    }
    Ok(CheckReport::new(
        "weight-zero reduction (2,1)",
        "t- and s-direction systems for the weight-zero forms, Phi = t(3L1 - L6 + L7/2) - 1",
        failures.is_empty() && divisible,
        json!({"failures": failures, "t_divisible": divisible, "caps": sol.caps}),
    ))
}

/// `h_i(t) = h̃_i(0, t)`, the `z = 0` restrictions of the weight-zero forms.
///
/// The `t`-cap is the largest `n` with `y^n` and `x^{e_i+4n}` both inside the
/// caps of `f_i`.
pub fn z0_forms(sol: &BorderSolution) -> Result<Vec<Series>> {
    let tt = VarTable::of(&[("t", 0, false)]);
    weight_zero_forms(sol)?
        .iter()
        .zip(&sol.f)
        .zip(WEIGHT_SHIFTS)
        .map(|((h, f), e)| {
            let (cx, cy) = (f.caps()[0], f.caps()[1]);
            let from_x = if cx == NO_CAP { NO_CAP } else { (cx - e).div_euclid(4) };
            let cap = from_x.min(cy);
            let terms: Vec<(Vec<i32>, Rational)> =
                h.terms().filter(|(e, _)| e[0] == 0).map(|(e, c)| (vec![e[1]], c.clone())).collect();
            Ok(Series::from_terms(&tt, &[cap], terms)?)
        })
        .collect()
}

impl Decomposition {
    /// Image block of the `x`-direction (`k = 1`, i.e. `E₁/d`) or `y`-direction
    /// (`k = 2`) matrix as a series in `x = u^d`.
    pub fn image_in_x(&self, k: usize) -> Result<SeriesMatrix> {
        let d = self.geom.d() as i32;
        let xt = xy_table(&self.geom);
        let blk = self.image_block(k);
        let scale = if k == 1 { Rational::one() / qi(d as i64) } else { Rational::one() };
        blk.try_map(|s| {
            let caps = s.caps();
            let xcap = if caps[0] == NO_CAP { NO_CAP } else { caps[0].div_euclid(d) };
            let mut terms = Vec::new();
            for (e, c) in s.terms() {
                if e[0].rem_euclid(d) != 0 {
                    return Err(flipqh_series::SeriesError::Inconsistent(format!(
                        "u-power {} is not a power of x",
                        e[0]
                    )));
                }
                terms.push((vec![e[0] / d, e[1], e[2]], c * &scale));
            }
            Series::from_terms(&xt, &[xcap, caps[1], caps[2]], terms)
        })
        .map_err(FlipError::from)
    }
}

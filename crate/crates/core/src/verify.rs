//! The acceptance surface: ten criteria, each a list of [`CheckReport`]s.
//!
//! A check that errors (for example on insufficient truncation) becomes a
//! failing report carrying the error text; nothing passes silently.

use flipqh_series::{q, qi, QMatrix, Rational, Series};
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::bfgmt::{
    bf_mod_y, generic_bf_step, gmt_extract, mod_y, mod_y_matrix, pseudo_inverse, reduced_connection_2_mod_y,
    reduced_connection_mod_y, w_frame_prime_classes,
};
use crate::blockdiag::{
    borderline_solve_21, decompose, polarized_pairing_check, w_frame_gram, w_frame_sheared, xy_table, z0_forms,
    BorderSolution,
};
use crate::cohring::pairing_report;
use crate::extremal::{
    cayley, cayley_relation_check, euler_residual, extremal_invariance_check, h_closed_forms, key_polynomial,
    lambert_equation_residual, stirling_checks, z0_agreement,
};
use crate::golden::{self, E1_22_MAIN, E1_22_Y2, ERRATA, G_TABLE, I_F1, I_F1_OVER_X, SIGMA_COEFFICIENTS};
use crate::pfsys::{
    connection_matrices, eigenvalue_check, flatness_check, homogeneity_check, kernel_block_check, q_table,
    qde_oracle_check, singular_eigenvalue_check, sublinearity_check, ConnectionMatrices,
};
use crate::report::CheckReport;
use crate::{FlipError, FlipGeometry, Result};

/// The geometries used by the oracle, structure, eigenvalue and pairing criteria.
pub const CORE_GEOMETRIES: [(usize, usize); 5] = [(2, 1), (1, 1), (1, 0), (3, 1), (3, 2)];

/// Truncations and tolerances of a verification run.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    /// `(q₁, q₂)` caps of the I-function oracle.
    pub oracle_caps: (i32, i32),
    /// `q₁`-cap of the flop expansion of `𝐟`.
    pub flop_q1cap: i32,
    /// `(x, y, z)` caps of the `(2,1)` border solve.
    pub border_caps: [i32; 3],
    /// Terms of the `t`-series at `z = 0`.
    pub t_terms: usize,
    /// Largest `n` in the combinatorial identities.
    pub n_max: usize,
    /// Largest `d` in the Cayley table.
    pub d_max: usize,
    /// Relative tolerance of the eigenvalue relations.
    pub tol: f64,
    /// Relative tolerance of the singular eigenvalue asymptotics.
    pub singular_tol: f64,
    /// Random rational points per geometry.
    pub points: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            oracle_caps: (4, 3),
            flop_q1cap: 6,
            border_caps: [9, 2, 8],
            t_terms: 21,
            n_max: 12,
            d_max: 10,
            tol: 1e-9,
            singular_tol: 0.01,
            points: 5,
            seed: 0x5eed,
        }
    }
}

/// One acceptance criterion and its reports.
#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub reports: Vec<CheckReport>,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        !self.reports.is_empty() && self.reports.iter().all(CheckReport::passed)
    }

    /// `PASS`/`FAIL` line.
    pub fn line(&self) -> String {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        let failed = self.reports.iter().filter(|r| !r.passed()).count();
        format!("[{tag}] criterion {:>2}: {} ({} checks, {} failed)", self.id, self.title, self.reports.len(), failed)
    }
}

/// Titles of the ten criteria.
pub const TITLES: [&str; 10] = [
    "connection-matrix golden tests",
    "QDE oracle",
    "flatness and structure",
    "(2,1) block diagonalization",
    "dual path agreement",
    "z = 0 closed forms",
    "BF/GMT mod y",
    "extremal combinatorics",
    "eigenvalue system",
    "pairing suite",
];

fn failed(check: &str, anchor: &str, err: impl std::fmt::Display) -> CheckReport {
    CheckReport::new(check, anchor, false, json!({"error": err.to_string()}))
}

fn capture(check: &str, anchor: &str, f: impl FnOnce() -> Result<CheckReport>) -> CheckReport {
    f().unwrap_or_else(|e| failed(check, anchor, e))
}

fn flag(check: &str, anchor: &str, f: impl FnOnce() -> Result<bool>) -> CheckReport {
    match f() {
        Ok(ok) => CheckReport::new(check, anchor, ok, json!(null)),
        Err(e) => failed(check, anchor, e),
    }
}

fn geom(r: usize, rp: usize) -> FlipGeometry {
    FlipGeometry::new(r, rp).expect("fixed geometry")
}

/// Connection matrices, flops expanded to `cfg.flop_q1cap`.
pub fn connection(g: &FlipGeometry, cfg: &VerifyConfig) -> Result<ConnectionMatrices> {
    let cap = if g.r == g.rp { cfg.flop_q1cap } else { 0 };
    connection_matrices(g, cap)
}

fn border(cfg: &VerifyConfig) -> Result<BorderSolution> {
    borderline_solve_21(&connection_matrices(&geom(2, 1), 0)?, cfg.border_caps)
}

/// Run one criterion (1-based id).
pub fn criterion(id: u8, cfg: &VerifyConfig) -> Criterion {
    let reports = match id {
        1 => golden_connections(cfg),
        2 => oracle(cfg),
        3 => structure(cfg),
        4 => block_diagonalization(cfg),
        5 => dual_path(cfg),
        6 => z0_closed_forms(cfg),
        7 => bf_gmt(cfg),
        8 => combinatorics(cfg),
        9 => eigenvalues(cfg),
        10 => pairings(cfg),
        _ => vec![failed("unknown criterion", "-", format!("no criterion {id}"))],
    };
    Criterion { id, title: TITLES.get(id as usize - 1).copied().unwrap_or("unknown"), reports }
}

/// All ten criteria, evaluated in parallel and returned in order.
pub fn run_all(cfg: &VerifyConfig) -> Vec<Criterion> {
    (1..=10u8).into_par_iter().map(|id| criterion(id, cfg)).collect()
}

fn golden_connections(cfg: &VerifyConfig) -> Vec<CheckReport> {
    [(2, 1), (1, 1), (1, 0)].iter().filter_map(|&(r, rp)| printed_connection_report(r, rp, cfg)).collect()
}

/// Comparison with the printed matrices, for the three geometries that have them.
pub fn printed_connection_report(r: usize, rp: usize, cfg: &VerifyConfig) -> Option<CheckReport> {
    let vars = ["q1", "q2"];
    let exact = |c1: &'static [golden::Entry], c2: &'static [golden::Entry], anchor: &str| {
        let name = format!("C₁, C₂ of ({r},{rp}) entry for entry");
        capture(&name, anchor, || {
            let g = geom(r, rp);
            let cm = connection_matrices(&g, 0)?;
            let t = q_table(&g);
            let (p1, p2) = (golden::grid(&t, g.big_r(), vars, c1)?, golden::grid(&t, g.big_r(), vars, c2)?);
            let d1 = cm.c1.first_difference(&p1);
            let d2 = cm.c2.first_difference(&p2);
            Ok(CheckReport::new(
                &name,
                anchor,
                d1.is_none() && d2.is_none(),
                json!({"c1_difference": format!("{d1:?}"), "c2_difference": format!("{d2:?}")}),
            ))
        })
    };
    match (r, rp) {
        (2, 1) => Some(exact(golden::FLIP21_C1, golden::FLIP21_C2, "(2,1) flip matrices")),
        (1, 0) => Some(exact(golden::F1_C1, golden::F1_C2, "F₁ blow-up matrices")),
        (1, 1) => Some(atiyah_report(cfg)),
        _ => None,
    }
}

fn atiyah_report(cfg: &VerifyConfig) -> CheckReport {
    capture("Atiyah flop matrices", "Atiyah flop example", || {
        let g = geom(1, 1);
        let cm = connection_matrices(&g, cfg.flop_q1cap)?;
        let (p1, p2) = golden::atiyah_printed(cfg.flop_q1cap)?;
        // the printed (1,4) entry of z∂₂ has the opposite sign; the oracle and
        // flatness both reject it
        let mut corrected = p2.clone();
        corrected.set(0, 3, -p2.get(0, 3));
        let printed_cm = ConnectionMatrices::from_matrices(&g, cm.c1.clone(), p2.clone())?;
        let printed_rejected =
            !qde_oracle_check(&printed_cm, (2, 2))?.residuals.is_empty() && !flatness_check(&printed_cm)?;
        let c1_ok = cm.c1.agrees_with(&p1);
        let c2_ok = cm.c2.agrees_with(&corrected);
        let others_ok = (0..6).all(|i| (0..6).all(|j| (i, j) == (0, 3) || cm.c2.get(i, j).agrees_with(p2.get(i, j))));
        Ok(CheckReport::new(
            "Atiyah flop matrices",
            "Atiyah flop example, 𝐟 to q₁-cap 6",
            c1_ok && c2_ok && others_ok && printed_rejected,
            json!({
                "q1_cap": cfg.flop_q1cap,
                "c1_matches": c1_ok,
                "c2_matches_except_1_4": others_ok,
                "erratum": "z∂₂ (1,4): computed −q₂(1−q₁), printed q₂(1−q₁)",
                "printed_sign_rejected_by_oracle_and_flatness": printed_rejected,
            }),
        ))
    })
}

fn oracle(cfg: &VerifyConfig) -> Vec<CheckReport> {
    CORE_GEOMETRIES
        .par_iter()
        .map(|&(r, rp)| {
            let g = geom(r, rp);
            match connection(&g, cfg) {
                Ok(cm) => oracle_report(&cm, cfg.oracle_caps),
                Err(e) => failed(&format!("I-function oracle ({r},{rp})"), "connection matrices", e),
            }
        })
        .collect()
}

/// The I-function oracle on all degrees within `caps`, plus z-freeness.
pub fn oracle_report(cm: &ConnectionMatrices, caps: (i32, i32)) -> CheckReport {
    let name = format!("I-function oracle ({},{})", cm.geom.r, cm.geom.rp);
    capture(&name, "z∂_k(frame·I) = C_k(frame·I)", || {
        let z_free = cm.c1.table().index("z").is_err();
        let out = qde_oracle_check(cm, caps)?;
        Ok(CheckReport::new(
            &name,
            "z∂_k(frame·I) = C_k(frame·I)",
            z_free && out.residuals.is_empty(),
            json!({"caps": caps, "degrees": out.degrees_checked, "z_free": z_free, "residuals": out.residuals}),
        ))
    })
}

fn structure(cfg: &VerifyConfig) -> Vec<CheckReport> {
    CORE_GEOMETRIES
        .par_iter()
        .flat_map_iter(|&(r, rp)| match connection(&geom(r, rp), cfg) {
            Ok(cm) => structure_reports(&cm),
            Err(e) => vec![failed(&format!("structure ({r},{rp})"), "connection matrices", e)],
        })
        .collect()
}

/// Flatness, sub-linearity, homogeneity and the kernel block.
pub fn structure_reports(cm: &ConnectionMatrices) -> Vec<CheckReport> {
    let g = &cm.geom;
    let tag = format!("({},{})", g.r, g.rp);
    vec![
        flag(&format!("flatness and commutativity {tag}"), "∂₂C₁ = ∂₁C₂, [C₁,C₂] = 0", || {
            flatness_check(cm)
        }),
        flag(&format!("sub-linearity {tag}"), "entries at most linear in q₁, q₂", || Ok(sublinearity_check(g))),
        homogeneity_check(cm),
        flag(&format!("kernel block {tag}"), "charpoly λ^d − (−1)^{r′+1}q₁", || kernel_block_check(cm)),
    ]
}

fn block_diagonalization(cfg: &VerifyConfig) -> Vec<CheckReport> {
    match border(cfg) {
        Ok(sol) => {
            border_reports(&sol, true).unwrap_or_else(|e| vec![failed("(2,1) border checks", "g-series table", e)])
        }
        Err(e) => vec![failed("(2,1) border solve", "degree-by-degree border recursion", e)],
    }
}

/// Reports on a `(2,1)` border solution: printed g-table, antisymmetry, gauge
/// residual and kernel entries.
///
/// Printed monomials beyond the computed caps are skipped and counted; with
/// `require_full` any skipped monomial fails the report. Caps too small to
/// reach a single printed coefficient of some `g_i` or of `E₁²²` are an error.
pub fn border_reports(sol: &BorderSolution, require_full: bool) -> Result<Vec<CheckReport>> {
    let reachable = G_TABLE.iter().zip(&sol.g).all(|(row, g)| row.terms().iter().any(|(m, _)| g.within_caps(m)))
        && sol.e1_22.within_caps(&[3, 1, 0]);
    if !reachable {
        return Err(FlipError::Truncation(format!(
            "caps {:?} reach no printed coefficient of some g_i or of E₁²²; need x-cap ≥ 4 and y-cap ≥ 1",
            sol.caps
        )));
    }
    let g_table = {
        let mut mismatches = Vec::new();
        let mut errata = Vec::new();
        let (mut count, mut skipped) = (0, 0);
        for (i, row) in G_TABLE.iter().enumerate() {
            for (m, printed) in row.terms() {
                if !sol.g[i].within_caps(&m) {
                    skipped += 1;
                    continue;
                }
                count += 1;
                let got = sol.g[i].coeff(&m);
                if got == printed {
                    continue;
                }
                match ERRATA.iter().find(|e| e.series == i && e.monomial == m) {
                    Some(e) if got == q(e.corrected.0, e.corrected.1) => {
                        errata.push(json!({"g": i + 1, "monomial": m, "printed": printed.to_string(), "computed": got.to_string(), "reason": e.reason}))
                    }
                    _ => mismatches.push(json!({"g": i + 1, "monomial": m, "printed": printed.to_string(), "computed": got.to_string()})),
                }
            }
        }
        // an erratum is only accepted when the independent identities hold
        let m = [8, 1, 5];
        let identities = !sol.g[1].within_caps(&m)
            || (sol.g[1].coeff(&m) == qi(-6 * 720) && (&sol.g[2] + &sol.g[1].scale(&q(1, 2))).coeff(&m) == qi(8028));
        CheckReport::new(
            "g₁…g₈ against the printed table",
            "g-series table of the (2,1) flip",
            mismatches.is_empty() && identities && count > 0 && (!require_full || skipped == 0),
            json!({"caps": sol.caps, "coefficients": count, "beyond_caps": skipped, "mismatches": mismatches, "errata": errata}),
        )
    };
    let anti = flag("f_i(z) = −g_{9−i}(−z)", "antisymmetry of the deformed frame", || sol.antisymmetry());
    let residual = flag("gauge residual", "A_kP − z x_k∂P − PE_k = 0", || {
        let cm = connection_matrices(&geom(2, 1), 0)?;
        Ok(sol.gauge_residuals(&cm)?.iter().all(|r| r.is_zero()))
    });
    let e1 = {
        let t = xy_table(&geom(2, 1));
        let mut bad = Vec::new();
        let mut skipped = 0;
        let mut expect = |m: [i32; 3], c: i64| {
            if !sol.e1_22.within_caps(&m) {
                skipped += 1;
            } else if sol.e1_22.coeff(&m) != qi(c) {
                bad.push(Series::format_monomial(&t, &m));
            }
        };
        expect([-1, 0, 0], -1);
        for (k, &c) in E1_22_MAIN.iter().enumerate() {
            expect([3 + k as i32, 1, k as i32], c);
        }
        for (k, &c) in E1_22_Y2.iter().enumerate() {
            expect([7 + k as i32, 2, k as i32], c);
        }
        let xy = Series::mono(&t, qi(1), &[("x", 1), ("y", 1)]).expect("x, y");
        let e2_ok = sol.e2_22.agrees_with(&(&xy * &sol.g[7]));
        CheckReport::new(
            "E₁²², E₂²² kernel entries",
            "E₁²² coefficients 3, 12, 55, 300, 1918, 14112; 21, 348 and E₂²² = yx·g₈",
            bad.is_empty() && e2_ok && (!require_full || skipped == 0),
            json!({"e1_mismatches": bad, "beyond_caps": skipped, "e2_is_xy_g8": e2_ok}),
        )
    };
    Ok(vec![g_table, anti, residual, e1])
}

fn dual_path(cfg: &VerifyConfig) -> Vec<CheckReport> {
    vec![capture("Wasow recursion vs border solve", "generic H_l recursion and direct border solve", || {
        let cm = connection_matrices(&geom(2, 1), 0)?;
        let sol = borderline_solve_21(&cm, cfg.border_caps)?;
        let sys = w_frame_sheared(&cm)?;
        let dec = decompose(&sys, &[8, 1], cfg.border_caps[0] as usize, QMatrix::identity(1))?;
        let ut = dec.p.table().clone();
        let u = Series::var(&ut, "u")?;
        let to_u = |s: &Series| s.substitute(&[("x", u.clone())], &ut);
        let mut bad = Vec::new();
        for i in 0..8 {
            if !dec.p.get(i, 8).agrees_with(&to_u(&sol.g[i])?.truncate(&sol.caps)) {
                bad.push(format!("g{}", i + 1));
            }
            if !dec.p.get(8, i).agrees_with(&to_u(&sol.f[i])?.truncate(&sol.caps)) {
                bad.push(format!("f{}", i + 1));
            }
            for j in 0..8 {
                if !dec.e1.get(i, j).agrees_with(&to_u(sol.e11[0].get(i, j))?)
                    || !dec.e2.get(i, j).agrees_with(&to_u(sol.e11[1].get(i, j))?)
                {
                    bad.push(format!("E11[{i},{j}]"));
                }
            }
        }
        if !dec.e1.get(8, 8).agrees_with(&to_u(&sol.e1_22)?) || !dec.e2.get(8, 8).agrees_with(&to_u(&sol.e2_22)?) {
            bad.push("E22".into());
        }
        Ok(CheckReport::new(
            "Wasow recursion vs border solve",
            "generic H_l recursion and direct border solve",
            bad.is_empty(),
            json!({"caps": sol.caps, "mismatches": bad}),
        ))
    })]
}

fn z0_closed_forms(cfg: &VerifyConfig) -> Vec<CheckReport> {
    let n = cfg.t_terms;
    let key = capture("F(h₁) = 0", "degree-9 polynomial", || {
        let h = h_closed_forms(n)?;
        let f = key_polynomial(&h[0])?;
        Ok(CheckReport::new("F(h₁) = 0", "degree-9 polynomial", f.is_zero(), json!({"t_cap": n - 1})))
    });
    let lambert = capture("t·b⁹ = b − 1", "Lambert series 𝓑₉", || {
        let r = lambert_equation_residual(9, n)?;
        Ok(CheckReport::new("t·b⁹ = b − 1", "Lambert series 𝓑₉", r.is_zero(), json!({"t_cap": n - 1})))
    });
    let three = capture("closed forms, nonlinear solve, block diagonalization", "h₁…h₈ at z = 0", || {
        // the z = 0 slice only needs z⁰ terms, so the border solve trades z-cap for y-cap
        let sol = borderline_solve_21(&connection_matrices(&geom(2, 1), 0)?, [26, 6, 2])?;
        z0_agreement(n.min(13), Some(&z0_forms(&sol)?))
    });
    vec![key, lambert, three]
}

fn bf_gmt(cfg: &VerifyConfig) -> Vec<CheckReport> {
    match border(cfg) {
        Ok(sol) => bf_gmt_reports(&sol),
        Err(e) => vec![failed("(2,1) border solve", "degree-by-degree border recursion", e)],
    }
}

/// Birkhoff factorization and GMT reports on a `(2,1)` border solution.
pub fn bf_gmt_reports(sol: &BorderSolution) -> Vec<CheckReport> {
    let pseudo = capture("𝓘f₁ and 𝓘(f₁/x)", "printed pseudo-inverse expansions", || {
        let f1 = mod_y(&sol.f[0]);
        let i1 = pseudo_inverse(&f1, "x")?;
        let i1x = pseudo_inverse(&f1.shift(&[-1, 0, 0])?, "x")?;
        for (s, table) in [(&i1, I_F1), (&i1x, I_F1_OVER_X)] {
            if let Some(&(a, c, _, _)) = table.iter().find(|&&(a, c, _, _)| !s.within_caps(&[a, 0, c])) {
                return Err(FlipError::Truncation(format!("x^{a} z^{c} lies beyond the caps {:?}", s.caps())));
            }
        }
        let check = |s: &Series, table: &[(i32, i32, i64, i64)]| {
            table.iter().all(|&(a, c, n, d)| s.coeff(&[a, 0, c]) == q(n, d))
        };
        let ok = check(&i1, I_F1) && check(&i1x, I_F1_OVER_X);
        Ok(CheckReport::new("𝓘f₁ and 𝓘(f₁/x)", "printed pseudo-inverse expansions", ok, json!(null)))
    });
    let factor = capture("B = I + N with N² = 0", "Birkhoff factor mod y", || {
        let bf = bf_mod_y(sol)?;
        let generic = generic_bf_step(&mod_y_matrix(&sol.e11[0]), "x", sol.caps[0] as usize - 1)?;
        let same = generic.b.first_difference(&bf.b).is_none();
        let nil = bf.n_squared_vanishes()?;
        Ok(CheckReport::new(
            "B = I + N with N² = 0",
            "Birkhoff factor mod y",
            same && nil,
            json!({"n_squared_vanishes": nil, "generic_solver_agrees": same}),
        ))
    });
    let grid = capture("reduced C̄′₁ grid", "GMT grid mod y", || {
        let bf = bf_mod_y(sol)?;
        let c1 = reduced_connection_mod_y(sol, &bf)?;
        let diff = c1.first_difference(&golden::c1_bar_prime()?);
        Ok(CheckReport::new(
            "reduced C̄′₁ grid",
            "GMT grid mod y",
            diff.is_none(),
            json!({"first_difference": format!("{diff:?}")}),
        ))
    });
    let sigma = capture("σ coefficients", "GMT in the extremal ray variable", || {
        let g = geom(2, 1);
        let cm = connection_matrices(&g, 0)?;
        let p = gmt_extract(&golden::c1_bar_prime()?, &reduced_connection_2_mod_y(&cm)?)?;
        let frame = w_frame_prime_classes(&g)?;
        let ring = g.ring_prime();
        let corr = p.correction_classes(&frame);
        let e3 = ring.pow(&ring.e(), 3);
        let xi3h = ring.mul(&ring.pow(&ring.xi(), 3), &ring.h());
        let xi2h = ring.mul(&ring.pow(&ring.xi(), 2), &ring.h());
        let (c2, c3) =
            (q(SIGMA_COEFFICIENTS[0].0, SIGMA_COEFFICIENTS[0].1), q(SIGMA_COEFFICIENTS[1].0, SIGMA_COEFFICIENTS[1].1));
        let linear = p.linear_class(1, &frame) == ring.h() && p.linear_class(2, &frame) == ring.xi();
        let x2 = corr.iter().find(|(m, _)| m[0] == 2).map(|(_, c)| c.clone());
        let x3 = corr.iter().find(|(m, _)| m[0] == 3).map(|(_, c)| c.clone());
        let x2_ok = x2.as_ref().is_some_and(|c| *c == e3.scale(&-c2.abs()));
        let x3_ok = x3.as_ref().is_some_and(|c| *c == xi3h.scale(&c3));
        let printed_x2_class = x2.as_ref().is_some_and(|c| *c == xi2h.scale(&c2));
        Ok(CheckReport::new(
            "σ coefficients",
            "GMT in the extremal ray variable",
            linear && x2_ok && x3_ok && corr.len() == 2,
            json!({
                "linear": "s¹h′ + s²ξ′",
                "x2": "−3/4 (ξ′−h′)³",
                "x3": "−13/27 ξ′³h′",
                "x2_matches_printed_class_ξ′²h′": printed_x2_class,
            }),
        ))
    });
    vec![pseudo, factor, grid, sigma]
}

fn combinatorics(cfg: &VerifyConfig) -> Vec<CheckReport> {
    let n = cfg.n_max;
    // the invariance relation up to n needs a_{n−1}; Euler to tⁿ needs a_{n+1}
    let table = match cayley(cfg.d_max.max(n + 1)) {
        Ok(t) => t,
        Err(e) => return vec![failed("Cayley recursion", "divisorial reconstruction", e)],
    };
    let cay = CheckReport::new(
        "a_d = d^{d−2}",
        "divisorial reconstruction recursion",
        table.matches_closed_form() && table.d_max() >= cfg.d_max,
        json!({"d_max": cfg.d_max}),
    );
    let euler = capture("𝓔 = e^{t𝓔}", "Euler functional equation", || {
        let r = euler_residual(&table, n + 1)?;
        Ok(CheckReport::new("𝓔 = e^{t𝓔}", "Euler functional equation", r.is_zero(), json!({"t_cap": n})))
    });
    vec![
        cay,
        capture("invariance relation", "Cayley numbers with a₋₁ = −1", || cayley_relation_check(&table, n)),
        stirling_checks(n),
        euler,
        capture("linear invariance", "extremal invariance sum", || extremal_invariance_check(&table, n)),
    ]
}

/// `cfg.points` random rational points `(q₁, q₂)` avoiding `q₁ = ±1`.
pub fn random_points(cfg: &VerifyConfig, salt: u64) -> Vec<(Rational, Rational)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ salt);
    let mut out = Vec::new();
    while out.len() < cfg.points {
        let a = q(rng.gen_range(1..60), rng.gen_range(1..30));
        let b = q(rng.gen_range(1..60), rng.gen_range(1..30));
        if a != qi(1) {
            out.push((a, b));
        }
    }
    out
}

fn eigenvalues(cfg: &VerifyConfig) -> Vec<CheckReport> {
    CORE_GEOMETRIES.par_iter().flat_map_iter(|&(r, rp)| eigenvalue_reports(&geom(r, rp), cfg)).collect()
}

/// Eigenvalue relations at seeded random points, and the singular asymptotics
/// near `x = 0` when `d > 0`.
pub fn eigenvalue_reports(g: &FlipGeometry, cfg: &VerifyConfig) -> Vec<CheckReport> {
    let (r, rp) = (g.r, g.rp);
    let mut out: Vec<CheckReport> = random_points(cfg, (r * 10 + rp) as u64)
        .iter()
        .map(|(a, b)| {
            capture(&format!("eigenvalue relations ({r},{rp})"), "μλ^{r+1} = q₁q₂", || {
                eigenvalue_check(g, a, b, cfg.tol)
            })
        })
        .collect();
    if g.d() > 0 {
        out.push(capture(&format!("singular eigenvalues ({r},{rp})"), "ω·x^{−1/d} asymptotics", || {
            singular_eigenvalue_check(g, &q(1, 10000), &qi(1), cfg.singular_tol)
        }));
    }
    out
}

fn pairings(cfg: &VerifyConfig) -> Vec<CheckReport> {
    let mut out: Vec<CheckReport> = CORE_GEOMETRIES.iter().map(|&(r, rp)| pairing_report(&geom(r, rp))).collect();
    out.push(capture("w-frame Poincaré pairing", "antidiagonal pairing on w₁…w₉", || {
        let gram = w_frame_gram()?;
        let want =
            QMatrix::from_fn(
                9,
                9,
                |i, j| {
                    if (i < 8 && j < 8 && i + j == 7) || (i == 8 && j == 8) {
                        qi(1)
                    } else {
                        qi(0)
                    }
                },
            );
        Ok(CheckReport::new("w-frame Poincaré pairing", "antidiagonal pairing on w₁…w₉", gram == want, json!(null)))
    }));
    out.push(capture("polarized orthogonality", "((w̃_i, K̃₁)) = 0", || {
        polarized_pairing_check(&border(cfg)?, &w_frame_gram()?)
    }));
    out
}

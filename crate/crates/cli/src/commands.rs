//! Subcommand implementations. Each returns an [`Outcome`]; errors from the
//! engine (insufficient truncation included) propagate unchanged.

use flipqh::bfgmt::{
    bf_mod_y, blowup_reduction_check, gmt_extract, mod_y_three_point_check, reduced_connection_2_mod_y,
    reduced_connection_mod_y,
};
use flipqh::blockdiag::{
    borderline_solve_21, polarized_pairing_check, shear, w_frame_gram, wasow_blockdiag, weight_zero_reduction_check,
    z0_kernel_eigenvalue_check,
};
use flipqh::extremal::{cayley, h_closed_forms};
use flipqh::pfsys::connection_matrices;
use flipqh::verify::{
    bf_gmt_reports, border_reports, connection, criterion, eigenvalue_reports, oracle_report,
    printed_connection_report, run_all, structure_reports,
};
use flipqh::{CheckReport, FlipError};
use flipqh_series::SeriesMatrix;
use serde_json::{json, Value};

use crate::config::{RunConfig, UsageError};

/// What a subcommand produced: reports, a JSON payload and a text rendering.
pub struct Outcome {
    pub reports: Vec<CheckReport>,
    pub payload: Value,
    pub text: String,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(CheckReport::passed)
    }
}

fn grid(title: &str, m: &SeriesMatrix) -> String {
    format!("{title}\n{}\n", m.to_grid())
}

fn series_list(name: &str, s: &[flipqh_series::Series]) -> String {
    s.iter().enumerate().map(|(i, s)| format!("{name}{} = {s}\n", i + 1)).collect()
}

/// `connection`: `C₁`, `C₂` and their checks.
pub fn connection_cmd(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let g = cfg.geometry()?;
    let vc = cfg.verify_config();
    let cm = connection(&g, &vc)?;
    let mut reports: Vec<CheckReport> = printed_connection_report(g.r, g.rp, &vc).into_iter().collect();
    reports.push(oracle_report(&cm, vc.oracle_caps));
    reports.extend(structure_reports(&cm));
    reports.extend(eigenvalue_reports(&g, &vc));
    let text = grid("z∂₁ = C₁", &cm.c1) + &grid("z∂₂ = C₂", &cm.c2);
    Ok(Outcome { reports, payload: cm.to_json(), text })
}

/// `blockdiag`: the `(2,1)` border solve, or the generic recursion elsewhere.
pub fn blockdiag_cmd(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let g = cfg.geometry()?;
    let cm = connection(&g, &cfg.verify_config())?;
    if (g.r, g.rp) == (2, 1) {
        let sol = borderline_solve_21(&cm, cfg.border_caps())?;
        let mut reports = border_reports(&sol, false)?;
        reports.push(polarized_pairing_check(&sol, &w_frame_gram()?)?);
        reports.push(weight_zero_reduction_check(&sol)?);
        let payload = json!({
            "caps": sol.caps,
            "g": sol.g.iter().map(|s| s.to_json()).collect::<Vec<_>>(),
            "f": sol.f.iter().map(|s| s.to_json()).collect::<Vec<_>>(),
            "E1_22": sol.e1_22.to_json(),
            "E2_22": sol.e2_22.to_json(),
        });
        let text = series_list("g", &sol.g)
            + &series_list("f", &sol.f)
            + &format!("E1_22 = {}\nE2_22 = {}\n", sol.e1_22, sol.e2_22);
        return Ok(Outcome { reports, payload, text });
    }
    if g.d() == 0 {
        return Err(UsageError(format!("({},{}) is a flop: the kernel block is empty", g.r, g.rp)).into());
    }
    let sys = shear(&cm)?;
    let dec = wasow_blockdiag(&sys, cfg.xcap as usize, true)?;
    let tag = format!("({},{})", g.r, g.rp);
    let reports = vec![
        CheckReport::new(
            &format!("gauge residual {tag}"),
            "D_kP − z∂P − PE_k = 0",
            dec.residual_1(&sys)?.is_zero() && dec.residual_2(&sys)?.is_zero(),
            json!({"order": dec.order}),
        ),
        CheckReport::new(
            &format!("image block in x {tag}"),
            "E^{11} is a series in x = u^d",
            dec.image_block_in_x(),
            Value::Null,
        ),
        CheckReport::new(
            &format!("lower gauge factorization {tag}"),
            "P^{21} = diag(u^{−i})·(series in x)",
            dec.lower_gauge_factorizes(),
            Value::Null,
        ),
        z0_kernel_eigenvalue_check(&dec),
    ];
    let text = grid("E₁", &dec.e1) + &grid("E₂", &dec.e2);
    Ok(Outcome { reports, payload: dec.to_json(), text })
}

/// `bfgmt`: Birkhoff factorization and GMT for `(2,1)`, reduction for blow-ups.
pub fn bfgmt_cmd(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let g = cfg.geometry()?;
    if g.rp == 0 {
        let report = blowup_reduction_check(&g, cfg.xcap as usize)?;
        return Ok(Outcome { text: String::new(), payload: Value::Null, reports: vec![report] });
    }
    if (g.r, g.rp) != (2, 1) {
        return Err(UsageError("bfgmt covers the (2,1) flip and blow-ups (r,0)".into()).into());
    }
    let cm = connection_matrices(&g, 0)?;
    let sol = borderline_solve_21(&cm, cfg.border_caps())?;
    let bf = bf_mod_y(&sol)?;
    let c1 = reduced_connection_mod_y(&sol, &bf)?;
    let c2 = reduced_connection_2_mod_y(&cm)?;
    let point = gmt_extract(&c1, &c2)?;
    let mut reports = bf_gmt_reports(&sol);
    // a truncation shortfall inside a report is an error, not a failed check
    if let Some(r) =
        reports.iter().find(|r| r.detail["error"].as_str().is_some_and(|e| e.starts_with("insufficient truncation")))
    {
        let msg = r.detail["error"].as_str().unwrap_or_default().trim_start_matches("insufficient truncation: ");
        return Err(FlipError::Truncation(format!("{}: {msg}", r.check)).into());
    }
    reports.push(mod_y_three_point_check(&cm)?);
    let sigma = reports.iter().find(|r| r.check == "σ coefficients").map(|r| r.detail.clone()).unwrap_or(Value::Null);
    let text = grid("C̄′₁ mod y", &c1) + &grid("C̄′₂ mod y", &c2) + &format!("σ: {}\n", serde_json::to_string(&sigma)?);
    let payload =
        json!({"c1_bar_prime": c1.to_json(), "c2_bar_prime": c2.to_json(), "gmt": point.to_json(), "sigma": sigma});
    Ok(Outcome { reports, payload, text })
}

/// `extremal`: Cayley table, `h₁…h₈` at `z = 0` and the identities.
pub fn extremal_cmd(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let vc = cfg.verify_config();
    let table = cayley(cfg.dmax)?;
    let h = h_closed_forms(vc.t_terms)?;
    let mut reports = criterion(6, &vc).reports;
    reports.extend(criterion(8, &vc).reports);
    let text =
        (1..=cfg.dmax as i64).map(|d| format!("a_{d} = {}\n", table.get(d).unwrap_or_default())).collect::<String>()
            + &series_list("h", &h);
    let payload = json!({"cayley": table.to_json(), "h": h.iter().map(|s| s.to_json()).collect::<Vec<_>>()});
    Ok(Outcome { reports, payload, text })
}

/// `verify`: every acceptance criterion.
pub fn verify_cmd(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let criteria = run_all(&cfg.verify_config());
    let mut text = String::new();
    for c in &criteria {
        text.push_str(&c.line());
        text.push('\n');
        for r in c.reports.iter().filter(|r| !r.passed()) {
            text.push_str(&format!("    {}  {}\n", r.line(), r.detail));
        }
    }
    let summary: Vec<Value> = criteria
        .iter()
        .map(|c| json!({"id": c.id, "title": c.title, "status": if c.passed() { "pass" } else { "fail" }}))
        .collect();
    let reports = criteria.into_iter().flat_map(|c| c.reports).collect();
    Ok(Outcome { reports, payload: json!({"criteria": summary}), text })
}

/// Whether an error is a truncation shortfall in the engine.
pub fn is_truncation(e: &anyhow::Error) -> bool {
    matches!(e.downcast_ref::<FlipError>(), Some(FlipError::Truncation(_)))
}

use anyhow::{bail, Context};
use largen_core::fixedpoint::{
    duality_check, polynomial_order, series_coeffs, series_radius, singularity, solve_fixed_point,
    FIXED_POINT_CSV_HEADER,
};
use largen_core::flow::{evolve_history, track_saddle, Equation, FlowState};
use largen_core::grid::UniformGrid;
use largen_core::potentials::{Model, Potential, RFunction};
use largen_core::saddle::{
    free_energy_large_n, oracle_comparison, scaling_collapse, scaling_collapse_at_x, solve_saddle,
    DEFAULT_PANELS,
};
use largen_core::series::Poly;
use largen_core::stability::{
    beta_matrix, beta_vector, double_scaling_matrix, rational_to_f64, scaling_exponents_qm,
    spectrum,
};
use largen_core::{verify, Rational};

use crate::args::*;
use crate::output::Report;

const SERIES_RADIUS_ORDER: usize = 48;
const DUALITY_POINTS: [f64; 3] = [0.25, 0.5, 1.0];

pub fn run(command: &Command) -> anyhow::Result<Report> {
    match command {
        Command::Saddle(a) => saddle(a),
        Command::Quadrature(a) => quadrature(a),
        Command::Collapse(a) => collapse(a),
        Command::Flow(a) => flow(a),
        Command::FixedPoint(a) => fixed_point(a),
        Command::Spectrum(a) => spectrum_cmd(a),
        Command::Beta(a) => beta(a),
        Command::Exponents(a) => exponents(a),
        Command::Verify(_) => verify_cmd(),
    }
}

fn parse_potential(text: &str) -> anyhow::Result<Potential<f64>> {
    text.parse()
        .with_context(|| format!("invalid --potential `{text}`"))
}

fn saddle(a: &SaddleArgs) -> anyhow::Result<Report> {
    let p = parse_potential(&a.potential)?;
    let rf = RFunction::from_potential(p.clone());
    let found = solve_saddle(&rf, a.rho_0, (0.0, a.rho_max), DEFAULT_PANELS)?;
    let mut report = Report::new(&["rho_c", "order"]);
    for root in &found.roots {
        report.row(vec![root.rho.into(), root.order.into()]);
    }
    report.set("potential", p.to_string());
    report.set("saddles", found.roots.len());
    if a.rho_0 == 0.0 && p.model() == Model::VectorD0 {
        match free_energy_large_n(&p, a.size as f64, a.rho_max) {
            Ok(fe) => {
                report.set("z_leading", fe.z_leading);
                report.set("z_correction", fe.z_correction);
                report.set("z_asymptotic", fe.z_asymptotic());
            }
            Err(e) => report.note(format!("free energy not available: {e}")),
        }
    }
    Ok(report)
}

fn quadrature(a: &QuadratureArgs) -> anyhow::Result<Report> {
    let p = parse_potential(&a.potential)?;
    let rows = oracle_comparison(&p, &a.sizes, a.rho_max)?;
    let mut report = Report::new(&["N", "Z_quad", "Z_asym", "diff"]);
    for r in &rows {
        report.row(vec![
            r.n.into(),
            r.z_quad.into(),
            r.z_asym.into(),
            r.diff.into(),
        ]);
    }
    if let Some(last) = rows.last() {
        report.set("N_max", last.n);
        report.set("N_times_abs_diff", last.n as f64 * last.diff.abs());
    }
    Ok(report)
}

fn collapse(a: &CollapseArgs) -> anyhow::Result<Report> {
    let result = match (&a.xs, &a.vs) {
        (_, Some(vs)) => scaling_collapse(a.m, a.q, vs, &a.sizes)?,
        (Some(xs), None) => scaling_collapse_at_x(a.m, a.q, xs, &a.sizes)?,
        (None, None) => {
            let xs: Vec<f64> = (0..=20).map(|i| (i as f64 - 10.0) / 10.0).collect();
            scaling_collapse_at_x(a.m, a.q, &xs, &a.sizes)?
        }
    };
    let mut report = Report::new(&["N", "v", "x", "deltaZ"]);
    for r in &result.rows {
        report.row(vec![r.n.into(), r.v.into(), r.x.into(), r.delta_z.into()]);
    }
    report.set("defect", result.defect);
    report.set("max_abs_deltaZ", result.max_abs_delta_z);
    report.set("relative_defect", result.relative_defect());
    Ok(report)
}

fn flow(a: &FlowArgs) -> anyhow::Result<Report> {
    let p = parse_potential(&a.potential)?;
    let equation = match a.equation {
        EquationArg::Full => Equation::Full,
        EquationArg::Linear => Equation::Linear,
    };
    let start = FlowState::from_potential(&p, a.rho_max, a.n_grid)?
        .with_shift(a.rho_0)
        .with_equation(equation);
    let history = evolve_history(&start, a.dtau, a.steps)?;
    let track = track_saddle(&history)?;
    let last = history.last().expect("history holds the initial state");
    let mut report = if a.profile {
        let mut r = Report::new(&["rho", "R"]);
        for (x, v) in last.grid().points().into_iter().zip(last.values()) {
            r.row(vec![x.into(), (*v).into()]);
        }
        r
    } else {
        let mut r = Report::new(&["tau", "gamma", "rho_c", "residual"]);
        for row in &track.rows {
            r.row(vec![
                row.tau.into(),
                row.gamma.into(),
                row.rho_c.into(),
                row.residual.into(),
            ]);
        }
        r
    };
    report.set("tau_final", last.tau());
    report.set("gamma_final", last.gamma());
    report.set("rho_c_final", track.rows.last().and_then(|r| r.rho_c));
    report.set("drift_residual_max", track.max_residual);
    report.set("states_without_saddle", track.missing);
    Ok(report)
}

fn fixed_point(a: &FixedPointArgs) -> anyhow::Result<Report> {
    let gamma = match (a.n, a.gamma) {
        (Some(0), _) => bail!("--n must be at least 1"),
        (Some(n), _) => -1.0 / n as f64,
        (None, Some(g)) => g,
        (None, None) => bail!("one of --n or --gamma is required"),
    };
    let order = a.n.or_else(|| polynomial_order(gamma));
    let mut report = match a.emit_series {
        Some(k) => {
            let approx = series_coeffs(&gamma, k)?;
            let exact = match a.n {
                Some(n) => Some(series_coeffs(&Rational::new(-1, n as i64), k)?),
                None => None,
            };
            let mut r = Report::new(&["k", "coeff", "exact"]);
            for (i, c) in approx.coeffs().iter().enumerate() {
                let e = exact.as_ref().map(|s| s.coeff(i).to_string());
                r.row(vec![i.into(), (*c).into(), e.into()]);
            }
            r
        }
        None => {
            let grid = UniformGrid::new(0.0, a.rho_max, a.n_grid)?;
            let sol = solve_fixed_point(gamma, &grid)?;
            let mut r = Report::new(&FIXED_POINT_CSV_HEADER.split(',').collect::<Vec<_>>());
            for ((x, v), e) in grid
                .points()
                .into_iter()
                .zip(sol.values().values())
                .zip(sol.residuals())
            {
                r.row(vec![x.into(), (*v).into(), e.into()]);
            }
            r.set("max_residual", sol.max_residual());
            r
        }
    };
    report.set("gamma", gamma);
    report.set("polynomial_order", order);
    match singularity(gamma)? {
        Some(s) => {
            report.set("singularity_rho", s.rho_modulus);
            report.set("singularity_R", s.r_modulus);
            report.set("series_radius", series_radius(gamma, SERIES_RADIUS_ORDER)?);
        }
        None => report.note("no finite singularity"),
    }
    let duality = DUALITY_POINTS
        .iter()
        .map(|&x| duality_check(gamma, x))
        .collect::<largen_core::Result<Vec<f64>>>()?;
    report.set(
        "duality_residual_max",
        duality.iter().cloned().fold(0.0, f64::max),
    );
    Ok(report)
}

fn spectrum_cmd(a: &SpectrumArgs) -> anyhow::Result<Report> {
    let model = match a.model {
        SpectrumModelArg::Vector => Model::VectorD0,
        SpectrumModelArg::Matrix => Model::Matrix,
        SpectrumModelArg::Qm => Model::VectorQm,
    };
    let s = spectrum(model, a.m, a.count)?;
    let mut report = Report::new(&["index", "kappa", "kappa_float"]);
    for (i, k) in &s.eigenvalues {
        report.row(vec![
            (*i).into(),
            k.to_string().into(),
            rational_to_f64(k).into(),
        ]);
    }
    report.set("model", s.model.tag());
    report.set("m", s.m);
    report.set("relevant_directions", s.positive_count);
    for (k, why) in &s.excluded {
        report.note(format!("excluded κ = {k}: {why}"));
    }
    Ok(report)
}

fn poly_text(p: &Poly<Rational>) -> String {
    let mut terms = Vec::new();
    for (k, c) in p.coeffs().iter().enumerate() {
        if *c.numer() == 0 {
            continue;
        }
        let mag = if *c.numer() < 0 { -*c } else { *c };
        let coeff = if mag == Rational::from_integer(1) && k > 0 {
            String::new()
        } else {
            mag.to_string()
        };
        let var = match k {
            0 => String::new(),
            1 => "g".to_string(),
            _ => format!("g^{k}"),
        };
        let sign = if *c.numer() < 0 { "-" } else { "+" };
        terms.push((sign, format!("{coeff}{var}")));
    }
    let mut out = String::new();
    for (i, (sign, body)) in terms.iter().enumerate() {
        match (i, *sign) {
            (0, "-") => out.push('-'),
            (0, _) => {}
            (_, s) => out.push_str(&format!(" {s} ")),
        }
        out.push_str(body);
    }
    if out.is_empty() {
        "0".into()
    } else {
        out
    }
}

fn beta(a: &BetaArgs) -> anyhow::Result<Report> {
    let b = match a.model {
        BetaModelArg::Vector => beta_vector(a.order)?,
        BetaModelArg::Matrix => beta_matrix(a.order)?,
    };
    let mut report = Report::new(&["g", "beta"]);
    for (g, v) in b.sweep(a.g_min, a.g_max, a.points) {
        report.row(vec![g.into(), v.into()]);
    }
    report.set("beta", poly_text(&b.beta));
    for (g, slope) in &b.fixed_points {
        report.note(format!("fixed point g* = {g}, beta'(g*) = {slope}"));
    }
    if let Some((g, _)) = b.fixed_points.iter().find(|(g, _)| *g.numer() != 0) {
        report.set("g_star", g.to_string());
    }
    report.set(
        "exact_critical_coupling",
        b.exact_critical_coupling.to_string(),
    );
    let name = match a.model {
        BetaModelArg::Vector => "gamma",
        BetaModelArg::Matrix => "gamma_string",
    };
    report.set(name, b.derived_exponent.map(|e| e.to_string()));
    Ok(report)
}

fn exponents(a: &ExponentsArgs) -> anyhow::Result<Report> {
    let mut report;
    match a.model {
        ExponentModelArg::D0 => {
            if a.m < 2 {
                bail!("need m ≥ 2, got {}", a.m);
            }
            report = Report::new(&["q", "exponent", "exponent_float"]);
            let qs: Vec<usize> = a.q.map_or_else(|| (1..a.m).collect(), |q| vec![q]);
            for q in qs {
                if q < 1 || q >= a.m {
                    bail!("need 1 ≤ q < m, got q = {q}");
                }
                let e = Rational::new(q as i64 - a.m as i64, a.m as i64);
                report.row(vec![
                    q.into(),
                    e.to_string().into(),
                    rational_to_f64(&e).into(),
                ]);
            }
            report.note("v_q must scale as N^{q/m − 1} to stay in the critical window");
        }
        ExponentModelArg::Qm => {
            report = Report::new(&["q", "alpha_exponent", "v_exponent"]);
            let qs: Vec<usize> = a.q.map_or_else(|| (1..=a.m).collect(), |q| vec![q]);
            for q in qs {
                let (alpha, v) = scaling_exponents_qm(a.m, q)?;
                report.row(vec![
                    q.into(),
                    alpha.to_string().into(),
                    v.to_string().into(),
                ]);
            }
        }
        ExponentModelArg::MatrixDoubleScaling => {
            let (gamma, expo) = double_scaling_matrix(a.m)?;
            report = Report::new(&["m", "gamma_string", "coupling_exponent"]);
            report.row(vec![
                a.m.into(),
                gamma.to_string().into(),
                expo.to_string().into(),
            ]);
            report.note(format!("N (g − g_c)^{expo} is held fixed"));
        }
    }
    report.set("m", a.m);
    Ok(report)
}

fn verify_cmd() -> anyhow::Result<Report> {
    let checks = verify::run_all();
    let mut report = Report::new(&["module", "property", "passed", "detail"]);
    for c in &checks {
        report.row(vec![
            c.module.into(),
            c.name.into(),
            c.passed.into(),
            c.detail.clone().into(),
        ]);
        let mark = if c.passed { "PASS" } else { "FAIL" };
        report.note(format!(
            "{mark} {:<11} {:<42} {}",
            c.module, c.name, c.detail
        ));
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    report.set("passed", passed);
    report.set("failed", checks.len() - passed);
    report.failed = passed != checks.len();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::Cell;

    #[test]
    fn beta_polynomial_text() {
        let p = Poly::new(vec![
            Rational::from_integer(0),
            Rational::from_integer(1),
            Rational::from_integer(6),
        ]);
        assert_eq!(poly_text(&p), "g + 6g^2");
        let q = Poly::new(vec![
            Rational::new(-1, 2),
            Rational::from_integer(0),
            Rational::from_integer(-1),
        ]);
        assert_eq!(poly_text(&q), "-1/2 - g^2");
    }

    #[test]
    fn cells_accept_optional_values() {
        assert_eq!(Cell::from(None::<f64>).to_string(), "");
    }
}

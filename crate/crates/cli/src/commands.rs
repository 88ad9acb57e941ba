//! The six commands. Each returns a table for its CSV file plus the metrics
//! and checks that go into `run.json`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use dunkl_annulus::green::{GreenRoute, PotentialConfig};
use dunkl_annulus::kernels::{Annulus, BoundaryData, SeriesConfig};
use dunkl_annulus::quadrature::{annulus_rule, sphere_rule};
use dunkl_annulus::solvers::{semilinear_solve, Phi2, SemilinearConfig, SemilinearProblem};
use dunkl_annulus::{DunklSystem, LaplacianStencil, RootSystem, ScalarField};

use crate::config::{Kind, Phi2Kind, Route, RunConfig};
use crate::error::CliError;
use crate::expr::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Constants,
    Dirichlet,
    Green,
    Potential,
    Semilinear,
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Dirichlet => "dirichlet",
            Command::Green => "green",
            Command::Potential => "potential",
            Command::Semilinear => "semilinear",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
}

impl Cell {
    /// Floats use 17 significant digits; negative zero prints as zero.
    pub fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{:.16e}", v + 0.0),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &str, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance, passed: measured < tolerance }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub table: Table,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let an = build_annulus(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match command {
        Command::Constants => constants(&an, cfg),
        Command::Dirichlet => dirichlet(&an, cfg, &mut rng),
        Command::Green => green(&an, cfg, &mut rng),
        Command::Potential => potential(&an, cfg, &mut rng),
        Command::Semilinear => semilinear(&an, cfg),
        Command::Verify => verify(&an, cfg, &mut rng),
    }
}

pub fn build_annulus(cfg: &RunConfig) -> Result<Annulus, CliError> {
    let d = cfg.geometry.dim;
    let roots = match cfg.root_system.kind {
        Kind::Trivial => RootSystem::trivial(d)?,
        Kind::SignGroup => {
            let axes: Vec<(usize, f64)> = cfg.root_system.multiplicities.iter().copied().enumerate().filter(|(_, k)| *k > 0.0).collect();
            RootSystem::sign_group(d, &axes)?
        }
    };
    let series = SeriesConfig { max_degree: cfg.series.max_degree, tol: cfg.series.tol, ..SeriesConfig::default() };
    let an = Annulus::new(DunklSystem::new(roots)?, cfg.geometry.rho, series)?;
    Ok(match cfg.quadrature.boundary_order {
        0 => an,
        n => an.with_boundary_rule(sphere_rule(d, n)?)?,
    })
}

fn expr(text: &str, d: usize) -> Result<Expr, CliError> {
    Expr::parse(text, d).map_err(|m| CliError::Invalid(vec![m]))
}

fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.into_iter().map(|a| a / n).collect();
        }
    }
}

fn shell_point(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    let r = rng.random_range(lo..hi);
    unit(rng, d).into_iter().map(|a| a * r).collect()
}

fn coords(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("{prefix}{j}")).collect()
}

fn nums(x: &[f64]) -> Vec<Cell> {
    x.iter().map(|v| Cell::Num(*v)).collect()
}

fn route(r: Route) -> GreenRoute {
    match r {
        Route::Series => GreenRoute::Series,
        Route::Definition => GreenRoute::Definition,
        Route::Closed => GreenRoute::Closed,
    }
}

fn constants(an: &Annulus, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = an.system().constants();
    let table = Table {
        header: ["d", "gamma", "lambda_k", "d_k", "sphere_area"].map(String::from).to_vec(),
        rows: vec![vec![Cell::Int(cfg.geometry.dim), Cell::Num(c.gamma), Cell::Num(c.lambda), Cell::Num(c.d_k), Cell::Num(c.sphere_area)]],
    };
    let metrics = [("gamma", c.gamma), ("lambda_k", c.lambda), ("d_k", c.d_k)].map(|(k, v)| (k.to_string(), v)).into();
    Ok(Outcome { table, metrics, checks: Vec::new() })
}

fn dirichlet(an: &Annulus, cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Outcome, CliError> {
    let d = an.dim();
    let block = &cfg.dirichlet;
    let (outer, inner) = (expr(&block.outer, d)?, expr(&block.inner, d)?);
    let exact = block.exact.as_deref().map(|e| expr(e, d)).transpose()?;
    let sol = an.dirichlet_solve(BoundaryData { outer: &outer, inner: &inner }, an.boundary_rule())?;
    let mut header = coords("x", d);
    header.extend(["value", "tail_bound", "degree"].map(String::from));
    let mut table = Table { header, rows: Vec::new() };
    let mut worst: f64 = 0.0;
    for _ in 0..block.samples {
        let x = shell_point(rng, d, an.rho(), 1.0);
        let u = sol.evaluate(&x)?;
        if let Some(e) = &exact {
            worst = worst.max((u.value - e.eval(&x)).abs());
        }
        let mut row = nums(&x);
        row.extend([Cell::Num(u.value), Cell::Num(u.tail_bound), Cell::Int(u.degree)]);
        table.rows.push(row);
    }
    let mut out = Outcome { table, ..Outcome::default() };
    out.metrics.insert("resolvable_degree".into(), sol.resolvable_degree() as f64);
    if exact.is_some() {
        out.checks.push(Check::below("max_abs_error", worst, block.tol));
    }
    Ok(out)
}

fn green(an: &Annulus, cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Outcome, CliError> {
    let d = an.dim();
    let g = &cfg.green;
    let (lo, hi) = (an.rho() + g.margin, 1.0 - g.margin);
    let mut header = coords("x", d);
    header.extend(coords("y", d));
    header.extend(["value", "route", "tail_bound"].map(String::from));
    let mut table = Table { header, rows: Vec::new() };
    let mut spread: f64 = 0.0;
    for _ in 0..g.pairs {
        let (x, y) = loop {
            let x = shell_point(rng, d, lo, hi);
            let y = shell_point(rng, d, lo, hi);
            if an.system().roots().orbit_distance(&x, &y) > g.separation {
                break (x, y);
            }
        };
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for r in &g.routes {
            let v = an.green(&x, &y, route(*r))?;
            min = min.min(v.value);
            max = max.max(v.value);
            let mut row = nums(&x);
            row.extend(nums(&y));
            row.extend([Cell::Num(v.value), Cell::Text(v.route.name().into()), Cell::Num(v.tail_bound)]);
            table.rows.push(row);
        }
        spread = spread.max(max - min);
    }
    let mut out = Outcome { table, ..Outcome::default() };
    if g.routes.len() > 1 {
        out.checks.push(Check::below("route_disagreement", spread, g.tol));
    }
    Ok(out)
}

fn potential(an: &Annulus, cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Outcome, CliError> {
    let d = an.dim();
    let f = expr(&cfg.potential.f, d)?;
    let q = &cfg.quadrature;
    let rule = annulus_rule(d, an.rho(), q.annulus_radial, q.annulus_sphere)?;
    let pc = PotentialConfig::default();
    let mut header = coords("x", d);
    header.extend(["value", "local", "bracket"].map(String::from));
    let mut table = Table { header, rows: Vec::new() };
    let mut widest: f64 = 0.0;
    for _ in 0..cfg.potential.points {
        let x = shell_point(rng, d, an.rho() + 0.05, 0.95);
        let p = an.green_potential(&f, &x, &rule, &pc)?;
        widest = widest.max(p.bracket);
        let mut row = nums(&x);
        row.extend([Cell::Num(p.value), Cell::Num(p.local), Cell::Num(p.bracket)]);
        table.rows.push(row);
    }
    let mut out = Outcome { table, ..Outcome::default() };
    out.metrics.insert("max_bracket".into(), widest);
    Ok(out)
}

fn semilinear(an: &Annulus, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = an.dim();
    let s = &cfg.semilinear;
    let (outer, inner, phi1) = (expr(&s.outer, d)?, expr(&s.inner, d)?, expr(&s.phi1, d)?);
    let phi2 = match s.phi2 {
        Phi2Kind::Linear => Phi2::Linear(s.phi2_param),
        Phi2Kind::Power => Phi2::Power(s.phi2_param),
        Phi2Kind::Saturating => Phi2::Saturating,
    };
    let problem = SemilinearProblem { annulus: an, outer: &outer, inner: &inner, phi1: &phi1, phi2 };
    let sc = SemilinearConfig { radial: s.radial, sphere: s.sphere, theta: s.theta, ..SemilinearConfig::for_dim(d) };
    let sol = semilinear_solve(&problem, &sc, s.tol, s.max_iter)?;
    let mut header = coords("x", d);
    header.push("u".into());
    let grid = sol.field.grid();
    let rows = (0..grid.len())
        .map(|i| {
            let mut row = nums(&grid.point(i));
            row.push(Cell::Num(sol.field.values()[i]));
            row
        })
        .collect();
    let mut out = Outcome { table: Table { header, rows }, ..Outcome::default() };
    out.metrics.insert("iterations".into(), sol.iterations as f64);
    out.metrics.insert("c1".into(), sol.bracket.0);
    out.metrics.insert("c2".into(), sol.bracket.1);
    out.checks.push(Check::below("residual", sol.residual, s.tol));
    Ok(out)
}

fn verify(an: &Annulus, cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Outcome, CliError> {
    let d = an.dim();
    let n = cfg.verify.samples;
    let sys = an.system();
    let rho = an.rho();
    let mut checks = Vec::new();

    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let x = shell_point(rng, d, 0.0, 0.8);
        let rule = an.boundary_rule();
        let kernel = rule.iter().map(|(xi, _)| sys.poisson_ball(&x, xi)).collect::<Result<Vec<f64>, _>>()?;
        let v: f64 = rule.iter().zip(&kernel).map(|((xi, w), k)| w * k * sys.weight(xi)).sum();
        worst = worst.max((v / sys.d_k() - 1.0).abs());
    }
    checks.push(Check::below("poisson_normalization", worst, 1e-7));

    let one = |_: &[f64]| 1.0;
    let sol = an.dirichlet_solve(BoundaryData { outer: &one, inner: &one }, an.boundary_rule())?;
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        worst = worst.max((sol.evaluate(&shell_point(rng, d, rho, 1.0))?.value - 1.0).abs());
    }
    checks.push(Check::below("dirichlet_constant", worst, 1e-7));

    let outer = |x: &[f64]| (x[0] - 0.5 * x[1]).sin() + 1.0;
    let inner = |x: &[f64]| x[0] * x[0];
    let sol = an.dirichlet_solve(BoundaryData { outer: &outer, inner: &inner }, an.boundary_rule())?;
    let stencil = LaplacianStencil::default().with_richardson();
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let x = loop {
            let x = shell_point(rng, d, rho + 0.1, 0.9);
            if sys.roots().hyperplane_distance(&x) > 0.05 {
                break x;
            }
        };
        worst = worst.max(sys.dunkl_laplacian(&sol, &x, &stencil)?.abs());
    }
    checks.push(Check::below("dirichlet_harmonic_residual", worst, 1e-4));

    let group = sys.roots().group_elements();
    let (mut sym, mut inv, mut routes, mut min) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY);
    for i in 0..n {
        let (x, y) = loop {
            let x = shell_point(rng, d, rho + 0.1, 0.9);
            let y = shell_point(rng, d, rho + 0.1, 0.9);
            if sys.roots().orbit_distance(&x, &y) > 0.05 {
                break (x, y);
            }
        };
        let g = an.green(&x, &y, GreenRoute::Series)?.value;
        sym = sym.max((g - an.green(&y, &x, GreenRoute::Series)?.value).abs());
        let el = &group[i % group.len()];
        inv = inv.max((g - an.green(&el.apply(&x), &el.apply(&y), GreenRoute::Series)?.value).abs());
        routes = routes.max((g - an.green(&x, &y, GreenRoute::Definition)?.value).abs());
        min = min.min(g);
    }
    checks.push(Check::below("green_symmetry", sym, 1e-8));
    checks.push(Check::below("green_invariance", inv, 1e-8));
    checks.push(Check::below("green_routes", routes, 1e-6));
    checks.push(Check { name: "green_positivity".into(), measured: min, tolerance: 0.0, passed: min > 0.0 });

    // G(x, .) vanishes linearly: moving ten times closer to the sphere divides it by ten.
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let x = shell_point(rng, d, 0.7, 0.8);
        let dir = unit(rng, d);
        for (edge, inward) in [(1.0, -1.0), (rho, 1.0)] {
            let at = |t: f64| -> Result<f64, CliError> {
                let y: Vec<f64> = dir.iter().map(|c| c * (edge + inward * t)).collect();
                Ok(an.green(&x, &y, GreenRoute::Series)?.value)
            };
            worst = worst.max((at(1e-3)? / at(1e-2)? - 0.1).abs());
        }
    }
    checks.push(Check::below("green_boundary_decay", worst, 0.02));

    let (mut series, mut origin, mut kelvin) = (0.0f64, 0.0f64, 0.0f64);
    let zero = vec![0.0; d];
    let f = |p: &[f64]| (p[0] - 0.3 * p[1]).sin() + p.iter().map(|v| v * v).sum::<f64>();
    let twice = sys.kelvin(sys.kelvin(f));
    for _ in 0..n {
        let x = shell_point(rng, d, 0.3, 1.0);
        let y = shell_point(rng, d, 0.0, 0.9 * x.iter().map(|v| v * v).sum::<f64>().sqrt());
        series = series.max((an.newton_series(&x, &y)?.value - sys.newton(&x, &y)?).abs());
        let closed = sys.newton_at_origin(&x);
        origin = origin.max((sys.newton(&x, &zero)? - closed).abs() / closed.max(1.0));
        kelvin = kelvin.max((twice.try_eval(&x)? - f(&x)).abs() / f(&x).abs().max(1.0));
    }
    checks.push(Check::below("newton_series", series, 1e-7));
    checks.push(Check::below("newton_origin", origin, 1e-10));
    checks.push(Check::below("kelvin_involution", kelvin, 1e-10));

    let table = Table {
        header: ["check", "measured", "tolerance", "passed"].map(String::from).to_vec(),
        rows: checks
            .iter()
            .map(|c| vec![Cell::Text(c.name.clone()), Cell::Num(c.measured), Cell::Num(c.tolerance), Cell::Text(c.passed.to_string())])
            .collect(),
    };
    Ok(Outcome { table, metrics: BTreeMap::new(), checks })
}

//! Named verification suites, their configuration and the JSON report.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cohomology::{CocycleSystem, CohomologyReport, COBOUNDARY_TOL, REQUIRED_GAP};
use crate::contour::{try_cauchy_derivative, Quadrature};
use crate::eichler::{
    base_point_shift, binomial, bol_points, bol_sweep, factorial, iterated_antiderivative, period_fit,
    period_via_integral, verify_cocycle, EichlerIntegral, PeriodCocycle,
};
use crate::error::{Error, Result};
use crate::forms::{cyclic_form, poincare_form_with, test_fn, FormHandle};
use crate::fuchsian::{octagon_group, vertex_chase, EdgeLabel, EnumerationOptions, FundamentalOctagon, GroupWord, SurfaceGroup};
use crate::hyperelliptic::{classical_report, riemann_relation_2, ClassicalReport, HyperellipticCurve};
use crate::moebius::{holo, MoebiusMap, C64};
use crate::polyspace::BoundedPoly;
use crate::relations::{
    bilinear_integral, budget, coefficient_relation_check, cross_weight_relation, edge_moment_check,
    edge_pair_reduction, max_on_chord, paired_bilinear, CheckParams, CheckRecord,
};

pub const SCHEMA_VERSION: u32 = 1;
/// Lower bound on the derivative-identity residual away from the critical order.
pub const BOL_SEPARATION: f64 = 1e-2;
/// Multiple of the defect estimate allowed for relations of truncated forms.
pub const DEFECT_MULTIPLE: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Bol,
    Antiderivative,
    Periods,
    Cocycle,
    Cohomology,
    Bilinear,
    EdgeMoments,
    CrossWeight,
    Classical,
    All,
}

impl Suite {
    pub const INDIVIDUAL: [Suite; 9] = [
        Suite::Bol,
        Suite::Antiderivative,
        Suite::Periods,
        Suite::Cocycle,
        Suite::Cohomology,
        Suite::Bilinear,
        Suite::EdgeMoments,
        Suite::CrossWeight,
        Suite::Classical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Bol => "bol",
            Suite::Antiderivative => "antiderivative",
            Suite::Periods => "periods",
            Suite::Cocycle => "cocycle",
            Suite::Cohomology => "cohomology",
            Suite::Bilinear => "bilinear",
            Suite::EdgeMoments => "edge-moments",
            Suite::CrossWeight => "cross-weight",
            Suite::Classical => "classical",
            Suite::All => "all",
        }
    }

    /// Suites built on truncated Poincaré series.
    pub fn uses_poincare(self) -> bool {
        matches!(self, Suite::Cocycle | Suite::Cohomology | Suite::Bilinear | Suite::EdgeMoments | Suite::CrossWeight | Suite::All)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::INDIVIDUAL
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::ConfigError(format!("unknown suite `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub suite: Suite,
    pub m: i32,
    /// Parameter of the second form in the cross-weight suite.
    pub n: i32,
    /// Truncation radius of the Poincaré series.
    pub radius: f64,
    /// Seed exponents of the Poincaré series.
    pub nu: Vec<u32>,
    /// Threshold for checks that are exact in principle; quadratures run a
    /// thousand times tighter.
    pub tol: f64,
    /// Base point of the Eichler integrals; defaults to `i` on the cyclic
    /// model and to the polygon's first vertex on the octagon.
    pub tau1: Option<[f64; 2]>,
    pub out: Option<PathBuf>,
    /// Element cap for ball enumeration.
    pub cap: usize,
    /// Multiplier parameter of the cyclic model `⟨diag(λ, 1/λ)⟩`.
    pub lambda: f64,
    pub branch_points: Option<[f64; 6]>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            suite: Suite::All,
            m: -1,
            n: -2,
            radius: 8.0,
            nu: vec![0, 2],
            tol: 1e-8,
            tau1: None,
            out: None,
            cap: 1_000_000,
            lambda: 2.0,
            branch_points: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigError(msg));
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        if !(-10..=0).contains(&self.m) {
            return bad(format!("m must lie in -10..=0, got {}", self.m));
        }
        let needs_weight = self.suite.uses_poincare() || matches!(self.suite, Suite::Bol | Suite::Antiderivative | Suite::Periods);
        if needs_weight && self.m > -1 {
            return bad(format!("suite {} needs m <= -1, got {}", self.suite, self.m));
        }
        if self.suite.uses_poincare() {
            if !(self.radius > 0.0 && self.radius.is_finite()) {
                return bad(format!("radius must be positive, got {}", self.radius));
            }
            if self.nu.is_empty() {
                return bad("nu needs at least one seed exponent".into());
            }
            if self.cap == 0 {
                return bad("element cap must be positive".into());
            }
        }
        if matches!(self.suite, Suite::CrossWeight | Suite::All) && !(self.n < self.m && self.n >= -10) {
            return bad(format!("cross-weight needs -10 <= n < m, got m = {}, n = {}", self.m, self.n));
        }
        if !(self.lambda > 1.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must exceed 1, got {}", self.lambda));
        }
        if let Some([_, im]) = self.tau1 {
            if !(im > 0.0) {
                return bad(format!("tau1 must lie in the upper half-plane, got Im = {im}"));
            }
        }
        if matches!(self.suite, Suite::CrossWeight | Suite::All) && -2 * self.n > 20 {
            return bad(format!("n = {} exceeds the degree limit", self.n));
        }
        Ok(())
    }

    fn quadrature(&self) -> Quadrature {
        Quadrature::with_tol(self.tol * 1e-3)
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Record {
    Check(CheckRecord),
    Cohomology { pass: bool, report: CohomologyReport },
    Classical { pass: bool, report: ClassicalReport },
    Error { check_id: String, params: CheckParams, error: String, pass: bool },
}

impl Record {
    pub fn pass(&self) -> bool {
        match self {
            Record::Check(r) => r.pass,
            Record::Cohomology { pass, .. } | Record::Classical { pass, .. } | Record::Error { pass, .. } => *pass,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportEntry {
    pub suite: Suite,
    #[serde(flatten)]
    pub record: Record,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: RunConfig,
    pub records: Vec<ReportEntry>,
    pub pass: bool,
    pub wall_clock_seconds: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the wall-clock field zeroed, for run-to-run comparison.
    pub fn to_json_without_clock(&self) -> String {
        let mut r = self.clone();
        r.wall_clock_seconds = 0.0;
        r.to_json()
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportEntry> {
        self.records.iter().filter(|e| !e.record.pass())
    }
}

/// Runs the configured suite; module errors become failing records.
pub fn run_suite(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let start = Instant::now();
    let mut ctx = Context::new(config);
    let suites: Vec<Suite> = match config.suite {
        Suite::All => Suite::INDIVIDUAL.to_vec(),
        s => vec![s],
    };
    let mut records = Vec::new();
    for suite in suites {
        let out = ctx.run(suite);
        records.extend(out.into_iter().map(|record| ReportEntry { suite, record }));
    }
    let pass = records.iter().all(|e| e.record.pass());
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        records,
        pass,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// `Ω_A` for `f = z^{m-1}` on `⟨diag(λ, 1/λ)⟩` with base point `τ₁`, from
/// termwise integration of `(τ - σ)^N σ^{m-1}/N!`.
pub fn cyclic_period_closed_form(lambda: f64, m: i32, tau1: C64) -> BoundedPoly {
    let n = (-2 * m) as usize;
    let half = n / 2;
    let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
    for j in 0..=n {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let c = binomial(n, j) * sign;
        if j == half {
            coeffs[n - j] += c * 2.0 * lambda.ln();
        } else {
            let e = j as i32 + m;
            coeffs[n - j] -= c * tau1.powi(e) / e as f64 * (lambda.powi(n as i32 - 2 * j as i32) - 1.0);
        }
    }
    BoundedPoly::new(coeffs.into_iter().map(|x| x / factorial(n)).collect())
}

struct Context<'a> {
    config: &'a RunConfig,
    quad: Quadrature,
    octagon: Option<std::result::Result<(Arc<SurfaceGroup>, FundamentalOctagon), Error>>,
    forms: BTreeMap<(i32, u32), FormHandle>,
    integrals: BTreeMap<(i32, u32), EichlerIntegral>,
    cocycles: BTreeMap<(i32, u32), PeriodCocycle>,
}

fn params(m: i32) -> CheckParams {
    CheckParams { m: Some(m), ..Default::default() }
}

impl<'a> Context<'a> {
    fn new(config: &'a RunConfig) -> Self {
        Self {
            config,
            quad: config.quadrature(),
            octagon: None,
            forms: BTreeMap::new(),
            integrals: BTreeMap::new(),
            cocycles: BTreeMap::new(),
        }
    }

    fn run(&mut self, suite: Suite) -> Vec<Record> {
        let mut out = Vec::new();
        let result = match suite {
            Suite::Bol => self.bol(&mut out),
            Suite::Antiderivative => self.antiderivative(&mut out),
            Suite::Periods => self.periods(&mut out),
            Suite::Cocycle => self.cocycle(&mut out),
            Suite::Cohomology => self.cohomology(&mut out),
            Suite::Bilinear => self.bilinear(&mut out),
            Suite::EdgeMoments => self.edge_moments(&mut out),
            Suite::CrossWeight => self.cross_weight(&mut out),
            Suite::Classical => self.classical(&mut out),
            Suite::All => unreachable!("expanded by run_suite"),
        };
        if let Err(e) = result {
            out.push(error_record(suite.name(), params(self.config.m), &e));
        }
        out
    }

    fn tau1_or(&self, default: C64) -> C64 {
        self.config.tau1.map_or(default, |[re, im]| C64::new(re, im))
    }

    fn octagon(&mut self) -> Result<(Arc<SurfaceGroup>, FundamentalOctagon)> {
        if self.octagon.is_none() {
            let built = octagon_group().and_then(|(g, oct)| match self.config.tau1 {
                Some([re, im]) => Ok((g.clone(), vertex_chase(&g, C64::new(re, im))?)),
                None => Ok((g, oct)),
            });
            self.octagon = Some(built);
        }
        self.octagon.clone().expect("just set")
    }

    fn form(&mut self, m: i32, nu: u32) -> Result<FormHandle> {
        if let Some(f) = self.forms.get(&(m, nu)) {
            return Ok(f.clone());
        }
        let (g, _) = self.octagon()?;
        let opts = EnumerationOptions { cap: self.config.cap, ..Default::default() };
        let f = poincare_form_with(&g, m, nu, self.config.radius, opts, true)?;
        self.forms.insert((m, nu), f.clone());
        Ok(f)
    }

    fn integral(&mut self, m: i32, nu: u32) -> Result<EichlerIntegral> {
        if let Some(phi) = self.integrals.get(&(m, nu)) {
            return Ok(phi.clone());
        }
        let f = self.form(m, nu)?;
        let (_, oct) = self.octagon()?;
        let phi = iterated_antiderivative(&f, oct.tau1())?;
        self.integrals.insert((m, nu), phi.clone());
        Ok(phi)
    }

    fn cocycle_of(&mut self, m: i32, nu: u32) -> Result<PeriodCocycle> {
        if let Some(c) = self.cocycles.get(&(m, nu)) {
            return Ok(c.clone());
        }
        let phi = self.integral(m, nu)?;
        let c = PeriodCocycle::from_eichler(&phi)?;
        self.cocycles.insert((m, nu), c.clone());
        Ok(c)
    }

    fn bol(&mut self, out: &mut Vec<Record>) -> Result<()> {
        let m = self.config.m;
        let critical = (1 - 2 * m) as usize;
        let max_order = critical.max(8);
        for (k, residual) in bol_sweep(self.config.lambda, m, max_order)? {
            let p = CheckParams { k_prime: Some(k), ..params(m) };
            out.push(Record::Check(if k == critical {
                CheckRecord::at_most("bol-identity", p, residual, self.config.tol)
            } else {
                CheckRecord::at_least("bol-separation", p, residual, BOL_SEPARATION)
            }));
        }
        Ok(())
    }

    fn antiderivative(&mut self, out: &mut Vec<Record>) -> Result<()> {
        let m = self.config.m;
        let order = (1 - 2 * m) as usize;
        let tau1 = self.tau1_or(C64::new(0.0, 1.0));
        let kernels: [(&str, fn(C64) -> C64); 3] =
            [("1", |_| C64::new(1.0, 0.0)), ("sigma", |s| s), ("sigma^-2", |s| s.powi(-2))];
        for (label, f) in kernels {
            let p = CheckParams { label: Some(label.into()), ..params(m) };
            let rec = (|| {
                let phi = iterated_antiderivative(&test_fn(m, label, holo(f)), tau1)?;
                let mut worst: f64 = 0.0;
                for z in bol_points() {
                    let d = try_cauchy_derivative(|s| phi.eval(s), z, order, 0.3 * z.im)?;
                    worst = worst.max((d - f(z)).norm() / f(z).norm());
                }
                Ok(CheckRecord::at_most("kernel-reconstruction", p.clone(), worst, 10.0 * self.config.tol))
            })();
            out.push(record_or_error(rec, "kernel-reconstruction", p));
        }
        Ok(())
    }

    fn periods(&mut self, out: &mut Vec<Record>) -> Result<()> {
        let (m, lambda) = (self.config.m, self.config.lambda);
        let tau1 = self.tau1_or(C64::new(0.0, 1.0));
        let f = cyclic_form(lambda, m)?;
        let a = MoebiusMap::dilation(lambda);
        let want = cyclic_period_closed_form(lambda, m, tau1);
        let phi = iterated_antiderivative(&f, tau1)?;
        let fitted = period_fit(&phi, &a).map(|fit| fit.poly);
        let via = period_via_integral(&f, &a, tau1, &self.quad);
        for (id, got) in [("period-fit", fitted), ("period-integral", via)] {
            match got {
                Ok(poly) => {
                    for mu in 0..=want.degree_bound() {
                        let p = CheckParams { mu: Some(mu), ..params(m) };
                        out.push(Record::Check(CheckRecord::compare(id, p, poly.coeff(mu), want.coeff(mu), self.config.tol)));
                    }
                }
                Err(e) => out.push(error_record(id, params(m), &e)),
            }
        }
        Ok(())
    }

    fn cocycle(&mut self, out: &mut Vec<Record>) -> Result<()> {
        let m = self.config.m;
        let (g, _) = self.octagon()?;
        let letters = g.letters();
        for nu in self.config.nu.clone() {
            let base = CheckParams { nu: vec![nu], radius: Some(self.config.radius), ..params(m) };
            let (mut omega, defect) = match self.cocycle_of(m, nu).and_then(|c| Ok((c, self.form(m, nu)?.defect_estimate()))) {
                Ok(x) => x,
                Err(e) => {
                    out.push(error_record("cocycle-rule", base, &e));
                    continue;
                }
            };
            for &a in &letters {
                for &b in &letters {
                    let (wa, wb) = (GroupWord::letter(a), GroupWord::letter(b));
                    let p = CheckParams { label: Some(format!("{} {}", g.word_name(&wa), g.word_name(&wb))), ..base.clone() };
                    let rec = verify_cocycle(&mut omega, &wa, &wb)
                        .map(|r| CheckRecord::at_most("cocycle-rule", p.clone(), r, DEFECT_MULTIPLE * defect));
                    out.push(record_or_error(rec, "cocycle-rule", p));
                }
                let p = CheckParams { label: Some(format!("{} e", g.word_name(&GroupWord::letter(a)))), ..base.clone() };
                let rec = verify_cocycle(&mut omega, &GroupWord::letter(a), &GroupWord::identity())
                    .map(|r| CheckRecord::at_most("cocycle-identity", p.clone(), r, 0.0));
                out.push(record_or_error(rec, "cocycle-identity", p));
            }
        }
        Ok(())
    }

    fn cohomology(&mut self, out: &mut Vec<Record>) -> Result<()> {
        let m = self.config.m;
        let (g, oct) = self.octagon()?;
        let system = CocycleSystem::new(&g, m)?;
        match system.dimensions() {
            Ok(report) => {
                let genus = report.g;
                let expected = 2 * (1 - 2 * m as i64) as usize * (genus - 1);
                let pass = report.dim_h1 == expected && report.sv_gap >= REQUIRED_GAP;
                out.push(Record::Cohomology { pass, report });
            }
            Err(e) => out.push(error_record("h1-dimension", params(m), &e)),
        }
        for nu in self.config.nu.clone() {
            let p = CheckParams { nu: vec![nu], radius: Some(self.config.radius), ..params(m) };
            let rec = (|| {
                let omega = self.cocycle_of(m, nu)?;
                let defect = self.form(m, nu)?.defect_estimate();
                let values = omega.generator_values()?;
                let scale = values.iter().map(BoundedPoly::max_abs).fold(0.0, f64::max);
                let relator = system.relator_value(&values)?;
                let mut recs = vec![CheckRecord::at_most(
                    "relator-residual",
                    p.clone(),
                    relator.max_abs() / (1.0 + scale),
                    DEFECT_MULTIPLE * defect,
                )];
                let class = system.is_coboundary(&omega)?;
                recs.push(CheckRecord::at_least("eichler-class-nontrivial", p.clone(), class.residual / class.scale, COBOUNDARY_TOL));

                let phi = self.integral(m, nu)?;
                let shifted = EichlerIntegral::new(phi.source(), oct.tau1() + C64::new(0.3, 0.4), phi.quadrature())?;
                let moved = PeriodCocycle::from_eichler(&shifted)?.generator_values()?;
                let diff: Vec<BoundedPoly> = moved.iter().zip(&values).map(|(a, b)| a - b).collect();
                let test = system.is_coboundary_values(&diff)?;
                let witness = base_point_shift(&phi, &shifted)?;
                recs.push(CheckRecord::at_most("base-point-coboundary", p.clone(), test.residual / test.scale.max(1e-300), COBOUNDARY_TOL));
                recs.push(CheckRecord::at_most(
                    "base-point-witness",
                    p.clone(),
                    test.witness.coefficient_distance(&witness),
                    COBOUNDARY_TOL,
                ));
                Ok(recs)
            })();
            match rec {
                Ok(recs) => out.extend(recs.into_iter().map(Record::Check)),
                Err(e) => out.push(error_record("eichler-cocycle", p, &e)),
            }
        }
        Ok(())
    }

    fn bilinear(&mut self, out: &mut Vec<Record>) -> Result<()> {
        let m = self.config.m;
        let (_, oct) = self.octagon()?;
        let nu = self.config.nu.clone();
        for (ia, &na) in nu.iter().enumerate() {
            for &nb in &nu[ia..] {
                let p = CheckParams { nu: vec![na, nb], radius: Some(self.config.radius), ..params(m) };
                let rec = (|| {
                    let phi = self.integral(m, na)?;
                    let psi = self.form(m, nb)?;
                    let mut omega = self.cocycle_of(m, na)?;
                    let defect = phi.source().defect_estimate() + psi.defect_estimate();
                    let phi_psi = |z: C64| phi.eval(z).unwrap_or(C64::new(f64::NAN, 0.0)) * psi.eval(z);
                    let max_integrand = oct.vertices.windows(2).map(|w| max_on_chord(phi_psi, w[0], w[1])).fold(0.0, f64::max);
                    let allowed = budget(DEFECT_MULTIPLE, defect, oct.perimeter(), max_integrand);
                    let zero = C64::new(0.0, 0.0);
                    let direct = bilinear_integral(&phi, &psi, &oct)?;
                    let paired = paired_bilinear(&mut omega, &psi, &oct, &self.quad)?;
                    let mut recs = vec![
                        CheckRecord::compare("bilinear-direct", p.clone(), direct, zero, allowed),
                        CheckRecord::compare("bilinear-paired", p.clone(), paired, zero, allowed),
                    ];
                    for i in 1..=2 * oct.genus {
                        let (lhs, rhs) = edge_pair_reduction(&phi, &mut omega, &psi, &oct, i)?;
                        let (a, b) = oct.edge_endpoints(EdgeLabel::new(i, false));
                        let size = max_on_chord(phi_psi, a, b);
                        let pi = CheckParams { i: Some(i), ..p.clone() };
                        recs.push(CheckRecord::compare("edge-pair", pi, lhs, rhs, budget(DEFECT_MULTIPLE, defect, (b - a).norm(), size)));
                    }
                    let rel = coefficient_relation_check(&mut omega, &psi, &oct, &self.quad)?;
                    recs.push(CheckRecord::compare(
                        "coefficient-relation",
                        p.clone(),
                        rel.sum,
                        -paired,
                        self.config.tol * (1.0 + rel.largest_term),
                    ));
                    Ok(recs)
                })();
                match rec {
                    Ok(recs) => out.extend(recs.into_iter().map(Record::Check)),
                    Err(e) => out.push(error_record("bilinear", p, &e)),
                }
            }
        }
        Ok(())
    }

    fn edge_moments(&mut self, out: &mut Vec<Record>) -> Result<()> {
        let m = self.config.m;
        let (_, oct) = self.octagon()?;
        let degree = (-2 * m) as usize;
        for nu in self.config.nu.clone() {
            let base = CheckParams { nu: vec![nu], radius: Some(self.config.radius), ..params(m) };
            let setup = self.form(m, nu).and_then(|psi| Ok((psi, self.cocycle_of(m, nu)?)));
            let (psi, mut periods) = match setup {
                Ok(x) => x,
                Err(e) => {
                    out.push(error_record("edge-moment", base, &e));
                    continue;
                }
            };
            for i in 1..=oct.genus {
                for mu in 0..=degree {
                    let p = CheckParams { i: Some(i), mu: Some(mu), ..base.clone() };
                    let rec = edge_moment_check(&psi, &mut periods, &oct, i, mu, &self.quad, DEFECT_MULTIPLE)
                        .map(|mut r| {
                            r.params = p.clone();
                            r
                        });
                    out.push(record_or_error(rec, "edge-moment", p));
                }
            }
        }
        Ok(())
    }

    fn cross_weight(&mut self, out: &mut Vec<Record>) -> Result<()> {
        let (m, n) = (self.config.m, self.config.n);
        let (_, oct) = self.octagon()?;
        for nu in self.config.nu.clone() {
            let base = CheckParams { n: Some(n), nu: vec![nu], radius: Some(self.config.radius), ..params(m) };
            let setup = self
                .cocycle_of(m, nu)
                .and_then(|c| Ok((c, self.form(m, nu)?.defect_estimate(), self.form(n, nu)?)));
            let (mut omega, phi_defect, psi) = match setup {
                Ok(x) => x,
                Err(e) => {
                    out.push(error_record("cross-weight", base, &e));
                    continue;
                }
            };
            for i in 1..=oct.genus {
                let p = CheckParams { i: Some(i), ..base.clone() };
                match cross_weight_relation(&mut omega, m, &psi, &oct, i, &self.quad) {
                    Ok(cw) => {
                        let defect = phi_defect + psi.defect_estimate();
                        let allowed = budget(DEFECT_MULTIPLE, defect, cw.edge_length, cw.max_integrand);
                        out.push(Record::Check(CheckRecord::compare("cross-weight", p.clone(), cw.lhs, cw.rhs, allowed)));
                        let scale = 1.0 + cw.lhs.norm() + cw.rhs_algebraic.norm() + cw.pulled_back.norm();
                        out.push(Record::Check(CheckRecord::compare(
                            "cross-weight-pullback",
                            p,
                            cw.lhs - cw.rhs_algebraic,
                            cw.pulled_back,
                            30.0 * self.quad.tol * scale,
                        )));
                    }
                    Err(e) => out.push(error_record("cross-weight", p, &e)),
                }
            }
        }
        Ok(())
    }

    fn classical(&mut self, out: &mut Vec<Record>) -> Result<()> {
        let curve = match self.config.branch_points {
            Some(points) => HyperellipticCurve::new(points)?,
            None => HyperellipticCurve::default_curve(),
        };
        let report = classical_report(&curve)?;
        let p = CheckParams { label: Some(format!("{:?}", curve.branch_points())), ..Default::default() };
        let rel1 = CheckRecord::at_most("riemann-relation-1", p.clone(), report.rel1_residual, self.config.tol);
        let rel2 = CheckRecord::at_least("riemann-relation-2", p.clone(), report.rel2_min_eig, 0.0);
        let flipped = riemann_relation_2(&report.period_matrix.flip_b());
        let control = CheckRecord::at_most("riemann-relation-2-flipped", p, flipped, 0.0);
        let pass = rel1.pass && rel2.pass;
        out.push(Record::Classical { pass, report });
        out.extend([rel1, rel2, control].map(Record::Check));
        Ok(())
    }
}

fn error_record(check_id: &str, params: CheckParams, e: &Error) -> Record {
    Record::Error { check_id: check_id.to_string(), params, error: e.to_string(), pass: false }
}

fn record_or_error(r: Result<CheckRecord>, check_id: &str, params: CheckParams) -> Record {
    match r {
        Ok(rec) => Record::Check(rec),
        Err(e) => error_record(check_id, params, &e),
    }
}

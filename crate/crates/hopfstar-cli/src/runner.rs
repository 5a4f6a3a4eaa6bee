//! Check execution: resolves the `[checks]` section of a scenario against
//! the library's verification functions, assembles probe pools, and collects
//! the results into a report.
//!
//! Every check is invocable by name.  A suite selection (from the `--suite`
//! flag or the `HOPFSTAR_SUITE` environment variable) keeps a requested
//! check when any selected token equals its name or is a dotted prefix of
//! it.  Sampled probe pools are seeded per check from the scenario seed, so
//! results do not depend on which other checks run.

use std::collections::BTreeMap;

use hopfstar::calculus::{calculus_check, Calculus};
use hopfstar::check::{CheckEntry, CheckReport, CheckStatus};
use hopfstar::connection::{
    braided_leibniz_check, connection_diagram_check, dtilde_check, leibniz_check,
    oplus_assoc_check, oplus_check, oplus_equivariant_check, Connection, ConnectionFault,
};
use hopfstar::homdef::{
    adjoint_check, deform_hom_check, dual_check, rtensor_check, rtensor_diagram_check,
    DiagramFault, Hom,
};
use hopfstar::hopf::{default_probes, hopf_check, HopfElement};
use hopfstar::braid::braid_check;
use hopfstar::modalg::{
    module_algebra_check, module_check, module_dequantize_check,
    module_quasi_commutativity_check, quasi_commutativity_check, star_dequantize_check,
    tensor_quotient_check, AlgebraElement, AlgebraKind, AlgebraRef, ModuleElement, Mono, Space,
    SpaceRef, World,
};
use hopfstar::probe::Sampler;
use hopfstar::scalar::Scalar;
use hopfstar::twist::{
    deformed_structure_check, dequantize_check, r_matrix_from_twist, DeformedHopf, RMatrix,
};
use hopfstar::homdef::deform_hom;

use crate::report::{Info, RunReport};
use crate::scenario::{CheckRequest, ErrorKind, Loc, RSpec, Scenario, ScenarioError};

/// All check names the runner knows, for validation and documentation.
pub const CHECK_NAMES: &[&str] = &[
    "hopf.axioms",
    "twist.props",
    "twist.deform",
    "twist.dequantize",
    "rmatrix.props",
    "star.algebra",
    "star.quasicomm",
    "star.dequantize",
    "module.props",
    "module.quasicomm",
    "module.dequantize",
    "homdef.adjoint",
    "homdef.df",
    "homdef.dual",
    "homdef.phi",
    "braid.relations",
    "rtensor.composition",
    "rtensor.overA",
    "rtensor.diagram",
    "calc.props",
    "conn.leibniz",
    "conn.dtilde",
    "conn.braidedleibniz",
    "conn.oplus",
    "conn.oplus.assoc",
    "conn.diagram",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteSource {
    Default,
    Flag,
    Env,
}

impl SuiteSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            SuiteSource::Default => "default",
            SuiteSource::Flag => "flag",
            SuiteSource::Env => "env",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteSelection {
    /// `None` keeps every requested check.
    pub tokens: Option<Vec<String>>,
    pub source: SuiteSource,
}

impl SuiteSelection {
    pub fn all() -> Self {
        SuiteSelection {
            tokens: None,
            source: SuiteSource::Default,
        }
    }

    fn keeps(&self, name: &str) -> bool {
        match &self.tokens {
            None => true,
            Some(tokens) => tokens
                .iter()
                .any(|t| name == t || name.starts_with(&format!("{t}."))),
        }
    }

    fn display(&self) -> String {
        match &self.tokens {
            None => "all".to_string(),
            Some(tokens) => tokens.join(","),
        }
    }
}

fn fnv64(text: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

struct Rt<'a> {
    scn: &'a Scenario,
    seed: u64,
    classical: World,
    /// The scenario's main world: deformed when a twist is declared, and
    /// carrying the scenario's R-matrix either way.
    world: World,
    entries: Vec<CheckEntry>,
    infos: Vec<Info>,
}

fn scn_err<T>(loc: Loc, message: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError {
        loc,
        kind: ErrorKind::Scenario,
        message: message.into(),
    })
}

impl<'a> Rt<'a> {
    fn sampler(&self, check: &str) -> Sampler {
        Sampler::new(self.seed ^ fnv64(check))
    }

    fn info(&mut self, check: &str, key: &str, value: impl ToString) {
        self.infos.push(Info {
            check: check.to_string(),
            key: key.to_string(),
            value: value.to_string(),
        });
    }

    fn alg(&self, loc: Loc) -> Result<&AlgebraRef, ScenarioError> {
        match &self.scn.algebra {
            Some(a) => Ok(a),
            None => scn_err(loc, "this check needs an [algebra] section"),
        }
    }

    fn calc(&self, loc: Loc) -> Result<&std::sync::Arc<Calculus>, ScenarioError> {
        match &self.scn.calculus {
            Some(c) => Ok(c),
            None => scn_err(loc, "this check needs a [calculus] section"),
        }
    }

    fn hopf_probes(&self) -> Vec<HopfElement> {
        default_probes(&self.scn.hopf, self.scn.probe_degree)
    }

    /// Hopf probes with a degree cap, for checks whose cost is a high power
    /// of the pool size (nested coproducts over probe pairs).
    fn hopf_probes_capped(&self, cap: u32) -> Vec<HopfElement> {
        default_probes(&self.scn.hopf, self.scn.probe_degree.min(cap))
    }

    /// Exhaustive coefficient-one monomials up to the given total degree
    /// (for a polynomial algebra), or the unit plus every point mass (for a
    /// function algebra) — finite, so exhaustive outright.
    fn exhaustive_alg(&self, alg: &AlgebraRef, max_degree: u32) -> Vec<AlgebraElement> {
        let order = self.scn.order;
        match alg.kind() {
            AlgebraKind::Poly { vars } => {
                let n = vars.len();
                let mut out = Vec::new();
                let mut exps = vec![0u32; n];
                loop {
                    if exps.iter().sum::<u32>() <= max_degree {
                        out.push(AlgebraElement::monomial(
                            alg,
                            Mono::Exp(exps.clone()),
                            Scalar::one(order),
                        ));
                    }
                    let mut i = 0;
                    loop {
                        if i == n {
                            return out;
                        }
                        if exps[i] < max_degree {
                            exps[i] += 1;
                            break;
                        }
                        exps[i] = 0;
                        i += 1;
                    }
                }
            }
            AlgebraKind::FinFun { points } => {
                let mut out = vec![AlgebraElement::one(alg)];
                for p in 0..points.len() {
                    out.push(AlgebraElement::point(alg, p));
                }
                out
            }
        }
    }

    /// The algebra probe pool: exhaustive up to the scenario's probe degree
    /// (optionally capped for combinatorially heavy checks), plus a few
    /// sampled elements with mixed coefficients.  Pool sizes are recorded as
    /// info records.
    fn alg_probes(
        &mut self,
        check: &str,
        alg: &AlgebraRef,
        sampler: &mut Sampler,
        cap: Option<u32>,
    ) -> Vec<AlgebraElement> {
        let degree = match cap {
            Some(c) => self.scn.probe_degree.min(c),
            None => self.scn.probe_degree,
        };
        let mut out = self.exhaustive_alg(alg, degree);
        let sampled = 2;
        for _ in 0..sampled {
            out.push(sampler.algebra_element(alg, degree.min(3), 2));
        }
        self.info(check, "alg-probes", out.len());
        self.info(check, "alg-probes-sampled", sampled);
        out
    }

    /// A compact module-element pool: each basis vector (optionally also
    /// times a degree-one coefficient), plus sampled elements.
    fn elem_probes(
        &self,
        space: &SpaceRef,
        sampler: &mut Sampler,
        products: bool,
        sampled: usize,
    ) -> Vec<ModuleElement> {
        let alg = space.algebra().clone();
        let small = match alg.kind() {
            AlgebraKind::Poly { .. } => AlgebraElement::var(&alg, 0),
            AlgebraKind::FinFun { .. } => AlgebraElement::point(&alg, 0),
        };
        let mut out = Vec::new();
        for j in 0..space.rank() {
            let e = ModuleElement::basis_vector(space, j);
            out.push(e.clone());
            if products {
                out.push(e.mul_alg(&small));
            }
        }
        for _ in 0..sampled {
            out.push(sampler.module_element(space, 2.min(self.scn.probe_degree), 2));
        }
        out
    }

    fn module_named(&self, name: &str, loc: Loc) -> Result<SpaceRef, ScenarioError> {
        match self.scn.module(name) {
            Some(s) => Ok(s.clone()),
            None => scn_err(loc, format!("unknown module `{name}`")),
        }
    }

    /// Declared modules in declaration order; error when none exist.
    fn default_modules(&self, loc: Loc) -> Result<Vec<(String, SpaceRef)>, ScenarioError> {
        if self.scn.modules.is_empty() {
            return scn_err(loc, "this check needs at least one [bimodule.*] section");
        }
        Ok(self.scn.modules.clone())
    }

    fn push(&mut self, report: CheckReport, rename: impl Fn(&str) -> String) {
        for mut e in report.entries {
            e.name = rename(&e.name);
            self.entries.push(e);
        }
    }
}

/// Rename an entry produced under `requested`: drop the entry's leading
/// segments that repeat the request's trailing segments, then append.
fn joined(requested: &str, scope: Option<&str>, entry: &str) -> String {
    let last = requested.rsplit('.').next().unwrap_or(requested);
    let trimmed = if entry == last {
        ""
    } else if let Some(rest) = entry.strip_prefix(&format!("{last}.")) {
        rest
    } else {
        entry
    };
    let mut out = requested.to_string();
    if let Some(m) = scope {
        out.push('.');
        out.push_str(m);
    }
    if !trimmed.is_empty() {
        out.push('.');
        out.push_str(trimmed);
    }
    out
}

/// Merge reports entry-wise by name: probe counts add up, a failure anywhere
/// wins, and a skip survives only when every constituent skipped.
fn merge_same(reports: Vec<CheckReport>) -> CheckReport {
    let mut order: Vec<String> = Vec::new();
    let mut map: BTreeMap<String, CheckEntry> = BTreeMap::new();
    for r in reports {
        for e in r.entries {
            match map.get_mut(&e.name) {
                None => {
                    order.push(e.name.clone());
                    map.insert(e.name.clone(), e);
                }
                Some(acc) => {
                    acc.probes += e.probes;
                    acc.millis += e.millis;
                    let replace = match (&acc.status, &e.status) {
                        (CheckStatus::Fail(_), _) => false,
                        (_, CheckStatus::Fail(_)) => true,
                        (CheckStatus::Skipped(_), CheckStatus::Pass) => true,
                        _ => false,
                    };
                    if replace {
                        acc.status = e.status;
                    }
                }
            }
        }
    }
    let mut out = CheckReport::new();
    for name in order {
        out.entries.push(map.remove(&name).unwrap());
    }
    out
}

fn check_params(req: &CheckRequest, allowed: &[&str]) -> Result<(), ScenarioError> {
    for key in req.params.keys() {
        if !allowed.contains(&key.as_str()) {
            return scn_err(
                req.loc,
                format!("check `{}` does not take a parameter `{key}`", req.name),
            );
        }
    }
    Ok(())
}

fn usize_param(req: &CheckRequest, key: &str, default: usize) -> Result<usize, ScenarioError> {
    match req.param(key) {
        None => Ok(default),
        Some(v) => v.parse::<usize>().map_err(|_| ScenarioError {
            loc: req.loc,
            kind: ErrorKind::Scenario,
            message: format!("parameter {key}={v} is not a non-negative integer"),
        }),
    }
}

/// Resolve a comma-separated list of declared module names, with a default.
fn modules_param(
    rt: &Rt,
    req: &CheckRequest,
    default: &[&str],
) -> Result<Vec<(String, SpaceRef)>, ScenarioError> {
    let names: Vec<String> = match req.param("modules") {
        Some(v) => v.split(',').map(|s| s.to_string()).collect(),
        None => default.iter().map(|s| s.to_string()).collect(),
    };
    let mut out = Vec::new();
    for n in &names {
        out.push((n.clone(), rt.module_named(n, req.loc)?));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Operator pools
// ---------------------------------------------------------------------------

/// Declared operators with matching domain and codomain on the given space.
fn declared_endos(rt: &Rt, space: &SpaceRef) -> Vec<Hom> {
    rt.scn
        .homs
        .iter()
        .filter(|(_, h)| Space::same(h.dom(), space) && Space::same(h.cod(), space))
        .map(|(_, h)| h.clone())
        .collect()
}

/// Probe classical right-A-linearity: P(v*a) = P(v)*a on a few fixed probes.
fn is_right_linear(op: &Hom) -> bool {
    let space = op.dom().clone();
    let alg = space.algebra().clone();
    let scalars = match alg.kind() {
        AlgebraKind::Poly { vars } => {
            let mut s = vec![AlgebraElement::one(&alg)];
            for i in 0..vars.len() {
                s.push(AlgebraElement::var(&alg, i));
            }
            s
        }
        AlgebraKind::FinFun { points } => (0..points.len())
            .map(|p| AlgebraElement::point(&alg, p))
            .collect(),
    };
    for j in 0..space.rank() {
        let v = ModuleElement::basis_vector(&space, j);
        for a in &scalars {
            if op.apply(&v.mul_alg(a)) != op.apply(&v).mul_alg(a) {
                return false;
            }
        }
    }
    true
}

/// The named groups ("A" plus each declared bimodule) an operator check
/// iterates over, with that group's endomorphism pool.
fn endo_groups(
    rt: &Rt,
    req: &CheckRequest,
    right_linear_only: bool,
    sample: usize,
    sampler: &mut Sampler,
) -> Result<Vec<(String, SpaceRef, Vec<Hom>)>, ScenarioError> {
    let mut groups: Vec<(String, SpaceRef)> = Vec::new();
    if let Some(line) = &rt.scn.line_module {
        groups.push(("A".to_string(), line.clone()));
    }
    groups.extend(rt.scn.modules.iter().cloned());
    if let Some(only) = req.param("module") {
        let space = rt.module_named(only, req.loc)?;
        groups.retain(|(n, _)| n == only);
        if groups.is_empty() {
            groups.push((only.to_string(), space));
        }
    }
    let mut out = Vec::new();
    for (name, space) in groups {
        let mut ops: Vec<Hom> = declared_endos(rt, &space)
            .into_iter()
            .filter(|h| !right_linear_only || is_right_linear(h))
            .collect();
        for i in 0..sample {
            ops.push(sampler.hom(
                &space,
                &space,
                2.min(rt.scn.probe_degree),
                format!("S{i}[{name}]"),
            ));
        }
        if !ops.is_empty() {
            out.push((name, space, ops));
        }
    }
    if out.is_empty() {
        return scn_err(req.loc, "no operators available: declare [hom.*] sections");
    }
    Ok(out)
}

/// Right-linear operators on a space, from a `p=` / `q=` style parameter or
/// by default from the declarations, topped up with one sampled operator.
fn ops_param(
    rt: &Rt,
    req: &CheckRequest,
    key: &str,
    space: &SpaceRef,
    sampler: &mut Sampler,
) -> Result<Vec<Hom>, ScenarioError> {
    let mut ops = Vec::new();
    match req.param(key) {
        Some(list) => {
            for name in list.split(',') {
                match rt.scn.hom(name) {
                    Some(h) if Space::same(h.dom(), space) && Space::same(h.cod(), space) => {
                        ops.push(h.clone())
                    }
                    Some(_) => {
                        return scn_err(
                            req.loc,
                            format!("operator `{name}` does not act on the selected module"),
                        )
                    }
                    None => return scn_err(req.loc, format!("unknown operator `{name}`")),
                }
            }
        }
        None => {
            ops = declared_endos(rt, space)
                .into_iter()
                .filter(|h| is_right_linear(h))
                .collect();
        }
    }
    if ops.len() < 2 {
        ops.push(sampler.hom(space, space, 2.min(rt.scn.probe_degree), format!("S[{key}]")));
    }
    Ok(ops)
}

// ---------------------------------------------------------------------------
// Connection pools
// ---------------------------------------------------------------------------

struct ConnPool {
    conns: Vec<Connection>,
    sampled: usize,
}

fn connection_pool(
    rt: &Rt,
    req: &CheckRequest,
    space: &SpaceRef,
    default_sampled: usize,
    sampler: &mut Sampler,
) -> Result<ConnPool, ScenarioError> {
    let calc = rt.calc(req.loc)?.clone();
    let mut conns: Vec<Connection> = rt
        .scn
        .connections
        .iter()
        .filter(|(_, c)| Space::same(c.space(), space))
        .map(|(_, c)| c.clone())
        .collect();
    let sampled = usize_param(req, "connections", default_sampled)?;
    for _ in 0..sampled {
        conns.push(sampler.connection(&calc, space, 2.min(rt.scn.probe_degree)));
    }
    if conns.is_empty() {
        return scn_err(req.loc, "no connections available for this module");
    }
    Ok(ConnPool { conns, sampled })
}

/// Connections as operators in the main world: in a deformed world the
/// classical connection is carried over by the hom quantization map, which
/// is what makes the deformed-side laws hold.
fn world_conn_homs(rt: &Rt, pool: &ConnPool) -> Vec<Hom> {
    pool.conns
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let hom = c.as_hom(format!("conn{i}"));
            if rt.world.is_deformed() {
                deform_hom(&rt.world, &hom)
            } else {
                hom
            }
        })
        .collect()
}

fn conn_module(rt: &Rt, req: &CheckRequest) -> Result<(String, SpaceRef), ScenarioError> {
    match req.param("module") {
        Some(name) => Ok((name.to_string(), rt.module_named(name, req.loc)?)),
        None => {
            let declared = rt.default_modules(req.loc)?;
            Ok(declared[0].clone())
        }
    }
}

// ---------------------------------------------------------------------------
// The runner
// ---------------------------------------------------------------------------

pub fn run(
    scn: &Scenario,
    suite: &SuiteSelection,
    seed_override: Option<u64>,
) -> Result<RunReport, ScenarioError> {
    let seed = seed_override.unwrap_or(scn.seed);

    let classical = World::classical(&scn.hopf);
    let deformed = scn
        .twist
        .as_ref()
        .map(|t| std::sync::Arc::new(DeformedHopf::new(t.clone())));
    let base_world = match &deformed {
        Some(d) => World::deformed(d),
        None => classical.clone(),
    };
    let rmatrix = match &scn.rmatrix {
        RSpec::Trivial => RMatrix::trivial(&scn.hopf),
        RSpec::Explicit(r, rinv) => RMatrix::new(r.clone(), rinv.clone()),
        RSpec::FromTwist => {
            let tw = scn.twist.as_ref().expect("from_twist was validated at parse time");
            r_matrix_from_twist(tw, &RMatrix::trivial(&scn.hopf))
        }
    };
    let world = base_world.with_rmatrix(rmatrix);

    let mut rt = Rt {
        scn,
        seed,
        classical,
        world,
        entries: Vec::new(),
        infos: Vec::new(),
    };

    // Validate every requested name up front so typos are exit-2 scenario
    // errors rather than silently absent report lines.
    for req in &scn.checks {
        if !CHECK_NAMES.contains(&req.name.as_str()) {
            return scn_err(req.loc, format!("unknown check `{}`", req.name));
        }
    }

    let mut rtensor_cache: BTreeMap<String, CheckReport> = BTreeMap::new();

    for req in &scn.checks {
        if !suite.keeps(&req.name) {
            continue;
        }
        run_one(&mut rt, req, &mut rtensor_cache)?;
    }

    let mut report = RunReport {
        scenario: scn.name.clone(),
        order: scn.order,
        seed,
        suite: suite.display(),
        suite_source: suite.source.as_str().to_string(),
        entries: rt.entries,
        infos: rt.infos,
    };
    report.sort();
    Ok(report)
}

fn run_one(
    rt: &mut Rt,
    req: &CheckRequest,
    rtensor_cache: &mut BTreeMap<String, CheckReport>,
) -> Result<(), ScenarioError> {
    let name = req.name.as_str();
    match name {
        "hopf.axioms" => {
            check_params(req, &[])?;
            let probes = rt.hopf_probes();
            let report = hopf_check(rt.classical.ops(), &probes);
            rt.push(report, |e| joined(name, None, e));
        }
        "twist.props" => {
            check_params(req, &[])?;
            let Some(tw) = &rt.scn.twist else {
                return scn_err(req.loc, "this check needs a [twist] section");
            };
            rt.push(tw.validate(), |e| joined(name, None, e));
        }
        "twist.deform" => {
            check_params(req, &[])?;
            let Some(tw) = &rt.scn.twist else {
                return scn_err(req.loc, "this check needs a [twist] section");
            };
            let d = DeformedHopf::new(tw.clone());
            let probes = rt.hopf_probes();
            rt.push(deformed_structure_check(&d, &probes), |e| {
                joined(name, None, e)
            });
        }
        "twist.dequantize" => {
            check_params(req, &[])?;
            let Some(tw) = &rt.scn.twist else {
                return scn_err(req.loc, "this check needs a [twist] section");
            };
            let d = DeformedHopf::new(tw.clone());
            let probes = rt.hopf_probes();
            rt.push(dequantize_check(&d, &probes), |e| joined(name, None, e));
        }
        "rmatrix.props" => {
            check_params(req, &[])?;
            let probes = rt.hopf_probes();
            let report = hopfstar::twist::r_matrix_check(rt.world.ops(), rt.world.rmatrix(), &probes);
            rt.push(report, |e| joined(name, None, e));
        }
        "star.algebra" => {
            check_params(req, &[])?;
            let alg = rt.alg(req.loc)?.clone();
            let mut sampler = rt.sampler(name);
            let hopf_probes = rt.hopf_probes();
            let alg_probes = rt.alg_probes(name, &alg, &mut sampler, None);
            let report = module_algebra_check(&rt.world, &alg, &hopf_probes, &alg_probes);
            rt.push(report, |e| joined(name, None, e));
        }
        "star.quasicomm" => {
            check_params(req, &[])?;
            let alg = rt.alg(req.loc)?.clone();
            let mut sampler = rt.sampler(name);
            let alg_probes = rt.alg_probes(name, &alg, &mut sampler, None);
            rt.push(quasi_commutativity_check(&rt.world, &alg_probes), |e| {
                joined(name, None, e)
            });
        }
        "star.dequantize" => {
            check_params(req, &[])?;
            let alg = rt.alg(req.loc)?.clone();
            let mut sampler = rt.sampler(name);
            let alg_probes = rt.alg_probes(name, &alg, &mut sampler, None);
            rt.push(star_dequantize_check(&rt.world, &alg_probes), |e| {
                joined(name, None, e)
            });
        }
        "module.props" | "module.quasicomm" | "module.dequantize" => {
            check_params(req, &["module"])?;
            let alg = rt.alg(req.loc)?.clone();
            let mut sampler = rt.sampler(name);
            let hopf_probes = rt.hopf_probes_capped(2);
            let alg_probes = rt.alg_probes(name, &alg, &mut sampler, Some(3));
            let modules = match req.param("module") {
                Some(m) => vec![(m.to_string(), rt.module_named(m, req.loc)?)],
                None => rt.default_modules(req.loc)?,
            };
            for (mname, space) in modules {
                let elem_probes = rt.elem_probes(&space, &mut sampler, true, 2);
                let report = match name {
                    "module.props" => {
                        module_check(&rt.world, &hopf_probes, &alg_probes, &elem_probes)
                    }
                    "module.quasicomm" => {
                        module_quasi_commutativity_check(&rt.world, &alg_probes, &elem_probes)
                    }
                    _ => module_dequantize_check(&rt.world, &alg_probes, &elem_probes),
                };
                match name {
                    // single-entry checks: the module name is the suffix
                    "module.quasicomm" | "module.dequantize" => {
                        rt.push(report, |_| format!("{name}.{mname}"));
                    }
                    _ => rt.push(report, |e| joined(name, Some(&mname), e)),
                }
            }
        }
        "homdef.adjoint" => {
            check_params(req, &["module", "sample"])?;
            let sample = usize_param(req, "sample", 2)?;
            let mut sampler = rt.sampler(name);
            let groups = endo_groups(rt, req, false, sample, &mut sampler)?;
            let hopf_probes = rt.hopf_probes_capped(2);
            for (mname, space, ops) in groups {
                let elem_probes = rt.elem_probes(&space, &mut sampler, false, 1);
                let report = adjoint_check(&rt.world, &hopf_probes, &ops, &elem_probes);
                rt.push(report, |e| joined(name, Some(&mname), e));
            }
        }
        "homdef.df" => {
            check_params(req, &["module", "sample"])?;
            let sample = usize_param(req, "sample", 4)?;
            let alg = rt.alg(req.loc)?.clone();
            let mut sampler = rt.sampler(name);
            let groups = endo_groups(rt, req, true, sample, &mut sampler)?;
            let hopf_probes = rt.hopf_probes_capped(2);
            let alg_probes = rt.alg_probes(name, &alg, &mut sampler, Some(2));
            let mut total_ops = 0;
            for (mname, space, ops) in groups {
                total_ops += ops.len();
                let elem_probes = rt.elem_probes(&space, &mut sampler, false, 1);
                let report =
                    deform_hom_check(&rt.world, &hopf_probes, &ops, &alg_probes, &elem_probes);
                rt.push(report, |e| joined(name, Some(&mname), e));
            }
            rt.info(name, "operators", total_ops);
        }
        "homdef.dual" => {
            check_params(req, &["module"])?;
            let alg = rt.alg(req.loc)?.clone();
            let mut sampler = rt.sampler(name);
            let alg_probes = rt.alg_probes(name, &alg, &mut sampler, Some(3));
            let modules = match req.param("module") {
                Some(m) => vec![(m.to_string(), rt.module_named(m, req.loc)?)],
                None => rt.default_modules(req.loc)?,
            };
            for (mname, space) in modules {
                let elem_probes = rt.elem_probes(&space, &mut sampler, true, 2);
                let report = dual_check(&rt.world, &space, &alg_probes, &elem_probes);
                rt.push(report, |e| joined(name, Some(&mname), e));
            }
        }
        "homdef.phi" => {
            check_params(req, &["modules"])?;
            let alg = rt.alg(req.loc)?.clone();
            let declared = rt.default_modules(req.loc)?;
            let default: Vec<&str> = if declared.len() >= 2 {
                vec![&declared[0].0, &declared[1].0]
            } else {
                vec![&declared[0].0, &declared[0].0]
            };
            let picked = modules_param(rt, req, &default)?;
            if picked.len() != 2 {
                return scn_err(req.loc, "homdef.phi takes modules=V,W (two names)");
            }
            let mut sampler = rt.sampler(name);
            let alg_probes = rt.alg_probes(name, &alg, &mut sampler, None);
            let v_probes = rt.elem_probes(&picked[0].1, &mut sampler, true, 2);
            let w_probes = rt.elem_probes(&picked[1].1, &mut sampler, true, 2);
            rt.info(
                name,
                "relation-probes",
                v_probes.len() * alg_probes.len() * w_probes.len(),
            );
            let report = tensor_quotient_check(&rt.world, &v_probes, &alg_probes, &w_probes);
            rt.push(report, |e| joined(name, None, e));
        }
        "braid.relations" => {
            check_params(req, &["modules"])?;
            let alg = rt.alg(req.loc)?.clone();
            let declared = rt.default_modules(req.loc)?;
            let default: Vec<&str> = if declared.len() >= 2 {
                vec![&declared[0].0, &declared[1].0, &declared[0].0]
            } else {
                vec![&declared[0].0, &declared[0].0, &declared[0].0]
            };
            let picked = modules_param(rt, req, &default)?;
            if picked.len() != 3 {
                return scn_err(req.loc, "braid.relations takes modules=V,W,U (three names)");
            }
            let mut sampler = rt.sampler(name);
            let alg_probes = rt.alg_probes(name, &alg, &mut sampler, Some(2));
            let v = rt.elem_probes(&picked[0].1, &mut sampler, false, 1);
            let w = rt.elem_probes(&picked[1].1, &mut sampler, false, 1);
            let u = rt.elem_probes(&picked[2].1, &mut sampler, false, 1);
            let report = braid_check(&rt.world, &v, &w, &u, &alg_probes);
            rt.push(report, |e| joined(name, None, e));
        }
        "rtensor.composition" | "rtensor.overA" => {
            check_params(req, &["modules", "p", "q"])?;
            let key = format!(
                "modules={} p={} q={}",
                req.param("modules").unwrap_or("-"),
                req.param("p").unwrap_or("-"),
                req.param("q").unwrap_or("-"),
            );
            if !rtensor_cache.contains_key(&key) {
                let alg = rt.alg(req.loc)?.clone();
                let declared = rt.default_modules(req.loc)?;
                let default: Vec<&str> = if declared.len() >= 2 {
                    vec![&declared[0].0, &declared[1].0]
                } else {
                    vec![&declared[0].0, &declared[0].0]
                };
                let picked = modules_param(rt, req, &default)?;
                if picked.len() != 2 {
                    return scn_err(req.loc, "rtensor checks take modules=V,W (two names)");
                }
                // One sampler for both requested names so the shared pool is
                // identical no matter which request reaches the cache first.
                let mut sampler = rt.sampler("rtensor");
                let p_ops = ops_param(rt, req, "p", &picked[0].1, &mut sampler)?;
                let q_ops = ops_param(rt, req, "q", &picked[1].1, &mut sampler)?;
                let hopf_probes = rt.hopf_probes_capped(2);
                let alg_probes = rt.alg_probes(name, &alg, &mut sampler, Some(2));
                let v = rt.elem_probes(&picked[0].1, &mut sampler, false, 1);
                let w = rt.elem_probes(&picked[1].1, &mut sampler, false, 1);
                let report = rtensor_check(
                    &rt.world,
                    &p_ops,
                    &q_ops,
                    &hopf_probes,
                    &v,
                    &w,
                    &alg_probes,
                );
                rtensor_cache.insert(key.clone(), report);
            }
            let report = rtensor_cache[&key].clone();
            let wanted: &[&str] = if name == "rtensor.overA" {
                &["overA"]
            } else {
                &["form", "covariance", "composition"]
            };
            let mut filtered = CheckReport::new();
            for e in report.entries {
                if wanted.contains(&e.name.as_str()) {
                    filtered.entries.push(e);
                }
            }
            rt.push(filtered, |e| joined(name, None, e));
        }
        "rtensor.diagram" => {
            check_params(req, &["modules", "p", "q", "fault"])?;
            let declared = rt.default_modules(req.loc)?;
            let default: Vec<&str> = if declared.len() >= 2 {
                vec![&declared[0].0, &declared[1].0]
            } else {
                vec![&declared[0].0, &declared[0].0]
            };
            let picked = modules_param(rt, req, &default)?;
            if picked.len() != 2 {
                return scn_err(req.loc, "rtensor.diagram takes modules=V,W (two names)");
            }
            let fault = match req.param("fault").unwrap_or("none") {
                "none" => DiagramFault::None,
                "omit-dressing" => DiagramFault::OmitDressing,
                "trivial-r-top" => DiagramFault::TrivialRTop,
                other => {
                    return scn_err(
                        req.loc,
                        format!("unknown fault `{other}` (expected none, omit-dressing, or trivial-r-top)"),
                    )
                }
            };
            let mut sampler = rt.sampler(name);
            let p = ops_param(rt, req, "p", &picked[0].1, &mut sampler)?
                .into_iter()
                .next()
                .unwrap();
            let q = ops_param(rt, req, "q", &picked[1].1, &mut sampler)?
                .into_iter()
                .next()
                .unwrap();
            let v = rt.elem_probes(&picked[0].1, &mut sampler, true, 2);
            let w = rt.elem_probes(&picked[1].1, &mut sampler, true, 2);
            let report = rtensor_diagram_check(&rt.world, &p, &q, &v, &w, fault);
            rt.push(report, |e| joined(name, None, e));
        }
        "calc.props" => {
            check_params(req, &[])?;
            let calc = rt.calc(req.loc)?.clone();
            let mut sampler = rt.sampler(name);
            let hopf_probes = rt.hopf_probes();
            let mut form_probes = Vec::new();
            for degree in 0..=calc.top() {
                let omega = calc.omega(degree);
                for j in 0..omega.rank() {
                    form_probes.push(ModuleElement::basis_vector(omega, j));
                }
                form_probes.push(sampler.module_element(
                    omega,
                    2.min(rt.scn.probe_degree),
                    2,
                ));
            }
            let report = calculus_check(&rt.world, &calc, &hopf_probes, &form_probes);
            rt.push(report, |e| joined(name, None, e));
        }
        "conn.leibniz" => {
            check_params(req, &["module", "connections"])?;
            let alg = rt.alg(req.loc)?.clone();
            let calc = rt.calc(req.loc)?.clone();
            let (_, space) = conn_module(rt, req)?;
            let mut sampler = rt.sampler(name);
            let pool = connection_pool(rt, req, &space, 10, &mut sampler)?;
            rt.info(name, "connections", pool.conns.len());
            rt.info(name, "connections-sampled", pool.sampled);
            let alg_probes = rt.alg_probes(name, &alg, &mut sampler, Some(3));
            let elem_probes = rt.elem_probes(&space, &mut sampler, true, 2);
            // The classical Leibniz law, checked connection by connection.
            let reports = pool
                .conns
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    leibniz_check(
                        &rt.classical,
                        &calc,
                        &c.as_hom(format!("conn{i}")),
                        &alg_probes,
                        &elem_probes,
                    )
                })
                .collect();
            rt.push(merge_same(reports), |e| joined(name, None, e));
        }
        "conn.dtilde" => {
            check_params(req, &["module", "connections"])?;
            let alg = rt.alg(req.loc)?.clone();
            let calc = rt.calc(req.loc)?.clone();
            let (_, space) = conn_module(rt, req)?;
            let mut sampler = rt.sampler(name);
            let pool = connection_pool(rt, req, &space, 4, &mut sampler)?;
            rt.info(name, "connections", pool.conns.len());
            rt.info(name, "connections-sampled", pool.sampled);
            let alg_probes = rt.alg_probes(name, &alg, &mut sampler, Some(2));
            let elem_probes = rt.elem_probes(&space, &mut sampler, false, 1);
            let reports = pool
                .conns
                .iter()
                .map(|c| dtilde_check(&rt.world, &calc, c, &alg_probes, &elem_probes))
                .collect();
            rt.push(merge_same(reports), |e| joined(name, None, e));
        }
        "conn.braidedleibniz" => {
            check_params(req, &["module", "connections"])?;
            let alg = rt.alg(req.loc)?.clone();
            let calc = rt.calc(req.loc)?.clone();
            let (_, space) = conn_module(rt, req)?;
            let mut sampler = rt.sampler(name);
            let pool = connection_pool(rt, req, &space, 10, &mut sampler)?;
            rt.info(name, "connections", pool.conns.len());
            rt.info(name, "connections-sampled", pool.sampled);
            let alg_probes = rt.alg_probes(name, &alg, &mut sampler, Some(2));
            let elem_probes = rt.elem_probes(&space, &mut sampler, false, 1);
            let homs = world_conn_homs(rt, &pool);
            let reports = homs
                .iter()
                .map(|hom| {
                    braided_leibniz_check(&rt.world, &calc, hom, &alg_probes, &elem_probes)
                })
                .collect();
            rt.push(merge_same(reports), |e| joined(name, None, e));
        }
        "conn.oplus" => {
            check_params(req, &["module", "connections"])?;
            let alg = rt.alg(req.loc)?.clone();
            let calc = rt.calc(req.loc)?.clone();
            let (_, space) = conn_module(rt, req)?;
            let mut sampler = rt.sampler(name);
            let pool = connection_pool(rt, req, &space, 1, &mut sampler)?;
            rt.info(name, "connections", pool.conns.len());
            rt.info(name, "connections-sampled", pool.sampled);
            let alg_probes = rt.alg_probes(name, &alg, &mut sampler, Some(1));
            let elem_probes = rt.elem_probes(&space, &mut sampler, false, 1);
            let homs = world_conn_homs(rt, &pool);
            let report = oplus_check(&rt.world, &calc, &homs, &alg_probes, &elem_probes);
            rt.push(report, |e| joined(name, None, e));

            // The equivariant reduction, against the flat connection on a
            // second module whose declared action is coefficient-wise.
            let declared = rt.default_modules(req.loc)?;
            let (wname, wspace) = if declared.len() >= 2 {
                declared[1].clone()
            } else {
                declared[0].clone()
            };
            let target = Space::tensor(&[wspace.clone(), calc.omega(1).clone()]);
            let flat_images = vec![ModuleElement::zero(&target); wspace.rank()];
            let flat = Connection::new(&calc, &wspace, flat_images)
                .expect("zero images always form a connection");
            let flat_hom = {
                let hom = flat.as_hom("flat");
                if rt.world.is_deformed() {
                    deform_hom(&rt.world, &hom)
                } else {
                    hom
                }
            };
            let hopf_probes = rt.hopf_probes_capped(2);
            let w_probes = rt.elem_probes(&wspace, &mut sampler, false, 1);
            let report = oplus_equivariant_check(
                &rt.world,
                &homs[0],
                &flat_hom,
                &hopf_probes,
                &elem_probes,
                &w_probes,
            );
            rt.info(name, "equivariant-module", wname);
            rt.push(report, |e| joined(name, None, e));
        }
        "conn.oplus.assoc" => {
            check_params(req, &["module", "connections"])?;
            let (_, space) = conn_module(rt, req)?;
            let mut sampler = rt.sampler(name);
            let pool = connection_pool(rt, req, &space, 1, &mut sampler)?;
            rt.info(name, "connections", pool.conns.len());
            rt.info(name, "connections-sampled", pool.sampled);
            let elem_probes = rt.elem_probes(&space, &mut sampler, false, 0);
            let homs = world_conn_homs(rt, &pool);
            let report = oplus_assoc_check(&rt.world, &homs, &elem_probes);
            rt.push(report, |e| joined(name, None, e));
        }
        "conn.diagram" => {
            check_params(req, &["cv", "cw", "fault"])?;
            let fault = match req.param("fault").unwrap_or("none") {
                "none" => ConnectionFault::None,
                "trivial-r-top" => ConnectionFault::TrivialRTop,
                other => {
                    return scn_err(
                        req.loc,
                        format!("unknown fault `{other}` (expected none or trivial-r-top)"),
                    )
                }
            };
            let pick = |key: &str, index: usize| -> Result<Connection, ScenarioError> {
                match req.param(key) {
                    Some(n) => match rt.scn.connection(n) {
                        Some(c) => Ok(c.clone()),
                        None => scn_err(req.loc, format!("unknown connection `{n}`")),
                    },
                    None => match rt.scn.connections.get(index) {
                        Some((_, c)) => Ok(c.clone()),
                        None => scn_err(
                            req.loc,
                            "conn.diagram needs two [connection.*] sections or cv=/cw= parameters",
                        ),
                    },
                }
            };
            let cv = pick("cv", 0)?;
            let cw = pick("cw", 1)?;
            let mut sampler = rt.sampler(name);
            let v = rt.elem_probes(cv.space(), &mut sampler, false, 1);
            let w = rt.elem_probes(cw.space(), &mut sampler, false, 1);
            let report = connection_diagram_check(&rt.world, &cv, &cw, &v, &w, fault);
            rt.push(report, |e| joined(name, None, e));
        }
        other => {
            return scn_err(req.loc, format!("unknown check `{other}`"));
        }
    }
    Ok(())
}

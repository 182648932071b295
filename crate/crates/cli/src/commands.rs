use std::path::Path;

use probrely::dsl::Module;
use probrely::rg::{check_quintuple, compose_concurrent, probability_bound, BoundPremise, Post, Quintuple, RelyCondition};
use probrely::sched::{monte_carlo, semantics, within_tolerance};
use probrely::sieve::{self, sieve_generate, SieveInstance};
use probrely::{find_t_simulation, refines_seq, Error, Rational, Result, State};
use serde_json::{json, Value};

use crate::render;
use crate::{Command, Format};

fn load(path: &Path) -> Result<Module> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
    Module::parse(&src)
}

fn parse_rational(s: &str) -> Result<Rational> {
    s.parse().map_err(|e: probrely::rational::ParseRationalError| Error::Domain(e.to_string()))
}

fn lookup_states(m: &Module, list: &str) -> Result<Vec<State>> {
    list.split(',').map(|s| m.space().lookup(s.trim())).collect()
}

pub fn run(cmd: Command, cap: usize) -> Result<bool> {
    match cmd {
        Command::Validate { input } => {
            let m = load(&input)?;
            let mut ok = true;
            let mut rows = Vec::new();
            for name in m.procs() {
                let row = match m.structure(name) {
                    Ok(es) => json!({ "proc": name, "events": es.len(), "feasible": true }),
                    Err(e @ Error::Infeasible(_)) => {
                        ok = false;
                        json!({ "proc": name, "feasible": false, "reason": e.to_string() })
                    }
                    Err(e) => return Err(e),
                };
                rows.push(row);
            }
            render::print(&json!({ "states": render::states(m.space()), "procs": rows }));
            Ok(ok)
        }
        Command::Traces { input, name, maximal } => {
            let m = load(&input)?;
            let es = m.structure(&name)?;
            let traces = if maximal { es.maximal_traces(cap)? } else { es.traces(cap)? };
            let shown: Vec<String> = traces.iter().map(|t| es.format_trace(t)).collect();
            render::print(&json!({ "structure": render::structure(&es), "traces": shown }));
            Ok(true)
        }
        Command::Semantics { input, name, init } => {
            let m = load(&input)?;
            let es = m.structure(&name)?;
            let starts: Vec<State> = match init {
                Some(s) => vec![m.space().lookup(&s)?],
                None => m.space().states().collect(),
            };
            let mut rows = Vec::new();
            for s in starts {
                let x = semantics(&es, s)?;
                rows.push(json!({ "initial": m.space().name(s), "vertices": render::set(&x)? }));
            }
            render::print(&json!({ "proc": name, "states": render::states(m.space()), "semantics": rows }));
            Ok(true)
        }
        Command::Sample { input, name, init, trials, seed } => {
            let m = load(&input)?;
            let es = m.structure(&name)?;
            let s0 = m.space().lookup(&init)?;
            let emp = monte_carlo(&es, s0, trials, seed)?;
            let sem = semantics(&es, s0)?;
            // Five binomial standard deviations at the worst case p = 1/2.
            let tol = 5.0 * 0.5 / (trials as f64).sqrt();
            let tol = Rational::new((tol * 1e9).ceil() as i64, 1_000_000_000);
            let ok = within_tolerance(&emp, &sem, &tol)?;
            render::print(&json!({
                "empirical": render::dense(&emp),
                "semantics": render::set(&sem)?,
                "tolerance": render::rational(&tol),
                "consistent": ok,
            }));
            Ok(ok)
        }
        Command::Refine { input, a, b } => {
            let m = load(&input)?;
            let holds = refines_seq(&m.structure(&a)?, &m.structure(&b)?)?;
            render::print(&json!({ "refines": holds }));
            Ok(holds)
        }
        Command::Simulate { input, a, b } => {
            let m = load(&input)?;
            let (ea, eb) = (m.structure(&a)?, m.structure(&b)?);
            match find_t_simulation(&ea, &eb)? {
                Some(f) => {
                    let map: Vec<Value> = f
                        .iter()
                        .map(|(x, y)| json!({ "from": ea.format_trace(x), "to": eb.format_trace(y) }))
                        .collect();
                    render::print(&json!({ "simulation": map }));
                    Ok(true)
                }
                None => {
                    render::line("NONE");
                    Ok(false)
                }
            }
        }
        Command::Quintuple { input, component, pre, rely, guar, post } => {
            let m = load(&input)?;
            let posts: Vec<&str> = post.split(',').map(str::trim).collect();
            let post = if posts.len() == 1 {
                Post::Program(m.program(posts[0])?)
            } else {
                Post::Chain(posts.iter().map(|p| m.program(p)).collect::<Result<_>>()?)
            };
            let q = Quintuple {
                pre: m.program(&pre)?,
                rely: RelyCondition::new(m.program(&rely)?)?,
                component: m.structure(&component)?,
                guar: RelyCondition::new(m.program(&guar)?)?,
                post,
            };
            let v = check_quintuple(&q)?;
            let checks: Vec<Value> = v
                .checks
                .iter()
                .map(|c| json!({ "check": c.name, "holds": c.holds, "failing_state": c.failing_state }))
                .collect();
            let bound = if m.space().len() <= 32 { Some(v.bound.evaluate()?.display()) } else { None };
            render::print(&json!({
                "verdict": if v.valid { "VALID" } else { "INVALID" },
                "checks": checks,
                "bound": bound,
            }));
            Ok(v.valid)
        }
        Command::Bound { p1, p2, input, left, right, rely, init, target } => {
            let (p1, p2) = (parse_rational(&p1)?, parse_rational(&p2)?);
            let Some(input) = input else {
                let b = probrely::rg::bound_arithmetic(&p1, &p2);
                render::print(&json!({ "bound": render::rational(&b) }));
                return Ok(true);
            };
            let m = load(&input)?;
            let s0 = m.space().lookup(init.as_deref().unwrap_or_default())?;
            let target = lookup_states(&m, target.as_deref().unwrap_or_default())?;
            let premise = |name: &str, p: Rational| -> Result<BoundPremise> {
                let es = m.structure(name)?;
                Ok(BoundPremise {
                    initial: s0,
                    rely: RelyCondition::new(m.program(&rely)?)?,
                    guar: probrely::rg::guarantee_of(&es)?,
                    component: es,
                    target: target.clone(),
                    p,
                })
            };
            let b1 = premise(left.as_deref().unwrap_or_default(), p1)?;
            let b2 = premise(right.as_deref().unwrap_or_default(), p2)?;
            let c = probability_bound(&b1, &b2)?;
            let names: Vec<&str> = c.target.iter().map(|&s| m.space().name(s)).collect();
            render::print(&json!({ "bound": render::rational(&c.bound), "target": names }));
            Ok(true)
        }
        Command::Sieve { n, p, sweep, steps, verify, format } => {
            let p = parse_rational(&p)?;
            if sweep {
                let rows = sieve::sweep(n, steps)?;
                if format == Some(Format::Json) {
                    let rows: Vec<Value> = rows
                        .iter()
                        .map(|r| {
                            json!({
                                "p": render::rational(&r.p),
                                "f": render::rational(&r.f),
                                "g": render::rational(&r.g),
                                "exact": render::rational(&r.exact),
                            })
                        })
                        .collect();
                    render::print(&json!({ "n": n, "rows": rows }));
                } else {
                    render::line("p,f,g,exact,p_decimal,f_decimal,g_decimal,exact_decimal");
                    for r in rows {
                        render::line(&format!(
                            "{},{},{},{},{},{},{},{}",
                            r.p,
                            r.f,
                            r.g,
                            r.exact,
                            r.p.to_decimal(6),
                            r.f.to_decimal(6),
                            r.g.to_decimal(6),
                            r.exact.to_decimal(6)
                        ));
                    }
                }
                return Ok(true);
            }
            let (f, g) = sieve::sieve_bounds(n, &p)?;
            let exact = sieve::sieve_exact(n, &p)?;
            let (lo, hi) = sieve::f_root_bracket(n, &Rational::new(1, 1000))?;
            let mut out = json!({
                "n": n,
                "p": render::rational(&p),
                "f": { "poly": sieve::f_poly(n)?.to_string(), "value": render::rational(&f) },
                "g": { "poly": sieve::g_poly(n)?.to_string(), "value": render::rational(&g) },
                "exact": { "poly": sieve::exact_poly(n)?.to_string(), "value": render::rational(&exact) },
                "f_root_bracket": [render::rational(&lo), render::rational(&hi)],
            });
            let mut ok = true;
            if verify {
                let report = verify_sieve(&sieve_generate(n, &p)?, &f, &exact)?;
                ok = report["all_hold"].as_bool().unwrap_or(false);
                out["verify"] = report;
            }
            if format == Some(Format::Text) {
                render::line(&format!("f(p,{n}) = {} = {}", sieve::f_poly(n)?, f.to_decimal(6)));
                render::line(&format!("g(p,{n}) = {} = {}", sieve::g_poly(n)?, g.to_decimal(6)));
                render::line(&format!("exact = {} = {}", sieve::exact_poly(n)?, exact.to_decimal(6)));
                if verify {
                    render::line(&format!("checks: {}", if ok { "all hold" } else { "FAILED" }));
                }
            } else {
                render::print(&out);
            }
            Ok(ok)
        }
    }
}

/// Runs the per-thread quintuples, the composition rule, the bound rule
/// and, for small `n`, the full-semantics cross-check.
pub fn verify_sieve(inst: &SieveInstance, f: &Rational, exact: &Rational) -> Result<Value> {
    let mut all = inst.never_removes_primes();
    let mut threads = Vec::new();
    for t in &inst.threads {
        let v = check_quintuple(&inst.quintuple(t.i)?)?;
        all &= v.valid;
        threads.push(json!({ "thread": t.i, "atoms": t.atoms.len(), "valid": v.valid }));
    }
    let mut composed = Value::Null;
    let mut bound = None;
    if inst.threads.len() >= 2 {
        let (a, b) = (inst.threads[0].i, inst.threads[1].i);
        composed = json!(compose_concurrent(&inst.quintuple(a)?, &inst.quintuple(b)?).is_ok());
        all &= composed.as_bool() == Some(true);
        let mut acc = probability_bound(&inst.bound_premise(a)?, &inst.bound_premise(b)?)?.bound;
        for t in &inst.threads[2..] {
            let prem = inst.bound_premise(t.i)?;
            all &= check_quintuple(&prem.quintuple()?)?.valid;
            acc = probrely::rg::bound_arithmetic(&acc, &prem.p);
        }
        bound = Some(acc);
    } else if let Some(t) = inst.threads.first() {
        let prem = inst.bound_premise(t.i)?;
        all &= check_quintuple(&prem.quintuple()?)?.valid;
        bound = Some(prem.p);
    }
    let bound_matches = bound.as_ref() == Some(f);
    all &= bound_matches;
    let mut cross = Value::Null;
    if inst.n <= 15 {
        let sem = semantics(&inst.system()?, inst.initial)?;
        let v = sem.vertices()?;
        let agrees = v.len() == 1 && v[0].weight(0) == *exact;
        all &= agrees;
        cross = json!(agrees);
    }
    Ok(json!({
        "threads": threads,
        "composition": composed,
        "rule_bound": bound.as_ref().map(render::rational),
        "rule_bound_equals_f": bound_matches,
        "semantics_cross_check": cross,
        "never_removes_primes": inst.never_removes_primes(),
        "all_hold": all,
    }))
}

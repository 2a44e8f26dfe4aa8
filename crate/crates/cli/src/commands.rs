use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use serde::Serialize;

use sbtw_core::backdoor::{
    approx_backdoor, find_smallest_strong_backdoor_with_cap, is_deletion_backdoor_with_cap, is_strong_backdoor_with_cap,
    ApproxConfig, ApproxOutcome, BackdoorError, BackdoorReport, KillerUnionProvider, SearchOutcome, SearchStats, Verdict,
};
use sbtw_core::counting::{
    count_bruteforce, count_td, count_via_backdoor_with, solve, BranchCheck, CountError, CountPath, SolveConfig,
    SolveOutcome,
};
use sbtw_core::formula::{to_dimacs, CnfFormula, FormulaError, Var};
use sbtw_core::generators::{gen_grid_formula, gen_grid_formula_x, gen_planted, gen_random_cnf, gen_wall_formula, GenError};
use sbtw_core::graph::{make_wall, Graph};
use sbtw_core::pace::{read_td, write_gr, write_td, IdMap};
use sbtw_core::treewidth::{
    exact_treewidth, lower_bound, upper_bound_heuristic, validate_decomposition, Width, MAX_VERTEX_CAP,
};

use crate::input::{default_sidecar, load, print_json, write_output, CliError, CliResult, Input};
use crate::{exit, CountArgs, CountMode, Family, FindArgs, GenerateArgs, GraphKind, Kind, OutputFormat, SearchMode, TwArgs, VerifyArgs};

fn check_cap(cap: usize) -> CliResult<()> {
    if cap > MAX_VERTEX_CAP {
        return Err(CliError::other(anyhow!("vertex cap {cap} is above the supported maximum of {MAX_VERTEX_CAP}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct TwReport {
    vertices: usize,
    edges: usize,
    lower: Width,
    upper: Width,
    exact: Option<Width>,
    /// Width of the emitted decomposition.
    width: Width,
    td: Option<PathBuf>,
}

pub fn tw(args: &TwArgs) -> CliResult<u8> {
    check_cap(args.exact_cap)?;
    let (g, map) = match (load(&args.input)?, args.graph) {
        (Input::Formula(f), GraphKind::Incidence) => {
            let g = Graph::incidence(&f);
            let map = IdMap::for_graph(&g);
            (g, map)
        }
        (Input::Formula(_), GraphKind::Raw) => {
            return Err(CliError::parse(anyhow!("--graph raw needs a .gr input")));
        }
        (Input::Graph { graph, map }, _) => (graph, map),
    };
    let lower = lower_bound(&g);
    let (upper, mut td) = upper_bound_heuristic(&g);
    let exact = if g.vertex_count() <= args.exact_cap {
        let (w, best) = exact_treewidth(&g, args.exact_cap).map_err(|e| CliError::new(exit::INCONCLUSIVE, e))?;
        td = best;
        Some(w)
    } else {
        log::warn!("{} vertices exceed the exact cap of {}; reporting bounds only", g.vertex_count(), args.exact_cap);
        None
    };
    validate_decomposition(&g, &td).map_err(|v| CliError::other(anyhow!("internal error: invalid decomposition {v:?}")))?;
    let td_path = match (&args.td_out, args.no_td) {
        (_, true) => None,
        (Some(p), false) => Some(p.clone()),
        (None, false) if args.input.path != Path::new("-") => {
            let mut name = args.input.path.as_os_str().to_owned();
            name.push(".td");
            Some(PathBuf::from(name))
        }
        (None, false) => None,
    };
    if let Some(p) = &td_path {
        write_output(Some(p), &write_td(&td, &map))?;
    }
    print_json(&TwReport {
        vertices: g.vertex_count(),
        edges: g.edge_count(),
        lower,
        upper,
        exact,
        width: td.width(),
        td: td_path,
    })?;
    Ok(0)
}

#[derive(Serialize, Default)]
struct CountReport {
    mode: &'static str,
    /// counted, sb_exceeded, backdoor_invalid or inconclusive.
    result: &'static str,
    count: Option<String>,
    /// How the count was obtained.
    path: Option<&'static str>,
    t: Option<usize>,
    k: Option<usize>,
    width: Option<Width>,
    backdoor: Option<Vec<Var>>,
    branch_widths: Option<Vec<Width>>,
    reason: Option<String>,
    wall_clock_ms: u128,
}

fn formula_error(e: FormulaError) -> CliError {
    match e {
        FormulaError::AssignmentCapExceeded { .. } => CliError::new(exit::INCONCLUSIVE, e),
        other => CliError::other(other),
    }
}

fn backdoor_error(e: BackdoorError) -> CliError {
    match e {
        BackdoorError::Formula(f) => formula_error(f),
        e @ (BackdoorError::Inconclusive(_) | BackdoorError::TooLarge { .. } | BackdoorError::KMaxTooLarge(_)) => {
            CliError::new(exit::INCONCLUSIVE, e)
        }
        other => CliError::other(other),
    }
}

fn count_error(e: CountError) -> CliError {
    match e {
        CountError::Formula(f) => formula_error(f),
        CountError::Backdoor(b) => backdoor_error(b),
        e @ CountError::BagTooWide(_) => CliError::new(exit::INCONCLUSIVE, e),
        other => CliError::other(other),
    }
}

fn read_decomposition(path: &Path, f: &CnfFormula) -> CliResult<sbtw_core::treewidth::TreeDecomposition> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(CliError::other)?;
    let map = IdMap::for_graph(&Graph::incidence(f));
    read_td(&text, &map).with_context(|| format!("parsing {}", path.display())).map_err(CliError::parse)
}

pub fn count(args: &CountArgs) -> CliResult<u8> {
    check_cap(args.caps.vertex_cap)?;
    let f = load(&args.input)?.formula()?;
    let start = Instant::now();
    let mut report = CountReport { result: "counted", ..CountReport::default() };
    let mut code = 0;
    match args.mode {
        CountMode::Brute => {
            report.mode = "brute";
            report.path = Some("brute");
            report.count = Some(count_bruteforce(&f).map_err(count_error)?.to_string());
        }
        CountMode::Td => {
            report.mode = "td";
            report.path = Some("td");
            let td = match &args.td {
                Some(p) => read_decomposition(p, &f)?,
                None => upper_bound_heuristic(&Graph::incidence(&f)).1,
            };
            report.width = Some(td.width());
            report.count = Some(count_td(&f, &td).map_err(count_error)?.to_string());
        }
        CountMode::Backdoor => {
            report.mode = "backdoor";
            report.path = Some("backdoor");
            report.t = Some(args.t);
            let b: BTreeSet<Var> = args.vars.iter().copied().collect();
            report.backdoor = Some(b.iter().copied().collect());
            match count_via_backdoor_with(&f, &b, args.t, BranchCheck::Verify, args.caps.vertex_cap) {
                Ok(bc) => {
                    report.branch_widths = Some(bc.branches.iter().map(|br| br.width).collect());
                    report.count = Some(bc.count.to_string());
                }
                Err(e @ CountError::BackdoorInvalid { .. }) => {
                    (report.result, report.reason, code) = ("backdoor_invalid", Some(e.to_string()), exit::NEGATIVE);
                }
                Err(e @ CountError::BackdoorInconclusive { .. }) => {
                    (report.result, report.reason, code) = ("inconclusive", Some(e.to_string()), exit::INCONCLUSIVE);
                }
                Err(e) => return Err(count_error(e)),
            }
        }
        CountMode::Auto => {
            report.mode = "auto";
            report.t = Some(args.t);
            report.k = Some(args.k);
            let config = SolveConfig { tw_threshold: args.tw_threshold, vertex_cap: args.caps.vertex_cap, ..SolveConfig::new(args.t, args.k) };
            match solve(&f, config).map_err(count_error)? {
                SolveOutcome::Counted { count, path } => {
                    report.count = Some(count.to_string());
                    match path {
                        CountPath::EmptyClause => report.path = Some("empty_clause"),
                        CountPath::Direct { width } => {
                            report.path = Some("direct");
                            report.width = Some(width);
                        }
                        CountPath::Backdoor { backdoor, branches } => {
                            report.path = Some("backdoor");
                            report.backdoor = Some(backdoor);
                            report.branch_widths = Some(branches.iter().map(|b| b.width).collect());
                        }
                    }
                }
                SolveOutcome::BackdoorExceeded { k } => {
                    report.result = "sb_exceeded";
                    report.reason = Some(format!("sb_{}(F) > {k}", args.t));
                    code = exit::NEGATIVE;
                }
                SolveOutcome::Inconclusive { reason } => {
                    (report.result, report.reason, code) = ("inconclusive", Some(reason), exit::INCONCLUSIVE);
                }
            }
        }
    }
    report.wall_clock_ms = start.elapsed().as_millis();
    print_json(&report)?;
    Ok(code)
}

#[derive(Serialize)]
struct FindReport {
    /// found, none or inconclusive.
    status: &'static str,
    mode: &'static str,
    t: usize,
    k_max: usize,
    backdoor: Option<Vec<Var>>,
    /// Largest size the mode may return.
    size_bound: u64,
    report: Option<BackdoorReport>,
    stats: Option<SearchStats>,
    reason: Option<String>,
}

pub fn find(args: &FindArgs) -> CliResult<u8> {
    check_cap(args.caps.vertex_cap)?;
    let f = load(&args.input)?.formula()?;
    let (mode, size_bound) = match args.mode {
        SearchMode::Exact => ("exact", args.kmax as u64),
        SearchMode::Approx => ("approx", 1u64.checked_shl(args.kmax as u32).map_or(u64::MAX, |p| p - 1)),
    };
    let mut out = FindReport {
        status: "none",
        mode,
        t: args.t,
        k_max: args.kmax,
        backdoor: None,
        size_bound,
        report: None,
        stats: None,
        reason: None,
    };
    let result = match args.mode {
        SearchMode::Exact => find_smallest_strong_backdoor_with_cap(&f, args.t, args.kmax, args.caps.vertex_cap).map(|o| match o {
            SearchOutcome::Found(r) => Ok(r),
            SearchOutcome::NoneUpTo { stats, .. } => Err(stats),
        }),
        SearchMode::Approx => {
            let config = ApproxConfig { tw_threshold: args.tw_threshold, vertex_cap: args.caps.vertex_cap };
            approx_backdoor(&f, args.t, args.kmax, config, &KillerUnionProvider).map(|o| match o {
                ApproxOutcome::Found(r) => Ok(r),
                ApproxOutcome::Exceeds { stats, .. } => Err(stats),
            })
        }
    };
    let code = match result {
        Ok(Ok(report)) => {
            out.status = "found";
            out.backdoor = Some(report.backdoor.clone());
            out.stats = Some(report.stats);
            out.report = Some(report);
            0
        }
        Ok(Err(stats)) => {
            out.stats = Some(stats);
            out.reason = Some(format!("sb_{}(F) > {}", args.t, args.kmax));
            exit::NEGATIVE
        }
        Err(e @ BackdoorError::Inconclusive(_)) => {
            out.status = "inconclusive";
            out.reason = Some(e.to_string());
            exit::INCONCLUSIVE
        }
        Err(e) => return Err(backdoor_error(e)),
    };
    print_json(&out)?;
    Ok(code)
}

pub fn verify(args: &VerifyArgs) -> CliResult<u8> {
    check_cap(args.caps.vertex_cap)?;
    let f = load(&args.input)?.formula()?;
    let b: BTreeSet<Var> = args.vars.iter().copied().collect();
    let report = match args.kind {
        Kind::Strong => is_strong_backdoor_with_cap(&f, &b, args.t, args.caps.vertex_cap),
        Kind::Deletion => is_deletion_backdoor_with_cap(&f, &b, args.t, args.caps.vertex_cap),
    }
    .map_err(backdoor_error)?;
    print_json(&report)?;
    Ok(match report.verdict {
        Verdict::Valid => 0,
        Verdict::Invalid { .. } => exit::NEGATIVE,
        Verdict::Inconclusive { .. } => exit::INCONCLUSIVE,
    })
}

pub fn generate(args: &GenerateArgs) -> CliResult<u8> {
    let gen = |e: GenError| CliError::other(e);
    let mut comment = String::new();
    let formula = match args.family {
        Family::Grid => gen_grid_formula(args.n).map_err(gen)?,
        Family::GridX => gen_grid_formula_x(args.n).map_err(gen)?,
        Family::Planted => {
            let (f, planted) = gen_planted(args.n, args.t, args.k, args.seed).map_err(gen)?;
            let list: Vec<String> = planted.iter().map(u32::to_string).collect();
            log::info!("planted backdoor: {}", list.join(" "));
            comment = format!("c planted backdoor: {}\n", list.join(" "));
            f
        }
        Family::Random => gen_random_cnf(args.n, args.m, args.width, args.seed).map_err(gen)?,
        Family::Wall => gen_wall_formula(args.n).map_err(gen)?.0,
    };
    match args.format {
        OutputFormat::Dimacs => write_output(args.out.as_deref(), &(comment + &to_dimacs(&formula)))?,
        OutputFormat::Gr => {
            let graph = if args.family == Family::Wall {
                make_wall(args.n).map_err(CliError::other)?.0
            } else {
                Graph::incidence(&formula)
            };
            let (text, map) = write_gr(&graph);
            write_output(args.out.as_deref(), &text)?;
            let map_path = args.map_out.clone().or_else(|| args.out.as_deref().map(default_sidecar));
            match map_path {
                Some(p) => write_output(Some(&p), &(map.to_json() + "\n"))?,
                None => log::warn!("no --map-out given; vertex ids of the .gr output are not recorded"),
            }
        }
    }
    Ok(0)
}

//! Subcommand implementations. Each returns the text report; numbers are
//! printed with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use slag::ambient::{check_scaffold_conditions, load_scaffold, Confinement};
use slag::deform::{
    best_fit_theta, moduli_basis, moduli_step, newton_solve, residual_at_positions, Deformer,
    NewtonOptions,
};
use slag::flow::{continuation_solve, load_section, parse_section, ContinuationOptions};
use slag::hodge::HodgeSolver;
use slag::mesh::{
    betti_numbers, boundary_data, generate_mesh, load_mesh, patch_hash, write_mesh, Shape,
};
use slag::{Error, ErrorKind, Patch, Scaffold};

use crate::{Cli, Command};

/// An error plus whatever report was produced before it (e.g. the
/// scaffold-condition table).
pub struct Failure {
    pub error: Error,
    pub report: String,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure {
            error,
            report: String::new(),
        }
    }
}

type Outcome = std::result::Result<String, Failure>;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn invalid(op: &'static str, msg: impl Into<String>) -> Failure {
    Error::new("cli", op, ErrorKind::Invalid(msg.into())).into()
}

/// `SLAG_THREADS`, default 1. The numerical core is sequential, so the
/// value only caps; it is validated and recorded.
fn threads() -> Result<usize, Failure> {
    match std::env::var("SLAG_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(invalid(
                "run",
                format!("SLAG_THREADS must be a positive integer, got `{v}`"),
            )),
        },
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Generate { .. } => "generate",
        Command::CheckSlag { .. } => "check-slag",
        Command::Harmonic { .. } => "harmonic",
        Command::Solve { .. } => "solve",
        Command::Moduli { .. } => "moduli",
        Command::ScaffoldFlow { .. } => "scaffold-flow",
    }
}

pub fn run(cli: &Cli) -> Outcome {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(invalid("run", "--tol must be positive"));
    }
    let threads = threads()?;
    let mut report = format!(
        "# slag {} seed={} threads={} tol={}\n",
        command_name(&cli.command),
        cli.seed,
        threads,
        num(cli.tol)
    );
    let newton = NewtonOptions {
        tol: cli.tol,
        ..NewtonOptions::default()
    };
    let body = match &cli.command {
        Command::Generate {
            shape,
            resolution,
            out,
        } => generate(shape, *resolution, out),
        Command::CheckSlag { mesh, theta } => check_slag(mesh, *theta),
        Command::Harmonic { mesh, degree, out } => harmonic(mesh, *degree, out.as_deref()),
        Command::Solve {
            mesh,
            scaffold,
            max_iter,
            out,
        } => {
            if *max_iter == 0 {
                return Err(invalid("solve", "--max-iter must be positive"));
            }
            solve(
                mesh,
                scaffold,
                &NewtonOptions {
                    max_iter: *max_iter,
                    ..newton
                },
                out,
            )
        }
        Command::Moduli {
            mesh,
            scaffold,
            step,
            out_dir,
        } => moduli(mesh, scaffold, *step, &newton, out_dir),
        Command::ScaffoldFlow {
            mesh,
            scaffold,
            section,
            steps,
            flow_steps,
            out,
        } => {
            let opts = ContinuationOptions {
                newton,
                flow_steps: *flow_steps,
                ..ContinuationOptions::default()
            };
            scaffold_flow(mesh, scaffold, section, *steps, &opts, out)
        }
    };
    match body {
        Ok(text) => {
            report.push_str(&text);
            Ok(report)
        }
        Err(mut f) => {
            report.push_str(&f.report);
            f.report = report;
            Err(f)
        }
    }
}

fn generate(shape: &str, resolution: usize, out: &Path) -> Outcome {
    let shape: Shape = shape.parse()?;
    let m: Patch = generate_mesh(shape, resolution)?;
    write_mesh(&m, out)?;
    let (b0, b1) = betti_numbers(&m);
    Ok(format!(
        "vertices {}\nsimplices {}\nboundary_edges {}\nbetti {b0} {b1}\npatch {}\n",
        m.num_simplices(0),
        m.num_simplices(2),
        m.boundary_faces().len(),
        patch_hash(&m)
    ))
}

fn check_slag(mesh: &Path, theta: Option<f64>) -> Outcome {
    let m: Patch = load_mesh(mesh)?;
    let best = best_fit_theta(&m)?;
    let theta = theta.unwrap_or(best);
    if !theta.is_finite() {
        return Err(invalid("check_slag", "--theta must be finite"));
    }
    let (om, al) = residual_at_positions(&m, m.vertices(), theta)?;
    Ok(format!(
        "patch {}\ntheta {}\nbest_fit_theta {}\nomega_residual {}\nalpha_residual {}\n",
        patch_hash(&m),
        num(theta),
        num(best),
        num(om.inf_norm()),
        num(al.inf_norm())
    ))
}

fn harmonic(mesh: &Path, degree: usize, out: Option<&Path>) -> Outcome {
    let m: Patch = load_mesh(mesh)?;
    let space = HodgeSolver::new(&m)?.harmonic_space(degree)?;
    let hash = patch_hash(&m);
    if let Some(path) = out {
        let mut csv = format!("# degree={degree} complex=primal patch={hash}\nsimplex_index");
        for i in 0..space.dim() {
            let _ = write!(csv, ",eta_{i}");
        }
        csv.push('\n');
        for s in 0..m.num_simplices(degree) {
            let _ = write!(csv, "{s}");
            for form in &space.forms {
                let _ = write!(csv, ",{}", num(form.values[s]));
            }
            csv.push('\n');
        }
        std::fs::write(path, csv).map_err(|e| {
            Error::new(
                "cli",
                "harmonic",
                ErrorKind::Io(format!("{}: {e}", path.display())),
            )
        })?;
    }
    let mut text = format!(
        "patch {hash}\ndegree {degree}\ndimension {}\nsingular_value_gap {}\n",
        space.dim(),
        num(space.gap)
    );
    let smallest: Vec<String> = space
        .singular_values
        .iter()
        .rev()
        .take(space.dim() + 1)
        .map(|&s| num(s))
        .collect();
    let _ = writeln!(text, "smallest_singular_values {}", smallest.join(" "));
    Ok(text)
}

/// Checks the scaffold conditions where the solve starts: on the patch
/// with its boundary retracted onto `w`. If the retraction itself is
/// impossible, the input patch is checked so the table still shows why.
fn validate_scaffold(m: &Patch, w: &Scaffold) -> Result<String, Failure> {
    let b = boundary_data(m)?;
    let start = m
        .boundary_vertices()
        .into_iter()
        .try_fold(m.vertices().to_vec(), |mut pos, v| {
            pos[v] = Confinement::project(w, &pos[v])?;
            Ok::<_, Error>(pos)
        })
        .and_then(|pos| m.with_vertices(pos));
    let report = match &start {
        Ok(s) => check_scaffold_conditions(w, s, &boundary_data(s)?),
        Err(_) => check_scaffold_conditions(w, m, &b),
    };
    let text = format!("scaffold conditions\n{report}");
    if report.passes() && start.is_ok() {
        Ok(text)
    } else {
        let which = [
            ("containment", report.containment_ok()),
            ("transversality", report.transversality_ok()),
            ("frame", report.frame_ok()),
        ]
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| *name)
        .collect::<Vec<_>>()
        .join(", ");
        let which = if which.is_empty() {
            "boundary cannot be retracted onto the scaffold".to_string()
        } else {
            which
        };
        Err(Failure {
            error: Error::new(
                "cli",
                "validate_scaffold",
                ErrorKind::ScaffoldConditions(which),
            ),
            report: text,
        })
    }
}

fn solve_report(state: &slag::State) -> String {
    let history: Vec<String> = state.history.iter().map(|&r| num(r)).collect();
    format!(
        "iterations {}\ntheta {}\nomega_residual {}\nalpha_residual {}\nhistory {}\n",
        state.iterations(),
        num(state.theta),
        num(state.norms[0]),
        num(state.norms[1]),
        history.join(" ")
    )
}

/// Runs `f` and keeps `report` attached if it fails.
fn with_report<T>(report: &str, f: impl FnOnce() -> slag::Result<T>) -> Result<T, Failure> {
    f().map_err(|error| Failure {
        error,
        report: report.to_string(),
    })
}

fn solve(mesh: &Path, scaffold: &Path, opts: &NewtonOptions, out: &Path) -> Outcome {
    let m: Patch = load_mesh(mesh)?;
    let w = load_scaffold(scaffold)?;
    let mut text = validate_scaffold(&m, &w)?;
    let state = with_report(&text, || {
        let d = Deformer::new(&m, &w)?;
        let start = d.state(&slag::Vector::zeros(d.space.dim()), best_fit_theta(&m)?)?;
        newton_solve(&d, &start, &[], opts)
    })?;
    let solved = state.patch(&m)?;
    write_mesh(&solved, out)?;
    text.push_str(&solve_report(&state));
    let _ = writeln!(text, "patch {}", patch_hash(&solved));
    Ok(text)
}

fn moduli(
    mesh: &Path,
    scaffold: &Path,
    step: f64,
    opts: &NewtonOptions,
    out_dir: &Path,
) -> Outcome {
    if !step.is_finite() {
        return Err(invalid("moduli", "--step must be finite"));
    }
    let m: Patch = load_mesh(mesh)?;
    let w = load_scaffold(scaffold)?;
    let mut text = validate_scaffold(&m, &w)?;
    let d = with_report(&text, || Deformer::new(&m, &w))?;
    let basis = with_report(&text, || moduli_basis(&d))?;
    let _ = writeln!(text, "moduli_dimension {}", basis.len());
    std::fs::create_dir_all(out_dir).map_err(|e| {
        Error::new(
            "cli",
            "moduli",
            ErrorKind::Io(format!("{}: {e}", out_dir.display())),
        )
    })?;
    for (i, direction) in basis.iter().enumerate() {
        let _ = writeln!(text, "direction {i}");
        let state = with_report(&text, || moduli_step(&d, direction, step, opts))?;
        let path = out_dir.join(format!("moduli_{i}.slmesh"));
        let moved = state.patch(&m)?;
        write_mesh(&moved, &path)?;
        text.push_str(&solve_report(&state));
        let _ = writeln!(
            text,
            "kernel_component {}\npatch {}",
            num(state.kernel_component),
            patch_hash(&moved)
        );
    }
    Ok(text)
}

fn scaffold_flow(
    mesh: &Path,
    scaffold: &Path,
    section: &str,
    steps: usize,
    opts: &ContinuationOptions,
    out: &Path,
) -> Outcome {
    let m: Patch = load_mesh(mesh)?;
    let w = load_scaffold(scaffold)?;
    let cfg = if Path::new(section).is_file() {
        load_section(Path::new(section))?
    } else {
        parse_section(section)?
    };
    let x = cfg.build(&w)?;
    let mut text = validate_scaffold(&m, &w)?;
    let result = with_report(&text, || continuation_solve(&m, &w, &x, steps, opts))?;
    let moved = result.state.patch(&m)?;
    write_mesh(&moved, out)?;
    let _ = writeln!(
        text,
        "{:>24}  {:>24}  {:>10}",
        "t", "residual", "iterations"
    );
    for s in &result.path {
        let _ = writeln!(
            text,
            "{:>24}  {:>24}  {:>10}",
            num(s.t),
            num(s.residual),
            s.iterations
        );
    }
    text.push_str(&solve_report(&result.state));
    let _ = writeln!(
        text,
        "boundary_residual {}\npatch {}",
        num(result.boundary_residual),
        patch_hash(&moved)
    );
    Ok(text)
}

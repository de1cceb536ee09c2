mod coefficient;
mod error;
mod expr;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use formfem::assembler::{assemble, AssemblyJob};
use formfem::element::PhysicalFunction;
use formfem::formlang::{
    compile_all, compile_form, integrand_polynomial_degree, FormDescriptor, IntegralKind, PolynomialDegree,
};
use formfem::forms;
use formfem::kernels::{default_quadrature_degree, CompiledForm, Representation};
use formfem::linalg::{write_matrix_market, write_plain_vector, GlobalTensor};
use formfem::mesh::{read_mesh_file, unit_cube_mesh, unit_interval_mesh, unit_square_mesh, write_mesh, Mesh};
use formfem::poisson::{convergence_study, solve_poisson, PoissonOptions};
use formfem::selfcheck;

use coefficient::{CoefficientSpec, SourceSpec};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "formfem", version, about = "Compile variational forms and assemble them on simplex meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a structured mesh of the unit interval, square or cube.
    Mesh(MeshArgs),
    /// Parse a form file and print descriptors and kernel plans.
    Compile(CompileArgs),
    /// Assemble one form on a mesh.
    Assemble(AssembleArgs),
    /// Solve -Δu = f with u = g on the boundary.
    SolvePoisson(SolveArgs),
    /// Manufactured-solution convergence study on the unit square.
    Convergence(ConvergenceArgs),
    /// Nodal duality and quadrature exactness checks.
    Selfcheck,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MeshKind {
    #[value(name = "unit-interval")]
    Interval,
    #[value(name = "unit-square")]
    Square,
    #[value(name = "unit-cube")]
    Cube,
}

#[derive(Args, Debug)]
struct MeshArgs {
    kind: MeshKind,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KernelArgs {
    /// auto, quadrature or contraction.
    #[arg(long, default_value = "auto")]
    representation: String,
    /// Fixed degree for quadrature kernels.
    #[arg(long)]
    quadrature_degree: Option<usize>,
}

#[derive(Args, Debug)]
struct CompileArgs {
    /// Form file, or `builtin:<name>` for a bundled one.
    file: String,
    /// Only this form; every form in the file otherwise.
    #[arg(long)]
    form: Option<String>,
    /// Also print the full descriptor including integrands.
    #[arg(long)]
    dump_descriptor: bool,
    #[command(flatten)]
    kernels: KernelArgs,
}

#[derive(Args, Debug)]
struct AssembleArgs {
    file: String,
    #[arg(long)]
    form: String,
    #[arg(long)]
    mesh: PathBuf,
    /// `name=const:..`, `name=expr:..` or `name=field:path`; repeatable.
    #[arg(long = "coefficient", short = 'c')]
    coefficients: Vec<String>,
    #[command(flatten)]
    kernels: KernelArgs,
    /// Write vectors one value per line instead of MatrixMarket.
    #[arg(long)]
    plain: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Source term.
    #[arg(long, default_value = "const:0")]
    f: String,
    /// Boundary values.
    #[arg(long, default_value = "const:0")]
    g: String,
    #[arg(long, default_value_t = 1)]
    degree: usize,
    /// Apply the boundary condition only on exterior facets with this marker.
    #[arg(long)]
    marker: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Conjugate-gradient iteration limit.
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value = "auto")]
    representation: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[arg(long, default_value_t = 1)]
    degree: usize,
    #[arg(long, default_value_t = 4)]
    levels: usize,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::input(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_source(file: &str) -> Result<String, CliError> {
    if let Some(name) = file.strip_prefix("builtin:") {
        return forms::builtin(name).map(str::to_string).ok_or_else(|| {
            let known: Vec<&str> = forms::BUILTIN.iter().map(|(n, _)| *n).collect();
            CliError::Usage(format!("no bundled form file '{name}' (known: {})", known.join(", ")))
        });
    }
    std::fs::read_to_string(file).map_err(|e| CliError::input(Path::new(file), e))
}

fn representation(s: &str) -> Result<Representation, CliError> {
    s.parse().map_err(|_| CliError::Usage(format!("unknown representation '{s}'")))
}

fn load_mesh(path: &Path) -> Result<Mesh, CliError> {
    read_mesh_file(path).map_err(|e| CliError::input(path, e))
}

fn cmd_mesh(args: &MeshArgs) -> Result<(), CliError> {
    let n = args.n as usize;
    let mesh = match args.kind {
        MeshKind::Interval => unit_interval_mesh(n),
        MeshKind::Square => unit_square_mesh(n),
        MeshKind::Cube => unit_cube_mesh(n),
    }?;
    let mut out = output(args.out.as_deref())?;
    write_mesh(&mesh, &mut out)?;
    out.flush()?;
    Ok(())
}

fn plan(form: &CompiledForm, degree_override: Option<usize>) -> String {
    let d = form.descriptor();
    let mut s = String::new();
    for kind in IntegralKind::ALL {
        for (&id, integrand) in d.integrals(kind) {
            let repr = form.representation(kind, id).unwrap_or_default();
            let detail = match repr {
                Representation::Quadrature => {
                    let degree = degree_override.unwrap_or_else(|| default_quadrature_degree(integrand, d));
                    match integrand_polynomial_degree(integrand, d) {
                        PolynomialDegree::NonPolynomial => format!("quadrature (non-polynomial), degree {degree}"),
                        PolynomialDegree::Polynomial(_) => format!("quadrature, degree {degree}"),
                    }
                }
                other => other.to_string(),
            };
            s.push_str(&format!(
                "{} integral (subdomain {id}), representation: {detail}\n",
                kind.name().replace('_', " ")
            ));
        }
    }
    s
}

fn describe(d: &FormDescriptor) -> String {
    let mut s = format!("form {}\nrank {}, coefficients {}\n", d.name, d.rank, d.num_coefficients());
    for (k, (n, e)) in d.argument_names.iter().zip(&d.argument_elements).enumerate() {
        s.push_str(&format!("argument {k} {n} {}\n", e.signature()));
    }
    for (k, (n, e)) in d.coefficient_names.iter().zip(&d.coefficient_elements).enumerate() {
        s.push_str(&format!("coefficient {k} {n} {}\n", e.signature()));
    }
    s
}

fn cmd_compile(args: &CompileArgs) -> Result<(), CliError> {
    let src = read_source(&args.file)?;
    let repr = representation(&args.kernels.representation)?;
    let descriptors = match &args.form {
        Some(name) => vec![compile_form(&src, name)?],
        None => compile_all(&src)?,
    };
    let mut out = io::stdout().lock();
    for (k, d) in descriptors.into_iter().enumerate() {
        if k > 0 {
            writeln!(out)?;
        }
        write!(out, "{}", describe(&d))?;
        let dump = args.dump_descriptor.then(|| d.dump());
        let form = CompiledForm::with_quadrature_degree(d, repr, args.kernels.quadrature_degree)?;
        write!(out, "{}", plan(&form, args.kernels.quadrature_degree))?;
        if let Some(dump) = dump {
            write!(out, "{dump}")?;
        }
    }
    Ok(())
}

fn cmd_assemble(args: &AssembleArgs) -> Result<(), CliError> {
    let src = read_source(&args.file)?;
    let repr = representation(&args.kernels.representation)?;
    let d = compile_form(&src, &args.form)?;
    let form = CompiledForm::with_quadrature_degree(d, repr, args.kernels.quadrature_degree)?;
    let mesh = load_mesh(&args.mesh)?;
    let specs: Vec<CoefficientSpec> = args.coefficients.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
    let d = form.descriptor();
    for s in &specs {
        if !d.coefficient_names.contains(&s.name) {
            return Err(CliError::Usage(format!(
                "form {} has no coefficient '{}' (coefficients: {})",
                d.name,
                s.name,
                d.coefficient_names.join(", ")
            )));
        }
    }
    let mut job = AssemblyJob::new(&form, &mesh)?;
    for (name, element) in d.coefficient_names.iter().zip(&d.coefficient_elements) {
        let spec = specs.iter().rev().find(|s| &s.name == name).ok_or_else(|| {
            CliError::Usage(format!("coefficient '{name}' is not bound; pass --coefficient {name}=..."))
        })?;
        job = job.coefficient(spec.source.resolve(element, &mesh)?);
    }
    let tensor = assemble(&job)?;
    let mut out = output(args.out.as_deref())?;
    match &tensor {
        GlobalTensor::Scalar(v) => writeln!(out, "{v:.16e}")?,
        GlobalTensor::Vector(v) if args.plain => write_plain_vector(v, &mut out)?,
        _ => write_matrix_market(&tensor, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn analytic(spec: &str, mesh: &Mesh) -> Result<Arc<dyn PhysicalFunction>, CliError> {
    let source: SourceSpec = spec.parse()?;
    let element =
        formfem::element::FiniteElement::lagrange(mesh.shape(), 1).map_err(|e| CliError::Usage(e.to_string()))?;
    match source.resolve(&element, mesh)? {
        formfem::assembler::CoefficientSource::Analytic(f) => Ok(f),
        _ => Err(CliError::Usage(format!("'{spec}': solve-poisson takes const: or expr: sources"))),
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let mesh = load_mesh(&args.mesh)?;
    let f = analytic(&args.f, &mesh)?;
    let g = analytic(&args.g, &mesh)?;
    let options = PoissonOptions {
        degree: args.degree,
        marker: args.marker,
        tolerance: args.tol,
        max_iterations: args.max_iter,
        representation: representation(&args.representation)?,
    };
    let u = solve_poisson(&mesh, f, g.as_ref(), &options)?;
    eprintln!(
        "{} dofs, {} iterations, relative residual {:.3e}",
        u.values.len(),
        u.stats.iterations,
        u.stats.relative_residual
    );
    let mut out = output(args.out.as_deref())?;
    write_plain_vector(&u.values, &mut out)?;
    out.flush()?;
    Ok(())
}

fn rate(r: Option<f64>) -> String {
    r.map_or_else(|| "-".to_string(), |r| format!("{r:.3}"))
}

fn cmd_convergence(args: &ConvergenceArgs) -> Result<(), CliError> {
    let levels = convergence_study(args.degree, args.levels)?;
    let mut out = io::stdout().lock();
    writeln!(out, "degree {}", args.degree)?;
    writeln!(out, "{:>5} {:>8} {:>12} {:>7} {:>12} {:>7}", "n", "dofs", "L2 error", "rate", "H1 error", "rate")?;
    for l in &levels {
        writeln!(
            out,
            "{:>5} {:>8} {:>12.4e} {:>7} {:>12.4e} {:>7}",
            l.n,
            l.dofs,
            l.l2,
            rate(l.l2_rate),
            l.h1,
            rate(l.h1_rate)
        )?;
    }
    Ok(())
}

fn cmd_selfcheck() -> Result<(), CliError> {
    let results = selfcheck::run_all();
    let mut out = io::stdout().lock();
    for r in &results {
        writeln!(out, "{r}")?;
    }
    let failed = results.iter().filter(|r| !r.passed()).count();
    writeln!(out, "{} passed, {failed} failed", results.len() - failed)?;
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} self-checks failed")));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Mesh(a) => cmd_mesh(a),
        Command::Compile(a) => cmd_compile(a),
        Command::Assemble(a) => cmd_assemble(a),
        Command::SolvePoisson(a) => cmd_solve(a),
        Command::Convergence(a) => cmd_convergence(a),
        Command::Selfcheck => cmd_selfcheck(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

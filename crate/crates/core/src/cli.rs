//! Command implementations behind the `spectral` binary.
//!
//! Every command returns a JSON document and a pass flag. Errors are mapped to
//! exit codes by the binary: input errors 2, numerical failures 3.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::discrete::{sym_eigendecomposition, EigDecomp, TransitionOperator, WeightedSpace, DEFAULT_TOL};
use crate::dots::{dot_intertwiner, dot_verify, DotArrayModel, DotOracleConfig};
use crate::error::{Error, Result};
use crate::fem::{assemble_fem, krein_oracle_error, oracle_compare, oracle_convergence};
use crate::gamma::{gamma_apply, weyl_identity_residual};
use crate::graph::Graph;
use crate::intertwiner::{
    band_spectrum, check_interval, phi_eigen_sum, stieltjes_table, verify_interval, VerificationReport, IDENTITY_TOL,
};
use crate::par::Exec;

pub const DEFAULT_SEED: u64 = 0x5eed;
/// Distance kept from the band edges by the default intervals.
pub const EDGE_MARGIN: f64 = 0.05;
pub const WEYL_PAIRS: usize = 20;
pub const STIELTJES_LEVELS: usize = 6;
pub const KREIN_POINTS: [f64; 3] = [-1.0, -9.0, -25.0];
/// Rate band `[3, 5]` for the eigenvalue error under mesh halving.
pub const FEM_RATIO: (f64, f64) = (3.0, 5.0);
/// The Riemann-Stieltjes defect should halve with the mesh; ratios within
/// this distance of 1/2 pass.
pub const STIELTJES_RATE_TOL: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Verify,
    Oracle,
    Dots,
    Stieltjes,
}

/// Validated options of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub input: PathBuf,
    pub bands: Vec<usize>,
    pub interval: Option<(f64, f64)>,
    pub nodes: usize,
    pub samples: usize,
    pub csv_dir: Option<PathBuf>,
    pub seed: u64,
    pub tol: f64,
    /// Truncation length of the dot oracle.
    pub length: f64,
    pub exec: Exec,
    /// Perturbs `P[0][1]` after the eigendecomposition has been taken.
    pub inject_fault: bool,
}

impl RunConfig {
    pub fn new(command: Command, input: impl Into<PathBuf>) -> Self {
        let bands = match command {
            Command::Spectrum => vec![0, 1, 2],
            Command::Oracle => vec![0, 1],
            _ => vec![0],
        };
        RunConfig {
            command,
            input: input.into(),
            bands,
            interval: None,
            nodes: 200,
            samples: 33,
            csv_dir: None,
            seed: DEFAULT_SEED,
            tol: DEFAULT_TOL,
            length: 10.0,
            exec: Exec::default(),
            inject_fault: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.bands.is_empty() {
            return bad("no band selected".into());
        }
        if self.interval.is_some() && self.bands.len() != 1 {
            return bad("--interval needs a single --band".into());
        }
        if let Some((a, b)) = self.interval {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return bad(format!("[{a}, {b}] is not an interval"));
            }
        }
        if self.nodes < crate::fem::MIN_NODES {
            return bad(format!("--nodes must be at least {}", crate::fem::MIN_NODES));
        }
        if self.command == Command::Oracle && !self.nodes.is_multiple_of(4) {
            return bad("--nodes must be divisible by 4 for the convergence table".into());
        }
        if self.samples < 2 {
            return bad("--samples must be at least 2".into());
        }
        if !(self.tol > 0.0 && self.tol < 1e-3) {
            return bad(format!("tolerance {} out of range", self.tol));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad("--length must be positive".into());
        }
        Ok(())
    }
}

/// Result of one command.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub json: Value,
    pub pass: bool,
}

impl Outcome {
    pub fn render(&self) -> String {
        serde_json::to_string_pretty(&self.json).expect("JSON values always serialize")
    }
}

/// `K` or `K-L`.
pub fn parse_bands(s: &str) -> Result<Vec<usize>> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("bad band '{s}'")))
    };
    match s.split_once('-') {
        Some((a, b)) => {
            let (a, b) = (num(a)?, num(b)?);
            if a > b {
                return Err(Error::InvalidArgument(format!("empty band range '{s}'")));
            }
            Ok((a..=b).collect())
        }
        None => Ok(vec![num(s)?]),
    }
}

/// `A,B`.
pub fn parse_interval(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| Error::InvalidArgument(format!("bad interval '{s}'")))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidArgument(format!("bad interval '{s}'")))
    };
    Ok((num(a)?, num(b)?))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    Graph::from_json(&read(path)?)
}

pub fn load_dots(path: &Path) -> Result<DotArrayModel> {
    DotArrayModel::from_json(&read(path)?)
}

/// `[-0.5, pi^2 - 0.05]` for band 0 and `[(k pi)^2 + 0.05, ((k+1) pi)^2 - 0.05]`
/// otherwise, nudged inwards if an endpoint falls on the spectrum.
pub fn default_interval(e: &EigDecomp, k: usize) -> Result<(f64, f64)> {
    let upper = ((k + 1) as f64 * PI).powi(2) - EDGE_MARGIN;
    let lower = if k == 0 {
        -0.5
    } else {
        (k as f64 * PI).powi(2) + EDGE_MARGIN
    };
    let (mut a, mut b) = (lower, upper);
    for _ in 0..10 {
        match check_interval(e, k, a, b) {
            Ok(()) => return Ok((a, b)),
            Err(Error::EndpointOnSpectrum(x)) if x == a => a += 1e-3,
            Err(Error::EndpointOnSpectrum(_)) => b -= 1e-3,
            Err(other) => return Err(other),
        }
    }
    check_interval(e, k, a, b).map(|_| (a, b))
}

struct Setup {
    graph: Graph,
    clean: TransitionOperator,
    used: TransitionOperator,
    eig: EigDecomp,
}

fn setup(cfg: &RunConfig) -> Result<Setup> {
    let graph = load_graph(&cfg.input)?;
    let clean = TransitionOperator::new(&graph);
    let eig = sym_eigendecomposition(&clean, cfg.tol)?;
    let used = if cfg.inject_fault {
        let mut m = clean.matrix().clone();
        m[(0, 1)] += 1e-3;
        TransitionOperator::from_parts(m, clean.space().clone())
    } else {
        clean.clone()
    };
    Ok(Setup {
        graph,
        clean,
        used,
        eig,
    })
}

fn interval_for(cfg: &RunConfig, e: &EigDecomp, k: usize) -> Result<(f64, f64)> {
    match cfg.interval {
        Some((a, b)) => check_interval(e, k, a, b).map(|_| (a, b)),
        None => default_interval(e, k),
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    match cfg.command {
        Command::Spectrum => cmd_spectrum(cfg),
        Command::Verify => cmd_verify(cfg),
        Command::Oracle => cmd_oracle(cfg),
        Command::Dots => cmd_dots(cfg),
        Command::Stieltjes => cmd_stieltjes(cfg),
    }
}

#[derive(Serialize)]
struct SpectrumEntry {
    lambda: f64,
    mu: f64,
    mult: usize,
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let s = setup(cfg)?;
    let mut bands = Vec::new();
    for &k in &cfg.bands {
        let sys = band_spectrum(&s.eig, k)?;
        let eigenvalues: Vec<SpectrumEntry> = sys
            .preimages
            .iter()
            .map(|p| SpectrumEntry {
                lambda: p.lambda,
                mu: p.mu,
                mult: p.multiplicity(),
            })
            .collect();
        bands.push(json!({"k": k, "eigenvalues": eigenvalues, "sigma_excluded": sys.sigma_excluded}));
    }
    let json = json!({"P_spectrum": s.eig.eigenvalues(), "bands": bands});
    Ok(Outcome { json, pass: true })
}

fn suffix(name: &str, k: usize, many: bool) -> String {
    if many {
        format!("{name}[band {k}]")
    } else {
        name.to_string()
    }
}

fn random_pair<R: Rng + ?Sized>(rng: &mut R) -> (Complex64, Complex64) {
    let mut draw = || {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        Complex64::new(rng.random_range(-30.0..100.0), sign * rng.random_range(0.1..5.0))
    };
    (draw(), draw())
}

/// Largest Weyl identity residual over `count` random off-axis pairs.
pub fn weyl_identity_sweep<R: Rng + ?Sized>(
    g: &Graph,
    p: &TransitionOperator,
    count: usize,
    rng: &mut R,
    exec: Exec,
) -> Result<f64> {
    let pairs: Vec<(Complex64, Complex64)> = (0..count).map(|_| random_pair(rng)).collect();
    let residuals = exec.try_map(&pairs, |&(z1, z2)| weyl_identity_residual(g, p, z1, z2))?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    let s = setup(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let many = cfg.bands.len() > 1;
    let mut report = VerificationReport::new();
    report.push(
        "transition_self_adjoint",
        "P = P* on l2(X0, deg)",
        s.used.self_adjointness_defect(),
        IDENTITY_TOL,
    );
    for &k in &cfg.bands {
        let (a, b) = interval_for(cfg, &s.eig, k)?;
        let rows = verify_interval(&s.graph, &s.used, &s.eig, k, a, b, &mut rng)?;
        for c in rows.checks {
            report.push(&suffix(&c.name, k, many), &c.anchor, c.defect, c.tol);
        }
        let table = stieltjes_table(&s.graph, &s.eig, k, a, b, STIELTJES_LEVELS)?;
        report.push(
            &suffix("riemann_stieltjes_rate", k, many),
            "|Phi_Delta - Phi| = O(mesh)",
            table.worst_ratio_deviation(),
            STIELTJES_RATE_TOL,
        );
        report.push(
            &suffix("riemann_stieltjes_exact", k, many),
            "Phi_Delta = Phi for tags on the preimages",
            table.exact_defect,
            1e-12,
        );
        if let Some(dir) = &cfg.csv_dir {
            write_images(&s.graph, &s.eig, k, a, b, dir, cfg.samples)?;
        }
    }
    let weyl = weyl_identity_sweep(&s.graph, &s.used, WEYL_PAIRS, &mut rng, cfg.exec)?;
    report.push(
        "weyl_identity",
        "M(z1) - M(z2*) = (z1 - z2*) gamma(z2)* gamma(z1)",
        weyl,
        IDENTITY_TOL,
    );
    let pass = report.pass;
    Ok(Outcome {
        json: serde_json::to_value(&report).expect("report serializes"),
        pass,
    })
}

fn write_images(g: &Graph, e: &EigDecomp, k: usize, a: f64, b: f64, dir: &Path, samples: usize) -> Result<()> {
    fs::create_dir_all(dir).map_err(|err| Error::Io(format!("{}: {err}", dir.display())))?;
    let phi = phi_eigen_sum(g, e, k, a, b)?;
    for (i, atom) in phi.atoms.iter().enumerate() {
        for (j, f) in atom.images.iter().enumerate() {
            let path = dir.join(format!("band{k}_atom{i}_{j}.csv"));
            let file = fs::File::create(&path).map_err(|err| Error::Io(format!("{}: {err}", path.display())))?;
            f.write_csv(file, samples)?;
        }
    }
    Ok(())
}

pub fn cmd_oracle(cfg: &RunConfig) -> Result<Outcome> {
    let s = setup(cfg)?;
    let mut report = VerificationReport::new();
    let mut bands = Vec::new();
    let meshes = [cfg.nodes / 4, cfg.nodes / 2, cfg.nodes];
    let many = cfg.bands.len() > 1;
    for &k in &cfg.bands {
        let (a, b) = interval_for(cfg, &s.eig, k)?;
        let cmp = match oracle_compare(&s.graph, &s.eig, k, a, b, cfg.nodes) {
            Ok(c) => c,
            Err(err @ Error::MultiplicityMismatch { .. }) => {
                report.push(&suffix("multiplicities", k, many), &err.to_string(), 1.0, 0.0);
                continue;
            }
            Err(other) => return Err(other),
        };
        report.push(
            &suffix("multiplicities", k, many),
            "dim ker(H - lambda) = dim ker(T - m(lambda))",
            0.0,
            0.0,
        );
        report.push(
            &suffix("eigenvalues", k, many),
            "spec H in J = m^-1(spec T)",
            cmp.max_rel_error(),
            1e-4,
        );
        report.push(
            &suffix("eigenspaces", k, many),
            "ran E_H({lambda}) = ran gamma(lambda) E_T",
            cmp.max_sine(),
            1e-3,
        );
        let conv = oracle_convergence(&s.graph, &s.eig, k, a, b, &meshes)?;
        let centre = 0.5 * (FEM_RATIO.0 + FEM_RATIO.1);
        let worst = conv
            .iter()
            .flat_map(|r| r.ratios.iter())
            .map(|r| (r - centre).abs())
            .fold(0.0, f64::max);
        report.push(
            &suffix("fem_convergence", k, many),
            "finite-element eigenvalue error = O(h^2)",
            worst,
            0.5 * (FEM_RATIO.1 - FEM_RATIO.0),
        );
        bands.push(json!({"k": k, "interval": [a, b], "matches": cmp.matches, "convergence": conv}));
    }

    let fem = assemble_fem(&s.graph, cfg.nodes)?;
    let source = gamma_apply(&s.graph, Complex64::from(-4.0), &WeightedSpace::new(&s.graph).unit(0))?;
    let krein: Vec<(f64, f64)> = cfg
        .exec
        .try_map(&KREIN_POINTS, |&z| {
            krein_oracle_error(&s.graph, &s.clean, &fem, Complex64::from(z), &source)
        })?
        .into_iter()
        .zip(KREIN_POINTS)
        .map(|(err, z)| (z, err))
        .collect();
    let worst = krein.iter().map(|k| k.1).fold(0.0, f64::max);
    report.push(
        "krein",
        "(H - z)^-1 - (H0 - z)^-1 = -gamma(z) M(z)^-1 gamma(z*)*",
        worst,
        1e-4,
    );
    let krein_json: Vec<Value> = krein.iter().map(|(z, e)| json!({"z": z, "rel_error": e})).collect();
    let pass = report.pass;
    let json = json!({
        "nodes": cfg.nodes,
        "bands": bands,
        "krein": krein_json,
        "checks": report.checks,
        "pass": pass,
    });
    Ok(Outcome { json, pass })
}

pub fn cmd_dots(cfg: &RunConfig) -> Result<Outcome> {
    let model = load_dots(&cfg.input)?;
    let phi = dot_intertwiner(&model);
    let oracle = DotOracleConfig {
        length: cfg.length,
        nodes_per_unit: cfg.nodes,
        ..DotOracleConfig::default()
    };
    let report = dot_verify(&model, Some(oracle))?;
    let fem = crate::fem::dot_oracle_spectrum(&model, oracle.length, oracle.nodes_per_unit)?;
    if let Some(dir) = &cfg.csv_dir {
        fs::create_dir_all(dir).map_err(|err| Error::Io(format!("{}: {err}", dir.display())))?;
        let path = dir.join("bound_states.csv");
        let file = fs::File::create(&path).map_err(|err| Error::Io(format!("{}: {err}", path.display())))?;
        phi.write_csv(file)?;
    }
    let states: Vec<Value> = phi
        .atoms
        .iter()
        .map(|a| json!({"lambda": a.lambda, "kappa": a.kappa, "mu": a.mu, "mult": a.multiplicity()}))
        .collect();
    let pass = report.pass;
    let json = json!({
        "bound_states": states,
        "oracle_eigenvalues": fem,
        "checks": report.checks,
        "pass": pass,
    });
    Ok(Outcome { json, pass })
}

pub fn cmd_stieltjes(cfg: &RunConfig) -> Result<Outcome> {
    let s = setup(cfg)?;
    let mut out = Vec::new();
    let mut report = VerificationReport::new();
    let many = cfg.bands.len() > 1;
    for &k in &cfg.bands {
        let (a, b) = interval_for(cfg, &s.eig, k)?;
        let table = stieltjes_table(&s.graph, &s.eig, k, a, b, STIELTJES_LEVELS)?;
        report.push(
            &suffix("riemann_stieltjes_rate", k, many),
            "|Phi_Delta - Phi| = O(mesh)",
            table.worst_ratio_deviation(),
            STIELTJES_RATE_TOL,
        );
        report.push(
            &suffix("riemann_stieltjes_exact", k, many),
            "Phi_Delta = Phi for tags on the preimages",
            table.exact_defect,
            1e-12,
        );
        out.push(json!({"k": k, "interval": [a, b], "table": table}));
    }
    let pass = report.pass;
    Ok(Outcome {
        json: json!({"bands": out, "checks": report.checks, "pass": pass}),
        pass,
    })
}

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use weylzak::io::{self, ZakSlice};
use weylzak::*;

use crate::config::{AnalysisConfig, BracketRoute, Format};

/// Dense Zak fields above this many samples are avoided when only the bracket is needed.
const DENSE_LIMIT: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Kernel,
    Zak,
    Bracket,
    Analyze,
    Dualize,
    Orthonormalize,
    Member,
    Gram,
    Crosscheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Zak => "zak",
            Command::Bracket => "bracket",
            Command::Analyze => "analyze",
            Command::Dualize => "dualize",
            Command::Orthonormalize => "orthonormalize",
            Command::Member => "member",
            Command::Gram => "gram",
            Command::Crosscheck => "crosscheck",
        }
    }
}

/// What a command produced. `failure` marks a verdict-level failure (exit status 2).
pub struct Done {
    pub result: Value,
    pub summary: Vec<String>,
    pub failure: Option<String>,
}

impl Done {
    fn ok(result: Value, summary: Vec<String>) -> Self {
        Done { result, summary, failure: None }
    }
}

pub struct Run {
    pub cfg: AnalysisConfig,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub seed: u64,
    pub hash: String,
    pub diagnostics: Map<String, Value>,
    pub artifacts: Vec<String>,
}

/// Planar generator with its kernel, or the factors of a separable one.
enum Built {
    Planar(Generator64, Kernel64),
    Separable(Vec<(Generator64, Kernel64)>),
}

impl Run {
    pub fn new(cfg: AnalysisConfig, out: PathBuf, formats: Vec<Format>, seed: u64) -> Self {
        let hash = cfg.hash();
        let mut diagnostics = Map::new();
        diagnostics.insert("thresholds".into(), serde_json::to_value(&cfg.thresholds).expect("thresholds serialise"));
        Run { cfg, out, formats, seed, hash, diagnostics, artifacts: Vec::new() }
    }

    pub fn execute(&mut self, cmd: Command) -> Result<Done> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating output directory {}", self.out.display()))?;
        match cmd {
            Command::Kernel => self.kernel(),
            Command::Zak => self.zak(),
            Command::Bracket => self.bracket(),
            Command::Analyze => self.analyze(),
            Command::Dualize => self.dualize(),
            Command::Orthonormalize => self.orthonormalize(),
            Command::Member => self.member(),
            Command::Gram => self.gram(),
            Command::Crosscheck => self.crosscheck(),
        }
    }

    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    // ---- pipeline stages ----

    fn window(&self, g: &Generator64) -> KernelWindow {
        let gr = &self.cfg.grids;
        KernelWindow::for_generator(gr.truncation, gr.eta_half_width, gr.per_unit(), g)
    }

    fn kernel_of(&mut self, g: &Generator64, w: &KernelWindow, tag: &str) -> Result<Kernel64> {
        let k = weyl_kernel(g, w).with_context(|| format!("computing the {tag} kernel"))?;
        self.diagnostics.insert(
            format!("{tag}_kernel"),
            json!({
                "hs_norm": hs_norm(&k),
                "edge_slab_fraction": k.edge_slab_fraction(),
                "unknown_rows": k.unknown_rows,
                "path": k.path,
            }),
        );
        Ok(k)
    }

    fn build(&mut self) -> Result<Built> {
        let g: Generator64 = materialize(&self.cfg.generator).context("materialising the generator")?;
        if let Generator::Separable(factors) = &g {
            if self.cfg.fixture.is_some() {
                bail!("fixtures apply to planar generators only");
            }
            let mut out = Vec::new();
            for (d, f) in factors.iter().enumerate() {
                let w = self.window(f);
                let k = self.kernel_of(f, &w, &format!("factor{d}"))?;
                out.push((f.clone(), k));
            }
            return Ok(Built::Separable(out));
        }
        let w = self.window(&g);
        let k = self.kernel_of(&g, &w, "generator")?;
        Ok(Built::Planar(g, k))
    }

    fn planar(&mut self, cmd: &str) -> Result<(Generator64, Kernel64)> {
        match self.build()? {
            Built::Planar(g, k) => Ok((g, k)),
            Built::Separable(_) => Err::<(Generator64, Kernel64), _>(Error::UnsupportedDimension(self.cfg.generator.n))
                .with_context(|| format!("`{cmd}` needs a planar generator")),
        }
    }

    fn zak_options(&self) -> ZakOptions {
        let gr = &self.cfg.grids;
        ZakOptions::new(gr.truncation).with_n_xi_prime(gr.n_xi_prime())
    }

    fn zak_of(&mut self, k: &Kernel64, tag: &str) -> Result<Zak64> {
        let opts = self.zak_options();
        let z = match self.cfg.grids.lattice {
            ZakLattice::Full => zak_forward(k, &opts),
            ZakLattice::Half => zak_pi_h_forward(k, &opts),
        }
        .with_context(|| format!("computing the {tag} Zak field"))?;
        self.diagnostics.insert(format!("{tag}_tail"), serde_json::to_value(z.tail)?);
        Ok(z)
    }

    /// Zak field of the generator, with the fixture applied.
    fn generator_zak(&mut self, k: &Kernel64) -> Result<Zak64> {
        let z = self.zak_of(k, "generator")?;
        Ok(match &self.cfg.fixture {
            Some(f) => {
                self.diagnostics.insert("fixture".into(), json!({"zero_band": f.zero_band}));
                zero_xi_prime_band(&z, f.zero_band[0], f.zero_band[1])
            }
            None => z,
        })
    }

    fn use_fibres(&self, k: &Kernel64) -> bool {
        let gr = &self.cfg.grids;
        match gr.bracket_route {
            BracketRoute::Zak => false,
            BracketRoute::Fibres => self.cfg.fixture.is_none(),
            BracketRoute::Auto => {
                let nxi = match gr.lattice {
                    ZakLattice::Full => gr.per_unit(),
                    ZakLattice::Half => gr.per_unit() / 2,
                };
                self.cfg.fixture.is_none() && nxi * gr.n_xi_prime() * k.eta.len > DENSE_LIMIT
            }
        }
    }

    /// Self-bracket, through the fibres when the dense Zak field is not worth building.
    fn self_bracket(&mut self, k: &Kernel64) -> Result<Bracket64> {
        let gr = self.cfg.grids.clone();
        if self.use_fibres(k) {
            self.diagnostics.insert("bracket_route".into(), json!("fibres"));
            return Ok(bracket_fibers(k, k, gr.truncation, gr.n_xi_prime(), gr.lattice)?);
        }
        self.diagnostics.insert("bracket_route".into(), json!("zak"));
        let z = self.generator_zak(k)?;
        Ok(bracket(&z, &z)?)
    }

    fn gram_of(&mut self, g: &Generator64, k: &Kernel64) -> Result<GramMatrix> {
        let r = self.cfg.oracle.radius;
        let n = self.cfg.grids.per_unit();
        if self.cfg.fixture.is_some() {
            // the fixture only exists as a Zak field; its kernel comes back through the inverse
            let z = self.generator_zak(k)?;
            return Ok(gram_matrix_kernel(&zak_inverse(&z).padded_xi(r + 1), r)?);
        }
        let gram = match g {
            Generator::Closed(c @ ClosedForm::IndicatorBox) => {
                let ax = Axis::window(-(r + 1), r + 2, n, true);
                let f = Grid64::from_fn(ax, ax, |x: f64, y: f64| c.function(x, y).expect("closed form"));
                gram_matrix(&f, r)
            }
            Generator::Function(f) => gram_matrix(f, r),
            _ => gram_matrix_kernel(&k.padded_xi(r + 1), r),
        };
        gram.context("assembling the Gram matrix")
    }

    // ---- artifacts ----

    fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.out.join(name)
    }

    fn extra(&self) -> Value {
        json!({"config_hash": self.hash, "diagnostics": self.diagnostics})
    }

    fn csv(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> weylzak::Result<()>) -> Result<()> {
        let p = self.path(name);
        let mut w = io::create(&p)?;
        writeln!(w, "# config_hash={}", self.hash)?;
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn bin(&mut self, name: &str, body: impl FnOnce(&mut dyn Write, Value) -> weylzak::Result<()>) -> Result<()> {
        let extra = self.extra();
        let p = self.path(name);
        let mut w = io::create(&p)?;
        body(&mut w, extra)?;
        w.flush()?;
        Ok(())
    }

    fn write_kernel(&mut self, k: &Kernel64, stem: &str) -> Result<()> {
        let dtype = self.cfg.outputs.dtype;
        if self.wants(Format::Bin) {
            self.bin(&format!("{stem}.bin"), |mut w, e| io::write_kernel(&mut w, k, dtype, e))?;
        }
        if self.wants(Format::Csv) {
            self.csv(&format!("{stem}.csv"), |mut w| io::kernel_csv(&mut w, k))?;
        }
        Ok(())
    }

    fn write_zak(&mut self, z: &Zak64, stem: &str) -> Result<()> {
        let dtype = self.cfg.outputs.dtype;
        if self.wants(Format::Bin) {
            self.bin(&format!("{stem}.bin"), |mut w, e| io::write_zak(&mut w, z, dtype, e))?;
        }
        if self.wants(Format::Csv) {
            let e0 = nearest_node(&z.eta, 0.0);
            self.csv(&format!("{stem}_eta_slice.csv"), |mut w| io::zak_csv(&mut w, z, ZakSlice::Eta(e0)))?;
            self.csv(&format!("{stem}_xi_prime_slice.csv"), |mut w| io::zak_csv(&mut w, z, ZakSlice::XiPrime(0)))?;
        }
        Ok(())
    }

    fn write_bracket(&mut self, b: &Bracket64, stem: &str) -> Result<()> {
        let dtype = self.cfg.outputs.dtype;
        if self.wants(Format::Bin) {
            self.bin(&format!("{stem}.bin"), |mut w, e| io::write_bracket(&mut w, b, dtype, e))?;
        }
        if self.wants(Format::Csv) {
            self.csv(&format!("{stem}.csv"), |mut w| io::bracket_csv(&mut w, b))?;
        }
        Ok(())
    }

    fn write_gram(&mut self, g: &GramMatrix) -> Result<()> {
        let dtype = self.cfg.outputs.dtype;
        if self.wants(Format::Bin) {
            self.bin("gram.bin", |mut w, e| io::write_gram(&mut w, g, dtype, e))?;
        }
        if self.wants(Format::Json) {
            let mut doc = io::gram_json(g);
            doc["config_hash"] = json!(self.hash);
            let p = self.path("gram.json");
            std::fs::write(&p, serde_json::to_string_pretty(&doc)?)?;
        }
        Ok(())
    }

    fn summary_of(&self, b: &Bracket64) -> BracketSummary {
        let max = b.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        b.summary(self.cfg.thresholds.tau * max)
    }

    // ---- commands ----

    fn kernel(&mut self) -> Result<Done> {
        let built = self.build()?;
        let mut parts = Vec::new();
        let ks: Vec<(String, Kernel64)> = match built {
            Built::Planar(_, k) => vec![("kernel".into(), k)],
            Built::Separable(f) => f.into_iter().enumerate().map(|(d, (_, k))| (format!("kernel_factor{d}"), k)).collect(),
        };
        for (stem, k) in &ks {
            self.write_kernel(k, stem)?;
            parts.push(json!({
                "name": stem,
                "xi": k.xi,
                "eta": k.eta,
                "hs_norm": hs_norm(k),
                "edge_slab_fraction": k.edge_slab_fraction(),
            }));
        }
        let summary = ks.iter().map(|(s, k)| format!("{s}: {} x {} nodes, HS norm {:.8}", k.xi.len, k.eta.len, hs_norm(k))).collect();
        Ok(Done::ok(json!({"kernels": parts}), summary))
    }

    fn zak(&mut self) -> Result<Done> {
        let mut parts = Vec::new();
        let mut summary = Vec::new();
        let fields: Vec<(String, Zak64, f64)> = match self.build()? {
            Built::Planar(_, k) => vec![("zak".into(), self.generator_zak(&k)?, hs_norm(&k))],
            Built::Separable(f) => f
                .iter()
                .enumerate()
                .map(|(d, (_, k))| Ok((format!("zak_factor{d}"), self.zak_of(k, &format!("factor{d}"))?, hs_norm(k))))
                .collect::<Result<_>>()?,
        };
        for (stem, z, hs) in &fields {
            self.write_zak(z, stem)?;
            parts.push(json!({
                "name": stem,
                "dims": [z.xi.len, z.n_xi_prime, z.eta.len],
                "lattice": z.lattice,
                "norm": z.norm(),
                "kernel_hs_norm": hs,
                "tail": z.tail,
            }));
            summary.push(format!(
                "{stem}: {} x {} x {} samples, norm {:.8}, tail within tolerance: {}",
                z.xi.len, z.n_xi_prime, z.eta.len, z.norm(), z.tail.within_tolerance
            ));
        }
        Ok(Done::ok(json!({"fields": parts}), summary))
    }

    fn bracket(&mut self) -> Result<Done> {
        match self.build()? {
            Built::Planar(_, k) => {
                let b = self.self_bracket(&k)?;
                self.write_bracket(&b, "bracket")?;
                let s = self.summary_of(&b);
                let line = format!("bracket in [{:.6}, {:.6}], L1 {:.6}", s.min, s.max, s.l1);
                Ok(Done::ok(json!({"summary": s}), vec![line]))
            }
            Built::Separable(f) => {
                let mut factors = Vec::new();
                let mut tables = Vec::new();
                for (d, (_, k)) in f.iter().enumerate() {
                    let b = self.self_bracket(k)?;
                    self.write_bracket(&b, &format!("bracket_factor{d}"))?;
                    factors.push(self.summary_of(&b));
                    tables.push(b);
                }
                let (lo, hi) = SeparableBracket { factors: tables }.min_max();
                let line = format!("separable bracket in [{lo:.6}, {hi:.6}] over {} factors", factors.len());
                Ok(Done::ok(json!({"factors": factors, "product": {"min": lo, "max": hi}}), vec![line]))
            }
        }
    }

    fn analyze(&mut self) -> Result<Done> {
        let th = self.cfg.thresholds.clone();
        let (g, k) = match self.build()? {
            Built::Planar(g, k) => (g, k),
            Built::Separable(f) => {
                let tables: Vec<Bracket64> = f.iter().map(|(_, k)| self.self_bracket(k)).collect::<Result<_>>()?;
                let sb = SeparableBracket { factors: tables };
                let frame = separable_frame_bounds(&sb, th.tau)?;
                let line = format!("verdict {:?}, bounds [{:.6}, {:.6}]", frame.verdict, frame.lower, frame.upper);
                let failure = verdict_failure(frame.verdict);
                let note = "A2 scan and Gram oracle are planar only";
                return Ok(Done { result: json!({"verdict": frame.verdict, "frame": frame, "note": note}), summary: vec![line], failure });
            }
        };
        let b = self.self_bracket(&k)?;
        self.write_bracket(&b, "bracket")?;
        let frame = frame_bounds(&b, th.tau)?;
        let riesz = riesz_bounds(&b, th.tau)?;
        let orthonormal = orthonormality_check(&b, th.orthonormal_tol);
        let a2 = match b.lattice {
            ZakLattice::Full => Some(a2_constant(&b, th.a2_depth)?),
            ZakLattice::Half => None,
        };
        let mut result = json!({
            "verdict": frame.verdict,
            "frame": frame,
            "riesz": riesz,
            "orthonormal": orthonormal,
            "a2": a2,
            "bracket": self.summary_of(&b),
        });
        let mut summary = vec![
            format!("verdict {:?}, frame bounds [{:.6}, {:.6}] on {:.1}% of the torus", frame.verdict, frame.lower, frame.upper, 100.0 * frame.support_fraction),
            format!("Riesz check {:?}, orthonormal: {orthonormal}", riesz.verdict),
        ];
        if let Some(a) = &a2 {
            summary.push(match a.constant {
                Some(c) => format!("A2 constant {c:.6}, flat {}, Schauder {}", a.flat, a.schauder),
                None => format!("A2 constant undefined: {} nonpositive nodes", a.nonpositive_nodes),
            });
        }
        let failure = verdict_failure(frame.verdict);
        // reported only; `crosscheck` is the command that fails on disagreement
        if self.cfg.oracle.enabled && b.lattice == ZakLattice::Full {
            let gram = self.gram_of(&g, &k)?;
            let cv = cross_validate(&gram, &b, th.crosscheck_tol)?;
            summary.push(format!(
                "Gram oracle R={}: deviation {:.2e}, eigenvalues [{:.6}, {:.6}], pass {}",
                gram.radius, cv.max_deviation, cv.gram_interval.0, cv.gram_interval.1, cv.pass
            ));
            result["oracle"] = serde_json::to_value(&cv)?;
        }
        Ok(Done { result, summary, failure })
    }

    fn dualize(&mut self) -> Result<Done> {
        let tau = self.cfg.thresholds.tau;
        let (_, k) = self.planar("dualize")?;
        let z = self.generator_zak(&k)?;
        let b = bracket(&z, &z)?;
        match dualize(&z, &b, tau) {
            Ok((d, report)) => {
                let cross = bracket(&d, &z)?;
                let dev = support_deviation(&cross, &b, tau);
                self.write_zak(&d, "dual_zak")?;
                self.write_kernel(&zak_inverse(&d), "dual_kernel")?;
                let line = format!("dual exists; max |[dual, phi] - 1| on the support {dev:.2e}, dual norm {:.8}", d.norm());
                Ok(Done::ok(json!({"exists": true, "gate": report, "biorthogonality_deviation": dev, "dual_norm": d.norm()}), vec![line]))
            }
            Err(Error::NoDualExists(msg)) => {
                let gate = dual_gate(&b, tau)?;
                let trace: Vec<String> = gate.integrals.iter().map(|(t, v)| format!("{t:.1e}: {v:.4e}")).collect();
                Ok(Done {
                    result: json!({"exists": false, "error": "NoDualExists", "gate": gate}),
                    summary: vec![format!("no dual: integral of 1/B diverges [{}]", trace.join(", "))],
                    failure: Some(format!("NoDualExists: {msg}")),
                })
            }
            Err(e) => Err(e.into()),
        }
    }

    fn orthonormalize(&mut self) -> Result<Done> {
        let tau = self.cfg.thresholds.tau;
        let (_, k) = self.planar("orthonormalize")?;
        let z = self.generator_zak(&k)?;
        let b = bracket(&z, &z)?;
        match orthonormalize(&z, &b, tau) {
            Ok(o) => {
                let bo = bracket(&o, &o)?;
                let dev = bo.values.iter().map(|v| (v - 1.0).norm()).fold(0.0, f64::max);
                self.write_zak(&o, "orthonormal_zak")?;
                self.write_kernel(&zak_inverse(&o), "orthonormal_kernel")?;
                let line = format!("orthonormalized; max |B - 1| {dev:.2e}");
                Ok(Done::ok(json!({"bracket_deviation": dev, "norm": o.norm()}), vec![line]))
            }
            Err(Error::NotRiesz { min }) => {
                let riesz = riesz_bounds(&b, tau)?;
                Ok(Done {
                    result: json!({"error": "NotRiesz", "riesz": riesz}),
                    summary: vec![format!("not a Riesz sequence: bracket minimum {min:.3e}")],
                    failure: Some(format!("NotRiesz: bracket minimum {min:.3e}")),
                })
            }
            Err(e) => Err(e.into()),
        }
    }

    fn member(&mut self) -> Result<Done> {
        let th = self.cfg.thresholds.clone();
        let Some(spec) = self.cfg.member.clone() else {
            bail!("`member` needs a candidate under the `member` config key");
        };
        let (g, k) = self.planar("member")?;
        let z = self.generator_zak(&k)?;
        let b = bracket(&z, &z)?;
        let f: Generator64 = materialize(&spec).context("materialising the member candidate")?;
        // the candidate shares the generator's grid
        let w = self.window(&g);
        let kf = self.kernel_of(&f, &w, "candidate")?;
        let zf = self.zak_of(&kf, "candidate")?;
        let m = membership_multiplier(&zf, &z, &b, th.member_tol)?;
        self.write_bracket(&m.multiplier, "multiplier")?;
        let line = format!(
            "member: {}; residual {:.3e}, ||r||_B {:.8}, ||f|| {:.8}",
            m.member, m.residual, m.weighted_norm, m.f_norm
        );
        let failure = (!m.member).then(|| format!("not a member: relative residual {:.3e}", m.residual));
        Ok(Done {
            result: json!({"member": m.member, "residual": m.residual, "weighted_norm": m.weighted_norm, "f_norm": m.f_norm}),
            summary: vec![line],
            failure,
        })
    }

    fn gram(&mut self) -> Result<Done> {
        let (g, k) = self.planar("gram")?;
        let gram = self.gram_of(&g, &k)?;
        let (lo, hi) = gram_bounds(&gram)?;
        let trace = finite_section_trace(&gram)?;
        self.write_gram(&gram)?;
        let mut summary = vec![format!("Gram matrix {}x{}: eigenvalues [{lo:.6}, {hi:.6}]", gram.dim(), gram.dim())];
        summary.extend(trace.iter().map(|s| format!("  R={}: [{:.6}, {:.6}]", s.radius, s.lower, s.upper)));
        Ok(Done::ok(
            json!({
                "dim": gram.dim(),
                "radius": gram.radius,
                "provenance": gram.provenance,
                "bounds": [lo, hi],
                "sections": trace,
                "max_offdiag": gram.max_offdiag(),
            }),
            summary,
        ))
    }

    fn crosscheck(&mut self) -> Result<Done> {
        let tol = self.cfg.thresholds.crosscheck_tol;
        let (g, k) = self.planar("crosscheck")?;
        let b = self.self_bracket(&k)?;
        if b.lattice != ZakLattice::Full {
            bail!("crosscheck runs on the full lattice");
        }
        let gram = self.gram_of(&g, &k)?;
        let cv = cross_validate(&gram, &b, tol)?;
        // two-path check of the left-translate law on seeded random lattice points
        let r = self.cfg.oracle.radius.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut points = Vec::new();
        let mut worst = 0.0f64;
        // a fixture exists only as a Zak field, so its translates are taken there
        let fixture_zak = match self.cfg.fixture {
            Some(_) => Some(self.generator_zak(&k)?),
            None => None,
        };
        for _ in 0..8 {
            let p = LatticePoint::planar(rng.gen_range(-r..=r), rng.gen_range(-r..=r));
            let direct = match &fixture_zak {
                Some(z) => bracket(&zak_translate(z, &p)?, z)?,
                None => self.cross_bracket(&kernel_twisted_translate(&k, &p)?, &k)?,
            };
            let law = bracket_translate_left(&b, &p)?;
            let d = law.values.iter().zip(&direct.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            worst = worst.max(d);
            points.push(json!({"k": p.k[0], "l": p.l[0], "deviation": d}));
        }
        let law_pass = worst <= tol;
        let pass = cv.pass && law_pass;
        let summary = vec![
            format!("Gram row vs bracket coefficients: {:.2e} (tol {tol:.0e}) at ({}, {})", cv.max_deviation, cv.worst_point.k[0], cv.worst_point.l[0]),
            format!("eigenvalues [{:.6}, {:.6}] vs bracket [{:.6}, {:.6}]", cv.gram_interval.0, cv.gram_interval.1, cv.bracket_interval.0, cv.bracket_interval.1),
            format!("translate law, 8 seeded points: {worst:.2e}"),
        ];
        let failure = (!pass).then(|| "cross-validation failed".to_string());
        let mut result = json!({"pass": pass, "gram_vs_bracket": cv, "translate_law": {"max_deviation": worst, "points": points}});
        if self.cfg.fixture.is_some() {
            result["note"] = json!(
                "the zeroed-band fixture has no finite kernel; the Gram side uses its inverse over n_xi_prime modes, \
                 so coefficient deviations of order 1/n_xi_prime are expected"
            );
        }
        Ok(Done { result, summary, failure })
    }

    fn cross_bracket(&mut self, a: &Kernel64, b: &Kernel64) -> Result<Bracket64> {
        let gr = self.cfg.grids.clone();
        if self.use_fibres(b) {
            return Ok(bracket_fibers(a, b, gr.truncation, gr.n_xi_prime(), gr.lattice)?);
        }
        let opts = self.zak_options();
        Ok(bracket(&zak_forward(a, &opts)?, &zak_forward(b, &opts)?)?)
    }
}

fn verdict_failure(v: Verdict) -> Option<String> {
    match v {
        Verdict::NotFrame | Verdict::Inconclusive => Some(format!("verdict {v:?}")),
        _ => None,
    }
}

/// Largest `|c - 1|` over the nodes where `b` is above the support threshold.
fn support_deviation(c: &Bracket64, b: &Bracket64, tau: f64) -> f64 {
    let max = b.values.iter().map(|z| z.re).fold(0.0, f64::max);
    c.values
        .iter()
        .zip(&b.values)
        .filter(|(_, w)| w.re > tau * max)
        .map(|(v, _)| (v - 1.0).norm())
        .fold(0.0, f64::max)
}

fn nearest_node(a: &Axis, x: f64) -> usize {
    (0..a.len)
        .min_by(|&i, &j| (a.node_f64(i) - x).abs().total_cmp(&(a.node_f64(j) - x).abs()))
        .unwrap_or(0)
}

pub fn output_dir(cli_out: Option<&Path>, cfg: &AnalysisConfig, cmd: Command) -> PathBuf {
    match cli_out {
        Some(p) => p.to_path_buf(),
        None => cfg.outputs.directory.join(cmd.name()),
    }
}

//! Gnuplot column files and scripts derived from a finished run. The data
//! files are checked against the manifest first; the plot files are then
//! added to it.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::microlocal::scan::RegularityReport;

use super::config::ExperimentKind;
use super::manifest::{read_array, read_table, sha256_hex, FileEntry, RunManifest, Table};

struct PlotWriter<'a> {
    dir: &'a Path,
    written: Vec<(String, Vec<u8>)>,
}

impl PlotWriter<'_> {
    fn put(&mut self, name: &str, text: String) {
        self.written.push((format!("plots/{name}"), text.into_bytes()));
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

/// The table written under `stem` in either format.
fn table_file(m: &RunManifest, stem: &str) -> Result<String> {
    [format!("{stem}.csv"), format!("{stem}.json")]
        .into_iter()
        .find(|p| m.files.iter().any(|f| &f.path == p))
        .ok_or_else(|| Error::Integrity(format!("no table `{stem}` in the manifest")))
}

fn column(t: &Table, name: &str) -> Result<Vec<f64>> {
    let i = t.column(name)?;
    t.rows
        .iter()
        .map(|r| r[i].as_f64().ok_or_else(|| Error::Parse(format!("column `{name}` is not numeric"))))
        .collect()
}

/// Writes the plot files for the run in `dir` and returns their paths.
pub fn emit_plots(dir: &Path) -> Result<Vec<String>> {
    let mut manifest = RunManifest::load(dir)?;
    manifest.files.retain(|f| !f.path.starts_with("plots/"));
    manifest.verify(dir)?;
    let mut w = PlotWriter { dir, written: Vec::new() };
    match manifest.kind {
        ExperimentKind::Fundamental | ExperimentKind::Solve => snapshots(&manifest, &mut w)?,
        ExperimentKind::Regularity => regularity(&mut w)?,
        ExperimentKind::Flow => flow(&manifest, &mut w)?,
        ExperimentKind::Geodesics => geodesics(&manifest, &mut w)?,
        ExperimentKind::Commutators => commutators(&manifest, &mut w)?,
        ExperimentKind::Relation | ExperimentKind::NormalForm | ExperimentKind::Validate => {}
    }
    let plots = dir.join("plots");
    if plots.exists() {
        std::fs::remove_dir_all(&plots)?;
    }
    let mut paths = Vec::new();
    for (rel, bytes) in w.written {
        let path = dir.join(&rel);
        std::fs::create_dir_all(path.parent().expect("plots/ parent"))?;
        std::fs::write(&path, &bytes)?;
        manifest.files.push(FileEntry { path: rel.clone(), sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 });
        paths.push(rel);
    }
    manifest.save(dir)?;
    Ok(paths)
}

fn snapshots(m: &RunManifest, w: &mut PlotWriter) -> Result<()> {
    let mut k = 0;
    while m.files.iter().any(|f| f.path == format!("snapshot_{k}.f64")) {
        let (header, data) = read_array(w.dir, &format!("snapshot_{k}"))?;
        let (xs, ths) = (&header.axes[0].values, &header.axes[1].values);
        let mut s = String::from("# x theta u\n");
        for (i, x) in xs.iter().enumerate() {
            for (j, th) in ths.iter().enumerate() {
                let _ = writeln!(s, "{} {} {}", num(*x), num(*th), num(data[i * ths.len() + j]));
            }
            s.push('\n');
        }
        w.put(&format!("snapshot_{k}.dat"), s);
        let t = header.attributes.get("t").copied().unwrap_or(f64::NAN);
        let mut script = format!(
            "set title 'u at t = {t}'\nset xlabel 'theta'\nset ylabel 'x'\nset view map\nset pm3d map\nsplot 'snapshot_{k}.dat' using 2:1:3 with pm3d notitle"
        );
        if m.kind == ExperimentKind::Fundamental {
            let loci = read_table(w.dir, &table_file(m, &format!("loci_{k}"))?)?;
            let (front, th, x) = (loci.column("front")?, column(&loci, "theta")?, column(&loci, "x")?);
            let mut s = String::new();
            for (block, name) in ["direct", "diffracted"].iter().enumerate() {
                if block > 0 {
                    s.push_str("\n\n");
                }
                let _ = writeln!(s, "# {name}: theta x");
                for (r, row) in loci.rows.iter().enumerate() {
                    if matches!(&row[front], super::manifest::Cell::Text(f) if f == name) {
                        let _ = writeln!(s, "{} {}", num(th[r]), num(x[r]));
                    }
                }
            }
            w.put(&format!("loci_{k}.dat"), s);
            script.push_str(&format!(
                ", \\\n  'loci_{k}.dat' index 0 using 1:2:(0) with points pt 7 ps 0.3 title 'direct', \\\n  'loci_{k}.dat' index 1 using 1:2:(0) with points pt 7 ps 0.3 title 'diffracted'"
            ));
        }
        script.push('\n');
        w.put(&format!("snapshot_{k}.gp"), script);
        k += 1;
    }
    Ok(())
}

fn regularity(w: &mut PlotWriter) -> Result<()> {
    let report: RegularityReport = serde_json::from_str(&std::fs::read_to_string(w.dir.join("report.json"))?)?;
    let mut s = String::from("# row t x theta s ci_lo ci_hi\n");
    let mut shells = String::from("# row shell lo hi log2_energy\n");
    for (i, e) in report.entries.iter().enumerate() {
        let est = &e.estimate;
        let _ = writeln!(
            s,
            "{i} {} {} {} {} {} {}",
            num(est.location.t),
            num(est.location.x),
            num(est.location.theta),
            num(est.s),
            num(est.ci.0),
            num(est.ci.1)
        );
        for (k, sh) in est.shells.iter().enumerate() {
            let _ = writeln!(shells, "{i} {k} {} {} {}", num(sh.lo), num(sh.hi), num(sh.energy.log2()));
        }
    }
    w.put("regularity.dat", s);
    w.put("shells.dat", shells);
    w.put(
        "regularity.gp",
        format!(
            "set xlabel 'window centre t'\nset ylabel 'local Sobolev order s'\nset yrange [-2:{cap}]\nset arrow from graph 0, first {thr} to graph 1, first {thr} nohead dt 2\nplot 'regularity.dat' using 2:5:6:7 with yerrorbars title 's (95% CI)'\n",
            cap = 5,
            thr = report.threshold
        ),
    );
    w.put(
        "shells.gp",
        "set xlabel 'shell centre frequency'\nset ylabel 'log2 shell energy'\nset logscale x 2\nplot 'shells.dat' using (sqrt($3*$4)):5:1 with linespoints palette notitle\n".into(),
    );
    Ok(())
}

fn flow(m: &RunManifest, w: &mut PlotWriter) -> Result<()> {
    let t = read_table(w.dir, &table_file(m, "flow")?)?;
    let (ray, s, err) = (column(&t, "ray")?, column(&t, "s")?, column(&t, "rel_error")?);
    let mut out = String::from("# s rel_error, one block per ray\n");
    for i in 0..ray.len() {
        if i > 0 && ray[i] != ray[i - 1] {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "{} {}", num(s[i]), num(err[i].max(1e-17)));
    }
    w.put("flow.dat", out);
    w.put(
        "flow.gp",
        "set xlabel 's'\nset ylabel 'relative error vs closed form'\nset logscale y\nplot for [i=0:*] 'flow.dat' index i using 1:2 with lines notitle\n".into(),
    );
    Ok(())
}

fn geodesics(m: &RunManifest, w: &mut PlotWriter) -> Result<()> {
    let t = read_table(w.dir, &table_file(m, "geodesics")?)?;
    let (l, ux, uy) = (column(&t, "circumference")?, column(&t, "unrolled_x")?, column(&t, "unrolled_y")?);
    let mut out = String::from("# unrolled_x unrolled_y, one block per circumference\n");
    for i in 0..l.len() {
        if i > 0 && l[i] != l[i - 1] {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "{} {}", num(ux[i]), num(uy[i]));
    }
    w.put("geodesics.dat", out);
    w.put(
        "geodesics.gp",
        "set size ratio -1\nset xlabel 'X'\nset ylabel 'Y'\nplot for [i=0:*] 'geodesics.dat' index i using 1:2 with linespoints notitle\n".into(),
    );
    Ok(())
}

fn commutators(m: &RunManifest, w: &mut PlotWriter) -> Result<()> {
    let t = read_table(w.dir, &table_file(m, "commutators")?)?;
    let cols = [column(&t, "n")?, column(&t, "box_lap_y")?, column(&t, "box_r")?, column(&t, "perturbed_box_lap_y")?];
    let mut out = String::from("# n box_lap_y box_r perturbed_box_lap_y\n");
    for (((n, a), b), c) in cols[0].iter().zip(&cols[1]).zip(&cols[2]).zip(&cols[3]) {
        let _ = writeln!(out, "{} {} {} {}", num(*n), num(*a), num(*b), num(*c));
    }
    w.put("commutators.dat", out);
    w.put(
        "commutators.gp",
        "set logscale xy\nset xlabel 'grid size'\nset ylabel 'relative residual'\nplot 'commutators.dat' using 1:2 with linespoints title '[box, lap_Y]', '' using 1:3 with linespoints title '[box, R] + 2i box', '' using 1:4 with linespoints title 'perturbed [box, lap_Y]'\n".into(),
    );
    Ok(())
}

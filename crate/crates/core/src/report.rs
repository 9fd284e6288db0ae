//! Human-readable and CSV summaries of a project. Reports only read the
//! project files; they never run the tuned algorithm.

use std::fmt::Write as _;

use crate::engine::{Project, TuningState};
use crate::error::{Result, SpotError};
use crate::fileio::{fmt_real, fmt_sig, read_bst};
use crate::model::{fit_forest, fit_tree, merge_dataset, raw_dataset, ForestParams, RegressionTree, TreeNode};
use crate::rng::{purpose, step_stream};

const REPORT_DIGITS: usize = 7;

fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

/// Indented text rendering: each split prints its two branch conditions,
/// each leaf its mean and number of observations.
pub fn render_tree(tree: &RegressionTree, names: &[String]) -> String {
    fn walk(tree: &RegressionTree, names: &[String], i: usize, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match *tree.node(i) {
            TreeNode::Leaf { value, n } => {
                let _ = writeln!(out, "{pad}-> {} ({n} obs)", fmt_sig(value, REPORT_DIGITS));
            }
            TreeNode::Split { feature, threshold, left, right, .. } => {
                let name = &names[feature];
                let thr = fmt_sig(threshold, REPORT_DIGITS);
                let _ = writeln!(out, "{pad}{name} < {thr}");
                walk(tree, names, left, depth + 1, out);
                let _ = writeln!(out, "{pad}{name} >= {thr}");
                walk(tree, names, right, depth + 1, out);
            }
        }
    }
    let mut out = String::new();
    walk(tree, names, 0, 0, &mut out);
    out
}

fn state_with_results(project: &Project) -> Result<TuningState> {
    let state = project.state()?;
    if state.population.is_empty() {
        return Err(SpotError::invalid("no results to report"));
    }
    Ok(state)
}

/// Best configuration and a depth-limited regression tree over the merged
/// results.
pub fn report_default(project: &Project) -> Result<String> {
    let state = state_with_results(project)?;
    let best = state.best().expect("population is not empty");
    let names = project.roi.names();
    let mut head = vec!["Y".to_string()];
    head.extend(names.iter().cloned());
    head.extend(["COUNT".to_string(), "CONFIG".to_string()]);
    let mut row = vec![fmt_sig(best.utility, REPORT_DIGITS)];
    row.extend(best.values.iter().map(|v| fmt_sig(*v, REPORT_DIGITS)));
    row.extend([best.count.to_string(), best.config.to_string()]);

    let mut out = format!("Best solution found with {} evaluations:\n", state.evals_used);
    out.push_str(&table(&[head, row]));

    let merged = merge_dataset(&project.results()?, project.conf.merge)?;
    let tree = fit_tree(&merged, project.conf.min_node, project.conf.report_tree_depth)?;
    let _ = writeln!(
        out,
        "\nRegression tree on {} configurations (max depth {}):",
        merged.len(),
        project.conf.report_tree_depth
    );
    out.push_str(&render_tree(&tree, &names));
    Ok(out)
}

/// Effect curves: a forest fitted to all results is evaluated along each
/// parameter's normalized range `[-1, 1]` with the other parameters held at
/// the incumbent. CSV columns `param,normalized_x,predicted_y`.
pub fn report_sens(project: &Project, grid: usize) -> Result<String> {
    if grid < 2 {
        return Err(SpotError::invalid("sensitivity grid needs at least 2 points"));
    }
    let state = state_with_results(project)?;
    let best = state.best().expect("population is not empty").values.clone();
    let c = &project.conf;
    let params = ForestParams {
        n_trees: c.forest_trees,
        mtry: c.forest_mtry,
        min_node: c.min_node,
        max_depth: c.max_depth,
        bootstrap: true,
    };
    let mut rng = step_stream(c.seed, 0, purpose::REPORT);
    let forest = fit_forest(&raw_dataset(&project.results()?)?, &params, &mut rng)?;
    let t = project.roi.coded()?;
    let center = t.center().to_vec();
    let mut out = String::from("param,normalized_x,predicted_y\n");
    for (i, name) in project.roi.names().iter().enumerate() {
        for j in 0..grid {
            let u = -1.0 + 2.0 * j as f64 / (grid - 1) as f64;
            let mut x = best.clone();
            x[i] = center[i] + u * t.half_range()[i];
            let x = project.roi.conform(&x)?;
            let _ = writeln!(out, "{name},{},{}", fmt_real(u), fmt_real(forest.predict(&x)));
        }
    }
    Ok(out)
}

/// Incumbent after every step, straight from the best file. CSV columns
/// `step,best_y,<params>`.
pub fn export_progress(project: &Project) -> Result<String> {
    let path = project.paths.bst();
    if !path.exists() {
        return Err(SpotError::invalid(format!("{} does not exist", path.display())));
    }
    let (names, rows) = read_bst(&path)?;
    if rows.is_empty() {
        return Err(SpotError::invalid(format!("{} has no rows", path.display())));
    }
    let mut out = format!("step,best_y,{}\n", names.join(","));
    for r in rows {
        let vals: Vec<String> = r.values.iter().map(|v| fmt_real(*v)).collect();
        let _ = writeln!(out, "{},{},{}", r.step, fmt_real(r.y), vals.join(","));
    }
    Ok(out)
}

/// The `rep` task: returns the text report and writes
/// `<basename>.sens.csv` and, when a best file exists, `<basename>.prog.csv`.
pub fn rep_task(project: &Project) -> Result<String> {
    let text = report_default(project)?;
    let sens = project.paths.with_ext("sens.csv");
    std::fs::write(&sens, report_sens(project, project.conf.report_sens_grid)?)
        .map_err(|e| SpotError::io(&sens, e))?;
    if project.paths.bst().exists() {
        let prog = project.paths.with_ext("prog.csv");
        std::fs::write(&prog, export_progress(project)?).map_err(|e| SpotError::io(&prog, e))?;
    } else {
        log::warn!("no best file; skipping the progress export");
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{AlgorithmPlugin, SpotConfig};
    use crate::fileio::{Apd, ProjectPaths};
    use crate::param::parse_roi;

    fn project(dir: &std::path::Path) -> Project {
        let conf = SpotConfig {
            nevals: 30,
            init_size: 6,
            init_repeats: 2,
            algorithm: AlgorithmPlugin::Branin,
            forest_trees: 40,
            min_node: 2,
            ..SpotConfig::default()
        };
        let roi = parse_roi("X1 -5 10 FLOAT\nX2 0 15 FLOAT").unwrap();
        Project::new(conf, ProjectPaths::new(dir, "r"), roi, Apd::default()).unwrap()
    }

    #[test]
    fn default_report_matches_best_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = project(dir.path());
        assert!(report_default(&p).is_err());
        assert!(export_progress(&p).is_err());
        let s = p.auto_task().unwrap();
        let text = report_default(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), format!("Best solution found with {} evaluations:", s.evals_used));
        let head: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
        assert_eq!(head, ["Y", "X1", "X2", "COUNT", "CONFIG"]);
        let row: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
        let (_, bst) = read_bst(&p.paths.bst()).unwrap();
        let last = bst.last().unwrap();
        assert_eq!(row[0], fmt_sig(last.y, 7));
        assert_eq!(row[3], last.count.to_string());
        assert_eq!(row[4], last.config.to_string());
        assert!(text.contains("obs)"));
    }

    #[test]
    fn csv_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let p = project(dir.path());
        let s = p.auto_task().unwrap();
        let sens = report_sens(&p, 21).unwrap();
        assert_eq!(sens.lines().count(), 1 + 42);
        assert_eq!(report_sens(&p, 21).unwrap(), sens);
        let prog = export_progress(&p).unwrap();
        assert_eq!(prog.lines().count() as u32, 1 + s.step + 1);
        assert!(prog.starts_with("step,best_y,X1,X2\n"));
        rep_task(&p).unwrap();
        assert!(p.paths.with_ext("sens.csv").exists());
        assert!(p.paths.with_ext("prog.csv").exists());
    }

    #[test]
    fn single_leaf_tree() {
        let t = fit_tree(&crate::model::Dataset::new(vec![vec![1.0]], vec![2.0]).unwrap(), 1, 3).unwrap();
        assert_eq!(render_tree(&t, &["A".to_string()]), "-> 2 (1 obs)\n");
    }
}

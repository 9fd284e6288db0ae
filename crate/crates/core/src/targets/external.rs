use std::io::Read;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::error::{Result, SpotError};
use crate::fileio::{fmt_real, Apd};

const POLL: Duration = Duration::from_millis(5);

/// Replace every `{name}` in `template`. Names resolve to a tuned parameter,
/// then `SEED` (any case), then an APD key. `{{` and `}}` are literal braces,
/// and `${...}` is left to the shell.
pub fn substitute(template: &str, params: &[(String, f64)], apd: &Apd, seed: u64) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut chars = template.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '{' if chars.peek().map(|p| p.1) == Some('{') => {
                chars.next();
                out.push('{');
            }
            '}' if chars.peek().map(|p| p.1) == Some('}') => {
                chars.next();
                out.push('}');
            }
            '{' if !template[..i].ends_with('$') => {
                let rest = &template[i + 1..];
                let end = rest
                    .find('}')
                    .ok_or_else(|| SpotError::invalid(format!("unclosed placeholder in '{template}'")))?;
                let name = &rest[..end];
                out.push_str(&lookup(name, params, apd, seed)?);
                for _ in 0..name.chars().count() + 1 {
                    chars.next();
                }
            }
            _ => out.push(c),
        }
    }
    Ok(out)
}

fn lookup(name: &str, params: &[(String, f64)], apd: &Apd, seed: u64) -> Result<String> {
    if let Some((_, v)) = params.iter().find(|(n, _)| n == name) {
        return Ok(fmt_real(*v));
    }
    if name.eq_ignore_ascii_case("seed") {
        return Ok(seed.to_string());
    }
    apd.get(name)
        .map(|v| v.plain())
        .ok_or_else(|| SpotError::invalid(format!("placeholder {{{name}}} names no parameter or APD key")))
}

/// Run the substituted command through `sh -c` and read `Y` from the last
/// whitespace-separated token of the last non-empty line of its output.
pub fn external_run(
    template: &str,
    params: &[(String, f64)],
    apd: &Apd,
    seed: u64,
    timeout: Duration,
) -> Result<f64> {
    let cmd = substitute(template, params, apd, seed)?;
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| SpotError::invalid(format!("cannot start '{cmd}': {e}")))?;
    // Drain the pipes on their own threads so a chatty child cannot block.
    let mut stdout = child.stdout.take().expect("piped stdout");
    let mut stderr = child.stderr.take().expect("piped stderr");
    let out_reader = thread::spawn(move || {
        let mut s = String::new();
        stdout.read_to_string(&mut s).map(|_| s)
    });
    let err_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    let start = Instant::now();
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(SpotError::invalid(format!(
                    "'{cmd}' timed out after {} s",
                    timeout.as_secs_f64()
                )));
            }
            Ok(None) => thread::sleep(POLL),
            Err(e) => return Err(SpotError::invalid(format!("waiting for '{cmd}': {e}"))),
        }
    };
    let stdout = out_reader
        .join()
        .expect("stdout reader panicked")
        .map_err(|e| SpotError::invalid(format!("reading output of '{cmd}': {e}")))?;
    let stderr = err_reader.join().expect("stderr reader panicked");
    if !status.success() {
        return Err(SpotError::invalid(format!(
            "'{cmd}' failed with {status}: {}",
            stderr.trim()
        )));
    }
    parse_output(&stdout).map_err(|msg| SpotError::invalid(format!("'{cmd}': {msg}")))
}

fn parse_output(stdout: &str) -> std::result::Result<f64, String> {
    let line = stdout
        .lines()
        .rev()
        .find(|l| !l.trim().is_empty())
        .ok_or("no output")?;
    let tok = line.split_whitespace().last().unwrap_or_default();
    let y: f64 = tok.parse().map_err(|_| format!("cannot parse '{tok}' as a number"))?;
    if !y.is_finite() {
        return Err(format!("non-finite result '{tok}'"));
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fileio::parse_apd;

    const T: Duration = Duration::from_secs(10);

    #[test]
    fn output_parsing() {
        assert_eq!(parse_output("result:\n0.42\n"), Ok(0.42));
        assert_eq!(parse_output("a b 3e2\n\n  \n"), Ok(300.0));
        assert!(parse_output("").is_err());
        assert!(parse_output("done\n").is_err());
        assert!(parse_output("nan\n").is_err());
    }

    #[test]
    fn placeholders() {
        let apd = parse_apd("STEPS = 100\nxp0 = (1, 2)\nname = \"run\"\n").unwrap();
        let params = vec![("SIGMA0".to_string(), 0.5)];
        let s = substitute("run.sh {SEED} {STEPS} {SIGMA0} {xp0} {name}", &params, &apd, 7).unwrap();
        assert_eq!(s, "run.sh 7 100 0.5 1 2 run");
        assert_eq!(substitute("{{x}} ${HOME}", &[], &apd, 1).unwrap(), "{x} ${HOME}");
        assert!(substitute("{nope}", &params, &apd, 1).is_err());
        assert!(substitute("{SEED", &params, &apd, 1).is_err());
    }

    #[test]
    fn runs_commands() {
        let apd = Apd::default();
        assert_eq!(external_run("echo 1.5", &[], &apd, 0, T).unwrap(), 1.5);
        let p = vec![("X".to_string(), 2.0)];
        assert_eq!(external_run("echo result:; echo {X} {SEED}", &p, &apd, 9, T).unwrap(), 9.0);
        assert!(external_run("exit 3", &[], &apd, 0, T).is_err());
        assert!(external_run("echo oops", &[], &apd, 0, T).is_err());
    }

    #[test]
    fn kills_on_timeout() {
        let start = Instant::now();
        let r = external_run("sleep 5; echo 1", &[], &Apd::default(), 0, Duration::from_millis(200));
        assert!(r.is_err());
        assert!(start.elapsed() < Duration::from_secs(4));
    }
}

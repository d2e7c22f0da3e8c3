//! Implementations under test: the hand-written reference classifier, its
//! fault-seeded mutants, and adapters (in-process and subprocess line
//! protocol) that the suite runner drives.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc;
use std::time::Duration;

use num_bigint::BigInt;
use num_traits::Signed;

use crate::eval::{InputToken, MSymbol};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IutFailure {
    Error(String),
    Timeout,
}

/// A black-box implementation under test. One verdict string per case.
pub trait IutAdapter {
    fn describe(&self) -> String;
    fn run_case(&mut self, inputs: &[InputToken], m: &BigInt) -> Result<String, IutFailure>;
}

fn decode_sides(inputs: &[InputToken], m: &BigInt) -> Option<Vec<BigInt>> {
    let mut sides = Vec::with_capacity(inputs.len());
    for tok in inputs {
        match tok {
            InputToken::Int(i) => sides.push(i.clone()),
            InputToken::Symbol(MSymbol::M) => sides.push(m.clone()),
            InputToken::Symbol(MSymbol::MPlus1) => sides.push(m + 1),
            InputToken::Symbol(MSymbol::MMinus1) => sides.push(m - 1),
            InputToken::Char(_) => return None,
        }
    }
    Some(sides)
}

/// Hand-written correct triangle classifier, independent of the evaluator.
/// Rejects wrong-length, non-natural, and perimeter-violating inputs as
/// INVALID; otherwise classifies by the number of distinct side lengths.
pub fn reference_iut(inputs: &[InputToken], m: &BigInt) -> String {
    let Some(sides) = decode_sides(inputs, m) else {
        return "INVALID".to_string();
    };
    if sides.len() != 3 {
        return "INVALID".to_string();
    }
    if sides.iter().any(|s| s.is_negative()) {
        return "INVALID".to_string();
    }
    let perimeter: BigInt = sides.iter().sum();
    if sides.iter().any(|s| s * 2 >= perimeter) {
        return "INVALID".to_string();
    }
    let mut distinct = sides.clone();
    distinct.sort();
    distinct.dedup();
    match distinct.len() {
        1 => "EQUILATERAL".to_string(),
        2 => "ISOSCELES".to_string(),
        _ => "SCALENE".to_string(),
    }
}

/// The seeded faults. Each mutant is the reference behavior with exactly
/// one defect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutantId {
    /// Perimeter check removed.
    M1,
    /// Isosceles and scalene verdicts swapped.
    M2,
    /// Length check widened to accept four sides.
    M3,
    /// Perimeter inequality flipped from strict to non-strict.
    M4,
}

impl MutantId {
    pub fn parse(text: &str) -> Option<MutantId> {
        match text.to_ascii_uppercase().as_str() {
            "M1" => Some(MutantId::M1),
            "M2" => Some(MutantId::M2),
            "M3" => Some(MutantId::M3),
            "M4" => Some(MutantId::M4),
            _ => None,
        }
    }

    pub fn all() -> [MutantId; 4] {
        [MutantId::M1, MutantId::M2, MutantId::M3, MutantId::M4]
    }

    pub fn name(self) -> &'static str {
        match self {
            MutantId::M1 => "M1",
            MutantId::M2 => "M2",
            MutantId::M3 => "M3",
            MutantId::M4 => "M4",
        }
    }
}

pub fn mutant_iut(id: MutantId, inputs: &[InputToken], m: &BigInt) -> String {
    let Some(sides) = decode_sides(inputs, m) else {
        return "INVALID".to_string();
    };
    let length_ok = match id {
        MutantId::M3 => sides.len() == 3 || sides.len() == 4,
        _ => sides.len() == 3,
    };
    if !length_ok {
        return "INVALID".to_string();
    }
    if sides.iter().any(|s| s.is_negative()) {
        return "INVALID".to_string();
    }
    if id != MutantId::M1 {
        let perimeter: BigInt = sides.iter().sum();
        let violates = |s: &BigInt| {
            if id == MutantId::M4 {
                s * 2 > perimeter.clone()
            } else {
                s * 2 >= perimeter.clone()
            }
        };
        if sides.iter().any(violates) {
            return "INVALID".to_string();
        }
    }
    let mut distinct = sides.clone();
    distinct.sort();
    distinct.dedup();
    match (id, distinct.len()) {
        (_, 1) => "EQUILATERAL".to_string(),
        (MutantId::M2, 2) => "SCALENE".to_string(),
        (MutantId::M2, _) => "ISOSCELES".to_string(),
        (_, 2) => "ISOSCELES".to_string(),
        (_, _) => "SCALENE".to_string(),
    }
}

/// In-process adapter over the reference classifier or a mutant.
pub struct BuiltinIut {
    mutant: Option<MutantId>,
}

impl BuiltinIut {
    pub fn reference() -> Self {
        BuiltinIut { mutant: None }
    }

    pub fn mutant(id: MutantId) -> Self {
        BuiltinIut { mutant: Some(id) }
    }
}

impl IutAdapter for BuiltinIut {
    fn describe(&self) -> String {
        match self.mutant {
            None => "builtin:reference".to_string(),
            Some(id) => format!("builtin:mutant:{}", id.name()),
        }
    }

    fn run_case(&mut self, inputs: &[InputToken], m: &BigInt) -> Result<String, IutFailure> {
        Ok(match self.mutant {
            None => reference_iut(inputs, m),
            Some(id) => mutant_iut(id, inputs, m),
        })
    }
}

/// Render one request line: a JSON array with integers as numbers, chars as
/// one-character strings, and M symbols as the literal strings "M", "M+1",
/// "M-1".
pub fn encode_request_line(inputs: &[InputToken]) -> String {
    let mut parts = Vec::with_capacity(inputs.len());
    for tok in inputs {
        match tok {
            InputToken::Int(i) => parts.push(i.to_string()),
            InputToken::Char(c) => match c {
                '"' => parts.push("\"\\\"\"".to_string()),
                '\\' => parts.push("\"\\\\\"".to_string()),
                c => parts.push(format!("\"{}\"", c)),
            },
            InputToken::Symbol(MSymbol::M) => parts.push("\"M\"".to_string()),
            InputToken::Symbol(MSymbol::MPlus1) => parts.push("\"M+1\"".to_string()),
            InputToken::Symbol(MSymbol::MMinus1) => parts.push("\"M-1\"".to_string()),
        }
    }
    format!("[{}]", parts.join(","))
}

struct ChildState {
    child: Child,
    stdin: ChildStdin,
    lines: mpsc::Receiver<std::io::Result<String>>,
}

impl ChildState {
    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Adapter for an external executable speaking the newline-delimited
/// protocol: one request line in, one verdict line out. A hung process is
/// killed after the per-case timeout and respawned for the next case; the
/// harness itself never goes down with the implementation under test.
pub struct SubprocessAdapter {
    command: Vec<String>,
    timeout: Duration,
    m_env: Option<String>,
    state: Option<ChildState>,
}

impl SubprocessAdapter {
    pub fn new(command: Vec<String>, timeout: Duration) -> Self {
        SubprocessAdapter { command, timeout, m_env: None, state: None }
    }

    fn spawn(&mut self, m: &BigInt) -> Result<(), IutFailure> {
        let mut cmd = Command::new(&self.command[0]);
        cmd.args(&self.command[1..])
            .env("VDM_ORACLE_M", m.to_string())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null());
        let mut child = cmd
            .spawn()
            .map_err(|e| IutFailure::Error(format!("failed to start '{}': {}", self.command[0], e)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        self.m_env = Some(m.to_string());
        self.state = Some(ChildState { child, stdin, lines: rx });
        Ok(())
    }
}

impl IutAdapter for SubprocessAdapter {
    fn describe(&self) -> String {
        format!("exec:{}", self.command.join(" "))
    }

    fn run_case(&mut self, inputs: &[InputToken], m: &BigInt) -> Result<String, IutFailure> {
        if self.state.is_none() || self.m_env.as_deref() != Some(m.to_string().as_str()) {
            if let Some(state) = self.state.take() {
                state.kill();
            }
            self.spawn(m)?;
        }
        let request = encode_request_line(inputs);
        let state = self.state.as_mut().expect("spawned above");
        if let Err(e) = writeln!(state.stdin, "{}", request).and_then(|_| state.stdin.flush()) {
            if let Some(state) = self.state.take() {
                state.kill();
            }
            return Err(IutFailure::Error(format!("request write failed: {}", e)));
        }
        match state.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line.trim().to_string()),
            Ok(Err(e)) => {
                if let Some(state) = self.state.take() {
                    state.kill();
                }
                Err(IutFailure::Error(format!("response read failed: {}", e)))
            }
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                if let Some(state) = self.state.take() {
                    state.kill();
                }
                Err(IutFailure::Error("implementation closed its output".to_string()))
            }
            Err(mpsc::RecvTimeoutError::Timeout) => {
                if let Some(state) = self.state.take() {
                    state.kill();
                }
                Err(IutFailure::Timeout)
            }
        }
    }
}

impl Drop for SubprocessAdapter {
    fn drop(&mut self) {
        if let Some(state) = self.state.take() {
            state.kill();
        }
    }
}

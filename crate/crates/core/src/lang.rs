//! The agent language: a 17-symbol tape language in the Brainfuck family.
//!
//! A program is run once per environment step (a *pass*). Observations are
//! written into the first cells of the tape, the program executes from where
//! the previous pass stopped, and the action is read from the cell right after
//! the observation cells. Memory persists across passes within an episode.
//!
//! | token       | effect                                                   |
//! |-------------|----------------------------------------------------------|
//! | `>` `<`     | move the pointer right / left (wrapping)                  |
//! | `+` `-`     | increment / decrement the current cell (mod 256)          |
//! | `[` `]`     | loop while the current cell is nonzero                    |
//! | `a`..`e`    | move the pointer to cell 0..4                             |
//! | `0`..`4`    | write the constant 0..4 into the current cell             |
//! | `!`         | emit an action now; the next pass resumes after the `!`   |
//!
//! Brackets are lenient: an unmatched `]` does nothing, and an unmatched `[`
//! over a zero cell jumps past the end of the program.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("operation budget of {budget} exhausted without producing an action")]
    BudgetExhausted { budget: usize },
    #[error("expected {expected} observation cells, got {got}")]
    ObservationArity { expected: usize, got: usize },
    #[error("invalid language config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Token {
    Right,
    Left,
    Inc,
    Dec,
    Open,
    Close,
    GotoA,
    GotoB,
    GotoC,
    GotoD,
    GotoE,
    Const0,
    Const1,
    Const2,
    Const3,
    Const4,
    Act,
}

impl Token {
    pub const ALL: [Token; 17] = [
        Token::Right,
        Token::Left,
        Token::Inc,
        Token::Dec,
        Token::Open,
        Token::Close,
        Token::GotoA,
        Token::GotoB,
        Token::GotoC,
        Token::GotoD,
        Token::GotoE,
        Token::Const0,
        Token::Const1,
        Token::Const2,
        Token::Const3,
        Token::Const4,
        Token::Act,
    ];

    /// Size of the alphabet.
    pub const COUNT: usize = 17;

    pub fn from_char(ch: char) -> Option<Token> {
        Some(match ch {
            '>' => Token::Right,
            '<' => Token::Left,
            '+' => Token::Inc,
            '-' => Token::Dec,
            '[' => Token::Open,
            ']' => Token::Close,
            'a' => Token::GotoA,
            'b' => Token::GotoB,
            'c' => Token::GotoC,
            'd' => Token::GotoD,
            'e' => Token::GotoE,
            '0' => Token::Const0,
            '1' => Token::Const1,
            '2' => Token::Const2,
            '3' => Token::Const3,
            '4' => Token::Const4,
            '!' => Token::Act,
            _ => return None,
        })
    }

    pub fn as_char(self) -> char {
        match self {
            Token::Right => '>',
            Token::Left => '<',
            Token::Inc => '+',
            Token::Dec => '-',
            Token::Open => '[',
            Token::Close => ']',
            Token::GotoA => 'a',
            Token::GotoB => 'b',
            Token::GotoC => 'c',
            Token::GotoD => 'd',
            Token::GotoE => 'e',
            Token::Const0 => '0',
            Token::Const1 => '1',
            Token::Const2 => '2',
            Token::Const3 => '3',
            Token::Const4 => '4',
            Token::Act => '!',
        }
    }

    /// Position of this token in [`Token::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Token> {
        Token::ALL.get(index).copied()
    }

    fn teleport_target(self) -> Option<usize> {
        match self {
            Token::GotoA => Some(0),
            Token::GotoB => Some(1),
            Token::GotoC => Some(2),
            Token::GotoD => Some(3),
            Token::GotoE => Some(4),
            _ => None,
        }
    }

    fn constant(self) -> Option<u8> {
        match self {
            Token::Const0 => Some(0),
            Token::Const1 => Some(1),
            Token::Const2 => Some(2),
            Token::Const3 => Some(3),
            Token::Const4 => Some(4),
            _ => None,
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// An immutable token sequence. Serializes as its source text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Program {
    tokens: Vec<Token>,
}

impl Program {
    pub fn new(tokens: Vec<Token>) -> Self {
        Program { tokens }
    }

    pub fn empty() -> Self {
        Program::default()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.tokens
    }
}

impl From<Vec<Token>> for Program {
    fn from(tokens: Vec<Token>) -> Self {
        Program::new(tokens)
    }
}

impl FromStr for Program {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(tokenize(s))
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tokens {
            write!(f, "{}", t.as_char())?;
        }
        Ok(())
    }
}

impl Serialize for Program {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Program {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Ok(tokenize(&text))
    }
}

/// One token per character; characters outside the alphabet are dropped.
pub fn tokenize(text: &str) -> Program {
    Program::new(text.chars().filter_map(Token::from_char).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LanguageConfig {
    pub tape_len: usize,
    pub pass_op_budget: usize,
    /// Set from the environment; the action cell sits right after these.
    #[serde(skip)]
    pub obs_cell_count: usize,
}

impl Default for LanguageConfig {
    fn default() -> Self {
        LanguageConfig {
            tape_len: 100,
            pass_op_budget: 5000,
            obs_cell_count: 0,
        }
    }
}

impl LanguageConfig {
    pub fn with_obs_cells(mut self, obs_cell_count: usize) -> Self {
        self.obs_cell_count = obs_cell_count;
        self
    }

    pub fn action_cell(&self) -> usize {
        self.obs_cell_count
    }

    pub fn validate(&self) -> Result<(), LangError> {
        if self.tape_len == 0 || self.pass_op_budget == 0 {
            return Err(LangError::InvalidConfig(
                "tape_len and pass_op_budget must be positive".into(),
            ));
        }
        // Teleports reach cells 0..4, so the tape must hold them too.
        if self.obs_cell_count + 1 > self.tape_len || self.tape_len < 5 {
            return Err(LangError::InvalidConfig(format!(
                "tape_len {} too small for {} observation cells",
                self.tape_len, self.obs_cell_count
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentMemory {
    pub tape: Vec<u8>,
    pub pointer: usize,
    pub resume_index: usize,
    pub pass_op_count: usize,
}

impl AgentMemory {
    /// The initial memory state: zero tape, pointer and resume position at 0.
    pub fn new(tape_len: usize) -> Self {
        AgentMemory {
            tape: vec![0; tape_len],
            pointer: 0,
            resume_index: 0,
            pass_op_count: 0,
        }
    }
}

/// Sentinel jump target for brackets without a partner.
const UNMATCHED: usize = usize::MAX;

/// A program with its bracket table resolved, ready to run repeatedly.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    tokens: Vec<Token>,
    jumps: Vec<usize>,
}

impl CompiledProgram {
    pub fn new(program: &Program) -> Self {
        let tokens = program.tokens().to_vec();
        let jumps = match_brackets(&tokens);
        CompiledProgram { tokens, jumps }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// One interpreter pass: write `obs` into the observation cells, execute
    /// until an action is emitted and return the action cell value.
    pub fn step(
        &self,
        memory: &mut AgentMemory,
        obs: &[u8],
        cfg: &LanguageConfig,
    ) -> Result<u8, LangError> {
        if obs.len() != cfg.obs_cell_count {
            return Err(LangError::ObservationArity {
                expected: cfg.obs_cell_count,
                got: obs.len(),
            });
        }
        let tape_len = memory.tape.len();
        memory.tape[..obs.len()].copy_from_slice(obs);
        memory.pass_op_count = 0;

        let mut pc = memory.resume_index.min(self.tokens.len());
        loop {
            if pc >= self.tokens.len() {
                memory.resume_index = 0;
                break;
            }
            if memory.pass_op_count >= cfg.pass_op_budget {
                memory.resume_index = pc;
                return Err(LangError::BudgetExhausted {
                    budget: cfg.pass_op_budget,
                });
            }
            memory.pass_op_count += 1;
            let p = memory.pointer;
            match self.tokens[pc] {
                Token::Right => memory.pointer = (p + 1) % tape_len,
                Token::Left => memory.pointer = (p + tape_len - 1) % tape_len,
                Token::Inc => memory.tape[p] = memory.tape[p].wrapping_add(1),
                Token::Dec => memory.tape[p] = memory.tape[p].wrapping_sub(1),
                Token::Open => {
                    if memory.tape[p] == 0 {
                        let target = self.jumps[pc];
                        // Unmatched `[` skips the rest of the program.
                        pc = if target == UNMATCHED { self.tokens.len() } else { target };
                    }
                }
                Token::Close => {
                    let target = self.jumps[pc];
                    if target != UNMATCHED && memory.tape[p] != 0 {
                        pc = target;
                    }
                }
                Token::Act => {
                    memory.resume_index = pc + 1;
                    break;
                }
                t => {
                    if let Some(cell) = t.teleport_target() {
                        memory.pointer = cell % tape_len;
                    } else if let Some(value) = t.constant() {
                        memory.tape[p] = value;
                    }
                }
            }
            pc += 1;
        }
        Ok(memory.tape[cfg.action_cell()])
    }
}

/// Resolve bracket partners. Each matched bracket stores the index of its
/// partner; unmatched ones store [`UNMATCHED`].
fn match_brackets(tokens: &[Token]) -> Vec<usize> {
    let mut jumps = vec![UNMATCHED; tokens.len()];
    let mut stack = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        match t {
            Token::Open => stack.push(i),
            Token::Close => {
                if let Some(open) = stack.pop() {
                    jumps[open] = i;
                    jumps[i] = open;
                }
            }
            _ => {}
        }
    }
    jumps
}

/// Run one pass of `program` on `memory`. See [`CompiledProgram::step`].
pub fn agent_step(
    program: &Program,
    memory: &mut AgentMemory,
    obs: &[u8],
    cfg: &LanguageConfig,
) -> Result<u8, LangError> {
    CompiledProgram::new(program).step(memory, obs, cfg)
}

/// Remove dead code while keeping the program's action behavior.
///
/// Rules, applied until nothing changes:
/// - adjacent `+-`, `-+`, `><`, `<>` cancel;
/// - of two adjacent teleports the first is dead;
/// - of two adjacent constant writes the first is dead;
/// - a loop directly after a matched `]` never runs (the cell is zero there).
pub fn prune(program: &Program) -> Program {
    let mut tokens = program.tokens().to_vec();
    while prune_once(&mut tokens) {}
    Program::new(tokens)
}

fn prune_once(tokens: &mut Vec<Token>) -> bool {
    use Token::*;
    for i in 0..tokens.len().saturating_sub(1) {
        let (a, b) = (tokens[i], tokens[i + 1]);
        let cancels = matches!((a, b), (Inc, Dec) | (Dec, Inc) | (Right, Left) | (Left, Right));
        if cancels {
            tokens.drain(i..i + 2);
            return true;
        }
        let overwritten = (a.teleport_target().is_some() && b.teleport_target().is_some())
            || (a.constant().is_some() && b.constant().is_some());
        if overwritten {
            tokens.remove(i);
            return true;
        }
    }
    let jumps = match_brackets(tokens);
    for i in 0..tokens.len().saturating_sub(1) {
        if tokens[i] == Close
            && jumps[i] != UNMATCHED
            && tokens[i + 1] == Open
            && jumps[i + 1] != UNMATCHED
        {
            let end = jumps[i + 1];
            tokens.drain(i + 1..=end);
            return true;
        }
    }
    false
}

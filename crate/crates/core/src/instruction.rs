//! Rule grammar over navigation instructions.
//!
//! An instruction is scanned left to right. Direction and magnitude cues
//! accumulate until a landmark phrase is captured after a marker word
//! (`reach`, `toward`, `at`, `on`, ...); that closes one [`Clause`]. Cues
//! after the last landmark form a trailing clause without a landmark.
//!
//! The grammar is exact for text produced by [`crate::verbalizer`] and
//! handles simple free-form instructions such as
//! `"Turn left on Maple Street, then right at the bank."`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnDirection {
    Left,
    Right,
    Straight,
    Back,
}

impl TurnDirection {
    /// Signed turn angle used when the instruction gives no magnitude.
    pub fn default_degrees(self) -> f64 {
        match self {
            TurnDirection::Left => 90.0,
            TurnDirection::Right => -90.0,
            TurnDirection::Straight => 0.0,
            TurnDirection::Back => 180.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerticalDirection {
    Ascend,
    Descend,
}

/// Directional content of one instruction clause.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionCue {
    pub direction: TurnDirection,
    /// Unsigned magnitude in degrees, when stated.
    pub degrees: Option<f64>,
}

impl DirectionCue {
    /// Signed target angle, positive = left.
    pub fn signed_degrees(&self) -> f64 {
        match (self.direction, self.degrees) {
            (TurnDirection::Left, Some(d)) => d,
            (TurnDirection::Right, Some(d)) => -d,
            (dir, _) => dir.default_degrees(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Clause {
    pub landmark: Option<String>,
    pub turn: Option<DirectionCue>,
    pub forward_meters: Option<f64>,
    pub vertical: Option<VerticalDirection>,
    pub vertical_meters: Option<f64>,
}

impl Clause {
    fn is_empty(&self) -> bool {
        self.landmark.is_none()
            && self.turn.is_none()
            && self.forward_meters.is_none()
            && self.vertical.is_none()
    }
}

const MARKERS: &[&str] = &[
    "reach", "toward", "towards", "at", "on", "until", "past", "follow", "to", "near", "approach",
];

const STOP_WORDS: &[&str] = &[
    "then", "and", "turn", "move", "fly", "go", "ascend", "descend", "continue", "keep", "head",
];

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "first", "second", "third", "fourth", "fifth", "next", "last",
];

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    Break,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let flush = |current: &mut String, tokens: &mut Vec<Token>| {
        if !current.is_empty() {
            tokens.push(Token::Word(std::mem::take(current)));
        }
    };
    for ch in text.chars() {
        match ch {
            ',' | '.' | ';' | '!' | '?' | ':' | '\n' | '"' | '(' | ')' => {
                flush(&mut current, &mut tokens);
                tokens.push(Token::Break);
            }
            c if c.is_whitespace() => flush(&mut current, &mut tokens),
            c => current.push(c),
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

fn lower(word: &str) -> String {
    word.to_lowercase()
}

fn is_marker(word: &str) -> bool {
    MARKERS.contains(&lower(word).as_str())
}

fn ends_phrase(word: &str) -> bool {
    let w = lower(word);
    MARKERS.contains(&w.as_str()) || STOP_WORDS.contains(&w.as_str())
}

fn parse_number(word: &str) -> Option<f64> {
    word.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Removes leading articles and ordinals from a landmark phrase.
pub fn strip_determiners(phrase: &str) -> String {
    let words: Vec<&str> = phrase.split_whitespace().collect();
    let start = words
        .iter()
        .position(|w| !DETERMINERS.contains(&lower(w).as_str()))
        .unwrap_or(words.len());
    words[start..].join(" ")
}

#[derive(Clone, Copy, PartialEq)]
enum Measure {
    Forward,
    Vertical,
}

/// Splits an instruction into landmark-terminated clauses.
pub fn parse_clauses(instruction: &str) -> Vec<Clause> {
    let tokens = tokenize(instruction);
    let mut clauses = Vec::new();
    let mut current = Clause::default();
    let mut last_measure = Measure::Forward;
    let mut i = 0;

    while i < tokens.len() {
        let word = match &tokens[i] {
            Token::Break => {
                i += 1;
                continue;
            }
            Token::Word(w) => w.clone(),
        };
        let w = lower(&word);
        let next_word = |offset: usize| -> Option<String> {
            match tokens.get(i + offset) {
                Some(Token::Word(n)) => Some(lower(n)),
                _ => None,
            }
        };

        if is_marker(&w) {
            // Capture the phrase up to the next break or marker/stop word.
            let mut j = i + 1;
            let mut phrase: Vec<String> = Vec::new();
            while let Some(Token::Word(n)) = tokens.get(j) {
                if ends_phrase(n) {
                    break;
                }
                phrase.push(n.clone());
                j += 1;
            }
            let landmark = strip_determiners(&phrase.join(" "));
            let is_direction_word = matches!(
                landmark.to_lowercase().as_str(),
                "left" | "right" | "the left" | "the right" | "your left" | "your right"
            );
            if !landmark.is_empty() && !is_direction_word {
                current.landmark = Some(landmark);
                clauses.push(std::mem::take(&mut current));
                last_measure = Measure::Forward;
                i = j;
                continue;
            }
            if is_direction_word {
                let dir = if landmark.to_lowercase().ends_with("left") {
                    TurnDirection::Left
                } else {
                    TurnDirection::Right
                };
                set_turn(&mut current, dir);
                i = j;
                continue;
            }
            i += 1;
            continue;
        }

        match w.as_str() {
            "left" => set_turn(&mut current, TurnDirection::Left),
            "right" => set_turn(&mut current, TurnDirection::Right),
            "back" | "around" => {
                if i > 0 && matches!(&tokens[i - 1], Token::Word(p) if lower(p) == "turn") {
                    current.turn = Some(DirectionCue {
                        direction: TurnDirection::Back,
                        degrees: None,
                    });
                }
            }
            "u-turn" => {
                current.turn = Some(DirectionCue {
                    direction: TurnDirection::Back,
                    degrees: None,
                })
            }
            "straight" | "ahead" | "forward" | "forwards" => {
                if current.turn.is_none() {
                    current.turn = Some(DirectionCue {
                        direction: TurnDirection::Straight,
                        degrees: None,
                    });
                }
                last_measure = Measure::Forward;
            }
            "ascend" | "elevate" | "climb" | "rise" | "up" => {
                current.vertical = Some(VerticalDirection::Ascend);
                last_measure = Measure::Vertical;
            }
            "descend" | "lower" | "down" | "drop" => {
                current.vertical = Some(VerticalDirection::Descend);
                last_measure = Measure::Vertical;
            }
            _ => {
                if let Some(value) = parse_number(&w) {
                    match next_word(1).as_deref() {
                        Some("degrees") | Some("degree") => {
                            match current.turn.as_mut() {
                                Some(cue)
                                    if matches!(
                                        cue.direction,
                                        TurnDirection::Left | TurnDirection::Right
                                    ) =>
                                {
                                    cue.degrees = Some(value)
                                }
                                _ => {}
                            }
                            i += 2;
                            continue;
                        }
                        Some("meters") | Some("meter") | Some("m") => {
                            match last_measure {
                                Measure::Forward => current.forward_meters = Some(value),
                                Measure::Vertical => current.vertical_meters = Some(value),
                            }
                            i += 2;
                            continue;
                        }
                        _ => {}
                    }
                }
            }
        }
        i += 1;
    }
    if !current.is_empty() {
        clauses.push(current);
    }
    clauses
}

fn set_turn(clause: &mut Clause, direction: TurnDirection) {
    // "turn around" / "turn back" outrank a later side word in the clause.
    if matches!(
        clause.turn,
        Some(DirectionCue {
            direction: TurnDirection::Back,
            ..
        })
    ) {
        return;
    }
    clause.turn = Some(DirectionCue {
        direction,
        degrees: None,
    });
}

/// Ordered landmark phrases of an instruction.
pub fn parse_landmarks(instruction: &str) -> Vec<String> {
    parse_clauses(instruction)
        .into_iter()
        .filter_map(|c| c.landmark)
        .collect()
}

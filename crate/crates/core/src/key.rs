//! Remote-control keys.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The four colour buttons found on most TV remotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ColorKey {
    Red,
    Green,
    Yellow,
    Blue,
}

/// A single remote-control key.
///
/// The derived ordering is the canonical key precedence used for tie-breaking
/// (`Up < Right < Down < Left < Ok < Back < Digit < Color < Power`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KeyKind {
    Up,
    Right,
    Down,
    Left,
    Ok,
    Back,
    Digit(Digit),
    Color(ColorKey),
    Power,
}

/// A numeric key payload, always in `0..=9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digit(u8);

impl Digit {
    pub fn new(value: u8) -> Option<Self> {
        (value <= 9).then_some(Digit(value))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

/// One of the four D-pad directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Up,
    Right,
    Down,
    Left,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Right, Direction::Down, Direction::Left];

    pub fn key(self) -> KeyKind {
        match self {
            Direction::Up => KeyKind::Up,
            Direction::Right => KeyKind::Right,
            Direction::Down => KeyKind::Down,
            Direction::Left => KeyKind::Left,
        }
    }

    pub fn inverse(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Right => Direction::Left,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
        }
    }

    /// Row and column offsets of one step in this direction.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::Up => (-1, 0),
            Direction::Right => (0, 1),
            Direction::Down => (1, 0),
            Direction::Left => (0, -1),
        }
    }
}

impl KeyKind {
    pub fn digit(value: u8) -> Option<KeyKind> {
        Digit::new(value).map(KeyKind::Digit)
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            KeyKind::Up => Some(Direction::Up),
            KeyKind::Right => Some(Direction::Right),
            KeyKind::Down => Some(Direction::Down),
            KeyKind::Left => Some(Direction::Left),
            _ => None,
        }
    }

    /// The key that undoes a successful press of `self`, if there is one.
    pub fn inverse(self) -> Option<KeyKind> {
        match self {
            KeyKind::Ok => Some(KeyKind::Back),
            other => other.direction().map(|d| d.inverse().key()),
        }
    }
}

impl From<Direction> for KeyKind {
    fn from(d: Direction) -> Self {
        d.key()
    }
}

impl fmt::Display for KeyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyKind::Up => f.write_str("Up"),
            KeyKind::Right => f.write_str("Right"),
            KeyKind::Down => f.write_str("Down"),
            KeyKind::Left => f.write_str("Left"),
            KeyKind::Ok => f.write_str("OK"),
            KeyKind::Back => f.write_str("Back"),
            KeyKind::Digit(d) => write!(f, "Digit{}", d.0),
            KeyKind::Color(c) => write!(f, "{c:?}"),
            KeyKind::Power => f.write_str("Power"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown key {0:?}")]
pub struct ParseKeyError(pub String);

impl FromStr for KeyKind {
    type Err = ParseKeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = match s {
            "Up" => KeyKind::Up,
            "Right" => KeyKind::Right,
            "Down" => KeyKind::Down,
            "Left" => KeyKind::Left,
            "OK" => KeyKind::Ok,
            "Back" => KeyKind::Back,
            "Red" => KeyKind::Color(ColorKey::Red),
            "Green" => KeyKind::Color(ColorKey::Green),
            "Yellow" => KeyKind::Color(ColorKey::Yellow),
            "Blue" => KeyKind::Color(ColorKey::Blue),
            "Power" => KeyKind::Power,
            other => {
                let digit = other
                    .strip_prefix("Digit")
                    .filter(|rest| rest.len() == 1)
                    .and_then(|rest| rest.parse::<u8>().ok())
                    .and_then(KeyKind::digit);
                return digit.ok_or_else(|| ParseKeyError(s.to_string()));
            }
        };
        Ok(key)
    }
}

impl Serialize for KeyKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for KeyKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

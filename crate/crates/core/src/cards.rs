use serde::{Deserialize, Serialize};

use crate::hexgrid::HexCoord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CardColor {
    Black,
    Blue,
    Green,
    Orange,
    Pink,
    Red,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CardShape {
    Plus,
    Torch,
    Diamond,
    Heart,
    Star,
    Triangle,
}

impl CardColor {
    pub const ALL: [CardColor; 6] = [
        CardColor::Black,
        CardColor::Blue,
        CardColor::Green,
        CardColor::Orange,
        CardColor::Pink,
        CardColor::Red,
    ];
}

impl CardShape {
    pub const ALL: [CardShape; 6] = [
        CardShape::Plus,
        CardShape::Torch,
        CardShape::Diamond,
        CardShape::Heart,
        CardShape::Star,
        CardShape::Triangle,
    ];
}

/// The visible face of a card: what a valid set must keep distinct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CardPattern {
    pub color: CardColor,
    pub shape: CardShape,
    pub count: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Card {
    pub id: u32,
    pub cell: HexCoord,
    #[serde(flatten)]
    pub pattern: CardPattern,
    pub selected: bool,
}

pub const SET_SIZE: usize = 3;

/// Every (color, shape, count) combination with counts 1..=3.
pub fn all_patterns() -> Vec<CardPattern> {
    let mut out = Vec::with_capacity(108);
    for color in CardColor::ALL {
        for shape in CardShape::ALL {
            for count in 1..=3 {
                out.push(CardPattern {
                    color,
                    shape,
                    count,
                });
            }
        }
    }
    out
}

/// Exactly three cards whose colors, shapes and counts are pairwise distinct.
pub fn is_valid_set<'a, I>(patterns: I) -> bool
where
    I: IntoIterator<Item = &'a CardPattern>,
{
    let patterns: Vec<&CardPattern> = patterns.into_iter().collect();
    if patterns.len() != SET_SIZE {
        return false;
    }
    let (a, b, c) = (patterns[0], patterns[1], patterns[2]);
    fn distinct<T: PartialEq>(x: T, y: T, z: T) -> bool {
        x != y && y != z && x != z
    }
    distinct(a.color, b.color, c.color)
        && distinct(a.shape, b.shape, c.shape)
        && distinct(a.count, b.count, c.count)
}

pub fn is_valid_card_set(cards: &[Card]) -> bool {
    is_valid_set(cards.iter().map(|c| &c.pattern))
}

//! Browser demo over the core engine. Every export returns an SVG string
//! that the page drops into the DOM.
//!
//! Build with `wasm-pack build crates/web --target web --out-dir www/pkg`.

use std::collections::BTreeSet;
use std::fmt::Write;

use hexcollab_core::agents::SelfPlay;
use hexcollab_core::hexgrid::{visible_set, HexGrid};
use hexcollab_core::map::{PropKind, Terrain};
use hexcollab_core::{generate_map, Card, GameConfig, GameMap, GenConfig, Heading, HexCoord, Pose};
use wasm_bindgen::prelude::*;

const SIZE: f64 = 12.0;

fn terrain_color(t: Terrain) -> &'static str {
    match t {
        Terrain::Grass => "#9ccc65",
        Terrain::Path => "#d7c49e",
        Terrain::Water => "#4fa3d9",
        Terrain::Mountain => "#8d8d8d",
        Terrain::Ramp => "#b0a17a",
    }
}

fn px(c: HexCoord) -> (f64, f64) {
    let (x, y) = c.center();
    (x * SIZE, y * SIZE)
}

fn hexagon(out: &mut String, c: HexCoord, fill: &str, opacity: f64) {
    let (x, y) = px(c);
    out.push_str("<polygon points=\"");
    for i in 0..6 {
        let a = (60.0 * i as f64 - 30.0).to_radians();
        let _ = write!(out, "{:.1},{:.1} ", x + SIZE * a.cos(), y + SIZE * a.sin());
    }
    let _ = write!(out, "\" fill=\"{fill}\" fill-opacity=\"{opacity:.2}\" stroke=\"#0002\"/>");
}

fn agent(out: &mut String, pose: Pose, color: &str) {
    let (x, y) = px(pose.cell);
    let a = (-60.0 * pose.heading.index() as f64).to_radians();
    let pt = |r: f64, da: f64| format!("{:.1},{:.1}", x + SIZE * r * (a + da).cos(), y + SIZE * r * (a + da).sin());
    let _ = write!(
        out,
        "<polygon points=\"{} {} {}\" fill=\"{color}\" stroke=\"#000\"/>",
        pt(0.8, 0.0),
        pt(0.5, 2.4),
        pt(0.5, -2.4)
    );
}

/// Draws the board. Cells outside `lit` are dimmed when it is given.
fn board(map: &GameMap, cards: &[Card], poses: &[(Pose, &str)], lit: Option<&BTreeSet<HexCoord>>) -> String {
    let cells = map.cells();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for c in &cells {
        let (x, y) = px(*c);
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let pad = SIZE * 1.5;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.1} {:.1} {:.1} {:.1}\">",
        x0 - pad,
        y0 - pad,
        x1 - x0 + 2.0 * pad,
        y1 - y0 + 2.0 * pad
    );
    for c in &cells {
        let tile = map.tile(*c).expect("cell on the map");
        let opacity = match lit {
            Some(v) if !v.contains(c) => 0.25,
            _ => 1.0 - 0.08 * tile.elevation.min(3) as f64,
        };
        hexagon(&mut out, *c, terrain_color(tile.terrain), opacity);
    }
    for p in &map.props {
        let (x, y) = px(p.cell);
        let glyph = match p.kind {
            PropKind::House => "⌂",
            PropKind::Tree => "♣",
            PropKind::Streetlight => "☼",
            PropKind::Rock => "●",
        };
        let _ = write!(out, "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\">{glyph}</text>", y + 4.0);
    }
    for card in cards {
        let (x, y) = px(card.cell);
        let stroke = if card.selected { "#f1c40f" } else { "#333" };
        let _ = write!(
            out,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"9\" fill=\"#fff\" stroke=\"{stroke}\"/>",
            x - 6.0,
            y - 4.5
        );
    }
    for (pose, color) in poses {
        agent(&mut out, *pose, color);
    }
    out.push_str("</svg>");
    out
}

fn gen_config(seed: u32) -> GenConfig {
    GenConfig::default().with_seed(seed as u64)
}

pub fn map_svg(seed: u32) -> Result<String, String> {
    let map = generate_map(&gen_config(seed)).map_err(|e| e.to_string())?;
    let spawns = [
        (Pose::new(map.leader_spawn, Heading::ALL[0]), "#e74c3c"),
        (Pose::new(map.follower_spawn, Heading::ALL[0]), "#3498db"),
    ];
    Ok(board(&map, &map.initial_cards, &spawns, None))
}

/// The follower's view from its spawn with the given heading and limits.
pub fn visibility_svg(seed: u32, heading: u8, range: u32, fov_degrees: f64) -> Result<String, String> {
    let map = generate_map(&gen_config(seed)).map_err(|e| e.to_string())?;
    let heading = Heading::new(heading % 6).expect("heading below six");
    let pose = Pose::new(map.follower_spawn, heading);
    let seen = visible_set(&map, pose, fov_degrees.clamp(0.0, 360.0), range);
    let cards: Vec<Card> = map.initial_cards.iter().filter(|c| seen.contains(&c.cell)).cloned().collect();
    Ok(board(&map, &cards, &[(pose, "#3498db")], Some(&seen)))
}

/// Renders a generated map with its spawns and cards.
#[wasm_bindgen]
pub fn render_map(seed: u32) -> Result<String, JsError> {
    map_svg(seed).map_err(|e| JsError::new(&e))
}

/// Renders the follower's view cone; dimmed cells are out of view.
#[wasm_bindgen]
pub fn render_visibility(seed: u32, heading: u8, range: u32, fov_degrees: f64) -> Result<String, JsError> {
    visibility_svg(seed, heading, range, fov_degrees).map_err(|e| JsError::new(&e))
}

/// A scripted leader and follower playing one game, advanced by the page.
#[wasm_bindgen]
pub struct SelfPlayDemo {
    game: SelfPlay,
    actions: u32,
}

impl SelfPlayDemo {
    pub fn start(seed: u32) -> Result<Self, String> {
        let map = generate_map(&gen_config(seed)).map_err(|e| e.to_string())?;
        let game = SelfPlay::new("demo", map, GameConfig::default()).map_err(|e| e.to_string())?;
        Ok(Self { game, actions: 0 })
    }

    pub fn game(&self) -> &SelfPlay {
        &self.game
    }
}

#[wasm_bindgen]
impl SelfPlayDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<SelfPlayDemo, JsError> {
        Self::start(seed).map_err(|e| JsError::new(&e))
    }

    /// Plays up to `n` actions; returns false once the game is over.
    pub fn step(&mut self, n: u32) -> bool {
        for _ in 0..n {
            match self.game.step() {
                Some(Ok(_)) => self.actions += 1,
                _ => return false,
            }
        }
        !self.game.is_over()
    }

    pub fn svg(&self) -> String {
        let s = &self.game.state;
        let poses = [
            (s.pose(hexcollab_core::Role::Leader), "#e74c3c"),
            (s.pose(hexcollab_core::Role::Follower), "#3498db"),
        ];
        board(&s.map, &s.cards, &poses, Some(&s.follower_view()))
    }

    pub fn status(&self) -> String {
        let t = &self.game.state.turn;
        format!(
            "actions {} · turn {} ({:?}) · score {} · turns left {}{}",
            self.actions,
            t.turn_number,
            t.active_role,
            t.score,
            t.turns_remaining,
            if self.game.is_over() { " · game over" } else { "" }
        )
    }

    pub fn score(&self) -> u32 {
        self.game.state.turn.score
    }
}

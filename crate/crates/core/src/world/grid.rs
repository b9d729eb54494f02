use serde::{Deserialize, Serialize};
use std::fmt;

use crate::graph::ObjectId;

/// Terrain layer of a cell. The first three kinds occur naturally on
/// generated maps; the remaining seven only appear through placement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terrain {
    Lava,
    Field,
    Water,
    Road,
    Dirt,
    WoodFlooring,
    IronFlooring,
    SilverFlooring,
    GoldFlooring,
    DiamondFlooring,
}

impl Terrain {
    pub const ALL: [Terrain; 10] = [
        Terrain::Lava,
        Terrain::Field,
        Terrain::Water,
        Terrain::Road,
        Terrain::Dirt,
        Terrain::WoodFlooring,
        Terrain::IronFlooring,
        Terrain::SilverFlooring,
        Terrain::GoldFlooring,
        Terrain::DiamondFlooring,
    ];
    pub const NATURAL: [Terrain; 3] = [Terrain::Lava, Terrain::Field, Terrain::Water];
    pub const PLACEABLE: [Terrain; 7] = [
        Terrain::Road,
        Terrain::Dirt,
        Terrain::WoodFlooring,
        Terrain::IronFlooring,
        Terrain::SilverFlooring,
        Terrain::GoldFlooring,
        Terrain::DiamondFlooring,
    ];

    pub fn is_natural(self) -> bool {
        matches!(self, Terrain::Lava | Terrain::Field | Terrain::Water)
    }

    /// Index into `NATURAL`, for natural kinds only.
    pub fn natural_index(self) -> Option<usize> {
        match self {
            Terrain::Lava => Some(0),
            Terrain::Field => Some(1),
            Terrain::Water => Some(2),
            _ => None,
        }
    }

    /// Channel value in the observation tensor (0 means no terrain).
    pub fn code(self) -> u8 {
        Terrain::ALL.iter().position(|t| *t == self).unwrap() as u8 + 1
    }

    pub fn from_code(code: u8) -> Option<Terrain> {
        if code == 0 {
            return None;
        }
        Terrain::ALL.get(code as usize - 1).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Terrain::Lava => "lava",
            Terrain::Field => "field",
            Terrain::Water => "water",
            Terrain::Road => "road",
            Terrain::Dirt => "dirt",
            Terrain::WoodFlooring => "wood flooring",
            Terrain::IronFlooring => "iron flooring",
            Terrain::SilverFlooring => "silver flooring",
            Terrain::GoldFlooring => "gold flooring",
            Terrain::DiamondFlooring => "diamond flooring",
        }
    }

    pub fn from_name(name: &str) -> Option<Terrain> {
        Terrain::ALL.iter().copied().find(|t| t.name() == name)
    }
}

impl fmt::Display for Terrain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The closed set of 14 primitive actions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    PickUp,
    Use1,
    Use2,
    Use3,
    Use4,
    Use5,
    Place1,
    Place2,
    Place3,
    Place4,
}

impl Action {
    pub const ALL: [Action; 14] = [
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::PickUp,
        Action::Use1,
        Action::Use2,
        Action::Use3,
        Action::Use4,
        Action::Use5,
        Action::Place1,
        Action::Place2,
        Action::Place3,
        Action::Place4,
    ];

    pub fn index(self) -> usize {
        Action::ALL.iter().position(|a| *a == self).unwrap()
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
            Action::PickUp => "pick_up",
            Action::Use1 => "use_1",
            Action::Use2 => "use_2",
            Action::Use3 => "use_3",
            Action::Use4 => "use_4",
            Action::Use5 => "use_5",
            Action::Place1 => "place_1",
            Action::Place2 => "place_2",
            Action::Place3 => "place_3",
            Action::Place4 => "place_4",
        }
    }

    pub fn from_name(name: &str) -> Option<Action> {
        Action::ALL.iter().copied().find(|a| a.name() == name)
    }

    pub fn is_use(self) -> bool {
        matches!(
            self,
            Action::Use1 | Action::Use2 | Action::Use3 | Action::Use4 | Action::Use5
        )
    }

    pub fn is_place(self) -> bool {
        matches!(self, Action::Place1 | Action::Place2 | Action::Place3 | Action::Place4)
    }

    /// Row/column delta for movement actions.
    pub fn delta(self) -> Option<(i32, i32)> {
        match self {
            Action::Up => Some((-1, 0)),
            Action::Down => Some((1, 0)),
            Action::Left => Some((0, -1)),
            Action::Right => Some((0, 1)),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Position on the full grid, border included: interior cells have
/// `1 <= row <= rows` and `1 <= col <= cols`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub row: usize,
    pub col: usize,
}

impl Pos {
    pub const fn new(row: usize, col: usize) -> Self {
        Pos { row, col }
    }

    pub fn offset(self, (dr, dc): (i32, i32)) -> Option<Pos> {
        let row = self.row as i64 + dr as i64;
        let col = self.col as i64 + dc as i64;
        if row < 0 || col < 0 {
            return None;
        }
        Some(Pos::new(row as usize, col as usize))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Cell {
    pub wall: bool,
    pub terrain: Option<Terrain>,
    pub object: Option<ObjectId>,
    /// Cleared once a reward cell's one-shot reward has fired.
    pub reward_armed: bool,
}

impl Cell {
    pub fn wall() -> Self {
        Cell {
            wall: true,
            ..Cell::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.wall && self.object.is_none()
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MapError {
    #[error("border cell {0:?} is not a wall")]
    OpenBorder(Pos),
    #[error("interior cell {0:?} is a wall")]
    InteriorWall(Pos),
    #[error("wall cell {0:?} carries terrain or an object")]
    DecoratedWall(Pos),
    #[error("agent position {0:?} is not an interior cell")]
    AgentOutside(Pos),
    #[error("grid has {got} cells, expected {expected}")]
    Shape { got: usize, expected: usize },
}

/// Rectangular map with a one-cell wall border around the interior.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridMap {
    rows: usize,
    cols: usize,
    cells: Vec<Cell>,
    pub agent: Pos,
}

pub const DEFAULT_SIZE: usize = 8;

impl GridMap {
    /// Empty interior of the given size with walls around it and the agent
    /// in the top-left interior cell.
    pub fn empty(rows: usize, cols: usize) -> Self {
        let mut cells = vec![Cell::default(); (rows + 2) * (cols + 2)];
        for r in 0..rows + 2 {
            for c in 0..cols + 2 {
                if r == 0 || c == 0 || r == rows + 1 || c == cols + 1 {
                    cells[r * (cols + 2) + c] = Cell::wall();
                }
            }
        }
        GridMap {
            rows,
            cols,
            cells,
            agent: Pos::new(1, 1),
        }
    }

    pub fn from_cells(rows: usize, cols: usize, cells: Vec<Cell>, agent: Pos) -> Result<Self, MapError> {
        let expected = (rows + 2) * (cols + 2);
        if cells.len() != expected {
            return Err(MapError::Shape {
                got: cells.len(),
                expected,
            });
        }
        let map = GridMap {
            rows,
            cols,
            cells,
            agent,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<(), MapError> {
        for r in 0..self.rows + 2 {
            for c in 0..self.cols + 2 {
                let p = Pos::new(r, c);
                let cell = self.cell(p);
                let border = !self.is_interior(p);
                if border && !cell.wall {
                    return Err(MapError::OpenBorder(p));
                }
                if !border && cell.wall {
                    return Err(MapError::InteriorWall(p));
                }
                if cell.wall && (cell.terrain.is_some() || cell.object.is_some()) {
                    return Err(MapError::DecoratedWall(p));
                }
            }
        }
        if !self.is_interior(self.agent) {
            return Err(MapError::AgentOutside(self.agent));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn width(&self) -> usize {
        self.cols + 2
    }

    pub fn height(&self) -> usize {
        self.rows + 2
    }

    pub fn index(&self, p: Pos) -> usize {
        p.row * (self.cols + 2) + p.col
    }

    pub fn pos_of(&self, index: usize) -> Pos {
        Pos::new(index / (self.cols + 2), index % (self.cols + 2))
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.row < self.rows + 2 && p.col < self.cols + 2
    }

    pub fn is_interior(&self, p: Pos) -> bool {
        p.row >= 1 && p.col >= 1 && p.row <= self.rows && p.col <= self.cols
    }

    pub fn cell(&self, p: Pos) -> &Cell {
        &self.cells[self.index(p)]
    }

    pub fn cell_mut(&mut self, p: Pos) -> &mut Cell {
        let i = self.index(p);
        &mut self.cells[i]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Interior positions in row-major order.
    pub fn interior(&self) -> impl Iterator<Item = Pos> + '_ {
        (1..=self.rows).flat_map(move |r| (1..=self.cols).map(move |c| Pos::new(r, c)))
    }

    pub fn count_terrain(&self, t: Terrain) -> usize {
        self.interior().filter(|p| self.cell(*p).terrain == Some(t)).count()
    }

    pub fn count_object(&self, o: ObjectId) -> usize {
        self.interior().filter(|p| self.cell(*p).object == Some(o)).count()
    }

    pub fn positions_with_object(&self, o: ObjectId) -> Vec<Pos> {
        self.interior().filter(|p| self.cell(*p).object == Some(o)).collect()
    }

    pub fn positions_with_terrain(&self, t: Terrain) -> Vec<Pos> {
        self.interior().filter(|p| self.cell(*p).terrain == Some(t)).collect()
    }

    /// Natural terrain kinds present anywhere in the interior.
    pub fn natural_terrains_present(&self) -> Vec<Terrain> {
        Terrain::NATURAL
            .iter()
            .copied()
            .filter(|t| self.count_terrain(*t) > 0)
            .collect()
    }

    /// Interior neighbours in up, down, left, right order.
    pub fn neighbours(&self, p: Pos) -> impl Iterator<Item = Pos> + '_ {
        [(-1, 0), (1, 0), (0, -1), (0, 1)]
            .into_iter()
            .filter_map(move |d| p.offset(d))
            .filter(move |q| self.in_bounds(*q) && !self.cell(*q).wall)
    }
}

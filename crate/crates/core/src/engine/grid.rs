use std::collections::VecDeque;
use std::fmt;

use super::EngineError;

/// Tile coordinates; `x` grows to the right, `y` grows downward (row index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Pos { x, y }
    }

    pub fn manhattan(self, other: Pos) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn neighbors(self) -> [Pos; 4] {
        [
            Pos::new(self.x, self.y - 1),
            Pos::new(self.x - 1, self.y),
            Pos::new(self.x + 1, self.y),
            Pos::new(self.x, self.y + 1),
        ]
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tile {
    Floor,
    Blocked,
}

impl Tile {
    /// MovingAI terrain characters: `.`, `G`, `S` are passable; `@`, `O`, `T`, `W` are not.
    pub fn from_map_char(c: char) -> Option<Tile> {
        match c {
            '.' | 'G' | 'S' => Some(Tile::Floor),
            '@' | 'O' | 'T' | 'W' => Some(Tile::Blocked),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    width: i32,
    height: i32,
    cells: Vec<Tile>,
}

impl Grid {
    pub fn new(width: i32, height: i32, cells: Vec<Tile>) -> Result<Self, EngineError> {
        if width < 1 || height < 1 {
            return Err(EngineError::Map(format!(
                "grid dimensions must be positive, got {width}x{height}"
            )));
        }
        if cells.len() != (width * height) as usize {
            return Err(EngineError::Map(format!(
                "expected {} cells for a {width}x{height} grid, got {}",
                width * height,
                cells.len()
            )));
        }
        Ok(Grid {
            width,
            height,
            cells,
        })
    }

    /// An all-floor grid.
    pub fn open(width: i32, height: i32) -> Self {
        Grid::new(
            width,
            height,
            vec![Tile::Floor; (width * height).max(0) as usize],
        )
        .expect("open grid with positive dimensions")
    }

    /// Builds a grid from rows of MovingAI terrain characters.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self, EngineError> {
        let height = rows.len() as i32;
        let width = rows.first().map_or(0, |r| r.as_ref().chars().count()) as i32;
        let mut cells = Vec::with_capacity((width * height).max(0) as usize);
        for (y, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.chars().count() as i32 != width {
                return Err(EngineError::Map(format!(
                    "row {y} has {} columns, expected {width}",
                    row.chars().count()
                )));
            }
            for (x, c) in row.chars().enumerate() {
                cells.push(Tile::from_map_char(c).ok_or_else(|| {
                    EngineError::Map(format!("unknown terrain character {c:?} at ({x}, {y})"))
                })?);
            }
        }
        Grid::new(width, height, cells)
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.width && p.y < self.height
    }

    pub fn tile(&self, p: Pos) -> Option<Tile> {
        self.in_bounds(p)
            .then(|| self.cells[(p.y * self.width + p.x) as usize])
    }

    pub fn is_floor(&self, p: Pos) -> bool {
        self.tile(p) == Some(Tile::Floor)
    }

    pub fn floor_count(&self) -> usize {
        self.cells.iter().filter(|&&t| t == Tile::Floor).count()
    }

    pub fn floor_cells(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.height)
            .flat_map(move |y| (0..self.width).map(move |x| Pos::new(x, y)))
            .filter(move |&p| self.is_floor(p))
    }

    /// Terrain-only BFS distances from `from` (units ignored). Unreachable cells hold `None`.
    pub fn distance_field(&self, from: Pos) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.cells.len()];
        if !self.is_floor(from) {
            return dist;
        }
        let idx = |p: Pos| (p.y * self.width + p.x) as usize;
        dist[idx(from)] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(p) = queue.pop_front() {
            let d = dist[idx(p)].unwrap();
            for n in p.neighbors() {
                if self.is_floor(n) && dist[idx(n)].is_none() {
                    dist[idx(n)] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// Index into a [`Grid::distance_field`] result.
    pub fn index(&self, p: Pos) -> usize {
        (p.y * self.width + p.x) as usize
    }

    /// Floor cells of the largest 4-connected floor region, in row-major order.
    pub fn largest_region(&self) -> Vec<Pos> {
        let mut seen = vec![false; self.cells.len()];
        let mut best: Vec<Pos> = Vec::new();
        for start in self.floor_cells() {
            if seen[self.index(start)] {
                continue;
            }
            let mut region = vec![start];
            seen[self.index(start)] = true;
            let mut i = 0;
            while i < region.len() {
                for n in region[i].neighbors() {
                    if self.is_floor(n) && !seen[self.index(n)] {
                        seen[self.index(n)] = true;
                        region.push(n);
                    }
                }
                i += 1;
            }
            if region.len() > best.len() {
                best = region;
            }
        }
        best.sort_by_key(|p| (p.y, p.x));
        best
    }

    /// Renders the grid back into MovingAI format.
    pub fn to_map_text(&self) -> String {
        let mut out = format!(
            "type octile\nheight {}\nwidth {}\nmap\n",
            self.height, self.width
        );
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(match self.tile(Pos::new(x, y)) {
                    Some(Tile::Floor) => '.',
                    _ => '@',
                });
            }
            out.push('\n');
        }
        out
    }
}

/// Parses a MovingAI ASCII map: `type`, `height H`, `width W`, `map`, then H rows of W characters.
pub fn load_map(text: &str) -> Result<Grid, EngineError> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));

    let mut header = |key: &str| -> Result<String, EngineError> {
        let line = lines
            .next()
            .ok_or_else(|| EngineError::Map(format!("missing `{key}` header line")))?;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some(k) if k == key => Ok(parts.collect::<Vec<_>>().join(" ")),
            _ => Err(EngineError::Map(format!(
                "expected `{key}` header, found {line:?}"
            ))),
        }
    };

    let kind = header("type")?;
    if kind.is_empty() {
        return Err(EngineError::Map("`type` header has no value".into()));
    }
    let parse_dim = |key: &str, v: String| -> Result<i32, EngineError> {
        v.parse::<i32>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| EngineError::Map(format!("invalid {key} {v:?}")))
    };
    let height = parse_dim("height", header("height")?)?;
    let width = parse_dim("width", header("width")?)?;
    let rest = header("map")?;
    if !rest.is_empty() {
        return Err(EngineError::Map(format!(
            "unexpected text after `map`: {rest:?}"
        )));
    }

    let rows: Vec<&str> = lines.filter(|l| !l.is_empty()).collect();
    if rows.len() as i32 != height {
        return Err(EngineError::Map(format!(
            "header declares height {height} but body has {} rows",
            rows.len()
        )));
    }
    for (y, row) in rows.iter().enumerate() {
        let len = row.chars().count() as i32;
        if len != width {
            return Err(EngineError::Map(format!(
                "header declares width {width} but row {y} has {len} columns"
            )));
        }
    }
    Grid::from_rows(&rows)
}

//! Translation from matrices to game console commands.

use std::sync::OnceLock;

use serde::Deserialize;

use crate::grid::{Cell, Direction, Pos, ProblemMatrix, SolutionMatrix, WALL_THICKNESS};
use crate::sim::flow::{build_flow, Role};
use crate::sim::SimConfig;

const TEMPLATES_TOML: &str = include_str!("templates.toml");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Templates {
    pub clear: String,
    pub entity: String,
    pub run: String,
    pub query: String,
}

pub fn templates() -> &'static Templates {
    static T: OnceLock<Templates> = OnceLock::new();
    T.get_or_init(|| toml::from_str(TEMPLATES_TOML).expect("bundled templates parse"))
}

fn fill(template: &str, vars: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("%{k}%"), v);
    }
    out
}

/// Game-side direction code.
pub fn game_direction(d: Direction) -> u8 {
    2 * d.index() as u8
}

/// One entity to create.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub name: &'static str,
    pub pos: Pos,
    pub direction: Direction,
    pub variant: &'static str,
}

impl Entity {
    pub fn command(&self) -> String {
        fill(
            &templates().entity,
            &[
                ("name", self.name.to_string()),
                ("x", self.pos.x.to_string()),
                ("y", self.pos.y.to_string()),
                ("direction", game_direction(self.direction).to_string()),
                ("variant", self.variant.to_string()),
            ],
        )
    }
}

/// Entity name and variant for a cell code; the inverse of [`cell_for`].
fn naming(cell: Cell, underground_role: Role) -> (&'static str, &'static str) {
    match cell {
        Cell::Empty => unreachable!("empty cells emit nothing"),
        Cell::Belt(_) => ("transport-belt", ""),
        Cell::Underground(_) => match underground_role {
            Role::Exit => ("underground-belt", "output"),
            _ => ("underground-belt", "input"),
        },
        Cell::Obstacle => ("rock-big", ""),
        Cell::Wall => ("stone-wall", ""),
        Cell::InputInserter => ("inserter", "input"),
        Cell::InputChest => ("wooden-chest", "input"),
        Cell::OutputInserter => ("inserter", "output"),
        Cell::OutputChest => ("wooden-chest", "output"),
    }
}

/// Cell a created entity stands for, or `None` for unknown entities.
pub fn cell_for(name: &str, variant: &str, direction: Direction) -> Option<Cell> {
    Some(match (name, variant) {
        ("transport-belt", _) => Cell::Belt(direction),
        ("underground-belt", _) => Cell::Underground(direction),
        ("rock-big", _) => Cell::Obstacle,
        ("stone-wall", _) => Cell::Wall,
        ("inserter", "input") => Cell::InputInserter,
        ("wooden-chest", "input") => Cell::InputChest,
        ("inserter", "output") => Cell::OutputInserter,
        ("wooden-chest", "output") => Cell::OutputChest,
        _ => return None,
    })
}

/// Entities for every non-empty problem and solution cell, row-major over
/// the encoded area (ring included).
pub fn entities(problem: &ProblemMatrix, solution: &SolutionMatrix) -> Vec<Entity> {
    let flow = build_flow(problem, solution);
    let n = problem.size() as i32;
    let mut out = Vec::new();
    for y in -WALL_THICKNESS..n + WALL_THICKNESS {
        for x in -WALL_THICKNESS..n + WALL_THICKNESS {
            let pos = Pos::new(x, y);
            let mut cell = problem.cell_at(pos);
            let mut role = Role::Surface;
            if cell == Cell::Empty {
                cell = solution.get(pos).unwrap_or(Cell::Empty);
                if let Some(i) = problem.index(pos) {
                    role = flow.role(i);
                }
            }
            if cell == Cell::Empty {
                continue;
            }
            let direction = match cell {
                Cell::Belt(d) | Cell::Underground(d) => d,
                Cell::InputInserter => problem.insert_side().opposite(),
                Cell::OutputInserter => problem.extract_side(),
                _ => Direction::North,
            };
            let (name, variant) = naming(cell, role);
            out.push(Entity {
                name,
                pos,
                direction,
                variant,
            });
        }
    }
    out
}

/// Full command list for one evaluation: clear, create, run, query.
pub fn emit_commands(
    problem: &ProblemMatrix,
    solution: &SolutionMatrix,
    config: &SimConfig,
) -> Vec<String> {
    let t = templates();
    let mut out = vec![fill(&t.clear, &[("size", problem.size().to_string())])];
    out.extend(entities(problem, solution).iter().map(Entity::command));
    out.push(fill(
        &t.run,
        &[
            ("ticks", config.ticks.to_string()),
            ("period", config.inserter_period.to_string()),
        ],
    ));
    out.push(t.query.clone());
    out
}

/// Parses a query response of the form `i=<taken>;o=<delivered>`.
pub fn parse_counts(response: &str) -> Option<(u32, u32)> {
    let (i, o) = response.trim().split_once(';')?;
    let i = i.strip_prefix("i=")?.parse().ok()?;
    let o = o.strip_prefix("o=")?.parse().ok()?;
    Some((i, o))
}

/// Matches `command` against a template, returning placeholder values in
/// template order.
pub fn match_template(template: &str, command: &str) -> Option<Vec<(String, String)>> {
    let pieces: Vec<&str> = template.split('%').collect();
    // Even pieces are literals, odd pieces are placeholder names.
    let mut rest = command.strip_prefix(pieces[0])?;
    let mut out = Vec::new();
    for pair in pieces[1..].chunks(2) {
        let [name, literal] = pair else { return None };
        let end = if literal.is_empty() { rest.len() } else { rest.find(literal)? };
        out.push((name.to_string(), rest[..end].to_string()));
        rest = &rest[end + literal.len()..];
    }
    rest.is_empty().then_some(out)
}

/// Position and cell of an entity command, for the fake server.
pub fn parse_entity_command(command: &str) -> Option<(Pos, Cell)> {
    let vars = match_template(&templates().entity, command)?;
    let get = |k: &str| vars.iter().find(|(n, _)| n == k).map(|(_, v)| v.as_str());
    let dir: u8 = get("direction")?.parse().ok()?;
    if !dir.is_multiple_of(2) {
        return None;
    }
    let direction = Direction::from_index((dir / 2) as usize)?;
    let cell = cell_for(get("name")?, get("variant")?, direction)?;
    Some((Pos::new(get("x")?.parse().ok()?, get("y")?.parse().ok()?), cell))
}

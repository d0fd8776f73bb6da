"""The 12x9 office gridworld, its tasks and the labelled environment.

The agent moves in the four cardinal directions, staying put against walls.
Cells carry at most one special location; the ground-truth label of a
transition is the set of propositions placed at the destination cell.  A
deterministic task monitor (the ground-truth reward machine) decides
termination and the 0/1 task reward, while the agent only observes the
sensed probabilistic label.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events import Alphabet, Label, TraceOutcome, make_alphabet
from .machine import Guard, RewardMachine, guard
from .sensors import SensorBank

WIDTH, HEIGHT = 12, 9

PROP_NAMES = ("coffee", "mail", "office", "A", "B", "C", "D", "deco")
OFFICE_ALPHABET = make_alphabet(PROP_NAMES)

ACTIONS = ("up", "down", "left", "right")
_MOVES = {"up": (0, 1), "down": (0, -1), "left": (-1, 0), "right": (1, 0)}

_CELL_CHARS = {
    "coffee": "c", "mail": "m", "office": "o",
    "A": "A", "B": "B", "C": "C", "D": "D", "deco": "*",
}
_CHAR_PROPS = {v: k for k, v in _CELL_CHARS.items()}

# Placement counts shared by the canonical layout and random maps.
_PLACEMENT_COUNTS = (
    ("coffee", 2), ("mail", 1), ("office", 1),
    ("A", 1), ("B", 1), ("C", 1), ("D", 1), ("deco", 6),
)


def _wall_key(a, b):
    return (a, b) if a <= b else (b, a)


def _office_walls():
    walls = set()
    for xl in (2, 5, 8):  # room boundaries with doors at y=1 and y=7
        for y in range(HEIGHT):
            if y not in (1, 7):
                walls.add(_wall_key((xl, y), (xl + 1, y)))
    for x in range(WIDTH):  # lower corridor, doors at x=1 and x=10
        if x not in (1, 10):
            walls.add(_wall_key((x, 2), (x, 3)))
    for x in range(WIDTH):  # upper corridor, doors at x=1,4,7,10
        if x not in (1, 4, 7, 10):
            walls.add(_wall_key((x, 5), (x, 6)))
    return frozenset(walls)

WALLS = _office_walls()

_CANONICAL_PLACEMENTS = {
    "coffee": ((3, 6), (8, 2)),
    "mail": ((7, 4),),
    "office": ((4, 4),),
    "A": ((1, 1),),
    "B": ((10, 1),),
    "C": ((10, 7),),
    "D": ((1, 7),),
    "deco": ((4, 7), (7, 7), (1, 4), (10, 4), (4, 1), (7, 1)),
}
_CANONICAL_START = (4, 6)


@dataclass(frozen=True)
class GridMap:
    width: int
    height: int
    walls: frozenset
    placements: dict  # prop name -> tuple of cells
    start: tuple

    def __post_init__(self):
        cells = [c for cs in self.placements.values() for c in cs]
        if len(cells) != len(set(cells)):
            raise ValueError("special locations must occupy distinct cells")
        for c in cells + [self.start]:
            if not (0 <= c[0] < self.width and 0 <= c[1] < self.height):
                raise ValueError(f"cell {c} out of bounds")

    def blocked(self, a, b) -> bool:
        return _wall_key(a, b) in self.walls

    def label_at(self, alphabet: Alphabet, cell) -> Label:
        label = 0
        for name, cells in self.placements.items():
            if cell in cells:
                label |= 1 << alphabet.index(name)
        return label

    def move(self, pos, action: str):
        """Deterministic movement; bumping a wall or the border stays put."""
        dx, dy = _MOVES[action]
        nxt = (pos[0] + dx, pos[1] + dy)
        if not (0 <= nxt[0] < self.width and 0 <= nxt[1] < self.height):
            return pos
        if self.blocked(pos, nxt):
            return pos
        return nxt

    # --- text format: height grid rows (top row first), then wall lines ---

    def to_text(self) -> str:
        grid = [["." for _ in range(self.width)] for _ in range(self.height)]
        for name, cells in self.placements.items():
            for x, y in cells:
                grid[y][x] = _CELL_CHARS[name]
        sx, sy = self.start
        grid[sy][sx] = "S"
        lines = ["".join(grid[y]) for y in range(self.height - 1, -1, -1)]
        for (x1, y1), (x2, y2) in sorted(self.walls):
            lines.append(f"wall {x1} {y1} {x2} {y2}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, width: int = WIDTH, height: int = HEIGHT):
        lines = text.strip().splitlines()
        rows, wall_lines = lines[:height], lines[height:]
        placements: dict = {name: [] for name, _ in _PLACEMENT_COUNTS}
        start = None
        for i, row in enumerate(rows):
            y = height - 1 - i
            for x, ch in enumerate(row):
                if ch == "S":
                    start = (x, y)
                elif ch in _CHAR_PROPS:
                    placements[_CHAR_PROPS[ch]].append((x, y))
        if start is None:
            raise ValueError("map text has no start cell 'S'")
        walls = set()
        for ln in wall_lines:
            _, x1, y1, x2, y2 = ln.split()
            walls.add(_wall_key((int(x1), int(y1)), (int(x2), int(y2))))
        placements = {k: tuple(sorted(v)) for k, v in placements.items()}
        return cls(width, height, frozenset(walls), placements, start)


def canonical_map() -> GridMap:
    return GridMap(WIDTH, HEIGHT, WALLS, dict(_CANONICAL_PLACEMENTS),
                   _CANONICAL_START)


def random_map(task: str, rng: np.random.Generator) -> GridMap:
    """Fig-layout walls with special locations (and the start) resampled
    uniformly without collision over the grid cells."""
    del task  # placement counts are task-independent
    n_special = sum(n for _, n in _PLACEMENT_COUNTS)
    cells = [(x, y) for x in range(WIDTH) for y in range(HEIGHT)]
    picks = rng.choice(len(cells), size=n_special + 1, replace=False)
    placements = {}
    i = 0
    for name, count in _PLACEMENT_COUNTS:
        placements[name] = tuple(sorted(cells[j] for j in picks[i:i + count]))
        i += count
    start = cells[picks[-1]]
    return GridMap(WIDTH, HEIGHT, WALLS, placements, start)


def occupancy_priors(grid: GridMap, alphabet: Alphabet = OFFICE_ALPHABET):
    """Default sensor prior per proposition: fraction of cells carrying it."""
    n_cells = grid.width * grid.height
    priors = np.zeros(len(alphabet))
    for name, cells in grid.placements.items():
        priors[alphabet.index(name)] = len(cells) / n_cells
    return priors


# --- tasks -----------------------------------------------------------------

TASK_NAMES = ("coffee", "coffeemail", "visitabcd")


def make_task(name: str, alphabet: Alphabet = OFFICE_ALPHABET) -> RewardMachine:
    """Ground-truth reward machine for one of the office tasks."""
    g = lambda *lits: guard(alphabet, *lits)
    if name == "coffee":
        edges = {
            0: [(g("coffee", "!office", "!deco"), 1),
                (g("coffee", "office", "!deco"), 2),
                (g("deco"), 3)],
            1: [(g("office", "!deco"), 2),
                (g("deco"), 3)],
        }
        rewards = {(0, 2): 1.0, (1, 2): 1.0}
        return RewardMachine(alphabet, 4, 0, 2, 3, edges, rewards)
    if name == "coffeemail":
        edges = {
            0: [(g("coffee", "!mail", "!deco"), 1),
                (g("mail", "!coffee", "!deco"), 2),
                (g("coffee", "mail", "!deco"), 3),
                (g("deco"), 5)],
            1: [(g("mail", "!office", "!deco"), 3),
                (g("mail", "office", "!deco"), 4),
                (g("deco"), 5)],
            2: [(g("coffee", "!office", "!deco"), 3),
                (g("coffee", "office", "!deco"), 4),
                (g("deco"), 5)],
            3: [(g("office", "!deco"), 4),
                (g("deco"), 5)],
        }
        rewards = {(1, 4): 1.0, (2, 4): 1.0, (3, 4): 1.0}
        return RewardMachine(alphabet, 6, 0, 4, 5, edges, rewards)
    if name == "visitabcd":
        stations = ("A", "B", "C", "D")
        edges = {}
        rewards = {}
        for i, st in enumerate(stations):
            edges[i] = [(g(st, "!deco"), i + 1), (g("deco"), 5)]
        rewards[(3, 4)] = 1.0
        return RewardMachine(alphabet, 6, 0, 4, 5, edges, rewards)
    raise ValueError(f"unknown task {name!r}")


def first_noise_targets(task: str):
    """Sensors targeted in the noise-first setting: the first event(s)
    needed to make progress on the task."""
    if task == "coffee":
        return ("coffee",)
    if task == "coffeemail":
        return ("coffee", "mail")
    if task == "visitabcd":
        return ("A",)
    raise ValueError(f"unknown task {task!r}")


# --- environment -------------------------------------------------------------

@dataclass
class StepResult:
    state: tuple
    prob_label: np.ndarray
    reward: float
    terminal: bool
    goal: bool


class OfficeEnv:
    """Single-owner mutable environment: grid + task monitor + sensors."""

    def __init__(self, grid: GridMap, task: str, bank: SensorBank,
                 alphabet: Alphabet = OFFICE_ALPHABET):
        self.grid = grid
        self.alphabet = alphabet
        self.bank = bank
        self.task_machine = make_task(task, alphabet)
        self.pos = grid.start
        self.monitor_state = self.task_machine.u0
        self.true_trace = []

    def reset(self):
        self.pos = self.grid.start
        self.monitor_state = self.task_machine.u0
        self.true_trace = []
        return self.pos

    @property
    def terminal(self) -> bool:
        return self.monitor_state in (self.task_machine.uA, self.task_machine.uR)

    @property
    def goal(self) -> bool:
        return self.monitor_state == self.task_machine.uA

    def outcome(self) -> TraceOutcome:
        if not self.terminal:
            return TraceOutcome.INCOMPLETE
        return TraceOutcome.GOAL if self.goal else TraceOutcome.DEADEND

    def step(self, action: str, rng: np.random.Generator) -> StepResult:
        if self.terminal:
            raise RuntimeError("stepping a terminal episode")
        self.pos = self.grid.move(self.pos, action)
        true_label = self.grid.label_at(self.alphabet, self.pos)
        self.true_trace.append(true_label)
        self.monitor_state, _ = self.task_machine.step(self.monitor_state,
                                                       true_label)
        pl = self.bank.sense(true_label, rng)
        reward = 1.0 if self.terminal and self.goal else 0.0
        return StepResult(self.pos, pl, reward, self.terminal, self.goal)


def random_walk_trace(grid: GridMap, task_rm: RewardMachine,
                      rng: np.random.Generator, max_steps: int = 150,
                      alphabet: Alphabet = OFFICE_ALPHABET):
    """Ground-truth symbolic trace of a uniformly random walk, cut at the
    monitor's terminal states or at ``max_steps``."""
    pos = grid.start
    state = task_rm.u0
    trace = []
    for _ in range(max_steps):
        pos = grid.move(pos, ACTIONS[rng.integers(len(ACTIONS))])
        label = grid.label_at(alphabet, pos)
        trace.append(label)
        state = task_rm.step(state, label)[0]
        if state in (task_rm.uA, task_rm.uR):
            break
    if state == task_rm.uA:
        outcome = TraceOutcome.GOAL
    elif state == task_rm.uR:
        outcome = TraceOutcome.DEADEND
    else:
        outcome = TraceOutcome.INCOMPLETE
    return tuple(trace), outcome


def env_step(grid: GridMap, state, action: str, bank: SensorBank,
             monitor_rm: RewardMachine, monitor_state: int,
             rng: np.random.Generator):
    """Functional single-step form: returns (StepResult, new monitor state)."""
    nxt = grid.move(state, action)
    true_label = grid.label_at(bank.alphabet, nxt)
    mon, _ = monitor_rm.step(monitor_state, true_label)
    terminal = mon in (monitor_rm.uA, monitor_rm.uR)
    goal = mon == monitor_rm.uA
    pl = bank.sense(true_label, rng)
    reward = 1.0 if terminal and goal else 0.0
    return StepResult(nxt, pl, reward, terminal, goal), mon

"""CUBE: cooperative block pushing on a bounded grid.

Blocks of weight ``w`` occupy ``w x w`` footprints and move one cell when
pushed with total force >= total chain weight.  Force comes from agents
face-adjacent to the block plus contiguous same-direction agents lined up
behind them.  Blocks touching in the push direction move as one chain.
Delivery removes a block once any of its cells reaches the goal column
(the rightmost column).

Resolution order within a step: pushes first (opposing successful pushes
cancel), then plain moves.  Moves are conservative: an agent may not enter
any pre- or post-step block cell nor any pre-step agent cell, and ties on a
target cell go to the lowest agent id.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

from ..constraints import CapabilityState, Dependency, Task, evaluate
from .base import (
    CONTINUE,
    DONE,
    FAILED,
    ConceptError,
    ConceptExecutor,
    ConceptOutcome,
    Environment,
    StepInfo,
    parse_concept,
    parse_object_ref,
)

DIRS = {"UP": (-1, 0), "DOWN": (1, 0), "LEFT": (0, -1), "RIGHT": (0, 1)}
PRIMITIVES = ("STAY", "UP", "DOWN", "LEFT", "RIGHT")


@dataclass(frozen=True)
class Block:
    block_id: int
    weight: int
    row: int  # top-left corner
    col: int

    @property
    def cells(self) -> frozenset[tuple[int, int]]:
        return frozenset(
            (self.row + i, self.col + j)
            for i in range(self.weight)
            for j in range(self.weight)
        )

    def shifted(self, d: tuple[int, int]) -> "Block":
        return replace(self, row=self.row + d[0], col=self.col + d[1])


@dataclass
class PushRecord:
    """One merged push event: a block chain pushed in one direction."""

    blocks: frozenset[int]
    direction: str
    agents: frozenset[int]  # all chain members supplying force
    force: int
    weight: int
    succeeded: bool
    cancelled: bool = False


@dataclass
class StepResult:
    agents: dict[int, tuple[int, int]]
    blocks: dict[int, Block]
    delivered: list[int]
    pushes: list[PushRecord]
    moved: dict[int, bool]


def _block_at(blocks: dict[int, Block], cell: tuple[int, int]) -> Optional[int]:
    for bid, b in blocks.items():
        if cell in b.cells:
            return bid
    return None


def _block_chain(blocks: dict[int, Block], start: int, d: tuple[int, int]) -> set[int]:
    """Blocks moved together by a push on `start` in direction `d`."""
    chain = {start}
    frontier = [start]
    while frontier:
        bid = frontier.pop()
        ahead = {(r + d[0], c + d[1]) for r, c in blocks[bid].cells}
        for other, ob in blocks.items():
            if other not in chain and ahead & ob.cells:
                chain.add(other)
                frontier.append(other)
    return chain


def resolve_step(
    width: int,
    height: int,
    agents: dict[int, tuple[int, int]],
    blocks: dict[int, Block],
    actions: dict[int, str],
) -> StepResult:
    """Pure one-step CUBE resolver."""
    pre_agent_cells = set(agents.values())
    pre_block_cells = {c for b in blocks.values() for c in b.cells}

    # Classify intents: a directional action whose target cell lies inside a
    # block is a push attempt on that block; otherwise it is a plain move.
    push_fronts: dict[tuple[int, str], list[int]] = {}  # (block, dir) -> front agents
    movers: list[tuple[int, tuple[int, int]]] = []
    for aid in sorted(agents):
        act = actions.get(aid, "STAY")
        if act not in DIRS:
            continue
        d = DIRS[act]
        tgt = (agents[aid][0] + d[0], agents[aid][1] + d[1])
        bid = _block_at(blocks, tgt)
        if bid is not None:
            push_fronts.setdefault((bid, act), []).append(aid)
        else:
            movers.append((aid, tgt))

    # Chains of same-direction agents behind each front pusher add force.
    chain_members: dict[tuple[int, str], set[int]] = {}
    pos_to_agent = {p: a for a, p in agents.items()}
    for (bid, act), fronts in push_fronts.items():
        d = DIRS[act]
        members: set[int] = set()
        for front in fronts:
            cell = agents[front]
            while True:
                aid = pos_to_agent.get(cell)
                if aid is None or actions.get(aid, "STAY") != act or aid in members:
                    break
                members.add(aid)
                cell = (cell[0] - d[0], cell[1] - d[1])
        chain_members[(bid, act)] = members

    # Merge push attempts per direction whose block chains overlap.
    events: list[PushRecord] = []
    for act in DIRS:
        attempts = [(bid, m) for (bid, a), m in chain_members.items() if a == act]
        if not attempts:
            continue
        merged: list[tuple[set[int], set[int]]] = []  # (block set, agent set)
        for bid, members in attempts:
            chain = _block_chain(blocks, bid, DIRS[act])
            for entry in merged:
                if entry[0] & chain:
                    entry[0].update(chain)
                    entry[1].update(members)
                    break
            else:
                merged.append((chain, set(members)))
        for blockset, agentset in merged:
            d = DIRS[act]
            weight = sum(blocks[b].weight for b in blockset)
            force = len(agentset)
            cells = {c for b in blockset for c in blocks[b].cells}
            shifted = {(r + d[0], c + d[1]) for r, c in cells}
            entering = shifted - cells
            free = all(
                0 <= r < height and 0 <= c < width for r, c in entering
            ) and not any(
                cell in pre_agent_cells or _block_at(blocks, cell) not in (None,)
                for cell in entering
            )
            events.append(
                PushRecord(
                    blocks=frozenset(blockset),
                    direction=act,
                    agents=frozenset(agentset),
                    force=force,
                    weight=weight,
                    succeeded=force >= weight and free,
                )
            )

    # Opposing (or otherwise conflicting) successful pushes on shared blocks
    # cancel each other.
    winners = [e for e in events if e.succeeded]
    for i, a in enumerate(winners):
        for b in winners[i + 1:]:
            if a.blocks & b.blocks:
                a.cancelled = True
                b.cancelled = True

    new_blocks = dict(blocks)
    new_agents = dict(agents)
    moved: dict[int, bool] = {a: False for a in agents}
    for e in events:
        if not (e.succeeded and not e.cancelled):
            continue
        d = DIRS[e.direction]
        for bid in e.blocks:
            new_blocks[bid] = new_blocks[bid].shifted(d)
        for aid in e.agents:
            p = new_agents[aid]
            new_agents[aid] = (p[0] + d[0], p[1] + d[1])
            moved[aid] = True

    # Delivery: any part of a block in the goal (rightmost) column.
    delivered = sorted(
        bid for bid, b in new_blocks.items() if any(c == width - 1 for _, c in b.cells)
    )
    for bid in delivered:
        del new_blocks[bid]

    post_block_cells = {c for b in new_blocks.values() for c in b.cells}
    forbidden = pre_block_cells | post_block_cells | pre_agent_cells
    claimed: set[tuple[int, int]] = set()
    for aid, tgt in movers:
        if moved[aid]:
            continue  # absorbed into a successful chain
        r, c = tgt
        if not (0 <= r < height and 0 <= c < width):
            continue
        if tgt in forbidden or tgt in claimed:
            continue
        new_agents[aid] = tgt
        moved[aid] = True
        claimed.add(tgt)

    return StepResult(
        agents=new_agents,
        blocks=new_blocks,
        delivered=delivered,
        pushes=events,
        moved=moved,
    )


def face_cells(block: Block, width: int, height: int) -> list[tuple[int, int]]:
    """In-bounds cells face-adjacent to the block footprint."""
    out = set()
    for r, c in block.cells:
        for dr, dc in DIRS.values():
            cell = (r + dr, c + dc)
            if cell not in block.cells and 0 <= cell[0] < height and 0 <= cell[1] < width:
                out.add(cell)
    return sorted(out)


def left_face_cells(block: Block, height: int) -> list[tuple[int, int]]:
    return [
        (block.row + i, block.col - 1)
        for i in range(block.weight)
        if 0 <= block.row + i < height and block.col - 1 >= 0
    ]


class _ActExecutor(ConceptExecutor):
    def __init__(self, concept: str, primitive: str):
        self.concept = concept
        self.primitive = primitive

    def propose(self, env, agent):
        return self.primitive

    def after_step(self, env, agent):
        return ConceptOutcome(DONE)


class _RepeatExecutor(ConceptExecutor):
    """Emits the same primitive a fixed number of steps (move / wait)."""

    def __init__(self, concept: str, primitive: str, steps: int):
        self.concept = concept
        self.primitive = primitive
        self.steps = steps
        self.elapsed = 0

    def propose(self, env, agent):
        return self.primitive

    def after_step(self, env, agent):
        self.elapsed += 1
        return ConceptOutcome(DONE if self.elapsed >= self.steps else CONTINUE)


class _PushExecutor(ConceptExecutor):
    """Repeated push attempts on an adjacent block; direction is derived
    from the agent's position relative to the block each step. Fails hard
    when adjacency is lost, or when the block disappears mid-segment."""

    def __init__(self, concept: str, block_id: int, steps: int = 1):
        self.concept = concept
        self.block_id = block_id
        self.steps = steps
        self.elapsed = 0

    def propose(self, env: "CubeEnv", agent):
        block = env.blocks.get(self.block_id)
        if block is None:
            raise ConceptError(f"block#{self.block_id} is gone")
        pos = env.agent_pos[agent]
        for name, (dr, dc) in DIRS.items():
            if (pos[0] + dr, pos[1] + dc) in block.cells:
                return name
        raise ConceptError(f"agent not adjacent to block#{self.block_id}")

    def after_step(self, env: "CubeEnv", agent):
        self.elapsed += 1
        if self.elapsed >= self.steps:
            return ConceptOutcome(DONE)
        if self.block_id not in env.blocks:
            return ConceptOutcome(FAILED, "block delivered mid-segment")
        return ConceptOutcome(CONTINUE)


class _NavigateExecutor(ConceptExecutor):
    """BFS to a left-face slot of a block, recomputed every step."""

    def __init__(self, concept: str, block_id: int, slot: int, timeout: int = 30):
        self.concept = concept
        self.block_id = block_id
        self.slot = slot
        self.timeout = timeout
        self.elapsed = 0

    def _goal(self, env: "CubeEnv") -> tuple[int, int]:
        block = env.blocks.get(self.block_id)
        if block is None:
            raise ConceptError(f"block#{self.block_id} is gone")
        slots = left_face_cells(block, env.height)
        if not slots:
            raise ConceptError(f"block#{self.block_id} has no reachable left face")
        return slots[min(self.slot, len(slots) - 1)]

    def propose(self, env: "CubeEnv", agent):
        goal = self._goal(env)
        pos = env.agent_pos[agent]
        if pos == goal:
            return "STAY"
        step = env.bfs_step(pos, goal, avoid_agents=True, exclude=agent)
        return step if step is not None else "STAY"

    def after_step(self, env: "CubeEnv", agent):
        self.elapsed += 1
        block = env.blocks.get(self.block_id)
        if block is None:
            return ConceptOutcome(DONE, "block delivered")
        if env.agent_pos[agent] == self._goal(env):
            return ConceptOutcome(DONE)
        if self.elapsed >= self.timeout:
            return ConceptOutcome(FAILED, "navigation timed out")
        return ConceptOutcome(CONTINUE)


class CubeEnv(Environment):
    name = "cube"

    def __init__(
        self,
        width: int,
        height: int,
        agents: dict[int, tuple[int, int]],
        blocks: list[Block],
        difficulty: str = "custom",
        max_steps: int = 200,
    ):
        self.width = width
        self.height = height
        self.difficulty = difficulty
        self.max_steps = max_steps
        self.n_agents = len(agents)
        self.agent_pos = dict(agents)
        self.blocks = {b.block_id: b for b in blocks}
        self._initial_blocks = {b.block_id: b for b in blocks}
        self._delivered: set[int] = set()
        self._engaged: dict[str, frozenset[int]] = {}
        self._tasks = {
            b.block_id: self._make_task(b) for b in self._initial_blocks.values()
        }

    # -- generation ---------------------------------------------------------

    @classmethod
    def generate(cls, difficulty: str, n_agents: int, seed: int, **kw) -> "CubeEnv":
        if difficulty == "auto":
            return cls._generate_auto(n_agents, seed, **kw)
        weights = {"easy": [1, 1, 1], "hard": [1, 2, 3]}.get(difficulty)
        if weights is None:
            raise ValueError(f"unknown cube difficulty: {difficulty!r}")
        size = kw.get("size", 8)
        rng = random.Random(seed)
        occupied: set[tuple[int, int]] = set()
        blocks = []
        # Heaviest first: a big footprint placed late can be boxed out.
        # Blocks are kept at least one cell apart; pushes only ever move the
        # rightmost block further right, so footprints never merge mid-episode.
        for bid, w in sorted(enumerate(weights), key=lambda x: -x[1]):
            for _ in range(10_000):
                r = rng.randrange(0, size - w + 1)
                c = rng.randrange(1, size - w)
                b = Block(bid, w, r, c)
                inflated = {
                    (cr + dr, cc + dc)
                    for cr, cc in b.cells
                    for dr in (-1, 0, 1)
                    for dc in (-1, 0, 1)
                }
                if not (inflated & occupied):
                    blocks.append(b)
                    occupied |= b.cells
                    break
            else:
                raise RuntimeError("could not place blocks")
        blocks.sort(key=lambda b: b.block_id)
        agents = {}
        free = [
            (r, c)
            for r in range(size)
            for c in range(size - 1)
            if (r, c) not in occupied
        ]
        for aid, cell in enumerate(rng.sample(free, n_agents)):
            agents[aid] = cell
        return cls(size, size, agents, blocks, difficulty=difficulty,
                   max_steps=kw.get("max_steps", 200))

    @classmethod
    def _generate_auto(cls, n_agents: int, seed: int, **kw) -> "CubeEnv":
        """Scaled layout: side k = max(20, n); heaviest weight is n//2 + 1
        and lighter blocks appear in greater numbers; block area capped at
        half the grid; blocks never touch a wall or one another; agents
        start on the wall opposite the goal column."""
        size = max(20, n_agents)
        rng = random.Random(seed)
        top_weight = n_agents // 2 + 1
        spec: list[int] = []
        area = 0
        # Conservative sub-cap (well under half the grid) so the no-touching
        # rule stays satisfiable by rejection sampling.
        budget = size * size // 3
        for w in range(top_weight, 0, -1):
            for _ in range(top_weight - w + 1):
                # Budget on the padded footprint so the gap rule stays
                # satisfiable by rejection sampling.
                if area + (w + 2) * (w + 2) > budget:
                    continue
                spec.append(w)
                area += (w + 2) * (w + 2)
        occupied: set[tuple[int, int]] = set()
        blocks: list[Block] = []
        for bid, w in enumerate(sorted(spec, reverse=True)):
            for _ in range(10_000):
                r = rng.randrange(1, size - w)
                c = rng.randrange(1, size - w)
                b = Block(bid, w, r, c)
                inflated = {
                    (cr + dr, cc + dc)
                    for cr, cc in b.cells
                    for dr in (-1, 0, 1)
                    for dc in (-1, 0, 1)
                }
                if not (inflated & occupied):
                    blocks.append(b)
                    occupied |= b.cells
                    break
            else:
                raise RuntimeError("could not place blocks")
        agents = {
            aid: (row, 0)
            for aid, row in enumerate(rng.sample(range(size), n_agents))
        }
        return cls(size, size, agents, blocks, difficulty="auto",
                   max_steps=kw.get("max_steps", 200))

    # -- tasks --------------------------------------------------------------

    def _make_task(self, block: Block) -> Task:
        tid = f"deliver(block#{block.block_id})"
        task = Task(
            task_id=tid,
            anchor_cells=tuple(sorted(block.cells)),
            required_participation=block.weight,
            radius=1,
            required_tool=None,
            dependencies=[],
            engagement_check=lambda cap, t=tid: cap.agent in self._engaged.get(t, ()),
        )
        # Chain members behind the face supply force; count them as present
        # for quorum purposes even when not face-adjacent.
        task.proximity_check = lambda cap, t=tid, k=block.block_id: (
            cap.agent in self._engaged.get(t, ())
            or (k in self.blocks and self._adjacent(cap.position, self.blocks[k]))
        )
        return task

    def _adjacent(self, pos: tuple[int, int], block: Block) -> bool:
        return any(
            abs(pos[0] - r) + abs(pos[1] - c) == 1 for r, c in block.cells
        )

    def all_tasks(self) -> list[Task]:
        return [self._tasks[k] for k in sorted(self._tasks)]

    def active_tasks(self) -> list[Task]:
        return [t for t in self.all_tasks() if not t.done]

    @property
    def team_success(self) -> bool:
        return not self.blocks

    # -- dynamics -----------------------------------------------------------

    def noop_action(self) -> str:
        return "STAY"

    def noop_concept(self) -> str:
        return "act(STAY)"

    def step(self, actions: dict[int, str]) -> StepInfo:
        before = self.snapshot()
        full = {a: actions.get(a, "STAY") for a in self.agent_pos}
        result = resolve_step(self.width, self.height, self.agent_pos, self.blocks, full)

        self._engaged = {}
        for e in result.pushes:
            for bid in e.blocks:
                tid = f"deliver(block#{bid})"
                prev = self._engaged.get(tid, frozenset())
                self._engaged[tid] = prev | e.agents

        caps = [
            CapabilityState(
                agent=a,
                position=self.agent_pos[a],
                tools=frozenset(),
                action=full[a],
            )
            for a in sorted(self.agent_pos)
        ]

        verdicts = []
        step_idx = before["t"]
        for task in self.active_tasks():
            bid = int(task.task_id.split("#")[1].rstrip(")"))
            block = self.blocks[bid]
            task.anchor_cells = tuple(sorted(block.cells))
            task.dependencies = [
                Dependency("path_clear", self._path_clear(block))
            ]
            verdicts.append(evaluate(task, caps, step_idx))

        self.agent_pos = result.agents
        self.blocks = result.blocks
        for bid in result.delivered:
            self._delivered.add(bid)
            self._tasks[bid].state = "done"
        self._t = step_idx + 1

        return StepInfo(
            state_before=before,
            state_after=self.snapshot(),
            capabilities=caps,
            verdicts=verdicts,
            capability_gains=0,
        )

    def _path_clear(self, block: Block) -> bool:
        """Next push-right destination cells are in bounds and unoccupied."""
        entering = {
            (r, c + 1) for r, c in block.cells if (r, c + 1) not in block.cells
        }
        others = {
            cell
            for bid, b in self.blocks.items()
            if bid != block.block_id
            for cell in b.cells
        }
        return all(
            0 <= r < self.height and 0 <= c < self.width and (r, c) not in others
            for r, c in entering
        )

    _t = 0

    def snapshot(self) -> dict[str, Any]:
        return {
            "t": self._t,
            "agents": {str(a): list(p) for a, p in sorted(self.agent_pos.items())},
            "blocks": {
                str(b.block_id): {"weight": b.weight, "row": b.row, "col": b.col}
                for b in sorted(self.blocks.values(), key=lambda b: b.block_id)
            },
            "delivered": sorted(self._delivered),
        }

    # -- navigation ---------------------------------------------------------

    def bfs_step(
        self,
        start: tuple[int, int],
        goal: tuple[int, int],
        avoid_agents: bool = True,
        exclude: Optional[int] = None,
    ) -> Optional[str]:
        """First move of a shortest path from start to goal, or None."""
        blocked = {c for b in self.blocks.values() for c in b.cells}
        if avoid_agents:
            blocked |= {p for a, p in self.agent_pos.items() if a != exclude}
        if goal in blocked:
            return None
        from collections import deque

        prev: dict[tuple[int, int], tuple[tuple[int, int], str]] = {}
        q = deque([start])
        seen = {start}
        while q:
            cur = q.popleft()
            if cur == goal:
                break
            for name in ("UP", "DOWN", "LEFT", "RIGHT"):
                dr, dc = DIRS[name]
                nxt = (cur[0] + dr, cur[1] + dc)
                if (
                    0 <= nxt[0] < self.height
                    and 0 <= nxt[1] < self.width
                    and nxt not in blocked
                    and nxt not in seen
                ):
                    seen.add(nxt)
                    prev[nxt] = (cur, name)
                    q.append(nxt)
        if goal not in prev and goal != start:
            return None
        cur = goal
        move = None
        while cur != start:
            cur, move = prev[cur]
        return move

    # -- concepts -----------------------------------------------------------

    def compile(self, agent: int, concept: str) -> ConceptExecutor:
        kind, args = parse_concept(concept)
        if kind == "act":
            if len(args) != 1 or args[0] not in PRIMITIVES:
                raise ConceptError(f"act() needs one of {PRIMITIVES}")
            return _ActExecutor(concept, args[0])
        if kind == "move":
            if not args or args[0].upper() not in DIRS:
                raise ConceptError("move() needs a direction in {up,down,left,right}")
            steps = int(args[1]) if len(args) > 1 else 1
            if not 1 <= steps <= 10:
                raise ConceptError("move steps must be in [1, 10]")
            return _RepeatExecutor(concept, args[0].upper(), steps)
        if kind == "wait":
            steps = int(args[0]) if args else 1
            if not 1 <= steps <= 10:
                raise ConceptError("wait steps must be in [1, 10]")
            return _RepeatExecutor(concept, "STAY", steps)
        if kind == "push":
            if not args:
                raise ConceptError("push() needs a block reference")
            otype, oid = parse_object_ref(args[0])
            if otype != "block":
                raise ConceptError(f"push() target must be a block, got {otype!r}")
            steps = int(args[1]) if len(args) > 1 else 1
            if not 1 <= steps <= 10:
                raise ConceptError("push steps must be in [1, 10]")
            return _PushExecutor(concept, oid, steps)
        if kind == "navigate":
            if not args:
                raise ConceptError("navigate() needs a block reference")
            otype, oid = parse_object_ref(args[0])
            if otype != "block":
                raise ConceptError(f"navigate() target must be a block, got {otype!r}")
            slot = int(args[1]) if len(args) > 1 else 0
            timeout = int(args[2]) if len(args) > 2 else 30
            if not 1 <= timeout <= 100:
                raise ConceptError("navigate timeout must be in [1, 100]")
            return _NavigateExecutor(concept, oid, slot, timeout)
        raise ConceptError(f"unknown cube concept kind: {kind!r}")

    # -- observation --------------------------------------------------------

    def observe(self, agent: int) -> np.ndarray:
        """Five channels: agent mask, block weights, goal strip, agent
        ids + 1, block ids + 1. Fully observed."""
        obs = np.zeros((5, self.height, self.width), dtype=np.float32)
        for a, (ar, ac) in self.agent_pos.items():
            obs[0, ar, ac] = 1.0
            obs[3, ar, ac] = a + 1
        for b in self.blocks.values():
            for br, bc in b.cells:
                obs[1, br, bc] = b.weight
                obs[4, br, bc] = b.block_id + 1
        obs[2, :, self.width - 1] = 1.0
        return obs

    def describe(self, agent: int) -> dict[str, Any]:
        return {
            "env": self.name,
            "you": f"agent_{agent}",
            "position": list(self.agent_pos[agent]),
            "grid": [self.height, self.width],
            "goal_column": self.width - 1,
            "agents": {str(a): list(p) for a, p in sorted(self.agent_pos.items())},
            "blocks": [
                {"id": b.block_id, "weight": b.weight, "row": b.row, "col": b.col}
                for b in sorted(self.blocks.values(), key=lambda b: b.block_id)
            ],
        }

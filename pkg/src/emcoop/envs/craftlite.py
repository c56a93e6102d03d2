"""Craftlite: cooperative resource collection and crafting on a 32x32 grid.

Resource nodes (trees, stone, coal, iron, diamond) are collected by quorum:
a node depletes only when at least ``required_agents`` agents stand within
``distance_threshold`` of it, all issue a collect on that node, and all hold
the required tool tier.  Each quorum member gains one unit (bag capacity 9).
Tables and furnaces are placed from inventory and unlock the pickaxe recipes.

The episode mission is a team wood quota; collected totals count toward the
mission even if the wood is later spent on crafting.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from importlib import resources as importlib_resources
from typing import Any, Optional

import numpy as np
import yaml

from ..constraints import CapabilityState, Dependency, Task, evaluate, tool_at_least
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

GRID = 32
BAG_CAPACITY = 9
NODE_COUNTS = {"tree": 12, "stone": 8, "coal": 4, "iron": 3, "diamond": 1}
NODE_TYPES = tuple(NODE_COUNTS)

MOVES = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}

RECIPES = {
    "wood_pickaxe": {"station": "table", "inputs": {"wood": 1}},
    "stone_pickaxe": {"station": "table", "inputs": {"wood": 1, "stone": 1}},
    "iron_pickaxe": {"station": "furnace", "inputs": {"iron": 1, "coal": 1, "wood": 1}},
}
PLACE_COSTS = {"table": {"wood": 2}, "furnace": {"stone": 4}}

RESOURCE_OF_NODE = {
    "tree": "wood",
    "stone": "stone",
    "coal": "coal",
    "iron": "iron",
    "diamond": "diamond",
}


def load_coop_config(difficulty: str) -> dict[str, Any]:
    name = f"craftlite_{difficulty}.yaml"
    ref = importlib_resources.files("emcoop.data.configs") / name
    try:
        text = ref.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise ValueError(f"unknown craftlite difficulty: {difficulty!r}") from e
    return yaml.safe_load(text)


@dataclass
class Node:
    node_id: int
    kind: str
    pos: tuple[int, int]
    depleted: bool = False


@dataclass
class Station:
    station_id: int
    kind: str  # table | furnace
    pos: tuple[int, int]


@dataclass
class AgentBody:
    agent: int
    pos: tuple[int, int]
    inventory: dict[str, int] = field(default_factory=dict)
    tools: set[str] = field(default_factory=set)

    @property
    def bag_load(self) -> int:
        return sum(self.inventory.values())

    def gain(self, resource: str) -> bool:
        if self.bag_load >= BAG_CAPACITY:
            return False
        self.inventory[resource] = self.inventory.get(resource, 0) + 1
        return True

    def spend(self, costs: dict[str, int]) -> None:
        for k, n in costs.items():
            self.inventory[k] = self.inventory[k] - n
            if self.inventory[k] == 0:
                del self.inventory[k]

    def has(self, costs: dict[str, int]) -> bool:
        return all(self.inventory.get(k, 0) >= n for k, n in costs.items())


class _RepeatExecutor(ConceptExecutor):
    """Emits the same primitive a fixed number of steps (noop / move)."""

    def __init__(self, concept: str, primitive: str, steps: int = 1):
        self.concept = concept
        self.primitive = primitive
        self.steps = steps
        self.elapsed = 0

    def propose(self, env, agent):
        return self.primitive

    def after_step(self, env, agent):
        self.elapsed += 1
        return ConceptOutcome(DONE if self.elapsed >= self.steps else CONTINUE)


class _ShareExecutor(ConceptExecutor):
    def __init__(self, concept: str, recipient: int, resource: str, quantity: int):
        self.concept = concept
        self.recipient = recipient
        self.resource = resource
        self.quantity = quantity

    def propose(self, env: "CraftliteEnv", agent):
        if self.recipient == agent:
            raise ConceptError("cannot share with yourself")
        if self.recipient not in env.bodies:
            raise ConceptError(f"no such agent: agent#{self.recipient}")
        body = env.bodies[agent]
        if body.inventory.get(self.resource, 0) < self.quantity:
            raise ConceptError(f"not enough {self.resource} to share")
        return f"share:{self.recipient}:{self.resource}:{self.quantity}"

    def after_step(self, env, agent):
        return ConceptOutcome(DONE)


class _NavigateExecutor(ConceptExecutor):
    """Per-step BFS toward a cell adjacent to the target object."""

    def __init__(self, concept: str, otype: str, oid: int, timeout: int = 30):
        self.concept = concept
        self.otype = otype
        self.oid = oid
        self.timeout = timeout
        self.elapsed = 0

    def _target_cell(self, env: "CraftliteEnv") -> tuple[int, int]:
        cell = env.locate(self.otype, self.oid)
        if cell is None:
            raise ConceptError(f"no target: {self.otype}#{self.oid}")
        return cell

    def propose(self, env: "CraftliteEnv", agent):
        tgt = self._target_cell(env)
        pos = env.bodies[agent].pos
        if abs(pos[0] - tgt[0]) + abs(pos[1] - tgt[1]) <= 1:
            return "noop"
        step = env.bfs_step_adjacent(pos, tgt, exclude=agent)
        return step if step is not None else "noop"

    def after_step(self, env: "CraftliteEnv", agent):
        self.elapsed += 1
        cell = env.locate(self.otype, self.oid)
        if cell is None:
            return ConceptOutcome(FAILED, "target disappeared")
        pos = env.bodies[agent].pos
        if abs(pos[0] - cell[0]) + abs(pos[1] - cell[1]) <= 1:
            return ConceptOutcome(DONE)
        if self.elapsed >= self.timeout:
            return ConceptOutcome(FAILED, "navigation timed out")
        return ConceptOutcome(CONTINUE)


class _CollectExecutor(ConceptExecutor):
    """Issue collects on one node until it depletes (quorum misses are soft)."""

    def __init__(self, concept: str, otype: str, oid: int):
        self.concept = concept
        self.otype = otype
        self.oid = oid

    def propose(self, env: "CraftliteEnv", agent):
        node = env.nodes.get(self.oid)
        if node is None or node.depleted or node.kind != self.otype:
            raise ConceptError(f"no target: {self.otype}#{self.oid}")
        body = env.bodies[agent]
        rule = env.coop_rules[node.kind]
        if not tool_at_least(body.tools, rule.get("required_tool")):
            raise ConceptError(f"missing tool for {node.kind}")
        pos = body.pos
        if abs(pos[0] - node.pos[0]) + abs(pos[1] - node.pos[1]) > env.distance_threshold:
            raise ConceptError(f"not near {self.otype}#{self.oid}")
        return f"collect:{self.oid}"

    def after_step(self, env: "CraftliteEnv", agent):
        node = env.nodes.get(self.oid)
        if node is None or node.depleted:
            return ConceptOutcome(DONE)
        return ConceptOutcome(CONTINUE)


class _CraftExecutor(ConceptExecutor):
    def __init__(self, concept: str, tool: str):
        self.concept = concept
        self.tool = tool

    def propose(self, env: "CraftliteEnv", agent):
        recipe = RECIPES[self.tool]
        body = env.bodies[agent]
        if not env.near_station(body.pos, recipe["station"]):
            raise ConceptError(f"no {recipe['station']} nearby")
        if not body.has(recipe["inputs"]):
            raise ConceptError(f"missing inputs for {self.tool}")
        return f"craft:{self.tool}"

    def after_step(self, env: "CraftliteEnv", agent):
        if self.tool in env.bodies[agent].tools:
            return ConceptOutcome(DONE)
        return ConceptOutcome(FAILED, f"craft of {self.tool} did not complete")


class _PlaceExecutor(ConceptExecutor):
    def __init__(self, concept: str, kind: str):
        self.concept = concept
        self.kind = kind

    def propose(self, env: "CraftliteEnv", agent):
        body = env.bodies[agent]
        if not body.has(PLACE_COSTS[self.kind]):
            raise ConceptError(f"missing inputs for {self.kind}")
        if env.free_adjacent_cell(body.pos) is None:
            raise ConceptError("no free adjacent cell")
        return f"place:{self.kind}"

    def after_step(self, env: "CraftliteEnv", agent):
        pos = env.bodies[agent].pos
        if env.near_station(pos, self.kind):
            return ConceptOutcome(DONE)
        return ConceptOutcome(FAILED, f"placing {self.kind} did not complete")


class CraftliteEnv(Environment):
    name = "craftlite"

    def __init__(
        self,
        bodies: dict[int, AgentBody],
        nodes: list[Node],
        difficulty: str,
        coop_config: dict[str, Any],
        max_steps: int = 100,
    ):
        self.n_agents = len(bodies)
        self.bodies = bodies
        self.nodes = {n.node_id: n for n in nodes}
        self.stations: dict[int, Station] = {}
        self._next_station_id = 0
        self.difficulty = difficulty
        self.max_steps = max_steps
        coop = coop_config["cooperative_collection"]
        self.feedback_enabled = True
        self.coop_enabled = bool(coop.get("enabled", True))
        self.distance_threshold = int(coop.get("distance_threshold", 1))
        self.coop_rules = coop["resources"]
        self.wood_target = int(coop_config.get("mission", {}).get("wood_target", 2))
        self.collected: dict[str, int] = {}
        self.quorum_collections = 0
        self._t = 0
        self._tasks = {n.node_id: self._make_task(n) for n in nodes}

    # -- generation ---------------------------------------------------------

    @classmethod
    def generate(cls, difficulty: str, n_agents: int, seed: int, **kw) -> "CraftliteEnv":
        config = kw.get("coop_config") or load_coop_config(difficulty)
        rng = random.Random(seed)
        center = (GRID // 2, GRID // 2)
        occupied: set[tuple[int, int]] = set()

        def sample_cell(lo_r, hi_r, lo_c, hi_c):
            for _ in range(10_000):
                cell = (rng.randrange(lo_r, hi_r), rng.randrange(lo_c, hi_c))
                if cell not in occupied:
                    occupied.add(cell)
                    return cell
            raise RuntimeError("map generation failed")

        bodies = {}
        for aid in range(n_agents):
            cell = sample_cell(center[0] - 3, center[0] + 4, center[1] - 3, center[1] + 4)
            bodies[aid] = AgentBody(agent=aid, pos=cell)

        nodes = []
        nid = 0
        for kind in NODE_TYPES:
            for i in range(NODE_COUNTS[kind]):
                # Seed a few trees near the spawn cluster so early cooperative
                # collection is reachable on every map.
                if kind == "tree" and i < 4:
                    cell = sample_cell(
                        center[0] - 6, center[0] + 7, center[1] - 6, center[1] + 7
                    )
                else:
                    cell = sample_cell(0, GRID, 0, GRID)
                nodes.append(Node(node_id=nid, kind=kind, pos=cell))
                nid += 1
        return cls(bodies, nodes, difficulty, config, max_steps=kw.get("max_steps", 100))

    # -- tasks --------------------------------------------------------------

    def _make_task(self, node: Node) -> Task:
        rule = self.coop_rules[node.kind]
        p = int(rule["required_agents"]) if self.coop_enabled else 1
        tool = rule.get("required_tool")
        return Task(
            task_id=f"collect({node.kind}#{node.node_id})",
            anchor_cells=(node.pos,),
            required_participation=p,
            radius=self.distance_threshold,
            required_tool=tool,
            engagement_check=lambda cap, nid=node.node_id: cap.action == f"collect:{nid}",
        )

    def all_tasks(self) -> list[Task]:
        return [self._tasks[k] for k in sorted(self._tasks)]

    def active_tasks(self) -> list[Task]:
        return [t for t in self.all_tasks() if not t.done]

    @property
    def team_success(self) -> bool:
        return self.collected.get("wood", 0) >= self.wood_target

    def outcomes(self) -> dict[str, bool]:
        out = {t.task_id: t.done for t in self.all_tasks()}
        out["mission"] = self.team_success
        return out

    # -- helpers ------------------------------------------------------------

    def locate(self, otype: str, oid: int) -> Optional[tuple[int, int]]:
        if otype in NODE_TYPES:
            node = self.nodes.get(oid)
            if node and not node.depleted and node.kind == otype:
                return node.pos
            return None
        if otype in ("table", "furnace"):
            st = self.stations.get(oid)
            return st.pos if st and st.kind == otype else None
        if otype == "agent":
            return self.bodies[oid].pos if oid in self.bodies else None
        return None

    def nearest_station(self, kind: str) -> Optional[Station]:
        cands = sorted(
            (s for s in self.stations.values() if s.kind == kind),
            key=lambda s: s.station_id,
        )
        return cands[0] if cands else None

    def near_station(self, pos: tuple[int, int], kind: str) -> bool:
        return any(
            s.kind == kind and abs(pos[0] - s.pos[0]) + abs(pos[1] - s.pos[1]) <= 1
            for s in self.stations.values()
        )

    def _blocked_cells(self, exclude_agent: Optional[int] = None) -> set[tuple[int, int]]:
        blocked = {n.pos for n in self.nodes.values() if not n.depleted}
        blocked |= {s.pos for s in self.stations.values()}
        blocked |= {b.pos for a, b in self.bodies.items() if a != exclude_agent}
        return blocked

    def free_adjacent_cell(self, pos: tuple[int, int]) -> Optional[tuple[int, int]]:
        blocked = self._blocked_cells()
        for d in ("up", "down", "left", "right"):
            dr, dc = MOVES[d]
            cell = (pos[0] + dr, pos[1] + dc)
            if 0 <= cell[0] < GRID and 0 <= cell[1] < GRID and cell not in blocked:
                return cell
        return None

    def bfs_step_adjacent(
        self, start: tuple[int, int], target: tuple[int, int], exclude: Optional[int]
    ) -> Optional[str]:
        """First move of a shortest path to any cell adjacent to target."""
        blocked = self._blocked_cells(exclude_agent=exclude)
        goals = set()
        for dr, dc in MOVES.values():
            cell = (target[0] + dr, target[1] + dc)
            if 0 <= cell[0] < GRID and 0 <= cell[1] < GRID and cell not in blocked:
                goals.add(cell)
        if not goals:
            return None
        prev: dict[tuple[int, int], tuple[tuple[int, int], str]] = {}
        q = deque([start])
        seen = {start}
        found = None
        while q:
            cur = q.popleft()
            if cur in goals:
                found = cur
                break
            for name in ("up", "down", "left", "right"):
                dr, dc = MOVES[name]
                nxt = (cur[0] + dr, cur[1] + dc)
                if (
                    0 <= nxt[0] < GRID
                    and 0 <= nxt[1] < GRID
                    and nxt not in blocked
                    and nxt not in seen
                ):
                    seen.add(nxt)
                    prev[nxt] = (cur, name)
                    q.append(nxt)
        if found is None:
            return None
        cur = found
        move = None
        while cur != start:
            cur, move = prev[cur]
        return move

    # -- dynamics -----------------------------------------------------------

    def noop_action(self) -> str:
        return "noop"

    def noop_concept(self) -> str:
        return "idle()"

    def step(self, actions: dict[int, str]) -> StepInfo:
        before = self.snapshot()
        full = {a: actions.get(a, "noop") for a in self.bodies}
        capability_gains = 0

        # Movement first: conservative, no swaps or follows, lowest id wins.
        pre_agent_cells = {b.pos for b in self.bodies.values()}
        static = {n.pos for n in self.nodes.values() if not n.depleted}
        static |= {s.pos for s in self.stations.values()}
        claimed: set[tuple[int, int]] = set()
        for aid in sorted(self.bodies):
            act = full[aid]
            if act not in MOVES:
                continue
            dr, dc = MOVES[act]
            body = self.bodies[aid]
            tgt = (body.pos[0] + dr, body.pos[1] + dc)
            if not (0 <= tgt[0] < GRID and 0 <= tgt[1] < GRID):
                continue
            if tgt in static or tgt in pre_agent_cells or tgt in claimed:
                continue
            body.pos = tgt
            claimed.add(tgt)

        # Capabilities are sampled at action time, after movement resolves.
        caps = [
            CapabilityState(
                agent=a,
                position=self.bodies[a].pos,
                tools=frozenset(self.bodies[a].tools),
                inventory=tuple(sorted(self.bodies[a].inventory.items())),
                action=full[a],
            )
            for a in sorted(self.bodies)
        ]

        verdicts = []
        for task in self.active_tasks():
            tool = task.required_tool
            task.dependencies = [
                Dependency(
                    "team_has_tool",
                    tool is None
                    or any(tool_at_least(b.tools, tool) for b in self.bodies.values()),
                )
            ]
            verdicts.append(evaluate(task, caps, self._t))

        # Quorum collection.
        attempts: dict[int, list[int]] = {}
        for aid in sorted(self.bodies):
            act = full[aid]
            if act.startswith("collect:"):
                try:
                    nid = int(act.split(":", 1)[1])
                except ValueError:
                    continue
                attempts.setdefault(nid, []).append(aid)
        for nid in sorted(attempts):
            node = self.nodes.get(nid)
            if node is None or node.depleted:
                continue
            rule = self.coop_rules[node.kind]
            p = int(rule["required_agents"]) if self.coop_enabled else 1
            quorum = []
            for aid in attempts[nid]:
                body = self.bodies[aid]
                near = (
                    abs(body.pos[0] - node.pos[0]) + abs(body.pos[1] - node.pos[1])
                    <= self.distance_threshold
                )
                if near and tool_at_least(body.tools, rule.get("required_tool")):
                    quorum.append(aid)
            if len(quorum) >= p:
                node.depleted = True
                self._tasks[nid].state = "done"
                resource = RESOURCE_OF_NODE[node.kind]
                for aid in quorum:
                    if self.bodies[aid].gain(resource):
                        self.collected[resource] = self.collected.get(resource, 0) + 1
                self.quorum_collections += 1

        # Placement.
        for aid in sorted(self.bodies):
            act = full[aid]
            if not act.startswith("place:"):
                continue
            kind = act.split(":", 1)[1]
            if kind not in PLACE_COSTS:
                continue
            body = self.bodies[aid]
            cell = self.free_adjacent_cell(body.pos)
            if cell is None or not body.has(PLACE_COSTS[kind]):
                continue
            body.spend(PLACE_COSTS[kind])
            self.stations[self._next_station_id] = Station(
                self._next_station_id, kind, cell
            )
            self._next_station_id += 1

        # Crafting.
        for aid in sorted(self.bodies):
            act = full[aid]
            if not act.startswith("craft:"):
                continue
            tool = act.split(":", 1)[1]
            recipe = RECIPES.get(tool)
            if recipe is None:
                continue
            body = self.bodies[aid]
            if not self.near_station(body.pos, recipe["station"]):
                continue
            if not body.has(recipe["inputs"]):
                continue
            body.spend(recipe["inputs"])
            if tool not in body.tools:
                body.tools.add(tool)
                capability_gains += 1

        # Sharing: all-or-nothing transfer, gated on sender stock and
        # recipient bag capacity.
        for aid in sorted(self.bodies):
            act = full[aid]
            if not act.startswith("share:"):
                continue
            try:
                _, rcpt_s, resource, qty_s = act.split(":", 3)
                rcpt, qty = int(rcpt_s), int(qty_s)
            except ValueError:
                continue
            if rcpt == aid or rcpt not in self.bodies or qty < 1:
                continue
            sender, receiver = self.bodies[aid], self.bodies[rcpt]
            if sender.inventory.get(resource, 0) < qty:
                continue
            if sum(receiver.inventory.values()) + qty > BAG_CAPACITY:
                continue
            sender.spend({resource: qty})
            receiver.inventory[resource] = receiver.inventory.get(resource, 0) + qty

        self._t += 1
        return StepInfo(
            state_before=before,
            state_after=self.snapshot(),
            capabilities=caps,
            verdicts=verdicts,
            capability_gains=capability_gains,
        )

    def snapshot(self) -> dict[str, Any]:
        return {
            "t": self._t,
            "agents": {
                str(a): {
                    "pos": list(b.pos),
                    "tools": sorted(b.tools),
                    "inventory": dict(sorted(b.inventory.items())),
                }
                for a, b in sorted(self.bodies.items())
            },
            "nodes": {
                str(n.node_id): {"kind": n.kind, "pos": list(n.pos)}
                for n in sorted(self.nodes.values(), key=lambda n: n.node_id)
                if not n.depleted
            },
            "stations": {
                str(s.station_id): {"kind": s.kind, "pos": list(s.pos)}
                for s in sorted(self.stations.values(), key=lambda s: s.station_id)
            },
            "collected": dict(sorted(self.collected.items())),
            "quorum_collections": self.quorum_collections,
        }

    # -- concepts -----------------------------------------------------------

    def compile(self, agent: int, concept: str) -> ConceptExecutor:
        kind, args = parse_concept(concept)
        if kind in ("idle", "act", "noop"):
            steps = int(args[0]) if args else 1
            if not 1 <= steps <= 100:
                raise ConceptError("noop steps must be in [1, 100]")
            return _RepeatExecutor(concept, "noop", steps)
        if kind == "move":
            if not args or args[0] not in MOVES:
                raise ConceptError(f"move() needs one of {sorted(MOVES)}")
            steps = int(args[1]) if len(args) > 1 else 1
            if not 1 <= steps <= 5:
                raise ConceptError("move steps must be in [1, 5]")
            return _RepeatExecutor(concept, args[0], steps)
        if kind == "navigate":
            if not args:
                raise ConceptError("navigate() needs a target reference")
            otype, oid = parse_object_ref(args[0])
            timeout = int(args[1]) if len(args) > 1 else 30
            if not 1 <= timeout <= 100:
                raise ConceptError("navigate timeout must be in [1, 100]")
            if self.locate(otype, oid) is None:
                raise ConceptError(f"no target: {otype}#{oid}")
            return _NavigateExecutor(concept, otype, oid, timeout)
        if kind == "collect":
            if len(args) != 1:
                raise ConceptError("collect() needs a node reference")
            otype, oid = parse_object_ref(args[0])
            if otype not in NODE_TYPES:
                raise ConceptError(f"collect() target must be a resource node, got {otype!r}")
            return _CollectExecutor(concept, otype, oid)
        if kind == "craft":
            if len(args) != 1 or args[0] not in RECIPES:
                raise ConceptError(f"craft() needs one of {sorted(RECIPES)}")
            return _CraftExecutor(concept, args[0])
        if kind == "place":
            if len(args) != 1 or args[0] not in PLACE_COSTS:
                raise ConceptError("place() needs 'table' or 'furnace'")
            return _PlaceExecutor(concept, args[0])
        if kind == "share":
            if len(args) != 3:
                raise ConceptError("share() needs (agent#id, resource, quantity)")
            otype, oid = parse_object_ref(args[0])
            if otype != "agent":
                raise ConceptError(f"share() recipient must be an agent, got {otype!r}")
            resource = args[1]
            if resource not in RESOURCE_OF_NODE.values():
                raise ConceptError(f"unknown resource: {resource!r}")
            qty = int(args[2])
            if qty < 1:
                raise ConceptError("share quantity must be positive")
            return _ShareExecutor(concept, oid, resource, qty)
        raise ConceptError(f"unknown craftlite concept kind: {kind!r}")

    # -- observation --------------------------------------------------------

    OBS_RADIUS = 7

    def observe(self, agent: int) -> np.ndarray:
        r0, c0 = self.bodies[agent].pos
        side = 2 * self.OBS_RADIUS + 1
        obs = np.zeros((6, side, side), dtype=np.float32)

        def local(r, c):
            lr, lc = r - r0 + self.OBS_RADIUS, c - c0 + self.OBS_RADIUS
            if 0 <= lr < side and 0 <= lc < side:
                return lr, lc
            return None

        obs[0, self.OBS_RADIUS, self.OBS_RADIUS] = 1.0
        for a, b in self.bodies.items():
            if a != agent and (lc := local(*b.pos)):
                obs[1, lc[0], lc[1]] = 1.0
        for n in self.nodes.values():
            if n.depleted:
                continue
            if lc := local(*n.pos):
                if n.kind == "tree":
                    obs[2, lc[0], lc[1]] = 1.0
                else:
                    obs[3, lc[0], lc[1]] = (NODE_TYPES.index(n.kind)) / len(NODE_TYPES)
        for s in self.stations.values():
            if lc := local(*s.pos):
                obs[4, lc[0], lc[1]] = 1.0 if s.kind == "table" else 0.5
        for r in range(r0 - self.OBS_RADIUS, r0 + self.OBS_RADIUS + 1):
            for c in range(c0 - self.OBS_RADIUS, c0 + self.OBS_RADIUS + 1):
                if 0 <= r < GRID and 0 <= c < GRID and (lc := local(r, c)):
                    obs[5, lc[0], lc[1]] = 1.0
        return obs

    def describe(self, agent: int) -> dict[str, Any]:
        body = self.bodies[agent]
        return {
            "env": self.name,
            "you": f"agent_{agent}",
            "position": list(body.pos),
            "inventory": dict(sorted(body.inventory.items())),
            "tools": sorted(body.tools),
            "agents": {str(a): list(b.pos) for a, b in sorted(self.bodies.items())},
            "nodes": [
                {
                    "id": n.node_id,
                    "kind": n.kind,
                    "pos": list(n.pos),
                    "required_agents": int(self.coop_rules[n.kind]["required_agents"]),
                    "required_tool": self.coop_rules[n.kind].get("required_tool"),
                }
                for n in sorted(self.nodes.values(), key=lambda n: n.node_id)
                if not n.depleted
                and max(abs(n.pos[0] - body.pos[0]), abs(n.pos[1] - body.pos[1]))
                <= self.OBS_RADIUS
            ],
            "cooperative_collection": {
                "enabled": self.coop_enabled,
                "distance_threshold": self.distance_threshold,
                "resources": self.coop_rules,
            },
            "stations": [
                {"id": s.station_id, "kind": s.kind, "pos": list(s.pos)}
                for s in sorted(self.stations.values(), key=lambda s: s.station_id)
            ],
            "mission": {
                "wood_target": self.wood_target,
                "wood_collected": self.collected.get("wood", 0),
            },
        }

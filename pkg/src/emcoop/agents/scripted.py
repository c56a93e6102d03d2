"""Deterministic scripted policies.

All of them are cheap stand-ins for a language-model backend: the idler and
random walker exercise the loop machinery, the greedy collector acts alone,
the oracle coordinator solves episodes from full observability, and the
feedback follower conditions its target choice on constraint feedback.
"""

from __future__ import annotations

import json
import random
from typing import Any, Optional

from ..envs.craftlite import CraftliteEnv, NODE_TYPES
from ..envs.cube import CubeEnv, DIRS, PRIMITIVES, left_face_cells
from .base import (
    REPLAN,
    RESUME,
    InterruptDecision,
    PlanDecision,
    Policy,
    PolicyContext,
)


def _noop_concept(env) -> str:
    return "act(STAY)" if env.name == "cube" else "idle()"


class IdlerPolicy(Policy):
    """Plans a single no-op every interval."""

    def plan(self, ctx: PolicyContext) -> PlanDecision:
        return PlanDecision([_noop_concept(ctx.env)])


class RandomWalkerPolicy(Policy):
    """Seeded uniform wandering; opportunistic collects in craftlite."""

    def __init__(self, seed: int, agent: int):
        self.rng = random.Random(seed * 1_000_003 + agent)

    def plan(self, ctx: PolicyContext) -> PlanDecision:
        env = ctx.env
        if env.name == "cube":
            return PlanDecision([f"act({self.rng.choice(PRIMITIVES)})"])
        assert isinstance(env, CraftliteEnv)
        pos = env.bodies[ctx.agent].pos
        near = [
            n
            for n in env.nodes.values()
            if not n.depleted
            and abs(pos[0] - n.pos[0]) + abs(pos[1] - n.pos[1]) <= env.distance_threshold
        ]
        if near and self.rng.random() < 0.5:
            node = min(near, key=lambda n: n.node_id)
            return PlanDecision([f"collect({node.kind}#{node.node_id})"])
        move = self.rng.choice(["up", "down", "left", "right", "noop"])
        if move == "noop":
            return PlanDecision(["idle()"])
        return PlanDecision([f"move({move})"])

    def on_interrupt(self, ctx: PolicyContext) -> InterruptDecision:
        if self.rng.random() < 0.5:
            return InterruptDecision(RESUME)
        return InterruptDecision(REPLAN, self.plan(ctx).concepts)

    def peer_messages(self, ctx: PolicyContext) -> list[tuple[list[int], str]]:
        others = [a for a in range(ctx.topology.n_agents) if a != ctx.agent]
        if others and self.rng.random() < 0.3:
            return [([self.rng.choice(others)], json.dumps({"ping": ctx.step}))]
        return []


class GreedyCollectorPolicy(Policy):
    """Heads for the nearest objective and works it without coordination."""

    def plan(self, ctx: PolicyContext) -> PlanDecision:
        env = ctx.env
        if env.name == "cube":
            assert isinstance(env, CubeEnv)
            if not env.blocks:
                return PlanDecision(["act(STAY)"])
            pos = env.agent_pos[ctx.agent]
            block = min(
                env.blocks.values(),
                key=lambda b: (abs(pos[0] - b.row) + abs(pos[1] - b.col), b.block_id),
            )
            slots = left_face_cells(block, env.height)
            if pos in slots:
                return PlanDecision([f"push(block#{block.block_id})"])
            return PlanDecision([f"navigate(block#{block.block_id}, 0)"])
        assert isinstance(env, CraftliteEnv)
        pos = env.bodies[ctx.agent].pos
        trees = [n for n in env.nodes.values() if n.kind == "tree" and not n.depleted]
        if not trees:
            return PlanDecision(["idle()"])
        node = min(
            trees,
            key=lambda n: (abs(pos[0] - n.pos[0]) + abs(pos[1] - n.pos[1]), n.node_id),
        )
        if abs(pos[0] - node.pos[0]) + abs(pos[1] - node.pos[1]) <= env.distance_threshold:
            return PlanDecision([f"collect(tree#{node.node_id})"])
        return PlanDecision([f"navigate(tree#{node.node_id})", f"collect(tree#{node.node_id})"])


def _cube_target(env: CubeEnv) -> Optional[Any]:
    """Undelivered block closest to delivery (rightmost right edge first)."""
    if not env.blocks:
        return None
    return max(
        env.blocks.values(), key=lambda b: (b.col + b.weight - 1, -b.block_id)
    )


def _craftlite_team_target(env: CraftliteEnv) -> Optional[Any]:
    """Tree nearest the team centroid; every agent computes the same answer."""
    trees = [n for n in env.nodes.values() if n.kind == "tree" and not n.depleted]
    if not trees:
        return None
    rs = [b.pos[0] for b in env.bodies.values()]
    cs = [b.pos[1] for b in env.bodies.values()]
    cr, cc = sum(rs) / len(rs), sum(cs) / len(cs)
    return min(trees, key=lambda n: (abs(n.pos[0] - cr) + abs(n.pos[1] - cc), n.node_id))


class OracleCoordinatorPolicy(Policy):
    """Solves episodes from full observability with implicit coordination."""

    def plan(self, ctx: PolicyContext) -> PlanDecision:
        env = ctx.env
        if env.name == "cube":
            return PlanDecision([self._cube_concept(env, ctx.agent)])
        return PlanDecision(self._craftlite_concepts(env, ctx.agent))

    def _cube_concept(self, env: CubeEnv, agent: int) -> str:
        block = _cube_target(env)
        if block is None:
            return "act(STAY)"
        cells = self._pusher_cells(env, block)
        assignment = self._assignment_for(env, block, cells)
        by_cell = {c: a for a, c in assignment.items()}
        pos = env.agent_pos[agent]
        if agent in assignment:
            goal = assignment[agent]
            manned_flags = [env.agent_pos[by_cell[c]] == c for c in cells if c in by_cell]
            if all(manned_flags):
                if goal[1] == block.col - 1:
                    return f"push(block#{block.block_id})"
                return "act(RIGHT)"  # chain force from behind the front pusher
            first_unmanned = manned_flags.index(False)
            my_rank = cells.index(goal)
            # Standing on a teammate's cell with my own goal one step away
            # and free: slide over now, whatever the fill order says.
            if (
                pos != goal
                and pos in cells
                and self._adjacent_cells(pos, goal)
                and goal not in env.agent_pos.values()
            ):
                dr, dc = goal[0] - pos[0], goal[1] - pos[1]
                for name, delta in DIRS.items():
                    if delta == (dr, dc):
                        return f"act({name})"
            if my_rank == first_unmanned:
                step = env.bfs_step(pos, goal, avoid_agents=True, exclude=agent)
                return f"act({step})" if step else "act(STAY)"
            # Cells are filled most-enclosed first; a parked agent steps aside
            # only when the slot being filled is unreachable around it.
            if pos == goal:
                open_cell = cells[first_unmanned]
                approacher = by_cell.get(open_cell)
                blocked = approacher is not None and (
                    env.bfs_step(
                        env.agent_pos[approacher], open_cell,
                        avoid_agents=True, exclude=approacher,
                    )
                    is None
                    and env.agent_pos[approacher] != open_cell
                )
                if blocked and self._adjacent_cells(goal, open_cell):
                    return self._escape(env, pos, set(cells))
                return "act(STAY)"
            if my_rank < first_unmanned:
                step = env.bfs_step(pos, goal, avoid_agents=True, exclude=agent)
                return f"act({step})" if step else "act(STAY)"
            return "act(STAY)"
        # Bystander: keep out of the push corridor and the pushing cells.
        rows = range(block.row, block.row + block.weight)
        corridor = {(r, c) for r in rows for c in range(block.col, env.width)}
        keep_out = corridor | set(cells)
        if pos in keep_out:
            for name, (dr, dc) in DIRS.items():
                nxt = (pos[0] + dr, pos[1] + dc)
                if (
                    0 <= nxt[0] < env.height
                    and 0 <= nxt[1] < env.width
                    and nxt not in keep_out
                    and nxt not in env.agent_pos.values()
                    and all(nxt not in b.cells for b in env.blocks.values())
                ):
                    return f"act({name})"
            return "act(STAY)"
        return "act(STAY)"

    def _assignment_for(self, env: CubeEnv, block, cells) -> dict[int, tuple[int, int]]:
        """Stable slot assignment: recomputed only when the target block or
        its pusher cells change, so agents never steal each other's slots.
        Every agent derives the same mapping from the shared state."""
        key = (block.block_id, block.row, block.col, tuple(cells))
        cached = getattr(self, "_assign_cache", None)
        if cached is not None and cached[0] == key:
            assignment = cached[1]
        else:
            assignment = self._assign(env, cells)
        self._corridor_fixup(env, cells, assignment)
        self._assign_cache = (key, assignment)
        return assignment

    def _corridor_fixup(self, env: CubeEnv, cells, assignment) -> bool:
        """When the next cell to man is walled off behind a parked teammate
        that has nowhere to step aside, swap their goals so the parked agent
        slides deeper instead. Pure function of shared state, so every agent
        applies the identical swap in the same interval."""
        by_cell = {c: a for a, c in assignment.items()}
        open_cell = None
        for c in cells:
            a = by_cell.get(c)
            if a is None or env.agent_pos[a] != c:
                open_cell = c
                break
        if open_cell is None:
            return False
        approacher = by_cell.get(open_cell)
        if approacher is None or env.agent_pos[approacher] == open_cell:
            return False
        if open_cell in env.agent_pos.values():
            return False
        if (
            env.bfs_step(
                env.agent_pos[approacher], open_cell,
                avoid_agents=True, exclude=approacher,
            )
            is not None
        ):
            return False
        for c in cells:
            a = by_cell.get(c)
            if (
                a is not None
                and env.agent_pos[a] == c
                and self._adjacent_cells(c, open_cell)
                and self._escape(env, c, set(cells)) == "act(STAY)"
            ):
                assignment[a], assignment[approacher] = open_cell, c
                return True
        return False

    def _assign(self, env: CubeEnv, cells: list[tuple[int, int]]) -> dict[int, tuple[int, int]]:
        """Deterministic agent-to-cell matching that never swaps two agents
        across each other: whoever already stands on a cell keeps it, the
        rest are matched greedily by distance."""
        assignment: dict[int, tuple[int, int]] = {}
        remaining = sorted(env.agent_pos)
        open_cells = list(cells)
        for c in list(open_cells):
            for a in remaining:
                if env.agent_pos[a] == c:
                    assignment[a] = c
                    remaining.remove(a)
                    open_cells.remove(c)
                    break
        for c in open_cells:
            if not remaining:
                break
            best = min(
                remaining,
                key=lambda a: (
                    abs(env.agent_pos[a][0] - c[0]) + abs(env.agent_pos[a][1] - c[1]),
                    a,
                ),
            )
            assignment[best] = c
            remaining.remove(best)
        return assignment

    def _pusher_cells(self, env: CubeEnv, block) -> list[tuple[int, int]]:
        """Cells supplying push force: free left-face slots first, then the
        cells directly behind them so stacked agents chain their force."""
        block_cells = {c for b in env.blocks.values() for c in b.cells}
        columns = []
        for slot in left_face_cells(block, env.height):
            if slot in block_cells:
                continue
            col = []
            r, c = slot
            while c >= 0 and (r, c) not in block_cells:
                col.append((r, c))
                c -= 1
            columns.append(col)
        ordered: list[tuple[int, int]] = []
        depth = 0
        while len(ordered) < block.weight and any(len(col) > depth for col in columns):
            for col in columns:
                if len(col) > depth and len(ordered) < block.weight:
                    ordered.append(col[depth])
            depth += 1
        chosen = ordered[: block.weight]

        # Fill most-enclosed cells first so teammates can't box them out.
        chosen_set = set(chosen)

        def enclosure(cell):
            score = 0
            for dr, dc in DIRS.values():
                nb = (cell[0] + dr, cell[1] + dc)
                if not (0 <= nb[0] < env.height and 0 <= nb[1] < env.width):
                    score += 1
                elif nb in block_cells or nb in chosen_set:
                    score += 1
            return score

        chosen.sort(key=lambda c: (-enclosure(c), c))
        return chosen

    @staticmethod
    def _adjacent_cells(a: tuple[int, int], b: tuple[int, int]) -> bool:
        return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1

    def _escape(self, env: CubeEnv, pos: tuple[int, int], keep_out: set) -> str:
        block_cells = {c for b in env.blocks.values() for c in b.cells}
        for name, (dr, dc) in DIRS.items():
            nxt = (pos[0] + dr, pos[1] + dc)
            if (
                0 <= nxt[0] < env.height
                and 0 <= nxt[1] < env.width
                and nxt not in keep_out
                and nxt not in block_cells
                and nxt not in env.agent_pos.values()
            ):
                return f"act({name})"
        return "act(STAY)"

    def _craftlite_concepts(self, env: CraftliteEnv, agent: int) -> list[str]:
        node = _craftlite_team_target(env)
        if node is None:
            return ["idle()"]
        pos = env.bodies[agent].pos
        ref = f"tree#{node.node_id}"
        if abs(pos[0] - node.pos[0]) + abs(pos[1] - node.pos[1]) <= env.distance_threshold:
            return [f"collect({ref})"]
        return [f"navigate({ref})", f"collect({ref})"]

    def on_interrupt(self, ctx: PolicyContext) -> InterruptDecision:
        return InterruptDecision(REPLAN, self.plan(ctx).concepts)

    def compose_message(self, ctx: PolicyContext, purpose: str) -> str:
        env = ctx.env
        if env.name == "cube":
            block = _cube_target(env)
            return json.dumps({"target": block.block_id if block else None})
        node = _craftlite_team_target(env)
        return json.dumps({"target": node.node_id if node else None})


class FollowFeedbackPolicy(Policy):
    """Targets the task closest to quorum when constraint feedback is on.

    Without feedback each agent falls back to its own nearest tree, so the
    team frequently splits below quorum; with feedback everyone converges on
    the most advanced task.
    """

    def plan(self, ctx: PolicyContext) -> PlanDecision:
        env = ctx.env
        assert isinstance(env, CraftliteEnv)
        node = self._pick_target(ctx)
        if node is None:
            return PlanDecision(["idle()"])
        pos = env.bodies[ctx.agent].pos
        ref = f"tree#{node.node_id}"
        if abs(pos[0] - node.pos[0]) + abs(pos[1] - node.pos[1]) <= env.distance_threshold:
            return PlanDecision([f"collect({ref})"])
        return PlanDecision([f"navigate({ref})", f"collect({ref})"])

    def _pick_target(self, ctx: PolicyContext):
        env: CraftliteEnv = ctx.env
        trees = {
            n.node_id: n
            for n in env.nodes.values()
            if n.kind == "tree" and not n.depleted
        }
        if not trees:
            return None
        if ctx.feedback:
            best = None
            for task_id, snap in sorted(ctx.feedback.items()):
                if "(tree#" not in task_id:
                    continue
                nid = int(task_id.split("#")[1].rstrip(")"))
                if nid not in trees:
                    continue
                key = (snap["ratio"], -nid)
                if best is None or key > best[0]:
                    best = (key, nid)
            if best is not None:
                return trees[best[1]]
        pos = env.bodies[ctx.agent].pos
        return min(
            trees.values(),
            key=lambda n: (abs(pos[0] - n.pos[0]) + abs(pos[1] - n.pos[1]), n.node_id),
        )

    def on_interrupt(self, ctx: PolicyContext) -> InterruptDecision:
        for msg in ctx.inbox:
            try:
                payload = json.loads(msg.payload)
            except json.JSONDecodeError:
                continue
            target = payload.get("target")
            if isinstance(target, int):
                env: CraftliteEnv = ctx.env
                node = env.nodes.get(target)
                if node and not node.depleted:
                    pos = env.bodies[ctx.agent].pos
                    ref = f"{node.kind}#{node.node_id}"
                    near = (
                        abs(pos[0] - node.pos[0]) + abs(pos[1] - node.pos[1])
                        <= env.distance_threshold
                    )
                    concepts = (
                        [f"collect({ref})"]
                        if near
                        else [f"navigate({ref})", f"collect({ref})"]
                    )
                    return InterruptDecision(REPLAN, concepts)
        return InterruptDecision(RESUME)

    def compose_message(self, ctx: PolicyContext, purpose: str) -> str:
        node = self._pick_target(ctx)
        body: dict[str, Any] = {"target": node.node_id if node else None}
        if ctx.feedback and node is not None:
            body["feedback"] = ctx.feedback.get(f"collect(tree#{node.node_id})")
        return json.dumps(body, sort_keys=True)


SCRIPTED_POLICIES = {
    "idler": IdlerPolicy,
    "random-walker": RandomWalkerPolicy,
    "greedy-collector": GreedyCollectorPolicy,
    "oracle-coordinator": OracleCoordinatorPolicy,
    "follow-feedback": FollowFeedbackPolicy,
}


def make_scripted_policy(name: str, seed: int, agent: int) -> Policy:
    if name not in SCRIPTED_POLICIES:
        raise ValueError(f"unknown scripted policy: {name!r}")
    if name == "random-walker":
        return RandomWalkerPolicy(seed, agent)
    return SCRIPTED_POLICIES[name]()

"""Grid push dynamics, concept grounding and generation for the cube env."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cube_oracle import oracle_step
from emcoop.envs.base import CONTINUE, DONE, ConceptError
from emcoop.envs.cube import PRIMITIVES, Block, CubeEnv, resolve_step


def small_env(blocks, agents, size=6):
    return CubeEnv(size, size, agents, blocks, difficulty="custom")


class TestResolveStepOracle:
    def test_matches_brute_force_on_3x3(self):
        # Exhaustive comparison on a 3x3 board, one unit block, <= 2 agents.
        size = 3
        cells = [(r, c) for r in range(size) for c in range(size)]
        for br, bc in cells:
            block = Block(0, 1, br, bc)
            free = [c for c in cells if c != (br, bc)]
            layouts = [{}] + [{0: a} for a in free] + [
                {0: a, 1: b} for a, b in itertools.permutations(free, 2)
            ]
            for agents in layouts:
                for acts in itertools.product(PRIMITIVES, repeat=len(agents)):
                    actions = dict(zip(sorted(agents), acts))
                    got = resolve_step(size, size, agents, {0: block}, actions)
                    want = oracle_step(size, size, agents, {0: block}, actions)
                    assert (got.agents, got.blocks, got.delivered) == want, (
                        agents, block, actions
                    )

    def test_stay_is_a_fixed_point(self):
        agents = {0: (0, 0), 1: (2, 2)}
        blocks = {0: Block(0, 2, 3, 1)}
        res = resolve_step(6, 6, agents, blocks, {0: "STAY", 1: "STAY"})
        assert res.agents == agents and res.blocks == blocks
        assert res.delivered == [] and not any(res.moved.values())

    def test_underpowered_push_fails(self):
        res = resolve_step(6, 6, {0: (2, 0)}, {0: Block(0, 2, 1, 1)}, {0: "RIGHT"})
        assert res.blocks[0] == Block(0, 2, 1, 1)
        assert len(res.pushes) == 1 and not res.pushes[0].succeeded

    def test_chain_force_moves_heavy_block(self):
        agents = {0: (2, 0), 1: (1, 1), 2: (2, 1)}
        res = resolve_step(8, 8, agents, {0: Block(0, 2, 1, 2)},
                           {0: "RIGHT", 1: "RIGHT", 2: "RIGHT"})
        assert res.blocks[0].col == 3
        assert res.agents == {0: (2, 1), 1: (1, 2), 2: (2, 2)}
        assert res.pushes[0].force == 3

    def test_conflicting_pushes_cancel(self):
        # Two full-strength pushes on perpendicular faces both succeed in
        # isolation; together they conflict and the block stays put.
        agents = {0: (1, 1), 1: (2, 1), 2: (3, 2), 3: (3, 3)}
        blocks = {0: Block(0, 2, 1, 2)}
        actions = {0: "RIGHT", 1: "RIGHT", 2: "UP", 3: "UP"}
        res = resolve_step(6, 6, agents, blocks, actions)
        assert res.blocks[0] == blocks[0]
        assert res.agents == agents
        assert all(p.succeeded and p.cancelled for p in res.pushes)

    def test_delivery_at_goal_column(self):
        res = resolve_step(4, 4, {0: (1, 1)}, {0: Block(0, 1, 1, 2)}, {0: "RIGHT"})
        assert res.delivered == [0] and res.blocks == {}

    @settings(max_examples=200, deadline=None)
    @given(st.data())
    def test_conservation_invariants(self, data):
        size = 6
        cells = [(r, c) for r in range(size) for c in range(size)]
        w = data.draw(st.integers(min_value=1, max_value=2))
        br = data.draw(st.integers(min_value=0, max_value=size - w))
        bc = data.draw(st.integers(min_value=0, max_value=size - w))
        block = Block(0, w, br, bc)
        free = [c for c in cells if c not in block.cells]
        n = data.draw(st.integers(min_value=1, max_value=3))
        agent_cells = data.draw(
            st.lists(st.sampled_from(free), min_size=n, max_size=n, unique=True)
        )
        agents = dict(enumerate(agent_cells))
        actions = {a: data.draw(st.sampled_from(PRIMITIVES)) for a in agents}
        res = resolve_step(size, size, agents, {0: block}, actions)
        assert set(res.agents) == set(agents)  # nobody appears or vanishes
        assert len(set(res.agents.values())) == len(agents)  # no overlap
        occupied = {c for b in res.blocks.values() for c in b.cells}
        assert not occupied & set(res.agents.values())
        for pos in res.agents.values():
            assert 0 <= pos[0] < size and 0 <= pos[1] < size
        for b in res.blocks.values():
            assert all(0 <= r < size and 0 <= c < size for r, c in b.cells)


class TestConcepts:
    def test_wait_expands_to_two_stays(self):
        env = small_env([Block(0, 1, 3, 3)], {0: (0, 0)})
        ex = env.compile(0, "wait(2)")
        assert ex.propose(env, 0) == "STAY"
        assert ex.after_step(env, 0).status == CONTINUE
        assert ex.propose(env, 0) == "STAY"
        assert ex.after_step(env, 0).status == DONE

    def test_move_right_three(self):
        env = small_env([Block(0, 1, 4, 4)], {0: (0, 0)})
        ex = env.compile(0, "move(right,3)")
        emitted = []
        for _ in range(3):
            emitted.append(ex.propose(env, 0))
            env.step({0: emitted[-1]})
        assert emitted == ["RIGHT", "RIGHT", "RIGHT"]
        assert env.agent_pos[0] == (0, 3)

    def test_act_requires_primitive(self):
        env = small_env([Block(0, 1, 3, 3)], {0: (0, 0)})
        with pytest.raises(ConceptError):
            env.compile(0, "act(JUMP)")

    def test_push_direction_derived_from_adjacency(self):
        env = small_env([Block(0, 1, 2, 2)], {0: (2, 1)})
        ex = env.compile(0, "push(block#0)")
        assert ex.propose(env, 0) == "RIGHT"

    def test_push_not_adjacent_is_concept_error(self):
        env = small_env([Block(0, 1, 2, 2)], {0: (0, 0)})
        ex = env.compile(0, "push(block#0)")
        with pytest.raises(ConceptError):
            ex.propose(env, 0)

    def test_push_step_bounds(self):
        env = small_env([Block(0, 1, 2, 2)], {0: (2, 1)})
        with pytest.raises(ConceptError):
            env.compile(0, "push(block#0,11)")

    def test_navigate_reaches_left_face(self):
        env = small_env([Block(0, 1, 2, 3)], {0: (0, 0)})
        ex = env.compile(0, "navigate(block#0,0,30)")
        for _ in range(30):
            env.step({0: ex.propose(env, 0)})
            if ex.after_step(env, 0).status == DONE:
                break
        assert env.agent_pos[0] == (2, 2)

    def test_navigate_non_block_target_rejected(self):
        env = small_env([Block(0, 1, 2, 3)], {0: (0, 0)})
        with pytest.raises(ConceptError):
            env.compile(0, "navigate(tree#0,0,30)")


class TestGeneration:
    @pytest.mark.parametrize("difficulty,weights", [("easy", [1, 1, 1]),
                                                    ("hard", [1, 2, 3])])
    def test_weights_by_difficulty(self, difficulty, weights):
        env = CubeEnv.generate(difficulty, 3, seed=0)
        assert sorted(b.weight for b in env.blocks.values()) == sorted(weights)
        assert env.width == env.height == 8

    def test_easy_hard_blocks_never_touch(self):
        for difficulty in ("easy", "hard"):
            for seed in range(10):
                env = CubeEnv.generate(difficulty, 3, seed=seed)
                blocks = list(env.blocks.values())
                for i, a in enumerate(blocks):
                    for b in blocks[i + 1:]:
                        gap = min(
                            max(abs(r1 - r2), abs(c1 - c2))
                            for r1, c1 in a.cells for r2, c2 in b.cells
                        )
                        assert gap > 1

    def test_agents_spawn_on_free_cells(self):
        env = CubeEnv.generate("hard", 3, seed=5)
        occupied = {c for b in env.blocks.values() for c in b.cells}
        assert len(set(env.agent_pos.values())) == 3
        assert not set(env.agent_pos.values()) & occupied

    def test_auto_24_agents(self):
        env = CubeEnv.generate("auto", 24, seed=7)
        assert env.width == env.height == 24
        weights = sorted(b.weight for b in env.blocks.values())
        # heaviest class is bounded by the team-scaled cap and the total
        # footprint stays well under half the board
        assert weights[-1] <= 24 // 2 + 1
        assert sum(w * w for w in weights) <= 24 * 24 // 2
        blocks = list(env.blocks.values())
        for b in blocks:
            # never flush against a wall
            assert all(0 < r < env.height - 1 and 0 < c < env.width - 1
                       for r, c in b.cells)
        for i, a in enumerate(blocks):
            for b in blocks[i + 1:]:
                gap = min(
                    max(abs(r1 - r2), abs(c1 - c2))
                    for r1, c1 in a.cells for r2, c2 in b.cells
                )
                assert gap > 1
        # agents start on the column opposite the goal
        assert all(c == 0 for _, c in env.agent_pos.values())

    def test_auto_scales_board_with_team(self):
        assert CubeEnv.generate("auto", 3, seed=0).width == 20
        assert CubeEnv.generate("auto", 40, seed=0).width == 40


class TestObservation:
    def test_channels(self):
        env = small_env([Block(0, 2, 2, 2)], {0: (0, 0), 1: (5, 5)})
        obs = env.observe(0)
        assert obs.shape == (5, 6, 6)
        assert obs[0, 0, 0] == 1.0 and obs[0, 5, 5] == 1.0
        assert obs[0].sum() == 2.0
        assert obs[3, 0, 0] == 1.0 and obs[3, 5, 5] == 2.0  # agent id + 1
        assert obs[1, 2, 2] == 2.0 and obs[1, 3, 3] == 2.0  # block weight
        assert obs[4, 2, 2] == 1.0  # block id + 1
        assert np.all(obs[2, :, 5] == 1.0) and obs[2, :, :5].sum() == 0.0

    def test_describe_mentions_goal_and_blocks(self):
        env = small_env([Block(0, 2, 2, 2)], {0: (0, 0)})
        d = env.describe(0)
        assert d["goal_column"] == 5
        assert d["blocks"][0]["weight"] == 2
        assert d["you"] == "agent_0"


class TestTaskWiring:
    def test_delivery_marks_task_done_and_success(self):
        env = small_env([Block(0, 1, 1, 4)], {0: (1, 3)})
        info = env.step({0: "RIGHT"})
        assert env.team_success
        assert env.outcomes() == {"deliver(block#0)": True}
        assert info.state_after["delivered"] == [0]

    def test_quorum_verdict_counts_chain_members(self):
        # Two collinear pushers on a weight-2 block: both qualify.
        env = small_env([Block(0, 2, 1, 2)], {0: (1, 0), 1: (1, 1)})
        info = env.step({0: "RIGHT", 1: "RIGHT"})
        v = info.verdicts[0]
        assert v.n_qualifying == 2 and v.participation
        assert env.blocks[0].col == 3

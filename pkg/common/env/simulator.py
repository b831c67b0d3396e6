"""
Симулятор сбора данных несколькими БПЛА (Dec-POMDP).

Использование:
    env = HarvestEnv(spec)
    state, observations, global_state = env.reset(rng)
    while True:
        actions = [...]  # из env.feasible_actions(state, i)
        outcome = env.step(state, actions, rng)
        state = outcome.state
        if outcome.episode_done:
            break
"""

import logging

import numpy as np

from common.cache import cached
from common.env.models import (
    DISPLACEMENT,
    ENERGY_COST,
    N_ACTIONS,
    Action,
    EnvSpec,
    EnvState,
    LinkTable,
    MeasurementRecord,
    StepOutcome,
)
from common.env.observations import battery_to_terminal, build_global_state, build_observation
from common.env.scheduler import UNASSIGNED, schedule
from common.exceptions import ConfigError, ContractViolation
from common.world import GridPos, los_many

logger = logging.getLogger(__name__)


class HarvestEnv:
    """
    Среда сбора данных.

    Инстанс однопоточный; параллельные ученики держат свои инстансы.
    Состояние передаётся явно, step() возвращает новое состояние.
    """

    def __init__(self, spec: EnvSpec):
        self.spec = spec
        self._validate()

    @property
    def n_agents(self) -> int:
        return self.spec.n_agents

    @property
    def n_devices(self) -> int:
        return self.spec.n_devices

    def _validate(self) -> None:
        spec = self.spec
        city = spec.city
        altitudes = [u.altitude_m for u in spec.uavs]
        if not spec.uavs:
            raise ConfigError("uavs: at least one UAV is required")
        if len(set(altitudes)) != len(altitudes):
            raise ConfigError("uavs.altitude_m: UAVs must fly at pairwise distinct altitudes")
        for k, device in enumerate(spec.devices):
            if not city.in_bounds(*device.cell):
                raise ConfigError(f"devices[{k}].cell: {list(device.cell)} outside the map")
        for i, uav in enumerate(spec.uavs):
            if not city.flyable(*city.start_cell, uav.altitude_m):
                raise ConfigError(f"uavs[{i}]: start_cell is blocked at {uav.altitude_m} m")
            if (uav.battery_init * 2) != int(uav.battery_init * 2):
                raise ConfigError(f"uavs[{i}].battery_init: must be a multiple of 0.5")
            needed = city.distance_field(uav.altitude_m).steps_to_terminal[city.start_cell[1], city.start_cell[0]]
            if uav.battery_init < needed:
                raise ConfigError(
                    f"uavs[{i}].battery_init: {uav.battery_init} is below the {needed} steps "
                    f"from start to terminal at {uav.altitude_m} m"
                )

    # ---- каналы ----

    @cached(key="los:{ix}:{iy}:{altitude_m}:{k}")
    def device_los(self, ix: int, iy: int, altitude_m: float, k: int) -> bool:
        city = self.spec.city
        dx, dy = self.spec.devices[k].cell
        a = np.array([[(ix + 0.5) * city.cell_size_m, (iy + 0.5) * city.cell_size_m, altitude_m]])
        b = np.array([[(dx + 0.5) * city.cell_size_m, (dy + 0.5) * city.cell_size_m, 0.0]])
        return bool(los_many(city, a, b)[0])

    @cached(key="peer:{ix}:{iy}:{alt_a}:{jx}:{jy}:{alt_b}")
    def peer_los(self, ix: int, iy: int, alt_a: float, jx: int, jy: int, alt_b: float) -> bool:
        city = self.spec.city
        a = np.array([[(ix + 0.5) * city.cell_size_m, (iy + 0.5) * city.cell_size_m, alt_a]])
        b = np.array([[(jx + 0.5) * city.cell_size_m, (jy + 0.5) * city.cell_size_m, alt_b]])
        return bool(los_many(city, a, b)[0])

    def _uav_points(self, positions: np.ndarray) -> np.ndarray:
        cs = self.spec.city.cell_size_m
        alt = np.array([u.altitude_m for u in self.spec.uavs])
        return np.column_stack([(positions[:, 0] + 0.5) * cs, (positions[:, 1] + 0.5) * cs, alt])

    def _device_points(self) -> np.ndarray:
        cs = self.spec.city.cell_size_m
        cells = np.array([d.cell for d in self.spec.devices], dtype=np.float64).reshape(-1, 2)
        return np.column_stack([(cells[:, 0] + 0.5) * cs, (cells[:, 1] + 0.5) * cs, np.zeros(len(cells))])

    def sample_links(self, positions: np.ndarray, rng: np.random.Generator) -> LinkTable:
        """
        Каналы всех пар на текущих позициях.

        Порядок тяг из rng фиксирован: сначала (I, K) устройств, затем
        верхний треугольник пар БПЛА.
        """
        spec = self.spec
        params = spec.channel
        n_agents, n_devices = self.n_agents, self.n_devices
        uavs = self._uav_points(positions)
        devices = self._device_points()

        los = np.array([
            [self.device_los(int(positions[i, 0]), int(positions[i, 1]), spec.uavs[i].altitude_m, k)
             for k in range(n_devices)]
            for i in range(n_agents)
        ], dtype=bool).reshape(n_agents, n_devices)
        delta = uavs[:, None, :] - devices[None, :, :]
        distance = np.linalg.norm(delta, axis=2)
        elevation = np.arcsin(np.clip(uavs[:, None, 2] / np.maximum(distance, 1.0), 0.0, 1.0))
        sigma = np.where(los, spec.radio.shadowing_std(True), spec.radio.shadowing_std(False))
        gain = spec.radio.mean_gain_db(distance, elevation, los) + rng.standard_normal((n_agents, n_devices)) * sigma
        snr = params.tx_power_w * 10.0 ** (0.1 * gain) / params.noise_power_w
        rate = np.log2(1.0 + snr)

        peer_snr = np.zeros((n_agents, n_agents))
        for i in range(n_agents):
            for j in range(i + 1, n_agents):
                peer_los = self.peer_los(
                    int(positions[i, 0]), int(positions[i, 1]), spec.uavs[i].altitude_m,
                    int(positions[j, 0]), int(positions[j, 1]), spec.uavs[j].altitude_m,
                )
                d = float(np.linalg.norm(uavs[i] - uavs[j]))
                elev = float(np.arcsin(min(abs(uavs[i, 2] - uavs[j, 2]) / max(d, 1.0), 1.0)))
                g = float(spec.radio.mean_gain_db(d, elev, peer_los))
                g += rng.standard_normal() * spec.radio.shadowing_std(peer_los)
                peer_snr[i, j] = peer_snr[j, i] = params.tx_power_w * 10.0 ** (0.1 * g) / params.noise_power_w

        return LinkTable(
            device_gain=gain,
            device_los=los,
            device_snr=snr,
            device_rate=rate,
            device_reach=snr >= params.snr_threshold,
            peer_snr=peer_snr,
            peer_reach=peer_snr >= params.snr_threshold,
        )

    # ---- контроллер безопасности ----

    def feasible_actions(self, state: EnvState, uav_index: int) -> frozenset[Action]:
        """
        Допустимые действия по контроллеру безопасности.

        При нулевом заряде допустим только NoOp. Иначе действие допустимо, если
        клетка в границах и пролётна на высоте БПЛА, а остатка заряда хватает
        на кратчайший путь до терминала из новой клетки.
        """
        i = uav_index
        battery = float(state.batteries[i])
        if battery == 0:
            return frozenset({Action.NOOP})

        city = self.spec.city
        altitude = self.spec.uavs[i].altitude_m
        field = city.distance_field(altitude)
        ix, iy = int(state.positions[i, 0]), int(state.positions[i, 1])

        feasible = set()
        for action in Action:
            if action == Action.NOOP:
                continue
            dx, dy = DISPLACEMENT[action]
            nx, ny = ix + dx, iy + dy
            if not city.flyable(nx, ny, altitude):
                continue
            remaining = battery - ENERGY_COST[action]
            if field.reachable(nx, ny) and remaining >= field.at(nx, ny):
                feasible.add(action)

        if not feasible:
            raise ContractViolation(f"UAV {self.spec.uavs[i].id}: empty feasible set at {(ix, iy)}, battery {battery}")
        return frozenset(feasible)

    def feasibility_mask(self, state: EnvState, uav_index: int) -> np.ndarray:
        mask = np.zeros(N_ACTIONS, dtype=np.float64)
        for action in self.feasible_actions(state, uav_index):
            mask[action] = 1.0
        return mask

    # ---- эпизод ----

    def reset(self, rng: np.random.Generator) -> tuple[EnvState, list[np.ndarray], np.ndarray]:
        """Все БПЛА в стартовой клетке, полные батареи и буферы, t = 0."""
        spec = self.spec
        positions = np.tile(np.array(spec.city.start_cell, dtype=np.int64), (self.n_agents, 1))
        state = EnvState(
            t=0,
            positions=positions,
            batteries=np.array([u.battery_init for u in spec.uavs], dtype=np.float64),
            done=np.zeros(self.n_agents, dtype=bool),
            data=np.array([d.data_init for d in spec.devices], dtype=np.float64),
            links=self.sample_links(positions, rng),
            schedule=np.full(self.n_agents, UNASSIGNED, dtype=np.int64),
            frozen_obs=[None] * self.n_agents,
        )
        masks = self._masks(state)
        observations = [build_observation(spec, state, i, masks[i]) for i in range(self.n_agents)]
        return state, observations, build_global_state(spec, state)

    def _masks(self, state: EnvState) -> np.ndarray:
        return np.stack([self.feasibility_mask(state, i) for i in range(self.n_agents)])

    def step(self, state: EnvState, joint_action: list[Action | int], rng: np.random.Generator) -> StepOutcome:
        """
        Один слот: движение, расход заряда, каналы, планирование, сбор данных.

        Raises:
            ContractViolation: действие вне допустимого множества
        """
        spec = self.spec
        dt = spec.env.dt
        if len(joint_action) != self.n_agents:
            raise ContractViolation(f"expected {self.n_agents} actions, got {len(joint_action)}")

        actions = [Action(int(a)) for a in joint_action]
        for i, action in enumerate(actions):
            if action not in self.feasible_actions(state, i):
                raise ContractViolation(
                    f"UAV {spec.uavs[i].id}: action {action.name} is infeasible at t={state.t}"
                )

        active = ~state.done
        new = state.copy()
        new.t = state.t + 1
        for i, action in enumerate(actions):
            dx, dy = DISPLACEMENT[action]
            new.positions[i] += (dx, dy)
            new.batteries[i] -= ENERGY_COST[action]
        new.done = new.batteries == 0
        episode_done = bool(np.all(new.done))

        links = self.sample_links(new.positions, rng)
        new.links = links
        assignment = schedule(new, links, final_step=episode_done)
        new.schedule = assignment

        reward = 0.0
        throughputs: dict[tuple[int, int], float] = {}
        for i, k in enumerate(assignment):
            if k == UNASSIGNED:
                continue
            rate = float(links.device_rate[i, k])
            if new.data[k] >= rate * dt:
                throughput = rate
                new.data[k] -= throughput * dt
            else:
                throughput = new.data[k] / dt
                new.data[k] = 0.0
            throughputs[(spec.uavs[i].id, spec.devices[k].id)] = throughput
            reward += throughput * dt

        measurements = self._measure(new, links, active)

        masks = self._masks(new)
        observations = []
        for i in range(self.n_agents):
            frozen = new.frozen_obs[i]
            if frozen is None:
                obs = build_observation(spec, new, i, masks[i])
                if new.done[i]:
                    new.frozen_obs[i] = obs
            else:
                obs = frozen
            observations.append(obs)

        return StepOutcome(
            state=new,
            observations=observations,
            masks=masks,
            global_state=build_global_state(spec, new),
            reward=reward,
            schedule={
                spec.uavs[i].id: (spec.devices[k].id if k != UNASSIGNED else None)
                for i, k in enumerate(assignment)
            },
            throughputs=throughputs,
            measurements=measurements,
            episode_done=episode_done,
        )

    def _measure(self, state: EnvState, links: LinkTable, active: np.ndarray) -> list[MeasurementRecord]:
        spec = self.spec
        records = []
        for i, uav in enumerate(spec.uavs):
            if not active[i]:
                continue
            pos = GridPos(int(state.positions[i, 0]), int(state.positions[i, 1]), uav.altitude_m)
            for k, device in enumerate(spec.devices):
                if links.device_reach[i, k] or spec.env.log_all_pairs:
                    records.append(MeasurementRecord(
                        uav_id=uav.id,
                        t=state.t,
                        uav_pos=pos,
                        device_id=device.id,
                        gain_db=float(links.device_gain[i, k]),
                    ))
        return records

    def battery_to_terminal(self, state: EnvState, uav_index: int) -> float:
        return battery_to_terminal(self.spec, state, uav_index)

    def trajectory_record(self, outcome: StepOutcome) -> dict:
        """Запись шага для экспорта траектории."""
        state = outcome.state
        return {
            "t": state.t,
            "uavs": [
                {
                    "id": uav.id,
                    "cell": [int(state.positions[i, 0]), int(state.positions[i, 1])],
                    "battery": float(state.batteries[i]),
                    "device": outcome.schedule[uav.id],
                }
                for i, uav in enumerate(self.spec.uavs)
            ],
            "reward": outcome.reward,
        }

    def collection_ratio(self, collected: float) -> float:
        total = self.spec.total_data
        return collected / total if total > 0 else 0.0

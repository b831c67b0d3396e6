"""
Наблюдения агентов и глобальное состояние.

Масштабирование: расстояния делятся на диагональ карты, данные на D_init,
заряд на b_0, SNR передаётся как log10(1 + SNR).
"""

import numpy as np

from common.env.models import N_ACTIONS, EnvSpec, EnvState

DEVICE_FEATURES = 7
PEER_FEATURES = 6
OWN_FEATURES = 2
UAV_STATE_FEATURES = 5
DEVICE_STATE_FEATURES = 3


def obs_dim(n_agents: int, n_devices: int) -> int:
    return N_ACTIONS + DEVICE_FEATURES * n_devices + PEER_FEATURES * (n_agents - 1) + OWN_FEATURES


def state_dim(n_agents: int, n_devices: int) -> int:
    return UAV_STATE_FEATURES * n_agents + DEVICE_STATE_FEATURES * n_devices


def battery_to_terminal(spec: EnvSpec, state: EnvState, i: int) -> float:
    """b^{sc}: минимальный заряд, чтобы долететь до терминала."""
    ix, iy = state.positions[i]
    field = spec.city.distance_field(spec.uavs[i].altitude_m)
    return float(field.at(int(ix), int(iy)))


def _uav_xyz(spec: EnvSpec, state: EnvState, i: int) -> np.ndarray:
    cs = spec.city.cell_size_m
    ix, iy = state.positions[i]
    return np.array([(ix + 0.5) * cs, (iy + 0.5) * cs, spec.uavs[i].altitude_m])


def _device_xyz(spec: EnvSpec, k: int) -> np.ndarray:
    cs = spec.city.cell_size_m
    ix, iy = spec.devices[k].cell
    return np.array([(ix + 0.5) * cs, (iy + 0.5) * cs, 0.0])


def build_observation(spec: EnvSpec, state: EnvState, uav_index: int, mask: np.ndarray) -> np.ndarray:
    """
    Вектор наблюдения o^i = (o1, o2, o3, o4).

    o1: маска допустимых действий; o2: признаки устройств по id;
    o3: признаки остальных агентов по id; o4: (b, b^{sc}).
    """
    i = uav_index
    links = state.links
    diag = spec.city.diagonal_m
    b0 = spec.uavs[i].battery_init
    me = _uav_xyz(spec, state, i)

    parts = [np.asarray(mask, dtype=np.float64)]

    for k, device in enumerate(spec.devices):
        delta = me - _device_xyz(spec, k)
        chi = bool(links.device_reach[i, k])
        data = state.data[k] / device.data_init if chi and device.data_init > 0 else 0.0
        parts.append(np.array([
            np.log10(1.0 + links.device_snr[i, k]),
            float(chi),
            data,
            np.linalg.norm(delta) / diag,
            delta[0] / diag,
            delta[1] / diag,
            float(state.schedule[i] == k),
        ]))

    for j, peer in enumerate(spec.uavs):
        if j == i:
            continue
        snr_feature = np.log10(1.0 + links.peer_snr[i, j])
        if links.peer_reach[i, j]:
            delta = me - _uav_xyz(spec, state, j)
            parts.append(np.array([
                snr_feature,
                1.0,
                np.linalg.norm(delta) / diag,
                delta[0] / diag,
                delta[1] / diag,
                state.batteries[j] / peer.battery_init,
            ]))
        else:
            parts.append(np.array([snr_feature, 0.0, 0.0, 0.0, 0.0, 0.0]))

    parts.append(np.array([state.batteries[i] / b0, battery_to_terminal(spec, state, i) / b0]))
    return np.concatenate(parts)


def build_global_state(spec: EnvSpec, state: EnvState) -> np.ndarray:
    """Глобальное состояние s = (s1, s2), не зависит от порога SNR."""
    city = spec.city
    parts = []
    for i, uav in enumerate(spec.uavs):
        xyz = _uav_xyz(spec, state, i)
        b0 = uav.battery_init
        parts.append(np.array([
            state.batteries[i] / b0,
            battery_to_terminal(spec, state, i) / b0,
            xyz[0] / city.width_m,
            xyz[1] / city.height_m,
            float(state.done[i]),
        ]))
    for k, device in enumerate(spec.devices):
        xyz = _device_xyz(spec, k)
        parts.append(np.array([
            state.data[k] / device.data_init if device.data_init > 0 else 0.0,
            xyz[0] / city.width_m,
            xyz[1] / city.height_m,
        ]))
    return np.concatenate(parts)

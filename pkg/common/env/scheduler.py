"""TDMA max-rate планировщик"""

import numpy as np

from common.env.models import EnvState, LinkTable

# Нет назначения
UNASSIGNED = -1


def schedule(state: EnvState, links: LinkTable, final_step: bool = False) -> np.ndarray:
    """
    Бесконфликтное назначение БПЛА → устройство.

    Кандидаты (связь есть, у устройства есть данные, БПЛА не done)
    перебираются по убыванию SNR; пара назначается, если и БПЛА, и
    устройство ещё свободны. Ничьи разбиваются по (uav, device) по возрастанию.

    Returns:
        Массив (I,) с индексом устройства или UNASSIGNED
    """
    n_agents, n_devices = links.device_snr.shape
    assignment = np.full(n_agents, UNASSIGNED, dtype=np.int64)
    if final_step:
        return assignment

    candidates = [
        (-links.device_snr[i, k], i, k)
        for i in range(n_agents)
        if not state.done[i]
        for k in range(n_devices)
        if links.device_reach[i, k] and state.data[k] > 0
    ]
    candidates.sort()

    taken = np.zeros(n_devices, dtype=bool)
    for _, i, k in candidates:
        if assignment[i] == UNASSIGNED and not taken[k]:
            assignment[i] = k
            taken[k] = True
    return assignment

"""Online estimation of the activation period and activation count for the adaptive scheduler.

Times are kept in OFDM-symbol units; SU indices are relative to the start of
the inter-PUCCH cycle in which the observation was made.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field


@dataclass(frozen=True)
class CycleObservation:
    """What the gNB saw on the occasions it granted for the first predicted slot of a cycle."""

    cycle: int
    machine_index: int | None       # index-in-line of the machines whose UEs sent the PUCCH
    su_tx: tuple[int, ...]          # granted SUs the UEs used
    su_notx: tuple[int, ...]        # granted SUs left unused


@dataclass(frozen=True)
class AspsEstimatorState:
    n_e: int
    tau_on_hat_sym: float
    n_on_hat: int
    su_notx: tuple[int, ...] = ()
    t_notx: tuple[float, ...] = ()
    su_tx: tuple[int, ...] = ()
    t_tx: tuple[float, ...] = ()
    tau_even: bool | None = None
    trained: bool = False
    history: tuple[str, ...] = field(default=(), compare=False)

    def tau_on_hat_sus(self, n_os: int) -> int:
        return max(1, int(self.tau_on_hat_sym // n_os))


def initial_estimates(t_ip_sym: float, n_lines: int) -> AspsEstimatorState:
    return AspsEstimatorState(n_e=1, tau_on_hat_sym=t_ip_sym / n_lines, n_on_hat=n_lines,
                              history=("n_e=1: initial guess from T_IP and n_lines",))


def _instant(su: int, n_os: int) -> float:
    # last SU before the PDU-creation SU that precedes the granted one
    return float((su - 2) * n_os)


def asps_update_estimates(est: AspsEstimatorState, obs: CycleObservation,
                          machine_index_now: int | None, *, t_ip_sym: float,
                          machines_per_line: int, n_os: int) -> AspsEstimatorState:
    """Advance the estimator by one cycle.

    ``obs`` describes the cycle that just ended; ``machine_index_now`` is the
    index of the machines whose UEs requested at the current PUCCH.
    Degenerate observations (no used SU, unknown requesters) leave the
    estimate untouched so training lasts one more cycle.
    """
    if est.trained:
        return est
    su_tx = tuple(sorted(obs.su_tx))
    su_notx = tuple(sorted(obs.su_notx))
    t_tx = tuple(_instant(s, n_os) for s in su_tx)
    t_notx = tuple(_instant(s, n_os) for s in su_notx)
    if not su_tx or obs.machine_index is None or machine_index_now is None:
        return dataclasses.replace(
            est, history=est.history + (f"cycle {obs.cycle}: degenerate observation, skipped",))

    if est.n_e == 1:
        n_e = 2
        k = (machine_index_now - obs.machine_index) % machines_per_line + 1
        n_hat = machines_per_line + k - 1
        tau_c = t_ip_sym / n_hat - 2 * n_os
        even = tau_c == int(tau_c) and int(tau_c) % (2 * n_os) == 0
        if t_notx:
            tau = t_notx[0] + (n_e - 1) * n_os if even else t_notx[0]
        else:
            tau = tau_c
        return dataclasses.replace(
            est, n_e=n_e, n_on_hat=n_hat, tau_on_hat_sym=tau, tau_even=even,
            su_notx=su_notx, t_notx=t_notx, su_tx=su_tx, t_tx=t_tx,
            history=est.history + (f"n_e=2: k={k}, n_on_hat={n_hat}, tau_on_hat={tau} sym",))

    n_e = 3
    tau = est.tau_on_hat_sym
    if su_notx and est.su_notx and su_notx[0] == est.su_notx[0]:
        tau = t_notx[0] + n_os
    else:
        for i in range(1, len(su_tx)):
            if t_tx[i] - t_tx[i - 1] > tau:
                tau = (tau + t_tx[i - 1]) / 2 + (n_e - 1) * n_os
    return dataclasses.replace(
        est, n_e=n_e, tau_on_hat_sym=tau, su_notx=su_notx, t_notx=t_notx, su_tx=su_tx,
        t_tx=t_tx, trained=True,
        history=est.history + (f"n_e=3: tau_on_hat={tau} sym, trained",))

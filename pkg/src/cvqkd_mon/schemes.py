"""Secret key rates for coherent-state CVQKD with a noisy source.

Three security models for the same physical link are evaluated, all with
reverse reconciliation against collective attacks in the asymptotic limit:

untrusted
    No source monitor.  The preparation noise chi_s cannot be told apart
    from channel noise, so the eavesdropper is credited with purifying the
    whole two-mode state, preparation noise included.  K = beta*I - S.

active_switch
    A random optical switch diverts a fraction r of the pulses to a
    homodyne monitor, which pins down chi_s.  I(a:b) comes from the actual
    transmitted state; the Holevo term S(E:b) is evaluated on a substitute
    state -- a two-mode squeezed vacuum of variance V + chi_s through the
    same channel -- which upper-bounds Eve tightly without crediting her
    with the preparation noise.  K = (1-r) * (beta*I - S).

passive_bs
    A tap beamsplitter of transmittance T sends one output to Bob and
    keeps the reflected monitor mode M at the (trusted) transmitter.
    I(a:b) again comes from the actual state; S(E:b) uses the substitute
    three-mode pipeline (TMSV of variance V + chi_s, plus vacuum, through
    the same tap and channel) with Eve purifying only the channel, so
    S(E:b) = S(A,B2,M) - S(A,M|b).  No duty-cycle factor: K = beta*I - S.

Every evaluation is a pure function of its parameters; sweep drivers may
run grid points in parallel and merge by index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .gaussian import (
    CovarianceMatrix,
    TwoModeStdForm,
    apply_beamsplitter,
    apply_fiber_channel,
    condition_on_homodyne,
    epr_state,
    mutual_info_het_hom,
    noisy_source_state,
    tensor,
    vacuum_state,
    von_neumann_entropy,
)

SCHEME_UNTRUSTED = "untrusted"
SCHEME_ACTIVE = "active_switch"
SCHEME_PASSIVE = "passive_bs"
SCHEMES = (SCHEME_UNTRUSTED, SCHEME_ACTIVE, SCHEME_PASSIVE)

#: Below this transmittance the channel-noise parameter chi diverges and
#: key rates are meaningless; evaluations refuse to proceed.
ETA_FLOOR = 1e-6


class ChannelOpaqueError(ValueError):
    """Channel transmittance fell below the evaluable floor."""


def distance_to_eta(d_km: float, alpha_db_per_km: float = 0.2) -> float:
    """Fiber transmittance 10^(-alpha*d/10) for a span of d kilometers."""
    if d_km < 0.0:
        raise ValueError(f"distance must be >= 0 km, got {d_km}")
    if alpha_db_per_km <= 0.0:
        raise ValueError(f"attenuation must be > 0 dB/km, got {alpha_db_per_km}")
    return 10.0 ** (-alpha_db_per_km * d_km / 10.0)


@dataclass(frozen=True)
class ChannelParams:
    """Fiber span: length, attenuation and input-referred excess noise."""

    distance_km: float
    epsilon: float = 0.1
    alpha_db_per_km: float = 0.2

    def __post_init__(self) -> None:
        if self.distance_km < 0.0:
            raise ValueError(f"distance must be >= 0 km, got {self.distance_km}")
        if self.epsilon < 0.0:
            raise ValueError(f"excess noise must be >= 0, got {self.epsilon}")
        if self.alpha_db_per_km <= 0.0:
            raise ValueError(f"attenuation must be > 0 dB/km, got {self.alpha_db_per_km}")

    @property
    def eta(self) -> float:
        """Transmittance 10^(-alpha*d/10)."""
        return distance_to_eta(self.distance_km, self.alpha_db_per_km)

    @property
    def chi(self) -> float:
        """Total channel noise (1 - eta)/eta + epsilon, referred to the input."""
        eta = self.eta
        return (1.0 - eta) / eta + self.epsilon

    @classmethod
    def from_transmittance(cls, eta: float, epsilon: float = 0.1,
                           alpha_db_per_km: float = 0.2) -> "ChannelParams":
        """Build the span whose transmittance equals `eta`."""
        if not 0.0 < eta <= 1.0:
            raise ValueError(f"transmittance must lie in (0, 1], got {eta}")
        d = -10.0 * math.log10(eta) / alpha_db_per_km
        return cls(distance_km=d, epsilon=epsilon, alpha_db_per_km=alpha_db_per_km)


@dataclass(frozen=True)
class ProtocolParams:
    """One parameter point driving every scheme.

    V is the EPR-equivalent modulation variance (V = V_A + 1), chi_s the
    preparation-noise variance, beta the reconciliation efficiency, r the
    active-scheme sampling ratio and T the passive-scheme tap
    transmittance toward Bob.  Defaults match the reference comparison
    point used throughout the test suite.
    """

    channel: ChannelParams
    V: float = 40.0
    chi_s: float = 0.1
    beta: float = 0.8
    r: float = 0.5
    T: float = 0.5

    def __post_init__(self) -> None:
        if self.V < 1.0:
            raise ValueError(f"modulation variance must be >= 1, got V={self.V}")
        if self.chi_s < 0.0:
            raise ValueError(f"source-noise variance must be >= 0, got chi_s={self.chi_s}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"reconciliation efficiency must lie in [0, 1], got beta={self.beta}")
        if not 0.0 <= self.r < 1.0:
            raise ValueError(f"sampling ratio must lie in [0, 1), got r={self.r}")
        if not 0.0 < self.T <= 1.0:
            raise ValueError(f"tap transmittance must lie in (0, 1], got T={self.T}")


@dataclass(frozen=True)
class KeyRateBreakdown:
    """Atomic result of one evaluation: I(a:b), S(E:b) and the key rate."""

    scheme: str
    i_ab: float
    s_eb: float
    key_rate: float

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme tag {self.scheme!r}")
        if self.s_eb < -1e-9 or self.i_ab < -1e-9:
            raise ValueError(f"negative information quantities: i_ab={self.i_ab}, s_eb={self.s_eb}")

    @property
    def secure(self) -> bool:
        return self.key_rate > 0.0


def _check_transparent(channel: ChannelParams) -> None:
    if channel.eta < ETA_FLOOR:
        raise ChannelOpaqueError(
            f"channel opaque: eta={channel.eta:.3e} below {ETA_FLOOR} "
            f"(distance {channel.distance_km} km)")


def _holevo_vs_bob(purified: CovarianceMatrix, bob_mode: int) -> float:
    """S(E:b) when Eve holds the purification of `purified`.

    Global purity gives S(E) = S(purified); after Bob's rank-one homodyne
    the joint conditional state is again pure, so S(E|b) equals the
    entropy of the remaining modes conditioned on Bob's outcome.
    """
    s_total = von_neumann_entropy(purified)
    s_cond = von_neumann_entropy(condition_on_homodyne(purified, bob_mode))
    return s_total - s_cond


def _actual_two_mode(p: ProtocolParams) -> TwoModeStdForm:
    """Transmitted (A, B) state: noisy source, signal mode through the fiber."""
    st = apply_fiber_channel(noisy_source_state(p.V, p.chi_s), 1,
                             p.channel.eta, p.channel.epsilon)
    return TwoModeStdForm.from_covariance(st)


def keyrate_untrusted(p: ProtocolParams) -> KeyRateBreakdown:
    """No-monitor baseline: preparation noise is ascribed to the channel."""
    _check_transparent(p.channel)
    std = _actual_two_mode(p)
    i_ab = mutual_info_het_hom(std.a, std.b, std.c)
    s_eb = _holevo_vs_bob(std.to_covariance(), 1)
    key_rate = p.beta * i_ab - s_eb
    return KeyRateBreakdown(SCHEME_UNTRUSTED, i_ab, s_eb, key_rate)


def keyrate_active(p: ProtocolParams) -> KeyRateBreakdown:
    """Optical-switch monitor with sampling ratio r."""
    _check_transparent(p.channel)
    std = _actual_two_mode(p)
    i_ab = mutual_info_het_hom(std.a, std.b, std.c)
    substitute = apply_fiber_channel(epr_state(p.V + p.chi_s), 1,
                                     p.channel.eta, p.channel.epsilon)
    s_eb = _holevo_vs_bob(substitute, 1)
    key_rate = (1.0 - p.r) * (p.beta * i_ab - s_eb)
    return KeyRateBreakdown(SCHEME_ACTIVE, i_ab, s_eb, key_rate)


def keyrate_passive(p: ProtocolParams) -> KeyRateBreakdown:
    """Beamsplitter tap of transmittance T; monitor mode stays trusted."""
    _check_transparent(p.channel)
    eta, eps = p.channel.eta, p.channel.epsilon

    actual = tensor(noisy_source_state(p.V, p.chi_s), vacuum_state())
    actual = apply_beamsplitter(actual, 1, 2, p.T)
    actual = apply_fiber_channel(actual, 1, eta, eps)
    std = TwoModeStdForm.from_covariance(actual.reduced([0, 1]))
    i_ab = mutual_info_het_hom(std.a, std.b, std.c)

    substitute = tensor(epr_state(p.V + p.chi_s), vacuum_state())
    substitute = apply_beamsplitter(substitute, 1, 2, p.T)
    substitute = apply_fiber_channel(substitute, 1, eta, eps)
    s_eb = _holevo_vs_bob(substitute, 1)  # conditional keeps (A, M)

    key_rate = p.beta * i_ab - s_eb
    return KeyRateBreakdown(SCHEME_PASSIVE, i_ab, s_eb, key_rate)


_KEYRATE = {
    SCHEME_UNTRUSTED: keyrate_untrusted,
    SCHEME_ACTIVE: keyrate_active,
    SCHEME_PASSIVE: keyrate_passive,
}


def evaluate_keyrate(scheme: str, p: ProtocolParams) -> KeyRateBreakdown:
    """Dispatch on the scheme tag."""
    try:
        fn = _KEYRATE[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme tag {scheme!r}; expected one of {SCHEMES}") from None
    return fn(p)


def keyrate_at_distance(scheme: str, p: ProtocolParams, d_km: float) -> KeyRateBreakdown:
    """Evaluate `scheme` at the same parameters but a different span length."""
    return evaluate_keyrate(scheme, replace(p, channel=replace(p.channel, distance_km=d_km)))


def secure_distance(scheme: str, p: ProtocolParams, d_max: float = 100.0,
                    coarse_step: float = 0.5, tol_km: float = 0.01) -> float | None:
    """Largest distance with a positive key rate, or None if insecure at d=0.

    A coarse grid scan (default 0.5 km) brackets the last positive point,
    then bisection narrows the boundary to `tol_km`.  If the rate is still
    positive at `d_max` the cap itself is returned.
    """
    if d_max <= 0.0:
        raise ValueError(f"search cap must be positive, got d_max={d_max}")

    def rate(d: float) -> float:
        return keyrate_at_distance(scheme, p, d).key_rate

    n_steps = int(math.floor(d_max / coarse_step + 1e-9))
    grid = [k * coarse_step for k in range(n_steps + 1)]
    if grid[-1] < d_max:
        grid.append(d_max)
    rates = [rate(d) for d in grid]
    if rates[0] <= 0.0:
        return None
    last_pos = max(i for i, k in enumerate(rates) if k > 0.0)
    if last_pos == len(grid) - 1:
        return d_max
    lo, hi = grid[last_pos], grid[last_pos + 1]
    while hi - lo > tol_km:
        mid = 0.5 * (lo + hi)
        if rate(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class TapSweepResult:
    """Outcome of a tap-transmittance sweep for the passive scheme."""

    T_best: float
    d_best: float | None
    table: tuple[tuple[float, float | None], ...]


def optimize_T(p: ProtocolParams, T_grid: list[float], d_max: float = 100.0) -> TapSweepResult:
    """Secure distance of the passive scheme over a grid of tap values.

    Exhaustive evaluation; ties break toward the smaller T.  When every
    grid point is insecure, d_best is None and T_best is the smallest T.
    """
    if len(T_grid) == 0:
        raise ValueError("tap grid must not be empty")
    table = []
    best_T: float | None = None
    best_d: float | None = None
    for T in T_grid:
        dist = secure_distance(SCHEME_PASSIVE, replace(p, T=T), d_max=d_max)
        table.append((T, dist))
        better = dist is not None and (best_d is None or dist > best_d
                                       or (dist == best_d and T < best_T))
        if better:
            best_T, best_d = T, dist
    if best_T is None:
        best_T = min(T_grid)
    return TapSweepResult(T_best=best_T, d_best=best_d, table=tuple(table))

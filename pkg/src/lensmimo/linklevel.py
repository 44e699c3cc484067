"""Downlink precoding, exact SINR, and the ergodic sum-rate Monte Carlo.

Signal model (transposed convention, no conjugation on the channel):
y_k = sqrt(P) h_k^T sum_j g_j s_j + n_k with unit-variance noise, so the
transmit power in dB doubles as the SNR axis. Precoders are built from
fed-back unit-norm channel directions only.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import (UserConfig, apply_lens, correlation_matrix, draw_channel,
                      matrix_sqrt)
from .errors import ConfigError, DomainError, LensMimoError
from .feedback import (correlate_codebook, fit_gaussian_model, gaussian_profile,
                       generate_mvcq, generate_rvq, quantize, sub_bpm_profile)
from .waveoptics import ArraySpec, LensSpec, PropagationGrid, antenna_power_profile

COND_LIMIT = 1e12
SECTOR_DEG = 30.0

PRECODER_TOKENS = ("zf", "mrt")
QUANTIZER_KINDS = ("full", "rvq", "rvq_corr", "mvcq")
MVCQ_SOURCES = ("bpm", "gaussian", "sub_bpm")


@dataclass(frozen=True)
class Precoder:
    """Raw columns F and the power-normalized columns G, g_k = f_k/(sqrt(K)|f_k|)."""

    columns: np.ndarray      # (M, K)
    normalized: np.ndarray   # (M, K), total power sum |g_k|^2 = 1


def parse_quantizer(token: str) -> tuple[str, str, int]:
    """Split a quantizer token into (kind, profile source, stride).

    Tokens: full | rvq | rvq_corr | mvcq[:source[:stride]] with source in
    {bpm, gaussian, sub_bpm}; sub_bpm requires a stride, e.g. mvcq:sub_bpm:10.
    """
    parts = token.split(":")
    kind = parts[0]
    if kind not in QUANTIZER_KINDS:
        raise ConfigError(f"unknown quantizer '{token}'")
    if kind != "mvcq":
        if len(parts) > 1:
            raise ConfigError(f"quantizer '{kind}' takes no profile source")
        return kind, "", 1
    source = parts[1] if len(parts) > 1 else "bpm"
    if source not in MVCQ_SOURCES:
        raise ConfigError(f"unknown profile source '{source}' in '{token}'")
    stride = 1
    if source == "sub_bpm":
        if len(parts) < 3:
            raise ConfigError(f"'{token}' needs a stride, e.g. mvcq:sub_bpm:10")
        try:
            stride = int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"stride in '{token}' is not an integer") from exc
        if stride < 1:
            raise ConfigError("stride must be a positive integer")
    elif len(parts) > 2:
        raise ConfigError(f"unexpected extra field in quantizer '{token}'")
    return kind, source, stride


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one simulated downlink scenario."""

    users: tuple[UserConfig, ...]
    name: str = "scenario"
    num_antennas: int = 64
    spacing: float = 0.5
    bits: int = 6
    lens_enabled: bool = True
    focal_length: float = 40.0
    aperture: float = 20.0
    epsilon_r: float = 2.4
    lens_distance: float = 25.0
    grid_dx: float = 0.0625
    grid_dz: float = 1.0
    window: float = 80.0
    precoders: tuple[str, ...] = ("zf",)
    quantizers: tuple[str, ...] = ("mvcq",)
    snr_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0)
    trials: int = 1000
    seed: int = 1234

    def __post_init__(self):
        k = len(self.users)
        if k < 1:
            raise ConfigError("scenario needs at least one user")
        if k > self.num_antennas:
            raise ConfigError(
                f"user count {k} exceeds antenna count {self.num_antennas}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not 1 <= self.bits <= 16:
            raise ConfigError("bits must be between 1 and 16")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        for u in self.users:
            if abs(u.angle_deg) > SECTOR_DEG:
                raise ConfigError(
                    f"user angle {u.angle_deg} deg is outside the "
                    f"[-{SECTOR_DEG:g}, {SECTOR_DEG:g}] deg sector")
        for p in self.precoders:
            if p not in PRECODER_TOKENS:
                raise ConfigError(f"unknown precoder '{p}'")
        for q in self.quantizers:
            kind, _, _ = parse_quantizer(q)
            if kind == "mvcq" and not self.lens_enabled:
                raise ConfigError(
                    f"quantizer '{q}' needs the lens enabled (it carries the "
                    "lens power profile)")
        if not self.snr_db:
            raise ConfigError("snr grid is empty")

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def lens(self) -> LensSpec:
        return LensSpec(focal_length=self.focal_length, aperture=self.aperture,
                        epsilon_r=self.epsilon_r)

    @property
    def array(self) -> ArraySpec:
        return ArraySpec(num_antennas=self.num_antennas, spacing=self.spacing,
                         lens_distance=self.lens_distance)

    @property
    def grid(self) -> PropagationGrid:
        return PropagationGrid(dx=self.grid_dx, dz=self.grid_dz, window=self.window)

    def flat_items(self) -> list[tuple[str, object]]:
        """Key-value echo of the complete effective configuration."""
        items: list[tuple[str, object]] = [
            ("scenario", self.name),
            ("num_antennas", self.num_antennas),
            ("num_users", self.num_users),
            ("user_angles_deg", ";".join(repr(u.angle_deg) for u in self.users)),
            ("sigma_deg", ";".join(repr(u.sigma_deg) for u in self.users)),
            ("spacing", repr(self.spacing)),
            ("bits", self.bits),
            ("lens_enabled", self.lens_enabled),
            ("focal_length", repr(self.focal_length)),
            ("aperture", repr(self.aperture)),
            ("epsilon_r", repr(self.epsilon_r)),
            ("lens_distance", repr(self.lens_distance)),
            ("grid_dx", repr(self.grid_dx)),
            ("grid_dz", repr(self.grid_dz)),
            ("window", repr(self.window)),
            ("precoders", ";".join(self.precoders)),
            ("quantizers", ";".join(self.quantizers)),
            ("snr_db", ";".join(repr(s) for s in self.snr_db)),
            ("trials", self.trials),
            ("seed", self.seed),
        ]
        return items


def _coherence_pair(h_hat: np.ndarray) -> tuple[int, int]:
    rows = h_hat / np.linalg.norm(h_hat, axis=1, keepdims=True)
    gram = np.abs(rows @ rows.conj().T)
    np.fill_diagonal(gram, 0.0)
    i, j = np.unravel_index(np.argmax(gram), gram.shape)
    return int(min(i, j)), int(max(i, j))


def _normalize(f: np.ndarray) -> np.ndarray:
    k = f.shape[1]
    norms = np.linalg.norm(f, axis=0)
    if np.any(norms == 0):
        raise DomainError("precoder has a zero column")
    return f / (np.sqrt(k) * norms)


def zf_precoder(h_hat: np.ndarray) -> Precoder:
    """Zero-forcing columns F = pinv(H), so h_k^T f_j = delta_kj before scaling."""
    h_hat = np.atleast_2d(h_hat)
    cond = np.linalg.cond(h_hat)
    if cond > COND_LIMIT:
        i, j = _coherence_pair(h_hat)
        raise DomainError(
            f"channel matrix is ill-conditioned (cond={cond:.3g}); users "
            f"{i} and {j} have near-collinear directions")
    f = np.linalg.pinv(h_hat)
    return Precoder(columns=f, normalized=_normalize(f))


def mrt_precoder(h_hat: np.ndarray) -> Precoder:
    """Matched columns f_k = conj(h_k) for the transposed signal model."""
    h_hat = np.atleast_2d(h_hat)
    norms = np.linalg.norm(h_hat, axis=1)
    if np.any(norms == 0):
        raise DomainError("channel matrix has a zero row")
    f = h_hat.conj().T
    return Precoder(columns=f, normalized=_normalize(f))


def received_sinr(h_tilde: np.ndarray, g: np.ndarray, p_t: float) -> np.ndarray:
    """Exact per-user SINR on the true channel with unit noise variance."""
    h_tilde = np.atleast_2d(h_tilde)
    t2 = np.abs(h_tilde @ g) ** 2
    sig = p_t * np.diag(t2)
    interf = p_t * (t2.sum(axis=1) - np.diag(t2))
    return sig / (interf + 1.0)


def sum_rate(sinrs: np.ndarray) -> float:
    sinrs = np.asarray(sinrs, dtype=float)
    if np.any(sinrs < 0):
        raise DomainError("SINR values must be nonnegative")
    return float(np.sum(np.log2(1.0 + sinrs)))


@dataclass
class ScenarioProfiles:
    """Power profiles a scenario needs: the true channel's and the codebooks'."""

    channel: np.ndarray | None                 # (K, M) or None without lens
    codebook: dict[str, np.ndarray]            # quantizer token -> (K, M)


def build_scenario_profiles(cfg: ScenarioConfig) -> ScenarioProfiles:
    """Assemble exact channel-side profiles plus each quantizer's codebook source."""
    if not cfg.lens_enabled:
        return ScenarioProfiles(channel=None, codebook={})
    lens, grid, array = cfg.lens, cfg.grid, cfg.array
    exact = np.stack([antenna_power_profile(lens, grid, array, u.angle_deg)
                      for u in cfg.users])
    codebook: dict[str, np.ndarray] = {}
    model = None
    for token in cfg.quantizers:
        kind, source, stride = parse_quantizer(token)
        if kind != "mvcq" or token in codebook:
            continue
        if source == "bpm":
            codebook[token] = exact
        elif source == "gaussian":
            if model is None:
                anchors = np.arange(-SECTOR_DEG, SECTOR_DEG + 1e-9, 5.0)
                anchor_profiles = {
                    float(a): antenna_power_profile(lens, grid, array, float(a))
                    for a in anchors}
                model = fit_gaussian_model(anchor_profiles, lens, array)
            codebook[token] = np.stack([
                gaussian_profile(u.angle_deg, model, array, lens)
                for u in cfg.users])
        else:
            codebook[token] = np.stack([
                sub_bpm_profile(lens, grid, array, stride, u.angle_deg)
                for u in cfg.users])
    return ScenarioProfiles(channel=exact, codebook=codebook)


@dataclass
class SimResult:
    """Mean sum-rate curves (and raw per-trial rates) per precoder/quantizer pair."""

    scenario: ScenarioConfig
    snr_db: np.ndarray
    mean: dict[tuple[str, str], np.ndarray]
    stderr: dict[tuple[str, str], np.ndarray]
    rates: dict[tuple[str, str], np.ndarray]   # (num_snr, trials)


def _trial_rates(cfg: ScenarioConfig, profiles: ScenarioProfiles,
                 factors: list[np.ndarray], si: int, ti: int) -> dict:
    """All (precoder, quantizer) sum rates for one Monte-Carlo cell.

    The substream is keyed by (snr index, trial index) so results do not
    depend on execution order; channels are drawn before codebooks so every
    quantizer sees the same realizations.
    """
    k = cfg.num_users
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(si, ti)))
    h = np.stack([draw_channel(s, rng) for s in factors])
    if profiles.channel is not None:
        h_true = np.stack([apply_lens(h[u], profiles.channel[u]) for u in range(k)])
    else:
        h_true = h
    bases = [generate_rvq(cfg.num_antennas, cfg.bits, rng) for _ in range(k)]

    p_t = 10.0 ** (cfg.snr_db[si] / 10.0)
    out = {}
    for token in cfg.quantizers:
        kind, _, _ = parse_quantizer(token)
        if kind == "full":
            h_hat = h_true / np.linalg.norm(h_true, axis=1, keepdims=True)
        else:
            rows = []
            for u in range(k):
                cb = bases[u]
                if kind in ("rvq_corr", "mvcq"):
                    cb = correlate_codebook(cb, factors[u])
                if kind == "mvcq":
                    cb = generate_mvcq(cb, profiles.codebook[token][u],
                                       user_angle_deg=cfg.users[u].angle_deg)
                rows.append(quantize(h_true[u], cb).direction)
            h_hat = np.stack(rows)
        for prec in cfg.precoders:
            try:
                p = zf_precoder(h_hat) if prec == "zf" else mrt_precoder(h_hat)
            except LensMimoError as exc:
                raise type(exc)(
                    f"{exc} (quantizer {token}, snr {cfg.snr_db[si]} dB, "
                    f"trial {ti})") from exc
            sinrs = received_sinr(h_true, p.normalized, p_t)
            out[(prec, token)] = sum_rate(sinrs)
    return out


def run_monte_carlo(cfg: ScenarioConfig, profiles: ScenarioProfiles | None = None,
                    threads: int = 1) -> SimResult:
    """Ergodic sum rate over the SNR grid for every precoder/quantizer pair.

    Deterministic for a given config seed: each (snr, trial) cell owns a
    derived substream and writes into a preallocated slot, so the thread
    count changes timing only, never results.
    """
    if profiles is None:
        profiles = build_scenario_profiles(cfg)
    factors = [matrix_sqrt(correlation_matrix(u, cfg.num_antennas, cfg.spacing))
               for u in cfg.users]
    combos = [(p, q) for p in cfg.precoders for q in cfg.quantizers]
    n_snr, n_tr = len(cfg.snr_db), cfg.trials
    rates = {c: np.empty((n_snr, n_tr)) for c in combos}

    def run_cell(cell: tuple[int, int]) -> None:
        si, ti = cell
        out = _trial_rates(cfg, profiles, factors, si, ti)
        for c in combos:
            rates[c][si, ti] = out[c]

    cells = [(si, ti) for si in range(n_snr) for ti in range(n_tr)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            # list() drains the iterator so worker exceptions surface here
            list(pool.map(run_cell, cells))
    else:
        for cell in cells:
            run_cell(cell)

    mean = {c: rates[c].mean(axis=1) for c in combos}
    if n_tr > 1:
        stderr = {c: rates[c].std(axis=1, ddof=1) / np.sqrt(n_tr) for c in combos}
    else:
        stderr = {c: np.zeros(n_snr) for c in combos}
    return SimResult(scenario=cfg, snr_db=np.asarray(cfg.snr_db, dtype=float),
                     mean=mean, stderr=stderr, rates=rates)


def render_csv(result: SimResult, precoder: str, quantizer: str) -> str:
    """One curve as CSV text with the full effective config in the header."""
    cfg = result.scenario
    lines = [f"# {k} = {v}" for k, v in cfg.flat_items()]
    lines.append(f"# precoder = {precoder}")
    lines.append(f"# quantizer = {quantizer}")
    lines.append("snr_db,mean_sum_rate,stderr,trials")
    mean = result.mean[(precoder, quantizer)]
    err = result.stderr[(precoder, quantizer)]
    for i, snr in enumerate(result.snr_db):
        lines.append(
            f"{float(snr)!r},{float(mean[i])!r},{float(err[i])!r},{cfg.trials}")
    return "\n".join(lines) + "\n"


def render_comparison(result: SimResult) -> str:
    """Side-by-side mean sum rates, one row per SNR, one column per combo."""
    cfg = result.scenario
    combos = [(p, q) for p in cfg.precoders for q in cfg.quantizers]
    lines = [f"# {k} = {v}" for k, v in cfg.flat_items()]
    header = ["snr_db"] + [f"{p}_{q.replace(':', '_')}" for p, q in combos]
    lines.append(",".join(header))
    for i, snr in enumerate(result.snr_db):
        row = [repr(float(snr))]
        row += [repr(float(result.mean[c][i])) for c in combos]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"

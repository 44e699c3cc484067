"""Command-line interface: scenario files in, CSV results and caches out.

Scenario files are flat INI text with one section per concern; every output
file embeds the complete effective configuration in its header so a result
is reproducible from the file alone. Exit codes: 0 success, 2 configuration
errors, 3 numerical/domain errors, 4 I/O errors.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import feedback, linklevel, profile_cache, waveoptics
from .channel import UserConfig
from .errors import ConfigError, DomainError
from .linklevel import ScenarioConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_IO = 4


def _float_list(raw: str) -> list[float]:
    toks = [t.strip() for t in raw.replace(";", ",").split(",")]
    return [float(t) for t in toks if t]


def _token_list(raw: str) -> list[str]:
    toks = [t.strip() for t in raw.replace(";", ",").split(",")]
    return [t for t in toks if t]


def _on_off(raw: str) -> bool:
    val = raw.strip().lower()
    if val in ("on", "true", "yes", "1"):
        return True
    if val in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got '{raw}'")


_SCHEMA = {
    "scenario": {"name": str, "precoders": _token_list,
                 "quantizers": _token_list, "lens": _on_off},
    "array": {"num_antennas": int, "spacing": float, "lens_distance": float},
    "lens": {"focal_length": float, "aperture": float, "epsilon_r": float},
    "grid": {"dx": float, "dz": float, "window": float},
    "users": {"angles": _float_list, "sigma": _float_list},
    "simulation": {"bits": int, "snr_db": _float_list, "trials": int,
                   "seed": int},
}


def parse_config(path: str, require_users: bool = True) -> ScenarioConfig:
    """Read and validate a scenario file, filling every default.

    Unknown sections or keys are rejected by name; every value is parsed
    with its section.key named in any diagnostic.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"scenario file not found: {path}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    vals: dict[str, dict] = {}
    for sec in cp.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{sec}]")
        vals[sec] = {}
        for key, raw in cp.items(sec):
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"{path}: unknown key '{key}' in [{sec}]")
            try:
                vals[sec][key] = _SCHEMA[sec][key](raw)
            except ValueError as exc:
                raise ConfigError(
                    f"{path}: [{sec}] {key}: cannot parse '{raw}' ({exc})") from exc

    def get(sec: str, key: str, default):
        return vals.get(sec, {}).get(key, default)

    angles = get("users", "angles", None)
    if angles is None:
        if require_users:
            raise ConfigError(f"{path}: [users] angles is required")
        angles = [0.0]
    sigma = get("users", "sigma", [5.0])
    if len(sigma) == 1:
        sigma = sigma * len(angles)
    if len(sigma) != len(angles):
        raise ConfigError(
            f"{path}: [users] sigma must be a scalar or match the "
            f"{len(angles)} angles")

    try:
        return ScenarioConfig(
            users=tuple(UserConfig(angle_deg=a, sigma_deg=s)
                        for a, s in zip(angles, sigma)),
            name=get("scenario", "name", os.path.splitext(os.path.basename(path))[0]),
            num_antennas=get("array", "num_antennas", 64),
            spacing=get("array", "spacing", 0.5),
            bits=get("simulation", "bits", 6),
            lens_enabled=get("scenario", "lens", True),
            focal_length=get("lens", "focal_length", 40.0),
            aperture=get("lens", "aperture", 20.0),
            epsilon_r=get("lens", "epsilon_r", 2.4),
            lens_distance=get("array", "lens_distance", 25.0),
            grid_dx=get("grid", "dx", 0.0625),
            grid_dz=get("grid", "dz", 1.0),
            window=get("grid", "window", 80.0),
            precoders=tuple(get("scenario", "precoders", ["zf"])),
            quantizers=tuple(get("scenario", "quantizers", ["mvcq"])),
            snr_db=tuple(get("simulation", "snr_db", [0.0, 5.0, 10.0, 15.0, 20.0])),
            trials=get("simulation", "trials", 1000),
            seed=get("simulation", "seed", 1234),
        )
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass
class RunManifest:
    """Everything one subcommand invocation needs."""

    config: str
    out_dir: str = "."
    cache_dir: str | None = None
    seed: int | None = None
    threads: int = 1
    no_build: bool = False
    aod_deg: float = 0.0
    steps: int | None = None

    def __post_init__(self):
        if self.cache_dir is None:
            self.cache_dir = self.out_dir
        if self.seed is not None and self.seed < 0:
            raise ConfigError("seed override must be nonnegative")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")


def _load(manifest: RunManifest, require_users: bool) -> ScenarioConfig:
    cfg = parse_config(manifest.config, require_users=require_users)
    if manifest.seed is not None:
        cfg = replace(cfg, seed=manifest.seed)
    return cfg


def _cache_path(manifest: RunManifest, params: dict) -> str:
    return os.path.join(manifest.cache_dir,
                        f"profiles_{profile_cache.params_digest(params)}.csv")


def cmd_lens_profile(manifest: RunManifest) -> int:
    """Sweep departure angles and write the power-profile table."""
    cfg = _load(manifest, require_users=False)
    lens, grid, array = cfg.lens, cfg.grid, cfg.array
    table = profile_cache.build_profile_table(lens, grid, array)
    os.makedirs(manifest.cache_dir, exist_ok=True)
    path = _cache_path(manifest, table.params)
    profile_cache.write_profile_table(path, table)
    print(f"wrote {table.aods_deg.size} profiles to {path}")
    return EXIT_OK


def cmd_bpm_field(manifest: RunManifest) -> int:
    """Propagate one incidence angle and dump the intensity history."""
    cfg = _load(manifest, require_users=False)
    lens, grid, array = cfg.lens, cfg.grid, cfg.array
    steps = manifest.steps
    if steps is None:
        steps = int(np.ceil(1.5 * lens.focal_length / grid.dz))
    u0 = waveoptics.lens_phase_profile(lens, grid, manifest.aod_deg)
    hist = waveoptics.propagate(u0, steps)
    z_peak, gain = waveoptics.find_focal_peak(hist, lens, array)

    inten = np.abs(hist.fields) ** 2 / np.abs(hist.fields[0]).max() ** 2
    os.makedirs(manifest.out_dir, exist_ok=True)
    path = os.path.join(
        manifest.out_dir,
        f"field_f{lens.focal_length:g}_aod{manifest.aod_deg:g}.csv")
    with open(path, "w") as fh:
        for key, val in (("focal_length", lens.focal_length),
                         ("aperture", lens.aperture),
                         ("epsilon_r", lens.epsilon_r),
                         ("dx", grid.dx), ("dz", grid.dz),
                         ("window", grid.window),
                         ("aod_deg", manifest.aod_deg),
                         ("rows_transverse", grid.num_samples),
                         ("cols_axial", steps + 1),
                         ("peak_distance", z_peak),
                         ("peak_gain_per_cell", gain)):
            fh.write(f"# {key} = {val!r}\n")
        for row in inten.T:     # one row per transverse sample after transpose
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    print(f"peak at z = {z_peak!r} wavelengths, "
          f"gain {gain!r} per antenna cell; field written to {path}")
    return EXIT_OK


def _profiles_from_cache(cfg: ScenarioConfig, manifest: RunManifest
                         ) -> linklevel.ScenarioProfiles:
    """Serve scenario profiles from the swept table instead of running BPM."""
    params = profile_cache.cache_params(cfg.lens, cfg.grid, cfg.array)
    path = _cache_path(manifest, params)
    if not os.path.exists(path):
        raise ConfigError(
            f"--no-build is set but the profile cache {path} is missing; "
            "run the lens-profile subcommand first")
    table = profile_cache.read_profile_table(path, expected_params=params)
    exact = np.stack([table.lookup(u.angle_deg) for u in cfg.users])
    codebook: dict[str, np.ndarray] = {}
    model = None
    for token in cfg.quantizers:
        kind, source, _ = linklevel.parse_quantizer(token)
        if kind != "mvcq" or token in codebook:
            continue
        if source == "bpm":
            codebook[token] = exact
        elif source == "gaussian":
            if model is None:
                anchors = np.arange(-linklevel.SECTOR_DEG,
                                    linklevel.SECTOR_DEG + 1e-9, 5.0)
                anchor_profiles = {float(a): table.lookup(float(a))
                                   for a in anchors}
                model = feedback.fit_gaussian_model(anchor_profiles, cfg.lens,
                                                    cfg.array)
            codebook[token] = np.stack([
                feedback.gaussian_profile(u.angle_deg, model, cfg.array, cfg.lens)
                for u in cfg.users])
        else:
            raise ConfigError(
                f"quantizer '{token}' needs a fresh coarse-step run and cannot "
                "be served from the cache; drop --no-build")
    return linklevel.ScenarioProfiles(channel=exact, codebook=codebook)


def cmd_simulate(manifest: RunManifest) -> int:
    """Run the Monte Carlo and write one CSV per precoder/quantizer pair."""
    cfg = _load(manifest, require_users=True)
    if cfg.lens_enabled and manifest.no_build:
        profiles = _profiles_from_cache(cfg, manifest)
    else:
        profiles = linklevel.build_scenario_profiles(cfg)
    result = linklevel.run_monte_carlo(cfg, profiles, threads=manifest.threads)

    os.makedirs(manifest.out_dir, exist_ok=True)
    written = []
    for prec in cfg.precoders:
        for quant in cfg.quantizers:
            fname = f"{cfg.name}_{prec}_{quant.replace(':', '_')}.csv"
            path = os.path.join(manifest.out_dir, fname)
            with open(path, "w") as fh:
                fh.write(linklevel.render_csv(result, prec, quant))
            written.append(path)
    cmp_path = os.path.join(manifest.out_dir, f"{cfg.name}_comparison.csv")
    with open(cmp_path, "w") as fh:
        fh.write(linklevel.render_comparison(result))
    written.append(cmp_path)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_fit_gaussian(manifest: RunManifest) -> int:
    """Fit the spot model at the anchor angles and write the parameter table."""
    cfg = _load(manifest, require_users=False)
    lens, grid, array = cfg.lens, cfg.grid, cfg.array
    anchors = np.arange(-linklevel.SECTOR_DEG, linklevel.SECTOR_DEG + 1e-9, 5.0)
    profiles = {float(a): waveoptics.antenna_power_profile(lens, grid, array,
                                                           float(a))
                for a in anchors}
    model = feedback.fit_gaussian_model(profiles, lens, array)

    os.makedirs(manifest.out_dir, exist_ok=True)
    digest = profile_cache.params_digest(model.params)
    path = os.path.join(manifest.out_dir, f"gaussian_fit_{digest}.csv")
    with open(path, "w") as fh:
        for k, v in model.params.items():
            fh.write(f"# {k} = {v!r}\n")
        fh.write("theta_deg,p,q,r,residual_rms,poor_fit\n")
        for i, ang in enumerate(model.anchors_deg):
            fh.write(",".join([
                repr(float(ang)), repr(float(model.p[i])),
                repr(float(model.q[i])), repr(float(model.r[i])),
                repr(float(model.residual_rms[i])),
                str(bool(model.poor_fit[i])),
            ]) + "\n")
    print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "lens-profile": (cmd_lens_profile, "sweep angles into a power-profile cache"),
    "bpm-field": (cmd_bpm_field, "dump one propagation history and its peak"),
    "simulate": (cmd_simulate, "run the sum-rate Monte Carlo for a scenario"),
    "fit-gaussian": (cmd_fit_gaussian, "fit the Gaussian spot model"),
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario file (INI)")
    common.add_argument("--out-dir", default=".", help="directory for outputs")
    common.add_argument("--cache-dir", default=None,
                        help="directory for caches (default: out-dir)")
    common.add_argument("--seed", type=int, default=None,
                        help="override the scenario seed")
    common.add_argument("--threads", type=int,
                        default=max(1, os.cpu_count() or 1),
                        help="Monte-Carlo worker threads")
    common.add_argument("--no-build", action="store_true",
                        help="fail instead of computing missing caches")

    parser = argparse.ArgumentParser(
        prog="lensmimo",
        description="lens-array downlink simulator: wave optics to sum rates")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in _COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=help_text)
        if name == "bpm-field":
            sp.add_argument("--aod", type=float, default=0.0,
                            help="angle of departure, degrees")
            sp.add_argument("--steps", type=int, default=None,
                            help="axial steps (default: 1.5 focal lengths)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        manifest = RunManifest(
            config=args.config, out_dir=args.out_dir, cache_dir=args.cache_dir,
            seed=args.seed, threads=args.threads, no_build=args.no_build,
            aod_deg=getattr(args, "aod", 0.0), steps=getattr(args, "steps", None))
        return _COMMANDS[args.command][0](manifest)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

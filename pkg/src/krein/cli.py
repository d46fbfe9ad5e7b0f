"""``krein`` command: run preset or custom scenarios and write a report bundle.

    krein presets
    krein run config.json [--out DIR] [--threads N] [--seed S]
    krein run --preset NAME [--out DIR] [--threads N] [--seed S]

Exit status is 0 when every check passes, 2 when a numeric check fails and
3 when the configuration or the command line is invalid.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import platform
import sys
from dataclasses import asdict, dataclass, field, fields

from . import __version__
from .scenarios import PRESETS, RUNNERS, Report, _plain

EXIT_OK, EXIT_FAILED, EXIT_INVALID = 0, 2, 3


class ConfigError(ValueError):
    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass
class ScenarioConfig:
    """Every knob of a scenario run; all have defaults.

    ``xmax`` left as ``None`` takes the preset's default.  ``coefficients``
    is used by the ``custom`` kind: ``{"family": name, "params": {...}}`` or
    ``{"file": path, "role": "q" | "A"}``.
    """

    kind: str = "free_baseline"
    coefficients: dict | None = None
    params: dict = field(default_factory=dict)
    tol: float = 1e-10
    xmax: float | None = None
    step: float = 0.05
    lambdas: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    energy_band: list = field(default_factory=lambda: [0.25, 4.0])
    n_energies: int = 16
    scan_band: list = field(default_factory=lambda: [0.05, 4.0])
    n_scan: int = 80
    lambda_band: list = field(default_factory=lambda: [0.5, 3.0])
    n_samples: int = 64
    pass_fraction: float = 0.9
    eps_ladder: list = field(default_factory=lambda: [0.08, 0.04, 0.02, 0.01])
    resolvent_n: list = field(default_factory=lambda: [64, 128, 256])
    kernel_file: str | None = None
    secC_alphas: list = field(default_factory=lambda: [0.25, 0.5])
    secC_betas: list = field(default_factory=lambda: [1.2, 1.6, 2.0])
    seed: int = 0
    threads: int = 1
    out: str = "krein_out"

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        """Validate ``d`` against the defaults of its kind; all problems are reported together."""
        if not isinstance(d, dict):
            raise ConfigError(["config must be a JSON object"])
        errors = []
        known = {f.name: f for f in fields(cls)}
        for k in sorted(set(d) - set(known)):
            errors.append(f"unknown key {k!r}")
        kind = d.get("kind", cls.kind)
        if kind not in RUNNERS:
            errors.append(f"kind {kind!r} is not one of {sorted(RUNNERS)}")
            merged = dict(d)
        else:
            merged = {**PRESET_CONFIGS.get(kind, {}), **d}
        base = cls()
        vals = {}
        for name, f in known.items():
            if name not in merged:
                continue
            v = merged[name]
            default = getattr(base, name)
            err = _type_error(name, v, default)
            if err:
                errors.append(err)
            else:
                vals[name] = v
        for name in ("tol", "step", "pass_fraction"):
            v = vals.get(name)
            if isinstance(v, (int, float)) and not v > 0:
                errors.append(f"{name} must be positive")
        for name in ("energy_band", "scan_band", "lambda_band"):
            v = vals.get(name)
            if v is not None and (len(v) != 2 or not 0 < v[0] < v[1]):
                errors.append(f"{name} must be [lo, hi] with 0 < lo < hi")
        if vals.get("kind") == "custom" and not vals.get("coefficients"):
            errors.append("kind 'custom' needs a coefficients entry")
        c = vals.get("coefficients")
        if c is not None and not ("family" in c or "file" in c):
            errors.append("coefficients needs 'family' or 'file'")
        if isinstance(vals.get("threads"), int) and vals["threads"] < 1:
            errors.append("threads must be at least 1")
        if errors:
            raise ConfigError(errors)
        cfg = cls(**vals)
        if cfg.xmax is None:
            cfg.xmax = DEFAULT_XMAX.get(cfg.kind, 200.0)
        return cfg


def _type_error(name, v, default):
    if name in ("xmax",):
        ok = v is None or (isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0)
        return None if ok else f"{name} must be a positive number"
    if name in ("coefficients", "kernel_file"):
        ok = v is None or isinstance(v, dict if name == "coefficients" else str)
        return None if ok else f"{name} has the wrong type"
    if isinstance(default, bool):
        ok = isinstance(v, bool)
    elif isinstance(default, int):
        ok = isinstance(v, int) and not isinstance(v, bool)
    elif isinstance(default, float):
        ok = isinstance(v, (int, float)) and not isinstance(v, bool)
    elif isinstance(default, list):
        ok = isinstance(v, list) and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)
    else:
        ok = isinstance(v, type(default))
    return None if ok else f"{name} should be {type(default).__name__}, got {type(v).__name__}"


DEFAULT_XMAX = {
    "free_baseline": 100.0,
    "thm1_regime": 400.0,
    "thm2_lp_tails": 400.0,
    "thm3_smooth_qhat": 100.0,
    "vnw": 200.0,
    "secC_example_grid": 400.0,
    "accelerant_roundtrip": 1.0,
    "custom": 200.0,
}

PRESET_CONFIGS = {
    "thm1_regime": {"params": {"gamma": 0.2}, "n_samples": 8},
    "thm2_lp_tails": {"params": {"power": 0.8, "amplitude": 1.0}},
    "vnw": {"scan_band": [0.5, 1.5], "n_scan": 101},
    "accelerant_roundtrip": {"params": {"c": 1.0, "r": 1.0}},
}


@dataclass
class ReportBundle:
    out_dir: str
    manifest: dict
    summary: dict

    @property
    def passed(self) -> bool:
        return self.summary["verdict"] == "green"


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions():
    import mpmath
    import numpy
    import scipy
    return {"krein": __version__, "python": platform.python_version(), "numpy": numpy.__version__,
            "scipy": scipy.__version__, "mpmath": mpmath.__version__}


def run_scenario(cfg: ScenarioConfig) -> ReportBundle:
    """Run the pipeline of ``cfg.kind`` and write summary and manifest into ``cfg.out``."""
    os.makedirs(cfg.out, exist_ok=True)
    rep = Report(cfg.out, cfg.threads)
    RUNNERS[cfg.kind](cfg, rep)
    failed = [c["name"] for c in rep.checks if not c["passed"]]
    summary = {
        "kind": cfg.kind,
        "seed": cfg.seed,
        "verdict": "green" if rep.checks and not failed else "red",
        "failed": failed,
        "checks": rep.checks,
        "info": _plain(rep.info),
    }
    with open(rep.add_file("summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    manifest = {
        "config": asdict(cfg),
        "seed": cfg.seed,
        "versions": _versions(),
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "files": [{"path": f, "sha256": _sha256(rep.path(f))} for f in rep.files],
    }
    with open(os.path.join(cfg.out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return ReportBundle(cfg.out, manifest, summary)


def list_presets():
    """``(name, description, anchor)`` in a fixed order."""
    return [(k, v[0], v[1]) for k, v in PRESETS.items()]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="krein", description="Krein-system spectral analysis scenarios")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("presets", help="list the preset scenarios")
    r = sub.add_parser("run", help="run a scenario from a JSON config or a preset")
    r.add_argument("config", nargs="?", help="scenario config (JSON)")
    r.add_argument("--preset", choices=list(PRESETS), help="run a preset instead of a config file")
    r.add_argument("--out", help="output directory")
    r.add_argument("--threads", type=int, help="worker threads for parameter sweeps")
    r.add_argument("--seed", type=int, help="seed for sampled spectral parameters")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        for name, desc, anchor in list_presets():
            print(f"{name:22s} {desc}  [{anchor}]")
        return EXIT_OK

    if (args.config is None) == (args.preset is None):
        print("krein run: give exactly one of a config file or --preset", file=sys.stderr)
        return EXIT_INVALID
    if args.preset:
        d = {"kind": args.preset}
    else:
        try:
            with open(args.config) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"krein run: cannot read config: {exc}", file=sys.stderr)
            return EXIT_INVALID
    if isinstance(d, dict):
        for key in ("out", "threads", "seed"):
            if getattr(args, key) is not None:
                d[key] = getattr(args, key)
        if args.out is None and "out" not in d:
            d["out"] = os.path.join("krein_out", d.get("kind", "free_baseline"))
    try:
        cfg = ScenarioConfig.from_dict(d)
    except ConfigError as exc:
        print("invalid config:", file=sys.stderr)
        for e in exc.errors:
            print(f"  - {e}", file=sys.stderr)
        return EXIT_INVALID

    bundle = run_scenario(cfg)
    for c in bundle.summary["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}  {c['note']}")
    print(f"{bundle.summary['verdict']}: {len(bundle.manifest['files'])} files in {cfg.out}")
    return EXIT_OK if bundle.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())

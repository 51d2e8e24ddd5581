"""Flat key-value pipeline configuration with typed defaults.

Every key has a default; unknown keys are rejected so a typo in a config
file fails loudly instead of silently running with defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .errors import ConfigError


@dataclass(frozen=True)
class PipelineConfig:
    # one seed drives generation, both trainings, and evaluation
    seed: int = 0
    # directory holding every generated artifact (datasets, models, reports)
    out_dir: str = "out"
    # synthetic data (desk-scale counterpart of the 20,000/5,000 protocol)
    train_count: int = 2000
    test_count: int = 500
    landmarks: int = 72
    basis_size: int = 20
    perspective_fraction: float = 0.5
    # view-normalizer training
    viewnorm_epochs: int = 1000
    viewnorm_lr: float = 1e-3
    viewnorm_batch: int = 32
    viewnorm_hidden: str = "64,32,64"
    # dissimilarity training
    dissim_epochs: int = 40
    dissim_lr: float = 1e-3
    dissim_width: int = 20
    dissim_scheme: str = "same-face"
    # shared training details
    val_fraction: float = 0.1
    # embedding; past ~60 majorization steps stress keeps falling but the
    # reconstruction error against ground truth does not, so the cap stays low
    mds_mode: str = "nonmetric"
    mds_max_iter: int = 60
    mds_tol: float = 1e-9
    # evaluation protocol
    eval_size: int = 500
    eval_reps: int = 10
    skip_viewnorm: bool = False

    def hidden_widths(self) -> tuple[int, ...]:
        try:
            widths = tuple(int(w) for w in self.viewnorm_hidden.split(","))
        except ValueError:
            raise ConfigError(
                f"viewnorm_hidden must be comma-separated ints, "
                f"got {self.viewnorm_hidden!r}"
            ) from None
        if not widths or min(widths) < 1:
            raise ConfigError("viewnorm_hidden needs positive widths")
        return widths


def _parse_value(key: str, text: str, kind: type):
    text = text.strip()
    try:
        if kind is bool:
            lowered = text.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError:
        raise ConfigError(
            f"config key {key!r} expects {kind.__name__}, got {text!r}"
        ) from None


def parse_config(text: str, origin: str = "<config>") -> PipelineConfig:
    """Parse ``key = value`` lines; '#' starts a comment."""
    types = {f.name: type(f.default) for f in fields(PipelineConfig)}
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}: line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in types:
            raise ConfigError(f"{origin}: line {lineno}: unknown key {key!r}")
        if key in overrides:
            raise ConfigError(f"{origin}: line {lineno}: duplicate key {key!r}")
        overrides[key] = _parse_value(key, value, types[key])
    return PipelineConfig(**overrides)


def load_config(path) -> PipelineConfig:
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text, origin=str(path))


def override_config(config: PipelineConfig, **kw) -> PipelineConfig:
    """Apply non-None keyword overrides (CLI flags beat file values)."""
    updates = {k: v for k, v in kw.items() if v is not None}
    for key in updates:
        if key not in {f.name for f in fields(PipelineConfig)}:
            raise ConfigError(f"unknown config key {key!r}")
    return replace(config, **updates)


def config_to_text(config: PipelineConfig) -> str:
    lines = [f"{f.name} = {getattr(config, f.name)}" for f in fields(PipelineConfig)]
    return "\n".join(lines) + "\n"

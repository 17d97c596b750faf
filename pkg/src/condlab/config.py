"""Plain-text key=value experiment configuration.

One assignment per line, ``#`` starts a comment, blank lines are skipped.
Values stay strings until a schema coerces them, so the same file can feed
any subcommand. Command-line flags always override file values.
"""

from .exceptions import ValidationError
from .ortho import RegConfig

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}

# Union of the keys any subcommand understands; per-layer regularizer
# strengths use the open-ended "lambda.<layer-name>" family.
KNOWN_KEYS = {
    "dataset": str,
    "arch": str,
    "seed": int,
    "out": str,
    "data_dir": str,
    "epochs": int,
    "batch_size": int,
    "learning_rate": float,
    "optimizer": str,
    "subsample": int,
    "val_fraction": float,
    "lambda_base": float,
    "reg_enabled": bool,
    "default_lambda": float,
    "adv": bool,
    "adv_eps": float,
    "mix_fraction": float,
    "attack": str,
    "eps": float,
    "alpha": float,
    "iters": int,
    "clip": bool,
    "scale": str,
    "perturb_scale": float,
    "sample_index": int,
    "rounds": int,
    "seed_count": int,
    "lam_aug": float,
    "eval_count": int,
    "table": str,
    "checkpoint": str,
    "train_count": int,
    "test_count": int,
}


def coerce(key, raw):
    """Parse a raw string for ``key`` with that key's declared type."""
    kind = float if key.startswith("lambda.") else KNOWN_KEYS.get(key)
    if kind is None:
        raise ValidationError(f"unknown config key {key!r}")
    if kind is bool:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValidationError(f"{key}: expected a boolean, got {raw!r}")
    if kind is str:
        return raw
    try:
        return kind(raw)
    except ValueError:
        raise ValidationError(
            f"{key}: expected {kind.__name__}, got {raw!r}") from None


def parse_string(text, origin="<config>"):
    """Parse config text into a {key: typed value} dict."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValidationError(
                f"{origin}:{lineno}: expected key=value, got {body!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if not key:
            raise ValidationError(f"{origin}:{lineno}: empty key")
        if key in values:
            raise ValidationError(f"{origin}:{lineno}: duplicate key {key!r}")
        values[key] = coerce(key, raw)
    return values


def load(path):
    """Read and parse a config file. Missing files surface as OSError so
    the command line can report them as I/O failures."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_string(text, origin=str(path))


def reg_from_values(values):
    """Build a RegConfig from config keys, or None when none are set.

    ``lambda_base`` is handled by the training config itself (it resolves
    per-layer strengths from initial conditioning), so this looks only at
    the explicit keys: reg_enabled, default_lambda, lambda.<layer>.
    """
    per_layer = {key[len("lambda."):]: val
                 for key, val in values.items() if key.startswith("lambda.")}
    enabled = values.get("reg_enabled")
    default = values.get("default_lambda")
    if enabled is None and default is None and not per_layer:
        return None
    return RegConfig(enabled=True if enabled is None else enabled,
                     default_lambda=0.0 if default is None else default,
                     per_layer=per_layer)


def merge(values, overrides):
    """File values overlaid by non-None command-line overrides."""
    merged = dict(values)
    for key, val in overrides.items():
        if val is not None:
            merged[key] = val
    return merged

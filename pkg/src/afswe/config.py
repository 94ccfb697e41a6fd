"""Flat ``key = value`` run configuration.

One assignment per line, ``#`` starts a comment, keys are dotted::

    scenario = parabolic-bowl
    run.cells = 400
    run.cfl = 0.7
    run.t_end = 1000
    run.out = out/bowl
    params.v_max = 5
    convergence.grids = 64,128,256,4096
    wb_check.steps = 10000

``params.*`` entries are handed to the scenario builder.  Values stay
strings; the consumer converts them.
"""
from __future__ import annotations

from pathlib import Path

KNOWN_SECTIONS = ("run", "params", "convergence", "wb_check")
KNOWN_TOP = ("scenario",)


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    """Dotted key -> string value; later assignments win."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"{source}:{lineno}: empty key")
        head = key.split(".", 1)[0]
        if "." in key:
            if head not in KNOWN_SECTIONS:
                raise ValueError(f"{source}:{lineno}: unknown section {head!r}")
        elif key not in KNOWN_TOP:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def load_config(path) -> dict[str, str]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise OSError(f"cannot read config {p}: {e.strerror or e}") from e
    return parse_config(text, str(p))


def section(cfg: dict[str, str], name: str) -> dict[str, str]:
    """Entries of one section with the prefix stripped."""
    prefix = name + "."
    return {k[len(prefix):]: v for k, v in cfg.items() if k.startswith(prefix)}

"""On-disk eigenvalue cache with checksums and atomic replacement."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from collections.abc import Sequence
from functools import lru_cache
from pathlib import Path

import mpmath
from filelock import FileLock

from .modforms import Eigenform, hecke_eigenforms
from .numeric import DEFAULT_PREC, Precision
from .petersson import HarmonicBasis, solve_harmonic_weights

__all__ = ["mpf_to_hex", "hex_to_mpf", "default_cache_dir", "cache_path", "cache_get_or_build",
           "load_entry", "CacheCorrupt"]

log = logging.getLogger(__name__)


class CacheCorrupt(ValueError):
    pass


def mpf_to_hex(v) -> str:
    """Exact hex-float text of an mpf: [-]0x<mantissa>p<exponent>."""
    if not isinstance(v, mpmath.mpf):
        # integers and floats convert exactly at this width
        with mpmath.workprec(max(64, int(v).bit_length() + 64 if isinstance(v, int) else 64)):
            v = mpmath.mpf(v)
    sign, man, exp, _ = v._mpf_
    if not man:
        return "0x0p0"
    return f"{'-' if sign else ''}0x{int(man):x}p{exp}"


def hex_to_mpf(s: str):
    neg = s.startswith("-")
    body = s[1:] if neg else s
    if not body.startswith("0x") or "p" not in body:
        raise CacheCorrupt(f"bad hex float {s!r}")
    man_txt, exp_txt = body[2:].split("p")
    man = int(man_txt, 16)
    # exact: callers round with unary + under their own precision
    with mpmath.workprec(max(53, man.bit_length())):
        v = mpmath.mpf((man, int(exp_txt)))
        return -v if neg else v


def default_cache_dir() -> Path:
    env = os.environ.get("HML_CACHE_DIR")
    return Path(env) if env else Path.home() / ".cache" / "hml"


def cache_path(cache_dir, k: int) -> Path:
    return Path(cache_dir) / f"eigen_k{k}.json"


def _digest(payload: dict) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _serialize(basis: HarmonicBasis, n_max: int, prec: Precision) -> dict:
    forms = []
    for f in basis.forms:
        entry = {"index": f.field_tag, "lambda_hex": [mpf_to_hex(v) for v in f.lam]}
        if basis.dim == 1:
            entry["a_int"] = [str(int(a)) for a in f.a]
        forms.append(entry)
    payload = {
        "k": basis.k,
        "n_max": n_max,
        "dim": basis.dim,
        "prec_bits": prec.bits,
        "forms": forms,
        "weights_hex": [mpf_to_hex(w) for w in basis.weights],
        "weight_tail_hex": mpf_to_hex(basis.weight_tail),
        "residual_hex": mpf_to_hex(basis.residual),
    }
    payload["sha256"] = _digest(payload)
    return payload


def _deserialize(payload: dict, n_max: int, prec: Precision) -> HarmonicBasis:
    k = payload["k"]
    forms = []
    with prec.ctx():
        for entry in payload["forms"]:
            lam = tuple(+hex_to_mpf(s) for s in entry["lambda_hex"][:n_max])
            if "a_int" in entry:
                a = tuple(int(s) for s in entry["a_int"][:n_max])
            else:
                a = _ScaledCoeffs(lam, k, prec)
            forms.append(Eigenform(k, entry["index"], a, lam, prec.bits))
        weights = tuple(+hex_to_mpf(s) for s in payload["weights_hex"])
        tail = hex_to_mpf(payload["weight_tail_hex"])
        res = hex_to_mpf(payload["residual_hex"])
    return HarmonicBasis(k, tuple(forms), weights, tail, res)


class _ScaledCoeffs(Sequence):
    """a(n) = lambda(n) n^((k-1)/2), evaluated on access at the cache precision."""

    def __init__(self, lam: tuple, k: int, prec: Precision):
        self._lam, self._k, self._prec = lam, k, prec

    def __len__(self) -> int:
        return len(self._lam)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        n = range(1, len(self) + 1)[i]
        with self._prec.ctx():
            return self._lam[n - 1] * mpmath.power(n, mpmath.mpf(self._k - 1) / 2)


def load_entry(path: Path) -> dict | None:
    """Parsed cache payload, or None when missing or failing its checksum."""
    if not path.exists():
        return None
    try:
        payload = json.loads(path.read_text())
        digest = payload.pop("sha256")
        if digest != _digest(payload):
            raise CacheCorrupt("checksum mismatch")
    except (ValueError, KeyError) as exc:
        log.warning("cache entry %s unusable (%s); rebuilding", path, exc)
        return None
    return payload


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _covers(payload: dict | None, n_max: int, prec: Precision) -> bool:
    return payload is not None and payload["n_max"] >= n_max and payload["prec_bits"] >= prec.bits


def cache_get_or_build(k: int, n_max: int, prec: Precision = DEFAULT_PREC, cache_dir=None) -> HarmonicBasis:
    """Harmonic basis of weight k with lambda(n) for n <= n_max.

    A cached entry is used when its n_max and precision cover the request;
    values are then truncated and rounded to the requested shape. Otherwise
    the basis is rebuilt and the entry replaced atomically.
    """
    cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    return _get(int(k), int(n_max), prec, str(cache_dir.resolve()))


@lru_cache(maxsize=8)
def _get(k: int, n_max: int, prec: Precision, cache_dir: str) -> HarmonicBasis:
    root = Path(cache_dir)
    root.mkdir(parents=True, exist_ok=True)
    path = cache_path(root, k)
    with FileLock(str(path) + ".lock"):
        payload = load_entry(path)
        if not _covers(payload, n_max, prec):
            build_n = max(n_max, payload["n_max"]) if payload and payload["prec_bits"] >= prec.bits else n_max
            log.info("building eigenbasis k=%d n_max=%d", k, build_n)
            forms = hecke_eigenforms(k, max(build_n, 2), prec)
            basis = solve_harmonic_weights(k, forms, prec=prec)
            payload = _serialize(basis, build_n, prec)
            _atomic_write(path, json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n")
            # the cached text is the single source of truth, built or loaded
            payload.pop("sha256")
    return _deserialize(payload, n_max, prec)

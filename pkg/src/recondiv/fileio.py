"""JSON instance files.

Schema (``"format": "recondiv-instance/1"``)::

    {
      "format": "recondiv-instance/1",
      "model": "direct" | "additive" | "multiplicative",
      "agents": ["1", "2"],
      "old_apartments": ["o1", "o2"],
      "new_apartments": ["a1", "a2"],
      "exact": false,                      # optional; numbers may be "p/q" strings
      "values": [[...2n numbers...], ...], # direct: old apartments first
      "characteristics": [                 # optional, additive / multiplicative
        {"id": "t1", "name": "...", "endowment": -1.5, "p_value": 0.08}, ...],
      "scores": [[...|T| numbers...], ...],# alpha (additive) or rho (multiplicative)
      "beta": {"o1": [0, 1, ...], ...},    # one 0/1 row per apartment, all 2n required
      "base_price": {"o1": 160.0, ...},    # multiplicative only
      "normalize": 2.0                     # optional; multiplicative only, applied on load
    }

Strict loading rejects unknown keys; lenient loading warns and ignores them.
"""

from __future__ import annotations

import json
import math
import warnings
from fractions import Fraction
from pathlib import Path

from recondiv.errors import InstanceFormatError
from recondiv.model import (
    Additive,
    Characteristic,
    CharacteristicSpace,
    DirectMatrix,
    Instance,
    Multiplicative,
    normalize_multiplicative,
    validate,
)

FORMAT_TAG = "recondiv-instance/1"

_COMMON = {"format", "model", "agents", "old_apartments", "new_apartments", "exact"}
_KEYS = {
    "direct": _COMMON | {"values"},
    "additive": _COMMON | {"characteristics", "scores", "beta"},
    "multiplicative": _COMMON | {"characteristics", "scores", "beta", "base_price", "normalize"},
}

__all__ = ["FORMAT_TAG", "instance_to_dict", "instance_from_dict", "dumps", "loads", "load", "save"]


def _num_out(x):
    if isinstance(x, Fraction):
        return str(x)
    return x


def _num_in(x, exact: bool, where: str):
    if isinstance(x, bool) or not isinstance(x, (int, float, str)):
        raise InstanceFormatError(f"{where}: expected a number, got {x!r}")
    if isinstance(x, str):
        try:
            x = Fraction(x)
        except ValueError:
            raise InstanceFormatError(f"{where}: cannot parse number {x!r}") from None
        return x if exact else float(x)
    if isinstance(x, float) and not math.isfinite(x):
        raise InstanceFormatError(f"{where}: not finite")
    if exact:
        return Fraction(repr(x)) if isinstance(x, float) else Fraction(x)
    return float(x)


def _matrix(obj, exact, where):
    if not isinstance(obj, list) or not all(isinstance(r, list) for r in obj):
        raise InstanceFormatError(f"{where}: expected a list of rows")
    return [[_num_in(x, exact, f"{where}[{i}][{j}]") for j, x in enumerate(row)]
            for i, row in enumerate(obj)]


def _id_list(doc, key):
    v = doc.get(key)
    if not isinstance(v, list) or not all(isinstance(s, str) for s in v):
        raise InstanceFormatError(f"{key}: expected a list of identifiers")
    return v


def instance_to_dict(instance: Instance) -> dict:
    val = instance.valuation
    doc = {
        "format": FORMAT_TAG,
        "model": instance.model,
        "agents": list(instance.agents),
        "old_apartments": list(instance.old_apartments),
        "new_apartments": list(instance.new_apartments),
    }
    if instance.exact:
        doc["exact"] = True
    apartments = list(instance.old_apartments) + list(instance.new_apartments)
    if isinstance(val, DirectMatrix):
        doc["values"] = [[_num_out(x) for x in row] for row in val.values]
        return doc
    if instance.characteristics is not None:
        chars = []
        for c in instance.characteristics:
            entry = {"id": c.id}
            if c.name:
                entry["name"] = c.name
            if c.endowment is not None:
                entry["endowment"] = c.endowment
            if c.p_value is not None:
                entry["p_value"] = c.p_value
            chars.append(entry)
        doc["characteristics"] = chars
    doc["scores"] = [[_num_out(x) for x in row] for row in val.scores]
    doc["beta"] = {a: [int(val.beta[t][c]) for t in range(len(val.beta))] for c, a in enumerate(apartments)}
    if isinstance(val, Multiplicative):
        doc["base_price"] = {a: val.base_price[c] for c, a in enumerate(apartments)}
    return doc


def instance_from_dict(doc: dict, strict: bool = True) -> Instance:
    """Build and validate an instance; raises :class:`InstanceFormatError` listing every problem."""
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    if doc.get("format") != FORMAT_TAG:
        raise InstanceFormatError(f"format: expected {FORMAT_TAG!r}, got {doc.get('format')!r}")
    model = doc.get("model")
    if model not in _KEYS:
        raise InstanceFormatError(f"model: expected one of {sorted(_KEYS)}, got {model!r}")
    unknown = sorted(set(doc) - _KEYS[model])
    if unknown:
        if strict:
            raise InstanceFormatError(f"unknown fields: {', '.join(unknown)}", unknown)
        warnings.warn(f"ignoring unknown fields: {', '.join(unknown)}", stacklevel=2)
    exact = bool(doc.get("exact", False))
    agents = _id_list(doc, "agents")
    old = _id_list(doc, "old_apartments")
    new = _id_list(doc, "new_apartments")
    apartments = old + new
    space = None

    if model == "direct":
        if "values" not in doc:
            raise InstanceFormatError("values: missing")
        valuation = DirectMatrix(_matrix(doc["values"], exact, "values"))
    else:
        if "scores" not in doc:
            raise InstanceFormatError("scores: missing")
        raw_chars = doc.get("characteristics")
        if raw_chars is None:
            scores = doc["scores"]
            width = len(scores[0]) if isinstance(scores, list) and scores and isinstance(scores[0], list) else 0
        elif not isinstance(raw_chars, list) or not raw_chars:
            raise InstanceFormatError("characteristics: expected a non-empty list")
        else:
            width = len(raw_chars)
        chars = []
        for k, c in enumerate(raw_chars or ()):
            if not isinstance(c, dict) or not isinstance(c.get("id"), str):
                raise InstanceFormatError(f"characteristics[{k}]: expected an object with an 'id'")
            extra = set(c) - {"id", "name", "endowment", "p_value"}
            if extra and strict:
                raise InstanceFormatError(f"characteristics[{k}]: unknown fields {sorted(extra)}")
            endow = c.get("endowment")
            pval = c.get("p_value")
            chars.append(Characteristic(
                c["id"], c.get("name", ""),
                None if endow is None else _num_in(endow, False, f"characteristics[{k}].endowment"),
                None if pval is None else _num_in(pval, False, f"characteristics[{k}].p_value"),
            ))
        space = CharacteristicSpace(tuple(chars)) if raw_chars is not None else None
        beta_doc = doc.get("beta")
        if not isinstance(beta_doc, dict):
            raise InstanceFormatError("beta: expected an object keyed by apartment")
        missing = [a for a in apartments if a not in beta_doc]
        if missing:
            raise InstanceFormatError(f"beta: no indicators for {', '.join(missing)} (imputation is not done on load)",
                                      [f"beta: missing {a}" for a in missing])
        extra = sorted(set(beta_doc) - set(apartments))
        if extra:
            raise InstanceFormatError(f"beta: unknown apartments {', '.join(extra)}")
        rows = []
        for a in apartments:
            row = beta_doc[a]
            if not isinstance(row, list) or len(row) != width:
                raise InstanceFormatError(f"beta[{a}]: expected {width} indicators")
            if any(b is None for b in row):
                raise InstanceFormatError(f"beta[{a}]: missing indicator (imputation is not done on load)")
            if any(isinstance(b, bool) or b not in (0, 1) for b in row):
                raise InstanceFormatError(f"beta[{a}]: indicators must be 0 or 1")
            rows.append([int(b) for b in row])
        beta = [list(col) for col in zip(*rows)]  # |T| x 2n
        if model == "additive":
            valuation = Additive(_matrix(doc["scores"], exact, "scores"), beta)
        else:
            if exact:
                raise InstanceFormatError("exact: multiplicative instances use floating point")
            price_doc = doc.get("base_price")
            if not isinstance(price_doc, dict) or any(a not in price_doc for a in apartments):
                raise InstanceFormatError("base_price: expected a price for every apartment")
            prices = [_num_in(price_doc[a], False, f"base_price[{a}]") for a in apartments]
            valuation = Multiplicative(_matrix(doc["scores"], False, "scores"), beta, prices)
            if doc.get("normalize") is not None:
                problems = validate(Instance(old, new, valuation, agents, space))
                if problems:
                    raise InstanceFormatError("invalid instance", problems)
                valuation = normalize_multiplicative(valuation, _num_in(doc["normalize"], False, "normalize"))

    instance = Instance(old, new, valuation, agents, space)
    problems = validate(instance)
    if problems:
        raise InstanceFormatError("invalid instance: " + "; ".join(problems), problems)
    return instance


def dumps(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), indent=2) + "\n"


def loads(text: str, strict: bool = True) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from None
    return instance_from_dict(doc, strict)


def load(path, strict: bool = True) -> Instance:
    return loads(Path(path).read_text(), strict)


def save(instance: Instance, path) -> None:
    Path(path).write_text(dumps(instance))

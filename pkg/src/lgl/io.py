"""JSON game files and deterministic report serialisation.

Game document layout (``format: "lgl-game/1"``)::

    {
      "format": "lgl-game/1",
      "name": "...",
      "characteristics": {"labels": [...], "nu": [...]},
      "actions": {"list": [...], "leq": [[a, b], ...], "join": [[...]], "meet": [[...]]},
      "availability": {"<char label>": [action, ...]},
      "states": {"labels": [...], "values": [...] | null},
      "type_space": {"worlds": [...], "sigma": {"<world>": state},
                     "tau": {"<world>": [[char, belief_id, weight], ...]}},
      "beliefs": [{"<world>": prob, ...}, ...],
      "payoff": {"mode": "linear",
                 "base": [[char, action, state, value], ...],
                 "weights": [[char, action, state, char2, action2, value], ...]},
      "queries": [[char, belief_id], ...]
    }

``leq`` lists every pair a <= b including the reflexive ones; ``join`` and
``meet`` are optional tables indexed like ``list``.  Payoff entries that are
zero are omitted.  Floats are written with ``repr`` so files round-trip
bit-exactly.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .errors import GameFormatError
from .game import (ActionLattice, CharacteristicSpace, GameInstance, PayoffOracle, TypeSpace)

FORMAT = "lgl-game/1"


def _need(doc: dict, key: str, where: str = "document"):
    if not isinstance(doc, dict) or key not in doc:
        raise GameFormatError(f"missing '{key}' in {where}")
    return doc[key]


def _lookup(index: dict, key, what: str):
    try:
        return index[key]
    except (KeyError, TypeError):
        raise GameFormatError(f"unknown {what} {key!r}") from None


def game_from_dict(doc: dict) -> GameInstance:
    if not isinstance(doc, dict):
        raise GameFormatError("game document must be a JSON object")
    if doc.get("format", FORMAT) != FORMAT:
        raise GameFormatError(f"unsupported format {doc.get('format')!r}")
    try:
        return _game_from_dict(doc)
    except GameFormatError:
        raise
    except (TypeError, ValueError, IndexError, AttributeError) as exc:
        raise GameFormatError(f"malformed game document: {exc}") from exc


def _game_from_dict(doc: dict) -> GameInstance:
    ch = _need(doc, "characteristics")
    labels = list(_need(ch, "labels", "characteristics"))
    chars = CharacteristicSpace(labels, [float(x) for x in _need(ch, "nu", "characteristics")])
    c_index = {lab: k for k, lab in enumerate(labels)}

    act = _need(doc, "actions")
    actions = list(_need(act, "list", "actions"))
    a_index = {a: k for k, a in enumerate(actions)}
    leq = np.zeros((len(actions), len(actions)), dtype=bool)
    for pair in _need(act, "leq", "actions"):
        lo, hi = pair
        leq[_lookup(a_index, lo, "action"), _lookup(a_index, hi, "action")] = True
    join = act.get("join")
    meet = act.get("meet")
    if (join is None) != (meet is None):
        raise GameFormatError("give both join and meet tables or neither")
    if join is not None:
        join = [[_lookup(a_index, x, "action") for x in row] for row in join]
        meet = [[_lookup(a_index, x, "action") for x in row] for row in meet]
    lattice = ActionLattice(tuple(actions), leq, None if join is None else np.array(join),
                            None if meet is None else np.array(meet))

    avail_doc = _need(doc, "availability")
    availability = []
    for lab in labels:
        acts = avail_doc.get(str(lab), avail_doc.get(lab)) if isinstance(avail_doc, dict) else None
        if acts is None:
            raise GameFormatError(f"no availability entry for characteristic {lab!r}")
        availability.append(tuple(_lookup(a_index, a, "action") for a in acts))

    st = _need(doc, "states")
    state_labels = list(_need(st, "labels", "states"))
    s_index = {s: k for k, s in enumerate(state_labels)}
    values = st.get("values")

    tsd = _need(doc, "type_space")
    worlds = list(_need(tsd, "worlds", "type_space"))
    w_index = {str(w): k for k, w in enumerate(worlds)}
    sigma_doc = _need(tsd, "sigma", "type_space")
    tau_doc = _need(tsd, "tau", "type_space")
    sigma, tau = [], []
    for w in worlds:
        key = str(w)
        if key not in sigma_doc or key not in tau_doc:
            raise GameFormatError(f"world {w!r} lacks sigma or tau")
        sigma.append(_lookup(s_index, sigma_doc[key], "state"))
        tau.append([(_lookup(c_index, c, "characteristic"), int(b), float(x)) for c, b, x in tau_doc[key]])
    beliefs = np.zeros((len(_need(doc, "beliefs")), len(worlds)))
    for k, row in enumerate(doc["beliefs"]):
        for w, pr in row.items():
            beliefs[k, _lookup(w_index, str(w), "world")] = float(pr)
    types = TypeSpace(tuple(worlds), tuple(state_labels), sigma, tuple(tau), beliefs,
                      None if values is None else [float(v) for v in values])

    pay = _need(doc, "payoff")
    mode = _need(pay, "mode", "payoff")
    if mode != "linear":
        raise GameFormatError("only linear payoffs can be stored in a game file")
    n_c, n_a, n_s = len(labels), len(actions), len(state_labels)
    base = np.zeros((n_c, n_a, n_s))
    weights = np.zeros((n_c, n_a, n_s, n_c, n_a))
    for c, a, s, v in pay.get("base", []):
        base[_lookup(c_index, c, "characteristic"), _lookup(a_index, a, "action"),
             _lookup(s_index, s, "state")] += float(v)
    for c, a, s, c2, a2, v in pay.get("weights", []):
        weights[_lookup(c_index, c, "characteristic"), _lookup(a_index, a, "action"),
                _lookup(s_index, s, "state"), _lookup(c_index, c2, "characteristic"),
                _lookup(a_index, a2, "action")] += float(v)
    queries = [(_lookup(c_index, c, "characteristic"), int(b)) for c, b in doc.get("queries", [])]
    return GameInstance(chars, lattice, tuple(availability), types,
                        PayoffOracle("linear", base, weights), tuple(queries), str(doc.get("name", "game")))


def _plain(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return x


def game_to_dict(g: GameInstance) -> dict:
    if not g.payoff.linear:
        raise GameFormatError("black-box payoffs cannot be serialised")
    labels = [_plain(x) for x in g.characteristics.labels]
    actions = [_plain(x) for x in g.lattice.actions]
    states = [_plain(x) for x in g.types.states]
    worlds = [str(w) for w in g.types.worlds]
    lat = g.lattice
    out: dict[str, Any] = {
        "format": FORMAT,
        "name": g.name,
        "characteristics": {"labels": labels, "nu": [float(x) for x in g.characteristics.nu]},
        "actions": {"list": actions,
                    "leq": [[actions[i], actions[j]] for i, j in zip(*np.nonzero(lat.leq))]},
        "availability": {str(labels[c]): [actions[a] for a in acts] for c, acts in enumerate(g.availability)},
        "states": {"labels": states,
                   "values": None if g.types.state_values is None else [float(v) for v in g.types.state_values]},
        "type_space": {
            "worlds": worlds,
            "sigma": {w: states[int(s)] for w, s in zip(worlds, g.types.sigma)},
            "tau": {w: [[labels[c], b, float(x)] for c, b, x in atoms] for w, atoms in zip(worlds, g.types.tau)},
        },
        "beliefs": [{worlds[t]: float(row[t]) for t in np.nonzero(row)[0]} for row in g.types.beliefs],
        "payoff": {
            "mode": "linear",
            "base": [[labels[c], actions[a], states[s], float(g.payoff.base[c, a, s])]
                     for c, a, s in zip(*np.nonzero(g.payoff.base))],
            "weights": [[labels[c], actions[a], states[s], labels[c2], actions[a2],
                         float(g.payoff.weights[c, a, s, c2, a2])]
                        for c, a, s, c2, a2 in zip(*np.nonzero(g.payoff.weights))],
        },
        "queries": [[labels[c], b] for c, b in g.queries],
    }
    if lat.is_lattice:
        out["actions"]["join"] = [[actions[int(x)] for x in row] for row in lat.join_table]
        out["actions"]["meet"] = [[actions[int(x)] for x in row] for row in lat.meet_table]
    return out


def load_game(path) -> GameInstance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise GameFormatError(f"{path}: invalid JSON ({exc})") from exc
    return game_from_dict(doc)


def dump_game(g: GameInstance) -> str:
    return json.dumps(game_to_dict(g), indent=1) + "\n"


def save_game(g: GameInstance, path) -> None:
    Path(path).write_text(dump_game(g))


# ---------------------------------------------------------------------------
# reports

REPORT_DIGITS = 12


def normalise(x):
    """Round floats to 12 significant digits; map non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): normalise(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [normalise(v) for v in x]
    if isinstance(x, (frozenset, set)):
        return [normalise(v) for v in sorted(x)]
    if isinstance(x, np.ndarray):
        return normalise(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "inf" if x > 0 else "-inf" if x < 0 else "nan"
        return 0.0 if x == 0 else float(f"{x:.{REPORT_DIGITS}g}")
    return x


def dump_report(obj) -> str:
    return json.dumps(normalise(obj), sort_keys=True, indent=1) + "\n"

"""The three worked examples, as config documents.

None of the examples states a jump rate; the Remark on the 3-mode example
uses ``P(T1 <= t) = 1 - exp(-t)``, so every fixture runs with unit rates.
``M`` and ``T`` are not fixed by the examples either and default to 2 and 1,
except ``exp-3-4-final`` which is only allowed a single jump.
"""
import copy
import json

from .model import SwitchSystem, parse_system

_SHIFT = [[0.0, 0.0], [1.0, 0.0]]
_ZERO = [[0.0, 0.0], [0.0, 0.0]]

_EXP_3_3 = {
    "N": 2,
    "d": 1,
    "modes": ["e1", "e2", "e3"],
    "lambda": {"e1": 1.0, "e2": 1.0, "e3": 1.0},
    "Q": [[0.0, 1.0, 0.0],
          [0.0, 0.0, 1.0],
          [0.0, 1.0, 0.0]],
    "A": {"e1": _SHIFT, "e2": _ZERO, "e3": _ZERO},
    "B": [[1.0], [0.0]],
    "M": 2,
    "T": 1.0,
    "gamma0": "e1",
}

_EXP_3_4 = {
    "N": 2,
    "d": 1,
    "modes": ["0", "1"],
    "lambda": {"0": 1.0, "1": 1.0},
    "Q": [[0.0, 1.0],
          [1.0, 0.0]],
    "A": {"0": _SHIFT, "1": _SHIFT},
    "B": [[1.0], [0.0]],
    # C(γ, 1-γ) = [[-1, 0], [γ, -1]]
    "C": {"0->1": [[-1.0, 0.0], [0.0, -1.0]],
          "1->0": [[-1.0, 0.0], [1.0, -1.0]]},
    "M": 2,
    "T": 1.0,
    "gamma0": "0",
}

_EXP_3_4_FINAL = dict(copy.deepcopy(_EXP_3_3), M=1)

FIXTURES = {
    "exp-3-3": _EXP_3_3,
    "exp-3-4": _EXP_3_4,
    "exp-3-4-final": _EXP_3_4_FINAL,
}
ALIASES = {"exp-3-3-final": "exp-3-4-final"}


def fixture_document(name: str) -> dict:
    name = ALIASES.get(name, name)
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {sorted(FIXTURES)}")
    return copy.deepcopy(FIXTURES[name])


def load_fixture(name: str, **overrides) -> SwitchSystem:
    """Parse a named fixture; ``overrides`` go to :meth:`SwitchSystem.with_overrides`."""
    system = parse_system(fixture_document(name))
    if any(v is not None for v in overrides.values()):
        system = system.with_overrides(**overrides)
    return system


def show_fixture(name: str) -> str:
    return json.dumps(fixture_document(name), indent=2)

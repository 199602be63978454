"""Load every fixture through the library and serialize it back."""
import json
from pathlib import Path

from zerobound.family import DiffOpFamily, EpsVector, Series
from zerobound.models import system_from_json, system_to_json
from zerobound.poly import ExactMPoly, UniPolyC

FIXTURES = Path(__file__).parent / "fixtures"
# keys that configure a run rather than describe an object
RUN_KEYS = ("center", "radius", "interval_length", "start", "disks", "combinations", "x0",
            "eps_order", "truncated")


def fixture_paths():
    return sorted(FIXTURES.glob("*.json"))


def load(path):
    return json.loads(Path(path).read_text())


def roundtrip(obj):
    """(original object part, re-serialized object part)."""
    obj = {k: v for k, v in obj.items() if k not in RUN_KEYS}
    if obj.get("kind") == "universal":
        return obj, dict(obj)
    if "kind" in obj:
        return obj, system_to_json(system_from_json(obj))
    if "system" in obj:
        return obj, {"system": system_to_json(system_from_json(obj["system"]))}
    if "polynomial" in obj:
        return obj, {"polynomial": UniPolyC.from_json(obj["polynomial"]).to_json()}
    if "functions" in obj:
        return obj, {"functions": [ExactMPoly.from_json(f).to_json() for f in obj["functions"]]}
    if "operator" in obj:
        return obj, {"operator": DiffOpFamily.from_json(obj["operator"]).to_json()}
    if "vectors" in obj:
        return obj, {"vectors": [EpsVector.from_json(v).to_json() for v in obj["vectors"]]}
    if "matrix" in obj:
        return obj, {"N": obj["N"],
                     "matrix": [[Series.from_json(e).to_json() for e in r]
                                for r in obj["matrix"]]}
    raise ValueError("unknown fixture layout")

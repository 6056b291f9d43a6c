"""JSON input and output for algebras, maps, squares, problems, spaces and covers.

Every reader accepts the document produced by the matching writer, so reports
can be fed back in.  The formats are described in ``docs/schemas.md``.
"""
from __future__ import annotations

import re

import numpy as np

from . import artin
from .artin import AlgebraHom, LocalAlgebra, Square
from .defun import ProRep, TaggedScalarProblem
from .errors import DefstackError
from .field import Field, QQ
from .probmod import BaseAlgebra, ModuleProblem, QuotientProblem
from . import site


class SchemaError(DefstackError):
    """A JSON document does not match the expected shape."""


def field_from_json(obj, default: Field | None = None) -> Field:
    if obj is None:
        if default is None:
            raise SchemaError("no field given")
        return default
    try:
        return Field.from_json(obj)
    except ValueError as ex:
        raise SchemaError(str(ex)) from None


_SHORT = re.compile(r"^k\[([^\]]*)\](?:/\((.*)\))?$")


def algebra_from_string(text: str, F: Field) -> LocalAlgebra:
    """``k``, ``k[V2]`` or a monomial presentation such as ``k[x,y]/(x^2,xy,y^2)``."""
    text = text.replace(" ", "")
    if text == "k":
        return artin.residue_field(F)
    m = re.match(r"^k\[V(\d+)\]$", text)
    if m:
        return artin.k_of_V(F, int(m.group(1)))
    if text in ("k[e]", "k[eps]"):
        return artin.k_of_V(F, 1)
    m = _SHORT.match(text)
    if not m:
        raise SchemaError(f"cannot read algebra {text!r}")
    variables = [v for v in m.group(1).split(",") if v]
    relations = [r for r in (m.group(2) or "").split(",") if r]
    return artin.monomial_quotient(F, variables, relations)


def algebra_from_json(obj, default: Field | None = None) -> LocalAlgebra:
    if isinstance(obj, LocalAlgebra):
        return obj
    if isinstance(obj, str):
        return algebra_from_string(obj, field_from_json(None, default or QQ))
    if not isinstance(obj, dict):
        raise SchemaError("an algebra is a string or an object")
    F = field_from_json(obj.get("field"), default)
    if "monomial" in obj:
        mono = obj["monomial"]
        return artin.monomial_quotient(F, mono["vars"], mono.get("relations", []), name=obj.get("name", ""))
    if "table" in obj:
        tab = obj["table"]
        return artin.make_algebra(F, tab["labels"], tab["mult"], name=obj.get("name", ""))
    if "name" in obj:
        return algebra_from_string(obj["name"], F)
    raise SchemaError("an algebra needs 'monomial' or 'table'")


def base_from_json(obj, default: Field | None = None) -> BaseAlgebra:
    """Like an algebra, but a table need not describe a local ring."""
    if isinstance(obj, dict) and "table" in obj:
        F = field_from_json(obj.get("field"), default)
        tab = obj["table"]
        try:
            return BaseAlgebra.from_local(artin.make_algebra(F, tab["labels"], tab["mult"]))
        except DefstackError:
            return BaseAlgebra(F, tab["labels"], F.array(tab["mult"]), name=obj.get("name", ""))
    return BaseAlgebra.from_local(algebra_from_json(obj, default))


def base_to_json(B: BaseAlgebra) -> dict:
    local = getattr(B, "_local", None)
    if local is not None:
        return local.to_json()
    return {"field": B.field.to_json(),
            "table": {"labels": list(B.labels), "mult": artin._table_to_json(B.table)}}


def hom_from_json(obj, default: Field | None = None, *, source: LocalAlgebra | None = None,
                  target: LocalAlgebra | None = None) -> AlgebraHom:
    """``{"source", "target", "matrix"}``, or ``"images"`` of the source variables."""
    if not isinstance(obj, dict):
        raise SchemaError("a map is an object")
    src = source if source is not None else algebra_from_json(obj["source"], default)
    F = src.field
    tgt = target if target is not None else algebra_from_json(obj["target"], F)
    if "matrix" in obj:
        return AlgebraHom(src, tgt, F.array(obj["matrix"]))
    if "images" in obj:
        return artin.hom_from_images(src, tgt, obj["images"])
    if tgt.dim == 1:
        return artin.residue_map(src)
    raise SchemaError("a map needs 'matrix' or 'images'")


def square_from_json(obj, default: Field | None = None) -> Square:
    """``{"source": algebra, "first": map, "second": map}``; the legs may omit their source."""
    A = algebra_from_json(obj["source"], default)
    return Square(hom_from_json(obj["first"], A.field, source=A), hom_from_json(obj["second"], A.field, source=A))


def square_to_json(sq: Square) -> dict:
    return {"source": sq.source.to_json(),
            "first": _leg_json(sq.first), "second": _leg_json(sq.second)}


def _leg_json(h: AlgebraHom) -> dict:
    return {"target": h.target.to_json(),
            "matrix": [[artin._scalar_json(x) for x in row] for row in h.matrix.tolist()]}


def substitution_quotient(A: LocalAlgebra, spec: str) -> AlgebraHom:
    """The quotient A → A/(v − value, ...) for ``spec = "t:0,x:y^2"``."""
    F = A.field
    rows = []
    for part in spec.split(","):
        if ":" not in part:
            raise SchemaError(f"substitution {part!r} is not of the form var:value")
        var, val = (s.strip() for s in part.split(":", 1))
        diff = F.array(list(A.element(var))) - F.array(list(A.element(val)))
        rows.append(list(F.reduce(diff)))
    R = F.array(rows)
    if not R.any():
        return artin.identity(A)
    _, q = artin.quotient_algebra(A, artin.ideal_closure(A, R))
    return q


# problems ---------------------------------------------------------------------------------


def problem_from_json(obj, default: Field | None = None):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SchemaError("a problem needs a 'kind'")
    kind = obj["kind"]
    if kind == "tagged-scalar":
        return TaggedScalarProblem(field_from_json(obj.get("field"), default))
    if kind in ("local-system", "geometric"):
        return geometric_from_json(obj, default)
    B = base_from_json(obj["B"], _field_hint(obj, default))
    if kind == "module":
        rank = obj.get("rank")
        return ModuleProblem(B, obj.get("M", []), None if rank is None else int(rank))
    if kind == "quotient":
        q = obj.get("quotient", obj)
        return QuotientProblem(B, q["E"], q["q0"])
    raise SchemaError(f"unknown problem kind {kind!r}")


def _field_hint(obj, default):
    if "field" in obj:
        return field_from_json(obj["field"], default)
    B = obj.get("B")
    if isinstance(B, dict) and "field" in B:
        return field_from_json(B["field"], default)
    return default


def _mat(M) -> list:
    return [[artin._scalar_json(x) for x in row] for row in np.asarray(M).tolist()]


def problem_to_json(problem) -> dict:
    from .gdstack import LocalSystemProblem

    if isinstance(problem, LocalSystemProblem):
        out = {"kind": "local-system", "space": problem.space.to_json(),
               "local_problem": problem_to_json(problem.pointwise)}
        if problem.twist:
            out["twist"] = {f"{a},{b}": _mat(M) for (a, b), M in problem.twist.items()}
        return out
    if isinstance(problem, ModuleProblem):
        return {"kind": "module", "B": base_to_json(problem.B), "rank": problem.rank,
                "M": [_mat(m) for m in problem.M[1:]]}
    if isinstance(problem, QuotientProblem):
        return {"kind": "quotient", "B": base_to_json(problem.B), "E": [_mat(m) for m in problem.E[1:]],
                "q0": _mat(problem.q0)}
    if isinstance(problem, TaggedScalarProblem):
        return {"kind": "tagged-scalar", "field": problem.field.to_json()}
    raise SchemaError(f"no JSON form for {type(problem).__name__}")


# spaces, sheaves, covers ---------------------------------------------------------------------

STANDARD_SPACES = {
    "point": site.point_space,
    "circle": site.circle,
    "sphere": site.sphere,
    "wedge": site.wedge_of_circles,
    "hyper-cech": site.hyper_cech_space,
}


def space_from_json(obj) -> site.FiniteSpace:
    if isinstance(obj, site.FiniteSpace):
        return obj
    if isinstance(obj, str):
        obj = {"standard": obj}
    if isinstance(obj, dict) and "standard" in obj:
        name = obj["standard"]
        if name not in STANDARD_SPACES:
            raise SchemaError(f"unknown standard space {name!r}; known: {sorted(STANDARD_SPACES)}")
        return STANDARD_SPACES[name]()
    return site.FiniteSpace.from_json(obj)


def sheaf_from_json(space: site.FiniteSpace, obj, default: Field | None = None) -> site.VectorSheaf:
    F = field_from_json(obj.get("field"), default)
    return site.VectorSheaf.from_json(space, F, obj)


def cover2_from_json(space: site.FiniteSpace, obj) -> site.Cover2:
    if obj in ("minimal", {"minimal": True}):
        return site.minimal_open_cover2(space)
    return site.Cover2.from_json(space, obj)


def _edge(key) -> tuple:
    if isinstance(key, str):
        parts = [s.strip() for s in key.strip("()[] ").split(",")]
    else:
        parts = list(key)
    if len(parts) != 2:
        raise SchemaError(f"edge {key!r} must name two points")
    return tuple(parts)


def geometric_from_json(obj, default: Field | None = None, space=None):
    """``{"space", "local_problem", "twist"}``; ``space`` overrides the document's space."""
    from .gdstack import LocalSystemProblem

    X = space_from_json(space if space is not None else obj["space"])
    P = problem_from_json(obj["local_problem"], default)
    twist = {_edge(k): v for k, v in (obj.get("twist") or {}).items()}
    return LocalSystemProblem(X, P, twist, obj.get("obstruction", "auto"))


def prorep_from_json(obj, default: Field | None = None) -> ProRep:
    if isinstance(obj, int):
        return ProRep(artin.residue_field(default or QQ), obj)
    A = algebra_from_json(obj.get("algebra", "k"), default)
    return ProRep(A, int(obj["krull_dim"]), obj.get("truncation_level"), tuple(obj.get("obstruction_dims", ())))


def vector_json(v) -> list:
    return [artin._scalar_json(x) for x in list(v)]


def jsonable(x):
    """Recursively turn numpy arrays, tuples and fractions into JSON-friendly values."""
    if isinstance(x, dict):
        return {str(k) if not isinstance(k, str) else k: jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        seq = sorted(x, key=str) if isinstance(x, (set, frozenset)) else x
        return [jsonable(v) for v in seq]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if x is None or isinstance(x, (str, float)):
        return x
    return str(x)


__all__ = [
    "SchemaError", "field_from_json", "algebra_from_string", "algebra_from_json", "base_from_json",
    "hom_from_json", "square_from_json", "square_to_json", "substitution_quotient", "problem_from_json",
    "problem_to_json", "space_from_json", "sheaf_from_json", "cover2_from_json", "geometric_from_json",
    "prorep_from_json", "jsonable",
]

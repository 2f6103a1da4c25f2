"""Built-in constraint formulas.

``conn`` and ``ham`` use the split form with both sides nonempty; read
literally, a split into the empty set and everything would make every set
disconnected.  Under this convention the empty set is connected.
"""
from __future__ import annotations

from .formula import MsoFormula
from .parser import parse

CATALOG_TEXT = {
    "true": "free S; true",
    "false": "free S; false",
    "vc": "free S; forall_v x . forall_v y . edge(x,y) -> (x in S | y in S)",
    "is": "free S; forall_v x . forall_v y . !edge(x,y) | !(x in S) | !(y in S)",
    "ds": "free S; forall_v v . exists_v u . u in S & (!(v in S) -> edge(u,v))",
    "conn": """free S;
        !(exists_V A .
              (forall_v x . x in A -> x in S)
            & (exists_v x . x in A)
            & (exists_v x . x in S & !(x in A))
            & !(exists_v x . exists_v y . x in A & y in S & !(y in A) & edge(x,y)))""",
    "ham": """free S;
        exists_E F .
            (forall_v v . exists_e e . exists_e f . !(e = f) & e in F & f in F
                                                  & inc(v,e) & inc(v,f))
          & !(exists_v v . exists_e e . exists_e f . exists_e g .
                !(e = f) & !(f = g) & !(e = g) & e in F & f in F & g in F
                & inc(v,e) & inc(v,f) & inc(v,g))
          & !(exists_V U . (exists_v u . u in U) & (exists_v w . !(w in U))
                & !(exists_e e . e in F & (exists_v u . exists_v w .
                      u in U & !(w in U) & inc(u,e) & inc(w,e))))""",
    "3col": """free U1 U2 U3;
        (forall_v x . x in U1 | x in U2 | x in U3)
      & (forall_v x . forall_v y . !(x in U1) | !(y in U1) | !edge(x,y))
      & (forall_v x . forall_v y . !(x in U2) | !(y in U2) | !edge(x,y))
      & (forall_v x . forall_v y . !(x in U3) | !(y in U3) | !edge(x,y))""",
}

NAMES = tuple(CATALOG_TEXT)


def catalog(name: str) -> MsoFormula:
    try:
        return parse(CATALOG_TEXT[name])
    except KeyError:
        raise KeyError(f"unknown catalog formula {name!r}; known: {', '.join(NAMES)}") from None

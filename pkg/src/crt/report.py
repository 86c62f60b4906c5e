"""Structured verdicts returned by every decision operation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .jets import Jet

SCHEMA = "crt-report/1"


@dataclass
class Report:
    """Verdict of one operation.

    ``verdict`` is the operation's headline boolean (e.g. "is CR transversal").
    ``order`` is the truncation order D of the data and ``verified_order`` the
    highest total degree through which the underlying identities were checked.
    """

    operation: str
    verdict: bool
    order: int
    verified_order: int
    message: str
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return bool(self.verdict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["schema"] = SCHEMA
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Report":
        if data.get("schema", SCHEMA) != SCHEMA:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        return cls(
            operation=data["operation"],
            verdict=bool(data["verdict"]),
            order=int(data["order"]),
            verified_order=int(data["verified_order"]),
            message=data["message"],
            details=dict(data.get("details", {})),
        )


def residual_info(jet: Jet) -> dict:
    """JSON-ready description of a residual: zero or its lowest offending term."""
    low = jet.lowest_term()
    info = {
        "zero": low is None,
        "verified_order": jet.prec,
        "nonzero_terms": len(jet.terms()),
    }
    if low is not None:
        info["first_offending"] = {
            "exponent": list(low[0]),
            "monomial": jet.space.monomial(low[0]),
            "coefficient": str(low[1]),
        }
    return info


def jet_text(jet: Jet) -> str:
    return str(jet)

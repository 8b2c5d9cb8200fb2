"""Bundled three-state example with its reference intermediates.

The second drift component is available only in a truncated form.  The
fixture therefore carries two drifts: ``F_STATED`` (the truncated one) and
``F_RECONSTRUCTED`` (second component re-derived so that the output chain
y, L_f y, L_f^2 y matches ``PHI_MAP``).  The algorithms run on the
reconstructed drift; :func:`stated_drift_report` says where the stated one
breaks.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import VarContext
from .geometry import KForm, PolyMap, VecField
from .linearizer import ControlSystem, OmegaHints

NAMES = ("x1", "x2", "x3")

F1 = "1/2*x3^4 + x2*x3^2 + 1/2*x1^2 + 1/2*x2^2 + 1/2*x3^2 + 1/2*x1 + 1/2*x2 + 1/2*x3"
F3 = ("-4*x1^3*x2*x3 - 4*x1*x2^3*x3 - 8*x1*x2*x3^3 - 6*x1^2*x2*x3 - 4*x1*x2^2*x3 - 6*x1*x2*x3^2"
      " - 2*x1*x3^3 + 2*x2^3*x3 - 4*x2*x3^3 - x1^3 - x1*x2^2 - 2*x1*x2*x3 - x1*x3^2 - 2*x2^2*x3"
      " + 3*x2*x3^2 + x3^3 - 3/2*x1^2 - x1*x2 - x1*x3 + 1/2*x2^2 - 1/2*x3^2 - 1/2*x1 - 1/2*x2 + 1/2*x3")
F2_STATED = ("-4*x1*x3^7 + 2*x3^7 - 4*x1*x3^5 - 12*x1*x2*x3^5 + 6*x2*x3^5 - 2*x3^5 - 5*x1*x3^4"
              " + 5/2*x3^4 - 4*x1^3*x3^3 - 6*x1^2*x3^3 - 12*x1*x2^2*x3^3 + 6*x2^2")
F2_RECONSTRUCTED = (
    "8*x1^3*x2*x3^2 + 8*x1*x2^3*x3^2 + 16*x1*x2*x3^4 + 12*x1^2*x2*x3^2 + 8*x1*x2^2*x3^2"
    " + 12*x1*x2*x3^3 + 3*x1*x3^4 - 4*x2^3*x3^2 + 8*x2*x3^4 + 2*x1^3*x3 + 2*x1*x2^2*x3"
    " + 2*x1*x2*x3^2 + 2*x1*x3^3 + 4*x2^2*x3^2 - 6*x2*x3^3 - 3/2*x3^4 - x1^3 + 3*x1^2*x3"
    " - x1*x2^2 + 2*x1*x2*x3 + x1*x3^2 - x2^2*x3 + x2*x3^2 + x3^3 - 3/2*x1^2 - x1*x2"
    " + 1/2*x2^2 + x2*x3 - 3/2*x3^2 - 1/2*x1 - 1/2*x2 + 1/2*x3")

F_STATED = (F1, F2_STATED, F3)
F_RECONSTRUCTED = (F1, F2_RECONSTRUCTED, F3)
G = ("0", "-2*x3", "1")

PSI0 = "x3^4 + 2*x2*x3^2 + x3 + x2^2"
OMEGA_HINTS = (
    ("0", "2*x3^2 + 2*x2", "4*x3^3 + 4*x2*x3 + 1"),
    ("1", "0", "0"),
    ("0", "1", "0"),
)

# Algorithm II intermediates
G1 = ("-1/2", "4*x1*x3^3 - 2*x3^3 + 4*x1*x2*x3 - 2*x2*x3 + x1 - 1/2",
      "-2*x1*x3^2 + x3^2 - 2*x1*x2 + x2")
G2 = ("0", "-4*x3^3 - 4*x2*x3 - 1", "2*x3^2 + 2*x2")
NU2 = ("0", "1", "0")
NU1 = ("8*x1*x3^3 - 4*x3^3 + 8*x1*x2*x3 - 4*x2*x3 + 2*x1 - 1", "1", "0")
NU0 = ("8*x1*x3^3 - 4*x3^3 + 8*x1*x2*x3 - 4*x2*x3 + 2*x1 - 1", "4*x3^3 + 4*x2*x3 + 1",
       "8*x3^4 + 8*x2*x3^2 + 2*x3")
INTEGRATING_FACTOR = "-4*x3^3 - 4*x2*x3 - 1"
Y = "x1 - x1^2 - x2 - x3^2"

# Algorithm I intermediates (stage 1 uses z, stage 2 uses w)
PHI0 = ("x1", "x3^2 + x2", "x3^4 + 2*x2*x3^2 + x3 + x2^2")
PHI0_INV = ("z1", "-z2^4 + 2*z3*z2^2 + z2 - z3^2", "z3 - z2^2")
F1_Z = ("1/2*z1^2 + 1/2*z1 + 1/2*z2 + 1/2*z3",
        "-z1^3 - 3/2*z1^2 - z2*z1 - z3*z1 - 1/2*z1 - 1/2*z2 + 1/2*z3")
G1_Z = ("-1/2", "z1 - 1/2")
PHI1 = ("z1 + z1^2 + z2", "z1 - z1^2 - z2")
PHI1_INV = ("1/2*w1 + 1/2*w2", "-1/4*w1^2 - 1/2*w2*w1 + 1/2*w1 - 1/4*w2^2 - 1/2*w2")

# the assembled output map, its determinant, and the factorization of its inverse
PHI_MAP = (Y, "x1^2 + x1 + x3^2 + x2", PSI0)
PHI_MAP_DET = "2"
PSI_MAP = ("x1 + x1^2 + x2", "x1 - x1^2 - x2", "x3")
RELATIVE_DEGREE = 3

X = VarContext(NAMES)
Z = VarContext.indexed("z", 3)
W = VarContext.indexed("w", 3)
Z2 = VarContext.indexed("z", 2)
W2 = VarContext.indexed("w", 2)


def system(stated: bool = False) -> ControlSystem:
    return ControlSystem.parse(NAMES, F_STATED if stated else F_RECONSTRUCTED, G)


def omega_hints() -> OmegaHints:
    return OmegaHints.from_list([KForm.parse_one_form(X, w) for w in OMEGA_HINTS])


def map_hints() -> list[PolyMap]:
    """Φ0 over x -> z and Φ1 over the two active z coordinates."""
    phi0 = PolyMap.parse(X, PHI0, Z)
    phi1 = [Z.parse(c) for c in PHI1]
    return [phi0, phi1]


def vec(ctx: VarContext, exprs) -> VecField:
    return VecField.parse(ctx, exprs)


@dataclass(frozen=True)
class DriftCheck:
    """Whether a drift reproduces rows 2 and 3 of the output map."""

    row2: bool
    row3: bool
    residual2: str
    residual3: str

    @property
    def ok(self) -> bool:
        return self.row2 and self.row3


def check_drift(f: VecField) -> DriftCheck:
    y = X.parse(PHI_MAP[0])
    row2 = X.parse(PHI_MAP[1])
    row3 = X.parse(PHI_MAP[2])
    r2 = f.apply(y) - row2
    r3 = f.apply(row2) - row3
    return DriftCheck(r2.is_zero(), r3.is_zero(), str(r2), str(r3))


def stated_drift_report() -> list[str]:
    """Human-readable comparison of the stated and reconstructed drifts."""
    stated = check_drift(vec(X, F_STATED))
    recon = check_drift(vec(X, F_RECONSTRUCTED))
    lines = []
    diff = X.parse(F2_STATED) - X.parse(F2_RECONSTRUCTED)
    if not diff.is_zero():
        lines.append(f"stated f2 differs from the reconstructed f2 in {len(diff)} terms")
    lines.append(f"stated drift: L_f y = row 2 {'ok' if stated.row2 else 'FAILS'}, "
                 f"L_f^2 y = row 3 {'ok' if stated.row3 else 'FAILS'}")
    lines.append(f"reconstructed drift: L_f y = row 2 {'ok' if recon.row2 else 'FAILS'}, "
                 f"L_f^2 y = row 3 {'ok' if recon.row3 else 'FAILS'}")
    return lines

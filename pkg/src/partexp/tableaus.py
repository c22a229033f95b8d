"""Built-in method coefficient sets, stored as exact rationals.

Five third-order methods ship with the package:

- pexpw3a, pexpw3b: two-partition exponential W-methods (phi_1 based stage
  maps, gamma blocks) with stage counts (3, 4);
- pepirkw3a, pepirkw3b: two-partition EPIRK W-methods (Psi combinations,
  a/g/p blocks) with stage counts (3, 3);
- psepirkb: a two-partition split EPIRK method with unified stages.

Every coefficient is a `fractions.Fraction`; several numerators/denominators
run to ~19 digits and must survive exact order verification, so nothing is
stored as float.  Conversion to float happens once, at integrator
construction.  User tableaus can be loaded from a JSON document of rational
strings via `load_tableau`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "PexpwTableau",
    "PepirkwTableau",
    "PsepirkTableau",
    "ExpwTableau",
    "SepirkTableau",
    "ValidationReport",
    "BUILTIN_NAMES",
    "builtin",
    "validate",
    "load_tableau",
    "as_float",
]

Mat = tuple[tuple[Fraction, ...], ...]
Row = tuple[Fraction, ...]


def _mat(spec: str) -> Mat:
    rows = [r.strip() for r in spec.split(";") if r.strip()]
    return tuple(tuple(Fraction(tok) for tok in r.split()) for r in rows)


def _row(spec_row: Sequence[Fraction]) -> Row:
    return tuple(Fraction(x) for x in spec_row)


def as_float(mat) -> np.ndarray:
    """Exact-rational matrix/row to a float array."""
    return np.array(mat, dtype=float)


def _shape(mat: Mat) -> tuple[int, int]:
    return (len(mat), len(mat[0]) if mat else 0)


@dataclass(frozen=True)
class PexpwTableau:
    """Coefficients of a partitioned exponential W-method.

    Stage maps use phi_1 only; `A[q][m]` couples stage values, `G[q][m]`
    couples the stage vectors k, and the diagonal entries of G[q][q] are the
    exponential arguments (strictly positive).
    """

    name: str
    s: tuple[int, ...]
    A: tuple[tuple[Mat, ...], ...]
    G: tuple[tuple[Mat, ...], ...]
    b: tuple[Row, ...]
    bhat: Optional[tuple[Row, ...]]
    order: int
    embedded_order: int

    def __post_init__(self):
        P = len(self.s)
        if len(self.A) != P or len(self.G) != P or len(self.b) != P:
            raise ValueError("block count does not match partition count")
        for q in range(P):
            for m in range(P):
                want = (self.s[q], self.s[m])
                for blocks, tag in ((self.A, "A"), (self.G, "G")):
                    got = _shape(blocks[q][m])
                    if got != want:
                        raise ValueError(
                            f"{self.name}: {tag}[{q + 1}][{m + 1}] has shape {got}, want {want}")
            if len(self.b[q]) != self.s[q]:
                raise ValueError(f"{self.name}: b[{q + 1}] length {len(self.b[q])}")
            if self.bhat is not None and len(self.bhat[q]) != self.s[q]:
                raise ValueError(f"{self.name}: bhat[{q + 1}] length {len(self.bhat[q])}")
            for i in range(self.s[q]):
                if self.G[q][q][i][i] <= 0:
                    raise ValueError(
                        f"{self.name}: exponential argument G[{q + 1}][{q + 1}][{i}][{i}]"
                        " must be positive")

    @property
    def partitions(self) -> int:
        return len(self.s)


@dataclass(frozen=True)
class PepirkwTableau:
    """Coefficients of a partitioned EPIRK W-method.

    `a[q][m]`, `g[q][m]` are stage-by-term blocks; `p[q][m]` holds the Psi
    weights (row j gives Psi_j = sum_k p[j][k] phi_k).  Row s of g[m][m] is
    the final-stage argument row; the last row of each `a` block is unused
    padding as printed.
    """

    name: str
    s: tuple[int, ...]
    a: tuple[tuple[Mat, ...], ...]
    g: tuple[tuple[Mat, ...], ...]
    p: tuple[tuple[Mat, ...], ...]
    b: tuple[Row, ...]
    bhat: Optional[tuple[Row, ...]]
    order: int
    embedded_order: int

    def __post_init__(self):
        P = len(self.s)
        for blocks, tag in ((self.a, "a"), (self.g, "g"), (self.p, "p")):
            if len(blocks) != P:
                raise ValueError(f"{self.name}: {tag} block count")
            for q in range(P):
                for m in range(P):
                    got = _shape(blocks[q][m])
                    want = (self.s[q], max(self.s))
                    if got != want:
                        raise ValueError(
                            f"{self.name}: {tag}[{q + 1}][{m + 1}] has shape {got}, want {want}")
        for m in range(P):
            if len(self.b[m]) != self.s[m]:
                raise ValueError(f"{self.name}: b[{m + 1}] length")
            if self.bhat is not None and len(self.bhat[m]) != self.s[m]:
                raise ValueError(f"{self.name}: bhat[{m + 1}] length")

    @property
    def partitions(self) -> int:
        return len(self.s)


@dataclass(frozen=True)
class PsepirkTableau:
    """Coefficients of a partitioned split EPIRK method with unified stages."""

    name: str
    s: int
    a: tuple[Mat, ...]
    g: tuple[Mat, ...]
    p: tuple[Mat, ...]
    b: tuple[Row, ...]
    bhat: Optional[tuple[Row, ...]]
    order: int
    embedded_order: int

    def __post_init__(self):
        if len(self.a) != 2 or len(self.g) != 2 or len(self.p) != 2 or len(self.b) != 2:
            raise ValueError(f"{self.name}: needs exactly two partitions")
        for tag, blocks in (("a", self.a), ("g", self.g), ("p", self.p)):
            for m, blk in enumerate(blocks):
                if _shape(blk) != (self.s, self.s):
                    raise ValueError(f"{self.name}: {tag}[{m + 1}] shape {_shape(blk)}")
        for m in range(2):
            if len(self.b[m]) != self.s:
                raise ValueError(f"{self.name}: b[{m + 1}] length")

    @property
    def partitions(self) -> int:
        return 2


@dataclass(frozen=True)
class ExpwTableau:
    """Unpartitioned exponential W-method coefficients (alpha, gamma, b)."""

    name: str
    s: int
    alpha: Mat
    gamma: Mat
    b: Row
    bhat: Optional[Row]
    order: int
    embedded_order: int = 0

    def __post_init__(self):
        if _shape(self.alpha) != (self.s, self.s) or _shape(self.gamma) != (self.s, self.s):
            raise ValueError(f"{self.name}: alpha/gamma must be {self.s}x{self.s}")
        if len(self.b) != self.s:
            raise ValueError(f"{self.name}: b length")
        for i in range(self.s):
            if self.gamma[i][i] <= 0:
                raise ValueError(f"{self.name}: gamma[{i}][{i}] must be positive")


@dataclass(frozen=True)
class SepirkTableau:
    """Unpartitioned split EPIRK coefficients (a, g, p, b)."""

    name: str
    s: int
    a: Mat
    g: Mat
    p: Mat
    b: Row
    bhat: Optional[Row]
    order: int
    embedded_order: int = 0

    def __post_init__(self):
        for tag, blk in (("a", self.a), ("g", self.g), ("p", self.p)):
            if _shape(blk) != (self.s, self.s):
                raise ValueError(f"{self.name}: {tag} must be {self.s}x{self.s}")
        if len(self.b) != self.s:
            raise ValueError(f"{self.name}: b length")


# ---------------------------------------------------------------------------
# built-in coefficient data (exact rational strings; rows separated by ';')

_PEXPW3A = {
    "A11": "0 0 0 ; 1 0 0 ; 1/9 2/9 0",
    "A12": "0 0 0 0 ; 1 0 0 0 ; 1/27 8/27 0 0",
    "A21": """
        0 0 0 ;
        3/4 0 0 ;
        -2/9 7/18 0 ;
        -958967056548636808/9589670565486368079 407090074900625/1274461328324957 234959228487233/688077905161868
        """,
    "A22": """
        0 0 0 0 ;
        3/4 0 0 0 ;
        -19/54 14/27 0 0 ;
        29395718240647530075/293957182406475300749 710656243935571/1227645422423387 -103025043292069/873209629914535 0
        """,
    "G11": "1/3 0 0 ; -7/12 1/2 0 ; 1/36 -1/6 1/2",
    "G12": "0 0 0 0 ; 0 0 0 0 ; 0 0 0 0",
    "G21": "0 0 0 ; 0 0 0 ; 0 0 0 ; 0 0 0",
    "G22": """
        1/3 0 0 0 ;
        -11/24 1/2 0 0 ;
        5/12 -7/18 1/2 0 ;
        279874718980825/837824805432953 -303920103374805/670268586942818 -1002804453331247650/10028044533312476499 156699807095614/247313771775319
        """,
    "B": "0 1/4 3/4 ; 0 4/7 3/7 0",
    "BHAT": """
        0 1/4 3/4 ;
        65014523725041/1096981956944407 581537073614995/1116665009524167 144930497064493/452974281378310 7203692236327067202/72036922363270672021
        """,
}

_PEXPW3B = {
    "A11": "0 0 0 ; 3/5 0 0 ; -3/16 15/16 0",
    "A12": "0 0 0 0 ; 3/5 0 0 0 ; -3/16 15/16 0 0",
    "A21": """
        0 0 0 ;
        3/5 0 0 ;
        -3/16 15/16 0 ;
        -585085197405257155/5850851974052571549 43366528009330/427723327089183 -1053841879023/758593604509024
        """,
    "A22": """
        0 0 0 0 ;
        3/5 0 0 0 ;
        -3/16 15/16 0 0 ;
        -585085197405255655/5850851974052556549 43366528009330/427723327089183 -1053841879023/758593604509024 0
        """,
    "G11": "1/2 0 0 ; -13/40 1/4 0 ; 41/128 -35/128 1/8",
    "G12": "0 0 0 0 ; 0 0 0 0 ; 0 0 0 0",
    "G21": "0 0 0 ; 0 0 0 ; 0 0 0 ; 0 0 0",
    "G22": """
        1/2 0 0 0 ;
        -13/40 1/4 0 0 ;
        41/128 -35/128 1/8 0 ;
        453997163230835/1888765099013658 10712927379274692077/107129273792746920771 -50318234718508/450119202957889 27578927469602/214573628157185
        """,
    "B": "13/54 25/54 8/27 ; 13/54 25/54 8/27 0",
    "BHAT": """
        13/54 25/54 8/27 ;
        394666706615539/2855725684770978 1593057894075513/3349172373578051 710565068458329/2483269664122598 5579714013352107563/55797140133521075631
        """,
}

_PEPIRKW3A = {
    "A11": """
        384698802731415/732954717965959 0 0 ;
        86900344752350/782996529802607 -1290995154124009/1125899906842624 0 ;
        0 0 0
        """,
    "A12": """
        1308802083206411/1802490994635684 0 0 ;
        181973173307195/1185191484486649 85517148542779/140737488355328 0 ;
        0 0 0
        """,
    "A21": """
        3376488081352679/1125899906842624 0 0 ;
        7852649840694044/5142942142830233 -255468831577525/281474976710656 0 ;
        0 0 0
        """,
    "A22": """
        -1178581638230180/708989154602503 0 0 ;
        -592189461741313/699683190104610 192719849273253/1002076828240778 0 ;
        0 0 0
        """,
    "G11": """
        26247429480193/262422761860576 0 0 ;
        32143317506155/35184372088832 0 0 ;
        0 1348311543872663/1364836015790118 92190312154129/921898236164552
        """,
    "G12": "1/10 0 0 ; 759199292635708/831189746434181 0 0 ; 0 0 0",
    "G21": "271081511832791/1174861778234772 0 0 ; 65827483757729/658273663099802 0 0 ; 0 0 0",
    "G22": """
        284258093019161/1231971012096649 0 0 ;
        1/10 0 0 ;
        0 161273153878169/1283657187034574 362370887966460/3621456965533381
        """,
    "P11": """
        5112657859244401/4415366853702537 0 0 ;
        1556016340770457/778018143010629 -2334014538530285/778018143010629 0 ;
        1/4 -597258170789906/606647864139875 2976901160599561/1213295728279750
        """,
    "P12": """
        503954688828081/602100151833871 0 0 ;
        -59255671657028/515562676747137 -85808855066/872226245616727 0 ;
        0 0 0
        """,
    "P21": """
        156595445098579/94168099003454 0 0 ;
        258094322068247/1007441249071576 -383247047664253/170244621120702 0 ;
        0 0 0
        """,
    "P22": """
        -1534320118877363/511440714965161 0 0 ;
        16785557/33554432 -8341/16777216 0 ;
        1/2 -33636427/33554432 33800417/33554432
        """,
    "B": """
        3988623869824611/4618522050671365 -82456890342171/1256553314618774 -2450063497974094/853681363979605 ;
        -358704648619713/1076112524888738 567949880545177/459207437379264 2488203739014363/1193224413242756
        """,
    "BHAT": """
        4415366853702537/5112657859244401 310015440583298728131/19693988598490282787 103935110135357210301/4395806354850409286 ;
        -511440714965161/1534320118877363 113640340670192065216/128315868985799371345 236807109836658517948/171771076876346028243
        """,
}

_PEPIRKW3B = {
    "A11": "-2/3 0 0 ; -2/3 643210555/321605294 0 ; 0 0 0",
    "A12": "-77257927/231736567 0 0 ; -77257927/231736567 221995883/556342956 0 ; 0 0 0",
    "A21": "46177625/138532819 0 0 ; 46177625/138532819 -276294928/448265855 1 ; 0 0 0",
    "A22": "2/3 0 0 ; 2/3 -2097151/1048576 1 ; 0 0 0",
    "G11": "15905698/118882405 0 0 ; 47844971/181848383 0 0 ; 0 263476/712854121 5873/47718781",
    "G12": "7866/337976873 0 0 ; 11957/261254373 0 0 ; 1/10 1/10 1/10",
    "G21": "151156669/742595986 0 0 ; 111733984/275857671 0 0 ; 1/10 1/10 1/10",
    "G22": "0 0 0 ; 0 0 0 ; 0 57491/77959816 2442/336507713",
    "P11": """
        -1 0 0 ;
        -90974766/422643103 15713557/145038387 0 ;
        139909573/248730863 -355468325/226721754 -279447475/279556943
        """,
    "P12": "-534076380/267081073 0 0 ; -306646172/379808307 -1391/610013106 0 ; 1 1 1",
    "P21": "291908440/145954279 0 0 ; 341330517/637547050 -10114/98573483 0 ; 1 1 1",
    "P22": """
        1 0 0 ;
        21675617/200502754 27071061/237997009 0 ;
        429818508/221501921 813095776/411099863 -541652055/542849144
        """,
    "B": "-1 36471146/225920009 92167149/46087892 ; 1 -15699629/337585791 -69127796/252097195",
    "BHAT": "-1 1 49043754/20888203 ; 1 1 -25364743/119799726",
}

_PSEPIRKB = {
    "A1": """
        -406771190822767/1269704574921366 0 0 ;
        1141343580746374/2770232365403325 -270901875227597/1180295506525702 0 ;
        0 0 0
        """,
    "G1": """
        128087174255567/419295332948579 0 0 ;
        2/3 1/3 0 ;
        1 1/10 360563110168627/1057763542537753
        """,
    "P1": """
        1280186143788623/1582320951434920 0 0 ;
        542606543994981/727846286011843 334677002077769/888394725117090 0 ;
        1537951833313021/2936537612285079 174454083236061/758739097109116 93287345944837/1308035706514201
        """,
    "B": """
        791160475717460/1280186143788623 411329415142993/512163583980334 1410289361848454/2446680005682115 ;
        791160475717460/1280186143788623 411329415142993/512163583980334 1410289361848454/2446680005682115
        """,
    "BHAT": """
        427455192538559/562171059204137 382776428251149/390415271373872 376136126102442/532899712497139 ;
        318902647845412/670465682883183 1144042149029406/1168515417076291 382460571524017/636059012992202
        """,
}


def _build_pexpw(name: str, data: dict) -> PexpwTableau:
    # ragged b rows: partition 1 has 3 entries, partition 2 has 4
    b_rows = tuple(tuple(r) for r in _mat(data["B"]))
    bhat_rows = tuple(tuple(r) for r in _mat(data["BHAT"]))
    return PexpwTableau(
        name=name,
        s=(3, 4),
        A=((_mat(data["A11"]), _mat(data["A12"])), (_mat(data["A21"]), _mat(data["A22"]))),
        G=((_mat(data["G11"]), _mat(data["G12"])), (_mat(data["G21"]), _mat(data["G22"]))),
        b=b_rows,
        bhat=bhat_rows,
        order=3,
        embedded_order=2,
    )


def _build_pepirkw(name: str, data: dict) -> PepirkwTableau:
    return PepirkwTableau(
        name=name,
        s=(3, 3),
        a=((_mat(data["A11"]), _mat(data["A12"])), (_mat(data["A21"]), _mat(data["A22"]))),
        g=((_mat(data["G11"]), _mat(data["G12"])), (_mat(data["G21"]), _mat(data["G22"]))),
        p=((_mat(data["P11"]), _mat(data["P12"])), (_mat(data["P21"]), _mat(data["P22"]))),
        b=tuple(tuple(r) for r in _mat(data["B"])),
        bhat=tuple(tuple(r) for r in _mat(data["BHAT"])),
        order=3,
        embedded_order=2,
    )


def _build_psepirk(name: str, data: dict) -> PsepirkTableau:
    return PsepirkTableau(
        name=name,
        s=3,
        a=(_mat(data["A1"]), _mat(data["A1"])),
        g=(_mat(data["G1"]), _mat(data["G1"])),
        p=(_mat(data["P1"]), _mat(data["P1"])),
        b=tuple(tuple(r) for r in _mat(data["B"])),
        bhat=tuple(tuple(r) for r in _mat(data["BHAT"])),
        order=3,
        embedded_order=2,
    )


_BUILDERS = {
    "pexpw3a": lambda: _build_pexpw("pexpw3a", _PEXPW3A),
    "pexpw3b": lambda: _build_pexpw("pexpw3b", _PEXPW3B),
    "pepirkw3a": lambda: _build_pepirkw("pepirkw3a", _PEPIRKW3A),
    "pepirkw3b": lambda: _build_pepirkw("pepirkw3b", _PEPIRKW3B),
    "psepirkb": lambda: _build_psepirk("psepirkb", _PSEPIRKB),
}

BUILTIN_NAMES = tuple(sorted(_BUILDERS))
_CACHE: dict = {}


def builtin(name: str):
    """Return a built-in tableau by method name (case-insensitive)."""
    key = str(name).strip().lower()
    if key not in _BUILDERS:
        raise ValueError(
            f"unknown method {name!r}; available: {', '.join(BUILTIN_NAMES)}")
    if key not in _CACHE:
        _CACHE[key] = _BUILDERS[key]()
    return _CACHE[key]


@dataclass
class ValidationReport:
    name: str
    ok: bool
    order_ok: bool
    embedded_ok: bool
    max_residual: Fraction
    first_violation: Optional[int]
    messages: list

    def __str__(self):
        state = "PASS" if self.ok else "FAIL"
        return f"{self.name}: {state} (max residual {self.max_residual})"


def validate(tableau) -> ValidationReport:
    """Shape checks plus order-condition verification through the tree engine."""
    from . import ordercond  # deferred: ordercond imports nothing from here

    messages: list[str] = []
    rep = ordercond.verify_tableau(tableau)
    order_ok = rep.order_ok
    embedded_ok = rep.embedded_ok
    if not order_ok:
        messages.append(
            f"order {tableau.order} conditions violated, first at tree {rep.first_violation}")
    if not embedded_ok:
        messages.append(f"embedded order {tableau.embedded_order} conditions violated")
    return ValidationReport(
        name=tableau.name,
        ok=order_ok and embedded_ok,
        order_ok=order_ok,
        embedded_ok=embedded_ok,
        max_residual=rep.max_residual,
        first_violation=rep.first_violation,
        messages=messages,
    )


def _mat_from_json(rows) -> Mat:
    return tuple(tuple(Fraction(str(x)) for x in r) for r in rows)


def load_tableau(source):
    """Load a tableau from a JSON document.

    Accepts a path, a file object, or an already-parsed dict.  The document
    carries `kind` (pexpw | pepirkw | psepirk | expw | sepirk), `name`,
    `order`, optional `embedded_order`, and the coefficient blocks as nested
    lists of rational strings ("1/3", "-7/12", "0.1" are all exact).
    Partitioned kinds use block keys "A11".."A22" (plus "G.."/"P.." as the
    kind requires) and `b`/`bhat` as lists of rows; unpartitioned kinds use
    flat keys (alpha, gamma | a, g, p) and a single b row.
    """
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source) as fh:
            doc = json.load(fh)

    kind = doc["kind"]
    name = doc.get("name", f"user-{kind}")
    order = int(doc["order"])
    emb = int(doc.get("embedded_order", 0))
    bhat = doc.get("bhat")

    if kind == "pexpw":
        return PexpwTableau(
            name=name, s=tuple(doc["s"]),
            A=((_mat_from_json(doc["A11"]), _mat_from_json(doc["A12"])),
               (_mat_from_json(doc["A21"]), _mat_from_json(doc["A22"]))),
            G=((_mat_from_json(doc["G11"]), _mat_from_json(doc["G12"])),
               (_mat_from_json(doc["G21"]), _mat_from_json(doc["G22"]))),
            b=tuple(tuple(Fraction(str(x)) for x in r) for r in doc["b"]),
            bhat=None if bhat is None else tuple(
                tuple(Fraction(str(x)) for x in r) for r in bhat),
            order=order, embedded_order=emb)
    if kind == "pepirkw":
        return PepirkwTableau(
            name=name, s=tuple(doc["s"]),
            a=((_mat_from_json(doc["A11"]), _mat_from_json(doc["A12"])),
               (_mat_from_json(doc["A21"]), _mat_from_json(doc["A22"]))),
            g=((_mat_from_json(doc["G11"]), _mat_from_json(doc["G12"])),
               (_mat_from_json(doc["G21"]), _mat_from_json(doc["G22"]))),
            p=((_mat_from_json(doc["P11"]), _mat_from_json(doc["P12"])),
               (_mat_from_json(doc["P21"]), _mat_from_json(doc["P22"]))),
            b=tuple(tuple(Fraction(str(x)) for x in r) for r in doc["b"]),
            bhat=None if bhat is None else tuple(
                tuple(Fraction(str(x)) for x in r) for r in bhat),
            order=order, embedded_order=emb)
    if kind == "psepirk":
        return PsepirkTableau(
            name=name, s=int(doc["s"]),
            a=(_mat_from_json(doc["A1"]), _mat_from_json(doc["A2"])),
            g=(_mat_from_json(doc["G1"]), _mat_from_json(doc["G2"])),
            p=(_mat_from_json(doc["P1"]), _mat_from_json(doc["P2"])),
            b=tuple(tuple(Fraction(str(x)) for x in r) for r in doc["b"]),
            bhat=None if bhat is None else tuple(
                tuple(Fraction(str(x)) for x in r) for r in bhat),
            order=order, embedded_order=emb)
    if kind == "expw":
        return ExpwTableau(
            name=name, s=int(doc["s"]),
            alpha=_mat_from_json(doc["alpha"]), gamma=_mat_from_json(doc["gamma"]),
            b=tuple(Fraction(str(x)) for x in doc["b"]),
            bhat=None if bhat is None else tuple(Fraction(str(x)) for x in bhat),
            order=order, embedded_order=emb)
    if kind == "sepirk":
        return SepirkTableau(
            name=name, s=int(doc["s"]),
            a=_mat_from_json(doc["a"]), g=_mat_from_json(doc["g"]),
            p=_mat_from_json(doc["p"]),
            b=tuple(Fraction(str(x)) for x in doc["b"]),
            bhat=None if bhat is None else tuple(Fraction(str(x)) for x in bhat),
            order=order, embedded_order=emb)
    raise ValueError(f"unknown tableau kind {kind!r}")

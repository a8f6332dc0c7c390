"""Certificate documents: serialization, schema, and independent re-checking.

A certificate is a single JSON document (schema in schema/certificate.schema.json)
recording the input group, the session randomness, every substitution with its
verification outcomes, and the terminal node.  `recheck` replays each recorded
monomial/linear step against the previous action snapshot without trusting any
pipeline state, re-verifies the homomorphism property after every step, and
re-runs the randomized identity tests with the recorded seeds.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

from .action import GroupAction, MonomialMap, VarImage, VarSpace
from .cyclotomic import CycloField, Root, make_embedding
from .pcgroup import PcGroup
from .pipeline import Certificate, StepRecord
from .transform import (
    Lemma24Sub,
    MonomialSub,
    RatioDrop,
    RestrictSub,
    apply_substitution,
    dft_linear_sub,
    drop_fibers,
    lemma24_sub,
)

SCHEMA_VERSION = 1


def _bound_payload(bound: Fraction) -> dict:
    if bound == 0:
        return {"fraction": "0", "log2": "-inf"}
    return {
        "fraction": f"{bound.numerator}/{bound.denominator}",
        "log2": f"{math.log2(bound):.3f}",
    }


def certificate_to_dict(cert: Certificate) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "label": cert.label,
        "group": cert.group,
        "session": cert.session,
        "initial_count": cert.initial_count,
        "steps": [
            {
                "index": s.index,
                "kind": s.kind,
                "label": s.label,
                "data": s.data,
                "checks": [
                    {
                        "name": c.name,
                        "passed": c.passed,
                        "detail": c.detail,
                        **(
                            {"bound": _bound_payload(c.bound)}
                            if c.bound is not None
                            else {}
                        ),
                    }
                    for c in s.checks
                ],
                "variables": s.variables,
                "action_after": s.action_after,
                "survivors": s.survivors,
                "invariants_recorded": s.invariants_recorded,
            }
            for s in cert.steps
        ],
        "terminal": (
            {"kind": cert.terminal.kind, "data": cert.terminal.data}
            if cert.terminal
            else None
        ),
        "status": cert.status,
        "error_bound": _bound_payload(cert.error_bound),
    }


def dumps(cert: Certificate) -> str:
    return json.dumps(certificate_to_dict(cert), sort_keys=True, indent=2) + "\n"


def group_payload(group: PcGroup) -> dict:
    """Presentation payload embedded in certificates (drives the re-checker)."""
    return {
        "p": group.p,
        "names": list(group.names),
        "orders": list(group.orders),
        "power_words": [[list(t) for t in w] for w in group.power_words],
        "commutators": {
            f"{j},{i}": [list(t) for t in w]
            for (j, i), w in sorted(group.commutators.items())
        },
        "h": [group.names[i] for i in group.h_indices],
        "top": group.names[group.top_index],
    }


def group_from_payload(payload: dict) -> PcGroup:
    names = tuple(payload["names"])
    return PcGroup(
        p=payload["p"],
        names=names,
        orders=tuple(payload["orders"]),
        power_words=tuple(
            tuple((g, e) for g, e in w) for w in payload["power_words"]
        ),
        commutators={
            tuple(int(t) for t in key.split(",")): tuple((g, e) for g, e in w)
            for key, w in payload["commutators"].items()
        },
        h_indices=tuple(names.index(nm) for nm in payload["h"]),
        top_index=names.index(payload["top"]),
    )


def _action_from_snapshot(group: PcGroup, snapshot: dict) -> GroupAction:
    space = VarSpace.of(list(snapshot["variables"]))
    level = snapshot["level"]
    maps = []
    for name in group.names:
        images = tuple(
            VarImage(Root(img["coeff"][0], img["coeff"][1]), tuple(img["exps"]))
            for img in snapshot["generators"][name]
        )
        maps.append(MonomialMap(space, images))
    return GroupAction(group=group, space=space, level=level, gen_maps=tuple(maps))


def _snapshots_equal(a: dict, b: dict) -> bool:
    return a == b


class RecheckFailure(AssertionError):
    pass


_REPLAYABLE = {
    "variable-renormalization",
    "relabel",
    "T22-fiber-drop",
    "torus-restriction",
    "cycle-relabel",
    "decouple",
    "dft-split",
    "Fischer-diagonal",
    "Lemma24",
}


def recheck(doc: dict) -> list[str]:
    """Independently re-verify every replayable step record.

    Returns a list of problems (empty means the certificate re-checks clean)."""
    problems: list[str] = []
    if doc.get("schema_version") != SCHEMA_VERSION:
        problems.append("unknown schema version")
        return problems
    presentation = doc["group"].get("presentation")
    if presentation is None:
        problems.append("certificate lacks the presentation payload")
        return problems
    group = group_from_payload(presentation)
    initial = doc["initial_count"]

    from .action import verify_homomorphism  # local import to avoid cycles

    prev_action: GroupAction | None = None
    for step in doc["steps"]:
        if step["survivors"] + step["invariants_recorded"] != initial:
            problems.append(f"step {step['index']}: variable ledger broken")
        action = _action_from_snapshot(group, step["action_after"])
        try:
            verify_homomorphism(action)
        except AssertionError as exc:
            problems.append(f"step {step['index']}: homomorphism fails: {exc}")
        if prev_action is not None:
            if step["kind"] in _REPLAYABLE:
                try:
                    replayed = _replay(prev_action, step, doc)
                    if serialize_like(replayed) != step["action_after"]:
                        problems.append(
                            f"step {step['index']} ({step['kind']}): replay disagrees "
                            "with the recorded action"
                        )
                except Exception as exc:  # noqa: BLE001 - report, do not crash
                    problems.append(f"step {step['index']} ({step['kind']}): {exc}")
            elif step["kind"] != "induced-representation":
                if serialize_like(prev_action) != step["action_after"]:
                    problems.append(
                        f"step {step['index']} ({step['kind']}): bookkeeping step "
                        "unexpectedly changed the action"
                    )
        prev_action = action
    return problems


def serialize_like(action: GroupAction) -> dict:
    from .pipeline import serialize_action

    return serialize_action(action)


def _replay(prev: GroupAction, step: dict, doc: dict) -> GroupAction:
    kind = step["kind"]
    data = step["data"]
    if kind in ("variable-renormalization", "relabel", "cycle-relabel", "decouple"):
        sub = MonomialSub(
            in_space=prev.space,
            out_names=tuple(data["out_names"]),
            matrix=tuple(tuple(r) for r in data["matrix"]),
        )
        return apply_substitution(prev, sub)
    if kind == "torus-restriction":
        sub = RestrictSub(
            in_space=prev.space,
            out_names=tuple(data["out_names"]),
            matrix=tuple(tuple(r) for r in data["matrix"]),
            lattice_hnf=tuple(tuple(r) for r in data["lattice_hnf"]),
        )
        return apply_substitution(prev, sub)
    if kind == "T22-fiber-drop":
        drop = RatioDrop(
            sub=MonomialSub(
                in_space=prev.space,
                out_names=tuple(data["out_names"]),
                matrix=tuple(tuple(r) for r in data["matrix"]),
            ),
            dropped=tuple(data["dropped"]),
        )
        action, _ = drop_fibers(prev, drop)
        return action
    if kind in ("dft-split", "Fischer-diagonal"):
        p = doc["group"]["p"]
        level = prev.level
        e = 0
        t = level
        while t > 1:
            t //= p
            e += 1
        field = CycloField(p, e)
        xi = Root(data["xi"][0], data["xi"][1])
        block_names = data["in_block"]
        block = [prev.space.index(nm) for nm in block_names]
        out_names = data["block"]
        sub = dft_linear_sub(
            prev.space, block, out_names, field, xi, data.get("stride", 1)
        )
        return apply_substitution(prev, sub)
    if kind == "Lemma24":
        session = doc["session"]
        q = data["prime"]
        emb = make_embedding(q, session["level"], session["seed"])
        sub, _report = lemma24_sub(
            data["n"],
            emb,
            trials=data["trials"],
            seed=data["seed"],
            level=prev.level,
            in_names=tuple(data["in_names"]),
            out_names=tuple(data["out_names"]),
        )
        return apply_substitution(
            prev, sub, cycle_generator=prev.group.top_index
        )
    raise RecheckFailure(f"cannot replay step kind {kind}")

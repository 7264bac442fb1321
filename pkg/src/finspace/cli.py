"""Command-line front end.

Exit codes: 0 true or success, 1 false, 2 unknown, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .cohomology import sheaf_cohomology
from .poset import PosetError, core_reduction
from .predicates import (
    PredicateVerdict,
    fibered_product,
    is_affine,
    is_affine_morphism,
    is_schematic,
    is_schematic_morphism,
    is_semi_separated,
    stein_factorization,
)
from .rational import PoleError
from .scheme import covering_model, has_open_restrictions, refinement_morphism, spec_export
from .sheaves import StructureSheaf, UnrepresentableError, UnsupportedError, is_quasi_coherent, sheaf_from_json
from .space import (
    InputError,
    MorphismDescriptor,
    RingedFiniteSpace,
    load_json,
    load_morphism,
    load_space,
    morphism_from_json,
    ring_name,
    space_from_json,
)

EXIT_TRUE, EXIT_FALSE, EXIT_UNKNOWN, EXIT_INPUT = 0, 1, 2, 3


def _exit_for(verdict) -> int:
    if verdict is None:
        return EXIT_UNKNOWN
    return EXIT_TRUE if verdict else EXIT_FALSE


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False)


def _write(path: str, doc) -> None:
    try:
        Path(path).write_text(_dump(doc) + "\n", encoding="utf-8")
    except OSError as exc:
        raise InputError(exc.strerror or str(exc), where=path) from None


def _points(n: int) -> str:
    return f"{n} point" if n == 1 else f"{n} points"


def _emit(args, doc, text: str) -> None:
    print(_dump(doc) if args.format == "json" else text)


def _verdict_out(args, verdict: PredicateVerdict) -> int:
    _emit(args, verdict.to_json(args.certificate), verdict.pretty())
    return _exit_for(verdict.verdict)


def _open_mask(space: RingedFiniteSpace, spec: str | None) -> int:
    if not spec:
        return space.poset.full
    mask = 0
    for name in spec.split(","):
        try:
            mask |= space.poset.up[space.poset.idx(name.strip())]
        except PosetError as exc:
            raise InputError(str(exc), where="--open") from None
    return mask


def _load_sheaf(space: RingedFiniteSpace, path: str | None):
    if path is None:
        return StructureSheaf()
    doc = load_json(path)
    try:
        return sheaf_from_json(space, doc)
    except InputError as exc:
        raise InputError(str(exc), where=path) from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    space = load_space(args.space)
    universe = "rational" if space.is_rational else f"topological over {space.ring.name}"
    doc = {"valid": True, "finite_space": True, "points": len(space), "dimension": space.dimension, "universe": universe}
    text = f"valid: {len(space)} points, dimension {space.dimension}, {universe} universe\nfinite space: yes"
    _emit(args, doc, text)
    return EXIT_TRUE


def cmd_cohomology(args) -> int:
    space = load_space(args.space)
    sheaf = _load_sheaf(space, args.sheaf)
    mask = _open_mask(space, args.open)
    report = sheaf_cohomology(space, mask, sheaf, args.mode, args.window)
    if args.mode == "window":
        doc, text = report.to_json(), report.pretty()
        _emit(args, doc, text)
        return EXIT_TRUE if report.stabilized else EXIT_UNKNOWN
    doc = report.to_json()
    lines = report.pretty().splitlines()
    if args.degree != "all":
        try:
            i = int(args.degree)
        except ValueError:
            raise InputError(f"bad degree {args.degree!r}", where="--degree") from None
        if i < 0:
            raise InputError("degree must be non-negative", where="--degree")
        entry = doc["degrees"][i] if i < len(doc["degrees"]) else {"degree": i, "pieces": [], "rendered": "0"}
        doc["degrees"] = [entry]
        lines = [lines[0], lines[i + 1] if i + 1 < len(lines) else f"H^{i} = 0    [0]"]
    _emit(args, doc, "\n".join(lines))
    return EXIT_TRUE


def cmd_check(args) -> int:
    space = load_space(args.space)
    prop = args.property
    if prop == "finite":
        # restrictions are inclusions of localizations (or identities), hence flat
        _emit(args, {"predicate": "finite", "verdict": True}, "finite space: yes")
        return EXIT_TRUE
    if prop == "quasi-coherent":
        sheaf = _load_sheaf(space, args.sheaf)
        qc = is_quasi_coherent(space, sheaf, "finite_type" if args.finite_type else "qc", args.paranoid)
        name = "finite type" if args.finite_type else "quasi-coherent"
        doc = {"predicate": name, "verdict": qc.verdict, "failures": list(qc.failures)}
        text = f"{name}: {str(qc.verdict).lower()}" + "".join(f"\n  fails at {f}" for f in qc.failures)
        _emit(args, doc, text)
        return _exit_for(qc.verdict)
    fn = {
        "schematic": is_schematic,
        "semi-separated": is_semi_separated,
        "affine": is_affine,
        "open-restrictions": lambda s, paranoid: has_open_restrictions(s),
    }[prop]
    return _verdict_out(args, fn(space, paranoid=args.paranoid))


def cmd_morphism_check(args) -> int:
    f = load_morphism(args.morphism)
    prop = args.property
    if prop in ("schematic", "locally-acyclic"):
        verdict = is_schematic_morphism(f, prop.replace("-", "_"), args.paranoid)
    else:
        verdict = is_affine_morphism(f, prop.replace("-", "_"), args.paranoid)
    return _verdict_out(args, verdict)


def cmd_stein(args) -> int:
    f = load_morphism(args.morphism)
    fact = stein_factorization(f)
    doc = fact.to_json()
    _write(args.output, doc)
    lines = [f"Y' written to {args.output}"]
    for i, y in enumerate(fact.middle.points):
        if fact.middle.is_rational:
            lines.append(f"  {y}: {ring_name(fact.middle.poles[i], fact.middle.universe)}")
        else:
            lines.append(f"  {y}")
    _emit(args, doc, "\n".join(lines))
    return EXIT_TRUE


def _structure_map(path: str, base: RingedFiniteSpace) -> MorphismDescriptor:
    doc = load_json(path)
    try:
        if isinstance(doc, dict) and "map" in doc:
            f = morphism_from_json(doc, Path(path).parent)
        else:
            source = space_from_json(doc)
            if len(base) != 1:
                raise InputError("a bare space needs a one-point base; pass a morphism document")
            f = MorphismDescriptor(source, base, (0,) * len(source))
    except InputError as exc:
        raise InputError(str(exc), where=path) from None
    if f.target != base:
        raise InputError("morphism target differs from the --over space", where=path)
    return f


def cmd_product(args) -> int:
    base = load_space(args.over)
    f = _structure_map(args.left, base)
    g = _structure_map(args.right, base)
    prod = fibered_product(f, g, args.paranoid)
    doc = prod.to_json()
    _write(args.output, doc)
    text = (
        f"fibered product: {_points(len(prod.space))} written to {args.output}\n"
        f"schematic: {str(prod.schematic.verdict).lower()}\n"
        f"projections schematic: {', '.join(str(v.verdict).lower() for v in prod.projections_schematic)}"
    )
    _emit(args, doc, text)
    return EXIT_TRUE


def cmd_model(args) -> int:
    carrier = load_space(args.space)
    doc = load_json(args.covering)
    cover = doc.get("cover") if isinstance(doc, dict) else doc
    if not isinstance(cover, list):
        raise InputError("covering document needs a 'cover' list", where=args.covering)
    model = covering_model(carrier, cover)
    out = model.to_json()
    text = [f"model: {_points(len(model.space))} written to {args.output}"]
    coarser = doc.get("coarser") if isinstance(doc, dict) else None
    code = EXIT_TRUE
    if coarser is not None:
        _, _, f = refinement_morphism(carrier, cover, coarser)
        weak = is_affine_morphism(f, "weak_equivalence", args.paranoid)
        out["refinement"] = {"map": f.as_dict(), "weak_equivalence": weak.to_json()}
        text.append("refinement map: " + ", ".join(f"{a} -> {b}" for a, b in f.as_dict().items()))
        text.append(f"weak equivalence: {str(weak.verdict).lower()}")
        code = _exit_for(weak.verdict)
    _write(args.output, out)
    _emit(args, out, "\n".join(text))
    return code


def cmd_spec_export(args) -> int:
    space = load_space(args.space)
    desc = spec_export(space, args.paranoid)
    doc = desc.to_json()
    if args.output:
        _write(args.output, doc)
    _emit(args, doc, desc.pretty())
    return EXIT_TRUE


def cmd_core(args) -> int:
    space = load_space(args.space)
    core = core_reduction(space.poset)
    doc = {
        "points": list(core.poset.points),
        "relations": [[core.poset.points[a], core.poset.points[b]] for a, b in core.poset.hasse],
        "removed": list(core.removed),
        "profile": [core.profile[0], list(core.profile[1])],
    }
    text = f"core: {{{', '.join(core.poset.points)}}}  (removed: {', '.join(core.removed) or 'none'})"
    _emit(args, doc, text)
    return EXIT_TRUE


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("pretty", "json"), default="pretty")
    common.add_argument("--paranoid", action="store_true", help="check all relations instead of Hasse edges")
    common.add_argument("--certificate", action="store_true", help="include every checked obligation in JSON")

    parser = argparse.ArgumentParser(prog="finspace", description="Ringed finite spaces: cohomology and structural predicates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="parse and validate a space")
    p.add_argument("space")
    p.set_defaults(run=cmd_validate)

    p = sub.add_parser("cohomology", parents=[common], help="sheaf cohomology on an open")
    p.add_argument("space")
    p.add_argument("--open", help="point(s) whose minimal opens are united; default: whole space")
    p.add_argument("--sheaf", help="sheaf document; default: structure sheaf")
    p.add_argument("--degree", default="all")
    p.add_argument("--mode", choices=("exact", "window"), default="exact")
    p.add_argument("--window", type=int, default=20)
    p.set_defaults(run=cmd_cohomology)

    p = sub.add_parser("check", parents=[common], help="decide a predicate on a space")
    p.add_argument(
        "property", choices=("schematic", "semi-separated", "affine", "finite", "open-restrictions", "quasi-coherent")
    )
    p.add_argument("space")
    p.add_argument("--sheaf", help="sheaf document for quasi-coherent")
    p.add_argument("--finite-type", action="store_true", help="check finite type instead of quasi-coherence")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("morphism-check", parents=[common], help="decide a predicate on a morphism")
    p.add_argument("morphism")
    p.add_argument(
        "--property", choices=("schematic", "locally-acyclic", "affine", "weak-equivalence"), default="schematic"
    )
    p.set_defaults(run=cmd_morphism_check)

    p = sub.add_parser("stein", parents=[common], help="Stein factorization of a morphism")
    p.add_argument("morphism")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(run=cmd_stein)

    p = sub.add_parser("product", parents=[common], help="fibered product over a base")
    p.add_argument("left", help="morphism X -> S, or a space when S is a point")
    p.add_argument("right", help="morphism Y -> S, or a space when S is a point")
    p.add_argument("--over", required=True, help="the base space S")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(run=cmd_product)

    p = sub.add_parser("model", parents=[common], help="finite model of an open covering")
    p.add_argument("space")
    p.add_argument("covering")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(run=cmd_model)

    p = sub.add_parser("spec-export", parents=[common], help="chart and gluing descriptor")
    p.add_argument("space")
    p.add_argument("-o", "--output")
    p.set_defaults(run=cmd_spec_export)

    p = sub.add_parser("core", parents=[common], help="beat-point core of the underlying poset")
    p.add_argument("space")
    p.set_defaults(run=cmd_core)
    return parser


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_TRUE
    try:
        return args.run(args)
    except (InputError, PosetError, PoleError, UnrepresentableError, UnsupportedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run_cli())

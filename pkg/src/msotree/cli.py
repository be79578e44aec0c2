"""Command-line front door: parse input files, dispatch, emit JSON reports.

Reports are deterministic: identical inputs and seed give byte-identical
output.  Exit codes: 0 for success or a verified/positive answer, 1 when
the principal answer is negative (violations found, certificate rejected,
an indiscernible witness found, no monochromatic subset), 2 for usage
errors.  Sampled subcommands require an explicit seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

from . import __version__
from .composition import (FDConfig, coloring_of, empty_chain_theory,
                          restriction_theory, sum_theories, verify_fd)
from .errors import MsoTreeError
from .falsifier import check_choice_function, find_indiscernible_pair, find_monochromatic
from .formulas import parse_formula
from .scattered import (build_z_set, catalog_term, embed_lex, hdeg,
                        hdeg_is_exact, lex_model, order_term_text,
                        parse_order_term, realize_prefix, thin_homogeneous)
from .structures import build_structure
from .synthesis import (WellOrderCertificate, classify, parse_presentation,
                        parse_tree_term, rank_map, synth_chain_wellorder,
                        synth_tree_wellorder, verify_certificate)
from .theory import (compute_theory, eval_direct, eval_on_theory,
                     realized_theories, reduce_depth, theory_from_json)

# Theory-recursion guard rails: the subset recursion is doubly exponential,
# so direct theory subcommands stay inside these bounds unless forced.
GUARD = ((2, 7), (3, 4))


def _depth_allowed(n, size):
    if n <= 1:
        return True
    for depth, max_elems in GUARD:
        if n <= depth and size <= max_elems:
            return True
    return False


def _read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _read_text(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _file_sha(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


class _Reporter:
    def __init__(self, args):
        self.out_path = getattr(args, "out", None)
        self.inputs = {}
        self.seed = getattr(args, "seed", None)

    def note_input(self, path):
        if path:
            self.inputs[path] = _file_sha(path)

    def emit(self, body, exit_code=0):
        report = {
            "tool": {"name": "msotree", "version": __version__},
            "inputs": self.inputs,
        }
        if self.seed is not None:
            report["seed"] = self.seed
        report.update(body)
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
        if self.out_path:
            with open(self.out_path, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return exit_code


def _load_structure(rep, path):
    rep.note_input(path)
    return build_structure(_read_json(path))


def _parse_subsets(text, structure):
    if not text:
        return ()
    data = json.loads(text)
    return tuple(frozenset(part) for part in data)


def _cmd_theory_compute(args):
    rep = _Reporter(args)
    st = _load_structure(rep, args.structure)
    extra = _parse_subsets(args.extra, st)
    if not args.force and not _depth_allowed(args.depth, st.n):
        raise MsoTreeError(
            f"guard rails: depth {args.depth} on {st.n} elements needs --force")
    t = compute_theory(st, extra, args.depth, limit=None if args.force else 1 << 21)
    return rep.emit({"theory": t.to_json()})


def _cmd_theory_sum(args):
    rep = _Reporter(args)
    rep.note_input(args.left)
    rep.note_input(args.right)
    t1 = theory_from_json(_read_json(args.left))
    t2 = theory_from_json(_read_json(args.right))
    return rep.emit({"theory": sum_theories(t1, t2).to_json()})


def _cmd_theory_reduce(args):
    rep = _Reporter(args)
    rep.note_input(args.theory)
    t = theory_from_json(_read_json(args.theory))
    return rep.emit({"theory": reduce_depth(t, args.depth).to_json()})


def _cmd_theory_realized(args):
    rep = _Reporter(args)
    if not args.force and not _depth_allowed(args.depth, args.size_bound):
        raise MsoTreeError("guard rails: bounds too large, use --force")
    ts = realized_theories(args.depth, args.arity, args.size_bound, args.kind)
    return rep.emit({
        "realized_only": True,
        "note": "under-approximation: realized by structures within the size bound",
        "count": len(ts),
        "theories": [t.to_json() for t in ts],
    })


def _cmd_eval(args):
    rep = _Reporter(args)
    rep.note_input(args.formula)
    f = parse_formula(_read_text(args.formula))
    if args.theory:
        rep.note_input(args.theory)
        t = theory_from_json(_read_json(args.theory))
        value = eval_on_theory(f, t)
        return rep.emit({"value": value, "mode": "theory"})
    if not args.structure:
        raise MsoTreeError("eval needs --structure or --theory")
    st = _load_structure(rep, args.structure)
    extra = _parse_subsets(args.extra, st)
    value = eval_direct(f, st, extra)
    return rep.emit({"value": value, "mode": "direct"})


def _cmd_compose_verify(args):
    rep = _Reporter(args)
    config = FDConfig(seed=args.seed, pairs=args.pairs,
                      max_elements=args.max_elements, arity=args.arity,
                      exhaustive=args.exhaustive)
    report = verify_fd(args.theorem, args.n, args.m, config)
    return rep.emit({"fd_report": report.to_json()}, 0 if report.ok else 1)


def _cmd_scattered_hdeg(args):
    rep = _Reporter(args)
    rep.note_input(args.term)
    t = parse_order_term(_read_text(args.term))
    tag = hdeg(t)
    return rep.emit({"hdeg": tag.to_json(),
                     "display": str(tag),
                     "exactness": "exact" if hdeg_is_exact(t) else "upper_bound"})


def _cmd_scattered_catalog(args):
    rep = _Reporter(args)
    term = catalog_term(args.n, args.starred)
    return rep.emit({"term": order_term_text(term)})


def _cmd_scattered_realize(args):
    rep = _Reporter(args)
    rep.note_input(args.term)
    t = parse_order_term(_read_text(args.term))
    chain = realize_prefix(t, args.budget)
    return rep.emit({"structure": chain.to_json()})


def _cmd_lexmodel_build(args):
    rep = _Reporter(args)
    model = lex_model(args.height, args.branching)
    nodes = model.sorted_nodes()
    return rep.emit({
        "height": args.height,
        "branching": args.branching,
        "nodes_in_order": [list(nd) for nd in nodes],
    })


def _thin(args, rep):
    model = lex_model(args.height, args.branching)
    rep.note_input(args.term)
    term = parse_order_term(_read_text(args.term))
    chain = realize_prefix(term, args.budget)
    params = []
    if args.params:
        data = json.loads(args.params)
        for part in data:
            if isinstance(part, dict) and part.get("stride"):
                stride = part["stride"]
                params.append({e for i, e in enumerate(chain.chain_order) if i % stride == 0})
            else:
                params.append(set(part))
    embedding = embed_lex(model, chain)
    if embedding is None:
        raise MsoTreeError("realization too small to embed the model")
    return model, chain, params, thin_homogeneous(model, chain, params, args.depth,
                                                  embedding=embedding)


def _cmd_lexmodel_thin(args):
    rep = _Reporter(args)
    model, chain, params, result = _thin(args, rep)
    return rep.emit({
        "survivors": sorted(map(list, result.survivors)),
        "markers": {".".join(map(str, k)): list(v) for k, v in result.markers.items()},
        "level_theories": {str(k): t.content_hash()
                           for k, t in result.level_theories.items()},
    })


def _cmd_lexmodel_zset(args):
    rep = _Reporter(args)
    model, chain, params, result = _thin(args, rep)
    elements = build_z_set(result, args.k, args.l)
    return rep.emit({"elements": elements,
                     "theory": result.level_theories[args.k].content_hash()})


def _cmd_classify(args):
    rep = _Reporter(args)
    rep.note_input(args.term)
    verdict = classify(parse_tree_term(_read_text(args.term)))
    return rep.emit({"report": verdict.to_json()})


def _cmd_synth_chain(args):
    rep = _Reporter(args)
    rep.note_input(args.presentation)
    pres = parse_presentation(_read_json(args.presentation))
    cert = synth_chain_wellorder(pres, args.degree)
    return rep.emit({"certificate": cert.to_json()})


def _cmd_synth_tree(args):
    rep = _Reporter(args)
    st = _load_structure(rep, args.structure)
    cert = synth_tree_wellorder(st)
    return rep.emit({"certificate": cert.to_json()})


def _cmd_verify_cert(args):
    rep = _Reporter(args)
    st = _load_structure(rep, args.structure)
    rep.note_input(args.cert)
    obj = _read_json(args.cert)
    # accept both a bare certificate and a synth report wrapping one
    cert = WellOrderCertificate.from_json(obj.get("certificate", obj))
    report = verify_certificate(st, cert)
    return rep.emit({"report": report.to_json()}, 0 if report.accepted else 1)


def _cmd_falsify_pair(args):
    rep = _Reporter(args)
    st = _load_structure(rep, args.structure)
    w = find_indiscernible_pair(st, args.depth)
    if w is None:
        return rep.emit({"witness": None,
                         "note": "exhaustive search, double-checked in reverse order"})
    return rep.emit({"witness": w.to_json(st)}, 1)


def _cmd_falsify_choice(args):
    rep = _Reporter(args)
    st = _load_structure(rep, args.structure)
    rep.note_input(args.formula)
    f = parse_formula(_read_text(args.formula))
    verdict = check_choice_function(st, f)
    return rep.emit({"report": verdict.to_json()}, 0 if verdict.defines_choice else 1)


def _cmd_falsify_mono(args):
    rep = _Reporter(args)
    st = _load_structure(rep, args.structure)
    col = coloring_of(st, (), args.depth)
    found = find_monochromatic(col, args.size)
    return rep.emit({"monochromatic": found}, 0 if found else 1)


def build_parser():
    p = argparse.ArgumentParser(prog="msotree", description=__doc__)
    p.add_argument("--format", default="json", choices=["json"],
                   help="report format (json only)")
    sub = p.add_subparsers(dest="command", required=True)

    def add_out(sp):
        sp.add_argument("--out", help="write the report to this path")

    theory = sub.add_parser("theory", help="partial theory operations")
    tsub = theory.add_subparsers(dest="subcommand", required=True)
    tc = tsub.add_parser("compute")
    tc.add_argument("--structure", required=True)
    tc.add_argument("--depth", type=int, required=True)
    tc.add_argument("--extra", help="JSON list of id-lists appended to the tuple")
    tc.add_argument("--force", action="store_true")
    add_out(tc)
    tc.set_defaults(func=_cmd_theory_compute)
    ts = tsub.add_parser("sum")
    ts.add_argument("--left", required=True)
    ts.add_argument("--right", required=True)
    add_out(ts)
    ts.set_defaults(func=_cmd_theory_sum)
    tr = tsub.add_parser("reduce")
    tr.add_argument("--theory", required=True)
    tr.add_argument("--depth", type=int, required=True)
    add_out(tr)
    tr.set_defaults(func=_cmd_theory_reduce)
    tz = tsub.add_parser("realized")
    tz.add_argument("--depth", type=int, required=True)
    tz.add_argument("--arity", type=int, required=True)
    tz.add_argument("--size-bound", type=int, required=True)
    tz.add_argument("--kind", required=True, choices=["set", "chain", "tree"])
    tz.add_argument("--force", action="store_true")
    add_out(tz)
    tz.set_defaults(func=_cmd_theory_realized)

    ev = sub.add_parser("eval", help="evaluate a formula directly or on a theory")
    ev.add_argument("--formula", required=True)
    ev.add_argument("--structure")
    ev.add_argument("--theory")
    ev.add_argument("--extra")
    add_out(ev)
    ev.set_defaults(func=_cmd_eval)

    comp = sub.add_parser("compose", help="composition determination checks")
    csub = comp.add_subparsers(dest="subcommand", required=True)
    cv = csub.add_parser("verify")
    cv.add_argument("--theorem", required=True,
                    choices=["1.8", "1.11", "1.12", "1.13", "1.15"])
    cv.add_argument("--seed", type=int, required=True)
    cv.add_argument("--pairs", type=int, default=200)
    cv.add_argument("--max-elements", type=int, default=6)
    cv.add_argument("--arity", type=int, default=1)
    cv.add_argument("-n", type=int, default=1)
    cv.add_argument("-m", type=int, default=3)
    cv.add_argument("--exhaustive", action="store_true")
    add_out(cv)
    cv.set_defaults(func=_cmd_compose_verify)

    sc = sub.add_parser("scattered", help="order terms and degrees")
    ssub = sc.add_subparsers(dest="subcommand", required=True)
    sh = ssub.add_parser("hdeg")
    sh.add_argument("--term", required=True)
    add_out(sh)
    sh.set_defaults(func=_cmd_scattered_hdeg)
    scat = ssub.add_parser("catalog")
    scat.add_argument("-n", type=int, required=True)
    scat.add_argument("--starred", action="store_true")
    add_out(scat)
    scat.set_defaults(func=_cmd_scattered_catalog)
    sr = ssub.add_parser("realize")
    sr.add_argument("--term", required=True)
    sr.add_argument("--budget", type=int, required=True)
    add_out(sr)
    sr.set_defaults(func=_cmd_scattered_realize)

    lm = sub.add_parser("lexmodel", help="alternating lexicographic models")
    lsub = lm.add_subparsers(dest="subcommand", required=True)
    lb = lsub.add_parser("build")
    lb.add_argument("--height", type=int, required=True)
    lb.add_argument("--branching", type=int, required=True)
    add_out(lb)
    lb.set_defaults(func=_cmd_lexmodel_build)

    def thin_args(sp):
        sp.add_argument("--height", type=int, required=True)
        sp.add_argument("--branching", type=int, required=True)
        sp.add_argument("--term", required=True, help="order term file to realize")
        sp.add_argument("--budget", type=int, required=True)
        sp.add_argument("--depth", type=int, required=True)
        sp.add_argument("--params",
                        help='JSON list: id-lists or {"stride": k} patterns')

    lt = lsub.add_parser("thin")
    thin_args(lt)
    add_out(lt)
    lt.set_defaults(func=_cmd_lexmodel_thin)
    lz = lsub.add_parser("zset")
    thin_args(lz)
    lz.add_argument("--k", type=int, required=True)
    lz.add_argument("--l", type=int, required=True)
    add_out(lz)
    lz.set_defaults(func=_cmd_lexmodel_zset)

    cl = sub.add_parser("classify", help="tame/wild verdict for a tree term")
    cl.add_argument("--term", required=True)
    add_out(cl)
    cl.set_defaults(func=_cmd_classify)

    sy = sub.add_parser("synth", help="well-order synthesis")
    sysub = sy.add_subparsers(dest="subcommand", required=True)
    sychain = sysub.add_parser("chain")
    sychain.add_argument("--presentation", required=True)
    sychain.add_argument("--degree", type=int, required=True)
    add_out(sychain)
    sychain.set_defaults(func=_cmd_synth_chain)
    sytree = sysub.add_parser("tree")
    sytree.add_argument("--structure", required=True)
    add_out(sytree)
    sytree.set_defaults(func=_cmd_synth_tree)

    vc = sub.add_parser("verify-cert", help="check a certificate against a structure")
    vc.add_argument("--structure", required=True)
    vc.add_argument("--cert", required=True)
    add_out(vc)
    vc.set_defaults(func=_cmd_verify_cert)

    fa = sub.add_parser("falsify", help="counterexample engines")
    fsub = fa.add_subparsers(dest="subcommand", required=True)
    fp = fsub.add_parser("pair")
    fp.add_argument("--structure", required=True)
    fp.add_argument("--depth", type=int, required=True)
    add_out(fp)
    fp.set_defaults(func=_cmd_falsify_pair)
    fc = fsub.add_parser("choice")
    fc.add_argument("--structure", required=True)
    fc.add_argument("--formula", required=True)
    add_out(fc)
    fc.set_defaults(func=_cmd_falsify_choice)
    fm = fsub.add_parser("mono")
    fm.add_argument("--structure", required=True)
    fm.add_argument("--depth", type=int, required=True)
    fm.add_argument("--size", type=int, required=True)
    add_out(fm)
    fm.set_defaults(func=_cmd_falsify_mono)

    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return 2 if ex.code not in (0, None) else 0
    try:
        return args.func(args)
    except MsoTreeError as ex:
        sys.stderr.write(f"error: {ex}\n")
        return 2
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as ex:
        sys.stderr.write(f"error: {ex}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line runner: one reproducible experiment per config file.

Usage::

    lethargy run CONFIG.yaml [--out DIR] [--depth N] [--tol T]

The config is a single YAML document validated against a fixed schema;
unknown keys are rejected.  Each run writes a schema-versioned report, a
flat CSV table for plotting, and (for element-producing modes) the sparse
element as ``index,coefficient`` lines sorted by index.  Identical configs
produce byte-identical report bodies; the timestamp lives in a header field
above the body separator.

Exit codes: 0 when the run verifies (an expected-fail demo counts), 1 when a
verification genuinely fails, 2 on config errors, 3 when a mathematical
precondition rejects the run.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import yaml

from . import constructor
from .chain import (
    ChainSpec,
    SetChainSpec,
    dnv_estimate,
    dv_infimum,
    dv_lower_bound_seminorms,
    r_of_chain,
)
from .errors import ConfigError, LethargyError
from .seqtools import (
    ExplicitSeq,
    GeometricSeq,
    HarmonicSeq,
    PowerSeq,
    SequenceSpec,
    rescale,
)
from .space import (
    CompositeBounded,
    FNormSpec,
    Homogeneous,
    SConvex,
    Seminorm,
    SeminormFamily,
)
from .verify import (
    LethargyReport,
    verify_ballchain,
    verify_exact,
    verify_sandwich,
    verify_setchain,
)

REPORT_SCHEMA = "lethargy-report/1"
CONFIG_SCHEMA = 1
MODES = (
    "rescale",
    "exact",
    "sandwich",
    "shapiro",
    "tyuremskikh",
    "setchain",
    "degeneracy",
)
ENV_OUT = "LETHARGY_OUT"


@dataclass
class RunConfig:
    mode: str
    space: FNormSpec | None
    chain: ChainSpec | None
    sequence: SequenceSpec | None
    depth: int
    factor: int
    checkpoints: int
    horizon: int
    seminorm_levels: int
    setchain_kind: str
    tol_construct: float | None
    tol_verify: float | None
    out_dir: str | None
    source: dict


def _require_mapping(node, location):
    if not isinstance(node, dict):
        raise ConfigError("expected a mapping", location)
    return node


def _reject_unknown(node: dict, allowed: set[str], location: str):
    for key in node:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r}", f"{location}.{key}")


def _number(node, location):
    if isinstance(node, bool) or node is None:
        raise ConfigError("expected a number", location)
    if isinstance(node, (int, str)):
        try:
            return Fraction(node)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad number {node!r}: {exc}", location) from None
    if isinstance(node, float):
        return node
    raise ConfigError(f"expected a number, got {type(node).__name__}", location)


def parse_space(node, location="space") -> FNormSpec:
    node = _require_mapping(node, location)
    variant = node.get("variant")
    if variant == "homogeneous":
        _reject_unknown(node, {"variant", "p"}, location)
        p = node.get("p", 2)
        p = math.inf if p in ("inf", "infinity") else float(_number(p, f"{location}.p"))
        return Homogeneous(p)
    if variant == "sconvex":
        _reject_unknown(node, {"variant", "p", "s"}, location)
        p = node.get("p", 2)
        p = math.inf if p in ("inf", "infinity") else float(_number(p, f"{location}.p"))
        return SConvex(p, float(_number(node.get("s", 0.5), f"{location}.s")))
    if variant == "composite":
        _reject_unknown(node, {"variant", "base", "scale"}, location)
        return CompositeBounded(
            base=float(_number(node.get("base", 2), f"{location}.base")),
            scale=float(_number(node.get("scale", 1), f"{location}.scale")),
        )
    if variant == "seminorm_family":
        _reject_unknown(node, {"variant", "seminorms"}, location)
        raw = node.get("seminorms")
        if not isinstance(raw, list) or not raw:
            raise ConfigError("needs a nonempty seminorm list", f"{location}.seminorms")
        terms = []
        for i, item in enumerate(raw, start=1):
            loc = f"{location}.seminorms[{i}]"
            item = _require_mapping(item, loc)
            _reject_unknown(item, {"degree", "modulus", "residue", "indices"}, loc)
            indices = item.get("indices")
            terms.append(
                Seminorm(
                    degree=float(_number(item.get("degree", 1), f"{loc}.degree")),
                    modulus=item.get("modulus"),
                    residue=item.get("residue", 0),
                    indices=tuple(indices) if indices is not None else None,
                )
            )
        return SeminormFamily(tuple(terms))
    raise ConfigError(
        f"unknown variant {variant!r}; pick one of homogeneous, sconvex, "
        "composite, seminorm_family",
        f"{location}.variant",
    )


def _parse_cut_rule(text: str, location: str) -> ChainSpec:
    """Linear cut rules written like 'n', 'n-1', '2n', '3n+1'."""
    compact = text.replace(" ", "")
    head, sep, tail = compact.partition("n")
    if not sep:
        raise ConfigError(f"cannot read cut rule {text!r}", location)
    try:
        slope = int(head) if head else 1
        offset = int(tail) if tail else 0
    except ValueError:
        raise ConfigError(f"cannot read cut rule {text!r}", location) from None
    return ChainSpec.linear(slope=slope, offset=offset)


def parse_chain(node, location="chain") -> ChainSpec:
    node = _require_mapping(node, location)
    if "generators" in node:
        raise ConfigError(
            "generator-matrix chains are not supported; describe the chain by "
            "cut indices (every strictly nested finite-dimensional chain has "
            "a basis in which it is a coordinate chain)",
            f"{location}.generators",
        )
    _reject_unknown(node, {"cuts", "step", "slope", "offset"}, location)
    cuts = node.get("cuts")
    if isinstance(cuts, str):
        return _parse_cut_rule(cuts, f"{location}.cuts")
    if isinstance(cuts, list):
        return ChainSpec.explicit([int(c) for c in cuts], step=node.get("step"))
    if cuts is None and ("slope" in node or "offset" in node):
        return ChainSpec.linear(
            slope=int(node.get("slope", 1)), offset=int(node.get("offset", 0))
        )
    raise ConfigError(
        "chain needs 'cuts' (a rule string or an explicit list) or slope/offset",
        location,
    )


def parse_sequence(node, location="sequence") -> SequenceSpec:
    node = _require_mapping(node, location)
    form = node.get("form")
    if form == "harmonic":
        _reject_unknown(node, {"form"}, location)
        return HarmonicSeq()
    if form == "geometric":
        _reject_unknown(node, {"form", "ratio"}, location)
        if "ratio" not in node:
            raise ConfigError("geometric form needs 'ratio'", location)
        return GeometricSeq(_number(node["ratio"], f"{location}.ratio"))
    if form == "power":
        _reject_unknown(node, {"form", "alpha"}, location)
        if "alpha" not in node:
            raise ConfigError("power form needs 'alpha'", location)
        return PowerSeq(float(_number(node["alpha"], f"{location}.alpha")))
    if form == "explicit":
        _reject_unknown(node, {"form", "prefix", "tail_ratio"}, location)
        prefix = node.get("prefix")
        if not isinstance(prefix, list) or not prefix:
            raise ConfigError("explicit form needs a nonempty 'prefix'", location)
        if "tail_ratio" not in node:
            raise ConfigError("explicit form needs 'tail_ratio'", location)
        return ExplicitSeq(
            tuple(_number(v, f"{location}.prefix[{i}]") for i, v in enumerate(prefix, 1)),
            _number(node["tail_ratio"], f"{location}.tail_ratio"),
        )
    raise ConfigError(
        f"unknown form {form!r}; pick one of harmonic, geometric, power, explicit",
        f"{location}.form",
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", str(path)) from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML parse error: {exc}", str(path)) from None
    doc = _require_mapping(doc, str(path))
    allowed = {
        "schema",
        "mode",
        "space",
        "chain",
        "sequence",
        "depth",
        "factor",
        "checkpoints",
        "horizon",
        "seminorm_levels",
        "setchain",
        "tolerances",
        "output",
    }
    _reject_unknown(doc, allowed, str(path))
    if doc.get("schema", CONFIG_SCHEMA) != CONFIG_SCHEMA:
        raise ConfigError(
            f"unsupported schema {doc.get('schema')!r}; this build reads schema "
            f"{CONFIG_SCHEMA}",
            f"{path}.schema",
        )
    mode = doc.get("mode")
    if mode not in MODES:
        raise ConfigError(
            f"unknown mode {mode!r}; pick one of {', '.join(MODES)}", f"{path}.mode"
        )

    tol_construct = tol_verify = None
    if "tolerances" in doc:
        tols = _require_mapping(doc["tolerances"], f"{path}.tolerances")
        _reject_unknown(tols, {"construct", "verify"}, f"{path}.tolerances")
        if "construct" in tols:
            tol_construct = float(_number(tols["construct"], f"{path}.tolerances.construct"))
        if "verify" in tols:
            tol_verify = float(_number(tols["verify"], f"{path}.tolerances.verify"))

    out_dir = None
    if "output" in doc:
        out = _require_mapping(doc["output"], f"{path}.output")
        _reject_unknown(out, {"dir"}, f"{path}.output")
        out_dir = out.get("dir")

    setchain_kind = doc.get("setchain", "lines")
    if setchain_kind not in ("lines", "ball"):
        raise ConfigError(
            f"setchain must be 'lines' or 'ball', got {setchain_kind!r}",
            f"{path}.setchain",
        )

    needs_space = mode in ("exact", "sandwich", "shapiro", "tyuremskikh", "degeneracy")
    needs_chain = mode in (
        "exact",
        "sandwich",
        "shapiro",
        "tyuremskikh",
        "setchain",
        "degeneracy",
    )
    needs_seq = mode != "degeneracy"
    space = parse_space(doc["space"]) if "space" in doc else None
    chain = parse_chain(doc["chain"]) if "chain" in doc else None
    sequence = parse_sequence(doc["sequence"]) if "sequence" in doc else None
    if needs_space and space is None:
        raise ConfigError(f"mode {mode!r} needs a 'space' section", str(path))
    if needs_chain and chain is None:
        raise ConfigError(f"mode {mode!r} needs a 'chain' section", str(path))
    if needs_seq and sequence is None:
        raise ConfigError(f"mode {mode!r} needs a 'sequence' section", str(path))
    if mode == "setchain":
        # the set-chain distances are closed-form in the inner-product space
        space = space or Homogeneous(2.0)

    return RunConfig(
        mode=mode,
        space=space,
        chain=chain,
        sequence=sequence,
        depth=int(doc.get("depth", 10)),
        factor=int(doc.get("factor", 3)),
        checkpoints=int(doc.get("checkpoints", 12)),
        horizon=int(doc.get("horizon", 20)),
        seminorm_levels=int(doc.get("seminorm_levels", 1)),
        setchain_kind=setchain_kind,
        tol_construct=tol_construct,
        tol_verify=tol_verify,
        out_dir=out_dir,
        source=doc,
    )


def _fmt(x) -> str:
    if x == math.inf:
        return "inf"
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return repr(float(x))


def _canonical_config(doc, indent=0) -> list[str]:
    lines = []
    pad = "  " * indent
    for key in sorted(doc):
        value = doc[key]
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.extend(_canonical_config(value, indent + 1))
        else:
            lines.append(f"{pad}{key}: {value!r}")
    return lines


class RunArtifacts:
    """Collects report body lines, table rows, and the element to emit."""

    def __init__(self, mode: str):
        self.mode = mode
        self.body: list[str] = []
        self.table_header: list[str] = []
        self.table_rows: list[list] = []
        self.element = None
        self.exit_code = 0

    def write(self, out_dir: Path, config_echo: list[str]):
        out_dir.mkdir(parents=True, exist_ok=True)
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
        header = [
            REPORT_SCHEMA,
            f"generated: {stamp}",
            "---",
        ]
        body = ["config:"] + [f"  {line}" for line in config_echo] + self.body
        (out_dir / "report.txt").write_text("\n".join(header + body) + "\n")
        if self.table_header:
            with (out_dir / "table.csv").open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(self.table_header)
                for row in self.table_rows:
                    writer.writerow([_fmt(v) if not isinstance(v, (int, str)) else v for v in row])
        if self.element is not None:
            lines = [f"{idx},{coeff!r}" for idx, coeff in self.element]
            (out_dir / "element.csv").write_text("\n".join(lines) + ("\n" if lines else ""))


def _report_into(artifacts: RunArtifacts, report: LethargyReport):
    artifacts.body.append(report.to_text())
    artifacts.table_header = ["n", "e_n", "rho_n", "lower", "upper", "pass"]
    artifacts.table_rows = [
        [r.n, r.target, r.rho, r.lower, r.upper, int(r.passed)] for r in report.rows
    ]
    artifacts.exit_code = 0 if report.effective_pass else 1


def _run_rescale(config: RunConfig, artifacts: RunArtifacts):
    res = rescale(config.sequence, config.factor, config.checkpoints)
    artifacts.table_header = ["k", "f_k", "n_k", "branch"]
    artifacts.table_rows = [
        [k + 1, res.f[k], res.n[k], res.branches[k - 1] if k else "start"]
        for k in range(len(res.f))
    ]
    artifacts.body.append(f"checkpoints: {len(res.f)} factor: {res.factor}")
    for k in range(len(res.f)):
        artifacts.body.append(f"  k={k + 1} f={_fmt(res.f[k])} n={res.n[k]}")
    artifacts.body.append("verdict: PASS")


def _run_exact(config: RunConfig, artifacts: RunArtifacts):
    trace = constructor.construct_exact(
        config.space, config.chain, config.sequence, config.depth, tol=config.tol_construct
    )
    report = verify_exact(
        trace, config.space, config.chain, config.sequence, tol=config.tol_verify
    )
    _report_into(artifacts, report)
    artifacts.element = list(trace.element)


def _run_sandwich(config: RunConfig, artifacts: RunArtifacts):
    sw = constructor.construct_sandwich(
        config.space,
        config.chain,
        config.sequence,
        config.depth,
        config.factor,
        tol=config.tol_construct,
    )
    report = verify_sandwich(
        sw.trace,
        config.space,
        config.chain,
        config.sequence,
        sw.n_o,
        sw.factor,
        tol=config.tol_verify,
        n_max=config.depth,
    )
    _report_into(artifacts, report)
    artifacts.element = list(sw.trace.element)


def _run_shapiro(config: RunConfig, artifacts: RunArtifacts):
    result = constructor.shapiro_witness(
        config.space, config.chain, config.sequence, config.depth, tol=config.tol_construct
    )
    artifacts.table_header = ["n", "rho_n", "ratio", "bound", "pass"]
    artifacts.table_rows = [
        [r.n, r.rho, r.ratio, r.bound, int(r.ok)] for r in result.rows
    ]
    ok = result.unbounded_growth
    artifacts.body.append(
        f"ratio rows from n_o={result.sandwich.n_o}: distance/target grows at "
        "least like a third of the inverse square root of the target"
    )
    artifacts.body.append(f"verdict: {'PASS' if ok else 'FAIL'}")
    artifacts.element = list(result.sandwich.trace.element)
    artifacts.exit_code = 0 if ok else 1


def _run_tyuremskikh(config: RunConfig, artifacts: RunArtifacts):
    result = constructor.tyuremskikh_witness(
        config.space, config.chain, config.sequence, config.depth, tol=config.tol_construct
    )
    artifacts.table_header = ["n", "rho_n", "floor", "pass"]
    artifacts.table_rows = [[r.n, r.rho, r.floor, int(r.ok)] for r in result.rows]
    ok = result.dominated
    artifacts.body.append(
        f"distance dominates the target from n={result.certified_from} on"
    )
    artifacts.body.append(f"verdict: {'PASS' if ok else 'FAIL'}")
    artifacts.element = list(result.sandwich.trace.element)
    artifacts.exit_code = 0 if ok else 1


def _run_setchain(config: RunConfig, artifacts: RunArtifacts):
    sw = constructor.construct_sandwich(
        Homogeneous(2.0),
        config.chain,
        config.sequence,
        config.depth,
        factor=3,
        tol=config.tol_construct,
    )
    if config.setchain_kind == "ball":
        report = verify_ballchain(
            sw.trace, config.sequence, sw.n_o, config.depth, tol=config.tol_verify
        )
    else:
        report = verify_setchain(
            sw.trace,
            SetChainSpec(config.chain),
            config.sequence,
            sw.n_o,
            tol=config.tol_verify,
            n_max=config.depth,
        )
    _report_into(artifacts, report)
    artifacts.element = list(sw.trace.element)


def _run_degeneracy(config: RunConfig, artifacts: RunArtifacts):
    artifacts.table_header = ["n", "d_n", "lower_bound_only"]
    for n in range(1, config.horizon + 1):
        est = dnv_estimate(config.space, config.chain, n)
        artifacts.table_rows.append([n, est.value, int(est.lower_bound_only)])
    dv = dv_infimum(config.space, config.chain, config.horizon)
    rv = r_of_chain(config.space, config.chain, config.horizon)
    artifacts.body.append(f"separation infimum to horizon {config.horizon}: {_fmt(dv)}")
    artifacts.body.append(f"ray-sup infimum over generators: {_fmt(rv)}")
    if isinstance(config.space, SeminormFamily):
        bound = dv_lower_bound_seminorms(
            config.space, config.chain, config.seminorm_levels, config.horizon
        )
        if bound.failing_level is None:
            artifacts.body.append(
                f"seminorm lower bound: {_fmt(bound.value)} "
                f"(levels={config.seminorm_levels})"
            )
        else:
            artifacts.body.append(
                f"seminorm lower bound failed at level {bound.failing_level}"
            )
    artifacts.body.append("verdict: PASS")


_RUNNERS = {
    "rescale": _run_rescale,
    "exact": _run_exact,
    "sandwich": _run_sandwich,
    "shapiro": _run_shapiro,
    "tyuremskikh": _run_tyuremskikh,
    "setchain": _run_setchain,
    "degeneracy": _run_degeneracy,
}


def run(config: RunConfig, out_dir: str | Path) -> int:
    """Execute the configured pipeline and write the artifacts."""
    artifacts = RunArtifacts(config.mode)
    _RUNNERS[config.mode](config, artifacts)
    artifacts.write(Path(out_dir), _canonical_config(config.source))
    return artifacts.exit_code


def _resolve_out_dir(args, config: RunConfig) -> Path:
    if args.out:
        return Path(args.out)
    env = os.environ.get(ENV_OUT)
    if env:
        return Path(env)
    if config.out_dir:
        return Path(config.out_dir)
    return Path("lethargy-out")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lethargy",
        description="realize prescribed best-approximation decay over a "
        "nested coordinate subspace chain and verify the result",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runner = sub.add_parser("run", help="execute one experiment config")
    runner.add_argument("config", help="path to the YAML run configuration")
    runner.add_argument("--out", help="output directory (beats config and environment)")
    runner.add_argument("--depth", type=int, help="override the configured depth")
    runner.add_argument("--tol", type=float, help="override the verification tolerance")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        if args.depth is not None:
            config.depth = args.depth
        if args.tol is not None:
            config.tol_verify = args.tol
        out_dir = _resolve_out_dir(args, config)
        code = run(config, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LethargyError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return 3
    print(f"{config.mode}: {'pass' if code == 0 else 'FAIL'} (artifacts in {out_dir})")
    return code


if __name__ == "__main__":
    sys.exit(main())

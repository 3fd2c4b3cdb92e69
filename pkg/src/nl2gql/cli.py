"""``nl2gql`` command line.

Exit codes: 0 ok, 1 invalid query, 2 configuration error, 3 backend error,
4 pipeline error, 5 unsupported statement, 6 a gold query failed to run.
Artifacts go to stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .backends import Backend, HashEmbeddingBackend, OpenAIBackend, RecordingBackend, ReplayBackend
from .codegen import builtin_skeleton, load_skeleton, render_code_schema, render_skeleton
from .errors import (BackendError, GoldExecutionError, GqlSyntaxError, Nl2GqlError, SemanticError,
                     StageError, UnknownKeyword, UnsupportedFeature)
from .gql.executor import execute
from .gql.parser import parse, validate
from .graph_store import GraphStore, load_graph, load_schema
from .pipeline import AlignParams, Backends, Pipeline, PromptSet, Sampling

EXIT_OK, EXIT_INVALID, EXIT_CONFIG, EXIT_BACKEND, EXIT_PIPELINE, EXIT_UNSUPPORTED, EXIT_GOLD = range(7)
ROLES = ("ranker", "refiner", "rewriter_embed", "eval_embed")


class ConfigError(Nl2GqlError):
    pass


class _Exit(Exception):
    def __init__(self, code: int, message: str = ""):
        super().__init__(message)
        self.code = code
        self.message = message


# -- configuration ---------------------------------------------------------------

_VAR = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)(?::-([^}]*))?\}")


def interpolate(value: Any, env: dict | None = None) -> Any:
    """Replace ``${VAR}`` and ``${VAR:-default}`` in every string of a JSON value."""
    env = os.environ if env is None else env
    if isinstance(value, str):
        def sub(m):
            name, default = m.group(1), m.group(2)
            if name in env:
                return env[name]
            if default is not None:
                return default
            raise ConfigError(f"environment variable {name} is not set")
        return _VAR.sub(sub, value)
    if isinstance(value, list):
        return [interpolate(v, env) for v in value]
    if isinstance(value, dict):
        return {k: interpolate(v, env) for k, v in value.items()}
    return value


@dataclass
class Config:
    base_dir: Path
    backends: dict = field(default_factory=dict)
    roles: dict = field(default_factory=dict)
    sampling: Sampling = Sampling()
    align: AlignParams = AlignParams()
    similarity: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)
    stores: dict = field(default_factory=dict)
    _built: dict = field(default_factory=dict, repr=False)

    @classmethod
    def load(cls, path: str | Path | None, overrides: dict | None = None) -> "Config":
        data: dict = {}
        base = Path.cwd()
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise ConfigError(f"config file {p} not found")
            try:
                data = json.loads(p.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {p}: {exc}") from exc
            base = p.parent
        data = interpolate(data)
        paths = dict(data.get("paths", {}))
        for k, v in (overrides or {}).items():
            if v is not None:
                paths[k] = str(Path(v).resolve())
        try:
            sampling = Sampling(**data.get("sampling", {}))
            align = AlignParams(**data.get("align", {}))
        except TypeError as exc:
            raise ConfigError(f"bad sampling/align section: {exc}") from exc
        cfg = cls(base, data.get("backends", {}), data.get("roles", {}), sampling, align,
                  data.get("similarity", {}), paths, data.get("stores", {}))
        for key in ("schema", "graph", "skeleton_override", "prompts"):
            if key in cfg.paths and not cfg.resolve(cfg.paths[key]).exists():
                raise ConfigError(f"paths.{key}: {cfg.resolve(cfg.paths[key])} does not exist")
        return cfg

    def resolve(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path

    # stores ----------------------------------------------------------------
    def store(self, schema_id: str | None = None) -> GraphStore:
        key = ("store", schema_id)
        if key in self._built:
            return self._built[key]
        if schema_id is not None and schema_id in self.stores:
            spec = self.stores[schema_id]
        else:
            spec = self.paths
        if "schema" not in spec or "graph" not in spec:
            raise ConfigError("no schema/graph paths configured" +
                              (f" for schema_id {schema_id!r}" if schema_id else ""))
        for k in ("schema", "graph"):
            if not self.resolve(spec[k]).is_file():
                raise ConfigError(f"{k} path {self.resolve(spec[k])} does not exist")
        schema = load_schema(self.resolve(spec["schema"]).read_text(encoding="utf-8"))
        store = load_graph(schema, self.resolve(spec["graph"]).read_text(encoding="utf-8"))
        self._built[key] = store
        return store

    def store_lookup(self, schema_id: str) -> GraphStore:
        default_id = self.paths.get("schema_id")
        if schema_id in self.stores:
            return self.store(schema_id)
        if default_id is None or schema_id == default_id or schema_id == "default":
            return self.store(None)
        raise ConfigError(f"unknown schema_id {schema_id!r}")

    def skeleton(self):
        if "skeleton_override" in self.paths:
            return load_skeleton(self.resolve(self.paths["skeleton_override"]))
        return builtin_skeleton()

    def prompts(self) -> PromptSet:
        return PromptSet.load(self.resolve(self.paths["prompts"]) if "prompts" in self.paths else None)

    # backends --------------------------------------------------------------
    def backend(self, name: str) -> Backend:
        if ("backend", name) in self._built:
            return self._built[("backend", name)]
        spec = self.backends.get(name)
        if spec is None:
            raise ConfigError(f"backend {name!r} is not defined")
        kind = spec.get("type")
        if kind == "replay":
            if "fixture" not in spec:
                raise ConfigError(f"replay backend {name!r} needs a fixture path")
            fixture = self.resolve(spec["fixture"])
            if not fixture.is_file():
                raise ConfigError(f"fixture {fixture} does not exist")
            b: Backend = ReplayBackend(fixture, spec.get("model_name", ""), spec.get("embed_model", ""))
        elif kind == "record":
            if "inner" not in spec or "fixture" not in spec:
                raise ConfigError(f"record backend {name!r} needs 'inner' and 'fixture'")
            b = RecordingBackend(self.backend(spec["inner"]), self.resolve(spec["fixture"]))
        elif kind == "openai":
            b = OpenAIBackend(spec.get("base_url"), spec.get("api_key"), spec.get("model_name", "gpt-4"),
                              spec.get("embed_model", "text-embedding-ada-002"),
                              timeout=float(spec.get("timeout", 60.0)))
        elif kind == "hash":
            b = HashEmbeddingBackend(int(spec.get("dim", 64)), spec.get("embed_model", "hash-64"))
        else:
            raise ConfigError(f"backend {name!r} has unknown type {kind!r}")
        self._built[("backend", name)] = b
        return b

    def role(self, role: str) -> Backend:
        if role not in self.roles:
            raise ConfigError(f"role {role!r} is not bound to a backend")
        return self.backend(self.roles[role])

    def pipeline(self, schema_id: str | None = None) -> Pipeline:
        backends = Backends(self.role("ranker"), self.role("refiner"), self.role("rewriter_embed"))
        return Pipeline(self.store(schema_id), self.skeleton(), backends, self.prompts(), self.sampling,
                        self.align)

    def similarity_params(self, theta: float | None = None):
        from .evaluation import SimilarityParams

        s = dict(self.similarity)
        if "bm25_k1" in s:
            s["k1"] = s.pop("bm25_k1")
        if "bm25_b" in s:
            s["b"] = s.pop("bm25_b")
        if theta is not None:
            s["theta"] = theta
        try:
            return SimilarityParams(**s)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad similarity section: {exc}") from exc


# -- helpers --------------------------------------------------------------------

def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _read_lines(path: str) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Exit(EXIT_CONFIG, f"cannot read {path}: {exc.strerror}")
    return text.splitlines()


def _config(args) -> Config:
    return Config.load(getattr(args, "config", None),
                       {"schema": getattr(args, "schema", None), "graph": getattr(args, "graph", None)})


def _stage_error(exc: StageError) -> _Exit:
    if isinstance(exc.cause, BackendError):
        return _Exit(EXIT_BACKEND, f"[{exc.stage}] backend error: {exc.cause}")
    return _Exit(EXIT_PIPELINE, f"[{exc.stage}] {type(exc.cause).__name__}: {exc.cause}")


# -- commands --------------------------------------------------------------------

def cmd_translate(args) -> int:
    cfg = _config(args)
    queries = [q for q in _read_lines(args.query_file) if q.strip()] if args.query_file else [args.query]
    if not queries or queries == [None]:
        raise _Exit(EXIT_CONFIG, "give a query or --query-file")
    pipe = cfg.pipeline()
    traces = []
    for q in queries:
        try:
            result = pipe.translate(q)
        except StageError as exc:
            raise _stage_error(exc)
        if args.trace:
            traces.append({"query": q, **result.to_dict()})
        else:
            print(result.gql)
    if args.trace:
        doc = traces[0] if len(traces) == 1 and not args.query_file else traces
        print(json.dumps(doc, indent=2, ensure_ascii=False, sort_keys=True))
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.file:
        lines = _read_lines(args.file)
        queries = [(i, q) for i, q in enumerate(lines, 1) if q.strip() and not q.lstrip().startswith("#")]
        if not queries:
            raise _Exit(EXIT_CONFIG, f"{args.file} contains no queries")
    elif args.queries:
        queries = list(enumerate(args.queries, 1))
    else:
        raise _Exit(EXIT_CONFIG, "give queries or --file")
    bad = 0
    for lineno, q in queries:
        err = validate(q)
        if err is None:
            print(f"{lineno}: ok")
        else:
            bad += 1
            line, col = err.position
            print(f"{lineno}: SyntaxError at line {line}, column {col}: {err.message}")
    return EXIT_INVALID if bad else EXIT_OK


def cmd_exec(args) -> int:
    cfg = _config(args)
    store = cfg.store_lookup(args.schema_id) if args.schema_id else cfg.store()
    try:
        table = execute(parse(args.query), store, seed=args.seed)
    except GqlSyntaxError as exc:
        raise _Exit(EXIT_INVALID, f"SyntaxError: {exc}")
    except UnsupportedFeature as exc:
        raise _Exit(EXIT_UNSUPPORTED, f"UnsupportedFeature: {exc}")
    except SemanticError as exc:
        raise _Exit(EXIT_INVALID, f"SemanticError: {exc}")
    sys.stdout.write(table.to_text())
    return EXIT_OK


def cmd_eval(args) -> int:
    from .dataset import read_jsonl
    from .evaluation import EvalItem, Intermediates, evaluate

    cfg = _config(args)
    try:
        records = read_jsonl(args.eval_file)
    except OSError as exc:
        raise _Exit(EXIT_CONFIG, f"cannot read {args.eval_file}: {exc.strerror}")
    if not records:
        raise _Exit(EXIT_CONFIG, f"{args.eval_file} has no items")
    items = []
    inter = {}
    pipes: dict[str, Pipeline] = {}
    for i, rec in enumerate(records):
        try:
            item = EvalItem.from_dict(rec, i)
        except KeyError as exc:
            raise _Exit(EXIT_CONFIG, f"eval item {i} lacks {exc}")
        if item.generated_gql is None:
            sid = item.schema_id
            if sid not in pipes:
                backends = Backends(cfg.role("ranker"), cfg.role("refiner"), cfg.role("rewriter_embed"))
                pipes[sid] = Pipeline(cfg.store_lookup(sid), cfg.skeleton(), backends, cfg.prompts(),
                                      cfg.sampling, cfg.align)
            try:
                result = pipes[sid].translate(item.nl)
                gql = result.gql
                inter[item.item_id] = Intermediates(result.ranker.schema_subset, result.ranker.crud_keywords,
                                                    len(result.rewrite.applied))
            except StageError as exc:
                if isinstance(exc.cause, BackendError):
                    raise _stage_error(exc)
                _err(f"item {item.item_id}: {exc}; counted as invalid")
                gql = ""
            item = EvalItem(item.nl, item.gold_gql, gql, item.schema_id, item.item_id)
        items.append(item)
    try:
        report = evaluate(items, cfg.store_lookup, cfg.role("eval_embed"), cfg.similarity_params(args.theta),
                          intermediates=inter, jobs=args.jobs)
    except GoldExecutionError as exc:
        raise _Exit(EXIT_GOLD, str(exc))
    if args.report:
        Path(args.report).write_text(report.to_json(), encoding="utf-8")
    if args.format == "json":
        sys.stdout.write(report.to_json())
    else:
        sys.stdout.write(report.to_table())
    return EXIT_OK


def cmd_dataset(args) -> int:
    from . import dataset as ds

    if args.dataset_cmd == "sample":
        if args.points:
            vectors = json.loads(Path(args.points).read_text(encoding="utf-8"))
        elif args.pairs:
            cfg = _config(args)
            pairs = ds.load_pairs(args.pairs)
            vectors = [v.values for v in cfg.role("rewriter_embed").embed([p.nl for p in pairs])]
        else:
            raise _Exit(EXIT_CONFIG, "give --points or --pairs")
        print(json.dumps(ds.k_center_greedy(vectors, args.k, args.init)))
        return EXIT_OK
    if args.dataset_cmd == "split":
        pairs = ds.load_pairs(args.pairs)
        holdout = frozenset(h for h in (args.holdout or "").split(",") if h)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            train, test = ds.split_by_schema(pairs, ds.SplitSpec(args.fraction, holdout, args.seed))
        for w in caught:
            _err(f"warning: {w.message}")
        ds.dump_pairs(args.train_out, train)
        ds.dump_pairs(args.test_out, test)
        print(json.dumps({"train": len(train), "test": len(test)}))
        return EXIT_OK
    # records
    cfg = _config(args)
    pairs = ds.load_pairs(args.pairs)
    skeleton = cfg.skeleton()
    recs = [ds.build_train_record(p, cfg.store_lookup(p.schema_id).schema, skeleton).to_dict() for p in pairs]
    ds.write_jsonl(args.out, recs)
    print(json.dumps({"records": len(recs)}))
    return EXIT_OK


def cmd_schema(args) -> int:
    if args.schema_cmd == "codegen":
        cfg = _config(args)
        if "schema" not in cfg.paths:
            raise _Exit(EXIT_CONFIG, "give --schema or a config with paths.schema")
        schema = load_schema(cfg.resolve(cfg.paths["schema"]).read_text(encoding="utf-8"))
        only = [n for n in args.only.split(",") if n] if args.only else None
        sys.stdout.write(render_code_schema(schema, only).text)
        return EXIT_OK
    skeleton = load_skeleton(Path(args.skeleton)) if args.skeleton else builtin_skeleton()
    keywords = [k.strip() for k in args.keywords.split(",") if k.strip()] if args.keywords else None
    try:
        sys.stdout.write(render_skeleton(skeleton, keywords))
    except UnknownKeyword as exc:
        raise _Exit(EXIT_CONFIG, str(exc))
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nl2gql", description="Translate questions to nGQL, run and score them.")
    p.add_argument("--version", action="version", version=f"nl2gql {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--schema", help="schema file; overrides paths.schema")
        sp.add_argument("--graph", help="graph data file; overrides paths.graph")

    t = sub.add_parser("translate", help="question to nGQL")
    with_config(t)
    t.add_argument("query", nargs="?")
    t.add_argument("--query-file")
    t.add_argument("--trace", action="store_true", help="print the intermediates document")
    t.set_defaults(func=cmd_translate)

    v = sub.add_parser("validate", help="syntax-check queries")
    v.add_argument("queries", nargs="*")
    v.add_argument("--file", help="one query per line; blank and # lines skipped")
    v.set_defaults(func=cmd_validate)

    x = sub.add_parser("exec", help="run a query on the embedded store")
    with_config(x)
    x.add_argument("query")
    x.add_argument("--schema-id")
    x.add_argument("--seed", type=int, default=0, help="seed for SAMPLE")
    x.set_defaults(func=cmd_exec)

    e = sub.add_parser("eval", help="score an eval file")
    with_config(e)
    e.add_argument("eval_file")
    e.add_argument("--theta", type=float)
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--format", choices=("table", "json"), default="table")
    e.add_argument("--report", help="also write the JSON report here")
    e.set_defaults(func=cmd_eval)

    d = sub.add_parser("dataset", help="sampling, splits, train records")
    dsub = d.add_subparsers(dest="dataset_cmd", required=True)
    s = dsub.add_parser("sample")
    with_config(s)
    s.add_argument("--points", help="JSON list of vectors")
    s.add_argument("--pairs", help="pair file; NL texts are embedded")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--init", choices=("max_norm", "first_index"), default="max_norm")
    sp = dsub.add_parser("split")
    sp.add_argument("--pairs", required=True)
    sp.add_argument("--holdout", help="comma-separated schema ids")
    sp.add_argument("--fraction", type=float, default=0.8)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--train-out", required=True)
    sp.add_argument("--test-out", required=True)
    r = dsub.add_parser("records")
    with_config(r)
    r.add_argument("--pairs", required=True)
    r.add_argument("--out", required=True)
    d.set_defaults(func=cmd_dataset)

    sc = sub.add_parser("schema", help="render prompt context")
    ssub = sc.add_subparsers(dest="schema_cmd", required=True)
    cg = ssub.add_parser("codegen")
    with_config(cg)
    cg.add_argument("--only", help="comma-separated tag/edge names")
    sk = ssub.add_parser("skeleton")
    sk.add_argument("--keywords", help="comma-separated keywords, e.g. GO,LIMIT")
    sk.add_argument("--skeleton", help="skeleton override JSON")
    sc.set_defaults(func=cmd_schema)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Exit as exc:
        if exc.message:
            _err(exc.message)
        return exc.code
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    except BackendError as exc:
        _err(f"backend error: {exc}")
        return EXIT_BACKEND
    except StageError as exc:
        code = _stage_error(exc)
        _err(code.message)
        return code.code
    except GqlSyntaxError as exc:
        _err(f"SyntaxError: {exc}")
        return EXIT_INVALID
    except UnsupportedFeature as exc:
        _err(f"UnsupportedFeature: {exc}")
        return EXIT_UNSUPPORTED
    except Nl2GqlError as exc:  # schema/data/parse problems in input files
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

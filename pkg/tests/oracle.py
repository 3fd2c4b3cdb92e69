"""Independent reference semantics for random executor tests.

Queries are generated as small spec dicts, rendered to nGQL text for the real
parser and executor, and interpreted here directly against the raw node and
edge lists (no store indices, no AST).
"""

from __future__ import annotations

import random

from nl2gql.graph_store import load_graph, load_schema

SCHEMA_DOC = {
    "space": "rand",
    "tags": [
        {"name": "player", "description": "", "attrs": [{"name": "name", "dtype": "string"},
                                                         {"name": "age", "dtype": "int"}]},
        {"name": "team", "description": "", "attrs": [{"name": "name", "dtype": "string"}]},
    ],
    "edges": [
        {"name": "follow", "description": "", "src_tags": ["player"], "dst_tags": ["player"],
         "attrs": [{"name": "degree", "dtype": "int"}]},
        {"name": "serve", "description": "", "src_tags": ["player"], "dst_tags": ["team"],
         "attrs": [{"name": "start_year", "dtype": "int"}]},
    ],
}
SCHEMA = load_schema(SCHEMA_DOC)
TAG_ATTRS = {"player": {"name": str, "age": int}, "team": {"name": str}}
EDGE_ATTRS = {"follow": {"degree": int}, "serve": {"start_year": int}}
EDGE_ENDS = {"follow": ("player", "player"), "serve": ("player", "team")}
NAMES = ["ann", "bob", "cy", "dee", "ed"]


# -- random stores -------------------------------------------------------------

def random_graph(rng: random.Random) -> dict:
    n_players = rng.randint(1, 14)
    n_teams = rng.randint(0, 20 - n_players)
    nodes = []
    for i in range(n_players):
        attrs = {}
        if rng.random() < 0.9:
            attrs["name"] = rng.choice(NAMES)
        if rng.random() < 0.85:
            attrs["age"] = rng.randint(20, 30)
        nodes.append({"vid": f"p{i:02d}", "tag": "player", "attrs": attrs})
    for i in range(n_teams):
        attrs = {"name": rng.choice(NAMES)} if rng.random() < 0.9 else {}
        nodes.append({"vid": f"t{i:02d}", "tag": "team", "attrs": attrs})
    players = [n["vid"] for n in nodes if n["tag"] == "player"]
    teams = [n["vid"] for n in nodes if n["tag"] == "team"]
    edges, keys = [], set()
    for _ in range(rng.randint(0, 40)):
        etype = "serve" if teams and rng.random() < 0.3 else "follow"
        src = rng.choice(players)
        dst = rng.choice(teams if etype == "serve" else players)
        rank = rng.choice([0, 0, 0, 1])
        if (src, dst, etype, rank) in keys:
            continue
        keys.add((src, dst, etype, rank))
        attrs = {}
        if rng.random() < 0.85:
            attrs["degree" if etype == "follow" else "start_year"] = rng.randint(1, 6)
        edges.append({"src": src, "dst": dst, "etype": etype, "rank": rank, "attrs": attrs})
    return {"nodes": nodes, "edges": edges}


def build_store(doc: dict):
    return load_graph(SCHEMA, doc)


# -- value semantics ---------------------------------------------------------------

def _family(v):
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, (int, float)):
        return "num"
    return "str"


def compare(a, op, b):
    if a is None or b is None:
        return None
    if op in ("==", "!="):
        same = _family(a) == _family(b) and a == b
        return same if op == "==" else not same
    if _family(a) != _family(b):
        return None
    return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]


def k_and(a, b):
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def k_or(a, b):
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


def k_not(a):
    return None if a is None else not a


def order_key(v):
    if v is None:
        return (9, 0)
    return ({"bool": 0, "num": 1, "str": 2}[_family(v)], v)


def lit_text(v) -> str:
    return f'"{v}"' if isinstance(v, str) else str(v)


# -- query specs -------------------------------------------------------------------
# operand forms:
#   ("dst", tag, attr) $$.tag.attr      ("src", tag, attr) $^.tag.attr
#   ("edge", etype, attr) etype.attr    ("vertex", tag, attr) tag.attr
#   ("var", v, tag, attr) v.tag.attr    ("evar", e, attr) e.attr
#   ("dstid",) dst(edge)  ("srcid",) src(edge)  ("type",) type(edge)  ("rank",) rank(edge)
#   ("id",) id(vertex)    ("vid", v) id(v)

def operand_text(op) -> str:
    kind = op[0]
    if kind == "dst":
        return f"$$.{op[1]}.{op[2]}"
    if kind == "src":
        return f"$^.{op[1]}.{op[2]}"
    if kind in ("edge", "vertex"):
        return f"{op[1]}.{op[2]}"
    if kind == "var":
        return f"{op[1]}.{op[2]}.{op[3]}"
    if kind == "evar":
        return f"{op[1]}.{op[2]}"
    if kind == "vid":
        return f"id({op[1]})"
    return {"dstid": "dst(edge)", "srcid": "src(edge)", "type": "type(edge)", "rank": "rank(edge)",
            "id": "id(vertex)"}[kind]


def operand_type(op):
    kind = op[0]
    if kind in ("dst", "src", "vertex"):
        return TAG_ATTRS[op[1]][op[2]]
    if kind == "var":
        return TAG_ATTRS[op[2]][op[3]]
    if kind == "edge":
        return EDGE_ATTRS[op[1]][op[2]]
    if kind == "evar":
        return int
    if kind == "rank":
        return int
    return str


def cond_text(c) -> str:
    if c[0] == "cmp":
        return f"{operand_text(c[1])} {c[2]} {lit_text(c[3])}"
    if c[0] == "not":
        return f"NOT ({cond_text(c[1])})"
    word = {"and": "AND", "or": "OR"}[c[0]]
    return f"({cond_text(c[1])} {word} {cond_text(c[2])})"


def random_literal(rng, typ):
    if typ is int:
        return rng.randint(0, 31)
    return rng.choice(NAMES)


def random_cond(rng, operands, depth=0):
    r = rng.random()
    if depth < 2 and r < 0.25:
        return (rng.choice(["and", "or"]), random_cond(rng, operands, depth + 1),
                random_cond(rng, operands, depth + 1))
    if depth < 2 and r < 0.33:
        return ("not", random_cond(rng, operands, depth + 1))
    op = rng.choice(operands)
    typ = operand_type(op)
    # occasionally compare across types to exercise mismatch semantics
    lit_type = typ if rng.random() < 0.9 else (str if typ is int else int)
    return ("cmp", op, rng.choice(["==", "!=", "<", "<=", ">", ">="]), random_literal(rng, lit_type))


def _edge_operands(etypes):
    return [("edge", t, a) for t in etypes for a in EDGE_ATTRS[t]]


def random_go(rng, vids):
    over = rng.choice([["follow"], ["serve"], ["follow", "serve"], ["*"]])
    etypes = ["follow", "serve"] if over == ["*"] else over
    operands = ([("dst", t, a) for t in TAG_ATTRS for a in TAG_ATTRS[t]] +
                [("src", "player", a) for a in TAG_ATTRS["player"]] + _edge_operands(etypes))
    starts = rng.sample(vids + ["zz"], k=min(len(vids) + 1, rng.randint(1, 3)))
    spec = {
        "kind": "go", "steps": rng.randint(1, 3), "from": starts, "over": over,
        "direction": rng.choice(["outgoing", "reversed", "bidirect"]),
        "where": random_cond(rng, operands) if rng.random() < 0.6 else None,
        "yield": rng.sample(operands + [("dstid",), ("srcid",), ("type",), ("rank",)], k=rng.randint(1, 3)),
        "distinct": rng.random() < 0.2,
    }
    return spec


def random_fetch(rng, vids):
    tag = rng.choice(["player", "team"])
    k = rng.randint(1, 4)
    pool = vids + ["zz"]
    chosen = [rng.choice(pool) for _ in range(k)]
    return {"kind": "fetch", "tag": tag, "vids": chosen,
            "yield": rng.sample([("vertex", tag, a) for a in TAG_ATTRS[tag]] + [("id",)],
                                k=rng.randint(1, len(TAG_ATTRS[tag]) + 1))}


def random_lookup(rng):
    tag = rng.choice(["player", "team"])
    operands = [("vertex", tag, a) for a in TAG_ATTRS[tag]]
    return {"kind": "lookup", "tag": tag,
            "where": random_cond(rng, operands) if rng.random() < 0.8 else None,
            "yield": rng.sample(operands + [("id",)], k=rng.randint(1, len(operands) + 1))}


def random_match(rng):
    hops = rng.randint(1, 2)
    nodes = []
    for i in range(hops + 1):
        nodes.append({"var": f"n{i}", "label": rng.choice([None, "player", "player", "team"])})
    edges = []
    for i in range(hops):
        types = rng.choice([[], ["follow"], ["serve"], ["follow", "serve"]])
        edges.append({"var": f"e{i}", "types": types, "dir": rng.choice(["right", "left", "both"])})
    operands = [("vid", n["var"]) for n in nodes]
    for n in nodes:
        if n["label"] is not None:
            operands += [("var", n["var"], n["label"], a) for a in TAG_ATTRS[n["label"]]]
    for e in edges:
        if e["types"] == ["follow"]:
            operands.append(("evar", e["var"], "degree"))
    return {"kind": "match", "nodes": nodes, "edges": edges,
            "where": random_cond(rng, operands) if rng.random() < 0.6 else None,
            "return": rng.sample(operands, k=rng.randint(1, min(3, len(operands))))}


def random_pipes(rng, spec):
    if spec["kind"] == "match" or rng.random() < 0.4:
        return []
    width = len(spec["yield"])
    types = [operand_type(op) for op in spec["yield"]]
    stages = []
    if rng.random() < 0.3:
        c = rng.randrange(width)
        stages.append(("where", c, rng.choice(["==", "!=", "<", ">="]), random_literal(rng, types[c])))
    r = rng.random()
    if r < 0.3:
        stages.append(("order_all", [rng.random() < 0.5 for _ in range(width)]))
        if rng.random() < 0.7:
            stages.append(("limit", rng.randint(0, 2), rng.randint(0, 4)))
    elif r < 0.45:
        stages.append(("distinct",))
    elif r < 0.75:
        k = rng.randrange(width)
        numeric = [i for i, t in enumerate(types) if t is int]
        agg = rng.choice(["count", "min", "max"] + (["sum"] if numeric else []))
        a = rng.choice(numeric) if agg == "sum" else rng.randrange(width)
        stages.append(("group", k, agg, a))
    else:
        stages.append(("limit", 0, rng.randint(0, 5)))
    return stages


def random_query(rng, vids):
    r = rng.random()
    if r < 0.45:
        spec = random_go(rng, vids)
    elif r < 0.6:
        spec = random_fetch(rng, vids)
    elif r < 0.75:
        spec = random_lookup(rng)
    else:
        spec = random_match(rng)
    spec["pipes"] = random_pipes(rng, spec)
    return spec


# -- rendering ---------------------------------------------------------------------

def _yield_text(items) -> str:
    return ", ".join(f"{operand_text(op)} AS c{i}" for i, op in enumerate(items))


def _pattern_text(spec) -> str:
    out = []
    for i, n in enumerate(spec["nodes"]):
        out.append(f"({n['var']}:{n['label']})" if n["label"] else f"({n['var']})")
        if i < len(spec["edges"]):
            e = spec["edges"][i]
            inner = e["var"] + (":" + "|".join(e["types"]) if e["types"] else "")
            left, right = {"right": ("-", "->"), "left": ("<-", "-"), "both": ("-", "-")}[e["dir"]]
            out.append(f"{left}[{inner}]{right}")
    return "".join(out)


def render(spec) -> str:
    kind = spec["kind"]
    if kind == "go":
        steps = f"{spec['steps']} STEPS " if spec["steps"] > 1 else ""
        direction = {"outgoing": "", "reversed": " REVERSELY", "bidirect": " BIDIRECT"}[spec["direction"]]
        text = (f"GO {steps}FROM {', '.join(lit_text(v) for v in spec['from'])} "
                f"OVER {', '.join(spec['over'])}{direction}")
        if spec["where"] is not None:
            text += f" WHERE {cond_text(spec['where'])}"
        text += f" YIELD {'DISTINCT ' if spec['distinct'] else ''}{_yield_text(spec['yield'])}"
    elif kind == "fetch":
        text = (f"FETCH PROP ON {spec['tag']} {', '.join(lit_text(v) for v in spec['vids'])} "
                f"YIELD {_yield_text(spec['yield'])}")
    elif kind == "lookup":
        text = f"LOOKUP ON {spec['tag']}"
        if spec["where"] is not None:
            text += f" WHERE {cond_text(spec['where'])}"
        text += f" YIELD {_yield_text(spec['yield'])}"
    else:
        text = f"MATCH {_pattern_text(spec)}"
        if spec["where"] is not None:
            text += f" WHERE {cond_text(spec['where'])}"
        text += f" RETURN {_yield_text(spec['return'])}"
    width = len(spec["yield"]) if kind != "match" else len(spec["return"])
    cols = [f"c{i}" for i in range(width)]
    for st in spec["pipes"]:
        if st[0] == "where":
            text += f" | WHERE $-.c{st[1]} {st[2]} {lit_text(st[3])}"
        elif st[0] == "order_all":
            keys = ", ".join(f"$-.{c}{' DESC' if d else ''}" for c, d in zip(cols, st[1]))
            text += f" | ORDER BY {keys}"
        elif st[0] == "limit":
            text += f" | LIMIT {st[1]}, {st[2]}" if st[1] else f" | LIMIT {st[2]}"
        elif st[0] == "distinct":
            text += " | YIELD DISTINCT " + ", ".join(f"$-.{c} AS {c}" for c in cols)
        elif st[0] == "group":
            _, k, agg, a = st
            arg = "*" if agg == "count" and a == k else f"$-.c{a}"
            text += f" | GROUP BY $-.c{k} YIELD $-.c{k} AS k, {agg}({arg}) AS agg"
    return text


# -- reference interpreter -----------------------------------------------------------

class Reference:
    def __init__(self, doc: dict):
        self.nodes = {n["vid"]: n for n in doc["nodes"]}
        self.edges = doc["edges"]

    # operand evaluation
    def _tagged(self, vid, tag, attr):
        node = self.nodes[vid]
        return node["attrs"].get(attr) if node["tag"] == tag else None

    def go_value(self, op, prev, target, edge):
        kind = op[0]
        if kind == "dst":
            return self._tagged(target, op[1], op[2])
        if kind == "src":
            return self._tagged(prev, op[1], op[2])
        if kind == "edge":
            return edge["attrs"].get(op[2]) if edge["etype"] == op[1] else None
        return {"dstid": edge["dst"], "srcid": edge["src"], "type": edge["etype"], "rank": edge["rank"]}[kind]

    def cond(self, c, value_of):
        if c is None:
            return True
        if c[0] == "cmp":
            return compare(value_of(c[1]), c[2], c[3])
        if c[0] == "not":
            return k_not(self.cond(c[1], value_of))
        a, b = self.cond(c[1], value_of), self.cond(c[2], value_of)
        return k_and(a, b) if c[0] == "and" else k_or(a, b)

    def hops(self, vid, etypes, direction):
        for e in self.edges:
            if etypes is not None and e["etype"] not in etypes:
                continue
            if direction in ("outgoing", "bidirect") and e["src"] == vid:
                yield e["dst"], e, False
            if direction in ("reversed", "bidirect") and e["dst"] == vid:
                if direction == "bidirect" and e["src"] == e["dst"]:
                    continue
                yield e["src"], e, True

    def run_go(self, spec):
        etypes = None if spec["over"] == ["*"] else set(spec["over"])
        starts = []
        for v in spec["from"]:
            if v in self.nodes and v not in starts:
                starts.append(v)
        best = {}

        def walk(vid, prev, path, depth):
            if depth == spec["steps"]:
                edge = path[-1][0]
                if self.cond(spec["where"], lambda op: self.go_value(op, prev, vid, edge)) is not True:
                    return
                key = tuple(((e["src"], e["dst"], e["etype"], e["rank"]), rev) for e, rev in path)
                if vid not in best or key < best[vid][0]:
                    best[vid] = (key, prev, edge)
                return
            for nxt, e, rev in self.hops(vid, etypes, spec["direction"]):
                walk(nxt, vid, path + [(e, rev)], depth + 1)

        for s in starts:
            walk(s, s, [], 0)
        rows = []
        for vid in sorted(best):
            _, prev, edge = best[vid]
            rows.append(tuple(self.go_value(op, prev, vid, edge) for op in spec["yield"]))
        if spec["distinct"]:
            rows = _distinct(rows)
        return rows

    def run_fetch(self, spec):
        seen, rows = [], []
        for v in spec["vids"]:
            if v in seen:
                continue
            seen.append(v)
            node = self.nodes.get(v)
            if node is None or node["tag"] != spec["tag"]:
                continue
            rows.append(tuple(v if op[0] == "id" else node["attrs"].get(op[2]) for op in spec["yield"]))
        return rows

    def run_lookup(self, spec):
        rows = []
        for vid in sorted(self.nodes):
            node = self.nodes[vid]
            if node["tag"] != spec["tag"]:
                continue
            value = lambda op, node=node: node["attrs"].get(op[2])
            if self.cond(spec["where"], value) is not True:
                continue
            rows.append(tuple(vid if op[0] == "id" else value(op) for op in spec["yield"]))
        return rows

    def run_match(self, spec):
        nodes_p, edges_p = spec["nodes"], spec["edges"]
        results = []

        def node_ok(pat, vid):
            return pat["label"] is None or self.nodes[vid]["tag"] == pat["label"]

        def steps(epat, vid):
            for e in self.edges:
                if epat["types"] and e["etype"] not in epat["types"]:
                    continue
                if epat["dir"] in ("right", "both") and e["src"] == vid:
                    yield e, e["dst"]
                if epat["dir"] in ("left", "both") and e["dst"] == vid:
                    if epat["dir"] == "both" and e["src"] == e["dst"]:
                        continue
                    yield e, e["src"]

        def walk(i, vid, bind_v, bind_e):
            if i == len(edges_p):
                results.append((dict(bind_v), dict(bind_e)))
                return
            for e, nxt in steps(edges_p[i], vid):
                if any(e is used for used in bind_e.values()):
                    continue
                if not node_ok(nodes_p[i + 1], nxt):
                    continue
                bind_v[nodes_p[i + 1]["var"]] = nxt
                bind_e[edges_p[i]["var"]] = e
                walk(i + 1, nxt, bind_v, bind_e)
                del bind_v[nodes_p[i + 1]["var"]]
                del bind_e[edges_p[i]["var"]]

        for vid in sorted(self.nodes):
            if node_ok(nodes_p[0], vid):
                walk(0, vid, {nodes_p[0]["var"]: vid}, {})

        def value(op, bv, be):
            if op[0] == "vid":
                return bv[op[1]]
            if op[0] == "var":
                return self._tagged(bv[op[1]], op[2], op[3])
            return be[op[1]]["attrs"].get(op[2])

        rows = []
        for bv, be in results:
            if self.cond(spec["where"], lambda op: value(op, bv, be)) is not True:
                continue
            rows.append(tuple(value(op, bv, be) for op in spec["return"]))
        return rows

    def run(self, spec):
        rows = getattr(self, "run_" + spec["kind"])(spec)
        for st in spec["pipes"]:
            if st[0] == "where":
                rows = [r for r in rows if compare(r[st[1]], st[2], st[3]) is True]
            elif st[0] == "order_all":
                for i in reversed(range(len(st[1]))):
                    rows = sorted(rows, key=lambda r: order_key(r[i]), reverse=st[1][i])
            elif st[0] == "limit":
                rows = rows[st[1]:st[1] + st[2]]
            elif st[0] == "distinct":
                rows = _distinct(rows)
            elif st[0] == "group":
                rows = _group(rows, *st[1:])
        return rows


def _ident(v):
    return (type(v) is bool, v)


def _distinct(rows):
    seen, out = set(), []
    for r in rows:
        k = tuple(_ident(v) for v in r)
        if k not in seen:
            seen.add(k)
            out.append(r)
    return out


def _group(rows, k, agg, a):
    groups, order = {}, []
    for r in rows:
        key = _ident(r[k])
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r)
    out = []
    for key in order:
        members = groups[key]
        if agg == "count" and a == k:
            value = len(members)
        else:
            vals = [m[a] for m in members if m[a] is not None]
            if agg == "count":
                value = len(vals)
            elif agg == "sum":
                value = sum(vals)
            elif not vals:
                value = None
            else:
                value = (min if agg == "min" else max)(vals, key=order_key)
        out.append((members[0][k], value))
    return out


def multiset(rows):
    return sorted((tuple(_ident(v) for v in r) for r in rows), key=repr)

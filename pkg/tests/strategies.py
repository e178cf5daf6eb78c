"""Hypothesis strategies and independent oracles shared by the property tests."""

from hypothesis import strategies as st

from lacuna.graph import GLOBAL_ID, CallGraph, FunctionId, FunctionNode

ANALYZERS = ("static", "acg", "native-calls", "dynamic", "ext1", "ext2", "ext3")


def function_ids(n: int) -> list[FunctionId]:
    # disjoint spans across two files
    return [FunctionId(f"f{i % 2}.js", 10 * i, 10 * i + 5) for i in range(n)]


@st.composite
def node_sets(draw, max_nodes=15):
    n = draw(st.integers(min_value=0, max_value=max_nodes - 1))
    return [FunctionNode(fid, "declaration", f"fn{i}") for i, fid in enumerate(function_ids(n))]


@st.composite
def edge_pairs(draw, ids, max_edges=40):
    ids = list(ids)
    if not ids:
        return []
    pair = st.tuples(st.sampled_from(ids), st.sampled_from(ids))
    return draw(st.lists(pair, max_size=max_edges))


@st.composite
def ensembles(draw, max_nodes=15, max_analyzers=4):
    """A base graph G0 plus a list of (analyzer name, result graph) over its nodes."""
    nodes = draw(node_sets(max_nodes))
    g0 = CallGraph(nodes)
    ids = [GLOBAL_ID] + [n.id for n in nodes]
    names = draw(st.lists(st.sampled_from(ANALYZERS), min_size=0, max_size=max_analyzers, unique=True))
    results = []
    for name in names:
        pairs = draw(edge_pairs(ids))
        results.append((name, g0.without_edges().with_edges(pairs, name)))
    return g0, results


@st.composite
def graphs(draw, max_nodes=15):
    g0, results = draw(ensembles(max_nodes))
    g = g0
    for name, r in results:
        g = g.with_edges(r.edge_pairs, name)
    return g


def fixed_point_reachable(graph: CallGraph) -> set[FunctionId]:
    """Reachability by naive iteration to a fixed point over the edge list."""
    reached = {GLOBAL_ID}
    pairs = list(graph.edge_pairs)
    while True:
        grown = reached | {b for a, b in pairs if a in reached}
        if grown == reached:
            return reached
        reached = grown


def naive_union(results):
    """Edge -> set of analyzer names, computed directly from the inputs."""
    table = {}
    for name, g in results:
        for pair in g.edge_pairs:
            table.setdefault(pair, set()).add(name)
    return table


# -- JavaScript function spans from an independent parser -------------------------------

def esprima_function_spans(code: bytes) -> set[tuple[int, int]]:
    """Byte spans of every function construct according to esprima.

    Methods are reported with the span of their definition (key included), the
    way the tool records them.
    """
    import esprima

    text = code.decode("utf-8")
    spans = set()

    def visit(node, parent):
        if isinstance(node, list):
            for item in node:
                visit(item, parent)
            return
        if not isinstance(getattr(node, "type", None), str):
            return
        if node.type in ("FunctionDeclaration", "FunctionExpression", "ArrowFunctionExpression"):
            owner = parent if parent is not None and (
                parent.type == "MethodDefinition"
                or (parent.type == "Property" and (parent.method or parent.kind in ("get", "set")))
            ) else node
            spans.add(tuple(owner.range))
        for key in node.keys():
            if key in ("type", "range", "loc"):
                continue
            child = getattr(node, key)
            if isinstance(child, list) or isinstance(getattr(child, "type", None), str):
                visit(child, node)

    visit(esprima.parseScript(text, {"range": True}), None)

    def to_bytes(i):
        return len(text[:i].encode("utf-8"))

    return {(to_bytes(a), to_bytes(b)) for a, b in spans}


# -- random JavaScript programs with a known number of functions ------------------------

_TEMPLATES = [
    # (template, functions contributed besides those in {body})
    ("function {n}(p) {{ {body} }}", 1),
    ("var {n} = function (p) {{ {body} }};", 1),
    ("var {n} = function named_{n}(p) {{ {body} }};", 1),
    ("var {n} = (p, q) => {{ {body} }};", 1),
    ("var {n} = p => p + 1;", 1),
    ("var {n} = {{ m_{n}(p) {{ {body} }}, k_{n}: function () {{ return 0; }} }};", 2),
    ("var {n} = {{ get g_{n}() {{ {body} return 1; }} }};", 1),
    ("class {n} {{ constructor() {{ {body} }} static s_{n}() {{ return 2; }} }}", 2),
    ("async function {n}() {{ {body} }}", 1),
    ("function* {n}() {{ {body} yield 1; }}", 1),
    ("setTimeout(function () {{ {body} }}, 0);", 1),
    ("[1, 2].map(async (x) => {{ {body} return x; }});", 1),
    ("var {n} = 'café ☃'; /* üñî */", 0),
    ("if (typeof window === 'object') {{ {body} }}", 0),
]


@st.composite
def js_programs(draw, max_depth=3, max_width=3):
    """(source bytes, number of function constructs) built from nested templates."""
    counter = [0]

    def block(depth):
        parts, total = [], 0
        for _ in range(draw(st.integers(0, max_width if depth > 0 else 0))):
            template, own = draw(st.sampled_from(_TEMPLATES))
            counter[0] += 1
            name = f"f{counter[0]}"
            body, inner = block(depth - 1) if "{body}" in template else ("", 0)
            parts.append(template.format(n=name, body=body or "void 0;"))
            total += own + inner
        return "\n".join(parts), total

    code, count = block(max_depth)
    return code.encode("utf-8"), count

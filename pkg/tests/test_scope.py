from lacuna import jsast
from lacuna.graph import GLOBAL_ID
from lacuna.scope import ScopeAnalysis


def analyse(*codes: str) -> tuple[ScopeAnalysis, dict]:
    sources = [(f"s{i}.js", jsast.parse(code.encode()).root_node) for i, code in enumerate(codes)]
    sa = ScopeAnalysis.of_sources(sources)
    return sa, dict(sources)


def refs(sa: ScopeAnalysis, name: str):
    return [(file, b) for file, node, b in sa.references() if jsast.text(node) == name]


def test_top_level_declarations_share_one_global_scope():
    sa, _ = analyse("function f() {}", "f();")
    (file, binding), = refs(sa, "f")
    assert file == "s1.js"
    assert binding.is_global and binding.kind == "function"
    assert len(binding.functions) == 1


def test_inner_declaration_shadows_outer():
    sa, _ = analyse("function f() {} function g() { function f() {} f(); }")
    (_, binding), = refs(sa, "f")
    assert not binding.is_global
    assert binding.scope.owner != GLOBAL_ID


def test_parameters_shadow_globals():
    sa, _ = analyse("function f() {} function g(f) { f(); }")
    (_, binding), = refs(sa, "f")
    assert binding.kind == "param" and not binding.functions


def test_block_scoped_let_and_hoisted_var():
    sa, _ = analyse("{ let h = function () {}; } h(); if (1) { var k = function () {}; } k();")
    by_name = {jsast.text(n): b for _, n, b in sa.references()}
    assert by_name["h"] is None  # the let binding is not visible outside its block
    assert by_name["k"] is not None and by_name["k"].is_global


def test_hoisting_is_flow_insensitive():
    sa, _ = analyse("f(); function f() {}")
    (_, binding), = refs(sa, "f")
    assert binding is not None and binding.functions


def test_implicit_global_resolves_to_none():
    sa, _ = analyse("undeclared();")
    (_, binding), = refs(sa, "undeclared")
    assert binding is None


def test_assignment_adds_function_values():
    sa, _ = analyse("var f; f = function () {}; f = () => 1; f();")
    bindings = {id(b): b for _, b in refs(sa, "f")}
    assert len(refs(sa, "f")) == 3  # two assignment targets and the call
    (binding,) = bindings.values()
    assert len(binding.functions) == 2


def test_class_binds_its_constructor():
    sa, _ = analyse("class K { constructor() {} m() {} } new K();")
    (_, binding), = refs(sa, "K")
    (ctor,) = binding.functions
    assert ctor in sa.functions


def test_named_function_expression_name_is_local():
    sa, _ = analyse("var v = function inner() { inner(); }; inner();")
    inner_refs = refs(sa, "inner")
    assert len(inner_refs) == 2
    inside, outside = sorted(inner_refs, key=lambda r: r[1] is None)
    assert inside[1] is not None and inside[1].functions
    assert outside[1] is None


def test_call_sites_know_their_caller():
    sa, _ = analyse("function f() { g(); } g(); var a = () => g();")
    callers = sorted(str(c.caller) for c in sa.calls)
    assert callers.count(str(GLOBAL_ID)) == 1
    assert len(callers) == 3
    assert all(c.caller == GLOBAL_ID or c.caller in sa.functions for c in sa.calls)


def test_catch_and_destructuring_bindings():
    sa, _ = analyse("try {} catch (e) { e(); } var { p, q: [r] } = {}; p(); r();")
    by_name = {jsast.text(n): b for _, n, b in sa.references()}
    assert by_name["e"].scope.kind == "catch"
    assert by_name["p"].is_global and by_name["r"].is_global

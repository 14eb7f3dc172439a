import pytest

from kyaml.abi import AbiArityMismatch, UnsupportedType, abi_calldata, parse_signature
from kyaml.kterm import INT, Buf, BufConcat, IntLit, SymVar, eval_concrete, parse_term, print_term
from kyaml.kterm.standins import selector


def test_no_args_is_selector_only():
    t = abi_calldata("execute()", [])
    assert t == Buf(IntLit(4), IntLit(selector("execute()")))
    assert len(eval_concrete(t, {})) == 4


def test_static_array_is_flattened():
    a = [SymVar(f"A{i}", INT) for i in range(3)]
    t = abi_calldata("execute(uint256[3])", [tuple(a)])
    assert isinstance(t, BufConcat)
    assert t.segments[1:] == tuple(Buf(IntLit(32), x) for x in a)
    assert len(eval_concrete(t, {"A0": 1, "A1": 2, "A2": 3})) == 4 + 96


def test_empty_trailing_bytes():
    t = abi_calldata("execute(bytes)", [Buf(IntLit(0), IntLit(0))])
    data = eval_concrete(t, {})
    assert data[4:] == (32).to_bytes(32, "big") + (0).to_bytes(32, "big")


def test_symbolic_trailing_bytes():
    t = abi_calldata("execute(bytes)", [parse_term("#buf(DATA_LEN, DATA)")])
    assert print_term(t).endswith("#buf(32, 32) ++ #buf(32, DATA_LEN) ++ #buf(DATA_LEN, DATA)")


def test_abicalldata2_term_matches_builder():
    t = parse_term('#abiCallData2("execute(uint256)", (A0,))')
    env = {"A0": 42}
    assert eval_concrete(t, env) == eval_concrete(abi_calldata("execute(uint256)", [SymVar("A0", INT)]), env)


def test_errors():
    with pytest.raises(UnsupportedType):
        parse_signature("execute(string)")
    with pytest.raises(UnsupportedType):
        parse_signature("execute(bytes,uint256)")
    with pytest.raises(AbiArityMismatch):
        abi_calldata("execute(uint256,uint256)", [1])


def test_signature_word_count():
    sig = parse_signature("execute(address,uint256[2][3],bool,bytes)")
    assert sig.static_words == 1 + 6 + 1
    assert sig.trailing_bytes


@pytest.mark.parametrize("types, values", [
    (["uint256"], [42]),
    (["address", "uint256", "uint256", "uint256"], ["0x000000000000000000000000000000000000bEEF", 10**18, 7, 1]),
    (["uint256[3]"], [[1, 2, 3]]),
    (["uint8", "bool", "bytes32"], [255, True, b"\x11" * 32]),
    (["uint256", "bytes"], [5, b"hello world, this is longer than one word"]),
    (["bytes"], [b""]),
])
def test_matches_reference_encoder(types, values):
    eth_abi = pytest.importorskip("eth_abi")
    reference = eth_abi.encode(types, values)
    args = []
    for ty, v in zip(types, values):
        if ty == "address":
            args.append(int(v, 16))
        elif ty == "bytes32":
            args.append(int.from_bytes(v, "big"))
        elif ty == "bool":
            args.append(int(v))
        else:
            args.append(v)
    sig = f"f({','.join(types)})"
    ours = eval_concrete(abi_calldata(sig, args), {})
    assert ours[:4] == selector(sig).to_bytes(4, "big")
    body = ours[4:]
    # the reference pads the dynamic tail to a word boundary; ours does not
    assert reference[:len(body)] == body
    assert reference[len(body):] == bytes(len(reference) - len(body))

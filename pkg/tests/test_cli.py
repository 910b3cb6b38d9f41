import io
import os
from contextlib import redirect_stdout

import pytest

from ppdef.certificate import CertificateError, check_text
from ppdef.cli import EXIT_BASE, EXIT_CHECK_FAILED, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_PARSE, main
from ppdef.problemfile import FileFormatError, parse_problem

SMALL = """\
base builtin dense_linear_order
relation Lt/2 := x1<x2
relation Le/2 := x1<x2 | x1=x2   # non-strict order
relation Chain/3 := x1<x2 & x2<x3
query pp Le from Lt
query pp Lt from Chain
query identity from Lt
option oracle_max_atoms 3
option oracle_max_vars 1
"""


def run(tmp_path, text, *extra):
    path = tmp_path / "problem.txt"
    path.write_text(text)
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(["--file", str(path), *extra])
    return code, buf.getvalue()


def test_output_and_certificates(tmp_path):
    certs = tmp_path / "certs"
    code, out = run(tmp_path, SMALL, "--emit-certificates", str(certs))
    assert code == EXIT_OK
    assert out.splitlines() == [
        "QUERY 1: pp Le from {Lt} => NOT-DEFINABLE",
        "QUERY 2: pp Lt from {Chain} => DEFINABLE",
        "QUERY 3: identity from {Lt} => UNSATISFIED",
    ]
    assert sorted(os.listdir(certs)) == ["query1.cert", "query2.pp"]
    assert (certs / "query2.pp").read_text().startswith("exists y1.")
    buf = io.StringIO()
    with redirect_stdout(buf):
        assert main(["--check-certificate", str(certs / "query1.cert")]) == EXIT_OK
    assert buf.getvalue().rstrip().endswith("certificate: VERIFIED")


def test_tampered_certificate(tmp_path):
    certs = tmp_path / "certs"
    run(tmp_path, SMALL, "--emit-certificates", str(certs))
    text = (certs / "query1.cert").read_text()
    assert check_text(text).ok
    # problem text altered: digest mismatch
    assert not check_text(text.replace("x1<x2 | x1=x2", "x1<x2 | x2<x1")).ok
    # a sigma line dropped: kernel no longer total
    lines = text.splitlines()
    i = lines.index("sigma:") + 1
    assert not check_text("\n".join(lines[:i] + lines[i + 1:]) + "\n").ok
    # a sigma value swapped for another legend type
    line = lines[i]
    lhs, rhs = line.split(" -> ")
    other = next(f"T{j}" for j in range(40) if f"T{j}" != rhs and f"  T{j} arity=2" in text)
    bad = text.replace(line + "\n", f"{lhs} -> {other}\n", 1)
    assert not check_text(bad).ok
    bad_path = tmp_path / "bad.cert"
    bad_path.write_text(bad)
    with redirect_stdout(io.StringIO()):
        assert main(["--check-certificate", str(bad_path)]) == EXIT_CHECK_FAILED
    with pytest.raises(CertificateError):
        check_text("not a certificate\n")


@pytest.mark.parametrize("text", [
    "base builtin nowhere\nrelation A/1 := x1=x1\nquery pp A from A\n",
    "base builtin dense_linear_order\nrelation A/2 := x1<x3\nquery pp A from A\n",
    "base builtin dense_linear_order\nrelation A/2 := x1<x2\nquery pp A from B\n",
    "base builtin dense_linear_order\nrelation A/2 := x1<x2\nquery zz A from A\n",
    "base builtin dense_linear_order\nrelation A/2 := x1<x2\n",
    "base builtin dense_linear_order\nrelation A/2 := x1<x2\nquery pp A from A\noption speed 3\n",
    "relation A/2 := x1<x2\nquery pp A from A\n",
])
def test_parse_errors(tmp_path, text):
    assert run(tmp_path, text)[0] == EXIT_PARSE
    with pytest.raises(FileFormatError):
        parse_problem(text)


INLINE = """\
base begin
  signature lt/2 order
  bound on 1: lt(0,0)
  bound on 2:
  bound on 2: lt(0,1) lt(1,0)
  bound on 3: lt(0,1) lt(1,2) lt(2,0)
base end
relation L/2 := lt(x1,x2)
relation E/2 := x1=x2 | x1<x2
query pp E from L
query ex E from L
"""


def test_inline_base(tmp_path):
    code, out = run(tmp_path, INLINE)
    assert code == EXIT_OK
    assert out.splitlines() == ["QUERY 1: pp E from {L} => NOT-DEFINABLE",
                                "QUERY 2: ex E from {L} => DEFINABLE"]


def test_invalid_inline_base(tmp_path):
    # without the bound forbidding incomparable pairs the order is not total
    text = INLINE.replace("  bound on 2:\n", "")
    assert run(tmp_path, text)[0] == EXIT_BASE
    bad_sig = INLINE.replace("signature lt/2 order", "signature lt/2 order\n  signature lt/3")
    assert run(tmp_path, bad_sig)[0] == EXIT_BASE


def test_inconclusive_exit(tmp_path):
    text = SMALL.split("query")[0] + "query pp Le from Lt\noption node_budget 0\n"
    code, out = run(tmp_path, text)
    assert code == EXIT_INCONCLUSIVE
    assert out.strip().endswith("=> INCONCLUSIVE")


def test_list_builtins(capsys):
    assert main(["--list-builtins"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "dense_linear_order" in out and "ordered_random_graph" in out


def test_no_arguments(capsys):
    assert main([]) == EXIT_PARSE


def test_parallel_matches_serial(tmp_path):
    text = SMALL.replace("query identity from Lt\n", "")
    assert run(tmp_path, text)[1] == run(tmp_path, text, "--parallel", "2")[1]

import csv
import io

import pytest
from click.testing import CliRunner

from vptstream import machines, parse_vpt, serialize_vpt
from vptstream.cli import main

runner = CliRunner()


def invoke(args, stdin=None):
    return runner.invoke(main, args, input=stdin)


# ---------------------------------------------------------------------------
# validate / loading

def test_validate_builtin_ok():
    res = invoke(["validate", "builtin:fig4"])
    assert res.exit_code == 0
    assert res.output.strip() == "ok"


def test_unknown_builtin_is_usage_error():
    res = invoke(["validate", "builtin:nope"])
    assert res.exit_code == 2
    assert "fig2_t1" in res.stderr  # the message lists what exists


def test_missing_file_is_usage_error(tmp_path):
    res = invoke(["validate", str(tmp_path / "absent.vpt")])
    assert res.exit_code == 2


def test_parse_error_reports_line(tmp_path):
    p = tmp_path / "bad.vpt"
    p.write_text("calls: c\njunk here\n")
    res = invoke(["validate", str(p)])
    assert res.exit_code == 2
    assert f"{p}:2:" in res.stderr


def test_validation_errors_are_listed(tmp_path):
    p = tmp_path / "bad.vpt"
    p.write_text("calls: c\nreturns: r\nstates: s0\ninitial: sX\nfinal: s0\n"
                 "stack: g\ntrans s0 c - push g s0\n")
    res = invoke(["validate", str(p)])
    assert res.exit_code == 2
    assert "sX" in res.stderr


# ---------------------------------------------------------------------------
# eval

def test_eval_accept():
    res = invoke(["eval", "builtin:fig3_plain"], stdin="c c r r\n")
    assert res.exit_code == 0
    assert res.output == "a a c c\n"


def test_eval_empty_output_accept():
    res = invoke(["eval", "builtin:fig2_t1"], stdin="\n")
    # empty input is not in the domain of fig2_t1 (no final run at height 0)
    assert res.exit_code == 1


def test_eval_reject_names_position():
    res = invoke(["eval", "builtin:fig3_plain"], stdin="c c r r r\n")
    assert res.exit_code == 1
    assert "reject at position 5" in res.stderr
    assert "'r'" in res.stderr


def test_eval_partial_output_before_reject():
    res = invoke(["eval", "builtin:fig3_plain"], stdin="c c r rp c\n")
    assert res.exit_code == 1
    assert res.output.startswith("b b c c")


def test_eval_telemetry_header(tmp_path):
    telem = tmp_path / "t.csv"
    res = invoke(["eval", "builtin:fig4", "--telemetry", str(telem)],
                 stdin="c c r r\n")
    assert res.exit_code == 0
    rows = list(csv.reader(io.StringIO(telem.read_text())))
    assert rows[0] == ["pos", "symbol", "hc", "nodes", "edges",
                       "label_tokens", "out_neq", "emitted"]
    assert len(rows) == 5
    assert rows[1][:3] == ["1", "c", "1"]


def test_eval_refuses_nonfunctional_machine(tmp_path):
    p = tmp_path / "nf.vpt"
    p.write_text("internals: a\nstates: s0 s1\ninitial: s0\nfinal: s1\n"
                 "trans s0 a x int s1\ntrans s0 a y int s1\n")
    res = invoke(["eval", str(p)], stdin="a\n")
    assert res.exit_code == 1
    assert "functional" in res.stderr


def test_eval_chars_mode(tmp_path):
    res = invoke(["eval", "builtin:fig3_plain", "--chars"], stdin="ccrr\n")
    # single-character symbols line up with --chars tokenization
    assert res.exit_code == 0
    assert res.output == "a a c c\n"


def test_eval_xml_mode(tmp_path):
    p = tmp_path / "copy.vpt"
    p.write_text("""
calls: item
returns: /item
internals: x
states: s0 s1
initial: s0
final: s0
stack: g
trans s0 item [ push g s1
trans s1 x x int s1
trans s1 /item ] pop g s0
""")
    res = invoke(["eval", str(p), "--xml"], stdin="<item>xx</item>")
    assert res.exit_code == 0
    assert res.output == "[ x x ]\n"


def test_eval_chars_and_xml_conflict():
    res = invoke(["eval", "builtin:fig4", "--chars", "--xml"], stdin="")
    assert res.exit_code == 2


# ---------------------------------------------------------------------------
# check

def test_check_single_property_clean():
    res = invoke(["check", "builtin:fig4", "--property", "htp"])
    assert res.exit_code == 0
    assert res.output.startswith("htp: NoWitnessUpTo")


def test_check_violation_sets_exit_code():
    res = invoke(["check", "builtin:fig3_full", "--property", "htp"])
    assert res.exit_code == 1
    assert "htp: Violated" in res.output
    assert "u1:" in res.output and "u2:" in res.output


def test_check_all_reports_three_lines():
    res = invoke(["check", "builtin:fig4"])
    assert res.exit_code == 1  # bm is violated even though htp/mtp are clean
    for marker in ("bm: Violated", "htp: NoWitnessUpTo", "mtp: NoWitnessUpTo"):
        assert marker in res.output
    assert "searched:" in res.output


def test_check_bounds_are_printed():
    res = invoke(["check", "builtin:fig4", "--property", "mtp",
                  "--max-len", "10", "--max-height", "3"])
    assert "max_len=10" in res.output
    assert "max_height=3" in res.output


def test_check_nonfunctional_machine_fails(tmp_path):
    p = tmp_path / "nf.vpt"
    p.write_text("internals: a\nstates: s0 s1\ninitial: s0\nfinal: s1\n"
                 "trans s0 a x int s1\ntrans s0 a y int s1\n")
    res = invoke(["check", str(p)])
    assert res.exit_code == 1
    assert "functional" in res.stderr


# ---------------------------------------------------------------------------
# reduce / enum / bench

def test_reduce_round_trips(tmp_path):
    out = tmp_path / "r.vpt"
    res = invoke(["reduce", "builtin:fig3_plain", str(out)])
    assert res.exit_code == 0
    reduced = parse_vpt(out.read_text())
    assert reduced.states  # parseable and nonempty
    res2 = invoke(["reduce", "builtin:fig3_plain", "-"])
    assert res2.exit_code == 0
    assert parse_vpt(res2.output) == reduced


def test_enum_lists_domain():
    res = invoke(["enum", "builtin:fig3_plain", "--max-len", "4"])
    assert res.exit_code == 0
    assert res.output.splitlines() == ["ccrr aacc", "ccrrp bbcc", "cr ac"]


def test_enum_marks_empty_output(tmp_path):
    p = tmp_path / "eraser.vpt"
    p.write_text("internals: a\nstates: s0 s1\ninitial: s0\nfinal: s1\n"
                 "trans s0 a - int s1\n")
    res = invoke(["enum", str(p), "--max-len", "2"])
    assert res.output.splitlines() == ["a -"]


def test_bench_streams_telemetry():
    res = invoke(["bench", "builtin:fig4", "--family", "cnrn", "--n-max", "5"])
    assert res.exit_code == 0
    rows = list(csv.reader(io.StringIO(res.output)))
    assert rows[0][0] == "pos"
    assert len(rows) == 11
    # out_neq climbs 1..5 on the calls, collapses on the first return
    assert [r[6] for r in rows[1:6]] == ["1", "2", "3", "4", "5"]
    assert rows[6][6] == "0"


def test_bench_custom_reads_stdin():
    res = invoke(["bench", "builtin:fig3_plain", "--family", "custom"],
                 stdin="c r\n")
    rows = [line for line in res.output.splitlines() if line]
    assert res.exit_code == 0
    assert len(rows) == 3


def test_bench_rejecting_word_exits_one():
    res = invoke(["bench", "builtin:fig3_plain", "--family", "custom"],
                 stdin="r r\n")
    assert res.exit_code == 1

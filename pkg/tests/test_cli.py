import pytest

from spidercc.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main, read_config, ConfigError


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out.splitlines(), err


def test_run_echo_with_silent_fault(capsys):
    code, lines, _ = run_cli(capsys, "run", "--protocol", "echo_cc", "--n", "4", "--f", "1", "--R", "1",
                             "--inputs", "0,0,0,1", "--adversary", "silent", "--check", "all")
    assert code == EXIT_OK
    verdicts = [x for x in lines if x.startswith("prop=")]
    assert [v.split()[0] for v in verdicts] == ["prop=termination", "prop=validity", "prop=agreement",
                                                "prop=time_bound", "prop=message_bound"]
    assert all(" result=pass " in v for v in verdicts)
    assert lines[0].startswith("t=0/1 proc=0 ev=WAKEUP send 0 ECHO 0")


def test_seed_is_deterministic(capsys):
    argv = ("run", "--protocol", "crash_cc", "--n", "5", "--f", "2", "--adversary", "random_crash", "--seed", "7")
    first = run_cli(capsys, *argv)
    second = run_cli(capsys, *argv)
    assert first == second and first[0] == EXIT_OK


def test_underresilient_needs_opt_in(capsys):
    argv = ("run", "--protocol", "echo_cc", "--n", "3", "--f", "1", "--inputs", "0,0,1")
    code, _, err = run_cli(capsys, *argv)
    assert code == EXIT_CONFIG and "--allow-underresilient" in err
    code, lines, err = run_cli(capsys, *argv, "--allow-underresilient")
    assert code in (EXIT_OK, EXIT_FAIL)
    assert "warning" in err and "note=underresilient experiment, not a regression" in lines


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("# crash scenario\nprotocol = crash_cc\nn = 5\nf = 2\nR = 2\ninputs = 0,1,0,1,1\n"
                   "check = agreement\ncheck = validity\n")
    code, lines, _ = run_cli(capsys, "run", "--config", str(cfg))
    assert code == EXIT_OK
    assert [x.split()[0] for x in lines if x.startswith("prop=")] == ["prop=agreement", "prop=validity"]
    code, lines, _ = run_cli(capsys, "run", "--config", str(cfg), "--check", "time_bound")
    assert [x for x in lines if x.startswith("prop=")] == ["prop=time_bound result=pass witness=scaled_time=2"]


@pytest.mark.parametrize("text,needle", [
    ("protocol = crash_cc\nbogus = 1\n", ":2: unknown key 'bogus'"),
    ("n = 5\nn = 6\n", ":2: n given twice"),
    ("protocol crash_cc\n", ":1: expected key=value"),
    ("\n\nn = five\n", ":3: n must be an integer"),
    ("protocol = paxos\n", ":1: unknown protocol 'paxos'"),
    ("check = everything\n", ":1: unknown check 'everything'"),
])
def test_config_errors_carry_line_numbers(tmp_path, capsys, text, needle):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    code, _, err = run_cli(capsys, "run", "--config", str(cfg))
    assert code == EXIT_CONFIG
    assert f"{cfg}{needle}" in err


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        read_config(tmp_path / "nope.cfg")


def test_bad_values(capsys):
    assert run_cli(capsys, "run", "--inputs", "0,1")[0] == EXIT_CONFIG
    assert run_cli(capsys, "run", "--inputs", "0,1,7")[0] == EXIT_CONFIG
    assert run_cli(capsys, "run", "--adversary", "byz", "--protocol", "trim_cc", "--n", "6",
                   "--param", "strategy=bogus")[0] == EXIT_CONFIG
    assert run_cli(capsys, "run", "--param", "wings=2")[0] == EXIT_CONFIG
    assert run_cli(capsys, "fuzz", "--repeat", "0")[0] == EXIT_CONFIG


def test_trace_out(tmp_path, capsys):
    out = tmp_path / "trace.txt"
    code, lines, _ = run_cli(capsys, "run", "--n", "3", "--inputs", "0,0,1", "--trace-out", str(out))
    assert code == EXIT_OK
    assert all(x.startswith("prop=") for x in lines)
    assert out.read_text().startswith("t=0/1 proc=0 ev=WAKEUP")


def test_fuzz_summary(capsys):
    code, lines, _ = run_cli(capsys, "fuzz", "--protocol", "crash_cc", "--n", "5", "--f", "2",
                             "--adversary", "random_crash", "--repeat", "40", "--schedules", "10")
    assert code == EXIT_OK
    assert lines == ["prop=fuzz result=pass witness=runs=40 failures=0",
                     "prop=binding_oracle result=pass witness=groups=4"]


def test_fuzz_with_workers_matches_serial(tmp_path, capsys, monkeypatch):
    argv = ["fuzz", "--protocol", "trim_cc", "--n", "6", "--f", "1", "--adversary", "byz", "--repeat", "12"]
    serial = tmp_path / "a.txt"
    pooled = tmp_path / "b.txt"
    assert run_cli(capsys, *argv, "--trace-out", str(serial))[0] == EXIT_OK
    monkeypatch.setenv("CC_WORKERS", "2")
    assert run_cli(capsys, *argv, "--trace-out", str(pooled))[0] == EXIT_OK
    assert serial.read_text() == pooled.read_text()
    assert serial.read_text().startswith("run=0 seed=0\n")


def test_mutation_is_caught(capsys):
    code, lines, _ = run_cli(capsys, "fuzz", "--protocol", "crash_cc", "--n", "3", "--f", "1",
                             "--adversary", "random_crash", "--repeat", "20", "--mutate", "own_input")
    assert code == EXIT_FAIL
    assert lines[0].startswith("prop=fuzz result=fail witness=runs=20 failures=")
    assert " first=seed=" in lines[0]


def test_explore(capsys):
    code, lines, _ = run_cli(capsys, "explore", "--protocol", "crash_cc", "--n", "3", "--f", "1",
                             "--inputs", "0,0,1")
    assert code == EXIT_OK
    assert lines == ["prop=binding result=pass witness=inputs=0,0,1 states=75 locked=[none:5 0:25]"]
    code, lines, _ = run_cli(capsys, "explore", "--protocol", "echo_cc", "--n", "4", "--f", "1",
                             "--inputs", "all", "--max-states", "20000")
    assert len(lines) == 8 and lines[0].startswith("prop=binding result=pass witness=inputs=0,0,0,x ")
    assert code == EXIT_FAIL and any("result=inconclusive" in x for x in lines)
    assert run_cli(capsys, "explore", "--protocol", "crash_cc", "--inputs", "random")[0] == EXIT_CONFIG
    assert run_cli(capsys, "explore", "--protocol", "crash_cc", "--inputs", "0,0,1", "--faulty", "0,1")[0] \
        == EXIT_CONFIG


def test_regress(capsys):
    code, lines, _ = run_cli(capsys, "regress")
    assert code == EXIT_OK
    assert len(lines) == 14 and all(" result=pass " in x for x in lines)
    assert "prop=regress:late_cascade_eps8 result=pass witness=-" in lines


def test_regress_detects_drift(tmp_path, capsys):
    (tmp_path / "one.cfg").write_text("protocol = crash_cc\nn = 3\nf = 1\ninputs = 0,0,0\n")
    assert run_cli(capsys, "regress", "--dir", str(tmp_path), "--update")[0] == EXIT_OK
    assert run_cli(capsys, "regress", "--dir", str(tmp_path))[0] == EXIT_OK
    golden = tmp_path / "one.expected"
    golden.write_text(golden.read_text().replace("last_decision=1", "last_decision=2"))
    code, lines, _ = run_cli(capsys, "regress", "--dir", str(tmp_path))
    assert code == EXIT_FAIL and lines[0].startswith("prop=regress:one result=fail witness=want ")


def test_late_cascade_pinned(capsys):
    code, lines, _ = run_cli(capsys, "run", "--protocol", "echo_cc", "--n", "7", "--f", "2",
                             "--adversary", "late_cascade", "--param", "epsilon=1/8", "--check", "time_bound")
    assert code == EXIT_OK
    assert lines[-1] == "prop=time_bound result=pass witness=scaled_time=39/8"

"""End-to-end module execution through the sim rank group."""

import io

import pytest

from mpiwasm.backend.sim import SimBackend, SimGroup
from mpiwasm.engine.compiler import compile_module, load_module
from mpiwasm.engine.instance import InstanceConfig
from mpiwasm.runtime import run_rank, spawn_sim_group
from mpiwasm.sandbox import map_preopens

from conftest import load_fixture


def artifact_for(name):
    return compile_module(load_module(load_fixture(name)))


def run_fixture(name, np, **config_kw):
    config = InstanceConfig(argv=[name], **config_kw)
    return spawn_sim_group(artifact_for(name), np, config, diagnostics=io.StringIO())


# each fixture exits 0 on success and with a check number on the first
# failed assertion, so the exit code pinpoints what broke
MPI_FIXTURES = [
    ("lifecycle.wat", 2),
    ("pingpong.wat", 2),
    ("nonblocking.wat", 2),
    ("collectives.wat", 4),
    ("comms.wat", 4),
    ("allocmem.wat", 1),
    ("nomalloc.wat", 1),
]


@pytest.mark.parametrize("name,np", MPI_FIXTURES)
def test_fixture_passes(name, np):
    assert run_fixture(name, np) == 0


def test_abort_propagates_code_to_group():
    assert run_fixture("abort.wat", 2) == 7


def test_trap_exits_nonzero():
    assert run_fixture("trap.wat", 1) == 1


def test_hello_stdout_and_args():
    art = artifact_for("hello.wat")
    out = io.BytesIO()
    config = InstanceConfig(argv=["hello.wasm", "x", "y"])
    code = run_rank(art, SimBackend(SimGroup(1), 0), config, stdout=out)
    assert code == 2  # argc - 1
    assert out.getvalue() == b"hello\n"


def test_fileio_roundtrip(tmp_path):
    work = tmp_path / "work"
    work.mkdir()
    (work / "input.txt").write_bytes(b"twelve bytes")
    preopens = map_preopens([(str(work), False)])
    assert run_fixture("fileio.wat", 1, preopens=preopens) == 12
    assert (work / "copy.txt").read_bytes() == b"twelve bytes"


def test_fileio_readonly_grant_blocks_copy(tmp_path):
    work = tmp_path / "work"
    work.mkdir()
    (work / "input.txt").write_bytes(b"data")
    preopens = map_preopens([(str(work), True)])
    # reading succeeds; creating copy.txt fails at the write open (check 74)
    assert run_fixture("fileio.wat", 1, preopens=preopens) == 74
    assert not (work / "copy.txt").exists()

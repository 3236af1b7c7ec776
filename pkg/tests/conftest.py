import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def mini_corpus(tmp_path_factory):
    """Small two-algorithm corpus: one realistic algorithm, one separable by construction."""
    from runcount import features, grid, synth

    out = tmp_path_factory.mktemp("mini_corpus")
    keys = grid.make_grid(algorithms=("DE", "SepA"))
    synth.generate_corpus(keys, out, per_cell=240, base_seed=7, separable={"SepA"})
    features.build_features(out / "runs.csv", out / "labels.csv", out / "features.csv")
    return out, keys

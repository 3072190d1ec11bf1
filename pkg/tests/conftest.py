import numpy as np
import pytest
import torch

from tgavsr.config import ModelConfig


def micro_config(**kw):
    base = dict(num_frames=3, scale=2, channels=2, extractor_units=1, intra_units=1,
                inter3d_units=1, inter2d_units=1, group_channels=2, fusion_channels=2)
    base.update(kw)
    return ModelConfig(**base)


def small_config(**kw):
    base = dict(num_frames=7, scale=4, channels=4, extractor_units=1, intra_units=2,
                inter3d_units=1, inter2d_units=2, group_channels=4, fusion_channels=8)
    base.update(kw)
    return ModelConfig(**base)


def randomize_bn(model, seed=0):
    """Give BN layers non-trivial running statistics, then switch to eval mode."""
    g = torch.Generator().manual_seed(seed)
    for m in model.modules():
        if isinstance(m, (torch.nn.BatchNorm2d, torch.nn.BatchNorm3d)):
            n = m.num_features
            m.running_mean.copy_(0.1 * torch.randn(n, generator=g))
            m.running_var.copy_(0.5 + torch.rand(n, generator=g))
            m.weight.data.copy_(0.5 + torch.rand(n, generator=g))
            m.bias.data.copy_(0.1 * torch.randn(n, generator=g))
    return model.eval()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def textured():
    from tgavsr.data.synthetic import texture

    return texture(128, 128, np.random.default_rng(7))


# -- acceptance report -----------------------------------------------------------------------

ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail, soft=False):
    verdict = "PASS" if ok else ("SOFT-FAIL" if soft else "FAIL")
    line = f"criterion {number:>2}: {verdict:<9} {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])

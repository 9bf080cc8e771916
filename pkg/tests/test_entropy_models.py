import pytest
import torch
from hypothesis import given, strategies as st

from gcodec.compression.entropy_models import (
    FactorizedPrior, GaussianConditional, discretized_gaussian, lower_bound, quantize, rate_bits,
)
from gcodec.compression.modes import Mode
from gcodec.errors import InvalidArgumentError


def test_eval_quantization_rounds():
    assert float(quantize(torch.tensor(1.4), Mode.EVAL)) == 1.0
    integers = torch.arange(-5.0, 6.0)
    assert torch.equal(quantize(integers, "eval"), integers)


def test_train_noise_is_open_uniform():
    generator = torch.Generator().manual_seed(0)
    samples = quantize(torch.zeros(100_000), Mode.TRAIN, generator)
    assert float(samples.min()) > -0.5 and float(samples.max()) < 0.5
    sigma = (1 / 12) ** 0.5 / (100_000 ** 0.5)
    assert abs(float(samples.mean())) < 3 * sigma


def test_invalid_mode():
    with pytest.raises(InvalidArgumentError):
        quantize(torch.zeros(1), "test")


def test_gaussian_bin_mass_at_zero():
    p = discretized_gaussian(torch.tensor(0.0), torch.tensor(1.0))
    assert float(p) == pytest.approx(0.3829, abs=1e-4)


def test_gaussian_mass_vanishes_for_wide_scales():
    p = discretized_gaussian(torch.tensor(1.0), torch.tensor(1e6))
    assert float(p) < 1e-6


@given(st.floats(min_value=0.2, max_value=20.0), st.floats(min_value=-3.0, max_value=3.0))
def test_gaussian_partition_of_unity(scale, mean):
    values = torch.arange(-400, 401, dtype=torch.float64)
    probs = discretized_gaussian(values, torch.full_like(values, scale), torch.full_like(values, mean))
    assert float(probs.sum()) == pytest.approx(1.0, abs=1e-6)


def test_likelihood_floor_and_scale_floor():
    gaussian = GaussianConditional(scale_floor=0.11, likelihood_floor=1e-9)
    y_hat = torch.tensor([[[[50.0, 0.0]]]])
    scales = torch.tensor([[[[0.5, -1.0]]]])
    lik = gaussian(y_hat, scales)
    assert float(lik[0, 0, 0, 0]) == pytest.approx(1e-9)
    assert float(lik[0, 0, 0, 1]) == pytest.approx(float(discretized_gaussian(torch.tensor(0.0), torch.tensor(0.11))))
    assert gaussian.diagnostics["nonpositive_scales"] == 1


def test_lower_bound_gradient_passes_upwards():
    x = torch.tensor([0.05, 0.5], requires_grad=True)
    (-lower_bound(x, 0.11).sum()).backward()
    assert x.grad.tolist() == [-1.0, -1.0]
    x.grad = None
    lower_bound(x, 0.11).sum().backward()
    assert x.grad.tolist() == [0.0, 1.0]


def test_prior_likelihood_floor():
    prior = FactorizedPrior(4)
    lik = prior.likelihood(torch.full((1, 4, 2, 2), 1e4))
    assert bool(torch.all(lik >= 1e-9))


def test_prior_partition():
    prior = FactorizedPrior(6)
    pmf = prior.pmf_table(-30, 30)
    assert pmf.shape == (6, 61)
    assert bool((pmf.sum(axis=1) >= 1 - 1e-4).all())


@given(st.integers(min_value=0, max_value=10_000))
def test_prior_cdf_monotone(seed):
    torch.manual_seed(seed)
    prior = FactorizedPrior(3)
    with torch.no_grad():
        for parameter in prior.parameters():
            parameter.add_(torch.randn_like(parameter))
    t = torch.linspace(-20, 20, 101).view(1, 1, 1, -1).expand(1, 3, 1, -1)
    cdf = prior.cdf(t)
    assert bool(torch.all(cdf[..., 1:] >= cdf[..., :-1]))


def test_rate_bits():
    assert float(rate_bits(torch.tensor([0.5, 0.25]))) == 3.0

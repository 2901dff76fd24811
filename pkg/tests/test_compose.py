# tests/test_compose.py
import pytest
import torch

from stare_kg.errors import DimensionMismatchError
from stare_kg.model.compose import (
    GammaKind, PhiKind, ccorr, gamma, gamma_output_dim, phi, phi_backward, phi_forward,
)
from tests.helpers import central_difference


def _t(*values):
    return torch.tensor(values, dtype=torch.float64)


def ccorr_oracle(a, b):
    d = a.shape[-1]
    return torch.stack([sum(a[i] * b[(i + k) % d] for i in range(d)) for k in range(d)])


def rotate_oracle(e, r):
    h = e.shape[-1] // 2
    z = torch.complex(e[:h], e[h:]) * torch.complex(r[:h], r[h:])
    return torch.cat([z.real, z.imag])


def test_mult():
    assert phi(_t(1, 2), _t(3, 4), PhiKind.MULT).tolist() == [3, 8]


def test_rotate_by_i():
    assert phi(_t(1, 0), _t(0, 1), PhiKind.ROTATE).tolist() == [0, 1]


def test_ccorr_example():
    assert torch.allclose(phi(_t(1, 0), _t(2, 3), PhiKind.CCORR), _t(2, 3))


@pytest.mark.parametrize("d", [2, 4, 8, 16])
def test_ccorr_matches_definition(d):
    g = torch.Generator().manual_seed(d)
    for _ in range(10):
        a = torch.randn(d, generator=g, dtype=torch.float64)
        b = torch.randn(d, generator=g, dtype=torch.float64)
        expected = ccorr_oracle(a, b)
        rel = (ccorr(a, b) - expected).abs().max() / expected.abs().max()
        assert rel <= 1e-9


@pytest.mark.parametrize("d", [2, 4, 8, 16])
def test_rotate_matches_complex_arithmetic(d):
    g = torch.Generator().manual_seed(100 + d)
    e = torch.randn(d, generator=g, dtype=torch.float64)
    r = torch.randn(d, generator=g, dtype=torch.float64)
    assert torch.allclose(phi_forward(e, r, PhiKind.ROTATE), rotate_oracle(e, r), rtol=1e-9, atol=1e-12)


def test_rotate_preserves_modulus_for_unit_relation():
    theta = torch.tensor([0.3, 1.7], dtype=torch.float64)
    r = torch.cat([torch.cos(theta), torch.sin(theta)])
    e = _t(1.5, -2.0, 0.5, 3.0)
    out = phi(e, r, PhiKind.ROTATE)
    modulus = lambda x: x[:2] ** 2 + x[2:] ** 2
    assert torch.allclose(modulus(out), modulus(e))


def test_phi_shape_errors():
    with pytest.raises(DimensionMismatchError):
        phi(_t(1, 2), _t(1, 2, 3), PhiKind.MULT)
    with pytest.raises(DimensionMismatchError):
        phi(_t(1, 2, 3), _t(1, 2, 3), PhiKind.ROTATE)


# ---------------- gamma ----------------
def test_weighted_sum_alpha_one_is_h_r():
    h_r, h_q = _t(1, -2, 3), _t(7, 8, 9)
    assert torch.equal(gamma(h_r, h_q, GammaKind.WEIGHTED_SUM, alpha=1.0), h_r)


def test_weighted_sum_example():
    out = gamma(_t(1, 1), _t(0, 2), GammaKind.WEIGHTED_SUM, alpha=0.8)
    assert torch.allclose(out, _t(0.8, 1.2))


def test_weighted_sum_is_convex():
    g = torch.Generator().manual_seed(0)
    h_r = torch.randn(16, generator=g, dtype=torch.float64)
    h_q = torch.randn(16, generator=g, dtype=torch.float64)
    out = gamma(h_r, h_q, GammaKind.WEIGHTED_SUM, alpha=0.3)
    assert (out >= torch.minimum(h_r, h_q) - 1e-12).all()
    assert (out <= torch.maximum(h_r, h_q) + 1e-12).all()


def test_mul_with_ones_is_identity():
    h_r = _t(1.5, -2, 3)
    assert torch.equal(gamma(h_r, torch.ones(3, dtype=torch.float64), GammaKind.MUL), h_r)


def test_concat_doubles_dimension():
    assert gamma(_t(1, 2), _t(3, 4), GammaKind.CONCAT).tolist() == [1, 2, 3, 4]
    assert gamma_output_dim(GammaKind.CONCAT, 8) == 16
    assert gamma_output_dim(GammaKind.MUL, 8) == 8


def test_gamma_rejects_bad_alpha():
    with pytest.raises(ValueError):
        gamma(_t(1), _t(1), GammaKind.WEIGHTED_SUM, alpha=1.5)


# ---------------- backward ----------------
def test_mult_backward():
    e, r, g = _t(1, 2), _t(3, 4), _t(0.5, -1)
    grad_e, grad_r = phi_backward(e, r, PhiKind.MULT, g)
    assert torch.equal(grad_e, g * r)
    assert torch.equal(grad_r, g * e)


@pytest.mark.parametrize("kind", list(PhiKind))
def test_backward_matches_finite_differences(kind):
    gen = torch.Generator().manual_seed(1)
    e = torch.randn(4, generator=gen, dtype=torch.float64)
    r = torch.randn(4, generator=gen, dtype=torch.float64)
    up = torch.randn(4, generator=gen, dtype=torch.float64)
    grad_e, grad_r = phi_backward(e, r, kind, up)
    num_e = central_difference(lambda x: phi_forward(x, r, kind) * up, e.clone())
    num_r = central_difference(lambda x: phi_forward(e, x, kind) * up, r.clone())
    assert torch.allclose(grad_e, num_e, rtol=1e-6, atol=1e-8)
    assert torch.allclose(grad_r, num_r, rtol=1e-6, atol=1e-8)


def test_rotate_backward_example():
    e, r, up = _t(1, 0), _t(0, 1), _t(1, 0)
    grad_e, grad_r = phi_backward(e, r, PhiKind.ROTATE, up)
    num_e = central_difference(lambda x: phi_forward(x, r, PhiKind.ROTATE) * up, e.clone())
    num_r = central_difference(lambda x: phi_forward(e, x, PhiKind.ROTATE) * up, r.clone())
    assert torch.allclose(grad_e, num_e, rtol=1e-6, atol=1e-10)
    assert torch.allclose(grad_r, num_r, rtol=1e-6, atol=1e-10)


@pytest.mark.parametrize("kind", list(PhiKind))
def test_autograd_uses_declared_backward(kind):
    gen = torch.Generator().manual_seed(2)
    e = torch.randn(3, 6, generator=gen, dtype=torch.float64, requires_grad=True)
    r = torch.randn(3, 6, generator=gen, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(lambda a, b: phi(a, b, kind), (e, r))

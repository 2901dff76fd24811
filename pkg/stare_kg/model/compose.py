# stare_kg/model/compose.py
"""Composition kernels.

phi(e, r) composes two vectors (mult, ccorr, rotate): a node with its
relation in messages, a qualifier relation with its value in h_q.
gamma(h_r, h_q) merges a relation vector with its aggregated qualifier
vector (weighted sum, concat, mul). phi runs through an
autograd.Function whose backward is `phi_backward`, so training uses the
same derivative contract the gradient checks verify.
"""
from enum import Enum
from typing import Tuple

import torch

from stare_kg.errors import DimensionMismatchError


class PhiKind(str, Enum):
    MULT = "mult"
    CCORR = "ccorr"
    ROTATE = "rotate"


class GammaKind(str, Enum):
    WEIGHTED_SUM = "weighted_sum"
    CONCAT = "concat"
    MUL = "mul"


def _check_phi(e: torch.Tensor, r: torch.Tensor, kind: PhiKind):
    if e.shape != r.shape:
        raise DimensionMismatchError(f"phi inputs differ in shape: {tuple(e.shape)} vs {tuple(r.shape)}")
    if kind is PhiKind.ROTATE and e.shape[-1] % 2:
        raise DimensionMismatchError(f"rotate needs an even dimension, got {e.shape[-1]}")


# ---------------- circular correlation / convolution ----------------
def ccorr(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """[a ⋆ b]_k = sum_i a_i * b_{(i+k) mod d}"""
    d = a.shape[-1]
    return torch.fft.irfft(torch.conj(torch.fft.rfft(a, dim=-1)) * torch.fft.rfft(b, dim=-1), n=d, dim=-1)


def cconv(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """[a * b]_j = sum_k a_{(j-k) mod d} * b_k"""
    d = a.shape[-1]
    return torch.fft.irfft(torch.fft.rfft(a, dim=-1) * torch.fft.rfft(b, dim=-1), n=d, dim=-1)


# ---------------- rotate (half/half complex packing) ----------------
def _split(x: torch.Tensor):
    h = x.shape[-1] // 2
    return x[..., :h], x[..., h:]


def rotate(e: torch.Tensor, r: torch.Tensor) -> torch.Tensor:
    a, b = _split(e)
    c, d = _split(r)
    return torch.cat([a * c - b * d, a * d + b * c], dim=-1)


def _rotate_backward(e, r, g):
    a, b = _split(e)
    c, d = _split(r)
    gr, gi = _split(g)
    grad_e = torch.cat([gr * c + gi * d, gi * c - gr * d], dim=-1)
    grad_r = torch.cat([gr * a + gi * b, gi * a - gr * b], dim=-1)
    return grad_e, grad_r


# ---------------- phi ----------------
def phi_forward(e: torch.Tensor, r: torch.Tensor, kind: PhiKind) -> torch.Tensor:
    if kind is PhiKind.MULT:
        return e * r
    if kind is PhiKind.CCORR:
        return ccorr(e, r)
    return rotate(e, r)


def phi_backward(e: torch.Tensor, r: torch.Tensor, kind, upstream: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """Gradients of phi(e, r) w.r.t. e and r for the given upstream gradient."""
    kind = PhiKind(kind)
    _check_phi(e, r, kind)
    if upstream.shape != e.shape:
        raise DimensionMismatchError(f"upstream gradient shape {tuple(upstream.shape)} != {tuple(e.shape)}")
    if kind is PhiKind.MULT:
        return upstream * r, upstream * e
    if kind is PhiKind.CCORR:
        return ccorr(upstream, r), cconv(e, upstream)
    return _rotate_backward(e, r, upstream)


class _Phi(torch.autograd.Function):

    @staticmethod
    def forward(ctx, e, r, kind):
        ctx.save_for_backward(e, r)
        ctx.kind = kind
        return phi_forward(e, r, kind)

    @staticmethod
    def backward(ctx, upstream):
        e, r = ctx.saved_tensors
        grad_e, grad_r = phi_backward(e, r, ctx.kind, upstream)
        return grad_e, grad_r, None


def phi(e: torch.Tensor, r: torch.Tensor, kind) -> torch.Tensor:
    kind = PhiKind(kind)
    _check_phi(e, r, kind)
    return _Phi.apply(e, r, kind)


# ---------------- gamma ----------------
def gamma_output_dim(kind, dim: int) -> int:
    return 2 * dim if GammaKind(kind) is GammaKind.CONCAT else dim


def gamma(h_r: torch.Tensor, h_q: torch.Tensor, kind, alpha: float = 0.8) -> torch.Tensor:
    kind = GammaKind(kind)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if h_r.shape != h_q.shape:
        raise DimensionMismatchError(f"gamma inputs differ in shape: {tuple(h_r.shape)} vs {tuple(h_q.shape)}")
    if kind is GammaKind.WEIGHTED_SUM:
        return alpha * h_r + (1.0 - alpha) * h_q
    if kind is GammaKind.CONCAT:
        return torch.cat([h_r, h_q], dim=-1)
    return h_r * h_q

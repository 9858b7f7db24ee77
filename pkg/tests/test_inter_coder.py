"""Inter-frame coder: conditional vs residual coding of x_t given x_c.

The conditional mode's defining invariants: a fresh coder is a zero-cost
passthrough of the condition, the y2 lane starts exactly at the input
frame, and the anchor target is the condition (zeros in residual mode).
"""

import pytest
import torch

from cnfv.canf_core.quantizer import QuantizerMode
from cnfv.errors import InvalidInput
from cnfv.inter_coder import InterFrameCoder
from conftest import perturb_


def _frames(generator: torch.Generator) -> tuple[torch.Tensor, torch.Tensor]:
    frame = torch.rand(1, 3, 64, 64, generator=generator)
    cond = (frame + 0.1 * torch.randn(frame.shape, generator=generator)).clamp(0, 1)
    return frame, cond


class TestInterFrameCoder:
    def test_rejects_unknown_mode(self):
        with pytest.raises(InvalidInput):
            InterFrameCoder(channels=8, mode="hybrid")

    def test_fresh_coder_decodes_to_condition(self):
        coder = InterFrameCoder(channels=8, steps=1, temporal_prior=False).eval()
        g = torch.Generator().manual_seed(0)
        frame, cond = _frames(g)
        with torch.no_grad():
            recon, result = coder.encode_frame(frame, cond, QuantizerMode.TEST_ROUND)
        assert torch.allclose(recon, cond, atol=1e-6)
        assert torch.count_nonzero(result.z_sym) == 0
        assert torch.count_nonzero(result.h_sym) == 0

    def test_y2_lane_starts_at_input_frame(self):
        coder = InterFrameCoder(channels=8, steps=2, temporal_prior=False).eval()
        g = torch.Generator().manual_seed(1)
        frame, cond = _frames(g)
        with torch.no_grad():
            _, result = coder.encode_frame(frame, cond, QuantizerMode.TEST_ROUND)
        assert torch.equal(result.y2, frame)

    def test_anchor_target_by_mode(self):
        cond = torch.rand(1, 3, 16, 16)
        conditional = InterFrameCoder(channels=8, mode="conditional", temporal_prior=False)
        residual = InterFrameCoder(channels=8, mode="residual", temporal_prior=False)
        assert torch.equal(conditional.anchor_target(cond), cond)
        assert torch.count_nonzero(residual.anchor_target(cond)) == 0

    @pytest.mark.parametrize("mode", ["conditional", "residual"])
    @pytest.mark.parametrize("temporal", [False, True])
    def test_decode_matches_encode_recon(self, mode, temporal):
        coder = InterFrameCoder(channels=8, steps=2, mode=mode, temporal_prior=temporal).eval()
        perturb_(coder, scale=0.02, seed=2)
        g = torch.Generator().manual_seed(3)
        frame, cond = _frames(g)
        with torch.no_grad():
            recon, result = coder.encode_frame(frame, cond, QuantizerMode.TEST_ROUND)
            redecoded = coder.decode_frame(result.z_sym, result.h_sym, cond)
        assert torch.equal(redecoded, recon)

    def test_residual_mode_codes_the_difference(self):
        coder = InterFrameCoder(channels=8, steps=1, mode="residual", temporal_prior=False).eval()
        perturb_(coder, scale=0.02, seed=4)
        g = torch.Generator().manual_seed(5)
        frame, cond = _frames(g)
        with torch.no_grad():
            recon, result = coder.encode_frame(frame, cond, QuantizerMode.TEST_ROUND)
            direct = coder.coder.encode(frame - cond, None, None, QuantizerMode.TEST_ROUND)
        assert torch.equal(result.z_sym, direct.z_sym)
        assert torch.equal(result.h_sym, direct.h_sym)
        assert torch.equal(recon, cond + direct.recon)

    def test_residual_temporal_prior_still_sees_condition(self):
        coder = InterFrameCoder(channels=8, steps=1, mode="residual", temporal_prior=True).eval()
        perturb_(coder, scale=0.02, seed=6)
        g = torch.Generator().manual_seed(7)
        frame, cond = _frames(g)
        with torch.no_grad():
            _, with_cond = coder.encode_frame(frame, cond, QuantizerMode.TEST_ROUND)
            direct = coder.coder.encode(frame - cond, None, cond, QuantizerMode.TEST_ROUND)
        assert torch.equal(with_cond.z_sym, direct.z_sym)
        assert torch.equal(with_cond.h_sym, direct.h_sym)

    def test_anchor_term_is_differentiable(self):
        coder = InterFrameCoder(channels=8, steps=1, temporal_prior=False)
        perturb_(coder, scale=0.02, seed=8)
        g = torch.Generator().manual_seed(9)
        frame, cond = _frames(g)
        _, result = coder.encode_frame(frame, cond, QuantizerMode.TRAIN_NOISE, generator=g)
        loss = (result.y2 - coder.anchor_target(cond)).square().mean()
        loss.backward()
        grads = [p.grad for p in coder.parameters() if p.grad is not None]
        assert grads and any(torch.count_nonzero(gr) > 0 for gr in grads)

"""Serializes one coder's quantized latents into a BitChunk and back.

Symbol order inside a chunk: all hyper symbols (channel-major, row-major)
followed by all main symbols in the same order.  Hyper symbols use the
prior's per-channel factorized tables; main symbols use the Gaussian grid
table picked by the snapped sigma, which the decoder reproduces from the
hyper symbols before reading the main part.
"""

import torch

from cnfv.canf_core.backbone import CanfCoder, CanfResult
from cnfv.canf_core.scales import grid_index
from cnfv.coder.range_coder import BitChunk, RangeDecoder, range_encode
from cnfv.coder.tables import TableSet
from cnfv.errors import DecodeIncompatible, InvalidInput


def _flatten_symbols(t: torch.Tensor) -> list[int]:
    if t.shape[0] != 1:
        raise InvalidInput(f"latent coding expects batch size 1, got {t.shape[0]}")
    return t[0].reshape(-1).round().long().tolist()


def chunk_contexts(result: CanfResult, factorized_start: int) -> tuple[list[int], list[int]]:
    """(symbols, contexts) for one coding result."""
    if result.sigma_coding is None:
        raise InvalidInput("latent coding requires a test-mode coding result")
    h = result.h_sym
    hyper_syms = _flatten_symbols(h)
    per_channel = h.shape[2] * h.shape[3]
    hyper_ctx = [
        factorized_start + c for c in range(h.shape[1]) for _ in range(per_channel)
    ]
    main_syms = _flatten_symbols(result.z_sym)
    main_ctx = grid_index(result.sigma_coding)[0].reshape(-1).tolist()
    return hyper_syms + main_syms, hyper_ctx + main_ctx


def encode_latents(result: CanfResult, factorized_start: int, table_set: TableSet) -> BitChunk:
    symbols, contexts = chunk_contexts(result, factorized_start)
    payload = range_encode(symbols, contexts, table_set)
    return BitChunk(table_set.table_id(), len(symbols), payload)


def decode_latents(
    chunk: BitChunk,
    coder: CanfCoder,
    table_set: TableSet,
    factorized_start: int,
    latent_shape: tuple[int, int, int],
    hyper_shape: tuple[int, int, int],
    temporal_input: torch.Tensor | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Entropy-decode one chunk back into (z_sym, h_sym) tensors."""
    if chunk.table_id != table_set.table_id():
        raise DecodeIncompatible(
            f"chunk table id {chunk.table_id:#x} does not match model tables "
            f"{table_set.table_id():#x}"
        )
    n_hyper = hyper_shape[0] * hyper_shape[1] * hyper_shape[2]
    n_main = latent_shape[0] * latent_shape[1] * latent_shape[2]
    if chunk.symbol_count != n_hyper + n_main:
        raise DecodeIncompatible(
            f"chunk holds {chunk.symbol_count} symbols, model expects {n_hyper + n_main}"
        )
    dec = RangeDecoder(chunk.payload)
    per_channel = hyper_shape[1] * hyper_shape[2]
    hyper_vals = [
        table_set[factorized_start + c].decode_from(dec)
        for c in range(hyper_shape[0])
        for _ in range(per_channel)
    ]
    h_sym = torch.tensor(hyper_vals, dtype=torch.float32).reshape(1, *hyper_shape)
    with torch.no_grad():
        _, sigma_coding = coder.predict_for_coding(h_sym, temporal_input)
    main_ctx = grid_index(sigma_coding)[0].reshape(-1).tolist()
    main_vals = [table_set[ctx].decode_from(dec) for ctx in main_ctx]
    z_sym = torch.tensor(main_vals, dtype=torch.float32).reshape(1, *latent_shape)
    return z_sym, h_sym

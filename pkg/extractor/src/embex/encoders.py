"""Thin deterministic wrappers around pretrained text and image encoders.

Models run in evaluation mode under no_grad, so a fixed checkpoint maps
each input to one fixed vector. Pooling takes the final layer's summary
token: "last" (the convention of long-context text encoders) or "first"
(the CLS position of BERT-style text models and ViT).
"""
from __future__ import annotations

import numpy as np

from .errors import EncoderLoadError

_BATCH = 16


def _quiet_transformers():
    from transformers.utils import logging as hf_logging

    hf_logging.set_verbosity_error()
    hf_logging.disable_progress_bar()


class TextEncoder:
    def __init__(self, name_or_path: str, pooling: str = "last"):
        if pooling not in ("last", "first"):
            raise ValueError(f"unknown pooling {pooling!r}")
        _quiet_transformers()
        from transformers import AutoModel, AutoTokenizer

        try:
            self.tokenizer = AutoTokenizer.from_pretrained(name_or_path)
            self.model = AutoModel.from_pretrained(name_or_path)
        except Exception as exc:
            raise EncoderLoadError(
                f"cannot load text encoder {name_or_path!r}: {exc}"
            ) from exc
        self.model.eval()
        self.pooling = pooling
        self.dim = int(self.model.config.hidden_size)

    def encode(self, texts: list[str]) -> np.ndarray:
        import torch

        rows = []
        for lo in range(0, len(texts), _BATCH):
            batch = texts[lo : lo + _BATCH]
            enc = self.tokenizer(
                batch, padding=True, truncation=True, return_tensors="pt"
            )
            with torch.no_grad():
                hidden = self.model(**enc).last_hidden_state
            mask = enc["attention_mask"]
            if self.pooling == "last":
                idx = mask.sum(dim=1) - 1  # final non-padding position
                pooled = hidden[torch.arange(hidden.shape[0]), idx]
            else:
                pooled = hidden[:, 0]
            rows.append(pooled.to(torch.float32).cpu().numpy())
        if not rows:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.concatenate(rows, axis=0)


class ImageEncoder:
    def __init__(self, name_or_path: str, pooling: str = "first"):
        if pooling not in ("last", "first"):
            raise ValueError(f"unknown pooling {pooling!r}")
        _quiet_transformers()
        from transformers import AutoImageProcessor, AutoModel

        try:
            self.processor = AutoImageProcessor.from_pretrained(name_or_path)
            self.model = AutoModel.from_pretrained(name_or_path)
        except Exception as exc:
            raise EncoderLoadError(
                f"cannot load image encoder {name_or_path!r}: {exc}"
            ) from exc
        self.model.eval()
        self.pooling = pooling
        self.dim = int(self.model.config.hidden_size)

    def encode_paths(self, paths) -> np.ndarray:
        from PIL import Image

        images = []
        for p in paths:
            with Image.open(p) as img:
                images.append(img.convert("RGB"))
        return self.encode(images)

    def encode(self, images: list) -> np.ndarray:
        import torch

        rows = []
        for lo in range(0, len(images), _BATCH):
            batch = images[lo : lo + _BATCH]
            px = self.processor(images=batch, return_tensors="pt")
            with torch.no_grad():
                hidden = self.model(**px).last_hidden_state
            pooled = hidden[:, -1] if self.pooling == "last" else hidden[:, 0]
            rows.append(pooled.to(torch.float32).cpu().numpy())
        if not rows:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.concatenate(rows, axis=0)

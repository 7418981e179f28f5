from .losses import LossBreakdown, loss_dsl, loss_sig, triplet_from_hidden, triplet_hinge
from .model import (
    TextEncoding,
    TranslatorModel,
    TranslatorOutput,
    attended_instruction,
    encode,
    generate_tokens,
    soft_attention,
    split_mask,
    translate,
)
from .pretrain import (
    PretrainResult,
    candidate_features,
    evaluate_translator,
    holdout_split,
    pretrain_step,
    pretrain_translator,
    record_loss,
    translate_record,
)

__all__ = [
    "LossBreakdown",
    "PretrainResult",
    "TextEncoding",
    "TranslatorModel",
    "TranslatorOutput",
    "attended_instruction",
    "candidate_features",
    "encode",
    "evaluate_translator",
    "generate_tokens",
    "holdout_split",
    "loss_dsl",
    "loss_sig",
    "pretrain_step",
    "pretrain_translator",
    "record_loss",
    "soft_attention",
    "split_mask",
    "translate",
    "translate_record",
    "triplet_from_hidden",
    "triplet_hinge",
]

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..models.instruction import STOP_TARGET, SyfisRecord
from ..models.world import EnvironmentGraph
from ..numcore import ops
from ..numcore.layers import pairwise_distance
from ..numcore.optim import AdamW
from ..numcore.tensor import Tensor, no_grad
from ..sim.simulator import simulator_for
from ..syfis.builder import split_trajectory_ids
from ..syfis.tokenizer import Tokenizer
from ..utils.errors import FormatError, InvalidInputError, NotFoundError
from .losses import LossBreakdown, loss_sig, triplet_from_hidden
from .model import TranslatorModel, encode, generate_tokens, split_mask

logger = logging.getLogger(__name__)


def candidate_features(worlds: Mapping[str, EnvironmentGraph], record: SyfisRecord) -> np.ndarray:
    """Re-observe the record's step and return the candidate feature matrix"""
    graph = worlds.get(record.world_id)
    if graph is None:
        raise NotFoundError(f"world '{record.world_id}' needed by record {record.record_id} is not loaded")
    _, candidates = simulator_for(graph).observe(record.source, record.heading)
    observed = tuple(STOP_TARGET if e.is_stop else e.viewpoint_id for e in candidates)
    if observed != record.candidates:
        raise FormatError(f"record {record.record_id} candidates do not match world {record.world_id}")
    return candidates.feature_matrix()


def record_loss(
    model: TranslatorModel,
    record: SyfisRecord,
    features: np.ndarray,
    alpha1: float,
    alpha2: float,
    margin: float,
    literal: bool = False,
) -> Tuple[Tensor, Tensor, Tensor]:
    """(alpha1·SIG + alpha2·DSL, SIG, DSL) for one record; DSL averages its three triplets"""
    vision = model.encode_vision(features)
    h_positive, _ = encode(model, record.positive.tokens, None, vision)
    h_anchor, _ = encode(model, record.anchor.tokens, None, vision)
    sig = loss_sig(generate_tokens(model, h_positive), record.positive.tokens)
    triplets = []
    for negative in record.negatives:
        h_negative, _ = encode(model, negative.instruction.tokens, None, vision)
        triplets.append(triplet_from_hidden(model, h_anchor, h_positive, h_negative, margin, literal))
    dsl = ops.mean(ops.concat([ops.reshape(t, (1,)) for t in triplets]))
    return alpha1 * sig + alpha2 * dsl, sig, dsl


def pretrain_step(
    model: TranslatorModel,
    records: Sequence[SyfisRecord],
    worlds: Mapping[str, EnvironmentGraph],
    alpha1: float,
    alpha2: float,
    optimizer: AdamW,
    margin: float = 0.5,
    literal: bool = False,
) -> LossBreakdown:
    """One optimizer step on the batch mean of ``record_loss``"""
    if not records:
        raise InvalidInputError("pretraining batch is empty")
    model.store.zero_grad()
    totals, sigs, dsls = [], [], []
    for record in records:
        total, sig, dsl = record_loss(model, record, candidate_features(worlds, record), alpha1, alpha2, margin, literal)
        totals.append(total)
        sigs.append(sig.item())
        dsls.append(dsl.item())
    loss = ops.mean(ops.concat([ops.reshape(t, (1,)) for t in totals]))
    loss.backward()
    optimizer.step(model.store)
    return LossBreakdown(loss.item(), float(np.mean(sigs)), float(np.mean(dsls)))


def holdout_split(records: Sequence[SyfisRecord], fraction: float, seed: int) -> Tuple[List[SyfisRecord], List[SyfisRecord]]:
    """Split by trajectory so no trajectory lands on both sides"""
    _, held_ids = split_trajectory_ids((r.trajectory_id for r in records), fraction, seed)
    held = set(held_ids)
    train = [r for r in records if r.trajectory_id not in held]
    holdout = [r for r in records if r.trajectory_id in held]
    return train, holdout


@dataclass
class PretrainResult:
    history: List[Dict] = field(default_factory=list)
    holdout: Dict = field(default_factory=dict)
    train_records: int = 0
    holdout_records: int = 0

    def to_dict(self) -> Dict:
        return {
            "history": self.history,
            "holdout": self.holdout,
            "train_records": self.train_records,
            "holdout_records": self.holdout_records,
        }


def pretrain_translator(
    model: TranslatorModel,
    records: Sequence[SyfisRecord],
    worlds: Mapping[str, EnvironmentGraph],
    config,
    progress: bool = False,
) -> PretrainResult:
    t = config.train
    alpha1, alpha2 = config.effective_alphas
    train, holdout = holdout_split(records, t.holdout_fraction, config.seeds.seed)
    if not train:
        raise InvalidInputError("no SyFiS records left for pretraining after the holdout split")
    optimizer = AdamW.from_config(config.optimizer)
    rng = np.random.default_rng([config.seeds.seed, 303])
    result = PretrainResult(train_records=len(train), holdout_records=len(holdout))
    batch_size = min(t.pretrain_batch, len(train))

    for step in tqdm(range(t.pretrain_steps), desc="pretrain", disable=not progress, leave=False):
        batch = [train[i] for i in rng.choice(len(train), size=batch_size, replace=False)]
        losses = pretrain_step(
            model, batch, worlds, alpha1, alpha2, optimizer, config.losses.margin, config.losses.literal_dsl
        )
        result.history.append({"step": step, **losses.to_dict()})
        if (step + 1) % t.log_every == 0:
            logger.info("pretrain step %d: loss %.4f sig %.4f dsl %.4f", step + 1, losses.total, losses.sig, losses.dsl)

    if holdout:
        result.holdout = evaluate_translator(model, holdout, worlds)
        logger.info(
            "holdout token accuracy %.3f, D(a,p) %.4f, D(a,hard) %.4f",
            result.holdout["token_accuracy"], result.holdout["mean_d_ap"], result.holdout["mean_d_an_hard"],
        )
    return result


def evaluate_translator(model: TranslatorModel, records: Sequence[SyfisRecord], worlds: Mapping[str, EnvironmentGraph]) -> Dict:
    """Token accuracy of argmax decoding and mean pooled triplet distances"""
    correct = total = 0
    d_ap, d_hard, d_easy = [], [], []
    with no_grad():
        for record in records:
            vision = model.encode_vision(candidate_features(worlds, record))
            h_positive, _ = encode(model, record.positive.tokens, None, vision)
            h_anchor, _ = encode(model, record.anchor.tokens, None, vision)
            predicted = generate_tokens(model, h_positive).data.argmax(axis=1)
            target = np.asarray(record.positive.tokens)
            correct += int((predicted == target).sum())
            total += len(target)
            d_ap.append(pairwise_distance(h_anchor, h_positive).item())
            for negative in record.negatives:
                h_negative, _ = encode(model, negative.instruction.tokens, None, vision)
                distance = pairwise_distance(h_anchor, h_negative).item()
                (d_hard if negative.kind == "hard" else d_easy).append(distance)
    return {
        "records": len(records),
        "token_accuracy": correct / total if total else 0.0,
        "mean_d_ap": float(np.mean(d_ap)) if d_ap else 0.0,
        "mean_d_an_hard": float(np.mean(d_hard)) if d_hard else 0.0,
        "mean_d_an_easy": float(np.mean(d_easy)) if d_easy else 0.0,
    }


def translate_record(
    model: TranslatorModel,
    tokenizer: Tokenizer,
    record: SyfisRecord,
    features: np.ndarray,
    instruction_tokens: Optional[Sequence[int]] = None,
) -> Dict:
    """Argmax-decoded sub-instruction and split mask for one step, as plain JSON data"""
    tokens = list(instruction_tokens) if instruction_tokens else list(record.positive.tokens)
    with no_grad():
        hidden, attention = encode(model, tokens, features)
        decoded = generate_tokens(model, hidden).data.argmax(axis=1)
        mask = split_mask(model, hidden).data[:, 0]
    decoded_ids = [int(i) for i in decoded]
    return {
        "record_id": record.record_id,
        "input": tokenizer.decode(tokens),
        "decoded": tokenizer.decode(decoded_ids),
        "decoded_tokens": decoded_ids,
        "positive": record.positive.text,
        "split_mask": [float(v) for v in mask],
        "attention": [[float(v) for v in row] for row in attention.data],
    }

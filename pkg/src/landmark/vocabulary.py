from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

from ..utils.errors import InvalidParameterError, VocabularyError

# Ordered from most to least frequent in indoor scenes; world generation draws
# labels with Zipf weights over this order.
DEFAULT_LABELS: Tuple[str, ...] = (
    "wall", "floor", "door", "room", "ceiling", "window", "hallway", "stairs",
    "table", "chair", "lamp", "picture", "cabinet", "rug", "plant", "shelf",
    "sofa", "bed", "mirror", "counter", "sink", "curtain", "desk", "railing",
    "kitchen", "fireplace", "oven", "toilet", "bathtub", "pillow", "vase", "clock",
    "piano", "fridge", "television", "bench", "column", "statue", "fountain", "wardrobe",
    "skylight", "vanity", "cupboard", "patio", "balcony", "closet", "dresser", "archway",
)


@dataclass(frozen=True)
class LabelVocabulary:
    labels: Tuple[str, ...]
    _index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.labels) < 2:
            raise InvalidParameterError(f"label vocabulary needs at least 2 labels, got {len(self.labels)}")
        if len(set(self.labels)) != len(self.labels):
            raise InvalidParameterError("label vocabulary contains duplicates")
        object.__setattr__(self, "_index", {label: i for i, label in enumerate(self.labels)})

    @classmethod
    def default(cls, size: int = len(DEFAULT_LABELS)) -> "LabelVocabulary":
        if size > len(DEFAULT_LABELS):
            raise InvalidParameterError(f"at most {len(DEFAULT_LABELS)} built-in labels, requested {size}")
        return cls(tuple(DEFAULT_LABELS[:size]))

    @classmethod
    def from_labels(cls, labels: Sequence[str]) -> "LabelVocabulary":
        return cls(tuple(labels))

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise VocabularyError(f"unknown landmark label '{label}'") from None

    def label(self, index: int) -> str:
        if not 0 <= index < len(self.labels):
            raise VocabularyError(f"label id {index} outside vocabulary of size {len(self.labels)}")
        return self.labels[index]

    def __contains__(self, label: str) -> bool:
        return label in self._index
